//! One function per subcommand.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vemrb::geometry::PolygonSet;
use vemrb::polymesh::PolyMesh;
use vemrb::post::{
    conformity, convergence_study, field_to_text, line_sample, line_sample_to_csv, records_to_csv, ReconMode,
};
use vemrb::rb::{run_offline, validate, DofCase, OfflineConfig, RbLibrary, SnapshotMesh, ValidationConfig};
use vemrb::timing::{time_reconstructions, timings_to_csv, TimingConfig};
use vemrb::vem::{
    assemble_and_solve, condition_estimate, interior_operator, load_solution, save_solution, DiffusionProblem,
    Fallback, SolveOptions, Stabilization,
};

use crate::config::{load_library, make_mesh, parent_dir, parse_counts, problem, write, write_echo};
use crate::{
    BenchArgs, Cli, Command, ConvergenceArgs, DemoJumpArgs, GenDatasetArgs, MeshArgs, OfflineArgs, ReconstructArgs,
    SolveArgs, ValidateArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Mesh(a) => mesh(cli, a),
        Command::GenDataset(a) => gen_dataset(cli, a),
        Command::Offline(a) => offline(cli, a),
        Command::Validate(a) => validate_cmd(cli, a),
        Command::Solve(a) => solve(cli, a),
        Command::Convergence(a) => convergence(cli, a),
        Command::Reconstruct(a) => reconstruct(cli, a),
        Command::Bench(a) => bench(cli, a),
        Command::DemoJump(a) => demo_jump(cli, a),
    }
}

fn parse<T: std::str::FromStr<Err = vemrb::Error>>(s: &str) -> Result<T> {
    Ok(s.parse::<T>()?)
}

fn mesh(cli: &Cli, a: &MeshArgs) -> Result<()> {
    let m = make_mesh(&a.kind, a.cells, a.lloyd, a.collapse, cli.seed)?;
    write(&a.out, &m.to_text())?;
    write_echo(&parent_dir(&a.out), cli, &[])?;
    println!("{}: {} cells, {} vertices, h = {:.4e}", a.out.display(), m.num_cells(), m.num_vertices(), m.h());
    Ok(())
}

fn gen_dataset(cli: &Cli, a: &GenDatasetArgs) -> Result<()> {
    let set = PolygonSet::generate(a.n, a.count, cli.seed)?;
    write(&a.out, &set.to_text())?;
    write_echo(&parent_dir(&a.out), cli, &[])?;
    println!("{}: {} polygons with {} vertices", a.out.display(), a.count, a.n);
    Ok(())
}

fn offline(cli: &Cli, a: &OfflineArgs) -> Result<()> {
    let snapshot_mesh = match a.snapshots.as_str() {
        "independent" => SnapshotMesh::Independent,
        "pulled-back" => SnapshotMesh::PulledBack,
        other => bail!(vemrb::Error::InvalidArgument(format!("unknown snapshot mesh policy '{other}'"))),
    };
    let counts = parse_counts(&a.n)?;
    let mut lib = RbLibrary::new();
    let mut summary = String::from("n,train,m_max,level,lambda_1,lambda_m\n");
    for &n in &counts {
        let cfg = OfflineConfig {
            n,
            train: a.train,
            m_max: a.mmax,
            delta: a.delta,
            delta_k: a.delta_k.unwrap_or(a.delta),
            seed: cli.seed,
            snapshot_mesh,
        };
        let db = run_offline(&cfg).with_context(|| format!("offline phase for N = {n}"))?;
        let ev = &db.eigenvalues;
        let _ = writeln!(
            summary,
            "{n},{},{},{},{:.6e},{:.6e}",
            db.train,
            db.m_max,
            db.ref_mesh.level(),
            ev.first().copied().unwrap_or(0.0),
            ev.get(db.m_max.saturating_sub(1)).copied().unwrap_or(0.0)
        );
        println!("N = {n}: M_max = {}, reference level {}", db.m_max, db.ref_mesh.level());
        lib.insert(db);
    }
    lib.save(&a.out)?;
    write(&a.out.join("offline.csv"), &summary)?;
    write_echo(&a.out, cli, &[])?;
    Ok(())
}

fn validate_cmd(cli: &Cli, a: &ValidateArgs) -> Result<()> {
    let lib = RbLibrary::load(&a.db, None)?;
    let db = lib.get(a.n)?;
    let cases = a.cases.iter().map(|c| parse::<DofCase>(c)).collect::<Result<Vec<_>>>()?;
    let cfg = ValidationConfig {
        tests: a.tests,
        ms: a.m.clone(),
        seed: cli.seed,
        delta_fe: a.delta_fe,
        cases,
    };
    let report = validate(db, &cfg)?;
    write(&a.out, &report.to_csv())?;
    write_echo(&parent_dir(&a.out), cli, &[])?;
    for s in report.summaries() {
        println!(
            "{:>6} M = {:>2}: min {:.3e}  5% {:.3e}  median {:.3e}  mean {:.3e}  95% {:.3e}  max {:.3e}",
            s.case.tag(),
            s.m,
            s.min,
            s.p5,
            s.median,
            s.mean,
            s.p95,
            s.max
        );
    }
    if report.regularized > 0 {
        println!("{} test polygons needed a regularized reduced solve", report.regularized);
    }
    Ok(())
}

fn stabilization(stab: &str, m: usize) -> Result<Stabilization> {
    Ok(match stab {
        "rb" => Stabilization::Rb { m },
        s => parse(s)?,
    })
}

fn solve(cli: &Cli, a: &SolveArgs) -> Result<()> {
    let mesh = PolyMesh::load(&a.mesh)?;
    let prob = problem(&a.problem)?;
    let stab = stabilization(&a.stab, a.m)?;
    let lib = load_library(a.db.as_deref())?;
    let mut opts = SolveOptions::new(stab);
    if let Some(lib) = &lib {
        opts = opts.with_library(lib);
    }
    if a.downgrade {
        opts = opts.with_fallback(Fallback::DofiDofi);
    }
    let sol = assemble_and_solve(&mesh, &prob, &opts)?;
    save_solution(&a.out, &sol.dofs)?;
    let mut extra = vec![("relative_residual", format!("{:.3e}", sol.residual))];
    if sol.downgraded_cells > 0 {
        extra.push(("downgraded_cells", sol.downgraded_cells.to_string()));
    }
    println!(
        "{}: {} dofs ({} interior), residual {:.3e}, {} downgraded cells",
        a.out.display(),
        sol.dofs.len(),
        sol.interior.len(),
        sol.residual,
        sol.downgraded_cells
    );
    if a.condition && !sol.interior.is_empty() {
        let kappa = condition_estimate(&sol.interior_matrix)?;
        println!("condition number estimate {kappa:.4e}");
        extra.push(("condition", format!("{kappa:.6e}")));
    }
    write_echo(&parent_dir(&a.out), cli, &extra)?;
    Ok(())
}

fn convergence(cli: &Cli, a: &ConvergenceArgs) -> Result<()> {
    let prob = problem(&a.problem)?;
    let stabs = a.stabs.iter().map(|s| stabilization(s, 1)).collect::<Result<Vec<_>>>()?;
    let modes = a.modes.iter().map(|s| parse::<ReconMode>(s)).collect::<Result<Vec<_>>>()?;
    let lib = load_library(a.db.as_deref())?;
    let mut cells = a.cells.clone();
    cells.sort_unstable();
    let meshes = cells
        .iter()
        .map(|&c| make_mesh(&a.mesh_kind, c, a.lloyd, a.collapse, cli.seed))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (c, m) in cells.iter().zip(&meshes) {
        m.save(&a.out.join(format!("mesh_{c}.txt")))?;
    }
    let mut records = Vec::new();
    let mut condition = String::from("h,ndof,stab,kappa\n");
    for &stab in &stabs {
        records.extend(convergence_study(&meshes, &prob, stab, &modes, lib.as_ref())?);
        if a.condition {
            let mut opts = SolveOptions::new(stab);
            if let Some(lib) = &lib {
                opts = opts.with_library(lib);
            }
            for m in &meshes {
                let kappa = condition_estimate(&interior_operator(m, &prob, &opts)?)?;
                let _ = writeln!(condition, "{:.6e},{},{stab},{kappa:.6e}", m.h(), m.num_vertices());
            }
        }
    }
    let csv = records_to_csv(&records);
    write(&a.out.join("convergence.csv"), &csv)?;
    if a.condition {
        write(&a.out.join("condition.csv"), &condition)?;
    }
    write_echo(&a.out, cli, &[("errinf_sampling", "evaluation nodes of each cell".into())])?;
    print!("{csv}");
    Ok(())
}

fn reconstruct(cli: &Cli, a: &ReconstructArgs) -> Result<()> {
    let mesh = PolyMesh::load(&a.mesh)?;
    let dofs = load_solution(&a.sol)?;
    let mode = parse::<ReconMode>(&a.mode)?;
    let lib = load_library(a.db.as_deref())?;
    match a.line.as_deref() {
        Some(l) => {
            if l.len() != 4 {
                bail!(vemrb::Error::InvalidArgument("--line takes x0,y0,x1,y1".into()));
            }
            let s = line_sample(&mesh, &dofs, [l[0], l[1]], [l[2], l[3]], a.count, mode, lib.as_ref())?;
            write(&a.out, &line_sample_to_csv(&s))?;
        }
        None => write(&a.out, &field_to_text(&mesh, &dofs, mode, lib.as_ref())?)?,
    }
    let c = conformity(&mesh, &dofs, mode, lib.as_ref())?;
    println!(
        "{}: {mode}, max vertex jump {:.3e}, max dof gap {:.3e}",
        a.out.display(),
        c.max_jump,
        c.max_dof_gap
    );
    write_echo(
        &parent_dir(&a.out),
        cli,
        &[("max_vertex_jump", format!("{:.3e}", c.max_jump)), ("max_dof_gap", format!("{:.3e}", c.max_dof_gap))],
    )?;
    Ok(())
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let lib = RbLibrary::load(&a.db, None)?;
    let mut csv = String::new();
    for (i, &n) in a.n.iter().enumerate() {
        let db = lib.get(n)?;
        let cfg = TimingConfig {
            polygons: a.polygons,
            ms: a.m.clone(),
            fe_delta: a.fe_delta,
            seed: cli.seed,
            repeats: a.repeats,
        };
        let rows = time_reconstructions(db, &cfg)?;
        let part = timings_to_csv(n, &rows);
        csv.push_str(if i == 0 { &part } else { part.split_once('\n').map_or("", |(_, r)| r) });
    }
    write(&a.out, &csv)?;
    write_echo(&parent_dir(&a.out), cli, &[])?;
    print!("{csv}");
    Ok(())
}

fn demo_jump(cli: &Cli, a: &DemoJumpArgs) -> Result<()> {
    let lib = RbLibrary::load(&a.db, None)?;
    let mesh = make_mesh("voronoi", a.cells, a.lloyd, a.collapse, cli.seed)?;
    let prob = DiffusionProblem::jump();
    let opts = SolveOptions::new(Stabilization::Rb { m: a.m })
        .with_library(&lib)
        .with_fallback(Fallback::DofiDofi);
    let sol = assemble_and_solve(&mesh, &prob, &opts)?;
    let out = &a.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    mesh.save(&out.join("mesh.txt"))?;
    save_solution(&out.join("solution.txt"), &sol.dofs)?;
    let rb = ReconMode::Rb { m: a.m };
    for (tag, mode) in [("pi", ReconMode::Projection), ("rb", rb)] {
        let lib = Some(&lib);
        let s = line_sample(&mesh, &sol.dofs, [0.0, 0.0], [1.0, 1.0], a.count, mode, lib)?;
        write(&out.join(format!("line_{tag}.csv")), &line_sample_to_csv(&s))?;
        write(&out.join(format!("field_{tag}.txt")), &field_to_text(&mesh, &sol.dofs, mode, lib)?)?;
        let c = conformity(&mesh, &sol.dofs, mode, lib)?;
        println!("{tag}: max vertex jump {:.3e}", c.max_jump);
    }
    write_echo(out, cli, &[("downgraded_cells", sol.downgraded_cells.to_string())])?;
    report_written(out)
}

fn report_written(dir: &Path) -> Result<()> {
    println!("wrote {}", dir.display());
    Ok(())
}
