//! Shared plumbing: resolved-configuration echo, argument parsing helpers,
//! problem presets, mesh generation and database loading.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vemrb::linalg::Mat2;
use vemrb::polymesh::{collapse_short_edges, voronoi_mesh, PolyMesh};
use vemrb::rb::RbLibrary;
use vemrb::vem::DiffusionProblem;

use crate::{Cli, ProblemArgs};

/// Writes `config.echo.txt` into `dir`: tool version and the fully resolved
/// command line, defaults included.
pub fn write_echo(dir: &Path, cli: &Cli, extra: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut s = format!("vemrb {}\n", env!("CARGO_PKG_VERSION"));
    s.push_str(&format!("threads: {}\nseed: {}\n", cli.threads, cli.seed));
    for (k, v) in extra {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s.push_str(&format!("{:#?}\n", cli.command));
    let path = dir.join("config.echo.txt");
    std::fs::write(&path, s).map_err(|e| vemrb::Error::Io { path, source: e })?;
    Ok(())
}

/// Directory holding an output file.
pub fn parent_dir(out: &Path) -> PathBuf {
    match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// `4,6,9` or an inclusive range `4..10`.
pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    let bad = || vemrb::Error::InvalidArgument(format!("bad vertex-count list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad().into());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad().into())).collect()
}

pub fn problem(args: &ProblemArgs) -> Result<DiffusionProblem> {
    let tensor = match args.tensor.as_deref() {
        Some(&[a, b, c, d]) => Mat2::new(a, b, c, d),
        Some(_) => bail!(vemrb::Error::InvalidArgument("--tensor takes four values".into())),
        None => Mat2::IDENTITY,
    };
    Ok(match args.problem.as_str() {
        "poisson" => DiffusionProblem::poisson(),
        "test1" => DiffusionProblem::test1(args.nu.unwrap_or(80.0)),
        "test2" => DiffusionProblem::test2(args.nu.unwrap_or(80.0), args.nu2.unwrap_or(30.0)),
        "smooth" => DiffusionProblem::smooth(),
        "patch" => DiffusionProblem::patch(tensor),
        "jump" => DiffusionProblem::jump(),
        "custom" => DiffusionProblem::custom(tensor, args.source),
        other => bail!(vemrb::Error::InvalidArgument(format!("unknown problem '{other}'"))),
    })
}

/// Mesh of the unit square with about `cells` cells.
pub fn make_mesh(kind: &str, cells: usize, lloyd: usize, collapse: f64, seed: u64) -> Result<PolyMesh> {
    match kind {
        "voronoi" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = voronoi_mesh(cells, lloyd, &mut rng)?;
            log::info!(
                "voronoi mesh: {cells} cells, {} Lloyd steps, residual {:.3e}",
                v.lloyd_iterations,
                v.lloyd_residual
            );
            let mesh = collapse_short_edges(&v.mesh, collapse)?;
            log::info!(
                "edge collapse (tol {collapse}): {} -> {} vertices",
                v.mesh.num_vertices(),
                mesh.num_vertices()
            );
            Ok(mesh)
        }
        "squares" => {
            let k = (cells as f64).sqrt().round() as usize;
            if k * k != cells {
                bail!(vemrb::Error::InvalidArgument(format!("{cells} is not a perfect square")));
            }
            Ok(PolyMesh::structured_squares(k)?)
        }
        other => bail!(vemrb::Error::InvalidArgument(format!("unknown mesh kind '{other}'"))),
    }
}

pub fn load_library(db: Option<&Path>) -> Result<Option<RbLibrary>> {
    db.map(|p| RbLibrary::load(p, None).with_context(|| format!("loading databases from {}", p.display())))
        .transpose()
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| vemrb::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| vemrb::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}
