//! Rayon data-parallel path versus the sequential fallback on the three hot
//! loops: snapshot collection, global VEM assembly and the error integrals.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vemrb::par;
use vemrb::polymesh::{voronoi_mesh, PolyMesh};
use vemrb::post::{error_norms, ReconMode};
use vemrb::rb::{collect_snapshots, ReferenceData, SnapshotMesh};
use vemrb::vem::{assemble, assemble_and_solve, DiffusionProblem, SolveOptions, Stabilization};

fn voronoi(cells: usize) -> PolyMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    voronoi_mesh(cells, 20, &mut rng).expect("voronoi mesh").mesh
}

/// Runs `f` on the rayon pool and on the calling thread alone.
fn both<F: Fn()>(c: &mut Criterion, group: &str, param: usize, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("parallel", param), &param, |b, _| b.iter(&f));
    g.bench_with_input(BenchmarkId::new("sequential", param), &param, |b, _| {
        b.iter(|| par::sequential(&f))
    });
    g.finish();
}

fn snapshots(c: &mut Criterion) {
    let reference = ReferenceData::new(6, 0.05).expect("reference data");
    both(c, "snapshots", 16, || {
        collect_snapshots(6, 16, 1, &reference, 0.05, SnapshotMesh::Independent).expect("snapshots");
    });
}

fn assembly(c: &mut Criterion) {
    let prob = DiffusionProblem::poisson();
    let opts = SolveOptions::new(Stabilization::DRecipe);
    for cells in [400, 1600] {
        let mesh = voronoi(cells);
        both(c, "assemble", cells, || {
            assemble(&mesh, &prob, &opts).expect("assembly");
        });
    }
}

fn errors(c: &mut Criterion) {
    let prob = DiffusionProblem::poisson();
    let mesh = voronoi(400);
    let sol = assemble_and_solve(&mesh, &prob, &SolveOptions::new(Stabilization::DofiDofi)).expect("solve");
    let mode = ReconMode::Fe { rel_delta: 0.1 };
    both(c, "error_norms_fe", 400, || {
        error_norms(&mesh, &sol.dofs, &prob, mode, None).expect("error norms");
    });
}

criterion_group!(benches, snapshots, assembly, errors);
criterion_main!(benches);
