use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::direct::{direct_energy_matrix, direct_reduced_system, pulled_back_stiffness};
use super::*;
use crate::error::Error;
use crate::fem::norms;
use crate::geometry::{generate_convex_polygon, normalize, reference_polygon, AffineMap, Polygon};
use crate::linalg::{DenseMatrix, Mat2};
use crate::vem::{K1, K2};

fn small_config(n: usize, policy: SnapshotMesh) -> OfflineConfig {
    OfflineConfig {
        n,
        train: 12,
        m_max: 6,
        delta: 0.1,
        delta_k: 0.1,
        seed: 11,
        snapshot_mesh: policy,
    }
}

fn pentagon_db() -> &'static RbDatabase {
    static DB: OnceLock<RbDatabase> = OnceLock::new();
    DB.get_or_init(|| run_offline(&small_config(5, SnapshotMesh::Independent)).unwrap())
}

fn polygons(n: usize, count: usize, seed: u64) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_convex_polygon(n, &mut rng).unwrap()).collect()
}

fn max_rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1e-300);
    a.add(&b.scaled(-1.0)).max_abs() / scale
}

#[test]
fn tags_round_trip() {
    for p in [SnapshotMesh::Independent, SnapshotMesh::PulledBack] {
        assert_eq!(SnapshotMesh::from_tag(p.tag()), Some(p));
    }
    assert_eq!(ScalarProduct::from_tag(ScalarProduct::H1Semi.tag()), Some(ScalarProduct::H1Semi));
    assert_eq!(SnapshotMesh::from_tag("nope"), None);
}

#[test]
fn reduced_systems_from_bricks_match_fine_space_assembly() {
    let db = pentagon_db();
    for p in polygons(5, 6, 21) {
        let map = AffineMap::build(&p).unwrap();
        for j in 0..5 {
            let (a, f) = reduced_system(db, &map, j, db.m_max);
            let (ad, fd) = direct_reduced_system(db, &map, j, db.m_max).unwrap();
            assert!(max_rel_diff(&a, &ad) < 1e-11);
            let fs = f.iter().chain(&fd).fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in f.iter().zip(&fd) {
                assert!((x - y).abs() <= 1e-11 * fs);
            }
        }
    }
}

#[test]
fn energy_matrix_from_bricks_matches_fine_space_evaluation() {
    let db = pentagon_db();
    for p in polygons(5, 4, 22) {
        let eval = reduced_solve(&p, db, 3).unwrap();
        let e = eval.reconstruct_all();
        for k in [Mat2::IDENTITY, K1, K2] {
            let from_bricks = eval.energy_matrix(k);
            let direct = direct_energy_matrix(db, eval.map(), &e, k).unwrap();
            assert!(max_rel_diff(&from_bricks, &direct) < 1e-10, "k = {k:?}");
        }
    }
}

#[test]
fn laplace_energy_matrix_is_symmetric_positive_semidefinite() {
    let db = pentagon_db();
    let p = &polygons(5, 1, 23)[0];
    let k = reduced_solve(p, db, 4).unwrap().energy_matrix(Mat2::IDENTITY);
    assert!(k.max_asymmetry() < 1e-12 * k.max_abs());
    let eig = crate::linalg::symmetric_eigen(&k).unwrap();
    assert!(eig.values.iter().all(|&l| l > -1e-12 * eig.values[0]));
}

#[test]
fn brick_symmetries() {
    let db = pentagon_db();
    let b = &db.bricks;
    let (n, m) = (b.n(), b.m());
    for i in 0..n {
        for nu in 0..4 {
            let s = if nu == 3 { -1.0 } else { 1.0 };
            for j in 0..n {
                for jp in 0..n {
                    let g = b.g(i, nu, j, jp);
                    assert!((g - s * b.g(i, nu, jp, j)).abs() < 1e-13);
                    for l in 0..m {
                        for lp in 0..m {
                            let a = b.a(i, nu, j, jp, l, lp);
                            assert!((a - s * b.a(i, nu, jp, j, lp, l)).abs() < 1e-12 * (1.0 + a.abs()));
                        }
                    }
                }
            }
        }
    }
    // ∫𝒜⁴∇u·∇u = 0 pointwise, and the 𝒜¹ + 𝒜² diagonal is positive
    for j in 0..n {
        for l in 0..m {
            let rot: f64 = (0..n).map(|i| b.a(i, 3, j, j, l, l)).sum();
            assert!(rot.abs() < 1e-13);
            let lap: f64 = (0..n).map(|i| b.a(i, 0, j, j, l, l) + b.a(i, 1, j, j, l, l)).sum();
            assert!(lap > 0.0);
        }
    }
}

#[test]
fn laplace_bricks_sum_to_the_reference_stiffness() {
    let db = pentagon_db();
    let khat = reference_polygon(5).unwrap();
    let map = AffineMap::build(&khat).unwrap();
    let s = pulled_back_stiffness(db, &map, Mat2::IDENTITY).unwrap();
    let form = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(s.matvec(v)).map(|(a, b)| a * b).sum() };
    let b = &db.bricks;
    for j in 0..5 {
        for jp in 0..5 {
            let g: f64 = (0..5).map(|i| b.g(i, 0, j, jp) + b.g(i, 1, j, jp)).sum();
            assert!((g - form(&db.liftings[j], &db.liftings[jp])).abs() < 1e-12);
            for l in 0..db.m_max {
                let f: f64 = (0..5).map(|i| b.f(i, 0, j, jp, l) + b.f(i, 1, j, jp, l)).sum();
                assert!((f - form(&db.basis[l][j], &db.liftings[jp])).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn eigenvalues_are_nonincreasing_and_nonnegative() {
    let db = pentagon_db();
    for w in db.eigenvalues.windows(2) {
        assert!(w[0] >= w[1]);
    }
    assert!(db.eigenvalues.iter().all(|&l| l >= -1e-12));
}

#[test]
fn zero_basis_members_give_the_liftings() {
    let db = pentagon_db();
    let p = &polygons(5, 1, 24)[0];
    let eval = reduced_solve(p, db, 0).unwrap();
    for j in 0..5 {
        assert_eq!(eval.reconstruct_on_reference(j), db.liftings[j]);
    }
}

#[test]
fn reconstructions_interpolate_the_vertex_dofs() {
    let db = pentagon_db();
    for p in polygons(5, 3, 25) {
        let eval = reduced_solve(&p, db, db.m_max).unwrap();
        let e = eval.reconstruct_all();
        for j in 0..5 {
            for i in 0..5 {
                let v = e[j][db.ref_mesh.vertex_node(i)];
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
            let at_vertices = eval.evaluate_physical(j, p.vertices()).unwrap();
            for (i, v) in at_vertices.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        for k in 0..db.ref_mesh.num_nodes() {
            if db.ref_mesh.is_boundary(k) {
                let s: f64 = e.iter().map(|ej| ej[k]).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
        // the star center lands near [0, 1]
        let c = eval.evaluate_physical(0, &[p.star_center()]).unwrap()[0];
        assert!((-1e-6..=1.0 + 1e-6).contains(&c));
    }
}

#[test]
fn reduced_solve_rejects_mismatches() {
    let db = pentagon_db();
    let hex = &polygons(6, 1, 26)[0];
    assert!(matches!(reduced_solve(hex, db, 1), Err(Error::NoDatabaseForN(6))));
    let pent = &polygons(5, 1, 26)[0];
    assert!(matches!(reduced_solve(pent, db, db.m_max + 1), Err(Error::InvalidArgument(_))));
}

#[test]
fn reduced_solve_is_invariant_under_similarity() {
    let db = pentagon_db();
    let p = &polygons(5, 1, 27)[0];
    let q = p.transformed([3.0, -2.0], 0.01);
    let a = reduced_solve(p, db, 4).unwrap();
    let b = reduced_solve(&q, db, 4).unwrap();
    for j in 0..5 {
        for (x, y) in a.coeffs(j).iter().zip(b.coeffs(j)) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }
    let (_, sim) = normalize(&q).unwrap();
    assert!((sim.scale - b.similarity().scale).abs() < 1e-15);
}

#[test]
fn singular_reduced_system_is_regularized() {
    let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
    let (w, reg) = solve_reduced(&a, &[1.0, 1.0], 0).unwrap();
    assert!(reg);
    assert!(w.iter().all(|v| v.is_finite()));
    let (w, reg) = solve_reduced(&DenseMatrix::from_row_major(1, 1, vec![4.0]), &[2.0], 0).unwrap();
    assert!(!reg);
    assert_eq!(w, vec![0.5]);
}

#[test]
fn training_polygons_are_reproduced_with_a_full_basis() {
    let cfg = OfflineConfig {
        m_max: 12,
        ..small_config(4, SnapshotMesh::PulledBack)
    };
    let db = run_offline(&cfg).unwrap();
    let reference = ReferenceData::new(4, cfg.delta).unwrap();
    let set = collect_snapshots(4, cfg.train, cfg.seed, &reference, cfg.delta_k, cfg.snapshot_mesh).unwrap();
    let rank = db.eigenvalues.iter().filter(|&&l| l > 1e-12 * db.eigenvalues[0]).count();
    let db = db.truncated(rank).unwrap();
    let nodes = reference.mesh.interior_nodes();
    let ni = nodes.len();
    let mut last = f64::INFINITY;
    for (p, col) in set.polygons.iter().zip(&set.columns) {
        let eval = reduced_solve(p, &db, rank).unwrap();
        for j in 0..4 {
            let mut target = db.liftings[j].clone();
            for (r, &k) in nodes.iter().enumerate() {
                target[k] += col[j * ni + r];
            }
            let e = eval.reconstruct_on_reference(j);
            let diff: Vec<f64> = e.iter().zip(&target).map(|(a, b)| a - b).collect();
            let err = norms(&db.ref_mesh, &diff, Mat2::IDENTITY).h1()
                / norms(&db.ref_mesh, &target, Mat2::IDENTITY).h1();
            assert!(err < 1e-8, "H¹ error {err:.3e}");
            last = last.min(err);
        }
    }
    assert!(last.is_finite());
}

#[test]
fn training_fidelity_is_monotone_in_the_basis_size() {
    let cfg = small_config(4, SnapshotMesh::PulledBack);
    let db = run_offline(&cfg).unwrap();
    let reference = ReferenceData::new(4, cfg.delta).unwrap();
    let set = collect_snapshots(4, cfg.train, cfg.seed, &reference, cfg.delta_k, cfg.snapshot_mesh).unwrap();
    let nodes = reference.mesh.interior_nodes();
    let ni = nodes.len();
    let p = &set.polygons[0];
    let col = &set.columns[0];
    for j in 0..4 {
        let mut target = db.liftings[j].clone();
        for (r, &k) in nodes.iter().enumerate() {
            target[k] += col[j * ni + r];
        }
        let mut prev = f64::INFINITY;
        for m in 0..=db.m_max {
            let e = reduced_solve(p, &db, m).unwrap().reconstruct_on_reference(j);
            let diff: Vec<f64> = e.iter().zip(&target).map(|(a, b)| a - b).collect();
            // Galerkin projection in the pulled-back energy: that error is monotone
            let s = pulled_back_stiffness(&db, &AffineMap::build(p).unwrap(), Mat2::IDENTITY).unwrap();
            let err: f64 = diff.iter().zip(s.matvec(&diff)).map(|(a, b)| a * b).sum::<f64>().sqrt();
            assert!(err <= prev + 1e-12, "M = {m}: {err} > {prev}");
            prev = err;
        }
    }
}

#[test]
fn database_round_trip_and_truncated_load() {
    let db = pentagon_db();
    let dir = tempfile::tempdir().unwrap();
    db.save(dir.path()).unwrap();
    let back = RbDatabase::load(dir.path(), None).unwrap();
    assert_eq!(back.n, db.n);
    assert_eq!(back.basis, db.basis);
    assert_eq!(back.liftings, db.liftings);
    assert_eq!(back.bricks, db.bricks);
    assert_eq!(back.eigenvalues, db.eigenvalues);
    assert_eq!(back.ref_mesh.nodes(), db.ref_mesh.nodes());
    assert_eq!(back.snapshot_mesh, db.snapshot_mesh);

    let cut = RbDatabase::load(dir.path(), Some(2)).unwrap();
    assert_eq!(cut.m_max, 2);
    assert_eq!(cut.basis[..], db.basis[..2]);
    assert_eq!(cut.bricks, db.bricks.truncated(2));
    // online results with the truncated database match the full one at M = 2
    let p = &polygons(5, 1, 28)[0];
    let a = reduced_solve(p, db, 2).unwrap();
    let b = reduced_solve(p, &cut, 2).unwrap();
    for j in 0..5 {
        assert_eq!(a.coeffs(j), b.coeffs(j));
    }
}

#[test]
fn database_load_errors() {
    let db = pentagon_db();
    let missing = tempfile::tempdir().unwrap();
    assert!(matches!(RbDatabase::load(missing.path(), None), Err(Error::DatabaseNotFound(_))));

    let dir = tempfile::tempdir().unwrap();
    db.save(dir.path()).unwrap();
    // flipped byte: checksum failure
    let basis = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("basis"))
        .unwrap();
    let mut bytes = std::fs::read(&basis).unwrap();
    bytes[17] ^= 0x40;
    std::fs::write(&basis, &bytes).unwrap();
    assert!(matches!(RbDatabase::load(dir.path(), None), Err(Error::Load { .. })));
    // truncated file
    std::fs::write(&basis, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(RbDatabase::load(dir.path(), None), Err(Error::Load { .. })));

    // corrupted shape in the manifest
    let dir = tempfile::tempdir().unwrap();
    db.save(dir.path()).unwrap();
    let manifest = dir.path().join("manifest.txt");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let text = text.replacen("array liftings 5x", "array liftings 4x", 1);
    std::fs::write(&manifest, text).unwrap();
    assert!(matches!(RbDatabase::load(dir.path(), None), Err(Error::Load { .. })));

    // wrong version line
    let text = std::fs::read_to_string(&manifest).unwrap().replacen("RBDB v1", "RBDB v9", 1);
    std::fs::write(&manifest, text).unwrap();
    assert!(matches!(RbDatabase::load(dir.path(), None), Err(Error::Load { .. })));
}

#[test]
fn library_round_trip_and_lookup() {
    let mut lib = RbLibrary::new();
    lib.insert(pentagon_db().clone());
    let dir = tempfile::tempdir().unwrap();
    lib.save(dir.path()).unwrap();
    let back = RbLibrary::load(dir.path(), Some(1)).unwrap();
    assert_eq!(back.vertex_counts(), vec![5]);
    assert_eq!(back.get(5).unwrap().m_max, 1);
    assert!(matches!(back.get(7), Err(Error::NoDatabaseForN(7))));
}

#[test]
fn offline_phase_is_deterministic() {
    let cfg = OfflineConfig {
        train: 6,
        m_max: 3,
        ..small_config(4, SnapshotMesh::Independent)
    };
    let a = run_offline(&cfg).unwrap();
    let b = crate::par::sequential(|| run_offline(&cfg).unwrap());
    assert_eq!(a.basis, b.basis);
    assert_eq!(a.bricks, b.bricks);
}

#[test]
fn percentiles_interpolate_linearly() {
    let v = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(percentile(&v, 0.0), 1.0);
    assert_eq!(percentile(&v, 0.5), 3.0);
    assert_eq!(percentile(&v, 1.0), 5.0);
    assert!((percentile(&v, 0.05) - 1.2).abs() < 1e-15);
}

#[test]
fn validation_reports_every_group() {
    let db = pentagon_db();
    let cfg = ValidationConfig {
        tests: 4,
        ms: vec![0, 1, 3],
        seed: 5,
        delta_fe: None,
        cases: vec![DofCase::Smooth, DofCase::Random],
    };
    let report = validate(db, &cfg).unwrap();
    assert_eq!(report.rows.len(), 4 * 3 * 2);
    assert!(report.rows.iter().all(|r| r.error.is_finite() && r.error >= 0.0));
    assert_eq!(report.summaries().len(), 6);
    let csv = report.to_csv();
    assert!(csv.starts_with("kind,n,case,m,polygon,error"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("summary")).count(), 6);
    // with the reduced basis, a richer basis helps on average for random dofs
    let mean = |m| report.summary(DofCase::Random, m).mean;
    assert!(mean(3) <= mean(0) * 1.5);
}
