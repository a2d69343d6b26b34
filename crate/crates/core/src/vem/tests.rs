use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::linalg::{symmetric_eigen, CsrMatrix, DenseMatrix, Mat2};
use crate::polymesh::{voronoi_mesh, PolyMesh};
use crate::rb::{run_offline, OfflineConfig, RbLibrary, SnapshotMesh};

fn square_library() -> &'static RbLibrary {
    static LIB: OnceLock<RbLibrary> = OnceLock::new();
    LIB.get_or_init(|| {
        let mut lib = RbLibrary::new();
        lib.insert(
            run_offline(&OfflineConfig {
                n: 4,
                train: 10,
                m_max: 3,
                delta: 0.1,
                delta_k: 0.1,
                seed: 3,
                snapshot_mesh: SnapshotMesh::Independent,
            })
            .unwrap(),
        );
        lib
    })
}

fn voronoi(cells: usize, seed: u64) -> PolyMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    voronoi_mesh(cells, 20, &mut rng).unwrap().mesh
}

fn max_dof_error(mesh: &PolyMesh, sol: &VemSolution, u: impl Fn([f64; 2]) -> f64) -> f64 {
    mesh.vertices()
        .iter()
        .zip(&sol.dofs)
        .map(|(&x, v)| (u(x) - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn stabilization_names_parse() {
    assert_eq!("dofi".parse::<Stabilization>().unwrap(), Stabilization::DofiDofi);
    assert_eq!("drecipe".parse::<Stabilization>().unwrap(), Stabilization::DRecipe);
    assert_eq!("rb".parse::<Stabilization>().unwrap(), Stabilization::Rb { m: 1 });
    assert_eq!("rb:10".parse::<Stabilization>().unwrap(), Stabilization::Rb { m: 10 });
    assert!("rb:x".parse::<Stabilization>().is_err());
    for s in [Stabilization::DofiDofi, Stabilization::DRecipe, Stabilization::Rb { m: 4 }] {
        assert_eq!(s.to_string().parse::<Stabilization>().unwrap(), s);
    }
}

#[test]
fn patch_test_on_squares_with_every_stabilization() {
    let mesh = PolyMesh::structured_squares(5).unwrap();
    let lib = square_library();
    for k in [Mat2::IDENTITY, K1, K2] {
        let prob = DiffusionProblem::patch(k);
        for stab in [Stabilization::DofiDofi, Stabilization::DRecipe, Stabilization::Rb { m: 1 }, Stabilization::Rb { m: 3 }] {
            let sol = assemble_and_solve(&mesh, &prob, &SolveOptions::new(stab).with_library(lib)).unwrap();
            let err = max_dof_error(&mesh, &sol, |[x, y]| 1.0 + 2.0 * x - y);
            assert!(err < 1e-10, "{stab} with {k:?}: {err:.3e}");
        }
    }
}

#[test]
fn patch_test_on_a_voronoi_mesh() {
    let mesh = voronoi(40, 1);
    for stab in [Stabilization::DofiDofi, Stabilization::DRecipe] {
        for k in [Mat2::IDENTITY, K2] {
            let sol = assemble_and_solve(&mesh, &DiffusionProblem::patch(k), &SolveOptions::new(stab)).unwrap();
            assert!(max_dof_error(&mesh, &sol, |[x, y]| 1.0 + 2.0 * x - y) < 1e-10);
        }
    }
}

#[test]
fn missing_database_errors_or_downgrades() {
    let mesh = voronoi(20, 2);
    let prob = DiffusionProblem::patch(Mat2::IDENTITY);
    let lib = square_library();
    let opts = SolveOptions::new(Stabilization::Rb { m: 1 }).with_library(lib);
    let err = assemble_and_solve(&mesh, &prob, &opts).unwrap_err();
    assert_eq!(err.category(), "no-database-for-n");
    assert!(matches!(err, Error::Cell { .. }));
    let sol = assemble_and_solve(&mesh, &prob, &opts.with_fallback(Fallback::DofiDofi)).unwrap();
    assert!(sol.downgraded_cells > 0);
    assert!(max_dof_error(&mesh, &sol, |[x, y]| 1.0 + 2.0 * x - y) < 1e-10);
}

#[test]
fn global_matrix_symmetry_follows_the_tensor() {
    let mesh = voronoi(30, 3);
    let opts = SolveOptions::new(Stabilization::DRecipe);
    let sym = assemble(&mesh, &DiffusionProblem::test1(4.0), &opts).unwrap();
    assert!(sym.matrix.max_asymmetry() < 1e-14 * sym.matrix.norm_inf());
    let non = assemble(&mesh, &DiffusionProblem::test2(4.0, 2.0), &opts).unwrap();
    assert!(non.matrix.max_asymmetry() > 1e-8 * non.matrix.norm_inf());
}

#[test]
fn single_cell_mesh_has_no_interior_unknowns() {
    let mesh = PolyMesh::structured_squares(1).unwrap();
    let sol = assemble_and_solve(&mesh, &DiffusionProblem::patch(Mat2::IDENTITY), &SolveOptions::new(Stabilization::DofiDofi)).unwrap();
    assert!(sol.interior.is_empty());
    assert!(max_dof_error(&mesh, &sol, |[x, y]| 1.0 + 2.0 * x - y) < 1e-15);
}

#[test]
fn local_matrix_has_constants_in_its_kernel() {
    let mesh = voronoi(25, 4);
    let lib = square_library();
    let prob = DiffusionProblem::poisson();
    let opts = SolveOptions::new(Stabilization::DofiDofi).with_library(lib);
    for c in 0..mesh.num_cells() {
        let local = local_vem(&mesh, c, &prob, &opts).unwrap();
        let e = local.matrix();
        let n = e.rows();
        let ones = vec![1.0; n];
        assert!(e.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
        let eig = symmetric_eigen(&e).unwrap();
        let positive = eig.values.iter().filter(|&&l| l > 1e-10 * eig.values[0]).count();
        assert_eq!(positive, n - 1);
    }
}

#[test]
fn rb_local_matrix_on_squares_is_symmetric_and_psd() {
    let mesh = PolyMesh::structured_squares(3).unwrap();
    let lib = square_library();
    let opts = SolveOptions::new(Stabilization::Rb { m: 3 }).with_library(lib);
    let local = local_vem(&mesh, 4, &DiffusionProblem::test1(4.0), &opts).unwrap();
    let s = &local.stabilization;
    assert!(s.max_asymmetry() < 1e-11 * s.max_abs());
    let eig = symmetric_eigen(s).unwrap();
    assert!(eig.values.iter().all(|&l| l >= -1e-10 * eig.values[0]));
}

#[test]
fn poisson_projection_error_decreases_under_refinement() {
    let prob = DiffusionProblem::poisson();
    let exact = prob.exact.clone().unwrap();
    let mut prev = f64::INFINITY;
    for k in [5, 10, 20] {
        let mesh = PolyMesh::structured_squares(k).unwrap();
        let sol = assemble_and_solve(&mesh, &prob, &SolveOptions::new(Stabilization::DofiDofi)).unwrap();
        let err = max_dof_error(&mesh, &sol, |x| exact(x).0);
        assert!(err < prev, "k = {k}: {err} >= {prev}");
        prev = err;
    }
}

#[test]
fn condition_estimates_of_simple_matrices() {
    let id = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
    assert!((condition_estimate(&id).unwrap() - 1.0).abs() < 1e-12);
    let d = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 100.0)]);
    assert!((condition_estimate(&d).unwrap() - 100.0).abs() < 1e-4);

    let n = 50;
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, 2.0));
        if i + 1 < n {
            trip.push((i, i + 1, -1.0));
            trip.push((i + 1, i, -1.0));
        }
    }
    let t = CsrMatrix::from_triplets(n, n, &trip);
    let eig = symmetric_eigen(&DenseMatrix::from_fn(n, n, |r, c| t.get(r, c))).unwrap();
    let oracle = eig.values[0] / eig.values[n - 1];
    let est = condition_estimate(&t).unwrap();
    assert!((est / oracle - 1.0).abs() < 0.01, "{est} vs {oracle}");

    // nonsymmetric: singular values of [[1, 1], [0, 1]] are the golden ratio and its inverse
    let u = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((condition_estimate(&u).unwrap() - phi * phi).abs() < 1e-4);
}
