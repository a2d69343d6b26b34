//! Element-level VEM operators: the `Π^∇` projector, consistency and
//! stabilization matrices, and the load vector.
//!
//! Local matrices follow the form convention `E[i][j] = a_h^K(e_i, e_j)`.

use crate::error::{Error, Result};
use crate::geometry::{lerp, Point, Polygon};
use crate::linalg::{DenseMatrix, Mat2};
use crate::rb::RbBasisEval;

/// `Π^∇e_j = a₀ + a₁x + a₂y` for every nodal basis function of a cell.
#[derive(Clone, Debug)]
pub struct Projector {
    area: f64,
    perimeter: f64,
    vertices: Vec<Point>,
    /// `coeffs[j] = [a₀, a₁, a₂]`.
    coeffs: Vec<[f64; 3]>,
}

impl Projector {
    /// Builds the projector from boundary integrals only:
    /// `∇Π^∇v = |K|⁻¹∫_{∂K} v n ds` and `∫_{∂K} Π^∇v = ∫_{∂K} v`.
    pub fn new(cell: &Polygon) -> Result<Self> {
        let n = cell.n();
        let perimeter = cell.perimeter();
        if !(perimeter > 0.0) {
            return Err(Error::InvalidArgument("zero-perimeter cell".into()));
        }
        let area = cell.area();
        // boundary centroid ∫_{∂K} x ds / |∂K|
        let mut xb = [0.0; 2];
        for i in 0..n {
            let (a, b) = (cell.vertex(i), cell.vertex(i + 1));
            let l = cell.edge_length(i);
            xb[0] += l * (a[0] + b[0]) / 2.0;
            xb[1] += l * (a[1] + b[1]) / 2.0;
        }
        xb = [xb[0] / perimeter, xb[1] / perimeter];
        let coeffs = (0..n)
            .map(|j| {
                // e_j is the hat on edges j−1 and j; ∫ e_j n ds = (|e|n)_{j−1}/2 + (|e|n)_j/2
                let prev = cell.vertex(j + n - 1);
                let next = cell.vertex(j + 1);
                let g = [(next[1] - prev[1]) / (2.0 * area), (prev[0] - next[0]) / (2.0 * area)];
                let mean = (cell.edge_length(j + n - 1) + cell.edge_length(j)) / (2.0 * perimeter);
                [mean - g[0] * xb[0] - g[1] * xb[1], g[0], g[1]]
            })
            .collect();
        Ok(Self {
            area,
            perimeter,
            vertices: cell.vertices().to_vec(),
            coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn coeffs(&self, j: usize) -> [f64; 3] {
        self.coeffs[j]
    }

    pub fn gradient(&self, j: usize) -> [f64; 2] {
        [self.coeffs[j][1], self.coeffs[j][2]]
    }

    /// Coefficients of `Π^∇v` for the dof vector `dofs`.
    pub fn apply(&self, dofs: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, &u) in self.coeffs.iter().zip(dofs) {
            for k in 0..3 {
                out[k] += u * c[k];
            }
        }
        out
    }

    /// `D[i][j] = Π^∇e_j(v_i)`: the dofs of the projected basis functions.
    pub fn dof_matrix(&self) -> DenseMatrix {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| eval_linear(self.coeffs[j], self.vertices[i]))
    }

    /// `R = I − D`, the dofs of `(I − Π^∇)e_j` in column `j`.
    pub fn residual_matrix(&self) -> DenseMatrix {
        let d = self.dof_matrix();
        DenseMatrix::from_fn(self.n(), self.n(), |i, j| if i == j { 1.0 } else { 0.0 } - d[(i, j)])
    }
}

pub fn eval_linear(c: [f64; 3], x: Point) -> f64 {
    c[0] + c[1] * x[0] + c[2] * x[1]
}

/// `C[i][j] = |K| 𝒦∇Π^∇e_i · ∇Π^∇e_j`.
pub fn local_consistency(proj: &Projector, k: Mat2) -> DenseMatrix {
    let n = proj.n();
    DenseMatrix::from_fn(n, n, |i, j| proj.area * k.bilinear(proj.gradient(j), proj.gradient(i)))
}

/// `RᵀR`.
pub fn stab_dofi_dofi(proj: &Projector) -> DenseMatrix {
    let r = proj.residual_matrix();
    r.transpose().matmul(&r)
}

/// `Rᵀ diag(ω) R` with `ω_i = max{1, C_ii}`.
pub fn stab_drecipe(proj: &Projector, k: Mat2) -> DenseMatrix {
    let c = local_consistency(proj, k);
    let r = proj.residual_matrix();
    let n = proj.n();
    let wr = DenseMatrix::from_fn(n, n, |i, j| c[(i, i)].max(1.0) * r[(i, j)]);
    r.transpose().matmul(&wr)
}

/// `Rᵀ K^rb R` with `K^rb_{ab} = â_K(ê_a, ê_b)` from the reduced basis.
/// `eval` must have been built for this cell (any similar copy of it).
pub fn stab_rb(proj: &Projector, eval: &RbBasisEval<'_>, k: Mat2) -> DenseMatrix {
    let krb = eval.energy_matrix(k);
    let r = proj.residual_matrix();
    r.transpose().matmul(&krb.matmul(&r))
}

/// `F_j = |∂K|⁻¹ ∫_K f · ∫_{∂K} e_j`, with `∫_K f` from the edge-midpoint rule
/// on the fan triangles.
pub fn local_rhs(cell: &Polygon, f: &(dyn Fn(Point) -> f64 + Sync)) -> Vec<f64> {
    let n = cell.n();
    let mut integral = 0.0;
    for i in 0..n {
        let t = cell.fan_triangle(i);
        let area = cell.fan_signed_area(i);
        let mids = [lerp(t[0], t[1], 0.5), lerp(t[1], t[2], 0.5), lerp(t[2], t[0], 0.5)];
        integral += area * mids.iter().map(|&x| f(x)).sum::<f64>() / 3.0;
    }
    let per = cell.perimeter();
    (0..n)
        .map(|j| integral * (cell.edge_length(j + n - 1) + cell.edge_length(j)) / (2.0 * per))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{element_stiffness, TriMesh};
    use crate::geometry::generate_convex_polygon;
    use crate::linalg::symmetric_eigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn hexagons(count: usize, seed: u64) -> Vec<Polygon> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let p = generate_convex_polygon(6, &mut rng).unwrap();
                // move away from the origin so the constant term is exercised
                p.transformed([-0.3, -0.7], 0.4)
            })
            .collect()
    }

    fn dofs_of(p: &Polygon, u: impl Fn(Point) -> f64) -> Vec<f64> {
        p.vertices().iter().map(|&v| u(v)).collect()
    }

    #[test]
    fn projector_reproduces_linears() {
        for p in hexagons(20, 3).iter().chain([&unit_square()]) {
            let proj = Projector::new(p).unwrap();
            let c = proj.apply(&dofs_of(p, |x| 0.5 + x[0] + 2.0 * x[1]));
            for (a, b) in c.iter().zip([0.5, 1.0, 2.0]) {
                assert!((a - b).abs() < 1e-12, "{c:?}");
            }
            let c = proj.apply(&vec![1.0; p.n()]);
            assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
        }
    }

    #[test]
    fn projector_gradient_on_the_unit_square() {
        let proj = Projector::new(&unit_square()).unwrap();
        let g = proj.gradient(2);
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projector_preserves_boundary_mean() {
        for p in hexagons(10, 4) {
            let proj = Projector::new(&p).unwrap();
            let n = p.n();
            for j in 0..n {
                // Π^∇e_j is linear, so its boundary integral is exact by the trapezoid rule
                let c = proj.coeffs(j);
                let lhs: f64 = (0..n)
                    .map(|i| p.edge_length(i) * (eval_linear(c, p.vertex(i)) + eval_linear(c, p.vertex(i + 1))) / 2.0)
                    .sum();
                let rhs = (p.edge_length(j + n - 1) + p.edge_length(j)) / 2.0;
                assert!((lhs - rhs).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn consistency_on_the_unit_square_matches_direct_integration() {
        // Π^∇ of the bilinear basis functions is the L²-gradient average; on
        // the square these are the linear parts of the bilinears.
        let p = unit_square();
        let proj = Projector::new(&p).unwrap();
        let c = local_consistency(&proj, Mat2::IDENTITY);
        // ∇Π^∇e_j = ±(1/2, 1/2) or ±(1/2, −1/2): entries ±1/2 and 0
        let expect = [
            [0.5, 0.0, -0.5, 0.0],
            [0.0, 0.5, 0.0, -0.5],
            [-0.5, 0.0, 0.5, 0.0],
            [0.0, -0.5, 0.0, 0.5],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((c[(i, j)] - expect[i][j]).abs() < 1e-13);
            }
        }
        // the averaged gradients of the exact basis functions (bilinears) are the projector gradients
        let fine = TriMesh::with_level(&p, 5).unwrap();
        for j in 0..4 {
            let mut avg = [0.0; 2];
            for t in 0..fine.num_triangles() {
                let vals: Vec<f64> = fine.triangles()[t]
                    .iter()
                    .map(|&k| bilinear_hat(j, fine.nodes()[k]))
                    .collect();
                let g = crate::fem::shape_gradients(fine.triangle_points(t));
                let a = fine.triangle_area(t);
                for d in 0..2 {
                    avg[d] += a * (g[0][d] * vals[0] + g[1][d] * vals[1] + g[2][d] * vals[2]);
                }
            }
            let pg = proj.gradient(j);
            assert!((avg[0] - pg[0]).abs() < 1e-12 && (avg[1] - pg[1]).abs() < 1e-12);
        }
    }

    fn bilinear_hat(j: usize, [x, y]: Point) -> f64 {
        match j {
            0 => (1.0 - x) * (1.0 - y),
            1 => x * (1.0 - y),
            2 => x * y,
            _ => (1.0 - x) * y,
        }
    }

    #[test]
    fn consistency_rows_sum_to_zero_and_symmetry_follows_the_tensor() {
        for p in hexagons(10, 5) {
            let proj = Projector::new(&p).unwrap();
            let c = local_consistency(&proj, Mat2::new(2.0, 0.3, 0.3, 1.0));
            for i in 0..p.n() {
                assert!(c.row(i).iter().sum::<f64>().abs() < 1e-12);
            }
            assert!(c.max_asymmetry() < 1e-14);
            let c = local_consistency(&proj, Mat2::new(2.0, 0.3, -0.1, 1.0));
            assert!(c.max_asymmetry() > 1e-6);
        }
    }

    #[test]
    fn consistency_matches_p1_integration_for_a_triangle() {
        // on a triangle the VEM space is P1, so the consistency is the P1 stiffness
        let tri = [[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]];
        let p = Polygon::new(tri.to_vec()).unwrap();
        let k = Mat2::new(1.5, 0.2, 0.2, 0.7);
        let c = local_consistency(&Projector::new(&p).unwrap(), k);
        let e = element_stiffness(tri, k).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[(i, j)] - e[i][j]).abs() < 1e-13);
            }
        }
        // and every stabilization vanishes
        assert!(stab_dofi_dofi(&Projector::new(&p).unwrap()).max_abs() < 1e-13);
    }

    #[test]
    fn stabilizations_annihilate_linears_and_are_psd() {
        for p in hexagons(20, 6) {
            let proj = Projector::new(&p).unwrap();
            let k = Mat2::new(1.0, 0.0, 0.0, 6.25e-4);
            for s in [stab_dofi_dofi(&proj), stab_drecipe(&proj, k)] {
                for lin in [
                    dofs_of(&p, |_| 1.0),
                    dofs_of(&p, |x| x[0]),
                    dofs_of(&p, |x| x[1]),
                ] {
                    let sx = s.matvec(&lin);
                    assert!(sx.iter().all(|v| v.abs() < 1e-12), "{sx:?}");
                }
                assert!(s.max_asymmetry() < 1e-14);
                let eig = symmetric_eigen(&s).unwrap();
                // linears span the kernel: exactly N − 3 positive eigenvalues
                let scale = eig.values[0];
                let positive = eig.values.iter().filter(|&&l| l > 1e-10 * scale).count();
                assert_eq!(positive, p.n() - 3);
                assert!(eig.values.iter().all(|&l| l > -1e-12 * scale));
            }
        }
    }

    #[test]
    fn drecipe_weights_are_at_least_one() {
        let p = unit_square();
        let proj = Projector::new(&p).unwrap();
        // |K| |∇Π^∇e_i|² = 1/2 on the square: D-recipe equals dofi-dofi
        let a = stab_dofi_dofi(&proj);
        let b = stab_drecipe(&proj, Mat2::IDENTITY);
        assert!(a.add(&b.scaled(-1.0)).max_abs() < 1e-15);
        // large tensor: weights > 1 make the stabilization larger
        let big = stab_drecipe(&proj, Mat2::diag(10.0, 10.0));
        assert!((big[(0, 0)] - 5.0 * a[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn load_vector_properties() {
        let p = unit_square();
        assert!(local_rhs(&p, &|_| 0.0).iter().all(|&v| v == 0.0));
        for q in hexagons(5, 7) {
            let s: f64 = local_rhs(&q, &|_| 1.0).iter().sum();
            assert!((s - q.area()).abs() < 1e-13);
        }
        // f = x on the unit square: ∫f = 1/2, every vertex has ∫_{∂K} e_j = 1, |∂K| = 4
        let r = local_rhs(&p, &|x| x[0]);
        assert!(r.iter().all(|&v| (v - 0.125).abs() < 1e-15));
    }
}
