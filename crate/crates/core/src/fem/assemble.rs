use super::trimesh::{shape_gradients, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::linalg::{CsrMatrix, Mat2, SparseSolver};
use crate::par;

/// Element stiffness `E[r][c] = |T| 𝒦∇φ_r·∇φ_c`.
pub fn element_stiffness(p: [Point; 3], k: Mat2) -> Result<[[f64; 3]; 3]> {
    let area = 0.5 * crate::geometry::cross(crate::geometry::sub(p[1], p[0]), crate::geometry::sub(p[2], p[0]));
    let scale = p
        .iter()
        .flat_map(|a| p.iter().map(move |b| crate::geometry::dist(*a, *b)))
        .fold(0.0, f64::max);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::Assembly {
            triangle: usize::MAX,
            reason: format!("non-positive or tiny area {area:.3e}"),
        });
    }
    let g = shape_gradients(p);
    let mut e = [[0.0; 3]; 3];
    for r in 0..3 {
        let kg = k.apply(g[r]);
        for c in 0..3 {
            e[r][c] = area * (kg[0] * g[c][0] + kg[1] * g[c][1]);
        }
    }
    Ok(e)
}

/// Global stiffness with entries `∫ 𝒦∇φ_r·∇φ_c`, summed in triangle order.
pub fn assemble_stiffness(mesh: &TriMesh, k: Mat2) -> Result<CsrMatrix> {
    let locals = par::try_map_range(mesh.num_triangles(), |t| {
        element_stiffness(mesh.triangle_points(t), k).map_err(|e| match e {
            Error::Assembly { reason, .. } => Error::Assembly { triangle: t, reason },
            e => e,
        })
    })?;
    let mut trip = Vec::with_capacity(9 * locals.len());
    for (t, e) in locals.iter().enumerate() {
        let tri = mesh.triangles()[t];
        for r in 0..3 {
            for c in 0..3 {
                trip.push((tri[r], tri[c], e[r][c]));
            }
        }
    }
    let n = mesh.num_nodes();
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// Load vector `∫ f φ_k` with the three-edge-midpoint rule.
pub fn load_vector(mesh: &TriMesh, f: &(dyn Fn(Point) -> f64 + Sync)) -> Vec<f64> {
    let locals = par::map_range(mesh.num_triangles(), |t| {
        let [a, b, c] = mesh.triangle_points(t);
        let mid = |p: Point, q: Point| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let (fab, fbc, fca) = (f(mid(a, b)), f(mid(b, c)), f(mid(c, a)));
        let w = mesh.triangle_area(t) / 3.0;
        // φ_a = 1/2 at the midpoints of ab and ca, 0 at bc
        [
            w * 0.5 * (fab + fca),
            w * 0.5 * (fab + fbc),
            w * 0.5 * (fbc + fca),
        ]
    });
    let mut out = vec![0.0; mesh.num_nodes()];
    for (t, l) in locals.iter().enumerate() {
        for (k, &node) in mesh.triangles()[t].iter().enumerate() {
            out[node] += l[k];
        }
    }
    out
}

/// Factorized interior system of a Dirichlet problem on one triangulation,
/// reusable for many boundary data.
pub struct DirichletSolver {
    interior: Vec<usize>,
    a_ib: CsrMatrix,
    a_ii: SparseSolver,
    stiffness: CsrMatrix,
}

impl DirichletSolver {
    /// `𝒦` enters through its symmetric part: the antisymmetric part of a
    /// constant tensor does not contribute to rows of interior test functions.
    pub fn new(mesh: &TriMesh, k: Mat2) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh, k.sym_part())?;
        let interior = mesh.interior_nodes().to_vec();
        let boundary: Vec<usize> = (0..mesh.num_nodes()).filter(|&i| mesh.is_boundary(i)).collect();
        let a_ii = SparseSolver::spd(stiffness.submatrix(&interior, &interior))?;
        let a_ib = stiffness.submatrix(&interior, &boundary);
        Ok(Self {
            interior,
            a_ib,
            a_ii,
            stiffness,
        })
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Solves for each full nodal vector of boundary values (interior entries
    /// ignored) with an optional assembled load vector.
    pub fn solve_many(&self, boundary_values: &[Vec<f64>], load: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        let nn = self.stiffness.nrows();
        let bnodes: Vec<usize> = {
            let mut is_int = vec![false; nn];
            for &i in &self.interior {
                is_int[i] = true;
            }
            (0..nn).filter(|&i| !is_int[i]).collect()
        };
        let rhs: Vec<Vec<f64>> = boundary_values
            .iter()
            .map(|g| {
                if g.len() != nn {
                    return Err(Error::InvalidArgument("boundary vector length".into()));
                }
                let gb: Vec<f64> = bnodes.iter().map(|&i| g[i]).collect();
                let ag = self.a_ib.matvec(&gb);
                Ok(self
                    .interior
                    .iter()
                    .enumerate()
                    .map(|(r, &i)| load.map_or(0.0, |f| f[i]) - ag[r])
                    .collect())
            })
            .collect::<Result<_>>()?;
        let sols = self.a_ii.solve_many(&rhs)?;
        Ok(boundary_values
            .iter()
            .zip(sols)
            .map(|(g, x)| {
                let mut u = g.clone();
                for (r, &i) in self.interior.iter().enumerate() {
                    u[i] = x[r];
                }
                u
            })
            .collect())
    }

    pub fn solve(&self, boundary_values: &[f64], load: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(self
            .solve_many(std::slice::from_ref(&boundary_values.to_vec()), load)?
            .remove(0))
    }
}

/// `solve_dirichlet` in one call.
pub fn solve_dirichlet(
    mesh: &TriMesh,
    k: Mat2,
    boundary_values: &[f64],
    load: Option<&[f64]>,
) -> Result<Vec<f64>> {
    DirichletSolver::new(mesh, k)?.solve(boundary_values, load)
}

/// Discrete harmonic functions with hat boundary data, one per vertex.
pub fn harmonic_basis(mesh: &TriMesh) -> Result<Vec<Vec<f64>>> {
    let solver = DirichletSolver::new(mesh, Mat2::IDENTITY)?;
    let data: Vec<Vec<f64>> = (0..mesh.polygon().n()).map(|j| mesh.hat_trace(j)).collect();
    solver.solve_many(&data, None)
}

/// FE approximation of the virtual basis function of vertex `j` on a mesh of size `delta`.
pub fn vem_basis_fe(p: &Polygon, j: usize, delta: f64) -> Result<(TriMesh, Vec<f64>)> {
    if j >= p.n() {
        return Err(Error::InvalidArgument(format!("vertex {j} out of range")));
    }
    let mesh = TriMesh::triangulate(p, delta)?;
    let u = solve_dirichlet(&mesh, Mat2::IDENTITY, &mesh.hat_trace(j), None)?;
    Ok((mesh, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reference_polygon;
    use approx::assert_abs_diff_eq;

    fn unit_square() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn right_triangle_element() {
        let e = element_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], Mat2::IDENTITY).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(e[r][c], expect[r][c], epsilon = 1e-15);
            }
        }
        assert!(element_stiffness([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], Mat2::IDENTITY).is_err());
    }

    #[test]
    fn row_sums_vanish_and_symmetry() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.2], [0.7, 0.9], [0.1, 0.6]]).unwrap();
        let m = TriMesh::with_level(&p, 3).unwrap();
        let a = assemble_stiffness(&m, Mat2::IDENTITY).unwrap();
        for r in 0..a.nrows() {
            assert_abs_diff_eq!(a.row(r).map(|(_, v)| v).sum::<f64>(), 0.0, epsilon = 1e-13);
        }
        let k = Mat2::new(2.0, 0.3, 0.3, 0.5);
        let a = assemble_stiffness(&m, k).unwrap();
        assert!(a.max_asymmetry() <= 1e-14);
    }

    #[test]
    fn dirichlet_reproduces_constants_and_linears() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.2], [1.2, 0.9], [0.4, 1.1], [-0.2, 0.5]]).unwrap();
        let m = TriMesh::with_level(&p, 4).unwrap();
        let lin = |x: Point| 0.3 - x[0] + 2.0 * x[1];
        let g: Vec<f64> = m.nodes().iter().map(|&x| lin(x)).collect();
        let u = solve_dirichlet(&m, Mat2::IDENTITY, &g, None).unwrap();
        for k in 0..m.num_nodes() {
            assert_abs_diff_eq!(u[k], g[k], epsilon = 1e-10);
        }
        let u = solve_dirichlet(&m, Mat2::new(3.0, 0.5, -0.2, 1.0), &vec![2.5; m.num_nodes()], None).unwrap();
        assert!(u.iter().all(|&v| (v - 2.5).abs() < 1e-10));
    }

    #[test]
    fn basis_partition_of_unity_and_bounds() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.2], [1.2, 0.9], [0.4, 1.1], [-0.2, 0.5]]).unwrap();
        let m = TriMesh::with_level(&p, 4).unwrap();
        let basis = harmonic_basis(&m).unwrap();
        for k in 0..m.num_nodes() {
            let s: f64 = basis.iter().map(|b| b[k]).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        }
        for b in &basis {
            assert!(b.iter().all(|&v| (-1e-8..=1.0 + 1e-8).contains(&v)));
        }
    }

    #[test]
    fn square_basis_matches_bilinear() {
        for (j, f) in [
            (0usize, (|x: Point| (1.0 - x[0]) * (1.0 - x[1])) as fn(Point) -> f64),
            (2, |x: Point| x[0] * x[1]),
        ] {
            let (m, u) = vem_basis_fe(&unit_square(), j, 0.05).unwrap();
            let err = m
                .nodes()
                .iter()
                .zip(&u)
                .map(|(&x, &v)| (v - f(x)).abs())
                .fold(0.0, f64::max);
            assert!(err < 2e-3, "err {err}");
        }
    }

    #[test]
    fn galerkin_orthogonality() {
        let p = reference_polygon(6).unwrap();
        let m = TriMesh::with_level(&p, 3).unwrap();
        let load = load_vector(&m, &|x: Point| (3.0 * x[0]).sin() + x[1]);
        let g = m.hat_trace(1);
        let solver = DirichletSolver::new(&m, Mat2::IDENTITY).unwrap();
        let u = solver.solve(&g, Some(&load)).unwrap();
        let au = solver.stiffness().matvec(&u);
        let scale = load.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        for &i in m.interior_nodes() {
            assert!((au[i] - load[i]).abs() <= 1e-12 * scale * 10.0);
        }
    }

    #[test]
    fn load_of_constant_integrates_area() {
        let p = reference_polygon(5).unwrap();
        let m = TriMesh::with_level(&p, 2).unwrap();
        let l = load_vector(&m, &|_| 1.0);
        assert_abs_diff_eq!(l.iter().sum::<f64>(), p.area(), epsilon = 1e-14);
    }
}
