use super::trimesh::TriMesh;
use crate::geometry::Point;
use crate::linalg::Mat2;

/// `(L², H¹-seminorm, energy, max over nodes)` of a P1 field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
    pub linf: f64,
}

impl Norms {
    /// Full H¹ norm `(‖·‖₀² + |·|₁²)^{1/2}`.
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

/// Squared norm contributions, for summing over several meshes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SquaredNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
    pub linf: f64,
}

impl SquaredNorms {
    pub fn add(&mut self, o: &SquaredNorms) {
        self.l2 += o.l2;
        self.h1_semi += o.h1_semi;
        self.energy += o.energy;
        self.linf = self.linf.max(o.linf);
    }

    pub fn sqrt(&self) -> Norms {
        Norms {
            l2: self.l2.sqrt(),
            h1_semi: self.h1_semi.sqrt(),
            energy: self.energy.sqrt(),
            linf: self.linf,
        }
    }
}

/// Norms of a P1 field; the energy norm uses the symmetric part of `k`.
pub fn norms(mesh: &TriMesh, u: &[f64], k: Mat2) -> Norms {
    squared_norms(mesh, u, k).sqrt()
}

pub fn squared_norms(mesh: &TriMesh, u: &[f64], k: Mat2) -> SquaredNorms {
    assert_eq!(u.len(), mesh.num_nodes(), "field does not match the mesh");
    let ks = k.sym_part();
    let mut s = SquaredNorms::default();
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles()[t];
        let area = mesh.triangle_area(t);
        let (ua, ub, uc) = (u[a], u[b], u[c]);
        // midpoint rule, exact for quadratics
        let m = [0.5 * (ua + ub), 0.5 * (ub + uc), 0.5 * (uc + ua)];
        s.l2 += area / 3.0 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
        let g = mesh.gradient(u, t);
        s.h1_semi += area * (g[0] * g[0] + g[1] * g[1]);
        s.energy += area * ks.bilinear(g, g);
    }
    s.linf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    s
}

/// Squared norms of `exact − u_h` where `exact` returns value and gradient,
/// integrated with the edge-midpoint rule; `linf` is over mesh nodes.
pub fn squared_error_norms(
    mesh: &TriMesh,
    u: &[f64],
    k: Mat2,
    exact: &dyn Fn(Point) -> (f64, [f64; 2]),
) -> SquaredNorms {
    let ks = k.sym_part();
    let mut s = SquaredNorms::default();
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let g = mesh.gradient(u, t);
        let vals = [u[a], u[b], u[c]];
        for (i, j) in [(0usize, 1usize), (1, 2), (2, 0)] {
            let x = [0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1])];
            let (ue, ge) = exact(x);
            let e = ue - 0.5 * (vals[i] + vals[j]);
            let de = [ge[0] - g[0], ge[1] - g[1]];
            s.l2 += area / 3.0 * e * e;
            s.h1_semi += area / 3.0 * (de[0] * de[0] + de[1] * de[1]);
            s.energy += area / 3.0 * ks.bilinear(de, de);
        }
    }
    for (k, &x) in mesh.nodes().iter().enumerate() {
        s.linf = s.linf.max((exact(x).0 - u[k]).abs());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use approx::assert_abs_diff_eq;

    fn square_mesh() -> TriMesh {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        TriMesh::with_level(&p, 3).unwrap()
    }

    #[test]
    fn zero_field() {
        let m = square_mesh();
        assert_eq!(norms(&m, &vec![0.0; m.num_nodes()], Mat2::IDENTITY), Norms::default());
    }

    #[test]
    fn field_x() {
        let m = square_mesh();
        let u: Vec<f64> = m.nodes().iter().map(|x| x[0]).collect();
        let n = norms(&m, &u, Mat2::diag(4.0, 1.0));
        assert_abs_diff_eq!(n.h1_semi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.energy, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.l2, (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(n.linf, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn error_against_own_interpolant_of_linear_is_zero() {
        let m = square_mesh();
        let u: Vec<f64> = m.nodes().iter().map(|x| 2.0 * x[0] - x[1]).collect();
        let e = squared_error_norms(&m, &u, Mat2::IDENTITY, &|x| (2.0 * x[0] - x[1], [2.0, -1.0]));
        assert!(e.l2 < 1e-28 && e.h1_semi < 1e-28 && e.linf < 1e-14);
    }
}
