//! Direct fine-space evaluation of the reduced quantities, bypassing the
//! bricks. Used to check the affine decomposition.

use super::database::RbDatabase;
use crate::error::Result;
use crate::fem::element_stiffness;
use crate::geometry::AffineMap;
use crate::linalg::{CsrMatrix, DenseMatrix, Mat2};

/// Reference-mesh matrix of `â_K(u, v) = Σ_i ∫_{T̂_i} M_i∇u·∇v` with the
/// pulled-back tensors `M_i` of `k`; entry `(r, c) = â_K(φ_r, φ_c)`.
pub fn pulled_back_stiffness(db: &RbDatabase, map: &AffineMap, k: Mat2) -> Result<CsrMatrix> {
    let mesh = &db.ref_mesh;
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tensor = map.pulled_back_tensor(mesh.fan_of(t), k);
        let e = element_stiffness(mesh.triangle_points(t), tensor)?;
        let tri = mesh.triangles()[t];
        for r in 0..3 {
            for c in 0..3 {
                trip.push((tri[r], tri[c], e[r][c]));
            }
        }
    }
    let nn = mesh.num_nodes();
    Ok(CsrMatrix::from_triplets(nn, nn, &trip))
}

fn form(s: &CsrMatrix, u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(s.matvec(v)).map(|(a, b)| a * b).sum()
}

/// Reduced system of vertex `j`, assembled in the fine space.
pub fn direct_reduced_system(db: &RbDatabase, map: &AffineMap, j: usize, m: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    let s = pulled_back_stiffness(db, map, Mat2::IDENTITY)?;
    let xi = |l: usize| &db.basis[l][j];
    let a = DenseMatrix::from_fn(m, m, |l, lp| form(&s, xi(lp), xi(l)));
    let f = (0..m).map(|l| -form(&s, xi(l), &db.liftings[j])).collect();
    Ok((a, f))
}

/// `â_K(ê_a, ê_b)` from full nodal reconstructions on the reference mesh.
pub fn direct_energy_matrix(db: &RbDatabase, map: &AffineMap, e: &[Vec<f64>], k: Mat2) -> Result<DenseMatrix> {
    let s = pulled_back_stiffness(db, map, k)?;
    let n = e.len();
    Ok(DenseMatrix::from_fn(n, n, |a, b| form(&s, &e[a], &e[b])))
}
