use super::polygon::{reference_vertex, Polygon, DEGENERACY_TOL};
use super::{sub, Point};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// The symmetric basis `𝒜¹ = e₁e₁ᵀ`, `𝒜² = e₂e₂ᵀ`, `𝒜³ = e₁e₂ᵀ + e₂e₁ᵀ` and the
/// antisymmetric `𝒜⁴ = [[0, 1], [−1, 0]]`.
pub const BASIS: [Mat2; 4] = [
    Mat2([[1.0, 0.0], [0.0, 0.0]]),
    Mat2([[0.0, 0.0], [0.0, 1.0]]),
    Mat2([[0.0, 1.0], [1.0, 0.0]]),
    Mat2([[0.0, 1.0], [-1.0, 0.0]]),
];

/// Piecewise affine map `ℬ_K` from a star-shaped polygon onto the regular
/// reference polygon with the same vertex count.
///
/// On fan triangle `i`, `ℬ_K(x) = B_i (x − x_K)`, sending `x_K ↦ 0`,
/// `v_i ↦ v̂_i` and `v_{i+1} ↦ v̂_{i+1}`.
#[derive(Clone, Debug)]
pub struct AffineMap {
    polygon: Polygon,
    b: Vec<Mat2>,
    b_inv: Vec<Mat2>,
    det_inv_abs: Vec<f64>,
}

impl AffineMap {
    pub fn build(p: &Polygon) -> Result<Self> {
        let n = p.n();
        let diam = p.diameter();
        let c = p.star_center();
        let mut b = Vec::with_capacity(n);
        let mut b_inv = Vec::with_capacity(n);
        let mut det_inv_abs = Vec::with_capacity(n);
        for i in 0..n {
            let area = p.fan_signed_area(i);
            if area.abs() < DEGENERACY_TOL * diam * diam {
                return Err(Error::DegenerateTriangle(format!(
                    "fan triangle {i} has signed area {area:.3e}"
                )));
            }
            let phys = Mat2::from_cols(sub(p.vertex(i), c), sub(p.vertex(i + 1), c));
            let refm = Mat2::from_cols(reference_vertex(n, i), reference_vertex(n, i + 1));
            let phys_inv = phys.inverse().ok_or_else(|| {
                Error::DegenerateTriangle(format!("fan triangle {i} is singular"))
            })?;
            let bi = refm * phys_inv;
            let bi_inv = phys * refm.inverse().expect("reference fan triangle");
            if bi.det().abs() < 1e-14 {
                return Err(Error::DegenerateTriangle(format!(
                    "map matrix of fan triangle {i} has determinant {:.3e}",
                    bi.det()
                )));
            }
            det_inv_abs.push(bi_inv.det().abs());
            b.push(bi);
            b_inv.push(bi_inv);
        }
        Ok(Self {
            polygon: p.clone(),
            b,
            b_inv,
            det_inv_abs,
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// `B_i`, mapping physical fan triangle `i` onto reference fan triangle `i`.
    pub fn matrix(&self, i: usize) -> Mat2 {
        self.b[i]
    }

    pub fn inverse_matrix(&self, i: usize) -> Mat2 {
        self.b_inv[i]
    }

    /// `|det B_i⁻¹|`, the area ratio `|T_i| / |T̂_i|`.
    pub fn det_inv_abs(&self, i: usize) -> f64 {
        self.det_inv_abs[i]
    }

    /// Applies the affine piece of fan triangle `i` (no containment check).
    pub fn apply_piece(&self, i: usize, x: Point) -> Point {
        self.b[i].apply(sub(x, self.polygon.star_center()))
    }

    pub fn apply_inverse_piece(&self, i: usize, xh: Point) -> Point {
        let c = self.polygon.star_center();
        let y = self.b_inv[i].apply(xh);
        [y[0] + c[0], y[1] + c[1]]
    }

    /// Index of the physical fan triangle containing `x` (within `tol`, relative).
    pub fn physical_piece(&self, x: Point, tol: f64) -> Option<usize> {
        best_fan(self.n(), |i| self.polygon.fan_triangle(i), x, tol)
    }

    /// Index of the reference fan triangle containing `xh`.
    pub fn reference_piece(&self, xh: Point, tol: f64) -> Option<usize> {
        let n = self.n();
        best_fan(
            n,
            |i| [[0.0, 0.0], reference_vertex(n, i), reference_vertex(n, i + 1)],
            xh,
            tol,
        )
    }

    /// `ℬ_K(x)` for a point of `K`.
    pub fn to_reference(&self, x: Point) -> Result<Point> {
        let i = self
            .physical_piece(x, 1e-10)
            .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
        Ok(self.apply_piece(i, x))
    }

    /// `ℬ_K⁻¹(x̂)` for a point of `K̂`.
    pub fn to_physical(&self, xh: Point) -> Result<Point> {
        let i = self
            .reference_piece(xh, 1e-10)
            .ok_or(Error::OutOfDomain { x: xh[0], y: xh[1] })?;
        Ok(self.apply_inverse_piece(i, xh))
    }

    /// Pulled-back diffusion tensor on reference fan triangle `i`:
    /// `|det B_i⁻¹| B_i 𝒦 B_iᵀ`, so that `∫_{T_i} 𝒦∇u·∇v = ∫_{T̂_i} M_i ∇̂û·∇̂v̂`.
    pub fn pulled_back_tensor(&self, i: usize, k: Mat2) -> Mat2 {
        (self.b[i] * k * self.b[i].transpose()).scale(self.det_inv_abs[i])
    }

    /// Coefficients of the pulled-back Laplacian on piece `i` in `𝒜¹..𝒜³`.
    pub fn laplace_coeffs(&self, i: usize) -> [f64; 3] {
        sym_coeffs(self.b[i].transpose(), self.det_inv_abs[i]).expect("validated map")
    }

    /// Coefficients of the pulled-back `𝒦` on piece `i` in `𝒜¹..𝒜⁴`.
    pub fn tensor_coeffs(&self, i: usize, k: Mat2) -> [f64; 4] {
        full_coeffs(self.b[i].transpose(), self.det_inv_abs[i], k).expect("validated map")
    }
}

/// Fan triangle whose smallest barycentric coordinate at `x` is largest, if
/// that coordinate is ≥ −tol.
fn best_fan(n: usize, tri: impl Fn(usize) -> [Point; 3], x: Point, tol: f64) -> Option<usize> {
    let mut best = None;
    let mut best_min = f64::NEG_INFINITY;
    for i in 0..n {
        let l = super::barycentric(tri(i), x);
        let m = l[0].min(l[1]).min(l[2]);
        if m > best_min {
            best_min = m;
            best = Some(i);
        }
    }
    if best_min >= -tol {
        best
    } else {
        None
    }
}

fn check_invertible(b: Mat2) -> Result<()> {
    if b.det().abs() < 1e-14 || !b.det().is_finite() {
        return Err(Error::DegenerateTriangle(format!(
            "singular matrix (det {:.3e})",
            b.det()
        )));
    }
    Ok(())
}

/// `(c₁, c₂, c₃)` with `Σ cᵥ𝒜ᵛ = d·BᵀB`, `d = det_inv_abs`.
pub fn sym_coeffs(b: Mat2, det_inv_abs: f64) -> Result<[f64; 3]> {
    check_invertible(b)?;
    let m = (b.transpose() * b).scale(det_inv_abs);
    Ok([m.0[0][0], m.0[1][1], 0.5 * (m.0[0][1] + m.0[1][0])])
}

/// `(γ₁, γ₂, γ₃, γ₄)` with `Σ γᵥ𝒜ᵛ = d·Bᵀ𝒦B`, `d = det_inv_abs`.
pub fn full_coeffs(b: Mat2, det_inv_abs: f64, k: Mat2) -> Result<[f64; 4]> {
    check_invertible(b)?;
    let m = (b.transpose() * k * b).scale(det_inv_abs);
    Ok([
        m.0[0][0],
        m.0[1][1],
        0.5 * (m.0[0][1] + m.0[1][0]),
        0.5 * (m.0[0][1] - m.0[1][0]),
    ])
}

/// `Σ cᵥ𝒜ᵛ` for 3 or 4 coefficients.
pub fn combine(c: &[f64]) -> Mat2 {
    c.iter()
        .zip(BASIS.iter())
        .fold(Mat2::ZERO, |acc, (&ci, a)| acc + a.scale(ci))
}
