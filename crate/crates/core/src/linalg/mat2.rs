use std::ops::{Add, Mul, Neg, Sub};

/// Row-major 2×2 real matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2([[d1, 0.0], [0.0, d2]])
    }

    /// Matrix whose columns are `c1` and `c2`.
    pub fn from_cols(c1: [f64; 2], c2: [f64; 2]) -> Self {
        Mat2([[c1[0], c2[0]], [c1[1], c2[1]]])
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let inv = 1.0 / d;
        Some(Mat2([
            [self.0[1][1] * inv, -self.0[0][1] * inv],
            [-self.0[1][0] * inv, self.0[0][0] * inv],
        ]))
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// `(A + Aᵀ) / 2`.
    pub fn sym_part(&self) -> Self {
        let off = 0.5 * (self.0[0][1] + self.0[1][0]);
        Mat2([[self.0[0][0], off], [off, self.0[1][1]]])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol * self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> [f64; 2] {
        let s = self.sym_part();
        let (a, b, d) = (s.0[0][0], s.0[0][1], s.0[1][1]);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }

    /// Principal square root of the symmetric part (which must be positive semidefinite).
    pub fn sym_sqrt(&self) -> Self {
        let s = self.sym_part();
        let (a, b, d) = (s.0[0][0], s.0[0][1], s.0[1][1]);
        let det = (a * d - b * b).max(0.0);
        let sd = det.sqrt();
        let t = (a + d + 2.0 * sd).max(0.0).sqrt();
        if t == 0.0 {
            return Mat2::ZERO;
        }
        Mat2([[(a + sd) / t, b / t], [b / t, (d + sd) / t]])
    }

    /// `x · A y`.
    #[inline]
    pub fn bilinear(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let ay = self.apply(y);
        x[0] * ay[0] + x[1] * ay[1]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + o.0[0][0], self.0[0][1] + o.0[0][1]],
            [self.0[1][0] + o.0[1][0], self.0[1][1] + o.0[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_roundtrip() {
        let a = Mat2::new(2.0, 1.0, -0.5, 3.0);
        let p = a * a.inverse().unwrap();
        assert_abs_diff_eq!(p.0[0][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.0[0][1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.0[1][1], 1.0, epsilon = 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn sym_sqrt_squares_back() {
        let k = Mat2::new(1.0, 1e-2, 5e-3, 1e-4);
        let r = k.sym_sqrt();
        let rr = r * r;
        let s = k.sym_part();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(rr.0[i][j], s.0[i][j], epsilon = 1e-15);
            }
        }
        let d = Mat2::diag(4.0, 1.0).sym_sqrt();
        assert_abs_diff_eq!(d.0[0][0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.0[1][1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sym_eigenvalues_of_diag() {
        let e = Mat2::diag(3.0, 0.5).sym_eigenvalues();
        assert_eq!(e, [0.5, 3.0]);
    }
}
