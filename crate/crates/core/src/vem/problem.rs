//! Diffusion problems `−∇·𝒦∇u = f` in the unit square with Dirichlet data,
//! including the manufactured-solution presets used by the experiments.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::geometry::Point;
use crate::linalg::Mat2;

/// Scalar field on the domain.
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
/// Closed-form solution returning `(u, ∇u)`.
pub type ExactFn = Arc<dyn Fn(Point) -> (f64, [f64; 2]) + Send + Sync>;

/// Value, gradient and Hessian `(u_xx, u_xy, u_yy)` of a smooth function.
type Jet = (f64, [f64; 2], [f64; 3]);

/// Strongly isotropic-breaking tensor diag(1, 6.25e-4).
pub const K1: Mat2 = Mat2([[1.0, 0.0], [0.0, 6.25e-4]]);
/// Nonsymmetric positive definite tensor.
pub const K2: Mat2 = Mat2([[1.0, 1e-2], [5e-3, 1e-4]]);

#[derive(Clone)]
pub struct DiffusionProblem {
    pub name: String,
    pub k: Mat2,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub exact: Option<ExactFn>,
}

impl fmt::Debug for DiffusionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionProblem")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl DiffusionProblem {
    /// Builds a problem from a smooth exact solution given with its second
    /// derivatives; `f = −(k₁₁u_xx + (k₁₂+k₂₁)u_xy + k₂₂u_yy)`.
    fn from_jet(name: &str, k: Mat2, jet: impl Fn(Point) -> Jet + Send + Sync + 'static) -> Self {
        let jet = Arc::new(jet);
        let (j1, j2, j3) = (jet.clone(), jet.clone(), jet);
        let kk = k.0;
        Self {
            name: name.into(),
            k,
            f: Arc::new(move |x| {
                let (_, _, h) = j1(x);
                -(kk[0][0] * h[0] + (kk[0][1] + kk[1][0]) * h[1] + kk[1][1] * h[2])
            }),
            g: Arc::new(move |x| j2(x).0),
            exact: Some(Arc::new(move |x| {
                let (u, g, _) = j3(x);
                (u, g)
            })),
        }
    }

    /// Poisson problem with `u = sin(4πx)sin(4πy)/(32π²)`.
    pub fn poisson() -> Self {
        let c = 1.0 / (32.0 * PI * PI);
        let w = 4.0 * PI;
        Self::from_jet("poisson", Mat2::IDENTITY, move |[x, y]| {
            let (sx, cx, sy, cy) = ((w * x).sin(), (w * x).cos(), (w * y).sin(), (w * y).cos());
            (
                c * sx * sy,
                [c * w * cx * sy, c * w * sx * cy],
                [-c * w * w * sx * sy, c * w * w * cx * cy, -c * w * w * sx * sy],
            )
        })
    }

    /// Anisotropic test: `𝒦 = K1`, `u = sin(2πx)sin(νπy)`.
    pub fn test1(nu: f64) -> Self {
        let (a, b) = (2.0 * PI, nu * PI);
        Self::from_jet("test1", K1, move |[x, y]| {
            let (sx, cx, sy, cy) = ((a * x).sin(), (a * x).cos(), (b * y).sin(), (b * y).cos());
            (
                sx * sy,
                [a * cx * sy, b * sx * cy],
                [-a * a * sx * sy, a * b * cx * cy, -b * b * sx * sy],
            )
        })
    }

    /// Nonsymmetric test: `𝒦 = K2`, continuous piecewise solution with a
    /// gradient jump across `x = 1/2`.
    pub fn test2(nu1: f64, nu2: f64) -> Self {
        Self::from_jet("test2", K2, move |[x, y]| {
            let (sp, cp) = ((PI * x).sin(), (PI * x).cos());
            if x <= 0.5 {
                // u = sin(2πx)cos(πx)·sin(ν₁πy)
                let (s2, c2) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos());
                let xv = s2 * cp;
                let xd = 2.0 * PI * c2 * cp - PI * s2 * sp;
                let xdd = -5.0 * PI * PI * s2 * cp - 4.0 * PI * PI * c2 * sp;
                let b = nu1 * PI;
                let (yv, yd, ydd) = ((b * y).sin(), b * (b * y).cos(), -b * b * (b * y).sin());
                (xv * yv, [xd * yv, xv * yd], [xdd * yv, xd * yd, xv * ydd])
            } else {
                // u = cos(ν₁πx)cos(πx)·sin(ν₂(π − y)π)
                let a = nu1 * PI;
                let (sa, ca) = ((a * x).sin(), (a * x).cos());
                let xv = ca * cp;
                let xd = -a * sa * cp - PI * ca * sp;
                let xdd = -(a * a + PI * PI) * ca * cp + 2.0 * a * PI * sa * sp;
                let b = nu2 * PI;
                let arg = b * (PI - y);
                let (yv, yd, ydd) = (arg.sin(), -b * arg.cos(), -b * b * arg.sin());
                (xv * yv, [xd * yv, xv * yd], [xdd * yv, xd * yd, xv * ydd])
            }
        })
    }

    /// Smooth Poisson solution used for line reconstructions.
    pub fn smooth() -> Self {
        Self::from_jet("smooth", Mat2::IDENTITY, |[x, y]| {
            let d = 1.0 + x * x + y.powi(4);
            let (s5, c5, s7, c7) = ((5.0 * x).sin(), (5.0 * x).cos(), (7.0 * y).sin(), (7.0 * y).cos());
            let u = x.powi(3) - x * y * y + y * x * x + x * x - x * y - x + y - 1.0 + s5 * s7 + d.ln();
            let ux = 3.0 * x * x - y * y + 2.0 * x * y + 2.0 * x - y - 1.0 + 5.0 * c5 * s7 + 2.0 * x / d;
            let uy = -2.0 * x * y + x * x - x + 1.0 + 7.0 * s5 * c7 + 4.0 * y.powi(3) / d;
            let uxx = 6.0 * x + 2.0 * y + 2.0 - 25.0 * s5 * s7 + (2.0 * d - 4.0 * x * x) / (d * d);
            let uxy = -2.0 * y + 2.0 * x - 1.0 + 35.0 * c5 * c7 - 8.0 * x * y.powi(3) / (d * d);
            let uyy = -2.0 * x - 49.0 * s5 * s7 + (12.0 * y * y * d - 16.0 * y.powi(6)) / (d * d);
            (u, [ux, uy], [uxx, uxy, uyy])
        })
    }

    /// Linear solution `1 + 2x − y` with `f = 0`, for any tensor.
    pub fn patch(k: Mat2) -> Self {
        Self::from_jet("patch", k, |[x, y]| (1.0 + 2.0 * x - y, [2.0, -1.0], [0.0; 3]))
    }

    /// Laplace problem with boundary datum 1 for `x ≤ 1/2` and 0 otherwise.
    /// The solution is not in H¹; there is no exact solution attached.
    pub fn jump() -> Self {
        Self {
            name: "jump".into(),
            k: Mat2::IDENTITY,
            f: Arc::new(|_| 0.0),
            g: Arc::new(|[x, _]| if x <= 0.5 { 1.0 } else { 0.0 }),
            exact: None,
        }
    }

    /// User-supplied tensor with constant source and homogeneous boundary data.
    pub fn custom(k: Mat2, source: f64) -> Self {
        Self {
            name: "custom".into(),
            k,
            f: Arc::new(move |_| source),
            g: Arc::new(|_| 0.0),
            exact: None,
        }
    }

    pub fn has_symmetric_tensor(&self) -> bool {
        self.k.is_symmetric(0.0)
    }
}
