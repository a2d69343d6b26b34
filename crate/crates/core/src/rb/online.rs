//! Per-polygon reduced solves and evaluation of the reduced-basis
//! approximations of the virtual basis functions.

use super::database::RbDatabase;
use crate::error::{Error, Result};
use crate::geometry::{normalize, AffineMap, Point, Polygon, Similarity};
use crate::linalg::{Cholesky, DenseMatrix, Lu, Mat2};

/// Pivot threshold (relative) below which the reduced system is regularized.
pub const TIKHONOV_PIVOT: f64 = 1e-13;
pub const TIKHONOV_SHIFT: f64 = 1e-12;
pub const REDUCED_RESIDUAL_TOL: f64 = 1e-10;

/// Reduced-basis coefficients of the basis functions of one polygon.
#[derive(Clone, Debug)]
pub struct RbBasisEval<'a> {
    db: &'a RbDatabase,
    /// The polygon as given.
    polygon: Polygon,
    /// Its normalized copy, on which the map is built.
    normalized: Polygon,
    similarity: Similarity,
    map: AffineMap,
    m: usize,
    /// `coeffs[j][ℓ] = w_ℓ^{K,j}`.
    coeffs: Vec<Vec<f64>>,
    regularized: bool,
}

enum Factor {
    Cholesky(Cholesky),
    Lu(Lu),
}

impl Factor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factor::Cholesky(c) => c.solve(b),
            Factor::Lu(lu) => lu.solve(b),
        }
    }
}

/// Solves `A w = f` after symmetric Jacobi scaling, falling back to a small
/// Tikhonov shift when the scaled matrix is numerically singular.
/// Returns the solution and whether the shift was needed.
pub fn solve_reduced(a: &DenseMatrix, f: &[f64], node: usize) -> Result<(Vec<f64>, bool)> {
    let m = f.len();
    if m == 0 {
        return Ok((Vec::new(), false));
    }
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let v = a[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut s = DenseMatrix::from_fn(m, m, |r, c| d[r] * a[(r, c)] * d[c]);
    let g: Vec<f64> = (0..m).map(|i| d[i] * f[i]).collect();
    let mut regularized = false;
    // the reduced matrices are symmetric positive definite by construction;
    // anything else goes through pivoted LU
    let symmetric = s.max_asymmetry() <= 1e-12 * s.max_abs();
    let factor = |s: &DenseMatrix| -> Result<(Factor, f64)> {
        if symmetric {
            Cholesky::factor(s).map(|c| {
                let p = c.min_relative_pivot;
                (Factor::Cholesky(c), p)
            })
        } else {
            Lu::factor(s).map(|lu| {
                let p = lu.min_relative_pivot;
                (Factor::Lu(lu), p)
            })
        }
    };
    let lu = match factor(&s) {
        Ok((lu, pivot)) if pivot >= TIKHONOV_PIVOT => lu,
        _ => {
            regularized = true;
            let shift = TIKHONOV_SHIFT * s.trace().abs().max(f64::MIN_POSITIVE) / m as f64;
            for i in 0..m {
                s[(i, i)] += shift;
            }
            log::debug!("reduced system for node {node} regularized (shift {shift:.3e})");
            factor(&s)
                .map_err(|e| Error::ReducedSolver {
                    node,
                    reason: e.to_string(),
                })?
                .0
        }
    };
    let y = lu.solve(&g);
    let w: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a * b).collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::ReducedSolver {
            node,
            reason: "non-finite coefficients".into(),
        });
    }
    if !regularized {
        let sy = s.matvec(&y);
        let res = sy.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nrm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res > REDUCED_RESIDUAL_TOL * nrm.max(f64::MIN_POSITIVE) {
            return Err(Error::ReducedSolver {
                node,
                reason: format!("relative residual {:.3e}", res / nrm),
            });
        }
    }
    Ok((w, regularized))
}

/// Reduced matrix and right-hand side of vertex `j` for the map `map`.
pub fn reduced_system(db: &RbDatabase, map: &AffineMap, j: usize, m: usize) -> (DenseMatrix, Vec<f64>) {
    let b = &db.bricks;
    let stride = b.m();
    // the Laplace-type blocks A(i, ν, j, j, ·, ·), ν < 3, are symmetric: only
    // the upper triangle t[ℓ'·m + ℓ], ℓ ≥ ℓ', is read (contiguous in the brick layout)
    let mut t = vec![0.0; m * m];
    let mut f = vec![0.0; m];
    for i in 0..db.n {
        let c = map.laplace_coeffs(i);
        for (nu, &cn) in c.iter().enumerate() {
            let fb = b.f_index(i, nu, j, j, 0);
            for (fl, &v) in f.iter_mut().zip(&b.f[fb..fb + m]) {
                *fl -= cn * v;
            }
            let ab = b.a_index(i, nu, j, j, 0, 0);
            for lp in 0..m {
                let row = &b.a[ab + lp * stride + lp..ab + lp * stride + m];
                for (x, &v) in t[lp * m + lp..(lp + 1) * m].iter_mut().zip(row) {
                    *x += cn * v;
                }
            }
        }
    }
    (DenseMatrix::from_fn(m, m, |l, lp| t[l.min(lp) * m + l.max(lp)]), f)
}

/// Reduced solves for every vertex of `p` with `m` basis members.
pub fn reduced_solve<'a>(p: &Polygon, db: &'a RbDatabase, m: usize) -> Result<RbBasisEval<'a>> {
    if p.n() != db.n {
        return Err(Error::NoDatabaseForN(p.n()));
    }
    if m > db.m_max {
        return Err(Error::InvalidArgument(format!(
            "M = {m} exceeds the database's M_max = {}",
            db.m_max
        )));
    }
    let (normalized, similarity) = normalize(p)?;
    let map = AffineMap::build(&normalized)?;
    let mut coeffs = Vec::with_capacity(db.n);
    let mut regularized = false;
    for j in 0..db.n {
        let (a, f) = reduced_system(db, &map, j, m);
        let (w, reg) = solve_reduced(&a, &f, j)?;
        regularized |= reg;
        coeffs.push(w);
    }
    Ok(RbBasisEval {
        db,
        polygon: p.clone(),
        normalized,
        similarity,
        map,
        m,
        coeffs,
        regularized,
    })
}

impl<'a> RbBasisEval<'a> {
    pub fn db(&self) -> &'a RbDatabase {
        self.db
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.db.n
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn normalized(&self) -> &Polygon {
        &self.normalized
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    pub fn coeffs(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    /// True if any of the reduced systems needed the Tikhonov fallback.
    pub fn regularized(&self) -> bool {
        self.regularized
    }

    /// `ê_{M,j} = Λ̂_j + Σ_ℓ w_ℓ ξ̂_j^ℓ` as nodal values on the reference mesh.
    pub fn reconstruct_on_reference(&self, j: usize) -> Vec<f64> {
        let mut v = self.db.liftings[j].clone();
        for (l, &w) in self.coeffs[j].iter().enumerate() {
            for (x, b) in v.iter_mut().zip(&self.db.basis[l][j]) {
                *x += w * b;
            }
        }
        v
    }

    /// All reconstructions at once.
    pub fn reconstruct_all(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|j| self.reconstruct_on_reference(j)).collect()
    }

    /// Reference point corresponding to a point of the given polygon.
    pub fn to_reference(&self, x: Point) -> Result<Point> {
        self.map.to_reference(self.similarity.to_normalized(x))
    }

    /// Values of `ê_{M,j} ∘ ℬ_K` at points of the polygon.
    pub fn evaluate_physical(&self, j: usize, points: &[Point]) -> Result<Vec<f64>> {
        let e = self.reconstruct_on_reference(j);
        points
            .iter()
            .map(|&x| {
                let xh = self.to_reference(x)?;
                self.db.ref_mesh.evaluate(&e, xh)
            })
            .collect()
    }

    /// `K^rb_{ab} = â_K(ê_a, ê_b)` for the diffusion tensor `k`, assembled from
    /// the bricks.
    pub fn energy_matrix(&self, k: Mat2) -> DenseMatrix {
        energy_matrix_from_bricks(self.db, &self.map, &self.coeffs, k)
    }
}

/// `â_K(ê_a, ê_b)` from the G, F and A bricks, where `ê_a = Λ̂_a + Σ w^a_ℓ ξ̂_a^ℓ`.
pub fn energy_matrix_from_bricks(db: &RbDatabase, map: &AffineMap, w: &[Vec<f64>], k: Mat2) -> DenseMatrix {
    let n = db.n;
    let b = &db.bricks;
    let m = w.first().map_or(0, |v| v.len());
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let gamma = map.tensor_coeffs(i, k);
        for (nu, &g) in gamma.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            // â(Λ_a, ξ_b^ℓ) = ±F(b, a, ℓ): the antisymmetric 𝒜⁴ flips the sign
            let swap_sign = if nu == 3 { -1.0 } else { 1.0 };
            for a in 0..n {
                for bb in 0..n {
                    let mut s = b.g(i, nu, a, bb);
                    for l in 0..m {
                        s += w[a][l] * b.f(i, nu, a, bb, l);
                        s += swap_sign * w[bb][l] * b.f(i, nu, bb, a, l);
                        let mut t = 0.0;
                        for lp in 0..m {
                            t += b.a(i, nu, a, bb, l, lp) * w[bb][lp];
                        }
                        s += w[a][l] * t;
                    }
                    out[(a, bb)] += g * s;
                }
            }
        }
    }
    out
}
