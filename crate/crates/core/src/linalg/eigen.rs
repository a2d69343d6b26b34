//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm target, relative to the input's Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = Z Λ Zᵀ` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues, non-increasing.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, same order as `values`.
    pub vectors: DenseMatrix,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, k)]).collect()
    }
}

fn off_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic-by-row Jacobi rotations until the off-diagonal mass is below
/// [`JACOBI_TOL`]·‖A‖_F.
///
/// Output is deterministic: eigenpairs are sorted by descending eigenvalue, each
/// eigenvector is signed so that its largest-magnitude entry is positive, and
/// exact ties are ordered by the row index of that dominant entry.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::InvalidArgument("eigen: matrix not square".into()));
    }
    let mut m = a.clone();
    // symmetrize to remove round-off asymmetry from the caller
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut z = DenseMatrix::identity(n);
    let target = JACOBI_TOL * a.frobenius().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off_norm(&m) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NumericFailure(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {:.3e})",
                off_norm(&m)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let zkp = z[(k, p)];
                    let zkq = z[(k, q)];
                    z[(k, p)] = c * zkp - s * zkq;
                    z[(k, q)] = s * zkp + c * zkq;
                }
            }
        }
    }

    // sign fix and dominant index per column
    let mut dominant = vec![0usize; n];
    for k in 0..n {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for r in 0..n {
            let v = z[(r, k)].abs();
            if v > best_abs {
                best_abs = v;
                best = r;
            }
        }
        dominant[k] = best;
        if z[(best, k)] < 0.0 {
            for r in 0..n {
                z[(r, k)] = -z[(r, k)];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let la = m[(a, a)];
        let lb = m[(b, b)];
        if (la - lb).abs() < 1e-14 {
            dominant[a].cmp(&dominant[b])
        } else {
            lb.partial_cmp(&la).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let values = order.iter().map(|&k| m[(k, k)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Number of eigenvalues of symmetric `a` below `x`, from the inertia of `a - xI`
    /// (Sylvester's law, elimination without pivoting).
    fn count_below(a: &DenseMatrix, x: f64) -> usize {
        let n = a.rows();
        let mut m = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] - if i == j { x } else { 0.0 });
        let mut neg = 0;
        for k in 0..n {
            let mut piv = m[(k, k)];
            if piv == 0.0 {
                piv = -1e-300;
            }
            if piv < 0.0 {
                neg += 1;
            }
            for i in k + 1..n {
                let f = m[(i, k)] / piv;
                for j in k + 1..n {
                    m[(i, j)] -= f * m[(k, j)];
                }
            }
        }
        neg
    }

    fn bisection_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
        let n = a.rows();
        let bound: f64 = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let mut out = Vec::new();
        // k-th largest eigenvalue: smallest x with count_below(x) >= n - k
        for k in 0..n {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(a, mid) >= n - k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    #[test]
    fn matches_bisection_oracle_on_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let data = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = DenseMatrix::from_row_major(5, 5, data);
            let a = b.add(&b.transpose());
            let eig = symmetric_eigen(&a).unwrap();
            let oracle = bisection_eigenvalues(&a);
            for (l, o) in eig.values.iter().zip(&oracle) {
                assert_abs_diff_eq!(*l, *o, epsilon = 1e-10);
            }
            for k in 0..5 {
                let z = eig.vector(k);
                let az = a.matvec(&z);
                for r in 0..5 {
                    assert_abs_diff_eq!(az[r], eig.values[k] * z[r], epsilon = 1e-10);
                }
            }
            let ztz = eig.vectors.transpose().matmul(&eig.vectors);
            for i in 0..5 {
                for j in 0..5 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ztz[(i, j)], e, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sign_convention_and_order() {
        let a = DenseMatrix::from_row_major(3, 3, vec![2., 0., 0., 0., 5., 0., 0., 0., -1.]);
        let e = symmetric_eigen(&a).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
        for k in 0..3 {
            let v = e.vector(k);
            let dom = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(dom > 0.0);
        }
    }

    #[test]
    fn ties_break_by_dominant_index() {
        let a = DenseMatrix::identity(4).scaled(3.0);
        let e = symmetric_eigen(&a).unwrap();
        for k in 0..4 {
            assert_eq!(e.vector(k)[k], 1.0);
        }
    }
}
