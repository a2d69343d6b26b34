//! Compressed sparse row matrices and the linear solvers used by the finite
//! element and virtual element assemblies.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Above this many unknowns the SPD path switches from Cholesky to CG.
pub const DIRECT_LIMIT: usize = 1_500_000;
pub const CG_TOL: f64 = 1e-12;
pub const CG_MAX_ITERS: usize = 100_000;
/// Accepted normwise backward error ‖b − Ax‖ / (‖A‖∞‖x‖∞ + ‖b‖∞) of a direct solve.
pub const BACKWARD_ERROR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in the
    /// order they were pushed, so a fixed push order gives bit-identical values.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Max row sum of absolute values.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m = m.max((v - self.get(c, r)).abs());
            }
        }
        m
    }

    /// Rows `rows` and columns `cols` (given as index lists) as a new matrix.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut t = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    t.push((k, col_map[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &t)
    }

    pub fn dense(&self) -> crate::linalg::DenseMatrix {
        let mut d = crate::linalg::DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::NumericFailure(format!("sparse conversion: {e:?}")))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factorized (or iteratively solved) square sparse system.
pub struct SparseSolver {
    matrix: CsrMatrix,
    kind: SolverKind,
}

enum SolverKind {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Cg { inv_diag: Vec<f64> },
}

impl SparseSolver {
    /// Symmetric positive definite system: sparse Cholesky, falling back to
    /// Jacobi-preconditioned CG above [`DIRECT_LIMIT`] or if the factorization fails.
    pub fn spd(matrix: CsrMatrix) -> Result<Self> {
        check_square(&matrix)?;
        if matrix.nrows() <= DIRECT_LIMIT {
            match matrix.to_faer()?.sp_cholesky(Side::Lower) {
                Ok(llt) => {
                    return Ok(Self {
                        matrix,
                        kind: SolverKind::Cholesky(llt),
                    })
                }
                Err(e) => log::warn!("sparse Cholesky failed ({e:?}); falling back to CG"),
            }
        }
        Ok(Self::cg(matrix))
    }

    /// General square system: sparse LU with partial pivoting.
    pub fn general(matrix: CsrMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::SolverFailure {
                residual: f64::NAN,
                reason: format!("sparse LU failed: {e:?}"),
            })?;
        Ok(Self {
            matrix,
            kind: SolverKind::Lu(lu),
        })
    }

    /// Picks Cholesky when `matrix` is symmetric to round-off, LU otherwise.
    pub fn auto(matrix: CsrMatrix) -> Result<Self> {
        let tol = 1e-13 * matrix.norm_inf().max(f64::MIN_POSITIVE);
        if matrix.max_asymmetry() <= tol {
            Self::spd(matrix)
        } else {
            Self::general(matrix)
        }
    }

    pub fn cg(matrix: CsrMatrix) -> Self {
        let inv_diag = matrix
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self {
            matrix,
            kind: SolverKind::Cg { inv_diag },
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_direct(&self) -> bool {
        !matches!(self.kind, SolverKind::Cg { .. })
    }

    fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let denom = self.matrix.norm_inf() * inf_norm(x) + inf_norm(b);
        if denom == 0.0 {
            0.0
        } else {
            inf_norm(&r) / denom
        }
    }

    fn direct_solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let b = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        let x = match &self.kind {
            SolverKind::Cholesky(llt) => llt.solve(&b),
            SolverKind::Lu(lu) => lu.solve(&b),
            SolverKind::Cg { .. } => unreachable!(),
        };
        (0..rhs.len())
            .map(|j| (0..n).map(|i| x[(i, j)]).collect())
            .collect()
    }

    /// Solves for several right-hand sides with one factorization.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        for b in rhs {
            if b.len() != self.dim() {
                return Err(Error::InvalidArgument("rhs length mismatch".into()));
            }
        }
        if rhs.is_empty() || self.dim() == 0 {
            return Ok(rhs.iter().map(|_| vec![0.0; self.dim()]).collect());
        }
        if let SolverKind::Cg { inv_diag } = &self.kind {
            return rhs.iter().map(|b| self.run_cg(inv_diag, b)).collect();
        }
        let mut xs = self.direct_solve_many(rhs);
        // iterative refinement on the columns that miss the target
        for _ in 0..3 {
            let bad: Vec<usize> = (0..rhs.len())
                .filter(|&j| self.backward_error(&xs[j], &rhs[j]) > BACKWARD_ERROR_TOL)
                .collect();
            if bad.is_empty() {
                break;
            }
            let residuals: Vec<Vec<f64>> = bad
                .iter()
                .map(|&j| {
                    let ax = self.matrix.matvec(&xs[j]);
                    rhs[j].iter().zip(&ax).map(|(b, a)| b - a).collect()
                })
                .collect();
            let corr = self.direct_solve_many(&residuals);
            for (k, &j) in bad.iter().enumerate() {
                for (x, d) in xs[j].iter_mut().zip(&corr[k]) {
                    *x += d;
                }
            }
        }
        for (x, b) in xs.iter().zip(rhs) {
            let be = self.backward_error(x, b);
            if !(be <= BACKWARD_ERROR_TOL * 100.0) {
                return Err(Error::SolverFailure {
                    residual: be,
                    reason: "direct solve did not reach the backward-error target".into(),
                });
            }
        }
        Ok(xs)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(std::slice::from_ref(&b.to_vec()))?.remove(0))
    }

    /// Solves `Aᵀ x = b` (only for factorizations that support it).
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let bm = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = match &self.kind {
            SolverKind::Cholesky(llt) => llt.solve(&bm),
            SolverKind::Lu(lu) => lu.solve_transpose(&bm),
            SolverKind::Cg { inv_diag } => return self.run_cg(inv_diag, b),
        };
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }

    fn run_cg(&self, inv_diag: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let (x, rel, iters) = pcg(&self.matrix, inv_diag, b, CG_TOL, CG_MAX_ITERS);
        if rel > CG_TOL {
            return Err(Error::SolverFailure {
                residual: rel,
                reason: format!("CG did not converge in {iters} iterations"),
            });
        }
        Ok(x)
    }
}

fn check_square(m: &CsrMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "solver needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradients. Returns `(x, ‖r‖/‖b‖, iterations)`.
pub fn pcg(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> (Vec<f64>, f64, usize) {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0.0, 0);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iters {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return (x, rel, it + 1);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, rel, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 0.5)]);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian_1d(200);
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let x1 = SparseSolver::spd(a.clone()).unwrap().solve(&b).unwrap();
        let x2 = SparseSolver::cg(a.clone()).solve(&b).unwrap();
        let x3 = SparseSolver::general(a).unwrap().solve(&b).unwrap();
        for i in 0..200 {
            assert_abs_diff_eq!(x1[i], x2[i], epsilon = 1e-8);
            assert_abs_diff_eq!(x1[i], x3[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn transpose_solve_of_nonsymmetric() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 2.0), (1, 2, -1.0)],
        );
        let s = SparseSolver::auto(a.clone()).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = s.solve_transpose(&b).unwrap();
        let atx = a.transpose().matvec(&x);
        for i in 0..3 {
            assert_abs_diff_eq!(atx[i], b[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn submatrix_extracts_block() {
        let a = laplacian_1d(5);
        let s = a.submatrix(&[1, 2, 3], &[1, 2, 3]);
        assert_eq!(s.dense(), laplacian_1d(3).dense());
    }
}
