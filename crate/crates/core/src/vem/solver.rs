//! Global assembly and solution of the VEM system, plus condition-number
//! estimation of the assembled operator.

use std::fmt;
use std::str::FromStr;

use super::local::{local_consistency, local_rhs, stab_dofi_dofi, stab_drecipe, stab_rb, Projector};
use super::problem::DiffusionProblem;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, SparseSolver};
use crate::par;
use crate::polymesh::PolyMesh;
use crate::rb::{reduced_solve, RbLibrary};

/// Choice of the stabilizing bilinear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stabilization {
    DofiDofi,
    DRecipe,
    /// Reduced-basis stabilization with `m` basis members per vertex.
    Rb { m: usize },
}

impl fmt::Display for Stabilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stabilization::DofiDofi => write!(f, "dofi"),
            Stabilization::DRecipe => write!(f, "drecipe"),
            Stabilization::Rb { m } => write!(f, "rb:{m}"),
        }
    }
}

impl FromStr for Stabilization {
    type Err = Error;

    /// Accepts `dofi`, `drecipe`, `rb` (M = 1) and `rb:<M>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dofi" => Ok(Stabilization::DofiDofi),
            "drecipe" => Ok(Stabilization::DRecipe),
            "rb" => Ok(Stabilization::Rb { m: 1 }),
            _ => s
                .strip_prefix("rb:")
                .and_then(|m| m.parse().ok())
                .map(|m| Stabilization::Rb { m })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown stabilization '{s}'"))),
        }
    }
}

/// What to do with a cell whose vertex count has no database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    Error,
    /// Use dofi-dofi on that cell and log the downgrade.
    DofiDofi,
}

#[derive(Clone, Copy)]
pub struct SolveOptions<'a> {
    pub stab: Stabilization,
    pub library: Option<&'a RbLibrary>,
    pub fallback: Fallback,
}

impl<'a> SolveOptions<'a> {
    pub fn new(stab: Stabilization) -> Self {
        Self {
            stab,
            library: None,
            fallback: Fallback::Error,
        }
    }

    pub fn with_library(mut self, library: &'a RbLibrary) -> Self {
        self.library = Some(library);
        self
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }
}

/// Local matrices of one cell.
#[derive(Clone, Debug)]
pub struct LocalVem {
    pub projector: Projector,
    pub consistency: DenseMatrix,
    pub stabilization: DenseMatrix,
    pub rhs: Vec<f64>,
    /// True when the requested stabilization was replaced by dofi-dofi.
    pub downgraded: bool,
}

impl LocalVem {
    /// `E = consistency + stabilization`, with `E[i][j] = a_h^K(e_i, e_j)`.
    pub fn matrix(&self) -> DenseMatrix {
        self.consistency.add(&self.stabilization)
    }
}

/// Builds the local operators of cell `c`.
pub fn local_vem(mesh: &PolyMesh, c: usize, prob: &DiffusionProblem, opts: &SolveOptions<'_>) -> Result<LocalVem> {
    let build = || -> Result<LocalVem> {
        let cell = mesh.cell_polygon(c)?;
        let projector = Projector::new(&cell)?;
        let consistency = local_consistency(&projector, prob.k);
        let mut downgraded = false;
        let stabilization = match opts.stab {
            Stabilization::DofiDofi => stab_dofi_dofi(&projector),
            Stabilization::DRecipe => stab_drecipe(&projector, prob.k),
            Stabilization::Rb { m } => {
                let db = opts
                    .library
                    .ok_or(Error::NoDatabaseForN(cell.n()))
                    .and_then(|lib| lib.get(cell.n()));
                match (db, opts.fallback) {
                    (Ok(db), _) => {
                        let eval = reduced_solve(&cell, db, m)?;
                        stab_rb(&projector, &eval, prob.k)
                    }
                    (Err(Error::NoDatabaseForN(n)), Fallback::DofiDofi) => {
                        log::warn!("cell {c}: no database for N = {n}, using dofi-dofi");
                        downgraded = true;
                        stab_dofi_dofi(&projector)
                    }
                    (Err(e), _) => return Err(e),
                }
            }
        };
        let rhs = local_rhs(&cell, prob.f.as_ref());
        Ok(LocalVem {
            projector,
            consistency,
            stabilization,
            rhs,
            downgraded,
        })
    };
    build().map_err(|e| e.in_cell(c))
}

/// Assembled global system before boundary conditions.
///
/// `matrix[i][j] = a_h(e_j, e_i)`: row = test function, column = trial
/// function, so that `matrix · u = load` is the discrete problem.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub load: Vec<f64>,
    pub downgraded_cells: usize,
}

/// Assembles the global matrix and load vector in cell order.
pub fn assemble(mesh: &PolyMesh, prob: &DiffusionProblem, opts: &SolveOptions<'_>) -> Result<GlobalSystem> {
    let locals = par::try_map_range(mesh.num_cells(), |c| local_vem(mesh, c, prob, opts))?;
    let nv = mesh.num_vertices();
    let mut trip = Vec::new();
    let mut load = vec![0.0; nv];
    let mut downgraded_cells = 0;
    for (c, local) in locals.iter().enumerate() {
        let idx = &mesh.cells()[c];
        let e = local.matrix();
        for (a, &i) in idx.iter().enumerate() {
            load[i] += local.rhs[a];
            for (b, &j) in idx.iter().enumerate() {
                trip.push((i, j, e[(b, a)]));
            }
        }
        downgraded_cells += local.downgraded as usize;
    }
    Ok(GlobalSystem {
        matrix: CsrMatrix::from_triplets(nv, nv, &trip),
        load,
        downgraded_cells,
    })
}

/// Discrete solution with the reduced interior operator kept for diagnostics.
#[derive(Clone, Debug)]
pub struct VemSolution {
    /// One value per mesh vertex.
    pub dofs: Vec<f64>,
    pub interior: Vec<usize>,
    /// Interior block of the global matrix.
    pub interior_matrix: CsrMatrix,
    pub residual: f64,
    pub downgraded_cells: usize,
}

/// Interior-dof relative residual target of the global solve.
pub const GLOBAL_RESIDUAL_TOL: f64 = 1e-12;

/// Assembles and solves the problem with Dirichlet data at boundary vertices.
pub fn assemble_and_solve(mesh: &PolyMesh, prob: &DiffusionProblem, opts: &SolveOptions<'_>) -> Result<VemSolution> {
    let sys = assemble(mesh, prob, opts)?;
    let nv = mesh.num_vertices();
    let interior: Vec<usize> = (0..nv).filter(|&v| !mesh.is_boundary(v)).collect();
    let boundary: Vec<usize> = (0..nv).filter(|&v| mesh.is_boundary(v)).collect();
    let mut dofs = vec![0.0; nv];
    for &v in &boundary {
        dofs[v] = (prob.g)(mesh.vertices()[v]);
    }
    let a_ii = sys.matrix.submatrix(&interior, &interior);
    let a_ib = sys.matrix.submatrix(&interior, &boundary);
    let ub: Vec<f64> = boundary.iter().map(|&v| dofs[v]).collect();
    let lift = a_ib.matvec(&ub);
    let rhs: Vec<f64> = interior.iter().zip(&lift).map(|(&v, l)| sys.load[v] - l).collect();
    let mut residual = 0.0;
    if !interior.is_empty() {
        let solver = if prob.has_symmetric_tensor() {
            SparseSolver::spd(a_ii.clone())?
        } else {
            SparseSolver::general(a_ii.clone())?
        };
        let ui = solver.solve(&rhs)?;
        let r = a_ii.matvec(&ui);
        let num = r.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        residual = if den > 0.0 { num / den } else { num };
        if residual > GLOBAL_RESIDUAL_TOL {
            log::debug!("global solve relative residual {residual:.3e}");
        }
        for (&v, x) in interior.iter().zip(ui) {
            dofs[v] = x;
        }
    }
    Ok(VemSolution {
        dofs,
        interior,
        interior_matrix: a_ii,
        residual,
        downgraded_cells: sys.downgraded_cells,
    })
}

/// Power-iteration tolerance on the relative change of the Rayleigh quotient.
pub const CONDITION_TOL: f64 = 1e-6;
const CONDITION_MAX_ITERS: usize = 20_000;

/// Estimated 2-norm condition number `σ_max/σ_min`: power iteration on `AᵀA`
/// for the largest singular value and inverse iteration (reusing one sparse
/// factorization) for the smallest.
pub fn condition_estimate(a: &CsrMatrix) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let at = a.transpose();
    let symmetric = a.max_asymmetry() <= 1e-13 * a.norm_inf();
    let solver = if symmetric {
        SparseSolver::auto(a.clone())?
    } else {
        SparseSolver::general(a.clone())?
    };
    let smax2 = power_iteration(n, |x| Ok(at.matvec(&a.matvec(x))))?;
    let inv = power_iteration(n, |x| {
        let y = solver.solve(x)?;
        solver.solve_transpose(&y)
    })?;
    if !(inv > 0.0) {
        return Err(Error::NumericFailure("singular operator".into()));
    }
    Ok((smax2 * inv).sqrt())
}

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
fn power_iteration(n: usize, op: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<f64> {
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    normalize(&mut x);
    let mut lambda = 0.0f64;
    for _ in 0..CONDITION_MAX_ITERS {
        let mut y = op(&x)?;
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let nrm = normalize(&mut y);
        if nrm == 0.0 || !nrm.is_finite() {
            return Ok(0.0);
        }
        x = y;
        if (next - lambda).abs() <= CONDITION_TOL * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    log::warn!("power iteration hit its cap; returning the last estimate");
    Ok(lambda)
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Convenience: κ of the interior operator of a solved problem.
pub fn solution_condition(sol: &VemSolution) -> Result<f64> {
    condition_estimate(&sol.interior_matrix)
}

/// Interior operator without solving (for condition studies).
pub fn interior_operator(mesh: &PolyMesh, prob: &DiffusionProblem, opts: &SolveOptions<'_>) -> Result<CsrMatrix> {
    let sys = assemble(mesh, prob, opts)?;
    let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !mesh.is_boundary(v)).collect();
    Ok(sys.matrix.submatrix(&interior, &interior))
}
