//! Error tables over a sequence of meshes, with observed convergence rates.

use std::fmt::Write as _;

use super::{error_norms, ErrorNorms, ReconMode};
use crate::error::{Error, Result};
use crate::polymesh::PolyMesh;
use crate::rb::RbLibrary;
use crate::vem::{assemble_and_solve, DiffusionProblem, SolveOptions, Stabilization};

pub const CSV_HEADER: &str = "h,ndof,mode,stab,err0,err1,errE,errInf,rate0,rate1,rateE,rateInf";

/// Errors of one reconstruction on one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub h: f64,
    pub ndof: usize,
    pub mode: String,
    pub stab: String,
    pub errors: ErrorNorms,
    /// `[rate0, rate1, rateE, rateInf]` against the previous record of the
    /// same `(mode, stab)`; `None` for the first one.
    pub rates: Option<[f64; 4]>,
}

impl ConvergenceRecord {
    fn values(&self) -> [f64; 4] {
        let e = &self.errors;
        [e.err0, e.err1, e.err_e, e.err_inf]
    }
}

/// Fills in `rates = log(e_k/e_{k−1}) / log(h_k/h_{k−1})` per `(mode, stab)`
/// sequence, in record order.
pub fn convergence_rates(records: &mut [ConvergenceRecord]) {
    for k in 0..records.len() {
        let prev = (0..k)
            .rev()
            .find(|&i| records[i].mode == records[k].mode && records[i].stab == records[k].stab);
        records[k].rates = prev.map(|i| {
            let (a, b) = (&records[i], &records[k]);
            let lh = (b.h / a.h).ln();
            let (ea, eb) = (a.values(), b.values());
            std::array::from_fn(|n| (eb[n] / ea[n]).ln() / lh)
        });
    }
}

/// Solves `prob` on each mesh (ordered by decreasing `h`) with one
/// stabilization and measures every requested reconstruction.
pub fn convergence_study(
    meshes: &[PolyMesh],
    prob: &DiffusionProblem,
    stab: Stabilization,
    modes: &[ReconMode],
    library: Option<&RbLibrary>,
) -> Result<Vec<ConvergenceRecord>> {
    if meshes.windows(2).any(|w| w[1].h() >= w[0].h()) {
        return Err(Error::InvalidArgument("meshes must be ordered by decreasing h".into()));
    }
    let mut opts = SolveOptions::new(stab);
    if let Some(lib) = library {
        opts = opts.with_library(lib);
    }
    let mut records = Vec::new();
    for mesh in meshes {
        let sol = assemble_and_solve(mesh, prob, &opts)?;
        for &mode in modes {
            let errors = error_norms(mesh, &sol.dofs, prob, mode, library)?;
            log::info!("h = {:.4e}, {stab}, {mode}: err1 = {:.4e}", mesh.h(), errors.err1);
            records.push(ConvergenceRecord {
                h: mesh.h(),
                ndof: mesh.num_vertices(),
                mode: mode.to_string(),
                stab: stab.to_string(),
                errors,
                rates: None,
            });
        }
    }
    convergence_rates(&mut records);
    Ok(records)
}

/// Records as CSV under [`CSV_HEADER`]; rate cells are empty where undefined.
pub fn records_to_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let e = r.values();
        let _ = write!(
            s,
            "{:.6e},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.h, r.ndof, r.mode, r.stab, e[0], e[1], e[2], e[3]
        );
        match r.rates {
            Some(q) => {
                let _ = writeln!(s, ",{:.4},{:.4},{:.4},{:.4}", q[0], q[1], q[2], q[3]);
            }
            None => s.push_str(",,,,\n"),
        }
    }
    s
}
