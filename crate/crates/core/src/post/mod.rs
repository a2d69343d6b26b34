//! Post-processing of a VEM solution: conforming reconstruction from the dofs,
//! relative error norms against a manufactured solution, line sampling,
//! field export and the convergence harness.
//!
//! Three reconstructions of the discrete solution are available per cell:
//!
//! * `Π^∇u_h`, the linear projection (discontinuous across cells);
//! * `u_M^rb = Π^∇u_h + Σ_j (u_j − Π^∇u_h(v_j)) e_{M,j}`, with the reduced-basis
//!   approximation of the local basis functions;
//! * `u_h^fe`, a fine finite element solve of the local harmonic problem with
//!   the dofs as piecewise linear boundary data.

mod convergence;
mod field;

pub use convergence::{convergence_rates, convergence_study, records_to_csv, ConvergenceRecord, CSV_HEADER};
pub use field::{field_to_text, FIELD_VERSION};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{solve_dirichlet, TriMesh};
use crate::geometry::{lerp, Point, Polygon};
use crate::linalg::Mat2;
use crate::par;
use crate::polymesh::{CellLocator, PolyMesh};
use crate::rb::{reduced_solve, RbLibrary};
use crate::vem::{eval_linear, DiffusionProblem, ExactFn, Projector};

/// Refinement level of the per-cell evaluation mesh of `Π^∇u_h`.
pub const PROJECTION_LEVEL: u32 = 2;

/// Default fine mesh size of the finite element reconstruction, relative to
/// the cell diameter.
pub const DEFAULT_FE_DELTA: f64 = 0.01;

/// Which reconstruction of the discrete solution to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReconMode {
    Projection,
    Rb { m: usize },
    /// Finite element solve on a cell triangulation of size `rel_delta·h_K`.
    Fe { rel_delta: f64 },
}

impl ReconMode {
    /// True for the reconstructions that are continuous across cells.
    pub fn is_conforming(self) -> bool {
        !matches!(self, ReconMode::Projection)
    }
}

impl fmt::Display for ReconMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconMode::Projection => write!(f, "pi"),
            ReconMode::Rb { m } => write!(f, "rb:{m}"),
            ReconMode::Fe { rel_delta } => write!(f, "fe:{rel_delta}"),
        }
    }
}

impl FromStr for ReconMode {
    type Err = Error;

    /// Accepts `pi`, `rb`, `rb:<M>`, `fe` and `fe:<relative δ>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown reconstruction mode '{s}'"));
        match s {
            "pi" => Ok(ReconMode::Projection),
            "rb" => Ok(ReconMode::Rb { m: 1 }),
            "fe" => Ok(ReconMode::Fe {
                rel_delta: DEFAULT_FE_DELTA,
            }),
            _ => {
                if let Some(m) = s.strip_prefix("rb:") {
                    m.parse().map(|m| ReconMode::Rb { m }).map_err(|_| bad())
                } else if let Some(d) = s.strip_prefix("fe:") {
                    match d.parse::<f64>() {
                        Ok(d) if d > 0.0 && d.is_finite() => Ok(ReconMode::Fe { rel_delta: d }),
                        _ => Err(bad()),
                    }
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// Reconstruction of the discrete solution on one cell, sampled at the nodes
/// of a per-cell evaluation triangulation.
#[derive(Clone, Debug)]
pub struct CellReconstruction {
    pub mode: ReconMode,
    pub mesh: TriMesh,
    pub values: Vec<f64>,
    /// `Π^∇u_h` as `[a0, a1, a2]`; the projection mode is exactly this
    /// polynomial, not its interpolant.
    pub projection: [f64; 3],
    /// Database vertex count and `M` (rb) or absolute δ (fe).
    pub provenance: String,
}

impl CellReconstruction {
    /// Value at a point of the cell.
    pub fn value_at(&self, x: Point) -> Result<f64> {
        match self.mode {
            ReconMode::Projection => Ok(eval_linear(self.projection, x)),
            _ => self.mesh.evaluate(&self.values, x),
        }
    }

    /// Values at the polygon vertices.
    pub fn vertex_values(&self) -> Vec<f64> {
        let p = self.mesh.polygon();
        (0..p.n())
            .map(|i| match self.mode {
                ReconMode::Projection => eval_linear(self.projection, p.vertex(i)),
                _ => self.values[self.mesh.vertex_node(i)],
            })
            .collect()
    }
}

/// Rebuilds the discrete solution with local dofs `dofs` on `cell`.
pub fn reconstruct_cell(
    cell: &Polygon,
    dofs: &[f64],
    mode: ReconMode,
    library: Option<&RbLibrary>,
) -> Result<CellReconstruction> {
    let n = cell.n();
    if dofs.len() != n {
        return Err(Error::InvalidArgument(format!("{} dofs for a cell with {n} vertices", dofs.len())));
    }
    let projection = Projector::new(cell)?.apply(dofs);
    let (mesh, values, provenance) = match mode {
        ReconMode::Projection => {
            let mesh = TriMesh::with_level(cell, PROJECTION_LEVEL)?;
            let values = mesh.nodes().iter().map(|&x| eval_linear(projection, x)).collect();
            (mesh, values, "projection".to_string())
        }
        ReconMode::Rb { m } => {
            let db = library.ok_or(Error::NoDatabaseForN(n))?.get(n)?;
            let eval = reduced_solve(cell, db, m)?;
            // node k of this mesh is the pre-image of node k of the reference mesh
            let mesh = TriMesh::with_level(cell, db.ref_mesh.level())?;
            let mut values: Vec<f64> = mesh.nodes().iter().map(|&x| eval_linear(projection, x)).collect();
            for j in 0..n {
                let corr = dofs[j] - eval_linear(projection, cell.vertex(j));
                let e = eval.reconstruct_on_reference(j);
                values.iter_mut().zip(&e).for_each(|(v, ej)| *v += corr * ej);
            }
            (mesh, values, format!("rb n={n} m={m}"))
        }
        ReconMode::Fe { rel_delta } => {
            let delta = rel_delta * cell.diameter();
            let mesh = TriMesh::triangulate(cell, delta)?;
            let values = solve_dirichlet(&mesh, Mat2::IDENTITY, &mesh.boundary_trace(dofs), None)?;
            (mesh, values, format!("fe delta={delta:.6e}"))
        }
    };
    Ok(CellReconstruction {
        mode,
        mesh,
        values,
        projection,
        provenance,
    })
}

/// Local dof vector of cell `c`.
pub fn cell_dofs(mesh: &PolyMesh, c: usize, dofs: &[f64]) -> Vec<f64> {
    mesh.cells()[c].iter().map(|&v| dofs[v]).collect()
}

/// Reconstruction on cell `c` of a mesh.
pub fn reconstruct_mesh_cell(
    mesh: &PolyMesh,
    c: usize,
    dofs: &[f64],
    mode: ReconMode,
    library: Option<&RbLibrary>,
) -> Result<CellReconstruction> {
    check_dofs(mesh, dofs)?;
    let build = || reconstruct_cell(&mesh.cell_polygon(c)?, &cell_dofs(mesh, c, dofs), mode, library);
    build().map_err(|e| e.in_cell(c))
}

fn check_dofs(mesh: &PolyMesh, dofs: &[f64]) -> Result<()> {
    if dofs.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "{} dofs for a mesh with {} vertices",
            dofs.len(),
            mesh.num_vertices()
        )));
    }
    Ok(())
}

/// Relative errors of one reconstruction against the exact solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    /// L² error over L² norm.
    pub err0: f64,
    /// Full H¹ error over full H¹ norm.
    pub err1: f64,
    /// Energy error with the symmetric part of the diffusion tensor.
    pub err_e: f64,
    /// Max nodal error over max nodal value, on the evaluation nodes.
    pub err_inf: f64,
}

/// Squared contributions of one cell: `(error, exact)` each as
/// `[l2, h1_semi, energy]`, and the nodal maxima.
#[derive(Clone, Copy, Debug, Default)]
struct CellSums {
    err: [f64; 3],
    exact: [f64; 3],
    err_max: f64,
    exact_max: f64,
}

/// Seven-point degree-five rule on a triangle (barycentric points, weights
/// summing to one).
const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Edge-midpoint rule, exact for quadratics.
const MIDPOINTS: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// Integrates the error of one cell reconstruction. The projection is
/// integrated exactly as a polynomial with a degree-5 rule; P1 fields on the
/// fine evaluation meshes use the edge-midpoint rule.
fn cell_sums(rec: &CellReconstruction, k: Mat2, exact: &ExactFn) -> CellSums {
    let ks = k.sym_part();
    let mesh = &rec.mesh;
    let mut s = CellSums::default();
    let rule: &[([f64; 3], f64)] = match rec.mode {
        ReconMode::Projection => &DUNAVANT5,
        _ => &MIDPOINTS,
    };
    let pg = [rec.projection[1], rec.projection[2]];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let g = match rec.mode {
            ReconMode::Projection => pg,
            _ => mesh.gradient(&rec.values, t),
        };
        for (b, w) in rule {
            let x = [
                b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
            ];
            let uh = match rec.mode {
                ReconMode::Projection => eval_linear(rec.projection, x),
                _ => b[0] * rec.values[tri[0]] + b[1] * rec.values[tri[1]] + b[2] * rec.values[tri[2]],
            };
            let (u, gu) = exact(x);
            let e = u - uh;
            let de = [gu[0] - g[0], gu[1] - g[1]];
            let wa = w * area;
            s.err[0] += wa * e * e;
            s.err[1] += wa * (de[0] * de[0] + de[1] * de[1]);
            s.err[2] += wa * ks.bilinear(de, de);
            s.exact[0] += wa * u * u;
            s.exact[1] += wa * (gu[0] * gu[0] + gu[1] * gu[1]);
            s.exact[2] += wa * ks.bilinear(gu, gu);
        }
    }
    for (node, &x) in mesh.nodes().iter().enumerate() {
        let u = exact(x).0;
        let uh = match rec.mode {
            ReconMode::Projection => eval_linear(rec.projection, x),
            _ => rec.values[node],
        };
        s.err_max = s.err_max.max((u - uh).abs());
        s.exact_max = s.exact_max.max(u.abs());
    }
    s
}

/// Relative error norms of a reconstruction of `dofs` against `prob.exact`.
///
/// Cells are processed in parallel and reduced in cell order.
pub fn error_norms(
    mesh: &PolyMesh,
    dofs: &[f64],
    prob: &DiffusionProblem,
    mode: ReconMode,
    library: Option<&RbLibrary>,
) -> Result<ErrorNorms> {
    let exact = prob
        .exact
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("problem '{}' has no exact solution", prob.name)))?;
    check_dofs(mesh, dofs)?;
    let cells = par::try_map_range(mesh.num_cells(), |c| {
        reconstruct_mesh_cell(mesh, c, dofs, mode, library).map(|rec| cell_sums(&rec, prob.k, exact))
    })?;
    let mut total = CellSums::default();
    for s in &cells {
        for i in 0..3 {
            total.err[i] += s.err[i];
            total.exact[i] += s.exact[i];
        }
        total.err_max = total.err_max.max(s.err_max);
        total.exact_max = total.exact_max.max(s.exact_max);
    }
    Ok(ErrorNorms {
        err0: (total.err[0] / total.exact[0]).sqrt(),
        err1: ((total.err[0] + total.err[1]) / (total.exact[0] + total.exact[1])).sqrt(),
        err_e: (total.err[2] / total.exact[2]).sqrt(),
        err_inf: total.err_max / total.exact_max,
    })
}

/// Agreement of the per-cell reconstructions at mesh vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Conformity {
    /// Largest spread of the values that the cells sharing a vertex assign to it.
    pub max_jump: f64,
    /// Largest gap between a reconstruction at a vertex and the dof there.
    pub max_dof_gap: f64,
}

/// Vertex-agreement statistics of a reconstruction over the whole mesh.
pub fn conformity(mesh: &PolyMesh, dofs: &[f64], mode: ReconMode, library: Option<&RbLibrary>) -> Result<Conformity> {
    check_dofs(mesh, dofs)?;
    let per_cell = par::try_map_range(mesh.num_cells(), |c| {
        reconstruct_mesh_cell(mesh, c, dofs, mode, library).map(|rec| rec.vertex_values())
    })?;
    let nv = mesh.num_vertices();
    let mut lo = vec![f64::INFINITY; nv];
    let mut hi = vec![f64::NEG_INFINITY; nv];
    let mut out = Conformity::default();
    for (c, vals) in per_cell.iter().enumerate() {
        for (&v, &x) in mesh.cells()[c].iter().zip(vals) {
            lo[v] = lo[v].min(x);
            hi[v] = hi[v].max(x);
            out.max_dof_gap = out.max_dof_gap.max((x - dofs[v]).abs());
        }
    }
    out.max_jump = lo.iter().zip(&hi).filter(|(l, _)| l.is_finite()).map(|(l, h)| h - l).fold(0.0, f64::max);
    Ok(out)
}

/// One point of a line sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSample {
    /// Parameter along the segment, in `[0, 1]`.
    pub t: f64,
    pub point: Point,
    /// `(cell, value)` pairs: a single entry from the lowest-index containing
    /// cell, or one entry per containing cell for the projection mode.
    pub values: Vec<(usize, f64)>,
}

/// Samples the reconstruction at `count` equispaced points from `a` to `b`.
pub fn line_sample(
    mesh: &PolyMesh,
    dofs: &[f64],
    a: Point,
    b: Point,
    count: usize,
    mode: ReconMode,
    library: Option<&RbLibrary>,
) -> Result<Vec<LineSample>> {
    check_dofs(mesh, dofs)?;
    if count < 2 {
        return Err(Error::InvalidArgument("a line sample needs at least two points".into()));
    }
    let locator = CellLocator::new(mesh);
    let points: Vec<(f64, Point, Vec<usize>)> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            let x = lerp(a, b, t);
            let mut cells = locator.locate_all(mesh, x);
            if cells.is_empty() {
                return Err(Error::OutOfDomain { x: x[0], y: x[1] });
            }
            if mode.is_conforming() {
                cells.truncate(1);
            }
            Ok((t, x, cells))
        })
        .collect::<Result<_>>()?;
    let mut needed: Vec<usize> = points.iter().flat_map(|(_, _, c)| c.iter().copied()).collect();
    needed.sort_unstable();
    needed.dedup();
    let recs = par::try_map_range(needed.len(), |i| reconstruct_mesh_cell(mesh, needed[i], dofs, mode, library))?;
    let by_cell: HashMap<usize, &CellReconstruction> = needed.iter().copied().zip(recs.iter()).collect();
    points
        .into_iter()
        .map(|(t, point, cells)| {
            let values = cells
                .into_iter()
                .map(|c| by_cell[&c].value_at(point).map(|v| (c, v)).map_err(|e| e.in_cell(c)))
                .collect::<Result<_>>()?;
            Ok(LineSample { t, point, values })
        })
        .collect()
}

/// Line sample as CSV: `t,x,y,cell,value`, one row per reported value.
pub fn line_sample_to_csv(samples: &[LineSample]) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("t,x,y,cell,value\n");
    for p in samples {
        for (c, v) in &p.values {
            let _ = writeln!(s, "{:.10},{:.10},{:.10},{c},{v:.12e}", p.t, p.point[0], p.point[1]);
        }
    }
    s
}
