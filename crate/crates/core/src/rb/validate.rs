//! Accuracy statistics of the reduced-basis reconstruction on random test
//! polygons, measured against a fine finite element solution.
//!
//! For each polygon and dof vector `u`, the local VEM function with those
//! vertex values is approximated by
//! `u_M = Π^∇u + Σ_j (u_j − Π^∇u(v_j)) ê_{M,j} ∘ ℬ_K`
//! and compared with its finite element counterpart `u_fe` in the full H¹
//! norm. `M = 0` stands for `Π^∇u` alone.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::database::RbDatabase;
use super::online::reduced_solve;
use crate::error::{Error, Result};
use crate::fem::{harmonic_basis, level_for, norms, TriMesh};
use crate::geometry::{generate_convex_polygon, reference_polygon, Polygon};
use crate::linalg::Mat2;
use crate::par;
use crate::vem::{eval_linear, Projector};

/// How the vertex values of a test function are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DofCase {
    /// `x⁵ + y⁵` sampled at the (normalized) vertices.
    Smooth,
    /// Independent uniform(0, 1) values.
    Random,
}

impl DofCase {
    pub fn tag(self) -> &'static str {
        match self {
            DofCase::Smooth => "smooth",
            DofCase::Random => "random",
        }
    }
}

impl FromStr for DofCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(DofCase::Smooth),
            "random" => Ok(DofCase::Random),
            _ => Err(Error::InvalidArgument(format!("unknown dof case '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub tests: usize,
    /// Basis sizes to evaluate; 0 means `Π^∇u` alone.
    pub ms: Vec<usize>,
    pub seed: u64,
    /// Mesh size of the finite element reference solution; `None` uses the
    /// database's δ.
    pub delta_fe: Option<f64>,
    pub cases: Vec<DofCase>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            tests: 500,
            ms: vec![0, 1, 2, 5, 10, 20],
            seed: 2,
            delta_fe: None,
            cases: vec![DofCase::Smooth, DofCase::Random],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationRow {
    pub polygon: usize,
    pub case: DofCase,
    pub m: usize,
    /// `‖u_fe − u_M‖₁ / ‖u_fe‖₁`.
    pub error: f64,
}

/// Order statistics of one `(case, M)` group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub case: DofCase,
    pub m: usize,
    pub min: f64,
    pub p5: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub n: usize,
    pub rows: Vec<ValidationRow>,
    /// Test polygons whose reduced systems needed regularization.
    pub regularized: usize,
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ValidationReport {
    pub fn errors(&self, case: DofCase, m: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.case == case && r.m == m)
            .map(|r| r.error)
            .collect()
    }

    pub fn summary(&self, case: DofCase, m: usize) -> Summary {
        let mut e = self.errors(case, m);
        e.sort_by(f64::total_cmp);
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        Summary {
            case,
            m,
            min: percentile(&e, 0.0),
            p5: percentile(&e, 0.05),
            median: percentile(&e, 0.5),
            mean,
            p95: percentile(&e, 0.95),
            max: percentile(&e, 1.0),
        }
    }

    pub fn summaries(&self) -> Vec<Summary> {
        let mut keys: Vec<(DofCase, usize)> = self.rows.iter().map(|r| (r.case, r.m)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().map(|(c, m)| self.summary(c, m)).collect()
    }

    /// Per-polygon rows followed by summary rows, in one CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,n,case,m,polygon,error,min,p5,median,mean,p95,max\n");
        for r in &self.rows {
            let _ = writeln!(s, "row,{},{},{},{},{:.6e},,,,,,", self.n, r.case.tag(), r.m, r.polygon, r.error);
        }
        for q in self.summaries() {
            let _ = writeln!(
                s,
                "summary,{},{},{},,,{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                self.n,
                q.case.tag(),
                q.m,
                q.min,
                q.p5,
                q.median,
                q.mean,
                q.p95,
                q.max
            );
        }
        s
    }
}

/// Draws the test polygons and their dof vectors (sequentially, so the
/// outcome does not depend on scheduling).
fn draw_tests(n: usize, cfg: &ValidationConfig) -> Result<Vec<(Polygon, Vec<Vec<f64>>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.tests)
        .map(|_| {
            let p = generate_convex_polygon(n, &mut rng)?;
            let dofs = cfg
                .cases
                .iter()
                .map(|case| match case {
                    DofCase::Smooth => p.vertices().iter().map(|v| v[0].powi(5) + v[1].powi(5)).collect(),
                    DofCase::Random => (0..n).map(|_| rng.random::<f64>()).collect(),
                })
                .collect();
            Ok((p, dofs))
        })
        .collect()
}

/// Runs the validation for one database.
pub fn validate(db: &RbDatabase, cfg: &ValidationConfig) -> Result<ValidationReport> {
    let n = db.n;
    if let Some(&m) = cfg.ms.iter().find(|&&m| m > db.m_max) {
        return Err(Error::InvalidArgument(format!("M = {m} exceeds M_max = {}", db.m_max)));
    }
    let tests = draw_tests(n, cfg)?;
    let delta = cfg.delta_fe.unwrap_or(db.delta);
    // the reference mesh at the finest level used by any test polygon, with
    // the location of each of its nodes in the database's reference mesh
    let levels = tests
        .iter()
        .map(|(p, _)| level_for(p, delta).map(|l| l.max(db.ref_mesh.level())))
        .collect::<Result<Vec<_>>>()?;
    let khat = reference_polygon(n)?;
    let mut fine_refs = std::collections::BTreeMap::new();
    for &l in &levels {
        if let std::collections::btree_map::Entry::Vacant(e) = fine_refs.entry(l) {
            let fine = TriMesh::with_level(&khat, l)?;
            let loc = fine
                .nodes()
                .iter()
                .map(|&x| {
                    db.ref_mesh
                        .locate(x, 1e-10)
                        .map(|(t, b)| (db.ref_mesh.triangles()[t], b))
                        .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })
                })
                .collect::<Result<Vec<_>>>()?;
            e.insert(loc);
        }
    }
    let per_polygon = par::try_map_range(tests.len(), |t| -> Result<(Vec<ValidationRow>, bool)> {
        let (p, dofs) = &tests[t];
        let loc = &fine_refs[&levels[t]];
        let mesh = TriMesh::with_level(p, levels[t])?;
        let fe_basis = harmonic_basis(&mesh)?;
        let proj = Projector::new(p)?;
        let nn = mesh.num_nodes();
        let mut regularized = false;
        // ê_{M,j} at the fine nodes, per requested M
        let mut recon: Vec<(usize, Option<Vec<Vec<f64>>>)> = Vec::new();
        for &m in &cfg.ms {
            if m == 0 {
                recon.push((0, None));
                continue;
            }
            let eval = reduced_solve(p, db, m)?;
            regularized |= eval.regularized();
            let e = eval
                .reconstruct_all()
                .iter()
                .map(|ej| loc.iter().map(|(tri, b)| b[0] * ej[tri[0]] + b[1] * ej[tri[1]] + b[2] * ej[tri[2]]).collect())
                .collect();
            recon.push((m, Some(e)));
        }
        let mut rows = Vec::new();
        for (case, u) in cfg.cases.iter().zip(dofs) {
            let mut fe = vec![0.0; nn];
            for (uj, b) in u.iter().zip(&fe_basis) {
                fe.iter_mut().zip(b).for_each(|(f, v)| *f += uj * v);
            }
            let fe_norm = norms(&mesh, &fe, Mat2::IDENTITY).h1();
            let pi = proj.apply(u);
            let pi_nodes: Vec<f64> = mesh.nodes().iter().map(|&x| eval_linear(pi, x)).collect();
            let corr: Vec<f64> = (0..n).map(|j| u[j] - eval_linear(pi, p.vertex(j))).collect();
            for (m, e) in &recon {
                let mut approx = pi_nodes.clone();
                if let Some(e) = e {
                    for (cj, ej) in corr.iter().zip(e) {
                        approx.iter_mut().zip(ej).for_each(|(a, v)| *a += cj * v);
                    }
                }
                let diff: Vec<f64> = fe.iter().zip(&approx).map(|(a, b)| a - b).collect();
                rows.push(ValidationRow {
                    polygon: t,
                    case: *case,
                    m: *m,
                    error: norms(&mesh, &diff, Mat2::IDENTITY).h1() / fe_norm,
                });
            }
        }
        Ok((rows, regularized))
    })?;
    let regularized = per_polygon.iter().filter(|(_, r)| *r).count();
    Ok(ValidationReport {
        n,
        rows: per_polygon.into_iter().flat_map(|(r, _)| r).collect(),
        regularized,
    })
}
