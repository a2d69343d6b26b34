//! Wall-clock comparison of the three ways of evaluating a VEM function on a
//! polygon: the projection `Π^∇`, the finite element solve and the online
//! reduced-basis phase.
//!
//! All timings are per polygon, averaged, and taken on the calling thread.
//! The cheap methods (`Π^∇` and the reduced-basis phase) take microseconds per
//! polygon, so their batches are repeated and the fastest repetition is kept;
//! the finite element batch runs once, its cost dwarfs the timer noise.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{DirichletSolver, TriMesh};
use crate::geometry::{generate_convex_polygon, normalize, AffineMap, Polygon};
use crate::linalg::Mat2;
use crate::rb::{reduced_system, solve_reduced, RbDatabase};
use crate::vem::{eval_linear, Projector};

#[derive(Clone, Debug)]
pub struct TimingConfig {
    pub polygons: usize,
    /// Reduced basis sizes to time.
    pub ms: Vec<usize>,
    /// Mesh size of the finite element solve on the normalized polygon.
    pub fe_delta: f64,
    pub seed: u64,
    /// Repetitions of the `Π^∇` and reduced-basis batches (best one kept).
    pub repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            polygons: 100,
            ms: vec![1, 5, 30, 60],
            fe_delta: 0.01,
            seed: 4,
            repeats: 5,
        }
    }
}

/// Mean seconds per polygon; phases a method does not have are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    /// `pi`, `fe` or `rb`.
    pub method: &'static str,
    pub m: Option<usize>,
    pub t_build: f64,
    pub t_apply: f64,
    pub t_assemble: f64,
    pub t_solve: f64,
}

impl TimingRow {
    pub fn total(&self) -> f64 {
        self.t_build + self.t_apply + self.t_assemble + self.t_solve
    }
}

fn seconds<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let t = Instant::now();
    let r = f();
    (black_box(r), t.elapsed().as_secs_f64())
}

/// Times `Π^∇` (build the projection matrix, apply it at the nodes of the
/// finite element triangulation), the finite element solve (triangulate and assemble, then solve for
/// every basis function) and the online reduced solves (assemble from the
/// bricks, then solve) on random normalized polygons.
pub fn time_reconstructions(db: &RbDatabase, cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.polygons == 0 {
        return Err(Error::InvalidArgument("need at least one polygon".into()));
    }
    if cfg.repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    if let Some(&m) = cfg.ms.iter().find(|&&m| m > db.m_max) {
        return Err(Error::InvalidArgument(format!("M = {m} exceeds M_max = {}", db.m_max)));
    }
    let n = db.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tests: Vec<(Polygon, Vec<f64>)> = Vec::with_capacity(cfg.polygons);
    for _ in 0..cfg.polygons {
        let (p, _) = normalize(&generate_convex_polygon(n, &mut rng)?)?;
        let dofs = (0..n).map(|_| rng.random()).collect();
        tests.push((p, dofs));
    }
    let mut pi = TimingRow {
        method: "pi",
        m: None,
        t_build: 0.0,
        t_apply: 0.0,
        t_assemble: 0.0,
        t_solve: 0.0,
    };
    let mut fe = TimingRow { method: "fe", ..pi.clone() };
    let mut rb: Vec<TimingRow> = cfg
        .ms
        .iter()
        .map(|&m| TimingRow {
            method: "rb",
            m: Some(m),
            ..pi.clone()
        })
        .collect();
    // each method runs as its own batch over all polygons, so that none of
    // them pays for the cache traffic of another
    // Π^∇ is evaluated on the same output grid as the finite element solve
    let grids = tests
        .iter()
        .map(|(p, _)| TriMesh::triangulate(p, cfg.fe_delta))
        .collect::<Result<Vec<_>>>()?;
    for rep in 0..cfg.repeats {
        let mut batch = pi.clone();
        (batch.t_build, batch.t_apply) = (0.0, 0.0);
        for ((p, dofs), grid) in tests.iter().zip(&grids) {
            let (proj, t) = seconds(|| Projector::new(p));
            let proj = proj?;
            batch.t_build += t;
            let (_, t) = seconds(|| {
                let c = proj.apply(dofs);
                grid.nodes().iter().map(|&x| eval_linear(c, x)).collect::<Vec<f64>>()
            });
            batch.t_apply += t;
        }
        keep_best(&mut pi, batch, rep);
    }
    for (p, _) in &tests {
        let (solver, t) = seconds(|| -> Result<(TriMesh, DirichletSolver)> {
            let mesh = TriMesh::triangulate(p, cfg.fe_delta)?;
            let solver = DirichletSolver::new(&mesh, Mat2::IDENTITY)?;
            Ok((mesh, solver))
        });
        let (mesh, solver) = solver?;
        fe.t_assemble += t;
        let (sol, t) = seconds(|| {
            let data: Vec<Vec<f64>> = (0..n).map(|j| mesh.hat_trace(j)).collect();
            solver.solve_many(&data, None)
        });
        sol?;
        fe.t_solve += t;
    }
    for row in rb.iter_mut() {
        let m = row.m.unwrap_or(0);
        for rep in 0..cfg.repeats {
            let mut batch = row.clone();
            (batch.t_assemble, batch.t_solve) = (0.0, 0.0);
            for (p, _) in &tests {
                let (systems, t) = seconds(|| -> Result<Vec<_>> {
                    let (q, _) = normalize(p)?;
                    let map = AffineMap::build(&q)?;
                    Ok((0..n).map(|j| reduced_system(db, &map, j, m)).collect())
                });
                let systems = systems?;
                batch.t_assemble += t;
                let (w, t) = seconds(|| {
                    systems
                        .iter()
                        .enumerate()
                        .map(|(j, (a, f))| solve_reduced(a, f, j))
                        .collect::<Result<Vec<_>>>()
                });
                w?;
                batch.t_solve += t;
            }
            keep_best(row, batch, rep);
        }
    }
    let count = cfg.polygons as f64;
    let mut rows = vec![pi, fe];
    rows.extend(rb);
    for r in rows.iter_mut() {
        r.t_build /= count;
        r.t_apply /= count;
        r.t_assemble /= count;
        r.t_solve /= count;
    }
    Ok(rows)
}

/// Keeps the repetition with the smallest total.
fn keep_best(best: &mut TimingRow, batch: TimingRow, rep: usize) {
    if rep == 0 || batch.total() < best.total() {
        *best = batch;
    }
}

pub const TIMING_HEADER: &str = "n,method,m,T_build,T_apply,T_assemble,T_solve";

pub fn timings_to_csv(n: usize, rows: &[TimingRow]) -> String {
    let mut s = format!("{TIMING_HEADER}\n");
    for r in rows {
        let m = r.m.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{n},{},{m},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.method, r.t_build, r.t_apply, r.t_assemble, r.t_solve
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rb::{run_offline, OfflineConfig, SnapshotMesh};

    #[test]
    fn timing_table_has_one_row_per_method() {
        let db = run_offline(&OfflineConfig {
            n: 5,
            train: 6,
            m_max: 4,
            delta: 0.2,
            delta_k: 0.2,
            seed: 1,
            snapshot_mesh: SnapshotMesh::Independent,
        })
        .unwrap();
        let cfg = TimingConfig {
            polygons: 3,
            ms: vec![1, 4],
            fe_delta: 0.1,
            seed: 2,
            repeats: 2,
        };
        let rows = time_reconstructions(&db, &cfg).unwrap();
        let methods: Vec<_> = rows.iter().map(|r| (r.method, r.m)).collect();
        assert_eq!(methods, [("pi", None), ("fe", None), ("rb", Some(1)), ("rb", Some(4))]);
        assert!(rows.iter().all(|r| r.total() > 0.0));
        assert_eq!(rows[0].t_assemble, 0.0);
        assert_eq!(rows[1].t_build, 0.0);
        let csv = timings_to_csv(5, &rows);
        assert_eq!(csv.lines().next(), Some(TIMING_HEADER));
        assert_eq!(csv.lines().count(), 5);
        let too_big = TimingConfig { ms: vec![5], ..cfg };
        assert!(time_reconstructions(&db, &too_big).is_err());
    }
}
