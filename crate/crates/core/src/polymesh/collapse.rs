//! Removal of short edges, after PolyMesher's post-processing step: an edge of
//! an `n`-gon is collapsed when the angle it subtends at the cell centroid is
//! below `tol · 2π/n`.
//!
//! Voronoi diagrams routinely contain edges many orders of magnitude shorter
//! than their cells. Such edges are harmless for dof-based stabilizations but
//! inflate the energy of the true virtual basis functions, and with it the
//! condition number of any method that resolves them.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::geometry::{cross, Point, Polygon};

/// Default tolerance of PolyMesher.
pub const COLLAPSE_TOL: f64 = 0.1;

const MAX_PASSES: usize = 100;
const SIDE_TOL: f64 = 1e-10;

/// Sides of the unit square a point lies on: bit 0 `x = 0`, 1 `x = 1`, 2 `y = 0`, 3 `y = 1`.
fn sides(p: Point) -> u8 {
    let mut s = 0;
    for (bit, on) in [p[0].abs(), (p[0] - 1.0).abs(), p[1].abs(), (p[1] - 1.0).abs()]
        .into_iter()
        .enumerate()
    {
        if on <= SIDE_TOL {
            s |= 1 << bit;
        }
    }
    s
}

/// Where the merged vertex of edge `(a, b)` goes, or `None` if merging would
/// change the domain.
fn merged_position(pa: Point, pb: Point) -> Option<Point> {
    let (sa, sb) = (sides(pa), sides(pb));
    let corner = |s: u8| s.count_ones() >= 2;
    match (sa, sb) {
        (0, 0) => Some([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]),
        (_, 0) => Some(pa),
        (0, _) => Some(pb),
        _ if corner(sa) && corner(sb) => None,
        _ if corner(sa) && sa & sb != 0 => Some(pa),
        _ if corner(sb) && sa & sb != 0 => Some(pb),
        _ if sa & sb != 0 => Some([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]),
        _ => None,
    }
}

/// Collapses short edges until none is left (or `tol <= 0`: returns a copy).
/// Cells never drop below three vertices and the domain is preserved.
pub fn collapse_short_edges(mesh: &PolyMesh, tol: f64) -> Result<PolyMesh> {
    let mut vertices = mesh.vertices().to_vec();
    let mut cells = mesh.cells().to_vec();
    if tol > 0.0 {
        for _ in 0..MAX_PASSES {
            if !collapse_pass(&mut vertices, &mut cells, tol)? {
                break;
            }
        }
    }
    // drop vertices no longer referenced, keeping the original order
    let mut used = vec![false; vertices.len()];
    for &v in cells.iter().flatten() {
        used[v] = true;
    }
    let mut index = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::with_capacity(vertices.len());
    for (v, &p) in vertices.iter().enumerate() {
        if used[v] {
            index[v] = kept.len();
            kept.push(p);
        }
    }
    for v in cells.iter_mut().flatten() {
        *v = index[*v];
    }
    PolyMesh::new(kept, cells)
}

/// One round of vertex-disjoint, cell-disjoint collapses; returns whether
/// anything changed.
fn collapse_pass(vertices: &mut [Point], cells: &mut [Vec<usize>], tol: f64) -> Result<bool> {
    let mut cells_of = vec![Vec::new(); vertices.len()];
    for (c, cell) in cells.iter().enumerate() {
        for &v in cell {
            cells_of[v].push(c);
        }
    }
    // candidates ordered by subtended angle, then by vertex pair
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for cell in cells.iter() {
        let n = cell.len();
        let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
        let c = Polygon::new(pts.clone())?.centroid();
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            let (u, w) = (sub(pts[i], c), sub(pts[(i + 1) % n], c));
            let angle = cross(u, w).atan2(u[0] * w[0] + u[1] * w[1]).abs();
            if angle < tol * 2.0 * PI / n as f64 {
                candidates.push((angle, a.min(b), a.max(b)));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    candidates.dedup_by(|x, y| (x.1, x.2) == (y.1, y.2));

    let mut touched: BTreeSet<usize> = BTreeSet::new();
    let mut changed = false;
    for (_, a, b) in candidates {
        let affected: BTreeSet<usize> = cells_of[a].iter().chain(&cells_of[b]).copied().collect();
        if affected.iter().any(|c| touched.contains(c)) {
            continue;
        }
        let Some(p) = merged_position(vertices[a], vertices[b]) else {
            continue;
        };
        let rebuilt: Vec<(usize, Vec<usize>)> = affected
            .iter()
            .map(|&c| (c, merge_in_cell(&cells[c], a, b)))
            .collect();
        let valid = rebuilt.iter().all(|(_, cell)| {
            cell.len() >= 3
                && Polygon::new(
                    cell.iter()
                        .map(|&v| if v == a { p } else { vertices[v] })
                        .collect(),
                )
                .is_ok()
        });
        if !valid {
            continue;
        }
        vertices[a] = p;
        for (c, cell) in rebuilt {
            cells[c] = cell;
        }
        touched.extend(affected);
        changed = true;
    }
    if cells.iter().any(|c| c.len() < 3) {
        return Err(Error::GenerationFailure("edge collapse produced a degenerate cell".into()));
    }
    Ok(changed)
}

/// Replaces `b` by `a` and removes the resulting repeated vertex.
fn merge_in_cell(cell: &[usize], a: usize, b: usize) -> Vec<usize> {
    let mapped: Vec<usize> = cell.iter().map(|&v| if v == b { a } else { v }).collect();
    let n = mapped.len();
    (0..n)
        .filter(|&i| mapped[i] != mapped[(i + 1) % n])
        .map(|i| mapped[i])
        .collect()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}
