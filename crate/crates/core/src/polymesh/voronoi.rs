use rand::Rng;

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::par;

/// Lloyd iterations stop once every seed is within this distance of its
/// cell centroid.
pub const LLOYD_TOL: f64 = 1e-8;
/// Vertices closer than this are merged into one mesh vertex.
const MERGE_TOL: f64 = 1e-10;
const SEED_RETRIES: usize = 10;

/// Centroidal Voronoi mesh together with the data that produced it.
#[derive(Clone, Debug)]
pub struct VoronoiMesh {
    pub mesh: PolyMesh,
    /// Seed of each cell (cell `c` belongs to `seeds[c]`).
    pub seeds: Vec<Point>,
    pub lloyd_iterations: usize,
    /// Largest seed–centroid distance of the final diagram.
    pub lloyd_residual: f64,
}

/// Voronoi tessellation of the unit square from `n_cells` uniform random
/// seeds, followed by at most `lloyd_iters` Lloyd steps (stopping early once
/// the residual drops below [`LLOYD_TOL`]).
pub fn voronoi_mesh<R: Rng + ?Sized>(
    n_cells: usize,
    lloyd_iters: usize,
    rng: &mut R,
) -> Result<VoronoiMesh> {
    if n_cells == 0 {
        return Err(Error::InvalidArgument("n_cells must be >= 1".into()));
    }
    for _ in 0..SEED_RETRIES {
        let seeds: Vec<Point> = (0..n_cells)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        if has_duplicates(&seeds) {
            continue;
        }
        return lloyd(seeds, lloyd_iters);
    }
    Err(Error::GenerationFailure(
        "could not draw distinct Voronoi seeds".into(),
    ))
}

/// Runs Lloyd's algorithm from the given seeds.
pub fn lloyd(mut seeds: Vec<Point>, max_iters: usize) -> Result<VoronoiMesh> {
    let mut cells = clip_cells(&seeds)?;
    let mut residual = centroid_residual(&seeds, &cells);
    let mut iterations = 0;
    while iterations < max_iters && residual >= LLOYD_TOL {
        seeds = cells.iter().map(|c| polygon_centroid(c)).collect();
        if has_duplicates(&seeds) {
            return Err(Error::GenerationFailure(
                "Lloyd iteration produced coincident seeds".into(),
            ));
        }
        cells = clip_cells(&seeds)?;
        residual = centroid_residual(&seeds, &cells);
        iterations += 1;
    }
    let mesh = assemble(&cells)?;
    Ok(VoronoiMesh {
        mesh,
        seeds,
        lloyd_iterations: iterations,
        lloyd_residual: residual,
    })
}

/// Voronoi diagram of fixed seeds clipped to the unit square, without Lloyd steps.
pub fn voronoi_diagram(seeds: &[Point]) -> Result<VoronoiMesh> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    if has_duplicates(seeds) {
        return Err(Error::GenerationFailure("duplicate seeds".into()));
    }
    lloyd(seeds.to_vec(), 0)
}

/// `Σ_c ∫_{cell_c} |x − seed_c|² dx`.
pub fn cvt_energy(seeds: &[Point], mesh: &PolyMesh) -> f64 {
    (0..mesh.num_cells())
        .map(|c| {
            let poly: Vec<Point> = mesh.cells()[c].iter().map(|&v| mesh.vertices()[v]).collect();
            second_moment(&poly, seeds[c])
        })
        .sum()
}

fn has_duplicates(seeds: &[Point]) -> bool {
    let mut s: Vec<Point> = seeds.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.windows(2).any(|w| dist(w[0], w[1]) < 1e-12)
}

fn centroid_residual(seeds: &[Point], cells: &[Vec<Point>]) -> f64 {
    seeds
        .iter()
        .zip(cells)
        .map(|(&s, c)| dist(s, polygon_centroid(c)))
        .fold(0.0, f64::max)
}

fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    0.5 * (0..n)
        .map(|i| p[i][0] * p[(i + 1) % n][1] - p[i][1] * p[(i + 1) % n][0])
        .sum::<f64>()
}

fn polygon_centroid(p: &[Point]) -> Point {
    let n = p.len();
    let o = p[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let u = [p[i][0] - o[0], p[i][1] - o[1]];
        let v = [p[(i + 1) % n][0] - o[0], p[(i + 1) % n][1] - o[1]];
        let c = u[0] * v[1] - u[1] * v[0];
        a += c;
        cx += (u[0] + v[0]) * c;
        cy += (u[1] + v[1]) * c;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

/// `∫_P |x − s|² dx` via the fan from `s` (exact for polygons).
fn second_moment(p: &[Point], s: Point) -> f64 {
    let n = p.len();
    let mut e = 0.0;
    for i in 0..n {
        let a = [p[i][0] - s[0], p[i][1] - s[1]];
        let b = [p[(i + 1) % n][0] - s[0], p[(i + 1) % n][1] - s[1]];
        let area = 0.5 * (a[0] * b[1] - a[1] * b[0]);
        // ∫_T |x|² over the triangle (0, a, b)
        let aa = a[0] * a[0] + a[1] * a[1];
        let bb = b[0] * b[0] + b[1] * b[1];
        let ab = a[0] * b[0] + a[1] * b[1];
        e += area * (aa + bb + ab) / 6.0;
    }
    e
}

/// Uniform bucket grid over the unit square for neighbor search.
struct SeedGrid {
    k: usize,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Point]) -> Self {
        let k = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); k * k];
        for (i, s) in seeds.iter().enumerate() {
            let (bx, by) = Self::bucket(k, *s);
            buckets[by * k + bx].push(i);
        }
        Self { k, buckets }
    }

    fn bucket(k: usize, p: Point) -> (usize, usize) {
        let f = |x: f64| ((x * k as f64).floor().max(0.0) as usize).min(k - 1);
        (f(p[0]), f(p[1]))
    }

    fn width(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Seeds in buckets at Chebyshev distance exactly `r` from `(bx, by)`.
    fn ring(&self, bx: usize, by: usize, r: usize, out: &mut Vec<usize>) {
        let (bx, by, r) = (bx as isize, by as isize, r as isize);
        let k = self.k as isize;
        for y in by - r..=by + r {
            for x in bx - r..=bx + r {
                if (x - bx).abs().max((y - by).abs()) != r {
                    continue;
                }
                if x < 0 || y < 0 || x >= k || y >= k {
                    continue;
                }
                out.extend_from_slice(&self.buckets[(y * k + x) as usize]);
            }
        }
    }
}

/// Keeps the part of `poly` with `(x − m)·d ≤ 0`.
fn clip(poly: &[Point], m: Point, d: Point) -> Vec<Point> {
    let n = poly.len();
    let side = |p: Point| (p[0] - m[0]) * d[0] + (p[1] - m[1]) * d[1];
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn clip_cells(seeds: &[Point]) -> Result<Vec<Vec<Point>>> {
    let grid = SeedGrid::new(seeds);
    let w = grid.width();
    let cells = par::map_range(seeds.len(), |i| {
        let s = seeds[i];
        let mut cell = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let (bx, by) = SeedGrid::bucket(grid.k, s);
        let mut ring = Vec::new();
        for r in 0..=grid.k {
            ring.clear();
            grid.ring(bx, by, r, &mut ring);
            ring.sort_by(|&a, &b| {
                dist(seeds[a], s)
                    .partial_cmp(&dist(seeds[b], s))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            for &j in &ring {
                if j == i {
                    continue;
                }
                let t = seeds[j];
                let m = [0.5 * (s[0] + t[0]), 0.5 * (s[1] + t[1])];
                cell = clip(&cell, m, [t[0] - s[0], t[1] - s[1]]);
            }
            // unvisited seeds lie at distance > r·w; their bisectors cannot
            // cut the cell once it fits in the disc of radius r·w/2
            let radius = cell.iter().map(|&p| dist(p, s)).fold(0.0, f64::max);
            if 2.0 * radius <= r as f64 * w {
                break;
            }
        }
        cell
    });
    for (i, c) in cells.iter().enumerate() {
        if c.len() < 3 || polygon_area(c) <= 0.0 {
            return Err(Error::GenerationFailure(format!("empty Voronoi cell {i}")));
        }
    }
    Ok(cells)
}

/// Merges cell corners into shared vertices and drops repeated corners.
fn assemble(cells: &[Vec<Point>]) -> Result<PolyMesh> {
    let mut verts: Vec<Point> = Vec::new();
    let mut hash: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    let key = |p: Point| {
        (
            (p[0] / MERGE_TOL).floor() as i64,
            (p[1] / MERGE_TOL).floor() as i64,
        )
    };
    let mut out_cells = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut ids: Vec<usize> = Vec::with_capacity(cell.len());
        for &p in cell {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = hash.get(&(kx + dx, ky + dy)) {
                        for &v in list {
                            if dist(verts[v], p) <= MERGE_TOL {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                // snap to the boundary of the square to keep it exact
                let snap = |x: f64| {
                    if x.abs() <= MERGE_TOL {
                        0.0
                    } else if (x - 1.0).abs() <= MERGE_TOL {
                        1.0
                    } else {
                        x
                    }
                };
                verts.push([snap(p[0]), snap(p[1])]);
                hash.entry((kx, ky)).or_default().push(verts.len() - 1);
                verts.len() - 1
            });
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        out_cells.push(ids);
    }
    repair_hanging(&verts, &mut out_cells);
    PolyMesh::new(verts, out_cells)
}

/// Inserts vertices lying in the interior of another cell's edge into that
/// edge, so that every interior edge is shared by exactly two cells.
fn repair_hanging(verts: &[Point], cells: &mut [Vec<usize>]) {
    use std::collections::HashMap;
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in cells.iter() {
        for i in 0..cell.len() {
            let (a, b) = (cell[i], cell[(i + 1) % cell.len()]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let lonely: Vec<(usize, usize)> = {
        let mut v: Vec<_> = count
            .iter()
            .filter(|(&(a, b), &c)| {
                c == 1
                    && !(super::on_unit_square_boundary(verts[a], 1e-12)
                        && super::on_unit_square_boundary(verts[b], 1e-12)
                        && same_side(verts[a], verts[b]))
            })
            .map(|(&e, _)| e)
            .collect();
        v.sort_unstable();
        v
    };
    if lonely.is_empty() {
        return;
    }
    let lonely_vertices: Vec<usize> = {
        let mut v: Vec<usize> = lonely.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for cell in cells.iter_mut() {
        let mut out = Vec::with_capacity(cell.len() + 2);
        let n = cell.len();
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            out.push(a);
            if count[&(a.min(b), a.max(b))] != 1 {
                continue;
            }
            let (pa, pb) = (verts[a], verts[b]);
            let len = dist(pa, pb);
            let mut inner: Vec<(f64, usize)> = lonely_vertices
                .iter()
                .filter(|&&v| v != a && v != b)
                .filter_map(|&v| {
                    let p = verts[v];
                    let t = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1]))
                        / (len * len);
                    let q = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                    (t > 0.0 && t < 1.0 && dist(p, q) <= 1e-9).then_some((t, v))
                })
                .collect();
            inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
            out.extend(inner.into_iter().map(|(_, v)| v));
        }
        *cell = out;
    }
}

fn same_side(a: Point, b: Point) -> bool {
    let t = 1e-12;
    (a[0].abs() <= t && b[0].abs() <= t)
        || (a[1].abs() <= t && b[1].abs() <= t)
        || ((a[0] - 1.0).abs() <= t && (b[0] - 1.0).abs() <= t)
        || ((a[1] - 1.0).abs() <= t && (b[1] - 1.0).abs() <= t)
}
