use crate::error::{Error, Result};
use crate::geometry::{sub, Point, Polygon};
use crate::linalg::Mat2;

/// Default cap on the node count of a single triangulation.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Where a boundary node sits on `∂K`: edge `edge` (from vertex `edge` to
/// vertex `edge + 1`) at parameter `t ∈ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePosition {
    pub edge: usize,
    pub t: f64,
}

/// P1 triangulation of a star-shaped polygon obtained by splitting each fan
/// triangle `(x_K, v_i, v_{i+1})` into `m² = 4^L` similar triangles.
///
/// The node numbering depends only on `(n, L)`: two meshes of polygons with the
/// same vertex count and level have the same connectivity, and node `k` of one
/// is the image of node `k` of the other under the piecewise affine map
/// between the polygons.
#[derive(Clone, Debug)]
pub struct TriMesh {
    polygon: Polygon,
    level: u32,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<Option<EdgePosition>>,
    interior: Vec<usize>,
    /// Inverse of `[v_i − x_K, v_{i+1} − x_K]`, per fan triangle.
    fan_inv: Vec<Mat2>,
    /// `local_tri[(a·m + b)·2 + s]` is the index within a fan of the lattice
    /// triangle at `(a, b)`, `s = 0` pointing up and `s = 1` down.
    local_tri: Vec<usize>,
}

impl TriMesh {
    /// Smallest level whose fan-triangle edges are all ≤ `delta`, then built.
    pub fn triangulate(p: &Polygon, delta: f64) -> Result<Self> {
        Self::triangulate_capped(p, delta, DEFAULT_NODE_CAP)
    }

    pub fn triangulate_capped(p: &Polygon, delta: f64, node_cap: usize) -> Result<Self> {
        let level = level_for(p, delta)?;
        if node_count(p.n(), level) > node_cap {
            return Err(Error::ResourceLimit(format!(
                "triangulation with delta = {delta} needs {} nodes (cap {node_cap})",
                node_count(p.n(), level)
            )));
        }
        Self::with_level(p, level)
    }

    /// Triangulation at refinement level `level` (`m = 2^level`).
    pub fn with_level(p: &Polygon, level: u32) -> Result<Self> {
        if level > 14 {
            return Err(Error::ResourceLimit(format!("refinement level {level} too deep")));
        }
        let n = p.n();
        let m = 1usize << level;
        let c = p.star_center();
        let mut fan_inv = Vec::with_capacity(n);
        for i in 0..n {
            let e = Mat2::from_cols(sub(p.vertex(i), c), sub(p.vertex(i + 1), c));
            fan_inv.push(e.inverse().ok_or_else(|| {
                Error::DegenerateTriangle(format!("fan triangle {i} is singular"))
            })?);
        }

        let total = node_count(n, level);
        let mut nodes = Vec::with_capacity(total);
        let mut boundary = Vec::with_capacity(total);
        nodes.push(c);
        boundary.push(None);
        // rays x_K → v_i, s = 1..m (s = m is the vertex itself)
        for i in 0..n {
            let v = p.vertex(i);
            for s in 1..=m {
                let f = s as f64 / m as f64;
                nodes.push([c[0] + f * (v[0] - c[0]), c[1] + f * (v[1] - c[1])]);
                boundary.push((s == m).then_some(EdgePosition { edge: i, t: 0.0 }));
            }
        }
        // per fan: nodes on the polygon edge, then strictly interior ones
        let ray_node = |i: usize, s: usize| 1 + (i % n) * m + (s - 1);
        let edge_count = m.saturating_sub(1);
        let inner_count = if m >= 2 { (m - 1) * (m - 2) / 2 } else { 0 };
        let fan_base = |i: usize| 1 + n * m + i * (edge_count + inner_count);
        let mut inner_index = vec![usize::MAX; (m + 1) * (m + 1)];
        {
            let mut k = 0;
            for a in 1..m {
                for b in 1..m - a {
                    inner_index[a * (m + 1) + b] = k;
                    k += 1;
                }
            }
        }
        let node_of = |i: usize, a: usize, b: usize| -> usize {
            if a == 0 && b == 0 {
                0
            } else if b == 0 {
                ray_node(i, a)
            } else if a == 0 {
                ray_node(i + 1, b)
            } else if a + b == m {
                fan_base(i) + (b - 1)
            } else {
                fan_base(i) + edge_count + inner_index[a * (m + 1) + b]
            }
        };
        for i in 0..n {
            let (u, w) = (sub(p.vertex(i), c), sub(p.vertex(i + 1), c));
            let at = |a: usize, b: usize| {
                let (fa, fb) = (a as f64 / m as f64, b as f64 / m as f64);
                [c[0] + fa * u[0] + fb * w[0], c[1] + fa * u[1] + fb * w[1]]
            };
            for b in 1..m {
                debug_assert_eq!(node_of(i, m - b, b), nodes.len());
                // on the edge v_i → v_{i+1}: v_i + (b/m)(v_{i+1} − v_i)
                let (vi, vj) = (p.vertex(i), p.vertex(i + 1));
                let t = b as f64 / m as f64;
                nodes.push([vi[0] + t * (vj[0] - vi[0]), vi[1] + t * (vj[1] - vi[1])]);
                boundary.push(Some(EdgePosition { edge: i, t }));
            }
            for a in 1..m {
                for b in 1..m - a {
                    debug_assert_eq!(node_of(i, a, b), nodes.len());
                    nodes.push(at(a, b));
                    boundary.push(None);
                }
            }
        }
        debug_assert_eq!(nodes.len(), total);

        let mut local_tri = vec![usize::MAX; m * m * 2];
        let mut pattern: Vec<(usize, usize, bool)> = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m - a {
                local_tri[(a * m + b) * 2] = pattern.len();
                pattern.push((a, b, true));
                if a + b + 2 <= m {
                    local_tri[(a * m + b) * 2 + 1] = pattern.len();
                    pattern.push((a, b, false));
                }
            }
        }
        let mut triangles = Vec::with_capacity(n * m * m);
        for i in 0..n {
            for &(a, b, up) in &pattern {
                triangles.push(if up {
                    [node_of(i, a, b), node_of(i, a + 1, b), node_of(i, a, b + 1)]
                } else {
                    [node_of(i, a + 1, b), node_of(i, a + 1, b + 1), node_of(i, a, b + 1)]
                });
            }
        }
        let interior = (0..nodes.len()).filter(|&k| boundary[k].is_none()).collect();
        Ok(Self {
            polygon: p.clone(),
            level,
            nodes,
            triangles,
            boundary,
            interior,
            fan_inv,
            local_tri,
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Subdivisions per fan-triangle side.
    pub fn m(&self) -> usize {
        1 << self.level
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Fan triangle containing mesh triangle `t`.
    pub fn fan_of(&self, t: usize) -> usize {
        t / (self.m() * self.m())
    }

    /// Range of mesh triangles inside fan triangle `i`.
    pub fn fan_triangles(&self, i: usize) -> std::ops::Range<usize> {
        let mm = self.m() * self.m();
        i * mm..(i + 1) * mm
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary[k].is_some()
    }

    pub fn boundary_position(&self, k: usize) -> Option<EdgePosition> {
        self.boundary[k]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Node at polygon vertex `i`.
    pub fn vertex_node(&self, i: usize) -> usize {
        1 + (i % self.polygon.n()) * self.m() + self.m() - 1
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * crate::geometry::cross(sub(b, a), sub(c, a))
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                crate::geometry::dist(a, b)
                    .max(crate::geometry::dist(b, c))
                    .max(crate::geometry::dist(c, a))
            })
            .fold(0.0, f64::max)
    }

    /// Nodal values of the function that is linear along each polygon edge
    /// with the given vertex values; interior nodes get 0.
    pub fn boundary_trace(&self, vertex_values: &[f64]) -> Vec<f64> {
        let n = self.polygon.n();
        assert_eq!(vertex_values.len(), n);
        self.boundary
            .iter()
            .map(|b| match b {
                Some(EdgePosition { edge, t }) => {
                    (1.0 - t) * vertex_values[*edge] + t * vertex_values[(edge + 1) % n]
                }
                None => 0.0,
            })
            .collect()
    }

    /// Boundary trace of the hat function of vertex `j`.
    pub fn hat_trace(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.polygon.n()];
        v[j] = 1.0;
        self.boundary_trace(&v)
    }

    /// Triangle containing `x` and the barycentric coordinates of `x` in it.
    /// Points within `tol`·diam outside the polygon are snapped onto it.
    pub fn locate(&self, x: Point, tol: f64) -> Option<(usize, [f64; 3])> {
        let n = self.polygon.n();
        let m = self.m() as f64;
        let c = self.polygon.star_center();
        let d = sub(x, c);
        let mut best = (f64::NEG_INFINITY, 0usize, 0.0, 0.0);
        for i in 0..n {
            let [al, be] = self.fan_inv[i].apply(d);
            let mn = al.min(be).min(1.0 - al - be);
            if mn > best.0 {
                best = (mn, i, al, be);
            }
        }
        let (mn, i, mut al, mut be) = best;
        if mn < -tol * 4.0 {
            return None;
        }
        // snap into the fan triangle
        al = al.max(0.0);
        be = be.max(0.0);
        let s = al + be;
        if s > 1.0 {
            al /= s;
            be /= s;
        }
        let (fa, fb) = (al * m, be * m);
        let mi = self.m();
        let a = (fa.floor() as usize).min(mi - 1);
        let b = (fb.floor() as usize).min(mi - 1 - a);
        let (ra, rb) = (fa - a as f64, fb - b as f64);
        let (local, bary) = if ra + rb <= 1.0 || a + b + 1 >= mi {
            // up triangle (a,b),(a+1,b),(a,b+1)
            (self.local_tri[(a * mi + b) * 2], [1.0 - ra - rb, ra, rb])
        } else {
            // down triangle (a+1,b),(a+1,b+1),(a,b+1)
            (
                self.local_tri[(a * mi + b) * 2 + 1],
                [1.0 - rb, ra + rb - 1.0, 1.0 - ra],
            )
        };
        let t = i * mi * mi + local;
        let bary = bary.map(|v| v.clamp(-1e-14, 1.0 + 1e-14));
        Some((t, bary))
    }

    /// P1 interpolation of nodal `values` at `x`.
    pub fn evaluate(&self, values: &[f64], x: Point) -> Result<f64> {
        let (t, l) = self
            .locate(x, 1e-10)
            .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
        let [a, b, c] = self.triangles[t];
        Ok(l[0] * values[a] + l[1] * values[b] + l[2] * values[c])
    }

    pub fn interpolate(&self, values: &[f64], targets: &[Point]) -> Result<Vec<f64>> {
        targets.iter().map(|&x| self.evaluate(values, x)).collect()
    }

    /// Gradient of the P1 field `values` on triangle `t`.
    pub fn gradient(&self, values: &[f64], t: usize) -> [f64; 2] {
        let g = self.shape_gradients(t);
        let [a, b, c] = self.triangles[t];
        [
            g[0][0] * values[a] + g[1][0] * values[b] + g[2][0] * values[c],
            g[0][1] * values[a] + g[1][1] * values[b] + g[2][1] * values[c],
        ]
    }

    /// Gradients of the three barycentric coordinates of triangle `t`.
    pub fn shape_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        shape_gradients(self.triangle_points(t))
    }
}

/// Gradients of the barycentric coordinates of a triangle.
pub fn shape_gradients(p: [Point; 3]) -> [[f64; 2]; 3] {
    let two_a = crate::geometry::cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let g = |j: usize, k: usize| [(p[j][1] - p[k][1]) / two_a, (p[k][0] - p[j][0]) / two_a];
    [g(1, 2), g(2, 0), g(0, 1)]
}

/// Number of nodes of a level-`level` triangulation of an `n`-gon.
pub fn node_count(n: usize, level: u32) -> usize {
    let m = 1usize << level;
    let per_fan = m.saturating_sub(1) + if m >= 2 { (m - 1) * (m - 2) / 2 } else { 0 };
    1 + n * m + n * per_fan
}

/// Smallest level at which every fan-triangle side is at most `delta`.
pub fn level_for(p: &Polygon, delta: f64) -> Result<u32> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh size must be positive, got {delta}")));
    }
    let longest = (0..p.n())
        .map(|i| {
            let [c, a, b] = p.fan_triangle(i);
            crate::geometry::dist(c, a)
                .max(crate::geometry::dist(a, b))
                .max(crate::geometry::dist(b, c))
        })
        .fold(0.0, f64::max);
    let mut level = 0u32;
    while longest / (1u64 << level) as f64 > delta * (1.0 + 1e-12) {
        level += 1;
        if level > 30 {
            return Err(Error::ResourceLimit(format!("mesh size {delta} too small")));
        }
    }
    Ok(level)
}
