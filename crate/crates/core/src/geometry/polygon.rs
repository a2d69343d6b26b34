use super::{cross, dist, sub, Point};
use crate::error::{Error, Result};

/// Relative tolerance (w.r.t. the diameter) below which lengths and areas
/// are considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Counterclockwise polygon with a star center `x_K` from whose kernel every
/// vertex is visible.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    star_center: Point,
}

impl Polygon {
    /// Builds a polygon with the area centroid as star center.
    ///
    /// Clockwise input is rejected; use [`Polygon::from_any_orientation`] to
    /// accept both.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let c = centroid_of(&vertices)?;
        Self::with_star_center(vertices, c)
    }

    /// Like [`Polygon::new`] but reverses clockwise input (keeping vertex 0 first).
    pub fn from_any_orientation(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() >= 3 && signed_area_of(&vertices) < 0.0 {
            vertices[1..].reverse();
        }
        Self::new(vertices)
    }

    pub fn with_star_center(vertices: Vec<Point>, star_center: Point) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "a polygon needs at least 3 vertices, got {n}"
            )));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::InvalidArgument("non-finite vertex coordinate".into()));
        }
        let diam = diameter_of(&vertices);
        if diam < 1e-300 {
            return Err(Error::InvalidArgument("polygon has zero diameter".into()));
        }
        for i in 0..n {
            if dist(vertices[i], vertices[(i + 1) % n]) <= DEGENERACY_TOL * diam {
                return Err(Error::InvalidArgument(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let area = signed_area_of(&vertices);
        if area <= DEGENERACY_TOL * diam * diam {
            return Err(Error::InvalidArgument(
                "polygon is not counterclockwise (non-positive signed area)".into(),
            ));
        }
        let p = Self {
            vertices,
            star_center,
        };
        for i in 0..n {
            let a = p.fan_signed_area(i);
            if a <= DEGENERACY_TOL * diam * diam {
                return Err(Error::DegenerateTriangle(format!(
                    "fan triangle {i} has signed area {a:.3e}; star center not in the kernel"
                )));
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex `i` modulo `n`.
    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.n()]
    }

    pub fn star_center(&self) -> Point {
        self.star_center
    }

    /// Edge `i` runs from vertex `i` to vertex `i+1`.
    pub fn edge_length(&self, i: usize) -> f64 {
        dist(self.vertex(i), self.vertex(i + 1))
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.n()).map(|i| self.edge_length(i)).sum()
    }

    pub fn area(&self) -> f64 {
        signed_area_of(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        centroid_of(&self.vertices).expect("validated polygon")
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    /// Radius of the smallest circle centered at the star center containing `K`.
    pub fn circumradius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|&v| dist(v, self.star_center))
            .fold(0.0, f64::max)
    }

    /// Fan triangle `i`: (x_K, v_i, v_{i+1}).
    pub fn fan_triangle(&self, i: usize) -> [Point; 3] {
        [self.star_center, self.vertex(i), self.vertex(i + 1)]
    }

    pub fn fan_signed_area(&self, i: usize) -> f64 {
        let [c, a, b] = self.fan_triangle(i);
        0.5 * cross(sub(a, c), sub(b, c))
    }

    /// Strict convexity: every turn is a left turn by more than `tol`·diam².
    pub fn is_convex(&self, tol: f64) -> bool {
        let n = self.n();
        let d2 = self.diameter().powi(2);
        (0..n).all(|i| {
            let e0 = sub(self.vertex(i + 1), self.vertex(i));
            let e1 = sub(self.vertex(i + 2), self.vertex(i + 1));
            cross(e0, e1) > tol * d2
        })
    }

    /// Point-in-polygon by winding number; points within `tol`·diam of the
    /// boundary count as inside.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let n = self.n();
        let eps = tol * self.diameter();
        for i in 0..n {
            if segment_distance(p, self.vertex(i), self.vertex(i + 1)) <= eps {
                return true;
            }
        }
        let mut winding = 0i32;
        for i in 0..n {
            let a = self.vertex(i);
            let b = self.vertex(i + 1);
            let side = cross(sub(b, a), sub(p, a));
            if a[1] <= p[1] {
                if b[1] > p[1] && side > 0.0 {
                    winding += 1;
                }
            } else if b[1] <= p[1] && side < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Point, Point) {
        bbox_of(&self.vertices)
    }

    /// Applies `x ↦ (x − center)·scale` to every vertex and the star center.
    pub fn transformed(&self, center: Point, scale: f64) -> Self {
        let f = |p: Point| [(p[0] - center[0]) * scale, (p[1] - center[1]) * scale];
        Self {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            star_center: f(self.star_center),
        }
    }

    /// Same polygon with vertex `k` relabeled as vertex 0.
    pub fn rotated_labels(&self, k: usize) -> Self {
        let n = self.n();
        Self {
            vertices: (0..n).map(|i| self.vertex(i + k)).collect(),
            star_center: self.star_center,
        }
    }
}

pub(crate) fn signed_area_of(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

pub(crate) fn centroid_of(v: &[Point]) -> Result<Point> {
    let n = v.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "a polygon needs at least 3 vertices, got {n}"
        )));
    }
    // shift to the first vertex for round-off robustness
    let o = v[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = sub(v[i], o);
        let q = sub(v[(i + 1) % n], o);
        let c = cross(p, q);
        a += c;
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    if a.abs() < 1e-300 {
        return Err(Error::InvalidArgument("polygon has zero area".into()));
    }
    Ok([o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)])
}

pub(crate) fn diameter_of(v: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            d = d.max(dist(v[i], v[j]));
        }
    }
    d
}

pub(crate) fn bbox_of(v: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in v {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Translation and scaling relating a polygon to its normalized copy:
/// `x_normalized = (x − center) · scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub center: Point,
    pub scale: f64,
}

impl Similarity {
    pub fn to_normalized(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) * self.scale,
            (x[1] - self.center[1]) * self.scale,
        ]
    }

    pub fn to_physical(&self, x: Point) -> Point {
        [
            x[0] / self.scale + self.center[0],
            x[1] / self.scale + self.center[1],
        ]
    }
}

/// Moves the star center (the area centroid) to the origin and scales to unit
/// diameter.
pub fn normalize(p: &Polygon) -> Result<(Polygon, Similarity)> {
    let d = p.diameter();
    if d < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "degenerate polygon (diameter {d:.3e})"
        )));
    }
    let center = p.centroid();
    let scale = 1.0 / d;
    let verts: Vec<Point> = p
        .vertices()
        .iter()
        .map(|&v| [(v[0] - center[0]) * scale, (v[1] - center[1]) * scale])
        .collect();
    // the centroid of the scaled polygon is the origin up to round-off
    let q = Polygon::with_star_center(verts, [0.0, 0.0])?;
    Ok((q, Similarity { center, scale }))
}

/// Regular `n`-gon inscribed in the circle of radius 1/2 about the origin, with
/// vertex 0 at angle 0.
pub fn reference_polygon(n: usize) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "reference polygon needs n >= 3, got {n}"
        )));
    }
    Polygon::with_star_center((0..n).map(|i| reference_vertex(n, i)).collect(), [0.0, 0.0])
}

/// Vertex `i` of the reference `n`-gon.
pub fn reference_vertex(n: usize, i: usize) -> Point {
    let t = 2.0 * std::f64::consts::PI * (i % n) as f64 / n as f64;
    [0.5 * t.cos(), 0.5 * t.sin()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_square() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn reference_square_vertices() {
        let p = reference_polygon(4).unwrap();
        let expect = [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]];
        for (v, e) in p.vertices().iter().zip(expect) {
            assert_abs_diff_eq!(v[0], e[0], epsilon = 1e-15);
            assert_abs_diff_eq!(v[1], e[1], epsilon = 1e-15);
        }
        assert_eq!(p.star_center(), [0.0, 0.0]);
    }

    #[test]
    fn reference_polygon_has_unit_circumdiameter() {
        for n in 3..=16 {
            let p = reference_polygon(n).unwrap();
            assert_abs_diff_eq!(2.0 * p.circumradius(), 1.0, epsilon = 1e-12);
            if n % 2 == 0 {
                assert_abs_diff_eq!(p.diameter(), 1.0, epsilon = 1e-12);
            }
        }
        let t = reference_polygon(3).unwrap();
        for v in t.vertices() {
            assert_abs_diff_eq!(v[0].hypot(v[1]), 0.5, epsilon = 1e-15);
        }
        assert!(reference_polygon(2).is_err());
    }

    #[test]
    fn normalize_unit_square() {
        let (q, s) = normalize(&unit_square()).unwrap();
        assert_abs_diff_eq!(q.diameter(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.edge_length(0), 1.0 / 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.center[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.center[1], 0.5, epsilon = 1e-15);
        let c = q.centroid();
        assert_abs_diff_eq!(c[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-15);
        let back = s.to_physical(q.vertex(2));
        assert_abs_diff_eq!(back[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(back[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn normalize_is_idempotent() {
        let p = Polygon::new(vec![[0.1, 0.2], [2.0, 0.0], [2.5, 1.5], [0.3, 1.9]]).unwrap();
        let (q, _) = normalize(&p).unwrap();
        let (r, _) = normalize(&q).unwrap();
        for (a, b) in q.vertices().iter().zip(r.vertices()) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_clockwise_and_degenerate() {
        assert!(Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::from_any_orientation(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_ok());
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn containment_and_convexity() {
        let p = unit_square();
        assert!(p.is_convex(1e-10));
        assert!(p.contains([0.5, 0.5], 0.0));
        assert!(p.contains([1.0, 0.3], 1e-12));
        assert!(!p.contains([1.1, 0.3], 1e-12));
        let arrow = Polygon::with_star_center(
            vec![[0.0, 0.0], [1.0, 0.5], [0.0, 1.0], [0.3, 0.5]],
            [0.5, 0.5],
        )
        .unwrap();
        assert!(!arrow.is_convex(0.0));
        assert!(!arrow.contains([0.1, 0.5], 0.0));
    }
}
