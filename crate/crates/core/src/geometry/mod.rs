//! Polygons, their normalization, and the piecewise affine map onto the
//! regular reference polygon.

mod affine;
mod dataset;
mod generator;
mod polygon;

pub use affine::{combine, full_coeffs, sym_coeffs, AffineMap, BASIS};
pub use dataset::PolygonSet;
pub use generator::{
    generate_convex_polygon, generate_convex_polygon_with_budget, CONVEXITY_TOL,
    DEFAULT_RETRY_BUDGET,
};
pub use polygon::{
    normalize, reference_polygon, reference_vertex, segment_distance, Polygon, Similarity,
    DEGENERACY_TOL,
};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Barycentric coordinates of `x` in triangle `t`.
#[inline]
pub fn barycentric(t: [Point; 3], x: Point) -> [f64; 3] {
    let d = cross(sub(t[1], t[0]), sub(t[2], t[0]));
    let l1 = cross(sub(x, t[0]), sub(t[2], t[0])) / d;
    let l2 = cross(sub(t[1], t[0]), sub(x, t[0])) / d;
    [1.0 - l1 - l2, l1, l2]
}
