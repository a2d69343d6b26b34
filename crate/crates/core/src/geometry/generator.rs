use rand::seq::SliceRandom;
use rand::Rng;

use super::polygon::{normalize, Polygon};
use super::Point;
use crate::error::{Error, Result};

pub const DEFAULT_RETRY_BUDGET: usize = 1000;
/// Minimal relative turn (cross product of consecutive edges over diam²).
pub const CONVEXITY_TOL: f64 = 1e-10;

/// Random convex polygon with exactly `n` vertices (Valtr's construction),
/// randomly rotated, randomly relabeled, and normalized.
pub fn generate_convex_polygon<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Polygon> {
    generate_convex_polygon_with_budget(n, rng, DEFAULT_RETRY_BUDGET)
}

pub fn generate_convex_polygon_with_budget<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    budget: usize,
) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "convex polygon needs n >= 3, got {n}"
        )));
    }
    for _ in 0..budget {
        let raw = valtr(n, rng);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let shift = rng.random_range(0..n);
        let (s, c) = theta.sin_cos();
        let verts: Vec<Point> = (0..n)
            .map(|i| {
                let v = raw[(i + shift) % n];
                [c * v[0] - s * v[1], s * v[0] + c * v[1]]
            })
            .collect();
        let Ok(p) = Polygon::new(verts) else { continue };
        let Ok((q, _)) = normalize(&p) else { continue };
        if q.is_convex(CONVEXITY_TOL) {
            return Ok(q);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no valid convex {n}-gon within {budget} attempts"
    )))
}

/// Splits sorted uniform samples into two monotone chains and returns the
/// consecutive-difference components, which sum to zero.
fn chain_components<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (min, max) = (xs[0], xs[n - 1]);
    let mut out = Vec::with_capacity(n);
    let (mut last_top, mut last_bot) = (min, min);
    for &x in &xs[1..n - 1] {
        if rng.random::<bool>() {
            out.push(x - last_top);
            last_top = x;
        } else {
            out.push(last_bot - x);
            last_bot = x;
        }
    }
    out.push(max - last_top);
    out.push(last_bot - max);
    out
}

fn valtr<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Point> {
    let xv = chain_components(n, rng);
    let mut yv = chain_components(n, rng);
    yv.shuffle(rng);
    let mut vecs: Vec<Point> = xv.into_iter().zip(yv).map(|(x, y)| [x, y]).collect();
    vecs.sort_by(|a, b| {
        a[1].atan2(a[0])
            .partial_cmp(&b[1].atan2(b[0]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut pts = Vec::with_capacity(n);
    let mut p = [0.0, 0.0];
    for v in vecs {
        pts.push(p);
        p = [p[0] + v[0], p[1] + v[1]];
    }
    pts
}
