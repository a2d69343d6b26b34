use super::PolyMesh;
use crate::geometry::{cross, segment_distance, sub, Point};

/// Bucket grid over the mesh bounding box for point-in-cell queries.
#[derive(Clone, Debug)]
pub struct CellLocator {
    lo: Point,
    inv_w: [f64; 2],
    k: usize,
    buckets: Vec<Vec<usize>>,
}

/// Points within this distance of a cell boundary count as inside the cell.
const LOCATE_TOL: f64 = 1e-12;

impl CellLocator {
    pub fn new(mesh: &PolyMesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let k = ((mesh.num_cells() as f64).sqrt().ceil() as usize).max(1);
        let inv_w = [
            k as f64 / (hi[0] - lo[0]).max(1e-300),
            k as f64 / (hi[1] - lo[1]).max(1e-300),
        ];
        let mut loc = Self {
            lo,
            inv_w,
            k,
            buckets: vec![Vec::new(); k * k],
        };
        for (c, cell) in mesh.cells().iter().enumerate() {
            let (mut clo, mut chi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in cell {
                let p = mesh.vertices()[v];
                for d in 0..2 {
                    clo[d] = clo[d].min(p[d] - LOCATE_TOL);
                    chi[d] = chi[d].max(p[d] + LOCATE_TOL);
                }
            }
            let (x0, y0) = loc.bucket(clo);
            let (x1, y1) = loc.bucket(chi);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    loc.buckets[y * k + x].push(c);
                }
            }
        }
        loc
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let f = |x: f64, d: usize| {
            (((x - self.lo[d]) * self.inv_w[d]).floor().max(0.0) as usize).min(self.k - 1)
        };
        (f(p[0], 0), f(p[1], 1))
    }

    /// Lowest-index cell containing `p`.
    pub fn locate(&self, mesh: &PolyMesh, p: Point) -> Option<usize> {
        self.locate_all(mesh, p).into_iter().next()
    }

    /// All cells containing `p` (several when `p` is on an interface), ascending.
    pub fn locate_all(&self, mesh: &PolyMesh, p: Point) -> Vec<usize> {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Vec::new();
        }
        let (x, y) = self.bucket(p);
        let mut out: Vec<usize> = self.buckets[y * self.k + x]
            .iter()
            .copied()
            .filter(|&c| cell_contains(mesh, c, p))
            .collect();
        out.sort_unstable();
        out
    }
}

fn cell_contains(mesh: &PolyMesh, c: usize, p: Point) -> bool {
    let cell = &mesh.cells()[c];
    let v = mesh.vertices();
    let n = cell.len();
    for i in 0..n {
        if segment_distance(p, v[cell[i]], v[cell[(i + 1) % n]]) <= LOCATE_TOL {
            return true;
        }
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = v[cell[i]];
        let b = v[cell[(i + 1) % n]];
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
