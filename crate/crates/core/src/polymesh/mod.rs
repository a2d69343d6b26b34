//! Polygonal meshes of the unit square.

mod collapse;
mod io;
mod locate;
mod voronoi;

pub use collapse::{collapse_short_edges, COLLAPSE_TOL};
pub use locate::CellLocator;
pub use voronoi::{cvt_energy, voronoi_diagram, voronoi_mesh, VoronoiMesh, LLOYD_TOL};

use crate::error::{Error, Result};
use crate::geometry::{dist, Point, Polygon};
use std::collections::HashMap;

/// Polygonal mesh with CCW cells given as vertex-index lists.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    h: f64,
}

impl PolyMesh {
    /// Builds a mesh, deriving boundary flags (vertices of edges used by a
    /// single cell) and the mesh size `h` (largest cell diameter).
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} has {} vertices",
                    cell.len()
                )));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} references vertex {v} out of range"
                )));
            }
        }
        let mut boundary = vec![false; vertices.len()];
        for ((a, b), count) in edge_counts(&cells) {
            if count == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        let h = cells
            .iter()
            .map(|cell| {
                let mut d = 0.0f64;
                for i in 0..cell.len() {
                    for j in i + 1..cell.len() {
                        d = d.max(dist(vertices[cell[i]], vertices[cell[j]]));
                    }
                }
                d
            })
            .fold(0.0, f64::max);
        Ok(Self {
            vertices,
            cells,
            boundary,
            h,
        })
    }

    /// Uniform `k × k` grid of squares on the unit square.
    pub fn structured_squares(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("grid needs k >= 1".into()));
        }
        let id = |i: usize, j: usize| j * (k + 1) + i;
        let mut vertices = Vec::with_capacity((k + 1) * (k + 1));
        for j in 0..=k {
            for i in 0..=k {
                vertices.push([i as f64 / k as f64, j as f64 / k as f64]);
            }
        }
        let mut cells = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, cells)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell `c` as a polygon with its area centroid as star center.
    pub fn cell_polygon(&self, c: usize) -> Result<Polygon> {
        Polygon::new(self.cells[c].iter().map(|&v| self.vertices[v]).collect())
            .map_err(|e| e.in_cell(c))
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let cell = &self.cells[c];
        let n = cell.len();
        0.5 * (0..n)
            .map(|i| {
                let a = self.vertices[cell[i]];
                let b = self.vertices[cell[(i + 1) % n]];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// Checks the structural invariants: CCW simple cells, each interior edge
    /// shared by exactly two cells with opposite orientation, and total area
    /// equal to `domain_area` within `tol`.
    pub fn check_invariants(&self, domain_area: f64, tol: f64) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            let n = cell.len();
            if self.cell_area(c) <= 0.0 {
                return Err(Error::InvalidArgument(format!("cell {c} is not counterclockwise")));
            }
            let mut seen = std::collections::HashSet::new();
            for i in 0..n {
                if !seen.insert(cell[i]) {
                    return Err(Error::InvalidArgument(format!(
                        "cell {c} repeats vertex {}",
                        cell[i]
                    )));
                }
                let e = (cell[i], cell[(i + 1) % n]);
                if directed.insert(e, c).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "directed edge {e:?} used twice (cell {c})"
                    )));
                }
            }
        }
        for (&(a, b), &c) in &directed {
            if !directed.contains_key(&(b, a)) && !(self.boundary[a] && self.boundary[b]) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) of cell {c} has no twin and is not on the boundary"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                let pa = self.vertices[a];
                let pb = self.vertices[b];
                if !on_unit_square_boundary(pa, 1e-10) || !on_unit_square_boundary(pb, 1e-10) {
                    return Err(Error::InvalidArgument(format!(
                        "boundary edge ({a}, {b}) of cell {c} is not on the domain boundary"
                    )));
                }
            }
        }
        let total: f64 = (0..self.num_cells()).map(|c| self.cell_area(c)).sum();
        if (total - domain_area).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "cell areas sum to {total}, expected {domain_area}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn on_unit_square_boundary(p: Point, tol: f64) -> bool {
    p[0].abs() <= tol || p[1].abs() <= tol || (p[0] - 1.0).abs() <= tol || (p[1] - 1.0).abs() <= tol
}

fn edge_counts(cells: &[Vec<usize>]) -> Vec<((usize, usize), usize)> {
    let mut m: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in cells {
        let n = cell.len();
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut v: Vec<_> = m.into_iter().collect();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_grid_invariants() {
        let m = PolyMesh::structured_squares(3).unwrap();
        assert_eq!(m.num_cells(), 9);
        assert_eq!(m.num_vertices(), 16);
        m.check_invariants(1.0, 1e-12).unwrap();
        assert_eq!(m.boundary_flags().iter().filter(|&&b| b).count(), 12);
        assert!((m.h() - (2f64).sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(PolyMesh::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![vec![0, 1, 2]]).is_err());
    }
}
