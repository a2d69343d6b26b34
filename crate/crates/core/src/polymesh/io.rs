//! `POLYMESH v1` text format:
//!
//! ```text
//! POLYMESH v1
//! nv nc
//! x y            (nv lines)
//! k i1 ... ik    (nc lines, 0-based, counterclockwise)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::PolyMesh;
use crate::error::{Error, Result};

impl PolyMesh {
    pub fn to_text(&self) -> String {
        let mut s = format!("POLYMESH v1\n{} {}\n", self.num_vertices(), self.num_cells());
        for v in self.vertices() {
            let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
        }
        for cell in self.cells() {
            let _ = write!(s, "{}", cell.len());
            for v in cell {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, reason: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
        if header.trim() != "POLYMESH v1" {
            return Err(perr(i + 1, "expected header `POLYMESH v1`"));
        }
        let (i, counts) = lines.next().ok_or_else(|| perr(2, "missing counts line"))?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(i + 1, "bad counts"))?;
        let [nv, nc] = counts[..] else {
            return Err(perr(i + 1, "expected `nv nc`"));
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (i, l) = lines.next().ok_or_else(|| perr(text.lines().count(), "truncated vertex list"))?;
            let xy: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(i + 1, "bad coordinate"))?;
            if xy.len() != 2 {
                return Err(perr(i + 1, "expected `x y`"));
            }
            vertices.push([xy[0], xy[1]]);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (i, l) = lines.next().ok_or_else(|| perr(text.lines().count(), "truncated cell list"))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(i + 1, "bad index"))?;
            if ids.is_empty() || ids.len() != ids[0] + 1 {
                return Err(perr(i + 1, "cell vertex count does not match"));
            }
            if ids[1..].iter().any(|&v| v >= nv) {
                return Err(perr(i + 1, "cell references a vertex out of range"));
            }
            cells.push(ids[1..].to_vec());
        }
        if let Some((i, _)) = lines.next() {
            return Err(perr(i + 1, "trailing content"));
        }
        PolyMesh::new(vertices, cells).map_err(|e| perr(0, &e.to_string()))
    }
}
