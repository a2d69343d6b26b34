//! `VEMSOL v1` text format for a vector of vertex dofs:
//!
//! ```text
//! VEMSOL v1
//! nv
//! u_0            (nv lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const SOLUTION_VERSION: &str = "VEMSOL v1";

pub fn solution_to_text(dofs: &[f64]) -> String {
    let mut s = format!("{SOLUTION_VERSION}\n{}\n", dofs.len());
    for u in dofs {
        let _ = writeln!(s, "{u:.17e}");
    }
    s
}

pub fn save_solution(path: &Path, dofs: &[f64]) -> Result<()> {
    std::fs::write(path, solution_to_text(dofs)).map_err(|e| Error::io(path, e))
}

pub fn load_solution(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution(&text, path)
}

pub fn parse_solution(text: &str, path: &Path) -> Result<Vec<f64>> {
    let perr = |line: usize, reason: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (i, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if header.trim() != SOLUTION_VERSION {
        return Err(perr(i + 1, "expected header `VEMSOL v1`"));
    }
    let (i, count) = lines.next().ok_or_else(|| perr(2, "missing vertex count"))?;
    let nv: usize = count.trim().parse().map_err(|_| perr(i + 1, "bad vertex count"))?;
    let mut dofs = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (i, l) = lines.next().ok_or_else(|| perr(text.lines().count(), "truncated dof list"))?;
        dofs.push(l.trim().parse().map_err(|_| perr(i + 1, "bad value"))?);
    }
    if let Some((i, _)) = lines.next() {
        return Err(perr(i + 1, "trailing content"));
    }
    Ok(dofs)
}
