//! Text export of a reconstructed field for plotting.
//!
//! ```text
//! VEMFIELD v1
//! mode <mode>
//! cells <C>
//! cell <c> <points> <triangles>
//! <x> <y> <value>          (one line per point)
//! <a> <b> <c>              (one line per triangle, 0-based point indices)
//! ...
//! ```

use std::fmt::Write as _;

use super::{check_dofs, reconstruct_mesh_cell, ReconMode};
use crate::error::Result;
use crate::par;
use crate::polymesh::PolyMesh;
use crate::rb::RbLibrary;

pub const FIELD_VERSION: &str = "VEMFIELD v1";

/// Every cell's evaluation points, values and triangles.
pub fn field_to_text(mesh: &PolyMesh, dofs: &[f64], mode: ReconMode, library: Option<&RbLibrary>) -> Result<String> {
    check_dofs(mesh, dofs)?;
    let blocks = par::try_map_range(mesh.num_cells(), |c| -> Result<String> {
        let rec = reconstruct_mesh_cell(mesh, c, dofs, mode, library)?;
        let m = &rec.mesh;
        let mut s = format!("cell {c} {} {}\n", m.num_nodes(), m.num_triangles());
        for (x, v) in m.nodes().iter().zip(&rec.values) {
            let _ = writeln!(s, "{:.12e} {:.12e} {v:.12e}", x[0], x[1]);
        }
        for t in m.triangles() {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        Ok(s)
    })?;
    let mut out = format!("{FIELD_VERSION}\nmode {mode}\ncells {}\n", mesh.num_cells());
    blocks.iter().for_each(|b| out.push_str(b));
    Ok(out)
}
