//! Reduced-basis approximation of the virtual basis functions: offline
//! training, the database, and the online reduced solves.

mod database;
pub mod direct;
mod offline;
mod online;
mod validate;

pub use database::{Bricks, RbDatabase, RbLibrary, FORMAT_VERSION};
pub use offline::{
    build_database, collect_snapshots, compute_lifting, compute_snapshot, correlation_matrix,
    pod, precompute_bricks, run_offline, snapshot_mesh, unstack_basis, OfflineConfig, Pod,
    ReferenceData, SnapshotSet,
};
pub use online::{
    energy_matrix_from_bricks, reduced_solve, reduced_system, solve_reduced, RbBasisEval,
    REDUCED_RESIDUAL_TOL, TIKHONOV_PIVOT, TIKHONOV_SHIFT,
};
pub use validate::{percentile, validate, DofCase, Summary, ValidationConfig, ValidationReport, ValidationRow};

/// How the fine mesh of a training polygon is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SnapshotMesh {
    /// Triangulate the training polygon on its own at mesh size `δ_K` and
    /// interpolate onto the reference mesh.
    Independent,
    /// Use the preimage of the reference mesh under the polygon's map, so the
    /// snapshot is an exact Galerkin solution on the reference mesh.
    PulledBack,
}

impl SnapshotMesh {
    pub fn tag(self) -> &'static str {
        match self {
            SnapshotMesh::Independent => "independent",
            SnapshotMesh::PulledBack => "pulled-back",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "independent" => Some(SnapshotMesh::Independent),
            "pulled-back" => Some(SnapshotMesh::PulledBack),
            _ => None,
        }
    }
}

/// Scalar product behind the POD correlation matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarProduct {
    /// `H¹₀` seminorm on the reference polygon.
    H1Semi,
}

impl ScalarProduct {
    pub fn tag(self) -> &'static str {
        "h1-semi"
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        (s == "h1-semi").then_some(ScalarProduct::H1Semi)
    }
}

#[cfg(test)]
mod tests;
