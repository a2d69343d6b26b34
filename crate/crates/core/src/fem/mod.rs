//! P1 finite elements on a single polygon: the snapshot engine and the
//! reference reconstruction.

mod assemble;
mod norms;
mod trimesh;

pub use assemble::{
    assemble_stiffness, element_stiffness, harmonic_basis, load_vector, solve_dirichlet,
    vem_basis_fe, DirichletSolver,
};
pub use norms::{norms, squared_error_norms, squared_norms, Norms, SquaredNorms};
pub use trimesh::{
    level_for, node_count, shape_gradients, EdgePosition, TriMesh, DEFAULT_NODE_CAP,
};
