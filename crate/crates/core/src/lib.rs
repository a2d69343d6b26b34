//! Lowest-order virtual element method on polygonal meshes, with reduced-basis
//! approximations of the virtual basis functions used for stabilization and
//! conforming reconstruction.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod par;
pub mod polymesh;
pub mod post;
pub mod rb;
pub mod timing;
pub mod vem;

pub use error::{Error, Result};
