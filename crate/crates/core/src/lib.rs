pub mod analysis;
pub mod decomp;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod precond;

pub use error::{Error, Result};
