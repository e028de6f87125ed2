pub mod assembly;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod interpolation;
pub mod linalg;
pub mod mesh;
mod par;
pub mod poly;
pub mod quadrature;
pub mod reference;
pub mod spaces;
pub mod sparse;

pub use error::{Error, Result};
