//! C0 interior penalty finite elements for the vanishing moment
//! regularization `-eps lap² u + det D²u = f` of the Monge-Ampere equation.

pub mod analysis;
pub mod assembly;
pub mod cases;
pub mod element;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solve;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
