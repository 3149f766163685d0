pub mod diagnostics;
pub mod error;
pub mod fluxes;
pub mod integrate;
pub mod mesh;
pub mod oracle;
pub mod polynomials;
pub mod projection;
pub mod shock_capturing;
pub mod solver;

pub use error::{Error, Result};
