//! Spectral function-space toolkit for periodic grids: weighted ring norms
//! (Herz type), dyadic frequency decompositions and the derived Besov-style
//! norms, paraproduct and commutator machinery, semi-Lagrangian transport,
//! and a pressure-coupled iteration scheme for variable-density
//! incompressible flow.

pub mod besov;
pub mod dyadic;
pub mod error;
pub mod euler;
pub mod fft;
pub mod field;
pub mod field_io;
pub mod frame;
pub mod grid;
pub mod herz;
pub mod paraproduct;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use field::Field;
pub use frame::Frame;
pub use grid::Grid;
pub use herz::NormParams;
pub use report::EstimateReport;
