//! Coupled-resonator bandpass filter toolkit: characteristic polynomials and
//! coupling matrices for generalized Chebyshev responses with finite
//! transmission zeros, two-port S-parameter evaluation, figure-of-merit
//! extraction, response fitting on a coupling topology, and Touchstone /
//! JSON / CSV interchange.

pub mod error;
pub mod extraction;
pub mod fitter;
pub mod linalg;
pub mod matrix;
pub mod matrix_json;
mod optim;
pub mod poly;
pub mod prototype;
pub mod response;
pub mod touchstone;

pub use error::{Error, Result};
pub use matrix::{CouplingMatrix, TopologyMask};
pub use prototype::CharPoly;
pub use response::{FrequencyPlan, LossSpec, SParam, SParamSweep, TwoPort};
