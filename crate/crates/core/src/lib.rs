//! Pseudospectral solver and estimate checker for
//!
//!   ∂ₜu + ∂ₓ^{2j+1}u ± |u|^α∂ₓ^{2j−1}u = 0,  α ∈ (0, 1),
//!
//! on a periodic box standing in for the line.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod formats;
pub mod lifespan;
pub mod nonlinearity;
pub mod params;
pub mod picard;
pub mod profiles;
pub mod reference;
pub mod spaces;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{Params, Sign};
pub use spaces::Trajectory;
pub use spectral::{Field, Grid};
