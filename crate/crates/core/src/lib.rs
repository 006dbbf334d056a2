pub mod airy;
pub mod asymptotics;
pub mod background;
pub mod error;
pub mod field;
pub mod harness;
pub mod layer;
pub mod ode;
pub mod perturbation;
pub mod quadrature;
pub mod simulator;
pub mod soliton;
pub mod stencil;

pub use error::{Error, Result};
