//! Optimal shortcut-to-adiabaticity driving for a harmonic quantum Otto
//! refrigerator.

pub mod costs;
pub mod diffengine;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod profiles;
pub mod thermo;

pub use error::{Error, Result};
