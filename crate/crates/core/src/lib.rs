//! Collective decay of harmonic-oscillator ensembles.

pub mod atomic;
pub mod checks;
pub mod collective;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod integrate;
pub mod math;
pub mod oracle;
pub mod preparation;
pub mod series;
pub mod states;

pub use error::{Error, Result};
pub use math::C64;
