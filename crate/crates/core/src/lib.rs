//! Exact computations in prime fields for sum-product experiments: sets and
//! energies, point–plane incidences in PG(3, p), the Klein correspondence,
//! exponential sums over primitive-root powers, and a seeded harness that
//! evaluates both sides of the corresponding inequalities.

pub mod config;
pub mod error;
pub mod expsum;
pub mod field;
pub mod harness;
pub mod klein;
pub mod numeric;
pub mod projective;
pub mod sets;

pub use error::{Error, Result};
pub use field::{FieldModulus, Residue};
pub use sets::ResidueSet;
