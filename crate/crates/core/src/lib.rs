//! Fermion mode dynamics on closed FRW backgrounds, Bogoliubov matrices,
//! invariant complex structures and the summability tests that decide their
//! unitary implementability and equivalence.
//!
//! Everything is generic over [`num::Real`] (`f32`, `f64`); the aliases below
//! fix `f64`.

pub mod averaging_bound;
pub mod background;
pub mod bogoliubov;
pub mod complex_structure;
pub mod error;
pub mod mat2;
pub mod mode_dynamics;
pub mod num;
pub mod quadrature;
pub mod spectrum;
pub mod summability;

pub use error::{Error, Result};
pub use num_complex;
pub use num::Real;
pub use spectrum::ModeIndex;
pub use summability::{TheoremVerdict, Verdict};

pub type Background = background::BackgroundModel<f64>;
pub type Matrix2 = mat2::Mat2<f64>;
pub type Propagator = mode_dynamics::ModePropagator<f64>;
pub type Bogoliubov = bogoliubov::BogoliubovMatrix<f64>;
pub type Sweep = bogoliubov::BogoliubovSweep<f64>;
pub type Mixing = complex_structure::MixingMatrix<f64>;
pub type Family = complex_structure::StructureFamily<f64>;
pub type Sequence = summability::WeightedSequence<f64>;
pub type Report = summability::SummabilityReport<f64>;
pub type Profile = averaging_bound::PhaseProfile<f64>;
