//! Fair division of indivisible goods under additive valuations.
//!
//! Allocations that combine ordinal maximin-share guarantees (each agent
//! gets at least its 1-out-of-`d` share) with envy-based fairness (EFX or
//! EF1), exact share computation, and verifiers that check every output
//! independently of how it was produced.
//!
//! Everything is generic over a [`Scalar`]; [`Rational`] is exact and is
//! what the guarantees are stated for.

pub mod allocators;
pub mod error;
pub mod experiment;
pub mod format;
pub mod instance;
pub mod scalar;
pub mod shares;
pub mod verification;

pub use allocators::{solve_complete, Algorithm, AllocatorTrace, CompletionMode, Solution};
pub use error::{Error, Result};
pub use instance::{
    detect_structure, generate, Allocation, Family, GeneratorConfig, Instance, StructureReport,
};
pub use scalar::Scalar;
pub use shares::{mms_bruteforce, mms_exact, MaximinResult};
pub use verification::{is_ef1, is_efx, is_ordinal_mms, FairnessReport};

/// Exact arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

pub type RationalInstance = Instance<Rational>;
pub type FloatInstance = Instance<f64>;
pub type RationalReport = FairnessReport<Rational>;
