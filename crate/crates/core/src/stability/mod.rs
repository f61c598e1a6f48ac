//! Slope-stability verdicts for decomposable curve fixtures.
//!
//! Degrees are integers in units of 2π and central constants are rationals
//! in the same units, so every inequality is decided exactly.

pub mod fixture;
pub mod ssc;
pub mod sublattice;
pub mod verdicts;

/// Exact rational number.
pub type Rational = num_rational::Ratio<i64>;

pub use fixture::{parse_ratio, random_fixture, CurveFixture, FixtureEntry};
pub use ssc::{fixture_is_simple, ssc_reduction_equiv, SscReport};
pub use verdicts::{
    coherent_system_stable, deg_alpha, generator_verdict, higgs_stable, p_indices, pair_stable, triple_stable,
    twisted_triple_stable, verdict, CurveVerdict,
};
