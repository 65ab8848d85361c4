//! Coupled-channel elastic scattering of two ultracold atoms polarized by a
//! dc electric field.
//!
//! The field induces a dipole-dipole term `-C_E P2(cos θ) / R³` on top of the
//! dispersion potential `-C6/R⁶ - C8/R⁸ - C10/R¹⁰` (hard wall at `R_c`), which
//! couples partial waves with `Δl = ±2` at fixed `m`. The crate propagates the
//! coupled radial equations with a log-derivative method, matches to
//! Riccati-Bessel asymptotics, and assembles elastic cross sections, the
//! asymmetry parameter, and the effective scattering length as functions of
//! the applied field.
//!
//! All internal computation is in Hartree atomic units; conversions live in
//! [`units`].

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
// along with out-of-range values. Oracle literals keep every digit of their
// multiprecision source.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

mod bessel;
pub mod channels;
pub mod engine;
pub mod error;
pub mod matching;
pub mod observables;
pub mod potential;
pub mod propagator;
pub mod scan;
pub mod units;

pub use channels::{build_basis, p2_element, Channel, ChannelBasis, Statistics};
pub use engine::{converged_cross_section, solve_block, NumericalParams};
pub use error::{Error, Result};
pub use matching::{extract_k_matrix, riccati_pair, s_and_t, ScatteringSolution};
pub use observables::{cross_section, zero_field_scattering_length, CrossSectionReport};
pub use potential::PotentialModel;
pub use propagator::{propagate, LogDerivative, PropagationSettings, StepPolicy};
pub use scan::{find_rc, find_resonance, sweep_field, ScanConfig, SweepRecord};
pub use units::FieldConfig;
