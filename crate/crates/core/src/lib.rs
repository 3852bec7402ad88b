//! Source-seeking and target-tracking control for a unicycle that only
//! measures a scalar cost, built around a family of oscillatory feedback
//! laws sharing one Wronskian relation.
//!
//! The crate is layered bottom-up:
//!
//! * [`vec2`], [`target`], [`cost`], [`config`], [`trajectory`]: plane
//!   geometry, reference paths, the quadratic tracking cost, simulation
//!   parameters, and recorded runs.
//! * [`control`]: the generator-pair family, its built-in members, and the
//!   control signal itself.
//! * [`dynamics`]: closed-loop and averaged integration, the interaction
//!   coefficients, and the one-period truncation map.
//! * [`analysis`]: tracking metrics, gain-condition checks, and the
//!   frequency-sweep studies.

// Bound checks are written as negated comparisons (`!(x > 0.0)`) on purpose:
// the negated form rejects NaN, the suggested `x <= 0.0` would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod control;
pub mod cost;
pub mod dynamics;
pub mod error;
pub mod quadrature;
pub mod target;
pub mod trajectory;
pub mod vec2;

pub use analysis::{
    compute_metrics, decay_rate_check, fmt_real, omega_convergence_study,
    practical_stability_probe, validate_theorem3, volterra_scaling_study, DecayRateCheck,
    Metrics, ProbeVerdict, StabilityProbeReport, SweepScenario, Theorem3Report, VolterraStudy,
};
pub use config::{SimConfig, PRODUCTION_MIN_STEPS_PER_PERIOD};
pub use control::{
    phi_field, wronskian_residual, CatalogF1, ControlLaw, FPair, LawKind, ScalarFn,
};
pub use cost::{CostFunction, LevelSetFamily};
pub use dynamics::{
    averaged_field_numeric, nu_matrix, one_period_map, simulate_averaged, simulate_closed_loop,
    AveragedSystem, ClosedLoopSystem, DIVERGENCE_LIMIT,
};
pub use error::{Error, Result};
pub use target::TargetPath;
pub use trajectory::{Sample, Trajectory};
pub use vec2::Vec2;
