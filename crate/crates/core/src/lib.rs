//! Hop-based path amplitudes and their additive X-machine semantics.
//!
//! The crate evaluates the time-sliced path integral `φ_n`, its correction
//! terms `Δφ_n`, the finitary amplitudes `ψ_n` built from discrete hops
//! together with their solved normalization factors `B_n`, and compiles hop
//! paths into additive X-machines whose behavior is the path's amplitude.
//!
//! Modules, bottom-up:
//!
//! - [`action`]: systems, Lagrangians, least actions, elementary amplitudes
//! - [`quadrature`]: composite Gauss–Legendre rules for complex integrands
//! - [`standard`]: `φ_n`, `Δφ_n`, `A_n` and the free propagator
//! - [`finitary`]: hop amplitudes, `B_n`, `ψ_n`
//! - [`xmachine`]: X-machines, additive behavior, path compilation
//! - [`harness`]: experiment configs, reports and the verification suite

pub mod action;
pub mod error;
pub mod finitary;
pub mod harness;
pub mod quadrature;
pub mod standard;
pub mod xmachine;

pub use action::{
    anti_action, classical_action, classical_amplitude, lagrangian, ChargeConjugation, ParticleKind,
    PhysicalSystem, Potential, Region, SpacetimePoint,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use quadrature::{integrate_1d, integrate_2d, QuadratureSpec};
pub use standard::{delta_phi, free_propagator, normalization_a, phi_limit_estimate, phi_n};
pub use finitary::{
    hop_action, hop_amplitude, path_amplitude, psi_n, psi_total, solve_b, ExperimentContext, HopPath,
    NormalizationTableB, PhaseParam, TimeModel,
};
pub use harness::{run_experiment, verify_suite, ExperimentConfig, Report};
pub use xmachine::{
    additive_behavior_closed, additive_behavior_truncated, compile_path_to_machine, loop_resummation, AdditiveXMachine,
    CoverSemantics, FiniteStateMachine,
};
