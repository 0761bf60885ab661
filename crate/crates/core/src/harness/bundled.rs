//! The experiments shipped with the crate.
//!
//! All use `m = ħ = 1`, `q_I = (0, 0)` and `q_F = (0.5, 1)`. The spatial
//! window is centered on the endpoints' midpoint with half-width
//! `c·√(ħT/m)`: `c = 8` for the wide window, where truncation of the
//! Fresnel integrals is meant to be small, and `c = 1` for the narrow one,
//! where `Δφ₁` is clearly nonzero.

use num_complex::Complex64;

use super::config::{ExperimentConfig, DEFAULT_SEED};
use crate::action::{PhysicalSystem, Region, SpacetimePoint};
use crate::error::Result;
use crate::finitary::{hop_amplitude, PhaseParam, TimeModel};
use crate::quadrature::QuadratureSpec;
use crate::xmachine::{CoverSemantics, LatticeHops};

pub const WIDE_HALF_WIDTH: f64 = 8.0;
pub const NARROW_HALF_WIDTH: f64 = 1.0;

const QI: SpacetimePoint = SpacetimePoint::new(0.0, 0.0);
const QF: SpacetimePoint = SpacetimePoint::new(0.5, 1.0);

fn window(system: &PhysicalSystem, half_width: f64, t_lo: f64, t_hi: f64) -> Region {
    let span = QF.t - QI.t;
    let mid = 0.5 * (QI.x + QF.x);
    let h = half_width * (system.hbar * span / system.mass).sqrt();
    Region::new(mid - h, mid + h, t_lo, t_hi).expect("bundled windows are valid")
}

fn config(name: &str, system: PhysicalSystem, region: Region, model: TimeModel, quadrature: QuadratureSpec) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_owned(),
        system,
        region,
        q_i: QI,
        q_f: QF,
        model,
        rho: 0.0,
        n_max: 2,
        quadrature,
        cover_semantics: CoverSemantics::TransitionCover,
        seed: DEFAULT_SEED,
    }
}

pub fn wide_free() -> ExperimentConfig {
    let sys = PhysicalSystem::natural_free();
    let spec = QuadratureSpec::new(16, 64, 1).expect("valid");
    config("wide-free", sys, window(&sys, WIDE_HALF_WIDTH, 0.0, 1.0), TimeModel::Unidirectional, spec)
}

pub fn narrow_free() -> ExperimentConfig {
    let sys = PhysicalSystem::natural_free();
    let spec = QuadratureSpec::new(16, 4, 2).expect("valid");
    config("narrow-free", sys, window(&sys, NARROW_HALF_WIDTH, 0.0, 1.0), TimeModel::Unidirectional, spec)
}

pub fn narrow_free_bidirectional() -> ExperimentConfig {
    let sys = PhysicalSystem::natural_free();
    let spec = QuadratureSpec::new(16, 4, 2).expect("valid");
    config("narrow-free-bi", sys, window(&sys, NARROW_HALF_WIDTH, -0.25, 1.25), TimeModel::Bidirectional, spec)
}

pub fn harmonic() -> ExperimentConfig {
    let sys = PhysicalSystem::harmonic(1.0, 1.0, 1.0).expect("valid");
    let spec = QuadratureSpec::new(16, 4, 2).expect("valid");
    config("harmonic", sys, window(&sys, 1.5, 0.0, 1.0), TimeModel::Unidirectional, spec)
}

/// Every bundled quadrature experiment.
pub fn all() -> Vec<ExperimentConfig> {
    vec![wide_free(), narrow_free(), narrow_free_bidirectional(), harmonic()]
}

pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    all().into_iter().find(|c| c.name == name)
}

pub fn names() -> Vec<String> {
    all().into_iter().map(|c| c.name).collect()
}

/// Three points and every hop between them (self-hops included).
#[derive(Debug, Clone)]
pub struct Lattice {
    pub points: Vec<SpacetimePoint>,
    pub region: Region,
    pub hops: LatticeHops,
    /// Common modulus of every hop amplitude.
    pub scale: f64,
}

/// Bidirectional physical hop amplitudes on `q_I`, `(0.25, 0.5)`, `q_F`,
/// scaled by 0.15 so every hop has modulus 0.15 and `|H| = 0.15·J` has
/// spectral radius 0.45.
pub fn lattice() -> Result<Lattice> {
    let system = PhysicalSystem::natural_free();
    let phase = PhaseParam::new(0.3)?;
    let scale = 0.15;
    let points = vec![QI, SpacetimePoint::new(0.25, 0.5), QF];
    let hops = LatticeHops::complete(&points, |q, q_next| {
        Ok(Complex64::from(scale) * hop_amplitude(&system, &phase, q, q_next, TimeModel::Bidirectional)?)
    })?;
    Ok(Lattice {
        points,
        region: Region::new(-1.0, 1.5, -0.5, 1.5)?,
        hops,
        scale,
    })
}
