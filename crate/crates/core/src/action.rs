//! Physical systems, classical actions and elementary amplitudes.
//!
//! Everything here is one-dimensional. A system is a particle of mass `m`
//! in a potential `V(x)`; the action between two spacetime points is the
//! value of `∫ L dt` along the stationary (least-action) path, and the
//! elementary amplitude is `exp(i S / ħ)`.
//!
//! Backward-in-time hops are reinterpreted as forward hops of the
//! antiparticle, whose action `S̄` is controlled by [`ChargeConjugation`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|sin ω Δt|` below this (away from Δt = 0) is treated as a focal point.
pub const FOCAL_TOLERANCE: f64 = 1e-9;

/// A one-dimensional event `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub x: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub const fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }

    pub fn try_new(x: f64, t: f64) -> Result<Self> {
        let p = Self { x, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_finite() && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "spacetime point ({}, {}) is not finite",
                self.x, self.t
            )))
        }
    }

    /// Bit-exact key, used wherever points act as identities (machine states).
    pub fn key(&self) -> (u64, u64) {
        // +0.0 and -0.0 name the same event.
        let norm = |v: f64| if v == 0.0 { 0.0f64 } else { v };
        (norm(self.x).to_bits(), norm(self.t).to_bits())
    }
}

/// The open rectangle `X × T = (x_lo, x_hi) × (t_lo, t_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Region {
    pub fn new(x_lo: f64, x_hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        let r = Self {
            x_lo,
            x_hi,
            t_lo,
            t_hi,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.x_lo, self.x_hi, self.t_lo, self.t_hi]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || self.x_lo >= self.x_hi || self.t_lo >= self.t_hi {
            return Err(Error::Region(format!(
                "region ({}, {}) x ({}, {}) is empty or not finite",
                self.x_lo, self.x_hi, self.t_lo, self.t_hi
            )));
        }
        Ok(())
    }

    /// Membership in the closure of the rectangle.
    pub fn contains_closed(&self, q: &SpacetimePoint) -> bool {
        (self.x_lo..=self.x_hi).contains(&q.x) && (self.t_lo..=self.t_hi).contains(&q.t)
    }

    /// Membership in the open rectangle.
    pub fn contains(&self, q: &SpacetimePoint) -> bool {
        self.x_lo < q.x && q.x < self.x_hi && self.t_lo < q.t && q.t < self.t_hi
    }

    pub fn x_width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn t_width(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// `V(x) = m ω² x² / 2`.
    Harmonic { omega: f64 },
}

/// How the antiparticle's action relates to the particle's.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeConjugation {
    /// `S̄` has the same functional form as `S` (photons, neutral systems).
    #[default]
    SelfConjugate,
    /// The antiparticle sees the potential scaled by `coupling`; `-1.0`
    /// flips the sign of the coupling, as for a charge in an external field.
    Conjugate { coupling: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKind {
    Particle,
    AntiParticle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSystem {
    pub mass: f64,
    pub hbar: f64,
    pub potential: Potential,
    #[serde(default)]
    pub conjugation: ChargeConjugation,
}

impl PhysicalSystem {
    pub fn free(mass: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, hbar, Potential::Free)
    }

    pub fn harmonic(mass: f64, hbar: f64, omega: f64) -> Result<Self> {
        Self::new(mass, hbar, Potential::Harmonic { omega })
    }

    pub fn new(mass: f64, hbar: f64, potential: Potential) -> Result<Self> {
        let sys = Self {
            mass,
            hbar,
            potential,
            conjugation: ChargeConjugation::SelfConjugate,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Natural units, free particle.
    pub fn natural_free() -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            potential: Potential::Free,
            conjugation: ChargeConjugation::SelfConjugate,
        }
    }

    pub fn with_conjugation(mut self, conjugation: ChargeConjugation) -> Self {
        self.conjugation = conjugation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.mass) || !positive(self.hbar) {
            return Err(Error::InvalidInput(format!(
                "mass ({}) and hbar ({}) must be positive",
                self.mass, self.hbar
            )));
        }
        if let Potential::Harmonic { omega } = self.potential {
            if !positive(omega) {
                return Err(Error::InvalidInput(format!("omega ({omega}) must be positive")));
            }
        }
        if let ChargeConjugation::Conjugate { coupling } = self.conjugation {
            if !coupling.is_finite() {
                return Err(Error::InvalidInput("conjugate coupling must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn is_free(&self) -> bool {
        matches!(self.potential, Potential::Free)
    }

    /// Angular frequency of the particle's potential, if any.
    pub fn omega(&self) -> Option<f64> {
        match self.potential {
            Potential::Free => None,
            Potential::Harmonic { omega } => Some(omega),
        }
    }

    /// Curvature `k` of `V(x) = k x² / 2` as seen by the given kind.
    pub fn stiffness(&self, kind: ParticleKind) -> f64 {
        let k = match self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => self.mass * omega * omega,
        };
        match (kind, self.conjugation) {
            (ParticleKind::AntiParticle, ChargeConjugation::Conjugate { coupling }) => coupling * k,
            _ => k,
        }
    }

    pub fn potential_energy(&self, x: f64) -> f64 {
        0.5 * self.stiffness(ParticleKind::Particle) * x * x
    }
}

/// `L(x, ẋ) = m ẋ² / 2 − V(x)`.
pub fn lagrangian(sys: &PhysicalSystem, x: f64, xdot: f64) -> f64 {
    0.5 * sys.mass * xdot * xdot - sys.potential_energy(x)
}

/// Stationary action for `V = k x² / 2` between `(x0, 0)` and `(x1, dt)`.
fn quadratic_action(mass: f64, stiffness: f64, x0: f64, x1: f64, dt: f64) -> Result<f64> {
    if stiffness == 0.0 {
        let dx = x1 - x0;
        return Ok(mass * dx * dx / (2.0 * dt));
    }
    let w = (stiffness.abs() / mass).sqrt();
    let phase = w * dt;
    if stiffness > 0.0 {
        let s = phase.sin();
        // Δt → 0 is the free limit, not a focus.
        if s.abs() < FOCAL_TOLERANCE && phase > 1.0 {
            return Err(Error::FocalSingularity { phase });
        }
        Ok(mass * w / (2.0 * s) * ((x0 * x0 + x1 * x1) * phase.cos() - 2.0 * x0 * x1))
    } else {
        Ok(mass * w / (2.0 * phase.sinh()) * ((x0 * x0 + x1 * x1) * phase.cosh() - 2.0 * x0 * x1))
    }
}

fn forward_interval(q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<f64> {
    let dt = q_next.t - q.t;
    if dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::TemporalOrder {
            start: q.t,
            end: q_next.t,
        })
    }
}

/// Action of the given kind from `q` to the later point `q_next`.
pub fn action_of(
    sys: &PhysicalSystem,
    q: &SpacetimePoint,
    q_next: &SpacetimePoint,
    kind: ParticleKind,
) -> Result<f64> {
    let dt = forward_interval(q, q_next)?;
    quadratic_action(sys.mass, sys.stiffness(kind), q.x, q_next.x, dt)
}

/// `S(q_next, q)`: the least action of the particle from `q` to `q_next`.
pub fn classical_action(sys: &PhysicalSystem, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<f64> {
    action_of(sys, q, q_next, ParticleKind::Particle)
}

/// `S̄(q_next, q)`: the antiparticle's action, moving forward from `q` to `q_next`.
pub fn anti_action(sys: &PhysicalSystem, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<f64> {
    action_of(sys, q, q_next, ParticleKind::AntiParticle)
}

/// `⟨q_next|q⟩ = exp(i S / ħ)`, or its antiparticle counterpart.
pub fn classical_amplitude(
    sys: &PhysicalSystem,
    q: &SpacetimePoint,
    q_next: &SpacetimePoint,
    kind: ParticleKind,
) -> Result<Complex64> {
    let s = action_of(sys, q, q_next, kind)?;
    Ok(Complex64::cis(s / sys.hbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    /// Minimizes the action over piecewise-linear paths with `segments`
    /// pieces. The potential is integrated exactly on each piece, so the
    /// discrete action is a quadratic form whose stationary point solves a
    /// tridiagonal system.
    fn discretized_min_action(mass: f64, k: f64, a: SpacetimePoint, b: SpacetimePoint, segments: usize) -> f64 {
        let h = (b.t - a.t) / segments as f64;
        let n = segments - 1;
        let diag = 2.0 * mass / h - 4.0 * k * h / 6.0;
        let off = -mass / h - k * h / 6.0;
        let mut rhs = vec![0.0; n];
        rhs[0] -= off * a.x;
        rhs[n - 1] -= off * b.x;
        // Thomas algorithm.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / diag;
        d[0] = rhs[0] / diag;
        for i in 1..n {
            let m = diag - off * c[i - 1];
            c[i] = off / m;
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut xs = vec![0.0; n];
        xs[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            xs[i] = d[i] - c[i] * xs[i + 1];
        }
        let mut path = Vec::with_capacity(segments + 1);
        path.push(a.x);
        path.extend(xs);
        path.push(b.x);
        path.windows(2)
            .map(|w| {
                let (xa, xb) = (w[0], w[1]);
                mass * (xb - xa).powi(2) / (2.0 * h) - k * h * (xa * xa + xa * xb + xb * xb) / 6.0
            })
            .sum()
    }

    fn p(x: f64, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(x, t)
    }

    #[test]
    fn lagrangian_examples() {
        let free1 = PhysicalSystem::free(1.0, 1.0).unwrap();
        let free2 = PhysicalSystem::free(2.0, 1.0).unwrap();
        let osc = PhysicalSystem::harmonic(1.0, 1.0, 1.0).unwrap();
        assert_eq!(lagrangian(&free1, 0.0, 0.0), 0.0);
        assert_eq!(lagrangian(&free2, 5.0, 3.0), 9.0);
        assert_eq!(lagrangian(&osc, 1.0, 0.0), -0.5);
    }

    #[test]
    fn free_action_examples() {
        let sys = PhysicalSystem::natural_free();
        assert_eq!(classical_action(&sys, &p(0.0, 0.0), &p(0.0, 1.0)).unwrap(), 0.0);
        let s = classical_action(&sys, &p(0.0, 0.0), &p(1.0, 1.0)).unwrap();
        let oracle = discretized_min_action(1.0, 0.0, p(0.0, 0.0), p(1.0, 1.0), 32);
        assert!((oracle - 0.5).abs() < 1e-12);
        assert!((s - oracle).abs() < 1e-12);
    }

    #[test]
    fn harmonic_action_matches_discretized_minimum() {
        let sys = PhysicalSystem::harmonic(1.0, 1.0, 1.0).unwrap();
        let (a, b) = (p(0.0, 0.0), p(1.0, FRAC_PI_2));
        let closed = classical_action(&sys, &a, &b).unwrap();
        let oracle = discretized_min_action(1.0, 1.0, a, b, 1024);
        assert!((closed - oracle).abs() < 1e-6, "closed {closed} oracle {oracle}");
    }

    #[test]
    fn oracle_converges_at_256_segments() {
        let osc = PhysicalSystem::harmonic(1.0, 1.0, 1.0).unwrap();
        let free = PhysicalSystem::natural_free();
        for (a, b) in [(p(0.0, 0.0), p(2.0, 0.5)), (p(-1.0, 0.2), p(1.5, 1.0)), (p(0.5, 0.0), p(3.0, 0.25))] {
            for sys in [&osc, &free] {
                let closed = classical_action(sys, &a, &b).unwrap();
                let k = sys.stiffness(ParticleKind::Particle);
                let oracle = discretized_min_action(1.0, k, a, b, 256);
                let rel = (closed - oracle).abs() / closed.abs();
                assert!(rel <= 1e-6, "{a:?}->{b:?}: rel {rel}");
            }
        }
    }

    #[test]
    fn anti_action_examples() {
        let sys = PhysicalSystem::natural_free();
        assert_eq!(anti_action(&sys, &p(0.0, 0.0), &p(1.0, 1.0)).unwrap(), 0.5);
        assert_eq!(anti_action(&sys, &p(0.0, 0.0), &p(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_anti_action_differs_when_potential_present() {
        let sys = PhysicalSystem::harmonic(1.0, 1.0, 1.0)
            .unwrap()
            .with_conjugation(ChargeConjugation::Conjugate { coupling: -1.0 });
        let (a, b) = (p(0.2, 0.0), p(1.0, 1.0));
        let s = classical_action(&sys, &a, &b).unwrap();
        let s_bar = anti_action(&sys, &a, &b).unwrap();
        let oracle = discretized_min_action(1.0, -1.0, a, b, 1024);
        assert!((s_bar - oracle).abs() < 1e-6);
        assert!((s - s_bar).abs() > 1e-3);

        // Where V vanishes identically the conjugation is invisible.
        let free = PhysicalSystem::natural_free().with_conjugation(ChargeConjugation::Conjugate { coupling: -1.0 });
        assert_eq!(
            classical_action(&free, &a, &b).unwrap(),
            anti_action(&free, &a, &b).unwrap()
        );
    }

    #[test]
    fn amplitude_examples() {
        let sys = PhysicalSystem::natural_free();
        let one = classical_amplitude(&sys, &p(0.0, 0.0), &p(0.0, 1.0), ParticleKind::Particle).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        let a = classical_amplitude(&sys, &p(0.0, 0.0), &p(1.0, 1.0), ParticleKind::Particle).unwrap();
        assert!((a - Complex64::cis(0.5)).norm() < 1e-15);
    }

    #[test]
    fn temporal_order_and_focal_errors() {
        let sys = PhysicalSystem::natural_free();
        assert!(matches!(
            classical_action(&sys, &p(0.0, 1.0), &p(0.0, 1.0)),
            Err(Error::TemporalOrder { .. })
        ));
        assert!(matches!(
            classical_amplitude(&sys, &p(0.0, 2.0), &p(0.0, 1.0), ParticleKind::AntiParticle),
            Err(Error::TemporalOrder { .. })
        ));
        let osc = PhysicalSystem::harmonic(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            classical_action(&osc, &p(0.0, 0.0), &p(1.0, std::f64::consts::PI)),
            Err(Error::FocalSingularity { .. })
        ));
    }

    #[test]
    fn invalid_systems_rejected() {
        assert!(PhysicalSystem::free(0.0, 1.0).is_err());
        assert!(PhysicalSystem::free(1.0, -1.0).is_err());
        assert!(PhysicalSystem::harmonic(1.0, 1.0, 0.0).is_err());
        assert!(Region::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(SpacetimePoint::try_new(f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn amplitude_has_unit_modulus(x0 in -5.0..5.0f64, x1 in -5.0..5.0f64, t0 in -3.0..3.0f64, dt in 0.01..1.5f64, harmonic in any::<bool>()) {
            let sys = if harmonic { PhysicalSystem::harmonic(1.3, 0.7, 1.1).unwrap() } else { PhysicalSystem::free(1.3, 0.7).unwrap() };
            let a = classical_amplitude(&sys, &p(x0, t0), &p(x1, t0 + dt), ParticleKind::Particle).unwrap();
            prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn free_action_translation_invariant(x0 in -5.0..5.0f64, x1 in -5.0..5.0f64, t0 in -3.0..3.0f64, dt in 0.1..2.0f64, sx in -10.0..10.0f64, st in -10.0..10.0f64) {
            let sys = PhysicalSystem::free(2.0, 1.0).unwrap();
            let s = classical_action(&sys, &p(x0, t0), &p(x1, t0 + dt)).unwrap();
            let shifted = classical_action(&sys, &p(x0 + sx, t0 + st), &p(x1 + sx, t0 + st + dt)).unwrap();
            prop_assert!((s - shifted).abs() <= 1e-12 * s.abs().max(1.0));
        }

        #[test]
        fn self_conjugate_anti_action_is_exact(x0 in -5.0..5.0f64, x1 in -5.0..5.0f64, dt in 0.01..1.5f64) {
            let sys = PhysicalSystem::harmonic(1.0, 1.0, 0.8).unwrap();
            prop_assert_eq!(
                classical_action(&sys, &p(x0, 0.0), &p(x1, dt)).unwrap(),
                anti_action(&sys, &p(x0, 0.0), &p(x1, dt)).unwrap()
            );
        }
    }
}
