//! Finitary amplitudes built from discrete hops.
//!
//! A hop `q → q′` carries the amplitude `σ ⟨q′|q⟩` when `q′` is later,
//! `σ ⟨q|q′⟩̄` (antiparticle, forward from `q′` to `q`) when it is earlier,
//! `σ` when `q′ = q`, and zero for a simultaneous hop between distinct
//! positions. `σ = e^{iρ}` is a free phase of the model.
//!
//! `ψ_n` sums over every path with `n` intermediate hops. Its normalization
//! factors `B_n` are solved from `ψ₀ = φ₀`, `ψ_n = Δφ_n`, which makes the
//! finitary sum reproduce the time-sliced one term by term. The solved
//! factors contain `q_I` and `q_F`, so a table is only valid for the
//! experiment it was solved for.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{
    action_of, classical_amplitude, ParticleKind, PhysicalSystem, Region, SpacetimePoint,
};
use crate::error::{Error, Result};
use crate::quadrature::{composite_nodes, triangle_nodes, NodeSet, QuadratureSpec};
use crate::standard::{normalization_a, phi_n, phi_profile, Anchor};

/// `|Δφ_n| < DEGENERACY_THRESHOLD · |φ₀|` makes `B_n` undefined.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// The zero-point phase `σ = e^{iρ}`; `ρ` is the stored quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseParam {
    rho: f64,
}

impl PhaseParam {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() {
            Ok(Self { rho })
        } else {
            Err(Error::InvalidInput(format!("rho ({rho}) must be finite")))
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> Complex64 {
        Complex64::cis(self.rho)
    }

    /// The constant `ρħ` added to every hop action.
    pub fn zero_point_action(&self, hbar: f64) -> f64 {
        self.rho * hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeModel {
    /// Every hop moves strictly forward in time.
    #[default]
    Unidirectional,
    /// Hops may move backward; those are antiparticle hops.
    Bidirectional,
}

/// `q₀ → q₁ → … → q_{df+1}`; the list position is the abstract clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopPath {
    points: Vec<SpacetimePoint>,
    model: TimeModel,
}

impl HopPath {
    pub fn new(points: Vec<SpacetimePoint>, model: TimeModel) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a hop path needs at least two points".into()));
        }
        for q in &points {
            q.validate()?;
        }
        if model == TimeModel::Unidirectional {
            if let Some(w) = points.windows(2).find(|w| w[1].t <= w[0].t) {
                return Err(Error::TemporalOrder {
                    start: w[0].t,
                    end: w[1].t,
                });
            }
        }
        Ok(Self { points, model })
    }

    pub fn points(&self) -> &[SpacetimePoint] {
        &self.points
    }

    pub fn model(&self) -> TimeModel {
        self.model
    }

    pub fn initial(&self) -> SpacetimePoint {
        self.points[0]
    }

    pub fn terminal(&self) -> SpacetimePoint {
        self.points[self.points.len() - 1]
    }

    pub fn hop_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn hops(&self) -> impl Iterator<Item = (SpacetimePoint, SpacetimePoint)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Endpoints are `q_I`, `q_F` and every intermediate point lies in `R`.
    pub fn check_admissible(&self, region: &Region, qi: &SpacetimePoint, qf: &SpacetimePoint) -> Result<()> {
        if self.initial() != *qi || self.terminal() != *qf {
            return Err(Error::InvalidInput("path endpoints differ from the experiment's".into()));
        }
        let inner = &self.points[1..self.points.len() - 1];
        if let Some(q) = inner.iter().find(|q| !region.contains(q)) {
            return Err(Error::Region(format!("intermediate point ({}, {}) lies outside R", q.x, q.t)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HopDirection {
    Forward,
    Backward,
    Null,
    Sideways,
}

fn direction(q: &SpacetimePoint, q_next: &SpacetimePoint) -> HopDirection {
    if q_next.t > q.t {
        HopDirection::Forward
    } else if q_next.t < q.t {
        HopDirection::Backward
    } else if q_next.x == q.x {
        HopDirection::Null
    } else {
        HopDirection::Sideways
    }
}

/// `s_h(q_next, q)`.
pub fn hop_action(sys: &PhysicalSystem, phase: &PhaseParam, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<f64> {
    let zero_point = phase.zero_point_action(sys.hbar);
    match direction(q, q_next) {
        HopDirection::Forward => Ok(zero_point + action_of(sys, q, q_next, ParticleKind::Particle)?),
        // The antiparticle travels forward from q_next to q.
        HopDirection::Backward => Ok(zero_point + action_of(sys, q_next, q, ParticleKind::AntiParticle)?),
        HopDirection::Null => Ok(zero_point),
        HopDirection::Sideways => Err(Error::NoAction),
    }
}

/// `⟨q_next|q⟩_h`.
pub fn hop_amplitude(
    sys: &PhysicalSystem,
    phase: &PhaseParam,
    q: &SpacetimePoint,
    q_next: &SpacetimePoint,
    model: TimeModel,
) -> Result<Complex64> {
    let dir = direction(q, q_next);
    let zero = Complex64::new(0.0, 0.0);
    Ok(match (model, dir) {
        (_, HopDirection::Forward) => phase.sigma() * classical_amplitude(sys, q, q_next, ParticleKind::Particle)?,
        (TimeModel::Unidirectional, _) => zero,
        (TimeModel::Bidirectional, HopDirection::Backward) => {
            phase.sigma() * classical_amplitude(sys, q_next, q, ParticleKind::AntiParticle)?
        }
        (TimeModel::Bidirectional, HopDirection::Null) => phase.sigma(),
        (TimeModel::Bidirectional, HopDirection::Sideways) => zero,
    })
}

/// Product of the hop amplitudes along the path.
pub fn path_amplitude(sys: &PhysicalSystem, phase: &PhaseParam, path: &HopPath) -> Result<Complex64> {
    let mut total = Complex64::new(1.0, 0.0);
    for (q, q_next) in path.hops() {
        let h = hop_amplitude(sys, phase, &q, &q_next, path.model())?;
        if h == Complex64::new(0.0, 0.0) {
            return Ok(h);
        }
        total *= h;
    }
    Ok(total)
}

/// Everything a normalization table depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentContext {
    pub system: PhysicalSystem,
    pub region: Region,
    pub qi: SpacetimePoint,
    pub qf: SpacetimePoint,
    pub model: TimeModel,
    pub spec: QuadratureSpec,
    pub phase: PhaseParam,
}

impl ExperimentContext {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.region.validate()?;
        self.spec.validate()?;
        self.qi.validate()?;
        self.qf.validate()?;
        if self.qf.t <= self.qi.t {
            return Err(Error::TemporalOrder {
                start: self.qi.t,
                end: self.qf.t,
            });
        }
        for (name, q) in [("q_I", &self.qi), ("q_F", &self.qf)] {
            if !self.region.contains_closed(q) {
                return Err(Error::Region(format!("{name} = ({}, {}) lies outside the closure of R", q.x, q.t)));
            }
        }
        Ok(())
    }

    pub fn with_model(mut self, model: TimeModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_phase(mut self, phase: PhaseParam) -> Self {
        self.phase = phase;
        self
    }

    fn span(&self) -> f64 {
        self.qf.t - self.qi.t
    }

    fn x_nodes(&self) -> NodeSet {
        self.spec.x_nodes(self.region.x_lo, self.region.x_hi)
    }

    fn t_nodes(&self, a: f64, b: f64) -> NodeSet {
        composite_nodes(a, b, self.spec.rule_order, self.spec.panels_t)
    }

    /// The `t_{n−1} < t_n < t_F` domain of the unidirectional step, `n ≥ 2`.
    fn triangle(&self) -> NodeSet {
        triangle_nodes(self.qi.t, self.qf.t, self.spec.rule_order, self.spec.panels_t)
    }

    fn phi(&self, n: usize) -> Result<Complex64> {
        phi_n(&self.system, &self.region, &self.qi, &self.qf, n, &self.spec, ParticleKind::Particle)
    }
}

/// Solved `B₀ … B_{n_max}` for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTableB {
    pub values: Vec<Complex64>,
    pub context: ExperimentContext,
}

impl NormalizationTableB {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// `Δφ_k` between `q_I` and every spatial node at time `t`: the particle
/// correction `Δφ_k((x, t), q_I)` for `t > t_I`, the antiparticle correction
/// `Δφ̄_k(q_I, (x, t))` for `t < t_I`.
fn correction_profile(ctx: &ExperimentContext, nodes: &NodeSet, k: usize, t: f64) -> Result<Vec<Complex64>> {
    debug_assert!(k >= 1);
    let (kind, side) = if t > ctx.qi.t {
        (ParticleKind::Particle, Anchor::Start)
    } else {
        (ParticleKind::AntiParticle, Anchor::End)
    };
    let hi = phi_profile(&ctx.system, kind, nodes, ctx.qi, side, t, k)?;
    let lo = phi_profile(&ctx.system, kind, nodes, ctx.qi, side, t, k - 1)?;
    Ok(hi.into_iter().zip(lo).map(|(a, b)| a - b).collect())
}

/// `Σ_t w_t Σ_x w_x f(x, t)` with the per-time spatial sums computed in
/// parallel and reduced in time-node order.
fn space_time_sum<F>(times: &NodeSet, nodes: &NodeSet, slice: F) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    let per_time = times
        .points
        .par_iter()
        .map(|&t| slice(t).map(|values| nodes.weighted_sum(&values)))
        .collect::<Result<Vec<_>>>()?;
    Ok(times.weighted_sum(&per_time))
}

fn corrections(ctx: &ExperimentContext, n_max: usize) -> Result<(Complex64, Vec<Complex64>)> {
    let phis = (0..=n_max)
        .map(|n| ctx.phi(n).map_err(|e| e.at_stage("phi_n", n)))
        .collect::<Result<Vec<_>>>()?;
    let threshold = DEGENERACY_THRESHOLD * phis[0].norm();
    let deltas: Vec<Complex64> = phis.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, d) in deltas.iter().enumerate() {
        if d.norm() < threshold {
            return Err(Error::DegenerateCorrection {
                n: i + 1,
                magnitude: d.norm(),
                threshold,
            });
        }
    }
    Ok((phis[0], deltas))
}

fn amp(sys: &PhysicalSystem, from: SpacetimePoint, to: SpacetimePoint, kind: ParticleKind) -> Result<Complex64> {
    classical_amplitude(sys, &from, &to, kind)
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(Error::InvalidInput("n_max must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `B_n` for forward-only hops.
///
/// `B₁ = σ² ∫_X ∫_{t_I}^{t_F} ⟨q_F|q⟩⟨q|q_I⟩ / Δφ₁` and, for `n ≥ 2`,
/// `B_n = σ B_{n−1} ∫_X ∫∫ ⟨q_F|q⟩ Δφ_{n−1}(q, q_I) / Δφ_n`, where the time
/// integral runs over `t_I < t_{n−1} < t < t_F`.
pub fn solve_b_unidirectional(ctx: &ExperimentContext, n_max: usize) -> Result<NormalizationTableB> {
    let ctx = ctx.with_model(TimeModel::Unidirectional);
    ctx.validate()?;
    check_n_max(n_max)?;
    let (_, deltas) = corrections(&ctx, n_max)?;
    let sys = &ctx.system;
    let sigma = ctx.phase.sigma();
    let nodes = ctx.x_nodes();

    let mut values = vec![sigma * normalization_a(sys, 0, ctx.span())];
    for n in 1..=n_max {
        let integral = if n == 1 {
            space_time_sum(&ctx.t_nodes(ctx.qi.t, ctx.qf.t), &nodes, |t| {
                nodes
                    .points
                    .iter()
                    .map(|&x| {
                        let q = SpacetimePoint::new(x, t);
                        Ok(amp(sys, q, ctx.qf, ParticleKind::Particle)? * amp(sys, ctx.qi, q, ParticleKind::Particle)?)
                    })
                    .collect()
            })
        } else {
            space_time_sum(&ctx.triangle(), &nodes, |t| {
                let inner = correction_profile(&ctx, &nodes, n - 1, t)?;
                nodes
                    .points
                    .iter()
                    .zip(inner)
                    .map(|(&x, d)| Ok(amp(sys, SpacetimePoint::new(x, t), ctx.qf, ParticleKind::Particle)? * d))
                    .collect()
            })
        }
        .map_err(|e| e.at_stage("B integral", n))?;
        let prefactor = if n == 1 { sigma * sigma } else { sigma * values[n - 1] };
        values.push(prefactor * integral / deltas[n - 1]);
    }
    Ok(NormalizationTableB { values, context: ctx })
}

/// `B_n` when hops may run backward: the time integral over all of `T`
/// splits at `t_I` and `t_F` into `I_L + I_M + I_R`.
pub fn solve_b_bidirectional(ctx: &ExperimentContext, n_max: usize) -> Result<NormalizationTableB> {
    let ctx = ctx.with_model(TimeModel::Bidirectional);
    ctx.validate()?;
    check_n_max(n_max)?;
    let (_, deltas) = corrections(&ctx, n_max)?;
    let sys = &ctx.system;
    let sigma = ctx.phase.sigma();
    let nodes = ctx.x_nodes();
    let (t_min, t_max) = (ctx.region.t_lo, ctx.region.t_hi);
    let left = ctx.t_nodes(t_min, ctx.qi.t);
    let middle = ctx.t_nodes(ctx.qi.t, ctx.qf.t);
    let right = ctx.t_nodes(ctx.qf.t, t_max);

    let mut values = vec![sigma * normalization_a(sys, 0, ctx.span())];
    for n in 1..=n_max {
        // ψ_{n−1}(q, q_I) with the σ/B factors stripped: classical
        // amplitudes for n = 1, corrections Δφ_{n−1} / Δφ̄_{n−1} after.
        let source = |t: f64| -> Result<Vec<Complex64>> {
            if n == 1 {
                nodes
                    .points
                    .iter()
                    .map(|&x| {
                        let q = SpacetimePoint::new(x, t);
                        if t < ctx.qi.t {
                            // ⟨q_I|q⟩̄ as displayed for I_L: the antiparticle goes q → q_I.
                            amp(sys, q, ctx.qi, ParticleKind::AntiParticle)
                        } else {
                            amp(sys, ctx.qi, q, ParticleKind::Particle)
                        }
                    })
                    .collect()
            } else {
                correction_profile(&ctx, &nodes, n - 1, t)
            }
        };
        // ⟨q_F|q⟩ for I_L and I_M; ⟨q|q_F⟩̄ for I_R.
        let closing = |t: f64, x: f64| -> Result<Complex64> {
            let q = SpacetimePoint::new(x, t);
            if t > ctx.qf.t {
                amp(sys, ctx.qf, q, ParticleKind::AntiParticle)
            } else {
                amp(sys, q, ctx.qf, ParticleKind::Particle)
            }
        };
        let slice = |t: f64| -> Result<Vec<Complex64>> {
            let inner = source(t)?;
            nodes
                .points
                .iter()
                .zip(inner)
                .map(|(&x, s)| Ok(closing(t, x)? * s))
                .collect()
        };
        let total = [&left, &middle, &right]
            .into_iter()
            .map(|times| space_time_sum(times, &nodes, slice))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_stage("B integral", n))?;
        let integral = total[0] + total[1] + total[2];
        let prefactor = if n == 1 { sigma * sigma } else { sigma * values[n - 1] };
        values.push(prefactor * integral / deltas[n - 1]);
    }
    Ok(NormalizationTableB { values, context: ctx })
}

/// Dispatches on `ctx.model`.
pub fn solve_b(ctx: &ExperimentContext, n_max: usize) -> Result<NormalizationTableB> {
    match ctx.model {
        TimeModel::Unidirectional => solve_b_unidirectional(ctx, n_max),
        TimeModel::Bidirectional => solve_b_bidirectional(ctx, n_max),
    }
}

/// `ψ_n(q_F, q_I)` from the recursion
/// `ψ_n = (B_{n−1}/B_n) ∫_X ∫_{T′} ⟨q_F|q⟩_h ψ_{n−1}(q, q_I) dt dx`,
/// `ψ₀ = ⟨q_F|q_I⟩_h / B₀`.
///
/// For the inner factor at an intermediate endpoint `q`, the solved
/// finitary amplitude is used: `ψ₀(q, q_I) = ⟨q|q_I⟩_h / B₀`, and for
/// `k ≥ 1` `ψ_k(q, q_I) = Δφ_k(q, q_I)` (or the antiparticle `Δφ̄_k(q_I, q)`
/// when `q` precedes `q_I`), which is how the particle and antiparticle
/// amplitudes feed each other.
pub fn psi_n(ctx: &ExperimentContext, n: usize, table: &NormalizationTableB) -> Result<Complex64> {
    if table.context != *ctx {
        return Err(Error::ContextMismatch);
    }
    ctx.validate()?;
    if n > table.n_max() {
        return Err(Error::InvalidInput(format!(
            "table holds B_0..B_{}, psi_{n} requested",
            table.n_max()
        )));
    }
    let (sys, phase, model) = (&ctx.system, &ctx.phase, ctx.model);
    let b = &table.values;
    if n == 0 {
        return Ok(hop_amplitude(sys, phase, &ctx.qi, &ctx.qf, model)? / b[0]);
    }
    let nodes = ctx.x_nodes();
    let slice = |t: f64| -> Result<Vec<Complex64>> {
        let inner: Vec<Complex64> = if n == 1 {
            nodes
                .points
                .iter()
                .map(|&x| Ok(hop_amplitude(sys, phase, &ctx.qi, &SpacetimePoint::new(x, t), model)? / b[0]))
                .collect::<Result<_>>()?
        } else {
            correction_profile(ctx, &nodes, n - 1, t)?
        };
        nodes
            .points
            .iter()
            .zip(inner)
            .map(|(&x, psi_prev)| Ok(hop_amplitude(sys, phase, &SpacetimePoint::new(x, t), &ctx.qf, model)? * psi_prev))
            .collect()
    };
    let pieces: Vec<NodeSet> = match model {
        TimeModel::Unidirectional if n == 1 => vec![ctx.t_nodes(ctx.qi.t, ctx.qf.t)],
        TimeModel::Unidirectional => vec![ctx.triangle()],
        TimeModel::Bidirectional => vec![
            ctx.t_nodes(ctx.region.t_lo, ctx.qi.t),
            ctx.t_nodes(ctx.qi.t, ctx.qf.t),
            ctx.t_nodes(ctx.qf.t, ctx.region.t_hi),
        ],
    };
    let integral = pieces
        .iter()
        .map(|times| space_time_sum(times, &nodes, slice))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage("psi integral", n))?
        .into_iter()
        .fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    Ok(b[n - 1] / b[n] * integral)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// `|ψ_n|` for `n = 1 ..= n_max`.
    pub magnitudes: Vec<f64>,
    /// `|ψ_n|` strictly decreasing in `n`.
    pub monotone_decay: bool,
}

/// `ψ₀ + … + ψ_{n_max}` and the size of each term.
pub fn psi_total(ctx: &ExperimentContext, n_max: usize, table: &NormalizationTableB) -> Result<(Complex64, TailReport)> {
    let terms = (0..=n_max)
        .map(|n| psi_n(ctx, n, table))
        .collect::<Result<Vec<_>>>()?;
    let magnitudes: Vec<f64> = terms[1..].iter().map(|t| t.norm()).collect();
    let monotone_decay = magnitudes.windows(2).all(|w| w[1] < w[0]);
    let total = terms.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    Ok((total, TailReport { magnitudes, monotone_decay }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standard::delta_phi;

    fn p(x: f64, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(x, t)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn narrow(model: TimeModel, margin: f64) -> ExperimentContext {
        ExperimentContext {
            system: PhysicalSystem::natural_free(),
            region: Region::new(-0.75, 1.25, -margin, 1.0 + margin).unwrap(),
            qi: p(0.0, 0.0),
            qf: p(0.5, 1.0),
            model,
            spec: QuadratureSpec::new(8, 2, 1).unwrap(),
            phase: PhaseParam::default(),
        }
    }

    #[test]
    fn hop_action_examples() {
        let sys = PhysicalSystem::natural_free();
        let zero = PhaseParam::default();
        assert_eq!(hop_action(&sys, &zero, &p(0.3, 0.2), &p(0.3, 0.2)).unwrap(), 0.0);
        assert_eq!(hop_action(&sys, &zero, &p(0.0, 0.0), &p(1.0, 1.0)).unwrap(), 0.5);
        assert_eq!(hop_action(&sys, &zero, &p(1.0, 1.0), &p(0.0, 0.0)).unwrap(), 0.5);
        assert!(matches!(hop_action(&sys, &zero, &p(0.0, 1.0), &p(1.0, 1.0)), Err(Error::NoAction)));
        let rho = PhaseParam::new(0.25).unwrap();
        assert_eq!(hop_action(&sys, &rho, &p(0.3, 0.2), &p(0.3, 0.2)).unwrap(), 0.25);
    }

    #[test]
    fn hop_amplitude_cases() {
        let sys = PhysicalSystem::natural_free();
        let phase = PhaseParam::new(0.9).unwrap();
        let bi = TimeModel::Bidirectional;
        assert_eq!(hop_amplitude(&sys, &phase, &p(0.1, 0.4), &p(0.1, 0.4), bi).unwrap(), Complex64::cis(0.9));
        assert_eq!(hop_amplitude(&sys, &phase, &p(0.1, 0.4), &p(0.7, 0.4), bi).unwrap(), Complex64::new(0.0, 0.0));
        let zero = PhaseParam::default();
        let fwd = hop_amplitude(&sys, &zero, &p(0.0, 0.0), &p(1.0, 1.0), bi).unwrap();
        assert_eq!(fwd, classical_amplitude(&sys, &p(0.0, 0.0), &p(1.0, 1.0), ParticleKind::Particle).unwrap());
        let uni = TimeModel::Unidirectional;
        assert_eq!(hop_amplitude(&sys, &phase, &p(1.0, 1.0), &p(0.0, 0.0), uni).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(hop_amplitude(&sys, &phase, &p(1.0, 1.0), &p(1.0, 1.0), uni).unwrap(), Complex64::new(0.0, 0.0));
        let back = hop_amplitude(&sys, &zero, &p(1.0, 1.0), &p(0.0, 0.0), bi).unwrap();
        assert!((back - Complex64::cis(0.5)).norm() < 1e-15);
    }

    #[test]
    fn path_amplitude_examples() {
        let sys = PhysicalSystem::natural_free();
        let phase = PhaseParam::new(0.4).unwrap();
        let nulls = HopPath::new(vec![p(0.0, 0.0), p(0.0, 0.0), p(0.0, 0.0)], TimeModel::Bidirectional).unwrap();
        assert!((path_amplitude(&sys, &phase, &nulls).unwrap() - phase.sigma().powu(2)).norm() < 1e-15);
        let banned = HopPath::new(vec![p(0.0, 0.0), p(0.5, 0.0), p(1.0, 1.0)], TimeModel::Bidirectional).unwrap();
        assert_eq!(path_amplitude(&sys, &phase, &banned).unwrap(), Complex64::new(0.0, 0.0));
        let straight = HopPath::new(vec![p(0.0, 0.0), p(0.5, 0.5), p(1.0, 1.0)], TimeModel::Unidirectional).unwrap();
        let got = path_amplitude(&sys, &PhaseParam::default(), &straight).unwrap();
        assert!((got - Complex64::cis(0.25) * Complex64::cis(0.25)).norm() < 1e-15);
        assert!((got - Complex64::cis(0.5)).norm() < 1e-15);
    }

    #[test]
    fn hop_path_validation() {
        assert!(HopPath::new(vec![p(0.0, 0.0)], TimeModel::Bidirectional).is_err());
        assert!(HopPath::new(vec![p(0.0, 0.0), p(0.5, 0.0)], TimeModel::Unidirectional).is_err());
        assert!(HopPath::new(vec![p(0.0, 0.0), p(0.5, 0.0)], TimeModel::Bidirectional).is_ok());
        let region = Region::new(-1.0, 1.0, 0.0, 1.0).unwrap();
        let path = HopPath::new(vec![p(0.0, 0.0), p(2.0, 0.5), p(0.5, 1.0)], TimeModel::Unidirectional).unwrap();
        assert!(path.check_admissible(&region, &p(0.0, 0.0), &p(0.5, 1.0)).is_err());
    }

    #[test]
    fn base_factor_and_psi_zero() {
        let ctx = narrow(TimeModel::Unidirectional, 0.0).with_phase(PhaseParam::new(0.7).unwrap());
        let table = solve_b(&ctx, 1).unwrap();
        let a0 = normalization_a(&ctx.system, 0, 1.0);
        assert!((table.values[0] - ctx.phase.sigma() * a0).norm() < 1e-12);
        let psi0 = psi_n(&ctx, 0, &table).unwrap();
        let phi0 = ctx.phi(0).unwrap();
        assert!(rel(psi0, phi0) < 1e-12);
        let forward = classical_amplitude(&ctx.system, &ctx.qi, &ctx.qf, ParticleKind::Particle).unwrap();
        assert!((psi0 * table.values[0] - ctx.phase.sigma() * forward).norm() < 1e-12);
    }

    #[test]
    fn unidirectional_round_trip() {
        let ctx = narrow(TimeModel::Unidirectional, 0.0);
        let table = solve_b_unidirectional(&ctx, 2).unwrap();
        for n in 1..=2 {
            let psi = psi_n(&ctx, n, &table).unwrap();
            let dphi = delta_phi(&ctx.system, &ctx.region, &ctx.qi, &ctx.qf, n, &ctx.spec, ParticleKind::Particle).unwrap();
            assert!(rel(psi, dphi) < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn bidirectional_round_trip_with_margins() {
        let ctx = narrow(TimeModel::Bidirectional, 0.25);
        let table = solve_b_bidirectional(&ctx, 2).unwrap();
        for n in 1..=2 {
            let psi = psi_n(&ctx, n, &table).unwrap();
            let dphi = delta_phi(&ctx.system, &ctx.region, &ctx.qi, &ctx.qf, n, &ctx.spec, ParticleKind::Particle).unwrap();
            assert!(rel(psi, dphi) < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn bidirectional_without_margins_reduces_to_unidirectional_b1() {
        let ctx = narrow(TimeModel::Bidirectional, 0.0);
        let bi = solve_b_bidirectional(&ctx, 1).unwrap();
        let uni = solve_b_unidirectional(&ctx, 1).unwrap();
        assert!(rel(bi.values[1], uni.values[1]) < 1e-13);
    }

    #[test]
    fn partial_sums_telescope_to_phi() {
        let ctx = narrow(TimeModel::Unidirectional, 0.0);
        let table = solve_b(&ctx, 3).unwrap();
        let (total, tail) = psi_total(&ctx, 3, &table).unwrap();
        assert_eq!(tail.magnitudes.len(), 3);
        assert!(rel(total, ctx.phi(3).unwrap()) < 1e-8);
    }

    #[test]
    fn psi_is_independent_of_rho() {
        let base = narrow(TimeModel::Bidirectional, 0.1);
        let reference: Vec<Complex64> = {
            let t = solve_b(&base, 2).unwrap();
            (0..=2).map(|n| psi_n(&base, n, &t).unwrap()).collect()
        };
        for rho in [0.7, std::f64::consts::FRAC_PI_2] {
            let ctx = base.with_phase(PhaseParam::new(rho).unwrap());
            let t = solve_b(&ctx, 2).unwrap();
            assert_eq!(t.values[0], ctx.phase.sigma() * normalization_a(&ctx.system, 0, 1.0));
            for (n, r) in reference.iter().enumerate() {
                assert!(rel(psi_n(&ctx, n, &t).unwrap(), *r) < 1e-8);
            }
        }
    }

    #[test]
    fn table_context_is_enforced() {
        let ctx = narrow(TimeModel::Unidirectional, 0.0);
        let table = solve_b(&ctx, 1).unwrap();
        let moved = ExperimentContext { qf: p(0.4, 1.0), ..ctx };
        assert!(matches!(psi_n(&moved, 1, &table), Err(Error::ContextMismatch)));
        assert!(matches!(psi_n(&ctx.with_model(TimeModel::Bidirectional), 1, &table), Err(Error::ContextMismatch)));
        assert!(psi_n(&ctx, 2, &table).is_err());
    }
}
