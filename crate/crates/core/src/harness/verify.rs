//! The verification suite behind `hoppath verify` and the acceptance tests.
//!
//! Each check is a plain function returning an [`Outcome`]; errors become
//! failed rows rather than propagating.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bundled;
use super::config::{ExperimentConfig, DEFAULT_SEED};
use super::report::run_experiment;
use crate::action::{ParticleKind, PhysicalSystem, SpacetimePoint};
use crate::error::{Error, Result};
use crate::finitary::{path_amplitude, psi_n, solve_b, HopPath, PhaseParam, TimeModel};
use crate::quadrature::integrate_1d_panels;
use crate::standard::{delta_phi, free_propagator, normalization_a, phi_n};
use crate::xmachine::{
    additive_behavior_closed, additive_behavior_truncated, compile_path_to_machine, loop_resummation, machine_behavior,
    single_loop_machine, sum_over_machines_with, universal_relation_machine, AdditiveXMachine, CoverSemantics,
    FiniteStateMachine, HopAmplitudeModel, MultiplierLabeling,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Standard,
    Finitary,
    Xmachine,
    Cross,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Standard, Group::Finitary, Group::Xmachine, Group::Cross];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Standard => "standard",
            Group::Finitary => "finitary",
            Group::Xmachine => "xmachine",
            Group::Cross => "cross",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown verification group `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub group: Group,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<9} {:<24} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.group,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyTable {
    pub rows: Vec<Outcome>,
}

impl VerifyTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

impl fmt::Display for VerifyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{row}")?;
        }
        let failed = self.rows.iter().filter(|r| !r.passed).count();
        write!(f, "{} checks, {} failed", self.rows.len(), failed)
    }
}

/// Runs a check body, timing it and turning errors into failures. A
/// runtime budget, when given, is part of the pass condition.
fn run(group: Group, name: &str, budget: Option<f64>, body: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let result = body();
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = budget {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; over the {limit} s budget"));
        }
    }
    Outcome {
        group,
        name: name.to_owned(),
        passed,
        detail,
        seconds,
    }
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `φ₀ + Σ_{n≤N} Δφ_n = φ_N` for `N ≤ 6` on every bundled experiment.
pub fn telescoping() -> Outcome {
    run(Group::Standard, "telescoping", Some(30.0), || {
        let mut worst = 0.0f64;
        for cfg in bundled::all() {
            let (sys, region, qi, qf, spec) = (cfg.system, cfg.region, cfg.q_i, cfg.q_f, cfg.quadrature);
            let kind = ParticleKind::Particle;
            let mut partial = phi_n(&sys, &region, &qi, &qf, 0, &spec, kind)?;
            for n in 1..=6 {
                partial += delta_phi(&sys, &region, &qi, &qf, n, &spec, kind)?;
                worst = worst.max(relative(partial, phi_n(&sys, &region, &qi, &qf, n, &spec, kind)?));
            }
        }
        Ok((worst <= 1e-12, format!("max relative residual {worst:.2e} (tol 1e-12)")))
    })
}

/// Free propagator with a complex displacement, same branch as
/// [`free_propagator`].
fn free_kernel(sys: &PhysicalSystem, dx: Complex64, dt: f64) -> Complex64 {
    let i = Complex64::i();
    let prefactor = (Complex64::from(sys.mass) / (2.0 * PI * sys.hbar * dt * i)).sqrt();
    prefactor * (i * sys.mass * dx * dx / (2.0 * sys.hbar * dt)).exp()
}

/// `∫_ℝ K(q_F; x, t_m) K(x, t_m; q_I) dx` along the steepest-descent line
/// through the classical position at `t_m`, where the integrand is a
/// decaying Gaussian.
fn chapman_kolmogorov_line(sys: &PhysicalSystem, qi: &SpacetimePoint, qf: &SpacetimePoint, t_mid: f64) -> Result<Complex64> {
    let (tau1, tau2) = (t_mid - qi.t, qf.t - t_mid);
    let center = qi.x + (qf.x - qi.x) * tau1 / (qf.t - qi.t);
    let curvature = sys.mass / (2.0 * sys.hbar) * (1.0 / tau1 + 1.0 / tau2);
    let reach = (60.0 / curvature).sqrt();
    let dir = Complex64::cis(FRAC_PI_4);
    integrate_1d_panels(
        |s| {
            let x = center + dir * s;
            dir * free_kernel(sys, Complex64::from(qf.x) - x, tau2) * free_kernel(sys, x - qi.x, tau1)
        },
        -reach,
        reach,
        32,
        8,
    )
}

/// Wide-window `φ_df` against the closed-form propagator, and the
/// propagator's self-composition.
pub fn propagator_consistency() -> Outcome {
    run(Group::Standard, "propagator_consistency", Some(30.0), || {
        let cfg = bundled::wide_free();
        let (sys, qi, qf) = (cfg.system, cfg.q_i, cfg.q_f);
        let k = free_propagator(&sys, &qi, &qf)?;
        let errors = (0..=4)
            .map(|df| Ok(relative(phi_n(&sys, &cfg.region, &qi, &qf, df, &cfg.quadrature, ParticleKind::Particle)?, k)))
            .collect::<Result<Vec<f64>>>()?;
        let mut ck = 0.0f64;
        let mut ck_window = 0.0f64;
        for t_mid in [0.25, 0.5, 0.75] {
            ck = ck.max(relative(chapman_kolmogorov_line(&sys, &qi, &qf, t_mid)?, k));
            let within = integrate_1d_panels(
                |x| {
                    let q = SpacetimePoint::new(x, t_mid);
                    free_kernel(&sys, Complex64::from(qf.x - q.x), qf.t - t_mid) * free_kernel(&sys, Complex64::from(x - qi.x), t_mid - qi.t)
                },
                cfg.region.x_lo,
                cfg.region.x_hi,
                cfg.quadrature.rule_order,
                cfg.quadrature.panels_x,
            )?;
            ck_window = ck_window.max(relative(within, k));
        }
        let worst = max(errors.iter().copied());
        let passed = worst <= 1e-4 && ck <= 1e-5;
        let list: Vec<String> = errors.iter().map(|e| format!("{e:.1e}")).collect();
        Ok((
            passed,
            format!(
                "phi_df vs K rel err df=0..4 [{}] (tol 1e-4); CK on the real line {ck:.1e}, inside X {ck_window:.1e} (tol 1e-5)",
                list.join(", ")
            ),
        ))
    })
}

fn narrow_pair() -> [ExperimentConfig; 2] {
    [bundled::narrow_free(), bundled::narrow_free_bidirectional()]
}

/// `ψ₀ = φ₀` and `ψ_n = Δφ_n` for `n = 1, 2`, both time models.
pub fn psi_identity() -> Outcome {
    run(Group::Finitary, "psi_equals_dphi", Some(60.0), || {
        let mut worst = 0.0f64;
        for cfg in narrow_pair() {
            let ctx = cfg.context()?;
            let table = solve_b(&ctx, 2)?;
            let kind = ParticleKind::Particle;
            let phi0 = phi_n(&ctx.system, &ctx.region, &ctx.qi, &ctx.qf, 0, &ctx.spec, kind)?;
            worst = worst.max(relative(psi_n(&ctx, 0, &table)?, phi0));
            for n in 1..=2 {
                let d = delta_phi(&ctx.system, &ctx.region, &ctx.qi, &ctx.qf, n, &ctx.spec, kind)?;
                worst = worst.max(relative(psi_n(&ctx, n, &table)?, d));
            }
        }
        Ok((worst <= 1e-8, format!("max relative error {worst:.2e} (tol 1e-8)")))
    })
}

/// `ψ_n` unchanged and `B₀ = σA₀` exactly for `ρ ∈ {0, 0.7, π/2}`.
pub fn sigma_independence() -> Outcome {
    run(Group::Finitary, "sigma_independence", None, || {
        let mut worst = 0.0f64;
        let mut b0_exact = true;
        for cfg in narrow_pair() {
            let base = cfg.context()?;
            let mut reference: Option<Vec<Complex64>> = None;
            for rho in [0.0, 0.7, FRAC_PI_2] {
                let ctx = base.with_phase(PhaseParam::new(rho)?);
                let table = solve_b(&ctx, 2)?;
                b0_exact &= table.values[0] == ctx.phase.sigma() * normalization_a(&ctx.system, 0, ctx.qf.t - ctx.qi.t);
                let psis = (0..=2).map(|n| psi_n(&ctx, n, &table)).collect::<Result<Vec<_>>>()?;
                match &reference {
                    None => reference = Some(psis),
                    Some(r) => worst = worst.max(max(psis.iter().zip(r).map(|(a, b)| relative(*a, *b)))),
                }
            }
        }
        Ok((
            worst <= 1e-8 && b0_exact,
            format!("max relative change in psi {worst:.2e} (tol 1e-8); B0 = sigma*A0 exactly: {b0_exact}"),
        ))
    })
}

/// Random forward paths from `(0, 0)` to `(0.5, 1)` with 1 to 8 hops, on a
/// free or harmonic system with random `ρ`.
pub fn random_unidirectional_paths(seed: u64, count: usize) -> Vec<(HopPath, PhysicalSystem, PhaseParam)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let hops = rng.random_range(1..=8usize);
            let mut times: Vec<f64> = (1..hops).map(|_| rng.random_range(0.01..0.99)).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let mut points = vec![SpacetimePoint::new(0.0, 0.0)];
            points.extend(times.iter().map(|&t| SpacetimePoint::new(rng.random_range(-1.0..1.5), t)));
            points.push(SpacetimePoint::new(0.5, 1.0));
            let sys = if i % 2 == 0 {
                PhysicalSystem::natural_free()
            } else {
                PhysicalSystem::harmonic(1.0, 1.0, rng.random_range(0.2..2.0)).expect("valid")
            };
            let phase = PhaseParam::new(rng.random_range(0.0..2.0 * PI)).expect("finite");
            (HopPath::new(points, TimeModel::Unidirectional).expect("times increase"), sys, phase)
        })
        .collect()
}

/// The compiled machine's `|M|⁺` equals the path amplitude.
pub fn path_compilation(seed: u64) -> Outcome {
    run(Group::Xmachine, "path_computes_amplitude", Some(5.0), || {
        let paths = random_unidirectional_paths(seed, 100);
        let mut worst = 0.0f64;
        for (path, sys, phase) in &paths {
            let m = compile_path_to_machine(path, sys, phase, TimeModel::Unidirectional)?;
            let direct = path_amplitude(sys, phase, path)?;
            worst = worst.max((additive_behavior_truncated(&m, path.hop_count()) - direct).norm());
            worst = worst.max((additive_behavior_closed(&m)? - direct).norm());
        }
        Ok((worst <= 1e-12, format!("max |behavior - amplitude| {worst:.2e} over {} paths (tol 1e-12)", paths.len())))
    })
}

/// Compiled forward paths accept exactly one word, of the path's length.
pub fn single_word(seed: u64) -> Outcome {
    run(Group::Xmachine, "single_word", None, || {
        let paths = random_unidirectional_paths(seed, 100);
        let mut bad = 0usize;
        for (path, sys, phase) in &paths {
            let m = compile_path_to_machine(path, sys, phase, TimeModel::Unidirectional)?;
            let len = path.hop_count();
            for bound in len..=len + 3 {
                let words = m.fsm().accepted_words(bound);
                if words.len() != 1 || words.iter().any(|w| w.len() != len) {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{bad} of {} (path, bound) pairs without a unique word", paths.len() * 4)))
    })
}

fn random_complex(rng: &mut ChaCha8Rng, max_modulus: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.0..=max_modulus), rng.random_range(0.0..2.0 * PI))
}

/// Closed-form loop amplitude against partial sums `Σ_{j≤L}` computed by
/// truncating the single-loop machine. The tail is exactly `|ψ*|·|ψ_v|^L`.
pub fn loop_resummation_check(seed: u64) -> Outcome {
    run(Group::Xmachine, "loop_resummation", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x100);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let (u, v, w) = (random_complex(&mut rng, 1.0), random_complex(&mut rng, 0.9), random_complex(&mut rng, 1.0));
            let closed = loop_resummation(u, v, w)?;
            let m = single_loop_machine(u, v, w);
            for l in 10..=60 {
                let partial = additive_behavior_truncated(&m, l + 2);
                let bound = v.norm().powi(l as i32) * closed.norm() + 1e-15;
                worst = worst.max((closed - partial).norm() / bound);
            }
        }
        Ok((
            worst <= 1.0 + 1e-9,
            format!("max |psi* - S_L| / (|psi*| |v|^L) = {worst:.6} over 50 triples, L = 10..60 (must be <= 1)"),
        ))
    })
}

/// A machine with at most 5 states and 8 transitions whose `|H|` has
/// spectral radius drawn from `[0.1, 0.8]`.
pub fn random_machine(rng: &mut ChaCha8Rng) -> Result<AdditiveXMachine> {
    let n = rng.random_range(2..=5usize);
    let m = rng.random_range(1..=8usize);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let symbols: Vec<String> = (0..m).map(|i| format!("a{i}")).collect();
    let transitions: Vec<(String, String, String)> = symbols
        .iter()
        .map(|a| {
            let from = rng.random_range(0..n);
            let to = rng.random_range(0..n);
            (states[from].clone(), a.clone(), states[to].clone())
        })
        .collect();
    let mut finals = vec![states[rng.random_range(0..n)].clone()];
    if rng.random_bool(0.3) {
        finals.push(states[rng.random_range(0..n)].clone());
    }
    finals.sort();
    finals.dedup();
    let fsm = FiniteStateMachine::new(&states, &symbols, &transitions, &states[0], &finals)?;
    let labels: Vec<Complex64> = (0..m).map(|_| Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI))).collect();
    let raw = AdditiveXMachine::new(
        fsm.clone(),
        MultiplierLabeling::new(symbols.iter().cloned().zip(labels.iter().copied()).collect()),
        CoverSemantics::TransitionCover,
    )?;
    let radius = raw.spectral_radius_bound();
    let target = rng.random_range(0.1..=0.8);
    let scale = if radius > 0.0 { target / radius } else { 1.0 };
    let scaled = symbols.iter().cloned().zip(labels.iter().map(|c| c * scale)).collect();
    AdditiveXMachine::new(fsm, MultiplierLabeling::new(scaled), CoverSemantics::TransitionCover)
}

/// Inclusion–exclusion closed form against truncated enumeration.
pub fn resolvent_vs_truncated(seed: u64) -> Outcome {
    run(Group::Xmachine, "resolvent_vs_truncated", Some(60.0), || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x200);
        let mut worst = 0.0f64;
        let mut radius = 0.0f64;
        for _ in 0..50 {
            let m = random_machine(&mut rng)?;
            radius = radius.max(m.spectral_radius_bound());
            let closed = additive_behavior_closed(&m)?;
            worst = worst.max((closed - additive_behavior_truncated(&m, 80)).norm());
        }
        Ok((
            worst <= 1e-8,
            format!("max |closed - truncated(80)| {worst:.2e} over 50 machines, largest radius {radius:.3} (tol 1e-8)"),
        ))
    })
}

/// Every walk `q_I → … → q_F` on the lattice with at most `max_hops` hops.
pub fn lattice_walks(lattice: &bundled::Lattice, max_hops: usize) -> Vec<HopPath> {
    let (qi, qf) = (lattice.points[0], lattice.points[lattice.points.len() - 1]);
    let mut out = Vec::new();
    let mut prefixes = vec![vec![qi]];
    for _ in 1..=max_hops {
        for p in &prefixes {
            let mut full = p.clone();
            full.push(qf);
            out.push(HopPath::new(full, TimeModel::Bidirectional).expect("lattice walk"));
        }
        prefixes = prefixes
            .iter()
            .flat_map(|p| {
                lattice.points.iter().map(move |q| {
                    let mut next = p.clone();
                    next.push(*q);
                    next
                })
            })
            .collect();
    }
    out
}

pub const LATTICE_MAX_HOPS: usize = 12;

/// Sum over distinct machines against the full walk sum, and the direct
/// path sum's approach to it as the length bound grows.
pub fn machine_sum_decomposition() -> Outcome {
    run(Group::Xmachine, "machine_sum_decomposition", Some(60.0), || {
        let lattice = bundled::lattice()?;
        let n = lattice.points.len();
        let mut h = DMatrix::<Complex64>::zeros(n, n);
        for (i, q) in lattice.points.iter().enumerate() {
            for (j, q_next) in lattice.points.iter().enumerate() {
                h[(i, j)] = lattice.hops.amplitude(q, q_next)?;
            }
        }
        let resolvent = (DMatrix::identity(n, n) - &h)
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("I - H is singular".into()))?;
        let all_walks = resolvent[(0, n - 1)];
        let radius = crate::xmachine::additive::spectral_radius_bound(&h.map(|c| c.norm()));

        let walks = lattice_walks(&lattice, LATTICE_MAX_HOPS);
        let sum = sum_over_machines_with(&walks, &lattice.hops, CoverSemantics::TransitionCover)?;
        let machine_gap = (sum.machine_sum - all_walks).norm();

        let mut by_length = vec![Complex64::new(0.0, 0.0); LATTICE_MAX_HOPS + 1];
        for w in &walks {
            by_length[w.hop_count()] += crate::xmachine::path_amplitude_with(w, &lattice.hops)?;
        }
        let mut direct = Complex64::new(0.0, 0.0);
        let mut gap_ok = true;
        let mut last_gap = 0.0;
        for (l, part) in by_length.iter().enumerate().skip(1) {
            direct += part;
            last_gap = (direct - all_walks).norm();
            gap_ok &= last_gap <= radius.powi(l as i32);
        }
        let passed = machine_gap <= 1e-12 * all_walks.norm() && gap_ok;
        Ok((
            passed,
            format!(
                "{} walks, {} machines; |machine sum - walk sum| {machine_gap:.1e}; direct gap at L={} {last_gap:.1e} vs radius^L {:.1e}; gap bound held at every L: {gap_ok}",
                walks.len(),
                sum.classes.len(),
                LATTICE_MAX_HOPS,
                radius.powi(LATTICE_MAX_HOPS as i32)
            ),
        ))
    })
}

/// Random finite relations realized by the two-state construction.
pub fn universality(seed: u64) -> Outcome {
    run(Group::Xmachine, "universality", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x300);
        let mut mismatches = 0usize;
        for _ in 0..20 {
            let size = rng.random_range(1..=20usize);
            let zeta: Vec<(i64, i64)> = (0..size).map(|_| (rng.random_range(0..8), rng.random_range(0..8))).collect();
            let (fsm, labeling) = universal_relation_machine(zeta.clone(), -1)?;
            for y in -1..10 {
                let expected: BTreeSet<i64> = zeta.iter().filter(|(a, _)| *a == y).map(|(_, b)| *b).collect();
                let got: BTreeSet<i64> = machine_behavior(&fsm, &labeling, &y, None)?.into_iter().collect();
                if got != expected {
                    mismatches += 1;
                }
            }
        }
        Ok((mismatches == 0, format!("{mismatches} mismatched inputs over 20 relations")))
    })
}

/// Every bundled experiment runs end to end with passing identity rows.
pub fn bundled_reports() -> Outcome {
    run(Group::Cross, "bundled_reports", None, || {
        let mut notes = Vec::new();
        let mut passed = true;
        for cfg in bundled::all() {
            let start = Instant::now();
            let report = run_experiment(&cfg)?;
            let secs = start.elapsed().as_secs_f64();
            let ok = report.passed() && secs < 60.0;
            passed &= ok;
            notes.push(format!("{} {} ({secs:.1}s)", cfg.name, if ok { "ok" } else { "FAILED" }));
        }
        Ok((passed, notes.join(", ")))
    })
}

/// Two runs of the same config give byte-identical CSV.
pub fn csv_determinism() -> Outcome {
    run(Group::Cross, "csv_determinism", None, || {
        let cfg = bundled::narrow_free_bidirectional();
        let first = run_experiment(&cfg)?.to_csv();
        let second = run_experiment(&cfg)?.to_csv();
        Ok((first == second, format!("{} bytes, identical: {}", first.len(), first == second)))
    })
}

pub fn group_checks(group: Group, seed: u64) -> Vec<Outcome> {
    match group {
        Group::Standard => vec![telescoping(), propagator_consistency()],
        Group::Finitary => vec![psi_identity(), sigma_independence()],
        Group::Xmachine => vec![
            path_compilation(seed),
            single_word(seed),
            loop_resummation_check(seed),
            resolvent_vs_truncated(seed),
            machine_sum_decomposition(),
            universality(seed),
        ],
        Group::Cross => vec![bundled_reports(), csv_determinism()],
    }
}

/// Runs the selected groups in the canonical order.
pub fn verify_suite(selection: &[Group], seed: u64) -> VerifyTable {
    let chosen: BTreeSet<Group> = selection.iter().copied().collect();
    VerifyTable {
        rows: chosen.into_iter().flat_map(|g| group_checks(g, seed)).collect(),
    }
}

pub fn verify_all() -> VerifyTable {
    verify_suite(&Group::ALL, DEFAULT_SEED)
}
