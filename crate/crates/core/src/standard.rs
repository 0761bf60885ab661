//! Time-sliced path integral.
//!
//! `φ_df(q_F, q_I)` fixes `df` intermediate observation times at equal
//! spacing `ε = (t_F − t_I)/(df + 1)` and integrates the product of
//! elementary amplitudes over every intermediate position in `X`:
//!
//! ```text
//! φ_df = (1/A_df) ∫ ⟨q_F|q̄_df⟩ dx_df ⟨q̄_df|q̄_{df−1}⟩ … dx_1 ⟨q̄_1|q_I⟩
//! ```
//!
//! The iterated integral is evaluated slice by slice (a transfer-matrix
//! recursion): a function sampled on the quadrature nodes of `X` is pushed
//! one slice forward by the kernel matrix, which costs `O(df · n²)` rather
//! than `O(n^df)` for a direct cubature. The kernel only depends on the
//! slice spacing, so one matrix serves every step.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{classical_amplitude, ParticleKind, PhysicalSystem, Region, SpacetimePoint};
use crate::error::{Error, Result};
use crate::quadrature::{NodeSet, QuadratureSpec};

/// The fixed observation times of a `df`-slice run together with the
/// spatial nodes of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGrid {
    pub df: usize,
    pub eps: f64,
    pub times: Vec<f64>,
    pub x_nodes: NodeSet,
}

impl SliceGrid {
    pub fn new(region: &Region, t_start: f64, t_end: f64, df: usize, spec: &QuadratureSpec) -> Result<Self> {
        if t_end <= t_start {
            return Err(Error::TemporalOrder {
                start: t_start,
                end: t_end,
            });
        }
        Ok(Self {
            df,
            eps: (t_end - t_start) / (df + 1) as f64,
            times: slice_times(t_start, t_end, df),
            x_nodes: spec.x_nodes(region.x_lo, region.x_hi),
        })
    }
}

fn slice_times(t_start: f64, t_end: f64, df: usize) -> Vec<f64> {
    let span = t_end - t_start;
    let parts = (df + 1) as f64;
    let mut times: Vec<f64> = (0..=df).map(|k| t_start + span * k as f64 / parts).collect();
    times.push(t_end);
    times
}

/// Solved `A₀ … A_n` for one slice spacing family.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationTableA {
    pub values: Vec<Complex64>,
}

impl NormalizationTableA {
    /// `A_n` for a path of duration `span`, `n = 0..=n_max`.
    pub fn for_span(sys: &PhysicalSystem, span: f64, n_max: usize) -> Self {
        Self {
            values: (0..=n_max)
                .map(|n| normalization_a(sys, n, span / (n + 1) as f64))
                .collect(),
        }
    }
}

/// `A_df = (2πiħε/m)^{(df+1)/2}` on the principal branch.
pub fn normalization_a(sys: &PhysicalSystem, df: usize, eps: f64) -> Complex64 {
    let base = Complex64::new(0.0, 2.0 * std::f64::consts::PI * sys.hbar * eps / sys.mass);
    base.sqrt().powu(df as u32 + 1)
}

/// Free-particle propagator `(m/2πiħT)^{1/2} exp(i m Δx² / 2ħT)`.
pub fn free_propagator(sys: &PhysicalSystem, qi: &SpacetimePoint, qf: &SpacetimePoint) -> Result<Complex64> {
    if !sys.is_free() {
        return Err(Error::UnsupportedSystem(
            "closed-form propagator is only available for the free particle".into(),
        ));
    }
    let span = qf.t - qi.t;
    if span <= 0.0 {
        return Err(Error::TemporalOrder { start: qi.t, end: qf.t });
    }
    let prefactor = Complex64::new(
        0.0,
        -sys.mass / (2.0 * std::f64::consts::PI * sys.hbar * span),
    )
    .sqrt();
    let dx = qf.x - qi.x;
    Ok(prefactor * Complex64::cis(sys.mass * dx * dx / (2.0 * sys.hbar * span)))
}

/// Which of the two ends of a profile is pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Anchor {
    /// The fixed point is the start; the profile ranges over end positions.
    Start,
    /// The fixed point is the end; the profile ranges over start positions.
    End,
}

/// Dense kernel `K[i][j] = ⟨(x_i, t + ε)|(x_j, t)⟩`.
struct Kernel {
    n: usize,
    data: Vec<Complex64>,
}

impl Kernel {
    fn build(sys: &PhysicalSystem, kind: ParticleKind, xs: &[f64], t0: f64, t1: f64) -> Result<Self> {
        let n = xs.len();
        let rows: Vec<Vec<Complex64>> = xs
            .par_iter()
            .map(|&xi| {
                let to = SpacetimePoint::new(xi, t1);
                xs.iter()
                    .map(|&xj| classical_amplitude(sys, &SpacetimePoint::new(xj, t0), &to, kind))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `K v`
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// `Kᵀ v`
    fn apply_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .into_par_iter()
            .map(|j| (0..self.n).fold(Complex64::new(0.0, 0.0), |acc, i| acc + self.data[i * self.n + j] * v[i]))
            .collect()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

fn weighted(v: &mut [Complex64], w: &[f64]) {
    for (v, w) in v.iter_mut().zip(w) {
        *v *= w;
    }
}

/// `φ_df` between a pinned point and every node of `nodes` at time
/// `other_t`. With [`Anchor::Start`] the result is `φ_df((x, other_t), anchor)`;
/// with [`Anchor::End`] it is `φ_df(anchor, (x, other_t))`.
pub(crate) fn phi_profile(
    sys: &PhysicalSystem,
    kind: ParticleKind,
    nodes: &NodeSet,
    anchor: SpacetimePoint,
    side: Anchor,
    other_t: f64,
    df: usize,
) -> Result<Vec<Complex64>> {
    let (t_start, t_end) = match side {
        Anchor::Start => (anchor.t, other_t),
        Anchor::End => (other_t, anchor.t),
    };
    if t_end <= t_start {
        return Err(Error::TemporalOrder {
            start: t_start,
            end: t_end,
        });
    }
    let times = slice_times(t_start, t_end, df);
    let a = normalization_a(sys, df, (t_end - t_start) / (df + 1) as f64);
    let xs = &nodes.points;

    let edge = |x: f64| -> Result<Complex64> {
        match side {
            Anchor::Start => classical_amplitude(sys, &anchor, &SpacetimePoint::new(x, t_end), kind),
            Anchor::End => classical_amplitude(sys, &SpacetimePoint::new(x, t_start), &anchor, kind),
        }
    };
    if df == 0 {
        return xs.iter().map(|&x| edge(x).map(|v| v / a)).collect();
    }

    let kernel = Kernel::build(sys, kind, xs, times[0], times[1])?;
    let mut f: Vec<Complex64> = match side {
        // f₁(x) = ⟨(x, t₁)|anchor⟩
        Anchor::Start => xs
            .iter()
            .map(|&x| classical_amplitude(sys, &anchor, &SpacetimePoint::new(x, times[1]), kind))
            .collect::<Result<_>>()?,
        // g_df(x) = ⟨anchor|(x, t_df)⟩
        Anchor::End => xs
            .iter()
            .map(|&x| classical_amplitude(sys, &SpacetimePoint::new(x, times[df]), &anchor, kind))
            .collect::<Result<_>>()?,
    };
    for _ in 1..df {
        weighted(&mut f, &nodes.weights);
        f = match side {
            Anchor::Start => kernel.apply(&f),
            Anchor::End => kernel.apply_transpose(&f),
        };
    }
    weighted(&mut f, &nodes.weights);
    let out = match side {
        Anchor::Start => kernel.apply(&f),
        Anchor::End => kernel.apply_transpose(&f),
    };
    Ok(out.into_iter().map(|v| v / a).collect())
}

fn check_endpoints(region: &Region, qi: &SpacetimePoint, qf: &SpacetimePoint) -> Result<()> {
    region.validate()?;
    qi.validate()?;
    qf.validate()?;
    if qf.t <= qi.t {
        return Err(Error::TemporalOrder { start: qi.t, end: qf.t });
    }
    for (name, q) in [("q_I", qi), ("q_F", qf)] {
        if !region.contains_closed(q) {
            return Err(Error::Region(format!(
                "{name} = ({}, {}) lies outside the closure of the region",
                q.x, q.t
            )));
        }
    }
    Ok(())
}

/// `φ_df(q_F, q_I)` over the spatial window `X` of `region`.
pub fn phi_n(
    sys: &PhysicalSystem,
    region: &Region,
    qi: &SpacetimePoint,
    qf: &SpacetimePoint,
    df: usize,
    spec: &QuadratureSpec,
    kind: ParticleKind,
) -> Result<Complex64> {
    check_endpoints(region, qi, qf)?;
    spec.validate()?;
    if df == 0 {
        let eps = qf.t - qi.t;
        return Ok(classical_amplitude(sys, qi, qf, kind)? / normalization_a(sys, 0, eps));
    }
    let nodes = spec.x_nodes(region.x_lo, region.x_hi);
    // Carry the profile up to the last interior slice, then close on q_F.
    let grid = SliceGrid::new(region, qi.t, qf.t, df, spec)?;
    let t_last = grid.times[df];
    let inner = phi_profile(sys, kind, &nodes, *qi, Anchor::Start, t_last, df - 1)?;
    // phi_profile divides by A_{df-1} of the shorter span; undo that and
    // apply A_df of the full span instead.
    let a_inner = normalization_a(sys, df - 1, (t_last - qi.t) / df as f64);
    let closing = nodes
        .points
        .iter()
        .zip(&nodes.weights)
        .zip(&inner)
        .map(|((&x, &w), &v)| {
            classical_amplitude(sys, &SpacetimePoint::new(x, t_last), qf, kind).map(|k| k * v * w)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = closing.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    Ok(total * a_inner / normalization_a(sys, df, grid.eps))
}

/// `Δφ_n = φ_n − φ_{n−1}`.
pub fn delta_phi(
    sys: &PhysicalSystem,
    region: &Region,
    qi: &SpacetimePoint,
    qf: &SpacetimePoint,
    n: usize,
    spec: &QuadratureSpec,
    kind: ParticleKind,
) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidInput("delta_phi needs n >= 1".into()));
    }
    Ok(phi_n(sys, region, qi, qf, n, spec, kind)? - phi_n(sys, region, qi, qf, n - 1, spec, kind)?)
}

/// `φ₀ … φ_{n_max}` for one experiment.
pub fn phi_sequence(
    sys: &PhysicalSystem,
    region: &Region,
    qi: &SpacetimePoint,
    qf: &SpacetimePoint,
    n_max: usize,
    spec: &QuadratureSpec,
    kind: ParticleKind,
) -> Result<Vec<Complex64>> {
    (0..=n_max)
        .map(|n| phi_n(sys, region, qi, qf, n, spec, kind).map_err(|e| e.at_stage("phi_n", n)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `|Δφ_n|` for `n = 1 ..= df_max`.
    pub corrections: Vec<f64>,
    /// `|Δφ_N| / |Δφ_{N−1}|`, when there are at least two corrections.
    pub last_ratio: Option<f64>,
    /// Geometric extrapolation of `Σ_{n > N} |Δφ_n|`; `None` when the last
    /// ratio is not below one.
    pub tail_estimate: Option<f64>,
}

impl ConvergenceReport {
    pub fn from_corrections(corrections: Vec<f64>) -> Self {
        let n = corrections.len();
        let (last_ratio, tail_estimate) = if n >= 2 {
            let last = corrections[n - 1];
            let ratio = last / corrections[n - 2];
            let tail = (ratio < 1.0).then(|| last * ratio / (1.0 - ratio));
            (Some(ratio), tail)
        } else {
            (None, None)
        };
        Self {
            corrections,
            last_ratio,
            tail_estimate,
        }
    }

    /// `|Δφ_n|` strictly decreasing from `n = from` on.
    pub fn decreasing_from(&self, from: usize) -> bool {
        let start = from.saturating_sub(1);
        self.corrections[start.min(self.corrections.len())..]
            .windows(2)
            .all(|w| w[1] < w[0])
    }
}

/// `φ_{df_max}` together with the size of every correction term.
pub fn phi_limit_estimate(
    sys: &PhysicalSystem,
    region: &Region,
    qi: &SpacetimePoint,
    qf: &SpacetimePoint,
    df_max: usize,
    spec: &QuadratureSpec,
) -> Result<(Complex64, ConvergenceReport)> {
    if df_max < 2 {
        return Err(Error::InvalidInput("phi_limit_estimate needs df_max >= 2".into()));
    }
    let phis = phi_sequence(sys, region, qi, qf, df_max, spec, ParticleKind::Particle)?;
    let corrections = phis.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    Ok((phis[df_max], ConvergenceReport::from_corrections(corrections)))
}
