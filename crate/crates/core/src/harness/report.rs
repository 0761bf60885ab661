use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::finitary::{psi_n, solve_b, TailReport};
use crate::standard::{normalization_a, phi_sequence, ConvergenceReport};

/// `|ψ_n − Δφ_n| ≤ PSI_TOLERANCE·|Δφ_n|` for a row to pass.
pub const PSI_TOLERANCE: f64 = 1e-8;
pub const TELESCOPING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub phi: Complex64,
    /// `Δφ_n`; for `n = 0` this is `φ₀`.
    pub dphi: Complex64,
    pub b: Complex64,
    pub psi: Complex64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    /// `|φ₀ + Σ_{n≤N} Δφ_n − φ_N| / |φ_N|` for `N = 1 ..= n_max`.
    pub telescoping: Vec<f64>,
    pub standard_tail: ConvergenceReport,
    pub finitary_tail: TailReport,
    pub checks: Vec<Check>,
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The per-`n` table; byte-identical for identical configs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,phi_re,phi_im,dphi_re,dphi_im,B_re,B_im,psi_re,psi_im,abs_err\n");
        for r in &self.rows {
            write!(out, "{}", r.n).unwrap();
            for v in [r.phi.re, r.phi.im, r.dphi.re, r.dphi.im, r.b.re, r.b.im, r.psi.re, r.psi.im, r.abs_err] {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report is always serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn timed<T>(timings: &mut Vec<Timing>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push(Timing {
        stage: stage.to_owned(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// `φ_n`, `Δφ_n`, `B_n` and `ψ_n` for `n = 0 ..= n_max`, with the identity
/// checks that tie them together.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let ctx = config.context()?;
    let n_max = config.n_max;
    let mut timings = Vec::new();

    let phis = timed(&mut timings, "phi", || {
        phi_sequence(&ctx.system, &ctx.region, &ctx.qi, &ctx.qf, n_max, &ctx.spec, crate::action::ParticleKind::Particle)
    })?;
    let table = timed(&mut timings, "solve_b", || solve_b(&ctx, n_max))?;
    let psis = timed(&mut timings, "psi", || (0..=n_max).map(|n| psi_n(&ctx, n, &table)).collect::<Result<Vec<_>>>())?;

    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let dphi = if n == 0 { phis[0] } else { phis[n] - phis[n - 1] };
        rows.push(Row {
            n,
            phi: phis[n],
            dphi,
            b: table.values[n],
            psi: psis[n],
            abs_err: (psis[n] - dphi).norm(),
        });
    }

    let mut partial = rows[0].dphi;
    let telescoping: Vec<f64> = rows[1..]
        .iter()
        .map(|r| {
            partial += r.dphi;
            relative(partial, r.phi)
        })
        .collect();

    let standard_tail = ConvergenceReport::from_corrections(rows[1..].iter().map(|r| r.dphi.norm()).collect());
    let magnitudes: Vec<f64> = rows[1..].iter().map(|r| r.psi.norm()).collect();
    let finitary_tail = TailReport {
        monotone_decay: magnitudes.windows(2).all(|w| w[1] < w[0]),
        magnitudes,
    };

    let worst_psi = rows.iter().map(|r| r.abs_err / r.dphi.norm()).fold(0.0, f64::max);
    let worst_telescoping = telescoping.iter().copied().fold(0.0, f64::max);
    let b0_expected = ctx.phase.sigma() * normalization_a(&ctx.system, 0, ctx.qf.t - ctx.qi.t);
    let checks = vec![
        Check {
            name: "psi_equals_dphi".into(),
            passed: worst_psi <= PSI_TOLERANCE,
            value: worst_psi,
            tolerance: PSI_TOLERANCE,
        },
        Check {
            name: "telescoping".into(),
            passed: worst_telescoping <= TELESCOPING_TOLERANCE,
            value: worst_telescoping,
            tolerance: TELESCOPING_TOLERANCE,
        },
        Check {
            name: "b0_equals_sigma_a0".into(),
            passed: rows[0].b == b0_expected,
            value: (rows[0].b - b0_expected).norm(),
            tolerance: 0.0,
        },
    ];

    Ok(Report {
        config: config.clone(),
        rows,
        telescoping,
        standard_tail,
        finitary_tail,
        checks,
        timings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(report, format)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
