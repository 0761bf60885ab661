use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hoppath_core::finitary::{HopPath, PhaseParam, TimeModel};
use hoppath_core::harness::{bundled, emit_report, render, run_experiment, verify_suite, ExperimentConfig, Group, ReportFormat, DEFAULT_SEED};
use hoppath_core::standard::{delta_phi, phi_n};
use hoppath_core::xmachine::{
    additive_behavior_closed, additive_behavior_truncated, compile_path_to_machine, parse_machine, write_machine,
    CoverSemantics,
};
use hoppath_core::{Error, ParticleKind, PhysicalSystem, SpacetimePoint};

mod overrides;

const AFTER_HELP: &str = "Any config field can be overridden with a flag named after its path, \
e.g. `--region.x-lo -2.5` or `--quadrature.panels-x=16`.\n\n\
Exit codes: 0 success, 1 verification failure, 2 config or input error, 3 numerical error.";

#[derive(Parser)]
#[command(name = "hoppath", version, about = "Finitary path amplitudes and additive X-machines", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "experiment")]
    config: Option<PathBuf>,
    /// A bundled experiment by name (see `hoppath experiments`).
    #[arg(long)]
    experiment: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cover {
    Transition,
    State,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Unidirectional,
    Bidirectional,
}

#[derive(Subcommand)]
enum Command {
    /// Table of φ_n and Δφ_n.
    Standard {
        #[command(flatten)]
        source: Source,
    },
    /// Table of B_n, ψ_n and the ψ_n = Δφ_n check.
    Finitary {
        #[command(flatten)]
        source: Source,
    },
    /// Evaluate |M|⁺ of a machine file.
    Machine {
        #[arg(long)]
        machine: PathBuf,
        /// Sum covering runs up to this length instead of the closed form.
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(long, value_enum, default_value = "transition")]
        cover: Cover,
    },
    /// Compile a path file (one `x t` pair per line) into a machine file.
    CompilePath {
        #[arg(long)]
        path: PathBuf,
        /// Take the system, ρ and time model from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's time model.
        #[arg(long, value_enum)]
        model: Option<Model>,
        /// Write the machine here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        /// Comma-separated groups: standard, finitary, xmachine, cross.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run an experiment and write its report.
    Report {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        source: Source,
    },
    /// List the bundled experiments, or print one as a config file.
    Experiments {
        #[arg(long)]
        show: Option<String>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(source: &Source, overrides: &[overrides::Override]) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&source.config, &source.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => {
            bundled::by_name(name).ok_or_else(|| config_error(format!("no bundled experiment `{name}`; try `hoppath experiments`")))?
        }
        (None, None) => return Err(config_error("pass --config <file> or --experiment <name>")),
    };
    for o in overrides {
        cfg.set(&o.path, &o.value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.to_owned(),
            source,
        }
        .into()
    })
}

fn parse_path_file(text: &str, model: TimeModel) -> Result<HopPath, Failure> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[x, t]) => points.push(SpacetimePoint::try_new(x, t)?),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `x t`, found `{content}`"),
                }
                .into())
            }
        }
    }
    Ok(HopPath::new(points, model)?)
}

fn run(cli: Cli, overrides: &[overrides::Override]) -> Result<u8, Failure> {
    let mut out = std::io::stdout().lock();
    let mut say = |text: String| {
        let _ = writeln!(out, "{text}");
    };
    if !overrides.is_empty() && !matches!(cli.command, Command::Standard { .. } | Command::Finitary { .. } | Command::Report { .. } | Command::CompilePath { .. }) {
        return Err(config_error("field overrides only apply to commands that read a config"));
    }
    match cli.command {
        Command::Standard { source } => {
            let cfg = load_config(&source, overrides)?;
            let (sys, region, qi, qf, spec) = (cfg.system, cfg.region, cfg.q_i, cfg.q_f, cfg.quadrature);
            say(format!("# {}: phi_n and dphi_n, n = 0..{}", cfg.name, cfg.n_max));
            say(format!("{:>3} {:>24} {:>24} {:>24} {:>24}", "n", "phi_re", "phi_im", "dphi_re", "dphi_im"));
            for n in 0..=cfg.n_max {
                let phi = phi_n(&sys, &region, &qi, &qf, n, &spec, ParticleKind::Particle)?;
                let d = if n == 0 { phi } else { delta_phi(&sys, &region, &qi, &qf, n, &spec, ParticleKind::Particle)? };
                say(format!("{n:>3} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}", phi.re, phi.im, d.re, d.im));
            }
            Ok(0)
        }
        Command::Finitary { source } => {
            let cfg = load_config(&source, overrides)?;
            let report = run_experiment(&cfg)?;
            say(format!("# {}: B_n and psi_n, n = 0..{}", cfg.name, cfg.n_max));
            say(format!("{:>3} {:>24} {:>24} {:>24} {:>24} {:>10}", "n", "B_re", "B_im", "psi_re", "psi_im", "abs_err"));
            for r in &report.rows {
                say(format!(
                    "{:>3} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e} {:>10.2e}",
                    r.n, r.b.re, r.b.im, r.psi.re, r.psi.im, r.abs_err
                ));
            }
            for c in &report.checks {
                say(format!("{} {} ({:.2e}, tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance));
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Machine { machine, truncate, cover } => {
            let cover = match cover {
                Cover::Transition => CoverSemantics::TransitionCover,
                Cover::State => CoverSemantics::StateCover,
            };
            let m = parse_machine(&read(&machine)?, cover)?;
            let value = match truncate {
                Some(len) => additive_behavior_truncated(&m, len),
                None => additive_behavior_closed(&m)?,
            };
            say(format!("states {} transitions {}", m.fsm().states().len(), m.fsm().transitions().len()));
            say(format!("spectral_radius_bound {:.12e}", m.spectral_radius_bound()));
            say(format!("behavior {:.16e} {:.16e}", value.re, value.im));
            Ok(0)
        }
        Command::CompilePath { path, config, model, out: target } => {
            let (system, phase, cfg_model) = match config {
                Some(p) => {
                    let cfg = load_config(
                        &Source {
                            config: Some(p),
                            experiment: None,
                        },
                        overrides,
                    )?;
                    (cfg.system, PhaseParam::new(cfg.rho)?, cfg.model)
                }
                None if overrides.is_empty() => (PhysicalSystem::natural_free(), PhaseParam::default(), TimeModel::Unidirectional),
                None => return Err(config_error("field overrides need --config")),
            };
            let model = match model {
                Some(Model::Unidirectional) => TimeModel::Unidirectional,
                Some(Model::Bidirectional) => TimeModel::Bidirectional,
                None => cfg_model,
            };
            let hop_path = parse_path_file(&read(&path)?, model)?;
            let text = write_machine(&compile_path_to_machine(&hop_path, &system, &phase, model)?);
            match target {
                Some(p) => std::fs::write(&p, text).map_err(|source| Error::Io { path: p.clone(), source })?,
                None => say(text.trim_end().to_owned()),
            }
            Ok(0)
        }
        Command::Verify { only, seed } => {
            let groups = match only {
                Some(names) => names.iter().map(|n| n.parse::<Group>()).collect::<Result<Vec<_>, _>>()?,
                None => Group::ALL.to_vec(),
            };
            let table = verify_suite(&groups, seed);
            say(table.to_string());
            Ok(if table.passed() { 0 } else { 1 })
        }
        Command::Report { format, out: target, source } => {
            let cfg = load_config(&source, overrides)?;
            let report = run_experiment(&cfg)?;
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            if target.as_os_str() == "-" {
                let _ = write!(std::io::stdout(), "{}", render(&report, format));
            } else {
                emit_report(&report, format, &target)?;
            }
            Ok(0)
        }
        Command::Experiments { show } => {
            match show {
                Some(name) => {
                    let cfg = bundled::by_name(&name).ok_or_else(|| config_error(format!("no bundled experiment `{name}`")))?;
                    say(cfg.to_json());
                }
                None => {
                    for name in bundled::names() {
                        say(name);
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let (args, overrides) = match overrides::extract(std::env::args().collect()) {
        Ok(split) => split,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli, &overrides) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
