use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::action::{PhysicalSystem, Potential, Region, SpacetimePoint};
use crate::error::{Error, Result};
use crate::finitary::{ExperimentContext, PhaseParam, TimeModel};
use crate::quadrature::QuadratureSpec;
use crate::xmachine::CoverSemantics;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// One experiment, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub system: PhysicalSystem,
    pub region: Region,
    pub q_i: SpacetimePoint,
    pub q_f: SpacetimePoint,
    #[serde(default)]
    pub model: TimeModel,
    #[serde(default)]
    pub rho: f64,
    pub n_max: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub cover_semantics: CoverSemantics,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Sets the field at a dotted path such as `region.x-lo` or `q_f.t`
    /// (dashes and underscores are interchangeable). The value is read as
    /// JSON when possible and as a bare string otherwise.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let mut slot = &mut doc;
        for part in path.split('.') {
            let key = part.replace('-', "_");
            slot = slot
                .as_object_mut()
                .and_then(|obj| obj.get_mut(&key))
                .ok_or_else(|| Error::Config(format!("unknown field `{path}`")))?;
        }
        *slot = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_owned()));
        *self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("`{path}` = `{value}`: {e}")))?;
        Ok(())
    }

    /// Input checks, done before any integral is evaluated. Temporal order
    /// comes first so it is reported even when other fields are also off.
    pub fn validate(&self) -> Result<()> {
        self.q_i.validate()?;
        self.q_f.validate()?;
        if self.q_f.t <= self.q_i.t {
            return Err(Error::TemporalOrder {
                start: self.q_i.t,
                end: self.q_f.t,
            });
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        PhaseParam::new(self.rho)?;
        self.system.validate()?;
        self.quadrature.validate()?;
        self.context()?.validate()?;
        self.check_focal_times()
    }

    /// Every time difference inside `R` stays clear of the first focal time
    /// `π/ω`, so no slice spacing and no hop can hit a caustic.
    fn check_focal_times(&self) -> Result<()> {
        if let Potential::Harmonic { omega } = self.system.potential {
            let phase = omega.abs() * self.region.t_width();
            if phase >= PI * (1.0 - 1e-6) {
                return Err(Error::FocalSingularity { phase });
            }
        }
        Ok(())
    }

    pub fn context(&self) -> Result<ExperimentContext> {
        Ok(ExperimentContext {
            system: self.system,
            region: self.region,
            qi: self.q_i,
            qf: self.q_f,
            model: self.model,
            spec: self.quadrature,
            phase: PhaseParam::new(self.rho)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::bundled;

    #[test]
    fn json_round_trip_and_overrides() {
        let mut cfg = bundled::narrow_free();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        cfg.set("region.x-lo", "-2.5").unwrap();
        cfg.set("model", "bidirectional").unwrap();
        cfg.set("quadrature.rule_order", "12").unwrap();
        cfg.set("system.potential", r#"{"kind":"harmonic","omega":0.5}"#).unwrap();
        assert_eq!(cfg.region.x_lo, -2.5);
        assert_eq!(cfg.model, TimeModel::Bidirectional);
        assert_eq!(cfg.quadrature.rule_order, 12);
        assert_eq!(cfg.system.omega(), Some(0.5));
        assert!(matches!(cfg.set("region.nope", "1"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("n_max", "\"many\""), Err(Error::Config(_))));
    }

    #[test]
    fn temporal_order_is_checked_first() {
        let mut cfg = bundled::narrow_free();
        cfg.q_f.t = -1.0;
        cfg.n_max = 0;
        assert!(matches!(cfg.validate(), Err(Error::TemporalOrder { .. })));
    }

    #[test]
    fn focal_times_are_rejected() {
        let mut cfg = bundled::harmonic();
        cfg.system.potential = Potential::Harmonic { omega: 4.0 };
        assert!(matches!(cfg.validate(), Err(Error::FocalSingularity { .. })));
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let text = bundled::narrow_free().to_json().replacen("\"rho\"", "\"rh0\"", 1);
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }
}
