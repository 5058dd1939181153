//! Model configuration file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use infoprice_core::{MarketParams, OuParams, RateCurve, Schedule};
use serde::{Deserialize, Serialize};

/// JSON model configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kappa: f64,
    pub theta: f64,
    pub psi: f64,
    pub sigma: f64,
    pub r: f64,
    pub x0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_curve: Option<RateCurve>,
}

impl Default for ModelConfig {
    /// The option-surface parameter family: κ=0.15, θ=0.5, ψ=0.15, σ=0.25, r=0.05, X₀=0.6.
    fn default() -> Self {
        ModelConfig {
            kappa: 0.15,
            theta: 0.5,
            psi: 0.15,
            sigma: 0.25,
            r: 0.05,
            x0: 0.6,
            schedule: None,
            rate_curve: None,
        }
    }
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.market()?;
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        if let Some(c) = &self.rate_curve {
            c.validate()?;
        }
        Ok(())
    }

    pub fn market(&self) -> Result<MarketParams> {
        let ou = OuParams::new(self.kappa, self.theta, self.psi, self.x0)?;
        Ok(MarketParams::new(ou, self.sigma, self.r)?)
    }

    /// Market parameters for commands that only support constant κ, θ, ψ and r.
    pub fn constant_market(&self, command: &str) -> Result<MarketParams> {
        if self.schedule.is_some() || self.rate_curve.is_some() {
            bail!("`{command}` supports constant parameters only; remove `schedule` and `rate_curve` from the config");
        }
        self.market()
    }

    pub fn has_term_structure(&self) -> bool {
        self.schedule.is_some() || self.rate_curve.is_some()
    }

    /// Schedule and curve for the general pricer, defaulting to the constant values.
    pub fn term_structure(&self) -> Result<(Schedule, RateCurve)> {
        let mp = self.market()?;
        let schedule = self.schedule.clone().unwrap_or_else(|| Schedule::constant(&mp.ou));
        let curve = match &self.rate_curve {
            Some(c) => c.clone(),
            None => RateCurve::constant(self.r)?,
        };
        Ok((schedule, curve))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ModelConfig::default();
        assert_eq!(ModelConfig::parse(&cfg.to_json()).unwrap(), cfg);
        cfg.rate_curve = Some(RateCurve::new(vec![1.0], vec![0.03, 0.05]).unwrap());
        cfg.schedule = Some(Schedule::new(vec![2.0], vec![0.1, 0.2], vec![0.5, 0.6], vec![0.1, 0.15]).unwrap());
        assert_eq!(ModelConfig::parse(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = r#"{"kappa":0.1,"theta":1,"psi":0.1,"sigma":0.2,"r":0.05,"x0":1,"rho":0.3}"#;
        assert!(ModelConfig::parse(text).is_err());
        let text = r#"{"kappa":0.1,"theta":1,"psi":0.1,"sigma":0.2,"r":0.0,"x0":1}"#;
        assert!(ModelConfig::parse(text).is_err());
        let text = r#"{"kappa":0.1,"theta":1,"psi":0.1,"sigma":0.2,"r":0.05}"#;
        assert!(ModelConfig::parse(text).is_err());
    }

    #[test]
    fn constant_only_commands_refuse_term_structure() {
        let mut cfg = ModelConfig::default();
        assert!(cfg.constant_market("simulate").is_ok());
        cfg.rate_curve = Some(RateCurve::constant(0.05).unwrap());
        assert!(cfg.constant_market("simulate").is_err());
    }
}
