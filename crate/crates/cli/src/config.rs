//! TOML run configuration. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use levy_liquidation::{ImpactModel, LevyModel, VgParams};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub impact: ImpactConfig,
    pub solve: SolveSection,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub derive: DeriveSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Brownian { mu: f64, sigma: f64 },
    VgLinearised { theta: f64, rho: f64, eta: f64, s_tilde: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ImpactConfig {
    PowerLaw { beta: f64, gamma: f64 },
    PiecewisePowerExp { beta1: f64, beta2: f64, gamma: f64, xbar: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub risk_aversion: Vec<f64>,
    pub y0: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Defaults to the first `solve.risk_aversion` entry.
    pub risk_aversion: Option<f64>,
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    pub s0: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub antithetic: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeriveSection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Run the trajectory check for each risk aversion.
    pub verify: bool,
}

impl Default for DeriveSection {
    fn default() -> Self {
        DeriveSection {
            x_min: 1.0,
            x_max: 1e7,
            points: 61,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub hjb_points: usize,
    pub hjb_tol: f64,
    pub oracle_steps: usize,
    pub oracle_tol: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            hjb_points: 5,
            hjb_tol: 1e-8,
            oracle_steps: 256,
            oracle_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Label times as volume time instead of days.
    #[serde(default)]
    pub volume_time: bool,
}

fn default_grid_points() -> usize {
    400
}

fn default_dt() -> f64 {
    1e-4
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.solve.risk_aversion.is_empty() {
            return Err(CliError::Config("solve.risk_aversion must list at least one value".into()));
        }
        Ok(cfg)
    }

    pub fn levy_model(&self) -> Result<LevyModel, CliError> {
        Ok(match self.model {
            ModelConfig::Brownian { mu, sigma } => LevyModel::brownian(mu, sigma)?,
            ModelConfig::VgLinearised {
                theta,
                rho,
                eta,
                s_tilde,
            } => LevyModel::vg_linearised(VgParams::new(theta, rho, eta)?, s_tilde)?,
        })
    }

    pub fn impact_model(&self) -> Result<ImpactModel, CliError> {
        Ok(match self.impact {
            ImpactConfig::PowerLaw { beta, gamma } => ImpactModel::power_law(beta, gamma)?,
            ImpactConfig::PiecewisePowerExp {
                beta1,
                beta2,
                gamma,
                xbar,
            } => ImpactModel::piecewise_power_exp(beta1, beta2, gamma, xbar)?,
        })
    }

    pub fn vg_params(&self) -> Option<(VgParams, f64)> {
        match self.model {
            ModelConfig::VgLinearised {
                theta,
                rho,
                eta,
                s_tilde,
            } => VgParams::new(theta, rho, eta).ok().map(|v| (v, s_tilde)),
            _ => None,
        }
    }

    pub fn time_unit(&self) -> &'static str {
        if self.output.volume_time {
            "volume_time"
        } else {
            "days"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        kind = "brownian"
        mu = 0.0
        sigma = 2.0

        [impact]
        kind = "power-law"
        beta = 4.7e-5
        gamma = 1.0

        [solve]
        risk_aversion = [1e-6]
        y0 = 1000.0
    "#;

    #[test]
    fn parses_minimal() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.solve.grid_points, 400);
        assert!(cfg.simulate.is_none());
        assert_eq!(cfg.time_unit(), "days");
        cfg.levy_model().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = MINIMAL.replace("y0 = 1000.0", "y0 = 1000.0\nspeed = 3");
        assert!(matches!(RunConfig::from_toml(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("sigma = 2.0", "sigma = 2.0\nnu = 1");
        assert!(matches!(RunConfig::from_toml(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn model_errors_are_domain_errors() {
        let bad = MINIMAL.replace("sigma = 2.0", "sigma = -2.0");
        let cfg = RunConfig::from_toml(&bad).unwrap();
        assert!(matches!(cfg.levy_model(), Err(CliError::Domain(_))));
    }
}
