//! Run configuration: a JSON document plus command-line overrides.
//!
//! Every run is reproducible from (config, seed); there is no wall-clock
//! entropy anywhere, and the effective configuration is echoed into each
//! report.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn default_sigma() -> f64 {
    0.5
}
fn default_budget() -> usize {
    4096
}
fn default_grid() -> usize {
    32
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Residual target for the chord solver.
    #[serde(default = "Tolerances::default_chord_tol")]
    pub chord_tol: f64,
    #[serde(default = "Tolerances::default_chord_max_iter")]
    pub chord_max_iter: usize,
    /// Relative tolerance on the gamma^4 ratio condition in the sequence
    /// bisection.
    #[serde(default = "Tolerances::default_ratio_tol")]
    pub ratio_tol: f64,
    /// Multiplier applied to the sampled Takahashi estimate; certificates
    /// shrink as K grows, so inflating the estimate keeps them safe.
    #[serde(default = "Tolerances::default_k_safety")]
    pub k_safety: f64,
    /// Multiplier applied to the sampled a_m estimate, same reasoning.
    #[serde(default = "Tolerances::default_a_m_safety")]
    pub a_m_safety: f64,
    #[serde(default = "Tolerances::default_verify_pairs")]
    pub verify_pairs: usize,
    #[serde(default = "Tolerances::default_verify_targets")]
    pub verify_targets: usize,
}

impl Tolerances {
    fn default_chord_tol() -> f64 {
        1e-12
    }
    fn default_chord_max_iter() -> usize {
        200
    }
    fn default_ratio_tol() -> f64 {
        1e-6
    }
    fn default_k_safety() -> f64 {
        1.05
    }
    fn default_a_m_safety() -> f64 {
        2.0
    }
    fn default_verify_pairs() -> usize {
        256
    }
    fn default_verify_targets() -> usize {
        200
    }

    fn validate(&self) -> CliResult<()> {
        let positives = [
            ("chord_tol", self.chord_tol),
            ("ratio_tol", self.ratio_tol),
            ("k_safety", self.k_safety),
            ("a_m_safety", self.a_m_safety),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::invalid(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.chord_max_iter == 0 || self.verify_pairs == 0 || self.verify_targets == 0 {
            return Err(CliError::invalid("iteration and budget counts must be positive"));
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            chord_tol: Self::default_chord_tol(),
            chord_max_iter: Self::default_chord_max_iter(),
            ratio_tol: Self::default_ratio_tol(),
            k_safety: Self::default_k_safety(),
            a_m_safety: Self::default_a_m_safety(),
            verify_pairs: Self::default_verify_pairs(),
            verify_targets: Self::default_verify_targets(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to the heat-map document.
    pub map_source: String,
    /// Optional cross-check against the map document's dimension.
    #[serde(default)]
    pub m: Option<usize>,
    /// Growth factor; exactly one of `gamma` and `r0`.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Initial radius; the growth factor is derived from it.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Derivative-estimate constant; defaults to the sampled estimate
    /// times `a_m_safety`.
    #[serde(default)]
    pub a_m: Option<f64>,
    /// Takahashi constant; defaults to the sampled estimate times
    /// `k_safety`.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_budget")]
    pub sample_budget: usize,
    #[serde(default = "default_grid")]
    pub radii_grid_size: usize,
    pub seed: u64,
    /// Where `certify` stores certificates for `invert`/`verify`.
    #[serde(default)]
    pub certificate_store: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub r0: Option<f64>,
    pub sigma: Option<f64>,
    pub a_m: Option<f64>,
    pub k: Option<f64>,
    pub budget: Option<usize>,
    pub certs: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {path:?}: {e}")))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("cannot parse config {path:?}: {e}")))?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(g) = o.gamma {
            self.gamma = Some(g);
            self.r0 = None;
        }
        if let Some(r) = o.r0 {
            self.r0 = Some(r);
            self.gamma = None;
        }
        if let Some(s) = o.sigma {
            self.sigma = s;
        }
        if let Some(a) = o.a_m {
            self.a_m = Some(a);
        }
        if let Some(k) = o.k {
            self.k = Some(k);
        }
        if let Some(b) = o.budget {
            self.sample_budget = b;
        }
        if let Some(c) = &o.certs {
            self.certificate_store = Some(c.clone());
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        match (self.gamma, self.r0) {
            (Some(_), Some(_)) => {
                return Err(CliError::invalid("gamma and r0 are mutually exclusive"))
            }
            (None, None) => {
                return Err(CliError::invalid("exactly one of gamma or r0 is required"))
            }
            _ => {}
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(CliError::invalid(format!(
                "sigma must lie in (0, 1), got {}",
                self.sigma
            )));
        }
        if self.sample_budget == 0 {
            return Err(CliError::invalid("sample_budget must be positive"));
        }
        if self.radii_grid_size == 0 {
            return Err(CliError::invalid("radii_grid_size must be positive"));
        }
        self.tolerances.validate()
    }

    /// The radii grid i/(G+1), i = 1..=G.
    pub fn radii_grid(&self) -> Vec<f64> {
        let g = self.radii_grid_size;
        (1..=g).map(|i| i as f64 / (g as f64 + 1.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        serde_json::from_str(
            r#"{"map_source": "map.json", "gamma": 2.45, "seed": 7}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = base();
        assert_eq!(cfg.sigma, 0.5);
        assert_eq!(cfg.sample_budget, 4096);
        assert_eq!(cfg.radii_grid_size, 32);
        assert_eq!(cfg.tolerances.chord_tol, 1e-12);
        cfg.validate().unwrap();
    }

    #[test]
    fn gamma_r0_exclusivity() {
        let mut cfg = base();
        cfg.r0 = Some(0.4);
        assert!(cfg.validate().is_err());
        cfg.gamma = None;
        cfg.validate().unwrap();
        cfg.r0 = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_swap_gamma_for_r0() {
        let mut cfg = base();
        cfg.apply(&Overrides {
            r0: Some(0.42),
            seed: Some(99),
            ..Default::default()
        });
        assert_eq!(cfg.gamma, None);
        assert_eq!(cfg.r0, Some(0.42));
        assert_eq!(cfg.seed, 99);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(
            r#"{"map_source": "m.json", "gamma": 2.0, "seed": 1, "wall_clock": true}"#,
        );
        assert!(r.is_err());
    }

    #[test]
    fn grid_is_uniform_open_interval() {
        let mut cfg = base();
        cfg.radii_grid_size = 4;
        let grid = cfg.radii_grid();
        assert_eq!(grid, vec![0.2, 0.4, 0.6, 0.8]);
    }
}
