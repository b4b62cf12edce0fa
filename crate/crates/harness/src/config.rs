//! Experiment configuration: one struct fully determines one run.
//!
//! Pass/fail thresholds live here (with serde defaults), not in experiment
//! logic, so tolerance tuning never edits code.

use landscape_core::error::{Error, Result};
use landscape_core::model::{Activation, Architecture};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Assertion thresholds embedded in every run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Thresholds {
    /// Analytic-vs-FD gradient relative error.
    pub grad_rel_err: f64,
    pub hess_rel_err_linear: f64,
    pub hess_rel_err_sigmoid: f64,
    pub hess_asymmetry: f64,
    /// Acceptable fitted log-log slope band for rate experiments.
    pub slope_min: f64,
    pub slope_max: f64,
    /// `|stability - generalization| <= factor * combined stderr`.
    pub stability_stderr_factor: f64,
    /// Hand-anchor exactness.
    pub anchor_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            grad_rel_err: 1e-6,
            hess_rel_err_linear: 1e-5,
            hess_rel_err_sigmoid: 1e-4,
            hess_asymmetry: 1e-9,
            slope_min: -0.65,
            slope_max: -0.35,
            stability_stderr_factor: 2.0,
            anchor_tol: 1e-10,
        }
    }
}

/// One experiment run, fully seeded.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Experiment name: grad-check, hess-check, bounds, gap-rate,
    /// stationary-pair, loo-stability, norm-audit, tail, net-norms,
    /// degenerate-audit.
    pub experiment: String,
    /// `"2,3,2:linear"` (or bare dims, combined with `activation`).
    pub arch: String,
    pub radius: f64,
    pub tau: f64,
    /// Input law: `rademacher` or `gaussian`.
    pub sampler: String,
    pub n: u64,
    /// Sample-size grid; empty means the experiment default.
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub probes: u64,
    /// Randomized case count for the derivative checks.
    pub cases: u64,
    /// Draw count for the norm audits.
    pub draws: u64,
    pub seed: u64,
    pub teacher_seed: u64,
    /// Teacher output noise standard deviation.
    pub noise: f64,
    /// Frozen Monte-Carlo oracle size.
    pub n_pop: u64,
    pub eps_fail: f64,
    /// Gap quantity for gap-rate: `loss` or `grad-norm`.
    pub quantity: String,
    /// Tail-experiment exceedance threshold.
    pub tail_threshold: f64,
    /// Universal-constant overrides for bound formulas.
    pub constants: BTreeMap<String, f64>,
    /// Bounds sweep, e.g. `n=64..65536:geometric`.
    pub sweep: Option<String>,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            arch: "2,3,2:linear".to_string(),
            radius: 1.25,
            tau: 1.0,
            sampler: "rademacher".to_string(),
            n: 1024,
            n_grid: Vec::new(),
            trials: 20,
            probes: 256,
            cases: 100,
            draws: 10_000,
            seed: 7,
            teacher_seed: 1,
            noise: 0.0,
            n_pop: 16_384,
            eps_fail: 0.05,
            quantity: "loss".to_string(),
            tail_threshold: 0.5,
            constants: BTreeMap::new(),
            sweep: None,
            thresholds: Thresholds::default(),
        }
    }
}

pub const EXPERIMENTS: &[&str] = &[
    "grad-check",
    "hess-check",
    "bounds",
    "gap-rate",
    "stationary-pair",
    "loo-stability",
    "norm-audit",
    "tail",
    "net-norms",
    "degenerate-audit",
];

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "unknown experiment {:?} (expected one of {})",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        self.parse_arch()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.experiment == "gap-rate" && self.resolved_n_grid().is_empty() {
            return Err(Error::InvalidParameter("empty n grid".into()));
        }
        Ok(())
    }

    /// Architecture from the `arch` string.
    pub fn parse_arch(&self) -> Result<Architecture> {
        if self.arch.contains(':') {
            self.arch.parse()
        } else {
            format!("{}:linear", self.arch).parse()
        }
    }

    pub fn activation(&self) -> Result<Activation> {
        Ok(self.parse_arch()?.activation())
    }

    /// Sample-size grid with the geometric default 128..8192 (x2).
    pub fn resolved_n_grid(&self) -> Vec<u64> {
        if !self.n_grid.is_empty() {
            return self.n_grid.clone();
        }
        (7..=13).map(|k| 1u64 << k).collect()
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parses `n=64..65536:geometric` into a grid.
pub fn parse_sweep(spec: &str) -> Result<Vec<u64>> {
    let err = || Error::InvalidParameter(format!("bad sweep spec {spec:?}"));
    let body = spec.strip_prefix("n=").ok_or_else(err)?;
    let (range, kind) = body.split_once(':').ok_or_else(err)?;
    let (lo, hi) = range.split_once("..").ok_or_else(err)?;
    let lo: u64 = lo.parse().map_err(|_| err())?;
    let hi: u64 = hi.parse().map_err(|_| err())?;
    if lo == 0 || hi < lo {
        return Err(err());
    }
    match kind {
        "geometric" => {
            let mut grid = Vec::new();
            let mut n = lo;
            while n <= hi {
                grid.push(n);
                if n > hi / 2 {
                    break;
                }
                n *= 2;
            }
            Ok(grid)
        }
        "linear" => {
            let step = ((hi - lo) / 16).max(1);
            Ok((lo..=hi).step_by(step as usize).collect())
        }
        _ => Err(err()),
    }
}
