//! The experiment implementations behind [`crate::run`].

mod boundsrun;
mod degenerate;
mod derivcheck;
mod gaprate;
mod netnorms;
mod normaudit;
mod pairing;
mod stability;
mod tailrun;

use crate::config::ExperimentConfig;
use landscape_core::data::{SamplerKind, SamplerSpec};
use landscape_core::error::{Error, Result};
use serde_json::Value;

/// Runs the named experiment: returns results, pass flag and optional CSV.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<(Value, bool, Option<String>)> {
    match cfg.experiment.as_str() {
        "grad-check" => derivcheck::grad_check(cfg),
        "hess-check" => derivcheck::hess_check(cfg),
        "bounds" => boundsrun::run(cfg),
        "gap-rate" => gaprate::run(cfg),
        "stationary-pair" => pairing::run(cfg),
        "loo-stability" => stability::run(cfg),
        "norm-audit" => normaudit::run(cfg),
        "tail" => tailrun::run(cfg),
        "net-norms" => netnorms::run(cfg),
        "degenerate-audit" => degenerate::run(cfg),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment {other:?}"
        ))),
    }
}

/// Input sampler from the config's `sampler`/`tau` fields.
pub fn sampler_spec(cfg: &ExperimentConfig, input_dim: usize, seed: u64) -> Result<SamplerSpec> {
    let kind = match cfg.sampler.as_str() {
        "rademacher" | "bounded" => SamplerKind::BoundedSubGaussian,
        "gaussian" => SamplerKind::IidGaussian,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown sampler {other:?} (rademacher|gaussian)"
            )))
        }
    };
    Ok(SamplerSpec::new(kind, cfg.tau, input_dim, seed))
}

/// CSV assembly helper.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
