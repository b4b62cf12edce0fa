//! Bound-report emission and sample-size sweeps.

use crate::config::{parse_sweep, ExperimentConfig};
use crate::experiments::csv_table;
use landscape_core::bounds::{BoundConfig, BoundReport};
use landscape_core::error::Result;
use serde_json::{json, Value};

fn bound_config(cfg: &ExperimentConfig) -> Result<BoundConfig> {
    let arch = cfg.parse_arch()?;
    let r_x = cfg.tau * (arch.input_dim() as f64).sqrt();
    let mut bc = BoundConfig::new(arch, cfg.radius, cfg.tau, cfg.n, cfg.eps_fail, r_x)?;
    for (name, value) in &cfg.constants {
        bc.constants.set(name, *value)?;
    }
    Ok(bc)
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Value, bool, Option<String>)> {
    let bc = bound_config(cfg)?;
    let report = BoundReport::compute(&bc)?;
    let csv = match &cfg.sweep {
        Some(spec) => {
            let grid = parse_sweep(spec)?;
            let mut rows = Vec::with_capacity(grid.len());
            for n in grid {
                let mut at_n = bc.clone();
                at_n.n = n;
                let rep = BoundReport::compute(&at_n)?;
                rows.push(vec![
                    n.to_string(),
                    format!("{:.9e}", rep.bounds.eps_linear),
                    format!("{:.9e}", rep.bounds.eps_sigmoid),
                    format!("{:.9e}", rep.bounds.grad_gap_linear),
                    format!("{:.9e}", rep.bounds.grad_gap_sigmoid),
                    format!("{:.9e}", rep.bounds.hess_gap),
                    format!("{:.9e}", rep.bounds.dist_linear),
                    format!("{:.9e}", rep.bounds.dist_sigmoid),
                ]);
            }
            Some(csv_table(
                &[
                    "n",
                    "eps_linear",
                    "eps_sigmoid",
                    "grad_gap_linear",
                    "grad_gap_sigmoid",
                    "hess_gap",
                    "dist_linear",
                    "dist_sigmoid",
                ],
                &rows,
            ))
        }
        None => None,
    };
    Ok((json!({ "report": report }), true, csv))
}
