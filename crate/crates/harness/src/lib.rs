//! Seeded experiment pipelines over the landscape toolkit.
//!
//! Each experiment is a pure function of its [`config::ExperimentConfig`]:
//! re-running a config reproduces the result document bit-identically
//! (verified through content hashes that cover everything except wall-clock
//! runtime). Experiments emit a JSON document, and the tabular ones also
//! produce CSV rows.

pub mod config;
pub mod document;
pub mod experiments;
pub mod ratefit;

pub use config::ExperimentConfig;
pub use document::Document;
pub use ratefit::{fit_rate, RateFit};

use landscape_core::error::Result;

/// Runs the experiment named by the config and wraps it in a document.
pub fn run(cfg: &ExperimentConfig) -> Result<Document> {
    let started = std::time::Instant::now();
    cfg.validate()?;
    let (results, pass, csv) = experiments::dispatch(cfg)?;
    Ok(Document::new(
        cfg,
        results,
        pass,
        csv,
        started.elapsed().as_millis(),
    ))
}
