//! Log-log slope fitting for convergence-rate experiments.

use landscape_core::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ordinary least squares on `(ln n, ln gap)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// The `(ln n, ln gap)` pairs the fit used.
    pub points: Vec<(f64, f64)>,
    /// Points dropped because their gap was nonpositive (log undefined).
    pub excluded: usize,
}

/// Fits medians against sample sizes. Requires at least 4 usable points;
/// nonpositive gaps are excluded and flagged.
pub fn fit_rate(table: &[(f64, f64)]) -> Result<RateFit> {
    let mut points = Vec::with_capacity(table.len());
    let mut excluded = 0;
    for &(n, gap) in table {
        if n <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sample size must be positive, got {n}"
            )));
        }
        if gap > 0.0 {
            points.push((n.ln(), gap.ln()));
        } else {
            excluded += 1;
        }
    }
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs >= 4 positive points, have {} ({} excluded)",
            points.len(),
            excluded
        )));
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / m;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
        excluded,
    })
}
