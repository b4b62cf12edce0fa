//! Eigenvalue spectrum and non-degenerate index classification.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// An eigenvalue counts as negative only below this; exact-zero ties are
/// never classified as negative.
pub const NEGATIVE_EIG_TOL: f64 = 1e-12;

/// Classification of a Hessian spectrum at threshold `zeta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexInfo {
    /// Count of eigenvalues below `-NEGATIVE_EIG_TOL`.
    pub index: usize,
    /// `min_i |lambda_i| < zeta`.
    pub degenerate: bool,
    pub min_abs_eigenvalue: f64,
    /// Partition counts at the `zeta` scale: `lambda <= -zeta`,
    /// `lambda >= zeta`, `|lambda| < zeta`. They always sum to the dimension.
    pub n_below: usize,
    pub n_above: usize,
    pub n_small: usize,
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSymmetric {
            asymmetry: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    let scale = h.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    let tol = 1e-9 * scale;
    let mut asym: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            asym = asym.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    if asym > tol {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance: tol,
        });
    }
    Ok(0.5 * (h + h.transpose()))
}

/// Real eigenvalues of a symmetric matrix, sorted ascending.
pub fn spectrum(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let sym = check_symmetric(h)?;
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

/// Index (count of negative eigenvalues) and degeneracy at threshold `zeta`.
pub fn index_of(h: &DMatrix<f64>, zeta: f64) -> Result<IndexInfo> {
    if zeta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degeneracy threshold must be positive, got {zeta}"
        )));
    }
    let eigs = spectrum(h)?;
    Ok(classify_spectrum(&eigs, zeta))
}

/// Classification from an already computed spectrum.
pub fn classify_spectrum(eigs: &[f64], zeta: f64) -> IndexInfo {
    let index = eigs.iter().filter(|&&l| l < -NEGATIVE_EIG_TOL).count();
    let min_abs = eigs.iter().fold(f64::INFINITY, |acc, &l| acc.min(l.abs()));
    let n_below = eigs.iter().filter(|&&l| l <= -zeta).count();
    let n_above = eigs.iter().filter(|&&l| l >= zeta).count();
    let n_small = eigs.len() - n_below - n_above;
    IndexInfo {
        index,
        degenerate: min_abs < zeta,
        min_abs_eigenvalue: min_abs,
        n_below,
        n_above,
        n_small,
    }
}
