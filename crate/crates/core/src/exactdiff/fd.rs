//! Central finite-difference oracles.
//!
//! These are the independent ground truth for the analytic formulas: they
//! only ever see a black-box loss (or gradient) function. The per-coordinate
//! step is `h * max(1, |w_i|)`, which balances truncation and rounding for
//! 64-bit arithmetic around `h = 1e-5`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Recommended base step for loss-level differencing.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn check_step(h: f64) -> Result<()> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    Ok(())
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(mut lossfn: F, w: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> f64,
{
    check_step(h)?;
    let mut grad = DVector::zeros(w.len());
    let mut probe = w.clone();
    for i in 0..w.len() {
        let hi = h * w[i].abs().max(1.0);
        probe[i] = w[i] + hi;
        let plus = lossfn(&probe);
        probe[i] = w[i] - hi;
        let minus = lossfn(&probe);
        probe[i] = w[i];
        grad[i] = (plus - minus) / (2.0 * hi);
    }
    Ok(grad)
}

/// Central-difference Jacobian of a gradient function (a Hessian when the
/// input is a true gradient). Columns are differenced coordinate-wise; no
/// symmetrization is applied, so comparing against an analytic Hessian also
/// exercises the raw asymmetry of the oracle.
pub fn fd_hessian<G>(mut gradfn: G, w: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    check_step(h)?;
    let d = w.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut probe = w.clone();
    for i in 0..d {
        let hi = h * w[i].abs().max(1.0);
        probe[i] = w[i] + hi;
        let plus = gradfn(&probe);
        probe[i] = w[i] - hi;
        let minus = gradfn(&probe);
        probe[i] = w[i];
        let col = (plus - minus) / (2.0 * hi);
        hess.column_mut(i).copy_from(&col);
    }
    Ok(hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        let w = DVector::from_vec(vec![0.3, -1.7, 2.4]);
        let g = fd_gradient(|v| 0.5 * v.norm_squared(), &w, 1e-5).unwrap();
        for i in 0..3 {
            assert!((g[i] - w[i]).abs() <= 1e-10, "coordinate {i}");
        }
    }

    #[test]
    fn quadratic_hessian_is_identity() {
        let w = DVector::from_vec(vec![0.5, -0.25]);
        let h = fd_hessian(|v| v.clone(), &w, 1e-5).unwrap();
        let id = DMatrix::identity(2, 2);
        assert!((h - id).norm() <= 1e-6);
    }

    #[test]
    fn nonpositive_step_rejected() {
        let w = DVector::from_vec(vec![1.0]);
        assert!(fd_gradient(|_| 0.0, &w, 0.0).is_err());
        assert!(fd_gradient(|_| 0.0, &w, -1e-5).is_err());
    }
}
