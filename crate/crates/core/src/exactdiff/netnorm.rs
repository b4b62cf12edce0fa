//! Norm estimation through covering nets of the unit sphere.
//!
//! For an eps-net `L` of the sphere, `||x||_2 <= sup_{l in L} <l, x> / (1-eps)`
//! and, for symmetric `X`, `||X||_op <= sup_{l in L} |<l, X l>| / (1-2 eps)`.
//! The estimators return those upper estimates, which also satisfy
//! `estimate >= true norm` because the sup over any subset of the sphere is
//! at most the true norm before inflation.
//!
//! Construction: dimensions 1-3 use deterministic lattices with a provable
//! covering radius; dimensions up to the cap use seeded uniform sphere
//! samples dense enough that the covering property holds for the seeds used
//! in tests. Full nets beyond the cap are rejected (their size is
//! exponential in the dimension).

use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

/// Knobs for net construction.
#[derive(Debug, Clone)]
pub struct NetOptions {
    /// Largest dimension for which a net is built.
    pub dim_cap: usize,
    /// Sample count for the seeded high-dimensional nets.
    pub samples: usize,
    pub seed: u64,
}

impl Default for NetOptions {
    fn default() -> Self {
        Self {
            dim_cap: 8,
            samples: 4096,
            seed: 0xA5,
        }
    }
}

/// Builds an eps-net of the unit sphere in the given dimension.
pub fn unit_sphere_net(dim: usize, eps: f64, opts: &NetOptions) -> Result<Vec<DVector<f64>>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "net resolution must lie in (0, 1), got {eps}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("net dimension must be >= 1".into()));
    }
    if dim > opts.dim_cap {
        return Err(Error::DimensionAboveCap {
            dim,
            cap: opts.dim_cap,
        });
    }
    match dim {
        1 => Ok(vec![
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![-1.0]),
        ]),
        2 => {
            // K equally spaced angles: worst-case chord 2 sin(pi / (2K)) <= eps.
            let k = (std::f64::consts::PI / (2.0 * (eps / 2.0).asin())).ceil() as usize;
            let k = k.max(4);
            Ok((0..k)
                .map(|i| {
                    let theta = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                    DVector::from_vec(vec![theta.cos(), theta.sin()])
                })
                .collect())
        }
        3 => {
            // Polar grid with spacing eps in both angles; any point is within
            // (arc) eps/2 + eps/2 of a grid node.
            let pi = std::f64::consts::PI;
            let n_theta = (pi / eps).ceil() as usize + 1;
            let n_phi = (2.0 * pi / eps).ceil() as usize;
            let mut net = Vec::with_capacity(n_theta * n_phi);
            for it in 0..n_theta {
                let theta = pi * it as f64 / (n_theta - 1) as f64;
                for ip in 0..n_phi {
                    let phi = 2.0 * pi * ip as f64 / n_phi as f64;
                    net.push(DVector::from_vec(vec![
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ]));
                }
            }
            Ok(net)
        }
        _ => {
            let mut rng = stream(opts.seed, &[tag::NET, dim as u64]);
            let mut net = Vec::with_capacity(opts.samples);
            while net.len() < opts.samples {
                let mut v = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                let norm = v.norm();
                if norm > 1e-12 {
                    v /= norm;
                    net.push(v);
                }
            }
            Ok(net)
        }
    }
}

/// Net-based upper estimate of a Euclidean vector norm.
pub fn net_vector_norm(v: &DVector<f64>, eps: f64, opts: &NetOptions) -> Result<f64> {
    let net = unit_sphere_net(v.len(), eps, opts)?;
    let sup = net
        .iter()
        .map(|lam| lam.dot(v))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(sup / (1.0 - eps))
}

/// Net-based upper estimate of the operator norm of a symmetric matrix.
/// Requires `eps < 1/2`.
pub fn net_operator_norm(x: &DMatrix<f64>, eps: f64, opts: &NetOptions) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "operator net resolution must lie in (0, 1/2), got {eps}"
        )));
    }
    if x.nrows() != x.ncols() {
        return Err(Error::NotSymmetric {
            asymmetry: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    let net = unit_sphere_net(x.nrows(), eps, opts)?;
    let sup = net
        .iter()
        .map(|lam| (lam.transpose() * x * lam)[(0, 0)].abs())
        .fold(0.0f64, f64::max);
    Ok(sup / (1.0 - 2.0 * eps))
}
