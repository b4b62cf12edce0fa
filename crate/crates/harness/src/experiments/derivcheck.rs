//! Randomized analytic-vs-finite-difference derivative checks.
//!
//! Each case draws an architecture (widths <= 7, depth <= 4), a weight
//! point in the ball product, a sample and a target, then compares the
//! closed-form gradient (Hessian) against the central-difference oracle.
//! Emits one JSON record `{case_id, max_rel_err, pass}` per case.

use crate::config::ExperimentConfig;
use landscape_core::error::Result;
use landscape_core::exactdiff::{
    fd_gradient, fd_hessian, grad_linear, grad_sigmoid, hessian_linear, hessian_sigmoid,
    DEFAULT_FD_STEP,
};
use landscape_core::model::{forward, loss, Activation, Architecture, WeightPoint};
use landscape_core::rng::{stream, tag};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

pub struct RandomCase {
    pub arch: Architecture,
    pub w: WeightPoint,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

pub fn random_case(activation: Activation, seed: u64, case: u64) -> RandomCase {
    let mut rng = stream(seed, &[tag::TRIAL, case]);
    let l = rng.gen_range(2..=4usize);
    let dims: Vec<usize> = (0..=l).map(|_| rng.gen_range(1..=7usize)).collect();
    let arch = Architecture::new(dims, activation).expect("valid dims");
    let radius = rng.gen_range(0.5..=3.0);
    let w = WeightPoint::random_in_ball(&arch, radius, &mut rng).expect("in ball");
    let x = DVector::from_fn(arch.input_dim(), |_, _| StandardNormal.sample(&mut rng));
    let y = DVector::from_fn(arch.output_dim(), |_, _| StandardNormal.sample(&mut rng));
    RandomCase { arch, w, x, y }
}

fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn rel_err_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

pub fn grad_check(cfg: &ExperimentConfig) -> Result<(Value, bool, Option<String>)> {
    let activation = cfg.activation()?;
    let tol = cfg.thresholds.grad_rel_err;
    let records: Vec<(u64, f64)> = (0..cfg.cases)
        .into_par_iter()
        .map(|case| {
            let rc = random_case(activation, cfg.seed, case);
            let trace = forward(&rc.arch, &rc.w, &rc.x, &rc.y).expect("shapes agree");
            let analytic = match activation {
                Activation::Linear => grad_linear(&trace, &rc.w),
                Activation::Sigmoid => grad_sigmoid(&trace, &rc.w),
            }
            .expect("activation matches")
            .flatten();
            let loose = rc.w.radius() * 16.0;
            let fd = fd_gradient(
                |flat: &DVector<f64>| {
                    let wp = WeightPoint::from_flat(&rc.arch, flat, loose).expect("shape");
                    loss(&forward(&rc.arch, &wp, &rc.x, &rc.y).expect("shapes agree"))
                },
                &rc.w.flatten(),
                DEFAULT_FD_STEP,
            )
            .expect("positive step");
            (case, rel_err_vec(&analytic, &fd))
        })
        .collect();
    finish(records, tol)
}

pub fn hess_check(cfg: &ExperimentConfig) -> Result<(Value, bool, Option<String>)> {
    let activation = cfg.activation()?;
    let tol = match activation {
        Activation::Linear => cfg.thresholds.hess_rel_err_linear,
        Activation::Sigmoid => cfg.thresholds.hess_rel_err_sigmoid,
    };
    let asym_tol = cfg.thresholds.hess_asymmetry;
    let records: Vec<(u64, f64, f64)> = (0..cfg.cases)
        .into_par_iter()
        .map(|case| {
            let rc = random_case(activation, cfg.seed ^ 0x4e55, case);
            let trace = forward(&rc.arch, &rc.w, &rc.x, &rc.y).expect("shapes agree");
            let analytic = match activation {
                Activation::Linear => hessian_linear(&trace, &rc.w),
                Activation::Sigmoid => hessian_sigmoid(&trace, &rc.w),
            }
            .expect("activation matches");
            let loose = rc.w.radius() * 16.0;
            let fd = fd_hessian(
                |flat: &DVector<f64>| {
                    let wp = WeightPoint::from_flat(&rc.arch, flat, loose).expect("shape");
                    let trace = forward(&rc.arch, &wp, &rc.x, &rc.y).expect("shapes agree");
                    match activation {
                        Activation::Linear => grad_linear(&trace, &wp),
                        Activation::Sigmoid => grad_sigmoid(&trace, &wp),
                    }
                    .expect("activation matches")
                    .flatten()
                },
                &rc.w.flatten(),
                DEFAULT_FD_STEP,
            )
            .expect("positive step");
            (case, rel_err_mat(analytic.matrix(), &fd), analytic.asymmetry())
        })
        .collect();
    let max_rel_err = records.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let max_asym = records.iter().map(|r| r.2).fold(0.0f64, f64::max);
    let pass = max_rel_err <= tol && max_asym <= asym_tol;
    let cases: Vec<Value> = records
        .iter()
        .map(|(id, err, asym)| {
            json!({
                "case_id": id,
                "max_rel_err": err,
                "asymmetry": asym,
                "pass": *err <= tol && *asym <= asym_tol,
            })
        })
        .collect();
    Ok((
        json!({
            "cases": cases,
            "max_rel_err": max_rel_err,
            "max_asymmetry": max_asym,
            "tolerance": tol,
            "pass": pass,
        }),
        pass,
        None,
    ))
}

fn finish(records: Vec<(u64, f64)>, tol: f64) -> Result<(Value, bool, Option<String>)> {
    let max_rel_err = records.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let pass = max_rel_err <= tol;
    let cases: Vec<Value> = records
        .iter()
        .map(|(id, err)| json!({"case_id": id, "max_rel_err": err, "pass": *err <= tol}))
        .collect();
    Ok((
        json!({
            "cases": cases,
            "max_rel_err": max_rel_err,
            "tolerance": tol,
            "pass": pass,
        }),
        pass,
        None,
    ))
}
