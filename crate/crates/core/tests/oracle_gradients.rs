//! Finite-difference validation of the analytic gradient and Hessian
//! formulas over randomized architectures, weights and samples.

use landscape_core::exactdiff::{
    fd_gradient, fd_hessian, grad_linear, grad_sigmoid, hessian_linear, hessian_sigmoid,
};
use landscape_core::model::{forward, loss, Activation, Architecture, WeightPoint};
use landscape_core::rng::{stream, tag};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_case(
    activation: Activation,
    seed: u64,
    case: u64,
) -> (Architecture, WeightPoint, DVector<f64>, DVector<f64>) {
    let mut rng = stream(seed, &[tag::TRIAL, case]);
    let l = rng.gen_range(2..=4usize);
    let dims: Vec<usize> = (0..=l).map(|_| rng.gen_range(1..=7usize)).collect();
    let arch = Architecture::new(dims, activation).unwrap();
    let radius = rng.gen_range(0.5..=3.0);
    let w = WeightPoint::random_in_ball(&arch, radius, &mut rng).unwrap();
    let x = DVector::from_fn(arch.input_dim(), |_, _| StandardNormal.sample(&mut rng));
    let y = DVector::from_fn(arch.output_dim(), |_, _| StandardNormal.sample(&mut rng));
    (arch, w, x, y)
}

fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn rel_err_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn check_gradient(activation: Activation, cases: u64, tol: f64) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let (arch, w, x, y) = random_case(activation, 0x6A11, case);
        let trace = forward(&arch, &w, &x, &y).unwrap();
        let analytic = match activation {
            Activation::Linear => grad_linear(&trace, &w).unwrap(),
            Activation::Sigmoid => grad_sigmoid(&trace, &w).unwrap(),
        }
        .flatten();
        let radius = w.radius();
        let fd = fd_gradient(
            |flat: &DVector<f64>| {
                let wp = WeightPoint::from_flat(&arch, flat, radius * 16.0).unwrap();
                loss(&forward(&arch, &wp, &x, &y).unwrap())
            },
            &w.flatten(),
            1e-5,
        )
        .unwrap();
        let err = rel_err_vec(&analytic, &fd);
        assert!(
            err <= tol,
            "{activation:?} case {case}: gradient rel err {err:.3e} > {tol:.1e}"
        );
        worst = worst.max(err);
    }
    worst
}

fn check_hessian(activation: Activation, cases: u64, tol: f64) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let (arch, w, x, y) = random_case(activation, 0x4E55, case);
        let trace = forward(&arch, &w, &x, &y).unwrap();
        let analytic = match activation {
            Activation::Linear => hessian_linear(&trace, &w).unwrap(),
            Activation::Sigmoid => hessian_sigmoid(&trace, &w).unwrap(),
        };
        assert!(
            analytic.asymmetry() <= 1e-9,
            "{activation:?} case {case}: asymmetry {:.3e}",
            analytic.asymmetry()
        );
        let radius = w.radius();
        let fd = fd_hessian(
            |flat: &DVector<f64>| {
                let wp = WeightPoint::from_flat(&arch, flat, radius * 16.0).unwrap();
                let trace = forward(&arch, &wp, &x, &y).unwrap();
                match activation {
                    Activation::Linear => grad_linear(&trace, &wp).unwrap().flatten(),
                    Activation::Sigmoid => grad_sigmoid(&trace, &wp).unwrap().flatten(),
                }
            },
            &w.flatten(),
            1e-5,
        )
        .unwrap();
        let err = rel_err_mat(analytic.matrix(), &fd);
        assert!(
            err <= tol,
            "{activation:?} case {case}: hessian rel err {err:.3e} > {tol:.1e}"
        );
        worst = worst.max(err);
    }
    worst
}

#[test]
fn linear_gradient_matches_fd_over_100_cases() {
    let worst = check_gradient(Activation::Linear, 100, 1e-6);
    println!("linear gradient worst rel err: {worst:.3e}");
}

#[test]
fn sigmoid_gradient_matches_fd_over_100_cases() {
    let worst = check_gradient(Activation::Sigmoid, 100, 1e-6);
    println!("sigmoid gradient worst rel err: {worst:.3e}");
}

#[test]
fn linear_hessian_matches_fd_over_50_cases() {
    let worst = check_hessian(Activation::Linear, 50, 1e-5);
    println!("linear hessian worst rel err: {worst:.3e}");
}

#[test]
fn sigmoid_hessian_matches_fd_over_50_cases() {
    let worst = check_hessian(Activation::Sigmoid, 50, 1e-4);
    println!("sigmoid hessian worst rel err: {worst:.3e}");
}

#[test]
fn scalar_net_fd_gradient_close_to_hand_values() {
    let arch = Architecture::new(vec![1, 1, 1], Activation::Linear).unwrap();
    let w = WeightPoint::new(
        &arch,
        vec![
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 3.0),
        ],
        4.0,
    )
    .unwrap();
    let x = DVector::from_vec(vec![1.0]);
    let y = DVector::from_vec(vec![0.0]);
    let fd = fd_gradient(
        |flat: &DVector<f64>| {
            let wp = WeightPoint::from_flat(&arch, flat, 64.0).unwrap();
            loss(&forward(&arch, &wp, &x, &y).unwrap())
        },
        &w.flatten(),
        1e-5,
    )
    .unwrap();
    assert!((fd[0] - 18.0).abs() <= 1e-7);
    assert!((fd[1] - 12.0).abs() <= 1e-7);
}
