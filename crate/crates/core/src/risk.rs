//! Empirical risk aggregates, population oracles and the gap estimators
//! that mirror the uniform-convergence statements.
//!
//! Sample reductions use a fixed-order pairwise scheme, so every aggregate
//! is bit-reproducible regardless of thread scheduling. The population side
//! is served by two oracles: a closed form for linear networks with a known
//! input covariance and noiseless linear teacher, and a frozen Monte-Carlo
//! sample for everything else. The sup-over-weights gap estimator probes
//! the product of per-layer balls with seeded draws (interior and boundary
//! shells), optionally refined by projected ascent; it reports a lower
//! estimate of the true sup and where the argmax landed.

use crate::data::{Dataset, SamplerSpec, Teacher};
use crate::error::{Error, Result};
use crate::exactdiff::{
    grad_linear, grad_linear_from_moments, grad_sigmoid, hessian_linear,
    hessian_linear_from_moments, hessian_sigmoid, GradientVector, HessianMatrix,
};
use crate::model::{forward, loss, Activation, Architecture, WeightPoint};
use crate::rng::{stream, tag};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Fixed-order pairwise sum of `f(i)` over `range`; the reduction tree
/// depends only on the index range, never on scheduling.
pub fn pairwise_sum_by<T, F>(lo: usize, hi: usize, f: &F) -> T
where
    T: std::ops::Add<Output = T>,
    F: Fn(usize) -> T,
{
    debug_assert!(hi > lo);
    if hi - lo == 1 {
        f(lo)
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
    }
}

/// Pairwise sum of a float slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum_by(0, xs.len(), &|i| xs[i])
}

fn per_sample_loss(arch: &Architecture, w: &WeightPoint, data: &Dataset, i: usize) -> f64 {
    let x = data.input(i).into_owned();
    let y = data.target(i).into_owned();
    loss(&forward(arch, w, &x, &y).expect("dataset conforms to architecture"))
}

/// Mean squared loss over the dataset.
pub fn empirical_risk(arch: &Architecture, w: &WeightPoint, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let total = pairwise_sum_by(0, n, &|i| per_sample_loss(arch, w, data, i));
    Ok(total / n as f64)
}

fn per_sample_gradient(
    arch: &Architecture,
    w: &WeightPoint,
    data: &Dataset,
    i: usize,
) -> DVector<f64> {
    let x = data.input(i).into_owned();
    let y = data.target(i).into_owned();
    let trace = forward(arch, w, &x, &y).expect("dataset conforms to architecture");
    match arch.activation() {
        Activation::Linear => grad_linear(&trace, w),
        Activation::Sigmoid => grad_sigmoid(&trace, w),
    }
    .expect("activation matches trace")
    .flatten()
}

/// Mean gradient over the dataset.
pub fn empirical_gradient(
    arch: &Architecture,
    w: &WeightPoint,
    data: &Dataset,
) -> Result<GradientVector> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let mut flat = pairwise_sum_by(0, n, &|i| per_sample_gradient(arch, w, data, i));
    flat /= n as f64;
    Ok(gradient_from_flat(arch, &flat))
}

fn gradient_from_flat(arch: &Architecture, flat: &DVector<f64>) -> GradientVector {
    let mut blocks = Vec::with_capacity(arch.depth());
    let mut off = 0;
    for j in 1..=arch.depth() {
        let (r, c) = arch.layer_shape(j);
        blocks.push(DVector::from_column_slice(&flat.as_slice()[off..off + r * c]));
        off += r * c;
    }
    GradientVector::from_blocks(blocks)
}

/// Mean Hessian over the dataset.
pub fn empirical_hessian(
    arch: &Architecture,
    w: &WeightPoint,
    data: &Dataset,
) -> Result<HessianMatrix> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let sum = pairwise_sum_by(0, n, &|i| {
        let x = data.input(i).into_owned();
        let y = data.target(i).into_owned();
        let trace = forward(arch, w, &x, &y).expect("dataset conforms to architecture");
        match arch.activation() {
            Activation::Linear => hessian_linear(&trace, w),
            Activation::Sigmoid => hessian_sigmoid(&trace, w),
        }
        .expect("activation matches trace")
        .into_matrix()
    });
    Ok(HessianMatrix::new(sum / n as f64))
}

/// Population-risk provider.
#[derive(Debug, Clone)]
pub enum PopulationOracle {
    /// Closed form for linear activation, known input covariance `Sigma`
    /// and noiseless linear teacher map `T`:
    /// `J(w) = 1/2 tr((B_{l:1} - T) Sigma (B_{l:1} - T)^T)`.
    ExactLinear {
        sigma: DMatrix<f64>,
        teacher_map: DMatrix<f64>,
    },
    /// Frozen held-out sample; estimates carry a standard error.
    MonteCarlo {
        data: Dataset,
        hessian_capable: bool,
    },
}

impl PopulationOracle {
    /// Exact oracle for a linear teacher under a known input covariance.
    pub fn exact_linear(sigma: DMatrix<f64>, teacher: &Teacher) -> Result<Self> {
        if teacher.noise != 0.0 {
            return Err(Error::OracleMismatch(
                "exact linear oracle requires a noiseless teacher".into(),
            ));
        }
        Ok(Self::ExactLinear {
            sigma,
            teacher_map: teacher.linear_map()?,
        })
    }

    /// Frozen Monte-Carlo oracle with `n_pop` samples.
    pub fn monte_carlo(
        sampler: &SamplerSpec,
        teacher: &Teacher,
        teacher_seed: u64,
        n_pop: usize,
    ) -> Result<Self> {
        let data = Dataset::generate(sampler, teacher, teacher_seed, n_pop)?;
        Ok(Self::MonteCarlo {
            data,
            hessian_capable: true,
        })
    }

    pub fn without_hessian(self) -> Self {
        match self {
            Self::MonteCarlo { data, .. } => Self::MonteCarlo {
                data,
                hessian_capable: false,
            },
            exact => exact,
        }
    }

    pub fn supports_hessian(&self) -> bool {
        match self {
            Self::ExactLinear { .. } => true,
            Self::MonteCarlo {
                hessian_capable, ..
            } => *hessian_capable,
        }
    }

    fn end_to_end(arch: &Architecture, w: &WeightPoint) -> DMatrix<f64> {
        let mut b = w.layer(1).clone();
        for j in 2..=arch.depth() {
            b = w.layer(j) * b;
        }
        b
    }

    /// Population risk and its standard error (0 for the exact oracle).
    pub fn risk(&self, arch: &Architecture, w: &WeightPoint) -> Result<(f64, f64)> {
        match self {
            Self::ExactLinear { sigma, teacher_map } => {
                if arch.activation() != Activation::Linear {
                    return Err(Error::OracleMismatch(
                        "exact linear oracle queried with a sigmoid network".into(),
                    ));
                }
                let diff = Self::end_to_end(arch, w) - teacher_map;
                let value = 0.5 * (&diff * sigma * diff.transpose()).trace();
                Ok((value, 0.0))
            }
            Self::MonteCarlo { data, .. } => {
                let n = data.len();
                let losses: Vec<f64> =
                    (0..n).map(|i| per_sample_loss(arch, w, data, i)).collect();
                let mean = pairwise_sum(&losses) / n as f64;
                let var = pairwise_sum_by(0, n, &|i| (losses[i] - mean).powi(2))
                    / (n.saturating_sub(1).max(1)) as f64;
                Ok((mean, (var / n as f64).sqrt()))
            }
        }
    }

    /// Population gradient.
    pub fn gradient(&self, arch: &Architecture, w: &WeightPoint) -> Result<GradientVector> {
        match self {
            Self::ExactLinear { sigma, teacher_map } => {
                if arch.activation() != Activation::Linear {
                    return Err(Error::OracleMismatch(
                        "exact linear oracle queried with a sigmoid network".into(),
                    ));
                }
                let eex = (Self::end_to_end(arch, w) - teacher_map) * sigma;
                grad_linear_from_moments(arch, w, &eex)
            }
            Self::MonteCarlo { data, .. } => empirical_gradient(arch, w, data),
        }
    }

    /// Population Hessian.
    pub fn hessian(&self, arch: &Architecture, w: &WeightPoint) -> Result<HessianMatrix> {
        match self {
            Self::ExactLinear { sigma, teacher_map } => {
                if arch.activation() != Activation::Linear {
                    return Err(Error::OracleMismatch(
                        "exact linear oracle queried with a sigmoid network".into(),
                    ));
                }
                let eex = (Self::end_to_end(arch, w) - teacher_map) * sigma;
                hessian_linear_from_moments(arch, w, sigma, &eex)
            }
            Self::MonteCarlo {
                data,
                hessian_capable,
            } => {
                if !hessian_capable {
                    return Err(Error::OracleMismatch(
                        "oracle configured without Hessian support".into(),
                    ));
                }
                empirical_hessian(arch, w, data)
            }
        }
    }
}

/// Which gap is probed by [`sup_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapQuantity {
    /// `|empirical risk - population risk|`.
    Loss,
    /// `||empirical gradient - population gradient||_2`.
    GradNorm,
    /// Operator norm of the Hessian difference.
    HessOpNorm,
}

/// Probe budget for the sup estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeBudget {
    pub probes: usize,
    /// Projected-ascent refinement steps per probe (0 = plain sampling).
    pub ascent_steps: usize,
    pub seed: u64,
}

impl Default for ProbeBudget {
    fn default() -> Self {
        Self {
            probes: 256,
            ascent_steps: 0,
            seed: 17,
        }
    }
}

/// How the sup estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMethod {
    NetSample,
    NetSampleWithAscent,
}

/// A sup-gap estimate: a maximum over probed weight points, hence a lower
/// estimate of the true sup over the ball product.
#[derive(Debug, Clone)]
pub struct GapEstimate {
    pub sup_gap: f64,
    pub argmax_w: WeightPoint,
    pub probes: usize,
    pub method: GapMethod,
    /// Oracle-induced standard error at the argmax (0 for exact oracles).
    pub stderr: f64,
    /// Largest per-layer shell `||W_j||_F / r` at the argmax; 1.0 means the
    /// argmax landed on the constraint boundary.
    pub argmax_shell: f64,
}

fn gap_at(
    arch: &Architecture,
    data: &Dataset,
    oracle: &PopulationOracle,
    quantity: GapQuantity,
    w: &WeightPoint,
) -> Result<(f64, f64)> {
    match quantity {
        GapQuantity::Loss => {
            let emp = empirical_risk(arch, w, data)?;
            let (pop, se) = oracle.risk(arch, w)?;
            Ok(((emp - pop).abs(), se))
        }
        GapQuantity::GradNorm => {
            let emp = empirical_gradient(arch, w, data)?.flatten();
            let pop = oracle.gradient(arch, w)?.flatten();
            Ok(((emp - pop).norm(), 0.0))
        }
        GapQuantity::HessOpNorm => {
            let emp = empirical_hessian(arch, w, data)?;
            let pop = oracle.hessian(arch, w)?;
            let diff = emp.matrix() - pop.matrix();
            let eigs = crate::exactdiff::spectrum(&diff)?;
            let op = eigs.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
            Ok((op, 0.0))
        }
    }
}

/// Estimates `sup_{w in Omega} gap(w)` by seeded probes of the per-layer
/// ball product (alternating interior and boundary draws), optionally
/// refined by projected gradient ascent on the gap.
pub fn sup_gap(
    arch: &Architecture,
    data: &Dataset,
    oracle: &PopulationOracle,
    quantity: GapQuantity,
    radius: f64,
    budget: &ProbeBudget,
) -> Result<GapEstimate> {
    if budget.probes == 0 {
        return Err(Error::InvalidParameter("probe budget must be >= 1".into()));
    }
    if quantity == GapQuantity::HessOpNorm && !oracle.supports_hessian() {
        return Err(Error::OracleMismatch(
            "Hessian gap requested from an oracle without Hessian support".into(),
        ));
    }
    let mut best: Option<(f64, WeightPoint, f64)> = None;
    for p in 0..budget.probes {
        let mut rng = stream(budget.seed, &[tag::PROBES, p as u64]);
        let mut w = if p % 2 == 0 {
            WeightPoint::random_in_ball(arch, radius, &mut rng)?
        } else {
            WeightPoint::random_on_boundary(arch, radius, &mut rng)?
        };
        let (mut g, mut se) = gap_at(arch, data, oracle, quantity, &w)?;
        if budget.ascent_steps > 0 && quantity == GapQuantity::Loss {
            // Ascent on |J_n - J| via the signed gradient difference.
            let mut step = 0.1 * radius;
            for _ in 0..budget.ascent_steps {
                let emp = empirical_risk(arch, &w, data)?;
                let (pop, _) = oracle.risk(arch, &w)?;
                let sign = if emp >= pop { 1.0 } else { -1.0 };
                let dir = {
                    let ge = empirical_gradient(arch, &w, data)?.flatten();
                    let gp = oracle.gradient(arch, &w)?.flatten();
                    (ge - gp) * sign
                };
                let norm = dir.norm();
                if norm <= 1e-14 {
                    break;
                }
                let candidate_flat = w.flatten() + dir * (step / norm);
                let candidate =
                    WeightPoint::from_flat_projected(arch, &candidate_flat, radius)?;
                let (cg, cse) = gap_at(arch, data, oracle, quantity, &candidate)?;
                if cg > g {
                    w = candidate;
                    g = cg;
                    se = cse;
                } else {
                    step *= 0.5;
                }
            }
        }
        match &best {
            Some((bg, _, _)) if *bg >= g => {}
            _ => best = Some((g, w, se)),
        }
    }
    let (sup, argmax, se) = best.unwrap();
    let shell = argmax.max_shell();
    Ok(GapEstimate {
        sup_gap: sup,
        argmax_w: argmax,
        probes: budget.probes,
        method: if budget.ascent_steps > 0 {
            GapMethod::NetSampleWithAscent
        } else {
            GapMethod::NetSample
        },
        stderr: se,
        argmax_shell: shell,
    })
}

/// Outcome of the stability / generalization comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `|mean over trials of the refit average|` (the stability rate).
    pub stability: f64,
    /// `|mean over trials of J(w_n) - J_n(w_n)|`.
    pub generalization: f64,
    pub stderr_stability: f64,
    pub stderr_generalization: f64,
    /// `sqrt(se_s^2 + se_g^2)`.
    pub combined_stderr: f64,
    pub trials_used: usize,
    /// Trials dropped because an optimizer failed its gradient tolerance.
    pub excluded: usize,
}

/// Configuration for [`loo_stability`].
#[derive(Debug, Clone)]
pub struct StabilityConfig {
    pub arch: Architecture,
    pub radius: f64,
    pub sampler: SamplerSpec,
    pub teacher: Teacher,
    pub teacher_seed: u64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub opt: crate::landscape::SolverConfig,
    /// Held-out sample size for the population-risk estimate per trial.
    pub n_pop: usize,
}

/// Empirical check of the stability = generalization identity.
///
/// Per trial: draw a dataset of `n` samples and `n` fresh samples; fit
/// the empirical minimizer `w_n`; for each sample `j` refit with sample `j`
/// replaced by fresh sample `j` and average
/// `f(w^(j), fresh_j) - f(w_n, fresh_j)`. In expectation that average
/// equals `J_n(w_n) - J(w_n)`, the negated generalization gap, so the two
/// reported magnitudes estimate the same number. The refit interpretation
/// (replace rather than delete, evaluated on the replacing sample) is the
/// one that makes the identity exact for empirical risk minimizers.
pub fn loo_stability(cfg: &StabilityConfig) -> Result<StabilityReport> {
    if cfg.n < 2 {
        return Err(Error::InvalidParameter("stability needs n >= 2".into()));
    }
    use rayon::prelude::*;
    let results: Vec<Option<(f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| stability_trial(cfg, t as u64).ok())
        .collect();
    let kept: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    let excluded = cfg.trials - kept.len();
    if kept.is_empty() {
        return Err(Error::OptimizerFailed(
            "no stability trial reached the gradient tolerance".into(),
        ));
    }
    let m = kept.len() as f64;
    let mean_s = kept.iter().map(|(s, _)| s).sum::<f64>() / m;
    let mean_g = kept.iter().map(|(_, g)| g).sum::<f64>() / m;
    let var_s = kept.iter().map(|(s, _)| (s - mean_s).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let var_g = kept.iter().map(|(_, g)| (g - mean_g).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let se_s = (var_s / m).sqrt();
    let se_g = (var_g / m).sqrt();
    Ok(StabilityReport {
        stability: mean_s.abs(),
        generalization: mean_g.abs(),
        stderr_stability: se_s,
        stderr_generalization: se_g,
        combined_stderr: (se_s * se_s + se_g * se_g).sqrt(),
        trials_used: kept.len(),
        excluded,
    })
}

fn stability_trial(cfg: &StabilityConfig, trial: u64) -> Result<(f64, f64)> {
    use crate::landscape::{minimize, EmpiricalSurface};
    let data_seed = crate::rng::derive_key(cfg.seed, &[tag::TRIAL, trial, 1]);
    let fresh_seed = crate::rng::derive_key(cfg.seed, &[tag::TRIAL, trial, 2]);
    let data = Dataset::generate(
        &cfg.sampler.with_seed(data_seed),
        &cfg.teacher,
        cfg.teacher_seed,
        cfg.n,
    )?;
    let fresh = Dataset::generate(
        &cfg.sampler.with_seed(fresh_seed),
        &cfg.teacher,
        cfg.teacher_seed,
        cfg.n,
    )?;
    let pop_seed = crate::rng::derive_key(cfg.seed, &[tag::TRIAL, trial, 3]);
    let pop = Dataset::generate(
        &cfg.sampler.with_seed(pop_seed),
        &cfg.teacher,
        cfg.teacher_seed,
        cfg.n_pop,
    )?;

    // Full-data empirical risk minimizer from multistart.
    let surface = EmpiricalSurface::new(&cfg.arch, &data);
    let mut starts = Vec::new();
    let mut start_rng = stream(cfg.seed, &[tag::STARTS, trial]);
    starts.push(cfg.teacher.weights.clone());
    for _ in 0..4 {
        starts.push(WeightPoint::random_in_ball(
            &cfg.arch, cfg.radius, &mut start_rng,
        )?);
    }
    let w_n = minimize(&surface, &starts, cfg.radius, &cfg.opt)?;

    // Replace-one refits, warm-started at the full minimizer.
    let mut refit_terms = Vec::with_capacity(cfg.n);
    for j in 0..cfg.n {
        let xj = fresh.input(j).into_owned();
        let yj = fresh.target(j).into_owned();
        let replaced = data.with_replaced(j, &xj, &yj);
        let refit_surface = EmpiricalSurface::new(&cfg.arch, &replaced);
        let w_refit = minimize(
            &refit_surface,
            std::slice::from_ref(&w_n),
            cfg.radius,
            &cfg.opt,
        )?;
        let f_refit = loss(&forward(&cfg.arch, &w_refit, &xj, &yj)?);
        let f_full = loss(&forward(&cfg.arch, &w_n, &xj, &yj)?);
        refit_terms.push(f_refit - f_full);
    }
    let stability_stat = pairwise_sum(&refit_terms) / cfg.n as f64;

    let emp = empirical_risk(&cfg.arch, &w_n, &data)?;
    let pop_risk = empirical_risk(&cfg.arch, &w_n, &pop)?;
    let generalization_stat = pop_risk - emp;
    Ok((stability_stat, generalization_stat))
}

/// Exceedance table of `|mean_n f - E f| > t` across a sample-size grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailTable {
    pub threshold: f64,
    pub trials: usize,
    /// Rows `(n, exceedance fraction)`.
    pub rows: Vec<(usize, f64)>,
}

/// Monte-Carlo tail probabilities of the centered empirical mean of the
/// loss at a fixed weight point.
pub fn tail_experiment(
    arch: &Architecture,
    w: &WeightPoint,
    sampler: &SamplerSpec,
    teacher: &Teacher,
    teacher_seed: u64,
    oracle: &PopulationOracle,
    n_grid: &[usize],
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Result<TailTable> {
    if threshold <= 0.0 {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    let (expected, _) = oracle.risk(arch, w)?;
    use rayon::prelude::*;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let exceed: usize = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = crate::rng::derive_key(seed, &[tag::TRIAL, t as u64, n as u64]);
                let data = Dataset::generate(&sampler.with_seed(s), teacher, teacher_seed, n)
                    .expect("sampler and teacher are consistent");
                let mean = empirical_risk(arch, w, &data).expect("nonempty dataset");
                usize::from((mean - expected).abs() > threshold)
            })
            .sum();
        rows.push((n, exceed as f64 / trials as f64));
    }
    Ok(TailTable {
        threshold,
        trials,
        rows,
    })
}

/// Builds the fresh-sample matrix pair used by stability tests directly;
/// exposed for the harness.
pub fn fresh_samples(
    sampler: &SamplerSpec,
    teacher: &Teacher,
    teacher_seed: u64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    Dataset::generate(&sampler.with_seed(seed), teacher, teacher_seed, n)
}

/// Gaussian vector helper for probe targets in randomized audits.
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SamplerKind;
    use nalgebra::dmatrix;

    fn scalar_teacher() -> Teacher {
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
        Teacher::new(arch, w)
    }

    #[test]
    fn pairwise_sum_is_fixed_order() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin() * 1e-3).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn single_sample_risk_equals_loss() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::BoundedSubGaussian, 1.0, 1, 4);
        let data = Dataset::generate(&spec, &teacher, 0, 1).unwrap();
        let w = WeightPoint::zeros(&arch, 4.0).unwrap();
        let risk = empirical_risk(&arch, &w, &data).unwrap();
        let x = data.input(0).into_owned();
        let y = data.target(0).into_owned();
        let direct = loss(&forward(&arch, &w, &x, &y).unwrap());
        assert_eq!(risk, direct);
        let g = empirical_gradient(&arch, &w, &data).unwrap();
        assert_eq!(g.blocks().len(), 2);
    }

    #[test]
    fn teacher_weights_give_zero_risk_and_gradient() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 5);
        let data = Dataset::generate(&spec, &teacher, 0, 16).unwrap();
        let risk = empirical_risk(&arch, &teacher.weights, &data).unwrap();
        assert!(risk <= 1e-28);
        let g = empirical_gradient(&arch, &teacher.weights, &data).unwrap();
        assert!(g.norm() <= 1e-14);
    }

    #[test]
    fn two_sample_hand_value() {
        // x in {1, -1}, y = 6x, w = (2, 2): per-sample loss is
        // 0.5 (4x - 6x)^2 = 2 x^2 = 2.
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let inputs = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let targets = DMatrix::from_row_slice(1, 2, &[6.0, -6.0]);
        let data = Dataset {
            inputs,
            targets,
            provenance: crate::data::Provenance {
                sampler: SamplerSpec::new(SamplerKind::BoundedSubGaussian, 1.0, 1, 0),
                teacher_arch: arch.to_string(),
                teacher_radius: 4.0,
                teacher_seed: 0,
                noise: 0.0,
                n: 2,
            },
        };
        let w = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 2.0),
                DMatrix::from_element(1, 1, 2.0),
            ],
            4.0,
        )
        .unwrap();
        assert!((empirical_risk(&arch, &w, &data).unwrap() - 2.0).abs() <= 1e-15);
        assert_eq!(
            empirical_risk(&arch, &teacher.weights, &data).unwrap(),
            0.0
        );
    }

    #[test]
    fn exact_linear_oracle_hand_value() {
        // Sigma = 1, T = 6, w = (2,2): J = 0.5 (4-6)^2 = 2.
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let oracle = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let w = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 2.0),
                DMatrix::from_element(1, 1, 2.0),
            ],
            4.0,
        )
        .unwrap();
        let (j, se) = oracle.risk(&arch, &w).unwrap();
        assert!((j - 2.0).abs() <= 1e-15);
        assert_eq!(se, 0.0);
        let (j0, _) = oracle.risk(&arch, &teacher.weights).unwrap();
        assert_eq!(j0, 0.0);
    }

    #[test]
    fn monte_carlo_oracle_consistent_with_exact() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let exact = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let spec = SamplerSpec::new(SamplerKind::BoundedSubGaussian, 1.0, 1, 31);
        let mc = PopulationOracle::monte_carlo(&spec, &teacher, 0, 200_000).unwrap();
        let w = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 2.0),
                DMatrix::from_element(1, 1, 2.0),
            ],
            4.0,
        )
        .unwrap();
        let (je, _) = exact.risk(&arch, &w).unwrap();
        let (jm, se) = mc.risk(&arch, &w).unwrap();
        // Rademacher inputs make the scalar risk deterministic, so the two
        // agree to roundoff and the MC stderr collapses.
        assert!((je - jm).abs() <= 3.0 * se + 1e-12);
    }

    #[test]
    fn scalar_rademacher_gap_is_identically_zero() {
        // With x^2 = 1 a.s., empirical and population risks coincide for
        // every w, so the sup gap is 0 to summation noise.
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::BoundedSubGaussian, 1.0, 1, 77);
        let data = Dataset::generate(&spec, &teacher, 0, 64).unwrap();
        let oracle = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let est = sup_gap(
            &arch,
            &data,
            &oracle,
            GapQuantity::Loss,
            2.0,
            &ProbeBudget {
                probes: 32,
                ascent_steps: 0,
                seed: 3,
            },
        )
        .unwrap();
        assert!(est.sup_gap <= 1e-10, "sup gap {}", est.sup_gap);
    }

    #[test]
    fn self_dataset_gap_vanishes() {
        // Probing the oracle's own frozen sample gives gap 0 up to
        // summation-order noise.
        let arch = Architecture::new(vec![2, 2, 1], Activation::Sigmoid).unwrap();
        let teacher = Teacher::random(arch.clone(), 1.5, 3).unwrap();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 2, 9);
        let oracle = PopulationOracle::monte_carlo(&spec, &teacher, 3, 512).unwrap();
        let data = match &oracle {
            PopulationOracle::MonteCarlo { data, .. } => data.clone(),
            _ => unreachable!(),
        };
        let est = sup_gap(
            &arch,
            &data,
            &oracle,
            GapQuantity::Loss,
            1.5,
            &ProbeBudget {
                probes: 16,
                ascent_steps: 0,
                seed: 4,
            },
        )
        .unwrap();
        assert!(est.sup_gap <= 1e-10, "sup gap {}", est.sup_gap);
    }

    #[test]
    fn hessian_gap_requires_capable_oracle() {
        let arch = Architecture::new(vec![1, 1, 1], Activation::Linear).unwrap();
        let teacher = scalar_teacher();
        let spec = SamplerSpec::new(SamplerKind::BoundedSubGaussian, 1.0, 1, 2);
        let data = Dataset::generate(&spec, &teacher, 0, 8).unwrap();
        let oracle = PopulationOracle::monte_carlo(&spec.with_seed(5), &teacher, 0, 64)
            .unwrap()
            .without_hessian();
        let err = sup_gap(
            &arch,
            &data,
            &oracle,
            GapQuantity::HessOpNorm,
            1.0,
            &ProbeBudget::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn tail_exceedance_zero_for_huge_threshold() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 6);
        let oracle = PopulationOracle::monte_carlo(&spec.with_seed(1000), &teacher, 0, 4096)
            .unwrap();
        let w = WeightPoint::zeros(&arch, 4.0).unwrap();
        let table = tail_experiment(
            &arch, &w, &spec, &teacher, 0, &oracle, &[16, 64], 1e9, 50, 12,
        )
        .unwrap();
        assert!(table.rows.iter().all(|&(_, frac)| frac == 0.0));
        assert!(tail_experiment(
            &arch, &w, &spec, &teacher, 0, &oracle, &[16], 0.0, 10, 12
        )
        .is_err());
    }

    #[test]
    fn empty_dataset_rejected() {
        let arch = Architecture::new(vec![1, 1, 1], Activation::Linear).unwrap();
        let w = WeightPoint::zeros(&arch, 1.0).unwrap();
        let data = Dataset {
            inputs: DMatrix::zeros(1, 0),
            targets: DMatrix::zeros(1, 0),
            provenance: crate::data::Provenance {
                sampler: SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 0),
                teacher_arch: String::new(),
                teacher_radius: 1.0,
                teacher_seed: 0,
                noise: 0.0,
                n: 0,
            },
        };
        assert!(matches!(
            empirical_risk(&arch, &w, &data),
            Err(Error::EmptyDataset)
        ));
    }
}
