//! Stationary points of empirical and population risks: location,
//! spectral classification, pairing, and the degenerate-point audit.
//!
//! The solver is a damped Newton iteration (eigenvalue-shifted Hessian,
//! shift `max(0, 1e-6 - lambda_min)`) projected into the per-layer ball
//! product. In minimization mode it backtracks on the risk value; in
//! stationary mode it backtracks on the gradient norm, which lets it
//! converge to saddles as well as extrema.

use crate::error::{Error, Result};
use crate::exactdiff::{classify_spectrum, spectrum, GradientVector, HessianMatrix};
use crate::model::{Architecture, WeightPoint};
use crate::risk::{empirical_gradient, empirical_hessian, empirical_risk, PopulationOracle};
use crate::stats::median;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A differentiable risk surface over weight points.
pub trait RiskSurface: Sync {
    fn arch(&self) -> &Architecture;
    fn value(&self, w: &WeightPoint) -> Result<f64>;
    fn gradient(&self, w: &WeightPoint) -> Result<GradientVector>;
    fn hessian(&self, w: &WeightPoint) -> Result<HessianMatrix>;
}

/// Empirical risk over a fixed dataset.
pub struct EmpiricalSurface<'a> {
    arch: &'a Architecture,
    data: &'a crate::data::Dataset,
}

impl<'a> EmpiricalSurface<'a> {
    pub fn new(arch: &'a Architecture, data: &'a crate::data::Dataset) -> Self {
        Self { arch, data }
    }
}

impl RiskSurface for EmpiricalSurface<'_> {
    fn arch(&self) -> &Architecture {
        self.arch
    }

    fn value(&self, w: &WeightPoint) -> Result<f64> {
        empirical_risk(self.arch, w, self.data)
    }

    fn gradient(&self, w: &WeightPoint) -> Result<GradientVector> {
        empirical_gradient(self.arch, w, self.data)
    }

    fn hessian(&self, w: &WeightPoint) -> Result<HessianMatrix> {
        empirical_hessian(self.arch, w, self.data)
    }
}

/// Population risk through an oracle.
pub struct PopulationSurface<'a> {
    arch: &'a Architecture,
    oracle: &'a PopulationOracle,
}

impl<'a> PopulationSurface<'a> {
    pub fn new(arch: &'a Architecture, oracle: &'a PopulationOracle) -> Self {
        Self { arch, oracle }
    }
}

impl RiskSurface for PopulationSurface<'_> {
    fn arch(&self) -> &Architecture {
        self.arch
    }

    fn value(&self, w: &WeightPoint) -> Result<f64> {
        Ok(self.oracle.risk(self.arch, w)?.0)
    }

    fn gradient(&self, w: &WeightPoint) -> Result<GradientVector> {
        self.oracle.gradient(self.arch, w)
    }

    fn hessian(&self, w: &WeightPoint) -> Result<HessianMatrix> {
        self.oracle.hessian(self.arch, w)
    }
}

/// Solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Gradient-norm tolerance for declaring a point stationary.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 120,
        }
    }
}

/// Side a stationary record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Empirical,
    Population,
}

/// A located stationary point with its spectral classification.
#[derive(Debug, Clone)]
pub struct StationaryRecord {
    pub w: WeightPoint,
    pub value: f64,
    pub grad_norm: f64,
    pub spectrum: Vec<f64>,
    pub index: usize,
    pub degenerate: bool,
    pub min_abs_eigenvalue: f64,
    pub source: Source,
    /// Whether some layer sits on the radius constraint at the point.
    pub boundary_active: bool,
}

/// Per-start convergence diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartDiagnostic {
    pub start: usize,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
}

/// Damped Newton direction `-(H + mu I)^{-1} g` with
/// `mu = max(0, 1e-6 - lambda_min)`.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let sym = 0.5 * (hess + hess.transpose());
    let eigs = sym.symmetric_eigenvalues();
    let lambda_min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut mu = (1e-6 - lambda_min).max(0.0);
    loop {
        let shifted = &sym + DMatrix::identity(sym.nrows(), sym.ncols()) * mu;
        if let Some(chol) = shifted.clone().cholesky() {
            return -chol.solve(grad);
        }
        mu = (mu * 10.0).max(1e-6);
        if mu > 1e12 {
            return -grad.clone();
        }
    }
}

fn project(arch: &Architecture, flat: &DVector<f64>, radius: f64) -> WeightPoint {
    WeightPoint::from_flat_projected(arch, flat, radius).expect("projection stays in shape")
}

/// Minimizes the surface from each start and returns the converged point
/// with the lowest value. Fails if no start reaches the tolerance.
pub fn minimize(
    surface: &dyn RiskSurface,
    starts: &[WeightPoint],
    radius: f64,
    cfg: &SolverConfig,
) -> Result<WeightPoint> {
    let mut best: Option<(f64, WeightPoint)> = None;
    for start in starts {
        if let Ok((w, grad_norm, _)) = descend(surface, start, radius, cfg, Mode::Value) {
            if grad_norm <= cfg.tol {
                let value = surface.value(&w)?;
                match &best {
                    Some((bv, _)) if *bv <= value => {}
                    _ => best = Some((value, w)),
                }
            }
        }
    }
    best.map(|(_, w)| w).ok_or_else(|| {
        Error::OptimizerFailed(format!(
            "no start reached gradient tolerance {:.1e}",
            cfg.tol
        ))
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Backtrack on the risk value (minimization).
    Value,
    /// Backtrack on the gradient norm (stationary-point seeking).
    GradNorm,
}

fn descend(
    surface: &dyn RiskSurface,
    start: &WeightPoint,
    radius: f64,
    cfg: &SolverConfig,
    mode: Mode,
) -> Result<(WeightPoint, f64, usize)> {
    let arch = surface.arch();
    let mut w = project(arch, &start.flatten(), radius);
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it;
        let grad = surface.gradient(&w)?.flatten();
        let grad_norm = grad.norm();
        if grad_norm <= cfg.tol {
            return Ok((w, grad_norm, it));
        }
        let hess = surface.hessian(&w)?;
        let newton = newton_direction(hess.matrix(), &grad);
        let merit = |wp: &WeightPoint| -> Result<f64> {
            match mode {
                Mode::Value => surface.value(wp),
                Mode::GradNorm => Ok(surface.gradient(wp)?.flatten().norm()),
            }
        };
        let current = merit(&w)?;
        let mut moved = false;
        // Newton direction first, then steepest descent of the merit as a
        // fallback; each with halving backtracks and ball projection.
        let fallback = match mode {
            Mode::Value => -&grad,
            // grad of 0.5 ||g||^2 is H g.
            Mode::GradNorm => {
                let hg = hess.matrix() * &grad;
                let n = hg.norm();
                if n > 1e-300 {
                    -hg
                } else {
                    -&grad
                }
            }
        };
        for dir in [&newton, &fallback] {
            let mut t = 1.0;
            for _ in 0..40 {
                let candidate = project(arch, &(w.flatten() + dir * t), radius);
                let m = merit(&candidate)?;
                if m < current {
                    w = candidate;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if moved {
                break;
            }
        }
        if !moved {
            let grad_norm = surface.gradient(&w)?.flatten().norm();
            return Ok((w, grad_norm, it));
        }
    }
    let grad_norm = surface.gradient(&w)?.flatten().norm();
    Ok((w, grad_norm, iterations))
}

/// Locates stationary points from the given starts. Converged points are
/// re-verified with a fresh gradient evaluation, classified through the
/// Hessian spectrum at threshold `zeta`, and merged within a radius
/// `1e-5 sqrt(d)`. Returns the records plus per-start diagnostics.
pub fn find_stationary(
    surface: &dyn RiskSurface,
    starts: &[WeightPoint],
    radius: f64,
    zeta: f64,
    cfg: &SolverConfig,
    source: Source,
) -> Result<(Vec<StationaryRecord>, Vec<StartDiagnostic>)> {
    if cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if zeta <= 0.0 {
        return Err(Error::InvalidParameter("zeta must be positive".into()));
    }
    let arch = surface.arch();
    let merge_radius = 1e-5 * (arch.weight_dim() as f64).sqrt();
    let mut records: Vec<StationaryRecord> = Vec::new();
    let mut diagnostics = Vec::with_capacity(starts.len());
    for (si, start) in starts.iter().enumerate() {
        let (w, _, iterations) = descend(surface, start, radius, cfg, Mode::GradNorm)?;
        // Independent verification of stationarity at the returned point.
        let verified_norm = surface.gradient(&w)?.flatten().norm();
        let converged = verified_norm <= cfg.tol;
        diagnostics.push(StartDiagnostic {
            start: si,
            iterations,
            final_grad_norm: verified_norm,
            converged,
        });
        if !converged {
            continue;
        }
        if records
            .iter()
            .any(|r| r.w.distance(&w) <= merge_radius)
        {
            continue;
        }
        let hess = surface.hessian(&w)?;
        let eigs = spectrum(hess.matrix())?;
        let info = classify_spectrum(&eigs, zeta);
        records.push(StationaryRecord {
            value: surface.value(&w)?,
            grad_norm: verified_norm,
            spectrum: eigs,
            index: info.index,
            degenerate: info.degenerate,
            min_abs_eigenvalue: info.min_abs_eigenvalue,
            boundary_active: w.max_shell() >= 1.0 - 1e-9,
            w,
            source,
        });
    }
    records.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.grad_norm.partial_cmp(&b.grad_norm).unwrap())
    });
    Ok((records, diagnostics))
}

/// One matched pair of stationary points.
#[derive(Debug, Clone)]
pub struct PairedPoint {
    pub empirical: StationaryRecord,
    pub population: StationaryRecord,
    pub distance: f64,
    /// Index equality holds whenever both sides are non-degenerate.
    pub index_match: bool,
    /// The match had a competing candidate within the radius; resolved by
    /// the smaller distance.
    pub ambiguous: bool,
}

/// Result of greedy nearest-neighbor pairing.
#[derive(Debug, Clone)]
pub struct PairingResult {
    pub pairs: Vec<PairedPoint>,
    pub unmatched_empirical: Vec<StationaryRecord>,
    pub unmatched_population: Vec<StationaryRecord>,
    /// Distance bound the caller compares pair distances against.
    pub bound: f64,
}

/// Greedy injective matching under `match_radius`: globally smallest
/// distances first, which resolves any ambiguity toward the closer
/// candidate (ambiguous pairs are flagged).
pub fn pair_points(
    empirical: &[StationaryRecord],
    population: &[StationaryRecord],
    match_radius: f64,
    bound: f64,
) -> Result<PairingResult> {
    if match_radius <= 0.0 {
        return Err(Error::InvalidParameter(
            "match radius must be positive".into(),
        ));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, e) in empirical.iter().enumerate() {
        for (j, p) in population.iter().enumerate() {
            let dist = e.w.distance(&p.w);
            if dist <= match_radius {
                candidates.push((dist, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut counts_e = vec![0usize; empirical.len()];
    let mut counts_p = vec![0usize; population.len()];
    for &(_, i, j) in &candidates {
        counts_e[i] += 1;
        counts_p[j] += 1;
    }
    let mut used_e = vec![false; empirical.len()];
    let mut used_p = vec![false; population.len()];
    let mut pairs = Vec::new();
    for (dist, i, j) in candidates {
        if used_e[i] || used_p[j] {
            continue;
        }
        used_e[i] = true;
        used_p[j] = true;
        let e = empirical[i].clone();
        let p = population[j].clone();
        let both_nondegenerate = !e.degenerate && !p.degenerate;
        pairs.push(PairedPoint {
            index_match: !both_nondegenerate || e.index == p.index,
            ambiguous: counts_e[i] > 1 || counts_p[j] > 1,
            empirical: e,
            population: p,
            distance: dist,
        });
    }
    let unmatched_empirical = empirical
        .iter()
        .enumerate()
        .filter(|(i, _)| !used_e[*i])
        .map(|(_, r)| r.clone())
        .collect();
    let unmatched_population = population
        .iter()
        .enumerate()
        .filter(|(j, _)| !used_p[*j])
        .map(|(_, r)| r.clone())
        .collect();
    Ok(PairingResult {
        pairs,
        unmatched_empirical,
        unmatched_population,
        bound,
    })
}

/// Gradient norms of the empirical risk at a population-stationary point,
/// per sample size: `(n, median over trials of ||grad J_n(point)||)`.
pub fn degenerate_gradient_audit(
    arch: &Architecture,
    point: &WeightPoint,
    sampler: &crate::data::SamplerSpec,
    teacher: &crate::data::Teacher,
    teacher_seed: u64,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    use rayon::prelude::*;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let norms: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = crate::rng::derive_key(seed, &[crate::rng::tag::TRIAL, t as u64, n as u64]);
                let data = crate::data::Dataset::generate(
                    &sampler.with_seed(s),
                    teacher,
                    teacher_seed,
                    n,
                )
                .expect("sampler consistent with teacher");
                empirical_gradient(arch, point, &data)
                    .expect("dataset nonempty")
                    .norm()
            })
            .collect();
        rows.push((n, median(&norms)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, SamplerKind, SamplerSpec, Teacher};
    use crate::model::Activation;
    use crate::rng::{stream, tag};
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

    use nalgebra::DMatrix;

    #[test]
    fn zero_point_is_degenerate_stationary_for_linear_nets() {
        // At w = 0 every gradient block carries a zero chain product, so
        // the origin is stationary for l >= 2. With nonzero targets the
        // Hessian at the origin vanishes entirely once l >= 3 (each cross
        // block still contains a weight factor), making it degenerate.
        let arch = Architecture::new(vec![1, 1, 1, 1], Activation::Linear).unwrap();
        let w = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 2.0),
                DMatrix::from_element(1, 1, 1.5),
                DMatrix::from_element(1, 1, 2.0),
            ],
            4.0,
        )
        .unwrap();
        let teacher = Teacher::new(arch.clone(), w);
        let oracle = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let surface = PopulationSurface::new(&arch, &oracle);
        let zero = WeightPoint::zeros(&arch, 4.0).unwrap();
        let (records, diags) = find_stationary(
            &surface,
            &[zero],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Population,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        assert!(diags[0].converged);
        let rec = &records[0];
        assert!(rec.grad_norm <= 1e-9);
        assert!(rec.degenerate);
        assert_eq!(rec.index, 0);
    }

    #[test]
    fn teacher_weights_are_stationary_on_realizable_data() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 71);
        let data = Dataset::generate(&spec, &teacher, 0, 32).unwrap();
        let surface = EmpiricalSurface::new(&arch, &data);
        let (records, _) = find_stationary(
            &surface,
            &[teacher.weights.clone()],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Empirical,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].grad_norm <= 1e-10);
    }

    #[test]
    fn product_manifold_points_are_degenerate() {
        // Population risk 0.5 (w1 w2 - 6)^2: any point with w1 w2 = 6 is
        // stationary and the rescaling direction has zero curvature.
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let oracle = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let surface = PopulationSurface::new(&arch, &oracle);
        let start = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 1.5),
                DMatrix::from_element(1, 1, 4.0),
            ],
            4.0,
        )
        .unwrap();
        let (records, _) = find_stationary(
            &surface,
            &[start],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Population,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        let rec = &records[0];
        let prod = rec.w.layer(1)[(0, 0)] * rec.w.layer(2)[(0, 0)];
        assert!((prod - 6.0).abs() <= 1e-6, "w1 w2 = {prod}");
        assert!(rec.degenerate, "min |eig| = {}", rec.min_abs_eigenvalue);
    }

    #[test]
    fn minimize_recovers_teacher_product() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 13);
        let data = Dataset::generate(&spec, &teacher, 0, 64).unwrap();
        let surface = EmpiricalSurface::new(&arch, &data);
        let mut rng = stream(2, &[tag::STARTS]);
        let starts: Vec<WeightPoint> = (0..4)
            .map(|_| WeightPoint::random_in_ball(&arch, 4.0, &mut rng).unwrap())
            .collect();
        let w = minimize(&surface, &starts, 4.0, &SolverConfig::default()).unwrap();
        let prod = w.layer(1)[(0, 0)] * w.layer(2)[(0, 0)];
        assert!((prod - 6.0).abs() <= 1e-6, "product {prod}");
    }

    #[test]
    fn pairing_identical_lists_matches_at_zero_distance() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 99);
        let data = Dataset::generate(&spec, &teacher, 0, 16).unwrap();
        let surface = EmpiricalSurface::new(&arch, &data);
        let (records, _) = find_stationary(
            &surface,
            &[teacher.weights.clone()],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Empirical,
        )
        .unwrap();
        let result = pair_points(&records, &records, 0.5, 1.0).unwrap();
        assert_eq!(result.pairs.len(), records.len());
        assert!(result.pairs.iter().all(|p| p.distance == 0.0));
        assert!(result.unmatched_empirical.is_empty());
        assert!(result.unmatched_population.is_empty());
    }

    #[test]
    fn unmatched_points_are_reported() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let spec = SamplerSpec::new(SamplerKind::IidGaussian, 1.0, 1, 99);
        let data = Dataset::generate(&spec, &teacher, 0, 16).unwrap();
        let surface = EmpiricalSurface::new(&arch, &data);
        let (records, _) = find_stationary(
            &surface,
            &[teacher.weights.clone()],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Empirical,
        )
        .unwrap();
        let result = pair_points(&records, &[], 0.5, 1.0).unwrap();
        assert_eq!(result.pairs.len(), 0);
        assert_eq!(result.unmatched_empirical.len(), records.len());
        assert!(pair_points(&records, &[], 0.0, 1.0).is_err());
    }

    #[test]
    fn spectrum_partition_identity() {
        let teacher = scalar_teacher();
        let arch = teacher.arch.clone();
        let oracle = PopulationOracle::exact_linear(dmatrix![1.0], &teacher).unwrap();
        let surface = PopulationSurface::new(&arch, &oracle);
        let start = WeightPoint::new(
            &arch,
            vec![
                DMatrix::from_element(1, 1, 2.5),
                DMatrix::from_element(1, 1, 2.4),
            ],
            4.0,
        )
        .unwrap();
        let (records, _) = find_stationary(
            &surface,
            &[start],
            4.0,
            1e-3,
            &SolverConfig::default(),
            Source::Population,
        )
        .unwrap();
        for rec in &records {
            let info = crate::exactdiff::classify_spectrum(&rec.spectrum, 1e-3);
            assert_eq!(
                info.n_below + info.n_above + info.n_small,
                arch.weight_dim()
            );
        }
    }
}
