//! Closed-form gradients and Hessians of the squared loss, for both
//! activations, plus the finite-difference oracles, spectral classification
//! and net-based norm estimators used to audit them.
//!
//! Linear activation: with `B_{s:t} = W^(s) ... W^(t)` the gradient block of
//! layer `j` is `(B_{j-1:1} x) (kron) (B_{l:j+1}^T e)` and the Hessian splits
//! into `l^2` Kronecker blocks with three cases (`s<t`, `s=t`, `s>t`).
//!
//! Sigmoid activation: with `A_i = (W^(i))^T G(u^(i))`, `B_{s:t} = A_s...A_t`
//! and `G`/`P` the first/second derivative diagonal operators, the gradient
//! block is `vec((G(u^(j)) B_{j+1:l} e) (v^(j-1))^T)` and each Hessian block
//! is a sum of five structured terms (derivative of `G(u^(j))`, derivatives
//! of the `G`s inside the chain, the bare weight inside the chain, the error
//! term, and the leading activation).
//!
//! All block orientations follow the column-major per-layer `vec` layout of
//! [`crate::model::WeightPoint::flatten`]; the finite-difference oracles are
//! the independent ground truth for every formula here.

mod fd;
mod netnorm;
mod spectral;

pub use fd::{fd_gradient, fd_hessian, DEFAULT_FD_STEP};
pub use netnorm::{net_operator_norm, net_vector_norm, unit_sphere_net, NetOptions};
pub use spectral::{classify_spectrum, index_of, spectrum, IndexInfo, NEGATIVE_EIG_TOL};

use crate::error::{Error, Result};
use crate::model::{sigmoid_derivative, Activation, Architecture, ForwardTrace, WeightPoint};
use nalgebra::{DMatrix, DVector};

/// Per-layer gradient blocks plus a flattened view.
#[derive(Debug, Clone)]
pub struct GradientVector {
    blocks: Vec<DVector<f64>>,
}

impl GradientVector {
    pub fn from_blocks(blocks: Vec<DVector<f64>>) -> Self {
        Self { blocks }
    }

    pub fn zeros(arch: &Architecture) -> Self {
        let blocks = (1..=arch.depth())
            .map(|j| {
                let (r, c) = arch.layer_shape(j);
                DVector::zeros(r * c)
            })
            .collect();
        Self { blocks }
    }

    /// Gradient block of layer `j` (1-based), length `d_j d_{j-1}`.
    pub fn block(&self, j: usize) -> &DVector<f64> {
        &self.blocks[j - 1]
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    /// Concatenation in layer order (matches `WeightPoint::flatten`).
    pub fn flatten(&self) -> DVector<f64> {
        let total: usize = self.blocks.iter().map(|b| b.len()).sum();
        let mut out = Vec::with_capacity(total);
        for b in &self.blocks {
            out.extend_from_slice(b.as_slice());
        }
        DVector::from_vec(out)
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.blocks {
            *b *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &GradientVector) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b;
        }
    }
}

/// Dense symmetric Hessian with its measured assembly asymmetry.
#[derive(Debug, Clone)]
pub struct HessianMatrix {
    matrix: DMatrix<f64>,
    asymmetry: f64,
}

impl HessianMatrix {
    /// Wraps an assembled matrix, recording `max |H - H^T|`.
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let mut asym: f64 = 0.0;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        Self {
            matrix,
            asymmetry: asym,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Max-norm asymmetry measured at assembly time.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_linear(trace: &ForwardTrace) -> Result<()> {
    if trace.activation() != Activation::Linear {
        return Err(Error::OracleMismatch(
            "linear derivative formulas require a linear trace".into(),
        ));
    }
    Ok(())
}

fn check_sigmoid(trace: &ForwardTrace) -> Result<()> {
    if trace.activation() != Activation::Sigmoid {
        return Err(Error::OracleMismatch(
            "sigmoid derivative formulas require a sigmoid trace".into(),
        ));
    }
    Ok(())
}

/// Suffix chain maps `C_j = B_{l:j+1}` for a linear network, `j` in `0..=l`.
fn linear_suffixes(w: &WeightPoint, d_l: usize) -> Vec<DMatrix<f64>> {
    let l = w.depth();
    let mut suffix = vec![DMatrix::identity(d_l, d_l); l + 1];
    for j in (0..l).rev() {
        suffix[j] = &suffix[j + 1] * w.layer(j + 1);
    }
    suffix
}

/// Prefix chain maps `P_j = B_{j-1:1}` for a linear network, `j` in `1..=l+1`
/// (index `j-1` in the returned vector). `P_1` is the identity on inputs.
fn linear_prefixes(w: &WeightPoint, d_0: usize) -> Vec<DMatrix<f64>> {
    let l = w.depth();
    let mut prefix = Vec::with_capacity(l + 1);
    prefix.push(DMatrix::identity(d_0, d_0));
    for j in 1..=l {
        let next = w.layer(j) * prefix.last().unwrap();
        prefix.push(next);
    }
    prefix
}

/// Gradient of the squared loss for a linear network:
/// block `j` is `(B_{j-1:1} x) (kron) (B_{l:j+1}^T e)`.
pub fn grad_linear(trace: &ForwardTrace, w: &WeightPoint) -> Result<GradientVector> {
    check_linear(trace)?;
    let l = w.depth();
    let suffix = linear_suffixes(w, trace.error().len());
    let mut blocks = Vec::with_capacity(l);
    for j in 1..=l {
        // For linear activations B_{j-1:1} x is exactly v^(j-1).
        let a = trace.act(j - 1);
        let c = suffix[j].transpose() * trace.error();
        let dj = c.len();
        let mut block = DVector::zeros(a.len() * dj);
        for (b, &ab) in a.iter().enumerate() {
            for (i, &ci) in c.iter().enumerate() {
                block[b * dj + i] = ab * ci;
            }
        }
        blocks.push(block);
    }
    Ok(GradientVector::from_blocks(blocks))
}

/// Gradient blocks computed from first moments instead of a single sample:
/// block `j` is `vec(C_j^T Eex P_j^T)` where `Eex` plays the role of
/// `E[e x^T]`. With `Eex = e x^T` this reproduces [`grad_linear`]; with
/// `Eex = (B_{l:1} - T) Sigma` it is the population gradient of the
/// closed-form linear risk.
pub fn grad_linear_from_moments(
    arch: &Architecture,
    w: &WeightPoint,
    eex: &DMatrix<f64>,
) -> Result<GradientVector> {
    let l = arch.depth();
    let suffix = linear_suffixes(w, arch.output_dim());
    let prefix = linear_prefixes(w, arch.input_dim());
    let mut blocks = Vec::with_capacity(l);
    for j in 1..=l {
        let grad_mat = suffix[j].transpose() * eex * prefix[j - 1].transpose();
        blocks.push(DVector::from_vec(grad_mat.as_slice().to_vec()));
    }
    Ok(GradientVector::from_blocks(blocks))
}

/// Inner chain `B_{s-1:t+1}` between two layers (`s > t`), identity when the
/// range is empty (`s == t + 1`).
fn inner_chain(w: &WeightPoint, dims: &[usize], s: usize, t: usize) -> DMatrix<f64> {
    debug_assert!(s > t);
    let mut m = DMatrix::identity(dims[t], dims[t]);
    for j in (t + 1)..=(s - 1) {
        m = w.layer(j) * m;
    }
    m
}

/// Hessian of the squared loss for a linear network.
pub fn hessian_linear(trace: &ForwardTrace, w: &WeightPoint) -> Result<HessianMatrix> {
    check_linear(trace)?;
    let arch = arch_of(trace, w);
    let exx = trace.input() * trace.input().transpose();
    let eex = trace.error() * trace.input().transpose();
    hessian_linear_from_moments(&arch, w, &exx, &eex)
}

fn arch_of(trace: &ForwardTrace, w: &WeightPoint) -> Architecture {
    let mut dims = vec![trace.input().len()];
    for j in 1..=w.depth() {
        dims.push(w.layer(j).nrows());
    }
    Architecture::new(dims, trace.activation()).expect("trace implies a valid architecture")
}

/// Hessian blocks from second moments. `exx` plays the role of `E[x x^T]`
/// and `eex` of `E[e x^T]`; rank-one moments of a single sample give the
/// per-sample Hessian, `Sigma` and `(B_{l:1} - T) Sigma` give the population
/// Hessian of the closed-form linear risk.
///
/// Block cases for row layer `s` / column layer `t`:
/// `s = t`: `(P_s exx P_s^T) (kron) (C_s^T C_s)`;
/// `s > t`: a cross term pairing `C_s^T (eex) P_t^T` with the inner chain
/// `B_{s-1:t+1}`, plus `(P_s exx P_t^T) (kron) (C_s^T C_t)`;
/// `s < t`: the mirrored formulas, assembled independently so the symmetry
/// of the result is a measured property rather than a construction.
pub fn hessian_linear_from_moments(
    arch: &Architecture,
    w: &WeightPoint,
    exx: &DMatrix<f64>,
    eex: &DMatrix<f64>,
) -> Result<HessianMatrix> {
    let l = arch.depth();
    let dims = arch.dims();
    let d = arch.weight_dim();
    let suffix = linear_suffixes(w, arch.output_dim());
    let prefix = linear_prefixes(w, arch.input_dim());
    let mut h = DMatrix::zeros(d, d);

    for s in 1..=l {
        for t in 1..=l {
            let ro = arch.layer_offset(s);
            let co = arch.layer_offset(t);
            let (dr_s, dc_s) = arch.layer_shape(s); // (d_s, d_{s-1})
            let (dr_t, dc_t) = arch.layer_shape(t);
            let block = if s == t {
                let left = &prefix[s - 1] * exx * prefix[s - 1].transpose();
                let right = suffix[s].transpose() * &suffix[s];
                left.kronecker(&right)
            } else if s > t {
                // Row layer is the later one. Cross term entries:
                // out[(mu*d_s + nu), (beta*d_t + alpha)] = M[mu, alpha] * K[nu, beta]
                // with M = B_{s-1:t+1} and K = C_s^T eex P_t^T.
                let m = inner_chain(w, &dims.to_vec(), s, t);
                let k = suffix[s].transpose() * eex * prefix[t - 1].transpose();
                let mut block = DMatrix::zeros(dr_s * dc_s, dr_t * dc_t);
                for mu in 0..dc_s {
                    for nu in 0..dr_s {
                        for beta in 0..dc_t {
                            for alpha in 0..dr_t {
                                block[(mu * dr_s + nu, beta * dr_t + alpha)] =
                                    m[(mu, alpha)] * k[(nu, beta)];
                            }
                        }
                    }
                }
                let left = &prefix[s - 1] * exx * prefix[t - 1].transpose();
                let right = suffix[s].transpose() * &suffix[t];
                block += left.kronecker(&right);
                block
            } else {
                // Row layer is the earlier one (t > s in paper terms, with
                // roles swapped): K2 = P_s (eex)^T C_t pairs with the inner
                // chain M = B_{t-1:s+1}.
                let m = inner_chain(w, &dims.to_vec(), t, s);
                let k2 = &prefix[s - 1] * eex.transpose() * &suffix[t];
                let mut block = DMatrix::zeros(dr_s * dc_s, dr_t * dc_t);
                for beta in 0..dc_s {
                    for alpha in 0..dr_s {
                        for mu in 0..dc_t {
                            for nu in 0..dr_t {
                                block[(beta * dr_s + alpha, mu * dr_t + nu)] =
                                    k2[(beta, nu)] * m[(mu, alpha)];
                            }
                        }
                    }
                }
                let left = &prefix[s - 1] * exx * prefix[t - 1].transpose();
                let right = suffix[s].transpose() * &suffix[t];
                block += left.kronecker(&right);
                block
            };
            h.view_mut((ro, co), (dr_s * dc_s, dr_t * dc_t))
                .copy_from(&block);
        }
    }
    Ok(HessianMatrix::new(h))
}

/// Cached per-trace quantities for the sigmoid formulas.
struct SigmoidChains {
    /// `g[j-1]`: diagonal of `G(u^(j))`, entries `v(1-v)`.
    g: Vec<DVector<f64>>,
    /// `p[j-1]`: diagonal factors `v(1-v)(1-2v)` of the `P` operator.
    p: Vec<DVector<f64>>,
    /// `suffix[j] = B_{j+1:l}` of shape `d_j x d_l`, `j` in `0..=l`.
    suffix: Vec<DMatrix<f64>>,
    /// `z[j-1] = B_{j+1:l} e`.
    z: Vec<DVector<f64>>,
    /// `f[j-1] = G(u^(j)) B_{j+1:l} e` (the gradient factor).
    f: Vec<DVector<f64>>,
}

fn sigmoid_chains(trace: &ForwardTrace, w: &WeightPoint) -> SigmoidChains {
    let l = w.depth();
    let d_l = trace.error().len();
    let g: Vec<DVector<f64>> = (1..=l).map(|j| sigmoid_derivative(trace, j)).collect();
    let p: Vec<DVector<f64>> = (1..=l)
        .map(|j| {
            let v = trace.act(j);
            v.map(|vi| vi * (1.0 - vi) * (1.0 - 2.0 * vi))
        })
        .collect();
    let mut suffix = vec![DMatrix::identity(d_l, d_l); l + 1];
    for j in (0..l).rev() {
        // A_{j+1} = W^(j+1)^T G(u^(j+1)): scale columns of W^T by g.
        let mut a = w.layer(j + 1).transpose();
        for (c, gi) in g[j].iter().enumerate() {
            a.column_mut(c).scale_mut(*gi);
        }
        suffix[j] = a * &suffix[j + 1];
    }
    let z: Vec<DVector<f64>> = (1..=l).map(|j| &suffix[j] * trace.error()).collect();
    let f: Vec<DVector<f64>> = (0..l).map(|j| g[j].component_mul(&z[j])).collect();
    SigmoidChains { g, p, suffix, z, f }
}

/// Gradient for a sigmoid network: block `j` is
/// `vec((G(u^(j)) B_{j+1:l} e) (v^(j-1))^T)`.
pub fn grad_sigmoid(trace: &ForwardTrace, w: &WeightPoint) -> Result<GradientVector> {
    check_sigmoid(trace)?;
    let l = w.depth();
    let chains = sigmoid_chains(trace, w);
    let mut blocks = Vec::with_capacity(l);
    for j in 1..=l {
        let a = trace.act(j - 1);
        let fj = &chains.f[j - 1];
        let dj = fj.len();
        let mut block = DVector::zeros(a.len() * dj);
        for (b, &ab) in a.iter().enumerate() {
            for (i, &fi) in fj.iter().enumerate() {
                block[b * dj + i] = ab * fi;
            }
        }
        blocks.push(block);
    }
    Ok(GradientVector::from_blocks(blocks))
}

/// `G(u^(j)) B_{j+1:k-1} (W^(k))^T` (shape `d_j x d_k`): the left factor of
/// the chain-derivative terms. `rj` must be `B_{j+1:k-1}` (shape
/// `d_j x d_{k-1}`).
fn left_factor(
    w: &WeightPoint,
    g_j: &DVector<f64>,
    rj: &DMatrix<f64>,
    k: usize,
) -> DMatrix<f64> {
    let mut m = rj * w.layer(k).transpose();
    for (r, gi) in g_j.iter().enumerate() {
        m.row_mut(r).scale_mut(*gi);
    }
    m
}

/// Hessian for a sigmoid network assembled from the five structured terms.
/// Upper blocks (row layer `j` at or before column layer `i`) and lower
/// blocks (row after column) are filled from independently derived formulas,
/// so the symmetry of the result is measured, not imposed.
pub fn hessian_sigmoid(trace: &ForwardTrace, w: &WeightPoint) -> Result<HessianMatrix> {
    check_sigmoid(trace)?;
    let arch = arch_of(trace, w);
    let l = arch.depth();
    let d = arch.weight_dim();
    let ch = sigmoid_chains(trace, w);
    let mut h = DMatrix::zeros(d, d);

    // inner_between[j][k] holds R_{j,k} = B_{j+1:k-1} (shape d_j x d_{k-1})
    // for k in j+1..=l (identity at k = j+1).
    let mut inner_between: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(l + 1);
    for j in 0..=l {
        let dj = arch.width(j);
        let mut row = Vec::new();
        if j < l {
            let mut r = DMatrix::identity(dj, dj);
            row.push(r.clone()); // k = j+1
            for k in (j + 1)..l {
                // R_{j,k+1} = R_{j,k} A_k
                let mut a = w.layer(k).transpose();
                for (c, gi) in ch.g[k - 1].iter().enumerate() {
                    a.column_mut(c).scale_mut(*gi);
                }
                r = &r * a;
                row.push(r.clone());
            }
        }
        inner_between.push(row);
    }
    let inner = |j: usize, k: usize| -> &DMatrix<f64> { &inner_between[j][k - j - 1] };

    // Row-scaled suffixes G_j B_{j+1:l}.
    let gs: Vec<DMatrix<f64>> = (1..=l)
        .map(|j| {
            let mut m = ch.suffix[j].clone();
            for (r, gi) in ch.g[j - 1].iter().enumerate() {
                m.row_mut(r).scale_mut(*gi);
            }
            m
        })
        .collect();

    for jr in 1..=l {
        for jc in 1..=l {
            let ro = arch.layer_offset(jr);
            let co = arch.layer_offset(jc);
            let (dr_r, dc_r) = arch.layer_shape(jr);
            let (dr_c, dc_c) = arch.layer_shape(jc);
            let v_r = trace.act(jr - 1);
            let v_c = trace.act(jc - 1);
            let rank1 = v_r * v_c.transpose(); // d_{jr-1} x d_{jc-1}

            let mut block = DMatrix::zeros(dr_r * dc_r, dr_c * dc_c);

            if jr <= jc {
                let (j, i) = (jr, jc);
                // Inner factor collapsing the G-derivative chain terms plus
                // the error (Gauss-Newton style) term; all of the shape
                // d_j x d_i and paired with v^(j-1) (v^(i-1))^T.
                let mut inner_sum = &gs[j - 1] * gs[i - 1].transpose();
                if i == j {
                    let pz = ch.p[j - 1].component_mul(&ch.z[j - 1]);
                    for idx in 0..pz.len() {
                        inner_sum[(idx, idx)] += pz[idx];
                    }
                }
                let k_start = if i == j { j + 1 } else { i };
                for k in k_start..=l {
                    let mut lk = left_factor(w, &ch.g[j - 1], inner(j, k), k);
                    let pz = ch.p[k - 1].component_mul(&ch.z[k - 1]);
                    for (c, s) in pz.iter().enumerate() {
                        lk.column_mut(c).scale_mut(*s);
                    }
                    if k == i {
                        inner_sum += lk;
                    } else {
                        let mi = left_factor(w, &ch.g[i - 1], inner(i, k), k);
                        inner_sum += lk * mi.transpose();
                    }
                }
                block += rank1.kronecker(&inner_sum);
                if i > j {
                    // Bare-weight term: v^(j-1) (kron) (G_j B_{j+1:i-1}) (kron) f_i^T.
                    let mut n = inner(j, i).clone();
                    for (r, gi) in ch.g[j - 1].iter().enumerate() {
                        n.row_mut(r).scale_mut(*gi);
                    }
                    let fi = &ch.f[i - 1];
                    for b in 0..dc_r {
                        for a in 0..dr_r {
                            for beta in 0..dc_c {
                                for alpha in 0..dr_c {
                                    block[(b * dr_r + a, beta * dr_c + alpha)] +=
                                        v_r[b] * n[(a, beta)] * fi[alpha];
                                }
                            }
                        }
                    }
                }
            } else {
                // Row layer after column layer: differentiate the later
                // gradient block by the earlier weights.
                let (i, j) = (jr, jc);
                let mut inner_sum = &gs[i - 1] * gs[j - 1].transpose();
                {
                    // k = i term: diag(p_i z_i) times (m^{(j)}_i)^T.
                    let pz = ch.p[i - 1].component_mul(&ch.z[i - 1]);
                    let mj = left_factor(w, &ch.g[j - 1], inner(j, i), i);
                    let mut scaled = mj.transpose();
                    for (r, s) in pz.iter().enumerate() {
                        scaled.row_mut(r).scale_mut(*s);
                    }
                    inner_sum += scaled;
                }
                for k in (i + 1)..=l {
                    let mut lk = left_factor(w, &ch.g[i - 1], inner(i, k), k);
                    let pz = ch.p[k - 1].component_mul(&ch.z[k - 1]);
                    for (c, s) in pz.iter().enumerate() {
                        lk.column_mut(c).scale_mut(*s);
                    }
                    let mj = left_factor(w, &ch.g[j - 1], inner(j, k), k);
                    inner_sum += lk * mj.transpose();
                }
                block += rank1.kronecker(&inner_sum);
                // Leading-activation term: entries
                // v^(j-1)[beta] * (G_j R_{j,i})[alpha, b] * f_i[a].
                let mut n = inner(j, i).clone();
                for (r, gi) in ch.g[j - 1].iter().enumerate() {
                    n.row_mut(r).scale_mut(*gi);
                }
                let fi = &ch.f[i - 1];
                for b in 0..dc_r {
                    for a in 0..dr_r {
                        for beta in 0..dc_c {
                            for alpha in 0..dr_c {
                                block[(b * dr_r + a, beta * dr_c + alpha)] +=
                                    v_c[beta] * n[(alpha, b)] * fi[a];
                            }
                        }
                    }
                }
            }
            h.view_mut((ro, co), (dr_r * dc_r, dr_c * dc_c))
                .copy_from(&block);
        }
    }
    Ok(HessianMatrix::new(h))
}

/// The diagonal derivative operators of one sigmoid layer.
#[derive(Debug, Clone)]
pub struct DiagOperators {
    g: DVector<f64>,
    p: DVector<f64>,
}

impl DiagOperators {
    /// `G(u^(k))` diagonal entries `sigma(1-sigma)`, in `(0, 1/4]`.
    pub fn g_entries(&self) -> &DVector<f64> {
        &self.g
    }

    /// Nonzero entries `sigma(1-sigma)(1-2 sigma)` of `P_k`.
    pub fn p_entries(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn g_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.g)
    }

    /// `P_k` of shape `d_k^2 x d_k` with entry `((s-1) d_k + s, s)` holding
    /// the second-derivative factor, all other entries zero.
    pub fn p_matrix(&self) -> DMatrix<f64> {
        let dk = self.p.len();
        let mut m = DMatrix::zeros(dk * dk, dk);
        for s in 0..dk {
            m[(s * dk + s, s)] = self.p[s];
        }
        m
    }
}

/// Extracts `G(u^(k))` and `P_k` factors from a sigmoid trace.
pub fn diag_operators(trace: &ForwardTrace, k: usize) -> Result<DiagOperators> {
    check_sigmoid(trace)?;
    if k < 1 || k > trace.depth() {
        return Err(Error::LayerIndexOutOfRange {
            index: k.to_string(),
            valid: format!("1..={}", trace.depth()),
        });
    }
    let g = sigmoid_derivative(trace, k);
    let p = trace
        .act(k)
        .map(|vi| vi * (1.0 - vi) * (1.0 - 2.0 * vi));
    Ok(DiagOperators { g, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, Architecture, WeightPoint};
    use nalgebra::{dvector, DMatrix};

    fn scalar_linear() -> (Architecture, WeightPoint, ForwardTrace) {
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
        let trace = forward(&arch, &w, &dvector![1.0], &dvector![0.0]).unwrap();
        (arch, w, trace)
    }

    #[test]
    fn scalar_gradient_anchor() {
        let (_, w, trace) = scalar_linear();
        let g = grad_linear(&trace, &w).unwrap();
        assert!((g.block(1)[0] - 18.0).abs() <= 1e-10);
        assert!((g.block(2)[0] - 12.0).abs() <= 1e-10);
    }

    #[test]
    fn scalar_hessian_anchor() {
        let (_, w, trace) = scalar_linear();
        let h = hessian_linear(&trace, &w).unwrap();
        let m = h.matrix();
        assert!((m[(0, 0)] - 9.0).abs() <= 1e-10);
        assert!((m[(0, 1)] - 12.0).abs() <= 1e-10);
        assert!((m[(1, 0)] - 12.0).abs() <= 1e-10);
        assert!((m[(1, 1)] - 4.0).abs() <= 1e-10);
        assert!(h.asymmetry() <= 1e-12);
    }

    #[test]
    fn zero_error_means_zero_gradient() {
        let arch = Architecture::new(vec![2, 3, 2], Activation::Linear).unwrap();
        let mut rng = crate::rng::stream(5, &[crate::rng::tag::WEIGHTS]);
        let w = WeightPoint::random_in_ball(&arch, 1.0, &mut rng).unwrap();
        let x = dvector![0.7, -0.3];
        let trace0 = forward(&arch, &w, &x, &DVector::zeros(2)).unwrap();
        let y = trace0.output().clone();
        let trace = forward(&arch, &w, &x, &y).unwrap();
        let g = grad_linear(&trace, &w).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn all_zero_weights_zero_hessian() {
        // Every block of the Hessian carries a zero chain product or a zero
        // error when w = 0, y = 0 and l >= 2.
        let arch = Architecture::new(vec![2, 2, 2, 2], Activation::Linear).unwrap();
        let w = WeightPoint::zeros(&arch, 1.0).unwrap();
        let trace = forward(&arch, &w, &dvector![1.0, -2.0], &DVector::zeros(2)).unwrap();
        let h = hessian_linear(&trace, &w).unwrap();
        assert_eq!(h.matrix().norm(), 0.0);
    }

    #[test]
    fn sigmoid_gradient_hand_value() {
        // dims (1,1,1), w = 0, x = 1, y = 0: layer-2 block is
        // 0.25 * 0.5 * 0.5 = 0.0625, layer-1 block carries the factor W2 = 0.
        let arch = Architecture::new(vec![1, 1, 1], Activation::Sigmoid).unwrap();
        let w = WeightPoint::zeros(&arch, 1.0).unwrap();
        let trace = forward(&arch, &w, &dvector![1.0], &dvector![0.0]).unwrap();
        let g = grad_sigmoid(&trace, &w).unwrap();
        assert!((g.block(2)[0] - 0.0625).abs() <= 1e-15);
        assert_eq!(g.block(1)[0], 0.0);
    }

    #[test]
    fn sigmoid_zero_error_zero_gradient() {
        let arch = Architecture::new(vec![2, 3, 2], Activation::Sigmoid).unwrap();
        let mut rng = crate::rng::stream(6, &[crate::rng::tag::WEIGHTS]);
        let w = WeightPoint::random_in_ball(&arch, 2.0, &mut rng).unwrap();
        let x = dvector![0.2, 0.4];
        let probe = forward(&arch, &w, &x, &DVector::zeros(2)).unwrap();
        let y = probe.output().clone();
        let trace = forward(&arch, &w, &x, &y).unwrap();
        let g = grad_sigmoid(&trace, &w).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn diag_operator_ranges() {
        let arch = Architecture::new(vec![3, 4, 2], Activation::Sigmoid).unwrap();
        let mut rng = crate::rng::stream(9, &[crate::rng::tag::WEIGHTS]);
        let w = WeightPoint::random_in_ball(&arch, 3.0, &mut rng).unwrap();
        let trace = forward(&arch, &w, &dvector![1.0, -0.5, 2.0], &DVector::zeros(2)).unwrap();
        for k in 1..=2 {
            let ops = diag_operators(&trace, k).unwrap();
            for &g in ops.g_entries().iter() {
                assert!(g > 0.0 && g <= 0.25);
            }
            for &p in ops.p_entries().iter() {
                assert!(p.abs() <= 8.0 / 81.0);
            }
            let pm = ops.p_matrix();
            let dk = ops.p_entries().len();
            assert_eq!(pm.nrows(), dk * dk);
            assert_eq!(pm.ncols(), dk);
        }
        assert!(diag_operators(&trace, 3).is_err());
    }

    #[test]
    fn moment_hessian_matches_sample_hessian() {
        let arch = Architecture::new(vec![2, 3, 2], Activation::Linear).unwrap();
        let mut rng = crate::rng::stream(31, &[crate::rng::tag::WEIGHTS]);
        let w = WeightPoint::random_in_ball(&arch, 1.2, &mut rng).unwrap();
        let x = dvector![0.9, -1.4];
        let y = dvector![0.3, 0.1];
        let trace = forward(&arch, &w, &x, &y).unwrap();
        let h1 = hessian_linear(&trace, &w).unwrap();
        let exx = &x * x.transpose();
        let eex = trace.error() * x.transpose();
        let h2 = hessian_linear_from_moments(&arch, &w, &exx, &eex).unwrap();
        assert!((h1.matrix() - h2.matrix()).norm() <= 1e-12);
    }
}
