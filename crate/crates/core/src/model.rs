//! Network architectures, radius-constrained weight points and forward
//! evaluation.
//!
//! A network has layers `1..=l` with widths `d_0..d_l`. Layer `j` maps
//! `v^(j-1)` to `u^(j) = W^(j) v^(j-1)`; the activation either passes
//! `u^(j)` through (linear) or applies the sigmoid entrywise. Weights live
//! in the product of per-layer Frobenius balls of radius `r`, and the flat
//! parameter vector concatenates the column-major vectorization of each
//! layer in order. All derivative indexing downstream depends on that
//! layout, so it is normative here.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Activation applied after every layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Sigmoid,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Linear => write!(f, "linear"),
            Activation::Sigmoid => write!(f, "sigmoid"),
        }
    }
}

/// Numerically stable sigmoid (separate branches for the two signs).
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Layer widths plus activation kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    dims: Vec<usize>,
    activation: Activation,
}

impl Architecture {
    /// `dims = [d_0, ..., d_l]`; requires `l >= 2` and positive widths.
    pub fn new(dims: Vec<usize>, activation: Activation) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidArchitecture(format!(
                "need at least 3 widths (l >= 2), got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArchitecture(
                "layer widths must be positive".into(),
            ));
        }
        Ok(Self { dims, activation })
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of layers `l`.
    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Width `d_j` for `j` in `0..=l`.
    pub fn width(&self, j: usize) -> usize {
        self.dims[j]
    }

    /// Shape `(d_j, d_{j-1})` of layer `j` in `1..=l`.
    pub fn layer_shape(&self, j: usize) -> (usize, usize) {
        (self.dims[j], self.dims[j - 1])
    }

    /// Total weight dimension `d = sum_j d_j d_{j-1}`.
    pub fn weight_dim(&self) -> usize {
        (1..=self.depth()).map(|j| self.dims[j] * self.dims[j - 1]).sum()
    }

    /// Offset of layer `j`'s block in the flat parameter vector.
    pub fn layer_offset(&self, j: usize) -> usize {
        (1..j).map(|k| self.dims[k] * self.dims[k - 1]).sum()
    }

    /// `max_j d_j d_{j-1}`, the width factor in the gradient rates.
    pub fn max_layer_product(&self) -> usize {
        (1..=self.depth())
            .map(|j| self.dims[j] * self.dims[j - 1])
            .max()
            .unwrap()
    }

    /// `c_d = max_{0<=j<=l} d_j`.
    pub fn max_width(&self) -> usize {
        *self.dims.iter().max().unwrap()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}:{}", dims.join(","), self.activation)
    }
}

impl FromStr for Architecture {
    type Err = Error;

    /// Parses the `"3,5,4:sigmoid"` form used in configs and CLI flags.
    fn from_str(s: &str) -> Result<Self> {
        let (dims_part, act_part) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArchitecture(format!("missing ':<activation>' in {s:?}")))?;
        let dims = dims_part
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArchitecture(format!("bad width {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let activation = match act_part.trim().to_ascii_lowercase().as_str() {
            "linear" => Activation::Linear,
            "sigmoid" => Activation::Sigmoid,
            other => {
                return Err(Error::InvalidArchitecture(format!(
                    "unknown activation {other:?}"
                )))
            }
        };
        Architecture::new(dims, activation)
    }
}

/// Per-layer weight matrices constrained to Frobenius balls of radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPoint {
    layers: Vec<DMatrix<f64>>,
    radius: f64,
}

/// Slack allowed on the ball constraint to absorb roundoff from projection.
const BALL_TOL: f64 = 1e-9;

impl WeightPoint {
    /// Wraps explicit layer matrices, verifying shapes against `arch` and the
    /// per-layer ball constraint.
    pub fn new(arch: &Architecture, layers: Vec<DMatrix<f64>>, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        if layers.len() != arch.depth() {
            return Err(Error::InvalidArchitecture(format!(
                "expected {} layers, got {}",
                arch.depth(),
                layers.len()
            )));
        }
        for (j, m) in layers.iter().enumerate() {
            let (rows, cols) = arch.layer_shape(j + 1);
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::ShapeMismatch {
                    layer: j + 1,
                    expected: format!("{rows}x{cols}"),
                    got: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            let norm = m.norm();
            if norm > radius * (1.0 + BALL_TOL) + BALL_TOL {
                return Err(Error::InvalidParameter(format!(
                    "layer {} norm {norm:.6e} outside ball of radius {radius:.6e}",
                    j + 1
                )));
            }
        }
        Ok(Self { layers, radius })
    }

    /// All-zero weights.
    pub fn zeros(arch: &Architecture, radius: f64) -> Result<Self> {
        let layers = (1..=arch.depth())
            .map(|j| {
                let (r, c) = arch.layer_shape(j);
                DMatrix::zeros(r, c)
            })
            .collect();
        Self::new(arch, layers, radius)
    }

    /// Rebuilds layer matrices from a flat vector (inverse of [`flatten`]).
    pub fn from_flat(arch: &Architecture, flat: &DVector<f64>, radius: f64) -> Result<Self> {
        if flat.len() != arch.weight_dim() {
            return Err(Error::ShapeMismatch {
                layer: 0,
                expected: format!("flat length {}", arch.weight_dim()),
                got: format!("{}", flat.len()),
            });
        }
        let mut layers = Vec::with_capacity(arch.depth());
        let mut off = 0;
        for j in 1..=arch.depth() {
            let (rows, cols) = arch.layer_shape(j);
            let block = flat.as_slice()[off..off + rows * cols].to_vec();
            layers.push(DMatrix::from_vec(rows, cols, block));
            off += rows * cols;
        }
        Self::new(arch, layers, radius)
    }

    /// Like [`from_flat`] but rescales each layer back into its ball first.
    pub fn from_flat_projected(
        arch: &Architecture,
        flat: &DVector<f64>,
        radius: f64,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(arch.depth());
        let mut off = 0;
        for j in 1..=arch.depth() {
            let (rows, cols) = arch.layer_shape(j);
            let block = flat.as_slice()[off..off + rows * cols].to_vec();
            let mut m = DMatrix::from_vec(rows, cols, block);
            let norm = m.norm();
            if norm > radius {
                m *= radius / norm;
            }
            layers.push(m);
            off += rows * cols;
        }
        Self::new(arch, layers, radius)
    }

    /// Uniform draw from the product of per-layer balls. Each layer picks a
    /// Gaussian direction and a radius `r * u^(1/k)` so the draw is uniform
    /// in the `k`-dimensional ball.
    pub fn random_in_ball<R: Rng + ?Sized>(
        arch: &Architecture,
        radius: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::random_shell(arch, radius, rng, false)
    }

    /// Draw with every layer exactly on its ball boundary.
    pub fn random_on_boundary<R: Rng + ?Sized>(
        arch: &Architecture,
        radius: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::random_shell(arch, radius, rng, true)
    }

    fn random_shell<R: Rng + ?Sized>(
        arch: &Architecture,
        radius: f64,
        rng: &mut R,
        boundary: bool,
    ) -> Result<Self> {
        use rand_distr::StandardNormal;
        let mut layers = Vec::with_capacity(arch.depth());
        for j in 1..=arch.depth() {
            let (rows, cols) = arch.layer_shape(j);
            let k = rows * cols;
            let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = m.norm();
            if norm == 0.0 {
                m[(0, 0)] = 1.0;
            }
            let scale = if boundary {
                radius / m.norm()
            } else {
                let u: f64 = rng.gen::<f64>();
                radius * u.powf(1.0 / k as f64) / m.norm()
            };
            m *= scale;
            layers.push(m);
        }
        Self::new(arch, layers, radius)
    }

    /// Layer matrix `W^(j)` for `j` in `1..=l`.
    pub fn layer(&self, j: usize) -> &DMatrix<f64> {
        &self.layers[j - 1]
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Column-major vectorization of each layer, concatenated in layer order.
    pub fn flatten(&self) -> DVector<f64> {
        let total: usize = self.layers.iter().map(|m| m.len()).sum();
        let mut out = Vec::with_capacity(total);
        for m in &self.layers {
            out.extend_from_slice(m.as_slice());
        }
        DVector::from_vec(out)
    }

    /// Euclidean distance between flat parameter vectors.
    pub fn distance(&self, other: &WeightPoint) -> f64 {
        (self.flatten() - other.flatten()).norm()
    }

    /// Largest per-layer norm relative to the radius (1.0 = on the boundary).
    pub fn max_shell(&self) -> f64 {
        self.layers
            .iter()
            .map(|m| m.norm() / self.radius)
            .fold(0.0, f64::max)
    }
}

/// Everything the forward pass produced for one sample.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activation: Activation,
    input: DVector<f64>,
    target: DVector<f64>,
    preacts: Vec<DVector<f64>>,
    acts: Vec<DVector<f64>>,
    error: DVector<f64>,
}

impl ForwardTrace {
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input(&self) -> &DVector<f64> {
        &self.input
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// Pre-activation `u^(j)` for `j` in `1..=l`.
    pub fn preact(&self, j: usize) -> &DVector<f64> {
        &self.preacts[j - 1]
    }

    /// Activation `v^(j)` for `j` in `0..=l`; `v^(0)` is the input.
    pub fn act(&self, j: usize) -> &DVector<f64> {
        if j == 0 {
            &self.input
        } else {
            &self.acts[j - 1]
        }
    }

    pub fn output(&self) -> &DVector<f64> {
        self.act(self.acts.len())
    }

    /// Output error `e = v^(l) - y`.
    pub fn error(&self) -> &DVector<f64> {
        &self.error
    }

    pub fn depth(&self) -> usize {
        self.preacts.len()
    }
}

/// Runs the network on one sample, recording per-layer state.
pub fn forward(
    arch: &Architecture,
    w: &WeightPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<ForwardTrace> {
    if x.len() != arch.input_dim() {
        return Err(Error::ShapeMismatch {
            layer: 0,
            expected: format!("input length {}", arch.input_dim()),
            got: format!("{}", x.len()),
        });
    }
    if y.len() != arch.output_dim() {
        return Err(Error::ShapeMismatch {
            layer: arch.depth(),
            expected: format!("target length {}", arch.output_dim()),
            got: format!("{}", y.len()),
        });
    }
    if w.depth() != arch.depth() {
        return Err(Error::InvalidArchitecture(format!(
            "weights have {} layers, architecture {}",
            w.depth(),
            arch.depth()
        )));
    }
    let l = arch.depth();
    let mut preacts = Vec::with_capacity(l);
    let mut acts = Vec::with_capacity(l);
    let mut v = x.clone();
    for j in 1..=l {
        let u = w.layer(j) * &v;
        v = match arch.activation() {
            Activation::Linear => u.clone(),
            Activation::Sigmoid => u.map(sigmoid),
        };
        preacts.push(u);
        acts.push(v.clone());
    }
    let error = &v - y;
    Ok(ForwardTrace {
        activation: arch.activation(),
        input: x.clone(),
        target: y.clone(),
        preacts,
        acts,
        error,
    })
}

/// Squared loss `f = 0.5 ||e||^2` of a trace.
pub fn loss(trace: &ForwardTrace) -> f64 {
    0.5 * trace.error().norm_squared()
}

/// Chain product of layer maps.
///
/// Linear activation: `B_{s:t} = W^(s) W^(s-1) ... W^(t)` for `s >= t`, and
/// the identity (of size `d_{t-1}`) when `s < t`. Sigmoid activation:
/// `B_{s:t} = A_s A_{s+1} ... A_t` with `A_i = (W^(i))^T G(u^(i))` for
/// `s <= t`, and the identity (of size `d_{s-1}`) when `s > t`. `G(u)` is the
/// diagonal matrix of sigmoid derivatives.
pub fn chain_product(
    trace: &ForwardTrace,
    w: &WeightPoint,
    s: usize,
    t: usize,
) -> Result<DMatrix<f64>> {
    let l = w.depth();
    let dims: Vec<usize> = std::iter::once(trace.input().len())
        .chain(trace.preacts.iter().map(|u| u.len()))
        .collect();
    match trace.activation() {
        Activation::Linear => {
            // Nonempty range needs s..=t inside 1..=l; empty range (s < t)
            // needs d_{t-1} to exist.
            if s >= t {
                if t < 1 || s > l {
                    return Err(Error::LayerIndexOutOfRange {
                        index: format!("B_{{{s}:{t}}}"),
                        valid: format!("1 <= t <= s <= {l}"),
                    });
                }
                let mut b = w.layer(t).clone();
                for j in (t + 1)..=s {
                    b = w.layer(j) * b;
                }
                Ok(b)
            } else {
                if t < 1 || t > l + 1 {
                    return Err(Error::LayerIndexOutOfRange {
                        index: format!("B_{{{s}:{t}}}"),
                        valid: format!("empty range needs 1 <= t <= {}", l + 1),
                    });
                }
                Ok(DMatrix::identity(dims[t - 1], dims[t - 1]))
            }
        }
        Activation::Sigmoid => {
            if s <= t {
                if s < 1 || t > l {
                    return Err(Error::LayerIndexOutOfRange {
                        index: format!("B_{{{s}:{t}}}"),
                        valid: format!("1 <= s <= t <= {l}"),
                    });
                }
                let mut b = sigmoid_layer_map(trace, w, s);
                for i in (s + 1)..=t {
                    b = b * sigmoid_layer_map(trace, w, i);
                }
                Ok(b)
            } else {
                if s < 1 || s > l + 1 {
                    return Err(Error::LayerIndexOutOfRange {
                        index: format!("B_{{{s}:{t}}}"),
                        valid: format!("empty range needs 1 <= s <= {}", l + 1),
                    });
                }
                Ok(DMatrix::identity(dims[s - 1], dims[s - 1]))
            }
        }
    }
}

/// Sigmoid derivative entries `sigma(u)(1 - sigma(u))` of layer `j`,
/// computed from the stored activations.
pub fn sigmoid_derivative(trace: &ForwardTrace, j: usize) -> DVector<f64> {
    trace.act(j).map(|v| v * (1.0 - v))
}

/// `A_i = (W^(i))^T G(u^(i))`: columns of `W^T` scaled by the derivative.
fn sigmoid_layer_map(trace: &ForwardTrace, w: &WeightPoint, i: usize) -> DMatrix<f64> {
    let g = sigmoid_derivative(trace, i);
    let mut a = w.layer(i).transpose();
    for (c, gi) in g.iter().enumerate() {
        a.column_mut(c).scale_mut(*gi);
    }
    a
}
