//! Seeded input sampling, teacher-network targets and reproducible datasets.
//!
//! Two input laws are supported: Rademacher entries of magnitude `tau`
//! (bounded sub-Gaussian with `||x||_2 = tau sqrt(d_0)` exactly, so the
//! magnitude bound `r_x` and second moment `tau^2 I` are exact) and i.i.d.
//! Gaussian entries `N(0, tau^2)`. Targets come from a fixed teacher
//! network, optionally with Gaussian output noise. A dataset regenerates
//! bit-identically from its provenance.

use crate::error::{Error, Result};
use crate::model::{forward, Architecture, WeightPoint};
use crate::rng::{stream, tag};
use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Input distribution kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Rademacher entries `+-tau`; bounded with `r_x = tau sqrt(d_0)`.
    BoundedSubGaussian,
    /// Entries i.i.d. `N(0, tau^2)`.
    IidGaussian,
}

/// Input sampler: law, scale, dimension and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub tau: f64,
    pub input_dim: usize,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, tau: f64, input_dim: usize, seed: u64) -> Self {
        Self {
            kind,
            tau,
            input_dim,
            seed,
        }
    }

    /// Exact magnitude bound for the bounded law; none for Gaussian inputs.
    pub fn r_x(&self) -> Option<f64> {
        match self.kind {
            SamplerKind::BoundedSubGaussian => Some(self.tau * (self.input_dim as f64).sqrt()),
            SamplerKind::IidGaussian => None,
        }
    }

    /// Sampler identical to `self` except for the seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Draws `n` inputs as columns of a `d_0 x n` matrix. Deterministic in the
/// sampler seed.
pub fn sample_inputs(spec: &SamplerSpec, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if spec.tau <= 0.0 {
        return Err(Error::InvalidParameter("tau must be positive".into()));
    }
    let mut rng = stream(spec.seed, &[tag::INPUTS]);
    let d0 = spec.input_dim;
    let mut m = DMatrix::zeros(d0, n);
    for i in 0..n {
        for r in 0..d0 {
            m[(r, i)] = match spec.kind {
                SamplerKind::BoundedSubGaussian => {
                    if rng.gen::<bool>() {
                        spec.tau
                    } else {
                        -spec.tau
                    }
                }
                SamplerKind::IidGaussian => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    spec.tau * z
                }
            };
        }
    }
    Ok(m)
}

/// A fixed data-generating network.
#[derive(Debug, Clone)]
pub struct Teacher {
    pub arch: Architecture,
    pub weights: WeightPoint,
    /// Standard deviation of additive Gaussian target noise (0 = noiseless).
    pub noise: f64,
}

impl Teacher {
    pub fn new(arch: Architecture, weights: WeightPoint) -> Self {
        Self {
            arch,
            weights,
            noise: 0.0,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    /// Random teacher with weights drawn in the per-layer balls.
    pub fn random(arch: Architecture, radius: f64, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, &[tag::WEIGHTS]);
        let weights = WeightPoint::random_in_ball(&arch, radius, &mut rng)?;
        Ok(Self::new(arch, weights))
    }

    /// For a linear teacher, the end-to-end map `T = B_{l:1}`.
    pub fn linear_map(&self) -> Result<DMatrix<f64>> {
        if self.arch.activation() != crate::model::Activation::Linear {
            return Err(Error::OracleMismatch(
                "end-to-end map only defined for linear teachers".into(),
            ));
        }
        let mut t = self.weights.layer(1).clone();
        for j in 2..=self.arch.depth() {
            t = self.weights.layer(j) * t;
        }
        Ok(t)
    }
}

/// Noiseless teacher outputs for a batch of inputs (columns).
pub fn teacher_targets(teacher: &Teacher, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if inputs.nrows() != teacher.arch.input_dim() {
        return Err(Error::ShapeMismatch {
            layer: 0,
            expected: format!("input dim {}", teacher.arch.input_dim()),
            got: format!("{}", inputs.nrows()),
        });
    }
    let d_l = teacher.arch.output_dim();
    let n = inputs.ncols();
    let zero_target = DVector::zeros(d_l);
    let mut targets = DMatrix::zeros(d_l, n);
    for i in 0..n {
        let x = inputs.column(i).into_owned();
        let trace = forward(&teacher.arch, &teacher.weights, &x, &zero_target)?;
        targets.set_column(i, trace.output());
    }
    Ok(targets)
}

/// Provenance that fully determines a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: SamplerSpec,
    pub teacher_arch: String,
    pub teacher_radius: f64,
    pub teacher_seed: u64,
    pub noise: f64,
    pub n: usize,
}

/// Inputs and targets as column-sample matrices plus provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Generates a dataset from a sampler and teacher. The target noise
    /// stream is derived from the sampler seed, so the tuple
    /// `(sampler, teacher, n)` reproduces the data bit-identically.
    pub fn generate(
        sampler: &SamplerSpec,
        teacher: &Teacher,
        teacher_seed: u64,
        n: usize,
    ) -> Result<Self> {
        let inputs = sample_inputs(sampler, n)?;
        let mut targets = teacher_targets(teacher, &inputs)?;
        if teacher.noise > 0.0 {
            let mut rng = stream(sampler.seed, &[tag::NOISE]);
            for i in 0..n {
                for r in 0..targets.nrows() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    targets[(r, i)] += teacher.noise * z;
                }
            }
        }
        Ok(Self {
            inputs,
            targets,
            provenance: Provenance {
                sampler: sampler.clone(),
                teacher_arch: teacher.arch.to_string(),
                teacher_radius: teacher.weights.radius(),
                teacher_seed,
                noise: teacher.noise,
                n,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, i: usize) -> DVectorView<'_, f64> {
        self.inputs.column(i)
    }

    pub fn target(&self, i: usize) -> DVectorView<'_, f64> {
        self.targets.column(i)
    }

    /// Dataset containing all samples except `skip`.
    pub fn leave_one_out(&self, skip: usize) -> Dataset {
        let n = self.len();
        let mut inputs = DMatrix::zeros(self.inputs.nrows(), n - 1);
        let mut targets = DMatrix::zeros(self.targets.nrows(), n - 1);
        let mut k = 0;
        for i in 0..n {
            if i == skip {
                continue;
            }
            inputs.set_column(k, &self.inputs.column(i));
            targets.set_column(k, &self.targets.column(i));
            k += 1;
        }
        let mut provenance = self.provenance.clone();
        provenance.n = n - 1;
        Dataset {
            inputs,
            targets,
            provenance,
        }
    }

    /// Dataset with sample `index` replaced by `(x, y)`.
    pub fn with_replaced(&self, index: usize, x: &DVector<f64>, y: &DVector<f64>) -> Dataset {
        let mut out = self.clone();
        out.inputs.set_column(index, x);
        out.targets.set_column(index, y);
        out
    }

    fn sidecar_path(path: &Path) -> std::path::PathBuf {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".json");
        path.with_file_name(name)
    }

    /// Writes the flat binary format: magic `LPD1`, then little-endian
    /// `u32 d_0`, `u32 d_l`, `u64 n`, `u64 seed`, then `n * d_0` input
    /// doubles (sample-major) and `n * d_l` target doubles. A JSON sidecar
    /// `<file>.json` carries the provenance.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(b"LPD1")?;
        let d0 = self.inputs.nrows() as u32;
        let dl = self.targets.nrows() as u32;
        file.write_all(&d0.to_le_bytes())?;
        file.write_all(&dl.to_le_bytes())?;
        file.write_all(&(self.len() as u64).to_le_bytes())?;
        file.write_all(&self.provenance.sampler.seed.to_le_bytes())?;
        for i in 0..self.len() {
            for r in 0..self.inputs.nrows() {
                file.write_all(&self.inputs[(r, i)].to_le_bytes())?;
            }
        }
        for i in 0..self.len() {
            for r in 0..self.targets.nrows() {
                file.write_all(&self.targets[(r, i)].to_le_bytes())?;
            }
        }
        let json = serde_json::to_string_pretty(&self.provenance)?;
        std::fs::write(Self::sidecar_path(path), json)?;
        Ok(())
    }

    /// Reads the binary format written by [`Dataset::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)?;
        if &magic != b"LPD1" {
            return Err(Error::CorruptFile(format!(
                "bad magic {:?} in {}",
                magic,
                path.display()
            )));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        file.read_exact(&mut u32buf)?;
        let d0 = u32::from_le_bytes(u32buf) as usize;
        file.read_exact(&mut u32buf)?;
        let dl = u32::from_le_bytes(u32buf) as usize;
        file.read_exact(&mut u64buf)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        file.read_exact(&mut u64buf)?;
        let seed = u64::from_le_bytes(u64buf);
        let mut read_matrix = |rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(rows, cols);
            let mut fbuf = [0u8; 8];
            for i in 0..cols {
                for r in 0..rows {
                    file.read_exact(&mut fbuf)?;
                    m[(r, i)] = f64::from_le_bytes(fbuf);
                }
            }
            Ok(m)
        };
        let inputs = read_matrix(d0, n)?;
        let targets = read_matrix(dl, n)?;
        let provenance: Provenance = match std::fs::read_to_string(Self::sidecar_path(path)) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => Provenance {
                sampler: SamplerSpec::new(SamplerKind::IidGaussian, 1.0, d0, seed),
                teacher_arch: String::new(),
                teacher_radius: 0.0,
                teacher_seed: 0,
                noise: 0.0,
                n,
            },
        };
        Ok(Self {
            inputs,
            targets,
            provenance,
        })
    }

    /// Plain CSV: `x_0,..,x_{d0-1},y_0,..,y_{dl-1}` per row.
    pub fn to_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let d0 = self.inputs.nrows();
        let dl = self.targets.nrows();
        let header: Vec<String> = (0..d0)
            .map(|i| format!("x{i}"))
            .chain((0..dl).map(|i| format!("y{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = (0..d0)
                .map(|r| format!("{}", self.inputs[(r, i)]))
                .chain((0..dl).map(|r| format!("{}", self.targets[(r, i)])))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
