//! Trace-class noise `Q e_j = q_j e_j`, the multiplicative diffusion
//! `B(x) = sin(x) Q` in Galerkin form, and one-step samplers of the
//! stochastic convolution `∫ e^{(h-s)A_N} B dW_s` with `B` frozen.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::{stream, StreamPurpose};
use crate::spectral::{dealiased_points, OperatorSpectrum, SineGrid, SpectralVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("noise weights must be finite and nonnegative (mode {mode})")]
    BadWeight { mode: usize },
    #[error("diffusion operator must be a finite square matrix")]
    BadOperator,
    #[error("step length must be finite and positive, got {0}")]
    BadStep(f64),
    #[error("covariance is not positive semidefinite beyond jitter tolerance")]
    NotPositiveSemidefinite,
    #[error("step {step} is not an integer multiple of the master step {master}")]
    StepMismatch { step: f64, master: f64 },
    #[error("step index {index} exceeds the Brownian grid")]
    StepOutOfRange { index: usize },
    #[error("Brownian grid carries {grid} modes, operator needs {needed}")]
    TooFewModes { grid: usize, needed: usize },
    #[error("Brownian grid needs modes >= 1, steps >= 1 and horizon > 0")]
    BadGrid,
}

/// Eigenvalues `q_j` of the covariance operator `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QSpectrum {
    weights: Vec<f64>,
}

impl QSpectrum {
    pub fn new(weights: Vec<f64>) -> Result<Self, NoiseError> {
        if let Some(j) = weights.iter().position(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(NoiseError::BadWeight { mode: j + 1 });
        }
        Ok(Self { weights })
    }

    /// `q_j = amplitude · j^{-ρ}` for `j = 1..=modes`.
    pub fn power_law(rho: f64, modes: usize, amplitude: f64) -> Result<Self, NoiseError> {
        Self::new(
            (1..=modes)
                .map(|j| amplitude * (j as f64).powf(-rho))
                .collect(),
        )
    }

    pub fn zero(modes: usize) -> Self {
        Self {
            weights: vec![0.0; modes],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `q_j` for the 1-based mode `j`; zero past the stored modes.
    pub fn weight(&self, j: usize) -> f64 {
        self.weights.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn trace(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&q| q == 0.0)
    }

    /// `η = (Σ q_j²)^{1/2}`, the uniform bound on `‖B(x)‖_HS`.
    pub fn eta(&self) -> f64 {
        self.weights.iter().map(|q| q * q).sum::<f64>().sqrt()
    }

    /// Lipschitz constant of `x ↦ B_N(x)` in Hilbert–Schmidt norm.
    ///
    /// `‖e_j‖_∞ = √2`, so `‖(sin x - sin y) e_j‖_H <= √2 ‖x - y‖_H` and the
    /// constant is `√2 η`. It is sharp: for small `x - y` concentrated on
    /// `e_1` the ratio approaches `(η² + q_1²/2)^{1/2} > η`.
    pub fn lipschitz(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.eta()
    }
}

/// Matrix `b_ij = ⟨e_i, B_N(x) e_j⟩_H` for a frozen state `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    matrix: DMatrix<f64>,
}

impl DiffusionOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, NoiseError> {
        if !matrix.is_square() || matrix.iter().any(|v| !v.is_finite()) {
            return Err(NoiseError::BadOperator);
        }
        Ok(Self { matrix })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Column `j` (0-based), the image of `e_{j+1}`.
    pub fn column(&self, j: usize) -> SpectralVector {
        SpectralVector::from_vec_unchecked(self.matrix.column(j).iter().copied().collect())
    }

    pub fn hs_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|v| v.is_finite())
    }

    /// `b w` for a coefficient slice `w` of length `dim`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (col, &wj) in self.matrix.as_slice().chunks_exact(n).zip(w) {
            if wj != 0.0 {
                for (o, c) in out.iter_mut().zip(col) {
                    *o += c * wj;
                }
            }
        }
        out
    }

    /// `b* v`.
    pub fn adjoint_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        self.matrix
            .as_slice()
            .chunks_exact(n)
            .map(|col| col.iter().zip(v).map(|(c, x)| c * x).sum())
            .collect()
    }
}

/// Smallest grid used to assemble `B_N`.
pub const DIFFUSION_MIN_POINTS: usize = 64;

/// Grid size used by [`DiffusionAssembler`] for `modes` modes.
pub fn diffusion_points(modes: usize) -> usize {
    dealiased_points(modes).max(DIFFUSION_MIN_POINTS)
}

/// Cached quadrature for `B_N(x) = P_N sin(P_N x) Q P_N`.
///
/// On the grid `x_m = m/(M+1)` the sine analysis of `sin(x) · q_j e_j` reduces,
/// by `2 sin a sin b = cos(a - b) - cos(a + b)`, to
/// `b_ij = q_j (d_{|i-j|} - d_{i+j})` with
/// `d_r = (M+1)^{-1} Σ_m sin(x(x_m)) cos(rπx_m)`. This is identical to the
/// grid-transform definition and costs one cosine sum per `r <= 2N`.
///
/// The odd extension of `sin(x) e_j` is only `C³` at the boundary, so the
/// transform error decays like `M^{-4}`; the grid is the dealiased one but
/// never coarser than [`DIFFUSION_MIN_POINTS`].
#[derive(Debug, Clone)]
pub struct DiffusionAssembler {
    grid: SineGrid,
    // cos[r * points + m] = cos(rπ x_m), r = 0..=2N
    cos: Vec<f64>,
}

impl DiffusionAssembler {
    pub fn new(modes: usize) -> Self {
        assert!(modes >= 1, "diffusion needs at least one mode");
        let points = diffusion_points(modes);
        let grid = SineGrid::new(modes, points).expect("grid resolves its modes");
        let h = PI / (points + 1) as f64;
        let mut cos = Vec::with_capacity((2 * modes + 1) * points);
        for r in 0..=2 * modes {
            for m in 1..=points {
                cos.push(((r * m) as f64 * h).cos());
            }
        }
        Self { grid, cos }
    }

    pub fn modes(&self) -> usize {
        self.grid.modes()
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }

    pub fn assemble(&self, x: &SpectralVector, q: &QSpectrum) -> DiffusionOperator {
        let n = self.modes();
        let points = self.points();
        let sin_x: Vec<f64> = self
            .grid
            .synthesize(x.coeffs())
            .into_iter()
            .map(f64::sin)
            .collect();
        let scale = 1.0 / (points + 1) as f64;
        let d: Vec<f64> = self
            .cos
            .chunks_exact(points)
            .map(|row| scale * row.iter().zip(&sin_x).map(|(c, s)| c * s).sum::<f64>())
            .collect();
        let mut matrix = DMatrix::zeros(n, n);
        for j in 1..=n {
            let qj = q.weight(j);
            if qj == 0.0 {
                continue;
            }
            for i in 1..=n {
                matrix[(i - 1, j - 1)] = qj * (d[i.abs_diff(j)] - d[i + j]);
            }
        }
        DiffusionOperator { matrix }
    }
}

/// `B_N(x)` with `B(x) = sin(x) Q`.
pub fn diffusion_assemble(x: &SpectralVector, q: &QSpectrum, n: usize) -> DiffusionOperator {
    DiffusionAssembler::new(n).assemble(x, q)
}

fn check_step(h: f64) -> Result<(), NoiseError> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(NoiseError::BadStep(h))
    }
}

/// `(e^{s h} - 1) / s`, continuous at `s = 0`.
fn phi(s: f64, h: f64) -> f64 {
    if s == 0.0 {
        h
    } else {
        (s * h).exp_m1() / s
    }
}

/// Covariance of `∫_0^h e^{(h-s)A_N} b dW_s`:
/// `C_{ii'} = (b bᵀ)_{ii'} (e^{(λ_i+λ_i')h} - 1)/(λ_i + λ_i')`.
pub fn conv_covariance(
    b: &DiffusionOperator,
    h: f64,
    spec: &OperatorSpectrum,
) -> Result<DMatrix<f64>, NoiseError> {
    check_step(h)?;
    if !b.is_finite() {
        return Err(NoiseError::BadOperator);
    }
    let n = b.dim();
    let lambda = spec.eigenvalues(n);
    let gram = &b.matrix * b.matrix.transpose();
    Ok(DMatrix::from_fn(n, n, |i, k| {
        gram[(i, k)] * phi(lambda[i] + lambda[k], h)
    }))
}

const JITTER_ESCALATIONS: usize = 3;

/// Lower factor `L` with `L Lᵀ ≈ C`, adding `1e-14 · tr(C)/N` (then ×10, ×100)
/// to the diagonal when the plain factorization fails on rounding.
pub(crate) fn covariance_factor(c: &DMatrix<f64>) -> Result<DMatrix<f64>, NoiseError> {
    let n = c.nrows();
    let trace = c.trace();
    if trace == 0.0 && c.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(n, n));
    }
    if let Some(ch) = Cholesky::new(c.clone()) {
        return Ok(ch.unpack());
    }
    let mut jitter = 1e-14 * trace.abs() / n as f64;
    for _ in 0..JITTER_ESCALATIONS {
        let mut shifted = c.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok(ch.unpack());
        }
        jitter *= 10.0;
    }
    Err(NoiseError::NotPositiveSemidefinite)
}

/// One exact draw of the frozen-coefficient stochastic convolution.
pub fn conv_sample_exact<R: Rng + ?Sized>(
    b: &DiffusionOperator,
    h: f64,
    spec: &OperatorSpectrum,
    rng: &mut R,
) -> Result<SpectralVector, NoiseError> {
    let c = conv_covariance(b, h, spec)?;
    let l = covariance_factor(&c)?;
    let xi = DVector::from_iterator(b.dim(), (0..b.dim()).map(|_| rng.sample(StandardNormal)));
    Ok(SpectralVector::from_vec_unchecked(
        (l * xi).as_slice().to_vec(),
    ))
}

/// Gaussian increments `ΔW_{j,m} ~ N(0, δ)` on a uniform master grid.
///
/// Mode `j` draws from its own stream, so a grid with more modes agrees with
/// a smaller one on their common modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    modes: usize,
    steps: usize,
    horizon: f64,
    // increments[m * modes + j]
    increments: Vec<f64>,
}

impl BrownianGrid {
    pub fn generate(
        seed: u64,
        id: u64,
        modes: usize,
        steps: usize,
        horizon: f64,
    ) -> Result<Self, NoiseError> {
        if modes == 0 || steps == 0 || !(horizon.is_finite() && horizon > 0.0) {
            return Err(NoiseError::BadGrid);
        }
        let sd = (horizon / steps as f64).sqrt();
        let mut increments = vec![0.0; modes * steps];
        for j in 0..modes {
            let mut rng = stream(seed, StreamPurpose::BrownianGrid, id, j as u64);
            for m in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                increments[m * modes + j] = sd * z;
            }
        }
        Ok(Self {
            modes,
            steps,
            horizon,
            increments,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Master step `δ = T / n_master`.
    pub fn master_step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Increments of all modes over master step `m` (0-based).
    pub fn increment(&self, m: usize) -> &[f64] {
        &self.increments[m * self.modes..(m + 1) * self.modes]
    }

    /// Number of master steps per step of length `h`.
    pub fn substeps(&self, h: f64) -> Result<usize, NoiseError> {
        check_step(h)?;
        let ratio = h / self.master_step();
        let r = ratio.round();
        if r < 1.0 || (ratio - r).abs() > 1e-9 * r {
            return Err(NoiseError::StepMismatch {
                step: h,
                master: self.master_step(),
            });
        }
        Ok(r as usize)
    }
}

/// `Σ_m e^{(t_{k+1} - s_m)A_N} b ΔW_m` over the master steps `m` inside
/// coarse step `k`, with `s_m` the left endpoint of master step `m`.
pub fn conv_sample_on_grid(
    b: &DiffusionOperator,
    k: usize,
    h: f64,
    grid: &BrownianGrid,
    spec: &OperatorSpectrum,
) -> Result<SpectralVector, NoiseError> {
    let r = grid.substeps(h)?;
    let n = b.dim();
    if grid.modes() < n {
        return Err(NoiseError::TooFewModes {
            grid: grid.modes(),
            needed: n,
        });
    }
    if (k + 1) * r > grid.steps() {
        return Err(NoiseError::StepOutOfRange { index: k });
    }
    let delta = grid.master_step();
    let decay: Vec<f64> = spec
        .eigenvalues(n)
        .into_iter()
        .map(|l| (l * delta).exp())
        .collect();
    let mut acc = vec![0.0; n];
    for m in k * r..(k + 1) * r {
        let w = b.apply(&grid.increment(m)[..n]);
        for ((a, wi), d) in acc.iter_mut().zip(w).zip(&decay) {
            *a = d * (*a + wi);
        }
    }
    Ok(SpectralVector::from_vec_unchecked(acc))
}
