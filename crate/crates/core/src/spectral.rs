//! Sine eigenbasis of the Dirichlet Laplacian on `(0, 1)`.
//!
//! Every state is a coefficient sequence in the orthonormal basis
//! `e_k(x) = √2 sin(kπx)`, `k = 1, 2, ...`, with `A e_k = -π²k² e_k`.
//! Index `0` of a coefficient slice always holds the coefficient of `e_1`.
//!
//! Physical-space work (the Burgers product, `sin(x)` in the diffusion) goes
//! through [`SineGrid`], a tabulated discrete sine transform on the interior
//! points `x_m = m / (M + 1)`, `m = 1..=M`. The pair is exact: for modes
//! `k, l <= M` the discrete orthogonality
//! `Σ_m 2 sin(kπx_m) sin(lπx_m) = (M + 1) δ_kl` holds, so analysis inverts
//! synthesis to rounding.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("non-finite coefficient at mode {mode}")]
    NonFinite { mode: usize },
    #[error("non-finite grid value at point {point}")]
    NonFiniteGrid { point: usize },
    #[error("grid must have at least one interior point")]
    EmptyGrid,
    #[error("grid of {points} points cannot resolve {modes} modes")]
    GridTooCoarse { points: usize, modes: usize },
    #[error("spectral dimension must be positive")]
    ZeroModes,
}

/// Coefficients `a_1..a_M` of an element of `H = L²(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
}

impl SpectralVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if let Some(mode) = coeffs.iter().position(|a| !a.is_finite()) {
            return Err(SpectralError::NonFinite { mode: mode + 1 });
        }
        Ok(Self { coeffs })
    }

    /// Skips the finiteness check. Used where overflow is an expected,
    /// recorded outcome (the untamed scheme).
    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![0.0; len],
        }
    }

    /// The basis vector `e_mode` padded to `len` coefficients.
    pub fn basis(mode: usize, len: usize) -> Self {
        assert!(mode >= 1 && mode <= len, "mode {mode} outside 1..={len}");
        let mut v = Self::zeros(len);
        v.coeffs[mode - 1] = 1.0;
        v
    }

    /// Marker for a state that has left the representable range.
    pub(crate) fn saturated(len: usize) -> Self {
        Self {
            coeffs: vec![f64::INFINITY; len],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite())
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    /// `‖v‖_H`, by Parseval.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `⟨v, w⟩_H`; missing coefficients count as zero.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `‖(-A)^r v‖_H`.
    pub fn sobolev_norm(&self, r: f64) -> f64 {
        sobolev_norm(self, r)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| s * a).collect(),
        }
    }

    /// `self + s * other`, padded to the longer length.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        let len = self.len().max(other.len());
        let mut out = self.coeffs.clone();
        out.resize(len, 0.0);
        for (o, b) in out.iter_mut().zip(&other.coeffs) {
            *o += s * b;
        }
        Self { coeffs: out }
    }

    /// `A v`, coefficient-wise.
    pub fn apply_laplacian(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| -eigen_magnitude(i + 1) * a)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let len = self.len().max(other.len());
        (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl Add for &SpectralVector {
    type Output = SpectralVector;

    fn add(self, rhs: Self) -> SpectralVector {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &SpectralVector {
    type Output = SpectralVector;

    fn sub(self, rhs: Self) -> SpectralVector {
        self.add_scaled(-1.0, rhs)
    }
}

/// `π²k²`, the magnitude of the k-th Dirichlet eigenvalue.
#[inline]
pub fn eigen_magnitude(k: usize) -> f64 {
    let k = k as f64;
    PI * PI * k * k
}

/// Eigenvalues of the Galerkin operator `A_N`: `λ_{k∧N} = -π²(k∧N)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorSpectrum {
    dim: usize,
}

impl OperatorSpectrum {
    pub fn new(dim: usize) -> Result<Self, SpectralError> {
        if dim == 0 {
            return Err(SpectralError::ZeroModes);
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `λ_{k∧N}` for the 1-based mode `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        -eigen_magnitude(k.min(self.dim))
    }

    /// Eigenvalues of modes `1..=len`.
    pub fn eigenvalues(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|k| self.eigenvalue(k)).collect()
    }
}

/// `P_N v`: keep the first `n` coefficients, zero-padding when `v` is shorter.
pub fn project(v: &SpectralVector, n: usize) -> SpectralVector {
    let mut coeffs: Vec<f64> = v.coeffs.iter().take(n).copied().collect();
    coeffs.resize(n, 0.0);
    SpectralVector { coeffs }
}

/// `‖v‖_{H_r} = (Σ_k (π²k²)^{2r} a_k²)^{1/2}`.
pub fn sobolev_norm(v: &SpectralVector, r: f64) -> f64 {
    if r == 0.0 {
        return v.norm();
    }
    v.coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| eigen_magnitude(i + 1).powf(2.0 * r) * a * a)
        .sum::<f64>()
        .sqrt()
}

/// `e^{t A_N} v`, coefficient-wise.
pub fn semigroup_apply(v: &SpectralVector, t: f64, spec: &OperatorSpectrum) -> SpectralVector {
    assert!(t >= 0.0, "semigroup time must be nonnegative, got {t}");
    SpectralVector {
        coeffs: v
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| (spec.eigenvalue(i + 1) * t).exp() * a)
            .collect(),
    }
}

/// Samples on the interior points `x_m = m / (M + 1)`, `m = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.is_empty() {
            return Err(SpectralError::EmptyGrid);
        }
        if let Some(point) = values.iter().position(|g| !g.is_finite()) {
            return Err(SpectralError::NonFiniteGrid { point: point + 1 });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interior point coordinates.
    pub fn points(&self) -> Vec<f64> {
        let h = 1.0 / (self.values.len() + 1) as f64;
        (1..=self.values.len()).map(|m| m as f64 * h).collect()
    }

    /// `((M + 1)^{-1} Σ_m g_m²)^{1/2}`, which equals `‖v‖_H` for `g = to_grid(v, M)`.
    pub fn discrete_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|g| g * g).sum();
        (s / (self.values.len() + 1) as f64).sqrt()
    }
}

/// Smallest power of two `M` with `M >= 3N/2 + 1`. On such a grid the sine
/// modes `N < k <= 2N` produced by a quadratic product alias only onto modes
/// above `N`, so the projected product is exact.
pub fn dealiased_points(modes: usize) -> usize {
    let min = (3 * modes + 3) / 2;
    min.max(1).next_power_of_two()
}

/// Tabulated sine/cosine synthesis and sine analysis for a fixed
/// `(modes, points)` pair.
#[derive(Debug, Clone)]
pub struct SineGrid {
    modes: usize,
    points: usize,
    // sin[m * modes + k] = √2 sin((k+1)π x_m)
    sin: Vec<f64>,
    // cos[m * modes + k] = √2 (k+1)π cos((k+1)π x_m)
    dcos: Vec<f64>,
}

impl SineGrid {
    pub fn new(modes: usize, points: usize) -> Result<Self, SpectralError> {
        if points == 0 {
            return Err(SpectralError::EmptyGrid);
        }
        if modes > points {
            return Err(SpectralError::GridTooCoarse { points, modes });
        }
        let h = PI / (points + 1) as f64;
        let mut sin = Vec::with_capacity(points * modes);
        let mut dcos = Vec::with_capacity(points * modes);
        for m in 1..=points {
            for k in 1..=modes {
                let phase = (k * m) as f64 * h;
                sin.push(SQRT_2 * phase.sin());
                dcos.push(SQRT_2 * PI * k as f64 * phase.cos());
            }
        }
        Ok(Self {
            modes,
            points,
            sin,
            dcos,
        })
    }

    /// Grid wide enough for an exact quadratic product of `modes` modes.
    pub fn dealiased(modes: usize) -> Result<Self, SpectralError> {
        if modes == 0 {
            return Err(SpectralError::ZeroModes);
        }
        Self::new(modes, dealiased_points(modes))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `g_m = Σ_k a_k √2 sin(kπx_m)`; coefficients beyond `modes` are ignored.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.combine(&self.sin, coeffs)
    }

    /// Grid values of the derivative `Σ_k a_k √2 kπ cos(kπx)`.
    pub fn synthesize_derivative(&self, coeffs: &[f64]) -> Vec<f64> {
        self.combine(&self.dcos, coeffs)
    }

    fn combine(&self, table: &[f64], coeffs: &[f64]) -> Vec<f64> {
        let used = coeffs.len().min(self.modes);
        table
            .chunks_exact(self.modes)
            .map(|row| row[..used].iter().zip(coeffs).map(|(t, a)| t * a).sum())
            .collect()
    }

    /// First `modes` sine coefficients `a_k = (M+1)^{-1} Σ_m g_m √2 sin(kπx_m)`.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.points);
        let mut out = vec![0.0; self.modes];
        for (row, g) in self.sin.chunks_exact(self.modes).zip(values) {
            for (o, t) in out.iter_mut().zip(row) {
                *o += t * g;
            }
        }
        let scale = 1.0 / (self.points + 1) as f64;
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }
}

/// Evaluate `v` on `points` interior grid points.
pub fn to_grid(v: &SpectralVector, points: usize) -> Result<GridFunction, SpectralError> {
    let grid = SineGrid::new(v.len(), points)?;
    Ok(GridFunction {
        values: grid.synthesize(&v.coeffs),
    })
}

/// Inverse of [`to_grid`]: all `M` sine coefficients resolved by the grid.
pub fn from_grid(g: &GridFunction) -> SpectralVector {
    let grid = SineGrid::new(g.len(), g.len()).expect("grid is non-empty by construction");
    SpectralVector {
        coeffs: grid.analyze(&g.values),
    }
}

/// Pseudospectral evaluator of `F_N(v) = P_N(-c (P_N v)(P_N v)')`.
#[derive(Debug, Clone)]
pub struct BurgersNonlinearity {
    grid: SineGrid,
    c: f64,
}

impl BurgersNonlinearity {
    pub fn new(c: f64, modes: usize) -> Result<Self, SpectralError> {
        Ok(Self {
            grid: SineGrid::dealiased(modes)?,
            c,
        })
    }

    pub fn modes(&self) -> usize {
        self.grid.modes
    }

    pub fn eval(&self, v: &SpectralVector) -> SpectralVector {
        let n = self.grid.modes;
        if self.c == 0.0 {
            return SpectralVector::zeros(n);
        }
        let coeffs = &v.coeffs[..v.len().min(n)];
        let u = self.grid.synthesize(coeffs);
        let du = self.grid.synthesize_derivative(coeffs);
        let product: Vec<f64> = u.iter().zip(&du).map(|(a, b)| -self.c * a * b).collect();
        SpectralVector {
            coeffs: self.grid.analyze(&product),
        }
    }
}

/// `F_N(v)` with `F(x) = -c x x'`. A positive `c` with the opposite sign
/// reproduces the `F(x) = c x x'` convention.
pub fn burgers_nonlinearity(v: &SpectralVector, c: f64, n: usize) -> SpectralVector {
    BurgersNonlinearity::new(c, n).expect("n >= 1").eval(v)
}
