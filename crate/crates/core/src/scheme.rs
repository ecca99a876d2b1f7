//! Tamed exponential Euler time stepping.
//!
//! One step of length `h = T/n` from `Y = Y_{t_k}`:
//!
//! ```text
//! Y_{t_{k+1}} = e^{hA_N} Y + 1_{D_n}(Y) ∫_0^h e^{(h-s)A_N} F_N(Y) ds
//!                         + 1_{D_n}(Y) Πⁿ(∫_0^h e^{(h-s)A_N} B_N(Y) dW_s)
//! ```
//!
//! The linear part is applied exactly, so with `F = 0` and `B = 0` the
//! scheme reproduces the heat semigroup at any step size. The untamed
//! variant drops both the indicator and `Πⁿ` and exists to show what the
//! safeguards prevent.

use std::f64::consts::PI;

use thiserror::Error;

use crate::noise::{
    conv_sample_exact, conv_sample_on_grid, BrownianGrid, DiffusionAssembler, DiffusionOperator,
    NoiseError, QSpectrum,
};
use crate::rng::{stream, StreamPurpose};
use crate::spectral::{
    project, BurgersNonlinearity, OperatorSpectrum, SpectralError, SpectralVector,
};
use crate::taming::{tame, TamingDomainParams, TamingError, TamingProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Taming(#[from] TamingError),
}

/// How the per-step stochastic convolution is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    /// Exact Gaussian law via a Cholesky factor of the one-step covariance.
    Exact,
    /// Quadrature on shared Brownian increments with `master_steps` substeps
    /// over the horizon.
    Grid { master_steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Tamed,
    Untamed,
}

/// `ξ = Z^{-1} Σ_{k<=modes} k^{-3} e_k` with `Z = (π⁶/90)^{1/2}`, so the full
/// series has `‖ξ‖_{H_½} = 1` and every truncation is a projection of the
/// same function.
pub fn default_initial(modes: usize) -> SpectralVector {
    let z = (PI.powi(6) / 90.0).sqrt();
    SpectralVector::new((1..=modes).map(|k| (k as f64).powi(-3) / z).collect())
        .expect("finite coefficients")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Galerkin dimension `N`.
    pub modes: usize,
    /// Time steps `n`.
    pub steps: usize,
    /// Horizon `T`.
    pub horizon: f64,
    /// Signed constant `c` in `F(x) = -c x x'`.
    pub nonlinearity: f64,
    pub profile: TamingProfile,
    pub gamma1: f64,
    pub noise: QSpectrum,
    /// Initial condition; only `P_N ξ` is used.
    pub initial: SpectralVector,
    pub sampler: SamplerMode,
    pub seed: u64,
    pub variant: Variant,
}

impl SchemeConfig {
    /// Defaults: `T = 1`, `c = 1`, rational profile with `γ = 1/4`,
    /// `γ₁ = -1/4`, `q_j = j^{-2}`, default `ξ`, exact sampler, seed 0.
    pub fn new(modes: usize, steps: usize) -> Self {
        Self {
            modes,
            steps,
            horizon: 1.0,
            nonlinearity: 1.0,
            profile: TamingProfile::default(),
            gamma1: -0.25,
            noise: QSpectrum::power_law(2.0, modes, 1.0).expect("finite weights"),
            initial: default_initial(modes),
            sampler: SamplerMode::Exact,
            seed: 0,
            variant: Variant::Tamed,
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |msg: String| Err(SchemeError::InvalidConfig(msg));
        if self.modes == 0 {
            return bad("modes must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !self.nonlinearity.is_finite() {
            return bad("nonlinearity constant must be finite".into());
        }
        if !self.gamma1.is_finite() {
            return bad("gamma1 must be finite".into());
        }
        if !self.initial.is_finite() {
            return bad("initial condition must be finite".into());
        }
        if let SamplerMode::Grid { master_steps } = self.sampler {
            if master_steps == 0 || master_steps % self.steps != 0 {
                return bad(format!(
                    "master steps {master_steps} must be a positive multiple of steps {}",
                    self.steps
                ));
            }
        }
        Ok(())
    }

    /// `h = T / n`.
    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn domain(&self) -> Result<TamingDomainParams, SchemeError> {
        Ok(TamingDomainParams::new(
            self.horizon,
            self.steps,
            self.gamma1,
        )?)
    }

    pub fn spectrum(&self) -> Result<OperatorSpectrum, SchemeError> {
        Ok(OperatorSpectrum::new(self.modes)?)
    }
}

/// States at the grid times `t_k = kT/n`, with per-state diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub horizon: f64,
    pub states: Vec<SpectralVector>,
    /// `Y_{t_k} ∈ D_n`.
    pub in_domain: Vec<bool>,
    /// `‖Y_{t_k}‖_H`.
    pub norm_h: Vec<f64>,
    /// `‖Y_{t_k}‖_{H_½}`.
    pub norm_half: Vec<f64>,
}

impl TrajectoryRecord {
    fn with_capacity(horizon: f64, steps: usize) -> Self {
        Self {
            horizon,
            states: Vec::with_capacity(steps + 1),
            in_domain: Vec::with_capacity(steps + 1),
            norm_h: Vec::with_capacity(steps + 1),
            norm_half: Vec::with_capacity(steps + 1),
        }
    }

    fn push(&mut self, state: SpectralVector, domain: &TamingDomainParams) {
        let half = state.sobolev_norm(0.5);
        self.in_domain.push(domain.contains_norm(half));
        self.norm_h.push(state.norm());
        self.norm_half.push(half);
        self.states.push(state);
    }

    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step_size();
        (0..self.states.len()).map(|k| k as f64 * h).collect()
    }

    pub fn final_state(&self) -> &SpectralVector {
        self.states.last().expect("record holds the initial state")
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(SpectralVector::is_finite)
    }
}

/// Precomputed per-configuration data for repeated steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    modes: usize,
    steps: usize,
    h: f64,
    variant: Variant,
    profile: TamingProfile,
    domain: TamingDomainParams,
    noise: QSpectrum,
    spectrum: OperatorSpectrum,
    decay: Vec<f64>,
    drift_weight: Vec<f64>,
    nonlinearity: BurgersNonlinearity,
    assembler: DiffusionAssembler,
}

impl Stepper {
    pub fn new(cfg: &SchemeConfig) -> Result<Self, SchemeError> {
        cfg.validate()?;
        let spectrum = cfg.spectrum()?;
        let h = cfg.step_size();
        let lambda = spectrum.eigenvalues(cfg.modes);
        Ok(Self {
            modes: cfg.modes,
            steps: cfg.steps,
            h,
            variant: cfg.variant,
            profile: cfg.profile,
            domain: cfg.domain()?,
            noise: cfg.noise.clone(),
            spectrum,
            decay: lambda.iter().map(|l| (l * h).exp()).collect(),
            // ∫_0^h e^{λ(h-s)} ds = (e^{λh} - 1)/λ
            drift_weight: lambda.iter().map(|l| (l * h).exp_m1() / l).collect(),
            nonlinearity: BurgersNonlinearity::new(cfg.nonlinearity, cfg.modes)?,
            assembler: DiffusionAssembler::new(cfg.modes),
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn spectrum(&self) -> &OperatorSpectrum {
        &self.spectrum
    }

    pub fn domain(&self) -> &TamingDomainParams {
        &self.domain
    }

    pub fn has_noise(&self) -> bool {
        !self.noise.is_zero()
    }

    /// `B_N(Y)` frozen at the left endpoint.
    pub fn diffusion(&self, y: &SpectralVector) -> DiffusionOperator {
        self.assembler.assemble(y, &self.noise)
    }

    fn linear(&self, y: &SpectralVector) -> SpectralVector {
        let coeffs: Vec<f64> = y.coeffs()[..self.modes.min(y.len())]
            .iter()
            .zip(&self.decay)
            .map(|(a, d)| a * d)
            .collect();
        project(&SpectralVector::from_vec_unchecked(coeffs), self.modes)
    }

    /// `∫_0^h e^{(h-s)A_N} F_N(Y) ds`, mode by mode.
    pub fn drift(&self, y: &SpectralVector) -> SpectralVector {
        let f = self.nonlinearity.eval(y);
        SpectralVector::from_vec_unchecked(
            f.coeffs()
                .iter()
                .zip(&self.drift_weight)
                .map(|(a, w)| a * w)
                .collect(),
        )
    }

    pub fn in_domain(&self, y: &SpectralVector) -> bool {
        self.domain.contains_norm(y.sobolev_norm(0.5))
    }

    pub fn step_tamed(&self, y: &SpectralVector, conv: &SpectralVector) -> SpectralVector {
        let linear = self.linear(y);
        if !self.in_domain(y) {
            return linear;
        }
        linear
            .add_scaled(1.0, &self.drift(y))
            .add_scaled(1.0, &tame(conv, self.steps, &self.profile))
    }

    pub fn step_untamed(&self, y: &SpectralVector, conv: &SpectralVector) -> SpectralVector {
        self.linear(y)
            .add_scaled(1.0, &self.drift(y))
            .add_scaled(1.0, conv)
    }

    pub fn step(&self, y: &SpectralVector, conv: &SpectralVector) -> SpectralVector {
        match self.variant {
            Variant::Tamed => self.step_tamed(y, conv),
            Variant::Untamed => self.step_untamed(y, conv),
        }
    }

    /// Whether step `k` from `y` uses its noise draw at all.
    fn needs_noise(&self, y: &SpectralVector) -> bool {
        self.has_noise()
            && match self.variant {
                Variant::Tamed => self.in_domain(y),
                Variant::Untamed => true,
            }
    }

    fn run(
        &self,
        initial: &SpectralVector,
        mut sample: impl FnMut(usize, &DiffusionOperator) -> Result<SpectralVector, NoiseError>,
    ) -> Result<TrajectoryRecord, SchemeError> {
        let mut record = TrajectoryRecord::with_capacity(self.domain.horizon(), self.steps);
        let mut y = project(initial, self.modes);
        record.push(y.clone(), &self.domain);
        for k in 0..self.steps {
            y = if !y.is_finite() {
                SpectralVector::saturated(self.modes)
            } else if self.needs_noise(&y) {
                let b = self.diffusion(&y);
                let conv = sample(k, &b)?;
                self.step(&y, &conv)
            } else {
                self.step(&y, &SpectralVector::zeros(self.modes))
            };
            record.push(y.clone(), &self.domain);
        }
        Ok(record)
    }
}

/// One tamed step from `y` given the stochastic convolution `conv` drawn
/// with `B` frozen at `diffusion_assemble(y)`.
pub fn step_tamed(
    y: &SpectralVector,
    cfg: &SchemeConfig,
    conv: &SpectralVector,
) -> Result<SpectralVector, SchemeError> {
    Ok(Stepper::new(cfg)?.step_tamed(y, conv))
}

/// [`step_tamed`] with the indicator forced to one and `Πⁿ` replaced by the
/// identity.
pub fn step_untamed(
    y: &SpectralVector,
    cfg: &SchemeConfig,
    conv: &SpectralVector,
) -> Result<SpectralVector, SchemeError> {
    Ok(Stepper::new(cfg)?.step_untamed(y, conv))
}

/// One trajectory, a deterministic function of `(cfg, id)`.
pub fn simulate(cfg: &SchemeConfig, id: u64) -> Result<TrajectoryRecord, SchemeError> {
    let stepper = Stepper::new(cfg)?;
    match cfg.sampler {
        SamplerMode::Exact => {
            let h = stepper.step_size();
            let spec = *stepper.spectrum();
            stepper.run(&cfg.initial, |k, b| {
                let mut rng = stream(cfg.seed, StreamPurpose::ExactConvolution, id, k as u64);
                conv_sample_exact(b, h, &spec, &mut rng)
            })
        }
        SamplerMode::Grid { master_steps } => {
            let grid = BrownianGrid::generate(cfg.seed, id, cfg.modes, master_steps, cfg.horizon)?;
            run_on_grid(&stepper, cfg, &grid)
        }
    }
}

fn run_on_grid(
    stepper: &Stepper,
    cfg: &SchemeConfig,
    grid: &BrownianGrid,
) -> Result<TrajectoryRecord, SchemeError> {
    if grid.modes() < cfg.modes && stepper.has_noise() {
        return Err(NoiseError::TooFewModes {
            grid: grid.modes(),
            needed: cfg.modes,
        }
        .into());
    }
    if (grid.horizon() - cfg.horizon).abs() > 1e-12 * cfg.horizon {
        return Err(SchemeError::InvalidConfig(format!(
            "grid horizon {} differs from scheme horizon {}",
            grid.horizon(),
            cfg.horizon
        )));
    }
    let h = stepper.step_size();
    grid.substeps(h)?;
    let spec = *stepper.spectrum();
    stepper.run(&cfg.initial, |k, b| {
        conv_sample_on_grid(b, k, h, grid, &spec)
    })
}

/// One trajectory driven by the increments of `grid`, regardless of
/// `cfg.sampler`.
pub fn simulate_on_grid(
    cfg: &SchemeConfig,
    grid: &BrownianGrid,
) -> Result<TrajectoryRecord, SchemeError> {
    let stepper = Stepper::new(cfg)?;
    run_on_grid(&stepper, cfg, grid)
}

/// Coarse and fine trajectories on the same Brownian path.
pub fn simulate_coupled(
    coarse: &SchemeConfig,
    fine: &SchemeConfig,
    grid: &BrownianGrid,
) -> Result<(TrajectoryRecord, TrajectoryRecord), SchemeError> {
    if coarse.modes != fine.modes || coarse.horizon != fine.horizon || coarse.seed != fine.seed {
        return Err(SchemeError::InvalidConfig(
            "coupled configurations must share modes, horizon and seed".into(),
        ));
    }
    if !fine.steps.is_multiple_of(coarse.steps) {
        return Err(SchemeError::InvalidConfig(format!(
            "fine steps {} not divisible by coarse steps {}",
            fine.steps, coarse.steps
        )));
    }
    for cfg in [coarse, fine] {
        if !grid.steps().is_multiple_of(cfg.steps) {
            return Err(SchemeError::InvalidConfig(format!(
                "steps {} do not divide the {} master steps",
                cfg.steps,
                grid.steps()
            )));
        }
    }
    Ok((
        simulate_on_grid(coarse, grid)?,
        simulate_on_grid(fine, grid)?,
    ))
}

/// Fine-resolution stand-in for the mild solution: the tamed scheme at the
/// reference resolution on the shared grid. An oracle, not an exact solution.
pub fn reference_solution(
    cfg: &SchemeConfig,
    grid: &BrownianGrid,
) -> Result<TrajectoryRecord, SchemeError> {
    let mut reference = cfg.clone();
    reference.variant = Variant::Tamed;
    simulate_on_grid(&reference, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{burgers_nonlinearity, semigroup_apply};
    use crate::taming::in_taming_domain;

    fn quiet(modes: usize, steps: usize) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(modes, steps);
        cfg.nonlinearity = 0.0;
        cfg.noise = QSpectrum::zero(modes);
        cfg
    }

    fn trapezoid(n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / n as f64;
        let mut s = 0.5 * (f(0.0) + f(1.0));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s * h
    }

    #[test]
    fn default_initial_is_normalized() {
        let xi = default_initial(2000);
        assert!((xi.sobolev_norm(0.5) - 1.0).abs() < 1e-6);
        assert!(default_initial(8).sobolev_norm(0.5) < 1.0);
        assert_eq!(project(&default_initial(64), 8), default_initial(8));
    }

    #[test]
    fn quiet_step_is_pure_semigroup() {
        let cfg = quiet(6, 4);
        let y = default_initial(6).scaled(0.5);
        let zero = SpectralVector::zeros(6);
        let spec = cfg.spectrum().unwrap();
        let expect = semigroup_apply(&y, cfg.step_size(), &spec);
        assert_eq!(step_tamed(&y, &cfg, &zero).unwrap(), expect);
        assert_eq!(step_untamed(&y, &cfg, &zero).unwrap(), expect);
    }

    #[test]
    fn outside_domain_only_the_semigroup_acts() {
        let cfg = SchemeConfig::new(6, 16);
        let y = default_initial(6).scaled(10.0);
        assert!(!in_taming_domain(&y, &cfg.domain().unwrap()));
        let conv = SpectralVector::new(vec![0.3; 6]).unwrap();
        let spec = cfg.spectrum().unwrap();
        let expect = semigroup_apply(&y, cfg.step_size(), &spec);
        assert_eq!(step_tamed(&y, &cfg, &conv).unwrap(), expect);

        let mut untamed = cfg.clone();
        untamed.noise = QSpectrum::zero(6);
        let stepper = Stepper::new(&untamed).unwrap();
        let zero = SpectralVector::zeros(6);
        let diff =
            &step_untamed(&y, &untamed, &zero).unwrap() - &step_tamed(&y, &untamed, &zero).unwrap();
        assert!(diff.max_abs_diff(&stepper.drift(&y)) < 1e-12);
    }

    #[test]
    fn drift_matches_quadrature() {
        let cfg = SchemeConfig::new(4, 16);
        let y = SpectralVector::new(vec![0.2, -0.05, 0.03, 0.01]).unwrap();
        assert!(in_taming_domain(&y, &cfg.domain().unwrap()));
        let stepper = Stepper::new(&cfg).unwrap();
        let drift = stepper.drift(&y);
        let f = burgers_nonlinearity(&y, cfg.nonlinearity, 4);
        let h = cfg.step_size();
        for k in 0..4 {
            let lam = stepper.spectrum().eigenvalue(k + 1);
            let w = h * trapezoid(100_000, |s| (lam * (h - s * h)).exp());
            let oracle = w * f.coeffs()[k];
            let scale = oracle.abs().max(1e-12);
            assert!(
                (drift.coeffs()[k] - oracle).abs() <= 1e-8 * scale,
                "mode {k}"
            );
        }
    }

    #[test]
    fn heat_equation_is_reproduced_exactly() {
        for n in [1, 16, 256] {
            let cfg = quiet(8, n);
            let rec = simulate(&cfg, 0).unwrap();
            assert_eq!(rec.states.len(), n + 1);
            let exact: Vec<f64> = cfg
                .initial
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, a)| (cfg.spectrum().unwrap().eigenvalue(i + 1) * cfg.horizon).exp() * a)
                .collect();
            let err = rec
                .final_state()
                .max_abs_diff(&SpectralVector::new(exact).unwrap());
            assert!(err < 1e-12, "n={n}: {err}");
        }
    }

    #[test]
    fn one_step_simulation_is_one_step() {
        let cfg = SchemeConfig::new(6, 1);
        let rec = simulate(&cfg, 3).unwrap();
        let stepper = Stepper::new(&cfg).unwrap();
        let y0 = project(&cfg.initial, 6);
        let b = stepper.diffusion(&y0);
        let mut rng = stream(cfg.seed, StreamPurpose::ExactConvolution, 3, 0);
        let conv = conv_sample_exact(&b, 1.0, stepper.spectrum(), &mut rng).unwrap();
        assert_eq!(rec.states[1], step_tamed(&y0, &cfg, &conv).unwrap());
    }

    #[test]
    fn simulation_is_deterministic_per_id() {
        let cfg = SchemeConfig::new(8, 16);
        assert_eq!(simulate(&cfg, 5).unwrap(), simulate(&cfg, 5).unwrap());
        assert_ne!(simulate(&cfg, 5).unwrap(), simulate(&cfg, 6).unwrap());

        let mut grid_cfg = cfg.clone();
        grid_cfg.sampler = SamplerMode::Grid { master_steps: 64 };
        assert_eq!(
            simulate(&grid_cfg, 5).unwrap(),
            simulate(&grid_cfg, 5).unwrap()
        );
    }

    #[test]
    fn initial_record_entry_is_projection() {
        let mut cfg = SchemeConfig::new(4, 2);
        cfg.initial = default_initial(32);
        let rec = simulate(&cfg, 0).unwrap();
        assert_eq!(rec.states[0], default_initial(4));
        assert_eq!(rec.in_domain.len(), 3);
    }

    #[test]
    fn coupled_identical_configs_agree() {
        let mut cfg = SchemeConfig::new(6, 8);
        cfg.sampler = SamplerMode::Grid { master_steps: 64 };
        let grid = BrownianGrid::generate(cfg.seed, 1, 6, 64, 1.0).unwrap();
        let (a, b) = simulate_coupled(&cfg, &cfg, &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_standalone_equals_coupled_fine() {
        let mut fine = SchemeConfig::new(6, 64);
        fine.sampler = SamplerMode::Grid { master_steps: 64 };
        let mut coarse = fine.clone();
        coarse.steps = 8;
        let grid = BrownianGrid::generate(fine.seed, 4, 6, 64, 1.0).unwrap();
        let (_, coupled_fine) = simulate_coupled(&coarse, &fine, &grid).unwrap();
        assert_eq!(coupled_fine, simulate(&fine, 4).unwrap());
    }

    #[test]
    fn quiet_coupling_matches_deterministic_runs() {
        let mut fine = quiet(6, 32);
        fine.sampler = SamplerMode::Grid { master_steps: 32 };
        let mut coarse = fine.clone();
        coarse.steps = 4;
        let grid = BrownianGrid::generate(0, 0, 6, 32, 1.0).unwrap();
        let (c, f) = simulate_coupled(&coarse, &fine, &grid).unwrap();
        let mut det = coarse.clone();
        det.sampler = SamplerMode::Exact;
        assert_eq!(c.final_state(), simulate(&det, 9).unwrap().final_state());
        assert!(f.final_state().max_abs_diff(c.final_state()) < 1e-15);
    }

    #[test]
    fn coupling_rejects_bad_divisibility() {
        let mut a = SchemeConfig::new(4, 3);
        let b = SchemeConfig::new(4, 8);
        let grid = BrownianGrid::generate(0, 0, 4, 64, 1.0).unwrap();
        assert!(simulate_coupled(&a, &b, &grid).is_err());
        a.steps = 4;
        assert!(simulate_coupled(&a, &b, &grid).is_ok());
        let other = SchemeConfig::new(5, 8);
        assert!(simulate_coupled(&a, &other, &grid).is_err());
    }

    #[test]
    fn reference_is_reproducible_and_exact_without_forcing() {
        let cfg = quiet(6, 64);
        let grid = BrownianGrid::generate(0, 0, 6, 64, 1.0).unwrap();
        let rec = reference_solution(&cfg, &grid).unwrap();
        let exact = semigroup_apply(&cfg.initial, 1.0, &cfg.spectrum().unwrap());
        assert!(rec.final_state().max_abs_diff(&exact) < 1e-12);
        let noisy = SchemeConfig::new(6, 64);
        assert_eq!(
            reference_solution(&noisy, &grid).unwrap(),
            reference_solution(&noisy, &grid).unwrap()
        );
    }

    #[test]
    fn frozen_outside_domain_decays() {
        let mut cfg = SchemeConfig::new(8, 16);
        cfg.initial = default_initial(8).scaled(20.0);
        let rec = simulate(&cfg, 0).unwrap();
        for k in 0..cfg.steps {
            if !rec.in_domain[k] {
                assert!(rec.norm_h[k + 1] <= rec.norm_h[k]);
            }
        }
        assert!(!rec.in_domain[0]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SchemeConfig::new(4, 4);
        cfg.horizon = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SchemeConfig::new(4, 3);
        cfg.sampler = SamplerMode::Grid { master_steps: 8 };
        assert!(cfg.validate().is_err());
        assert!(SchemeConfig::new(0, 4).validate().is_err());
        assert!(SchemeConfig::new(4, 0).validate().is_err());
    }
}
