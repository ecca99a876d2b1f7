use rand::Rng;
use rand_distr::StandardNormal;

use crate::noise::{DiffusionAssembler, DiffusionOperator, QSpectrum};
use crate::rng::{stream, StreamPurpose};
use crate::spectral::{
    eigen_magnitude, semigroup_apply, BurgersNonlinearity, OperatorSpectrum, SpectralVector,
};
use crate::taming::{tame, tame_hessian_noise_trace, tame_jacobian_apply, TamingProfile};

/// Largest tolerated negative slack.
pub const SLACK_TOLERANCE: f64 = 1e-9;

/// One evaluation of `lhs <= rhs`.
///
/// The slack `(rhs - lhs) / scale` is relative to the magnitude of the terms
/// involved, so that roundoff in large inputs is not reported as a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl Trial {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            scale: 1f64.max(lhs.abs()).max(rhs.abs()),
        }
    }

    pub fn slack(&self) -> f64 {
        (self.rhs - self.lhs) / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inequality {
    SemigroupIncrement,
    ConvolutionWeight,
    TamingNormCap,
    TamingSobolev,
    TamingJacobian,
    TamingCommutator,
    TamingHessianTrace,
    DiffusionHsBound,
    DiffusionLipschitz,
    NonlinearityOrthogonality,
    LyapunovDrift,
}

impl Inequality {
    pub const ALL: [Inequality; 11] = [
        Self::SemigroupIncrement,
        Self::ConvolutionWeight,
        Self::TamingNormCap,
        Self::TamingSobolev,
        Self::TamingJacobian,
        Self::TamingCommutator,
        Self::TamingHessianTrace,
        Self::DiffusionHsBound,
        Self::DiffusionLipschitz,
        Self::NonlinearityOrthogonality,
        Self::LyapunovDrift,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::SemigroupIncrement => "semigroup_increment",
            Self::ConvolutionWeight => "convolution_weight",
            Self::TamingNormCap => "taming_norm_cap",
            Self::TamingSobolev => "taming_sobolev",
            Self::TamingJacobian => "taming_jacobian",
            Self::TamingCommutator => "taming_commutator",
            Self::TamingHessianTrace => "taming_hessian_trace",
            Self::DiffusionHsBound => "diffusion_hs_bound",
            Self::DiffusionLipschitz => "diffusion_lipschitz",
            Self::NonlinearityOrthogonality => "nonlinearity_orthogonality",
            Self::LyapunovDrift => "lyapunov_drift",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub inequality: Inequality,
    pub trials: usize,
    pub worst_slack: f64,
    pub violations: usize,
}

impl LemmaCheck {
    pub fn id(&self) -> &'static str {
        self.inequality.id()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// `‖(e^{tA} - I) v‖_{H_δ} <= t^γ ‖v‖_{H_{δ+γ}}`.
pub fn semigroup_increment(v: &SpectralVector, t: f64, gamma: f64, delta: f64) -> Trial {
    let spec = OperatorSpectrum::new(v.len().max(1)).expect("nonzero dimension");
    let inc = &semigroup_apply(v, t, &spec) - v;
    Trial::new(
        inc.sobolev_norm(delta),
        t.powf(gamma) * v.sobolev_norm(delta + gamma),
    )
}

/// `|(e^{λ_k h} - 1)/λ_k| (π²k²)^γ <= (γ/e)^γ h^{1-γ} / (1-γ)`.
pub fn convolution_weight(k: usize, h: f64, gamma: f64) -> Trial {
    let mu = eigen_magnitude(k);
    let weight = -(-mu * h).exp_m1() / mu;
    let lhs = weight * mu.powf(gamma);
    let rhs = (gamma / std::f64::consts::E).powf(gamma) * h.powf(1.0 - gamma) / (1.0 - gamma);
    Trial::new(lhs, rhs)
}

/// `‖Πⁿ(x)‖_H <= c nᵞ`.
pub fn taming_norm_cap(x: &SpectralVector, n: usize, profile: &TamingProfile) -> Trial {
    let rhs = profile.norm_cap() * (n as f64).powf(profile.gamma());
    Trial::new(tame(x, n, profile).norm(), rhs)
}

/// `‖Πⁿ(x)‖_{H_r} <= sup|f| ‖x‖_{H_r}`.
pub fn taming_sobolev(x: &SpectralVector, n: usize, r: f64, profile: &TamingProfile) -> Trial {
    Trial::new(
        tame(x, n, profile).sobolev_norm(r),
        profile.suprema().f * x.sobolev_norm(r),
    )
}

/// `‖(DΠⁿ)(x) y - y‖_H <= c ‖x‖_H ‖y‖_H`.
pub fn taming_jacobian(
    x: &SpectralVector,
    y: &SpectralVector,
    n: usize,
    profile: &TamingProfile,
) -> Trial {
    let lhs = (&tame_jacobian_apply(x, y, n, profile) - y).norm();
    Trial::new(lhs, profile.jacobian_constant() * x.norm() * y.norm())
}

/// `‖(DΠⁿ)(x)(Ax) - AΠⁿ(x)‖_H <= c n^{-2γ} ‖x‖_{H_½}(‖x‖_{H_½}+1)(‖x‖_H+1)`.
pub fn taming_commutator(x: &SpectralVector, n: usize, profile: &TamingProfile) -> Trial {
    let lhs = (&tame_jacobian_apply(x, &x.apply_laplacian(), n, profile)
        - &tame(x, n, profile).apply_laplacian())
        .norm();
    let half = x.sobolev_norm(0.5);
    let rhs =
        profile.commutator_constant() * profile.damping(n) * half * (half + 1.0) * (x.norm() + 1.0);
    Trial::new(lhs, rhs)
}

/// `‖Σ_i (D²Πⁿ)(x)(b_i, b_i)‖_H <= c ‖x‖_H ‖b‖²_HS`.
pub fn taming_hessian_trace(
    x: &SpectralVector,
    b: &DiffusionOperator,
    n: usize,
    profile: &TamingProfile,
) -> Trial {
    let lhs = tame_hessian_noise_trace(x, b, n, profile).norm();
    let hs = b.hs_norm();
    Trial::new(lhs, profile.hessian_constant() * x.norm() * hs * hs)
}

/// `‖B_N(x)‖_HS <= η`.
pub fn diffusion_hs_bound(x: &SpectralVector, q: &QSpectrum) -> Trial {
    let b = DiffusionAssembler::new(x.len()).assemble(x, q);
    Trial::new(b.hs_norm(), q.eta())
}

/// `‖B_N(x) - B_N(y)‖_HS <= √2 η ‖x - y‖_H`.
pub fn diffusion_lipschitz(x: &SpectralVector, y: &SpectralVector, q: &QSpectrum) -> Trial {
    let assembler = DiffusionAssembler::new(x.len().max(y.len()));
    let diff = assembler.assemble(x, q).matrix() - assembler.assemble(y, q).matrix();
    Trial::new(diff.norm(), q.lipschitz() * (x - y).norm())
}

/// `|⟨x, F_N(x)⟩_H| <= 1e-10 |c| ‖x‖²_H ‖x‖_{H_½}`, relative to the right side.
pub fn nonlinearity_orthogonality(x: &SpectralVector, c: f64) -> Trial {
    let f = BurgersNonlinearity::new(c, x.len().max(1))
        .expect("nonzero dimension")
        .eval(x);
    let lhs = x.dot(&f).abs();
    let rhs = 1e-10 * c.abs() * x.norm_squared() * x.sobolev_norm(0.5);
    Trial {
        lhs,
        rhs,
        scale: if rhs > 0.0 { rhs } else { 1.0 },
    }
}

/// `2⟨x, F_N(x) + Ax⟩ + ‖B_N(x)‖²_HS + 2‖B_N(x)* x‖² + ε‖x‖²_{H_½} <= 2η²(‖x‖²_H + 1)`.
pub fn lyapunov_drift(x: &SpectralVector, c: f64, q: &QSpectrum, epsilon: f64) -> Trial {
    let modes = x.len().max(1);
    let f = BurgersNonlinearity::new(c, modes)
        .expect("nonzero dimension")
        .eval(x);
    let b = DiffusionAssembler::new(modes).assemble(x, q);
    let adj = b.adjoint_apply(x.coeffs());
    let hs = b.hs_norm();
    let eta = q.eta();
    let terms = [
        2.0 * x.dot(&f),
        2.0 * x.dot(&x.apply_laplacian()),
        hs * hs,
        2.0 * adj.iter().map(|a| a * a).sum::<f64>(),
        epsilon * x.sobolev_norm(0.5).powi(2),
    ];
    let lhs: f64 = terms.iter().sum();
    let rhs = 2.0 * eta * eta * (x.norm_squared() + 1.0);
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>() + rhs.abs() + 1.0;
    Trial { lhs, rhs, scale }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// A random vector of norm in `[1e-3, 1e2]` with a random spectral decay.
fn random_state<R: Rng>(rng: &mut R, modes: usize) -> SpectralVector {
    let decay = rng.gen_range(0.0..2.5);
    let raw: Vec<f64> = (1..=modes)
        .map(|k| rng.sample::<f64, _>(StandardNormal) * (k as f64).powf(-decay))
        .collect();
    let v = SpectralVector::new(raw).expect("finite draw");
    let norm = v.norm();
    if norm == 0.0 {
        return v;
    }
    v.scaled(log_uniform(rng, 1e-3, 1e2) / norm)
}

fn random_noise<R: Rng>(rng: &mut R, modes: usize) -> QSpectrum {
    QSpectrum::power_law(rng.gen_range(1.1..3.0), modes, log_uniform(rng, 1e-2, 1e1))
        .expect("valid power law")
}

fn random_profile<R: Rng>(rng: &mut R) -> TamingProfile {
    TamingProfile::new(Default::default(), rng.gen_range(0.0..=0.5)).expect("valid exponent")
}

const STEPS: [usize; 4] = [1, 4, 16, 256];

fn draw<R: Rng>(which: Inequality, rng: &mut R) -> Trial {
    let modes = rng.gen_range(1..=24);
    let n = STEPS[rng.gen_range(0..STEPS.len())];
    match which {
        Inequality::SemigroupIncrement => {
            let v = random_state(rng, modes);
            let t = 1.0 - rng.gen::<f64>();
            let gamma = rng.gen_range(0.0..=1.0);
            let delta = [-0.5, 0.0, 0.5][rng.gen_range(0..3)];
            semigroup_increment(&v, t, gamma, delta)
        }
        Inequality::ConvolutionWeight => {
            let k = rng.gen_range(1..=4096);
            let h = log_uniform(rng, 1e-8, 1.0);
            convolution_weight(k, h, rng.gen_range(0.0..0.999))
        }
        Inequality::TamingNormCap => {
            taming_norm_cap(&random_state(rng, modes), n, &random_profile(rng))
        }
        Inequality::TamingSobolev => {
            let r = [0.0, 0.25, 0.5][rng.gen_range(0..3)];
            taming_sobolev(&random_state(rng, modes), n, r, &random_profile(rng))
        }
        Inequality::TamingJacobian => {
            let x = random_state(rng, modes);
            let y = random_state(rng, modes);
            taming_jacobian(&x, &y, n, &random_profile(rng))
        }
        Inequality::TamingCommutator => {
            taming_commutator(&random_state(rng, modes), n, &random_profile(rng))
        }
        Inequality::TamingHessianTrace => {
            let x = random_state(rng, modes);
            let q = random_noise(rng, modes);
            let b = DiffusionAssembler::new(modes).assemble(&random_state(rng, modes), &q);
            taming_hessian_trace(&x, &b, n, &random_profile(rng))
        }
        Inequality::DiffusionHsBound => {
            diffusion_hs_bound(&random_state(rng, modes), &random_noise(rng, modes))
        }
        Inequality::DiffusionLipschitz => {
            let x = random_state(rng, modes);
            let y = if rng.gen_bool(0.5) {
                x.add_scaled(1.0, &random_state(rng, modes).scaled(1e-3))
            } else {
                random_state(rng, modes)
            };
            diffusion_lipschitz(&x, &y, &random_noise(rng, modes))
        }
        Inequality::NonlinearityOrthogonality => {
            let c = rng.gen_range(-2.0..2.0);
            nonlinearity_orthogonality(&random_state(rng, modes), c)
        }
        Inequality::LyapunovDrift => {
            let x = random_state(rng, modes);
            let c = rng.gen_range(-2.0..2.0);
            let q = random_noise(rng, modes);
            lyapunov_drift(&x, c, &q, rng.gen_range(0.0..=1.0))
        }
    }
}

/// Evaluates every registered inequality on `trials` random inputs drawn
/// from the streams of `seed`.
pub fn verify_lemmas(trials: usize, seed: u64) -> LemmaReport {
    let checks = Inequality::ALL
        .iter()
        .enumerate()
        .map(|(idx, &inequality)| {
            let mut rng = stream(seed, StreamPurpose::LemmaCheck, 0, idx as u64);
            let mut worst = f64::INFINITY;
            let mut violations = 0;
            for _ in 0..trials {
                let slack = draw(inequality, &mut rng).slack();
                if !(slack >= -SLACK_TOLERANCE) {
                    violations += 1;
                }
                worst = worst.min(slack);
            }
            LemmaCheck {
                inequality,
                trials,
                worst_slack: worst,
                violations,
            }
        })
        .collect();
    LemmaReport { checks }
}
