//! Taming map `Πⁿ(x) = f(½‖x‖²_H n^{-2γ}) x`, its first two derivatives,
//! and the taming domain `D_n`.

use thiserror::Error;

use crate::noise::DiffusionOperator;
use crate::spectral::SpectralVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TamingError {
    #[error("taming exponent must be finite and nonnegative, got {0}")]
    BadExponent(f64),
    #[error("taming profile must satisfy f(0) = 1, got {0}")]
    NotNormalized(f64),
    #[error("taming profile supremum `{0}` is not finite")]
    Unbounded(&'static str),
    #[error("taming domain needs horizon > 0 and steps >= 1 (horizon {horizon}, steps {steps})")]
    BadDomain { horizon: f64, steps: usize },
}

/// Scalar profile families `f` with `f(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileKind {
    /// `f(u) = 1 / (1 + 2u)`.
    #[default]
    Rational,
    /// `f(u) = e^{-u}`.
    Exponential,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rational => "rational",
            Self::Exponential => "exponential",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rational" => Some(Self::Rational),
            "exponential" => Some(Self::Exponential),
            _ => None,
        }
    }

    fn f(self, u: f64) -> f64 {
        match self {
            Self::Rational => 1.0 / (1.0 + 2.0 * u),
            Self::Exponential => (-u).exp(),
        }
    }

    fn df(self, u: f64) -> f64 {
        match self {
            Self::Rational => -2.0 / ((1.0 + 2.0 * u) * (1.0 + 2.0 * u)),
            Self::Exponential => -(-u).exp(),
        }
    }

    fn d2f(self, u: f64) -> f64 {
        match self {
            Self::Rational => 8.0 / (1.0 + 2.0 * u).powi(3),
            Self::Exponential => (-u).exp(),
        }
    }
}

/// Suprema over `t ∈ (0, ∞)` that enter the explicit taming bounds, taken
/// numerically on a log grid `t ∈ [1e-6, 1e6]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSuprema {
    /// `sup |f(t)|`
    pub f: f64,
    /// `sup |t f(t²)|`
    pub t_f_sq: f64,
    /// `sup |(t ∨ 1) f(t²)|`
    pub vee_f_sq: f64,
    /// `sup |(t ∨ 1) f'(t²)|`
    pub vee_df_sq: f64,
    /// `sup |t f'(t²)|`
    pub t_df_sq: f64,
    /// `sup |f'(t)|`
    pub df: f64,
    /// `sup |t f''(t)|`
    pub t_d2f: f64,
    /// `|f'(0)|`
    pub df_at_zero: f64,
    /// Radius `ε ∈ (0, 1]` below which `|f(½s²) - 1| <= (|f'(0)| + 1) s`.
    pub small_radius: f64,
}

const SUPREMUM_GRID_POINTS: usize = 1000;

fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(move |i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
}

impl ProfileSuprema {
    fn compute(kind: ProfileKind) -> Self {
        let sup = |g: &dyn Fn(f64) -> f64| {
            log_grid(1e-6, 1e6, SUPREMUM_GRID_POINTS)
                .map(|t| g(t).abs())
                .fold(0.0, f64::max)
        };
        let df_at_zero = kind.df(0.0).abs();
        let mut small_radius = 1e-6;
        for s in log_grid(1e-6, 1.0, SUPREMUM_GRID_POINTS) {
            if (kind.f(0.5 * s * s) - 1.0).abs() > (df_at_zero + 1.0) * s {
                break;
            }
            small_radius = s;
        }
        Self {
            f: sup(&|t| kind.f(t)).max(kind.f(0.0).abs()),
            t_f_sq: sup(&|t| t * kind.f(t * t)),
            vee_f_sq: sup(&|t| t.max(1.0) * kind.f(t * t)),
            vee_df_sq: sup(&|t| t.max(1.0) * kind.df(t * t)),
            t_df_sq: sup(&|t| t * kind.df(t * t)),
            df: sup(&|t| kind.df(t)).max(df_at_zero),
            t_d2f: sup(&|t| t * kind.d2f(t)),
            df_at_zero,
            small_radius,
        }
    }

    fn check_finite(&self) -> Result<(), TamingError> {
        let named = [
            ("sup|f|", self.f),
            ("sup|t f(t^2)|", self.t_f_sq),
            ("sup|(t v 1) f(t^2)|", self.vee_f_sq),
            ("sup|(t v 1) f'(t^2)|", self.vee_df_sq),
            ("sup|t f''(t)|", self.t_d2f),
        ];
        match named.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(TamingError::Unbounded(name)),
            None => Ok(()),
        }
    }
}

/// A taming profile `f` together with the exponent `γ` of `n^{-2γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamingProfile {
    kind: ProfileKind,
    gamma: f64,
    suprema: ProfileSuprema,
}

impl Default for TamingProfile {
    fn default() -> Self {
        Self::new(ProfileKind::Rational, 0.25).expect("default profile is valid")
    }
}

impl TamingProfile {
    pub fn new(kind: ProfileKind, gamma: f64) -> Result<Self, TamingError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(TamingError::BadExponent(gamma));
        }
        let f0 = kind.f(0.0);
        if f0 != 1.0 {
            return Err(TamingError::NotNormalized(f0));
        }
        let suprema = ProfileSuprema::compute(kind);
        suprema.check_finite()?;
        Ok(Self {
            kind,
            gamma,
            suprema,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn suprema(&self) -> &ProfileSuprema {
        &self.suprema
    }

    pub fn f(&self, u: f64) -> f64 {
        self.kind.f(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        self.kind.df(u)
    }

    pub fn d2f(&self, u: f64) -> f64 {
        self.kind.d2f(u)
    }

    /// `n^{-2γ}`.
    pub fn damping(&self, n: usize) -> f64 {
        (n as f64).powf(-2.0 * self.gamma)
    }

    /// The profile argument `u = ½‖x‖² n^{-2γ}`.
    pub fn argument(&self, x: &SpectralVector, n: usize) -> f64 {
        0.5 * x.norm_squared() * self.damping(n)
    }

    /// `c` in `‖Πⁿ(x)‖_H <= c nᵞ`.
    pub fn norm_cap(&self) -> f64 {
        2.0 * self.suprema.t_f_sq
    }

    /// `c` in `‖(DΠⁿ)(x) y - y‖_H <= c ‖x‖_H ‖y‖_H`.
    pub fn jacobian_constant(&self) -> f64 {
        let s = &self.suprema;
        (1.0 + s.f) / s.small_radius + s.df_at_zero + 1.0 + 2.0 * s.t_df_sq
    }

    /// `c` in `‖(DΠⁿ)(x)(Ax) - AΠⁿ(x)‖_H <= c n^{-2γ} ‖x‖_{H_½}(‖x‖_{H_½} + 1)(‖x‖_H + 1)`.
    pub fn commutator_constant(&self) -> f64 {
        self.suprema.df
    }

    /// `c` in `‖Σ_i (D²Πⁿ)(x)(b_i, b_i)‖_H <= c ‖x‖_H ‖b‖²_HS`.
    pub fn hessian_constant(&self) -> f64 {
        3.0 * self.suprema.df + 2.0 * self.suprema.t_d2f
    }
}

/// `Πⁿ(x)`.
pub fn tame(x: &SpectralVector, n: usize, profile: &TamingProfile) -> SpectralVector {
    x.scaled(profile.f(profile.argument(x, n)))
}

/// `(DΠⁿ)(x) y = f(u) y + n^{-2γ} ⟨x, y⟩ f'(u) x`.
pub fn tame_jacobian_apply(
    x: &SpectralVector,
    y: &SpectralVector,
    n: usize,
    profile: &TamingProfile,
) -> SpectralVector {
    let u = profile.argument(x, n);
    let along = profile.damping(n) * x.dot(y) * profile.df(u);
    y.scaled(profile.f(u)).add_scaled(along, x)
}

/// `Σ_i (D²Πⁿ)(x)(b_i, b_i)` over the columns `b_i` of `b`: the Itô
/// correction of the tamed noise term.
pub fn tame_hessian_noise_trace(
    x: &SpectralVector,
    b: &DiffusionOperator,
    n: usize,
    profile: &TamingProfile,
) -> SpectralVector {
    let u = profile.argument(x, n);
    let damping = profile.damping(n);
    let first = damping * profile.df(u);
    let second = damping * damping * profile.d2f(u);
    let len = x.len().max(b.dim());
    let mut out = SpectralVector::zeros(len);
    let mut along_x = 0.0;
    for i in 0..b.dim() {
        let col = b.column(i);
        let proj = x.dot(&col);
        out = out.add_scaled(2.0 * first * proj, &col);
        along_x += first * col.norm_squared() + second * proj * proj;
    }
    out.add_scaled(along_x, x)
}

/// Parameters of `D_n = {x : ‖x‖_{H_½} ∨ ‖x‖²_{H_½} <= (T/n)^{γ₁}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamingDomainParams {
    horizon: f64,
    steps: usize,
    gamma1: f64,
}

impl TamingDomainParams {
    pub fn new(horizon: f64, steps: usize, gamma1: f64) -> Result<Self, TamingError> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 || !gamma1.is_finite() {
            return Err(TamingError::BadDomain { horizon, steps });
        }
        Ok(Self {
            horizon,
            steps,
            gamma1,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// `(T/n)^{γ₁}`.
    pub fn threshold(&self) -> f64 {
        (self.horizon / self.steps as f64).powf(self.gamma1)
    }

    /// Membership from a precomputed `‖x‖_{H_½}`.
    pub fn contains_norm(&self, half_norm: f64) -> bool {
        half_norm.max(half_norm * half_norm) <= self.threshold()
    }
}

/// `x ∈ D_n`. The inequality is non-strict.
pub fn in_taming_domain(x: &SpectralVector, p: &TamingDomainParams) -> bool {
    p.contains_norm(x.sobolev_norm(0.5))
}
