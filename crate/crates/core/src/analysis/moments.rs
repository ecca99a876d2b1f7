use super::{mean_and_half_width, AnalysisError};
use crate::scheme::TrajectoryRecord;
use crate::taming::TamingDomainParams;

/// A sample mean with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half_width: f64,
}

impl Estimate {
    fn from_samples(values: &[f64]) -> Self {
        let (mean, ci_half_width) = mean_and_half_width(values);
        Self {
            mean,
            ci_half_width,
        }
    }
}

/// Per-time moment estimates `E‖Y_t‖^p_H` and `E‖Y_t‖^p_{H_½}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub moment: f64,
    pub samples: usize,
    pub times: Vec<f64>,
    pub h: Vec<Estimate>,
    pub half: Vec<Estimate>,
}

impl MomentTable {
    pub fn final_h(&self) -> Estimate {
        *self.h.last().expect("table holds the initial time")
    }

    pub fn final_half(&self) -> Estimate {
        *self.half.last().expect("table holds the initial time")
    }
}

fn check_batch(records: &[TrajectoryRecord]) -> Result<(), AnalysisError> {
    if records.len() < 2 {
        return Err(AnalysisError::TooFew {
            what: "trajectories",
            needed: 2,
            got: records.len(),
        });
    }
    let first = &records[0];
    if records
        .iter()
        .any(|r| r.states.len() != first.states.len() || r.horizon != first.horizon)
    {
        return Err(AnalysisError::Inconsistent(
            "trajectories must share horizon and step count".into(),
        ));
    }
    Ok(())
}

pub fn moment_estimate(records: &[TrajectoryRecord], p: f64) -> Result<MomentTable, AnalysisError> {
    if !(p.is_finite() && p > 0.0) {
        return Err(AnalysisError::BadMoment(p));
    }
    check_batch(records)?;
    let len = records[0].states.len();
    let column = |k: usize, pick: fn(&TrajectoryRecord) -> &Vec<f64>| {
        let values: Vec<f64> = records.iter().map(|r| pick(r)[k].powf(p)).collect();
        Estimate::from_samples(&values)
    };
    Ok(MomentTable {
        moment: p,
        samples: records.len(),
        times: records[0].times(),
        h: (0..len).map(|k| column(k, |r| &r.norm_h)).collect(),
        half: (0..len).map(|k| column(k, |r| &r.norm_half)).collect(),
    })
}

/// Parameters of `V(t,x) = e^{-2η²t}(‖x‖²_H + 1)` and
/// `V̄(x) = e^{-2η²T} ε ‖x‖²_{H_½}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    eta: f64,
    epsilon: f64,
    horizon: f64,
    c2: f64,
}

impl LyapunovParams {
    /// `ε` must lie in `[0, (96 T e c₂ η²)^{-1} ∧ 1]`.
    pub fn new(eta: f64, epsilon: f64, horizon: f64, c2: f64) -> Result<Self, AnalysisError> {
        let bad = |what: &str| Err(AnalysisError::Inconsistent(what.to_string()));
        if !(eta.is_finite() && eta >= 0.0) {
            return bad("eta must be finite and nonnegative");
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if !(c2.is_finite() && c2 > 0.0) {
            return bad("c2 must be positive");
        }
        let max = Self::max_epsilon(eta, horizon, c2);
        if !(epsilon.is_finite() && (0.0..=max).contains(&epsilon)) {
            return Err(AnalysisError::Inconsistent(format!(
                "epsilon {epsilon} outside [0, {max}]"
            )));
        }
        Ok(Self {
            eta,
            epsilon,
            horizon,
            c2,
        })
    }

    /// `(96 T e c₂ η²)^{-1} ∧ 1`.
    pub fn max_epsilon(eta: f64, horizon: f64, c2: f64) -> f64 {
        (1.0 / (96.0 * horizon * std::f64::consts::E * c2 * eta * eta)).min(1.0)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn v(&self, t: f64, norm_h: f64) -> f64 {
        (-2.0 * self.eta * self.eta * t).exp() * (norm_h * norm_h + 1.0)
    }

    pub fn v_bar(&self, norm_half: f64) -> f64 {
        (-2.0 * self.eta * self.eta * self.horizon).exp() * self.epsilon * norm_half * norm_half
    }
}

/// Sample mean of `exp(V(T,Y_T) + Σ_k 1_{D_n}(Y_{t_k}) V̄(Y_{t_k}) h)` over
/// `k = 0..n-1`. Overflow yields an infinite estimate.
pub fn exp_moment_estimate(
    records: &[TrajectoryRecord],
    params: &LyapunovParams,
    domain: &TamingDomainParams,
) -> Result<Estimate, AnalysisError> {
    check_batch(records)?;
    if (records[0].horizon - params.horizon).abs() > 1e-12 * params.horizon {
        return Err(AnalysisError::Inconsistent(
            "Lyapunov horizon differs from the trajectories'".into(),
        ));
    }
    let values: Vec<f64> = records
        .iter()
        .map(|r| {
            let h = r.step_size();
            let n = r.steps();
            let integral: f64 = r.norm_half[..n]
                .iter()
                .filter(|&&s| domain.contains_norm(s))
                .map(|&s| params.v_bar(s) * h)
                .sum();
            let exponent = params.v(r.horizon, r.norm_h[n]) + integral;
            if exponent.is_nan() {
                f64::INFINITY
            } else {
                exponent.exp()
            }
        })
        .collect();
    Ok(Estimate::from_samples(&values))
}
