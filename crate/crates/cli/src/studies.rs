//! The experiments behind each subcommand.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use sburgers_core::analysis::{
    exp_moment_estimate, fit_rate, moment_estimate, strong_error, verify_lemmas, AnalysisError,
    ErrorPair, ErrorTable, LyapunovParams, RateFit,
};
use sburgers_core::scheme::{simulate, SchemeConfig, SchemeError, TrajectoryRecord, Variant};

use crate::config::{ConfigError, ExperimentConfig, StudyKind};
use crate::output::{errors_table, fmt_num, rate_plot, rates_table, Table};

/// Acceptance band for the temporal slope.
pub const TEMPORAL_BAND: (f64, f64) = (-0.65, -0.35);
pub const TEMPORAL_MIN_R2: f64 = 0.95;
/// Acceptance band for the spatial slope.
pub const SPATIAL_BAND: (f64, f64) = (-1.25, -0.75);
/// Largest max/min ratio of `E‖Y_T‖^p_{H_½}` across the moment sweep.
pub const MOMENT_SPREAD: f64 = 2.0;
/// Largest max/min ratio of the exponential moment across the sweep.
pub const EXP_MOMENT_SPREAD: f64 = 3.0;
/// Required blow-up factor of the untamed scheme over the tamed one.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("trajectory {id}: {source}")]
    Trajectory { id: u64, source: SchemeError },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<(), StudyError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| StudyError::Io { path, source })
    }

    fn table(&self, name: &str, table: &Table) -> Result<(), StudyError> {
        self.write(name, &table.to_csv())
    }
}

/// Runs the configured study, writing artifacts and the resolved
/// configuration into `cfg.out`. Must be called inside the worker pool.
pub fn run_study(cfg: &ExperimentConfig) -> Result<Outcome, StudyError> {
    let study = cfg.study().ok_or_else(|| ConfigError::Invalid {
        key: "study".into(),
        message: "no study selected".into(),
    })?;
    std::fs::create_dir_all(&cfg.out).map_err(|source| StudyError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let out = Out { dir: &cfg.out };
    out.write("config.toml", &cfg.to_toml())?;
    match study {
        StudyKind::Run => run(cfg, &out),
        StudyKind::RatesTemporal => rates_temporal(cfg, &out),
        StudyKind::RatesSpatial => rates_spatial(cfg, &out),
        StudyKind::Moments => moments(cfg, &out, false),
        StudyKind::ExpMoments => moments(cfg, &out, true),
        StudyKind::Verify => verify(cfg, &out),
        StudyKind::DivergeDemo => diverge(cfg, &out),
    }
}

fn batch(cfg: &SchemeConfig, samples: usize) -> Result<Vec<TrajectoryRecord>, StudyError> {
    (0..samples as u64)
        .into_par_iter()
        .map(|id| simulate(cfg, id).map_err(|source| StudyError::Trajectory { id, source }))
        .collect()
}

fn in_band(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

fn rate_outputs(
    out: &Out,
    table: &ErrorTable,
    guide: f64,
    xlabel: &str,
) -> Result<Option<RateFit>, StudyError> {
    out.table("errors.csv", &errors_table(table))?;
    let fit = fit_rate(table).ok();
    match &fit {
        Some(f) => out.table("rates.csv", &rates_table(f))?,
        None => out.table("rates.csv", &Table::new(&["slope", "stderr", "r2"]))?,
    }
    out.write("plot.svg", &rate_plot(table, fit.as_ref(), guide, xlabel))?;
    Ok(fit)
}

fn describe_fit(fit: Option<&RateFit>) -> String {
    match fit {
        Some(f) => format!(
            "slope {:.3} ± {:.3}, R² {:.3}",
            f.slope, f.slope_stderr, f.r_squared
        ),
        None => "no fit (fewer than 3 positive rows)".into(),
    }
}

fn rates_temporal(cfg: &ExperimentConfig, out: &Out) -> Result<Outcome, StudyError> {
    let t = &cfg.temporal;
    let reference = cfg.coupled_scheme(t.modes, t.reference_steps, t.master_steps)?;
    let pairs = t
        .steps
        .iter()
        .map(|&n| {
            Ok(ErrorPair {
                resolution: n as f64,
                test: cfg.coupled_scheme(t.modes, n, t.master_steps)?,
                reference: reference.clone(),
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let table = strong_error(
        &pairs,
        cfg.analysis.moment,
        cfg.analysis.samples,
        t.master_steps,
    )?;
    let fit = rate_outputs(out, &table, -0.5, "time steps n")?;
    let passed =
        fit.is_some_and(|f| in_band(f.slope, TEMPORAL_BAND) && f.r_squared >= TEMPORAL_MIN_R2);
    Ok(Outcome {
        passed,
        summary: format!("temporal {}", describe_fit(fit.as_ref())),
    })
}

fn rates_spatial(cfg: &ExperimentConfig, out: &Out) -> Result<Outcome, StudyError> {
    let s = &cfg.spatial;
    let reference = cfg.coupled_scheme(s.reference_modes, s.steps, s.master_steps)?;
    let pairs = s
        .modes
        .iter()
        .map(|&n| {
            Ok(ErrorPair {
                resolution: n as f64,
                test: cfg.coupled_scheme(n, s.steps, s.master_steps)?,
                reference: reference.clone(),
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let table = strong_error(
        &pairs,
        cfg.analysis.moment,
        cfg.analysis.samples,
        s.master_steps,
    )?;
    let fit = rate_outputs(out, &table, -1.0, "modes N")?;
    let passed = fit.is_some_and(|f| in_band(f.slope, SPATIAL_BAND));
    Ok(Outcome {
        passed,
        summary: format!("spatial {}", describe_fit(fit.as_ref())),
    })
}

fn run(cfg: &ExperimentConfig, out: &Out) -> Result<Outcome, StudyError> {
    let (s, r) = (&cfg.scheme, &cfg.run);
    let pair = ErrorPair {
        resolution: s.steps as f64,
        test: cfg.coupled_scheme(s.modes, s.steps, r.master_steps)?,
        reference: cfg.coupled_scheme(s.modes, r.reference_steps, r.master_steps)?,
    };
    let table = strong_error(
        &[pair],
        cfg.analysis.moment,
        cfg.analysis.samples,
        r.master_steps,
    )?;
    out.table("errors.csv", &errors_table(&table))?;

    let record = simulate(&cfg.scheme(s.modes, s.steps)?, 0)
        .map_err(|source| StudyError::Trajectory { id: 0, source })?;
    let mut traj = Table::new(&["time", "norm_h", "norm_half", "in_domain"]);
    for (k, t) in record.times().iter().enumerate() {
        traj.push(vec![
            fmt_num(*t),
            fmt_num(record.norm_h[k]),
            fmt_num(record.norm_half[k]),
            u8::from(record.in_domain[k]).to_string(),
        ]);
    }
    out.table("trajectory.csv", &traj)?;
    let row = &table.rows[0];
    Ok(Outcome {
        passed: row.error.is_finite() && row.non_finite == 0,
        summary: format!(
            "N={} n={} error {} ± {}",
            s.modes,
            s.steps,
            fmt_num(row.error),
            fmt_num(row.ci_half_width)
        ),
    })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn moments(cfg: &ExperimentConfig, out: &Out, exponential: bool) -> Result<Outcome, StudyError> {
    let m = &cfg.moments;
    let p = cfg.analysis.moment;
    let mut table = Table::new(&[
        "modes",
        "steps",
        "M",
        "p",
        "moment_h",
        "ci_h",
        "moment_half",
        "ci_half",
        "epsilon",
        "exp_moment",
        "exp_ci",
    ]);
    let mut polys = Vec::new();
    let mut exps = Vec::new();
    for &modes in &m.modes {
        for &steps in &m.steps {
            let scheme = cfg.scheme(modes, steps)?;
            let records = batch(&scheme, m.samples)?;
            let mt = moment_estimate(&records, p)?;
            let eta = scheme.noise.eta();
            let epsilon = cfg.analysis.epsilon.unwrap_or_else(|| {
                LyapunovParams::max_epsilon(eta, scheme.horizon, cfg.analysis.c2)
            });
            let params = LyapunovParams::new(eta, epsilon, scheme.horizon, cfg.analysis.c2)?;
            let domain = scheme
                .domain()
                .map_err(|source| StudyError::Trajectory { id: 0, source })?;
            let e = exp_moment_estimate(&records, &params, &domain)?;
            let (h, half) = (mt.final_h(), mt.final_half());
            table.push(vec![
                modes.to_string(),
                steps.to_string(),
                m.samples.to_string(),
                fmt_num(p),
                fmt_num(h.mean),
                fmt_num(h.ci_half_width),
                fmt_num(half.mean),
                fmt_num(half.ci_half_width),
                fmt_num(epsilon),
                fmt_num(e.mean),
                fmt_num(e.ci_half_width),
            ]);
            polys.push(half.mean);
            exps.push(e.mean);
        }
    }
    out.table("moments.csv", &table)?;
    let poly_spread = spread(&polys);
    let exp_spread = spread(&exps);
    let exp_finite = exps.iter().all(|e| e.is_finite());
    let passed = if exponential {
        exp_finite && exp_spread < EXP_MOMENT_SPREAD
    } else {
        poly_spread < MOMENT_SPREAD
    };
    Ok(Outcome {
        passed,
        summary: format!(
            "E‖Y_T‖^p_H½ spread {:.3}; exponential moment spread {:.3}{}",
            poly_spread,
            exp_spread,
            if exp_finite { "" } else { " (non-finite)" }
        ),
    })
}

fn verify(cfg: &ExperimentConfig, out: &Out) -> Result<Outcome, StudyError> {
    let report = verify_lemmas(cfg.analysis.trials, cfg.seed);
    let mut table = Table::new(&["inequality", "trials", "worst_slack"]);
    for c in &report.checks {
        table.push(vec![
            c.id().to_string(),
            c.trials.to_string(),
            fmt_num(c.worst_slack),
        ]);
    }
    out.table("verify.csv", &table)?;
    Ok(Outcome {
        passed: report.passed(),
        summary: format!(
            "{} inequalities, {} violations",
            report.checks.len(),
            report.violations()
        ),
    })
}

fn diverge(cfg: &ExperimentConfig, out: &Out) -> Result<Outcome, StudyError> {
    let d = &cfg.diverge;
    let mut base = cfg.scheme(d.modes, d.steps)?;
    let norm = base.initial.norm();
    if norm > 0.0 {
        base.initial = base.initial.scaled(d.initial_norm / norm);
    }
    let mut table = Table::new(&["variant", "samples", "non_finite", "max_norm"]);
    let mut maxima = Vec::new();
    for (name, variant) in [("tamed", Variant::Tamed), ("untamed", Variant::Untamed)] {
        let mut scheme = base.clone();
        scheme.variant = variant;
        let records = batch(&scheme, d.samples)?;
        let finals: Vec<f64> = records.iter().map(|r| r.final_state().norm()).collect();
        let non_finite = finals.iter().filter(|v| !v.is_finite()).count();
        let max = if non_finite > 0 {
            f64::INFINITY
        } else {
            finals.iter().copied().fold(0.0, f64::max)
        };
        table.push(vec![
            name.to_string(),
            d.samples.to_string(),
            non_finite.to_string(),
            fmt_num(max),
        ]);
        maxima.push((max, non_finite));
    }
    out.table("diverge.csv", &table)?;
    let ((tamed, tamed_bad), (untamed, untamed_bad)) = (maxima[0], maxima[1]);
    let passed = tamed_bad == 0 && (untamed_bad > 0 || untamed >= DIVERGENCE_FACTOR * tamed);
    Ok(Outcome {
        passed,
        summary: format!(
            "tamed max ‖Y_T‖ {}; untamed max {} ({} non-finite)",
            fmt_num(tamed),
            fmt_num(untamed),
            untamed_bad
        ),
    })
}
