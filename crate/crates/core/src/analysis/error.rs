use rayon::prelude::*;

use super::{mean_and_half_width, AnalysisError};
use crate::noise::BrownianGrid;
use crate::scheme::{simulate_on_grid, SchemeConfig, Variant};

/// A test configuration measured against a reference on shared noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPair {
    /// The resolution parameter reported for this row (`N` or `n`).
    pub resolution: f64,
    pub test: SchemeConfig,
    pub reference: SchemeConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub resolution: f64,
    /// `(E‖X_T - Y_T‖^p_H)^{1/p}` over the finite samples.
    pub error: f64,
    /// 95% half-width carried through the `p`-th root by the delta method.
    pub ci_half_width: f64,
    pub samples: usize,
    pub moment: f64,
    /// Samples that overflowed (untamed runs only).
    pub non_finite: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Least-squares fit of `log₂ error = slope · log₂ resolution + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

fn summarize(distances: &[f64], moment: f64, resolution: f64) -> ErrorRow {
    let finite: Vec<f64> = distances
        .iter()
        .filter(|d| d.is_finite())
        .map(|d| d.powf(moment))
        .collect();
    let (mean, hw) = mean_and_half_width(&finite);
    let error = mean.powf(1.0 / moment);
    let ci_half_width = if mean > 0.0 {
        hw * mean.powf(1.0 / moment - 1.0) / moment
    } else {
        0.0
    };
    ErrorRow {
        resolution,
        error,
        ci_half_width,
        samples: finite.len(),
        moment,
        non_finite: distances.len() - finite.len(),
    }
}

/// Estimates the strong error of every pair on `samples` coupled draws.
///
/// Sample `m` generates one Brownian grid of `master_steps` steps (seeded by
/// `(seed, m)`) carrying the largest Galerkin dimension of any
/// configuration; every test and reference trajectory of that sample runs
/// on it. Each distinct reference is simulated once per sample. Results do
/// not depend on the rayon pool size.
pub fn strong_error(
    pairs: &[ErrorPair],
    moment: f64,
    samples: usize,
    master_steps: usize,
) -> Result<ErrorTable, AnalysisError> {
    if !(moment.is_finite() && moment > 0.0) {
        return Err(AnalysisError::BadMoment(moment));
    }
    if pairs.is_empty() {
        return Ok(ErrorTable::default());
    }
    if samples == 0 {
        return Err(AnalysisError::TooFew {
            what: "samples",
            needed: 1,
            got: 0,
        });
    }
    let seed = pairs[0].test.seed;
    let horizon = pairs[0].test.horizon;
    let configs = pairs.iter().flat_map(|p| [&p.test, &p.reference]);
    if configs
        .clone()
        .any(|c| c.seed != seed || c.horizon != horizon)
    {
        return Err(AnalysisError::Inconsistent(
            "all configurations of a study must share seed and horizon".into(),
        ));
    }
    let modes = configs.map(|c| c.modes).max().unwrap_or(1);

    let mut references: Vec<&SchemeConfig> = Vec::new();
    let ref_index: Vec<usize> = pairs
        .iter()
        .map(
            |p| match references.iter().position(|r| **r == p.reference) {
                Some(i) => i,
                None => {
                    references.push(&p.reference);
                    references.len() - 1
                }
            },
        )
        .collect();

    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|m| -> Result<Vec<f64>, AnalysisError> {
            let grid = BrownianGrid::generate(seed, m as u64, modes, master_steps, horizon)
                .map_err(crate::scheme::SchemeError::from)?;
            let finals = references
                .iter()
                .map(|r| simulate_on_grid(r, &grid).map(|rec| rec.final_state().clone()))
                .collect::<Result<Vec<_>, _>>()?;
            pairs
                .iter()
                .zip(&ref_index)
                .map(|(pair, &ri)| {
                    let rec = simulate_on_grid(&pair.test, &grid)?;
                    let d = (&finals[ri] - rec.final_state()).norm();
                    if !d.is_finite() && pair.test.variant == Variant::Tamed {
                        return Err(AnalysisError::NonFiniteSample {
                            resolution: pair.resolution,
                            sample: m,
                        });
                    }
                    Ok(d)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<ErrorRow> = pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let distances: Vec<f64> = per_sample.iter().map(|s| s[i]).collect();
            summarize(&distances, moment, pair.resolution)
        })
        .collect();
    rows.sort_by(|a, b| a.resolution.total_cmp(&b.resolution));
    Ok(ErrorTable { rows })
}

/// Ordinary least squares on `(log₂ x, log₂ y)`.
pub(crate) fn fit_log2(points: &[(f64, f64)]) -> RateFit {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.log2(), y.log2())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_stderr = if points.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    RateFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

/// Fits `error ∝ resolution^slope`. Needs three rows with positive errors.
pub fn fit_rate(table: &ErrorTable) -> Result<RateFit, AnalysisError> {
    if table.rows.len() < 3 {
        return Err(AnalysisError::TooFew {
            what: "error rows",
            needed: 3,
            got: table.rows.len(),
        });
    }
    if let Some(row) = table
        .rows
        .iter()
        .find(|r| !(r.error.is_finite() && r.error > 0.0) || !(r.resolution > 0.0))
    {
        return Err(AnalysisError::NonPositiveError {
            resolution: row.resolution,
            error: row.error,
        });
    }
    let points: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.resolution, r.error)).collect();
    Ok(fit_log2(&points))
}
