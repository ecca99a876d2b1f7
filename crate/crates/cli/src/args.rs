//! Command-line flags. Every flag can also come from an `SBURGERS_*`
//! environment variable; the flag wins when both are present.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, StudyKind};

#[derive(Debug, Parser)]
#[command(
    name = "sburgers",
    version,
    about = "Tamed exponential Euler experiments for the stochastic Burgers equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub study: Option<Study>,
    /// TOML experiment file.
    #[arg(long, global = true, env = "SBURGERS_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "SBURGERS_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "SBURGERS_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true, env = "SBURGERS_WORKERS")]
    pub workers: Option<usize>,
    /// Monte Carlo sample count of the selected study.
    #[arg(long, global = true, env = "SBURGERS_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, global = true, env = "SBURGERS_HORIZON")]
    pub horizon: Option<f64>,
    /// Spectral modes; a comma list for sweeps over N.
    #[arg(long, global = true, env = "SBURGERS_MODES", value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    /// Time steps; a comma list for sweeps over n.
    #[arg(long, global = true, env = "SBURGERS_STEPS", value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// Reference resolution (steps, or modes for the spatial study).
    #[arg(long, global = true, env = "SBURGERS_REFERENCE")]
    pub reference: Option<usize>,
    /// Steps of the shared Brownian grid.
    #[arg(long, global = true, env = "SBURGERS_MASTER")]
    pub master: Option<usize>,
    /// Moment order p.
    #[arg(long, global = true, env = "SBURGERS_MOMENT")]
    pub moment: Option<f64>,
    /// Random trials per inequality in `verify`.
    #[arg(long, global = true, env = "SBURGERS_TRIALS")]
    pub trials: Option<usize>,
    #[arg(long, global = true, env = "SBURGERS_EPSILON")]
    pub epsilon: Option<f64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Study {
    /// One strong-error estimate plus a sample trajectory.
    Run,
    /// Strong error against the time step.
    RatesTemporal,
    /// Strong error against the number of modes.
    RatesSpatial,
    /// Polynomial moments across resolutions.
    Moments,
    /// Exponential moments across resolutions.
    ExpMoments,
    /// Randomized check of the analytic inequalities.
    Verify,
    /// Tamed against untamed from a large initial datum.
    DivergeDemo,
}

impl From<Study> for StudyKind {
    fn from(s: Study) -> Self {
        match s {
            Study::Run => Self::Run,
            Study::RatesTemporal => Self::RatesTemporal,
            Study::RatesSpatial => Self::RatesSpatial,
            Study::Moments => Self::Moments,
            Study::ExpMoments => Self::ExpMoments,
            Study::Verify => Self::Verify,
            Study::DivergeDemo => Self::DivergeDemo,
        }
    }
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            study: self.study.map(Into::into),
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            samples: self.samples,
            horizon: self.horizon,
            modes: self.modes.clone(),
            steps: self.steps.clone(),
            reference: self.reference,
            master: self.master,
            moment: self.moment,
            trials: self.trials,
            epsilon: self.epsilon,
        }
    }
}
