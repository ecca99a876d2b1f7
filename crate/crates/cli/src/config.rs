//! Experiment configuration: TOML file, flags and environment, merged with
//! precedence flag > environment > file > default.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sburgers_core::noise::QSpectrum;
use sburgers_core::scheme::{default_initial, SamplerMode, SchemeConfig, Variant};
use sburgers_core::taming::{ProfileKind, TamingProfile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(key: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Run,
    RatesTemporal,
    RatesSpatial,
    Moments,
    ExpMoments,
    Verify,
    DivergeDemo,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Run => "run",
            Self::RatesTemporal => "rates-temporal",
            Self::RatesSpatial => "rates-spatial",
            Self::Moments => "moments",
            Self::ExpMoments => "exp-moments",
            Self::Verify => "verify",
            Self::DivergeDemo => "diverge-demo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Exact,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    Tamed,
    Untamed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    Rational,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub modes: usize,
    pub steps: usize,
    pub horizon: f64,
    pub nonlinearity: f64,
    pub variant: VariantKind,
    /// Sampler for standalone runs; error studies always use the grid.
    pub sampler: SamplerKind,
    /// Master steps for the grid sampler in standalone runs.
    pub master_steps: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            modes: 64,
            steps: 64,
            horizon: 1.0,
            nonlinearity: 1.0,
            variant: VariantKind::Tamed,
            sampler: SamplerKind::Exact,
            master_steps: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TamingSection {
    pub profile: ProfileName,
    pub gamma: f64,
    pub gamma1: f64,
}

impl Default for TamingSection {
    fn default() -> Self {
        Self {
            profile: ProfileName::Rational,
            gamma: 0.25,
            gamma1: -0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// `q_j = amplitude · j^{-rho}`.
    pub rho: f64,
    pub amplitude: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            rho: 2.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Monte Carlo samples for error studies.
    pub samples: usize,
    /// Moment order `p`.
    pub moment: f64,
    /// Randomized trials per inequality in `verify`.
    pub trials: usize,
    pub c2: f64,
    /// Defaults to the largest admissible value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            samples: 200,
            moment: 2.0,
            trials: 10_000,
            c2: 1.0,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalSection {
    pub modes: usize,
    pub steps: Vec<usize>,
    pub reference_steps: usize,
    pub master_steps: usize,
}

impl Default for TemporalSection {
    fn default() -> Self {
        Self {
            modes: 64,
            steps: vec![8, 16, 32, 64, 128, 256, 512],
            reference_steps: 8192,
            master_steps: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialSection {
    pub modes: Vec<usize>,
    pub reference_modes: usize,
    pub steps: usize,
    pub master_steps: usize,
}

impl Default for SpatialSection {
    fn default() -> Self {
        Self {
            modes: vec![4, 8, 16, 32],
            reference_modes: 128,
            steps: 2048,
            master_steps: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    pub modes: Vec<usize>,
    pub steps: Vec<usize>,
    pub samples: usize,
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self {
            modes: vec![16, 64],
            steps: vec![16, 64, 256],
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergeSection {
    pub modes: usize,
    pub steps: usize,
    /// `‖ξ‖_H` of the large initial datum.
    pub initial_norm: f64,
    pub samples: usize,
}

impl Default for DivergeSection {
    fn default() -> Self {
        Self {
            modes: 32,
            steps: 8,
            initial_norm: 50.0,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub reference_steps: usize,
    pub master_steps: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            reference_steps: 1024,
            master_steps: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyKind>,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub scheme: SchemeSection,
    pub taming: TamingSection,
    pub noise: NoiseSection,
    pub analysis: AnalysisSection,
    pub temporal: TemporalSection,
    pub spatial: SpatialSection,
    pub moments: MomentsSection,
    pub diverge: DivergeSection,
    pub run: RunSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            study: None,
            seed: 0,
            out: PathBuf::from("out"),
            workers: 0,
            scheme: Default::default(),
            taming: Default::default(),
            noise: Default::default(),
            analysis: Default::default(),
            temporal: Default::default(),
            spatial: Default::default(),
            moments: Default::default(),
            diverge: Default::default(),
            run: Default::default(),
        }
    }
}

/// Values given on the command line or through the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub study: Option<StudyKind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub samples: Option<usize>,
    pub horizon: Option<f64>,
    pub modes: Option<Vec<usize>>,
    pub steps: Option<Vec<usize>>,
    pub reference: Option<usize>,
    pub master: Option<usize>,
    pub moment: Option<f64>,
    pub trials: Option<usize>,
    pub epsilon: Option<f64>,
}

fn single(key: &str, values: &[usize]) -> Result<usize, ConfigError> {
    match values {
        [v] => Ok(*v),
        _ => Err(invalid(key, "this study takes a single value")),
    }
}

fn check_list(key: &str, values: &[usize]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(key, "list is empty"));
    }
    if values.contains(&0) {
        return Err(invalid(key, "values must be positive"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(key, "list must be strictly ascending"));
    }
    Ok(())
}

fn check_positive(key: &str, value: usize) -> Result<(), ConfigError> {
    if value == 0 {
        return Err(invalid(key, "must be positive"));
    }
    Ok(())
}

fn check_divides(key: &str, master: usize, steps: &[usize]) -> Result<(), ConfigError> {
    if let Some(n) = steps.iter().find(|&&n| n == 0 || !master.is_multiple_of(n)) {
        return Err(invalid(
            key,
            format!("{master} master steps are not divisible by {n}"),
        ));
    }
    Ok(())
}

fn check_real(key: &str, value: f64, ok: bool) -> Result<(), ConfigError> {
    if !value.is_finite() || !ok {
        return Err(invalid(key, format!("invalid value {value}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Parse {
                path: if path == "." { "config".into() } else { path },
                message: e.into_inner().message().trim().to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Applies command-line and environment values, then validates.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        if let Some(study) = o.study {
            self.study = Some(study);
        }
        let study = self
            .study
            .ok_or_else(|| invalid("study", "no study given on the command line or in the file"))?;
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(t) = o.horizon {
            self.scheme.horizon = t;
        }
        if let Some(p) = o.moment {
            self.analysis.moment = p;
        }
        if let Some(t) = o.trials {
            self.analysis.trials = t;
        }
        if let Some(e) = o.epsilon {
            self.analysis.epsilon = Some(e);
        }
        if let Some(m) = o.samples {
            match study {
                StudyKind::Moments | StudyKind::ExpMoments => self.moments.samples = m,
                StudyKind::DivergeDemo => self.diverge.samples = m,
                _ => self.analysis.samples = m,
            }
        }
        match study {
            StudyKind::Run => {
                if let Some(v) = &o.modes {
                    self.scheme.modes = single("modes", v)?;
                }
                if let Some(v) = &o.steps {
                    self.scheme.steps = single("steps", v)?;
                }
                if let Some(r) = o.reference {
                    self.run.reference_steps = r;
                }
                if let Some(m) = o.master {
                    self.run.master_steps = m;
                }
            }
            StudyKind::RatesTemporal => {
                if let Some(v) = &o.modes {
                    self.temporal.modes = single("modes", v)?;
                }
                if let Some(v) = &o.steps {
                    self.temporal.steps = v.clone();
                }
                if let Some(r) = o.reference {
                    self.temporal.reference_steps = r;
                }
                if let Some(m) = o.master {
                    self.temporal.master_steps = m;
                }
            }
            StudyKind::RatesSpatial => {
                if let Some(v) = &o.modes {
                    self.spatial.modes = v.clone();
                }
                if let Some(v) = &o.steps {
                    self.spatial.steps = single("steps", v)?;
                }
                if let Some(r) = o.reference {
                    self.spatial.reference_modes = r;
                }
                if let Some(m) = o.master {
                    self.spatial.master_steps = m;
                }
            }
            StudyKind::Moments | StudyKind::ExpMoments => {
                if let Some(v) = &o.modes {
                    self.moments.modes = v.clone();
                }
                if let Some(v) = &o.steps {
                    self.moments.steps = v.clone();
                }
            }
            StudyKind::DivergeDemo => {
                if let Some(v) = &o.modes {
                    self.diverge.modes = single("modes", v)?;
                }
                if let Some(v) = &o.steps {
                    self.diverge.steps = single("steps", v)?;
                }
            }
            StudyKind::Verify => {}
        }
        self.validate()?;
        Ok(self)
    }

    pub fn study(&self) -> Option<StudyKind> {
        self.study
    }

    /// Checks every section, whatever the selected study.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if i64::try_from(self.seed).is_err() {
            return Err(invalid("seed", "must be below 2^63"));
        }
        let s = &self.scheme;
        check_positive("scheme.modes", s.modes)?;
        check_positive("scheme.steps", s.steps)?;
        check_real("scheme.horizon", s.horizon, s.horizon > 0.0)?;
        check_real("scheme.nonlinearity", s.nonlinearity, true)?;
        if s.sampler == SamplerKind::Grid {
            check_divides("scheme.master_steps", s.master_steps, &[s.steps])?;
        }
        let t = &self.taming;
        check_real("taming.gamma", t.gamma, t.gamma >= 0.0)?;
        check_real("taming.gamma1", t.gamma1, true)?;
        let q = &self.noise;
        check_real("noise.rho", q.rho, true)?;
        check_real("noise.amplitude", q.amplitude, q.amplitude >= 0.0)?;
        let a = &self.analysis;
        if a.samples < 2 {
            return Err(invalid("analysis.samples", "need at least 2 samples"));
        }
        check_real("analysis.moment", a.moment, a.moment > 0.0)?;
        check_positive("analysis.trials", a.trials)?;
        check_real("analysis.c2", a.c2, a.c2 > 0.0)?;
        if let Some(e) = a.epsilon {
            check_real("analysis.epsilon", e, e >= 0.0)?;
        }

        let tp = &self.temporal;
        check_positive("temporal.modes", tp.modes)?;
        check_list("temporal.steps", &tp.steps)?;
        if tp.reference_steps <= *tp.steps.last().unwrap() {
            return Err(invalid(
                "temporal.reference_steps",
                "must exceed every test resolution",
            ));
        }
        let mut all = tp.steps.clone();
        all.push(tp.reference_steps);
        check_divides("temporal.master_steps", tp.master_steps, &all)?;

        let sp = &self.spatial;
        check_list("spatial.modes", &sp.modes)?;
        if sp.reference_modes <= *sp.modes.last().unwrap() {
            return Err(invalid(
                "spatial.reference_modes",
                "must exceed every test resolution",
            ));
        }
        check_positive("spatial.steps", sp.steps)?;
        check_divides("spatial.master_steps", sp.master_steps, &[sp.steps])?;

        let m = &self.moments;
        check_list("moments.modes", &m.modes)?;
        check_list("moments.steps", &m.steps)?;
        if m.samples < 2 {
            return Err(invalid("moments.samples", "need at least 2 samples"));
        }
        if s.sampler == SamplerKind::Grid {
            check_divides("scheme.master_steps", s.master_steps, &m.steps)?;
        }

        let d = &self.diverge;
        check_positive("diverge.modes", d.modes)?;
        check_positive("diverge.steps", d.steps)?;
        check_positive("diverge.samples", d.samples)?;
        check_real(
            "diverge.initial_norm",
            d.initial_norm,
            d.initial_norm >= 0.0,
        )?;

        let r = &self.run;
        if r.reference_steps <= s.steps {
            return Err(invalid("run.reference_steps", "must exceed scheme.steps"));
        }
        check_divides(
            "run.master_steps",
            r.master_steps,
            &[s.steps, r.reference_steps],
        )?;
        Ok(())
    }

    pub fn profile(&self) -> Result<TamingProfile, ConfigError> {
        let kind = match self.taming.profile {
            ProfileName::Rational => ProfileKind::Rational,
            ProfileName::Exponential => ProfileKind::Exponential,
        };
        TamingProfile::new(kind, self.taming.gamma).map_err(|e| invalid("taming", e))
    }

    pub fn noise(&self, modes: usize) -> Result<QSpectrum, ConfigError> {
        QSpectrum::power_law(self.noise.rho, modes, self.noise.amplitude)
            .map_err(|e| invalid("noise", e))
    }

    /// The scheme at `(modes, steps)` with every other field from the file.
    pub fn scheme(&self, modes: usize, steps: usize) -> Result<SchemeConfig, ConfigError> {
        let sampler = match self.scheme.sampler {
            SamplerKind::Exact => SamplerMode::Exact,
            SamplerKind::Grid => SamplerMode::Grid {
                master_steps: self.scheme.master_steps,
            },
        };
        self.build(modes, steps, sampler)
    }

    /// As [`Self::scheme`] but driven by a shared grid of `master_steps`.
    pub fn coupled_scheme(
        &self,
        modes: usize,
        steps: usize,
        master_steps: usize,
    ) -> Result<SchemeConfig, ConfigError> {
        self.build(modes, steps, SamplerMode::Grid { master_steps })
    }

    fn build(
        &self,
        modes: usize,
        steps: usize,
        sampler: SamplerMode,
    ) -> Result<SchemeConfig, ConfigError> {
        let mut cfg = SchemeConfig::new(modes, steps);
        cfg.horizon = self.scheme.horizon;
        cfg.nonlinearity = self.scheme.nonlinearity;
        cfg.profile = self.profile()?;
        cfg.gamma1 = self.taming.gamma1;
        cfg.noise = self.noise(modes)?;
        cfg.initial = default_initial(modes);
        cfg.sampler = sampler;
        cfg.seed = self.seed;
        cfg.variant = match self.scheme.variant {
            VariantKind::Tamed => Variant::Tamed,
            VariantKind::Untamed => Variant::Untamed,
        };
        cfg.validate().map_err(|e| invalid("scheme", e))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify() -> Overrides {
        Overrides {
            study: Some(StudyKind::Verify),
            ..Default::default()
        }
    }

    #[test]
    fn empty_file_gives_documented_defaults() {
        let cfg = ExperimentConfig::from_toml_str("")
            .unwrap()
            .resolve(&verify())
            .unwrap();
        assert_eq!(cfg.temporal.modes, 64);
        assert_eq!(cfg.temporal.steps, vec![8, 16, 32, 64, 128, 256, 512]);
        assert_eq!(cfg.taming.gamma, 0.25);
        assert_eq!(cfg.taming.gamma1, -0.25);
        assert_eq!(cfg.noise.rho, 2.0);
        assert_eq!(cfg.analysis.moment, 2.0);
        assert_eq!(cfg.analysis.samples, 200);
    }

    #[test]
    fn flag_beats_file() {
        let cfg = ExperimentConfig::from_toml_str("seed = 3").unwrap();
        assert_eq!(cfg.seed, 3);
        let o = Overrides {
            seed: Some(7),
            ..verify()
        };
        assert_eq!(cfg.resolve(&o).unwrap().seed, 7);
    }

    #[test]
    fn malformed_number_names_the_key() {
        let err = ExperimentConfig::from_toml_str("[scheme]\nmodes = \"many\"\n").unwrap_err();
        assert!(err.to_string().starts_with("scheme.modes:"), "{err}");
        let err = ExperimentConfig::from_toml_str("[temporal]\nsteps = [8, -1]\n").unwrap_err();
        assert!(err.to_string().starts_with("temporal.steps"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("[scheme]\nmode = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
        assert!(ExperimentConfig::from_toml_str("colour = 1").is_err());
    }

    #[test]
    fn invariants_are_checked() {
        let bad = [
            "[temporal]\nsteps = [16, 8]",
            "[temporal]\nreference_steps = 256",
            "[spatial]\nreference_modes = 32",
            "[temporal]\nmaster_steps = 1000",
            "[scheme]\nhorizon = 0.0",
            "[analysis]\nsamples = 1",
        ];
        for text in bad {
            let cfg = ExperimentConfig::from_toml_str(text).unwrap();
            assert!(cfg.resolve(&verify()).is_err(), "{text}");
        }
    }

    #[test]
    fn study_is_required() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert!(cfg.clone().resolve(&Overrides::default()).is_err());
        let cfg = ExperimentConfig::from_toml_str("study = \"verify\"").unwrap();
        assert_eq!(
            cfg.resolve(&Overrides::default()).unwrap().study,
            Some(StudyKind::Verify)
        );
    }

    #[test]
    fn per_study_overrides() {
        let base = ExperimentConfig::default();
        let o = Overrides {
            study: Some(StudyKind::RatesSpatial),
            modes: Some(vec![2, 4]),
            steps: Some(vec![64]),
            reference: Some(16),
            master: Some(128),
            samples: Some(9),
            ..Default::default()
        };
        let cfg = base.clone().resolve(&o).unwrap();
        assert_eq!(cfg.spatial.modes, vec![2, 4]);
        assert_eq!(cfg.spatial.steps, 64);
        assert_eq!(cfg.spatial.reference_modes, 16);
        assert_eq!(cfg.analysis.samples, 9);

        let o = Overrides {
            study: Some(StudyKind::RatesTemporal),
            modes: Some(vec![2, 4]),
            ..Default::default()
        };
        assert!(base.resolve(&o).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::default().resolve(&verify()).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn scheme_uses_the_file() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 5\n[scheme]\nnonlinearity = -0.5\nhorizon = 2.0\n[noise]\namplitude = 0.0\n",
        )
        .unwrap();
        let s = cfg.scheme(8, 16).unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.nonlinearity, -0.5);
        assert_eq!(s.horizon, 2.0);
        assert!(s.noise.is_zero());
        assert_eq!(s.noise.len(), 8);
    }
}
