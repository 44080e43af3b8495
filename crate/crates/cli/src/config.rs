//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use davies_lab::generators::{AssemblyPath, GeneratorKind};
use davies_lab::models::{benchmark, rebuild, Model, Provenance, BENCHMARKS};
use davies_lab::weights::{
    balanced_gamma, kms_from_phi, kms_gamma, shifted_phi_gamma, KmsKind, Phi, WeightSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model: ModelConfig::default(),
            weight: WeightConfig::default(),
            generator: GeneratorConfig::default(),
            run: RunConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Either a named benchmark or a full model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build: Option<Provenance>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            benchmark: Some("qubit".into()),
            build: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `e^{-ω/2} φ(ω + σ²/4)`.
    Balanced,
    /// `e^{-ω/2} φ(ω + shift)`.
    Shifted,
    Glauber,
    Metropolis,
    /// `e^{-ω/2} φ(ω)`.
    KmsPhi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default = "default_weight_kind")]
    pub kind: WeightKind,
    #[serde(default = "default_phi")]
    pub phi: String,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Drop the `σ²/4` shift from a balanced weight.
    #[serde(default)]
    pub balance_broken: bool,
}

fn default_weight_kind() -> WeightKind {
    WeightKind::Balanced
}

fn default_phi() -> String {
    "gaussian".into()
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            kind: default_weight_kind(),
            phi: default_phi(),
            sigma: default_sigma(),
            shift: None,
            balance_broken: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default = "default_generator_kind")]
    pub kind: GeneratorKind,
    #[serde(default = "default_path")]
    pub path: AssemblyPath,
}

fn default_generator_kind() -> GeneratorKind {
    GeneratorKind::Localised
}

fn default_path() -> AssemblyPath {
    AssemblyPath::BohrSum
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: default_generator_kind(),
            path: default_path(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Excited,
    Ground,
    Gibbs,
    MaximallyMixed,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Random test operators per sweep point.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Schatten index of the sweep distance.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Random state pairs in the contraction battery.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_initial")]
    pub initial_state: InitialState,
    #[serde(default = "default_choi_times")]
    pub choi_times: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_times() -> Vec<f64> {
    (0..=40).map(|k| 0.5 * k as f64).collect()
}

fn default_sigmas() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

fn default_samples() -> usize {
    5
}

fn default_p() -> f64 {
    1.0
}

fn default_pairs() -> usize {
    20
}

fn default_initial() -> InitialState {
    InitialState::Excited
}

fn default_choi_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            times: default_times(),
            sigmas: default_sigmas(),
            seed: 0,
            samples: default_samples(),
            p: default_p(),
            pairs: default_pairs(),
            initial_state: default_initial(),
            choi_times: default_choi_times(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Check thresholds. Every value is multiplied by `scale` before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub scale: f64,
    pub stationarity: f64,
    pub davies_stationarity: f64,
    /// Lower bound for the negative control residual (not scaled).
    pub negative_control: f64,
    pub trace: f64,
    pub positivity: f64,
    pub contraction: f64,
    pub choi: f64,
    pub hermiticity: f64,
    pub dual_path: f64,
    pub functional_equation: f64,
    pub dissipativity: f64,
    pub adjoint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scale: 1.0,
            stationarity: 1e-9,
            davies_stationarity: 1e-12,
            negative_control: 1e-4,
            trace: 1e-10,
            positivity: 1e-9,
            contraction: 1e-9,
            choi: 1e-8,
            hermiticity: 1e-11,
            dual_path: 1e-8,
            functional_equation: 1e-9,
            dissipativity: 1e-10,
            adjoint: 1e-12,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 13] {
        [
            ("scale", self.scale),
            ("stationarity", self.stationarity),
            ("davies_stationarity", self.davies_stationarity),
            ("negative_control", self.negative_control),
            ("trace", self.trace),
            ("positivity", self.positivity),
            ("contraction", self.contraction),
            ("choi", self.choi),
            ("hermiticity", self.hermiticity),
            ("dual_path", self.dual_path),
            ("functional_equation", self.functional_equation),
            ("dissipativity", self.dissipativity),
            ("adjoint", self.adjoint),
        ]
    }

    pub fn scaled(&self, tol: f64) -> f64 {
        tol * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_format() -> Format {
    Format::Csv
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            format: default_format(),
            path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (&self.model.benchmark, &self.model.build) {
            (Some(name), None) if !BENCHMARKS.contains(&name.as_str()) => {
                return Err(CliError::Config(format!(
                    "unknown benchmark {name:?}; expected one of {BENCHMARKS:?}"
                )))
            }
            (Some(_), None) => {}
            (None, Some(Provenance::Explicit)) => {
                return Err(CliError::Config(
                    "explicit models cannot be rebuilt from a config".into(),
                ))
            }
            (None, Some(_)) => {}
            _ => {
                return Err(CliError::Config(
                    "model needs exactly one of `benchmark` or `build`".into(),
                ))
            }
        }
        if Phi::from_name(&self.weight.phi).is_none() {
            return Err(CliError::Config(format!(
                "unknown phi {:?}; expected gaussian, sech or exp_abs",
                self.weight.phi
            )));
        }
        if self.run.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!(
                "run.seed must be at most {} (TOML integers are 64-bit signed)",
                i64::MAX
            )));
        }
        positive("weight.sigma", self.weight.sigma)?;
        for (name, v) in self.run.tolerances.entries() {
            positive(&format!("run.tolerances.{name}"), v)?;
        }
        for &s in &self.run.sigmas {
            positive("run.sigmas", s)?;
        }
        if self.run.sigmas.is_empty() {
            return Err(CliError::Config("run.sigmas must not be empty".into()));
        }
        if !self.run.sigmas.windows(2).all(|w| w[1] < w[0]) {
            return Err(CliError::Config("run.sigmas must be strictly decreasing".into()));
        }
        check_times("run.times", &self.run.times)?;
        check_times("run.choi_times", &self.run.choi_times)?;
        if !(self.run.p >= 1.0) {
            return Err(CliError::Config("run.p must be at least 1".into()));
        }
        let localised = self.generator.kind == GeneratorKind::Localised;
        match self.weight.kind {
            WeightKind::Balanced | WeightKind::Shifted if !localised => {
                return Err(CliError::Config(
                    "davies generators need a KMS weight (glauber, metropolis or kms_phi)".into(),
                ))
            }
            WeightKind::Glauber | WeightKind::Metropolis | WeightKind::KmsPhi if localised => {
                return Err(CliError::Config(
                    "localised generators need a balanced or shifted weight".into(),
                ))
            }
            _ => {}
        }
        if self.weight.kind == WeightKind::Shifted && self.weight.shift.is_none() {
            return Err(CliError::Config("shifted weights need weight.shift".into()));
        }
        if self.weight.balance_broken && self.weight.kind != WeightKind::Balanced {
            return Err(CliError::Config(
                "balance_broken applies to balanced weights only".into(),
            ));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        let built = match (&self.model.benchmark, &self.model.build) {
            (Some(name), _) => benchmark(name),
            (None, Some(p)) => rebuild(p),
            (None, None) => unreachable!("validated"),
        };
        built.map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn phi(&self) -> Phi {
        Phi::from_name(&self.weight.phi).expect("validated")
    }

    /// Weight for the configured `σ`, or for `sigma` when given.
    pub fn build_weight(&self, sigma: Option<f64>) -> Result<WeightSpec, CliError> {
        let w = &self.weight;
        let s = sigma.unwrap_or(w.sigma);
        let built = match w.kind {
            WeightKind::Balanced if w.balance_broken => shifted_phi_gamma(self.phi(), s, 0.0),
            WeightKind::Balanced => balanced_gamma(self.phi(), s),
            WeightKind::Shifted => shifted_phi_gamma(self.phi(), s, w.shift.expect("validated")),
            WeightKind::Glauber => Ok(kms_gamma(KmsKind::Glauber)),
            WeightKind::Metropolis => Ok(kms_gamma(KmsKind::Metropolis)),
            WeightKind::KmsPhi => kms_from_phi(self.phi()),
        };
        built.map_err(|e| CliError::Config(format!("weight: {e}")))
    }

    /// Whether the configured weight is meant to satisfy the balance condition.
    pub fn expects_balance(&self) -> bool {
        match self.weight.kind {
            WeightKind::Balanced => !self.weight.balance_broken,
            WeightKind::Shifted => false,
            _ => true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_times(name: &str, times: &[f64]) -> Result<(), CliError> {
    if times.is_empty() {
        return Err(CliError::Config(format!("{name} must not be empty")));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CliError::Config(format!("{name} must be nonnegative and finite")));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(CliError::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}
