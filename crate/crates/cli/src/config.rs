//! Experiment configuration, its TOML form, validation and presets.

use std::path::{Path, PathBuf};

use metaoco::experts::{default_exp3_eta, default_gbpa_eta, default_hedge_eta, ExpertKind, ExpertState};
use metaoco::geometry::Domain;
use metaoco::optimizers::{Optimizer, StepSchedule, UpdateMode};
use metaoco::regularizers::{DiameterMode, Regularizer};
use metaoco::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Relative to the output root; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub domain: DomainSpec,
    pub experts: Vec<ExpertSpec>,
    /// Which algorithms to run: each expert alone, MGD, FMGD.
    pub meta: Vec<MetaChoice>,
    #[serde(default = "EngineSpec::squint")]
    pub mgd_engine: EngineSpec,
    #[serde(default = "EngineSpec::exp3")]
    pub fmgd_engine: EngineSpec,
    pub stream: StreamSpec,
    #[serde(default)]
    pub scale: ScaleSpec,
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Evaluate each expert with its tuned fixed step on the MGD gradient
    /// stream and check the mirror descent regret bound.
    #[serde(default = "default_true")]
    pub surrogate_omd_check: bool,
    #[serde(default = "default_comparator_tol")]
    pub comparator_tol: f64,
}

fn default_true() -> bool {
    true
}

fn default_comparator_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKindSpec {
    Simplex,
    Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKindSpec,
    pub dim: usize,
    /// Ball radius, 1 when absent; ignored for the simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Ball center, the origin when absent; ignored for the simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerName {
    Quadratic,
    NegEntropy,
    Hypentropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Agile,
    LazyIterative,
    LazyClosedForm,
    Ogd,
}

impl From<ModeName> for UpdateMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Agile => UpdateMode::Agile,
            ModeName::LazyIterative => UpdateMode::LazyIterative,
            ModeName::LazyClosedForm => UpdateMode::LazyClosedForm,
            ModeName::Ogd => UpdateMode::Ogd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertSpec {
    pub regularizer: RegularizerName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    /// Fixed step size; the anytime schedule with adaptive `L` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Starting point `x₀`; the regularizer's default basepoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<Vec<f64>>,
}

fn default_mode() -> ModeName {
    ModeName::LazyClosedForm
}

impl ExpertSpec {
    pub fn new(regularizer: RegularizerName, beta: Option<f64>) -> Self {
        Self { regularizer, beta, mode: default_mode(), eta: None, basepoint: None }
    }

    pub fn regularizer(&self) -> Result<Regularizer<f64>, CoreError> {
        match self.regularizer {
            RegularizerName::Quadratic => Ok(Regularizer::quadratic()),
            RegularizerName::NegEntropy => Ok(Regularizer::neg_entropy()),
            RegularizerName::Hypentropy => Regularizer::hypentropy(self.beta.unwrap_or(f64::NAN)),
        }
    }

    /// Short label used for CSV rows and file names.
    pub fn label(&self) -> String {
        let base = match self.regularizer {
            RegularizerName::Quadratic => "quadratic".to_string(),
            RegularizerName::NegEntropy => "neg-entropy".to_string(),
            RegularizerName::Hypentropy => format!("hypentropy-b{}", self.beta.unwrap_or(f64::NAN)),
        };
        let prefix = if self.mode == ModeName::Ogd { "ogd" } else { "omd" };
        match self.eta {
            Some(eta) => format!("{prefix}-{base}-eta{eta}"),
            None => format!("{prefix}-{base}"),
        }
    }

    pub fn build(&self, dom: &Domain<f64>) -> Result<Optimizer<f64>, CoreError> {
        let reg = self.regularizer()?;
        let mode = self.mode.into();
        match (self.eta, self.basepoint.clone()) {
            (None, None) => Optimizer::anytime(reg, dom.clone(), mode, 1.0),
            (None, Some(x0)) => Optimizer::anytime_at(reg, dom.clone(), mode, 1.0, x0),
            (Some(eta), None) => Optimizer::new(reg, dom.clone(), mode, StepSchedule::Fixed { eta }),
            (Some(eta), Some(x0)) => Optimizer::with_basepoint(reg, dom.clone(), mode, StepSchedule::Fixed { eta }, x0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaChoice {
    /// Every expert run on its own as a baseline.
    None,
    Mgd,
    Fmgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineName {
    Hedge,
    Squint,
    Exp3,
    Gbpa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSpec {
    pub kind: EngineName,
    /// Learning rate; the horizon-tuned default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Tsallis exponent for GBPA (default ½).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl EngineSpec {
    pub fn squint() -> Self {
        Self { kind: EngineName::Squint, eta: None, alpha: None }
    }

    pub fn exp3() -> Self {
        Self { kind: EngineName::Exp3, eta: None, alpha: None }
    }

    pub fn gbpa() -> Self {
        Self { kind: EngineName::Gbpa, eta: None, alpha: Some(0.5) }
    }

    pub fn is_bandit(&self) -> bool {
        matches!(self.kind, EngineName::Exp3 | EngineName::Gbpa)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.5)
    }

    pub fn kind(&self, k: usize, horizon: usize) -> ExpertKind<f64> {
        match self.kind {
            EngineName::Hedge => ExpertKind::Hedge { eta: self.eta.unwrap_or_else(|| default_hedge_eta(k, horizon)) },
            EngineName::Squint => ExpertKind::Squint { eta: self.eta.unwrap_or(0.5), prior: vec![1.0 / k as f64; k] },
            EngineName::Exp3 => ExpertKind::Exp3 { eta: self.eta.unwrap_or_else(|| default_exp3_eta(k, horizon)) },
            EngineName::Gbpa => {
                let alpha = self.alpha();
                ExpertKind::Gbpa { eta: self.eta.unwrap_or_else(|| default_gbpa_eta(k, horizon, alpha)), alpha }
            }
        }
    }

    pub fn build(&self, k: usize, horizon: usize) -> Result<ExpertState<f64>, CoreError> {
        ExpertState::new(self.kind(k, horizon), k)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            EngineName::Hedge => "hedge",
            EngineName::Squint => "squint",
            EngineName::Exp3 => "exp3",
            EngineName::Gbpa => "gbpa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    Regression,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationName {
    Radial,
    Coordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub kind: StreamKind,
    #[serde(default = "one")]
    pub trunc_radius: f64,
    #[serde(default = "radial")]
    pub truncation: TruncationName,
    /// Gradient norm of the adversarial linear stream.
    #[serde(default = "one")]
    pub lipschitz: f64,
}

fn one() -> f64 {
    1.0
}

fn radial() -> TruncationName {
    TruncationName::Radial
}

impl StreamSpec {
    pub fn regression() -> Self {
        Self { kind: StreamKind::Regression, trunc_radius: 1.0, truncation: TruncationName::Radial, lipschitz: 1.0 }
    }

    pub fn adversarial(lipschitz: f64) -> Self {
        Self { kind: StreamKind::Adversarial, trunc_radius: 1.0, truncation: TruncationName::Radial, lipschitz }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalePolicyName {
    /// `F` fixed before the run from a warmup of the stream.
    Analytic,
    RunningMax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub policy: ScalePolicyName,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

fn default_warmup() -> usize {
    100
}

impl Default for ScaleSpec {
    fn default() -> Self {
        Self { policy: ScalePolicyName::Analytic, warmup: default_warmup() }
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.experts.len()
    }

    pub fn domain(&self) -> Result<Domain<f64>, CliError> {
        let dom = match self.domain.kind {
            DomainKindSpec::Simplex => Domain::simplex(self.domain.dim),
            DomainKindSpec::Ball => Domain::l2_ball(
                self.domain.center.clone().unwrap_or_else(|| vec![0.0; self.domain.dim]),
                self.domain.radius.unwrap_or(1.0),
            ),
        };
        dom.map_err(|e| schema(format!("domain: {e}")))
    }

    pub fn runs(&self, choice: MetaChoice) -> bool {
        self.meta.contains(&choice)
    }

    /// Checks the invariants the runner relies on; errors name the field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(schema("name: must be a non-empty plain file name"));
        }
        if self.horizon == 0 {
            return Err(schema("horizon: must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(schema("seeds: need at least one seed"));
        }
        if self.experts.is_empty() {
            return Err(schema("experts: need at least one expert (K ≥ 1)"));
        }
        if self.meta.is_empty() {
            return Err(schema("meta: choose at least one of none, mgd, fmgd"));
        }
        if self.domain.dim == 0 {
            return Err(schema("domain.dim: must be at least 1"));
        }
        if let Some(r) = self.domain.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(schema("domain.radius: must be positive"));
            }
        }
        if let Some(c) = &self.domain.center {
            if c.len() != self.domain.dim || c.iter().any(|v| !v.is_finite()) {
                return Err(schema("domain.center: needs dim finite entries"));
            }
        }
        let dom = self.domain()?;
        for (i, e) in self.experts.iter().enumerate() {
            match (e.regularizer, e.beta) {
                (RegularizerName::Hypentropy, Some(b)) if b > 0.0 && b.is_finite() => {}
                (RegularizerName::Hypentropy, _) => {
                    return Err(schema(format!("experts[{i}].beta: hypentropy needs β > 0")));
                }
                (_, Some(_)) => return Err(schema(format!("experts[{i}].beta: only hypentropy takes β"))),
                (_, None) => {}
            }
            if let Some(eta) = e.eta {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(schema(format!("experts[{i}].eta: must be positive")));
                }
            }
            if self.runs(MetaChoice::Fmgd) && e.mode != ModeName::LazyClosedForm {
                return Err(schema(format!("experts[{i}].mode: fmgd needs lazy-closed-form experts")));
            }
            e.build(&dom).map_err(|err| match err {
                CoreError::UnsupportedPair { .. } => CliError::Core(err),
                other => schema(format!("experts[{i}]: {other}")),
            })?;
        }
        if self.mgd_engine.is_bandit() {
            return Err(schema("mgd_engine.kind: mgd needs hedge or squint"));
        }
        if !self.fmgd_engine.is_bandit() {
            return Err(schema("fmgd_engine.kind: fmgd needs exp3 or gbpa"));
        }
        for (field, spec) in [("mgd_engine", &self.mgd_engine), ("fmgd_engine", &self.fmgd_engine)] {
            if let Some(eta) = spec.eta {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(schema(format!("{field}.eta: must be positive")));
                }
            }
            if let Some(a) = spec.alpha {
                if spec.kind != EngineName::Gbpa {
                    return Err(schema(format!("{field}.alpha: only gbpa takes α")));
                }
                if !(a > 0.0 && a < 1.0) {
                    return Err(schema(format!("{field}.alpha: must lie in (0, 1)")));
                }
            }
        }
        let s = &self.stream;
        if !(s.trunc_radius > 0.0 && s.trunc_radius.is_finite()) {
            return Err(schema("stream.trunc_radius: must be positive"));
        }
        if !(s.lipschitz > 0.0 && s.lipschitz.is_finite()) {
            return Err(schema("stream.lipschitz: must be positive"));
        }
        if self.scale.policy == ScalePolicyName::Analytic && self.scale.warmup == 0 {
            return Err(schema("scale.warmup: analytic scale needs at least one warmup round"));
        }
        if !(self.comparator_tol > 0.0) {
            return Err(schema("comparator_tol: must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| schema(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or a preset when `arg` names one and no such
    /// file exists.
    pub fn load(arg: &Path) -> Result<Self, CliError> {
        if !arg.exists() {
            if let Some(p) = arg.to_str().and_then(preset) {
                return Ok(p);
            }
        }
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::Io(format!("{}: {e}", arg.display())))?;
        Self::from_toml(&text)
    }

    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(self.output_dir.clone().unwrap_or_else(|| PathBuf::from(&self.name)))
    }

    /// Analytic Bregman diameter when available, sampled otherwise.
    pub fn expert_diameter(opt: &Optimizer<f64>) -> Result<f64, CoreError> {
        let reg = opt.regularizer();
        match reg.diameter(opt.domain(), opt.basepoint(), DiameterMode::Analytic) {
            Ok(d) => Ok(d.value),
            Err(CoreError::UnsupportedPair { .. }) => {
                Ok(reg.diameter(opt.domain(), opt.basepoint(), DiameterMode::Sampled { samples: 10_000, seed: 0 })?.value)
            }
            Err(e) => Err(e),
        }
    }
}

pub const PRESETS: [&str; 2] = ["paper-simplex", "paper-ball"];

/// Built-in configurations: the simplex family (eight hypentropy β from
/// 2⁻⁵ to 2², quadratic and negative entropy) and the ball family (eight
/// hypentropy β from 2⁻⁴ to 2³ and quadratic), each at d = 20, T = 20 000
/// over 20 seeds.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let (kind, exps) = match name {
        "paper-simplex" => (DomainKindSpec::Simplex, -5..=2),
        "paper-ball" => (DomainKindSpec::Ball, -4..=3),
        _ => return None,
    };
    let mut experts: Vec<ExpertSpec> =
        exps.map(|e| ExpertSpec::new(RegularizerName::Hypentropy, Some(2f64.powi(e)))).collect();
    experts.push(ExpertSpec::new(RegularizerName::Quadratic, None));
    if kind == DomainKindSpec::Simplex {
        experts.push(ExpertSpec::new(RegularizerName::NegEntropy, None));
    }
    Some(ExperimentConfig {
        name: name.to_string(),
        horizon: 20_000,
        seeds: (0..20).collect(),
        output_dir: None,
        domain: DomainSpec { kind, dim: 20, radius: None, center: None },
        experts,
        meta: vec![MetaChoice::None, MetaChoice::Mgd, MetaChoice::Fmgd],
        mgd_engine: EngineSpec::squint(),
        fmgd_engine: EngineSpec::exp3(),
        stream: StreamSpec::regression(),
        scale: ScaleSpec::default(),
        record_timing: true,
        surrogate_omd_check: true,
        comparator_tol: default_comparator_tol(),
    })
}
