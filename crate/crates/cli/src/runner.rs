//! Executes a configuration: every expert alone, MGD and FMGD on the same
//! seeded stream, against one comparator, followed by the bound checks.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use metaoco::bench::{
    best_in_hindsight_linear, best_in_hindsight_square, square_loss, square_loss_scale, AdversarialStream,
    RegressionStream, Truncation,
};
use metaoco::geometry::Domain;
use metaoco::ledger::{median, RegretLedger, RoundRecord};
use metaoco::meta::{
    bandit_meta_bound, best_regularizer_bounds, decomposition_check, max_scale, omd_regret_bound,
    squint_meta_check, surrogate_regret_dominates, BoundCheck, MetaLearner, ScalePolicy,
};
use metaoco::optimizers::{Optimizer, StepSchedule};
use metaoco::regularizers::NormTag;
use serde::{Deserialize, Serialize};

use crate::config::{EngineName, ExperimentConfig, MetaChoice, ScalePolicyName, StreamKind, TruncationName};
use crate::CliError;

/// Largest clipped fraction of normalized losses accepted for a fixed `F`.
pub const MAX_CLIP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl From<BoundCheck> for CheckRecord {
    fn from(c: BoundCheck) -> Self {
        Self { name: c.name, lhs: c.lhs, rhs: c.rhs, holds: c.holds }
    }
}

/// Geometry of one expert as used in its regret bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertInfo {
    pub label: String,
    pub rho: f64,
    pub diameter: f64,
    pub norm: NormTag,
}

impl ExpertInfo {
    /// `L·√(2DT/ρ)` with `L` the largest dual gradient norm in `ledger`.
    pub fn omd_bound(&self, ledger: &RegretLedger<f64>) -> f64 {
        omd_regret_bound(ledger.max_grad_norm(self.norm), self.diameter, ledger.len(), self.rho)
    }
}

/// One expert rerun with its tuned fixed step on a frozen linear stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateOmd {
    pub label: String,
    pub lipschitz: f64,
    pub eta: f64,
    pub regret: f64,
    pub bound: f64,
}

/// Everything produced for one seed, ledgers included.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    /// Loss scale `F` (the analytic value, or the final running maximum).
    pub scale: f64,
    /// A-priori gradient bound `L` in ℓ₂ with `F ≤ L·D`.
    pub lipschitz: f64,
    pub experts: Vec<ExpertInfo>,
    pub expert_ledgers: Vec<RegretLedger<f64>>,
    pub mgd: Option<RegretLedger<f64>>,
    pub fmgd: Option<RegretLedger<f64>>,
    pub surrogate_omd: Vec<SurrogateOmd>,
    /// `(regret, 8F√(TK) + min_i ℬ_i)` or the exponential-weights analogue;
    /// an in-expectation bound, so it is checked on the seed mean.
    pub bandit_terms: Option<(f64, f64)>,
    pub checks: Vec<CheckRecord>,
}

impl SeedRun {
    pub fn ledgers(&self) -> impl Iterator<Item = &RegretLedger<f64>> {
        self.expert_ledgers.iter().chain(&self.mgd).chain(&self.fmgd)
    }

    /// Median per-round wall time of MGD over that of FMGD.
    pub fn timing_ratio(&self) -> Option<f64> {
        let med = |l: &RegretLedger<f64>| median(&l.wall_ns().iter().map(|&v| v as f64).collect::<Vec<_>>());
        let (m, f) = (med(self.mgd.as_ref()?)?, med(self.fmgd.as_ref()?)?);
        (f > 0.0).then(|| m / f)
    }
}

enum Source {
    Regression(Vec<(Vec<f64>, f64)>),
    Linear(Vec<Vec<f64>>),
}

impl Source {
    fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self, CliError> {
        let (d, t) = (cfg.domain.dim, cfg.horizon);
        Ok(match cfg.stream.kind {
            StreamKind::Regression => {
                let trunc = match cfg.stream.truncation {
                    TruncationName::Radial => Truncation::Radial,
                    TruncationName::Coordinate => Truncation::Coordinate,
                };
                Source::Regression(RegressionStream::new(seed, d, t, cfg.stream.trunc_radius, trunc)?.rounds()?)
            }
            StreamKind::Adversarial => {
                let s = AdversarialStream::unit(seed, d, cfg.stream.lipschitz)?;
                Source::Linear((1..=t).map(|r| s.round(r)).collect())
            }
        })
    }

    fn len(&self) -> usize {
        match self {
            Source::Regression(r) => r.len(),
            Source::Linear(v) => v.len(),
        }
    }

    fn eval(&self, t: usize, u: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Source::Regression(r) => square_loss(u, &r[t].0, r[t].1),
            Source::Linear(v) => (dot(&v[t], u), v[t].clone()),
        }
    }

    /// `(F, L)` from the first `warmup` rounds: `F` bounds `|⟨∇f(u), x⟩|` over
    /// all `u, x ∈ D`, `L` bounds `‖∇f(u)‖₂`.
    fn analytic_scale(&self, dom: &Domain<f64>, warmup: usize) -> (f64, f64) {
        let n = warmup.min(self.len());
        match self {
            Source::Regression(r) => {
                let f = square_loss_scale(dom, &r[..n]);
                let l = r[..n]
                    .iter()
                    .map(|(x, y)| 2.0 * (dom.max_abs_inner(x) + y.abs()) * norm2(x))
                    .fold(0.0, f64::max);
                (f, l)
            }
            Source::Linear(v) => {
                let f = v[..n].iter().map(|g| dom.max_abs_inner(g)).fold(0.0, f64::max);
                (f, v[..n].iter().map(|g| norm2(g)).fold(0.0, f64::max))
            }
        }
    }

    fn comparator(&self, dom: &Domain<f64>, tol: f64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let point = match self {
            Source::Regression(r) => best_in_hindsight_square(r, dom, tol)?,
            Source::Linear(v) => {
                let mut sum = vec![0.0; dom.dim()];
                for g in v {
                    for (s, x) in sum.iter_mut().zip(g) {
                        *s += x;
                    }
                }
                best_in_hindsight_linear(&sum, dom)
            }
        };
        let costs = (0..self.len()).map(|t| self.eval(t, &point).0).collect();
        Ok((point, costs))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

fn run_single(mut opt: Optimizer<f64>, label: &str, src: &Source) -> Result<RegretLedger<f64>, CliError> {
    let mut ledger = RegretLedger::new(label, opt.domain().dim(), None);
    for t in 0..src.len() {
        let start = Instant::now();
        let x = opt.predict().to_vec();
        let (cost, grad) = src.eval(t, &x);
        opt.step(&grad)?;
        let ns = elapsed_ns(start);
        ledger.push(RoundRecord::plain(x, cost, grad), ns)?;
    }
    ledger.set_oracle_calls(src.len());
    Ok(ledger)
}

fn run_meta(mut meta: MetaLearner<f64>, label: &str, src: &Source) -> Result<RegretLedger<f64>, CliError> {
    let k = (meta.mode() == metaoco::meta::MetaMode::Mgd).then_some(meta.k());
    let mut ledger = RegretLedger::new(label, meta.domain().dim(), k);
    let mut calls = 0usize;
    for t in 0..src.len() {
        let start = Instant::now();
        let mut oracle = |u: &[f64]| {
            calls += 1;
            Ok(src.eval(t, u))
        };
        let rec = meta.round(&mut oracle)?;
        let ns = elapsed_ns(start);
        ledger.push(rec, ns)?;
    }
    ledger.set_oracle_calls(calls);
    Ok(ledger)
}

/// Labels for the expert specs, made unique by suffixing repeats.
pub fn expert_labels(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in &cfg.experts {
        let base = e.label();
        let mut label = base.clone();
        let mut n = 2;
        while out.contains(&label) {
            label = format!("{base}-{n}");
            n += 1;
        }
        out.push(label);
    }
    out
}

pub fn mgd_label(cfg: &ExperimentConfig) -> String {
    format!("mgd-{}", cfg.mgd_engine.label())
}

pub fn fmgd_label(cfg: &ExperimentConfig) -> String {
    format!("fmgd-{}", cfg.fmgd_engine.label())
}

/// Reruns every expert with `η = √(2ρD)/(L√T)` on the gradients recorded in
/// `stream`, treated as linear costs, and compares its regret to `L√(2DT/ρ)`.
pub fn surrogate_omd_runs(
    cfg: &ExperimentConfig,
    infos: &[ExpertInfo],
    stream: &RegretLedger<f64>,
) -> Result<Vec<SurrogateOmd>, CliError> {
    let dom = cfg.domain()?;
    let t = stream.len();
    let best = best_in_hindsight_linear(stream.grad_sum(), &dom);
    let best_total = dot(stream.grad_sum(), &best);
    let mut out = Vec::new();
    for (spec, info) in cfg.experts.iter().zip(infos) {
        let l = stream.max_grad_norm(info.norm);
        if !(l > 0.0) {
            out.push(SurrogateOmd { label: info.label.clone(), lipschitz: 0.0, eta: 0.0, regret: 0.0, bound: 0.0 });
            continue;
        }
        let eta = (2.0 * info.rho * info.diameter).sqrt() / (l * (t as f64).sqrt());
        let reg = spec.regularizer()?;
        let mut opt = Optimizer::new(reg, dom.clone(), spec.mode.into(), StepSchedule::Fixed { eta })?;
        let mut total = 0.0;
        for r in 0..t {
            let g = stream.grad(r);
            total += dot(g, opt.predict());
            opt.step(g)?;
        }
        out.push(SurrogateOmd {
            label: info.label.clone(),
            lipschitz: l,
            eta,
            regret: total - best_total,
            bound: omd_regret_bound(l, info.diameter, t, info.rho),
        });
    }
    Ok(out)
}

/// Runs one seed of `cfg` entirely in memory.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun, CliError> {
    cfg.validate()?;
    let dom = cfg.domain()?;
    let src = Source::new(cfg, seed)?;
    let labels = expert_labels(cfg);
    let k = cfg.k();
    let t = cfg.horizon;

    let optimizers = cfg.experts.iter().map(|e| e.build(&dom)).collect::<Result<Vec<_>, _>>()?;
    let experts = optimizers
        .iter()
        .zip(&labels)
        .map(|(o, label)| {
            let sc = o.regularizer().strong_convexity(&dom);
            Ok(ExpertInfo {
                label: label.clone(),
                rho: sc.rho,
                diameter: ExperimentConfig::expert_diameter(o)?,
                norm: sc.norm,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let (analytic_f, analytic_l) = src.analytic_scale(&dom, cfg.scale.warmup);
    let policy = match cfg.scale.policy {
        ScalePolicyName::Analytic => {
            if !(analytic_f > 0.0) {
                return Err(CliError::Schema("scale: warmup rounds produced a zero loss scale".into()));
            }
            ScalePolicy::Fixed(analytic_f)
        }
        ScalePolicyName::RunningMax => ScalePolicy::RunningMax,
    };

    let mut expert_ledgers = Vec::new();
    if cfg.runs(MetaChoice::None) {
        for (o, label) in optimizers.iter().zip(&labels) {
            expert_ledgers.push(run_single(o.clone(), label, &src)?);
        }
    }
    let mut mgd = if cfg.runs(MetaChoice::Mgd) {
        let meta = MetaLearner::mgd(optimizers.clone(), cfg.mgd_engine.build(k, t)?, policy)?;
        Some(run_meta(meta, &mgd_label(cfg), &src)?)
    } else {
        None
    };
    let mut fmgd = if cfg.runs(MetaChoice::Fmgd) {
        let meta = MetaLearner::fmgd(optimizers, cfg.fmgd_engine.build(k, t)?, policy, seed)?;
        Some(run_meta(meta, &fmgd_label(cfg), &src)?)
    } else {
        None
    };

    let (point, costs) = src.comparator(&dom, cfg.comparator_tol)?;
    for l in expert_ledgers.iter_mut().chain(mgd.as_mut()).chain(fmgd.as_mut()) {
        l.finalize(&dom, point.clone(), costs.clone())?;
    }

    let (scale, lipschitz) = match policy {
        ScalePolicy::Fixed(f) => (f, analytic_l),
        ScalePolicy::RunningMax => {
            let all = expert_ledgers.iter().chain(&mgd).chain(&fmgd);
            let f = all.clone().map(max_scale).fold(0.0, f64::max);
            (f, all.map(|l| l.max_grad_norm(NormTag::L2)).fold(0.0, f64::max))
        }
    };

    let mut run = SeedRun {
        seed,
        scale,
        lipschitz,
        experts,
        expert_ledgers,
        mgd,
        fmgd,
        surrogate_omd: Vec::new(),
        bandit_terms: None,
        checks: Vec::new(),
    };
    run.checks = seed_checks(cfg, &mut run, &dom)?;
    Ok(run)
}

fn seed_checks(cfg: &ExperimentConfig, run: &mut SeedRun, dom: &Domain<f64>) -> Result<Vec<CheckRecord>, CliError> {
    let mut checks: Vec<CheckRecord> = Vec::new();
    let k = cfg.k();
    let t = cfg.horizon;
    checks.push(BoundCheck::new("loss scale F <= L*D", run.scale, run.lipschitz * dom.max_norm_l2()).into());
    for l in run.ledgers() {
        l.check_consistency()?;
        let mut c: CheckRecord = surrogate_regret_dominates(l)?.into();
        c.name = format!("{} [{}]", c.name, l.algorithm());
        checks.push(c);
        if l.oracle_calls() != t {
            return Err(CliError::Integrity(format!("{} made {} oracle calls in {t} rounds", l.algorithm(), l.oracle_calls())));
        }
    }
    let fixed_scale = cfg.scale.policy == ScalePolicyName::Analytic;
    if let Some(m) = &run.mgd {
        let regret = m.regret()?;
        for (i, info) in run.experts.iter().enumerate() {
            let mut c: CheckRecord = decomposition_check(m, i)?.into();
            c.name = format!("decomposition [{}]", info.label);
            checks.push(c);
            if cfg.mgd_engine.kind == EngineName::Squint {
                let mut c: CheckRecord = squint_meta_check(m, i)?.into();
                c.name = format!("squint meta bound [{}]", info.label);
                checks.push(c);
            }
            let (additive, _) = best_regularizer_bounds(
                max_scale(m),
                t,
                k,
                m.max_grad_norm(info.norm),
                info.diameter,
                info.rho,
            );
            checks.push(BoundCheck::new(format!("best-regularizer additive bound [{}]", info.label), regret, additive).into());
        }
        let best = run
            .experts
            .iter()
            .map(|info| best_regularizer_bounds(0.0, t, k, m.max_grad_norm(info.norm), info.diameter, info.rho).1)
            .fold(f64::INFINITY, f64::min);
        checks.push(BoundCheck::new("best-regularizer multiplicative bound", regret, best).into());
        if cfg.mgd_engine.kind == EngineName::Hedge {
            checks.push(hedge_check(m)?);
        }
        if fixed_scale {
            checks.push(BoundCheck::new(format!("clip fraction [{}]", m.algorithm()), m.clip_fraction(), MAX_CLIP_FRACTION).into());
        }
    }
    if let Some(f) = &run.fmgd {
        let tsallis = cfg.fmgd_engine.kind == EngineName::Gbpa;
        let oco = run.experts.iter().map(|info| info.omd_bound(f)).fold(f64::INFINITY, f64::min);
        run.bandit_terms = Some((f.regret()?, bandit_meta_bound(max_scale(f), t, k, tsallis) + oco));
        if fixed_scale {
            checks.push(BoundCheck::new(format!("clip fraction [{}]", f.algorithm()), f.clip_fraction(), MAX_CLIP_FRACTION).into());
        }
    }
    if cfg.surrogate_omd_check {
        let stream = run.mgd.as_ref().or(run.expert_ledgers.first()).or(run.fmgd.as_ref());
        if let Some(stream) = stream {
            run.surrogate_omd = surrogate_omd_runs(cfg, &run.experts, stream)?;
            for s in &run.surrogate_omd {
                checks.push(BoundCheck::new(format!("omd bound on surrogate stream [{}]", s.label), s.regret, s.bound).into());
            }
        }
    }
    Ok(checks)
}

/// Hedge's regret on the normalized losses against its best arm, versus
/// `2√(T ln K)`.
fn hedge_check(m: &RegretLedger<f64>) -> Result<CheckRecord, CliError> {
    let k = m.experts().unwrap_or(1);
    let mut totals = vec![0.0; k];
    for t in 0..m.len() {
        if let Some(l) = m.expert_losses(t) {
            for (s, v) in totals.iter_mut().zip(l) {
                *s += v;
            }
        }
    }
    let mixed: f64 = m.mixed_losses().iter().sum();
    let best = totals.iter().cloned().fold(f64::INFINITY, f64::min);
    let rhs = 2.0 * (m.len() as f64 * (k as f64).ln()).sqrt();
    Ok(BoundCheck::new("hedge regret on normalized losses", mixed - best, rhs).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub final_cum_loss: f64,
    pub final_regret: f64,
    pub final_avg_regret: f64,
    pub oracle_calls: usize,
    pub clipped: usize,
    pub losses_formed: usize,
    pub median_round_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub scale: f64,
    pub lipschitz: f64,
    pub algorithms: Vec<AlgorithmSummary>,
    pub surrogate_omd: Vec<SurrogateOmd>,
    pub bandit_terms: Option<(f64, f64)>,
    pub timing_ratio: Option<f64>,
    pub checks: Vec<CheckRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub version: String,
    pub horizon: usize,
    pub k: usize,
    pub seeds: Vec<SeedSummary>,
    /// Checks on seed means (in-expectation bounds).
    pub aggregate_checks: Vec<CheckRecord>,
    /// Median over seeds of the per-seed MGD/FMGD timing ratio.
    pub timing_ratio: Option<f64>,
    pub all_checks_hold: bool,
}

impl SeedRun {
    pub fn summary(&self, record_timing: bool) -> Result<SeedSummary, CliError> {
        let algorithms = self
            .ledgers()
            .map(|l| {
                let n = l.len();
                let regret = l.regret()?;
                let wall: Vec<f64> = l.wall_ns().iter().map(|&v| v as f64 / 1e6).collect();
                Ok(AlgorithmSummary {
                    algorithm: l.algorithm().to_string(),
                    final_cum_loss: l.costs().iter().sum(),
                    final_regret: regret,
                    final_avg_regret: regret / n as f64,
                    oracle_calls: l.oracle_calls(),
                    clipped: l.clipped(),
                    losses_formed: l.losses_formed(),
                    median_round_ms: if record_timing { median(&wall).unwrap_or(0.0) } else { 0.0 },
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(SeedSummary {
            seed: self.seed,
            scale: self.scale,
            lipschitz: self.lipschitz,
            algorithms,
            surrogate_omd: self.surrogate_omd.clone(),
            bandit_terms: self.bandit_terms,
            timing_ratio: if record_timing { self.timing_ratio() } else { None },
            checks: self.checks.clone(),
        })
    }

    /// Writes one CSV per algorithm into `dir`.
    pub fn write_csvs(&self, dir: &Path, record_timing: bool) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for l in self.ledgers() {
            let path = dir.join(format!("{}.csv", l.algorithm()));
            let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            l.write_csv(BufWriter::new(file), record_timing)?;
        }
        Ok(())
    }
}

/// Seed-mean check of the bandit meta bound.
pub fn aggregate_checks(cfg: &ExperimentConfig, seeds: &[SeedSummary]) -> Vec<CheckRecord> {
    let terms: Vec<(f64, f64)> = seeds.iter().filter_map(|s| s.bandit_terms).collect();
    if terms.is_empty() {
        return Vec::new();
    }
    let n = terms.len() as f64;
    let lhs = terms.iter().map(|t| t.0).sum::<f64>() / n;
    let rhs = terms.iter().map(|t| t.1).sum::<f64>() / n;
    let name = match cfg.fmgd_engine.kind {
        EngineName::Gbpa => "bandit meta bound, seed mean [gbpa]",
        _ => "bandit meta bound, seed mean [exp3]",
    };
    vec![BoundCheck::new(name, lhs, rhs).into()]
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs every seed of `cfg`, writing into `dir`:
///
/// * `config.toml`: the resolved configuration,
/// * `VERSION`: the library version,
/// * `seed-<s>/<algorithm>.csv`: one ledger per algorithm and seed,
/// * `summary.json`: final regrets, bound checks, oracle and clip counts.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml()?)?;
    write_text(&dir.join("VERSION"), &format!("metaoco {}\n", metaoco::VERSION))?;
    let mut seeds = Vec::new();
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, seed)?;
        run.write_csvs(&dir.join(format!("seed-{seed}")), cfg.record_timing)?;
        seeds.push(run.summary(cfg.record_timing)?);
    }
    let aggregate = aggregate_checks(cfg, &seeds);
    let ratios: Vec<f64> = seeds.iter().filter_map(|s| s.timing_ratio).collect();
    let all = seeds.iter().flat_map(|s| &s.checks).chain(&aggregate).all(|c| c.holds);
    let summary = RunSummary {
        name: cfg.name.clone(),
        version: metaoco::VERSION.to_string(),
        horizon: cfg.horizon,
        k: cfg.k(),
        seeds,
        aggregate_checks: aggregate,
        timing_ratio: median(&ratios),
        all_checks_hold: all,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&dir.join("summary.json"), &json)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSummary {
    pub dim: usize,
    pub horizon: usize,
    pub lipschitz: f64,
    pub diameter: f64,
    pub seeds: usize,
    pub mean_regret: f64,
    pub predicted_floor: f64,
    /// Whether `mean_regret ≥ 0.5·predicted_floor`.
    pub holds: bool,
}

/// Tuned OGD against random signed axes over `cfg.seeds.len()` seeds
/// (starting at the first listed seed); writes `lowerbound.json` into `dir`.
pub fn lowerbound(cfg: &ExperimentConfig, dir: &Path) -> Result<LowerBoundSummary, CliError> {
    cfg.validate()?;
    let dom = cfg.domain()?;
    let res = metaoco::bench::lower_bound_check(&dom, cfg.stream.lipschitz, cfg.horizon, cfg.seeds.len(), cfg.seeds[0])?;
    let summary = LowerBoundSummary {
        dim: dom.dim(),
        horizon: cfg.horizon,
        lipschitz: cfg.stream.lipschitz,
        diameter: dom.diameter_l2(),
        seeds: res.seeds,
        mean_regret: res.mean_regret,
        predicted_floor: res.predicted_floor,
        holds: res.holds(),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml()?)?;
    write_text(&dir.join("VERSION"), &format!("metaoco {}\n", metaoco::VERSION))?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&dir.join("lowerbound.json"), &json)?;
    Ok(summary)
}
