//! Meta-learning over a family of online optimizers.
//!
//! Every round the meta-learner plays a point built from its optimizers'
//! predictions, queries the cost once, linearizes it into the surrogate
//! `f̂_t(x) = ⟨∇_t, x⟩`, and scores each optimizer by the normalized loss
//! `ℓ_t(i) = f̂_t(x_t^i)/(2F) + ½`, which lies in `[0, 1]` whenever
//! `|f̂_t| ≤ F`. An expert-advice engine turns those scores into weights.
//!
//! * [`MetaMode::Mgd`]: full feedback. Plays the weighted mixture of all
//!   predictions and feeds the whole loss vector to Squint or Hedge.
//! * [`MetaMode::Fmgd`]: bandit feedback. Samples one optimizer, evaluates
//!   only its lazy closed form from a shared gradient sum, and feeds the one
//!   observed loss to EXP3 or GBPA.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experts::ExpertState;
use crate::geometry::Domain;
use crate::ledger::{RegretLedger, RoundRecord};
use crate::optimizers::{Optimizer, UpdateMode};
use crate::regularizers::NormTag;
use crate::scalar::{dot, norm2, norm_inf, Scalar};

/// One round's linearized cost.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateLoss<'a, S> {
    pub grad: &'a [S],
    /// Bound `F` on `|⟨∇, x⟩|` over the domain.
    pub scale: S,
}

impl<S: Scalar> SurrogateLoss<'_, S> {
    pub fn value_at(&self, x: &[S]) -> S {
        dot(self.grad, x)
    }

    /// `⟨∇, x⟩/(2F) + ½` clipped into `[0, 1]`, and whether clipping happened.
    pub fn normalized(&self, x: &[S]) -> (S, bool) {
        normalize(self.value_at(x), self.scale)
    }
}

fn normalize<S: Scalar>(raw: S, scale: S) -> (S, bool) {
    let half = S::lit(0.5);
    if !(scale > S::zero()) {
        return (half, raw != S::zero());
    }
    let l = raw / (S::lit(2.0) * scale) + half;
    if l < S::zero() {
        (S::zero(), true)
    } else if l > S::one() {
        (S::one(), true)
    } else {
        (l, false)
    }
}

/// How the loss scale `F` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalePolicy<S> {
    /// A constant fixed before the run; out-of-range losses are clipped.
    Fixed(S),
    /// `F_t = max_{s ≤ t} sup_{x ∈ D} |⟨∇_s, x⟩|`, so nothing is ever clipped.
    RunningMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMode {
    Mgd,
    Fmgd,
}

impl MetaMode {
    pub fn name(self) -> &'static str {
        match self {
            MetaMode::Mgd => "mgd",
            MetaMode::Fmgd => "fmgd",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetaLearner<S> {
    mode: MetaMode,
    dom: Domain<S>,
    optimizers: Vec<Optimizer<S>>,
    expert: ExpertState<S>,
    policy: ScalePolicy<S>,
    scale: S,
    rng: ChaCha8Rng,
    grad_sum: Vec<S>,
    t: usize,
    max_l2: S,
    max_linf: S,
    oracle_calls: usize,
}

/// Stream id reserved for arm sampling, disjoint from per-round data streams.
const ARM_STREAM: u64 = u64::MAX;

impl<S: Scalar> MetaLearner<S> {
    fn build(mode: MetaMode, optimizers: Vec<Optimizer<S>>, expert: ExpertState<S>, policy: ScalePolicy<S>, seed: u64) -> Result<Self> {
        let first = optimizers.first().ok_or_else(|| Error::Config("need at least one optimizer".into()))?;
        let dom = first.domain().clone();
        if optimizers.iter().any(|o| o.domain() != &dom) {
            return Err(Error::Config("all optimizers must share one domain".into()));
        }
        if expert.k() != optimizers.len() {
            return Err(Error::Config(format!("expert engine has {} arms for {} optimizers", expert.k(), optimizers.len())));
        }
        let scale = match policy {
            ScalePolicy::Fixed(f) if f > S::zero() && f.is_finite() => f,
            ScalePolicy::Fixed(f) => return Err(Error::Config(format!("loss scale must be positive, got {f}"))),
            ScalePolicy::RunningMax => S::zero(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ARM_STREAM);
        Ok(Self {
            mode,
            grad_sum: vec![S::zero(); dom.dim()],
            dom,
            optimizers,
            expert,
            policy,
            scale,
            rng,
            t: 0,
            max_l2: S::zero(),
            max_linf: S::zero(),
            oracle_calls: 0,
        })
    }

    /// Full-feedback meta-learner; `expert` must be Hedge or Squint.
    pub fn mgd(optimizers: Vec<Optimizer<S>>, expert: ExpertState<S>, policy: ScalePolicy<S>) -> Result<Self> {
        if expert.kind().is_bandit() {
            return Err(Error::Config("MGD needs a full-feedback expert engine".into()));
        }
        Self::build(MetaMode::Mgd, optimizers, expert, policy, 0)
    }

    /// Bandit-feedback meta-learner; `expert` must be EXP3 or GBPA and every
    /// optimizer lazy closed form. `seed` drives arm sampling.
    pub fn fmgd(optimizers: Vec<Optimizer<S>>, expert: ExpertState<S>, policy: ScalePolicy<S>, seed: u64) -> Result<Self> {
        if !expert.kind().is_bandit() {
            return Err(Error::Config("FMGD needs a bandit expert engine".into()));
        }
        if let Some(o) = optimizers.iter().find(|o| o.mode() != UpdateMode::LazyClosedForm) {
            return Err(Error::WrongMode { expected: UpdateMode::LazyClosedForm.name(), actual: o.mode().name() });
        }
        Self::build(MetaMode::Fmgd, optimizers, expert, policy, seed)
    }

    pub fn mode(&self) -> MetaMode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.optimizers.len()
    }

    pub fn domain(&self) -> &Domain<S> {
        &self.dom
    }

    pub fn optimizers(&self) -> &[Optimizer<S>] {
        &self.optimizers
    }

    pub fn expert(&self) -> &ExpertState<S> {
        &self.expert
    }

    pub fn weights(&self) -> &[S] {
        self.expert.weights()
    }

    /// Current loss scale `F`.
    pub fn scale(&self) -> S {
        self.scale
    }

    pub fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    fn query<F>(&mut self, x: &[S], oracle: &mut F) -> Result<(S, Vec<S>)>
    where
        F: FnMut(&[S]) -> Result<(S, Vec<S>)>,
    {
        self.oracle_calls += 1;
        let (cost, grad) = oracle(x)?;
        if grad.len() != self.dom.dim() {
            return Err(Error::InvalidInput("oracle gradient has wrong dimension".into()));
        }
        if let ScalePolicy::RunningMax = self.policy {
            self.scale = self.scale.max(self.dom.max_abs_inner(&grad));
        }
        Ok((cost, grad))
    }

    /// One round in whichever mode this learner was built for.
    pub fn round<F>(&mut self, oracle: &mut F) -> Result<RoundRecord<S>>
    where
        F: FnMut(&[S]) -> Result<(S, Vec<S>)>,
    {
        match self.mode {
            MetaMode::Mgd => self.mgd_round(oracle),
            MetaMode::Fmgd => self.fmgd_round(oracle),
        }
    }

    /// Plays `Σ p(a)·x^a`, queries the cost once, scores every optimizer and
    /// passes the gradient to all of them.
    pub fn mgd_round<F>(&mut self, oracle: &mut F) -> Result<RoundRecord<S>>
    where
        F: FnMut(&[S]) -> Result<(S, Vec<S>)>,
    {
        if self.mode != MetaMode::Mgd {
            return Err(Error::WrongMode { expected: "mgd", actual: self.mode.name() });
        }
        let d = self.dom.dim();
        let weights = self.expert.weights().to_vec();
        let mut play = vec![S::zero(); d];
        for (o, &p) in self.optimizers.iter().zip(&weights) {
            for (x, &xi) in play.iter_mut().zip(o.predict()) {
                *x = *x + p * xi;
            }
        }
        if !self.dom.contains(&play, S::lit(1e-9)) {
            return Err(Error::Invariant("mixture left the domain".into()));
        }
        let (cost, grad) = self.query(&play, oracle)?;
        let loss = SurrogateLoss { grad: &grad, scale: self.scale };
        let surrogates: Vec<S> = self.optimizers.iter().map(|o| loss.value_at(o.predict())).collect();
        let mut clipped = 0;
        let losses: Vec<S> = surrogates
            .iter()
            .map(|&s| {
                let (l, c) = normalize(s, self.scale);
                clipped += c as usize;
                l
            })
            .collect();
        let mixed: S = weights.iter().zip(&losses).map(|(&p, &l)| p * l).sum();
        self.expert.update_full(&losses)?;
        for o in &mut self.optimizers {
            o.step(&grad)?;
        }
        self.t += 1;
        let k = self.k();
        Ok(RoundRecord {
            surrogate: dot(&grad, &play),
            play,
            cost,
            grad,
            expert_surrogates: Some(surrogates),
            expert_losses: Some(losses),
            mixed_loss: Some(mixed),
            arm: None,
            scale: Some(self.scale),
            clipped,
            losses_formed: k,
        })
    }

    /// Samples one optimizer, plays its closed-form prediction from the shared
    /// gradient sum, queries the cost once and updates the bandit engine.
    pub fn fmgd_round<F>(&mut self, oracle: &mut F) -> Result<RoundRecord<S>>
    where
        F: FnMut(&[S]) -> Result<(S, Vec<S>)>,
    {
        if self.mode != MetaMode::Fmgd {
            return Err(Error::WrongMode { expected: "fmgd", actual: self.mode.name() });
        }
        let arm = self.expert.sample_arm(&mut self.rng);
        let lipschitz = match self.optimizers[arm].dual_norm() {
            NormTag::L1 => self.max_linf,
            NormTag::L2 => self.max_l2,
        };
        let play = self.optimizers[arm].closed_form_from_shared(&self.grad_sum, self.t, lipschitz)?;
        let (cost, grad) = self.query(&play, oracle)?;
        let surrogate = dot(&grad, &play);
        let (l, clipped) = normalize(surrogate, self.scale);
        self.expert.update_bandit(arm, l)?;
        for (s, &g) in self.grad_sum.iter_mut().zip(&grad) {
            *s = *s + g;
        }
        self.max_l2 = self.max_l2.max(norm2(&grad));
        self.max_linf = self.max_linf.max(norm_inf(&grad));
        self.t += 1;
        Ok(RoundRecord {
            play,
            cost,
            grad,
            surrogate,
            expert_surrogates: None,
            expert_losses: None,
            mixed_loss: Some(l),
            arm: Some(arm),
            scale: Some(self.scale),
            clipped: clipped as usize,
            losses_formed: 1,
        })
    }
}

/// Outcome of evaluating one inequality `lhs ≤ rhs` on a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), holds: lhs <= rhs, lhs, rhs }
    }

    /// As [`Self::new`] with an allowance for rounding in long sums whose
    /// absolute terms add up to `magnitude` over `terms` additions.
    pub fn with_rounding(name: impl Into<String>, lhs: f64, rhs: f64, magnitude: f64, terms: usize) -> Self {
        let allowance = terms.max(1) as f64 * f64::EPSILON * magnitude;
        Self { name: name.into(), holds: lhs <= rhs + allowance, lhs, rhs }
    }
}

/// Checks `Σ f_t(x_t) − Σ f_t(x*) ≤ Σ ⟨∇_t, x_t − x*⟩`, which holds for convex
/// costs; equality for linear ones.
pub fn surrogate_regret_dominates<S: Scalar>(ledger: &RegretLedger<S>) -> Result<BoundCheck> {
    let c = ledger.require_comparator()?;
    let regret = ledger.regret()?.as_f64();
    let surrogate = ledger.surrogates().iter().map(|s| s.as_f64()).sum::<f64>() - c.surrogate_total.as_f64();
    let magnitude: f64 = ledger
        .costs()
        .iter()
        .chain(ledger.comparator_costs())
        .chain(ledger.surrogates())
        .map(|v| v.as_f64().abs())
        .sum::<f64>()
        + c.surrogate_total.as_f64().abs();
    Ok(BoundCheck::with_rounding("surrogate regret dominates regret", regret, surrogate, magnitude, ledger.len()))
}

/// The two terms of `ℛ_T ≤ 2F·ℛ_T^A + ℛ_T^{(i)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretDecomposition<S> {
    /// `Σ_t 2F_t(⟨p_t, ℓ_t⟩ − ℓ_t(i))`: the expert engine's regret against
    /// arm `i` in surrogate units.
    pub meta_term: S,
    /// `Σ_t ⟨∇_t, x_t^i⟩ − min_{x ∈ D} ⟨S_T, x⟩`: optimizer `i`'s regret on
    /// the surrogate stream.
    pub expert_term: S,
}

impl<S: Scalar> RegretDecomposition<S> {
    pub fn total(&self) -> S {
        self.meta_term + self.expert_term
    }
}

fn full_feedback<S: Scalar>(ledger: &RegretLedger<S>, i: usize) -> Result<usize> {
    let k = ledger.experts().ok_or(Error::BanditLedger)?;
    if i >= k {
        return Err(Error::InvalidInput(format!("expert {i} out of range for K = {k}")));
    }
    if ledger.mixed_losses().len() != ledger.len() || ledger.scales().len() != ledger.len() {
        return Err(Error::Invariant("ledger lacks mixed losses or scales".into()));
    }
    Ok(k)
}

pub fn decompose_regret<S: Scalar>(ledger: &RegretLedger<S>, i: usize) -> Result<RegretDecomposition<S>> {
    full_feedback(ledger, i)?;
    let c = ledger.require_comparator()?;
    let mut meta = S::zero();
    let mut own = S::zero();
    for t in 0..ledger.len() {
        let l = ledger.expert_losses(t).ok_or(Error::BanditLedger)?;
        let s = ledger.expert_surrogates(t).ok_or(Error::BanditLedger)?;
        meta = meta + S::lit(2.0) * ledger.scales()[t] * (ledger.mixed_losses()[t] - l[i]);
        own = own + s[i];
    }
    Ok(RegretDecomposition { meta_term: meta, expert_term: own - c.surrogate_best })
}

/// `V_T(i) = Σ_t (⟨p_t, ℓ_t⟩ − ℓ_t(i))²`.
pub fn squared_regret_sum<S: Scalar>(ledger: &RegretLedger<S>, i: usize) -> Result<S> {
    full_feedback(ledger, i)?;
    let mut v = S::zero();
    for t in 0..ledger.len() {
        let l = ledger.expert_losses(t).ok_or(Error::BanditLedger)?;
        let r = ledger.mixed_losses()[t] - l[i];
        v = v + r * r;
    }
    Ok(v)
}

/// Largest loss scale used during the run.
pub fn max_scale<S: Scalar>(ledger: &RegretLedger<S>) -> S {
    ledger.scales().iter().fold(S::zero(), |m, &v| m.max(v))
}

/// `ℛ_T ≤ 2F·ℛ_T^A + ℛ_T^{(i)}` evaluated from a full-feedback ledger.
pub fn decomposition_check<S: Scalar>(ledger: &RegretLedger<S>, i: usize) -> Result<BoundCheck> {
    let dec = decompose_regret(ledger, i)?;
    Ok(BoundCheck::new(format!("decomposition[{i}]"), ledger.regret()?.as_f64(), dec.total().as_f64()))
}

/// `ℛ_T ≤ 4F·√(V_T(i)·ln K) + ℛ_T^{(i)}` for a Squint-driven run.
pub fn squint_meta_check<S: Scalar>(ledger: &RegretLedger<S>, i: usize) -> Result<BoundCheck> {
    let k = full_feedback(ledger, i)?;
    let f = max_scale(ledger).as_f64();
    let v = squared_regret_sum(ledger, i)?.as_f64();
    let dec = decompose_regret(ledger, i)?;
    let rhs = 4.0 * f * (v * (k as f64).ln()).sqrt() + dec.expert_term.as_f64();
    Ok(BoundCheck::new(format!("squint meta bound[{i}]"), ledger.regret()?.as_f64(), rhs))
}

/// `L·√(2DT/ρ)`: regret bound of tuned mirror descent.
pub fn omd_regret_bound(lipschitz: f64, diameter: f64, horizon: usize, rho: f64) -> f64 {
    lipschitz * (2.0 * diameter * horizon as f64 / rho).sqrt()
}

/// Meta-layer cost of the bandit engines: `8F√(TK)` for the Tsallis
/// potential at `α = ½`, `4F√(TK ln K)` for exponential weights.
pub fn bandit_meta_bound(scale: f64, horizon: usize, k: usize, tsallis: bool) -> f64 {
    let (t, k) = (horizon as f64, k as f64);
    if tsallis {
        8.0 * scale * (t * k).sqrt()
    } else {
        4.0 * scale * (t * k * k.ln()).sqrt()
    }
}

/// Both forms of the full-feedback best-regularizer bound for optimizer `i`:
/// `4F√(T ln K) + B_i` and `(4√(ln K) + 1)·B_i`, with `B_i = L_i√(2D_iT/ρ_i)`.
pub fn best_regularizer_bounds(scale: f64, horizon: usize, k: usize, lipschitz: f64, diameter: f64, rho: f64) -> (f64, f64) {
    let b = omd_regret_bound(lipschitz, diameter, horizon, rho);
    let ln_k = (k as f64).ln();
    (4.0 * scale * (horizon as f64 * ln_k).sqrt() + b, (4.0 * ln_k.sqrt() + 1.0) * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{best_in_hindsight_square, square_loss, square_loss_scale, RegressionStream, Truncation};
    use crate::experts::{default_exp3_eta, ExpertState};
    use crate::regularizers::Regularizer;
    use approx::assert_abs_diff_eq;
    use std::cell::Cell;

    fn family(dom: &Domain<f64>, mode: UpdateMode) -> Vec<Optimizer<f64>> {
        let mut regs = vec![Regularizer::quadratic()];
        if dom.is_simplex() {
            regs.push(Regularizer::neg_entropy());
        }
        for b in [0.0625, 0.5, 4.0] {
            regs.push(Regularizer::hypentropy(b).unwrap());
        }
        regs.into_iter().map(|r| Optimizer::anytime(r, dom.clone(), mode, 1.0).unwrap()).collect()
    }

    /// Runs a learner on a regression stream and returns the finished ledger.
    fn run(meta: &mut MetaLearner<f64>, stream: &RegressionStream<f64>) -> RegretLedger<f64> {
        let rounds = stream.rounds().unwrap();
        let dom = meta.domain().clone();
        let k = (meta.mode() == MetaMode::Mgd).then_some(meta.k());
        let mut ledger = RegretLedger::new(meta.mode().name(), dom.dim(), k);
        let calls = Cell::new(0usize);
        for (x, y) in &rounds {
            let mut oracle = |u: &[f64]| {
                calls.set(calls.get() + 1);
                Ok(square_loss(u, x, *y))
            };
            let rec = meta.round(&mut oracle).unwrap();
            assert!(dom.contains(&rec.play, 1e-9));
            ledger.push(rec, 0).unwrap();
        }
        ledger.set_oracle_calls(calls.get());
        let best = best_in_hindsight_square(&rounds, &dom, 1e-10).unwrap();
        let comp = rounds.iter().map(|(x, y)| square_loss(&best, x, *y).0).collect();
        ledger.finalize(&dom, best, comp).unwrap();
        ledger
    }

    fn analytic_scale(dom: &Domain<f64>, stream: &RegressionStream<f64>) -> f64 {
        let warm: Vec<_> = (1..=100).map(|t| stream.round(t).unwrap()).collect();
        square_loss_scale(dom, &warm)
    }

    #[test]
    fn normalization_examples() {
        let s = SurrogateLoss { grad: &[1.0, -2.0], scale: 2.0 };
        assert_eq!(s.value_at(&[1.0, 0.0]), 1.0);
        assert_eq!(s.normalized(&[1.0, 0.0]), (0.75, false));
        assert_eq!(s.normalized(&[0.0, -3.0]), (1.0, true));
        assert_eq!(s.normalized(&[0.0, 3.0]), (0.0, true));
        assert_eq!(SurrogateLoss { grad: &[0.0], scale: 0.0 }.normalized(&[1.0]), (0.5, false));
    }

    #[test]
    fn single_optimizer_mgd_is_that_optimizer() {
        let dom = Domain::simplex(5).unwrap();
        let stream = RegressionStream::new(2, 5, 500, 1.0, Truncation::Radial).unwrap();
        let opt = Optimizer::anytime(Regularizer::neg_entropy(), dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
        let mut alone = opt.clone();
        let mut meta = MetaLearner::mgd(vec![opt.clone()], ExpertState::squint(1, 0.5).unwrap(), ScalePolicy::RunningMax).unwrap();
        let mut fm = MetaLearner::fmgd(vec![opt], ExpertState::exp3(1, 0.1).unwrap(), ScalePolicy::RunningMax, 3).unwrap();
        for t in 1..=500 {
            let (x, y) = stream.round(t).unwrap();
            let mut oracle = |u: &[f64]| Ok(square_loss(u, &x, y));
            let a = meta.round(&mut oracle).unwrap();
            let b = fm.round(&mut oracle).unwrap();
            assert_eq!(a.play, alone.predict());
            assert_eq!(b.play, alone.predict());
            let (_, g) = square_loss(alone.predict(), &x, y);
            alone.step(&g).unwrap();
        }
    }

    #[test]
    fn identical_optimizers_keep_uniform_weights() {
        let dom = Domain::unit_ball(4).unwrap();
        let opt = Optimizer::anytime(Regularizer::hypentropy(0.5).unwrap(), dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
        let mut meta = MetaLearner::mgd(vec![opt.clone(), opt.clone(), opt], ExpertState::squint(3, 0.5).unwrap(), ScalePolicy::RunningMax).unwrap();
        let stream = RegressionStream::new(5, 4, 300, 1.0, Truncation::Radial).unwrap();
        let ledger = run(&mut meta, &stream);
        for &w in meta.weights() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }
        let terms: Vec<f64> = (0..3).map(|i| decompose_regret(&ledger, i).unwrap().expert_term).collect();
        assert_eq!(terms[0], terms[1]);
        assert_eq!(terms[1], terms[2]);
        assert!(decompose_regret(&ledger, 0).unwrap().meta_term.abs() < 1e-9);
    }

    #[test]
    fn one_oracle_call_per_round() {
        let dom = Domain::simplex(6).unwrap();
        let stream = RegressionStream::new(8, 6, 400, 1.0, Truncation::Radial).unwrap();
        let f = analytic_scale(&dom, &stream);
        let opts = family(&dom, UpdateMode::LazyClosedForm);
        let k = opts.len();
        let mut mgd = MetaLearner::mgd(opts.clone(), ExpertState::squint(k, 0.5).unwrap(), ScalePolicy::Fixed(f)).unwrap();
        let mut fmgd = MetaLearner::fmgd(opts, ExpertState::exp3(k, default_exp3_eta(k, 400)).unwrap(), ScalePolicy::Fixed(f), 1).unwrap();
        let a = run(&mut mgd, &stream);
        let b = run(&mut fmgd, &stream);
        assert_eq!((a.oracle_calls(), mgd.oracle_calls()), (400, 400));
        assert_eq!((b.oracle_calls(), fmgd.oracle_calls()), (400, 400));
        assert_eq!(b.arms().len(), 400);
    }

    #[test]
    fn regret_inequalities_hold_on_regression_runs() {
        for (seed, dom) in [(1u64, Domain::simplex(10).unwrap()), (2, Domain::unit_ball(10).unwrap())] {
            let stream = RegressionStream::new(seed, 10, 3000, 1.0, Truncation::Radial).unwrap();
            let f = analytic_scale(&dom, &stream);
            let opts = family(&dom, UpdateMode::LazyClosedForm);
            let k = opts.len();
            let mut mgd = MetaLearner::mgd(opts, ExpertState::squint(k, 0.5).unwrap(), ScalePolicy::Fixed(f)).unwrap();
            let ledger = run(&mut mgd, &stream);
            ledger.check_consistency().unwrap();
            let dom_check = surrogate_regret_dominates(&ledger).unwrap();
            assert!(dom_check.holds && dom_check.lhs < dom_check.rhs, "{dom_check:?}");
            for i in 0..k {
                let d = decomposition_check(&ledger, i).unwrap();
                assert!(d.holds, "{d:?}");
                let s = squint_meta_check(&ledger, i).unwrap();
                assert!(s.holds, "{s:?}");
            }
            assert!(ledger.clip_fraction() < 1e-3);
        }
    }

    #[test]
    fn linear_costs_give_equality() {
        let dom = Domain::simplex(3).unwrap();
        let opt = Optimizer::anytime(Regularizer::neg_entropy(), dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
        let mut meta = MetaLearner::mgd(vec![opt], ExpertState::hedge(1, 0.1).unwrap(), ScalePolicy::RunningMax).unwrap();
        let mut ledger = RegretLedger::new("mgd", 3, Some(1));
        let grads = [[1.0, -0.5, 0.2], [0.3, 0.3, -1.0], [-0.2, 0.8, 0.1]];
        for g in grads {
            let mut oracle = |u: &[f64]| Ok((dot(u, &g), g.to_vec()));
            ledger.push(meta.round(&mut oracle).unwrap(), 0).unwrap();
        }
        let best = dom.linear_minimizer(ledger.grad_sum());
        let comp = grads.iter().map(|g| dot(g, &best)).collect();
        ledger.finalize(&dom, best, comp).unwrap();
        let c = surrogate_regret_dominates(&ledger).unwrap();
        assert!(c.holds);
        assert_abs_diff_eq!(c.lhs, c.rhs, epsilon = 1e-14);
        assert!(decompose_regret(&ledger, 0).unwrap().meta_term.abs() < 1e-15);
    }

    #[test]
    fn single_round_at_comparator_is_zero() {
        let dom = Domain::simplex(2).unwrap();
        let mut ledger = RegretLedger::new("x", 2, None);
        ledger.push(RoundRecord::plain(vec![1.0, 0.0], 1.0, vec![2.0, 0.0]), 0).unwrap();
        ledger.finalize(&dom, vec![1.0, 0.0], vec![1.0]).unwrap();
        let c = surrogate_regret_dominates(&ledger).unwrap();
        assert_eq!((c.lhs, c.rhs, c.holds), (0.0, 0.0, true));
    }

    #[test]
    fn bandit_ledgers_have_no_decomposition() {
        let dom = Domain::simplex(4).unwrap();
        let stream = RegressionStream::new(3, 4, 50, 1.0, Truncation::Radial).unwrap();
        let opts = family(&dom, UpdateMode::LazyClosedForm);
        let k = opts.len();
        let mut fmgd = MetaLearner::fmgd(opts, ExpertState::gbpa(k, 5.0, 0.5).unwrap(), ScalePolicy::RunningMax, 9).unwrap();
        let ledger = run(&mut fmgd, &stream);
        assert!(matches!(decompose_regret(&ledger, 0), Err(Error::BanditLedger)));
        assert_eq!(ledger.clipped(), 0);
    }

    #[test]
    fn constructor_contracts() {
        let dom = Domain::simplex(3).unwrap();
        let agile = family(&dom, UpdateMode::Agile);
        let k = agile.len();
        assert!(matches!(
            MetaLearner::fmgd(agile.clone(), ExpertState::exp3(k, 0.1).unwrap(), ScalePolicy::RunningMax, 0),
            Err(Error::WrongMode { .. })
        ));
        assert!(MetaLearner::mgd(agile.clone(), ExpertState::exp3(k, 0.1).unwrap(), ScalePolicy::RunningMax).is_err());
        assert!(MetaLearner::mgd(agile.clone(), ExpertState::hedge(k + 1, 0.1).unwrap(), ScalePolicy::RunningMax).is_err());
        assert!(MetaLearner::mgd(agile, ExpertState::hedge(k, 0.1).unwrap(), ScalePolicy::Fixed(0.0)).is_err());
    }

    #[test]
    fn fmgd_is_reproducible() {
        let dom = Domain::unit_ball(5).unwrap();
        let stream = RegressionStream::new(4, 5, 300, 1.0, Truncation::Radial).unwrap();
        let opts = family(&dom, UpdateMode::LazyClosedForm);
        let k = opts.len();
        let build = || MetaLearner::fmgd(opts.clone(), ExpertState::exp3(k, 0.05).unwrap(), ScalePolicy::RunningMax, 42).unwrap();
        let a = run(&mut build(), &stream);
        let b = run(&mut build(), &stream);
        assert_eq!(a.arms(), b.arms());
        assert_eq!(a.costs(), b.costs());
    }

    #[test]
    fn bound_formulas() {
        assert_abs_diff_eq!(omd_regret_bound(1.0, 2.0, 100, 1.0), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bandit_meta_bound(1.0, 100, 4, true), 160.0, epsilon = 1e-12);
        let (a, b) = best_regularizer_bounds(0.0, 100, 1, 1.0, 2.0, 1.0);
        assert_abs_diff_eq!(a, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 20.0, epsilon = 1e-12);
    }
}
