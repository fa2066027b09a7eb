//! Per-round record of a run and the regret series derived from it.
//!
//! Regret is measured against one fixed comparator `x*` supplied after the
//! run: `cum_regret(t) = Σ_{s≤t} f_s(x_s) − f_s(x*)`. With `x*` the best
//! point for the whole horizon, the final value is the usual regret.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::scalar::{dot, Scalar};

/// What one algorithm did in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<S> {
    pub play: Vec<S>,
    pub cost: S,
    pub grad: Vec<S>,
    /// `⟨∇_t, x_t⟩`.
    pub surrogate: S,
    /// `⟨∇_t, x_t^i⟩` for every optimizer (full feedback only).
    pub expert_surrogates: Option<Vec<S>>,
    /// Normalized, clipped losses `ℓ_t(i)` (full feedback only).
    pub expert_losses: Option<Vec<S>>,
    /// `⟨p_t, ℓ_t⟩` under full feedback, `ℓ_t(a_t)` under bandit feedback.
    pub mixed_loss: Option<S>,
    pub arm: Option<usize>,
    /// Loss scale `F` in force this round.
    pub scale: Option<S>,
    /// Normalized losses clipped into `[0, 1]` this round.
    pub clipped: usize,
    /// Normalized losses formed this round.
    pub losses_formed: usize,
}

impl<S: Scalar> RoundRecord<S> {
    /// A round of a plain learner with no expert layer.
    pub fn plain(play: Vec<S>, cost: S, grad: Vec<S>) -> Self {
        let surrogate = dot(&grad, &play);
        Self {
            play,
            cost,
            grad,
            surrogate,
            expert_surrogates: None,
            expert_losses: None,
            mixed_loss: None,
            arm: None,
            scale: None,
            clipped: 0,
            losses_formed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorSummary<S> {
    pub point: Vec<S>,
    /// `Σ f_t(x*)`.
    pub total_cost: S,
    /// `⟨S_T, x*⟩`.
    pub surrogate_total: S,
    /// `min_{x ∈ D} ⟨S_T, x⟩`.
    pub surrogate_best: S,
}

#[derive(Debug, Clone)]
pub struct RegretLedger<S> {
    algorithm: String,
    dim: usize,
    k: Option<usize>,
    plays: Vec<S>,
    grads: Vec<S>,
    costs: Vec<S>,
    surrogates: Vec<S>,
    expert_surrogates: Vec<S>,
    expert_losses: Vec<S>,
    mixed: Vec<S>,
    arms: Vec<usize>,
    scales: Vec<S>,
    wall_ns: Vec<u64>,
    grad_sum: Vec<S>,
    oracle_calls: usize,
    clipped: usize,
    losses_formed: usize,
    comparator: Option<ComparatorSummary<S>>,
    comparator_costs: Vec<S>,
}

impl<S: Scalar> RegretLedger<S> {
    /// `experts` is `Some(K)` when per-optimizer surrogate losses are recorded.
    pub fn new(algorithm: impl Into<String>, dim: usize, experts: Option<usize>) -> Self {
        Self {
            algorithm: algorithm.into(),
            dim,
            k: experts,
            plays: Vec::new(),
            grads: Vec::new(),
            costs: Vec::new(),
            surrogates: Vec::new(),
            expert_surrogates: Vec::new(),
            expert_losses: Vec::new(),
            mixed: Vec::new(),
            arms: Vec::new(),
            scales: Vec::new(),
            wall_ns: Vec::new(),
            grad_sum: vec![S::zero(); dim],
            oracle_calls: 0,
            clipped: 0,
            losses_formed: 0,
            comparator: None,
            comparator_costs: Vec::new(),
        }
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn experts(&self) -> Option<usize> {
        self.k
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn push(&mut self, rec: RoundRecord<S>, wall_ns: u64) -> Result<()> {
        if self.comparator.is_some() {
            return Err(Error::Invariant("ledger already finalized".into()));
        }
        if rec.play.len() != self.dim || rec.grad.len() != self.dim {
            return Err(Error::InvalidInput("round record has wrong dimension".into()));
        }
        match (self.k, &rec.expert_surrogates, &rec.expert_losses) {
            (Some(k), Some(s), Some(l)) if s.len() == k && l.len() == k => {
                self.expert_surrogates.extend_from_slice(s);
                self.expert_losses.extend_from_slice(l);
            }
            (None, None, None) => {}
            _ => return Err(Error::InvalidInput("per-expert losses do not match the ledger".into())),
        }
        for (a, &g) in self.grad_sum.iter_mut().zip(&rec.grad) {
            *a = *a + g;
        }
        self.plays.extend_from_slice(&rec.play);
        self.grads.extend_from_slice(&rec.grad);
        self.costs.push(rec.cost);
        self.surrogates.push(rec.surrogate);
        if let Some(m) = rec.mixed_loss {
            self.mixed.push(m);
        }
        if let Some(a) = rec.arm {
            self.arms.push(a);
        }
        if let Some(f) = rec.scale {
            self.scales.push(f);
        }
        self.clipped += rec.clipped;
        self.losses_formed += rec.losses_formed;
        self.wall_ns.push(wall_ns);
        Ok(())
    }

    pub fn set_oracle_calls(&mut self, n: usize) {
        self.oracle_calls = n;
    }

    pub fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }

    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn losses_formed(&self) -> usize {
        self.losses_formed
    }

    pub fn clip_fraction(&self) -> f64 {
        if self.losses_formed == 0 {
            0.0
        } else {
            self.clipped as f64 / self.losses_formed as f64
        }
    }

    /// Attaches the comparator and its per-round costs `f_t(x*)`.
    pub fn finalize(&mut self, dom: &Domain<S>, point: Vec<S>, comparator_costs: Vec<S>) -> Result<()> {
        if comparator_costs.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "{} comparator costs for {} rounds",
                comparator_costs.len(),
                self.len()
            )));
        }
        if point.len() != self.dim {
            return Err(Error::InvalidInput("comparator has wrong dimension".into()));
        }
        let best = dom.linear_minimizer(&self.grad_sum);
        self.comparator = Some(ComparatorSummary {
            total_cost: comparator_costs.iter().copied().sum(),
            surrogate_total: dot(&self.grad_sum, &point),
            surrogate_best: dot(&self.grad_sum, &best),
            point,
        });
        self.comparator_costs = comparator_costs;
        Ok(())
    }

    pub fn comparator(&self) -> Option<&ComparatorSummary<S>> {
        self.comparator.as_ref()
    }

    pub(crate) fn require_comparator(&self) -> Result<&ComparatorSummary<S>> {
        self.comparator.as_ref().ok_or_else(|| Error::Invariant("ledger has no comparator yet".into()))
    }

    pub fn play(&self, t: usize) -> &[S] {
        &self.plays[t * self.dim..(t + 1) * self.dim]
    }

    pub fn grad(&self, t: usize) -> &[S] {
        &self.grads[t * self.dim..(t + 1) * self.dim]
    }

    pub fn costs(&self) -> &[S] {
        &self.costs
    }

    pub fn comparator_costs(&self) -> &[S] {
        &self.comparator_costs
    }

    pub fn surrogates(&self) -> &[S] {
        &self.surrogates
    }

    pub fn grad_sum(&self) -> &[S] {
        &self.grad_sum
    }

    pub fn mixed_losses(&self) -> &[S] {
        &self.mixed
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn scales(&self) -> &[S] {
        &self.scales
    }

    pub fn wall_ns(&self) -> &[u64] {
        &self.wall_ns
    }

    /// `⟨∇_t, x_t^i⟩` for round `t`, if recorded.
    pub fn expert_surrogates(&self, t: usize) -> Option<&[S]> {
        self.k.map(|k| &self.expert_surrogates[t * k..(t + 1) * k])
    }

    pub fn expert_losses(&self, t: usize) -> Option<&[S]> {
        self.k.map(|k| &self.expert_losses[t * k..(t + 1) * k])
    }

    /// Largest dual norm of the recorded gradients.
    pub fn max_grad_norm(&self, norm: crate::regularizers::NormTag) -> S {
        (0..self.len()).map(|t| norm.dual_norm(self.grad(t))).fold(S::zero(), |m, v| m.max(v))
    }

    pub fn cum_loss(&self) -> Vec<S> {
        prefix_sums(&self.costs)
    }

    pub fn cum_regret(&self) -> Result<Vec<S>> {
        self.require_comparator()?;
        let diff: Vec<S> = self.costs.iter().zip(&self.comparator_costs).map(|(&a, &b)| a - b).collect();
        Ok(prefix_sums(&diff))
    }

    pub fn avg_regret(&self) -> Result<Vec<S>> {
        Ok(self
            .cum_regret()?
            .into_iter()
            .enumerate()
            .map(|(t, r)| r / S::from_usize_lossy(t + 1))
            .collect())
    }

    /// `Σ f_t(x_t) − Σ f_t(x*)`.
    pub fn regret(&self) -> Result<S> {
        let c = self.require_comparator()?;
        Ok(self.costs.iter().copied().sum::<S>() - c.total_cost)
    }

    /// Recomputes the cumulative regret series from the stored per-round
    /// costs and compares it with a plain running sum.
    pub fn check_consistency(&self) -> Result<()> {
        let series = self.cum_regret()?;
        let avg = self.avg_regret()?;
        let mut run = 0.0f64;
        let mut mag = 0.0f64;
        for t in 0..self.len() {
            let d = self.costs[t].as_f64() - self.comparator_costs[t].as_f64();
            run += d;
            mag += d.abs();
            let allowance = 1e-9 * (1.0 + mag);
            if (series[t].as_f64() - run).abs() > allowance {
                return Err(Error::Invariant(format!("cumulative regret drifts at t={}", t + 1)));
            }
            if avg[t] != series[t] / S::from_usize_lossy(t + 1) {
                return Err(Error::Invariant(format!("average regret mismatch at t={}", t + 1)));
            }
        }
        Ok(())
    }

    /// One CSV row per round: `t,algorithm,cum_loss,cum_regret,avg_regret,wall_ms`.
    /// With `record_timing` off the timing column is zero, so repeated runs
    /// produce identical bytes.
    pub fn write_csv<W: Write>(&self, mut out: W, record_timing: bool) -> Result<()> {
        let io = |e: std::io::Error| Error::Invariant(format!("write failed: {e}"));
        writeln!(out, "{CSV_HEADER}").map_err(io)?;
        let cum = self.cum_loss();
        let reg = self.cum_regret()?;
        for t in 0..self.len() {
            let wall = if record_timing { self.wall_ns[t] as f64 / 1e6 } else { 0.0 };
            let avg = reg[t] / S::from_usize_lossy(t + 1);
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                t + 1,
                self.algorithm,
                cum[t].as_f64(),
                reg[t].as_f64(),
                avg.as_f64(),
                wall
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "t,algorithm,cum_loss,cum_regret,avg_regret,wall_ms";

fn prefix_sums<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut acc = S::zero();
    v.iter()
        .map(|&x| {
            acc = acc + x;
            acc
        })
        .collect()
}

/// Median of a sample; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}
