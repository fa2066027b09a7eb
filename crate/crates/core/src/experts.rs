//! Prediction with expert advice over `K` arms.
//!
//! Full feedback: Hedge and Squint. Bandit feedback: EXP3 and the
//! gradient-based prediction algorithm with a Tsallis-entropy potential
//! (GBPA). Exponential weights are evaluated in log space with max
//! subtraction; every weight is floored at the smallest positive scalar and
//! the vector renormalized, so all arms stay strictly positive.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{all_finite, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum ExpertKind<S> {
    Hedge { eta: S },
    /// Fixed-rate Squint with prior `p₁`.
    Squint { eta: S, prior: Vec<S> },
    Exp3 { eta: S },
    /// Tsallis potential with parameter `alpha ∈ (0, 1)`; larger `eta`
    /// means flatter weights.
    Gbpa { eta: S, alpha: S },
}

impl<S: Scalar> ExpertKind<S> {
    pub fn name(&self) -> &'static str {
        match self {
            ExpertKind::Hedge { .. } => "hedge",
            ExpertKind::Squint { .. } => "squint",
            ExpertKind::Exp3 { .. } => "exp3",
            ExpertKind::Gbpa { .. } => "gbpa",
        }
    }

    pub fn is_bandit(&self) -> bool {
        matches!(self, ExpertKind::Exp3 { .. } | ExpertKind::Gbpa { .. })
    }
}

/// `√(ln K / T)`, with `K` raised to 2 so a single arm still gets a
/// positive step.
pub fn default_hedge_eta<S: Scalar>(k: usize, horizon: usize) -> S {
    (S::from_usize_lossy(k.max(2)).ln() / S::from_usize_lossy(horizon.max(1))).sqrt()
}

/// `√(2 ln K / (T K))`, with `K` raised to 2 as for Hedge.
pub fn default_exp3_eta<S: Scalar>(k: usize, horizon: usize) -> S {
    let k = S::from_usize_lossy(k.max(2));
    (S::lit(2.0) * k.ln() / (S::from_usize_lossy(horizon.max(1)) * k)).sqrt()
}

/// Minimizer of `η(K^{1−α} − 1)/(1 − α) + K^α T/(2ηα)`; 1 when `K = 1`.
pub fn default_gbpa_eta<S: Scalar>(k: usize, horizon: usize, alpha: S) -> S {
    let kk = S::from_usize_lossy(k);
    let t = S::from_usize_lossy(horizon.max(1));
    let a = (kk.powf(S::one() - alpha) - S::one()) / (S::one() - alpha);
    if !(a > S::zero()) {
        return S::one();
    }
    (kk.powf(alpha) * t / (S::lit(2.0) * alpha * a)).sqrt()
}

/// Weights and accumulators of one expert-advice engine.
#[derive(Debug, Clone)]
pub struct ExpertState<S> {
    kind: ExpertKind<S>,
    weights: Vec<S>,
    cum_loss: Vec<S>,
    regret_sum: Vec<S>,
    var_sum: Vec<S>,
    t: usize,
}

impl<S: Scalar> ExpertState<S> {
    pub fn new(kind: ExpertKind<S>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("need at least one arm".into()));
        }
        let positive = |name: &str, v: S| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let weights = match &kind {
            ExpertKind::Hedge { eta } | ExpertKind::Exp3 { eta } => {
                positive("eta", *eta)?;
                vec![S::one() / S::from_usize_lossy(k); k]
            }
            ExpertKind::Gbpa { eta, alpha } => {
                positive("eta", *eta)?;
                if !(*alpha > S::zero() && *alpha < S::one()) {
                    return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
                }
                vec![S::one() / S::from_usize_lossy(k); k]
            }
            ExpertKind::Squint { eta, prior } => {
                positive("eta", *eta)?;
                if prior.len() != k || prior.iter().any(|&p| !(p > S::zero())) {
                    return Err(Error::Config("squint prior must have K positive entries".into()));
                }
                let total: S = prior.iter().copied().sum();
                prior.iter().map(|&p| p / total).collect()
            }
        };
        Ok(Self {
            kind,
            weights,
            cum_loss: vec![S::zero(); k],
            regret_sum: vec![S::zero(); k],
            var_sum: vec![S::zero(); k],
            t: 0,
        })
    }

    pub fn hedge(k: usize, eta: S) -> Result<Self> {
        Self::new(ExpertKind::Hedge { eta }, k)
    }

    /// Squint with a uniform prior.
    pub fn squint(k: usize, eta: S) -> Result<Self> {
        Self::new(ExpertKind::Squint { eta, prior: vec![S::one() / S::from_usize_lossy(k.max(1)); k] }, k)
    }

    pub fn exp3(k: usize, eta: S) -> Result<Self> {
        Self::new(ExpertKind::Exp3 { eta }, k)
    }

    pub fn gbpa(k: usize, eta: S, alpha: S) -> Result<Self> {
        Self::new(ExpertKind::Gbpa { eta, alpha }, k)
    }

    pub fn kind(&self) -> &ExpertKind<S> {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Cumulative (estimated, for bandit engines) losses `L̂_t`.
    pub fn cum_losses(&self) -> &[S] {
        &self.cum_loss
    }

    /// Squint's `R_t`.
    pub fn regret_sums(&self) -> &[S] {
        &self.regret_sum
    }

    /// Squint's `V_t`.
    pub fn variance_sums(&self) -> &[S] {
        &self.var_sum
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    fn check_losses(&self, loss: &[S]) -> Result<()> {
        if loss.len() != self.k() {
            return Err(Error::InvalidInput(format!("expected {} losses, got {}", self.k(), loss.len())));
        }
        if let Some(i) = loss.iter().position(|&l| !(l >= S::zero() && l <= S::one())) {
            return Err(Error::InvalidInput(format!("loss[{i}] = {} outside [0, 1]", loss[i])));
        }
        Ok(())
    }

    fn wrong(&self, expected: &'static str) -> Error {
        Error::WrongMode { expected, actual: self.kind.name() }
    }

    /// Exponential weights on cumulative losses.
    pub fn hedge_update(&mut self, loss: &[S]) -> Result<&[S]> {
        let ExpertKind::Hedge { eta } = self.kind else {
            return Err(self.wrong("hedge"));
        };
        self.check_losses(loss)?;
        self.accumulate(loss);
        let logits: Vec<S> = self.cum_loss.iter().map(|&l| -eta * l).collect();
        self.weights = normalized_exp(&logits);
        Ok(&self.weights)
    }

    /// Squint potential `p₁(i)·exp(ηR_t(i) − η²V_t(i))`.
    pub fn squint_update(&mut self, loss: &[S]) -> Result<&[S]> {
        let ExpertKind::Squint { eta, ref prior } = self.kind else {
            return Err(self.wrong("squint"));
        };
        self.check_losses(loss)?;
        let mix: S = self.weights.iter().zip(loss).map(|(&p, &l)| p * l).sum();
        for i in 0..self.k() {
            let r = mix - loss[i];
            self.regret_sum[i] = self.regret_sum[i] + r;
            self.var_sum[i] = self.var_sum[i] + r * r;
        }
        let logits: Vec<S> = (0..self.k())
            .map(|i| prior[i].ln() + eta * self.regret_sum[i] - eta * eta * self.var_sum[i])
            .collect();
        self.accumulate(loss);
        self.weights = normalized_exp(&logits);
        Ok(&self.weights)
    }

    fn check_estimate(&self, est: &[S]) -> Result<()> {
        if est.len() != self.k() {
            return Err(Error::InvalidInput(format!("expected {} estimates, got {}", self.k(), est.len())));
        }
        if !all_finite(est) || est.iter().any(|&v| v < S::zero()) {
            return Err(Error::InvalidInput("loss estimates must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Exponential weights on cumulative loss estimates.
    pub fn exp3_update(&mut self, est: &[S]) -> Result<&[S]> {
        let ExpertKind::Exp3 { eta } = self.kind else {
            return Err(self.wrong("exp3"));
        };
        self.check_estimate(est)?;
        self.accumulate(est);
        let logits: Vec<S> = self.cum_loss.iter().map(|&l| -eta * l).collect();
        self.weights = normalized_exp(&logits);
        Ok(&self.weights)
    }

    /// Tsallis-regularized leader on cumulative loss estimates.
    pub fn gbpa_update(&mut self, est: &[S]) -> Result<&[S]> {
        let ExpertKind::Gbpa { eta, alpha } = self.kind else {
            return Err(self.wrong("gbpa"));
        };
        self.check_estimate(est)?;
        self.accumulate(est);
        let w = gbpa_tsallis_weights(&self.cum_loss, eta, alpha)?;
        self.weights = floor_and_normalize(w);
        Ok(&self.weights)
    }

    fn accumulate(&mut self, loss: &[S]) {
        self.t += 1;
        for (c, &l) in self.cum_loss.iter_mut().zip(loss) {
            *c = *c + l;
        }
    }

    /// Full-feedback update for Hedge or Squint.
    pub fn update_full(&mut self, loss: &[S]) -> Result<&[S]> {
        match self.kind {
            ExpertKind::Hedge { .. } => self.hedge_update(loss),
            ExpertKind::Squint { .. } => self.squint_update(loss),
            _ => Err(self.wrong("hedge or squint")),
        }
    }

    /// Bandit update from the loss observed on the played arm.
    pub fn update_bandit(&mut self, arm: usize, observed: S) -> Result<&[S]> {
        if !(observed >= S::zero() && observed <= S::one()) {
            return Err(Error::InvalidInput(format!("observed loss {observed} outside [0, 1]")));
        }
        let est = importance_weighted_loss(observed, arm, &self.weights)?;
        match self.kind {
            ExpertKind::Exp3 { .. } => self.exp3_update(&est),
            ExpertKind::Gbpa { .. } => self.gbpa_update(&est),
            _ => Err(self.wrong("exp3 or gbpa")),
        }
    }

    /// Draws an arm from the current weights.
    pub fn sample_arm<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.weights, rng)
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<S: Scalar, R: Rng + ?Sized>(p: &[S], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w.as_f64();
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum just below one
    p.iter().rposition(|w| *w > S::zero()).unwrap_or(0)
}

/// `ℓ/p(a)` at arm `a`, zero elsewhere.
pub fn importance_weighted_loss<S: Scalar>(observed: S, arm: usize, p: &[S]) -> Result<Vec<S>> {
    let prob = *p.get(arm).ok_or_else(|| Error::InvalidInput(format!("arm {arm} out of range")))?;
    if !(prob >= S::lit(1e-12)) {
        return Err(Error::DegenerateWeights { arm, prob: prob.as_f64() });
    }
    let mut est = vec![S::zero(); p.len()];
    est[arm] = observed / prob;
    Ok(est)
}

fn normalized_exp<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
    floor_and_normalize(logits.iter().map(|&v| (v - max).exp()).collect())
}

fn floor_and_normalize<S: Scalar>(w: Vec<S>) -> Vec<S> {
    let w: Vec<S> = w.into_iter().map(|v| v.max(S::min_positive_value())).collect();
    let total: S = w.iter().copied().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn renormalize<S: Scalar>(p: Vec<S>) -> Vec<S> {
    let total: S = p.iter().copied().sum();
    p.into_iter().map(|v| v / total).collect()
}

const TSALLIS_MAX_ITERS: usize = 200;

/// Maximizer over the simplex of `⟨−L̂/η, p⟩ + (Σ pᵢ^α − 1)/(1 − α)`.
///
/// Stationarity gives `p(a) = (κ(λ + L̂(a)/η))^{1/(α−1)}` with `κ = (1−α)/α`.
/// `Σp(λ)` is convex and decreasing, so Newton from the left bracket end
/// `1/κ − min c` (where the leading arm alone has weight one) converges
/// monotonically. Bisection takes over if a Newton step leaves the bracket.
pub fn gbpa_tsallis_weights<S: Scalar>(cum: &[S], eta: S, alpha: S) -> Result<Vec<S>> {
    if cum.is_empty() || !all_finite(cum) {
        return Err(Error::InvalidInput("cumulative losses must be finite and non-empty".into()));
    }
    if !(alpha > S::zero() && alpha < S::one()) || !(eta > S::zero()) {
        return Err(Error::Config(format!("need α ∈ (0,1) and η > 0, got α={alpha}, η={eta}")));
    }
    let kappa = (S::one() - alpha) / alpha;
    let expo = S::one() / (alpha - S::one());
    let c: Vec<S> = cum.iter().map(|&l| l / eta).collect();
    let c_min = c.iter().fold(S::infinity(), |m, &v| m.min(v));
    let k = S::from_usize_lossy(cum.len());

    let eval = |lambda: S| -> (S, S, Vec<S>) {
        let mut sum = S::zero();
        let mut slope = S::zero();
        let p: Vec<S> = c
            .iter()
            .map(|&ci| {
                let base = lambda + ci;
                let pi = (expo * (kappa * base).ln()).exp();
                sum = sum + pi;
                slope = slope + expo * pi / base;
                pi
            })
            .collect();
        (sum - S::one(), slope, p)
    };

    let mut lo = S::one() / kappa - c_min;
    let mut hi = k.powf(S::one() - alpha) / kappa - c_min;
    let mut lambda = lo;
    let tol = S::solver_tol();
    let mut residual = S::infinity();
    for _ in 0..TSALLIS_MAX_ITERS {
        let (g, slope, p) = eval(lambda);
        residual = g;
        if g.abs() <= tol {
            return Ok(renormalize(p));
        }
        if g > S::zero() {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - g / slope;
        let next = if newton > lo && newton < hi { newton } else { (lo + hi) / S::lit(2.0) };
        if next == lambda {
            break;
        }
        lambda = next;
    }
    let (g, _, p) = eval(lambda);
    if g.abs() <= tol.sqrt() {
        return Ok(renormalize(p));
    }
    Err(Error::Solver { lo: lo.as_f64(), hi: hi.as_f64(), residual: residual.as_f64(), iterations: TSALLIS_MAX_ITERS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hedge_examples() {
        let mut h = ExpertState::hedge(2, 2f64.ln()).unwrap();
        assert_eq!(h.weights(), &[0.5, 0.5]);
        let p = h.hedge_update(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-15);
        let mut h = ExpertState::hedge(4, 0.7).unwrap();
        for t in 0..100 {
            let l = (t as f64 * 0.37).fract();
            h.hedge_update(&[l; 4]).unwrap();
            for &w in h.weights() {
                assert_abs_diff_eq!(w, 0.25, epsilon = 1e-15);
            }
        }
        assert!(h.hedge_update(&[0.0, 1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn squint_examples() {
        let mut s = ExpertState::squint(3, 0.5).unwrap();
        for _ in 0..20 {
            s.squint_update(&[0.4; 3]).unwrap();
        }
        for &w in s.weights() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }

        let mut s = ExpertState::squint(2, 1.0).unwrap();
        let p = s.squint_update(&[1.0, 0.0]).unwrap().to_vec();
        assert_eq!(s.regret_sums(), &[-0.5, 0.5]);
        assert_abs_diff_eq!(p[1] / p[0], std::f64::consts::E, epsilon = 1e-12);
    }

    /// Squint weights recomputed from the full loss history.
    #[test]
    fn squint_matches_history_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 5;
        let eta = 0.4;
        let mut s = ExpertState::squint(k, eta).unwrap();
        let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for t in 1..=300 {
            let loss: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            history.push((s.weights().to_vec(), loss.clone()));
            s.squint_update(&loss).unwrap();
            let logits: Vec<f64> = (0..k)
                .map(|i| {
                    let (r, v) = history.iter().fold((0.0, 0.0), |(r, v), (p, l)| {
                        let ri = p.iter().zip(l).map(|(a, b)| a * b).sum::<f64>() - l[i];
                        (r + ri, v + ri * ri)
                    });
                    eta * r - eta * eta * v
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|v| (v - m).exp()).sum();
            for i in 0..k {
                assert_abs_diff_eq!(s.weights()[i], (logits[i] - m).exp() / z, epsilon = 1e-12);
                assert!(s.variance_sums()[i] <= t as f64);
            }
        }
    }

    #[test]
    fn importance_weighting() {
        assert_eq!(importance_weighted_loss(0.5, 1, &[0.25; 4]).unwrap(), vec![0.0, 2.0, 0.0, 0.0]);
        assert_eq!(importance_weighted_loss(0.0, 2, &[0.25; 4]).unwrap(), vec![0.0; 4]);
        assert!(matches!(
            importance_weighted_loss(0.5, 0, &[1e-13, 1.0]),
            Err(Error::DegenerateWeights { arm: 0, .. })
        ));
    }

    #[test]
    fn importance_weighting_is_unbiased() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let loss = [0.9, 0.1, 0.5, 0.3];
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut mean = [0.0; 4];
        for _ in 0..n {
            let a = sample_index(&p, &mut rng);
            let est = importance_weighted_loss(loss[a], a, &p).unwrap();
            for (m, e) in mean.iter_mut().zip(&est) {
                *m += e / n as f64;
            }
        }
        for i in 0..4 {
            // Var(ℓ̂ᵢ) = ℓᵢ²(1/pᵢ − 1)
            let sigma = (loss[i] * loss[i] * (1.0 / p[i] - 1.0) / n as f64).sqrt();
            assert!((mean[i] - loss[i]).abs() <= 3.0 * sigma, "arm {i}");
        }
    }

    #[test]
    fn exp3_examples() {
        let mut e = ExpertState::exp3(4, 0.3).unwrap();
        assert_eq!(e.weights(), &[0.25; 4]);
        let p = e.exp3_update(&[0.0, 1.5, 0.0, 0.0]).unwrap();
        assert!(p[1] < 0.25 && p[0] == p[2] && p[2] == p[3]);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut e = ExpertState::exp3(6, 0.2).unwrap();
        let mut h = ExpertState::hedge(6, 0.2).unwrap();
        for _ in 0..500 {
            let l: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let a = e.exp3_update(&l).unwrap().to_vec();
            let b = h.hedge_update(&l).unwrap();
            for (u, v) in a.iter().zip(b) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn tsallis_uniform_at_zero() {
        for alpha in [0.1, 0.5, 0.9] {
            let p = gbpa_tsallis_weights(&[0.0; 7], 1.3, alpha).unwrap();
            for v in p {
                assert_abs_diff_eq!(v, 1.0 / 7.0, epsilon = 1e-12);
            }
        }
    }

    fn tsallis_objective(p: [f64; 2], c: [f64; 2], alpha: f64) -> f64 {
        -(c[0] * p[0] + c[1] * p[1]) + (p[0].powf(alpha) + p[1].powf(alpha) - 1.0) / (1.0 - alpha)
    }

    /// Exhaustive grid over Δ(2), refined twice around the incumbent.
    fn grid_maximizer(c: [f64; 2], alpha: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = 0.5;
        for _ in 0..3 {
            let n = 200_000;
            let mut best_val = f64::NEG_INFINITY;
            for i in 0..=n {
                let q = lo + (hi - lo) * i as f64 / n as f64;
                let v = tsallis_objective([q, 1.0 - q], c, alpha);
                if v > best_val {
                    best_val = v;
                    best = q;
                }
            }
            let w = (hi - lo) / n as f64 * 4.0;
            lo = (best - w).max(0.0);
            hi = (best + w).min(1.0);
        }
        best
    }

    #[test]
    fn tsallis_matches_grid_oracle() {
        for c in [0.3, 1.0, 2.5, 7.0] {
            let p = gbpa_tsallis_weights(&[0.0, c], 1.0, 0.5).unwrap();
            let q = grid_maximizer([0.0, c], 0.5);
            assert_abs_diff_eq!(p[0], q, epsilon = 1e-6);
            assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
            // closed form at α = ½: p ∝ (λ + c)^{-2}
            let lam = 1.0 / p[0].sqrt() - 0.0;
            assert_abs_diff_eq!(p[1], (lam + c).powi(-2), epsilon = 1e-12);
        }
    }

    #[test]
    fn tsallis_near_one_is_exponential_weights() {
        let cum = [0.0f64, 0.8, 1.7, 3.1, 0.2];
        let eta = 2.0;
        let p = gbpa_tsallis_weights(&cum, eta, 0.999).unwrap();
        let mut e = ExpertState::exp3(5, 1.0 / eta).unwrap();
        let q = e.exp3_update(&cum).unwrap();
        for (a, b) in p.iter().zip(q) {
            assert!((a - b).abs() <= 1e-3);
        }
    }

    #[test]
    fn tsallis_extreme_inputs() {
        let p = gbpa_tsallis_weights(&[0.0, 1e6, 1e9], 1.0, 0.5).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = gbpa_tsallis_weights(&[5e4, 5e4 + 1.0, 5e4 + 2.0], 10.0, 0.01).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gbpa_tsallis_weights(&[0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn hedge_and_squint_regret_bounds() {
        let (k, t) = (10, 10_000);
        let hedge_eta = default_hedge_eta::<f64>(k, t);
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let means: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let mut h = ExpertState::hedge(k, hedge_eta).unwrap();
            let mut s = ExpertState::squint(k, 0.5).unwrap();
            let (mut hl, mut sl) = (0.0, 0.0);
            let mut cum = vec![0.0; k];
            for _ in 0..t {
                let l: Vec<f64> = means.iter().map(|m| (m + rng.random_range(-0.5..0.5)).clamp(0.0, 1.0)).collect();
                hl += h.weights().iter().zip(&l).map(|(p, v)| p * v).sum::<f64>();
                sl += s.weights().iter().zip(&l).map(|(p, v)| p * v).sum::<f64>();
                h.hedge_update(&l).unwrap();
                s.squint_update(&l).unwrap();
                for (c, v) in cum.iter_mut().zip(&l) {
                    *c += v;
                }
            }
            let (best, best_loss) = cum.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &c)| if c < b.1 { (i, c) } else { b });
            assert!(hl - best_loss <= 2.0 * (t as f64 * (k as f64).ln()).sqrt());
            let v = s.variance_sums()[best];
            let bound = (k as f64).ln() / 0.5 + 0.5 * v;
            assert!(sl - best_loss <= bound, "seed {seed}: {} > {bound}", sl - best_loss);
        }
    }

    proptest! {
        #[test]
        fn weights_stay_positive_and_normalized(seed in any::<u64>(), which in 0usize..4, k in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kind = match which {
                0 => ExpertKind::Hedge { eta: 5.0 },
                1 => ExpertKind::Squint { eta: 0.5, prior: vec![1.0; k] },
                2 => ExpertKind::Exp3 { eta: 5.0 },
                _ => ExpertKind::Gbpa { eta: 0.5, alpha: 0.5 },
            };
            let bandit = kind.is_bandit();
            let mut e = ExpertState::new(kind, k).unwrap();
            let mut last = e.cum_losses().to_vec();
            let mut last_v = e.variance_sums().to_vec();
            for _ in 0..200 {
                if bandit {
                    let a = e.sample_arm(&mut rng);
                    e.update_bandit(a, rng.random()).unwrap();
                } else {
                    let l: Vec<f64> = (0..k).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
                    e.update_full(&l).unwrap();
                }
                let p = e.weights();
                prop_assert!(p.iter().all(|&w| w > 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(e.cum_losses().iter().zip(&last).all(|(a, b)| a >= b));
                prop_assert!(e.variance_sums().iter().zip(&last_v).all(|(a, b)| a >= b));
                last = e.cum_losses().to_vec();
                last_v = e.variance_sums().to_vec();
            }
        }
    }
}
