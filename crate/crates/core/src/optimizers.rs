//! Gradient-based base learners: online gradient descent and online mirror
//! descent in agile, lazy-iterative and lazy closed-form variants.
//!
//! All learners play `x₁ = x₀` first. After the `t`-th gradient they move
//! with step size `η_t`:
//!
//! | mode              | update                                         |
//! |-------------------|------------------------------------------------|
//! | agile             | `x ← Π(∇φ*(∇φ(x) − η_t ∇_t))`                  |
//! | lazy iterative    | `θ ← θ − η_t ∇_t`, `x = Π(∇φ*(θ))`             |
//! | lazy closed form  | `x = Π(∇φ*(∇φ(x₀) − η_t S_t))`                 |
//! | ogd               | `x ← Π₂(x − η_t ∇_t)`                          |
//!
//! `Π` is the Bregman projection of the regularizer and `Π₂` the Euclidean
//! one. Under a fixed step the two lazy forms coincide; under the anytime
//! schedule the closed form rescales the whole sum by the current `η_t`.

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::regularizers::{DiameterMode, NormTag, Regularizer};
use crate::scalar::{all_finite, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<S> {
    Fixed { eta: S },
    /// `η_t = √(2ρD)/L · t^{−1/2}`.
    Anytime { rho: S, diameter: S, lipschitz: S },
}

/// Step size for round `t ≥ 1`.
pub fn step_size<S: Scalar>(schedule: &StepSchedule<S>, t: usize) -> Result<S> {
    if t == 0 {
        return Err(Error::InvalidInput("step size is defined for t ≥ 1".into()));
    }
    match *schedule {
        StepSchedule::Fixed { eta } => {
            if eta > S::zero() && eta.is_finite() {
                Ok(eta)
            } else {
                Err(Error::Config(format!("fixed step must be positive, got {eta}")))
            }
        }
        StepSchedule::Anytime { rho, diameter, lipschitz } => {
            for (name, v) in [("rho", rho), ("diameter", diameter), ("lipschitz", lipschitz)] {
                if !(v > S::zero()) || !v.is_finite() {
                    return Err(Error::Config(format!("anytime schedule needs {name} > 0, got {v}")));
                }
            }
            let t = S::from_usize_lossy(t);
            Ok((S::lit(2.0) * rho * diameter).sqrt() / lipschitz / t.sqrt())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    Agile,
    LazyIterative,
    LazyClosedForm,
    Ogd,
}

impl UpdateMode {
    pub fn name(self) -> &'static str {
        match self {
            UpdateMode::Agile => "agile",
            UpdateMode::LazyIterative => "lazy_iterative",
            UpdateMode::LazyClosedForm => "lazy_closed_form",
            UpdateMode::Ogd => "ogd",
        }
    }
}

/// One online learner over a fixed regularizer and domain.
#[derive(Debug, Clone)]
pub struct Optimizer<S> {
    reg: Regularizer<S>,
    dom: Domain<S>,
    mode: UpdateMode,
    schedule: StepSchedule<S>,
    adaptive_lipschitz: bool,
    dual_norm: NormTag,
    x0: Vec<S>,
    dual0: Vec<S>,
    x: Vec<S>,
    dual: Vec<S>,
    grad_sum: Vec<S>,
    t: usize,
    max_grad_norm: S,
    warm: Option<S>,
}

impl<S: Scalar> Optimizer<S> {
    /// Starts at the regularizer's default basepoint on `dom`.
    pub fn new(reg: Regularizer<S>, dom: Domain<S>, mode: UpdateMode, schedule: StepSchedule<S>) -> Result<Self> {
        let x0 = match mode {
            UpdateMode::Ogd => dom.center_point(),
            _ => reg.default_basepoint(&dom)?,
        };
        Self::with_basepoint(reg, dom, mode, schedule, x0)
    }

    pub fn with_basepoint(
        reg: Regularizer<S>,
        dom: Domain<S>,
        mode: UpdateMode,
        schedule: StepSchedule<S>,
        x0: Vec<S>,
    ) -> Result<Self> {
        step_size(&schedule, 1)?;
        if x0.len() != dom.dim() || !all_finite(&x0) {
            return Err(Error::InvalidInput("basepoint has wrong length or non-finite entries".into()));
        }
        if !dom.contains(&x0, S::lit(1e-9)) {
            return Err(Error::InvalidInput("basepoint lies outside the domain".into()));
        }
        let reg = if mode == UpdateMode::Ogd { Regularizer::quadratic() } else { reg };
        let dual0 = reg.mirror_map(&x0)?;
        let dual_norm = reg.strong_convexity(&dom).norm;
        Ok(Self {
            reg,
            mode,
            schedule,
            adaptive_lipschitz: false,
            dual_norm,
            x: x0.clone(),
            dual: dual0.clone(),
            grad_sum: vec![S::zero(); dom.dim()],
            dom,
            x0,
            dual0,
            t: 0,
            max_grad_norm: S::zero(),
            warm: None,
        })
    }

    /// Anytime schedule from the regularizer's strong convexity and analytic
    /// Bregman diameter (sampled when no analytic bound exists), with `L`
    /// tracked as the running maximum of observed dual gradient norms.
    /// `lipschitz_guess` is used only while every observed gradient is zero.
    pub fn anytime(reg: Regularizer<S>, dom: Domain<S>, mode: UpdateMode, lipschitz_guess: S) -> Result<Self> {
        let x0 = reg.default_basepoint(&dom)?;
        Self::anytime_at(reg, dom, mode, lipschitz_guess, x0)
    }

    /// [`Optimizer::anytime`] started from `x0`, with the diameter measured from it.
    pub fn anytime_at(reg: Regularizer<S>, dom: Domain<S>, mode: UpdateMode, lipschitz_guess: S, x0: Vec<S>) -> Result<Self> {
        let rho = reg.strong_convexity(&dom).rho;
        if x0.len() != dom.dim() {
            return Err(Error::InvalidInput("basepoint has wrong length".into()));
        }
        let diameter = match reg.diameter(&dom, &x0, DiameterMode::Analytic) {
            Ok(d) => d.value,
            Err(Error::UnsupportedPair { .. }) => {
                reg.diameter(&dom, &x0, DiameterMode::Sampled { samples: 10_000, seed: 0 })?.value
            }
            Err(e) => return Err(e),
        };
        let schedule = StepSchedule::Anytime { rho, diameter, lipschitz: lipschitz_guess };
        Ok(Self::with_basepoint(reg, dom, mode, schedule, x0)?.adaptive_lipschitz(true))
    }

    /// When on, the schedule's `L` is replaced by the running maximum of
    /// observed dual gradient norms once that is positive.
    pub fn adaptive_lipschitz(mut self, on: bool) -> Self {
        self.adaptive_lipschitz = on;
        self
    }

    pub fn regularizer(&self) -> &Regularizer<S> {
        &self.reg
    }

    pub fn domain(&self) -> &Domain<S> {
        &self.dom
    }

    pub fn mode(&self) -> UpdateMode {
        self.mode
    }

    pub fn schedule(&self) -> &StepSchedule<S> {
        &self.schedule
    }

    pub fn basepoint(&self) -> &[S] {
        &self.x0
    }

    /// Current prediction.
    pub fn predict(&self) -> &[S] {
        &self.x
    }

    pub fn grad_sum(&self) -> &[S] {
        &self.grad_sum
    }

    /// Number of gradients observed.
    pub fn round(&self) -> usize {
        self.t
    }

    /// Norm in which gradients are measured for this learner.
    pub fn dual_norm(&self) -> NormTag {
        self.dual_norm
    }

    /// Largest dual gradient norm seen so far.
    pub fn max_grad_norm(&self) -> S {
        self.max_grad_norm
    }

    /// `η_t` given the running Lipschitz estimate `observed`.
    pub fn eta_with(&self, t: usize, observed: S) -> Result<S> {
        let schedule = match self.schedule {
            StepSchedule::Anytime { rho, diameter, .. } if self.adaptive_lipschitz && observed > S::zero() => {
                StepSchedule::Anytime { rho, diameter, lipschitz: observed }
            }
            s => s,
        };
        step_size(&schedule, t)
    }

    /// `η_t` for this learner's own running Lipschitz estimate.
    pub fn eta(&self, t: usize) -> Result<S> {
        self.eta_with(t, self.max_grad_norm)
    }

    fn observe(&mut self, grad: &[S]) -> Result<S> {
        if grad.len() != self.dom.dim() {
            return Err(Error::InvalidInput(format!(
                "gradient has length {}, expected {}",
                grad.len(),
                self.dom.dim()
            )));
        }
        if !all_finite(grad) {
            return Err(Error::InvalidInput("non-finite gradient".into()));
        }
        self.t += 1;
        self.max_grad_norm = self.max_grad_norm.max(self.dual_norm.dual_norm(grad));
        for (s, &g) in self.grad_sum.iter_mut().zip(grad) {
            *s = *s + g;
        }
        self.eta(self.t)
    }

    fn require(&self, expected: UpdateMode) -> Result<()> {
        if self.mode == expected {
            Ok(())
        } else {
            Err(Error::WrongMode { expected: expected.name(), actual: self.mode.name() })
        }
    }

    fn project(&mut self, theta: &[S]) -> Result<Vec<S>> {
        let (x, hint) = self.reg.project_dual_warm(theta, &self.dom, self.warm)?;
        self.warm = hint;
        Ok(x)
    }

    /// Agile mirror descent step.
    pub fn omd_agile_step(&mut self, grad: &[S]) -> Result<&[S]> {
        self.require(UpdateMode::Agile)?;
        let eta = self.observe(grad)?;
        let theta: Vec<S> = self
            .reg
            .mirror_map(&self.x)?
            .into_iter()
            .zip(grad)
            .map(|(m, &g)| m - eta * g)
            .collect();
        self.x = self.project(&theta)?;
        Ok(&self.x)
    }

    /// Lazy mirror descent step on the stored dual iterate.
    pub fn omd_lazy_step(&mut self, grad: &[S]) -> Result<&[S]> {
        self.require(UpdateMode::LazyIterative)?;
        let eta = self.observe(grad)?;
        for (d, &g) in self.dual.iter_mut().zip(grad) {
            *d = *d - eta * g;
        }
        let theta = self.dual.clone();
        self.x = self.project(&theta)?;
        Ok(&self.x)
    }

    /// Lazy mirror descent from `x₀` and the gradient sum alone.
    pub fn omd_lazy_closed_form(&mut self, grad: &[S]) -> Result<&[S]> {
        self.require(UpdateMode::LazyClosedForm)?;
        let eta = self.observe(grad)?;
        let sum = self.grad_sum.clone();
        self.x = self.closed_form_point(&sum, eta)?;
        Ok(&self.x)
    }

    /// Projected online gradient descent.
    pub fn ogd_step(&mut self, grad: &[S]) -> Result<&[S]> {
        self.require(UpdateMode::Ogd)?;
        let eta = self.observe(grad)?;
        let y: Vec<S> = self.x.iter().zip(grad).map(|(&x, &g)| x - eta * g).collect();
        self.x = self.dom.project_euclidean(&y)?;
        Ok(&self.x)
    }

    /// Feeds one gradient through whichever update this learner uses.
    pub fn step(&mut self, grad: &[S]) -> Result<&[S]> {
        match self.mode {
            UpdateMode::Agile => self.omd_agile_step(grad),
            UpdateMode::LazyIterative => self.omd_lazy_step(grad),
            UpdateMode::LazyClosedForm => self.omd_lazy_closed_form(grad),
            UpdateMode::Ogd => self.ogd_step(grad),
        }
    }

    /// `Π(∇φ*(∇φ(x₀) − η·sum))`.
    pub fn closed_form_point(&mut self, sum: &[S], eta: S) -> Result<Vec<S>> {
        if sum.len() != self.dom.dim() {
            return Err(Error::InvalidInput("gradient sum has wrong length".into()));
        }
        let theta: Vec<S> = self.dual0.iter().zip(sum).map(|(&d, &s)| d - eta * s).collect();
        self.project(&theta)
    }

    /// Closed-form prediction after `t` gradients summing to `sum`, with an
    /// externally tracked Lipschitz estimate. Does not touch this learner's
    /// own gradient sum; used when many learners share one accumulator.
    pub fn closed_form_from_shared(&mut self, sum: &[S], t: usize, observed_lipschitz: S) -> Result<Vec<S>> {
        self.require(UpdateMode::LazyClosedForm)?;
        if t == 0 {
            return Ok(self.x0.clone());
        }
        let eta = self.eta_with(t, observed_lipschitz)?;
        self.closed_form_point(sum, eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dot, norm2};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gradients(seed: u64, d: usize, n: usize, scale: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect()).collect()
    }

    fn fixed(eta: f64) -> StepSchedule<f64> {
        StepSchedule::Fixed { eta }
    }

    fn families() -> Vec<(Regularizer<f64>, Domain<f64>)> {
        let s = Domain::simplex(6).unwrap();
        let b = Domain::unit_ball(6).unwrap();
        vec![
            (Regularizer::quadratic(), s.clone()),
            (Regularizer::quadratic(), b.clone()),
            (Regularizer::neg_entropy(), s.clone()),
            (Regularizer::hypentropy(0.1).unwrap(), s.clone()),
            (Regularizer::hypentropy(2.0).unwrap(), s),
            (Regularizer::hypentropy(0.1).unwrap(), b.clone()),
            (Regularizer::hypentropy(2.0).unwrap(), b),
        ]
    }

    #[test]
    fn step_size_examples() {
        let a = StepSchedule::Anytime { rho: 1.0, diameter: 2.0, lipschitz: 1.0 };
        assert_eq!(step_size(&a, 1).unwrap(), 2.0);
        assert_abs_diff_eq!(step_size(&a, 4).unwrap(), 1.0, epsilon = 1e-15);
        for t in [1, 7, 1000] {
            assert_eq!(step_size(&fixed(0.1), t).unwrap(), 0.1);
        }
        let mut prev = f64::INFINITY;
        for t in 1..100 {
            let e = step_size(&a, t).unwrap();
            assert!(e > 0.0 && e <= prev);
            prev = e;
        }
        assert!(matches!(
            step_size(&StepSchedule::Anytime { rho: 0.0, diameter: 1.0, lipschitz: 1.0 }, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(step_size(&fixed(-1.0), 1), Err(Error::Config(_))));
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for (reg, dom) in families() {
            for mode in [UpdateMode::Agile, UpdateMode::LazyIterative, UpdateMode::LazyClosedForm, UpdateMode::Ogd] {
                let mut o = Optimizer::new(reg, dom.clone(), mode, fixed(0.3)).unwrap();
                let x1 = o.predict().to_vec();
                for _ in 0..5 {
                    o.step(&vec![0.0; dom.dim()]).unwrap();
                }
                for (a, b) in o.predict().iter().zip(&x1) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadratic_agile_reproduces_ogd() {
        for dom in [Domain::unit_ball(5).unwrap(), Domain::simplex(5).unwrap()] {
            let mut omd = Optimizer::new(Regularizer::quadratic(), dom.clone(), UpdateMode::Agile, fixed(0.2)).unwrap();
            let mut ogd = Optimizer::new(Regularizer::quadratic(), dom.clone(), UpdateMode::Ogd, fixed(0.2)).unwrap();
            for g in gradients(3, 5, 1000, 2.0) {
                let a = omd.step(&g).unwrap().to_vec();
                let b = ogd.step(&g).unwrap();
                for (u, v) in a.iter().zip(b) {
                    assert!((u - v).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn entropic_agile_is_multiplicative_weights() {
        let dom = Domain::simplex(5).unwrap();
        let eta = 0.05;
        let mut omd = Optimizer::new(Regularizer::neg_entropy(), dom, UpdateMode::Agile, fixed(eta)).unwrap();
        let mut w = vec![0.2; 5];
        for g in gradients(4, 5, 1000, 1.0) {
            let x = omd.step(&g).unwrap();
            let u: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi * (-eta * gi).exp()).collect();
            let z: f64 = u.iter().sum();
            w = u.iter().map(|v| v / z).collect();
            for (a, b) in x.iter().zip(&w) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lazy_iterative_matches_closed_form() {
        for (reg, dom) in families() {
            let mut it = Optimizer::new(reg, dom.clone(), UpdateMode::LazyIterative, fixed(0.05)).unwrap();
            let mut cf = Optimizer::new(reg, dom.clone(), UpdateMode::LazyClosedForm, fixed(0.05)).unwrap();
            for g in gradients(5, dom.dim(), 1000, 1.0) {
                let a = it.step(&g).unwrap().to_vec();
                let b = cf.step(&g).unwrap();
                for (u, v) in a.iter().zip(b) {
                    assert!((u - v).abs() <= 1e-9, "{} on {}", reg.name(), dom.name());
                }
            }
        }
    }

    #[test]
    fn lazy_examples() {
        let dom = Domain::l2_ball(vec![0.0; 3], 100.0).unwrap();
        let mut o = Optimizer::new(Regularizer::quadratic(), dom.clone(), UpdateMode::LazyIterative, fixed(0.1)).unwrap();
        let mut sum = vec![0.0; 3];
        for g in gradients(6, 3, 50, 1.0) {
            for (s, v) in sum.iter_mut().zip(&g) {
                *s += v;
            }
            let x = o.step(&g).unwrap();
            for (a, s) in x.iter().zip(&sum) {
                assert_abs_diff_eq!(*a, -0.1 * s, epsilon = 1e-12);
            }
        }
        let cf = Optimizer::new(Regularizer::neg_entropy(), Domain::simplex(4).unwrap(), UpdateMode::LazyClosedForm, fixed(0.1)).unwrap();
        assert_eq!(cf.predict(), cf.basepoint());
        assert_eq!(cf.round(), 0);
    }

    #[test]
    fn closed_form_is_deterministic_and_stateless() {
        let dom = Domain::unit_ball(6).unwrap();
        let reg = Regularizer::hypentropy(0.25).unwrap();
        let mut a = Optimizer::anytime(reg, dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
        let mut b = a.clone();
        let mut shared = a.clone();
        let mut sum = vec![0.0; 6];
        let mut lmax: f64 = 0.0;
        for (t, g) in gradients(7, 6, 300, 3.0).into_iter().enumerate() {
            let xa = a.step(&g).unwrap().to_vec();
            let xb = b.step(&g).unwrap();
            assert_eq!(xa, xb);
            for (s, v) in sum.iter_mut().zip(&g) {
                *s += v;
            }
            lmax = lmax.max(norm2(&g));
            let xs = shared.closed_form_from_shared(&sum, t + 1, lmax).unwrap();
            for (u, v) in xs.iter().zip(&xa) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-12);
            }
        }
        assert_eq!(a.grad_sum(), &sum[..]);
        assert_eq!(a.max_grad_norm(), lmax);
    }

    #[test]
    fn ogd_large_step_lands_on_sphere() {
        let dom = Domain::unit_ball(4).unwrap();
        let mut o = Optimizer::new(Regularizer::quadratic(), dom, UpdateMode::Ogd, fixed(1e3)).unwrap();
        let x = o.step(&[1.0, -2.0, 0.5, 0.0]).unwrap();
        assert!((norm2(x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let mut o = Optimizer::new(Regularizer::quadratic(), Domain::simplex(3).unwrap(), UpdateMode::Ogd, fixed(0.1)).unwrap();
        assert!(matches!(o.omd_lazy_step(&[0.0; 3]), Err(Error::WrongMode { .. })));
        assert!(o.step(&[0.0, 1.0]).is_err());
    }

    /// Linear-loss regret of a learner over a gradient stream, and the
    /// measured dual Lipschitz constant.
    fn linear_regret(o: &mut Optimizer<f64>, grads: &[Vec<f64>]) -> (f64, f64) {
        let mut total = 0.0;
        let mut sum = vec![0.0; o.domain().dim()];
        for g in grads {
            total += dot(o.predict(), g);
            for (s, v) in sum.iter_mut().zip(g) {
                *s += v;
            }
            o.step(g).unwrap();
        }
        let best = o.domain().linear_minimizer(&sum);
        (total - dot(&best, &sum), o.max_grad_norm())
    }

    #[test]
    fn tuned_omd_meets_its_regret_bound() {
        let t = 5000;
        for (reg, dom) in families() {
            let sc = reg.strong_convexity(&dom);
            let x0 = reg.default_basepoint(&dom).unwrap();
            let diam = reg.diameter(&dom, &x0, DiameterMode::Analytic).unwrap().value;
            // a drifting stream: a fixed bias plus noise, so the best point is informative
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let bias: Vec<f64> = (0..dom.dim()).map(|_| rng.random_range(-0.3..0.3)).collect();
            let grads: Vec<Vec<f64>> = (0..t)
                .map(|_| bias.iter().map(|b| b + rng.random_range(-1.0..1.0)).collect())
                .collect();
            let l = grads.iter().map(|g| sc.norm.dual_norm(g)).fold(0.0, f64::max);
            let eta = (2.0 * sc.rho * diam).sqrt() / l / (t as f64).sqrt();
            for mode in [UpdateMode::Agile, UpdateMode::LazyClosedForm] {
                let mut o = Optimizer::with_basepoint(reg, dom.clone(), mode, fixed(eta), x0.clone()).unwrap();
                let (regret, _) = linear_regret(&mut o, &grads);
                let bound = l * (2.0 * diam * t as f64 / sc.rho).sqrt();
                assert!(regret <= bound, "{} {:?} on {}: {regret} > {bound}", reg.name(), mode, dom.name());
            }
            let mut o = Optimizer::anytime(reg, dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
            let (regret, lmax) = linear_regret(&mut o, &grads);
            assert!(regret <= 1.5 * lmax * (2.0 * diam * t as f64 / sc.rho).sqrt());
        }
    }

    #[test]
    fn runs_in_single_precision() {
        let dom = Domain::<f32>::simplex(8).unwrap();
        let reg = Regularizer::<f32>::hypentropy(0.5).unwrap();
        let mut o = Optimizer::anytime(reg, dom.clone(), UpdateMode::LazyClosedForm, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let g: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let x = o.step(&g).unwrap();
            assert!(dom.contains(x, 1e-5));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn every_mode_stays_feasible(seed in any::<u64>(), scale in 0.01f64..50.0, which in 0usize..7, m in 0usize..4) {
            let (reg, dom) = families().swap_remove(which);
            let mode = [UpdateMode::Agile, UpdateMode::LazyIterative, UpdateMode::LazyClosedForm, UpdateMode::Ogd][m];
            let mut o = Optimizer::anytime(reg, dom.clone(), mode, 1.0).unwrap();
            for g in gradients(seed, dom.dim(), 60, scale) {
                let x = o.step(&g).unwrap();
                prop_assert!(dom.contains(x, 1e-9));
            }
        }
    }
}
