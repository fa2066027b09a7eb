//! Synthetic workloads and offline comparators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::optimizers::{Optimizer, StepSchedule, UpdateMode};
use crate::regularizers::Regularizer;
use crate::scalar::{dot, norm2, Scalar};

/// How raw Gaussian features are brought inside the feature ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Rescale onto the sphere of radius `r` when outside it.
    Radial,
    /// Clip every coordinate to `[−r/√d, r/√d]`.
    Coordinate,
}

fn round_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Linear regression with Gaussian noise: `y_t = ⟨w, x_t⟩ + ε_t`, `ε_t ∼ N(0, 1)`.
///
/// Round `t` draws from its own random stream, so any round can be
/// regenerated independently of the others.
#[derive(Debug, Clone)]
pub struct RegressionStream<S> {
    seed: u64,
    horizon: usize,
    w: Vec<S>,
    trunc_radius: S,
    truncation: Truncation,
}

impl<S: Scalar> RegressionStream<S> {
    /// The hidden weight is drawn uniformly from the unit ball.
    pub fn new(seed: u64, dim: usize, horizon: usize, trunc_radius: S, truncation: Truncation) -> Result<Self> {
        if dim == 0 || horizon == 0 {
            return Err(Error::InvalidInput("dimension and horizon must be positive".into()));
        }
        if !(trunc_radius > S::zero()) {
            return Err(Error::InvalidInput("truncation radius must be positive".into()));
        }
        let ball = Domain::unit_ball(dim)?;
        let w = ball.sample_uniform(&mut round_rng(seed, 0), false);
        Ok(Self { seed, horizon, w, trunc_radius, truncation })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn weights(&self) -> &[S] {
        &self.w
    }

    pub fn trunc_radius(&self) -> S {
        self.trunc_radius
    }

    /// Features and target of round `t ∈ [1, T]`.
    pub fn round(&self, t: usize) -> Result<(Vec<S>, S)> {
        if t == 0 || t > self.horizon {
            return Err(Error::InvalidInput(format!("round {t} outside [1, {}]", self.horizon)));
        }
        let mut rng = round_rng(self.seed, t as u64);
        let d = self.dim();
        let mut x: Vec<S> = (0..d).map(|_| S::lit(rng.sample::<f64, _>(StandardNormal))).collect();
        match self.truncation {
            Truncation::Radial => {
                let n = norm2(&x);
                if n > self.trunc_radius {
                    let s = self.trunc_radius / n;
                    x.iter_mut().for_each(|v| *v = *v * s);
                }
            }
            Truncation::Coordinate => {
                let c = self.trunc_radius / S::from_usize_lossy(d).sqrt();
                x.iter_mut().for_each(|v| *v = v.max(-c).min(c));
            }
        }
        let noise = S::lit(rng.sample::<f64, _>(StandardNormal));
        let y = dot(&self.w, &x) + noise;
        Ok((x, y))
    }

    pub fn rounds(&self) -> Result<Vec<(Vec<S>, S)>> {
        (1..=self.horizon).map(|t| self.round(t)).collect()
    }
}

/// `((⟨u, x⟩ − y)², 2(⟨u, x⟩ − y)·x)`.
pub fn square_loss<S: Scalar>(u: &[S], x: &[S], y: S) -> (S, Vec<S>) {
    let r = dot(u, x) - y;
    (r * r, x.iter().map(|&v| S::lit(2.0) * r * v).collect())
}

/// Bound on `|⟨∇f(u), z⟩|` over `u, z ∈ D` for square losses on the given
/// samples: `2(sup_u |⟨u, x⟩| + |y|)·sup_z |⟨x, z⟩|`, maximized over samples.
pub fn square_loss_scale<S: Scalar>(dom: &Domain<S>, samples: &[(Vec<S>, S)]) -> S {
    samples
        .iter()
        .map(|(x, y)| {
            let m = dom.max_abs_inner(x);
            S::lit(2.0) * (m + y.abs()) * m
        })
        .fold(S::zero(), |a, b| a.max(b))
}

/// Linear costs `⟨±L·aᵢ·eᵢ, x⟩`, one of the `2d` signed axes uniformly per round.
#[derive(Debug, Clone)]
pub struct AdversarialStream<S> {
    seed: u64,
    lipschitz: S,
    scales: Vec<S>,
}

impl<S: Scalar> AdversarialStream<S> {
    pub fn new(seed: u64, lipschitz: S, scales: Vec<S>) -> Result<Self> {
        if !(lipschitz > S::zero()) {
            return Err(Error::InvalidInput("L must be positive".into()));
        }
        if scales.is_empty() || scales.iter().any(|a| !(*a > S::zero())) {
            return Err(Error::InvalidInput("basis scales must be positive".into()));
        }
        Ok(Self { seed, lipschitz, scales })
    }

    pub fn unit(seed: u64, dim: usize, lipschitz: S) -> Result<Self> {
        Self::new(seed, lipschitz, vec![S::one(); dim])
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn round(&self, t: usize) -> Vec<S> {
        let mut rng = round_rng(self.seed, t as u64);
        let d = self.dim();
        let pick = rng.random_range(0..2 * d);
        let mut v = vec![S::zero(); d];
        let i = pick % d;
        let sign = if pick < d { S::one() } else { -S::one() };
        v[i] = sign * self.lipschitz * self.scales[i];
        v
    }
}

/// Running sufficient statistics of `Σ (⟨u, x_t⟩ − y_t)² = uᵀAu − 2bᵀu + c`.
#[derive(Debug, Clone)]
pub struct SquareLossTotals<S> {
    dim: usize,
    a: Vec<S>,
    b: Vec<S>,
    c: S,
}

const COMPARATOR_MAX_ITERS: usize = 200_000;

impl<S: Scalar> SquareLossTotals<S> {
    pub fn new(dim: usize) -> Self {
        Self { dim, a: vec![S::zero(); dim * dim], b: vec![S::zero(); dim], c: S::zero() }
    }

    pub fn from_rounds(dim: usize, rounds: &[(Vec<S>, S)]) -> Self {
        let mut s = Self::new(dim);
        for (x, y) in rounds {
            s.add(x, *y);
        }
        s
    }

    pub fn add(&mut self, x: &[S], y: S) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * self.dim + j] = self.a[i * self.dim + j] + x[i] * x[j];
            }
            self.b[i] = self.b[i] + y * x[i];
        }
        self.c = self.c + y * y;
    }

    fn a_times(&self, u: &[S]) -> Vec<S> {
        (0..self.dim).map(|i| dot(&self.a[i * self.dim..(i + 1) * self.dim], u)).collect()
    }

    pub fn value(&self, u: &[S]) -> S {
        dot(u, &self.a_times(u)) - S::lit(2.0) * dot(&self.b, u) + self.c
    }

    pub fn gradient(&self, u: &[S]) -> Vec<S> {
        self.a_times(u).iter().zip(&self.b).map(|(&au, &b)| S::lit(2.0) * (au - b)).collect()
    }

    /// Largest eigenvalue of `A` by power iteration, padded slightly.
    fn lambda_max(&self) -> S {
        let mut v = vec![S::one() / S::from_usize_lossy(self.dim).sqrt(); self.dim];
        let mut lam = S::zero();
        for _ in 0..500 {
            let w = self.a_times(&v);
            let n = norm2(&w);
            if n == S::zero() {
                return S::zero();
            }
            lam = n;
            v = w.into_iter().map(|x| x / n).collect();
        }
        lam * S::lit(1.01)
    }

    /// Minimizer over `dom` by accelerated projected gradient with
    /// gradient-based restart; stops when a step from the extrapolated point
    /// moves less than `tol·(1 + ‖u‖)`.
    pub fn minimize(&self, dom: &Domain<S>, tol: S) -> Result<Vec<S>> {
        let lip = S::lit(2.0) * self.lambda_max();
        let mut x = dom.center_point();
        if lip == S::zero() {
            return Ok(x);
        }
        let mut y = x.clone();
        let mut theta = S::one();
        let mut moved = S::infinity();
        for _ in 0..COMPARATOR_MAX_ITERS {
            let g = self.gradient(&y);
            let trial: Vec<S> = y.iter().zip(&g).map(|(&yi, &gi)| yi - gi / lip).collect();
            let next = dom.project_euclidean(&trial)?;
            let step: Vec<S> = next.iter().zip(&y).map(|(&a, &b)| a - b).collect();
            moved = norm2(&step);
            if moved <= tol * (S::one() + norm2(&next)) {
                return Ok(next);
            }
            let progress: Vec<S> = next.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            if dot(&step, &progress) < S::zero() {
                // momentum points uphill: restart from the new point
                theta = S::one();
                y = next.clone();
                x = next;
                continue;
            }
            let theta_next = (S::one() + (S::one() + S::lit(4.0) * theta * theta).sqrt()) / S::lit(2.0);
            let beta = (theta - S::one()) / theta_next;
            y = next.iter().zip(&x).map(|(&n, &o)| n + beta * (n - o)).collect();
            x = next;
            theta = theta_next;
        }
        Err(Error::Convergence { what: "square-loss comparator", iterations: COMPARATOR_MAX_ITERS, residual: moved.as_f64() })
    }
}

/// Best fixed point for linear costs with total gradient `sum`.
pub fn best_in_hindsight_linear<S: Scalar>(sum: &[S], dom: &Domain<S>) -> Vec<S> {
    dom.linear_minimizer(sum)
}

/// Best fixed point for a sequence of square losses.
pub fn best_in_hindsight_square<S: Scalar>(rounds: &[(Vec<S>, S)], dom: &Domain<S>, tol: S) -> Result<Vec<S>> {
    SquareLossTotals::from_rounds(dom.dim(), rounds).minimize(dom, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundResult {
    pub mean_regret: f64,
    /// `(DL/2)·√(2T/(dπ))`.
    pub predicted_floor: f64,
    pub seeds: usize,
}

impl LowerBoundResult {
    pub fn holds(&self) -> bool {
        self.mean_regret >= 0.5 * self.predicted_floor
    }
}

/// `(DL/2)·√(2T/(dπ))`, the expected regret of any learner against random
/// signed unit axes, by the Gaussian approximation of `E|S_T(i)|`.
pub fn adversarial_floor(diameter: f64, lipschitz: f64, horizon: usize, dim: usize) -> f64 {
    diameter * lipschitz / 2.0 * (2.0 * horizon as f64 / (dim as f64 * std::f64::consts::PI)).sqrt()
}

/// Mean regret of OGD with `η = D/(L√T)` on `dom` against the adversarial
/// stream over `n_seeds` seeds starting at `seed`.
pub fn lower_bound_check<S: Scalar>(dom: &Domain<S>, lipschitz: S, horizon: usize, n_seeds: usize, seed: u64) -> Result<LowerBoundResult> {
    if n_seeds == 0 || horizon == 0 {
        return Err(Error::InvalidInput("need at least one seed and one round".into()));
    }
    let d = dom.dim();
    let diam = dom.diameter_l2();
    let eta = diam / (lipschitz * S::from_usize_lossy(horizon).sqrt());
    let mut total = 0.0;
    for s in 0..n_seeds as u64 {
        let stream = AdversarialStream::unit(seed.wrapping_add(s), d, lipschitz)?;
        let mut ogd = Optimizer::new(Regularizer::quadratic(), dom.clone(), UpdateMode::Ogd, StepSchedule::Fixed { eta })?;
        let mut loss = S::zero();
        let mut sum = vec![S::zero(); d];
        for t in 1..=horizon {
            let v = stream.round(t);
            loss = loss + dot(ogd.predict(), &v);
            for (a, &b) in sum.iter_mut().zip(&v) {
                *a = *a + b;
            }
            ogd.step(&v)?;
        }
        let best = dom.linear_minimizer(&sum);
        total += (loss - dot(&best, &sum)).as_f64();
    }
    Ok(LowerBoundResult {
        mean_regret: total / n_seeds as f64,
        predicted_floor: adversarial_floor(diam.as_f64(), lipschitz.as_f64(), horizon, d),
        seeds: n_seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn regression_rounds_are_reproducible_and_bounded() {
        let s = RegressionStream::<f64>::new(9, 20, 1000, 1.0, Truncation::Radial).unwrap();
        assert!(norm2(s.weights()) <= 1.0);
        assert_eq!(s.round(17).unwrap(), s.round(17).unwrap());
        let again = RegressionStream::<f64>::new(9, 20, 1000, 1.0, Truncation::Radial).unwrap();
        assert_eq!(s.round(400).unwrap(), again.round(400).unwrap());
        for t in 1..=1000 {
            let (x, _) = s.round(t).unwrap();
            assert!(norm2(&x) <= 1.0 + 1e-12);
        }
        assert!(s.round(0).is_err() && s.round(1001).is_err());
        let c = RegressionStream::<f64>::new(9, 5, 100, 0.5, Truncation::Coordinate).unwrap();
        for t in 1..=100 {
            assert!(norm2(&c.round(t).unwrap().0) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn regression_noise_is_centered() {
        let n = 100_000;
        let s = RegressionStream::<f64>::new(1, 4, n, 1.0, Truncation::Radial).unwrap();
        let mean: f64 = (1..=n)
            .map(|t| {
                let (x, y) = s.round(t).unwrap();
                y - dot(s.weights(), &x)
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn square_loss_examples() {
        let (v, g) = square_loss(&[1.0, 2.0], &[3.0, 1.0], 5.0);
        assert_eq!((v, g), (0.0, vec![0.0, 0.0]));
        let (v1, _) = square_loss(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        let (v2, _) = square_loss(&[0.0, 0.0], &[1.0, 1.0], 2.0);
        assert_eq!(v2, 4.0 * v1);
        let u = [0.3f64, -0.2, 0.5];
        let x = [1.0f64, 0.4, -0.7];
        let (_, g) = square_loss(&u, &x, 0.9);
        let h = 1e-6;
        for i in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            let fd = (square_loss(&up, &x, 0.9).0 - square_loss(&dn, &x, 0.9).0) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3));
        }
    }

    #[test]
    fn adversarial_stream_properties() {
        let s = AdversarialStream::<f64>::unit(4, 3, 2.0).unwrap();
        let n = 60_000;
        let mut mean = [0.0; 3];
        for t in 1..=n {
            let v = s.round(t);
            assert_eq!(norm2(&v), 2.0);
            for (m, x) in mean.iter_mut().zip(&v) {
                *m += x / n as f64;
            }
        }
        // each coordinate has variance L²/d
        let sigma = (4.0 / 3.0 / n as f64).sqrt();
        for m in mean {
            assert!(m.abs() <= 4.0 * sigma);
        }
        let coin = AdversarialStream::<f64>::unit(1, 1, 1.0).unwrap();
        for t in 1..100 {
            assert_eq!(coin.round(t)[0].abs(), 1.0);
        }
    }

    #[test]
    fn linear_comparators() {
        assert_eq!(best_in_hindsight_linear(&[1.0, 3.0, 2.0], &Domain::simplex(3).unwrap()), vec![1.0, 0.0, 0.0]);
        let b = best_in_hindsight_linear(&[3.0, 4.0], &Domain::unit_ball(2).unwrap());
        assert_abs_diff_eq!(b[0], -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], -0.8, epsilon = 1e-15);
    }

    /// Grid oracle for the square-loss comparator in two dimensions.
    #[test]
    fn square_comparator_matches_grid() {
        for (seed, dom) in [(1u64, Domain::<f64>::simplex(2).unwrap()), (2, Domain::unit_ball(2).unwrap()), (3, Domain::l2_ball(vec![0.0; 2], 0.3).unwrap())] {
            let s = RegressionStream::<f64>::new(seed, 2, 200, 1.0, Truncation::Radial).unwrap();
            let rounds = s.rounds().unwrap();
            let tot = SquareLossTotals::from_rounds(2, &rounds);
            let u = tot.minimize(&dom, 1e-10).unwrap();
            let mut best = (f64::INFINITY, vec![0.0, 0.0]);
            let n = 2000;
            for i in 0..=n {
                for j in 0..=n {
                    let p = vec![-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64];
                    let p = if dom.is_simplex() { vec![(p[0] + 1.0) / 2.0, 1.0 - (p[0] + 1.0) / 2.0] } else { p };
                    if dom.contains(&p, 0.0) {
                        let v = tot.value(&p);
                        if v < best.0 {
                            best = (v, p);
                        }
                    }
                }
                if dom.is_simplex() && i == n {
                    break;
                }
            }
            if let crate::geometry::DomainKind::L2Ball { radius, .. } = dom.kind() {
                // constrained optima sit on the circle, between grid points
                let m = 1_000_000;
                for k in 0..m {
                    let a = std::f64::consts::TAU * k as f64 / m as f64;
                    let p = vec![radius * a.cos(), radius * a.sin()];
                    let v = tot.value(&p);
                    if v < best.0 {
                        best = (v, p);
                    }
                }
            }
            // refine locally on a finer grid
            let c = best.1.clone();
            for i in -200..=200 {
                for j in -200..=200 {
                    let p = if dom.is_simplex() {
                        let a = c[0] + i as f64 * 5e-6;
                        vec![a, 1.0 - a]
                    } else {
                        vec![c[0] + i as f64 * 1e-5, c[1] + j as f64 * 1e-5]
                    };
                    if dom.contains(&p, 0.0) {
                        let v = tot.value(&p);
                        if v < best.0 {
                            best = (v, p);
                        }
                    }
                }
            }
            assert_abs_diff_eq!(u[0], best.1[0], epsilon = 1e-4);
            assert_abs_diff_eq!(u[1], best.1[1], epsilon = 1e-4);
            assert!(tot.value(&u) <= best.0 + 1e-9);
        }
    }

    #[test]
    fn square_comparator_is_optimal_along_feasible_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dom in [Domain::<f64>::simplex(20).unwrap(), Domain::unit_ball(20).unwrap()] {
            let s = RegressionStream::<f64>::new(11, 20, 2000, 1.0, Truncation::Radial).unwrap();
            let rounds = s.rounds().unwrap();
            let tot = SquareLossTotals::from_rounds(20, &rounds);
            let u = tot.minimize(&dom, 1e-10).unwrap();
            let base = tot.value(&u);
            for _ in 0..10 {
                let z = dom.sample_uniform(&mut rng, false);
                for step in [1e-3, 1e-2, 0.1, 1.0] {
                    let p: Vec<f64> = u.iter().zip(&z).map(|(a, b)| a + step * (b - a)).collect();
                    assert!(tot.value(&p) >= base - 1e-8 * base.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn scale_bounds_every_surrogate_value() {
        let dom = Domain::<f64>::unit_ball(5).unwrap();
        let s = RegressionStream::<f64>::new(3, 5, 300, 1.0, Truncation::Radial).unwrap();
        let rounds = s.rounds().unwrap();
        let f = square_loss_scale(&dom, &rounds);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (x, y) in &rounds {
            let u = dom.sample_uniform(&mut rng, false);
            let z = dom.sample_uniform(&mut rng, false);
            let (_, g) = square_loss(&u, x, *y);
            assert!(dot(&g, &z).abs() <= f);
        }
    }

    #[test]
    fn lower_bound_floor_scaling() {
        let f1 = adversarial_floor(2.0, 1.0, 10_000, 5);
        let f4 = adversarial_floor(2.0, 1.0, 40_000, 5);
        assert_abs_diff_eq!(f4, 2.0 * f1, epsilon = 1e-12);
        let r = lower_bound_check(&Domain::<f64>::unit_ball(5).unwrap(), 1.0, 2000, 10, 0).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn features_stay_in_ball(seed in any::<u64>(), d in 1usize..30, r in 0.1f64..3.0, t in 1usize..500) {
            for mode in [Truncation::Radial, Truncation::Coordinate] {
                let s = RegressionStream::<f64>::new(seed, d, 500, r, mode).unwrap();
                let (x, y) = s.round(t).unwrap();
                prop_assert!(norm2(&x) <= r * (1.0 + 1e-12));
                prop_assert!(y.is_finite());
            }
        }
    }
}
