//! Mirror maps: quadratic, negative entropy and hypentropy.
//!
//! A [`Regularizer`] knows its value, gradient (`mirror_map`), conjugate
//! gradient (`mirror_inverse`), Bregman divergence, strong-convexity constant
//! on a given domain, and how to Bregman-project a dual point onto a domain.
//!
//! The negative entropy is the convex `Σ xᵢ log xᵢ`, so its Bregman divergence
//! is the (generalized) KL divergence. Hypentropy with parameter `β` is
//! `Σ xᵢ asinh(xᵢ/β) − √(xᵢ² + β²)`, whose Hessian `1/√(x² + β²)` moves from
//! entropic (`β → 0`) to quadratic (`β → ∞`) curvature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{bregman_project_numeric, clamp_for_log, Domain, DomainKind};
use crate::scalar::{all_finite, norm1, norm2, norm_inf, sub, Scalar};

/// Norm in which a regularizer's strong convexity is stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    L1,
    L2,
}

impl NormTag {
    pub fn norm<S: Scalar>(self, v: &[S]) -> S {
        match self {
            NormTag::L1 => norm1(v),
            NormTag::L2 => norm2(v),
        }
    }

    /// The dual norm, used to measure gradients.
    pub fn dual_norm<S: Scalar>(self, v: &[S]) -> S {
        match self {
            NormTag::L1 => norm_inf(v),
            NormTag::L2 => norm2(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizerKind<S> {
    Quadratic,
    NegEntropy,
    Hypentropy { beta: S },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongConvexity<S> {
    pub rho: S,
    pub norm: NormTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMode {
    Analytic,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMethod {
    Analytic,
    Sampled,
}

/// `sup_{x ∈ D} B_φ(x, x₀)` or an upper bound on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanDiameter<S> {
    pub value: S,
    pub basepoint: Vec<S>,
    pub method: DiameterMethod,
}

/// A strictly convex mirror map. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer<S> {
    kind: RegularizerKind<S>,
}

const ROOT_MAX_ITERS: usize = 200;

impl<S: Scalar> Regularizer<S> {
    pub fn quadratic() -> Self {
        Self { kind: RegularizerKind::Quadratic }
    }

    pub fn neg_entropy() -> Self {
        Self { kind: RegularizerKind::NegEntropy }
    }

    pub fn hypentropy(beta: S) -> Result<Self> {
        if !(beta > S::zero()) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("hypentropy needs β > 0, got {beta}")));
        }
        Ok(Self { kind: RegularizerKind::Hypentropy { beta } })
    }

    pub fn kind(&self) -> RegularizerKind<S> {
        self.kind
    }

    pub fn name(&self) -> String {
        match self.kind {
            RegularizerKind::Quadratic => "quadratic".into(),
            RegularizerKind::NegEntropy => "neg_entropy".into(),
            RegularizerKind::Hypentropy { beta } => format!("hypentropy(beta={beta})"),
        }
    }

    /// True when the effective domain is the nonnegative orthant.
    pub fn requires_nonneg(&self) -> bool {
        matches!(self.kind, RegularizerKind::NegEntropy)
    }

    fn check_entropy_domain(x: &[S]) -> Result<()> {
        if let Some(i) = x.iter().position(|&v| v < S::zero()) {
            return Err(Error::Domain(format!(
                "negative entropy undefined at x[{i}] = {}",
                x[i]
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &[S]) -> Result<S> {
        if !all_finite(x) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(match self.kind {
            RegularizerKind::Quadratic => x.iter().map(|&v| v * v).sum::<S>() / S::lit(2.0),
            RegularizerKind::NegEntropy => {
                Self::check_entropy_domain(x)?;
                x.iter()
                    .filter(|&&v| v > S::zero())
                    .map(|&v| v * v.ln())
                    .sum()
            }
            RegularizerKind::Hypentropy { beta } => x
                .iter()
                .map(|&v| v * (v / beta).asinh() - v.hypot(beta))
                .sum(),
        })
    }

    /// `∇φ(x)`.
    pub fn mirror_map(&self, x: &[S]) -> Result<Vec<S>> {
        if !all_finite(x) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(match self.kind {
            RegularizerKind::Quadratic => x.to_vec(),
            RegularizerKind::NegEntropy => {
                Self::check_entropy_domain(x)?;
                x.iter().map(|&v| S::one() + clamp_for_log(v).ln()).collect()
            }
            RegularizerKind::Hypentropy { beta } => x.iter().map(|&v| (v / beta).asinh()).collect(),
        })
    }

    /// `∇φ*(θ)`, the inverse of [`Self::mirror_map`].
    pub fn mirror_inverse(&self, theta: &[S]) -> Result<Vec<S>> {
        if !all_finite(theta) {
            return Err(Error::InvalidInput("non-finite dual coordinate".into()));
        }
        let out: Vec<S> = match self.kind {
            RegularizerKind::Quadratic => return Ok(theta.to_vec()),
            RegularizerKind::NegEntropy => theta.iter().map(|&t| (t - S::one()).exp()).collect(),
            RegularizerKind::Hypentropy { beta } => theta.iter().map(|&t| beta * t.sinh()).collect(),
        };
        if let Some(index) = out.iter().position(|v| !v.is_finite()) {
            let op = match self.kind {
                RegularizerKind::NegEntropy => "exp",
                _ => "sinh",
            };
            return Err(Error::Saturation { op, index });
        }
        Ok(out)
    }

    /// `B_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩`.
    pub fn bregman_divergence(&self, x: &[S], y: &[S]) -> Result<S> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        if !all_finite(x) || !all_finite(y) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(match self.kind {
            RegularizerKind::Quadratic => {
                x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<S>() / S::lit(2.0)
            }
            RegularizerKind::NegEntropy => {
                Self::check_entropy_domain(x)?;
                Self::check_entropy_domain(y)?;
                x.iter()
                    .zip(y)
                    .map(|(&a, &b)| {
                        let b = clamp_for_log(b);
                        if a > S::zero() {
                            a * (a / b).ln() - a + b
                        } else {
                            b
                        }
                    })
                    .sum()
            }
            RegularizerKind::Hypentropy { beta } => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let sa = a.hypot(beta);
                    let sb = b.hypot(beta);
                    a * asinh_diff(a / beta, b / beta) + (b - a) * (b + a) / (sa + sb)
                })
                .sum(),
        })
    }

    /// Strong-convexity constant of φ over `dom` and the norm it is stated in.
    ///
    /// Quadratic: 1 in ℓ₂. Negative entropy: 1 in ℓ₁ on the simplex and
    /// `1/sup‖x‖₁` on a ball. Hypentropy: `1/sup Σ√(xᵢ²+β²)` in ℓ₁ on the
    /// simplex and `1/√(R²+β²)` in ℓ₂ on a ball, with `R` the largest
    /// coordinate magnitude in the ball.
    pub fn strong_convexity(&self, dom: &Domain<S>) -> StrongConvexity<S> {
        let d = S::from_usize_lossy(dom.dim());
        match (self.kind, dom.kind()) {
            (RegularizerKind::Quadratic, _) => StrongConvexity { rho: S::one(), norm: NormTag::L2 },
            (RegularizerKind::NegEntropy, DomainKind::Simplex) => {
                StrongConvexity { rho: S::one(), norm: NormTag::L1 }
            }
            (RegularizerKind::NegEntropy, DomainKind::L2Ball { .. }) => {
                StrongConvexity { rho: S::one() / dom.max_norm_l1(), norm: NormTag::L1 }
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::Simplex) => {
                let worst = S::one().hypot(beta) + (d - S::one()) * beta;
                StrongConvexity { rho: S::one() / worst, norm: NormTag::L1 }
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::L2Ball { center, radius }) => {
                let reach = norm_inf(center) + *radius;
                StrongConvexity { rho: S::one() / reach.hypot(beta), norm: NormTag::L2 }
            }
        }
    }

    /// Default starting point: the minimizer of φ over `dom` (for the
    /// entropy on a ball, the Euclidean projection of `e⁻¹𝟙`).
    pub fn default_basepoint(&self, dom: &Domain<S>) -> Result<Vec<S>> {
        match (self.kind, dom.kind()) {
            (_, DomainKind::Simplex) => Ok(dom.center_point()),
            (RegularizerKind::Quadratic, _) => Ok(dom.center_point()),
            (RegularizerKind::NegEntropy, _) => {
                let target = vec![(-S::one()).exp(); dom.dim()];
                Ok(dom.project_euclidean_nonneg(&target)?.into_iter().map(clamp_for_log).collect())
            }
            (RegularizerKind::Hypentropy { .. }, _) => self.project_dual(&vec![S::zero(); dom.dim()], dom),
        }
    }

    /// Bregman projection of `∇φ*(θ)` onto `dom`.
    pub fn project_dual(&self, theta: &[S], dom: &Domain<S>) -> Result<Vec<S>> {
        self.project_dual_warm(theta, dom, None).map(|(x, _)| x)
    }

    /// As [`Self::project_dual`], also returning the multiplier of the
    /// projection's constraint so the next call can start from it.
    pub fn project_dual_warm(
        &self,
        theta: &[S],
        dom: &Domain<S>,
        warm: Option<S>,
    ) -> Result<(Vec<S>, Option<S>)> {
        if theta.len() != dom.dim() {
            return Err(Error::InvalidInput(format!(
                "dual point has length {}, domain has dimension {}",
                theta.len(),
                dom.dim()
            )));
        }
        if !all_finite(theta) {
            return Err(Error::InvalidInput("non-finite dual coordinate".into()));
        }
        match (self.kind, dom.kind()) {
            (RegularizerKind::Quadratic, _) => Ok((dom.project_euclidean(theta)?, None)),
            (RegularizerKind::NegEntropy, DomainKind::Simplex) => Ok((softmax(theta), None)),
            (RegularizerKind::NegEntropy, DomainKind::L2Ball { .. }) => {
                let y = self.mirror_inverse(theta)?;
                if dom.contains(&y, S::zero()) {
                    return Ok((y, None));
                }
                let tol = S::solver_tol() * S::lit(1e3);
                Ok((bregman_project_numeric(self, &y, dom, tol)?, None))
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::Simplex) => {
                let (x, lambda) = hypentropy_simplex(theta, beta, warm)?;
                Ok((x, Some(lambda)))
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::L2Ball { center, radius }) => {
                let (x, mu) = hypentropy_ball(theta, beta, center, *radius, warm)?;
                Ok((x, Some(mu)))
            }
        }
    }

    /// Bregman diameter of `dom` seen from `x0`.
    ///
    /// Analytic bounds: quadratic `½·diam₂²`; entropy on the simplex
    /// `−log min x₀` (`log d` at the barycenter); hypentropy on a
    /// ball centered at the origin with `x₀ = 0` gives `2r²/β`; hypentropy on
    /// the simplex from the barycenter gives `log(3/β)` for `β ≤ 1` and
    /// `log 3` otherwise.
    pub fn diameter(&self, dom: &Domain<S>, x0: &[S], mode: DiameterMode) -> Result<BregmanDiameter<S>> {
        if !dom.contains(x0, S::lit(1e-9)) {
            return Err(Error::InvalidInput("basepoint must lie in the domain".into()));
        }
        match mode {
            DiameterMode::Analytic => {
                let value = self.analytic_diameter(dom, x0)?;
                Ok(BregmanDiameter { value, basepoint: x0.to_vec(), method: DiameterMethod::Analytic })
            }
            DiameterMode::Sampled { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let nonneg = self.requires_nonneg();
                let mut value = S::zero();
                for _ in 0..samples {
                    let x = dom.sample_uniform(&mut rng, nonneg);
                    value = value.max(self.bregman_divergence(&x, x0)?);
                }
                Ok(BregmanDiameter { value, basepoint: x0.to_vec(), method: DiameterMethod::Sampled })
            }
        }
    }

    fn analytic_diameter(&self, dom: &Domain<S>, x0: &[S]) -> Result<S> {
        let unsupported = || Error::UnsupportedPair { regularizer: self.name(), domain: dom.name() };
        let is_barycenter = || {
            let u = S::one() / S::from_usize_lossy(dom.dim());
            x0.iter().all(|&v| (v - u).abs() <= S::lit(1e-12))
        };
        match (self.kind, dom.kind()) {
            (RegularizerKind::Quadratic, _) => {
                let diam = dom.diameter_l2();
                Ok(diam * diam / S::lit(2.0))
            }
            (RegularizerKind::NegEntropy, DomainKind::Simplex) => {
                let min = x0.iter().fold(S::infinity(), |m, &v| m.min(v));
                if min > S::zero() {
                    Ok(-min.ln())
                } else {
                    Err(unsupported())
                }
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::Simplex) if is_barycenter() => {
                if beta <= S::one() {
                    Ok((S::lit(3.0) / beta).ln())
                } else {
                    Ok(S::lit(3.0).ln())
                }
            }
            (RegularizerKind::Hypentropy { beta }, DomainKind::L2Ball { center, radius })
                if center.iter().all(|c| c.is_zero()) && x0.iter().all(|v| v.is_zero()) =>
            {
                Ok(S::lit(2.0) * *radius * *radius / beta)
            }
            _ => Err(unsupported()),
        }
    }
}

/// `asinh(a) − asinh(b)` without cancellation for small arguments.
fn asinh_diff<S: Scalar>(a: S, b: S) -> S {
    if a.abs().max(b.abs()) <= S::one() {
        let s = a * (S::one() + b * b).sqrt() - b * (S::one() + a * a).sqrt();
        s.asinh()
    } else {
        a.asinh() - b.asinh()
    }
}

/// `exp(θᵢ) / Σ exp(θⱼ)` with max subtraction.
pub(crate) fn softmax<S: Scalar>(theta: &[S]) -> Vec<S> {
    let max = theta.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
    let e: Vec<S> = theta.iter().map(|&v| (v - max).exp()).collect();
    let total: S = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Hypentropy projection onto the simplex.
///
/// The optimality conditions give `xᵢ = max(β·sinh(θᵢ − λ), 0)` with `λ` set
/// so the coordinates sum to one. The sum is convex and decreasing in `λ`, so
/// Newton started left of the root converges monotonically; bisection guards it.
fn hypentropy_simplex<S: Scalar>(theta: &[S], beta: S, warm: Option<S>) -> Result<(Vec<S>, S)> {
    let max = theta.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
    let excess = |lambda: S| -> (S, S) {
        let mut sum = S::zero();
        let mut slope = S::zero();
        for &t in theta {
            let u = t - lambda;
            if u > S::zero() {
                sum = sum + beta * u.sinh();
                slope = slope + beta * u.cosh();
            }
        }
        (sum - S::one(), slope)
    };
    // at `lo` the largest coordinate alone equals one; at `max` every coordinate is zero
    let mut lo = max - (S::one() / beta).asinh();
    let mut hi = max;
    let mut lambda = match warm {
        Some(w) if w > lo && w < hi && excess(w).0 >= S::zero() => w,
        _ => lo,
    };
    let tol = S::solver_tol();
    let finish = |lambda: S| -> Vec<S> {
        let x: Vec<S> = theta.iter().map(|&t| (beta * (t - lambda).sinh()).max(S::zero())).collect();
        let total: S = x.iter().copied().sum();
        x.into_iter().map(|v| v / total).collect()
    };
    for _ in 0..ROOT_MAX_ITERS {
        let (g, slope) = excess(lambda);
        if g.abs() <= tol {
            return Ok((finish(lambda), lambda));
        }
        if g > S::zero() {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        let newton = lambda + g / slope;
        let next = if slope > S::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / S::lit(2.0)
        };
        if next == lambda {
            return Ok((finish(lambda), lambda));
        }
        lambda = next;
    }
    let (g, _) = excess(lambda);
    if g.abs() <= tol.sqrt() {
        return Ok((finish(lambda), lambda));
    }
    Err(Error::Convergence {
        what: "hypentropy simplex projection",
        iterations: ROOT_MAX_ITERS,
        residual: g.as_f64(),
    })
}

/// Solves `asinh(z/β) + μ(z − c) = θ` for `z`; the left side is increasing in `z`.
fn hypentropy_ball_coord<S: Scalar>(theta: S, beta: S, c: S, mu: S, start: S) -> S {
    let anchor = (c / beta).asinh();
    let gap = theta - anchor;
    if gap == S::zero() {
        return c;
    }
    let (mut lo, mut hi) = if gap > S::zero() { (c, c + gap / mu) } else { (c + gap / mu, c) };
    let mut z = if start > lo && start < hi { start } else { (lo + hi) / S::lit(2.0) };
    for _ in 0..ROOT_MAX_ITERS {
        let h = (z / beta).asinh() + mu * (z - c) - theta;
        if h > S::zero() {
            hi = z;
        } else {
            lo = z;
        }
        let slope = S::one() / z.hypot(beta) + mu;
        let newton = z - h / slope;
        let next = if newton > lo && newton < hi { newton } else { (lo + hi) / S::lit(2.0) };
        if (next - z).abs() <= S::epsilon() * (S::one() + z.abs()) {
            return next;
        }
        z = next;
    }
    z
}

/// Hypentropy projection onto `{‖x − c‖₂ ≤ r}`.
///
/// With multiplier `μ ≥ 0` each coordinate solves
/// `asinh(xᵢ/β) + μ(xᵢ − cᵢ) = θᵢ`; `μ` is found by safeguarded Newton on
/// `1/r − 1/‖x(μ) − c‖`. `μ = ‖θ − asinh(c/β)‖/r` always lands inside the
/// ball and brackets the root from above.
fn hypentropy_ball<S: Scalar>(
    theta: &[S],
    beta: S,
    center: &[S],
    radius: S,
    warm: Option<S>,
) -> Result<(Vec<S>, S)> {
    let free: Vec<S> = theta.iter().map(|&t| beta * t.sinh()).collect();
    if all_finite(&free) && norm2(&sub(&free, center)) <= radius {
        return Ok((free, S::zero()));
    }
    let gap: Vec<S> = theta.iter().zip(center).map(|(&t, &c)| t - (c / beta).asinh()).collect();
    let mut hi = norm2(&gap) / radius;
    let mut lo = S::zero();
    let mut mu = match warm {
        Some(w) if w > lo && w < hi => w,
        _ => hi,
    };
    let mut z: Vec<S> = center.to_vec();
    let tol = S::solver_tol();
    for _ in 0..ROOT_MAX_ITERS {
        for ((zi, &t), &c) in z.iter_mut().zip(theta).zip(center) {
            *zi = hypentropy_ball_coord(t, beta, c, mu, *zi);
        }
        let diff = sub(&z, center);
        let n = norm2(&diff);
        if (n - radius).abs() <= tol * radius {
            break;
        }
        if n > radius {
            lo = mu;
        } else {
            hi = mu;
        }
        // d‖z − c‖/dμ = −Σ (zᵢ − cᵢ)² / h'ᵢ / ‖z − c‖
        let dn: S = -z
            .iter()
            .zip(&diff)
            .map(|(&zi, &di)| di * di / (S::one() / zi.hypot(beta) + mu))
            .sum::<S>()
            / n;
        let psi = S::one() / radius - S::one() / n;
        let dpsi = dn / (n * n);
        let newton = mu - psi / dpsi;
        let next = if dpsi < S::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / S::lit(2.0)
        };
        if next == mu || hi - lo <= S::epsilon() * hi {
            break;
        }
        mu = next;
    }
    let diff = sub(&z, center);
    let n = norm2(&diff);
    if (n - radius).abs() > tol.sqrt() * radius {
        return Err(Error::Convergence {
            what: "hypentropy ball projection",
            iterations: ROOT_MAX_ITERS,
            residual: (n - radius).as_f64(),
        });
    }
    if n > radius {
        z = center.iter().zip(&diff).map(|(&c, &d)| c + d * radius / n).collect();
    }
    Ok((z, mu))
}
