//! Feasible domains and projection operators.
//!
//! Two domain families are supported: the probability simplex `Δ(d)` and a
//! Euclidean ball `{x : ‖x − c‖₂ ≤ r}`. Closed-form projectors cover the
//! Euclidean and entropic geometries; [`bregman_project_numeric`] handles any
//! regularizer by projected gradient descent on the Bregman objective.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::regularizers::Regularizer;
use crate::scalar::{all_finite, dot, norm2, sub, Scalar};

static LOG_CLAMPS: AtomicU64 = AtomicU64::new(0);

/// Number of coordinates clamped up to [`Scalar::log_floor`] before a logarithm, process-wide.
pub fn log_clamp_count() -> u64 {
    LOG_CLAMPS.load(Ordering::Relaxed)
}

pub(crate) fn clamp_for_log<S: Scalar>(v: S) -> S {
    let floor = S::log_floor();
    if v < floor {
        LOG_CLAMPS.fetch_add(1, Ordering::Relaxed);
        floor
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind<S> {
    Simplex,
    L2Ball { center: Vec<S>, radius: S },
}

/// A compact convex feasible set in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<S> {
    kind: DomainKind<S>,
    dim: usize,
}

impl<S: Scalar> Domain<S> {
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("simplex dimension must be positive".into()));
        }
        Ok(Self { kind: DomainKind::Simplex, dim })
    }

    pub fn l2_ball(center: Vec<S>, radius: S) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidInput("ball dimension must be positive".into()));
        }
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        if !all_finite(&center) {
            return Err(Error::InvalidInput("ball center must be finite".into()));
        }
        let dim = center.len();
        Ok(Self { kind: DomainKind::L2Ball { center, radius }, dim })
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::l2_ball(vec![S::zero(); dim], S::one())
    }

    pub fn kind(&self) -> &DomainKind<S> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self.kind, DomainKind::Simplex)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            DomainKind::Simplex => format!("simplex({})", self.dim),
            DomainKind::L2Ball { radius, .. } => format!("l2_ball({}, r={radius})", self.dim),
        }
    }

    pub fn diameter_l2(&self) -> S {
        match &self.kind {
            DomainKind::Simplex if self.dim == 1 => S::zero(),
            DomainKind::Simplex => S::lit(2.0).sqrt(),
            DomainKind::L2Ball { radius, .. } => S::lit(2.0) * *radius,
        }
    }

    pub fn diameter_l1(&self) -> S {
        match &self.kind {
            DomainKind::Simplex if self.dim == 1 => S::zero(),
            DomainKind::Simplex => S::lit(2.0),
            DomainKind::L2Ball { radius, .. } => {
                S::lit(2.0) * *radius * S::from_usize_lossy(self.dim).sqrt()
            }
        }
    }

    /// Largest Euclidean norm of any feasible point.
    pub fn max_norm_l2(&self) -> S {
        match &self.kind {
            DomainKind::Simplex => S::one(),
            DomainKind::L2Ball { center, radius } => norm2(center) + *radius,
        }
    }

    /// Largest `ℓ₁` norm of any feasible point.
    pub fn max_norm_l1(&self) -> S {
        match &self.kind {
            DomainKind::Simplex => S::one(),
            DomainKind::L2Ball { center, radius } => {
                let d = S::from_usize_lossy(self.dim);
                crate::scalar::norm1(center) + *radius * d.sqrt()
            }
        }
    }

    /// The barycenter of the simplex or the center of the ball.
    pub fn center_point(&self) -> Vec<S> {
        match &self.kind {
            DomainKind::Simplex => vec![S::one() / S::from_usize_lossy(self.dim); self.dim],
            DomainKind::L2Ball { center, .. } => center.clone(),
        }
    }

    pub fn contains(&self, x: &[S], tol: S) -> bool {
        if x.len() != self.dim || !all_finite(x) {
            return false;
        }
        match &self.kind {
            DomainKind::Simplex => {
                let sum: S = x.iter().copied().sum();
                x.iter().all(|&v| v >= -tol) && (sum - S::one()).abs() <= tol
            }
            DomainKind::L2Ball { center, radius } => norm2(&sub(x, center)) <= *radius + tol,
        }
    }

    /// `sup_{x ∈ D} |⟨g, x⟩|`.
    pub fn max_abs_inner(&self, g: &[S]) -> S {
        match &self.kind {
            DomainKind::Simplex => crate::scalar::norm_inf(g),
            DomainKind::L2Ball { center, radius } => dot(g, center).abs() + *radius * norm2(g),
        }
    }

    /// `argmin_{x ∈ D} ⟨g, x⟩`. Ties on the simplex go to the lowest index; a
    /// zero vector on the ball returns the center.
    pub fn linear_minimizer(&self, g: &[S]) -> Vec<S> {
        match &self.kind {
            DomainKind::Simplex => {
                let mut best = 0;
                for (i, &v) in g.iter().enumerate() {
                    if v < g[best] {
                        best = i;
                    }
                }
                let mut x = vec![S::zero(); self.dim];
                x[best] = S::one();
                x
            }
            DomainKind::L2Ball { center, radius } => {
                let n = norm2(g);
                if n == S::zero() {
                    return center.clone();
                }
                center.iter().zip(g).map(|(&c, &gi)| c - *radius * gi / n).collect()
            }
        }
    }

    pub fn project_euclidean(&self, y: &[S]) -> Result<Vec<S>> {
        self.check_dim(y)?;
        match &self.kind {
            DomainKind::Simplex => project_simplex_euclidean(y),
            DomainKind::L2Ball { center, radius } => project_ball_l2(y, center, *radius),
        }
    }

    /// Euclidean projection onto `D ∩ ℝ^d_{≥0}`.
    pub fn project_euclidean_nonneg(&self, y: &[S]) -> Result<Vec<S>> {
        self.check_dim(y)?;
        match &self.kind {
            DomainKind::Simplex => project_simplex_euclidean(y),
            DomainKind::L2Ball { center, radius } => project_ball_nonneg(y, center, *radius),
        }
    }

    /// Uniform sample from the domain (or from its nonnegative part when `nonneg`).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, nonneg: bool) -> Vec<S> {
        match &self.kind {
            DomainKind::Simplex => {
                let e: Vec<f64> = (0..self.dim).map(|_| rng.sample(Exp1)).collect();
                let total: f64 = e.iter().sum();
                e.iter().map(|v| S::lit(v / total)).collect()
            }
            DomainKind::L2Ball { center, radius } => loop {
                let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n == 0.0 {
                    continue;
                }
                let u: f64 = rng.random();
                let r = radius.as_f64() * u.powf(1.0 / self.dim as f64);
                let x: Vec<S> = center
                    .iter()
                    .zip(&g)
                    .map(|(&c, &gi)| {
                        let gi = if nonneg { gi.abs() } else { gi };
                        c + S::lit(r * gi / n)
                    })
                    .collect();
                if !nonneg || x.iter().all(|&v| v >= S::zero()) {
                    break x;
                }
            },
        }
    }

    fn check_dim(&self, y: &[S]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "expected a {}-vector, got length {}",
                self.dim,
                y.len()
            )));
        }
        if !all_finite(y) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(())
    }
}

/// Euclidean projection onto the probability simplex by the sort/threshold rule.
///
/// Ties in the sort keep original index order, so the result is deterministic.
pub fn project_simplex_euclidean<S: Scalar>(y: &[S]) -> Result<Vec<S>> {
    if y.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if !all_finite(y) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| y[j].partial_cmp(&y[i]).expect("finite"));

    let mut cumsum = S::zero();
    let mut lambda = S::zero();
    for (j, &idx) in order.iter().enumerate() {
        cumsum = cumsum + y[idx];
        let cand = (S::one() - cumsum) / S::from_usize_lossy(j + 1);
        if y[idx] + cand > S::zero() {
            lambda = cand;
        }
    }
    Ok(y.iter().map(|&v| (v + lambda).max(S::zero())).collect())
}

pub fn project_ball_l2<S: Scalar>(y: &[S], center: &[S], radius: S) -> Result<Vec<S>> {
    if y.len() != center.len() || y.is_empty() {
        return Err(Error::InvalidInput("dimension mismatch between point and center".into()));
    }
    if !(radius > S::zero()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if !all_finite(y) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    let diff = sub(y, center);
    let n = norm2(&diff);
    if n <= radius {
        return Ok(y.to_vec());
    }
    Ok(center.iter().zip(&diff).map(|(&c, &di)| c + radius * di / n).collect())
}

/// Bregman projection onto the simplex under negative entropy: `y / Σ yᵢ`.
pub fn project_simplex_entropic<S: Scalar>(y: &[S]) -> Result<Vec<S>> {
    if y.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if let Some(i) = y.iter().position(|&v| !(v > S::zero()) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "entropic projection needs positive coordinates, y[{i}] = {}",
            y[i]
        )));
    }
    let total: S = y.iter().copied().sum();
    Ok(y.iter().map(|&v| v / total).collect())
}

/// Euclidean projection onto `{x ≥ 0, ‖x − c‖₂ ≤ r}`.
///
/// For a fixed multiplier `μ` the minimizer is `max((y + μc)/(1 + μ), 0)`;
/// `μ` is found by bisection on the radius constraint.
fn project_ball_nonneg<S: Scalar>(y: &[S], center: &[S], radius: S) -> Result<Vec<S>> {
    let at = |mu: S| -> Vec<S> {
        y.iter()
            .zip(center)
            .map(|(&yi, &ci)| ((yi + mu * ci) / (S::one() + mu)).max(S::zero()))
            .collect()
    };
    let excess = |x: &[S]| norm2(&sub(x, center)) - radius;

    let x0 = at(S::zero());
    if excess(&x0) <= S::zero() {
        return Ok(x0);
    }
    let limit: Vec<S> = center.iter().map(|&c| c.max(S::zero())).collect();
    if excess(&limit) > S::zero() {
        return Err(Error::InvalidInput("ball does not meet the nonnegative orthant".into()));
    }
    let mut hi = S::one();
    while excess(&at(hi)) > S::zero() {
        hi = hi * S::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::Convergence { what: "ball/orthant projection", iterations: 0, residual: f64::INFINITY });
        }
    }
    let mut lo = S::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / S::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(&at(mid)) > S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(hi))
}

const NUMERIC_MAX_ITERS: usize = 10_000;

/// Bregman projection by projected gradient on `z ↦ B_φ(z, y)`.
///
/// The step is accepted when `⟨∇(z⁺) − ∇(z), z⁺ − z⟩ ≤ ‖z⁺ − z‖²/(2s)`,
/// which by convexity implies the usual sufficient-decrease condition and
/// is insensitive to cancellation in objective values. Each iteration tries
/// twice the previous step first. Iteration stops when the gradient-mapping
/// norm falls below `tol`. For the negative entropy the feasible set is
/// intersected with the nonnegative orthant.
pub fn bregman_project_numeric<S: Scalar>(
    reg: &Regularizer<S>,
    y: &[S],
    dom: &Domain<S>,
    tol: S,
) -> Result<Vec<S>> {
    if !(tol > S::zero()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    dom.check_dim(y)?;
    let nonneg = reg.requires_nonneg();
    let project = |z: &[S]| -> Result<Vec<S>> {
        let p = if nonneg {
            // keep logarithms finite
            dom.project_euclidean_nonneg(z)?.into_iter().map(clamp_for_log).collect()
        } else {
            dom.project_euclidean(z)?
        };
        Ok(p)
    };
    let grad_y = reg.mirror_map(y)?;
    let gradient = |z: &[S]| -> Result<Vec<S>> { Ok(sub(&reg.mirror_map(z)?, &grad_y)) };

    let mut z = project(y)?;
    let mut g = gradient(&z)?;
    let mut step = S::lit(0.5);
    let mut residual = S::infinity();
    for _ in 0..NUMERIC_MAX_ITERS {
        step = step * S::lit(2.0);
        let (next, g_next) = loop {
            let trial: Vec<S> = z.iter().zip(&g).map(|(&zi, &gi)| zi - step * gi).collect();
            let cand = project(&trial)?;
            let delta = sub(&cand, &z);
            let g_cand = gradient(&cand)?;
            let curvature = dot(&sub(&g_cand, &g), &delta);
            if curvature <= dot(&delta, &delta) / (S::lit(2.0) * step) || step < S::lit(1e-30) {
                break (cand, g_cand);
            }
            step = step / S::lit(2.0);
        };
        residual = norm2(&sub(&z, &next)) / step;
        z = next;
        g = g_next;
        if residual < tol {
            return Ok(z);
        }
    }
    Err(Error::Convergence {
        what: "numeric Bregman projection",
        iterations: NUMERIC_MAX_ITERS,
        residual: residual.as_f64(),
    })
}
