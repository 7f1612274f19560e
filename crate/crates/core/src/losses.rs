//! Concrete pairwise objectives, the AUC metric and finite-difference gradient checks.

use std::fmt;
use std::str::FromStr;

use crate::dualavg::PairwiseObjective;
use crate::error::{param, Error, Result};
use crate::pairwise::{mahalanobis, sigmoid, softplus, squared_distance, Dataset, Dissimilarity, Observation};
use crate::scalar::{dot, norm, Scalar};

pub use crate::dualavg::{full_gradient, risk};

fn max_pair<T: Scalar>(data: &Dataset<T>, f: impl Fn(usize, usize) -> T) -> T {
    let n = data.len();
    let mut best = T::zero();
    for i in 0..n {
        for j in 0..n {
            best = best.max(f(i, j));
        }
    }
    best
}

fn label<T: Scalar>(o: &Observation<'_, T>) -> T {
    o.label.expect("objective requires labelled observations")
}

/// Pairwise logistic AUC surrogate `f(θ; x_i, x_j) = 1{ℓ_i > ℓ_j} log(1 + exp((x_j − x_i)ᵀθ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AucLogistic<T> {
    dim: usize,
    lipschitz: T,
}

impl<T: Scalar> AucLogistic<T> {
    /// Binds to a labelled dataset; `L = max_{i,j} ‖x_j − x_i‖`.
    pub fn new(data: &Dataset<T>) -> Result<Self> {
        data.require_labels()?;
        let lipschitz = max_pair(data, |i, j| squared_distance(data.point(i), data.point(j)).sqrt());
        Ok(Self { dim: data.dim(), lipschitz })
    }
}

impl<T: Scalar> PairwiseObjective<T> for AucLogistic<T> {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        if label(&x) <= label(&y) {
            return T::zero();
        }
        softplus(dot(y.point, theta) - dot(x.point, theta))
    }

    fn add_grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>, weight: T, out: &mut [T]) {
        if label(&x) <= label(&y) {
            return;
        }
        let s = weight * sigmoid(dot(y.point, theta) - dot(x.point, theta));
        for ((o, &a), &b) in out.iter_mut().zip(x.point).zip(y.point) {
            *o = *o + s * (b - a);
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "auc"
    }
}

/// Which positive-part convention the metric-learning hinge uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HingeConvention {
    /// `[u]_+ = max(0, 1 − u)`
    #[default]
    OneMinus,
    /// `[u]_+ = max(0, u)`
    Plus,
}

impl fmt::Display for HingeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneMinus => "one-minus",
            Self::Plus => "plus",
        })
    }
}

impl FromStr for HingeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one-minus" | "default" => Ok(Self::OneMinus),
            "plus" => Ok(Self::Plus),
            other => param(format!("unknown hinge convention `{other}`")),
        }
    }
}

/// Mahalanobis metric-learning loss `[ℓ_i ℓ_j (b − D_θ(x_i, x_j))]_+` with `θ` a
/// row-major `d × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricHinge<T> {
    side: usize,
    margin: T,
    hinge: HingeConvention,
    lipschitz: T,
}

impl<T: Scalar> MetricHinge<T> {
    /// `L = 2 · max_{i,j} ‖(x_i − x_j)(x_i − x_j)ᵀ‖_F`.
    pub fn new(data: &Dataset<T>, margin: T, hinge: HingeConvention) -> Result<Self> {
        data.require_labels()?;
        if !(margin > T::zero()) {
            return param(format!("margin b must be positive, got {margin}"));
        }
        let lipschitz = T::lit(2.0) * max_pair(data, |i, j| squared_distance(data.point(i), data.point(j)));
        Ok(Self { side: data.dim(), margin, hinge, lipschitz })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Hinge argument `u = ℓℓ'(b − D_θ)`.
    fn argument(&self, theta: &[T], x: &Observation<'_, T>, y: &Observation<'_, T>) -> T {
        label(x) * label(y) * (self.margin - mahalanobis(theta, x.point, y.point))
    }

    /// Derivative of the loss with respect to `D_θ` when the hinge is active.
    fn slope(&self, u: T, sign: T) -> T {
        match self.hinge {
            HingeConvention::OneMinus if T::one() - u > T::zero() => sign,
            HingeConvention::Plus if u > T::zero() => -sign,
            _ => T::zero(),
        }
    }
}

impl<T: Scalar> PairwiseObjective<T> for MetricHinge<T> {
    fn param_dim(&self) -> usize {
        self.side * self.side
    }

    fn value(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        let u = self.argument(theta, &x, &y);
        match self.hinge {
            HingeConvention::OneMinus => (T::one() - u).max(T::zero()),
            HingeConvention::Plus => u.max(T::zero()),
        }
    }

    fn add_grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>, weight: T, out: &mut [T]) {
        let u = self.argument(theta, &x, &y);
        let slope = self.slope(u, label(&x) * label(&y));
        if slope == T::zero() {
            return;
        }
        // ∇_θ D_θ(x, y) = (x − y)(x − y)ᵀ
        let d = self.side;
        let s = weight * slope;
        for r in 0..d {
            let dr = x.point[r] - y.point[r];
            for c in 0..d {
                out[r * d + c] = out[r * d + c] + s * dr * (x.point[c] - y.point[c]);
            }
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "metric"
    }

    /// `|u − kink| / max_c |∂u/∂θ_c|`, the distance in any single coordinate of `θ`
    /// before the hinge switches.
    fn kink_gap(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> Option<T> {
        let u = self.argument(theta, &x, &y);
        let kink = match self.hinge {
            HingeConvention::OneMinus => T::one(),
            HingeConvention::Plus => T::zero(),
        };
        let reach = x.point.iter().zip(y.point).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
        if reach == T::zero() {
            // D_θ(x, x) = 0 for every θ, so the loss is constant in θ
            return None;
        }
        Some((u - kink).abs() / (reach * reach))
    }
}

/// Pairwise logistic ranking loss for a linear scorer `s(x) = θᵀx` and real labels:
/// `f = log(1 + exp(−(s(x) − s(x'))·(y − y')))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingLogistic<T> {
    dim: usize,
    lipschitz: T,
}

impl<T: Scalar> RankingLogistic<T> {
    /// `L = max_{i,j} |y_i − y_j| ‖x_i − x_j‖`.
    pub fn new(data: &Dataset<T>) -> Result<Self> {
        let labels = data.require_labels()?;
        let lipschitz = max_pair(data, |i, j| {
            (labels[i] - labels[j]).abs() * squared_distance(data.point(i), data.point(j)).sqrt()
        });
        Ok(Self { dim: data.dim(), lipschitz })
    }
}

impl<T: Scalar> PairwiseObjective<T> for RankingLogistic<T> {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        let ds = dot(x.point, theta) - dot(y.point, theta);
        softplus(-(ds * (label(&x) - label(&y))))
    }

    fn add_grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>, weight: T, out: &mut [T]) {
        let dy = label(&x) - label(&y);
        let ds = dot(x.point, theta) - dot(y.point, theta);
        let s = -weight * sigmoid(-(ds * dy)) * dy;
        for ((o, &a), &b) in out.iter_mut().zip(x.point).zip(y.point) {
            *o = *o + s * (a - b);
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "ranking"
    }
}

/// `f ≡ 0`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroObjective {
    pub dim: usize,
}

impl<T: Scalar> PairwiseObjective<T> for ZeroObjective {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _: &[T], _: Observation<'_, T>, _: Observation<'_, T>) -> T {
        T::zero()
    }

    fn add_grad(&self, _: &[T], _: Observation<'_, T>, _: Observation<'_, T>, _: T, _: &mut [T]) {}

    fn lipschitz(&self) -> T {
        T::zero()
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

/// Smooth test objective `f(θ; x, x') = ½‖θ − (x + x')/2‖²`, minimised by the sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticToy<T> {
    pub dim: usize,
    /// Declared Lipschitz constant over the region of interest.
    pub lipschitz: T,
}

impl<T: Scalar> QuadraticToy<T> {
    /// Minimiser of the full risk.
    pub fn minimizer(data: &Dataset<T>) -> Vec<T> {
        let n = T::from_count(data.len());
        let mut mean = vec![T::zero(); data.dim()];
        for p in data.points() {
            mean.iter_mut().zip(p).for_each(|(m, &v)| *m = *m + v / n);
        }
        mean
    }
}

impl<T: Scalar> PairwiseObjective<T> for QuadraticToy<T> {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        let half = T::lit(0.5);
        theta
            .iter()
            .zip(x.point.iter().zip(y.point))
            .map(|(&t, (&a, &b))| {
                let r = t - half * (a + b);
                r * r
            })
            .sum::<T>()
            * half
    }

    fn add_grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>, weight: T, out: &mut [T]) {
        let half = T::lit(0.5);
        for (c, o) in out.iter_mut().enumerate() {
            *o = *o + weight * (theta[c] - half * (x.point[c] + y.point[c]));
        }
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "quadratic"
    }
}

/// `AUC(θ) = Σ 1{ℓ_i > ℓ_j} 1{x_iᵀθ > x_jᵀθ} / Σ 1{ℓ_i > ℓ_j}`; tied scores count as
/// incorrectly ordered.
pub fn auc<T: Scalar>(data: &Dataset<T>, theta: &[T]) -> Result<T> {
    let labels = data.require_labels()?;
    if theta.len() != data.dim() {
        return Err(Error::Shape(format!("θ has dimension {}, data has {}", theta.len(), data.dim())));
    }
    let scores: Vec<T> = data.points().iter().map(|p| dot(p, theta)).collect();
    let (mut hits, mut pairs) = (0usize, 0usize);
    for i in 0..data.len() {
        for j in 0..data.len() {
            if labels[i] > labels[j] {
                pairs += 1;
                if scores[i] > scores[j] {
                    hits += 1;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::Data("AUC undefined: no positive-negative pair".into()));
    }
    Ok(T::from_count(hits) / T::from_count(pairs))
}

/// Within-cluster point scatter `(2/(n(n−1))) Σ_{i<j} D(x_i, x_j) Φ(x_i, x_j)`,
/// with `cell[i]` the partition cell of point `i`.
pub fn cluster_scatter<T: Scalar>(data: &Dataset<T>, cell: &[usize], dissimilarity: Dissimilarity) -> Result<T> {
    let n = data.len();
    if cell.len() != n {
        return Err(Error::Shape(format!("{} cell ids for {n} points", cell.len())));
    }
    if n < 2 {
        return param("cluster scatter needs n >= 2");
    }
    let mut total = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            if cell[i] == cell[j] {
                total = total + dissimilarity.eval(data.point(i), data.point(j));
            }
        }
    }
    Ok(T::lit(2.0) * total / T::from_count(n * (n - 1)))
}

/// Outcome of a finite-difference gradient comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradCheck<T> {
    /// Largest per-coordinate error divided by `max(1, ‖∇f‖)`.
    Checked { max_rel_error: T },
    /// `θ` lies within `10·h` of a kink for this pair.
    SkippedNearKink { gap: T },
}

impl<T: Scalar> GradCheck<T> {
    pub fn passes(&self, tol: T) -> bool {
        match *self {
            Self::Checked { max_rel_error } => max_rel_error < tol,
            Self::SkippedNearKink { .. } => true,
        }
    }
}

/// Compares `grad` against central differences with step `h`.
pub fn grad_check<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    theta: &[T],
    x: Observation<'_, T>,
    y: Observation<'_, T>,
    h: T,
) -> GradCheck<T> {
    if let Some(gap) = obj.kink_gap(theta, x, y) {
        if gap <= T::lit(10.0) * h {
            return GradCheck::SkippedNearKink { gap };
        }
    }
    let analytic = obj.grad(theta, x, y);
    let denom = norm(&analytic).max(T::one());
    let mut probe = theta.to_vec();
    let mut worst = T::zero();
    for c in 0..theta.len() {
        probe[c] = theta[c] + h;
        let up = obj.value(&probe, x, y);
        probe[c] = theta[c] - h;
        let down = obj.value(&probe, x, y);
        probe[c] = theta[c];
        let numeric = (up - down) / (T::lit(2.0) * h);
        worst = worst.max((numeric - analytic[c]).abs() / denom);
    }
    GradCheck::Checked { max_rel_error: worst }
}
