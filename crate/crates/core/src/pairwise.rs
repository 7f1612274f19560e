//! Samples, pairwise kernels, kernel matrices and exact U-statistics.

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};

/// A sample of `n` points in `R^d` with optional labels.
///
/// Labels are stored as scalars: `±1` for binary problems, class ids otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    points: Vec<Vec<T>>,
    labels: Option<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(points: Vec<Vec<T>>, labels: Option<Vec<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("dataset has no points".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Data("points have dimension zero".into()));
        }
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::Shape(format!("point {i} has dimension {}, expected {dim}", points[i].len())));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::Shape(format!("{} labels for {} points", l.len(), points.len())));
            }
        }
        Ok(Self { points, labels, dim })
    }

    /// One-dimensional unlabeled sample.
    pub fn scalars(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[T]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<T> {
        self.labels.as_ref().map(|l| l[i])
    }

    pub fn observation(&self, i: usize) -> Observation<'_, T> {
        Observation { point: &self.points[i], label: self.label(i) }
    }

    /// Same points with labels replaced.
    pub fn with_labels(&self, labels: Vec<T>) -> Result<Self> {
        Self::new(self.points.clone(), Some(labels))
    }

    /// Reorders points (and labels) so that new index `i` holds old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::Shape("permutation length differs from dataset size".into()));
        }
        let points = perm.iter().map(|&p| self.points[p].clone()).collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p]).collect());
        Self::new(points, labels)
    }

    pub fn require_labels(&self) -> Result<&[T]> {
        self.labels().ok_or_else(|| Error::Data("objective needs labelled data".into()))
    }
}

/// A single data point as seen by a kernel or loss.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a, T> {
    pub point: &'a [T],
    pub label: Option<T>,
}

impl<'a, T: Scalar> Observation<'a, T> {
    pub fn unlabeled(point: &'a [T]) -> Self {
        Self { point, label: None }
    }

    pub fn labeled(point: &'a [T], label: T) -> Self {
        Self { point, label: Some(label) }
    }

    /// Label, or zero when absent.
    pub fn label_or_zero(&self) -> T {
        self.label.unwrap_or_else(T::zero)
    }
}

/// Degree-two kernel `h(x, x')`.
pub trait PairKernel<T: Scalar>: Sync {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T;

    /// Whether `h(x, x') = h(x', x)` holds by construction.
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `h(x, x') = <x, x'>`
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductKernel;

impl<T: Scalar> PairKernel<T> for ProductKernel {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        dot(x.point, y.point)
    }
}

/// `h(x, x') = Σ_c (x_c + x'_c)`
#[derive(Debug, Clone, Copy, Default)]
pub struct SumKernel;

impl<T: Scalar> PairKernel<T> for SumKernel {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        x.point.iter().chain(y.point).copied().sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel<T>(pub T);

impl<T: Scalar> PairKernel<T> for ConstantKernel<T> {
    fn eval(&self, _: Observation<'_, T>, _: Observation<'_, T>) -> T {
        self.0
    }
}

/// `h(x, x') = ‖x − x'‖² / 2`; its off-diagonal U-statistic is the sample variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct VarianceKernel;

impl<T: Scalar> PairKernel<T> for VarianceKernel {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        squared_distance(x.point, y.point) / T::lit(2.0)
    }
}

/// Gini mean difference kernel `h(x, x') = ‖x − x'‖_1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GiniKernel;

impl<T: Scalar> PairKernel<T> for GiniKernel {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        x.point.iter().zip(y.point).map(|(&a, &b)| (a - b).abs()).sum()
    }
}

/// Dissimilarity used by the clustering scatter kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dissimilarity {
    #[default]
    SquaredEuclidean,
    Euclidean,
    Manhattan,
}

impl Dissimilarity {
    pub fn eval<T: Scalar>(self, x: &[T], y: &[T]) -> T {
        match self {
            Self::SquaredEuclidean => squared_distance(x, y),
            Self::Euclidean => squared_distance(x, y).sqrt(),
            Self::Manhattan => x.iter().zip(y).map(|(&a, &b)| (a - b).abs()).sum(),
        }
    }
}

/// Within-cluster point scatter `h_P(x, x') = D(x, x') · 1{x and x' share a cell}`,
/// where the cell of a point is its label.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClusterScatterKernel {
    pub dissimilarity: Dissimilarity,
}

impl<T: Scalar> PairKernel<T> for ClusterScatterKernel {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        match (x.label, y.label) {
            (Some(a), Some(b)) if a == b => self.dissimilarity.eval(x.point, y.point),
            _ => T::zero(),
        }
    }
}

/// Loss applied to the signed ranking disagreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankingLoss {
    /// `1{u > 0}`
    #[default]
    Indicator,
    /// `log(1 + e^u)`
    Logistic,
    /// `max(0, 1 + u)`
    Hinge,
}

impl RankingLoss {
    pub fn eval<T: Scalar>(self, u: T) -> T {
        match self {
            Self::Indicator => {
                if u > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Logistic => softplus(u),
            Self::Hinge => (T::one() + u).max(T::zero()),
        }
    }
}

/// Ranking kernel `h_s((x,y),(x',y')) = ℓ(−(s(x) − s(x'))·(y − y'))` with a linear
/// scorer `s(x) = <w, x>`.
#[derive(Debug, Clone)]
pub struct RankingKernel<T> {
    pub weights: Vec<T>,
    pub loss: RankingLoss,
}

impl<T: Scalar> PairKernel<T> for RankingKernel<T> {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        let ds = dot(&self.weights, x.point) - dot(&self.weights, y.point);
        let dy = x.label_or_zero() - y.label_or_zero();
        self.loss.eval(-(ds * dy))
    }
}

/// Metric-learning risk kernel `[ℓℓ'(b − D_θ(x, x'))]_+` for a fixed Mahalanobis
/// matrix `θ` (row-major, `d × d`), with `[u]_+ = max(0, 1 − u)`.
#[derive(Debug, Clone)]
pub struct MetricRiskKernel<T> {
    pub theta: Vec<T>,
    pub margin: T,
}

impl<T: Scalar> PairKernel<T> for MetricRiskKernel<T> {
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        let s = x.label_or_zero() * y.label_or_zero();
        let u = s * (self.margin - mahalanobis(&self.theta, x.point, y.point));
        (T::one() - u).max(T::zero())
    }
}

/// Adapter turning a closure into a kernel.
pub struct FnKernel<F> {
    f: F,
    symmetric: bool,
}

impl<F> FnKernel<F> {
    pub fn symmetric(f: F) -> Self {
        Self { f, symmetric: true }
    }

    pub fn asymmetric(f: F) -> Self {
        Self { f, symmetric: false }
    }
}

impl<T, F> PairKernel<T> for FnKernel<F>
where
    T: Scalar,
    F: for<'a> Fn(Observation<'a, T>, Observation<'a, T>) -> T + Sync,
{
    fn eval(&self, x: Observation<'_, T>, y: Observation<'_, T>) -> T {
        (self.f)(x, y)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

pub(crate) fn squared_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

/// `(x − y)ᵀ θ (x − y)` with `θ` row-major `d × d`.
pub fn mahalanobis<T: Scalar>(theta: &[T], x: &[T], y: &[T]) -> T {
    let d = x.len();
    let diff: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let mut acc = T::zero();
    for r in 0..d {
        acc = acc + diff[r] * dot(&theta[r * d..(r + 1) * d], &diff);
    }
    acc
}

/// Numerically stable `log(1 + e^u)`.
pub fn softplus<T: Scalar>(u: T) -> T {
    if u > T::zero() {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(u: T) -> T {
    if u >= T::zero() {
        T::one() / (T::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

/// Kernel evaluated on every ordered pair of a sample, with its row means and
/// the two U-statistic conventions.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T> {
    h: Matrix<T>,
    h_bar: Vec<T>,
    u_full: T,
    u_offdiag: T,
    symmetric: bool,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Wraps a precomputed table `[H]_kl = h(x_k, x_l)`.
    pub fn from_matrix(h: Matrix<T>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Shape(format!("kernel matrix is {}x{}", h.rows(), h.cols())));
        }
        let n = h.rows();
        if n < 2 {
            return param("kernel matrix needs n >= 2");
        }
        for r in 0..n {
            for c in 0..n {
                if !h[(r, c)].is_finite() {
                    return Err(Error::Numeric(format!("non-finite kernel value at pair ({r}, {c})")));
                }
            }
        }
        let nf = T::from_count(n);
        let h_bar: Vec<T> = (0..n).map(|r| h.row(r).iter().copied().sum::<T>() / nf).collect();
        let u_full = h_bar.iter().copied().sum::<T>() / nf;
        let total: T = h.as_slice().iter().copied().sum();
        let u_offdiag = (total - h.trace()) / (nf * (nf - T::one()));
        let symmetric = h.is_symmetric(T::lit(1e-12));
        Ok(Self { h, h_bar, u_full, u_offdiag, symmetric })
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> T {
        self.h[(k, l)]
    }

    /// Partial U-statistics `h̄ = H 1 / n`.
    pub fn h_bar(&self) -> &[T] {
        &self.h_bar
    }

    /// `Û_n = 1ᵀ h̄ / n`, the full `1/n²` double sum including the diagonal.
    pub fn u_full(&self) -> T {
        self.u_full
    }

    /// Classical degree-two U-statistic over distinct index pairs.
    pub fn u_offdiag(&self) -> T {
        self.u_offdiag
    }

    /// Whether `H` is symmetric to within `1e-12`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.symmetric {
            Ok(())
        } else {
            param("gossip protocols require a symmetric kernel")
        }
    }

    /// `H − h̄ 1ᵀ`
    pub fn centered(&self) -> Matrix<T> {
        Matrix::from_fn(self.n(), self.n(), |r, c| self.h[(r, c)] - self.h_bar[r])
    }

    /// `‖h̄ − Û_n 1‖`
    pub fn partial_spread(&self) -> T {
        self.h_bar.iter().map(|&v| (v - self.u_full) * (v - self.u_full)).sum::<T>().sqrt()
    }

    /// `‖H − h̄ 1ᵀ‖_F`
    pub fn centered_frobenius(&self) -> T {
        self.centered().frobenius_norm()
    }
}

/// Evaluates `h` on all `n²` ordered pairs, rows in parallel.
pub fn kernel_matrix<T: Scalar, K: PairKernel<T> + ?Sized>(kernel: &K, data: &Dataset<T>) -> Result<KernelMatrix<T>> {
    let n = data.len();
    if n < 2 {
        return param("kernel matrix needs n >= 2");
    }
    let mut values = vec![T::zero(); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let xr = data.observation(r);
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = kernel.eval(xr, data.observation(c));
        }
    });
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("kernel returned {} at pair ({}, {})", values[pos], pos / n, pos % n)));
    }
    KernelMatrix::from_matrix(Matrix::from_vec(n, n, values)?)
}

/// Dispersion constant `D(h) = ‖h̄ − Û_n 1‖ + 2‖H − h̄1ᵀ‖_F`.
pub fn dispersion<T: Scalar>(km: &KernelMatrix<T>) -> T {
    km.partial_spread() + T::lit(2.0) * km.centered_frobenius()
}

/// Degree-`r` U-statistic: the average of a permutation-symmetric `r`-ary kernel over
/// all `C(n, r)` subsets of distinct indices.
pub fn u_statistic_degree_r<T, F>(kernel: F, data: &Dataset<T>, r: usize) -> Result<T>
where
    T: Scalar,
    F: Fn(&[Observation<'_, T>]) -> T,
{
    let n = data.len();
    if r == 0 || r > n {
        return param(format!("degree r = {r} must satisfy 1 <= r <= n = {n}"));
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut total = T::zero();
    let mut count = 0usize;
    let mut tuple = Vec::with_capacity(r);
    loop {
        tuple.clear();
        tuple.extend(idx.iter().map(|&i| data.observation(i)));
        total = total + kernel(&tuple);
        count += 1;
        // advance to the next combination in lexicographic order
        let Some(pos) = (0..r).rev().find(|&p| idx[p] < n - r + p) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..r {
            idx[q] = idx[q - 1] + 1;
        }
    }
    Ok(total / T::from_count(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn product_123() -> KernelMatrix<f64> {
        kernel_matrix(&ProductKernel, &Dataset::scalars(&[1.0, 2.0, 3.0]).unwrap()).unwrap()
    }

    #[test]
    fn product_kernel_statistics() {
        let km = product_123();
        assert_relative_eq!(km.u_full(), 4.0, epsilon = 1e-15);
        assert_eq!(km.h_bar(), &[2.0, 4.0, 6.0]);
        assert_relative_eq!(km.u_offdiag(), 11.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn product_kernel_dispersion() {
        let km = product_123();
        assert_relative_eq!(dispersion(&km), 8f64.sqrt() + 2.0 * 28f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_kernel_has_zero_dispersion() {
        let data = Dataset::scalars(&[1.0, 5.0, -2.0, 0.5]).unwrap();
        let km = kernel_matrix(&ConstantKernel(3.0), &data).unwrap();
        assert_eq!(dispersion(&km), 0.0);
        let mut h = km.h().clone();
        h[(1, 1)] += 0.25;
        assert!(dispersion(&KernelMatrix::from_matrix(h).unwrap()) > 0.0);
    }

    #[test]
    fn degree_r_examples() {
        let data = Dataset::scalars(&[1.0, 2.0, 3.0]).unwrap();
        let sum = |o: &[Observation<'_, f64>]| o.iter().map(|x| x.point[0]).sum::<f64>();
        assert_relative_eq!(u_statistic_degree_r(sum, &data, 2).unwrap(), 4.0, epsilon = 1e-15);
        assert_relative_eq!(u_statistic_degree_r(sum, &data, 3).unwrap(), 6.0, epsilon = 1e-15);
        assert!(matches!(u_statistic_degree_r(sum, &data, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn non_finite_kernel_names_the_pair() {
        let data = Dataset::scalars(&[1.0, 0.0]).unwrap();
        let k = FnKernel::symmetric(|x: Observation<'_, f64>, y: Observation<'_, f64>| 1.0 / (x.point[0] * y.point[0]));
        match kernel_matrix(&k, &data) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("(0, 1)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_kernel_is_flagged() {
        let data = Dataset::scalars(&[1.0, 2.0, 4.0]).unwrap();
        let k = FnKernel::asymmetric(|x: Observation<'_, f64>, y: Observation<'_, f64>| x.point[0] - y.point[0]);
        let km = kernel_matrix(&k, &data).unwrap();
        assert!(!km.is_symmetric());
        assert!(km.require_symmetric().is_err());
    }

    #[test]
    fn builtin_kernels_are_symmetric() {
        let data = Dataset::new(
            vec![vec![0.3, -1.0], vec![2.0, 0.5], vec![-0.7, 1.1], vec![1.5, 1.5]],
            Some(vec![1.0, -1.0, 1.0, -1.0]),
        )
        .unwrap();
        let kernels: Vec<Box<dyn PairKernel<f64>>> = vec![
            Box::new(ProductKernel),
            Box::new(SumKernel),
            Box::new(VarianceKernel),
            Box::new(GiniKernel),
            Box::new(ClusterScatterKernel::default()),
            Box::new(RankingKernel { weights: vec![0.4, -0.2], loss: RankingLoss::Logistic }),
            Box::new(MetricRiskKernel { theta: vec![1.0, 0.2, 0.2, 0.5], margin: 1.0 }),
        ];
        for k in &kernels {
            assert!(kernel_matrix(k.as_ref(), &data).unwrap().is_symmetric());
        }
    }

    #[test]
    fn variance_kernel_gives_sample_variance() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let km = kernel_matrix(&VarianceKernel, &Dataset::scalars(&xs).unwrap()).unwrap();
        let mean = xs.iter().sum::<f64>() / 4.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 3.0;
        assert_relative_eq!(km.u_offdiag(), var, epsilon = 1e-12);
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_relative_eq!(softplus(0.0f64), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(softplus(800.0f64), 800.0, epsilon = 1e-12);
        assert_eq!(softplus(-800.0f64), 0.0);
        assert_relative_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) <= 1.0);
    }
}
