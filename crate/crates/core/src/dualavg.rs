//! Dual averaging: projections, step-size schedules, the centralized, stochastic
//! and distributed variants, and gossip dual averaging for pairwise objectives.

use std::fmt;
use std::str::FromStr;

use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::pairwise::{Dataset, Observation};
use crate::rng::Draws;
use crate::scalar::{dot, norm, Scalar};

/// Pairwise loss `f(θ; x, x')` with gradient in `θ`.
pub trait PairwiseObjective<T: Scalar>: Sync {
    /// Dimension of `θ`.
    fn param_dim(&self) -> usize;

    fn value(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> T;

    /// `out += weight * ∇_θ f(θ; x, y)`
    fn add_grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>, weight: T, out: &mut [T]);

    /// Declared Lipschitz constant.
    fn lipschitz(&self) -> T;

    fn name(&self) -> &'static str;

    /// Distance of `θ` from the nearest non-differentiable point for this pair,
    /// measured in the loss argument. `None` for smooth losses.
    fn kink_gap(&self, _theta: &[T], _x: Observation<'_, T>, _y: Observation<'_, T>) -> Option<T> {
        None
    }

    fn grad(&self, theta: &[T], x: Observation<'_, T>, y: Observation<'_, T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.param_dim()];
        self.add_grad(theta, x, y, T::one(), &mut out);
        out
    }
}

/// `F(θ) = (1/n²) Σ_i Σ_j f(θ; x_i, x_j)`
pub fn risk<T: Scalar, O: PairwiseObjective<T> + ?Sized>(obj: &O, data: &Dataset<T>, theta: &[T]) -> T {
    let n = data.len();
    let mut total = T::zero();
    for i in 0..n {
        let xi = data.observation(i);
        for j in 0..n {
            total = total + obj.value(theta, xi, data.observation(j));
        }
    }
    total / T::from_count(n * n)
}

/// `∇F(θ)`
pub fn full_gradient<T: Scalar, O: PairwiseObjective<T> + ?Sized>(obj: &O, data: &Dataset<T>, theta: &[T]) -> Vec<T> {
    let n = data.len();
    let w = T::one() / T::from_count(n * n);
    let mut out = vec![T::zero(); obj.param_dim()];
    for i in 0..n {
        let xi = data.observation(i);
        for j in 0..n {
            obj.add_grad(theta, xi, data.observation(j), w, &mut out);
        }
    }
    out
}

/// `∇f_i(θ) = (1/n) Σ_j ∇f(θ; x_i, x_j)`
pub fn partial_gradient<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    data: &Dataset<T>,
    i: usize,
    theta: &[T],
) -> Vec<T> {
    let n = data.len();
    let w = T::one() / T::from_count(n);
    let mut out = vec![T::zero(); obj.param_dim()];
    let xi = data.observation(i);
    for j in 0..n {
        obj.add_grad(theta, xi, data.observation(j), w, &mut out);
    }
    out
}

/// Constraint / regularizer defining the projection `π_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionSpec<T> {
    /// Unconstrained: `π_t(z) = γ(t) z`.
    None,
    /// Euclidean ball of the given radius.
    Ball(T),
    /// Positive semidefinite `d × d` matrices, stored row-major.
    PsdCone(usize),
}

impl<T: Scalar> ProjectionSpec<T> {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::Ball(r) if r > T::zero() => Ok(()),
            Self::Ball(r) => param(format!("ball radius must be positive, got {r}")),
            Self::PsdCone(d) if d * d == dim => Ok(()),
            Self::PsdCone(d) => Err(Error::Shape(format!("PSD cone of side {d} needs {} entries, got {dim}", d * d))),
        }
    }
}

impl<T: Scalar> fmt::Display for ProjectionSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Ball(r) => write!(f, "ball:{r}"),
            Self::PsdCone(d) => write!(f, "psd:{d}"),
        }
    }
}

impl<T: Scalar> FromStr for ProjectionSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "none" => Ok(Self::None),
            "ball" => rest
                .parse::<f64>()
                .map(|r| Self::Ball(T::lit(r)))
                .map_err(|_| Error::Parameter(format!("invalid ball radius in `{s}`"))),
            "psd" => rest
                .parse::<usize>()
                .map(Self::PsdCone)
                .map_err(|_| Error::Parameter(format!("invalid PSD side in `{s}`"))),
            _ => param(format!("unknown projection `{s}`")),
        }
    }
}

/// Step sizes `γ(t) = a·t^α` with `a > 0` and `α ∈ (−1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule<T> {
    pub a: T,
    pub alpha: T,
}

impl<T: Scalar> StepSchedule<T> {
    pub fn new(a: T, alpha: T) -> Result<Self> {
        if !(a > T::zero()) {
            return param(format!("step scale a must be positive, got {a}"));
        }
        if !(alpha > -T::one() && alpha < T::zero()) {
            return param(format!("step exponent must lie in (-1, 0), got {alpha}"));
        }
        Ok(Self { a, alpha })
    }

    /// `γ(t) = a/√t`
    pub fn inverse_sqrt(a: T) -> Result<Self> {
        Self::new(a, T::lit(-0.5))
    }

    /// `γ` at a real-valued time `t > 0`.
    pub fn gamma(&self, t: T) -> T {
        self.a * t.powf(self.alpha)
    }

    pub fn gamma_at(&self, t: usize) -> T {
        self.gamma(T::from_count(t))
    }

    /// `Γ(t) = t·γ(t)`
    pub fn capital_gamma(&self, t: usize) -> T {
        T::from_count(t) * self.gamma_at(t)
    }

    /// `Σ_{s=from}^{to} γ(s)`, summed exactly.
    pub fn sum(&self, from: usize, to: usize) -> T {
        (from.max(1)..=to).map(|s| self.gamma_at(s)).sum()
    }
}

/// `π_t(z)` at integer time `t ≥ 1`.
pub fn project<T: Scalar>(z: &[T], t: usize, sched: &StepSchedule<T>, psi: &ProjectionSpec<T>) -> Result<Vec<T>> {
    if t == 0 {
        return param("projection time must be >= 1");
    }
    project_at(z, sched.gamma_at(t), psi)
}

/// `π(z)` for a given step size `γ`.
pub fn project_at<T: Scalar>(z: &[T], gamma: T, psi: &ProjectionSpec<T>) -> Result<Vec<T>> {
    let scaled: Vec<T> = z.iter().map(|&v| gamma * v).collect();
    match *psi {
        ProjectionSpec::None => Ok(scaled),
        ProjectionSpec::Ball(radius) => {
            let r = norm(&scaled);
            if r <= radius {
                Ok(scaled)
            } else {
                let zn = norm(z);
                Ok(z.iter().map(|&v| radius * v / zn).collect())
            }
        }
        ProjectionSpec::PsdCone(d) => {
            if scaled.len() != d * d {
                return Err(Error::Shape(format!(
                    "PSD projection of side {d} got a vector of length {}",
                    scaled.len()
                )));
            }
            let m = Matrix::from_vec(d, d, scaled)?.symmetrized()?;
            let eig = m.symmetric_eigen()?;
            Ok(eig.reconstruct_with(|l| l.max(T::zero()))?.into_vec())
        }
    }
}

/// Options shared by the optimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaConfig<T> {
    pub schedule: StepSchedule<T>,
    pub projection: ProjectionSpec<T>,
    pub iterations: usize,
    pub record_every: usize,
    /// Radius of an extra ball applied after the projection; every step where it
    /// changes an iterate is counted.
    pub safety_radius: Option<T>,
}

impl<T: Scalar> DaConfig<T> {
    pub fn new(schedule: StepSchedule<T>, projection: ProjectionSpec<T>, iterations: usize) -> Self {
        Self { schedule, projection, iterations, record_every: 1, safety_radius: None }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn safety_radius(mut self, radius: Option<T>) -> Self {
        self.safety_radius = radius;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        self.projection.validate(dim)?;
        if self.record_every == 0 {
            return param("record_every must be >= 1");
        }
        if let Some(r) = self.safety_radius {
            if !(r > T::zero()) {
                return param("safety radius must be positive");
            }
        }
        Ok(())
    }

    fn records(&self, t: usize) -> bool {
        t.is_multiple_of(self.record_every) || t == self.iterations
    }

    /// Primal point `π(−z)` for a gradient sum `z` at step size `gamma`, followed by
    /// the safety ball. Returns whether the safety ball changed the result.
    fn primal(&self, z: &[T], gamma: T, out: &mut Vec<T>) -> Result<bool> {
        let descent: Vec<T> = z.iter().map(|&v| -v).collect();
        *out = project_at(&descent, gamma, &self.projection)?;
        if let Some(radius) = self.safety_radius {
            let r = norm(out);
            if r > radius {
                out.iter_mut().for_each(|v| *v = *v * radius / r);
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn running_average<T: Scalar>(avg: &mut [T], value: &[T], weight: T) {
    let keep = T::one() - weight;
    for (a, &v) in avg.iter_mut().zip(value) {
        *a = keep * *a + weight * v;
    }
}

/// Iterate of a single-machine run at a recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct DaRecord<T> {
    pub t: usize,
    pub theta: Vec<T>,
    pub theta_bar: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaRun<T> {
    pub records: Vec<DaRecord<T>>,
    pub theta: Vec<T>,
    pub theta_bar: Vec<T>,
    pub safety_hits: usize,
}

/// Centralized dual averaging on the full risk: `z ← z + ∇F(θ)`, `θ ← π_t(−z)`.
///
/// Every optimizer keeps `z` as the running sum of gradients and maps it to the
/// primal space through `π_t(−z)`, so the iterates descend.
pub fn centralized_da<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
) -> Result<DaRun<T>> {
    single_machine(obj, cfg, |theta| Ok(full_gradient(obj, data, theta)))
}

/// Stochastic dual averaging: the gradient is `∇f(θ; x_I, x_J)` with `I, J`
/// uniform on the sample.
pub fn stochastic_da<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
    draws: &mut impl Draws,
) -> Result<DaRun<T>> {
    let n = data.len();
    single_machine(obj, cfg, |theta| {
        let i = draws.node(n);
        let j = draws.node(n);
        Ok(obj.grad(theta, data.observation(i), data.observation(j)))
    })
}

fn single_machine<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    cfg: &DaConfig<T>,
    mut gradient: impl FnMut(&[T]) -> Result<Vec<T>>,
) -> Result<DaRun<T>> {
    let dim = obj.param_dim();
    cfg.validate(dim)?;
    let mut z = vec![T::zero(); dim];
    let mut theta = vec![T::zero(); dim];
    let mut theta_bar = vec![T::zero(); dim];
    let mut records = Vec::new();
    let mut safety_hits = 0;
    for t in 1..=cfg.iterations {
        let g = gradient(&theta)?;
        z.iter_mut().zip(&g).for_each(|(a, &b)| *a = *a + b);
        if cfg.primal(&z, cfg.schedule.gamma_at(t), &mut theta)? {
            safety_hits += 1;
        }
        running_average(&mut theta_bar, &theta, T::one() / T::from_count(t));
        if cfg.records(t) {
            records.push(DaRecord { t, theta: theta.clone(), theta_bar: theta_bar.clone() });
        }
    }
    Ok(DaRun { records, theta, theta_bar, safety_hits })
}

/// Distributed dual averaging for a separable objective `Σ_i f_i`: each round
/// `Z ← W Z + G` followed by `θ_i = π_t(−z_i)`, with `local_grad(i, θ_i)` the
/// gradient of `f_i`. Returns the final per-node running averages.
pub fn distributed_da<T: Scalar>(
    w: &Matrix<T>,
    dim: usize,
    cfg: &DaConfig<T>,
    local_grad: impl Fn(usize, &[T]) -> Vec<T>,
) -> Result<NodeStates<T>> {
    if !w.is_square() {
        return Err(Error::Shape("mixing matrix must be square".into()));
    }
    cfg.validate(dim)?;
    let n = w.rows();
    let mut states = NodeStates::new(n, dim);
    for t in 1..=cfg.iterations {
        let grads: Vec<Vec<T>> = (0..n).map(|i| local_grad(i, &states.theta[i])).collect();
        let mixed: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let mut row = grads[i].clone();
                for k in 0..n {
                    let wik = w[(i, k)];
                    if wik != T::zero() {
                        row.iter_mut().zip(&states.z[k]).for_each(|(a, &b)| *a = *a + wik * b);
                    }
                }
                row
            })
            .collect();
        states.z = mixed;
        let gamma = cfg.schedule.gamma_at(t);
        let weight = T::one() / T::from_count(t);
        for i in 0..n {
            if cfg.primal(&states.z[i], gamma, &mut states.theta[i])? {
                states.safety_hits += 1;
            }
            running_average(&mut states.theta_bar[i], &states.theta[i], weight);
        }
    }
    Ok(states)
}

/// Per-node optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStates<T> {
    pub z: Vec<Vec<T>>,
    pub theta: Vec<Vec<T>>,
    pub theta_bar: Vec<Vec<T>>,
    /// `aux[k] = j` means node `k` holds observation `x_j`.
    pub aux: Vec<usize>,
    /// Asynchronous clock estimates `m_k`.
    pub clock: Vec<T>,
    pub safety_hits: usize,
}

impl<T: Scalar> NodeStates<T> {
    pub fn new(n: usize, dim: usize) -> Self {
        Self {
            z: vec![vec![T::zero(); dim]; n],
            theta: vec![vec![T::zero(); dim]; n],
            theta_bar: vec![vec![T::zero(); dim]; n],
            aux: (0..n).collect(),
            clock: vec![T::zero(); n],
            safety_hits: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `ẑ = (1/n) Σ_i z_i`
    pub fn mean_z(&self) -> Vec<T> {
        mean_of(&self.z)
    }

    pub fn mean_theta_bar(&self) -> Vec<T> {
        mean_of(&self.theta_bar)
    }

    fn average_pair(&mut self, i: usize, j: usize) {
        let two = T::lit(2.0);
        for c in 0..self.z[i].len() {
            let avg = (self.z[i][c] + self.z[j][c]) / two;
            self.z[i][c] = avg;
            self.z[j][c] = avg;
        }
    }
}

fn mean_of<T: Scalar>(rows: &[Vec<T>]) -> Vec<T> {
    let n = T::from_count(rows.len());
    let mut out = vec![T::zero(); rows.first().map_or(0, Vec::len)];
    for r in rows {
        out.iter_mut().zip(r).for_each(|(a, &b)| *a = *a + b);
    }
    out.iter_mut().for_each(|a| *a = *a / n);
    out
}

/// Average gradient bias across the network at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRecord<T> {
    pub t: usize,
    /// `ε̂(t) = (1/n) Σ_i (∇f(θ_i; x_i, y_i) − (1/n) Σ_j ∇f(θ_i; x_i, x_j))`
    pub eps_hat: Vec<T>,
    /// `ω̂(t)`: the primal point of the mean dual variable, `π_t(−ẑ(t))`.
    pub omega_hat: Vec<T>,
    /// `ε̂(t)ᵀ ω̂(t)`
    pub inner: T,
    /// `ẑ(t)`, the mean dual variable.
    pub zhat: Vec<T>,
}

/// `ε̂` for parameters `theta[i]` and held observations `held[i]`.
pub fn bias_term<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    data: &Dataset<T>,
    theta: &[Vec<T>],
    held: &[usize],
) -> Vec<T> {
    let n = data.len();
    let inv_n = T::one() / T::from_count(n);
    let inv_n2 = inv_n * inv_n;
    let mut eps = vec![T::zero(); obj.param_dim()];
    for i in 0..n {
        let xi = data.observation(i);
        obj.add_grad(&theta[i], xi, data.observation(held[i]), inv_n, &mut eps);
        for j in 0..n {
            obj.add_grad(&theta[i], xi, data.observation(j), -inv_n2, &mut eps);
        }
    }
    eps
}

fn bias_record<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
    t: usize,
    theta: &[Vec<T>],
    held: &[usize],
    zhat: Vec<T>,
) -> Result<BiasRecord<T>> {
    let eps_hat = bias_term(obj, data, theta, held);
    let descent: Vec<T> = zhat.iter().map(|&v| -v).collect();
    let omega_hat = project(&descent, t, &cfg.schedule, &cfg.projection)?;
    let inner = dot(&eps_hat, &omega_hat);
    Ok(BiasRecord { t, eps_hat, omega_hat, inner, zhat })
}

/// Which observation each node pairs with in the synchronous algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyncVariant {
    /// The auxiliary observation propagated by random swaps.
    Gossip,
    /// A uniformly random observation, drawn fresh for every node and step.
    UnbiasedBaseline,
}

/// State handed to the observer at recorded steps.
#[derive(Debug)]
pub struct Snapshot<'a, T> {
    pub t: usize,
    pub nodes: &'a NodeStates<T>,
    pub bias: Option<&'a BiasRecord<T>>,
}

fn check_gossip<T: Scalar, O: PairwiseObjective<T> + ?Sized>(
    g: &Graph,
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
) -> Result<()> {
    g.require_gossip_ready()?;
    if data.len() != g.node_count() {
        return Err(Error::Shape(format!("dataset has {} points but graph has {} nodes", data.len(), g.node_count())));
    }
    cfg.validate(obj.param_dim())
}

/// Synchronous gossip dual averaging for a pairwise objective.
///
/// Each iteration draws an edge, averages the endpoints' dual variables, swaps
/// their auxiliary observations, then every node adds its pairwise gradient,
/// projects and updates its running average. With `record_bias` set, the bias
/// record of the iteration (with the parameters the gradients were taken at) is
/// passed to the observer at recorded steps.
#[allow(clippy::too_many_arguments)]
pub fn gossip_sync<T, O>(
    g: &Graph,
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
    variant: SyncVariant,
    record_bias: bool,
    draws: &mut impl Draws,
    mut observer: impl FnMut(Snapshot<'_, T>) -> Result<()>,
) -> Result<NodeStates<T>>
where
    T: Scalar,
    O: PairwiseObjective<T> + ?Sized,
{
    check_gossip(g, obj, data, cfg)?;
    let n = g.node_count();
    let mut s = NodeStates::new(n, obj.param_dim());
    let mut held = vec![0usize; n];
    let mut next = Vec::new();
    for t in 1..=cfg.iterations {
        let (i, j) = g.edge(draws.edge(g.edge_count()));
        s.average_pair(i, j);
        s.aux.swap(i, j);
        match variant {
            SyncVariant::Gossip => held.copy_from_slice(&s.aux),
            SyncVariant::UnbiasedBaseline => held.iter_mut().for_each(|h| *h = draws.node(n)),
        }
        let recording = cfg.records(t);
        let bias = if record_bias && recording {
            Some(bias_record(obj, data, cfg, t, &s.theta, &held, s.mean_z())?)
        } else {
            None
        };
        let gamma = cfg.schedule.gamma_at(t);
        let weight = T::one() / T::from_count(t);
        for k in 0..n {
            obj.add_grad(&s.theta[k], data.observation(k), data.observation(held[k]), T::one(), &mut s.z[k]);
            if cfg.primal(&s.z[k], gamma, &mut next)? {
                s.safety_hits += 1;
            }
            std::mem::swap(&mut s.theta[k], &mut next);
            running_average(&mut s.theta_bar[k], &s.theta[k], weight);
        }
        if recording {
            observer(Snapshot { t, nodes: &s, bias: bias.as_ref() })?;
        }
    }
    Ok(s)
}

/// Asynchronous gossip dual averaging: one uniformly drawn edge per event.
///
/// Node `k` is touched with probability `p_k = d_k/|E|`. On an event both
/// endpoints swap observations, set their dual variables to the pre-event
/// average, add `(1/p_k)·∇f(θ_k; x_k, x_{aux_k})`, advance their clocks by
/// `1/p_k`, project at the real-valued time `m_k` and update their running
/// averages with weight `1/(m_k p_k)` clamped to `(0, 1]`.
pub fn gossip_async<T, O>(
    g: &Graph,
    obj: &O,
    data: &Dataset<T>,
    cfg: &DaConfig<T>,
    draws: &mut impl Draws,
    mut observer: impl FnMut(Snapshot<'_, T>) -> Result<()>,
) -> Result<NodeStates<T>>
where
    T: Scalar,
    O: PairwiseObjective<T> + ?Sized,
{
    check_gossip(g, obj, data, cfg)?;
    let n = g.node_count();
    let edges = T::from_count(g.edge_count());
    let inv_p: Vec<T> = (0..n).map(|k| edges / T::from_count(g.degree(k))).collect();
    let mut s = NodeStates::new(n, obj.param_dim());
    let mut next = Vec::new();
    for t in 1..=cfg.iterations {
        let (i, j) = g.edge(draws.edge(g.edge_count()));
        s.aux.swap(i, j);
        s.average_pair(i, j);
        for k in [i, j] {
            let theta_k = std::mem::take(&mut s.theta[k]);
            obj.add_grad(&theta_k, data.observation(k), data.observation(s.aux[k]), inv_p[k], &mut s.z[k]);
            s.clock[k] = s.clock[k] + inv_p[k];
            let m = s.clock[k];
            if cfg.primal(&s.z[k], cfg.schedule.gamma(m), &mut next)? {
                s.safety_hits += 1;
            }
            s.theta[k] = std::mem::replace(&mut next, theta_k);
            let w = (inv_p[k] / m).min(T::one());
            running_average(&mut s.theta_bar[k], &s.theta[k], w);
        }
        if cfg.records(t) {
            observer(Snapshot { t, nodes: &s, bias: None })?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// `f = ½ θ²` for every pair, in one dimension.
    struct HalfSquare;

    impl PairwiseObjective<f64> for HalfSquare {
        fn param_dim(&self) -> usize {
            1
        }
        fn value(&self, theta: &[f64], _: Observation<'_, f64>, _: Observation<'_, f64>) -> f64 {
            0.5 * theta[0] * theta[0]
        }
        fn add_grad(&self, theta: &[f64], _: Observation<'_, f64>, _: Observation<'_, f64>, w: f64, out: &mut [f64]) {
            out[0] += w * theta[0];
        }
        fn lipschitz(&self) -> f64 {
            1.0
        }
        fn name(&self) -> &'static str {
            "half-square"
        }
    }

    fn sched(a: f64) -> StepSchedule<f64> {
        StepSchedule::inverse_sqrt(a).unwrap()
    }

    #[test]
    fn ball_projection_examples() {
        let s = StepSchedule { a: 0.5, alpha: -0.5 };
        // γ(1) = 0.5
        assert_eq!(project(&[3.0, 4.0], 1, &s, &ProjectionSpec::Ball(10.0)).unwrap(), vec![1.5, 2.0]);
        let p = project(&[3.0, 4.0], 1, &s, &ProjectionSpec::Ball(2.0)).unwrap();
        assert_relative_eq!(p[0], 1.2, epsilon = 1e-15);
        assert_relative_eq!(p[1], 1.6, epsilon = 1e-15);
    }

    #[test]
    fn psd_projection_clips() {
        let s = StepSchedule { a: 1.0, alpha: -0.5 };
        let p = project(&[2.0, 0.0, 0.0, -2.0], 1, &s, &ProjectionSpec::PsdCone(2)).unwrap();
        for (a, b) in p.iter().zip([2.0, 0.0, 0.0, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(matches!(project(&[1.0, 2.0, 3.0], 1, &s, &ProjectionSpec::PsdCone(2)), Err(Error::Shape(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(StepSchedule::new(1.0, -1.0).is_err());
        assert!(StepSchedule::new(1.0, 0.0).is_err());
        assert!(StepSchedule::new(0.0, -0.5).is_err());
        let s = sched(2.0);
        assert_relative_eq!(s.gamma_at(4), 1.0);
        assert_relative_eq!(s.capital_gamma(4), 4.0);
    }

    #[test]
    fn projection_descriptor_parsing() {
        assert_eq!("none".parse::<ProjectionSpec<f64>>().unwrap(), ProjectionSpec::None);
        assert_eq!("ball:2.5".parse::<ProjectionSpec<f64>>().unwrap(), ProjectionSpec::Ball(2.5));
        assert_eq!("psd:3".parse::<ProjectionSpec<f64>>().unwrap(), ProjectionSpec::PsdCone(3));
        assert!("disc".parse::<ProjectionSpec<f64>>().is_err());
    }

    #[test]
    fn half_square_stays_at_origin() {
        let data = Dataset::scalars(&[1.0, 2.0]).unwrap();
        let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 50);
        let run = centralized_da(&HalfSquare, &data, &cfg).unwrap();
        assert_eq!(run.theta_bar, vec![0.0]);
        assert_eq!(run.records.len(), 50);
    }

    #[test]
    fn distributed_da_reaches_consensus_minimiser() {
        // f_i(θ) = ½(θ − c_i)², minimiser of the sum is mean(c) = 2
        let w = Matrix::from_fn(3, 3, |i, j| if i == j { 0.5 } else { 0.25 });
        let centers = [1.0, 2.0, 3.0];
        let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 4000);
        let states = distributed_da(&w, 1, &cfg, |i, th| vec![th[0] - centers[i]]).unwrap();
        for tb in &states.theta_bar {
            assert!((tb[0] - 2.0).abs() < 0.1, "{}", tb[0]);
        }
    }
}
