//! Gossip estimation of U-statistics: the GoSta, U1 and U2 protocols, exact
//! expectation oracles, and the convergence bounds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::graph::{transition, Graph, NetworkConstants};
use crate::linalg::Matrix;
use crate::pairwise::{dispersion, KernelMatrix};
use crate::rng::{Draws, SeededDraws};
use crate::scalar::{mean_std, norm, Scalar};

/// Oracle scale limits for [`exact_expectation`].
pub const EXACT_MAX_T: usize = 500;
pub const EXACT_MAX_N: usize = 40;
/// Leaf budget for [`brute_force_expectation`].
pub const BRUTE_FORCE_MAX_BRANCHES: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Synchronous GoSta: local update, average along an edge, swap observations.
    GoSta,
    /// Swap, then every node averages toward its partial U-statistic.
    U1,
    /// Two independently swapped observation indices, no averaging.
    U2,
    /// Event-driven GoSta: only the two endpoints of the drawn edge act, with
    /// degree-corrected weights and per-node clocks.
    GoStaAsync,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Self::GoSta => "gosta",
            Self::U1 => "u1",
            Self::U2 => "u2",
            Self::GoStaAsync => "gosta-async",
        }
    }

    /// Edge draws consumed per iteration.
    pub fn draws_per_step(self) -> usize {
        if self == Self::U2 {
            2
        } else {
            1
        }
    }

    /// Vector the node estimates converge to: `h̄` for U1, `Û_n 1` otherwise.
    pub fn target<T: Scalar>(self, km: &KernelMatrix<T>) -> Vec<T> {
        match self {
            Self::U1 => km.h_bar().to_vec(),
            _ => vec![km.u_full(); km.n()],
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gosta" | "gosta-sync" => Ok(Self::GoSta),
            "u1" => Ok(Self::U1),
            "u2" => Ok(Self::U2),
            "gosta-async" | "async" => Ok(Self::GoStaAsync),
            other => param(format!("unknown protocol `{other}`")),
        }
    }
}

/// State of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipState<T> {
    pub protocol: Protocol,
    /// Iterations (or events) completed.
    pub t: usize,
    pub z: Vec<T>,
    /// `aux[k] = j` means node `k` currently holds observation `x_j`.
    pub aux: Vec<usize>,
    /// Second observation index (U2 only).
    pub aux2: Option<Vec<usize>>,
    /// Per-node clock estimates (asynchronous protocol only).
    pub clock: Vec<T>,
}

impl<T: Scalar> GossipState<T> {
    pub fn new(protocol: Protocol, n: usize) -> Self {
        Self {
            protocol,
            t: 0,
            z: vec![T::zero(); n],
            aux: (0..n).collect(),
            aux2: (protocol == Protocol::U2).then(|| (0..n).collect()),
            clock: if protocol == Protocol::GoStaAsync { vec![T::zero(); n] } else { Vec::new() },
        }
    }

    /// Current node estimates. For the asynchronous protocol this is `z_k / m_k`
    /// (zero before a node's first activation).
    pub fn estimates(&self) -> Vec<T> {
        if self.protocol != Protocol::GoStaAsync {
            return self.z.clone();
        }
        self.z.iter().zip(&self.clock).map(|(&z, &m)| if m > T::zero() { z / m } else { T::zero() }).collect()
    }

    /// Draws the iteration's edges and applies one step.
    pub fn step(&mut self, g: &Graph, km: &KernelMatrix<T>, draws: &mut impl Draws) {
        let e1 = draws.edge(g.edge_count());
        let e2 = (self.protocol == Protocol::U2).then(|| draws.edge(g.edge_count()));
        self.step_with_edges(g, km, e1, e2);
    }

    /// Applies one step with the given edge indices. `second` is the edge used for
    /// the second observation index of U2 and is ignored by the other protocols.
    pub fn step_with_edges(&mut self, g: &Graph, km: &KernelMatrix<T>, first: usize, second: Option<usize>) {
        self.t += 1;
        let t = T::from_count(self.t);
        let keep = (t - T::one()) / t;
        let fresh = T::one() / t;
        let (i, j) = g.edge(first);
        match self.protocol {
            Protocol::GoSta => {
                for p in 0..self.z.len() {
                    self.z[p] = keep * self.z[p] + fresh * km.get(p, self.aux[p]);
                }
                let avg = (self.z[i] + self.z[j]) / T::lit(2.0);
                self.z[i] = avg;
                self.z[j] = avg;
                self.aux.swap(i, j);
            }
            Protocol::U1 => {
                self.aux.swap(i, j);
                for k in 0..self.z.len() {
                    self.z[k] = keep * self.z[k] + fresh * km.get(k, self.aux[k]);
                }
            }
            Protocol::U2 => {
                let aux2 = self.aux2.as_mut().expect("U2 state carries a second index");
                for p in 0..self.z.len() {
                    self.z[p] = keep * self.z[p] + fresh * km.get(self.aux[p], aux2[p]);
                }
                self.aux.swap(i, j);
                let (a, b) = g.edge(second.expect("U2 consumes two edges per step"));
                aux2.swap(a, b);
            }
            Protocol::GoStaAsync => {
                self.aux.swap(i, j);
                let avg = (self.z[i] + self.z[j]) / T::lit(2.0);
                let edges = T::from_count(g.edge_count());
                for k in [i, j] {
                    let inv_p = edges / T::from_count(g.degree(k));
                    self.z[k] = avg + inv_p * km.get(k, self.aux[k]);
                    self.clock[k] = self.clock[k] + inv_p;
                }
            }
        }
    }
}

/// One recorded step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: usize,
    pub estimates: Vec<T>,
    /// `‖estimates − target‖`
    pub error: T,
    pub mean: T,
    pub std: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub protocol: Protocol,
    pub seed: Option<u64>,
    pub points: Vec<TrajectoryPoint<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> Option<&TrajectoryPoint<T>> {
        self.points.last()
    }
}

fn check_inputs<T: Scalar>(g: &Graph, km: &KernelMatrix<T>) -> Result<()> {
    g.require_gossip_ready()?;
    if km.n() != g.node_count() {
        return Err(Error::Shape(format!("kernel matrix has n = {} but graph has {} nodes", km.n(), g.node_count())));
    }
    km.require_symmetric()
}

/// Runs `protocol` for `iterations` steps from a seeded generator, recording every
/// `record_every` steps and at the final step.
pub fn simulate<T: Scalar>(
    protocol: Protocol,
    g: &Graph,
    km: &KernelMatrix<T>,
    iterations: usize,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory<T>> {
    let mut draws = SeededDraws::new(seed);
    let mut traj = simulate_with(protocol, g, km, iterations, &mut draws, record_every)?;
    traj.seed = Some(seed);
    Ok(traj)
}

/// As [`simulate`] with an explicit randomness source.
pub fn simulate_with<T: Scalar>(
    protocol: Protocol,
    g: &Graph,
    km: &KernelMatrix<T>,
    iterations: usize,
    draws: &mut impl Draws,
    record_every: usize,
) -> Result<Trajectory<T>> {
    check_inputs(g, km)?;
    if record_every == 0 {
        return param("record_every must be >= 1");
    }
    let target = protocol.target(km);
    let mut state = GossipState::new(protocol, g.node_count());
    let mut points = Vec::new();
    for t in 1..=iterations {
        state.step(g, km, draws);
        if t % record_every == 0 || t == iterations {
            let estimates = state.estimates();
            let error = estimates.iter().zip(&target).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
            let (mean, std) = mean_std(&estimates);
            points.push(TrajectoryPoint { t, estimates, error, mean, std });
        }
    }
    Ok(Trajectory { protocol, seed: None, points })
}

/// Final state after `iterations` steps (including `iterations = 0`).
pub fn run_state<T: Scalar>(
    protocol: Protocol,
    g: &Graph,
    km: &KernelMatrix<T>,
    iterations: usize,
    draws: &mut impl Draws,
) -> Result<GossipState<T>> {
    check_inputs(g, km)?;
    let mut state = GossipState::new(protocol, g.node_count());
    for _ in 0..iterations {
        state.step(g, km, draws);
    }
    Ok(state)
}

/// `[E z(0), E z(1), …, E z(T)]` in closed form.
///
/// Edge draws at distinct iterations are independent, the protocols are linear in
/// `z`, and the position of every observation index after `m` swaps is distributed
/// as row `p` of `W̄₁^m`. With `S(t) = t·E z(t)` this gives
/// GoSta: `S(t) = W̄₂ (S(t−1) + v_{t−1})`, U1: `S(t) = S(t−1) + v_t` and
/// U2: `S(t) = S(t−1) + q_{t−1}`, where `v_m[p] = Σ_a (W̄₁^m)_{pa} H_{pa}` and
/// `q_m = diag(W̄₁^m H (W̄₁^m)ᵀ)`.
pub fn exact_expectation<T: Scalar>(
    g: &Graph,
    km: &KernelMatrix<T>,
    iterations: usize,
    protocol: Protocol,
) -> Result<Vec<Vec<T>>> {
    check_inputs(g, km)?;
    let n = g.node_count();
    if iterations > EXACT_MAX_T || n > EXACT_MAX_N {
        return param(format!(
            "exact expectation limited to T <= {EXACT_MAX_T} and n <= {EXACT_MAX_N} (got T = {iterations}, n = {n})"
        ));
    }
    if protocol == Protocol::GoStaAsync {
        return param("no closed-form expectation for the asynchronous protocol");
    }
    let w1 = transition(g, T::one())?.w;
    let w2 = transition(g, T::lit(2.0))?.w;
    let h = km.h();

    let row_weighted =
        |p_mat: &Matrix<T>| -> Vec<T> { (0..n).map(|p| (0..n).map(|a| p_mat[(p, a)] * h[(p, a)]).sum()).collect() };
    let diag_sandwich = |p_mat: &Matrix<T>| -> Result<Vec<T>> {
        let ph = p_mat.matmul(h)?;
        Ok((0..n).map(|p| (0..n).map(|b| ph[(p, b)] * p_mat[(p, b)]).sum()).collect())
    };

    let mut out = vec![vec![T::zero(); n]];
    let mut s = vec![T::zero(); n];
    // power = W̄₁^m with m = t − 1 at the top of iteration t
    let mut power = Matrix::identity(n);
    for t in 1..=iterations {
        match protocol {
            Protocol::GoSta => {
                let v = row_weighted(&power);
                let inner: Vec<T> = s.iter().zip(&v).map(|(&a, &b)| a + b).collect();
                s = w2.matvec(&inner)?;
            }
            Protocol::U1 => {
                let next = power.matmul(&w1)?;
                let v = row_weighted(&next);
                s.iter_mut().zip(&v).for_each(|(a, &b)| *a = *a + b);
            }
            Protocol::U2 => {
                let q = diag_sandwich(&power)?;
                s.iter_mut().zip(&q).for_each(|(a, &b)| *a = *a + b);
            }
            Protocol::GoStaAsync => unreachable!(),
        }
        power = power.matmul(&w1)?;
        let tf = T::from_count(t);
        out.push(s.iter().map(|&v| v / tf).collect());
    }
    Ok(out)
}

/// `[E z(0), …, E z(T)]` by enumerating every equally likely edge sequence and
/// running the protocol's own step code along each branch.
pub fn brute_force_expectation<T: Scalar>(
    g: &Graph,
    km: &KernelMatrix<T>,
    iterations: usize,
    protocol: Protocol,
) -> Result<Vec<Vec<T>>> {
    check_inputs(g, km)?;
    let edges = g.edge_count();
    let per_step = edges.pow(protocol.draws_per_step() as u32);
    let leaves = (per_step as f64).powi(iterations as i32);
    if leaves > BRUTE_FORCE_MAX_BRANCHES {
        return Err(Error::Combinatorial(format!(
            "{leaves:.3e} edge sequences exceed the enumeration limit of {BRUTE_FORCE_MAX_BRANCHES:.0e}"
        )));
    }
    let n = g.node_count();
    let inv_branches = T::one() / T::from_count(per_step);

    // Returns the mean estimate vector at each depth below `state`, averaging
    // child subtrees level by level to keep rounding error small.
    fn visit<T: Scalar>(state: &GossipState<T>, ctx: (&Graph, &KernelMatrix<T>, usize, usize, T)) -> Vec<Vec<T>> {
        let (g, km, iterations, per_step, inv_branches) = ctx;
        let mut out = vec![state.estimates()];
        if state.t == iterations {
            return out;
        }
        let edges = g.edge_count();
        let n = state.z.len();
        let mut below = vec![vec![T::zero(); n]; iterations - state.t];
        for b in 0..per_step {
            let mut child = state.clone();
            let (first, second) = if state.protocol == Protocol::U2 { (b / edges, Some(b % edges)) } else { (b, None) };
            child.step_with_edges(g, km, first, second);
            for (acc, v) in below.iter_mut().zip(visit(&child, ctx)) {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a = *a + x);
            }
        }
        for level in &mut below {
            level.iter_mut().for_each(|a| *a = *a * inv_branches);
        }
        out.extend(below);
        out
    }

    let root = GossipState::new(protocol, n);
    Ok(visit(&root, (g, km, iterations, per_step, inv_branches)))
}

/// `‖E z(t) − Û_n 1‖ ≤ |E| D(h) / (t λ_{n−1})` for GoSta. Requires `t ≥ 1`.
pub fn bound_gosta_expectation<T: Scalar>(net: &NetworkConstants<T>, km: &KernelMatrix<T>, t: usize) -> T {
    net.edges() / (T::from_count(t) * net.spectral_gap) * dispersion(km)
}

/// Bound on `E‖z(t) − Û_n 1‖` for GoSta. Requires `t ≥ 1`.
pub fn bound_gosta_deviation<T: Scalar>(net: &NetworkConstants<T>, km: &KernelMatrix<T>, t: usize) -> T {
    let two = T::lit(2.0);
    let tf = T::from_count(t);
    let ratio = net.edges() / net.spectral_gap;
    let centered = km.centered_frobenius();
    let full = km.h().frobenius_norm();
    let inner = (T::one() + two * ratio) * centered * centered
        + T::lit(4.0) * ratio * (T::one() + T::one() / (two * tf)) * full * full;
    (inner / tf).sqrt()
}

/// `|E z_k(t) − h̄_k| ≤ |E| ‖H e_k‖ / (2 λ_{n−1} t)` for U1. Requires `t ≥ 1`.
pub fn bound_u1_node<T: Scalar>(net: &NetworkConstants<T>, km: &KernelMatrix<T>, k: usize, t: usize) -> T {
    let column: Vec<T> = (0..km.n()).map(|r| km.get(r, k)).collect();
    net.edges() * norm(&column) / (T::lit(2.0) * net.spectral_gap * T::from_count(t))
}

/// Bound on `‖E z(t) − Û_n 1‖` for U2. Requires `t ≥ 1`.
pub fn bound_u2_expectation<T: Scalar>(net: &NetworkConstants<T>, km: &KernelMatrix<T>, t: usize) -> T {
    let r = net.gap_ratio();
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let lead = net.edges() / (T::from_count(t) * net.spectral_gap);
    lead * ((three - r) / (two - r) * km.centered_frobenius() + km.partial_spread())
}

/// Per-step sample statistics over independent seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo<T> {
    pub n_runs: usize,
    pub mean: Vec<T>,
    /// Sample standard deviation (`n − 1` denominator; zero for a single run).
    pub std: Vec<T>,
    pub stderr: Vec<T>,
}

/// Runs `run(base_seed + r)` for `r in 0..n_runs` in parallel. Each run returns one
/// value per recorded step; results are reduced in run order, so the output does
/// not depend on scheduling.
pub fn monte_carlo<T, F>(n_runs: usize, base_seed: u64, run: F) -> Result<MonteCarlo<T>>
where
    T: Scalar,
    F: Fn(u64) -> Result<Vec<T>> + Sync,
{
    if n_runs == 0 {
        return param("monte_carlo needs at least one run");
    }
    let runs: Vec<Vec<T>> =
        (0..n_runs).into_par_iter().map(|r| run(base_seed.wrapping_add(r as u64))).collect::<Result<_>>()?;
    summarize(&runs)
}

/// Column-wise mean, sample std and standard error of equally long rows.
pub fn summarize<T: Scalar>(runs: &[Vec<T>]) -> Result<MonteCarlo<T>> {
    let Some(first) = runs.first() else {
        return param("nothing to summarize");
    };
    let len = first.len();
    if let Some(bad) = runs.iter().position(|r| r.len() != len) {
        return Err(Error::Shape(format!("run {bad} returned {} values, expected {len}", runs[bad].len())));
    }
    let count = T::from_count(runs.len());
    let mut mean = vec![T::zero(); len];
    for r in runs {
        mean.iter_mut().zip(r).for_each(|(m, &v)| *m = *m + v);
    }
    mean.iter_mut().for_each(|m| *m = *m / count);
    let mut std = vec![T::zero(); len];
    if runs.len() > 1 {
        for r in runs {
            std.iter_mut().zip(r).zip(&mean).for_each(|((s, &v), &m)| *s = *s + (v - m) * (v - m));
        }
        let denom = count - T::one();
        std.iter_mut().for_each(|s| *s = (*s / denom).sqrt());
    }
    let root = count.sqrt();
    let stderr = std.iter().map(|&s| s / root).collect();
    Ok(MonteCarlo { n_runs: runs.len(), mean, std, stderr })
}
