//! Optimization-side bounds: the rate decompositions, mixing time, the
//! `a/√t` corollary rate, the lower bound and its hard instance.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dualavg::StepSchedule;
use crate::error::{param, precondition, Result};
use crate::graph::{Graph, NetworkConstants};
use crate::scalar::Scalar;

/// `c(𝒢) = (λ/|E|)(1 − λ/(2|E|))`
pub fn c_of_graph<T: Scalar>(net: &NetworkConstants<T>) -> T {
    let r = net.gap_ratio();
    r * (T::one() - r / T::lit(2.0))
}

/// `τ(ε) = max(0, log(√n/ε) / |log c(𝒢)|)`
pub fn mixing_time<T: Scalar>(net: &NetworkConstants<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return param(format!("epsilon must be positive, got {eps}"));
    }
    let c = c_of_graph(net);
    let tau = (T::from_count(net.n).sqrt() / eps).ln() / c.ln().abs();
    Ok(tau.max(T::zero()))
}

/// `1 − √(1 − λ/|E|)`, the network factor shared by the `C_2` terms.
fn network_factor<T: Scalar>(net: &NetworkConstants<T>) -> T {
    T::one() - (T::one() - net.gap_ratio()).sqrt()
}

/// Inputs of the three-term rate decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RateInputs<T> {
    pub horizon: usize,
    pub schedule: StepSchedule<T>,
    pub lipschitz: T,
    /// `‖θ*‖`
    pub theta_star_norm: T,
    pub network: NetworkConstants<T>,
    /// Per-iteration values of `(ω̂(t) − θ*)ᵀ ε̂(t)` for `t = 1, 2, …`.
    pub bias_series: Option<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDecomposition<T> {
    pub c1: T,
    pub c2: T,
    /// Present when a bias series was supplied.
    pub c3: Option<T>,
}

impl<T: Scalar> RateDecomposition<T> {
    pub fn total(&self) -> T {
        self.c1 + self.c2 + self.c3.unwrap_or_else(T::zero)
    }
}

/// `C_1`, `C_2` and (with a bias series) `C_3` for the synchronous algorithm.
pub fn rate_bound_decomposition<T: Scalar>(input: &RateInputs<T>) -> Result<RateDecomposition<T>> {
    let t_cap = input.horizon;
    if t_cap < 2 {
        return param(format!("horizon must be >= 2, got {t_cap}"));
    }
    let tf = T::from_count(t_cap);
    let two = T::lit(2.0);
    let l2 = input.lipschitz * input.lipschitz;
    let gamma_sum = input.schedule.sum(1, t_cap - 1);
    let c1 = input.theta_star_norm * input.theta_star_norm / (two * tf * input.schedule.gamma_at(t_cap))
        + l2 / (two * tf) * gamma_sum;
    let c2 = T::lit(3.0) * l2 / (tf * network_factor(&input.network)) * gamma_sum;
    let c3 = match &input.bias_series {
        None => None,
        Some(series) if series.len() < t_cap - 1 => {
            return param(format!("bias series has {} values, need {}", series.len(), t_cap - 1));
        }
        Some(series) => Some(series[..t_cap - 1].iter().copied().sum::<T>() / tf),
    };
    Ok(RateDecomposition { c1, c2, c3 })
}

/// Terms of the ergodic bound with mixing time `τ(ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicBound<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub tau: T,
}

impl<T: Scalar> ErgodicBound<T> {
    pub fn total(&self) -> T {
        self.c1 + self.c2 + self.c3
    }
}

/// `C_1(T, ε) = D²/(2Tγ(T)) + (1 + 12τ)L²/(2T) Σ_{t≤T} γ(t)`, `C_2(T)` as above and
/// `C_3(T, ε) = 2LD(ε + τ/T)`, for a domain of radius `D`.
pub fn ergodic_bound<T: Scalar>(
    horizon: usize,
    schedule: &StepSchedule<T>,
    lipschitz: T,
    radius: T,
    net: &NetworkConstants<T>,
    eps: T,
) -> Result<ErgodicBound<T>> {
    if horizon < 2 {
        return param(format!("horizon must be >= 2, got {horizon}"));
    }
    let tau = mixing_time(net, eps)?;
    let tf = T::from_count(horizon);
    let two = T::lit(2.0);
    let l2 = lipschitz * lipschitz;
    let c1 = radius * radius / (two * tf * schedule.gamma_at(horizon))
        + (T::one() + T::lit(12.0) * tau) * l2 / (two * tf) * schedule.sum(1, horizon);
    let c2 = T::lit(3.0) * l2 / (tf * network_factor(net)) * schedule.sum(1, horizon - 1);
    let c3 = two * lipschitz * radius * (eps + tau / tf);
    Ok(ErgodicBound { c1, c2, c3, tau })
}

/// Rate for `γ(t) = a/√t`:
///
/// `(1/√T)[dist²/(2a) + aL² + 6aL²/(1 − √(1 − λ/|E|)) + 12aL² log T / |log c|]
///  + (2L·dist/T)(1 + |log c| log T)`
pub fn rate_bound_corollary<T: Scalar>(
    horizon: usize,
    a: T,
    net: &NetworkConstants<T>,
    lipschitz: T,
    dist0: T,
) -> Result<T> {
    if horizon < 1 {
        return param("horizon must be >= 1");
    }
    if !(a > T::zero()) {
        return param(format!("step scale a must be positive, got {a}"));
    }
    let tf = T::from_count(horizon);
    let log_t = tf.ln();
    let abs_log_c = c_of_graph(net).ln().abs();
    let l2 = lipschitz * lipschitz;
    let bracket = dist0 * dist0 / (T::lit(2.0) * a)
        + a * l2
        + T::lit(6.0) * a * l2 / network_factor(net)
        + T::lit(12.0) * a * l2 * log_t / abs_log_c;
    Ok(bracket / tf.sqrt() + T::lit(2.0) * lipschitz * dist0 / tf * (T::one() + abs_log_c * log_t))
}

/// Centralized (and stochastic) dual averaging bound
/// `‖θ*‖²/(2Tγ(T)) + (L²/2T) Σ_{t=1}^{T−1} γ(t)`.
pub fn centralized_da_bound<T: Scalar>(
    horizon: usize,
    schedule: &StepSchedule<T>,
    lipschitz: T,
    theta_star_norm: T,
) -> T {
    let tf = T::from_count(horizon);
    let two = T::lit(2.0);
    theta_star_norm * theta_star_norm / (two * tf * schedule.gamma_at(horizon))
        + lipschitz * lipschitz / (two * tf) * schedule.sum(1, horizon.saturating_sub(1))
}

fn check_lower_bound_graph(g: &Graph) -> Result<()> {
    if g.node_count() <= 2 {
        return param(format!("lower bound needs n > 2, got n = {}", g.node_count()));
    }
    if !g.is_connected() {
        return precondition("lower bound needs a connected graph");
    }
    Ok(())
}

/// `Δ̃ = (1/(n−2)) Σ_{k∉{i,j}} d(i,k) + d(k,j)`
pub fn delta_tilde<T: Scalar>(g: &Graph, i: usize, j: usize) -> Result<T> {
    check_lower_bound_graph(g)?;
    let n = g.node_count();
    if i >= n || j >= n || i == j {
        return param(format!("need two distinct nodes below {n}, got ({i}, {j})"));
    }
    let d = g.distances();
    let total: usize = (0..n).filter(|&k| k != i && k != j).map(|k| d.get(i, k) + d.get(k, j)).sum();
    Ok(T::from_count(total) / T::from_count(n - 2))
}

/// Lexicographically smallest pair `(i, j)`, `i < j`, at maximum distance.
pub fn worst_pair(g: &Graph) -> Result<(usize, usize)> {
    check_lower_bound_graph(g)?;
    let d = g.distances();
    let n = g.node_count();
    let mut best = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            if d.get(i, j) > d.get(best.0, best.1) {
                best = (i, j);
            }
        }
    }
    Ok(best)
}

/// `(RL/36) √(1/(1 + t/Δ̃)² + 1/(1 + t))`
pub fn lower_bound<T: Scalar>(radius: T, lipschitz: T, t: T, delta_tilde: T) -> T {
    let a = T::one() + t / delta_tilde;
    radius * lipschitz / T::lit(36.0) * (T::one() / (a * a) + T::one() / (T::one() + t)).sqrt()
}

/// Parameters `(α, β, γ, δ)` of the hard instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardParams<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

/// Pairwise functions `f_uv` whose network average is hard for any synchronous
/// first-order procedure. Coordinates are 0-based in storage; the formulas below
/// use 1-based `θ_1, …, θ_{2k+1}`:
///
/// * every pair contributes `(α/2)‖θ‖²`;
/// * `(i0, i0)` adds `−nβ θ_1`, `(i1, i1)` adds `nδ θ_{2k+1}`;
/// * `(i0, j0_r)` adds `nγ |θ_{2r+1} − θ_{2r}|`, `(i1, j1_r)` adds `nγ |θ_{2r} − θ_{2r−1}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance<T> {
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub i0: usize,
    pub i1: usize,
    pub j0: Vec<usize>,
    pub j1: Vec<usize>,
    pub params: HardParams<T>,
    /// `Δ̃` for `(i0, i1)`.
    pub delta_tilde: T,
    /// Average effective communication length through the intermediaries.
    pub effective_length: T,
    pub distance: usize,
}

/// Builds the hard instance on `g` for the worst pair, with `2k` distinct
/// intermediaries sampled without replacement (deterministic in `seed`).
pub fn hard_instance<T: Scalar>(
    g: &Graph,
    k: usize,
    dim: usize,
    params: HardParams<T>,
    seed: u64,
) -> Result<HardInstance<T>> {
    let n = g.node_count();
    if k == 0 {
        return param("hard instance needs k >= 1");
    }
    if n < 2 * k + 2 {
        return param(format!("hard instance with k = {k} needs n >= {}, got {n}", 2 * k + 2));
    }
    if dim < 2 * k + 1 {
        return param(format!("hard instance with k = {k} needs dimension >= {}, got {dim}", 2 * k + 1));
    }
    let (i0, i1) = worst_pair(g)?;
    let others: Vec<usize> = (0..n).filter(|&v| v != i0 && v != i1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<usize> = sample(&mut rng, others.len(), 2 * k).into_iter().map(|p| others[p]).collect();
    let (j0, j1) = (picked[..k].to_vec(), picked[k..].to_vec());
    let d = g.distances();
    let total: usize = (0..k).map(|r| d.get(i0, j0[r]) + d.get(j0[r], i1) + d.get(i1, j1[r]) + d.get(j1[r], i0)).sum();
    Ok(HardInstance {
        n,
        dim,
        k,
        i0,
        i1,
        j0,
        j1,
        params,
        delta_tilde: delta_tilde(g, i0, i1)?,
        effective_length: T::from_count(total) / T::from_count(2 * k),
        distance: d.get(i0, i1),
    })
}

/// Subgradient of `|u|` with the selection `0` at `u = 0`.
fn sign<T: Scalar>(u: T) -> T {
    if u > T::zero() {
        T::one()
    } else if u < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> HardInstance<T> {
    /// 0-based coordinates `(a, b)` of the chain term `|θ_a − θ_b|` carried by `f_uv`, if any.
    fn chain(&self, u: usize, v: usize) -> Option<(usize, usize)> {
        if u == self.i0 {
            if let Some(r) = self.j0.iter().position(|&j| j == v) {
                let r = r + 1;
                return Some((2 * r, 2 * r - 1));
            }
        }
        if u == self.i1 {
            if let Some(r) = self.j1.iter().position(|&j| j == v) {
                let r = r + 1;
                return Some((2 * r - 1, 2 * r - 2));
            }
        }
        None
    }

    fn check_dim(&self, theta: &[T]) {
        assert_eq!(theta.len(), self.dim, "θ has the wrong dimension");
    }

    pub fn f_uv(&self, u: usize, v: usize, theta: &[T]) -> T {
        self.check_dim(theta);
        let p = &self.params;
        let nf = T::from_count(self.n);
        let sq: T = theta.iter().map(|&x| x * x).sum();
        let mut value = p.alpha / T::lit(2.0) * sq;
        if u == v && u == self.i0 {
            value = value - nf * p.beta * theta[0];
        }
        if u == v && u == self.i1 {
            value = value + nf * p.delta * theta[2 * self.k];
        }
        if let Some((a, b)) = self.chain(u, v) {
            value = value + nf * p.gamma * (theta[a] - theta[b]).abs();
        }
        value
    }

    pub fn subgradient_uv(&self, u: usize, v: usize, theta: &[T]) -> Vec<T> {
        self.check_dim(theta);
        let p = &self.params;
        let nf = T::from_count(self.n);
        let mut g: Vec<T> = theta.iter().map(|&x| p.alpha * x).collect();
        if u == v && u == self.i0 {
            g[0] = g[0] - nf * p.beta;
        }
        if u == v && u == self.i1 {
            g[2 * self.k] = g[2 * self.k] + nf * p.delta;
        }
        if let Some((a, b)) = self.chain(u, v) {
            let s = nf * p.gamma * sign(theta[a] - theta[b]);
            g[a] = g[a] + s;
            g[b] = g[b] - s;
        }
        g
    }

    /// `F(θ) = (1/n²) Σ_{u,v} f_uv(θ)`, evaluated in closed form.
    pub fn risk(&self, theta: &[T]) -> T {
        self.check_dim(theta);
        let p = &self.params;
        let nf = T::from_count(self.n);
        let sq: T = theta.iter().map(|&x| x * x).sum();
        let mut chains = T::zero();
        for r in 1..=self.k {
            chains = chains + (theta[2 * r] - theta[2 * r - 1]).abs() + (theta[2 * r - 1] - theta[2 * r - 2]).abs();
        }
        p.alpha / T::lit(2.0) * sq + (-p.beta * theta[0] + p.delta * theta[2 * self.k] + p.gamma * chains) / nf
    }

    /// Restriction on `t` printed with the lower bound, echoed for reports.
    pub fn time_restriction_note(&self) -> String {
        format!("bound stated for t < (d - 2) min{{Δ̄, 1}} with d = {}", self.dim)
    }
}

impl<T: Scalar> std::fmt::Display for HardInstance<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "hard instance: n={} k={} i0={} i1={} d(i0,i1)={} Δ̃={} effective length={}",
            self.n, self.k, self.i0, self.i1, self.distance, self.delta_tilde, self.effective_length
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, spectrum, Topology};
    use approx::assert_relative_eq;

    fn net(t: &str) -> NetworkConstants<f64> {
        spectrum::<f64>(&generate(&t.parse().unwrap()).unwrap()).unwrap().constants()
    }

    #[test]
    fn c_and_tau_on_k3() {
        let k3 = net("complete:3");
        assert_relative_eq!(c_of_graph(&k3), 0.5, epsilon = 1e-12);
        assert_relative_eq!(mixing_time(&k3, 3f64.sqrt()).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(mixing_time(&k3, 3f64.sqrt() / 2.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(mixing_time(&k3, 0.0).is_err());
    }

    #[test]
    fn c1_example() {
        let input = RateInputs {
            horizon: 4,
            schedule: StepSchedule::inverse_sqrt(1.0).unwrap(),
            lipschitz: 1.0,
            theta_star_norm: 1.0,
            network: net("complete:3"),
            bias_series: Some(vec![0.0; 3]),
        };
        let d = rate_bound_decomposition(&input).unwrap();
        let expected = 0.25 + (1.0 + 0.5f64.sqrt() + (1.0f64 / 3.0).sqrt()) / 8.0;
        assert_relative_eq!(d.c1, expected, epsilon = 1e-12);
        assert_eq!(d.c3, Some(0.0));
        let short = RateInputs { bias_series: Some(vec![0.0; 2]), ..input };
        assert!(rate_bound_decomposition(&short).is_err());
    }

    #[test]
    fn c2_decreases_with_gap() {
        let base = net("cycle:7");
        let doubled = NetworkConstants { spectral_gap: 2.0 * base.spectral_gap, ..base };
        let mk = |network| RateInputs {
            horizon: 50,
            schedule: StepSchedule::inverse_sqrt(1.0).unwrap(),
            lipschitz: 1.0,
            theta_star_norm: 1.0,
            network,
            bias_series: None,
        };
        let a = rate_bound_decomposition(&mk(base)).unwrap().c2;
        let b = rate_bound_decomposition(&mk(doubled)).unwrap().c2;
        assert!(b < a);
    }

    #[test]
    fn corollary_at_one_step() {
        let k20 = net("complete:20");
        let r = k20.gap_ratio();
        let expected = 0.5 + 1.0 + 6.0 / (1.0 - (1.0 - r).sqrt()) + 2.0;
        assert_relative_eq!(rate_bound_corollary(1, 1.0, &k20, 1.0, 1.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn lower_bound_examples() {
        let p3 = generate(&Topology::Path { n: 3 }).unwrap();
        assert_eq!(delta_tilde::<f64>(&p3, 0, 2).unwrap(), 2.0);
        assert_eq!(lower_bound(1.0, 36.0, 0.0, 1.0), 2f64.sqrt());
        assert!(delta_tilde::<f64>(&generate(&Topology::Path { n: 2 }).unwrap(), 0, 1).is_err());
        assert_eq!(worst_pair(&p3).unwrap(), (0, 2));
    }

    #[test]
    fn hard_instance_vanishes_at_origin() {
        let g = generate(&Topology::Cycle { n: 9 }).unwrap();
        let params = HardParams { alpha: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0 };
        let h = hard_instance(&g, 2, 6, params, 5).unwrap();
        assert_eq!(h.risk(&[0.0; 6]), 0.0);
        let mut ids = vec![h.i0, h.i1];
        ids.extend(&h.j0);
        ids.extend(&h.j1);
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 6);
        assert!(h.delta_tilde >= h.distance as f64);
        assert!(hard_instance(&g, 4, 9, params, 5).is_err());
        assert!(hard_instance(&g, 2, 4, params, 5).is_err());
    }
}
