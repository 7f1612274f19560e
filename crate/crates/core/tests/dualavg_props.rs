mod common;

use common::{max_abs_diff, random_points};
use pairgossip::bounds::centralized_da_bound;
use pairgossip::dualavg::{
    bias_term, centralized_da, distributed_da, full_gradient, gossip_async, gossip_sync, partial_gradient, project,
    project_at, risk, stochastic_da, DaConfig, PairwiseObjective, ProjectionSpec, StepSchedule, SyncVariant,
};
use pairgossip::estimation::monte_carlo;
use pairgossip::graph::{generate, transition, Topology};
use pairgossip::linalg::Matrix;
use pairgossip::losses::{AucLogistic, QuadraticToy, ZeroObjective};
use pairgossip::pairwise::{Dataset, Observation};
use pairgossip::rng::{Draws, ScriptedDraws, SeededDraws};
use pairgossip::scalar::norm;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f(θ; x, y) = θᵀy`, whose gradient is the partner observation itself.
struct Linear {
    dim: usize,
}

impl PairwiseObjective<f64> for Linear {
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64], _: Observation<'_, f64>, y: Observation<'_, f64>) -> f64 {
        theta.iter().zip(y.point).map(|(a, b)| a * b).sum()
    }
    fn add_grad(&self, _: &[f64], _: Observation<'_, f64>, y: Observation<'_, f64>, w: f64, out: &mut [f64]) {
        out.iter_mut().zip(y.point).for_each(|(o, &v)| *o += w * v);
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn name(&self) -> &'static str {
        "linear"
    }
}

fn toy() -> Dataset<f64> {
    Dataset::new(vec![vec![1.0], vec![0.0], vec![2.0]], Some(vec![1.0, -1.0, 1.0])).unwrap()
}

fn sched(a: f64) -> StepSchedule<f64> {
    StepSchedule::inverse_sqrt(a).unwrap()
}

fn labeled(n: usize, dim: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = random_points(n, dim, &mut rng);
    let labels = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Dataset::new(points, Some(labels)).unwrap()
}

#[test]
fn hand_trace_of_one_synchronous_step() {
    let data = toy();
    let g = generate(&Topology::Complete { n: 3 }).unwrap();
    assert_eq!(g.edge(0), (0, 1));
    let obj = AucLogistic::new(&data).unwrap();
    let cfg = DaConfig::new(sched(0.7), ProjectionSpec::None, 1);
    let mut draws = ScriptedDraws::new([0]);
    let s = gossip_sync(&g, &obj, &data, &cfg, SyncVariant::Gossip, false, &mut draws, |_| Ok(())).unwrap();
    assert_eq!(s.aux, vec![1, 0, 2]);
    let z: Vec<f64> = s.z.iter().map(|v| v[0]).collect();
    assert_eq!(z, vec![-0.5, 0.0, 0.0]);
    let gamma1 = cfg.schedule.gamma_at(1);
    assert!((s.theta[0][0] - 0.5 * gamma1).abs() < 1e-15);
    assert_eq!(s.theta[1][0], 0.0);
    assert_eq!(s.theta[2][0], 0.0);
    assert_eq!(s.theta_bar, s.theta);
}

#[test]
fn hand_computed_bias_at_the_origin() {
    // With every node holding its own point, ∇f(0; x_i, x_i) = 0 and the ordered
    // pairs (0,1) and (2,1) contribute ½(x_1 − x_0) = −½ and ½(x_1 − x_2) = −1,
    // so ε̂ = −(1/9)(−3/2) = 1/6.
    let data = toy();
    let obj = AucLogistic::new(&data).unwrap();
    let eps = bias_term(&obj, &data, &vec![vec![0.0]; 3], &[0, 1, 2]);
    assert!((eps[0] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn zero_objective_keeps_every_iterate_at_zero() {
    let data = labeled(5, 2, 1);
    let g = generate(&Topology::Cycle { n: 5 }).unwrap();
    let obj = ZeroObjective { dim: 2 };
    let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 200);
    for variant in [SyncVariant::Gossip, SyncVariant::UnbiasedBaseline] {
        let s = gossip_sync(&g, &obj, &data, &cfg, variant, true, &mut SeededDraws::new(2), |snap| {
            assert_eq!(snap.bias.unwrap().inner, 0.0);
            Ok(())
        })
        .unwrap();
        assert!(s.theta.iter().chain(&s.theta_bar).flatten().all(|&v| v == 0.0));
    }
    let s = gossip_async(&g, &obj, &data, &cfg, &mut SeededDraws::new(2), |_| Ok(())).unwrap();
    assert!(s.theta.iter().chain(&s.theta_bar).flatten().all(|&v| v == 0.0));
}

#[test]
fn mixing_preserves_the_dual_sum() {
    // With gradient x_{aux_k}, the additions of one iteration sum to Σ_j x_j because
    // aux is a permutation, so ẑ before the additions of iteration t is (t − 1)·x̄
    // exactly when the averaging step preserves Σ z.
    let g = generate(&Topology::Cycle { n: 7 }).unwrap();
    let data = labeled(7, 3, 4);
    let xbar: Vec<f64> = (0..3).map(|c| data.points().iter().map(|p| p[c]).sum::<f64>() / 7.0).collect();
    let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 300);
    let mut checked = 0;
    gossip_sync(&g, &Linear { dim: 3 }, &data, &cfg, SyncVariant::Gossip, true, &mut SeededDraws::new(5), |snap| {
        let bias = snap.bias.unwrap();
        let expected: Vec<f64> = xbar.iter().map(|v| (snap.t - 1) as f64 * v).collect();
        assert!(max_abs_diff(&bias.zhat, &expected) <= 1e-12 * snap.t as f64);
        assert!(norm(&bias.eps_hat) <= 1e-12);
        checked += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(checked, 300);
}

fn check_lipschitz(psi: ProjectionSpec<f64>, dim: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let gamma = rng.random_range(0.01..2.0);
        let scale = rng.random_range(0.1..20.0);
        let z1: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let z2: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let p1 = project_at(&z1, gamma, &psi).unwrap();
        let p2 = project_at(&z2, gamma, &psi).unwrap();
        let lhs = norm(&p1.iter().zip(&p2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rhs = gamma * norm(&z1.iter().zip(&z2).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(lhs <= rhs + 1e-10, "{psi}: {lhs} > {rhs}");
    }
}

#[test]
fn projections_are_gamma_lipschitz() {
    check_lipschitz(ProjectionSpec::None, 4, 1);
    check_lipschitz(ProjectionSpec::Ball(1.5), 4, 2);
    check_lipschitz(ProjectionSpec::PsdCone(3), 9, 3);
}

proptest! {
    #[test]
    fn psd_projection_is_idempotent(entries in prop::collection::vec(-5.0f64..5.0, 9)) {
        let psi = ProjectionSpec::PsdCone(3);
        let once = project_at(&entries, 1.0, &psi).unwrap();
        let twice = project_at(&once, 1.0, &psi).unwrap();
        prop_assert!(max_abs_diff(&once, &twice) < 1e-10);
        let m = Matrix::from_vec(3, 3, once).unwrap();
        prop_assert!(m.is_symmetric(1e-12));
        for l in m.symmetric_eigenvalues().unwrap() {
            prop_assert!(l >= -1e-10);
        }
    }

    #[test]
    fn step_sizes_are_positive_and_nonincreasing(a in 0.001f64..10.0, alpha in -0.99f64..-0.01) {
        let s = StepSchedule::new(a, alpha).unwrap();
        for t in 1..200 {
            prop_assert!(s.gamma_at(t) > 0.0);
            prop_assert!(s.gamma_at(t + 1) <= s.gamma_at(t));
        }
    }
}

#[test]
fn one_centralized_step_and_inactive_ball() {
    let data = labeled(6, 2, 9);
    let obj = AucLogistic::new(&data).unwrap();
    let s = sched(0.3);
    let one = centralized_da(&obj, &data, &DaConfig::new(s, ProjectionSpec::None, 1)).unwrap();
    let g0: Vec<f64> = full_gradient(&obj, &data, &[0.0, 0.0]).iter().map(|v| -v).collect();
    assert_eq!(one.theta, project(&g0, 1, &s, &ProjectionSpec::None).unwrap());

    let free = centralized_da(&obj, &data, &DaConfig::new(s, ProjectionSpec::None, 300)).unwrap();
    let ball = centralized_da(&obj, &data, &DaConfig::new(s, ProjectionSpec::Ball(1e9), 300)).unwrap();
    assert!(max_abs_diff(&free.theta_bar, &ball.theta_bar) < 1e-12);
    for (a, b) in free.records.iter().zip(&ball.records) {
        assert!(max_abs_diff(&a.theta, &b.theta) < 1e-12);
    }
}

#[test]
fn safety_ball_hits_are_counted() {
    let data = labeled(6, 2, 9);
    let obj = AucLogistic::new(&data).unwrap();
    let cfg = DaConfig::new(sched(5.0), ProjectionSpec::None, 50).safety_radius(Some(1e-3));
    let run = centralized_da(&obj, &data, &cfg).unwrap();
    assert!(run.safety_hits > 0);
    assert!(norm(&run.theta) <= 1e-3 + 1e-15);
    let relaxed = centralized_da(&obj, &data, &cfg.safety_radius(Some(1e6))).unwrap();
    assert_eq!(relaxed.safety_hits, 0);
}

#[test]
fn centralized_quadratic_meets_its_bound_at_every_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = Dataset::new(
        random_points(8, 3, &mut rng).into_iter().map(|p| p.iter().map(|v| 3.0 * v).collect()).collect(),
        None,
    )
    .unwrap();
    let theta_star = QuadraticToy::minimizer(&data);
    let obj = QuadraticToy { dim: 3, lipschitz: 1.0 };
    let f_star = risk(&obj, &data, &theta_star);
    let s = sched(1.0);
    let run = centralized_da(&obj, &data, &DaConfig::new(s, ProjectionSpec::None, 1000)).unwrap();
    // Lipschitz constant over the iterates actually visited, starting at θ(1) = 0.
    let mut lipschitz = norm(&full_gradient(&obj, &data, &[0.0; 3]));
    for r in &run.records {
        lipschitz = lipschitz.max(norm(&full_gradient(&obj, &data, &r.theta)));
    }
    for r in &run.records {
        let gap = risk(&obj, &data, &r.theta_bar) - f_star;
        let bound = centralized_da_bound(r.t, &s, lipschitz, norm(&theta_star));
        assert!(gap <= bound, "T = {}: {gap} > {bound}", r.t);
    }
}

#[test]
fn stochastic_quadratic_meets_its_bound_in_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let data = Dataset::new(random_points(8, 3, &mut rng), None).unwrap();
    let theta_star = QuadraticToy::minimizer(&data);
    let obj = QuadraticToy { dim: 3, lipschitz: 1.0 };
    let f_star = risk(&obj, &data, &theta_star);
    let s = sched(0.5);
    let horizon = 400;
    let max_point = data.points().iter().map(|p| norm(p)).fold(0.0, f64::max);
    let runs = monte_carlo(200, 1000, |seed| {
        let run =
            stochastic_da(&obj, &data, &DaConfig::new(s, ProjectionSpec::None, horizon), &mut SeededDraws::new(seed))?;
        let radius = run.records.iter().map(|r| norm(&r.theta)).fold(0.0, f64::max);
        Ok(vec![risk(&obj, &data, &run.theta_bar) - f_star, radius])
    })
    .unwrap();
    // ‖∇f(θ; x, x')‖ ≤ ‖θ‖ + max‖x‖ over the visited iterates.
    let radius = runs.mean[1] + 6.0 * runs.std[1];
    let lipschitz = radius + max_point;
    let bound = centralized_da_bound(horizon, &s, lipschitz, norm(&theta_star));
    assert!(runs.mean[0] <= bound + 3.0 * runs.stderr[0], "{} > {bound}", runs.mean[0]);
}

#[test]
fn stochastic_gradient_is_unbiased() {
    let data = labeled(9, 3, 12);
    let obj = AucLogistic::new(&data).unwrap();
    let theta = [0.4, -1.2, 0.7];
    let exact = full_gradient(&obj, &data, &theta);
    let mut draws = SeededDraws::new(77);
    let m = 100_000;
    let (mut sum, mut sq) = (vec![0.0; 3], vec![0.0; 3]);
    for _ in 0..m {
        let (i, j) = (draws.node(9), draws.node(9));
        let g = obj.grad(&theta, data.observation(i), data.observation(j));
        for c in 0..3 {
            sum[c] += g[c];
            sq[c] += g[c] * g[c];
        }
    }
    for c in 0..3 {
        let mean = sum[c] / m as f64;
        let stderr = ((sq[c] / m as f64 - mean * mean) / (m - 1) as f64).sqrt();
        assert!((mean - exact[c]).abs() <= 4.0 * stderr, "coordinate {c}");
    }
}

#[test]
fn baseline_partner_draw_is_unbiased() {
    let data = labeled(9, 3, 13);
    let obj = AucLogistic::new(&data).unwrap();
    let theta = [-0.3, 0.8, 0.1];
    let mut draws = SeededDraws::new(78);
    for k in [0, 4] {
        let exact = partial_gradient(&obj, &data, k, &theta);
        let m = 100_000;
        let (mut sum, mut sq) = (vec![0.0; 3], vec![0.0; 3]);
        for _ in 0..m {
            let g = obj.grad(&theta, data.observation(k), data.observation(draws.node(9)));
            for c in 0..3 {
                sum[c] += g[c];
                sq[c] += g[c] * g[c];
            }
        }
        for c in 0..3 {
            let mean = sum[c] / m as f64;
            let stderr = ((sq[c] / m as f64 - mean * mean) / (m - 1) as f64).sqrt();
            assert!((mean - exact[c]).abs() <= 4.0 * stderr.max(1e-15), "node {k} coordinate {c}");
        }
    }
}

#[test]
fn single_point_degenerate_cases() {
    let data = Dataset::new(vec![vec![0.5, -1.0]], None).unwrap();
    let obj = QuadraticToy { dim: 2, lipschitz: 1.0 };
    let cfg = DaConfig::new(sched(0.5), ProjectionSpec::None, 50);
    let central = centralized_da(&obj, &data, &cfg).unwrap();
    let stochastic = stochastic_da(&obj, &data, &cfg, &mut SeededDraws::new(1)).unwrap();
    assert_eq!(central, stochastic);
    assert_eq!(bias_term(&obj, &data, &[vec![0.3, 0.3]], &[0]), vec![0.0, 0.0]);
}

#[test]
fn one_async_event_on_a_triangle() {
    let data = toy();
    let g = generate(&Topology::Complete { n: 3 }).unwrap();
    let obj = AucLogistic::new(&data).unwrap();
    let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 1);
    let s = gossip_async(&g, &obj, &data, &cfg, &mut ScriptedDraws::new([0]), |_| Ok(())).unwrap();
    assert_eq!(s.clock, vec![1.5, 1.5, 0.0]);
    // Node 0 pairs with x_1 and gets (3/2)·(−½); node 1 has no ordered pair.
    assert_eq!(s.z[0], vec![-0.75]);
    assert_eq!(s.z[1], vec![0.0]);
    assert!((s.theta[0][0] - 0.75 * cfg.schedule.gamma(1.5)).abs() < 1e-15);
    assert_eq!(s.theta_bar[0], s.theta[0]);
    assert_eq!(s.theta[2], vec![0.0]);
}

#[test]
fn async_clocks_are_unbiased() {
    for topo in [Topology::Complete { n: 3 }, Topology::Cycle { n: 5 }] {
        let g = generate(&topo).unwrap();
        let n = g.node_count();
        let data = Dataset::new(vec![vec![0.0]; n], Some(vec![0.0; n])).unwrap();
        let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, 30);
        let mc = monte_carlo(10_000, 500, |seed| {
            let s = gossip_async(&g, &ZeroObjective { dim: 1 }, &data, &cfg, &mut SeededDraws::new(seed), |_| Ok(()))?;
            Ok(s.clock)
        })
        .unwrap();
        for k in 0..n {
            assert!((mc.mean[k] - 30.0).abs() <= 4.0 * mc.stderr[k], "{topo} node {k}: {}", mc.mean[k]);
        }
    }
}

#[test]
fn distributed_da_reaches_the_consensus_minimizer() {
    let g = generate(&Topology::Cycle { n: 6 }).unwrap();
    let w = transition(&g, 2.0).unwrap().w;
    let centers: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0 - i as f64]).collect();
    let target = [2.5, -1.5];
    let spread = |iterations: usize| {
        let cfg = DaConfig::new(sched(1.0), ProjectionSpec::None, iterations);
        let states =
            distributed_da(&w, 2, &cfg, |i, theta| theta.iter().zip(&centers[i]).map(|(t, c)| t - c).collect())
                .unwrap();
        let worst = states.theta_bar.iter().map(|tb| max_abs_diff(tb, &target)).fold(0.0, f64::max);
        (max_abs_diff(&states.mean_theta_bar(), &target), worst)
    };
    let (mean_short, worst_short) = spread(2_000);
    let (mean_long, worst_long) = spread(20_000);
    assert!(mean_long < 0.05 && mean_long < mean_short, "{mean_short} -> {mean_long}");
    assert!(worst_long < worst_short, "{worst_short} -> {worst_long}");
}
