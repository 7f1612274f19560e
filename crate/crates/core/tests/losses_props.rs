mod common;

use common::{alternating_labels, random_points};
use pairgossip::dualavg::{risk, PairwiseObjective};
use pairgossip::error::Error;
use pairgossip::losses::{
    auc, cluster_scatter, grad_check, AucLogistic, GradCheck, HingeConvention, MetricHinge, QuadraticToy,
    RankingLogistic, ZeroObjective,
};
use pairgossip::pairwise::{Dataset, Dissimilarity};
use pairgossip::scalar::norm;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labeled(n: usize, dim: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new(random_points(n, dim, &mut rng), Some(alternating_labels(n))).unwrap()
}

fn random_vec(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

/// `A Aᵀ` for a random `d × d` matrix `A`, flattened row-major.
fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = random_vec(d * d, 1.0, rng);
    (0..d * d)
        .map(|rc| {
            let (r, c) = (rc / d, rc % d);
            (0..d).map(|k| a[r * d + k] * a[c * d + k]).sum()
        })
        .collect()
}

#[test]
fn auc_risk_at_the_origin_on_the_toy() {
    let data = Dataset::new(vec![vec![1.0], vec![0.0], vec![2.0]], Some(vec![1.0, -1.0, 1.0])).unwrap();
    let obj = AucLogistic::new(&data).unwrap();
    assert!((risk(&obj, &data, &[0.0]) - 2.0 / 9.0 * 2f64.ln()).abs() < 1e-15);
    let g = obj.grad(&[0.0], data.observation(0), data.observation(1));
    assert_eq!(g, vec![-0.5]);
    assert_eq!(obj.grad(&[0.0], data.observation(1), data.observation(0)), vec![0.0]);
}

#[test]
fn auc_risk_is_convex_along_segments() {
    let data = labeled(10, 3, 21);
    let obj = AucLogistic::new(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let a = random_vec(3, 4.0, &mut rng);
        let b = random_vec(3, 4.0, &mut rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = risk(&obj, &data, &mid);
        let rhs = 0.5 * (risk(&obj, &data, &a) + risk(&obj, &data, &b));
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }
}

#[test]
fn auc_metric_examples() {
    let data =
        Dataset::new(vec![vec![3.0], vec![1.0], vec![2.0], vec![0.0]], Some(vec![1.0, -1.0, 1.0, -1.0])).unwrap();
    assert_eq!(auc(&data, &[1.0]).unwrap(), 1.0);
    assert_eq!(auc(&data, &[-1.0]).unwrap(), 0.0);
    // all scores tie
    assert_eq!(auc(&data, &[0.0]).unwrap(), 0.0);
    let single = Dataset::new(vec![vec![1.0], vec![2.0]], Some(vec![1.0, 1.0])).unwrap();
    assert!(matches!(auc(&single, &[1.0]), Err(Error::Data(_))));
}

proptest! {
    #[test]
    fn auc_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let data = labeled(12, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let theta = random_vec(3, 1.0, &mut rng);
        let scaled: Vec<f64> = theta.iter().map(|v| c * v).collect();
        prop_assert_eq!(auc(&data, &theta).unwrap(), auc(&data, &scaled).unwrap());
    }

    #[test]
    fn auc_loss_is_nonnegative_and_vanishes_off_order(seed in any::<u64>()) {
        let data = labeled(6, 2, seed);
        let obj = AucLogistic::new(&data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let theta = random_vec(2, 5.0, &mut rng);
        for i in 0..6 {
            for j in 0..6 {
                let f = obj.value(&theta, data.observation(i), data.observation(j));
                prop_assert!(f >= 0.0);
                if data.label(i) <= data.label(j) {
                    prop_assert_eq!(f, 0.0);
                }
            }
        }
    }

    #[test]
    fn declared_lipschitz_constants_dominate_gradients(seed in any::<u64>()) {
        let data = labeled(8, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let auc_obj = AucLogistic::new(&data).unwrap();
        let ranking = RankingLogistic::new(&data).unwrap();
        let metric = MetricHinge::new(&data, 1.0, HingeConvention::OneMinus).unwrap();
        let plus = MetricHinge::new(&data, 1.0, HingeConvention::Plus).unwrap();
        for _ in 0..20 {
            let theta = random_vec(3, 10.0, &mut rng);
            let m = random_psd(3, &mut rng);
            for i in 0..8 {
                for j in 0..8 {
                    let (x, y) = (data.observation(i), data.observation(j));
                    prop_assert!(norm(&auc_obj.grad(&theta, x, y)) <= auc_obj.lipschitz() + 1e-12);
                    prop_assert!(norm(&ranking.grad(&theta, x, y)) <= ranking.lipschitz() + 1e-12);
                    prop_assert!(norm(&metric.grad(&m, x, y)) <= metric.lipschitz() + 1e-12);
                    prop_assert!(norm(&plus.grad(&m, x, y)) <= plus.lipschitz() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn metric_loss_is_nonnegative_and_zero_distance_on_the_diagonal(seed in any::<u64>()) {
        let data = labeled(5, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let theta = random_psd(2, &mut rng);
        for hinge in [HingeConvention::OneMinus, HingeConvention::Plus] {
            let obj = MetricHinge::new(&data, 0.7, hinge).unwrap();
            for i in 0..5 {
                prop_assert_eq!(pairgossip::pairwise::mahalanobis(&theta, data.point(i), data.point(i)), 0.0);
                for j in 0..5 {
                    prop_assert!(obj.value(&theta, data.observation(i), data.observation(j)) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn cluster_scatter_is_nonnegative(seed in any::<u64>(), cells in prop::collection::vec(0usize..3, 7)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Dataset::new(random_points(7, 2, &mut rng), None).unwrap();
        for dis in [Dissimilarity::SquaredEuclidean, Dissimilarity::Euclidean, Dissimilarity::Manhattan] {
            prop_assert!(cluster_scatter(&data, &cells, dis).unwrap() >= 0.0);
        }
    }
}

#[test]
fn metric_risk_at_zero_depends_only_on_labels_and_margin() {
    let data = labeled(7, 3, 5);
    let labels = alternating_labels(7);
    for (b, hinge) in [(0.5, HingeConvention::OneMinus), (2.0, HingeConvention::OneMinus), (0.5, HingeConvention::Plus)]
    {
        let obj = MetricHinge::new(&data, b, hinge).unwrap();
        let mut expected = 0.0;
        for &li in &labels {
            for &lj in &labels {
                let u = li * lj * b;
                expected += match hinge {
                    HingeConvention::OneMinus => (1.0 - u).max(0.0),
                    HingeConvention::Plus => u.max(0.0),
                };
            }
        }
        expected /= 49.0;
        assert!((risk(&obj, &data, &[0.0; 9]) - expected).abs() < 1e-15);
    }
}

#[test]
fn gradients_match_central_differences() {
    let data = labeled(6, 3, 40);
    let real = data.with_labels((0..6).map(|i| i as f64 * 0.3).collect()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let h = 1e-5;
    let auc_obj = AucLogistic::new(&data).unwrap();
    let ranking = RankingLogistic::new(&real).unwrap();
    let quad = QuadraticToy { dim: 3, lipschitz: 1.0 };
    for _ in 0..50 {
        let theta = random_vec(3, 2.0, &mut rng);
        for i in 0..6 {
            for j in 0..6 {
                for (name, obj, d) in [
                    ("auc", &auc_obj as &dyn PairwiseObjective<f64>, &data),
                    ("ranking", &ranking, &real),
                    ("quadratic", &quad, &data),
                ] {
                    let check = grad_check(obj, &theta, d.observation(i), d.observation(j), h);
                    assert!(matches!(check, GradCheck::Checked { .. }), "{name}");
                    assert!(check.passes(1e-5), "{name}: {check:?}");
                }
            }
        }
    }
    let zero = grad_check(&ZeroObjective { dim: 3 }, &[1.0, 2.0, 3.0], data.observation(0), data.observation(1), h);
    assert_eq!(zero, GradCheck::Checked { max_rel_error: 0.0 });
}

#[test]
fn hinge_gradients_match_off_the_kink() {
    let data = labeled(6, 3, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let h = 1e-6;
    for hinge in [HingeConvention::OneMinus, HingeConvention::Plus] {
        let obj = MetricHinge::new(&data, 1.0, hinge).unwrap();
        let (mut checked, mut skipped) = (0, 0);
        for _ in 0..50 {
            let theta = random_psd(3, &mut rng);
            for i in 0..6 {
                for j in 0..6 {
                    match grad_check(&obj, &theta, data.observation(i), data.observation(j), h) {
                        GradCheck::Checked { max_rel_error } => {
                            assert!(max_rel_error < 1e-4, "{hinge}: {max_rel_error}");
                            checked += 1;
                        }
                        GradCheck::SkippedNearKink { gap } => {
                            assert!(gap <= 10.0 * h);
                            skipped += 1;
                        }
                    }
                }
            }
        }
        assert!(checked > 10 * skipped, "{hinge}: {checked} checked, {skipped} skipped");
    }
}
