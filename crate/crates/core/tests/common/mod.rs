#![allow(dead_code)]

use pairgossip::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi graph with edge probability `p`, redrawn until connected.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pairs: Vec<_> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|_| rng.random::<f64>() < p).collect();
        let g = Graph::from_edges(n, pairs).expect("valid edge list");
        if g.is_connected() {
            return g;
        }
    }
}

/// Connected, non-bipartite and non-complete random graph; needs `n >= 4`.
pub fn random_gossip_graph(n: usize, p: f64, seed: u64) -> Graph {
    assert!(n >= 4, "no connected, non-bipartite, non-complete graph on {n} nodes");
    (0..)
        .map(|s| random_connected(n, p, seed.wrapping_mul(1_000).wrapping_add(s)))
        .find(|g| !g.is_bipartite() && !g.is_complete())
        .expect("endless search")
}

/// Random points in `[-1, 1]^d`.
pub fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Alternating `±1` labels starting with `+1`.
pub fn alternating_labels(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
