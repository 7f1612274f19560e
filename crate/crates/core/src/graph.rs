//! Communication graphs: generation, connectivity and distance queries,
//! Laplacian spectrum, gossip transition matrices and the tensor product
//! with a complete graph.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, precondition, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u8>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs are normalised to `i < j` and
    /// sorted; self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return param("graph needs at least one node");
        }
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return param(format!("edge ({a}, {b}) out of range for n = {n}"));
            }
            if a == b {
                return param(format!("self-loop at node {a}"));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return param(format!("duplicate edge ({a}, {b})"));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![0u8; n * n];
        let mut degrees = vec![0usize; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a * n + b] = 1;
            adjacency[b * n + a] = 1;
            degrees[a] += 1;
            degrees[b] += 1;
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, edges, adjacency, degrees, neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j] == 1
    }

    pub fn adjacency<T: Scalar>(&self) -> Matrix<T> {
        Matrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { T::one() } else { T::zero() })
    }

    /// `L = D - A`
    pub fn laplacian<T: Scalar>(&self) -> Matrix<T> {
        Matrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                T::from_count(self.degrees[i])
            } else if self.has_edge(i, j) {
                -T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Two-colouring by BFS over every component.
    pub fn is_bipartite(&self) -> bool {
        let mut colour = vec![u8::MAX; self.n];
        for start in 0..self.n {
            if colour[start] != u8::MAX {
                continue;
            }
            colour[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if colour[v] == u8::MAX {
                        colour[v] = 1 - colour[u];
                        queue.push_back(v);
                    } else if colour[v] == colour[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Fails unless the graph is connected and non-bipartite, the standing
    /// assumption of every gossip protocol here.
    pub fn require_gossip_ready(&self) -> Result<()> {
        if self.n < 2 {
            return precondition("gossip needs at least two nodes");
        }
        if !self.is_connected() {
            return precondition("graph is not connected");
        }
        if self.is_bipartite() {
            return precondition("graph is bipartite");
        }
        Ok(())
    }

    fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances by repeated BFS.
    pub fn distances(&self) -> DistanceTable {
        let mut dist = Vec::with_capacity(self.n * self.n);
        for s in 0..self.n {
            dist.extend(self.bfs(s));
        }
        let diameter = dist.iter().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0);
        DistanceTable { n: self.n, dist, diameter }
    }
}

/// Sentinel for node pairs in different components.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<usize>,
    diameter: usize,
}

impl DistanceTable {
    /// Hop count, or [`UNREACHABLE`].
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.n + j]
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

/// Laplacian spectrum of a graph.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub laplacian: Matrix<T>,
    /// Ascending; `eigenvalues[0]` is (numerically) zero.
    pub eigenvalues: Vec<T>,
    /// Second smallest Laplacian eigenvalue.
    pub spectral_gap: T,
    pub edge_count: usize,
}

impl<T: Scalar> Spectrum<T> {
    /// Connectivity read off the spectrum: gap above `1e-9 * λ_max`.
    pub fn indicates_connected(&self) -> bool {
        let top = self.eigenvalues.last().copied().unwrap_or_else(T::zero);
        self.spectral_gap > T::lit(1e-9) * top
    }

    /// `λ_{n-1} / |E|`
    pub fn normalized_gap(&self) -> T {
        self.spectral_gap / T::from_count(self.edge_count)
    }

    pub fn constants(&self) -> NetworkConstants<T> {
        NetworkConstants { n: self.eigenvalues.len(), edge_count: self.edge_count, spectral_gap: self.spectral_gap }
    }
}

/// The three graph quantities every bound depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConstants<T> {
    pub n: usize,
    pub edge_count: usize,
    pub spectral_gap: T,
}

impl<T: Scalar> NetworkConstants<T> {
    pub fn edges(&self) -> T {
        T::from_count(self.edge_count)
    }

    /// `λ_{n-1} / |E|`
    pub fn gap_ratio(&self) -> T {
        self.spectral_gap / self.edges()
    }
}

pub fn spectrum<T: Scalar>(g: &Graph) -> Result<Spectrum<T>> {
    let laplacian: Matrix<T> = g.laplacian();
    let eigenvalues = laplacian.symmetric_eigenvalues()?;
    let spectral_gap = eigenvalues.get(1).copied().unwrap_or_else(T::zero);
    Ok(Spectrum { laplacian, eigenvalues, spectral_gap, edge_count: g.edge_count() })
}

/// Expected one-step gossip matrix `W_α = I - L / (α|E|)`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<T> {
    pub alpha: T,
    pub w: Matrix<T>,
    edge_count: usize,
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Eigenvalues of `W_α` in decreasing order, derived from the Laplacian
    /// spectrum as `1 - λ_{n-i+1} / (α|E|)`.
    pub fn eigenvalues_from(&self, spectrum: &Spectrum<T>) -> Vec<T> {
        let denom = self.alpha * T::from_count(self.edge_count);
        spectrum.eigenvalues.iter().map(|&l| T::one() - l / denom).collect()
    }

    /// Second largest eigenvalue `λ_2(α) = 1 - λ_{n-1} / (α|E|)`.
    pub fn second_eigenvalue(&self, spectrum: &Spectrum<T>) -> T {
        T::one() - spectrum.spectral_gap / (self.alpha * T::from_count(self.edge_count))
    }
}

pub fn transition<T: Scalar>(g: &Graph, alpha: T) -> Result<TransitionMatrix<T>> {
    if !(alpha >= T::one()) {
        return param(format!("alpha must be >= 1, got {alpha}"));
    }
    if !g.is_connected() {
        return precondition("transition matrix requires a connected graph");
    }
    let denom = alpha * T::from_count(g.edge_count());
    let lap: Matrix<T> = g.laplacian();
    let w = Matrix::from_fn(g.node_count(), g.node_count(), |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - lap[(i, j)] / denom
    });
    Ok(TransitionMatrix { alpha, w, edge_count: g.edge_count() })
}

/// Tensor product `G × K_k`: node `(i, a)` is stored at index `a * n + i`, and
/// `(i, a) ~ (j, b)` exactly when `i ~ j` in `g`. Gives `kn` nodes, `k²|E|` edges
/// and Laplacian spectral gap `k λ_{n-1}`.
pub fn tensor_with_complete(g: &Graph, k: usize) -> Result<Graph> {
    if k < 2 {
        return param(format!("tensor product needs k >= 2, got {k}"));
    }
    if !g.is_connected() {
        return precondition("tensor product requires a connected graph");
    }
    if g.is_bipartite() {
        return precondition("tensor product requires a non-bipartite graph");
    }
    if g.is_complete() {
        return precondition("tensor product gap identity requires a non-complete graph");
    }
    let n = g.node_count();
    let mut pairs = Vec::with_capacity(k * k * g.edge_count());
    for &(i, j) in g.edges() {
        for a in 0..k {
            for b in 0..k {
                pairs.push((a * n + i, b * n + j));
            }
        }
    }
    Graph::from_edges(k * n, pairs)
}

/// Topology descriptor accepted by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Complete { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    Grid2d { rows: usize, cols: usize, wrap: bool },
    WattsStrogatz { n: usize, k: usize, p: f64, seed: u64 },
    EdgeList { n: usize, pairs: Vec<(usize, usize)> },
    File(PathBuf),
}

impl Topology {
    /// Torus grid for `n` nodes: the most square factorisation `rows × cols` with
    /// `3 <= rows <= cols`, preferring one with an odd side so the torus is not
    /// bipartite and can run the gossip protocols.
    pub fn grid_for(n: usize) -> Result<Self> {
        let shapes: Vec<usize> = (3..).take_while(|r| r * r <= n).filter(|&r| n.is_multiple_of(r)).collect();
        let odd = shapes.iter().rev().find(|&&r| r % 2 == 1 || (n / r) % 2 == 1);
        match odd.or(shapes.last()) {
            Some(&rows) => Ok(Self::Grid2d { rows, cols: n / rows, wrap: true }),
            None => param(format!("{n} has no factorisation rows x cols with 3 <= rows <= cols")),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Complete { .. } => "complete",
            Self::Cycle { .. } => "cycle",
            Self::Path { .. } => "path",
            Self::Grid2d { .. } => "grid2d",
            Self::WattsStrogatz { .. } => "ws",
            Self::EdgeList { .. } => "edges",
            Self::File(_) => "file",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Complete { n } => write!(f, "complete:{n}"),
            Self::Cycle { n } => write!(f, "cycle:{n}"),
            Self::Path { n } => write!(f, "path:{n}"),
            Self::Grid2d { rows, cols, wrap } => {
                write!(f, "grid2d:{rows}x{cols}{}", if *wrap { ":wrap" } else { "" })
            }
            Self::WattsStrogatz { n, k, p, seed } => write!(f, "ws:{n}:{k}:{p}:{seed}"),
            Self::EdgeList { n, pairs } => write!(f, "edges:{n}:{}", pairs.len()),
            Self::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = |what: &str| Error::Parameter(format!("invalid topology `{s}`: {what}"));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad("expected an integer"));
        match head {
            "complete" => Ok(Self::Complete { n: int(rest)? }),
            "cycle" => Ok(Self::Cycle { n: int(rest)? }),
            "path" => Ok(Self::Path { n: int(rest)? }),
            "grid" => Self::grid_for(int(rest)?),
            "grid2d" => {
                let mut parts = rest.split(':');
                let dims = parts.next().ok_or_else(|| bad("missing RxC"))?;
                let (r, c) = dims.split_once('x').ok_or_else(|| bad("expected RxC"))?;
                let wrap = match parts.next() {
                    None | Some("") | Some("nowrap") => false,
                    Some("wrap") => true,
                    Some(_) => return Err(bad("expected `wrap` or `nowrap`")),
                };
                Ok(Self::Grid2d { rows: int(r)?, cols: int(c)?, wrap })
            }
            "ws" => {
                let parts: Vec<_> = rest.split(':').collect();
                if parts.len() != 4 {
                    return Err(bad("expected ws:n:k:p:seed"));
                }
                let p = parts[2].trim().parse::<f64>().map_err(|_| bad("p must be a number"))?;
                let seed = parts[3].trim().parse::<u64>().map_err(|_| bad("seed must be an integer"))?;
                Ok(Self::WattsStrogatz { n: int(parts[0])?, k: int(parts[1])?, p, seed })
            }
            "file" if !rest.is_empty() => Ok(Self::File(PathBuf::from(rest))),
            _ => Err(bad("unknown family")),
        }
    }
}

/// Graph plus any substitutions made while realising a descriptor.
#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    /// The descriptor actually realised (rounded degree, final seed).
    pub effective: Topology,
    pub notes: Vec<String>,
}

const WS_MAX_ATTEMPTS: u64 = 100;

pub fn generate(topology: &Topology) -> Result<Graph> {
    generate_with_notes(topology).map(|g| g.graph)
}

pub fn generate_with_notes(topology: &Topology) -> Result<Generated> {
    let plain = |graph: Graph| Generated { graph, effective: topology.clone(), notes: Vec::new() };
    match *topology {
        Topology::Complete { n } => {
            check_n(n)?;
            let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            Graph::from_edges(n, pairs).map(plain)
        }
        Topology::Cycle { n } => {
            if n < 3 {
                return param(format!("cycle needs n >= 3, got {n}"));
            }
            Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).map(plain)
        }
        Topology::Path { n } => {
            check_n(n)?;
            Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).map(plain)
        }
        Topology::Grid2d { rows, cols, wrap } => grid(rows, cols, wrap).map(plain),
        Topology::WattsStrogatz { n, k, p, seed } => watts_strogatz(n, k, p, seed),
        Topology::EdgeList { n, ref pairs } => {
            check_n(n)?;
            Graph::from_edges(n, pairs.iter().copied()).map(plain)
        }
        Topology::File(ref path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
            let (n, pairs) = parse_edge_list(&text)?;
            Graph::from_edges(n, pairs).map(plain)
        }
    }
}

/// Parses `i j` pairs, one per line, 0-indexed. Blank lines and `#` comments are skipped;
/// the node count is one more than the largest index.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut pairs = Vec::new();
    let mut max_node = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut field = || -> Result<usize> {
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Data(format!("edge list line {}: expected `i j`", lineno + 1)))
        };
        let (a, b) = (field()?, field()?);
        max_node = max_node.max(a).max(b);
        pairs.push((a, b));
    }
    if pairs.is_empty() {
        return Err(Error::Data("edge list is empty".into()));
    }
    Ok((max_node + 1, pairs))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return param(format!("graph needs n >= 2, got {n}"));
    }
    Ok(())
}

fn grid(rows: usize, cols: usize, wrap: bool) -> Result<Graph> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return param(format!("grid {rows}x{cols} has fewer than two nodes"));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut set = BTreeSet::new();
    for r in 0..rows {
        for c in 0..cols {
            let right = if c + 1 < cols {
                Some(c + 1)
            } else if wrap && cols > 1 {
                Some(0)
            } else {
                None
            };
            let down = if r + 1 < rows {
                Some(r + 1)
            } else if wrap && rows > 1 {
                Some(0)
            } else {
                None
            };
            for (a, b) in
                [right.map(|c2| (id(r, c), id(r, c2))), down.map(|r2| (id(r, c), id(r2, c)))].into_iter().flatten()
            {
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    Graph::from_edges(rows * cols, set)
}

fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<Generated> {
    check_n(n)?;
    if !(p > 0.0 && p < 1.0) {
        return param(format!("Watts-Strogatz rewiring probability must lie in (0, 1), got {p}"));
    }
    if k < 2 {
        return param(format!("Watts-Strogatz degree must be >= 2, got {k}"));
    }
    let mut notes = Vec::new();
    let k_even = if k % 2 == 1 {
        notes.push(format!("ws: odd degree k={k} rounded up to k={}", k + 1));
        k + 1
    } else {
        k
    };
    if k_even >= n {
        return param(format!("Watts-Strogatz degree k={k_even} must be below n={n}"));
    }
    for attempt in 0..WS_MAX_ATTEMPTS {
        let s = seed.wrapping_add(attempt);
        let g = watts_strogatz_once(n, k_even, p, s)?;
        if g.is_connected() {
            if attempt > 0 {
                notes.push(format!("ws: seed {seed} gave a disconnected graph, used seed {s}"));
            }
            return Ok(Generated { graph: g, effective: Topology::WattsStrogatz { n, k: k_even, p, seed: s }, notes });
        }
    }
    Err(Error::Numeric(format!("Watts-Strogatz: no connected graph in {WS_MAX_ATTEMPTS} attempts from seed {seed}")))
}

/// Ring lattice with `k/2` neighbours per side, then each lattice edge `(i, i+j)`
/// is rewired with probability `p` to `(i, w)` with `w` uniform among valid targets.
fn watts_strogatz_once(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 1..=k / 2 {
            let v = (i + j) % n;
            adj[i].insert(v);
            adj[v].insert(i);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.random::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let pairs = adj.iter().enumerate().flat_map(|(u, set)| set.iter().filter(move |&&v| u < v).map(move |&v| (u, v)));
    Graph::from_edges(n, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(s: &str) -> Graph {
        generate(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn complete_three() {
        let k3 = g("complete:3");
        assert_eq!(k3.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(k3.edge_count(), 3);
        assert!(k3.is_complete());
    }

    #[test]
    fn cycle_parity_decides_bipartiteness() {
        assert!(g("cycle:4").is_bipartite());
        assert!(!g("cycle:5").is_bipartite());
    }

    #[test]
    fn path_distances() {
        let d = g("path:3").distances();
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.diameter(), 2);
    }

    #[test]
    fn disconnected_graph_has_unreachable_pairs() {
        let graph = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!graph.is_connected());
        assert_eq!(graph.distances().get(0, 3), UNREACHABLE);
        assert_eq!(graph.distances().diameter(), 1);
    }

    #[test]
    fn rejects_loops_and_duplicates() {
        assert!(matches!(Graph::from_edges(3, [(1, 1)]), Err(Error::Parameter(_))));
        assert!(matches!(Graph::from_edges(3, [(0, 1), (1, 0)]), Err(Error::Parameter(_))));
    }

    #[test]
    fn k3_spectrum() {
        let s: Spectrum<f64> = spectrum(&g("complete:3")).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[2], 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.spectral_gap, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn c5_gap_matches_closed_form() {
        let s: Spectrum<f64> = spectrum(&g("cycle:5")).unwrap();
        let expected = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
        assert_relative_eq!(s.spectral_gap, expected, epsilon = 1e-9);
    }

    #[test]
    fn k3_transition_alpha_two() {
        let w = transition(&g("complete:3"), 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 3.0 } else { 1.0 / 6.0 };
                assert_relative_eq!(w.w[(i, j)], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn c5_second_eigenvalue_alpha_one() {
        let c5 = g("cycle:5");
        let s: Spectrum<f64> = spectrum(&c5).unwrap();
        let w = transition(&c5, 1.0).unwrap();
        let lambda2 = w.second_eigenvalue(&s);
        let gap = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
        assert_relative_eq!(lambda2, 1.0 - gap / 5.0, epsilon = 1e-12);
        let direct = w.w.symmetric_eigenvalues().unwrap();
        assert_relative_eq!(direct[3], lambda2, epsilon = 1e-9);
    }

    #[test]
    fn transition_rejects_small_alpha() {
        assert!(matches!(transition(&g("complete:3"), 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn tensor_c5_k2() {
        let c5 = g("cycle:5");
        let t = tensor_with_complete(&c5, 2).unwrap();
        assert_eq!(t.node_count(), 10);
        assert_eq!(t.edge_count(), 20);
        let base: Spectrum<f64> = spectrum(&c5).unwrap();
        let prod: Spectrum<f64> = spectrum(&t).unwrap();
        assert_relative_eq!(prod.spectral_gap, 2.0 * base.spectral_gap, epsilon = 1e-9);
    }

    #[test]
    fn tensor_guards() {
        assert!(matches!(tensor_with_complete(&g("complete:3"), 2), Err(Error::Precondition(_))));
        assert!(matches!(tensor_with_complete(&g("cycle:5"), 1), Err(Error::Parameter(_))));
        assert!(matches!(tensor_with_complete(&g("cycle:6"), 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn watts_strogatz_rounds_odd_degree() {
        let out = generate_with_notes(&"ws:699:5:0.3:7".parse().unwrap()).unwrap();
        assert_eq!(out.graph.node_count(), 699);
        assert_eq!(out.graph.edge_count(), 699 * 6 / 2);
        assert!(out.graph.is_connected());
        assert!(out.notes.iter().any(|n| n.contains("rounded up")));
        match out.effective {
            Topology::WattsStrogatz { k, .. } => assert_eq!(k, 6),
            _ => unreachable!(),
        }
    }

    #[test]
    fn watts_strogatz_is_deterministic() {
        let t: Topology = "ws:60:4:0.3:11".parse().unwrap();
        assert_eq!(generate(&t).unwrap(), generate(&t).unwrap());
    }

    #[test]
    fn watts_strogatz_parameter_errors() {
        assert!(generate(&"ws:10:4:1.5:1".parse().unwrap()).is_err());
        assert!(generate(&"ws:4:4:0.3:1".parse().unwrap()).is_err());
    }

    #[test]
    fn grid_for_699_is_three_by_233_torus() {
        let t = Topology::grid_for(699).unwrap();
        assert_eq!(t, Topology::Grid2d { rows: 3, cols: 233, wrap: true });
        let graph = generate(&t).unwrap();
        assert!(graph.degrees().iter().all(|&d| d == 4));
    }

    #[test]
    fn grid_for_prefers_a_non_bipartite_torus() {
        let t = Topology::grid_for(100).unwrap();
        assert_eq!(t, Topology::Grid2d { rows: 5, cols: 20, wrap: true });
        assert!(!generate(&t).unwrap().is_bipartite());
        assert_eq!(Topology::grid_for(64).unwrap(), Topology::Grid2d { rows: 8, cols: 8, wrap: true });
        assert!(Topology::grid_for(14).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["complete:699", "cycle:100", "grid2d:3x233:wrap", "ws:699:6:0.3:7", "path:3"] {
            let t: Topology = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("blob:3".parse::<Topology>().is_err());
        assert!("grid2d:3by4".parse::<Topology>().is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let (n, pairs) = parse_edge_list("0 1\n# comment\n1 2\n\n2 0\n").unwrap();
        assert_eq!(n, 3);
        assert_eq!(pairs.len(), 3);
        assert!(parse_edge_list("0 x\n").is_err());
    }
}
