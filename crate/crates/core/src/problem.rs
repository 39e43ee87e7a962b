//! MaxCut instances and their QUBO / Ising encodings.
//!
//! Bit `i` of a basis index is vertex `i`'s side of the cut, so the integer
//! `k` and the bitstring `x` with `x_i = (k >> i) & 1` name the same
//! assignment throughout the crate.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest instance the exhaustive oracle will enumerate.
pub const BRUTE_FORCE_CAP: usize = 24;

const REGULAR_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Weighted undirected simple graph. Edges are stored with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph, canonicalising each edge to `i < j`.
    ///
    /// Self-loops, duplicate pairs, out-of-range endpoints and non-finite
    /// weights are rejected rather than repaired.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Index(format!("edge ({a}, {b}) in a graph with {n} vertices")));
            }
            if a == b {
                return Err(Error::Invariant(format!("self-loop on vertex {a}")));
            }
            if !w.is_finite() {
                return Err(Error::Invariant(format!("non-finite weight on edge ({a}, {b})")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::Invariant(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        Ok(Graph { n, edges: out })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Graph::new(n, std::iter::empty())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Neighbour lists `(vertex, weight)` per vertex.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
        adj
    }

    /// Complete graph `K_n` with uniform weight.
    pub fn complete(n: usize, w: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
        }
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, w)));
        Graph::new(n, edges)
    }

    /// Cycle `C_n` with unit weights.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
    }

    /// Uniformly drawn simple `d`-regular graph via the configuration model,
    /// resampling the stub matching until it has no loops or multi-edges.
    pub fn regular(n: usize, d: usize, seed: u64) -> Result<Self> {
        if (n * d) % 2 != 0 || d >= n {
            return Err(Error::InfeasibleDegree { n, d });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        'attempt: for _ in 0..REGULAR_RETRIES {
            stubs.shuffle(&mut rng);
            let mut seen = HashSet::with_capacity(n * d / 2);
            let mut edges = Vec::with_capacity(n * d / 2);
            for pair in stubs.chunks_exact(2) {
                let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if a == b || !seen.insert((a, b)) {
                    continue 'attempt;
                }
                edges.push((a, b, 1.0));
            }
            edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
            return Graph::new(n, edges);
        }
        Err(Error::GenerationFailed {
            attempts: REGULAR_RETRIES,
        })
    }

    /// Erdős–Rényi `G(n, p)` with unit weights.
    pub fn random(n: usize, p_edge: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_edge) {
            return Err(Error::Domain(format!("edge probability {p_edge} not in [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p_edge {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Graph::new(n, edges)
    }

    pub fn maxcut_cost(&self, x: &BitString) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.cut_value(x.to_index()))
    }

    /// Cut value of the assignment encoded by basis index `k`.
    #[inline]
    pub fn cut_value(&self, k: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| ((k >> e.i) ^ (k >> e.j)) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphFile::from(self)).expect("graph serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_json(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// On-disk form: `{"n": 3, "edges": [[0, 1, 1.0], ...]}`.
#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl From<&Graph> for GraphFile {
    fn from(g: &Graph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;
    fn try_from(f: GraphFile) -> Result<Self> {
        Graph::new(f.n, f.edges)
    }
}

/// Assignment of every vertex to side 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Domain(format!("bit value {b}")));
        }
        Ok(BitString(bits))
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![0; n])
    }

    pub fn from_index(k: u64, n: usize) -> Self {
        BitString((0..n).map(|i| ((k >> i) & 1) as u8).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn complement(&self) -> Self {
        BitString(self.0.iter().map(|b| 1 - b).collect())
    }
}

/// Renders `x_0 x_1 ... x_{n-1}` left to right.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("invalid bit `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// `min x^T Q x` over binary `x`, with `Q` symmetric (row-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    n: usize,
    q: Vec<f64>,
}

impl Qubo {
    pub fn new(n: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: q.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if q[i * n + j] != q[j * n + i] {
                    return Err(Error::Invariant(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Qubo { n, q })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn energy(&self, x: &BitString) -> f64 {
        let b = x.bits();
        let mut e = 0.0;
        for i in 0..self.n {
            if b[i] == 0 {
                continue;
            }
            for j in 0..self.n {
                if b[j] == 1 {
                    e += self.get(i, j);
                }
            }
        }
        e
    }
}

/// Encodes MaxCut as a minimisation QUBO: `x^T Q x = -cut(x)`.
///
/// Each edge contributes `-w (x_i + x_j - 2 x_i x_j)`; with `x_i^2 = x_i` the
/// linear part lands on the diagonal.
pub fn graph_to_qubo(g: &Graph) -> Qubo {
    let n = g.n_vertices();
    let mut q = vec![0.0; n * n];
    for e in g.edges() {
        q[e.i * n + e.i] -= e.w;
        q[e.j * n + e.j] -= e.w;
        q[e.i * n + e.j] += e.w;
        q[e.j * n + e.i] += e.w;
    }
    Qubo { n, q }
}

/// `E(z) = sum_i h_i z_i + sum_{i<j} J_ij z_i z_j`, spins `z_i = 2 x_i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub h: Vec<f64>,
    /// Couplings `(i, j, J_ij)` with `i < j`.
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, z: &[i8]) -> f64 {
        let lin: f64 = self.h.iter().zip(z).map(|(h, &s)| h * f64::from(s)).sum();
        let quad: f64 = self
            .couplings
            .iter()
            .map(|&(i, j, c)| c * f64::from(z[i]) * f64::from(z[j]))
            .sum();
        lin + quad
    }

    pub fn spins(x: &BitString) -> Vec<i8> {
        x.bits().iter().map(|&b| 2 * b as i8 - 1).collect()
    }
}

/// Substitutes `x_i = (1 + z_i) / 2`, so `energy(z) + offset == x^T Q x`.
pub fn qubo_to_ising(q: &Qubo) -> Result<IsingModel> {
    // Re-validate: a Qubo can only be built symmetric, but keep the check
    // local to the conversion that relies on it.
    let q = Qubo::new(q.n, q.q.clone())?;
    let n = q.n;
    let mut h = vec![0.0; n];
    let mut couplings = Vec::new();
    let mut offset = 0.0;
    for i in 0..n {
        let d = q.get(i, i);
        h[i] += d / 2.0;
        offset += d / 2.0;
        for j in (i + 1)..n {
            let c = q.get(i, j);
            if c == 0.0 {
                continue;
            }
            // 2 c x_i x_j = c/2 (1 + z_i + z_j + z_i z_j)
            couplings.push((i, j, c / 2.0));
            h[i] += c / 2.0;
            h[j] += c / 2.0;
            offset += c / 2.0;
        }
    }
    Ok(IsingModel { h, couplings, offset })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub c_max: f64,
    pub argmax: Vec<BitString>,
}

/// Exhaustive maximum cut. Ties are resolved with a 1e-9 absolute window.
pub fn brute_force_max(g: &Graph) -> Result<BruteForce> {
    let n = g.n_vertices();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::InvalidSize(format!(
            "brute force is capped at {BRUTE_FORCE_CAP} vertices, got {n}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    for k in 0..(1u64 << n) {
        let v = g.cut_value(k);
        if v > best + 1e-9 {
            best = v;
            arg.clear();
            arg.push(k);
        } else if (v - best).abs() <= 1e-9 {
            arg.push(k);
        }
    }
    Ok(BruteForce {
        c_max: best,
        argmax: arg.into_iter().map(|k| BitString::from_index(k, n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge() -> Graph {
        Graph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::complete(3, 1.0).unwrap()
    }

    #[test]
    fn complete_graph_edge_counts() {
        let k4 = Graph::complete(4, 1.0).unwrap();
        assert_eq!(k4.n_edges(), 6);
        assert!(k4.edges().iter().all(|e| e.w == 1.0));
        let k2 = Graph::complete(2, 1.0).unwrap();
        assert_eq!(k2.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);
        assert_eq!(Graph::complete(18, 1.0).unwrap().n_edges(), 18 * 17 / 2);
        assert!(matches!(Graph::complete(1, 1.0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(Graph::new(3, [(1, 1, 1.0)]).is_err());
        assert!(Graph::new(3, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(Graph::new(3, [(0, 3, 1.0)]).is_err());
        assert!(Graph::new(3, [(0, 1, f64::NAN)]).is_err());
        let g = Graph::new(3, [(2, 0, 0.5)]).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 2, w: 0.5 });
    }

    #[test]
    fn regular_graphs() {
        for seed in 0..5 {
            let k4 = Graph::regular(4, 3, seed).unwrap();
            assert_eq!(k4, Graph::complete(4, 1.0).unwrap());
            let g = Graph::regular(6, 3, seed).unwrap();
            assert_eq!(g.n_edges(), 9);
            assert!(g.degrees().iter().all(|&d| d == 3));
        }
        assert!(matches!(Graph::regular(5, 3, 1), Err(Error::InfeasibleDegree { .. })));
        assert!(matches!(Graph::regular(4, 4, 1), Err(Error::InfeasibleDegree { .. })));
        assert_eq!(Graph::regular(12, 3, 9).unwrap(), Graph::regular(12, 3, 9).unwrap());
    }

    #[test]
    fn random_graphs() {
        assert_eq!(Graph::random(7, 0.0, 3).unwrap().n_edges(), 0);
        assert_eq!(Graph::random(7, 1.0, 3).unwrap(), Graph::complete(7, 1.0).unwrap());
        let a = Graph::random(10, 0.4, 7).unwrap();
        let b = Graph::random(10, 0.4, 7).unwrap();
        assert_eq!(a, b);
        assert!(Graph::random(4, 1.5, 0).is_err());
    }

    #[test]
    fn maxcut_cost_examples() {
        let x: BitString = "01".parse().unwrap();
        assert_eq!(edge().maxcut_cost(&x).unwrap(), 1.0);
        let x: BitString = "001".parse().unwrap();
        assert_eq!(triangle().maxcut_cost(&x).unwrap(), 2.0);
        let best = (0..8u64).map(|k| triangle().cut_value(k)).fold(0.0, f64::max);
        assert_eq!(best, 2.0);
        assert_eq!(triangle().maxcut_cost(&BitString::zeros(3)).unwrap(), 0.0);
        assert!(matches!(
            triangle().maxcut_cost(&BitString::zeros(2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn qubo_examples() {
        let q = graph_to_qubo(&edge());
        assert_eq!(q.get(0, 0), -1.0);
        assert_eq!(q.get(1, 1), -1.0);
        for k in 0..4 {
            let x = BitString::from_index(k, 2);
            assert_eq!(q.energy(&x), -edge().maxcut_cost(&x).unwrap());
        }
        assert_eq!(q.energy(&"01".parse().unwrap()), -1.0);
        let empty = graph_to_qubo(&Graph::empty(3).unwrap());
        assert!(empty.q.iter().all(|&v| v == 0.0));
        let q3 = graph_to_qubo(&triangle());
        assert_eq!(q3.energy(&"001".parse().unwrap()), -2.0);
        for k in 0..8 {
            let x = BitString::from_index(k, 3);
            assert_eq!(q3.energy(&x), -triangle().maxcut_cost(&x).unwrap());
        }
    }

    #[test]
    fn ising_examples() {
        let zero = qubo_to_ising(&Qubo::new(2, vec![0.0; 4]).unwrap()).unwrap();
        assert_eq!(zero.h, vec![0.0, 0.0]);
        assert!(zero.couplings.is_empty());
        assert_eq!(zero.offset, 0.0);

        let c = 3.5;
        let one = qubo_to_ising(&Qubo::new(1, vec![c]).unwrap()).unwrap();
        assert_eq!(one.h, vec![c / 2.0]);
        assert_eq!(one.offset, c / 2.0);

        let q = graph_to_qubo(&edge());
        let ising = qubo_to_ising(&q).unwrap();
        for k in 0..4 {
            let x = BitString::from_index(k, 2);
            assert_eq!(ising.energy(&IsingModel::spins(&x)) + ising.offset, q.energy(&x));
        }
        assert!(Qubo::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let bf = brute_force_max(&edge()).unwrap();
        assert_eq!(bf.c_max, 1.0);
        let names: Vec<String> = bf.argmax.iter().map(|b| b.to_string()).collect();
        assert_eq!(names, vec!["10", "01"]);
        assert_eq!(brute_force_max(&Graph::complete(4, 1.0).unwrap()).unwrap().c_max, 4.0);
        assert_eq!(brute_force_max(&Graph::cycle(8).unwrap()).unwrap().c_max, 8.0);
        assert!(brute_force_max(&Graph::empty(25).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = Graph::new(4, [(0, 1, 1.0), (2, 3, 0.25)]).unwrap();
        assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
        assert!(Graph::from_json(r#"{"n": 2, "edges": [[0, 0, 1.0]]}"#).is_err());
        assert!(Graph::from_json("{").is_err());
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (2..=max_n).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec(proptest::option::of(-3i32..=3), m),
            )
                .prop_map(|(n, pairs, ws)| {
                    let edges = pairs
                        .into_iter()
                        .zip(ws)
                        .filter_map(|((i, j), w)| w.map(|w| (i, j, f64::from(w) * 0.5)));
                    Graph::new(n, edges).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn cut_is_complement_symmetric(g in arb_graph(8), k in any::<u64>()) {
            let x = BitString::from_index(k, g.n_vertices());
            prop_assert_eq!(g.maxcut_cost(&x).unwrap(), g.maxcut_cost(&x.complement()).unwrap());
        }

        #[test]
        fn qubo_ising_chain_matches_cut(g in arb_graph(8)) {
            let q = graph_to_qubo(&g);
            let ising = qubo_to_ising(&q).unwrap();
            for k in 0..(1u64 << g.n_vertices()) {
                let x = BitString::from_index(k, g.n_vertices());
                let e = ising.energy(&IsingModel::spins(&x)) + ising.offset;
                prop_assert!((e + g.maxcut_cost(&x).unwrap()).abs() < 1e-9);
            }
        }

        #[test]
        fn bitstring_index_round_trip(k in 0u64..(1 << 20)) {
            prop_assert_eq!(BitString::from_index(k, 20).to_index(), k);
        }
    }
}
