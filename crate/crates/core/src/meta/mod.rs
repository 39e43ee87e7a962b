//! Recursive QAOA and classical MaxCut baselines.

pub mod relaxation;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ansatz::build_standard;
use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::optimize::{init_random, maximize, CircuitObjective, OptimizerSpec};
use crate::problem::{brute_force_max, BitString, Graph, BRUTE_FORCE_CAP};
use crate::simulator::{CostTable, StateVector};

/// An assignment and its cut value.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub bits: BitString,
    pub value: f64,
}

fn cut_of(g: &Graph, bits: &[u8]) -> f64 {
    g.edges()
        .iter()
        .filter(|e| bits[e.i] != bits[e.j])
        .map(|e| e.w)
        .sum()
}

fn make_cut(g: &Graph, bits: Vec<u8>) -> Result<Cut> {
    let value = cut_of(g, &bits);
    Ok(Cut {
        bits: BitString::new(bits)?,
        value,
    })
}

/// `M_ij = <Z_i Z_j>` for every edge, in edge order.
pub fn zz_correlations(state: &StateVector, g: &Graph) -> Result<Vec<f64>> {
    if state.n_qubits() != g.n_vertices() {
        return Err(Error::Dimension {
            expected: g.n_vertices(),
            got: state.n_qubits(),
        });
    }
    Ok(g.edges().iter().map(|e| state.zz_expectation(e.i, e.j)).collect())
}

/// Imposes `Z_removed = sign * Z_kept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub kept: usize,
    pub removed: usize,
    pub sign: i8,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    pub graph: Graph,
    /// For each vertex of the input graph: (vertex in `graph`, relative sign).
    pub vertex_map: Vec<(usize, i8)>,
    /// Cut weight fixed by the constraint; `cut(lift(y)) = cut_reduced(y) + constant`.
    pub constant: f64,
}

impl ReducedProblem {
    /// Assignment of the input graph induced by an assignment of the reduced one.
    pub fn lift(&self, reduced: &[u8]) -> Vec<u8> {
        self.vertex_map
            .iter()
            .map(|&(r, s)| reduced[r] ^ u8::from(s < 0))
            .collect()
    }
}

const DROP_WEIGHT: f64 = 1e-12;

/// Eliminates `step.removed` by substituting the parity constraint.
///
/// An edge `(removed, k)` becomes `(kept, k)`; under a `-1` sign its cut
/// indicator flips, which contributes `w` to the constant and `-w` to the
/// new edge. The edge `(kept, removed)` itself collapses to the constant
/// `w [sign = -1]`. Parallel edges are merged.
pub fn contract(g: &Graph, step: &EliminationStep) -> Result<ReducedProblem> {
    let n = g.n_vertices();
    let EliminationStep { kept, removed, sign, .. } = *step;
    if kept >= n || removed >= n || kept == removed || n < 2 {
        return Err(Error::Index(format!(
            "elimination {removed} -> {kept} in a graph with {n} vertices"
        )));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Domain(format!("sign {sign} must be +-1")));
    }
    let compact = |v: usize| if v > removed { v - 1 } else { v };
    let vertex_map: Vec<(usize, i8)> = (0..n)
        .map(|v| if v == removed { (compact(kept), sign) } else { (compact(v), 1) })
        .collect();
    let mut constant = 0.0;
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        let (a, sa) = vertex_map[e.i];
        let (b, sb) = vertex_map[e.j];
        let s = sa * sb;
        if a == b {
            if s < 0 {
                constant += e.w;
            }
            continue;
        }
        let w = if s < 0 {
            constant += e.w;
            -e.w
        } else {
            e.w
        };
        *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
    }
    let edges = merged
        .into_iter()
        .filter(|(_, w)| w.abs() >= DROP_WEIGHT)
        .map(|((i, j), w)| (i, j, w));
    Ok(ReducedProblem {
        graph: Graph::new(n - 1, edges)?,
        vertex_map,
        constant,
    })
}

/// Inner QAOA solved at every recursion level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RqaoaInner {
    pub p: usize,
    pub starts: usize,
    pub optimizer: OptimizerSpec,
}

impl Default for RqaoaInner {
    fn default() -> Self {
        RqaoaInner {
            p: 1,
            starts: 4,
            optimizer: OptimizerSpec::default(),
        }
    }
}

pub const DEFAULT_RQAOA_CUTOFF: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct RqaoaResult {
    pub cut: Cut,
    pub steps: Vec<EliminationStep>,
    pub circuit_calls: u64,
    pub iterations: usize,
    /// Optimised inner parameters of the first (full-size) level.
    pub first_level: Option<(Vec<f64>, Vec<f64>)>,
}

const TIE: f64 = 1e-9;

/// Recursive QAOA: optimise the inner QAOA, fix the strongest correlated
/// edge, contract, repeat down to `cutoff` vertices, brute-force the core and
/// substitute back.
pub fn rqaoa_solve(g: &Graph, cutoff: usize, inner: &RqaoaInner, seed: u64) -> Result<RqaoaResult> {
    if cutoff < 1 {
        return Err(Error::Domain("RQAOA cutoff must be >= 1".into()));
    }
    if inner.starts < 1 {
        return Err(Error::Domain("RQAOA needs at least one start".into()));
    }
    let mut current = g.clone();
    let mut map: Vec<(usize, i8)> = (0..g.n_vertices()).map(|v| (v, 1)).collect();
    let mut steps = Vec::new();
    let mut calls = 0;
    let mut iterations = 0;
    let mut first_level = None;
    while current.n_vertices() > cutoff && current.n_edges() > 0 {
        let circuit = build_standard(&current, inner.p)?;
        let ct = CostTable::from_graph(&current)?;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for s in 0..inner.starts {
            let start_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((steps.len() * inner.starts + s) as u64);
            let x0 = init_random(circuit.slot_kinds(), start_seed);
            let mut obj = CircuitObjective::new(&circuit, &ct, ObjectiveSpec::default());
            let r = maximize(&mut obj, &x0, &inner.optimizer.with_seed(start_seed))?;
            calls += r.circuit_calls;
            iterations += r.iterations;
            if best.as_ref().is_none_or(|b| r.best_value > b.0) {
                best = Some((r.best_value, r.init_params, r.final_params));
            }
        }
        let (_, x_init, x_best) = best.expect("starts >= 1");
        if first_level.is_none() {
            first_level = Some((x_init, x_best.clone()));
        }
        let state = circuit.state(&x_best, &ct)?;
        calls += 1;
        let m = zz_correlations(&state, &current)?;
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.sort_by_key(|&k| (current.edges()[k].i, current.edges()[k].j));
        let top = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let k = *order
            .iter()
            .find(|&&k| m[k].abs() >= top - TIE)
            .expect("at least one edge");
        let e = current.edges()[k];
        let step = EliminationStep {
            kept: e.i,
            removed: e.j,
            sign: if m[k] >= 0.0 { 1 } else { -1 },
            correlation: m[k],
        };
        log::debug!("rqaoa: {} -> {} (M = {:.6})", step.removed, step.kept, step.correlation);
        let reduced = contract(&current, &step)?;
        for entry in map.iter_mut() {
            let (r, s) = reduced.vertex_map[entry.0];
            *entry = (r, entry.1 * s);
        }
        current = reduced.graph;
        steps.push(step);
    }
    let core: Vec<u8> = if current.n_edges() == 0 || current.n_vertices() > BRUTE_FORCE_CAP {
        vec![0; current.n_vertices()]
    } else {
        brute_force_max(&current)?.argmax[0].bits().to_vec()
    };
    let bits: Vec<u8> = map.iter().map(|&(r, s)| core[r] ^ u8::from(s < 0)).collect();
    Ok(RqaoaResult {
        cut: make_cut(g, bits)?,
        steps,
        circuit_calls: calls.max(1),
        iterations,
        first_level,
    })
}

/// Classical solver identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Brute,
    Greedy,
    Local,
    Anneal,
    Spectral,
    Gw,
}

impl Baseline {
    pub const ALL: [Baseline; 6] = [
        Baseline::Brute,
        Baseline::Greedy,
        Baseline::Local,
        Baseline::Anneal,
        Baseline::Spectral,
        Baseline::Gw,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Baseline::Brute => "brute",
            Baseline::Greedy => "greedy",
            Baseline::Local => "local",
            Baseline::Anneal => "anneal",
            Baseline::Spectral => "spectral",
            Baseline::Gw => "gw",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnknownIdentifier(s.to_string()))
    }
}

/// Runs a baseline with its default settings.
pub fn run_baseline(g: &Graph, which: Baseline, seed: u64) -> Result<Cut> {
    match which {
        Baseline::Brute => {
            let b = brute_force_max(g)?;
            make_cut(g, b.argmax[0].bits().to_vec())
        }
        Baseline::Greedy => greedy_cut(g),
        Baseline::Local => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: Vec<u8> = (0..g.n_vertices()).map(|_| rng.random_range(0..2)).collect();
            local_search(g, &BitString::new(x0)?, usize::MAX)
        }
        Baseline::Anneal => simulated_annealing(g, &Schedule::default(), seed),
        Baseline::Spectral => spectral_cut(g),
        Baseline::Gw => gw_cut(g, g.n_vertices().min(8).max(2), 2000, 100, seed),
    }
}

/// Vertices in index order, each placed on the side with the larger
/// immediate gain; ties go to side 0.
pub fn greedy_cut(g: &Graph) -> Result<Cut> {
    let n = g.n_vertices();
    let adj = g.adjacency();
    let mut x = vec![0u8; n];
    for v in 0..n {
        let (mut to0, mut to1) = (0.0, 0.0);
        for &(u, w) in &adj[v] {
            if u < v {
                if x[u] == 1 {
                    to0 += w;
                } else {
                    to1 += w;
                }
            }
        }
        x[v] = u8::from(to1 > to0);
    }
    make_cut(g, x)
}

fn flip_gain(adj: &[Vec<(usize, f64)>], x: &[u8], v: usize) -> f64 {
    adj[v]
        .iter()
        .map(|&(u, w)| if x[u] == x[v] { w } else { -w })
        .sum()
}

/// Single-flip hill climbing until no flip improves the cut or `max_passes`
/// sweeps have run.
pub fn local_search(g: &Graph, x0: &BitString, max_passes: usize) -> Result<Cut> {
    if x0.len() != g.n_vertices() {
        return Err(Error::Dimension {
            expected: g.n_vertices(),
            got: x0.len(),
        });
    }
    let adj = g.adjacency();
    let mut x = x0.bits().to_vec();
    for _ in 0..max_passes {
        let mut improved = false;
        for v in 0..x.len() {
            if flip_gain(&adj, &x, v) > 1e-12 {
                x[v] ^= 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    make_cut(g, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t0: f64,
    pub t_min: f64,
    pub cooling: f64,
    /// Flip proposals per temperature.
    pub steps: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            t0: 2.0,
            t_min: 1e-3,
            cooling: 0.95,
            steps: 200,
        }
    }
}

/// Metropolis single-flip chain with geometric cooling; returns the best
/// assignment seen.
pub fn simulated_annealing(g: &Graph, schedule: &Schedule, seed: u64) -> Result<Cut> {
    let Schedule { t0, t_min, cooling, steps } = *schedule;
    if !(t0 > t_min && t_min > 0.0) || !(cooling > 0.0 && cooling < 1.0) {
        return Err(Error::Domain(format!("bad annealing schedule {schedule:?}")));
    }
    let n = g.n_vertices();
    let adj = g.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let mut value = cut_of(g, &x);
    let mut best = (value, x.clone());
    let mut t = t0;
    while t >= t_min {
        for _ in 0..steps {
            let v = rng.random_range(0..n);
            let d = flip_gain(&adj, &x, v);
            if d >= 0.0 || rng.random::<f64>() < (d / t).exp() {
                x[v] ^= 1;
                value += d;
                if value > best.0 + 1e-12 {
                    best = (cut_of(g, &x), x.clone());
                    value = best.0;
                }
            }
        }
        t *= cooling;
    }
    make_cut(g, best.1)
}

fn components(g: &Graph) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n_vertices()];
    let mut out = Vec::new();
    for s in 0..g.n_vertices() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

const POWER_ITERS: usize = 100_000;
const POWER_RESIDUAL: f64 = 1e-8;

/// Top eigenvector of the Laplacian restricted to `comp`, by power iteration
/// on `L + sigma I`. `None` if the residual does not reach the threshold.
fn laplacian_top_vector(adj: &[Vec<(usize, f64)>], comp: &[usize], seed: u64) -> Option<Vec<f64>> {
    let m = comp.len();
    let mut local = vec![usize::MAX; adj.len()];
    for (k, &v) in comp.iter().enumerate() {
        local[v] = k;
    }
    let degree: Vec<f64> = comp.iter().map(|&v| adj[v].iter().map(|(_, w)| w).sum()).collect();
    let sigma = comp
        .iter()
        .map(|&v| adj[v].iter().map(|(_, w)| w.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 2.0;
    let apply = |x: &[f64], y: &mut [f64]| {
        for (k, &v) in comp.iter().enumerate() {
            let mut acc = (degree[k] + sigma) * x[k];
            for &(u, w) in &adj[v] {
                acc -= w * x[local[u]];
            }
            y[k] = acc;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut y = vec![0.0; m];
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(&x);
    x.iter_mut().for_each(|a| *a /= n0);
    for _ in 0..POWER_ITERS {
        apply(&x, &mut y);
        let lambda: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < POWER_RESIDUAL * lambda.abs().max(1.0) {
            return Some(x);
        }
        let ny = norm(&y);
        if ny == 0.0 {
            return None;
        }
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / ny;
        }
    }
    None
}

/// Sign partition of the largest-eigenvalue Laplacian eigenvector, computed
/// per connected component and polished by local search.
pub fn spectral_cut(g: &Graph) -> Result<Cut> {
    let n = g.n_vertices();
    let adj = g.adjacency();
    let mut x = vec![0u8; n];
    for comp in components(g) {
        if comp.len() < 2 {
            continue;
        }
        match laplacian_top_vector(&adj, &comp, 0) {
            Some(v) => {
                for (k, &u) in comp.iter().enumerate() {
                    x[u] = u8::from(v[k] < 0.0);
                }
            }
            None => {
                log::warn!("power iteration stagnated; falling back to local search");
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let x0: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
                return local_search(g, &BitString::new(x0)?, usize::MAX);
            }
        }
    }
    local_search(g, &BitString::new(x)?, 1)
}

/// Goemans-Williamson style: rank-`k` vector relaxation, then the best of
/// `rounding_rounds` random-hyperplane roundings.
pub fn gw_cut(g: &Graph, rank: usize, ascent_iters: usize, rounding_rounds: usize, seed: u64) -> Result<Cut> {
    if rank < 1 || rounding_rounds < 1 {
        return Err(Error::Domain("rank and rounding_rounds must be >= 1".into()));
    }
    let sol = relaxation::solve(g, rank, ascent_iters, seed);
    if !sol.converged {
        log::warn!("vector relaxation did not converge in {ascent_iters} sweeps");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5_5a5a_dead_beef);
    let mut best: Option<(f64, Vec<u8>)> = None;
    let mut r = vec![0.0; rank];
    for _ in 0..rounding_rounds {
        r.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let x: Vec<u8> = sol
            .vectors
            .iter()
            .map(|y| u8::from(y.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() < 0.0))
            .collect();
        let v = cut_of(g, &x);
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, x));
        }
    }
    make_cut(g, best.expect("rounds >= 1").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge() -> Graph {
        Graph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    fn all_assignments(n: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1u64 << n).map(move |k| (0..n).map(|i| ((k >> i) & 1) as u8).collect())
    }

    fn check_lift(g: &Graph, r: &ReducedProblem) {
        for y in all_assignments(r.graph.n_vertices()) {
            let lifted = r.lift(&y);
            let lhs = cut_of(g, &lifted);
            let rhs = cut_of(&r.graph, &y) + r.constant;
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn correlation_examples() {
        let g = edge();
        let plus = StateVector::init_plus(2).unwrap();
        assert!(zz_correlations(&plus, &g).unwrap()[0].abs() < 1e-15);
        let zero = StateVector::basis(2, 0).unwrap();
        assert_eq!(zz_correlations(&zero, &g).unwrap(), vec![1.0]);
        let c = build_standard(&g, 1).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let mut obj = CircuitObjective::new(&c, &ct, ObjectiveSpec::default());
        let r = maximize(&mut obj, &[0.7, 0.3], &OptimizerSpec::default()).unwrap();
        let s = c.state(&r.final_params, &ct).unwrap();
        assert!(zz_correlations(&s, &g).unwrap()[0] <= -0.9);
    }

    #[test]
    fn contract_examples() {
        let tri = Graph::complete(3, 1.0).unwrap();
        let step = EliminationStep { kept: 0, removed: 2, sign: -1, correlation: -0.5 };
        let r = contract(&tri, &step).unwrap();
        check_lift(&tri, &r);
        let best = all_assignments(2)
            .map(|y| cut_of(&tri, &r.lift(&y)))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 2.0);

        let path = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let step = EliminationStep { kept: 1, removed: 2, sign: 1, correlation: 0.7 };
        let r = contract(&path, &step).unwrap();
        assert_eq!(r.constant, 0.0);
        assert_eq!(r.graph.n_edges(), 1);
        assert_eq!((r.graph.edges()[0].i, r.graph.edges()[0].j), (0, 1));
        check_lift(&path, &r);

        let step = EliminationStep { kept: 0, removed: 1, sign: -1, correlation: -1.0 };
        let r = contract(&edge(), &step).unwrap();
        assert_eq!(r.graph.n_vertices(), 1);
        assert_eq!(r.constant, 1.0);
        let bad = EliminationStep { kept: 0, removed: 0, sign: 1, correlation: 1.0 };
        assert!(contract(&edge(), &bad).is_err());
    }

    #[test]
    fn rqaoa_complete_graphs_are_exact() {
        for n in [4, 6, 8] {
            let g = Graph::complete(n, 1.0).unwrap();
            let r = rqaoa_solve(&g, DEFAULT_RQAOA_CUTOFF.min(n - 1), &RqaoaInner::default(), 1).unwrap();
            assert_eq!(r.cut.value, brute_force_max(&g).unwrap().c_max, "K{n}");
        }
    }

    #[test]
    fn rqaoa_single_edge() {
        let r = rqaoa_solve(&edge(), 1, &RqaoaInner::default(), 0).unwrap();
        assert_eq!(r.cut.value, 1.0);
        assert_eq!(r.cut.value, edge().maxcut_cost(&r.cut.bits).unwrap());
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_cut(&edge()).unwrap().value, 1.0);
        assert_eq!(greedy_cut(&Graph::cycle(4).unwrap()).unwrap().value, 4.0);
    }

    #[test]
    fn local_search_examples() {
        let k4 = Graph::complete(4, 1.0).unwrap();
        assert_eq!(local_search(&k4, &BitString::zeros(4), usize::MAX).unwrap().value, 4.0);
        let opt = brute_force_max(&k4).unwrap().argmax[0].clone();
        assert_eq!(local_search(&k4, &opt, usize::MAX).unwrap().bits, opt);
    }

    #[test]
    fn annealing_examples() {
        let g = Graph::random(10, 0.5, 3).unwrap();
        let cold = Schedule { t0: 1e-6, t_min: 1e-7, cooling: 0.5, steps: 2000 };
        let a = simulated_annealing(&g, &cold, 5).unwrap();
        let polished = local_search(&g, &a.bits, usize::MAX).unwrap();
        assert_eq!(polished.value, a.value);
        assert_eq!(simulated_annealing(&g, &Schedule::default(), 9).unwrap(), simulated_annealing(&g, &Schedule::default(), 9).unwrap());
        assert!(simulated_annealing(&g, &Schedule { cooling: 1.0, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn spectral_examples() {
        assert_eq!(spectral_cut(&edge()).unwrap().value, 1.0);
        assert_eq!(spectral_cut(&Graph::cycle(8).unwrap()).unwrap().value, 8.0);
        assert!(spectral_cut(&Graph::complete(4, 1.0).unwrap()).unwrap().value >= 3.0);
        let two = Graph::new(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(spectral_cut(&two).unwrap().value, 2.0);
    }

    #[test]
    fn gw_examples() {
        assert_eq!(gw_cut(&edge(), 3, 100, 10, 0).unwrap().value, 1.0);
        assert_eq!(gw_cut(&Graph::cycle(8).unwrap(), 8, 2000, 100, 0).unwrap().value, 8.0);
    }

    #[test]
    fn baseline_identifiers() {
        for b in Baseline::ALL {
            assert_eq!(b.as_str().parse::<Baseline>().unwrap(), b);
        }
        assert!("sdp".parse::<Baseline>().is_err());
    }

    proptest! {
        #[test]
        fn lifts_are_exact(seed in 0u64..200, n in 3usize..9, picks in proptest::collection::vec((0usize..64, any::<bool>()), 1..4)) {
            let g0 = Graph::random(n, 0.5, seed).unwrap();
            let mut g = g0.clone();
            let mut map: Vec<(usize, i8)> = (0..n).map(|v| (v, 1)).collect();
            let mut constant = 0.0;
            for (pick, neg) in picks {
                if g.n_vertices() < 2 {
                    break;
                }
                let a = pick % g.n_vertices();
                let b = (a + 1 + pick / g.n_vertices()) % g.n_vertices();
                prop_assume!(a != b);
                let step = EliminationStep { kept: a, removed: b, sign: if neg { -1 } else { 1 }, correlation: 0.0 };
                let r = contract(&g, &step).unwrap();
                check_lift(&g, &r);
                for m in map.iter_mut() {
                    let (v, s) = r.vertex_map[m.0];
                    *m = (v, m.1 * s);
                }
                constant += r.constant;
                g = r.graph;
            }
            for y in all_assignments(g.n_vertices()) {
                let x: Vec<u8> = map.iter().map(|&(r, s)| y[r] ^ u8::from(s < 0)).collect();
                prop_assert!((cut_of(&g0, &x) - cut_of(&g, &y) - constant).abs() < 1e-9);
            }
        }

        #[test]
        fn baselines_are_self_consistent(seed in 0u64..100, n in 2usize..12) {
            let g = Graph::random(n, 0.5, seed).unwrap();
            let c_max = brute_force_max(&g).unwrap().c_max;
            for b in Baseline::ALL {
                let cut = run_baseline(&g, b, seed).unwrap();
                prop_assert_eq!(cut.value, g.maxcut_cost(&cut.bits).unwrap());
                prop_assert!(cut.value <= c_max + 1e-9);
            }
            let greedy = greedy_cut(&g).unwrap();
            prop_assert!(greedy.value >= g.total_weight() / 2.0 - 1e-9);
            let ls = local_search(&g, &greedy.bits, usize::MAX).unwrap();
            let adj = g.adjacency();
            for v in 0..n {
                prop_assert!(flip_gain(&adj, ls.bits.bits(), v) <= 1e-12);
            }
        }
    }
}
