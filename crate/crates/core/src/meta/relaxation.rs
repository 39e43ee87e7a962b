//! Low-rank vector relaxation of MaxCut.
//!
//! Maximises `sum_ij w_ij (1 - y_i . y_j) / 2` over unit vectors `y_i` in
//! `R^k` by block-coordinate projected ascent: each sweep moves every vector
//! to the exact maximiser of its own block, `y_i = -normalize(sum_j w_ij y_j)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::problem::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct LowRank {
    pub vectors: Vec<Vec<f64>>,
    /// Relaxed objective at `vectors` (an upper bound proxy for the max cut).
    pub value: f64,
    pub converged: bool,
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn relaxed_value(g: &Graph, vectors: &[Vec<f64>]) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let dot: f64 = vectors[e.i].iter().zip(&vectors[e.j]).map(|(a, b)| a * b).sum();
            e.w * (1.0 - dot) / 2.0
        })
        .sum()
}

pub fn solve(g: &Graph, rank: usize, iters: usize, seed: u64) -> LowRank {
    let n = g.n_vertices();
    let k = rank.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            if !normalize(&mut v) {
                v = vec![0.0; k];
                v[0] = 1.0;
            }
            v
        })
        .collect();
    let adj = g.adjacency();
    let mut value = relaxed_value(g, &vectors);
    let mut converged = false;
    let mut field = vec![0.0; k];
    for _ in 0..iters {
        for i in 0..n {
            field.iter_mut().for_each(|x| *x = 0.0);
            for &(j, w) in &adj[i] {
                for (f, y) in field.iter_mut().zip(&vectors[j]) {
                    *f += w * y;
                }
            }
            field.iter_mut().for_each(|x| *x = -*x);
            if normalize(&mut field) {
                vectors[i].copy_from_slice(&field);
            }
        }
        let next = relaxed_value(g, &vectors);
        let delta = next - value;
        value = next;
        if delta.abs() <= 1e-12 * (1.0 + value.abs()) {
            converged = true;
            break;
        }
    }
    LowRank {
        vectors,
        value,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::brute_force_max;

    #[test]
    fn single_edge_is_antipodal() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        let s = solve(&g, 3, 100, 1);
        assert!(s.converged);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relaxation_bounds_the_cut() {
        for seed in 0..10 {
            let g = Graph::random(8, 0.5, seed).unwrap();
            let s = solve(&g, 8, 2000, seed);
            let c = brute_force_max(&g).unwrap().c_max;
            assert!(s.value >= c - 1e-6, "{} < {}", s.value, c);
            for v in &s.vectors {
                let n: f64 = v.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_value() {
        // three vectors at 120 degrees: 3 * (1 + 1/2) / 2 = 9/4
        let g = Graph::complete(3, 1.0).unwrap();
        let s = solve(&g, 3, 5000, 2);
        assert!((s.value - 2.25).abs() < 1e-6, "{}", s.value);
    }
}
