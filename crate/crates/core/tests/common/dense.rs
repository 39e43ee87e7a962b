//! Dense-matrix reference built directly from operator definitions: Pauli
//! Kronecker products and matrix exponentials, no gate kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use qaoa_core::problem::Graph;

pub type M = DMatrix<C>;
pub type V = DVector<C>;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn eye(dim: usize) -> M {
    M::identity(dim, dim)
}

pub fn pauli_x() -> M {
    M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_y() -> M {
    M::from_row_slice(2, 2, &[c(0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), c(0.0)])
}

pub fn pauli_z() -> M {
    M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `local` acting on qubit `q` of `n` (qubit 0 is the least significant bit).
pub fn on(n: usize, q: usize, local: &M) -> M {
    let high = eye(1 << (n - 1 - q));
    let low = eye(1 << q);
    high.kronecker(local).kronecker(&low)
}

pub fn zz(n: usize, i: usize, j: usize) -> M {
    on(n, i, &pauli_z()) * on(n, j, &pauli_z())
}

/// `exp(-i a H)` for Hermitian `H`.
pub fn evolve(h: &M, a: f64) -> M {
    (h * C::new(0.0, -a)).exp()
}

pub fn cost_hamiltonian(g: &Graph) -> M {
    let n = g.n_vertices();
    let dim = 1 << n;
    let mut h = M::zeros(dim, dim);
    for e in g.edges() {
        h += (eye(dim) - zz(n, e.i, e.j)) * c(e.w / 2.0);
    }
    h
}

pub fn mixer_hamiltonian(n: usize) -> M {
    let mut h = M::zeros(1 << n, 1 << n);
    for q in 0..n {
        h += on(n, q, &pauli_x());
    }
    h
}

pub fn zero_state(n: usize) -> V {
    let mut v = V::zeros(1 << n);
    v[0] = c(1.0);
    v
}

pub fn product_state(qubits: &[V]) -> V {
    let mut v = V::from_element(1, c(1.0));
    for q in qubits.iter().rev() {
        v = v.kronecker(q);
    }
    v
}

pub fn plus_state(n: usize) -> V {
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    product_state(&vec![V::from_vec(vec![s, s]); n])
}

pub fn standard(g: &Graph, params: &[f64]) -> V {
    let hc = cost_hamiltonian(g);
    let hm = mixer_hamiltonian(g.n_vertices());
    let mut psi = plus_state(g.n_vertices());
    for layer in params.chunks(2) {
        psi = evolve(&hc, layer[0]) * psi;
        psi = evolve(&hm, layer[1]) * psi;
    }
    psi
}

/// Per-edge and per-vertex angles, `m` edge slots then `n` vertex slots per layer.
pub fn multi_angle(g: &Graph, params: &[f64]) -> V {
    let n = g.n_vertices();
    let dim = 1 << n;
    let mut psi = plus_state(n);
    for layer in params.chunks(g.n_edges() + n) {
        for (e, &gamma) in g.edges().iter().zip(layer) {
            let h = (eye(dim) - zz(n, e.i, e.j)) * c(e.w / 2.0);
            psi = evolve(&h, gamma) * psi;
        }
        for (q, &beta) in layer[g.n_edges()..].iter().enumerate() {
            psi = evolve(&on(n, q, &pauli_x()), beta) * psi;
        }
    }
    psi
}

/// Standard layers, then `exp(-i t ZZ/2)` on the chain `(q, q+1)` and
/// `exp(-i b X_q)` per qubit.
pub fn plus(g: &Graph, p: usize, params: &[f64]) -> V {
    let n = g.n_vertices();
    let mut psi = standard(g, &params[..2 * p]);
    let rest = &params[2 * p..];
    for q in 0..n - 1 {
        psi = evolve(&zz(n, q, q + 1), rest[q] / 2.0) * psi;
    }
    for q in 0..n {
        psi = evolve(&on(n, q, &pauli_x()), rest[n - 1 + q]) * psi;
    }
    psi
}

/// `|0><0|_control + |1><1|_control U_target`.
pub fn controlled(n: usize, control: usize, target: usize, u: &M) -> M {
    let p0 = M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let p1 = M::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    on(n, control, &p0) + on(n, control, &p1) * on(n, target, u)
}

/// Per layer: a controlled `RY(gamma)` per edge (higher vertex controls),
/// then a CNOT per edge, then the X mixer.
pub fn modified(g: &Graph, params: &[f64]) -> V {
    let n = g.n_vertices();
    let hm = mixer_hamiltonian(n);
    let mut psi = plus_state(n);
    for layer in params.chunks(2) {
        let ry = evolve(&pauli_y(), layer[0] / 2.0);
        for e in g.edges() {
            psi = controlled(n, e.j, e.i, &ry) * psi;
        }
        for e in g.edges() {
            psi = controlled(n, e.j, e.i, &pauli_x()) * psi;
        }
        psi = evolve(&hm, layer[1]) * psi;
    }
    psi
}

/// Start `prod_q (cos(t/2)|0> + sin(t/2)|1>)`, mixer
/// `exp(-i b sum_q (sin t_q X_q + cos t_q Z_q))`.
pub fn warm_start(g: &Graph, thetas: &[f64], params: &[f64]) -> V {
    let n = g.n_vertices();
    let hc = cost_hamiltonian(g);
    let mut hm = M::zeros(1 << n, 1 << n);
    for (q, t) in thetas.iter().enumerate() {
        hm += on(n, q, &(pauli_x() * c(t.sin()) + pauli_z() * c(t.cos())));
    }
    let qubits: Vec<V> = thetas
        .iter()
        .map(|t| V::from_vec(vec![c((t / 2.0).cos()), c((t / 2.0).sin())]))
        .collect();
    let mut psi = product_state(&qubits);
    for layer in params.chunks(2) {
        psi = evolve(&hc, layer[0]) * psi;
        psi = evolve(&hm, layer[1]) * psi;
    }
    psi
}

/// Lowest eigenvector of a real symmetric 2x2 matrix, phase fixed so the
/// first nonzero entry is positive.
fn ground_state_2x2(a: [[f64; 2]; 2]) -> V {
    let m = nalgebra::Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
    let eig = m.symmetric_eigen();
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let mut v = eig.eigenvectors.column(k).into_owned();
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = -v;
    }
    V::from_vec(vec![c(v[0]), c(v[1])])
}

/// Start in the ground state of `sum_q (X_q - h_q Z_q)`, mixer
/// `exp(-i b sum_q (X_q - h_q Z_q))`.
pub fn adaptive_bias(g: &Graph, h: &[f64], params: &[f64]) -> V {
    let n = g.n_vertices();
    let hc = cost_hamiltonian(g);
    let mut hm = M::zeros(1 << n, 1 << n);
    for (q, &hq) in h.iter().enumerate() {
        hm += on(n, q, &(pauli_x() - pauli_z() * c(hq)));
    }
    let qubits: Vec<V> = h.iter().map(|&hq| ground_state_2x2([[-hq, 1.0], [1.0, hq]])).collect();
    let mut psi = product_state(&qubits);
    for layer in params.chunks(2) {
        psi = evolve(&hc, layer[0]) * psi;
        psi = evolve(&hm, layer[1]) * psi;
    }
    psi
}

/// `<psi| i [H_M, H_C] |psi>`.
pub fn commutator(g: &Graph, psi: &V) -> f64 {
    let hc = cost_hamiltonian(g);
    let hm = mixer_hamiltonian(g.n_vertices());
    let comm = (&hm * &hc - &hc * &hm) * C::new(0.0, 1.0);
    (psi.adjoint() * comm * psi)[(0, 0)].re
}

pub fn expectation(h: &M, psi: &V) -> f64 {
    (psi.adjoint() * h * psi)[(0, 0)].re
}

pub fn max_abs_diff(a: &V, b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
