//! Dense state-vector simulation.
//!
//! Qubit `q` is bit `q` of the basis index (qubit 0 is least significant),
//! matching the bitstring convention in [`crate::problem`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{BitString, Graph};

pub type C64 = Complex64;

/// Row-major 2x2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

pub const MAX_QUBITS: usize = 24;

const UNITARY_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub mod gates {
    //! Single-qubit matrices. Rotations follow `R_P(t) = exp(-i t P / 2)`.
    use super::{Mat2, C64, I, ONE, ZERO};

    pub const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
    pub const X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
    pub const Y: Mat2 = [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]];
    pub const Z: Mat2 = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];

    pub fn rx(t: f64) -> Mat2 {
        let (s, c) = (t / 2.0).sin_cos();
        [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
    }

    pub fn ry(t: f64) -> Mat2 {
        let (s, c) = (t / 2.0).sin_cos();
        [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
    }

    pub fn rz(t: f64) -> Mat2 {
        [[C64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, C64::from_polar(1.0, t / 2.0)]]
    }

    /// Qiskit-style `U3(theta, phi, lambda)`; `u3(t, 0, 0) == ry(t)`.
    pub fn u3(theta: f64, phi: f64, lambda: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        [
            [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
            [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
        ]
    }

    /// `exp(-i t (X - h Z))`, closed form for a traceless 2x2 generator.
    pub fn biased_x(t: f64, h: f64) -> Mat2 {
        let r = (1.0 + h * h).sqrt();
        let (s, c) = (t * r).sin_cos();
        let k = s / r;
        // cos(tr) I - i sin(tr)/r [[-h, 1], [1, h]]
        [
            [C64::new(c, h * k), C64::new(0.0, -k)],
            [C64::new(0.0, -k), C64::new(c, -h * k)],
        ]
    }

    pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    pub fn adjoint(a: &Mat2) -> Mat2 {
        [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
    }
}

/// Diagonal of the cost Hamiltonian, `values[k] = C(k)`.
///
/// When the table has few distinct values (integer weights), each basis
/// state also carries an index into `levels` so a cost layer needs one
/// `sin_cos` per level instead of one per amplitude.
#[derive(Debug, Clone)]
pub struct CostTable {
    values: Vec<f64>,
    levels: Option<(Vec<f64>, Vec<u16>)>,
}

const MAX_LEVELS: usize = 4096;

impl CostTable {
    pub fn from_graph(g: &Graph) -> Result<Self> {
        let n = g.n_vertices();
        if n > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{n} qubits exceeds the cap of {MAX_QUBITS}")));
        }
        Ok(Self::from_values((0..(1u64 << n)).map(|k| g.cut_value(k)).collect()))
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let mut distinct: Vec<f64> = Vec::new();
        let mut index = Vec::with_capacity(values.len());
        let mut lookup: BTreeMap<u64, u16> = BTreeMap::new();
        for &v in &values {
            let key = v.to_bits();
            let idx = match lookup.get(&key) {
                Some(&i) => i,
                None => {
                    if distinct.len() >= MAX_LEVELS {
                        return CostTable { values, levels: None };
                    }
                    distinct.push(v);
                    let i = (distinct.len() - 1) as u16;
                    lookup.insert(key, i);
                    i
                }
            };
            index.push(idx);
        }
        CostTable {
            values,
            levels: Some((distinct, index)),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Measurement outcomes keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    pub n_qubits: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BitString, u64)> + '_ {
        self.counts
            .iter()
            .map(|(&k, &c)| (BitString::from_index(k, self.n_qubits), c))
    }
}

/// Two-level gate instances used by the noisy executor.
#[derive(Debug, Clone, Copy)]
pub enum Gate {
    OneQubit { q: usize, u: Mat2 },
    /// `exp(-i angle/2 Z_i Z_j)`.
    Zz { i: usize, j: usize, angle: f64 },
    Cx { control: usize, target: usize },
}

impl Gate {
    fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::OneQubit { q, .. } => (q, None),
            Gate::Zz { i, j, .. } => (i, Some(j)),
            Gate::Cx { control, target } => (control, Some(target)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    fn check_size(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("qubit count {n} not in 1..={MAX_QUBITS}")));
        }
        Ok(())
    }

    /// `|+>^n`.
    pub fn init_plus(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        let a = (0.5f64).powf(n as f64 / 2.0);
        Ok(StateVector {
            n,
            amps: vec![C64::new(a, 0.0); 1 << n],
        })
    }

    pub fn basis(n: usize, k: u64) -> Result<Self> {
        Self::check_size(n)?;
        if k >= 1 << n {
            return Err(Error::Index(format!("basis index {k} for {n} qubits")));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[k as usize] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Product of single-qubit states, one `[a0, a1]` per qubit.
    pub fn product(qubits: &[[C64; 2]]) -> Result<Self> {
        let n = qubits.len();
        Self::check_size(n)?;
        let mut amps = vec![ONE];
        for (q, s) in qubits.iter().enumerate() {
            let mut next = vec![ZERO; amps.len() * 2];
            let half = 1 << q;
            for (k, a) in amps.iter().enumerate() {
                next[k] = a * s[0];
                next[k + half] = a * s[1];
            }
            amps = next;
        }
        Ok(StateVector { n, amps })
    }

    /// `prod_i RY(theta_i)|0>`.
    pub fn init_product_ry(thetas: &[f64]) -> Result<Self> {
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("non-finite RY angle".into()));
        }
        let qubits: Vec<[C64; 2]> = thetas
            .iter()
            .map(|t| {
                let (s, c) = (t / 2.0).sin_cos();
                [C64::new(c, 0.0), C64::new(s, 0.0)]
            })
            .collect();
        Self::product(&qubits)
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::InvalidSize(format!("{len} amplitudes is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        Self::check_size(n)?;
        let s = StateVector { n, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant(format!("state norm^2 = {}", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_table(&self, ct: &CostTable) -> Result<()> {
        if ct.len() != self.amps.len() {
            return Err(Error::Dimension {
                expected: self.amps.len(),
                got: ct.len(),
            });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::Index(format!("qubit {q} on a {}-qubit register", self.n)));
        }
        Ok(())
    }

    /// `exp(-i gamma C)`.
    pub fn apply_cost_phase(&mut self, ct: &CostTable, gamma: f64) -> Result<()> {
        self.check_table(ct)?;
        self.cost_phase_unchecked(ct, gamma);
        Ok(())
    }

    pub(crate) fn cost_phase_unchecked(&mut self, ct: &CostTable, gamma: f64) {
        match &ct.levels {
            Some((distinct, index)) => {
                let phases: Vec<C64> = distinct
                    .iter()
                    .map(|&c| C64::from_polar(1.0, -gamma * c))
                    .collect();
                for (a, &l) in self.amps.iter_mut().zip(index) {
                    *a *= phases[l as usize];
                }
            }
            None => {
                for (a, &c) in self.amps.iter_mut().zip(&ct.values) {
                    *a *= C64::from_polar(1.0, -gamma * c);
                }
            }
        }
    }

    /// `exp(-i beta sum_j X_j)`, i.e. `RX(2 beta)` on every qubit.
    pub fn apply_rx_all(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let c = C64::new(c, 0.0);
        let ms = C64::new(0.0, -s);
        for q in 0..self.n {
            let stride = 1 << q;
            for base in (0..self.amps.len()).step_by(stride << 1) {
                for k in base..base + stride {
                    let a = self.amps[k];
                    let b = self.amps[k + stride];
                    self.amps[k] = c * a + ms * b;
                    self.amps[k + stride] = ms * a + c * b;
                }
            }
        }
    }

    /// Applies `u` to qubit `q` after checking it is unitary.
    pub fn apply_1q(&mut self, q: usize, u: &Mat2) -> Result<()> {
        self.check_qubit(q)?;
        let p = gates::matmul(&gates::adjoint(u), u);
        let off = (p[0][0] - ONE).norm() + (p[1][1] - ONE).norm() + p[0][1].norm() + p[1][0].norm();
        if off > UNITARY_TOL {
            return Err(Error::Invariant(format!("matrix is not unitary (deviation {off:.3e})")));
        }
        self.apply_1q_unchecked(q, u);
        Ok(())
    }

    pub(crate) fn apply_1q_unchecked(&mut self, q: usize, u: &Mat2) {
        let stride = 1 << q;
        for base in (0..self.amps.len()).step_by(stride << 1) {
            for k in base..base + stride {
                let a = self.amps[k];
                let b = self.amps[k + stride];
                self.amps[k] = u[0][0] * a + u[0][1] * b;
                self.amps[k + stride] = u[1][0] * a + u[1][1] * b;
            }
        }
    }

    /// `exp(-i angle/2 Z_i Z_j)`; same action as the CNOT-RZ(angle)-CNOT ladder.
    pub fn apply_zz(&mut self, i: usize, j: usize, angle: f64) -> Result<()> {
        self.check_qubit(i)?;
        self.check_qubit(j)?;
        if i == j {
            return Err(Error::Index(format!("ZZ rotation needs distinct qubits, got {i} twice")));
        }
        self.zz_unchecked(i, j, angle);
        Ok(())
    }

    pub(crate) fn zz_unchecked(&mut self, i: usize, j: usize, angle: f64) {
        let same = C64::from_polar(1.0, -angle / 2.0);
        let diff = same.conj();
        for (k, a) in self.amps.iter_mut().enumerate() {
            if ((k >> i) ^ (k >> j)) & 1 == 0 {
                *a *= same;
            } else {
                *a *= diff;
            }
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!("CX needs distinct qubits, got {control} twice")));
        }
        self.cx_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn cx_unchecked(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for k in 0..self.amps.len() {
            if k & cbit != 0 && k & tbit == 0 {
                self.amps.swap(k, k | tbit);
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::OneQubit { q, u } => self.apply_1q(q, &u),
            Gate::Zz { i, j, angle } => self.apply_zz(i, j, angle),
            Gate::Cx { control, target } => self.apply_cx(control, target),
        }
    }

    /// Applies `gate`, then independently on each touched qubit inserts a
    /// uniformly random Pauli with probability `p_noise`. Averaged over
    /// trajectories this realises the channel
    /// `rho -> (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)` per qubit.
    pub fn apply_gate_with_depolarizing<R: Rng + ?Sized>(
        &mut self,
        gate: &Gate,
        p_noise: f64,
        rng: &mut R,
    ) -> Result<()> {
        if !(0.0..=1.0).contains(&p_noise) {
            return Err(Error::Domain(format!("noise probability {p_noise}")));
        }
        self.apply_gate(gate)?;
        let (a, b) = gate.qubits();
        self.depolarize(a, p_noise, rng);
        if let Some(b) = b {
            self.depolarize(b, p_noise, rng);
        }
        Ok(())
    }

    pub(crate) fn depolarize<R: Rng + ?Sized>(&mut self, q: usize, p_noise: f64, rng: &mut R) {
        if p_noise > 0.0 && rng.random::<f64>() < p_noise {
            let pauli = match rng.random_range(0..3) {
                0 => &gates::X,
                1 => &gates::Y,
                _ => &gates::Z,
            };
            self.apply_1q_unchecked(q, pauli);
        }
    }

    /// `sum_k |a_k|^2 C(k)`.
    pub fn expectation_diagonal(&self, ct: &CostTable) -> Result<f64> {
        self.check_table(ct)?;
        Ok(self.expectation_unchecked(ct))
    }

    pub(crate) fn expectation_unchecked(&self, ct: &CostTable) -> f64 {
        self.amps
            .iter()
            .zip(&ct.values)
            .map(|(a, c)| a.norm_sqr() * c)
            .sum()
    }

    /// `<Z_q>`, with `Z|0> = |0>`.
    pub fn z_expectation(&self, q: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| if (k >> q) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    pub fn z_expectations(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for (k, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, zq) in z.iter_mut().enumerate() {
                if (k >> q) & 1 == 0 {
                    *zq += p;
                } else {
                    *zq -= p;
                }
            }
        }
        z
    }

    /// `<Z_i Z_j>`.
    pub fn zz_expectation(&self, i: usize, j: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if ((k >> i) ^ (k >> j)) & 1 == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }

    /// `shots` i.i.d. computational-basis measurements.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<Histogram> {
        if shots == 0 {
            return Err(Error::Domain("shots must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            *counts.entry(k as u64).or_insert(0) += 1;
        }
        Ok(Histogram {
            n_qubits: self.n,
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn states_close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amps.iter().zip(&b.amps).all(|(x, y)| close(*x, *y, tol))
    }

    /// Equal up to a global phase.
    fn same_ray(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        (a.inner(b).norm() - 1.0).abs() < tol
    }

    fn edge_table() -> CostTable {
        CostTable::from_graph(&Graph::new(2, [(0, 1, 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn init_plus_amplitudes() {
        let s = StateVector::init_plus(1).unwrap();
        assert!(s.amps.iter().all(|a| close(*a, C64::new(FRAC_1_SQRT_2, 0.0), 1e-15)));
        let s = StateVector::init_plus(2).unwrap();
        assert!(s.amps.iter().all(|a| close(*a, C64::new(0.5, 0.0), 1e-15)));
        let s = StateVector::init_plus(3).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.amps.windows(2).all(|w| w[0] == w[1]));
        assert!(StateVector::init_plus(0).is_err());
        assert!(StateVector::init_plus(25).is_err());
    }

    #[test]
    fn product_ry_states() {
        let plus = StateVector::init_plus(3).unwrap();
        let ry = StateVector::init_product_ry(&[FRAC_PI_2; 3]).unwrap();
        assert!(states_close(&plus, &ry, 1e-12));
        let zero = StateVector::init_product_ry(&[0.0; 3]).unwrap();
        assert!(states_close(&zero, &StateVector::basis(3, 0).unwrap(), 1e-15));
        let one = StateVector::init_product_ry(&[PI]).unwrap();
        assert!(same_ray(&one, &StateVector::basis(1, 1).unwrap(), 1e-12));
        // amplitude is the product of cos/sin factors
        let th = [0.3, 1.1, 2.0];
        let s = StateVector::init_product_ry(&th).unwrap();
        for k in 0..8usize {
            let expect: f64 = (0..3)
                .map(|q| if (k >> q) & 1 == 0 { (th[q] / 2.0).cos() } else { (th[q] / 2.0).sin() })
                .product();
            assert!((s.amps[k].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_phase_identities() {
        let ct = CostTable::from_graph(&Graph::complete(3, 1.0).unwrap()).unwrap();
        let plus = StateVector::init_plus(3).unwrap();
        let mut s = plus.clone();
        s.apply_cost_phase(&ct, 0.0).unwrap();
        assert!(states_close(&s, &plus, 1e-15));
        s.apply_cost_phase(&ct, 2.0 * PI).unwrap();
        assert!(states_close(&s, &plus, 1e-12));
        let wrong = edge_table();
        assert!(matches!(s.apply_cost_phase(&wrong, 0.1), Err(Error::Dimension { .. })));
    }

    #[test]
    fn cost_phase_table_without_levels() {
        let values: Vec<f64> = (0..(1 << 13)).map(|k| (k as f64).sqrt()).collect();
        let ct = CostTable::from_values(values.clone());
        assert!(ct.levels.is_none());
        let mut s = StateVector::init_plus(13).unwrap();
        s.apply_cost_phase(&ct, 0.7).unwrap();
        let a = s.amps[100];
        let expect = C64::from_polar((0.5f64).powf(6.5), -0.7 * values[100]);
        assert!(close(a, expect, 1e-12));
    }

    #[test]
    fn rx_all_examples() {
        let plus = StateVector::init_plus(2).unwrap();
        let mut s = plus.clone();
        s.apply_rx_all(0.0);
        assert!(states_close(&s, &plus, 1e-15));
        let mut z = StateVector::basis(3, 0).unwrap();
        z.apply_rx_all(FRAC_PI_2);
        assert!(same_ray(&z, &StateVector::basis(3, 7).unwrap(), 1e-12));
        let mut s = plus.clone();
        s.apply_rx_all(0.3);
        assert!(same_ray(&s, &plus, 1e-12));
    }

    #[test]
    fn one_qubit_gates() {
        let mut s = StateVector::basis(2, 0).unwrap();
        s.apply_1q(0, &gates::IDENTITY).unwrap();
        assert!(states_close(&s, &StateVector::basis(2, 0).unwrap(), 0.0));
        s.apply_1q(0, &gates::X).unwrap();
        // "01" in x_0 x_1 order: index 1
        assert!(states_close(&s, &StateVector::basis(2, 1).unwrap(), 0.0));
        let mut p = StateVector::init_plus(1).unwrap();
        let phi = 0.9;
        p.apply_1q(0, &gates::rz(phi)).unwrap();
        assert!(close(p.amps[0], C64::from_polar(FRAC_1_SQRT_2, -phi / 2.0), 1e-15));
        assert!(close(p.amps[1], C64::from_polar(FRAC_1_SQRT_2, phi / 2.0), 1e-15));
        let bad = [[ONE, ONE], [ZERO, ONE]];
        assert!(matches!(p.apply_1q(0, &bad), Err(Error::Invariant(_))));
        assert!(matches!(p.apply_1q(1, &gates::X), Err(Error::Index(_))));
        assert!(gates::matmul(&gates::u3(0.4, 0.0, 0.0), &gates::adjoint(&gates::ry(0.4)))
            .iter()
            .flatten()
            .zip(gates::IDENTITY.iter().flatten())
            .all(|(a, b)| close(*a, *b, 1e-15)));
    }

    #[test]
    fn zz_examples() {
        let plus = StateVector::init_plus(2).unwrap();
        let mut s = plus.clone();
        s.apply_zz(0, 1, 0.0).unwrap();
        assert!(states_close(&s, &plus, 0.0));
        assert!(s.apply_zz(1, 1, 0.2).is_err());

        // additivity
        let mut a = plus.clone();
        a.apply_zz(0, 1, 0.3).unwrap();
        a.apply_zz(0, 1, 0.5).unwrap();
        let mut b = plus.clone();
        b.apply_zz(0, 1, 0.8).unwrap();
        assert!(states_close(&a, &b, 1e-14));

        // exp(-i g C) on one edge == RZZ(-w g) times the global phase exp(-i g w / 2)
        let ct = edge_table();
        for gi in 0..9 {
            let g = -2.0 + 0.5 * gi as f64;
            let mut by_table = plus.clone();
            by_table.apply_cost_phase(&ct, g).unwrap();
            let mut by_gate = plus.clone();
            by_gate.apply_zz(0, 1, -g).unwrap();
            let phase = C64::from_polar(1.0, -g / 2.0);
            for (x, y) in by_table.amps.iter().zip(&by_gate.amps) {
                assert!(close(*x, phase * y, 1e-12));
            }
        }
    }

    #[test]
    fn zz_matches_cnot_rz_cnot() {
        let mut a = StateVector::init_product_ry(&[0.3, 1.2, 2.2]).unwrap();
        a.apply_1q(1, &gates::rx(0.7)).unwrap();
        let mut b = a.clone();
        a.apply_zz(0, 2, 0.77).unwrap();
        b.apply_cx(0, 2).unwrap();
        b.apply_1q(2, &gates::rz(0.77)).unwrap();
        b.apply_cx(0, 2).unwrap();
        assert!(states_close(&a, &b, 1e-12));
    }

    #[test]
    fn expectation_examples() {
        let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 2.5), (0, 3, 0.5)]).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let plus = StateVector::init_plus(4).unwrap();
        assert!((plus.expectation_diagonal(&ct).unwrap() - g.total_weight() / 2.0).abs() < 1e-12);
        for k in 0..16 {
            let b = StateVector::basis(4, k).unwrap();
            assert_eq!(b.expectation_diagonal(&ct).unwrap(), ct.values()[k as usize]);
        }
    }

    #[test]
    fn single_edge_p1_grid_maximum() {
        let ct = edge_table();
        let mut best = 0.0f64;
        let steps = 200;
        for a in 0..steps {
            for b in 0..steps {
                let gamma = 2.0 * PI * a as f64 / steps as f64;
                let beta = PI * b as f64 / steps as f64;
                let mut s = StateVector::init_plus(2).unwrap();
                s.apply_cost_phase(&ct, gamma).unwrap();
                s.apply_rx_all(beta);
                best = best.max(s.expectation_diagonal(&ct).unwrap());
            }
        }
        // gamma = pi/2, beta = pi/8 lie on the grid
        assert!((best - 1.0).abs() < 1e-6, "{best}");
    }

    #[test]
    fn sampling() {
        let b = StateVector::basis(3, 5).unwrap();
        let h = b.sample(1000, 1).unwrap();
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.counts[&5], 1000);

        let shots = 100_000u64;
        let h = StateVector::init_plus(1).unwrap().sample(shots, 42).unwrap();
        let sigma = (shots as f64 * 0.25).sqrt();
        for k in 0..2 {
            let c = *h.counts.get(&k).unwrap_or(&0) as f64;
            assert!((c - shots as f64 / 2.0).abs() < 5.0 * sigma);
        }
        assert_eq!(h, StateVector::init_plus(1).unwrap().sample(shots, 42).unwrap());
        assert!(b.sample(0, 1).is_err());
    }

    #[test]
    fn sampled_mean_matches_exact_expectation() {
        let g = Graph::random(7, 0.5, 3).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        for seed in 0..5u64 {
            let mut s = StateVector::init_plus(7).unwrap();
            s.apply_cost_phase(&ct, 0.4 + seed as f64 * 0.1).unwrap();
            s.apply_rx_all(0.3);
            let exact = s.expectation_diagonal(&ct).unwrap();
            let shots = 20_000;
            let h = s.sample(shots, seed).unwrap();
            let vals: Vec<(f64, f64)> =
                h.counts.iter().map(|(&k, &c)| (ct.values()[k as usize], c as f64)).collect();
            let mean = vals.iter().map(|(v, c)| v * c).sum::<f64>() / shots as f64;
            let var = vals.iter().map(|(v, c)| (v - mean).powi(2) * c).sum::<f64>() / shots as f64;
            let se = (var / shots as f64).sqrt();
            assert!((mean - exact).abs() < 3.0 * se + 1e-12, "{mean} vs {exact}");
        }
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gate = Gate::Zz { i: 0, j: 1, angle: 0.4 };
        let mut a = StateVector::init_plus(2).unwrap();
        let mut b = a.clone();
        a.apply_gate(&gate).unwrap();
        b.apply_gate_with_depolarizing(&gate, 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(b.apply_gate_with_depolarizing(&gate, 1.5, &mut rng).is_err());
    }

    #[test]
    fn depolarizing_z_matches_density_matrix() {
        // Density-matrix oracle: rho = U|0><0|U^dag pushed through
        // (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z), then Tr(Z rho).
        fn channel_z(u: &Mat2, p: f64) -> f64 {
            let ket0: Mat2 = [[ONE, ZERO], [ZERO, ZERO]];
            let rho = gates::matmul(&gates::matmul(u, &ket0), &gates::adjoint(u));
            let mut out = [[ZERO; 2]; 2];
            let terms = [(gates::IDENTITY, 1.0 - p), (gates::X, p / 3.0), (gates::Y, p / 3.0), (gates::Z, p / 3.0)];
            for (pauli, w) in terms {
                let t = gates::matmul(&gates::matmul(&pauli, &rho), &pauli);
                for r in 0..2 {
                    for c in 0..2 {
                        out[r][c] += t[r][c] * w;
                    }
                }
            }
            (out[0][0] - out[1][1]).re
        }
        for &p in &[1.0, 0.3] {
            let theta = 0.8f64;
            let exact = channel_z(&gates::rx(theta), p);
            assert!((exact - theta.cos() * (1.0 - 4.0 * p / 3.0)).abs() < 1e-12);
            let trials = 10_000;
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let gate = Gate::OneQubit { q: 0, u: gates::rx(theta) };
            let zs: Vec<f64> = (0..trials)
                .map(|_| {
                    let mut s = StateVector::basis(1, 0).unwrap();
                    s.apply_gate_with_depolarizing(&gate, p, &mut rng).unwrap();
                    s.z_expectation(0)
                })
                .collect();
            let mean = zs.iter().sum::<f64>() / trials as f64;
            let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            let se = (var / trials as f64).sqrt();
            assert!((mean - exact).abs() < 3.0 * se, "p={p}: {mean} vs {exact} (se {se})");
        }
    }

    #[test]
    fn correlations() {
        let s = StateVector::init_plus(3).unwrap();
        assert!(s.zz_expectation(0, 1).abs() < 1e-15);
        assert_eq!(StateVector::basis(2, 0).unwrap().zz_expectation(0, 1), 1.0);
        assert_eq!(StateVector::basis(2, 2).unwrap().zz_expectation(0, 1), -1.0);
        let b = StateVector::basis(3, 0b101).unwrap();
        assert_eq!(b.z_expectations(), vec![-1.0, 1.0, -1.0]);
        assert_eq!(b.z_expectation(1), 1.0);
    }

    proptest! {
        #[test]
        fn norm_preserved_over_long_sequences(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::random(5, 0.5, seed).unwrap();
            let ct = CostTable::from_graph(&g).unwrap();
            let mut s = StateVector::init_plus(5).unwrap();
            for _ in 0..2000 {
                match rng.random_range(0..5) {
                    0 => s.apply_cost_phase(&ct, rng.random_range(-4.0..4.0)).unwrap(),
                    1 => s.apply_rx_all(rng.random_range(-4.0..4.0)),
                    2 => {
                        let q = rng.random_range(0..5);
                        s.apply_1q(q, &gates::u3(rng.random(), rng.random(), rng.random())).unwrap()
                    }
                    3 => {
                        let i = rng.random_range(0..5);
                        let j = (i + rng.random_range(1..5)) % 5;
                        s.apply_zz(i, j, rng.random_range(-4.0..4.0)).unwrap()
                    }
                    _ => {
                        let i = rng.random_range(0..5);
                        let j = (i + rng.random_range(1..5)) % 5;
                        s.apply_cx(i, j).unwrap()
                    }
                }
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn cost_phase_is_additive(g1 in -5.0f64..5.0, g2 in -5.0f64..5.0, seed in 0u64..50) {
            let g = Graph::random(5, 0.6, seed).unwrap();
            let ct = CostTable::from_graph(&g).unwrap();
            let mut base = StateVector::init_plus(5).unwrap();
            base.apply_rx_all(0.37);
            let mut a = base.clone();
            a.apply_cost_phase(&ct, g1).unwrap();
            a.apply_cost_phase(&ct, g2).unwrap();
            let mut b = base;
            b.apply_cost_phase(&ct, g1 + g2).unwrap();
            prop_assert!(states_close(&a, &b, 1e-12));
        }

        #[test]
        fn biased_x_is_unitary(t in -4.0f64..4.0, h in -3.0f64..3.0) {
            let u = gates::biased_x(t, h);
            let p = gates::matmul(&gates::adjoint(&u), &u);
            prop_assert!(close(p[0][0], ONE, 1e-12) && close(p[1][1], ONE, 1e-12));
            prop_assert!(close(p[0][1], ZERO, 1e-12));
        }
    }
}
