//! Parameterised gate programs and their execution on [`StateVector`].
//!
//! Every parameterised op is `exp(-i a G)` for an angle `a = scale * theta[slot] + offset`
//! and a fixed Hermitian generator `G`. The generator is what the gradient
//! code differentiates against; see [`Op::terms`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::Edge;
use crate::simulator::{gates, CostTable, Gate, StateVector, C64};

use super::Variant;

/// Affine reference to a parameter slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    pub slot: Option<usize>,
    pub scale: f64,
    pub offset: f64,
}

impl Angle {
    pub fn slot(slot: usize) -> Self {
        Angle {
            slot: Some(slot),
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn scaled(slot: usize, scale: f64) -> Self {
        Angle {
            slot: Some(slot),
            scale,
            offset: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Angle {
            slot: None,
            scale: 0.0,
            offset: value,
        }
    }

    #[inline]
    pub fn value(&self, params: &[f64]) -> f64 {
        match self.slot {
            Some(s) => self.scale * params[s] + self.offset,
            None => self.offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    /// `exp(-i a C)` with `C` the instance cost table.
    CostPhase(Angle),
    /// `exp(-i a sum_j X_j)`.
    MixerX(Angle),
    /// `exp(-i a w (1 - Z_i Z_j) / 2)`: one edge term of the cost Hamiltonian.
    EdgePhase { i: usize, j: usize, w: f64, angle: Angle },
    /// `RZZ(a) = exp(-i a Z_i Z_j / 2)`.
    Rzz { i: usize, j: usize, angle: Angle },
    Rx { q: usize, angle: Angle },
    Ry { q: usize, angle: Angle },
    Rz { q: usize, angle: Angle },
    /// `exp(-i a (X - h Z))`.
    BiasedX { q: usize, h: f64, angle: Angle },
    Cx { control: usize, target: usize },
}

/// One commuting piece of an op's generator with a two-point spectrum
/// `{c - r, c + r}`. Shifting only this piece by `+-pi/(4r)` gives the
/// parameter-shift rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Edge { i: usize, j: usize, w: f64 },
    X(usize),
    Whole,
}

impl Op {
    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Op::CostPhase(a) | Op::MixerX(a) => Some(a),
            Op::EdgePhase { angle, .. }
            | Op::Rzz { angle, .. }
            | Op::Rx { angle, .. }
            | Op::Ry { angle, .. }
            | Op::Rz { angle, .. }
            | Op::BiasedX { angle, .. } => Some(angle),
            Op::Cx { .. } => None,
        }
    }

    /// Decomposition of the generator into commuting two-level terms with
    /// their half-gaps `r`. `None` if the generator has no such split.
    pub fn terms(&self, edges: &[Edge], n: usize) -> Option<Vec<(Term, f64)>> {
        match *self {
            Op::CostPhase(_) => Some(
                edges
                    .iter()
                    .map(|e| (Term::Edge { i: e.i, j: e.j, w: e.w }, e.w.abs() / 2.0))
                    .collect(),
            ),
            Op::MixerX(_) => Some((0..n).map(|q| (Term::X(q), 1.0)).collect()),
            Op::EdgePhase { w, .. } => Some(vec![(Term::Whole, w.abs() / 2.0)]),
            Op::Rzz { .. } | Op::Rx { .. } | Op::Ry { .. } | Op::Rz { .. } => Some(vec![(Term::Whole, 0.5)]),
            Op::BiasedX { h, .. } => Some(vec![(Term::Whole, (1.0 + h * h).sqrt())]),
            Op::Cx { .. } => Some(Vec::new()),
        }
    }

    /// Applies the op with an explicit angle value.
    pub(crate) fn apply_with(&self, s: &mut StateVector, ct: &CostTable, a: f64) {
        match *self {
            Op::CostPhase(_) => s.cost_phase_unchecked(ct, a),
            Op::MixerX(_) => s.apply_rx_all(a),
            Op::EdgePhase { i, j, w, .. } => edge_phase(s, i, j, w * a),
            Op::Rzz { i, j, .. } => s.zz_unchecked(i, j, a),
            Op::Rx { q, .. } => s.apply_1q_unchecked(q, &gates::rx(a)),
            Op::Ry { q, .. } => s.apply_1q_unchecked(q, &gates::ry(a)),
            Op::Rz { q, .. } => s.apply_1q_unchecked(q, &gates::rz(a)),
            Op::BiasedX { q, h, .. } => s.apply_1q_unchecked(q, &gates::biased_x(a, h)),
            Op::Cx { control, target } => s.cx_unchecked(control, target),
        }
    }

    /// Applies the op's inverse.
    pub(crate) fn apply_inverse(&self, s: &mut StateVector, ct: &CostTable, a: f64) {
        match *self {
            Op::Cx { control, target } => s.cx_unchecked(control, target),
            _ => self.apply_with(s, ct, -a),
        }
    }

    /// `<l| G |psi>` for the op's full generator.
    pub(crate) fn generator_matrix_element(&self, l: &[C64], psi: &[C64], ct: &CostTable, n: usize) -> C64 {
        match *self {
            Op::CostPhase(_) => l
                .iter()
                .zip(psi)
                .zip(ct.values())
                .map(|((a, b), c)| a.conj() * b * c)
                .sum(),
            Op::MixerX(_) => (0..n).map(|q| x_element(l, psi, q)).sum(),
            Op::EdgePhase { i, j, w, .. } => {
                let mut acc = C64::new(0.0, 0.0);
                for (k, (a, b)) in l.iter().zip(psi).enumerate() {
                    if ((k >> i) ^ (k >> j)) & 1 == 1 {
                        acc += a.conj() * b;
                    }
                }
                acc * w
            }
            Op::Rzz { i, j, .. } => {
                let acc: C64 = l
                    .iter()
                    .zip(psi)
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let v = a.conj() * b;
                        if ((k >> i) ^ (k >> j)) & 1 == 0 { v } else { -v }
                    })
                    .sum();
                acc * 0.5
            }
            Op::Rx { q, .. } => x_element(l, psi, q) * 0.5,
            Op::Ry { q, .. } => {
                let bit = 1usize << q;
                let acc: C64 = l
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        // (Y psi)_k = -i psi_{k|bit} if bit clear, +i psi_{k^bit} otherwise
                        let y = if k & bit == 0 {
                            C64::new(0.0, -1.0) * psi[k | bit]
                        } else {
                            C64::new(0.0, 1.0) * psi[k ^ bit]
                        };
                        a.conj() * y
                    })
                    .sum();
                acc * 0.5
            }
            Op::Rz { q, .. } => z_element(l, psi, q) * 0.5,
            Op::BiasedX { q, h, .. } => x_element(l, psi, q) - z_element(l, psi, q) * h,
            Op::Cx { .. } => C64::new(0.0, 0.0),
        }
    }

    /// Physical gates and their durations for depth accounting and noise.
    fn physical(&self, params: &[f64], edges: &[Edge], n: usize, out: &mut Vec<Gate>) {
        let a = self.angle().map(|x| x.value(params)).unwrap_or(0.0);
        match *self {
            Op::CostPhase(_) => {
                for e in edges {
                    out.push(Gate::Zz { i: e.i, j: e.j, angle: -e.w * a });
                }
            }
            Op::MixerX(_) => {
                for q in 0..n {
                    out.push(Gate::OneQubit { q, u: gates::rx(2.0 * a) });
                }
            }
            Op::EdgePhase { i, j, w, .. } => out.push(Gate::Zz { i, j, angle: -w * a }),
            Op::Rzz { i, j, .. } => out.push(Gate::Zz { i, j, angle: a }),
            Op::Rx { q, .. } => out.push(Gate::OneQubit { q, u: gates::rx(a) }),
            Op::Ry { q, .. } => out.push(Gate::OneQubit { q, u: gates::ry(a) }),
            Op::Rz { q, .. } => out.push(Gate::OneQubit { q, u: gates::rz(a) }),
            Op::BiasedX { q, h, .. } => out.push(Gate::OneQubit { q, u: gates::biased_x(a, h) }),
            Op::Cx { control, target } => out.push(Gate::Cx { control, target }),
        }
    }
}

/// `exp(-i t (1 - Z_i Z_j)/2)`: phase `e^{-it}` where bits `i`, `j` differ.
pub(crate) fn edge_phase(s: &mut StateVector, i: usize, j: usize, t: f64) {
    let ph = C64::from_polar(1.0, -t);
    for (k, a) in s.amplitudes_mut().iter_mut().enumerate() {
        if ((k >> i) ^ (k >> j)) & 1 == 1 {
            *a *= ph;
        }
    }
}

fn x_element(l: &[C64], psi: &[C64], q: usize) -> C64 {
    let bit = 1usize << q;
    l.iter()
        .enumerate()
        .map(|(k, a)| a.conj() * psi[k ^ bit])
        .sum()
}

fn z_element(l: &[C64], psi: &[C64], q: usize) -> C64 {
    l.iter()
        .zip(psi)
        .enumerate()
        .map(|(k, (a, b))| {
            let v = a.conj() * b;
            if (k >> q) & 1 == 0 { v } else { -v }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Plus,
    /// `prod_i RY(theta_i)|0>`.
    ProductRy(Vec<f64>),
    /// Arbitrary product state, `[a0, a1]` per qubit.
    Product(Vec<[C64; 2]>),
}

impl InitialState {
    pub fn prepare(&self, n: usize) -> Result<StateVector> {
        match self {
            InitialState::Plus => StateVector::init_plus(n),
            InitialState::ProductRy(t) => StateVector::init_product_ry(t),
            InitialState::Product(q) => StateVector::product(q),
        }
    }
}

/// Initialisation range of a slot: cost-type angles draw from `[0, 2pi)`,
/// mixer-type angles from `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Gamma,
    Beta,
}

#[derive(Debug, Clone)]
pub struct ParamCircuit {
    n_qubits: usize,
    initial: InitialState,
    ops: Vec<Op>,
    slot_kinds: Vec<SlotKind>,
    variant: Variant,
    depth_p: usize,
    edges: Vec<Edge>,
}

impl ParamCircuit {
    pub fn new(
        n_qubits: usize,
        initial: InitialState,
        ops: Vec<Op>,
        slot_kinds: Vec<SlotKind>,
        variant: Variant,
        depth_p: usize,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let n_params = slot_kinds.len();
        let mut used = vec![false; n_params];
        for op in &ops {
            if let Some(Angle { slot: Some(s), .. }) = op.angle() {
                if *s >= n_params {
                    return Err(Error::Invariant(format!("slot {s} >= n_params {n_params}")));
                }
                used[*s] = true;
            }
            let qubits: Vec<usize> = match *op {
                Op::CostPhase(_) | Op::MixerX(_) => vec![],
                Op::EdgePhase { i, j, .. } | Op::Rzz { i, j, .. } => vec![i, j],
                Op::Rx { q, .. } | Op::Ry { q, .. } | Op::Rz { q, .. } | Op::BiasedX { q, .. } => vec![q],
                Op::Cx { control, target } => vec![control, target],
            };
            if qubits.iter().any(|&q| q >= n_qubits) {
                return Err(Error::Index(format!("{op:?} on a {n_qubits}-qubit register")));
            }
        }
        if let Some(s) = used.iter().position(|u| !u) {
            return Err(Error::Invariant(format!("slot {s} is never referenced")));
        }
        Ok(ParamCircuit {
            n_qubits,
            initial,
            ops,
            slot_kinds,
            variant,
            depth_p,
            edges,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.slot_kinds.len()
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.initial
    }

    pub fn slot_kinds(&self) -> &[SlotKind] {
        &self.slot_kinds
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn depth_p(&self) -> usize {
        self.depth_p
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub(crate) fn check(&self, params: &[f64], ct: &CostTable) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        if ct.len() != 1 << self.n_qubits {
            return Err(Error::Dimension {
                expected: 1 << self.n_qubits,
                got: ct.len(),
            });
        }
        Ok(())
    }

    /// Output state for the given parameters.
    pub fn state(&self, params: &[f64], ct: &CostTable) -> Result<StateVector> {
        self.check(params, ct)?;
        let mut s = self.initial.prepare(self.n_qubits)?;
        for op in &self.ops {
            let a = op.angle().map(|x| x.value(params)).unwrap_or(0.0);
            op.apply_with(&mut s, ct, a);
        }
        Ok(s)
    }

    /// Runs the circuit with an extra `exp(-i shift G_term)` right after op `at`.
    pub(crate) fn state_with_shift(
        &self,
        params: &[f64],
        ct: &CostTable,
        at: usize,
        term: Term,
        shift: f64,
    ) -> Result<StateVector> {
        self.check(params, ct)?;
        let mut s = self.initial.prepare(self.n_qubits)?;
        for (idx, op) in self.ops.iter().enumerate() {
            let a = op.angle().map(|x| x.value(params)).unwrap_or(0.0);
            op.apply_with(&mut s, ct, a);
            if idx == at {
                match term {
                    Term::Whole => op.apply_with(&mut s, ct, shift),
                    Term::Edge { i, j, w } => edge_phase(&mut s, i, j, w * shift),
                    Term::X(q) => s.apply_1q_unchecked(q, &gates::rx(2.0 * shift)),
                }
            }
        }
        Ok(s)
    }

    /// `F = <psi|C|psi>`.
    pub fn expectation(&self, params: &[f64], ct: &CostTable) -> Result<f64> {
        Ok(self.state(params, ct)?.expectation_unchecked(ct))
    }

    /// Expectation of a diagonal observable and its gradient in one forward
    /// and one backward sweep (reverse-mode through the gate list).
    pub fn adjoint_gradient(&self, params: &[f64], ct: &CostTable, observable: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut psi = self.state(params, ct)?;
        if observable.len() != psi.amplitudes().len() {
            return Err(Error::Dimension {
                expected: psi.amplitudes().len(),
                got: observable.len(),
            });
        }
        let mut lam = psi.clone();
        for (a, o) in lam.amplitudes_mut().iter_mut().zip(observable) {
            *a *= o;
        }
        let value: f64 = psi
            .amplitudes()
            .iter()
            .zip(observable)
            .map(|(a, o)| a.norm_sqr() * o)
            .sum();
        let mut grad = vec![0.0; self.n_params()];
        for op in self.ops.iter().rev() {
            let angle = op.angle().copied();
            let a = angle.map(|x| x.value(params)).unwrap_or(0.0);
            if let Some(Angle { slot: Some(s), scale, .. }) = angle {
                let m = op.generator_matrix_element(lam.amplitudes(), psi.amplitudes(), ct, self.n_qubits);
                grad[s] += 2.0 * m.im * scale;
            }
            op.apply_inverse(&mut psi, ct, a);
            op.apply_inverse(&mut lam, ct, a);
        }
        Ok((value, grad))
    }

    /// One stochastic trajectory with depolarizing noise after every
    /// physical gate.
    pub fn noisy_state<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        ct: &CostTable,
        p_noise: f64,
        rng: &mut R,
    ) -> Result<StateVector> {
        self.check(params, ct)?;
        let mut s = self.initial.prepare(self.n_qubits)?;
        let mut buf = Vec::new();
        for op in &self.ops {
            buf.clear();
            op.physical(params, &self.edges, self.n_qubits, &mut buf);
            for g in &buf {
                s.apply_gate_with_depolarizing(g, p_noise, rng)?;
            }
        }
        Ok(s)
    }

    /// Logical depth under greedy ASAP layering: gates on disjoint qubits share
    /// a layer, a ZZ interaction costs 3 layers (CNOT, RZ, CNOT), every other
    /// gate 1. State preparation is not counted.
    pub fn circuit_depth(&self) -> usize {
        let zeros = vec![0.0; self.n_params()];
        let mut ready = vec![0usize; self.n_qubits];
        let mut buf = Vec::new();
        for op in &self.ops {
            buf.clear();
            op.physical(&zeros, &self.edges, self.n_qubits, &mut buf);
            for g in &buf {
                let (qs, dur): (Vec<usize>, usize) = match *g {
                    Gate::OneQubit { q, .. } => (vec![q], 1),
                    Gate::Zz { i, j, .. } => (vec![i, j], 3),
                    Gate::Cx { control, target } => (vec![control, target], 1),
                };
                let start = qs.iter().map(|&q| ready[q]).max().unwrap_or(0);
                for q in qs {
                    ready[q] = start + dur;
                }
            }
        }
        ready.into_iter().max().unwrap_or(0)
    }
}
