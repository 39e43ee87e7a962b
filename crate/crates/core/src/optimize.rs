//! Classical optimizers, parameter initialisation and the FALQON feedback loop.
//!
//! All optimizers maximise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_standard, ParamCircuit, SlotKind, Term, Variant};
use crate::error::{Error, Result};
use crate::objective::{evaluate_state, ObjectiveSpec};
use crate::problem::Graph;
use crate::simulator::{CostTable, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    ShiftRule,
    CentralDiff { h: f64 },
    /// Reverse-mode sweep through the gate list; one forward and one backward pass.
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Method {
    NelderMead,
    /// Nelder-Mead with a wide initial simplex and the tol / iteration-cap
    /// termination contract of COBYLA.
    CobylaStyle,
    Spsa,
    /// Ascent along the gradient with a Barzilai-Borwein trial step and
    /// Armijo backtracking.
    GradientDescent { step: f64, gradient: GradientMode },
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::NelderMead => "nelder-mead",
            Method::CobylaStyle => "cobyla-style",
            Method::Spsa => "spsa",
            Method::GradientDescent { .. } => "gradient-descent",
        }
    }
}

pub const DEFAULT_TOL: f64 = 2e-4;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpsaGains {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaGains {
    fn default() -> Self {
        SpsaGains {
            a: 0.1,
            c: 0.1,
            big_a: 10.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSpec {
    pub method: Method,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub spsa: SpsaGains,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            method: Method::CobylaStyle,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            spsa: SpsaGains::default(),
        }
    }
}

impl OptimizerSpec {
    pub fn new(method: Method) -> Self {
        OptimizerSpec {
            method,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol {} must be > 0", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::Domain("max_iters must be >= 1".into()));
        }
        if let Method::GradientDescent { step, gradient } = self.method {
            if !(step > 0.0) {
                return Err(Error::Domain(format!("step {step} must be > 0")));
            }
            if let GradientMode::CentralDiff { h } = gradient {
                if !(h > 0.0) {
                    return Err(Error::Domain(format!("difference step {h} must be > 0")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub init_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub best_value: f64,
    /// Incumbent value after each iteration, starting with the value at `init_params`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub circuit_calls: u64,
    pub converged: bool,
}

/// Something to maximise. Implementations count their own circuit calls.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        central_difference(self, x, 1e-6)
    }
    fn calls(&self) -> u64;
}

fn central_difference<O: Objective + ?Sized>(obj: &mut O, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        y[k] = x[k] + h;
        let fp = obj.value(&y)?;
        y[k] = x[k] - h;
        let fm = obj.value(&y)?;
        y[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Plain closure objective; gradients by central differences.
pub struct FnObjective<F> {
    f: F,
    dim: usize,
    calls: u64,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { f, dim, calls: 0 }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.calls += 1;
        Ok((self.f)(x))
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// Circuit objective. Gradients of the exact expectation use `mode`; other
/// objectives fall back to central differences of the objective itself.
pub struct CircuitObjective<'a> {
    pub circuit: &'a ParamCircuit,
    pub ct: &'a CostTable,
    pub spec: ObjectiveSpec,
    pub mode: GradientMode,
    calls: u64,
}

impl<'a> CircuitObjective<'a> {
    pub fn new(circuit: &'a ParamCircuit, ct: &'a CostTable, spec: ObjectiveSpec) -> Self {
        CircuitObjective {
            circuit,
            ct,
            spec,
            mode: GradientMode::Adjoint,
            calls: 0,
        }
    }

    pub fn with_gradient(mut self, mode: GradientMode) -> Self {
        self.mode = mode;
        self
    }
}

impl Objective for CircuitObjective<'_> {
    fn dim(&self) -> usize {
        self.circuit.n_params()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.calls += 1;
        let s = self.circuit.state(x, self.ct)?;
        evaluate_state(&s, self.ct, &self.spec)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.spec.is_exact_expectation() {
            let h = match self.mode {
                GradientMode::CentralDiff { h } => h,
                _ => 1e-6,
            };
            return central_difference(self, x, h);
        }
        self.calls += gradient_cost(self.circuit, self.mode);
        gradient(self.circuit, x, self.ct, self.mode)
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// Hardware-equivalent circuit executions charged for one gradient. The
/// adjoint method has no hardware analogue and is charged like the shift rule.
pub fn gradient_cost(circuit: &ParamCircuit, mode: GradientMode) -> u64 {
    match mode {
        GradientMode::CentralDiff { .. } => 2 * circuit.n_params() as u64,
        GradientMode::ShiftRule | GradientMode::Adjoint => {
            let mut n = 0u64;
            for op in circuit.ops() {
                if let Some(a) = op.angle() {
                    if a.slot.is_none() {
                        continue;
                    }
                    n += match op.terms(circuit.edges(), circuit.n_qubits()) {
                        Some(t) => 2 * t.iter().filter(|(_, r)| *r > 0.0).count() as u64,
                        None => 2,
                    };
                }
            }
            n
        }
    }
}

/// `dF/dtheta` of the exact expectation `F = <C>`.
///
/// The shift rule is applied term by term: every slotted op's generator is a
/// sum of commuting pieces with two-point spectra `c +- r`, and for each piece
/// `dF/da = r (F(+pi/4r) - F(-pi/4r))`. Ops without such a split fall back to
/// central differences.
pub fn gradient(circuit: &ParamCircuit, params: &[f64], ct: &CostTable, mode: GradientMode) -> Result<Vec<f64>> {
    circuit.check(params, ct)?;
    match mode {
        GradientMode::Adjoint => Ok(circuit.adjoint_gradient(params, ct, ct.values())?.1),
        GradientMode::CentralDiff { h } => {
            let mut y = params.to_vec();
            let mut g = vec![0.0; params.len()];
            for k in 0..params.len() {
                y[k] = params[k] + h;
                let fp = circuit.expectation(&y, ct)?;
                y[k] = params[k] - h;
                let fm = circuit.expectation(&y, ct)?;
                y[k] = params[k];
                g[k] = (fp - fm) / (2.0 * h);
            }
            Ok(g)
        }
        GradientMode::ShiftRule => {
            let mut g = vec![0.0; params.len()];
            for (idx, op) in circuit.ops().iter().enumerate() {
                let Some(&angle) = op.angle() else { continue };
                let Some(slot) = angle.slot else { continue };
                match op.terms(circuit.edges(), circuit.n_qubits()) {
                    Some(terms) => {
                        for (term, r) in terms {
                            if r <= 0.0 {
                                continue;
                            }
                            let s = PI / (4.0 * r);
                            let fp = circuit.state_with_shift(params, ct, idx, term, s)?.expectation_unchecked(ct);
                            let fm = circuit.state_with_shift(params, ct, idx, term, -s)?.expectation_unchecked(ct);
                            g[slot] += angle.scale * r * (fp - fm);
                        }
                    }
                    None => {
                        log::warn!("op {idx} has no two-level split; using central differences");
                        let h = 1e-5;
                        let fp = circuit
                            .state_with_shift(params, ct, idx, Term::Whole, h)?
                            .expectation_unchecked(ct);
                        let fm = circuit
                            .state_with_shift(params, ct, idx, Term::Whole, -h)?
                            .expectation_unchecked(ct);
                        g[slot] += angle.scale * (fp - fm) / (2.0 * h);
                    }
                }
            }
            Ok(g)
        }
    }
}

struct Tracker {
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<f64>,
    iteration: usize,
}

impl Tracker {
    fn new(x: &[f64], f: f64) -> Self {
        Tracker {
            best_x: x.to_vec(),
            best: f,
            trace: vec![f],
            iteration: 0,
        }
    }

    fn offer(&mut self, x: &[f64], f: f64) {
        if f > self.best {
            self.best = f;
            self.best_x.copy_from_slice(x);
        }
    }

    fn end_iteration(&mut self) {
        self.iteration += 1;
        self.trace.push(self.best);
    }
}

fn finite(f: f64, iteration: usize) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite { iteration })
    }
}

/// Maximises `obj` from `x0`. Every objective evaluation counts as a circuit call.
pub fn maximize<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], spec: &OptimizerSpec) -> Result<OptResult> {
    spec.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    let calls0 = obj.calls();
    let f0 = finite(obj.value(x0)?, 0)?;
    let mut t = Tracker::new(x0, f0);
    let converged = if x0.is_empty() {
        true
    } else {
        match spec.method {
            Method::NelderMead => nelder_mead(obj, x0, f0, 0.1, spec, &mut t)?,
            Method::CobylaStyle => nelder_mead(obj, x0, f0, 0.5, spec, &mut t)?,
            Method::Spsa => spsa(obj, x0, spec, &mut t)?,
            Method::GradientDescent { step, .. } => gradient_ascent(obj, x0, f0, step, spec, &mut t)?,
        }
    };
    Ok(OptResult {
        init_params: x0.to_vec(),
        final_params: t.best_x,
        best_value: t.best,
        trace: t.trace,
        iterations: t.iteration,
        circuit_calls: (obj.calls() - calls0).max(1),
        converged,
    })
}

fn nelder_mead<O: Objective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    f0: f64,
    step: f64,
    spec: &OptimizerSpec,
    t: &mut Tracker,
) -> Result<bool> {
    let d = x0.len();
    // vertices kept sorted best (highest) first
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f0));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += step;
        let f = finite(obj.value(&x)?, 0)?;
        t.offer(&x, f);
        simplex.push((x, f));
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| b.1.total_cmp(&a.1));
    sort(&mut simplex);
    let mut centroid = vec![0.0; d];
    let point = |c: &[f64], w: &[f64], coef: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(c, w)| c + coef * (w - c)).collect()
    };
    for it in 1..=spec.max_iters {
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let xr = point(&centroid, &worst.0, -1.0);
        let fr = finite(obj.value(&xr)?, it)?;
        t.offer(&xr, fr);
        if fr > simplex[0].1 {
            let xe = point(&centroid, &worst.0, -2.0);
            let fe = finite(obj.value(&xe)?, it)?;
            t.offer(&xe, fe);
            simplex[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst.1 {
                let xc = point(&centroid, &worst.0, -0.5);
                let fc = finite(obj.value(&xc)?, it)?;
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst.0, 0.5);
                let fc = finite(obj.value(&xc)?, it)?;
                (xc, fc)
            };
            t.offer(&xc, fc);
            if fc > worst.1.max(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let xs = point(&best, &v.0, 0.5);
                    let fs = finite(obj.value(&xs)?, it)?;
                    t.offer(&xs, fs);
                    *v = (xs, fs);
                }
            }
        }
        sort(&mut simplex);
        t.end_iteration();
        // value spread alone can vanish on a symmetric simplex straddling the optimum
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if simplex[0].1 - simplex[d].1 < spec.tol && diameter < spec.tol.sqrt() {
            return Ok(true);
        }
    }
    Ok(false)
}

const SPSA_WINDOW: usize = 20;

fn spsa<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], spec: &OptimizerSpec, t: &mut Tracker) -> Result<bool> {
    let g = spec.spsa;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = x0.to_vec();
    let d = x.len();
    let mut delta = vec![0.0; d];
    for k in 1..=spec.max_iters {
        let ak = g.a / (k as f64 + g.big_a).powf(g.alpha);
        let ck = g.c / (k as f64).powf(g.gamma);
        for v in delta.iter_mut() {
            *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let xp: Vec<f64> = x.iter().zip(&delta).map(|(x, d)| x + ck * d).collect();
        let xm: Vec<f64> = x.iter().zip(&delta).map(|(x, d)| x - ck * d).collect();
        let fp = finite(obj.value(&xp)?, k)?;
        let fm = finite(obj.value(&xm)?, k)?;
        t.offer(&xp, fp);
        t.offer(&xm, fm);
        let scale = (fp - fm) / (2.0 * ck);
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += ak * scale * di;
        }
        let f = finite(obj.value(&x)?, k)?;
        t.offer(&x, f);
        t.end_iteration();
        let n = t.trace.len();
        if n > SPSA_WINDOW && t.trace[n - 1] - t.trace[n - 1 - SPSA_WINDOW] < spec.tol {
            return Ok(true);
        }
    }
    Ok(false)
}

fn gradient_ascent<O: Objective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    f0: f64,
    step: f64,
    spec: &OptimizerSpec,
    t: &mut Tracker,
) -> Result<bool> {
    let mut x = x0.to_vec();
    let mut f = f0;
    let mut g = obj.gradient(&x)?;
    let mut trial = step;
    let mut stalls = 0;
    for it in 1..=spec.max_iters {
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if !gg.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        if gg.sqrt() < 1e-10 {
            t.end_iteration();
            return Ok(true);
        }
        let mut s = trial;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x + s * g).collect();
            let fn_ = finite(obj.value(&xn)?, it)?;
            if fn_ >= f + 1e-4 * s * gg {
                accepted = Some((xn, fn_));
                break;
            }
            s *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            t.end_iteration();
            return Ok(true);
        };
        let gn = obj.gradient(&xn)?;
        // Barzilai-Borwein step for the next trial
        let sy: f64 = xn
            .iter()
            .zip(&x)
            .zip(gn.iter().zip(&g))
            .map(|((a, b), (c, d))| (a - b) * (d - c))
            .sum();
        let ss: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
        trial = if sy > 0.0 { (ss / sy).clamp(1e-6, 1e3) } else { (2.0 * s).min(1e3) };
        let delta = fn_ - f;
        x = xn;
        f = fn_;
        g = gn;
        t.offer(&x, f);
        t.end_iteration();
        stalls = if delta < spec.tol { stalls + 1 } else { 0 };
        if stalls >= 3 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Uniform draw per slot: `[0, 2pi)` for cost-type, `[0, pi)` for mixer-type.
pub fn init_random(layout: &[SlotKind], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    layout
        .iter()
        .map(|k| match k {
            SlotKind::Gamma => rng.random_range(0.0..2.0 * PI),
            SlotKind::Beta => rng.random_range(0.0..PI),
        })
        .collect()
}

/// Linear ramp `gamma_k = (k/p) dt`, `beta_k = (1 - k/p) dt`, interleaved.
pub fn init_tqa(p: usize, dt: f64) -> Result<Vec<f64>> {
    if p < 1 {
        return Err(Error::InvalidDepth(p));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt {dt} must be > 0")));
    }
    Ok((1..=p)
        .flat_map(|k| {
            let f = k as f64 / p as f64;
            [f * dt, (1.0 - f) * dt]
        })
        .collect())
}

/// Endpoint-preserving piecewise-linear resampling of `seq` onto `m` points.
pub fn resample(seq: &[f64], m: usize) -> Vec<f64> {
    match (seq.len(), m) {
        (_, 0) | (0, _) => Vec::new(),
        (1, _) => vec![seq[0]; m],
        (_, 1) => vec![seq[0]],
        (n, m) => (0..m)
            .map(|j| {
                let u = j as f64 * (n - 1) as f64 / (m - 1) as f64;
                let i = (u.floor() as usize).min(n - 2);
                let frac = u - i as f64;
                seq[i] * (1.0 - frac) + seq[i + 1] * frac
            })
            .collect(),
    }
}

fn uses_standard_layout(v: Variant) -> bool {
    matches!(
        v,
        Variant::Qaoa | Variant::ModifiedQaoa | Variant::WsQaoa | Variant::AbQaoa | Variant::Falqon
    )
}

fn split_layers(params: &[f64]) -> (Vec<f64>, Vec<f64>) {
    params.chunks_exact(2).map(|c| (c[0], c[1])).unzip()
}

fn join_layers(gammas: &[f64], betas: &[f64]) -> Vec<f64> {
    gammas.iter().zip(betas).flat_map(|(g, b)| [*g, *b]).collect()
}

/// Depth `p` to `p + 1` by interpolating the gamma and beta sequences.
pub fn init_interp(params: &[f64], variant: Variant) -> Result<Vec<f64>> {
    if !uses_standard_layout(variant) || params.is_empty() || params.len() % 2 != 0 {
        return Err(Error::UnsupportedLayout(format!(
            "{variant} with {} parameters",
            params.len()
        )));
    }
    let (g, b) = split_layers(params);
    let p = g.len();
    Ok(join_layers(&resample(&g, p + 1), &resample(&b, p + 1)))
}

/// Optimises only a trailing block of slots, holding the rest fixed.
struct Frozen<'o, O: ?Sized> {
    inner: &'o mut O,
    prefix: Vec<f64>,
    buf: Vec<f64>,
}

impl<O: Objective + ?Sized> Objective for Frozen<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim() - self.prefix.len()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.buf.truncate(self.prefix.len());
        self.buf.extend_from_slice(x);
        self.inner.value(&self.buf)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.buf.truncate(self.prefix.len());
        self.buf.extend_from_slice(x);
        let g = self.inner.gradient(&self.buf)?;
        Ok(g[self.prefix.len()..].to_vec())
    }

    fn calls(&self) -> u64 {
        self.inner.calls()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layerwise {
    pub result: OptResult,
    /// Best value after each added layer.
    pub layer_values: Vec<f64>,
}

/// Standard QAOA grown one layer at a time: each new layer starts at zero
/// (the identity) and only its two angles are optimised.
pub fn optimize_layerwise(
    g: &Graph,
    ct: &CostTable,
    p_target: usize,
    objective: ObjectiveSpec,
    spec: &OptimizerSpec,
) -> Result<Layerwise> {
    if p_target < 1 {
        return Err(Error::InvalidDepth(p_target));
    }
    let mut fixed: Vec<f64> = Vec::new();
    let mut init = Vec::new();
    let mut trace = Vec::new();
    let mut layer_values = Vec::new();
    let mut iterations = 0;
    let mut calls = 0;
    let mut converged = true;
    let mut best_value = f64::NEG_INFINITY;
    for p in 1..=p_target {
        let circuit = build_standard(g, p)?;
        let mut obj = CircuitObjective::new(&circuit, ct, objective);
        let x0 = if p == 1 {
            init_random(circuit.slot_kinds(), spec.seed)
        } else {
            vec![0.0, 0.0]
        };
        init.extend_from_slice(&x0);
        let mut frozen = Frozen {
            inner: &mut obj,
            prefix: fixed.clone(),
            buf: fixed.clone(),
        };
        let r = maximize(&mut frozen, &x0, spec)?;
        fixed.extend_from_slice(&r.final_params);
        trace.extend_from_slice(&r.trace);
        layer_values.push(r.best_value);
        iterations += r.iterations;
        calls += r.circuit_calls;
        converged &= r.converged;
        best_value = r.best_value;
    }
    Ok(Layerwise {
        result: OptResult {
            init_params: init,
            final_params: fixed,
            best_value,
            trace,
            iterations,
            circuit_calls: calls,
            converged,
        },
        layer_values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalqonRun {
    /// `beta_k` per layer; the layer's mixer angle is `beta_k * dt`.
    pub betas: Vec<f64>,
    /// `<C>` before the first layer and after each layer (`p_max + 1` values).
    pub trace: Vec<f64>,
    /// Equivalent standard-layout parameters `[dt, beta_1 dt, dt, beta_2 dt, ...]`.
    pub params: Vec<f64>,
}

/// `A = <psi| i[H_d, C] |psi> = -2 Im <psi| H_d (C psi)>` with `H_d = sum_j X_j`.
pub fn commutator_expectation(state: &StateVector, ct: &CostTable) -> f64 {
    let psi = state.amplitudes();
    let n = state.n_qubits();
    let mut acc = C64::new(0.0, 0.0);
    for (k, a) in psi.iter().enumerate() {
        let mut hd = C64::new(0.0, 0.0);
        for q in 0..n {
            let m = k ^ (1 << q);
            hd += psi[m] * ct.values()[m];
        }
        acc += a.conj() * hd;
    }
    -2.0 * acc.im
}

/// Feedback-driven layer construction. Every layer applies the cost phase at
/// `gamma = dt`, then the X mixer at `beta_k dt` with `beta_k = A_{k-1}`
/// measured on the previous layer's output. `beta_k = +A` is the sign that
/// makes `<C>` grow to first order in `dt`.
pub fn falqon_run(g: &Graph, ct: &CostTable, p_max: usize, dt: f64) -> Result<FalqonRun> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt {dt} must be > 0")));
    }
    if ct.len() != 1usize << g.n_vertices() {
        return Err(Error::Dimension {
            expected: 1 << g.n_vertices(),
            got: ct.len(),
        });
    }
    let mut s = StateVector::init_plus(g.n_vertices())?;
    let mut betas = Vec::with_capacity(p_max);
    let mut trace = Vec::with_capacity(p_max + 1);
    let mut params = Vec::with_capacity(2 * p_max);
    trace.push(s.expectation_unchecked(ct));
    let mut a = commutator_expectation(&s, ct);
    for _ in 0..p_max {
        let beta = a;
        s.cost_phase_unchecked(ct, dt);
        s.apply_rx_all(beta * dt);
        betas.push(beta);
        params.extend([dt, beta * dt]);
        trace.push(s.expectation_unchecked(ct));
        a = commutator_expectation(&s, ct);
    }
    Ok(FalqonRun { betas, trace, params })
}

/// Standard-layout start for depth `p` from `handoff` feedback layers.
pub fn falqon_seed(g: &Graph, ct: &CostTable, p: usize, dt: f64, handoff: usize) -> Result<Vec<f64>> {
    if p < 1 {
        return Err(Error::InvalidDepth(p));
    }
    let run = falqon_run(g, ct, handoff.max(1), dt)?;
    let (gs, bs) = split_layers(&run.params);
    Ok(join_layers(&resample(&gs, p), &resample(&bs, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_standard;
    use proptest::prelude::*;

    fn quad(x: &[f64]) -> f64 {
        -x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>()
    }

    fn edge() -> Graph {
        Graph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn nelder_mead_quadratic() {
        let mut obj = FnObjective::new(1, quad);
        let spec = OptimizerSpec {
            tol: 1e-10,
            ..OptimizerSpec::new(Method::NelderMead)
        };
        let r = maximize(&mut obj, &[0.0], &spec).unwrap();
        assert!((r.final_params[0] - 1.0).abs() < 1e-3, "{:?}", r.final_params);
        assert!(r.converged);
        assert!(r.circuit_calls >= r.iterations as u64);
    }

    #[test]
    fn all_methods_solve_a_quadratic() {
        for method in [
            Method::NelderMead,
            Method::CobylaStyle,
            Method::GradientDescent {
                step: 0.1,
                gradient: GradientMode::CentralDiff { h: 1e-5 },
            },
        ] {
            let mut obj = FnObjective::new(3, quad);
            let spec = OptimizerSpec {
                tol: 1e-12,
                max_iters: 5000,
                ..OptimizerSpec::new(method)
            };
            let r = maximize(&mut obj, &[0.0, 0.5, 2.0], &spec).unwrap();
            assert!(r.best_value > -1e-5, "{method:?}: {}", r.best_value);
        }
    }

    #[test]
    fn spsa_is_reproducible_and_improves() {
        let run = || {
            let mut obj = FnObjective::new(2, quad);
            maximize(&mut obj, &[0.0, 0.0], &OptimizerSpec::new(Method::Spsa).with_seed(11)).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert!(a.best_value > -2.0);
    }

    #[test]
    fn non_finite_objective_aborts() {
        let mut obj = FnObjective::new(1, |x: &[f64]| if x[0] > 0.05 { f64::NAN } else { 0.0 });
        let err = maximize(&mut obj, &[0.0], &OptimizerSpec::new(Method::NelderMead)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut obj = FnObjective::new(1, quad);
        let spec = OptimizerSpec {
            tol: 0.0,
            ..Default::default()
        };
        assert!(maximize(&mut obj, &[0.0], &spec).is_err());
        assert!(maximize(&mut obj, &[0.0, 1.0], &OptimizerSpec::default()).is_err());
    }

    #[test]
    fn single_edge_p1_reaches_one() {
        let g = edge();
        let ct = CostTable::from_graph(&g).unwrap();
        let c = build_standard(&g, 1).unwrap();
        for method in [Method::NelderMead, Method::CobylaStyle] {
            let mut obj = CircuitObjective::new(&c, &ct, ObjectiveSpec::default());
            let r = maximize(&mut obj, &[0.7, 0.3], &OptimizerSpec::new(method)).unwrap();
            assert!((r.best_value - 1.0).abs() < 1e-3, "{method:?} {}", r.best_value);
        }
    }

    #[test]
    fn gradient_of_constant_objective_is_zero() {
        let g = Graph::empty(3).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let c = build_standard(&g, 2).unwrap();
        for mode in [GradientMode::ShiftRule, GradientMode::Adjoint, GradientMode::CentralDiff { h: 1e-5 }] {
            let gr = gradient(&c, &[0.3, 0.2, 0.1, 0.5], &ct, mode).unwrap();
            assert!(gr.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_vanishes_at_grid_maximum() {
        // single edge p=1: F = (1 + sin(4 beta) sin(gamma)) / 2, maximal at (pi/2, pi/8)
        let g = edge();
        let ct = CostTable::from_graph(&g).unwrap();
        let c = build_standard(&g, 1).unwrap();
        let mut best = (f64::NEG_INFINITY, vec![0.0, 0.0]);
        for a in 0..=200 {
            for b in 0..=200 {
                let x = vec![a as f64 * PI / 200.0, b as f64 * PI / 400.0];
                let f = c.expectation(&x, &ct).unwrap();
                if f > best.0 {
                    best = (f, x);
                }
            }
        }
        let gr = gradient(&c, &best.1, &ct, GradientMode::ShiftRule).unwrap();
        assert!(gr.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-4, "{gr:?} at {:?}", best.1);
    }

    #[test]
    fn init_examples() {
        let layout = [SlotKind::Gamma, SlotKind::Beta];
        assert_eq!(init_random(&layout, 3).len(), 2);
        assert_eq!(init_random(&layout, 3), init_random(&layout, 3));
        assert_eq!(init_tqa(1, 0.5).unwrap(), vec![0.5, 0.0]);
        let t = init_tqa(2, 0.6).unwrap();
        let want = [0.3, 0.3, 0.6, 0.0];
        assert!(t.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(init_tqa(2, 0.0).is_err());
        assert_eq!(init_interp(&[0.4, 0.2], Variant::Qaoa).unwrap(), vec![0.4, 0.2, 0.4, 0.2]);
        assert!(matches!(
            init_interp(&[0.4, 0.2, 0.1], Variant::MaQaoa),
            Err(Error::UnsupportedLayout(_))
        ));
    }

    #[test]
    fn init_random_bounds() {
        let layout: Vec<SlotKind> = (0..10_000)
            .map(|k| if k % 2 == 0 { SlotKind::Gamma } else { SlotKind::Beta })
            .collect();
        let x = init_random(&layout, 99);
        for (v, k) in x.iter().zip(&layout) {
            let hi = if *k == SlotKind::Gamma { 2.0 * PI } else { PI };
            assert!((0.0..hi).contains(v));
        }
    }

    #[test]
    fn layerwise_values_non_decreasing() {
        let g = Graph::cycle(8).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let lw = optimize_layerwise(&g, &ct, 3, ObjectiveSpec::default(), &OptimizerSpec::default()).unwrap();
        assert_eq!(lw.layer_values.len(), 3);
        assert!(lw.layer_values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_eq!(lw.result.final_params.len(), 6);
        let one = optimize_layerwise(&g, &ct, 1, ObjectiveSpec::default(), &OptimizerSpec::default()).unwrap();
        let c = build_standard(&g, 1).unwrap();
        let mut obj = CircuitObjective::new(&c, &ct, ObjectiveSpec::default());
        let plain = maximize(&mut obj, &init_random(c.slot_kinds(), 0), &OptimizerSpec::default()).unwrap();
        assert_eq!(one.result, plain);
    }

    #[test]
    fn falqon_first_beta_is_zero_and_trace_rises() {
        let g = Graph::cycle(8).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let run = falqon_run(&g, &ct, 200, 0.03).unwrap();
        assert!(run.betas[0].abs() < 1e-12);
        assert_eq!(run.trace.len(), 201);
        for w in run.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(run.trace[200] > run.trace[0] + 0.1);
        let c = build_standard(&g, 200).unwrap();
        let f = c.expectation(&run.params, &ct).unwrap();
        assert!((f - run.trace[200]).abs() < 1e-9);
    }

    #[test]
    fn falqon_opposite_sign_descends() {
        let g = Graph::cycle(8).unwrap();
        let ct = CostTable::from_graph(&g).unwrap();
        let mut s = StateVector::init_plus(8).unwrap();
        let start = s.expectation_diagonal(&ct).unwrap();
        let mut prev = start;
        for _ in 0..200 {
            let beta = -commutator_expectation(&s, &ct);
            s.apply_cost_phase(&ct, 0.03).unwrap();
            s.apply_rx_all(beta * 0.03);
            let f = s.expectation_diagonal(&ct).unwrap();
            assert!(f <= prev + 1e-9);
            prev = f;
        }
        assert!(prev < start - 0.1);
    }

    proptest! {
        #[test]
        fn shift_rule_matches_central_difference(seed in 0u64..300, n in 2usize..6, p in 1usize..4) {
            let g = Graph::random(n, 0.6, seed).unwrap();
            let ct = CostTable::from_graph(&g).unwrap();
            let c = build_standard(&g, p).unwrap();
            let x = init_random(c.slot_kinds(), seed);
            let a = gradient(&c, &x, &ct, GradientMode::ShiftRule).unwrap();
            let b = gradient(&c, &x, &ct, GradientMode::CentralDiff { h: 1e-5 }).unwrap();
            let d = gradient(&c, &x, &ct, GradientMode::Adjoint).unwrap();
            for k in 0..a.len() {
                prop_assert!((a[k] - b[k]).abs() < 1e-6);
                prop_assert!((a[k] - d[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn incumbent_trace_non_decreasing(seed in 0u64..50) {
            let g = Graph::random(4, 0.7, seed).unwrap();
            let ct = CostTable::from_graph(&g).unwrap();
            let c = build_standard(&g, 2).unwrap();
            let x0 = init_random(c.slot_kinds(), seed);
            for method in [Method::NelderMead, Method::Spsa, Method::GradientDescent { step: 0.1, gradient: GradientMode::ShiftRule }] {
                let mut obj = CircuitObjective::new(&c, &ct, ObjectiveSpec::default());
                let r = maximize(&mut obj, &x0, &OptimizerSpec::new(method).with_seed(seed)).unwrap();
                prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
                prop_assert_eq!(r.best_value, *r.trace.last().unwrap());
                prop_assert!(r.circuit_calls >= r.iterations as u64);
                let mut obj2 = CircuitObjective::new(&c, &ct, ObjectiveSpec::default());
                let r2 = maximize(&mut obj2, &x0, &OptimizerSpec::new(method).with_seed(seed)).unwrap();
                prop_assert_eq!(r, r2);
            }
        }

        #[test]
        fn interp_preserves_monotone_sequences(mut v in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
            v.sort_by(f64::total_cmp);
            let params: Vec<f64> = v.iter().flat_map(|x| [*x, -*x]).collect();
            let out = init_interp(&params, Variant::Qaoa).unwrap();
            let (g, b) = split_layers(&out);
            prop_assert_eq!(g.len(), v.len() + 1);
            prop_assert!(g.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            prop_assert!(b.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            prop_assert_eq!(g[0], v[0]);
            prop_assert_eq!(*g.last().unwrap(), *v.last().unwrap());
        }
    }
}
