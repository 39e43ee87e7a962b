//! Objective functionals on circuit output distributions.
//!
//! Everything is phrased for maximisation of the cut value `C`.

use serde::{Deserialize, Serialize};

use crate::ansatz::ParamCircuit;
use crate::error::{Error, Result};
use crate::problem::Graph;
use crate::simulator::{CostTable, Histogram, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Expectation,
    /// Mean of the best `alpha` fraction of the distribution (upper tail).
    Cvar { alpha: f64 },
    /// `(1/eta) log E[exp(eta C)]`.
    Gibbs { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case")]
pub enum Estimator {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub estimator: Estimator,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Expectation,
            estimator: Estimator::Exact,
        }
    }
}

impl ObjectiveSpec {
    pub fn expectation() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ObjectiveKind::Cvar { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::Domain(format!("CVaR alpha {alpha} not in (0, 1]")));
            }
            ObjectiveKind::Gibbs { eta } if !(eta > 0.0 && eta.is_finite()) => {
                return Err(Error::Domain(format!("Gibbs eta {eta} must be > 0")));
            }
            _ => {}
        }
        if let Estimator::Sampled { shots: 0, .. } = self.estimator {
            return Err(Error::Domain("shots must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_exact_expectation(&self) -> bool {
        matches!(
            (self.kind, self.estimator),
            (ObjectiveKind::Expectation, Estimator::Exact)
        )
    }
}

/// Objective value of the circuit's output distribution.
pub fn evaluate(circuit: &ParamCircuit, params: &[f64], ct: &CostTable, spec: &ObjectiveSpec) -> Result<f64> {
    spec.validate()?;
    let state = circuit.state(params, ct)?;
    evaluate_state(&state, ct, spec)
}

pub fn evaluate_state(state: &StateVector, ct: &CostTable, spec: &ObjectiveSpec) -> Result<f64> {
    if state.amplitudes().len() != ct.len() {
        return Err(Error::Dimension {
            expected: ct.len(),
            got: state.amplitudes().len(),
        });
    }
    let (probs, costs): (Vec<f64>, Vec<f64>) = match spec.estimator {
        Estimator::Exact => (state.probabilities(), ct.values().to_vec()),
        Estimator::Sampled { shots, seed } => {
            let h = state.sample(shots, seed)?;
            let total = h.shots() as f64;
            h.counts
                .iter()
                .map(|(&k, &c)| (c as f64 / total, ct.values()[k as usize]))
                .unzip()
        }
    };
    Ok(distribution_objective(&probs, &costs, spec.kind))
}

/// Objective of a discrete distribution given as parallel probability and
/// cost slices.
pub fn distribution_objective(probs: &[f64], costs: &[f64], kind: ObjectiveKind) -> f64 {
    match kind {
        ObjectiveKind::Expectation => probs.iter().zip(costs).map(|(p, c)| p * c).sum(),
        ObjectiveKind::Cvar { alpha } => cvar(probs, costs, alpha),
        ObjectiveKind::Gibbs { eta } => gibbs(probs, costs, eta),
    }
}

fn cvar(probs: &[f64], costs: &[f64], alpha: f64) -> f64 {
    let total: f64 = probs.iter().sum();
    let mut order: Vec<usize> = (0..costs.len()).filter(|&k| probs[k] > 0.0).collect();
    order.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(a.cmp(&b)));
    let budget = alpha * total;
    let mut mass = 0.0;
    let mut acc = 0.0;
    for k in order {
        let take = probs[k].min(budget - mass);
        if take <= 0.0 {
            break;
        }
        acc += take * costs[k];
        mass += take;
    }
    if mass > 0.0 { acc / mass } else { 0.0 }
}

// The minimisation form -log<exp(-eta E)> with E = -C, divided by eta.
fn gibbs(probs: &[f64], costs: &[f64], eta: f64) -> f64 {
    let shift = probs
        .iter()
        .zip(costs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, c)| *c)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return 0.0;
    }
    let total: f64 = probs.iter().sum();
    let s: f64 = probs
        .iter()
        .zip(costs)
        .map(|(p, c)| p * (eta * (c - shift)).exp())
        .sum();
    shift + (s / total).ln() / eta
}

pub fn approx_ratio_expectation(f_star: f64, c_max: f64) -> Result<f64> {
    if c_max <= 0.0 {
        return Err(Error::Degenerate(format!("c_max = {c_max}")));
    }
    Ok(f_star / c_max)
}

/// Best sampled cut relative to the optimum.
pub fn approx_ratio_best_sampled(hist: &Histogram, g: &Graph, c_max: f64) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    if c_max <= 0.0 {
        return Err(Error::Degenerate(format!("c_max = {c_max}")));
    }
    let best = hist
        .counts
        .keys()
        .map(|&k| g.cut_value(k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best / c_max)
}
