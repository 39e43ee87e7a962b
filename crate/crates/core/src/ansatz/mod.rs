//! Circuit builders for the QAOA variants.
//!
//! Parameter layouts (slot order) per layer `k`:
//!
//! | variant        | slots                                                  |
//! |----------------|--------------------------------------------------------|
//! | standard       | `gamma_k, beta_k`                                      |
//! | multi-angle    | one per edge (edge order), then one per vertex         |
//! | QAOA+          | standard layers, then `n - 1` ZZ slots and `n` X slots |
//! | modified       | `gamma_k, beta_k`                                      |
//! | warm-start     | `gamma_k, beta_k`                                      |
//! | adaptive bias  | `gamma_k, beta_k`                                      |

mod circuit;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta::relaxation;
use crate::problem::Graph;
use crate::simulator::C64;

pub use circuit::{Angle, InitialState, Op, ParamCircuit, SlotKind, Term};

/// Variant identifiers as they appear in configs and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    Qaoa,
    MaQaoa,
    QaoaPlus,
    ModifiedQaoa,
    WsQaoa,
    AbQaoa,
    Falqon,
    Rqaoa,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Qaoa,
        Variant::MaQaoa,
        Variant::QaoaPlus,
        Variant::ModifiedQaoa,
        Variant::WsQaoa,
        Variant::AbQaoa,
        Variant::Falqon,
        Variant::Rqaoa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Qaoa => "qaoa",
            Variant::MaQaoa => "ma-qaoa",
            Variant::QaoaPlus => "qaoa-plus",
            Variant::ModifiedQaoa => "modified-qaoa",
            Variant::WsQaoa => "ws-qaoa",
            Variant::AbQaoa => "ab-qaoa",
            Variant::Falqon => "falqon",
            Variant::Rqaoa => "rqaoa",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::UnknownIdentifier(s.to_string()))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.as_str().to_string()
    }
}

/// Circuit family plus any variant-specific data.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantSpec {
    Standard,
    MultiAngle,
    Plus,
    Modified,
    WarmStart { c_star: Vec<f64>, eps: f64 },
    AdaptiveBias { h: Vec<f64>, ell: f64 },
}

pub const DEFAULT_WS_EPS: f64 = 0.25;

pub fn build(g: &Graph, p: usize, spec: &VariantSpec) -> Result<ParamCircuit> {
    match spec {
        VariantSpec::Standard => build_standard(g, p),
        VariantSpec::MultiAngle => build_multi_angle(g, p),
        VariantSpec::Plus => build_plus_depth(g, p),
        VariantSpec::Modified => build_modified(g, p),
        VariantSpec::WarmStart { c_star, eps } => build_warm_start(g, p, c_star, *eps),
        VariantSpec::AdaptiveBias { h, .. } => build_adaptive_bias(g, p, h),
    }
}

fn check_depth(p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::InvalidDepth(p));
    }
    Ok(())
}

fn standard_layers(p: usize, ops: &mut Vec<Op>, kinds: &mut Vec<SlotKind>) {
    for _ in 0..p {
        let g = kinds.len();
        ops.push(Op::CostPhase(Angle::slot(g)));
        ops.push(Op::MixerX(Angle::slot(g + 1)));
        kinds.extend([SlotKind::Gamma, SlotKind::Beta]);
    }
}

/// `|+>^n`, then `p` rounds of `exp(-i gamma_k C)` and `exp(-i beta_k sum X)`.
pub fn build_standard(g: &Graph, p: usize) -> Result<ParamCircuit> {
    check_depth(p)?;
    let mut ops = Vec::with_capacity(2 * p);
    let mut kinds = Vec::with_capacity(2 * p);
    standard_layers(p, &mut ops, &mut kinds);
    ParamCircuit::new(g.n_vertices(), InitialState::Plus, ops, kinds, Variant::Qaoa, p, g.edges().to_vec())
}

/// Independent angle per edge and per vertex in every layer; `(n + m) p` slots.
pub fn build_multi_angle(g: &Graph, p: usize) -> Result<ParamCircuit> {
    check_depth(p)?;
    let n = g.n_vertices();
    let mut ops = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..p {
        for e in g.edges() {
            ops.push(Op::EdgePhase {
                i: e.i,
                j: e.j,
                w: e.w,
                angle: Angle::slot(kinds.len()),
            });
            kinds.push(SlotKind::Gamma);
        }
        for q in 0..n {
            // RX(2 beta) = exp(-i beta X)
            ops.push(Op::Rx {
                q,
                angle: Angle::scaled(kinds.len(), 2.0),
            });
            kinds.push(SlotKind::Beta);
        }
    }
    ParamCircuit::new(n, InitialState::Plus, ops, kinds, Variant::MaQaoa, p, g.edges().to_vec())
}

/// Single-layer QAOA+: one standard layer followed by the augmenting block.
pub fn build_plus(g: &Graph) -> Result<ParamCircuit> {
    build_plus_depth(g, 1)
}

/// `p` standard layers followed by a problem-independent block: `RZZ` on the
/// nearest-neighbour chain `(q, q+1)` with one slot each, then an X rotation
/// per qubit with one slot each. Adds `2n - 1` slots.
pub fn build_plus_depth(g: &Graph, p: usize) -> Result<ParamCircuit> {
    check_depth(p)?;
    let n = g.n_vertices();
    let mut ops = Vec::new();
    let mut kinds = Vec::new();
    standard_layers(p, &mut ops, &mut kinds);
    for q in 0..n.saturating_sub(1) {
        ops.push(Op::Rzz {
            i: q,
            j: q + 1,
            angle: Angle::slot(kinds.len()),
        });
        kinds.push(SlotKind::Gamma);
    }
    for q in 0..n {
        ops.push(Op::Rx {
            q,
            angle: Angle::scaled(kinds.len(), 2.0),
        });
        kinds.push(SlotKind::Beta);
    }
    ParamCircuit::new(n, InitialState::Plus, ops, kinds, Variant::QaoaPlus, p, g.edges().to_vec())
}

/// Cost block built from controlled rotations: for each edge the higher
/// vertex controls an `RY(gamma)` on the lower one (via `U3(gamma/2,0,0)`,
/// CX, `U3(-gamma/2,0,0)`, CX), then one CX per edge. All edges share the
/// layer's `gamma`; the mixer is the standard X mixer.
pub fn build_modified(g: &Graph, p: usize) -> Result<ParamCircuit> {
    check_depth(p)?;
    let mut ops = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..p {
        let gamma = kinds.len();
        for e in g.edges() {
            let (control, target) = (e.j, e.i);
            ops.push(Op::Ry {
                q: target,
                angle: Angle::scaled(gamma, 0.5),
            });
            ops.push(Op::Cx { control, target });
            ops.push(Op::Ry {
                q: target,
                angle: Angle::scaled(gamma, -0.5),
            });
            ops.push(Op::Cx { control, target });
        }
        for e in g.edges() {
            ops.push(Op::Cx {
                control: e.j,
                target: e.i,
            });
        }
        ops.push(Op::MixerX(Angle::slot(gamma + 1)));
        kinds.extend([SlotKind::Gamma, SlotKind::Beta]);
    }
    ParamCircuit::new(g.n_vertices(), InitialState::Plus, ops, kinds, Variant::ModifiedQaoa, p, g.edges().to_vec())
}

/// `theta_i = 2 asin(sqrt(clamp(c_i, eps, 1 - eps)))`.
pub fn warm_start_angles(c_star: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("warm-start eps {eps} not in (0, 0.5)")));
    }
    c_star
        .iter()
        .map(|&c| {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Domain(format!("relaxed value {c} not in [0, 1]")));
            }
            Ok(2.0 * c.clamp(eps, 1.0 - eps).sqrt().asin())
        })
        .collect()
}

/// Warm-started QAOA: product `RY(theta_i)|0>` start and the matching
/// per-qubit mixer `RY(theta_i) RZ(2 beta) RY(-theta_i)`, which is
/// `exp(-i beta (sin theta X + cos theta Z))` and equals the X mixer at
/// `c_i = 1/2`.
pub fn build_warm_start(g: &Graph, p: usize, c_star: &[f64], eps: f64) -> Result<ParamCircuit> {
    check_depth(p)?;
    let n = g.n_vertices();
    if c_star.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: c_star.len(),
        });
    }
    let thetas = warm_start_angles(c_star, eps)?;
    let mut ops = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..p {
        let gamma = kinds.len();
        ops.push(Op::CostPhase(Angle::slot(gamma)));
        for (q, &t) in thetas.iter().enumerate() {
            ops.push(Op::Ry { q, angle: Angle::constant(-t) });
            ops.push(Op::Rz {
                q,
                angle: Angle::scaled(gamma + 1, 2.0),
            });
            ops.push(Op::Ry { q, angle: Angle::constant(t) });
        }
        kinds.extend([SlotKind::Gamma, SlotKind::Beta]);
    }
    ParamCircuit::new(n, InitialState::ProductRy(thetas), ops, kinds, Variant::WsQaoa, p, g.edges().to_vec())
}

/// Lowest eigenvector of `X - h Z`, eigenvalue `-sqrt(1 + h^2)`; `|->` at `h = 0`.
pub fn bias_ground_state(h: f64) -> [C64; 2] {
    let r = (1.0 + h * h).sqrt();
    let b = h - r;
    let norm = (1.0 + b * b).sqrt();
    [C64::new(1.0 / norm, 0.0), C64::new(b / norm, 0.0)]
}

/// Adaptive-bias QAOA: mixer `exp(-i beta_k (X_j - h_j Z_j))` per qubit and
/// the product ground state of that mixer as the start state.
pub fn build_adaptive_bias(g: &Graph, p: usize, h: &[f64]) -> Result<ParamCircuit> {
    check_depth(p)?;
    let n = g.n_vertices();
    if h.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: h.len(),
        });
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite bias field".into()));
    }
    let mut ops = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..p {
        let gamma = kinds.len();
        ops.push(Op::CostPhase(Angle::slot(gamma)));
        for (q, &hq) in h.iter().enumerate() {
            ops.push(Op::BiasedX {
                q,
                h: hq,
                angle: Angle::slot(gamma + 1),
            });
        }
        kinds.extend([SlotKind::Gamma, SlotKind::Beta]);
    }
    let initial = InitialState::Product(h.iter().map(|&x| bias_ground_state(x)).collect());
    ParamCircuit::new(n, initial, ops, kinds, Variant::AbQaoa, p, g.edges().to_vec())
}

/// `h_j <- h_j - ell (h_j - <Z_j>)`.
pub fn update_bias(h: &[f64], z_exp: &[f64], ell: f64) -> Result<Vec<f64>> {
    if ell <= 0.0 || !ell.is_finite() {
        return Err(Error::Domain(format!("learning rate {ell} must be > 0")));
    }
    if h.len() != z_exp.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: z_exp.len(),
        });
    }
    Ok(h.iter().zip(z_exp).map(|(h, z)| h - ell * (h - z)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    /// Relaxed assignment in `[0, 1]^n`.
    pub c: Vec<f64>,
    pub converged: bool,
}

/// Continuous relaxation for warm starting.
///
/// Solves the rank-`k` vector relaxation of the cut, then reads each vertex's
/// value off its alignment with a reference vector: `c_i = (1 - y_i . y_ref) / 2`.
/// The reference is the vector of a vertex drawn with `seed`, so that vertex
/// sits at 0 and its antipodes at 1.
pub fn warm_start_relaxation(g: &Graph, rank: usize, iters: usize, seed: u64) -> Result<Relaxation> {
    if rank < 2 {
        return Err(Error::Domain(format!("relaxation rank {rank} must be >= 2")));
    }
    let n = g.n_vertices();
    if g.n_edges() == 0 {
        return Ok(Relaxation {
            c: vec![0.5; n],
            converged: true,
        });
    }
    let sol = relaxation::solve(g, rank, iters, seed);
    if !sol.converged {
        log::warn!("warm-start relaxation did not converge in {iters} iterations");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_4ef);
    let reference = &sol.vectors[rng.random_range(0..n)];
    let c = sol
        .vectors
        .iter()
        .map(|y| {
            let dot: f64 = y.iter().zip(reference).map(|(a, b)| a * b).sum();
            ((1.0 - dot) / 2.0).clamp(0.0, 1.0)
        })
        .collect();
    Ok(Relaxation {
        c,
        converged: sol.converged,
    })
}


/// Expands standard `[gamma_1, beta_1, ...]` into the multi-angle layout with
/// every edge slot at `gamma_k` and every vertex slot at `beta_k`.
pub fn tie_multi_angle(g: &Graph, standard: &[f64]) -> Vec<f64> {
    standard
        .chunks_exact(2)
        .flat_map(|gb| {
            std::iter::repeat_n(gb[0], g.n_edges()).chain(std::iter::repeat_n(gb[1], g.n_vertices()))
        })
        .collect()
}
