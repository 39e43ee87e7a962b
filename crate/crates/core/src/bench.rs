//! Benchmark harness: dataset generation, the variant sweep, aggregation and
//! output files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{
    build_adaptive_bias, build_modified, build_multi_angle, build_plus_depth, build_standard,
    build_warm_start, update_bias, warm_start_relaxation, ParamCircuit, Variant,
};
use crate::error::{Error, Result};
use crate::meta::{rqaoa_solve, RqaoaInner};
use crate::objective::{approx_ratio_best_sampled, approx_ratio_expectation, ObjectiveSpec};
use crate::optimize::{
    falqon_run, falqon_seed, init_random, maximize, CircuitObjective, OptResult, OptimizerSpec,
};
use crate::problem::{brute_force_max, Graph};
use crate::simulator::{CostTable, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Complete,
    Regular,
    Random,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Complete, Family::Regular, Family::Random];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Regular => "regular",
            Family::Random => "random",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownIdentifier(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub instances_complete: usize,
    pub instances_per_family: usize,
    pub degree: usize,
    pub edge_p: (f64, f64),
    pub master_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            families: Family::ALL.to_vec(),
            sizes: (4..=18).collect(),
            instances_complete: 1,
            instances_per_family: 5,
            degree: 3,
            edge_p: (0.3, 0.5),
            master_seed: 2024,
        }
    }
}

/// Per-variant knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantSettings {
    pub ws_eps: f64,
    pub ws_iters: usize,
    pub ab_ell: f64,
    pub ab_rounds: usize,
    pub falqon_dt: f64,
    pub falqon_plus: bool,
    pub falqon_handoff: usize,
    pub rqaoa_cutoff: usize,
    pub rqaoa_starts: usize,
}

impl Default for VariantSettings {
    fn default() -> Self {
        VariantSettings {
            ws_eps: crate::ansatz::DEFAULT_WS_EPS,
            ws_iters: 1000,
            ab_ell: 0.5,
            ab_rounds: 4,
            falqon_dt: 0.3,
            falqon_plus: false,
            falqon_handoff: 10,
            rqaoa_cutoff: crate::meta::DEFAULT_RQAOA_CUTOFF,
            rqaoa_starts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub variants: Vec<Variant>,
    pub depths: Vec<usize>,
    pub optimizer: OptimizerSpec,
    pub objective: ObjectiveSpec,
    /// Depolarizing probability per gate; 0 disables noise.
    pub noise: f64,
    pub noise_trajectories: usize,
    pub repetitions: usize,
    /// Shots for the best-sampled ratio; 0 disables sampling.
    pub sample_shots: u64,
    pub settings: VariantSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            variants: vec![
                Variant::Qaoa,
                Variant::MaQaoa,
                Variant::QaoaPlus,
                Variant::ModifiedQaoa,
                Variant::WsQaoa,
                Variant::AbQaoa,
                Variant::Falqon,
                Variant::Rqaoa,
            ],
            depths: vec![1, 2, 4, 8],
            optimizer: OptimizerSpec::default(),
            objective: ObjectiveSpec::default(),
            noise: 0.0,
            noise_trajectories: 1000,
            repetitions: 1,
            sample_shots: 1024,
            settings: VariantSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if let Some(&n) = d.sizes.iter().find(|&&n| n < 2 || n > MAX_QUBITS) {
            return Err(Error::InvalidSize(format!(
                "dataset size {n} outside 2..={MAX_QUBITS}"
            )));
        }
        let (lo, hi) = d.edge_p;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Domain(format!("edge_p range ({lo}, {hi})")));
        }
        if let Some(&p) = self.depths.iter().find(|&&p| p < 1) {
            return Err(Error::InvalidDepth(p));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Domain(format!("noise {} not in [0, 1]", self.noise)));
        }
        if self.noise > 0.0 && self.noise_trajectories == 0 {
            return Err(Error::Domain("noise_trajectories must be >= 1".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::Domain("repetitions must be >= 1".into()));
        }
        let s = &self.settings;
        if !(s.ws_eps > 0.0 && s.ws_eps < 0.5) || !(s.ab_ell > 0.0) || !(s.falqon_dt > 0.0) || s.rqaoa_cutoff < 1 {
            return Err(Error::Domain(format!("variant settings {s:?}")));
        }
        self.optimizer.validate()?;
        self.objective.validate()
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Deterministic child seed from a parent seed and a list of labels.
pub fn derive_seed(parent: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(parent), |h, &p| mix(h ^ p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub id: String,
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub edge_p: Option<f64>,
    pub n_edges: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub meta: InstanceMeta,
    pub graph: Graph,
}

impl Instance {
    /// Wraps a loaded graph; the family is read off the structure (complete
    /// unit-weight, regular, otherwise random).
    pub fn from_graph(id: &str, graph: Graph, seed: u64) -> Self {
        let n = graph.n_vertices();
        let degrees = graph.degrees();
        let family = if graph.is_unit_weight() && graph.n_edges() == n * n.saturating_sub(1) / 2 {
            Family::Complete
        } else if graph.n_edges() > 0 && degrees.iter().all(|&d| d == degrees[0]) {
            Family::Regular
        } else {
            Family::Random
        };
        Instance {
            meta: InstanceMeta {
                id: id.to_string(),
                family,
                n,
                seed,
                edge_p: None,
                n_edges: graph.n_edges(),
                file: String::new(),
            },
            graph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub instances: Vec<InstanceMeta>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub skipped: Vec<String>,
    pub master_seed: u64,
}

impl Dataset {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            master_seed: self.master_seed,
            instances: self.instances.iter().map(|i| i.meta.clone()).collect(),
            skipped: self.skipped.clone(),
        }
    }

    /// Writes `manifest.json` and one graph file per instance under `dir/graphs`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let graphs = dir.join("graphs");
        fs::create_dir_all(&graphs).map_err(|e| Error::io(&graphs, e))?;
        for inst in &self.instances {
            inst.graph.save(&dir.join(&inst.meta.file))?;
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serialises");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let instances = m
            .instances
            .into_iter()
            .map(|meta| {
                let graph = Graph::load(&dir.join(&meta.file))?;
                Ok(Instance { meta, graph })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            instances,
            skipped: m.skipped,
            master_seed: m.master_seed,
        })
    }
}

const FAMILY_TAG: [u64; 3] = [1, 2, 3];
const EDGELESS_RETRIES: u64 = 1000;

/// Instances for every (family, size) pair with seeds derived from the master seed.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for &family in &spec.families {
        for &n in &spec.sizes {
            let count = match family {
                Family::Complete => spec.instances_complete,
                _ => spec.instances_per_family,
            };
            if family == Family::Regular && ((n * spec.degree) % 2 != 0 || spec.degree >= n) {
                let msg = format!("regular n={n} d={}: infeasible degree", spec.degree);
                log::info!("skipping {msg}");
                skipped.push(msg);
                continue;
            }
            for k in 0..count {
                let seed = derive_seed(spec.master_seed, &[FAMILY_TAG[family as usize], n as u64, k as u64]);
                let (graph, edge_p) = match family {
                    Family::Complete => (Graph::complete(n, 1.0)?, None),
                    Family::Regular => (Graph::regular(n, spec.degree, seed)?, None),
                    Family::Random => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let (lo, hi) = spec.edge_p;
                        let p = if hi > lo { rng.random_range(lo..hi) } else { lo };
                        let mut found = None;
                        for attempt in 0..EDGELESS_RETRIES {
                            let g = Graph::random(n, p, derive_seed(seed, &[attempt]))?;
                            if g.n_edges() > 0 {
                                found = Some(g);
                                break;
                            }
                        }
                        let g = found.ok_or(Error::GenerationFailed {
                            attempts: EDGELESS_RETRIES as usize,
                        })?;
                        (g, Some(p))
                    }
                };
                let id = format!("{family}-n{n:02}-{k}");
                instances.push(Instance {
                    meta: InstanceMeta {
                        file: format!("graphs/{id}.json"),
                        id,
                        family,
                        n,
                        seed,
                        edge_p,
                        n_edges: graph.n_edges(),
                    },
                    graph,
                });
            }
        }
    }
    Ok(Dataset {
        instances,
        skipped,
        master_seed: spec.master_seed,
    })
}

/// Greedy ASAP layer count; see [`ParamCircuit::circuit_depth`].
pub fn circuit_depth(c: &ParamCircuit) -> usize {
    c.circuit_depth()
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub alpha_exp: f64,
    pub alpha_best: Option<f64>,
    pub best_value: f64,
    pub c_max: f64,
    pub iterations: usize,
    pub circuit_calls: u64,
    pub circuit_depth: usize,
    pub composite_depth: u64,
    pub cos_sim: Option<f64>,
    pub wall_ms: u64,
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "variant",
    "family",
    "n",
    "p",
    "seed",
    "alpha_exp",
    "alpha_best",
    "best_value",
    "c_max",
    "iterations",
    "circuit_calls",
    "circuit_depth",
    "composite_depth",
    "cos_sim",
    "wall_ms",
    "status",
];

pub type RecordKey = (Variant, Family, usize, usize, u64);

impl RunRecord {
    pub fn key(&self) -> RecordKey {
        (self.variant, self.family, self.n, self.p, self.seed)
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Parameter vectors of one cell, stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub variant: Variant,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub instance: String,
    pub init_params: Vec<f64>,
    pub final_params: Vec<f64>,
}

impl ParamsRecord {
    pub fn key(&self) -> RecordKey {
        (self.variant, self.family, self.n, self.p, self.seed)
    }
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Option<f64> {
    if u.len() != v.len() {
        return None;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        None
    } else {
        Some(dot / (nu * nv))
    }
}

#[derive(Debug, Clone)]
struct Cell<'a> {
    instance: &'a Instance,
    variant: Variant,
    p: usize,
    seed: u64,
}

struct CellOutcome {
    value: f64,
    result: OptResult,
    circuit: ParamCircuit,
    /// Exact expectation ratio override (RQAOA reports its cut).
    fixed_ratio: Option<f64>,
}

fn optimise(circuit: &ParamCircuit, ct: &CostTable, x0: &[f64], cfg: &ExperimentConfig, seed: u64) -> Result<OptResult> {
    let mut obj = CircuitObjective::new(circuit, ct, cfg.objective);
    maximize(&mut obj, x0, &cfg.optimizer.with_seed(seed))
}

fn run_variant(cell: &Cell, ct: &CostTable, c_max: f64, cfg: &ExperimentConfig) -> Result<CellOutcome> {
    let g = &cell.instance.graph;
    let p = cell.p;
    let s = &cfg.settings;
    let plain = |circuit: ParamCircuit| -> Result<CellOutcome> {
        let x0 = init_random(circuit.slot_kinds(), cell.seed);
        let result = optimise(&circuit, ct, &x0, cfg, cell.seed)?;
        let value = circuit.expectation(&result.final_params, ct)?;
        Ok(CellOutcome {
            value,
            result,
            circuit,
            fixed_ratio: None,
        })
    };
    match cell.variant {
        Variant::Qaoa => plain(build_standard(g, p)?),
        Variant::MaQaoa => plain(build_multi_angle(g, p)?),
        Variant::QaoaPlus => plain(build_plus_depth(g, p)?),
        Variant::ModifiedQaoa => plain(build_modified(g, p)?),
        Variant::WsQaoa => {
            let rank = g.n_vertices().clamp(2, 8);
            let relax = warm_start_relaxation(g, rank, s.ws_iters, cell.seed)?;
            plain(build_warm_start(g, p, &relax.c, s.ws_eps)?)
        }
        Variant::AbQaoa => {
            let n = g.n_vertices();
            let mut h = vec![0.0; n];
            let mut x = init_random(build_adaptive_bias(g, p, &h)?.slot_kinds(), cell.seed);
            let x_init = x.clone();
            let mut best: Option<CellOutcome> = None;
            let (mut iterations, mut calls, mut trace) = (0, 0, Vec::new());
            for round in 0..s.ab_rounds.max(1) {
                let circuit = build_adaptive_bias(g, p, &h)?;
                let r = optimise(&circuit, ct, &x, cfg, derive_seed(cell.seed, &[round as u64]))?;
                iterations += r.iterations;
                calls += r.circuit_calls;
                trace.extend_from_slice(&r.trace);
                let state = circuit.state(&r.final_params, ct)?;
                calls += 1;
                let value = state.expectation_diagonal(ct)?;
                x = r.final_params.clone();
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(CellOutcome {
                        value,
                        result: r,
                        circuit,
                        fixed_ratio: None,
                    });
                }
                h = update_bias(&h, &state.z_expectations(), s.ab_ell)?;
            }
            let mut out = best.expect("at least one round");
            out.result.init_params = x_init;
            out.result.iterations = iterations;
            out.result.circuit_calls = calls;
            out.result.trace = trace;
            Ok(out)
        }
        Variant::Falqon => {
            let circuit = build_standard(g, p)?;
            let run = falqon_run(g, ct, p, s.falqon_dt)?;
            let reference: Vec<f64> = (0..p).flat_map(|_| [s.falqon_dt, 0.0]).collect();
            if s.falqon_plus {
                let x0 = falqon_seed(g, ct, p, s.falqon_dt, s.falqon_handoff)?;
                let mut r = optimise(&circuit, ct, &x0, cfg, cell.seed)?;
                r.circuit_calls += s.falqon_handoff as u64 + 1;
                r.init_params = reference;
                let value = circuit.expectation(&r.final_params, ct)?;
                return Ok(CellOutcome {
                    value,
                    result: r,
                    circuit,
                    fixed_ratio: None,
                });
            }
            let value = *run.trace.last().expect("p + 1 entries");
            let best = run.trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(CellOutcome {
                value,
                result: OptResult {
                    init_params: reference,
                    final_params: run.params,
                    best_value: best,
                    trace: run.trace,
                    iterations: p,
                    circuit_calls: p as u64 + 1,
                    converged: true,
                },
                circuit,
                fixed_ratio: None,
            })
        }
        Variant::Rqaoa => {
            let inner = RqaoaInner {
                p,
                starts: s.rqaoa_starts,
                optimizer: cfg.optimizer,
            };
            let r = rqaoa_solve(g, s.rqaoa_cutoff, &inner, cell.seed)?;
            let circuit = build_standard(g, p)?;
            let (init, fin) = r.first_level.clone().unwrap_or_default();
            Ok(CellOutcome {
                value: r.cut.value,
                result: OptResult {
                    init_params: init,
                    final_params: fin,
                    best_value: r.cut.value,
                    trace: vec![r.cut.value],
                    iterations: r.iterations,
                    circuit_calls: r.circuit_calls,
                    converged: true,
                },
                circuit,
                fixed_ratio: Some(r.cut.value / c_max),
            })
        }
    }
}

fn noisy_ratio(out: &CellOutcome, ct: &CostTable, c_max: f64, cfg: &ExperimentConfig, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6e6f_6973_65]));
    let mut acc = 0.0;
    for _ in 0..cfg.noise_trajectories {
        let s = out.circuit.noisy_state(&out.result.final_params, ct, cfg.noise, &mut rng)?;
        acc += s.expectation_diagonal(ct)?;
    }
    Ok(acc / cfg.noise_trajectories as f64 / c_max)
}

fn run_cell(cell: &Cell, c_max: f64, cfg: &ExperimentConfig) -> (RunRecord, ParamsRecord) {
    let start = Instant::now();
    let inst = cell.instance;
    let mut record = RunRecord {
        variant: cell.variant,
        family: inst.meta.family,
        n: inst.meta.n,
        p: cell.p,
        seed: cell.seed,
        alpha_exp: f64::NAN,
        alpha_best: None,
        best_value: f64::NAN,
        c_max,
        iterations: 0,
        circuit_calls: 0,
        circuit_depth: 0,
        composite_depth: 0,
        cos_sim: None,
        wall_ms: 0,
        status: String::new(),
    };
    let mut params = ParamsRecord {
        variant: cell.variant,
        family: inst.meta.family,
        n: inst.meta.n,
        p: cell.p,
        seed: cell.seed,
        instance: inst.meta.id.clone(),
        init_params: Vec::new(),
        final_params: Vec::new(),
    };
    let outcome = (|| -> Result<()> {
        let ct = CostTable::from_graph(&inst.graph)?;
        let out = run_variant(cell, &ct, c_max, cfg)?;
        let alpha = match out.fixed_ratio {
            Some(r) => r,
            None if cfg.noise > 0.0 => noisy_ratio(&out, &ct, c_max, cfg, cell.seed)?,
            None => approx_ratio_expectation(out.value, c_max)?,
        };
        record.alpha_exp = alpha;
        record.alpha_best = match (out.fixed_ratio, cfg.sample_shots) {
            (Some(r), _) => Some(r),
            (None, 0) => None,
            (None, shots) => {
                let state = out.circuit.state(&out.result.final_params, &ct)?;
                let hist = state.sample(shots, derive_seed(cell.seed, &[shots]))?;
                Some(approx_ratio_best_sampled(&hist, &inst.graph, c_max)?)
            }
        };
        record.best_value = out.result.best_value;
        record.iterations = out.result.iterations;
        record.circuit_calls = out.result.circuit_calls.max(1);
        record.circuit_depth = circuit_depth(&out.circuit);
        record.composite_depth = record.circuit_depth as u64 * record.circuit_calls;
        record.cos_sim = cosine_similarity(&out.result.init_params, &out.result.final_params);
        params.init_params = out.result.init_params;
        params.final_params = out.result.final_params;
        Ok(())
    })();
    record.status = match outcome {
        Ok(()) => "ok".into(),
        Err(e) => {
            log::warn!("{} {} p={} failed: {e}", cell.variant, inst.meta.id, cell.p);
            format!("failed: {e}")
        }
    };
    record.wall_ms = start.elapsed().as_millis() as u64;
    (record, params)
}

/// Runs one (variant, depth) cell on a single instance outside a sweep.
pub fn solve_instance(
    instance: &Instance,
    variant: Variant,
    p: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(RunRecord, ParamsRecord)> {
    cfg.validate()?;
    if p < 1 {
        return Err(Error::InvalidDepth(p));
    }
    let c_max = brute_force_max(&instance.graph)?.c_max;
    let cell = Cell {
        instance,
        variant,
        p,
        seed,
    };
    Ok(run_cell(&cell, c_max, cfg))
}

pub const RECORDS_FILE: &str = "records.csv";
pub const PARAMS_FILE: &str = "params.jsonl";
pub const META_FILE: &str = "run_meta.json";

/// Factorial sweep (instance x variant x depth x repetition).
///
/// With `out_dir`, rows are appended as cells finish and the files are
/// rewritten in canonical order at the end; with `resume`, cells already in
/// the existing files are skipped. Results are returned in canonical order.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    out_dir: Option<&Path>,
    resume: bool,
) -> Result<Vec<(RunRecord, ParamsRecord)>> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for inst in &dataset.instances {
        for &variant in &cfg.variants {
            for &p in &cfg.depths {
                for rep in 0..cfg.repetitions {
                    let seed = derive_seed(
                        inst.meta.seed,
                        &[fnv1a(variant.as_str()), p as u64, rep as u64],
                    );
                    cells.push(Cell {
                        instance: inst,
                        variant,
                        p,
                        seed,
                    });
                }
            }
        }
    }
    let mut done: BTreeMap<RecordKey, (RunRecord, ParamsRecord)> = BTreeMap::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if resume {
            let recs = read_records_if_exists(&dir.join(RECORDS_FILE))?;
            let pars = read_params_if_exists(&dir.join(PARAMS_FILE))?;
            let pmap: BTreeMap<RecordKey, ParamsRecord> = pars.into_iter().map(|p| (p.key(), p)).collect();
            for r in recs {
                if let Some(p) = pmap.get(&r.key()) {
                    done.insert(r.key(), (r, p.clone()));
                }
            }
            log::info!("resuming: {} cells already on disk", done.len());
        }
        write_all(dir, done.values())?;
        let meta = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&RunMeta::new(cfg)).expect("meta serialises");
        fs::write(&meta, text + "\n").map_err(|e| Error::io(&meta, e))?;
    }
    let todo: Vec<&Cell> = cells
        .iter()
        .filter(|c| {
            let key = (c.variant, c.instance.meta.family, c.instance.meta.n, c.p, c.seed);
            !done.contains_key(&key)
        })
        .collect();
    let mut c_max: BTreeMap<&str, f64> = BTreeMap::new();
    for inst in &dataset.instances {
        if todo.iter().any(|c| std::ptr::eq(c.instance, inst)) {
            c_max.insert(&inst.meta.id, brute_force_max(&inst.graph)?.c_max);
        }
    }
    let sink = match out_dir {
        Some(dir) => Some(Mutex::new(Appender::open(dir)?)),
        None => None,
    };
    let work = |cell: &&Cell| -> Result<(RunRecord, ParamsRecord)> {
        let out = run_cell(cell, c_max[cell.instance.meta.id.as_str()], cfg);
        if let Some(s) = &sink {
            s.lock().expect("sink lock").append(&out.0, &out.1)?;
        }
        Ok(out)
    };
    #[cfg(feature = "parallel")]
    let fresh: Vec<(RunRecord, ParamsRecord)> = {
        use rayon::prelude::*;
        todo.par_iter().map(work).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fresh: Vec<(RunRecord, ParamsRecord)> = todo.iter().map(work).collect::<Result<_>>()?;
    drop(sink);
    for r in fresh {
        done.insert(r.0.key(), r);
    }
    if let Some(dir) = out_dir {
        write_all(dir, done.values())?;
    }
    Ok(done.into_values().collect())
}

/// Configuration echo and method notes written next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub notes: Vec<String>,
}

impl RunMeta {
    fn new(cfg: &ExperimentConfig) -> Self {
        RunMeta {
            config: cfg.clone(),
            columns: CSV_COLUMNS.iter().map(|s| s.to_string()).collect(),
            notes: vec![
                "cobyla-style = Nelder-Mead (initial simplex step 0.5) with termination when the value spread < tol and the simplex diameter < sqrt(tol), or at max_iters".into(),
                "alpha_exp = exact expectation / brute-force optimum; with noise > 0, averaged over depolarizing trajectories".into(),
                "alpha_best = best cut among sampled bitstrings / optimum (empty when sampling is off)".into(),
                "circuit_depth = greedy ASAP layering, ZZ = 3 layers, one-qubit gates and CX = 1".into(),
                "falqon init params = [dt, 0] per layer (zero-beta reference)".into(),
                "rqaoa alpha = cut of the returned assignment / optimum; params are those of the first level".into(),
            ],
        }
    }
}

struct Appender {
    csv: csv::Writer<File>,
    params: File,
    params_path: PathBuf,
}

impl Appender {
    fn open(dir: &Path) -> Result<Self> {
        let rp = dir.join(RECORDS_FILE);
        let file = OpenOptions::new().append(true).open(&rp).map_err(|e| Error::io(&rp, e))?;
        let csv = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let pp = dir.join(PARAMS_FILE);
        let params = OpenOptions::new().append(true).open(&pp).map_err(|e| Error::io(&pp, e))?;
        Ok(Appender {
            csv,
            params,
            params_path: pp,
        })
    }

    fn append(&mut self, r: &RunRecord, p: &ParamsRecord) -> Result<()> {
        self.csv.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        self.csv.flush().map_err(|e| Error::io(RECORDS_FILE, e))?;
        let line = serde_json::to_string(p).expect("params serialise");
        writeln!(self.params, "{line}").map_err(|e| Error::io(&self.params_path, e))
    }
}

fn write_all<'a>(dir: &Path, rows: impl Iterator<Item = &'a (RunRecord, ParamsRecord)>) -> Result<()> {
    let rows: Vec<_> = rows.collect();
    write_records(&dir.join(RECORDS_FILE), rows.iter().map(|r| &r.0))?;
    let pp = dir.join(PARAMS_FILE);
    let mut text = String::new();
    for (_, p) in &rows {
        text.push_str(&serde_json::to_string(p).expect("params serialise"));
        text.push('\n');
    }
    fs::write(&pp, text).map_err(|e| Error::io(&pp, e))
}

/// Writes records with the fixed column order; an empty list gives a header-only file.
pub fn write_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<RunRecord>, _>>()
        .map_err(|e| csv_err(path, e))
}

fn read_records_if_exists(path: &Path) -> Result<Vec<RunRecord>> {
    if path.exists() {
        read_records(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn read_params(path: &Path) -> Result<Vec<ParamsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(p) => out.push(p),
            // a torn final line from an interrupted run
            Err(e) => log::warn!("{}:{}: skipping unreadable line: {e}", path.display(), k + 1),
        }
    }
    Ok(out)
}

fn read_params_if_exists(path: &Path) -> Result<Vec<ParamsRecord>> {
    if path.exists() {
        read_params(path)
    } else {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    /// Order-independent: values are sorted before summation.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
        dev.sort_by(f64::total_cmp);
        let var = if v.len() > 1 { dev.iter().sum::<f64>() / (n - 1.0) } else { 0.0 };
        Some(Stat {
            count: v.len(),
            mean: mean.clamp(v[0], v[v.len() - 1]),
            std_err: (var / n).sqrt(),
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineStat {
    pub stat: Option<Stat>,
    /// Records with a zero-norm parameter vector.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub records: usize,
    pub failed: usize,
    /// Keys `variant/family`.
    pub alpha_by_family: BTreeMap<String, Stat>,
    /// Keys `variant/family/n`, zero-padded `n`.
    pub alpha_by_size: BTreeMap<String, Stat>,
    /// Keys `variant/p`, zero-padded `p`.
    pub alpha_by_depth: BTreeMap<String, Stat>,
    /// Keys `variant/family/p`.
    pub alpha_by_family_depth: BTreeMap<String, Stat>,
    pub composite_depth_by_variant: BTreeMap<String, Stat>,
    pub composite_depth_by_depth: BTreeMap<String, Stat>,
    pub circuit_calls_by_variant: BTreeMap<String, Stat>,
    pub cos_sim_by_variant: BTreeMap<String, CosineStat>,
}

fn group<K: Ord>(records: &[&RunRecord], key: impl Fn(&RunRecord) -> K, val: impl Fn(&RunRecord) -> f64) -> BTreeMap<K, Stat> {
    let mut m: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for r in records {
        m.entry(key(r)).or_default().push(val(r));
    }
    m.into_iter()
        .filter_map(|(k, v)| Stat::of(&v).map(|s| (k, s)))
        .collect()
}

/// Group statistics over the successful records.
pub fn aggregate(records: &[RunRecord]) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(Error::Domain("no records to aggregate".into()));
    }
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let alpha = |r: &RunRecord| r.alpha_exp;
    let mut cos: BTreeMap<String, CosineStat> = BTreeMap::new();
    let variants: BTreeSet<Variant> = ok.iter().map(|r| r.variant).collect();
    for v in variants {
        let rows: Vec<&&RunRecord> = ok.iter().filter(|r| r.variant == v).collect();
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.cos_sim).collect();
        cos.insert(
            v.to_string(),
            CosineStat {
                stat: Stat::of(&vals),
                excluded: rows.len() - vals.len(),
            },
        );
    }
    Ok(AggregateReport {
        records: records.len(),
        failed: records.len() - ok.len(),
        alpha_by_family: group(&ok, |r| format!("{}/{}", r.variant, r.family), alpha),
        alpha_by_size: group(&ok, |r| format!("{}/{}/{:02}", r.variant, r.family, r.n), alpha),
        alpha_by_depth: group(&ok, |r| format!("{}/{:02}", r.variant, r.p), alpha),
        alpha_by_family_depth: group(&ok, |r| format!("{}/{}/{:02}", r.variant, r.family, r.p), alpha),
        composite_depth_by_variant: group(&ok, |r| r.variant.to_string(), |r| r.composite_depth as f64),
        composite_depth_by_depth: group(&ok, |r| format!("{}/{:02}", r.variant, r.p), |r| r.composite_depth as f64),
        circuit_calls_by_variant: group(&ok, |r| r.variant.to_string(), |r| r.circuit_calls as f64),
        cos_sim_by_variant: cos,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Plots,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plots" => Ok(Format::Plots),
            _ => Err(Error::UnknownIdentifier(s.to_string())),
        }
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FAMILY: &str = "plot_family.csv";
pub const PLOT_SIZE: &str = "plot_size.csv";
pub const PLOT_DEPTH: &str = "plot_depth.csv";
pub const PLOT_COMPOSITE: &str = "plot_composite.csv";

fn write_series(path: &Path, rows: impl IntoIterator<Item = (String, String, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["series", "x", "y"]).map_err(|e| csv_err(path, e))?;
    for (s, x, y) in rows {
        w.write_record([s, x, y.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn split_key(k: &str) -> Vec<&str> {
    k.split('/').collect()
}

/// Writes the requested outputs into `dir` and returns the written paths.
pub fn emit(report: Option<&AggregateReport>, records: &[RunRecord], dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats.iter().collect::<BTreeSet<_>>() {
        match f {
            Format::Csv => {
                let p = dir.join(RECORDS_FILE);
                write_records(&p, records)?;
                written.push(p);
            }
            Format::Json => {
                if let Some(rep) = report {
                    let p = dir.join(REPORT_FILE);
                    let text = serde_json::to_string_pretty(rep).expect("report serialises");
                    fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
                    written.push(p);
                }
            }
            Format::Plots => {
                let Some(rep) = report else { continue };
                let fam = dir.join(PLOT_FAMILY);
                write_series(
                    &fam,
                    rep.alpha_by_family.iter().map(|(k, s)| {
                        let parts = split_key(k);
                        (parts[0].to_string(), parts[1].to_string(), s.mean)
                    }),
                )?;
                let size = dir.join(PLOT_SIZE);
                write_series(
                    &size,
                    rep.alpha_by_size.iter().map(|(k, s)| {
                        let parts = split_key(k);
                        let n: usize = parts[2].parse().expect("numeric size");
                        (format!("{}/{}", parts[0], parts[1]), n.to_string(), s.mean)
                    }),
                )?;
                let depth = dir.join(PLOT_DEPTH);
                write_series(
                    &depth,
                    rep.alpha_by_depth.iter().map(|(k, s)| {
                        let parts = split_key(k);
                        let p: usize = parts[1].parse().expect("numeric depth");
                        (parts[0].to_string(), p.to_string(), s.mean)
                    }),
                )?;
                let comp = dir.join(PLOT_COMPOSITE);
                write_series(
                    &comp,
                    rep.composite_depth_by_depth.iter().map(|(k, s)| {
                        let parts = split_key(k);
                        let p: usize = parts[1].parse().expect("numeric depth");
                        (parts[0].to_string(), p.to_string(), s.mean)
                    }),
                )?;
                written.extend([fam, size, depth, comp]);
            }
        }
    }
    Ok(written)
}
