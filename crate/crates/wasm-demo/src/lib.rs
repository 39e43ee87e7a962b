//! Browser bindings: graph generation, the p = 1 landscape, single-variant
//! solves and FALQON traces. Every entry point takes and returns JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qaoa_core::ansatz::{
    build, build_standard, warm_start_relaxation, Variant, VariantSpec, DEFAULT_WS_EPS,
};
use qaoa_core::objective::ObjectiveSpec;
use qaoa_core::optimize::{falqon_run, init_random, maximize, CircuitObjective, GradientMode, Method, OptimizerSpec};
use qaoa_core::problem::{brute_force_max, BitString, Graph};
use qaoa_core::simulator::CostTable;

/// Largest instance the page accepts; keeps solves interactive.
pub const MAX_DEMO_VERTICES: usize = 14;

#[derive(Serialize)]
struct GraphOut<'a> {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    c_max: f64,
    optimal_cut: &'a str,
}

#[derive(Serialize)]
struct Landscape {
    gammas: Vec<f64>,
    betas: Vec<f64>,
    /// `alpha[i][j]` at `(gammas[i], betas[j])`.
    alpha: Vec<Vec<f64>>,
    best: [f64; 3],
}

#[derive(Serialize)]
struct Outcome {
    variant: String,
    p: usize,
    alpha: f64,
    value: f64,
    c_max: f64,
    params: Vec<f64>,
    trace: Vec<f64>,
    circuit_calls: u64,
    top: Vec<(String, f64, f64)>,
}

#[derive(Serialize)]
struct FalqonOut {
    alpha: Vec<f64>,
    betas: Vec<f64>,
}

fn parse_graph(json: &str) -> Result<Graph, String> {
    let g = Graph::from_json(json).map_err(|e| e.to_string())?;
    if g.n_vertices() > MAX_DEMO_VERTICES {
        return Err(format!("at most {MAX_DEMO_VERTICES} vertices in the demo"));
    }
    if g.n_edges() == 0 {
        return Err("graph has no edges".into());
    }
    Ok(g)
}

fn c_max(g: &Graph) -> Result<(f64, String), String> {
    let bf = brute_force_max(g).map_err(|e| e.to_string())?;
    Ok((bf.c_max, bf.argmax[0].to_string()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serialises")
}

pub fn generate_graph_json(family: &str, n: usize, seed: u64) -> Result<String, String> {
    if !(2..=MAX_DEMO_VERTICES).contains(&n) {
        return Err(format!("n must be in 2..={MAX_DEMO_VERTICES}"));
    }
    let g = match family {
        "complete" => Graph::complete(n, 1.0),
        "cycle" => Graph::cycle(n),
        "regular" => Graph::regular(n, 3, seed),
        "random" => Graph::random(n, 0.5, seed),
        other => return Err(format!("unknown family '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    let (cm, cut) = c_max(&g)?;
    Ok(to_json(&GraphOut {
        n,
        edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect(),
        c_max: cm,
        optimal_cut: &cut,
    }))
}

pub fn landscape_json(graph: &str, resolution: usize) -> Result<String, String> {
    let g = parse_graph(graph)?;
    let res = resolution.clamp(4, 128);
    let (cm, _) = c_max(&g)?;
    let ct = CostTable::from_graph(&g).map_err(|e| e.to_string())?;
    let circuit = build_standard(&g, 1).map_err(|e| e.to_string())?;
    let gammas: Vec<f64> = (0..res).map(|i| std::f64::consts::PI * i as f64 / res as f64).collect();
    let betas: Vec<f64> = (0..res).map(|j| std::f64::consts::FRAC_PI_2 * j as f64 / res as f64).collect();
    let mut best = [0.0, 0.0, f64::NEG_INFINITY];
    let mut alpha = Vec::with_capacity(res);
    for &gm in &gammas {
        let mut row = Vec::with_capacity(res);
        for &bt in &betas {
            let a = circuit.expectation(&[gm, bt], &ct).map_err(|e| e.to_string())? / cm;
            if a > best[2] {
                best = [gm, bt, a];
            }
            row.push(a);
        }
        alpha.push(row);
    }
    Ok(to_json(&Landscape {
        gammas,
        betas,
        alpha,
        best,
    }))
}

pub fn solve_json(graph: &str, variant: &str, p: usize, seed: u64) -> Result<String, String> {
    let g = parse_graph(graph)?;
    let variant: Variant = variant.parse().map_err(|e: qaoa_core::Error| e.to_string())?;
    if !(1..=8).contains(&p) {
        return Err("p must be in 1..=8".into());
    }
    let spec = match variant {
        Variant::Qaoa => VariantSpec::Standard,
        Variant::MaQaoa => VariantSpec::MultiAngle,
        Variant::QaoaPlus => VariantSpec::Plus,
        Variant::ModifiedQaoa => VariantSpec::Modified,
        Variant::WsQaoa => {
            let rank = g.n_vertices().clamp(2, 8);
            let r = warm_start_relaxation(&g, rank, 500, seed).map_err(|e| e.to_string())?;
            VariantSpec::WarmStart {
                c_star: r.c,
                eps: DEFAULT_WS_EPS,
            }
        }
        Variant::AbQaoa => VariantSpec::AdaptiveBias {
            h: vec![0.0; g.n_vertices()],
            ell: 0.5,
        },
        Variant::Falqon | Variant::Rqaoa => {
            return Err(format!("'{variant}' is not a variational solve; use the FALQON trace"));
        }
    };
    let (cm, _) = c_max(&g)?;
    let ct = CostTable::from_graph(&g).map_err(|e| e.to_string())?;
    let circuit = build(&g, p, &spec).map_err(|e| e.to_string())?;
    let x0 = init_random(circuit.slot_kinds(), seed);
    let opt = OptimizerSpec {
        tol: 1e-7,
        max_iters: 300,
        ..OptimizerSpec::new(Method::GradientDescent {
            step: 0.1,
            gradient: GradientMode::Adjoint,
        })
    };
    let mut obj = CircuitObjective::new(&circuit, &ct, ObjectiveSpec::default());
    let r = maximize(&mut obj, &x0, &opt.with_seed(seed)).map_err(|e| e.to_string())?;
    let state = circuit.state(&r.final_params, &ct).map_err(|e| e.to_string())?;
    let mut top: Vec<(String, f64, f64)> = state
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, &pr)| {
            let bits = BitString::from_index(k as u64, g.n_vertices());
            (bits.to_string(), pr, ct.values()[k])
        })
        .collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    top.truncate(8);
    Ok(to_json(&Outcome {
        variant: variant.to_string(),
        p,
        alpha: r.best_value / cm,
        value: r.best_value,
        c_max: cm,
        params: r.final_params,
        trace: r.trace.iter().map(|v| v / cm).collect(),
        circuit_calls: r.circuit_calls,
        top,
    }))
}

pub fn falqon_json(graph: &str, layers: usize, dt: f64) -> Result<String, String> {
    let g = parse_graph(graph)?;
    let (cm, _) = c_max(&g)?;
    let ct = CostTable::from_graph(&g).map_err(|e| e.to_string())?;
    let run = falqon_run(&g, &ct, layers.clamp(1, 1000), dt).map_err(|e| e.to_string())?;
    Ok(to_json(&FalqonOut {
        alpha: run.trace.iter().map(|v| v / cm).collect(),
        betas: run.betas,
    }))
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// `{n, edges: [[i, j, w]], c_max, optimal_cut}` for `complete`, `cycle`,
/// `regular` (degree 3) or `random` (edge probability 1/2).
#[wasm_bindgen(js_name = generateGraph)]
pub fn generate_graph(family: &str, n: u32, seed: u32) -> Result<String, JsValue> {
    js(generate_graph_json(family, n as usize, seed as u64))
}

/// Approximation ratio of depth-1 QAOA on a `resolution x resolution` grid.
#[wasm_bindgen]
pub fn landscape(graph: &str, resolution: u32) -> Result<String, JsValue> {
    js(landscape_json(graph, resolution as usize))
}

/// Optimises one variant from a random start and reports the result.
#[wasm_bindgen]
pub fn solve(graph: &str, variant: &str, p: u32, seed: u32) -> Result<String, JsValue> {
    js(solve_json(graph, variant, p as usize, seed as u64))
}

/// Approximation ratio after each feedback layer.
#[wasm_bindgen]
pub fn falqon(graph: &str, layers: u32, dt: f64) -> Result<String, JsValue> {
    js(falqon_json(graph, layers as usize, dt))
}
