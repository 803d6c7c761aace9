//! Browser bindings. Each export returns a JSON string; the page in `www/`
//! draws it on a canvas.
//!
//! The plain `*_json` functions carry the logic so they can be tested on the
//! host; the `#[wasm_bindgen]` wrappers only convert errors.

use ncsim_core::analysis::SequenceCache;
use ncsim_core::oracle::{transition_distribution, DEFAULT_ENUMERATION_CAP};
use ncsim_core::{participation_probability, Branch, GraphState, Label, ModelParams, Simulation};
use serde::Serialize;
use statrs::function::gamma::gamma;
use wasm_bindgen::prelude::*;

/// Largest graph whose edge list is sent to the page.
pub const DRAW_LIMIT: usize = 60;

#[derive(Serialize)]
struct Point {
    n: u64,
    vertices: usize,
    max_weight: u64,
    max_degree: u64,
    weight0: u64,
    degree0: u64,
}

#[derive(Serialize)]
struct Growth<'a> {
    alpha: f64,
    ratio_limit: Option<f64>,
    points: &'a [Point],
}

fn point(sim: &Simulation) -> Point {
    let state = sim.state();
    let v0 = state.vertex(0).expect("vertex 0 exists from the start");
    Point {
        n: state.step(),
        vertices: state.vertex_count(),
        max_weight: state.max_weight(),
        max_degree: state.max_degree(),
        weight0: v0.weight,
        degree0: v0.degree,
    }
}

fn params(n: usize, p: f64, q: f64, r: f64) -> Result<ModelParams, String> {
    ModelParams::new(n, p, q, r).map_err(|e| e.to_string())
}

/// Grows one trajectory to `steps`, sampling on a geometric grid.
pub fn growth_json(
    n: usize,
    p: f64,
    q: f64,
    r: f64,
    steps: u64,
    seed: u64,
) -> Result<String, String> {
    let params = params(n, p, q, r)?;
    let coeffs = params.coefficients().map_err(|e| e.to_string())?;
    let mut sim = Simulation::new(&params, seed, 0).map_err(|e| e.to_string())?;
    let mut points = vec![point(&sim)];
    let mut next = 1.0f64;
    while sim.state().step() < steps {
        let target = (next.ceil() as u64).min(steps);
        sim.advance(target - sim.state().step())
            .map_err(|e| e.to_string())?;
        points.push(point(&sim));
        while next.ceil() as u64 <= target {
            next *= 1.05;
        }
    }
    let out = Growth {
        alpha: coeffs.alpha,
        ratio_limit: coeffs.degree_weight_ratio(),
        points: &points,
    };
    Ok(serde_json::to_string(&out).expect("growth serializes"))
}

#[derive(Serialize)]
struct Outcome {
    branch: &'static str,
    vertices: Vec<Label>,
    probability: f64,
}

#[derive(Serialize)]
struct Small {
    step: u64,
    labels: Vec<Label>,
    weights: Vec<u64>,
    edges: Vec<[Label; 2]>,
    participation: Vec<f64>,
    /// Empty once the graph outgrows the enumeration cap.
    outcomes: Vec<Outcome>,
    enumeration_cap: usize,
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::NewPref => "new vertex, weighted",
        Branch::NewUniform => "new vertex, uniform",
        Branch::OldPref => "old vertices, weighted",
        Branch::OldUniform => "old vertices, uniform",
    }
}

/// Exact next-step law of a small graph. Participation probabilities come
/// from the closed form and are always present.
pub fn small_json(state: &GraphState) -> Result<String, String> {
    let coeffs = state.params().coefficients().map_err(|e| e.to_string())?;
    let participation = state
        .vertices()
        .iter()
        .map(|v| participation_probability(state, v.label, &coeffs))
        .collect::<ncsim_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let mut outcomes: Vec<Outcome> = Vec::new();
    if state.vertex_count() <= DEFAULT_ENUMERATION_CAP {
        let dist = transition_distribution(state).map_err(|e| e.to_string())?;
        outcomes = dist
            .outcomes
            .into_iter()
            .map(|o| Outcome {
                branch: branch_name(o.branch),
                vertices: o.vertex_set,
                probability: o.probability,
            })
            .collect();
    }
    outcomes.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    let out = Small {
        step: state.step(),
        labels: state.vertices().iter().map(|v| v.label).collect(),
        weights: state.vertices().iter().map(|v| v.weight).collect(),
        edges: if state.vertex_count() <= DRAW_LIMIT {
            state.edges()
        } else {
            Vec::new()
        },
        participation,
        outcomes,
        enumeration_cap: DEFAULT_ENUMERATION_CAP,
    };
    Ok(serde_json::to_string(&out).expect("state serializes"))
}

#[derive(Serialize)]
struct Curves {
    alpha: f64,
    k: u64,
    n: Vec<u64>,
    b_ratio: Vec<f64>,
    e_ratio: Vec<Option<f64>>,
}

/// `b[n,k] n^(k alpha) / Gamma(1 + k alpha)` and `e_n n^(-alpha) / Gamma(1 - alpha)`
/// along a geometric grid up to `n_max`. Both tend to one.
pub fn sequences_json(alpha: f64, k: u64, n_max: u64) -> Result<String, String> {
    if !(alpha > 0.0 && alpha < 1.0) || k == 0 || !(2..=10_000_000).contains(&n_max) {
        return Err("need 0 < alpha < 1, k >= 1 and 2 <= n_max <= 10^7".into());
    }
    let ka = k as f64 * alpha;
    let (gb, ge) = (gamma(1.0 + ka), gamma(1.0 - alpha));
    let cache = SequenceCache::new(alpha, &[k], n_max);
    let mut grid = Vec::new();
    let mut x = 1.0f64;
    while (x as u64) <= n_max {
        let n = x as u64;
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        x *= 1.1;
    }
    if grid.last() != Some(&n_max) {
        grid.push(n_max);
    }
    let out = Curves {
        alpha,
        k,
        b_ratio: grid
            .iter()
            .map(|&n| cache.b(n, k) * (n as f64).powf(ka) / gb)
            .collect(),
        e_ratio: grid
            .iter()
            .map(|&n| cache.e(n).ok().map(|e| e * (n as f64).powf(-alpha) / ge))
            .collect(),
        n: grid,
    };
    Ok(serde_json::to_string(&out).expect("curves serialize"))
}

#[wasm_bindgen]
pub fn growth(n: usize, p: f64, q: f64, r: f64, steps: u64, seed: u64) -> Result<String, JsError> {
    growth_json(n, p, q, r, steps, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sequences(alpha: f64, k: u64, n_max: u64) -> Result<String, JsError> {
    sequences_json(alpha, k, n_max).map_err(|e| JsError::new(&e))
}

/// A small graph advanced one step at a time.
#[wasm_bindgen]
pub struct Stepper {
    sim: Simulation,
}

#[wasm_bindgen]
impl Stepper {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, p: f64, q: f64, r: f64, seed: u64) -> Result<Stepper, JsError> {
        let params = params(n, p, q, r).map_err(|e| JsError::new(&e))?;
        let sim = Simulation::new(&params, seed, 0).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Stepper { sim })
    }

    /// Current graph and its exact next-step law.
    pub fn view(&self) -> Result<String, JsError> {
        small_json(self.sim.state()).map_err(|e| JsError::new(&e))
    }

    /// Advances one step and returns the new view.
    pub fn step(&mut self) -> Result<String, JsError> {
        self.sim.step().map_err(|e| JsError::new(&e.to_string()))?;
        self.view()
    }
}
