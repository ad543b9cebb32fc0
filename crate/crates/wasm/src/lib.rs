//! Browser bindings for the certification pipeline. Each exported function
//! returns a JSON string that the demo page plots.

use dicert::baselines::{ra_ns_bound, RaParams};
use dicert::behaviors::{
    bell_value, bell_value_joint, functional, make_hardy, make_tilted_chsh, Chart, ConditionalBehavior, JointBehavior, OutputMap, Scenario,
};
use dicert::num;
use dicert::pef::{log_space, solve_grid, GridResult, PefOptions, VertexSet};
use dicert::polytope::sets::{full_vertices, joint_product_vertices};
use dicert::polytope::{ns_chsh_polytope, ns_polytope, sv2_polytope, Polytope, SvConvention, SvSource};
use dicert::quantum::{max_linear, MomentStructure};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const KAPPAS: [f64; 3] = [0.5, 0.25, 0.1];
const BETAS: usize = 21;

#[derive(Debug, Serialize)]
pub struct BellBounds {
    pub alpha: f64,
    pub level: usize,
    pub local: f64,
    pub quantum: f64,
    pub closed_form: f64,
    pub observed: f64,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub n: f64,
    pub total: f64,
    pub rate: f64,
    pub beta: f64,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub n: f64,
    pub pe: f64,
    pub ra: f64,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn sweep(exp_min: f64, exp_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(exp_max > exp_min) || points < 2 || points > 400 {
        return Err("need exp_min < exp_max and 2..400 points".into());
    }
    Ok((0..points).map(|i| 10f64.powf(exp_min + (exp_max - exp_min) * i as f64 / (points - 1) as f64)).collect())
}

fn epsilon(log2_eps: f64) -> Result<f64, String> {
    if !(log2_eps < 0.0 && log2_eps >= -1000.0) {
        return Err("log2 epsilon must lie in [-1000, 0)".into());
    }
    Ok(log2_eps.exp2())
}

fn grid(p: &JointBehavior, verts: &VertexSet) -> Result<GridResult, String> {
    let dmap = OutputMap::identity(&p.scenario);
    solve_grid(p, verts, &dmap, &log_space(1e-4, 1.0, BETAS), &PefOptions::default()).map_err(err)
}

/// Local, quantum (NPA) and closed-form maxima of the tilted CHSH expression,
/// plus its value on the noisy maximally violating behavior.
pub fn bell_bounds_json(alpha: f64, w: f64, level: usize) -> Result<String, String> {
    let sc = Scenario::bipartite();
    let f = functional::chsh_alpha(alpha);
    let p = make_tilted_chsh(alpha, w).map_err(err)?;
    let s = MomentStructure::new(&sc, level).map_err(err)?;
    let quantum = max_linear(&f, &s).map_err(err)?.bound;
    let mut local = f64::NEG_INFINITY;
    for r in 0..16usize {
        let det = ConditionalBehavior::deterministic(&sc, &[vec![r & 1, (r >> 1) & 1], vec![(r >> 2) & 1, (r >> 3) & 1]]);
        local = local.max(bell_value(&det, &f).map_err(err)?);
    }
    let out = BellBounds {
        alpha,
        level,
        local,
        quantum,
        closed_form: 2.0 * (1.0 + alpha * alpha).sqrt(),
        observed: bell_value(&p, &f).map_err(err)?,
    };
    serde_json::to_string(&out).map_err(err)
}

/// Extractable entropy against `n` for noisy CHSH, using either the plain
/// no-signalling polytope (`"ns"`) or its intersection with the CHSH bounds (`"ns-chsh"`).
pub fn pe_curve_json(w: f64, polytope: &str, log2_eps: f64, exp_min: f64, exp_max: f64, points: usize) -> Result<String, String> {
    let sc = Scenario::bipartite();
    let h = match polytope {
        "ns" => ns_polytope(&sc),
        "ns-chsh" => ns_chsh_polytope(),
        other => return Err(format!("unknown polytope {other:?}")),
    }
    .map_err(err)?;
    let chart = Chart::collins_gisin(&sc).map_err(err)?;
    let poly = Polytope::from_h(&h).map_err(err)?;
    let full = full_vertices(&chart, &poly.vertices).map_err(err)?;
    let verts = VertexSet::from_conditional(sc.num_c(), &full, &[0.25; 4]).map_err(err)?;
    let p = JointBehavior::uniform_inputs(&make_tilted_chsh(1.0, w).map_err(err)?);
    let g = grid(&p, &verts)?;
    let eps = epsilon(log2_eps)?;
    let curve = sweep(exp_min, exp_max, points)?
        .into_iter()
        .map(|n| {
            let (_, c) = g.certify(eps, n, &KAPPAS, 0.0).map_err(err)?;
            Ok(CurvePoint { n, total: c.reported(), rate: c.reported() / n, beta: c.beta })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&curve).map_err(err)
}

/// PE certificates against the non-signalling amplification bound for a
/// noisy Hardy behavior with inputs from a Santha–Vazirani source of bias `delta`.
pub fn amplification_json(w: f64, delta: f64, log2_eps: f64, exp_min: f64, exp_max: f64, points: usize) -> Result<String, String> {
    if !(0.0..0.5).contains(&delta) {
        return Err("delta must lie in [0, 1/2)".into());
    }
    let sc = Scenario::bipartite();
    let chart = Chart::collins_gisin(&sc).map_err(err)?;
    let poly = Polytope::from_h(&ns_polytope(&sc).map_err(err)?).map_err(err)?;
    let full = full_vertices(&chart, &poly.vertices).map_err(err)?;
    let dq = num::round_to(delta, 1000);
    let delta = num::to_f64(&dq);
    let sv = sv2_polytope(&SvSource::new(dq, SvConvention::Box).map_err(err)?).map_err(err)?;
    let joint = joint_product_vertices(&sc, &full, &sv).map_err(err)?;
    let verts = VertexSet::from_joint(sc.num_c(), sc.num_z(), &joint.vertices).map_err(err)?;
    let p = make_hardy(w).map_err(err)?;
    let g = grid(&p, &verts)?;
    let h = bell_value_joint(&p, &functional::mdl(delta)).map_err(err)?;
    let eps = epsilon(log2_eps)?;
    let rows = sweep(exp_min, exp_max, points)?
        .into_iter()
        .map(|n| {
            let (_, c) = g.certify(eps, n, &KAPPAS, 0.0).map_err(err)?;
            let ra = ra_ns_bound(&RaParams::new(h, delta, n, eps)).map_err(err)?;
            Ok(Comparison { n, pe: c.reported(), ra: ra.reported() })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&rows).map_err(err)
}

#[wasm_bindgen]
pub fn bell_bounds(alpha: f64, w: f64, level: usize) -> Result<String, JsError> {
    bell_bounds_json(alpha, w, level).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pe_curve(w: f64, polytope: &str, log2_eps: f64, exp_min: f64, exp_max: f64, points: usize) -> Result<String, JsError> {
    pe_curve_json(w, polytope, log2_eps, exp_min, exp_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn amplification(w: f64, delta: f64, log2_eps: f64, exp_min: f64, exp_max: f64, points: usize) -> Result<String, JsError> {
    amplification_json(w, delta, log2_eps, exp_min, exp_max, points).map_err(|e| JsError::new(&e))
}
