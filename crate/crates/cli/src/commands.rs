use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dicert::baselines::{azuma_bound, azuma_estimator, ra_ns_bound, RaParams};
use dicert::behaviors::io::{parse_exact, read_behavior_file, read_trial_log, write_behavior, write_trial_log, BehaviorFile, Loaded};
use dicert::behaviors::{
    bell_value, bell_value_joint, estimate_frequencies, functional, make_hardy, make_mermin_ghz, make_tilted_chsh, regularize, sample_log, Chart,
    ConditionalBehavior, JointBehavior, OutputMap, Scenario,
};
use dicert::io::write_atomic;
use dicert::pef::{log_space, solve_grid, verify_certificate, CertificateFile, CertifiedBound, PefOptions, VertexSet};
use dicert::polytope::sets::{full_vertices, joint_product_vertices, sv2_polytope, SvConvention, SvSource};
use dicert::polytope::{ns_chsh_polytope, ns_polytope, read_polytope, write_polytope, Polytope, PolytopeFile};
use dicert::quantum::{Metric, MomentStructure};
use dicert::refine::{maxgp, nearv, RefinementConfig, Selection, ZPolicy};

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Ingest(a) => ingest(a),
        Command::Refine(a) => refine(a, cmd),
        Command::Certify(a) => certify(a, cmd),
        Command::Verify(a) => verify(a),
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    started_unix: u64,
    wall_time_s: f64,
    config: &'a Command,
    outputs: Vec<String>,
    details: Value,
}

fn append_record(path: &Path, rec: &RunRecord) -> Result<()> {
    let mut text = fs::read_to_string(path).unwrap_or_default();
    text.push_str(&serde_json::to_string(rec).map_err(dicert::Error::from)?);
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).join(name)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number {t:?} in {s:?}"))))
        .collect()
}

/// A number or `2^-k`.
pub fn parse_epsilon(s: &str) -> Result<f64> {
    let e = match s.trim().strip_prefix("2^") {
        Some(k) => k.parse::<i32>().map(|k| 2f64.powi(k)).map_err(|_| CliError::Config(format!("bad exponent in {s:?}")))?,
        None => s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad epsilon {s:?}")))?,
    };
    if !(e > 0.0 && e < 1.0) {
        return Err(CliError::Config(format!("epsilon {e} outside (0, 1)")));
    }
    Ok(e)
}

/// `1e4,4e4` or `1e4..1e12` (every decade).
pub fn parse_rounds(s: &str) -> Result<Vec<f64>> {
    let ns = match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (parse_list(lo)?[0], parse_list(hi)?[0]);
            let (a, b) = (lo.log10().round() as i32, hi.log10().round() as i32);
            (a..=b).map(|e| 10f64.powi(e)).collect()
        }
        None => parse_list(s)?,
    };
    if ns.is_empty() || ns.iter().any(|n| !(*n >= 1.0) || !n.is_finite()) {
        return Err(CliError::Config(format!("bad round counts {s:?}")));
    }
    Ok(ns)
}

fn parse_dmap(spec: &str, sc: &Scenario) -> Result<(OutputMap, Vec<usize>)> {
    let parties: Vec<usize> = if spec.trim() == "all" {
        (0..sc.parties).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad party {t:?} in dmap"))))
            .collect::<Result<_>>()?
    };
    Ok((OutputMap::parties(sc, &parties)?, parties))
}

/// Typical behavior in both forms.
pub struct Inputs {
    pub scenario: Scenario,
    pub joint: JointBehavior,
    pub conditional: ConditionalBehavior,
}

fn load_inputs(a: &InputArgs) -> Result<Inputs> {
    let loaded = read_behavior_file(&a.behavior)?.load()?;
    let p_z = a.p_z.as_deref().map(parse_list).transpose()?;
    let (joint, conditional) = match loaded {
        Loaded::Conditional(c) => {
            let p_z = p_z.unwrap_or_else(|| vec![1.0 / c.scenario.num_z() as f64; c.scenario.num_z()]);
            (JointBehavior::from_conditional(&c, &p_z)?, c)
        }
        Loaded::Joint(j) => {
            let c = j.conditional();
            match p_z {
                Some(p_z) => (JointBehavior::from_conditional(&c, &p_z)?, c),
                None => (j, c),
            }
        }
    };
    Ok(Inputs { scenario: joint.scenario.clone(), joint, conditional })
}

/// Polytope in chart coordinates with its file fingerprint.
pub fn resolve_polytope(spec: &str, sc: &Scenario) -> Result<(Polytope, String)> {
    let chart = Chart::collins_gisin(sc)?;
    let poly = match spec {
        "ns" => Polytope::from_h(&ns_polytope(sc)?)?,
        "ns-chsh" => {
            if *sc != Scenario::bipartite() {
                return Err(CliError::Config("ns-chsh is a bipartite polytope".into()));
            }
            Polytope::from_h(&ns_chsh_polytope()?)?
        }
        path => {
            let (p, f) = read_polytope(Path::new(path))?;
            if f.chart != chart.id() {
                return Err(CliError::Config(format!("polytope chart {} does not match scenario chart {}", f.chart, chart.id())));
            }
            p
        }
    };
    let fp = PolytopeFile::from_polytope(&poly, &chart.id()).fingerprint;
    Ok((poly, fp))
}

/// How the joint vertex set is built from conditional vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VertexInputs {
    Distribution { p_z: Vec<f64> },
    Sv { delta: String, convention: SvConvention },
}

pub fn vertex_set(sc: &Scenario, poly: &Polytope, inputs: &VertexInputs) -> Result<VertexSet> {
    let chart = Chart::collins_gisin(sc)?;
    let full = full_vertices(&chart, &poly.vertices)?;
    Ok(match inputs {
        VertexInputs::Distribution { p_z } => VertexSet::from_conditional(sc.num_c(), &full, p_z)?,
        VertexInputs::Sv { delta, convention } => {
            if sc.num_z() != 4 {
                return Err(CliError::Config("SV inputs need two binary inputs".into()));
            }
            let src = SvSource::new(parse_exact(delta)?, *convention)?;
            let joint = joint_product_vertices(sc, &full, &sv2_polytope(&src)?)?;
            VertexSet::from_joint(sc.num_c(), sc.num_z(), &joint.vertices)?
        }
    })
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let params = json!({"generator": a.generator, "alpha": a.alpha, "w": a.w, "seed": a.seed});
    let (file, joint) = match a.generator {
        Generator::TiltedChsh => {
            let p = make_tilted_chsh(a.alpha, a.w)?;
            let v = bell_value(&p, &functional::chsh_alpha(a.alpha))?;
            println!("CHSH_alpha = {v}");
            let prov = json!({"params": params, "bell": {"chsh_alpha": v}});
            (BehaviorFile::conditional(&p, prov), JointBehavior::uniform_inputs(&p))
        }
        Generator::MerminGhz => {
            let p = make_mermin_ghz(a.w)?;
            let v = bell_value(&p, &functional::mermin())?;
            println!("M = {v}");
            let prov = json!({"params": params, "bell": {"mermin": v}});
            (BehaviorFile::conditional(&p, prov), JointBehavior::uniform_inputs(&p))
        }
        Generator::Hardy => {
            let p = make_hardy(a.w)?;
            let h = bell_value_joint(&p, &functional::mdl(a.delta))?;
            println!("MDL(delta={}) = {h}", a.delta);
            let prov = json!({"params": params, "bell": {"mdl": h, "delta": a.delta}});
            (BehaviorFile::joint(&p, prov), p)
        }
    };
    write_behavior(&a.out, &file)?;
    if let (Some(n), Some(path)) = (a.rounds, &a.log) {
        let mut rng = dicert::rng::stream(a.seed, "generate");
        write_trial_log(path, &sample_log(&joint, n, &mut rng))?;
    }
    Ok(())
}

fn report_bell(c: &ConditionalBehavior) -> Result<()> {
    if c.scenario == Scenario::bipartite() {
        println!("CHSH = {}", bell_value(c, &functional::chsh())?);
    } else if c.scenario == Scenario::tripartite() {
        println!("M = {}", bell_value(c, &functional::mermin_flipped())?.max(bell_value(c, &functional::mermin())?));
    }
    Ok(())
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let is_json = a.input.extension().is_some_and(|e| e == "json");
    let prov = json!({"source": a.input.display().to_string(), "regularize": a.regularize});
    if is_json {
        let file = read_behavior_file(&a.input)?;
        let loaded = file.load()?;
        println!("exactly normalized: {}", file.exactly_normalized()?);
        let cond = match &loaded {
            Loaded::Conditional(c) => c.clone(),
            Loaded::Joint(j) => j.conditional(),
        };
        report_bell(&cond)?;
        let out = match (a.regularize, loaded) {
            (None, _) => file,
            (Some(eps), Loaded::Conditional(c)) => BehaviorFile::conditional(&regularize(&c, eps)?, prov),
            (Some(eps), Loaded::Joint(j)) => {
                let r = JointBehavior::from_conditional(&regularize(&j.conditional(), eps)?, &j.input_marginal)?;
                BehaviorFile::joint(&r, prov)
            }
        };
        write_behavior(&a.out, &out)?;
    } else {
        let sc = match a.scenario {
            ScenarioId::Bipartite => Scenario::bipartite(),
            ScenarioId::Tripartite => Scenario::tripartite(),
        };
        let log = read_trial_log(&a.input, &sc)?;
        let mut j = estimate_frequencies(&log)?;
        println!("rounds = {}", log.n());
        if let Some(eps) = a.regularize {
            j = JointBehavior::from_conditional(&regularize(&j.conditional(), eps)?, &j.input_marginal)?;
        }
        report_bell(&j.conditional())?;
        write_behavior(&a.out, &BehaviorFile::joint(&j, prov))?;
    }
    Ok(())
}

fn refinement_config(a: &RefineArgs) -> RefinementConfig {
    RefinementConfig {
        iterations: a.iterations,
        nearest: a.nearest,
        seed: a.seed,
        level: a.level,
        metric: match a.metric {
            MetricArg::L1 => Metric::L1,
            MetricArg::Euclidean => Metric::Euclidean,
        },
        min_weight: a.min_weight,
        selection: match a.selection {
            SelectionArg::InverseDistance => Selection::InverseDistance,
            SelectionArg::Uniform => Selection::Uniform,
        },
        z_policy: match a.z_policy {
            ZPolicyArg::Random => ZPolicy::Random,
            ZPolicyArg::MaxPguess => ZPolicy::MaxPguess,
            ZPolicyArg::Averaged => ZPolicy::Averaged,
            ZPolicyArg::Fixed => ZPolicy::Fixed(a.z_fixed),
        },
        membership_tol: a.membership_tol,
    }
}

fn refine(a: &RefineArgs, cmd: &Command) -> Result<()> {
    let start = Instant::now();
    let started = unix_now();
    let inp = load_inputs(&a.input)?;
    let (dmap, _) = parse_dmap(&a.input.dmap, &inp.scenario)?;
    let (p_in, _) = resolve_polytope(&a.input.polytope, &inp.scenario)?;
    let cfg = refinement_config(a);
    let r = match a.algorithm {
        Algorithm::Nearv => nearv(&inp.conditional, &p_in, &cfg)?,
        Algorithm::Maxgp => maxgp(&inp.conditional, &inp.joint.input_marginal, &p_in, &cfg, &dmap)?,
    };
    let chart = Chart::collins_gisin(&inp.scenario)?;
    let file = write_polytope(&a.out, &r.polytope, &chart.id())?;
    println!("vertices {} -> {}; cuts {}; fingerprint {}", p_in.num_vertices(), r.polytope.num_vertices(), r.cuts.len(), file.fingerprint);
    let record = a.record.clone().unwrap_or_else(|| sibling(&a.out, "runs.jsonl"));
    append_record(
        &record,
        &RunRecord {
            started_unix: started,
            wall_time_s: start.elapsed().as_secs_f64(),
            config: cmd,
            outputs: vec![a.out.display().to_string()],
            details: json!({"fingerprint": file.fingerprint, "refinement": cfg, "iterations": r.log}),
        },
    )?;
    Ok(())
}

/// One row of `results.csv`.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub n: f64,
    pub method: String,
    pub fingerprint: String,
    pub rate: f64,
    pub total_bits: f64,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub wall_time_s: f64,
}

pub const RESULT_COLUMNS: [&str; 8] = ["n", "method", "fingerprint", "rate", "total_bits", "beta", "kappa", "wall_time_s"];

fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let existing = fs::read(path).ok();
    let mut w = csv::WriterBuilder::new().has_headers(existing.is_none()).from_writer(existing.unwrap_or_default());
    for r in rows {
        w.serialize(r).map_err(dicert::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| dicert::Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn certificate_name(method: &str, n: f64) -> String {
    format!("certificate-{method}-n{n:e}.json")
}

fn certify(a: &CertifyArgs, cmd: &Command) -> Result<()> {
    if a.method == Method::Eat {
        return Err(CliError::Config("method eat: not implemented (out of scope)".into()));
    }
    let start = Instant::now();
    let started = unix_now();
    let inp = load_inputs(&a.input)?;
    let sc = &inp.scenario;
    let (dmap, _) = parse_dmap(&a.input.dmap, sc)?;
    let eps = parse_epsilon(&a.epsilon)?;
    let ns = parse_rounds(&a.n)?;
    let kappas = parse_list(&a.kappa_fractions)?;
    if kappas.iter().any(|k| !(*k > 0.0 && *k < 1.0)) {
        return Err(CliError::Config("kappa fractions must lie in (0, 1)".into()));
    }
    let vinputs = match &a.sv_delta {
        Some(d) => VertexInputs::Sv {
            delta: d.clone(),
            convention: match a.sv_convention {
                SvConventionArg::Box => SvConvention::Box,
                SvConventionArg::HalfDelta => SvConvention::HalfDelta,
            },
        },
        None => VertexInputs::Distribution { p_z: inp.joint.input_marginal.clone() },
    };
    let config = json!({"run": cmd, "scenario": sc, "vertex_inputs": vinputs});
    let behavior = inp.joint.probs.clone();

    let (bounds, fingerprint, prep): (Vec<(CertifiedBound, f64)>, String, f64) = match a.method {
        Method::Pe => {
            let (poly, fp) = resolve_polytope(&a.input.polytope, sc)?;
            let verts = vertex_set(sc, &poly, &vinputs)?;
            if a.betas == 0 || !(a.beta_min > 0.0 && a.beta_min <= a.beta_max) {
                return Err(CliError::Config("empty power grid".into()));
            }
            let betas = if a.betas == 1 { vec![a.beta_min] } else { log_space(a.beta_min, a.beta_max, a.betas) };
            let grid = solve_grid(&inp.joint, &verts, &dmap, &betas, &PefOptions::default())?;
            let prep = start.elapsed().as_secs_f64();
            let out = ns
                .par_iter()
                .map(|&n| {
                    let t = Instant::now();
                    let (k, c) = grid.certify(eps, n, &kappas, a.delta_t)?;
                    let pef = grid.points[k].solution.pef.clone();
                    Ok((CertifiedBound::Pe { certificate: c, pef }, t.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()?;
            (out, fp, prep)
        }
        Method::Azuma => {
            let s = MomentStructure::new(sc, a.level)?;
            let est = azuma_estimator(&inp.joint, &dmap, &s)?;
            let prep = start.elapsed().as_secs_f64();
            let out = ns
                .iter()
                .map(|&n| {
                    let t = Instant::now();
                    let mut best = None;
                    for f in &kappas {
                        let b = azuma_bound(&est, est.rate(), n, f * eps, eps)?;
                        if best.as_ref().is_none_or(|x: &dicert::baselines::AzumaBound| b.total > x.total) {
                            best = Some(b);
                        }
                    }
                    let bound = best.expect("nonempty kappa list");
                    Ok((CertifiedBound::Azuma { bound }, t.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()?;
            (out, format!("npa-level-{}", a.level), prep)
        }
        Method::RaNs => {
            let Some(d) = &a.sv_delta else {
                return Err(CliError::Config("ra-ns needs --sv-delta".into()));
            };
            if *sc != Scenario::bipartite() {
                return Err(CliError::Config("ra-ns is defined for the bipartite Hardy scenario".into()));
            }
            let delta = dicert::num::to_f64(&parse_exact(d)?);
            let h = bell_value_joint(&inp.joint, &functional::mdl(delta))?;
            let out = ns
                .par_iter()
                .map(|&n| {
                    let t = Instant::now();
                    let params = RaParams { grid: a.ra_grid, ..RaParams::new(h, delta, n, eps) };
                    let bound = ra_ns_bound(&params)?;
                    Ok((CertifiedBound::RaNs { params, bound }, t.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()?;
            (out, "ns-mdl".into(), 0.0)
        }
        Method::Eat => unreachable!(),
    };

    let method = method_id(a.method);
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for (b, wall) in bounds {
        let n = b.n();
        let (rate, beta, kappa) = match &b {
            CertifiedBound::Pe { certificate: c, .. } => (c.rate, Some(c.beta), Some(c.kappa)),
            CertifiedBound::Azuma { bound } => (bound.rate, None, Some(bound.kappa)),
            CertifiedBound::RaNs { bound, .. } => (bound.total / n, None, None),
        };
        let poly_fp = if a.method == Method::Pe { fingerprint.clone() } else { String::new() };
        let file = CertificateFile::new(b.clone(), behavior.clone(), poly_fp, config.clone());
        let path = a.out.join(certificate_name(method, n));
        dicert::io::write_json(&path, &file)?;
        println!("n={n:e} {method} total={:.6e} reported={:.6e}", b.total(), b.reported());
        outputs.push(path.display().to_string());
        rows.push(ResultRow { n, method: method.into(), fingerprint: fingerprint.clone(), rate, total_bits: b.reported(), beta, kappa, wall_time_s: prep + wall });
    }
    let csv_path = a.out.join("results.csv");
    append_rows(&csv_path, &rows)?;
    outputs.push(csv_path.display().to_string());
    let record = a.record.clone().unwrap_or_else(|| a.out.join("runs.jsonl"));
    append_record(
        &record,
        &RunRecord { started_unix: started, wall_time_s: start.elapsed().as_secs_f64(), config: cmd, outputs, details: json!({"epsilon": eps, "rounds": ns}) },
    )?;
    Ok(())
}

fn method_id(m: Method) -> &'static str {
    match m {
        Method::Pe => "pe",
        Method::Azuma => "azuma",
        Method::RaNs => "ra-ns",
        Method::Eat => "eat",
    }
}

fn verify(a: &VerifyArgs) -> Result<()> {
    let file: CertificateFile = dicert::io::read_json(&a.certificate)?;
    let failures = match &file.bound {
        CertifiedBound::Pe { .. } => {
            let Some(spec) = &a.polytope else {
                return Err(CliError::Config("pe certificates need --polytope".into()));
            };
            let sc: Scenario = serde_json::from_value(file.config["scenario"].clone()).map_err(dicert::Error::from)?;
            let vi: VertexInputs = serde_json::from_value(file.config["vertex_inputs"].clone()).map_err(dicert::Error::from)?;
            let (poly, fp) = resolve_polytope(spec, &sc)?;
            let verts = vertex_set(&sc, &poly, &vi)?;
            verify_certificate(&file, Some((&verts, &fp)))?
        }
        _ => verify_certificate(&file, None)?,
    };
    if failures.is_empty() {
        println!("PASS {} n={:e} total={:e}", file.bound.method(), file.bound.n(), file.bound.total());
        Ok(())
    } else {
        for f in &failures {
            println!("FAIL {f}");
        }
        Err(CliError::Rejected(format!("{} check(s) failed", failures.len())))
    }
}
