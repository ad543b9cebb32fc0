use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use dicert::behaviors::io::{read_behavior_file, BehaviorFile};
use dicert::behaviors::{bell_value, bell_value_joint, functional, make_hardy, ConditionalBehavior, Scenario};
use dicert::pef::{CertificateFile, CertifiedBound};
use dicert::polytope::PolytopeFile;

fn dicert(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicert")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dicert(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    dicert(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn cert(path: &Path) -> CertificateFile {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_expected_bell_values() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--alpha", "1", "--w", "0.005", "--out", "t.json"]);
    let dicert::behaviors::io::Loaded::Conditional(p) = read_behavior_file(&d.path().join("t.json")).unwrap().load().unwrap() else { panic!() };
    let v = bell_value(&p, &functional::chsh()).unwrap();
    assert!((v - 2.0 * 2f64.sqrt() * 0.995).abs() < 1e-12, "{v}");

    ok(d.path(), &["generate", "--generator", "mermin-ghz", "--w", "0.018", "--out", "m.json"]);
    let m = json(&d.path().join("m.json"))["provenance"]["bell"]["mermin"].as_f64().unwrap();
    assert!((m - 3.928).abs() < 1e-12, "{m}");

    ok(d.path(), &["generate", "--generator", "hardy", "--w", "0.05", "--delta", "0.1", "--out", "h.json"]);
    let h = json(&d.path().join("h.json"))["provenance"]["bell"]["mdl"].as_f64().unwrap();
    let expect = bell_value_joint(&make_hardy(0.05).unwrap(), &functional::mdl(0.1)).unwrap();
    assert_eq!(h, expect);
}

#[test]
fn sampled_log_ingests_to_nearby_frequencies() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.1", "--out", "t.json", "--rounds", "20000", "--log", "t.csv", "--seed", "3"]);
    let head = fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert!(head.starts_with("round,z,c\n"));
    let out = ok(d.path(), &["ingest", "--input", "t.csv", "--out", "f.json"]);
    let chsh: f64 = out.lines().find_map(|l| l.strip_prefix("CHSH = ")).unwrap().parse().unwrap();
    assert!((chsh - 2.0 * 2f64.sqrt() * 0.9).abs() < 0.1, "{chsh}");
    let file = read_behavior_file(&d.path().join("f.json")).unwrap();
    assert!(file.load().is_ok());
}

#[test]
fn ingest_mermin_fixture_keeps_exact_entries() {
    let d = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/mermin_h1_40k.json");
    let out = ok(d.path(), &["ingest", "--input", fixture.to_str().unwrap(), "--out", "m.json"]);
    assert!(out.contains("exactly normalized: true"), "{out}");
    assert!(out.contains("M = 3.928"), "{out}");
    let a = read_behavior_file(&fixture).unwrap();
    let b = read_behavior_file(&d.path().join("m.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn refine_zero_iterations_is_identity_and_seeded_runs_repeat() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.05", "--out", "t.json"]);
    ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", "nearv", "--iterations", "0", "--out", "p0.json"]);
    let p0: PolytopeFile = serde_json::from_value(json(&d.path().join("p0.json"))).unwrap();
    assert_eq!(p0.vertices.len(), 24);
    assert!(p0.cuts.is_empty());
    for alg in ["nearv", "maxgp"] {
        let a = format!("{alg}-a.json");
        let b = format!("{alg}-b.json");
        ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", alg, "--iterations", "3", "--seed", "7", "--out", &a]);
        ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", alg, "--iterations", "3", "--seed", "7", "--out", &b]);
        assert_eq!(fs::read(d.path().join(&a)).unwrap(), fs::read(d.path().join(&b)).unwrap());
    }
}

#[test]
fn nearv_run_record_lists_cuts_with_bounds() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.15", "--out", "t.json"]);
    ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", "nearv", "--iterations", "10", "--nearest", "10", "--out", "nv.json", "--record", "run.jsonl"]);
    let text = fs::read_to_string(d.path().join("run.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(rec["config"]["iterations"], 10);
    assert_eq!(rec["config"]["metric"], "l1");
    let iters = rec["details"]["iterations"].as_array().unwrap();
    assert!(iters.len() <= 10);
    let cuts: Vec<&Value> = iters.iter().flat_map(|it| it["cuts"].as_array().unwrap()).collect();
    assert!(!cuts.is_empty() && cuts.len() <= 10, "{}", cuts.len());
    for c in cuts {
        assert!(dicert::num::parse_q(c["beta"].as_str().unwrap()).is_some());
        assert!(c["violation"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn pe_certificates_verify_and_tampering_is_caught() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.15", "--out", "t.json"]);
    ok(d.path(), &["certify", "--behavior", "t.json", "--polytope", "ns-chsh", "--n", "1e4..1e10", "--epsilon", "2^-128", "--out", "out"]);
    let mut rdr = csv::Reader::from_path(d.path().join("out/results.csv")).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, dicert_cli::commands::RESULT_COLUMNS);
    let totals: Vec<f64> = rdr.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
    assert_eq!(totals.len(), 7);
    assert_eq!(totals[0], 0.0);
    assert!(totals.last().unwrap() > &0.0);

    let path = d.path().join("out").join(dicert_cli::commands::certificate_name("pe", 1e8));
    let p = path.to_str().unwrap();
    ok(d.path(), &["verify", "--certificate", p, "--polytope", "ns-chsh"]);

    let mut c = cert(&path);
    if let CertifiedBound::Pe { pef, .. } = &mut c.bound {
        let i = pef.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        pef.values[i] *= 1.5;
    }
    fs::write(d.path().join("bad_f.json"), serde_json::to_string(&c).unwrap()).unwrap();
    let out = dicert(d.path(), &["verify", "--certificate", "bad_f.json", "--polytope", "ns-chsh"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violated at vertex"));

    let mut c = cert(&path);
    if let CertifiedBound::Pe { certificate, .. } = &mut c.bound {
        certificate.total += 1.0;
    }
    fs::write(d.path().join("bad_t.json"), serde_json::to_string(&c).unwrap()).unwrap();
    let out = dicert(d.path(), &["verify", "--certificate", "bad_t.json", "--polytope", "ns-chsh"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("arithmetic"));

    assert_eq!(code(d.path(), &["verify", "--certificate", p]), 2);
}

#[test]
fn every_emitted_certificate_verifies() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.05", "--out", "t.json"]);
    ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", "maxgp", "--iterations", "4", "--out", "mg.json"]);
    ok(d.path(), &["generate", "--generator", "hardy", "--w", "0.001", "--out", "h.json"]);
    let runs: [(&str, &[&str]); 5] = [
        ("t.json", &["--method", "pe", "--polytope", "mg.json"]),
        ("t.json", &["--method", "pe", "--polytope", "ns", "--dmap", "0"]),
        ("t.json", &["--method", "azuma"]),
        ("h.json", &["--method", "pe", "--sv-delta", "0.1"]),
        ("h.json", &["--method", "ra-ns", "--sv-delta", "0.1"]),
    ];
    for (i, (b, extra)) in runs.iter().enumerate() {
        let out = format!("o{i}");
        let mut args = vec!["certify", "--behavior", b, "--n", "1e5,1e8", "--epsilon", "2^-32", "--out", &out];
        args.extend_from_slice(extra);
        ok(d.path(), &args);
        let poly = extra.iter().position(|a| *a == "--polytope").map(|k| extra[k + 1]).unwrap_or("ns");
        for e in fs::read_dir(d.path().join(&out)).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "json") {
                let s = ok(d.path(), &["verify", "--certificate", p.to_str().unwrap(), "--polytope", poly]);
                assert!(s.starts_with("PASS"), "{s}");
                let text = fs::read_to_string(&p).unwrap();
                let back = cert(&p);
                assert_eq!(serde_json::to_string_pretty(&back).unwrap() + "\n", text);
            }
        }
    }
}

#[test]
fn emitted_files_round_trip() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "hardy", "--w", "0.05", "--out", "h.json"]);
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.1", "--out", "t.json"]);
    ok(d.path(), &["refine", "--behavior", "t.json", "--algorithm", "nearv", "--iterations", "2", "--out", "p.json"]);
    for f in ["h.json", "t.json"] {
        let text = fs::read_to_string(d.path().join(f)).unwrap();
        let back: BehaviorFile = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap() + "\n", text);
    }
    let text = fs::read_to_string(d.path().join("p.json")).unwrap();
    let back: PolytopeFile = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&back).unwrap() + "\n", text);
}

#[test]
fn azuma_penalty_scales_as_sqrt_n() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "0.1", "--out", "t.json"]);
    ok(d.path(), &["certify", "--behavior", "t.json", "--method", "azuma", "--n", "1e6,1e8", "--kappa-fractions", "0.5", "--out", "o"]);
    let pen = |n: f64| match cert(&d.path().join("o").join(dicert_cli::commands::certificate_name("azuma", n))).bound {
        CertifiedBound::Azuma { bound } => bound.penalty,
        _ => unreachable!(),
    };
    let r = pen(1e8) / pen(1e6);
    assert!((r - 10.0).abs() < 1e-9, "{r}");
}

#[test]
fn hardy_pe_beats_amplification_baseline() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "hardy", "--w", "0.001", "--out", "h.json"]);
    ok(d.path(), &["certify", "--behavior", "h.json", "--method", "pe", "--sv-delta", "0.1", "--n", "1e8..1e10", "--epsilon", "2^-32", "--out", "o"]);
    ok(d.path(), &["certify", "--behavior", "h.json", "--method", "ra-ns", "--sv-delta", "0.1", "--n", "1e8..1e10", "--epsilon", "2^-32", "--out", "o"]);
    let mut rdr = csv::Reader::from_path(d.path().join("o/results.csv")).unwrap();
    let rows: Vec<dicert_cli::commands::ResultRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
    for n in [1e8, 1e9, 1e10] {
        let get = |m: &str| rows.iter().find(|r| r.n == n && r.method == m).unwrap().total_bits;
        assert!(get("pe") > get("ra-ns"), "n={n}: {} vs {}", get("pe"), get("ra-ns"));
    }
}

#[test]
fn config_file_supplies_flags() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("gen.json"), r#"{"generator": "tilted-chsh", "w": 0.2, "out": "c.json"}"#).unwrap();
    ok(d.path(), &["generate", "--config", "gen.json"]);
    let v = json(&d.path().join("c.json"))["provenance"]["params"]["w"].as_f64().unwrap();
    assert_eq!(v, 0.2);
    ok(d.path(), &["generate", "--config", "gen.json", "--w", "0.3"]);
    let v = json(&d.path().join("c.json"))["provenance"]["params"]["w"].as_f64().unwrap();
    assert_eq!(v, 0.3);
    fs::write(d.path().join("bad.json"), r#"{"generator": "tilted-chsh", "noise": 0.2, "out": "c.json"}"#).unwrap();
    assert_eq!(code(d.path(), &["generate", "--config", "bad.json"]), 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate", "--generator", "tilted-chsh", "--out", "t.json"]);
    assert_eq!(code(d.path(), &["certify", "--behavior", "t.json", "--method", "eat", "--out", "o"]), 2);
    let out = dicert(d.path(), &["certify", "--behavior", "t.json", "--method", "eat", "--out", "o"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not implemented (out of scope)"));
    assert_eq!(code(d.path(), &["certify", "--behavior", "missing.json", "--out", "o"]), 2);
    assert_eq!(code(d.path(), &["certify", "--behavior", "t.json", "--epsilon", "2", "--out", "o"]), 2);
    assert_eq!(code(d.path(), &["generate", "--generator", "tilted-chsh", "--w", "1.5", "--out", "x.json"]), 2);
    assert_eq!(code(d.path(), &["frobnicate"]), 2);

    let sc = Scenario::bipartite();
    let probs = (0..sc.len())
        .map(|i| {
            let (c, z) = sc.split(i);
            let (ab, xy) = (sc.decode_c(c), sc.decode_z(z));
            if (ab[0] ^ ab[1]) == (xy[0] & xy[1]) { 0.5 } else { 0.0 }
        })
        .collect();
    let pr = ConditionalBehavior::new(sc, probs).unwrap();
    dicert::behaviors::io::write_behavior(&d.path().join("pr.json"), &BehaviorFile::conditional(&pr, Value::Null)).unwrap();
    assert_eq!(code(d.path(), &["refine", "--behavior", "pr.json", "--polytope", "ns-chsh", "--algorithm", "maxgp", "--out", "x.json"]), 3);
}
