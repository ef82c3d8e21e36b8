use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use verisynth::checker::{check, CheckOptions};
use verisynth::models::{parse_model, Spec};
use verisynth::synth::confidence_bound;

const RUNNING_MDP: &str = r#"{
  "type": "mdp",
  "states": 8,
  "initial": 0,
  "rows": [
    {"s": 0, "a": "a", "to": [{"s": 1, "p": 0.7}, {"s": 2, "p": 0.3}]},
    {"s": 1, "a": "a", "to": [{"s": 3, "p": 0.5}, {"s": 4, "p": 0.5}]},
    {"s": 2, "a": "a", "to": [{"s": 5, "p": 0.5}, {"s": 4, "p": 0.5}]},
    {"s": 3, "a": "a", "to": [{"s": 3, "p": 1.0}]},
    {"s": 3, "a": "b", "to": [{"s": 6, "p": 1.0}]},
    {"s": 4, "a": "a", "to": [{"s": 6, "p": 1.0}]},
    {"s": 4, "a": "b", "to": [{"s": 4, "p": 1.0}]},
    {"s": 5, "a": "a", "to": [{"s": 6, "p": 0.3}, {"s": 7, "p": 0.7}]},
    {"s": 5, "a": "b", "to": [{"s": 7, "p": 1.0}]},
    {"s": 6, "a": "a", "to": [{"s": 6, "p": 1.0}]},
    {"s": 7, "a": "a", "to": [{"s": 7, "p": 1.0}]}
  ],
  "labels": {"6": ["target"]}
}"#;

// s0, s1, s2 share an observation; only up-then-down from s0 (or the
// mirrored path) reaches s3 surely, which needs one bit of memory.
const MOTIVATING_POMDP: &str = r#"{
  "type": "pomdp",
  "states": 5,
  "initial": 0,
  "rows": [
    {"s": 0, "a": "up", "to": [{"s": 1, "p": 1.0}]},
    {"s": 0, "a": "down", "to": [{"s": 2, "p": 1.0}]},
    {"s": 1, "a": "up", "to": [{"s": 4, "p": 1.0}]},
    {"s": 1, "a": "down", "to": [{"s": 3, "p": 1.0}]},
    {"s": 2, "a": "up", "to": [{"s": 3, "p": 1.0}]},
    {"s": 2, "a": "down", "to": [{"s": 4, "p": 1.0}]},
    {"s": 3, "a": "stay", "to": [{"s": 3, "p": 1.0}]},
    {"s": 4, "a": "stay", "to": [{"s": 4, "p": 1.0}]}
  ],
  "obs": {"0": "blue", "1": "blue", "2": "blue", "3": "goal", "4": "sink"},
  "labels": {"3": ["target"]}
}"#;

// Reaching s3 has probability v²(1 − v).
const CHAIN_PMC: &str = r#"{
  "type": "mdp",
  "states": 5,
  "initial": 0,
  "parameters": [{"name": "v", "lo": 0.05, "hi": 0.95}],
  "rows": [
    {"s": 0, "to": [{"s": 1, "poly": {"v": 1}}, {"s": 4, "poly": {"1": 1, "v": -1}}]},
    {"s": 1, "to": [{"s": 2, "poly": {"1": 1, "v": -1}}, {"s": 4, "poly": {"v": 1}}]},
    {"s": 2, "to": [{"s": 3, "poly": {"v": 1}}, {"s": 4, "poly": {"1": 1, "v": -1}}]},
    {"s": 3, "to": [{"s": 3, "p": 1}]},
    {"s": 4, "to": [{"s": 4, "p": 1}]}
  ],
  "labels": {"3": ["target"]}
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_verisynth"));
    c.env_remove("VERISYNTH_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_running_mdp_satisfied() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "m.json", RUNNING_MDP);
    let o = run(&["check", "--model", &m, "--spec", "reach >= 0.85 {s6}", "--json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["value"].as_f64().unwrap() - 0.895).abs() < 1e-9);
    assert_eq!(v["satisfied"], Value::Bool(true));
}

#[test]
fn check_running_mdp_violated() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "m.json", RUNNING_MDP);
    let o = run(&["check", "--model", &m, "--spec", "reach >= 0.9 {s6}"]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("violated"), "{text}");
}

#[test]
fn malformed_inputs_exit_2() {
    let d = TempDir::new().unwrap();
    let bad = write(d.path(), "bad.json", r#"{"type": "mdp", "states": 2"#);
    let o = run(&["check", "--model", &bad, "--spec", "reach >= 0.5 {s1}"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));

    let unnormalised = write(
        d.path(),
        "rows.json",
        r#"{"type": "mdp", "states": 1, "initial": 0, "rows": [{"s": 0, "to": [{"s": 0, "p": 0.5}]}]}"#,
    );
    assert_eq!(code(&run(&["check", "--model", &unnormalised, "--spec", "reach >= 0.5 {s0}"])), 2);

    let missing = d.path().join("nope.json");
    assert_eq!(code(&run(&["check", "--model", s(&missing), "--spec", "reach >= 0.5 {s0}"])), 2);

    let m = write(d.path(), "m.json", RUNNING_MDP);
    assert_eq!(code(&run(&["check", "--model", &m, "--spec", "reach >= 0.5 {nowhere}"])), 2);
    assert_eq!(code(&run(&["check", "--model", &m, "--spec", "reach >= 1.5 {s6}"])), 2);
    // Usage errors from argument parsing use the same code.
    assert_eq!(code(&run(&["check", "--model", &m])), 2);
}

#[test]
fn dual_synthesis_closes_the_pipeline() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "m.json", RUNNING_MDP);
    let out = d.path().join("dual");
    let o = run(&["synth", "--mode", "dual", "--model", &m, "--spec", "reach >= 0.85 {s6}", "--out", s(&out), "--json"]);
    assert_eq!(code(&o), 0);
    let report = stdout_json(&o);
    let objective = report["objective"].as_f64().unwrap();
    assert!((objective - 0.895).abs() < 1e-9);
    assert!((report["recheck"].as_f64().unwrap() - objective).abs() < 1e-9);

    // The emitted policy re-checks to the objective on the original model…
    let policy = out.join("policy.json");
    let o = run(&["check", "--model", &m, "--spec", "reach >= 0.85 {s6}", "--policy", s(&policy), "--json"]);
    assert_eq!(code(&o), 0);
    assert!((stdout_json(&o)["value"].as_f64().unwrap() - objective).abs() < 1e-9);

    // …and the induced chain is a valid model file meeting the threshold.
    let induced = out.join("induced.json");
    let chain = parse_model(&std::fs::read_to_string(&induced).unwrap()).unwrap();
    let r = check(&chain, &Spec::parse("reach >= 0.85 {s6}", &chain).unwrap(), &CheckOptions::default()).unwrap();
    assert!(r.initial_value >= 0.85);
    assert_eq!(code(&run(&["check", "--model", s(&induced), "--spec", "reach >= 0.85 {s6}"])), 0);

    assert_eq!(report, read_json(out.join("report.json")));
}

#[test]
fn dual_needs_a_reachability_spec() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "m.json", RUNNING_MDP);
    assert_eq!(code(&run(&["synth", "--mode", "dual", "--model", &m, "--spec", "cost <= 3 {s6}"])), 2);
}

#[test]
fn param_scp_trace_is_monotone() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "pmc.json", CHAIN_PMC);
    let out = d.path().join("scp");
    // 4/27 is the largest value v²(1 − v) can take, so 0.2 is out of reach.
    let o = run(&["synth", "--mode", "param-scp", "--model", &m, "--spec", "reach >= 0.2", "--out", s(&out), "--json"]);
    assert_eq!(code(&o), 1);
    let report = stdout_json(&o);
    assert_eq!(report["status"], "no-improvement");
    let v = report["instantiation"]["v"].as_f64().unwrap();
    let certified = report["certified_value"].as_f64().unwrap();
    assert!((certified - v * v * (1.0 - v)).abs() < 1e-6);
    assert!(certified >= 4.0 / 27.0 - 1e-3);

    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let accepted: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[4] == "true")
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(!accepted.is_empty());
    assert!(accepted.windows(2).all(|w| w[1] > w[0]), "{accepted:?}");
}

#[test]
fn robust_fsc_on_the_motivating_pomdp() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "pomdp.json", MOTIVATING_POMDP);
    let out = d.path().join("fsc");
    let o = run(&[
        "synth", "--mode", "robust-fsc", "--model", &m, "--spec", "reach >= 0.9", "--k-memory", "2", "--out", s(&out), "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    let certified = report["certified_value"].as_f64().unwrap();
    assert!(certified >= 0.9);
    assert!((report["recheck"].as_f64().unwrap() - certified).abs() < 1e-6);

    let o = run(&["check", "--model", &m, "--spec", "reach >= 0.9", "--policy", s(&out.join("policy.json")), "--json"]);
    assert_eq!(code(&o), 0);
    assert!((stdout_json(&o)["value"].as_f64().unwrap() - certified).abs() < 1e-6);
}

#[test]
fn scenario_reports_are_reproducible() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "pmc.json", CHAIN_PMC);
    let runs: Vec<(Output, PathBuf)> = (0..2)
        .map(|i| {
            let out = d.path().join(format!("sc{i}"));
            let o = run(&[
                "scenario", "--model", &m, "--spec", "reach >= 0.05", "--samples", "1000", "--alpha", "1e-6", "--seed", "11",
                "--out", s(&out), "--json",
            ]);
            (o, out)
        })
        .collect();
    for (o, _) in &runs {
        assert_eq!(code(o), 1, "some samples violate");
    }
    assert_eq!(runs[0].0.stdout, runs[1].0.stdout);
    for f in ["report.json", "samples.csv"] {
        assert_eq!(std::fs::read(runs[0].1.join(f)).unwrap(), std::fs::read(runs[1].1.join(f)).unwrap());
    }

    // The bisected tolerance is consistent with the bound itself.
    let r = stdout_json(&runs[0].0);
    let (k, l) = (r["samples"].as_u64().unwrap() as usize, r["viol_count"].as_u64().unwrap() as usize);
    assert_eq!(k, 1000);
    let lo = r["nu_interval"][0].as_f64().unwrap();
    let hi = r["nu_interval"][1].as_f64().unwrap();
    assert!(lo <= hi && hi - lo < 1e-6);
    assert!(confidence_bound(k, l, hi).unwrap() <= 1e-6);
    assert!(confidence_bound(k, l, lo).unwrap() >= 1e-6);

    let samples = std::fs::read_to_string(runs[0].1.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().next(), Some("index,v,value,satisfied,retries"));
    assert_eq!(samples.lines().count(), 1001);
    let violated = samples.lines().skip(1).filter(|l| l.contains(",false,")).count();
    assert_eq!(violated, l);
}

#[test]
fn scenario_with_a_tolerance_reports_its_bound() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "pmc.json", CHAIN_PMC);
    let o = run(&["scenario", "--model", &m, "--spec", "reach >= 0.0", "--samples", "200", "--nu", "0.05", "--json"]);
    assert_eq!(code(&o), 0, "every sample satisfies a zero threshold");
    let r = stdout_json(&o);
    assert_eq!(r["viol_count"], 0);
    let alpha = r["alpha"].as_f64().unwrap();
    assert_eq!(alpha, confidence_bound(200, 0, 0.05).unwrap());
}

fn generate(kind: &str, size: &str, out: &Path) -> Output {
    run(&["generate", kind, "--size", size, "--out", s(out), "--json"])
}

#[test]
fn maze_one_reproduces_the_layout() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&generate("maze", "1", d.path())), 0);
    let text = std::fs::read_to_string(d.path().join("model.json")).unwrap();
    let m = parse_model(&text).unwrap();
    assert_eq!(m.num_states(), 11);
    assert_eq!(m.states_with_label("goal"), [9].into());
    let obs = |s: usize| m.obs_names[m.obs(s).unwrap()].clone();
    // Top corridor: three distinct corner/junction classes and one shared
    // class for the two plain corridor cells.
    assert_eq!(obs(1), obs(3));
    let top = [obs(0), obs(1), obs(2), obs(4)];
    for i in 0..4 {
        for j in i + 1..4 {
            assert_ne!(top[i], top[j]);
        }
    }
    // The three vertical corridor cells in the middle row look alike.
    assert_eq!(obs(5), obs(6));
    assert_eq!(obs(6), obs(7));
    assert!(!top.contains(&obs(5)));
    // Dead ends at the bottom are indistinguishable; the goal is not.
    assert_eq!(obs(8), obs(10));
    assert_ne!(obs(9), obs(8));
    // Uniform start over every location except the goal.
    assert_eq!(m.initial.len(), 10);
    assert!(m.initial.iter().all(|&(s, p)| s != 9 && (p - 0.1).abs() < 1e-12));
    // Topology: s0–s4 form a corridor; columns hang below s0, s2 and s4.
    let step = |s: usize, a: &str| {
        let c = m.choice_index(s, m.action_id(a).unwrap()).unwrap();
        m.choices[s][c].transitions[0].0
    };
    assert_eq!((0..4).map(|s| step(s, "right")).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    assert_eq!([step(0, "down"), step(2, "down"), step(4, "down")], [5, 6, 7]);
    assert_eq!([step(5, "down"), step(6, "down"), step(7, "down")], [8, 9, 10]);
    assert_eq!(step(1, "down"), 1);
    assert_eq!(step(9, "up"), 9, "goal is absorbing");
}

#[test]
fn larger_mazes_add_corridor_rows() {
    for c in 1..=4usize {
        let d = TempDir::new().unwrap();
        assert_eq!(code(&generate("maze", &c.to_string(), d.path())), 0);
        let m = parse_model(&std::fs::read_to_string(d.path().join("model.json")).unwrap()).unwrap();
        assert_eq!(m.num_states(), 5 + 3 * (c + 1));
        let corridor = m.obs_id("walls-LR").unwrap();
        assert_eq!((0..m.num_states()).filter(|&s| m.obs(s) == Some(corridor)).count(), 3 * c);
    }
}

#[test]
fn grid_of_size_one_is_already_at_the_goal() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&generate("grid", "1", d.path())), 0);
    let model = d.path().join("model.json");
    let o = run(&["check", "--model", s(&model), "--spec", "cost <= 0 {goal}", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["value"].as_f64().unwrap(), 0.0);
    let o = run(&["check", "--model", s(&model), "--spec", "reach >= 1 {goal}", "--json"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn grid_observes_only_the_goal() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&generate("grid", "4", d.path())), 0);
    let m = parse_model(&std::fs::read_to_string(d.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(m.num_states(), 16);
    assert_eq!(m.obs_names.len(), 2);
    assert_eq!(m.states_with_label("goal"), [3].into(), "top-right corner");
    assert_eq!(m.initial.len(), 15);
}

#[test]
fn navigation_has_eight_relative_observations() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&generate("navigation", "3", d.path())), 0);
    let m = parse_model(&std::fs::read_to_string(d.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(m.num_states(), 81 + 2);
    let rel: Vec<&String> = m
        .obs_names
        .iter()
        .filter(|o| !["none", "goal", "crash"].contains(&o.as_str()))
        .collect();
    assert_eq!(rel.len(), 8, "{:?}", m.obs_names);
    let r = check(&m, &Spec::parse("reach >= 0.5 {goal}", &m).unwrap(), &CheckOptions::default()).unwrap();
    assert!(r.initial_value > 0.0 && r.initial_value < 1.0);
}

#[test]
fn generators_are_deterministic_and_reject_size_zero() {
    for kind in ["grid", "maze", "navigation", "reach-avoid"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(code(&generate(kind, "4", a.path())), 0);
        assert_eq!(code(&generate(kind, "4", b.path())), 0);
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{kind}");
        }
        let c = TempDir::new().unwrap();
        assert_eq!(code(&generate(kind, "0", c.path())), 2, "{kind}");
    }
}

#[test]
fn generated_models_pass_through_the_checker() {
    let d = TempDir::new().unwrap();
    for (kind, spec) in [("grid", "cost <= 100 {goal}"), ("maze", "cost <= 100 {goal}"), ("navigation", "reach >= 0 {goal}")] {
        let out = d.path().join(kind);
        assert_eq!(code(&generate(kind, "2", &out)), 0);
        let model = out.join("model.json");
        let text = std::fs::read_to_string(&model).unwrap();
        let m = parse_model(&text).unwrap();
        let expected = check(&m, &Spec::parse(spec, &m).unwrap(), &CheckOptions::default()).unwrap();
        let o = run(&["check", "--model", s(&model), "--spec", spec, "--json"]);
        assert_eq!(code(&o), 0, "{kind}");
        assert_eq!(stdout_json(&o)["value"].as_f64().unwrap(), expected.initial_value);
    }
}

#[test]
fn generate_without_out_prints_the_model() {
    let o = run(&["generate", "maze", "--size", "1"]);
    assert_eq!(code(&o), 0);
    let m = parse_model(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(m.num_states(), 11);
    // Instances span several files.
    assert_eq!(code(&run(&["generate", "reach-avoid", "--size", "4"])), 2);
}

#[test]
fn plan_writes_traces_and_summary() {
    let d = TempDir::new().unwrap();
    let inst = d.path().join("inst");
    assert_eq!(code(&run(&["generate", "reach-avoid", "--size", "5", "--obstacles", "4", "--seed", "2", "--out", s(&inst)])), 0);
    let out = d.path().join("plan");
    let o = run(&[
        "plan", "--instance", s(&inst), "--episodes", "1", "--variant", "divergence", "--seed", "5", "--out", s(&out), "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout_json(&o);
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["variant"], "divergence");

    let traces: Vec<_> = std::fs::read_dir(out.join("traces")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(traces, vec![std::ffi::OsString::from("divergence-0.jsonl")]);
    let trace = std::fs::read_to_string(out.join("traces/divergence-0.jsonl")).unwrap();
    let records: Vec<Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!records.is_empty());
    assert!(records.iter().enumerate().all(|(t, r)| r["t"] == t));
    assert_eq!(records[0]["replanned"], true);

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("variant,episodes,success_rate,mean_steps,mean_plans"));
    assert_eq!(summary.lines().count(), 2);

    // Explicit instance files give the same run.
    let files: Vec<String> = ["mdp", "dfa", "truth", "prior", "sensor"]
        .iter()
        .map(|f| s(&inst.join(format!("{f}.json"))).to_string())
        .collect();
    let o2 = run(&[
        "plan", "--model", &files[0], "--dfa", &files[1], "--truth", &files[2], "--prior", &files[3], "--sensor", &files[4],
        "--episodes", "1", "--variant", "divergence", "--seed", "5", "--json",
    ]);
    assert_eq!(code(&o2), 0);
    assert_eq!(stdout_json(&o2), rows);
}

#[test]
fn plan_without_perception_rarely_succeeds() {
    let o = run(&[
        "plan", "--grid", "6", "--obstacles", "4", "--instances", "6", "--episodes", "60", "--variant",
        "no-perception,always-replan", "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout_json(&o);
    let none = rows[0]["success_rate"].as_f64().unwrap();
    let replan = rows[1]["success_rate"].as_f64().unwrap();
    assert_eq!(rows[0]["variant"], "no-perception");
    assert!(none < 0.1, "{none}");
    assert!(replan > none + 0.3, "{replan} vs {none}");
}

#[test]
fn plan_rejects_bad_arguments() {
    assert_eq!(code(&run(&["plan", "--grid", "4", "--variant", "psychic"])), 2);
    assert_eq!(code(&run(&["plan", "--grid", "4", "--episodes", "0"])), 2);
    assert_eq!(code(&run(&["plan", "--grid", "4", "--gamma-r", "-1"])), 2);
    assert_eq!(code(&run(&["plan"])), 2);
    let d = TempDir::new().unwrap();
    let sensor = write(d.path(), "sensor.json", r#"{"kind": "sonar"}"#);
    let o = run(&[
        "plan", "--model", &sensor, "--dfa", &sensor, "--truth", &sensor, "--prior", &sensor, "--sensor", &sensor,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_cap_is_validated() {
    let d = TempDir::new().unwrap();
    let m = write(d.path(), "m.json", RUNNING_MDP);
    let args = ["check", "--model", m.as_str(), "--spec", "reach >= 0.85 {s6}"];
    let o = bin().args(args).env("VERISYNTH_THREADS", "0").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = bin().args(args).env("VERISYNTH_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
}
