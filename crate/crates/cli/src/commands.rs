use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use verisynth::checker::{check, check_policy, dual_lp_synthesize, CheckOptions, CheckResult};
use verisynth::models::{
    induced_mc, model_to_json, parse_model, BeliefLabeling, ConstantSensor, Dfa, DistanceSensor, Model,
    ObservationModel, Objective, Policy, Spec,
};
use verisynth::planner::{reach_avoid_grid, run_ensemble, EnsembleSummary, GridInstance, PlannerConfig, PlanningProblem, Variant};
use verisynth::synth::{
    robust_fsc_synthesis, scenario_verify, scp_param_synthesis, ParametricModel, ScenarioConfig, SynthReport,
    SynthStatus,
};

use crate::args::{BenchmarkKind, CheckArgs, Cli, Command, GenerateArgs, PlanArgs, ScenarioArgs, SynthArgs, SynthMode};
use crate::error::{usage, CliError, Result};
use crate::generate;

/// Exit code of a run that completed and whose specification holds.
pub const EXIT_OK: i32 = 0;
/// Exit code of a run that completed with a violated specification.
pub const EXIT_VIOLATED: i32 = 1;
/// Exit code for errors.
pub const EXIT_ERROR: i32 = 2;

fn verdict(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    }
}

/// Run one command, writing the human or JSON report to `stdout` and
/// artifacts to `--out`. Returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx {
        json: cli.json,
        out: cli.out.clone(),
    };
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    }
    match &cli.command {
        Command::Check(a) => cmd_check(&ctx, a, stdout),
        Command::Synth(a) => cmd_synth(&ctx, a, stdout),
        Command::Scenario(a) => cmd_scenario(&ctx, a, stdout),
        Command::Plan(a) => cmd_plan(&ctx, a, stdout),
        Command::Generate(a) => cmd_generate(&ctx, a, stdout),
    }
}

struct Ctx {
    json: bool,
    out: Option<PathBuf>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.out else { return Ok(None) };
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        info!("wrote {}", path.display());
        Ok(Some(path))
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<Option<PathBuf>> {
        self.write(name, &(serde_json::to_string_pretty(v).expect("json value serializes") + "\n"))
    }

    /// JSON on stdout, or the human text.
    fn emit(&self, stdout: &mut dyn Write, v: &Value, human: &str) -> Result<()> {
        let text = if self.json {
            serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
        } else {
            human.to_string()
        };
        stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

fn load_model(path: &Path) -> Result<Model> {
    parse_model(&read_text(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: verisynth::Error, path: &Path) -> CliError {
    match e {
        verisynth::Error::Parse { msg, .. } => CliError::Core(verisynth::Error::Parse {
            path: path.display().to_string(),
            msg,
        }),
        e => CliError::Core(e),
    }
}

/// Reports on disk must be reproducible, so timing stays on stdout only.
fn without_timing(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove("wall_time_ms");
    }
    v
}

fn cmd_check(ctx: &Ctx, a: &CheckArgs, stdout: &mut dyn Write) -> Result<i32> {
    if !(a.tolerance > 0.0) {
        return Err(usage("--tolerance must be positive"));
    }
    let model = load_model(&a.model)?;
    let spec = Spec::parse(&a.spec, &model)?;
    let opts = CheckOptions {
        tolerance: a.tolerance,
        ..CheckOptions::default()
    };
    let r: CheckResult = match &a.policy {
        Some(p) => {
            let v: Value = read_json(p)?;
            let policy = Policy::from_json(&v, &model).map_err(|e| with_path(e, p))?;
            check_policy(&model, &spec, &policy, &opts)?
        }
        None => check(&model, &spec, &opts)?,
    };
    let satisfied = r.satisfied.unwrap_or(false);
    let mut report = without_timing(serde_json::to_value(&r).expect("report serializes"));
    report["spec"] = json!(spec.to_string());
    ctx.write_json("report.json", &report)?;
    let summary = json!({
        "command": "check",
        "spec": spec.to_string(),
        "value": r.initial_value,
        "satisfied": satisfied,
        "method": r.method,
        "iterations": r.iterations,
        "exact": r.exact,
    });
    let human = format!(
        "model    {} ({}, {} states)\nspec     {spec}\nvalue    {}\nverdict  {}\nmethod   {} ({} iterations{}) in {:.3} ms\n",
        a.model.display(),
        model.kind.as_str(),
        model.num_states(),
        r.initial_value,
        if satisfied { "satisfied" } else { "violated" },
        serde_json::to_value(r.method).expect("method serializes").as_str().unwrap_or("?"),
        r.iterations,
        if r.exact { ", exact" } else { "" },
        r.wall_time_ms
    );
    ctx.emit(stdout, &summary, &human)?;
    Ok(verdict(satisfied))
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = a.scp.config();
    cfg.validate()?;
    match a.mode {
        SynthMode::Dual => {
            let model = load_model(&a.model)?;
            let spec = Spec::parse(&a.spec, &model)?;
            let Objective::Reach(target) = &spec.objective else {
                return Err(usage("dual mode needs a reachability specification"));
            };
            let r = dual_lp_synthesize(&model, target, spec.threshold)?;
            // Closure: the emitted policy must reproduce the objective.
            let recheck = check_policy(&model, &spec, &r.policy, &CheckOptions::default())?.initial_value;
            let satisfied = spec.satisfied_by(r.objective);
            ctx.write_json("policy.json", &r.policy.to_json(&model))?;
            ctx.write("induced.json", &model_to_json(&induced_mc(&model, &r.policy)?))?;
            let report = json!({
                "command": "synth",
                "mode": "dual",
                "spec": spec.to_string(),
                "objective": r.objective,
                "recheck": recheck,
                "satisfied": satisfied,
                "occupancy": r.occupancy,
            });
            ctx.write_json("report.json", &report)?;
            let human = format!(
                "dual LP    objective {}\nre-check   {}\nverdict    {}\n",
                r.objective,
                recheck,
                if satisfied { "satisfied" } else { "violated" }
            );
            ctx.emit(stdout, &report, &human)?;
            Ok(verdict(satisfied))
        }
        SynthMode::ParamScp => {
            let pm = ParametricModel::parse(&read_text(&a.model)?).map_err(|e| with_path(e, &a.model))?;
            let spec = Spec::parse(&a.spec, &pm.skeleton)?;
            let r = scp_param_synthesis(&pm, &spec, &cfg)?;
            finish_scp(ctx, "param-scp", &spec, &r, None, None, stdout)
        }
        SynthMode::RobustFsc => {
            if a.k_memory == 0 {
                return Err(usage("--k-memory must be at least 1"));
            }
            let model = load_model(&a.model)?;
            let spec = Spec::parse(&a.spec, &model)?;
            let r = robust_fsc_synthesis(&model, a.k_memory, &spec, &cfg)?;
            let recheck = match &r.fsc {
                Some(f) => Some(check_policy(&model, &spec, &Policy::Fsc(f.clone()), &CheckOptions::default())?.initial_value),
                None => None,
            };
            finish_scp(ctx, "robust-fsc", &spec, &r, Some(&model), recheck, stdout)
        }
    }
}

fn finish_scp(
    ctx: &Ctx,
    mode: &str,
    spec: &Spec,
    r: &SynthReport,
    model: Option<&Model>,
    recheck: Option<f64>,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let mut report = without_timing(r.to_json(model));
    if let Some(policy) = report.as_object_mut().and_then(|m| m.remove("policy")) {
        ctx.write_json("policy.json", &policy)?;
    }
    report["command"] = json!("synth");
    report["mode"] = json!(mode);
    report["spec"] = json!(spec.to_string());
    if let Some(v) = recheck {
        report["recheck"] = json!(v);
    }
    ctx.write_json("report.json", &report)?;
    ctx.write("trace.csv", &r.trace_csv())?;
    let satisfied = r.status == SynthStatus::Satisfied;
    let mut human = format!(
        "{mode}  status {}\ncertified value  {}\niterations  {} (final δ {:.3e}) in {:.1} ms\n",
        serde_json::to_value(r.status).expect("status serializes").as_str().unwrap_or("?"),
        r.certified_value,
        r.iterations,
        r.final_delta,
        r.wall_time_ms
    );
    if let Some(inst) = &r.instantiation {
        for (k, v) in inst {
            human.push_str(&format!("  {k} = {v}\n"));
        }
    }
    if let Some(v) = recheck {
        human.push_str(&format!("re-check  {v}\n"));
    }
    ctx.emit(stdout, &report, &human)?;
    Ok(verdict(satisfied))
}

fn cmd_scenario(ctx: &Ctx, a: &ScenarioArgs, stdout: &mut dyn Write) -> Result<i32> {
    let pm = ParametricModel::parse(&read_text(&a.model)?).map_err(|e| with_path(e, &a.model))?;
    let spec = Spec::parse(&a.spec, &pm.skeleton)?;
    let d = ScenarioConfig::default();
    let cfg = ScenarioConfig {
        samples: a.samples,
        seed: a.seed,
        nu: a.nu,
        alpha: a.alpha,
        eps_graph: a.eps_graph.unwrap_or(d.eps_graph),
        ..d
    };
    let r = scenario_verify(&pm, &spec, &cfg)?;
    let mut report = without_timing(serde_json::to_value(&r).expect("report serializes"));
    report["spec"] = json!(spec.to_string());
    report["statement"] = json!(r.statement());
    ctx.write_json("report.json", &report)?;

    let names: Vec<&str> = pm.params.iter().map(|p| p.name.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index"];
    header.extend(&names);
    header.extend(["value", "satisfied", "retries"]);
    w.write_record(&header)?;
    for s in &r.details {
        let mut row = vec![s.index.to_string()];
        row.extend(s.params.iter().map(f64::to_string));
        row.extend([s.value.to_string(), s.satisfied.to_string(), s.retries.to_string()]);
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| usage(e.to_string()))?;
    ctx.write("samples.csv", &String::from_utf8(bytes).expect("csv is utf-8"))?;

    let mut human = format!(
        "spec       {spec}\nsamples K  {}\nsatisfied  {} ({:.4})\nviolated L {}\n",
        r.samples, r.sat_count, r.sat_rate, r.viol_count
    );
    if let (Some(nu), Some(alpha)) = (r.nu, r.alpha) {
        human.push_str(&format!("ν = {nu}  →  α = {alpha:e}\n"));
    }
    if let Some((lo, hi)) = r.nu_interval {
        human.push_str(&format!("α target {:e}  →  ν ∈ [{lo}, {hi}]\n", a.alpha.unwrap_or(f64::NAN)));
    }
    if !r.alpha_table.is_empty() {
        human.push_str("ν          α\n");
        for (nu, alpha) in &r.alpha_table {
            human.push_str(&format!("{nu:<10} {alpha:e}\n"));
        }
    }
    if let Some(s) = r.statement() {
        human.push_str(&s);
        human.push('\n');
    }
    ctx.emit(stdout, &report, &human)?;
    Ok(verdict(r.viol_count == 0))
}

/// Sensor file: `{"kind": "distance", ...}` or `{"kind": "constant", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sensor {
    Distance(DistanceSensor),
    Constant(ConstantSensor),
}

impl Sensor {
    pub fn model(&self) -> &dyn ObservationModel {
        match self {
            Sensor::Distance(s) => s,
            Sensor::Constant(s) => s,
        }
    }
}

/// A planning instance as stored on disk.
pub struct Instance {
    pub mdp: Model,
    pub dfa: Dfa,
    pub truth: Vec<BTreeSet<String>>,
    pub prior: BeliefLabeling,
    pub sensor: Sensor,
}

impl Instance {
    pub const FILES: [&'static str; 5] = ["mdp.json", "dfa.json", "truth.json", "prior.json", "sensor.json"];

    pub fn from_grid(g: GridInstance) -> Self {
        Self {
            mdp: g.mdp,
            dfa: g.dfa,
            truth: g.truth,
            prior: g.prior,
            sensor: Sensor::Distance(g.sensor),
        }
    }

    fn load(mdp: &Path, dfa: &Path, truth: &Path, prior: &Path, sensor: &Path) -> Result<Self> {
        let inst = Self {
            mdp: load_model(mdp)?,
            dfa: Dfa::parse(&read_text(dfa)?).map_err(|e| with_path(e, dfa))?,
            truth: read_json(truth)?,
            prior: read_json(prior)?,
            sensor: read_json(sensor)?,
        };
        inst.prior.validate()?;
        Ok(inst)
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let [m, d, t, p, s] = Self::FILES.map(|f| dir.join(f));
        Self::load(&m, &d, &t, &p, &s)
    }

    /// File contents in the order of [`Instance::FILES`].
    pub fn to_files(&self) -> [String; 5] {
        let pretty = |v: Value| serde_json::to_string_pretty(&v).expect("json value serializes") + "\n";
        [
            model_to_json(&self.mdp),
            self.dfa.to_json() + "\n",
            pretty(json!(self.truth)),
            pretty(json!(self.prior)),
            pretty(serde_json::to_value(&self.sensor).expect("sensor serializes")),
        ]
    }

    fn problem(&self) -> PlanningProblem<'_> {
        PlanningProblem {
            mdp: &self.mdp,
            dfa: &self.dfa,
            truth: &self.truth,
            obs: self.sensor.model(),
            prior: &self.prior,
        }
    }
}

fn plan_instances(a: &PlanArgs) -> Result<Vec<Instance>> {
    if !a.instance.is_empty() {
        return a.instance.iter().map(|d| Instance::load_dir(d)).collect();
    }
    if let Some(size) = a.grid {
        if a.instances == 0 {
            return Err(usage("--instances must be at least 1"));
        }
        return (0..a.instances as u64)
            .map(|i| Ok(Instance::from_grid(reach_avoid_grid(size, a.obstacles, a.seed.wrapping_add(i))?)))
            .collect();
    }
    match (&a.model, &a.dfa, &a.truth, &a.prior, &a.sensor) {
        (Some(m), Some(d), Some(t), Some(p), Some(s)) => Ok(vec![Instance::load(m, d, t, p, s)?]),
        _ => Err(usage("plan needs --instance DIR, --grid N, or --model with --dfa/--truth/--prior/--sensor")),
    }
}

fn cmd_plan(ctx: &Ctx, a: &PlanArgs, stdout: &mut dyn Write) -> Result<i32> {
    let variants: Vec<Variant> = if a.variant == "all" {
        Variant::ALL.to_vec()
    } else {
        a.variant
            .split(',')
            .map(|v| Variant::parse(v.trim()).ok_or_else(|| usage(format!("unknown variant `{v}`"))))
            .collect::<Result<_>>()?
    };
    if a.episodes == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    let d = PlannerConfig::default();
    let base = PlannerConfig {
        gamma_d: a.gamma_d.unwrap_or(d.gamma_d),
        gamma_r: a.gamma_r.unwrap_or(d.gamma_r),
        risk_samples: a.risk_samples.unwrap_or(d.risk_samples),
        depth: a.depth.unwrap_or(d.depth),
        beta: a.beta.unwrap_or(d.beta),
        seed: a.seed,
        max_steps: a.max_steps.unwrap_or(d.max_steps),
        variant: d.variant,
    };
    base.validate()?;
    let instances = plan_instances(a)?;
    let problems: Vec<PlanningProblem<'_>> = instances.iter().map(Instance::problem).collect();

    let mut rows = Vec::new();
    let mut human = format!(
        "{:<15} {:>8} {:>9} {:>9} {:>9} {:>10}\n",
        "variant", "episodes", "success", "steps", "plans", "time"
    );
    for v in variants {
        let cfg = PlannerConfig { variant: v, ..base.clone() };
        let t0 = Instant::now();
        let (traces, summary) = run_ensemble(&problems, a.episodes, &cfg)?;
        let secs = t0.elapsed().as_secs_f64();
        for (i, t) in traces.iter().enumerate() {
            ctx.write(&format!("traces/{}-{i}.jsonl", v.as_str()), &t.to_jsonl())?;
        }
        human.push_str(&format!(
            "{:<15} {:>8} {:>8.1}% {:>9.1} {:>9.1} {:>9.2}s\n",
            v.as_str(),
            summary.episodes,
            100.0 * summary.success_rate,
            summary.mean_steps,
            summary.mean_plans,
            secs
        ));
        rows.push(summary);
    }
    ctx.write("summary.csv", &EnsembleSummary::to_csv(&rows))?;
    ctx.emit(stdout, &json!(rows), &human)?;
    Ok(EXIT_OK)
}

fn cmd_generate(ctx: &Ctx, a: &GenerateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let name = match a.kind {
        BenchmarkKind::Grid => "grid",
        BenchmarkKind::Maze => "maze",
        BenchmarkKind::Navigation => "navigation",
        BenchmarkKind::ReachAvoid => "reach-avoid",
    };
    let (files, states, observations): (Vec<(String, String)>, usize, usize) = match a.kind {
        BenchmarkKind::ReachAvoid => {
            let inst = Instance::from_grid(reach_avoid_grid(a.size, a.obstacles, a.seed)?);
            let files = Instance::FILES.iter().map(|f| f.to_string()).zip(inst.to_files()).collect();
            (files, inst.mdp.num_states(), 0)
        }
        kind => {
            let model = match kind {
                BenchmarkKind::Grid => generate::grid(a.size)?,
                BenchmarkKind::Maze => generate::maze(a.size)?,
                _ => generate::navigation(a.size)?,
            };
            let n = (model.num_states(), model.obs_names.len());
            (vec![("model.json".to_string(), model_to_json(&model))], n.0, n.1)
        }
    };
    if ctx.out.is_none() {
        if let [(_, text)] = files.as_slice() {
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
            return Ok(EXIT_OK);
        }
        return Err(usage(format!("{name} writes several files; pass --out DIR")));
    }
    let mut written = Vec::new();
    for (f, text) in &files {
        if let Some(p) = ctx.write(f, text)? {
            written.push(p.display().to_string());
        }
    }
    let report = json!({
        "kind": name,
        "size": a.size,
        "seed": a.seed,
        "states": states,
        "observations": observations,
        "files": written,
    });
    let human = format!(
        "{name}({}) — {states} states{}\n{}\n",
        a.size,
        if observations > 0 { format!(", {observations} observations") } else { String::new() },
        written.join("\n")
    );
    ctx.emit(stdout, &report, &human)?;
    Ok(EXIT_OK)
}
