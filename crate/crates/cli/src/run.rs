//! Task orchestration and report assembly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mmtail::levy::MapSpec;
use mmtail::linalg::{max_abs_diff, Matrix};
use mmtail::markov::{time_reverse_dtmc, Initial, MarkovChain};
use mmtail::mmgou::{euler_check, mmgou_path, simulate_map_path, EulerCheck};
use mmtail::mmlifs::{cycle_moment, MmlifsSpec};
use mmtail::spectral::{
    cramer_system, drift, dual_cramer, geometric_sampling_transform, mc_upsilon, perron, solve_kappa, upsilon,
    CramerSource, DriftReport, KappaOutcome, MatrixEstimate, UpsilonMethod,
};
use mmtail::stream::{Estimate, Streams, DEFAULT_BATCHES};
use mmtail::tail::{check_conditions_continuous, check_conditions_discrete, tail_report, ConditionReport, TailOptions};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, Model, Task};
use crate::error::CliError;

/// Flat table written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Column-aligned text for the terminal.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |cells: Vec<&str>, out: &mut String| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(self.header.clone(), &mut out);
        for row in &self.rows {
            line(row.iter().map(String::as_str).collect(), &mut out);
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

/// The JSON spelling of `x`, so CSV and JSON carry identical numbers.
fn num(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None => x.to_string(),
    }
}

/// Everything a task produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub task: Task,
    pub report: serde_json::Value,
    pub table: Table,
    /// Additional text artifacts: `(file name, contents)`.
    pub extra: Vec<(String, String)>,
    /// Failed checks (`validate` only).
    pub failures: usize,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    task: &'static str,
    schema_version: u32,
    seed: u64,
    model: &'static str,
    states: &'a [String],
    result: T,
}

fn envelope<T: Serialize>(config: &ExperimentConfig, task: Task, result: T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(Envelope {
        task: task.name(),
        schema_version: crate::config::SCHEMA_VERSION,
        seed: config.document.run.seed,
        model: config.model.kind(),
        states: config.model.labels(),
        result,
    })
    .map_err(|e| CliError::Output(e.to_string()))
}

fn streams(config: &ExperimentConfig, task: Task) -> Streams {
    Streams::new(config.document.run.seed, task.name())
}

fn continuous(config: &ExperimentConfig, task: Task) -> Result<&MapSpec, CliError> {
    match &config.model {
        Model::Continuous(m) => Ok(m),
        Model::Discrete(_) => Err(CliError::WrongModel {
            task: task.name(),
            needs: "continuous (map)",
        }),
    }
}

/// Runs `task` on the current rayon pool.
pub fn run(config: &ExperimentConfig, task: Task) -> Result<Outcome, CliError> {
    if let Some(declared) = config.document.task {
        if declared != task {
            return Err(CliError::Invalid(vec![crate::error::Issue::new(
                "task",
                format!("the document declares task {}, not {}", declared.name(), task.name()),
            )]));
        }
    }
    match task {
        Task::SolveKappa => solve_kappa_task(config),
        Task::SimulateTail | Task::Constants => tail_task(config, task),
        Task::CheckConditions => conditions_task(config),
        Task::Validate => validate_task(config),
        Task::MmgouDemo => mmgou_demo(config),
        Task::UpsilonCompare => upsilon_compare(config),
    }
}

#[derive(Serialize)]
struct KappaResult {
    outcome: KappaOutcome,
    drift: Option<DriftReport>,
}

fn kappa_of(config: &ExperimentConfig) -> Result<KappaOutcome, CliError> {
    let theta_max = config.document.run.theta_max;
    Ok(match &config.model {
        Model::Discrete(s) => solve_kappa(s, theta_max)?,
        Model::Continuous(m) => solve_kappa(m, theta_max)?,
    })
}

fn solve_kappa_task(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let outcome = kappa_of(config)?;
    let mut table = Table::new(&["quantity", "value"]);
    let mut add = |k: &str, v: f64| table.push(vec![k.into(), num(v)]);
    let drift = match &outcome {
        KappaOutcome::Found(s) => {
            add("kappa", s.kappa);
            add("residual", s.residual);
            add("drift", s.drift);
            add("bracket_lo", s.bracket.0);
            add("bracket_hi", s.bracket.1);
            add("boundary", f64::from(u8::from(s.boundary)));
            if let Some(edge) = s.domain_edge {
                add("domain_edge", edge);
            }
            Some(match &config.model {
                Model::Discrete(spec) => drift(spec, s.kappa)?,
                Model::Continuous(map) => drift(map, s.kappa)?,
            })
        }
        KappaOutcome::NoTailIndex {
            theta_max,
            rho_at_max,
            domain_edge,
        } => {
            add("theta_max", *theta_max);
            add("rho_at_max", *rho_at_max);
            if let Some(edge) = domain_edge {
                add("domain_edge", *edge);
            }
            None
        }
        KappaOutcome::NonContractive { drift_at_zero } => {
            add("drift_at_zero", *drift_at_zero);
            None
        }
    };
    if let Some(d) = &drift {
        table.push(vec!["stationary_drift".into(), num(d.value)]);
    }
    let report = envelope(config, Task::SolveKappa, KappaResult { outcome, drift })?;
    Ok(Outcome {
        task: Task::SolveKappa,
        report,
        table,
        extra: Vec::new(),
        failures: 0,
    })
}

fn tail_task(config: &ExperimentConfig, task: Task) -> Result<Outcome, CliError> {
    let run = &config.document.run;
    let spec = config.discrete()?;
    let dump = task == Task::SimulateTail;
    let opts = TailOptions {
        samples: run.samples,
        constant_samples: if dump { 0 } else { run.constant_samples },
        tol: run.tol,
        window: run.window,
        hill_k: run.hill_k,
        theta_max: run.theta_max,
        keep_samples: dump,
    };
    let report = tail_report(&spec, &opts, &streams(config, task))?;
    let labels = config.model.labels();
    let mut table = Table::new(&["state", "side", "estimate", "stderr", "method"]);
    for r in report.rows(labels) {
        table.push(vec![r.state, r.side, num(r.estimate), num(r.stderr), r.method]);
    }
    let mut extra = Vec::new();
    if let Some(samples) = &report.samples {
        let mut text = String::from("state value weight\n");
        for (i, xs) in samples.iter().enumerate() {
            for x in xs {
                let _ = writeln!(text, "{} {} 1", labels[i], x);
            }
        }
        extra.push(("samples.txt".to_string(), text));
    }
    Ok(Outcome {
        task,
        report: envelope(config, task, &report)?,
        table,
        extra,
        failures: 0,
    })
}

#[derive(Serialize)]
struct ConditionsResult {
    kappa: Option<f64>,
    /// (B1)-(B4) on the discrete system.
    discrete: ConditionReport,
    /// (A1)-(A4) for a continuous model.
    continuous: Option<ConditionReport>,
}

fn conditions_task(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let kappa = kappa_of(config)?.solution().map(|s| s.kappa);
    let spec = config.discrete()?;
    let mut rng = streams(config, Task::CheckConditions).rng(0);
    let discrete = check_conditions_discrete(&spec, kappa, &mut rng)?;
    let continuous = match &config.model {
        Model::Continuous(map) => Some(check_conditions_continuous(map, kappa, config.document.run.eps)?),
        Model::Discrete(_) => None,
    };
    let mut table = Table::new(&["scope", "condition", "status", "note"]);
    let mut add = |scope: &str, r: &ConditionReport| {
        for e in &r.entries {
            let status = serde_json::to_value(e.status).ok().and_then(|v| v.as_str().map(String::from));
            table.push(vec![scope.into(), e.name.clone(), status.unwrap_or_default(), e.note.clone()]);
        }
    };
    if let Some(c) = &continuous {
        add("continuous", c);
    }
    add("discrete", &discrete);
    let result = ConditionsResult {
        kappa,
        discrete,
        continuous,
    };
    Ok(Outcome {
        task: Task::CheckConditions,
        report: envelope(config, Task::CheckConditions, result)?,
        table,
        extra: Vec::new(),
        failures: 0,
    })
}

/// One invariant of the validation suite.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Observed discrepancy (or z-score for Monte Carlo checks).
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn bound(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: None,
        });
    }

    fn fail(&mut self, name: impl Into<String>, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: f64::NAN,
            detail: Some(detail),
        });
    }

    fn z(&mut self, name: impl Into<String>, e: &Estimate, target: f64) {
        let z = (e.mean - target).abs() / e.stderr;
        self.bound(name, if z.is_finite() { z } else { 0.0 }, VALIDATE_Z);
    }
}

/// Monte Carlo checks of `validate` allow four standard errors.
const VALIDATE_Z: f64 = 4.0;

fn spectral_checks(suite: &mut Suite, source: &(impl CramerSource + ?Sized), kappa: f64) -> Result<(), CliError> {
    for (tag, theta) in [("kappa/2", kappa / 2.0), ("kappa", kappa)] {
        let sys = cramer_system(source, theta)?;
        suite.bound(format!("cramer-invariants@{tag}"), sys.residuals().max(), 1e-9);
        let dual = dual_cramer(&sys);
        let direct = perron(dual.p_theta())?;
        suite.bound(format!("dual-root@{tag}"), (direct.rho - sys.rho()).abs(), 1e-12);
        let inv = sys.v().iter().zip(dual.v()).map(|(a, b)| (a * b - 1.0).abs()).fold(0.0, f64::max);
        suite.bound(format!("dual-eigenvector@{tag}"), inv, 1e-12);
        let g = perron(&geometric_sampling_transform(sys.p_theta())?)?;
        let rho = sys.rho();
        suite.bound(format!("geometric-root@{tag}"), (g.rho - rho / (2.0 - rho)).abs(), 1e-10);
        let dv = max_abs_diff(&g.u, sys.u()).max(max_abs_diff(&g.v, sys.v()));
        suite.bound(format!("geometric-eigenvectors@{tag}"), dv, 1e-10);
    }
    let d = drift(source, kappa)?;
    suite.bound(
        "drift-derivative",
        (d.rho_prime - d.rho_prime_fd).abs() / d.rho_prime.abs().max(1.0),
        1e-5,
    );
    Ok(())
}

fn discrete_checks(suite: &mut Suite, spec: &MmlifsSpec, kappa: f64, cycles: usize, s: &Streams) -> Result<(), CliError> {
    let chain = spec.chain();
    suite.bound("stationary-law", chain.fixed_point_residual(spec.pi()), chain.tolerances().fixed_point);
    let law = chain.stationary_law()?;
    let back = time_reverse_dtmc(&time_reverse_dtmc(chain, &law)?, &law)?;
    suite.bound("reversal-involution", back.p().max_abs_diff(chain.p()), 1e-12);
    for i in 0..spec.len() {
        let e = cycle_moment(spec, i, kappa, cycles, &s.child(&format!("cycle{i}")));
        suite.z(format!("return-time-identity[{}]", chain.states().label(i)), &e, 1.0);
    }
    Ok(())
}

fn validate_task(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let run = &config.document.run;
    let s = streams(config, Task::Validate);
    let mut suite = Suite::default();
    let spec = config.discrete()?;
    match kappa_of(config)? {
        KappaOutcome::Found(sol) => {
            suite.bound("kappa-residual", sol.residual, 1e-8);
            match &config.model {
                Model::Discrete(d) => spectral_checks(&mut suite, d, sol.kappa)?,
                Model::Continuous(map) => {
                    spectral_checks(&mut suite, map, sol.kappa)?;
                    let closed = upsilon(map, sol.kappa, UpsilonMethod::ClosedForm)?;
                    let mc = mc_upsilon(map, sol.kappa, run.mc_draws, &s.child("upsilon"), DEFAULT_BATCHES)?;
                    suite.bound("upsilon-closed-vs-mc", mc.max_z(&closed), VALIDATE_Z);
                }
            }
            discrete_checks(&mut suite, &spec, sol.kappa, run.cycles, &s)?;
        }
        other => suite.fail("kappa", format!("{:?}", other)),
    }
    let failures = suite.checks.iter().filter(|c| !c.passed).count();
    let mut table = Table::new(&["check", "passed", "value", "tolerance"]);
    for c in &suite.checks {
        table.push(vec![c.name.clone(), c.passed.to_string(), num(c.value), num(c.tolerance)]);
    }
    #[derive(Serialize)]
    struct ValidateResult {
        passed: bool,
        failures: usize,
        checks: Vec<Check>,
    }
    let result = ValidateResult {
        passed: failures == 0,
        failures,
        checks: suite.checks,
    };
    Ok(Outcome {
        task: Task::Validate,
        report: envelope(config, Task::Validate, result)?,
        table,
        extra: Vec::new(),
        failures,
    })
}

#[derive(Serialize)]
struct PathSummary {
    path: usize,
    switches: usize,
    jumps: usize,
    final_state: String,
    final_v: f64,
}

#[derive(Serialize)]
struct DemoResult {
    horizon: f64,
    dt: f64,
    v0: f64,
    paths: Vec<PathSummary>,
    euler: EulerCheck,
}

fn mmgou_demo(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let map = continuous(config, Task::MmgouDemo)?;
    let run = &config.document.run;
    let dt = config.dt();
    let s = streams(config, Task::MmgouDemo);
    let initial = Initial::Law(map.chain().stationary_law()?.probabilities().to_vec());
    let labels = config.model.labels();
    let mut text = String::from("path time state zeta eta V\n");
    let mut summaries = Vec::new();
    let mut table = Table::new(&["path", "switches", "jumps", "final_state", "final_v"]);
    for p in 0..run.paths {
        let mut rng = s.child("paths").rng(p as u64);
        let path = simulate_map_path(map, &initial, run.horizon, dt, &mut rng)?;
        let v = mmgou_path(&path, run.v0)?;
        for k in 0..path.len() {
            let _ = writeln!(
                text,
                "{p} {} {} {} {} {}",
                path.times[k],
                labels[path.states[k.min(path.states.len() - 1)]],
                path.zeta[k],
                path.eta[k],
                v.values[k]
            );
        }
        let last = path.len() - 1;
        let summary = PathSummary {
            path: p,
            switches: path.marks.len(),
            jumps: path.jumps.len(),
            final_state: labels[path.states[last.min(path.states.len() - 1)]].clone(),
            final_v: v.values[last],
        };
        table.push(vec![
            p.to_string(),
            summary.switches.to_string(),
            summary.jumps.to_string(),
            summary.final_state.clone(),
            num(summary.final_v),
        ]);
        summaries.push(summary);
    }
    let euler = euler_check(map, &initial, run.horizon, dt, run.v0, run.paths, &s.child("euler"))?;
    let result = DemoResult {
        horizon: run.horizon,
        dt,
        v0: run.v0,
        paths: summaries,
        euler,
    };
    Ok(Outcome {
        task: Task::MmgouDemo,
        report: envelope(config, Task::MmgouDemo, result)?,
        table,
        extra: vec![("paths.txt".to_string(), text)],
        failures: 0,
    })
}

fn rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[derive(Serialize)]
struct UpsilonResult {
    theta: f64,
    closed_form: Vec<Vec<f64>>,
    quadrature: Option<Vec<Vec<f64>>>,
    quadrature_error: Option<String>,
    mc_mean: Vec<Vec<f64>>,
    mc_stderr: Vec<Vec<f64>>,
    mc_samples_per_row: usize,
    /// Largest entrywise `|closed - mc| / stderr`.
    max_z_closed_form: f64,
    /// Largest entrywise `|integral - closed|`.
    quadrature_deviation: Option<f64>,
    max_z_quadrature: Option<f64>,
}

fn upsilon_compare(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let map = continuous(config, Task::UpsilonCompare)?;
    let run = &config.document.run;
    let theta = match run.theta {
        Some(t) => t,
        None => kappa_of(config)?.require()?.kappa,
    };
    let closed = upsilon(map, theta, UpsilonMethod::ClosedForm)?;
    let integral = upsilon(map, theta, UpsilonMethod::Quadrature);
    let mc: MatrixEstimate = mc_upsilon(
        map,
        theta,
        run.mc_draws,
        &streams(config, Task::UpsilonCompare),
        DEFAULT_BATCHES,
    )?;
    let labels = config.model.labels();
    let n = map.len();
    let mut table = Table::new(&["from", "to", "closed_form", "quadrature", "mc_mean", "mc_stderr"]);
    for i in 0..n {
        for j in 0..n {
            table.push(vec![
                labels[i].clone(),
                labels[j].clone(),
                num(closed[(i, j)]),
                integral.as_ref().map(|m| num(m[(i, j)])).unwrap_or_default(),
                num(mc.mean[(i, j)]),
                num(mc.stderr[(i, j)]),
            ]);
        }
    }
    let result = UpsilonResult {
        theta,
        closed_form: rows(&closed),
        quadrature: integral.as_ref().ok().map(rows),
        quadrature_error: integral.as_ref().err().map(|e| e.to_string()),
        mc_mean: rows(&mc.mean),
        mc_stderr: rows(&mc.stderr),
        mc_samples_per_row: mc.samples_per_row,
        max_z_closed_form: mc.max_z(&closed),
        quadrature_deviation: integral.as_ref().ok().map(|m| m.max_abs_diff(&closed)),
        max_z_quadrature: integral.as_ref().ok().map(|m| mc.max_z(m)),
    };
    Ok(Outcome {
        task: Task::UpsilonCompare,
        report: envelope(config, Task::UpsilonCompare, result)?,
        table,
        extra: Vec::new(),
        failures: 0,
    })
}

/// Writes `<task>.json`, `<task>.csv` and any extra artifacts into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(io(&path))?;
        written.push(path);
        Ok(())
    };
    let stem = outcome.task.name();
    if format.json() {
        let mut text =
            serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        put(format!("{stem}.json"), &text)?;
    }
    if format.csv() {
        put(format!("{stem}.csv"), &outcome.table.to_csv()?)?;
    }
    for (name, contents) in &outcome.extra {
        put(name.clone(), contents)?;
    }
    Ok(written)
}
