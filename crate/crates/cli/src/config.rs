//! Experiment configuration documents (TOML, schema version 1).

use std::path::PathBuf;

use mmtail::levy::{DistributionSpec, JointAtom, LevyComponentSpec, MapSpec, SwitchJumpKernel, SwitchJumpLaw};
use mmtail::linalg::Matrix;
use mmtail::markov::{ChainTolerances, CtmcSpec, DtmcSpec, StateSpace};
use mmtail::mmgou::default_step;
use mmtail::mmlifs::{CellLaw, CoefficientAtom, MmlifsSpec};
use mmtail::tail::QuantileWindow;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Issue};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SolveKappa,
    SimulateTail,
    Constants,
    CheckConditions,
    Validate,
    MmgouDemo,
    UpsilonCompare,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SolveKappa => "solve-kappa",
            Task::SimulateTail => "simulate-tail",
            Task::Constants => "constants",
            Task::CheckConditions => "check-conditions",
            Task::Validate => "validate",
            Task::MmgouDemo => "mmgou-demo",
            Task::UpsilonCompare => "upsilon-compare",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// The document as written, with defaults filled in after parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub run: RunDoc,
    #[serde(default)]
    pub output: OutputDoc,
    pub chain: ChainDoc,
    /// Cell laws of a discrete model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel: Vec<CellDoc>,
    /// Per-state components of a continuous model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    pub states: Vec<String>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    /// Rates of switches from a state to itself (continuous models only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_switch_rates: Option<Vec<f64>>,
    #[serde(default = "default_row_sum_tol")]
    pub row_sum_tol: f64,
    #[serde(default = "default_fixed_point_tol")]
    pub fixed_point_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub p_negative: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_abs_a: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<CoefficientAtom>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub states: Vec<StateLevyDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub switch: Vec<SwitchDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateLevyDoc {
    pub state: String,
    #[serde(default)]
    pub zeta: LevyComponentSpec,
    #[serde(default)]
    pub eta: LevyComponentSpec,
    #[serde(default)]
    pub cov: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchDoc {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<JointAtom>>,
}

/// Sample sizes, tolerances and other knobs shared by the tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    #[serde(default)]
    pub seed: u64,
    /// Stationary draws per state.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Coupled draws per state for the tail constants.
    #[serde(default = "default_samples")]
    pub constant_samples: usize,
    /// Truncation tolerance of the stationary sampler.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub window: QuantileWindow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hill_k: Option<usize>,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    /// Sub-grid step for continuous models; filled from the model if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Margin of the moment condition on the continuous model.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub v0: f64,
    /// Monte Carlo draws for first-switch transforms.
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    /// Regeneration cycles for the return-time identity.
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    /// Evaluation point of `upsilon-compare`; `κ` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Default for RunDoc {
    fn default() -> Self {
        RunDoc {
            seed: 0,
            samples: default_samples(),
            constant_samples: default_samples(),
            tol: default_tol(),
            window: QuantileWindow::default(),
            hill_k: None,
            theta_max: default_theta_max(),
            dt: None,
            eps: default_eps(),
            horizon: default_horizon(),
            paths: default_paths(),
            v0: 0.0,
            mc_draws: default_mc_draws(),
            cycles: default_cycles(),
            theta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputDoc {
    fn default() -> Self {
        OutputDoc {
            dir: default_dir(),
            format: Format::default(),
        }
    }
}

fn default_row_sum_tol() -> f64 {
    ChainTolerances::default().row_sum
}
fn default_fixed_point_tol() -> f64 {
    ChainTolerances::default().fixed_point
}
fn default_samples() -> usize {
    100_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_theta_max() -> f64 {
    64.0
}
fn default_eps() -> f64 {
    0.05
}
fn default_horizon() -> f64 {
    10.0
}
fn default_paths() -> usize {
    4
}
fn default_mc_draws() -> usize {
    100_000
}
fn default_cycles() -> usize {
    20_000
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Discrete(MmlifsSpec),
    Continuous(MapSpec),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Discrete(_) => "mmlifs",
            Model::Continuous(_) => "map",
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Model::Discrete(s) => s.chain().states().labels(),
            Model::Continuous(m) => m.chain().states().labels(),
        }
    }
}

/// A validated configuration: the filled-in document and the model it
/// describes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub document: ConfigDocument,
    pub model: Model,
}

impl ExperimentConfig {
    /// The discrete system the tail tasks run on: the model itself, or the
    /// system observed at the switch epochs of a continuous model.
    pub fn discrete(&self) -> mmtail::Result<MmlifsSpec> {
        match &self.model {
            Model::Discrete(s) => Ok(s.clone()),
            Model::Continuous(m) => MmlifsSpec::derived(m, self.dt()),
        }
    }

    pub fn dt(&self) -> f64 {
        self.document.run.dt.unwrap_or(0.01)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(&self.document).map_err(|e| CliError::Output(e.to_string()))
    }

    /// Re-checks the run section after command-line overrides.
    pub fn revalidate(&self) -> Result<(), CliError> {
        let mut issues = Vec::new();
        check_run(&self.document.run, &mut issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(issues))
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let document: ConfigDocument = toml::from_str(text).map_err(|e| CliError::Syntax(e.to_string()))?;
    from_document(document)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Validates a document, collecting every problem found.
pub fn from_document(mut document: ConfigDocument) -> Result<ExperimentConfig, CliError> {
    let mut issues = Vec::new();
    if document.schema_version != SCHEMA_VERSION {
        issues.push(Issue::new(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", document.schema_version),
        ));
    }
    check_run(&document.run, &mut issues);
    if document.output.dir.as_os_str().is_empty() {
        issues.push(Issue::new("output.dir", "must be nonempty"));
    }
    let model = build_model(&document, &mut issues);
    match model {
        Some(model) if issues.is_empty() => {
            if let Model::Continuous(map) = &model {
                document.run.dt.get_or_insert_with(|| default_step(map));
            }
            Ok(ExperimentConfig { document, model })
        }
        _ => Err(CliError::Invalid(issues)),
    }
}

fn check_run(run: &RunDoc, issues: &mut Vec<Issue>) {
    let mut bound = |ok: bool, path: &str, message: &str| {
        if !ok {
            issues.push(Issue::new(format!("run.{path}"), message));
        }
    };
    const MAX_DRAWS: usize = 1_000_000_000;
    bound((1..=MAX_DRAWS).contains(&run.samples), "samples", "must lie in [1, 1e9]");
    bound(run.constant_samples <= MAX_DRAWS, "constant_samples", "must be at most 1e9");
    bound(run.tol > 0.0 && run.tol < 1.0, "tol", "must lie in (0, 1)");
    bound(run.window.validate("window").is_ok(), "window", "need 0 < lower < upper < 1");
    bound(run.hill_k.is_none_or(|k| k >= 1), "hill_k", "must be at least 1");
    bound(run.theta_max > 0.0 && run.theta_max.is_finite(), "theta_max", "must be positive and finite");
    bound(run.dt.is_none_or(|d| d > 0.0 && d <= 1.0), "dt", "must lie in (0, 1]");
    bound(run.eps > 0.0 && run.eps <= 1.0, "eps", "must lie in (0, 1]");
    bound(run.horizon > 0.0 && run.horizon <= 1e6, "horizon", "must lie in (0, 1e6]");
    bound((1..=10_000).contains(&run.paths), "paths", "must lie in [1, 10000]");
    bound(run.v0.is_finite(), "v0", "must be finite");
    bound((100..=MAX_DRAWS).contains(&run.mc_draws), "mc_draws", "must lie in [100, 1e9]");
    bound((100..=MAX_DRAWS).contains(&run.cycles), "cycles", "must lie in [100, 1e9]");
    bound(run.theta.is_none_or(|t| t > 0.0 && t.is_finite()), "theta", "must be positive and finite");
}

/// Turns a core error into an issue, qualifying bare field names with
/// `context`.
fn issue_from(e: mmtail::Error, context: &str) -> Issue {
    match e {
        mmtail::Error::Validation { field, message } => {
            let path = if context.is_empty() || field.starts_with(context) {
                field
            } else {
                format!("{context}.{field}")
            };
            Issue::new(path, message)
        }
        other => Issue::new(context, other.to_string()),
    }
}

fn collect<T>(r: mmtail::Result<T>, context: &str, issues: &mut Vec<Issue>) -> Option<T> {
    r.map_err(|e| issues.push(issue_from(e, context))).ok()
}

fn matrix(rows: &[Vec<f64>], path: &str, issues: &mut Vec<Issue>) -> Option<Matrix<f64>> {
    collect(Matrix::from_rows(rows), path, issues)
}

enum Chain {
    Discrete(DtmcSpec<f64>),
    Continuous(CtmcSpec<f64>),
}

fn build_chain(doc: &ChainDoc, issues: &mut Vec<Issue>) -> Option<Chain> {
    let states = collect(StateSpace::new(doc.states.iter().cloned()), "chain.states", issues);
    let tolerances = ChainTolerances {
        row_sum: doc.row_sum_tol,
        fixed_point: doc.fixed_point_tol,
    };
    for (tol, name) in [(doc.row_sum_tol, "row_sum_tol"), (doc.fixed_point_tol, "fixed_point_tol")] {
        if !(tol > 0.0 && tol < 1.0) {
            issues.push(Issue::new(format!("chain.{name}"), "must lie in (0, 1)"));
        }
    }
    match (&doc.p, &doc.q) {
        (Some(_), Some(_)) => {
            issues.push(Issue::new("chain", "exactly one chain parameterization (P or Q) is allowed, got both"));
            None
        }
        (None, None) => {
            issues.push(Issue::new("chain", "exactly one chain parameterization (P or Q) is required, got neither"));
            None
        }
        (Some(p), None) => {
            if doc.self_switch_rates.is_some() {
                issues.push(Issue::new("chain.self_switch_rates", "only applies to a Q parameterization"));
            }
            let p = matrix(p, "chain.P", issues)?;
            collect(DtmcSpec::with_tolerances(states?, p, tolerances), "chain", issues).map(Chain::Discrete)
        }
        (None, Some(q)) => {
            let q = matrix(q, "chain.Q", issues)?;
            let states = states?;
            let self_rates = doc.self_switch_rates.clone().unwrap_or_else(|| vec![0.0; states.len()]);
            collect(CtmcSpec::build(states, q, self_rates, tolerances), "chain", issues).map(Chain::Continuous)
        }
    }
}

fn build_model(doc: &ConfigDocument, issues: &mut Vec<Issue>) -> Option<Model> {
    let chain = build_chain(&doc.chain, issues);
    match (doc.kernel.is_empty(), &doc.map) {
        (false, Some(_)) => {
            issues.push(Issue::new("", "declare either kernel (discrete) or map (continuous), not both"));
            None
        }
        (true, None) => {
            issues.push(Issue::new("", "a model needs either kernel (discrete) or map (continuous) entries"));
            None
        }
        (false, None) => match chain {
            Some(Chain::Discrete(c)) => build_kernel(c, &doc.kernel, issues).map(Model::Discrete),
            Some(Chain::Continuous(_)) => {
                issues.push(Issue::new("kernel", "a discrete model needs chain.P"));
                None
            }
            None => {
                // Still report problems inside the cells.
                for (k, cell) in doc.kernel.iter().enumerate() {
                    cell_law(cell, &format!("kernel[{k}]"), issues);
                }
                None
            }
        },
        (true, Some(map)) => match chain {
            Some(Chain::Continuous(c)) => build_map(c, map, issues).map(Model::Continuous),
            Some(Chain::Discrete(_)) => {
                issues.push(Issue::new("map", "a continuous model needs chain.Q"));
                None
            }
            None => None,
        },
    }
}

fn cell_law(cell: &CellDoc, path: &str, issues: &mut Vec<Issue>) -> Option<CellLaw> {
    let start = issues.len();
    let law = match (&cell.log_abs_a, &cell.atoms) {
        (Some(a), None) => {
            if !(0.0..=1.0).contains(&cell.p_negative) {
                issues.push(Issue::new(format!("{path}.p_negative"), "must lie in [0, 1]"));
            }
            collect(a.validate(&format!("{path}.log_abs_a")), path, issues);
            let b = cell.b.clone().unwrap_or_default();
            collect(b.validate(&format!("{path}.b")), path, issues);
            CellLaw::Independent {
                p_negative: cell.p_negative,
                log_abs_a: a.clone(),
                b,
            }
        }
        (None, Some(atoms)) => {
            if cell.b.is_some() || cell.p_negative != 0.0 {
                issues.push(Issue::new(path, "b and p_negative apply to independent cells only"));
            }
            let law = CellLaw::Joint { atoms: atoms.clone() };
            collect(law.validate(path), path, issues);
            law
        }
        _ => {
            issues.push(Issue::new(path, "exactly one of log_abs_a or atoms is required"));
            return None;
        }
    };
    (issues.len() == start).then_some(law)
}

fn endpoints(states: &StateSpace, from: &str, to: &str, path: &str, issues: &mut Vec<Issue>) -> Option<(usize, usize)> {
    let find = |label: &str, key: &str, issues: &mut Vec<Issue>| {
        let i = states.index_of(label);
        if i.is_none() {
            issues.push(Issue::new(format!("{path}.{key}"), format!("unknown state {label:?}")));
        }
        i
    };
    let i = find(from, "from", issues);
    let j = find(to, "to", issues);
    Some((i?, j?))
}

fn build_kernel(chain: DtmcSpec<f64>, cells: &[CellDoc], issues: &mut Vec<Issue>) -> Option<MmlifsSpec> {
    let n = chain.len();
    let states = chain.states().clone();
    let start = issues.len();
    let mut table: Vec<Vec<Option<CellLaw>>> = vec![vec![None; n]; n];
    for (k, cell) in cells.iter().enumerate() {
        let path = format!("kernel[{k}]");
        let ends = endpoints(&states, &cell.from, &cell.to, &path, issues);
        let law = cell_law(cell, &path, issues);
        let Some((i, j)) = ends else { continue };
        if chain.p()[(i, j)] <= 0.0 {
            issues.push(Issue::new(&path, format!("transition {}->{} has zero probability", cell.from, cell.to)));
        } else if table[i][j].is_some() {
            issues.push(Issue::new(&path, format!("duplicate cell {}->{}", cell.from, cell.to)));
        } else if let Some(law) = law {
            table[i][j] = Some(law);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if chain.p()[(i, j)] > 0.0 && table[i][j].is_none() && !cells.iter().any(|c| c.from == states.label(i) && c.to == states.label(j)) {
                issues.push(Issue::new(
                    "kernel",
                    format!("missing cell {}->{} for a transition with p > 0", states.label(i), states.label(j)),
                ));
            }
        }
    }
    if issues.len() > start {
        return None;
    }
    collect(MmlifsSpec::new(chain, table), "", issues)
}

fn build_map(chain: CtmcSpec<f64>, doc: &MapDoc, issues: &mut Vec<Issue>) -> Option<MapSpec> {
    let n = chain.len();
    let states = chain.states().clone();
    let start = issues.len();
    let mut per_state: Vec<Option<&StateLevyDoc>> = vec![None; n];
    for (k, s) in doc.states.iter().enumerate() {
        let path = format!("map.states[{k}]");
        collect(s.zeta.validate(&format!("{path}.zeta")), &path, issues);
        collect(s.eta.validate(&format!("{path}.eta")), &path, issues);
        if !s.cov.is_finite() {
            issues.push(Issue::new(format!("{path}.cov"), "must be finite"));
        }
        match states.index_of(&s.state) {
            None => issues.push(Issue::new(format!("{path}.state"), format!("unknown state {:?}", s.state))),
            Some(i) if per_state[i].is_some() => {
                issues.push(Issue::new(format!("{path}.state"), format!("state {:?} declared twice", s.state)))
            }
            Some(i) => per_state[i] = Some(s),
        }
    }
    for (i, s) in per_state.iter().enumerate() {
        if s.is_none() {
            issues.push(Issue::new("map.states", format!("missing entry for state {:?}", states.label(i))));
        }
    }
    let mut kernel = SwitchJumpKernel::zero(n);
    let mut seen = vec![false; n * n];
    for (k, s) in doc.switch.iter().enumerate() {
        let path = format!("map.switch[{k}]");
        let law = match (&s.atoms, s.zeta.is_some() || s.eta.is_some()) {
            (None, _) => SwitchJumpLaw::Independent {
                zeta: s.zeta.clone().unwrap_or_default(),
                eta: s.eta.clone().unwrap_or_default(),
            },
            (Some(atoms), false) => SwitchJumpLaw::Joint { atoms: atoms.clone() },
            (Some(_), true) => {
                issues.push(Issue::new(&path, "give either atoms or zeta/eta laws, not both"));
                continue;
            }
        };
        collect(law.validate(&path), &path, issues);
        if let Some((i, j)) = endpoints(&states, &s.from, &s.to, &path, issues) {
            if std::mem::replace(&mut seen[i * n + j], true) {
                issues.push(Issue::new(&path, format!("duplicate switch {}->{}", s.from, s.to)));
            }
            kernel.set(i, j, law);
        }
    }
    if issues.len() > start {
        return None;
    }
    let pick = |f: fn(&StateLevyDoc) -> LevyComponentSpec| per_state.iter().map(|s| f(s.unwrap())).collect::<Vec<_>>();
    let zeta = pick(|s| s.zeta.clone());
    let eta = pick(|s| s.eta.clone());
    let cov = per_state.iter().map(|s| s.unwrap().cov).collect();
    collect(MapSpec::new(chain, zeta, eta, cov, kernel), "map", issues)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[chain]
states = ["s"]
P = [[1.0]]
[[kernel]]
from = "s"
to = "s"
log_abs_a = { family = "normal", mean = -0.25, var = 0.25 }
b = { family = "normal", mean = 0.0, var = 1.0 }
"#;

    fn issues(text: &str) -> Vec<Issue> {
        match parse_config(text) {
            Err(CliError::Invalid(v)) => v,
            other => panic!("expected validation issues, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.document.run, RunDoc::default());
        assert_eq!(c.document.output.format, Format::Both);
        assert_eq!(c.model.kind(), "mmlifs");
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn negative_variance_names_the_field() {
        let found = issues(&MINIMAL.replace("var = 1.0", "var = -1.0"));
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].path, "kernel[0].b.var");
    }

    #[test]
    fn both_parameterizations_rejected() {
        let found = issues(&MINIMAL.replace("P = [[1.0]]", "P = [[1.0]]\nQ = [[0.0]]"));
        assert!(found.iter().any(|i| i.message.contains("exactly one chain parameterization")));
    }

    #[test]
    fn all_errors_are_reported() {
        let text = MINIMAL
            .replace("var = 1.0", "var = -1.0")
            .replace("var = 0.25", "var = 0.0")
            .replace("schema_version = 1", "schema_version = 1\n[run]\ntol = 2.0\npaths = 0");
        let paths: Vec<String> = issues(&text).into_iter().map(|i| i.path).collect();
        for want in ["run.tol", "run.paths", "kernel[0].log_abs_a.var", "kernel[0].b.var"] {
            assert!(paths.iter().any(|p| p == want), "{want} missing from {paths:?}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config(&MINIMAL.replace("schema_version = 1", "schema_version = 1\nbogus = 3")).unwrap_err();
        assert!(matches!(err, CliError::Syntax(ref m) if m.contains("bogus")), "{err:?}");
    }

    #[test]
    fn missing_cell_is_reported() {
        let text = r#"
schema_version = 1
[chain]
states = ["a", "b"]
P = [[0.5, 0.5], [1.0, 0.0]]
[[kernel]]
from = "a"
to = "a"
log_abs_a = { family = "normal", mean = -1.0, var = 0.5 }
[[kernel]]
from = "b"
to = "a"
log_abs_a = { family = "normal", mean = -1.0, var = 0.5 }
[[kernel]]
from = "b"
to = "b"
log_abs_a = { family = "normal", mean = -1.0, var = 0.5 }
"#;
        let found = issues(text);
        assert!(found.iter().any(|i| i.message.contains("missing cell a->b")));
        assert!(found.iter().any(|i| i.path == "kernel[2]" && i.message.contains("zero probability")));
    }

    #[test]
    fn continuous_model_fills_step() {
        let text = r#"
schema_version = 1
[chain]
states = ["x"]
Q = [[0.0]]
self_switch_rates = [2.0]
[[map.states]]
state = "x"
zeta = { drift = 0.5, gaussian_var = 1.0 }
eta = { gaussian_var = 1.0 }
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.model.kind(), "map");
        assert_eq!(c.document.run.dt, Some(0.005));
        assert_eq!(c, parse_config(&c.to_toml().unwrap()).unwrap());
    }
}
