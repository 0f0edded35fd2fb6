//! The combined tail report of an MMLIFS.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mmlifs::{MmlifsSpec, StationarySampler};
use crate::spectral::cramer::cramer_system;
use crate::spectral::kappa::{solve_kappa, TailIndexSolution};
use crate::stream::{Streams, DEFAULT_BATCHES};
use crate::tail::conditions::{check_conditions_discrete, ConditionReport};
use crate::tail::estimators::{empirical_plateau, hill, HillResult, PlateauResult, QuantileWindow};
use crate::tail::goldie::{goldie_constant, GoldieConstants};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePlateau {
    pub state: usize,
    pub side: Side,
    pub plateau: Option<PlateauResult>,
    pub hill: Option<HillResult>,
    /// Why an estimator was skipped.
    pub note: Option<String>,
}

/// Knobs of [`tail_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Stationary draws per state for the empirical estimators.
    pub samples: usize,
    /// Coupled draws per state for the constants; zero skips them.
    pub constant_samples: usize,
    pub tol: f64,
    pub window: QuantileWindow,
    pub hill_k: Option<usize>,
    /// Upper end of the search range for `κ`.
    pub theta_max: f64,
    /// Return the stationary draws in [`TailReport::samples`].
    pub keep_samples: bool,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            samples: 100_000,
            constant_samples: 100_000,
            tol: 1e-8,
            window: QuantileWindow::default(),
            hill_k: None,
            theta_max: 64.0,
            keep_samples: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub kappa: TailIndexSolution,
    pub constants: Option<GoldieConstants>,
    pub states: Vec<StatePlateau>,
    pub conditions: ConditionReport,
    pub truncation_depth: usize,
    pub samples_per_state: usize,
    pub seed: u64,
    /// Stationary draws per state, kept on request.
    #[serde(skip)]
    pub samples: Option<Vec<Vec<f64>>>,
}

/// One line of the flat table: `(state, side, estimate, stderr, method)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub state: String,
    pub side: String,
    pub estimate: f64,
    pub stderr: f64,
    pub method: String,
}

impl TailReport {
    pub fn rows(&self, labels: &[String]) -> Vec<TailRow> {
        let mut rows = Vec::new();
        let row = |state: &str, side: Side, estimate: f64, stderr: f64, method: &str| TailRow {
            state: state.into(),
            side: side.name().into(),
            estimate,
            stderr,
            method: method.into(),
        };
        rows.push(row("all", Side::Right, self.kappa.kappa, 0.0, "kappa"));
        if let Some(c) = &self.constants {
            for (i, label) in labels.iter().enumerate() {
                rows.push(row(label, Side::Right, c.plus[i].mean, c.plus[i].stderr, "goldie"));
                rows.push(row(label, Side::Left, c.minus[i].mean, c.minus[i].stderr, "goldie"));
            }
            rows.push(row("all", Side::Right, c.aggregate_plus.mean, c.aggregate_plus.stderr, "goldie"));
            rows.push(row("all", Side::Left, c.aggregate_minus.mean, c.aggregate_minus.stderr, "goldie"));
        }
        for s in &self.states {
            let label = &labels[s.state];
            if let Some(p) = &s.plateau {
                rows.push(row(label, s.side, p.estimate.mean, p.estimate.stderr, "plateau"));
                rows.push(row(label, s.side, p.slope, 0.0, "plateau-slope"));
            }
            if let Some(h) = &s.hill {
                rows.push(row(label, s.side, h.estimate, 0.0, "hill"));
            }
        }
        rows
    }
}

/// Solves for `κ`, samples the stationary law per state, and runs the
/// plateau, Hill and constant estimators and the condition checks.
pub fn tail_report(spec: &MmlifsSpec, opts: &TailOptions, streams: &Streams) -> Result<TailReport> {
    let solution = solve_kappa(spec, opts.theta_max)?.require()?.clone();
    let kappa = solution.kappa;
    let sampler = StationarySampler::new(spec, opts.tol)?;
    let mut states = Vec::new();
    let mut kept = Vec::new();
    for i in 0..spec.len() {
        let xs = streams
            .child(&format!("stationary{i}"))
            .collect(opts.samples, DEFAULT_BATCHES, |rng| sampler.value(i, rng));
        for side in [Side::Right, Side::Left] {
            let vals: Vec<f64> = match side {
                Side::Right => xs.clone(),
                Side::Left => xs.iter().map(|x| -x).collect(),
            };
            let mut notes = Vec::new();
            let plateau = empirical_plateau(&vals, None, kappa, opts.window)
                .map_err(|e| notes.push(format!("plateau: {e}")))
                .ok();
            let hill = hill(&vals, opts.hill_k).map_err(|e| notes.push(format!("hill: {e}"))).ok();
            states.push(StatePlateau {
                state: i,
                side,
                plateau,
                hill,
                note: (!notes.is_empty()).then(|| notes.join("; ")),
            });
        }
        if opts.keep_samples {
            kept.push(xs);
        }
    }
    let constants = if opts.constant_samples > 0 {
        let system = cramer_system(spec, kappa)?;
        Some(goldie_constant(
            &sampler,
            &system,
            solution.drift,
            opts.constant_samples,
            &streams.child("constants"),
        )?)
    } else {
        None
    };
    let mut rng = streams.child("conditions").rng(0);
    let conditions = check_conditions_discrete(spec, Some(kappa), &mut rng)?;
    Ok(TailReport {
        kappa: solution,
        constants,
        states,
        conditions,
        truncation_depth: sampler.depth(),
        samples_per_state: opts.samples,
        seed: streams.seed,
        samples: opts.keep_samples.then_some(kept),
    })
}
