use mmtail::levy::{DistributionSpec, LevyComponentSpec, MapSpec, SwitchJumpKernel};
use mmtail::linalg::Matrix;
use mmtail::markov::{CtmcSpec, StateSpace};
use mmtail::mmlifs::{CellLaw, MmlifsSpec, StationarySampler};
use mmtail::models;
use mmtail::spectral::{cramer_system, solve_kappa};
use mmtail::stream::Streams;
use mmtail::tail::*;

fn statuses(r: &ConditionReport) -> Vec<(String, ConditionStatus)> {
    r.entries.iter().map(|e| (e.name.clone(), e.status)).collect()
}

#[test]
fn discrete_conditions() {
    let mut rng = Streams::new(1, "cond").rng(0);
    let r = check_conditions_discrete(&models::two_state_lognormal().unwrap(), None, &mut rng).unwrap();
    assert!(r.all_verified(), "{:?}", statuses(&r));
    let names: Vec<_> = r.entries.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["B1", "B2", "B3", "B4"]);

    let bounded = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::Uniform { a: -2.0, b: -0.1 },
        DistributionSpec::normal(0.0, 1.0),
    ))
    .unwrap();
    let r = check_conditions_discrete(&bounded, None, &mut rng).unwrap();
    assert_eq!(r.status("B1"), Some(ConditionStatus::Violated));

    let lattice = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::TwoPoint { x1: -0.5, p: 0.7, x2: 0.5 },
        DistributionSpec::normal(0.0, 1.0),
    ))
    .unwrap();
    let r = check_conditions_discrete(&lattice, None, &mut rng).unwrap();
    assert_eq!(r.status("B3"), Some(ConditionStatus::UndecidableHeuristic));

    let zero_b = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::normal(-0.25, 0.25),
        DistributionSpec::point(0.0),
    ))
    .unwrap();
    let r = check_conditions_discrete(&zero_b, None, &mut rng).unwrap();
    assert_eq!(r.status("B4"), Some(ConditionStatus::Violated));
}

#[test]
fn continuous_conditions() {
    let r = check_conditions_continuous(&models::brownian_map(2.0).unwrap(), None, 0.05).unwrap();
    assert!(r.all_verified(), "{:?}", statuses(&r));
    assert_eq!(r.entries.len(), 4);

    let chain = CtmcSpec::with_self_rates(StateSpace::indexed(1).unwrap(), Matrix::zeros(1, 1), vec![2.0]).unwrap();
    let heavy = MapSpec::new(
        chain,
        vec![LevyComponentSpec::brownian(0.5, 1.0)],
        vec![LevyComponentSpec::compound_poisson(1.0, DistributionSpec::Pareto { scale: 1.0, shape: 0.8 })],
        vec![0.0],
        SwitchJumpKernel::zero(1),
    )
    .unwrap();
    let r = check_conditions_continuous(&heavy, None, 0.05).unwrap();
    assert_eq!(r.status("A3"), Some(ConditionStatus::Violated));

    // q = 1 < ψ(1 + ε) for the κ = 1 Brownian model.
    let r = check_conditions_continuous(&models::brownian_map(1.0).unwrap(), None, 0.05).unwrap();
    assert_eq!(r.status("A4"), Some(ConditionStatus::Violated));
    assert!(r.get("A4").unwrap().note.contains('0'));
}

#[test]
fn degenerate_model_has_zero_constants() {
    let spec = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::normal(-0.25, 0.25),
        DistributionSpec::point(0.0),
    ))
    .unwrap();
    let sol = solve_kappa(&spec, 64.0).unwrap().require().unwrap().clone();
    let sampler = StationarySampler::new(&spec, 1e-8).unwrap();
    let sys = cramer_system(&spec, sol.kappa).unwrap();
    let c = goldie_constant(&sampler, &sys, sol.drift, 10_000, &Streams::new(2, "zero")).unwrap();
    assert_eq!(c.plus[0].mean, 0.0);
    assert_eq!(c.minus[0].mean, 0.0);
    assert!(goldie_constant(&sampler, &sys, -1.0, 10, &Streams::new(2, "x")).is_err());
}

fn constants(spec: &MmlifsSpec, seed: u64) -> GoldieConstants {
    let sol = solve_kappa(spec, 64.0).unwrap().require().unwrap().clone();
    let sampler = StationarySampler::new(spec, 1e-8).unwrap();
    let sys = cramer_system(spec, sol.kappa).unwrap();
    goldie_constant(&sampler, &sys, sol.drift, 200_000, &Streams::new(seed, "c")).unwrap()
}

fn map_b(spec: &MmlifsSpec, f: impl Fn(&DistributionSpec) -> DistributionSpec) -> MmlifsSpec {
    let cells = (0..spec.len())
        .map(|i| {
            (0..spec.len())
                .map(|j| {
                    spec.cell(i, j).map(|c| match c {
                        CellLaw::Independent { p_negative, log_abs_a, b } => CellLaw::Independent {
                            p_negative: *p_negative,
                            log_abs_a: log_abs_a.clone(),
                            b: f(b),
                        },
                        other => other.clone(),
                    })
                })
                .collect()
        })
        .collect();
    MmlifsSpec::new(spec.chain().clone(), cells).unwrap()
}

#[test]
fn constants_scale_and_reflect() {
    let base_spec = models::two_state_lognormal().unwrap();
    let base = constants(&base_spec, 3);
    let kappa = base.kappa;
    let scaled = constants(
        &map_b(&base_spec, |b| match b {
            DistributionSpec::Normal { mean, var } => DistributionSpec::normal(2.0 * mean, 4.0 * var),
            other => other.clone(),
        }),
        4,
    );
    let shifted = map_b(&base_spec, |b| match b {
        DistributionSpec::Normal { var, .. } => DistributionSpec::normal(0.7, *var),
        other => other.clone(),
    });
    let plain = constants(&shifted, 5);
    let negated = constants(&map_b(&shifted, DistributionSpec::negated), 6);
    let factor = 2f64.powf(kappa);
    for i in 0..2 {
        let want = base.plus[i].mean * factor;
        let se = (base.plus[i].stderr * factor).hypot(scaled.plus[i].stderr);
        assert!((scaled.plus[i].mean - want).abs() <= 3.0 * se, "state {i}");
        assert!(plain.plus[i].agrees_with(&negated.minus[i], 3.0));
        assert!(plain.minus[i].agrees_with(&negated.plus[i], 3.0));
        assert!(base.plus[i].mean + base.minus[i].mean > 3.0 * base.plus[i].stderr.hypot(base.minus[i].stderr));
    }
}

#[test]
fn report_rows_are_consistent() {
    let spec = models::two_state_lognormal().unwrap();
    let opts = TailOptions {
        samples: 20_000,
        constant_samples: 20_000,
        ..TailOptions::default()
    };
    let r = tail_report(&spec, &opts, &Streams::new(7, "report")).unwrap();
    let c = r.constants.as_ref().unwrap();
    for (parts, agg) in [(&c.plus, c.aggregate_plus), (&c.minus, c.aggregate_minus)] {
        let sum: f64 = parts.iter().zip(spec.pi()).map(|(e, p)| p * e.mean).sum();
        assert!((sum - agg.mean).abs() <= 1e-12);
        assert!(parts.iter().all(|e| e.mean >= 0.0));
    }
    assert_eq!(r.states.len(), 4);
    let labels = vec!["calm".to_string(), "wild".to_string()];
    let rows = r.rows(&labels);
    assert!(rows.iter().any(|row| row.method == "goldie" && row.state == "all"));
    assert!(rows.iter().any(|row| row.method == "hill" && row.state == "wild"));
}
