use approx::assert_abs_diff_eq;
use mmtail::levy::{DistributionSpec, LevyComponentSpec, MapSpec, SwitchJumpKernel};
use mmtail::linalg::Matrix;
use mmtail::markov::{CtmcSpec, MarkovChain, StateSpace};
use mmtail::mmlifs::{CellLaw, MmlifsSpec};
use mmtail::models;
use mmtail::spectral::*;
use mmtail::stream::{Streams, DEFAULT_BATCHES};
use mmtail::Dtmc;

fn two_state_q() -> CtmcSpec<f64> {
    let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
    CtmcSpec::new(StateSpace::indexed(2).unwrap(), q).unwrap()
}

fn drift_map(drifts: [f64; 2], vars: [f64; 2]) -> MapSpec {
    MapSpec::new(
        two_state_q(),
        vec![
            LevyComponentSpec::brownian(drifts[0], vars[0]),
            LevyComponentSpec::brownian(drifts[1], vars[1]),
        ],
        vec![LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        vec![0.0, 0.0],
        SwitchJumpKernel::zero(2),
    )
    .unwrap()
}

#[test]
fn matrix_exponent_hand_assembly() {
    // ψ_1(1) = 0.5 from drift 0.5; ψ_2(1) = -0.2 from drift -0.2.
    let m = drift_map([0.5, -0.2], [0.0, 0.0]);
    let psi = matrix_exponent(&m, 1.0).unwrap();
    let want = Matrix::from_rows(&[vec![-0.5, 2.0], vec![1.0, -2.2]]).unwrap();
    assert!(psi.max_abs_diff(&want) < 1e-14);
    // w = 0 gives Q^T.
    let psi0 = matrix_exponent(&m, 0.0).unwrap();
    assert!(psi0.max_abs_diff(&two_state_q().q().transpose()) < 1e-15);
}

#[test]
fn single_state_exponent_and_transform() {
    let m = models::brownian_map(1.0).unwrap();
    let psi = matrix_exponent(&m, 0.7).unwrap();
    let want = 0.5 * 0.7 + 0.5 * 0.49;
    assert_abs_diff_eq!(psi[(0, 0)], want, epsilon = 1e-14);
    let lt = map_laplace_transform(&m, 0.7, 2.0, 0, 0).unwrap();
    assert_abs_diff_eq!(lt, (2.0 * want).exp(), epsilon = 1e-12);
    let two = models::two_state_map().unwrap();
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let v = map_laplace_transform(&two, 0.3, 0.0, i, j).unwrap();
        assert_eq!(v, if i == j { 1.0 } else { 0.0 });
    }
}

#[test]
fn upsilon_pure_chain_and_drift_example() {
    let zero = drift_map([0.0, 0.0], [0.0, 0.0]);
    let y = upsilon(&zero, 0.0, UpsilonMethod::ClosedForm).unwrap();
    let embedded = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!(y.max_abs_diff(&embedded) < 1e-15);

    // State 1 with μ = 1 and q = 2 in a chain whose first row is (−2, 2).
    let q = Matrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]]).unwrap();
    let chain = CtmcSpec::new(StateSpace::indexed(2).unwrap(), q).unwrap();
    let m = MapSpec::new(
        chain,
        vec![LevyComponentSpec::brownian(1.0, 0.0), LevyComponentSpec::zero()],
        vec![LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        vec![0.0, 0.0],
        SwitchJumpKernel::zero(2),
    )
    .unwrap();
    for theta in [0.0, 0.5, 1.0, 3.0] {
        let y = upsilon(&m, theta, UpsilonMethod::ClosedForm).unwrap();
        assert_abs_diff_eq!(y[(0, 1)], 2.0 / (2.0 + theta), epsilon = 1e-14);
    }
}

#[test]
fn quadrature_agrees_without_modulation() {
    // With one state the integral is q ∫ e^{tψ(-θ)} e^{-qt} dt = q/(q - ψ(-θ)).
    let m = models::brownian_map(2.0).unwrap();
    for theta in [0.3, 1.0, 1.5] {
        let a = upsilon(&m, theta, UpsilonMethod::ClosedForm).unwrap();
        let b = upsilon(&m, theta, UpsilonMethod::Quadrature).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).abs() < 1e-8, "θ = {theta}");
    }
    // With switching the integral form keeps only paths without a prior
    // switch in the wrong direction; it stays finite but differs.
    let m = models::two_state_map().unwrap();
    let a = upsilon(&m, 0.5, UpsilonMethod::ClosedForm).unwrap();
    let b = upsilon(&m, 0.5, UpsilonMethod::Quadrature).unwrap();
    assert!(b.is_finite() && b.is_nonnegative());
    assert!(a.max_abs_diff(&b) > 1e-3);
}

#[test]
fn mc_upsilon_examples() {
    let m = models::two_state_jump_map().unwrap();
    let est = mc_upsilon(&m, 0.0, 20_000, &Streams::new(3, "rowsum"), DEFAULT_BATCHES).unwrap();
    for i in 0..2 {
        let s: f64 = est.mean.row(i).iter().sum();
        let se = est.stderr.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((s - 1.0).abs() <= 3.0 * se + 1e-12);
    }
    // Pure drift and point-mass switch jumps: the estimator is exact.
    let det = drift_map([0.5, -0.2], [0.0, 0.0]);
    let est = mc_upsilon(&det, 0.0, 5_000, &Streams::new(3, "det"), DEFAULT_BATCHES).unwrap();
    assert!(est.stderr.to_rows().iter().flatten().all(|&s| s == 0.0));
}

#[test]
fn cramer_transform_examples() {
    let spec = models::two_state_lognormal().unwrap();
    assert!(spec.cramer_matrix(0.0).unwrap().max_abs_diff(spec.chain().p()) < 1e-15);
    let single = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::normal(-0.3, 0.4),
        DistributionSpec::normal(0.0, 1.0),
    ))
    .unwrap();
    for theta in [0.5f64, 1.0, 2.0] {
        let want = (-0.3 * theta + 0.2 * theta * theta).exp();
        assert_abs_diff_eq!(single.cramer_matrix(theta).unwrap()[(0, 0)], want, epsilon = 1e-13);
    }
    let m = models::two_state_jump_map().unwrap();
    for theta in [0.1, 0.5] {
        let a = m.cramer_matrix(theta).unwrap();
        let b = upsilon(&m, theta, UpsilonMethod::ClosedForm).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

#[test]
fn perron_examples() {
    let p = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
    let d = perron(&p).unwrap();
    assert_abs_diff_eq!(d.rho, 1.0, epsilon = 1e-13);
    assert!(d.v.iter().all(|v: &f64| (v - 1.0).abs() < 1e-12));
    assert_abs_diff_eq!(d.u[0], 2.0 / 3.0, epsilon = 1e-12);
    let d = perron(&Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()).unwrap();
    assert_abs_diff_eq!(d.rho, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.u[0], 0.5, epsilon = 1e-12);
    let d = perron(&Matrix::from_rows(&[vec![1.0, 1.0], vec![0.25, 1.0]]).unwrap()).unwrap();
    assert_abs_diff_eq!(d.rho, 1.5, epsilon = 1e-12);
    assert_abs_diff_eq!(d.v[0] / d.v[1], 2.0f64, epsilon = 1e-10);
}

#[test]
fn cramer_system_invariants() {
    let spec = models::two_state_lognormal().unwrap();
    let s0 = cramer_system(&spec, 0.0).unwrap();
    assert!(s0.p_norm().max_abs_diff(spec.chain().p()) < 1e-12);
    assert!(linalg_diff(s0.pi_theta(), spec.pi()) < 1e-12);
    for theta in [0.3, 1.0, 1.7] {
        let s = cramer_system(&spec, theta).unwrap();
        assert!(s.p_norm().row_sums().iter().all(|r| (r - 1.0).abs() < 1e-10));
        // Independent fixed-point solve of the normalized kernel.
        let chain = Dtmc::new(StateSpace::indexed(2).unwrap(), s.p_norm().clone()).unwrap();
        let pi = chain.stationary_law().unwrap();
        assert!(linalg_diff(pi.probabilities(), s.pi_theta()) < 1e-10);
    }
}

fn linalg_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn solve_kappa_closed_forms() {
    let k = solve_kappa(&models::brownian_map(1.0).unwrap(), 64.0).unwrap();
    let k = k.require().unwrap();
    assert!((k.kappa - 1.0).abs() <= 1e-8);
    assert!(k.residual <= 1e-10);
    let k = solve_kappa(&models::kesten_lognormal().unwrap(), 64.0).unwrap();
    let k = k.require().unwrap();
    assert!((k.kappa - 2.0).abs() <= 1e-8);
    // drift = m + s²κ at the root.
    assert_abs_diff_eq!(k.drift, 0.25, epsilon = 1e-8);
}

#[test]
fn bounded_contraction_has_no_tail_index() {
    let spec = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::Uniform { a: -2.0, b: -0.1 },
        DistributionSpec::normal(0.0, 1.0),
    ))
    .unwrap();
    match solve_kappa(&spec, 64.0).unwrap() {
        KappaOutcome::NoTailIndex { rho_at_max, .. } => assert!(rho_at_max < 1.0),
        other => panic!("expected no tail index, got {other:?}"),
    }
    let expanding = MmlifsSpec::single_state(CellLaw::independent(
        DistributionSpec::normal(0.1, 0.2),
        DistributionSpec::normal(0.0, 1.0),
    ))
    .unwrap();
    assert!(matches!(
        solve_kappa(&expanding, 64.0).unwrap(),
        KappaOutcome::NonContractive { .. }
    ));
}

#[test]
fn drift_examples() {
    let spec = models::two_state_lognormal().unwrap();
    let d0 = drift(&spec, 0.0).unwrap();
    // E_π log|A_1| by hand from the cell means.
    let pi = spec.pi();
    let p = spec.chain().p();
    let means = [[-0.6, -0.1], [-0.3, 0.0]];
    let want: f64 = (0..2).map(|i| (0..2).map(|j| pi[i] * p[(i, j)] * means[i][j]).sum::<f64>()).sum();
    assert_abs_diff_eq!(d0.rho_prime, want, epsilon = 1e-12);
    assert!(d0.rho_prime < 0.0);
    for theta in [0.5, 1.0, 1.5] {
        let d = drift(&spec, theta).unwrap();
        assert!((d.rho_prime - d.rho_prime_fd).abs() <= 1e-6);
    }
}

#[test]
fn geometric_and_dual_identities() {
    for theta in [0.5, 1.0, 1.7] {
        let spec = models::two_state_lognormal().unwrap();
        let s = cramer_system(&spec, theta).unwrap();
        let g = geometric_sampling_transform(s.p_theta()).unwrap();
        let pg = perron(&g).unwrap();
        let rho = s.rho();
        assert!((pg.rho - rho / (2.0 - rho)).abs() <= 1e-10);
        let d = s.dual();
        assert!((d.rho() - rho).abs() <= 1e-12);
        let pd = perron(d.p_theta()).unwrap();
        let ratio = pd.v[0] / d.v()[0];
        for (a, b) in pd.v.iter().zip(d.v()) {
            assert!((a / b - ratio).abs() < 1e-10);
        }
        for (vh, v) in d.v().iter().zip(s.v()) {
            assert!((vh * v - 1.0).abs() <= 1e-12);
        }
        assert!(d.dual().p_theta().max_abs_diff(s.p_theta()) < 1e-12);
    }
    assert!(geometric_sampling_transform(&Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()).is_err());
}
