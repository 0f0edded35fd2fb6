use mmtail::levy::{DistributionSpec, LevyComponentSpec};
use mmtail::linalg::Matrix;
use mmtail::markov::{time_reverse_dtmc, DtmcSpec, MarkovChain, StateSpace};
use mmtail::mmlifs::{CellLaw, MmlifsSpec};
use mmtail::spectral::{cramer_system, dual_cramer, CramerSystem};
use proptest::prelude::*;

fn stochastic(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(0.05f64..1.0, n * n).prop_map(move |w| {
        Matrix::from_fn(n, n, |i, j| {
            let row: f64 = w[i * n..(i + 1) * n].iter().sum();
            w[i * n + j] / row
        })
    })
}

fn positive(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(0.01f64..3.0, n * n).prop_map(move |w| Matrix::from_fn(n, n, |i, j| w[i * n + j]))
}

fn lognormal_model() -> impl Strategy<Value = MmlifsSpec> {
    (stochastic(3), prop::collection::vec((-1.0f64..0.5, 0.05f64..1.0), 9)).prop_map(|(p, cells)| {
        let chain = DtmcSpec::new(StateSpace::indexed(3).unwrap(), p).unwrap();
        let cells = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        let (m, v) = cells[3 * i + j];
                        Some(CellLaw::independent(DistributionSpec::normal(m, v), DistributionSpec::normal(0.0, 1.0)))
                    })
                    .collect()
            })
            .collect();
        MmlifsSpec::new(chain, cells).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_is_an_involution(p in stochastic(4)) {
        let spec = DtmcSpec::new(StateSpace::indexed(4).unwrap(), p).unwrap();
        let pi = spec.stationary_law().unwrap();
        let back = time_reverse_dtmc(&time_reverse_dtmc(&spec, &pi).unwrap(), &pi).unwrap();
        prop_assert!(back.p().max_abs_diff(spec.p()) < 1e-12);
        let sum: f64 = pi.probabilities().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_kernel_is_stochastic(m in positive(4)) {
        let s = CramerSystem::from_matrix(1.0, m).unwrap();
        let pn = s.p_norm();
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| pn[(i, j)]).sum();
            prop_assert!((row - 1.0).abs() < 1e-10);
        }
        prop_assert!(s.residuals().max() < 1e-9);
    }

    #[test]
    fn dual_is_an_involution(m in positive(3)) {
        let s = CramerSystem::from_matrix(0.7, m).unwrap();
        let d = dual_cramer(&s);
        prop_assert!((d.rho() - s.rho()).abs() <= 1e-12 * s.rho());
        for (a, b) in s.v().iter().zip(d.v()) {
            prop_assert!((a * b - 1.0).abs() < 1e-12);
        }
        let back = dual_cramer(&d);
        prop_assert!(back.p_theta().max_abs_diff(s.p_theta()) < 1e-12);
    }

    #[test]
    fn log_rho_is_convex(spec in lognormal_model(), t0 in 0.1f64..3.0, h in 0.05f64..1.0) {
        let lr = |t: f64| cramer_system(&spec, t).unwrap().rho().ln();
        let (a, b, c) = (lr(t0), lr(t0 + h), lr(t0 + 2.0 * h));
        prop_assert!(a + c - 2.0 * b >= -1e-9, "{a} {b} {c}");
    }

    #[test]
    fn laplace_exponent_is_convex(
        drift in -2.0f64..2.0,
        var in 0.0f64..2.0,
        rate in 0.0f64..3.0,
        mean in -1.0f64..1.0,
        w in -1.5f64..1.5,
        h in 0.01f64..0.5,
    ) {
        let c = LevyComponentSpec {
            drift,
            gaussian_var: var,
            cp_rate: rate,
            cp_jump: DistributionSpec::normal(mean, 0.3),
        };
        let psi = |x: f64| c.laplace_exponent(x).unwrap();
        prop_assert!(psi(w - h) + psi(w + h) - 2.0 * psi(w) >= -1e-9);
        prop_assert_eq!(psi(0.0), 0.0);
    }
}
