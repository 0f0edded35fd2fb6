use mmtail::levy::{DistributionSpec, LevyComponentSpec, MapSpec, SwitchJumpKernel, SwitchJumpLaw};
use mmtail::linalg::Matrix;
use mmtail::markov::{CtmcSpec, Initial, StateSpace};
use mmtail::mmgou::*;
use mmtail::models;
use mmtail::spectral::map_laplace_transform;
use mmtail::stream::{Estimate, Streams, DEFAULT_BATCHES};

fn single(q: f64, zeta: LevyComponentSpec, eta: LevyComponentSpec) -> MapSpec {
    let chain = CtmcSpec::with_self_rates(StateSpace::indexed(1).unwrap(), Matrix::zeros(1, 1), vec![q]).unwrap();
    MapSpec::new(chain, vec![zeta], vec![eta], vec![0.0], SwitchJumpKernel::zero(1)).unwrap()
}

fn two_state(zeta: [LevyComponentSpec; 2], eta: [LevyComponentSpec; 2], kernel: SwitchJumpKernel) -> MapSpec {
    let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
    let chain = CtmcSpec::new(StateSpace::indexed(2).unwrap(), q).unwrap();
    MapSpec::new(chain, zeta.to_vec(), eta.to_vec(), vec![0.0, 0.0], kernel).unwrap()
}

#[test]
fn trivial_paths() {
    let mut rng = Streams::new(1, "triv").rng(0);
    let zero = two_state(
        [LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        [LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        SwitchJumpKernel::zero(2),
    );
    let p = simulate_map_path(&zero, &Initial::State(0), 5.0, 0.01, &mut rng).unwrap();
    assert!(p.zeta.iter().chain(&p.eta).all(|&x| x == 0.0));
    assert!(!p.marks.is_empty());

    let drift = single(1.0, LevyComponentSpec::brownian(0.7, 0.0), LevyComponentSpec::zero());
    let p = simulate_map_path(&drift, &Initial::State(0), 3.0, 0.01, &mut rng).unwrap();
    for (t, z) in p.times.iter().zip(&p.zeta) {
        assert!((z - 0.7 * t).abs() < 1e-12);
    }
}

#[test]
fn path_transform_matches_matrix_exponential() {
    let map = models::two_state_map().unwrap();
    let (w, t) = (0.5, 1.0);
    for i in 0..2 {
        let draws = Streams::new(2, &format!("lt{i}")).collect(200_000, DEFAULT_BATCHES, |rng| {
            let p = simulate_map_path(&map, &Initial::State(i), t, 0.05, rng).unwrap();
            (*p.states.last().unwrap(), (w * p.zeta.last().unwrap()).exp())
        });
        for j in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|d| if d.0 == j { d.1 } else { 0.0 }).collect();
            let want = map_laplace_transform(&map, w, t, i, j).unwrap();
            assert!(Estimate::from_sample(&xs).within(want, 3.0), "({i}, {j})");
        }
    }
}

#[test]
fn explicit_solution_special_cases() {
    let mut rng = Streams::new(3, "v").rng(0);
    let no_eta = single(1.0, LevyComponentSpec::brownian(0.3, 0.5), LevyComponentSpec::zero());
    let p = simulate_map_path(&no_eta, &Initial::State(0), 2.0, 0.01, &mut rng).unwrap();
    let v = mmgou_path(&p, 2.0).unwrap();
    for (x, z) in v.values.iter().zip(&p.zeta) {
        assert!((x - 2.0 * (-z).exp()).abs() < 1e-12 * (1.0 + x.abs()));
    }
    let no_zeta = single(1.0, LevyComponentSpec::zero(), LevyComponentSpec::brownian(0.1, 1.0));
    let p = simulate_map_path(&no_zeta, &Initial::State(0), 2.0, 0.01, &mut rng).unwrap();
    let v = mmgou_path(&p, 2.0).unwrap();
    for (x, e) in v.values.iter().zip(&p.eta) {
        assert!((x - 2.0 - e).abs() < 1e-12);
    }
}

#[test]
fn ornstein_uhlenbeck_moments() {
    let (lambda, sigma2, t, v0, dt) = (1.5, 0.8, 1.0, 2.0, 1e-3);
    let ou = single(1.0, LevyComponentSpec::brownian(lambda, 0.0), LevyComponentSpec::brownian(0.0, sigma2));
    let vs = Streams::new(4, "ou").collect(100_000, DEFAULT_BATCHES, |rng| {
        let p = simulate_map_path(&ou, &Initial::State(0), t, dt, rng).unwrap();
        *mmgou_path(&p, v0).unwrap().values.last().unwrap()
    });
    let mean = (-lambda * t).exp() * v0;
    let var = sigma2 * (1.0 - (-2.0 * lambda * t).exp()) / (2.0 * lambda);
    assert!(Estimate::from_sample(&vs).within(mean, 3.0));
    let sq: Vec<f64> = vs.iter().map(|x| (x - mean).powi(2)).collect();
    assert!(Estimate::from_sample(&sq).within(var, 3.0));
}

#[test]
fn epoch_coefficient_examples() {
    let mut rng = Streams::new(5, "ep").rng(0);
    let no_eta = single(2.0, LevyComponentSpec::brownian(0.5, 1.0), LevyComponentSpec::zero());
    for _ in 0..100 {
        assert_eq!(jump_epoch_coefficients(&no_eta, 0, 0.01, &mut rng).unwrap().b, 0.0);
    }
    let (q, mu, theta) = (2.0, 0.8, 1.5);
    let drift = single(q, LevyComponentSpec::brownian(mu, 0.0), LevyComponentSpec::brownian(0.0, 1.0));
    let est = Streams::new(5, "moment").estimate(200_000, DEFAULT_BATCHES, |rng| {
        jump_epoch_coefficients(&drift, 0, 0.01, rng).unwrap().a.powf(theta)
    });
    assert!(est.within(q / (q + mu * theta), 3.0), "{est:?}");
}

#[test]
fn epoch_coefficient_strong_order_half() {
    let map = models::two_state_jump_map().unwrap();
    let r = epoch_refinement(&map, 0, 0.02, 20_000, &Streams::new(6, "refine")).unwrap();
    assert!((1.5..=2.5).contains(&r.ratio), "{r:?}");
}

#[test]
fn zero_eta_functional_vanishes() {
    let mut rng = Streams::new(7, "zero").rng(0);
    let map = two_state(
        [LevyComponentSpec::brownian(1.0, 0.5), LevyComponentSpec::brownian(0.5, 0.0)],
        [LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        SwitchJumpKernel::zero(2),
    );
    for route in [FunctionalRoute::Perpetuity, FunctionalRoute::Continuous] {
        let s = sample_exponential_functional(&map, 0, 1e-8, 0.01, route, &mut rng).unwrap();
        assert_eq!(s.value, 0.0);
    }
}

#[test]
fn routes_agree_on_fractional_moments() {
    let map = models::brownian_map(2.0).unwrap();
    let f = ExpFunctional::new(&map, 0.01, 1e-8).unwrap();
    let perp = f.perpetuity().unwrap();
    let a = Streams::new(8, "perp").collect(50_000, DEFAULT_BATCHES, |rng| perp.sample(0, rng).value);
    let b = Streams::new(8, "cont").collect(50_000, DEFAULT_BATCHES, |rng| f.continuous_sample(0, rng).value);
    for p in [0.25, 0.5] {
        let ma = Estimate::from_sample(&a.iter().map(|x| x.abs().powf(p)).collect::<Vec<_>>());
        let mb = Estimate::from_sample(&b.iter().map(|x| x.abs().powf(p)).collect::<Vec<_>>());
        assert!(ma.agrees_with(&mb, 3.0), "order {p}: {ma:?} vs {mb:?}");
    }
}

#[test]
fn ul_drivers() {
    let mut rng = Streams::new(9, "ul").rng(0);
    let cont = single(1.0, LevyComponentSpec::brownian(0.4, 0.6), LevyComponentSpec::brownian(0.0, 1.0));
    let p = simulate_map_path(&cont, &Initial::State(0), 1.0, 0.01, &mut rng).unwrap();
    let ul = ul_from_zeta_eta(&p);
    assert!(ul.u_jumps.is_empty());
    for k in 0..p.len() {
        assert!((ul.u[k] - (-p.zeta[k] + 0.3 * p.times[k])).abs() < 1e-12);
        assert!((ul.l[k] - p.eta[k]).abs() < 1e-12);
    }
    let ln2 = 2f64.ln();
    let jumpy = single(1.0, LevyComponentSpec::compound_poisson(3.0, DistributionSpec::point(ln2)), LevyComponentSpec::zero());
    let p = simulate_map_path(&jumpy, &Initial::State(0), 2.0, 0.01, &mut rng).unwrap();
    let ul = ul_from_zeta_eta(&p);
    // Self-switch epochs carry zero jumps.
    let real: Vec<_> = ul.u_jumps.iter().filter(|j| j.du != 0.0).collect();
    assert_eq!(real.len(), p.jumps.len());
    assert!(!real.is_empty());
    for j in real {
        assert!((j.compensator - (ln2 - 0.5)).abs() < 1e-12);
        assert!((j.du + 0.5).abs() < 1e-12);
    }
}

#[test]
fn euler_scheme_converges_to_explicit_path() {
    let map = models::two_state_jump_map().unwrap();
    let r = euler_check(&map, &Initial::State(0), 1.0, 0.04, 1.0, 500, &Streams::new(10, "euler")).unwrap();
    assert!(r.monotone, "{r:?}");
    assert!(r.min_du > -1.0);
}

#[test]
fn degeneracy_probe_examples() {
    let streams = Streams::new(11, "deg");
    let no_eta = two_state(
        [LevyComponentSpec::brownian(1.0, 0.5), LevyComponentSpec::brownian(0.5, 0.0)],
        [LevyComponentSpec::zero(), LevyComponentSpec::zero()],
        SwitchJumpKernel::zero(2),
    );
    let v = degeneracy_probe(&no_eta, 200, 0.01, 1e-10, &streams).unwrap();
    assert!(v.degenerate_suspect);
    assert!(v.means.iter().all(|m| m.mean == 0.0));

    // V ≡ c_J with c = (1, -2): η drifts μ_j c_j and switch jumps c_j - c_i.
    let c = [1.0, -2.0];
    let kernel = SwitchJumpKernel::zero(2)
        .with(0, 1, SwitchJumpLaw::points(0.0, c[1] - c[0]))
        .with(1, 0, SwitchJumpLaw::points(0.0, c[0] - c[1]));
    let built = two_state(
        [LevyComponentSpec::brownian(1.0, 0.0), LevyComponentSpec::brownian(0.5, 0.0)],
        [LevyComponentSpec::brownian(1.0 * c[0], 0.0), LevyComponentSpec::brownian(0.5 * c[1], 0.0)],
        kernel,
    );
    let v = degeneracy_probe(&built, 200, 0.01, 1e-12, &streams).unwrap();
    assert!(v.degenerate_suspect, "{v:?}");
    for (m, want) in v.means.iter().zip(c) {
        assert!((m.mean - want).abs() < 1e-6, "{m:?} vs {want}");
    }

    let v = degeneracy_probe(&models::two_state_map().unwrap(), 200, 0.01, 1e-8, &streams).unwrap();
    assert!(!v.degenerate_suspect);
}
