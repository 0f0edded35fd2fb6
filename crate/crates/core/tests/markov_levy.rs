use mmtail::levy::{sample_bivariate_increment, sample_levy_increment, DistributionSpec, LevyComponentSpec};
use mmtail::linalg::Matrix;
use mmtail::markov::{simulate_ctmc_path, CtmcSpec, Initial, MarkovChain, StateSpace};
use mmtail::mmgou::simulate_map_path;
use mmtail::models;
use mmtail::stats::{ks_distance, mean_var};
use mmtail::stream::{Estimate, Streams, DEFAULT_BATCHES};

fn rates_1_2() -> CtmcSpec<f64> {
    let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
    CtmcSpec::new(StateSpace::indexed(2).unwrap(), q).unwrap()
}

#[test]
fn ergodic_occupancy_matches_stationary_law() {
    let chain = rates_1_2();
    let pi = chain.stationary_law().unwrap();
    let est = Streams::new(11, "occupancy").estimate(32, DEFAULT_BATCHES, |rng| {
        simulate_ctmc_path(&chain, &Initial::State(1), 1e4 / 32.0, rng).unwrap().occupancy(2)[0]
    });
    assert!(est.within(pi.probabilities()[0], 3.0), "{est:?}");
    assert!((est.mean - 2.0 / 3.0).abs() < 0.02);
}

#[test]
fn first_holding_time_is_exponential() {
    let chain = rates_1_2();
    let est = Streams::new(12, "holding").estimate(100_000, DEFAULT_BATCHES, |rng| {
        let p = simulate_ctmc_path(&chain, &Initial::State(1), 1e3, rng).unwrap();
        p.epochs[1]
    });
    assert!(est.within(0.5, 3.0), "{est:?}");
}

#[test]
fn increment_moments() {
    let spec = LevyComponentSpec {
        drift: 0.3,
        gaussian_var: 0.5,
        cp_rate: 2.0,
        cp_jump: DistributionSpec::normal(0.4, 0.3),
    };
    let dt = 0.25;
    let xs = Streams::new(13, "increments").collect(1_000_000, DEFAULT_BATCHES, |rng| {
        sample_levy_increment(&spec, dt, rng).unwrap()
    });
    let mean = Estimate::from_sample(&xs);
    assert!(mean.within((0.3 + 2.0 * 0.4) * dt, 3.0), "{mean:?}");
    let (m, _) = mean_var(&xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let var = Estimate::from_sample(&sq);
    let want = (0.5 + 2.0 * (0.3 + 0.16)) * dt;
    assert!(var.within(want, 3.0), "{var:?} vs {want}");
}

#[test]
fn bivariate_covariance() {
    let z = LevyComponentSpec::brownian(0.0, 2.0);
    let e = LevyComponentSpec::brownian(0.0, 1.0);
    let dt = 0.5;
    let prods = Streams::new(14, "cov").collect(1_000_000, DEFAULT_BATCHES, |rng| {
        let inc = sample_bivariate_increment(&z, &e, 0.8, dt, rng).unwrap();
        inc.zeta.gaussian * inc.eta.gaussian
    });
    assert!(Estimate::from_sample(&prods).within(0.8 * dt, 3.0));
    let indep = Streams::new(14, "indep").collect(200_000, DEFAULT_BATCHES, |rng| {
        let inc = sample_bivariate_increment(&z, &e, 0.0, dt, rng).unwrap();
        inc.zeta.gaussian * inc.eta.gaussian
    });
    assert!(Estimate::from_sample(&indep).within(0.0, 3.0));
}

#[test]
fn dual_increment_is_the_reversed_primal_increment() {
    // Under stationarity (Ĵ_0, ζ̂_t) has the law of (J_t, -ζ_t).
    let map = models::two_state_jump_map().unwrap();
    let dual = map.dual_map().unwrap();
    let pi = map.chain().stationary_law().unwrap().probabilities().to_vec();
    let t = 1.0;
    let dt = 0.01;
    let forward = Streams::new(15, "primal").collect(100_000, DEFAULT_BATCHES, |rng| {
        let p = simulate_map_path(&map, &Initial::Law(pi.clone()), t, dt, rng).unwrap();
        (*p.states.last().unwrap(), -*p.zeta.last().unwrap())
    });
    let backward = Streams::new(15, "dual").collect(100_000, DEFAULT_BATCHES, |rng| {
        let p = simulate_map_path(&dual, &Initial::Law(pi.clone()), t, dt, rng).unwrap();
        (p.states[0], *p.zeta.last().unwrap())
    });
    let all = |v: &[(usize, f64)]| v.iter().map(|x| x.1).collect::<Vec<_>>();
    assert!(ks_distance(&all(&forward), &all(&backward)) < 0.02);
    let in0 = |v: &[(usize, f64)]| v.iter().filter(|x| x.0 == 0).map(|x| x.1).collect::<Vec<_>>();
    assert!(ks_distance(&in0(&forward), &in0(&backward)) < 0.02);
}
