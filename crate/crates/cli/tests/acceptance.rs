//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mmtail::levy::MapSpec;
use mmtail::markov::Initial;
use mmtail::mmgou::{euler_check, ExpFunctional};
use mmtail::mmlifs::{
    cycle_moment, forward_iterate, mc_cramer_transform, occupation_check, sign_chain_stats, MmlifsSpec,
    StationarySampler,
};
use mmtail::models;
use mmtail::spectral::{
    cramer_system, geometric_sampling_transform, mc_upsilon, perron, solve_kappa, upsilon, CramerSource,
    UpsilonMethod,
};
use mmtail::stats::ks_distance;
use mmtail::stream::{Streams, DEFAULT_BATCHES};
use mmtail::tail::{hill, tail_report, Side, TailOptions};

type Outcome = Result<String, String>;

const SEED: u64 = 2718;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kappa(source: &(impl CramerSource + ?Sized)) -> Result<f64, String> {
    let outcome = solve_kappa(source, 64.0).map_err(|e| e.to_string())?;
    outcome.require().map(|s| s.kappa).map_err(|e| e.to_string())
}

fn closed_form_kappa_continuous() -> Outcome {
    let start = Instant::now();
    let map = models::brownian_map(1.0).map_err(|e| e.to_string())?;
    let k = kappa(&map)?;
    let rho = cramer_system(&map, k).map_err(|e| e.to_string())?.rho();
    let secs = start.elapsed().as_secs_f64();
    check(
        (k - 1.0).abs() <= 1e-8 && (rho - 1.0).abs() <= 1e-10 && secs < 1.0,
        format!("kappa = {k}, |rho - 1| = {:.1e}, {secs:.3} s", (rho - 1.0).abs()),
    )
}

fn closed_form_kappa_discrete() -> Outcome {
    let k = kappa(&models::kesten_lognormal().map_err(|e| e.to_string())?)?;
    check((k - 2.0).abs() <= 1e-8, format!("kappa = {k}"))
}

fn kesten_tail() -> Outcome {
    let start = Instant::now();
    let spec = models::kesten_lognormal().map_err(|e| e.to_string())?;
    let opts = TailOptions {
        samples: 1_000_000,
        constant_samples: 0,
        keep_samples: true,
        ..TailOptions::default()
    };
    let report = tail_report(&spec, &opts, &Streams::new(SEED, "kesten")).map_err(|e| e.to_string())?;
    let xs = &report.samples.as_ref().ok_or("no samples kept")?[0];
    let h = hill(xs, None).map_err(|e| e.to_string())?;
    let right = report
        .states
        .iter()
        .find(|s| s.side == Side::Right)
        .and_then(|s| s.plateau.as_ref())
        .ok_or("no right plateau")?;
    let secs = start.elapsed().as_secs_f64();
    check(
        (h.estimate / 2.0 - 1.0).abs() <= 0.15 && right.slope.abs() <= 0.1 && secs < 120.0,
        format!("hill = {:.4} (k = {}), plateau slope = {:.4}, {secs:.1} s", h.estimate, h.k, right.slope),
    )
}

fn constants_agree() -> Outcome {
    let spec = models::two_state_lognormal().map_err(|e| e.to_string())?;
    let opts = TailOptions {
        samples: 1_000_000,
        constant_samples: 1_000_000,
        ..TailOptions::default()
    };
    let report = tail_report(&spec, &opts, &Streams::new(SEED, "constants")).map_err(|e| e.to_string())?;
    let c = report.constants.as_ref().ok_or("constants missing")?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for s in &report.states {
        let p = s.plateau.as_ref().ok_or_else(|| format!("plateau missing: {:?}", s.note))?;
        let g = match s.side {
            Side::Right => c.plus[s.state],
            Side::Left => c.minus[s.state],
        };
        let z = (g.mean - p.estimate.mean).abs() / g.stderr.hypot(p.estimate.stderr);
        worst = worst.max(z);
        parts.push(format!(
            "{}{}: {:.4} vs {:.4}",
            s.state,
            if s.side == Side::Right { "+" } else { "-" },
            g.mean,
            p.estimate.mean
        ));
    }
    check(worst <= 3.0, format!("max z = {worst:.2}; {}", parts.join(", ")))
}

fn return_time_identity() -> Outcome {
    let spec = models::two_state_lognormal().map_err(|e| e.to_string())?;
    let k = kappa(&spec)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for i in 0..spec.len() {
        let m = cycle_moment(&spec, i, k, 100_000, &Streams::new(SEED, &format!("cycle{i}")));
        ok &= m.within(1.0, 3.0);
        parts.push(format!("state {i}: {:.4} +- {:.4}", m.mean, m.stderr));
    }
    check(ok, parts.join(", "))
}

fn martingale() -> Outcome {
    let spec = models::two_state_lognormal().map_err(|e| e.to_string())?;
    let k = kappa(&spec)?;
    let v = cramer_system(&spec, k).map_err(|e| e.to_string())?.v().to_vec();
    let paths = Streams::new(SEED, "martingale").collect(100_000, DEFAULT_BATCHES, |rng| {
        forward_iterate(&spec, 0.0, &Initial::State(0), 10, rng)
    });
    let paths: Vec<_> = paths.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    // The summands are heavy-tailed, so the sample standard error is far
    // too small for large n. The exact one follows from 𝖯(2κ):
    // E_0[|Π_n|^{2κ} v_{ξ_n}^2] = (𝖯(2κ)^n (v∘v))_0.
    let p2 = spec.cramer_matrix(2.0 * k).map_err(|e| e.to_string())?;
    let mut second: Vec<f64> = v.iter().map(|x| x * x).collect();
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        second = p2.mul_vec(&second);
        let sigma = ((second[0] - v[0] * v[0]) / paths.len() as f64).sqrt();
        let mean = paths.iter().map(|p| p.products[n].abs().powf(k) * v[p.states[n]]).sum::<f64>() / paths.len() as f64;
        worst = worst.max((mean - v[0]).abs() / sigma);
    }
    check(worst <= 3.0, format!("max z over n = 1..10: {worst:.2} (exact standard errors)"))
}

fn discrete_models() -> Result<Vec<(&'static str, MmlifsSpec)>, String> {
    let e = |e: mmtail::Error| e.to_string();
    Ok(vec![
        ("kesten", models::kesten_lognormal().map_err(e)?),
        ("mixed-sign", models::kesten_mixed_sign().map_err(e)?),
        ("two-state", models::two_state_lognormal().map_err(e)?),
    ])
}

fn continuous_models() -> Result<Vec<(&'static str, MapSpec)>, String> {
    let e = |e: mmtail::Error| e.to_string();
    Ok(vec![
        ("brownian", models::brownian_map(2.0).map_err(e)?),
        ("two-state-map", models::two_state_map().map_err(e)?),
        ("jump-map", models::two_state_jump_map().map_err(e)?),
    ])
}

/// Runs `f(name, source, κ)` over every test model.
fn for_all_models(mut f: impl FnMut(&str, &dyn Fn(f64) -> mmtail::Result<mmtail::Cramer>, f64) -> Result<(), String>) -> Result<(), String> {
    for (name, spec) in discrete_models()? {
        let k = kappa(&spec)?;
        f(name, &|t| cramer_system(&spec, t), k)?;
    }
    for (name, map) in continuous_models()? {
        let k = kappa(&map)?;
        f(name, &|t| cramer_system(&map, t), k)?;
    }
    Ok(())
}

fn geometric_sampling() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for_all_models(|name, system, k| {
        for theta in [k / 2.0, k] {
            let sys = system(theta).map_err(|e| format!("{name}: {e}"))?;
            let g = geometric_sampling_transform(sys.p_theta()).map_err(|e| format!("{name}: {e}"))?;
            let pg = perron(&g).map_err(|e| format!("{name}: {e}"))?;
            let rho = sys.rho();
            let mut d = (pg.rho - rho / (2.0 - rho)).abs();
            for (a, b) in pg.u.iter().zip(sys.u()).chain(pg.v.iter().zip(sys.v())) {
                d = d.max((a - b).abs());
            }
            worst = worst.max(d);
            count += 1;
        }
        Ok(())
    })?;
    check(worst <= 1e-10, format!("{count} systems, max deviation {worst:.1e}"))
}

fn duality() -> Outcome {
    let (mut root, mut inv) = (0.0f64, 0.0f64);
    let mut count = 0;
    for_all_models(|name, system, k| {
        for theta in [k / 2.0, k] {
            let sys = system(theta).map_err(|e| format!("{name}: {e}"))?;
            let dual = sys.dual();
            let direct = perron(dual.p_theta()).map_err(|e| format!("{name}: {e}"))?;
            root = root.max((direct.rho - sys.rho()).abs());
            for (vh, v) in dual.v().iter().zip(sys.v()) {
                inv = inv.max((vh * v - 1.0).abs());
            }
            count += 1;
        }
        Ok(())
    })?;
    check(
        root <= 1e-12 && inv <= 1e-12,
        format!("{count} systems, |rho^ - rho| <= {root:.1e}, |v^ v - 1| <= {inv:.1e}"),
    )
}

fn mixed_sign_symmetry() -> Outcome {
    let spec = models::kesten_mixed_sign().map_err(|e| e.to_string())?;
    let opts = TailOptions {
        samples: 1_000_000,
        constant_samples: 0,
        ..TailOptions::default()
    };
    let report = tail_report(&spec, &opts, &Streams::new(SEED, "mixed")).map_err(|e| e.to_string())?;
    let plateau = |side: Side| {
        report
            .states
            .iter()
            .find(|s| s.side == side)
            .and_then(|s| s.plateau.as_ref())
            .map(|p| p.estimate.mean)
            .ok_or("plateau missing")
    };
    let ratio = plateau(Side::Left)? / plateau(Side::Right)?;
    let sys = cramer_system(&spec, report.kappa.kappa).map_err(|e| e.to_string())?;
    let signs = sign_chain_stats(&spec, &sys, 100_000, &Streams::new(SEED, "signs")).map_err(|e| e.to_string())?;
    let sigma = signs.mean_sigma;
    check(
        (0.8..=1.25).contains(&ratio) && sigma.within(2.0, 3.0),
        format!("left/right = {ratio:.4}, mean sigma = {:.4} +- {:.4}", sigma.mean, sigma.stderr),
    )
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mmtail"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(task: &str, config: &str, out: &Path, extra: &[&str]) -> Result<(), String> {
    let status = Command::new(bin())
        .arg(task)
        .arg("--config")
        .arg(configs().join(config))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{task} on {config}: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn upsilon_cross_validation() -> Outcome {
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, map) in [
        ("two-state-map", models::two_state_map()),
        ("jump-map", models::two_state_jump_map()),
    ] {
        let map = map.map_err(|e| e.to_string())?;
        let k = kappa(&map)?;
        let closed = upsilon(&map, k, UpsilonMethod::ClosedForm).map_err(|e| e.to_string())?;
        let mc = mc_upsilon(&map, k, 1_000_000, &Streams::new(SEED, name), DEFAULT_BATCHES).map_err(|e| e.to_string())?;
        let z = mc.max_z(&closed);
        worst = worst.max(z);
        parts.push(format!("{name}: max z = {z:.2}"));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_cli("upsilon-compare", "two_state_map.toml", dir.path(), &["--format", "json"])?;
    let text = std::fs::read_to_string(dir.path().join("upsilon-compare.json")).map_err(|e| e.to_string())?;
    let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let deviation = json["result"]["quadrature_deviation"].as_f64().ok_or("deviation missing from report")?;
    parts.push(format!("quadrature deviation reported: {deviation:.4}"));
    check(worst <= 3.0, parts.join(", "))
}

fn derived_bridge() -> Outcome {
    let map = models::two_state_map().map_err(|e| e.to_string())?;
    let k = kappa(&map)?;
    let derived = MmlifsSpec::derived(&map, 1e-3).map_err(|e| e.to_string())?;
    let mc = mc_cramer_transform(&derived, k, 1_000_000, &Streams::new(SEED, "bridge"), DEFAULT_BATCHES)
        .map_err(|e| e.to_string())?;
    let closed = upsilon(&map, k, UpsilonMethod::ClosedForm).map_err(|e| e.to_string())?;
    let z = mc.max_z(&closed);
    check(z <= 3.0, format!("kappa = {k:.6}, max z = {z:.2}"))
}

fn occupation_measure() -> Outcome {
    let spec = models::two_state_lognormal().map_err(|e| e.to_string())?;
    let sampler = StationarySampler::new(&spec, 1e-8).map_err(|e| e.to_string())?;
    let functions: [(&str, &(dyn Fn(usize, f64) -> f64 + Sync)); 3] = [
        ("1{state = calm}", &|s, _| f64::from(s == 0)),
        ("min(|R|, 10)", &|_, r| r.abs().min(10.0)),
        ("1{R > 1}", &|_, r| f64::from(r > 1.0)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (name, h)) in functions.iter().enumerate() {
        let r = occupation_check(&sampler, k % 2, *h, 100_000, 100_000, &Streams::new(SEED, &format!("occ{k}")))
            .map_err(|e| e.to_string())?;
        let z = (r.cycle.mean - r.direct.mean).abs() / r.cycle.stderr.hypot(r.direct.stderr);
        ok &= r.agrees(3.0);
        parts.push(format!("{name}: z = {z:.2}"));
    }
    check(ok, parts.join(", "))
}

fn sde_consistency() -> Outcome {
    let map = models::two_state_jump_map().map_err(|e| e.to_string())?;
    let r = euler_check(&map, &Initial::State(0), 1.0, 0.04, 1.0, 500, &Streams::new(SEED, "euler"))
        .map_err(|e| e.to_string())?;
    let errs: Vec<String> = r.sup_errors.iter().map(|e| format!("{:.2e}", e.mean)).collect();
    check(
        r.monotone && r.min_du > -1.0,
        format!("sup errors at dt, dt/4, dt/16: {}; min dU = {:.4}", errs.join(", "), r.min_du),
    )
}

fn route_agreement() -> Outcome {
    let map = models::two_state_map().map_err(|e| e.to_string())?;
    let f = ExpFunctional::new(&map, 0.01, 1e-8).map_err(|e| e.to_string())?;
    let perp = f.perpetuity().map_err(|e| e.to_string())?;
    let a = Streams::new(SEED, "perpetuity").collect(100_000, DEFAULT_BATCHES, |rng| perp.sample(0, rng).value);
    let b = Streams::new(SEED, "continuous").collect(100_000, DEFAULT_BATCHES, |rng| f.continuous_sample(0, rng).value);
    let d = ks_distance(&a, &b);
    check(d < 0.02, format!("KS = {d:.4}"))
}

fn determinism() -> Outcome {
    let runs: [(&str, &str); 6] = [
        ("solve-kappa", "two_state.toml"),
        ("constants", "two_state.toml"),
        ("simulate-tail", "kesten_mixed_sign.toml"),
        ("validate", "jump_map.toml"),
        ("mmgou-demo", "two_state_map.toml"),
        ("upsilon-compare", "jump_map.toml"),
    ];
    let mut files = 0;
    for (task, config) in runs {
        let one = tempfile::tempdir().map_err(|e| e.to_string())?;
        let many = tempfile::tempdir().map_err(|e| e.to_string())?;
        let extra = ["--samples", "20000", "--seed", "99"];
        run_cli(task, config, one.path(), &[&extra[..], &["--workers", "1"]].concat())?;
        run_cli(task, config, many.path(), &[&extra[..], &["--workers", "4"]].concat())?;
        let mut names: Vec<_> = std::fs::read_dir(one.path())
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        names.sort();
        for name in names {
            let a = std::fs::read(one.path().join(&name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(many.path().join(&name)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{task}: {} differs between 1 and 4 workers", name.to_string_lossy()));
            }
            files += 1;
        }
    }
    Ok(format!("{files} report files byte-identical across --workers 1 and 4"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("closed-form kappa, continuous", closed_form_kappa_continuous),
        ("closed-form kappa, discrete", closed_form_kappa_discrete),
        ("Kesten tail reproduction", kesten_tail),
        ("two-estimator constant agreement", constants_agree),
        ("return-time identity", return_time_identity),
        ("martingale property", martingale),
        ("geometric-sampling identity", geometric_sampling),
        ("duality", duality),
        ("mixed-sign symmetry", mixed_sign_symmetry),
        ("first-switch transform cross-validation", upsilon_cross_validation),
        ("jump-epoch bridge", derived_bridge),
        ("occupation-measure formula", occupation_measure),
        ("SDE consistency", sde_consistency),
        ("exponential-functional route agreement", route_agreement),
        ("determinism across workers", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
