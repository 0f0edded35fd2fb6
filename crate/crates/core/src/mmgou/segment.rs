//! One regime segment of the MAP and its affine coefficients.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::{bivariate_with_jumps, MapSpec};
use crate::markov::sample_index;

/// `(e^x - 1)/x`, continuous at 0.
pub(crate) fn phi(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// Increment of ζ over a segment and `b = ∫_(0,t] e^{-(ζ_t - ζ_{s-})} dη_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Segment {
    pub dz: f64,
    pub b: f64,
}

/// How a segment in one regime is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SegmentScheme {
    /// No Gaussian parts: drifts between compound Poisson events are
    /// integrated in closed form.
    EventExact,
    /// ζ a pure drift and η without jumps: `b` is Gaussian.
    GaussianExact,
    /// Sub-grid with left-point stochastic terms and exact drift terms.
    SubGrid,
}

pub(crate) fn scheme(map: &MapSpec, j: usize) -> SegmentScheme {
    let (z, e) = (map.zeta(j), map.eta(j));
    if z.gaussian_var == 0.0 && e.gaussian_var == 0.0 {
        SegmentScheme::EventExact
    } else if z.gaussian_var == 0.0 && z.cp_rate == 0.0 && e.cp_rate == 0.0 {
        SegmentScheme::GaussianExact
    } else {
        SegmentScheme::SubGrid
    }
}

/// Simulates a segment of length `t` in regime `j`, with sub-steps of at
/// most `dt` when a sub-grid is needed.
pub(crate) fn simulate_segment<R: Rng + ?Sized>(map: &MapSpec, j: usize, t: f64, dt: f64, rng: &mut R) -> Segment {
    let (z, e) = (map.zeta(j), map.eta(j));
    match scheme(map, j) {
        SegmentScheme::GaussianExact => {
            let bz = z.drift;
            let mean = e.drift * t * phi(-bz * t);
            let var = e.gaussian_var * t * phi(-2.0 * bz * t);
            let n: f64 = StandardNormal.sample(rng);
            Segment {
                dz: bz * t,
                b: mean + var.sqrt() * n,
            }
        }
        SegmentScheme::EventExact => {
            let mut events = Vec::new();
            for (rate, law, is_zeta) in [(z.cp_rate, &z.cp_jump, true), (e.cp_rate, &e.cp_jump, false)] {
                if rate > 0.0 {
                    let k = Poisson::new(rate * t).expect("positive mean").sample(rng) as usize;
                    for _ in 0..k {
                        events.push((t * rng.random::<f64>(), is_zeta, law.sample(rng)));
                    }
                }
            }
            events.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (bz, c) = (z.drift, e.drift);
            let (mut s, mut dz, mut b) = (0.0, 0.0, 0.0);
            let flow = |b: &mut f64, dz: &mut f64, h: f64| {
                *b = (-bz * h).exp() * *b + c * h * phi(-bz * h);
                *dz += bz * h;
            };
            for (time, is_zeta, size) in events {
                flow(&mut b, &mut dz, time - s);
                s = time;
                if is_zeta {
                    b *= (-size).exp();
                    dz += size;
                } else {
                    b += size;
                }
            }
            flow(&mut b, &mut dz, t - s);
            Segment { dz, b }
        }
        SegmentScheme::SubGrid => {
            let pair = map.gaussian_pair(j);
            let m = (t / dt).ceil().max(1.0) as usize;
            let h = t / m as f64;
            let drift_part = e.drift * h * phi(z.drift * h);
            let (mut dz, mut b) = (0.0, 0.0);
            for _ in 0..m {
                let inc = bivariate_with_jumps(z, e, &pair, h, rng, &mut |_, _| {});
                let step = inc.zeta.total();
                b = (-step).exp() * (b + inc.eta.gaussian + inc.eta.jumps + drift_part);
                dz += step;
            }
            Segment { dz, b }
        }
    }
}

/// One draw of `(ξ_1, A_1, B_1)` from an epoch in state `i`: an exponential
/// holding time, the regime segment, then the switch jump at the epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochCoefficients {
    pub next: usize,
    pub a: f64,
    pub b: f64,
    pub holding: f64,
}

pub(crate) fn epoch_target<R: Rng + ?Sized>(map: &MapSpec, i: usize, rng: &mut R) -> (f64, usize) {
    let chain = map.chain();
    let t = Exp::new(chain.epoch_rate(i)).expect("positive epoch rate").sample(rng);
    let weights: Vec<f64> = (0..map.len()).map(|j| chain.epoch_weight(i, j)).collect();
    (t, sample_index(&weights, rng))
}

/// Coefficients for a known holding time and target.
pub(crate) fn coefficients_for<R: Rng + ?Sized>(
    map: &MapSpec,
    i: usize,
    j: usize,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> (f64, f64) {
    let seg = simulate_segment(map, i, t, dt, rng);
    let (zz, ze) = map.switch_jump(i, j).sample(rng);
    let a = (-(seg.dz + zz)).exp();
    let b = (-zz).exp() * (seg.b + ze);
    (a, b)
}

/// One draw of the coefficients at the first switch epoch from state `i`.
pub fn jump_epoch_coefficients<R: Rng + ?Sized>(
    map: &MapSpec,
    i: usize,
    dt: f64,
    rng: &mut R,
) -> Result<EpochCoefficients> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    if map.chain().epoch_rate(i) <= 0.0 {
        return Err(Error::Absorbing(map.chain().states().label(i).to_string()));
    }
    let (t, next) = epoch_target(map, i, rng);
    let (a, b) = coefficients_for(map, i, next, t, dt, rng);
    Ok(EpochCoefficients { next, a, b, holding: t })
}

/// Sub-grid integration of one segment at several resolutions driven by
/// the same fine increments. `factors[k]` fine steps make one step of level
/// `k`; the finest grid has `64 ceil(t/dt)` steps.
fn segment_levels<R: Rng + ?Sized>(map: &MapSpec, j: usize, t: f64, dt: f64, factors: &[usize], rng: &mut R) -> Vec<Segment> {
    let (z, e) = (map.zeta(j), map.eta(j));
    let pair = map.gaussian_pair(j);
    let m = 64 * (t / dt).ceil().max(1.0) as usize;
    let h = t / m as f64;
    let fine: Vec<(f64, f64)> = (0..m)
        .map(|_| {
            let inc = bivariate_with_jumps(z, e, &pair, h, rng, &mut |_, _| {});
            (inc.zeta.total(), inc.eta.gaussian + inc.eta.jumps)
        })
        .collect();
    factors
        .iter()
        .map(|&f| {
            let big = h * f as f64;
            let drift_part = e.drift * big * phi(z.drift * big);
            let (mut dz, mut b) = (0.0, 0.0);
            for chunk in fine.chunks(f) {
                let step: f64 = chunk.iter().map(|c| c.0).sum();
                let noise: f64 = chunk.iter().map(|c| c.1).sum();
                b = (-step).exp() * (b + noise + drift_part);
                dz += step;
            }
            Segment { dz, b }
        })
        .collect()
}

/// Strong self-convergence of the epoch coefficient `B` in the sub-step.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RefinementReport {
    pub dt: f64,
    /// RMS of `B(dt) - B(dt/64)`.
    pub rms_coarse: f64,
    /// RMS of `B(dt/4) - B(dt/64)`.
    pub rms_fine: f64,
    /// `rms_coarse / rms_fine`; about 2 for strong order 1/2.
    pub ratio: f64,
    pub samples: usize,
}

/// Couples `B` at sub-steps `dt`, `dt/4` and `dt/64` on common increments.
pub fn epoch_refinement(map: &MapSpec, i: usize, dt: f64, n: usize, streams: &crate::stream::Streams) -> Result<RefinementReport> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    let sums = streams.run_batches(n, crate::stream::DEFAULT_BATCHES, |_, size, rng| {
        let (mut c, mut f) = (0.0, 0.0);
        for _ in 0..size {
            let (t, j) = epoch_target(map, i, rng);
            let levels = segment_levels(map, i, t, dt, &[64, 16, 1], rng);
            let (zz, _) = map.switch_jump(i, j).sample(rng);
            let w = (-zz).exp();
            c += (w * (levels[0].b - levels[2].b)).powi(2);
            f += (w * (levels[1].b - levels[2].b)).powi(2);
        }
        (c, f)
    });
    let rms_coarse = (sums.iter().map(|s| s.0).sum::<f64>() / n as f64).sqrt();
    let rms_fine = (sums.iter().map(|s| s.1).sum::<f64>() / n as f64).sqrt();
    Ok(RefinementReport {
        dt,
        rms_coarse,
        rms_fine,
        ratio: rms_coarse / rms_fine,
        samples: n,
    })
}
