//! Grid paths of the MAP, the MMGOU process and its `(U, L)` drivers.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{bivariate_with_jumps, Component, MapSpec};
use crate::markov::{sample_index, Initial};
use crate::stream::{Estimate, Streams, DEFAULT_BATCHES};

/// A switch epoch, placed at grid index `index`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchMark {
    pub index: usize,
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub z_zeta: f64,
    pub z_eta: f64,
}

/// A compound Poisson jump inside the grid step ending at `index`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub index: usize,
    pub component: Component,
    pub size: f64,
}

/// `(J, ζ, η)` on a grid. Values at a mark are taken after the switch
/// jump, and `states[k]` is the regime on `(t_k, t_{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPath {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
    pub marks: Vec<SwitchMark>,
    pub jumps: Vec<JumpRecord>,
    /// Per-state Brownian variance of ζ and covariance with η.
    pub zeta_var: Vec<f64>,
    pub cov: Vec<f64>,
}

impl MapPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Keeps every `factor`-th grid point plus all marks and the endpoint.
    /// Jumps are reassigned to the coarse step that contains them.
    pub fn coarsen(&self, factor: usize) -> MapPath {
        let factor = factor.max(1);
        let last = self.len() - 1;
        let mut keep = vec![false; self.len()];
        for (k, flag) in keep.iter_mut().enumerate() {
            *flag = k % factor == 0 || k == last;
        }
        for m in &self.marks {
            keep[m.index] = true;
        }
        let kept: Vec<usize> = (0..self.len()).filter(|&k| keep[k]).collect();
        let remap = |old: usize| kept.partition_point(|&k| k < old);
        MapPath {
            times: kept.iter().map(|&k| self.times[k]).collect(),
            states: kept.iter().map(|&k| self.states[k]).collect(),
            zeta: kept.iter().map(|&k| self.zeta[k]).collect(),
            eta: kept.iter().map(|&k| self.eta[k]).collect(),
            marks: self
                .marks
                .iter()
                .map(|m| SwitchMark {
                    index: remap(m.index),
                    ..*m
                })
                .collect(),
            jumps: self
                .jumps
                .iter()
                .map(|j| JumpRecord {
                    index: remap(j.index),
                    ..*j
                })
                .collect(),
            zeta_var: self.zeta_var.clone(),
            cov: self.cov.clone(),
        }
    }

    fn mark_at(&self) -> Vec<Option<(f64, f64)>> {
        let mut out = vec![None; self.len()];
        for m in &self.marks {
            out[m.index] = Some((m.z_zeta, m.z_eta));
        }
        out
    }
}

/// Default sub-step: `min(0.01, mean holding time / 100)`.
pub fn default_step(spec: &MapSpec) -> f64 {
    let chain = spec.chain();
    let fastest = (0..spec.len()).map(|i| chain.epoch_rate(i)).fold(0.0, f64::max);
    if fastest > 0.0 {
        (0.01f64).min(1.0 / (100.0 * fastest))
    } else {
        0.01
    }
}

/// Simulates `(J, ζ, η)` on `[0, horizon]`: exact switch epochs, and within
/// each regime segment a uniform sub-grid with step at most `dt`.
pub fn simulate_map_path<R: Rng + ?Sized>(
    spec: &MapSpec,
    initial: &Initial,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<MapPath> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    if !(horizon > 0.0) {
        return Err(Error::validation("horizon", "must be positive"));
    }
    let n = spec.len();
    let chain = spec.chain();
    let mut state = initial.draw(rng);
    let mut path = MapPath {
        times: vec![0.0],
        states: vec![state],
        zeta: vec![0.0],
        eta: vec![0.0],
        marks: Vec::new(),
        jumps: Vec::new(),
        zeta_var: (0..n).map(|j| spec.zeta(j).gaussian_var).collect(),
        cov: (0..n).map(|j| spec.cov(j)).collect(),
    };
    let pairs: Vec<_> = (0..n).map(|j| spec.gaussian_pair(j)).collect();
    let mut t = 0.0;
    while t < horizon {
        let rate = chain.epoch_rate(state);
        let hold = if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        };
        let switched = t + hold < horizon;
        let end = if switched { t + hold } else { horizon };
        let m = ((end - t) / dt).ceil().max(1.0) as usize;
        let h = (end - t) / m as f64;
        for k in 1..=m {
            let index = path.times.len();
            let jumps = &mut path.jumps;
            let inc = bivariate_with_jumps(spec.zeta(state), spec.eta(state), &pairs[state], h, rng, &mut |c, size| {
                jumps.push(JumpRecord {
                    index,
                    component: c,
                    size,
                })
            });
            let (z, e) = (*path.zeta.last().expect("nonempty"), *path.eta.last().expect("nonempty"));
            path.times.push(if k == m { end } else { t + h * k as f64 });
            path.states.push(state);
            path.zeta.push(z + inc.zeta.total());
            path.eta.push(e + inc.eta.total());
        }
        t = end;
        if switched {
            let weights: Vec<f64> = (0..n).map(|j| chain.epoch_weight(state, j)).collect();
            let next = sample_index(&weights, rng);
            let (zz, ze) = spec.switch_jump(state, next).sample(rng);
            let k = path.times.len() - 1;
            path.zeta[k] += zz;
            path.eta[k] += ze;
            path.states[k] = next;
            path.marks.push(SwitchMark {
                index: k,
                time: t,
                from: state,
                to: next,
                z_zeta: zz,
                z_eta: ze,
            });
            state = next;
        }
    }
    Ok(path)
}

/// `V` on the grid of a [`MapPath`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmgouPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub v0: f64,
}

/// `V_t = e^{-ζ_t}(V_0 + ∫_(0,t] e^{ζ_{s-}} dη_s)` with the integral as a
/// left-point sum over the grid and switch jumps taken exactly.
///
/// Evaluated through `V_{k+1} = e^{-Δζ_k}(V_k + Δη_k)`, which equals the
/// left-point sum and never forms `e^{ζ}` itself.
pub fn mmgou_path(path: &MapPath, v0: f64) -> Result<MmgouPath> {
    let marks = path.mark_at();
    let mut values = Vec::with_capacity(path.len());
    let mut v = v0;
    values.push(v);
    for k in 0..path.len() - 1 {
        let (zz, ze) = marks[k + 1].unwrap_or((0.0, 0.0));
        let dz = path.zeta[k + 1] - zz - path.zeta[k];
        let de = path.eta[k + 1] - ze - path.eta[k];
        v = (-dz).exp() * (v + de);
        if marks[k + 1].is_some() {
            v = (-zz).exp() * (v + ze);
        }
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "V left the floating-point range at t = {}",
                path.times[k + 1]
            )));
        }
        values.push(v);
    }
    Ok(MmgouPath {
        times: path.times.clone(),
        values,
        v0,
    })
}

/// Jump of `U` at a recorded ζ jump `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UJump {
    pub index: usize,
    /// `y + e^{-y} - 1`, the summand added to `-ζ`.
    pub compensator: f64,
    /// `e^{-y} - 1`, the jump of `U` itself.
    pub du: f64,
}

/// The drivers `(U, L)` of `dV = V_- dU + dL` on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UlPath {
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub u_jumps: Vec<UJump>,
}

/// `U_t = -ζ_t + ½∫σ_ζ²(J_s)ds + Σ(Δζ + e^{-Δζ} - 1)` and
/// `L_t = η_t - ∫σ_{ζη}(J_s)ds + Σ(e^{-Δζ} - 1)Δη` over recorded jumps.
pub fn ul_from_zeta_eta(path: &MapPath) -> UlPath {
    let n = path.len();
    let mut du_extra = vec![0.0; n];
    let mut dl_extra = vec![0.0; n];
    let mut u_jumps = Vec::new();
    let mut add = |index: usize, y: f64, eta_jump: f64| {
        let du = (-y).exp_m1();
        du_extra[index] += y + du;
        dl_extra[index] += du * eta_jump;
        u_jumps.push(UJump {
            index,
            compensator: y + du,
            du,
        });
    };
    for j in path.jumps.iter().filter(|j| j.component == Component::Zeta) {
        add(j.index, j.size, 0.0);
    }
    for m in &path.marks {
        add(m.index, m.z_zeta, m.z_eta);
    }
    let mut u = vec![0.0; n];
    let mut l = vec![0.0; n];
    for k in 0..n - 1 {
        let h = path.times[k + 1] - path.times[k];
        let s = path.states[k];
        u[k + 1] = u[k] - (path.zeta[k + 1] - path.zeta[k]) + 0.5 * path.zeta_var[s] * h + du_extra[k + 1];
        l[k + 1] = l[k] + (path.eta[k + 1] - path.eta[k]) - path.cov[s] * h + dl_extra[k + 1];
    }
    u_jumps.sort_by_key(|j| j.index);
    UlPath {
        times: path.times.clone(),
        u,
        l,
        u_jumps,
    }
}

/// Euler scheme `V_{k+1} = V_k + V_k ΔU_k + ΔL_k`.
pub fn euler_from_ul(ul: &UlPath, v0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(ul.u.len());
    let mut v = v0;
    out.push(v);
    for k in 0..ul.u.len() - 1 {
        v += v * (ul.u[k + 1] - ul.u[k]) + (ul.l[k + 1] - ul.l[k]);
        out.push(v);
    }
    out
}

/// Sup distance between the Euler and explicit paths at three resolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    /// Nominal grid steps, coarsest first.
    pub steps: Vec<f64>,
    pub sup_errors: Vec<Estimate>,
    pub monotone: bool,
    /// Smallest jump of `U` seen on any path.
    pub min_du: f64,
}

/// Simulates paths at `dt/16`, coarsens them to `dt/4` and `dt`, and
/// compares the Euler solution driven by `(U, L)` with the explicit formula
/// on each grid.
pub fn euler_check(
    spec: &MapSpec,
    initial: &Initial,
    horizon: f64,
    dt: f64,
    v0: f64,
    n_paths: usize,
    streams: &Streams,
) -> Result<EulerCheck> {
    let factors = [16usize, 4, 1];
    let parts = streams.run_batches(n_paths, DEFAULT_BATCHES, |_, size, rng| -> Result<(Vec<f64>, f64)> {
        let mut sums = vec![0.0; factors.len()];
        let mut min_du = f64::INFINITY;
        for _ in 0..size {
            let fine = simulate_map_path(spec, initial, horizon, dt / 16.0, rng)?;
            for (k, &f) in factors.iter().enumerate() {
                let p = fine.coarsen(f);
                let explicit = mmgou_path(&p, v0)?;
                let ul = ul_from_zeta_eta(&p);
                min_du = ul.u_jumps.iter().map(|j| j.du).fold(min_du, f64::min);
                let euler = euler_from_ul(&ul, v0);
                sums[k] += explicit
                    .values
                    .iter()
                    .zip(&euler)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            }
        }
        Ok((sums, min_du))
    });
    let parts: Vec<(Vec<f64>, f64)> = parts.into_iter().collect::<Result<_>>()?;
    let sizes = crate::stream::split_counts(n_paths, DEFAULT_BATCHES);
    let sup_errors: Vec<Estimate> = (0..factors.len())
        .map(|k| {
            let sums: Vec<(f64, usize)> = parts.iter().zip(&sizes).map(|(p, &s)| (p.0[k], s)).collect();
            Estimate::from_batch_sums(&sums)
        })
        .collect();
    let monotone = sup_errors.windows(2).all(|w| w[1].mean < w[0].mean);
    Ok(EulerCheck {
        steps: factors.iter().map(|&f| dt * f as f64 / 16.0).collect(),
        sup_errors,
        monotone,
        min_du: parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
    })
}
