//! Empirical tail estimators: the `t^κ` plateau and the Hill statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ls_slope, median, quantile_sorted};
use crate::stream::{split_counts, Estimate, DEFAULT_BATCHES};

/// Smallest sample accepted by [`empirical_plateau`].
pub const MIN_PLATEAU_SAMPLES: usize = 10_000;
const GRID_POINTS: usize = 40;
const MIN_EXCEEDANCES: usize = 50;

/// Quantile range of the plateau grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileWindow {
    pub lower: f64,
    pub upper: f64,
}

impl Default for QuantileWindow {
    fn default() -> Self {
        QuantileWindow {
            lower: 0.99,
            upper: 0.9999,
        }
    }
}

impl QuantileWindow {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(0.0 < self.lower && self.lower < self.upper && self.upper < 1.0) {
            return Err(Error::validation(field, "need 0 < lower < upper < 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauResult {
    /// `(t, t^κ P[X > t])` on a log grid.
    pub curve: Vec<(f64, f64)>,
    /// Median of the curve with a delete-one-batch jackknife error.
    pub estimate: Estimate,
    /// Least-squares slope of `log curve` against `log t`.
    pub slope: f64,
    /// The top of the window was lowered to keep enough exceedances.
    pub widened: bool,
    pub exceedances_at_top: usize,
}

struct Survival {
    sorted: Vec<f64>,
    /// `tail_weight[k]` = total weight of `sorted[k..]`.
    tail_weight: Vec<f64>,
}

impl Survival {
    fn new(values: &[f64], weights: Option<&[f64]>) -> Self {
        let mut pairs: Vec<(f64, f64)> = match weights {
            Some(w) => values.iter().copied().zip(w.iter().copied()).collect(),
            None => values.iter().map(|&v| (v, 1.0)).collect(),
        };
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tail_weight = vec![0.0; pairs.len() + 1];
        for k in (0..pairs.len()).rev() {
            tail_weight[k] = tail_weight[k + 1] + pairs[k].1;
        }
        Survival {
            sorted: pairs.into_iter().map(|p| p.0).collect(),
            tail_weight,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let k = self.sorted.partition_point(|&x| x <= t);
        self.tail_weight[k] / self.tail_weight[0]
    }

    fn exceedances(&self, t: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&x| x <= t)
    }
}

/// Plateau of `t^κ P[X > t]` between the window quantiles of `values`.
pub fn empirical_plateau(
    values: &[f64],
    weights: Option<&[f64]>,
    kappa: f64,
    window: QuantileWindow,
) -> Result<PlateauResult> {
    window.validate("window")?;
    if values.len() < MIN_PLATEAU_SAMPLES {
        return Err(Error::Precondition(format!(
            "plateau needs at least {MIN_PLATEAU_SAMPLES} samples, got {}",
            values.len()
        )));
    }
    if weights.is_some_and(|w| w.len() != values.len()) {
        return Err(Error::validation("weights", "length differs from values"));
    }
    let all = Survival::new(values, weights);
    let lo = quantile_sorted(&all.sorted, window.lower);
    let mut hi = quantile_sorted(&all.sorted, window.upper);
    let mut widened = false;
    if all.exceedances(hi) < MIN_EXCEEDANCES {
        hi = all.sorted[all.sorted.len() - MIN_EXCEEDANCES];
        widened = true;
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Unavailable(format!(
            "upper tail window [{lo}, {hi}] is not a positive interval"
        )));
    }
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| lo * (hi / lo).powf(k as f64 / (GRID_POINTS - 1) as f64))
        .collect();
    let curve: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t.powf(kappa) * all.at(t))).collect();
    let positive: Vec<&(f64, f64)> = curve.iter().filter(|c| c.1 > 0.0).collect();
    let slope = ls_slope(
        &positive.iter().map(|c| c.0.ln()).collect::<Vec<_>>(),
        &positive.iter().map(|c| c.1.ln()).collect::<Vec<_>>(),
    );
    // Jackknife over contiguous batches: the survival at each grid point is
    // a ratio of weight sums, so leaving one batch out is exact arithmetic.
    let mut start = 0;
    let batches: Vec<(Vec<f64>, f64)> = split_counts(values.len(), DEFAULT_BATCHES)
        .into_iter()
        .map(|size| {
            let range = start..start + size;
            start += size;
            let s = Survival::new(&values[range.clone()], weights.map(|w| &w[range]));
            let above = grid.iter().map(|&t| s.at(t) * s.tail_weight[0]).collect();
            (above, s.tail_weight[0])
        })
        .collect();
    let total_weight = all.tail_weight[0];
    let total_above: Vec<f64> = grid.iter().map(|&t| all.at(t) * total_weight).collect();
    let loo: Vec<f64> = batches
        .iter()
        .map(|(above, w)| {
            let ys: Vec<f64> = grid
                .iter()
                .zip(total_above.iter().zip(above))
                .map(|(&t, (ta, a))| t.powf(kappa) * (ta - a) / (total_weight - w))
                .collect();
            median(&ys)
        })
        .collect();
    let nb = loo.len() as f64;
    let loo_mean = loo.iter().sum::<f64>() / nb;
    let jackknife_se = ((nb - 1.0) / nb * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>()).sqrt();
    Ok(PlateauResult {
        estimate: Estimate {
            mean: median(&curve.iter().map(|c| c.1).collect::<Vec<_>>()),
            stderr: jackknife_se,
            samples: values.len(),
        },
        curve,
        slope,
        widened,
        exceedances_at_top: all.exceedances(hi),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillResult {
    /// Tail-index estimate `1/γ̂` at the chosen `k`.
    pub estimate: f64,
    pub k: usize,
    /// `(k, estimate)` over `[√n/4, 4√n]`.
    pub curve: Vec<(usize, f64)>,
    /// Positive samples used.
    pub positives: usize,
}

fn hill_at(desc: &[f64], k: usize) -> f64 {
    let base = desc[k].ln();
    let gamma = desc[..k].iter().map(|x| x.ln() - base).sum::<f64>() / k as f64;
    1.0 / gamma
}

/// Hill estimator on the positive samples; `k` defaults to `⌈√n⌉`.
pub fn hill(values: &[f64], k: Option<usize>) -> Result<HillResult> {
    let mut desc: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    desc.sort_by(|a, b| b.total_cmp(a));
    let n = desc.len();
    let root = (n as f64).sqrt();
    let k = k.unwrap_or(root.ceil() as usize);
    if k < 10 || k >= n {
        return Err(Error::Precondition(format!(
            "Hill needs 10 <= k < positive sample count ({n}), got k = {k}"
        )));
    }
    let (lo, hi) = (((root / 4.0) as usize).max(10), ((4.0 * root) as usize).min(n - 1));
    let mut curve = Vec::new();
    if hi >= lo {
        let steps = 24;
        for s in 0..=steps {
            let kk = (lo as f64 * (hi as f64 / lo as f64).powf(s as f64 / steps as f64)).round() as usize;
            if curve.last().is_none_or(|c: &(usize, f64)| c.0 != kk) {
                curve.push((kk, hill_at(&desc, kk)));
            }
        }
    }
    Ok(HillResult {
        estimate: hill_at(&desc, k),
        k,
        curve,
        positives: n,
    })
}
