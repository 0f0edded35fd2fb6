//! Sample-based heuristics for degeneracy and lattice type.
//!
//! Both checks look at finitely many draws, so they can only raise
//! suspicion. The tolerances are fixed at `1e-9`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::markov::sample_index;
use crate::mmlifs::kernel::MmlifsSpec;

const TOL: f64 = 1e-9;
/// Spans below this are treated as numerical noise.
const MIN_SPAN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyVerdict {
    pub degenerate: bool,
    /// `max |A c_{ξ_1} + B - c_{ξ_0}|` over the sampled tuples.
    pub residual_sup: f64,
    /// Least-squares constants `c_i`.
    pub constants: Vec<f64>,
    pub samples: usize,
}

/// Fits constants `c` with `A_1 c_{ξ_1} + B_1 = c_{ξ_0}` to `n` stationary
/// draws of `(ξ_0, ξ_1, A_1, B_1)`; degenerate iff the fit is exact to 1e-9.
pub fn nondegeneracy_check<R: Rng + ?Sized>(spec: &MmlifsSpec, n: usize, rng: &mut R) -> Result<NondegeneracyVerdict> {
    let dim = spec.len();
    if n < dim + 1 {
        return Err(Error::validation("n", format!("need at least {} samples", dim + 1)));
    }
    let draws: Vec<(usize, usize, f64, f64)> = (0..n)
        .map(|_| {
            let i = sample_index(spec.pi(), rng);
            let (j, a, b) = spec.sample_step(i, rng);
            (i, j, a, b)
        })
        .collect();
    let mut g = Matrix::zeros(dim, dim);
    let mut h = vec![0.0; dim];
    for &(i, j, a, b) in &draws {
        let mut x = vec![0.0; dim];
        x[j] += a;
        x[i] -= 1.0;
        for r in 0..dim {
            h[r] -= x[r] * b;
            for c in 0..dim {
                g[(r, c)] += x[r] * x[c];
            }
        }
    }
    let trace: f64 = (0..dim).map(|k| g[(k, k)]).sum();
    let ridge = 1e-13 * (1.0 + trace / dim as f64);
    for k in 0..dim {
        g[(k, k)] += ridge;
    }
    let c = g.solve(&h)?;
    let residual_sup = draws
        .iter()
        .map(|&(i, j, a, b)| (a * c[j] + b - c[i]).abs())
        .fold(0.0, f64::max);
    Ok(NondegeneracyVerdict {
        degenerate: residual_sup < TOL,
        residual_sup,
        constants: c,
        samples: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeVerdict {
    pub lattice_suspect: bool,
    /// Candidate span `d`; `None` when every residual vanishes (any span
    /// fits) or the law looks nonlattice.
    pub span: Option<f64>,
    /// Offsets `a_i` with `log|A_1| - (a_{ξ_1} - a_{ξ_0})` on `dZ`.
    pub offsets: Vec<f64>,
    pub samples: usize,
}

fn float_gcd(mut a: f64, mut b: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > TOL * a.max(1.0) {
        let r = a % b;
        a = b;
        b = if r > b - TOL * a.max(1.0) { 0.0 } else { r };
    }
    a
}

/// Tests whether sampled `log|A_1|`, after removing per-state offsets, sit
/// on an arithmetic progression `dZ`.
pub fn lattice_check<R: Rng + ?Sized>(spec: &MmlifsSpec, n: usize, rng: &mut R) -> Result<LatticeVerdict> {
    let dim = spec.len();
    if n == 0 {
        return Err(Error::validation("n", "must be positive"));
    }
    let mut state = sample_index(spec.pi(), rng);
    let draws: Vec<(usize, usize, f64)> = (0..n)
        .map(|_| {
            let (j, a, _) = spec.sample_step(state, rng);
            let d = (state, j, a.abs().ln());
            state = j;
            d
        })
        .collect();
    // Spanning tree over observed transitions, rooted at state 0.
    let mut first = vec![None; dim * dim];
    for &(i, j, x) in &draws {
        first[i * dim + j].get_or_insert(x);
    }
    let mut offsets = vec![f64::NAN; dim];
    offsets[0] = 0.0;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for k in 0..dim {
            if !offsets[k].is_nan() {
                continue;
            }
            if let Some(x) = first[i * dim + k] {
                offsets[k] = offsets[i] + x;
                stack.push(k);
            } else if let Some(x) = first[k * dim + i] {
                offsets[k] = offsets[i] - x;
                stack.push(k);
            }
        }
    }
    for o in offsets.iter_mut().filter(|o| o.is_nan()) {
        *o = 0.0;
    }
    let residuals: Vec<f64> = draws
        .iter()
        .map(|&(i, j, x)| (x - (offsets[j] - offsets[i])).abs())
        .filter(|r| *r > TOL * (1.0 + r))
        .collect();
    if residuals.is_empty() {
        return Ok(LatticeVerdict {
            lattice_suspect: true,
            span: None,
            offsets,
            samples: n,
        });
    }
    let span = residuals.iter().fold(0.0, |g, &r| float_gcd(g, r));
    let fits = span > MIN_SPAN
        && residuals.iter().all(|&r| {
            let k = (r / span).round();
            (r - k * span).abs() <= TOL * (1.0 + r)
        });
    Ok(LatticeVerdict {
        lattice_suspect: fits,
        span: fits.then_some(span),
        offsets,
        samples: n,
    })
}
