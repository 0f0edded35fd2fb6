//! Matrix exponent, Laplace transform and first-switch transform of a MAP.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{sample_levy_increment, MapSpec};
use crate::linalg::Matrix;
use crate::markov::sample_index;
use crate::quadrature::integrate_to_infinity;
use crate::spectral::cramer::CramerSource;
use crate::stream::Streams;

/// `Ψ(w) = diag ψ_j(w) + (Q ∘ M(w))^T`, with `M_jk(w) = E[e^{w Z^{jk}}]`.
/// Self-switch epochs add `r_j (M_jj(w) - 1)` on the diagonal.
pub fn matrix_exponent(spec: &MapSpec, w: f64) -> Result<Matrix<f64>> {
    let n = spec.len();
    let chain = spec.chain();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        out[(j, j)] = spec.psi(j, w)? + chain.q()[(j, j)];
        for k in 0..n {
            let rate = chain.epoch_weight(j, k);
            if rate <= 0.0 {
                continue;
            }
            let m = switch_mgf(spec, j, k, w)?;
            if j == k {
                out[(j, j)] += rate * (m - 1.0);
            } else {
                out[(k, j)] += rate * m;
            }
        }
    }
    Ok(out)
}

fn switch_mgf(spec: &MapSpec, i: usize, j: usize, w: f64) -> Result<f64> {
    spec.switch_jump(i, j).zeta_mgf(w).map_err(|e| match e {
        Error::MomentExplosion { family, w, detail } => Error::MomentExplosion {
            family,
            w,
            detail: format!(
                "{detail} (switch jump {} -> {})",
                spec.chain().states().label(i),
                spec.chain().states().label(j)
            ),
        },
        e => e,
    })
}

/// `E_i[e^{w ζ_t} 1{J_t = j}] = e_j^T e^{tΨ(w)} e_i`.
pub fn map_laplace_transform(spec: &MapSpec, w: f64, t: f64, i: usize, j: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::validation("t", "must be nonnegative"));
    }
    let e = matrix_exponent(spec, w)?.scale(t).expm()?;
    Ok(e[(j, i)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpsilonMethod {
    /// First-switch factorization `w_ij m_ij(-θ) / (q_i - ψ_i(-θ))`.
    ClosedForm,
    /// `q_ij ∫_0^∞ e_j^T e^{tΨ(-θ)} e_i e^{-q_ij t} dt` by quadrature.
    Quadrature,
}

/// Whether `ψ_i(-θ) < q_i` and every switch-jump transform is finite.
pub fn upsilon_in_domain(spec: &MapSpec, theta: f64) -> bool {
    let chain = spec.chain();
    (0..spec.len()).all(|i| {
        let q = chain.epoch_rate(i);
        spec.psi(i, -theta).is_ok_and(|p| p < q)
            && (0..spec.len()).all(|j| chain.epoch_weight(i, j) <= 0.0 || switch_mgf(spec, i, j, -theta).is_ok())
    })
}

fn holding_factor(spec: &MapSpec, i: usize, theta: f64) -> Result<f64> {
    let q = spec.chain().epoch_rate(i);
    let psi = spec.psi(i, -theta)?;
    if psi >= q {
        return Err(Error::MomentExplosion {
            family: "levy".into(),
            w: -theta,
            detail: format!(
                "psi(-theta) = {psi} >= q = {q} in state {}",
                spec.chain().states().label(i)
            ),
        });
    }
    Ok(q - psi)
}

/// `Υ^{ij}(θ) = E_i[e^{-θ ζ_{T_1}} 1{J_{T_1} = j}]`.
pub fn upsilon(spec: &MapSpec, theta: f64, method: UpsilonMethod) -> Result<Matrix<f64>> {
    match method {
        UpsilonMethod::ClosedForm => upsilon_closed(spec, theta),
        UpsilonMethod::Quadrature => upsilon_integral(spec, theta),
    }
}

fn upsilon_closed(spec: &MapSpec, theta: f64) -> Result<Matrix<f64>> {
    let n = spec.len();
    let chain = spec.chain();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let g = holding_factor(spec, i, theta)?;
        for j in 0..n {
            let w = chain.epoch_weight(i, j);
            if w > 0.0 {
                out[(i, j)] = w * switch_mgf(spec, i, j, -theta)? / g;
            }
        }
    }
    Ok(out)
}

fn upsilon_integral(spec: &MapSpec, theta: f64) -> Result<Matrix<f64>> {
    let n = spec.len();
    let chain = spec.chain();
    let psi = matrix_exponent(spec, -theta)?;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let w = chain.epoch_weight(i, j);
            if w <= 0.0 {
                continue;
            }
            // e^{tΨ} e^{-wt} = e^{t(Ψ - wI)}, which stays in range for large t.
            let shifted = &psi - &Matrix::identity(n).scale(w);
            let f = |t: f64| {
                if t == 0.0 {
                    return if i == j { 1.0 } else { 0.0 };
                }
                match shifted.scale(t).expm() {
                    Ok(e) => e[(j, i)],
                    Err(_) => f64::NAN,
                }
            };
            let v = integrate_to_infinity(f, 0.0, 1e-10).map_err(|e| {
                Error::Numerical(format!(
                    "integral form of entry ({}, {}) at theta = {theta}: {e}",
                    chain.states().label(i),
                    chain.states().label(j)
                ))
            })?;
            out[(i, j)] = w * v;
        }
    }
    Ok(out)
}

/// `dΥ^{ij}/dθ` from the closed form.
pub fn upsilon_derivative(spec: &MapSpec, theta: f64) -> Result<Matrix<f64>> {
    let n = spec.len();
    let chain = spec.chain();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let g = holding_factor(spec, i, theta)?;
        let dpsi = spec.psi_derivative(i, -theta)?;
        for j in 0..n {
            let w = chain.epoch_weight(i, j);
            if w <= 0.0 {
                continue;
            }
            let law = spec.switch_jump(i, j);
            let m = law.zeta_mgf(-theta)?;
            let dm = law.zeta_mgf_derivative(-theta)?;
            out[(i, j)] = w * (-dm * g - m * dpsi) / (g * g);
        }
    }
    Ok(out)
}

impl CramerSource for MapSpec {
    fn dim(&self) -> usize {
        self.len()
    }

    fn cramer_matrix(&self, theta: f64) -> Result<Matrix<f64>> {
        upsilon_closed(self, theta)
    }

    fn cramer_derivative(&self, theta: f64) -> Result<Matrix<f64>> {
        upsilon_derivative(self, theta)
    }

    fn in_domain(&self, theta: f64) -> bool {
        upsilon_in_domain(self, theta)
    }
}

/// Monte Carlo matrix estimate with entrywise standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEstimate {
    pub mean: Matrix<f64>,
    pub stderr: Matrix<f64>,
    pub samples_per_row: usize,
}

impl MatrixEstimate {
    /// Largest `|mean - target| / stderr` over entries (entries with zero
    /// error must match to 1e-12).
    pub fn max_z(&self, target: &Matrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..target.rows() {
            for j in 0..target.cols() {
                let d = (self.mean[(i, j)] - target[(i, j)]).abs();
                let se = self.stderr[(i, j)];
                let z = if se > 0.0 {
                    d / se
                } else if d <= 1e-12 * (1.0 + target[(i, j)].abs()) {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }

    /// Assembles per-row, per-batch cell sums into batch-means estimates.
    pub(crate) fn from_row_batches(n: usize, rows: Vec<Vec<Vec<f64>>>, per_row: usize) -> Self {
        let mut mean = Matrix::zeros(n, n);
        let mut stderr = Matrix::zeros(n, n);
        for (i, batches) in rows.iter().enumerate() {
            let sizes = crate::stream::split_counts(per_row, batches.len());
            for j in 0..n {
                let sums: Vec<(f64, usize)> = batches.iter().zip(&sizes).map(|(b, &s)| (b[j], s)).collect();
                let e = crate::stream::Estimate::from_batch_sums(&sums);
                mean[(i, j)] = e.mean;
                stderr[(i, j)] = e.stderr;
            }
        }
        MatrixEstimate {
            mean,
            stderr,
            samples_per_row: per_row,
        }
    }
}

/// One exact draw of `(J_{T_1}, ζ_{T_1})` started from state `i`.
pub fn sample_first_switch<R: Rng + ?Sized>(spec: &MapSpec, i: usize, rng: &mut R) -> (usize, f64) {
    let chain = spec.chain();
    let q = chain.epoch_rate(i);
    let t = Exp::new(q).expect("positive epoch rate").sample(rng);
    let weights: Vec<f64> = (0..spec.len()).map(|j| chain.epoch_weight(i, j)).collect();
    let j = sample_index(&weights, rng);
    let seg = sample_levy_increment(spec.zeta(i), t, rng).unwrap_or(0.0);
    let (zj, _) = spec.switch_jump(i, j).sample(rng);
    (j, seg + zj)
}

/// Monte Carlo estimate of `Υ(θ)` from `n` first-switch draws per row.
pub fn mc_upsilon(spec: &MapSpec, theta: f64, n: usize, streams: &Streams, batches: usize) -> Result<MatrixEstimate> {
    let dim = spec.len();
    for i in 0..dim {
        if spec.chain().epoch_rate(i) <= 0.0 {
            return Err(Error::Absorbing(spec.chain().states().label(i).to_string()));
        }
    }
    let rows = (0..dim)
        .map(|i| {
            streams.child(&format!("row{i}")).run_batches(n, batches, |_, size, rng| {
                let mut sums = vec![0.0; dim];
                for _ in 0..size {
                    let (j, z) = sample_first_switch(spec, i, rng);
                    sums[j] += (-theta * z).exp();
                }
                sums
            })
        })
        .collect();
    Ok(MatrixEstimate::from_row_batches(dim, rows, n))
}
