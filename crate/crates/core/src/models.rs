//! Reference models used by the validation suite and the shipped configs.

use crate::error::Result;
use crate::levy::{DistributionSpec, LevyComponentSpec, MapSpec, SwitchJumpKernel, SwitchJumpLaw};
use crate::linalg::Matrix;
use crate::markov::{CtmcSpec, DtmcSpec, StateSpace};
use crate::mmlifs::{CellLaw, MmlifsSpec};

fn lognormal_cell(m: f64, s2: f64, b: DistributionSpec) -> CellLaw {
    CellLaw::independent(DistributionSpec::normal(m, s2), b)
}

/// Single state, `ζ` Brownian with drift 0.5 and variance 1, `η` standard
/// Brownian, self-switch rate `q`. The tail index is 1 for every `q`.
pub fn brownian_map(q: f64) -> Result<MapSpec> {
    let chain = CtmcSpec::with_self_rates(StateSpace::indexed(1)?, Matrix::zeros(1, 1), vec![q])?;
    MapSpec::new(
        chain,
        vec![LevyComponentSpec::brownian(0.5, 1.0)],
        vec![LevyComponentSpec::brownian(0.0, 1.0)],
        vec![0.0],
        SwitchJumpKernel::zero(1),
    )
}

/// Single state with `log|A| ~ N(-0.25, 0.25)` and `B ~ N(0, 1)`; `κ = 2`.
pub fn kesten_lognormal() -> Result<MmlifsSpec> {
    MmlifsSpec::single_state(lognormal_cell(-0.25, 0.25, DistributionSpec::normal(0.0, 1.0)))
}

/// The model of [`kesten_lognormal`] with a fair random sign on `A`.
pub fn kesten_mixed_sign() -> Result<MmlifsSpec> {
    MmlifsSpec::single_state(lognormal_cell(-0.25, 0.25, DistributionSpec::normal(0.0, 1.0)).with_sign(0.5))
}

/// Two states, `P = [[0.7, 0.3], [0.6, 0.4]]`, lognormal `|A|` depending on
/// the transition and normal `B` depending on the target state.
pub fn two_state_lognormal() -> Result<MmlifsSpec> {
    let p = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.6, 0.4]])?;
    let chain = DtmcSpec::new(StateSpace::new(["calm", "wild"])?, p)?;
    let b0 = DistributionSpec::normal(0.0, 1.0);
    let b1 = DistributionSpec::normal(0.0, 2.0);
    MmlifsSpec::new(
        chain,
        vec![
            vec![
                Some(lognormal_cell(-0.6, 0.2, b0.clone())),
                Some(lognormal_cell(-0.1, 0.3, b1.clone())),
            ],
            vec![
                Some(lognormal_cell(-0.3, 0.1, b0)),
                Some(lognormal_cell(0.0, 0.4, b1)),
            ],
        ],
    )
}

/// Two-state MAP whose first-switch and epoch laws are simulated exactly:
/// `ζ` is pure drift per state, `η` is Brownian, and the switches carry
/// normal `ζ`-jumps and point `η`-jumps.
pub fn two_state_map() -> Result<MapSpec> {
    let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let chain = CtmcSpec::new(StateSpace::new(["up", "down"])?, q)?;
    let kernel = SwitchJumpKernel::zero(2)
        .with(
            0,
            1,
            SwitchJumpLaw::Independent {
                zeta: DistributionSpec::normal(-0.2, 0.25),
                eta: DistributionSpec::point(0.5),
            },
        )
        .with(
            1,
            0,
            SwitchJumpLaw::Independent {
                zeta: DistributionSpec::normal(0.1, 0.1),
                eta: DistributionSpec::point(-0.25),
            },
        );
    MapSpec::new(
        chain,
        vec![LevyComponentSpec::brownian(1.2, 0.0), LevyComponentSpec::brownian(-0.4, 0.0)],
        vec![LevyComponentSpec::brownian(0.3, 1.0), LevyComponentSpec::brownian(-0.2, 0.5)],
        vec![0.0, 0.0],
        kernel,
    )
}

/// Two-state MAP with Gaussian and compound Poisson parts in both
/// components, correlated Brownian motions and a self-switch in state 0.
pub fn two_state_jump_map() -> Result<MapSpec> {
    let q = Matrix::from_rows(&[vec![-1.5, 1.5], vec![1.0, -1.0]])?;
    let chain = CtmcSpec::with_self_rates(StateSpace::new(["a", "b"])?, q, vec![0.5, 0.0])?;
    let kernel = SwitchJumpKernel::zero(2).with(
        0,
        1,
        SwitchJumpLaw::Independent {
            zeta: DistributionSpec::Exponential { rate: 4.0 },
            eta: DistributionSpec::normal(0.0, 0.5),
        },
    );
    MapSpec::new(
        chain,
        vec![
            LevyComponentSpec {
                drift: 1.5,
                gaussian_var: 0.5,
                cp_rate: 1.0,
                cp_jump: DistributionSpec::normal(-0.3, 0.2),
            },
            LevyComponentSpec {
                drift: -0.2,
                gaussian_var: 0.3,
                cp_rate: 0.5,
                cp_jump: DistributionSpec::NegatedExponential { rate: 3.0 },
            },
        ],
        vec![
            LevyComponentSpec {
                drift: 0.1,
                gaussian_var: 1.0,
                cp_rate: 0.5,
                cp_jump: DistributionSpec::normal(1.0, 0.5),
            },
            LevyComponentSpec::brownian(0.0, 0.5),
        ],
        vec![0.3, -0.1],
        kernel,
    )
}
