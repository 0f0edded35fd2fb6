//! Continuous-time simulation of the MAP and the MMGOU process.

pub mod functional;
pub mod path;
pub(crate) mod segment;

pub use functional::{
    degeneracy_probe, sample_exponential_functional, DegeneracyVerdict, ExpFunctional, ExpFunctionalSample,
    FunctionalRoute, PerpetuityRoute,
};
pub use path::{
    default_step, euler_check, euler_from_ul, mmgou_path, simulate_map_path, ul_from_zeta_eta, EulerCheck,
    JumpRecord, MapPath, MmgouPath, SwitchMark, UJump, UlPath,
};
pub use segment::{epoch_refinement, jump_epoch_coefficients, EpochCoefficients, RefinementReport};
