//! Matrix-analytic objects: Perron data, Cramér transforms, tail index,
//! first-switch transforms and duality.

pub mod cramer;
pub mod geometric;
pub mod kappa;
pub mod perron;
pub mod upsilon;

pub use cramer::{cramer_system, dual_cramer, CramerSource, CramerSystem, Orientation};
pub use geometric::geometric_sampling_transform;
pub use kappa::{drift, solve_kappa, DriftReport, KappaOutcome, TailIndexSolution};
pub use perron::{perron, PerronData};
pub use upsilon::{
    map_laplace_transform, matrix_exponent, mc_upsilon, upsilon, upsilon_derivative, MatrixEstimate,
    UpsilonMethod,
};
