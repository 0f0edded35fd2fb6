//! Tail analysis for Markov-modulated perpetuities and generalized
//! Ornstein-Uhlenbeck processes.

pub mod error;
pub mod levy;
pub mod linalg;
pub mod markov;
pub mod mmgou;
pub mod mmlifs;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod stream;
pub mod tail;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Dtmc = markov::DtmcSpec<f64>;
pub type Ctmc = markov::CtmcSpec<f64>;
pub type Stationary = markov::StationaryLaw<f64>;
pub type Cramer = spectral::CramerSystem<f64>;
pub type Cramer32 = spectral::CramerSystem<f32>;
pub type Mmlifs = mmlifs::MmlifsSpec;
pub type Map = levy::MapSpec;
