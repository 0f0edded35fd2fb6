//! Markov-modulated linear iterated function systems.

pub mod checks;
pub mod cycles;
pub mod iterate;
pub mod kernel;
pub mod signs;
pub mod stationary;

pub use checks::{lattice_check, nondegeneracy_check, LatticeVerdict, NondegeneracyVerdict};
pub use cycles::{cycle_moment, occupation_check, return_time_embed, CycleSample, OccupationReport};
pub use iterate::{forward_iterate, tilted_forward, IfsPath, TiltPolicy, TiltedSampler};
pub use kernel::{mc_cramer_transform, AffineKernel, CellLaw, CoefficientAtom, MmlifsSpec};
pub use signs::{sign_chain_stats, SignChainStats};
pub use stationary::{sample_stationary, StationarySample, StationarySampler};
