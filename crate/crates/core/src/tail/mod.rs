//! Tail estimators, implicit-renewal constants and condition checks.

pub mod conditions;
pub mod estimators;
pub mod goldie;
pub mod report;

pub use conditions::{check_conditions_continuous, check_conditions_discrete, ConditionEntry, ConditionReport, ConditionStatus};
pub use estimators::{empirical_plateau, hill, HillResult, PlateauResult, QuantileWindow};
pub use goldie::{goldie_constant, GoldieConstants};
pub use report::{tail_report, Side, StatePlateau, TailOptions, TailReport, TailRow};
