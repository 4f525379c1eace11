//! Sweeps, limit extrapolation and the named experiments.

pub mod poincare;
pub mod recovery;
pub mod scan;
pub mod sweep;

pub use poincare::{default_ball, max_constant, oscillation_integral, poincare_study, PoincareReport};
pub use recovery::{gamma_recovery_experiment, lp_distance, RecoveryReport, RecoveryRow};
pub use scan::{regime_scan, Behaviour, BoundCheck, EndBehaviour, ScanRow};
pub use sweep::{
    fit_limit, geometric_ladder, reference_target, relative_gap, run_sweep, LimitFit, SweepResult, FIT_POINTS,
    LADDER_RATIO,
};
