//! Experiment drivers producing [`StudyReport`]s.

pub mod convergence;
pub mod probes;
pub mod report;
pub mod robin;

pub use convergence::{run_blowup_study, run_convergence_study, run_noise_study, validate_eps_list, Method};
pub use probes::{run_forward_study, run_interp_probe, run_ops_check, run_stability_probe, ProbeMode};
pub use report::{fit_log_rate, ErrorColumn, LogFit, StudyKind, StudyReport, StudyRow, CSV_HEADER};
pub use robin::{run_robin_study, RobinConfig};
