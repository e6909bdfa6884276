//! Configuration, Monte Carlo experiment orchestration and result emission.
//!
//! Replications run in parallel with seeds derived from `(seed, rung, replication)`;
//! tables are assembled in replication order, so outputs are byte-identical for
//! a given configuration whatever the thread count.

mod checks;
mod config;
mod experiments;
mod output;

pub use checks::{adversarial_pairs, ldp_check, spline_check, CheckReport};
pub use config::{AlphaSchedule, Arms, ExperimentConfig, OutputPaths, Rung, Tolerances};
pub use experiments::{
    oracle_sigma0, replication_seed, run_clt, run_consistency, run_effective_privacy,
    run_polynomial_drift, run_rungs, spline_exactness_gap, ExperimentReport, Gate, Normalization,
    ReplicationRecord, RungRun, RungSummary,
};
pub use output::{write_json, write_records_csv, write_report, write_summary_csv, RECORD_HEADER, SUMMARY_HEADER};
