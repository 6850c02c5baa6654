//! Workload and data generators, the experiment runner and its JSON report,
//! and brute-force reference solvers.

mod experiment;
mod generators;
mod oracles;

pub use experiment::{
    load_data, report_emit, run_experiment, Aggregate, DataSource, ExperimentConfig, Report, SyntheticSpec,
    TrialResult, WorkloadSpec,
};
pub use generators::{gen_synthetic_data, gen_workload, SyntheticKind, SyntheticParams, WorkloadKind, WorkloadParams};
pub use oracles::{oracle_brute_partition, oracle_dense_stage2, BRUTE_FORCE_MAX_N};
