//! Batch front-end for the `hybrid-ba` simulator: scenario files, training
//! of the switching-power look-up table, sweeps, and single allocations.

pub mod commands;
pub mod io;
pub mod scenario;

pub use commands::{cmd_allocate, cmd_dump_channel, cmd_sweep, cmd_train, AllocationReport};
pub use scenario::{Scenario, OUT_DIR_ENV};

/// Short machine-readable category for an error chain.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hybrid_ba::Error>() {
            return match e {
                hybrid_ba::Error::InvalidConfig(_) => "invalid_config",
                hybrid_ba::Error::DimensionMismatch { .. } => "dimension_mismatch",
                hybrid_ba::Error::InvalidArgument(_) => "invalid_argument",
                hybrid_ba::Error::InfeasibleBudget(_) => "infeasible_budget",
                hybrid_ba::Error::NoActiveChains => "no_active_chains",
                hybrid_ba::Error::NotConverged(_) => "not_converged",
                hybrid_ba::Error::RankDeficient(_) => "rank_deficient",
                hybrid_ba::Error::Parse { .. } => "parse",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "scenario";
        }
    }
    "error"
}

/// The whole error chain on one line: `error[<kind>]: <outer>: <inner>...`.
pub fn error_line(err: &anyhow::Error) -> String {
    let msg = err
        .chain()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(": ");
    let flat: Vec<&str> = msg.split_whitespace().collect();
    format!("error[{}]: {}", error_kind(err), flat.join(" "))
}
