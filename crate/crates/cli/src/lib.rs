//! Library behind the `cavity` command: run configuration, sweeps, figure
//! presets, CSV output and plotting.

pub mod config;
pub mod figures;
pub mod oracle_check;
pub mod output;
pub mod plot;
pub mod run;

/// Worker threads for sweeps: `CAVITY_WORKERS` if set, else the available
/// parallelism.
pub fn worker_count() -> usize {
    std::env::var("CAVITY_WORKERS")
        .ok()
        .and_then(|w| w.trim().parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
