//! Configuration, deterministic seeding and report persistence.

pub mod config;
pub mod report;

pub use config::{load_config, ExperimentConfig, GridConfig, WeightsConfig, DEFAULT_TOLERANCES, ENV_OUTPUT_DIR, ENV_THREADS};
pub use report::{load_report, persist_report, Metadata, Report, Table, REPORT_VERSION};

/// Seed for the named stream `label` derived from the experiment seed, so
/// that independent probe sets stay reproducible when others change.
pub fn derived_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
