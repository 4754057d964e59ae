//! Experiment orchestration: named experiments mapping onto the measured
//! claims, configuration ingestion, deterministic reruns, and result
//! emission.

pub mod config;
pub mod experiments;
pub mod manifest;

pub use config::{key_documentation, ExperimentConfig, CATALOG};
pub use experiments::{read_series_csv, run_catalog, run_experiment};
pub use manifest::{load_manifest, verify_manifest, CheckRecord, RunManifest};
