//! Configuration files, sweep CSVs and comparison against measured points.

pub mod config;
mod overlay;
mod sweep;

pub use config::{load_config, parse_config, ConfigError, LoadedConfig, RunDirectives, Violation};
pub use overlay::{best_offset, residuals, residuals_for_tag, OverlayDataset, OverlayRow, ResidualReport};
pub use sweep::{SweepResult, SweepRow};
