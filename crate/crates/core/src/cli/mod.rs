//! Sweep configuration, orchestration and output for the `nbofdma` binary.

pub mod check;
pub mod config;
pub mod emit;
pub mod metrics;
pub mod report;
pub mod sweep;

pub use config::{parse_config, Axis, Series, SeriesParam, SweepPoint, SweepSpec};
pub use emit::{emit, Format};
pub use metrics::{Metric, MetricRegistry, PointContext};
pub use sweep::{run_sweep, SweepResultRow, SweepTable};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const NUMERICAL: u8 = 2;
    pub const IO: u8 = 3;
}
