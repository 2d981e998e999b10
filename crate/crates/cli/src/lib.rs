//! Configuration-driven front end: runs single points and parameter sweeps
//! through the simulator, the analytic evaluator or the exact oracle, and
//! writes CSV, JSON or SVG.

pub mod app;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod threshold;

pub use app::{execute, Command};
pub use config::ConfigMap;
pub use error::CliError;
pub use experiment::{run_config, ResultRow, SweepSpec, SweptParam};
pub use output::CSV_HEADER;
pub use plot::{emit_plot, Axes, XField};
pub use threshold::find_threshold;
