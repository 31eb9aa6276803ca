//! Fixed-step time-domain simulation of the closed loops.

mod integrator;
mod law;
mod models;
mod run;
mod scenario;
mod series;

pub use integrator::{rk4_step, OdeSystem, Rk4};
pub use law::{Reference, StorageKind};
pub use models::{CONVERTER_COLUMNS, SM_COLUMNS};
pub use run::{run_scenario, LyapunovSegment, RunResult, Warning, STORAGE_SLACK};
pub use scenario::{Event, EventAction, NetworkSpec, PlantKind, Scenario};
pub use series::{find, steady_window_stats, window_stats, ColumnStats, TimeSeries};
