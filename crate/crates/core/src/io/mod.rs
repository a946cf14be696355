//! Scenario files, CSV output, diagnostics, presets and plot data.

mod csv_out;
mod diagnostics;
mod ingest;
mod plot;
mod presets;
mod scenario;

pub use csv_out::{format_number, read_record_csv, write_record, write_record_csv};
pub use diagnostics::{diagnostics, record_diagnostics, summarize, Diagnostics, RunSummary};
pub use ingest::{ingest_csv_series, SeriesKind};
pub use plot::{emit_plot_data, render_svg, write_plot_text};
pub use presets::{figure_preset, PRESET_NAMES};
pub use scenario::{load_scenario, GroupSpec, ParamsSpec, ScenarioFile, SeriesRef, StrengthSpec};
