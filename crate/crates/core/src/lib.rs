//! Price dynamics driven by fuzzy-rule trader groups.
//!
//! Each trader group turns technical indicators of the price history into a
//! signed excess demand through a small fuzzy system; the log-price moves by
//! the strength-weighted sum of those demands, optionally plus noise.
//!
//! ```
//! use fuzzmarket::io::figure_preset;
//!
//! let file = figure_preset("fig3").unwrap();
//! let scenario = file.resolve(None).unwrap();
//! let record = fuzzmarket::simulate(&scenario).unwrap();
//! assert_eq!(record.rows.len(), 500);
//! ```

pub mod dsl;
pub mod dynamics;
pub mod error;
pub mod fuzzy;
pub mod indicators;
pub mod io;
pub mod rules;

pub use dsl::{parse_rule_block, parse_rule_file, CompiledBlock, Diagnostic, RuleBlock};
pub use dynamics::{
    bootstrap_random_walk, price_step, simulate, DemandSource, Regime, Scenario, Simulation,
    SimulationRecord, StrengthSchedule, TraderGroup,
};
pub use error::{Error, Result};
pub use fuzzy::{center_average, Action, ConsequentCenters, Firing, Sign, Term, TermFamily};
pub use indicators::{
    BandMode, Feature, FeatureParams, FeatureVector, IndicatorCache, PriceSeries,
};
pub use rules::{BuiltinGroup, ExcessDemand, ManipulatorSchedule, Phase, Portfolio, RuleSet};
