use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsl::parse_rule_block;
use crate::dynamics::{DemandSource, Scenario, StrengthSchedule, TraderGroup};
use crate::error::{Error, Result};
use crate::fuzzy::{ConsequentCenters, TermFamily};
use crate::indicators::{BandMode, FeatureParams};
use crate::io::ingest::{ingest_csv_series, SeriesKind};
use crate::rules::{BuiltinGroup, ManipulatorSchedule, Portfolio, RuleSet, StopWidths};

/// JSON form of a [`Scenario`]. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub p0: f64,
    pub sigma: f64,
    pub bootstrap_len: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub keep_noise: bool,
    #[serde(default)]
    pub band_mode: BandMode,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_csv: Option<SeriesRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_csv: Option<SeriesRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manipulator: Option<ManipulatorSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<Portfolio>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// `"ed1"` .. `"ed12"` or `"dsl"`.
    pub kind: String,
    /// Column suffix in the output; defaults to the group number or the
    /// rule block's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub strength: StrengthSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl_path: Option<String>,
    /// Inline rule text; takes precedence over `dsl_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl_source: Option<String>,
}

impl GroupSpec {
    pub fn builtin(group: BuiltinGroup, a: f64) -> Self {
        GroupSpec {
            kind: group.to_string(),
            id: None,
            strength: StrengthSpec::Constant(a),
            params: ParamsSpec::default(),
            dsl_path: None,
            dsl_source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrengthSpec {
    Constant(f64),
    Schedule(Vec<(usize, f64)>),
}

impl StrengthSpec {
    fn schedule(&self) -> Result<StrengthSchedule> {
        match self {
            StrengthSpec::Constant(a) => StrengthSchedule::constant(*a),
            StrengthSpec::Schedule(s) => StrengthSchedule::piecewise(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub m: usize,
    pub n: usize,
    pub n_star: usize,
    pub w: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        let f = FeatureParams::default();
        ParamsSpec {
            m: f.m,
            n: f.n,
            n_star: f.n_star,
            w: 0.01,
        }
    }
}

/// An exogenous series: a CSV path, optionally with the column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesRef {
    Path(String),
    Column { path: String, column: String },
}

impl SeriesRef {
    fn parts(&self, kind: SeriesKind) -> (&str, &str) {
        match self {
            SeriesRef::Path(p) => (p, kind.default_column()),
            SeriesRef::Column { path, column } => (path, column),
        }
    }
}

fn resolve_path(base: Option<&Path>, p: &str) -> PathBuf {
    let p = Path::new(p);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Build the runtime scenario. Relative paths resolve against `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<Scenario> {
        let band_mode = self.band_mode;
        let mut groups = Vec::with_capacity(self.groups.len());
        for (i, g) in self.groups.iter().enumerate() {
            let ctx = |e: Error| match e {
                Error::Config(m) => Error::Config(format!("groups[{i}]: {m}")),
                other => other,
            };
            let p = g.params;
            let params = FeatureParams {
                m: p.m,
                n: p.n,
                n_star: p.n_star,
                band_mode,
            };
            let rules =
                RuleSet::new(p.w).map_err(|e| Error::Config(format!("groups[{i}]: {e}")))?;
            let strength = g.strength.schedule().map_err(ctx)?;
            let (source, default_id) = if g.kind == "dsl" {
                let (text, origin) = match (&g.dsl_source, &g.dsl_path) {
                    (Some(src), _) => (src.clone(), PathBuf::from("<inline>")),
                    (None, Some(path)) => {
                        let full = resolve_path(base, path);
                        let text = std::fs::read_to_string(&full)
                            .map_err(|e| Error::file(&full, e.to_string()))?;
                        (text, full)
                    }
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "groups[{i}]: kind \"dsl\" needs dsl_path or dsl_source"
                        )))
                    }
                };
                let block = parse_rule_block(&text).map_err(|diagnostics| Error::Rules {
                    path: origin,
                    diagnostics,
                })?;
                let name = block.name.clone();
                let family = TermFamily::new(p.w).map_err(ctx)?;
                (
                    DemandSource::Rules(block.compile(family, ConsequentCenters::STANDARD)),
                    name,
                )
            } else {
                let b: BuiltinGroup = g.kind.parse().map_err(|_| {
                    Error::Config(format!(
                        "groups[{i}]: unknown kind \"{}\" (expected ed1..ed12 or dsl)",
                        g.kind
                    ))
                })?;
                if g.dsl_path.is_some() || g.dsl_source.is_some() {
                    return Err(Error::Config(format!(
                        "groups[{i}]: dsl_path/dsl_source only apply to kind \"dsl\""
                    )));
                }
                (DemandSource::Builtin(b), b.number().to_string())
            };
            groups.push(TraderGroup {
                id: g.id.clone().unwrap_or(default_id),
                source,
                strength,
                params,
                rules,
                stops: StopWidths::default(),
            });
        }

        let series = |r: &Option<SeriesRef>, kind: SeriesKind| -> Result<Option<Vec<f64>>> {
            r.as_ref()
                .map(|r| {
                    let (path, column) = r.parts(kind);
                    ingest_csv_series(&resolve_path(base, path), column, self.horizon, kind)
                })
                .transpose()
        };

        let scenario = Scenario {
            p0: self.p0,
            sigma: self.sigma,
            bootstrap_len: self.bootstrap_len,
            horizon: self.horizon,
            seed: self.seed,
            keep_noise: self.keep_noise,
            groups,
            volumes: series(&self.volume_csv, SeriesKind::Volume)?,
            index: series(&self.index_csv, SeriesKind::Index)?,
            manipulator: self.manipulator,
            portfolio: self.portfolio,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Self-contained copy: rule text inlined, series paths absolute.
    pub fn resolved_echo(&self, base: Option<&Path>) -> Result<ScenarioFile> {
        let mut out = self.clone();
        for g in &mut out.groups {
            if g.kind == "dsl" && g.dsl_source.is_none() {
                if let Some(path) = &g.dsl_path {
                    let full = resolve_path(base, path);
                    g.dsl_source = Some(
                        std::fs::read_to_string(&full)
                            .map_err(|e| Error::file(&full, e.to_string()))?,
                    );
                }
            }
        }
        let absolutize = |r: &mut Option<SeriesRef>, kind: SeriesKind| {
            if let Some(s) = r {
                let (path, column) = s.parts(kind);
                let full = resolve_path(base, path);
                let full = full.canonicalize().unwrap_or(full);
                *s = SeriesRef::Column {
                    path: full.to_string_lossy().into_owned(),
                    column: column.to_string(),
                };
            }
        };
        absolutize(&mut out.volume_csv, SeriesKind::Volume);
        absolutize(&mut out.index_csv, SeriesKind::Index);
        Ok(out)
    }
}

/// Read, schema-check and resolve a scenario file.
pub fn load_scenario(path: &Path) -> Result<(ScenarioFile, Scenario)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| Error::file(path, e.to_string()))?;
    let scenario = file.resolve(path.parent()).map_err(|e| match e {
        Error::Config(m) => Error::file(path, m),
        other => other,
    })?;
    Ok((file, scenario))
}
