use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fuzzmarket::io::{
    emit_plot_data, figure_preset, load_scenario, read_record_csv, record_diagnostics, summarize,
    write_record_csv, ScenarioFile,
};
use fuzzmarket::{parse_rule_file, simulate, Error, Regime};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "fuzzmarket",
    version,
    about = "Fuzzy-rule trader groups driving a log-price model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file and write the per-step CSV.
    Run {
        scenario: PathBuf,
        /// Output CSV (default: the scenario's file stem with .csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's seed.
        #[arg(long, env = "FUZZMARKET_SEED", conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Run seeds A through B (inclusive) concurrently, one CSV per seed.
        #[arg(long, value_name = "A..B", value_parser = parse_range)]
        seeds: Option<(u64, u64)>,
        /// Jump threshold for the summary (default 4σ).
        #[arg(long)]
        jump_threshold: Option<f64>,
    },
    /// Print the scenario JSON for a named reference preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Return statistics from a run CSV.
    Stats {
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = RegimeArg::All)]
        regime: RegimeArg,
        /// Default: 4σ of the scenario saved next to the CSV.
        #[arg(long)]
        jump_threshold: Option<f64>,
        #[arg(long, default_value_t = 1)]
        lag: usize,
    },
    /// Write `t price` text and an SVG chart for a run CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        /// Plot text file (default: the CSV path with .dat).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Parse a rule file and report diagnostics.
    Check { rules: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    All,
    Bootstrap,
    Model,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn sidecar(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".scenario.json");
    PathBuf::from(s)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// One run: CSV, scenario echo, summary. A numerical failure still writes
/// the rows produced so far.
fn run_one(
    file: &ScenarioFile,
    base: Option<&Path>,
    out: &Path,
    threshold: Option<f64>,
) -> Result<String, Failure> {
    let scenario = file.resolve(base)?;
    let echo = file.resolved_echo(base)?;
    std::fs::write(sidecar(out), echo.to_json() + "\n")
        .map_err(|e| fail(format!("{}: {e}", sidecar(out).display())))?;
    let threshold = threshold.unwrap_or(4.0 * scenario.sigma);
    match simulate(&scenario) {
        Ok(rec) => {
            write_record_csv(&rec, out)?;
            Ok(to_json(&summarize(&rec, scenario.seed, threshold)))
        }
        Err(Error::Numerical {
            t,
            message,
            partial,
        }) => {
            write_record_csv(&partial, out)?;
            Err(Failure {
                code: 3,
                message: format!(
                    "numerical failure at t={t}: {message}; {} rows written to {}",
                    partial.rows.len(),
                    out.display()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn seeded_path(out: &Path, seed: u64) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("run".into(), |s| s.to_string_lossy());
    let ext = out
        .extension()
        .map_or("csv".into(), |s| s.to_string_lossy());
    out.with_file_name(format!("{stem}-seed{seed}.{ext}"))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            seeds,
            jump_threshold,
        } => {
            let (mut file, _) = load_scenario(&scenario)?;
            let base = scenario.parent();
            let out = out.unwrap_or_else(|| {
                let stem = scenario
                    .file_stem()
                    .map_or("run".into(), |s| s.to_string_lossy());
                PathBuf::from(format!("{stem}.csv"))
            });
            match seeds {
                None => {
                    if let Some(s) = seed {
                        file.seed = s;
                    }
                    println!("{}", run_one(&file, base, &out, jump_threshold)?);
                }
                Some((a, b)) => {
                    let results: Vec<(u64, Result<String, Failure>)> = (a..=b)
                        .into_par_iter()
                        .map(|s| {
                            let mut f = file.clone();
                            f.seed = s;
                            (s, run_one(&f, base, &seeded_path(&out, s), jump_threshold))
                        })
                        .collect();
                    let mut worst = 0;
                    let mut summaries = Vec::new();
                    for (s, r) in results {
                        match r {
                            Ok(json) => summaries.push(json),
                            Err(f) => {
                                eprintln!("seed {s}: {}", f.message);
                                worst = worst.max(f.code);
                            }
                        }
                    }
                    println!("[{}]", summaries.join(",\n"));
                    if worst > 0 {
                        return Err(Failure {
                            code: worst,
                            message: "some seeds failed".into(),
                        });
                    }
                }
            }
        }
        Command::Preset { name, out } => {
            let json = figure_preset(&name)?.to_json() + "\n";
            match out {
                Some(p) => {
                    std::fs::write(&p, json).map_err(|e| fail(format!("{}: {e}", p.display())))?
                }
                None => print!("{json}"),
            }
        }
        Command::Stats {
            csv,
            regime,
            jump_threshold,
            lag,
        } => {
            let rec = read_record_csv(&csv)?;
            let threshold = match jump_threshold {
                Some(x) => x,
                None => {
                    let side = sidecar(&csv);
                    let text = std::fs::read_to_string(&side).map_err(|_| {
                        fail(format!(
                            "no --jump-threshold given and no scenario file {} to derive 4σ from",
                            side.display()
                        ))
                    })?;
                    4.0 * ScenarioFile::from_json(&text)
                        .map_err(|e| fail(format!("{}: {e}", side.display())))?
                        .sigma
                }
            };
            let regime = match regime {
                RegimeArg::All => None,
                RegimeArg::Bootstrap => Some(Regime::Bootstrap),
                RegimeArg::Model => Some(Regime::Model),
            };
            let d = record_diagnostics(&rec, regime, threshold, lag)?;
            println!("{}", to_json(&d));
        }
        Command::Plot { csv, svg, data } => {
            let rec = read_record_csv(&csv)?;
            let data = data.unwrap_or_else(|| csv.with_extension("dat"));
            emit_plot_data(&rec, &data, &svg)?;
        }
        Command::Check { rules } => {
            let text = std::fs::read_to_string(&rules)
                .map_err(|e| fail(format!("{}: {e}", rules.display())))?;
            match parse_rule_file(&text) {
                Ok(blocks) => {
                    for b in blocks {
                        let features: Vec<String> =
                            b.features().iter().map(|f| f.to_string()).collect();
                        println!(
                            "{}: group {} ok, {} rules, features {}",
                            rules.display(),
                            b.name,
                            b.rules.len(),
                            features.join(",")
                        );
                    }
                }
                Err(diags) => {
                    for d in &diags {
                        eprintln!("{}:{d}", rules.display());
                    }
                    return Err(fail(format!("{} diagnostics", diags.len())));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
