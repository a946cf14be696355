use serde::Serialize;

use crate::dynamics::{Regime, SimulationRecord};
use crate::error::{Error, Result};

pub const MIN_RETURNS: usize = 10;

/// Return statistics over one slice of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub returns: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    pub jump_threshold: f64,
    pub jump_count: usize,
    pub lag: usize,
    /// Reported as 0 when undefined (zero variance or lag too long).
    pub autocorrelation: f64,
    pub autocorrelation_defined: bool,
    /// Bias-adjusted sample excess kurtosis; 0 when undefined.
    pub excess_kurtosis: f64,
    pub kurtosis_defined: bool,
}

pub fn diagnostics(returns: &[f64], jump_threshold: f64, lag: usize) -> Result<Diagnostics> {
    let n = returns.len();
    if n < MIN_RETURNS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_RETURNS} returns, slice has {n}"
        )));
    }
    let nf = n as f64;
    let mean = returns.iter().sum::<f64>() / nf;
    let dev: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let m2 = dev.iter().map(|d| d * d).sum::<f64>() / nf;
    let m4 = dev.iter().map(|d| d.powi(4)).sum::<f64>() / nf;
    let std = (m2 * nf / (nf - 1.0)).sqrt();
    let jump_count = returns.iter().filter(|r| r.abs() > jump_threshold).count();

    // Guard against variance that is only rounding noise around a constant.
    let scale = mean.abs().max(f64::MIN_POSITIVE);
    let has_variance = m2 > 0.0 && m2.sqrt() > 1e-14 * scale;

    let (autocorrelation, autocorrelation_defined) = if has_variance && lag >= 1 && lag < n {
        let num: f64 = (0..n - lag).map(|t| dev[t] * dev[t + lag]).sum();
        (num / (m2 * nf), true)
    } else {
        (0.0, false)
    };
    let (excess_kurtosis, kurtosis_defined) = if has_variance {
        let g2 = m4 / (m2 * m2) - 3.0;
        let adj = ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0));
        (adj, true)
    } else {
        (0.0, false)
    };
    Ok(Diagnostics {
        returns: n,
        mean,
        std,
        jump_threshold,
        jump_count,
        lag,
        autocorrelation,
        autocorrelation_defined,
        excess_kurtosis,
        kurtosis_defined,
    })
}

pub fn record_diagnostics(
    record: &SimulationRecord,
    regime: Option<Regime>,
    jump_threshold: f64,
    lag: usize,
) -> Result<Diagnostics> {
    diagnostics(&record.returns(regime), jump_threshold, lag)
}

/// What `run` prints: final price and per-regime statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub rows: usize,
    pub final_price: f64,
    pub seed: u64,
    pub bootstrap: Option<Diagnostics>,
    pub model: Option<Diagnostics>,
}

/// Per-regime statistics; a regime with fewer than ten returns is omitted.
pub fn summarize(record: &SimulationRecord, seed: u64, jump_threshold: f64) -> RunSummary {
    let d = |r| record_diagnostics(record, Some(r), jump_threshold, 1).ok();
    RunSummary {
        rows: record.rows.len(),
        final_price: record.final_price().unwrap_or(f64::NAN),
        seed,
        bootstrap: d(Regime::Bootstrap),
        model: d(Regime::Model),
    }
}
