use std::io::Write;
use std::path::Path;

use crate::dynamics::{GroupStep, RecordRow, Regime, SimulationRecord};
use crate::error::{Error, Result};

/// 12 significant digits; scientific notation only for very small or very
/// large magnitudes. Trailing zeros are dropped.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-6..15).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_record<W: Write>(record: &SimulationRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["t", "price", "log_return", "regime", "noise"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for id in &record.group_ids {
        header.extend([
            format!("ed_{id}"),
            format!("a_{id}"),
            format!("active_{id}"),
        ]);
    }
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for row in &record.rows {
        let mut fields = vec![
            row.t.to_string(),
            format_number(row.price),
            format_number(row.log_return),
            row.regime.as_str().to_string(),
            format_number(row.noise),
        ];
        for g in &row.groups {
            fields.push(format_number(g.ed));
            fields.push(format_number(g.strength));
            fields.push(if g.active { "1" } else { "0" }.to_string());
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_record_csv(record: &SimulationRecord, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e.to_string()))?;
    write_record(record, std::io::BufWriter::new(f)).map_err(|e| match e {
        Error::Io(io) => Error::file(path, io.to_string()),
        other => other,
    })
}

/// Parse a CSV written by [`write_record`].
pub fn read_record_csv(path: &Path) -> Result<SimulationRecord> {
    let err = |m: String| Error::file(path, m);
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let fixed = ["t", "price", "log_return", "regime", "noise"];
    if headers.len() < fixed.len() || headers.iter().zip(fixed).any(|(h, f)| h != f) {
        return Err(err(format!(
            "expected header starting with {}",
            fixed.join(",")
        )));
    }
    let extra: Vec<&str> = headers.iter().skip(fixed.len()).collect();
    if !extra.len().is_multiple_of(3) {
        return Err(err("group columns must come in ed/a/active triples".into()));
    }
    let mut group_ids = Vec::new();
    for chunk in extra.chunks(3) {
        let id = chunk[0]
            .strip_prefix("ed_")
            .ok_or_else(|| err(format!("unexpected column {}", chunk[0])))?;
        if chunk[1] != format!("a_{id}") || chunk[2] != format!("active_{id}") {
            return Err(err(format!("malformed columns for group {id}")));
        }
        group_ids.push(id.to_string());
    }

    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(format!("row {line}, column {}: not a number", &headers[i])))
        };
        let regime = match rec.get(3) {
            Some("bootstrap") => Regime::Bootstrap,
            Some("model") => Regime::Model,
            other => return Err(err(format!("row {line}: unknown regime {other:?}"))),
        };
        let groups = (0..group_ids.len())
            .map(|g| {
                let base = fixed.len() + 3 * g;
                Ok(GroupStep {
                    ed: num(base)?,
                    strength: num(base + 1)?,
                    active: num(base + 2)? != 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(RecordRow {
            t: num(0)? as usize,
            price: num(1)?,
            log_return: num(2)?,
            regime,
            noise: num(4)?,
            groups,
        });
    }
    let bootstrap_len = rows
        .iter()
        .find(|r| r.regime == Regime::Model)
        .map_or(rows.len(), |r| r.t);
    Ok(SimulationRecord {
        group_ids,
        bootstrap_len,
        rows,
    })
}
