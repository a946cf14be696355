use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::dynamics::SimulationRecord;
use crate::error::{Error, Result};
use crate::io::csv_out::format_number;

const W: f64 = 800.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn ensure_nonempty(record: &SimulationRecord) -> Result<()> {
    if record.rows.is_empty() {
        return Err(Error::InvalidInput("record has no rows to plot".into()));
    }
    Ok(())
}

/// `t price` lines, whitespace separated, no header.
pub fn write_plot_text<W: Write>(record: &SimulationRecord, mut out: W) -> Result<()> {
    ensure_nonempty(record)?;
    for r in &record.rows {
        writeln!(out, "{} {}", r.t, format_number(r.price))?;
    }
    out.flush()?;
    Ok(())
}

/// Price line chart with a dashed vertical marker where the model regime starts.
pub fn render_svg(record: &SimulationRecord) -> Result<String> {
    ensure_nonempty(record)?;
    let t_max = record.rows.last().map_or(1, |r| r.t).max(1) as f64;
    let (lo, hi) = record
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.price), hi.max(r.price))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |t: f64| PAD + t / t_max * (W - 2.0 * PAD);
    let y = |p: f64| H - PAD - (p - lo) / span * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD}V{b}H{r}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    for (p, anchor) in [(lo, H - PAD), (hi, PAD)] {
        let _ = writeln!(
            s,
            r#"<text x="{tx}" y="{anchor:.2}" font-size="11" text-anchor="end">{}</text>"#,
            format_number((p * 1e4).round() / 1e4),
            tx = PAD - 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">t = {}</text>"#,
        W - PAD,
        H - PAD + 16.0,
        t_max
    );
    let b = record.bootstrap_len;
    if b > 0 && (b as f64) <= t_max {
        let _ = writeln!(
            s,
            r#"<line class="regime-boundary" data-t="{b}" x1="{bx:.2}" y1="{PAD}" x2="{bx:.2}" y2="{y2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            bx = x(b as f64),
            y2 = H - PAD
        );
    }
    let mut d = String::new();
    for (i, r) in record.rows.iter().enumerate() {
        let _ = write!(
            d,
            "{}{:.2} {:.2}",
            if i == 0 { "M" } else { "L" },
            x(r.t as f64),
            y(r.price)
        );
    }
    let _ = writeln!(
        s,
        r#"<path class="price" d="{d}" fill="none" stroke="steelblue"/>"#
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot_data(record: &SimulationRecord, data_path: &Path, svg_path: &Path) -> Result<()> {
    let svg = render_svg(record)?;
    let f = std::fs::File::create(data_path).map_err(|e| Error::file(data_path, e.to_string()))?;
    write_plot_text(record, std::io::BufWriter::new(f))
        .map_err(|e| Error::file(data_path, e.to_string()))?;
    std::fs::write(svg_path, svg).map_err(|e| Error::file(svg_path, e.to_string()))
}
