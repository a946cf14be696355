use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Nonnegative trading volume; `volumes[t]` is traded between `t-1` and `t`.
    Volume,
    /// Positive market index level.
    Index,
}

impl SeriesKind {
    pub fn default_column(self) -> &'static str {
        match self {
            SeriesKind::Volume => "volume",
            SeriesKind::Index => "index",
        }
    }
}

/// Read one numeric column. Data row `k` (0-based, header excluded) maps to
/// `t = k`; errors cite that row number.
pub fn ingest_csv_series(
    path: &Path,
    column: &str,
    min_len: usize,
    kind: SeriesKind,
) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::file(path, e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::file(path, e.to_string()))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::file(path, format!("no column named \"{column}\"")))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::file(path, format!("row {row}: {e}")))?;
        let cell = rec.get(col).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            Error::file(
                path,
                format!("row {row}, column \"{column}\": not a number: \"{cell}\""),
            )
        })?;
        let ok = match kind {
            SeriesKind::Volume => v.is_finite() && v >= 0.0,
            SeriesKind::Index => v.is_finite() && v > 0.0,
        };
        if !ok {
            let need = match kind {
                SeriesKind::Volume => "nonnegative",
                SeriesKind::Index => "positive",
            };
            return Err(Error::file(
                path,
                format!("row {row}, column \"{column}\": value must be {need}, got {cell}"),
            ));
        }
        out.push(v);
    }
    if out.len() < min_len {
        return Err(Error::file(
            path,
            format!("{} rows, but the horizon needs {min_len}", out.len()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(rows: usize, bad: Option<(usize, &str)>) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "t,volume").unwrap();
        for t in 0..rows {
            let v = match bad {
                Some((r, s)) if r == t => s.to_string(),
                _ => format!("{}", 100 + t),
            };
            writeln!(f, "{t},{v}").unwrap();
        }
        f
    }

    #[test]
    fn accepts_full_length() {
        let f = file(500, None);
        let v = ingest_csv_series(f.path(), "volume", 500, SeriesKind::Volume).unwrap();
        assert_eq!(v.len(), 500);
        assert_eq!(v[0], 100.0);
    }

    #[test]
    fn short_file_rejected() {
        let f = file(400, None);
        let e = ingest_csv_series(f.path(), "volume", 500, SeriesKind::Volume).unwrap_err();
        assert!(e.to_string().contains("400 rows"), "{e}");
    }

    #[test]
    fn negative_volume_cites_row() {
        let f = file(500, Some((7, "-1")));
        let e = ingest_csv_series(f.path(), "volume", 500, SeriesKind::Volume).unwrap_err();
        assert!(e.to_string().contains("row 7"), "{e}");
    }

    #[test]
    fn non_numeric_cites_row_and_column() {
        let f = file(20, Some((3, "abc")));
        let e = ingest_csv_series(f.path(), "volume", 10, SeriesKind::Volume)
            .unwrap_err()
            .to_string();
        assert!(
            e.contains("row 3") && e.contains("volume") && e.contains("abc"),
            "{e}"
        );
        let f = file(20, None);
        assert!(ingest_csv_series(f.path(), "close", 10, SeriesKind::Index).is_err());
    }
}
