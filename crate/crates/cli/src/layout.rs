//! Where each stage reads and writes, date selection and small file helpers.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Inclusive `FROM:TO` date filter; either side may be left empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DateRange {
    pub from: Option<String>,
    pub to: Option<String>,
}

fn parse_date(s: &str) -> Result<String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.format("%Y-%m-%d").to_string())
        .map_err(|e| CliError::Config(format!("--dates: '{s}' is not YYYY-MM-DD ({e})")))
}

impl DateRange {
    pub fn parse(text: &str) -> Result<Self> {
        let Some((from, to)) = text.split_once(':') else {
            return Err(CliError::Config(format!("--dates expects FROM:TO, got '{text}'")));
        };
        let side = |s: &str| if s.trim().is_empty() { Ok(None) } else { parse_date(s.trim()).map(Some) };
        let r = Self { from: side(from)?, to: side(to)? };
        if let (Some(a), Some(b)) = (&r.from, &r.to) {
            if a > b {
                return Err(CliError::Config(format!("--dates: {a} is after {b}")));
            }
        }
        Ok(r)
    }

    pub fn contains(&self, date: &str) -> bool {
        self.from.as_deref().is_none_or(|f| date >= f) && self.to.as_deref().is_none_or(|t| date <= t)
    }
}

/// Input dataset root and stage output root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub data: PathBuf,
    pub work: PathBuf,
}

impl Layout {
    pub fn date_dir(&self, date: &str) -> PathBuf {
        self.data.join(date)
    }

    pub fn euv(&self, date: &str) -> PathBuf {
        self.date_dir(date).join("euv.csv")
    }

    pub fn mag(&self, date: &str) -> PathBuf {
        self.date_dir(date).join("mag.csv")
    }

    pub fn consensus(&self, date: &str) -> PathBuf {
        self.date_dir(date).join("consensus.csv")
    }

    pub fn external(&self, date: &str, name: &str) -> PathBuf {
        self.date_dir(date).join(format!("{name}.csv"))
    }

    pub fn truth(&self, date: &str) -> PathBuf {
        self.date_dir(date).join("truth.json")
    }

    pub fn model(&self, date: &str, index: usize) -> PathBuf {
        self.date_dir(date).join(format!("{}.csv", model_name(index)))
    }

    /// Model map files of one date as `(name, path)`, sorted by name.
    pub fn models(&self, date: &str) -> Result<Vec<(String, PathBuf)>> {
        let dir = self.date_dir(date);
        let entries = std::fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut out = Vec::new();
        for e in entries {
            let path = e.map_err(|e| CliError::io(&dir, e))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if stem.starts_with("model_") && path.extension().is_some_and(|x| x == "csv") {
                out.push((stem.to_string(), path.clone()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Dated subdirectories of the dataset inside `range`, ascending.
    pub fn dates(&self, range: &DateRange) -> Result<Vec<String>> {
        if !self.data.is_dir() {
            return Err(CliError::missing(&self.data, "dataset directory"));
        }
        let entries = std::fs::read_dir(&self.data).map_err(|e| CliError::io(&self.data, e))?;
        let mut dates = Vec::new();
        for e in entries {
            let e = e.map_err(|e| CliError::io(&self.data, e))?;
            let name = e.file_name().to_string_lossy().into_owned();
            if e.path().is_dir() && NaiveDate::parse_from_str(&name, "%Y-%m-%d").is_ok() && range.contains(&name) {
                dates.push(name);
            }
        }
        dates.sort();
        if dates.is_empty() {
            return Err(CliError::MissingInput(format!(
                "no dated inputs under {} in the selected range",
                self.data.display()
            )));
        }
        Ok(dates)
    }

    pub fn segment_dir(&self, date: &str) -> PathBuf {
        self.work.join("segment").join(date)
    }

    pub fn segment_result(&self, date: &str) -> PathBuf {
        self.segment_dir(date).join("result.csv")
    }

    pub fn segment_init(&self, date: &str) -> PathBuf {
        self.segment_dir(date).join("init.csv")
    }

    pub fn segment_metrics(&self) -> PathBuf {
        self.work.join("segment").join("metrics.csv")
    }

    pub fn match_dir(&self, date: &str) -> PathBuf {
        self.work.join("match").join(date)
    }

    pub fn match_results(&self, date: &str) -> PathBuf {
        self.match_dir(date).join("results.json")
    }

    pub fn match_features(&self) -> PathBuf {
        self.work.join("match").join("features.csv")
    }

    pub fn match_anchors(&self) -> PathBuf {
        self.work.join("match").join("anchors.csv")
    }

    pub fn classify(&self, file: &str) -> PathBuf {
        self.work.join("classify").join(file)
    }

    pub fn selector(&self, source: &str) -> PathBuf {
        self.classify(&format!("selector_{source}.json"))
    }

    pub fn tune(&self, file: &str) -> PathBuf {
        self.work.join("tune").join(file)
    }

    pub fn report(&self, file: &str) -> PathBuf {
        self.work.join("report").join(file)
    }
}

pub fn model_name(index: usize) -> String {
    format!("model_{index:02}")
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    coronal_core::maps::io::write_atomic(path, bytes).map_err(CliError::from)
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::missing(path, "file"),
        _ => CliError::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::MissingInput(format!("malformed {}: {e}", path.display())))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(format!("csv encoding for {}: {e}", path.display())))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv encoding for {}: {e}", path.display())))?;
    write_bytes(path, &bytes)
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    if !path.exists() {
        return Err(CliError::missing(path, "table"));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(|e| CliError::MissingInput(format!("malformed {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn date_ranges() {
        let r = DateRange::parse("2010-07-02:2010-07-04").unwrap();
        assert!(!r.contains("2010-07-01") && r.contains("2010-07-02") && r.contains("2010-07-04"));
        assert!(!r.contains("2010-07-05"));
        let open = DateRange::parse(":2010-07-02").unwrap();
        assert!(open.contains("1999-01-01") && !open.contains("2010-07-03"));
        for bad in ["2010-07-02", "2010-13-01:", "2010-07-05:2010-07-01"] {
            assert_eq!(DateRange::parse(bad).unwrap_err().exit_code(), 2, "{bad}");
        }
    }
}
