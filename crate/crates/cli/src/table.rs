//! Plot-ready tabular output: curve, stability and moment tables with CSV
//! and JSON encodings.
//!
//! Numeric cells use Rust's shortest round-trip decimal rendering, so a
//! parsed value is bit-identical to the computed one and identical runs
//! produce identical bytes. Rows are sorted by `(series, iteration)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Output encoding for experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// `10·log₁₀(x)`; non-positive arguments take the sentinel path of the
/// table writers.
pub fn to_db(x: f64) -> Result<f64, CliError> {
    if x > 0.0 {
        Ok(10.0 * x.log10())
    } else {
        Err(CliError::NonPositiveDb { value: x })
    }
}

/// dB cell of a curve row: a value, the sentinel for non-positive linear
/// values, or not-applicable (for rows whose value already is a deviation
/// in dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DbCell {
    Value(f64),
    Sentinel,
    NotApplicable,
}

impl DbCell {
    pub fn from_linear(x: f64) -> Self {
        match to_db(x) {
            Ok(db) => DbCell::Value(db),
            Err(_) => DbCell::Sentinel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub series: String,
    pub value: f64,
    pub value_db: DbCell,
}

/// Column-ordered curve records. `has_db` controls whether the `value_db`
/// column is emitted at all.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub has_db: bool,
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn new(has_db: bool) -> Self {
        Self { has_db, rows: Vec::new() }
    }

    /// Append one series sampled every `stride` iterations (iteration 0 is
    /// always present).
    pub fn push_series<'a, I>(&mut self, series: &str, values: I, stride: usize, with_db: bool)
    where
        I: IntoIterator<Item = &'a f64>,
    {
        for (n, &value) in values.into_iter().enumerate() {
            if n % stride != 0 {
                continue;
            }
            let value_db = if self.has_db {
                if with_db {
                    DbCell::from_linear(value)
                } else {
                    DbCell::NotApplicable
                }
            } else {
                DbCell::NotApplicable
            };
            self.rows.push(CurveRow {
                iteration: n,
                series: series.to_string(),
                value,
                value_db,
            });
        }
    }

    fn sorted_rows(&self) -> Vec<&CurveRow> {
        let mut rows: Vec<&CurveRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.series.cmp(&b.series).then(a.iteration.cmp(&b.iteration)));
        rows
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if self.has_db {
            writeln!(w, "iteration,series,value,value_db")?;
        } else {
            writeln!(w, "iteration,series,value")?;
        }
        for row in self.sorted_rows() {
            if self.has_db {
                let db = match row.value_db {
                    DbCell::Value(x) => format_float(x),
                    DbCell::Sentinel => "-inf".to_string(),
                    DbCell::NotApplicable => String::new(),
                };
                writeln!(w, "{},{},{},{}", row.iteration, row.series, format_float(row.value), db)?;
            } else {
                writeln!(w, "{},{},{}", row.iteration, row.series, format_float(row.value))?;
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut items = Vec::with_capacity(self.rows.len());
        for row in self.sorted_rows() {
            let mut obj = serde_json::Map::new();
            obj.insert("iteration".into(), row.iteration.into());
            obj.insert("series".into(), row.series.clone().into());
            obj.insert("value".into(), json_number(row.value));
            if self.has_db {
                match row.value_db {
                    DbCell::Value(x) => {
                        obj.insert("value_db".into(), json_number(x));
                    }
                    DbCell::Sentinel => {
                        obj.insert("value_db".into(), serde_json::Value::Null);
                    }
                    DbCell::NotApplicable => {}
                }
            }
            items.push(serde_json::Value::Object(obj));
        }
        serde_json::to_writer_pretty(&mut w, &items)?;
        writeln!(w)?;
        Ok(())
    }
}

/// One classified stability cell, flattened for output.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub mu: f64,
    pub d: f64,
    pub scaling: Option<f64>,
    pub class: &'static str,
    pub divergence_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
}

impl StabilityTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mu,d,k,class,divergence_fraction")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                format_float(row.mu),
                format_float(row.d),
                row.scaling.map(format_float).unwrap_or_default(),
                row.class,
                row.divergence_fraction.map(format_float).unwrap_or_default(),
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut items = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("mu".into(), json_number(row.mu));
            obj.insert("d".into(), json_number(row.d));
            obj.insert(
                "k".into(),
                row.scaling.map(json_number).unwrap_or(serde_json::Value::Null),
            );
            obj.insert("class".into(), row.class.into());
            obj.insert(
                "divergence_fraction".into(),
                row.divergence_fraction.map(json_number).unwrap_or(serde_json::Value::Null),
            );
            items.push(serde_json::Value::Object(obj));
        }
        serde_json::to_writer_pretty(&mut w, &items)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Named scalar quantities (noise moments, SNR).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantityTable {
    pub rows: Vec<(&'static str, f64)>,
}

impl QuantityTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "quantity,value")?;
        for (name, value) in &self.rows {
            writeln!(w, "{},{}", name, format_float(*value))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut items = Vec::with_capacity(self.rows.len());
        for (name, value) in &self.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("quantity".into(), (*name).into());
            obj.insert("value".into(), json_number(*value));
            items.push(serde_json::Value::Object(obj));
        }
        serde_json::to_writer_pretty(&mut w, &items)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Shortest decimal rendering that round-trips to the same bits. Non-finite
/// values render as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// JSON number; non-finite values map to null.
fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn to_db_examples() {
        assert_eq!(to_db(1.0).unwrap(), 0.0);
        assert!((to_db(0.01).unwrap() + 20.0).abs() < 1e-12);
        let quoted = to_db(25.0 / 3.0).unwrap();
        assert!((quoted - 9.2082).abs() < 1e-3, "got {quoted}");
        assert!(to_db(0.0).is_err());
        assert!(to_db(-1.0).is_err());
    }

    #[test]
    fn csv_rows_are_sorted_and_sentinel_marked() {
        let mut table = CurveTable::new(true);
        table.push_series("b_series", [1.0, 0.0].iter(), 1, true);
        table.push_series("a_series", [0.5, 0.25].iter(), 1, true);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,series,value,value_db");
        assert!(lines[1].starts_with("0,a_series,"));
        assert!(lines[3].starts_with("0,b_series,"));
        assert!(lines[4].ends_with(",-inf"), "zero value must take the sentinel: {}", lines[4]);
    }

    #[test]
    fn stride_keeps_every_kth_iteration() {
        let mut table = CurveTable::new(false);
        let values: Vec<f64> = (0..10).map(|i| i as f64).collect();
        table.push_series("s", values.iter(), 4, false);
        let iters: Vec<usize> = table.rows.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 4, 8]);
    }

    #[test]
    fn json_and_csv_hold_the_same_values() {
        let mut table = CurveTable::new(true);
        table.push_series("x", [2.0, 1.0, 0.5].iter(), 1, true);
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let mut json = Vec::new();
        table.write_json(&mut json).unwrap();
        let parsed: Vec<serde_json::Value> = serde_json::from_slice(&json).unwrap();
        let csv_text = String::from_utf8(csv).unwrap();
        for (line, obj) in csv_text.lines().skip(1).zip(&parsed) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0].parse::<u64>().unwrap(), obj["iteration"].as_u64().unwrap());
            assert_eq!(fields[1], obj["series"].as_str().unwrap());
            assert_eq!(fields[2].parse::<f64>().unwrap(), obj["value"].as_f64().unwrap());
            assert_eq!(fields[3].parse::<f64>().unwrap(), obj["value_db"].as_f64().unwrap());
        }
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [1.0, 0.1, 2e-5, 25.0 / 3.0, 1.0 / 7.0, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }
}
