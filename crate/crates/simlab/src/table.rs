use std::io::Write;

use serde::{Deserialize, Serialize};

use sigwald::{Error, Result};

/// A rejection count out of a number of replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: usize,
    pub reps: usize,
}

impl Proportion {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.reps as f64
    }

    pub fn std_error(&self) -> f64 {
        let p = self.fraction();
        (p * (1.0 - p) / self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub key: Vec<String>,
    pub values: Vec<Proportion>,
}

/// Rows keyed by scenario labels, each holding one or more rejection
/// proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResultTable {
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<StudyRow>,
}

impl StudyResultTable {
    pub fn new(key_columns: &[&str], value_columns: &[&str]) -> Self {
        Self {
            key_columns: key_columns.iter().map(|s| s.to_string()).collect(),
            value_columns: value_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, key: Vec<String>, values: Vec<Proportion>) {
        debug_assert_eq!(key.len(), self.key_columns.len());
        debug_assert_eq!(values.len(), self.value_columns.len());
        self.rows.push(StudyRow { key, values });
    }

    /// First row whose leading key fields equal `prefix`.
    pub fn row(&self, prefix: &[&str]) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.key.iter().zip(prefix).all(|(a, b)| a == b) && prefix.len() <= r.key.len())
    }

    pub fn value(&self, prefix: &[&str], column: &str) -> Option<Proportion> {
        let c = self.value_columns.iter().position(|v| v == column)?;
        self.row(prefix).map(|r| r.values[c])
    }

    /// Header: key columns, then `name, name_se` per value column, then `reps`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::Parse(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.key_columns.clone();
        for v in &self.value_columns {
            header.push(v.clone());
            header.push(format!("{v}_se"));
        }
        header.push("reps".into());
        w.write_record(&header).map_err(err)?;
        for row in &self.rows {
            let mut rec = row.key.clone();
            for p in &row.values {
                rec.push(format!("{:.6}", p.fraction()));
                rec.push(format!("{:.6}", p.std_error()));
            }
            rec.push(row.values.first().map_or(0, |p| p.reps).to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
