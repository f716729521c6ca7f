//! Reading influence-function values from CSV.

use std::io::Read;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Influence values with one column per estimate and one row per subject.
/// The header row gives the estimate names.
pub fn read_influence_csv<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        return Err(Error::Parse("influence CSV has no columns".into()));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != names.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, found {}",
                line + 1,
                names.len(),
                rec.len()
            )));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {field:?}", line + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    Ok((
        names.clone(),
        DMatrix::from_row_slice(rows, names.len(), &values),
    ))
}
