//! Feature table persistence: one row per patient, `id` first, then named
//! feature columns.

use std::path::Path;

use radiomics_core::linalg::Matrix;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    /// ids.len() x columns.len()
    pub values: Matrix,
}

impl FeatureTable {
    pub fn row_for(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|r| self.values.row(r))
    }

    /// Sub-table with the given column indices, same row order.
    pub fn select_columns(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: self.ids.clone(),
            columns: idx.iter().map(|&c| self.columns[c].clone()).collect(),
            values: self.values.select_cols(idx),
        }
    }

    /// Sub-table with rows reordered to the requested ids.
    pub fn select_ids(&self, ids: &[&str]) -> Result<FeatureTable> {
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            let r = self
                .ids
                .iter()
                .position(|i| i == id)
                .ok_or_else(|| CliError::Validation(format!("feature table: missing id {id:?}")))?;
            rows.push(r);
        }
        Ok(FeatureTable {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(&rows),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        let mut header = vec!["id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (r, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            // full round-trip precision
            rec.extend(self.values.row(r).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureTable> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| CliError::Validation(format!("feature table {}: {e}", path.display())))?;
        let header = reader.headers()?.clone();
        if header.get(0) != Some("id") {
            return Err(CliError::Validation("feature table: first column must be id".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            if rec.len() != columns.len() + 1 {
                return Err(CliError::Validation("feature table: ragged row".into()));
            }
            ids.push(rec[0].to_string());
            let row: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Validation(format!("feature table: bad value {s:?}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::Validation("feature table: no rows".into()));
        }
        Ok(FeatureTable { ids, columns, values: Matrix::from_rows(&rows) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let t = FeatureTable {
            ids: vec!["a".into(), "b".into()],
            columns: vec!["f1".into(), "f2".into()],
            values: Matrix::from_rows(&[
                vec![1.0 / 3.0, f64::MIN_POSITIVE],
                vec![-2.5e-17, 1e300],
            ]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.save(&path).unwrap();
        let back = FeatureTable::load(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn select_ids_reorders_rows() {
        let t = FeatureTable {
            ids: vec!["a".into(), "b".into()],
            columns: vec!["f".into()],
            values: Matrix::from_rows(&[vec![1.0], vec![2.0]]),
        };
        let s = t.select_ids(&["b", "a"]).unwrap();
        assert_eq!(s.values.row(0), &[2.0]);
        assert!(t.select_ids(&["zzz"]).is_err());
    }
}
