//! CSV input/output with a JSON-declared schema.
//!
//! The schema maps column names to roles and names the missing-value token:
//!
//! ```json
//! {
//!   "columns": {
//!     "x1": "covariate_cont",
//!     "x2": "covariate_cont",
//!     "z": "exposure",
//!     "r": "post_exposure",
//!     "y": "outcome"
//!   },
//!   "na_token": "NA"
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnRole, ObservedDataset};
use crate::error::{Error, Result};

/// Role of a column as written in schema files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleSpec {
    CovariateCont,
    CovariateCat,
    Exposure,
    PostExposure,
    Outcome,
    Auxiliary,
}

impl RoleSpec {
    /// Resolves to a [`ColumnRole`]. Categorical level counts are inferred
    /// from the data after loading; `post_exposure` defaults to 3 levels.
    fn to_role(self) -> ColumnRole {
        match self {
            RoleSpec::CovariateCont => ColumnRole::CovariateContinuous,
            RoleSpec::CovariateCat => ColumnRole::CovariateCategorical { levels: 0 },
            RoleSpec::Exposure => ColumnRole::Exposure,
            RoleSpec::PostExposure => ColumnRole::PostExposure { levels: 3 },
            RoleSpec::Outcome => ColumnRole::Outcome,
            RoleSpec::Auxiliary => ColumnRole::Auxiliary,
        }
    }
}

/// Column-role declarations plus the missing-value token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub columns: BTreeMap<String, RoleSpec>,
    #[serde(default = "default_na")]
    pub na_token: String,
}

fn default_na() -> String {
    "NA".to_string()
}

impl Schema {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Loads a CSV file against a schema. Cells equal to the schema's `na_token`
/// (or empty) are missing. The header must agree with the schema's column
/// set; order comes from the file.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<ObservedDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    for h in &headers {
        if !schema.columns.contains_key(h) {
            return Err(Error::ColumnNotInSchema { column: h.clone() });
        }
    }
    for name in schema.columns.keys() {
        if !headers.contains(name) {
            return Err(Error::SchemaColumnMissing { column: name.clone() });
        }
    }

    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        for (col_idx, field) in record.iter().enumerate() {
            let trimmed = field.trim();
            if trimmed == schema.na_token || trimmed.is_empty() {
                cells[col_idx].push(None);
            } else {
                let v: f64 = trimmed.parse().map_err(|_| Error::BadCell {
                    column: headers[col_idx].clone(),
                    row: row_idx,
                    value: trimmed.to_string(),
                })?;
                cells[col_idx].push(Some(v));
            }
        }
    }

    let mut columns = Vec::with_capacity(headers.len());
    for (name, cells) in headers.iter().zip(cells) {
        let mut role = schema.columns[name].to_role();
        if let ColumnRole::CovariateCategorical { levels } = &mut role {
            // infer level count from the observed codes
            let max = cells
                .iter()
                .flatten()
                .fold(0f64, |acc, &v| acc.max(v));
            *levels = max as u32;
        }
        columns.push(Column::new(name.clone(), role, cells));
    }
    ObservedDataset::new(columns)
}

/// Writes a dataset back to CSV, emitting `na_token` for missing cells.
/// Observed values are written with Rust's shortest round-trip float
/// formatting, so integers come out as integers.
pub fn write_csv(dataset: &ObservedDataset, path: impl AsRef<Path>, na_token: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(dataset.columns().iter().map(|c| c.name.as_str()))?;
    for row in 0..dataset.n_rows() {
        let record: Vec<String> = dataset
            .columns()
            .iter()
            .map(|c| match c.get(row) {
                Some(v) => format!("{v}"),
                None => na_token.to_string(),
            })
            .collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::from_json(
            r#"{
                "columns": {
                    "x1": "covariate_cont",
                    "x2": "covariate_cont",
                    "z": "exposure",
                    "r": "post_exposure",
                    "y": "outcome"
                },
                "na_token": "NA"
            }"#,
        )
        .unwrap()
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_fully_observed_file() {
        let f = write_temp("x1,x2,z,r,y\n0.5,1,1,2,1\n-0.25,2,0,NA,0\n1.5,0.5,1,1,1\n0,1,0,NA,0\n");
        let d = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(d.n_rows(), 4);
        assert!(d.columns().iter().all(|c| c.n_missing() == 0 || c.name == "r"));
        assert_eq!(d.column("x1").unwrap().get(1), Some(-0.25));
    }

    #[test]
    fn na_token_marks_missing() {
        let f = write_temp("x1,x2,z,r,y\n0.5,1,1,2,1\n0.1,NA,0,NA,NA\n");
        let d = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(d.column("y").unwrap().get(1), None);
        assert_eq!(d.column("x2").unwrap().get(1), None);
        assert!(d.column("x1").unwrap().is_observed(1));
    }

    #[test]
    fn empty_string_also_missing() {
        let f = write_temp("x1,x2,z,r,y\n0.5,,1,2,1\n");
        let d = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(d.column("x2").unwrap().get(0), None);
    }

    #[test]
    fn post_exposure_with_zero_exposure_rejected() {
        let f = write_temp("x1,x2,z,r,y\n0.5,1,0,2,1\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(matches!(err, Error::PostExposureForNonTester { row: 0, .. }));
    }

    #[test]
    fn unknown_header_rejected() {
        let f = write_temp("x1,x2,z,r,y,extra\n0.5,1,1,2,1,9\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(matches!(err, Error::ColumnNotInSchema { .. }));
    }

    #[test]
    fn missing_exposure_rejected() {
        let f = write_temp("x1,x2,z,r,y\n0.5,1,NA,NA,1\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(matches!(err, Error::ExposureMissing { .. }));
    }

    #[test]
    fn post_exposure_code_out_of_range_rejected() {
        let f = write_temp("x1,x2,z,r,y\n0.5,1,1,4,1\n");
        let err = load_csv(f.path(), &schema()).unwrap_err();
        assert!(matches!(err, Error::CategoricalOutOfRange { .. }));
    }

    #[test]
    fn round_trip_preserves_cells_and_na_placement() {
        let text = "x1,x2,z,r,y\n0.5,1,1,2,1\n0.1,NA,0,NA,NA\n-2,0.125,1,3,0\n";
        let f = write_temp(text);
        let d = load_csv(f.path(), &schema()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, out.path(), "NA").unwrap();
        let written = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(written, text);
    }
}
