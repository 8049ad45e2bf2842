//! Tabular data with explicit per-cell missingness.
//!
//! Datasets are immutable after construction. The imputation engine works on
//! its own mutable copies and emits [`CompletedDataset`] values; nothing here
//! ever mutates an [`ObservedDataset`] in place.

mod csv_io;

pub use csv_io::{load_csv, write_csv, RoleSpec, Schema};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic role of a dataset column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    /// Continuous covariate.
    CovariateContinuous,
    /// Categorical covariate with integer codes `1..=levels`.
    CovariateCategorical { levels: u32 },
    /// Binary exposure `Z` (0/1); must be fully observed.
    Exposure,
    /// Binary outcome `Y` (0/1).
    Outcome,
    /// Post-exposure categorical (test result `R`); structurally missing
    /// whenever the exposure is 0.
    PostExposure { levels: u32 },
    /// Potential outcome under no exposure; only in working/completed data.
    PotentialOutcome0,
    /// Potential outcome under exposure; only in working/completed data.
    PotentialOutcome1,
    /// Fully observed continuous auxiliary variable (e.g. a simulated
    /// unmeasured predictor in sensitivity analyses).
    Auxiliary,
}

impl ColumnRole {
    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            ColumnRole::Exposure
                | ColumnRole::Outcome
                | ColumnRole::PotentialOutcome0
                | ColumnRole::PotentialOutcome1
        )
    }

    pub fn categorical_levels(&self) -> Option<u32> {
        match self {
            ColumnRole::CovariateCategorical { levels } | ColumnRole::PostExposure { levels } => {
                Some(*levels)
            }
            _ => None,
        }
    }

    /// Covariate-like roles that enter model predictor sets.
    pub fn is_covariate_like(&self) -> bool {
        matches!(
            self,
            ColumnRole::CovariateContinuous
                | ColumnRole::CovariateCategorical { .. }
                | ColumnRole::Auxiliary
        )
    }
}

/// A named column: values plus an observed/missing flag per cell. The value
/// in a missing cell is meaningless.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl Column {
    pub fn new(name: impl Into<String>, role: ColumnRole, cells: Vec<Option<f64>>) -> Self {
        let mut values = Vec::with_capacity(cells.len());
        let mut observed = Vec::with_capacity(cells.len());
        for c in cells {
            match c {
                Some(v) => {
                    values.push(v);
                    observed.push(true);
                }
                None => {
                    values.push(f64::NAN);
                    observed.push(false);
                }
            }
        }
        Self { name: name.into(), role, values, observed }
    }

    pub fn full(name: impl Into<String>, role: ColumnRole, values: Vec<f64>) -> Self {
        let observed = vec![true; values.len()];
        Self { name: name.into(), role, values, observed }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_observed(&self, row: usize) -> bool {
        self.observed[row]
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        self.observed[row].then(|| self.values[row])
    }

    /// Raw value regardless of observedness; callers must know the cell is
    /// filled (working/completed data).
    pub fn value(&self, row: usize) -> f64 {
        self.values[row]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn n_missing(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.observed)
            .filter_map(|(&v, &o)| o.then_some(v))
    }

    pub(crate) fn set_value(&mut self, row: usize, v: f64) {
        self.values[row] = v;
    }

    pub(crate) fn mark_observed(&mut self, row: usize, v: f64) {
        self.values[row] = v;
        self.observed[row] = true;
    }

    pub(crate) fn mark_missing(&mut self, row: usize) {
        self.values[row] = f64::NAN;
        self.observed[row] = false;
    }
}

/// Missingness profile of a dataset: per-column missing fractions and counts
/// of the joint missingness patterns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissingnessSummary {
    pub n_rows: usize,
    /// column name -> fraction of rows missing
    pub fractions: BTreeMap<String, f64>,
    /// joint pattern ('o' observed / 'm' missing per column, in column
    /// order) -> row count
    pub patterns: BTreeMap<String, usize>,
}

/// A rectangular dataset with validated roles and a missingness mask.
#[derive(Debug, Clone)]
pub struct ObservedDataset {
    n_rows: usize,
    columns: Vec<Column>,
}

impl ObservedDataset {
    /// Builds and validates a dataset. Checks role cardinality, binary and
    /// categorical ranges, a fully observed exposure, and the structural rule
    /// that a post-exposure value can only be observed for exposed rows.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        for c in &columns {
            if c.len() != n_rows {
                return Err(Error::LengthMismatch {
                    column: c.name.clone(),
                    len: c.len(),
                    expected: n_rows,
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        let count_role = |pred: fn(&ColumnRole) -> bool| columns.iter().filter(|c| pred(&c.role)).count();
        let n_exp = count_role(|r| matches!(r, ColumnRole::Exposure));
        if n_exp != 1 {
            return Err(Error::RoleCardinality { role: "exposure", count: n_exp });
        }
        let n_out = count_role(|r| matches!(r, ColumnRole::Outcome));
        if n_out != 1 {
            return Err(Error::RoleCardinality { role: "outcome", count: n_out });
        }
        let n_post = count_role(|r| matches!(r, ColumnRole::PostExposure { .. }));
        if n_post > 1 {
            return Err(Error::RoleCardinality { role: "post-exposure", count: n_post });
        }

        let ds = Self { n_rows, columns };
        ds.validate_cells()?;
        Ok(ds)
    }

    fn validate_cells(&self) -> Result<()> {
        let z = self.exposure();
        for row in 0..self.n_rows {
            if !z.is_observed(row) {
                return Err(Error::ExposureMissing { column: z.name.clone(), row });
            }
        }
        for c in &self.columns {
            for row in 0..self.n_rows {
                let Some(v) = c.get(row) else { continue };
                if c.role.is_binary() && v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinary { column: c.name.clone(), row, value: v });
                }
                if let Some(levels) = c.role.categorical_levels() {
                    if v.fract() != 0.0 || v < 1.0 || v > levels as f64 {
                        return Err(Error::CategoricalOutOfRange {
                            column: c.name.clone(),
                            row,
                            value: v,
                            levels,
                        });
                    }
                }
                if matches!(c.role, ColumnRole::PostExposure { .. }) && z.value(row) == 0.0 {
                    return Err(Error::PostExposureForNonTester { column: c.name.clone(), row });
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub(crate) fn column_mut(&mut self, name: &str) -> Result<&mut Column> {
        self.columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_by_role(&self, pred: impl Fn(&ColumnRole) -> bool) -> Option<&Column> {
        self.columns.iter().find(|c| pred(&c.role))
    }

    pub fn exposure(&self) -> &Column {
        self.column_by_role(|r| matches!(r, ColumnRole::Exposure))
            .expect("validated: exactly one exposure")
    }

    pub fn outcome(&self) -> &Column {
        self.column_by_role(|r| matches!(r, ColumnRole::Outcome))
            .expect("validated: exactly one outcome")
    }

    pub fn post_exposure(&self) -> Option<&Column> {
        self.column_by_role(|r| matches!(r, ColumnRole::PostExposure { .. }))
    }

    pub fn potential_outcome(&self, arm: u8) -> Option<&Column> {
        match arm {
            0 => self.column_by_role(|r| matches!(r, ColumnRole::PotentialOutcome0)),
            1 => self.column_by_role(|r| matches!(r, ColumnRole::PotentialOutcome1)),
            _ => None,
        }
    }

    /// Names of covariate-like columns (covariates and auxiliaries), in
    /// dataset order.
    pub fn covariate_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role.is_covariate_like())
            .map(|c| c.name.clone())
            .collect()
    }

    /// Splits the outcome into potential-outcome columns: `Y1 := Y` for
    /// exposed rows, `Y0 := Y` for unexposed rows, the counterfactual side
    /// missing. Rows with `Y` itself missing get both sides missing. The
    /// original outcome column is kept.
    pub fn split_potential_outcomes(&self) -> Result<ObservedDataset> {
        if self.potential_outcome(0).is_some() || self.potential_outcome(1).is_some() {
            return Err(Error::InvalidConfig(
                "dataset already contains potential-outcome columns".into(),
            ));
        }
        let y = self.outcome();
        let z = self.exposure();
        let name0 = format!("{}0", y.name);
        let name1 = format!("{}1", y.name);
        for taken in [&name0, &name1] {
            if self.columns.iter().any(|c| &c.name == taken) {
                return Err(Error::DuplicateColumn(taken.clone()));
            }
        }
        let mut cells0 = Vec::with_capacity(self.n_rows);
        let mut cells1 = Vec::with_capacity(self.n_rows);
        for row in 0..self.n_rows {
            match (y.get(row), z.value(row)) {
                (Some(v), zr) if zr == 1.0 => {
                    cells0.push(None);
                    cells1.push(Some(v));
                }
                (Some(v), _) => {
                    cells0.push(Some(v));
                    cells1.push(None);
                }
                (None, _) => {
                    cells0.push(None);
                    cells1.push(None);
                }
            }
        }
        let mut columns = self.columns.clone();
        columns.push(Column::new(name0, ColumnRole::PotentialOutcome0, cells0));
        columns.push(Column::new(name1, ColumnRole::PotentialOutcome1, cells1));
        Ok(ObservedDataset { n_rows: self.n_rows, columns })
    }

    /// Recovers the factual outcome from `(Z, Y0, Y1)`; the inverse of
    /// [`ObservedDataset::split_potential_outcomes`] on the outcome column.
    pub fn merged_outcome(&self) -> Result<Vec<Option<f64>>> {
        let z = self.exposure();
        let y0 = self
            .potential_outcome(0)
            .ok_or_else(|| Error::UnknownColumn("potential outcome 0".into()))?;
        let y1 = self
            .potential_outcome(1)
            .ok_or_else(|| Error::UnknownColumn("potential outcome 1".into()))?;
        Ok((0..self.n_rows)
            .map(|row| if z.value(row) == 1.0 { y1.get(row) } else { y0.get(row) })
            .collect())
    }

    pub fn summarize_missingness(&self) -> MissingnessSummary {
        let mut fractions = BTreeMap::new();
        for c in &self.columns {
            let frac = if self.n_rows == 0 {
                0.0
            } else {
                c.n_missing() as f64 / self.n_rows as f64
            };
            fractions.insert(c.name.clone(), frac);
        }
        let mut patterns: BTreeMap<String, usize> = BTreeMap::new();
        for row in 0..self.n_rows {
            let key: String = self
                .columns
                .iter()
                .map(|c| if c.is_observed(row) { 'o' } else { 'm' })
                .collect();
            *patterns.entry(key).or_insert(0) += 1;
        }
        MissingnessSummary { n_rows: self.n_rows, fractions, patterns }
    }
}

/// Where a completed dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Imputation (chain) index, 0-based.
    pub imputation: usize,
    /// Number of chained-equation sweeps run.
    pub cycles: usize,
    /// Seed of the imputation settings that produced it.
    pub seed: u64,
}

/// One imputation's fully filled dataset. All modeled columns are complete;
/// originally observed cells are untouched.
#[derive(Debug, Clone)]
pub struct CompletedDataset {
    data: ObservedDataset,
    pub provenance: Provenance,
}

impl CompletedDataset {
    pub(crate) fn new(data: ObservedDataset, provenance: Provenance) -> Self {
        Self { data, provenance }
    }

    pub fn data(&self) -> &ObservedDataset {
        &self.data
    }

    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.data.column(name)
    }

    /// Fully filled potential-outcome pair, if this dataset carries one.
    pub fn potential_outcomes(&self) -> Option<(&Column, &Column)> {
        match (self.data.potential_outcome(0), self.data.potential_outcome(1)) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        }
    }
}
