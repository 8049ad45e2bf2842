//! Imputation-quality diagnostics: observed vs imputed distributions of each
//! partially missing observable variable, compared within quintiles of the
//! estimated propensity of being observed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRole, CompletedDataset, ObservedDataset};
use crate::error::Result;
use crate::fcs::CycleTracePoint;
use crate::glm::{build_design, fit_logistic_raw, FitOptions};
use crate::stats::{expit, mean_var};

pub(crate) const DEFAULT_WARN_THRESHOLD: f64 = 0.2;

/// One propensity-quintile bin of one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinDiagnostics {
    pub bin: usize,
    pub n_observed: usize,
    pub n_imputed: usize,
    pub observed_mean: Option<f64>,
    pub observed_var: Option<f64>,
    pub imputed_mean: Option<f64>,
    pub imputed_var: Option<f64>,
    /// (imputed mean - observed mean) / pooled SD; `None` for empty bins or
    /// degenerate variances.
    pub std_mean_diff: Option<f64>,
}

/// Diagnostics for one partially missing variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableDiagnostics {
    pub variable: String,
    pub bins: Vec<BinDiagnostics>,
}

impl VariableDiagnostics {
    /// Bins whose |standardized mean difference| is at or above `threshold`.
    pub fn flagged_bins(&self, threshold: f64) -> Vec<usize> {
        self.bins
            .iter()
            .filter(|b| b.std_mean_diff.map_or(false, |d| d.abs() >= threshold))
            .map(|b| b.bin)
            .collect()
    }
}

/// Diagnostics attached to an imputation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputationDiagnostics {
    pub variables: Vec<VariableDiagnostics>,
    pub cycle_trace: Vec<CycleTracePoint>,
    /// Every column the variant's models read or wrote.
    pub columns_referenced: BTreeSet<String>,
    pub warn_threshold: f64,
}

impl ImputationDiagnostics {
    /// Fraction of non-empty bins under the warn threshold, across all
    /// variables.
    pub fn fraction_within_threshold(&self) -> f64 {
        let mut total = 0usize;
        let mut ok = 0usize;
        for v in &self.variables {
            for b in &v.bins {
                if let Some(d) = b.std_mean_diff {
                    total += 1;
                    if d.abs() < self.warn_threshold {
                        ok += 1;
                    }
                }
            }
        }
        if total == 0 {
            1.0
        } else {
            ok as f64 / total as f64
        }
    }
}

/// Columns eligible for observed-vs-imputed comparison: observable variables
/// with non-structural missingness. Post-exposure and potential-outcome
/// columns are excluded; their missingness is structural, so there is no
/// like-for-like observed group.
fn diagnosable_columns(d: &ObservedDataset) -> Vec<String> {
    d.columns()
        .iter()
        .filter(|c| {
            matches!(
                c.role,
                ColumnRole::CovariateContinuous
                    | ColumnRole::CovariateCategorical { .. }
                    | ColumnRole::Outcome
                    | ColumnRole::Auxiliary
            ) && c.n_missing() > 0
        })
        .map(|c| c.name.clone())
        .collect()
}

/// Fully observed covariate-like columns plus the exposure; the predictors
/// of each response-propensity model.
fn propensity_predictors(d: &ObservedDataset, exclude: &str) -> Vec<String> {
    d.columns()
        .iter()
        .filter(|c| {
            c.name != exclude
                && c.n_missing() == 0
                && (c.role.is_covariate_like() || matches!(c.role, ColumnRole::Exposure))
        })
        .map(|c| c.name.clone())
        .collect()
}

pub(crate) fn diagnose_variables(
    original: &ObservedDataset,
    completed: &[CompletedDataset],
) -> Result<Vec<VariableDiagnostics>> {
    let all_rows: Vec<usize> = (0..original.n_rows()).collect();
    let mut out = Vec::new();
    for var in diagnosable_columns(original) {
        let col = original.column(&var)?;
        let predictors = propensity_predictors(original, &var);
        let (x, names) = build_design(original, &predictors, true, &all_rows)?;
        let resp = nalgebra::DVector::from_fn(original.n_rows(), |i, _| f64::from(col.is_observed(i)));
        let fit = fit_logistic_raw(&x, &resp, names, "observedness", &FitOptions::default())?;
        let eta = &x * &fit.coef;
        let scores: Vec<f64> = (0..original.n_rows()).map(|i| expit(eta[i])).collect();

        // equal-count quintiles by propensity rank
        let mut order: Vec<usize> = (0..original.n_rows()).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
        let mut bin_of = vec![0usize; original.n_rows()];
        for (rank, &row) in order.iter().enumerate() {
            bin_of[row] = (rank * 5 / original.n_rows()).min(4);
        }

        let mut bins = Vec::with_capacity(5);
        for bin in 0..5 {
            let rows: Vec<usize> =
                (0..original.n_rows()).filter(|&i| bin_of[i] == bin).collect();
            let observed: Vec<f64> = rows
                .iter()
                .filter(|&&i| col.is_observed(i))
                .map(|&i| col.value(i))
                .collect();
            let mut imputed = Vec::new();
            for c in completed {
                let cc = c.column(&var)?;
                for &i in &rows {
                    if !col.is_observed(i) {
                        imputed.push(cc.value(i));
                    }
                }
            }
            let (obs_mean, obs_var) = mean_var(&observed);
            let (imp_mean, imp_var) = mean_var(&imputed);
            let std_mean_diff = if observed.is_empty() || imputed.is_empty() {
                None
            } else {
                let pooled = ((obs_var + imp_var) / 2.0).sqrt();
                if pooled < 1e-12 {
                    None
                } else {
                    Some((imp_mean - obs_mean) / pooled)
                }
            };
            bins.push(BinDiagnostics {
                bin,
                n_observed: observed.len(),
                n_imputed: imputed.len(),
                observed_mean: (!observed.is_empty()).then_some(obs_mean),
                observed_var: (!observed.is_empty()).then_some(obs_var),
                imputed_mean: (!imputed.is_empty()).then_some(imp_mean),
                imputed_var: (!imputed.is_empty()).then_some(imp_var),
                std_mean_diff,
            });
        }
        out.push(VariableDiagnostics { variable: var, bins });
    }
    Ok(out)
}

/// Observed-vs-imputed comparison for every partially missing observable
/// variable, binned by estimated response propensity.
pub fn diagnose(
    original: &ObservedDataset,
    completed: &[CompletedDataset],
) -> Result<Vec<VariableDiagnostics>> {
    diagnose_variables(original, completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Provenance};
    use crate::fcs::{impute, FcsSettings, VariantKind, VariantSpec};
    use crate::rng::RngFactory;
    use crate::sim::{generate_true_world, mask_to_observed, SimConfig};
    use rand::Rng;

    #[test]
    fn mcar_imputation_has_small_standardized_differences() {
        // MCAR missingness in x2, imputed from the correct linear model
        let n = 6000;
        let f = RngFactory::new(21);
        let mut rng = f.stream(&[0]);
        let x1: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x2: Vec<Option<f64>> = x1
            .iter()
            .map(|&v| {
                let noise: f64 = rng.random::<f64>() - 0.5;
                let val = 2.0 * v + noise;
                (rng.random::<f64>() > 0.3).then_some(val)
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random::<f64>() < 0.5)).collect();
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, x1),
            Column::new("x2", ColumnRole::CovariateContinuous, x2),
            Column::full("z", ColumnRole::Exposure, vec![0.0; n]),
            Column::full("y", ColumnRole::Outcome, y),
        ])
        .unwrap();
        let variant = VariantSpec {
            kind: VariantKind::ObservedOnly,
            models: vec![crate::fcs::ModelSpec {
                target: "x2".into(),
                predictors: vec!["x1".into()],
                family: crate::glm::ModelFamily::Linear,
            }],
        };
        let settings = FcsSettings { imputations: 3, cycles: 2, seed: 4, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        let vd = &out.diagnostics.variables[0];
        assert_eq!(vd.variable, "x2");
        for b in &vd.bins {
            let smd = b.std_mean_diff.expect("non-empty bins");
            assert!(smd.abs() < 0.1, "bin {} smd {}", b.bin, smd);
        }
    }

    #[test]
    fn planted_constant_fill_is_detected() {
        // constant-0 fills on a column with observed mean ~0.6
        let n = 2000;
        let f = RngFactory::new(22);
        let mut rng = f.stream(&[0]);
        let y: Vec<Option<f64>> = (0..n)
            .map(|_| (rng.random::<f64>() > 0.4).then(|| f64::from(rng.random::<f64>() < 0.6)))
            .collect();
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, vec![0.0; n]),
            Column::full("z", ColumnRole::Exposure, vec![0.0; n]),
            Column::new("y", ColumnRole::Outcome, y),
        ])
        .unwrap();
        // defective completed dataset: all missing y filled with 0
        let mut working = d.clone();
        let col = working.column_mut("y").unwrap();
        for row in 0..n {
            if !col.is_observed(row) {
                col.set_value(row, 0.0);
            }
        }
        let completed =
            vec![CompletedDataset::new(working, Provenance { imputation: 0, cycles: 1, seed: 0 })];
        let vars = diagnose(&d, &completed).unwrap();
        let smds: Vec<f64> = vars[0].bins.iter().filter_map(|b| b.std_mean_diff).collect();
        assert!(smds.iter().all(|&s| s < -0.5), "smds = {smds:?}");
        assert!(!vars[0].flagged_bins(0.2).is_empty());
    }

    #[test]
    fn default_sim_imputation_mostly_within_threshold() {
        let cfg = SimConfig { n: 2000, ..SimConfig::default() };
        let rows = generate_true_world(&cfg, &mut RngFactory::new(23).stream(&[0])).unwrap();
        let d = mask_to_observed(&rows).unwrap();
        let variant = VariantSpec::for_dataset(VariantKind::PomiInd, &d).unwrap();
        let settings = FcsSettings { imputations: 5, cycles: 5, seed: 13, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        assert!(
            out.diagnostics.fraction_within_threshold() >= 0.9,
            "fraction = {}",
            out.diagnostics.fraction_within_threshold()
        );
    }

    #[test]
    fn structurally_missing_columns_are_not_diagnosed() {
        let cfg = SimConfig { n: 500, ..SimConfig::default() };
        let rows = generate_true_world(&cfg, &mut RngFactory::new(24).stream(&[0])).unwrap();
        let d = mask_to_observed(&rows).unwrap();
        let names = diagnosable_columns(&d);
        assert_eq!(names, vec!["x2", "y"]);
    }
}
