//! Sequential-regression (fully conditional specification) multiple
//! imputation.
//!
//! The engine runs independent chains. Each chain hot-decks every missing
//! cell from its column's observed marginal, then sweeps the variant's
//! conditional models in order: fit on rows where the target was originally
//! observed, draw parameters from the approximate posterior, re-impute the
//! originally missing cells. Observed cells are never overwritten.
//!
//! Variants differ in which columns the models may reference; see
//! [`VariantKind`]. Model sets are derived from the dataset, so the same
//! rules apply to any schema with one exposure, one outcome, and optional
//! post-exposure and auxiliary columns.

mod diagnostics;

pub use diagnostics::{diagnose, BinDiagnostics, ImputationDiagnostics, VariableDiagnostics};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRole, CompletedDataset, ObservedDataset, Provenance};
use crate::error::{Error, Result};
use crate::glm::{build_design, draw_params, fit_model, impute_cells, DesignSpec, FitOptions, ModelFamily};
use crate::rng::RngFactory;

/// Which conditional-model set the engine runs.
///
/// With covariates `X`, exposure `Z`, post-exposure `R`, outcome `Y` and
/// potential outcomes `Y0`/`Y1`:
///
/// - `PomiZ` — `f(X2|X1,Y0,Y1,R)`, `f(R|X1,X2,Y0,Y1)`, `f(Y0|X1,X2,Y1,R)`,
///   `f(Y1|X1,X2,Y0,R)`; the exposure is excluded everywhere.
/// - `Pomi` — as `PomiZ`, but covariate models add `Z`.
/// - `PomiInd` — encodes ignorability and conditional independence of the
///   potential outcomes: `f(X2|X1,Y0,Y1,R,Z)`, `f(R|X1,X2,Y1)`,
///   `f(Y0|X1,X2)`, `f(Y1|X1,X2,R)`.
/// - `PomiIndR` — as `PomiInd` with the post-exposure dropped entirely:
///   `f(X2|X1,Y0,Y1,Z)`, `f(Y0|X1,X2)`, `f(Y1|X1,X2)`.
/// - `ObservedOnly` — imputes only observable columns, for the weighting
///   comparator: `f(X2|X1,Y,Z)`, `f(Y|X1,X2,Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantKind {
    PomiZ,
    Pomi,
    PomiInd,
    PomiIndR,
    ObservedOnly,
}

impl VariantKind {
    pub fn label(&self) -> &'static str {
        match self {
            VariantKind::PomiZ => "POMI-Z",
            VariantKind::Pomi => "POMI",
            VariantKind::PomiInd => "POMI+IND",
            VariantKind::PomiIndR => "POMI+IND-R",
            VariantKind::ObservedOnly => "OBSERVED-ONLY",
        }
    }

    /// Whether the model set imputes potential outcomes.
    pub fn imputes_potential_outcomes(&self) -> bool {
        !matches!(self, VariantKind::ObservedOnly)
    }
}

/// One conditional model: target column, predictors, family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub target: String,
    pub predictors: Vec<String>,
    pub family: ModelFamily,
}

/// An ordered set of conditional models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub kind: VariantKind,
    pub models: Vec<ModelSpec>,
}

impl VariantSpec {
    /// Derives the variant's model list from a dataset: one model per
    /// covariate-like column with missing cells, then the post-exposure
    /// model (where the variant has one), then the potential outcomes (or
    /// the outcome itself for `ObservedOnly`). Fully observed columns get
    /// no model.
    pub fn for_dataset(kind: VariantKind, d: &ObservedDataset) -> Result<Self> {
        let covs = d.covariate_names();
        let z = d.exposure().name.clone();
        let y = d.outcome().name.clone();
        let r = d.post_exposure().map(|c| (c.name.clone(), c.role));
        let (y0, y1) = match (d.potential_outcome(0), d.potential_outcome(1)) {
            (Some(a), Some(b)) => (Some(a.name.clone()), Some(b.name.clone())),
            _ => (None, None),
        };
        if kind.imputes_potential_outcomes() && y0.is_none() {
            return Err(Error::InvalidConfig(
                "variant imputes potential outcomes; run split_potential_outcomes first".into(),
            ));
        }

        let uses_r = r.is_some() && !matches!(kind, VariantKind::PomiIndR | VariantKind::ObservedOnly);
        let r_name = r.as_ref().map(|(n, _)| n.clone());
        let po_pair: Vec<String> = match (&y0, &y1) {
            (Some(a), Some(b)) => vec![a.clone(), b.clone()],
            _ => vec![],
        };

        let mut models = Vec::new();

        // covariate models, in dataset order
        for c in &covs {
            let col = d.column(c)?;
            if col.n_missing() == 0 {
                continue;
            }
            let mut preds: Vec<String> = covs.iter().filter(|n| *n != c).cloned().collect();
            match kind {
                VariantKind::ObservedOnly => {
                    preds.push(y.clone());
                    preds.push(z.clone());
                }
                VariantKind::PomiZ => {
                    preds.extend(po_pair.iter().cloned());
                    if uses_r {
                        preds.push(r_name.clone().unwrap());
                    }
                }
                VariantKind::Pomi | VariantKind::PomiInd => {
                    preds.extend(po_pair.iter().cloned());
                    if uses_r {
                        preds.push(r_name.clone().unwrap());
                    }
                    preds.push(z.clone());
                }
                VariantKind::PomiIndR => {
                    preds.extend(po_pair.iter().cloned());
                    preds.push(z.clone());
                }
            }
            let family = match col.role {
                ColumnRole::CovariateCategorical { levels } => ModelFamily::Multinomial { levels },
                _ => ModelFamily::Linear,
            };
            models.push(ModelSpec { target: c.clone(), predictors: preds, family });
        }

        // post-exposure model
        if uses_r {
            let (name, role) = r.as_ref().unwrap();
            if d.column(name)?.n_missing() > 0 {
                let mut preds = covs.clone();
                match kind {
                    VariantKind::PomiZ | VariantKind::Pomi => preds.extend(po_pair.iter().cloned()),
                    VariantKind::PomiInd => preds.push(y1.clone().unwrap()),
                    _ => unreachable!("uses_r excludes other kinds"),
                }
                let levels = role.categorical_levels().unwrap_or(3);
                models.push(ModelSpec {
                    target: name.clone(),
                    predictors: preds,
                    family: ModelFamily::Multinomial { levels },
                });
            }
        }

        match kind {
            VariantKind::ObservedOnly => {
                if d.outcome().n_missing() > 0 {
                    let mut preds = covs.clone();
                    preds.push(z.clone());
                    models.push(ModelSpec {
                        target: y.clone(),
                        predictors: preds,
                        family: ModelFamily::Logistic,
                    });
                }
            }
            VariantKind::PomiZ | VariantKind::Pomi => {
                let (y0, y1) = (y0.unwrap(), y1.unwrap());
                let mut preds0 = covs.clone();
                preds0.push(y1.clone());
                if uses_r {
                    preds0.push(r_name.clone().unwrap());
                }
                models.push(ModelSpec { target: y0.clone(), predictors: preds0, family: ModelFamily::Logistic });
                let mut preds1 = covs.clone();
                preds1.push(y0);
                if uses_r {
                    preds1.push(r_name.clone().unwrap());
                }
                models.push(ModelSpec { target: y1, predictors: preds1, family: ModelFamily::Logistic });
            }
            VariantKind::PomiInd => {
                let (y0, y1) = (y0.unwrap(), y1.unwrap());
                models.push(ModelSpec { target: y0, predictors: covs.clone(), family: ModelFamily::Logistic });
                let mut preds1 = covs.clone();
                if uses_r {
                    preds1.push(r_name.clone().unwrap());
                }
                models.push(ModelSpec { target: y1, predictors: preds1, family: ModelFamily::Logistic });
            }
            VariantKind::PomiIndR => {
                let (y0, y1) = (y0.unwrap(), y1.unwrap());
                models.push(ModelSpec { target: y0, predictors: covs.clone(), family: ModelFamily::Logistic });
                models.push(ModelSpec { target: y1, predictors: covs.clone(), family: ModelFamily::Logistic });
            }
        }

        Ok(VariantSpec { kind, models })
    }

    /// All columns any model reads or writes.
    pub fn referenced_columns(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for m in &self.models {
            set.insert(m.target.clone());
            set.extend(m.predictors.iter().cloned());
        }
        set
    }
}

/// How missing cells are seeded before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialFill {
    /// Random draw from the column's observed marginal distribution.
    #[default]
    ObservedMarginal,
}

/// Imputation run controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcsSettings {
    /// Number of imputed datasets (independent chains).
    pub imputations: usize,
    /// Chained-equation sweeps per chain.
    pub cycles: usize,
    pub seed: u64,
    pub initial_fill: InitialFill,
}

impl Default for FcsSettings {
    fn default() -> Self {
        Self { imputations: 5, cycles: 10, seed: 0, initial_fill: InitialFill::ObservedMarginal }
    }
}

impl FcsSettings {
    pub fn validate(&self) -> Result<()> {
        if self.imputations < 2 {
            return Err(Error::InvalidConfig("need at least 2 imputations".into()));
        }
        if self.cycles < 1 {
            return Err(Error::InvalidConfig("need at least 1 cycle".into()));
        }
        Ok(())
    }
}

/// Per-cycle mean of each target's imputed cells, for stationarity checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleTracePoint {
    pub chain: usize,
    pub cycle: usize,
    pub target: String,
    pub imputed_mean: f64,
}

/// Result of an [`impute`] run.
#[derive(Debug)]
pub struct ImputationOutput {
    pub completed: Vec<CompletedDataset>,
    pub diagnostics: ImputationDiagnostics,
}

struct PreparedModel {
    spec: ModelSpec,
    design: DesignSpec,
    fit_rows: Vec<usize>,
    impute_rows: Vec<usize>,
}

fn prepare_models(d: &ObservedDataset, variant: &VariantSpec) -> Result<Vec<PreparedModel>> {
    variant
        .models
        .iter()
        .map(|m| {
            let col = d.column(&m.target)?;
            let mut fit_rows = Vec::new();
            let mut impute_rows = Vec::new();
            for row in 0..d.n_rows() {
                if col.is_observed(row) {
                    fit_rows.push(row);
                } else {
                    impute_rows.push(row);
                }
            }
            for p in &m.predictors {
                d.column(p)?;
            }
            Ok(PreparedModel {
                design: DesignSpec::new(m.target.clone(), m.predictors.clone()),
                spec: m.clone(),
                fit_rows,
                impute_rows,
            })
        })
        .collect()
}

/// Fills every missing cell of the modeled target columns with a draw from
/// the column's observed marginal. The missingness mask is left untouched;
/// it is the record of which cells are imputed.
fn initial_fill<R: rand::Rng + ?Sized>(
    working: &mut ObservedDataset,
    models: &[PreparedModel],
    rng: &mut R,
) -> Result<()> {
    for m in models {
        let observed: Vec<f64> = working.column(&m.spec.target)?.observed_values().collect();
        if observed.is_empty() {
            return Err(Error::NoObservedValues { column: m.spec.target.clone() });
        }
        let col = working.column_mut(&m.spec.target)?;
        for &row in &m.impute_rows {
            let pick = observed[rng.random_range(0..observed.len())];
            col.set_value(row, pick);
        }
    }
    Ok(())
}

/// One sweep over the variant's models: fit on originally observed target
/// rows, draw parameters, re-impute the originally missing cells.
fn fcs_cycle<R: rand::Rng + ?Sized>(
    working: &mut ObservedDataset,
    models: &[PreparedModel],
    opts: &FitOptions,
    rng: &mut R,
) -> Result<()> {
    for m in models {
        if m.impute_rows.is_empty() {
            continue;
        }
        let fit = fit_model(working, &m.design, m.spec.family, &m.fit_rows, opts)?;
        let draw = draw_params(&fit, rng)?;
        let (x_miss, _) = build_design(working, &m.spec.predictors, true, &m.impute_rows)?;
        let values = impute_cells(m.spec.family, &draw, &x_miss, rng);
        let col = working.column_mut(&m.spec.target)?;
        for (&row, &v) in m.impute_rows.iter().zip(&values) {
            col.set_value(row, v);
        }
    }
    Ok(())
}

/// Runs `settings.imputations` independent chains and returns one completed
/// dataset per chain plus diagnostics. Deterministic in
/// `(data, variant, settings)`.
pub fn impute(
    d: &ObservedDataset,
    variant: &VariantSpec,
    settings: &FcsSettings,
) -> Result<ImputationOutput> {
    impute_with_options(d, variant, settings, &FitOptions::default())
}

pub fn impute_with_options(
    d: &ObservedDataset,
    variant: &VariantSpec,
    settings: &FcsSettings,
    opts: &FitOptions,
) -> Result<ImputationOutput> {
    settings.validate()?;
    let models = prepare_models(d, variant)?;
    let factory = RngFactory::new(settings.seed);
    let mut completed = Vec::with_capacity(settings.imputations);
    let mut trace = Vec::new();

    for chain in 0..settings.imputations {
        let mut rng = factory.stream(&[0xFC5, chain as u64]);
        let mut working = d.clone();
        initial_fill(&mut working, &models, &mut rng)?;
        for cycle in 0..settings.cycles {
            fcs_cycle(&mut working, &models, opts, &mut rng)?;
            for m in &models {
                if m.impute_rows.is_empty() {
                    continue;
                }
                let col = working.column(&m.spec.target)?;
                let mean = m.impute_rows.iter().map(|&r| col.value(r)).sum::<f64>()
                    / m.impute_rows.len() as f64;
                trace.push(CycleTracePoint {
                    chain,
                    cycle,
                    target: m.spec.target.clone(),
                    imputed_mean: mean,
                });
            }
        }
        finalize_outcome(&mut working, variant)?;
        assert_observed_cells_intact(d, &working);
        completed.push(CompletedDataset::new(
            working,
            Provenance { imputation: chain, cycles: settings.cycles, seed: settings.seed },
        ));
    }

    let variables = diagnostics::diagnose_variables(d, &completed)?;
    let diagnostics = ImputationDiagnostics {
        variables,
        cycle_trace: trace,
        columns_referenced: variant.referenced_columns(),
        warn_threshold: diagnostics::DEFAULT_WARN_THRESHOLD,
    };
    Ok(ImputationOutput { completed, diagnostics })
}

/// For potential-outcome variants, fills still-missing factual outcome cells
/// from `Z*Y1 + (1-Z)*Y0`.
fn finalize_outcome(working: &mut ObservedDataset, variant: &VariantSpec) -> Result<()> {
    if !variant.kind.imputes_potential_outcomes() {
        return Ok(());
    }
    let n = working.n_rows();
    let z: Vec<f64> = working.exposure().values().to_vec();
    let y0: Vec<f64> = working
        .potential_outcome(0)
        .ok_or_else(|| Error::UnknownColumn("potential outcome 0".into()))?
        .values()
        .to_vec();
    let y1: Vec<f64> = working
        .potential_outcome(1)
        .ok_or_else(|| Error::UnknownColumn("potential outcome 1".into()))?
        .values()
        .to_vec();
    let y_name = working.outcome().name.clone();
    let col = working.column_mut(&y_name)?;
    for row in 0..n {
        if !col.is_observed(row) {
            col.set_value(row, z[row] * y1[row] + (1.0 - z[row]) * y0[row]);
        }
    }
    Ok(())
}

/// Hard internal fault if any originally observed cell changed.
fn assert_observed_cells_intact(original: &ObservedDataset, working: &ObservedDataset) {
    for (oc, wc) in original.columns().iter().zip(working.columns()) {
        for row in 0..original.n_rows() {
            if oc.is_observed(row) {
                assert!(
                    oc.value(row) == wc.value(row) || (oc.value(row).is_nan() && wc.value(row).is_nan()),
                    "observed cell overwritten: column `{}`, row {}",
                    oc.name,
                    row
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::sim::{generate_true_world, mask_to_observed, SimConfig};
    use rand::Rng;

    fn sim_dataset(n: usize, seed: u64) -> ObservedDataset {
        let cfg = SimConfig { n, ..SimConfig::default() };
        let rows = generate_true_world(&cfg, &mut RngFactory::new(seed).stream(&[0])).unwrap();
        mask_to_observed(&rows).unwrap()
    }

    #[test]
    fn variant_model_sets_match_design() {
        let d = sim_dataset(300, 1);

        let v = VariantSpec::for_dataset(VariantKind::PomiZ, &d).unwrap();
        let targets: Vec<&str> = v.models.iter().map(|m| m.target.as_str()).collect();
        assert_eq!(targets, vec!["x2", "r", "y0", "y1"]);
        assert!(!v.referenced_columns().contains("z"));
        assert_eq!(v.models[0].predictors, vec!["x1", "y0", "y1", "r"]);
        assert_eq!(v.models[1].predictors, vec!["x1", "x2", "y0", "y1"]);
        assert_eq!(v.models[2].predictors, vec!["x1", "x2", "y1", "r"]);
        assert_eq!(v.models[3].predictors, vec!["x1", "x2", "y0", "r"]);

        let v = VariantSpec::for_dataset(VariantKind::Pomi, &d).unwrap();
        assert_eq!(v.models[0].predictors, vec!["x1", "y0", "y1", "r", "z"]);
        assert_eq!(v.models[1].predictors, vec!["x1", "x2", "y0", "y1"]);

        let v = VariantSpec::for_dataset(VariantKind::PomiInd, &d).unwrap();
        assert_eq!(v.models[0].predictors, vec!["x1", "y0", "y1", "r", "z"]);
        assert_eq!(v.models[1].predictors, vec!["x1", "x2", "y1"]);
        assert_eq!(v.models[2].predictors, vec!["x1", "x2"]);
        assert_eq!(v.models[3].predictors, vec!["x1", "x2", "r"]);

        let v = VariantSpec::for_dataset(VariantKind::PomiIndR, &d).unwrap();
        let targets: Vec<&str> = v.models.iter().map(|m| m.target.as_str()).collect();
        assert_eq!(targets, vec!["x2", "y0", "y1"]);
        assert!(!v.referenced_columns().contains("r"));

        let v = VariantSpec::for_dataset(VariantKind::ObservedOnly, &d).unwrap();
        let targets: Vec<&str> = v.models.iter().map(|m| m.target.as_str()).collect();
        assert_eq!(targets, vec!["x2", "y"]);
        assert_eq!(v.models[0].predictors, vec!["x1", "y", "z"]);
        assert_eq!(v.models[1].predictors, vec!["x1", "x2", "z"]);
    }

    #[test]
    fn impute_produces_d_completed_datasets() {
        let d = sim_dataset(400, 2);
        let variant = VariantSpec::for_dataset(VariantKind::PomiInd, &d).unwrap();
        let settings = FcsSettings { imputations: 5, cycles: 3, seed: 9, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        assert_eq!(out.completed.len(), 5);
        let indices: Vec<usize> = out.completed.iter().map(|c| c.provenance.imputation).collect();
        assert_eq!(indices, vec![0, 1, 2, 3, 4]);
        // all potential-outcome cells are filled and binary
        for c in &out.completed {
            let (y0, y1) = c.potential_outcomes().unwrap();
            for row in 0..c.n_rows() {
                assert!(y0.value(row) == 0.0 || y0.value(row) == 1.0);
                assert!(y1.value(row) == 0.0 || y1.value(row) == 1.0);
            }
        }
    }

    #[test]
    fn impute_is_deterministic() {
        let d = sim_dataset(250, 3);
        let variant = VariantSpec::for_dataset(VariantKind::Pomi, &d).unwrap();
        let settings = FcsSettings { imputations: 3, cycles: 2, seed: 77, ..Default::default() };
        let a = impute(&d, &variant, &settings).unwrap();
        let b = impute(&d, &variant, &settings).unwrap();
        for (ca, cb) in a.completed.iter().zip(&b.completed) {
            for (col_a, col_b) in ca.data().columns().iter().zip(cb.data().columns()) {
                assert_eq!(col_a.values(), col_b.values());
            }
        }
    }

    #[test]
    fn observed_cells_survive_imputation() {
        let d = sim_dataset(300, 4);
        for kind in [
            VariantKind::PomiZ,
            VariantKind::Pomi,
            VariantKind::PomiInd,
            VariantKind::PomiIndR,
            VariantKind::ObservedOnly,
        ] {
            let variant = VariantSpec::for_dataset(kind, &d).unwrap();
            let settings = FcsSettings { imputations: 2, cycles: 2, seed: 5, ..Default::default() };
            let out = impute(&d, &variant, &settings).unwrap();
            for c in &out.completed {
                for (orig, comp) in d.columns().iter().zip(c.data().columns()) {
                    for row in 0..d.n_rows() {
                        if orig.is_observed(row) {
                            assert_eq!(orig.value(row), comp.value(row), "{kind:?} {}", orig.name);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn consistency_holds_where_outcome_observed() {
        let d = sim_dataset(350, 6);
        let variant = VariantSpec::for_dataset(VariantKind::PomiInd, &d).unwrap();
        let settings = FcsSettings { imputations: 2, cycles: 2, seed: 11, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        for c in &out.completed {
            let z = c.data().exposure();
            let y = c.data().outcome();
            let (y0, y1) = c.potential_outcomes().unwrap();
            for row in 0..c.n_rows() {
                if d.outcome().is_observed(row) {
                    let expected = z.value(row) * y1.value(row) + (1.0 - z.value(row)) * y0.value(row);
                    assert_eq!(y.value(row), expected);
                }
            }
        }
    }

    #[test]
    fn deterministic_relationship_recovered_exactly() {
        // single missing x2 cell with x2 = 3*x1 elsewhere: sigma2 = 0 makes
        // the imputed cell exactly 3*x1
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x2: Vec<Option<f64>> =
            vec![Some(3.0), Some(6.0), None, Some(12.0), Some(15.0), Some(18.0)];
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, x1),
            Column::new("x2", ColumnRole::CovariateContinuous, x2),
            Column::full("z", ColumnRole::Exposure, vec![0.0; 6]),
            Column::full("y", ColumnRole::Outcome, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        ])
        .unwrap();
        let variant = VariantSpec {
            kind: VariantKind::ObservedOnly,
            models: vec![ModelSpec {
                target: "x2".into(),
                predictors: vec!["x1".into()],
                family: ModelFamily::Linear,
            }],
        };
        let settings = FcsSettings { imputations: 2, cycles: 1, seed: 3, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        for c in &out.completed {
            assert!((c.column("x2").unwrap().value(2) - 9.0).abs() < 1e-9);
        }
    }

    #[test]
    fn no_missing_cells_is_identity() {
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, vec![0.1, 0.4, -0.2, 0.9]),
            Column::full("z", ColumnRole::Exposure, vec![0.0, 1.0, 0.0, 1.0]),
            Column::full("y", ColumnRole::Outcome, vec![0.0, 1.0, 1.0, 0.0]),
        ])
        .unwrap();
        let variant = VariantSpec { kind: VariantKind::ObservedOnly, models: vec![] };
        let settings = FcsSettings { imputations: 2, cycles: 4, seed: 1, ..Default::default() };
        let out = impute(&d, &variant, &settings).unwrap();
        for c in &out.completed {
            for (orig, comp) in d.columns().iter().zip(c.data().columns()) {
                assert_eq!(orig.values(), comp.values());
            }
        }
    }

    #[test]
    fn column_with_no_observed_values_errors() {
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, vec![0.1, 0.4, -0.2, 0.9]),
            Column::full("z", ColumnRole::Exposure, vec![1.0, 1.0, 1.0, 1.0]),
            Column::full("y", ColumnRole::Outcome, vec![0.0, 1.0, 1.0, 0.0]),
        ])
        .unwrap()
        .split_potential_outcomes()
        .unwrap();
        // z == 1 everywhere: y0 has no observed values
        let variant = VariantSpec::for_dataset(VariantKind::PomiIndR, &d).unwrap();
        let settings = FcsSettings { imputations: 2, cycles: 1, seed: 0, ..Default::default() };
        let err = impute(&d, &variant, &settings).unwrap_err();
        assert!(matches!(err, Error::NoObservedValues { .. }), "{err}");
    }

    #[test]
    fn initial_fill_constant_column_fills_constant() {
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, vec![0.5; 8]),
            Column::new(
                "x2",
                ColumnRole::CovariateContinuous,
                vec![Some(1.0), Some(1.0), None, Some(1.0), None, Some(1.0), Some(1.0), Some(1.0)],
            ),
            Column::full("z", ColumnRole::Exposure, vec![0.0; 8]),
            Column::full("y", ColumnRole::Outcome, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        ])
        .unwrap();
        let variant = VariantSpec {
            kind: VariantKind::ObservedOnly,
            models: vec![ModelSpec {
                target: "x2".into(),
                predictors: vec!["x1".into()],
                family: ModelFamily::Linear,
            }],
        };
        let models = prepare_models(&d, &variant).unwrap();
        let mut working = d.clone();
        let mut rng = RngFactory::new(0).stream(&[0]);
        initial_fill(&mut working, &models, &mut rng).unwrap();
        assert_eq!(working.column("x2").unwrap().value(2), 1.0);
        assert_eq!(working.column("x2").unwrap().value(4), 1.0);
    }

    #[test]
    fn initial_fill_marginal_frequency_matches_observed() {
        // y0 observed only on z = 0 rows with mean ~0.3; fills over z = 1
        // rows track that frequency
        let n = 100_000;
        let f = RngFactory::new(8);
        let mut rng = f.stream(&[1]);
        let z: Vec<f64> = (0..n).map(|i| f64::from(i % 2 == 0)).collect();
        let y: Vec<f64> = z.iter().map(|_| f64::from(rng.random::<f64>() < 0.3)).collect();
        let d = ObservedDataset::new(vec![
            Column::full("x1", ColumnRole::CovariateContinuous, vec![0.0; n]),
            Column::full("z", ColumnRole::Exposure, z),
            Column::full("y", ColumnRole::Outcome, y),
        ])
        .unwrap()
        .split_potential_outcomes()
        .unwrap();
        let variant = VariantSpec::for_dataset(VariantKind::PomiIndR, &d).unwrap();
        let models = prepare_models(&d, &variant).unwrap();
        let mut working = d.clone();
        let mut rng = f.stream(&[2]);
        initial_fill(&mut working, &models, &mut rng).unwrap();
        let y0 = working.potential_outcome(0).unwrap();
        let observed_mean = y0.observed_values().sum::<f64>() / y0.observed_values().count() as f64;
        let fill_rows: Vec<usize> = (0..n).filter(|&i| !y0.is_observed(i)).collect();
        let fill_mean =
            fill_rows.iter().map(|&i| y0.value(i)).sum::<f64>() / fill_rows.len() as f64;
        assert!((fill_mean - observed_mean).abs() < 0.01, "{fill_mean} vs {observed_mean}");
    }
}
