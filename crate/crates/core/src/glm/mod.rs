//! Regression kernels for the imputation engine: ordinary least squares,
//! IRLS logistic regression, and a baseline-category multinomial logit, each
//! with approximate-Bayesian parameter draws around the MLE.
//!
//! Fits are computed from a design built out of dataset columns; categorical
//! predictors expand to indicator contrasts with the lowest code as the
//! reference level.

mod linear;
mod logistic;
mod multinomial;

pub use linear::fit_linear_raw;
pub use logistic::{fit_logistic_raw, logistic_loglik, logistic_score};
pub use multinomial::{
    fit_multinomial_raw, fit_multinomial_streaming, multinomial_loglik, multinomial_probs,
    multinomial_score_hessian, MultinomialPass,
};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::stats::expit;

/// Which conditional model a column gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    Linear,
    Logistic,
    /// Baseline-category logit with codes `1..=levels`; level 1 is the
    /// reference.
    Multinomial { levels: u32 },
}

/// A response, its predictors, and whether to include an intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub response: String,
    pub predictors: Vec<String>,
    pub include_intercept: bool,
}

impl DesignSpec {
    pub fn new(response: impl Into<String>, predictors: Vec<String>) -> Self {
        Self { response: response.into(), predictors, include_intercept: true }
    }

    fn validate(&self) -> Result<()> {
        if self.predictors.iter().any(|p| *p == self.response) {
            return Err(Error::ResponseIsPredictor { response: self.response.clone() });
        }
        Ok(())
    }
}

/// Fitted model: point estimates, an approximate coefficient covariance, and
/// convergence/robustness flags.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub family: ModelFamily,
    pub term_names: Vec<String>,
    pub coef: DVector<f64>,
    /// Inverse observed information (logistic/multinomial) or
    /// `sigma2 * (X'X)^-1` (linear).
    pub coef_cov: DMatrix<f64>,
    /// Residual variance; linear fits only.
    pub sigma2: Option<f64>,
    /// `(X'X)^-1`; linear fits only, kept for scaled posterior draws.
    pub(crate) xtx_inv: Option<DMatrix<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    /// Ridge jitter was needed to invert a rank-deficient system.
    pub degraded: bool,
    /// Coefficients hit the separation clamp.
    pub clamped: bool,
    pub n_used: usize,
}

/// One approximate posterior draw of a fit's parameters.
#[derive(Debug, Clone)]
pub struct ParamDraw {
    pub coef: DVector<f64>,
    pub sigma2: Option<f64>,
    /// Covariance needed an eigenvalue floor to be factorized.
    pub cov_floored: bool,
}

/// Iteration controls for the GLM fitters.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute score component.
    pub tol: f64,
    /// Separation clamp: coefficients are held inside `[-bound, bound]`.
    pub coef_bound: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-8, coef_bound: 30.0, max_halvings: 10 }
    }
}

/// Builds the design matrix for `predictors` over `rows`, reading raw cell
/// values (the imputation engine guarantees referenced cells are filled).
/// Returns the matrix and one name per column.
pub fn build_design(
    data: &ObservedDataset,
    predictors: &[String],
    include_intercept: bool,
    rows: &[usize],
) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut names = Vec::new();
    if include_intercept {
        names.push("(intercept)".to_string());
    }
    // (column index in data, offset level or None)
    let mut sources: Vec<(usize, Option<u32>)> = Vec::new();
    if include_intercept {
        sources.push((usize::MAX, None)); // placeholder for intercept
    }
    for name in predictors {
        let idx = data
            .columns()
            .iter()
            .position(|c| &c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        match data.columns()[idx].role.categorical_levels() {
            Some(levels) if levels >= 2 => {
                for level in 2..=levels {
                    names.push(format!("{name}={level}"));
                    sources.push((idx, Some(level)));
                }
            }
            _ => {
                names.push(name.clone());
                sources.push((idx, None));
            }
        }
    }
    let x = DMatrix::from_fn(rows.len(), sources.len(), |i, j| {
        let (col, level) = sources[j];
        if col == usize::MAX {
            1.0
        } else {
            let v = data.columns()[col].value(rows[i]);
            match level {
                Some(l) => f64::from(v == f64::from(l)),
                None => v,
            }
        }
    });
    Ok((x, names))
}

fn response_vector(data: &ObservedDataset, response: &str, rows: &[usize]) -> Result<DVector<f64>> {
    let col = data.column(response)?;
    Ok(DVector::from_fn(rows.len(), |i, _| col.value(rows[i])))
}

/// OLS fit of `spec` on `rows`.
pub fn fit_linear(data: &ObservedDataset, spec: &DesignSpec, rows: &[usize]) -> Result<FitResult> {
    spec.validate()?;
    let (x, names) = build_design(data, &spec.predictors, spec.include_intercept, rows)?;
    let y = response_vector(data, &spec.response, rows)?;
    fit_linear_raw(&x, &y, names, &spec.response)
}

/// Logistic MLE of `spec` on `rows` via iteratively reweighted least squares.
pub fn fit_logistic(
    data: &ObservedDataset,
    spec: &DesignSpec,
    rows: &[usize],
    opts: &FitOptions,
) -> Result<FitResult> {
    spec.validate()?;
    let (x, names) = build_design(data, &spec.predictors, spec.include_intercept, rows)?;
    let y = response_vector(data, &spec.response, rows)?;
    fit_logistic_raw(&x, &y, names, &spec.response, opts)
}

/// Baseline-category multinomial MLE of `spec` on `rows`.
pub fn fit_multinomial(
    data: &ObservedDataset,
    spec: &DesignSpec,
    rows: &[usize],
    levels: u32,
    opts: &FitOptions,
) -> Result<FitResult> {
    spec.validate()?;
    let (x, names) = build_design(data, &spec.predictors, spec.include_intercept, rows)?;
    let col = data.column(&spec.response)?;
    let codes: Vec<u32> = rows.iter().map(|&r| col.value(r) as u32).collect();
    fit_multinomial_raw(&x, &codes, levels, names, &spec.response, opts)
}

/// Dispatches on the model family.
pub fn fit_model(
    data: &ObservedDataset,
    spec: &DesignSpec,
    family: ModelFamily,
    rows: &[usize],
    opts: &FitOptions,
) -> Result<FitResult> {
    match family {
        ModelFamily::Linear => fit_linear(data, spec, rows),
        ModelFamily::Logistic => fit_logistic(data, spec, rows, opts),
        ModelFamily::Multinomial { levels } => fit_multinomial(data, spec, rows, levels, opts),
    }
}

/// Draws parameters from the asymptotic posterior approximation: for linear
/// fits, `sigma2` from its scaled inverse chi-square and coefficients from
/// `N(mle, sigma2_draw * (X'X)^-1)`; for logistic/multinomial fits,
/// coefficients from `N(mle, coef_cov)`.
pub fn draw_params<R: Rng + ?Sized>(fit: &FitResult, rng: &mut R) -> Result<ParamDraw> {
    let p = fit.coef.len();
    match fit.family {
        ModelFamily::Linear => {
            let sigma2 = fit.sigma2.unwrap_or(0.0);
            let df = (fit.n_used - p) as f64;
            if sigma2 <= 0.0 || df <= 0.0 {
                return Ok(ParamDraw { coef: fit.coef.clone(), sigma2: Some(0.0), cov_floored: false });
            }
            let chi2: f64 = ChiSquared::new(df)
                .map_err(|e| Error::FitFailed { response: "sigma2 draw".into(), reason: e.to_string() })?
                .sample(rng);
            let sigma2_draw = sigma2 * df / chi2.max(1e-300);
            let xtx_inv = fit.xtx_inv.as_ref().expect("linear fit stores (X'X)^-1");
            let (l, floored) = psd_cholesky(&(xtx_inv * sigma2_draw))?;
            let std: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
            Ok(ParamDraw { coef: &fit.coef + l * std, sigma2: Some(sigma2_draw), cov_floored: floored })
        }
        ModelFamily::Logistic | ModelFamily::Multinomial { .. } => {
            if fit.coef_cov.iter().all(|&v| v == 0.0) {
                return Ok(ParamDraw { coef: fit.coef.clone(), sigma2: None, cov_floored: false });
            }
            let (l, floored) = psd_cholesky(&fit.coef_cov)?;
            let std: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
            Ok(ParamDraw { coef: &fit.coef + l * std, sigma2: None, cov_floored: floored })
        }
    }
}

/// Lower-triangular factor of a symmetric matrix, flooring eigenvalues at
/// 1e-10 when plain Cholesky fails. Returns the factor and whether the floor
/// was needed.
fn psd_cholesky(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok((chol.l(), false));
    }
    let mut eig = m.clone().symmetric_eigen();
    for v in eig.eigenvalues.iter_mut() {
        *v = v.max(1e-10);
    }
    let rebuilt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues)
        * eig.eigenvectors.transpose();
    let chol = Cholesky::new(rebuilt).ok_or(Error::NotPositiveDefinite)?;
    Ok((chol.l(), true))
}

/// Imputes values for the rows of `x` from one parameter draw: linear adds
/// residual noise, logistic draws Bernoulli at the fitted probability, and
/// multinomial draws a category code from the baseline-logit probabilities.
pub fn impute_cells<R: Rng + ?Sized>(
    family: ModelFamily,
    draw: &ParamDraw,
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Vec<f64> {
    let n = x.nrows();
    match family {
        ModelFamily::Linear => {
            let eta = x * &draw.coef;
            let sd = draw.sigma2.unwrap_or(0.0).max(0.0).sqrt();
            (0..n)
                .map(|i| {
                    let noise: f64 = if sd > 0.0 { StandardNormal.sample(rng) } else { 0.0 };
                    eta[i] + sd * noise
                })
                .collect()
        }
        ModelFamily::Logistic => {
            let eta = x * &draw.coef;
            (0..n).map(|i| f64::from(rng.random::<f64>() < expit(eta[i]))).collect()
        }
        ModelFamily::Multinomial { levels } => {
            let k = levels as usize;
            let p = x.ncols();
            let mut out = Vec::with_capacity(n);
            let mut eta = vec![0.0f64; k];
            for i in 0..n {
                eta[0] = 0.0;
                for l in 1..k {
                    let block = (l - 1) * p;
                    let mut acc = 0.0;
                    for j in 0..p {
                        acc += x[(i, j)] * draw.coef[block + j];
                    }
                    eta[l] = acc;
                }
                let probs = multinomial_probs(&eta);
                let mut u = rng.random::<f64>();
                let mut code = k;
                for (l, &pr) in probs.iter().enumerate() {
                    if u < pr {
                        code = l + 1;
                        break;
                    }
                    u -= pr;
                }
                out.push(code.min(k) as f64);
            }
            out
        }
    }
}
