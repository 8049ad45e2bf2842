//! Ordinary least squares via the normal equations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::{FitResult, ModelFamily};

const RIDGE: f64 = 1e-8;

/// Solves a symmetric system, falling back to a small ridge jitter when the
/// matrix is rank deficient. Returns the factorization and whether the ridge
/// was needed.
pub(crate) fn chol_with_ridge(m: &DMatrix<f64>, response: &str) -> Result<(Cholesky<f64, nalgebra::Dyn>, bool)> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok((chol, false));
    }
    let scale = m.diagonal().amax().max(1.0);
    let jittered = m + DMatrix::identity(m.nrows(), m.ncols()) * (RIDGE * scale);
    match Cholesky::new(jittered) {
        Some(chol) => Ok((chol, true)),
        None => Err(Error::FitFailed {
            response: response.to_string(),
            reason: "normal equations not positive definite even with ridge jitter".into(),
        }),
    }
}

pub fn fit_linear_raw(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    term_names: Vec<String>,
    response: &str,
) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if n < p + 2 {
        return Err(Error::TooFewRows { response: response.to_string(), rows: n, needed: p + 2 });
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let (chol, degraded) = chol_with_ridge(&xtx, response)?;
    let coef = chol.solve(&xty);
    let residuals = y - x * &coef;
    let rss = residuals.dot(&residuals).max(0.0);
    let sigma2 = rss / (n - p) as f64;
    let xtx_inv = chol.inverse();
    let coef_cov = &xtx_inv * sigma2;
    let loglik = if sigma2 > 0.0 {
        -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        family: ModelFamily::Linear,
        term_names,
        coef,
        coef_cov,
        sigma2: Some(sigma2),
        xtx_inv: Some(xtx_inv),
        converged: true,
        iterations: 1,
        loglik,
        degraded,
        clamped: false,
        n_used: n,
    })
}
