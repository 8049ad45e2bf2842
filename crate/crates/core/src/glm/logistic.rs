//! Logistic regression via iteratively reweighted least squares with
//! step-halving and a separation clamp.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::linear::chol_with_ridge;
use crate::glm::{FitOptions, FitResult, ModelFamily};
use crate::stats::expit;

/// Bernoulli log-likelihood at `beta`, computed with the overflow-safe
/// `ln(1 + e^eta)` form.
pub fn logistic_loglik(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    let mut ll = 0.0;
    for i in 0..x.nrows() {
        let e = eta[i];
        ll += y[i] * e - (e.max(0.0) + (-e.abs()).exp().ln_1p());
    }
    ll
}

/// Score vector `X'(y - mu)` at `beta`.
pub fn logistic_score(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let eta = x * beta;
    let resid = DVector::from_fn(x.nrows(), |i, _| y[i] - expit(eta[i]));
    x.transpose() * resid
}

fn information(x: &DMatrix<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = x * beta;
    let p = x.ncols();
    let mut info = DMatrix::zeros(p, p);
    for i in 0..x.nrows() {
        let mu = expit(eta[i]).clamp(1e-10, 1.0 - 1e-10);
        let w = mu * (1.0 - mu);
        for a in 0..p {
            let xa = x[(i, a)] * w;
            for b in a..p {
                info[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    info
}

pub fn fit_logistic_raw(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    term_names: Vec<String>,
    response: &str,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if n < p + 2 {
        return Err(Error::TooFewRows { response: response.to_string(), rows: n, needed: p + 2 });
    }
    for i in 0..n {
        if y[i] != 0.0 && y[i] != 1.0 {
            return Err(Error::NonBinary { column: response.to_string(), row: i, value: y[i] });
        }
    }

    let mut beta = DVector::zeros(p);
    let mut loglik = logistic_loglik(x, y, &beta);
    let mut converged = false;
    let mut degraded = false;
    let mut clamped = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let score = logistic_score(x, y, &beta);
        if score.amax() < opts.tol {
            converged = true;
            iterations = iter;
            break;
        }
        let info = information(x, &beta);
        let (chol, used_ridge) = chol_with_ridge(&info, response)?;
        degraded |= used_ridge;
        let mut step = chol.solve(&score);

        // step-halving keeps the log-likelihood non-decreasing
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut candidate = &beta + &step;
            let mut hit_bound = false;
            for v in candidate.iter_mut() {
                if v.abs() > opts.coef_bound {
                    *v = v.signum() * opts.coef_bound;
                    hit_bound = true;
                }
            }
            let candidate_ll = logistic_loglik(x, y, &candidate);
            if candidate_ll >= loglik - 1e-12 {
                beta = candidate;
                loglik = candidate_ll;
                clamped |= hit_bound;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // no improving step; leave converged = false unless score small
        }
    }
    if !converged && logistic_score(x, y, &beta).amax() < opts.tol {
        converged = true;
    }

    let info = information(x, &beta);
    let (chol, used_ridge) = chol_with_ridge(&info, response)?;
    degraded |= used_ridge;
    let coef_cov = chol.inverse();

    Ok(FitResult {
        family: ModelFamily::Logistic,
        term_names,
        coef: beta,
        coef_cov,
        sigma2: None,
        xtx_inv: None,
        converged,
        iterations,
        loglik,
        degraded,
        clamped,
        n_used: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> FitOptions {
        FitOptions::default()
    }

    #[test]
    fn intercept_only_balanced_gives_zero() {
        let x = DMatrix::from_element(4, 1, 1.0);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let fit = fit_logistic_raw(&x, &y, vec!["(intercept)".into()], "y", &opts()).unwrap();
        assert!(fit.converged);
        assert!(fit.coef[0].abs() < 1e-8);
    }

    #[test]
    fn intercept_only_three_to_one() {
        let x = DMatrix::from_element(4, 1, 1.0);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0]);
        let fit = fit_logistic_raw(&x, &y, vec!["(intercept)".into()], "y", &opts()).unwrap();
        assert!((fit.coef[0] - 3f64.ln()).abs() < 1e-6, "coef = {}", fit.coef[0]);
    }

    #[test]
    fn matches_grid_search_oracle() {
        // 8-point two-predictor dataset; oracle = exhaustive likelihood grid
        let x = DMatrix::from_row_slice(
            8,
            2,
            &[
                1.0, -1.2, 1.0, -0.8, 1.0, -0.3, 1.0, -0.1, //
                1.0, 0.2, 1.0, 0.7, 1.0, 1.1, 1.0, 1.6,
            ],
        );
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let fit = fit_logistic_raw(&x, &y, vec!["b0".into(), "b1".into()], "y", &opts()).unwrap();

        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps {
                let b0 = -3.0 + 6.0 * i as f64 / steps as f64;
                let b1 = -3.0 + 6.0 * j as f64 / steps as f64;
                let ll = logistic_loglik(&x, &y, &DVector::from_vec(vec![b0, b1]));
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        // grid pitch is 0.015, so the maximizer is within ~0.0075 per axis;
        // agree to 1e-2 and refine the check via the likelihood itself
        assert!((fit.coef[0] - best.1).abs() < 1.5e-2, "{} vs {}", fit.coef[0], best.1);
        assert!((fit.coef[1] - best.2).abs() < 1.5e-2, "{} vs {}", fit.coef[1], best.2);
        assert!(fit.loglik >= best.0 - 1e-9);
    }

    #[test]
    fn separation_clamps_instead_of_diverging() {
        let x = DMatrix::from_row_slice(6, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, -0.5, 1.0, 0.5, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let fit = fit_logistic_raw(&x, &y, vec!["b0".into(), "b1".into()], "y", &opts()).unwrap();
        assert!(fit.clamped);
        assert!(fit.coef.amax() <= 30.0 + 1e-12);
    }

    #[test]
    fn loglik_nondecreasing_over_iterations() {
        // replay the fit manually and check monotonicity of the path
        let x = DMatrix::from_row_slice(
            10,
            2,
            &[
                1.0, 0.3, 1.0, -1.4, 1.0, 2.2, 1.0, 0.9, 1.0, -0.2, //
                1.0, 1.4, 1.0, -0.6, 1.0, 0.1, 1.0, -1.9, 1.0, 0.8,
            ],
        );
        let y = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let mut beta = DVector::zeros(2);
        let mut prev = logistic_loglik(&x, &y, &beta);
        for _ in 0..30 {
            let score = logistic_score(&x, &y, &beta);
            if score.amax() < 1e-10 {
                break;
            }
            let info = information(&x, &beta);
            let step = chol_with_ridge(&info, "y").unwrap().0.solve(&score);
            beta += step;
            let ll = logistic_loglik(&x, &y, &beta);
            assert!(ll >= prev - 1e-9, "log-likelihood decreased: {prev} -> {ll}");
            prev = ll;
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let x = DMatrix::from_row_slice(6, 2, &[1.0, 0.5, 1.0, -0.7, 1.0, 1.2, 1.0, 0.1, 1.0, -1.5, 1.0, 0.9]);
        let y = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let beta = DVector::from_vec(vec![0.3, -0.8]);
        let analytic = logistic_score(&x, &y, &beta);
        let h = 1e-5;
        for j in 0..2 {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let numeric = (logistic_loglik(&x, &y, &up) - logistic_loglik(&x, &y, &dn)) / (2.0 * h);
            let rel = (analytic[j] - numeric).abs() / numeric.abs().max(1.0);
            assert!(rel < 1e-6, "component {j}: {} vs {}", analytic[j], numeric);
        }
    }
}
