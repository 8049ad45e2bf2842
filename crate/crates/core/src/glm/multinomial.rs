//! Baseline-category multinomial logit fit by Newton's method on the
//! stacked score. Level 1 is the reference; the coefficient vector stacks
//! one block of design-column coefficients per level `2..=K`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::linear::chol_with_ridge;
use crate::glm::{FitOptions, FitResult, ModelFamily};

/// Category probabilities from linear predictors with `eta[0] = 0` for the
/// reference level. Overflow-safe softmax.
pub fn multinomial_probs(eta: &[f64]) -> Vec<f64> {
    let max = eta.iter().cloned().fold(0.0f64, f64::max);
    let exps: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    exps.iter().map(|e| e / denom).collect()
}

/// Single-pass accumulator of log-likelihood, score and observed information
/// at a fixed coefficient vector. Rows can be streamed; nothing is retained
/// but the running sums.
pub struct MultinomialPass {
    k: usize,
    p: usize,
    beta: DVector<f64>,
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
    eta: Vec<f64>,
    n: usize,
}

impl MultinomialPass {
    pub fn new(levels: u32, n_terms: usize, beta: &DVector<f64>) -> Self {
        let k = levels as usize;
        let m = (k - 1) * n_terms;
        assert_eq!(beta.len(), m, "coefficient length must be (levels-1) * terms");
        Self {
            k,
            p: n_terms,
            beta: beta.clone(),
            loglik: 0.0,
            score: DVector::zeros(m),
            info: DMatrix::zeros(m, m),
            eta: vec![0.0; k],
            n: 0,
        }
    }

    /// Adds one observation with design row `x` (length `n_terms`) and
    /// category code in `1..=levels`.
    pub fn add_row(&mut self, x: &[f64], code: u32) {
        debug_assert_eq!(x.len(), self.p);
        debug_assert!(code >= 1 && code <= self.k as u32);
        self.n += 1;
        self.eta[0] = 0.0;
        for l in 1..self.k {
            let block = (l - 1) * self.p;
            let mut acc = 0.0;
            for j in 0..self.p {
                acc += x[j] * self.beta[block + j];
            }
            self.eta[l] = acc;
        }
        let probs = multinomial_probs(&self.eta);
        self.loglik += probs[(code - 1) as usize].max(1e-300).ln();
        for a in 1..self.k {
            let resid = f64::from(code as usize == a + 1) - probs[a];
            let block_a = (a - 1) * self.p;
            for j in 0..self.p {
                self.score[block_a + j] += x[j] * resid;
            }
            // upper block rows of the observed information
            for b in a..self.k {
                let w = probs[a] * (f64::from(a == b) - probs[b]);
                let block_b = (b - 1) * self.p;
                for i in 0..self.p {
                    let xi = x[i] * w;
                    for j in 0..self.p {
                        self.info[(block_a + i, block_b + j)] += xi * x[j];
                    }
                }
            }
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Finishes the pass, returning `(loglik, score, observed information)`.
    pub fn finish(mut self) -> (f64, DVector<f64>, DMatrix<f64>) {
        let m = self.score.len();
        for a in 0..m {
            for b in 0..a {
                self.info[(a, b)] = self.info[(b, a)];
            }
        }
        (self.loglik, self.score, self.info)
    }
}

/// Log-likelihood over materialized data.
pub fn multinomial_loglik(x: &DMatrix<f64>, codes: &[u32], levels: u32, beta: &DVector<f64>) -> f64 {
    let mut pass = MultinomialPass::new(levels, x.ncols(), beta);
    let mut row = vec![0.0; x.ncols()];
    for (i, &code) in codes.iter().enumerate() {
        for j in 0..x.ncols() {
            row[j] = x[(i, j)];
        }
        pass.add_row(&row, code);
    }
    pass.finish().0
}

/// Score and observed information over materialized data.
pub fn multinomial_score_hessian(
    x: &DMatrix<f64>,
    codes: &[u32],
    levels: u32,
    beta: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut pass = MultinomialPass::new(levels, x.ncols(), beta);
    let mut row = vec![0.0; x.ncols()];
    for (i, &code) in codes.iter().enumerate() {
        for j in 0..x.ncols() {
            row[j] = x[(i, j)];
        }
        pass.add_row(&row, code);
    }
    let (_, score, info) = pass.finish();
    (score, info)
}

pub(crate) struct NewtonOutcome {
    pub beta: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    pub degraded: bool,
    pub clamped: bool,
}

/// Newton iteration with step-halving and a separation clamp, generic over
/// how `(loglik, score, information)` is computed so callers can stream
/// data instead of materializing it.
pub(crate) fn newton_fit(
    m: usize,
    opts: &FitOptions,
    response: &str,
    mut eval: impl FnMut(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
) -> Result<NewtonOutcome> {
    let mut beta = DVector::zeros(m);
    let (mut loglik, mut score, mut info) = eval(&beta);
    let mut converged = false;
    let mut degraded = false;
    let mut clamped = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        if score.amax() < opts.tol {
            converged = true;
            iterations = iter;
            break;
        }
        iterations = iter + 1;
        let (chol, used_ridge) = chol_with_ridge(&info, response)?;
        degraded |= used_ridge;
        let mut step = chol.solve(&score);

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
            let (cand_ll, cand_score, cand_info) = eval(&candidate);
            if cand_ll >= loglik - 1e-12 {
                beta = candidate;
                loglik = cand_ll;
                score = cand_score;
                info = cand_info;
                clamped |= hit_bound;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged && score.amax() < opts.tol {
        converged = true;
    }

    let (chol, used_ridge) = chol_with_ridge(&info, response)?;
    degraded |= used_ridge;
    let cov = chol.inverse();
    Ok(NewtonOutcome { beta, cov, converged, iterations, loglik, degraded, clamped })
}

pub fn fit_multinomial_raw(
    x: &DMatrix<f64>,
    codes: &[u32],
    levels: u32,
    term_names: Vec<String>,
    response: &str,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if levels < 2 {
        return Err(Error::InvalidConfig("multinomial needs at least 2 levels".into()));
    }
    if n < p + 2 {
        return Err(Error::TooFewRows { response: response.to_string(), rows: n, needed: p + 2 });
    }
    for (i, &c) in codes.iter().enumerate() {
        if c < 1 || c > levels {
            return Err(Error::CategoricalOutOfRange {
                column: response.to_string(),
                row: i,
                value: f64::from(c),
                levels,
            });
        }
    }

    let m = (levels as usize - 1) * p;
    let outcome = newton_fit(m, opts, response, |beta| {
        let mut pass = MultinomialPass::new(levels, p, beta);
        let mut row = vec![0.0; p];
        for (i, &code) in codes.iter().enumerate() {
            for j in 0..p {
                row[j] = x[(i, j)];
            }
            pass.add_row(&row, code);
        }
        pass.finish()
    })?;

    let stacked_names: Vec<String> = (2..=levels)
        .flat_map(|l| term_names.iter().map(move |t| format!("lvl{l}:{t}")))
        .collect();

    Ok(FitResult {
        family: ModelFamily::Multinomial { levels },
        term_names: stacked_names,
        coef: outcome.beta,
        coef_cov: outcome.cov,
        sigma2: None,
        xtx_inv: None,
        converged: outcome.converged,
        iterations: outcome.iterations,
        loglik: outcome.loglik,
        degraded: outcome.degraded,
        clamped: outcome.clamped,
        n_used: n,
    })
}

/// Fits a multinomial model where each Newton pass streams the data through
/// `for_each_row`, which must yield the same rows every call. Used for
/// fits too large to materialize.
pub fn fit_multinomial_streaming(
    n_terms: usize,
    levels: u32,
    opts: &FitOptions,
    response: &str,
    mut for_each_row: impl FnMut(&mut dyn FnMut(&[f64], u32)),
) -> Result<FitResult> {
    let m = (levels as usize - 1) * n_terms;
    let mut n_seen = 0usize;
    let outcome = newton_fit(m, opts, response, |beta| {
        let mut pass = MultinomialPass::new(levels, n_terms, beta);
        for_each_row(&mut |x, code| pass.add_row(x, code));
        n_seen = pass.n_rows();
        pass.finish()
    })?;
    let stacked_names: Vec<String> = (2..=levels)
        .flat_map(|l| (0..n_terms).map(move |t| format!("lvl{l}:t{t}")))
        .collect();
    Ok(FitResult {
        family: ModelFamily::Multinomial { levels },
        term_names: stacked_names,
        coef: outcome.beta,
        coef_cov: outcome.cov,
        sigma2: None,
        xtx_inv: None,
        converged: outcome.converged,
        iterations: outcome.iterations,
        loglik: outcome.loglik,
        degraded: outcome.degraded,
        clamped: outcome.clamped,
        n_used: n_seen,
    })
}
