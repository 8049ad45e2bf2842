//! Synthetic data generation: a trivariate-normal covariate/test-score
//! layer, logit models for exposure and both potential outcomes, and logit
//! missingness for one covariate and the outcome.
//!
//! All draws are pure functions of `(config, rng stream)`, so replicates can
//! run in parallel with bit-reproducible results.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnRole, ObservedDataset};
use crate::error::{Error, Result};
use crate::stats::expit;

/// Parameters of the synthetic world.
///
/// Linear predictors, with `x = (1, x1, x2)`:
/// - exposure:  `z_coefs . x + alpha * x1 * x2`
/// - untested outcome: `y0_coefs . x + beta1 * u`
/// - tested outcome:   `y1_coefs . x + r_effects[r-1] + beta2 * u`
/// - missingness of x2: `mx_coefs . (1, x1)`; of y: `my_coefs . (1, x1)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n: usize,
    /// Interaction coefficient in the exposure model.
    pub alpha: f64,
    /// Coefficient of the unmeasured predictor in the Y0 model.
    pub beta1: f64,
    /// Coefficient of the unmeasured predictor in the Y1 model.
    pub beta2: f64,
    pub mvn_mean: [f64; 3],
    pub mvn_cov: [[f64; 3]; 3],
    /// Cutpoints turning the latent test score into codes 1/2/3, inclusive
    /// on the left: code 1 iff `r* <= c0`, code 2 iff `c0 < r* <= c1`.
    pub r_cutpoints: (f64, f64),
    pub z_coefs: [f64; 3],
    pub y0_coefs: [f64; 3],
    pub y1_coefs: [f64; 3],
    /// Additive effects of test-result codes 1..3 in the Y1 model.
    pub r_effects: [f64; 3],
    pub mx_coefs: [f64; 2],
    pub my_coefs: [f64; 2],
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            alpha: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            mvn_mean: [0.0, 1.0, -1.0],
            mvn_cov: [[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]],
            r_cutpoints: (-0.747, 0.282),
            z_coefs: [-1.5, -1.0, 0.5],
            y0_coefs: [0.0, 0.5, 1.0],
            y1_coefs: [0.0, 0.5, 1.0],
            r_effects: [-1.5, -0.5, 1.0],
            mx_coefs: [-1.0, 0.2],
            my_coefs: [-2.5, 1.0],
            seed: 12345,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_cutpoints.0 >= self.r_cutpoints.1 {
            return Err(Error::BadCutpoints);
        }
        for i in 0..3 {
            for j in 0..3 {
                if (self.mvn_cov[i][j] - self.mvn_cov[j][i]).abs() > 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        // SPD check via factorization
        MvnSampler::new(&self.mvn_mean.to_vec(), &cov_matrix(&self.mvn_cov))?;
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        Ok(())
    }
}

fn cov_matrix(cov: &[[f64; 3]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| cov[i][j])
}

/// Multivariate normal sampler backed by a lower-triangular factor of the
/// covariance.
pub struct MvnSampler {
    mean: DVector<f64>,
    lower: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: &[f64], cov: &DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cov.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { mean: DVector::from_column_slice(mean), lower: chol.l() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let k = self.mean.len();
        let std: DVector<f64> = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
        &self.mean + &self.lower * std
    }
}

/// Draws one sample from `MVN(mean, cov)`.
pub fn draw_mvn<R: Rng + ?Sized>(mean: &[f64], cov: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    Ok(MvnSampler::new(mean, cov)?.sample(rng))
}

/// Codes a latent score into 1/2/3 using inclusive-left cutpoints.
pub fn categorize_r(r_star: f64, cutpoints: (f64, f64)) -> u8 {
    if r_star <= cutpoints.0 {
        1
    } else if r_star <= cutpoints.1 {
        2
    } else {
        3
    }
}

/// One row of the complete (never observable) world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueWorldRow {
    pub x1: f64,
    pub x2: f64,
    pub r_star: f64,
    pub r: u8,
    pub u: f64,
    pub z: u8,
    pub y0: u8,
    pub y1: u8,
    pub y: u8,
    pub mx: bool,
    pub my: bool,
}

/// Streams `n` rows of the complete world into `f` without materializing
/// them. The draw order per row is fixed, so output is bit-stable for a
/// given `(cfg, rng)`.
pub fn stream_true_world<R: Rng + ?Sized>(
    cfg: &SimConfig,
    n: usize,
    rng: &mut R,
    mut f: impl FnMut(&TrueWorldRow),
) -> Result<()> {
    cfg.validate()?;
    let mvn = MvnSampler::new(&cfg.mvn_mean.to_vec(), &cov_matrix(&cfg.mvn_cov))?;
    for _ in 0..n {
        let xv = mvn.sample(rng);
        let (x1, x2, r_star) = (xv[0], xv[1], xv[2]);
        let r = categorize_r(r_star, cfg.r_cutpoints);
        let u: f64 = StandardNormal.sample(rng);
        let eta_z = cfg.z_coefs[0] + cfg.z_coefs[1] * x1 + cfg.z_coefs[2] * x2 + cfg.alpha * x1 * x2;
        let z = u8::from(rng.random::<f64>() < expit(eta_z));
        let eta0 = cfg.y0_coefs[0] + cfg.y0_coefs[1] * x1 + cfg.y0_coefs[2] * x2 + cfg.beta1 * u;
        let y0 = u8::from(rng.random::<f64>() < expit(eta0));
        let eta1 = cfg.y1_coefs[0]
            + cfg.y1_coefs[1] * x1
            + cfg.y1_coefs[2] * x2
            + cfg.r_effects[(r - 1) as usize]
            + cfg.beta2 * u;
        let y1 = u8::from(rng.random::<f64>() < expit(eta1));
        let y = z * y1 + (1 - z) * y0;
        let mx = rng.random::<f64>() < expit(cfg.mx_coefs[0] + cfg.mx_coefs[1] * x1);
        let my = rng.random::<f64>() < expit(cfg.my_coefs[0] + cfg.my_coefs[1] * x1);
        f(&TrueWorldRow { x1, x2, r_star, r, u, z, y0, y1, y, mx, my });
    }
    Ok(())
}

/// Generates `cfg.n` rows of the complete world.
pub fn generate_true_world<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Vec<TrueWorldRow>> {
    let mut rows = Vec::with_capacity(cfg.n);
    stream_true_world(cfg, cfg.n, rng, |r| rows.push(*r))?;
    Ok(rows)
}

/// Applies the observation process: drops `U` and the latent score, hides
/// the test result for unexposed rows, hides `X2`/`Y` per their missingness
/// indicators, and splits the outcome into potential-outcome columns.
pub fn mask_to_observed(rows: &[TrueWorldRow]) -> Result<ObservedDataset> {
    let n = rows.len();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for row in rows {
        x1.push(row.x1);
        x2.push((!row.mx).then_some(row.x2));
        z.push(f64::from(row.z));
        r.push((row.z == 1).then_some(f64::from(row.r)));
        y.push((!row.my).then_some(f64::from(row.y)));
    }
    let d = ObservedDataset::new(vec![
        Column::full("x1", ColumnRole::CovariateContinuous, x1),
        Column::new("x2", ColumnRole::CovariateContinuous, x2),
        Column::full("z", ColumnRole::Exposure, z),
        Column::new("r", ColumnRole::PostExposure { levels: 3 }, r),
        Column::new("y", ColumnRole::Outcome, y),
    ])?;
    d.split_potential_outcomes()
}

/// Adds a synthetic unmeasured predictor `u = (center + y) * b1 + e`,
/// `e ~ N(0, sigma^2)`, for sensitivity analysis of the conditional
/// independence assumption. Rows with `Y` missing get pure noise `u = e`.
pub fn attach_sensitivity_u<R: Rng + ?Sized>(
    d: &ObservedDataset,
    b1: f64,
    sigma: f64,
    center: f64,
    rng: &mut R,
) -> Result<ObservedDataset> {
    let y = d.outcome();
    let mut noise_only = 0usize;
    let mut u = Vec::with_capacity(d.n_rows());
    for row in 0..d.n_rows() {
        let noise: f64 = StandardNormal.sample(rng);
        let e = sigma * noise;
        match y.get(row) {
            Some(v) => u.push((center + v) * b1 + e),
            None => {
                noise_only += 1;
                u.push(e);
            }
        }
    }
    if noise_only > 0 {
        log::info!(
            "attach_sensitivity_u: {noise_only} rows have missing outcome; their u is noise only"
        );
    }
    let mut columns: Vec<Column> = d.columns().to_vec();
    if columns.iter().any(|c| c.name == "u") {
        return Err(Error::DuplicateColumn("u".into()));
    }
    columns.push(Column::full("u", ColumnRole::Auxiliary, u));
    ObservedDataset::new(columns)
}
