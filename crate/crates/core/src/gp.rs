//! Kriging surrogate: Gaussian-process regression with a Matérn-3/2 kernel.
//!
//! The process has a constant mean (the sample mean of the targets) and an
//! anisotropic Matérn-3/2 covariance
//!
//! ```text
//! k(u, v) = s2 * (1 + sqrt(3) r) * exp(-sqrt(3) r),   r^2 = sum_i ((u_i - v_i) / l_i)^2
//! ```
//!
//! plus a nugget on the diagonal, expressed relative to the signal variance.
//! Hyperparameters maximize the log marginal likelihood. The signal variance
//! has a closed-form maximizer for fixed lengthscales and nugget, so the
//! numeric search only runs over `(log l, log nugget)`; the closed-form value
//! is clamped into its allowed box.
//!
//! Inputs are expected in unit-scaled coordinates; the lengthscale bounds are
//! relative to a unit range.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nelder_mead;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const MAX_NUGGET: f64 = 1e-1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub nugget: f64,
}

impl KernelParams {
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, nugget: f64) -> Self {
        Self {
            lengthscales: vec![lengthscale; dim],
            signal_variance,
            nugget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("lengthscales must be positive".into()));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidArgument("signal variance must be positive".into()));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(Error::InvalidArgument("nugget must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Matérn-3/2 covariance between two points.
pub fn kernel_matern32(u: &[f64], v: &[f64], params: &KernelParams) -> Result<f64> {
    if u.len() != v.len() || u.len() != params.lengthscales.len() {
        return Err(Error::DimensionMismatch {
            expected: params.lengthscales.len(),
            got: if u.len() != params.lengthscales.len() {
                u.len()
            } else {
                v.len()
            },
        });
    }
    Ok(params.signal_variance * matern32_corr(u, v, &params.lengthscales))
}

#[inline]
fn matern32_corr(u: &[f64], v: &[f64], lengthscales: &[f64]) -> f64 {
    let r2: f64 = u
        .iter()
        .zip(v)
        .zip(lengthscales)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum();
    let s = SQRT3 * r2.sqrt();
    (1.0 + s) * (-s).exp()
}

/// Hyperparameter search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Number of Nelder–Mead starts.
    pub restarts: usize,
    /// Likelihood evaluations allowed per start.
    pub max_evals: usize,
    pub lengthscale_bounds: (f64, f64),
    /// Signal-variance bounds relative to the target variance.
    pub variance_bounds: (f64, f64),
    pub nugget_bounds: (f64, f64),
    /// Extra starting point tried before the random starts, usually the
    /// previous fit's hyperparameters.
    pub warm_start: Option<KernelParams>,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_evals: 400,
            lengthscale_bounds: (1e-3, 1e2),
            variance_bounds: (1e-6, 1e2),
            nugget_bounds: (1e-8, 1e-1),
            warm_start: None,
        }
    }
}

/// A fitted Gaussian process.
#[derive(Clone, Debug)]
pub struct GpFit {
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    params: KernelParams,
    /// Lower Cholesky factor of `K + nugget * s2 * I`.
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    log_likelihood: f64,
}

fn check_inputs(inputs: &[Vec<f64>], targets: &[f64]) -> Result<usize> {
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if inputs.len() < 2 {
        return Err(Error::InvalidArgument("a GP fit needs at least 2 points".into()));
    }
    let d = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if targets.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument("targets must be finite".into()));
    }
    Ok(d)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Correlation matrix with `nugget` on the diagonal.
fn correlation_matrix(inputs: &[Vec<f64>], lengthscales: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = inputs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0 + nugget;
        for j in 0..i {
            let c = matern32_corr(&inputs[i], &inputs[j], lengthscales);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

/// Log marginal likelihood of centered targets under the given
/// hyperparameters; `None` if the covariance is not positive definite.
pub fn log_marginal_likelihood(inputs: &[Vec<f64>], targets: &[f64], params: &KernelParams) -> Option<f64> {
    let y_mean = mean(targets);
    let yc = DVector::from_iterator(targets.len(), targets.iter().map(|y| y - y_mean));
    let a = correlation_matrix(inputs, &params.lengthscales, params.nugget);
    let chol = a.cholesky()?;
    let quad = yc.dot(&chol.solve(&yc));
    Some(lml_from_parts(quad, &chol.l(), params.signal_variance))
}

fn lml_from_parts(quad: f64, l: &DMatrix<f64>, s2: f64) -> f64 {
    let n = l.nrows() as f64;
    let log_det: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * quad / s2 - 0.5 * n * s2.ln() - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

impl GpFit {
    /// Conditions the process on data with fixed hyperparameters.
    ///
    /// If the covariance cannot be factorized the nugget is multiplied by
    /// ten, up to `0.1`, before giving up with [`Error::FitFailure`].
    pub fn with_params(inputs: &[Vec<f64>], targets: &[f64], params: KernelParams) -> Result<Self> {
        let d = check_inputs(inputs, targets)?;
        params.validate()?;
        if params.lengthscales.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: params.lengthscales.len(),
            });
        }
        let y_mean = mean(targets);
        let yc = DVector::from_iterator(targets.len(), targets.iter().map(|y| y - y_mean));
        let mut params = params;
        loop {
            let a = correlation_matrix(inputs, &params.lengthscales, params.nugget);
            if let Some(chol) = a.cholesky() {
                let s2 = params.signal_variance;
                let w = chol.solve(&yc);
                let quad = yc.dot(&w);
                let l = chol.l();
                let log_likelihood = lml_from_parts(quad, &l, s2);
                return Ok(Self {
                    inputs: inputs.to_vec(),
                    y_mean,
                    chol: l * s2.sqrt(),
                    alpha: w / s2,
                    params,
                    log_likelihood,
                });
            }
            if params.nugget >= MAX_NUGGET {
                return Err(Error::FitFailure(
                    "covariance matrix is not positive definite at the largest nugget".into(),
                ));
            }
            params.nugget = (params.nugget.max(1e-10) * 10.0).min(MAX_NUGGET);
        }
    }

    /// Maximum-likelihood fit with multi-start Nelder–Mead over log
    /// lengthscales and log nugget.
    pub fn fit<R: Rng + ?Sized>(inputs: &[Vec<f64>], targets: &[f64], config: &GpConfig, rng: &mut R) -> Result<Self> {
        let d = check_inputs(inputs, targets)?;
        let n = targets.len() as f64;
        let y_mean = mean(targets);
        let var_y = targets.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n;
        let var_ref = var_y.max(1e-12 * y_mean.abs().max(1.0).powi(2));
        let s2_range = (config.variance_bounds.0 * var_ref, config.variance_bounds.1 * var_ref);
        let yc = DVector::from_iterator(targets.len(), targets.iter().map(|y| y - y_mean));

        let (ll, lu) = (config.lengthscale_bounds.0.ln(), config.lengthscale_bounds.1.ln());
        let (gl, gu) = (config.nugget_bounds.0.ln(), config.nugget_bounds.1.ln());
        let mut bounds = vec![(ll, lu); d];
        bounds.push((gl, gu));
        let step: Vec<f64> = bounds.iter().map(|(l, u)| 0.1 * (u - l)).collect();

        // negative profiled log likelihood and the signal variance it implies
        let profile = |theta: &[f64]| -> Option<(f64, f64)> {
            let ls: Vec<f64> = theta[..d].iter().map(|t| t.exp()).collect();
            let a = correlation_matrix(inputs, &ls, theta[d].exp());
            let chol = a.cholesky()?;
            let quad = yc.dot(&chol.solve(&yc));
            let s2 = (quad / n).clamp(s2_range.0, s2_range.1);
            Some((-lml_from_parts(quad, &chol.l(), s2), s2))
        };
        let objective = |theta: &[f64]| profile(theta).map_or(f64::INFINITY, |p| p.0);

        let mut starts: Vec<Vec<f64>> = Vec::new();
        match &config.warm_start {
            Some(p) if p.lengthscales.len() == d => {
                let mut t: Vec<f64> = p.lengthscales.iter().map(|l| l.ln()).collect();
                t.push(p.nugget.max(config.nugget_bounds.0).ln());
                starts.push(t);
            }
            _ => {
                let mut t = vec![(0.3f64).ln().clamp(ll, lu); d];
                t.push((1e-6f64).ln().clamp(gl, gu));
                starts.push(t);
            }
        }
        let (il, iu) = ((1e-2f64).ln().max(ll), (10f64).ln().min(lu));
        while starts.len() < config.restarts.max(1) {
            let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(il..=iu)).collect();
            t.push(rng.random_range(gl..=gu));
            starts.push(t);
        }

        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in &starts {
            let m = nelder_mead::minimize(objective, start, &step, &bounds, config.max_evals, 1e-8);
            if m.value.is_finite() && best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                best = Some((m.value, m.x));
            }
        }
        let theta = match best {
            Some((_, theta)) => theta,
            None => {
                // every start failed to factorize: fall back to the largest nugget
                let mut t = starts[0].clone();
                t[d] = gu;
                t
            }
        };
        let s2 = profile(&theta).map_or(var_ref, |p| p.1);
        let params = KernelParams {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: s2,
            nugget: theta[d].exp(),
        };
        Self::with_params(inputs, targets, params)
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn dim(&self) -> usize {
        self.params.lengthscales.len()
    }

    pub fn n_train(&self) -> usize {
        self.inputs.len()
    }

    /// Posterior mean and standard error of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let s2 = self.params.signal_variance;
        let k = DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|xi| s2 * matern32_corr(x, xi, &self.params.lengthscales)),
        );
        let mean = k.dot(&self.alpha) + self.y_mean;
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .expect("cholesky factor has a positive diagonal");
        let var = (s2 - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }
}
