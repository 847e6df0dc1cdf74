//! Gaussian mixture representation, density evaluation, and the mixture
//! complexity estimator.
//!
//! Mixture complexity (MC) of a model `f = Σ_k π_k g_k` over data points
//! `x_1..x_N` with optional weights `w_n` is the weighted average over points
//! of `Σ_k (π_k g_k(x) / f(x)) · log(g_k(x) / f(x))`, an empirical estimate
//! of the mutual information between the latent component index and the
//! observation. `exp(MC)` reads as a continuous cluster count.
//!
//! All densities are evaluated in log space; ratios against the mixture
//! density go through `exp(log g - log f)` so that widely separated
//! components cannot overflow, and a term whose responsibility underflows to
//! zero contributes zero (the `0·log 0 = 0` convention).

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{fp, log_sum_exp, log_underflow_threshold, neg_half_log_two_pi};
use crate::Scalar;

/// Covariance ridge added before factorization by the default constructors.
pub const DEFAULT_REGULARIZATION: f64 = 1e-6;

/// Tolerance for the symmetry check on covariance matrices.
const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Tolerance for "weights sum to one" checks.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Gaussian component
// ---------------------------------------------------------------------------

/// A single multivariate Gaussian with precomputed Cholesky factor.
///
/// The factorization is taken of `Σ + ε I`; densities are therefore those of
/// the (slightly) regularized covariance, which keeps near-singular
/// components evaluable.
#[derive(Debug, Clone)]
pub struct GaussianComponent<S> {
    mean: Vec<S>,
    covariance: Vec<S>,
    chol: Vec<S>,
    log_norm: S,
}

impl<S: Scalar> GaussianComponent<S> {
    /// Component with the default covariance ridge.
    pub fn new(mean: Vec<S>, covariance: Vec<S>) -> Result<Self> {
        Self::with_regularization(mean, covariance, fp(DEFAULT_REGULARIZATION))
    }

    /// Component with an explicit covariance ridge (zero is allowed when the
    /// covariance is safely positive definite on its own).
    pub fn with_regularization(mean: Vec<S>, covariance: Vec<S>, ridge: S) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::InvalidInput("component dimension must be >= 1".into()));
        }
        if covariance.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "covariance must be {dim}x{dim}, got {} entries",
                covariance.len()
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("component parameters must be finite".into()));
        }
        if ridge < S::zero() {
            return Err(Error::InvalidInput("covariance ridge must be >= 0".into()));
        }
        if !linalg::is_symmetric(&covariance, dim, fp(SYMMETRY_TOLERANCE)) {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }
        let mut covariance = covariance;
        linalg::symmetrize(&mut covariance, dim);
        let mut regularized = covariance.clone();
        for i in 0..dim {
            regularized[i * dim + i] += ridge;
        }
        let chol = linalg::cholesky(&regularized, dim).ok_or_else(|| {
            Error::InvalidInput("covariance is not positive definite after regularization".into())
        })?;
        let log_norm = neg_half_log_two_pi::<S>(dim)
            - fp::<S>(0.5) * linalg::log_det_from_cholesky(&chol, dim);
        Ok(Self { mean, covariance, chol, log_norm })
    }

    /// Spherical component `N(mean, variance · I)`.
    pub fn isotropic(mean: Vec<S>, variance: S) -> Result<Self> {
        let dim = mean.len();
        let mut covariance = vec![S::zero(); dim * dim];
        for i in 0..dim {
            covariance[i * dim + i] = variance;
        }
        Self::new(mean, covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// The stored covariance (without the ridge used for factorization).
    pub fn covariance(&self) -> &[S] {
        &self.covariance
    }

    /// Log-density at `x`; `x` must have the component's dimension.
    pub fn log_density_at(&self, x: &[S]) -> S {
        let dim = self.dim();
        debug_assert_eq!(x.len(), dim);
        // Stack buffer for the usual small dimensions; this sits on the
        // innermost loop of every fit.
        let mut stack = [S::zero(); 8];
        let mut heap;
        let diff: &mut [S] = if dim <= stack.len() {
            &mut stack[..dim]
        } else {
            heap = vec![S::zero(); dim];
            &mut heap
        };
        for i in 0..dim {
            diff[i] = x[i] - self.mean[i];
        }
        linalg::solve_lower_in_place(&self.chol, dim, diff);
        let quad: S = diff.iter().map(|v| *v * *v).sum();
        self.log_norm - fp::<S>(0.5) * quad
    }
}

// ---------------------------------------------------------------------------
// Mixture model
// ---------------------------------------------------------------------------

/// Weights plus Gaussian components for one dataset or stream window.
///
/// Zero weights are allowed; weights must be non-negative and sum to one
/// within `1e-9`.
#[derive(Debug, Clone)]
pub struct MixtureModel<S> {
    weights: Vec<S>,
    components: Vec<GaussianComponent<S>>,
}

impl<S: Scalar> MixtureModel<S> {
    pub fn new(weights: Vec<S>, components: Vec<GaussianComponent<S>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
        }
        let sum: S = weights.iter().copied().sum();
        if (sum - S::one()).abs() > fp(WEIGHT_SUM_TOLERANCE) {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, expected 1")));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidInput("components must share one dimension".into()));
        }
        Ok(Self { weights, components })
    }

    /// Bypass validation; test hook for deliberately broken models.
    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(
        weights: Vec<S>,
        components: Vec<GaussianComponent<S>>,
    ) -> Self {
        Self { weights, components }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianComponent<S>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &GaussianComponent<S> {
        &self.components[k]
    }
}

// ---------------------------------------------------------------------------
// Weighted dataset
// ---------------------------------------------------------------------------

/// Data points with optional non-negative per-point weights.
///
/// Absent weights mean all ones. Weights must be finite, non-negative, and
/// have a positive sum.
#[derive(Debug, Clone)]
pub struct WeightedDataset<S> {
    points: Vec<S>,
    n: usize,
    dim: usize,
    weights: Option<Vec<S>>,
}

impl<S: Scalar> WeightedDataset<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one point".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("points must have dimension >= 1".into()));
        }
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has non-finite coordinates")));
            }
            points.extend_from_slice(row);
        }
        let n = rows.len();
        Ok(Self { points, n, dim, weights: None })
    }

    pub fn from_rows_weighted(rows: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        let mut dataset = Self::from_rows(rows)?;
        dataset.set_weights(weights)?;
        Ok(dataset)
    }

    fn set_weights(&mut self, weights: Vec<S>) -> Result<()> {
        if weights.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} points",
                weights.len(),
                self.n
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(Error::InvalidInput("point weights must be finite and >= 0".into()));
        }
        let sum: S = weights.iter().copied().sum();
        if sum <= S::zero() {
            return Err(Error::InvalidInput("point weights must have a positive sum".into()));
        }
        self.weights = Some(weights);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> Option<&[S]> {
        self.weights.as_deref()
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

fn check_point<S: Scalar>(model: &MixtureModel<S>, x: &[S]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {}, model expects {}",
            x.len(),
            model.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("point has non-finite coordinates".into()));
    }
    Ok(())
}

fn check_data<S: Scalar>(model: &MixtureModel<S>, data: &WeightedDataset<S>) -> Result<()> {
    if data.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "data has dimension {}, model expects {}",
            data.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// Per-component log-densities of `x`, written into `out`.
pub(crate) fn component_log_densities<S: Scalar>(
    model: &MixtureModel<S>,
    x: &[S],
    out: &mut [S],
) {
    for (k, component) in model.components().iter().enumerate() {
        out[k] = component.log_density_at(x);
    }
}

/// `N x K` matrix of per-point per-component log-densities.
pub(crate) fn log_density_matrix<S: Scalar>(
    model: &MixtureModel<S>,
    data: &WeightedDataset<S>,
) -> Vec<S> {
    let k = model.k();
    let mut matrix = vec![S::zero(); data.len() * k];
    for n in 0..data.len() {
        component_log_densities(model, data.row(n), &mut matrix[n * k..(n + 1) * k]);
    }
    matrix
}

/// `log f(x)` via log-sum-exp over `log π_k + log g_k(x)`.
pub fn log_density<S: Scalar>(model: &MixtureModel<S>, x: &[S]) -> Result<S> {
    check_point(model, x)?;
    let mut terms = vec![S::zero(); model.k()];
    component_log_densities(model, x, &mut terms);
    for (term, &w) in terms.iter_mut().zip(model.weights()) {
        *term += w.ln();
    }
    Ok(log_sum_exp(&terms))
}

/// Posterior component probabilities `π_k g_k(x) / f(x)`, normalized in log
/// space.
pub fn responsibilities<S: Scalar>(model: &MixtureModel<S>, x: &[S]) -> Result<Vec<S>> {
    check_point(model, x)?;
    let mut terms = vec![S::zero(); model.k()];
    component_log_densities(model, x, &mut terms);
    for (term, &w) in terms.iter_mut().zip(model.weights()) {
        *term += w.ln();
    }
    let norm = log_sum_exp(&terms);
    if !norm.is_finite() {
        return Err(Error::DegenerateModel(
            "mixture density is zero; no component carries positive weight here".into(),
        ));
    }
    Ok(terms.iter().map(|&t| (t - norm).exp()).collect())
}

/// Core MC accumulation over a precomputed log-density matrix.
///
/// `log_weights` are the log mixture weights defining both the
/// responsibilities and the denominator density; `point_weights`, when
/// present, reweight the per-point averages. Points with zero weight are
/// skipped entirely.
pub(crate) fn mc_kernel<S: Scalar>(
    log_weights: &[S],
    log_densities: &[S],
    n: usize,
    k: usize,
    point_weights: Option<&[S]>,
) -> Result<S> {
    debug_assert_eq!(log_weights.len(), k);
    debug_assert_eq!(log_densities.len(), n * k);
    let threshold = log_underflow_threshold::<S>();
    let mut scratch = vec![S::zero(); k];
    let mut total = S::zero();
    let mut weight_sum = S::zero();
    for i in 0..n {
        let w = match point_weights {
            Some(weights) => weights[i],
            None => S::one(),
        };
        if w == S::zero() {
            continue;
        }
        let row = &log_densities[i * k..(i + 1) * k];
        for j in 0..k {
            scratch[j] = log_weights[j] + row[j];
        }
        let log_f = log_sum_exp(&scratch);
        if log_f < threshold {
            return Err(Error::NumericalDomain {
                index: i,
                detail: format!("mixture log-density {log_f} underflows"),
            });
        }
        let mut acc = S::zero();
        for j in 0..k {
            let log_resp = scratch[j] - log_f;
            if log_resp == S::neg_infinity() {
                continue; // zero responsibility contributes zero
            }
            acc += log_resp.exp() * (row[j] - log_f);
        }
        total += w * acc;
        weight_sum += w;
    }
    if weight_sum <= S::zero() {
        return Err(Error::InvalidInput("point weights must have a positive sum".into()));
    }
    Ok(total / weight_sum)
}

/// Mixture complexity of `model` over `data` (natural log; `exp` of the
/// result is the continuous cluster count).
pub fn mc<S: Scalar>(model: &MixtureModel<S>, data: &WeightedDataset<S>) -> Result<S> {
    check_data(model, data)?;
    let log_weights: Vec<S> = model.weights().iter().map(|w| w.ln()).collect();
    let log_densities = log_density_matrix(model, data);
    mc_kernel(&log_weights, &log_densities, data.len(), model.k(), data.weights())
}

/// Shannon entropy of a categorical distribution, in nats.
pub fn latent_entropy<S: Scalar>(weights: &[S]) -> Result<S> {
    if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
        return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
    }
    let sum: S = weights.iter().copied().sum();
    if (sum - S::one()).abs() > fp(WEIGHT_SUM_TOLERANCE) {
        return Err(Error::InvalidInput(format!("weights sum to {sum}, expected 1")));
    }
    let mut entropy = S::zero();
    for &w in weights {
        if w > S::zero() {
            entropy -= w * w.ln();
        }
    }
    Ok(entropy)
}
