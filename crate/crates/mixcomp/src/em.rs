//! Multi-restart EM fitting of Gaussian mixtures, plus the information
//! criteria used for mixture-size selection.
//!
//! Each restart seeds means k-means++-style from the data, starts from the
//! global sample covariance and uniform weights, and iterates standard E/M
//! steps until the per-point average log-likelihood stops improving. The
//! best restart by observed log-likelihood wins. After convergence the
//! mixture weights are refined with a few weights-only EM steps (also
//! monotone in likelihood) so they satisfy first-order optimality tightly;
//! the MC of a fitted model then respects its `[0, log K]` bounds.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{fp, log_sum_exp, log_underflow_threshold};
use crate::mixture::{
    component_log_densities, log_density_matrix, GaussianComponent, MixtureModel, WeightedDataset,
};
use crate::rng::{substream, substream_seed};
use crate::Scalar;

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

/// Controls for one multi-restart EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<S> {
    /// Independent EM runs; the best by observed log-likelihood is kept.
    pub restarts: usize,
    /// Cap on E/M cycles per run.
    pub max_iterations: usize,
    /// Stop when the per-point average log-likelihood improves by less
    /// than this.
    pub log_likelihood_tolerance: S,
    /// Ridge added to covariances before factorization.
    pub regularization: S,
    /// Master seed; restarts derive their own substreams.
    pub rng_seed: u64,
}

impl<S: Scalar> Default for FitConfig<S> {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 200,
            log_likelihood_tolerance: fp(1e-4),
            regularization: fp(1e-6),
            rng_seed: 0,
        }
    }
}

impl<S: Scalar> FitConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.log_likelihood_tolerance > S::zero()) {
            return Err(Error::InvalidInput("log_likelihood_tolerance must be > 0".into()));
        }
        if self.regularization < S::zero() {
            return Err(Error::InvalidInput("regularization must be >= 0".into()));
        }
        Ok(())
    }
}

/// Model-selection score: penalty family times likelihood flavor.
///
/// `Complete` variants evaluate the likelihood of the data joined with the
/// hard component assignments. The set is open-ended; further penalties can
/// be added as variants without touching the selection machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    AicObserved,
    AicComplete,
    BicObserved,
    BicComplete,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::AicObserved,
        Criterion::AicComplete,
        Criterion::BicObserved,
        Criterion::BicComplete,
    ];

    /// Canonical command-line label.
    pub fn label(self) -> &'static str {
        match self {
            Criterion::AicObserved => "AIC",
            Criterion::AicComplete => "AIC+comp",
            Criterion::BicObserved => "BIC",
            Criterion::BicComplete => "BIC+comp",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::AicObserved),
            "aic+comp" => Ok(Criterion::AicComplete),
            "bic" => Ok(Criterion::BicObserved),
            "bic+comp" => Ok(Criterion::BicComplete),
            other => Err(Error::InvalidInput(format!(
                "unknown criterion `{other}`; expected AIC|AIC+comp|BIC|BIC+comp"
            ))),
        }
    }
}

/// How to count the free parameters `D` of a `K`-component mixture in
/// dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreeParamCount {
    /// `(K - 1) + d(d + 3)/2`: one component-parameter block counted once.
    #[default]
    Compact,
    /// `(K - 1) + K · d(d + 3)/2`: every component's mean and covariance
    /// counted.
    Standard,
}

impl FreeParamCount {
    pub fn label(self) -> &'static str {
        match self {
            FreeParamCount::Compact => "compact",
            FreeParamCount::Standard => "standard",
        }
    }
}

impl std::str::FromStr for FreeParamCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "compact" => Ok(FreeParamCount::Compact),
            "standard" => Ok(FreeParamCount::Standard),
            other => Err(Error::InvalidInput(format!(
                "unknown parameter count `{other}`; expected compact|standard"
            ))),
        }
    }
}

/// Free-parameter count `D` entering the AIC/BIC penalties.
pub fn free_parameters(k: usize, dim: usize, count: FreeParamCount) -> usize {
    let per_component = dim * (dim + 3) / 2;
    match count {
        FreeParamCount::Compact => (k - 1) + per_component,
        FreeParamCount::Standard => (k - 1) + k * per_component,
    }
}

/// A fitted mixture with its observed log-likelihood and hard assignments.
///
/// `hard_assignments[n]` is the 0-based index of the component with the
/// highest responsibility at point `n` (lowest index wins ties).
/// `criterion_score` is populated by the selection layer, not by `em_fit`.
#[derive(Debug, Clone)]
pub struct FittedModel<S> {
    pub model: MixtureModel<S>,
    pub observed_log_likelihood: S,
    pub hard_assignments: Vec<usize>,
    pub criterion_score: Option<S>,
}

// ---------------------------------------------------------------------------
// Likelihoods and scores
// ---------------------------------------------------------------------------

/// `Σ_n log f(x_n)`, failing if any point's density underflows.
pub fn observed_log_likelihood<S: Scalar>(
    model: &MixtureModel<S>,
    data: &WeightedDataset<S>,
) -> Result<S> {
    if data.dim() != model.dim() {
        return Err(Error::InvalidInput("data and model dimensions differ".into()));
    }
    let threshold = log_underflow_threshold::<S>();
    let log_weights: Vec<S> = model.weights().iter().map(|w| w.ln()).collect();
    let mut scratch = vec![S::zero(); model.k()];
    let mut total = S::zero();
    for n in 0..data.len() {
        component_log_densities(model, data.row(n), &mut scratch);
        for (t, &lw) in scratch.iter_mut().zip(&log_weights) {
            *t += lw;
        }
        let log_f = log_sum_exp(&scratch);
        if log_f < threshold {
            return Err(Error::NumericalDomain {
                index: n,
                detail: format!("mixture log-density {log_f} underflows"),
            });
        }
        total += log_f;
    }
    Ok(total)
}

/// `Σ_n [log π_{z_n} + log g_{z_n}(x_n)]` for hard assignments `z`.
pub fn complete_log_likelihood<S: Scalar>(
    model: &MixtureModel<S>,
    data: &WeightedDataset<S>,
    assignments: &[usize],
) -> Result<S> {
    if data.dim() != model.dim() {
        return Err(Error::InvalidInput("data and model dimensions differ".into()));
    }
    if assignments.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "{} assignments for {} points",
            assignments.len(),
            data.len()
        )));
    }
    let mut total = S::zero();
    for (n, &z) in assignments.iter().enumerate() {
        if z >= model.k() {
            return Err(Error::InvalidInput(format!(
                "assignment {z} at point {n} out of range for {} components",
                model.k()
            )));
        }
        let weight = model.weights()[z];
        if weight == S::zero() {
            return Err(Error::InvalidAssignment { index: n, component: z });
        }
        total += weight.ln() + model.component(z).log_density_at(data.row(n));
    }
    Ok(total)
}

/// Criterion score with the default (compact) parameter count; lower is
/// better.
pub fn score<S: Scalar>(
    criterion: Criterion,
    fitted: &FittedModel<S>,
    data: &WeightedDataset<S>,
) -> Result<S> {
    score_with(criterion, fitted, data, FreeParamCount::default())
}

/// Criterion score with an explicit parameter count.
pub fn score_with<S: Scalar>(
    criterion: Criterion,
    fitted: &FittedModel<S>,
    data: &WeightedDataset<S>,
    count: FreeParamCount,
) -> Result<S> {
    let d = free_parameters(fitted.model.k(), fitted.model.dim(), count);
    let d = fp::<S>(d as f64);
    let n = fp::<S>(data.len() as f64);
    let neg_ll = match criterion {
        Criterion::AicObserved | Criterion::BicObserved => -fitted.observed_log_likelihood,
        Criterion::AicComplete | Criterion::BicComplete => {
            -complete_log_likelihood(&fitted.model, data, &fitted.hard_assignments)?
        }
    };
    let penalty = match criterion {
        Criterion::AicObserved | Criterion::AicComplete => d,
        Criterion::BicObserved | Criterion::BicComplete => d * n.ln() / fp::<S>(2.0),
    };
    Ok(neg_ll + penalty)
}

// ---------------------------------------------------------------------------
// Weights-only refinement
// ---------------------------------------------------------------------------

/// EM over the mixture weights alone, components fixed.
///
/// The observed likelihood is concave in the weights, so this converges to
/// the weight optimum; it is used to polish fits and to produce
/// likelihood-maximizing weights for bound checks.
pub fn refine_weights<S: Scalar>(
    model: &MixtureModel<S>,
    data: &WeightedDataset<S>,
    max_iterations: usize,
    tolerance: S,
) -> Result<MixtureModel<S>> {
    if data.dim() != model.dim() {
        return Err(Error::InvalidInput("data and model dimensions differ".into()));
    }
    let k = model.k();
    let n = data.len();
    let log_densities = log_density_matrix(model, data);
    let mut weights = model.weights().to_vec();
    let inv_n = S::one() / fp::<S>(n as f64);
    let mut scratch = vec![S::zero(); k];
    for _ in 0..max_iterations {
        let mut sums = vec![S::zero(); k];
        for i in 0..n {
            let row = &log_densities[i * k..(i + 1) * k];
            for j in 0..k {
                scratch[j] = weights[j].ln() + row[j];
            }
            let log_f = log_sum_exp(&scratch);
            if !log_f.is_finite() {
                return Err(Error::DegenerateModel(
                    "mixture density vanished during weight refinement".into(),
                ));
            }
            for j in 0..k {
                sums[j] += (scratch[j] - log_f).exp();
            }
        }
        let mut residual = S::zero();
        for j in 0..k {
            let updated = sums[j] * inv_n;
            let delta = (updated - weights[j]).abs();
            if delta > residual {
                residual = delta;
            }
            sums[j] = updated;
        }
        if residual < tolerance {
            break;
        }
        weights = sums;
    }
    MixtureModel::new(weights, model.components().to_vec())
}

// ---------------------------------------------------------------------------
// EM fit
// ---------------------------------------------------------------------------

struct RunOutcome<S> {
    weights: Vec<S>,
    components: Vec<GaussianComponent<S>>,
    log_likelihood: S,
    trace: Vec<S>,
    responsibilities: Vec<S>,
}

/// Fit a `k`-component mixture; `criterion_score` is left unset.
pub fn em_fit<S: Scalar>(
    data: &WeightedDataset<S>,
    k: usize,
    config: &FitConfig<S>,
) -> Result<FittedModel<S>> {
    em_fit_traced(data, k, config).map(|(fitted, _)| fitted)
}

/// Like [`em_fit`], additionally returning the winning run's per-iteration
/// observed log-likelihoods (non-decreasing up to tiny slack).
pub fn em_fit_traced<S: Scalar>(
    data: &WeightedDataset<S>,
    k: usize,
    config: &FitConfig<S>,
) -> Result<(FittedModel<S>, Vec<S>)> {
    config.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("component count must be >= 1".into()));
    }
    if data.weights().is_some() {
        return Err(Error::InvalidInput("EM fitting expects unweighted data".into()));
    }
    if data.len() < k {
        return Err(Error::InsufficientData { needed: k, got: data.len() });
    }

    let (_global_mean, global_cov) = sample_moments(data);

    let outcomes: Vec<Option<RunOutcome<S>>> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let seed = substream_seed(config.rng_seed, &[restart as u64]);
            run_em(data, k, config, seed, &global_cov)
        })
        .collect();

    let mut best: Option<RunOutcome<S>> = None;
    for outcome in outcomes.into_iter().flatten() {
        let better = match &best {
            Some(current) => outcome.log_likelihood > current.log_likelihood,
            None => true,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.ok_or_else(|| {
        Error::FitFailure(format!("all {} restarts collapsed for k = {k}", config.restarts))
    })?;

    let hard_assignments = argmax_rows(&best.responsibilities, data.len(), k);
    let model = MixtureModel::new(best.weights, best.components)?;
    let fitted = FittedModel {
        model,
        observed_log_likelihood: best.log_likelihood,
        hard_assignments,
        criterion_score: None,
    };
    Ok((fitted, best.trace))
}

fn argmax_rows<S: Scalar>(rows: &[S], n: usize, k: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let row = &rows[i * k..(i + 1) * k];
            let mut arg = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = j;
                }
            }
            arg
        })
        .collect()
}

fn sample_moments<S: Scalar>(data: &WeightedDataset<S>) -> (Vec<S>, Vec<S>) {
    let n = data.len();
    let dim = data.dim();
    let inv_n = S::one() / fp::<S>(n as f64);
    let mut mean = vec![S::zero(); dim];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(data.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m *= inv_n;
    }
    let mut cov = vec![S::zero(); dim * dim];
    for i in 0..n {
        let row = data.row(i);
        for a in 0..dim {
            let da = row[a] - mean[a];
            for b in 0..=a {
                cov[a * dim + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..dim {
        for b in 0..=a {
            let v = cov[a * dim + b] * inv_n;
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    (mean, cov)
}

fn kmeans_pp_means<S: Scalar>(
    data: &WeightedDataset<S>,
    k: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<S>> {
    let n = data.len();
    let dim = data.dim();
    let mut means: Vec<Vec<S>> = Vec::with_capacity(k);
    means.push(data.row(rng.random_range(0..n)).to_vec());
    let mut dist2 = vec![S::zero(); n];
    let recompute = |center: &[S], dist2: &mut [S], first: bool| {
        for i in 0..n {
            let row = &data.row(i)[..dim];
            let mut d = S::zero();
            for (a, &c) in row.iter().zip(center) {
                let delta = *a - c;
                d += delta * delta;
            }
            if first || d < dist2[i] {
                dist2[i] = d;
            }
        }
    };
    recompute(&means[0], &mut dist2, true);
    while means.len() < k {
        let total: S = dist2.iter().copied().sum();
        let next = if total > S::zero() {
            let mut target = fp::<S>(rng.random::<f64>()) * total;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // Every point coincides with a chosen center.
            rng.random_range(0..n)
        };
        means.push(data.row(next).to_vec());
        let center = means.last().unwrap().clone();
        recompute(&center, &mut dist2, false);
    }
    means
}

fn run_em<S: Scalar>(
    data: &WeightedDataset<S>,
    k: usize,
    config: &FitConfig<S>,
    seed: u64,
    global_cov: &[S],
) -> Option<RunOutcome<S>> {
    let n = data.len();
    let dim = data.dim();
    let inv_n = S::one() / fp::<S>(n as f64);
    let mut rng = substream(seed, &[]);

    let make_component = |mean: Vec<S>, cov: Vec<S>| {
        GaussianComponent::with_regularization(mean, cov, config.regularization).ok()
    };

    let mut components: Vec<GaussianComponent<S>> = Vec::with_capacity(k);
    for mean in kmeans_pp_means(data, k, &mut rng) {
        components.push(make_component(mean, global_cov.to_vec())?);
    }
    let mut weights = vec![S::one() / fp::<S>(k as f64); k];

    let mut responsibilities = vec![S::zero(); n * k];
    let mut log_densities = vec![S::zero(); n * k];
    let mut scratch = vec![S::zero(); k];
    let mut trace: Vec<S> = Vec::new();
    let mut collapses = 0usize;
    let mut skip_convergence_check = false;

    let mut log_weights = vec![S::zero(); k];
    let mut iteration = 0;
    loop {
        // E-step over current parameters.
        for j in 0..k {
            log_weights[j] = weights[j].ln();
        }
        let mut log_likelihood = S::zero();
        for i in 0..n {
            let row = &mut log_densities[i * k..(i + 1) * k];
            for (j, component) in components.iter().enumerate() {
                row[j] = component.log_density_at(data.row(i));
            }
            let mut max = S::neg_infinity();
            for j in 0..k {
                let v = log_weights[j] + row[j];
                scratch[j] = v;
                if v > max {
                    max = v;
                }
            }
            if !max.is_finite() {
                return None;
            }
            let mut sum = S::zero();
            for j in 0..k {
                let shifted = (scratch[j] - max).exp();
                responsibilities[i * k + j] = shifted;
                sum += shifted;
            }
            log_likelihood += max + sum.ln();
            let inv_sum = S::one() / sum;
            for j in 0..k {
                responsibilities[i * k + j] *= inv_sum;
            }
        }

        let converged = match trace.last() {
            Some(&previous) if !skip_convergence_check => {
                (log_likelihood - previous) * inv_n < config.log_likelihood_tolerance
            }
            _ => false,
        };
        skip_convergence_check = false;
        trace.push(log_likelihood);
        iteration += 1;
        if converged || iteration >= config.max_iterations {
            break;
        }

        // M-step.
        for j in 0..k {
            let mut mass = S::zero();
            for i in 0..n {
                mass += responsibilities[i * k + j];
            }
            let collapsed = if mass <= S::zero() {
                true
            } else {
                let mut mean = vec![S::zero(); dim];
                for i in 0..n {
                    let r = responsibilities[i * k + j];
                    for (m, &x) in mean.iter_mut().zip(data.row(i)) {
                        *m += r * x;
                    }
                }
                for m in &mut mean {
                    *m = *m / mass;
                }
                let mut cov = vec![S::zero(); dim * dim];
                for i in 0..n {
                    let r = responsibilities[i * k + j];
                    let row = data.row(i);
                    for a in 0..dim {
                        let da = row[a] - mean[a];
                        for b in 0..=a {
                            cov[a * dim + b] += r * da * (row[b] - mean[b]);
                        }
                    }
                }
                for a in 0..dim {
                    for b in 0..a {
                        let v = cov[a * dim + b] / mass;
                        cov[a * dim + b] = v;
                        cov[b * dim + a] = v;
                    }
                    cov[a * dim + a] = cov[a * dim + a] / mass;
                }
                match make_component(mean, cov) {
                    Some(component) => {
                        components[j] = component;
                        weights[j] = mass * inv_n;
                        false
                    }
                    None => true,
                }
            };
            if collapsed {
                collapses += 1;
                if collapses >= 2 {
                    return None;
                }
                let pick = rng.random_range(0..n);
                components[j] = make_component(data.row(pick).to_vec(), global_cov.to_vec())?;
                weights[j] = S::one() / fp::<S>(k as f64);
                let total: S = weights.iter().copied().sum();
                for w in &mut weights {
                    *w = *w / total;
                }
                skip_convergence_check = true;
            }
        }
    }

    // Weights-only polish on the cached log-densities; likelihood stays
    // monotone and the weights end at first-order optimality.
    let mut polish_iterations = 0;
    loop {
        for j in 0..k {
            log_weights[j] = weights[j].ln();
        }
        let mut sums = vec![S::zero(); k];
        for i in 0..n {
            let row = &log_densities[i * k..(i + 1) * k];
            for j in 0..k {
                scratch[j] = log_weights[j] + row[j];
            }
            let log_f = log_sum_exp(&scratch);
            if !log_f.is_finite() {
                return None;
            }
            for j in 0..k {
                sums[j] += (scratch[j] - log_f).exp();
            }
        }
        let mut residual = S::zero();
        for j in 0..k {
            sums[j] *= inv_n;
            let delta = (sums[j] - weights[j]).abs();
            if delta > residual {
                residual = delta;
            }
        }
        polish_iterations += 1;
        if residual < fp(1e-12) || polish_iterations >= 200 {
            break;
        }
        weights = sums;
    }

    // Final pass: likelihood and responsibilities under the final weights.
    for j in 0..k {
        log_weights[j] = weights[j].ln();
    }
    let mut log_likelihood = S::zero();
    for i in 0..n {
        let row = &log_densities[i * k..(i + 1) * k];
        for j in 0..k {
            scratch[j] = log_weights[j] + row[j];
        }
        let log_f = log_sum_exp(&scratch);
        if !log_f.is_finite() {
            return None;
        }
        log_likelihood += log_f;
        for j in 0..k {
            responsibilities[i * k + j] = (scratch[j] - log_f).exp();
        }
    }
    trace.push(log_likelihood);

    Some(RunOutcome { weights, components, log_likelihood, trace, responsibilities })
}
