//! Sequential mixture-size selection over a stream of windows, and MC
//! tracking along the selected models.
//!
//! At each timestep the candidate mixture sizes are the previous selection
//! plus or minus one (all sizes at the first step). Every candidate is
//! fitted by multi-restart EM and charged its criterion score plus a code
//! length for changing the size; the total-cost minimizer wins, ties going
//! to the smaller size. The selected model's MC over the window is the
//! tracked quantity.

use crate::em::{em_fit, score_with, Criterion, FitConfig, FittedModel, FreeParamCount};
use crate::error::{Error, Result};
use crate::math::fp;
use crate::mixture::{mc, WeightedDataset};
use crate::rng::substream_seed;
use crate::Scalar;

/// Controls for sequential size selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SdmsConfig<S> {
    /// Largest candidate mixture size.
    pub k_max: usize,
    /// Prior probability mass on a size change between steps, in (0, 1).
    pub beta: S,
    /// Model-selection score.
    pub criterion: Criterion,
    /// Free-parameter convention for the score.
    pub param_count: FreeParamCount,
    /// Per-candidate EM settings; `rng_seed` is the master seed for the
    /// whole trajectory.
    pub fit: FitConfig<S>,
}

impl<S: Scalar> Default for SdmsConfig<S> {
    fn default() -> Self {
        Self {
            k_max: 10,
            beta: fp(0.01),
            criterion: Criterion::BicObserved,
            param_count: FreeParamCount::default(),
            fit: FitConfig::default(),
        }
    }
}

impl<S: Scalar> SdmsConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidInput("k_max must be >= 1".into()));
        }
        if !(self.beta > S::zero() && self.beta < S::one()) {
            return Err(Error::InvalidInput("beta must lie strictly in (0, 1)".into()));
        }
        self.fit.validate()
    }
}

/// Candidate sizes for the next step: everything at the start, otherwise
/// the previous size ± 1 clipped to `[1, k_max]`.
pub fn candidates(k_prev: Option<usize>, k_max: usize) -> Vec<usize> {
    match k_prev {
        None => (1..=k_max).collect(),
        Some(k) => {
            let lo = k.saturating_sub(1).max(1);
            let hi = (k + 1).min(k_max);
            (lo..=hi).collect()
        }
    }
}

/// Code length (nats) for selecting size `k_t` after `k_prev`.
///
/// The first step pays `log k_max` for a uniform choice. Later steps pay
/// `-log(1 - β/2)` for keeping a boundary size (1 or `k_max`),
/// `-log(1 - β)` for keeping an interior size, and `-log(β/2)` for any
/// change.
pub fn change_code_length<S: Scalar>(
    k_t: usize,
    k_prev: Option<usize>,
    config: &SdmsConfig<S>,
) -> Result<S> {
    config.validate()?;
    if k_t < 1 || k_t > config.k_max {
        return Err(Error::InvalidInput(format!("k = {k_t} outside [1, {}]", config.k_max)));
    }
    let Some(k_prev) = k_prev else {
        return Ok(fp::<S>(config.k_max as f64).ln());
    };
    if k_prev < 1 || k_prev > config.k_max {
        return Err(Error::InvalidInput(format!(
            "previous k = {k_prev} outside [1, {}]",
            config.k_max
        )));
    }
    let half_beta = config.beta / fp::<S>(2.0);
    let probability = if k_t == k_prev {
        if k_prev == 1 || k_prev == config.k_max {
            S::one() - half_beta
        } else {
            S::one() - config.beta
        }
    } else {
        half_beta
    };
    Ok(-probability.ln())
}

/// Outcome of one selection step.
#[derive(Debug, Clone)]
pub struct SdmsStep<S> {
    pub selected_k: usize,
    pub fitted: FittedModel<S>,
    pub total_cost: S,
}

/// Fit every candidate size on one window and return the total-cost
/// minimizer (criterion score plus change code length; smaller size wins
/// ties).
///
/// `t` is the 1-based timestep, used only to derive per-candidate RNG
/// substreams from the master seed.
pub fn sdms_step<S: Scalar>(
    data: &WeightedDataset<S>,
    k_prev: Option<usize>,
    t: usize,
    config: &SdmsConfig<S>,
) -> Result<SdmsStep<S>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("window is empty".into()));
    }
    let mut best: Option<SdmsStep<S>> = None;
    let mut last_error: Option<Error> = None;
    for k in candidates(k_prev, config.k_max) {
        if data.len() < k {
            continue;
        }
        let fit_config = FitConfig {
            rng_seed: substream_seed(config.fit.rng_seed, &[t as u64, k as u64]),
            ..config.fit.clone()
        };
        let mut fitted = match em_fit(data, k, &fit_config) {
            Ok(fitted) => fitted,
            Err(err) => {
                last_error = Some(err);
                continue;
            }
        };
        let model_cost = match score_with(config.criterion, &fitted, data, config.param_count) {
            Ok(cost) => cost,
            Err(err) => {
                last_error = Some(err);
                continue;
            }
        };
        fitted.criterion_score = Some(model_cost);
        let total_cost = model_cost + change_code_length(k, k_prev, config)?;
        let better = match &best {
            Some(current) => total_cost < current.total_cost,
            None => true,
        };
        if better {
            best = Some(SdmsStep { selected_k: k, fitted, total_cost });
        }
    }
    best.ok_or_else(|| match last_error {
        Some(err) => err,
        None => Error::FitFailure("no feasible candidate size for this window".into()),
    })
}

/// One tracked timestep.
#[derive(Debug, Clone)]
pub struct TrackStep<S> {
    /// 1-based timestep.
    pub t: usize,
    pub selected_k: usize,
    pub fitted: FittedModel<S>,
    /// MC of the selected model over this window.
    pub mc: S,
    /// Criterion score plus change code length.
    pub total_cost: S,
    /// True when every candidate fit failed and the previous model was
    /// carried forward; such steps should be excluded from detection
    /// metrics.
    pub carried_forward: bool,
}

/// Full trajectory of tracked steps.
#[derive(Debug, Clone)]
pub struct TrackResult<S> {
    pub steps: Vec<TrackStep<S>>,
}

impl<S: Scalar> TrackResult<S> {
    /// Per-step MC values, in timestep order.
    pub fn mc_sequence(&self) -> Vec<S> {
        self.steps.iter().map(|s| s.mc).collect()
    }

    /// Per-step selected sizes as scalars (for the alert rule).
    pub fn k_sequence(&self) -> Vec<S> {
        self.steps.iter().map(|s| fp(s.selected_k as f64)).collect()
    }
}

/// Track MC over a stream: select a size per window sequentially, fit, and
/// evaluate MC under the selected model.
///
/// When every candidate fit fails on a window, the previous step's model is
/// carried forward and the step is flagged; a failure at the first window is
/// an error.
pub fn track_mc<S: Scalar>(
    stream: &[WeightedDataset<S>],
    config: &SdmsConfig<S>,
) -> Result<TrackResult<S>> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::InvalidInput("stream is empty".into()));
    }
    let mut steps: Vec<TrackStep<S>> = Vec::with_capacity(stream.len());
    let mut k_prev: Option<usize> = None;
    for (index, window) in stream.iter().enumerate() {
        let t = index + 1;
        let fail = |err: Error| Error::StepFailure { t, source: Box::new(err) };
        match sdms_step(window, k_prev, t, config) {
            Ok(step) => {
                let complexity = mc(&step.fitted.model, window).map_err(fail)?;
                k_prev = Some(step.selected_k);
                steps.push(TrackStep {
                    t,
                    selected_k: step.selected_k,
                    fitted: step.fitted,
                    mc: complexity,
                    total_cost: step.total_cost,
                    carried_forward: false,
                });
            }
            Err(err) => {
                let Some(previous) = steps.last() else {
                    return Err(fail(err));
                };
                // Keep the monitor alive: reuse the previous model on the new
                // window and flag the step.
                let k = previous.selected_k;
                let model = previous.fitted.model.clone();
                let observed =
                    crate::em::observed_log_likelihood(&model, window).map_err(fail)?;
                let hard_assignments = (0..window.len())
                    .map(|n| {
                        crate::mixture::responsibilities(&model, window.row(n)).map(|r| {
                            let mut arg = 0;
                            for (j, &v) in r.iter().enumerate() {
                                if v > r[arg] {
                                    arg = j;
                                }
                            }
                            arg
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
                    .map_err(fail)?;
                let mut fitted = FittedModel {
                    model,
                    observed_log_likelihood: observed,
                    hard_assignments,
                    criterion_score: None,
                };
                let model_cost = score_with(config.criterion, &fitted, window, config.param_count)
                    .map_err(fail)?;
                fitted.criterion_score = Some(model_cost);
                let total_cost = model_cost + change_code_length(k, Some(k), config)?;
                let complexity = mc(&fitted.model, window).map_err(fail)?;
                k_prev = Some(k);
                steps.push(TrackStep {
                    t,
                    selected_k: k,
                    fitted,
                    mc: complexity,
                    total_cost,
                    carried_forward: true,
                });
            }
        }
    }
    Ok(TrackResult { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn config(k_max: usize, seed: u64) -> SdmsConfig<f64> {
        SdmsConfig {
            k_max,
            fit: FitConfig { rng_seed: seed, ..FitConfig::default() },
            ..SdmsConfig::default()
        }
    }

    fn normal_window(seed: u64, n: usize, mean: f64) -> WeightedDataset<f64> {
        let mut rng = crate::rng::substream(seed, &[7]);
        let rows = (0..n)
            .map(|_| vec![mean + rng.sample::<f64, _>(StandardNormal)])
            .collect();
        WeightedDataset::from_rows(rows).unwrap()
    }

    #[test]
    fn candidate_sets_follow_the_neighborhood_rule() {
        assert_eq!(candidates(None, 10), (1..=10).collect::<Vec<_>>());
        assert_eq!(candidates(Some(5), 10), vec![4, 5, 6]);
        assert_eq!(candidates(Some(1), 10), vec![1, 2]);
        assert_eq!(candidates(Some(10), 10), vec![9, 10]);
        assert_eq!(candidates(Some(1), 1), vec![1]);
        assert_eq!(candidates(None, 3), vec![1, 2, 3]);
    }

    #[test]
    fn change_code_length_spot_values() {
        let cfg = config(10, 0);
        let first = change_code_length(4, None, &cfg).unwrap();
        assert!((first - 10.0f64.ln()).abs() < 1e-12);
        assert!((first - 2.302585092994046).abs() < 1e-12);

        let stay_interior = change_code_length(5, Some(5), &cfg).unwrap();
        assert!((stay_interior + 0.99f64.ln()).abs() < 1e-12);
        assert!((stay_interior - 0.01005033585350145).abs() < 1e-12);

        let change = change_code_length(4, Some(5), &cfg).unwrap();
        assert!((change + 0.005f64.ln()).abs() < 1e-12);
        assert!((change - 5.298317366548036).abs() < 1e-12);

        let stay_boundary_low = change_code_length(1, Some(1), &cfg).unwrap();
        assert!((stay_boundary_low + 0.995f64.ln()).abs() < 1e-12);
        let stay_boundary_high = change_code_length(10, Some(10), &cfg).unwrap();
        assert_eq!(stay_boundary_low, stay_boundary_high);
    }

    #[test]
    fn change_code_length_rejects_out_of_range() {
        let cfg = config(10, 0);
        assert!(change_code_length::<f64>(0, None, &cfg).is_err());
        assert!(change_code_length::<f64>(11, None, &cfg).is_err());
        assert!(change_code_length::<f64>(3, Some(0), &cfg).is_err());
    }

    #[test]
    fn first_step_on_single_cluster_selects_one_component() {
        // The compact parameter count separates adjacent sizes by a single
        // free parameter, which BIC cannot distinguish from fit noise; the
        // standard count is the configuration under which one component is
        // reliably selected here.
        for seed in 0..10u64 {
            let window = normal_window(seed, 300, 0.0);
            let cfg = SdmsConfig {
                param_count: FreeParamCount::Standard,
                ..config(3, seed)
            };
            let step = sdms_step(&window, None, 1, &cfg).unwrap();
            assert_eq!(step.selected_k, 1, "seed {seed}");
        }
    }

    #[test]
    fn step_cost_decomposes_exactly() {
        let window = normal_window(3, 200, 0.0);
        let cfg = config(4, 3);
        let step = sdms_step(&window, Some(2), 5, &cfg).unwrap();
        let change = change_code_length(step.selected_k, Some(2), &cfg).unwrap();
        assert_eq!(step.total_cost, step.fitted.criterion_score.unwrap() + change);
    }

    #[test]
    fn tracking_constant_stream_stays_at_one_component() {
        let stream: Vec<_> = (0..3).map(|i| normal_window(i, 250, 0.0)).collect();
        let cfg = SdmsConfig { param_count: FreeParamCount::Standard, ..config(3, 11) };
        let result = track_mc(&stream, &cfg).unwrap();
        assert_eq!(result.steps.len(), 3);
        for step in &result.steps {
            assert_eq!(step.selected_k, 1);
            assert!(step.mc.abs() < 0.05, "mc = {}", step.mc);
            assert!(!step.carried_forward);
        }
    }

    #[test]
    fn tracking_single_window_charges_the_uniform_prior() {
        let stream = vec![normal_window(2, 150, 0.0)];
        let cfg = config(5, 2);
        let result = track_mc(&stream, &cfg).unwrap();
        assert_eq!(result.steps.len(), 1);
        let step = &result.steps[0];
        let expected = step.fitted.criterion_score.unwrap()
            + change_code_length(step.selected_k, None, &cfg).unwrap();
        assert_eq!(step.total_cost, expected);
        // The t = 1 change term is log k_max regardless of the selection.
        assert!(
            (step.total_cost - step.fitted.criterion_score.unwrap() - 5.0f64.ln()).abs() < 1e-12
        );
    }

    #[test]
    fn selected_sizes_move_by_at_most_one() {
        // Two clusters drifting apart over a short stream.
        let mut stream = Vec::new();
        for t in 0..6 {
            let mut rng = crate::rng::substream(40 + t as u64, &[1]);
            let offset = t as f64;
            let mut rows = Vec::new();
            for i in 0..160 {
                let center = if i % 2 == 0 { 0.0 } else { offset };
                rows.push(vec![center + rng.sample::<f64, _>(StandardNormal)]);
            }
            stream.push(WeightedDataset::from_rows(rows).unwrap());
        }
        let result = track_mc(&stream, &config(4, 9)).unwrap();
        for pair in result.steps.windows(2) {
            let delta = pair[1].selected_k as i64 - pair[0].selected_k as i64;
            assert!(delta.abs() <= 1, "jump of {delta}");
        }
        for step in &result.steps {
            assert!(step.mc >= -1e-9);
            assert!(step.mc <= (step.selected_k as f64).ln() + 1e-9);
        }
    }

    #[test]
    fn track_rejects_empty_stream() {
        let cfg = config(3, 0);
        assert!(matches!(track_mc::<f64>(&[], &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(3, 0);
        cfg.beta = 1.0;
        assert!(cfg.validate().is_err());
        cfg.beta = 0.01;
        cfg.k_max = 0;
        assert!(cfg.validate().is_err());
    }
}
