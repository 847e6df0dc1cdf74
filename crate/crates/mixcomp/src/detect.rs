//! Median-window change alerts over a tracked sequence, and delay /
//! false-alarm-rate scoring of the alerts.
//!
//! The alert rule compares the medians of two adjacent trailing windows of
//! the sequence. Medians rather than means keep single-step spikes from
//! firing alerts. An alert closer than `min_gap` steps to the previous
//! alert is suppressed even when the condition holds.

use crate::error::{Error, Result};
use crate::math::fp;
use crate::Scalar;

/// Which comparison fires an alert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertMode {
    /// `|median(left) - median(right)| > mc_threshold` for real-valued
    /// sequences such as MC.
    McSequence,
    /// `median(left) != median(right)` for integer-valued sequences such as
    /// the selected mixture size.
    KSequence,
}

impl std::str::FromStr for AlertMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(AlertMode::McSequence),
            "k" => Ok(AlertMode::KSequence),
            other => Err(Error::InvalidInput(format!(
                "unknown alert mode `{other}`; expected mc|k"
            ))),
        }
    }
}

/// Controls for the alert scan.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertConfig<S> {
    /// Length of each of the two adjacent median windows.
    pub window: usize,
    /// Median-difference threshold in MC mode.
    pub mc_threshold: S,
    /// Minimum spacing between alerts; a candidate strictly closer than
    /// this to the latest alert is dropped.
    pub min_gap: usize,
    /// First scanned timestep (1-based); must leave room for both windows.
    pub start_t: usize,
    pub mode: AlertMode,
}

impl<S: Scalar> AlertConfig<S> {
    pub fn new(mode: AlertMode) -> Self {
        Self { window: 5, mc_threshold: fp(0.01), min_gap: 5, start_t: 10, mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidInput("window must be >= 1".into()));
        }
        if self.start_t < 2 * self.window {
            return Err(Error::InvalidInput(format!(
                "start_t = {} leaves no room for two windows of {}",
                self.start_t, self.window
            )));
        }
        if !(self.mc_threshold > S::zero()) {
            return Err(Error::InvalidInput("mc_threshold must be > 0".into()));
        }
        if self.min_gap == 0 {
            return Err(Error::InvalidInput("min_gap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Median of a non-empty slice; even lengths average the two middle order
/// statistics.
pub(crate) fn median<S: Scalar>(values: &[S]) -> S {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("median input must be ordered"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / fp(2.0)
    }
}

/// Scan a sequence for change alerts; `sequence[0]` is timestep 1.
///
/// For each `t` from `start_t` to the end, the medians of
/// `y[t-2w+1 ..= t-w]` and `y[t-w+1 ..= t]` are compared under the
/// configured mode; alert timesteps (1-based) are returned in order.
pub fn detect_changes<S: Scalar>(sequence: &[S], config: &AlertConfig<S>) -> Result<Vec<usize>> {
    config.validate()?;
    if sequence.len() < config.start_t {
        return Err(Error::InvalidInput(format!(
            "sequence has {} steps, scan starts at {}",
            sequence.len(),
            config.start_t
        )));
    }
    if sequence.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sequence has non-finite values".into()));
    }
    let w = config.window;
    let mut alerts: Vec<usize> = Vec::new();
    for t in config.start_t..=sequence.len() {
        let right_end = t; // exclusive in 0-based slicing
        let right_start = t - w;
        let left_end = right_start;
        let left_start = t - 2 * w;
        let left = median(&sequence[left_start..left_end]);
        let right = median(&sequence[right_start..right_end]);
        let fires = match config.mode {
            AlertMode::McSequence => (left - right).abs() > config.mc_threshold,
            AlertMode::KSequence => left != right,
        };
        if !fires {
            continue;
        }
        if let Some(&latest) = alerts.last() {
            if t - latest < config.min_gap {
                continue;
            }
        }
        alerts.push(t);
    }
    Ok(alerts)
}

/// Delay and false-alarm rate of an alert set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// Steps from the transaction start to the first alert inside the
    /// transaction, capped at the transaction length; the cap is also the
    /// miss value.
    pub delay: usize,
    /// Fraction of tolerated-free horizon steps that carry an alert.
    pub far: f64,
    pub alerts: Vec<usize>,
}

/// Score `alerts` against a transaction period inside a scan horizon.
///
/// Alerts are tolerated over `[t_begin, t_end + 2·window - 1]`: every step
/// whose two median windows overlap the transaction. `delay` is
/// `min(t* - t_begin, cap)` where `t*` is the first alert inside
/// `[t_begin, t_end]` and `cap = t_end - t_begin + 1`; no such alert scores
/// the cap. `far` counts alerts at non-tolerated horizon steps over all
/// non-tolerated horizon steps.
pub fn evaluate(
    alerts: &[usize],
    transaction: (usize, usize),
    horizon: (usize, usize),
    window: usize,
) -> Result<EvalResult> {
    let (t_begin, t_end) = transaction;
    let (t_min, t_max) = horizon;
    if t_begin == 0 || t_end < t_begin {
        return Err(Error::InvalidInput(format!(
            "transaction [{t_begin}, {t_end}] is malformed"
        )));
    }
    if t_min == 0 || t_max < t_min {
        return Err(Error::InvalidInput(format!("horizon [{t_min}, {t_max}] is malformed")));
    }
    if window == 0 {
        return Err(Error::InvalidInput("window must be >= 1".into()));
    }
    let mut sorted = alerts.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.iter().any(|&t| t < t_min || t > t_max) {
        return Err(Error::InvalidInput("alerts must lie within the horizon".into()));
    }

    let cap = t_end - t_begin + 1;
    let delay = sorted
        .iter()
        .find(|&&t| t >= t_begin && t <= t_end)
        .map(|&t_star| (t_star - t_begin).min(cap))
        .unwrap_or(cap);

    let accept_end = t_end + 2 * window - 1;
    let accepted = |t: usize| t >= t_begin && t <= accept_end;
    let denominator = (t_min..=t_max).filter(|&t| !accepted(t)).count();
    let numerator = sorted.iter().filter(|&&t| !accepted(t)).count();
    let far = if denominator == 0 { 0.0 } else { numerator as f64 / denominator as f64 };

    Ok(EvalResult { delay, far, alerts: sorted })
}
