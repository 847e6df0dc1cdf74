//! Hierarchical decomposition of MC, and weighted fuzzy c-means for
//! building the hierarchy.
//!
//! A row-stochastic matrix `Q` softly assigns each of the `K` lower
//! components to `L` upper groups. The upper mixture has weights
//! `ρ_l = Σ_k Q[k][l] π_k` and component mixtures
//! `h_l = Σ_k φ(l)_k g_k` with `φ(l)_k = Q[k][l] π_k / ρ_l`. MC then splits
//! exactly into the MC among the upper groups plus, per group, the group's
//! data mass times the MC inside it:
//!
//! ```text
//! MC(total) = MC(interaction) + Σ_l W_l · MC(component l)
//! ```
//!
//! with point weights `w(l)_n = ρ_l h_l(x_n) / f(x_n)` and
//! `W_l` their (data-weighted) mean. The identity is algebraic, so the
//! implementation preserves it to float accumulation error.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{fp, log_sum_exp};
use crate::mixture::{log_density_matrix, mc_kernel, MixtureModel, WeightedDataset};
use crate::rng::substream;
use crate::sdms::{track_mc, SdmsConfig, TrackResult};
use crate::Scalar;

/// Substream tag namespace for center seeding.
const FCM_TAG: u64 = 0x66636d;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

/// Soft partition of `K` lower components into `L` upper groups; each row
/// is non-negative and sums to one.
#[derive(Debug, Clone)]
pub struct Hierarchy<S> {
    q: Vec<S>,
    k: usize,
    l: usize,
}

impl<S: Scalar> Hierarchy<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("hierarchy needs at least one row".into()));
        }
        let l = rows[0].len();
        if l == 0 {
            return Err(Error::InvalidInput("hierarchy needs at least one group".into()));
        }
        let mut q = Vec::with_capacity(rows.len() * l);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(Error::InvalidInput(format!(
                    "row {k} has {} entries, expected {l}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < S::zero()) {
                return Err(Error::InvalidInput(format!(
                    "row {k} has negative or non-finite entries"
                )));
            }
            let sum: S = row.iter().copied().sum();
            if (sum - S::one()).abs() > fp(ROW_SUM_TOLERANCE) {
                return Err(Error::InvalidInput(format!("row {k} sums to {sum}, expected 1")));
            }
            q.extend_from_slice(row);
        }
        Ok(Self { q, k: rows.len(), l })
    }

    /// The trivial one-group hierarchy.
    pub fn single_group(k: usize) -> Self {
        Self { q: vec![S::one(); k], k, l: 1 }
    }

    /// The identity hierarchy: every component its own group.
    pub fn identity(k: usize) -> Self {
        let mut q = vec![S::zero(); k * k];
        for i in 0..k {
            q[i * k + i] = S::one();
        }
        Self { q, k, l: k }
    }

    pub fn lower_count(&self) -> usize {
        self.k
    }

    pub fn group_count(&self) -> usize {
        self.l
    }

    pub fn row(&self, k: usize) -> &[S] {
        &self.q[k * self.l..(k + 1) * self.l]
    }
}

// ---------------------------------------------------------------------------
// Upper model and decomposition
// ---------------------------------------------------------------------------

/// Upper-group weights `ρ` and per-group lower-component mixtures `φ`
/// (one row of length `K` per group).
///
/// A group with `ρ_l = 0` gets an all-zero `φ` row and is inert downstream.
pub fn upper_model<S: Scalar>(
    model: &MixtureModel<S>,
    hierarchy: &Hierarchy<S>,
) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let k = model.k();
    if hierarchy.lower_count() != k {
        return Err(Error::InvalidInput(format!(
            "hierarchy covers {} components, model has {k}",
            hierarchy.lower_count()
        )));
    }
    let l = hierarchy.group_count();
    let weights = model.weights();
    let mut rho = vec![S::zero(); l];
    for j in 0..k {
        let row = hierarchy.row(j);
        for g in 0..l {
            rho[g] += row[g] * weights[j];
        }
    }
    let mut phi = vec![vec![S::zero(); k]; l];
    for g in 0..l {
        if rho[g] > S::zero() {
            for j in 0..k {
                phi[g][j] = hierarchy.row(j)[g] * weights[j] / rho[g];
            }
        }
    }
    Ok((rho, phi))
}

/// The exact split of MC along a hierarchy.
#[derive(Debug, Clone)]
pub struct McDecomposition<S> {
    pub mc_total: S,
    /// MC of the upper mixture `{ρ_l, h_l}`.
    pub mc_interaction: S,
    /// Per-group data mass `W_l`; sums to one.
    pub weights: Vec<S>,
    /// Per-group internal MC under the group's point weights.
    pub mc_components: Vec<S>,
    /// `weights[l] * mc_components[l]`, stored as computed.
    pub contributions: Vec<S>,
}

/// Decompose `mc(model, data)` along `hierarchy`.
///
/// Group log-densities `log h_l`, the point weights `w(l)_n`, and all three
/// MC evaluations share one per-point log-density matrix, which keeps the
/// additivity identity at float accuracy.
pub fn decompose<S: Scalar>(
    model: &MixtureModel<S>,
    data: &WeightedDataset<S>,
    hierarchy: &Hierarchy<S>,
) -> Result<McDecomposition<S>> {
    if data.dim() != model.dim() {
        return Err(Error::InvalidInput("data and model dimensions differ".into()));
    }
    let (rho, phi) = upper_model(model, hierarchy)?;
    let n = data.len();
    let k = model.k();
    let l = hierarchy.group_count();

    let log_densities = log_density_matrix(model, data);
    let log_pi: Vec<S> = model.weights().iter().map(|w| w.ln()).collect();
    let mc_total = mc_kernel(&log_pi, &log_densities, n, k, data.weights())?;

    // log h_l(x_n) for each group.
    let log_phi: Vec<Vec<S>> =
        phi.iter().map(|row| row.iter().map(|v| v.ln()).collect()).collect();
    let mut log_h = vec![S::neg_infinity(); n * l];
    let mut scratch = vec![S::zero(); k];
    for i in 0..n {
        let row = &log_densities[i * k..(i + 1) * k];
        for g in 0..l {
            if rho[g] > S::zero() {
                for j in 0..k {
                    scratch[j] = log_phi[g][j] + row[j];
                }
                log_h[i * l + g] = log_sum_exp(&scratch);
            }
        }
    }

    let log_rho: Vec<S> = rho.iter().map(|r| r.ln()).collect();
    let mc_interaction = mc_kernel(&log_rho, &log_h, n, l, data.weights())?;

    // Point weights per group: w(l)_n = ρ_l h_l(x_n) / f(x_n).
    let mut group_scratch = vec![S::zero(); l];
    let mut point_weights = vec![S::zero(); n * l];
    for i in 0..n {
        for g in 0..l {
            group_scratch[g] = log_rho[g] + log_h[i * l + g];
        }
        let log_f = log_sum_exp(&group_scratch);
        for g in 0..l {
            let lw = group_scratch[g] - log_f;
            point_weights[i * l + g] =
                if lw == S::neg_infinity() { S::zero() } else { lw.exp() };
        }
    }

    let data_weights = data.weights();
    let total_mass: S = match data_weights {
        Some(w) => w.iter().copied().sum(),
        None => fp(n as f64),
    };

    let mut weights = vec![S::zero(); l];
    let mut mc_components = vec![S::zero(); l];
    let mut contributions = vec![S::zero(); l];
    let mut combined = vec![S::zero(); n];
    for g in 0..l {
        let mut mass = S::zero();
        for i in 0..n {
            let v = match data_weights {
                Some(w) => w[i],
                None => S::one(),
            };
            let value = v * point_weights[i * l + g];
            combined[i] = value;
            mass += value;
        }
        weights[g] = mass / total_mass;
        mc_components[g] = if mass > S::zero() {
            mc_kernel(&log_phi[g], &log_densities, n, k, Some(&combined))?
        } else {
            S::zero()
        };
        contributions[g] = weights[g] * mc_components[g];
    }

    Ok(McDecomposition { mc_total, mc_interaction, weights, mc_components, contributions })
}

// ---------------------------------------------------------------------------
// Weighted fuzzy c-means
// ---------------------------------------------------------------------------

/// Controls for weighted fuzzy c-means over component means.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyCMeansConfig<S> {
    /// Number of centers (upper groups).
    pub group_count: usize,
    /// Fuzziness exponent `m`; must exceed 1.
    pub fuzziness: S,
    pub max_iterations: usize,
    /// Stop when no center moves farther than this between iterations.
    pub tolerance: S,
    pub rng_seed: u64,
}

impl<S: Scalar> Default for FuzzyCMeansConfig<S> {
    fn default() -> Self {
        Self {
            group_count: 4,
            fuzziness: fp(1.5),
            max_iterations: 300,
            tolerance: fp(1e-6),
            rng_seed: 0,
        }
    }
}

impl<S: Scalar> FuzzyCMeansConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.group_count == 0 {
            return Err(Error::InvalidInput("group_count must be >= 1".into()));
        }
        if !(self.fuzziness > S::one()) {
            return Err(Error::InvalidInput("fuzziness must exceed 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > S::zero()) {
            return Err(Error::InvalidInput("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Converged centers and memberships.
#[derive(Debug, Clone)]
pub struct FcmResult<S> {
    pub centers: Vec<Vec<S>>,
    /// Row-stochastic memberships, one row per input point.
    pub memberships: Vec<Vec<S>>,
    /// Objective value after each iteration; non-increasing.
    pub loss_trace: Vec<S>,
    pub iterations: usize,
}

fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Memberships of one point given squared distances to the centers.
///
/// Zero distances split the membership uniformly over the coinciding
/// centers. Otherwise the standard reciprocal-distance update applies:
/// membership decays with distance at rate `1/(m-1)` in the squared
/// distance, normalized over centers.
fn memberships_from_distances<S: Scalar>(dist2: &[S], fuzziness: S, out: &mut [S]) {
    let zero_hits = dist2.iter().filter(|&&d| d == S::zero()).count();
    if zero_hits > 0 {
        let share = S::one() / fp::<S>(zero_hits as f64);
        for (u, &d) in out.iter_mut().zip(dist2) {
            *u = if d == S::zero() { share } else { S::zero() };
        }
        return;
    }
    // Ratios against the closest center keep the powers bounded.
    let mut min = dist2[0];
    for &d in dist2.iter().skip(1) {
        if d < min {
            min = d;
        }
    }
    let exponent = S::one() / (fuzziness - S::one());
    let mut total = S::zero();
    for (u, &d) in out.iter_mut().zip(dist2) {
        let value = (min / d).powf(exponent);
        *u = value;
        total += value;
    }
    for u in out.iter_mut() {
        *u = *u / total;
    }
}

fn fcm_loss<S: Scalar>(
    points: &[(Vec<S>, S)],
    centers: &[Vec<S>],
    memberships: &[Vec<S>],
    fuzziness: S,
) -> S {
    let mut loss = S::zero();
    for ((point, weight), row) in points.iter().zip(memberships) {
        for (center, &u) in centers.iter().zip(row) {
            loss += *weight * u.powf(fuzziness) * squared_distance(point, center);
        }
    }
    loss
}

/// Weighted k-means++ seeding: the first center is drawn by weight, later
/// ones by weight times squared distance to the nearest chosen center.
fn seed_centers<S: Scalar>(
    points: &[(Vec<S>, S)],
    count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<S>> {
    let n = points.len();
    let pick = |scores: &[S], rng: &mut rand_chacha::ChaCha8Rng| -> usize {
        let total: S = scores.iter().copied().sum();
        if total > S::zero() {
            let mut target = fp::<S>(rng.random::<f64>()) * total;
            for (i, &s) in scores.iter().enumerate() {
                if target < s {
                    return i;
                }
                target -= s;
            }
        }
        rng.random_range(0..n)
    };
    let weights: Vec<S> = points.iter().map(|(_, w)| *w).collect();
    let mut centers = vec![points[pick(&weights, rng)].0.clone()];
    let mut dist2: Vec<S> =
        points.iter().map(|(p, _)| squared_distance(p, &centers[0])).collect();
    while centers.len() < count {
        let scores: Vec<S> = dist2.iter().zip(&weights).map(|(&d, &w)| d * w).collect();
        let chosen = pick(&scores, rng);
        centers.push(points[chosen].0.clone());
        let center = centers.last().unwrap().clone();
        for (d, (p, _)) in dist2.iter_mut().zip(points) {
            let candidate = squared_distance(p, &center);
            if candidate < *d {
                *d = candidate;
            }
        }
    }
    centers
}

/// Cluster weighted points into `group_count` fuzzy groups.
///
/// Alternates membership and center updates until no center moves more
/// than the tolerance. The objective
/// `Σ_i w_i Σ_l u_{il}^m ‖x_i - c_l‖²` never increases across iterations.
pub fn fuzzy_cmeans<S: Scalar>(
    points: &[(Vec<S>, S)],
    config: &FuzzyCMeansConfig<S>,
) -> Result<FcmResult<S>> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    let dim = points[0].0.len();
    for (i, (point, weight)) in points.iter().enumerate() {
        if point.len() != dim {
            return Err(Error::InvalidInput(format!("point {i} has mismatched dimension")));
        }
        if point.iter().any(|v| !v.is_finite()) || !weight.is_finite() || *weight < S::zero() {
            return Err(Error::InvalidInput(format!("point {i} is non-finite or negative")));
        }
    }
    let weight_sum: S = points.iter().map(|(_, w)| *w).sum();
    if !(weight_sum > S::zero()) {
        return Err(Error::InvalidInput("point weights must have a positive sum".into()));
    }
    let mut distinct: Vec<&[S]> = Vec::new();
    for (point, _) in points {
        if !distinct.iter().any(|d| *d == point.as_slice()) {
            distinct.push(point);
        }
    }
    if distinct.len() < config.group_count {
        return Err(Error::InvalidInput(format!(
            "{} distinct points cannot seed {} groups",
            distinct.len(),
            config.group_count
        )));
    }

    let l = config.group_count;
    let m = config.fuzziness;
    let mut rng = substream(config.rng_seed, &[FCM_TAG]);
    let mut centers = seed_centers(points, l, &mut rng);
    let mut memberships = vec![vec![S::zero(); l]; points.len()];
    let mut dist2 = vec![S::zero(); l];
    let mut loss_trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        iterations += 1;
        // Membership update for fixed centers.
        for ((point, _), row) in points.iter().zip(memberships.iter_mut()) {
            for (d, center) in dist2.iter_mut().zip(&centers) {
                *d = squared_distance(point, center);
            }
            memberships_from_distances(&dist2, m, row);
        }
        // Center update for fixed memberships.
        let mut movement = S::zero();
        for (g, center) in centers.iter_mut().enumerate() {
            let mut numerator = vec![S::zero(); dim];
            let mut denominator = S::zero();
            for ((point, weight), row) in points.iter().zip(&memberships) {
                let factor = *weight * row[g].powf(m);
                denominator += factor;
                for (acc, &x) in numerator.iter_mut().zip(point) {
                    *acc += factor * x;
                }
            }
            if denominator > S::zero() {
                let mut shift = S::zero();
                for (c, acc) in center.iter_mut().zip(numerator) {
                    let updated = acc / denominator;
                    shift += (updated - *c) * (updated - *c);
                    *c = updated;
                }
                let shift = shift.sqrt();
                if shift > movement {
                    movement = shift;
                }
            }
        }
        loss_trace.push(fcm_loss(points, &centers, &memberships, m));
        if movement < config.tolerance {
            break;
        }
    }

    // Memberships consistent with the final centers.
    for ((point, _), row) in points.iter().zip(memberships.iter_mut()) {
        for (d, center) in dist2.iter_mut().zip(&centers) {
            *d = squared_distance(point, center);
        }
        memberships_from_distances(&dist2, m, row);
    }

    Ok(FcmResult { centers, memberships, loss_trace, iterations })
}

// ---------------------------------------------------------------------------
// Tracked decomposition
// ---------------------------------------------------------------------------

/// Tracked trajectory with per-step decompositions against one shared set
/// of upper groups.
#[derive(Debug, Clone)]
pub struct DecompositionTrack<S> {
    pub track: TrackResult<S>,
    /// Upper-group centers in mean space, shared across all timesteps.
    pub centers: Vec<Vec<S>>,
    /// Per-timestep soft assignment of that step's components to groups.
    pub hierarchies: Vec<Hierarchy<S>>,
    /// Per-timestep decomposition of the step's MC.
    pub decompositions: Vec<McDecomposition<S>>,
}

/// Track MC over a stream and decompose every step against upper groups
/// shared across time.
///
/// The per-step component means (weighted by their mixture weights) are
/// pooled over all timesteps and clustered once by weighted fuzzy c-means;
/// each step's components then carry their pooled membership rows into the
/// decomposition. Components with zero weight take the hard membership row
/// of the nearest center. When the pool holds fewer distinct means than the
/// requested group count, the group count is clamped down to keep degenerate
/// streams decomposable.
pub fn track_decomposition<S: Scalar>(
    stream: &[WeightedDataset<S>],
    sdms_config: &SdmsConfig<S>,
    fcm_config: &FuzzyCMeansConfig<S>,
) -> Result<DecompositionTrack<S>> {
    fcm_config.validate()?;
    let track = track_mc(stream, sdms_config)?;

    // Pool positive-weight component means across time.
    let mut pooled: Vec<(Vec<S>, S)> = Vec::new();
    for step in &track.steps {
        let model = &step.fitted.model;
        for (j, component) in model.components().iter().enumerate() {
            let weight = model.weights()[j];
            if weight > S::zero() {
                pooled.push((component.mean().to_vec(), weight));
            }
        }
    }
    let mut distinct = 0usize;
    {
        let mut seen: Vec<&[S]> = Vec::new();
        for (point, _) in &pooled {
            if !seen.iter().any(|d| *d == point.as_slice()) {
                seen.push(point);
                distinct += 1;
            }
        }
    }
    let group_count = fcm_config.group_count.min(distinct.max(1));
    let fcm_config = FuzzyCMeansConfig { group_count, ..fcm_config.clone() };
    let fcm = fuzzy_cmeans(&pooled, &fcm_config)?;

    // Hand each step its components' membership rows.
    let mut hierarchies = Vec::with_capacity(track.steps.len());
    let mut cursor = 0usize;
    for step in &track.steps {
        let model = &step.fitted.model;
        let mut rows = Vec::with_capacity(model.k());
        for j in 0..model.k() {
            if model.weights()[j] > S::zero() {
                rows.push(fcm.memberships[cursor].clone());
                cursor += 1;
            } else {
                // Zero-weight component: hard row of the nearest center.
                let mean = model.component(j).mean();
                let mut nearest = 0;
                let mut best = squared_distance(mean, &fcm.centers[0]);
                for (g, center) in fcm.centers.iter().enumerate().skip(1) {
                    let d = squared_distance(mean, center);
                    if d < best {
                        best = d;
                        nearest = g;
                    }
                }
                let mut row = vec![S::zero(); group_count];
                row[nearest] = S::one();
                rows.push(row);
            }
        }
        hierarchies.push(Hierarchy::new(rows)?);
    }

    let decompositions: Vec<McDecomposition<S>> = track
        .steps
        .par_iter()
        .zip(hierarchies.par_iter())
        .zip(stream.par_iter())
        .map(|((step, hierarchy), window)| decompose(&step.fitted.model, window, hierarchy))
        .collect::<Result<_>>()?;

    Ok(DecompositionTrack { track, centers: fcm.centers, hierarchies, decompositions })
}
