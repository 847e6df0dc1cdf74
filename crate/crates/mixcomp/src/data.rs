//! Synthetic drifting-cluster stream generators and CSV ingestion.
//!
//! Both generators emit `T` windows of `N` three-dimensional points with
//! deterministic per-component counts; only the Gaussian noise is random.
//! The `move` stream drifts one cluster's mean away from a neighbor during
//! a transaction period; the `imbalance` stream starves one cluster's count
//! in favor of a neighbor. Window contents are keyed by the window's
//! forward timestep, so the reversed stream is exactly the forward stream
//! played backwards.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::fp;
use crate::mixture::WeightedDataset;
use crate::rng::substream;
use crate::Scalar;

/// Substream tag namespace for window generation.
const GEN_TAG: u64 = 0x6d6f7665;

/// Shape of a generated stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSpec {
    /// Number of windows `T`.
    pub t_count: usize,
    /// Points per window `N`.
    pub n_per_t: usize,
    /// Point dimension; the bundled generators require 3.
    pub dimension: usize,
    pub rng_seed: u64,
    /// Emit windows in reverse timestep order.
    pub reversed: bool,
}

impl Default for StreamSpec {
    fn default() -> Self {
        Self { t_count: 150, n_per_t: 1000, dimension: 3, rng_seed: 0, reversed: false }
    }
}

impl StreamSpec {
    fn validate(&self) -> Result<()> {
        if self.t_count == 0 {
            return Err(Error::InvalidInput("t_count must be >= 1".into()));
        }
        if self.n_per_t == 0 {
            return Err(Error::InvalidInput("n_per_t must be >= 1".into()));
        }
        if self.dimension != 3 {
            return Err(Error::InvalidInput(format!(
                "generators are defined for dimension 3, got {}",
                self.dimension
            )));
        }
        Ok(())
    }
}

/// Drift offset of the moving cluster at forward timestep `t` (1-based):
/// 0 up to t = 50, then 0.12·(t − 50) through t = 100, then 6.
pub fn move_alpha(t: usize) -> f64 {
    match t {
        0..=50 => 0.0,
        51..=100 => 0.12 * (t as f64 - 50.0),
        _ => 6.0,
    }
}

/// Count shift of the starving cluster at forward timestep `t` (1-based):
/// 0 up to t = 50, then 5·(t − 51) through t = 100, then 250.
///
/// Note the differing anchors: the move schedule is already nonzero at
/// t = 51 while this one starts from zero there, and the t = 100 value 245
/// jumps to 250 at t = 101.
pub fn imbalance_alpha(t: usize) -> f64 {
    match t {
        0..=50 => 0.0,
        51..=100 => 5.0 * (t as f64 - 51.0),
        _ => 250.0,
    }
}

/// Per-component point counts of the move stream: thirds, remainder to the
/// last component.
pub fn move_counts(n: usize) -> [usize; 3] {
    let third = n / 3;
    [third, third, n - 2 * third]
}

/// Per-component point counts of the imbalance stream at timestep `t`:
/// quarters, with `imbalance_alpha(t)` points (scaled for `n != 1000`)
/// shifted from the fourth component to the third.
pub fn imbalance_counts(t: usize, n: usize) -> [usize; 4] {
    let quarter = n / 4;
    let rest = n - 3 * quarter;
    let shift = (imbalance_alpha(t) * n as f64 / 1000.0).round() as usize;
    let shift = shift.min(rest);
    [quarter, quarter, quarter + shift, rest - shift]
}

fn gaussian_window<S: Scalar>(
    spec: &StreamSpec,
    t: usize,
    blocks: &[(usize, [f64; 3])],
) -> Result<WeightedDataset<S>> {
    let mut rng = substream(spec.rng_seed, &[GEN_TAG, t as u64]);
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(spec.n_per_t);
    for &(count, mean) in blocks {
        for _ in 0..count {
            rows.push(
                mean.iter()
                    .map(|&m| fp::<S>(m + rng.sample::<f64, _>(StandardNormal)))
                    .collect(),
            );
        }
    }
    WeightedDataset::from_rows(rows)
}

fn ordered_timesteps(spec: &StreamSpec) -> Vec<usize> {
    if spec.reversed {
        (1..=spec.t_count).rev().collect()
    } else {
        (1..=spec.t_count).collect()
    }
}

/// Three unit-covariance clusters at x = 0, 10, and 10 + `move_alpha(t)`,
/// populated in fixed thirds.
pub fn gen_move_gaussian<S: Scalar>(spec: &StreamSpec) -> Result<Vec<WeightedDataset<S>>> {
    spec.validate()?;
    let counts = move_counts(spec.n_per_t);
    ordered_timesteps(spec)
        .into_iter()
        .map(|t| {
            let alpha = move_alpha(t);
            let blocks = [
                (counts[0], [0.0, 0.0, 0.0]),
                (counts[1], [10.0, 0.0, 0.0]),
                (counts[2], [10.0 + alpha, 0.0, 0.0]),
            ];
            gaussian_window(spec, t, &blocks)
        })
        .collect()
}

/// Four unit-covariance clusters at x = 0, 10, 20, 30 whose last count
/// drains into the third per `imbalance_counts`; at t >= 101 the fourth
/// cluster is empty.
pub fn gen_imbalance_gaussian<S: Scalar>(spec: &StreamSpec) -> Result<Vec<WeightedDataset<S>>> {
    spec.validate()?;
    ordered_timesteps(spec)
        .into_iter()
        .map(|t| {
            let counts = imbalance_counts(t, spec.n_per_t);
            let blocks = [
                (counts[0], [0.0, 0.0, 0.0]),
                (counts[1], [10.0, 0.0, 0.0]),
                (counts[2], [20.0, 0.0, 0.0]),
                (counts[3], [30.0, 0.0, 0.0]),
            ];
            gaussian_window(spec, t, &blocks)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

fn split_csv_line(line: &str) -> Vec<String> {
    line.split(',').map(|field| field.trim().to_string()).collect()
}

/// Read a stream shaped as `t,<feature...>` rows: one dataset per distinct
/// `t`, windows ordered by ascending `t`.
pub fn read_stream_csv<S: Scalar>(path: &Path) -> Result<Vec<WeightedDataset<S>>> {
    let file = std::fs::File::open(path)?;
    read_stream(BufReader::new(file))
}

/// [`read_stream_csv`] over any reader.
pub fn read_stream<S: Scalar, R: Read>(reader: BufReader<R>) -> Result<Vec<WeightedDataset<S>>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => split_csv_line(&line?),
        None => return Ok(Vec::new()),
    };
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Schema("stream header must start with a `t` column".into()));
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err(Error::Schema("stream header has no feature columns".into()));
    }
    let mut windows: Vec<(i64, Vec<Vec<S>>)> = Vec::new();
    for (index, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let fields = split_csv_line(&line);
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("expected {} fields, got {}", dim + 1, fields.len()),
            });
        }
        let t: i64 = fields[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            detail: format!("`{}` is not an integer timestep", fields[0]),
        })?;
        let mut row = Vec::with_capacity(dim);
        for field in &fields[1..] {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                detail: format!("`{field}` is not a number"),
            })?;
            row.push(fp::<S>(value));
        }
        match windows.iter_mut().find(|(key, _)| *key == t) {
            Some((_, rows)) => rows.push(row),
            None => windows.push((t, vec![row])),
        }
    }
    windows.sort_by_key(|(t, _)| *t);
    windows
        .into_iter()
        .map(|(_, rows)| WeightedDataset::from_rows(rows))
        .collect()
}

/// Aggregate a long-format table into a stream of per-window datasets.
///
/// The file must carry a header naming an `entity` column, the `time_column`
/// (integer times starting at 1), and numeric feature columns. For each
/// emitted window `t` in `window_length..=max_time`, every entity
/// contributes one point: its feature sums over times
/// `t - window_length + 1 ..= t` (zero when absent). `feature_columns`
/// selects and orders the features; `None` takes every non-key column in
/// header order. An empty file yields an empty stream.
pub fn ingest_csv<S: Scalar>(
    path: &Path,
    window_length: usize,
    time_column: &str,
    feature_columns: Option<&[String]>,
) -> Result<Vec<WeightedDataset<S>>> {
    let file = std::fs::File::open(path)?;
    ingest(BufReader::new(file), window_length, time_column, feature_columns)
}

/// [`ingest_csv`] over any reader.
pub fn ingest<S: Scalar, R: Read>(
    reader: BufReader<R>,
    window_length: usize,
    time_column: &str,
    feature_columns: Option<&[String]>,
) -> Result<Vec<WeightedDataset<S>>> {
    if window_length == 0 {
        return Err(Error::InvalidInput("window length must be >= 1".into()));
    }
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => split_csv_line(&line?),
        None => return Ok(Vec::new()),
    };
    let entity_col = header
        .iter()
        .position(|name| name == "entity")
        .ok_or_else(|| Error::Schema("missing `entity` column".into()))?;
    let time_col = header
        .iter()
        .position(|name| name == time_column)
        .ok_or_else(|| Error::Schema(format!("missing `{time_column}` column")))?;
    let feature_cols: Vec<usize> = match feature_columns {
        Some(names) => names
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Schema(format!("missing `{name}` column")))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&i| i != entity_col && i != time_col).collect(),
    };
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns selected".into()));
    }

    // (entity, time) -> feature sums.
    let mut records: Vec<(String, usize, Vec<f64>)> = Vec::new();
    let mut max_time = 0usize;
    for (index, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let fields = split_csv_line(&line);
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("expected {} fields, got {}", header.len(), fields.len()),
            });
        }
        let time: usize = fields[time_col].parse().map_err(|_| Error::Parse {
            line: line_no,
            detail: format!("`{}` is not a positive integer time", fields[time_col]),
        })?;
        if time == 0 {
            return Err(Error::Parse {
                line: line_no,
                detail: "times are 1-based".into(),
            });
        }
        max_time = max_time.max(time);
        let mut features = Vec::with_capacity(feature_cols.len());
        for &col in &feature_cols {
            let value: f64 = fields[col].parse().map_err(|_| Error::Parse {
                line: line_no,
                detail: format!("`{}` is not a number", fields[col]),
            })?;
            features.push(value);
        }
        let entity = fields[entity_col].clone();
        match records.iter_mut().find(|(e, t, _)| *e == entity && *t == time) {
            Some((_, _, sums)) => {
                for (sum, value) in sums.iter_mut().zip(&features) {
                    *sum += value;
                }
            }
            None => records.push((entity, time, features)),
        }
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }

    let mut entities: Vec<String> = records.iter().map(|(e, _, _)| e.clone()).collect();
    entities.sort();
    entities.dedup();

    let dim = feature_cols.len();
    let mut stream = Vec::new();
    for t in window_length..=max_time {
        let lo = t + 1 - window_length;
        let rows: Vec<Vec<S>> = entities
            .iter()
            .map(|entity| {
                let mut sums = vec![0.0f64; dim];
                for (e, time, features) in &records {
                    if e == entity && *time >= lo && *time <= t {
                        for (sum, value) in sums.iter_mut().zip(features) {
                            *sum += value;
                        }
                    }
                }
                sums.into_iter().map(fp::<S>).collect()
            })
            .collect();
        stream.push(WeightedDataset::from_rows(rows)?);
    }
    Ok(stream)
}
