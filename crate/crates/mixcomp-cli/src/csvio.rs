//! CSV writers and the track-table reader used by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mixcomp::decomp::DecompositionTrack;
use mixcomp::detect::EvalResult;
use mixcomp::mixture::WeightedDataset;
use mixcomp::sdms::TrackResult;
use mixcomp::{Error, Result};

/// Nine significant digits, scientific: the one float format every output
/// uses.
pub fn g9(value: f64) -> String {
    format!("{value:.8e}")
}

pub fn write_stream_csv(path: &Path, stream: &[WeightedDataset<f64>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let dim = stream.first().map_or(0, |w| w.dim());
    let mut header = String::from("t");
    for d in 1..=dim {
        header.push_str(&format!(",x{d}"));
    }
    writeln!(out, "{header}")?;
    for (index, window) in stream.iter().enumerate() {
        let t = index + 1;
        for i in 0..window.len() {
            let row = window.row(i);
            let mut line = t.to_string();
            for value in row {
                line.push(',');
                line.push_str(&g9(*value));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_track_csv(path: &Path, track: &TrackResult<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,k,mc,exp_mc,cost,carried")?;
    for step in &track.steps {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            step.t,
            step.selected_k,
            g9(step.mc),
            g9(step.mc.exp()),
            g9(step.total_cost),
            u8::from(step.carried_forward)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_decomposition_csv(path: &Path, result: &DecompositionTrack<f64>) -> Result<()> {
    let groups = result.centers.len();
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("t,k,mc_total,mc_interaction");
    for section in ["w", "mc_component", "contribution"] {
        for g in 1..=groups {
            header.push_str(&format!(",{section}_{g}"));
        }
    }
    writeln!(out, "{header}")?;
    for (step, decomp) in result.track.steps.iter().zip(&result.decompositions) {
        let mut line = format!(
            "{},{},{},{}",
            step.t,
            step.selected_k,
            g9(decomp.mc_total),
            g9(decomp.mc_interaction)
        );
        for values in [&decomp.weights, &decomp.mc_components, &decomp.contributions] {
            for g in 0..groups {
                line.push(',');
                line.push_str(&g9(values[g]));
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_centers_csv(path: &Path, centers: &[Vec<f64>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let dim = centers.first().map_or(0, Vec::len);
    let mut header = String::from("group");
    for d in 1..=dim {
        header.push_str(&format!(",x{d}"));
    }
    writeln!(out, "{header}")?;
    for (g, center) in centers.iter().enumerate() {
        let mut line = (g + 1).to_string();
        for value in center {
            line.push(',');
            line.push_str(&g9(*value));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_alerts_csv(path: &Path, alerts: &[usize]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t")?;
    for t in alerts {
        writeln!(out, "{t}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report_csv(path: &Path, mode: &str, result: &EvalResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "mode,delay,far,alerts")?;
    let alerts: Vec<String> = result.alerts.iter().map(usize::to_string).collect();
    writeln!(out, "{mode},{},{},{}", result.delay, g9(result.far), alerts.join(";"))?;
    out.flush()?;
    Ok(())
}

/// One experiment table row.
pub struct ExperimentRow {
    pub dataset: String,
    pub direction: String,
    pub criterion: String,
    pub seeds: usize,
    pub delay_mc: f64,
    pub far_mc: f64,
    pub delay_k: f64,
    pub far_k: f64,
}

pub fn write_experiment_csv(path: &Path, rows: &[ExperimentRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "dataset,direction,criterion,seeds,delay_mc,far_mc,delay_k,far_k,delay_diff,far_diff"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.dataset,
            row.direction,
            row.criterion,
            row.seeds,
            g9(row.delay_mc),
            g9(row.far_mc),
            g9(row.delay_k),
            g9(row.far_k),
            g9(row.delay_mc - row.delay_k),
            g9(row.far_mc - row.far_k)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed track CSV: the columns `detect`/`eval` need.
pub struct TrackTable {
    pub mc: Vec<f64>,
    pub k: Vec<f64>,
    pub carried: Vec<bool>,
}

pub fn read_track_csv(path: &Path) -> Result<TrackTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, line)) => line.split(',').map(str::trim).collect(),
        None => return Err(Error::Schema("track file is empty".into())),
    };
    let column = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Schema(format!("missing `{name}` column")))
    };
    let t_col = column("t")?;
    let k_col = column("k")?;
    let mc_col = column("mc")?;
    let carried_col = header.iter().position(|h| *h == "carried");

    let mut table = TrackTable { mc: Vec::new(), k: Vec::new(), carried: Vec::new() };
    let mut expected_t = 1usize;
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("expected {} fields, got {}", header.len(), fields.len()),
            });
        }
        let parse_f64 = |field: &str| -> Result<f64> {
            field.parse().map_err(|_| Error::Parse {
                line: line_no,
                detail: format!("`{field}` is not a number"),
            })
        };
        let t: usize = fields[t_col].parse().map_err(|_| Error::Parse {
            line: line_no,
            detail: format!("`{}` is not a timestep", fields[t_col]),
        })?;
        if t != expected_t {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("timesteps must run 1..T contiguously; saw {t}, expected {expected_t}"),
            });
        }
        expected_t += 1;
        table.k.push(parse_f64(fields[k_col])?);
        table.mc.push(parse_f64(fields[mc_col])?);
        let carried = match carried_col {
            Some(col) => fields[col] == "1" || fields[col].eq_ignore_ascii_case("true"),
            None => false,
        };
        table.carried.push(carried);
    }
    if table.mc.is_empty() {
        return Err(Error::Schema("track file has no rows".into()));
    }
    Ok(table)
}
