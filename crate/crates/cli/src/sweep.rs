//! Right-hand-side grids and the sweep CSV.

use std::io::Write;

use cdk_core::duality::SweepEntry;
use cdk_core::model::Vector;

use crate::CliError;

pub const SWEEP_HEADER: [&str; 5] = [
    "omega_index",
    "omega",
    "F_alpha",
    "F_alpha_relaxed",
    "status",
];

/// Largest grid accepted from a `start:stop:step` spec.
const MAX_GRID: usize = 1_000_000;

/// Parses `start:stop:step` (inclusive of `stop`) or an explicit list.
///
/// Lists separate points with `;`; for `m = 1` commas also separate points,
/// otherwise a comma separates the coordinates of one point. Ranges need `m = 1`.
pub fn parse_grid(spec: &str, m: usize) -> Result<Vec<Vector>, CliError> {
    let spec = spec.trim();
    if spec.contains(':') {
        if m != 1 {
            return Err(CliError::Parse(format!(
                "a range grid needs one row, the instance has {m}"
            )));
        }
        let parts: Vec<f64> = spec.split(':').map(parse_f64).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(CliError::Parse(format!(
                "grid `{spec}` is not start:stop:step"
            )));
        };
        if stop < start {
            return Err(CliError::Parse("grid stop lies below start".into()));
        }
        if stop == start {
            return Ok(vec![Vector::from_element(1, start)]);
        }
        if !(step > 0.0) {
            return Err(CliError::Parse("grid step must be positive".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() + 1.0;
        if count > MAX_GRID as f64 {
            return Err(CliError::Parse(format!(
                "grid has more than {MAX_GRID} points"
            )));
        }
        return Ok((0..count as usize)
            .map(|k| Vector::from_element(1, start + k as f64 * step))
            .collect());
    }
    let points: Vec<&str> = if spec.contains(';') || m != 1 {
        spec.split(';').collect()
    } else {
        spec.split(',').collect()
    };
    points.into_iter().map(|p| parse_vector(p, m)).collect()
}

/// A comma-separated vector of length `m`.
pub fn parse_vector(s: &str, m: usize) -> Result<Vector, CliError> {
    let xs: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_, _>>()?;
    if xs.len() != m {
        return Err(CliError::Parse(format!(
            "`{s}` has {} entries, expected {m}",
            xs.len()
        )));
    }
    Ok(Vector::from_vec(xs))
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Parse(format!("`{s}` is not finite")))
    }
}

/// At most 12 significant digits, shortest form, `-inf`/`inf` for infinities.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x < 0.0 { "-inf" } else { "inf" }.into()
    } else {
        // `+ 0.0` turns -0 into 0
        let rounded: f64 = format!("{x:.11e}")
            .parse::<f64>()
            .expect("formatted float parses")
            + 0.0;
        let mag = rounded.abs();
        if mag == 0.0 || (1e-5..1e15).contains(&mag) {
            format!("{rounded}")
        } else {
            format!("{rounded:e}")
        }
    }
}

fn fmt_point(v: &Vector) -> String {
    v.iter().map(|&x| fmt12(x)).collect::<Vec<_>>().join(" ")
}

/// Writes the sweep CSV; vector right-hand sides are space-separated in the
/// `omega` column and unavailable values are left empty.
pub fn write_sweep<W: Write>(out: W, rows: &[SweepEntry]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for (k, row) in rows.iter().enumerate() {
        let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
        w.write_record([
            k.to_string(),
            fmt_point(&row.omega),
            opt(row.value),
            opt(row.relaxed),
            row.status.as_str().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
