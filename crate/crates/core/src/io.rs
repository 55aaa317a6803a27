//! Delimited text formats for trajectories, sweep results and spectra.
//!
//! Trajectory files look like
//!
//! ```text
//! # dt=60 groups=0,1,2|3,4,5
//! t,x,y,z,vx,vy,vz
//! 0.0000000000000000e0,...
//! ```
//!
//! The comment line is optional when the file has at least two rows, in
//! which case `dt` is taken from the time column. Values are written with 17
//! significant digits so that reading back is exact.

use crate::error::Result;
use crate::experiments::SweepResult;
use crate::numerics::RealMatrix;
use crate::spectral::Spectrum;
use crate::trajectory::{Groups, Trajectory};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}:{line}: {message}", path.display())]
    InFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl FormatError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches a file path to a parse error.
    pub fn at(self, path: &Path) -> Self {
        match self {
            FormatError::Parse { line, message } => FormatError::InFile {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_indices(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

pub fn trajectory_to_string(traj: &Trajectory) -> String {
    let mut out = String::new();
    let g = traj.groups();
    let _ = write!(out, "# dt={} t0={}", fmt_value(traj.dt()), fmt_value(traj.t0()));
    if !g.is_empty() {
        let _ = write!(out, " groups={}|{}", fmt_indices(&g.position), fmt_indices(&g.velocity));
    }
    out.push('\n');
    out.push('t');
    for l in traj.labels() {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for k in 0..traj.len() {
        out.push_str(&fmt_value(traj.time(k)));
        for v in traj.state(k).iter() {
            out.push(',');
            out.push_str(&fmt_value(*v));
        }
        out.push('\n');
    }
    out
}

fn parse_indices(text: &str, line: usize) -> Result<Vec<usize>, FormatError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| FormatError::parse(line, format!("bad group index `{s}`")))
        })
        .collect()
}

#[derive(Default)]
struct Meta {
    dt: Option<f64>,
    t0: Option<f64>,
    groups: Option<Groups>,
}

fn parse_meta(body: &str, line: usize, meta: &mut Meta) -> Result<(), FormatError> {
    for token in body.split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            continue;
        };
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| FormatError::parse(line, format!("bad value for {key}: `{value}`")))
        };
        match key {
            "dt" => meta.dt = Some(number()?),
            "t0" => meta.t0 = Some(number()?),
            "groups" => {
                let (p, v) = value.split_once('|').unwrap_or((value, ""));
                meta.groups = Some(Groups {
                    position: parse_indices(p, line)?,
                    velocity: parse_indices(v, line)?,
                });
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn trajectory_from_str(text: &str) -> Result<Trajectory> {
    let mut meta = Meta::default();
    let mut header: Option<Vec<String>> = None;
    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            parse_meta(body, no, &mut meta)?;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = &header else {
            if fields.len() < 2 || fields[0] != "t" {
                return Err(FormatError::parse(no, "expected header `t,<component names>`").into());
            }
            header = Some(fields[1..].iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != cols.len() + 1 {
            return Err(FormatError::parse(
                no,
                format!("expected {} fields, found {}", cols.len() + 1, fields.len()),
            )
            .into());
        }
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v = f
                .parse::<f64>()
                .map_err(|_| FormatError::parse(no, format!("not a number: `{f}`")))?;
            if !v.is_finite() {
                return Err(FormatError::parse(no, format!("non-finite value `{f}`")).into());
            }
            values.push(v);
        }
        times.push((no, values[0]));
        rows.push(values[1..].to_vec());
    }
    let labels = header.ok_or_else(|| FormatError::parse(text.lines().count().max(1), "missing header"))?;
    if rows.is_empty() {
        return Err(FormatError::parse(text.lines().count().max(1), "no data rows").into());
    }
    let dt = match meta.dt {
        Some(dt) => dt,
        None if times.len() >= 2 => times[1].1 - times[0].1,
        None => return Err(FormatError::parse(times[0].0, "single-row file needs a `# dt=` comment").into()),
    };
    if !(dt > 0.0) {
        return Err(FormatError::parse(1, format!("dt must be positive, got {dt}")).into());
    }
    let t0 = meta.t0.unwrap_or(times[0].1);
    for (k, &(no, t)) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt {
            return Err(FormatError::parse(no, format!("time {t} breaks uniform sampling (expected {expected})")).into());
        }
    }
    let n = labels.len();
    let states = RealMatrix::from_fn(n, rows.len(), |i, j| rows[j][i]);
    let traj = Trajectory::new(dt, t0, states, labels)?;
    match meta.groups {
        Some(g) => traj.with_groups(g),
        None => Ok(traj),
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = read_text(path)?;
    trajectory_from_str(&text).map_err(|e| match e {
        crate::error::Error::Format(f) => f.at(path).into(),
        other => other,
    })
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    Ok(write_text(path, &trajectory_to_string(traj))?)
}

pub fn sweep_to_string(result: &SweepResult) -> String {
    let mut out = String::new();
    let fixed: Vec<String> = result.fixed_params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(out, "# sweep={} {}", result.axis, fixed.join(" "));
    if let Some(b) = result.best {
        let _ = writeln!(out, "# best={}", result.points[b].value);
    }
    let groups: Vec<String> = result
        .points
        .iter()
        .find_map(|p| p.outcome.as_ref().ok())
        .map(|m| m.groups.iter().map(|(g, _)| g.clone()).collect())
        .unwrap_or_default();
    let _ = write!(out, "{},eps,eps_train,eps_pred,rank", result.axis);
    for g in &groups {
        let _ = write!(out, ",eps_{g}");
    }
    out.push_str(",status\n");
    for p in &result.points {
        let _ = write!(out, "{}", p.value);
        match &p.outcome {
            Ok(m) => {
                let pred = m.eps_pred.map(fmt_value).unwrap_or_default();
                let _ = write!(out, ",{},{},{},{}", fmt_value(m.eps), fmt_value(m.eps_train), pred, m.rank);
                for (_, e) in &m.groups {
                    let _ = write!(out, ",{}", fmt_value(*e));
                }
                out.push_str(",ok\n");
            }
            Err(msg) => {
                out.push_str(",,,,");
                for _ in &groups {
                    out.push(',');
                }
                let _ = writeln!(out, ",\"{}\"", msg.replace('"', "'"));
            }
        }
    }
    out
}

pub fn spectrum_to_string(spec: &Spectrum) -> String {
    let mut out = String::from("freq_mhz,magnitude\n");
    for (f, m) in spec.freqs.iter().zip(&spec.magnitudes) {
        let _ = writeln!(out, "{},{}", fmt_value(f * 1000.0), fmt_value(*m));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn round_trip_is_exact() {
        let states = RealMatrix::from_fn(6, 4, |i, j| (i as f64 + 1.0) / 3.0 * (j as f64 + 0.1).sin() * 1e3);
        let labels = ["x", "y", "z", "vx", "vy", "vz"].iter().map(|s| s.to_string()).collect();
        let t = Trajectory::new(60.0, 120.0, states, labels)
            .unwrap()
            .with_groups(Groups::orbital())
            .unwrap();
        let back = trajectory_from_str(&trajectory_to_string(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn single_row_needs_dt() {
        let t = Trajectory::from_scalar(0.25, &[1.5]).unwrap();
        assert_eq!(trajectory_from_str(&trajectory_to_string(&t)).unwrap(), t);
        assert!(trajectory_from_str("t,x\n0,1\n").is_err());
    }

    #[test]
    fn dt_from_time_column() {
        let t = trajectory_from_str("t,a\n0,1\n0.5,2\n1.0,3\n").unwrap();
        assert_eq!(t.dt(), 0.5);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn errors_name_the_line() {
        match trajectory_from_str("t,a\n0,1\n1,oops\n") {
            Err(Error::Format(FormatError::Parse { line: 3, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
        match trajectory_from_str("t,a\n0,1\n1,2\n5,3\n") {
            Err(Error::Format(FormatError::Parse { line: 4, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(trajectory_from_str("x,y\n").is_err());
    }
}
