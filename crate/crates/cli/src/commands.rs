use crate::{
    Command, DmdArgs, FitArgs, GenerateArgs, Preset, PredictArgs, RankArgs, SpectrumArgs, SweepCommand, SweepCommon,
    System, WindowArg,
};
use hankel_dmd::dmd::{fit_with, AmplitudeFit, DmdModel, DmdOptions, ModeKind, TruncationPolicy};
use hankel_dmd::dynamics::{
    elements_to_state, kepler_period, pendulum_period, propagate, DragConfig, GravityModel, IntegratorConfig,
    OrbitalElements, Pendulum, Perturbation, TwoBody,
};
use hankel_dmd::experiments::{sweep_delays, sweep_horizon, sweep_sampling, sweep_window, SweepContext};
use hankel_dmd::io::{
    read_text, read_trajectory, spectrum_to_string, sweep_to_string, write_text, write_trajectory,
};
use hankel_dmd::spectral::{dominant_peaks, estimate_period, fft_spectrum, Window, DEFAULT_PAD_FACTOR};
use hankel_dmd::tle::{parse_tle_file, tle_to_elements};
use hankel_dmd::{build_hankel, minimal_delays, presets, Error, Execution, Trajectory};
use std::fmt::{self, Write as _};
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Rank(a) => rank(a),
        Command::Sweep { axis } => sweep(axis),
        Command::Spectrum(a) => spectrum(a),
    }
}

fn parse_elements(text: &str) -> Result<OrbitalElements> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| usage(format!("--elements expects six numbers, got `{text}`")))?;
    if v.len() != 6 {
        return usage(format!("--elements expects six numbers, got {}", v.len()));
    }
    Ok(OrbitalElements {
        a: v[0],
        e: v[1],
        i: v[2],
        raan: v[3],
        argp: v[4],
        true_anomaly: v[5],
    })
}

/// Initial elements and the TLE's B*, when one was read.
fn initial_elements(a: &GenerateArgs, g: &GravityModel) -> Result<(OrbitalElements, Option<f64>)> {
    if let Some(path) = &a.tle {
        let records = parse_tle_file(&read_text(path)?).map_err(Error::from)?;
        let Some(rec) = records.get(a.tle_index) else {
            return usage(format!(
                "{} holds {} record(s); --tle-index {} is out of range",
                path.display(),
                records.len(),
                a.tle_index
            ));
        };
        return Ok((tle_to_elements(rec, g)?, Some(rec.bstar)));
    }
    if let Some(text) = &a.elements {
        return Ok((parse_elements(text)?, None));
    }
    Ok((
        match a.preset {
            Preset::Iss => presets::ISS,
            Preset::Molniya => presets::MOLNIYA,
        },
        None,
    ))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = IntegratorConfig {
        rtol: a.rtol,
        atol: a.atol,
        ..IntegratorConfig::default()
    };
    let traj = match a.system {
        System::Pendulum => {
            if !(a.amplitude > 0.0 && a.amplitude < std::f64::consts::PI && a.omega0_sq > 0.0) {
                return usage("pendulum needs --omega0-sq > 0 and --amplitude in (0, π)");
            }
            let period = pendulum_period(a.omega0_sq, a.amplitude);
            let dt = a.dt.unwrap_or(0.01);
            let duration = a.duration.unwrap_or(a.periods.unwrap_or(10.0) * period);
            let sys = Pendulum { omega0_sq: a.omega0_sq };
            propagate(&sys, &[a.amplitude, 0.0], dt, duration, &cfg)?
        }
        System::Kepler | System::J2 | System::Drag => {
            let g = GravityModel::earth();
            let (el, tle_bstar) = initial_elements(&a, &g)?;
            let perturbation = match a.system {
                System::Kepler => Perturbation::None,
                System::J2 => Perturbation::J2,
                _ => Perturbation::Drag(DragConfig {
                    atmosphere_rotates: !a.static_atmosphere,
                    ..DragConfig::with_bstar(a.bstar.or(tle_bstar).unwrap_or(DragConfig::default().bstar))
                }),
            };
            let (r, v) = elements_to_state(&el, &g)?;
            let period = kepler_period(el.a, g.mu);
            let dt = a.dt.unwrap_or(60.0);
            let duration = a.duration.unwrap_or(a.periods.unwrap_or(10.0) * period);
            let sys = TwoBody::new(g, perturbation)?;
            propagate(&sys, &[r.x, r.y, r.z, v.x, v.y, v.z], dt, duration, &cfg)?
        }
    };
    write_trajectory(&a.output, &traj)?;
    Ok(())
}

fn dmd_options(a: &DmdArgs) -> DmdOptions {
    DmdOptions {
        truncation: TruncationPolicy {
            energy_fraction: a.energy,
            max_rank: a.max_rank,
        },
        modes: if a.projected { ModeKind::Projected } else { ModeKind::Exact },
        amplitudes: if a.all_snapshots {
            AmplitudeFit::AllSnapshots
        } else {
            AmplitudeFit::FirstSnapshot
        },
    }
}

fn period_of(traj: &Trajectory, given: Option<f64>) -> Result<f64> {
    match given {
        Some(p) if p > 0.0 && p.is_finite() => Ok(p),
        Some(p) => usage(format!("--period must be positive, got {p}")),
        None => Ok(estimate_period(traj, DEFAULT_PAD_FACTOR)?),
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let traj = read_trajectory(&a.input)?;
    let train_len = match (a.train_samples, a.train_periods) {
        (Some(n), _) => n,
        (None, Some(p)) => SweepContext::new(period_of(&traj, a.period)?).window_len(p, traj.dt()),
        (None, None) => traj.len(),
    };
    if train_len > traj.len() {
        return Err(Error::TooShort {
            required: train_len,
            available: traj.len(),
        }
        .into());
    }
    let window = traj.window(0, train_len)?;
    let model = fit_with(&build_hankel(&window, a.delays)?, &dmd_options(&a.dmd), traj.dt())?;
    write_text(&a.output, &model.to_json()?)?;
    Ok(())
}

fn value(v: f64) -> String {
    format!("{v:.16e}")
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = DmdModel::from_json(&read_text(&a.model)?)?;
    let input = a.input.as_deref().map(read_trajectory).transpose()?;
    let labels: Vec<String> = match &input {
        Some(t) if t.dim() == model.state_dim => t.labels().to_vec(),
        Some(t) => {
            return Err(Error::InvalidArgument(format!(
                "{} has {} components, the model predicts {}",
                a.input.as_deref().unwrap_or(Path::new("")).display(),
                t.dim(),
                model.state_dim
            ))
            .into())
        }
        None => (0..model.state_dim).map(|i| format!("x{i}")).collect(),
    };
    let mut out = String::new();
    let _ = writeln!(out, "# dt={} t0={}", value(model.dt), value(model.train_start));
    let _ = writeln!(out, "t,{},source", labels.join(","));
    if let Some(t) = &input {
        for k in 0..t.len() {
            out.push_str(&value(t.time(k)));
            for x in t.state(k).iter() {
                let _ = write!(out, ",{}", value(*x));
            }
            out.push_str(",input\n");
        }
    }
    let rows = model.predict_range(a.start, a.count);
    for j in 0..a.count {
        out.push_str(&value(model.train_start + (a.start + j) as f64 * model.dt));
        for x in rows.column(j).iter() {
            let _ = write!(out, ",{}", value(*x));
        }
        out.push_str(",dmd\n");
    }
    write_text(&a.output, &out)?;
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    let traj = read_trajectory(&a.input)?;
    let md = minimal_delays(&traj, a.l_max, a.rel_tol)?;
    let mut out = String::from("l,rank\n");
    for (l, r) in &md.rank_curve {
        let _ = writeln!(out, "{l},{r}");
    }
    let _ = writeln!(out, "l_star={}", md.l_star);
    print!("{out}");
    Ok(())
}

/// Comma list or inclusive `start:end[:step]` range.
fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("cannot read axis values `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.len() {
        1 => text.split(',').map(num).collect::<Result<Vec<_>>>()?,
        2 | 3 => {
            let (start, end) = (num(parts[0])?, num(parts[1])?);
            let step = if parts.len() == 3 { num(parts[2])? } else { 1.0 };
            if !(step > 0.0) || end < start {
                return Err(bad());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        _ => return Err(bad()),
    };
    if values.is_empty() || values.windows(2).any(|w| !(w[1] > w[0])) {
        return usage(format!("axis values `{text}` must be strictly increasing"));
    }
    Ok(values)
}

fn parse_counts(text: &str) -> Result<Vec<usize>> {
    parse_values(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                usage(format!("axis value {v} must be a positive integer"))
            }
        })
        .collect()
}

fn context(c: &SweepCommon, traj: &Trajectory) -> Result<SweepContext> {
    let execution = if c.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    Ok(SweepContext::new(period_of(traj, c.period)?)
        .with_dmd(dmd_options(&c.dmd))
        .with_execution(execution))
}

fn sweep(axis: SweepCommand) -> Result<()> {
    let (common, result) = match axis {
        SweepCommand::Delays { common, train_periods } => {
            let traj = read_trajectory(&common.input)?;
            let ctx = context(&common, &traj)?;
            let r = sweep_delays(&traj, &parse_counts(&common.values)?, train_periods, &ctx)?;
            (common, r)
        }
        SweepCommand::Window { common, delays } => {
            let traj = read_trajectory(&common.input)?;
            let ctx = context(&common, &traj)?;
            let r = sweep_window(&traj, delays, &parse_values(&common.values)?, &ctx)?;
            (common, r)
        }
        SweepCommand::Horizon {
            common,
            delays,
            train_periods,
        } => {
            let traj = read_trajectory(&common.input)?;
            let ctx = context(&common, &traj)?;
            let r = sweep_horizon(&traj, delays, train_periods, &parse_values(&common.values)?, &ctx)?;
            (common, r)
        }
        SweepCommand::Sampling {
            common,
            delays,
            train_periods,
        } => {
            let traj = read_trajectory(&common.input)?;
            let ctx = context(&common, &traj)?;
            let r = sweep_sampling(&traj, delays, &parse_counts(&common.values)?, train_periods, &ctx)?;
            (common, r)
        }
    };
    write_text(&common.output, &sweep_to_string(&result))?;
    if let Some(v) = result.best_value() {
        println!("best {}={v}", result.axis);
    }
    Ok(())
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    if a.pad == 0 {
        return usage("--pad must be at least 1");
    }
    let traj = read_trajectory(&a.input)?;
    let window = match a.window {
        WindowArg::None => Window::None,
        WindowArg::Hamming => Window::Hamming,
    };
    let spec = fft_spectrum(&traj, a.pad, window)?;
    write_text(&a.output, &spectrum_to_string(&spec))?;
    if a.peaks > 0 {
        println!("freq_mhz,magnitude");
        for p in dominant_peaks(&spec, a.peaks) {
            println!("{},{}", value(p.freq_mhz), value(p.magnitude));
        }
    }
    Ok(())
}
