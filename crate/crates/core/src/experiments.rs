//! Normalised error metric and parameter sweeps over delays, training
//! window, prediction horizon and sampling interval.
//!
//! Windows are measured in periods of the signal's fundamental, supplied by
//! the caller. Every sweep fits on a prefix of the trajectory starting at its
//! first sample.

use crate::dmd::{fit_with, DmdModel, DmdOptions};
use crate::dynamics::sample_count;
use crate::error::{Error, Result};
use crate::hankel::build_hankel;
use crate::numerics::RealMatrix;
use crate::parallel::{map_ordered, Execution};
use crate::trajectory::Trajectory;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub eps_train: f64,
    /// Present only when a prediction window was evaluated.
    pub eps_pred: Option<f64>,
    /// Per-step ε: training steps, then prediction steps.
    pub eps_series: Vec<f64>,
    /// Names of the index groups that were averaged.
    pub groups_used: Vec<String>,
    /// Mean ε of each group over the training window.
    pub group_means: Vec<f64>,
}

struct Epsilon {
    series: Vec<f64>,
    mean: f64,
    group_means: Vec<f64>,
    groups: Vec<String>,
}

fn epsilon_series(truth: &Trajectory, estimate: &RealMatrix) -> Result<Epsilon> {
    if estimate.shape() != truth.states().shape() {
        return Err(Error::InvalidArgument(format!(
            "estimate is {:?}, truth is {:?}",
            estimate.shape(),
            truth.states().shape()
        )));
    }
    let x = truth.states();
    let sets = truth.groups().evaluation_sets(truth.dim());
    let t = truth.len();
    let mut series = vec![0.0; t];
    let mut group_means = Vec::with_capacity(sets.len());
    for (name, idx) in &sets {
        let scale = idx
            .iter()
            .flat_map(|&i| x.row(i).iter().map(|v| v.abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::UndefinedNormalization(name.to_string()));
        }
        let mut sum = 0.0;
        for k in 0..t {
            let e = idx
                .iter()
                .map(|&i| (estimate[(i, k)] - x[(i, k)]).powi(2))
                .sum::<f64>()
                .sqrt()
                / scale;
            series[k] += e / sets.len() as f64;
            sum += e;
        }
        group_means.push(sum / t as f64);
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    Ok(Epsilon {
        series,
        mean,
        group_means,
        groups: sets.iter().map(|(n, _)| n.to_string()).collect(),
    })
}

/// ε between a true window and an estimate of the same shape.
///
/// Per step and group, `‖x̂_g(k) − x_g(k)‖₂ / max |x_g|`, the maximum taken
/// over every component of the group across the window; group errors are
/// averaged, then averaged over steps.
pub fn epsilon(truth: &Trajectory, estimate: &RealMatrix) -> Result<ErrorReport> {
    let e = epsilon_series(truth, estimate)?;
    Ok(ErrorReport {
        eps_train: e.mean,
        eps_pred: None,
        eps_series: e.series,
        groups_used: e.groups,
        group_means: e.group_means,
    })
}

/// ε of `model` over the first `train_len` samples of `traj` and, when
/// `horizon_len > 0`, over the following `horizon_len` samples.
pub fn evaluate(model: &DmdModel, traj: &Trajectory, train_len: usize, horizon_len: usize) -> Result<ErrorReport> {
    let train = traj.window(0, train_len)?;
    let mut report = epsilon(&train, &model.predict_range(0, train_len))?;
    if horizon_len > 0 {
        let future = traj.window(train_len, horizon_len)?;
        let e = epsilon_series(&future, &model.predict_range(train_len, horizon_len))?;
        report.eps_pred = Some(e.mean);
        report.eps_series.extend(e.series);
    }
    Ok(report)
}

/// Settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepContext {
    /// Fundamental period, seconds.
    pub period: f64,
    pub dmd: DmdOptions,
    pub execution: Execution,
    /// `best` is the first point within this factor of the minimum error.
    pub floor_factor: f64,
    /// Errors below this are treated as equal (rounding noise).
    pub noise_floor: f64,
}

impl SweepContext {
    pub fn new(period: f64) -> Self {
        Self {
            period,
            dmd: DmdOptions::default(),
            execution: Execution::default(),
            floor_factor: 2.0,
            noise_floor: 1e-12,
        }
    }

    pub fn with_dmd(mut self, dmd: DmdOptions) -> Self {
        self.dmd = dmd;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Samples spanning `periods` fundamental periods at `dt`, both ends
    /// included.
    pub fn window_len(&self, periods: f64, dt: f64) -> usize {
        sample_count(dt, periods * self.period)
    }

    fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {}", self.period)));
        }
        if !(self.floor_factor >= 1.0) {
            return Err(Error::InvalidArgument("floor factor must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Delays,
    WindowPeriods,
    HorizonPeriods,
    SamplingMultiple,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Delays => "delays",
            SweepAxis::WindowPeriods => "train_periods",
            SweepAxis::HorizonPeriods => "horizon_periods",
            SweepAxis::SamplingMultiple => "dt_multiple",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    /// The error the sweep ranks by: ε over the prediction window for
    /// horizon sweeps, ε over the training window otherwise.
    pub eps: f64,
    pub eps_train: f64,
    pub eps_pred: Option<f64>,
    /// Retained rank, i.e. the size of `Ã`.
    pub rank: usize,
    pub groups: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// A failed fit is recorded with its message; the sweep continues.
    pub outcome: std::result::Result<PointMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub best: Option<usize>,
    pub fixed_params: Vec<(String, String)>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// ε per point, NaN where the point failed.
    pub fn eps(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.outcome.as_ref().map_or(f64::NAN, |m| m.eps))
            .collect()
    }

    /// Rank per point, `None` where the point failed.
    pub fn ranks(&self) -> Vec<Option<usize>> {
        self.points.iter().map(|p| p.outcome.as_ref().ok().map(|m| m.rank)).collect()
    }

    pub fn min_eps(&self) -> Option<f64> {
        self.eps().into_iter().filter(|e| e.is_finite()).min_by(f64::total_cmp)
    }

    /// First point whose error is within `factor` of the minimum and stays
    /// there for every later point.
    pub fn settled_within(&self, factor: f64, noise_floor: f64) -> Option<usize> {
        let min = self.min_eps()?;
        let limit = (factor * min).max(noise_floor);
        let eps = self.eps();
        (0..eps.len()).find(|&i| eps[i..].iter().all(|e| e.is_finite() && *e <= limit))
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best.map(|i| self.points[i].value)
    }
}

fn choose_best(points: &[SweepPoint], ctx: &SweepContext) -> Option<usize> {
    let eps: Vec<f64> = points
        .iter()
        .map(|p| p.outcome.as_ref().map_or(f64::NAN, |m| m.eps))
        .collect();
    let min = eps.iter().copied().filter(|e| e.is_finite()).min_by(f64::total_cmp)?;
    let limit = (ctx.floor_factor * min).max(ctx.noise_floor);
    eps.iter().position(|e| e.is_finite() && *e <= limit)
}

fn check_increasing(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep axis is empty".into()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sweep axis must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn fit_prefix(traj: &Trajectory, train_len: usize, delays: usize, dmd: &DmdOptions) -> Result<DmdModel> {
    let window = traj.window(0, train_len)?;
    let pair = build_hankel(&window, delays)?;
    fit_with(&pair, dmd, traj.dt())
}

fn metrics(model: &DmdModel, report: ErrorReport, rank_eps_pred: bool) -> PointMetrics {
    let eps = if rank_eps_pred {
        report.eps_pred.unwrap_or(report.eps_train)
    } else {
        report.eps_train
    };
    PointMetrics {
        eps,
        eps_train: report.eps_train,
        eps_pred: report.eps_pred,
        rank: model.rank,
        groups: report.groups_used.into_iter().zip(report.group_means).collect(),
    }
}

fn assemble(
    axis: SweepAxis,
    values: &[f64],
    outcomes: Vec<Result<PointMetrics>>,
    ctx: &SweepContext,
    mut fixed_params: Vec<(String, String)>,
) -> SweepResult {
    let points: Vec<SweepPoint> = values
        .iter()
        .zip(outcomes)
        .map(|(&value, outcome)| SweepPoint {
            value,
            outcome: outcome.map_err(|e| e.to_string()),
        })
        .collect();
    let best = choose_best(&points, ctx);
    fixed_params.push(("period_s".into(), format!("{}", ctx.period)));
    fixed_params.push(("energy_fraction".into(), format!("{}", ctx.dmd.truncation.energy_fraction)));
    SweepResult {
        axis,
        points,
        best,
        fixed_params,
    }
}

/// ε over the training window for each delay count.
pub fn sweep_delays(traj: &Trajectory, delays: &[usize], train_periods: f64, ctx: &SweepContext) -> Result<SweepResult> {
    ctx.validate()?;
    let values: Vec<f64> = delays.iter().map(|&l| l as f64).collect();
    check_increasing(&values)?;
    let train_len = ctx.window_len(train_periods, traj.dt());
    if train_len > traj.len() {
        return Err(Error::TooShort {
            required: train_len,
            available: traj.len(),
        });
    }
    let outcomes = map_ordered(ctx.execution, delays, |&l| {
        let model = fit_prefix(traj, train_len, l, &ctx.dmd)?;
        Ok(metrics(&model, evaluate(&model, traj, train_len, 0)?, false))
    });
    Ok(assemble(
        SweepAxis::Delays,
        &values,
        outcomes,
        ctx,
        vec![
            ("train_periods".into(), format!("{train_periods}")),
            ("dt_s".into(), format!("{}", traj.dt())),
        ],
    ))
}

/// ε over the training window and retained rank for each window size.
pub fn sweep_window(traj: &Trajectory, delays: usize, periods: &[f64], ctx: &SweepContext) -> Result<SweepResult> {
    ctx.validate()?;
    check_increasing(periods)?;
    let outcomes = map_ordered(ctx.execution, periods, |&p| {
        let train_len = ctx.window_len(p, traj.dt());
        let model = fit_prefix(traj, train_len, delays, &ctx.dmd)?;
        Ok(metrics(&model, evaluate(&model, traj, train_len, 0)?, false))
    });
    Ok(assemble(
        SweepAxis::WindowPeriods,
        periods,
        outcomes,
        ctx,
        vec![
            ("delays".into(), delays.to_string()),
            ("dt_s".into(), format!("{}", traj.dt())),
        ],
    ))
}

/// ε over the samples following the training window, for each horizon.
/// A zero horizon yields the training error only.
pub fn sweep_horizon(
    traj: &Trajectory,
    delays: usize,
    train_periods: f64,
    horizons: &[f64],
    ctx: &SweepContext,
) -> Result<SweepResult> {
    ctx.validate()?;
    check_increasing(horizons)?;
    if horizons[0] < 0.0 {
        return Err(Error::InvalidArgument("horizons must be non-negative".into()));
    }
    let dt = traj.dt();
    let train_len = ctx.window_len(train_periods, dt);
    let max_h = sample_count(dt, horizons[horizons.len() - 1] * ctx.period) - 1;
    if train_len + max_h > traj.len() {
        return Err(Error::TooShort {
            required: train_len + max_h,
            available: traj.len(),
        });
    }
    let model = fit_prefix(traj, train_len, delays, &ctx.dmd);
    let outcomes = map_ordered(ctx.execution, horizons, |&h| {
        let model = model.as_ref().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let h_len = sample_count(dt, h * ctx.period) - 1;
        Ok(metrics(model, evaluate(model, traj, train_len, h_len)?, true))
    });
    Ok(assemble(
        SweepAxis::HorizonPeriods,
        horizons,
        outcomes,
        ctx,
        vec![
            ("delays".into(), delays.to_string()),
            ("train_periods".into(), format!("{train_periods}")),
            ("dt_s".into(), format!("{dt}")),
        ],
    ))
}

/// Decimates `fine` by each multiple, fits on the training window, and
/// scores the continuous-time reconstruction against the fine samples of
/// that window. Scoring on the fine grid is what exposes aliasing: an
/// undersampled tone is still fitted exactly at the coarse sample times.
pub fn sweep_sampling(
    fine: &Trajectory,
    delays: usize,
    multiples: &[usize],
    train_periods: f64,
    ctx: &SweepContext,
) -> Result<SweepResult> {
    ctx.validate()?;
    let values: Vec<f64> = multiples.iter().map(|&m| m as f64).collect();
    check_increasing(&values)?;
    if multiples[0] == 0 {
        return Err(Error::InvalidArgument("sampling multiples must be at least 1".into()));
    }
    let outcomes = map_ordered(ctx.execution, multiples, |&m| {
        let coarse = fine.decimate(m)?;
        let train_len = ctx.window_len(train_periods, coarse.dt());
        let model = fit_prefix(&coarse, train_len, delays, &ctx.dmd)?;
        let coarse_report = evaluate(&model, &coarse, train_len, 0)?;
        let fine_len = (train_len - 1) * m + 1;
        let truth = fine.window(0, fine_len)?;
        let mut estimate = RealMatrix::zeros(fine.dim(), fine_len);
        for j in 0..fine_len {
            estimate.set_column(j, &model.predict_at(j as f64 * fine.dt()));
        }
        let fine_report = epsilon(&truth, &estimate)?;
        Ok(PointMetrics {
            eps: fine_report.eps_train,
            eps_train: coarse_report.eps_train,
            eps_pred: None,
            rank: model.rank,
            groups: fine_report.groups_used.into_iter().zip(fine_report.group_means).collect(),
        })
    });
    Ok(assemble(
        SweepAxis::SamplingMultiple,
        &values,
        outcomes,
        ctx,
        vec![
            ("delays".into(), delays.to_string()),
            ("train_periods".into(), format!("{train_periods}")),
            ("base_dt_s".into(), format!("{}", fine.dt())),
        ],
    ))
}
