//! Exact DMD on delay-embedded snapshot pairs.
//!
//! Given `H_k` and `H_{k+1}`, the fit truncates the SVD of `H_k` by an
//! energy criterion, forms the reduced operator
//! `Ã = Ũᵀ H_{k+1} Ṽ Σ̃⁻¹`, diagonalises it and lifts the eigenvectors to
//! exact-DMD modes `Z = H_{k+1} Ṽ Σ̃⁻¹ W`. Amplitudes come from the first
//! embedded snapshot, `b = Z† h_0`, and the surrogate evolves as
//! `ĥ(k) = Z exp(Ω k Δt) b`.

use crate::error::{Error, Result};
use crate::hankel::HankelPair;
use crate::numerics::{self, ComplexMatrix, RealMatrix, DEFAULT_RANK_TOL};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_ENERGY_FRACTION: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Fraction of the summed squared singular values to retain, in (0, 1].
    pub energy_fraction: f64,
    pub max_rank: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            energy_fraction: DEFAULT_ENERGY_FRACTION,
            max_rank: None,
        }
    }
}

impl TruncationPolicy {
    pub fn energy(energy_fraction: f64) -> Self {
        Self {
            energy_fraction,
            max_rank: None,
        }
    }

    /// Retained rank for singular values sorted in descending order.
    ///
    /// Singular values that are zero to working precision are never kept,
    /// whatever the energy fraction.
    pub fn rank_for(&self, s: &[f64], rows: usize, cols: usize) -> usize {
        let total: f64 = s.iter().map(|x| x * x).sum();
        if total <= 0.0 {
            return 0;
        }
        let mut cumulative = 0.0;
        let mut r = s.len();
        for (i, x) in s.iter().enumerate() {
            cumulative += x * x;
            if cumulative / total >= self.energy_fraction {
                r = i + 1;
                break;
            }
        }
        let floor = f64::EPSILON * rows.max(cols) as f64;
        let nonzero = numerics::numerical_rank(s, floor);
        let mut r = r.min(nonzero);
        if let Some(cap) = self.max_rank {
            r = r.min(cap);
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    /// `Z = H_{k+1} Ṽ Σ̃⁻¹ W`
    #[default]
    Exact,
    /// `Z = Ũ W`
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeFit {
    /// `b = Z† h_0`
    #[default]
    FirstSnapshot,
    /// Least squares of `Z Λ^k b ≈ h_k` over every training column.
    AllSnapshots,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DmdOptions {
    pub truncation: TruncationPolicy,
    pub modes: ModeKind,
    pub amplitudes: AmplitudeFit,
}

impl DmdOptions {
    pub fn with_energy(energy_fraction: f64) -> Self {
        Self {
            truncation: TruncationPolicy::energy(energy_fraction),
            ..Self::default()
        }
    }
}

/// Fitted surrogate model. Immutable after [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct DmdModel {
    /// `n * delays` × `rank`.
    pub modes: ComplexMatrix,
    pub eigenvalues: Vec<Complex64>,
    /// Continuous-time exponents `ln(λ)/Δt` (principal branch), 1/s.
    pub omega: Vec<Complex64>,
    pub amplitudes: Vec<Complex64>,
    pub rank: usize,
    pub dt: f64,
    pub delays: usize,
    pub state_dim: usize,
    pub train_start: f64,
    pub energy_threshold: f64,
    /// Singular values of `H_k`, all of them, for diagnostics.
    pub singular_values: Vec<f64>,
    pub mode_kind: ModeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequency {
    pub freq_mhz: f64,
    pub magnitude: f64,
    pub eigenvalue: Complex64,
}

pub fn fit(pair: &HankelPair, policy: &TruncationPolicy, dt: f64) -> Result<DmdModel> {
    fit_with(
        pair,
        &DmdOptions {
            truncation: *policy,
            ..DmdOptions::default()
        },
        dt,
    )
}

pub fn fit_with(pair: &HankelPair, options: &DmdOptions, dt: f64) -> Result<DmdModel> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let policy = &options.truncation;
    if !(policy.energy_fraction > 0.0 && policy.energy_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy fraction must lie in (0, 1], got {}",
            policy.energy_fraction
        )));
    }
    let x = &pair.h_k;
    let y = &pair.h_k1;
    let svd = numerics::svd(x)?;
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let r = policy.rank_for(&s, x.nrows(), x.ncols());
    if r == 0 {
        return Err(Error::EmptyModel);
    }

    let u_r = svd.u.columns(0, r).into_owned();
    let mut v_scaled = svd.v.columns(0, r).into_owned();
    for j in 0..r {
        v_scaled.column_mut(j).unscale_mut(s[j]);
    }
    // H_{k+1} Ṽ Σ̃⁻¹
    let lifted = y * v_scaled;
    let a_tilde = u_r.transpose() * &lifted;
    let eig = numerics::eig(&a_tilde)?;

    let basis = match options.modes {
        ModeKind::Exact => lifted,
        ModeKind::Projected => u_r,
    };
    let modes = to_complex(&basis) * &eig.vectors;
    let eigenvalues: Vec<Complex64> = eig.values.iter().copied().collect();
    let omega: Vec<Complex64> = eigenvalues.iter().map(|&l| log_eigenvalue(l) / dt).collect();

    let amplitudes = match options.amplitudes {
        AmplitudeFit::FirstSnapshot => {
            let h0 = ComplexMatrix::from_fn(x.nrows(), 1, |i, _| Complex64::new(x[(i, 0)], 0.0));
            let b = numerics::lstsq(&modes, &h0, DEFAULT_RANK_TOL)?;
            b.column(0).iter().copied().collect()
        }
        AmplitudeFit::AllSnapshots => fit_all_amplitudes(&modes, &eigenvalues, x)?,
    };

    Ok(DmdModel {
        modes,
        eigenvalues,
        omega,
        amplitudes,
        rank: r,
        dt,
        delays: pair.delays,
        state_dim: pair.state_dim,
        train_start: pair.t0,
        energy_threshold: policy.energy_fraction,
        singular_values: s,
        mode_kind: options.modes,
    })
}

fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Principal-branch logarithm; an exactly zero eigenvalue maps to the most
/// negative finite real part so the model stays serialisable.
fn log_eigenvalue(lambda: Complex64) -> Complex64 {
    if lambda.norm() > 0.0 {
        lambda.ln()
    } else {
        Complex64::new(f64::MIN_POSITIVE.ln(), 0.0)
    }
}

fn fit_all_amplitudes(modes: &ComplexMatrix, lambdas: &[Complex64], x: &RealMatrix) -> Result<Vec<Complex64>> {
    let rows = x.nrows();
    let cols = x.ncols();
    let r = lambdas.len();
    let mut system = ComplexMatrix::zeros(rows * cols, r);
    let mut rhs = ComplexMatrix::zeros(rows * cols, 1);
    for k in 0..cols {
        for m in 0..r {
            let p = log_eigenvalue(lambdas[m]) * k as f64;
            let scale = p.exp();
            for i in 0..rows {
                system[(k * rows + i, m)] = modes[(i, m)] * scale;
            }
        }
        for i in 0..rows {
            rhs[(k * rows + i, 0)] = Complex64::new(x[(i, k)], 0.0);
        }
    }
    let b = numerics::lstsq(&system, &rhs, DEFAULT_RANK_TOL)?;
    Ok(b.column(0).iter().copied().collect())
}

impl DmdModel {
    /// Full embedded reconstruction `Z exp(Ω k Δt) b` at step `k` after
    /// `train_start`.
    pub fn reconstruct(&self, k: usize) -> DVector<Complex64> {
        self.reconstruct_at(k as f64 * self.dt)
    }

    /// Embedded reconstruction at `t` seconds after `train_start`, using the
    /// continuous-time exponents. Off the sampling grid this exposes any
    /// aliasing of the principal-branch frequencies.
    pub fn reconstruct_at(&self, t: f64) -> DVector<Complex64> {
        let weights = DVector::from_iterator(
            self.rank,
            self.omega
                .iter()
                .zip(&self.amplitudes)
                .zip(&self.eigenvalues)
                .map(|((w, b), lambda)| {
                    let growth = if lambda.norm() > 0.0 {
                        (w * t).exp()
                    } else if t == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    growth * b
                }),
        );
        &self.modes * weights
    }

    /// Real part of the leading `n` rows at `t` seconds after `train_start`.
    pub fn predict_at(&self, t: f64) -> DVector<f64> {
        let full = self.reconstruct_at(t);
        DVector::from_iterator(self.state_dim, full.rows(0, self.state_dim).iter().map(|z| z.re))
    }

    /// Real part of the leading `n` rows of the reconstruction at step `k`.
    pub fn predict(&self, k: usize) -> DVector<f64> {
        self.predict_with_residual(k).0
    }

    /// Prediction plus the 2-norm of the discarded imaginary part.
    pub fn predict_with_residual(&self, k: usize) -> (DVector<f64>, f64) {
        let full = self.reconstruct(k);
        let head = full.rows(0, self.state_dim);
        let re = DVector::from_iterator(self.state_dim, head.iter().map(|z| z.re));
        let im = head.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        (re, im)
    }

    /// Predictions for steps `start .. start + count`, one column per step.
    pub fn predict_range(&self, start: usize, count: usize) -> RealMatrix {
        let mut out = RealMatrix::zeros(self.state_dim, count);
        for j in 0..count {
            out.set_column(j, &self.predict(start + j));
        }
        out
    }

    /// Forecast from a window of `delays` consecutive states (`n × l`, oldest
    /// first), as an AR model would use it: the window is embedded, projected
    /// onto the modes, and advanced. Column `j` is the state `j + 1` steps
    /// after the newest history column.
    pub fn forecast(&self, history: &RealMatrix, steps: usize) -> Result<RealMatrix> {
        let (n, l) = (self.state_dim, self.delays);
        if history.shape() != (n, l) {
            return Err(Error::InvalidArgument(format!(
                "history must be {n}×{l}, got {}×{}",
                history.nrows(),
                history.ncols()
            )));
        }
        let h = ComplexMatrix::from_fn(n * l, 1, |i, _| Complex64::new(history[(i % n, i / n)], 0.0));
        let b = numerics::lstsq(&self.modes, &h, DEFAULT_RANK_TOL)?;
        let logs: Vec<Complex64> = self.eigenvalues.iter().map(|&v| log_eigenvalue(v)).collect();
        let mut out = RealMatrix::zeros(n, steps);
        for j in 0..steps {
            let p = (l + j) as f64;
            for d in 0..n {
                let v: Complex64 = (0..self.rank).map(|m| self.modes[(d, m)] * (logs[m] * p).exp() * b[(m, 0)]).sum();
                out[(d, j)] = v.re;
            }
        }
        Ok(out)
    }

    /// Frequencies in millihertz with eigenvalue magnitudes, one entry per
    /// conjugate pair or real eigenvalue, sorted ascending.
    pub fn frequencies_mhz(&self) -> Vec<ModeFrequency> {
        let mut out: Vec<ModeFrequency> = self
            .eigenvalues
            .iter()
            .zip(&self.omega)
            .filter(|(l, _)| l.im >= 0.0)
            .map(|(l, w)| ModeFrequency {
                freq_mhz: w.im.abs() / (2.0 * PI) * 1000.0,
                magnitude: l.norm(),
                eigenvalue: *l,
            })
            .collect();
        out.sort_by(|a, b| a.freq_mhz.total_cmp(&b.freq_mhz).then(b.magnitude.total_cmp(&a.magnitude)));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument::from(self);
        serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::InvalidArgument(format!("model serialisation failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| {
            crate::io::FormatError::Parse {
                line: e.line(),
                message: e.to_string(),
            }
        })?;
        doc.try_into()
    }
}

/// On-disk layout of a model. Complex numbers are `[re, im]` pairs and the
/// mode matrix is stored row by row.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    dt: f64,
    delays: usize,
    state_dim: usize,
    rank: usize,
    train_start: f64,
    energy_threshold: f64,
    mode_kind: ModeKind,
    eigenvalues: Vec<Complex64>,
    omega: Vec<Complex64>,
    amplitudes: Vec<Complex64>,
    modes: Vec<Vec<Complex64>>,
    singular_values: Vec<f64>,
}

const MODEL_FORMAT: &str = "hankel-dmd-model/1";

impl From<&DmdModel> for ModelDocument {
    fn from(m: &DmdModel) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            dt: m.dt,
            delays: m.delays,
            state_dim: m.state_dim,
            rank: m.rank,
            train_start: m.train_start,
            energy_threshold: m.energy_threshold,
            mode_kind: m.mode_kind,
            eigenvalues: m.eigenvalues.clone(),
            omega: m.omega.clone(),
            amplitudes: m.amplitudes.clone(),
            modes: m.modes.row_iter().map(|r| r.iter().copied().collect()).collect(),
            singular_values: m.singular_values.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for DmdModel {
    type Error = Error;

    fn try_from(d: ModelDocument) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("invalid model document: {msg}"));
        if d.format != MODEL_FORMAT {
            return Err(bad(format!("unknown format `{}`", d.format)));
        }
        let rows = d.state_dim * d.delays;
        if d.rank == 0
            || d.eigenvalues.len() != d.rank
            || d.omega.len() != d.rank
            || d.amplitudes.len() != d.rank
            || d.modes.len() != rows
            || d.modes.iter().any(|r| r.len() != d.rank)
        {
            return Err(bad("array sizes disagree with rank/delays/state_dim".into()));
        }
        if !(d.dt > 0.0) {
            return Err(bad("dt must be positive".into()));
        }
        let modes = ComplexMatrix::from_fn(rows, d.rank, |i, j| d.modes[i][j]);
        Ok(DmdModel {
            modes,
            eigenvalues: d.eigenvalues,
            omega: d.omega,
            amplitudes: d.amplitudes,
            rank: d.rank,
            dt: d.dt,
            delays: d.delays,
            state_dim: d.state_dim,
            train_start: d.train_start,
            energy_threshold: d.energy_threshold,
            singular_values: d.singular_values,
            mode_kind: d.mode_kind,
        })
    }
}
