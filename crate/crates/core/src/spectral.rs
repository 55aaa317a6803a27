//! Zero-padded FFT magnitude spectra and peak picking.

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use num_complex::Complex64;
use std::f64::consts::PI;

pub const DEFAULT_PAD_FACTOR: usize = 8;

/// Peaks weaker than this fraction of the strongest bin are ignored.
const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    None,
    Hamming,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz, ascending, `padded_len / 2 + 1` entries.
    pub freqs: Vec<f64>,
    /// Root-sum-square of the component magnitudes.
    pub magnitudes: Vec<f64>,
    /// One magnitude series per state component.
    pub components: Vec<Vec<f64>>,
    pub pad_factor: usize,
    pub padded_len: usize,
    pub window: Window,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq_mhz: f64,
    pub magnitude: f64,
}

/// In-place iterative radix-2 decimation-in-time transform,
/// `X_k = Σ x_j e^{−2πi jk/L}`. The length must be a power of two.
pub fn fft(data: &mut [Complex64]) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("FFT length {n} is not a power of two")));
    }
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
    }
    let mut len = 2;
    while len <= n {
        let step = -2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::from_polar(1.0, step * k as f64);
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

fn window_weights(window: Window, len: usize) -> Vec<f64> {
    match window {
        Window::None => vec![1.0; len],
        Window::Hamming if len == 1 => vec![1.0],
        Window::Hamming => (0..len)
            .map(|j| 0.54 - 0.46 * (2.0 * PI * j as f64 / (len - 1) as f64).cos())
            .collect(),
    }
}

/// One-sided magnitude spectrum of every component, zero-padded to
/// `pad_factor` times the next power of two above the sample count
/// (rounded up to a power of two).
pub fn fft_spectrum(traj: &Trajectory, pad_factor: usize, window: Window) -> Result<Spectrum> {
    if pad_factor == 0 {
        return Err(Error::InvalidArgument("pad factor must be at least 1".into()));
    }
    let t = traj.len();
    if t == 0 {
        return Err(Error::InvalidTrajectory("no samples".into()));
    }
    let padded_len = (t.next_power_of_two() * pad_factor).next_power_of_two();
    let bins = padded_len / 2 + 1;
    let w = window_weights(window, t);
    let mut components = Vec::with_capacity(traj.dim());
    let mut buf = vec![Complex64::new(0.0, 0.0); padded_len];
    for d in 0..traj.dim() {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for k in 0..t {
            buf[k] = Complex64::new(traj.states()[(d, k)] * w[k], 0.0);
        }
        fft(&mut buf)?;
        components.push(buf[..bins].iter().map(|z| z.norm()).collect::<Vec<f64>>());
    }
    let magnitudes = (0..bins)
        .map(|k| components.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
        .collect();
    let df = 1.0 / (padded_len as f64 * traj.dt());
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        magnitudes,
        components,
        pad_factor,
        padded_len,
        window,
    })
}

/// Up to `count` strict three-bin local maxima, strongest first, with
/// log-parabolic sub-bin refinement. The spectrum is mirrored at DC and at
/// Nyquist, so an edge bin is a peak when it exceeds its single neighbour.
pub fn dominant_peaks(spec: &Spectrum, count: usize) -> Vec<Peak> {
    let m = &spec.magnitudes;
    let n = m.len();
    if n == 0 || count == 0 {
        return Vec::new();
    }
    let max = m.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let neighbour = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i as usize >= n {
            2 * (n as isize - 1) - i
        } else {
            i
        };
        m[j.clamp(0, n as isize - 1) as usize]
    };
    let df = spec.bin_width();
    let mut peaks = Vec::new();
    for i in 0..n {
        let (left, mid, right) = (neighbour(i as isize - 1), m[i], neighbour(i as isize + 1));
        let is_peak = if n == 1 { true } else { mid > left && mid > right };
        if !is_peak || mid < NOISE_FLOOR * max {
            continue;
        }
        // neighbours at rounding level carry no shape information
        let resolved = left > NOISE_FLOOR * mid && right > NOISE_FLOOR * mid;
        let (delta, mag) = if resolved {
            let (a, b, c) = (left.ln(), mid.ln(), right.ln());
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
                (delta, (b - 0.25 * (a - c) * delta).exp())
            } else {
                (0.0, mid)
            }
        } else {
            (0.0, mid)
        };
        let f = ((i as f64 + delta) * df).max(0.0);
        peaks.push(Peak {
            freq_mhz: f * 1000.0,
            magnitude: mag,
        });
    }
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.freq_mhz.total_cmp(&b.freq_mhz)));
    peaks.truncate(count);
    peaks
}

/// Period (s) of the strongest non-DC peak.
pub fn estimate_period(traj: &Trajectory, pad_factor: usize) -> Result<f64> {
    let spec = fft_spectrum(traj, pad_factor, Window::None)?;
    let half_bin = 0.5 * spec.bin_width() * 1000.0;
    dominant_peaks(&spec, usize::MAX)
        .into_iter()
        .find(|p| p.freq_mhz > half_bin)
        .map(|p| 1000.0 / p.freq_mhz)
        .ok_or_else(|| Error::InvalidArgument("spectrum has no non-DC peak".into()))
}
