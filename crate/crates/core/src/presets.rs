//! Reference datasets: the ISS and Molniya initial elements, the
//! large-amplitude pendulum, and helpers that propagate them at a chosen
//! sampling interval.

use crate::dynamics::{
    elements_to_state, kepler_period, pendulum_period, propagate, resample, GravityModel, IntegratorConfig,
    OrbitalElements, Pendulum, Perturbation, TwoBody,
};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use std::f64::consts::{FRAC_PI_2, PI};

/// ISS osculating elements.
pub const ISS: OrbitalElements = OrbitalElements {
    a: 6796.9,
    e: 0.0007,
    i: 51.639,
    raan: 113.73,
    argp: 51.197,
    true_anomaly: 358.89,
};

/// MOLNIYA-3-50 osculating elements.
pub const MOLNIYA: OrbitalElements = OrbitalElements {
    a: 26555.94,
    e: 0.7294,
    i: 63.324,
    raan: 295.46,
    argp: 282.69,
    true_anomaly: 357.32,
};

/// `(2π)²`, which makes the small-amplitude pendulum frequency 1 Hz.
pub const PENDULUM_OMEGA0_SQ: f64 = 4.0 * PI * PI;
pub const PENDULUM_AMPLITUDE: f64 = FRAC_PI_2;

/// A trajectory with the fundamental period used to size its windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub trajectory: Trajectory,
    /// Seconds.
    pub period: f64,
}

impl Dataset {
    /// Decimates to `new_dt`, keeping the period.
    pub fn resampled(&self, new_dt: f64) -> Result<Self> {
        Ok(Self {
            trajectory: resample(&self.trajectory, new_dt)?,
            period: self.period,
        })
    }
}

/// Pendulum released from rest at `amplitude`, over `periods` periods.
pub fn pendulum(omega0_sq: f64, amplitude: f64, dt: f64, periods: f64) -> Result<Dataset> {
    if !(omega0_sq > 0.0 && amplitude > 0.0 && amplitude < PI) {
        return Err(Error::InvalidArgument(format!(
            "pendulum needs omega0_sq > 0 and amplitude in (0, π), got {omega0_sq} and {amplitude}"
        )));
    }
    let period = pendulum_period(omega0_sq, amplitude);
    let trajectory = propagate(
        &Pendulum { omega0_sq },
        &[amplitude, 0.0],
        dt,
        periods * period,
        &IntegratorConfig::precise(),
    )?;
    Ok(Dataset { trajectory, period })
}

/// Orbit from `elements` over `periods` Keplerian periods.
pub fn orbit(elements: &OrbitalElements, perturbation: Perturbation, dt: f64, periods: f64) -> Result<Dataset> {
    let gravity = GravityModel::earth();
    let (r, v) = elements_to_state(elements, &gravity)?;
    let x0 = [r.x, r.y, r.z, v.x, v.y, v.z];
    let period = kepler_period(elements.a, gravity.mu);
    let trajectory = propagate(
        &TwoBody::new(gravity, perturbation)?,
        &x0,
        dt,
        periods * period,
        &IntegratorConfig::precise(),
    )?;
    Ok(Dataset { trajectory, period })
}
