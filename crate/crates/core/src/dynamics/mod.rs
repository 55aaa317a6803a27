//! Dataset generators: the nonlinear pendulum and two-body motion with
//! optional J2 or drag perturbation.

pub mod integrator;
pub mod orbit;

pub use integrator::{integrate_sampled, IntegratorConfig};
pub use orbit::{
    elements_to_state, elliptic_k, kepler_period, mean_to_true, pendulum_period, solve_kepler,
    state_to_elements, true_to_mean, GravityModel, OrbitalElements,
};

use crate::error::{Error, Result};
use crate::numerics::RealMatrix;
use crate::trajectory::{Groups, Trajectory};
use nalgebra::Vector3;

/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115e-5;

/// Exponential atmosphere and TLE-style ballistic coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragConfig {
    /// B* in inverse Earth radii.
    pub bstar: f64,
    /// Reference density implied by the B* convention, kg/m³.
    pub rho0: f64,
    /// Density at `ref_altitude`, kg/m³.
    pub ref_density: f64,
    /// km
    pub ref_altitude: f64,
    /// km
    pub scale_height: f64,
    /// Use `v − ω⊕ × r` as the relative velocity when set.
    pub atmosphere_rotates: bool,
}

impl DragConfig {
    /// `ρ₀ = 0.15696615 kg/m²/ER` expressed per cubic metre.
    pub const TLE_REFERENCE_DENSITY: f64 = 0.156_966_15 / 6_378_135.0;

    pub fn with_bstar(bstar: f64) -> Self {
        Self {
            bstar,
            ..Self::default()
        }
    }

    pub fn density(&self, altitude_km: f64) -> f64 {
        self.ref_density * (-(altitude_km - self.ref_altitude) / self.scale_height).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale_height > 0.0) || !(self.rho0 > 0.0) || !(self.ref_density >= 0.0) || !self.bstar.is_finite() {
            return Err(Error::InvalidArgument(
                "drag configuration needs scale_height > 0, rho0 > 0, ref_density ≥ 0 and finite B*".into(),
            ));
        }
        Ok(())
    }
}

impl Default for DragConfig {
    fn default() -> Self {
        Self {
            bstar: 1.6717e-4,
            rho0: Self::TLE_REFERENCE_DENSITY,
            ref_density: 3.725e-12,
            ref_altitude: 400.0,
            scale_height: 58.0,
            atmosphere_rotates: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Perturbation {
    #[default]
    None,
    J2,
    Drag(DragConfig),
}

/// `(θ̇, θ̈)` for `θ̈ = −ω₀² sin θ`.
pub fn pendulum_rhs(theta: f64, theta_dot: f64, omega0_sq: f64) -> (f64, f64) {
    (theta_dot, -omega0_sq * theta.sin())
}

/// J2 acceleration, km/s².
pub fn j2_acceleration(r: &Vector3<f64>, g: &GravityModel) -> Vector3<f64> {
    let rn = r.norm();
    let k = 1.5 * g.j2 * g.mu * g.radius * g.radius / rn.powi(4);
    let zr2 = (r.z / rn).powi(2);
    Vector3::new(
        k * r.x / rn * (5.0 * zr2 - 1.0),
        k * r.y / rn * (5.0 * zr2 - 1.0),
        k * r.z / rn * (5.0 * zr2 - 3.0),
    )
}

/// Drag acceleration, km/s².
pub fn drag_acceleration(r: &Vector3<f64>, v: &Vector3<f64>, g: &GravityModel, d: &DragConfig) -> Vector3<f64> {
    let v_rel = if d.atmosphere_rotates {
        v - Vector3::new(0.0, 0.0, EARTH_ROTATION_RATE).cross(r)
    } else {
        *v
    };
    let rho = d.density(r.norm() - g.radius);
    // B* is per Earth radius; dividing by the radius in km gives 1/km
    -(rho / d.rho0) * (d.bstar / g.radius) * v_rel.norm() * v_rel
}

/// `(ṙ, v̇)` for two-body motion plus the selected perturbation.
pub fn twobody_rhs(
    r: &Vector3<f64>,
    v: &Vector3<f64>,
    g: &GravityModel,
    perturbation: &Perturbation,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let rn = r.norm();
    if !(rn > g.radius) {
        return Err(Error::BelowSurface {
            radius: rn,
            surface: g.radius,
        });
    }
    let mut a = -g.mu / rn.powi(3) * r;
    match perturbation {
        Perturbation::None => {}
        Perturbation::J2 => a += j2_acceleration(r, g),
        Perturbation::Drag(d) => a += drag_acceleration(r, v, g, d),
    }
    Ok((*v, a))
}

/// A time-invariant vector field with labelled state components.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;
    fn labels(&self) -> Vec<String>;
    fn groups(&self) -> Groups {
        Groups::none()
    }
    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum {
    pub omega0_sq: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            omega0_sq: (2.0 * std::f64::consts::PI).powi(2),
        }
    }
}

impl Pendulum {
    /// `½θ̇² − ω₀² cos θ`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        0.5 * x[1] * x[1] - self.omega0_sq * x[0].cos()
    }
}

impl Dynamics for Pendulum {
    fn dim(&self) -> usize {
        2
    }

    fn labels(&self) -> Vec<String> {
        vec!["theta".into(), "theta_dot".into()]
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let (a, b) = pendulum_rhs(x[0], x[1], self.omega0_sq);
        dx[0] = a;
        dx[1] = b;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoBody {
    pub gravity: GravityModel,
    pub perturbation: Perturbation,
}

impl TwoBody {
    pub fn new(gravity: GravityModel, perturbation: Perturbation) -> Result<Self> {
        if !(gravity.mu > 0.0 && gravity.radius > 0.0) {
            return Err(Error::InvalidArgument("gravity model needs mu > 0 and radius > 0".into()));
        }
        if let Perturbation::Drag(d) = &perturbation {
            d.validate()?;
        }
        Ok(Self { gravity, perturbation })
    }

    /// Specific orbital energy `v²/2 − μ/r` of a 6-vector state.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let r = Vector3::new(x[0], x[1], x[2]);
        let v = Vector3::new(x[3], x[4], x[5]);
        v.norm_squared() / 2.0 - self.gravity.mu / r.norm()
    }
}

impl Dynamics for TwoBody {
    fn dim(&self) -> usize {
        6
    }

    fn labels(&self) -> Vec<String> {
        ["x", "y", "z", "vx", "vy", "vz"].iter().map(|s| s.to_string()).collect()
    }

    fn groups(&self) -> Groups {
        Groups::orbital()
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let r = Vector3::new(x[0], x[1], x[2]);
        let v = Vector3::new(x[3], x[4], x[5]);
        let (rd, vd) = twobody_rhs(&r, &v, &self.gravity, &self.perturbation)?;
        dx[..3].copy_from_slice(rd.as_slice());
        dx[3..].copy_from_slice(vd.as_slice());
        Ok(())
    }
}

/// Number of samples for `duration` at `dt`, counting both ends.
pub fn sample_count(dt: f64, duration: f64) -> usize {
    (duration / dt + 1e-9).floor() as usize + 1
}

/// Integrates `dynamics` from `x0` and samples every `dt` seconds over
/// `duration` (both ends included).
pub fn propagate(
    dynamics: &dyn Dynamics,
    x0: &[f64],
    dt: f64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample interval must be positive, got {dt}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration must be non-negative, got {duration}")));
    }
    if x0.len() != dynamics.dim() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} components, dynamics expects {}",
            x0.len(),
            dynamics.dim()
        )));
    }
    let count = sample_count(dt, duration);
    let samples = integrate_sampled(|_, x, dx| dynamics.rhs(x, dx), 0.0, x0, dt, count, cfg)?;
    let n = dynamics.dim();
    let states = RealMatrix::from_fn(n, count, |i, j| samples[j][i]);
    Trajectory::new(dt, 0.0, states, dynamics.labels())?.with_groups(dynamics.groups())
}

/// Decimates to `new_dt`, which must be an integer multiple of the current
/// sampling interval.
pub fn resample(traj: &Trajectory, new_dt: f64) -> Result<Trajectory> {
    let ratio = new_dt / traj.dt();
    let stride = ratio.round();
    if !(stride >= 1.0) || (ratio - stride).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "{new_dt} s is not an integer multiple of the sampling interval {} s",
            traj.dt()
        )));
    }
    traj.decimate(stride as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn iss_state() -> Vec<f64> {
        let el = OrbitalElements {
            a: 6796.9,
            e: 0.0007,
            i: 51.639,
            raan: 113.73,
            argp: 51.197,
            true_anomaly: 358.89,
        };
        let (r, v) = elements_to_state(&el, &GravityModel::earth()).unwrap();
        vec![r.x, r.y, r.z, v.x, v.y, v.z]
    }

    #[test]
    fn pendulum_field() {
        assert_eq!(pendulum_rhs(0.0, 0.3, 4.0), (0.3, 0.0));
        let (_, acc) = pendulum_rhs(PI / 2.0, 0.0, 4.0);
        assert!((acc + 4.0).abs() < 1e-15);
    }

    #[test]
    fn j2_on_equator_has_no_z_component() {
        let g = GravityModel::earth();
        let r = Vector3::new(5000.0, 4000.0, 0.0);
        let p = j2_acceleration(&r, &g);
        assert_eq!(p.z, 0.0);
        // radially inward in the x–y plane
        assert!(p.x < 0.0 && p.y < 0.0);
        assert!((p.x / p.y - 5.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn below_surface_rejected() {
        let g = GravityModel::earth();
        let r = Vector3::new(6000.0, 0.0, 0.0);
        assert!(matches!(
            twobody_rhs(&r, &Vector3::zeros(), &g, &Perturbation::None),
            Err(Error::BelowSurface { .. })
        ));
    }

    #[test]
    fn drag_opposes_relative_velocity() {
        let g = GravityModel::earth();
        let d = DragConfig::default();
        let r = Vector3::new(6778.137, 0.0, 0.0);
        let v = Vector3::new(0.0, 7.67, 0.0);
        let a = drag_acceleration(&r, &v, &g, &d);
        assert!(a.y < 0.0 && a.x == 0.0 && a.z == 0.0);
        // order of magnitude of ISS drag: 1e-7 m/s²
        let m_s2 = a.norm() * 1e3;
        assert!(m_s2 > 1e-8 && m_s2 < 1e-5, "{m_s2}");
    }

    #[test]
    fn zero_duration_is_single_sample() {
        let t = propagate(&Pendulum::default(), &[0.1, 0.0], 0.01, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn circular_radius_constant() {
        let g = GravityModel::earth();
        let el = OrbitalElements {
            a: 7000.0,
            e: 0.0,
            i: 30.0,
            raan: 10.0,
            argp: 0.0,
            true_anomaly: 0.0,
        };
        let (r, v) = elements_to_state(&el, &g).unwrap();
        let x0 = [r.x, r.y, r.z, v.x, v.y, v.z];
        let period = kepler_period(7000.0, g.mu);
        let t = propagate(&TwoBody::default(), &x0, 60.0, 10.0 * period, &IntegratorConfig::default()).unwrap();
        for k in 0..t.len() {
            let s = t.state(k);
            let rn = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            assert!((rn - 7000.0).abs() < 1e-5, "{rn}");
        }
        assert_eq!(t.groups(), &Groups::orbital());
    }

    #[test]
    fn pendulum_energy_conserved() {
        let p = Pendulum::default();
        let period = pendulum_period(p.omega0_sq, PI / 2.0);
        let t = propagate(&p, &[PI / 2.0, 0.0], 0.01, 10.0 * period, &IntegratorConfig::precise()).unwrap();
        let e0 = p.energy(t.state(0).as_slice());
        for k in 0..t.len() {
            let e = p.energy(t.state(k).as_slice());
            // E0 = 0 at a quarter-turn release, so scale by ω₀²
            assert!((e - e0).abs() / p.omega0_sq < 1e-9);
        }
    }

    #[test]
    fn resample_strides() {
        let t = Trajectory::from_scalar(1.0, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(resample(&t, 1.0).unwrap(), t);
        assert_eq!(resample(&t, 2.0).unwrap().states().as_slice(), &[0.0, 2.0, 4.0]);
        assert!(resample(&t, 1.5).is_err());
        assert!(resample(&t, 0.5).is_err());
    }

    #[test]
    fn drag_energy_decreases() {
        let dynamics = TwoBody::new(GravityModel::earth(), Perturbation::Drag(DragConfig::default())).unwrap();
        let t = propagate(&dynamics, &iss_state(), 600.0, 3.0 * 5577.0, &IntegratorConfig::default()).unwrap();
        let energies: Vec<f64> = (0..t.len()).map(|k| dynamics.energy(t.state(k).as_slice())).collect();
        assert!(energies.windows(2).all(|w| w[1] < w[0]));
    }
}
