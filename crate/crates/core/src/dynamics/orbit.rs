//! Keplerian elements, the Kepler equation and closed-form periods.

use crate::error::{Error, Result};
use nalgebra::Vector3;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityModel {
    /// km³/s²
    pub mu: f64,
    pub j2: f64,
    /// Equatorial radius, km.
    pub radius: f64,
}

impl GravityModel {
    /// WGS-84 Earth.
    pub fn earth() -> Self {
        Self {
            mu: 398_600.441_8,
            j2: 1.082_626_68e-3,
            radius: 6378.137,
        }
    }
}

impl Default for GravityModel {
    fn default() -> Self {
        Self::earth()
    }
}

/// Classical elements. Angles in degrees, `a` in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub true_anomaly: f64,
}

impl OrbitalElements {
    fn validate(&self) -> Result<()> {
        if !(self.e >= 0.0 && self.e < 1.0) {
            return Err(Error::UnboundOrbit(self.e));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidArgument(format!("semi-major axis must be positive, got {}", self.a)));
        }
        let angles = [self.i, self.raan, self.argp, self.true_anomaly];
        if angles.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("orbital angles must be finite".into()));
        }
        Ok(())
    }

    pub fn semi_latus_rectum(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }
}

fn rotation(raan: f64, i: f64, argp: f64) -> nalgebra::Matrix3<f64> {
    let (so, co) = raan.sin_cos();
    let (si, ci) = i.sin_cos();
    let (sw, cw) = argp.sin_cos();
    nalgebra::Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    )
}

/// Inertial position (km) and velocity (km/s).
pub fn elements_to_state(el: &OrbitalElements, g: &GravityModel) -> Result<(Vector3<f64>, Vector3<f64>)> {
    el.validate()?;
    let p = el.semi_latus_rectum();
    let f = el.true_anomaly.to_radians();
    let (sf, cf) = f.sin_cos();
    let r = p / (1.0 + el.e * cf);
    let r_pf = Vector3::new(r * cf, r * sf, 0.0);
    let k = (g.mu / p).sqrt();
    let v_pf = Vector3::new(-k * sf, k * (el.e + cf), 0.0);
    let q = rotation(el.raan.to_radians(), el.i.to_radians(), el.argp.to_radians());
    Ok((q * r_pf, q * v_pf))
}

/// Osculating elements of a bound state.
///
/// For equatorial orbits the node is taken on the x axis; for circular
/// orbits the perigee is placed at the node, so the true anomaly becomes the
/// argument of latitude (or true longitude).
pub fn state_to_elements(r: &Vector3<f64>, v: &Vector3<f64>, g: &GravityModel) -> Result<OrbitalElements> {
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(Error::InvalidArgument("zero position vector".into()));
    }
    let h = r.cross(v);
    let hn = h.norm();
    if !(hn > 0.0) {
        return Err(Error::InvalidArgument("rectilinear orbit".into()));
    }
    let energy = v.norm_squared() / 2.0 - g.mu / rn;
    if energy >= 0.0 {
        let e_vec = v.cross(&h) / g.mu - r / rn;
        return Err(Error::UnboundOrbit(e_vec.norm()));
    }
    let a = -g.mu / (2.0 * energy);
    let e_vec = v.cross(&h) / g.mu - r / rn;
    let e = e_vec.norm();
    let i = (h.z / hn).clamp(-1.0, 1.0).acos();

    const SMALL: f64 = 1e-11;
    let node = Vector3::new(-h.y, h.x, 0.0);
    let nn = node.norm();
    let equatorial = nn < SMALL * hn;
    let (node_dir, raan) = if equatorial {
        (Vector3::x(), 0.0)
    } else {
        let nd = node / nn;
        (nd, nd.y.atan2(nd.x).rem_euclid(TAU))
    };
    // in-plane axis 90° ahead of the node direction
    let node_perp = (h / hn).cross(&node_dir);

    let angle_from_node = |u: &Vector3<f64>| u.dot(&node_perp).atan2(u.dot(&node_dir)).rem_euclid(TAU);
    let (argp, f) = if e < SMALL {
        (0.0, angle_from_node(r))
    } else {
        let w = angle_from_node(&e_vec);
        let e_hat = e_vec / e;
        let q_hat = (h / hn).cross(&e_hat);
        let f = r.dot(&q_hat).atan2(r.dot(&e_hat)).rem_euclid(TAU);
        (w, f)
    };
    Ok(OrbitalElements {
        a,
        e,
        i: i.to_degrees(),
        raan: raan.to_degrees(),
        argp: argp.to_degrees(),
        true_anomaly: f.to_degrees(),
    })
}

/// Eccentric anomaly for mean anomaly `m` (rad), residual below 1e-12.
///
/// Newton iteration kept inside the bracket `[M − e, M + e]`, falling back
/// to bisection whenever a step would leave it.
pub fn solve_kepler(m: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::UnboundOrbit(e));
    }
    if !m.is_finite() {
        return Err(Error::KeplerNoConvergence { mean_anomaly: m, e });
    }
    let mw = m.rem_euclid(TAU);
    let resid = |ea: f64| ea - e * ea.sin() - mw;
    let (mut lo, mut hi) = (mw - e, mw + e);
    let mut ea = if e < 0.8 { mw } else { PI };
    if !(lo..=hi).contains(&ea) {
        ea = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = resid(ea);
        if f.abs() < 1e-12 {
            return Ok(ea + (m - mw));
        }
        if f > 0.0 {
            hi = ea;
        } else {
            lo = ea;
        }
        let step = ea - f / (1.0 - e * ea.cos());
        ea = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < f64::EPSILON * hi.abs().max(1.0) {
            // bracket exhausted at machine precision
            if resid(ea).abs() < 1e-12 {
                return Ok(ea + (m - mw));
            }
            break;
        }
    }
    Err(Error::KeplerNoConvergence { mean_anomaly: m, e })
}

pub fn eccentric_to_true(ea: f64, e: f64) -> f64 {
    let (s, c) = (ea / 2.0).sin_cos();
    2.0 * ((1.0 + e).sqrt() * s).atan2((1.0 - e).sqrt() * c)
}

pub fn true_to_eccentric(f: f64, e: f64) -> f64 {
    let (s, c) = (f / 2.0).sin_cos();
    2.0 * ((1.0 - e).sqrt() * s).atan2((1.0 + e).sqrt() * c)
}

/// Mean anomaly (rad) to true anomaly (rad) in `[0, 2π)`.
pub fn mean_to_true(m: f64, e: f64) -> Result<f64> {
    Ok(eccentric_to_true(solve_kepler(m, e)?, e).rem_euclid(TAU))
}

/// True anomaly (rad) to mean anomaly (rad) in `[0, 2π)`.
pub fn true_to_mean(f: f64, e: f64) -> f64 {
    let ea = true_to_eccentric(f, e);
    (ea - e * ea.sin()).rem_euclid(TAU)
}

/// Two-body period `2π √(a³/μ)`, seconds.
pub fn kepler_period(a: f64, mu: f64) -> f64 {
    TAU * (a.powi(3) / mu).sqrt()
}

/// Complete elliptic integral of the first kind `K(k)` by the
/// arithmetic-geometric mean.
pub fn elliptic_k(k: f64) -> f64 {
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// Period of the pendulum `θ̈ = −ω₀² sin θ` released from rest at
/// `amplitude` (rad): `4 K(sin(θ₀/2)) / ω₀`.
pub fn pendulum_period(omega0_sq: f64, amplitude: f64) -> f64 {
    4.0 * elliptic_k((amplitude / 2.0).sin()) / omega0_sq.sqrt()
}
