//! Fourier/Vandermonde least squares and the time-invariant autoregressive
//! model it implies.
//!
//! A signal spanned by `2M` complex exponentials obeys
//! `x(k + l) = Σ α_i x(k + i)` for any `l ≥ 2M`, with the same scalar `α`
//! for every component. This module computes `α` either from a known set of
//! frequencies or directly from data, and is used as an independent check on
//! the DMD path.

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, RealMatrix};
use crate::trajectory::Trajectory;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Condition number above which a Fourier fit is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    /// Angular frequencies in radians per step.
    omegas: Vec<f64>,
    includes_dc: bool,
}

impl SpectralBasis {
    /// Basis from an explicit frequency list. Frequencies must be distinct
    /// modulo 2π beyond rounding; near-coincident ones are accepted and show
    /// up as an ill-conditioned fit instead.
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        for (i, a) in omegas.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidArgument("non-finite basis frequency".into()));
            }
            for b in &omegas[..i] {
                if wrap(a - b).abs() <= 8.0 * f64::EPSILON * (a.abs() + b.abs()).max(1.0) {
                    return Err(Error::DuplicateFrequency(wrap(*a)));
                }
            }
        }
        let includes_dc = omegas.iter().any(|w| wrap(*w).abs() < 1e-12);
        Ok(Self { omegas, includes_dc })
    }

    /// Conjugate-closed basis `{±ω_m}`, optionally with a DC term first.
    pub fn real_signal(freqs: &[f64], dc: bool) -> Result<Self> {
        let mut omegas = Vec::with_capacity(2 * freqs.len() + 1);
        if dc {
            omegas.push(0.0);
        }
        for &w in freqs {
            omegas.push(w);
            omegas.push(-w);
        }
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn includes_dc(&self) -> bool {
        self.includes_dc
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

fn wrap(w: f64) -> f64 {
    (w + PI).rem_euclid(2.0 * PI) - PI
}

/// `basis.len()` × `cols` matrix with entry `(m, j) = exp(i ω_m (k0 + j))`.
pub fn vandermonde(basis: &SpectralBasis, k0: i64, cols: usize) -> Result<ComplexMatrix> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty spectral basis".into()));
    }
    if cols < basis.len() {
        return Err(Error::RankDeficient {
            rank: cols,
            required: basis.len(),
        });
    }
    Ok(ComplexMatrix::from_fn(basis.len(), cols, |m, j| {
        Complex64::from_polar(1.0, basis.omegas[m] * (k0 + j as i64) as f64)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierFit {
    /// `n` × `basis.len()`.
    pub coefficients: ComplexMatrix,
    /// Frobenius norm of `a V − X`.
    pub residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Least-squares Fourier coefficients `a = X V†` over the whole window.
pub fn fourier_coefficients(window: &Trajectory, basis: &SpectralBasis) -> Result<FourierFit> {
    let t = window.len();
    let v = vandermonde(basis, 0, t).map_err(|e| match e {
        Error::RankDeficient { required, .. } => Error::TooShort { required, available: t },
        other => other,
    })?;
    let s = numerics::singular_values(&v)?;
    let condition = match s.last() {
        Some(&lo) if lo > 0.0 => s[0] / lo,
        _ => f64::INFINITY,
    };
    let x = window.states().map(|r| Complex64::new(r, 0.0));
    let coefficients = &x * numerics::pseudoinverse(&v, numerics::DEFAULT_RANK_TOL)?;
    let residual = (&coefficients * &v - &x).norm();
    Ok(FourierFit {
        coefficients,
        residual,
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    /// `α_0 .. α_{l-1}`, oldest sample first.
    pub coefficients: Vec<f64>,
    pub order: usize,
    pub state_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub model: ArModel,
    /// `‖Φ α − y‖ / ‖y‖` over all stacked training equations (absolute when
    /// `y = 0`).
    pub residual: f64,
}

/// AR coefficients implied by a frequency basis: `α = V† y` with
/// `V[m, j] = e^{iω_m j}`, `y[m] = e^{iω_m l}`.
///
/// The minimum-norm solution is real whenever the basis is closed under
/// conjugation.
pub fn ar_from_basis(basis: &SpectralBasis, order: usize) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::InvalidArgument("AR order must be at least 1".into()));
    }
    let v = vandermonde(basis, 0, order)?;
    let rank = numerics::numerical_rank(&numerics::singular_values(&v)?, numerics::DEFAULT_RANK_TOL);
    if rank < basis.len() {
        return Err(Error::RankDeficient {
            rank,
            required: basis.len(),
        });
    }
    // one equation Σ α_i e^{iω_m i} = e^{iω_m l} per basis frequency
    let y = ComplexMatrix::from_fn(basis.len(), 1, |m, _| {
        Complex64::from_polar(1.0, basis.omegas[m] * order as f64)
    });
    let alpha = numerics::lstsq(&v, &y, numerics::DEFAULT_RANK_TOL)?;
    let scale = alpha.iter().map(|a| a.norm()).fold(1.0, f64::max);
    if alpha.iter().any(|a| a.im.abs() > 1e-8 * scale) {
        return Err(Error::InvalidArgument(
            "basis is not closed under conjugation; AR coefficients are complex".into(),
        ));
    }
    Ok(ArModel {
        coefficients: alpha.iter().map(|a| a.re).collect(),
        order,
        state_dim: 1,
    })
}

/// Shared-coefficient AR fit from data, stacking every component and every
/// available shift into one least-squares problem.
pub fn ar_fit(window: &Trajectory, order: usize, rel_tol: f64) -> Result<ArFit> {
    if order == 0 {
        return Err(Error::InvalidArgument("AR order must be at least 1".into()));
    }
    let t = window.len();
    let required = 2 * order + 1;
    if t < required {
        return Err(Error::TooShort { required, available: t });
    }
    let n = window.dim();
    let shifts = t - order;
    let x = window.states();
    let phi = RealMatrix::from_fn(n * shifts, order, |row, i| x[(row % n, row / n + i)]);
    let y = RealMatrix::from_fn(n * shifts, 1, |row, _| x[(row % n, row / n + order)]);
    let alpha = numerics::lstsq(&phi, &y, rel_tol)?;
    let err = (&phi * &alpha - &y).norm();
    let y_norm = y.norm();
    let residual = if y_norm > 0.0 { err / y_norm } else { err };
    Ok(ArFit {
        model: ArModel {
            coefficients: alpha.iter().copied().collect(),
            order,
            state_dim: n,
        },
        residual,
    })
}

/// Iterates `x(k + l) = Σ α_i x(k + i)` forward from `history`
/// (`n` × `l`, oldest column first). Returns `n` × `steps`.
pub fn ar_predict(model: &ArModel, history: &RealMatrix, steps: usize) -> Result<RealMatrix> {
    let l = model.order;
    if history.ncols() != l {
        return Err(Error::InvalidArgument(format!(
            "history has {} samples, AR order is {l}",
            history.ncols()
        )));
    }
    let n = history.nrows();
    let mut buf = RealMatrix::zeros(n, l + steps);
    buf.columns_mut(0, l).copy_from(history);
    for k in 0..steps {
        for d in 0..n {
            let mut acc = 0.0;
            for (i, a) in model.coefficients.iter().enumerate() {
                acc += a * buf[(d, k + i)];
            }
            buf[(d, k + l)] = acc;
        }
    }
    Ok(buf.columns(l, steps).into_owned())
}

/// `l` × `l` companion matrix: ones on the sub-diagonal, `α` in the last
/// column.
pub fn companion(model: &ArModel) -> RealMatrix {
    let l = model.order;
    let mut c = RealMatrix::zeros(l, l);
    for i in 1..l {
        c[(i, i - 1)] = 1.0;
    }
    for (i, a) in model.coefficients.iter().enumerate() {
        c[(i, l - 1)] = *a;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn dc_row_and_quarter_turns() {
        let v = vandermonde(&SpectralBasis::new(vec![0.0]).unwrap(), 0, 3).unwrap();
        assert!(v.iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));

        let b = SpectralBasis::real_signal(&[PI / 2.0], false).unwrap();
        let v = vandermonde(&b, 0, 4).unwrap();
        let i = Complex64::i();
        let expected = [Complex64::new(1.0, 0.0), i, Complex64::new(-1.0, 0.0), -i];
        for j in 0..4 {
            assert!(close(v[(0, j)], expected[j], 1e-15));
            assert!(close(v[(1, j)], expected[j].conj(), 1e-15));
        }
    }

    #[test]
    fn vandermonde_rank_equals_basis_size() {
        for freqs in [vec![0.3], vec![0.3, 0.9], vec![0.2, 1.1, 2.5]] {
            let b = SpectralBasis::real_signal(&freqs, true).unwrap();
            let v = vandermonde(&b, 3, 12).unwrap();
            let r = numerics::numerical_rank(&numerics::singular_values(&v).unwrap(), 1e-10);
            assert_eq!(r, 2 * freqs.len() + 1);
        }
    }

    #[test]
    fn duplicate_frequency_rejected() {
        assert!(matches!(
            SpectralBasis::new(vec![0.3, 0.3 + 2.0 * PI]),
            Err(Error::DuplicateFrequency(_))
        ));
    }

    #[test]
    fn fourier_of_cosine_and_sine() {
        let x: Vec<f64> = (0..20).map(|k| (0.3 * k as f64).cos()).collect();
        let b = SpectralBasis::real_signal(&[0.3], false).unwrap();
        let f = fourier_coefficients(&Trajectory::from_scalar(1.0, &x).unwrap(), &b).unwrap();
        assert!(close(f.coefficients[(0, 0)], Complex64::new(0.5, 0.0), 1e-12));
        assert!(close(f.coefficients[(0, 1)], Complex64::new(0.5, 0.0), 1e-12));
        assert!(!f.ill_conditioned);

        let x: Vec<f64> = (0..20).map(|k| 2.0 * (0.5 * k as f64).sin()).collect();
        let b = SpectralBasis::real_signal(&[0.5], false).unwrap();
        let f = fourier_coefficients(&Trajectory::from_scalar(1.0, &x).unwrap(), &b).unwrap();
        assert!(close(f.coefficients[(0, 0)], Complex64::new(0.0, -1.0), 1e-12));
        assert!(close(f.coefficients[(0, 1)], Complex64::new(0.0, 1.0), 1e-12));
    }

    #[test]
    fn fourier_residual_two_frequencies() {
        let x: Vec<f64> = (0..40)
            .map(|k| {
                let k = k as f64;
                1.3 * (0.4 * k + 0.2).cos() - 0.7 * (1.9 * k).sin()
            })
            .collect();
        let b = SpectralBasis::real_signal(&[0.4, 1.9], false).unwrap();
        let f = fourier_coefficients(&Trajectory::from_scalar(1.0, &x).unwrap(), &b).unwrap();
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn near_duplicate_basis_flags_conditioning() {
        let b = SpectralBasis::new(vec![0.3, 0.3 + 1e-13]).unwrap();
        let x: Vec<f64> = (0..10).map(|k| (0.3 * k as f64).cos()).collect();
        let f = fourier_coefficients(&Trajectory::from_scalar(1.0, &x).unwrap(), &b).unwrap();
        assert!(f.ill_conditioned);
    }

    #[test]
    fn basis_coefficients() {
        let w: f64 = 0.7;
        let m = ar_from_basis(&SpectralBasis::real_signal(&[w], false).unwrap(), 2).unwrap();
        assert!((m.coefficients[0] + 1.0).abs() < 1e-12);
        assert!((m.coefficients[1] - 2.0 * w.cos()).abs() < 1e-12);

        let m = ar_from_basis(&SpectralBasis::new(vec![0.0]).unwrap(), 1).unwrap();
        assert!((m.coefficients[0] - 1.0).abs() < 1e-14);
    }

    /// Coefficients of `∏ (z − e^{±iω})` expanded by repeated multiplication;
    /// the AR coefficients are the negated lower-order terms.
    fn poly_oracle(freqs: &[f64]) -> Vec<f64> {
        let mut p = vec![1.0];
        for &w in freqs {
            let q = [1.0, -2.0 * w.cos(), 1.0];
            let mut out = vec![0.0; p.len() + 2];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            p = out;
        }
        // p is highest degree first: z^{2M} + p1 z^{2M-1} + ...
        p[1..].iter().rev().map(|c| -c).collect()
    }

    #[test]
    fn basis_coefficients_match_polynomial_expansion() {
        let m = ar_from_basis(&SpectralBasis::real_signal(&[0.3, 0.9], false).unwrap(), 4).unwrap();
        for (a, b) in m.coefficients.iter().zip(poly_oracle(&[0.3, 0.9])) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn rank_deficient_basis_order() {
        let b = SpectralBasis::real_signal(&[0.3, 0.9], false).unwrap();
        assert!(matches!(ar_from_basis(&b, 3), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn data_fit_matches_basis() {
        let x: Vec<f64> = (0..30).map(|k| (0.3 * k as f64).cos()).collect();
        let fit = ar_fit(&Trajectory::from_scalar(1.0, &x).unwrap(), 2, 1e-12).unwrap();
        assert!((fit.model.coefficients[0] + 1.0).abs() < 1e-9);
        assert!((fit.model.coefficients[1] - 2.0 * 0.3f64.cos()).abs() < 1e-9);
        assert!(fit.residual < 1e-12);

        let fit = ar_fit(&Trajectory::from_scalar(1.0, &[2.5; 5]).unwrap(), 1, 1e-12).unwrap();
        assert!((fit.model.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn data_fit_needs_enough_samples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            ar_fit(&Trajectory::from_scalar(1.0, &x).unwrap(), 2, 1e-10),
            Err(Error::TooShort { required: 5, available: 4 })
        ));
    }

    #[test]
    fn recurrence_identities() {
        let w: f64 = 0.4;
        let m = ArModel {
            coefficients: vec![-1.0, 2.0 * w.cos()],
            order: 2,
            state_dim: 1,
        };
        let h = RealMatrix::from_row_slice(1, 2, &[1.0, w.cos()]);
        let p = ar_predict(&m, &h, 1).unwrap();
        assert!((p[(0, 0)] - (2.0 * w).cos()).abs() < 1e-14);

        let m = ArModel {
            coefficients: vec![1.0],
            order: 1,
            state_dim: 1,
        };
        let p = ar_predict(&m, &RealMatrix::from_element(1, 1, 3.25), 50).unwrap();
        assert!(p.iter().all(|v| *v == 3.25));
    }

    #[test]
    fn two_frequency_extrapolation() {
        let signal = |k: usize| {
            let k = k as f64;
            (0.3 * k).cos() + 0.5 * (0.9 * k + 0.4).sin()
        };
        let m = ar_from_basis(&SpectralBasis::real_signal(&[0.3, 0.9], false).unwrap(), 4).unwrap();
        let h = RealMatrix::from_fn(1, 4, |_, j| signal(j));
        let p = ar_predict(&m, &h, 100).unwrap();
        let worst = (0..100).map(|k| (p[(0, k)] - signal(k + 4)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn companion_spectrum() {
        let m = ArModel {
            coefficients: vec![-1.0, 2.0 * 0.7f64.cos()],
            order: 2,
            state_dim: 1,
        };
        let e = numerics::eig(&companion(&m)).unwrap();
        let target = Complex64::from_polar(1.0, 0.7);
        assert!(e.values.iter().any(|z| close(*z, target, 1e-12)));
        assert!(e.values.iter().any(|z| close(*z, target.conj(), 1e-12)));

        let one = ArModel {
            coefficients: vec![1.0],
            order: 1,
            state_dim: 1,
        };
        assert_eq!(companion(&one), RealMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn order_below_two_m_fails_to_represent() {
        let x: Vec<f64> = (0..60)
            .map(|k| {
                let k = k as f64;
                (0.3 * k).cos() + (0.9 * k).cos()
            })
            .collect();
        let t = Trajectory::from_scalar(1.0, &x).unwrap();
        assert!(ar_fit(&t, 3, 1e-12).unwrap().residual > 1e-3);
        assert!(ar_fit(&t, 4, 1e-12).unwrap().residual < 1e-10);
    }
}
