//! Dense linear-algebra kernel shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix` values and therefore stored column-major.
//! SVD and the real Schur form come from nalgebra; eigenvectors are recovered
//! here by shifted inverse iteration so that the eigenvectors of a conjugate
//! eigenvalue pair are exact conjugates of each other.

use nalgebra::{ComplexField, DMatrix, DVector, Schur};
use num_complex::Complex64;
use std::cmp::Ordering;
use thiserror::Error;

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative singular-value threshold used for exact-rank questions on
/// noise-free data.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 10_000;
const INVERSE_ITERATION_STEPS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has no entries")]
    Empty,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("SVD did not converge within {iterations} iterations")]
    SvdNoConvergence { iterations: usize },
    #[error("Schur iteration did not converge within {iterations} iterations")]
    EigNoConvergence { iterations: usize },
}

/// Economy-size singular value decomposition `m = u * diag(s) * v^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: RealMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: DVector<f64>,
    pub v: RealMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> RealMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Eigenvalues and right eigenvectors of a real square matrix.
///
/// Complex eigenvalues come in adjacent conjugate pairs with the positive
/// imaginary part first. Pairs are ordered by |arg(λ)| ascending, then by
/// modulus descending. Every eigenvector has unit 2-norm.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: DVector<Complex64>,
    pub vectors: ComplexMatrix,
}

fn check_finite<T: ComplexField>(m: &DMatrix<T>) -> Result<(), LinalgError> {
    if m.is_empty() {
        return Err(LinalgError::Empty);
    }
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

pub fn svd(m: &RealMatrix) -> Result<SvdResult, LinalgError> {
    check_finite(m)?;
    let decomposition = m
        .clone()
        .try_svd(true, true, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(LinalgError::SvdNoConvergence {
            iterations: MAX_ITERATIONS,
        })?;
    let u = decomposition.u.expect("u requested");
    let v_t = decomposition.v_t.expect("v requested");
    let s = decomposition.singular_values;

    // nalgebra sorts already; enforce it anyway since callers rely on it.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u = RealMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v = RealMatrix::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)]);
    let singular_values = DVector::from_iterator(order.len(), order.iter().map(|&k| s[k]));
    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

/// Singular values of a real or complex matrix, sorted descending.
pub fn singular_values<T>(m: &DMatrix<T>) -> Result<Vec<f64>, LinalgError>
where
    T: ComplexField<RealField = f64>,
{
    check_finite(m)?;
    let s = m
        .clone()
        .try_svd(false, false, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(LinalgError::SvdNoConvergence {
            iterations: MAX_ITERATIONS,
        })?
        .singular_values;
    let mut s: Vec<f64> = s.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values strictly above `rel_tol * s_max`.
pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    let s_max = s.iter().copied().fold(0.0_f64, f64::max);
    if s_max <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * s_max).count()
}

/// Moore–Penrose pseudoinverse through the SVD; singular values at or below
/// `rel_tol * s_max` are treated as zero.
pub fn pseudoinverse<T>(m: &DMatrix<T>, rel_tol: f64) -> Result<DMatrix<T>, LinalgError>
where
    T: ComplexField<RealField = f64>,
{
    check_finite(m)?;
    let decomposition = m
        .clone()
        .try_svd(true, true, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(LinalgError::SvdNoConvergence {
            iterations: MAX_ITERATIONS,
        })?;
    let u = decomposition.u.expect("u requested");
    let v_t = decomposition.v_t.expect("v requested");
    let s = decomposition.singular_values;
    let s_max = s.iter().copied().fold(0.0_f64, f64::max);

    // pinv = V * diag(1/s) * U^H, built column-scaled to avoid a diagonal matrix.
    let mut v = v_t.adjoint();
    for (j, &sj) in s.iter().enumerate() {
        let inv = if s_max > 0.0 && sj > rel_tol * s_max {
            1.0 / sj
        } else {
            0.0
        };
        v.column_mut(j).scale_mut(inv);
    }
    Ok(v * u.adjoint())
}

/// Least-squares solve `m * x ≈ rhs` through the pseudoinverse.
pub fn lstsq<T>(m: &DMatrix<T>, rhs: &DMatrix<T>, rel_tol: f64) -> Result<DMatrix<T>, LinalgError>
where
    T: ComplexField<RealField = f64>,
{
    Ok(pseudoinverse(m, rel_tol)? * rhs)
}

pub fn eig(m: &RealMatrix) -> Result<EigResult, LinalgError> {
    check_finite(m)?;
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, MAX_ITERATIONS).ok_or(
        LinalgError::EigNoConvergence {
            iterations: MAX_ITERATIONS,
        },
    )?;
    let raw = schur.complex_eigenvalues();

    // One representative per conjugate pair (Im > 0) plus the real ones.
    let mut reps: Vec<Complex64> = raw.iter().copied().filter(|z| z.im >= 0.0).collect();
    let n_pos = raw.iter().filter(|z| z.im > 0.0).count();
    let n_neg = raw.iter().filter(|z| z.im < 0.0).count();
    debug_assert_eq!(n_pos, n_neg);
    reps.sort_by(compare_eigenvalues);

    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut values: Vec<Complex64> = Vec::with_capacity(n);
    let mut vectors: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for lambda in reps {
        // Earlier vectors sharing (numerically) this eigenvalue are deflated
        // so repeated eigenvalues get independent eigenvectors.
        let cluster: Vec<DVector<Complex64>> = values
            .iter()
            .zip(vectors.iter())
            .filter(|(mu, _)| (**mu - lambda).norm() <= 1e-8 * scale)
            .map(|(_, w)| w.clone())
            .collect();
        let w = inverse_iteration(m, lambda, &cluster, values.len());
        if lambda.im > 0.0 {
            let w_conj = w.map(|z| z.conj());
            values.push(lambda);
            vectors.push(w);
            values.push(lambda.conj());
            vectors.push(w_conj);
        } else {
            values.push(lambda);
            vectors.push(w);
        }
    }

    let vectors = ComplexMatrix::from_columns(&vectors);
    Ok(EigResult {
        values: DVector::from_vec(values),
        vectors,
    })
}

fn compare_eigenvalues(a: &Complex64, b: &Complex64) -> Ordering {
    a.arg()
        .abs()
        .total_cmp(&b.arg().abs())
        .then(b.norm().total_cmp(&a.norm()))
        .then(b.re.total_cmp(&a.re))
}

/// Eigenvector for the (already accurate) eigenvalue `lambda`.
fn inverse_iteration(
    m: &RealMatrix,
    lambda: Complex64,
    deflate: &[DVector<Complex64>],
    seed: usize,
) -> DVector<Complex64> {
    let n = m.nrows();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let shifted = ComplexMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
        Complex64::new(m[(i, j)], 0.0) - d
    });
    let lu = ComplexLu::new(shifted, f64::EPSILON * scale);

    // Deterministic, generic start vector (real, so real eigenvalues stay real).
    let mut x = DVector::from_fn(n, |i, _| {
        let t = (i + 1) as f64 * 0.754_877_666 + seed as f64 * 0.569_840_29;
        Complex64::new(1.0 + 0.5 * (t.fract() - 0.5), 0.0)
    });
    orthogonalize(&mut x, deflate);
    normalize(&mut x);

    for _ in 0..INVERSE_ITERATION_STEPS {
        let mut y = lu.solve(&x);
        orthogonalize(&mut y, deflate);
        if !normalize(&mut y) {
            break;
        }
        x = y;
        let residual = residual_norm(m, lambda, &x);
        if residual <= 1e-13 * scale {
            break;
        }
    }
    fix_phase(&mut x);
    x
}

fn residual_norm(m: &RealMatrix, lambda: Complex64, x: &DVector<Complex64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        let mut s = -lambda * x[i];
        for j in 0..n {
            s += x[j] * m[(i, j)];
        }
        acc += s.norm_sqr();
    }
    acc.sqrt()
}

fn orthogonalize(x: &mut DVector<Complex64>, basis: &[DVector<Complex64>]) {
    for q in basis {
        let proj = q.dotc(x);
        x.axpy(-proj, q, Complex64::new(1.0, 0.0));
    }
}

fn normalize(x: &mut DVector<Complex64>) -> bool {
    let norm = x.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    x.unscale_mut(norm);
    true
}

/// Rotates the vector so its largest-modulus entry is real and positive.
fn fix_phase(x: &mut DVector<Complex64>) {
    let Some((_, pivot)) = x
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.norm().total_cmp(&b.norm()).then(j.cmp(i)))
        .map(|(i, z)| (i, *z))
    else {
        return;
    };
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        x.iter_mut().for_each(|z| *z *= phase);
    }
}

/// LU factorisation with partial pivoting; pivots below `tiny` are replaced
/// by `tiny` so that nearly singular shifted matrices still solve.
struct ComplexLu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl ComplexLu {
    fn new(mut a: ComplexMatrix, tiny: f64) -> Self {
        let n = a.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in (k + 1)..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                a.swap_rows(p, k);
                perm.swap(p, k);
            }
            if a[(k, k)].norm() < tiny {
                a[(k, k)] = Complex64::new(tiny, 0.0);
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor != Complex64::new(0.0, 0.0) {
                    for j in (k + 1)..n {
                        let akj = a[(k, j)];
                        a[(i, j)] -= factor * akj;
                    }
                }
            }
        }
        Self { lu: a, perm }
    }

    fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.lu.nrows();
        let mut y = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        y
    }
}
