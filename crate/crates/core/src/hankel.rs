//! Delay embedding of trajectories and minimal-delay detection from the
//! rank of the embedded data matrix.

use crate::error::{Error, Result};
use crate::numerics::{numerical_rank, singular_values, RealMatrix};
pub use crate::trajectory::{Groups, Trajectory};

/// Shifted pair of delay-embedded data matrices.
///
/// Row block `i` of `h_k` holds the trajectory shifted by `i` samples, so
/// `h_k[(i * n + d, j)] == x_d(j + i)`, and `h_k1` is `h_k` advanced one
/// sample. Both have `n * delays` rows and `T - delays` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    pub h_k: RealMatrix,
    pub h_k1: RealMatrix,
    pub delays: usize,
    pub state_dim: usize,
    /// Epoch of the first column of `h_k`.
    pub t0: f64,
}

impl HankelPair {
    pub fn columns(&self) -> usize {
        self.h_k.ncols()
    }
}

pub fn build_hankel(traj: &Trajectory, delays: usize) -> Result<HankelPair> {
    if delays == 0 {
        return Err(Error::InvalidArgument("delays must be at least 1".into()));
    }
    let t = traj.len();
    if t < delays + 2 {
        return Err(Error::TooShort {
            required: delays + 2,
            available: t,
        });
    }
    let n = traj.dim();
    let cols = t - delays;
    let x = traj.states();
    let h_k = RealMatrix::from_fn(n * delays, cols, |row, j| x[(row % n, j + row / n)]);
    let h_k1 = RealMatrix::from_fn(n * delays, cols, |row, j| x[(row % n, j + 1 + row / n)]);
    Ok(HankelPair {
        h_k,
        h_k1,
        delays,
        state_dim: n,
        t0: traj.t0(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalDelays {
    /// Saturated rank of the embedded data matrix.
    pub l_star: usize,
    /// `(l, rank(H_k))` for every probed `l`.
    pub rank_curve: Vec<(usize, usize)>,
}

/// Rank of `h_k` for delays `1..=l_max`.
///
/// The rank is considered saturated once it stays unchanged over two further
/// increments of `l`; `l_star` is that saturated value.
pub fn minimal_delays(traj: &Trajectory, l_max: usize, rel_tol: f64) -> Result<MinimalDelays> {
    if l_max < 2 {
        return Err(Error::InvalidArgument("l_max must be at least 2".into()));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let n = traj.dim();
    // columns (T - l_max) must exceed rows (n * l_max)
    let required = n * l_max + l_max + 1;
    if traj.len() < required {
        return Err(Error::TooShort {
            required,
            available: traj.len(),
        });
    }
    let mut rank_curve = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let pair = build_hankel(traj, l)?;
        let s = singular_values(&pair.h_k)?;
        rank_curve.push((l, numerical_rank(&s, rel_tol)));
    }
    let ranks: Vec<usize> = rank_curve.iter().map(|&(_, r)| r).collect();
    let saturated = ranks.windows(3).find(|w| w[0] == w[1] && w[1] == w[2]).map(|w| w[0]);
    match saturated {
        Some(l_star) => Ok(MinimalDelays { l_star, rank_curve }),
        None => Err(Error::RankNotSaturated {
            l_max,
            rank: *ranks.last().unwrap_or(&0),
        }),
    }
}
