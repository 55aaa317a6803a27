//! Uniformly sampled multivariate time series.

use crate::error::{Error, Result};
use crate::numerics::RealMatrix;
use nalgebra::{DVector, DVectorView};

/// Partition of state components into position-like and velocity-like sets.
///
/// Both sets empty means "no grouping": error metrics treat the whole state
/// as one group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Groups {
    pub position: Vec<usize>,
    pub velocity: Vec<usize>,
}

impl Groups {
    pub fn none() -> Self {
        Self::default()
    }

    /// Standard `[x, y, z, vx, vy, vz]` layout.
    pub fn orbital() -> Self {
        Self {
            position: vec![0, 1, 2],
            velocity: vec![3, 4, 5],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty() && self.velocity.is_empty()
    }

    /// Named index sets used for error evaluation.
    pub fn evaluation_sets(&self, dim: usize) -> Vec<(&'static str, Vec<usize>)> {
        if self.is_empty() {
            return vec![("all", (0..dim).collect())];
        }
        let mut sets = Vec::new();
        if !self.position.is_empty() {
            sets.push(("position", self.position.clone()));
        }
        if !self.velocity.is_empty() {
            sets.push(("velocity", self.velocity.clone()));
        }
        sets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    t0: f64,
    /// n × T, one column per sample.
    states: RealMatrix,
    labels: Vec<String>,
    groups: Groups,
}

impl Trajectory {
    pub fn new(dt: f64, t0: f64, states: RealMatrix, labels: Vec<String>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTrajectory(format!("dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidTrajectory("t0 must be finite".into()));
        }
        if states.nrows() == 0 || states.ncols() == 0 {
            return Err(Error::InvalidTrajectory("no samples".into()));
        }
        if labels.len() != states.nrows() {
            return Err(Error::InvalidTrajectory(format!(
                "{} labels for {} components",
                labels.len(),
                states.nrows()
            )));
        }
        if let Some((k, _)) = states.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "non-finite value at sample {}",
                k / states.nrows()
            )));
        }
        Ok(Self {
            dt,
            t0,
            states,
            labels,
            groups: Groups::none(),
        })
    }

    /// Scalar series with label `x`.
    pub fn from_scalar(dt: f64, values: &[f64]) -> Result<Self> {
        let states = RealMatrix::from_row_slice(1, values.len(), values);
        Self::new(dt, 0.0, states, vec!["x".into()])
    }

    pub fn from_columns(dt: f64, t0: f64, columns: &[DVector<f64>], labels: Vec<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidTrajectory("no samples".into()));
        }
        Self::new(dt, t0, RealMatrix::from_columns(columns), labels)
    }

    pub fn with_groups(mut self, groups: Groups) -> Result<Self> {
        let n = self.dim();
        let all: Vec<usize> = groups.position.iter().chain(&groups.velocity).copied().collect();
        if all.iter().any(|&i| i >= n) {
            return Err(Error::InvalidTrajectory("group index out of range".into()));
        }
        let mut sorted = all.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != all.len() {
            return Err(Error::InvalidTrajectory("groups must be disjoint".into()));
        }
        self.groups = groups;
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn states(&self) -> &RealMatrix {
        &self.states
    }

    pub fn state(&self, k: usize) -> DVectorView<'_, f64> {
        self.states.column(k)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Samples `start .. start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(Error::TooShort {
                required: start + len.max(1),
                available: self.len(),
            });
        }
        Ok(Self {
            dt: self.dt,
            t0: self.time(start),
            states: self.states.columns(start, len).into_owned(),
            labels: self.labels.clone(),
            groups: self.groups.clone(),
        })
    }

    /// Keeps every `stride`-th sample starting at the first.
    pub fn decimate(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        let states = RealMatrix::from_fn(self.dim(), idx.len(), |i, j| self.states[(i, idx[j])]);
        Ok(Self {
            dt: self.dt * stride as f64,
            t0: self.t0,
            states,
            labels: self.labels.clone(),
            groups: self.groups.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        let m = RealMatrix::zeros(1, 3);
        assert!(Trajectory::new(0.0, 0.0, m.clone(), vec!["x".into()]).is_err());
        assert!(Trajectory::new(1.0, 0.0, m.clone(), vec![]).is_err());
        let mut bad = m.clone();
        bad[(0, 1)] = f64::INFINITY;
        assert!(Trajectory::new(1.0, 0.0, bad, vec!["x".into()]).is_err());
    }

    #[test]
    fn overlapping_groups_rejected() {
        let t = Trajectory::new(1.0, 0.0, RealMatrix::zeros(2, 3), vec!["a".into(), "b".into()]).unwrap();
        let g = Groups {
            position: vec![0],
            velocity: vec![0],
        };
        assert!(t.with_groups(g).is_err());
    }

    #[test]
    fn window_and_decimate() {
        let t = Trajectory::from_scalar(0.5, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = t.window(1, 3).unwrap();
        assert_eq!(w.states().as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(w.t0(), 0.5);
        let d = t.decimate(2).unwrap();
        assert_eq!(d.states().as_slice(), &[0.0, 2.0, 4.0]);
        assert_eq!(d.dt(), 1.0);
        assert!(t.window(3, 3).is_err());
    }
}
