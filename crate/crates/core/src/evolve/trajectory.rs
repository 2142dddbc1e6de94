use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{Field, Grid, Repr};
use crate::multipliers::omega;
use crate::C64;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFlags {
    /// First time at which the sup norm crossed the blow-up ceiling.
    pub blowup_time: Option<f64>,
    pub notes: Vec<String>,
}

/// Fourier snapshots on the uniform time grid `t_i = (i - n_back) dt`.
/// Snapshot `n_back` is the datum at `t = 0`.
#[derive(Clone)]
pub struct Trajectory {
    grid: Grid,
    dt: f64,
    n_back: usize,
    snaps: Vec<Vec<C64>>,
    pub flags: TrajectoryFlags,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Trajectory({:?}, dt={}, t in [{}, {}])",
            self.grid,
            self.dt,
            self.t_min(),
            self.t_max()
        )
    }
}

impl Trajectory {
    pub fn new(grid: &Grid, dt: f64, n_back: usize, snaps: Vec<Vec<C64>>) -> Result<Self> {
        if snaps.is_empty() || n_back >= snaps.len() {
            return Err(LabError::EmptyTrajectory);
        }
        if !(dt > 0.0) {
            return Err(LabError::Parameter(format!("time step {dt} must be positive")));
        }
        if snaps.iter().any(|s| s.len() != grid.len()) {
            return Err(LabError::GridMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            dt,
            n_back,
            snaps,
            flags: TrajectoryFlags::default(),
        })
    }

    /// The same field at every time `-n dt, .., n dt`.
    pub fn stationary(field: &Field, dt: f64, n: usize) -> Self {
        let f = field.fourier().into_values();
        Self {
            grid: field.grid().clone(),
            dt,
            n_back: n,
            snaps: vec![f; 2 * n + 1],
            flags: TrajectoryFlags::default(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn len(&self) -> usize {
        self.snaps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }
    pub fn n_back(&self) -> usize {
        self.n_back
    }
    pub fn n_fwd(&self) -> usize {
        self.snaps.len() - 1 - self.n_back
    }
    /// Number of steps `j` for which `[-j dt, j dt]` is stored.
    pub fn half_extent(&self) -> usize {
        self.n_back.min(self.n_fwd())
    }
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.n_back as f64) * self.dt
    }
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
    pub fn t_min(&self) -> f64 {
        self.time(0)
    }
    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Index range `(lo, hi)` of the snapshots in `[-j dt, j dt]`.
    pub fn window(&self, j: usize) -> (usize, usize) {
        let j = j.min(self.half_extent());
        (self.n_back - j, self.n_back + j)
    }

    /// Index range of the whole stored interval.
    pub fn full_window(&self) -> (usize, usize) {
        (0, self.len() - 1)
    }

    pub fn snapshot(&self, i: usize) -> &[C64] {
        &self.snaps[i]
    }
    pub fn snapshots(&self) -> &[Vec<C64>] {
        &self.snaps
    }
    pub fn into_snapshots(self) -> Vec<Vec<C64>> {
        self.snaps
    }

    pub fn field(&self, i: usize) -> Field {
        Field::from_values(&self.grid, self.snaps[i].clone(), Repr::Fourier)
            .expect("snapshot length checked at construction")
    }

    pub fn initial(&self) -> Field {
        self.field(self.n_back)
    }

    /// Value at time `t`, interpolated linearly in the interaction picture
    /// `v = e^{-itA} u`, which is exact for free solutions.
    pub fn at(&self, t: f64) -> Result<Field> {
        let (lo, hi) = (self.t_min(), self.t_max());
        let eps = 1e-12 * self.dt;
        if t < lo - eps || t > hi + eps {
            return Err(LabError::TimeOutOfRange { t, lo, hi });
        }
        let pos = ((t - lo) / self.dt).clamp(0.0, (self.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.len().saturating_sub(2));
        if self.len() == 1 {
            return Ok(self.field(0));
        }
        let (t0, t1) = (self.time(i), self.time(i + 1));
        let lam = (t - t0) / self.dt;
        let (a, b) = (&self.snaps[i], &self.snaps[i + 1]);
        let mut out = Vec::with_capacity(self.grid.len());
        let ny = self.grid.ny();
        for (r, &xi) in self.grid.xi().iter().enumerate() {
            for (m, &eta) in self.grid.eta().iter().enumerate() {
                let w = omega(xi, eta);
                let k = r * ny + m;
                let p0 = C64::from_polar(1.0 - lam, -(t - t0) * w);
                let p1 = C64::from_polar(lam, -(t - t1) * w);
                out.push(p0 * a[k] + p1 * b[k]);
            }
        }
        Field::from_values(&self.grid, out, Repr::Fourier)
    }

    /// Combines two trajectories on the same time grid snapshot by snapshot.
    pub fn zip_with(&self, other: &Trajectory, f: impl Fn(C64, C64) -> C64) -> Result<Trajectory> {
        self.grid.check_same(&other.grid)?;
        if self.n_back != other.n_back || self.len() != other.len() || self.dt != other.dt {
            return Err(LabError::Parameter("trajectories use different time grids".into()));
        }
        let snaps = self
            .snaps
            .iter()
            .zip(&other.snaps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Ok(Trajectory {
            grid: self.grid.clone(),
            dt: self.dt,
            n_back: self.n_back,
            snaps,
            flags: TrajectoryFlags::default(),
        })
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a - b)
    }

    /// In-place `self += c * other`.
    pub fn axpy_assign(&mut self, c: C64, other: &Trajectory) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.n_back != other.n_back || self.len() != other.len() {
            return Err(LabError::Parameter("trajectories use different time grids".into()));
        }
        for (a, b) in self.snaps.iter_mut().zip(&other.snaps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
        Ok(())
    }

    pub fn scale(&self, c: C64) -> Trajectory {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            dt: self.dt,
            n_back: self.n_back,
            snaps: self.snaps.iter().map(|s| s.iter().map(|v| f(*v)).collect()).collect(),
            flags: self.flags.clone(),
        }
    }

    /// Applies a coefficient-wise transformation to each snapshot.
    pub fn map_snapshots(&self, mut f: impl FnMut(usize, &[C64]) -> Vec<C64>) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            dt: self.dt,
            n_back: self.n_back,
            snaps: self.snaps.iter().enumerate().map(|(i, s)| f(i, s)).collect(),
            flags: self.flags.clone(),
        }
    }

    /// `sup_t ||u(t)||_{L^2}`.
    pub fn sup_l2(&self) -> f64 {
        let area = self.grid.area();
        self.snaps
            .iter()
            .map(|s| (s.iter().map(|v| v.norm_sqr()).sum::<f64>() * area).sqrt())
            .fold(0.0, f64::max)
    }

    /// `sup_t ||u(t) - v(t)||_{L^2}`.
    pub fn sup_l2_diff(&self, other: &Trajectory) -> Result<f64> {
        Ok(self.sub(other)?.sup_l2())
    }
}
