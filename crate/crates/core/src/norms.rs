//! Norm functionals: anisotropic Sobolev, mass and energy, mixed space-time
//! Lebesgue norms, and the dyadically weighted ladder norms X, S, B, Y.
//!
//! Intersection norms are realized as sums of their components, and W^{sigma,inf}_y
//! as `||<D_y>^sigma . ||_{L^inf_y}`. Dyadic sums run over the bands that meet the
//! grid; their symbols sum to one on every mode, so nothing is lost to truncation.

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::evolve::Trajectory;
use crate::grid::{lp_norm, mixed_of_rows, Field, Grid, Transformer};
use crate::multipliers::{bracket_pow, dyadic_symbol, phi_lp, psi_lp};
use crate::numerics::trapezoid_lp;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    #[serde(rename = "M")]
    pub m: f64,
    pub weight: f64,
    pub contribution: f64,
}

/// A weighted dyadic norm with its per-band contributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub label: String,
    pub value: f64,
    pub interval: (f64, f64),
    pub bands: Vec<BandEntry>,
    /// Contribution of the top band, a bound for what finer grids would add.
    pub tail: f64,
}

impl NormReport {
    fn from_bands(label: String, interval: (f64, f64), bands: Vec<BandEntry>) -> Self {
        let value = bands.iter().map(|b| b.contribution).sum();
        let tail = bands.last().map(|b| b.contribution).unwrap_or(0.0);
        Self {
            label,
            value,
            interval,
            bands,
            tail,
        }
    }

    /// Re-sums the band contributions.
    pub fn resum(&self) -> f64 {
        self.bands.iter().map(|b| b.contribution).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `C_{N,D}(M) = max(N/M, M/N)^D`.
pub fn c_centered(n: f64, d: f64, m: f64) -> f64 {
    (n / m).max(m / n).powf(d)
}

/// `C_{<=N,D}(M) = max(1, M/N)^D`.
pub fn c_below(n: f64, d: f64, m: f64) -> f64 {
    (m / n).max(1.0).powf(d)
}

/// `c^{rho,gamma}_{k,D}(M) = M^rho max(1, M/N^gamma)^D`.
pub fn c_besov(rho: f64, gamma: f64, d: f64, n: f64, m: f64) -> f64 {
    m.powf(rho) * (m / n.powf(gamma)).max(1.0).powf(d)
}

fn column_mass(grid: &Grid, coeffs: &[C64]) -> Vec<f64> {
    let ny = grid.ny();
    let mut col = vec![0.0; ny];
    for row in coeffs.chunks(ny) {
        for (c, v) in col.iter_mut().zip(row) {
            *c += v.norm_sqr();
        }
    }
    let area = grid.area();
    col.iter_mut().for_each(|c| *c *= area);
    col
}

fn pow_col(grid: &Grid, order: f64) -> Vec<f64> {
    grid.eta().iter().map(|&e| bracket_pow(e, order, false)).collect()
}

/// Per-band, per-snapshot values of `||<D_y>^order P_M u(t_i)||` in one inner norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub bands: Vec<f64>,
    pub dt: f64,
    /// `values[b][i]` for band `bands[b]` and snapshot `i`.
    pub values: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

impl BandSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sup` over snapshots `lo..=hi` of band `b`.
    pub fn sup(&self, b: usize, lo: usize, hi: usize) -> f64 {
        self.values[b][lo..=hi].iter().fold(0.0, |m, v| m.max(*v))
    }

    /// Trapezoid `L^p_t` over snapshots `lo..=hi` of band `b`.
    pub fn lp(&self, b: usize, lo: usize, hi: usize, p: f64) -> f64 {
        trapezoid_lp(&self.values[b][lo..=hi], self.dt, p)
    }

    /// Appends per-band values for a new snapshot at the end.
    pub fn push(&mut self, t: f64, per_band: &[f64]) {
        for (v, x) in self.values.iter_mut().zip(per_band) {
            v.push(*x);
        }
        self.times.push(t);
    }

    /// Prepends per-band values for a new snapshot at the start.
    pub fn push_front(&mut self, t: f64, per_band: &[f64]) {
        for (v, x) in self.values.iter_mut().zip(per_band) {
            v.insert(0, *x);
        }
        self.times.insert(0, t);
    }

    pub fn empty(bands: Vec<f64>, dt: f64) -> Self {
        let values = vec![Vec::new(); bands.len()];
        Self {
            bands,
            dt,
            values,
            times: Vec::new(),
        }
    }
}

/// Per-band `L^2` norms of `<D_y>^order P_M` applied to one set of coefficients.
pub fn band_l2(grid: &Grid, coeffs: &[C64], order: f64) -> Vec<f64> {
    let col = column_mass(grid, coeffs);
    let w = pow_col(grid, order);
    grid.dyadic_bands()
        .iter()
        .map(|&m| {
            col.iter()
                .zip(grid.eta())
                .zip(&w)
                .map(|((c, &e), p)| {
                    let s = dyadic_symbol(m, e) * p;
                    c * s * s
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Per-band `L^4_x L^r_y` norms of `<D_y>^order P_M` applied to one set of coefficients.
pub fn band_strichartz(t: &mut Transformer, coeffs: &[C64], order: f64, r: f64) -> Vec<f64> {
    let grid = t.grid().clone();
    let ny = grid.ny();
    let mut mixed = coeffs.to_vec();
    t.inverse_x(&mut mixed);
    let w = pow_col(&grid, order);
    let mut buf = vec![C64::new(0.0, 0.0); mixed.len()];
    grid.dyadic_bands()
        .iter()
        .map(|&m| {
            let sym: Vec<f64> = grid
                .eta()
                .iter()
                .zip(&w)
                .map(|(&e, p)| dyadic_symbol(m, e) * p)
                .collect();
            if sym.iter().all(|s| *s == 0.0) {
                return 0.0;
            }
            for (dst, src) in buf.chunks_mut(ny).zip(mixed.chunks(ny)) {
                for ((d, s), f) in dst.iter_mut().zip(src).zip(&sym) {
                    *d = s * f;
                }
            }
            t.inverse_y(&mut buf);
            mixed_of_rows(&buf, &grid, 4.0, r)
        })
        .collect()
}

/// Band series of `||<D_y>^order P_M u(t)||_{L^2}` over a trajectory.
pub fn l2_series(traj: &Trajectory, order: f64) -> BandSeries {
    let g = traj.grid();
    let bands = g.dyadic_bands();
    let mut s = BandSeries::empty(bands, traj.dt());
    for i in 0..traj.len() {
        let v = band_l2(g, traj.snapshot(i), order);
        s.push(traj.time(i), &v);
    }
    s
}

/// Band series of `||<D_y>^order P_M u(t)||_{L^4_x L^r_y}` over a trajectory.
pub fn strichartz_series(traj: &Trajectory, order: f64, r: f64) -> BandSeries {
    let g = traj.grid();
    let mut t = Transformer::new(g);
    let mut s = BandSeries::empty(g.dyadic_bands(), traj.dt());
    for i in 0..traj.len() {
        let v = band_strichartz(&mut t, traj.snapshot(i), order, r);
        s.push(traj.time(i), &v);
    }
    s
}

/// Inner time norm of a weighted dyadic sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeNorm {
    /// `L^inf_t` (the X norms).
    Sup,
    /// `L^8_t` (the S norms).
    L8,
}

/// Weighted dyadic sum over snapshots `lo..=hi` of a band series.
pub fn weighted_sum(
    label: impl Into<String>,
    series: &BandSeries,
    time: TimeNorm,
    window: (usize, usize),
    weight: impl Fn(f64) -> f64,
) -> NormReport {
    let (lo, hi) = window;
    let bands = series
        .bands
        .iter()
        .enumerate()
        .map(|(b, &m)| {
            let inner = match time {
                TimeNorm::Sup => series.sup(b, lo, hi),
                TimeNorm::L8 => series.lp(b, lo, hi, 8.0),
            };
            let w = weight(m);
            BandEntry {
                m,
                weight: w,
                contribution: w * inner,
            }
        })
        .collect();
    NormReport::from_bands(label.into(), (series.times[lo], series.times[hi]), bands)
}

fn check_scale(grid: &Grid, n: f64) -> Result<()> {
    if !(n >= 1.0) {
        return param(format!("frequency scale {n} must be at least 1"));
    }
    grid.require_eta(n)
}

/// `||u||_{X_{N,D}} = sum_M C_{N,D}(M) ||P_M u||_{L^inf_t L^2}` over the stored interval.
pub fn weighted_x(traj: &Trajectory, n: f64, d: f64) -> Result<NormReport> {
    check_scale(traj.grid(), n)?;
    let s = l2_series(traj, 0.0);
    Ok(weighted_sum(format!("X_{{{n},{d}}}"), &s, TimeNorm::Sup, traj.full_window(), |m| {
        c_centered(n, d, m)
    }))
}

/// `X_{<=N,D}` with weight `C_{<=N,D}`.
pub fn weighted_x_leq(traj: &Trajectory, n: f64, d: f64) -> Result<NormReport> {
    check_scale(traj.grid(), n)?;
    let s = l2_series(traj, 0.0);
    Ok(weighted_sum(format!("X_{{<={n},{d}}}"), &s, TimeNorm::Sup, traj.full_window(), |m| {
        c_below(n, d, m)
    }))
}

/// `S^r_{N,D}` with inner norm `L^8_t L^4_x L^r_y`.
pub fn weighted_s(traj: &Trajectory, n: f64, d: f64, r: f64) -> Result<NormReport> {
    check_scale(traj.grid(), n)?;
    let s = strichartz_series(traj, 0.0, r);
    Ok(weighted_sum(format!("S^{r}_{{{n},{d}}}"), &s, TimeNorm::L8, traj.full_window(), |m| {
        c_centered(n, d, m)
    }))
}

/// `S^r_{<=N,D}`.
pub fn weighted_s_leq(traj: &Trajectory, n: f64, d: f64, r: f64) -> Result<NormReport> {
    check_scale(traj.grid(), n)?;
    let s = strichartz_series(traj, 0.0, r);
    Ok(weighted_sum(format!("S^{r}_{{<={n},{d}}}"), &s, TimeNorm::L8, traj.full_window(), |m| {
        c_below(n, d, m)
    }))
}

/// Recentered pieces around `k`: `Phi(eta - k)` for `M = 1`, `psi((eta - k)/M)` above.
pub fn recentered_symbol(m: f64, k: f64, eta: f64) -> f64 {
    if m <= 1.0 {
        phi_lp(eta - k)
    } else {
        psi_lp((eta - k) / m)
    }
}

/// Recentered bands `1, 2, 4, ..` reaching every grid mode from `k`.
pub fn recentered_bands(grid: &Grid, k: f64) -> Vec<f64> {
    let reach = grid.eta_max() + k.abs();
    let mut out = vec![1.0];
    let mut m = 2.0;
    while m / 2.0 < reach {
        out.push(m);
        m *= 2.0;
    }
    out
}

/// Per-band `||P_{M,k} u||_{L^2}` for one set of coefficients.
pub fn recentered_l2(grid: &Grid, coeffs: &[C64], k: f64) -> Vec<f64> {
    let col = column_mass(grid, coeffs);
    recentered_bands(grid, k)
        .iter()
        .map(|&m| {
            col.iter()
                .zip(grid.eta())
                .map(|(c, &e)| {
                    let s = recentered_symbol(m, k, e);
                    c * s * s
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// `B^{rho,gamma}_{k,D}`: `sum_M M^rho max(1, M/N^gamma)^D ||P_{M,k} u||_{L^inf_t L^2}`.
pub fn besov_recentered(
    traj: &Trajectory,
    k: i64,
    rho: f64,
    gamma: f64,
    d: f64,
    n: f64,
) -> Result<NormReport> {
    let g = traj.grid();
    g.require_eta(k.unsigned_abs() as f64)?;
    let kf = k as f64;
    let bands = recentered_bands(g, kf);
    let mut s = BandSeries::empty(bands, traj.dt());
    for i in 0..traj.len() {
        s.push(traj.time(i), &recentered_l2(g, traj.snapshot(i), kf));
    }
    Ok(weighted_sum(
        format!("B^{{{rho},{gamma}}}_{{{k},{d}}}"),
        &s,
        TimeNorm::Sup,
        traj.full_window(),
        |m| c_besov(rho, gamma, d, n, m),
    ))
}

/// Parameters of the remainder norm `Y^nu_N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YParams {
    pub n: f64,
    pub nu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub d: f64,
}

/// The four terms of `||w||_{Y^nu_N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YNorm {
    pub x_centered: f64,
    pub x_below: f64,
    pub s_centered: f64,
    pub s_below: f64,
}

impl YNorm {
    pub fn total(&self) -> f64 {
        self.x_centered + self.x_below + self.s_centered + self.s_below
    }
}

/// Band data needed for `Y^nu_N`: `<D_y>^nu` in `L^2` and `<D_y>^sigma` in `L^4_x L^inf_y`.
#[derive(Clone, Debug)]
pub struct YSeries {
    pub l2_nu: BandSeries,
    pub st_sigma: BandSeries,
}

impl YSeries {
    pub fn from_trajectory(traj: &Trajectory, nu: f64, sigma: f64) -> Self {
        Self {
            l2_nu: l2_series(traj, nu),
            st_sigma: strichartz_series(traj, sigma, f64::INFINITY),
        }
    }

    pub fn norm(&self, p: &YParams, window: (usize, usize)) -> YNorm {
        let xc = weighted_sum("", &self.l2_nu, TimeNorm::Sup, window, |m| c_centered(p.n, p.alpha, m));
        let xb = weighted_sum("", &self.l2_nu, TimeNorm::Sup, window, |m| c_below(p.n, p.d, m));
        let sc = weighted_sum("", &self.st_sigma, TimeNorm::L8, window, |m| c_centered(p.n, p.alpha, m));
        let sb = weighted_sum("", &self.st_sigma, TimeNorm::L8, window, |m| c_below(p.n, p.d, m));
        YNorm {
            x_centered: xc.value,
            x_below: xb.value,
            s_centered: sc.value,
            s_below: sb.value,
        }
    }
}

/// `||w||_{Y^nu_N}` over the stored interval.
pub fn y_norm(traj: &Trajectory, p: &YParams) -> Result<YNorm> {
    check_scale(traj.grid(), p.n)?;
    Ok(YSeries::from_trajectory(traj, p.nu, p.sigma).norm(p, traj.full_window()))
}

/// Components `(||<D_y>^s u||, ||<D_x>^{2s} u||)` of the anisotropic norm.
pub fn sobolev_components(field: &Field, s: f64, homogeneous: bool) -> (f64, f64) {
    let f = field.fourier();
    let g = f.grid();
    let ny = g.ny();
    let wy: Vec<f64> = g.eta().iter().map(|&e| bracket_pow(e, 2.0 * s, homogeneous)).collect();
    let (mut a, mut b) = (0.0, 0.0);
    for (row, &xi) in f.values().chunks(ny).zip(g.xi()) {
        let wx = bracket_pow(xi, 4.0 * s, homogeneous);
        for (v, w) in row.iter().zip(&wy) {
            let m = v.norm_sqr();
            a += m * w;
            b += m * wx;
        }
    }
    let area = g.area();
    ((a * area).sqrt(), (b * area).sqrt())
}

/// `||u||_{H^s} = ||u||_{L^2_x H^s_y} + ||u||_{H^{2s}_x L^2_y}`.
pub fn sobolev_aniso(field: &Field, s: f64) -> f64 {
    let (a, b) = sobolev_components(field, s, false);
    a + b
}

/// Homogeneous variant with `|D_y|^s` and `|D_x|^{2s}`.
pub fn sobolev_aniso_homogeneous(field: &Field, s: f64) -> f64 {
    let (a, b) = sobolev_components(field, s, true);
    a + b
}

/// `||u||_{L^2}^2`.
pub fn mass(field: &Field) -> f64 {
    field.norm_sqr()
}

/// `H(u) = 1/2 (||d_x u||^2 + || |D_y|^{1/2} u ||^2) + mu/4 ||u||_{L^4}^4`.
pub fn energy(field: &Field, mu: f64) -> f64 {
    let f = field.fourier();
    let g = f.grid();
    let ny = g.ny();
    let mut kin = 0.0;
    for (row, &xi) in f.values().chunks(ny).zip(g.xi()) {
        for (v, &e) in row.iter().zip(g.eta()) {
            kin += v.norm_sqr() * (xi * xi + e.abs());
        }
    }
    kin *= g.area();
    let quartic = if mu == 0.0 {
        0.0
    } else {
        lp_norm(field, 4.0).expect("exponent 4 is valid").powi(4)
    };
    0.5 * kin + 0.25 * mu * quartic
}

/// `||<D_y>^sigma u||_{L^p_t L^q_x L^r_y}` with the trapezoid rule in time.
pub fn mixed_spacetime(traj: &Trajectory, p: f64, q: f64, r: f64, sigma: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(LabError::EmptyTrajectory);
    }
    for e in [p, q, r] {
        if !(e >= 1.0) {
            return param(format!("Lebesgue exponent {e} < 1"));
        }
    }
    let g = traj.grid();
    let mut t = Transformer::new(g);
    let w = pow_col(g, sigma);
    let ny = g.ny();
    let per: Vec<f64> = (0..traj.len())
        .map(|i| {
            let mut v = traj.snapshot(i).to_vec();
            for row in v.chunks_mut(ny) {
                for (x, s) in row.iter_mut().zip(&w) {
                    *x *= s;
                }
            }
            t.inverse(&mut v);
            mixed_of_rows(&v, g, q, r)
        })
        .collect();
    Ok(trapezoid_lp(&per, traj.dt(), p))
}

/// Components of the solution norm `X^{s,sigma}_T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XNorm {
    pub energy_part: f64,
    pub strichartz_part: f64,
}

impl XNorm {
    /// The two parts combined by the maximum.
    pub fn value(&self) -> f64 {
        self.energy_part.max(self.strichartz_part)
    }
}

/// `max(sup_t ||u||_{H^s}, ||<D_y>^sigma u||_{L^8_t L^4_x L^inf_y})`.
pub fn x_solution_norm(traj: &Trajectory, s: f64, sigma: f64) -> Result<XNorm> {
    let energy_part = (0..traj.len())
        .map(|i| sobolev_aniso(&traj.field(i), s))
        .fold(0.0, f64::max);
    let strichartz_part = mixed_spacetime(traj, 8.0, 4.0, f64::INFINITY, sigma)?;
    Ok(XNorm {
        energy_part,
        strichartz_part,
    })
}

/// Fraction of `sup_t` mass outside the band `lo <= |eta| <= hi`.
pub fn off_band_fraction(traj: &Trajectory, lo: f64, hi: f64) -> f64 {
    let g = traj.grid();
    let mut worst: f64 = 0.0;
    for i in 0..traj.len() {
        let col = column_mass(g, traj.snapshot(i));
        let total: f64 = col.iter().sum();
        if total == 0.0 {
            continue;
        }
        let off: f64 = col
            .iter()
            .zip(g.eta())
            .filter(|(_, &e)| e.abs() < lo || e.abs() > hi)
            .map(|(c, _)| c)
            .sum();
        worst = worst.max(off / total);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{free_flow, project_dyadic, MultiplierOp};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 512, 8.0, 16.0 * PI).unwrap()
    }

    fn bump(g: &Grid) -> Field {
        Field::from_fn(g, |x, y| C64::new((-x * x - 0.3 * y * y).exp(), 0.2 * (-x * x - y * y).exp()))
    }

    #[test]
    fn sobolev_trivial_cases() {
        let g = grid();
        let u = bump(&g);
        // both components equal the L^2 norm at s = 0, and the norm is their sum
        assert!((sobolev_aniso(&u, 0.0) - 2.0 * u.l2_norm()).abs() < 1e-12);
        let (xi, eta) = (g.xi()[3], g.eta()[7]);
        let a = 0.7;
        let w = Field::from_fn(&g, |x, y| C64::from_polar(a, xi * x + eta * y));
        let s = 0.3;
        let mass = w.l2_norm();
        let expect = (1.0 + eta * eta).powf(s / 2.0) * mass + (1.0 + xi * xi).powf(s) * mass;
        assert!((sobolev_aniso(&w, s) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn homogeneous_quarter_norm_is_scale_invariant() {
        let g = Grid::for_profiles(256, 512, 16.0, 16.0).unwrap();
        let u = |lam: f64| {
            Field::from_fn(&g, move |x, y| {
                let (x, y) = (lam * x, lam * lam * y);
                C64::new(lam * x * y * (-x * x - y * y).exp(), 0.0)
            })
        };
        let a = sobolev_aniso_homogeneous(&u(1.0), 0.25);
        let b = sobolev_aniso_homogeneous(&u(2.0), 0.25);
        assert!((a - b).abs() < 1e-3 * a, "{a} {b}");
    }

    #[test]
    fn plane_wave_mass_and_energy() {
        let g = grid();
        let (xi, eta, a, mu) = (g.xi()[2], g.eta()[9], 0.4, -1.3);
        let w = Field::from_fn(&g, |x, y| C64::from_polar(a, xi * x + eta * y));
        let q = g.area();
        assert!((mass(&w) - a * a * q).abs() < 1e-12 * q);
        let expect = 0.5 * a * a * q * (xi * xi + eta.abs()) + 0.25 * mu * a.powi(4) * q;
        assert!((energy(&w, mu) - expect).abs() < 1e-12 * expect.abs());
        assert_eq!(energy(&Field::zeros(&g, crate::Repr::Physical), 1.0), 0.0);
    }

    #[test]
    fn gaussian_energy_matches_refined_grid() {
        let f = |x: f64, y: f64| C64::new((-x * x - 0.5 * y * y).exp(), 0.0);
        let coarse = Field::from_fn(&Grid::new(32, 512, 12.0, 16.0 * PI).unwrap(), f);
        let fine = Field::from_fn(&Grid::new(64, 1024, 12.0, 16.0 * PI).unwrap(), f);
        let (a, b) = (energy(&coarse, 1.0), energy(&fine, 1.0));
        assert!((a - b).abs() < 1e-8 * b, "{a} {b}");
    }

    #[test]
    fn mixed_spacetime_of_stationary_field() {
        let g = grid();
        let u = bump(&g);
        let traj = Trajectory::stationary(&u, 1.0 / 64.0, 64);
        let spatial = crate::grid::mixed_xy_norm(&u, 4.0, f64::INFINITY).unwrap();
        let v = mixed_spacetime(&traj, 8.0, 4.0, f64::INFINITY, 0.0).unwrap();
        assert!((v - 2f64.powf(0.125) * spatial).abs() < 1e-12 * spatial);
        let l2 = mixed_spacetime(&traj, 2.0, 2.0, 2.0, 0.0).unwrap();
        assert!((l2 - (2.0 * mass(&u)).sqrt()).abs() < 1e-12 * l2);
    }

    #[test]
    fn weighted_x_weights_single_band() {
        let g = grid();
        // psi(eta/8) equals one only on |eta| = 8
        let band = MultiplierOp::eta_real("", |e| if e.abs() == 8.0 { 1.0 } else { 0.0 }).apply(&bump(&g));
        let traj = Trajectory::stationary(&band, 0.1, 2);
        let x = weighted_x(&traj, 8.0, 2.0).unwrap();
        assert!((x.value - band.l2_norm()).abs() < 1e-12 * x.value);
        let x4 = weighted_x(&traj, 4.0, 2.0).unwrap();
        assert!((x4.value - 4.0 * band.l2_norm()).abs() < 1e-12 * x4.value);
        assert!((x.resum() - x.value).abs() < 1e-12 * x.value);
        assert!(weighted_x(&traj, 1024.0, 1.0).is_err());
        let json = x.to_json();
        assert!(json.contains("\"bands\"") && json.contains("\"M\""));
    }

    #[test]
    fn besov_of_unit_block() {
        let g = grid();
        let u = crate::multipliers::project_unit(&bump(&g), 6).unwrap();
        let traj = Trajectory::stationary(&u, 0.1, 1);
        let b = besov_recentered(&traj, 6, 0.07, 0.73, 2.0, 32.0).unwrap();
        assert!((b.value - u.l2_norm()).abs() < 1e-12 * b.value);
        assert_eq!(b.bands.iter().filter(|e| e.contribution > 0.0).count(), 1);
    }

    #[test]
    fn y_norm_of_constant_band() {
        let g = grid();
        let u = MultiplierOp::eta_real("", |e| if e.abs() == 4.0 { 1.0 } else { 0.0 }).apply(&bump(&g));
        let traj = Trajectory::stationary(&u, 0.05, 4);
        let p = YParams {
            n: 8.0,
            nu: 0.6,
            sigma: 0.07,
            alpha: 0.5,
            d: 0.6,
        };
        let y = y_norm(&traj, &p).unwrap();
        let l2 = band_l2(&g, traj.snapshot(0), 0.6)[2];
        let mut tt = Transformer::new(&g);
        let st = band_strichartz(&mut tt, traj.snapshot(0), 0.07, f64::INFINITY)[2] * 0.4f64.powf(0.125);
        let expect = 2f64.powf(0.5) * l2 + l2 + 2f64.powf(0.5) * st + st;
        assert!((y.total() - expect).abs() < 1e-12 * expect);
        let z = Trajectory::stationary(&Field::zeros(&g, crate::Repr::Fourier), 0.05, 2);
        assert_eq!(y_norm(&z, &p).unwrap().total(), 0.0);
    }

    #[test]
    fn norms_are_homogeneous() {
        let g = grid();
        let u = bump(&g);
        let traj = Trajectory::stationary(&u, 0.05, 3);
        let lam = C64::new(-2.5, 1.0);
        let t2 = traj.scale(lam);
        let a = weighted_s(&traj, 4.0, 1.0, f64::INFINITY).unwrap().value;
        let b = weighted_s(&t2, 4.0, 1.0, f64::INFINITY).unwrap().value;
        assert!((b - lam.norm() * a).abs() < 1e-12 * b);
        assert!((sobolev_aniso(&u.scale(lam), 0.4) - lam.norm() * sobolev_aniso(&u, 0.4)).abs() < 1e-12);
    }

    #[test]
    fn strichartz_series_matches_direct_projection() {
        let g = grid();
        let u = bump(&g);
        let mut t = Transformer::new(&g);
        let v = band_strichartz(&mut t, u.fourier().values(), 0.3, f64::INFINITY);
        let direct = crate::multipliers::fractional_y(&project_dyadic(&u, 4.0).unwrap(), 0.3, false);
        let d = crate::grid::mixed_xy_norm(&direct, 4.0, f64::INFINITY).unwrap();
        assert!((v[2] - d).abs() < 1e-12 * d);
    }

    #[test]
    fn bernstein_strichartz_audit() {
        // free flow of data band-limited to |eta| in [16, 32]: ratio to |E|^{1/2} ||f||
        let g = grid();
        let e_len: f64 = 2.0 * 16.0;
        let mut worst: f64 = 0.0;
        for seed in 0..50u64 {
            let spec = crate::random_data::RandomSpec::symmetric(seed, 31);
            let f = crate::random_data::randomize_where(&bump(&g), &spec, |k| (17..=31).contains(&k.abs()))
                .unwrap();
            let snaps: Vec<Vec<C64>> = (0..=64)
                .map(|i| free_flow(&f, -0.5 + i as f64 / 64.0).into_values())
                .collect();
            let traj = Trajectory::new(&g, 1.0 / 64.0, 32, snaps).unwrap();
            let lhs = mixed_spacetime(&traj, 8.0, 4.0, f64::INFINITY, 0.0).unwrap();
            worst = worst.max(lhs / (e_len.sqrt() * f.l2_norm()));
        }
        assert!(worst <= 1.1, "{worst}");
    }

    #[test]
    fn y_norm_is_monotone_in_interval() {
        let g = grid();
        let f = bump(&g);
        let snaps: Vec<Vec<C64>> = (0..=20)
            .map(|i| free_flow(&f, (i as f64 - 10.0) * 0.02).scale(C64::new(1.0 + 0.1 * i as f64, 0.0)).into_values())
            .collect();
        let traj = Trajectory::new(&g, 0.02, 10, snaps).unwrap();
        let ys = YSeries::from_trajectory(&traj, 0.6, 0.07);
        let p = YParams {
            n: 8.0,
            nu: 0.6,
            sigma: 0.07,
            alpha: 0.5,
            d: 0.6,
        };
        let mut prev = 0.0;
        for j in 0..=10 {
            let v = ys.norm(&p, traj.window(j)).total();
            assert!(v >= prev);
            prev = v;
        }
    }
}
