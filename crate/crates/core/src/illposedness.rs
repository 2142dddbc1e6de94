//! Ill-posedness experiments: the Hardy-class profiles `K_rho(y) = 1/(y + i rho)`
//! that break the `L^4` Strichartz bound below regularity 1/2, and norm inflation by
//! concentrated ODE profiles below 1/4 together with multi-bubble data.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{param, LabError, Result};
use crate::evolve::{solve_nls_final, NlsConfig};
use crate::grid::{signed_index, Field, Grid, Repr, Transformer};
use crate::multipliers::flow_table;
use crate::norms::{sobolev_aniso, sobolev_components};
use crate::numerics::{loglog_slope, tanh_sinh, trapezoid_lp};
use crate::C64;

/// `K_rho` made periodic on a box of length `period`: `sum_m 1/(y + m L + i rho)`,
/// which is `(pi/L) cot(pi (y + i rho)/L)`. Its coefficients vanish for `eta < 0`.
pub fn k_rho(y: f64, rho: f64, period: f64) -> C64 {
    let z = C64::new(y, rho) * (PI / period);
    (PI / period) / z.tan()
}

/// Gaussian factor in `x`.
pub fn gaussian_x(x: f64) -> f64 {
    (-0.5 * x * x).exp()
}

fn check_rho(rho: f64, dy: f64) -> Result<()> {
    if !(rho >= 8.0 * dy) {
        return Err(LabError::Nyquist {
            needed: 8.0 / rho,
            nyquist: 1.0 / dy,
        });
    }
    Ok(())
}

/// `G(x) K_rho(y)` sampled on the grid.
pub fn k_rho_field(grid: &Grid, rho: f64) -> Result<Field> {
    check_rho(rho, grid.dy())?;
    let ly = grid.ly();
    let ky: Vec<C64> = grid.y().iter().map(|&y| k_rho(y, rho, ly)).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid.x() {
        let g = gaussian_x(x);
        values.extend(ky.iter().map(|k| k * g));
    }
    Field::from_values(grid, values, Repr::Physical)
}

/// Share of `||f||^2` carried by negative `eta`.
pub fn negative_eta_fraction(field: &Field) -> f64 {
    let f = field.fourier();
    let eta = f.grid().eta();
    let ny = f.grid().ny();
    let (mut neg, mut all) = (0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        let m = v.norm_sqr();
        all += m;
        if eta[i % ny] < 0.0 {
            neg += m;
        }
    }
    neg / all
}

/// Max over the grid of `|e^{-it|D_y|} f - G(x) K_rho(y - t)|`, relative to `max |f|`.
pub fn hardy_translation_defect(grid: &Grid, rho: f64, t: f64) -> Result<f64> {
    let f = k_rho_field(grid, rho)?;
    let moved = crate::multipliers::half_wave_flow(&f, t).physical();
    let ly = grid.ly();
    let ny = grid.ny();
    let exact: Vec<C64> = grid.y().iter().map(|&y| k_rho(y - t, rho, ly)).collect();
    let mut err: f64 = 0.0;
    for (i, v) in moved.values().iter().enumerate() {
        let g = gaussian_x(grid.x()[i / ny]);
        err = err.max((v - exact[i % ny] * g).norm());
    }
    let top = f.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    Ok(err / top)
}

/// One-dimensional norms of the periodic `K_rho` on `ny` points of a box of length `ly`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRhoNorms {
    pub rho: f64,
    /// `||K||_{L^2}^2`
    pub l2_sq: f64,
    /// `||K||_{L^4}^4`
    pub l4_4: f64,
}

impl KRhoNorms {
    pub const CSV_HEADER: &'static str = "rho,l2_sq,l4_4";

    pub fn csv(&self) -> String {
        format!("{:?},{:?},{:?}", self.rho, self.l2_sq, self.l4_4)
    }
}

fn k_rho_samples(ny: usize, ly: f64, rho: f64) -> Result<Vec<C64>> {
    if !ny.is_power_of_two() || ny < 2 {
        return Err(LabError::GridSize(ny));
    }
    let dy = ly / ny as f64;
    check_rho(rho, dy)?;
    Ok((0..ny).map(|m| k_rho(-ly / 2.0 + m as f64 * dy, rho, ly)).collect())
}

pub fn k_rho_norms(ny: usize, ly: f64, rho: f64) -> Result<KRhoNorms> {
    let k = k_rho_samples(ny, ly, rho)?;
    let dy = ly / ny as f64;
    Ok(KRhoNorms {
        rho,
        l2_sq: k.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy,
        l4_4: k.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * dy,
    })
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return param(format!("s={s} must lie in (0, 1)"));
    }
    Ok(())
}

/// `||K_rho||^2_{\dot H^{s/2}}` from the `|eta|^s`-weighted spectrum of the periodic profile.
pub fn k_rho_sobolev_spectral(ny: usize, ly: f64, rho: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    let mut k = k_rho_samples(ny, ly, rho)?;
    FftPlanner::new().plan_fft_forward(ny).process(&mut k);
    let inv = 1.0 / ny as f64;
    Ok(k
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let eta = 2.0 * PI * signed_index(j, ny) as f64 / ly;
            eta.abs().powf(s) * c.norm_sqr() * inv * inv
        })
        .sum::<f64>()
        * ly)
}

/// `int |e^{iu} - 1|^2 |u|^{-1-s} du`, the constant linking the difference-quotient
/// seminorm to `|| |D|^{s/2} f ||^2`.
fn gagliardo_constant(s: f64) -> f64 {
    4.0 * gamma(1.0 - s) * (0.5 * PI * s).cos() / s
}

/// `int int |v|^{1-s} / (((u+v)^2 + 1)(u^2 + 1)) du dv`. With `u = tan a`, `u + v = tan b`
/// this is `2 int_{b > a} (sin(b - a) / (cos a cos b))^{1-s}` over the square.
fn difference_integral(s: f64) -> f64 {
    let h = 0.5 * PI;
    let outer = |_b: f64, db_lo: f64, db_hi: f64| -> f64 {
        let cos_b = if db_lo < db_hi { db_lo.sin() } else { db_hi.sin() };
        let b_span = db_lo;
        tanh_sinh(
            |_a, da, dab| {
                let cos_a = da.sin();
                (dab.sin() / (cos_a * cos_b)).powf(1.0 - s)
            },
            0.0,
            b_span,
            1e-8,
        )
    };
    2.0 * tanh_sinh(outer, -h, h, 1e-7)
}

/// `||K_rho||^2_{\dot H^{s/2}}` on the line, from the double difference-quotient integral:
/// `rho^{-1-s} I(s) / C(s)`.
pub fn k_rho_sobolev(rho: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    if !(rho > 0.0) {
        return param(format!("rho={rho} must be positive"));
    }
    Ok(rho.powf(-1.0 - s) * difference_integral(s) / gagliardo_constant(s))
}

/// `(int_0^1 ||e^{itA} f||_{L^4}^4 dt)^{1/4}` from `n_t + 1` equally spaced samples.
pub fn l4_space_time(field: &Field, n_t: usize) -> Result<f64> {
    if n_t < 64 {
        return param(format!("time quadrature needs at least 64 steps, got {n_t}"));
    }
    let grid = field.grid().clone();
    let coeffs = field.fourier().into_values();
    let dt = 1.0 / n_t as f64;
    let q: Vec<f64> = (0..=n_t)
        .into_par_iter()
        .map_init(
            || Transformer::new(&grid),
            |tr, i| {
                let table = flow_table(&grid, i as f64 * dt);
                let mut u: Vec<C64> = coeffs.iter().zip(&table).map(|(c, e)| c * e).collect();
                tr.inverse(&mut u);
                u.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * grid.cell_area()
            },
        )
        .collect();
    let q4: Vec<f64> = q.iter().map(|v| v.powf(0.25)).collect();
    Ok(trapezoid_lp(&q4, dt, 4.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub rho: f64,
    pub numerator: f64,
    /// `|| |D_y|^{s/2} f ||`
    pub y_part: f64,
    /// `|| |D_x|^{s} f ||`
    pub x_part: f64,
    /// Numerator over the larger part.
    pub ratio: f64,
    /// Numerator over the sum of the parts.
    pub ratio_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzFailure {
    pub s: f64,
    pub rows: Vec<FailureRow>,
    /// Slope of `log ratio` against `log(1/rho)`.
    pub slope: f64,
    pub slope_sum: f64,
    /// `1/4 - s/2`
    pub theory: f64,
}

impl StrichartzFailure {
    pub const CSV_HEADER: &'static str = "s,rho,numerator,y_part,x_part,ratio,ratio_sum";

    pub fn csv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out += &format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                self.s, r.rho, r.numerator, r.y_part, r.x_part, r.ratio, r.ratio_sum
            );
        }
        out
    }

    /// Whether the ratio grows strictly as `rho` decreases.
    pub fn ratio_increasing(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| b.rho.total_cmp(&a.rho));
        rows.windows(2).all(|w| w[1].ratio > w[0].ratio)
    }
}

/// Ratio of `||e^{itA}(G K_rho)||_{L^4([0,1] x box)}` to the homogeneous anisotropic norm
/// of order `s/2`, for every `s` in `ss`, over the given `rho`. The numerator is shared
/// between the `s` values.
pub fn strichartz_failure(grid: &Grid, rhos: &[f64], ss: &[f64], n_t: usize) -> Result<Vec<StrichartzFailure>> {
    if rhos.len() < 2 {
        return param("need at least two rho values");
    }
    for &s in ss {
        check_s(s)?;
    }
    let mut fields = Vec::with_capacity(rhos.len());
    let mut numerators = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let f = k_rho_field(grid, rho)?;
        numerators.push(l4_space_time(&f, n_t)?);
        fields.push(f);
    }
    let mut out = Vec::with_capacity(ss.len());
    for &s in ss {
        let rows: Vec<FailureRow> = rhos
            .iter()
            .zip(&fields)
            .zip(&numerators)
            .map(|((&rho, f), &num)| {
                let (y_part, x_part) = sobolev_components(f, 0.5 * s, true);
                FailureRow {
                    rho,
                    numerator: num,
                    y_part,
                    x_part,
                    ratio: num / y_part.max(x_part),
                    ratio_sum: num / (y_part + x_part),
                }
            })
            .collect();
        let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.rho).collect();
        let slope = loglog_slope(&inv, &rows.iter().map(|r| r.ratio).collect::<Vec<_>>());
        let slope_sum = loglog_slope(&inv, &rows.iter().map(|r| r.ratio_sum).collect::<Vec<_>>());
        out.push(StrichartzFailure {
            s,
            rows,
            slope,
            slope_sum,
            theory: 0.25 - 0.5 * s,
        });
    }
    Ok(out)
}

/// Scales of the inflation profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationSchedule {
    pub ns: Vec<f64>,
    pub gamma_infl: f64,
    pub beta: f64,
    pub s: f64,
}

impl InflationSchedule {
    pub fn new(ns: Vec<f64>, gamma_infl: f64, beta: f64, s: f64) -> Result<Self> {
        if !(gamma_infl > 0.0 && gamma_infl < beta && beta < 1.0) {
            return param(format!("need 0 < gamma={gamma_infl} < beta={beta} < 1"));
        }
        if !(s > 0.0 && s < 0.25) {
            return param(format!("inflation needs 0 < s={s} < 1/4"));
        }
        if ns.is_empty() || ns.iter().any(|n| !(*n > 1.0)) {
            return param("scales must exceed 1");
        }
        let out = Self {
            ns,
            gamma_infl,
            beta,
            s,
        };
        for &n in &out.ns {
            let d = out.t(n) * out.lambda(n).powi(2);
            if (d / out.driver(n) - 1.0).abs() > 1e-12 {
                return Err(LabError::Invariant(format!("t lambda^2 = {d} at n={n}")));
            }
        }
        Ok(out)
    }

    /// `log(n)^{-gamma}`
    pub fn kappa(&self, n: f64) -> f64 {
        n.ln().powf(-self.gamma_infl)
    }
    /// `kappa n^{3/2 - 2s}`
    pub fn lambda(&self, n: f64) -> f64 {
        self.kappa(n) * n.powf(1.5 - 2.0 * self.s)
    }
    /// `log(n)^{2 beta} n^{2(2s - 3/2)}`
    pub fn t(&self, n: f64) -> f64 {
        n.ln().powf(2.0 * self.beta) * n.powf(2.0 * (2.0 * self.s - 1.5))
    }
    pub fn eps(&self, n: f64) -> f64 {
        1.0 / (100.0 * n)
    }
    /// `t lambda^2 = log(n)^{2(beta - gamma)}`
    pub fn driver(&self, n: f64) -> f64 {
        n.ln().powf(2.0 * (self.beta - self.gamma_infl))
    }
}

/// Radial bump `exp(1 - 1/(1 - r^2))` on the unit ball, with maximum 1 at the origin.
pub fn bump(r: f64) -> f64 {
    bump_gap(r, 1.0 - r)
}

/// The bump given `r` and `1 - r` separately, accurate near the rim.
fn bump_gap(r: f64, gap: f64) -> f64 {
    if gap <= 0.0 || r < 0.0 {
        return 0.0;
    }
    (1.0 - 1.0 / (gap * (1.0 + r))).exp()
}

/// Radial mollifier `c bump(r / R)` of unit mass, with `R = 1/100`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    pub radius: f64,
    pub height: f64,
    /// `int r^{2j} rho` for `j = 0, 1, ..`, normalized so the first entry is 1.
    moments: Vec<f64>,
}

const MOMENTS: usize = 24;

impl Default for Mollifier {
    fn default() -> Self {
        Self::new(0.01)
    }
}

impl Mollifier {
    pub fn new(radius: f64) -> Self {
        let radial = |p: i32| tanh_sinh(|u, _, gap| bump_gap(u, gap) * u.powi(p), 0.0, 1.0, 1e-14);
        let base = radial(1);
        let moments = (0..MOMENTS as i32)
            .map(|j| radius.powi(2 * j) * radial(2 * j + 1) / base)
            .collect();
        Self {
            radius,
            height: 1.0 / (2.0 * PI * radius * radius * base),
            moments,
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.height * bump((x * x + y * y).sqrt() / self.radius)
    }

    /// Fourier transform at wavenumber `k`, from the power series of `J_0`.
    pub fn symbol(&self, k: f64) -> f64 {
        let q = 0.25 * k * k;
        let mut term = 1.0;
        let mut sum = 0.0;
        for (j, m) in self.moments.iter().enumerate() {
            if j > 0 {
                term *= -q / (j * j) as f64;
            }
            sum += term * m;
        }
        sum
    }

    /// `int int eps^{-3} rho(x/eps, y/eps^2) dx dy` by direct quadrature over the support.
    pub fn scaled_mass(&self, eps: f64) -> f64 {
        let (ax, ay) = (self.radius * eps, self.radius * eps * eps);
        let scale = eps.powi(-3);
        tanh_sinh(
            |x, dl, dr| {
                let gap = dl.min(dr) * (2.0 * ax - dl.min(dr));
                let half = ay * (gap.max(0.0)).sqrt() / ax;
                if half <= 0.0 {
                    return 0.0;
                }
                tanh_sinh(|y, _, _| scale * self.value(x / eps, y / (eps * eps)), -half, half, 1e-13)
            },
            -ax,
            ax,
            1e-13,
        )
    }

    /// `rho_eps * f` with `rho_eps(x, y) = eps^{-3} rho(x/eps, y/eps^2)`.
    pub fn apply(&self, field: &Field, eps: f64) -> Field {
        let mut f = field.fourier();
        let grid = f.grid().clone();
        let ny = grid.ny();
        let sy: Vec<f64> = grid.eta().iter().map(|e| (eps * eps * e).powi(2)).collect();
        for (row, &xi) in f.values_mut().chunks_mut(ny).zip(grid.xi()) {
            let sx = (eps * xi).powi(2);
            for (v, w) in row.iter_mut().zip(&sy) {
                *v *= self.symbol((sx + w).sqrt());
            }
        }
        f
    }
}

/// Largest `|d/dr bump(r)^2|`, rounded up.
const GRADIENT_BOUND: f64 = 2.0;

/// Checks that `lambda bump(n (x - cx), n^2 (y - cy))` and its phase at time `t_n` are
/// resolved and fit in the box.
fn check_profile(grid: &Grid, sched: &InflationSchedule, n: f64, center: (f64, f64)) -> Result<()> {
    let under = |what: &str| -> Result<()> {
        Err(LabError::Parameter(format!("scale n={n} is not resolved: {what}")))
    };
    if grid.dx() > 1.0 / (8.0 * n) || grid.dy() > 1.0 / (8.0 * n * n) {
        return under("bump width");
    }
    if center.0.abs() + 1.0 / n > 0.5 * grid.lx() || center.1.abs() + 1.0 / (n * n) > 0.5 * grid.ly() {
        return under("bump leaves the box");
    }
    let phase = 2.0 * GRADIENT_BOUND * sched.driver(n);
    if phase * n > grid.xi_max() || phase * n * n > grid.eta_max() {
        return under("phase gradient at t_n");
    }
    Ok(())
}

/// `lambda_n bump(n (x - cx), n^2 (y - cy))`, not yet mollified.
pub fn inflation_bubble(grid: &Grid, sched: &InflationSchedule, n: f64, center: (f64, f64)) -> Result<Field> {
    check_profile(grid, sched, n, center)?;
    let lam = sched.lambda(n);
    Ok(Field::from_fn(grid, |x, y| {
        let (a, b) = (n * (x - center.0), n * n * (y - center.1));
        C64::new(lam * bump((a * a + b * b).sqrt()), 0.0)
    }))
}

/// The mollified datum `rho_{eps_n} * v_n(0)` centered at the origin.
pub fn inflation_datum(grid: &Grid, sched: &InflationSchedule, mol: &Mollifier, n: f64) -> Result<Field> {
    let v = inflation_bubble(grid, sched, n, (0.0, 0.0))?;
    Ok(mol.apply(&v, sched.eps(n)).physical())
}

/// The exact solution of `i v' = mu |v|^2 v` with datum `v0`: `v0 e^{-i mu t |v0|^2}`.
pub fn ode_profile(v0: &Field, t: f64, mu: f64) -> Field {
    let mut v = v0.physical();
    for z in v.values_mut() {
        *z *= C64::from_polar(1.0, -mu * t * z.norm_sqr());
    }
    v
}

/// Max over the grid of `|v(t + h) - v(t) e^{-i mu h |v(t)|^2}|` for the ODE profile:
/// the discrete group-law check that `V(t) = e^{-i mu t}` solves `i V' = mu |V|^2 V`.
pub fn ode_flow_defect(v0: &Field, t: f64, h: f64, mu: f64) -> f64 {
    let a = ode_profile(v0, t, mu);
    let b = ode_profile(v0, t + h, mu);
    let step = ode_profile(&a, h, mu);
    step.max_abs_diff(&b).unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationConfig {
    pub mu: f64,
    /// Splitting steps for the PDE comparison; `None` skips the PDE run.
    pub pde_steps: Option<usize>,
}

impl Default for InflationConfig {
    fn default() -> Self {
        Self {
            mu: -1.0,
            pde_steps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationRow {
    pub n: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub t_n: f64,
    pub eps: f64,
    pub driver: f64,
    /// Anisotropic norm of order `s` at time 0 and `t_n`.
    pub norm0: f64,
    pub norm_tn: f64,
    pub growth: f64,
    /// `||v(t_n)||_{L^2_x H^s_y} / (kappa (lambda^2 t_n)^s)`
    pub lower_ratio: f64,
    pub mass0: f64,
    pub mass_tn: f64,
    /// Relative `L^2` distance between the PDE solution and the ODE profile at `t_n`.
    pub ode_pde_gap: Option<f64>,
}

impl InflationRow {
    pub const CSV_HEADER: &'static str =
        "n,kappa,lambda,t_n,norm0,norm_tn,ode_pde_gap,eps,driver,growth,lower_ratio,mass0,mass_tn";

    pub fn csv(&self) -> String {
        let gap = self.ode_pde_gap.map_or(String::from("nan"), |g| format!("{g:?}"));
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.n,
            self.kappa,
            self.lambda,
            self.t_n,
            self.norm0,
            self.norm_tn,
            gap,
            self.eps,
            self.driver,
            self.growth,
            self.lower_ratio,
            self.mass0,
            self.mass_tn
        )
    }
}

/// Builds each mollified profile, evolves it by the exact ODE to `t_n` and measures the
/// anisotropic norms; optionally compares with the full flow.
pub fn inflation_run(sched: &InflationSchedule, grid: &Grid, cfg: &InflationConfig) -> Result<Vec<InflationRow>> {
    let mol = Mollifier::default();
    for &n in &sched.ns {
        check_profile(grid, sched, n, (0.0, 0.0))?;
    }
    sched
        .ns
        .par_iter()
        .map(|&n| {
            let s = sched.s;
            let v0 = inflation_datum(grid, sched, &mol, n)?;
            let t_n = sched.t(n);
            let vt = ode_profile(&v0, t_n, cfg.mu);
            let norm0 = sobolev_aniso(&v0, s);
            let norm_tn = sobolev_aniso(&vt, s);
            let (y_part, _) = sobolev_components(&vt, s, false);
            let kappa = sched.kappa(n);
            let ode_pde_gap = match cfg.pde_steps {
                Some(steps) if steps > 0 => {
                    let nls = NlsConfig {
                        mu: cfg.mu,
                        ..NlsConfig::default()
                    };
                    let (u, _) = solve_nls_final(&v0, t_n, t_n / steps as f64, &nls)?;
                    Some(u.sub(&vt.fourier())?.l2_norm() / vt.l2_norm())
                }
                _ => None,
            };
            Ok(InflationRow {
                n,
                kappa,
                lambda: sched.lambda(n),
                t_n,
                eps: sched.eps(n),
                driver: sched.driver(n),
                norm0,
                norm_tn,
                growth: norm_tn / norm0,
                lower_ratio: y_part / (kappa * sched.driver(n).powf(s)),
                mass0: v0.norm_sqr(),
                mass_tn: vt.norm_sqr(),
                ode_pde_gap,
            })
        })
        .collect()
}

/// A bubble of the multi-scale datum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub k: u32,
    pub n: f64,
    pub center: (f64, f64),
    /// Half-widths `(1/n, 1/n^2)` of the support.
    pub radii: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct Tanghuru {
    pub field: Field,
    pub bubbles: Vec<Bubble>,
    /// `(i, j, gap)`: distance between the support boxes of bubbles `i` and `j`.
    pub separations: Vec<(usize, usize, f64)>,
}

/// Largest number of bubbles at desk scale.
pub const MAX_BUBBLES: usize = 3;

fn box_gap(a: &Bubble, b: &Bubble, pad: (f64, f64)) -> f64 {
    let gx = (a.center.0 - b.center.0).abs() - a.radii.0 - b.radii.0 - 2.0 * pad.0;
    let gy = (a.center.1 - b.center.1).abs() - a.radii.1 - b.radii.1 - 2.0 * pad.1;
    gx.max(gy)
}

/// `u0 + sum_k v_{n_k}(x - x_k, y - y_k)` for bubbles labelled `k1, k1 + 1, ..`. Supports
/// must stay disjoint, including after mollification at the coarsest scale.
pub fn tanghuru_build(
    k1: u32,
    sched: &InflationSchedule,
    centers: &[(f64, f64)],
    ns: &[f64],
    u0: &Field,
) -> Result<Tanghuru> {
    let count = centers.len();
    if count == 0 || count > MAX_BUBBLES || ns.len() != count {
        return param(format!(
            "need between 1 and {MAX_BUBBLES} bubbles with one scale each, got {count} centers and {} scales",
            ns.len()
        ));
    }
    let grid = u0.grid();
    let bubbles: Vec<Bubble> = centers
        .iter()
        .zip(ns)
        .enumerate()
        .map(|(i, (&center, &n))| Bubble {
            k: k1 + i as u32,
            n,
            center,
            radii: (1.0 / n, 1.0 / (n * n)),
        })
        .collect();
    let mol = Mollifier::default();
    let coarse = ns.iter().map(|&n| sched.eps(n)).fold(0.0f64, f64::max);
    let pad = (mol.radius * coarse, mol.radius * coarse * coarse);
    let mut separations = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            let gap = box_gap(&bubbles[i], &bubbles[j], pad);
            if !(gap > 0.0) {
                return Err(LabError::Overlap(format!("bubbles {} and {}", bubbles[i].k, bubbles[j].k)));
            }
            separations.push((i, j, gap));
        }
    }
    let mut field = u0.physical();
    let mut owner = vec![usize::MAX; grid.len()];
    for (i, b) in bubbles.iter().enumerate() {
        let v = inflation_bubble(grid, sched, b.n, b.center)?;
        for ((acc, add), o) in field.values_mut().iter_mut().zip(v.values()).zip(owner.iter_mut()) {
            if add.norm() > 0.0 {
                if *o != usize::MAX {
                    return Err(LabError::Overlap(format!("bubbles {} and {} share grid points", *o, i)));
                }
                *o = i;
                *acc += add;
            }
        }
    }
    Ok(Tanghuru {
        field,
        bubbles,
        separations,
    })
}

/// `||rho_{eps_{n_k}} * v_{0,l}||_{L^2}` for the bubbles `l >= k` (indices into `bubbles`).
pub fn mollified_tail(grid: &Grid, sched: &InflationSchedule, bubbles: &[Bubble], k: usize) -> Result<Vec<f64>> {
    let mol = Mollifier::default();
    let eps = sched.eps(bubbles[k].n);
    bubbles[k..]
        .iter()
        .map(|b| Ok(mol.apply(&inflation_bubble(grid, sched, b.n, b.center)?, eps).l2_norm()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::half_wave_flow;

    fn oracle_sobolev(rho: f64, s: f64) -> f64 {
        // |hat K(eta)| = 2 pi e^{-rho eta} on eta > 0
        2.0 * PI * gamma(1.0 + s) / (2.0 * rho).powf(1.0 + s)
    }

    #[test]
    fn line_norms_and_scaling() {
        let l4_line = 2.0 * tanh_sinh(|v, _, _| 1.0 / (1.0 + v * v).powi(2), 0.0, 1e4, 1e-12);
        assert!((l4_line - 0.5 * PI).abs() < 1e-6);
        let mut prev: Option<KRhoNorms> = None;
        for rho in [0.2, 0.1, 0.05] {
            let k = k_rho_norms(1 << 18, 1024.0, rho).unwrap();
            assert!((k.l2_sq * rho / PI - 1.0).abs() < 5e-3, "{k:?}");
            assert!((k.l4_4 * rho.powi(3) / l4_line - 1.0).abs() < 5e-3, "{k:?}");
            if let Some(p) = prev {
                assert!(((p.l4_4 / k.l4_4) * 8.0 - 1.0).abs() < 0.01);
            }
            prev = Some(k);
        }
        assert!(k_rho_norms(1 << 10, 1024.0, 0.05).is_err());
    }

    #[test]
    fn sobolev_routes_agree() {
        for s in [0.3, 0.5] {
            let mut vals = Vec::new();
            for rho in [0.2, 0.1, 0.05] {
                let di = k_rho_sobolev(rho, s).unwrap();
                let sp = k_rho_sobolev_spectral(1 << 18, 1024.0, rho, s).unwrap();
                assert!((di / oracle_sobolev(rho, s) - 1.0).abs() < 1e-6, "{s} {rho}");
                assert!((sp / di - 1.0).abs() < 0.01, "{sp} {di}");
                vals.push(sp);
            }
            let slope = loglog_slope(&[0.2, 0.1, 0.05], &vals);
            assert!((slope + 1.0 + s).abs() < 0.03, "{slope}");
        }
        let ratio = k_rho_sobolev(0.1, 0.5).unwrap() / k_rho_sobolev(0.1, 0.3).unwrap();
        let c = |s: f64| difference_integral(s) / gagliardo_constant(s);
        assert!((ratio / (0.1f64.powf(-0.2) * c(0.5) / c(0.3)) - 1.0).abs() < 1e-12);
        assert!(k_rho_sobolev(0.1, 1.0).is_err());
    }

    #[test]
    fn hardy_profile() {
        let g = Grid::new(16, 4096, 16.0, 64.0).unwrap();
        let f = k_rho_field(&g, 0.2).unwrap();
        assert!(negative_eta_fraction(&f) < 1e-6);
        for t in [0.25, 0.3, 1.7] {
            assert!(hardy_translation_defect(&g, 0.2, t).unwrap() < 1e-8);
            let m = half_wave_flow(&f, t);
            let a = crate::grid::lp_norm(&m, 4.0).unwrap();
            let b = crate::grid::lp_norm(&f, 4.0).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8);
        }
        assert!(k_rho_field(&g, 0.05).is_err());
    }

    #[test]
    fn failure_slope_small_grid() {
        let g = Grid::for_profiles(32, 8192, 24.0, 32.0).unwrap();
        let reps = strichartz_failure(&g, &[0.2, 0.1, 0.05], &[0.3], 64).unwrap();
        let r = &reps[0];
        assert!((r.slope - r.theory).abs() < 0.05, "{r:?}");
        assert!(r.ratio_increasing());
        assert!(strichartz_failure(&g, &[0.2, 0.1], &[0.3], 10).is_err());
    }

    #[test]
    fn schedule_and_mollifier() {
        let sch = InflationSchedule::new(vec![4.0, 8.0, 16.0], 0.1, 0.9, 0.15).unwrap();
        for &n in &sch.ns {
            assert!((sch.t(n) * sch.lambda(n).powi(2) - n.ln().powf(1.6)).abs() < 1e-12);
        }
        assert!(InflationSchedule::new(vec![4.0], 0.9, 0.1, 0.15).is_err());
        let mol = Mollifier::default();
        assert!(mol.value(0.0, 0.0099) > 0.0 && mol.value(0.0, 0.01) == 0.0);
        assert!((mol.symbol(0.0) - 1.0).abs() < 1e-15);
        for &n in &sch.ns {
            let m = mol.scaled_mass(sch.eps(n));
            assert!((m - 1.0).abs() < 1e-10, "{m}");
        }
        // symbol against direct quadrature of the radial transform at k R = 3
        let k = 300.0;
        let direct = 2.0
            * PI
            * tanh_sinh(
                |r, _, _| {
                    let j0 = tanh_sinh(|th, _, _| (k * r * th.sin()).cos(), 0.0, PI, 1e-12) / PI;
                    mol.value(r, 0.0) * j0 * r
                },
                0.0,
                0.01,
                1e-10,
            );
        assert!((mol.symbol(k) - direct).abs() < 1e-9, "{} {direct}", mol.symbol(k));
    }

    #[test]
    fn ode_profile_keeps_modulus() {
        let g = Grid::for_profiles(64, 256, 1.0, 0.25).unwrap();
        let sch = InflationSchedule::new(vec![4.0], 0.1, 0.9, 0.15).unwrap();
        let v0 = inflation_datum(&g, &sch, &Mollifier::default(), 4.0).unwrap();
        let vt = ode_profile(&v0, 0.37, -1.0);
        assert!((vt.norm_sqr() / v0.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(ode_flow_defect(&v0, 0.2, 1e-3, -1.0) < 1e-12 * sch.lambda(4.0));
        let one = Field::from_fn(&g, |_, _| C64::new(1.0, 0.0));
        let v = ode_profile(&one, 0.7, -1.0);
        assert!((v.values()[5] - C64::from_polar(1.0, 0.7)).norm() < 1e-15);
    }

    #[test]
    fn inflation_grows() {
        let g = Grid::for_profiles(256, 2048, 1.0, 0.25).unwrap();
        let sch = InflationSchedule::new(vec![4.0, 8.0, 16.0], 0.1, 0.9, 0.15).unwrap();
        let rows = inflation_run(&sch, &g, &InflationConfig::default()).unwrap();
        for r in &rows {
            assert!((r.mass_tn / r.mass0 - 1.0).abs() < 1e-12);
            assert!(r.lower_ratio > 0.1, "{r:?}");
        }
        assert!(rows.windows(2).all(|w| w[1].growth > w[0].growth), "{rows:?}");
        let lo = rows.iter().map(|r| r.lower_ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.lower_ratio).fold(0.0, f64::max);
        assert!(hi / lo < 2.0);
        let bad = InflationSchedule::new(vec![64.0], 0.1, 0.9, 0.15).unwrap();
        assert!(inflation_run(&bad, &g, &InflationConfig::default()).is_err());
    }

    #[test]
    fn bubbles() {
        let g = Grid::for_profiles(256, 2048, 1.0, 0.25).unwrap();
        let sch = InflationSchedule::new(vec![4.0, 8.0, 16.0], 0.1, 0.9, 0.15).unwrap();
        let zero = Field::zeros(&g, Repr::Physical);
        let one = tanghuru_build(1, &sch, &[(0.1, 0.02)], &[8.0], &zero).unwrap();
        let direct = inflation_bubble(&g, &sch, 8.0, (0.1, 0.02)).unwrap();
        let d = one.field.max_abs_diff(&direct).unwrap();
        assert!(d < 1e-12 * sch.lambda(8.0), "{d}");

        let centers = [(0.0, -0.05), (0.1, 0.05), (0.3, 0.05)];
        let ns = [4.0, 8.0, 16.0];
        let t = tanghuru_build(1, &sch, &centers, &ns, &zero).unwrap();
        assert_eq!(t.separations.len(), 3);
        let two = tanghuru_build(1, &sch, &centers[..2], &ns[..2], &zero).unwrap();
        let parts: f64 = (0..2)
            .map(|i| inflation_bubble(&g, &sch, ns[i], centers[i]).unwrap().norm_sqr())
            .sum();
        assert!((two.field.norm_sqr() / parts - 1.0).abs() < 1e-12);

        let tail = mollified_tail(&g, &sch, &t.bubbles, 0).unwrap();
        // ||v_{0,l}||_{L^2} = kappa_l n_l^{-2s} ||bump||, so the tail decays geometrically
        let predicted = |n: f64| sch.kappa(n) * n.powf(-2.0 * sch.s);
        let mut q_max: f64 = 0.0;
        for (w, b) in tail.windows(2).zip(t.bubbles.windows(2)) {
            let q = w[1] / w[0];
            assert!((q / (predicted(b[1].n) / predicted(b[0].n)) - 1.0).abs() < 0.02, "{tail:?}");
            q_max = q_max.max(q);
        }
        let sum: f64 = tail.iter().sum();
        assert!(q_max < 1.0 && sum <= tail[0] / (1.0 - q_max));

        assert!(matches!(
            tanghuru_build(1, &sch, &[(0.0, 0.0), (0.1, 0.0)], &[4.0, 8.0], &zero),
            Err(LabError::Overlap(_))
        ));
        assert!(tanghuru_build(1, &sch, &[(0.0, 0.0); 4], &[4.0; 4], &zero).is_err());
    }
}
