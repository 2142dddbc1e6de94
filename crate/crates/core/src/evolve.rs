//! Time integration: the full cubic flow, the adapted linear flow with a
//! low-frequency potential, the forced remainder flow, Duhamel quadrature and the
//! truncation cutoffs.
//!
//! Sign conventions: `A = d_xx - |D_y|` and every flow solves
//! `(i d_t + A) v = mu G`, so `v(t) = e^{itA} v(0) - i mu int_0^t e^{i(t-s)A} G(s) ds`.

mod trajectory;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::grid::{save_hwf1, Field, Grid, Transformer};
use crate::multipliers::{dealias_table, flow_table, phi_lp};
use crate::norms::{band_l2, band_strichartz, BandSeries, YParams, YSeries};
use crate::C64;

pub use trajectory::{Trajectory, TrajectoryFlags};

/// Truncation cutoff: 1 on `|x| <= 1`, 0 on `|x| >= 2`, even, `theta(1.5) = 1/2`.
pub fn cutoff_theta(x: f64) -> f64 {
    phi_lp(x)
}

/// Options for [`solve_nls_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlsConfig {
    pub mu: f64,
    /// 2/3-rule filter applied once per step.
    pub dealias: bool,
    /// Sup-norm level at which the run is flagged and stopped.
    pub blowup_ceiling: f64,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            dealias: true,
            blowup_ceiling: 1e6,
        }
    }
}

/// Number of steps of size `dt` in `[0, t]`; `t` must be a whole multiple of `dt`.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return param(format!("need dt > 0 and T >= 0, got dt={dt}, T={t}"));
    }
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(dt) {
        return param(format!("T={t} is not a multiple of dt={dt}"));
    }
    Ok(n as usize)
}

fn assemble(
    grid: &Grid,
    dt: f64,
    datum: Vec<C64>,
    back: Vec<Vec<C64>>,
    fwd: Vec<Vec<C64>>,
) -> Result<Trajectory> {
    let n_back = back.len();
    let mut snaps: Vec<Vec<C64>> = back.into_iter().rev().collect();
    snaps.push(datum);
    snaps.extend(fwd);
    Trajectory::new(grid, dt, n_back, snaps)
}

/// Strang splitting for `i u_t + A u = mu |u|^2 u` on `[-T, T]` with default options.
pub fn solve_nls(f0: &Field, t: f64, dt: f64, mu: f64) -> Result<Trajectory> {
    solve_nls_with(
        f0,
        t,
        dt,
        &NlsConfig {
            mu,
            ..NlsConfig::default()
        },
    )
}

/// Strang splitting: half nonlinear phase, full free flow, half nonlinear phase.
/// The nonlinear substep `u <- u e^{-i mu |u|^2 h/2}` is exact. Marches forward and
/// backward from the datum; crossing the blow-up ceiling stops that direction and
/// sets `flags.blowup_time`.
pub fn solve_nls_with(f0: &Field, t: f64, dt: f64, cfg: &NlsConfig) -> Result<Trajectory> {
    let n = step_count(t, dt)?;
    let grid = f0.grid().clone();
    let datum = f0.fourier().into_values();
    let (fwd, bf) = march_nls(&grid, &datum, dt, n, cfg, true);
    let (back, bb) = march_nls(&grid, &datum, -dt, n, cfg, true);
    let mut traj = assemble(&grid, dt, datum, back, fwd)?;
    traj.flags.blowup_time = match (bf, bb) {
        (Some(a), Some(b)) => Some(if a.abs() <= b.abs() { a } else { b }),
        (a, b) => a.or(b),
    };
    Ok(traj)
}

/// Forward march to `t` keeping only the final state, for grids where the whole
/// trajectory does not fit in memory. Also returns the blow-up time, if any.
pub fn solve_nls_final(f0: &Field, t: f64, dt: f64, cfg: &NlsConfig) -> Result<(Field, Option<f64>)> {
    let n = step_count(t, dt)?;
    let grid = f0.grid().clone();
    let datum = f0.fourier().into_values();
    if n == 0 {
        return Ok((f0.fourier(), None));
    }
    let (mut last, blowup) = march_nls(&grid, &datum, dt, n, cfg, false);
    let end = last.pop().expect("march keeps the final state");
    Ok((Field::from_values(&grid, end, crate::Repr::Fourier)?, blowup))
}

fn nonlinear_phase(u: &mut [C64], k: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for v in u.iter_mut() {
        let m = v.norm_sqr();
        *v *= C64::from_polar(1.0, -k * m);
        sup = sup.max(m);
    }
    sup.sqrt()
}

fn march_nls(
    grid: &Grid,
    datum: &[C64],
    h: f64,
    n: usize,
    cfg: &NlsConfig,
    keep_all: bool,
) -> (Vec<Vec<C64>>, Option<f64>) {
    let mut tr = Transformer::new(grid);
    let lin = flow_table(grid, h);
    let mask = cfg.dealias.then(|| dealias_table(grid));
    let mut u = datum.to_vec();
    tr.inverse(&mut u);
    let mut out = Vec::with_capacity(n);
    let half = 0.5 * cfg.mu * h;
    for step in 1..=n {
        if cfg.mu != 0.0 {
            nonlinear_phase(&mut u, half);
        }
        tr.forward(&mut u);
        u.iter_mut().zip(&lin).for_each(|(v, e)| *v *= e);
        tr.inverse(&mut u);
        let sup = if cfg.mu != 0.0 {
            nonlinear_phase(&mut u, half)
        } else {
            u.iter().fold(0.0f64, |m, v| m.max(v.norm()))
        };
        let mut c = u.clone();
        tr.forward(&mut c);
        if let Some(m) = &mask {
            c.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
            u.copy_from_slice(&c);
            tr.inverse(&mut u);
        }
        let stop = !(sup <= cfg.blowup_ceiling);
        if keep_all || stop || step == n {
            out.push(c);
        }
        if stop {
            return (out, Some(step as f64 * h));
        }
    }
    (out, None)
}

/// Exact flow of `i F' = mu (conj(F) phi^2 + 2 |phi|^2 F)` over a time `h` as a real
/// 2x2 matrix on `(Re F, Im F)`.
pub fn potential_matrix(phi: C64, mu: f64, h: f64) -> [f64; 4] {
    let c = 2.0 * mu * phi.norm_sqr();
    let d = mu * phi * phi;
    let om = 3f64.sqrt() * mu.abs() * phi.norm_sqr();
    let (cs, s) = if om * h.abs() < 1e-8 {
        (1.0 - 0.5 * (om * h).powi(2), h * (1.0 - (om * h).powi(2) / 6.0))
    } else {
        ((om * h).cos(), (om * h).sin() / om)
    };
    [
        cs + s * d.im,
        s * (c - d.re),
        -s * (c + d.re),
        cs - s * d.im,
    ]
}

fn apply_matrices(u: &mut [C64], mats: &[[f64; 4]]) {
    for (v, m) in u.iter_mut().zip(mats) {
        let (a, b) = (v.re, v.im);
        *v = C64::new(m[0] * a + m[1] * b, m[2] * a + m[3] * b);
    }
}

/// Adapted linear flow `(i d_t + A) F = mu N(F, phi, phi)` for a fixed potential
/// trajectory. Potential substeps are precomputed once and shared by every datum.
pub struct AdaptedFlow {
    grid: Grid,
    dt: f64,
    n: usize,
    half_fwd: Vec<C64>,
    half_bwd: Vec<C64>,
    /// Step `j` forward covers `[t_j, t_{j+1}]`, backward `[-t_{j+1}, -t_j]`.
    fwd: Vec<Vec<[f64; 4]>>,
    bwd: Vec<Vec<[f64; 4]>>,
}

impl AdaptedFlow {
    /// Splitting `e^{i h/2 A}`, exact potential step with `phi` frozen at the
    /// midpoint (interpolated in the interaction picture), `e^{i h/2 A}`.
    pub fn new(potential: &Trajectory, t: f64, mu: f64) -> Result<Self> {
        let dt = potential.dt();
        let n = step_count(t, dt)?;
        if n > potential.half_extent() {
            return Err(LabError::TimeOutOfRange {
                t,
                lo: potential.t_min(),
                hi: potential.t_max(),
            });
        }
        let grid = potential.grid().clone();
        let half_fwd = flow_table(&grid, 0.5 * dt);
        let half_bwd = flow_table(&grid, -0.5 * dt);
        let mut tr = Transformer::new(&grid);
        let z = potential.n_back();
        let mut midpoint = |a: usize, b: usize| -> Vec<C64> {
            // phi(t_a + dt/2) from the snapshots at t_a < t_b = t_a + dt
            let (pa, pb) = (potential.snapshot(a), potential.snapshot(b));
            let mut m: Vec<C64> = pa
                .iter()
                .zip(pb)
                .zip(half_fwd.iter().zip(&half_bwd))
                .map(|((x, y), (ef, eb))| 0.5 * (ef * x + eb * y))
                .collect();
            tr.inverse(&mut m);
            m
        };
        let mats = |phi: &[C64], h: f64| -> Vec<[f64; 4]> {
            phi.iter().map(|p| potential_matrix(*p, mu, h)).collect()
        };
        let mut fwd = Vec::with_capacity(n);
        let mut bwd = Vec::with_capacity(n);
        for j in 0..n {
            fwd.push(mats(&midpoint(z + j, z + j + 1), dt));
            bwd.push(mats(&midpoint(z - j - 1, z - j), -dt));
        }
        Ok(Self {
            grid,
            dt,
            n,
            half_fwd,
            half_bwd,
            fwd,
            bwd,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// Solves from Fourier coefficients of the datum.
    pub fn solve_coeffs(&self, datum: &[C64]) -> Result<Trajectory> {
        let mut tr = Transformer::new(&self.grid);
        let mut run = |mats: &[Vec<[f64; 4]>], half: &[C64]| -> Vec<Vec<C64>> {
            let mut u = datum.to_vec();
            let mut out = Vec::with_capacity(self.n);
            for m in mats {
                u.iter_mut().zip(half).for_each(|(v, e)| *v *= e);
                tr.inverse(&mut u);
                apply_matrices(&mut u, m);
                tr.forward(&mut u);
                u.iter_mut().zip(half).for_each(|(v, e)| *v *= e);
                out.push(u.clone());
            }
            out
        };
        let fwd = run(&self.fwd, &self.half_fwd);
        let back = run(&self.bwd, &self.half_bwd);
        assemble(&self.grid, self.dt, datum.to_vec(), back, fwd)
    }

    pub fn solve(&self, init: &Field) -> Result<Trajectory> {
        self.grid.check_same(init.grid())?;
        self.solve_coeffs(init.fourier().values())
    }
}

/// `(i d_t + A) F = mu (conj(F) phi^2 + 2 |phi|^2 F)` on `[-T, T]`. The map from
/// the datum to the solution is real-linear.
pub fn solve_adapted_linear(init: &Field, potential: &Trajectory, t: f64, mu: f64) -> Result<Trajectory> {
    AdaptedFlow::new(potential, t, mu)?.solve(init)
}

/// `int_0^t e^{i(t-s)A} f(s) ds` by the trapezoid rule in the interaction picture.
pub fn duhamel(forcing: &Trajectory, t: f64) -> Result<Field> {
    let (lo, hi) = (forcing.t_min(), forcing.t_max());
    if t < lo - 1e-12 || t > hi + 1e-12 || lo > 0.0 || hi < 0.0 {
        return Err(LabError::TimeOutOfRange { t, lo, hi });
    }
    let g = forcing.grid().clone();
    let dt = forcing.dt();
    let z = forcing.n_back();
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    let whole = ((t.abs() / dt) * (1.0 + 1e-12)).floor() as usize;
    let rest = t.abs() - whole as f64 * dt;
    // gauge-transformed integrand e^{-isA} f(s), accumulated in coefficient space
    let gauge = |s: f64, v: &[C64]| -> Vec<C64> {
        let tab = flow_table(&g, -s);
        v.iter().zip(&tab).map(|(a, e)| a * e).collect()
    };
    let idx = |j: usize| if sign > 0.0 { z + j } else { z - j };
    let mut acc = vec![C64::new(0.0, 0.0); g.len()];
    let mut prev = gauge(0.0, forcing.snapshot(z));
    for j in 1..=whole {
        let s = sign * j as f64 * dt;
        let cur = gauge(s, forcing.snapshot(idx(j)));
        for ((a, p), c) in acc.iter_mut().zip(&prev).zip(&cur) {
            *a += 0.5 * sign * dt * (p + c);
        }
        prev = cur;
    }
    if rest > 1e-14 * dt {
        let cur = gauge(t, forcing.at(t)?.values());
        for ((a, p), c) in acc.iter_mut().zip(&prev).zip(&cur) {
            *a += 0.5 * sign * rest * (p + c);
        }
    }
    let tab = flow_table(&g, t);
    acc.iter_mut().zip(&tab).for_each(|(a, e)| *a *= e);
    Field::from_values(&g, acc, crate::Repr::Fourier)
}

/// `I f(t_i)` at every snapshot time, by cumulative trapezoid sums outward from 0.
pub fn duhamel_trajectory(forcing: &Trajectory) -> Result<Trajectory> {
    let g = forcing.grid().clone();
    let dt = forcing.dt();
    let z = forcing.n_back();
    let gauge = |s: f64, v: &[C64]| -> Vec<C64> {
        let tab = flow_table(&g, -s);
        v.iter().zip(&tab).map(|(a, e)| a * e).collect()
    };
    let ungauge = |s: f64, v: &[C64]| -> Vec<C64> {
        let tab = flow_table(&g, s);
        v.iter().zip(&tab).map(|(a, e)| a * e).collect()
    };
    let mut snaps = vec![Vec::new(); forcing.len()];
    snaps[z] = vec![C64::new(0.0, 0.0); g.len()];
    for (dir, count) in [(1i64, forcing.n_fwd()), (-1i64, forcing.n_back())] {
        let mut acc = vec![C64::new(0.0, 0.0); g.len()];
        let mut prev = gauge(0.0, forcing.snapshot(z));
        for j in 1..=count {
            let i = (z as i64 + dir * j as i64) as usize;
            let s = forcing.time(i);
            let cur = gauge(s, forcing.snapshot(i));
            for ((a, p), c) in acc.iter_mut().zip(&prev).zip(&cur) {
                *a += 0.5 * dir as f64 * dt * (p + c);
            }
            prev = cur;
            snaps[i] = ungauge(s, &acc);
        }
    }
    Trajectory::new(&g, dt, z, snaps)
}

/// Cutoff values at `tau_j = j dt`, `j = 0..=n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffState {
    pub dt: f64,
    pub theta_f: Vec<f64>,
    pub theta_w: Vec<f64>,
    pub theta_fw_leq: Vec<f64>,
    /// First `tau` at which any cutoff drops below one.
    pub frozen_after: Option<f64>,
}

impl CutoffState {
    pub fn new(dt: f64, theta_f: Vec<f64>, theta_w: Vec<f64>, theta_fw_leq: Vec<f64>) -> Self {
        let frozen_after = (0..theta_f.len())
            .find(|&j| theta_f[j] < 1.0 || theta_w[j] < 1.0 || theta_fw_leq[j] < 1.0)
            .map(|j| j as f64 * dt);
        Self {
            dt,
            theta_f,
            theta_w,
            theta_fw_leq,
            frozen_after,
        }
    }

    /// Every series is nonincreasing in `tau`.
    pub fn is_monotone(&self) -> bool {
        [&self.theta_f, &self.theta_w, &self.theta_fw_leq]
            .iter()
            .all(|s| s.windows(2).all(|w| w[1] <= w[0]))
    }

    pub fn all_one(&self) -> bool {
        self.frozen_after.is_none()
    }
}

/// Running norms over `[-tau_j, tau_j]` that feed the three cutoffs.
pub trait LadderView {
    /// `||<D_y>^{sigma'} F_N||_{S_{<=N,D'}[-tau, tau]}`.
    fn f_norm(&self, j: usize) -> f64;
    /// `||w_N||_{Y^nu_N[-tau, tau]}`.
    fn w_norm(&self, j: usize) -> f64;
    /// The sum over the lower levels in `theta_{F,w;<=N/2}`.
    fn ladder_norm(&self, j: usize) -> f64;
}

/// `(theta_F, theta_w, theta_{F,w;<=N/2})` at `tau_j`.
pub fn running_cutoffs(view: &impl LadderView, j: usize) -> (f64, f64, f64) {
    (
        cutoff_theta(view.f_norm(j)),
        cutoff_theta(view.w_norm(j)),
        cutoff_theta(view.ladder_norm(j)),
    )
}

/// Inputs of the remainder equation at one level.
pub struct RemainderContext<'a> {
    /// `F_N`.
    pub f: &'a Trajectory,
    /// `u_{N/2}`.
    pub u: &'a Trajectory,
    /// Cutoff scale `N^gamma` of the potential.
    pub cut: f64,
    /// `theta_{F;N}(tau_j)` for `j = 0..=n`.
    pub theta_f: &'a [f64],
    /// `theta_{F,w;<=N/2}(tau_j)`.
    pub theta_l: &'a [f64],
    /// Norm parameters of `theta_{w;N}`.
    pub y: YParams,
    pub mu: f64,
    pub dealias: bool,
}

/// `w_N` with its cutoff series and the running band data of its `Y` norm.
pub struct RemainderSolution {
    pub w: Trajectory,
    pub theta_w: Vec<f64>,
    pub y_series: YSeries,
}

struct Slice {
    f: Vec<C64>,
    u: Vec<C64>,
    // w-independent forcing pieces
    fff: Vec<C64>,
    ffu: Vec<C64>,
    sub: Vec<C64>,
}

pub(crate) fn n3(a: C64, b: C64, c: C64) -> C64 {
    a.conj() * b * c + a * b.conj() * c + a * b * c.conj()
}

fn slice_at(tr: &mut Transformer, ctx: &RemainderContext, i: usize) -> Slice {
    let g = ctx.f.grid().clone();
    let mut f = ctx.f.snapshot(i).to_vec();
    tr.inverse(&mut f);
    let mut pu = ctx.u.snapshot(i).to_vec();
    crate::multipliers::apply_eta_real(&g, &mut pu, |e| phi_lp(e / ctx.cut));
    tr.inverse(&mut pu);
    let mut u = ctx.u.snapshot(i).to_vec();
    tr.inverse(&mut u);
    let mut fff = Vec::with_capacity(g.len());
    let mut ffu = Vec::with_capacity(g.len());
    let mut sub = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (a, b, p) = (f[k], u[k], pu[k]);
        fff.push(a.norm_sqr() * a);
        ffu.push(n3(a, a, b));
        sub.push(n3(a, b, b) - n3(a, p, p));
    }
    Slice { f, u, fff, ffu, sub }
}

#[derive(Clone, Copy)]
struct Thetas {
    f: f64,
    w: f64,
    l: f64,
}

/// Fourier coefficients of `-i mu N~(w)` at one time slice; `w` is physical.
fn forcing(tr: &mut Transformer, s: &Slice, w: &[C64], th: Thetas, mu: f64, mask: Option<&[f64]>) -> Vec<C64> {
    let (tf, tw, tl) = (th.f, th.w, th.l);
    let mut out: Vec<C64> = (0..w.len())
        .map(|k| {
            let (f, u, x) = (s.f[k], s.u[k], w[k]);
            let g = tf * tf * (s.fff[k] + n3(f, f, x))
                + tf * tw * n3(f, x, x)
                + tw * tw * x.norm_sqr() * x
                + tl * tl * (n3(u, u, x) + s.sub[k])
                + tl * tw * n3(u, x, x)
                + 2.0 * tl * tf * n3(u, x, f)
                + tl * tf * s.ffu[k];
            C64::new(0.0, -mu) * g
        })
        .collect();
    tr.forward(&mut out);
    if let Some(m) = mask {
        out.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
    }
    out
}

/// Per-direction marching state of the remainder solve.
struct Lane {
    w: Vec<C64>,
    slice: Slice,
    index: usize,
}

/// Solves the truncated remainder equation `w(t) = -i mu int_0^t e^{i(t-s)A} N~(w)(s) ds`
/// with Heun's method in the interaction picture. Forward and backward steps are
/// interleaved so that the running `Y` norm over `[-tau, tau]` is available when
/// `theta_w(tau)` is needed; cutoffs are frozen at the start of each step.
pub fn solve_remainder(ctx: &RemainderContext, t: f64) -> Result<RemainderSolution> {
    let g = ctx.f.grid().clone();
    g.check_same(ctx.u.grid())?;
    let dt = ctx.f.dt();
    if ctx.u.dt() != dt || ctx.u.n_back() != ctx.f.n_back() || ctx.u.len() != ctx.f.len() {
        return param("remainder inputs use different time grids");
    }
    let n = step_count(t, dt)?;
    if n > ctx.f.half_extent() || ctx.theta_f.len() <= n || ctx.theta_l.len() <= n {
        return param("remainder inputs do not cover [-T, T]");
    }
    let mut tr = Transformer::new(&g);
    let mask = ctx.dealias.then(|| dealias_table(&g));
    let mask = mask.as_deref();
    let e_fwd = flow_table(&g, dt);
    let e_bwd = flow_table(&g, -dt);
    let z = ctx.f.n_back();
    let zero = vec![C64::new(0.0, 0.0); g.len()];
    let bands = g.dyadic_bands();
    let mut l2 = BandSeries::empty(bands.clone(), dt);
    let mut st = BandSeries::empty(bands, dt);
    l2.push(0.0, &band_l2(&g, &zero, ctx.y.nu));
    st.push(0.0, &band_strichartz(&mut tr, &zero, ctx.y.sigma, f64::INFINITY));
    let mut fwd = Lane {
        w: zero.clone(),
        slice: slice_at(&mut tr, ctx, z),
        index: z,
    };
    let mut bwd = Lane {
        w: zero.clone(),
        slice: slice_at(&mut tr, ctx, z),
        index: z,
    };
    let mut out_f = Vec::with_capacity(n);
    let mut out_b = Vec::with_capacity(n);
    let mut theta_w = Vec::with_capacity(n + 1);
    for j in 0..n {
        let series = YSeries {
            l2_nu: l2.clone(),
            st_sigma: st.clone(),
        };
        let tw = cutoff_theta(series.norm(&ctx.y, (0, l2.len() - 1)).total());
        theta_w.push(tw);
        let th = Thetas {
            f: ctx.theta_f[j],
            w: tw,
            l: ctx.theta_l[j],
        };
        for (lane, e, h, out, step) in [
            (&mut fwd, &e_fwd, dt, &mut out_f, 1i64),
            (&mut bwd, &e_bwd, -dt, &mut out_b, -1i64),
        ] {
            let next_index = (lane.index as i64 + step) as usize;
            let mut wp = lane.w.clone();
            tr.inverse(&mut wp);
            let g0 = forcing(&mut tr, &lane.slice, &wp, th, ctx.mu, mask);
            let next = slice_at(&mut tr, ctx, next_index);
            // predictor e^{ihA}(w + h G0)
            let pred: Vec<C64> = lane
                .w
                .iter()
                .zip(&g0)
                .zip(e)
                .map(|((w, g), ef)| ef * (w + h * g))
                .collect();
            let mut pp = pred.clone();
            tr.inverse(&mut pp);
            let g1 = forcing(&mut tr, &next, &pp, th, ctx.mu, mask);
            let w1: Vec<C64> = lane
                .w
                .iter()
                .zip(&g0)
                .zip(e)
                .zip(&g1)
                .map(|(((w, a), ef), b)| ef * (w + 0.5 * h * a) + 0.5 * h * b)
                .collect();
            lane.w = w1;
            lane.slice = next;
            lane.index = next_index;
            out.push(lane.w.clone());
        }
        l2.push((j + 1) as f64 * dt, &band_l2(&g, &fwd.w, ctx.y.nu));
        st.push(
            (j + 1) as f64 * dt,
            &band_strichartz(&mut tr, &fwd.w, ctx.y.sigma, f64::INFINITY),
        );
        l2.push_front(-((j + 1) as f64) * dt, &band_l2(&g, &bwd.w, ctx.y.nu));
        st.push_front(
            -((j + 1) as f64) * dt,
            &band_strichartz(&mut tr, &bwd.w, ctx.y.sigma, f64::INFINITY),
        );
    }
    let y_series = YSeries {
        l2_nu: l2,
        st_sigma: st,
    };
    theta_w.push(cutoff_theta(
        y_series.norm(&ctx.y, (0, y_series.l2_nu.len() - 1)).total(),
    ));
    let w = assemble(&g, dt, zero, out_b, out_f)?;
    Ok(RemainderSolution { w, theta_w, y_series })
}

#[derive(Serialize)]
struct ExportManifest<'a> {
    dt: f64,
    #[serde(rename = "T")]
    t: f64,
    times: Vec<f64>,
    flags: &'a TrajectoryFlags,
    files: Vec<String>,
}

/// Writes one `HWF1` dump per snapshot and a JSON manifest `{dt, T, times, flags}`.
pub fn export_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let name = format!("snap_{i:05}.hwf");
        save_hwf1(&dir.join(&name), &traj.field(i))?;
        files.push(name);
    }
    let m = ExportManifest {
        dt: traj.dt(),
        t: traj.t_max().max(-traj.t_min()),
        times: traj.times(),
        flags: &traj.flags,
        files,
    };
    let json = serde_json::to_string_pretty(&m).map_err(|e| LabError::Format(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}
