//! The frequency ladder `u_N = u_{N/2} + F_N + w_N`.
//!
//! The base `u_{N0}` solves the cubic equation from `P_{<=N0} f0^omega`. Each level
//! adds the adapted linear evolution `F_N` of the new dyadic block, driven by the
//! truncated low-frequency potential `theta_{F,w;<=N/2} P_{<=N^gamma} u_{N/2}`, and
//! the remainder `w_N` of the truncated equation. Block indices follow the
//! randomization: level `N` carries the unit blocks `N/2 <= |k| < N`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::evolve::{
    duhamel_trajectory, n3, running_cutoffs, solve_nls_with, solve_remainder, step_count,
    AdaptedFlow, CutoffState, LadderView, NlsConfig, RemainderContext, Trajectory,
};
use crate::grid::{Field, Grid, Transformer};
use crate::multipliers::{apply_eta_real, flow_table, phi_lp, project_fattened, project_unit};
use crate::norms::{
    besov_recentered, c_below, c_centered, l2_series, off_band_fraction, sobolev_aniso, strichartz_series,
    weighted_sum, x_solution_norm, y_norm, BandSeries, NormReport, TimeNorm, YNorm, YParams, YSeries,
};
use crate::random_data::{random_block, randomize, randomize_where, truncate_leq, RandomSpec};
use crate::C64;

/// Margin used for the strict inequalities between exponents.
pub const MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub s: f64,
    pub sigma: f64,
    pub sigma_p: f64,
    pub nu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho_besov: f64,
    /// Weight exponents `D`, `D'`, `D''`.
    pub d: f64,
    pub d_p: f64,
    pub d_pp: f64,
    pub n0: u64,
    pub nmax: u64,
    pub t0: f64,
    pub dt: f64,
    pub mu: f64,
    pub seed: u64,
}

impl Default for AnsatzParams {
    fn default() -> Self {
        Self {
            s: 0.48,
            sigma: 0.07,
            sigma_p: 0.16,
            nu: 0.58,
            alpha: 0.5,
            gamma: 0.732,
            rho_besov: 0.03,
            d: 0.5,
            d_p: 2.6,
            d_pp: 1.0,
            n0: 8,
            nmax: 64,
            t0: 0.0625,
            dt: 1.0 / 512.0,
            mu: 1.0,
            seed: 1,
        }
    }
}

fn less(a: f64, b: f64, what: &str) -> Result<()> {
    if a + MARGIN < b {
        Ok(())
    } else {
        param(format!("constraint {what} fails: {a} vs {b}"))
    }
}

impl AnsatzParams {
    /// `delta = gamma (sigma - rho)`.
    pub fn delta(&self) -> f64 {
        self.gamma * (self.sigma - self.rho_besov)
    }

    pub fn validate(&self) -> Result<()> {
        less(0.0, self.sigma, "0 < sigma")?;
        less(self.sigma, self.nu - 0.5, "sigma < nu - 1/2")?;
        less(self.sigma, self.sigma_p, "sigma < sigma'")?;
        less(self.sigma_p, self.s, "sigma' < s")?;
        less(0.0, self.gamma, "0 < gamma")?;
        less(self.gamma, 1.0, "gamma < 1")?;
        less((self.nu - self.sigma_p).max(self.sigma), self.alpha, "max(nu - sigma', sigma) < alpha")?;
        less(self.alpha, self.nu, "alpha < nu")?;
        less(0.0, self.d, "0 < D")?;
        less(2.0 * self.d + self.s + self.sigma_p + self.nu, self.d_p, "2D + s + sigma' + nu < D'")?;
        less(0.0, self.d_pp, "0 < D''")?;
        less(0.0, self.delta(), "delta > 0")?;
        if !(self.n0 >= 1 && self.n0.is_power_of_two() && self.nmax.is_power_of_two() && self.nmax >= self.n0) {
            return param(format!("N0={} and Nmax={} must be dyadic with N0 <= Nmax", self.n0, self.nmax));
        }
        step_count(self.t0, self.dt)?;
        Ok(())
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.t0, self.dt)
    }

    /// Ladder scales `2 N0, 4 N0, .., Nmax`.
    pub fn levels(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = 2 * self.n0;
        while n <= self.nmax {
            out.push(n);
            n *= 2;
        }
        out
    }

    pub fn y_params(&self, n: f64) -> YParams {
        YParams {
            n,
            nu: self.nu,
            sigma: self.sigma,
            alpha: self.alpha,
            d: self.d,
        }
    }

    fn nls_config(&self) -> NlsConfig {
        NlsConfig {
            mu: self.mu,
            dealias: false,
            blowup_ceiling: 1e6,
        }
    }
}

/// One dyadic level of the ladder.
pub struct Level {
    pub n: u64,
    pub f: Trajectory,
    pub w: Trajectory,
    pub u: Trajectory,
    pub cutoffs: CutoffState,
    /// `<D_y>^{sigma'} F_N` per band in `L^4_x L^inf_y`.
    pub f_series: BandSeries,
    pub w_series: YSeries,
    /// `||w_N||_Y` divided by the right side of the a priori bound.
    pub apriori_constant: f64,
    pub reports: Vec<NormReport>,
}

pub struct AnsatzState {
    pub params: AnsatzParams,
    pub f0: Field,
    pub spec: RandomSpec,
    pub base: Trajectory,
    pub levels: Vec<Level>,
    pub t_omega: f64,
    /// Set when the smallness condition already fails after one step.
    pub t_omega_flag: bool,
}

impl AnsatzState {
    pub fn level(&self, n: u64) -> Option<&Level> {
        self.levels.iter().find(|l| l.n == n)
    }

    /// `u_N` for the base scale or a solved level.
    pub fn u(&self, n: u64) -> Result<&Trajectory> {
        if n == self.params.n0 {
            return Ok(&self.base);
        }
        self.level(n)
            .map(|l| &l.u)
            .ok_or_else(|| LabError::Parameter(format!("level {n} is not solved")))
    }

    pub fn top(&self) -> &Trajectory {
        self.levels.last().map(|l| &l.u).unwrap_or(&self.base)
    }

    /// `u_{N0} + sum_L (F_L + w_L)`.
    pub fn telescoped(&self) -> Result<Trajectory> {
        let mut acc = self.base.clone();
        for l in &self.levels {
            acc.axpy_assign(C64::new(1.0, 0.0), &l.f)?;
            acc.axpy_assign(C64::new(1.0, 0.0), &l.w)?;
        }
        Ok(acc)
    }

    /// Randomized datum of the top level, `P_{<=Nmax} f0^omega`.
    pub fn top_datum(&self) -> Result<Field> {
        truncate_leq(&self.f0, &self.spec, self.params.nmax)
    }

    pub fn reports(&self) -> Vec<NormReport> {
        self.levels.iter().flat_map(|l| l.reports.iter().cloned()).collect()
    }

    /// Params, existence time, and per-level cutoffs and reports.
    pub fn manifest(&self) -> serde_json::Value {
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .map(|l| {
                serde_json::json!({
                    "N": l.n,
                    "cutoffs": l.cutoffs,
                    "apriori_constant": l.apriori_constant,
                    "reports": l.reports,
                })
            })
            .collect();
        serde_json::json!({
            "params": self.params,
            "t_omega": self.t_omega,
            "t_omega_flag": self.t_omega_flag,
            "levels": levels,
        })
    }
}

struct View<'a> {
    p: &'a AnsatzParams,
    n: f64,
    z: usize,
    f_series: Option<&'a BandSeries>,
    w_series: Option<&'a YSeries>,
    lower: &'a [Level],
}

fn below_norms(p: &AnsatzParams, l: &Level, win: (usize, usize)) -> f64 {
    let m = l.n as f64;
    let f = weighted_sum("", &l.f_series, TimeNorm::L8, win, |b| c_below(m, p.d_p, b)).value;
    let y = l.w_series.norm(&p.y_params(m), win);
    f + y.x_below + y.s_below
}

impl LadderView for View<'_> {
    fn f_norm(&self, j: usize) -> f64 {
        let win = (self.z - j, self.z + j);
        self.f_series
            .map(|s| weighted_sum("", s, TimeNorm::L8, win, |m| c_below(self.n, self.p.d_p, m)).value)
            .unwrap_or(0.0)
    }

    fn w_norm(&self, j: usize) -> f64 {
        let win = (self.z - j, self.z + j);
        self.w_series
            .map(|y| y.norm(&self.p.y_params(self.n), win).total())
            .unwrap_or(0.0)
    }

    fn ladder_norm(&self, j: usize) -> f64 {
        let win = (self.z - j, self.z + j);
        self.lower.iter().map(|l| below_norms(self.p, l, win)).sum()
    }
}

/// `theta_{F,w;<=N/2}(tau_j)` from the levels below `N`; the base does not enter.
fn theta_ladder(p: &AnsatzParams, lower: &[Level], n: f64, z: usize, steps: usize) -> Vec<f64> {
    let view = View {
        p,
        n,
        z,
        f_series: None,
        w_series: None,
        lower,
    };
    (0..=steps).map(|j| running_cutoffs(&view, j).2).collect()
}

/// `theta_{F,w;<=N/2}(|t|) P_{<=N^gamma} u_{N/2}(t)`.
pub fn potential(lower_u: &Trajectory, theta_l: &[f64], cut: f64) -> Trajectory {
    let g = lower_u.grid().clone();
    let z = lower_u.n_back();
    lower_u.map_snapshots(|i, v| {
        let mut c = v.to_vec();
        let th = theta_l[i.abs_diff(z)];
        apply_eta_real(&g, &mut c, |e| th * phi_lp(e / cut));
        c
    })
}

fn adapted_flow(p: &AnsatzParams, lower_u: &Trajectory, theta_l: &[f64], n: u64) -> Result<AdaptedFlow> {
    let pot = potential(lower_u, theta_l, (n as f64).powf(p.gamma));
    AdaptedFlow::new(&pot, p.t0, p.mu)
}

fn solve_level(p: &AnsatzParams, lower_u: &Trajectory, lower: &[Level], datum: &Field, n: u64) -> Result<Level> {
    let steps = p.steps()?;
    let z = lower_u.n_back();
    let nf = n as f64;
    let theta_l = theta_ladder(p, lower, nf, z, steps);
    let f = adapted_flow(p, lower_u, &theta_l, n)?.solve(datum)?;
    let f_series = strichartz_series(&f, p.sigma_p, f64::INFINITY);
    let view = View {
        p,
        n: nf,
        z,
        f_series: Some(&f_series),
        w_series: None,
        lower,
    };
    let theta_f: Vec<f64> = (0..=steps).map(|j| running_cutoffs(&view, j).0).collect();
    let ctx = RemainderContext {
        f: &f,
        u: lower_u,
        cut: nf.powf(p.gamma),
        theta_f: &theta_f,
        theta_l: &theta_l,
        y: p.y_params(nf),
        mu: p.mu,
        dealias: false,
    };
    let sol = solve_remainder(&ctx, p.t0)?;
    let mut u = lower_u.add(&f)?;
    u.axpy_assign(C64::new(1.0, 0.0), &sol.w)?;

    let full = f.full_window();
    let interval = (f.t_min(), f.t_max());
    let s_f = weighted_sum(
        format!("S_{{{n},D'}}(<D>^sigma' F_{n})"),
        &f_series,
        TimeNorm::L8,
        full,
        |m| c_centered(nf, p.d_p, m),
    );
    let x_f = weighted_sum(
        format!("X_{{{n},D'}}(<D>^s F_{n})"),
        &l2_series(&f, p.s),
        TimeNorm::Sup,
        full,
        |m| c_centered(nf, p.d_p, m),
    );
    let yw = sol.y_series.norm(&p.y_params(nf), full);
    let y_report = NormReport {
        label: format!("Y^nu_{n}(w_{n})"),
        value: yw.total(),
        interval,
        bands: Vec::new(),
        tail: 0.0,
    };
    let bound = p.t0.sqrt()
        * (nf.powf(p.nu - p.sigma_p - p.gamma * p.nu) * s_f.value
            + nf.powf(p.nu - p.s - p.gamma * p.sigma_p) * x_f.value);
    let apriori_constant = if bound > 0.0 { yw.total() / bound } else { 0.0 };
    Ok(Level {
        n,
        f,
        w: sol.w,
        u,
        cutoffs: CutoffState::new(p.dt, theta_f, sol.theta_w, theta_l),
        f_series,
        w_series: sol.y_series,
        apriori_constant,
        reports: vec![s_f, x_f, y_report],
    })
}

/// Runs the ladder for `f0^omega` with the randomization seeded by `params.seed`.
pub fn run_ladder(f0: &Field, params: &AnsatzParams) -> Result<AnsatzState> {
    let spec = RandomSpec::for_grid(params.seed, f0.grid());
    run_ladder_with_spec(f0, params, &spec)
}

/// Runs the ladder with an explicit randomization (used for seed surgery).
pub fn run_ladder_with_spec(f0: &Field, params: &AnsatzParams, spec: &RandomSpec) -> Result<AnsatzState> {
    params.validate()?;
    f0.grid().require_eta(4.0 * params.nmax as f64)?;
    let base_datum = truncate_leq(f0, spec, params.n0)?;
    let base = solve_nls_with(&base_datum, params.t0, params.dt, &params.nls_config())?;
    if let Some(t) = base.flags.blowup_time {
        return Err(LabError::Invariant(format!("base trajectory incomplete: blow-up flagged at t={t}")));
    }
    let mut levels: Vec<Level> = Vec::new();
    for n in params.levels() {
        let datum = random_block(f0, spec, n)?;
        let level = {
            let lower_u = levels.last().map(|l| &l.u).unwrap_or(&base);
            solve_level(params, lower_u, &levels, &datum, n)?
        };
        levels.push(level);
    }
    let mut state = AnsatzState {
        params: params.clone(),
        f0: f0.fourier(),
        spec: spec.clone(),
        base,
        levels,
        t_omega: 0.0,
        t_omega_flag: false,
    };
    let (t, flag) = detect_existence_time(&state);
    state.t_omega = t;
    state.t_omega_flag = flag;
    Ok(state)
}

/// Largest grid time `tau` with `sum_M ||<D_y>^{sigma'} F_M||_{S_{M,D'}} <= 1/2` and
/// `sum_M ||w_M||_{Y^nu_M} <= 1/2` on `[-tau, tau]`. The flag is set when the
/// condition fails at the first step.
pub fn detect_existence_time(state: &AnsatzState) -> (f64, bool) {
    let p = &state.params;
    let z = state.base.n_back();
    let steps = state.base.half_extent();
    for j in 1..=steps {
        let win = (z - j, z + j);
        let mut fs = 0.0;
        let mut ws = 0.0;
        for l in &state.levels {
            let m = l.n as f64;
            fs += weighted_sum("", &l.f_series, TimeNorm::L8, win, |b| c_centered(m, p.d_p, b)).value;
            ws += l.w_series.norm(&p.y_params(m), win).total();
        }
        if fs > 0.5 || ws > 0.5 {
            return ((j - 1) as f64 * p.dt, j == 1);
        }
    }
    (steps as f64 * p.dt, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub k: i64,
    /// `B^{rho,gamma}_{k,D''}` of the response to `P_{1,k} f0`.
    pub besov: f64,
    pub data_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub n: u64,
    pub blocks: Vec<BlockEntry>,
    /// `sup_t ||sum_k g_k F_{N,k} - F_N|| / sup_t ||F_N||`.
    pub residual: f64,
}

impl BlockReport {
    pub fn max_ratio(&self) -> f64 {
        self.blocks.iter().map(|b| b.ratio).fold(0.0, f64::max)
    }
}

fn level_flow(state: &AnsatzState, n: u64) -> Result<(AdaptedFlow, &Level)> {
    let level = state
        .level(n)
        .ok_or_else(|| LabError::Parameter(format!("level {n} is not solved")))?;
    let lower_u = state.u(n / 2)?;
    Ok((adapted_flow(&state.params, lower_u, &level.cutoffs.theta_fw_leq, n)?, level))
}

fn block_entry(state: &AnsatzState, n: u64, k: i64, re: &Trajectory, datum: &Field) -> Result<BlockEntry> {
    let p = &state.params;
    let besov = besov_recentered(re, k, p.rho_besov, p.gamma, p.d_pp, n as f64)?.value;
    let data_norm = datum.l2_norm();
    let ratio = if data_norm > 0.0 { besov / data_norm } else { 0.0 };
    Ok(BlockEntry {
        k,
        besov,
        data_norm,
        ratio,
    })
}

/// Solves every block `F_{N,k}` of a level with the level's potential and checks
/// `F_N = sum_k (Re g_k F_{N,k} + Im g_k F_{N,k}^{(i)})`, where `F^{(i)}_{N,k}` starts
/// from `i P_{1,k} f0`: the adapted flow is only real-linear.
pub fn block_decomposition(state: &AnsatzState, n: u64) -> Result<BlockReport> {
    let (flow, level) = level_flow(state, n)?;
    let mut sum = level.f.scale(C64::new(0.0, 0.0));
    let mut blocks = Vec::new();
    let h = n as i64 / 2;
    for k in (1 - n as i64)..(n as i64) {
        if k.abs() < h || !state.spec.contains(k) {
            continue;
        }
        let datum = project_unit(&state.f0, k)?;
        let g = state.spec.g(k);
        let re = flow.solve(&datum)?;
        sum.axpy_assign(C64::new(g.re, 0.0), &re)?;
        let im = flow.solve(&datum.scale(C64::new(0.0, 1.0)))?;
        sum.axpy_assign(C64::new(g.im, 0.0), &im)?;
        blocks.push(block_entry(state, n, k, &re, &datum)?);
    }
    let scale = level.f.sup_l2();
    let diff = sum.sup_l2_diff(&level.f)?;
    let residual = if scale > 0.0 { diff / scale } else { diff };
    Ok(BlockReport { n, blocks, residual })
}

/// Besov localization of selected blocks of a level, without the reassembly check.
pub fn block_besov(state: &AnsatzState, n: u64, ks: &[i64]) -> Result<Vec<BlockEntry>> {
    let (flow, _) = level_flow(state, n)?;
    ks.iter()
        .map(|&k| {
            let datum = project_unit(&state.f0, k)?;
            let re = flow.solve(&datum)?;
            block_entry(state, n, k, &re, &datum)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub n: u64,
    /// `||<D_y>^s F_N||_{X_{N,D'}}`.
    pub x_norm: NormReport,
    /// `||P~_N f0^omega||` in the anisotropic space of order `s`.
    pub data_norm: f64,
    pub ratio: f64,
    /// Mass fraction of `F_N` outside `N/4 <= |eta| <= 4N`, worst over time.
    pub off_band: f64,
}

pub fn measure_localization(state: &AnsatzState, n: u64) -> Result<LocalizationReport> {
    let p = &state.params;
    let level = state
        .level(n)
        .ok_or_else(|| LabError::Parameter(format!("level {n} is not solved")))?;
    let nf = n as f64;
    let x_norm = weighted_sum(
        format!("X_{{{n},D'}}(<D>^s F_{n})"),
        &l2_series(&level.f, p.s),
        TimeNorm::Sup,
        level.f.full_window(),
        |m| c_centered(nf, p.d_p, m),
    );
    let fw = randomize(&state.f0, &state.spec)?;
    let data_norm = sobolev_aniso(&project_fattened(&fw, nf)?, p.s);
    let ratio = if data_norm > 0.0 { x_norm.value / data_norm } else { 0.0 };
    Ok(LocalizationReport {
        n,
        off_band: off_band_fraction(&level.f, nf / 4.0, 4.0 * nf),
        x_norm,
        data_norm,
        ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzTrend {
    pub rows: Vec<TrendRow>,
    /// Least-squares slope of `log2 mean` against `log2 N`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `sigma' + gamma/2 - s - gamma sigma`.
    pub probabilistic_exponent: f64,
    /// `sigma' + 1/2 - s`.
    pub deterministic_exponent: f64,
}

impl StrichartzTrend {
    pub const CSV_HEADER: &'static str = "N,mean,stderr,samples";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&format!("{},{:?},{:?},{}\n", r.n, r.mean, r.stderr, r.samples));
        }
        s
    }
}

/// Seed of the `i`-th Monte-Carlo resample of the top blocks.
pub fn resample_seed(seed: u64, i: usize) -> u64 {
    crate::random_data::hash_words(&[seed, 0x5eed, i as u64])
}

/// Monte-Carlo estimate of `E ||<D_y>^{sigma'} F_N||_{S_{N,D'}}` per level.
///
/// The ladder below the top scale is solved once; for each level the coefficients
/// `g_k`, `N/2 <= |k| < N`, of the new block are resampled while the potential,
/// which depends only on `|k| < N/2`, is kept. This samples `F_N` conditionally on
/// the low frequencies.
pub fn probabilistic_strichartz_stats(f0: &Field, params: &AnsatzParams, n_seeds: usize) -> Result<StrichartzTrend> {
    if n_seeds < 2 {
        return param("need at least two seeds");
    }
    let scales = params.levels();
    if scales.len() < 3 {
        return param(format!("need at least 3 ladder levels, got {}", scales.len()));
    }
    let mut lower_params = params.clone();
    lower_params.nmax = params.nmax / 2;
    let state = run_ladder(f0, &lower_params)?;
    let steps = params.steps()?;
    let z = state.base.n_back();
    let mut rows = Vec::new();
    for &n in &scales {
        let nf = n as f64;
        let idx = state.levels.iter().take_while(|l| l.n <= n / 2).count();
        let theta_l = theta_ladder(params, &state.levels[..idx], nf, z, steps);
        let flow = adapted_flow(params, state.u(n / 2)?, &theta_l, n)?;
        let norms: Vec<f64> = (0..n_seeds)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let spec = state.spec.with_seed(resample_seed(params.seed, i));
                let datum = random_block(f0, &spec, n)?;
                let f = flow.solve(&datum)?;
                let series = strichartz_series(&f, params.sigma_p, f64::INFINITY);
                Ok(weighted_sum("", &series, TimeNorm::L8, f.full_window(), |m| c_centered(nf, params.d_p, m)).value)
            })
            .collect::<Result<_>>()?;
        let mean = norms.iter().sum::<f64>() / n_seeds as f64;
        let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_seeds as f64 - 1.0);
        rows.push(TrendRow {
            n,
            mean,
            stderr: (var / n_seeds as f64).sqrt(),
            samples: n_seeds,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean.log2()).collect();
    let slope = crate::numerics::linear_slope(&xs, &ys);
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let var: f64 = xs
        .iter()
        .zip(&rows)
        .map(|(x, r)| {
            let sy = r.stderr / (r.mean * std::f64::consts::LN_2);
            (x - xm).powi(2) * sy * sy
        })
        .sum::<f64>()
        / (sxx * sxx);
    Ok(StrichartzTrend {
        rows,
        slope,
        slope_stderr: var.sqrt(),
        probabilistic_exponent: params.sigma_p + params.gamma / 2.0 - params.s - params.gamma * params.sigma,
        deterministic_exponent: params.sigma_p + 0.5 - params.s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub n: u64,
    /// `||u_N - u_{N/2}||_{X^{s,sigma}}`.
    pub diff: f64,
    /// `diff(N) / diff(N/2)`.
    pub ratio: Option<f64>,
}

pub fn convergence_report(state: &AnsatzState, s: f64, sigma: f64) -> Result<Vec<CauchyRow>> {
    let mut rows: Vec<CauchyRow> = Vec::new();
    for l in &state.levels {
        let diff = x_solution_norm(&l.f.add(&l.w)?, s, sigma)?.value();
        let ratio = rows.last().and_then(|r| (r.diff > 0.0).then(|| diff / r.diff));
        rows.push(CauchyRow { n: l.n, diff, ratio });
    }
    Ok(rows)
}

/// Non-dyadic step `u_n = u_{N/2} + F_n + w_n` for `N/2 < n <= N`, where `F_n`
/// starts from the blocks `N/2 <= |k| < n` and uses the potential of level `N`.
pub fn general_n_step(state: &AnsatzState, n: u64) -> Result<Level> {
    let big = n.next_power_of_two();
    let p = &state.params;
    if n <= p.n0 || big > p.nmax || n <= big / 2 {
        return param(format!("n={n} is not inside a solved dyadic level"));
    }
    let idx = state
        .levels
        .iter()
        .position(|l| l.n == big)
        .ok_or_else(|| LabError::Parameter(format!("level {big} is not solved")))?;
    let h = big / 2;
    let datum = randomize_where(&state.f0, &state.spec, |k| {
        let a = k.unsigned_abs();
        h <= a && a < n
    })?;
    let lower_u = state.u(h)?;
    let mut level = solve_level(p, lower_u, &state.levels[..idx], &datum, big)?;
    level.n = n;
    Ok(level)
}

/// `sup_t ||u(t) - e^{itA} u(0) + i mu I(|u|^2 u)(t)|| / sup_t ||u(t)||` with the
/// trapezoid Duhamel integral on the trajectory's own time grid.
pub fn untruncated_residual(traj: &Trajectory, mu: f64) -> Result<f64> {
    let g = traj.grid().clone();
    let mut tr = Transformer::new(&g);
    let cubic = traj.map_snapshots(|_, v| {
        let mut c = v.to_vec();
        tr.inverse(&mut c);
        c.iter_mut().for_each(|x| *x *= x.norm_sqr());
        tr.forward(&mut c);
        c
    });
    let d = duhamel_trajectory(&cubic)?;
    let u0 = traj.initial();
    let mut worst: f64 = 0.0;
    for i in 0..traj.len() {
        let tab = flow_table(&g, traj.time(i));
        let r: f64 = traj
            .snapshot(i)
            .iter()
            .zip(u0.values())
            .zip(&tab)
            .zip(d.snapshot(i))
            .map(|(((u, a), e), di)| (u - e * a + C64::new(0.0, mu) * di).norm_sqr())
            .sum();
        worst = worst.max(r);
    }
    let scale = traj.sup_l2();
    let r = (worst * g.area()).sqrt();
    Ok(if scale > 0.0 { r / scale } else { r })
}

/// Paraproduct pieces of `N(phi1, phi2, phi3)` over dyadic `y`-bands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteractionMode {
    HiLoLo,
    LoHiLo,
    LoHiHi,
    HiHi,
}

/// Ratio that counts as `<<` between band scales.
pub const SEPARATION: f64 = 8.0;

/// Disjoint classification of a band triple: `hi_lo_lo` if slots 2 and 3 sit below
/// slot 1 by the separation factor, `lo_hi_lo` likewise around slot 2, `lo_hi_hi`
/// if slot 1 sits below both others, and `hi_hi` for every remaining triple.
pub fn classify(n1: f64, n2: f64, n3: f64) -> InteractionMode {
    if SEPARATION * n2 <= n1 && SEPARATION * n3 <= n1 {
        InteractionMode::HiLoLo
    } else if SEPARATION * n1 <= n2 && SEPARATION * n3 <= n2 {
        InteractionMode::LoHiLo
    } else if SEPARATION * n1 <= n2.min(n3) {
        InteractionMode::LoHiHi
    } else {
        InteractionMode::HiHi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub mode: InteractionMode,
    pub y: YNorm,
    /// `||I(Pi_mode)||_{Y^nu_N}`.
    pub value: f64,
    /// `sup_t ||Pi_mode|| / sup_t ||N(phi1, phi2, phi3)||`.
    pub share: f64,
}

fn physical_with(tr: &mut Transformer, coeffs: &[C64], sym: impl Fn(f64) -> f64) -> Vec<C64> {
    let g = tr.grid().clone();
    let mut c = coeffs.to_vec();
    apply_eta_real(&g, &mut c, sym);
    tr.inverse(&mut c);
    c
}

/// Physical values of the four paraproduct pieces at one snapshot.
fn split_snapshot(tr: &mut Transformer, phis: [&[C64]; 3]) -> [Vec<C64>; 4] {
    let g = tr.grid().clone();
    let bands = g.dyadic_bands();
    let len = g.len();
    let band = |tr: &mut Transformer, c: &[C64], m: f64| physical_with(tr, c, |e| crate::multipliers::dyadic_symbol(m, e));
    // P_{<=K} with K = M / SEPARATION; empty when no band fits
    let below = |tr: &mut Transformer, c: &[C64], m: f64| -> Option<Vec<C64>> {
        let k = m / SEPARATION;
        (k >= 1.0).then(|| physical_with(tr, c, |e| phi_lp(e / k)))
    };
    let full: Vec<Vec<C64>> = phis.iter().map(|c| physical_with(tr, c, |_| 1.0)).collect();
    let zero = C64::new(0.0, 0.0);
    let mut hll = vec![zero; len];
    let mut lhl = vec![zero; len];
    let mut lhh = vec![zero; len];
    let pieces: Vec<Vec<Vec<C64>>> = (0..3)
        .map(|j| bands.iter().map(|&m| band(tr, phis[j], m)).collect())
        .collect();
    for (b, &m) in bands.iter().enumerate() {
        if let (Some(l2), Some(l3)) = (below(tr, phis[1], m), below(tr, phis[2], m)) {
            for i in 0..len {
                hll[i] += n3(pieces[0][b][i], l2[i], l3[i]);
            }
        }
        if let (Some(l1), Some(l3)) = (below(tr, phis[0], m), below(tr, phis[2], m)) {
            for i in 0..len {
                lhl[i] += n3(l1[i], pieces[1][b][i], l3[i]);
            }
        }
    }
    for (b2, &m2) in bands.iter().enumerate() {
        for (b3, &m3) in bands.iter().enumerate() {
            if SEPARATION * m3 <= m2 {
                continue;
            }
            if let Some(l1) = below(tr, phis[0], m2.min(m3)) {
                for i in 0..len {
                    lhh[i] += n3(l1[i], pieces[1][b2][i], pieces[2][b3][i]);
                }
            }
        }
    }
    let hh: Vec<C64> = (0..len)
        .map(|i| n3(full[0][i], full[1][i], full[2][i]) - hll[i] - lhl[i] - lhh[i])
        .collect();
    [hll, lhl, lhh, hh]
}

/// `||I(Pi_mode(phi1, phi2, phi3))||_{Y^nu_N}`. The four modes partition the band
/// triples, so they sum to `N(phi1, phi2, phi3)` exactly.
pub fn interaction_split(
    phis: [&Trajectory; 3],
    mode: InteractionMode,
    y: &YParams,
) -> Result<InteractionReport> {
    let g = phis[0].grid().clone();
    for p in &phis[1..] {
        g.check_same(p.grid())?;
        if p.len() != phis[0].len() || p.n_back() != phis[0].n_back() || p.dt() != phis[0].dt() {
            return param("interaction inputs are not snapshot-aligned");
        }
    }
    let slot = match mode {
        InteractionMode::HiLoLo => 0,
        InteractionMode::LoHiLo => 1,
        InteractionMode::LoHiHi => 2,
        InteractionMode::HiHi => 3,
    };
    let mut tr = Transformer::new(&g);
    let mut sup_piece: f64 = 0.0;
    let mut sup_total: f64 = 0.0;
    let forcing = phis[0].map_snapshots(|i, _| {
        let parts = split_snapshot(&mut tr, [phis[0].snapshot(i), phis[1].snapshot(i), phis[2].snapshot(i)]);
        let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let total: Vec<C64> = (0..g.len()).map(|k| parts.iter().map(|p| p[k]).sum()).collect();
        sup_total = sup_total.max(norm(&total));
        sup_piece = sup_piece.max(norm(&parts[slot]));
        let mut c = parts[slot].clone();
        tr.forward(&mut c);
        c
    });
    let d = duhamel_trajectory(&forcing)?;
    let yn = y_norm(&d, y)?;
    Ok(InteractionReport {
        mode,
        value: yn.total(),
        y: yn,
        share: if sup_total > 0.0 { sup_piece / sup_total } else { 0.0 },
    })
}

/// `true` when every grid `eta` of the field lies in `[lo, hi]` in absolute value.
pub fn supported_in(field: &Field, lo: f64, hi: f64) -> bool {
    let f = field.fourier();
    let g: &Grid = f.grid();
    let ny = g.ny();
    f.values()
        .iter()
        .enumerate()
        .all(|(i, v)| *v == C64::new(0.0, 0.0) || (lo..=hi).contains(&g.eta()[i % ny].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::power_law;
    use std::f64::consts::PI;

    fn small_grid() -> Grid {
        Grid::new(8, 512, 8.0, 16.0 * PI).unwrap()
    }

    fn small_params() -> AnsatzParams {
        AnsatzParams {
            n0: 2,
            nmax: 8,
            t0: 1.0 / 16.0,
            dt: 1.0 / 64.0,
            ..AnsatzParams::default()
        }
    }

    #[test]
    fn params_validation() {
        let p = AnsatzParams::default();
        p.validate().unwrap();
        assert!((p.delta() - 0.732 * 0.04).abs() < 1e-15);
        assert_eq!(p.levels(), vec![16, 32, 64]);
        for bad in [
            AnsatzParams { sigma: 0.08, ..p.clone() },
            AnsatzParams { gamma: 1.0, ..p.clone() },
            AnsatzParams { alpha: 0.42, ..p.clone() },
            AnsatzParams { d_p: 2.2, ..p.clone() },
            AnsatzParams { rho_besov: 0.07, ..p.clone() },
            AnsatzParams { nmax: 4, ..p.clone() },
            AnsatzParams { dt: 0.03, ..p.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn zero_data_gives_zero_ladder() {
        let g = small_grid();
        let st = run_ladder(&Field::zeros(&g, crate::grid::Repr::Fourier), &small_params()).unwrap();
        assert_eq!(st.levels.len(), 2);
        assert_eq!(st.t_omega, 1.0 / 16.0);
        assert!(!st.t_omega_flag);
        for l in &st.levels {
            assert_eq!(l.u.sup_l2(), 0.0);
            assert!(l.cutoffs.all_one());
        }
        let rows = convergence_report(&st, 0.48, 0.07).unwrap();
        assert!(rows.iter().all(|r| r.diff == 0.0));
    }

    #[test]
    fn empty_ladder_is_base_only() {
        let g = small_grid();
        let p = AnsatzParams { nmax: 2, ..small_params() };
        let f0 = power_law(&g, 0.7, 0.3).unwrap();
        let st = run_ladder(&f0, &p).unwrap();
        assert!(st.levels.is_empty());
        let direct = solve_nls_with(&truncate_leq(&f0, &st.spec, 2).unwrap(), p.t0, p.dt, &p.nls_config()).unwrap();
        assert_eq!(st.top().sup_l2_diff(&direct).unwrap(), 0.0);
    }

    #[test]
    fn ladder_bookkeeping_and_blocks() {
        let g = small_grid();
        let p = small_params();
        let f0 = power_law(&g, 0.7, 0.3).unwrap();
        let st = run_ladder(&f0, &p).unwrap();
        let top = st.top();
        let scale = top.sup_l2();
        assert!(st.telescoped().unwrap().sup_l2_diff(top).unwrap() <= 1e-12 * scale);
        let init = top.initial().sub(&st.top_datum().unwrap()).unwrap().l2_norm();
        assert!(init <= 1e-12 * scale);
        for l in &st.levels {
            assert_eq!(l.w.initial().l2_norm(), 0.0);
            assert!(l.cutoffs.is_monotone());
            let rep = block_decomposition(&st, l.n).unwrap();
            assert!(rep.residual < 1e-9, "{}", rep.residual);
            assert_eq!(rep.blocks.len(), l.n as usize);
        }
        // the non-dyadic step at n = N is the dyadic level
        let same = general_n_step(&st, 8).unwrap();
        assert_eq!(same.u.sup_l2_diff(&st.u(8).unwrap()).unwrap(), 0.0);
        let mid = general_n_step(&st, 5).unwrap();
        assert!(mid.f.initial().l2_norm() > 0.0);
        assert!(general_n_step(&st, 4).is_ok());
        assert!(general_n_step(&st, 9).is_err());
    }

    #[test]
    fn general_step_index_arithmetic() {
        let g = small_grid();
        let f0 = power_law(&g, 0.7, 0.3).unwrap();
        let spec = RandomSpec::for_grid(3, &g);
        // n = N/2 + 1 with N = 8 carries the two blocks k = +-4
        let d = randomize_where(&f0, &spec, |k| (4..5).contains(&k.unsigned_abs())).unwrap();
        let both = project_unit(&f0, 4).unwrap().scale(spec.g(4)).add(&project_unit(&f0, -4).unwrap().scale(spec.g(-4))).unwrap();
        assert!(d.sub(&both).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn seed_surgery_leaves_level_unchanged() {
        let g = small_grid();
        let p = small_params();
        let f0 = power_law(&g, 0.7, 0.3).unwrap();
        let spec = RandomSpec::for_grid(p.seed, &g);
        let a = run_ladder_with_spec(&f0, &p, &spec).unwrap();
        let mut cut = spec.clone();
        for k in [8, -8, 9, -30, 60] {
            cut = cut.with_override(k, C64::new(5.0, -2.0));
        }
        let b = run_ladder_with_spec(&f0, &p, &cut).unwrap();
        for n in [4, 8] {
            assert_eq!(a.level(n).unwrap().f.snapshots(), b.level(n).unwrap().f.snapshots());
        }
    }

    #[test]
    fn large_data_trips_cutoffs() {
        let g = small_grid();
        let p = small_params();
        let f0 = power_law(&g, 0.7, 300.0).unwrap();
        let st = run_ladder(&f0, &p).unwrap();
        assert!(st.t_omega < p.t0);
        assert!(st.levels.iter().any(|l| !l.cutoffs.all_one()));
    }

    #[test]
    fn classification_is_a_partition() {
        assert_eq!(classify(64.0, 1.0, 2.0), InteractionMode::HiLoLo);
        assert_eq!(classify(1.0, 64.0, 2.0), InteractionMode::LoHiLo);
        assert_eq!(classify(1.0, 64.0, 32.0), InteractionMode::LoHiHi);
        assert_eq!(classify(16.0, 16.0, 16.0), InteractionMode::HiHi);
        assert_eq!(classify(4.0, 64.0, 16.0), InteractionMode::HiHi);
    }

    #[test]
    fn interaction_split_trivial_cases() {
        let g = Grid::new(4, 512, 4.0, 16.0 * PI).unwrap();
        let dt = 1.0 / 32.0;
        // fields with y-spectrum exactly at |eta| = M lie in the single band M
        let at = |m: f64| {
            let f = Field::from_spectrum(&g, |xi, eta| {
                if eta.abs() == m {
                    C64::new((-xi * xi).exp(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            Trajectory::stationary(&f, dt, 2)
        };
        let y = YParams { n: 16.0, nu: 0.58, sigma: 0.07, alpha: 0.5, d: 0.5 };
        let (lo, hi) = (at(1.0), at(16.0));
        for mode in [InteractionMode::HiLoLo, InteractionMode::LoHiLo, InteractionMode::LoHiHi] {
            let r = interaction_split([&hi, &hi, &hi], mode, &y).unwrap();
            assert!(r.share < 1e-12, "{mode:?} {}", r.share);
        }
        let r = interaction_split([&hi, &hi, &hi], InteractionMode::HiHi, &y).unwrap();
        assert!((r.share - 1.0).abs() < 1e-12 && r.value > 0.0);
        let r = interaction_split([&lo, &hi, &lo], InteractionMode::LoHiLo, &y).unwrap();
        assert!((r.share - 1.0).abs() < 1e-12);
        for mode in [InteractionMode::HiLoLo, InteractionMode::LoHiHi, InteractionMode::HiHi] {
            let r = interaction_split([&lo, &hi, &lo], mode, &y).unwrap();
            assert!(r.share < 1e-12, "{mode:?} {}", r.share);
        }
    }

    #[test]
    fn residual_of_exact_free_flow_vanishes() {
        let g = small_grid();
        let f0 = power_law(&g, 0.7, 0.3).unwrap();
        let traj = solve_nls_with(&f0, 0.125, 1.0 / 64.0, &NlsConfig { mu: 0.0, dealias: false, blowup_ceiling: 1e6 }).unwrap();
        assert!(untruncated_residual(&traj, 0.0).unwrap() < 1e-13);
        assert!(supported_in(&project_unit(&f0, 5).unwrap(), 4.0, 6.0));
    }
}
