//! Experiment drivers. Each returns named report files; [`execute`] writes them with
//! a run manifest.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use hwlab::ansatz::{convergence_report, run_ladder};
use hwlab::data::power_law;
use hwlab::evolve::{export_trajectory, solve_nls_with, NlsConfig};
use hwlab::exponents::{analytic_optimum, gamma_table, LpSolution};
use hwlab::illposedness::{
    inflation_run, k_rho_norms, k_rho_sobolev_spectral, strichartz_failure, InflationConfig, InflationRow,
    InflationSchedule,
};
use hwlab::norms::{energy, mass, sobolev_aniso, sobolev_aniso_homogeneous, sobolev_components};
use hwlab::random_data::{block_norm_correlation, khintchine_stats, randomize, KhintchineStats, RandomSpec};
use hwlab::{Field, Grid};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::CliError;

/// Report files of one run and the invariants it flagged.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub failures: Vec<String>,
}

impl RunOutput {
    fn file(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }
}

fn invalid(e: hwlab::LabError) -> CliError {
    CliError::Invalid(e.to_string())
}

fn grid(cfg: &ExperimentConfig) -> Result<Grid, CliError> {
    Grid::new(cfg.nx, cfg.ny, cfg.lx, cfg.ly).map_err(invalid)
}

fn datum(cfg: &ExperimentConfig, g: &Grid) -> Result<Field, CliError> {
    power_law(g, cfg.data_reg, cfg.data_amp).map_err(invalid)
}

fn random_datum(cfg: &ExperimentConfig, g: &Grid) -> Result<Field, CliError> {
    let f0 = datum(cfg, g)?;
    Ok(randomize(&f0, &RandomSpec::for_grid(cfg.seed, g))?)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let g = grid(cfg)?;
    let f0 = random_datum(cfg, &g)?;
    let nls = NlsConfig {
        mu: cfg.mu,
        dealias: cfg.dealias,
        ..NlsConfig::default()
    };
    let traj = solve_nls_with(&f0, cfg.t0, cfg.dt, &nls).map_err(invalid)?;
    let mut out = RunOutput::default();
    let mut csv = String::from("t,mass,energy,hs\n");
    let (m0, e0) = (mass(&f0), energy(&f0, cfg.mu));
    let (mut mass_drift, mut energy_drift) = (0.0f64, 0.0f64);
    for i in 0..traj.len() {
        let u = traj.field(i);
        let (m, e) = (mass(&u), energy(&u, cfg.mu));
        mass_drift = mass_drift.max((m / m0 - 1.0).abs());
        energy_drift = energy_drift.max(((e - e0) / e0).abs());
        csv += &format!("{:?},{:?},{:?},{:?}\n", traj.time(i), m, e, sobolev_aniso(&u, cfg.ansatz.s));
    }
    out.file("simulate.csv", csv);
    out.file(
        "conservation.json",
        serde_json::to_string_pretty(&json!({
            "mass_drift": mass_drift,
            "energy_drift": energy_drift,
            "snapshots": traj.len(),
            "blowup_time": traj.flags.blowup_time,
        }))
        .expect("plain json"),
    );
    out.file(
        "trajectory.json",
        serde_json::to_string_pretty(&json!({
            "dt": traj.dt(),
            "T": cfg.t0,
            "times": traj.times(),
            "flags": traj.flags,
        }))
        .expect("plain json"),
    );
    if cfg.snapshots {
        export_trajectory(&traj, &out_dir.join("snapshots"))?;
    }
    out.check(traj.flags.blowup_time.is_none(), "blow-up ceiling crossed".into());
    if !cfg.dealias {
        out.check(mass_drift <= 1e-10, format!("relative mass drift {mass_drift:e}"));
    }
    Ok(out)
}

pub fn ladder(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let g = grid(cfg)?;
    cfg.ansatz.validate().map_err(invalid)?;
    g.require_eta(4.0 * cfg.ansatz.nmax as f64).map_err(invalid)?;
    let f0 = datum(cfg, &g)?;
    let state = run_ladder(&f0, &cfg.ansatz)?;
    let mut out = RunOutput::default();
    out.file(
        "ladder.json",
        serde_json::to_string_pretty(&state.manifest()).expect("plain json"),
    );
    let mut csv = String::from("N,diff,ratio\n");
    for r in convergence_report(&state, cfg.ansatz.s, cfg.ansatz.sigma)? {
        let ratio = r.ratio.map_or(String::new(), |v| format!("{v:?}"));
        csv += &format!("{},{:?},{}\n", r.n, r.diff, ratio);
    }
    out.file("convergence.csv", csv);
    let mut levels = String::from("N,apriori_constant,cutoffs_all_one\n");
    for l in &state.levels {
        levels += &format!("{},{:?},{}\n", l.n, l.apriori_constant, l.cutoffs.all_one());
    }
    out.file("levels.csv", levels);
    out.check(!state.t_omega_flag, "existence-time condition fails at the first step".into());
    Ok(out)
}

pub fn exponents(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let table = gamma_table(cfg.exponent_step).map_err(invalid)?;
    let mut csv = format!("{}\n", LpSolution::CSV_HEADER);
    for row in &table {
        csv += &format!("{}\n", row.csv_row());
    }
    let best = table
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("table is nonempty");
    let a = analytic_optimum();
    let mut opt = String::from("source,gamma,s,sigma_p,sigma,nu\n");
    opt += &format!(
        "grid,{:?},{:?},{:?},{:?},{:?}\n",
        best.tuple.gamma, best.tuple.s, best.tuple.sigma_p, best.tuple.sigma, best.tuple.nu
    );
    opt += &format!("analytic,{:?},{:?},{:?},{:?},{:?}\n", a.gamma, a.s, a.sigma_p, a.sigma, a.nu);
    let mut out = RunOutput::default();
    out.file("exponents.csv", csv);
    out.file("optimum.csv", opt);
    out.check(best.objective < 13.0 / 28.0, format!("optimum s={} is not below 13/28", best.objective));
    Ok(out)
}

pub const FAILURE_RHOS: [f64; 3] = [0.2, 0.1, 0.05];

pub fn illposed(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let s = cfg.failure_s;
    let wave = Grid::new(64, 16384, 32.0, 64.0)?;
    let rep = strichartz_failure(&wave, &FAILURE_RHOS, &[s], 64).map_err(invalid)?.remove(0);
    let mut csv = String::from("rho,L2,L4,Hs_half,ratio,slope\n");
    for (r, row) in FAILURE_RHOS.iter().zip(&rep.rows) {
        let k = k_rho_norms(1 << 18, 1024.0, *r)?;
        let h = k_rho_sobolev_spectral(1 << 18, 1024.0, *r, s).map_err(invalid)?;
        csv += &format!("{:?},{:?},{:?},{:?},{:?},{:?}\n", r, k.l2_sq, k.l4_4, h, row.ratio, rep.slope);
    }
    let mut failure = String::from(hwlab::illposedness::StrichartzFailure::CSV_HEADER);
    failure.push('\n');
    failure += &rep.csv();

    let sched = InflationSchedule::new(vec![4.0, 8.0, 16.0], 0.1, 0.9, cfg.inflation_s).map_err(invalid)?;
    let profile = Grid::for_profiles(256, 2048, 1.0, 0.25)?;
    let rows = inflation_run(
        &sched,
        &profile,
        &InflationConfig {
            mu: -1.0,
            pde_steps: (cfg.pde_steps > 0).then_some(cfg.pde_steps),
        },
    )?;
    let mut infl = format!("{}\n", InflationRow::CSV_HEADER);
    for r in &rows {
        infl += &format!("{}\n", r.csv());
    }
    let mut out = RunOutput::default();
    out.file("krho.csv", csv);
    out.file("strichartz_failure.csv", failure);
    out.file("inflation.csv", infl);
    for r in &rows {
        out.check(
            (r.mass_tn / r.mass0 - 1.0).abs() <= 1e-12,
            format!("ODE profile changed the mass at n={}", r.n),
        );
    }
    Ok(out)
}

pub fn randstats(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let a: Vec<f64> = (0..64).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let k = khintchine_stats(&a, cfg.moment, cfg.samples, cfg.seed).map_err(invalid)?;
    let mut out = RunOutput::default();
    out.file("khintchine.csv", format!("{}\n{}\n", KhintchineStats::CSV_HEADER, k.csv_row()));
    let g = grid(cfg)?;
    let f0 = datum(cfg, &g)?;
    let seeds = cfg.samples.min(10_000);
    let spec = RandomSpec::for_grid(cfg.seed, &g);
    let mut csv = String::from("n1,n2,seeds,correlation\n");
    for (n1, n2) in [(4, 8), (8, 16), (16, 32)] {
        let c = block_norm_correlation(&f0, &spec, n1, n2, seeds)?;
        csv += &format!("{n1},{n2},{seeds},{c:?}\n");
    }
    out.file("block_correlation.csv", csv);
    Ok(out)
}

pub fn norms(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let g = grid(cfg)?;
    let f = random_datum(cfg, &g)?;
    let s = cfg.ansatz.s;
    let (hy, hx) = sobolev_components(&f, s, false);
    let rows = [
        ("mass", mass(&f)),
        ("energy", energy(&f, cfg.mu)),
        ("l4", hwlab::grid::lp_norm(&f, 4.0)?),
        ("hs_y", hy),
        ("hs_x", hx),
        ("hs", sobolev_aniso(&f, s)),
        ("hs_homogeneous", sobolev_aniso_homogeneous(&f, s)),
    ];
    let mut csv = String::from("quantity,value\n");
    for (k, v) in rows {
        csv += &format!("{k},{v:?}\n");
    }
    let mut out = RunOutput::default();
    out.file("norms.csv", csv);
    Ok(out)
}

pub fn dispatch(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    match cfg.kind {
        Kind::Simulate => simulate(cfg, out_dir),
        Kind::Ladder => ladder(cfg),
        Kind::Exponents => exponents(cfg),
        Kind::Illposed => illposed(cfg),
        Kind::Randstats => randstats(cfg),
        Kind::Norms => norms(cfg),
    }
}

/// Runs the experiment, writes its files and `run_manifest.json` under the output
/// directory, and returns the output. Flagged invariants become
/// [`CliError::Invariant`] after everything is written.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let out = dispatch(cfg, &dir)?;
    let text = cfg.to_text();
    let mut files = serde_json::Map::new();
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body)?;
        files.insert(name.clone(), json!(hex_digest(body.as_bytes())));
    }
    std::fs::write(dir.join("config.txt"), &text)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "kind": cfg.kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config_sha256": hex_digest(text.as_bytes()),
        "config": text,
        "timestamp_unix": stamp,
        "outputs": files,
        "invariant_failures": out.failures,
    });
    std::fs::write(
        dir.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("plain json"),
    )?;
    if !out.failures.is_empty() {
        return Err(CliError::Invariant(out.failures.join("; ")));
    }
    Ok(out)
}
