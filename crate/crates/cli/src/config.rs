//! Plain `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys, repeated keys
//! and unparsable values are rejected with the offending line number.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hwlab::ansatz::AnsatzParams;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    Ladder,
    Exponents,
    Illposed,
    Randstats,
    Norms,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Simulate,
        Kind::Ladder,
        Kind::Exponents,
        Kind::Illposed,
        Kind::Randstats,
        Kind::Norms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Ladder => "ladder",
            Kind::Exponents => "exponents",
            Kind::Illposed => "illposed",
            Kind::Randstats => "randstats",
            Kind::Norms => "norms",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Half-length of the time interval and the step.
    pub t0: f64,
    pub dt: f64,
    pub mu: f64,
    pub dealias: bool,
    pub seed: u64,
    /// Exponents, weights and ladder scales; its time, coupling and seed fields are
    /// overwritten from the entries above.
    pub ansatz: AnsatzParams,
    /// Regularity and `L^2` size of the power-law datum.
    pub data_reg: f64,
    pub data_amp: f64,
    pub samples: usize,
    pub moment: u32,
    pub exponent_step: f64,
    /// Regularity for the Strichartz-failure table and for the inflation schedule.
    pub failure_s: f64,
    pub inflation_s: f64,
    /// Splitting steps of the PDE comparison in the inflation runs; 0 skips it.
    pub pde_steps: usize,
    pub snapshots: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ansatz = AnsatzParams::default();
        Self {
            kind: Kind::Simulate,
            nx: 32,
            ny: 4096,
            lx: 8.0,
            ly: 16.0 * std::f64::consts::PI,
            t0: ansatz.t0,
            dt: ansatz.dt,
            mu: ansatz.mu,
            dealias: false,
            seed: ansatz.seed,
            ansatz,
            data_reg: 0.73,
            data_amp: 0.5,
            samples: 100_000,
            moment: 4,
            exponent_step: 1e-4,
            failure_s: 0.3,
            inflation_s: 0.15,
            pde_steps: 0,
            snapshots: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every key in the order used by [`ExperimentConfig::to_text`].
pub const KEYS: [&str; 32] = [
    "experiment.kind",
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "time.t0",
    "time.dt",
    "physics.mu",
    "physics.dealias",
    "random.seed",
    "ansatz.s",
    "ansatz.sigma",
    "ansatz.sigma_p",
    "ansatz.nu",
    "ansatz.alpha",
    "ansatz.gamma",
    "ansatz.rho",
    "ansatz.D",
    "ansatz.Dp",
    "ansatz.Dpp",
    "ansatz.n0",
    "ansatz.nmax",
    "data.reg",
    "data.amp",
    "randstats.samples",
    "randstats.p",
    "exponents.step",
    "illposed.s",
    "illposed.inflation_s",
    "illposed.pde_steps",
    "output.snapshots",
    "output.dir",
];

fn parse<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let a = &mut self.ansatz;
        match key {
            "experiment.kind" => self.kind = v.parse()?,
            "grid.nx" => self.nx = parse(v)?,
            "grid.ny" => self.ny = parse(v)?,
            "grid.lx" => self.lx = parse(v)?,
            "grid.ly" => self.ly = parse(v)?,
            "time.t0" => self.t0 = parse(v)?,
            "time.dt" => self.dt = parse(v)?,
            "physics.mu" => self.mu = parse(v)?,
            "physics.dealias" => self.dealias = parse(v)?,
            "random.seed" => self.seed = parse(v)?,
            "ansatz.s" => a.s = parse(v)?,
            "ansatz.sigma" => a.sigma = parse(v)?,
            "ansatz.sigma_p" => a.sigma_p = parse(v)?,
            "ansatz.nu" => a.nu = parse(v)?,
            "ansatz.alpha" => a.alpha = parse(v)?,
            "ansatz.gamma" => a.gamma = parse(v)?,
            "ansatz.rho" => a.rho_besov = parse(v)?,
            "ansatz.D" => a.d = parse(v)?,
            "ansatz.Dp" => a.d_p = parse(v)?,
            "ansatz.Dpp" => a.d_pp = parse(v)?,
            "ansatz.n0" => a.n0 = parse(v)?,
            "ansatz.nmax" => a.nmax = parse(v)?,
            "data.reg" => self.data_reg = parse(v)?,
            "data.amp" => self.data_amp = parse(v)?,
            "randstats.samples" => self.samples = parse(v)?,
            "randstats.p" => self.moment = parse(v)?,
            "exponents.step" => self.exponent_step = parse(v)?,
            "illposed.s" => self.failure_s = parse(v)?,
            "illposed.inflation_s" => self.inflation_s = parse(v)?,
            "illposed.pde_steps" => self.pde_steps = parse(v)?,
            "output.snapshots" => self.snapshots = parse(v)?,
            "output.dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let a = &self.ansatz;
        match key {
            "experiment.kind" => self.kind.to_string(),
            "grid.nx" => self.nx.to_string(),
            "grid.ny" => self.ny.to_string(),
            "grid.lx" => format!("{:?}", self.lx),
            "grid.ly" => format!("{:?}", self.ly),
            "time.t0" => format!("{:?}", self.t0),
            "time.dt" => format!("{:?}", self.dt),
            "physics.mu" => format!("{:?}", self.mu),
            "physics.dealias" => self.dealias.to_string(),
            "random.seed" => self.seed.to_string(),
            "ansatz.s" => format!("{:?}", a.s),
            "ansatz.sigma" => format!("{:?}", a.sigma),
            "ansatz.sigma_p" => format!("{:?}", a.sigma_p),
            "ansatz.nu" => format!("{:?}", a.nu),
            "ansatz.alpha" => format!("{:?}", a.alpha),
            "ansatz.gamma" => format!("{:?}", a.gamma),
            "ansatz.rho" => format!("{:?}", a.rho_besov),
            "ansatz.D" => format!("{:?}", a.d),
            "ansatz.Dp" => format!("{:?}", a.d_p),
            "ansatz.Dpp" => format!("{:?}", a.d_pp),
            "ansatz.n0" => a.n0.to_string(),
            "ansatz.nmax" => a.nmax.to_string(),
            "data.reg" => format!("{:?}", self.data_reg),
            "data.amp" => format!("{:?}", self.data_amp),
            "randstats.samples" => self.samples.to_string(),
            "randstats.p" => self.moment.to_string(),
            "exponents.step" => format!("{:?}", self.exponent_step),
            "illposed.s" => format!("{:?}", self.failure_s),
            "illposed.inflation_s" => format!("{:?}", self.inflation_s),
            "illposed.pde_steps" => self.pde_steps.to_string(),
            "output.snapshots" => self.snapshots.to_string(),
            "output.dir" => self.out_dir.display().to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Parses config text on top of the defaults. `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| CliError::Config {
                origin: origin.to_string(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(err(format!("key `{k}` given twice")));
            }
            cfg.set(k, v).map_err(|m| err(format!("{k}: {m}")))?;
            seen.push(k.to_string());
        }
        cfg.sync_ansatz();
        Ok(cfg)
    }

    /// Reads a config file, or the `config` entry of a run manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        let origin = path.display().to_string();
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{origin}: {e}")))?;
            let inner = v
                .get("config")
                .and_then(|c| c.as_str())
                .ok_or_else(|| CliError::Invalid(format!("{origin}: manifest has no `config` entry")))?;
            return Self::parse(inner, &origin);
        }
        Self::parse(&text, &origin)
    }

    /// Canonical text listing every key; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k)))
            .collect()
    }

    pub fn sync_ansatz(&mut self) {
        self.ansatz.t0 = self.t0;
        self.ansatz.dt = self.dt;
        self.ansatz.mu = self.mu;
        self.ansatz.seed = self.seed;
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_ansatz();
        self
    }
}
