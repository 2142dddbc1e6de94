//! Wiener randomization in the y-frequency with counter-based complex Gaussians.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::{Field, Grid};
use crate::multipliers::phi_unit;
use crate::C64;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a word sequence; each call is independent of evaluation order.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |h, &w| mix(h.wrapping_add(GOLDEN) ^ w))
}

fn zigzag(k: i64) -> u64 {
    ((k << 1) ^ (k >> 63)) as u64
}

fn uniform(h: u64) -> f64 {
    ((h >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Normalized complex Gaussian for `(seed, stream, k)`: real and imaginary parts
/// independent with variance 1/2 each.
pub fn complex_gaussian(seed: u64, stream: u64, k: i64) -> C64 {
    let z = zigzag(k);
    let u1 = uniform(hash_words(&[seed, stream, z, 0]));
    let u2 = uniform(hash_words(&[seed, stream, z, 1]));
    C64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
}

/// Seed and index range for the randomization; `overrides` replaces chosen `g_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub master_seed: u64,
    pub k_min: i64,
    pub k_max: i64,
    #[serde(default)]
    pub overrides: BTreeMap<i64, (f64, f64)>,
}

impl RandomSpec {
    pub fn new(master_seed: u64, k_min: i64, k_max: i64) -> Self {
        Self {
            master_seed,
            k_min,
            k_max,
            overrides: BTreeMap::new(),
        }
    }

    /// Symmetric range `|k| <= k_abs`.
    pub fn symmetric(master_seed: u64, k_abs: i64) -> Self {
        Self::new(master_seed, -k_abs, k_abs)
    }

    /// Widest symmetric range the grid resolves.
    pub fn for_grid(master_seed: u64, grid: &Grid) -> Self {
        Self::symmetric(master_seed, grid.eta_max().floor() as i64 - 1)
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    pub fn with_override(mut self, k: i64, g: C64) -> Self {
        self.overrides.insert(k, (g.re, g.im));
        self
    }

    pub fn contains(&self, k: i64) -> bool {
        self.k_min <= k && k <= self.k_max
    }

    /// `g_k`, depending on `(master_seed, k)` only (or on an override).
    pub fn g(&self, k: i64) -> C64 {
        match self.overrides.get(&k) {
            Some(&(re, im)) => C64::new(re, im),
            None => complex_gaussian(self.master_seed, 0, k),
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        grid.require_unit_scale()?;
        if self.k_min > self.k_max {
            return param(format!("empty k range [{}, {}]", self.k_min, self.k_max));
        }
        let reach = self.k_min.unsigned_abs().max(self.k_max.unsigned_abs()) as f64 + 1.0;
        grid.require_eta(reach)
    }
}

/// Per-column multiplier `sum_k c_k phi_unit(eta - k)`; at most two blocks meet any `eta`.
pub fn block_multiplier(grid: &Grid, coeff: impl Fn(i64) -> Option<C64>) -> Vec<C64> {
    grid.eta()
        .iter()
        .map(|&e| {
            let k0 = e.floor() as i64;
            let mut acc = C64::new(0.0, 0.0);
            for k in [k0, k0 + 1] {
                let w = phi_unit(e - k as f64);
                if w != 0.0 {
                    if let Some(c) = coeff(k) {
                        acc += c * w;
                    }
                }
            }
            acc
        })
        .collect()
}

fn apply_columns(f0: &Field, col: &[C64]) -> Field {
    let mut f = f0.fourier();
    let ny = f.grid().ny();
    for row in f.values_mut().chunks_mut(ny) {
        for (v, c) in row.iter_mut().zip(col) {
            *v *= c;
        }
    }
    f
}

/// `sum_{k in K} g_k P_{1,k} f0` over the indices of the spec accepted by `keep`.
pub fn randomize_where(f0: &Field, spec: &RandomSpec, keep: impl Fn(i64) -> bool) -> Result<Field> {
    spec.check(f0.grid())?;
    let col = block_multiplier(f0.grid(), |k| {
        (spec.contains(k) && keep(k)).then(|| spec.g(k))
    });
    Ok(apply_columns(f0, &col))
}

/// `f0^omega = sum_k g_k P_{1,k} f0` over the spec's range. Blocks outside the
/// range are dropped.
pub fn randomize(f0: &Field, spec: &RandomSpec) -> Result<Field> {
    randomize_where(f0, spec, |_| true)
}

/// Dyadic block `P_N f0^omega = sum_{N/2 <= |k| < N} g_k P_{1,k} f0`; for `N = 1` this is `g_0 P_{1,0} f0`.
pub fn random_block(f0: &Field, spec: &RandomSpec, n: u64) -> Result<Field> {
    if !n.is_power_of_two() {
        return param(format!("block scale {n} is not dyadic"));
    }
    randomize_where(f0, spec, |k| in_block(k, n))
}

/// Whether `k` belongs to the dyadic block `N`.
pub fn in_block(k: i64, n: u64) -> bool {
    let a = k.unsigned_abs();
    if n == 1 {
        a == 0
    } else {
        n / 2 <= a && a < n
    }
}

/// `sum_{|k| < n} g_k P_{1,k} f0`. For dyadic `N` this is the sum of the blocks
/// `random_block(M)` with `M <= N`.
pub fn truncate_leq(f0: &Field, spec: &RandomSpec, n: u64) -> Result<Field> {
    randomize_where(f0, spec, |k| k.unsigned_abs() < n)
}

/// Squared norm `||f0^omega||^2` for many seeds from per-column masses, without FFTs.
pub struct MassSampler {
    grid: Grid,
    column_mass: Vec<f64>,
    spec: RandomSpec,
}

impl MassSampler {
    pub fn new(f0: &Field, spec: &RandomSpec) -> Result<Self> {
        spec.check(f0.grid())?;
        let f = f0.fourier();
        let g = f.grid().clone();
        let ny = g.ny();
        let mut column_mass = vec![0.0; ny];
        for row in f.values().chunks(ny) {
            for (m, v) in row.iter().enumerate() {
                column_mass[m] += v.norm_sqr();
            }
        }
        let area = g.area();
        column_mass.iter_mut().for_each(|c| *c *= area);
        Ok(Self {
            grid: g,
            column_mass,
            spec: spec.clone(),
        })
    }

    /// `||sum_{k: keep(k)} g_k P_{1,k} f0||^2` for the given seed.
    pub fn mass(&self, seed: u64, keep: impl Fn(i64) -> bool) -> f64 {
        let spec = self.spec.with_seed(seed);
        let col = block_multiplier(&self.grid, |k| {
            (spec.contains(k) && keep(k)).then(|| spec.g(k))
        });
        col.iter()
            .zip(&self.column_mass)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum()
    }

    /// The decoupled expectation `sum_k ||P_{1,k} f0||^2`.
    pub fn expected_mass(&self, keep: impl Fn(i64) -> bool) -> f64 {
        let mut total = 0.0;
        for k in self.spec.k_min..=self.spec.k_max {
            if !keep(k) {
                continue;
            }
            for (&e, w) in self.grid.eta().iter().zip(&self.column_mass) {
                let p = phi_unit(e - k as f64);
                total += p * p * w;
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhintchineStats {
    pub p: u32,
    pub samples: usize,
    pub ratio: f64,
    pub stderr: f64,
    pub seed: u64,
    /// Set when the coefficient vector vanishes and the ratio is reported as 0.
    pub degenerate: bool,
}

impl KhintchineStats {
    pub const CSV_HEADER: &'static str = "p,samples,ratio,stderr,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{}",
            self.p, self.samples, self.ratio, self.stderr, self.seed
        )
    }
}

/// Monte-Carlo estimate of `(E|sum g_k a_k|^p)^{1/p} / ||a||_2` with a delta-method error.
pub fn khintchine_stats(a: &[f64], p: u32, samples: usize, seed: u64) -> Result<KhintchineStats> {
    if p == 0 || p % 2 != 0 {
        return param(format!("moment order {p} must be a positive even integer"));
    }
    if samples < 2 {
        return param("need at least two samples");
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(KhintchineStats {
            p,
            samples,
            ratio: 0.0,
            stderr: 0.0,
            seed,
            degenerate: true,
        });
    }
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let z: C64 = a
                .iter()
                .enumerate()
                .map(|(k, &ak)| complex_gaussian(seed, s + 1, k as i64) * ak)
                .sum();
            (z.norm() / norm).powi(p as i32)
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se_mean = (var / n).sqrt();
    let pf = p as f64;
    let ratio = mean.powf(1.0 / pf);
    Ok(KhintchineStats {
        p,
        samples,
        ratio,
        stderr: ratio / (pf * mean) * se_mean,
        seed,
        degenerate: false,
    })
}

/// Pearson correlation of two samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Correlation across seeds of the block norms `||P_{N1} f0^omega||` and `||P_{N2} f0^omega||`.
pub fn block_norm_correlation(
    f0: &Field,
    spec: &RandomSpec,
    n1: u64,
    n2: u64,
    samples: usize,
) -> Result<f64> {
    let sampler = MassSampler::new(f0, spec)?;
    let pairs: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = spec.master_seed.wrapping_add(i);
            (
                sampler.mass(seed, |k| in_block(k, n1)).sqrt(),
                sampler.mass(seed, |k| in_block(k, n2)).sqrt(),
            )
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(correlation(&a, &b))
}
