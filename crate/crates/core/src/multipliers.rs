//! Fourier multipliers: smooth bumps, Littlewood-Paley pieces, unit-scale blocks,
//! fractional derivatives and the free propagators.

use std::fmt;

use crate::error::{param, Result};
use crate::grid::{Field, Grid};
use crate::C64;

/// `s(t) = 1 / (1 + e^{1/t - 1/(1-t)})` on `(0, 1)`, clamped to 0 and 1 outside.
/// Smooth, increasing, and `s(t) + s(1 - t) = 1`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let e = 1.0 / t - 1.0 / (1.0 - t);
        if e > 700.0 {
            0.0
        } else {
            1.0 / (1.0 + e.exp())
        }
    }
}

/// Unit-scale bump: 1 on `|eta| <= 1/4`, 0 on `|eta| >= 3/4`; integer translates sum to one.
pub fn phi_unit(eta: f64) -> f64 {
    smoothstep(1.5 - 2.0 * eta.abs())
}

/// Low-pass bump: 1 on `|x| <= 1`, 0 on `|x| >= 2`.
pub fn phi_lp(x: f64) -> f64 {
    smoothstep(2.0 - x.abs())
}

/// Dyadic annulus piece `Phi(x) - Phi(2x)`, supported in `1/2 <= |x| <= 2`.
pub fn psi_lp(x: f64) -> f64 {
    phi_lp(x) - phi_lp(2.0 * x)
}

/// Fattened annulus `Phi(x/2) - Phi(4x)`, equal to one on the support of `psi_lp`.
pub fn psi_fat(x: f64) -> f64 {
    phi_lp(0.5 * x) - phi_lp(4.0 * x)
}

/// The fixed bump family used throughout.
#[derive(Clone, Copy, Debug, Default)]
pub struct BumpProfile;

impl BumpProfile {
    pub fn phi_unit(&self, eta: f64) -> f64 {
        phi_unit(eta)
    }
    pub fn phi_lp(&self, x: f64) -> f64 {
        phi_lp(x)
    }
    pub fn psi_lp(&self, x: f64) -> f64 {
        psi_lp(x)
    }
    pub fn psi_fat(&self, x: f64) -> f64 {
        psi_fat(x)
    }
    /// Cutoff used for the running norms; `theta = Phi`, so `theta(1.5) = 1/2`.
    pub fn theta(&self, x: f64) -> f64 {
        phi_lp(x)
    }
}

/// Symbol of the dyadic piece `P_N`: `Phi(eta)` for `N = 1`, `psi(eta/N)` otherwise.
pub fn dyadic_symbol(n: f64, eta: f64) -> f64 {
    if n <= 1.0 {
        phi_lp(eta)
    } else {
        psi_lp(eta / n)
    }
}

/// Symbol of the fattened piece, equal to one on the support of [`dyadic_symbol`].
pub fn fattened_symbol(n: f64, eta: f64) -> f64 {
    if n <= 1.0 {
        phi_lp(0.5 * eta)
    } else {
        psi_fat(eta / n)
    }
}

/// Symbol of the recentered piece `P_{M,k}`: the unit bump for `M = 1`,
/// `psi((eta - k)/M)` for `M >= 2`.
pub fn band_symbol(m: f64, k: f64, eta: f64) -> f64 {
    if m <= 1.0 {
        phi_unit(eta - k)
    } else {
        psi_lp((eta - k) / m)
    }
}

/// `<r>^s` or `|r|^s`; the homogeneous symbol vanishes at zero unless `s = 0`.
pub fn bracket_pow(r: f64, s: f64, homogeneous: bool) -> f64 {
    if homogeneous {
        if r == 0.0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            r.abs().powf(s)
        }
    } else if s == 0.0 {
        1.0
    } else {
        (1.0 + r * r).powf(0.5 * s)
    }
}

enum Symbol {
    Eta(Box<dyn Fn(f64) -> C64 + Send + Sync>),
    XiEta(Box<dyn Fn(f64, f64) -> C64 + Send + Sync>),
}

/// A Fourier multiplier with a human-readable label.
pub struct MultiplierOp {
    label: String,
    symbol: Symbol,
}

impl fmt::Debug for MultiplierOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiplierOp({})", self.label)
    }
}

impl MultiplierOp {
    /// Multiplier depending on `eta` only.
    pub fn eta(label: impl Into<String>, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            symbol: Symbol::Eta(Box::new(f)),
        }
    }

    pub fn eta_real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::eta(label, move |e| C64::new(f(e), 0.0))
    }

    pub fn xi_eta(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            symbol: Symbol::XiEta(Box::new(f)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn symbol(&self, xi: f64, eta: f64) -> C64 {
        match &self.symbol {
            Symbol::Eta(f) => f(eta),
            Symbol::XiEta(f) => f(xi, eta),
        }
    }

    /// Multiplies Fourier coefficients stored in `values` (grid layout) in place.
    pub fn apply_in_place(&self, grid: &Grid, values: &mut [C64]) {
        apply_symbol(grid, values, &self.symbol);
    }

    pub fn apply(&self, field: &Field) -> Field {
        let mut f = field.fourier();
        let g = f.grid().clone();
        apply_symbol(&g, f.values_mut(), &self.symbol);
        f
    }

    /// `self` after `other`.
    pub fn compose(self, other: MultiplierOp) -> MultiplierOp {
        let label = format!("{} . {}", self.label, other.label);
        match (self.symbol, other.symbol) {
            (Symbol::Eta(a), Symbol::Eta(b)) => MultiplierOp {
                label,
                symbol: Symbol::Eta(Box::new(move |e| a(e) * b(e))),
            },
            (sa, sb) => {
                let a = into_xi_eta(sa);
                let b = into_xi_eta(sb);
                MultiplierOp {
                    label,
                    symbol: Symbol::XiEta(Box::new(move |x, e| a(x, e) * b(x, e))),
                }
            }
        }
    }
}

type XiEtaFn = Box<dyn Fn(f64, f64) -> C64 + Send + Sync>;

fn into_xi_eta(s: Symbol) -> XiEtaFn {
    match s {
        Symbol::Eta(f) => Box::new(move |_, e| f(e)),
        Symbol::XiEta(f) => f,
    }
}

fn apply_symbol(grid: &Grid, values: &mut [C64], symbol: &Symbol) {
    let ny = grid.ny();
    match symbol {
        Symbol::Eta(f) => {
            let col: Vec<C64> = grid.eta().iter().map(|&e| f(e)).collect();
            for row in values.chunks_mut(ny) {
                for (v, c) in row.iter_mut().zip(&col) {
                    *v *= c;
                }
            }
        }
        Symbol::XiEta(f) => {
            for (row, &xi) in values.chunks_mut(ny).zip(grid.xi()) {
                for (v, &e) in row.iter_mut().zip(grid.eta()) {
                    *v *= f(xi, e);
                }
            }
        }
    }
}

/// Multiplies coefficients by a real symbol of `eta`, evaluated once per column.
pub fn apply_eta_real(grid: &Grid, values: &mut [C64], f: impl Fn(f64) -> f64) {
    let col: Vec<f64> = grid.eta().iter().map(|&e| f(e)).collect();
    for row in values.chunks_mut(grid.ny()) {
        for (v, c) in row.iter_mut().zip(&col) {
            *v *= *c;
        }
    }
}

fn check_dyadic(n: f64) -> Result<()> {
    if n >= 1.0 && n.fract() == 0.0 && (n as u64).is_power_of_two() {
        Ok(())
    } else {
        param(format!("{n} is not a dyadic scale"))
    }
}

/// Unit-scale block `P_{1,k}`: multiplies by `phi_unit(eta - k)`.
pub fn project_unit(field: &Field, k: i64) -> Result<Field> {
    field.grid().require_eta(k.unsigned_abs() as f64 + 1.0)?;
    let kf = k as f64;
    Ok(MultiplierOp::eta_real(format!("P_1,{k}"), move |e| phi_unit(e - kf)).apply(field))
}

/// Recentered piece `P_{M,k}`; `M = 1` is the unit block.
pub fn project_band(field: &Field, m: f64, k: i64) -> Result<Field> {
    check_dyadic(m)?;
    if m == 1.0 {
        return project_unit(field, k);
    }
    field.grid().require_eta(k.unsigned_abs() as f64 + 0.5 * m)?;
    let kf = k as f64;
    Ok(MultiplierOp::eta_real(format!("P_{m},{k}"), move |e| band_symbol(m, kf, e)).apply(field))
}

/// Littlewood-Paley piece `P_N` (with `P_1 = Phi(D_y)`).
pub fn project_dyadic(field: &Field, n: f64) -> Result<Field> {
    check_dyadic(n)?;
    Ok(MultiplierOp::eta_real(format!("P_{n}"), move |e| dyadic_symbol(n, e)).apply(field))
}

/// Fattened piece, acting as the identity on the range of `P_N`.
pub fn project_fattened(field: &Field, n: f64) -> Result<Field> {
    check_dyadic(n)?;
    Ok(MultiplierOp::eta_real(format!("P~_{n}"), move |e| fattened_symbol(n, e)).apply(field))
}

/// `P_{<=N} = Phi(D_y / N)` for any real `N > 0`.
pub fn project_below(field: &Field, n: f64) -> Result<Field> {
    if !(n > 0.0) {
        return param(format!("cutoff scale {n} must be positive"));
    }
    Ok(MultiplierOp::eta_real(format!("P_<={n}"), move |e| phi_lp(e / n)).apply(field))
}

/// `<D_y>^s` or `|D_y|^s`.
pub fn fractional_y(field: &Field, s: f64, homogeneous: bool) -> Field {
    MultiplierOp::eta_real(format!("D_y^{s}"), move |e| bracket_pow(e, s, homogeneous)).apply(field)
}

/// `<D_x>^s` or `|D_x|^s`.
pub fn fractional_x(field: &Field, s: f64, homogeneous: bool) -> Field {
    MultiplierOp::xi_eta(format!("D_x^{s}"), move |x, _| {
        C64::new(bracket_pow(x, s, homogeneous), 0.0)
    })
    .apply(field)
}

/// Dispersion relation of the linear part: `e^{itA}` has symbol `e^{-it omega}`.
pub fn omega(xi: f64, eta: f64) -> f64 {
    xi * xi + eta.abs()
}

/// Free flow `e^{it(d_xx - |D_y|)}`.
pub fn free_flow(field: &Field, t: f64) -> Field {
    MultiplierOp::xi_eta(format!("e^itA({t})"), move |x, e| C64::from_polar(1.0, -t * omega(x, e)))
        .apply(field)
}

/// Half-wave flow `e^{-it|D_y|}`, which translates Hardy-space data by `t`.
pub fn half_wave_flow(field: &Field, t: f64) -> Field {
    MultiplierOp::eta(format!("e^-it|D|({t})"), move |e| C64::from_polar(1.0, -t * e.abs()))
        .apply(field)
}

/// The free-flow symbol on the grid layout, for repeated use by the solvers.
pub fn flow_table(grid: &Grid, t: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(grid.len());
    for &xi in grid.xi() {
        for &e in grid.eta() {
            out.push(C64::from_polar(1.0, -t * omega(xi, e)));
        }
    }
    out
}

/// 2/3-rule mask: keeps modes with `|xi| < 2/3 xi_max` and `|eta| < 2/3 eta_max`.
pub fn dealias_table(grid: &Grid) -> Vec<f64> {
    let (cx, cy) = (2.0 / 3.0 * grid.xi_max(), 2.0 / 3.0 * grid.eta_max());
    let mut out = Vec::with_capacity(grid.len());
    for &xi in grid.xi() {
        for &e in grid.eta() {
            out.push(if xi.abs() < cx && e.abs() < cy { 1.0 } else { 0.0 });
        }
    }
    out
}
