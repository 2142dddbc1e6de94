//! Deterministic initial data used by the experiments.

use crate::error::{param, Result};
use crate::grid::{Field, Grid};
use crate::C64;

/// `e^{-x^2}` in `x` times a profile with `|hat h(eta)| = <eta>^{-(1/2 + reg)}`,
/// scaled to `||f||_{L^2} = amp`. Lies in the anisotropic space of order `s` for
/// every `s < reg`.
pub fn power_law(grid: &Grid, reg: f64, amp: f64) -> Result<Field> {
    if !(reg > 0.0) {
        return param(format!("regularity {reg} must be positive"));
    }
    let f = Field::from_spectrum(grid, |xi, eta| {
        C64::new((-0.25 * xi * xi).exp() * (1.0 + eta * eta).powf(-0.5 * (0.5 + reg)), 0.0)
    });
    normalized(f, amp)
}

/// `amp e^{-x^2 - y^2}` up to normalization of the `L^2` norm.
pub fn gaussian(grid: &Grid, amp: f64) -> Result<Field> {
    normalized(Field::from_fn(grid, |x, y| C64::new((-x * x - y * y).exp(), 0.0)), amp)
}

/// Rescales a nonzero field to the given `L^2` norm.
pub fn normalized(f: Field, amp: f64) -> Result<Field> {
    let n = f.l2_norm();
    if n == 0.0 {
        return param("cannot normalize the zero field");
    }
    Ok(f.scale(C64::new(amp / n, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_aniso;
    use std::f64::consts::PI;

    #[test]
    fn power_law_has_requested_mass_and_decay() {
        let g = Grid::new(16, 2048, 8.0, 16.0 * PI).unwrap();
        let f = power_law(&g, 0.3, 0.7).unwrap();
        assert!((f.l2_norm() - 0.7).abs() < 1e-12);
        // band mass in [N/2, N) decays like N^{-2 reg}
        let band = |n: f64| -> f64 {
            let fc = f.fourier();
            let ny = g.ny();
            fc.values()
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let e = g.eta()[i % ny].abs();
                    e >= n / 2.0 && e < n
                })
                .map(|(_, v)| v.norm_sqr())
                .sum()
        };
        let r = (band(32.0) / band(64.0)).log2();
        assert!((r - 0.6).abs() < 0.05, "{r}");
        assert!(sobolev_aniso(&f, 0.2).is_finite());
        assert!(gaussian(&g, 0.0).unwrap().l2_norm() == 0.0);
        assert!(power_law(&g, -1.0, 1.0).is_err());
    }
}
