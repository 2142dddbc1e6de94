//! Small numerical helpers: double-exponential quadrature, time integrals and fits.

use std::f64::consts::FRAC_PI_2;

/// Tanh-sinh quadrature of `f` over `(a, b)`.
///
/// The integrand receives `(x, x - a, b - x)` with both distances computed without
/// cancellation, so endpoint singularities can be evaluated accurately.
pub fn tanh_sinh(mut f: impl FnMut(f64, f64, f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mut node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        // 1 + tanh(u) and 1 - tanh(u) without cancellation
        let (da, db) = if u >= 0.0 {
            let e = (-2.0 * u).exp();
            (half * 2.0 / (1.0 + e), half * 2.0 * e / (1.0 + e))
        } else {
            let e = (2.0 * u).exp();
            (half * 2.0 * e / (1.0 + e), half * 2.0 / (1.0 + e))
        };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if da < db { a + da } else { b - db };
        w * f(x, da, db)
    };
    const T_MAX: f64 = 3.5;
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut j = 1;
    while j as f64 * h <= T_MAX {
        let t = j as f64 * h;
        sum += node(t) + node(-t);
        j += 1;
    }
    let mut est = h * sum;
    for level in 0..12 {
        h *= 0.5;
        let mut j = 1;
        while j as f64 * h <= T_MAX {
            let t = j as f64 * h;
            sum += node(t) + node(-t);
            j += 2;
        }
        let next = h * sum;
        let done = level >= 2 && (next - est).abs() <= rel_tol * next.abs();
        est = next;
        if done {
            break;
        }
    }
    est
}

/// `(int |f|^p dt)^{1/p}` by the trapezoid rule on equally spaced samples;
/// `p = inf` gives the maximum.
pub fn trapezoid_lp(values: &[f64], dt: f64, p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if values.len() == 1 {
        return 0.0;
    }
    let n = values.len();
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * v.abs().powf(p)
        })
        .sum();
    (s * dt).powf(1.0 / p)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_slope(&lx, &ly)
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
