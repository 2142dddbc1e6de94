//! The linear constraint system on the exponents `(s, sigma', sigma, nu)` at fixed
//! `gamma`, minimized in `s` by the simplex method and scanned over `gamma`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub s: f64,
    pub sigma_p: f64,
    pub sigma: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl ExponentTuple {
    fn vars(&self) -> [f64; 4] {
        [self.s, self.sigma_p, self.sigma, self.nu]
    }
}

/// Rows `a . (s, sigma', sigma, nu) <= b` of the five constraints at `gamma`.
fn rows(gamma: f64) -> [([f64; 4], f64); 5] {
    [
        ([-1.0, 1.0, -gamma, 0.0], -gamma / 2.0),
        ([-1.0, -gamma, 0.0, 1.0], 0.0),
        ([0.0, -1.0, 0.0, 1.0 - gamma], 0.0),
        ([0.0, 0.0, 1.0, -1.0], -0.5),
        ([0.0, -1.0, 1.0, 0.0], 0.0),
    ]
}

/// Left sides minus right sides; the system holds when all are `<= 0`.
pub fn constraint_values(t: &ExponentTuple) -> [f64; 5] {
    let v = t.vars();
    rows(t.gamma).map(|(a, b)| a.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() - b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `-value` per constraint; nonnegative when satisfied.
    pub slacks: [f64; 5],
}

/// Feasible when every constraint value is `<= -margin`.
pub fn feasible(t: &ExponentTuple, margin: f64) -> Feasibility {
    let v = constraint_values(t);
    Feasibility {
        feasible: v.iter().all(|c| *c <= -margin),
        slacks: v.map(|c| -c),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub tuple: ExponentTuple,
    pub objective: f64,
    /// 1-based indices of the constraints that are tight.
    pub active: Vec<usize>,
}

impl LpSolution {
    pub const CSV_HEADER: &'static str = "gamma,s,sigma_p,sigma,nu,active_set";

    pub fn csv_row(&self) -> String {
        let t = &self.tuple;
        let act: Vec<String> = self.active.iter().map(|a| a.to_string()).collect();
        format!("{:?},{:?},{:?},{:?},{:?},{}", t.gamma, t.s, t.sigma_p, t.sigma, t.nu, act.join(" "))
    }
}

const TIGHT: f64 = 1e-9;

fn solve_lp(gamma: f64, cost: [f64; 4], s_range: (f64, f64)) -> Option<[f64; 4]> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars = [0, 1, 2, 3].map(|i| lp.add_var(cost[i], if i == 0 { s_range } else { (0.0, 1.0) }));
    for (r, rhs) in rows(gamma) {
        let terms: Vec<_> = vars.iter().copied().zip(r).filter(|(_, a)| *a != 0.0).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, rhs);
    }
    lp.solve().ok().map(|sol| vars.map(|v| sol[v]))
}

/// Minimizes `s` over the closed system with the box `0 <= s, sigma', sigma, nu <= 1`.
/// When the minimizers form a face, the one with the largest `nu` is returned.
pub fn minimize_s(gamma: f64) -> Result<LpSolution> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return param(format!("gamma={gamma} must lie in (0, 1)"));
    }
    let best = solve_lp(gamma, [1.0, 0.0, 0.0, 0.0], (0.0, 1.0))
        .and_then(|x| solve_lp(gamma, [0.0, 0.0, 0.0, -1.0], (x[0], x[0])));
    let Some(x) = best else {
        return param(format!("constraint system infeasible at gamma={gamma}"));
    };
    let tuple = ExponentTuple {
        s: x[0],
        sigma_p: x[1],
        sigma: x[2],
        nu: x[3],
        gamma,
    };
    let active = constraint_values(&tuple)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= TIGHT)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(LpSolution {
        objective: x[0],
        tuple,
        active,
    })
}

/// Vertex with constraints 1-4 tight: `nu = 1/(1+gamma)`, `sigma' = nu(1-gamma)`,
/// `sigma = nu - 1/2`, `s = (1-gamma+gamma^2)/(1+gamma)`.
pub fn closed_form(gamma: f64) -> ExponentTuple {
    let nu = 1.0 / (1.0 + gamma);
    ExponentTuple {
        s: (1.0 - gamma + gamma * gamma) / (1.0 + gamma),
        sigma_p: nu * (1.0 - gamma),
        sigma: nu - 0.5,
        nu,
        gamma,
    }
}

/// Minimum of the closed form: `gamma^2 + 2 gamma - 2 = 0`.
pub fn analytic_optimum() -> ExponentTuple {
    let r3 = 3f64.sqrt();
    ExponentTuple {
        s: 2.0 * r3 - 3.0,
        sigma_p: 2.0 / r3 - 1.0,
        sigma: 1.0 / r3 - 0.5,
        nu: 1.0 / r3,
        gamma: r3 - 1.0,
    }
}

/// `minimize_s` on `gamma = step, 2 step, ..` below 1.
pub fn gamma_table(step: f64) -> Result<Vec<LpSolution>> {
    if !(step > 0.0 && step < 0.5) {
        return param(format!("grid step {step} must lie in (0, 1/2)"));
    }
    let n = (1.0 / step).ceil() as usize;
    (1..n)
        .map(|i| i as f64 * step)
        .filter(|g| *g < 1.0)
        .map(minimize_s)
        .collect()
}

/// Grid minimum of `minimize_s` over `gamma`.
pub fn optimize_over_gamma(step: f64) -> Result<LpSolution> {
    let table = gamma_table(step)?;
    let mut best = table[0].clone();
    for row in table {
        if row.objective < best.objective {
            best = row;
        }
    }
    Ok(best)
}
