use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ForcingTable, Hamiltonian};
use crate::fit::DecayFit;
use crate::series::{fourier_weighted_norm, vecfield_norm, Domain};
use crate::structure::{verify_structure, verify_toeplitz, StructureReport, ToeplitzReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}

/// Constants the step-zero checks compare against.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub eps: f64,
    pub e0: f64,
    pub delta0: f64,
    pub gamma0: f64,
    pub gamma: f64,
    pub tau: f64,
    pub ek: u32,
    pub rho_bar: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<Check>,
    pub structure: StructureReport,
    pub toeplitz: ToeplitzReport,
    pub forcing_decay: Option<DecayFit>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.structure.pass && self.toeplitz.pass
    }
}

pub fn verify_assumptions(
    h: &Hamiltonian,
    forcing: &ForcingTable,
    dom: &Domain,
    bounds: &Bounds,
) -> AssumptionReport {
    let nf = &h.normal;
    let dim = nf.omega.len();
    let mut checks = Vec::new();

    let jac = DMatrix::from_fn(dim, dim, |i, j| nf.omega[i].grad[j].re);
    checks.push(Check::at_least("frequency map |det dω/dσ|", jac.determinant().abs(), 1e-12));
    let size = nf.omega.iter().map(|w| w.magnitude()).fold(0.0, f64::max);
    checks.push(Check::at_most("frequency size |ω|", size, bounds.e0));

    checks.push(Check::at_most("normal form |c|", nf.shift.magnitude(), bounds.eps));
    let f_norm = fourier_weighted_norm(&nf.modulation, dom.r, 0.0);
    checks.push(Check::at_most("normal form ‖f‖", f_norm, bounds.eps));
    checks.push(Check::at_most("block Hermiticity", nf.hermitian_defect(), 1e-12));

    let parts = [("vector field ‖X_P1‖", &h.p1), ("vector field ‖X_P2‖", &h.p2), ("vector field ‖X_P3‖", &h.p3)];
    let mut total = 0.0;
    for (name, p) in parts {
        let norm = vecfield_norm(p, dom);
        total += norm;
        checks.push(Check::at_most(name, norm, bounds.eps));
    }
    checks.push(Check::at_most("vector field ‖X_P‖", total, bounds.eps));

    let a7 = fourier_weighted_norm(&nf.modulation, dom.r, 2.0 * bounds.tau + 2.0);
    checks.push(Check::at_most("frequency perturbation ‖Ω̃_n‖/|n|", a7, bounds.delta0 * (bounds.gamma0 - bounds.gamma).max(0.0)));

    let forcing_decay = forcing.decay().ok();
    if let Some(fit) = &forcing_decay {
        checks.push(Check::at_least("forcing decay rate", fit.rate, bounds.rho_bar - 0.05));
    }

    let p = h.perturbation();
    AssumptionReport {
        checks,
        structure: verify_structure(&p, bounds.ek, dom.r, bounds.rho_bar),
        toeplitz: verify_toeplitz(&p, dom, bounds.eps),
        forcing_decay,
    }
}

fn weighted(values: &BTreeMap<i32, Complex64>, a: f64, rho: f64) -> f64 {
    values
        .iter()
        .map(|(&n, v)| {
            let m = n.unsigned_abs().max(1) as f64;
            v.norm() * m.powf(a) * (m * rho).exp()
        })
        .sum()
}

/// `‖∂G/∂w̄‖_{a−1,ρ} / ‖w‖³_{a,ρ}` for the quartic `G = S²/16`,
/// `S = Σ_n (n²/λ_n)(w_n + w̄_n)²`, at a lattice point `w`.
pub fn gradient_ratio(w: &BTreeMap<i32, Complex64>, lambda: impl Fn(i32) -> f64, a: f64, rho: f64) -> f64 {
    let weight = |n: i32| (n * n) as f64 / lambda(n);
    let s: f64 = w
        .iter()
        .map(|(&n, v)| weight(n) * (2.0 * v.re).powi(2))
        .sum();
    let grad: BTreeMap<i32, Complex64> = w
        .iter()
        .map(|(&n, v)| (n, Complex64::new(0.25 * s * weight(n) * 2.0 * v.re, 0.0)))
        .collect();
    let norm = weighted(w, a, rho);
    if norm == 0.0 {
        return 0.0;
    }
    weighted(&grad, a - 1.0, rho) / norm.powi(3)
}
