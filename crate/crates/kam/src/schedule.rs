//! The step-size schedule: domains, cutoffs, Diophantine constants and the
//! contraction targets for every step.

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::homological::Thresholds;
use crate::series::Domain;

const PRODUCT_TERMS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub eps0: f64,
    pub r0: f64,
    pub s0: f64,
    pub rho0: f64,
    pub gamma0: f64,
    pub e0: f64,
    pub beta_prime: f64,
    pub delta0: f64,
    pub tau: f64,
    pub nu_max: usize,
    /// Spatial weight exponent `a` of the phase space.
    pub a: f64,
    /// Constant in `B_ν`; `None` normalizes `B₀ = 1`.
    pub c: Option<f64>,
    /// Lower bound on the step-zero Fourier cutoff.
    pub k_floor: u32,
    /// Computational cap on the Fourier cutoff.
    pub k_cap: u32,
    /// Computational cap on the block boundary.
    pub ek_cap: u32,
    pub lie_orders: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            eps0: 1e-6,
            r0: 0.5,
            s0: 0.02,
            rho0: 1.0,
            gamma0: 0.1,
            e0: 3.0,
            beta_prime: 0.25,
            delta0: 5e-7,
            tau: 6.0,
            nu_max: 5,
            a: 1.0,
            c: None,
            k_floor: 4,
            k_cap: 32,
            ek_cap: 16,
            lie_orders: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    /// A failed hard gate rejects the configuration.
    pub hard: bool,
}

impl Gate {
    fn below(name: &str, value: f64, bound: f64, hard: bool) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value < bound,
            hard,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub nu: usize,
    pub r: f64,
    /// Strip loss `ϱ_ν = r_ν / 20`.
    pub strip_loss: f64,
    pub rho: f64,
    pub s: f64,
    pub gamma: f64,
    pub e: f64,
    pub b: f64,
    pub eps: f64,
    /// `⌈|ln ε_ν| / ϱ_ν⌉` before the computational cap.
    pub k_nominal: f64,
    pub k: u32,
    pub ek: u32,
    pub eta: f64,
    pub drift_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub config: ScheduleConfig,
    pub kappa: f64,
    /// The `B_ν` constant actually used.
    pub c: f64,
    pub rows: Vec<Row>,
    pub gates: Vec<Gate>,
    /// Size of the first omitted factor of the infinite product.
    pub product_tail: f64,
}

impl Schedule {
    /// First step whose contraction target is not below one.
    pub fn exhausted_at(&self) -> Option<usize> {
        self.rows.iter().position(|r| !(r.eta < 1.0))
    }

    pub fn domain(&self, nu: usize) -> Result<Domain> {
        let row = &self.rows[nu];
        Domain::new(row.r, row.s, row.rho, self.config.a)
    }

    /// Reference domain for discarded terms: the widest strip, the largest
    /// radius and the narrowest spatial weight the run ever uses.
    pub fn tail_reference(&self) -> Result<Domain> {
        Domain::new(self.config.r0, self.config.s0, self.config.rho0 / 2.0, self.config.a)
    }

    pub fn thresholds(&self, nu: usize) -> Thresholds {
        let row = &self.rows[nu];
        Thresholds {
            gamma: row.gamma,
            gamma0: self.config.gamma0,
            tau: self.config.tau,
            k: row.k,
            ek: row.ek,
            ek_prev: if nu == 0 { 1 } else { self.rows[nu - 1].ek },
            delta0: self.config.delta0,
        }
    }

    pub fn failed_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| !g.pass)
    }
}

/// Materialize the schedule for `ν ≤ ν_max` over `dim` angles. Hard gates
/// raise [`KamError::Gate`]; the smallness gate on `ε₀` is only recorded.
pub fn make_schedule(cfg: &ScheduleConfig, dim: usize) -> Result<Schedule> {
    let hard = [
        Gate {
            name: "0 < beta' <= 1/4".into(),
            value: cfg.beta_prime,
            bound: 0.25,
            pass: cfg.beta_prime > 0.0 && cfg.beta_prime <= 0.25,
            hard: true,
        },
        Gate {
            name: "tau > dim + 2".into(),
            value: cfg.tau,
            bound: dim as f64 + 2.0,
            pass: cfg.tau > dim as f64 + 2.0,
            hard: true,
        },
        Gate::below("2 strip loss < E0 rho0", 2.0 * cfg.r0 / 20.0, cfg.e0 * cfg.rho0, true),
        Gate::below(
            "3200 E0^2 delta0 < beta' gamma0",
            3200.0 * cfg.e0 * cfg.e0 * cfg.delta0,
            cfg.beta_prime * cfg.gamma0,
            true,
        ),
        Gate::below("delta0 gamma0 < 1/32", cfg.delta0 * cfg.gamma0, 1.0 / 32.0, true),
    ];
    for (name, v) in [
        ("eps0", cfg.eps0),
        ("r0", cfg.r0),
        ("s0", cfg.s0),
        ("rho0", cfg.rho0),
        ("gamma0", cfg.gamma0),
        ("e0", cfg.e0),
        ("delta0", cfg.delta0),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(KamError::Gate {
                gate: format!("{name} > 0"),
                detail: format!("{name} = {v}"),
            });
        }
    }
    if let Some(g) = hard.iter().find(|g| !g.pass) {
        return Err(KamError::Gate {
            gate: g.name.clone(),
            detail: format!("value {:.6e}, bound {:.6e}", g.value, g.bound),
        });
    }

    let kappa = 4.0 / 3.0 - cfg.beta_prime / 3.0;
    let power = 10.0 * (dim as f64 + cfg.tau + 1.0);
    let loss = |nu: usize| cfg.r0 / 2f64.powi(nu as i32) / 20.0;
    let e_at = |nu: usize| cfg.e0 * (2.0 - 2f64.powi(-(nu as i32)));
    let ln_shape = |nu: usize| 4.0 * e_at(nu).ln() - power * loss(nu).ln();
    let ln_c = match cfg.c {
        Some(c) if c > 0.0 => c.ln(),
        Some(c) => {
            return Err(KamError::Gate {
                gate: "c > 0".into(),
                detail: format!("c = {c}"),
            })
        }
        None => -ln_shape(0),
    };
    let ln_b = |nu: usize| ln_c + ln_shape(nu);

    // ln ε_ν = κ^ν (ln ε₀ + Σ_{μ<ν} ln B_μ / (3κ^{μ+1}))
    let mut rows = Vec::with_capacity(cfg.nu_max + 1);
    let mut base = cfg.eps0.ln();
    let mut s = cfg.s0;
    for nu in 0..=cfg.nu_max {
        let ln_eps = kappa.powi(nu as i32) * base;
        let eps = ln_eps.exp();
        let lb = ln_b(nu);
        let eta = ((1.0 - cfg.beta_prime) * ln_eps + lb) / 3.0;
        let r = cfg.r0 / 2f64.powi(nu as i32);
        let strip = r / 20.0;
        let mut k_nominal = (ln_eps.abs() / strip).ceil();
        if nu == 0 {
            k_nominal = k_nominal.max(cfg.k_floor as f64);
        }
        let k = k_nominal.min(cfg.k_cap as f64) as u32;
        let e = e_at(nu);
        let ek = ((e * k_nominal).floor()).min(cfg.ek_cap as f64) as u32;
        let rho = cfg.rho0 * (1.0 - (2..=nu + 1).map(|i| 2f64.powi(-(i as i32))).sum::<f64>());
        rows.push(Row {
            nu,
            r,
            strip_loss: strip,
            rho,
            s,
            gamma: cfg.gamma0 / 2.0 * (1.0 + 2f64.powi(-(nu as i32))),
            e,
            b: lb.exp(),
            eps,
            k_nominal,
            k,
            ek,
            eta: eta.exp(),
            drift_bound: (0.5 * lb + (1.0 - cfg.beta_prime / 5.0) * ln_eps).exp(),
        });
        base += lb / (3.0 * kappa.powi(nu as i32 + 1));
        s *= eta.exp();
    }

    let mut ln_product = 0.0;
    for mu in 0..PRODUCT_TERMS {
        ln_product -= ln_b(mu) / (3.0 * kappa.powi(mu as i32 + 1));
    }
    let product_tail = (ln_b(PRODUCT_TERMS) / (3.0 * kappa.powi(PRODUCT_TERMS as i32 + 1))).abs();
    let ln_bound = (cfg.delta0 / 80.0).ln() / (1.0 - cfg.beta_prime) + ln_product;
    let mut gates = hard.to_vec();
    gates.push(Gate {
        name: "eps0 smallness".into(),
        value: cfg.eps0.ln(),
        bound: ln_bound,
        pass: cfg.eps0.ln() <= ln_bound,
        hard: false,
    });
    Ok(Schedule {
        config: cfg.clone(),
        kappa,
        c: ln_c.exp(),
        rows,
        gates,
        product_tail,
    })
}
