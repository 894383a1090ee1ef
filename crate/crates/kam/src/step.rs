//! One iteration step: solve, transform, re-check.

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::homological::{solve, DivisorLog, Solution, Thresholds};
use crate::normal_form::NormalForm;
use crate::series::{add, poisson_bracket, series_norm, sub, vecfield_norm, Domain, TFSeries, Tail};
use crate::structure::{verify_structure, verify_toeplitz};

/// The Hamiltonian `N + P` carried between steps.
#[derive(Clone, Debug)]
pub struct State {
    pub normal: NormalForm,
    pub perturbation: TFSeries,
}

/// Everything a step needs from the schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepPlan {
    pub nu: usize,
    pub thresholds: Thresholds,
    pub domain: Domain,
    pub next_domain: Domain,
    /// Required contraction `eps_out ≤ η·eps_in`.
    pub eta: f64,
    /// Scheduled size `ε_ν`, the Töplitz–Lipschitz bound.
    pub eps: f64,
    pub drift_bound: f64,
    pub rho_bar: f64,
    pub max_orders: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub nu: usize,
    pub eps_in: f64,
    pub eps_out: f64,
    pub eta: f64,
    pub f_norm: f64,
    pub nhat_norm: f64,
    pub rhat_norm: f64,
    pub residual: f64,
    pub fold_residual: f64,
    pub a5_ok: bool,
    pub a5_decay_rate: Option<f64>,
    pub a5_violations: usize,
    pub a6_limit: f64,
    pub a6_max_scaled_deviation: f64,
    pub a6_ok: bool,
    pub divisor_min_margin: f64,
    pub lie_orders_used: usize,
    pub tail_added: f64,
    pub drift: f64,
    pub drift_bound: f64,
    pub accepted: bool,
    pub reason: Option<String>,
}

/// Outcome of the Lie series `Σ_j ad_F^j / j!` beyond the solved first order.
#[derive(Clone, Debug)]
pub struct LieOutcome {
    pub series: TFSeries,
    pub orders: usize,
    pub remainder: f64,
}

/// `H∘φ_F − (N + N̂) ` for `H = N + P`, given the solved identity
/// `{N,F} = N̂ − used + error`:
/// `(P − used) + error + Σ_{j≥1} (a_j + b_j)` with `a_j = ad^j P / j!` and
/// `b_j = ad^{j−1}({N,F}) / (j+1)!`.
pub fn lie_transform(
    perturbation: &TFSeries,
    solution: &Solution,
    target: &Domain,
    stop: f64,
    max_orders: usize,
) -> Result<LieOutcome> {
    let f = &solution.generator;
    let first = add(&solution.kept, &solution.error)?;
    if f.is_empty() {
        return Ok(LieOutcome {
            series: first,
            orders: 0,
            remainder: 0.0,
        });
    }
    let mut a = perturbation.clone();
    let mut b = sub(&add(&solution.update.update_series()?, &solution.error)?, &solution.used)?;
    let mut total = first;
    let mut previous = f64::INFINITY;
    let mut orders = 0;
    let mut remainder = 0.0;
    for j in 1..=max_orders {
        a = poisson_bracket(&a, f)?.scale_c((1.0 / j as f64).into());
        b = poisson_bracket(&b, f)?.scale_c((1.0 / (j + 1) as f64).into());
        let term = add(&a, &b)?;
        let size = vecfield_norm(&term, target);
        total = add(&total, &term)?;
        orders = j;
        log::debug!("lie order {j}: {size:.3e}");
        if size < stop {
            break;
        }
        let ratio = size / previous;
        if ratio > 0.5 {
            return Err(KamError::LieNonContraction(format!(
                "order {j} ratio {ratio:.3} with term {size:.3e} above {stop:.3e}"
            )));
        }
        if j == max_orders {
            remainder = size * ratio / (1.0 - ratio);
        }
        previous = size;
    }
    if remainder > 0.0 {
        let budget = total.budget().clone();
        let weight = (2 * budget.d_cap + budget.k_cap) as f64;
        total = total.with_tail(Tail::new(remainder * target.s * target.s / weight, 0));
    }
    Ok(LieOutcome {
        series: total,
        orders,
        remainder,
    })
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: State,
    pub report: StepReport,
    pub generator: TFSeries,
    pub divisors: DivisorLog,
}

/// Run one step; the returned state is the transformed Hamiltonian whether
/// or not the step was accepted, and `report.accepted` carries the verdict.
pub fn run_step(state: &State, plan: &StepPlan) -> Result<StepOutcome> {
    let thr = &plan.thresholds;
    let eps_in = vecfield_norm(&state.perturbation, &plan.domain);
    let solution = solve(&state.normal, &state.perturbation, thr)?;
    let stop = 1e-3 * plan.eta * eps_in;
    let lie = lie_transform(&state.perturbation, &solution, &plan.next_domain, stop, plan.max_orders)?;

    let mut normal = state.normal.clone();
    normal.absorb(&solution.update)?;
    let next = State {
        normal,
        perturbation: lie.series,
    };
    let eps_out = vecfield_norm(&next.perturbation, &plan.next_domain);

    let structure = verify_structure(&next.perturbation, thr.ek, plan.next_domain.r, plan.rho_bar);
    let toeplitz = verify_toeplitz(&next.perturbation, &plan.next_domain, plan.eps);
    let drift = solution
        .update
        .omega
        .iter()
        .map(|w| w.value.norm())
        .fold(0.0, f64::max);
    let fold = sub(&solution.kept, &solution.truncation.rest)?;

    let mut report = StepReport {
        nu: plan.nu,
        eps_in,
        eps_out,
        eta: plan.eta,
        f_norm: vecfield_norm(&solution.generator, &plan.domain),
        nhat_norm: vecfield_norm(&solution.update.update_series()?, &plan.domain),
        rhat_norm: vecfield_norm(&solution.error, &plan.next_domain),
        residual: solution.residual,
        fold_residual: series_norm(&fold, &plan.domain),
        a5_ok: structure.pass,
        a5_decay_rate: structure.decay.as_ref().map(|d| d.rate),
        a5_violations: structure.violations.len(),
        a6_limit: toeplitz.limit_norm,
        a6_max_scaled_deviation: toeplitz.max_scaled_deviation,
        a6_ok: toeplitz.pass,
        divisor_min_margin: solution.divisors.min_margin(),
        lie_orders_used: lie.orders,
        tail_added: lie.remainder,
        drift,
        drift_bound: plan.drift_bound,
        accepted: false,
        reason: None,
    };
    let mut failures = Vec::new();
    if eps_out > plan.eta * eps_in {
        failures.push(format!("eps_out {eps_out:.3e} > η·eps_in {:.3e}", plan.eta * eps_in));
    }
    if !structure.pass {
        failures.push("structure check failed".to_string());
    }
    if !toeplitz.pass {
        failures.push("Töplitz–Lipschitz check failed".to_string());
    }
    if drift > plan.drift_bound {
        failures.push(format!("frequency drift {drift:.3e} > {:.3e}", plan.drift_bound));
    }
    report.accepted = failures.is_empty();
    if !report.accepted {
        report.reason = Some(failures.join("; "));
    }
    Ok(StepOutcome {
        state: next,
        report,
        generator: solution.generator,
        divisors: solution.divisors,
    })
}
