//! The full iteration over a set of parameter samples.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::fit::slope;
use crate::homological::DivisorLog;
use crate::model::{build_hamiltonian, verify_assumptions, AssumptionReport, Bounds, ForcingTable, Hamiltonian, ModelConfig};
use crate::normal_form::NormalForm;
use crate::schedule::Schedule;
use crate::series::{Budget, TFSeries};
use crate::step::{run_step, State, StepPlan, StepReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SampleStatus {
    /// Every scheduled step was accepted.
    Completed,
    /// The contraction target reached one at this step.
    Exhausted { nu: usize },
    /// A small divisor fell below its threshold; the sample is excluded.
    Excluded { nu: usize, divisor: String },
    /// A step ran but failed its acceptance checks.
    Rejected { nu: usize, reason: String },
    /// The step-zero assumptions do not hold.
    Assumptions { failed: Vec<String> },
    /// A step raised an error other than a divisor violation.
    Failed { nu: usize, error: String },
}

impl SampleStatus {
    /// Completed, or stopped only because the schedule ran out.
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Completed | Self::Exhausted { .. })
    }
}

/// One parameter sample carried through the iteration.
#[derive(Clone, Debug)]
pub struct SampleRun {
    pub index: usize,
    pub sigma: Vec<f64>,
    pub assumptions: AssumptionReport,
    pub reports: Vec<StepReport>,
    /// Generators of the accepted steps, in order.
    pub generators: Vec<TFSeries>,
    /// The normal form before the first step and after each accepted one.
    pub normals: Vec<NormalForm>,
    /// Divisor summaries of every step that ran.
    pub divisors: Vec<DivisorLog>,
    /// The Hamiltonian after the last accepted step.
    pub state: State,
    pub action_center: f64,
    pub status: SampleStatus,
}

impl SampleRun {
    pub fn accepted_steps(&self) -> usize {
        self.generators.len()
    }

    /// Slope of `ln eps_out` against `ln eps_in` over the accepted steps.
    pub fn contraction_exponent(&self) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .reports
            .iter()
            .filter(|r| r.accepted && r.eps_in > 0.0 && r.eps_out > 0.0)
            .map(|r| (r.eps_in.ln(), r.eps_out.ln()))
            .collect();
        if points.len() < 2 {
            return None;
        }
        slope(&points)
    }
}

/// Shared, parameter-independent inputs of a run.
pub struct Setup {
    pub model: ModelConfig,
    pub schedule: Schedule,
    pub budget: Arc<Budget>,
    pub forcing: ForcingTable,
}

impl Setup {
    pub fn new(model: &ModelConfig, schedule: &Schedule) -> Result<Self> {
        model.validate()?;
        let budget = Arc::new(model.make_budget(schedule.tail_reference()?)?);
        Ok(Self {
            model: model.clone(),
            schedule: schedule.clone(),
            budget,
            forcing: model.forcing_table(),
        })
    }

    /// Squared tangential amplitude `I* = 2 s₀²`.
    pub fn action_center(&self) -> f64 {
        2.0 * self.schedule.config.s0 * self.schedule.config.s0
    }

    pub fn hamiltonian(&self, sigma: &[f64]) -> Result<Hamiltonian> {
        build_hamiltonian(&self.model, &self.forcing, sigma, self.action_center(), &self.budget)
    }

    pub fn plan(&self, nu: usize) -> Result<StepPlan> {
        let rows = &self.schedule.rows;
        let row = &rows[nu];
        Ok(StepPlan {
            nu,
            thresholds: self.schedule.thresholds(nu),
            domain: self.schedule.domain(nu)?,
            next_domain: self.schedule.domain(nu + 1)?,
            eta: row.eta,
            eps: row.eps,
            drift_bound: row.drift_bound,
            rho_bar: self.model.rho_bar,
            max_orders: self.schedule.config.lie_orders,
        })
    }

    fn bounds(&self) -> Bounds {
        let cfg = &self.schedule.config;
        let row = &self.schedule.rows[0];
        Bounds {
            eps: row.eps,
            e0: cfg.e0,
            delta0: cfg.delta0,
            gamma0: cfg.gamma0,
            gamma: row.gamma,
            tau: cfg.tau,
            ek: row.ek,
            rho_bar: self.model.rho_bar,
        }
    }
}

/// Iterate one sample until the schedule runs out or a step fails.
pub fn run_sample(setup: &Setup, index: usize, sigma: &[f64]) -> Result<SampleRun> {
    let h = setup.hamiltonian(sigma)?;
    let assumptions = verify_assumptions(&h, &setup.forcing, &setup.schedule.domain(0)?, &setup.bounds());
    let mut run = SampleRun {
        index,
        sigma: sigma.to_vec(),
        reports: Vec::new(),
        generators: Vec::new(),
        normals: vec![h.normal.clone()],
        divisors: Vec::new(),
        state: State {
            normal: h.normal.clone(),
            perturbation: h.perturbation(),
        },
        action_center: h.action_center,
        status: SampleStatus::Completed,
        assumptions,
    };
    if !run.assumptions.all_pass() {
        let mut failed: Vec<String> = run.assumptions.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        if !run.assumptions.structure.pass {
            failed.push("structure".into());
        }
        if !run.assumptions.toeplitz.pass {
            failed.push("Toeplitz-Lipschitz".into());
        }
        run.status = SampleStatus::Assumptions { failed };
        return Ok(run);
    }

    let nu_max = setup.schedule.config.nu_max.min(setup.schedule.rows.len() - 1);
    for nu in 0..nu_max {
        if !(setup.schedule.rows[nu].eta < 1.0) {
            run.status = SampleStatus::Exhausted { nu };
            break;
        }
        let plan = setup.plan(nu)?;
        match run_step(&run.state, &plan) {
            Ok(outcome) => {
                let accepted = outcome.report.accepted;
                log::info!(
                    "sample {index} step {nu}: eps {:.3e} -> {:.3e}{}",
                    outcome.report.eps_in,
                    outcome.report.eps_out,
                    if accepted { "" } else { " (rejected)" }
                );
                let reason = outcome.report.reason.clone();
                run.reports.push(outcome.report);
                run.divisors.push(outcome.divisors);
                if !accepted {
                    run.status = SampleStatus::Rejected {
                        nu,
                        reason: reason.unwrap_or_default(),
                    };
                    break;
                }
                run.state = outcome.state;
                run.normals.push(run.state.normal.clone());
                run.generators.push(outcome.generator);
            }
            Err(e @ KamError::DivisorViolation { .. }) => {
                run.status = SampleStatus::Excluded {
                    nu,
                    divisor: e.to_string(),
                };
                break;
            }
            Err(e) => {
                run.status = SampleStatus::Failed { nu, error: e.to_string() };
                break;
            }
        }
    }
    Ok(run)
}

/// Run every sample; samples are independent and come back in input order.
pub fn run(setup: &Setup, samples: &[Vec<f64>]) -> Result<Vec<SampleRun>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, sigma)| run_sample(setup, i, sigma))
        .collect()
}
