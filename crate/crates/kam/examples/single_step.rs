//! Build the step-zero Hamiltonian at the box centre and run one KAM step.

use kam::iteration::Setup;
use kam::model::ModelConfig;
use kam::schedule::{make_schedule, ScheduleConfig};
use kam::step::{run_step, State, StepOutcome};

fn main() -> kam::Result<()> {
    let model = ModelConfig::default();
    let schedule = make_schedule(&ScheduleConfig::default(), 3)?;
    let setup = Setup::new(&model, &schedule)?;
    let h = setup.hamiltonian(&model.default_sigma())?;
    println!(
        "quartic {} terms, forcing {} terms, tangential {} terms",
        h.p1.len(),
        h.p2.len(),
        h.p3.len()
    );

    let state = State {
        normal: h.normal.clone(),
        perturbation: h.perturbation(),
    };
    let StepOutcome {
        report, generator, divisors, ..
    } = run_step(&state, &setup.plan(0)?)?;
    println!("generator: {} terms", generator.len());
    println!("eps {:.3e} -> {:.3e} (target factor {:.3e})", report.eps_in, report.eps_out, report.eta);
    println!("relative homological residual {:.3e}", report.residual);
    println!("frequency drift {:.3e} (bound {:.3e})", report.drift, report.drift_bound);
    println!("structure ok {}, decay rate {:?}", report.a5_ok, report.a5_decay_rate);
    println!("divisors checked {}, smallest margin {:.3e}", divisors.checked, divisors.min_margin());
    println!("accepted: {}", report.accepted);
    Ok(())
}
