//! Compose the accepted transformations into a torus embedding and check
//! linear stability of the final normal form.

use kam::iteration::{run_sample, Setup};
use kam::model::ModelConfig;
use kam::schedule::{make_schedule, ScheduleConfig};
use kam::torus::extract_torus;

fn main() -> kam::Result<()> {
    let model = ModelConfig::default();
    let schedule = make_schedule(&ScheduleConfig::default(), 3)?;
    let setup = Setup::new(&model, &schedule)?;
    let run = run_sample(&setup, 0, &model.default_sigma())?;
    let steps = run.accepted_steps();
    let torus = extract_torus(&run, steps, schedule.rows[steps].s)?;

    println!("after {steps} steps: omega* = {:?}", torus.omega_star);
    println!("embedding has {} Fourier terms", torus.embedding.term_count());
    for (n, terms) in torus.embedding.normal.iter().take(4) {
        let top = terms.iter().map(|t| t.re.hypot(t.im)).fold(0.0, f64::max);
        println!("  w_{n}: {} terms, largest {top:.3e}", terms.len());
    }
    let s = &torus.stability;
    println!(
        "stability {}: max |Re| {:.2e}, hermitian defect {:.2e}, {} blocks",
        if s.pass { "PASS" } else { "FAIL" },
        s.max_real_part,
        s.hermitian_defect,
        s.blocks.len()
    );
    Ok(())
}
