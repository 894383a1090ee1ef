//! Print the step schedule and its gates for the default constants.

use kam::schedule::{make_schedule, ScheduleConfig};

fn main() -> kam::Result<()> {
    let schedule = make_schedule(&ScheduleConfig::default(), 3)?;
    println!("kappa {:.4}  c {:.3e}  product tail {:.3e}", schedule.kappa, schedule.c, schedule.product_tail);
    for g in &schedule.gates {
        println!(
            "gate {:<32} {:>12.4e} vs {:>12.4e}  {}{}",
            g.name,
            g.value,
            g.bound,
            if g.pass { "ok" } else { "FAILS" },
            if g.hard { "" } else { " (advisory)" }
        );
    }
    println!("{:>3} {:>10} {:>10} {:>10} {:>5} {:>4} {:>10}", "nu", "eps", "s", "gamma", "K", "EK", "eta");
    for r in &schedule.rows {
        println!(
            "{:>3} {:>10.3e} {:>10.3e} {:>10.4} {:>5} {:>4} {:>10.3e}",
            r.nu, r.eps, r.s, r.gamma, r.k, r.ek, r.eta
        );
    }
    match schedule.exhausted_at() {
        Some(nu) => println!("contraction target reaches one at step {nu}"),
        None => println!("every scheduled step has a contraction target below one"),
    }
    Ok(())
}
