//! Iterate a few parameter samples and summarize how each one ended.

use kam::config::{RunConfig, SigmaSamples};
use kam::iteration::{run, Setup};

fn main() -> kam::Result<()> {
    let cfg = RunConfig {
        sigma_samples: SigmaSamples::Count(4),
        seed: 3,
        ..RunConfig::default()
    };
    let schedule = cfg.schedule()?;
    let setup = Setup::new(&cfg.model, &schedule)?;
    for r in run(&setup, &cfg.samples()?)? {
        let sigma: Vec<String> = r.sigma.iter().map(|x| format!("{x:.4}")).collect();
        let eps: Vec<String> = r
            .reports
            .iter()
            .map(|s| format!("{:.2e}->{:.2e}", s.eps_in, s.eps_out))
            .collect();
        println!("sample {} at ({}): {:?}, steps [{}]", r.index, sigma.join(", "), r.status, eps.join(", "));
    }
    Ok(())
}
