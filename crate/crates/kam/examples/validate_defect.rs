//! Integrate the lattice from points of the extracted tori and compare with
//! the predicted quasi-periodic motion. Writes a short trajectory dump.

use kam::config::RunConfig;
use kam::iteration::{run_sample, Setup};
use kam::lattice::{sample_angles, torus_defect, write_frames, Lattice};
use kam::torus::extract_torus;

fn main() -> kam::Result<()> {
    let cfg = RunConfig::default();
    let schedule = cfg.schedule()?;
    let setup = Setup::new(&cfg.model, &schedule)?;
    let run = run_sample(&setup, 0, &cfg.model.default_sigma())?;
    let lattice = Lattice::new(&cfg.model, &run.sigma)?;
    let thetas = sample_angles(cfg.dim(), cfg.validate.samples, cfg.validate.seed);

    for steps in 0..=run.accepted_steps() {
        let torus = extract_torus(&run, steps, schedule.rows[steps].s)?;
        let report = torus_defect(&lattice, &torus, &cfg.validate, schedule.config.a, 0.5 * schedule.config.rho0, &thetas)?;
        println!(
            "{steps} steps: defect {:.3e} (bound {:.3e}), step size {:.2e}",
            report.defect, report.bound, report.step_size
        );
    }

    let torus = extract_torus(&run, run.accepted_steps(), schedule.rows[run.accepted_steps()].s)?;
    let start = lattice.state_from_modes(torus.embedding.modes(&thetas[0]), 0.0);
    let path = lattice.integrate(&start, lattice.default_step(), 1000, 100, &thetas[0][..cfg.model.nu])?;
    let file = std::env::temp_dir().join("kam_frames.bin");
    write_frames(&path, &mut std::fs::File::create(&file)?)?;
    println!("wrote {} frames to {}", path.len(), file.display());
    Ok(())
}
