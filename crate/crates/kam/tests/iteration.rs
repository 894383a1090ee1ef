use kam::config::{RunConfig, SigmaSamples};
use kam::iteration::{run_sample, SampleStatus, Setup};
use kam::torus::extract_torus;

#[test]
fn default_run_accepts_one_contracting_step() {
    let cfg = RunConfig::default();
    let schedule = cfg.schedule().unwrap();
    let setup = Setup::new(&cfg.model, &schedule).unwrap();
    let run = run_sample(&setup, 0, &cfg.model.default_sigma()).unwrap();

    assert!(run.assumptions.all_pass());
    assert_eq!(run.status, SampleStatus::Exhausted { nu: 1 });
    assert_eq!(run.accepted_steps(), 1);
    let step = &run.reports[0];
    assert!(step.accepted);
    assert!(step.residual <= 1e-9, "residual {:.3e}", step.residual);
    assert!(step.eps_out <= step.eta * step.eps_in);
    assert!(step.eps_out < 1e-3 * step.eps_in);
    assert_eq!(step.a5_violations, 0);
    assert!(step.drift <= step.drift_bound);
}

#[test]
fn tori_are_stable_and_start_trivial() {
    let cfg = RunConfig::default();
    let schedule = cfg.schedule().unwrap();
    let setup = Setup::new(&cfg.model, &schedule).unwrap();
    let run = run_sample(&setup, 0, &cfg.model.default_sigma()).unwrap();

    let trivial = extract_torus(&run, 0, schedule.rows[0].s).unwrap();
    assert!(trivial.embedding.normal.is_empty());
    assert_eq!(trivial.embedding.term_count(), 0);

    let last = extract_torus(&run, 1, schedule.rows[1].s).unwrap();
    assert!(last.stability.pass);
    assert!(last.embedding.term_count() > 0);
    assert_eq!(last.eps_final, run.reports[0].eps_out);
    assert!(extract_torus(&run, 2, schedule.rows[2].s).is_err());
}

#[test]
fn schedule_rows_shrink_until_exhaustion() {
    let schedule = RunConfig::default().schedule().unwrap();
    assert!(schedule.failed_gates().all(|g| !g.hard));
    let live = schedule.exhausted_at().unwrap_or(schedule.rows.len() - 1);
    assert_eq!(live, 1);
    for w in schedule.rows[..=live].windows(2) {
        assert!(w[1].r < w[0].r);
        assert!(w[1].s < w[0].s);
        assert!(w[1].gamma < w[0].gamma);
        assert!(w[1].eps < w[0].eps);
        assert!(w[1].k >= w[0].k);
    }
    assert!(schedule.rows[live].eta >= 1.0);
}

#[test]
fn counted_samples_are_reproducible() {
    let cfg = RunConfig {
        sigma_samples: SigmaSamples::Count(5),
        seed: 42,
        ..RunConfig::default()
    };
    let a = cfg.samples().unwrap();
    let b = cfg.samples().unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    let other = RunConfig { seed: 43, ..cfg }.samples().unwrap();
    assert_eq!(a[0], other[0]);
    assert_ne!(a[1], other[1]);
}
