//! Excluded parameter fraction for a few values of gamma and the scaling ratio.

use kam::measure::{excluded_measure, scaling_ratios, write_csv, MeasureConfig};
use kam::model::ModelConfig;
use kam::schedule::{make_schedule, ScheduleConfig};

fn main() -> kam::Result<()> {
    let model = ModelConfig::default();
    let schedule = make_schedule(&ScheduleConfig::default(), 3)?;
    let cfg = MeasureConfig::default();
    let grid = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let reports = cfg
        .gammas
        .iter()
        .map(|&g| excluded_measure(&model, &schedule, g, grid, &cfg))
        .collect::<kam::Result<Vec<_>>>()?;
    for r in &reports {
        println!(
            "gamma {:<5} excluded {:.5}  uncounted bound {:.2e}",
            r.gamma, r.excluded_fraction, r.omitted_bound
        );
    }
    for (g, ratio) in scaling_ratios(&reports) {
        println!("f(2*{g}) / (2 f({g})) = {ratio:.3}");
    }
    write_csv(&reports, &mut std::io::stdout())
}
