//! The `run`, `measure` and `validate` commands: orchestration and report files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{KamError, Result};
use crate::iteration::{self, SampleRun, SampleStatus, Setup};
use crate::lattice::{sample_angles, torus_defect, DefectReport, Lattice, INTEGRATOR_FLOOR};
use crate::measure::{excluded_measure, scaling_ratios, write_csv, MeasureReport};
use crate::schedule::{Gate, Schedule};
use crate::step::StepReport;
use crate::torus::{extract_torus, linear_stability, Torus};

/// Band on `f(2γ) / (2 f(γ))`.
pub const SCALING_BAND: (f64, f64) = (0.5, 1.5);
/// Largest relative change of `f` between the grid and the refined grid.
pub const REFINEMENT_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Io = 1,
    Gate = 2,
    AllExcluded = 3,
    Fail = 4,
}

impl Exit {
    pub fn of_error(e: &KamError) -> Self {
        match e {
            KamError::Gate { .. } => Exit::Gate,
            _ => Exit::Io,
        }
    }
}

/// Contents of `torus.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusFile {
    /// Weight exponent and decay rate of the defect norm.
    pub a: f64,
    pub rho: f64,
    pub tori: Vec<Torus>,
}

#[derive(Serialize)]
struct StepLine<'a> {
    sample: usize,
    sigma: &'a [f64],
    #[serde(flatten)]
    report: &'a StepReport,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum HistoryLine<'a> {
    Schedule {
        kappa: f64,
        c: f64,
        product_tail: f64,
        gates: &'a [Gate],
        rows: &'a [crate::schedule::Row],
    },
    Sample {
        index: usize,
        sigma: &'a [f64],
        #[serde(flatten)]
        status: &'a SampleStatus,
        accepted_steps: usize,
        eps: Vec<f64>,
        contraction_exponent: Option<f64>,
        assumptions_pass: bool,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn json_line<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Summary of a finished `run`.
pub struct RunSummary {
    pub schedule: Schedule,
    pub runs: Vec<SampleRun>,
    pub tori: TorusFile,
    pub exit: Exit,
}

/// Iterate every sample and write `steps.jsonl`, `history.jsonl`,
/// `torus.json` and `divisors/`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let schedule = cfg.schedule()?;
    for g in schedule.failed_gates().filter(|g| !g.hard) {
        log::warn!("advisory gate `{}` fails: {:.3e} vs {:.3e}", g.name, g.value, g.bound);
    }
    let setup = Setup::new(&cfg.model, &schedule)?;
    let samples = cfg.samples()?;
    fs::create_dir_all(out.join("divisors"))?;

    let runs = iteration::run(&setup, &samples)?;

    let mut steps = create(out, "steps.jsonl")?;
    let mut history = create(out, "history.jsonl")?;
    json_line(
        &mut history,
        &HistoryLine::Schedule {
            kappa: schedule.kappa,
            c: schedule.c,
            product_tail: schedule.product_tail,
            gates: &schedule.gates,
            rows: &schedule.rows,
        },
    )?;
    let mut tori = Vec::new();
    for run in &runs {
        for report in &run.reports {
            json_line(&mut steps, &StepLine { sample: run.index, sigma: &run.sigma, report })?;
        }
        let mut eps: Vec<f64> = run.reports.first().map(|r| r.eps_in).into_iter().collect();
        eps.extend(run.reports.iter().filter(|r| r.accepted).map(|r| r.eps_out));
        json_line(
            &mut history,
            &HistoryLine::Sample {
                index: run.index,
                sigma: &run.sigma,
                status: &run.status,
                accepted_steps: run.accepted_steps(),
                eps,
                contraction_exponent: run.contraction_exponent(),
                assumptions_pass: run.assumptions.all_pass(),
            },
        )?;
        for (nu, log) in run.divisors.iter().enumerate() {
            let mut f = create(&out.join("divisors"), &format!("sample{}_step{nu}.csv", run.index))?;
            log.write_csv(&mut f)?;
            f.flush()?;
        }
        if run.status.is_success() {
            for k in 0..=run.accepted_steps() {
                tori.push(extract_torus(run, k, schedule.rows[k].s)?);
            }
        }
    }
    steps.flush()?;
    history.flush()?;

    let tori = TorusFile {
        a: schedule.config.a,
        rho: 0.5 * schedule.config.rho0,
        tori,
    };
    let mut f = create(out, "torus.json")?;
    serde_json::to_writer_pretty(&mut f, &tori)?;
    writeln!(f)?;
    f.flush()?;

    let excluded = runs.iter().filter(|r| matches!(r.status, SampleStatus::Excluded { .. })).count();
    let final_stable = tori
        .tori
        .iter()
        .filter(|t| runs.iter().any(|r| r.index == t.sample && r.accepted_steps() == t.steps))
        .all(|t| t.stability.pass);
    let exit = if excluded == runs.len() {
        Exit::AllExcluded
    } else if runs.iter().all(|r| r.status.is_success() || matches!(r.status, SampleStatus::Excluded { .. })) && final_stable {
        Exit::Ok
    } else {
        Exit::Fail
    };
    Ok(RunSummary {
        schedule,
        runs,
        tori,
        exit,
    })
}

/// Outcome of `measure`.
pub struct MeasureSummary {
    pub reports: Vec<MeasureReport>,
    pub refined: Vec<MeasureReport>,
    /// `(γ, f(2γ)/(2f(γ)))` on the main grid.
    pub ratios: Vec<(f64, f64)>,
    /// `(γ, |f_refined − f| / f)`.
    pub refinement: Vec<(f64, f64)>,
    pub monotone: bool,
    pub exit: Exit,
}

/// Excluded fractions per `γ` on the configured grid and, if set, on the
/// refined grid. Writes `measure.csv` and `measure_refined.csv`.
pub fn measure(cfg: &RunConfig, gammas: &[f64], out: &Path) -> Result<MeasureSummary> {
    if gammas.is_empty() {
        return Err(KamError::InvalidModel("empty gamma list".into()));
    }
    let schedule = cfg.schedule()?;
    cfg.model.validate()?;
    fs::create_dir_all(out)?;
    let at = |m: usize| -> Result<Vec<MeasureReport>> {
        gammas
            .iter()
            .map(|&g| excluded_measure(&cfg.model, &schedule, g, m, &cfg.measure))
            .collect()
    };
    let reports = at(cfg.measure.grid)?;
    let mut f = create(out, "measure.csv")?;
    write_csv(&reports, &mut f)?;
    f.flush()?;
    let refined = match cfg.measure.refined_grid {
        Some(m) => {
            let r = at(m)?;
            let mut f = create(out, "measure_refined.csv")?;
            write_csv(&r, &mut f)?;
            f.flush()?;
            r
        }
        None => Vec::new(),
    };

    let ratios = scaling_ratios(&reports);
    let refinement: Vec<(f64, f64)> = reports
        .iter()
        .zip(&refined)
        .filter(|(c, _)| c.excluded_fraction > 0.0)
        .map(|(c, r)| (c.gamma, (r.excluded_fraction - c.excluded_fraction).abs() / c.excluded_fraction))
        .collect();
    let mut by_gamma: Vec<&MeasureReport> = reports.iter().collect();
    by_gamma.sort_by(|x, y| x.gamma.total_cmp(&y.gamma));
    let monotone = by_gamma.windows(2).all(|w| w[0].excluded_fraction <= w[1].excluded_fraction);
    let pass = monotone
        && ratios.iter().all(|&(_, r)| (SCALING_BAND.0..=SCALING_BAND.1).contains(&r))
        && refinement.iter().all(|&(_, d)| d < REFINEMENT_TOLERANCE);
    Ok(MeasureSummary {
        reports,
        refined,
        ratios,
        refinement,
        monotone,
        exit: if pass { Exit::Ok } else { Exit::Fail },
    })
}

/// Verdict on one sample's tori.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVerdict {
    pub sample: usize,
    /// Defect of the torus after 0, 1, … steps.
    pub defects: Vec<DefectReport>,
    pub decreasing: bool,
    pub within_bound: bool,
    pub stable: bool,
}

impl SampleVerdict {
    pub fn pass(&self) -> bool {
        self.decreasing && self.within_bound && self.stable
    }
}

pub struct ValidateSummary {
    pub verdicts: Vec<SampleVerdict>,
    pub exit: Exit,
}

pub fn read_tori(path: &Path) -> Result<TorusFile> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| KamError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Integrate each torus of `torus.json`, recheck its stability and write
/// `defect.csv`.
pub fn validate(cfg: &RunConfig, torus_path: &Path, out: &Path) -> Result<ValidateSummary> {
    let file = read_tori(torus_path)?;
    cfg.model.validate()?;
    let mut groups: BTreeMap<usize, Vec<&Torus>> = BTreeMap::new();
    for t in &file.tori {
        groups.entry(t.sample).or_default().push(t);
    }
    let dim = cfg.dim();
    let thetas = sample_angles(dim, cfg.validate.samples, cfg.validate.seed);
    fs::create_dir_all(out)?;
    let mut csv = create(out, "defect.csv")?;
    writeln!(csv, "sample,steps,defect,bound,max_energy_drift,stable")?;
    let mut verdicts = Vec::new();
    for (sample, mut tori) in groups {
        tori.sort_by_key(|t| t.steps);
        let mut defects = Vec::new();
        let mut stable = Vec::new();
        for t in &tori {
            if t.omega_star.len() != dim || t.sigma.len() != dim {
                return Err(KamError::InvalidModel(format!("torus of sample {sample} does not match the model dimension")));
            }
            let lattice = Lattice::new(&cfg.model, &t.sigma)?;
            let report = torus_defect(&lattice, t, &cfg.validate, file.a, file.rho, &thetas)?;
            let verdict = linear_stability(&t.spectrum).pass;
            let drift = report.samples.iter().map(|s| s.energy_drift).fold(0.0, f64::max);
            writeln!(csv, "{sample},{},{:e},{:e},{:e},{verdict}", t.steps, report.defect, report.bound, drift)?;
            log::info!("sample {sample} after {} steps: defect {:.3e} (bound {:.3e})", t.steps, report.defect, report.bound);
            defects.push(report);
            stable.push(verdict);
        }
        let decreasing = defects
            .windows(2)
            .all(|w| w[1].defect < w[0].defect || w[0].defect.max(w[1].defect) <= INTEGRATOR_FLOOR);
        let last = defects.last();
        verdicts.push(SampleVerdict {
            sample,
            decreasing,
            within_bound: last.map_or(false, |d| d.defect <= d.bound),
            stable: stable.last().copied().unwrap_or(false),
            defects,
        });
    }
    csv.flush()?;
    let exit = if !verdicts.is_empty() && verdicts.iter().all(SampleVerdict::pass) {
        Exit::Ok
    } else {
        Exit::Fail
    };
    Ok(ValidateSummary { verdicts, exit })
}
