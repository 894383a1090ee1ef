//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::lattice::DefectConfig;
use crate::measure::MeasureConfig;
use crate::model::ModelConfig;
use crate::schedule::{make_schedule, Schedule, ScheduleConfig};

/// Either a number of parameter points or the points themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSamples {
    Count(usize),
    List(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub measure: MeasureConfig,
    pub validate: DefectConfig,
    pub sigma_samples: SigmaSamples,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            schedule: ScheduleConfig::default(),
            measure: MeasureConfig::default(),
            validate: DefectConfig::default(),
            sigma_samples: SigmaSamples::Count(1),
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parse TOML text. Unknown keys are errors; the model is validated.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| KamError::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.model.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.model.nu + self.model.b()
    }

    /// The schedule; hard gates fail here.
    pub fn schedule(&self) -> Result<Schedule> {
        make_schedule(&self.schedule, self.dim())
    }

    /// The parameter points of the run. A count of `n` gives the box centre
    /// followed by `n − 1` seeded uniform draws from the box.
    pub fn samples(&self) -> Result<Vec<Vec<f64>>> {
        match &self.sigma_samples {
            SigmaSamples::List(list) => {
                if let Some(bad) = list.iter().find(|s| s.len() != self.dim()) {
                    return Err(KamError::InvalidModel(format!(
                        "sigma sample {bad:?} needs {} entries",
                        self.dim()
                    )));
                }
                Ok(list.clone())
            }
            SigmaSamples::Count(0) => Err(KamError::InvalidModel("sigma_samples must be positive".into())),
            SigmaSamples::Count(n) => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
                let mut out = vec![self.model.default_sigma()];
                let intervals: Vec<[f64; 2]> = self.model.omega_box.iter().chain(&self.model.xi_box).copied().collect();
                for _ in 1..*n {
                    out.push(intervals.iter().map(|iv| rng.gen_range(iv[0]..iv[1])).collect());
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig {
            sigma_samples: SigmaSamples::List(vec![vec![1.61, 0.3, 0.4]]),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = RunConfig::parse("seed = 3\n\n[schedule]\nbeta_prim = 0.2\n").unwrap_err();
        match err {
            KamError::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("beta_prim"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counted_samples_start_at_the_centre_and_stay_in_the_box() {
        let cfg = RunConfig {
            sigma_samples: SigmaSamples::Count(5),
            ..RunConfig::default()
        };
        let s = cfg.samples().unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], cfg.model.default_sigma());
        for p in &s[1..] {
            assert!(p[0] >= 1.6 && p[0] < 1.64);
            assert!(p[1..].iter().all(|x| (0.1..0.9).contains(x)));
        }
        assert_eq!(cfg.samples().unwrap(), s);
    }
}
