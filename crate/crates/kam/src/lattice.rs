//! Direct integration of the truncated lattice equations
//! `q̇_n = λ_n p_n`, `ṗ_n = −λ_n q_n − ε ∂_{q_n}(G + forcing)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::model::{eigen, ModelConfig};
use crate::torus::Torus;

const NEWTON_TOLERANCE: f64 = 1e-15;
const NEWTON_MAX_ITERATIONS: usize = 50;

/// The lattice Hamiltonian
/// `½Σλ_n(p_n² + q_n²) + ε(¼(Σ n²q_n²/λ_n)² + Σ g_n(θ̄) q_n/√λ_n)`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub sites: Vec<i32>,
    pub lambda: Vec<f64>,
    coupling: Vec<f64>,
    forcing: Vec<Vec<(Vec<i16>, Complex64)>>,
    pub eps: f64,
    pub omega_bar: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl Lattice {
    pub fn new(model: &ModelConfig, sigma: &[f64]) -> Result<Self> {
        model.validate()?;
        let nu = model.nu;
        if sigma.len() != nu + model.b() {
            return Err(KamError::InvalidModel(format!(
                "parameter point has {} entries, expected {}",
                sigma.len(),
                nu + model.b()
            )));
        }
        let n_max = model.budget.n_max as i32;
        let table = model.forcing_table();
        let sites: Vec<i32> = (-n_max..=n_max).collect();
        let lambda: Vec<f64> = sites
            .iter()
            .map(|&n| eigen(n, sigma, nu, &model.tangential_sites).value.re)
            .collect();
        if let Some(i) = lambda.iter().position(|&l| !(l > 0.0)) {
            return Err(KamError::InvalidModel(format!("site {} has no positive frequency", sites[i])));
        }
        Ok(Self {
            coupling: sites.iter().zip(&lambda).map(|(&n, l)| (n * n) as f64 / l).collect(),
            forcing: sites.iter().map(|&n| table.coefficients(n).to_vec()).collect(),
            sites,
            lambda,
            eps: model.eps,
            omega_bar: sigma[..nu].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index(&self, n: i32) -> Option<usize> {
        self.sites.binary_search(&n).ok()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// The integrator step `min(0.01/λ_max, 0.01)`.
    pub fn default_step(&self) -> f64 {
        (0.01 / self.lambda_max()).min(0.01)
    }

    fn stretch(&self, q: &[f64]) -> f64 {
        self.coupling.iter().zip(q).map(|(c, x)| c * x * x).sum()
    }

    /// `G(q) = ¼(Σ n² q_n²/λ_n)²`.
    pub fn quartic(&self, q: &[f64]) -> f64 {
        0.25 * self.stretch(q).powi(2)
    }

    pub fn quartic_gradient(&self, q: &[f64]) -> Vec<f64> {
        let s = self.stretch(q);
        self.coupling.iter().zip(q).map(|(c, x)| s * c * x).collect()
    }

    /// `g_n(θ̄)/√λ_n` at the external angles `θ̄`.
    pub fn forcing(&self, theta_bar: &[f64]) -> Vec<f64> {
        self.forcing
            .iter()
            .zip(&self.lambda)
            .map(|(coeffs, l)| {
                let g: Complex64 = coeffs
                    .iter()
                    .map(|(k, c)| {
                        let phase: f64 = k.iter().zip(theta_bar).map(|(&a, t)| a as f64 * t).sum();
                        c * Complex64::from_polar(1.0, phase)
                    })
                    .sum();
                g.re / l.sqrt()
            })
            .collect()
    }

    pub fn external_angles(&self, phase: &[f64], t: f64) -> Vec<f64> {
        phase.iter().zip(&self.omega_bar).map(|(p, w)| p + w * t).collect()
    }

    /// Full energy at time `t` with external phase `phase` at `t = 0`.
    pub fn energy(&self, state: &LatticeState, phase: &[f64]) -> f64 {
        let quadratic: f64 = self
            .lambda
            .iter()
            .zip(state.q.iter().zip(&state.p))
            .map(|(l, (q, p))| 0.5 * l * (q * q + p * p))
            .sum();
        let drive: f64 = self
            .forcing(&self.external_angles(phase, state.t))
            .iter()
            .zip(&state.q)
            .map(|(f, q)| f * q)
            .sum();
        quadratic + self.eps * (self.quartic(&state.q) + drive)
    }

    /// `(q̇, ṗ)` at the state.
    pub fn vector_field(&self, state: &LatticeState, phase: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let grad = self.quartic_gradient(&state.q);
        let drive = self.forcing(&self.external_angles(phase, state.t));
        let dq = self.lambda.iter().zip(&state.p).map(|(l, p)| l * p).collect();
        let dp = (0..self.len())
            .map(|i| -self.lambda[i] * state.q[i] - self.eps * (grad[i] + drive[i]))
            .collect();
        (dq, dp)
    }

    /// One implicit-midpoint step, solved by Newton iteration with the
    /// linear part as the frozen Jacobian.
    pub fn midpoint_step(&self, state: &LatticeState, h: f64, phase: &[f64]) -> Result<LatticeState> {
        let n = self.len();
        let mid_t = state.t + 0.5 * h;
        let drive = self.forcing(&self.external_angles(phase, mid_t));
        let mut qm = state.q.clone();
        let mut pm = state.p.clone();
        let mut change: f64 = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let grad = self.quartic_gradient(&qm);
            change = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                let a = 0.5 * h * self.lambda[i];
                let rhs = state.p[i] - 0.5 * h * self.eps * (grad[i] + drive[i]);
                let denom = 1.0 + a * a;
                let q_new = (state.q[i] + a * rhs) / denom;
                let p_new = (rhs - a * state.q[i]) / denom;
                change = change.max((q_new - qm[i]).abs()).max((p_new - pm[i]).abs());
                scale = scale.max(q_new.abs()).max(p_new.abs());
                qm[i] = q_new;
                pm[i] = p_new;
            }
            if change <= NEWTON_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                return Ok(LatticeState {
                    q: qm.iter().zip(&state.q).map(|(m, q)| 2.0 * m - q).collect(),
                    p: pm.iter().zip(&state.p).map(|(m, p)| 2.0 * m - p).collect(),
                    t: state.t + h,
                });
            }
        }
        Err(KamError::NewtonFailure {
            t: state.t,
            residual: change,
        })
    }

    /// Integrate `steps` steps of size `h`, recording every `every` steps
    /// (the initial state included).
    pub fn integrate(
        &self,
        start: &LatticeState,
        h: f64,
        steps: usize,
        every: usize,
        phase: &[f64],
    ) -> Result<Vec<LatticeState>> {
        let every = every.max(1);
        let mut out = vec![start.clone()];
        let mut state = start.clone();
        for i in 1..=steps {
            state = self.midpoint_step(&state, h, phase)?;
            if i % every == 0 {
                out.push(state.clone());
            }
        }
        Ok(out)
    }

    /// `(q, p)` from complex amplitudes, `w = (q + ip)/√2`.
    pub fn state_from_modes(&self, modes: impl IntoIterator<Item = (i32, Complex64)>, t: f64) -> LatticeState {
        let mut q = vec![0.0; self.len()];
        let mut p = vec![0.0; self.len()];
        for (n, w) in modes {
            if let Some(i) = self.index(n) {
                q[i] = std::f64::consts::SQRT_2 * w.re;
                p[i] = std::f64::consts::SQRT_2 * w.im;
            }
        }
        LatticeState { q, p, t }
    }

    pub fn modes(&self, state: &LatticeState) -> Vec<Complex64> {
        state
            .q
            .iter()
            .zip(&state.p)
            .map(|(q, p)| Complex64::new(*q, *p) / std::f64::consts::SQRT_2)
            .collect()
    }

    /// `Σ_n (|δw_n| + |δw̄_n|) max(|n|,1)^a e^{|n|ρ}` between two states.
    pub fn distance(&self, x: &LatticeState, y: &LatticeState, a: f64, rho: f64) -> f64 {
        let (u, v) = (self.modes(x), self.modes(y));
        self.sites
            .iter()
            .zip(u.iter().zip(&v))
            .map(|(&n, (p, q))| {
                let m = n.unsigned_abs().max(1) as f64;
                2.0 * (p - q).norm() * m.powf(a) * (n.unsigned_abs() as f64 * rho).exp()
            })
            .sum()
    }
}

/// Write `(t, q[], p[])` frames as little-endian doubles.
pub fn write_frames<W: Write>(states: &[LatticeState], out: &mut W) -> Result<()> {
    for s in states {
        out.write_all(&s.t.to_le_bytes())?;
        for x in s.q.iter().chain(&s.p) {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Defects below this are indistinguishable from integration error.
pub const INTEGRATOR_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectConfig {
    pub horizon: f64,
    pub samples: usize,
    pub checkpoints: usize,
    /// Step size; `None` takes `min(0.01/λ_max, 0.01)`.
    pub step: Option<f64>,
    pub seed: u64,
}

impl Default for DefectConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            samples: 4,
            checkpoints: 50,
            step: None,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectSample {
    pub theta: Vec<f64>,
    pub defect: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub steps: usize,
    pub defect: f64,
    /// `10 ε^{1/2} s` at the final step, at least [`INTEGRATOR_FLOOR`].
    pub bound: f64,
    pub step_size: f64,
    pub samples: Vec<DefectSample>,
}

/// Integrate from `Ψ(θ₀)` and compare with `Ψ(θ₀ + ω_* t)`. The trajectory is
/// the Richardson combination of runs at `h` and `h/2`.
pub fn torus_defect(
    lattice: &Lattice,
    torus: &Torus,
    cfg: &DefectConfig,
    a: f64,
    rho: f64,
    thetas: &[Vec<f64>],
) -> Result<DefectReport> {
    use rayon::prelude::*;

    let nu = torus.embedding.nu;
    let h_max = cfg.step.unwrap_or_else(|| lattice.default_step());
    let checkpoints = cfg.checkpoints.max(1);
    let per = ((cfg.horizon / h_max / checkpoints as f64).ceil() as usize).max(1);
    let h = cfg.horizon / (per * checkpoints) as f64;

    let samples: Vec<DefectSample> = thetas
        .par_iter()
        .map(|theta0| -> Result<DefectSample> {
            let phase = &theta0[..nu];
            let start = lattice.state_from_modes(torus.embedding.modes(theta0), 0.0);
            let coarse = lattice.integrate(&start, h, per * checkpoints, per, phase)?;
            let fine = lattice.integrate(&start, 0.5 * h, 2 * per * checkpoints, 2 * per, phase)?;
            let mut worst: f64 = 0.0;
            for (c, f) in coarse.iter().zip(&fine) {
                let t = c.t;
                let combined = LatticeState {
                    q: c.q.iter().zip(&f.q).map(|(x, y)| (4.0 * y - x) / 3.0).collect(),
                    p: c.p.iter().zip(&f.p).map(|(x, y)| (4.0 * y - x) / 3.0).collect(),
                    t,
                };
                let theta: Vec<f64> = theta0.iter().zip(&torus.omega_star).map(|(x, w)| x + w * t).collect();
                let predicted = lattice.state_from_modes(torus.embedding.modes(&theta), t);
                worst = worst.max(lattice.distance(&combined, &predicted, a, rho));
            }
            let e0 = lattice.energy(&start, phase);
            let e1 = lattice.energy(fine.last().expect("nonempty"), phase);
            Ok(DefectSample {
                theta: theta0.clone(),
                defect: worst,
                energy_drift: ((e1 - e0) / e0).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DefectReport {
        steps: torus.steps,
        defect: samples.iter().map(|s| s.defect).fold(0.0, f64::max),
        bound: (10.0 * torus.eps_final.sqrt() * torus.s_final).max(INTEGRATOR_FLOOR),
        step_size: h,
        samples,
    })
}

/// Seeded uniform angles on the torus of dimension `dim`.
pub fn sample_angles(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect()
}
