//! The invariant torus assembled from the composed transforms, and the
//! linear stability of its normal dynamics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::iteration::SampleRun;
use crate::normal_form::{block_slot, NormalForm};
use crate::series::{add, d_action, poisson_bracket, series_norm, MonoKey, TFSeries};

const LIE_TOLERANCE: f64 = 1e-17;
const LIE_MAX_ORDERS: usize = 24;
const STABILITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: Vec<i16>,
    pub re: f64,
    pub im: f64,
}

fn evaluate(terms: &[FourierTerm], theta: &[f64]) -> Complex64 {
    terms
        .iter()
        .map(|t| {
            let phase: f64 = t.k.iter().zip(theta).map(|(&k, &x)| k as f64 * x).sum();
            Complex64::new(t.re, t.im) * Complex64::from_polar(1.0, phase)
        })
        .sum()
}

/// `Ψ(θ) = (θ̃ + Θ(θ), I(θ), w(θ))`, every component a Fourier series in
/// all angles `θ = (θ̄, θ̃)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub nu: usize,
    pub tangential: Vec<i32>,
    /// Squared amplitude `I*` the actions are measured from.
    pub action_center: f64,
    pub angle: Vec<Vec<FourierTerm>>,
    pub action: Vec<Vec<FourierTerm>>,
    pub normal: BTreeMap<i16, Vec<FourierTerm>>,
}

impl Embedding {
    pub fn trivial(nu: usize, tangential: &[i32], action_center: f64) -> Self {
        let b = tangential.len();
        Self {
            nu,
            tangential: tangential.to_vec(),
            action_center,
            angle: vec![Vec::new(); b],
            action: vec![Vec::new(); b],
            normal: BTreeMap::new(),
        }
    }

    /// Complex amplitude of every lattice mode at the torus point `θ`:
    /// `√(I* + I_j) e^{−iθ̃_j}` on tangential sites, `w_n` elsewhere.
    pub fn modes(&self, theta: &[f64]) -> BTreeMap<i32, Complex64> {
        let mut out = BTreeMap::new();
        for (j, &site) in self.tangential.iter().enumerate() {
            let angle = theta[self.nu + j] + evaluate(&self.angle[j], theta).re;
            let action = self.action_center + evaluate(&self.action[j], theta).re;
            out.insert(site, Complex64::from_polar(action.max(0.0).sqrt(), -angle));
        }
        for (&n, terms) in &self.normal {
            out.insert(n as i32, evaluate(terms, theta));
        }
        out
    }

    pub fn term_count(&self) -> usize {
        self.angle.iter().chain(&self.action).chain(self.normal.values()).map(Vec::len).sum()
    }
}

/// `Σ_{m≥0} ad_F^m g / (m + offset)!` with `ad_F g = {g, F}`.
fn lie_series(g: &TFSeries, f: &TFSeries, offset: usize) -> Result<TFSeries> {
    let dom = f.budget().tail_ref;
    let first = (1..=offset).fold(1.0, |acc, i| acc * i as f64);
    let mut term = g.scale_c((1.0 / first).into());
    let mut total = term.clone();
    for m in 1..=LIE_MAX_ORDERS {
        term = poisson_bracket(&term, f)?.scale_c((1.0 / (m + offset) as f64).into());
        if term.is_empty() {
            return Ok(total);
        }
        total = add(&total, &term)?;
        let size = series_norm(&term, &dom);
        if size <= LIE_TOLERANCE * series_norm(&total, &dom) {
            return Ok(total);
        }
    }
    Err(KamError::LieNonContraction(format!(
        "coordinate series did not settle in {LIE_MAX_ORDERS} orders"
    )))
}

fn on_zero_section(f: &TFSeries) -> Vec<FourierTerm> {
    f.terms()
        .iter()
        .filter(|(key, _)| key.is_fourier_only())
        .filter(|(_, v)| v.value.norm() > 0.0)
        .map(|(key, v)| FourierTerm {
            k: key.k.to_vec(),
            re: v.value.re,
            im: v.value.im,
        })
        .collect()
}

/// `Ψ = φ₀ ∘ … ∘ φ_last` on the zero section, each `φ` the time-one flow
/// of a generator.
pub fn compose_embedding(generators: &[TFSeries], tangential: &[i32], action_center: f64) -> Result<Embedding> {
    let Some(first) = generators.first() else {
        return Err(KamError::InvalidModel("no generators to compose".into()));
    };
    let budget = first.budget().clone();
    let (nu, b, dim) = (budget.nu, budget.b, budget.dim());
    let zero_k = vec![0i16; dim];
    let zero_l = vec![0u8; b];
    let pull = |mut g: TFSeries| -> Result<TFSeries> {
        for f in generators {
            g = lie_series(&g, f, 0)?;
        }
        Ok(g)
    };

    let mut embedding = Embedding::trivial(nu, tangential, action_center);
    for j in 0..b {
        let mut l = zero_l.clone();
        l[j] = 1;
        let coordinate = TFSeries::monomial(&budget, MonoKey::new(&zero_k, &l, &[], &[]), budget.jet(1.0.into()))?;
        embedding.action[j] = on_zero_section(&pull(coordinate)?);

        let mut shift = TFSeries::zero(&budget);
        for f in generators {
            shift = add(&lie_series(&shift, f, 0)?, &lie_series(&d_action(f, j).neg(), f, 1)?)?;
        }
        embedding.angle[j] = on_zero_section(&shift);
    }
    for n in budget.normal_sites() {
        let coordinate = TFSeries::monomial(&budget, MonoKey::new(&zero_k, &zero_l, &[(n, 1)], &[]), budget.jet(1.0.into()))?;
        let terms = on_zero_section(&pull(coordinate)?);
        if !terms.is_empty() {
            embedding.normal.insert(n, terms);
        }
    }
    Ok(embedding)
}

/// Constant-coefficient normal dynamics `ẇ = −i(Ω̄ + A) w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpectrum {
    pub frequencies: BTreeMap<i16, Complex64>,
    pub blocks: BTreeMap<u16, [[Complex64; 2]; 2]>,
}

impl ReducedSpectrum {
    pub fn of(nf: &NormalForm) -> Self {
        let budget = nf.budget();
        let frequencies = budget
            .normal_sites()
            .into_iter()
            .map(|n| (n, nf.mean_frequency(n).value))
            .collect();
        let blocks = nf
            .blocks
            .iter()
            .map(|(&m, b)| (m, [[b[0][0].value, b[0][1].value], [b[1][0].value, b[1][1].value]]))
            .collect();
        Self { frequencies, blocks }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub n: u16,
    /// Eigenvalues of `Ω̄ + A` on the block; the linear spectrum is `−i`
    /// times these.
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub pass: bool,
    /// Largest `|Re|` over the linear spectrum.
    pub max_real_part: f64,
    pub hermitian_defect: f64,
    pub max_frequency_imag: f64,
    pub blocks: Vec<BlockSpectrum>,
}

fn eigenvalues(m: [[Complex64; 2]; 2]) -> [Complex64; 2] {
    let half_trace = (m[0][0] + m[1][1]) * 0.5;
    let half_gap = (m[0][0] - m[1][1]) * 0.5;
    let root = (half_gap * half_gap + m[0][1] * m[1][0]).sqrt();
    [half_trace + root, half_trace - root]
}

pub fn linear_stability(spectrum: &ReducedSpectrum) -> Stability {
    let freq = |n: i16| spectrum.frequencies.get(&n).copied();
    let mut max_real: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let mut blocks = Vec::new();
    let mut covered = Vec::new();
    for (&m, a) in &spectrum.blocks {
        let sites: Vec<i16> = [m as i16, -(m as i16)].into_iter().filter(|&n| freq(n).is_some()).collect();
        for i in 0..2 {
            for j in 0..2 {
                defect = defect.max((a[i][j] - a[j][i].conj()).norm());
            }
        }
        let eig: Vec<Complex64> = match sites.as_slice() {
            [p, q] => {
                let mut full = *a;
                full[block_slot(*p)][block_slot(*p)] += freq(*p).unwrap_or_default();
                full[block_slot(*q)][block_slot(*q)] += freq(*q).unwrap_or_default();
                eigenvalues(full).to_vec()
            }
            [p] => vec![freq(*p).unwrap_or_default() + a[block_slot(*p)][block_slot(*p)]],
            _ => Vec::new(),
        };
        for e in &eig {
            max_real = max_real.max(e.im.abs());
        }
        covered.extend(sites);
        blocks.push(BlockSpectrum { n: m, eigenvalues: eig });
    }
    let mut max_imag: f64 = 0.0;
    for (n, f) in &spectrum.frequencies {
        max_imag = max_imag.max(f.im.abs());
        if !covered.contains(n) {
            max_real = max_real.max(f.im.abs());
        }
    }
    Stability {
        pass: max_real <= STABILITY_TOLERANCE && defect <= STABILITY_TOLERANCE && max_imag <= STABILITY_TOLERANCE,
        max_real_part: max_real,
        hermitian_defect: defect,
        max_frequency_imag: max_imag,
        blocks,
    }
}

/// Everything `torus.json` records about one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub sample: usize,
    pub sigma: Vec<f64>,
    pub steps: usize,
    pub omega_star: Vec<f64>,
    /// Perturbation size left after the composed steps.
    pub eps_final: f64,
    /// Radius of the final domain.
    pub s_final: f64,
    pub spectrum: ReducedSpectrum,
    pub stability: Stability,
    pub embedding: Embedding,
}

/// The torus after the first `steps` accepted steps of a sample.
pub fn extract_torus(run: &SampleRun, steps: usize, s_final: f64) -> Result<Torus> {
    if steps > run.accepted_steps() {
        return Err(KamError::InvalidModel(format!(
            "sample {} has {} accepted steps, {steps} requested",
            run.index,
            run.accepted_steps()
        )));
    }
    let normal = &run.normals[steps];
    let tangential = normal.budget().tangential.clone();
    let embedding = if steps == 0 {
        Embedding::trivial(normal.budget().nu, &tangential, run.action_center)
    } else {
        compose_embedding(&run.generators[..steps], &tangential, run.action_center)?
    };
    let eps_final = match steps {
        0 => run.reports.first().map_or(0.0, |r| r.eps_in),
        s => run.reports[s - 1].eps_out,
    };
    let spectrum = ReducedSpectrum::of(normal);
    Ok(Torus {
        sample: run.index,
        sigma: run.sigma.clone(),
        steps,
        omega_star: normal.omega_values(),
        eps_final,
        s_final,
        stability: linear_stability(&spectrum),
        spectrum,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_block_is_stable() {
        let spectrum = ReducedSpectrum {
            frequencies: [(2, c(2.0, 0.0)), (-2, c(2.0, 0.0)), (3, c(3.0, 0.0))].into_iter().collect(),
            blocks: [(2, [[c(0.1, 0.0), c(0.02, 0.01)], [c(0.02, -0.01), c(0.1, 0.0)]])].into_iter().collect(),
        };
        let s = linear_stability(&spectrum);
        assert!(s.pass);
        let radius = c(0.02, 0.01).norm();
        let mut eig: Vec<f64> = s.blocks[0].eigenvalues.iter().map(|e| e.re).collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - (2.1 - radius)).abs() < 1e-14);
        assert!((eig[1] - (2.1 + radius)).abs() < 1e-14);
    }

    #[test]
    fn skew_block_is_unstable() {
        let spectrum = ReducedSpectrum {
            frequencies: [(2, c(2.0, 0.0)), (-2, c(2.0, 0.0))].into_iter().collect(),
            blocks: [(2, [[c(0.0, 0.0), c(0.01, 0.0)], [c(-0.01, 0.0), c(0.0, 0.0)]])].into_iter().collect(),
        };
        let s = linear_stability(&spectrum);
        assert!(!s.pass);
        assert!((s.max_real_part - 0.01).abs() < 1e-14);
    }

    #[test]
    fn no_blocks_gives_the_bare_frequencies() {
        let spectrum = ReducedSpectrum {
            frequencies: [(4, c(4.0, 0.0)), (-4, c(4.0, 0.0))].into_iter().collect(),
            blocks: BTreeMap::new(),
        };
        let s = linear_stability(&spectrum);
        assert!(s.pass && s.blocks.is_empty() && s.max_real_part == 0.0);
    }
}
