//! Grid estimate of the parameter measure removed by the small-divisor
//! conditions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::homological::{fourier_box, DivisorKind};
use crate::model::{eigen, ModelConfig};
use crate::schedule::Schedule;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

const KINDS: [DivisorKind; 4] = [DivisorKind::D1, DivisorKind::D2, DivisorKind::D3, DivisorKind::D4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub gammas: Vec<f64>,
    pub grid: usize,
    /// Finer grid for the resolution check; `None` skips it.
    pub refined_grid: Option<usize>,
    /// Pair window `C`; `None` takes `4(1 + E₀)`.
    pub window: Option<f64>,
    /// Conditions whose slab is provably thinner than this fraction of the
    /// box are bounded instead of counted.
    pub skip_below: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.2, 0.1, 0.05],
            grid: 128,
            refined_grid: Some(256),
            window: None,
            skip_below: 1e-8,
        }
    }
}

/// One `|<k,ω(σ)> + offset| < threshold` condition.
#[derive(Clone, Debug)]
struct Slab {
    k: Vec<i16>,
    offset: f64,
    threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub gamma: f64,
    pub family: String,
    pub nu: Option<usize>,
    pub excluded_fraction: f64,
    /// Bound on the measure of the conditions that were not counted.
    pub omitted_bound: f64,
    pub conditions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub gamma: f64,
    pub grid: usize,
    pub coarse: bool,
    pub excluded_fraction: f64,
    pub omitted_bound: f64,
    pub rows: Vec<FamilyRow>,
    /// `min_i min_σ |∂ω_i/∂σ_i|` over the grid.
    pub derivative_constant: f64,
}

/// One axis of the parameter box: one point per cell and the frequency it maps to.
struct Axis {
    values: Vec<f64>,
    length: f64,
    min_slope: f64,
}

struct Grid {
    m: usize,
    axes: Vec<Axis>,
}

impl Grid {
    fn new(model: &ModelConfig, m: usize) -> Result<Self> {
        model.validate()?;
        let nu = model.nu;
        let boxes: Vec<[f64; 2]> = model.omega_box.iter().chain(&model.xi_box).copied().collect();
        let dim = boxes.len();
        let mut axes = Vec::with_capacity(dim);
        for (i, iv) in boxes.iter().enumerate() {
            let step = (iv[1] - iv[0]) / m as f64;
            // Irrational in-cell offsets keep the points off rational resonances.
            let shift = (0.5 + (i + 1) as f64 * GOLDEN).fract();
            let centre = |j: usize| iv[0] + (j as f64 + shift) * step;
            let freq = |s: f64| -> (f64, f64) {
                if i < nu {
                    (s, 1.0)
                } else {
                    let mut sigma = vec![0.0; dim];
                    sigma[i] = s;
                    let jet = eigen(model.tangential_sites[i - nu], &sigma, nu, &model.tangential_sites);
                    (jet.value.re, jet.grad[i].re)
                }
            };
            let values: Vec<f64> = (0..m).map(|j| freq(centre(j)).0).collect();
            if values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(KamError::InvalidModel(format!("frequency {i} is not increasing on its box")));
            }
            let min_slope = freq(iv[0]).1.abs().min(freq(iv[1]).1.abs());
            axes.push(Axis {
                values,
                length: iv[1] - iv[0],
                min_slope,
            });
        }
        Ok(Self { m, axes })
    }

    fn points(&self) -> usize {
        self.m.pow(self.axes.len() as u32)
    }

    /// Range of `<k, ω>` over the grid.
    fn range(&self, k: &[i16], from: usize) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (axis, &ki) in self.axes.iter().zip(k).skip(from) {
            let a = ki as f64 * axis.values[0];
            let b = ki as f64 * axis.values[self.m - 1];
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }

    /// Upper bound on the box fraction of the slab.
    fn slab_bound(&self, slab: &Slab) -> f64 {
        self.axes
            .iter()
            .zip(&slab.k)
            .filter(|(_, &k)| k != 0)
            .map(|(a, &k)| 2.0 * slab.threshold / ((k as f64).abs() * a.min_slope * a.length))
            .fold(1.0, f64::min)
    }

    fn mark(&self, slab: &Slab, bits: &mut [u64]) {
        let mut suffix = vec![(0.0, 0.0); self.axes.len() + 1];
        for i in (0..self.axes.len()).rev() {
            suffix[i] = self.range(&slab.k, i);
        }
        self.mark_from(slab, 0, slab.offset, 0, &suffix, bits);
    }

    fn mark_from(&self, slab: &Slab, axis: usize, partial: f64, base: usize, suffix: &[(f64, f64)], bits: &mut [u64]) {
        let thr = slab.threshold;
        let (lo, hi) = suffix[axis];
        if partial + lo >= thr || partial + hi <= -thr {
            return;
        }
        let m = self.m;
        let k = slab.k[axis] as f64;
        let values = &self.axes[axis].values;
        if axis + 1 == self.axes.len() {
            let (from, to) = if k == 0.0 {
                (0, m)
            } else {
                // k·v ∈ (−thr − partial, thr − partial)
                let (a, b) = ((-thr - partial) / k, (thr - partial) / k);
                let (a, b) = (a.min(b), a.max(b));
                (values.partition_point(|&v| v <= a), values.partition_point(|&v| v < b))
            };
            for j in from..to {
                let idx = base * m + j;
                bits[idx / 64] |= 1 << (idx % 64);
            }
            return;
        }
        for (j, &v) in values.iter().enumerate() {
            self.mark_from(slab, axis + 1, partial + k * v, base * m + j, suffix, bits);
        }
    }
}

fn count(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

fn union(into: &mut [u64], other: &[u64]) {
    for (a, b) in into.iter_mut().zip(other) {
        *a |= b;
    }
}

fn k_norm(k: &[i16], nu: usize) -> u32 {
    let bar: u32 = k[..nu].iter().map(|x| x.unsigned_abs() as u32).sum();
    let tilde: u32 = k[nu..].iter().map(|x| x.unsigned_abs() as u32).sum();
    bar.max(tilde)
}

/// `(offset, threshold)` pairs of one family for a given `|k|`, sorted.
fn offsets(model: &ModelConfig, kind: DivisorKind, norm: u32, ek: u32, gamma: f64, kpow: f64, tau: f64, window: f64) -> Vec<(f64, f64)> {
    let n_max = model.budget.n_max as i32;
    let normal: Vec<i32> = (-n_max..=n_max)
        .filter(|n| !model.tangential_sites.contains(n))
        .collect();
    let low = || normal.iter().filter(|n| n.unsigned_abs() <= ek);
    let mut out: Vec<(f64, f64)> = Vec::new();
    match kind {
        DivisorKind::D1 => {
            if norm > 0 {
                out.push((0.0, gamma / (norm as f64).powf(tau)));
            }
        }
        DivisorKind::D2 => {
            for &n in low() {
                for s in [1.0, -1.0] {
                    out.push((s * n.unsigned_abs() as f64, gamma / kpow));
                }
            }
        }
        DivisorKind::D3 => {
            for &n in low() {
                for &m in low() {
                    if ((n - m).abs() as f64) >= window * norm as f64 {
                        continue;
                    }
                    let (a, b) = (n.unsigned_abs() as f64, m.unsigned_abs() as f64);
                    for d in [a + b, -a - b, a - b] {
                        if norm > 0 || d != 0.0 {
                            out.push((d, gamma / kpow));
                        }
                    }
                }
            }
        }
        DivisorKind::D4 => {
            for &n in normal.iter().filter(|n| n.unsigned_abs() > ek) {
                let a = n.unsigned_abs() as f64;
                for d in [2.0 * a, -2.0 * a] {
                    out.push((d, gamma * a / kpow));
                }
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out.dedup();
    out
}

/// The conditions of one family at step `nu`, scaled by `gamma`.
fn slabs(model: &ModelConfig, schedule: &Schedule, grid: &Grid, kind: DivisorKind, nu: usize, gamma: f64, window: f64) -> Vec<Slab> {
    let row = &schedule.rows[nu];
    let tau = schedule.config.tau;
    let k_prev = if nu == 0 { 0 } else { schedule.rows[nu - 1].k };
    let kpow = (row.k as f64).powf(tau);
    let table: Vec<Vec<(f64, f64)>> = (0..=row.k)
        .map(|norm| {
            if kind == DivisorKind::D1 && norm <= k_prev {
                Vec::new()
            } else {
                offsets(model, kind, norm, row.ek, gamma, kpow, tau, window)
            }
        })
        .collect();
    let widest = table.iter().flatten().map(|o| o.1).fold(0.0, f64::max);

    let mut out = Vec::new();
    for k in fourier_box(model.nu, model.b(), row.k) {
        let k: Vec<i16> = k.iter().map(|&x| x as i16).collect();
        let list = &table[k_norm(&k, model.nu) as usize];
        let (lo, hi) = grid.range(&k, 0);
        // lo + d < thr and hi + d > −thr
        let from = list.partition_point(|o| o.0 <= -hi - widest);
        let to = list.partition_point(|o| o.0 < widest - lo);
        for &(offset, threshold) in &list[from..to] {
            if threshold > 0.0 && lo + offset < threshold && hi + offset > -threshold {
                out.push(Slab {
                    k: k.clone(),
                    offset,
                    threshold,
                });
            }
        }
    }
    out
}

/// Steps whose conditions enter the measure: those the schedule executes.
pub fn active_steps(schedule: &Schedule) -> Vec<usize> {
    let last = schedule.config.nu_max.min(schedule.rows.len() - 1);
    (0..last.max(1)).take_while(|&nu| schedule.rows[nu].eta < 1.0 || nu == 0).collect()
}

/// Fraction of a uniform `m^dim` grid over the parameter box lying in any
/// resonance slab, by family and step, at the step-zero frequencies.
pub fn excluded_measure(model: &ModelConfig, schedule: &Schedule, gamma: f64, m: usize, cfg: &MeasureConfig) -> Result<MeasureReport> {
    if !(gamma >= 0.0) || m == 0 {
        return Err(KamError::InvalidModel(format!("need gamma ≥ 0 and a nonempty grid, got {gamma}, {m}")));
    }
    let grid = Grid::new(model, m)?;
    let words = grid.points().div_ceil(64);
    let window = cfg.window.unwrap_or(4.0 * (1.0 + schedule.config.e0));
    let mut total = vec![0u64; words];
    let mut total_omitted = 0.0;
    let mut rows = Vec::new();
    for kind in KINDS {
        let mut family = vec![0u64; words];
        let mut family_omitted = 0.0;
        let mut family_count = 0;
        for nu in active_steps(schedule) {
            let all = if gamma == 0.0 {
                Vec::new()
            } else {
                slabs(model, schedule, &grid, kind, nu, gamma, window)
            };
            let (counted, skipped): (Vec<&Slab>, Vec<&Slab>) = all.iter().partition(|s| grid.slab_bound(s) >= cfg.skip_below);
            let omitted: f64 = skipped.iter().map(|s| grid.slab_bound(s)).sum();
            let bits = counted
                .par_iter()
                .fold(
                    || vec![0u64; words],
                    |mut acc, s| {
                        grid.mark(s, &mut acc);
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; words],
                    |mut a, b| {
                        union(&mut a, &b);
                        a
                    },
                );
            rows.push(FamilyRow {
                gamma,
                family: kind.to_string(),
                nu: Some(nu),
                excluded_fraction: count(&bits) as f64 / grid.points() as f64,
                omitted_bound: omitted,
                conditions: all.len(),
            });
            union(&mut family, &bits);
            family_omitted += omitted;
            family_count += all.len();
        }
        rows.push(FamilyRow {
            gamma,
            family: kind.to_string(),
            nu: None,
            excluded_fraction: count(&family) as f64 / grid.points() as f64,
            omitted_bound: family_omitted,
            conditions: family_count,
        });
        union(&mut total, &family);
        total_omitted += family_omitted;
    }
    let excluded_fraction = count(&total) as f64 / grid.points() as f64;
    rows.push(FamilyRow {
        gamma,
        family: "total".into(),
        nu: None,
        excluded_fraction,
        omitted_bound: total_omitted,
        conditions: rows.iter().filter(|r| r.nu.is_none()).map(|r| r.conditions).sum(),
    });
    Ok(MeasureReport {
        gamma,
        grid: m,
        coarse: m < 32,
        excluded_fraction,
        omitted_bound: total_omitted,
        rows,
        derivative_constant: grid.axes.iter().map(|a| a.min_slope).fold(f64::INFINITY, f64::min),
    })
}

/// `f(2γ) / (2 f(γ))` for every `γ` whose double was also measured.
pub fn scaling_ratios(reports: &[MeasureReport]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for r in reports {
        if let Some(d) = reports.iter().find(|d| d.grid == r.grid && (d.gamma - 2.0 * r.gamma).abs() < 1e-12 * r.gamma) {
            if r.excluded_fraction > 0.0 {
                out.push((r.gamma, d.excluded_fraction / (2.0 * r.excluded_fraction)));
            }
        }
    }
    out
}

/// Rows of `gamma,family,nu,excluded_fraction`.
pub fn write_csv<W: std::io::Write>(reports: &[MeasureReport], out: &mut W) -> Result<()> {
    writeln!(out, "gamma,family,nu,excluded_fraction")?;
    for r in reports {
        for row in &r.rows {
            let nu = row.nu.map_or("all".to_string(), |n| n.to_string());
            writeln!(out, "{},{},{},{}", row.gamma, row.family, nu, row.excluded_fraction)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{make_schedule, ScheduleConfig};

    fn setup() -> (ModelConfig, Schedule) {
        let model = ModelConfig::default();
        let schedule = make_schedule(&ScheduleConfig::default(), 3).unwrap();
        (model, schedule)
    }

    #[test]
    fn zero_gamma_excludes_nothing() {
        let (model, schedule) = setup();
        let r = excluded_measure(&model, &schedule, 0.0, 16, &MeasureConfig::default()).unwrap();
        assert_eq!(r.excluded_fraction, 0.0);
        assert!(r.coarse);
    }

    #[test]
    fn marking_matches_brute_force() {
        let (model, _) = setup();
        let grid = Grid::new(&model, 12).unwrap();
        let slab = Slab {
            k: vec![1, -1, -1],
            offset: 0.0,
            threshold: 0.05,
        };
        let mut bits = vec![0u64; grid.points().div_ceil(64)];
        grid.mark(&slab, &mut bits);
        let mut expect = 0;
        for (a, x) in grid.axes[0].values.iter().enumerate() {
            for (b, y) in grid.axes[1].values.iter().enumerate() {
                for (c, z) in grid.axes[2].values.iter().enumerate() {
                    let hit = (x - y - z).abs() < 0.05;
                    let idx = (a * 12 + b) * 12 + c;
                    assert_eq!(hit, bits[idx / 64] >> (idx % 64) & 1 == 1);
                    expect += hit as usize;
                }
            }
        }
        assert_eq!(count(&bits), expect);
        assert!(expect > 0);
    }
}
