use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Spectrum, Thresholds};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DivisorKind {
    /// `<k,ω>`
    D1,
    /// `<k,ω> ± Ω_n`
    D2,
    /// `<k,ω> ± (Ω_n ± Ω_m)`
    D3,
    /// `<k,ω> ± 2Ω_n` above the block boundary
    D4,
}

impl fmt::Display for DivisorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    pub kind: DivisorKind,
    pub k: Vec<i32>,
    pub n: i32,
    pub m: i32,
    pub value: f64,
    pub threshold: f64,
}

impl Divisor {
    pub fn margin(&self) -> f64 {
        self.value.abs() - self.threshold
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DivisorLog {
    /// Smallest-margin divisor of each kind.
    pub tightest: BTreeMap<DivisorKind, Divisor>,
    pub violations: Vec<Divisor>,
    pub checked: usize,
}

impl DivisorLog {
    pub fn min_margin(&self) -> f64 {
        self.tightest
            .values()
            .map(Divisor::margin)
            .fold(f64::INFINITY, f64::min)
    }

    fn record(&mut self, d: Divisor) {
        self.checked += 1;
        if d.margin() < 0.0 {
            self.violations.push(d.clone());
        }
        match self.tightest.get(&d.kind) {
            Some(best) if best.margin() <= d.margin() => {}
            _ => {
                self.tightest.insert(d.kind, d);
            }
        }
    }

    /// `kind,k,n,m,value,threshold,margin` rows for the tightest divisors
    /// and every violation.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "kind,k,n,m,value,threshold,margin")?;
        for d in self.tightest.values().chain(&self.violations) {
            let k: Vec<String> = d.k.iter().map(|x| x.to_string()).collect();
            writeln!(
                out,
                "{},{},{},{},{:.17e},{:.17e},{:.17e}",
                d.kind,
                k.join(" "),
                d.n,
                d.m,
                d.value,
                d.threshold,
                d.margin()
            )?;
        }
        Ok(())
    }
}

/// All `k` with block norm `max(|k̄|₁, |k̃|₁) ≤ cutoff`.
pub fn fourier_box(nu: usize, b: usize, cutoff: u32) -> Vec<Vec<i32>> {
    fn block(len: usize, cutoff: i32) -> Vec<Vec<i32>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for v in &out {
                let used: i32 = v.iter().map(|x: &i32| x.abs()).sum();
                for x in -(cutoff - used)..=(cutoff - used) {
                    let mut w = v.clone();
                    w.push(x);
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }
    let c = cutoff as i32;
    let (first, second) = (block(nu, c), block(b, c));
    let mut all = Vec::with_capacity(first.len() * second.len());
    for a in &first {
        for s in &second {
            let mut k = a.clone();
            k.extend_from_slice(s);
            all.push(k);
        }
    }
    all
}

fn k_norm(k: &[i32], nu: usize) -> u32 {
    let a: i32 = k[..nu].iter().map(|x| x.abs()).sum();
    let b: i32 = k[nu..].iter().map(|x| x.abs()).sum();
    a.max(b) as u32
}

/// Labelled values sorted ascending, for nearest-value queries.
struct Sorted {
    values: Vec<(f64, i32, i32)>,
}

impl Sorted {
    fn new(mut values: Vec<(f64, i32, i32)>) -> Self {
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { values }
    }

    /// Entry minimizing `|x + v|`.
    fn nearest_negated(&self, x: f64) -> Option<(f64, i32, i32)> {
        let target = -x;
        let idx = self.values.partition_point(|v| v.0 < target);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.values.get(i).copied())
            .min_by(|a, b| (x + a.0).abs().total_cmp(&(x + b.0).abs()))
    }
}

/// Enumerate the divisors of the four kinds over `|k| ≤ K` and the current
/// site ranges, keeping the tightest of each kind and every violation.
pub fn check_divisors(spectrum: &Spectrum, thr: &Thresholds) -> DivisorLog {
    let nu = spectrum.nu;
    let dim = spectrum.omega.len();
    let ks = fourier_box(nu, dim - nu, thr.k);
    let kpow = (thr.k as f64).powf(thr.tau);
    let low: Vec<(i32, f64)> = spectrum
        .frequencies
        .iter()
        .filter(|(n, _)| n.unsigned_abs() as u32 <= thr.ek)
        .map(|(&n, f)| (n as i32, f.value.re))
        .collect();
    let high: Vec<(i32, f64)> = spectrum
        .frequencies
        .iter()
        .filter(|(n, _)| n.unsigned_abs() as u32 > thr.ek)
        .map(|(&n, f)| (n as i32, f.value.re))
        .collect();

    let singles = Sorted::new(low.iter().flat_map(|&(n, f)| [(f, n, 0), (-f, -n, 0)]).collect());
    let mut pair_values = Vec::new();
    for &(n, fnv) in &low {
        for &(m, fmv) in &low {
            pair_values.push((fnv + fmv, n, m));
            pair_values.push((-fnv - fmv, -n, -m));
            pair_values.push((fnv - fmv, n, -m));
        }
    }
    let pairs = Sorted::new(pair_values);
    let doubles = Sorted::new(high.iter().flat_map(|&(n, f)| [(2.0 * f, n, n), (-2.0 * f, -n, -n)]).collect());

    let mut log = DivisorLog::default();
    let d2_threshold = thr.gamma0 / kpow;
    for k in &ks {
        let value: f64 = k.iter().zip(&spectrum.omega).map(|(&a, w)| a as f64 * w).sum();
        let norm = k_norm(k, nu);
        if norm > 0 {
            log.record(Divisor {
                kind: DivisorKind::D1,
                k: k.clone(),
                n: 0,
                m: 0,
                value,
                threshold: thr.gamma / (norm as f64).powf(thr.tau),
            });
        }
        if let Some((v, n, _)) = singles.nearest_negated(value) {
            log.record(Divisor {
                kind: DivisorKind::D2,
                k: k.clone(),
                n,
                m: 0,
                value: value + v,
                threshold: d2_threshold,
            });
        }
        if norm > 0 {
            if let Some((v, n, m)) = pairs.nearest_negated(value) {
                log.record(Divisor {
                    kind: DivisorKind::D3,
                    k: k.clone(),
                    n,
                    m,
                    value: value + v,
                    threshold: d2_threshold,
                });
            }
        }
        if let Some((v, n, _)) = doubles.nearest_negated(value) {
            log.record(Divisor {
                kind: DivisorKind::D4,
                k: k.clone(),
                n,
                m: n,
                value: value + v,
                threshold: thr.gamma0 * n.unsigned_abs() as f64 / kpow,
            });
        }
    }
    // k = 0 with |n| ≠ |m| for the difference branch.
    let zero = vec![0; dim];
    for &(n, fnv) in &low {
        for &(m, fmv) in &low {
            if n.unsigned_abs() != m.unsigned_abs() {
                log.record(Divisor {
                    kind: DivisorKind::D3,
                    k: zero.clone(),
                    n,
                    m: -m,
                    value: fnv - fmv,
                    threshold: d2_threshold,
                });
            }
        }
    }
    log
}
