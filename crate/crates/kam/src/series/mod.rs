//! Sparse Taylor–Fourier series with parameter-jet coefficients.
//!
//! A [`TFSeries`] stores the terms `c · e^{i<k,θ>} I^l w^α w̄^β` in canonical
//! key order. Every operation is pure. Terms that leave the truncation
//! [`Budget`] are dropped and their majorant, measured on the budget's
//! reference domain, is added to `tail`.

mod algebra;
mod io;
mod key;
mod norm;
mod tail;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::jet::ParamJet;

pub use algebra::{gamma_k, poisson_bracket};
pub use io::{read_series, write_series};
pub use key::{canonical, decrement, increment, merge_add, Exponents, MonoKey};
pub use algebra::{add, d_action, d_theta, d_w, d_wbar, mul, sub};
pub use tail::Tail;
pub use norm::{
    fourier_weighted_norm, series_norm, term_weight, vecfield_norm, weighted_conv_norm,
    SparseSequence,
};

/// The domain `D(r, s)` together with the spatial weights `(a, ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub r: f64,
    pub s: f64,
    pub rho: f64,
    pub a: f64,
}

impl Domain {
    pub fn new(r: f64, s: f64, rho: f64, a: f64) -> Result<Self> {
        let dom = Self { r, s, rho, a };
        dom.validate()?;
        Ok(dom)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r > 0.0 && self.s > 0.0 && self.rho > 0.0 && self.a >= 1.0;
        if !ok || !(self.r.is_finite() && self.s.is_finite() && self.rho.is_finite()) {
            return Err(KamError::InvalidDomain(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn abar(&self) -> f64 {
        self.a - 1.0
    }

    /// `|n|^a e^{|n|ρ}`, the ℓ^{a,ρ} weight of site `n`.
    pub fn site_weight(&self, n: i32) -> f64 {
        let m = n.unsigned_abs() as f64;
        m.powf(self.a) * (m * self.rho).exp()
    }

    /// `|n|^{ā} e^{|n|ρ}`, the weight used for vector-field components.
    pub fn field_weight(&self, n: i32) -> f64 {
        let m = n.unsigned_abs() as f64;
        m.powf(self.abar()) * (m * self.rho).exp()
    }
}

/// Truncation limits and the variable layout shared by all series of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Number of external (forcing) angles.
    pub nu: usize,
    /// Number of tangential sites, one action and one angle each.
    pub b: usize,
    pub tangential: Vec<i32>,
    pub k_cap: u32,
    pub n_max: u32,
    pub d_cap: u32,
    /// Domain on which dropped terms are measured.
    pub tail_ref: Domain,
}

impl Budget {
    pub fn new(
        nu: usize,
        tangential: Vec<i32>,
        k_cap: u32,
        n_max: u32,
        d_cap: u32,
        tail_ref: Domain,
    ) -> Result<Self> {
        tail_ref.validate()?;
        let b = tangential.len();
        let mut sorted = tangential.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != b {
            return Err(KamError::InvalidModel("repeated tangential site".into()));
        }
        Ok(Self {
            nu,
            b,
            tangential,
            k_cap,
            n_max,
            d_cap,
            tail_ref,
        })
    }

    /// Parameter dimension `ν + b`, also the number of angles.
    pub fn dim(&self) -> usize {
        self.nu + self.b
    }

    pub fn is_tangential(&self, n: i32) -> bool {
        self.tangential.contains(&n)
    }

    /// All normal sites `0 < |n| ≤ n_max` outside the tangential set, ascending.
    pub fn normal_sites(&self) -> Vec<i16> {
        let n_max = self.n_max as i32;
        (-n_max..=n_max)
            .filter(|&n| !self.is_tangential(n))
            .map(|n| n as i16)
            .collect()
    }

    pub fn admits(&self, key: &MonoKey) -> bool {
        key.k_norm(self.nu) <= self.k_cap
            && key.degree() <= self.d_cap
            && key
                .alpha
                .iter()
                .chain(&key.beta)
                .all(|&(n, _)| n.unsigned_abs() as u32 <= self.n_max)
    }

    pub fn check(&self, key: &MonoKey) -> Result<()> {
        if key.k.len() != self.dim() || key.l.len() != self.b {
            return Err(KamError::OutsideBudget(format!("{key:?} has the wrong shape")));
        }
        if let Some(&(n, _)) = key
            .alpha
            .iter()
            .chain(&key.beta)
            .find(|&&(n, _)| self.is_tangential(n as i32))
        {
            return Err(KamError::TangentialSite(n as i32));
        }
        if !self.admits(key) {
            return Err(KamError::OutsideBudget(format!("{key:?}")));
        }
        Ok(())
    }

    pub fn zero_key(&self) -> MonoKey {
        MonoKey::one(self.dim(), self.b)
    }

    pub fn jet(&self, value: Complex64) -> ParamJet {
        ParamJet::constant(value, self.dim())
    }
}

/// A sparse Taylor–Fourier series.
#[derive(Clone, Debug)]
pub struct TFSeries {
    terms: Vec<(MonoKey, ParamJet)>,
    budget: Arc<Budget>,
    tail: Tail,
}

impl PartialEq for TFSeries {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.tail == other.tail && *self.budget == *other.budget
    }
}

impl TFSeries {
    pub fn zero(budget: &Arc<Budget>) -> Self {
        Self {
            terms: Vec::new(),
            budget: budget.clone(),
            tail: Tail::ZERO,
        }
    }

    pub fn constant(budget: &Arc<Budget>, value: ParamJet) -> Self {
        let key = budget.zero_key();
        Self::from_sorted(budget, vec![(key, value)], Tail::ZERO)
    }

    pub fn monomial(budget: &Arc<Budget>, key: MonoKey, value: ParamJet) -> Result<Self> {
        Self::from_terms(budget, [(key, value)])
    }

    /// Build from arbitrary terms; duplicates are summed, keys are validated.
    pub fn from_terms(
        budget: &Arc<Budget>,
        terms: impl IntoIterator<Item = (MonoKey, ParamJet)>,
    ) -> Result<Self> {
        let mut raw = Vec::new();
        for (key, value) in terms {
            budget.check(&key)?;
            if value.dim() != budget.dim() {
                return Err(KamError::OutsideBudget(format!(
                    "coefficient of {key:?} has gradient length {}",
                    value.dim()
                )));
            }
            raw.push((key, value));
        }
        Ok(Self::from_sorted(budget, reduce_sorted(raw), Tail::ZERO))
    }

    pub(crate) fn from_sorted(budget: &Arc<Budget>, terms: Vec<(MonoKey, ParamJet)>, tail: Tail) -> Self {
        Self {
            terms,
            budget: budget.clone(),
            tail,
        }
    }

    /// Add `extra` to the tail.
    pub fn with_tail(mut self, extra: Tail) -> Self {
        self.tail = self.tail.plus(extra);
        self
    }

    pub fn terms(&self) -> &[(MonoKey, ParamJet)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MonoKey, &ParamJet)> {
        self.terms.iter().map(|(k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Tail majorant on the reference domain.
    pub fn tail(&self) -> f64 {
        self.tail.value
    }

    pub fn tail_bound(&self) -> Tail {
        self.tail
    }

    /// Tail majorant rescaled to `dom`.
    pub fn tail_at(&self, dom: &Domain) -> f64 {
        self.tail.at(dom, &self.budget)
    }

    pub fn budget(&self) -> &Arc<Budget> {
        &self.budget
    }

    pub fn get(&self, key: &MonoKey) -> Option<&ParamJet> {
        self.terms
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &self.terms[i].1)
    }

    pub fn coefficient(&self, key: &MonoKey) -> Complex64 {
        self.get(key).map_or(Complex64::new(0.0, 0.0), |j| j.value)
    }

    pub fn same_budget(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.budget, &other.budget) || *self.budget == *other.budget {
            Ok(())
        } else {
            Err(KamError::BudgetMismatch)
        }
    }

    /// Split exactly into the terms satisfying `pred` and the rest; the tail
    /// stays with the first part.
    pub fn partition(&self, pred: impl Fn(&MonoKey) -> bool) -> (Self, Self) {
        let (yes, no): (Vec<_>, Vec<_>) = self.terms.iter().cloned().partition(|(k, _)| pred(k));
        (
            Self::from_sorted(&self.budget, yes, self.tail),
            Self::from_sorted(&self.budget, no, Tail::ZERO),
        )
    }

    pub fn filter(&self, pred: impl Fn(&MonoKey) -> bool) -> Self {
        let terms = self.terms.iter().filter(|(k, _)| pred(k)).cloned().collect();
        Self::from_sorted(&self.budget, terms, Tail::ZERO)
    }

    pub fn map_values(&self, f: impl Fn(&MonoKey, &ParamJet) -> ParamJet) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, v)| (k.clone(), f(k, v)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Self::from_sorted(&self.budget, terms, self.tail)
    }

    pub fn scale(&self, c: &ParamJet) -> Self {
        let grow = c.magnitude().max(1.0);
        let mut out = self.map_values(|_, v| v * c);
        out.tail = self.tail.scaled(grow);
        out
    }

    pub fn scale_c(&self, c: Complex64) -> Self {
        let mut out = self.map_values(|_, v| v.scale(c));
        out.tail = self.tail.scaled(c.norm().max(1.0));
        out
    }

    pub fn neg(&self) -> Self {
        self.map_values(|_, v| -v)
    }

    /// The complex conjugate series, `conj(c)` moved to `(−k, l, β, α)`.
    pub fn conj(&self) -> Self {
        let terms = self.terms.iter().map(|(k, v)| (k.conj(), v.conj())).collect();
        Self::from_sorted(&self.budget, reduce_sorted(terms), self.tail)
    }

    /// Largest relative violation of `c(k,l,α,β) = conj c(−k,l,β,α)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (key, v) in &self.terms {
            let mirror = self
                .get(&key.conj())
                .map_or(Complex64::new(0.0, 0.0), |j| j.value.conj());
            let scale = v.value.norm().max(mirror.norm());
            if scale > 0.0 {
                worst = worst.max((v.value - mirror).norm() / scale);
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.reality_defect() <= 1e-12
    }

    /// `(f + conj f)/2`, the projection onto real series.
    pub fn real_part(&self) -> Self {
        let both = algebra::add(self, &self.conj()).expect("same budget");
        let mut out = both.scale_c(Complex64::new(0.5, 0.0));
        out.tail = self.tail;
        out
    }

    /// Move every term with magnitude at most `threshold` on the reference
    /// domain into the tail.
    pub fn prune(&self, threshold: f64) -> Self {
        let dom = self.budget.tail_ref;
        let nu = self.budget.nu;
        let mut dropped = Tail::ZERO;
        let mut kept = Vec::with_capacity(self.terms.len());
        for (k, v) in &self.terms {
            let m = v.magnitude() * term_weight(k, &dom, nu);
            if m <= threshold {
                dropped = dropped.plus(Tail::new(m, k.degree()));
            } else {
                kept.push((k.clone(), v.clone()));
            }
        }
        Self::from_sorted(&self.budget, kept, self.tail.plus(dropped))
    }

    /// Keep terms of degree at most `d`; the rest goes to the tail.
    pub fn truncate_degree(&self, d: u32) -> Self {
        let dom = self.budget.tail_ref;
        let nu = self.budget.nu;
        let mut dropped = Tail::ZERO;
        let mut kept = Vec::with_capacity(self.terms.len());
        for (k, v) in &self.terms {
            if k.degree() <= d {
                kept.push((k.clone(), v.clone()));
            } else {
                dropped = dropped.plus(Tail::new(v.magnitude() * term_weight(k, &dom, nu), k.degree()));
            }
        }
        Self::from_sorted(&self.budget, kept, self.tail.plus(dropped))
    }

    /// Evaluate the value part at a point; `w` and `wbar` are indexed by
    /// position in `sites`.
    pub fn evaluate(
        &self,
        theta: &[f64],
        actions: &[Complex64],
        sites: &[i16],
        w: &[Complex64],
        wbar: &[Complex64],
    ) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (key, v) in &self.terms {
            let phase: f64 = key.k.iter().zip(theta).map(|(&k, &t)| k as f64 * t).sum();
            let mut term = v.value * Complex64::from_polar(1.0, phase);
            for (&p, &x) in key.l.iter().zip(actions) {
                term *= x.powu(p as u32);
            }
            for &(n, e) in &key.alpha {
                let i = sites.binary_search(&n).expect("site in layout");
                term *= w[i].powu(e as u32);
            }
            for &(n, e) in &key.beta {
                let i = sites.binary_search(&n).expect("site in layout");
                term *= wbar[i].powu(e as u32);
            }
            total += term;
        }
        total
    }
}

/// Output buffer for one chunk of a term-generating kernel.
pub(crate) struct Sink<'a> {
    budget: &'a Budget,
    out: Vec<(MonoKey, ParamJet)>,
    dropped: Tail,
}

impl Sink<'_> {
    pub(crate) fn push(&mut self, key: MonoKey, value: ParamJet) {
        if value.is_zero() {
            return;
        }
        if self.budget.admits(&key) {
            self.out.push((key, value));
        } else {
            let m = value.magnitude() * term_weight(&key, &self.budget.tail_ref, self.budget.nu);
            self.dropped = self.dropped.plus(Tail::new(m, key.degree()));
        }
    }
}

const CHUNK: usize = 64;

/// Run `body(i, sink)` for every `i < count` in fixed-size chunks, reduce each
/// chunk, then merge the chunks in index order. The chunking does not depend
/// on the thread count, so the result is bit-identical for any pool size.
pub(crate) fn generate<F>(budget: &Budget, count: usize, body: F) -> (Vec<(MonoKey, ParamJet)>, Tail)
where
    F: Fn(usize, &mut Sink<'_>) + Sync,
{
    let chunks: Vec<(Vec<(MonoKey, ParamJet)>, Tail)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sink = Sink {
                budget,
                out: Vec::new(),
                dropped: Tail::ZERO,
            };
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                body(i, &mut sink);
            }
            (reduce_sorted(sink.out), sink.dropped)
        })
        .collect();
    let mut dropped = Tail::ZERO;
    let mut all = Vec::new();
    for (terms, d) in chunks {
        dropped = dropped.plus(d);
        all.extend(terms);
    }
    (reduce_sorted(all), dropped)
}

/// Stable sort by key, then sum runs of equal keys in their original order.
pub(crate) fn reduce_sorted(mut raw: Vec<(MonoKey, ParamJet)>) -> Vec<(MonoKey, ParamJet)> {
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(MonoKey, ParamJet)> = Vec::with_capacity(raw.len());
    for (key, value) in raw {
        match out.last_mut() {
            Some((k, v)) if *k == key => *v += &value,
            _ => out.push((key, value)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

