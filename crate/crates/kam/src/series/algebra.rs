use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;

use super::key::{decrement, MonoKey};
use super::norm::series_norm;
use super::{generate, Sink, TFSeries, Tail};
use crate::error::Result;
use crate::jet::ParamJet;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn merge(f: &TFSeries, g: &TFSeries, sign: f64) -> Result<TFSeries> {
    f.same_budget(g)?;
    let (a, b) = (f.terms(), g.terms());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push((b[j].0.clone(), b[j].1.scale_re(sign)));
                j += 1;
            }
            Ordering::Equal => {
                let mut v = a[i].1.clone();
                v.add_scaled(&b[j].1, Complex64::new(sign, 0.0));
                if !v.is_zero() {
                    out.push((a[i].0.clone(), v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ok(TFSeries::from_sorted(f.budget(), out, f.tail_bound().plus(g.tail_bound())))
}

pub fn add(f: &TFSeries, g: &TFSeries) -> Result<TFSeries> {
    merge(f, g, 1.0)
}

pub fn sub(f: &TFSeries, g: &TFSeries) -> Result<TFSeries> {
    merge(f, g, -1.0)
}

/// Tail contribution of an error `tf` in `f` and `tg` in `g` through a
/// bilinear operation with operator bound `factor`.
/// The degree bound drops by `lowered` (two for a bracket).
fn propagated(f: &TFSeries, g: &TFSeries, factor: f64, lowered: u32) -> Tail {
    if f.tail() == 0.0 && g.tail() == 0.0 {
        return Tail::ZERO;
    }
    let dom = f.budget().tail_ref;
    let nf = series_norm(f, &dom) - f.tail();
    let ng = series_norm(g, &dom) - g.tail();
    let value = factor * (f.tail() * ng + nf * g.tail() + f.tail() * g.tail());
    let degree = f.tail_bound().degree.min(g.tail_bound().degree);
    Tail::new(value, degree).lowered(lowered)
}

/// Truncating product; dropped terms are measured into the tail.
pub fn mul(f: &TFSeries, g: &TFSeries) -> Result<TFSeries> {
    f.same_budget(g)?;
    let budget = f.budget();
    let (fa, gb) = (f.terms(), g.terms());
    let (terms, dropped) = generate(budget, fa.len(), |i, sink: &mut Sink<'_>| {
        let (ka, va) = &fa[i];
        for (kb, vb) in gb {
            sink.push(ka.product(kb), va * vb);
        }
    });
    let tail = f
        .tail_bound()
        .plus(g.tail_bound())
        .plus(propagated(f, g, 1.0, 0))
        .plus(dropped);
    Ok(TFSeries::from_sorted(budget, terms, tail))
}

/// Index of `g` by the variables its terms depend on.
struct BracketIndex {
    by_site: BTreeMap<i16, Vec<usize>>,
    with_angle: Vec<usize>,
    with_action: Vec<usize>,
}

impl BracketIndex {
    fn new(g: &TFSeries) -> Self {
        let nu = g.budget().nu;
        let mut by_site: BTreeMap<i16, Vec<usize>> = BTreeMap::new();
        let mut with_angle = Vec::new();
        let mut with_action = Vec::new();
        for (idx, (key, _)) in g.terms().iter().enumerate() {
            for n in key.support() {
                by_site.entry(n).or_default().push(idx);
            }
            if key.k[nu..].iter().any(|&x| x != 0) {
                with_angle.push(idx);
            }
            if key.l.iter().any(|&x| x != 0) {
                with_action.push(idx);
            }
        }
        Self {
            by_site,
            with_angle,
            with_action,
        }
    }

    fn partners(&self, key: &MonoKey, nu: usize, buf: &mut Vec<usize>) {
        buf.clear();
        for n in key.support() {
            if let Some(list) = self.by_site.get(&n) {
                buf.extend_from_slice(list);
            }
        }
        if key.l.iter().any(|&x| x != 0) {
            buf.extend_from_slice(&self.with_angle);
        }
        if key.k[nu..].iter().any(|&x| x != 0) {
            buf.extend_from_slice(&self.with_action);
        }
        buf.sort_unstable();
        buf.dedup();
    }
}

/// Bracket of two monomials, pushed term by term into `sink`.
fn bracket_pair(ka: &MonoKey, va: &ParamJet, kb: &MonoKey, vb: &ParamJet, nu: usize, sink: &mut Sink<'_>) {
    let mut cache: Option<(MonoKey, ParamJet)> = None;
    let mut base = || cache.get_or_insert_with(|| (ka.product(kb), va * vb)).clone();

    for j in 0..ka.l.len() {
        let coef = ka.l[j] as f64 * kb.k[nu + j] as f64 - ka.k[nu + j] as f64 * kb.l[j] as f64;
        if coef != 0.0 {
            let (mut key, v) = base();
            key.l[j] -= 1;
            sink.push(key, v.scale(I * coef));
        }
    }

    for n in ka.support() {
        let coef = ka.alpha_of(n) as f64 * kb.beta_of(n) as f64
            - ka.beta_of(n) as f64 * kb.alpha_of(n) as f64;
        if coef != 0.0 {
            let (mut key, v) = base();
            decrement(&mut key.alpha, n);
            decrement(&mut key.beta, n);
            sink.push(key, v.scale(I * coef));
        }
    }
}

/// `{f,g} = <f_I, g_θ̃> − <f_θ̃, g_I> + i Σ_n (f_{w_n} g_{w̄_n} − f_{w̄_n} g_{w_n})`.
pub fn poisson_bracket(f: &TFSeries, g: &TFSeries) -> Result<TFSeries> {
    f.same_budget(g)?;
    let budget = f.budget();
    let nu = budget.nu;
    let index = BracketIndex::new(g);
    let (fa, gb) = (f.terms(), g.terms());
    let (terms, dropped) = generate(budget, fa.len(), |i, sink: &mut Sink<'_>| {
        let (ka, va) = &fa[i];
        let mut partners = Vec::new();
        index.partners(ka, nu, &mut partners);
        for &j in &partners {
            let (kb, vb) = &gb[j];
            bracket_pair(ka, va, kb, vb, nu, sink);
        }
    });
    let s = budget.tail_ref.s;
    let factor = (2 * budget.d_cap + budget.k_cap) as f64 / (s * s);
    let tail = f
        .tail_bound()
        .plus(g.tail_bound())
        .plus(propagated(f, g, factor, 2))
        .plus(dropped);
    Ok(TFSeries::from_sorted(budget, terms, tail))
}

fn derive(
    f: &TFSeries,
    lowered: u32,
    map: impl Fn(&MonoKey, &ParamJet) -> Option<(MonoKey, ParamJet)>,
) -> TFSeries {
    let raw = f.terms().iter().filter_map(|(k, v)| map(k, v)).collect();
    TFSeries::from_sorted(f.budget(), super::reduce_sorted(raw), f.tail_bound().lowered(lowered))
}

/// `∂f/∂θ_idx`, with `idx` running over all `ν + b` angles.
pub fn d_theta(f: &TFSeries, idx: usize) -> TFSeries {
    derive(f, 0, |k, v| {
        let kk = k.k[idx];
        (kk != 0).then(|| (k.clone(), v.scale(I * kk as f64)))
    })
}

/// `∂f/∂I_j`.
pub fn d_action(f: &TFSeries, j: usize) -> TFSeries {
    derive(f, 2, |k, v| {
        let p = k.l[j];
        (p != 0).then(|| {
            let mut key = k.clone();
            key.l[j] -= 1;
            (key, v.scale_re(p as f64))
        })
    })
}

pub fn d_w(f: &TFSeries, n: i16) -> TFSeries {
    derive(f, 1, |k, v| {
        let e = k.alpha_of(n);
        (e != 0).then(|| {
            let mut key = k.clone();
            decrement(&mut key.alpha, n);
            (key, v.scale_re(e as f64))
        })
    })
}

pub fn d_wbar(f: &TFSeries, n: i16) -> TFSeries {
    derive(f, 1, |k, v| {
        let e = k.beta_of(n);
        (e != 0).then(|| {
            let mut key = k.clone();
            decrement(&mut key.beta, n);
            (key, v.scale_re(e as f64))
        })
    })
}

/// Split into `|k| ≤ K` and `|k| > K`; the tail stays with the low part.
pub fn gamma_k(f: &TFSeries, cutoff: u32) -> (TFSeries, TFSeries) {
    let nu = f.budget().nu;
    f.partition(|k| k.k_norm(nu) <= cutoff)
}
