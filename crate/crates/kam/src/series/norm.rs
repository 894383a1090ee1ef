use std::collections::BTreeMap;

use num_complex::Complex64;

use super::key::{decrement, MonoKey};
use super::{reduce_sorted, Domain, TFSeries};
use crate::jet::ParamJet;

/// Finitely supported sequence over the lattice.
pub type SparseSequence = BTreeMap<i32, Complex64>;

/// `e^{|k|r} s^{2|l|} Π_n (s / (|n|^a e^{|n|ρ}))^{α_n+β_n}`.
pub fn term_weight(key: &MonoKey, dom: &Domain, nu: usize) -> f64 {
    let mut w = (key.k_norm(nu) as f64 * dom.r).exp() * dom.s.powi(2 * key.action_degree() as i32);
    for &(n, e) in key.alpha.iter().chain(&key.beta) {
        w *= (dom.s / dom.site_weight(n as i32)).powi(e as i32);
    }
    w
}

/// Weighted majorant `Σ (|c| + |∂_σ c|) · term_weight + tail`.
pub fn series_norm(f: &TFSeries, dom: &Domain) -> f64 {
    let nu = f.budget().nu;
    let body: f64 = f
        .terms()
        .iter()
        .map(|(k, v)| v.magnitude() * term_weight(k, dom, nu))
        .sum();
    body + f.tail_at(dom)
}

/// Component of the Hamiltonian vector field a derivative belongs to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Component {
    Action(usize),
    Angle(usize),
    W(i16),
    WBar(i16),
}

/// `‖F_I‖ + s^{-2}‖F_θ‖ + s^{-1} Σ_n (‖F_{w_n}‖ + ‖F_{w̄_n}‖) |n|^ā e^{|n|ρ}`.
pub fn vecfield_norm(f: &TFSeries, dom: &Domain) -> f64 {
    let budget = f.budget();
    let nu = budget.nu;
    let mut parts: Vec<(Component, MonoKey, ParamJet)> = Vec::new();
    for (key, v) in f.terms() {
        for (j, &p) in key.l.iter().enumerate() {
            if p > 0 {
                let mut d = key.clone();
                d.l[j] -= 1;
                parts.push((Component::Action(j), d, v.scale_re(p as f64)));
            }
        }
        for (i, &kk) in key.k.iter().enumerate() {
            if kk != 0 {
                let c = Complex64::new(0.0, kk as f64);
                parts.push((Component::Angle(i), key.clone(), v.scale(c)));
            }
        }
        for &(n, e) in &key.alpha {
            let mut d = key.clone();
            decrement(&mut d.alpha, n);
            parts.push((Component::W(n), d, v.scale_re(e as f64)));
        }
        for &(n, e) in &key.beta {
            let mut d = key.clone();
            decrement(&mut d.beta, n);
            parts.push((Component::WBar(n), d, v.scale_re(e as f64)));
        }
    }
    parts.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

    let mut total = 0.0;
    let mut start = 0;
    while start < parts.len() {
        let comp = parts[start].0;
        let mut end = start;
        while end < parts.len() && parts[end].0 == comp {
            end += 1;
        }
        let merged = reduce_sorted(
            parts[start..end]
                .iter()
                .map(|(_, k, v)| (k.clone(), v.clone()))
                .collect(),
        );
        let norm: f64 = merged
            .iter()
            .map(|(k, v)| v.magnitude() * term_weight(k, dom, nu))
            .sum();
        let factor = match comp {
            Component::Action(_) => 1.0,
            Component::Angle(_) => dom.s.powi(-2),
            Component::W(n) | Component::WBar(n) => dom.field_weight(n as i32) / dom.s,
        };
        total += factor * norm;
        start = end;
    }
    let s = dom.s;
    total + (2 * budget.d_cap + budget.k_cap) as f64 * f.tail_at(dom) / (s * s)
}

/// `Σ_k (|c_k| + |∂_σ c_k|) |k|^power e^{|k|r}` over the Fourier-only terms.
pub fn fourier_weighted_norm(f: &TFSeries, r: f64, power: f64) -> f64 {
    let nu = f.budget().nu;
    f.terms()
        .iter()
        .filter(|(k, _)| k.is_fourier_only())
        .map(|(k, v)| {
            let kn = k.k_norm(nu) as f64;
            v.magnitude() * kn.powf(power) * (kn * r).exp()
        })
        .fold(0.0, |acc, x| acc + x)
}

fn sequence_norm(p: &SparseSequence, a: f64, rho: f64) -> f64 {
    p.iter()
        .map(|(&n, c)| {
            let m = n.unsigned_abs() as f64;
            c.norm() * m.powf(a) * (m * rho).exp()
        })
        .sum()
}

/// `(‖p∗q‖, ‖p‖, ‖q‖)` in the `ℓ^{a,ρ}` norm.
pub fn weighted_conv_norm(p: &SparseSequence, q: &SparseSequence, a: f64, rho: f64) -> (f64, f64, f64) {
    let mut conv = SparseSequence::new();
    for (&n, x) in p {
        for (&m, y) in q {
            *conv.entry(n + m).or_insert(Complex64::new(0.0, 0.0)) += x * y;
        }
    }
    (
        sequence_norm(&conv, a, rho),
        sequence_norm(p, a, rho),
        sequence_norm(q, a, rho),
    )
}
