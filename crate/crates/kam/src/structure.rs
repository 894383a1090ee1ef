//! Structure checks on a perturbation: the three-class exponent pattern with
//! coefficient decay, and the Töplitz–Lipschitz limits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fit::{decay_fit, DecayFit};
use crate::series::{add, d_w, d_wbar, series_norm, sub, Domain, MonoKey, TFSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    /// Even order at every high site, at least one high site present.
    Paired,
    /// Exactly one first-order high factor and nothing else.
    Linear,
    /// No high factors.
    Low,
}

/// Class of one monomial with respect to the block boundary `ek`, or `None`
/// when the pattern fits no class.
pub fn classify(key: &MonoKey, ek: u32) -> Option<Class> {
    let high = |n: i16| n.unsigned_abs() as u32 > ek;
    let mut any_high = false;
    let mut odd_high = false;
    for n in key.support() {
        if high(n) {
            any_high = true;
            odd_high |= key.order_at(n) % 2 == 1;
        }
    }
    if odd_high {
        (key.normal_degree() == 1 && key.action_degree() == 0).then_some(Class::Linear)
    } else if any_high {
        Some(Class::Paired)
    } else {
        Some(Class::Low)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureReport {
    pub counts: BTreeMap<String, usize>,
    pub violations: Vec<String>,
    pub decay: Option<DecayFit>,
    pub decay_error: Option<String>,
    pub required_rate: f64,
    pub pass: bool,
}

/// Classify every monomial of `p` and fit the decay of the linear class's
/// coefficients against `|n|`, each measured in the Fourier norm at strip `r`.
pub fn verify_structure(p: &TFSeries, ek: u32, r: f64, rho_bar: f64) -> StructureReport {
    let nu = p.budget().nu;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut linear: BTreeMap<u16, f64> = BTreeMap::new();
    for (key, v) in p.terms() {
        match classify(key, ek) {
            Some(class) => {
                *counts.entry(format!("{class:?}")).or_default() += 1;
                if class == Class::Linear {
                    let site = key.support()[0].unsigned_abs();
                    let size = v.magnitude() * (key.k_norm(nu) as f64 * r).exp();
                    let entry = linear.entry(site).or_default();
                    *entry = entry.max(size);
                }
            }
            None => violations.push(format!("{key:?}")),
        }
    }
    let samples: Vec<(f64, f64)> = linear.iter().map(|(&n, &c)| (n as f64, c)).collect();
    let (decay, decay_error) = match decay_fit(&samples, 0.0) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let required_rate = rho_bar - 0.05;
    let decay_ok = match &decay {
        Some(fit) => fit.rate >= required_rate,
        None => samples.is_empty(),
    };
    StructureReport {
        counts,
        pass: violations.is_empty() && decay_ok,
        violations,
        decay,
        decay_error,
        required_rate,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToeplitzReport {
    pub limit_site: i16,
    pub limit_norm: f64,
    /// `(n, |n|·‖L_n − L_∞‖)` for the checked sites.
    pub scaled_deviations: Vec<(i16, f64)>,
    pub max_scaled_deviation: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `L_n = (1/|n|)(∂²P/∂w_n² + ∂²P/∂w̄_n²)`.
pub fn second_variation(p: &TFSeries, n: i16) -> TFSeries {
    let both = add(&d_w(&d_w(p, n), n), &d_wbar(&d_wbar(p, n), n)).expect("same budget");
    both.scale_c((1.0 / n.unsigned_abs() as f64).into())
}

/// Estimate `L_∞` at the outermost site and check `‖L_∞‖ ≤ bound` and
/// `|n|·‖L_n − L_∞‖ ≤ bound` for `|n| ≤ n_max/2`.
pub fn verify_toeplitz(p: &TFSeries, dom: &Domain, bound: f64) -> ToeplitzReport {
    let budget = p.budget();
    let n_max = budget.n_max as i16;
    let limit_site = if budget.is_tangential(n_max as i32) { -n_max } else { n_max };
    let limit = second_variation(p, limit_site);
    let limit_norm = series_norm(&limit, dom);
    let sites: Vec<i16> = budget
        .normal_sites()
        .into_iter()
        .filter(|n| n.unsigned_abs() as u32 <= budget.n_max / 2)
        .collect();
    let scaled_deviations: Vec<(i16, f64)> = {
        use rayon::prelude::*;
        sites
            .par_iter()
            .map(|&n| {
                let diff = sub(&second_variation(p, n), &limit).expect("same budget");
                (n, n.unsigned_abs() as f64 * series_norm(&diff, dom))
            })
            .collect()
    };
    let max_scaled_deviation = scaled_deviations.iter().map(|x| x.1).fold(0.0, f64::max);
    ToeplitzReport {
        limit_site,
        limit_norm,
        max_scaled_deviation,
        pass: limit_norm <= bound && max_scaled_deviation <= bound,
        scaled_deviations,
        bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::ParamJet;
    use crate::series::Budget;
    use std::sync::Arc;

    fn key(alpha: &[(i16, u8)], beta: &[(i16, u8)], l: &[u8]) -> MonoKey {
        MonoKey::new(&[0, 0, 0], l, alpha, beta)
    }

    #[test]
    fn classes() {
        assert_eq!(classify(&key(&[(20, 1), (21, 2)], &[], &[0, 0]), 16), None);
        assert_eq!(classify(&key(&[(20, 1)], &[], &[0, 0]), 16), Some(Class::Linear));
        assert_eq!(classify(&key(&[(3, 1)], &[(3, 1)], &[1, 0]), 16), Some(Class::Low));
        assert_eq!(classify(&key(&[(20, 1)], &[(20, 1)], &[0, 0]), 16), Some(Class::Paired));
    }

    #[test]
    fn uniform_quadratic_has_no_deviation() {
        let dom = Domain::new(0.5, 0.1, 0.5, 1.0).unwrap();
        let budget = Arc::new(Budget::new(1, vec![0, 1], 4, 8, 4, dom).unwrap());
        let terms = budget
            .normal_sites()
            .into_iter()
            .map(|m| (key(&[(m, 2)], &[], &[0, 0]), ParamJet::real(m.unsigned_abs() as f64, 3)));
        let p = TFSeries::from_terms(&budget, terms).unwrap();
        let report = verify_toeplitz(&p, &dom, 10.0);
        assert!((report.limit_norm - 2.0).abs() < 1e-14);
        assert_eq!(report.max_scaled_deviation, 0.0);
    }
}
