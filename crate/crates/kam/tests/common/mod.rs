#![allow(dead_code)]

pub mod oracles;

use std::sync::Arc;

use kam::series::{Budget, Domain, MonoKey, TFSeries};
use kam::ParamJet;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const NORMAL_SITES: [i16; 6] = [-3, -2, -1, 2, 3, 4];

pub fn reference_domain() -> Domain {
    Domain::new(0.5, 0.1, 0.5, 1.0).unwrap()
}

pub fn budget(k_cap: u32, n_max: u32, d_cap: u32) -> Arc<Budget> {
    Arc::new(Budget::new(1, vec![0, 1], k_cap, n_max, d_cap, reference_domain()).unwrap())
}

/// Shape of a random series.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub terms: usize,
    /// Largest entry of `|k|` per angle.
    pub k: i16,
    pub degree: u32,
    /// Largest total action power.
    pub actions: u8,
}

pub const SMALL: Shape = Shape {
    terms: 8,
    k: 2,
    degree: 4,
    actions: 1,
};

pub fn jet(rng: &mut ChaCha8Rng, scale: f64, dim: usize) -> ParamJet {
    let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
    let value = c();
    let grad: Vec<Complex64> = (0..dim).map(|_| c() * 0.1).collect();
    ParamJet::new(value, &grad)
}

pub fn random_key(rng: &mut ChaCha8Rng, budget: &Budget, shape: Shape, sites: &[i16]) -> MonoKey {
    loop {
        let k: Vec<i16> = (0..budget.dim()).map(|_| rng.gen_range(-shape.k..=shape.k)).collect();
        let mut l = vec![0u8; budget.b];
        let actions = rng.gen_range(0..=shape.actions);
        for _ in 0..actions {
            l[rng.gen_range(0..budget.b)] += 1;
        }
        let room = shape.degree.saturating_sub(2 * actions as u32);
        let normal = if room == 0 { 0 } else { rng.gen_range(0..=room) };
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for _ in 0..normal {
            let n = sites[rng.gen_range(0..sites.len())];
            if rng.gen_bool(0.5) {
                alpha.push((n, 1));
            } else {
                beta.push((n, 1));
            }
        }
        let key = MonoKey::new(&k, &l, &alpha, &beta);
        if budget.admits(&key) {
            return key;
        }
    }
}

pub fn random_series(rng: &mut ChaCha8Rng, budget: &Arc<Budget>, shape: Shape) -> TFSeries {
    let terms: Vec<(MonoKey, ParamJet)> = (0..shape.terms)
        .map(|_| (random_key(rng, budget, shape, &NORMAL_SITES), jet(rng, 1.0, budget.dim())))
        .collect();
    TFSeries::from_terms(budget, terms).unwrap()
}

/// A random series with `c(k,l,α,β) = conj c(−k,l,β,α)`.
pub fn random_real_series(rng: &mut ChaCha8Rng, budget: &Arc<Budget>, shape: Shape) -> TFSeries {
    let mut terms = Vec::new();
    for _ in 0..shape.terms {
        let key = random_key(rng, budget, shape, &NORMAL_SITES);
        let v = jet(rng, 1.0, budget.dim());
        terms.push((key.conj(), v.conj()));
        terms.push((key, v));
    }
    TFSeries::from_terms(budget, terms).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}
