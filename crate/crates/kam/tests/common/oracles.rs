//! Seeded random oracle suites for the series algebra and the lattice.

use kam::lattice::Lattice;
use kam::model::ModelConfig;
use kam::series::{
    add, d_theta, mul, poisson_bracket, series_norm, weighted_conv_norm, Domain, MonoKey, SparseSequence, TFSeries,
};
use num_complex::Complex64;
use rand::Rng;

use super::{budget, jet, random_key, random_series, reference_domain, rng, Shape, NORMAL_SITES, SMALL};

pub const CASES: usize = 100;

/// Largest `‖p∗q‖ / (‖p‖‖q‖)` allowed is `2^a`.
pub const CONVOLUTION_CONSTANT: fn(f64) -> f64 = |a| 2f64.powf(a);
pub const CAUCHY_CONSTANT: f64 = 1.0;
pub const TRANSPORT_CONSTANT: f64 = 4.0;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-5;
/// Roundoff allowance of the identities, relative to the input norms.
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Debug)]
pub struct Suite {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest ratio of computed left side to allowed right side.
    pub worst: f64,
}

impl Suite {
    fn run(name: &'static str, seed: u64, mut case: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> f64) -> Self {
        let mut r = rng(seed);
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..CASES {
            let ratio = case(&mut r);
            if !(ratio <= 1.0) {
                failures += 1;
            }
            worst = worst.max(ratio);
        }
        Self {
            name,
            cases: CASES,
            failures,
            worst,
        }
    }

    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

fn random_domain(r: &mut rand_chacha::ChaCha8Rng) -> Domain {
    Domain::new(r.gen_range(0.1..1.0), r.gen_range(0.02..0.2), r.gen_range(0.1..1.0), r.gen_range(1.0..2.0)).unwrap()
}

/// `{f,g} + {g,f}` vanishes up to the tails.
pub fn antisymmetry() -> Suite {
    let b = budget(16, 8, 8);
    Suite::run("bracket antisymmetry", 11, |r| {
        let f = random_series(r, &b, SMALL);
        let g = random_series(r, &b, SMALL);
        let sum = add(&poisson_bracket(&f, &g).unwrap(), &poisson_bracket(&g, &f).unwrap()).unwrap();
        let dom = reference_domain();
        let body = series_norm(&sum, &dom) - sum.tail();
        body / (sum.tail() + ROUNDOFF * series_norm(&f, &dom) * series_norm(&g, &dom) / (dom.s * dom.s))
    })
}

/// Jacobi identity up to the accumulated tails.
pub fn jacobi() -> Suite {
    let b = budget(16, 8, 8);
    let shape = Shape { terms: 6, ..SMALL };
    Suite::run("bracket Jacobi", 12, |r| {
        let f = random_series(r, &b, shape);
        let g = random_series(r, &b, shape);
        let h = random_series(r, &b, shape);
        let pb = |x: &TFSeries, y: &TFSeries| poisson_bracket(x, y).unwrap();
        let j = add(&add(&pb(&pb(&f, &g), &h), &pb(&pb(&g, &h), &f)).unwrap(), &pb(&pb(&h, &f), &g)).unwrap();
        let dom = reference_domain();
        let scale = series_norm(&f, &dom) * series_norm(&g, &dom) * series_norm(&h, &dom) / dom.s.powi(4);
        let body = series_norm(&j, &dom) - j.tail();
        body / (j.tail() + ROUNDOFF * scale)
    })
}

/// `‖fg‖ ≤ ‖f‖‖g‖` with the product measured exactly as computed. Half the
/// cases overflow the budget and are measured on the reference domain.
pub fn submultiplicativity() -> Suite {
    let roomy = budget(16, 8, 8);
    let tight = budget(3, 8, 4);
    let mut flip = false;
    Suite::run("norm submultiplicativity", 13, move |r| {
        flip = !flip;
        let (b, dom, shape) = if flip {
            (&roomy, random_domain(r), SMALL)
        } else {
            (&tight, reference_domain(), Shape { k: 1, degree: 3, ..SMALL })
        };
        let f = random_series(r, b, shape);
        let g = random_series(r, b, shape);
        let fg = mul(&f, &g).unwrap();
        series_norm(&fg, &dom) / (series_norm(&f, &dom) * series_norm(&g, &dom) * (1.0 + 1e-14))
    })
}

/// `‖∂_θ f‖` at strip `r − ϱ` is at most `ϱ⁻¹ ‖f‖` at strip `r`.
pub fn cauchy() -> Suite {
    let b = budget(16, 8, 8);
    let shape = Shape { k: 4, ..SMALL };
    Suite::run("Cauchy estimate", 14, |r| {
        let f = random_series(r, &b, shape);
        let dom = random_domain(r);
        let loss = r.gen_range(0.01..0.9) * dom.r;
        let inner = Domain { r: dom.r - loss, ..dom };
        let idx = r.gen_range(0..b.dim());
        series_norm(&d_theta(&f, idx), &inner) / (CAUCHY_CONSTANT / loss * series_norm(&f, &dom))
    })
}

/// A series linear in `w_n, w̄_n` with coefficients of size `C e^{−|n|ρ}`
/// keeps that factor through a bracket with any `G` not involving `n`:
/// `‖{F_n, G}‖_{r−ϱ} ≤ 4 ϱ⁻¹ s⁻² ‖F_n‖_r ‖G‖_r`.
pub fn decay_transport() -> Suite {
    let b = budget(16, 8, 8);
    Suite::run("decay transport", 15, |r| {
        let n = NORMAL_SITES[r.gen_range(0..NORMAL_SITES.len())];
        let dom = random_domain(r);
        let size = r.gen_range(0.1..10.0) * (-(n.unsigned_abs() as f64) * dom.rho).exp();
        let terms: Vec<(MonoKey, kam::ParamJet)> = (0..6)
            .map(|_| {
                let k: Vec<i16> = (0..b.dim()).map(|_| r.gen_range(-3..=3)).collect();
                let mut l = vec![0u8; b.b];
                if r.gen_bool(0.5) {
                    l[r.gen_range(0..b.b)] = 1;
                }
                let site = [(n, 1u8)];
                let key = if r.gen_bool(0.5) {
                    MonoKey::new(&k, &l, &site, &[])
                } else {
                    MonoKey::new(&k, &l, &[], &site)
                };
                (key, jet(r, size, b.dim()))
            })
            .collect();
        let f = TFSeries::from_terms(&b, terms).unwrap();
        let others: Vec<i16> = NORMAL_SITES.iter().copied().filter(|&m| m != n).collect();
        let g_shape = Shape { k: 3, degree: 4, ..SMALL };
        let g_terms: Vec<(MonoKey, kam::ParamJet)> = (0..g_shape.terms)
            .map(|_| (random_key(r, &b, g_shape, &others), jet(r, 1.0, b.dim())))
            .collect();
        let g = TFSeries::from_terms(&b, g_terms).unwrap();
        let fg = poisson_bracket(&f, &g).unwrap();
        assert!(fg.terms().iter().all(|(k, _)| k.order_at(n) == 1), "bracket left the site-{n} class");
        let loss = r.gen_range(0.05..0.9) * dom.r;
        let inner = Domain { r: dom.r - loss, ..dom };
        let rhs = TRANSPORT_CONSTANT / (loss * dom.s * dom.s) * series_norm(&f, &dom) * series_norm(&g, &dom);
        series_norm(&fg, &inner) / rhs
    })
}

/// `‖p∗q‖_{a,ρ} ≤ 2^a ‖p‖_{a,ρ} ‖q‖_{a,ρ}` on the whole lattice.
pub fn convolution() -> Suite {
    Suite::run("convolution bound", 16, |r| {
        let a = r.gen_range(1.0..3.0);
        let rho = r.gen_range(0.0..1.0);
        let seq = |r: &mut rand_chacha::ChaCha8Rng| -> SparseSequence {
            (0..r.gen_range(1..8))
                .map(|_| (r.gen_range(-12..=12), Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))))
                .collect()
        };
        let p = seq(r);
        let q = seq(r);
        let (pq, np, nq) = weighted_conv_norm(&p, &q, a, rho);
        pq / (CONVOLUTION_CONSTANT(a) * np * nq)
    })
}

/// The quartic gradient against central differences.
pub fn quartic_gradient() -> Suite {
    let model = ModelConfig::default();
    let lattice = Lattice::new(&model, &model.default_sigma()).unwrap();
    Suite::run("quartic gradient", 17, |r| {
        let scale = r.gen_range(0.01..1.0);
        let q: Vec<f64> = (0..lattice.len()).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
        let grad = lattice.quartic_gradient(&q);
        let top = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut worst: f64 = 0.0;
        for _ in 0..8 {
            let i = r.gen_range(0..lattice.len());
            let (mut up, mut down) = (q.clone(), q.clone());
            up[i] += GRADIENT_STEP;
            down[i] -= GRADIENT_STEP;
            let fd = (lattice.quartic(&up) - lattice.quartic(&down)) / (2.0 * GRADIENT_STEP);
            worst = worst.max((fd - grad[i]).abs() / top);
        }
        worst / GRADIENT_TOLERANCE
    })
}

pub fn all() -> Vec<Suite> {
    vec![
        antisymmetry(),
        jacobi(),
        submultiplicativity(),
        cauchy(),
        decay_transport(),
        convolution(),
        quartic_gradient(),
    ]
}
