mod common;

use std::io::Cursor;
use std::sync::Arc;

use common::{budget, random_real_series, random_series, reference_domain, rng, Shape, SMALL};
use kam::series::{
    add, gamma_k, mul, poisson_bracket, read_series, series_norm, sub, vecfield_norm, weighted_conv_norm, write_series,
    Budget, Domain, MonoKey, SparseSequence, TFSeries, Tail,
};
use kam::ParamJet;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mono(b: &Arc<Budget>, k: &[i16], l: &[u8], alpha: &[(i16, u8)], beta: &[(i16, u8)], v: Complex64) -> TFSeries {
    TFSeries::monomial(b, MonoKey::new(k, l, alpha, beta), b.jet(v)).unwrap()
}

#[test]
fn adding_zero_and_the_negative() {
    let b = budget(8, 8, 6);
    let f = random_series(&mut rng(1), &b, SMALL).with_tail(Tail::new(1e-3, 5));
    assert_eq!(add(&f, &TFSeries::zero(&b)).unwrap(), f);
    let diff = sub(&f, &f).unwrap();
    assert!(diff.terms().iter().all(|(_, v)| v.is_zero()));
    assert_eq!(diff.tail(), 2e-3);
}

#[test]
fn disjoint_keys_stay_separate() {
    let b = budget(8, 8, 6);
    let w = mono(&b, &[0, 0, 0], &[0, 0], &[(2, 1)], &[], c(1.0, 0.0));
    let wbar = mono(&b, &[0, 0, 0], &[0, 0], &[], &[(2, 1)], c(1.0, 0.0));
    assert_eq!(add(&w, &wbar).unwrap().len(), 2);
}

#[test]
fn product_of_monomials_and_the_unit() {
    let b = budget(8, 8, 6);
    let w = mono(&b, &[0, 0, 0], &[0, 0], &[(2, 1)], &[], c(1.0, 0.0));
    let sq = mul(&w, &w).unwrap();
    assert_eq!(sq.len(), 1);
    assert_eq!(sq.terms()[0].0.alpha_of(2), 2);
    let g = random_series(&mut rng(2), &b, SMALL);
    let one = TFSeries::constant(&b, b.jet(c(1.0, 0.0)));
    assert_eq!(mul(&one, &g).unwrap(), g);
}

#[test]
fn harmonic_oscillator_bracket() {
    let b = budget(8, 8, 6);
    let z = [0i16; 3];
    let f = mono(&b, &z, &[0, 0], &[(2, 1)], &[(2, 1)], c(1.0, 0.0));
    let g = add(
        &mono(&b, &z, &[0, 0], &[(2, 1)], &[], c(1.0, 0.0)),
        &mono(&b, &z, &[0, 0], &[], &[(2, 1)], c(1.0, 0.0)),
    )
    .unwrap();
    let expect = add(
        &mono(&b, &z, &[0, 0], &[], &[(2, 1)], c(0.0, 1.0)),
        &mono(&b, &z, &[0, 0], &[(2, 1)], &[], c(0.0, -1.0)),
    )
    .unwrap();
    assert_eq!(poisson_bracket(&f, &g).unwrap(), expect);
    assert!(poisson_bracket(&f, &f).unwrap().is_empty());
}

#[test]
fn action_angle_bracket() {
    let b = budget(8, 8, 6);
    let action = mono(&b, &[0, 0, 0], &[1, 0], &[], &[], c(1.0, 0.0));
    let wave = mono(&b, &[0, 1, 0], &[0, 0], &[], &[], c(1.0, 0.0));
    let pb = poisson_bracket(&action, &wave).unwrap();
    assert_eq!(pb.len(), 1);
    assert_eq!(pb.terms()[0].1.value, c(0.0, 1.0));
}

#[test]
fn fourier_split() {
    let b = budget(8, 8, 6);
    let f = [0i16, 1, -1, 5, -5]
        .iter()
        .map(|&k| mono(&b, &[k, 0, 0], &[0, 0], &[], &[], c(1.0, 0.0)))
        .fold(TFSeries::zero(&b), |acc, t| add(&acc, &t).unwrap());
    let (low, high) = gamma_k(&f, 2);
    let low_k: Vec<i16> = low.terms().iter().map(|(k, _)| k.k[0]).collect();
    let high_k: Vec<i16> = high.terms().iter().map(|(k, _)| k.k[0]).collect();
    assert_eq!(low.len(), 3);
    assert!(low_k.iter().all(|k| k.abs() <= 1));
    assert!(high_k.iter().all(|k| k.abs() == 5));
    assert_eq!(add(&low, &high).unwrap(), f);

    let constant = TFSeries::constant(&b, b.jet(c(2.0, 0.0)));
    let (low, high) = gamma_k(&constant, 0);
    assert_eq!(low, constant);
    assert!(high.is_empty());
}

#[test]
fn hand_evaluated_norms() {
    let b = budget(8, 8, 6);
    let dom = Domain::new(0.5, 0.1, 0.25, 1.0).unwrap();
    assert_eq!(series_norm(&TFSeries::zero(&b), &dom), 0.0);
    let wave = mono(&b, &[1, 0, 0], &[0, 0], &[], &[], c(0.3, -0.4));
    assert!((series_norm(&wave, &dom) - 0.5 * 0.5f64.exp()).abs() < 1e-15);
    let w = mono(&b, &[0, 0, 0], &[0, 0], &[(2, 1)], &[], c(1.0, 0.0));
    assert!((series_norm(&w, &dom) - 0.1 * 0.5 * (-0.5f64).exp()).abs() < 1e-16);

    assert_eq!(vecfield_norm(&TFSeries::zero(&b), &dom), 0.0);
    let action = mono(&b, &[0, 0, 0], &[1, 0], &[], &[], c(1.0, 0.0));
    assert!((vecfield_norm(&action, &dom) - 1.0).abs() < 1e-15);
}

#[test]
fn unit_masses_convolve_to_one_weight() {
    let (a, rho) = (1.5, 0.3);
    let p: SparseSequence = [(2, c(1.0, 0.0))].into_iter().collect();
    let q: SparseSequence = [(3, c(1.0, 0.0))].into_iter().collect();
    let (pq, _, _) = weighted_conv_norm(&p, &q, a, rho);
    assert!((pq - 5f64.powf(a) * (5.0 * rho).exp()).abs() < 1e-12);
    assert_eq!(weighted_conv_norm(&SparseSequence::new(), &SparseSequence::new(), a, rho), (0.0, 0.0, 0.0));
}

#[test]
fn text_form_round_trips_exactly() {
    let b = budget(8, 8, 6);
    for seed in 0..10 {
        let f = random_series(&mut rng(100 + seed), &b, SMALL).with_tail(Tail::new(1.0 / 3.0, 5));
        let mut text = Vec::new();
        write_series(&f, &mut text).unwrap();
        assert_eq!(read_series(Cursor::new(text)).unwrap(), f);
    }
}

#[test]
fn malformed_text_names_the_line() {
    let b = budget(8, 8, 6);
    let f = random_series(&mut rng(3), &b, SMALL);
    let mut text = Vec::new();
    write_series(&f, &mut text).unwrap();
    let mut lines: Vec<String> = String::from_utf8(text).unwrap().lines().map(String::from).collect();
    lines[2] = lines[2].replace("re=", "re=x");
    match read_series(Cursor::new(lines.join("\n"))) {
        Err(kam::KamError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn foreign_budgets_are_rejected() {
    let f = random_series(&mut rng(4), &budget(8, 8, 6), SMALL);
    let g = random_series(&mut rng(5), &budget(8, 8, 8), SMALL);
    assert!(matches!(mul(&f, &g), Err(kam::KamError::BudgetMismatch)));
}

#[test]
fn out_of_budget_monomials_are_rejected() {
    let b = budget(4, 8, 4);
    let one = b.jet(c(1.0, 0.0));
    assert!(TFSeries::monomial(&b, MonoKey::new(&[5, 0, 0], &[0, 0], &[], &[]), one.clone()).is_err());
    assert!(TFSeries::monomial(&b, MonoKey::new(&[0, 0, 0], &[0, 0], &[(9, 1)], &[]), one.clone()).is_err());
    assert!(TFSeries::monomial(&b, MonoKey::new(&[0, 0, 0], &[1, 1], &[(2, 1)], &[]), one.clone()).is_err());
    assert!(TFSeries::monomial(&b, MonoKey::new(&[0, 0, 0], &[0, 0], &[(1, 1)], &[]), one).is_err());
}

fn shape_strategy() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_bilinear((seed, terms) in shape_strategy(), alpha in -2.0f64..2.0) {
        let b = budget(16, 8, 8);
        let shape = Shape { terms, ..SMALL };
        let mut r = rng(seed);
        let f = random_series(&mut r, &b, shape);
        let g = random_series(&mut r, &b, shape);
        let h = random_series(&mut r, &b, shape);
        let combo = add(&f, &g.scale_c(c(alpha, 0.0))).unwrap();
        let lhs = poisson_bracket(&combo, &h).unwrap();
        let rhs = add(&poisson_bracket(&f, &h).unwrap(), &poisson_bracket(&g, &h).unwrap().scale_c(c(alpha, 0.0))).unwrap();
        let dom = reference_domain();
        let scale = (series_norm(&f, &dom) + series_norm(&g, &dom)) * series_norm(&h, &dom) / (dom.s * dom.s);
        prop_assert!(series_norm(&sub(&lhs, &rhs).unwrap(), &dom) <= 1e-12 * scale);
    }

    #[test]
    fn tails_never_shrink((seed, terms) in shape_strategy()) {
        let b = budget(3, 8, 4);
        let shape = Shape { terms, k: 1, degree: 3, ..SMALL };
        let mut r = rng(seed);
        let f = random_series(&mut r, &b, shape).with_tail(Tail::new(1e-6, 4));
        let g = random_series(&mut r, &b, shape);
        let product = mul(&f, &g).unwrap();
        prop_assert!(product.tail() >= f.tail() + g.tail());
        let bracket = poisson_bracket(&product, &g).unwrap();
        prop_assert!(bracket.tail() >= product.tail());
        let (low, _) = gamma_k(&bracket, 1);
        prop_assert!(low.tail() >= bracket.tail());
        prop_assert!(add(&low, &f).unwrap().tail() >= low.tail());
    }

    #[test]
    fn reality_survives_the_algebra((seed, terms) in shape_strategy()) {
        let b = budget(16, 8, 8);
        let shape = Shape { terms, ..SMALL };
        let mut r = rng(seed);
        let f = random_real_series(&mut r, &b, shape);
        let g = random_real_series(&mut r, &b, shape);
        prop_assert!(f.is_real() && g.is_real());
        prop_assert!(add(&f, &g).unwrap().is_real());
        prop_assert!(mul(&f, &g).unwrap().is_real());
        prop_assert!(poisson_bracket(&f, &g).unwrap().is_real());
    }

    #[test]
    fn stored_keys_respect_the_budget((seed, terms) in shape_strategy()) {
        let b = budget(3, 8, 4);
        let shape = Shape { terms, k: 1, degree: 3, ..SMALL };
        let mut r = rng(seed);
        let f = random_series(&mut r, &b, shape);
        let g = random_series(&mut r, &b, shape);
        for s in [mul(&f, &g).unwrap(), poisson_bracket(&f, &g).unwrap()] {
            prop_assert!(s.terms().iter().all(|(k, _)| b.admits(k)));
        }
    }

    #[test]
    fn norm_is_monotone_in_the_domain((seed, terms) in shape_strategy(), shrink in 0.1f64..1.0) {
        let b = budget(16, 8, 8);
        let f = random_series(&mut rng(seed), &b, Shape { terms, ..SMALL });
        let dom = reference_domain();
        let inner = Domain { r: dom.r * shrink, s: dom.s * shrink, ..dom };
        prop_assert!(series_norm(&f, &inner) <= series_norm(&f, &dom));
    }

    #[test]
    fn jets_follow_the_product_rule(a in -3.0f64..3.0, b in -3.0f64..3.0, da in -1.0f64..1.0, db in -1.0f64..1.0) {
        let x = ParamJet::new(c(a, 0.5), &[c(da, 0.0)]);
        let y = ParamJet::new(c(b, -0.5), &[c(db, 0.1)]);
        let p = &x * &y;
        prop_assert!((p.grad[0] - (x.grad[0] * y.value + x.value * y.grad[0])).norm() < 1e-12);
    }
}
