use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{check_divisors, fourier_box, truncate, DivisorLog, Spectrum, Thresholds, Truncation};
use crate::error::{KamError, Result};
use crate::jet::ParamJet;
use crate::normal_form::{block_slot, NormalForm};
use crate::series::{add, gamma_k, increment, mul, series_norm, sub, Exponents, MonoKey, TFSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative bound on `‖Γ_K({N,F} + R − N̂)‖` after a solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const EXP_CUTOFF: f64 = 1e-12;
const NEUMANN_TOLERANCE: f64 = 1e-12;
const NEUMANN_MAX_ITER: usize = 200;

#[derive(Clone, Debug)]
pub struct Solution {
    pub generator: TFSeries,
    pub update: NormalForm,
    /// The part of `P` the generator removes.
    pub used: TFSeries,
    /// `{N,F} + used − N̂`; only its `|k| > K` part and roundoff are nonzero.
    pub error: TFSeries,
    /// `P − used`.
    pub kept: TFSeries,
    /// `‖Γ_K(error)‖ / ‖R‖` on the reference domain.
    pub residual: f64,
    pub divisors: DivisorLog,
    pub neumann_iterations: usize,
    pub truncation: Truncation,
}

fn phase(k: &[i16], omega: &[ParamJet]) -> ParamJet {
    let mut out = ParamJet::zero(omega.len());
    for (&kk, w) in k.iter().zip(omega) {
        if kk != 0 {
            out.add_scaled(w, Complex64::new(kk as f64, 0.0));
        }
    }
    out
}

fn block_norm(k: &[i16], nu: usize) -> u32 {
    let a: u32 = k[..nu].iter().map(|x| x.unsigned_abs() as u32).sum();
    let b: u32 = k[nu..].iter().map(|x| x.unsigned_abs() as u32).sum();
    a.max(b)
}

fn is_pair(key: &MonoKey) -> Option<i16> {
    match (key.alpha.as_slice(), key.beta.as_slice()) {
        ([(p, 1)], [(q, 1)]) if p == q => Some(*p),
        _ => None,
    }
}

fn divide(value: &ParamJet, divisor: &ParamJet, key: &MonoKey) -> Result<ParamJet> {
    if divisor.value.norm() == 0.0 {
        return Err(KamError::DivisorViolation {
            kind: "resonant".into(),
            k: key.k.iter().map(|&x| x as i32).collect(),
            n: key.alpha.first().map_or(0, |e| e.0 as i32),
            m: key.beta.first().map_or(0, |e| e.0 as i32),
            value: 0.0,
            threshold: 0.0,
        });
    }
    Ok(value.div(divisor))
}

/// Linear substitution of every normal variable; `w(n)` and `wbar(n)` list
/// the new variables with their coefficients.
fn change_frame(
    terms: &[(MonoKey, ParamJet)],
    w: impl Fn(i16) -> Vec<(i16, Complex64)>,
    wbar: impl Fn(i16) -> Vec<(i16, Complex64)>,
) -> Vec<(MonoKey, ParamJet)> {
    let mut out = Vec::new();
    for (key, v) in terms {
        let mut partial: Vec<(Exponents, Exponents, Complex64)> =
            vec![(Exponents::new(), Exponents::new(), Complex64::new(1.0, 0.0))];
        let factors = key
            .alpha
            .iter()
            .map(|&(n, e)| (n, e, false))
            .chain(key.beta.iter().map(|&(n, e)| (n, e, true)));
        for (n, e, bar) in factors {
            let image = if bar { wbar(n) } else { w(n) };
            for _ in 0..e {
                let mut next = Vec::with_capacity(partial.len() * image.len());
                for (a, b, c) in &partial {
                    for &(site, coef) in &image {
                        let (mut a, mut b) = (a.clone(), b.clone());
                        increment(if bar { &mut b } else { &mut a }, site);
                        next.push((a, b, c * coef));
                    }
                }
                partial = next;
            }
        }
        for (a, b, c) in partial {
            let mut k = key.clone();
            k.alpha = a;
            k.beta = b;
            out.push((k, v.scale(c)));
        }
    }
    out
}

/// `exp(i·m·T)` in the Fourier algebra, summed until the next term's
/// coefficient sum drops below the cutoff.
fn exp_factor(t: &TFSeries, m: i32) -> Result<TFSeries> {
    let budget = t.budget();
    let generator = t.scale_c(I * m as f64);
    let one = TFSeries::constant(budget, budget.jet(Complex64::new(1.0, 0.0)));
    let mut sum = one.clone();
    let mut term = one;
    for j in 1..200 {
        term = mul(&term, &generator)?.scale_c(Complex64::new(1.0 / j as f64, 0.0));
        sum = add(&sum, &term)?;
        let size: f64 = term.terms().iter().map(|(_, v)| v.magnitude()).sum();
        if size < EXP_CUTOFF {
            break;
        }
    }
    Ok(sum)
}

fn fourier_part(budget_b: usize, entries: &[(MonoKey, ParamJet)]) -> Vec<(MonoKey, ParamJet)> {
    entries
        .iter()
        .map(|(k, v)| (MonoKey::fourier(&k.k, budget_b), v.clone()))
        .collect()
}

/// Solve the linearized equation for the truncation of `p` around `nf`.
pub fn solve(nf: &NormalForm, p: &TFSeries, thr: &Thresholds) -> Result<Solution> {
    let budget = p.budget().clone();
    let (nu, b, dim) = (budget.nu, budget.b, budget.dim());
    let spectrum = Spectrum::of(nf);
    let divisors = check_divisors(&spectrum, thr);
    if let Some(d) = divisors.violations.first() {
        return Err(KamError::DivisorViolation {
            kind: d.kind.to_string(),
            k: d.k.clone(),
            n: d.n,
            m: d.m,
            value: d.value,
            threshold: d.threshold,
        });
    }
    let parts = truncate(p, thr);
    let mut update = NormalForm::zero(&budget, thr.ek);

    // Angle-action part.
    let mut f0 = Vec::new();
    for (key, v) in parts.r0.terms() {
        if key.is_k_zero() {
            match key.l.iter().position(|&x| x == 1) {
                Some(j) => update.omega[nu + j] += v,
                None => update.energy += v,
            }
        } else {
            let d = phase(&key.k, &nf.omega).scale(I);
            f0.push((key.clone(), -&divide(v, &d, key)?));
        }
    }
    let f0 = TFSeries::from_terms(&budget, f0)?;
    let coupling = nf
        .bracket(&f0)?
        .filter(|k| k.normal_degree() == 2 && k.action_degree() == 0 && k.k_norm(nu) <= thr.k);
    let quadratic = add(&add(&parts.r2_low, &parts.r2_high)?, &coupling)?;

    // Uniform part of the diagonal: shift over all modes, modulation from
    // the high modes.
    let low = |n: i16| n.unsigned_abs() as u32 <= thr.ek;
    let normal = budget.normal_sites();
    let mut diagonal: BTreeMap<i16, BTreeMap<Vec<i16>, ParamJet>> = BTreeMap::new();
    let mut off_low = Vec::new();
    let mut off_high = Vec::new();
    for (key, v) in quadratic.terms() {
        if let Some(n) = is_pair(key) {
            diagonal.entry(n).or_default().insert(key.k.to_vec(), v.clone());
        } else if key.support().iter().all(|&n| low(n)) {
            off_low.push((key.clone(), v.clone()));
        } else {
            off_high.push((key.clone(), v.clone()));
        }
    }
    let zero_k = vec![0i16; dim];
    let weight_sum: f64 = normal.iter().map(|&n| (n as f64).powi(2)).sum();
    let mut shift = ParamJet::zero(dim);
    for (&n, d) in &diagonal {
        if let Some(v) = d.get(&zero_k) {
            shift.add_scaled(v, Complex64::new(n.unsigned_abs() as f64 / weight_sum, 0.0));
        }
    }
    let high_sites: Vec<i16> = normal.iter().copied().filter(|&n| !low(n)).collect();
    let high_weight: f64 = high_sites.iter().map(|&n| (n as f64).powi(2)).sum();
    let mut modulation: BTreeMap<Vec<i16>, ParamJet> = BTreeMap::new();
    for &n in &high_sites {
        for (k, v) in diagonal.get(&n).into_iter().flatten() {
            if *k != zero_k {
                modulation
                    .entry(k.clone())
                    .or_insert_with(|| ParamJet::zero(dim))
                    .add_scaled(v, Complex64::new(n.unsigned_abs() as f64 / high_weight, 0.0));
            }
        }
    }
    update.shift = shift.clone();
    update.modulation = TFSeries::from_terms(
        &budget,
        modulation.iter().map(|(k, v)| (MonoKey::fourier(k, b), v.clone())),
    )?;

    let mut resid_high = Vec::new();
    let mut source_low = off_low;
    let mut resonant: BTreeMap<(i16, i16), ParamJet> = BTreeMap::new();
    for &n in &normal {
        let weight = n.unsigned_abs() as f64;
        let mut entries = diagonal.remove(&n).unwrap_or_default();
        let mut sub_at = |k: &Vec<i16>, v: &ParamJet| {
            *entries.entry(k.clone()).or_insert_with(|| ParamJet::zero(dim)) -= &v.scale_re(weight);
        };
        sub_at(&zero_k, &shift);
        for (k, v) in &modulation {
            sub_at(k, v);
        }
        let pair = MonoKey::new(&zero_k, &vec![0; b], &[(n, 1)], &[(n, 1)]);
        for (k, v) in entries {
            if v.is_zero() {
                continue;
            }
            if !low(n) {
                resid_high.push((pair.clone().with_k(&k), v));
            } else if k == zero_k {
                resonant.insert((n, n), v);
            } else {
                source_low.push((pair.clone().with_k(&k), v));
            }
        }
    }
    source_low.retain(|(key, v)| {
        if key.is_k_zero() {
            if let ([(p, 1)], [(q, 1)]) = (key.alpha.as_slice(), key.beta.as_slice()) {
                if p.unsigned_abs() == q.unsigned_abs() {
                    *resonant.entry((*p, *q)).or_insert_with(|| ParamJet::zero(dim)) += v;
                    return false;
                }
            }
        }
        true
    });
    for (&(p, q), v) in &resonant {
        let block = update
            .blocks
            .entry(p.unsigned_abs())
            .or_insert_with(|| std::array::from_fn(|_| std::array::from_fn(|_| ParamJet::zero(dim))));
        block[block_slot(p)][block_slot(q)] += v;
    }
    let source_low: Vec<_> = source_low
        .into_iter()
        .chain(parts.r1.terms().iter().cloned())
        .collect();

    // Low modes in the eigenframe of the current blocks.
    let frames = &spectrum.frames;
    let in_frame = |n: i16| frames.get(&n.unsigned_abs()).filter(|_| nf.block_partners(n).len() == 2);
    let label = |m: u16, slot: usize| if slot == 0 { m as i16 } else { -(m as i16) };
    let to_v = |n: i16, bar: bool| -> Vec<(i16, Complex64)> {
        match in_frame(n) {
            Some(fr) => (0..2)
                .map(|i| {
                    let u = fr.unitary[block_slot(n)][i];
                    (label(n.unsigned_abs(), i), if bar { u } else { u.conj() })
                })
                .filter(|(_, c)| c.norm() != 0.0)
                .collect(),
            None => vec![(n, Complex64::new(1.0, 0.0))],
        }
    };
    let to_w = |n: i16, bar: bool| -> Vec<(i16, Complex64)> {
        match in_frame(n) {
            Some(fr) => (0..2)
                .map(|slot| {
                    let u = fr.unitary[slot][block_slot(n)];
                    (label(n.unsigned_abs(), slot), if bar { u.conj() } else { u })
                })
                .filter(|(_, c)| c.norm() != 0.0)
                .collect(),
            None => vec![(n, Complex64::new(1.0, 0.0))],
        }
    };
    let v_source = change_frame(&source_low, |n| to_v(n, false), |n| to_v(n, true));

    let shift_t: Vec<(MonoKey, ParamJet)> = nf
        .modulation
        .terms()
        .iter()
        .filter(|(k, _)| !k.is_k_zero())
        .map(|(k, v)| Ok((k.clone(), divide(v, &phase(&k.k, &nf.omega).scale(I), k)?)))
        .collect::<Result<_>>()?;
    let t_series = TFSeries::from_terms(&budget, shift_t)?;
    let mut factors: BTreeMap<i32, TFSeries> = BTreeMap::new();

    let mut groups: BTreeMap<(Exponents, Exponents), Vec<(MonoKey, ParamJet)>> = BTreeMap::new();
    for (key, v) in v_source {
        if !v.is_zero() {
            groups.entry((key.alpha.clone(), key.beta.clone())).or_default().push((key, v));
        }
    }
    let mut v_solution = Vec::new();
    for ((alpha, beta), entries) in groups {
        let mut m = 0i32;
        let mut mean = ParamJet::zero(dim);
        for &(n, e) in &alpha {
            m += e as i32 * n.unsigned_abs() as i32;
            mean.add_scaled(&spectrum.frequencies[&n], Complex64::new(e as f64, 0.0));
        }
        for &(n, e) in &beta {
            m -= e as i32 * n.unsigned_abs() as i32;
            mean.add_scaled(&spectrum.frequencies[&n], Complex64::new(-(e as f64), 0.0));
        }
        let source = TFSeries::from_terms(&budget, fourier_part(b, &entries))?;
        let twisted = if m == 0 || t_series.is_empty() {
            source
        } else {
            if !factors.contains_key(&-m) {
                factors.insert(-m, exp_factor(&t_series, -m)?);
            }
            gamma_k(&mul(&factors[&-m], &source)?, thr.k).0
        };
        let mut solved = Vec::with_capacity(twisted.len());
        for (key, v) in twisted.terms() {
            let d = (&phase(&key.k, &nf.omega) - &mean).scale(I);
            solved.push((key.clone(), -&divide(v, &d, key)?));
        }
        let mut g = TFSeries::from_terms(&budget, solved)?;
        if m != 0 && !t_series.is_empty() {
            if !factors.contains_key(&m) {
                factors.insert(m, exp_factor(&t_series, m)?);
            }
            g = mul(&factors[&m], &g)?;
        }
        for (key, v) in g.terms() {
            let mut full = key.clone();
            full.alpha = alpha.clone();
            full.beta = beta.clone();
            v_solution.push((full, v.clone()));
        }
    }
    let f_low = TFSeries::from_terms(
        &budget,
        change_frame(&v_solution, |n| to_w(n, false), |n| to_w(n, true)),
    )?;

    // High modes: w_n² and w̄_n² by Neumann iteration.
    let box_phases: Vec<f64> = if nf.modulation.is_empty() {
        Vec::new()
    } else {
        fourier_box(nu, b, thr.k)
            .iter()
            .map(|k| k.iter().zip(&spectrum.omega).map(|(&a, w)| a as f64 * w).sum())
            .collect()
    };
    let f_terms: Vec<(Vec<i16>, ParamJet)> =
        nf.modulation.terms().iter().map(|(k, v)| (k.k.to_vec(), v.clone())).collect();
    let f_size: f64 = f_terms.iter().map(|(_, v)| v.value.norm()).sum();
    let mut high_groups: BTreeMap<(Exponents, Exponents), BTreeMap<Vec<i16>, ParamJet>> = BTreeMap::new();
    for (key, v) in off_high {
        high_groups
            .entry((key.alpha.clone(), key.beta.clone()))
            .or_default()
            .insert(key.k.to_vec(), v);
    }
    let mut neumann_iterations = 0;
    let mut f_high = Vec::new();
    for ((alpha, beta), source) in high_groups {
        let (n, sign) = match (alpha.as_slice(), beta.as_slice()) {
            ([(n, 2)], []) => (*n, 1.0),
            ([], [(n, 2)]) => (*n, -1.0),
            _ => unreachable!("high quadratic terms are w_n², w_n w̄_n or w̄_n²"),
        };
        let m = sign * 2.0 * n.unsigned_abs() as f64;
        let mean = spectrum.frequencies[&n].scale_re(2.0 * sign);
        if !box_phases.is_empty() {
            let closest = box_phases
                .iter()
                .map(|x| (x - mean.value.re).abs())
                .fold(f64::INFINITY, f64::min);
            let bound = m.abs() * f_size / closest;
            if bound >= 0.5 {
                return Err(KamError::NeumannDivergence { n: n as i32, bound });
            }
        }
        let lambda: BTreeMap<Vec<i16>, ParamJet> = source
            .keys()
            .map(|k| (k.clone(), (&phase(k, &nf.omega) - &mean).scale(I)))
            .collect();
        let mut current: BTreeMap<Vec<i16>, ParamJet> = BTreeMap::new();
        for iter in 1..=NEUMANN_MAX_ITER {
            let mut rhs: BTreeMap<Vec<i16>, ParamJet> =
                source.iter().map(|(k, v)| (k.clone(), -v)).collect();
            for (k, v) in &current {
                for (fk, fv) in &f_terms {
                    let sum: Vec<i16> = k.iter().zip(fk).map(|(a, c)| a + c).collect();
                    if block_norm(&sum, nu) <= thr.k {
                        rhs.entry(sum)
                            .or_insert_with(|| ParamJet::zero(dim))
                            .add_product(&(fv * v), &ParamJet::constant(I * m, dim));
                    }
                }
            }
            let mut next = BTreeMap::new();
            for (k, v) in rhs {
                let l = match lambda.get(&k) {
                    Some(l) => l.clone(),
                    None => (&phase(&k, &nf.omega) - &mean).scale(I),
                };
                let key = MonoKey::fourier(&k, b);
                next.insert(k, divide(&v, &l, &key)?);
            }
            let size: f64 = next.values().map(ParamJet::magnitude).sum();
            let change: f64 = next
                .iter()
                .map(|(k, v)| match current.get(k) {
                    Some(c) => (v - c).magnitude(),
                    None => v.magnitude(),
                })
                .sum();
            current = next;
            neumann_iterations = neumann_iterations.max(iter);
            if change <= NEUMANN_TOLERANCE * size || f_terms.is_empty() {
                break;
            }
            if iter == NEUMANN_MAX_ITER {
                return Err(KamError::NeumannDivergence { n: n as i32, bound: change / size });
            }
        }
        let base = MonoKey::new(&zero_k, &vec![0; b], &alpha, &beta);
        f_high.extend(current.into_iter().map(|(k, v)| (base.clone().with_k(&k), v)));
    }
    let f_high = TFSeries::from_terms(&budget, f_high)?;

    let generator = add(&add(&f0, &f_low)?, &f_high)?;
    let resid = TFSeries::from_terms(&budget, resid_high)?;
    let requested = parts.solved()?;
    let used = sub(&requested, &resid)?;
    let kept = add(&parts.rest, &resid)?;
    let error = sub(&add(&nf.bracket(&generator)?, &used)?, &update.update_series()?)?;

    let dom = budget.tail_ref;
    let scale = series_norm(&requested.filter(|_| true), &dom);
    let low_error = error.filter(|k| k.k_norm(nu) <= thr.k);
    let residual = if scale > 0.0 {
        series_norm(&low_error, &dom) / scale
    } else {
        series_norm(&low_error, &dom)
    };
    if residual > RESIDUAL_TOLERANCE {
        return Err(KamError::Gate {
            gate: "homological residual".into(),
            detail: format!("{residual:.3e} exceeds {RESIDUAL_TOLERANCE:.0e}"),
        });
    }
    Ok(Solution {
        generator,
        update,
        used,
        error,
        kept,
        residual,
        divisors,
        neumann_iterations,
        truncation: parts,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::normal_form::Block;
    use crate::series::{Budget, Domain};

    fn budget() -> Arc<Budget> {
        let dom = Domain::new(0.5, 0.1, 0.5, 1.0).unwrap();
        Arc::new(Budget::new(1, vec![0, 1], 6, 6, 4, dom).unwrap())
    }

    fn thresholds() -> Thresholds {
        Thresholds {
            gamma: 1e-6,
            gamma0: 1e-6,
            tau: 4.0,
            k: 3,
            ek: 3,
            ek_prev: 1,
            delta0: 1e-6,
        }
    }

    fn normal_form(budget: &Arc<Budget>) -> NormalForm {
        let dim = budget.dim();
        let omega = vec![
            ParamJet::variable(0.618_033_988_749_895, 0, dim),
            ParamJet::variable(1.048_808_848_170_151_5, 1, dim),
            ParamJet::variable(2.144_761_058_952_721_7, 2, dim),
        ];
        NormalForm::new(budget, omega, 1)
    }

    #[test]
    fn cosine_action_term() {
        let budget = budget();
        let nf = normal_form(&budget);
        let dim = budget.dim();
        let k = [0i16, 1, -1];
        let half = ParamJet::real(0.5, dim);
        let r = TFSeries::from_terms(
            &budget,
            [
                (MonoKey::new(&k, &[1, 0], &[], &[]), half.clone()),
                (MonoKey::new(&[0, -1, 1], &[1, 0], &[], &[]), half),
            ],
        )
        .unwrap();
        let sol = solve(&nf, &r, &thresholds()).unwrap();
        let freq = nf.omega[1].value.re - nf.omega[2].value.re;
        // −sin<k,θ>/<k,ω> = (i/2)(e^{i<k,θ>} − e^{−i<k,θ>})/<k,ω>
        let got = sol.generator.coefficient(&MonoKey::new(&k, &[1, 0], &[], &[]));
        assert!((got - Complex64::new(0.0, 0.5 / freq)).norm() < 1e-14);
        assert!(sol.update.omega.iter().all(|w| w.is_zero()));
        assert!(sol.residual < 1e-14);
    }

    #[test]
    fn high_mode_without_modulation_is_diagonal() {
        let budget = budget();
        let nf = normal_form(&budget);
        let dim = budget.dim();
        let z = [0i16, 0, 0];
        let key = MonoKey::new(&[1, 0, 0], &[0, 0], &[(5, 2)], &[]);
        let r = TFSeries::from_terms(
            &budget,
            [
                (key.clone(), ParamJet::real(1e-3, dim)),
                (MonoKey::new(&[-1, 0, 0], &[0, 0], &[], &[(5, 2)]), ParamJet::real(1e-3, dim)),
                (MonoKey::new(&z, &[0, 0], &[(5, 1)], &[(5, 1)]), ParamJet::real(2e-3, dim)),
            ],
        )
        .unwrap();
        let sol = solve(&nf, &r, &thresholds()).unwrap();
        let lambda = I * (nf.omega[0].value - 10.0);
        let got = sol.generator.coefficient(&key);
        assert!((got + 1e-3 / lambda).norm() < 1e-15);
        assert!(sol.neumann_iterations <= 1);
        // the diagonal term is folded into the uniform shift
        let normal = budget.normal_sites();
        let weights: f64 = normal.iter().map(|&n| (n as f64).powi(2)).sum();
        assert!((sol.update.shift.value.re - 5.0 * 2e-3 / weights).abs() < 1e-15);
    }

    #[test]
    fn equal_sites_need_no_integrating_factor() {
        let budget = budget();
        let mut nf = normal_form(&budget);
        let dim = budget.dim();
        nf.modulation = TFSeries::from_terms(
            &budget,
            [
                (MonoKey::fourier(&[0, 1, 0], 2), ParamJet::real(1e-4, dim)),
                (MonoKey::fourier(&[0, -1, 0], 2), ParamJet::real(1e-4, dim)),
            ],
        )
        .unwrap();
        let k = [1i16, 0, 0];
        let key = MonoKey::new(&k, &[0, 0], &[(2, 1)], &[(2, 1)]);
        let r = TFSeries::from_terms(
            &budget,
            [
                (key.clone(), ParamJet::real(1e-3, dim)),
                (key.conj(), ParamJet::real(1e-3, dim)),
            ],
        )
        .unwrap();
        let mut thr = thresholds();
        thr.ek = 6;
        let sol = solve(&nf, &r, &thr).unwrap();
        let got = sol.generator.coefficient(&key);
        assert!((got + 1e-3 / (I * nf.omega[0].value)).norm() < 1e-15);
        assert!(sol.generator.len() == 2);
    }

    #[test]
    fn blocks_and_modulation_leave_small_residual() {
        let budget = budget();
        let mut nf = normal_form(&budget);
        let dim = budget.dim();
        nf.shift = ParamJet::real(1e-4, dim);
        nf.modulation = TFSeries::from_terms(
            &budget,
            [
                (MonoKey::fourier(&[0, 1, 0], 2), ParamJet::real(2e-4, dim)),
                (MonoKey::fourier(&[0, -1, 0], 2), ParamJet::real(2e-4, dim)),
            ],
        )
        .unwrap();
        let mut block: Block = std::array::from_fn(|_| std::array::from_fn(|_| ParamJet::zero(dim)));
        block[0][0] = ParamJet::real(3e-4, dim);
        block[1][1] = ParamJet::real(-1e-4, dim);
        block[0][1] = ParamJet::constant(Complex64::new(1e-4, 5e-5), dim);
        block[1][0] = block[0][1].conj();
        nf.blocks.insert(2, block);

        let z = [0i16, 0, 0];
        let terms = [
            (MonoKey::new(&[1, 0, 0], &[0, 0], &[(2, 1)], &[]), Complex64::new(1e-3, 2e-4)),
            (MonoKey::new(&[0, 1, 0], &[0, 0], &[(-2, 1)], &[(3, 1)]), Complex64::new(5e-4, 0.0)),
            (MonoKey::new(&z, &[0, 0], &[(2, 1)], &[(-2, 1)]), Complex64::new(2e-4, 1e-4)),
            (MonoKey::new(&[0, 0, 1], &[0, 0], &[(5, 2)], &[]), Complex64::new(3e-4, 0.0)),
            (MonoKey::new(&[1, 0, 0], &[0, 0], &[(6, 1)], &[(6, 1)]), Complex64::new(1e-4, 0.0)),
        ];
        let mut all = Vec::new();
        for (key, c) in terms {
            all.push((key.conj(), ParamJet::constant(c.conj(), dim)));
            all.push((key, ParamJet::constant(c, dim)));
        }
        let r = TFSeries::from_terms(&budget, all).unwrap();
        assert!(r.is_real());
        let sol = solve(&nf, &r, &thresholds()).unwrap();
        assert!(sol.residual < RESIDUAL_TOLERANCE);
        assert!(sol.generator.reality_defect() < 1e-10);
        assert!(sol.update.hermitian_defect() < 1e-15);
    }
}
