//! The forced Kirchhoff lattice in action-angle/complex coordinates.
//!
//! With `S = Σ_s (s²/λ_s)(w_s + w̄_s)²` the quartic is `S²/16`. On a
//! tangential site `w = √I e^{−iθ̃}`, and `I = I* + Î` with `√I` expanded
//! around the fixed amplitude `I*`.

mod assumptions;
mod forcing;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use assumptions::{gradient_ratio, verify_assumptions, AssumptionReport, Bounds, Check};
pub use forcing::{forcing_coefficients, sum_exp_closed_form, ForcingTable};

use crate::error::{KamError, Result};
use crate::jet::ParamJet;
use crate::normal_form::NormalForm;
use crate::series::{add, mul, Budget, Domain, MonoKey, TFSeries, Tail};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    /// `[n, re, im]` rows: `g_n(θ̄) = Re((re + i·im) e^{iθ̄₁})`.
    pub coeffs: Option<Vec<[f64; 3]>>,
    /// Preset name; `sum-exp` or `none`.
    pub closed_form: Option<String>,
    pub amplitude: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            coeffs: None,
            closed_form: Some("sum-exp".into()),
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub k_cap: u32,
    pub n_max: u32,
    pub d_cap: u32,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            k_cap: 32,
            n_max: 32,
            d_cap: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub nu: usize,
    pub tangential_sites: Vec<i32>,
    pub omega_bar: Vec<f64>,
    pub omega_box: Vec<[f64; 2]>,
    pub xi_box: Vec<[f64; 2]>,
    pub eps: f64,
    pub rho_bar: f64,
    pub forcing: ForcingConfig,
    pub budget: BudgetConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            nu: 1,
            tangential_sites: vec![0, 1],
            omega_bar: vec![1.618_033_988_75],
            omega_box: vec![[1.6, 1.64]],
            xi_box: vec![[0.1, 0.9], [0.1, 0.9]],
            eps: 9e-10,
            rho_bar: 2.0,
            forcing: ForcingConfig::default(),
            budget: BudgetConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn b(&self) -> usize {
        self.tangential_sites.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KamError::InvalidModel(m));
        if self.nu == 0 {
            return bad("nu must be positive".into());
        }
        if !self.tangential_sites.contains(&0) {
            return bad("site 0 must be tangential".into());
        }
        if self.omega_bar.len() != self.nu || self.omega_box.len() != self.nu {
            return bad("omega_bar and omega_box need nu entries".into());
        }
        if self.xi_box.len() != self.b() {
            return bad("xi_box needs one interval per tangential site".into());
        }
        for iv in self.xi_box.iter().chain(&self.omega_box) {
            if !(iv[0] < iv[1]) {
                return bad(format!("empty interval {iv:?}"));
            }
        }
        if self.xi_box.iter().any(|iv| iv[0] <= 0.0 || iv[1] >= 1.0) {
            return bad("xi_box must lie inside (0, 1)".into());
        }
        if !(self.eps >= 0.0 && self.rho_bar > 0.0) {
            return bad("need eps ≥ 0 and rho_bar > 0".into());
        }
        if self.tangential_sites.iter().any(|n| n.unsigned_abs() > self.budget.n_max) {
            return bad("tangential site beyond n_max".into());
        }
        match (&self.forcing.coeffs, &self.forcing.closed_form) {
            (Some(_), None) => {}
            (None, Some(name)) if name == "sum-exp" || name == "none" => {}
            (None, Some(name)) => return bad(format!("unknown forcing preset `{name}`")),
            _ => return bad("set exactly one of forcing.coeffs and forcing.closed_form".into()),
        }
        Ok(())
    }

    /// The parameter point `(ω̄, ξ)` at the box centre of `ξ`.
    pub fn default_sigma(&self) -> Vec<f64> {
        let mut s = self.omega_bar.clone();
        s.extend(self.xi_box.iter().map(|iv| 0.5 * (iv[0] + iv[1])));
        s
    }

    pub fn forcing_table(&self) -> ForcingTable {
        let n_max = self.budget.n_max as i32;
        let f = &self.forcing;
        match (&f.coeffs, f.closed_form.as_deref()) {
            (Some(rows), _) => ForcingTable::single_harmonic(
                self.nu,
                rows.iter()
                    .map(|r| (r[0] as i32, Complex64::new(r[1], r[2]) * f.amplitude)),
            ),
            (None, Some("sum-exp")) => ForcingTable::sum_exp(self.nu, n_max, self.rho_bar, f.amplitude),
            _ => ForcingTable::new(self.nu),
        }
    }

    pub fn make_budget(&self, tail_ref: Domain) -> Result<Budget> {
        Budget::new(
            self.nu,
            self.tangential_sites.clone(),
            self.budget.k_cap,
            self.budget.n_max,
            self.budget.d_cap,
            tail_ref,
        )
    }
}

/// `λ_n` with its parameter gradient: `√(i_j² + ξ_j)` on tangential site
/// `i_j`, `|n|` elsewhere.
pub fn eigen(n: i32, sigma: &[f64], nu: usize, tangential: &[i32]) -> ParamJet {
    let dim = sigma.len();
    match tangential.iter().position(|&s| s == n) {
        Some(j) => {
            let xi = ParamJet::variable(sigma[nu + j], nu + j, dim);
            (&xi + &ParamJet::real((n * n) as f64, dim)).sqrt()
        }
        None => ParamJet::real(n.unsigned_abs() as f64, dim),
    }
}

/// Step-zero Hamiltonian `N + P¹ + P² + P³` at one parameter point.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub normal: NormalForm,
    /// Terms even in every normal mode (quartic couplings).
    pub p1: TFSeries,
    /// Terms linear in one normal mode (forcing).
    pub p2: TFSeries,
    /// Terms in the tangential variables only.
    pub p3: TFSeries,
    pub action_center: f64,
}

impl Hamiltonian {
    pub fn perturbation(&self) -> TFSeries {
        add(&add(&self.p1, &self.p2).expect("same budget"), &self.p3).expect("same budget")
    }

    pub fn budget(&self) -> &Arc<Budget> {
        self.p1.budget()
    }
}

/// `binom(1/2, p)`.
fn half_binomial(p: u32) -> f64 {
    (0..p).fold(1.0, |acc, i| acc * (0.5 - i as f64) / (i as f64 + 1.0))
}

fn key_at(dim: usize, b: usize, k: &[(usize, i16)], l: &[(usize, u8)]) -> MonoKey {
    let mut kk = vec![0i16; dim];
    for &(i, v) in k {
        kk[i] += v;
    }
    let mut ll = vec![0u8; b];
    for &(j, p) in l {
        ll[j] += p;
    }
    MonoKey::new(&kk, &ll, &[], &[])
}

/// Build `H` at `sigma = (ω̄, ξ)` with the tangential amplitude
/// `action_center` and the given budget.
pub fn build_hamiltonian(
    cfg: &ModelConfig,
    forcing: &ForcingTable,
    sigma: &[f64],
    action_center: f64,
    budget: &Arc<Budget>,
) -> Result<Hamiltonian> {
    cfg.validate()?;
    let (nu, b, dim) = (budget.nu, budget.b, budget.dim());
    if sigma.len() != dim || nu != cfg.nu || budget.tangential != cfg.tangential_sites {
        return Err(KamError::InvalidModel("parameter point does not match the budget".into()));
    }
    if budget.d_cap < 4 {
        return Err(KamError::BudgetTooSmall(format!(
            "d_cap = {} cannot hold the quartic",
            budget.d_cap
        )));
    }
    let center = action_center;
    let s_ref = budget.tail_ref.s;
    let ratio = s_ref * s_ref / center;
    if !(center > 0.0 && ratio < 1.0) {
        return Err(KamError::InvalidModel(format!(
            "action centre {center:.3e} must exceed the reference radius squared {:.3e}",
            s_ref * s_ref
        )));
    }
    let tangential = &budget.tangential;
    let eps = ParamJet::real(cfg.eps, dim);
    let lambda: Vec<ParamJet> = tangential.iter().map(|&n| eigen(n, sigma, nu, tangential)).collect();

    // S = S_T + S_N
    let mut tangential_terms = Vec::new();
    for (j, &site) in tangential.iter().enumerate() {
        let weight = lambda[j].recip().scale_re((site * site) as f64);
        for (kk, factor) in [(2i16, 1.0), (0, 2.0), (-2, 1.0)] {
            let k = [(nu + j, kk)];
            tangential_terms.push((key_at(dim, b, &k, &[]), weight.scale_re(factor * center)));
            tangential_terms.push((key_at(dim, b, &k, &[(j, 1)]), weight.scale_re(factor)));
        }
    }
    let s_t = TFSeries::from_terms(budget, tangential_terms)?;
    let zero_k = vec![0i16; dim];
    let zero_l = vec![0u8; b];
    let mut normal_terms = Vec::new();
    for n in budget.normal_sites() {
        let m = n.unsigned_abs() as f64;
        normal_terms.push((MonoKey::new(&zero_k, &zero_l, &[(n, 2)], &[]), ParamJet::real(m, dim)));
        normal_terms.push((MonoKey::new(&zero_k, &zero_l, &[(n, 1)], &[(n, 1)]), ParamJet::real(2.0 * m, dim)));
        normal_terms.push((MonoKey::new(&zero_k, &zero_l, &[], &[(n, 2)]), ParamJet::real(m, dim)));
    }
    let s_n = TFSeries::from_terms(budget, normal_terms)?;

    let eighth = eps.scale_re(1.0 / 8.0);
    let sixteenth = eps.scale_re(1.0 / 16.0);
    let p1 = add(&mul(&s_t, &s_n)?.scale(&eighth), &mul(&s_n, &s_n)?.scale(&sixteenth))?;

    // Tangential forcing with √(I* + Î) expanded to the degree cap.
    let top = budget.d_cap / 2;
    let root = center.sqrt();
    let remainder = root * half_binomial(top + 1).abs() * ratio.powi(top as i32 + 1) / (1.0 - ratio);
    let mut forcing_terms = Vec::new();
    let mut forcing_tail = 0.0;
    for (j, &site) in tangential.iter().enumerate() {
        let scale = lambda[j].scale_re(2.0).sqrt().recip();
        for (kbar, g) in forcing.coefficients(site) {
            let coef = (&eps * &scale).scale(*g);
            for sign in [1i16, -1] {
                let mut k: Vec<(usize, i16)> = kbar.iter().enumerate().map(|(i, &x)| (i, x)).collect();
                k.push((nu + j, sign));
                for p in 0..=top {
                    let c = half_binomial(p) * center.powf(0.5 - p as f64);
                    forcing_terms.push((key_at(dim, b, &k, &[(j, p as u8)]), coef.scale_re(c)));
                }
                let knorm = key_at(dim, b, &k, &[]).k_norm(nu) as f64;
                forcing_tail += coef.magnitude() * remainder * (knorm * budget.tail_ref.r).exp();
            }
        }
    }
    let tail = Tail::new(forcing_tail, 2 * (top + 1));
    let p3 = add(
        &mul(&s_t, &s_t)?.scale(&sixteenth),
        &TFSeries::from_terms(budget, forcing_terms)?.with_tail(tail),
    )?;

    let mut linear = Vec::new();
    for n in budget.normal_sites() {
        let scale = eps.scale_re(1.0 / (2.0 * n.unsigned_abs() as f64).sqrt());
        for (kbar, g) in forcing.coefficients(n as i32) {
            let mut k = kbar.clone();
            k.resize(dim, 0);
            let c = scale.scale(*g);
            linear.push((MonoKey::new(&k, &zero_l, &[(n, 1)], &[]), c.clone()));
            linear.push((MonoKey::new(&k, &zero_l, &[], &[(n, 1)]), c));
        }
    }
    let p2 = TFSeries::from_terms(budget, linear)?;

    let mut omega: Vec<ParamJet> = (0..nu).map(|i| ParamJet::variable(sigma[i], i, dim)).collect();
    omega.extend(lambda);
    Ok(Hamiltonian {
        normal: NormalForm::new(budget, omega, 1),
        p1,
        p2,
        p3,
        action_center: center,
    })
}
