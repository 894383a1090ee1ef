//! Forcing coefficients `g_n(θ̄)` in the real eigenbasis.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::fit::{decay_fit, DecayFit};

/// Per site, the θ̄-Fourier coefficients `(k̄, ĝ)` of `g_n(θ̄) = Σ ĝ e^{i<k̄,θ̄>}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForcingTable {
    pub nu: usize,
    pub sites: BTreeMap<i32, Vec<(Vec<i16>, Complex64)>>,
}

impl ForcingTable {
    pub fn new(nu: usize) -> Self {
        Self {
            nu,
            sites: BTreeMap::new(),
        }
    }

    /// `g_n(θ̄) = Re(c_n e^{iθ̄₁})` for each listed `(n, c_n)`.
    pub fn single_harmonic(nu: usize, entries: impl IntoIterator<Item = (i32, Complex64)>) -> Self {
        let mut table = Self::new(nu);
        let mut plus = vec![0i16; nu];
        plus[0] = 1;
        let minus: Vec<i16> = plus.iter().map(|x| -x).collect();
        for (n, c) in entries {
            if c.norm() > 0.0 {
                table
                    .sites
                    .insert(n, vec![(minus.clone(), c.conj() * 0.5), (plus.clone(), c * 0.5)]);
            }
        }
        table
    }

    /// `g_n(θ̄) = amplitude · e^{−|n|ρ̄} cos θ̄₁` for `|n| ≤ n_max`.
    pub fn sum_exp(nu: usize, n_max: i32, rho_bar: f64, amplitude: f64) -> Self {
        Self::single_harmonic(
            nu,
            (-n_max..=n_max).map(|n| (n, Complex64::new(amplitude * (-(n.abs() as f64) * rho_bar).exp(), 0.0))),
        )
    }

    pub fn coefficients(&self, n: i32) -> &[(Vec<i16>, Complex64)] {
        self.sites.get(&n).map_or(&[], |v| v.as_slice())
    }

    /// `Σ_k̄ |ĝ_{n,k̄}|`.
    pub fn site_norm(&self, n: i32) -> f64 {
        self.coefficients(n).iter().map(|(_, c)| c.norm()).sum()
    }

    /// Fit `‖g_n‖ ≈ C |n|^p e^{−rate|n|}` over sites `n ≠ 0`.
    pub fn decay(&self) -> Result<DecayFit> {
        let mut by_mode: BTreeMap<u32, f64> = BTreeMap::new();
        for &n in self.sites.keys() {
            if n != 0 {
                let e = by_mode.entry(n.unsigned_abs()).or_default();
                *e = e.max(self.site_norm(n));
            }
        }
        let samples: Vec<(f64, f64)> = by_mode.into_iter().map(|(n, c)| (n as f64, c)).collect();
        decay_fit(&samples, 0.0)
    }
}

/// Real-basis coefficients of a function from its complex Fourier
/// coefficients `ĝ_m`, `m = −M..M` stored at `m.rem_euclid(len)`.
fn real_basis(spectrum: &[Complex64], n: i32) -> Complex64 {
    let len = spectrum.len() as i32;
    let at = |m: i32| spectrum[m.rem_euclid(len) as usize];
    let root_pi = PI.sqrt();
    match n.signum() {
        0 => (2.0 * PI).sqrt() * at(0),
        1 => root_pi * (at(-n) - at(n)) / Complex64::new(0.0, 1.0),
        _ => root_pi * (at(-n) + at(n)),
    }
}

/// Sample `g(θ̄, x)` on a grid and return `g_n(θ̄)` for `|n| ≤ n_max` by FFT
/// in `x` and a discrete transform in `θ̄`. Coefficients below
/// `1e−13 · max` are dropped as roundoff.
pub fn forcing_coefficients(
    g: impl Fn(&[f64], f64) -> f64,
    nu: usize,
    n_max: i32,
    x_points: usize,
    theta_points: usize,
) -> Result<ForcingTable> {
    if x_points < 2 * n_max as usize + 2 {
        return Err(KamError::InvalidModel(format!(
            "{x_points} spatial samples cannot resolve {n_max} modes"
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(x_points);
    let grid_size = theta_points.pow(nu as u32);
    let angle = |idx: usize| -> Vec<f64> {
        let mut rest = idx;
        (0..nu)
            .map(|_| {
                let i = rest % theta_points;
                rest /= theta_points;
                2.0 * PI * i as f64 / theta_points as f64
            })
            .collect()
    };

    // samples[grid point][site index]
    let sites: Vec<i32> = (-n_max..=n_max).collect();
    let mut values = Vec::with_capacity(grid_size);
    for idx in 0..grid_size {
        let theta = angle(idx);
        let mut buf: Vec<Complex64> = (0..x_points)
            .map(|j| Complex64::new(g(&theta, 2.0 * PI * j as f64 / x_points as f64), 0.0))
            .collect();
        fft.process(&mut buf);
        let scale = 1.0 / x_points as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        values.push(sites.iter().map(|&n| real_basis(&buf, n)).collect::<Vec<_>>());
    }

    let half = (theta_points as i32 - 1) / 2;
    let mut modes: Vec<Vec<i16>> = vec![Vec::new()];
    for _ in 0..nu {
        modes = modes
            .into_iter()
            .flat_map(|m| {
                (-half..=half).map(move |k| {
                    let mut next = m.clone();
                    next.push(k as i16);
                    next
                })
            })
            .collect();
    }

    let mut raw: BTreeMap<i32, Vec<(Vec<i16>, Complex64)>> = BTreeMap::new();
    let mut largest: f64 = 0.0;
    for (s, &n) in sites.iter().enumerate() {
        for k in &modes {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, row) in values.iter().enumerate() {
                let phase: f64 = k.iter().zip(angle(idx)).map(|(&k, t)| k as f64 * t).sum();
                acc += row[s] * Complex64::from_polar(1.0, -phase);
            }
            acc /= grid_size as f64;
            largest = largest.max(acc.norm());
            raw.entry(n).or_default().push((k.clone(), acc));
        }
    }
    let floor = 1e-13 * largest;
    let mut table = ForcingTable::new(nu);
    for (n, list) in raw {
        let kept: Vec<_> = list.into_iter().filter(|(_, c)| c.norm() > floor).collect();
        if !kept.is_empty() {
            table.sites.insert(n, kept);
        }
    }
    Ok(table)
}

/// The closed form of the `sum-exp` preset,
/// `amplitude · cos θ̄₁ · Σ_n e^{−|n|ρ̄} φ_n(x)`.
pub fn sum_exp_closed_form(rho_bar: f64, amplitude: f64) -> impl Fn(&[f64], f64) -> f64 {
    move |theta: &[f64], x: f64| {
        let q = Complex64::from_polar((-rho_bar).exp(), x);
        let series = q / (Complex64::new(1.0, 0.0) - q);
        let spatial = 1.0 / (2.0 * PI).sqrt() + (series.re + series.im) / PI.sqrt();
        amplitude * theta[0].cos() * spatial
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_sum_exp_preset() {
        let rho = 2.0;
        let table = forcing_coefficients(sum_exp_closed_form(rho, 1.0), 1, 8, 64, 4).unwrap();
        let exact = ForcingTable::sum_exp(1, 8, rho, 1.0);
        for n in -8..=8 {
            let got = table.site_norm(n);
            let want = exact.site_norm(n);
            assert!((got - want).abs() <= 1e-12, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn zero_forcing_is_empty() {
        let table = forcing_coefficients(|_, _| 0.0, 1, 4, 32, 4).unwrap();
        assert!(table.sites.is_empty());
    }

    #[test]
    fn single_cosine() {
        let table = forcing_coefficients(|_, x| x.cos(), 1, 4, 32, 4).unwrap();
        let sites: Vec<i32> = table.sites.keys().copied().collect();
        assert_eq!(sites, vec![-1]);
        assert!((table.site_norm(-1) - PI.sqrt()).abs() < 1e-12);
    }
}
