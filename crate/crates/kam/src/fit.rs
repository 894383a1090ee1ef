//! Least-squares fits used by the structure checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

/// `|c_n| ≈ C n^p e^{−rate·n}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub log_constant: f64,
    pub power: f64,
    pub rate: f64,
    /// Largest `ln|c_n| − ln C − p ln n + rate·n` over the data, so that
    /// `|c_n| ≤ C e^{max_excess} n^p e^{−rate·n}` holds exactly.
    pub max_excess: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn constant(&self) -> f64 {
        (self.log_constant + self.max_excess).exp()
    }
}

/// Fit `ln|c| = a + p ln n − rate·n` over `(n, |c|)` pairs with `n ≥ 1` and
/// `|c| > floor`.
pub fn decay_fit(samples: &[(f64, f64)], floor: f64) -> Result<DecayFit> {
    let data: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(n, c)| n >= 1.0 && c > floor && c.is_finite())
        .map(|&(n, c)| (n, c.ln()))
        .collect();
    let distinct = {
        let mut ns: Vec<u64> = data.iter().map(|(n, _)| n.to_bits()).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.len()
    };
    if distinct < 4 {
        return Err(KamError::DecayFit(format!(
            "{distinct} distinct modes above the noise floor, need at least 4"
        )));
    }
    let design = DMatrix::from_fn(data.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => data[i].0.ln(),
        _ => -data[i].0,
    });
    let rhs = DVector::from_iterator(data.len(), data.iter().map(|(_, y)| *y));
    let solution = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| KamError::DecayFit(e.to_string()))?;
    let residual = rhs - &design * &solution;
    Ok(DecayFit {
        log_constant: solution[0],
        power: solution[1],
        rate: solution[2],
        max_excess: residual.iter().copied().fold(0.0, f64::max),
        points: data.len(),
    })
}

/// Slope of the least-squares line through `(x, y)`.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_profile() {
        let samples: Vec<(f64, f64)> = (1..=20)
            .map(|n| {
                let n = n as f64;
                (n, 0.3 * n.powf(-0.5) * (-2.0 * n).exp())
            })
            .collect();
        let fit = decay_fit(&samples, 0.0).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-9);
        assert!((fit.power + 0.5).abs() < 1e-9);
        assert!((fit.log_constant - 0.3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(decay_fit(&[(1.0, 1.0), (2.0, 0.5)], 0.0).is_err());
    }

    #[test]
    fn line_slope() {
        let pts = [(0.0, 1.0), (1.0, 2.5), (2.0, 4.0)];
        assert!((slope(&pts).unwrap() - 1.5).abs() < 1e-12);
    }
}
