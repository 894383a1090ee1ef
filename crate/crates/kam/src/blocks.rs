//! Eigen-decomposition of the 2×2 Hermitian blocks.

use num_complex::Complex64;

use crate::jet::ParamJet;
use crate::normal_form::Block;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `A = U diag(d) Uᴴ` with `U` unitary; column `i` of `unitary` is the
/// eigenvector of `eigen[i]`, and `eigen[0] ≥ eigen[1]`.
#[derive(Clone, Debug)]
pub struct Diagonalized {
    pub unitary: [[Complex64; 2]; 2],
    pub eigen: [ParamJet; 2],
}

impl Diagonalized {
    pub fn identity(dim: usize) -> Self {
        Self {
            unitary: [[ONE, ZERO], [ZERO, ONE]],
            eigen: [ParamJet::zero(dim), ParamJet::zero(dim)],
        }
    }

    pub fn column(&self, i: usize) -> [Complex64; 2] {
        [self.unitary[0][i], self.unitary[1][i]]
    }
}

fn normalize(v: [Complex64; 2]) -> [Complex64; 2] {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / norm, v[1] / norm]
}

/// `uᴴ M u` for one gradient component of the block.
fn rayleigh(u: [Complex64; 2], m: [[Complex64; 2]; 2]) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            acc += u[i].conj() * m[i][j] * u[j];
        }
    }
    acc
}

/// Diagonalize a Hermitian block. Eigenvalue jets follow from first-order
/// perturbation, `d' = uᴴ A' u`; a degenerate block keeps the identity.
pub fn block_diagonalize(a: &Block) -> Diagonalized {
    let dim = a[0][0].dim();
    let (p, q) = (a[0][0].value.re, a[1][1].value.re);
    let c = a[0][1].value;
    let mean = 0.5 * (p + q);
    let half = 0.5 * (p - q);
    let radius = half.hypot(c.norm());
    let scale = p.abs().max(q.abs()).max(c.norm());

    let unitary = if radius <= 1e-14 * scale.max(f64::MIN_POSITIVE) || c.norm() == 0.0 {
        if c.norm() == 0.0 && q > p {
            [[ZERO, ONE], [ONE, ZERO]]
        } else {
            [[ONE, ZERO], [ZERO, ONE]]
        }
    } else {
        let top = mean + radius;
        let first = if half >= 0.0 {
            normalize([Complex64::new(top - q, 0.0), c.conj()])
        } else {
            normalize([c, Complex64::new(top - p, 0.0)])
        };
        let second = [-first[1].conj(), first[0].conj()];
        [[first[0], second[0]], [first[1], second[1]]]
    };

    let columns = [[unitary[0][0], unitary[1][0]], [unitary[0][1], unitary[1][1]]];
    let eigen = std::array::from_fn(|i| {
        let u = columns[i];
        let value = rayleigh(u, std::array::from_fn(|r| std::array::from_fn(|s| a[r][s].value)));
        let grad: Vec<Complex64> = (0..dim)
            .map(|g| rayleigh(u, std::array::from_fn(|r| std::array::from_fn(|s| a[r][s].grad[g]))))
            .collect();
        ParamJet::new(Complex64::new(value.re, 0.0), &grad)
    });
    Diagonalized { unitary, eigen }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_block(entries: [[f64; 2]; 2]) -> Block {
        std::array::from_fn(|i| std::array::from_fn(|j| ParamJet::real(entries[i][j], 3)))
    }

    #[test]
    fn zero_block_is_identity() {
        let d = block_diagonalize(&real_block([[0.0, 0.0], [0.0, 0.0]]));
        assert_eq!(d.unitary, [[ONE, ZERO], [ZERO, ONE]]);
        assert_eq!(d.eigen[0].value, ZERO);
    }

    #[test]
    fn diagonal_block() {
        let d = block_diagonalize(&real_block([[0.3, 0.0], [0.0, -0.2]]));
        assert_eq!(d.unitary, [[ONE, ZERO], [ZERO, ONE]]);
        assert!((d.eigen[0].value.re - 0.3).abs() < 1e-15);
        assert!((d.eigen[1].value.re + 0.2).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_block_rotates_by_quarter_pi() {
        let c = 0.7;
        let d = block_diagonalize(&real_block([[0.0, c], [c, 0.0]]));
        assert!((d.eigen[0].value.re - c).abs() < 1e-15);
        assert!((d.eigen[1].value.re + c).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.unitary[0][0].re - h).abs() < 1e-15);
        assert!((d.unitary[1][0].re - h).abs() < 1e-15);
    }

    #[test]
    fn complex_block_reconstructs() {
        let mut b = real_block([[0.4, 0.0], [0.0, 0.1]]);
        b[0][1] = ParamJet::new(Complex64::new(0.05, -0.2), &[Complex64::new(0.0, 1.0), ZERO, ZERO]);
        b[1][0] = b[0][1].conj();
        b[0][0].grad[1] = ONE;
        let d = block_diagonalize(&b);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += d.unitary[i][k] * d.eigen[k].value * d.unitary[j][k].conj();
                }
                assert!((acc - b[i][j].value).norm() < 1e-14);
            }
        }
        // Finite-difference check of the eigenvalue gradient along σ₁.
        let h = 1e-7;
        let mut shifted = b.clone();
        shifted[0][0].value += h;
        let e = block_diagonalize(&shifted);
        let fd = (e.eigen[0].value.re - d.eigen[0].value.re) / h;
        assert!((fd - d.eigen[0].grad[1].re).abs() < 1e-6);
    }
}
