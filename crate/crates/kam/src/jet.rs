//! Complex scalars carrying their first derivative with respect to the
//! parameter vector `σ`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub type Grad = SmallVec<[Complex64; 4]>;

/// A value together with its gradient in parameter space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamJet {
    pub value: Complex64,
    pub grad: Grad,
}

impl fmt::Debug for ParamJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if self.grad.iter().any(|g| *g != Complex64::new(0.0, 0.0)) {
            write!(f, " d{:?}", self.grad.as_slice())?;
        }
        Ok(())
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl ParamJet {
    pub fn zero(dim: usize) -> Self {
        Self::constant(ZERO, dim)
    }

    pub fn constant(value: Complex64, dim: usize) -> Self {
        Self {
            value,
            grad: smallvec::smallvec![ZERO; dim],
        }
    }

    pub fn real(value: f64, dim: usize) -> Self {
        Self::constant(Complex64::new(value, 0.0), dim)
    }

    /// The coordinate function `σ_i` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut jet = Self::real(value, dim);
        jet.grad[index] = Complex64::new(1.0, 0.0);
        jet
    }

    pub fn new(value: Complex64, grad: &[Complex64]) -> Self {
        Self {
            value,
            grad: grad.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn is_zero(&self) -> bool {
        self.value == ZERO && self.grad.iter().all(|g| *g == ZERO)
    }

    /// `|value| + Σ|∂_i value|`, the C¹ magnitude used in every majorant.
    pub fn magnitude(&self) -> f64 {
        self.value.norm() + self.grad.iter().map(|g| g.norm()).sum::<f64>()
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.conj(),
            grad: self.grad.iter().map(|g| g.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            value: self.value * c,
            grad: self.grad.iter().map(|g| g * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn recip(&self) -> Self {
        let inv = self.value.inv();
        let d = -(inv * inv);
        Self {
            value: inv,
            grad: self.grad.iter().map(|g| g * d).collect(),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self * &other.recip()
    }

    pub fn sqrt(&self) -> Self {
        let root = self.value.sqrt();
        let d = (2.0 * root).inv();
        Self {
            value: root,
            grad: self.grad.iter().map(|g| g * d).collect(),
        }
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        Self {
            value: e,
            grad: self.grad.iter().map(|g| g * e).collect(),
        }
    }

    /// Apply a scalar function given its value and derivative at `self.value`.
    pub fn map(&self, value: Complex64, derivative: Complex64) -> Self {
        Self {
            value,
            grad: self.grad.iter().map(|g| g * derivative).collect(),
        }
    }

    /// `self += a * b`, the inner step of every convolution.
    pub fn add_product(&mut self, a: &Self, b: &Self) {
        debug_assert_eq!(a.dim(), b.dim());
        self.value += a.value * b.value;
        for ((g, da), db) in self.grad.iter_mut().zip(&a.grad).zip(&b.grad) {
            *g += da * b.value + a.value * db;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: Complex64) {
        self.value += other.value * c;
        for (g, d) in self.grad.iter_mut().zip(&other.grad) {
            *g += d * c;
        }
    }
}

impl Add for &ParamJet {
    type Output = ParamJet;
    fn add(self, rhs: &ParamJet) -> ParamJet {
        debug_assert_eq!(self.dim(), rhs.dim());
        ParamJet {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ParamJet {
    type Output = ParamJet;
    fn sub(self, rhs: &ParamJet) -> ParamJet {
        debug_assert_eq!(self.dim(), rhs.dim());
        ParamJet {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ParamJet {
    type Output = ParamJet;
    fn mul(self, rhs: &ParamJet) -> ParamJet {
        debug_assert_eq!(self.dim(), rhs.dim());
        ParamJet {
            value: self.value * rhs.value,
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(da, db)| da * rhs.value + self.value * db)
                .collect(),
        }
    }
}

impl Neg for &ParamJet {
    type Output = ParamJet;
    fn neg(self) -> ParamJet {
        ParamJet {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
        }
    }
}

impl AddAssign<&ParamJet> for ParamJet {
    fn add_assign(&mut self, rhs: &ParamJet) {
        self.value += rhs.value;
        for (g, d) in self.grad.iter_mut().zip(&rhs.grad) {
            *g += d;
        }
    }
}

impl SubAssign<&ParamJet> for ParamJet {
    fn sub_assign(&mut self, rhs: &ParamJet) {
        self.value -= rhs.value;
        for (g, d) in self.grad.iter_mut().zip(&rhs.grad) {
            *g -= d;
        }
    }
}
