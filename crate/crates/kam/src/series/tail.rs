use super::{Budget, Domain};

/// Majorant of discarded terms, measured on the budget's reference domain,
/// together with the lowest total degree among them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tail {
    pub value: f64,
    pub degree: u32,
}

impl Tail {
    pub const ZERO: Tail = Tail {
        value: 0.0,
        degree: u32::MAX,
    };

    pub fn new(value: f64, degree: u32) -> Self {
        if value == 0.0 {
            Self::ZERO
        } else {
            Self { value, degree }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }

    pub fn plus(self, other: Tail) -> Tail {
        Tail {
            value: self.value + other.value,
            degree: self.degree.min(other.degree),
        }
    }

    pub fn scaled(self, factor: f64) -> Tail {
        Tail::new(self.value * factor, self.degree)
    }

    /// Lower the degree bound by `by`, as a derivative does.
    pub fn lowered(self, by: u32) -> Tail {
        Tail {
            value: self.value,
            degree: self.degree.saturating_sub(by),
        }
    }

    /// Rescale to `dom`. Every discarded term has degree at least
    /// `self.degree` and at most `2 d_cap`, so its weight scales by
    /// `(s/s_ref)^degree` for `s ≤ s_ref`.
    pub fn at(&self, dom: &Domain, budget: &Budget) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let reference = budget.tail_ref;
        let ratio = dom.s / reference.s;
        let top = 2 * budget.d_cap;
        let power = if ratio <= 1.0 {
            self.degree.min(top)
        } else {
            top
        };
        let mut factor = ratio.powi(power as i32);
        if dom.r > reference.r {
            factor *= (budget.k_cap as f64 * (dom.r - reference.r)).exp();
        }
        if dom.rho < reference.rho || dom.a > reference.a {
            let n = budget.n_max as f64;
            let site = n.powf(dom.a - reference.a) * (n * (reference.rho - dom.rho)).exp();
            factor *= site.max(1.0).powi(top as i32);
        }
        self.value * factor
    }
}
