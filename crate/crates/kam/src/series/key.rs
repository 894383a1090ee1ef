use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

/// Sparse exponent map over normal sites, sorted by site, zero-free.
pub type Exponents = SmallVec<[(i16, u8); 4]>;
pub type FourierIndex = SmallVec<[i16; 4]>;
pub type ActionPowers = SmallVec<[u8; 4]>;

/// Index of one monomial `e^{i<k,θ>} I^l w^α w̄^β`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonoKey {
    pub k: FourierIndex,
    pub l: ActionPowers,
    pub alpha: Exponents,
    pub beta: Exponents,
}

impl fmt::Debug for MonoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={:?} l={:?} a={:?} b={:?}",
            self.k.as_slice(),
            self.l.as_slice(),
            self.alpha.as_slice(),
            self.beta.as_slice()
        )
    }
}

impl MonoKey {
    /// The constant monomial for `dim_k` angles and `dim_l` actions.
    pub fn one(dim_k: usize, dim_l: usize) -> Self {
        Self {
            k: smallvec::smallvec![0; dim_k],
            l: smallvec::smallvec![0; dim_l],
            alpha: Exponents::new(),
            beta: Exponents::new(),
        }
    }

    pub fn new(k: &[i16], l: &[u8], alpha: &[(i16, u8)], beta: &[(i16, u8)]) -> Self {
        Self {
            k: k.iter().copied().collect(),
            l: l.iter().copied().collect(),
            alpha: canonical(alpha),
            beta: canonical(beta),
        }
    }

    pub fn fourier(k: &[i16], dim_l: usize) -> Self {
        Self {
            k: k.iter().copied().collect(),
            l: smallvec::smallvec![0; dim_l],
            alpha: Exponents::new(),
            beta: Exponents::new(),
        }
    }

    pub fn with_k(mut self, k: &[i16]) -> Self {
        self.k = k.iter().copied().collect();
        self
    }

    pub fn with_l(mut self, l: &[u8]) -> Self {
        self.l = l.iter().copied().collect();
        self
    }

    pub fn with_alpha(mut self, alpha: &[(i16, u8)]) -> Self {
        self.alpha = canonical(alpha);
        self
    }

    pub fn with_beta(mut self, beta: &[(i16, u8)]) -> Self {
        self.beta = canonical(beta);
        self
    }

    pub fn action_degree(&self) -> u32 {
        self.l.iter().map(|&x| x as u32).sum()
    }

    pub fn alpha_degree(&self) -> u32 {
        self.alpha.iter().map(|&(_, e)| e as u32).sum()
    }

    pub fn beta_degree(&self) -> u32 {
        self.beta.iter().map(|&(_, e)| e as u32).sum()
    }

    /// `|α| + |β|`.
    pub fn normal_degree(&self) -> u32 {
        self.alpha_degree() + self.beta_degree()
    }

    /// `2|l| + |α| + |β|`, the scaling degree under `I ~ s², w ~ s`.
    pub fn degree(&self) -> u32 {
        2 * self.action_degree() + self.normal_degree()
    }

    /// `max(|k₁|₁, |k₂|₁)` with `k₁` the first `nu` entries.
    pub fn k_norm(&self, nu: usize) -> u32 {
        let outer: u32 = self.k[..nu].iter().map(|x| x.unsigned_abs() as u32).sum();
        let inner: u32 = self.k[nu..].iter().map(|x| x.unsigned_abs() as u32).sum();
        outer.max(inner)
    }

    pub fn is_fourier_only(&self) -> bool {
        self.alpha.is_empty() && self.beta.is_empty() && self.l.iter().all(|&x| x == 0)
    }

    pub fn alpha_of(&self, n: i16) -> u8 {
        exponent(&self.alpha, n)
    }

    pub fn beta_of(&self, n: i16) -> u8 {
        exponent(&self.beta, n)
    }

    /// `α_n + β_n`.
    pub fn order_at(&self, n: i16) -> u8 {
        self.alpha_of(n) + self.beta_of(n)
    }

    /// Sites carrying a nonzero exponent in `α` or `β`, sorted and unique.
    pub fn support(&self) -> SmallVec<[i16; 6]> {
        let mut out: SmallVec<[i16; 6]> = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.alpha.len() || j < self.beta.len() {
            let next = match (self.alpha.get(i), self.beta.get(j)) {
                (Some(a), Some(b)) => match a.0.cmp(&b.0) {
                    Ordering::Less => {
                        i += 1;
                        a.0
                    }
                    Ordering::Greater => {
                        j += 1;
                        b.0
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        a.0
                    }
                },
                (Some(a), None) => {
                    i += 1;
                    a.0
                }
                (None, Some(b)) => {
                    j += 1;
                    b.0
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    /// The key of the complex-conjugate monomial: `(−k, l, β, α)`.
    pub fn conj(&self) -> Self {
        Self {
            k: self.k.iter().map(|x| -x).collect(),
            l: self.l.clone(),
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    /// Key of the product of two monomials.
    pub fn product(&self, other: &Self) -> Self {
        Self {
            k: self.k.iter().zip(&other.k).map(|(a, b)| a + b).collect(),
            l: self.l.iter().zip(&other.l).map(|(a, b)| a + b).collect(),
            alpha: merge_add(&self.alpha, &other.alpha),
            beta: merge_add(&self.beta, &other.beta),
        }
    }

    /// Same monomial without its angle dependence.
    pub fn without_k(&self) -> Self {
        let mut out = self.clone();
        out.k.iter_mut().for_each(|x| *x = 0);
        out
    }

    pub fn is_k_zero(&self) -> bool {
        self.k.iter().all(|&x| x == 0)
    }
}

fn exponent(exps: &Exponents, n: i16) -> u8 {
    match exps.binary_search_by_key(&n, |&(site, _)| site) {
        Ok(i) => exps[i].1,
        Err(_) => 0,
    }
}

/// Sort by site, merge duplicates and drop zero exponents.
pub fn canonical(raw: &[(i16, u8)]) -> Exponents {
    let mut v: Exponents = raw.iter().copied().filter(|&(_, e)| e > 0).collect();
    v.sort_by_key(|&(n, _)| n);
    let mut out = Exponents::new();
    for (n, e) in v {
        match out.last_mut() {
            Some(last) if last.0 == n => last.1 += e,
            _ => out.push((n, e)),
        }
    }
    out
}

pub fn merge_add(a: &Exponents, b: &Exponents) -> Exponents {
    let mut out = Exponents::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Lower the exponent at `n` by one; the exponent must be positive.
pub fn decrement(exps: &mut Exponents, n: i16) {
    let i = exps
        .binary_search_by_key(&n, |&(site, _)| site)
        .expect("decrement of an absent exponent");
    if exps[i].1 == 1 {
        exps.remove(i);
    } else {
        exps[i].1 -= 1;
    }
}

pub fn increment(exps: &mut Exponents, n: i16) {
    match exps.binary_search_by_key(&n, |&(site, _)| site) {
        Ok(i) => exps[i].1 += 1,
        Err(i) => exps.insert(i, (n, 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_drops_zeros_and_merges() {
        let e = canonical(&[(3, 1), (-2, 0), (3, 2), (-5, 1)]);
        assert_eq!(e.as_slice(), &[(-5, 1), (3, 3)]);
    }

    #[test]
    fn equal_monomials_have_equal_keys() {
        let a = MonoKey::new(&[1, 0, 0], &[0, 0], &[(2, 1), (3, 1)], &[]);
        let b = MonoKey::new(&[1, 0, 0], &[0, 0], &[(3, 1), (2, 1), (4, 0)], &[]);
        assert_eq!(a, b);
    }

    #[test]
    fn k_norm_uses_block_maximum() {
        let key = MonoKey::fourier(&[2, -1, 1], 2);
        assert_eq!(key.k_norm(1), 2);
        let key = MonoKey::fourier(&[1, -3, 1], 2);
        assert_eq!(key.k_norm(1), 4);
    }

    #[test]
    fn support_merges_both_sides() {
        let key = MonoKey::new(&[0], &[0], &[(2, 1), (5, 1)], &[(-3, 2), (5, 1)]);
        assert_eq!(key.support().as_slice(), &[-3, 2, 5]);
        assert_eq!(key.degree(), 5);
    }
}
