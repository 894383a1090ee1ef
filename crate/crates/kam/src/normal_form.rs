//! The integrable part
//! `N = <ω, I> + Σ_n Ω_n(θ) w_n w̄_n + Σ_{|n| ≤ cut} (block couplings)`
//! with `Ω_n(θ) = |n|(1 + c) + |n| f(θ)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::jet::ParamJet;
use crate::series::{generate, increment, decrement, Budget, MonoKey, Sink, TFSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 block over the sites `(m, −m)`; row and column 0 belong to `+m`.
pub type Block = [[ParamJet; 2]; 2];

/// Position of site `n` inside its block.
pub fn block_slot(n: i16) -> usize {
    usize::from(n < 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    /// `(ω̄, ω̃)`, one jet per angle.
    pub omega: Vec<ParamJet>,
    /// Uniform shift `c` of the normal frequencies.
    pub shift: ParamJet,
    /// Zero-mean angle modulation `f(θ)`; a Fourier-only series.
    pub modulation: TFSeries,
    pub blocks: BTreeMap<u16, Block>,
    pub block_cut: u32,
    /// Constant term, carried only for exact bookkeeping.
    pub energy: ParamJet,
}

impl NormalForm {
    pub fn new(budget: &Arc<Budget>, omega: Vec<ParamJet>, block_cut: u32) -> Self {
        let dim = budget.dim();
        Self {
            omega,
            shift: ParamJet::zero(dim),
            modulation: TFSeries::zero(budget),
            blocks: BTreeMap::new(),
            block_cut,
            energy: ParamJet::zero(dim),
        }
    }

    /// The zero update, with `ω` entries all zero.
    pub fn zero(budget: &Arc<Budget>, block_cut: u32) -> Self {
        let dim = budget.dim();
        Self::new(budget, vec![ParamJet::zero(dim); dim], block_cut)
    }

    pub fn budget(&self) -> &Arc<Budget> {
        self.modulation.budget()
    }

    pub fn omega_values(&self) -> Vec<f64> {
        self.omega.iter().map(|j| j.value.re).collect()
    }

    /// `|n|(1 + c)`, the θ-independent part outside the blocks.
    pub fn mean_frequency(&self, n: i16) -> ParamJet {
        let dim = self.shift.dim();
        (&ParamJet::real(1.0, dim) + &self.shift).scale_re(n.unsigned_abs() as f64)
    }

    pub fn block_entry(&self, p: i16, q: i16) -> Option<&ParamJet> {
        if p.unsigned_abs() != q.unsigned_abs() {
            return None;
        }
        self.blocks
            .get(&p.unsigned_abs())
            .map(|b| &b[block_slot(p)][block_slot(q)])
    }

    /// Normal sites sharing a block with `n`, `n` included.
    pub fn block_partners(&self, n: i16) -> Vec<i16> {
        let budget = self.budget();
        let m = n.unsigned_abs();
        if !self.blocks.contains_key(&m) {
            return vec![n];
        }
        [m as i16, -(m as i16)]
            .into_iter()
            .filter(|&p| !budget.is_tangential(p as i32))
            .collect()
    }

    /// Largest Hermiticity defect over the blocks.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in self.blocks.values() {
            for (i, row) in b.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    let y = &b[j][i];
                    let diff = (x.value - y.value.conj()).norm()
                        + x.grad
                            .iter()
                            .zip(&y.grad)
                            .map(|(a, c)| (a - c.conj()).norm())
                            .sum::<f64>();
                    worst = worst.max(diff);
                }
            }
        }
        worst
    }

    /// `N` as a series over the tangential actions and normal modes. The
    /// `ω̄` entries have no conjugate action and are left out.
    pub fn to_series(&self) -> Result<TFSeries> {
        self.series_with_unit(1.0)
    }

    /// An update as a series: the normal frequencies are `|n|(c + f)`.
    pub fn update_series(&self) -> Result<TFSeries> {
        self.series_with_unit(0.0)
    }

    fn series_with_unit(&self, unit: f64) -> Result<TFSeries> {
        let budget = self.budget().clone();
        let (nu, b, dim) = (budget.nu, budget.b, budget.dim());
        let zero_k = vec![0i16; dim];
        let mut terms: Vec<(MonoKey, ParamJet)> = vec![(budget.zero_key(), self.energy.clone())];
        for j in 0..b {
            let mut l = vec![0u8; b];
            l[j] = 1;
            terms.push((MonoKey::new(&zero_k, &l, &[], &[]), self.omega[nu + j].clone()));
        }
        let zero_l = vec![0u8; b];
        for n in budget.normal_sites() {
            let weight = n.unsigned_abs() as f64;
            let pair = MonoKey::new(&zero_k, &zero_l, &[(n, 1)], &[(n, 1)]);
            let dim = self.shift.dim();
            let mean = (&ParamJet::real(unit, dim) + &self.shift).scale_re(weight);
            terms.push((pair.clone(), mean));
            for (fk, fv) in self.modulation.terms() {
                terms.push((pair.clone().with_k(&fk.k), fv.scale_re(weight)));
            }
        }
        for (&m, block) in &self.blocks {
            let sites = self.block_partners(m as i16);
            for &p in &sites {
                for &q in &sites {
                    let v = &block[block_slot(p)][block_slot(q)];
                    terms.push((MonoKey::new(&zero_k, &zero_l, &[(p, 1)], &[(q, 1)]), v.clone()));
                }
            }
        }
        TFSeries::from_terms(&budget, terms)
    }

    /// `{N, g}` computed term by term, including the `θ̄` transport
    /// `<ω̄, ∂_θ̄ g>`.
    pub fn bracket(&self, g: &TFSeries) -> Result<TFSeries> {
        let budget = g.budget().clone();
        let nu = budget.nu;
        let normal = budget.normal_sites();
        let one = ParamJet::real(1.0, budget.dim());
        let frequency = &one + &self.shift;
        let modulation = self.modulation.terms();
        let (terms, dropped) = generate(&budget, g.len(), |i, sink: &mut Sink<'_>| {
            let (key, v) = &g.terms()[i];
            let mut phase = ParamJet::zero(budget.dim());
            for (&k, w) in key.k.iter().zip(&self.omega) {
                if k != 0 {
                    phase += &w.scale_re(k as f64);
                }
            }
            let m: i32 = key.alpha.iter().map(|&(n, e)| e as i32 * n.unsigned_abs() as i32).sum::<i32>()
                - key.beta.iter().map(|&(n, e)| e as i32 * n.unsigned_abs() as i32).sum::<i32>();
            let mut diag = phase.scale(I);
            if m != 0 {
                diag -= &frequency.scale(I * m as f64);
            }
            sink.push(key.clone(), &diag * v);

            if m != 0 {
                for (fk, fv) in modulation {
                    let c = (fv * v).scale(-I * m as f64);
                    sink.push(key.product(fk), c);
                }
            }

            self.push_block_terms(key, v, sink);

            for (j, &lj) in key.l.iter().enumerate() {
                if lj == 0 {
                    continue;
                }
                for (fk, fv) in modulation {
                    let kj = fk.k[nu + j];
                    if kj == 0 {
                        continue;
                    }
                    let mut base = key.product(fk);
                    base.l[j] -= 1;
                    let c = (fv * v).scale(-I * (lj as f64 * kj as f64));
                    for &n in &normal {
                        let mut out = base.clone();
                        increment(&mut out.alpha, n);
                        increment(&mut out.beta, n);
                        sink.push(out, c.scale_re(n.unsigned_abs() as f64));
                    }
                }
            }
        });
        let tail = g.tail_bound().plus(dropped);
        let scale = (budget.k_cap as f64) * self.omega.iter().map(|w| w.magnitude()).fold(0.0, f64::max)
            + (budget.d_cap * budget.n_max) as f64 * frequency.magnitude();
        Ok(TFSeries::from_sorted(&budget, terms, tail.plus(g.tail_bound().scaled(scale))))
    }

    fn push_block_terms(&self, key: &MonoKey, v: &ParamJet, sink: &mut Sink<'_>) {
        for &(r, e) in &key.alpha {
            if !self.blocks.contains_key(&r.unsigned_abs()) {
                continue;
            }
            for p in self.block_partners(r) {
                let a = self.block_entry(p, r).expect("block entry");
                let mut out = key.clone();
                decrement(&mut out.alpha, r);
                increment(&mut out.alpha, p);
                sink.push(out, (a * v).scale(-I * e as f64));
            }
        }
        for &(r, e) in &key.beta {
            if !self.blocks.contains_key(&r.unsigned_abs()) {
                continue;
            }
            for q in self.block_partners(r) {
                let a = self.block_entry(r, q).expect("block entry");
                let mut out = key.clone();
                decrement(&mut out.beta, r);
                increment(&mut out.beta, q);
                sink.push(out, (a * v).scale(I * e as f64));
            }
        }
    }

    /// Add an update in place and move the block boundary to `block_cut`.
    pub fn absorb(&mut self, update: &NormalForm) -> Result<()> {
        for (w, dw) in self.omega.iter_mut().zip(&update.omega) {
            *w += dw;
        }
        self.shift += &update.shift;
        self.energy += &update.energy;
        self.modulation = crate::series::add(&self.modulation, &update.modulation)?;
        let dim = self.shift.dim();
        for (&m, block) in &update.blocks {
            let entry = self
                .blocks
                .entry(m)
                .or_insert_with(|| std::array::from_fn(|_| std::array::from_fn(|_| ParamJet::zero(dim))));
            for i in 0..2 {
                for j in 0..2 {
                    entry[i][j] += &block[i][j];
                }
            }
        }
        self.block_cut = self.block_cut.max(update.block_cut);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{poisson_bracket, sub, series_norm, Domain};

    fn budget() -> Arc<Budget> {
        let dom = Domain::new(0.5, 0.1, 0.5, 1.0).unwrap();
        Arc::new(Budget::new(1, vec![0, 1], 8, 6, 4, dom).unwrap())
    }

    #[test]
    fn bracket_matches_series_bracket_without_angle_transport() {
        let budget = budget();
        let dim = budget.dim();
        let mut nf = NormalForm::new(
            &budget,
            vec![ParamJet::real(0.0, dim), ParamJet::real(0.7, dim), ParamJet::real(1.3, dim)],
            2,
        );
        nf.shift = ParamJet::real(0.01, dim);
        nf.modulation = TFSeries::from_terms(
            &budget,
            [
                (MonoKey::fourier(&[0, 2, 0], 2), ParamJet::real(0.003, dim)),
                (MonoKey::fourier(&[0, -2, 0], 2), ParamJet::real(0.003, dim)),
            ],
        )
        .unwrap();
        let mut block: Block = std::array::from_fn(|_| std::array::from_fn(|_| ParamJet::zero(dim)));
        block[0][0] = ParamJet::real(0.2, dim);
        block[1][1] = ParamJet::real(-0.1, dim);
        block[0][1] = ParamJet::constant(Complex64::new(0.05, 0.02), dim);
        block[1][0] = block[0][1].conj();
        nf.blocks.insert(2, block);

        let g = TFSeries::from_terms(
            &budget,
            [
                (MonoKey::new(&[0, 1, 0], &[1, 0], &[], &[]), ParamJet::real(1.0, dim)),
                (MonoKey::new(&[0, 0, 1], &[0, 0], &[(2, 1)], &[(-3, 1)]), ParamJet::real(0.5, dim)),
                (MonoKey::new(&[0, 0, 0], &[0, 0], &[(-2, 2)], &[]), ParamJet::real(0.25, dim)),
            ],
        )
        .unwrap();
        let direct = nf.bracket(&g).unwrap();
        let reference = poisson_bracket(&nf.to_series().unwrap(), &g).unwrap();
        let diff = sub(&direct, &reference).unwrap();
        assert!(series_norm(&diff, &budget.tail_ref) < 1e-14, "{diff:?}");
    }
}
