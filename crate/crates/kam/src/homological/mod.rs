//! The linearized equation `{N, F} + R = N̂` for one iteration step.

mod divisors;
mod solve;
mod truncate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::blocks::{block_diagonalize, Diagonalized};
use crate::jet::ParamJet;
use crate::normal_form::{block_slot, NormalForm};

pub use divisors::{check_divisors, fourier_box, Divisor, DivisorKind, DivisorLog};
pub use solve::{solve, Solution, RESIDUAL_TOLERANCE};
pub use truncate::{truncate, Truncation};

/// Cutoffs and Diophantine constants of the current step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gamma: f64,
    pub gamma0: f64,
    pub tau: f64,
    /// Fourier cutoff `K`.
    pub k: u32,
    /// Block boundary of this step.
    pub ek: u32,
    /// Block boundary of the previous step.
    pub ek_prev: u32,
    pub delta0: f64,
}

/// Normal frequencies `ν_n = |n|(1 + c) + d_n` with `d_n` the block
/// eigenvalue attached to site `n`, next to the values of `ω`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub nu: usize,
    pub omega: Vec<f64>,
    pub frequencies: BTreeMap<i16, ParamJet>,
    pub frames: BTreeMap<u16, Diagonalized>,
}

impl Spectrum {
    pub fn of(nf: &NormalForm) -> Self {
        let budget = nf.budget();
        let frames: BTreeMap<u16, Diagonalized> = nf
            .blocks
            .iter()
            .map(|(&m, b)| {
                let frame = if nf.block_partners(m as i16).len() == 2 {
                    block_diagonalize(b)
                } else {
                    let mut single = Diagonalized::identity(budget.dim());
                    for slot in 0..2 {
                        single.eigen[slot] = b[slot][slot].clone();
                    }
                    single
                };
                (m, frame)
            })
            .collect();
        let frequencies = budget
            .normal_sites()
            .into_iter()
            .map(|n| {
                let mut nu_n = nf.mean_frequency(n);
                if let Some(frame) = frames.get(&n.unsigned_abs()) {
                    nu_n += &frame.eigen[block_slot(n)];
                }
                (n, nu_n)
            })
            .collect();
        Self {
            nu: budget.nu,
            omega: nf.omega_values(),
            frequencies,
            frames,
        }
    }
}
