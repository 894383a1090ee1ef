use super::Thresholds;
use crate::series::{MonoKey, TFSeries};

/// The parts of `P` entering the linearized equation, plus everything else.
#[derive(Clone, Debug)]
pub struct Truncation {
    /// Normal degree 0, `|l| ≤ 1`.
    pub r0: TFSeries,
    /// Linear in one low mode.
    pub r1: TFSeries,
    /// Quadratic with both sites at or below the block boundary.
    pub r2_low: TFSeries,
    /// `w_n²`, `w_n w̄_n`, `w̄_n²` above the block boundary.
    pub r2_high: TFSeries,
    /// Everything else, carrying the tail of `P`.
    pub rest: TFSeries,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Zero,
    One,
    Low,
    High,
    Rest,
}

fn part_of(key: &MonoKey, nu: usize, thr: &Thresholds) -> Part {
    if key.k_norm(nu) > thr.k {
        return Part::Rest;
    }
    let low = |n: i16| n.unsigned_abs() as u32 <= thr.ek;
    let actions = key.action_degree();
    match key.normal_degree() {
        0 if actions <= 1 => Part::Zero,
        1 if actions == 0 && key.support().iter().all(|&n| low(n)) => Part::One,
        2 if actions == 0 => {
            let sites = key.support();
            if sites.iter().all(|&n| low(n)) {
                Part::Low
            } else if sites.len() == 1 {
                Part::High
            } else {
                Part::Rest
            }
        }
        _ => Part::Rest,
    }
}

pub fn truncate(p: &TFSeries, thr: &Thresholds) -> Truncation {
    let nu = p.budget().nu;
    let pick = |part: Part| p.filter(|k| part_of(k, nu, thr) == part);
    Truncation {
        r0: pick(Part::Zero),
        r1: pick(Part::One),
        r2_low: pick(Part::Low),
        r2_high: pick(Part::High),
        rest: pick(Part::Rest).with_tail(p.tail_bound()),
    }
}

impl Truncation {
    /// `r0 + r1 + r2_low + r2_high`.
    pub fn solved(&self) -> crate::error::Result<TFSeries> {
        let mut total = crate::series::add(&self.r0, &self.r1)?;
        total = crate::series::add(&total, &self.r2_low)?;
        crate::series::add(&total, &self.r2_high)
    }
}
