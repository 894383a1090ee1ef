//! Line-oriented text form of a series.
//!
//! ```text
//! budget nu=1 b=2 tangential=0,1 k_cap=32 n_max=32 d_cap=6 tail_ref=<r>,<s>,<rho>,<a> tail=<f64> tail_degree=<u32>
//! k=1,0,0 l=0,0 alpha=2:1 beta= re=<f64> im=<f64> grad=<re>,<im>,...
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use super::key::{canonical, MonoKey};
use super::{Budget, Domain, TFSeries, Tail};
use crate::error::{KamError, Result};
use crate::jet::ParamJet;

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn exps(e: &[(i16, u8)]) -> String {
    join(e.iter().map(|(n, p)| format!("{n}:{p}")))
}

pub fn write_series<W: Write>(f: &TFSeries, out: &mut W) -> Result<()> {
    let b = f.budget();
    let d = b.tail_ref;
    writeln!(
        out,
        "budget nu={} b={} tangential={} k_cap={} n_max={} d_cap={} tail_ref={},{},{},{} tail={} tail_degree={}",
        b.nu,
        b.b,
        join(&b.tangential),
        b.k_cap,
        b.n_max,
        b.d_cap,
        float(d.r),
        float(d.s),
        float(d.rho),
        float(d.a),
        float(f.tail()),
        f.tail_bound().degree
    )?;
    for (key, v) in f.terms() {
        let grad = join(v.grad.iter().flat_map(|g| [float(g.re), float(g.im)]));
        writeln!(
            out,
            "k={} l={} alpha={} beta={} re={} im={} grad={}",
            join(&key.k),
            join(&key.l),
            exps(&key.alpha),
            exps(&key.beta),
            float(v.value.re),
            float(v.value.im),
            grad
        )?;
    }
    Ok(())
}

struct Fields<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, text: &'a str) -> Result<Self> {
        let pairs = text
            .split_whitespace()
            .map(|tok| {
                tok.split_once('=').ok_or_else(|| KamError::Parse {
                    line,
                    message: format!("expected key=value, found `{tok}`"),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { line, pairs })
    }

    fn get(&self, name: &str) -> Result<&'a str> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.err(format!("missing field `{name}`")))
    }

    fn err(&self, message: String) -> KamError {
        KamError::Parse {
            line: self.line,
            message,
        }
    }

    fn scalar<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let raw = self.get(name)?;
        raw.parse()
            .map_err(|_| self.err(format!("bad value `{raw}` for `{name}`")))
    }

    fn list<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let raw = self.get(name)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|x| {
                x.parse()
                    .map_err(|_| self.err(format!("bad entry `{x}` in `{name}`")))
            })
            .collect()
    }

    fn exponents(&self, name: &str) -> Result<Vec<(i16, u8)>> {
        let raw = self.get(name)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|x| {
                let parsed = x
                    .split_once(':')
                    .and_then(|(n, e)| Some((n.parse().ok()?, e.parse().ok()?)));
                parsed.ok_or_else(|| self.err(format!("bad exponent `{x}` in `{name}`")))
            })
            .collect()
    }
}

pub fn read_series<R: BufRead>(input: R) -> Result<TFSeries> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(KamError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let header = header?;
    let body = header.strip_prefix("budget ").ok_or(KamError::Parse {
        line: 1,
        message: "missing budget header".into(),
    })?;
    let h = Fields::parse(1, body)?;
    let tail_ref: Vec<f64> = h.list("tail_ref")?;
    if tail_ref.len() != 4 {
        return Err(h.err("tail_ref needs four entries".into()));
    }
    let budget = Budget::new(
        h.scalar("nu")?,
        h.list("tangential")?,
        h.scalar("k_cap")?,
        h.scalar("n_max")?,
        h.scalar("d_cap")?,
        Domain::new(tail_ref[0], tail_ref[1], tail_ref[2], tail_ref[3])?,
    )?;
    if budget.b != h.scalar::<usize>("b")? {
        return Err(h.err("b disagrees with tangential".into()));
    }
    let tail = Tail::new(h.scalar("tail")?, h.scalar("tail_degree")?);
    let budget = Arc::new(budget);

    let mut terms = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f = Fields::parse(idx + 1, &line)?;
        let grad: Vec<f64> = f.list("grad")?;
        if grad.len() % 2 != 0 {
            return Err(f.err("grad needs re,im pairs".into()));
        }
        let grad: Vec<Complex64> = grad.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let key = MonoKey {
            k: f.list::<i16>("k")?.into_iter().collect(),
            l: f.list::<u8>("l")?.into_iter().collect(),
            alpha: canonical(&f.exponents("alpha")?),
            beta: canonical(&f.exponents("beta")?),
        };
        let value = ParamJet::new(Complex64::new(f.scalar("re")?, f.scalar("im")?), &grad);
        budget.check(&key).map_err(|e| f.err(e.to_string()))?;
        if value.dim() != budget.dim() {
            return Err(f.err("gradient length disagrees with the budget".into()));
        }
        terms.push((key, value));
    }
    Ok(TFSeries::from_terms(&budget, terms)?.with_tail(tail))
}
