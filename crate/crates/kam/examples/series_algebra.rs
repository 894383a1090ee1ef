//! Build small series, bracket them, measure them and round-trip the text form.

use std::io::Cursor;
use std::sync::Arc;

use kam::series::{
    mul, poisson_bracket, read_series, series_norm, vecfield_norm, write_series, Budget, Domain, MonoKey, TFSeries,
};
use num_complex::Complex64;

fn main() -> kam::Result<()> {
    let dom = Domain::new(0.5, 0.1, 0.5, 1.0)?;
    let budget = Arc::new(Budget::new(1, vec![0, 1], 8, 8, 6, dom)?);
    let one = budget.jet(Complex64::new(1.0, 0.0));
    let z = [0i16; 3];

    let action = MonoKey::new(&z, &[0, 0], &[(2, 1)], &[(2, 1)]);
    let w2 = TFSeries::monomial(&budget, MonoKey::new(&z, &[0, 0], &[(2, 1)], &[]), one.clone())?;
    let wbar2 = TFSeries::monomial(&budget, MonoKey::new(&z, &[0, 0], &[], &[(2, 1)]), one.clone())?;
    let harmonic = TFSeries::monomial(&budget, action, one.clone())?;
    let position = kam::series::add(&w2, &wbar2)?;

    let b = poisson_bracket(&harmonic, &position)?;
    println!("{{w2 w2bar, w2 + w2bar}}:");
    for (k, v) in b.iter() {
        println!("  {:?} {:?} -> {}", k.alpha, k.beta, v.value);
    }

    let square = mul(&position, &position)?;
    println!("(w2 + w2bar)^2 has {} terms, norm {:.4e}", square.len(), series_norm(&square, &dom));
    println!("norm bound |f|^2 = {:.4e}", series_norm(&position, &dom).powi(2));

    let drift = TFSeries::monomial(&budget, MonoKey::new(&[1, 0, 0], &[1, 0], &[], &[]), one)?;
    println!("vector field norm of e^(i theta_bar) I_1: {:.4e}", vecfield_norm(&drift, &dom));

    let mut text = Vec::new();
    write_series(&square, &mut text)?;
    print!("{}", String::from_utf8_lossy(&text));
    let back = read_series(Cursor::new(text))?;
    println!("round trip exact: {}", back == square);
    Ok(())
}
