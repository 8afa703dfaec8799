//! Matrix exponential by scaling and squaring with diagonal Padé approximants.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

// Largest 1-norm for which the degree-m approximant is accurate to double
// precision (Higham 2005, Table 10.2).
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

/// `e^{A t}` for a square matrix `a`.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !t.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let n = a.nrows();
    if t == 0.0 || n == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let at = a * t;
    let norm = one_norm(&at);

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return finish(pade(&at, m), 0);
        }
    }
    let (m, theta) = THETA[4];
    let s = if norm > theta {
        (norm / theta).log2().ceil() as i32
    } else {
        0
    };
    let scaled = at / 2f64.powi(s);
    finish(pade(&scaled, m), s)
}

fn finish(r: Result<DMatrix<f64>>, squarings: i32) -> Result<DMatrix<f64>> {
    let mut r = r?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// Coefficients of the degree-m diagonal Padé numerator,
/// `c_j = (2m - j)! m! / ((2m)! j! (m - j)!)`, scaled so the leading one is 1.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m + 1];
    for j in 1..=m {
        c[j] = c[j - 1] * (m + 1 - j) as f64 / (j as f64 * (2 * m + 1 - j) as f64);
    }
    c
}

fn pade(a: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let c = pade_coefficients(m);
    let a2 = a * a;
    // even powers I, A^2, A^4, ...
    let mut even = vec![DMatrix::identity(n, n)];
    for _ in 1..=m / 2 {
        let next = even.last().unwrap() * &a2;
        even.push(next);
    }
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (j, cj) in c.iter().enumerate() {
        if j % 2 == 0 {
            v += &even[j / 2] * *cj;
        } else {
            u_inner += &even[j / 2] * *cj;
        }
    }
    let u = a * u_inner;
    let num = &v + &u;
    let den = &v - &u;
    den.lu()
        .solve(&num)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

pub(crate) fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
