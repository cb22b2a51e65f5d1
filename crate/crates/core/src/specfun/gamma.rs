//! Log-gamma and the incomplete gamma functions.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

fn lower_series(s: f64, x: f64) -> Result<f64> {
    let mut ap = s;
    let mut del = 1.0 / s;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum * (-x + s * x.ln() - ln_gamma(s)).exp());
        }
    }
    Err(Error::NoConvergence("incomplete gamma series"))
}

fn upper_fraction(s: f64, x: f64) -> Result<f64> {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            return Ok((-x + s * x.ln() - ln_gamma(s)).exp() * h);
        }
    }
    Err(Error::NoConvergence("incomplete gamma continued fraction"))
}

fn check(s: f64, x: f64) -> Result<()> {
    if !(s > 0.0) || !(x >= 0.0) {
        return Err(Error::Domain("incomplete gamma needs s > 0 and x >= 0"));
    }
    Ok(())
}

/// Regularized lower incomplete gamma P(s, x).
pub fn gamma_p(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        Ok(0.0)
    } else if x.is_infinite() {
        Ok(1.0)
    } else if x < s + 1.0 {
        lower_series(s, x)
    } else {
        Ok(1.0 - upper_fraction(s, x)?)
    }
}

/// Regularized upper incomplete gamma Q(s, x) = 1 − P(s, x).
pub fn gamma_q(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        Ok(1.0)
    } else if x.is_infinite() {
        Ok(0.0)
    } else if x < s + 1.0 {
        Ok(1.0 - lower_series(s, x)?)
    } else {
        upper_fraction(s, x)
    }
}

/// Γ(s, x) = ∫_x^∞ t^(s−1) e^(−t) dt.
pub fn upper_gamma(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        return Ok(gamma(s));
    }
    Ok(gamma_q(s, x)? * gamma(s))
}
