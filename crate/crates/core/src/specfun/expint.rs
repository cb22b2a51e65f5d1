//! Exponential integrals E₁ and Ei for the arguments the model needs.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const MAX_ITER: usize = 1_000;

fn e1_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// e^z·E₁(z) from the continued fraction, for z ≥ 1.
fn e1_scaled_fraction(z: f64) -> Result<f64> {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence("exponential integral continued fraction"))
}

/// E₁(z) = ∫_z^∞ e^(−t)/t dt for z > 0.
pub fn e1(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain("E1 needs a positive argument"));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z < 1.0 {
        Ok(e1_series(z))
    } else {
        Ok(e1_scaled_fraction(z)? * (-z).exp())
    }
}

/// e^z·E₁(z), finite for every z > 0.
pub fn e1_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain("E1 needs a positive argument"));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z < 1.0 {
        Ok(e1_series(z) * z.exp())
    } else {
        e1_scaled_fraction(z)
    }
}

/// Ei(x) = ∫_{−∞}^x e^t/t dt, restricted to x < 0 where Ei(x) = −E₁(−x).
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain("Ei is only provided for negative arguments"));
    }
    Ok(-e1(-x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_minus_one() {
        assert!((expint_ei(-1.0).unwrap() + 0.219_383_934_395_520_3).abs() < 1e-15);
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let below = e1_series(1.0);
        let above = e1_scaled_fraction(1.0).unwrap() * (-1.0f64).exp();
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn far_tail_is_tiny_and_monotone() {
        assert!(expint_ei(-50.0).unwrap().abs() < 1e-20);
        let a = expint_ei(-2.0).unwrap();
        let b = expint_ei(-1.0).unwrap();
        assert!(b < a && a < 0.0);
    }

    #[test]
    fn scaled_form_survives_overflow() {
        let v = e1_scaled(1e3).unwrap();
        // e^z E1(z) ~ 1/z (1 − 1/z + 2/z²)
        assert!((v - 1e-3 * (1.0 - 1e-3 + 2e-6)).abs() < 1e-11);
    }

    #[test]
    fn non_negative_argument_is_rejected() {
        assert!(expint_ei(0.0).is_err());
        assert!(e1(-1.0).is_err());
    }
}
