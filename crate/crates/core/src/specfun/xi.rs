//! The interference integrals ξ₁(α) = ∫_0^∞ du/(1+u^(α/2)) and its truncation ξ₂.

use std::f64::consts::PI;

use super::quad::{integrate, QuadSpec};
use crate::error::{Error, Result};

const SERIES_EDGE: f64 = 0.5;
const TAIL_EDGE: f64 = 2.0;

/// Closed form (2π/α)/sin(2π/α); diverges at α = 2.
pub fn xi1(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::Domain("xi1 needs alpha > 2; use the alpha = 2 approximation"));
    }
    let t = 2.0 * PI / alpha;
    Ok(t / t.sin())
}

// ∫_0^y du/(1+u^c) = Σ (−1)^k y^(ck+1)/(ck+1), for y^c < 1.
fn head_series(c: f64, y: f64) -> f64 {
    let yc = y.powf(c);
    let mut pow = y;
    let mut sum = 0.0;
    for k in 0..200 {
        let term = pow / (c * k as f64 + 1.0);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < f64::EPSILON * sum.abs() {
            break;
        }
        pow *= yc;
    }
    sum
}

// ∫_y^∞ du/(1+u^c) = Σ (−1)^k y^(1−c(k+1))/(c(k+1)−1), for y^c > 1 and c > 1.
fn tail_series(c: f64, y: f64) -> f64 {
    let inv = y.powf(-c);
    let mut pow = y * inv;
    let mut sum = 0.0;
    for k in 0..200 {
        let term = pow / (c * (k + 1) as f64 - 1.0);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < f64::EPSILON * sum.abs() {
            break;
        }
        pow *= inv;
    }
    sum
}

/// ∫_0^{x^(−2/α)} du/(1+u^(α/2)) for α ≥ 2 and x > 0.
pub fn xi2(alpha: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("xi2 needs x > 0"));
    }
    if !(alpha >= 2.0) || !alpha.is_finite() {
        return Err(Error::Domain("xi2 needs alpha >= 2"));
    }
    let c = 0.5 * alpha;
    let y = x.powf(-1.0 / c);
    if y.is_infinite() {
        return xi1(alpha);
    }
    if c == 1.0 {
        return Ok(y.atan());
    }
    if y <= SERIES_EDGE {
        Ok(head_series(c, y))
    } else if y >= TAIL_EDGE {
        Ok(xi1(alpha)? - tail_series(c, y))
    } else {
        let body = integrate(
            |u| 1.0 / (1.0 + u.powf(c)),
            SERIES_EDGE,
            y,
            &QuadSpec::new(1e-13, 0.0),
        )?;
        Ok(head_series(c, SERIES_EDGE) + body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi1_at_four() {
        assert!((xi1(4.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(xi1(2.0).is_err());
    }

    #[test]
    fn xi2_at_four() {
        assert!((xi2(4.0, 1.0).unwrap() - PI / 4.0).abs() < 1e-14);
        // y = 1/√x: atan(y) on each branch
        for x in [100.0, 4.0, 1.0, 0.16, 1e-4] {
            let want = (1.0 / f64::sqrt(x)).atan();
            assert!((xi2(4.0, x).unwrap() - want).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn xi2_approaches_xi1() {
        assert!((xi2(4.0, 1e-12).unwrap() - xi1(4.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn branches_are_continuous() {
        let alpha = 3.68;
        let c = alpha / 2.0;
        for y in [SERIES_EDGE, TAIL_EDGE] {
            let x = y.powf(-c);
            let lo = xi2(alpha, x * (1.0 + 1e-12)).unwrap();
            let hi = xi2(alpha, x * (1.0 - 1e-12)).unwrap();
            assert!((lo - hi).abs() < 1e-11, "y = {y}: {lo} {hi}");
        }
    }

    #[test]
    fn xi2_matches_quadrature() {
        let alpha = 3.68;
        for x in [1e-3f64, 0.3, 2.0, 50.0] {
            let y = x.powf(-2.0 / alpha);
            let q = integrate(
                |u| 1.0 / (1.0 + u.powf(alpha / 2.0)),
                0.0,
                y,
                &QuadSpec::new(1e-13, 0.0).with_max_subdivisions(1000),
            )
            .unwrap();
            assert!((xi2(alpha, x).unwrap() - q).abs() < 1e-11, "x = {x}");
        }
    }
}
