//! Metric records shared by both transmission schemes, plus the integrals that
//! turn a threshold-success curve into offloading ratios and energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{try_integrate, QuadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FullReuse,
    Tdma,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::FullReuse => "full-reuse",
            Scheme::Tdma => "tdma",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-reuse" | "full_reuse" | "fullreuse" => Ok(Scheme::FullReuse),
            "tdma" => Ok(Scheme::Tdma),
            other => Err(Error::InvalidValue(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Analytic metrics of one scheme at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMetrics {
    /// p_o.
    pub offload_opportunity: f64,
    /// p₁ or p₂.
    pub offload_prob: f64,
    /// p₁ᵃ or p₂ᵃ.
    pub offload_ratio: f64,
    /// Mean DT energy of a complete transmission, J. `None` when nothing completes.
    pub energy_complete: Option<f64>,
    /// Mean DT energy per served request, J.
    pub energy_avg: f64,
    /// energy_avg / (V₀Q).
    pub energy_cost: f64,
}

// Beyond this s = ln(1+x) the threshold x = e^s − 1 overflows; every link has
// failed long before, so the remaining tail of ∫ p_o/s² ds is added exactly.
pub(crate) const LOG_THRESHOLD_CAP: f64 = 700.0;

/// (1/L)∫_0^L S(e^s − 1) ds, the mean delivered fraction given a success curve S.
pub(crate) fn ratio_integral<S>(success: S, ln1p_gamma: f64, spec: &QuadSpec) -> Result<f64>
where
    S: Fn(f64) -> Result<f64>,
{
    if ln1p_gamma == 0.0 {
        return success(0.0);
    }
    let upper = ln1p_gamma.min(LOG_THRESHOLD_CAP);
    let body = try_integrate(|s| success(s.exp_m1()), 0.0, upper, spec)?;
    Ok(body / ln1p_gamma)
}

/// ∫_L^∞ D(e^s − 1)/s² ds with D = p_o − S the deficit curve, computed in w = ln s.
pub(crate) fn energy_tail<D>(deficit: D, p_o: f64, ln1p_gamma: f64, spec: &QuadSpec) -> Result<f64>
where
    D: Fn(f64) -> Result<f64>,
{
    if !(ln1p_gamma > 0.0) {
        return Err(Error::Domain("energy integral needs a positive threshold"));
    }
    if ln1p_gamma >= LOG_THRESHOLD_CAP {
        return Ok(p_o / ln1p_gamma);
    }
    let body = try_integrate(
        |w| {
            let s = w.exp();
            Ok(deficit(s.exp_m1())?.clamp(0.0, p_o) / s)
        },
        ln1p_gamma.ln(),
        LOG_THRESHOLD_CAP.ln(),
        spec,
    )?;
    Ok(body + p_o / LOG_THRESHOLD_CAP)
}

/// Assembles the energy figures from p_o, p, L = ln(1+Γ) and the tail integral J.
pub(crate) fn energy_figures(
    budget: f64,
    battery: f64,
    p_o: f64,
    p: f64,
    ln1p_gamma: f64,
    tail: f64,
) -> (Option<f64>, f64, f64) {
    // Σ p_r ∫ f_i T_i = p_o − L·J
    let kept = (p_o - ln1p_gamma * tail).max(0.0);
    let complete = if p > 0.0 {
        Some(budget * (1.0 - (kept / p).min(1.0)))
    } else {
        None
    };
    let avg = if p_o > 0.0 {
        budget * (ln1p_gamma * tail / p_o).min(1.0)
    } else {
        0.0
    };
    (complete, avg, avg / battery)
}

/// Ēᵃ as the mixture (p/p_o)·Ē + (1 − p/p_o)·ρV₀Q.
pub fn energy_mixture(budget: f64, p_o: f64, p: f64, complete: Option<f64>) -> f64 {
    match complete {
        Some(e) if p_o > 0.0 => (p / p_o) * e + (1.0 - p / p_o) * budget,
        _ => budget,
    }
}
