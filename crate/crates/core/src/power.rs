//! Transmit power that maximizes the offloading probability.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::fullreuse::FullReuseModel;
use crate::metrics::Scheme;
use crate::popularity::{optimal_caching, CachingDistribution, Popularity};
use crate::specfun::QuadSpec;
use crate::tdma::{tdma_context, TdmaModel};

/// Lower end of the power search interval, W.
pub const MIN_POWER: f64 = 1e-6;
const SEARCH_REL_TOL: f64 = 1e-4;
const GRID_POINTS: usize = 200;
const ENDPOINT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMethod {
    Search,
    GridScan,
    Cubic,
    ClosedForm,
}

impl std::fmt::Display for PowerMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PowerMethod::Search => "search",
            PowerMethod::GridScan => "grid-scan",
            PowerMethod::Cubic => "cubic",
            PowerMethod::ClosedForm => "closed-form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub p_star: f64,
    /// Offloading probability at `p_star`.
    pub objective: f64,
    pub clamped: bool,
    pub method: PowerMethod,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of a unimodal `f` over [lo, hi] in ln x.
/// Ties move the bracket toward larger x.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Domain("golden section needs 0 < lo < hi"));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while b - a > rel_tol {
        if fc <= fd {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        }
    }
    Ok(if fc > fd { (c.exp(), fc) } else { (d.exp(), fd) })
}

/// Maximizes `f` on (MIN_POWER, p_max]: golden section, a P_max clamp when the
/// upper end is at least as good, and a log-grid scan when the objective turns
/// out not to be unimodal.
pub fn maximize_power<F>(mut f: F, p_max: f64) -> Result<(f64, f64, bool, PowerMethod)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(p_max > MIN_POWER) {
        return Err(Error::Domain("maximum power must exceed the search floor"));
    }
    let (x, fx) = golden_section_max(&mut f, MIN_POWER, p_max, SEARCH_REL_TOL)?;
    let f_hi = f(p_max)?;
    let f_lo = f(MIN_POWER)?;
    if f_hi >= fx {
        return Ok((p_max, f_hi, true, PowerMethod::Search));
    }
    if fx < f_lo.max(f_hi) - ENDPOINT_SLACK {
        let (lo, hi) = (MIN_POWER.ln(), p_max.ln());
        let mut best = (p_max, f_hi);
        for k in 0..GRID_POINTS {
            let p = (lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64).exp();
            let v = f(p)?;
            if v > best.1 {
                best = (p, v);
            }
        }
        return Ok((best.0, best.1, best.0 == p_max, PowerMethod::GridScan));
    }
    Ok((x, fx, false, PowerMethod::Search))
}

fn search_quad() -> QuadSpec {
    // Absolute tolerance 0 keeps the objective smooth where p₁ is tiny.
    QuadSpec::new(1e-10, 0.0).with_max_subdivisions(400)
}

/// Maximizes p₁ over the transmit power; α = 2 uses the LOS closed form.
pub fn optimize_power_full_reuse_model(model: &FullReuseModel, battery_fraction: f64) -> Result<PowerResult> {
    let m = model.clone().with_quad(search_quad());
    let los = m.config().pathloss_exponent == 2.0;
    let objective = |p: f64| {
        let op = m.operating_point(p, battery_fraction)?;
        if los {
            m.offload_prob_los(&op)
        } else {
            m.offload_prob(&op)
        }
    };
    let (p_star, obj, clamped, method) = maximize_power(objective, m.config().max_tx_power)?;
    Ok(PowerResult {
        p_star,
        objective: obj,
        clamped,
        method,
    })
}

pub fn optimize_power_full_reuse(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    battery_fraction: f64,
) -> Result<PowerResult> {
    optimize_power_full_reuse_model(&FullReuseModel::new(cfg, pop, cache)?, battery_fraction)
}

/// Coefficients (c3, c2, c1, c0) of the stationarity cubic of the α = 2 model.
pub fn los_cubic_coefficients(cfg: &SystemConfig, total_dt_density: f64, battery_fraction: f64) -> [f64; 4] {
    let a = cfg.a_coeff(battery_fraction);
    let mu = std::f64::consts::PI * total_dt_density * cfg.interference_truncation.ln_1p();
    let noise = cfg.noise_power / cfg.pathloss_gain;
    let epc = cfg.pa_efficiency * cfg.tx_circuit_power;
    [
        a * a * mu,
        (a * (noise + mu * epc) + mu) * a,
        a * a * epc * noise,
        -a * epc * noise,
    ]
}

/// Real roots of c3·x³ + c2·x² + c1·x + c0, each polished by Newton steps.
pub fn cubic_real_roots(c: [f64; 4]) -> Vec<f64> {
    let [c3, c2, c1, c0] = c;
    if c3 == 0.0 {
        return Vec::new();
    }
    let (b, cc, d) = (c2 / c3, c1 / c3, c0 / c3);
    // x = t − b/3 gives t³ + p·t + q = 0.
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let shift = -b / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    for x in roots.iter_mut() {
        for _ in 0..50 {
            let f = ((c3 * *x + c2) * *x + c1) * *x + c0;
            let df = (3.0 * c3 * *x + 2.0 * c2) * *x + c1;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            *x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
    }
    roots
}

/// α = 2 optimum from the positive root of the stationarity cubic, clamped to P_max.
pub fn optimize_power_los_cubic_model(model: &FullReuseModel, battery_fraction: f64) -> Result<PowerResult> {
    let cfg = model.config();
    if cfg.pathloss_exponent != 2.0 {
        return Err(Error::Domain("the cubic optimum needs alpha = 2"));
    }
    let coeffs = los_cubic_coefficients(cfg, model.densities().total, battery_fraction);
    let root = cubic_real_roots(coeffs)
        .into_iter()
        .filter(|r| *r > 0.0 && r.is_finite())
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));
    let Some(root) = root else {
        return optimize_power_full_reuse_model(model, battery_fraction);
    };
    let clamped = root >= cfg.max_tx_power;
    let p_star = root.min(cfg.max_tx_power);
    let op = model.operating_point(p_star, battery_fraction)?;
    Ok(PowerResult {
        p_star,
        objective: model.offload_prob_los(&op)?,
        clamped,
        method: PowerMethod::Cubic,
    })
}

pub fn optimize_power_los_cubic(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    battery_fraction: f64,
) -> Result<PowerResult> {
    optimize_power_los_cubic_model(&FullReuseModel::new(cfg, pop, cache)?, battery_fraction)
}

/// Unclamped TDMA optimum ηP_c^T(√(1/(aηP_c^T) + 1/4) − 1/2).
pub fn tdma_unclamped_power(cfg: &SystemConfig, p_o: f64, battery_fraction: f64) -> Result<f64> {
    // P_t only enters Γ₂, not P_c^T, so any positive power works here.
    let ctx = tdma_context(cfg, p_o, cfg.max_tx_power, battery_fraction)?;
    let epc = cfg.pa_efficiency * ctx.total_circuit;
    let q = cfg.a_coeff(battery_fraction) * epc;
    // √(1/q + 1/4) − 1/2 written without cancellation.
    Ok(epc * (1.0 / q) / ((1.0 / q + 0.25).sqrt() + 0.5))
}

/// Closed-form TDMA optimum, clamped to P_max.
pub fn optimize_power_tdma(model: &TdmaModel, battery_fraction: f64) -> Result<PowerResult> {
    let cfg = model.config();
    let raw = tdma_unclamped_power(cfg, model.offloading_opportunity(), battery_fraction)?;
    let clamped = raw >= cfg.max_tx_power;
    let p_star = raw.min(cfg.max_tx_power);
    let ctx = model.context(p_star, battery_fraction)?;
    Ok(PowerResult {
        p_star,
        objective: model.offload_prob(&ctx)?,
        clamped,
        method: PowerMethod::ClosedForm,
    })
}

/// Golden-section maximizer of p₂, run on ln p₂ so that underflow cannot flatten it.
pub fn search_power_tdma(model: &TdmaModel, battery_fraction: f64) -> Result<PowerResult> {
    let m = model.clone().with_quad(search_quad());
    let objective = |p: f64| {
        let ctx = m.context(p, battery_fraction)?;
        m.ln_offload_prob(&ctx)
    };
    let (p_star, ln_obj, clamped, method) = maximize_power(objective, m.config().max_tx_power)?;
    Ok(PowerResult {
        p_star,
        objective: ln_obj.exp(),
        clamped,
        method,
    })
}

/// Best collaboration distance on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollabChoice {
    pub collab_distance: f64,
    pub tx_power: f64,
    pub offload_ratio: f64,
}

/// Picks the r_c of `grid` with the largest analytic offloading ratio, using
/// the optimal cache and the optimal power of `scheme` at every candidate.
pub fn optimize_collab_distance(
    cfg: &SystemConfig,
    scheme: Scheme,
    battery_fraction: f64,
    grid: &[f64],
) -> Result<CollabChoice> {
    let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent)?;
    let mut best: Option<CollabChoice> = None;
    for &rc in grid {
        let c = cfg.with_collab_distance(rc);
        let cache = optimal_caching(c.user_density, rc, &pop)?;
        let (p, ratio) = match scheme {
            Scheme::FullReuse => {
                let m = FullReuseModel::new(&c, &pop, &cache)?;
                let p = optimize_power_full_reuse_model(&m, battery_fraction)?.p_star;
                (p, m.offload_ratio(&m.operating_point(p, battery_fraction)?)?)
            }
            Scheme::Tdma => {
                let m = TdmaModel::new(&c, &pop, &cache)?;
                let p = optimize_power_tdma(&m, battery_fraction)?.p_star;
                (p, m.offload_ratio(&m.context(p, battery_fraction)?)?)
            }
        };
        if best.is_none_or(|b| ratio > b.offload_ratio) {
            best = Some(CollabChoice {
                collab_distance: rc,
                tx_power: p,
                offload_ratio: ratio,
            });
        }
    }
    best.ok_or(Error::Domain("empty collaboration distance grid"))
}
