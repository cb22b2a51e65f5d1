//! Round-robin TDMA: one DT transmits at a time, the others idle at P_cI.

use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::fullreuse::{decay_deficit, decay_integral};
use crate::metrics::{energy_figures, energy_tail, ratio_integral, AnalyticMetrics};
use crate::popularity::{offloading_opportunity, CachingDistribution, Popularity};
use crate::specfun::{e1_scaled, integrate, ln_expm1, try_integrate, QuadSpec};

/// Receiver count, total circuit power and SNR threshold at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmaContext {
    pub tx_power: f64,
    pub battery_fraction: f64,
    /// N_a = p_o·λ·S, not rounded.
    pub avg_receivers: f64,
    /// P_c^T = P_c + max(N_a − 1, 0)·P_cI.
    pub total_circuit: f64,
    /// Γ₂; infinite when it overflows, see [`TdmaContext::ln_gamma2`].
    pub gamma2: f64,
    ln1p_gamma: f64,
}

impl TdmaContext {
    /// ln(1 + Γ₂) = a(P_t + ηP_c^T).
    pub fn ln1p_gamma(&self) -> f64 {
        self.ln1p_gamma
    }

    /// ln Γ₂, finite even when Γ₂ itself overflows.
    pub fn ln_gamma2(&self) -> f64 {
        ln_expm1(self.ln1p_gamma)
    }
}

pub fn tdma_context(cfg: &SystemConfig, p_o: f64, tx_power: f64, battery_fraction: f64) -> Result<TdmaContext> {
    if !(0.0..=1.0).contains(&p_o) {
        return Err(Error::Domain("offloading opportunity must lie in [0, 1]"));
    }
    if !(tx_power > 0.0) || !(battery_fraction > 0.0) {
        return Err(Error::Domain("transmit power and battery fraction must be positive"));
    }
    let avg_receivers = p_o * cfg.user_density * cfg.cell_area();
    let total_circuit = circuit_power(cfg, avg_receivers);
    let t = cfg.a_coeff(battery_fraction) * (tx_power + cfg.pa_efficiency * total_circuit);
    Ok(TdmaContext {
        tx_power,
        battery_fraction,
        avg_receivers,
        total_circuit,
        gamma2: t.exp_m1(),
        ln1p_gamma: t,
    })
}

/// P_c + max(n − 1, 0)·P_cI for n receivers sharing the band.
pub fn circuit_power(cfg: &SystemConfig, receivers: f64) -> f64 {
    cfg.tx_circuit_power + (receivers - 1.0).max(0.0) * cfg.idle_power
}

/// TDMA analytic model for one (config, popularity, cache) triple.
#[derive(Debug, Clone)]
pub struct TdmaModel {
    cfg: SystemConfig,
    pop: Popularity,
    helper: Vec<f64>,
    p_o: f64,
    quad: QuadSpec,
}

impl TdmaModel {
    pub fn new(cfg: &SystemConfig, pop: &Popularity, cache: &CachingDistribution) -> Result<Self> {
        cfg.require_single_slot()?;
        if pop.len() != cache.len() {
            return Err(Error::Domain("popularity and cache cover different catalogs"));
        }
        Ok(TdmaModel {
            p_o: offloading_opportunity(cfg.user_density, cfg.collab_distance, pop, cache),
            helper: cache.pmf().iter().map(|pc| pc * cfg.user_density).collect(),
            cfg: cfg.clone(),
            pop: pop.clone(),
            quad: QuadSpec::default(),
        })
    }

    pub fn with_quad(mut self, quad: QuadSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn offloading_opportunity(&self) -> f64 {
        self.p_o
    }

    pub fn context(&self, tx_power: f64, battery_fraction: f64) -> Result<TdmaContext> {
        tdma_context(&self.cfg, self.p_o, tx_power, battery_fraction)
    }

    fn files(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pop
            .pmf()
            .iter()
            .copied()
            .zip(self.helper.iter().copied())
            .filter(|&(pr, li)| pr > 0.0 && li > 0.0)
    }

    /// Σ p_r(i)∫_0^{r_c} f_i(r)·exp(−x·σ₀²·r^α) dr.
    pub fn success(&self, x: f64, normalized_noise: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.p_o);
        }
        let half = 0.5 * self.cfg.pathloss_exponent;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        let mut total = 0.0;
        for (pr, li) in self.files() {
            let scale = PI * li;
            let c2 = x * normalized_noise * scale.powf(-half);
            total += pr * decay_integral(1.0, c2, half, scale * rc2, &self.quad)?;
        }
        Ok(total)
    }

    /// p_o − S(x) without cancellation.
    pub fn deficit(&self, x: f64, normalized_noise: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let half = 0.5 * self.cfg.pathloss_exponent;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        let mut total = 0.0;
        for (pr, li) in self.files() {
            let scale = PI * li;
            let c2 = x * normalized_noise * scale.powf(-half);
            total += pr * decay_deficit(0.0, c2, half, scale * rc2, &self.quad)?;
        }
        Ok(total)
    }

    /// p₂(P_t, ρ).
    pub fn offload_prob(&self, ctx: &TdmaContext) -> Result<f64> {
        self.success(ctx.gamma2, self.cfg.normalized_noise(ctx.tx_power))
    }

    /// ln p₂, accurate when p₂ underflows or Γ₂ overflows.
    pub fn ln_offload_prob(&self, ctx: &TdmaContext) -> Result<f64> {
        let alpha = self.cfg.pathloss_exponent;
        let noise = self.cfg.normalized_noise(ctx.tx_power);
        // Scale distances by r₀ = (Γ₂σ₀²)^(−1/α) so the noise term reads s^α.
        let ln_r0 = -(ctx.ln_gamma2() + noise.ln()) / alpha;
        let r0 = ln_r0.exp();
        let s_rc = (self.cfg.collab_distance.ln() - ln_r0).exp();
        let spec = QuadSpec::new(self.quad.rel_tol, 0.0);
        let mut parts = Vec::new();
        for (pr, li) in self.files() {
            // Σ over files of p_r·λ_i·π ∫_0^{s_rc} 2s·exp(−λ_iπr₀²s² − s^α) ds, each kept in log form.
            let k = li * PI * r0 * r0;
            let mut hi = s_rc.min(40f64.powf(1.0 / alpha));
            if k > 0.0 {
                hi = hi.min((40.0 / k).sqrt());
            }
            let v = integrate(|s| 2.0 * s * (-k * s * s - s.powf(alpha)).exp(), 0.0, hi, &spec)?;
            if v > 0.0 {
                parts.push((pr * li * PI).ln() + v.ln());
            }
        }
        if parts.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        let m = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = parts.iter().map(|p| (p - m).exp()).sum();
        Ok(2.0 * ln_r0 + m + sum.ln())
    }

    /// Closed form at α = 2, where the radial integral is elementary.
    pub fn offload_prob_los(&self, ctx: &TdmaContext) -> Result<f64> {
        if self.cfg.pathloss_exponent != 2.0 {
            return Err(Error::Domain("the LOS closed form needs alpha = 2"));
        }
        let base = self.cfg.normalized_noise(ctx.tx_power) * ctx.gamma2;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        Ok(self
            .files()
            .map(|(pr, li)| {
                let phi = base + PI * li;
                pr * PI * li * -(-phi * rc2).exp_m1() / phi
            })
            .sum())
    }

    /// p₂ᵃ through the exponential integral in the threshold variable.
    pub fn offload_ratio(&self, ctx: &TdmaContext) -> Result<f64> {
        let alpha = self.cfg.pathloss_exponent;
        let half = 0.5 * alpha;
        let noise = self.cfg.normalized_noise(ctx.tx_power);
        let l = ctx.ln1p_gamma;
        if l == 0.0 {
            return Ok(self.p_o);
        }
        let g = ctx.gamma2;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        let mut total = 0.0;
        for (pr, li) in self.files() {
            let scale = PI * li;
            let term = try_integrate(
                |u| {
                    let y = noise * (u / scale).powf(half);
                    Ok((-u).exp() * delivered_fraction(y, g, l)?)
                },
                0.0,
                (scale * rc2).min(40.0),
                &self.quad,
            )?;
            total += pr * term;
        }
        Ok(total)
    }

    /// p₂ᵃ by nested quadrature over the threshold, without special functions.
    pub fn offload_ratio_nested(&self, ctx: &TdmaContext) -> Result<f64> {
        let noise = self.cfg.normalized_noise(ctx.tx_power);
        ratio_integral(|x| self.success(x, noise), ctx.ln1p_gamma, &self.quad)
    }

    fn tail(&self, ctx: &TdmaContext) -> Result<f64> {
        let noise = self.cfg.normalized_noise(ctx.tx_power);
        energy_tail(|x| self.deficit(x, noise), self.p_o, ctx.ln1p_gamma, &self.quad)
    }

    fn energies(&self, ctx: &TdmaContext, p: f64) -> Result<(Option<f64>, f64, f64)> {
        let budget = self.cfg.with_battery_fraction(ctx.battery_fraction).battery_budget();
        Ok(energy_figures(
            budget,
            self.cfg.battery_energy(),
            self.p_o,
            p,
            ctx.ln1p_gamma,
            self.tail(ctx)?,
        ))
    }

    /// Ē₂, mean DT energy of a transmission that completes.
    pub fn energy_complete(&self, ctx: &TdmaContext) -> Result<f64> {
        let p = self.offload_prob(ctx)?;
        if !(p > 0.0) {
            return Err(Error::Domain("no transmission completes at this operating point"));
        }
        Ok(self.energies(ctx, p)?.0.expect("p > 0"))
    }

    /// ē₂ = Ē₂ᵃ/(V₀Q).
    pub fn energy_cost(&self, ctx: &TdmaContext) -> Result<f64> {
        if !(self.p_o > 0.0) {
            return Err(Error::Domain("energy cost needs a positive offloading opportunity"));
        }
        let p = self.offload_prob(ctx)?;
        Ok(self.energies(ctx, p)?.2)
    }

    pub fn metrics(&self, ctx: &TdmaContext) -> Result<AnalyticMetrics> {
        let p = self.offload_prob(ctx)?;
        let ratio = self.offload_ratio(ctx)?;
        let (energy_complete, energy_avg, energy_cost) = self.energies(ctx, p)?;
        Ok(AnalyticMetrics {
            offload_opportunity: self.p_o,
            offload_prob: p,
            offload_ratio: ratio,
            energy_complete,
            energy_avg,
            energy_cost,
        })
    }
}

/// (1/L)·e^y·(E₁(y) − E₁(y(1+Γ))), the mean delivered fraction of a link with
/// SNR scale 1/y; equal to (1/L)∫_0^Γ e^(−ty)/(1+t) dt.
pub fn delivered_fraction(y: f64, gamma: f64, ln1p_gamma: f64) -> Result<f64> {
    if y * (1.0 + gamma) < 1e-12 {
        return Ok(1.0 + y * (1.0 - gamma / ln1p_gamma));
    }
    if gamma <= 0.1 && y * gamma <= 1.0 {
        // The E₁ difference cancels here; the integrand is smooth on [0, Γ].
        let v = integrate(|t| (-t * y).exp() / (1.0 + t), 0.0, gamma, &QuadSpec::new(1e-12, 0.0))?;
        return Ok(v / ln1p_gamma);
    }
    let z = y * (1.0 + gamma);
    let far = if z.is_finite() {
        (-y * gamma).exp() * e1_scaled(z)?
    } else {
        0.0
    };
    Ok(((e1_scaled(y)? - far) / ln1p_gamma).max(0.0))
}

pub fn offload_prob_p2(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    ctx: &TdmaContext,
) -> Result<f64> {
    TdmaModel::new(cfg, pop, cache)?.offload_prob(ctx)
}

pub fn offload_prob_p2_los(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    ctx: &TdmaContext,
) -> Result<f64> {
    TdmaModel::new(cfg, pop, cache)?.offload_prob_los(ctx)
}

pub fn offload_ratio_p2a(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    ctx: &TdmaContext,
) -> Result<f64> {
    TdmaModel::new(cfg, pop, cache)?.offload_ratio(ctx)
}

pub fn energy_cost_e2(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    ctx: &TdmaContext,
) -> Result<f64> {
    TdmaModel::new(cfg, pop, cache)?.energy_cost(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{optimal_caching, zipf};

    fn model(cfg: &SystemConfig) -> TdmaModel {
        let pop = zipf(cfg.catalog_size, cfg.zipf_exponent).unwrap();
        let cache = optimal_caching(cfg.user_density, cfg.collab_distance, &pop).unwrap();
        TdmaModel::new(cfg, &pop, &cache).unwrap()
    }

    #[test]
    fn context_arithmetic() {
        let cfg = SystemConfig::default();
        let ctx = tdma_context(&cfg, 0.5, 0.2, 0.01).unwrap();
        assert!((ctx.avg_receivers - 1250.0).abs() < 1e-9);
        assert!((ctx.total_circuit - (0.1159 + 1249.0 * 0.025)).abs() < 1e-12);
        let empty = tdma_context(&cfg, 0.0, 0.2, 0.01).unwrap();
        assert_eq!(empty.total_circuit, cfg.tx_circuit_power);
        let idle_free = SystemConfig {
            idle_power: 0.0,
            ..SystemConfig::default()
        };
        assert_eq!(tdma_context(&idle_free, 0.7, 0.2, 0.01).unwrap().total_circuit, 0.1159);
    }

    #[test]
    fn delivered_fraction_matches_quadrature() {
        let cases = [
            (1e-13, 3.0),
            (1e-6, 3.0),
            (0.3, 0.5),
            (4.0, 20.0),
            (50.0, 1e4),
            (0.2, 1e-9),
            (30.0, 0.05),
            (5.0, 0.1),
            (1e-13, 1e14),
            (1e-15, 1e30),
            (1e-9, 1e6),
        ];
        for &(y, g) in &cases {
            let l = f64::ln_1p(g);
            let f = |t: f64| (-t * y).exp() / (1.0 + t);
            let q = QuadSpec::new(1e-13, 0.0);
            let split = g.min(1.0);
            // Above t = 1 integrate in s = ln t.
            let upper = integrate(|s: f64| f(s.exp()) * s.exp(), 0.0, g.max(1.0).ln(), &q).unwrap();
            let want = (integrate(f, 0.0, split, &q).unwrap() + upper) / l;
            let got = delivered_fraction(y, g, l).unwrap();
            assert!((got - want).abs() < 1e-10 * want.max(1e-300) + 1e-14, "y={y} g={g}: {got} {want}");
        }
    }

    #[test]
    fn huge_files_keep_the_ratio_in_range() {
        for mbytes in [1000.0, 3000.0, 5000.0] {
            let m = model(&SystemConfig {
                file_size: mbytes * 8e6,
                ..SystemConfig::default()
            });
            let ctx = m.context(0.2, 0.01).unwrap();
            let p = m.offload_prob(&ctx).unwrap();
            let ratio = m.offload_ratio(&ctx).unwrap();
            assert!(p <= ratio && ratio <= m.offloading_opportunity(), "{mbytes} MB: {p} {ratio}");
            assert!((ratio - m.offload_ratio_nested(&ctx).unwrap()).abs() < 1e-6, "{mbytes} MB");
        }
    }

    #[test]
    fn ei_form_matches_nested_quadrature() {
        let m = model(&SystemConfig::default());
        for pt in [0.001, 0.05, 0.2] {
            let ctx = m.context(pt, 0.01).unwrap();
            let a = m.offload_ratio(&ctx).unwrap();
            let b = m.offload_ratio_nested(&ctx).unwrap();
            assert!((a - b).abs() < 1e-7, "P_t={pt}: {a} {b}");
        }
    }

    #[test]
    fn log_probability_matches_direct() {
        let m = model(&SystemConfig::default());
        for (pt, rho) in [(0.01, 0.01), (0.2, 0.01), (0.2, 0.001), (0.001, 0.1)] {
            let ctx = m.context(pt, rho).unwrap();
            let p = m.offload_prob(&ctx).unwrap();
            let lp = m.ln_offload_prob(&ctx).unwrap();
            assert!((lp - p.ln()).abs() < 1e-7, "{pt} {rho}: {lp} {}", p.ln());
        }
    }

    #[test]
    fn los_closed_form_matches_quadrature() {
        let cfg = SystemConfig {
            pathloss_exponent: 2.0,
            ..SystemConfig::default()
        };
        let m = model(&cfg);
        for pt in [0.001, 0.01, 0.2] {
            let ctx = m.context(pt, 0.01).unwrap();
            let a = m.offload_prob_los(&ctx).unwrap();
            let b = m.offload_prob(&ctx).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn ordering_and_energy_bound() {
        let m = model(&SystemConfig::default());
        for pt in [0.001, 0.05, 0.2] {
            let ctx = m.context(pt, 0.01).unwrap();
            let r = m.metrics(&ctx).unwrap();
            assert!(r.offload_prob <= r.offload_ratio + 1e-9);
            assert!(r.offload_ratio <= r.offload_opportunity + 1e-9);
            assert!(r.energy_cost <= 0.01 + 1e-12);
        }
    }
}
