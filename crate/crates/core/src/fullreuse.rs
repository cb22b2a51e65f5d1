//! Full frequency reuse: every DT transmits at once on the D2D band.
//!
//! All per-file link integrals use the substitution u = λ_i·π·r², under which
//! the nearest-helper density f_i(r)dr becomes e^(−u)du on [0, λ_i·π·r_c²].

use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{energy_figures, energy_tail, ratio_integral, AnalyticMetrics};
use crate::popularity::{offloading_opportunity, CachingDistribution, Popularity};
use crate::specfun::{gamma_p, integrate, xi1, xi2, QuadSpec};

/// Shape parameter of the fitted Voronoi cell-area distribution.
const VORONOI_SHAPE: f64 = 3.5;

/// Densities of active transmitters derived from the cache and request processes.
#[derive(Debug, Clone, PartialEq)]
pub struct DtDensities {
    /// λ_i = λ·p_c(i).
    pub helper: Vec<f64>,
    /// λ_i^d, DTs per m² holding file i.
    pub per_file: Vec<f64>,
    /// λ_I = Σ λ_i^d.
    pub total: f64,
    /// p_s(i), probability a helper of file i serves nobody.
    pub inactive_prob: Vec<f64>,
    /// p_a = 1 − Σ p_c(i)·p_s(i).
    pub active_prob: f64,
    pub theta: Vec<f64>,
}

pub fn dt_densities(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
) -> Result<DtDensities> {
    if pop.len() != cache.len() {
        return Err(Error::Domain("popularity and cache cover different catalogs"));
    }
    let lambda = cfg.user_density;
    let disk = PI * cfg.collab_distance * cfg.collab_distance;
    let n = pop.len();
    let mut helper = Vec::with_capacity(n);
    let mut per_file = Vec::with_capacity(n);
    let mut inactive = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for (&pr, &pc) in pop.pmf().iter().zip(cache.pmf()) {
        let li = lambda * pc;
        helper.push(li);
        if li == 0.0 {
            per_file.push(0.0);
            inactive.push(1.0);
            theta.push(1.0);
            continue;
        }
        let req = lambda * pr;
        let k = VORONOI_SHAPE * li;
        let th = gamma_p(VORONOI_SHAPE, (k + req) * disk)? / gamma_p(VORONOI_SHAPE, k * disk)?;
        let ps = ((1.0 + req / k).powf(-VORONOI_SHAPE) * th).clamp(0.0, 1.0);
        theta.push(th);
        inactive.push(ps);
        per_file.push(li * (1.0 - ps));
    }
    let total = per_file.iter().sum();
    let active_prob = 1.0
        - cache
            .pmf()
            .iter()
            .zip(&inactive)
            .map(|(pc, ps)| pc * ps)
            .sum::<f64>();
    Ok(DtDensities {
        helper,
        per_file,
        total,
        inactive_prob: inactive,
        active_prob,
        theta,
    })
}

/// f_i(r) = 2πλ_i·r·exp(−λ_iπr²), the distance to the nearest helper of file i.
pub fn link_distance_pdf(r: f64, helper_density: f64) -> f64 {
    2.0 * PI * helper_density * r * (-helper_density * PI * r * r).exp()
}

/// Transmit power, battery fraction and the SINR threshold they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub tx_power: f64,
    pub battery_fraction: f64,
    /// Γ₁ = exp(a(P_t + ηP_c)) − 1.
    pub gamma1: f64,
    ln1p_gamma: f64,
}

impl OperatingPoint {
    pub fn new(cfg: &SystemConfig, tx_power: f64, battery_fraction: f64) -> Result<Self> {
        if !(tx_power > 0.0) || !(battery_fraction > 0.0) {
            return Err(Error::Domain("transmit power and battery fraction must be positive"));
        }
        let t = cfg.a_coeff(battery_fraction) * (tx_power + cfg.pa_efficiency * cfg.tx_circuit_power);
        Ok(OperatingPoint {
            tx_power,
            battery_fraction,
            gamma1: t.exp_m1(),
            ln1p_gamma: t,
        })
    }

    /// ln(1 + Γ₁), exact even when Γ₁ overflows.
    pub fn ln1p_gamma(&self) -> f64 {
        self.ln1p_gamma
    }

    /// Γ₁′ = 1/ln(1 + Γ₁), the longest normalized airtime a DT can afford.
    pub fn gamma1_prime(&self) -> f64 {
        1.0 / self.ln1p_gamma
    }
}

/// Full-reuse analytic model for one (config, popularity, cache) triple.
#[derive(Debug, Clone)]
pub struct FullReuseModel {
    cfg: SystemConfig,
    pop: Popularity,
    cache: CachingDistribution,
    dens: DtDensities,
    xi1: Option<f64>,
    p_o: f64,
    quad: QuadSpec,
}

impl FullReuseModel {
    pub fn new(cfg: &SystemConfig, pop: &Popularity, cache: &CachingDistribution) -> Result<Self> {
        cfg.require_single_slot()?;
        let dens = dt_densities(cfg, pop, cache)?;
        let xi1 = if cfg.pathloss_exponent > 2.0 {
            Some(xi1(cfg.pathloss_exponent)?)
        } else {
            None
        };
        Ok(FullReuseModel {
            p_o: offloading_opportunity(cfg.user_density, cfg.collab_distance, pop, cache),
            cfg: cfg.clone(),
            pop: pop.clone(),
            cache: cache.clone(),
            dens,
            xi1,
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

    pub fn popularity(&self) -> &Popularity {
        &self.pop
    }

    pub fn cache(&self) -> &CachingDistribution {
        &self.cache
    }

    pub fn densities(&self) -> &DtDensities {
        &self.dens
    }

    pub fn offloading_opportunity(&self) -> f64 {
        self.p_o
    }

    pub fn operating_point(&self, tx_power: f64, battery_fraction: f64) -> Result<OperatingPoint> {
        OperatingPoint::new(&self.cfg, tx_power, battery_fraction)
    }

    fn xi1_checked(&self) -> Result<f64> {
        self.xi1
            .ok_or(Error::Domain("alpha = 2 has no finite xi1; use the LOS approximation"))
    }

    /// Interference coefficient π(λ_I·ξ₁ − λ_i^d·ξ₂(α, x))·x^(2/α).
    fn interference_coeff(&self, i: usize, x: f64, xi2_x: f64, xi1: f64) -> f64 {
        let c = PI * (self.dens.total * xi1 - self.dens.per_file[i] * xi2_x);
        c.max(0.0) * x.powf(2.0 / self.cfg.pathloss_exponent)
    }

    /// φ_i(x, r); the link survives threshold x with probability exp(−φ).
    pub fn survival_exponent(&self, file: usize, x: f64, r: f64, normalized_noise: f64) -> Result<f64> {
        if !(x >= 0.0) || !(r >= 0.0) {
            return Err(Error::Domain("threshold and distance must be non-negative"));
        }
        if file >= self.pop.len() {
            return Err(Error::Domain("file index out of range"));
        }
        if x == 0.0 || r == 0.0 {
            return Ok(0.0);
        }
        let xi1 = self.xi1_checked()?;
        let alpha = self.cfg.pathloss_exponent;
        let noise = x * r.powf(alpha) * normalized_noise;
        Ok(noise + self.interference_coeff(file, x, xi2(alpha, x)?, xi1) * r * r)
    }

    /// S(x) = Σ p_r(i)∫_0^{r_c} f_i(r)·exp(−φ_i(x, r)) dr.
    pub fn success(&self, x: f64, normalized_noise: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.p_o);
        }
        let half = 0.5 * self.cfg.pathloss_exponent;
        let mut total = 0.0;
        for (pr, d1, c2, upper) in self.file_terms(x, normalized_noise)? {
            total += pr * decay_integral(1.0 + d1, c2, half, upper, &self.quad)?;
        }
        Ok(total)
    }

    /// p_o − S(x), evaluated without subtracting two nearly equal numbers.
    pub fn deficit(&self, x: f64, normalized_noise: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let half = 0.5 * self.cfg.pathloss_exponent;
        let mut total = 0.0;
        for (pr, d1, c2, upper) in self.file_terms(x, normalized_noise)? {
            total += pr * decay_deficit(d1, c2, half, upper, &self.quad)?;
        }
        Ok(total)
    }

    // (p_r, interference slope, noise coefficient, U_i) per file in the u = λ_iπr² variable.
    fn file_terms(&self, x: f64, normalized_noise: f64) -> Result<Vec<(f64, f64, f64, f64)>> {
        let xi1 = self.xi1_checked()?;
        let half = 0.5 * self.cfg.pathloss_exponent;
        let xi2_x = xi2(self.cfg.pathloss_exponent, x)?;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        Ok(self
            .pop
            .pmf()
            .iter()
            .zip(&self.dens.helper)
            .enumerate()
            .filter(|&(_, (&pr, &li))| pr > 0.0 && li > 0.0)
            .map(|(i, (&pr, &li))| {
                let scale = PI * li;
                let d1 = self.interference_coeff(i, x, xi2_x, xi1) / scale;
                (pr, d1, x * normalized_noise * scale.powf(-half), scale * rc2)
            })
            .collect())
    }

    /// p₁(P_t, ρ).
    pub fn offload_prob(&self, op: &OperatingPoint) -> Result<f64> {
        self.success(op.gamma1, self.cfg.normalized_noise(op.tx_power))
    }

    /// Closed-form α = 2 approximation with interferers beyond r_max ignored.
    pub fn offload_prob_los(&self, op: &OperatingPoint) -> Result<f64> {
        if self.cfg.pathloss_exponent != 2.0 {
            return Err(Error::Domain("the LOS approximation needs alpha = 2"));
        }
        let xi_s = self.cfg.interference_truncation.ln_1p();
        let g = op.gamma1;
        let base = self.cfg.normalized_noise(op.tx_power) * g + PI * self.dens.total * xi_s * g;
        let rc2 = self.cfg.collab_distance * self.cfg.collab_distance;
        Ok(self
            .pop
            .pmf()
            .iter()
            .zip(&self.dens.helper)
            .filter(|(_, &li)| li > 0.0)
            .map(|(&pr, &li)| {
                let phi = base + PI * li;
                pr * PI * li * -(-phi * rc2).exp_m1() / phi
            })
            .sum())
    }

    /// p₁ᵃ(P_t, ρ), the expected delivered fraction of requested bits.
    pub fn offload_ratio(&self, op: &OperatingPoint) -> Result<f64> {
        let noise = self.cfg.normalized_noise(op.tx_power);
        ratio_integral(|x| self.success(x, noise), op.ln1p_gamma, &self.quad)
    }

    fn tail(&self, op: &OperatingPoint) -> Result<f64> {
        let noise = self.cfg.normalized_noise(op.tx_power);
        energy_tail(|x| self.deficit(x, noise), self.p_o, op.ln1p_gamma, &self.quad)
    }

    /// Ē₁, mean DT energy of a transmission that completes.
    pub fn energy_complete(&self, op: &OperatingPoint) -> Result<f64> {
        let p = self.offload_prob(op)?;
        if !(p > 0.0) {
            return Err(Error::Domain("no transmission completes at this operating point"));
        }
        let budget = self.cfg.with_battery_fraction(op.battery_fraction).battery_budget();
        let (complete, _, _) = energy_figures(
            budget,
            self.cfg.battery_energy(),
            self.p_o,
            p,
            op.ln1p_gamma,
            self.tail(op)?,
        );
        Ok(complete.expect("p > 0"))
    }

    /// ē₁ = Ē₁ᵃ/(V₀Q).
    pub fn energy_cost(&self, op: &OperatingPoint) -> Result<f64> {
        if !(self.p_o > 0.0) {
            return Err(Error::Domain("energy cost needs a positive offloading opportunity"));
        }
        let p = self.offload_prob(op)?;
        let budget = self.cfg.with_battery_fraction(op.battery_fraction).battery_budget();
        let (_, _, cost) = energy_figures(
            budget,
            self.cfg.battery_energy(),
            self.p_o,
            p,
            op.ln1p_gamma,
            self.tail(op)?,
        );
        Ok(cost)
    }

    pub fn metrics(&self, op: &OperatingPoint) -> Result<AnalyticMetrics> {
        let p = self.offload_prob(op)?;
        let ratio = self.offload_ratio(op)?;
        let budget = self.cfg.with_battery_fraction(op.battery_fraction).battery_budget();
        let (energy_complete, energy_avg, energy_cost) = energy_figures(
            budget,
            self.cfg.battery_energy(),
            self.p_o,
            p,
            op.ln1p_gamma,
            self.tail(op)?,
        );
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

/// ∫_0^U exp(−c1·u − c2·u^k) du, truncated where the integrand is below e^(−40).
pub(crate) fn decay_integral(c1: f64, c2: f64, k: f64, upper: f64, spec: &QuadSpec) -> Result<f64> {
    const CUT: f64 = 40.0;
    let mut hi = upper.min(CUT / c1);
    if c2 > 0.0 {
        hi = hi.min((CUT / c2).powf(1.0 / k));
    }
    if !(hi > 0.0) {
        return Ok(0.0);
    }
    integrate(|u| (-c1 * u - c2 * u.powf(k)).exp(), 0.0, hi, spec)
}

/// ∫_0^upper e^(−u)·(1 − e^(−d1·u − c2·u^k)) du.
pub(crate) fn decay_deficit(d1: f64, c2: f64, k: f64, upper: f64, spec: &QuadSpec) -> Result<f64> {
    const CUT: f64 = 40.0;
    let hi = upper.min(CUT);
    if !(hi > 0.0) {
        return Ok(0.0);
    }
    // Past `knee` the bracket is 1 to within e^(−40); that piece is exact.
    let mut knee = hi;
    if d1 > 0.0 {
        knee = knee.min(CUT / d1);
    }
    if c2 > 0.0 {
        knee = knee.min((CUT / c2).powf(1.0 / k));
    }
    let head = if knee > 0.0 {
        integrate(|u| -(-u).exp() * (-d1 * u - c2 * u.powf(k)).exp_m1(), 0.0, knee, spec)?
    } else {
        0.0
    };
    Ok(head + (-knee).exp() - (-hi).exp())
}

pub fn offload_prob_p1(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    op: &OperatingPoint,
) -> Result<f64> {
    FullReuseModel::new(cfg, pop, cache)?.offload_prob(op)
}

pub fn offload_prob_p1_los(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    op: &OperatingPoint,
) -> Result<f64> {
    FullReuseModel::new(cfg, pop, cache)?.offload_prob_los(op)
}

pub fn offload_ratio_p1a(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    op: &OperatingPoint,
) -> Result<f64> {
    FullReuseModel::new(cfg, pop, cache)?.offload_ratio(op)
}

pub fn energy_complete_e1(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    op: &OperatingPoint,
) -> Result<f64> {
    FullReuseModel::new(cfg, pop, cache)?.energy_complete(op)
}

pub fn energy_cost_e1(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    op: &OperatingPoint,
) -> Result<f64> {
    FullReuseModel::new(cfg, pop, cache)?.energy_cost(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{optimal_caching, zipf};

    fn default_model() -> FullReuseModel {
        let cfg = SystemConfig::default();
        let pop = zipf(cfg.catalog_size, cfg.zipf_exponent).unwrap();
        let cache = optimal_caching(cfg.user_density, cfg.collab_distance, &pop).unwrap();
        FullReuseModel::new(&cfg, &pop, &cache).unwrap()
    }

    #[test]
    fn density_invariants() {
        let m = default_model();
        let d = m.densities();
        let sum: f64 = d.per_file.iter().sum();
        assert!((sum - d.total).abs() < 1e-12 * d.total.max(1e-300));
        let pa = 1.0 - m.cache().pmf().iter().zip(&d.inactive_prob).map(|(c, s)| c * s).sum::<f64>();
        assert!((pa - d.active_prob).abs() < 1e-12);
        for i in 0..d.helper.len() {
            assert!(d.per_file[i] >= 0.0 && d.per_file[i] <= d.helper[i]);
            assert!((0.0..=1.0).contains(&d.inactive_prob[i]));
        }
        assert!((d.total - d.active_prob * 0.01).abs() < 1e-12);
    }

    #[test]
    fn uncached_files_have_no_transmitters() {
        let m = default_model();
        let d = m.densities();
        let last = m.cache().cutoff();
        assert!(last < d.helper.len());
        assert_eq!(d.per_file[last], 0.0);
        assert_eq!(d.inactive_prob[last], 1.0);
    }

    #[test]
    fn large_disk_theta_tends_to_one() {
        let cfg = SystemConfig {
            collab_distance: 5000.0,
            ..SystemConfig::default()
        };
        let pop = zipf(20, 1.0).unwrap();
        let cache = optimal_caching(cfg.user_density, cfg.collab_distance, &pop).unwrap();
        let d = dt_densities(&cfg, &pop, &cache).unwrap();
        assert!(d.theta.iter().all(|t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pdf_mode_and_mass() {
        let li = 2e-4;
        let mass = integrate(|r| link_distance_pdf(r, li), 0.0, 1000.0, &QuadSpec::default()).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
        let mode = 1.0 / (2.0 * PI * li).sqrt();
        let f = |r| link_distance_pdf(r, li);
        assert!(f(mode) > f(mode * 0.99) && f(mode) > f(mode * 1.01));
        let cdf = integrate(f, 0.0, 100.0, &QuadSpec::default()).unwrap();
        assert!((cdf - (1.0 - (-li * PI * 1e4f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn survival_exponent_is_linear_in_noise() {
        let m = default_model();
        let a = m.survival_exponent(0, 2.0, 30.0, 1e-8).unwrap();
        let b = m.survival_exponent(0, 2.0, 30.0, 2e-8).unwrap();
        assert!((b - a - 2.0 * 30f64.powf(3.68) * 1e-8).abs() < 1e-9 * b);
    }

    #[test]
    fn survival_exponent_grows_with_threshold() {
        let m = default_model();
        let mut prev = 0.0;
        for k in 0..40 {
            let x = 10f64.powf(-3.0 + 0.15 * k as f64);
            let phi = m.survival_exponent(3, x, 30.0, 1e-8).unwrap();
            assert!(phi >= prev);
            prev = phi;
        }
    }

    #[test]
    fn success_matches_direct_radial_integral() {
        let m = default_model();
        let (x, noise) = (0.8, 1e-8);
        let mut want = 0.0;
        for i in 0..m.cache().cutoff() {
            let li = m.densities().helper[i];
            let v = integrate(
                |r| link_distance_pdf(r, li) * (-m.survival_exponent(i, x, r, noise).unwrap()).exp(),
                0.0,
                100.0,
                &QuadSpec::new(1e-11, 0.0),
            )
            .unwrap();
            want += m.popularity().pmf()[i] * v;
        }
        let got = m.success(x, noise).unwrap();
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn ordering_at_defaults() {
        let m = default_model();
        let op = m.operating_point(0.05, 0.01).unwrap();
        let p = m.offload_prob(&op).unwrap();
        let pa = m.offload_ratio(&op).unwrap();
        assert!(p > 0.0 && p <= pa + 1e-9 && pa <= m.offloading_opportunity() + 1e-9);
    }

    #[test]
    fn energy_cost_is_bounded_by_fraction() {
        let m = default_model();
        for pt in [0.001, 0.05, 0.2] {
            let op = m.operating_point(pt, 0.01).unwrap();
            let e = m.energy_cost(&op).unwrap();
            assert!(e > 0.0 && e <= 0.01 + 1e-12, "{e}");
        }
    }

    #[test]
    fn los_limit_is_opportunity() {
        let cfg = SystemConfig {
            pathloss_exponent: 2.0,
            ..SystemConfig::default()
        };
        let pop = zipf(cfg.catalog_size, 1.0).unwrap();
        let cache = optimal_caching(cfg.user_density, cfg.collab_distance, &pop).unwrap();
        let m = FullReuseModel::new(&cfg, &pop, &cache).unwrap();
        let op = m.operating_point(0.1, 1e9).unwrap();
        assert!((m.offload_prob_los(&op).unwrap() - m.offloading_opportunity()).abs() < 1e-6);
        assert!(m.offload_prob(&op).is_err());
    }
}
