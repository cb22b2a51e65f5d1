//! Analytic vs Monte Carlo agreement report.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use d2d_offload::popularity::optimal_caching;
use d2d_offload::sim::{run_monte_carlo, McEstimate, Scenario, SimOptions, SimPoint};
use d2d_offload::{AnalyticMetrics, FullReuseModel, Popularity, Scheme, SystemConfig, TdmaModel};

use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub metric: String,
    pub tx_power_mw: f64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_half_width: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub scheme: Scheme,
    pub battery_fraction: f64,
    pub n_drops: usize,
    pub seed: u64,
    /// Probabilities pass within max(abs_tolerance, 3·half-width).
    pub abs_tolerance: f64,
    /// Energy cost passes within this fraction of the analytic value.
    pub rel_energy_tolerance: f64,
    pub rows: Vec<CompareRow>,
    /// False for an empty report.
    pub passed: bool,
}

impl CompareReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "metric", "P_t_mW", "analytic", "mc_mean", "mc_half_width", "abs_diff", "tolerance", "pass",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.metric.as_str().into(),
                r.tx_power_mw.into(),
                r.analytic.into(),
                r.mc_mean.into(),
                r.mc_half_width.into(),
                r.abs_diff.into(),
                r.tolerance.into(),
                r.pass.into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    pub battery_fraction: f64,
    pub drops: usize,
    pub seed: u64,
    pub abs_tolerance: f64,
    pub rel_energy_tolerance: f64,
    pub options: SimOptions,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            battery_fraction: 0.01,
            drops: 2000,
            seed: 1,
            abs_tolerance: 0.02,
            rel_energy_tolerance: 0.10,
            options: SimOptions::default(),
        }
    }
}

/// Compares the analysis under `analytic_cfg` with a simulation under
/// `sim_cfg` (normally the same config) at each power of `powers` (W).
pub fn compare_configs(
    analytic_cfg: &SystemConfig,
    sim_cfg: &SystemConfig,
    scheme: Scheme,
    powers: &[f64],
    s: &CompareSettings,
) -> Result<CompareReport> {
    let mut report = CompareReport {
        scheme,
        battery_fraction: s.battery_fraction,
        n_drops: s.drops,
        seed: s.seed,
        abs_tolerance: s.abs_tolerance,
        rel_energy_tolerance: s.rel_energy_tolerance,
        rows: Vec::new(),
        passed: false,
    };
    if powers.is_empty() {
        return Ok(report);
    }
    let rho = s.battery_fraction;
    let pop = Popularity::zipf(analytic_cfg.catalog_size, analytic_cfg.zipf_exponent)?;
    let cache = optimal_caching(analytic_cfg.user_density, analytic_cfg.collab_distance, &pop)?;
    let analytic: Vec<AnalyticMetrics> = match scheme {
        Scheme::FullReuse => {
            let m = FullReuseModel::new(analytic_cfg, &pop, &cache)?;
            powers
                .iter()
                .map(|&p| Ok(m.metrics(&m.operating_point(p, rho)?)?))
                .collect::<Result<_>>()?
        }
        Scheme::Tdma => {
            let m = TdmaModel::new(analytic_cfg, &pop, &cache)?;
            powers.iter().map(|&p| Ok(m.metrics(&m.context(p, rho)?)?)).collect::<Result<_>>()?
        }
    };
    let scenario = Scenario {
        cache,
        schemes: vec![scheme],
        points: powers
            .iter()
            .map(|&p| SimPoint {
                tx_power: p,
                battery_fraction: rho,
            })
            .collect(),
        options: s.options,
    };
    let rep = run_monte_carlo(sim_cfg, &scenario, s.drops, s.seed)?;
    let n = if scheme == Scheme::FullReuse { 1 } else { 2 };
    for ((&p, a), e) in powers.iter().zip(&analytic).zip(&rep.estimates) {
        let probs: [(String, f64, &McEstimate); 3] = [
            ("p_o".into(), a.offload_opportunity, &e.offload_opportunity),
            (format!("p{n}"), a.offload_prob, &e.offload_prob),
            (format!("p{n}a"), a.offload_ratio, &e.offload_ratio),
        ];
        for (metric, value, est) in probs {
            let tol = s.abs_tolerance.max(3.0 * est.half_width_95);
            let diff = (value - est.mean).abs();
            report.rows.push(CompareRow {
                metric,
                tx_power_mw: p * 1e3,
                analytic: value,
                mc_mean: est.mean,
                mc_half_width: est.half_width_95,
                abs_diff: diff,
                tolerance: tol,
                pass: diff <= tol,
            });
        }
        let tol = s.rel_energy_tolerance * a.energy_cost;
        let diff = (a.energy_cost - e.energy_cost.mean).abs();
        report.rows.push(CompareRow {
            metric: format!("e{n}"),
            tx_power_mw: p * 1e3,
            analytic: a.energy_cost,
            mc_mean: e.energy_cost.mean,
            mc_half_width: e.energy_cost.half_width_95,
            abs_diff: diff,
            tolerance: tol,
            pass: diff <= tol,
        });
    }
    report.passed = report.rows.iter().all(|r| r.pass);
    Ok(report)
}

pub fn compare_report(cfg: &SystemConfig, scheme: Scheme, powers: &[f64], s: &CompareSettings) -> Result<CompareReport> {
    compare_configs(cfg, cfg, scheme, powers, s)
}
