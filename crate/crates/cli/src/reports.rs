//! Fixed-column tables behind the single-purpose subcommands.

use anyhow::{ensure, Result};
use rayon::prelude::*;

use d2d_offload::popularity::caching_for;
use d2d_offload::power::{optimize_power_full_reuse_model, optimize_power_tdma};
use d2d_offload::sim::{run_monte_carlo, Scenario, SimOptions, SimPoint};
use d2d_offload::{AnalyticMetrics, CachingPolicy, FullReuseModel, Popularity, PowerResult, Scheme, SystemConfig, TdmaModel};

use crate::table::{Cell, Table};

pub fn solve_caching_table(cfg: &SystemConfig, policy: CachingPolicy) -> Result<Table> {
    let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent)?;
    let cache = caching_for(policy, cfg.user_density, cfg.collab_distance, &pop)?;
    let mut t = Table::new(&["index", "p_r", "p_c"]);
    for (i, (&pr, &pc)) in pop.pmf().iter().zip(cache.pmf()).enumerate() {
        t.push(vec![(i + 1).into(), pr.into(), pc.into()]);
    }
    Ok(t)
}

fn scheme_columns(scheme: Scheme) -> Vec<&'static str> {
    match scheme {
        Scheme::FullReuse => vec!["P_t_mW", "rho", "r_c_m", "p_o", "p1", "p1a", "E1_bar_J", "e1"],
        Scheme::Tdma => vec!["P_t_mW", "rho", "r_c_m", "P_cI_mW", "p_o", "p2", "p2a", "E2_bar_J", "e2"],
    }
}

fn leading_cells(cfg: &SystemConfig, scheme: Scheme, p: f64, rho: f64) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![(p * 1e3).into(), rho.into(), cfg.collab_distance.into()];
    if scheme == Scheme::Tdma {
        row.push((cfg.idle_power * 1e3).into());
    }
    row
}

fn metric_cells(m: Option<&AnalyticMetrics>) -> Vec<Cell> {
    match m {
        Some(m) => vec![
            m.offload_opportunity.into(),
            m.offload_prob.into(),
            m.offload_ratio.into(),
            m.energy_avg.into(),
            m.energy_cost.into(),
        ],
        None => vec![Cell::Empty; 5],
    }
}

struct Models {
    cfg: SystemConfig,
    fr: Option<FullReuseModel>,
    td: Option<TdmaModel>,
}

impl Models {
    fn new(cfg: &SystemConfig, scheme: Scheme) -> Result<(Self, d2d_offload::CachingDistribution)> {
        let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent)?;
        let cache = caching_for(CachingPolicy::Optimal, cfg.user_density, cfg.collab_distance, &pop)?;
        let single = cfg.cache_slots == 1;
        let models = Models {
            cfg: cfg.clone(),
            fr: (single && scheme == Scheme::FullReuse)
                .then(|| FullReuseModel::new(cfg, &pop, &cache))
                .transpose()?,
            td: (single && scheme == Scheme::Tdma).then(|| TdmaModel::new(cfg, &pop, &cache)).transpose()?,
        };
        Ok((models, cache))
    }

    fn metrics(&self, p: f64, rho: f64) -> Result<Option<AnalyticMetrics>> {
        if let Some(m) = &self.fr {
            return Ok(Some(m.metrics(&m.operating_point(p, rho)?)?));
        }
        if let Some(m) = &self.td {
            return Ok(Some(m.metrics(&m.context(p, rho)?)?));
        }
        Ok(None)
    }

    fn optimize(&self, rho: f64) -> Result<PowerResult> {
        if let Some(m) = &self.fr {
            return Ok(optimize_power_full_reuse_model(m, rho)?);
        }
        if let Some(m) = &self.td {
            return Ok(optimize_power_tdma(m, rho)?);
        }
        anyhow::bail!("power optimization needs cache_slots = 1, got {}", self.cfg.cache_slots)
    }
}

fn check_grid(powers: &[f64], rhos: &[f64]) -> Result<()> {
    ensure!(!powers.is_empty() && !rhos.is_empty(), "empty power or ρ grid");
    ensure!(powers.iter().chain(rhos).all(|&x| x > 0.0 && x.is_finite()), "powers and ρ must be positive");
    Ok(())
}

/// Analytic metrics of one scheme; `powers` in watts. Rows are ρ-major.
pub fn analytic_table(cfg: &SystemConfig, scheme: Scheme, powers: &[f64], rhos: &[f64]) -> Result<Table> {
    check_grid(powers, rhos)?;
    cfg.require_single_slot()?;
    let (models, _) = Models::new(cfg, scheme)?;
    let grid: Vec<(f64, f64)> = rhos.iter().flat_map(|&r| powers.iter().map(move |&p| (r, p))).collect();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(rho, p)| {
            let mut row = leading_cells(cfg, scheme, p, rho);
            row.extend(metric_cells(models.metrics(p, rho)?.as_ref()));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&scheme_columns(scheme));
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Analytic columns (blank when cache_slots > 1) followed by Monte Carlo
/// means and 95% half-widths.
pub fn mc_table(
    cfg: &SystemConfig,
    scheme: Scheme,
    powers: &[f64],
    rhos: &[f64],
    options: SimOptions,
    drops: usize,
    seed: u64,
) -> Result<Table> {
    check_grid(powers, rhos)?;
    let (models, cache) = Models::new(cfg, scheme)?;
    let n = if scheme == Scheme::FullReuse { "1" } else { "2" };
    let mut columns: Vec<String> = scheme_columns(scheme).into_iter().map(String::from).collect();
    for c in ["p_o".to_string(), format!("p{n}"), format!("p{n}a"), format!("e{n}")] {
        columns.push(format!("mc_{c}"));
        columns.push(format!("mc_{c}_hw"));
    }
    columns.push("mc_dt_density".into());
    columns.push("mc_max_budget_use".into());
    let mut t = Table::new(&columns);
    for &rho in rhos {
        let scenario = Scenario {
            cache: cache.clone(),
            schemes: vec![scheme],
            points: powers
                .iter()
                .map(|&p| SimPoint {
                    tx_power: p,
                    battery_fraction: rho,
                })
                .collect(),
            options,
        };
        let rep = run_monte_carlo(cfg, &scenario, drops, seed)?;
        for (&p, e) in powers.iter().zip(&rep.estimates) {
            let mut row = leading_cells(cfg, scheme, p, rho);
            row.extend(metric_cells(models.metrics(p, rho)?.as_ref()));
            for est in [&e.offload_opportunity, &e.offload_prob, &e.offload_ratio, &e.energy_cost] {
                row.push(est.mean.into());
                row.push(est.half_width_95.into());
            }
            row.push(e.dt_density.mean.into());
            row.push(e.max_budget_use.into());
            t.push(row);
        }
    }
    Ok(t)
}

/// Optimal transmit power for every (ρ, r_c) pair.
pub fn optimize_power_table(cfg: &SystemConfig, scheme: Scheme, rhos: &[f64], collab: &[f64]) -> Result<Table> {
    ensure!(!rhos.is_empty() && !collab.is_empty(), "empty ρ or r_c grid");
    cfg.require_single_slot()?;
    let grid: Vec<(f64, f64)> = collab.iter().flat_map(|&rc| rhos.iter().map(move |&r| (r, rc))).collect();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(rho, rc)| {
            ensure!(rho > 0.0 && rc > 0.0, "ρ and r_c must be positive");
            let (models, _) = Models::new(&cfg.with_collab_distance(rc), scheme)?;
            let r = models.optimize(rho)?;
            Ok(vec![
                rho.into(),
                rc.into(),
                (r.p_star * 1e3).into(),
                r.objective.into(),
                r.clamped.into(),
                r.method.to_string().into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["rho", "r_c_m", "P_star_mW", "objective", "clamped", "method"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caching_table_sums_to_one() {
        let cfg = SystemConfig::default();
        let t = solve_caching_table(&cfg, CachingPolicy::Optimal).unwrap();
        assert_eq!(t.rows.len(), cfg.catalog_size);
        let s: f64 = t
            .rows
            .iter()
            .map(|r| match r[2] {
                Cell::Num(v) => v,
                _ => panic!(),
            })
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_columns_follow_the_scheme() {
        let cfg = SystemConfig::default();
        let t = analytic_table(&cfg, Scheme::Tdma, &[0.05], &[0.01]).unwrap();
        assert_eq!(t.columns, ["P_t_mW", "rho", "r_c_m", "P_cI_mW", "p_o", "p2", "p2a", "E2_bar_J", "e2"]);
        assert!(analytic_table(&cfg, Scheme::Tdma, &[], &[0.01]).is_err());
    }
}
