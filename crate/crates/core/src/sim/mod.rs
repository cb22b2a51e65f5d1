//! Monte Carlo simulator used as an independent check on the analysis.
//!
//! Each drop samples a Poisson cell, caches, requests and fading, links every
//! requester to its nearest helper within r_c and settles the transfers under
//! the battery budget. Drop `k` draws from ChaCha8 stream `k` of `base_seed`,
//! so results do not depend on thread scheduling.

pub mod drop;
pub mod estimate;
pub mod geometry;
pub mod links;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::Scheme;
use crate::popularity::{CachingDistribution, Popularity};

pub use drop::{settle_round, settle_round_realistic, simulate_drop, DropMetrics, NetworkRealization};
pub use estimate::McEstimate;
pub use links::draw_requests;
pub use geometry::{sample_ppp, Boundary, Cell};
pub use links::{assign_caches, establish_links, CacheTable, Link, LinkPolicy, LinkSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Count requests served from the requester's own cache.
    pub self_offload: bool,
    /// N_r; above one, helpers draw down a single battery across rounds.
    pub requests_per_user: usize,
    pub boundary: Boundary,
    pub link_policy: LinkPolicy,
    /// Ignore interferers farther than `interference_truncation` from the receiver.
    pub truncate_interference: bool,
    /// Transmitters fall silent once all their transfers end (full reuse only).
    pub realistic_interference: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            self_offload: false,
            requests_per_user: 1,
            boundary: Boundary::default(),
            link_policy: LinkPolicy::default(),
            truncate_interference: false,
            realistic_interference: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub tx_power: f64,
    pub battery_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cache: CachingDistribution,
    pub schemes: Vec<Scheme>,
    pub points: Vec<SimPoint>,
    pub options: SimOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub scheme: Scheme,
    pub tx_power: f64,
    pub battery_fraction: f64,
    /// found / requests
    pub offload_opportunity: McEstimate,
    /// complete / requests
    pub offload_prob: McEstimate,
    /// delivered bits / requested bits
    pub offload_ratio: McEstimate,
    /// Energy per served request over V₀Q.
    pub energy_cost: McEstimate,
    /// Distinct transmitters per m².
    pub dt_density: McEstimate,
    /// Largest single-request spend over ρQV₀ seen in any drop.
    pub max_budget_use: f64,
    pub threshold_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_drops: usize,
    pub base_seed: u64,
    /// Scheme-major: all points of `schemes[0]`, then `schemes[1]`, ...
    pub estimates: Vec<PointEstimate>,
}

impl McReport {
    pub fn get(&self, scheme: Scheme, point: usize) -> Option<&PointEstimate> {
        self.estimates.iter().filter(|e| e.scheme == scheme).nth(point)
    }
}

/// The generator of drop `k`.
pub fn drop_rng(base_seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(k);
    rng
}

struct Summary {
    found: f64,
    prob: f64,
    ratio: f64,
    energy: f64,
    dt_density: f64,
    max_budget_use: f64,
    mismatches: usize,
}

fn summarize(cfg: &SystemConfig, rounds: usize, m: &DropMetrics) -> Summary {
    let req = m.n_requests as f64;
    let per_request = |x: f64| if m.n_requests > 0 { x / req } else { f64::NAN };
    let served = m.n_links;
    Summary {
        found: per_request(m.n_found as f64),
        prob: per_request(m.n_complete as f64),
        ratio: if m.total_bits > 0.0 { m.delivered_bits / m.total_bits } else { f64::NAN },
        energy: if served > 0 {
            m.energy_spent / served as f64 / cfg.battery_energy()
        } else {
            f64::NAN
        },
        dt_density: m.n_transmitters as f64 / (cfg.cell_area() * rounds as f64),
        max_budget_use: m.max_budget_use,
        mismatches: m.threshold_mismatches,
    }
}

/// Runs `n_drops` independent drops and estimates every metric at every
/// (scheme, point) of the scenario.
pub fn run_monte_carlo(cfg: &SystemConfig, scenario: &Scenario, n_drops: usize, base_seed: u64) -> Result<McReport> {
    if n_drops < 2 {
        return Err(Error::Domain("at least two drops are needed for a confidence interval"));
    }
    if scenario.schemes.is_empty() || scenario.points.is_empty() {
        return Err(Error::Domain("scenario has no scheme or no operating point"));
    }
    cfg.check()?;
    for p in &scenario.points {
        if !(p.tx_power > 0.0 && p.battery_fraction > 0.0) {
            return Err(Error::InvalidValue(format!(
                "operating point needs positive power and battery fraction, got ({}, {})",
                p.tx_power, p.battery_fraction
            )));
        }
    }
    let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent)?;
    if scenario.cache.len() != pop.len() {
        return Err(Error::InvalidValue(format!(
            "caching pmf has {} entries for a catalog of {}",
            scenario.cache.len(),
            pop.len()
        )));
    }

    let per_drop: Vec<Vec<Summary>> = (0..n_drops as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = drop_rng(base_seed, k);
            let out = simulate_drop(
                cfg,
                &pop,
                &scenario.cache,
                &scenario.schemes,
                &scenario.points,
                &scenario.options,
                &mut rng,
            )?;
            Ok(out.iter().flatten().map(|m| summarize(cfg, scenario.options.requests_per_user, m)).collect())
        })
        .collect::<Result<_>>()?;

    let mut estimates = Vec::new();
    let mut idx = 0;
    for &scheme in &scenario.schemes {
        for p in &scenario.points {
            let col = |f: &dyn Fn(&Summary) -> f64| -> McEstimate {
                let v: Vec<f64> = per_drop.iter().map(|d| f(&d[idx])).collect();
                McEstimate::from_samples(&v)
            };
            estimates.push(PointEstimate {
                scheme,
                tx_power: p.tx_power,
                battery_fraction: p.battery_fraction,
                offload_opportunity: col(&|s| s.found),
                offload_prob: col(&|s| s.prob),
                offload_ratio: col(&|s| s.ratio),
                energy_cost: col(&|s| s.energy),
                dt_density: col(&|s| s.dt_density),
                max_budget_use: per_drop.iter().map(|d| d[idx].max_budget_use).fold(0.0, f64::max),
                threshold_mismatches: per_drop.iter().map(|d| d[idx].mismatches).sum(),
            });
            idx += 1;
        }
    }
    Ok(McReport {
        n_drops,
        base_seed,
        estimates,
    })
}
