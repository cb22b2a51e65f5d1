//! Figure-reproduction presets.
//!
//! Desk-scale presets use a few hundred drops and coarse search grids so each
//! finishes in minutes; `full` switches to large drop counts.

use std::str::FromStr;

use anyhow::{bail, Result};
use rayon::prelude::*;

use d2d_offload::popularity::optimal_caching;
use d2d_offload::sim::SimOptions;
use d2d_offload::{CachingPolicy, Popularity, Scheme, SystemConfig};

use crate::sweep::{run_sweep, CollabMode, Grid, McSpec, PowerMode, Spacing, SweepSpec, Variable, SWEEP_COLUMNS};
use crate::table::Table;

pub const PRESET_NAMES: &[&str] = &["fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b"];

const DESK_DROPS: usize = 200;
const FULL_DROPS: usize = 2000;

/// P_t grid of the power figures, mW.
const POWER_GRID_MW: [f64; 8] = [1.0, 5.0, 10.0, 20.0, 50.0, 100.0, 150.0, 200.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachingVariant {
    pub collab_distance: f64,
    pub zipf_exponent: f64,
    pub user_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// Optimal caching pmfs; columns `CACHING_COLUMNS`.
    Caching(Vec<CachingVariant>),
    /// Sweeps sharing the sweep column set.
    Sweeps(Vec<SweepSpec>),
}

pub const CACHING_COLUMNS: &[&str] = &["label", "r_c_m", "beta", "lambda", "index", "p_r", "p_c"];

impl Preset {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Preset::Caching(_) => CACHING_COLUMNS,
            Preset::Sweeps(_) => SWEEP_COLUMNS,
        }
    }

    /// Replaces the drop count and seed of every Monte Carlo sweep.
    pub fn with_mc(mut self, drops: Option<usize>, seed: Option<u64>) -> Self {
        if let Preset::Sweeps(specs) = &mut self {
            for mc in specs.iter_mut().filter_map(|s| s.mc.as_mut()) {
                mc.drops = drops.unwrap_or(mc.drops);
                mc.seed = seed.unwrap_or(mc.seed);
            }
        }
        self
    }
}

fn mc(drops: usize, options: SimOptions) -> Option<McSpec> {
    Some(McSpec {
        drops,
        seed: 1,
        options,
    })
}

fn power_sweep(label: &str, drops: usize) -> SweepSpec {
    let mut s = SweepSpec::new(label, Variable::TxPower, Grid::List(POWER_GRID_MW.to_vec()))
        .set("collab_distance_m", 100)
        .set("battery_fraction", 0.01);
    s.mc = mc(drops, SimOptions::default());
    s
}

fn rc_grid(step: f64) -> Vec<f64> {
    let n = (400.0 / step).round() as usize;
    (1..=n).map(|k| k as f64 * step).collect()
}

pub fn figure_preset(name: &str, full: bool) -> Result<Preset> {
    let drops = if full { FULL_DROPS } else { DESK_DROPS };
    let specs = match name {
        "fig2a" => {
            let v = |collab_distance, zipf_exponent, user_density| CachingVariant {
                collab_distance,
                zipf_exponent,
                user_density,
            };
            return Ok(Preset::Caching(vec![
                v(20.0, 1.0, 0.01),
                v(50.0, 1.0, 0.01),
                v(100.0, 1.0, 0.01),
                v(500.0, 1.0, 0.01),
                v(100.0, 0.5, 0.01),
                v(100.0, 1.5, 0.01),
                v(100.0, 1.0, 0.005),
                v(100.0, 1.0, 0.02),
            ]));
        }
        "fig2b" => {
            let mut out = Vec::new();
            for policy in [CachingPolicy::Optimal, CachingPolicy::Uniform, CachingPolicy::Popularity] {
                for slots in 1..=3 {
                    let mut s = SweepSpec::new(
                        format!("{policy}-{slots}"),
                        Variable::CollabDistance,
                        Grid::Range {
                            lo: 10.0,
                            hi: 150.0,
                            n: 15,
                            spacing: Spacing::Lin,
                        },
                    )
                    .set("cache_slots", slots);
                    s.schemes = vec![Scheme::Tdma];
                    s.power = PowerMode::Max;
                    s.caching = policy;
                    s.mc = mc(drops, SimOptions::default());
                    out.push(s);
                }
            }
            out
        }
        "fig3" => vec![power_sweep("fig3", drops)],
        "fig4" => {
            let mut los = power_sweep("alpha=2", drops).set("pathloss_exponent", 2);
            los.power = PowerMode::Max;
            if let Some(m) = los.mc.as_mut() {
                m.options.truncate_interference = true;
            }
            let four = power_sweep("alpha=4", drops).set("pathloss_exponent", 4);
            vec![los, four]
        }
        "fig5" => [0.01, 0.1]
            .iter()
            .map(|&rho| {
                SweepSpec::new(
                    format!("rho={rho}"),
                    Variable::FileSize,
                    Grid::Range {
                        lo: 10.0,
                        hi: 5000.0,
                        n: if full { 25 } else { 12 },
                        spacing: Spacing::Log,
                    },
                )
                .set("battery_fraction", rho)
            })
            .collect(),
        "fig6" => vec![SweepSpec::new(
            "fig6",
            Variable::IdlePower,
            Grid::Range {
                lo: 0.0,
                hi: 60.0,
                n: 13,
                spacing: Spacing::Lin,
            },
        )
        .set("battery_fraction", 0.01)],
        "fig7" => [false, true]
            .iter()
            .map(|&self_offload| {
                let mut s = SweepSpec::new(
                    if self_offload { "with-self" } else { "d2d-only" },
                    Variable::ZipfExponent,
                    Grid::Range {
                        lo: 0.2,
                        hi: 2.0,
                        n: 10,
                        spacing: Spacing::Lin,
                    },
                )
                .set("battery_fraction", 0.01);
                s.mc = mc(
                    drops,
                    SimOptions {
                        self_offload,
                        ..SimOptions::default()
                    },
                );
                s
            })
            .collect(),
        "fig8a" => vec![SweepSpec::new(
            "fig8a",
            Variable::CollabDistance,
            Grid::Range {
                lo: 10.0,
                hi: 400.0,
                n: 40,
                spacing: Spacing::Lin,
            },
        )
        .set("battery_fraction", 0.01)],
        "fig8b" => {
            let rhos = vec![0.001, 0.003, 0.01, 0.03, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
            [1usize, 5, 10]
                .iter()
                .map(|&nr| {
                    let mut s = SweepSpec::new(format!("N_r={nr}"), Variable::BatteryFraction, Grid::List(rhos.clone()));
                    // Full reuse needs a power search at every candidate r_c.
                    s.schemes = if full { vec![Scheme::FullReuse, Scheme::Tdma] } else { vec![Scheme::Tdma] };
                    s.collab = CollabMode::Optimal(rc_grid(if full { 10.0 } else { 20.0 }));
                    s.mc = mc(
                        drops,
                        SimOptions {
                            requests_per_user: nr,
                            ..SimOptions::default()
                        },
                    );
                    s
                })
                .collect()
        }
        other => bail!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
    };
    Ok(Preset::Sweeps(specs))
}

pub fn run_preset(cfg: &SystemConfig, preset: &Preset) -> Result<Table> {
    let mut table = Table::new(preset.columns());
    match preset {
        Preset::Caching(variants) => {
            let parts: Vec<Table> = variants
                .par_iter()
                .map(|v| {
                    let pop = Popularity::zipf(cfg.catalog_size, v.zipf_exponent)?;
                    let cache = optimal_caching(v.user_density, v.collab_distance, &pop)?;
                    let label = format!("r_c={} beta={} lambda={}", v.collab_distance, v.zipf_exponent, v.user_density);
                    let mut t = Table::new(CACHING_COLUMNS);
                    for (i, (&pr, &pc)) in pop.pmf().iter().zip(cache.pmf()).enumerate() {
                        t.push(vec![
                            label.as_str().into(),
                            v.collab_distance.into(),
                            v.zipf_exponent.into(),
                            v.user_density.into(),
                            (i + 1).into(),
                            pr.into(),
                            pc.into(),
                        ]);
                    }
                    Ok(t)
                })
                .collect::<Result<_>>()?;
            parts.into_iter().for_each(|t| table.extend(t));
        }
        Preset::Sweeps(specs) => {
            for s in specs {
                table.extend(run_sweep(cfg, s)?);
            }
        }
    }
    Ok(table)
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        figure_preset(s, false)
    }
}
