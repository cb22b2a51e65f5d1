//! One-variable parameter sweeps over the analytic model and the simulator.

use std::collections::BTreeMap;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use d2d_offload::popularity::caching_for;
use d2d_offload::power::{optimize_collab_distance, optimize_power_full_reuse_model, optimize_power_tdma};
use d2d_offload::sim::{run_monte_carlo, PointEstimate, Scenario, SimOptions, SimPoint};
use d2d_offload::{AnalyticMetrics, CachingPolicy, FullReuseModel, Popularity, Scheme, SystemConfig, TdmaModel};

use crate::setup::apply_overrides;
use crate::table::{Cell, Table};

/// The swept quantity. Grid values are in the units of [`Variable::column`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    TxPower,
    CollabDistance,
    BatteryFraction,
    ZipfExponent,
    FileSize,
    IdlePower,
    RequestsPerUser,
}

impl Variable {
    pub fn column(self) -> &'static str {
        match self {
            Variable::TxPower => "P_t_mW",
            Variable::CollabDistance => "r_c_m",
            Variable::BatteryFraction => "rho",
            Variable::ZipfExponent => "beta",
            Variable::FileSize => "F_MB",
            Variable::IdlePower => "P_cI_mW",
            Variable::RequestsPerUser => "N_r",
        }
    }
}

impl FromStr for Variable {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "P_t" | "p_t" | "tx_power" => Variable::TxPower,
            "r_c" | "rc" | "collab_distance" => Variable::CollabDistance,
            "rho" | "ρ" | "battery_fraction" => Variable::BatteryFraction,
            "beta" | "β" | "zipf_exponent" => Variable::ZipfExponent,
            "F" | "file_size" => Variable::FileSize,
            "P_cI" | "p_ci" | "idle_power" => Variable::IdlePower,
            "N_r" | "n_r" | "requests" => Variable::RequestsPerUser,
            other => bail!("unknown sweep variable `{other}` (expected P_t, r_c, rho, beta, F, P_cI or N_r)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    List(Vec<f64>),
    Range { lo: f64, hi: f64, n: usize, spacing: Spacing },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { n: 0, .. } => Vec::new(),
            Grid::Range { lo, n: 1, .. } => vec![lo],
            Grid::Range { lo, hi, n, spacing } => (0..n)
                .map(|k| {
                    let t = k as f64 / (n - 1) as f64;
                    match spacing {
                        _ if k == 0 => lo,
                        _ if k == n - 1 => hi,
                        // Correctly rounded, so integral grids come out exact.
                        Spacing::Lin => (lo * (n - 1 - k) as f64 + hi * k as f64) / (n - 1) as f64,
                        Spacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                    }
                })
                .collect(),
        }
    }

    /// `lo:hi:n` or `lo:hi:n:log`.
    pub fn parse_range(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        ensure!(parts.len() == 3 || parts.len() == 4, "range must look like lo:hi:n[:lin|log], got `{s}`");
        let lo: f64 = parts[0].trim().parse().with_context(|| format!("range start `{}`", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().with_context(|| format!("range end `{}`", parts[1]))?;
        let n: usize = parts[2].trim().parse().with_context(|| format!("range count `{}`", parts[2]))?;
        let spacing = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => Spacing::Lin,
            Some("log") => Spacing::Log,
            Some(other) => bail!("unknown spacing `{other}`"),
        };
        if spacing == Spacing::Log {
            ensure!(lo > 0.0 && hi > 0.0, "log spacing needs positive bounds");
        }
        Ok(Grid::Range { lo, hi, n, spacing })
    }

    pub fn parse_list(s: &str) -> Result<Self> {
        parse_list(s).map(Grid::List)
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("not a number: `{t}`")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PowerMode {
    /// Watts.
    Fixed(f64),
    Max,
    /// The analytic optimum of each scheme.
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CollabMode {
    /// Use the configured r_c.
    Fixed,
    /// Best r_c on this grid for the analytic offloading ratio.
    Optimal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub drops: usize,
    pub seed: u64,
    pub options: SimOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub label: String,
    pub variable: Variable,
    pub grid: Grid,
    /// Config keys applied before the swept value.
    pub overrides: BTreeMap<String, String>,
    pub schemes: Vec<Scheme>,
    pub power: PowerMode,
    pub collab: CollabMode,
    pub caching: CachingPolicy,
    pub analytic: bool,
    pub mc: Option<McSpec>,
}

impl SweepSpec {
    pub fn new(label: impl Into<String>, variable: Variable, grid: Grid) -> Self {
        SweepSpec {
            label: label.into(),
            variable,
            grid,
            overrides: BTreeMap::new(),
            schemes: vec![Scheme::FullReuse, Scheme::Tdma],
            power: PowerMode::Optimal,
            collab: CollabMode::Fixed,
            caching: CachingPolicy::Optimal,
            analytic: true,
            mc: None,
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.insert(key.to_string(), value.to_string());
        self
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let values = self.grid.values();
        ensure!(!values.is_empty(), "sweep `{}` has an empty grid", self.label);
        ensure!(!self.schemes.is_empty(), "sweep `{}` has no scheme", self.label);
        if let CollabMode::Optimal(g) = &self.collab {
            ensure!(!g.is_empty(), "sweep `{}` has an empty r_c search grid", self.label);
        }
        if let Some(mc) = &self.mc {
            ensure!(mc.drops >= 2, "Monte Carlo needs at least two drops");
        }
        let base = apply_overrides(cfg, &self.overrides)?;
        for v in values {
            point_config(&base, self.variable, v, self.mc.as_ref().map(|m| m.options))
                .with_context(|| format!("{} = {v}", self.variable.column()))?;
        }
        Ok(())
    }
}

struct Point {
    cfg: SystemConfig,
    tx_power: Option<f64>,
    options: Option<SimOptions>,
}

fn point_config(base: &SystemConfig, var: Variable, v: f64, options: Option<SimOptions>) -> Result<Point> {
    ensure!(v.is_finite(), "grid value must be finite");
    let mut cfg = base.clone();
    let mut tx_power = None;
    let mut options = options;
    match var {
        Variable::TxPower => {
            ensure!(v > 0.0, "transmit power must be positive");
            tx_power = Some(v * 1e-3);
        }
        Variable::CollabDistance => cfg.collab_distance = v,
        Variable::BatteryFraction => cfg.battery_fraction = v,
        Variable::ZipfExponent => cfg.zipf_exponent = v,
        Variable::FileSize => cfg.file_size = v * 8e6,
        Variable::IdlePower => cfg.idle_power = v * 1e-3,
        Variable::RequestsPerUser => {
            ensure!(v >= 1.0 && v.fract() == 0.0, "N_r must be a whole number of at least 1");
            if let Some(o) = options.as_mut() {
                o.requests_per_user = v as usize;
            }
        }
    }
    cfg.check()?;
    Ok(Point { cfg, tx_power, options })
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "label", "scheme", "variable", "value", "P_t_mW", "rho", "r_c_m", "beta", "F_MB", "P_cI_mW", "N_r",
    "cache_slots", "caching", "power_clamped", "p_o", "p", "pa", "E_bar_J", "e", "p_los", "mc_drops", "mc_p_o",
    "mc_p_o_hw", "mc_p", "mc_p_hw", "mc_pa", "mc_pa_hw", "mc_e", "mc_e_hw", "mc_dt_density",
];

enum Model {
    FullReuse(FullReuseModel),
    Tdma(TdmaModel),
}

impl Model {
    fn metrics(&self, p: f64, rho: f64) -> Result<AnalyticMetrics> {
        Ok(match self {
            Model::FullReuse(m) => m.metrics(&m.operating_point(p, rho)?)?,
            Model::Tdma(m) => m.metrics(&m.context(p, rho)?)?,
        })
    }

    fn opportunity(&self) -> f64 {
        match self {
            Model::FullReuse(m) => m.offloading_opportunity(),
            Model::Tdma(m) => m.offloading_opportunity(),
        }
    }

    /// Closed-form offloading probability, only at α = 2.
    fn los(&self, p: f64, rho: f64) -> Result<Option<f64>> {
        Ok(match self {
            Model::FullReuse(m) if m.config().pathloss_exponent == 2.0 => {
                Some(m.offload_prob_los(&m.operating_point(p, rho)?)?)
            }
            Model::Tdma(m) if m.config().pathloss_exponent == 2.0 => Some(m.offload_prob_los(&m.context(p, rho)?)?),
            _ => None,
        })
    }

    fn optimal_power(&self, rho: f64) -> Result<(f64, bool)> {
        let r = match self {
            Model::FullReuse(m) => optimize_power_full_reuse_model(m, rho)?,
            Model::Tdma(m) => optimize_power_tdma(m, rho)?,
        };
        Ok((r.p_star, r.clamped))
    }
}

fn sweep_row(spec: &SweepSpec, scheme: Scheme, value: f64, point: &Point) -> Result<Vec<Cell>> {
    let mut cfg = point.cfg.clone();
    let rho = cfg.battery_fraction;
    let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent)?;
    let mut rc_power = None;
    if let CollabMode::Optimal(grid) = &spec.collab {
        let choice = optimize_collab_distance(&cfg, scheme, rho, grid)?;
        cfg.collab_distance = choice.collab_distance;
        rc_power = Some(choice.tx_power);
    }
    let cache = caching_for(spec.caching, cfg.user_density, cfg.collab_distance, &pop)?;
    let model = if cfg.cache_slots == 1 {
        Some(match scheme {
            Scheme::FullReuse => Model::FullReuse(FullReuseModel::new(&cfg, &pop, &cache)?),
            Scheme::Tdma => Model::Tdma(TdmaModel::new(&cfg, &pop, &cache)?),
        })
    } else {
        None
    };

    let (tx_power, clamped) = match (point.tx_power, &spec.power) {
        (Some(p), _) => (p, None),
        (None, PowerMode::Fixed(p)) => (*p, None),
        (None, PowerMode::Max) => (cfg.max_tx_power, None),
        (None, PowerMode::Optimal) => match (rc_power, &model) {
            (Some(p), _) => (p, Some(p >= cfg.max_tx_power)),
            (None, Some(m)) => {
                let (p, c) = m.optimal_power(rho)?;
                (p, Some(c))
            }
            (None, None) => bail!("optimal power needs the analytic model, which requires cache_slots = 1"),
        },
    };

    // Full reuse at α = 2 has only the closed-form probability.
    let los_only = scheme == Scheme::FullReuse && cfg.pathloss_exponent == 2.0;
    let (analytic, p_o, p_los) = match (&model, spec.analytic) {
        (Some(m), true) => (
            if los_only { None } else { Some(m.metrics(tx_power, rho)?) },
            Some(m.opportunity()),
            m.los(tx_power, rho)?,
        ),
        _ => (None, None, None),
    };
    let mc: Option<PointEstimate> = match (&spec.mc, point.options) {
        (Some(mc), Some(options)) => {
            let scenario = Scenario {
                cache,
                schemes: vec![scheme],
                points: vec![SimPoint {
                    tx_power,
                    battery_fraction: rho,
                }],
                options,
            };
            let rep = run_monte_carlo(&cfg, &scenario, mc.drops, mc.seed)?;
            rep.estimates.into_iter().next()
        }
        _ => None,
    };

    let a = |f: fn(&AnalyticMetrics) -> f64| Cell::from(analytic.as_ref().map(f));
    let m = |f: fn(&PointEstimate) -> f64| Cell::from(mc.as_ref().map(f));
    Ok(vec![
        spec.label.as_str().into(),
        scheme.to_string().into(),
        spec.variable.column().into(),
        value.into(),
        (tx_power * 1e3).into(),
        rho.into(),
        cfg.collab_distance.into(),
        cfg.zipf_exponent.into(),
        (cfg.file_size / 8e6).into(),
        (cfg.idle_power * 1e3).into(),
        point.options.map_or(Cell::Empty, |o| o.requests_per_user.into()),
        cfg.cache_slots.into(),
        spec.caching.to_string().into(),
        clamped.map_or(Cell::Empty, Cell::Bool),
        p_o.into(),
        a(|x| x.offload_prob),
        a(|x| x.offload_ratio),
        a(|x| x.energy_avg),
        a(|x| x.energy_cost),
        p_los.into(),
        mc.as_ref().map_or(Cell::Empty, |_| spec.mc.as_ref().unwrap().drops.into()),
        m(|e| e.offload_opportunity.mean),
        m(|e| e.offload_opportunity.half_width_95),
        m(|e| e.offload_prob.mean),
        m(|e| e.offload_prob.half_width_95),
        m(|e| e.offload_ratio.mean),
        m(|e| e.offload_ratio.half_width_95),
        m(|e| e.energy_cost.mean),
        m(|e| e.energy_cost.half_width_95),
        m(|e| e.dt_density.mean),
    ])
}

/// Evaluates every grid point (in parallel) for every scheme. Rows come out in
/// grid order, schemes in the order given.
pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<Table> {
    spec.check(cfg)?;
    let base = apply_overrides(cfg, &spec.overrides)?;
    let values = spec.grid.values();
    let rows: Vec<Vec<Vec<Cell>>> = values
        .par_iter()
        .map(|&v| {
            let point = point_config(&base, spec.variable, v, spec.mc.as_ref().map(|m| m.options))?;
            spec.schemes
                .iter()
                .map(|&s| sweep_row(spec, s, v, &point).with_context(|| format!("{s} at {} = {v}", spec.variable.column())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()
        .map_err(|e| anyhow!("sweep `{}`: {e:#}", spec.label))?;
    let mut table = Table::new(SWEEP_COLUMNS);
    for row in rows.into_iter().flatten() {
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse_range("1:3:3").unwrap().values(), vec![1.0, 2.0, 3.0]);
        let g = Grid::parse_range("1:100:3:log").unwrap().values();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(Grid::parse_range("0:1:3:log").is_err());
        assert!(Grid::parse_range("1:2").is_err());
        assert_eq!(Grid::parse_list("1, 2,5").unwrap().values(), vec![1.0, 2.0, 5.0]);
    }

    #[test]
    fn variable_names() {
        assert_eq!("P_cI".parse::<Variable>().unwrap(), Variable::IdlePower);
        assert_eq!("ρ".parse::<Variable>().unwrap(), Variable::BatteryFraction);
        assert!("gamma".parse::<Variable>().is_err());
    }

    #[test]
    fn empty_and_invalid_grids_are_rejected() {
        let cfg = SystemConfig::default();
        let spec = SweepSpec::new("x", Variable::TxPower, Grid::List(vec![]));
        assert!(run_sweep(&cfg, &spec).is_err());
        let spec = SweepSpec::new("x", Variable::BatteryFraction, Grid::List(vec![0.01, -1.0]));
        assert!(run_sweep(&cfg, &spec).is_err());
        let spec = SweepSpec::new("x", Variable::RequestsPerUser, Grid::List(vec![1.5]));
        assert!(run_sweep(&cfg, &spec).is_err());
    }
}
