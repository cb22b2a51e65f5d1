use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use d2d_cli::reports::{analytic_table, mc_table, optimize_power_table, solve_caching_table};
use d2d_cli::sweep::{parse_list, CollabMode, McSpec, PowerMode};
use d2d_cli::{compare_configs, figure_preset, load_config, run_preset, run_sweep, CompareSettings, Grid, SweepSpec, Table, Variable};
use d2d_offload::sim::{Boundary, LinkPolicy, SimOptions};
use d2d_offload::{CachingPolicy, Scheme, SystemConfig};

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "d2d", version, about = "Cache-enabled D2D offloading: analysis, simulation and sweeps")]
struct Cli {
    /// Flat `key = value` config file applied over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set idle_power_mw=40`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Base seed of the Monte Carlo generator.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    FullReuse,
    Tdma,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::FullReuse => Scheme::FullReuse,
            SchemeArg::Tdma => Scheme::Tdma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemesArg {
    FullReuse,
    Tdma,
    Both,
}

impl SchemesArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemesArg::FullReuse => vec![Scheme::FullReuse],
            SchemesArg::Tdma => vec![Scheme::Tdma],
            SchemesArg::Both => vec![Scheme::FullReuse, Scheme::Tdma],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Optimal,
    Uniform,
    Popularity,
}

impl From<PolicyArg> for CachingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Optimal => CachingPolicy::Optimal,
            PolicyArg::Uniform => CachingPolicy::Uniform,
            PolicyArg::Popularity => CachingPolicy::Popularity,
        }
    }
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Count requests served from the requester's own cache.
    #[arg(long)]
    self_offload: bool,
    /// Requests per user (N_r); helpers share one battery across rounds.
    #[arg(long, default_value_t = 1)]
    requests: usize,
    /// Files cached per user; analytic columns stay blank above 1.
    #[arg(long)]
    cache_slots: Option<usize>,
    #[arg(long, value_parser = ["torus", "open"], default_value = "torus")]
    boundary: String,
    #[arg(long, value_parser = ["shared", "exclusive"], default_value = "shared")]
    link_policy: String,
    /// Ignore interferers beyond `interference_truncation_m`.
    #[arg(long)]
    truncate_interference: bool,
    /// Transmitters stop interfering once their transfers end.
    #[arg(long)]
    realistic_interference: bool,
}

impl SimArgs {
    fn options(&self) -> Result<SimOptions> {
        Ok(SimOptions {
            self_offload: self.self_offload,
            requests_per_user: self.requests,
            boundary: self.boundary.parse::<Boundary>()?,
            link_policy: self.link_policy.parse::<LinkPolicy>()?,
            truncate_interference: self.truncate_interference,
            realistic_interference: self.realistic_interference,
        })
    }

    fn apply(&self, cfg: &SystemConfig) -> Result<SystemConfig> {
        let mut c = cfg.clone();
        if let Some(m) = self.cache_slots {
            c.cache_slots = m;
            c.check()?;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Caching distribution as CSV (index, p_r, p_c).
    SolveCaching {
        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        policy: PolicyArg,
    },
    /// Analytic metrics of one scheme over a power and ρ grid.
    Analytic {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Comma-separated transmit powers, mW.
        #[arg(long, default_value = "1,10,50,100,200")]
        power_mw: String,
        /// Comma-separated battery fractions; defaults to the config value.
        #[arg(long)]
        rho: Option<String>,
    },
    /// Monte Carlo estimates next to the analytic values.
    Mc {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 200)]
        drops: usize,
        #[arg(long, default_value = "1,10,50,100,200")]
        power_mw: String,
        #[arg(long)]
        rho: Option<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Optimal transmit power for each (ρ, r_c).
    OptimizePower {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        rho: Option<String>,
        /// Comma-separated collaboration distances, m; defaults to the config value.
        #[arg(long)]
        rc: Option<String>,
    },
    /// Sweep one variable (P_t, r_c, rho, beta, F, P_cI, N_r).
    Sweep {
        #[arg(long = "var")]
        variable: String,
        /// Comma-separated grid in the variable's column units (mW, m, MB).
        #[arg(long, conflicts_with = "range", required_unless_present = "range")]
        values: Option<String>,
        /// `lo:hi:n` or `lo:hi:n:log`.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, value_enum, default_value_t = SchemesArg::Both)]
        scheme: SchemesArg,
        /// Fixed transmit power, mW. Default: each scheme's optimum.
        #[arg(long, conflicts_with = "max_power")]
        power_mw: Option<f64>,
        #[arg(long)]
        max_power: bool,
        /// Pick r_c per point from `--rc-grid` by the analytic offloading ratio.
        #[arg(long)]
        optimal_rc: bool,
        #[arg(long, default_value = "10:400:40")]
        rc_grid: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        caching: PolicyArg,
        #[arg(long)]
        no_analytic: bool,
        /// Add Monte Carlo columns with this many drops.
        #[arg(long)]
        drops: Option<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run a figure preset (fig2a, fig2b, fig3, fig4, fig5, fig6, fig7, fig8a, fig8b).
    Figure {
        name: String,
        /// Large drop counts and search grids.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        drops: Option<usize>,
    },
    /// Analytic vs Monte Carlo report; exits 1 if any row is out of tolerance.
    Compare {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value = "1,10,50,100,200")]
        power_mw: String,
        #[arg(long, default_value_t = 0.01)]
        rho: f64,
        #[arg(long, default_value_t = 2000)]
        drops: usize,
        /// Absolute tolerance for probabilities (widened to 3 half-widths).
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        /// Relative tolerance for the energy cost.
        #[arg(long, default_value_t = 0.10)]
        energy_tolerance: f64,
        /// Override a key for the simulator only (sensitivity check).
        #[arg(long = "mc-set", value_name = "KEY=VALUE")]
        mc_sets: Vec<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Print the effective configuration in SI units.
    Config,
}

fn rhos(arg: &Option<String>, cfg: &SystemConfig) -> Result<Vec<f64>> {
    arg.as_deref().map_or(Ok(vec![cfg.battery_fraction]), parse_list)
}

fn watts(mw: &str) -> Result<Vec<f64>> {
    Ok(parse_list(mw)?.into_iter().map(|p| p * 1e-3).collect())
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn emit_table(cli: &Cli, t: &Table) -> Result<()> {
    emit(
        cli,
        &match cli.format {
            Format::Csv => t.to_csv(),
            Format::Json => t.to_json(),
        },
    )
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = load_config(cli.config.as_deref(), &cli.sets)?;
    match &cli.command {
        Command::SolveCaching { policy } => emit_table(cli, &solve_caching_table(&cfg, (*policy).into())?)?,
        Command::Analytic { scheme, power_mw, rho } => {
            emit_table(cli, &analytic_table(&cfg, (*scheme).into(), &watts(power_mw)?, &rhos(rho, &cfg)?)?)?
        }
        Command::Mc {
            scheme,
            drops,
            power_mw,
            rho,
            sim,
        } => {
            let c = sim.apply(&cfg)?;
            let t = mc_table(&c, (*scheme).into(), &watts(power_mw)?, &rhos(rho, &c)?, sim.options()?, *drops, cli.seed)?;
            emit_table(cli, &t)?
        }
        Command::OptimizePower { scheme, rho, rc } => {
            let rcs = rc.as_deref().map_or(Ok(vec![cfg.collab_distance]), parse_list)?;
            emit_table(cli, &optimize_power_table(&cfg, (*scheme).into(), &rhos(rho, &cfg)?, &rcs)?)?
        }
        Command::Sweep {
            variable,
            values,
            range,
            scheme,
            power_mw,
            max_power,
            optimal_rc,
            rc_grid,
            caching,
            no_analytic,
            drops,
            sim,
        } => {
            let var: Variable = variable.parse()?;
            let grid = match (values, range) {
                (Some(v), _) => Grid::parse_list(v)?,
                (None, Some(r)) => Grid::parse_range(r)?,
                (None, None) => unreachable!("clap requires one of --values and --range"),
            };
            let mut spec = SweepSpec::new(format!("sweep-{}", var.column()), var, grid);
            spec.schemes = scheme.schemes();
            spec.power = match (power_mw, max_power) {
                (Some(p), _) => PowerMode::Fixed(p * 1e-3),
                (None, true) => PowerMode::Max,
                (None, false) => PowerMode::Optimal,
            };
            if *optimal_rc {
                spec.collab = CollabMode::Optimal(Grid::parse_range(rc_grid).or_else(|_| Grid::parse_list(rc_grid))?.values());
            }
            spec.caching = (*caching).into();
            spec.analytic = !no_analytic;
            spec.mc = drops.map(|d| McSpec {
                drops: d,
                seed: cli.seed,
                options: SimOptions::default(),
            });
            if let Some(mc) = spec.mc.as_mut() {
                mc.options = sim.options()?;
            }
            emit_table(cli, &run_sweep(&sim.apply(&cfg)?, &spec)?)?
        }
        Command::Figure { name, full, drops } => {
            let preset = figure_preset(name, *full)?.with_mc(*drops, Some(cli.seed));
            emit_table(cli, &run_preset(&cfg, &preset)?)?
        }
        Command::Compare {
            scheme,
            power_mw,
            rho,
            drops,
            tolerance,
            energy_tolerance,
            mc_sets,
            sim,
        } => {
            let analytic_cfg = sim.apply(&cfg)?;
            let mut all_sets = cli.sets.clone();
            all_sets.extend(mc_sets.iter().cloned());
            let sim_cfg = sim.apply(&load_config(cli.config.as_deref(), &all_sets)?)?;
            let settings = CompareSettings {
                battery_fraction: *rho,
                drops: *drops,
                seed: cli.seed,
                abs_tolerance: *tolerance,
                rel_energy_tolerance: *energy_tolerance,
                options: sim.options()?,
            };
            let report = compare_configs(&analytic_cfg, &sim_cfg, (*scheme).into(), &watts(power_mw)?, &settings)?;
            match cli.format {
                Format::Csv => emit(cli, &report.to_table().to_csv())?,
                Format::Json => emit(cli, &(serde_json::to_string_pretty(&report)? + "\n"))?,
            }
            if report.rows.is_empty() {
                eprintln!("compare: empty grid, nothing was checked");
            }
            if !report.passed {
                return Ok(EXIT_TOLERANCE);
            }
        }
        Command::Config => emit(cli, &cfg.to_config_string())?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
