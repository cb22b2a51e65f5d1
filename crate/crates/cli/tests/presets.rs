use d2d_cli::preset::CACHING_COLUMNS;
use d2d_cli::sweep::{CollabMode, SWEEP_COLUMNS};
use d2d_cli::{figure_preset, run_preset, run_sweep, Grid, Preset, SweepSpec, Variable, PRESET_NAMES};
use d2d_offload::sim::SimOptions;
use d2d_offload::{Scheme, SystemConfig};
use proptest::prelude::*;

/// The preset with each grid cut to its first point and tiny drop counts.
fn shrink(p: Preset) -> Preset {
    match p {
        Preset::Sweeps(specs) => Preset::Sweeps(
            specs
                .into_iter()
                .map(|mut s| {
                    s.grid = Grid::List(vec![s.grid.values()[0]]);
                    if let CollabMode::Optimal(g) = &s.collab {
                        s.collab = CollabMode::Optimal(g[..2].to_vec());
                    }
                    if let Some(mc) = s.mc.as_mut() {
                        mc.drops = 2;
                    }
                    s
                })
                .collect(),
        ),
        caching => caching,
    }
}

#[test]
fn every_preset_produces_its_documented_columns() {
    let cfg = SystemConfig::default();
    for name in PRESET_NAMES {
        let preset = shrink(figure_preset(name, false).unwrap());
        let t = run_preset(&cfg, &preset).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        assert!(!t.rows.is_empty(), "{name}");
        let want = if *name == "fig2a" { CACHING_COLUMNS } else { SWEEP_COLUMNS };
        assert_eq!(t.columns, want, "{name}");
    }
}

#[test]
fn fig2a_reaches_uniform_at_large_distance() {
    let t = run_preset(&SystemConfig::default(), &figure_preset("fig2a", false).unwrap()).unwrap();
    let rc = t.column("r_c_m").unwrap();
    let pc = t.column("p_c").unwrap();
    let (beta, lambda) = (t.column("beta").unwrap(), t.column("lambda").unwrap());
    let wide: Vec<f64> = t
        .rows
        .iter()
        .filter(|r| r[rc] == 500.0.into() && r[beta] == 1.0.into() && r[lambda] == 0.01.into())
        .map(|r| match r[pc] {
            d2d_cli::Cell::Num(v) => v,
            _ => panic!(),
        })
        .collect();
    assert_eq!(wide.len(), 1000);
    assert!(wide.iter().all(|p| (p - 1e-3).abs() < 0.002));
}

fn num(t: &d2d_cli::Table, row: usize, col: &str) -> f64 {
    match t.rows[row][t.column(col).unwrap()] {
        d2d_cli::Cell::Num(v) => v,
        ref other => panic!("{col}: {other:?}"),
    }
}

#[test]
fn rc_sweep_reoptimizes_power_per_point() {
    let mut spec = SweepSpec::new("rc", Variable::CollabDistance, Grid::List(vec![20.0, 200.0]));
    spec.schemes = vec![Scheme::FullReuse];
    let t = run_sweep(&SystemConfig::default(), &spec).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_ne!(num(&t, 0, "P_t_mW"), num(&t, 1, "P_t_mW"));
    assert!(num(&t, 1, "p_o") > num(&t, 0, "p_o"));
}

#[test]
fn sweep_csv_is_byte_stable_with_monte_carlo() {
    let mut spec = SweepSpec::new("mc", Variable::TxPower, Grid::List(vec![10.0, 100.0]));
    spec.mc = Some(d2d_cli::sweep::McSpec {
        drops: 5,
        seed: 3,
        options: SimOptions::default(),
    });
    let cfg = SystemConfig::default();
    let a = run_sweep(&cfg, &spec).unwrap().to_csv();
    let b = run_sweep(&cfg, &spec).unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn los_sweep_fills_the_closed_form_column() {
    let spec = SweepSpec::new("los", Variable::TxPower, Grid::List(vec![50.0])).set("pathloss_exponent", 2);
    let t = run_sweep(&SystemConfig::default(), &spec).unwrap();
    for r in 0..2 {
        let p_los = num(&t, r, "p_los");
        assert!(p_los > 0.0 && p_los <= num(&t, r, "p_o"));
    }
}

proptest! {
    #[test]
    fn ranges_hit_their_endpoints(lo in 0.1f64..10.0, span in 0.1f64..100.0, n in 2usize..40, log in any::<bool>()) {
        let hi = lo + span;
        let spec = format!("{lo}:{hi}:{n}{}", if log { ":log" } else { "" });
        let v = Grid::parse_range(&spec).unwrap().values();
        prop_assert_eq!(v.len(), n);
        prop_assert_eq!(v[0], lo);
        prop_assert_eq!(v[n - 1], hi);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}
