use d2d_offload::popularity::{baseline_caching, optimal_caching};
use d2d_offload::sim::{
    assign_caches, drop_rng, run_monte_carlo, sample_ppp, McReport, Scenario, SimOptions, SimPoint,
};
use d2d_offload::{CachingDistribution, CachingPolicy, FullReuseModel, Popularity, Scheme, SystemConfig, TdmaModel};

fn defaults() -> (SystemConfig, Popularity, CachingDistribution) {
    let cfg = SystemConfig::default();
    let pop = Popularity::zipf(cfg.catalog_size, cfg.zipf_exponent).unwrap();
    let cache = optimal_caching(cfg.user_density, cfg.collab_distance, &pop).unwrap();
    (cfg, pop, cache)
}

fn scenario(cache: &CachingDistribution, schemes: Vec<Scheme>, options: SimOptions) -> Scenario {
    Scenario {
        cache: cache.clone(),
        schemes,
        points: vec![
            SimPoint { tx_power: 0.01, battery_fraction: 0.01 },
            SimPoint { tx_power: 0.2, battery_fraction: 0.01 },
        ],
        options,
    }
}

fn tdma_report(drops: usize, seed: u64, options: SimOptions) -> McReport {
    let (cfg, _, cache) = defaults();
    run_monte_carlo(&cfg, &scenario(&cache, vec![Scheme::Tdma], options), drops, seed).unwrap()
}

#[test]
fn poisson_user_count() {
    let n = 1000;
    let mean = (0..n).map(|k| sample_ppp(0.01, 500.0, k).len() as f64).sum::<f64>() / n as f64;
    assert!((mean - 2500.0).abs() <= 3.0 * 2500f64.sqrt(), "{mean}");
    assert_eq!(sample_ppp(0.01, 500.0, 42), sample_ppp(0.01, 500.0, 42));
}

#[test]
fn cache_frequencies_follow_the_pmf() {
    let (_, _, cache) = defaults();
    let mut counts = vec![0u64; cache.len()];
    for k in 0..100 {
        let mut rng = drop_rng(9, k);
        let t = assign_caches(2500, &cache, 1, &mut rng).unwrap();
        for u in 0..t.users() {
            counts[t.of(u)[0] as usize] += 1;
        }
    }
    let total = 250_000.0;
    // Pool the thin tail into one bin so every expected count is at least 5.
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(cache.pmf()) {
        let e = total * p;
        if e >= 5.0 {
            chi2 += (*c as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_obs += *c as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    let df = (bins - 1) as f64;
    // About five standard deviations above the mean of χ²(df).
    assert!(chi2 < df + 5.0 * (2.0 * df).sqrt(), "chi2={chi2} df={df}");
}

#[test]
fn degenerate_cache_goes_to_the_first_file() {
    let mut pmf = vec![0.0; 10];
    pmf[0] = 1.0;
    let c = CachingDistribution::from_pmf(pmf, CachingPolicy::Popularity).unwrap();
    let t = assign_caches(300, &c, 1, &mut drop_rng(1, 0)).unwrap();
    assert!((0..300).all(|u| t.of(u) == [0]));
}

#[test]
fn same_seed_same_report() {
    let a = tdma_report(8, 77, SimOptions::default());
    let b = tdma_report(8, 77, SimOptions::default());
    assert_eq!(a, b);
    let c = tdma_report(8, 78, SimOptions::default());
    assert_ne!(a, c);
}

#[test]
fn offloading_opportunity_and_active_density_match_the_analysis() {
    let (cfg, pop, cache) = defaults();
    let fr = FullReuseModel::new(&cfg, &pop, &cache).unwrap();
    let rep = run_monte_carlo(&cfg, &scenario(&cache, vec![Scheme::FullReuse], SimOptions::default()), 60, 3).unwrap();
    let e = rep.get(Scheme::FullReuse, 0).unwrap();
    assert!(e.offload_opportunity.agrees_with(fr.offloading_opportunity(), 0.01, 3.0), "{e:?}");
    let lambda_i = fr.densities().total;
    assert!((e.dt_density.mean / lambda_i - 1.0).abs() < 0.05, "{} vs {lambda_i}", e.dt_density.mean);
}

#[test]
fn tdma_matches_the_analysis_at_desk_scale() {
    let (cfg, pop, cache) = defaults();
    let t = TdmaModel::new(&cfg, &pop, &cache).unwrap();
    let rep = tdma_report(100, 5, SimOptions::default());
    for (i, p) in [0.01, 0.2].into_iter().enumerate() {
        let a = t.metrics(&t.context(p, 0.01).unwrap()).unwrap();
        let e = rep.get(Scheme::Tdma, i).unwrap();
        assert!(e.offload_prob.agrees_with(a.offload_prob, 0.02, 3.0), "{a:?} {e:?}");
        assert!(e.offload_ratio.agrees_with(a.offload_ratio, 0.02, 3.0), "{a:?} {e:?}");
        assert!((e.energy_cost.mean / a.energy_cost - 1.0).abs() < 0.1, "{a:?} {e:?}");
    }
}

#[test]
fn per_link_budget_and_threshold_identity() {
    let (cfg, _, cache) = defaults();
    let rep = run_monte_carlo(
        &cfg,
        &scenario(&cache, vec![Scheme::FullReuse, Scheme::Tdma], SimOptions::default()),
        10,
        11,
    )
    .unwrap();
    for e in &rep.estimates {
        assert_eq!(e.threshold_mismatches, 0);
        assert!(e.max_budget_use <= 1.0);
        assert!(e.offload_ratio.mean >= e.offload_prob.mean);
        assert!(e.offload_prob.mean <= e.offload_opportunity.mean);
    }
}

#[test]
fn self_offloading_only_adds() {
    let (cfg, pop, _) = defaults();
    // Popularity caching makes self hits common enough to matter.
    let cache = baseline_caching(CachingPolicy::Popularity, &pop).unwrap();
    let sc = |on: bool| scenario(&cache, vec![Scheme::Tdma], SimOptions { self_offload: on, ..SimOptions::default() });
    let off = run_monte_carlo(&cfg, &sc(false), 20, 4).unwrap();
    let on = run_monte_carlo(&cfg, &sc(true), 20, 4).unwrap();
    for i in 0..2 {
        let a = off.get(Scheme::Tdma, i).unwrap();
        let b = on.get(Scheme::Tdma, i).unwrap();
        assert!(b.offload_ratio.mean >= a.offload_ratio.mean, "{a:?} {b:?}");
        assert!(b.offload_opportunity.mean >= a.offload_opportunity.mean);
    }
}

#[test]
fn half_width_shrinks_like_root_n() {
    let a = tdma_report(200, 21, SimOptions::default());
    let b = tdma_report(400, 21, SimOptions::default());
    for i in 0..2 {
        let ratio = b.get(Scheme::Tdma, i).unwrap().offload_prob.half_width_95
            / a.get(Scheme::Tdma, i).unwrap().offload_prob.half_width_95;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }
}

#[test]
fn multi_request_rounds_never_overdraw() {
    let rep = tdma_report(
        10,
        8,
        SimOptions {
            requests_per_user: 4,
            ..SimOptions::default()
        },
    );
    for e in &rep.estimates {
        assert!(e.max_budget_use <= 1.0);
        assert!(e.offload_prob.mean <= e.offload_opportunity.mean);
    }
}

#[test]
fn too_few_drops_is_an_error() {
    let (cfg, _, cache) = defaults();
    assert!(run_monte_carlo(&cfg, &scenario(&cache, vec![Scheme::Tdma], SimOptions::default()), 1, 0).is_err());
}
