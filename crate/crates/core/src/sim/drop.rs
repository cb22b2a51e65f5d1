//! One simulated drop: sampling a cell and settling every D2D transfer in it.

use rand::Rng;
use rand_distr::Exp1;

use super::geometry::{sample_ppp_with, Cell};
use super::links::{assign_caches, draw_requests, establish_links, CacheTable, Link};
use super::{SimOptions, SimPoint};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::Scheme;
use crate::popularity::{CachingDistribution, Popularity};
use crate::tdma::circuit_power;

/// Interference gains between every link and every transmitter, kept for the
/// event-driven mode in which finished transmitters fall silent.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGains {
    /// Index into `transmitters` of each link's own DT.
    pub link_tx: Vec<usize>,
    /// Row-major links × transmitters; own DT and the receiver itself are zero.
    pub gains: Vec<f64>,
}

/// One request round of a sampled cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub positions: Vec<[f64; 2]>,
    pub caches: CacheTable,
    pub requests: Vec<u32>,
    pub links: Vec<Link>,
    pub self_served: usize,
    pub found: usize,
    /// Unit-mean exponential fading of each link.
    pub fading: Vec<f64>,
    /// Σ h_j·d_j^(−α) over the other transmitters, per link (zero unless asked for).
    pub interference: Vec<f64>,
    /// Distinct transmitters in order of first use.
    pub transmitters: Vec<u32>,
    pub pair_gains: Option<PairGains>,
}

/// Counters of one drop at one operating point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DropMetrics {
    pub n_requests: usize,
    pub n_found: usize,
    pub n_complete: usize,
    pub n_links: usize,
    pub self_offloaded: usize,
    /// Distinct transmitters, summed over rounds.
    pub n_transmitters: usize,
    pub delivered_bits: f64,
    pub total_bits: f64,
    /// Joules spent by each user that transmitted, in order of first use.
    pub dt_energy: Vec<f64>,
    pub energy_spent: f64,
    /// Largest spend of a single request divided by ρQV₀.
    pub max_budget_use: f64,
    /// Links whose completion flag disagreed with SINR ≥ Γ.
    pub threshold_mismatches: usize,
}

impl DropMetrics {
    fn absorb(&mut self, other: DropMetrics) {
        self.n_requests += other.n_requests;
        self.n_found += other.n_found;
        self.n_complete += other.n_complete;
        self.n_links += other.n_links;
        self.self_offloaded += other.self_offloaded;
        self.n_transmitters += other.n_transmitters;
        self.delivered_bits += other.delivered_bits;
        self.total_bits += other.total_bits;
        self.dt_energy.extend(other.dt_energy);
        self.energy_spent += other.energy_spent;
        self.max_budget_use = self.max_budget_use.max(other.max_budget_use);
        self.threshold_mismatches += other.threshold_mismatches;
    }
}

struct Fixed {
    cell: Cell,
    positions: Vec<[f64; 2]>,
    caches: CacheTable,
    helpers: Vec<Vec<u32>>,
}

fn sample_fixed<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    cache: &CachingDistribution,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<Fixed> {
    let cell = Cell::new(cfg.cell_side, opts.boundary);
    let positions = sample_ppp_with(cfg.user_density, cfg.cell_side, rng);
    let caches = assign_caches(positions.len(), cache, cfg.cache_slots, rng)?;
    let helpers = caches.helpers_by_file(cache.len());
    Ok(Fixed {
        cell,
        positions,
        caches,
        helpers,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample_round<R: Rng + ?Sized, E: Fn(usize) -> bool>(
    cfg: &SystemConfig,
    pop: &Popularity,
    opts: &SimOptions,
    fixed: &Fixed,
    with_interference: bool,
    eligible: E,
    rng: &mut R,
) -> Result<NetworkRealization> {
    let requests = draw_requests(fixed.positions.len(), pop, rng)?;
    let ls = establish_links(
        &fixed.cell,
        &fixed.positions,
        &fixed.caches,
        &fixed.helpers,
        &requests,
        cfg.collab_distance,
        opts.self_offload,
        opts.link_policy,
        eligible,
    );
    let fading: Vec<f64> = ls.links.iter().map(|_| rng.sample(Exp1)).collect();

    let mut slot = vec![usize::MAX; fixed.positions.len()];
    let mut transmitters = Vec::new();
    for l in &ls.links {
        if slot[l.tx as usize] == usize::MAX {
            slot[l.tx as usize] = transmitters.len();
            transmitters.push(l.tx);
        }
    }

    let mut interference = vec![0.0; ls.links.len()];
    let mut pair_gains = None;
    if with_interference {
        let half = 0.5 * cfg.pathloss_exponent;
        let trunc2 = opts
            .truncate_interference
            .then(|| cfg.interference_truncation * cfg.interference_truncation);
        let tx_pos: Vec<[f64; 2]> = transmitters.iter().map(|&t| fixed.positions[t as usize]).collect();
        let d = transmitters.len();
        let mut gains = if opts.realistic_interference {
            vec![0.0; ls.links.len() * d]
        } else {
            Vec::new()
        };
        for (k, l) in ls.links.iter().enumerate() {
            let rx_pos = fixed.positions[l.rx as usize];
            let mut sum = 0.0;
            for (j, (&t, &p)) in transmitters.iter().zip(&tx_pos).enumerate() {
                if t == l.tx || t == l.rx {
                    continue;
                }
                let d2 = fixed.cell.dist2(rx_pos, p);
                if trunc2.is_some_and(|r2| d2 > r2) {
                    continue;
                }
                let h: f64 = rng.sample(Exp1);
                let g = h * (-half * d2.ln()).exp();
                sum += g;
                if !gains.is_empty() {
                    gains[k * d + j] = g;
                }
            }
            interference[k] = sum;
        }
        if opts.realistic_interference {
            pair_gains = Some(PairGains {
                link_tx: ls.links.iter().map(|l| slot[l.tx as usize]).collect(),
                gains,
            });
        }
    }

    Ok(NetworkRealization {
        positions: fixed.positions.clone(),
        caches: fixed.caches.clone(),
        requests,
        links: ls.links,
        self_served: ls.self_served,
        found: ls.found,
        fading,
        interference,
        transmitters,
        pair_gains,
    })
}

/// Samples a single-round cell with fading and (optionally) interference.
pub fn sample_realization<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    opts: &SimOptions,
    with_interference: bool,
    rng: &mut R,
) -> Result<NetworkRealization> {
    let fixed = sample_fixed(cfg, cache, opts, rng)?;
    sample_round(cfg, pop, opts, &fixed, with_interference, |_| true, rng)
}

/// Energy F·(P_t/η + P_circuit)/(W·log₂(1 + sinr)) of a whole-file transfer.
pub fn transfer_energy(cfg: &SystemConfig, tx_power: f64, circuit: f64, sinr: f64) -> f64 {
    let rate = cfg.bandwidth * sinr.ln_1p() / std::f64::consts::LN_2;
    cfg.file_size * (tx_power / cfg.pa_efficiency + circuit) / rate
}

fn circuit_for(cfg: &SystemConfig, scheme: Scheme, links: usize) -> f64 {
    match scheme {
        Scheme::FullReuse => cfg.tx_circuit_power,
        Scheme::Tdma => circuit_power(cfg, links as f64),
    }
}

/// Settles every link of a round under the battery budget.
///
/// With `battery = Some(..)`, each request may spend at most
/// min(ρQV₀, remaining charge of its DT), and the charge is debited.
pub fn settle_round(
    cfg: &SystemConfig,
    real: &NetworkRealization,
    scheme: Scheme,
    point: SimPoint,
    mut battery: Option<&mut [f64]>,
) -> DropMetrics {
    let noise = cfg.normalized_noise(point.tx_power);
    let circuit = circuit_for(cfg, scheme, real.links.len());
    let budget = point.battery_fraction * cfg.battery_energy();
    let gamma = (cfg.a_coeff(point.battery_fraction) * (point.tx_power + cfg.pa_efficiency * circuit)).exp_m1();
    let half = 0.5 * cfg.pathloss_exponent;

    let mut m = DropMetrics {
        n_requests: real.requests.len(),
        n_found: real.found,
        n_links: real.links.len(),
        self_offloaded: real.self_served,
        n_complete: real.self_served,
        n_transmitters: real.transmitters.len(),
        total_bits: cfg.file_size * real.requests.len() as f64,
        delivered_bits: cfg.file_size * real.self_served as f64,
        dt_energy: vec![0.0; real.transmitters.len()],
        ..DropMetrics::default()
    };
    let slots = slot_map(real);
    for (k, l) in real.links.iter().enumerate() {
        let signal = real.fading[k] * (-half * (l.distance * l.distance).ln()).exp();
        let interference = if scheme == Scheme::FullReuse { real.interference[k] } else { 0.0 };
        let sinr = signal / (interference + noise);
        let energy = transfer_energy(cfg, point.tx_power, circuit, sinr);
        let allowed = match battery.as_deref() {
            Some(b) => budget.min(b[l.tx as usize]),
            None => budget,
        };
        let complete = energy <= allowed;
        let spent = energy.min(allowed);
        if battery.is_none() && complete != (sinr >= gamma) {
            m.threshold_mismatches += 1;
        }
        if let Some(b) = battery.as_deref_mut() {
            b[l.tx as usize] = (b[l.tx as usize] - spent).max(0.0);
        }
        if complete {
            m.n_complete += 1;
            m.delivered_bits += cfg.file_size;
        } else {
            m.delivered_bits += cfg.file_size * allowed / energy;
        }
        m.energy_spent += spent;
        m.dt_energy[slots[&l.tx]] += spent;
        m.max_budget_use = m.max_budget_use.max(spent / budget);
    }
    m
}

fn slot_map(real: &NetworkRealization) -> std::collections::HashMap<u32, usize> {
    real.transmitters.iter().enumerate().map(|(i, &t)| (t, i)).collect()
}

/// Full reuse where each DT stops interfering once all its transfers end.
pub fn settle_round_realistic(cfg: &SystemConfig, real: &NetworkRealization, point: SimPoint) -> Result<DropMetrics> {
    let pg = real
        .pair_gains
        .as_ref()
        .ok_or(Error::Domain("realistic interference needs pair gains"))?;
    let noise = cfg.normalized_noise(point.tx_power);
    let draw = point.tx_power / cfg.pa_efficiency + cfg.tx_circuit_power;
    let budget = point.battery_fraction * cfg.battery_energy();
    let t_budget = budget / draw;
    let half = 0.5 * cfg.pathloss_exponent;
    let n = real.links.len();
    let d = real.transmitters.len();

    let signal: Vec<f64> = real
        .links
        .iter()
        .zip(&real.fading)
        .map(|(l, h)| h * (-half * (l.distance * l.distance).ln()).exp())
        .collect();
    let mut interf: Vec<f64> = (0..n).map(|k| pg.gains[k * d..(k + 1) * d].iter().sum()).collect();
    let mut remaining = vec![cfg.file_size; n];
    let mut active = vec![true; n];
    let mut end = vec![0.0; n];
    let mut done = vec![false; n];
    let mut dt_links = vec![0usize; d];
    for &j in &pg.link_tx {
        dt_links[j] += 1;
    }
    let mut n_active = n;
    let mut t = 0.0;
    let mut rate = vec![0.0; n];
    while n_active > 0 {
        let mut step = t_budget - t;
        for k in (0..n).filter(|&k| active[k]) {
            let sinr = signal[k] / (interf[k].max(0.0) + noise);
            rate[k] = cfg.bandwidth * sinr.ln_1p() / std::f64::consts::LN_2;
            step = step.min(remaining[k] / rate[k]);
        }
        let step = step.max(0.0);
        t += step;
        let out_of_budget = t >= t_budget * (1.0 - 1e-12);
        let mut silenced = Vec::new();
        for k in 0..n {
            if !active[k] {
                continue;
            }
            remaining[k] -= rate[k] * step;
            let finished = remaining[k] <= cfg.file_size * 1e-12;
            if finished || out_of_budget {
                active[k] = false;
                n_active -= 1;
                end[k] = t;
                done[k] = finished;
                if finished {
                    remaining[k] = 0.0;
                }
                let j = pg.link_tx[k];
                dt_links[j] -= 1;
                if dt_links[j] == 0 {
                    silenced.push(j);
                }
            }
        }
        for j in silenced {
            for k in (0..n).filter(|&k| active[k]) {
                interf[k] -= pg.gains[k * d + j];
            }
        }
    }

    let mut m = DropMetrics {
        n_requests: real.requests.len(),
        n_found: real.found,
        n_links: n,
        self_offloaded: real.self_served,
        n_complete: real.self_served,
        n_transmitters: d,
        total_bits: cfg.file_size * real.requests.len() as f64,
        delivered_bits: cfg.file_size * real.self_served as f64,
        dt_energy: vec![0.0; d],
        ..DropMetrics::default()
    };
    for k in 0..n {
        let spent = (draw * end[k]).min(budget);
        if done[k] {
            m.n_complete += 1;
        }
        m.delivered_bits += cfg.file_size - remaining[k].max(0.0);
        m.energy_spent += spent;
        m.dt_energy[pg.link_tx[k]] += spent;
        m.max_budget_use = m.max_budget_use.max(spent / budget);
    }
    Ok(m)
}

/// Every (scheme, point) outcome of one drop, indexed `[scheme][point]`.
pub fn simulate_drop<R: Rng + Clone>(
    cfg: &SystemConfig,
    pop: &Popularity,
    cache: &CachingDistribution,
    schemes: &[Scheme],
    points: &[SimPoint],
    opts: &SimOptions,
    rng: &mut R,
) -> Result<Vec<Vec<DropMetrics>>> {
    if opts.requests_per_user == 0 {
        return Err(Error::Domain("each user sends at least one request"));
    }
    let with_interference = schemes.contains(&Scheme::FullReuse);
    if opts.requests_per_user == 1 {
        let real = sample_realization(cfg, pop, cache, opts, with_interference, rng)?;
        return schemes
            .iter()
            .map(|&s| {
                points
                    .iter()
                    .map(|&p| {
                        if s == Scheme::FullReuse && opts.realistic_interference {
                            settle_round_realistic(cfg, &real, p)
                        } else {
                            Ok(settle_round(cfg, &real, s, p, None))
                        }
                    })
                    .collect()
            })
            .collect();
    }

    // Battery state depends on the operating point, so each one replays the
    // same random stream from the start.
    let start = rng.clone();
    let full = cfg.battery_energy();
    schemes
        .iter()
        .map(|&s| {
            points
                .iter()
                .map(|&p| {
                    let mut rng = start.clone();
                    let fixed = sample_fixed(cfg, cache, opts, &mut rng)?;
                    let mut battery = vec![full; fixed.positions.len()];
                    let mut total = DropMetrics::default();
                    for _ in 0..opts.requests_per_user {
                        let snapshot = battery.clone();
                        let real = sample_round(
                            cfg,
                            pop,
                            opts,
                            &fixed,
                            s == Scheme::FullReuse,
                            |u| snapshot[u] > 0.0,
                            &mut rng,
                        )?;
                        total.absorb(settle_round(cfg, &real, s, p, Some(&mut battery)));
                    }
                    Ok(total)
                })
                .collect()
        })
        .collect()
}
