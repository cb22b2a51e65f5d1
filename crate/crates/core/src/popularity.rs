//! File popularity, caching policies and the offloading opportunity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zipf request distribution over a catalog of `N_f` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Popularity {
    pmf: Vec<f64>,
    exponent: f64,
}

impl Popularity {
    /// p_r(i) = i^(−β) / Σ_k k^(−β), i = 1..N_f.
    pub fn zipf(catalog_size: usize, exponent: f64) -> Result<Self> {
        if catalog_size == 0 {
            return Err(Error::Domain("catalog must hold at least one file"));
        }
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(Error::Domain("Zipf exponent must be non-negative"));
        }
        let weights: Vec<f64> = (1..=catalog_size)
            .map(|i| (i as f64).powf(-exponent))
            .collect();
        // Summing smallest first keeps the normalization tight for large N_f.
        let total: f64 = weights.iter().rev().sum();
        Ok(Popularity {
            pmf: weights.into_iter().map(|w| w / total).collect(),
            exponent,
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }
}

pub fn zipf(catalog_size: usize, exponent: f64) -> Result<Popularity> {
    Popularity::zipf(catalog_size, exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachingPolicy {
    Optimal,
    Uniform,
    Popularity,
}

impl std::fmt::Display for CachingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CachingPolicy::Optimal => "optimal",
            CachingPolicy::Uniform => "uniform",
            CachingPolicy::Popularity => "popularity",
        })
    }
}

impl std::str::FromStr for CachingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(CachingPolicy::Optimal),
            "uniform" => Ok(CachingPolicy::Uniform),
            "popularity" => Ok(CachingPolicy::Popularity),
            other => Err(Error::InvalidValue(format!("unknown caching policy `{other}`"))),
        }
    }
}

/// Probability that a user caches each file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachingDistribution {
    pmf: Vec<f64>,
    policy: CachingPolicy,
    cutoff: usize,
}

impl CachingDistribution {
    /// Wraps an arbitrary pmf, e.g. one produced by an external solver.
    pub fn from_pmf(pmf: Vec<f64>, policy: CachingPolicy) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("caching pmf entries must be finite and non-negative"));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!("caching pmf sums to {sum}")));
        }
        let cutoff = pmf.iter().rposition(|&p| p > 0.0).map_or(pmf.len(), |k| k + 1);
        Ok(CachingDistribution {
            pmf,
            policy,
            cutoff,
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn policy(&self) -> CachingPolicy {
        self.policy
    }

    /// Index (1-based) of the last file with a nonzero caching probability.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }
}

/// k·ln k − ln k!, the left side of the cutoff test.
fn cutoff_gap(k: usize, ln_fact: &[f64]) -> f64 {
    let kf = k as f64;
    kf * kf.ln() - ln_fact[k]
}

/// Solves max Σ p_r(i)(1 − exp(−λπr_c²·p_c(i))) over the probability simplex.
pub fn optimal_caching(density: f64, collab_distance: f64, pop: &Popularity) -> Result<CachingDistribution> {
    if !(density > 0.0) || !(collab_distance > 0.0) {
        return Err(Error::Domain("density and collaboration distance must be positive"));
    }
    let n = pop.len();
    let beta = pop.exponent();
    if beta == 0.0 {
        return CachingDistribution::from_pmf(vec![1.0 / n as f64; n], CachingPolicy::Optimal);
    }
    let area = density * PI * collab_distance * collab_distance;
    let target = area / beta;

    // ln_fact[k] = ln k!
    let mut ln_fact = vec![0.0; n + 2];
    for k in 1..=n + 1 {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }

    let cut = if cutoff_gap(n, &ln_fact) < target {
        n
    } else {
        let lo = ((target.ceil() - 2.0).max(1.0)) as usize;
        let hi_f = (target + (2.0 * PI * n as f64).sqrt().ln()).floor() + 2.0;
        let hi = hi_f.min(n as f64) as usize;
        (lo..=hi)
            .find(|&k| cutoff_gap(k, &ln_fact) <= target && target <= cutoff_gap(k + 1, &ln_fact))
            .ok_or_else(|| Error::Numerical(format!("no caching cutoff in [{lo}, {hi}]")))?
    };

    let k = cut as f64;
    let scale = beta / area;
    let mut pmf = vec![0.0; n];
    for (i, p) in pmf.iter_mut().enumerate().take(cut) {
        let v = (1.0 + scale * (ln_fact[cut] - k * ((i + 1) as f64).ln())) / k;
        *p = v.max(0.0);
    }
    let sum: f64 = pmf.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > 1e-9 {
        return Err(Error::Numerical(format!("optimal caching pmf sums to {sum}")));
    }
    if dev > 1e-12 {
        pmf.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(CachingDistribution {
        cutoff: pmf.iter().rposition(|&p| p > 0.0).map_or(n, |k| k + 1),
        pmf,
        policy: CachingPolicy::Optimal,
    })
}

pub fn baseline_caching(policy: CachingPolicy, pop: &Popularity) -> Result<CachingDistribution> {
    let n = pop.len();
    let pmf = match policy {
        CachingPolicy::Uniform => vec![1.0 / n as f64; n],
        CachingPolicy::Popularity => pop.pmf().to_vec(),
        CachingPolicy::Optimal => {
            return Err(Error::InvalidValue("optimal is not a baseline policy".into()))
        }
    };
    CachingDistribution::from_pmf(pmf, policy)
}

/// Builds the distribution for any policy; the optimal one depends on λ and r_c.
pub fn caching_for(
    policy: CachingPolicy,
    density: f64,
    collab_distance: f64,
    pop: &Popularity,
) -> Result<CachingDistribution> {
    match policy {
        CachingPolicy::Optimal => optimal_caching(density, collab_distance, pop),
        other => baseline_caching(other, pop),
    }
}

/// p_o = Σ p_r(i)(1 − exp(−λ·p_c(i)·π·r_c²)).
pub fn offloading_opportunity(
    density: f64,
    collab_distance: f64,
    pop: &Popularity,
    cache: &CachingDistribution,
) -> f64 {
    let area = density * PI * collab_distance * collab_distance;
    pop.pmf()
        .iter()
        .zip(cache.pmf())
        .map(|(&pr, &pc)| pr * -(-area * pc).exp_m1())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_small_catalogs() {
        assert_eq!(zipf(4, 0.0).unwrap().pmf(), &[0.25; 4]);
        let p = zipf(3, 1.0).unwrap();
        let h3 = 11.0 / 6.0;
        for (i, &v) in p.pmf().iter().enumerate() {
            assert!((v - 1.0 / ((i + 1) as f64 * h3)).abs() < 1e-15);
        }
    }

    #[test]
    fn zipf_head_of_large_catalog() {
        let h: f64 = (1..=1000).map(|k| 1.0 / k as f64).sum();
        let p = zipf(1000, 1.0).unwrap();
        assert!((p.pmf()[0] - 1.0 / h).abs() < 1e-14);
        assert!((p.pmf()[0] - 0.13359).abs() < 1e-5);
    }

    #[test]
    fn three_file_hand_value() {
        let pop = zipf(3, 1.0).unwrap();
        let c = optimal_caching(0.01, 20.0, &pop).unwrap();
        let want = [0.38086, 0.32570, 0.29344];
        for (a, b) in c.pmf().iter().zip(want) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        assert_eq!(c.cutoff(), 3);
        let po = offloading_opportunity(0.01, 20.0, &pop, &c);
        assert!((po - 0.98633).abs() < 1e-4, "{po}");
    }

    #[test]
    fn tiny_disk_caches_only_the_head() {
        let pop = zipf(1000, 1.0).unwrap();
        let c = optimal_caching(0.01, 1.0, &pop).unwrap();
        assert_eq!(c.pmf()[0], 1.0);
        assert!(c.pmf()[1..].iter().all(|&p| p == 0.0));
        assert_eq!(c.cutoff(), 1);
    }

    #[test]
    fn large_disk_is_nearly_uniform() {
        let pop = zipf(1000, 1.0).unwrap();
        let c = optimal_caching(0.01, 500.0, &pop).unwrap();
        let dev = c.pmf().iter().map(|p| (p - 1e-3).abs()).fold(0.0, f64::max);
        assert!(dev < 0.002, "{dev}");
    }

    #[test]
    fn flat_popularity_gives_uniform_cache() {
        let pop = zipf(7, 0.0).unwrap();
        let c = optimal_caching(0.01, 50.0, &pop).unwrap();
        assert!(c.pmf().iter().all(|&p| (p - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn single_cached_file_reduces_opportunity() {
        let pop = zipf(5, 0.8).unwrap();
        let c = CachingDistribution::from_pmf(vec![1.0, 0.0, 0.0, 0.0, 0.0], CachingPolicy::Popularity)
            .unwrap();
        let po = offloading_opportunity(0.01, 30.0, &pop, &c);
        let want = pop.pmf()[0] * (1.0 - (-0.01 * PI * 900.0f64).exp());
        assert!((po - want).abs() < 1e-15);
        assert_eq!(offloading_opportunity(0.01, 0.0, &pop, &c), 0.0);
    }

    #[test]
    fn baselines() {
        let pop = zipf(3, 1.0).unwrap();
        assert_eq!(baseline_caching(CachingPolicy::Popularity, &pop).unwrap().pmf(), pop.pmf());
        assert_eq!(
            baseline_caching(CachingPolicy::Uniform, &zipf(4, 1.0).unwrap()).unwrap().pmf(),
            &[0.25; 4]
        );
        assert!(baseline_caching(CachingPolicy::Optimal, &pop).is_err());
    }
}
