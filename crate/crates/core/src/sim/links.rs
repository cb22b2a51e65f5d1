//! Cache placement, requests and D2D link establishment.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::geometry::Cell;
use crate::error::{Error, Result};
use crate::popularity::{CachingDistribution, Popularity};

/// Files held by each user, `slots` per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheTable {
    slots: usize,
    files: Vec<u32>,
}

impl CacheTable {
    pub fn new(slots: usize, files: Vec<u32>) -> Self {
        assert!(slots > 0 && files.len() % slots == 0);
        CacheTable { slots, files }
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn users(&self) -> usize {
        self.files.len() / self.slots
    }

    pub fn of(&self, user: usize) -> &[u32] {
        &self.files[user * self.slots..(user + 1) * self.slots]
    }

    pub fn holds(&self, user: usize, file: u32) -> bool {
        self.of(user).contains(&file)
    }

    /// Users caching each file.
    pub fn helpers_by_file(&self, catalog: usize) -> Vec<Vec<u32>> {
        let mut by_file = vec![Vec::new(); catalog];
        for u in 0..self.users() {
            for &f in self.of(u) {
                by_file[f as usize].push(u as u32);
            }
        }
        by_file
    }
}

/// Draws `slots` distinct files per user from the caching pmf (sequential
/// draws without replacement).
pub fn assign_caches<R: Rng + ?Sized>(
    users: usize,
    cache: &CachingDistribution,
    slots: usize,
    rng: &mut R,
) -> Result<CacheTable> {
    if slots == 0 {
        return Err(Error::Domain("each user caches at least one file"));
    }
    let support = cache.pmf().iter().filter(|&&p| p > 0.0).count();
    if slots > support {
        return Err(Error::InvalidValue(format!(
            "cannot cache {slots} distinct files from a pmf with {support} nonzero entries"
        )));
    }
    let dist = WeightedIndex::new(cache.pmf())
        .map_err(|e| Error::Numerical(format!("caching pmf: {e}")))?;
    let mut files = Vec::with_capacity(users * slots);
    for _ in 0..users {
        let start = files.len();
        while files.len() - start < slots {
            let mut pick = None;
            for _ in 0..64 {
                let f = dist.sample(rng) as u32;
                if !files[start..].contains(&f) {
                    pick = Some(f);
                    break;
                }
            }
            let f = match pick {
                Some(f) => f,
                None => {
                    // Heavily skewed pmf: renormalize over the files not yet held.
                    let held = &files[start..];
                    let rest: Vec<f64> = cache
                        .pmf()
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| if held.contains(&(i as u32)) { 0.0 } else { p })
                        .collect();
                    WeightedIndex::new(&rest)
                        .map_err(|e| Error::Numerical(format!("caching pmf: {e}")))?
                        .sample(rng) as u32
                }
            };
            files.push(f);
        }
    }
    Ok(CacheTable::new(slots, files))
}

/// One Zipf-distributed request per user.
pub fn draw_requests<R: Rng + ?Sized>(users: usize, pop: &Popularity, rng: &mut R) -> Result<Vec<u32>> {
    let dist = WeightedIndex::new(pop.pmf()).map_err(|e| Error::Numerical(format!("popularity: {e}")))?;
    Ok((0..users).map(|_| dist.sample(rng) as u32).collect())
}

/// What happens when several receivers pick the same helper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkPolicy {
    /// Every receiver connects to its nearest helper; a helper may serve
    /// several receivers at once, as in the Voronoi-cell activity model.
    #[default]
    Shared,
    /// A helper serves at most one receiver. Pairs are matched greedily by
    /// increasing distance, so a helper goes to its nearest requester and the
    /// others fall back to their next-nearest free helper within r_c.
    Exclusive,
}

impl std::str::FromStr for LinkPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(LinkPolicy::Shared),
            "exclusive" => Ok(LinkPolicy::Exclusive),
            other => Err(Error::InvalidValue(format!("unknown link policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub rx: u32,
    pub tx: u32,
    pub file: u32,
    pub distance: f64,
}

/// Outcome of link establishment for one request round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkSet {
    pub links: Vec<Link>,
    /// Requests served from the requester's own cache.
    pub self_served: usize,
    /// Requests with at least one eligible helper (or their own cache) in range.
    pub found: usize,
}

/// Connects every requester to a helper within `collab_distance`.
///
/// `eligible(u)` says whether user `u` may still act as a helper.
#[allow(clippy::too_many_arguments)]
pub fn establish_links<E>(
    cell: &Cell,
    positions: &[[f64; 2]],
    caches: &CacheTable,
    helpers: &[Vec<u32>],
    requests: &[u32],
    collab_distance: f64,
    self_offload: bool,
    policy: LinkPolicy,
    eligible: E,
) -> LinkSet
where
    E: Fn(usize) -> bool,
{
    let rc2 = collab_distance * collab_distance;
    let mut out = LinkSet::default();
    let mut candidates: Vec<(f64, u32, u32)> = Vec::new();
    for (u, &f) in requests.iter().enumerate() {
        if self_offload && caches.holds(u, f) {
            out.self_served += 1;
            out.found += 1;
            continue;
        }
        let mut best: Option<(f64, u32)> = None;
        let mut any = false;
        for &h in &helpers[f as usize] {
            if h as usize == u || !eligible(h as usize) {
                continue;
            }
            let d2 = cell.dist2(positions[u], positions[h as usize]);
            if d2 > rc2 {
                continue;
            }
            any = true;
            match policy {
                LinkPolicy::Shared => {
                    if best.is_none_or(|(b, bh)| d2 < b || (d2 == b && h < bh)) {
                        best = Some((d2, h));
                    }
                }
                LinkPolicy::Exclusive => candidates.push((d2, u as u32, h)),
            }
        }
        if any {
            out.found += 1;
        }
        if let Some((d2, h)) = best {
            out.links.push(Link {
                rx: u as u32,
                tx: h,
                file: f,
                distance: d2.sqrt(),
            });
        }
    }
    if policy == LinkPolicy::Exclusive {
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut rx_done = vec![false; requests.len()];
        let mut tx_busy = vec![false; positions.len()];
        for (d2, u, h) in candidates {
            if rx_done[u as usize] || tx_busy[h as usize] {
                continue;
            }
            rx_done[u as usize] = true;
            tx_busy[h as usize] = true;
            out.links.push(Link {
                rx: u,
                tx: h,
                file: requests[u as usize],
                distance: d2.sqrt(),
            });
        }
        out.links.sort_by_key(|l| l.rx);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::CachingPolicy;
    use crate::sim::geometry::Boundary;

    fn cell() -> Cell {
        Cell::new(500.0, Boundary::Open)
    }

    #[test]
    fn nobody_in_range_means_no_link() {
        let pos = [[0.0, 0.0], [300.0, 0.0]];
        let caches = CacheTable::new(1, vec![1, 0]);
        let helpers = caches.helpers_by_file(2);
        let ls = establish_links(&cell(), &pos, &caches, &helpers, &[0, 0], 100.0, false, LinkPolicy::Shared, |_| true);
        assert!(ls.links.is_empty());
        assert_eq!(ls.found, 0);
    }

    #[test]
    fn single_pair() {
        let pos = [[0.0, 0.0], [30.0, 40.0]];
        let caches = CacheTable::new(1, vec![1, 0]);
        let helpers = caches.helpers_by_file(2);
        let ls = establish_links(&cell(), &pos, &caches, &helpers, &[0, 1], 100.0, false, LinkPolicy::Shared, |_| true);
        assert_eq!(ls.links.len(), 2);
        assert_eq!(ls.links[0].tx, 1);
        assert!((ls.links[0].distance - 50.0).abs() < 1e-12);
    }

    #[test]
    fn exclusive_helper_goes_to_nearer_requester() {
        // users 0 and 1 request file 0, only user 2 caches it
        let pos = [[0.0, 0.0], [70.0, 0.0], [50.0, 0.0]];
        let caches = CacheTable::new(1, vec![1, 1, 0]);
        let helpers = caches.helpers_by_file(2);
        let ls = establish_links(&cell(), &pos, &caches, &helpers, &[0, 0, 1], 100.0, false, LinkPolicy::Exclusive, |_| true);
        let to_two: Vec<_> = ls.links.iter().filter(|l| l.tx == 2).collect();
        assert_eq!(to_two.len(), 1);
        assert_eq!(to_two[0].rx, 1);
        assert_eq!(ls.found, 3);
        let shared = establish_links(&cell(), &pos, &caches, &helpers, &[0, 0, 1], 100.0, false, LinkPolicy::Shared, |_| true);
        assert_eq!(shared.links.iter().filter(|l| l.tx == 2).count(), 2);
    }

    #[test]
    fn self_offload_toggle() {
        let pos = [[0.0, 0.0], [10.0, 0.0]];
        let caches = CacheTable::new(1, vec![0, 0]);
        let helpers = caches.helpers_by_file(1);
        let off = establish_links(&cell(), &pos, &caches, &helpers, &[0, 0], 100.0, false, LinkPolicy::Shared, |_| true);
        assert_eq!((off.links.len(), off.self_served), (2, 0));
        let on = establish_links(&cell(), &pos, &caches, &helpers, &[0, 0], 100.0, true, LinkPolicy::Shared, |_| true);
        assert_eq!((on.links.len(), on.self_served), (0, 2));
    }

    #[test]
    fn ineligible_helpers_are_skipped() {
        let pos = [[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]];
        let caches = CacheTable::new(1, vec![1, 0, 0]);
        let helpers = caches.helpers_by_file(2);
        let ls = establish_links(&cell(), &pos, &caches, &helpers, &[0, 1, 1], 100.0, false, LinkPolicy::Shared, |u| u != 1);
        assert_eq!(ls.links.iter().find(|l| l.rx == 0).unwrap().tx, 2);
    }

    #[test]
    fn full_catalog_caches() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let c = CachingDistribution::from_pmf(vec![0.7, 0.2, 0.1], CachingPolicy::Popularity).unwrap();
        let t = assign_caches(5, &c, 3, &mut rng).unwrap();
        for u in 0..5 {
            let mut files = t.of(u).to_vec();
            files.sort();
            assert_eq!(files, vec![0, 1, 2]);
        }
        assert!(assign_caches(5, &c, 4, &mut rng).is_err());
    }
}
