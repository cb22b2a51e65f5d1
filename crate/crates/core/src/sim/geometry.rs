//! User placement in the square cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// How distances are measured at the cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Opposite edges are identified, so every user sees a statistically
    /// identical neighbourhood as in the infinite-plane analysis.
    #[default]
    Torus,
    /// Plain square; users near an edge have fewer neighbours.
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "torus" => Ok(Boundary::Torus),
            "open" => Ok(Boundary::Open),
            other => Err(crate::Error::InvalidValue(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub side: f64,
    pub boundary: Boundary,
}

impl Cell {
    pub fn new(side: f64, boundary: Boundary) -> Self {
        Cell { side, boundary }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    #[inline]
    pub fn dist2(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut dx = (a[0] - b[0]).abs();
        let mut dy = (a[1] - b[1]).abs();
        if self.boundary == Boundary::Torus {
            dx = dx.min(self.side - dx);
            dy = dy.min(self.side - dy);
        }
        dx * dx + dy * dy
    }
}

/// Poisson(λ·side²) users placed uniformly on [0, side)².
pub fn sample_ppp_with<R: Rng + ?Sized>(density: f64, side: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let mean = density * side * side;
    let count = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..count)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect()
}

/// Same as [`sample_ppp_with`] on a generator seeded from `seed`.
pub fn sample_ppp(density: f64, side: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ppp_with(density, side, &mut rng)
}
