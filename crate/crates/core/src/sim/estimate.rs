use serde::{Deserialize, Serialize};

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub n_drops: usize,
}

impl McEstimate {
    /// Non-finite samples (drops where the metric is undefined) are skipped.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for &x in samples.iter().filter(|x| x.is_finite()) {
            n += 1;
            sum += x;
            sum_sq += x * x;
        }
        if n == 0 {
            return McEstimate {
                mean: f64::NAN,
                half_width_95: f64::NAN,
                n_drops: 0,
            };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let half_width_95 = if n > 1 {
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            1.959963984540054 * (var / nf).sqrt()
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean,
            half_width_95,
            n_drops: n,
        }
    }

    /// True when |mean − reference| ≤ max(floor, k·half_width).
    pub fn agrees_with(&self, reference: f64, floor: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= floor.max(k * self.half_width_95)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        let e = McEstimate::from_samples(&[0.5; 10]);
        assert_eq!(e.mean, 0.5);
        assert!(e.half_width_95.abs() < 1e-12);
        assert_eq!(e.n_drops, 10);
    }

    #[test]
    fn hand_values() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, f64::NAN]);
        assert_eq!(e.n_drops, 3);
        assert!((e.mean - 2.0).abs() < 1e-15);
        assert!((e.half_width_95 - 1.959963984540054 / 3f64.sqrt()).abs() < 1e-12);
    }
}
