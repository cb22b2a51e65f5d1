//! Globally adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and the subdivision cap for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        QuadSpec {
            rel_tol,
            abs_tol,
            ..QuadSpec::default()
        }
    }

    pub fn with_max_subdivisions(self, max_subdivisions: usize) -> Self {
        QuadSpec {
            max_subdivisions,
            ..self
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_501_840,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn qk21<F>(f: &mut F, lo: f64, hi: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{lo}, {hi}]"
        )));
    }
    Ok(Segment {
        lo,
        hi,
        value,
        error,
    })
}

/// Integrates a fallible integrand; the first integrand error aborts.
pub fn try_integrate<F>(mut f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= hi) {
        return Err(Error::Domain("integration bounds must satisfy lo <= hi"));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let first = qk21(&mut f, lo, hi)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut splits = 0;
    loop {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            break;
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                lo,
                hi,
                max_subdivisions: spec.max_subdivisions,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval at machine resolution; further splitting cannot help.
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let left = qk21(&mut f, worst.lo, mid)?;
        let right = qk21(&mut f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if splits % 16 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let mut segs = heap.into_vec();
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(segs.iter().map(|s| s.value).sum())
}

/// ∫_lo^hi f(t) dt to within `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|t| Ok(f(t)), lo, hi, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|t| t * t, 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_reversed_intervals() {
        assert_eq!(integrate(|t| t, 2.0, 2.0, &QuadSpec::default()).unwrap(), 0.0);
        assert!(integrate(|t| t, 2.0, 1.0, &QuadSpec::default()).is_err());
    }

    #[test]
    fn sqrt_singularity_converges() {
        let v = integrate(|t| t.sqrt(), 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cap_is_reported() {
        let spec = QuadSpec::new(1e-14, 0.0).with_max_subdivisions(2);
        let r = integrate(|t| (1.0 / (t + 1e-6)).sin(), 0.0, 1.0, &spec);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = try_integrate(|_| Err(Error::Numerical("boom".into())), 0.0, 1.0, &QuadSpec::default());
        assert!(r.is_err());
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let f = |t: f64| (-t).exp() / (1.0 + t * t);
        let a = integrate(f, 0.0, 7.0, &QuadSpec::default()).unwrap();
        let b = integrate(f, 0.0, 7.0, &QuadSpec::default()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
