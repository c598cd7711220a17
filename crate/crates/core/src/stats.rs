//! Scalar statistical primitives: standard normal functions, univariate
//! Gaussian kernel estimators, Silverman bandwidths and Kendall's tau.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 / sqrt(2 pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of the standard normal cdf.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile needs p in (0,1), got {p}"
        )));
    }
    Ok(probit(p))
}

// Acklam's rational approximation (relative error ~1e-9) followed by one
// Halley step against the erfc-based cdf.
pub(crate) fn probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p == 0.5 {
        return 0.0;
    }
    // Work in the lower half and reflect, so that p and 1-p give exact negatives.
    if p > 0.5 {
        return -probit_lower(1.0 - p);
    }
    return probit_lower(p);

    fn probit_lower(p: f64) -> f64 {
        let x = if p < P_LOW {
            let q = (-2.0 * p.ln()).sqrt();
            (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
                / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
        } else {
            let q = p - 0.5;
            let r = q * q;
            (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
                / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
        };
        let e = std_normal_cdf(x) - p;
        let u = e / std_normal_pdf(x);
        x - u / (1.0 + 0.5 * x * u)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Multivariate rule-of-thumb bandwidth for one coordinate of a `dim`
/// dimensional kernel estimate: `sd * (4 / (dim + 2))^(1/(dim+4)) * n^(-1/(dim+4))`.
pub fn silverman_bandwidth(sample: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::Config("bandwidth dimension must be positive".into()));
    }
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "bandwidth needs at least 2 points, got {n}"
        )));
    }
    let sd = sample_std(sample);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::degenerate("sample"));
    }
    let d = dim as f64;
    let factor = (4.0 / (d + 2.0)).powf(1.0 / (d + 4.0));
    Ok(sd * factor * (n as f64).powf(-1.0 / (d + 4.0)))
}

// Beyond this many bandwidths a kernel's cdf contribution is 0 or 1 in f64.
const TAIL_CUTOFF: f64 = 9.0;
const EXPANSION_TERMS: usize = 20;
const DIRECT_CDF_LIMIT: usize = 256;
// Building the expansion only pays off for batches of at least this size.
const EXPANSION_MIN_BATCH: usize = 32;

/// One-dimensional Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel1D {
    centers: Vec<f64>,
    bandwidth: f64,
}

impl GaussianKernel1D {
    /// Centers are stored sorted ascending.
    pub fn new(mut centers: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InsufficientData("kernel model needs centers".into()));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("kernel centers must be finite".into()));
        }
        centers.sort_by(f64::total_cmp);
        Ok(Self { centers, bandwidth })
    }

    /// Fits a model to `sample` with the one-dimensional Silverman bandwidth.
    pub fn fit(sample: &[f64]) -> Result<Self> {
        let h = silverman_bandwidth(sample, 1)?;
        Self::new(sample.to_vec(), h)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let s: f64 = self.centers.iter().map(|c| std_normal_pdf((x - c) / h)).sum();
        s / (self.centers.len() as f64 * h)
    }

    /// Log density, stable far in the tails.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let mut max = f64::NEG_INFINITY;
        for c in &self.centers {
            let t = (x - c) / h;
            max = max.max(-0.5 * t * t);
        }
        let s: f64 = self
            .centers
            .iter()
            .map(|c| {
                let t = (x - c) / h;
                (-0.5 * t * t - max).exp()
            })
            .sum();
        max + s.ln() - LN_SQRT_2PI - (self.centers.len() as f64 * h).ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let s: f64 = self.centers.iter().map(|c| std_normal_cdf((x - c) / h)).sum();
        s / self.centers.len() as f64
    }

    /// Evaluates the cdf at many points. Large models use a truncated Taylor
    /// expansion of the kernel cdf around unit-bandwidth boxes of centers,
    /// which keeps the cost linear in the number of centers and agrees with
    /// [`Self::cdf`] to ~1e-15. Small batches are evaluated directly.
    pub fn cdf_many(&self, xs: &[f64]) -> Vec<f64> {
        if self.centers.len() <= DIRECT_CDF_LIMIT || xs.len() < EXPANSION_MIN_BATCH {
            return xs.iter().map(|&x| self.cdf(x)).collect();
        }
        let boxes = CdfExpansion::build(&self.centers, self.bandwidth);
        xs.iter().map(|&x| boxes.eval(x)).collect()
    }

    /// Solves `cdf(x) = p` by safeguarded Newton iteration inside a bracket.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "kernel quantile needs p in (0,1), got {p}"
            )));
        }
        let h = self.bandwidth;
        let mut lo = self.centers[0] - 10.0 * h;
        let mut hi = self.centers[self.centers.len() - 1] + 10.0 * h;
        while self.cdf(lo) > p {
            lo -= 10.0 * h;
        }
        while self.cdf(hi) < p {
            hi += 10.0 * h;
        }
        // Start from the matching quantile of a normal with the sample moments.
        let m = mean(&self.centers);
        let sd = (sample_std(&self.centers).powi(2) + h * h).sqrt();
        let mut x = (m + sd * probit(p)).clamp(lo, hi);
        for _ in 0..200 {
            let f = self.cdf(x) - p;
            if f.abs() <= 1e-13 {
                return Ok(x);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let newton = x - f / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        Ok(x)
    }

    /// Mean of the estimated distribution (equal to the center mean).
    pub fn mean(&self) -> f64 {
        mean(&self.centers)
    }
}

struct ExpansionBox {
    center: f64,
    count: usize,
    // A_k = sum_i (-delta_i)^k / k!, delta_i in bandwidth units.
    moments: [f64; EXPANSION_TERMS],
}

struct CdfExpansion {
    boxes: Vec<ExpansionBox>,
    // prefix[b] = number of centers in boxes before b.
    prefix: Vec<usize>,
    bandwidth: f64,
    n: usize,
}

impl CdfExpansion {
    fn build(sorted: &[f64], h: f64) -> Self {
        let origin = sorted[0];
        let mut boxes: Vec<ExpansionBox> = Vec::new();
        let mut current_index: Option<i64> = None;
        let mut start = 0;
        let flush = |boxes: &mut Vec<ExpansionBox>, idx: i64, members: &[f64]| {
            let center = origin + (idx as f64 + 0.5) * h;
            let mut moments = [0.0; EXPANSION_TERMS];
            for &c in members {
                let minus_delta = -(c - center) / h;
                let mut term = 1.0;
                for (k, m) in moments.iter_mut().enumerate() {
                    if k > 0 {
                        term *= minus_delta / k as f64;
                    }
                    *m += term;
                }
            }
            boxes.push(ExpansionBox {
                center,
                count: members.len(),
                moments,
            });
        };
        for (i, &c) in sorted.iter().enumerate() {
            let idx = ((c - origin) / h).floor() as i64;
            match current_index {
                Some(cur) if cur == idx => {}
                Some(cur) => {
                    flush(&mut boxes, cur, &sorted[start..i]);
                    start = i;
                    current_index = Some(idx);
                }
                None => current_index = Some(idx),
            }
        }
        if let Some(cur) = current_index {
            flush(&mut boxes, cur, &sorted[start..]);
        }
        let mut prefix = Vec::with_capacity(boxes.len() + 1);
        let mut acc = 0;
        prefix.push(0);
        for b in &boxes {
            acc += b.count;
            prefix.push(acc);
        }
        Self {
            boxes,
            prefix,
            bandwidth: h,
            n: sorted.len(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let reach = (TAIL_CUTOFF + 0.5) * h;
        let first = self.boxes.partition_point(|b| b.center < x - reach);
        let last = self.boxes.partition_point(|b| b.center <= x + reach);
        let mut total = self.prefix[first] as f64;
        for b in &self.boxes[first..last] {
            let t = (x - b.center) / h;
            let phi = std_normal_pdf(t);
            // Phi^(k)(t) = (-1)^(k-1) He_{k-1}(t) phi(t)
            let mut he_prev = 0.0;
            let mut he = 1.0;
            let mut series = 0.0;
            for k in 1..EXPANSION_TERMS {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                series += sign * b.moments[k] * he;
                let next = t * he - (k - 1) as f64 * he_prev;
                he_prev = he;
                he = next;
            }
            total += b.moments[0] * std_normal_cdf(t) + phi * series;
        }
        total / self.n as f64
    }
}

/// Paired sample for rank statistics.
#[derive(Debug, Clone, Copy)]
pub struct RankPairSample<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl<'a> RankPairSample<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Schema(format!(
                "paired sample lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData(
                "Kendall's tau needs at least 2 pairs".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn kendall_tau(&self) -> f64 {
        kendall_tau_unchecked(self.x, self.y)
    }
}

/// Kendall's tau-a: (concordant - discordant) / (n (n - 1) / 2), ties count
/// as neither. Runs in O(n log n) via merge-sort inversion counting.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(RankPairSample::new(x, y)?.kendall_tau())
}

fn tie_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut pairs = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            pairs += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    pairs + run * (run + 1) / 2
}

fn kendall_tau_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].total_cmp(&x[b]).then_with(|| y[a].total_cmp(&y[b]))
    });
    // total_cmp equality is bit equality
    let key = f64::to_bits;
    let x_ties = tie_pairs(order.iter().map(|&i| key(x[i])));
    let joint_ties = tie_pairs(order.iter().map(|&i| (key(x[i]), key(y[i]))));
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut buf);
    let y_ties = tie_pairs(ys.iter().map(|&v| key(v)));

    let total = (n as u64) * (n as u64 - 1) / 2;
    let numer = total as i128 - x_ties as i128 - y_ties as i128 + joint_ties as i128
        - 2 * discordant as i128;
    numer as f64 / total as f64
}

// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Maps `data` through the cdf of its own kernel density estimate.
pub fn pseudo_observations(data: &[f64]) -> Result<Vec<f64>> {
    let model = GaussianKernel1D::fit(data)?;
    Ok(model.cdf_many(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut s = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let dx = x[i].total_cmp(&x[j]) as i64;
                let dy = y[i].total_cmp(&y[j]) as i64;
                s += dx * dy;
            }
        }
        s as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn normal_pdf_values() {
        assert_eq!(std_normal_pdf(0.0), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_pdf(1.3), std_normal_pdf(-1.3));
        // exp(-0.5)/sqrt(2 pi) to 16 digits
        assert!((std_normal_pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        // Reference values from 30-digit arithmetic.
        assert!((std_normal_cdf(-3.0) - 1.349_898_031_630_094_5e-3).abs() < 1e-17);
        assert!((std_normal_cdf(-6.0) - 9.865_876_450_376_982e-10).abs() < 1e-22);
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn normal_quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.841_344_746_068_542_9).unwrap() - 1.0).abs() < 1e-9);
        for &p in &[1e-12, 1e-5, 0.01, 0.2, 0.4] {
            let a = std_normal_quantile(p).unwrap();
            let b = std_normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-6 * a.abs().max(1.0), "p={p}");
        }
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        for i in -600..=600 {
            let x = i as f64 * 0.01;
            let p = std_normal_cdf(x);
            let back = std_normal_quantile(p).unwrap();
            if x <= 5.0 {
                assert!((back - x).abs() < 1e-9, "x={x} back={back}");
            } else {
                // cdf is flatter than one ulp of p per 1e-9 here
                assert!(std_normal_cdf(back) == p || (back - x).abs() < 1e-9, "x={x}");
            }
        }
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let q = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(q) - p).abs() <= 1e-10);
        }
    }

    #[test]
    fn silverman_formula() {
        // Standardize a fixed sample to unit sd.
        let raw: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let sd = sample_std(&raw);
        let unit: Vec<f64> = raw.iter().map(|x| x / sd).collect();
        let h1 = silverman_bandwidth(&unit, 1).unwrap();
        let h2 = silverman_bandwidth(&unit, 2).unwrap();
        assert!((h1 - (4.0f64 / 3.0).powf(0.2) * 1000f64.powf(-0.2)).abs() < 1e-12);
        assert!((h1 - 0.2661).abs() < 1e-4);
        assert!((h2 - 0.3162).abs() < 1e-4);
        let scaled: Vec<f64> = unit.iter().map(|x| 3.5 * x).collect();
        assert!((silverman_bandwidth(&scaled, 1).unwrap() - 3.5 * h1).abs() < 1e-12);
        assert!(matches!(
            silverman_bandwidth(&[2.0, 2.0, 2.0], 1),
            Err(Error::DegenerateSample { .. })
        ));
        assert!(silverman_bandwidth(&[1.0], 1).is_err());
    }

    #[test]
    fn kde_hand_values() {
        let one = GaussianKernel1D::new(vec![0.0], 1.0).unwrap();
        assert!((one.pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(one.cdf(0.0), 0.5);
        assert!((one.quantile(0.841_344_7).unwrap() - 1.0).abs() < 1e-6);
        let two = GaussianKernel1D::new(vec![-1.0, 1.0], 1.0).unwrap();
        assert!((two.pdf(0.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!((two.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(two.quantile(0.5).unwrap().abs() < 1e-9);
        assert!((two.log_pdf(0.3) - two.pdf(0.3).ln()).abs() < 1e-13);
        assert!(two.quantile(1.0).is_err());
        assert!(GaussianKernel1D::new(vec![], 1.0).is_err());
        assert!(GaussianKernel1D::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn kde_cdf_derivative_is_pdf() {
        let m = GaussianKernel1D::new(vec![-0.7, 0.1, 0.4, 2.2, 3.0], 0.6).unwrap();
        let step = 1e-5;
        for i in -20..=40 {
            let x = i as f64 * 0.1;
            let fd = (m.cdf(x + step) - m.cdf(x - step)) / (2.0 * step);
            let pdf = m.pdf(x);
            assert!(((fd - pdf) / pdf).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn pseudo_observations_three_points() {
        let data = [-1.0, 0.0, 1.0];
        let u = pseudo_observations(&data).unwrap();
        // sd = 1, h = (4/3)^(1/5) 3^(-1/5)
        let h = (4.0f64 / 9.0).powf(0.2);
        for (ui, &x) in u.iter().zip(&data) {
            let expected = data.iter().map(|c| std_normal_cdf((x - c) / h)).sum::<f64>() / 3.0;
            assert!((ui - expected).abs() < 1e-15);
        }
        assert!((u[1] - 0.5).abs() < 1e-15);
        assert!(u.windows(2).all(|w| w[0] < w[1]));
        assert!(pseudo_observations(&[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn expansion_matches_direct_cdf() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let centers: Vec<f64> = (0..3000).map(|_| {
            let a = next();
            let b = next();
            if a < 0.7 { 4.0 * b } else { 20.0 + b * b * 5.0 }
        }).collect();
        let m = GaussianKernel1D::fit(&centers).unwrap();
        let queries: Vec<f64> = (0..500).map(|i| -5.0 + i as f64 * 0.07).chain(centers.iter().copied().take(300)).collect();
        let fast = m.cdf_many(&queries);
        for (x, f) in queries.iter().zip(fast) {
            assert!((m.cdf(*x) - f).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn kendall_tau_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((kendall_tau(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn tau_matches_brute_force(pairs in proptest::collection::vec((0i32..8, 0i32..8), 2..120)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            prop_assert_eq!(kendall_tau(&x, &y).unwrap(), brute_tau(&x, &y));
        }

        #[test]
        fn tau_invariant_under_monotone_maps(xy in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..80)) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let cy: Vec<f64> = y.iter().map(|v| v * v * v).collect();
            prop_assert_eq!(kendall_tau(&x, &y).unwrap(), kendall_tau(&ex, &cy).unwrap());
        }

        #[test]
        fn kde_quantile_roundtrip(centers in proptest::collection::vec(-5.0f64..5.0, 3..40), t in 0.0f64..1.0) {
            prop_assume!(sample_std(&centers) > 1e-3);
            let m = GaussianKernel1D::fit(&centers).unwrap();
            let lo = m.centers()[0];
            let hi = m.centers()[m.len() - 1];
            let x = lo + t * (hi - lo);
            let p = m.cdf(x);
            let back = m.quantile(p).unwrap();
            prop_assert!((back - x).abs() < 1e-6, "x={} back={}", x, back);
            prop_assert!(m.cdf(x + 1e-3) > p);
        }

        #[test]
        fn silverman_is_scale_equivariant(xs in proptest::collection::vec(-10.0f64..10.0, 3..50), c in 0.01f64..100.0) {
            prop_assume!(sample_std(&xs) > 1e-6);
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let h = silverman_bandwidth(&xs, 1).unwrap();
            let hs = silverman_bandwidth(&scaled, 1).unwrap();
            prop_assert!((hs - c * h).abs() <= 1e-10 * hs);
        }
    }
}
