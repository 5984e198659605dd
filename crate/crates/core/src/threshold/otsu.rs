//! Two- and three-class Otsu threshold selection on 256-bin histograms.
//!
//! The between-class variance of a partition into classes with pixel counts
//! `n_c` and first moments `s_c` (sum of bin index times count) is
//!
//! ```text
//! sigma_b^2 = sum_c P_c (mu_c - mu)^2 = (sum_c s_c^2 / n_c) / N - (S / N)^2
//! ```
//!
//! so maximizing it amounts to maximizing `sum_c s_c^2 / n_c` over the
//! non-empty classes. Candidates are scanned in ascending (lexicographic)
//! order and only a strictly larger score replaces the incumbent, so ties go
//! to the smallest thresholds. Scores are compared in `f64` and re-checked
//! with exact integer arithmetic whenever two of them are close.

use std::cmp::Ordering;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINS: usize = 256;

/// Quantizes a unit intensity to its 8-bit bin, `floor(v * 255 + 0.5)`.
#[inline]
pub fn quantize(v: f32) -> u8 {
    ((v as f64) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; BINS],
    total: u64,
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; BINS]) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn from_bins(bins: impl IntoIterator<Item = u8>) -> Self {
        let mut counts = [0u64; BINS];
        for b in bins {
            counts[b as usize] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_values<'a>(values: impl IntoIterator<Item = &'a f32>) -> Self {
        Self::from_bins(values.into_iter().map(|&v| quantize(v)))
    }

    pub fn counts(&self) -> &[u64; BINS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized bin probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    /// Number of bins holding at least one pixel.
    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn prefix(&self) -> (Vec<u64>, Vec<u64>) {
        let mut n = Vec::with_capacity(BINS);
        let mut s = Vec::with_capacity(BINS);
        let (mut cn, mut cs) = (0u64, 0u64);
        for (i, &c) in self.counts.iter().enumerate() {
            cn += c;
            cs += c * i as u64;
            n.push(cn);
            s.push(cs);
        }
        (n, s)
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::Data("histogram is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OtsuMode {
    #[serde(alias = "two-class", alias = "2")]
    Two,
    #[default]
    #[serde(alias = "three-class", alias = "3")]
    Three,
}

impl std::str::FromStr for OtsuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two" | "two-class" | "2" => Ok(OtsuMode::Two),
            "three" | "three-class" | "3" => Ok(OtsuMode::Three),
            other => Err(Error::Parameter(format!(
                "unknown otsu mode {other:?}, expected two|three"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuResult3 {
    pub k1: u8,
    pub k2: u8,
    /// Between-class variance in squared bin units.
    pub sigma_b: f64,
}

/// A class as (pixel count, first moment).
type Class = (u64, u64);

fn float_score(classes: &[Class]) -> f64 {
    classes
        .iter()
        .filter(|c| c.0 > 0)
        .map(|&(n, s)| {
            let s = s as f64;
            s * s / n as f64
        })
        .sum()
}

// sum of s^2/n as a single fraction, u128 when it fits
fn exact_fraction_u128(classes: &[Class]) -> Option<(u128, u128)> {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for &(n, s) in classes.iter().filter(|c| c.0 > 0) {
        let s2 = (s as u128).checked_mul(s as u128)?;
        // num/den + s2/n
        num = num
            .checked_mul(n as u128)?
            .checked_add(s2.checked_mul(den)?)?;
        den = den.checked_mul(n as u128)?;
    }
    Some((num, den))
}

fn exact_fraction_big(classes: &[Class]) -> (BigUint, BigUint) {
    let mut num = BigUint::from(0u32);
    let mut den = BigUint::from(1u32);
    for &(n, s) in classes.iter().filter(|c| c.0 > 0) {
        let s2 = BigUint::from(s) * BigUint::from(s);
        num = num * BigUint::from(n) + s2 * &den;
        den *= BigUint::from(n);
    }
    (num, den)
}

fn exact_cmp(a: &[Class], b: &[Class]) -> Ordering {
    if let (Some((na, da)), Some((nb, db))) = (exact_fraction_u128(a), exact_fraction_u128(b)) {
        if let (Some(l), Some(r)) = (na.checked_mul(db), nb.checked_mul(da)) {
            return l.cmp(&r);
        }
    }
    let (na, da) = exact_fraction_big(a);
    let (nb, db) = exact_fraction_big(b);
    (na * db).cmp(&(nb * da))
}

/// Best-so-far tracker implementing the strict-improvement rule.
struct Best<const K: usize> {
    classes: [Class; K],
    score: f64,
}

impl<const K: usize> Best<K> {
    /// Returns true when `cand` scores strictly higher than the incumbent.
    fn improves(&self, cand: &[Class; K], score: f64) -> bool {
        let scale = score.abs().max(self.score.abs());
        let tol = 1e-9 * scale;
        if score > self.score + tol {
            return true;
        }
        if score < self.score - tol {
            return false;
        }
        if *cand == self.classes {
            return false;
        }
        // same partition up to class order and empty classes
        let (mut a, mut b) = (*cand, self.classes);
        a.sort_unstable();
        b.sort_unstable();
        if a == b {
            return false;
        }
        exact_cmp(&a, &b) == Ordering::Greater
    }
}

fn between_class_variance(score: f64, total: u64, moment: u64) -> f64 {
    let n = total as f64;
    let mu = moment as f64 / n;
    (score / n - mu * mu).max(0.0)
}

/// Two-class Otsu: returns `k` such that `{i <= k}` and `{i > k}` maximize
/// the between-class variance (smallest `k` on ties).
pub fn otsu2(h: &Histogram256) -> Result<u8> {
    h.ensure_nonempty()?;
    let (cn, cs) = h.prefix();
    let (total, moment) = (h.total, cs[BINS - 1]);
    let classes_at = |k: usize| [(cn[k], cs[k]), (total - cn[k], moment - cs[k])];
    let mut best = Best {
        classes: classes_at(0),
        score: float_score(&classes_at(0)),
    };
    let mut best_k = 0usize;
    for k in 1..BINS {
        // an empty bin repeats the partition of k - 1
        if h.counts[k] == 0 {
            continue;
        }
        let c = classes_at(k);
        let score = float_score(&c);
        if best.improves(&c, score) {
            best = Best { classes: c, score };
            best_k = k;
        }
    }
    Ok(best_k as u8)
}

/// Three-class Otsu over `C1 = [0, k1]`, `C2 = (k1, k2]`, `C3 = (k2, 255]`
/// with `k1 <= k2`; empty classes contribute nothing. Ties go to the
/// lexicographically smallest `(k1, k2)`.
pub fn otsu3(h: &Histogram256) -> Result<OtsuResult3> {
    h.ensure_nonempty()?;
    let (cn, cs) = h.prefix();
    let (total, moment) = (h.total, cs[BINS - 1]);
    let classes_at = |k1: usize, k2: usize| {
        [
            (cn[k1], cs[k1]),
            (cn[k2] - cn[k1], cs[k2] - cs[k1]),
            (total - cn[k2], moment - cs[k2]),
        ]
    };
    let first = classes_at(0, 0);
    let mut best = Best {
        classes: first,
        score: float_score(&first),
    };
    let mut best_k = (0usize, 0usize);
    for k1 in 0..BINS {
        // empty bins repeat an earlier (lexicographically smaller) partition
        if k1 > 0 && h.counts[k1] == 0 {
            continue;
        }
        for k2 in k1..BINS {
            if (k1, k2) == (0, 0) || (k2 > k1 && h.counts[k2] == 0) {
                continue;
            }
            let c = classes_at(k1, k2);
            let score = float_score(&c);
            if best.improves(&c, score) {
                best = Best { classes: c, score };
                best_k = (k1, k2);
            }
        }
    }
    Ok(OtsuResult3 {
        k1: best_k.0 as u8,
        k2: best_k.1 as u8,
        sigma_b: between_class_variance(best.score, total, moment),
    })
}

/// Crack threshold for a histogram: the two-class threshold, or the lowest
/// three-class threshold that bounds a non-empty dark class. When the
/// optimal three-class split leaves `C1` empty (at most two occupied bins),
/// `k2` is the effective lower threshold.
pub fn crack_threshold(h: &Histogram256, mode: OtsuMode) -> Result<u8> {
    match mode {
        OtsuMode::Two => otsu2(h),
        OtsuMode::Three => {
            let r = otsu3(h)?;
            let dark = h.counts[..=r.k1 as usize].iter().sum::<u64>();
            Ok(if dark == 0 { r.k2 } else { r.k1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spikes(bins: &[(usize, u64)]) -> Histogram256 {
        let mut c = [0u64; BINS];
        for &(b, n) in bins {
            c[b] = n;
        }
        Histogram256::from_counts(c)
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(1.0 / 255.0), 1);
        assert_eq!(quantize(0.49 / 255.0), 0);
    }

    #[test]
    fn bimodal_ties_go_to_smallest_k() {
        assert_eq!(otsu2(&spikes(&[(10, 50), (240, 50)])).unwrap(), 10);
    }

    #[test]
    fn single_bin_is_degenerate() {
        let h = spikes(&[(77, 12)]);
        assert_eq!(otsu2(&h).unwrap(), 0);
        let r = otsu3(&h).unwrap();
        assert_eq!((r.k1, r.k2), (0, 0));
        assert_eq!(r.sigma_b, 0.0);
    }

    #[test]
    fn trimodal_picks_spike_separators() {
        let r = otsu3(&spikes(&[(10, 30), (128, 30), (240, 30)])).unwrap();
        assert_eq!((r.k1, r.k2), (10, 128));
        // classes are the three spikes: variance of {10,128,240}
        let mu = (10.0 + 128.0 + 240.0) / 3.0;
        let expected = [10.0, 128.0, 240.0]
            .iter()
            .map(|v: &f64| (v - mu).powi(2) / 3.0)
            .sum::<f64>();
        assert!((r.sigma_b - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_histogram_is_an_error() {
        let h = Histogram256::from_counts([0; BINS]);
        assert!(matches!(otsu2(&h), Err(Error::Data(_))));
        assert!(matches!(otsu3(&h), Err(Error::Data(_))));
    }

    #[test]
    fn exact_comparison_paths_agree() {
        let a = [(3, 10), (5, 400), (2, 500)];
        let b = [(4, 14), (4, 396), (2, 500)];
        let fa = float_score(&a);
        let fb = float_score(&b);
        let expected = fa.partial_cmp(&fb).unwrap();
        assert_eq!(exact_cmp(&a, &b), expected);
        let (na, da) = exact_fraction_big(&a);
        let (nb, db) = exact_fraction_big(&b);
        assert_eq!((na * db).cmp(&(nb * da)), expected);
    }

    #[test]
    fn huge_counts_fall_back_to_bigint() {
        let big = 1u64 << 44;
        let h = spikes(&[(3, big), (200, big)]);
        assert_eq!(otsu2(&h).unwrap(), 3);
    }

    #[test]
    fn two_level_crack_threshold_uses_occupied_split() {
        let h = spikes(&[(13, 64), (204, 960)]);
        let r = otsu3(&h).unwrap();
        assert_eq!((r.k1, r.k2), (0, 13));
        assert_eq!(crack_threshold(&h, OtsuMode::Three).unwrap(), 13);
        assert_eq!(crack_threshold(&h, OtsuMode::Two).unwrap(), 13);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("two".parse::<OtsuMode>().unwrap(), OtsuMode::Two);
        assert_eq!("three-class".parse::<OtsuMode>().unwrap(), OtsuMode::Three);
        assert!("four".parse::<OtsuMode>().is_err());
    }
}
