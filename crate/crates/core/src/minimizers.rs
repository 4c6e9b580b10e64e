//! Local minimizers of sampled paths and statistics of minimizer sets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamel::{integer_relation, RelationReport};
use crate::interval::RationalInterval;
use crate::paths::DyadicPath;
use crate::stats::{arcsine_cdf, ks_p_value, ks_statistic, ks_two_sample};

/// Strict sampled argmin of a dyadic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimizer {
    pub generation: u32,
    /// Sample index at the path depth.
    pub index: usize,
    pub t: f64,
    pub value: f64,
    /// Witness interval `[i/2^j, (i+1)/2^j]` as sample indices.
    pub witness: (usize, usize),
    /// Second-lowest sample minus the lowest on the witness interval.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerList {
    pub depth: u32,
    pub generations: u32,
    /// In order of first appearance: generation ascending, then interval.
    pub entries: Vec<Minimizer>,
    /// Intervals whose lowest sample was tied.
    pub ties: usize,
}

impl MinimizerList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.entries.iter().map(|m| m.t).collect()
    }

    /// Default reliability threshold `2^{-depth/2 - 4}` on margins.
    pub fn margin_threshold(&self) -> f64 {
        (-(self.depth as f64) / 2.0 - 4.0).exp2()
    }

    /// Entries whose margin falls below [`margin_threshold`](Self::margin_threshold).
    pub fn unreliable(&self) -> usize {
        let th = self.margin_threshold();
        self.entries.iter().filter(|m| m.margin < th).count()
    }

    /// Re-checks every entry as the strict argmin of its witness interval.
    pub fn verify(&self, path: &DyadicPath) -> bool {
        let v = path.values();
        self.entries.iter().all(|m| {
            let (a, b) = m.witness;
            m.index >= a && m.index <= b && (a..=b).all(|i| i == m.index || v[i] > v[m.index])
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,t,value,margin\n");
        for m in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", m.generation, m.t, m.value, m.margin));
        }
        out
    }
}

/// Lowest sample on `v[a..=b]`, the second-lowest value and a tied index.
fn scan(v: &[f64], a: usize, b: usize) -> (usize, f64, Option<usize>) {
    let mut best = a;
    let mut second = f64::INFINITY;
    let mut tie = None;
    for i in a + 1..=b {
        if v[i] < v[best] {
            second = v[best];
            best = i;
            tie = None;
        } else {
            if v[i] == v[best] && tie.is_none() {
                tie = Some(i);
            }
            second = second.min(v[i]);
        }
    }
    (best, second, tie)
}

/// Sampled argmins of every dyadic interval of generation `<= generations`.
pub fn enumerate_minima(path: &DyadicPath, generations: u32) -> Result<MinimizerList> {
    let depth = path.depth();
    if generations > depth {
        return Err(invalid("generations", format!("at most the depth {depth}")));
    }
    let v = path.values();
    let h = path.step();
    let mut seen = std::collections::HashSet::new();
    let mut entries = Vec::new();
    let mut ties = 0;
    for j in 0..=generations {
        let width = 1usize << (depth - j);
        for i in 0..1usize << j {
            let (a, b) = (i * width, (i + 1) * width);
            let (k, second, tie) = scan(v, a, b);
            if tie.is_some() {
                ties += 1;
                continue;
            }
            if seen.insert(k) {
                entries.push(Minimizer {
                    generation: j,
                    index: k,
                    t: k as f64 * h,
                    value: v[k],
                    witness: (a, b),
                    margin: second - v[k],
                });
            }
        }
    }
    Ok(MinimizerList {
        depth,
        generations,
        entries,
        ties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictnessVerdict {
    pub t: f64,
    pub value: f64,
    pub margin: f64,
    pub strict: bool,
    /// Second location attaining the minimum when tied.
    pub tie: Option<f64>,
}

/// Whether the lowest sample on `[lo, hi]` is unique, with its margin.
pub fn strictness_check(path: &DyadicPath, lo: f64, hi: f64) -> Result<StrictnessVerdict> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid("interval", "need 0 <= lo < hi <= 1"));
    }
    let n = path.values().len() - 1;
    let a = (lo * n as f64).ceil() as usize;
    let b = (hi * n as f64).floor() as usize;
    if a > b {
        return Err(invalid("interval", "contains no sample"));
    }
    let (k, second, tie) = scan(path.values(), a, b);
    let h = path.step();
    let margin = if tie.is_some() { 0.0 } else { second - path.values()[k] };
    Ok(StrictnessVerdict {
        t: k as f64 * h,
        value: path.values()[k],
        margin,
        strict: tie.is_none() && margin > 0.0,
        tie: tie.map(|i| i as f64 * h),
    })
}

/// Location of a minimizer refined by local descent: at each level past
/// the depth, the lowest of the current point and its two new neighbours
/// inside the witness interval. Exact dyadic `(k, level)`.
pub fn refine_location(path: &DyadicPath, m: &Minimizer, precision: u32) -> Result<(u128, u32)> {
    let depth = path.depth();
    let top = precision.min(path.refinable_level()).max(depth);
    let mut k = m.index as u128;
    let mut value = m.value;
    let (wa, wb) = (m.witness.0 as u128, m.witness.1 as u128);
    for level in depth + 1..=top {
        let shift = level - depth;
        let (lo, hi) = (wa << shift, wb << shift);
        k *= 2;
        let mut best = (k, value);
        let left = (k > lo).then(|| k - 1);
        let right = (k < hi).then_some(k + 1);
        for c in left.into_iter().chain(right) {
            let x = path.value_at_dyadic(c, level)?;
            if x < best.1 {
                best = (c, x);
            }
        }
        (k, value) = best;
    }
    Ok((k, top))
}

/// Bounded relation search among `s_k = 1 + m_k` over the first `count`
/// minimizers, each located exactly by [`refine_location`] at `precision`.
pub fn s_independence(
    path: &DyadicPath,
    minima: &MinimizerList,
    count: usize,
    bound: u64,
    tolerance: f64,
    precision: u32,
) -> Result<RelationReport> {
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    if minima.len() < count {
        return Err(Error::InsufficientMinimizers {
            needed: count,
            found: minima.len(),
        });
    }
    if count == 1 {
        // a single s ≥ 1 is nonzero, so no relation exists
        return Ok(RelationReport {
            candidate: None,
            bound,
            tolerance,
            precision,
            inspected: 0,
            residual_floor: Some(1.0 + minima.entries[0].t),
        });
    }
    let s = minima.entries[..count]
        .iter()
        .map(|m| {
            let (k, level) = refine_location(path, m, precision)?;
            let t = BigRational::new(BigInt::from(k), BigInt::one() << level as usize);
            Ok(RationalInterval::point(BigRational::one() + t))
        })
        .collect::<Result<Vec<_>>>()?;
    integer_relation(&s, bound, tolerance)
}

/// `m` i.i.d. uniforms on `[0, 1)` from a seeded stream.
pub fn uniform_reference(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..m).map(|_| (rng.next_u64() >> 11) as f64 * (-53f64).exp2()).collect()
}

pub const STATISTICS_CAVEAT: &str =
    "necessary-condition check only: truncation choice is not distribution-free";

/// Number of equal dyadic bins in [`SetStatistics::bin_counts`].
pub const STATISTIC_BINS: usize = 16;

/// Order-free summaries of a finite sample in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub sorted: Vec<f64>,
    /// Nearest-neighbour gaps, sorted.
    pub nn_gaps: Vec<f64>,
    pub bin_counts: Vec<usize>,
    pub ks_uniform: f64,
}

impl SampleSummary {
    pub fn of(sample: &[f64]) -> Self {
        let mut sorted = sample.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
        let n = sorted.len();
        let mut nn_gaps: Vec<f64> = (0..n)
            .map(|i| {
                let l = if i > 0 { sorted[i] - sorted[i - 1] } else { f64::INFINITY };
                let r = if i + 1 < n { sorted[i + 1] - sorted[i] } else { f64::INFINITY };
                l.min(r)
            })
            .collect();
        nn_gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite gaps"));
        let mut bin_counts = vec![0; STATISTIC_BINS];
        for &x in &sorted {
            bin_counts[((x * STATISTIC_BINS as f64) as usize).min(STATISTIC_BINS - 1)] += 1;
        }
        let ks_uniform = ks_statistic(&sorted, |x| x.clamp(0.0, 1.0));
        Self {
            sorted,
            nn_gaps,
            bin_counts,
            ks_uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetStatistics {
    pub minimizers: SampleSummary,
    pub reference: SampleSummary,
    /// Two-sample KS distance between the sorted samples.
    pub ks_distance: f64,
    pub caveat: String,
}

/// Compares the first `m` minimizer locations with `m` reference uniforms.
pub fn set_statistics(locations: &[f64], reference: &[f64]) -> Result<SetStatistics> {
    if locations.len() < 16 || reference.len() < 16 {
        return Err(invalid("m", "need at least 16 points in each sample"));
    }
    Ok(SetStatistics {
        minimizers: SampleSummary::of(locations),
        reference: SampleSummary::of(reference),
        ks_distance: ks_two_sample(locations, reference),
        caveat: STATISTICS_CAVEAT.into(),
    })
}

/// Location of the lowest sample on `[0, 1]`, first on ties.
pub fn global_argmin(path: &DyadicPath) -> f64 {
    let v = path.values();
    let (k, _, _) = scan(v, 0, v.len() - 1);
    k as f64 * path.step()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsineReport {
    pub n: usize,
    pub ks: f64,
    pub p_value: f64,
}

/// KS distance of argmin locations to `(2/π) arcsin √x`.
pub fn arcsine_check(locations: &[f64]) -> Result<ArcsineReport> {
    if locations.is_empty() {
        return Err(Error::Empty("locations"));
    }
    let ks = ks_statistic(locations, arcsine_cdf);
    Ok(ArcsineReport {
        n: locations.len(),
        ks,
        p_value: ks_p_value(ks, locations.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{refine, WalkCode};
    use crate::BitSource;
    use proptest::prelude::*;
    use rand_chacha::rand_core::RngCore;

    fn brownian(seed: u64, depth: u32) -> DyadicPath {
        refine(&mut BitSource::seeded(seed), depth).unwrap()
    }

    #[test]
    fn tent_down_up_has_interior_minimum() {
        let p = DyadicPath::from_walk(&"01".parse::<WalkCode>().unwrap(), 4).unwrap();
        let l = enumerate_minima(&p, 0).unwrap();
        assert_eq!(l.entries[0].t, 0.5);
    }

    #[test]
    fn increasing_samples_only_origin() {
        let p = DyadicPath::from_samples(3, (0..9).map(|i| i as f64).collect()).unwrap();
        let l = enumerate_minima(&p, 3).unwrap();
        let t = l.locations();
        assert_eq!(t[0], 0.0);
        assert!(t.iter().all(|&x| x == 0.0 || l.entries.iter().any(|m| m.t == x && m.witness.0 == m.index)));
    }

    #[test]
    fn generations_nest() {
        let p = brownian(7, 16);
        let mut prev = enumerate_minima(&p, 0).unwrap();
        for g in 1..=10 {
            let next = enumerate_minima(&p, g).unwrap();
            assert!(next.len() >= prev.len());
            assert_eq!(next.entries[..prev.len()], prev.entries[..]);
            prev = next;
        }
        assert!(prev.verify(&p));
    }

    #[test]
    fn convex_is_strict_and_ties_are_not() {
        let p = DyadicPath::from_samples(2, vec![0.0, -1.0, -1.5, -1.0, 0.0]).unwrap();
        let s = strictness_check(&p, 0.0, 1.0).unwrap();
        assert!(s.strict && s.margin == 0.5 && s.t == 0.5);
        let q = DyadicPath::from_samples(2, vec![0.0, -1.0, 0.0, -1.0, 0.0]).unwrap();
        let s = strictness_check(&q, 0.0, 1.0).unwrap();
        assert!(!s.strict);
        assert_eq!(s.margin, 0.0);
        assert_eq!((s.t, s.tie), (0.25, Some(0.75)));
    }

    #[test]
    fn brownian_intervals_are_strict() {
        for seed in 0..10 {
            let p = brownian(seed, 14);
            for i in 0..8 {
                let s = strictness_check(&p, i as f64 / 8.0, (i + 1) as f64 / 8.0).unwrap();
                assert!(s.strict);
            }
        }
    }

    #[test]
    fn single_location_is_independent() {
        let p = brownian(3, 10);
        let l = enumerate_minima(&p, 4).unwrap();
        let r = s_independence(&p, &l, 1, 8, 1e-6, 10).unwrap();
        assert!(!r.found());
    }

    #[test]
    fn planted_rational_minimizers() {
        let p = DyadicPath::from_samples(2, vec![0.0, -1.0, -0.5, 0.5, 1.0]).unwrap();
        let l = enumerate_minima(&p, 2).unwrap();
        assert_eq!(l.locations()[..2], [0.25, 0.5]);
        let r = s_independence(&p, &l, 2, 8, 2f64.powi(-20), 64).unwrap();
        let c = r.candidate.unwrap();
        assert_eq!(c.coeffs, vec![BigInt::from(6), BigInt::from(-5)]);
        assert!(c.residual.lo == BigRational::from_integer(0.into()));
    }

    #[test]
    fn too_few_minimizers() {
        let p = DyadicPath::from_samples(1, vec![0.0, 1.0, 2.0]).unwrap();
        let l = enumerate_minima(&p, 1).unwrap();
        assert!(matches!(
            s_independence(&p, &l, 4, 8, 1e-6, 10),
            Err(Error::InsufficientMinimizers { needed: 4, .. })
        ));
    }

    #[test]
    fn refined_location_stays_in_witness_and_lowers() {
        let p = brownian(5, 12);
        let l = enumerate_minima(&p, 6).unwrap();
        for m in &l.entries[..10] {
            let (k, level) = refine_location(&p, m, 40).unwrap();
            assert_eq!(level, 40);
            let t = k as f64 / 2f64.powi(40);
            let (a, b) = (m.witness.0 as f64 * p.step(), m.witness.1 as f64 * p.step());
            assert!(a <= t && t <= b);
            assert!(p.value_at_dyadic(k, level).unwrap() <= m.value);
        }
    }

    #[test]
    fn reference_against_itself() {
        let r = uniform_reference(64, 1);
        let s = set_statistics(&r, &r).unwrap();
        assert_eq!(s.ks_distance, 0.0);
        assert_eq!(s.minimizers, s.reference);
        assert!(set_statistics(&r[..8], &r).is_err());
    }

    #[test]
    fn arcsine_cdf_at_half() {
        assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
        let r = arcsine_check(&[0.5]).unwrap();
        assert_eq!(r.n, 1);
    }

    #[test]
    fn minimizer_csv_columns() {
        let p = brownian(1, 8);
        let csv = enumerate_minima(&p, 3).unwrap().to_csv();
        assert!(csv.starts_with("generation,t,value,margin\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn statistics_ignore_order(seed in any::<u64>(), m in 16usize..200) {
            let p = brownian(seed % 1000, 12);
            let l = enumerate_minima(&p, 8).unwrap();
            let locs: Vec<f64> = l.locations().into_iter().take(m).collect();
            prop_assume!(locs.len() >= 16);
            let reference = uniform_reference(locs.len(), seed);
            let a = set_statistics(&locs, &reference).unwrap();
            let mut shuffled = locs.clone();
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.next_u64() as usize % (i + 1));
            }
            let b = set_statistics(&shuffled, &reference).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn entries_are_strict_argmins(seed in 0u64..500, g in 0u32..9) {
            let p = brownian(seed, 10);
            let l = enumerate_minima(&p, g).unwrap();
            prop_assert!(l.verify(&p));
            let mut idx: Vec<usize> = l.entries.iter().map(|m| m.index).collect();
            idx.sort_unstable();
            idx.dedup();
            prop_assert_eq!(idx.len(), l.len());
        }
    }
}
