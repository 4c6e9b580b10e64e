//! Rational witnesses for `n((t₁+t₂+t₃) − (t₄+t₅+t₆)) ≈ r` with every
//! `x(tᵢ)` near zero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::interval::{rational_from_f64, Interval};
use crate::measures::{default_band, zero_set};
use crate::paths::DyadicPath;

/// Precision requested when certifying `x(tᵢ)`.
pub const CERTIFY_PRECISION: u32 = 40;

/// Grid used to bin zero-set representatives in [`representation_demo`].
pub const DEMO_GRID_BITS: u32 = 16;

/// Target real `r` known up to an absolute error.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub value: BigRational,
    pub error: BigRational,
}

impl Target {
    pub fn exact(value: BigRational) -> Self {
        Self {
            value,
            error: BigRational::zero(),
        }
    }

    /// A correctly rounded double: the error is at most `|r| 2^-53`.
    pub fn from_f64(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(invalid("r", "must be finite"));
        }
        let value = rational_from_f64(r);
        let error = value.abs() / BigRational::from_integer(BigInt::one() << 53usize);
        Ok(Self { value, error })
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    /// Half-width of the acceptance band at level `ℓ`: `1/ℓ` less the
    /// input error, so that `|v − r| < 1/ℓ` holds for the true `r`.
    fn radius(&self, ell: u32) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(ell)) - &self.error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateWitness {
    pub n: u64,
    pub t: [BigRational; 6],
    pub v: BigRational,
    pub path_values: Vec<Interval>,
    pub target: Target,
    pub ell: u32,
}

impl PredicateWitness {
    /// Builds and certifies a witness; fails unless `|v − r|` lies within
    /// the band and every enclosure of `x(tᵢ)` sits inside `(−1/ℓ, 1/ℓ)`.
    pub fn new(path: &DyadicPath, n: u64, t: [BigRational; 6], target: Target, ell: u32) -> Result<Self> {
        let v = signed_sum(&t) * BigRational::from_integer(BigInt::from(n));
        let path_values = t
            .iter()
            .map(|ti| path.evaluate(ti, CERTIFY_PRECISION))
            .collect::<Result<Vec<_>>>()?;
        let w = Self {
            n,
            t,
            v,
            path_values,
            target,
            ell,
        };
        if !w.holds_at(ell) {
            return Err(Error::Format(format!("witness fails certification at level {ell}")));
        }
        Ok(w)
    }

    /// Re-checks both inequalities at level `ell`.
    pub fn holds_at(&self, ell: u32) -> bool {
        if ell == 0 || self.n == 0 {
            return false;
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        let in_unit = self.t.iter().all(|ti| *ti >= zero && *ti <= one);
        let near = (&self.v - &self.target.value).abs() < self.target.radius(ell);
        let bound = BigRational::new(BigInt::one(), BigInt::from(ell));
        let small = self.path_values.iter().all(|iv| {
            let r = iv.to_rational();
            r.lo > -bound.clone() && r.hi < bound
        });
        in_unit && near && small
    }

    pub fn residual(&self) -> f64 {
        (&self.v - &self.target.value).abs().to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "t": self.t.iter().map(|x| format!("{}/{}", x.numer(), x.denom())).collect::<Vec<_>>(),
            "v": self.v.to_f64(),
            "r": self.target.to_f64(),
            "ell": self.ell,
            "residual": self.residual(),
            "path_values": self.path_values.iter().map(|iv| [iv.lo, iv.hi]).collect::<Vec<_>>(),
        })
    }
}

fn signed_sum(t: &[BigRational; 6]) -> BigRational {
    (&t[0] + &t[1] + &t[2]) - (&t[3] + &t[4] + &t[5])
}

/// Largest power of two not above `d`, as an exponent.
fn dyadic_bits(d: u64) -> u32 {
    63 - d.leading_zeros()
}

/// Numerators `k` of the times `k/2^j` (with `2^j <= max_den`) where the
/// path value is certified inside `(−1/ℓ, 1/ℓ)`.
fn near_zero_bins(path: &DyadicPath, ell: u32, max_den: u64) -> Result<(u32, Vec<i64>)> {
    if ell == 0 {
        return Err(invalid("ell", "must be at least 1"));
    }
    if max_den == 0 {
        return Err(invalid("max_den", "must be at least 1"));
    }
    let j = dyadic_bits(max_den);
    if j > path.depth() {
        return Err(invalid("max_den", format!("exceeds 2^{}", path.depth())));
    }
    let bound = 1.0 / ell as f64;
    let stride = 1usize << (path.depth() - j);
    let v = path.values();
    let bins = (0..=(1i64 << j))
        .filter(|&k| v[k as usize * stride].abs() < bound)
        .collect();
    Ok((j, bins))
}

/// Dyadic rationals `t = k/2^j`, `2^j <= max_den`, with `|x(t)| < 1/ℓ`,
/// ascending.
pub fn near_zero_rationals(path: &DyadicPath, ell: u32, max_den: u64) -> Result<Vec<BigRational>> {
    let (j, bins) = near_zero_bins(path, ell, max_den)?;
    let den = BigInt::one() << j as usize;
    Ok(bins
        .into_iter()
        .map(|k| BigRational::new(BigInt::from(k), den.clone()))
        .collect())
}

/// Occupied integer bins `lo..lo+len` with prefix counts.
#[derive(Debug, Clone)]
struct BinSet {
    lo: i64,
    occ: Vec<bool>,
    prefix: Vec<u32>,
}

impl BinSet {
    fn from_sorted(bins: &[i64]) -> Self {
        let lo = bins[0];
        let mut occ = vec![false; (bins[bins.len() - 1] - lo + 1) as usize];
        for &b in bins {
            occ[(b - lo) as usize] = true;
        }
        Self::from_occ(lo, occ)
    }

    fn from_occ(lo: i64, occ: Vec<bool>) -> Self {
        let mut prefix = Vec::with_capacity(occ.len() + 1);
        let mut c = 0;
        prefix.push(0);
        for &o in &occ {
            c += o as u32;
            prefix.push(c);
        }
        Self { lo, occ, prefix }
    }

    fn count(&self) -> usize {
        self.prefix[self.prefix.len() - 1] as usize
    }

    fn neg(&self) -> Self {
        let mut occ = self.occ.clone();
        occ.reverse();
        Self::from_occ(-(self.lo + self.occ.len() as i64 - 1), occ)
    }

    /// Whether some occupied bin lies in `[a, b]`.
    fn any_in(&self, a: i64, b: i64) -> bool {
        let a = (a - self.lo).max(0);
        let b = (b - self.lo).min(self.occ.len() as i64 - 1);
        a <= b && self.prefix[b as usize + 1] > self.prefix[a as usize]
    }

    /// Occupied bins nearest to `x` from below and above.
    fn nearest(&self, x: i64) -> [Option<i64>; 2] {
        let len = self.occ.len() as i64;
        let i = (x - self.lo).clamp(-1, len);
        let below = (0..=i.min(len - 1)).rev().find(|&k| self.occ[k as usize]);
        let above = (i.max(0)..len).find(|&k| self.occ[k as usize]);
        [below.map(|k| k + self.lo), above.map(|k| k + self.lo)]
    }

    /// Minkowski sum, via FFT once the direct product gets large.
    fn sum(&self, other: &Self) -> Self {
        let span = self.occ.len() + other.occ.len() - 1;
        let lo = self.lo + other.lo;
        if self.count() * other.count() <= 1 << 20 {
            let mut occ = vec![false; span];
            for (i, _) in self.occ.iter().enumerate().filter(|p| *p.1) {
                for (j, _) in other.occ.iter().enumerate().filter(|p| *p.1) {
                    occ[i + j] = true;
                }
            }
            return Self::from_occ(lo, occ);
        }
        let n = span.next_power_of_two();
        let load = |s: &Self| {
            let mut v = vec![Complex::new(0.0, 0.0); n];
            for (x, &o) in v.iter_mut().zip(&s.occ) {
                x.re = o as u8 as f64;
            }
            v
        };
        let (mut fa, mut fb) = (load(self), load(other));
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut fa);
        planner.plan_fft_forward(n).process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= *y;
        }
        planner.plan_fft_inverse(n).process(&mut fa);
        let occ = fa[..span].iter().map(|c| c.re / n as f64 > 0.5).collect();
        Self::from_occ(lo, occ)
    }
}

/// Triple-sum tables over a sorted bin list.
struct SixTable {
    bins: Vec<i64>,
    a3: BinSet,
    /// `A3 − A3`.
    full: BinSet,
    /// Completion sets after 1..=5 chosen elements.
    rest: [BinSet; 5],
}

impl SixTable {
    fn new(bins: Vec<i64>) -> Self {
        let a1 = BinSet::from_sorted(&bins);
        let a2 = a1.sum(&a1);
        let a3 = a2.sum(&a1);
        let (n1, n2, n3) = (a1.neg(), a2.neg(), a3.neg());
        let full = a3.sum(&n3);
        let rest = [a2.sum(&n3), a1.sum(&n3), n3, n2, n1];
        Self { bins, a3, full, rest }
    }

    /// Lexicographically first `(b₁..b₆)` with
    /// `(b₁+b₂+b₃) − (b₄+b₅+b₆) ∈ [lo, hi]`.
    fn first_tuple(&self, lo: i64, hi: i64) -> Option<[i64; 6]> {
        if !self.full.any_in(lo, hi) {
            return None;
        }
        let mut out = [0i64; 6];
        let mut acc = 0i64;
        for step in 0..6 {
            let sign = if step < 3 { 1 } else { -1 };
            let pick = self.bins.iter().copied().find(|&b| {
                let c = acc + sign * b;
                match self.rest.get(step) {
                    Some(f) => f.any_in(lo - c, hi - c),
                    None => lo <= c && c <= hi,
                }
            })?;
            out[step] = pick;
            acc += sign * pick;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub witness: Option<PredicateWitness>,
    pub near_zero: usize,
    pub triple_sums: usize,
    /// Values of `n` examined.
    pub n_tried: u64,
    pub max_n: u64,
    pub max_den: u64,
}

/// First certified witness of `P(r, ℓ, x)` with `n <= max_n` and
/// denominators `<= max_den`, ordered by `n` then lexicographically by
/// `(t₁, …, t₆)`.
///
/// The band is `|v − r| < 1/ℓ − err(r)`. A `None` only reports exhaustion
/// of these bounds.
pub fn predicate_search(
    path: &DyadicPath,
    target: &Target,
    ell: u32,
    max_n: u64,
    max_den: u64,
) -> Result<SearchOutcome> {
    if max_n == 0 {
        return Err(invalid("max_n", "must be at least 1"));
    }
    let (j, bins) = near_zero_bins(path, ell, max_den)?;
    let near_zero = bins.len();
    let table = SixTable::new(bins);
    let scale = BigRational::from_integer(BigInt::one() << j as usize);
    let radius = target.radius(ell);
    let den = BigInt::one() << j as usize;
    let mut n_tried = 0;
    let mut witness = None;
    for n in 1..=max_n {
        n_tried = n;
        let nn = BigRational::from_integer(BigInt::from(n));
        let lo = ((&target.value - &radius) * &scale / &nn).floor().to_integer() + 1;
        let hi = ((&target.value + &radius) * &scale / &nn).ceil().to_integer() - 1;
        let (Some(lo), Some(hi)) = (clamp_i64(&lo), clamp_i64(&hi)) else {
            continue;
        };
        if lo > hi {
            continue;
        }
        if let Some(b) = table.first_tuple(lo, hi) {
            let t = b.map(|k| BigRational::new(BigInt::from(k), den.clone()));
            witness = Some(PredicateWitness::new(path, n, t, target.clone(), ell)?);
            break;
        }
    }
    Ok(SearchOutcome {
        witness,
        near_zero,
        triple_sums: table.a3.count(),
        n_tried,
        max_n,
        max_den,
    })
}

fn clamp_i64(x: &BigInt) -> Option<i64> {
    let lim = BigInt::from(1i64 << 40);
    Some(x.clamp(&-lim.clone(), &lim).to_i64()?)
}

/// Approximate identity `r ≈ n((z₁+z₂+z₃) − (z₄+z₅+z₆))` over zero-set
/// representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub n: u64,
    pub z: [f64; 6],
    pub value: f64,
    pub residual: f64,
    /// Whether the residual is below `1/ℓ`.
    pub within_level: bool,
    pub representatives: usize,
}

impl Representation {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "z": self.z,
            "value": self.value,
            "residual": self.residual,
            "within_level": self.within_level,
            "representatives": self.representatives,
        })
    }
}

/// [`representation_search`] over the representatives of the zero set
/// at the default band.
pub fn representation_demo(path: &DyadicPath, r: f64, ell: u32, max_n: u64) -> Result<Representation> {
    let zs = zero_set(path, default_band(path))?;
    let reps = zs.representatives();
    if reps.iter().all(|&z| z < path.step()) {
        return Err(Error::DegenerateMeasure("zero set empty beyond t = 0".into()));
    }
    representation_search(&reps, r, ell, max_n, DEMO_GRID_BITS)
}

/// Same search order as [`predicate_search`] with the points binned to
/// `2^-grid_bits`. Residuals are exact in the actual points. Stops at the
/// first `n` whose best tuple lands within `1/ℓ`, otherwise reports the
/// smallest residual seen.
pub fn representation_search(
    points: &[f64],
    r: f64,
    ell: u32,
    max_n: u64,
    grid_bits: u32,
) -> Result<Representation> {
    if ell == 0 || max_n == 0 {
        return Err(invalid("ell", "ell and max_n must be at least 1"));
    }
    if points.is_empty() || points.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid("points", "need points in [0, 1]"));
    }
    if !r.is_finite() {
        return Err(invalid("r", "must be finite"));
    }
    let scale = (grid_bits as f64).exp2();
    let mut by_bin: std::collections::BTreeMap<i64, f64> = Default::default();
    for &p in points {
        let b = (p * scale).round() as i64;
        let e = by_bin.entry(b).or_insert(p);
        *e = e.min(p);
    }
    let table = SixTable::new(by_bin.keys().copied().collect());
    let target = rational_from_f64(r);
    let level = 1.0 / ell as f64;
    let mut best: Option<Representation> = None;
    for n in 1..=max_n {
        let centre = (r * scale / n as f64).round() as i64;
        for m in table.full.nearest(centre).into_iter().flatten() {
            let Some(b) = table.first_tuple(m, m) else { continue };
            let z = b.map(|k| by_bin[&k]);
            let exact: BigRational = z[..3].iter().map(|&x| rational_from_f64(x)).sum::<BigRational>()
                - z[3..].iter().map(|&x| rational_from_f64(x)).sum::<BigRational>();
            let exact = exact * BigRational::from_integer(BigInt::from(n));
            let residual = (&exact - &target).abs().to_f64().unwrap_or(f64::INFINITY);
            if best.as_ref().is_none_or(|b| residual < b.residual) {
                best = Some(Representation {
                    n,
                    z,
                    value: exact.to_f64().unwrap_or(f64::NAN),
                    residual,
                    within_level: residual < level,
                    representatives: points.len(),
                });
            }
        }
        if best.as_ref().is_some_and(|b| b.within_level) {
            break;
        }
    }
    best.ok_or_else(|| Error::Empty("representatives"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{refine, WalkCode};
    use crate::BitSource;
    use proptest::prelude::*;

    fn brownian(seed: u64, depth: u32) -> DyadicPath {
        refine(&mut BitSource::seeded(seed), depth).unwrap()
    }

    fn tent() -> DyadicPath {
        DyadicPath::from_walk(&"10".parse::<WalkCode>().unwrap(), 6).unwrap()
    }

    #[test]
    fn zero_is_always_near_zero() {
        let p = brownian(3, 12);
        let t = near_zero_rationals(&p, 50, 1 << 10).unwrap();
        assert_eq!(t[0], BigRational::zero());
    }

    #[test]
    fn tent_near_zero_only_at_ends() {
        let t = near_zero_rationals(&tent(), 4, 16).unwrap();
        let f: Vec<f64> = t.iter().map(|x| x.to_f64().unwrap()).collect();
        assert!(!f.is_empty());
        assert!(f.iter().all(|&x| x < 0.2 || x > 0.8), "{f:?}");
        assert!(f.contains(&0.0) && f.contains(&1.0));
    }

    #[test]
    fn denominator_above_resolution_is_rejected() {
        assert!(near_zero_rationals(&brownian(1, 8), 4, 1 << 9).is_err());
        assert!(near_zero_rationals(&brownian(1, 8), 0, 4).is_err());
    }

    #[test]
    fn r_zero_gives_trivial_witness() {
        let p = brownian(5, 12);
        let out = predicate_search(&p, &Target::from_f64(0.0).unwrap(), 7, 16, 1 << 10).unwrap();
        let w = out.witness.unwrap();
        assert_eq!(w.n, 1);
        assert!(w.t.iter().all(|t| t.is_zero()));
        assert!(w.v.is_zero());
    }

    #[test]
    fn only_origin_means_no_witness() {
        let p = DyadicPath::from_samples(2, vec![0.0, 1.0, 2.0, 1.5, 3.0]).unwrap();
        let out = predicate_search(&p, &Target::from_f64(1.0).unwrap(), 2, 64, 4).unwrap();
        assert_eq!(out.near_zero, 1);
        assert!(out.witness.is_none());
        assert_eq!(out.n_tried, 64);
    }

    #[test]
    fn tent_witness_for_one() {
        let out = predicate_search(&tent(), &Target::from_f64(1.0).unwrap(), 4, 8, 16).unwrap();
        let w = out.witness.unwrap();
        assert_eq!(w.n, 1);
        assert!(w.holds_at(4));
        assert!(w.residual() < 0.25);
    }

    #[test]
    fn brownian_witness_for_one_certifies() {
        let p = brownian(11, 16);
        let out = predicate_search(&p, &Target::from_f64(1.0).unwrap(), 4, 1 << 12, 1 << 14).unwrap();
        let w = out.witness.expect("witness");
        assert!(w.holds_at(4) && w.holds_at(3) && w.holds_at(1));
        for (ti, iv) in w.t.iter().zip(&w.path_values) {
            let k = (ti * BigRational::from_integer(BigInt::from(1 << 16))).to_integer();
            assert_eq!(iv.lo, p.values()[k.to_usize().unwrap()]);
        }
        let json = w.to_json();
        assert_eq!(json["t"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn search_is_deterministic() {
        let p = brownian(2, 14);
        let t = Target::from_f64(std::f64::consts::SQRT_2).unwrap();
        let a = predicate_search(&p, &t, 6, 1 << 10, 1 << 12).unwrap();
        let b = predicate_search(&p, &t, 6, 1 << 10, 1 << 12).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_tuple_is_lexicographic_minimum() {
        let bins = vec![0, 3, 4, 9];
        let table = SixTable::new(bins.clone());
        for target in -20..=20 {
            let mut brute = None;
            'outer: for a in &bins {
                for b in &bins {
                    for c in &bins {
                        for d in &bins {
                            for e in &bins {
                                for f in &bins {
                                    if a + b + c - d - e - f == target {
                                        brute = Some([*a, *b, *c, *d, *e, *f]);
                                        break 'outer;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(table.first_tuple(target, target), brute, "target {target}");
        }
    }

    #[test]
    fn fft_sumset_matches_direct() {
        let bins: Vec<i64> = (0..3000).filter(|k| (k * 7919) % 13 < 4).collect();
        let a = BinSet::from_sorted(&bins);
        let fft = a.sum(&a);
        let mut direct = std::collections::BTreeSet::new();
        for x in &bins {
            for y in &bins {
                direct.insert(x + y);
            }
        }
        let got: std::collections::BTreeSet<i64> = fft
            .occ
            .iter()
            .enumerate()
            .filter(|p| *p.1)
            .map(|(i, _)| i as i64 + fft.lo)
            .collect();
        assert_eq!(got, direct);
    }

    #[test]
    fn tent_demo_reaches_six() {
        let rep = representation_search(&[0.0, 1.0], 6.0, 4, 8, 4).unwrap();
        assert_eq!(rep.n, 2);
        assert_eq!(rep.z, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn demo_at_zero_is_exact() {
        let rep = representation_demo(&brownian(4, 14), 0.0, 6, 64).unwrap();
        assert_eq!(rep.residual, 0.0);
        assert_eq!(rep.n, 1);
    }

    #[test]
    fn target_error_scales_with_magnitude() {
        let t = Target::from_f64(std::f64::consts::PI).unwrap();
        let e = t.error.to_f64().unwrap();
        assert!(e > 0.0 && e < 1e-15);
        assert!(Target::from_f64(0.0).unwrap().error.is_zero());
        assert!(Target::from_f64(f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn witnesses_hold_at_lower_levels(seed in 0u64..1000, ell in 1u32..8, r in -2.0f64..2.0) {
            let p = brownian(seed, 12);
            let out = predicate_search(&p, &Target::from_f64(r).unwrap(), ell, 256, 1 << 10).unwrap();
            if let Some(w) = out.witness {
                for lower in 1..=ell {
                    prop_assert!(w.holds_at(lower));
                }
            }
        }
    }
}
