//! Discrete measures on the line and the constructions that produce them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interval::pow2_neg;
use crate::paths::DyadicPath;
use crate::scalar::{pairwise_sum, Scalar};

/// Atom of a discrete measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom<S> {
    pub position: S,
    pub weight: S,
}

/// Finite positive combination of point masses, sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S: Scalar> {
    atoms: Vec<Atom<S>>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Validates and sorts the atoms; coincident positions are kept apart
    /// (see [`merged`](Self::merged)).
    pub fn new(mut atoms: Vec<Atom<S>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("atoms"));
        }
        for a in &atoms {
            if !a.position.is_finite() {
                return Err(invalid("position", format!("{} is not finite", a.position)));
            }
            if !(a.weight > S::zero()) || !a.weight.is_finite() {
                return Err(invalid("weight", format!("{} is not positive", a.weight)));
            }
        }
        atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).expect("finite"));
        Ok(Self { atoms })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(position, weight)| Atom { position, weight })
                .collect(),
        )
    }

    pub fn dirac(at: S) -> Self {
        Self {
            atoms: vec![Atom {
                position: at,
                weight: S::one(),
            }],
        }
    }

    /// Equal weights `1/n` on the given points.
    pub fn uniform(points: &[S]) -> Result<Self> {
        let w = S::one() / S::lit(points.len() as f64);
        Self::from_pairs(points.iter().map(|&p| (p, w)))
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<S> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn weights(&self) -> Vec<S> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Total mass, pairwise summed.
    pub fn mass(&self) -> S {
        pairwise_sum(&self.weights())
    }

    /// `(min, max)` of the support.
    pub fn support(&self) -> (S, S) {
        (self.atoms[0].position, self.atoms[self.atoms.len() - 1].position)
    }

    /// Coincident atoms combined.
    pub fn merged(&self) -> Self {
        let mut out: Vec<Atom<S>> = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            match out.last_mut() {
                Some(last) if last.position == a.position => last.weight = last.weight + a.weight,
                _ => out.push(*a),
            }
        }
        Self { atoms: out }
    }

    pub fn normalized(&self) -> Self {
        let m = self.mass();
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position,
                    weight: a.weight / m,
                })
                .collect(),
        }
    }

    /// Image under `x ↦ -x`.
    pub fn reflect(&self) -> Self {
        let mut atoms: Vec<Atom<S>> = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom {
                position: -a.position,
                weight: a.weight,
            })
            .collect();
        atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).expect("finite"));
        Self { atoms }
    }

    /// Image under `x ↦ λx`, `λ > 0`.
    pub fn scaled(&self, lambda: S) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position * lambda,
                    weight: a.weight,
                })
                .collect(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: T::lit(a.position.to_f64_lossy()),
                    weight: T::lit(a.weight.to_f64_lossy()),
                })
                .collect(),
        }
    }

    /// CSV with a leading `# {json}` header line, then `position,weight`.
    pub fn to_csv(&self, provenance: &str) -> String {
        let header = serde_json::json!({
            "mass": self.mass().to_f64_lossy(),
            "atoms": self.len(),
            "provenance": provenance,
        });
        let mut out = format!("# {header}\nposition,weight\n");
        for a in &self.atoms {
            writeln!(out, "{},{}", a.position, a.weight).expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen_columns = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_columns {
                if line != "position,weight" {
                    return Err(Error::Format(format!("expected `position,weight`, got `{line}`")));
                }
                seen_columns = true;
                continue;
            }
            let bad = || Error::Format(format!("line {}: `{line}`", lineno + 1));
            let (p, w) = line.split_once(',').ok_or_else(bad)?;
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let w: f64 = w.trim().parse().map_err(|_| bad())?;
            pairs.push((S::lit(p), S::lit(w)));
        }
        Self::from_pairs(pairs)
    }
}

/// One grid cell flagged as meeting the zero set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCell {
    /// Cell index `k`: the cell is `[k h, (k+1) h]`.
    pub cell: usize,
    pub lo: f64,
    pub hi: f64,
    /// Linear crossing when the samples change sign, otherwise the
    /// sub-threshold sample closest to 0.
    pub representative: f64,
    pub sign_change: bool,
}

/// Sampled approximation of the zero set of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSetApprox {
    pub resolution: f64,
    pub threshold: f64,
    pub cells: Vec<ZeroCell>,
}

impl ZeroSetApprox {
    pub fn representatives(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.cells.iter().map(|c| c.representative).collect();
        r.dedup();
        r
    }

    /// Re-checks every cell against the path samples.
    pub fn verify(&self, path: &DyadicPath) -> bool {
        let v = path.values();
        self.cells.iter().all(|c| {
            let (a, b) = (v[c.cell], v[c.cell + 1]);
            let flagged = (a < 0.0) != (b < 0.0) && a != 0.0 && b != 0.0
                || a.abs() <= self.threshold
                || b.abs() <= self.threshold;
            flagged && c.representative >= c.lo && c.representative <= c.hi
        })
    }
}

/// Default band for zero detection and local time: `2^(-depth/2)`.
pub fn default_band(path: &DyadicPath) -> f64 {
    (-(path.depth() as f64) / 2.0).exp2()
}

pub fn zero_set(path: &DyadicPath, threshold: f64) -> Result<ZeroSetApprox> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    let v = path.values();
    let h = path.step();
    let mut cells = Vec::new();
    for k in 0..v.len() - 1 {
        let (a, b) = (v[k], v[k + 1]);
        let sign_change = a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0);
        let band = a.abs() <= threshold || b.abs() <= threshold;
        if !(sign_change || band) {
            continue;
        }
        let lo = k as f64 * h;
        let hi = (k + 1) as f64 * h;
        let representative = if sign_change {
            (lo + h * a / (a - b)).clamp(lo, hi)
        } else if a.abs() <= b.abs() {
            lo
        } else {
            hi
        };
        cells.push(ZeroCell {
            cell: k,
            lo,
            hi,
            representative,
            sign_change,
        });
    }
    Ok(ZeroSetApprox {
        resolution: h,
        threshold,
        cells,
    })
}

/// Normalized occupation measure of the band `|x| < ε`: an atom at each
/// cell midpoint whose mean sample lies in the band, weight `h / 2ε`.
pub fn local_time_measure(path: &DyadicPath, band: f64) -> Result<DiscreteMeasure<f64>> {
    if !(band > 0.0) {
        return Err(invalid("band", "must be positive"));
    }
    let v = path.values();
    let h = path.step();
    let w = h / (2.0 * band);
    let atoms: Vec<Atom<f64>> = v
        .windows(2)
        .enumerate()
        .filter(|(_, p)| (0.5 * (p[0] + p[1])).abs() < band)
        .map(|(k, _)| Atom {
            position: (k as f64 + 0.5) * h,
            weight: w,
        })
        .collect();
    if atoms.len() <= 1 && atoms.first().is_none_or(|a| a.position < h) {
        return Err(Error::DegenerateMeasure(format!(
            "no occupation of the band |x| < {band} beyond t = 0"
        )));
    }
    Ok(DiscreteMeasure { atoms }.normalized())
}

/// The finite approximation `D_ℓ` of the set `E`: points
/// `1/2 + Σ_{k=2}^{ℓ} ε_k 2^{-k²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CantorLevel {
    level: u32,
    points: Vec<BigRational>,
    signs: Vec<Vec<i8>>,
}

pub const CANTOR_MIN_LEVEL: u32 = 2;
pub const CANTOR_MAX_LEVEL: u32 = 12;

/// `1/2 + Σ_{k=2}^{ℓ} ε_k 2^{-k²}` exactly.
pub fn cantor_point(signs: &[i8]) -> BigRational {
    let top = (signs.len() + 1) * (signs.len() + 1);
    let mut num = BigInt::one() << (top - 1);
    for (i, &s) in signs.iter().enumerate() {
        let k = i + 2;
        let term = BigInt::one() << (top - k * k);
        if s > 0 {
            num += term;
        } else {
            num -= term;
        }
    }
    BigRational::new(num, BigInt::one() << top)
}

impl CantorLevel {
    pub fn new(level: u32) -> Result<Self> {
        if !(CANTOR_MIN_LEVEL..=CANTOR_MAX_LEVEL).contains(&level) {
            return Err(Error::LevelOutOfRange {
                level,
                min: CANTOR_MIN_LEVEL,
                max: CANTOR_MAX_LEVEL,
            });
        }
        let n = (level - 1) as usize;
        // counting order with ε_2 most significant is already sorted
        let signs: Vec<Vec<i8>> = (0u32..1 << n)
            .map(|b| (0..n).map(|i| if (b >> (n - 1 - i)) & 1 == 1 { 1 } else { -1 }).collect())
            .collect();
        let points = signs.iter().map(|s| cantor_point(s)).collect();
        Ok(Self {
            level,
            points,
            signs,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn points(&self) -> &[BigRational] {
        &self.points
    }

    /// `(ε_2, …, ε_ℓ)` per point, aligned with [`points`](Self::points).
    pub fn signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Recovers the sign vector of a point, `None` if it is not in `D_ℓ`.
    pub fn signs_of(&self, point: &BigRational) -> Option<Vec<i8>> {
        let mut rest = point - BigRational::new(1.into(), 2.into());
        let mut signs = Vec::with_capacity(self.level as usize - 1);
        for k in 2..=self.level {
            let term = pow2_neg(k * k);
            if rest.is_positive() {
                signs.push(1);
                rest -= term;
            } else {
                signs.push(-1);
                rest += term;
            }
        }
        rest.is_zero().then_some(signs)
    }

    pub fn points_f64(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.to_f64().expect("in [0, 1]")).collect()
    }
}

/// Uniform measure `2^{-(ℓ-1)}` on `D_ℓ`. Above level 7 distinct points
/// can round to the same `f64`; they stay separate atoms.
pub fn cantor_measure(level: u32) -> Result<DiscreteMeasure<f64>> {
    let d = CantorLevel::new(level)?;
    DiscreteMeasure::uniform(&d.points_f64())
}

/// Uniform measure on the left endpoints of the `2^n` level-`n` intervals
/// of the middle-thirds Cantor set.
pub fn middle_thirds_cantor(n: u32) -> Result<DiscreteMeasure<f64>> {
    if n > 24 {
        return Err(invalid("n", "at most 24 levels"));
    }
    let scale = 3f64.powi(n as i32);
    let points: Vec<f64> = (0u32..1 << n)
        .map(|b| {
            let mut t = 0u64;
            for i in 0..n {
                t = 3 * t + 2 * ((b >> (n - 1 - i)) & 1) as u64;
            }
            t as f64 / scale
        })
        .collect();
    DiscreteMeasure::uniform(&points)
}

/// Uniform measure on the midpoints of `n` equal cells of `[0, 1]`.
pub fn uniform_grid(n: usize) -> Result<DiscreteMeasure<f64>> {
    let points: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    DiscreteMeasure::uniform(&points)
}

/// Products of bin counts above this use FFT convolution.
pub const DIRECT_CONVOLUTION_BUDGET: usize = 1 << 20;

/// Longest index span the FFT path accepts.
pub const MAX_CONVOLUTION_SPAN: usize = 1 << 24;

fn bin<S: Scalar>(mu: &DiscreteMeasure<S>, g: f64) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for a in mu.atoms() {
        let k = (a.position.to_f64_lossy() / g).round() as i64;
        *out.entry(k).or_insert(0.0) += a.weight.to_f64_lossy();
    }
    out
}

/// Convolution after binning both factors to multiples of `g`.
///
/// Small products are summed directly; larger ones go through an FFT, and
/// output bins below `1e-13` of the total mass (transform noise) are
/// dropped. Each factor moves by at most `g/2` under binning.
pub fn convolve<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    g: f64,
) -> Result<DiscreteMeasure<S>> {
    if !(g > 0.0) {
        return Err(invalid("grid", "must be positive"));
    }
    let a = bin(mu, g);
    let b = bin(nu, g);
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    if a.len() * b.len() <= DIRECT_CONVOLUTION_BUDGET {
        for (&i, &wa) in &a {
            for (&j, &wb) in &b {
                *out.entry(i + j).or_insert(0.0) += wa * wb;
            }
        }
    } else {
        let (a0, a1) = (*a.keys().next().unwrap(), *a.keys().next_back().unwrap());
        let (b0, b1) = (*b.keys().next().unwrap(), *b.keys().next_back().unwrap());
        let span = (a1 - a0 + b1 - b0 + 1) as usize;
        if span > MAX_CONVOLUTION_SPAN {
            return Err(invalid("grid", format!("convolution span {span} bins too large")));
        }
        let n = span.next_power_of_two();
        let mut fa = vec![Complex::new(0.0, 0.0); n];
        let mut fb = vec![Complex::new(0.0, 0.0); n];
        for (&i, &w) in &a {
            fa[(i - a0) as usize].re = w;
        }
        for (&j, &w) in &b {
            fb[(j - b0) as usize].re = w;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut fa);
        planner.plan_fft_forward(n).process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= *y;
        }
        planner.plan_fft_inverse(n).process(&mut fa);
        let total: f64 = a.values().sum::<f64>() * b.values().sum::<f64>();
        let floor = 1e-13 * total;
        for (k, c) in fa.iter().take(span).enumerate() {
            let w = c.re / n as f64;
            if w > floor {
                out.insert(a0 + b0 + k as i64, w);
            }
        }
    }
    let atoms = out
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(k, w)| Atom {
            position: S::lit(k as f64 * g),
            weight: S::lit(w),
        })
        .collect::<Vec<_>>();
    DiscreteMeasure::new(atoms)
}

/// `k`-fold convolution power.
pub fn convolution_power<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    k: u32,
    g: f64,
) -> Result<DiscreteMeasure<S>> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let mut acc = convolve(mu, &DiscreteMeasure::dirac(S::zero()), g)?;
    for _ in 1..k {
        acc = convolve(&acc, mu, g)?;
    }
    Ok(acc)
}

/// Image of `μ` under the path: each atom moves to the midpoint of its
/// certified value enclosure; coincident images merge.
pub fn pushforward(
    mu: &DiscreteMeasure<f64>,
    path: &DyadicPath,
    precision: u32,
) -> Result<DiscreteMeasure<f64>> {
    let mut atoms = Vec::with_capacity(mu.len());
    for a in mu.atoms() {
        if !(0.0..=1.0).contains(&a.position) {
            return Err(Error::OutOfDomain(a.position.to_string()));
        }
        let iv = path.evaluate_f64(a.position, precision)?;
        atoms.push(Atom {
            position: iv.midpoint(),
            weight: a.weight,
        });
    }
    Ok(DiscreteMeasure::new(atoms)?.merged())
}

/// Exact-rational variant for points such as `D_ℓ` that `f64` cannot hold.
pub fn pushforward_exact(
    points: &[BigRational],
    weights: &[f64],
    path: &DyadicPath,
    precision: u32,
) -> Result<DiscreteMeasure<f64>> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch {
            declared: points.len(),
            actual: weights.len(),
        });
    }
    let mut atoms = Vec::with_capacity(points.len());
    for (t, &w) in points.iter().zip(weights) {
        let iv = path.evaluate(t, precision)?;
        atoms.push(Atom {
            position: iv.midpoint(),
            weight: w,
        });
    }
    Ok(DiscreteMeasure::new(atoms)?.merged())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{refine, WalkCode};
    use crate::randomness::BitSource;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn tent_zero_set_is_endpoints() {
        let p = DyadicPath::from_walk(&"10".parse::<WalkCode>().unwrap(), 6).unwrap();
        let z = zero_set(&p, 1e-3).unwrap();
        assert_eq!(z.representatives(), vec![0.0, 1.0]);
        assert!(z.verify(&p));
    }

    #[test]
    fn positive_path_has_only_origin() {
        let mut v: Vec<f64> = (0..=16).map(|k| 1.0 + k as f64).collect();
        v[0] = 0.0;
        let p = DyadicPath::from_samples(4, v).unwrap();
        let z = zero_set(&p, 0.5).unwrap();
        assert_eq!(z.representatives(), vec![0.0]);
    }

    #[test]
    fn zero_set_needs_positive_threshold() {
        let p = DyadicPath::from_samples(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(zero_set(&p, 0.0).is_err());
    }

    #[test]
    fn flat_path_local_time_is_uniform() {
        let p = DyadicPath::from_samples(3, vec![0.0; 9]).unwrap();
        let m = local_time_measure(&p, 0.1).unwrap();
        assert_eq!(m.len(), 8);
        assert!(close(m.mass(), 1.0, 1e-15));
        assert!(m.weights().iter().all(|&w| w == 0.125));
    }

    #[test]
    fn tent_local_time_sits_at_ends() {
        let p = DyadicPath::from_walk(&"10".parse::<WalkCode>().unwrap(), 6).unwrap();
        let m = local_time_measure(&p, 0.02).unwrap();
        let (lo, hi) = m.support();
        assert!(lo < 0.02 && hi > 0.98);
        assert!(m.positions().iter().all(|&t| !(0.05..=0.95).contains(&t)));
    }

    #[test]
    fn local_time_without_occupation_fails() {
        let mut v: Vec<f64> = vec![5.0; 17];
        v[0] = 0.0;
        let p = DyadicPath::from_samples(4, v).unwrap();
        assert!(matches!(local_time_measure(&p, 0.1), Err(Error::DegenerateMeasure(_))));
    }

    #[test]
    fn cantor_level_two() {
        let m = cantor_measure(2).unwrap();
        assert_eq!(m.positions(), vec![0.4375, 0.5625]);
        assert_eq!(m.weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn cantor_level_three() {
        let d = CantorLevel::new(3).unwrap();
        let expect: Vec<f64> = [-1.0, 1.0]
            .iter()
            .flat_map(|&a: &f64| [-1.0, 1.0].map(move |b: f64| 0.5 + a / 16.0 + b / 512.0))
            .collect();
        assert_eq!(d.points_f64(), expect);
        assert_eq!(cantor_measure(3).unwrap().weights(), vec![0.25; 4]);
    }

    #[test]
    fn cantor_levels_have_unit_mass_and_range() {
        for l in 2..=12 {
            let m = cantor_measure(l).unwrap();
            assert!(close(m.mass(), 1.0, 1e-14));
        }
        assert!(CantorLevel::new(1).is_err());
        assert!(CantorLevel::new(13).is_err());
    }

    #[test]
    fn cantor_signs_biject() {
        for l in 2..=12 {
            let d = CantorLevel::new(l).unwrap();
            for (p, s) in d.points().iter().zip(d.signs()) {
                assert_eq!(d.signs_of(p).as_ref(), Some(s));
            }
            assert!(d.points().windows(2).all(|w| w[0] < w[1]));
        }
        let d = CantorLevel::new(4).unwrap();
        assert!(d.signs_of(&BigRational::new(1.into(), 3.into())).is_none());
    }

    #[test]
    fn dirac_convolution() {
        let a = DiscreteMeasure::dirac(0.25);
        let b = DiscreteMeasure::dirac(0.5);
        let c = convolve(&a, &b, 1.0 / 1024.0).unwrap();
        assert_eq!(c.positions(), vec![0.75]);
    }

    #[test]
    fn binomial_convolution() {
        let u = DiscreteMeasure::uniform(&[0.0, 1.0]).unwrap();
        let c = convolve(&u, &u, 1.0).unwrap();
        assert_eq!(c.positions(), vec![0.0, 1.0, 2.0]);
        assert_eq!(c.weights(), vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn cantor_threefold_support_bounds() {
        let m = cantor_measure(4).unwrap();
        let g = 2f64.powi(-20);
        let c = convolution_power(&m, 3, g).unwrap();
        let d = CantorLevel::new(4).unwrap();
        let lo = 3.0 * d.points_f64()[0];
        let hi = 3.0 * d.points_f64()[7];
        let (a, b) = c.support();
        // binning moves each factor by at most g/2
        assert!(a >= lo - 2.0 * g && b <= hi + 2.0 * g, "{a} {b}");
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        let pts: Vec<f64> = (0..1100).map(|i| ((i * 7919) % 4096) as f64 / 4096.0).collect();
        let m = DiscreteMeasure::uniform(&pts).unwrap();
        let g = 1.0 / 4096.0;
        let fft = convolve(&m, &m, g).unwrap();
        let direct = {
            let a = bin(&m, g);
            let mut out: BTreeMap<i64, f64> = BTreeMap::new();
            for (&i, &wa) in &a {
                for (&j, &wb) in &a {
                    *out.entry(i + j).or_insert(0.0) += wa * wb;
                }
            }
            out
        };
        assert_eq!(fft.len(), direct.len());
        for (atom, (k, w)) in fft.atoms().iter().zip(direct) {
            assert_eq!(atom.position, k as f64 * g);
            assert!((atom.weight - w).abs() < 1e-15);
        }
    }

    #[test]
    fn pushforward_through_ramp_and_zero() {
        let ramp = DyadicPath::from_walk(&"1".parse::<WalkCode>().unwrap(), 4).unwrap();
        let mu = DiscreteMeasure::uniform(&[0.25, 0.75]).unwrap();
        let img = pushforward(&mu, &ramp, 30).unwrap();
        assert_eq!(img.positions(), vec![0.25, 0.75]);
        let zero = DyadicPath::from_samples(4, vec![0.0; 17]).unwrap();
        let img = pushforward(&mu, &zero, 30).unwrap();
        assert_eq!(img.len(), 1);
        assert_eq!(img.mass(), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let m = cantor_measure(4).unwrap();
        let text = m.to_csv("cantor:4");
        assert!(text.starts_with("# {"));
        assert_eq!(DiscreteMeasure::<f64>::from_csv(&text).unwrap(), m);
        assert!(DiscreteMeasure::<f64>::from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn invalid_atoms_rejected() {
        assert!(DiscreteMeasure::from_pairs([(0.0, 0.0)]).is_err());
        assert!(DiscreteMeasure::from_pairs([(f64::NAN, 1.0)]).is_err());
        assert!(DiscreteMeasure::<f64>::from_pairs([]).is_err());
    }

    #[test]
    fn f32_measures_work() {
        let m: DiscreteMeasure<f32> = cantor_measure(3).unwrap().cast();
        assert!((m.mass() - 1.0).abs() < 1e-6);
        let c = convolve(&m, &m, 1.0 / 65536.0).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn brownian_zero_set_verifies() {
        let p = refine(&mut BitSource::seeded(4), 14).unwrap();
        let z = zero_set(&p, default_band(&p)).unwrap();
        assert!(z.verify(&p));
        assert_eq!(z.cells[0].cell, 0);
    }

    #[test]
    fn cantor_six_pushforward_keeps_atoms() {
        let p = refine(&mut BitSource::seeded(10), 16).unwrap();
        let d = CantorLevel::new(6).unwrap();
        let img = pushforward_exact(d.points(), &[1.0 / 32.0; 32], &p, 40).unwrap();
        assert_eq!(img.len(), 32);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn convolution_conserves_mass(
            a in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..40),
            b in prop::collection::vec((-1.0f64..1.0, 0.01f64..1.0), 1..40),
            gexp in 4i32..20,
        ) {
            let mu = DiscreteMeasure::from_pairs(a).unwrap();
            let nu = DiscreteMeasure::from_pairs(b).unwrap();
            let c = convolve(&mu, &nu, 2f64.powi(-gexp)).unwrap();
            let expect = mu.mass() * nu.mass();
            prop_assert!((c.mass() - expect).abs() <= expect * 2f64.powi(-30));
        }

        #[test]
        fn pushforward_conserves_mass(
            a in prop::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..40),
            seed in any::<u64>(),
        ) {
            let mu = DiscreteMeasure::from_pairs(a).unwrap();
            let p = refine(&mut BitSource::seeded(seed), 8).unwrap();
            let img = pushforward(&mu, &p, 10).unwrap();
            prop_assert!((img.mass() - mu.mass()).abs() <= mu.mass() * 2f64.powi(-30));
        }

        #[test]
        fn zero_sets_start_at_origin_and_verify(seed in any::<u64>(), d in 2u32..12) {
            let p = refine(&mut BitSource::seeded(seed), d).unwrap();
            let z = zero_set(&p, default_band(&p)).unwrap();
            prop_assert_eq!(z.cells[0].cell, 0);
            prop_assert_eq!(z.cells[0].representative, 0.0);
            prop_assert!(z.verify(&p));
        }
    }
}
