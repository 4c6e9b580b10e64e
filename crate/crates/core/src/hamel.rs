//! The set `E`, its levels `D_ℓ`, Brownian images of them, and bounded
//! integer-relation detection.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::interval::{pow2_neg, Interval, RationalInterval};
use crate::measures::{cantor_point, CantorLevel, CANTOR_MAX_LEVEL};
use crate::paths::DyadicPath;

/// Lovász parameter `δ = 99/100`.
pub const LLL_DELTA: (u32, u32) = (99, 100);

/// Ratio between `τ/(m·B)` and the widest admissible value interval.
pub const PRECISION_MARGIN_BITS: u32 = 16;

pub fn d_level(level: u32) -> Result<CantorLevel> {
    CantorLevel::new(level)
}

/// Enclosure of the point of `E` whose first signs are `(ε_2, …, ε_ℓ)`.
///
/// The tail satisfies `|Σ_{k>ℓ} ε_k 2^{-k²}| < 2^{-(ℓ+1)²}(1 + 2^{-(2ℓ+2)})`,
/// so the half-width is at most `2^-p` whenever `p <= (ℓ+1)² − 1`.
pub fn e_point(signs: &[i8], precision: u32) -> Result<RationalInterval> {
    if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(crate::error::invalid("signs", "need at least one sign, each ±1"));
    }
    let level = signs.len() as u32 + 1;
    let next = (level + 1) * (level + 1);
    if precision > next - 1 {
        let required = (2u32..)
            .find(|l| (l + 1) * (l + 1) - 1 >= precision)
            .expect("some level suffices");
        return Err(Error::LevelInsufficient {
            precision,
            required_level: required,
        });
    }
    let tail = pow2_neg(next) * (BigRational::one() + pow2_neg(2 * level + 2));
    Ok(RationalInterval::around(&cantor_point(signs), &tail))
}

/// Certified values of a path on `D_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub level: u32,
    pub points: Vec<BigRational>,
    pub values: Vec<Interval>,
    pub precision: u32,
    pub provenance: String,
}

impl ImageSample {
    pub fn rational_values(&self) -> Vec<RationalInterval> {
        self.values.iter().map(|v| v.to_rational()).collect()
    }

    pub fn pairwise_disjoint(&self) -> bool {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite"));
        v.windows(2).all(|w| w[0].hi < w[1].lo)
    }
}

pub fn image_samples(path: &DyadicPath, level: u32, precision: u32) -> Result<ImageSample> {
    let d = d_level(level)?;
    let values = d
        .points()
        .iter()
        .map(|t| path.evaluate(t, precision))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageSample {
        level,
        points: d.points().to_vec(),
        values,
        precision,
        provenance: path.provenance().label(),
    })
}

/// LLL reduction of the rows of an integer basis under the standard inner
/// product, in exact integer arithmetic (all `d_i` and `λ_ij` stay
/// integral). Rows must be linearly independent.
pub fn lll_reduce(basis: &mut [Vec<BigInt>]) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let (p, q) = (BigInt::from(LLL_DELTA.0), BigInt::from(LLL_DELTA.1));
    let dot = |a: &[BigInt], b: &[BigInt]| -> BigInt { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // 1-based as in the integral algorithm; d[0] = 1
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = dot(&basis[0], &basis[0]);
    let mut k = 2;
    let mut kmax = 1;
    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&basis[k - 1], &basis[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    assert!(!u.is_zero(), "basis rows are dependent");
                    d[k] = u;
                }
            }
        }
        reduce(basis, &mut lam, &d, k, k - 1);
        let lhs = &q * &d[k] * &d[k - 2];
        let rhs = &p * &d[k - 1] * &d[k - 1] - &q * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            basis.swap(k - 1, k - 2);
            for j in 1..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = lam[k - 1][j].clone();
                lam[k - 1][j] = t;
            }
            let l = lam[k][k - 1].clone();
            let b = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
                lam[i][k - 1] = (&b * &t + &l * &lam[i][k]) / &d[k];
            }
            d[k - 1] = b;
            k = (k - 1).max(2);
        } else {
            for l in (1..k - 1).rev() {
                reduce(basis, &mut lam, &d, k, l);
            }
            k += 1;
        }
    }
}

fn reduce(basis: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt], k: usize, l: usize) {
    if BigInt::from(2) * lam[k][l].abs() <= d[l] {
        return;
    }
    // nearest integer to λ/d, ties upward
    let q = (BigInt::from(2) * &lam[k][l] + &d[l]).div_floor(&(BigInt::from(2) * &d[l]));
    let row = basis[l - 1].clone();
    for (x, y) in basis[k - 1].iter_mut().zip(&row) {
        *x -= &q * y;
    }
    lam[k][l] -= &q * &d[l];
    for i in 1..l {
        let t = &q * &lam[l][i];
        lam[k][i] -= t;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationCandidate {
    pub coeffs: Vec<BigInt>,
    pub residual: RationalInterval,
    pub bound: u64,
    pub tolerance: f64,
    /// Largest value-interval width, in bits (`-log2`).
    pub precision: u32,
}

impl RelationCandidate {
    /// Exact re-check against the value intervals.
    pub fn verify(&self, values: &[RationalInterval]) -> bool {
        let b = BigInt::from(self.bound);
        let tau = BigRational::from_float(self.tolerance).expect("finite tolerance");
        let r = RationalInterval::linear_combination(&self.coeffs, values);
        self.coeffs.len() == values.len()
            && self.coeffs.iter().any(|a| !a.is_zero())
            && self.coeffs.iter().all(|a| a.abs() <= b)
            && r.magnitude() < tau
    }
}

/// Outcome of one integer-relation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub candidate: Option<RelationCandidate>,
    pub bound: u64,
    pub tolerance: f64,
    pub precision: u32,
    /// Reduced basis vectors examined.
    pub inspected: usize,
    /// Smallest certified lower bound on `|Σ aᵢvᵢ|` over inspected vectors
    /// within the coefficient bound.
    pub residual_floor: Option<f64>,
}

impl RelationReport {
    pub fn found(&self) -> bool {
        self.candidate.is_some()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let c = self.candidate.as_ref();
        json!({
            "coeffs": c.map(|c| c.coeffs.iter().map(|a| a.to_string()).collect::<Vec<_>>()),
            "residual_interval": c.map(|c| [c.residual.lo.to_f64(), c.residual.hi.to_f64()]),
            "bound": self.bound,
            "tolerance": self.tolerance,
            "precision": self.precision,
            "inspected": self.inspected,
            "residual_floor": self.residual_floor,
            "verdict": if self.found() { "relation" } else { "none among inspected vectors" },
        })
    }
}

fn width_bits(values: &[RationalInterval]) -> u32 {
    let w = values.iter().map(|v| v.width()).max().unwrap_or_else(BigRational::zero);
    if w.is_zero() {
        return u32::MAX;
    }
    let f = w.to_f64().unwrap_or(f64::MAX);
    (-f.log2()).floor().max(0.0) as u32
}

/// Searches for `a ∈ ℤ^m \ {0}`, `max|aᵢ| <= bound`, with `|Σ aᵢvᵢ| < τ`
/// certified over the value intervals.
///
/// Rows `(eᵢ, round(mid(vᵢ)/τ))` are LLL-reduced and each reduced row is
/// inspected. Relations are reported with the first nonzero coefficient
/// positive. A `None` covers only the inspected rows.
pub fn integer_relation(values: &[RationalInterval], bound: u64, tolerance: f64) -> Result<RelationReport> {
    let m = values.len();
    if m < 2 {
        return Err(crate::error::invalid("values", "need at least 2 values"));
    }
    if bound == 0 {
        return Err(crate::error::invalid("bound", "must be at least 1"));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(crate::error::invalid("tolerance", "must be positive"));
    }
    let tau = BigRational::from_float(tolerance).expect("finite");
    let budget = &tau / BigRational::from_integer(BigInt::from(m as u64 * bound)) * pow2_neg(PRECISION_MARGIN_BITS);
    let widest = values.iter().map(|v| v.width()).max().expect("nonempty");
    if widest > budget {
        return Err(Error::ToleranceIncompatible {
            tolerance,
            required: widest.to_f64().unwrap_or(f64::INFINITY) * (m as f64 * bound as f64) * 65536.0,
        });
    }
    let scale = BigRational::one() / &tau;
    let two = BigRational::from_integer(BigInt::from(2));
    let mut basis: Vec<Vec<BigInt>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = vec![BigInt::zero(); m + 1];
            row[i] = BigInt::one();
            row[m] = ((&v.lo + &v.hi) / &two * &scale).round().to_integer();
            row
        })
        .collect();
    lll_reduce(&mut basis);
    let b = BigInt::from(bound);
    let mut candidate = None;
    let mut floor: Option<BigRational> = None;
    for row in &basis {
        let mut coeffs = row[..m].to_vec();
        if coeffs.iter().all(Zero::is_zero) || coeffs.iter().any(|a| a.abs() > b) {
            continue;
        }
        if coeffs.iter().find(|a| !a.is_zero()).is_some_and(|a| a.is_negative()) {
            coeffs.iter_mut().for_each(|a| *a = -a.clone());
        }
        let residual = RationalInterval::linear_combination(&coeffs, values);
        let low = residual.mignitude();
        if floor.as_ref().is_none_or(|f| low < *f) {
            floor = Some(low);
        }
        if candidate.is_none() && residual.magnitude() < tau {
            candidate = Some(RelationCandidate {
                coeffs,
                residual,
                bound,
                tolerance,
                precision: width_bits(values),
            });
        }
    }
    Ok(RelationReport {
        candidate,
        bound,
        tolerance,
        precision: width_bits(values),
        inspected: basis.len(),
        residual_floor: floor.map(|f| f.to_f64().unwrap_or(0.0)),
    })
}

/// One level of the membership trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipStep {
    pub level: u32,
    /// Best point of `D_n`, as `num/den`.
    pub t: String,
    pub value: Interval,
    /// Upper bound on `|x(t) − z|`.
    pub gap: f64,
    pub passes: bool,
}

/// For each `n` in `(start, max_level]`, the point `t ∈ D_n` minimizing the
/// certified bound on `|x(t) − z|`, and whether that bound is below `2^-n`.
pub fn membership_search(path: &DyadicPath, z: Interval, start: u32, max_level: u32) -> Result<Vec<MembershipStep>> {
    if max_level > CANTOR_MAX_LEVEL {
        return Err(Error::LevelOutOfRange {
            level: max_level,
            min: 2,
            max: CANTOR_MAX_LEVEL,
        });
    }
    let mut out = Vec::new();
    for n in (start + 1).max(2)..=max_level {
        let d = d_level(n)?;
        let precision = n + 12;
        let mut best: Option<(usize, Interval, f64)> = None;
        for (i, t) in d.points().iter().enumerate() {
            let iv = match path.evaluate(t, precision) {
                Ok(iv) => iv,
                Err(Error::PrecisionUnattainable { max, .. }) => path.evaluate(t, max)?,
                Err(e) => return Err(e),
            };
            let gap = iv.max_distance(&z);
            if best.as_ref().is_none_or(|b| gap < b.2) {
                best = Some((i, iv, gap));
            }
        }
        let (i, value, gap) = best.expect("D_n is nonempty");
        let t = &d.points()[i];
        out.push(MembershipStep {
            level: n,
            t: format!("{}/{}", t.numer(), t.denom()),
            value,
            gap,
            passes: gap < (-(n as f64)).exp2(),
        });
    }
    Ok(out)
}
