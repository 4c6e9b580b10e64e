//! Coded walks, Lévy midpoint refinement and certified evaluation.
//!
//! A [`DyadicPath`] built by [`refine`] stores samples at `k/2^d`. Word `w`
//! of the source (64 bits, MSB first, counted from the path's start offset)
//! drives one Gaussian: word 0 gives `x(1)`, and the midpoint
//! `(2i+1)/2^j` uses word `2^(j-1) + i` with conditional standard deviation
//! `2^(-(j+1)/2)`. The layout is level order, so a depth-`d` path reads
//! exactly the first `2^d` words and deeper paths extend shallower ones.
//!
//! Because the layout is fixed, a path whose source is still reachable can
//! be refined lazily below its stored depth, down to level
//! [`MAX_REFINE_LEVEL`]. [`DyadicPath::evaluate`] uses that to certify values
//! at non-grid times.

mod snapshot;
mod walk;

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::randomness::{BitSource, SourceSpec, Tape};
use crate::stats::{fit_line, median, normal_quantile, LineFit};

pub use snapshot::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use walk::{code_of_walk, walk_from_code, PiecewiseLinearPath, WalkCode};

/// Identifier of the bits-to-Gaussian transform, stored in snapshots.
pub const TRANSFORM_ID: &str = "levy-midpoint/u52-inverse-cdf/v1";

/// Deepest dyadic level reachable by lazy refinement.
pub const MAX_REFINE_LEVEL: u32 = 64;

/// Largest depth [`refine`] will materialize.
pub const MAX_DEPTH: u32 = 26;

/// Standard normal from one 64-bit word: the top 52 bits give
/// `u = (w >> 12 + 1/2) 2^-52`, exactly representable in `(0, 1)`, then
/// `z = -√2 erfc⁻¹(2u)`.
#[inline]
pub fn gaussian_from_word(w: u64) -> f64 {
    let u = ((w >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
    normal_quantile(u)
}

#[inline]
fn midpoint_sd(level: u32) -> f64 {
    (-(level as f64 + 1.0) * 0.5).exp2()
}

#[inline]
fn midpoint(left: f64, right: f64, level: u32, z: f64) -> f64 {
    0.5 * (left + right) + midpoint_sd(level) * z
}

/// Where a path's samples came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Lévy refinement of a bit source, starting at `start_bit`.
    Source { spec: SourceSpec, start_bit: u128 },
    /// A `C_n` walk sampled on the dyadic grid.
    Walk { code: WalkCode },
    /// Samples supplied directly.
    Explicit,
}

impl Provenance {
    /// Compact text form: `seed:N`, `file:PATH`, `literal:BITS`,
    /// `walk:BITS` or `explicit`.
    pub fn label(&self) -> String {
        match self {
            Provenance::Source { spec, .. } => spec.to_string(),
            Provenance::Walk { code } => format!("walk:{code}"),
            Provenance::Explicit => "explicit".into(),
        }
    }

    pub fn from_label(label: &str, start_bit: u128) -> Result<Self> {
        if label == "explicit" {
            return Ok(Provenance::Explicit);
        }
        if let Some(bits) = label.strip_prefix("walk:") {
            return Ok(Provenance::Walk { code: bits.parse()? });
        }
        Ok(Provenance::Source {
            spec: label.parse()?,
            start_bit,
        })
    }
}

/// Samples of a path at `k/2^depth`, `k = 0..=2^depth`, linear in between.
#[derive(Debug, Clone)]
pub struct DyadicPath {
    depth: u32,
    values: Arc<[f64]>,
    provenance: Provenance,
    tape: Option<Tape>,
    refinable: u32,
}

impl PartialEq for DyadicPath {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth
            && self.provenance == other.provenance
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn refinable_level(tape: &Tape, start_bit: u128, depth: u32) -> u32 {
    match tape.len_bits() {
        None => MAX_REFINE_LEVEL,
        Some(len) => {
            let words = len.saturating_sub(start_bit) / 64;
            if words == 0 {
                return depth;
            }
            (127 - words.leading_zeros()).clamp(depth, MAX_REFINE_LEVEL)
        }
    }
}

impl DyadicPath {
    /// Wraps explicit samples; `values.len()` must be `2^depth + 1` with a
    /// zero first entry.
    pub fn from_samples(depth: u32, values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(depth, values, Provenance::Explicit)
    }

    fn with_provenance(depth: u32, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(invalid("depth", format!("{depth} exceeds {MAX_DEPTH}")));
        }
        if values.len() != (1usize << depth) + 1 {
            return Err(Error::LengthMismatch {
                declared: (1usize << depth) + 1,
                actual: values.len(),
            });
        }
        if values[0] != 0.0 {
            return Err(invalid("values", "path must vanish at t = 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "samples must be finite"));
        }
        let (tape, refinable) = match &provenance {
            Provenance::Source { spec, start_bit } => match Tape::open(spec) {
                Ok(tape) => {
                    let r = refinable_level(&tape, *start_bit, depth);
                    (Some(tape), r)
                }
                Err(_) => (None, depth),
            },
            _ => (None, depth),
        };
        Ok(Self {
            depth,
            values: values.into(),
            provenance,
            tape,
            refinable,
        })
    }

    /// Samples the walk for `code` at `k/2^depth`.
    pub fn from_walk(code: &WalkCode, depth: u32) -> Result<Self> {
        let walk = walk_from_code(code);
        let n = code.len() as u128;
        let cells = 1u128 << depth;
        let values = (0..=cells)
            .map(|k| {
                let s = k * n;
                let i = (s / cells) as usize;
                if i as u128 == n {
                    walk.values()[i]
                } else {
                    let f = (s % cells) as f64 / cells as f64;
                    let (a, b) = (walk.values()[i], walk.values()[i + 1]);
                    a + (b - a) * f
                }
            })
            .collect();
        Self::with_provenance(depth, values, Provenance::Walk { code: code.clone() })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Grid step `2^-depth`.
    pub fn step(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Deepest level at which values are defined exactly (the stored depth
    /// when the source is unavailable).
    pub fn refinable_level(&self) -> u32 {
        self.refinable
    }

    /// Grid time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    /// Uncertified linear interpolation of the stored samples.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = (self.values.len() - 1) as f64;
        let s = t.clamp(0.0, 1.0) * n;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let f = s - i as f64;
        self.values[i] + (self.values[i + 1] - self.values[i]) * f
    }

    /// Interpolated value at `num/den`, with the grid cell located exactly.
    pub fn value_at_ratio(&self, num: u64, den: u64) -> f64 {
        let cells = (self.values.len() - 1) as u128;
        let s = num as u128 * cells;
        let i = (s / den as u128) as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let f = (s % den as u128) as f64 / den as f64;
        self.values[i] + (self.values[i + 1] - self.values[i]) * f
    }

    fn noise(&self, level: u32, index: u128) -> Result<f64> {
        let (tape, start) = match (&self.tape, &self.provenance) {
            (Some(t), Provenance::Source { start_bit, .. }) => (t, *start_bit),
            _ => unreachable!("noise requested from a non-refinable path"),
        };
        let word = (1u128 << (level - 1)) + index;
        Ok(gaussian_from_word(tape.u64_at(start + 64 * word)?))
    }

    /// Values at `a/2^level` and `(a+1)/2^level`, refining lazily below the
    /// stored depth. Requires `a < 2^level` and `level <= refinable_level()`.
    fn bracket(&self, a: u128, level: u32) -> Result<(f64, f64)> {
        if level <= self.depth {
            let shift = self.depth - level;
            let i = (a << shift) as usize;
            return Ok((self.values[i], self.values[i + (1usize << shift)]));
        }
        let top = (a >> (level - self.depth)) as usize;
        let (mut lv, mut rv) = (self.values[top], self.values[top + 1]);
        for j in self.depth + 1..=level {
            let parent = a >> (level - j + 1);
            let mid = midpoint(lv, rv, j, self.noise(j, parent)?);
            if (a >> (level - j)) & 1 == 0 {
                rv = mid;
            } else {
                lv = mid;
            }
        }
        Ok((lv, rv))
    }

    /// Exact value at `k/2^level` for `level <= refinable_level()`.
    pub fn value_at_dyadic(&self, k: u128, level: u32) -> Result<f64> {
        if level > self.refinable {
            return Err(Error::LevelOutOfRange {
                level,
                min: 0,
                max: self.refinable,
            });
        }
        if level < 128 && k > (1u128 << level) {
            return Err(Error::OutOfDomain(format!("{k}/2^{level}")));
        }
        if k == 1u128 << level {
            return Ok(self.values[self.values.len() - 1]);
        }
        Ok(self.bracket(k, level)?.0)
    }

    /// Certified enclosure of the path value at `t`, of width at most
    /// `2^-precision`.
    ///
    /// Dyadic `t` at a reachable level is returned as a point. Otherwise
    /// the enclosure is centred on the interpolant at the shallowest level
    /// `L >= depth` whose modulus allowance `√h ln(1/h)`, `h = 2^-L`, fits
    /// the requested width; paths without a reachable source have no
    /// allowance beyond rounding since their interpolant is the path.
    pub fn evaluate(&self, t: &BigRational, precision: u32) -> Result<Interval> {
        if t.is_negative() || *t > BigRational::one() {
            return Err(Error::OutOfDomain(t.to_string()));
        }
        if t.is_zero() {
            return Ok(Interval::point(0.0));
        }
        if let Some(level) = dyadic_level(t) {
            if level <= self.refinable {
                let k = t.numer().to_u128().expect("numerator below 2^level");
                return Ok(Interval::point(self.value_at_dyadic(k, level)?));
            }
        }
        let target = (-(precision as f64)).exp2();
        if self.refinable == self.depth {
            let iv = self.interpolate(t, self.depth, 0.0)?;
            if iv.width() > target {
                return Err(Error::PrecisionUnattainable {
                    requested: precision,
                    max: bits_of(iv.width()),
                });
            }
            return Ok(iv);
        }
        for level in self.depth.max(2)..=self.refinable {
            let allowance = modulus_allowance(level);
            if 2.0 * allowance * (1.0 + 1e-12) <= target {
                let iv = self.interpolate(t, level, allowance)?;
                if iv.width() <= target {
                    return Ok(iv);
                }
            }
        }
        Err(Error::PrecisionUnattainable {
            requested: precision,
            max: bits_of(2.0 * modulus_allowance(self.refinable)),
        })
    }

    /// `evaluate` at an `f64` time (every finite float is a dyadic rational).
    pub fn evaluate_f64(&self, t: f64, precision: u32) -> Result<Interval> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain(t.to_string()));
        }
        self.evaluate(&BigRational::from_float(t).expect("finite"), precision)
    }

    fn interpolate(&self, t: &BigRational, level: u32, allowance: f64) -> Result<Interval> {
        let scaled = t * BigRational::from_integer(BigInt::one() << level as usize);
        let a = scaled.floor();
        let frac = (&scaled - &a).to_f64().expect("fraction in [0, 1)");
        let a = a.to_integer().to_u128().expect("index below 2^level");
        if a == 1u128 << level {
            let v = self.values[self.values.len() - 1];
            return Ok(Interval::around(v, allowance));
        }
        let (lv, rv) = self.bracket(a, level)?;
        let centre = lv + (rv - lv) * frac;
        let rounding = 8.0 * f64::EPSILON * (lv.abs() + rv.abs());
        Ok(Interval::around(centre, allowance + rounding))
    }
}

/// `√h ln(1/h)` at `h = 2^-level`.
pub fn modulus_allowance(level: u32) -> f64 {
    let h = (-(level as f64)).exp2();
    h.sqrt() * (level as f64 * std::f64::consts::LN_2)
}

fn bits_of(width: f64) -> u32 {
    if width <= 0.0 {
        u32::MAX
    } else {
        (-width.log2()).floor().max(0.0) as u32
    }
}

/// `Some(k)` when `t = m/2^k` in lowest terms.
fn dyadic_level(t: &BigRational) -> Option<u32> {
    let d = t.denom();
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz as usize).is_one() {
        Some(tz as u32)
    } else {
        None
    }
}

/// Lévy midpoint construction at `depth`, consuming `64 * 2^depth` bits.
pub fn refine(source: &mut BitSource, depth: u32) -> Result<DyadicPath> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(invalid("depth", format!("must lie in 1..={MAX_DEPTH}")));
    }
    let words = 1usize << depth;
    source.ensure_available(64 * words as u128)?;
    let start_bit = source.cursor();
    let mut values = vec![0.0; words + 1];
    values[words] = gaussian_from_word(source.next_u64()?);
    for j in 1..=depth {
        let stride = words >> j;
        for i in 0..(1usize << (j - 1)) {
            let k = (2 * i + 1) * stride;
            let z = gaussian_from_word(source.next_u64()?);
            values[k] = midpoint(values[k - stride], values[k + stride], j, z);
        }
    }
    DyadicPath::with_provenance(
        depth,
        values,
        Provenance::Source {
            spec: source.spec().clone(),
            start_bit,
        },
    )
}

/// Tracking code of `path` at resolution `m`: step `i` goes up iff
/// `path((i+1)/m)` lies above the walk's current height.
pub fn approximant(path: &DyadicPath, m: usize) -> Result<PiecewiseLinearPath> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    let root = (m as f64).sqrt();
    let mut height = 0i64;
    let mut bits = Vec::with_capacity(m);
    for i in 0..m {
        let target = path.value_at_ratio(i as u64 + 1, m as u64);
        let up = target >= height as f64 / root;
        height += if up { 1 } else { -1 };
        bits.push(up);
    }
    Ok(walk_from_code(&WalkCode::new(bits)?))
}

/// Refines `source` to `depth` and returns its `C_m` approximant.
pub fn approximant_from_source(
    source: &mut BitSource,
    m: usize,
    depth: u32,
) -> Result<PiecewiseLinearPath> {
    let path = refine(source, depth)?;
    approximant(&path, m)
}

/// `sup_t |walk(t) - path(t)|` over both piecewise linear interpolants.
pub fn sup_distance(walk: &PiecewiseLinearPath, path: &DyadicPath) -> f64 {
    let m = walk.segments() as u64;
    let cells = (path.values().len() - 1) as u64;
    let on_path_grid = path
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| (walk_value_at_ratio(walk, k as u64, cells) - v).abs());
    let on_walk_grid = walk
        .values()
        .iter()
        .enumerate()
        .map(|(i, &w)| (w - path.value_at_ratio(i as u64, m)).abs());
    on_path_grid.chain(on_walk_grid).fold(0.0, f64::max)
}

fn walk_value_at_ratio(walk: &PiecewiseLinearPath, num: u64, den: u64) -> f64 {
    let n = walk.segments() as u128;
    let s = num as u128 * n;
    let i = (s / den as u128) as usize;
    let v = walk.values();
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let f = (s % den as u128) as f64 / den as f64;
    v[i] + (v[i + 1] - v[i]) * f
}

/// Empirical version of the rate `sup|p_m - x| <= C log m / √m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    /// `(m, sup-distance)` pairs in input order.
    pub points: Vec<(usize, f64)>,
    /// `dist · √m / ln m` per point (`NaN` at `m = 1`).
    pub ratios: Vec<f64>,
    /// Smallest `C` for which the bound holds at every tested `m >= onset`.
    pub constant: f64,
    /// Smallest tested `m >= 2`.
    pub onset: usize,
    /// Least-squares fit of `ln dist` against `ln m`.
    pub log_fit: Option<LineFit>,
    /// Residuals of `log_fit`, one per `m >= 2`.
    pub residuals: Vec<f64>,
}

pub fn convergence_fit(path: &DyadicPath, ms: &[usize]) -> Result<ConvergenceFit> {
    if ms.is_empty() {
        return Err(Error::Empty("resolutions"));
    }
    let mut points = Vec::with_capacity(ms.len());
    for &m in ms {
        points.push((m, sup_distance(&approximant(path, m)?, path)));
    }
    let ratios: Vec<f64> = points
        .iter()
        .map(|&(m, d)| {
            if m < 2 {
                f64::NAN
            } else {
                d * (m as f64).sqrt() / (m as f64).ln()
            }
        })
        .collect();
    let constant = ratios.iter().filter(|r| !r.is_nan()).fold(0.0, |a: f64, &b| a.max(b));
    let onset = ms.iter().copied().filter(|&m| m >= 2).min().unwrap_or(1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|&&(m, d)| m >= 2 && d > 0.0)
        .map(|&(m, d)| ((m as f64).ln(), d.ln()))
        .unzip();
    let log_fit = fit_line(&xs, &ys);
    let residuals = match &log_fit {
        Some(f) => xs.iter().zip(&ys).map(|(x, y)| y - f.intercept - f.slope * x).collect(),
        None => Vec::new(),
    };
    Ok(ConvergenceFit {
        points,
        ratios,
        constant,
        onset,
        log_fit,
        residuals,
    })
}

/// Largest increment at one scale `h = 2^-k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub k: u32,
    pub h: f64,
    pub max_increment: f64,
    /// `max_increment / (√h ln(1/h))`, `None` at `h = 1`.
    pub holder_log_ratio: Option<f64>,
    /// `max_increment / √(2h ln(1/h))`, `None` at `h = 1`.
    pub levy_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub rows: Vec<ModulusRow>,
    /// Median of the `√h ln(1/h)` ratios.
    pub fitted_c: Option<f64>,
    /// Median of the Lévy-normalized ratios.
    pub fitted_c_levy: Option<f64>,
    /// Scales whose increment exceeds the fitted `√h ln(1/h)` envelope by
    /// more than 10%.
    pub violations: Vec<u32>,
}

/// Sup of `|x(t+h) - x(t)|` over grid times, for each `h = 2^-k`.
pub fn modulus_check(path: &DyadicPath, scales: &[u32]) -> Result<ModulusReport> {
    let v = path.values();
    let mut rows = Vec::with_capacity(scales.len());
    for &k in scales {
        if k > path.depth() {
            return Err(invalid("scales", format!("2^-{k} is finer than the grid")));
        }
        let lag = 1usize << (path.depth() - k);
        let max_increment = v
            .iter()
            .zip(&v[lag..])
            .map(|(a, b)| (b - a).abs())
            .fold(0.0, f64::max);
        let h = (-(k as f64)).exp2();
        let log = k as f64 * std::f64::consts::LN_2;
        let (holder_log_ratio, levy_ratio) = if k == 0 {
            (None, None)
        } else {
            (
                Some(max_increment / (h.sqrt() * log)),
                Some(max_increment / (2.0 * h * log).sqrt()),
            )
        };
        rows.push(ModulusRow {
            k,
            h,
            max_increment,
            holder_log_ratio,
            levy_ratio,
        });
    }
    let holder: Vec<f64> = rows.iter().filter_map(|r| r.holder_log_ratio).collect();
    let levy: Vec<f64> = rows.iter().filter_map(|r| r.levy_ratio).collect();
    let fitted_c = median(&holder);
    let fitted_c_levy = median(&levy);
    let violations = match fitted_c {
        Some(c) => rows
            .iter()
            .filter(|r| r.holder_log_ratio.is_some_and(|q| q > 1.1 * c))
            .map(|r| r.k)
            .collect(),
        None => Vec::new(),
    };
    Ok(ModulusReport {
        rows,
        fitted_c,
        fitted_c_levy,
        violations,
    })
}

#[cfg(test)]
mod tests;
