//! Box counting, greedy Hausdorff covers, sumset interiors and affine
//! copies of finite patterns.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{convolution_power, convolve, DiscreteMeasure};
use crate::scalar::Scalar;
use crate::stats::fit_line;

/// Box-counting slope over dyadic scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    /// `(k, N(2^-k))` per scale.
    pub counts: Vec<(u32, usize)>,
    pub slope: f64,
    pub stderr: f64,
}

/// Counts occupied boxes `floor(x / 2^-k)` at each `k` and fits
/// `ln N` against `k ln 2`.
pub fn box_dimension<S: Scalar>(points: &[S], scales: &[u32]) -> Result<BoxDimension> {
    if scales.len() < 4 {
        return Err(invalid("scales", "need at least 4 scales"));
    }
    if points.len() < 2 {
        return Err(invalid("points", "need at least 2 points"));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.to_f64_lossy()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    if xs[0] == xs[xs.len() - 1] {
        return Err(Error::DegenerateMeasure("all points coincide".into()));
    }
    let counts: Vec<(u32, usize)> = scales
        .iter()
        .map(|&k| {
            let inv = (k as f64).exp2();
            let mut n = 0;
            let mut last = None;
            for &x in &xs {
                let b = (x * inv).floor() as i64;
                if last != Some(b) {
                    n += 1;
                    last = Some(b);
                }
            }
            (k, n)
        })
        .collect();
    let lx: Vec<f64> = counts.iter().map(|&(k, _)| k as f64 * std::f64::consts::LN_2).collect();
    let ly: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let fit = fit_line(&lx, &ly).ok_or_else(|| invalid("scales", "need distinct scales"))?;
    Ok(BoxDimension {
        counts,
        slope: fit.slope,
        stderr: fit.slope_stderr,
    })
}

/// Shortest interval length a cover may use.
pub const MIN_COVER_LENGTH: f64 = 1.0 / (1u64 << 40) as f64;

/// Greedy cover value `Σ |B_n|^α` at scale `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverEstimate {
    pub scale: f64,
    pub alpha: f64,
    pub value: f64,
    pub cover_size: usize,
}

/// Left-to-right sweep: each interval starts at the first uncovered point
/// and takes every point within `ε`; its length is the spread of those
/// points, at least [`MIN_COVER_LENGTH`]. Against an optimal cover by
/// intervals of length `≤ ε` this loses at most a factor `2^α`.
pub fn hausdorff_at_scale<S: Scalar>(points: &[S], alpha: f64, eps: f64) -> Result<CoverEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1]"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.to_f64_lossy()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let mut value = 0.0;
    let mut cover_size = 0;
    let mut i = 0;
    while i < xs.len() {
        let start = xs[i];
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] - start <= eps {
            j += 1;
        }
        value += (xs[j] - start).max(MIN_COVER_LENGTH).powf(alpha);
        cover_size += 1;
        i = j + 1;
    }
    Ok(CoverEstimate {
        scale: eps,
        alpha,
        value,
        cover_size,
    })
}

/// Dimension estimates of one set side by side, each clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub box_dimension: f64,
    pub box_stderr: f64,
    pub capacity_dimension: Option<f64>,
    /// Decay exponent `α̂` with `|μ̂(ξ)|² ≲ |ξ|^{-α̂}`.
    pub fourier_dimension: Option<f64>,
    pub fourier_stderr: Option<f64>,
}

impl DimensionReport {
    pub fn new(
        box_dim: &BoxDimension,
        capacity: Option<f64>,
        decay: Option<&crate::spectral::DecayFit>,
    ) -> Self {
        let clamp = |x: f64| x.clamp(0.0, 1.0);
        Self {
            box_dimension: clamp(box_dim.slope),
            box_stderr: box_dim.stderr,
            capacity_dimension: capacity.map(clamp),
            fourier_dimension: decay.map(|d| clamp(d.alpha_hat)),
            fourier_stderr: decay.map(|d| d.stderr),
        }
    }
}

/// Density of a binned measure on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub grid: f64,
    /// `(bin centre, mass / grid)` for occupied bins, ascending.
    pub bins: Vec<(f64, f64)>,
}

impl DensityProfile {
    fn of<S: Scalar>(mu: &DiscreteMeasure<S>, grid: f64) -> Self {
        let bins = mu
            .atoms()
            .iter()
            .map(|a| (a.position.to_f64_lossy(), a.weight.to_f64_lossy() / grid))
            .collect();
        Self { grid, bins }
    }

    /// Mean density over occupied bins.
    pub fn mean_positive(&self) -> f64 {
        self.bins.iter().map(|b| b.1).sum::<f64>() / self.bins.len() as f64
    }

    /// Maximal runs of consecutive bins with density `>= theta`, as
    /// `(left edge, right edge)`.
    pub fn runs(&self, theta: f64) -> Vec<(f64, f64)> {
        let g = self.grid;
        let mut out = Vec::new();
        let mut current: Option<(i64, i64)> = None;
        for &(x, d) in &self.bins {
            let k = (x / g).round() as i64;
            if d < theta {
                continue;
            }
            current = match current {
                Some((a, b)) if k == b + 1 => Some((a, k)),
                Some(run) => {
                    out.push(run);
                    Some((k, k))
                }
                None => Some((k, k)),
            };
        }
        out.extend(current);
        out.into_iter()
            .map(|(a, b)| ((a as f64 - 0.5) * g, (b as f64 + 0.5) * g))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,density\n");
        for (x, d) in &self.bins {
            out.push_str(&format!("{x},{d}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumsetReport {
    pub k: u32,
    pub grid: f64,
    pub threshold: f64,
    /// Density of `μ^{*k}`.
    pub profile: DensityProfile,
    /// Longest run of `μ^{*k}` at or above the threshold.
    pub detected: Option<(f64, f64)>,
    /// Density of `μ^{*k} * reflect(μ^{*k})`, symmetrized bin by bin.
    pub difference_profile: DensityProfile,
    /// Run of the difference profile containing 0.
    pub interior: Option<(f64, f64)>,
}

impl SumsetReport {
    pub fn interior_length(&self) -> f64 {
        self.interior.map_or(0.0, |(a, b)| b - a)
    }
}

/// Default density threshold: 10% of the mean positive density.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.1;

/// Finite-resolution Steinhaus check on `E_k - E_k`.
///
/// `threshold` defaults to [`DEFAULT_THRESHOLD_FRACTION`] of each profile's
/// mean positive density.
pub fn sumset_interior<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    k: u32,
    grid: f64,
    threshold: Option<f64>,
) -> Result<SumsetReport> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let nu = convolution_power(mu, k, grid)?;
    let profile = DensityProfile::of(&nu, grid);
    let theta = threshold.unwrap_or(DEFAULT_THRESHOLD_FRACTION * profile.mean_positive());
    let detected = profile
        .runs(theta)
        .into_iter()
        .max_by(|a, b| (a.1 - a.0).partial_cmp(&(b.1 - b.0)).expect("finite"));
    let diff = convolve(&nu, &nu.reflect(), grid)?;
    let mut difference_profile = DensityProfile::of(&diff, grid);
    symmetrize_profile(&mut difference_profile);
    let theta_d = threshold.unwrap_or(DEFAULT_THRESHOLD_FRACTION * difference_profile.mean_positive());
    if detected.is_none() && difference_profile.bins.iter().all(|b| b.1 < theta_d) {
        return Err(Error::NoInterior);
    }
    let interior = difference_profile
        .runs(theta_d)
        .into_iter()
        .find(|&(a, b)| a < 0.0 && 0.0 < b);
    Ok(SumsetReport {
        k,
        grid,
        threshold: theta,
        profile,
        detected,
        difference_profile,
        interior,
    })
}

fn symmetrize_profile(p: &mut DensityProfile) {
    let g = p.grid;
    let map: std::collections::BTreeMap<i64, f64> =
        p.bins.iter().map(|&(x, d)| ((x / g).round() as i64, d)).collect();
    let mut keys: Vec<i64> = map.keys().flat_map(|&k| [k, -k]).collect();
    keys.sort_unstable();
    keys.dedup();
    p.bins = keys
        .into_iter()
        .map(|k| {
            let a = map.get(&k).copied().unwrap_or(0.0);
            let b = map.get(&-k).copied().unwrap_or(0.0);
            (k as f64 * g, 0.5 * (a + b))
        })
        .collect();
}

/// Finite set of distinct reals to embed affinely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet(Vec<f64>);

impl PatternSet {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.len() < 2 {
            return Err(invalid("pattern", "need at least 2 elements"));
        }
        let mut s = elements.clone();
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite pattern"));
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("pattern", "elements must be distinct"));
        }
        Ok(Self(elements))
    }

    /// `{0, 1, …, n-1}`.
    pub fn progression(n: usize) -> Self {
        Self((0..n).map(|i| i as f64).collect())
    }

    pub fn elements(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCopy {
    pub shift: f64,
    pub scale: f64,
    /// Support point matched to each pattern element.
    pub matched: Vec<f64>,
}

fn nearest(support: &[f64], x: f64) -> f64 {
    let i = support.partition_point(|&s| s < x);
    let mut best = f64::INFINITY;
    for j in [i.wrapping_sub(1), i] {
        if let Some(&s) = support.get(j) {
            if (s - x).abs() < (best - x).abs() {
                best = s;
            }
        }
    }
    best
}

/// Smallest scale at which the images of distinct pattern elements sit
/// more than `2·tol` apart, so every match uses distinct support points.
pub fn resolved_scale_min(pattern: &PatternSet, tol: f64) -> f64 {
    let mut a = pattern.elements().to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite pattern"));
    let gap = a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    2.0 * tol / gap
}

/// Re-checks that every `shift + scale·a` lies within `tol` of the support.
pub fn verify_affine_copy(support: &[f64], pattern: &PatternSet, copy: &AffineCopy, tol: f64) -> bool {
    copy.scale > 0.0
        && pattern
            .elements()
            .iter()
            .all(|&a| (nearest(support, copy.shift + copy.scale * a) - (copy.shift + copy.scale * a)).abs() <= tol)
}

/// First `(b, λ)` with `λ ∈ [scale_min, scale_max]` such that
/// `b + λA` lies within `tol` of the sorted support.
///
/// The first two pattern elements are pinned to support pairs
/// `(p_i, p_j)`, enumerated with `i` then `j` ascending; the rest are looked
/// up by binary search. Every hit is re-verified before it is returned.
pub fn affine_copy_search(
    support: &[f64],
    pattern: &PatternSet,
    tol: f64,
    scale_min: f64,
    scale_max: f64,
) -> Result<Option<AffineCopy>> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    if !(scale_min > 0.0 && scale_min <= scale_max) {
        return Err(invalid("scale", "need 0 < scale_min <= scale_max"));
    }
    if support.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("support", "must be sorted"));
    }
    let a = pattern.elements();
    let span = a[1] - a[0];
    let (dmin, dmax) = if span > 0.0 {
        (scale_min * span, scale_max * span)
    } else {
        (scale_max * span, scale_min * span)
    };
    for (i, &p) in support.iter().enumerate() {
        let lo = support.partition_point(|&s| s < p + dmin);
        let hi = support.partition_point(|&s| s <= p + dmax);
        let range = if span > 0.0 { lo.max(i + 1)..hi } else { lo..hi.min(i) };
        for &q in &support[range] {
            let scale = (q - p) / span;
            if !(scale >= scale_min && scale <= scale_max) {
                continue;
            }
            let shift = p - scale * a[0];
            let mut matched = vec![p, q];
            let ok = a[2..].iter().all(|&x| {
                let target = shift + scale * x;
                let s = nearest(support, target);
                matched.push(s);
                (s - target).abs() <= tol
            });
            if ok {
                let copy = AffineCopy { shift, scale, matched };
                assert!(verify_affine_copy(support, pattern, &copy, tol));
                return Ok(Some(copy));
            }
        }
    }
    Ok(None)
}
