//! Fourier transforms of discrete measures, decay fits and energy integrals.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{pairwise_sum, Scalar};
use crate::stats::{fit_line, median, LineFit};

/// Sampled Fourier transform `μ̂(ξ) = Σ w_j e^{iξ t_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample<S: Scalar> {
    pub frequencies: Vec<S>,
    pub values: Vec<Complex<S>>,
    /// `μ̂(0)`.
    pub mass: S,
    /// `Σ w_j²`, the diagonal part of `|μ̂|²`.
    pub weight_energy: S,
    pub provenance: String,
}

fn pairwise_by<S: Scalar>(lo: usize, hi: usize, f: &impl Fn(usize) -> (S, S)) -> (S, S) {
    if hi - lo <= 32 {
        let mut acc = (S::zero(), S::zero());
        for j in lo..hi {
            let (a, b) = f(j);
            acc = (acc.0 + a, acc.1 + b);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let l = pairwise_by(lo, mid, f);
    let r = pairwise_by(mid, hi, f);
    (l.0 + r.0, l.1 + r.1)
}

fn transform_at<S: Scalar>(mu: &DiscreteMeasure<S>, xi: S) -> Complex<S> {
    let atoms = mu.atoms();
    let (re, im) = pairwise_by(0, atoms.len(), &|j| {
        let (s, c) = (xi * atoms[j].position).sin_cos();
        (atoms[j].weight * c, atoms[j].weight * s)
    });
    Complex::new(re, im)
}

/// Evaluates `μ̂` at each frequency. Values at negative frequencies are the
/// conjugates of those at `|ξ|`, so Hermitian symmetry is exact. Each value
/// carries rounding error of order `len(μ) · 2^-50` relative to the mass.
pub fn fourier_transform<S: Scalar>(mu: &DiscreteMeasure<S>, frequencies: &[S]) -> SpectrumSample<S> {
    let values = frequencies
        .par_iter()
        .map(|&xi| {
            let v = transform_at(mu, xi.abs());
            if xi < S::zero() {
                v.conj()
            } else {
                v
            }
        })
        .collect();
    let w = mu.weights();
    let sq: Vec<S> = w.iter().map(|&x| x * x).collect();
    SpectrumSample {
        frequencies: frequencies.to_vec(),
        values,
        mass: pairwise_sum(&w),
        weight_energy: pairwise_sum(&sq),
        provenance: String::new(),
    }
}

impl<S: Scalar> SpectrumSample<S> {
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn abs2(&self) -> Vec<S> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// CSV with columns `xi,re,im,abs2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,re,im,abs2\n");
        for (xi, v) in self.frequencies.iter().zip(&self.values) {
            writeln!(out, "{},{},{},{}", xi, v.re, v.im, v.norm_sqr()).expect("string write");
        }
        out
    }
}

/// `per_annulus` log-spaced frequencies in each `[2^j, 2^{j+1})`,
/// `j = first..=last`.
pub fn annulus_grid<S: Scalar>(first: i32, last: i32, per_annulus: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(((last - first + 1).max(0) as usize) * per_annulus);
    for j in first..=last {
        for i in 0..per_annulus {
            out.push(S::lit((j as f64 + i as f64 / per_annulus as f64).exp2()));
        }
    }
    out
}

/// Default decay grid: 64 points per annulus, annuli `2^2..2^14`.
pub fn default_decay_grid<S: Scalar>() -> Vec<S> {
    annulus_grid(2, 14, 64)
}

/// `-ξ` for every `ξ` followed by the grid itself, sorted.
pub fn symmetrize<S: Scalar>(positive: &[S]) -> Vec<S> {
    let mut out: Vec<S> = positive.iter().rev().map(|&x| -x).collect();
    out.extend_from_slice(positive);
    out
}

/// Positive half of a grid suited to energy quadrature of a measure with
/// support diameter `diameter`: log-spaced from `2^-8` while the log step
/// is finer than `0.2 / diameter`, then linear with that step up to
/// `cutoff`.
pub fn energy_grid<S: Scalar>(cutoff: f64, diameter: f64) -> Vec<S> {
    let linear = 0.2 / diameter.max(1e-300);
    let ratio = 2f64.powf(1.0 / 64.0);
    let mut out = Vec::new();
    let mut xi = 2f64.powi(-8);
    while xi < cutoff && xi * (ratio - 1.0) < linear {
        out.push(S::lit(xi));
        xi *= ratio;
    }
    let steps = ((cutoff - xi) / linear).floor().max(0.0) as usize;
    for i in 0..=steps {
        out.push(S::lit(xi + i as f64 * linear));
    }
    out
}

/// Fit of `ln median|μ̂|²` against `ln|ξ|` over dyadic annuli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `(j, median |μ̂|²)` for each annulus `[2^j, 2^{j+1})` used.
    pub annuli: Vec<(i32, f64)>,
    /// Fitted exponent: `|μ̂(ξ)|² ≈ c |ξ|^{-alpha_hat}`.
    pub alpha_hat: f64,
    pub stderr: f64,
    pub fit_range: (i32, i32),
    pub fit: LineFit,
}

pub const MIN_ANNULI: usize = 4;

pub fn decay_exponent<S: Scalar>(spectrum: &SpectrumSample<S>) -> Result<DecayFit> {
    let mut by_annulus: std::collections::BTreeMap<i32, Vec<f64>> = Default::default();
    for (xi, v) in spectrum.frequencies.iter().zip(&spectrum.values) {
        let x = xi.to_f64_lossy().abs();
        if x > 0.0 {
            by_annulus
                .entry(x.log2().floor() as i32)
                .or_default()
                .push(v.norm_sqr().to_f64_lossy());
        }
    }
    let annuli: Vec<(i32, f64)> = by_annulus
        .into_iter()
        .filter_map(|(j, vals)| median(&vals).filter(|&m| m > 0.0).map(|m| (j, m)))
        .collect();
    if annuli.len() < MIN_ANNULI {
        return Err(Error::TooFewAnnuli {
            found: annuli.len(),
            required: MIN_ANNULI,
        });
    }
    let xs: Vec<f64> = annuli
        .iter()
        .map(|&(j, _)| (j as f64 + 0.5) * std::f64::consts::LN_2)
        .collect();
    let ys: Vec<f64> = annuli.iter().map(|&(_, m)| m.ln()).collect();
    let fit = fit_line(&xs, &ys).expect("distinct annuli");
    Ok(DecayFit {
        fit_range: (annuli[0].0, annuli[annuli.len() - 1].0),
        annuli,
        alpha_hat: -fit.slope + 0.0,
        stderr: fit.slope_stderr,
        fit,
    })
}

/// Direct Riesz energy with the diagonal excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectEnergy {
    pub value: f64,
    /// Atoms absorbed by merging coincident positions beforehand.
    pub merged_atoms: usize,
}

/// `Σ_{j≠k} w_j w_k |t_j - t_k|^{-α}` after merging coincident atoms.
pub fn energy_direct<S: Scalar>(mu: &DiscreteMeasure<S>, alpha: f64) -> Result<DirectEnergy> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1)"));
    }
    let m = mu.merged();
    let a = m.atoms();
    let s_alpha = S::lit(alpha);
    let rows: Vec<S> = (0..a.len())
        .into_par_iter()
        .map(|j| {
            let terms: Vec<S> = a[j + 1..]
                .iter()
                .map(|b| b.weight * (b.position - a[j].position).abs().powf(-s_alpha))
                .collect();
            a[j].weight * pairwise_sum(&terms)
        })
        .collect();
    Ok(DirectEnergy {
        value: 2.0 * pairwise_sum(&rows).to_f64_lossy(),
        merged_atoms: mu.len() - m.len(),
    })
}

/// Truncated `∫ |μ̂(ξ)|² |ξ|^{α-1} dξ` and its split into the diagonal
/// (self) part and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnergy {
    pub alpha: f64,
    pub cutoff: f64,
    /// Full quadrature, including the `|ξ| < ξ_min` piece.
    pub raw: f64,
    /// `Σ w²` times the same quadrature of `|ξ|^{α-1}`.
    pub self_term: f64,
    /// `raw - self_term`; comparable to [`energy_direct`].
    pub off_diagonal: f64,
    /// Contribution of `|ξ| < ξ_min`, modelled as `|μ̂(0)|² ξ_min^α / α`
    /// per side.
    pub near_zero: f64,
}

/// Trapezoid rule on the (sorted, symmetric) grid, `ξ = 0` excluded, plus
/// an analytic piece on `(-ξ_min, ξ_min)`.
pub fn energy_spectral<S: Scalar>(spectrum: &SpectrumSample<S>, alpha: f64) -> Result<SpectralEnergy> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1)"));
    }
    let mut pts: Vec<(f64, f64)> = spectrum
        .frequencies
        .iter()
        .zip(&spectrum.values)
        .map(|(x, v)| (x.to_f64_lossy(), v.norm_sqr().to_f64_lossy()))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequencies"));
    let n = pts.len();
    if n < 2 || (0..n).any(|i| pts[i].0 != -pts[n - 1 - i].0) {
        return Err(Error::AsymmetricGrid);
    }
    let zero = pts.iter().find(|p| p.0 == 0.0).map(|p| p.1);
    let pos: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 > 0.0).collect();
    let neg: Vec<(f64, f64)> = pts.iter().rev().copied().filter(|p| p.0 < 0.0).map(|(x, v)| (-x, v)).collect();
    if pos.is_empty() {
        return Err(Error::AsymmetricGrid);
    }
    let xi_min = pos[0].0;
    let cutoff = pos[pos.len() - 1].0;
    let kernel = |x: f64| x.powf(alpha - 1.0);
    let trap = |side: &[(f64, f64)], weight: &dyn Fn(f64) -> f64| -> f64 {
        let terms: Vec<f64> = side
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (weight(w[0].1) * kernel(w[0].0) + weight(w[1].1) * kernel(w[1].0)))
            .collect();
        pairwise_sum(&terms)
    };
    let ident = |v: f64| v;
    let one = |_: f64| 1.0;
    let near_side = |v: f64| v * xi_min.powf(alpha) / alpha;
    let near_zero = near_side(zero.unwrap_or(pos[0].1)) + near_side(zero.unwrap_or(neg[0].1));
    let raw = trap(&pos, &ident) + trap(&neg, &ident) + near_zero;
    let w2 = spectrum.weight_energy.to_f64_lossy();
    let self_term = w2 * (2.0 * trap(&pos, &one) + 2.0 * xi_min.powf(alpha) / alpha);
    Ok(SpectralEnergy {
        alpha,
        cutoff,
        raw,
        self_term,
        off_diagonal: raw - self_term,
        near_zero,
    })
}

/// Energies of one measure on an `α` grid by both routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub alphas: Vec<f64>,
    pub direct: Vec<f64>,
    pub spectral: Vec<SpectralEnergy>,
    /// `direct / spectral.off_diagonal` per `α`.
    pub ratio: Vec<f64>,
}

pub fn energy_report<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    alphas: &[f64],
    spectrum: &SpectrumSample<S>,
) -> Result<EnergyReport> {
    let mut direct = Vec::with_capacity(alphas.len());
    let mut spectral = Vec::with_capacity(alphas.len());
    for &a in alphas {
        direct.push(energy_direct(mu, a)?.value);
        spectral.push(energy_spectral(spectrum, a)?);
    }
    let ratio = direct.iter().zip(&spectral).map(|(d, s)| d / s.off_diagonal).collect();
    Ok(EnergyReport {
        alphas: alphas.to_vec(),
        direct,
        spectral,
        ratio,
    })
}

/// Default exponent grid for [`capacity_dimension`]: `0.05, 0.10, …, 0.95`
/// then `0.97, 0.99`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).chain([0.97, 0.99]).collect()
}

/// Capacity-dimension estimate from energies of successive truncations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub alphas: Vec<f64>,
    /// `energies[i][a]`: direct energy of truncation `i` at `alphas[a]`.
    pub energies: Vec<Vec<f64>>,
    /// `ln(I_L / I_{L-1})` for the last two truncations.
    pub growth: Vec<f64>,
    /// Growth expected at the critical exponent, `ln(L / (L-1))`.
    pub critical_growth: f64,
    pub estimate: f64,
}

/// Largest `α` on the grid (interpolated) whose energy growth between the
/// last two truncations stays below the critical logarithmic rate.
///
/// `levels` pairs a truncation index `L >= 1` with its measure; indices
/// must increase. At the critical exponent of a self-similar set the
/// energy grows linearly in `L`, so the boundary is where
/// `I_L / I_{L-1}` crosses `L / (L-1)`.
pub fn capacity_dimension<S: Scalar>(
    levels: &[(u32, DiscreteMeasure<S>)],
    alphas: &[f64],
) -> Result<CapacityReport> {
    if levels.len() < 2 {
        return Err(invalid("levels", "need at least two truncation levels"));
    }
    if alphas.len() < 8 || alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(invalid("alphas", "need at least 8 exponents in (0, 1)"));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("alphas", "must be increasing"));
    }
    if levels.windows(2).any(|w| w[0].0 >= w[1].0) || levels[0].0 == 0 {
        return Err(invalid("levels", "indices must be positive and increasing"));
    }
    let energies: Vec<Vec<f64>> = levels
        .iter()
        .map(|(_, m)| alphas.iter().map(|&a| energy_direct(m, a).map(|e| e.value)).collect())
        .collect::<Result<_>>()?;
    let last = energies.len() - 1;
    let (l_prev, l_last) = (levels[last - 1].0 as f64, levels[last].0 as f64);
    let critical_growth = (l_last / l_prev).ln();
    let growth: Vec<f64> = (0..alphas.len())
        .map(|a| {
            let (p, q) = (energies[last - 1][a], energies[last][a]);
            if p > 0.0 && q > 0.0 {
                (q / p).ln()
            } else {
                f64::NAN
            }
        })
        .collect();
    let estimate = if growth.iter().all(|g| g.is_nan()) {
        0.0
    } else {
        crossing(alphas, &growth, critical_growth)
    };
    Ok(CapacityReport {
        alphas: alphas.to_vec(),
        energies,
        growth,
        critical_growth,
        estimate,
    })
}

fn crossing(alphas: &[f64], growth: &[f64], level: f64) -> f64 {
    let first_above = growth.iter().position(|&g| g > level);
    match first_above {
        None => alphas[alphas.len() - 1],
        Some(0) => alphas[0],
        Some(i) => {
            let (a0, a1) = (alphas[i - 1], alphas[i]);
            let (g0, g1) = (growth[i - 1], growth[i]);
            if !(g1 > g0) || g0.is_nan() {
                return a0;
            }
            a0 + (a1 - a0) * (level - g0) / (g1 - g0)
        }
    }
}

/// Comparison of a Hausdorff-type and a Fourier-type dimension estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalemVerdict {
    pub hausdorff: f64,
    pub fourier: f64,
    pub tolerance: f64,
    pub salem: bool,
}

pub fn salem_check(hausdorff: f64, fourier: f64, tolerance: f64) -> Result<SalemVerdict> {
    for (name, v) in [("hausdorff", hausdorff), ("fourier", fourier)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, format!("{v} outside [0, 1]")));
        }
    }
    Ok(SalemVerdict {
        hausdorff,
        fourier,
        tolerance,
        salem: (fourier - hausdorff).abs() <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{middle_thirds_cantor, uniform_grid};
    use proptest::prelude::*;

    #[test]
    fn dirac_at_origin_is_flat() {
        let m = DiscreteMeasure::dirac(0.0);
        let s = fourier_transform(&m, &[-3.0, 0.0, 1.0, 100.0]);
        assert!(s.values.iter().all(|v| *v == Complex::new(1.0, 0.0)));
    }

    #[test]
    fn two_atoms_cancel_at_pi() {
        let m = DiscreteMeasure::uniform(&[0.0, 1.0]).unwrap();
        let s = fourier_transform(&m, &[std::f64::consts::PI]);
        assert!(s.values[0].norm() < 1e-15);
    }

    #[test]
    fn lebesgue_approximation_nearly_vanishes_at_integer_frequencies() {
        let n = 257;
        let m = uniform_grid(n).unwrap();
        let xis: Vec<f64> = (1..20).map(|k| 2.0 * std::f64::consts::PI * k as f64).collect();
        let s = fourier_transform(&m, &xis);
        assert!(s.values.iter().all(|v| v.norm() <= 2.0 / n as f64));
    }

    #[test]
    fn hermitian_symmetry_is_exact() {
        let m = middle_thirds_cantor(5).unwrap();
        let grid = symmetrize(&annulus_grid::<f64>(0, 6, 8));
        let s = fourier_transform(&m, &grid);
        let n = grid.len();
        for i in 0..n {
            assert_eq!(s.values[i], s.values[n - 1 - i].conj());
        }
    }

    #[test]
    fn value_at_zero_is_mass() {
        let m = middle_thirds_cantor(6).unwrap();
        let s = fourier_transform(&m, &[0.0]);
        assert_eq!(s.values[0].re, m.mass());
        assert_eq!(s.values[0].im, 0.0);
    }

    #[test]
    fn dirac_decay_is_zero() {
        let s = fourier_transform(&DiscreteMeasure::dirac(0.0), &default_decay_grid::<f64>());
        let fit = decay_exponent(&s).unwrap();
        assert_eq!(fit.alpha_hat, 0.0);
        assert_eq!(fit.annuli.len(), 13);
    }

    #[test]
    fn too_few_annuli() {
        let s = fourier_transform(&DiscreteMeasure::dirac(0.0), &annulus_grid::<f64>(2, 4, 16));
        assert_eq!(
            decay_exponent(&s).unwrap_err(),
            Error::TooFewAnnuli { found: 3, required: 4 }
        );
    }

    #[test]
    fn two_atom_energy() {
        let m = DiscreteMeasure::uniform(&[0.0, 1.0]).unwrap();
        assert_eq!(energy_direct(&m, 0.5).unwrap().value, 0.5);
        assert_eq!(energy_direct(&DiscreteMeasure::dirac(0.3), 0.5).unwrap().value, 0.0);
        assert!(energy_direct(&m, 1.0).is_err());
    }

    #[test]
    fn coincident_atoms_merge_before_energy() {
        let m = DiscreteMeasure::from_pairs([(0.0, 0.25), (0.0, 0.25), (1.0, 0.5)]).unwrap();
        let e = energy_direct(&m, 0.5).unwrap();
        assert_eq!(e.merged_atoms, 1);
        assert_eq!(e.value, 0.5);
    }

    #[test]
    fn lebesgue_energy_approaches_closed_form() {
        // ∫∫ |x - y|^{-1/2} dx dy over the unit square
        let exact = 8.0 / 3.0;
        let errs: Vec<f64> = [10, 11, 12]
            .iter()
            .map(|&k| (energy_direct(&uniform_grid(1 << k).unwrap(), 0.5).unwrap().value - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[2] / exact < 0.03, "{errs:?}");
    }

    #[test]
    fn dirac_spectral_energy() {
        let cutoff = 1024.0;
        let grid = symmetrize(&energy_grid::<f64>(cutoff, 1.0));
        let s = fourier_transform(&DiscreteMeasure::dirac(0.0), &grid);
        let e = energy_spectral(&s, 0.5).unwrap();
        let expect = 4.0 * e.cutoff.sqrt();
        assert!((e.raw - expect).abs() / expect < 1e-4, "{} vs {expect}", e.raw);
        assert!(e.off_diagonal.abs() < 1e-9 * expect);
    }

    #[test]
    fn spectral_energy_requires_symmetry() {
        let s = fourier_transform(&DiscreteMeasure::dirac(0.0), &[1.0, 2.0]);
        assert_eq!(energy_spectral(&s, 0.5).unwrap_err(), Error::AsymmetricGrid);
    }

    #[test]
    fn zero_spectrum_comes_from_origin_only() {
        let s = SpectrumSample {
            frequencies: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            values: vec![Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)],
            mass: 1.0,
            weight_energy: 1.0,
            provenance: String::new(),
        };
        let e = energy_spectral(&s, 0.5).unwrap();
        assert_eq!(e.raw, e.near_zero);
        assert_eq!(e.raw, 4.0);
    }

    #[test]
    fn direct_over_spectral_matches_riesz_constant() {
        let alpha = 0.4;
        let constant = 2.0 * statrs::function::gamma::gamma(alpha) * (std::f64::consts::PI * alpha / 2.0).cos();
        let m = DiscreteMeasure::uniform(&[0.0, 0.3, 1.0]).unwrap();
        let grid = symmetrize(&energy_grid::<f64>(2f64.powi(16), 1.0));
        let s = fourier_transform(&m, &grid);
        let d = energy_direct(&m, alpha).unwrap().value;
        let e = energy_spectral(&s, alpha).unwrap();
        let r = d / e.off_diagonal;
        assert!((r * constant - 1.0).abs() < 0.05, "ratio {r}, expected {}", 1.0 / constant);
    }

    #[test]
    fn capacity_of_single_atom_is_zero() {
        let levels: Vec<(u32, DiscreteMeasure<f64>)> = (1..4).map(|l| (l, DiscreteMeasure::dirac(0.5))).collect();
        let alphas: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(capacity_dimension(&levels, &alphas).unwrap().estimate, 0.0);
        assert!(capacity_dimension(&levels[..1], &alphas).is_err());
        assert!(capacity_dimension(&levels, &alphas[..4]).is_err());
    }

    #[test]
    fn salem_examples() {
        assert!(salem_check(0.5, 0.5, 0.1).unwrap().salem);
        assert!(!salem_check(0.63, 0.0, 0.1).unwrap().salem);
        assert!(salem_check(1.2, 0.0, 0.1).is_err());
    }

    #[test]
    fn spectrum_csv_columns() {
        let s = fourier_transform(&DiscreteMeasure::dirac(0.0), &[1.0]);
        assert_eq!(s.to_csv(), "xi,re,im,abs2\n1,1,0,1\n");
    }

    #[test]
    fn f32_spectrum() {
        let m: DiscreteMeasure<f32> = middle_thirds_cantor(4).unwrap().cast();
        let s = fourier_transform(&m, &[0.0f32, 1.0]);
        assert!((s.values[0].re - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scaling_positions_scales_frequencies(
            pts in prop::collection::vec(-1.0f64..1.0, 1..20),
            lambda_exp in -3i32..4,
            xi in -50.0f64..50.0,
        ) {
            let lambda = 2f64.powi(lambda_exp);
            let m = DiscreteMeasure::uniform(&pts).unwrap();
            let a = fourier_transform(&m.scaled(lambda), &[xi]).values[0];
            let b = fourier_transform(&m, &[lambda * xi]).values[0];
            prop_assert_eq!(a, b);
        }

        #[test]
        fn direct_energy_monotone_in_alpha(pts in prop::collection::vec(0.0f64..1.0, 2..30)) {
            let m = DiscreteMeasure::uniform(&pts).unwrap();
            let mut prev = 0.0;
            for i in 1..10 {
                let e = energy_direct(&m, i as f64 / 10.0).unwrap().value;
                prop_assert!(e >= prev * (1.0 - 1e-12));
                prop_assert!(e >= 0.0);
                prev = e;
            }
        }
    }
}
