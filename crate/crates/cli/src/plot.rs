//! Static SVG plots for decay fits, box-counting fits, density profiles
//! and the arcsine CDF overlay.

use std::fmt::Write as _;
use std::path::Path;

use oscillab_core::geometry::{BoxDimension, DensityProfile};
use oscillab_core::spectral::DecayFit;
use oscillab_core::stats::{arcsine_cdf, fit_line, ks_statistic};

use crate::error::{CliError, Result};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in it.filter(|v| v.is_finite()) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(hi > lo) {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Self {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title)).unwrap();
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    writeln!(
        s,
        r#"<path class="axes" d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        writeln!(s, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y1 + 5.0).unwrap();
        writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y1 + 18.0, tick(xv)).unwrap();
        writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv)).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    )
    .unwrap();
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn loglog(title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)], slope: f64, intercept: f64) -> String {
    let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut s = open(title, xlabel, ylabel, &f);
    for &(x, y) in pts {
        writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, f.px(x), f.py(y)).unwrap();
    }
    let (xa, xb) = (f.x.0, f.x.1);
    writeln!(
        s,
        r#"<line class="fit" data-slope="{slope}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6,3"/>"#,
        f.px(xa),
        f.py(intercept + slope * xa),
        f.px(xb),
        f.py(intercept + slope * xb)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" fill="firebrick">fitted slope {slope:.3}</text>"#,
        W - RIGHT - 150.0,
        TOP + 16.0
    )
    .unwrap();
    close(s)
}

/// `log2 median|μ̂|²` per annulus against `log2|ξ|`, with the fitted line
/// of slope `-α̂`.
pub fn decay_plot(fit: &DecayFit) -> Result<String> {
    if fit.annuli.is_empty() {
        return Err(CliError::Data("empty decay report".into()));
    }
    let pts: Vec<(f64, f64)> = fit.annuli.iter().map(|&(j, m)| (j as f64 + 0.5, m.log2())).collect();
    let intercept = fit.fit.intercept / std::f64::consts::LN_2;
    Ok(loglog(
        &format!("Fourier decay, alpha_hat = {:.3}", fit.alpha_hat),
        "log2 |xi|",
        "log2 median |mu_hat|^2",
        &pts,
        -fit.alpha_hat,
        intercept,
    ))
}

/// `log2 N(2^-k)` against `k` with the fitted slope.
pub fn box_plot(b: &BoxDimension) -> Result<String> {
    if b.counts.len() < 2 {
        return Err(CliError::Data("empty box-counting report".into()));
    }
    let pts: Vec<(f64, f64)> = b.counts.iter().map(|&(k, n)| (k as f64, (n as f64).log2())).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| CliError::Data("degenerate box-counting report".into()))?;
    Ok(loglog(
        &format!("Box counting, slope = {:.3}", b.slope),
        "k (box side 2^-k)",
        "log2 N",
        &pts,
        fit.slope,
        fit.intercept,
    ))
}

/// Filled step plot of a density profile, with the threshold line if given.
pub fn density_plot(profile: &DensityProfile, threshold: Option<f64>) -> Result<String> {
    if profile.bins.is_empty() {
        return Err(CliError::Data("empty density profile".into()));
    }
    let g = profile.grid;
    let xs = profile.bins.iter().flat_map(|b| [b.0 - g / 2.0, b.0 + g / 2.0]);
    let ys = profile.bins.iter().map(|b| b.1).chain([0.0]).chain(threshold);
    let f = Frame::new(xs, ys);
    let mut s = open("Density profile", "position", "density", &f);
    let mut d = String::new();
    let mut prev_right: Option<f64> = None;
    for &(x, dens) in &profile.bins {
        let (a, b) = (x - g / 2.0, x + g / 2.0);
        match prev_right {
            Some(r) if (a - r).abs() <= g * 1e-6 => {}
            Some(r) => write!(d, "L{:.2},{:.2} L{:.2},{:.2} ", f.px(r), f.py(0.0), f.px(a), f.py(0.0)).unwrap(),
            None => write!(d, "M{:.2},{:.2} ", f.px(a), f.py(0.0)).unwrap(),
        }
        write!(d, "L{:.2},{:.2} L{:.2},{:.2} ", f.px(a), f.py(dens), f.px(b), f.py(dens)).unwrap();
        prev_right = Some(b);
    }
    if let Some(r) = prev_right {
        write!(d, "L{:.2},{:.2} Z", f.px(r), f.py(0.0)).unwrap();
    }
    writeln!(s, r#"<path class="step" d="{}" fill="lightsteelblue" stroke="steelblue"/>"#, d.trim_end()).unwrap();
    if let Some(t) = threshold {
        writeln!(
            s,
            r#"<line class="threshold" x1="{LEFT}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="firebrick" stroke-dasharray="4,3"/>"#,
            f.py(t),
            W - RIGHT,
            f.py(t)
        )
        .unwrap();
    }
    Ok(close(s))
}

/// Empirical CDF of argmin locations against `(2/π) arcsin √x`.
pub fn arcsine_plot(locations: &[f64]) -> Result<String> {
    if locations.is_empty() {
        return Err(CliError::Data("empty location sample".into()));
    }
    let mut xs = locations.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let f = Frame::new([0.0, 1.0].into_iter(), [0.0, 1.0].into_iter());
    let ks = ks_statistic(&xs, arcsine_cdf);
    let mut s = open(&format!("Argmin locations, n = {}, KS = {ks:.4}", xs.len()), "t", "CDF", &f);
    let n = xs.len() as f64;
    let mut d = format!("M{:.2},{:.2}", f.px(0.0), f.py(0.0));
    for (i, &x) in xs.iter().enumerate() {
        write!(d, " L{:.2},{:.2} L{:.2},{:.2}", f.px(x), f.py(i as f64 / n), f.px(x), f.py((i + 1) as f64 / n)).unwrap();
    }
    write!(d, " L{:.2},{:.2}", f.px(1.0), f.py(1.0)).unwrap();
    writeln!(s, r#"<path class="empirical" d="{d}" fill="none" stroke="steelblue"/>"#).unwrap();
    let mut c = String::new();
    for i in 0..=200 {
        let x = i as f64 / 200.0;
        write!(c, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, f.px(x), f.py(arcsine_cdf(x))).unwrap();
    }
    writeln!(s, r#"<path class="reference" d="{c}" fill="none" stroke="firebrick" stroke-dasharray="6,3"/>"#).unwrap();
    Ok(close(s))
}

fn density_from_csv(text: &str) -> Result<DensityProfile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    if lines.next().map(str::trim) != Some("position,density") {
        return Err(CliError::Data("expected a position,density CSV".into()));
    }
    let mut bins = Vec::new();
    for l in lines {
        let bad = || CliError::Data(format!("bad density row `{l}`"));
        let (x, d) = l.split_once(',').ok_or_else(bad)?;
        bins.push((x.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?));
    }
    if bins.is_empty() {
        return Err(CliError::Data("empty density profile".into()));
    }
    let grid = bins
        .windows(2)
        .map(|w: &[(f64, f64)]| w[1].0 - w[0].0)
        .filter(|g| *g > 0.0)
        .fold(f64::INFINITY, f64::min);
    let grid = if grid.is_finite() { grid } else { 1.0 };
    Ok(DensityProfile { grid, bins })
}

/// Renders a report file. Returns the plot kind and the SVG text.
pub fn plot_report(path: &Path) -> Result<(&'static str, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::Data(format!("{}: empty report", path.display())));
    }
    if path.extension().is_some_and(|e| e == "csv") {
        return Ok(("density", density_plot(&density_from_csv(&text)?, None)?));
    }
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mismatch = || CliError::Data(format!("{}: unrecognized report schema", path.display()));
    if v.get("alpha_hat").is_some() && v.get("annuli").is_some() {
        let fit: DecayFit = serde_json::from_value(v).map_err(|_| mismatch())?;
        return Ok(("decay", decay_plot(&fit)?));
    }
    let box_value = v.get("box").cloned().unwrap_or_else(|| v.clone());
    if box_value.get("counts").is_some() && box_value.get("slope").is_some() {
        let b: BoxDimension = serde_json::from_value(box_value).map_err(|_| mismatch())?;
        return Ok(("box", box_plot(&b)?));
    }
    if let Some(locs) = v.get("locations") {
        let xs: Vec<f64> = serde_json::from_value(locs.clone()).map_err(|_| mismatch())?;
        return Ok(("arcsine", arcsine_plot(&xs)?));
    }
    Err(mismatch())
}

#[cfg(test)]
mod tests {
    use super::*;
    use oscillab_core::stats::LineFit;

    fn fit(alpha: f64) -> DecayFit {
        let annuli: Vec<(i32, f64)> = (2..10).map(|j| (j, (-(alpha) * (j as f64 + 0.5)).exp2())).collect();
        DecayFit {
            fit_range: (2, 9),
            annuli,
            alpha_hat: alpha,
            stderr: 0.0,
            fit: LineFit {
                slope: -alpha,
                intercept: 0.0,
                slope_stderr: 0.0,
                points: 8,
            },
        }
    }

    #[test]
    fn decay_plot_has_reference_slope() {
        let svg = decay_plot(&fit(0.5)).unwrap();
        assert!(svg.contains(r#"class="fit" data-slope="-0.5""#));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 8);
    }

    #[test]
    fn empty_reports_error() {
        let mut f = fit(0.5);
        f.annuli.clear();
        assert!(decay_plot(&f).is_err());
        assert!(density_plot(&DensityProfile { grid: 0.1, bins: vec![] }, None).is_err());
        assert!(arcsine_plot(&[]).is_err());
    }

    #[test]
    fn density_step_is_filled_and_gapped() {
        let p = DensityProfile {
            grid: 0.25,
            bins: vec![(0.125, 1.0), (0.375, 2.0), (0.875, 1.0)],
        };
        let svg = density_plot(&p, Some(0.5)).unwrap();
        assert!(svg.contains(r#"class="step""#) && svg.contains(r#"fill="lightsteelblue""#));
        assert!(svg.contains(r#"class="threshold""#));
        let d = svg.split(r#"class="step" d=""#).nth(1).unwrap().split('"').next().unwrap();
        assert!(d.starts_with('M') && d.ends_with('Z'));
    }

    #[test]
    fn density_csv_parses() {
        let p = density_from_csv("position,density\n0.5,2\n0.75,4\n").unwrap();
        assert_eq!(p.grid, 0.25);
        assert_eq!(p.bins, vec![(0.5, 2.0), (0.75, 4.0)]);
        assert!(density_from_csv("a,b\n1,2\n").is_err());
    }
}
