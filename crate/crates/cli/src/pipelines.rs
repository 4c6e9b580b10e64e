use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use oscillab_core::dioph::predicate_search;
use oscillab_core::geometry::{
    affine_copy_search, box_dimension, resolved_scale_min, sumset_interior, DimensionReport,
};
use oscillab_core::hamel::{image_samples, integer_relation};
use oscillab_core::measures::{
    cantor_measure, convolution_power, default_band, local_time_measure, middle_thirds_cantor, uniform_grid,
    zero_set,
};
use oscillab_core::minimizers::{
    arcsine_check, enumerate_minima, global_argmin, s_independence, set_statistics, uniform_reference,
};
use oscillab_core::paths::refine;
use oscillab_core::randomness::complex_sequence_check;
use oscillab_core::spectral::{
    annulus_grid, capacity_dimension, decay_exponent, default_alpha_grid, energy_grid, energy_report,
    fourier_transform, salem_check, symmetrize,
};
use oscillab_core::stats::median;
use oscillab_core::{BitSource, BitWord, DyadicPath, Error as CoreError, Measure, SourceSpec};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, Pipeline};
use crate::error::{CliError, Result};
use crate::plot;
use crate::staging::Staging;

/// Where a unit's path comes from.
#[derive(Clone)]
pub(crate) enum Origin {
    Seed(u64),
    Source(SourceSpec),
    Snapshot(Arc<DyadicPath>),
    Fixture,
}

#[derive(Clone)]
pub(crate) struct Unit {
    pub label: String,
    pub origin: Origin,
}

impl Unit {
    pub fn seed(&self) -> Option<u64> {
        match self.origin {
            Origin::Seed(s) => Some(s),
            _ => None,
        }
    }
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub formats: BTreeSet<Format>,
    pub staging: &'a Staging,
    pub start: Instant,
    /// Measure read from `cfg.measure`.
    pub measure: Option<Arc<Measure>>,
}

impl Ctx<'_> {
    fn emit(&self, format: Format, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        if self.formats.contains(&format) {
            self.staging.write(name, bytes.as_ref())?;
        }
        Ok(())
    }

    fn emit_json(&self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.emit(Format::Json, name, s)
    }

    fn check_budget(&self) -> Result<()> {
        if let Some(b) = self.cfg.budget_secs {
            let used = self.start.elapsed().as_secs_f64();
            if used > b {
                return Err(CliError::Budget(format!("{used:.1}s used of {b}s")));
            }
        }
        Ok(())
    }

    fn path(&self, unit: &Unit) -> Result<DyadicPath> {
        Ok(match &unit.origin {
            Origin::Seed(s) => refine(&mut BitSource::seeded(*s), self.cfg.depth)?,
            Origin::Source(spec) => refine(&mut spec.open()?, self.cfg.depth)?,
            Origin::Snapshot(p) => (**p).clone(),
            Origin::Fixture => unreachable!("fixture units carry no path"),
        })
    }

    fn band(&self, path: &DyadicPath) -> f64 {
        self.cfg.band.unwrap_or_else(|| default_band(path))
    }

    fn fixture_measure(&self, level: u32) -> Result<Measure> {
        let name = self.cfg.fixture.as_deref().unwrap_or("cantor");
        Ok(match name {
            "cantor" => cantor_measure(level)?,
            "middle-thirds" => middle_thirds_cantor(level)?,
            _ => {
                if level > 16 {
                    return Err(CliError::key("level", "uniform fixture supports at most level 16"));
                }
                uniform_grid(1 << level)?
            }
        })
    }
}

/// Whether the pipeline runs once on a fixture or measure file instead of
/// once per path.
pub(crate) fn is_fixture_run(cfg: &ExperimentConfig) -> bool {
    match cfg.pipeline {
        Pipeline::Measure => true,
        Pipeline::Spectrum => cfg.measure.is_some(),
        Pipeline::Dimension => cfg.fixture.is_some(),
        _ => false,
    }
}

/// Per-unit failures that are properties of the sample, not of the run.
fn degenerate(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::DegenerateMeasure(_) | CoreError::NoInterior | CoreError::TooFewAnnuli { .. } | CoreError::Empty(_)
    )
}

fn skip(e: CoreError) -> Result<Value> {
    if degenerate(&e) {
        Ok(json!({ "status": "degenerate", "reason": e.to_string() }))
    } else {
        Err(e.into())
    }
}

pub(crate) fn run_unit(ctx: &Ctx, unit: &Unit) -> Result<Value> {
    ctx.check_budget()?;
    let r = match ctx.cfg.pipeline {
        Pipeline::Simulate => simulate(ctx, unit),
        Pipeline::Zeroset => zeroset(ctx, unit),
        Pipeline::Measure => measure(ctx, unit),
        Pipeline::Spectrum => spectrum(ctx, unit),
        Pipeline::Dimension if matches!(unit.origin, Origin::Fixture) => dimension_fixture(ctx, unit),
        Pipeline::Dimension => dimension(ctx, unit),
        Pipeline::Sumset => sumset(ctx, unit),
        Pipeline::Dioph => dioph(ctx, unit),
        Pipeline::Hamel => hamel(ctx, unit),
        Pipeline::Minima => minima(ctx, unit),
    };
    match r {
        Err(Failure::Core(e)) => skip(e),
        Err(Failure::Cli(e)) => Err(e),
        Ok(v) => Ok(v),
    }
}

enum Failure {
    Core(CoreError),
    Cli(CliError),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Core(e)
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

type Step = std::result::Result<Value, Failure>;

fn simulate(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let label = &unit.label;
    ctx.staging.write(&format!("path-{label}.oscp"), &path.to_snapshot_bytes())?;
    ctx.emit_json(&format!("path-{label}.json"), &path.sidecar())?;
    let v = path.values();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut summary = json!({
        "depth": path.depth(),
        "x1": v[v.len() - 1],
        "min": lo,
        "max": hi,
        "argmin": global_argmin(&path),
    });
    let source = match &unit.origin {
        Origin::Seed(s) => Some(BitSource::seeded(*s)),
        Origin::Source(spec) => Some(spec.open()?),
        _ => None,
    };
    if let Some(mut src) = source {
        let avail = src.remaining().map_or(ctx.cfg.complexity_bits, |r| r.min(ctx.cfg.complexity_bits as u128) as usize);
        if avail >= 256 {
            let word = src.bits(avail)?;
            let codes: Vec<(usize, BitWord)> = std::iter::successors(Some(256usize), |k| Some(k * 2))
                .take_while(|&k| k <= avail)
                .map(|k| (k, BitWord(word.0[..k].to_vec())))
                .collect();
            let verdict = complex_sequence_check(&codes, ctx.cfg.deficiency, &ctx.cfg.compressor)?;
            summary["complexity"] = json!({
                "compressor": ctx.cfg.compressor,
                "threshold": verdict.threshold,
                "worst_deficiency": verdict.worst_deficiency,
                "complex": verdict.complex,
            });
        }
    }
    Ok(summary)
}

fn zeroset(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let band = ctx.band(&path);
    let zs = zero_set(&path, band)?;
    let mu = local_time_measure(&path, band)?;
    let label = &unit.label;
    ctx.emit(Format::Csv, &format!("zeroset-{label}.csv"), mu.to_csv(&format!("local-time/{label}/band={band}")))?;
    Ok(json!({
        "band": band,
        "cells": zs.cells.len(),
        "atoms": mu.len(),
        "support": mu.support(),
    }))
}

fn measure(ctx: &Ctx, unit: &Unit) -> Step {
    let mu = ctx.fixture_measure(ctx.cfg.level)?;
    ctx.emit(Format::Csv, &format!("measure-{}.csv", unit.label), mu.to_csv(&unit.label))?;
    Ok(json!({ "atoms": mu.len(), "mass": mu.mass(), "support": mu.support() }))
}

fn decay_of(ctx: &Ctx, mu: &Measure, label: &str) -> std::result::Result<oscillab_core::spectral::DecayFit, Failure> {
    let (a, b) = ctx.cfg.annuli_range()?;
    let spec = fourier_transform(mu, &annulus_grid::<f64>(a, b, ctx.cfg.per_annulus)).with_provenance(label);
    let fit = decay_exponent(&spec)?;
    ctx.emit(Format::Csv, &format!("spectrum-{label}.csv"), spec.to_csv())?;
    Ok(fit)
}

fn spectrum(ctx: &Ctx, unit: &Unit) -> Step {
    let mu = match &ctx.measure {
        Some(m) => (**m).clone(),
        None => {
            let path = ctx.path(unit)?;
            local_time_measure(&path, ctx.band(&path))?
        }
    };
    let label = &unit.label;
    let fit = decay_of(ctx, &mu, label)?;
    ctx.emit_json(&format!("decay-{label}.json"), &serde_json::to_value(&fit).map_err(CliError::from)?)?;
    ctx.emit(Format::Svg, &format!("decay-{label}.svg"), plot::decay_plot(&fit)?)?;
    Ok(json!({ "atoms": mu.len(), "alpha_hat": fit.alpha_hat, "stderr": fit.stderr }))
}

fn dimension(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let band = ctx.band(&path);
    let reps = zero_set(&path, band)?.representatives();
    let boxd = box_dimension(&reps, &ctx.cfg.box_scales()?)?;
    let mu = local_time_measure(&path, band)?;
    let label = &unit.label;
    let fit = decay_of(ctx, &mu, label)?;
    let report = DimensionReport::new(&boxd, None, Some(&fit));
    let fourier = report.fourier_dimension.expect("decay supplied");
    let salem = salem_check(report.box_dimension, fourier, ctx.cfg.salem_tolerance)?;
    ctx.emit_json(
        &format!("dimension-{label}.json"),
        &json!({ "box": boxd, "decay": fit, "report": report, "salem": salem }),
    )?;
    ctx.emit(Format::Svg, &format!("boxfit-{label}.svg"), plot::box_plot(&boxd)?)?;
    ctx.emit(Format::Svg, &format!("decay-{label}.svg"), plot::decay_plot(&fit)?)?;
    Ok(json!({
        "box_dimension": report.box_dimension,
        "fourier_dimension": fourier,
        "salem": salem.salem,
    }))
}

fn dimension_fixture(ctx: &Ctx, unit: &Unit) -> Step {
    let top = ctx.cfg.level;
    let first = top.saturating_sub(4).max(if ctx.cfg.fixture.as_deref() == Some("cantor") { 2 } else { 1 });
    if top < first + 1 {
        return Err(CliError::key("level", "need at least two truncation levels").into());
    }
    let levels: Vec<(u32, Measure)> =
        (first..=top).map(|l| Ok((l, ctx.fixture_measure(l)?))).collect::<Result<_>>()?;
    let mu = &levels[levels.len() - 1].1;
    let boxd = box_dimension(&mu.positions(), &ctx.cfg.box_scales()?)?;
    let cap = capacity_dimension(&levels, &default_alpha_grid())?;
    let (lo, hi) = mu.support();
    let grid = symmetrize(&energy_grid::<f64>(2f64.powi(18), (hi - lo).max(f64::MIN_POSITIVE)));
    let energy = energy_report(mu, &[ctx.cfg.alpha], &fourier_transform(mu, &grid))?;
    let report = DimensionReport::new(&boxd, Some(cap.estimate), None);
    let label = &unit.label;
    ctx.emit_json(
        &format!("dimension-{label}.json"),
        &json!({ "box": boxd, "capacity": cap, "energy": energy, "report": report }),
    )?;
    ctx.emit(Format::Svg, &format!("boxfit-{label}.svg"), plot::box_plot(&boxd)?)?;
    Ok(json!({
        "atoms": mu.len(),
        "box_dimension": report.box_dimension,
        "capacity_dimension": report.capacity_dimension,
        "energy_ratio": energy.ratio[0],
    }))
}

fn sumset(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let mu = local_time_measure(&path, ctx.band(&path))?;
    let (k, g) = (ctx.cfg.k, ctx.cfg.grid_width());
    let label = &unit.label;
    let mut summary = json!({ "atoms": mu.len(), "k": k });
    match sumset_interior(&mu, k, g, ctx.cfg.theta) {
        Ok(r) => {
            ctx.emit(Format::Csv, &format!("density-{label}.csv"), r.profile.to_csv())?;
            ctx.emit(Format::Csv, &format!("difference-{label}.csv"), r.difference_profile.to_csv())?;
            ctx.emit(Format::Svg, &format!("density-{label}.svg"), plot::density_plot(&r.profile, Some(r.threshold))?)?;
            summary["threshold"] = json!(r.threshold);
            summary["detected"] = json!(r.detected);
            summary["interior"] = json!(r.interior);
            summary["interior_length"] = json!(r.interior_length());
        }
        Err(CoreError::NoInterior) => {
            summary["interior"] = Value::Null;
            summary["interior_length"] = json!(0.0);
        }
        Err(e) => return Err(e.into()),
    }
    let support = convolution_power(&mu, k, g)?.positions();
    let pattern = ctx.cfg.pattern_set()?;
    let tol = (-(ctx.cfg.affine_tol as f64)).exp2();
    let smin = resolved_scale_min(&pattern, tol);
    let copy = if smin <= 1.0 { affine_copy_search(&support, &pattern, tol, smin, 1.0)? } else { None };
    summary["affine_copy"] = json!(copy);
    ctx.emit_json(&format!("sumset-{label}.json"), &summary)?;
    Ok(summary)
}

fn dioph(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let target = ctx.cfg.target()?;
    let o = predicate_search(&path, &target, ctx.cfg.ell, ctx.cfg.max_n, ctx.cfg.max_den)?;
    let label = &unit.label;
    ctx.emit_json(
        &format!("witness-{label}.json"),
        &json!({
            "found": o.witness.is_some(),
            "n_tried": o.n_tried,
            "near_zero": o.near_zero,
            "triple_sums": o.triple_sums,
            "witness": o.witness.as_ref().map(|w| w.to_json()),
        }),
    )?;
    Ok(match &o.witness {
        Some(w) => json!({
            "found": true,
            "n": w.n,
            "residual": w.residual(),
            "reverified": w.holds_at(ctx.cfg.ell),
        }),
        None => json!({ "found": false, "n_tried": o.n_tried }),
    })
}

fn hamel(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let s = image_samples(&path, ctx.cfg.level, ctx.cfg.precision)?;
    let rep = integer_relation(&s.rational_values(), ctx.cfg.bound, ctx.cfg.tolerance())?;
    let label = &unit.label;
    let values: Vec<[f64; 2]> = s.values.iter().map(|v| [v.lo, v.hi]).collect();
    ctx.emit_json(
        &format!("hamel-{label}.json"),
        &json!({
            "level": s.level,
            "precision": s.precision,
            "points": s.points.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "values": values,
            "pairwise_disjoint": s.pairwise_disjoint(),
            "relation": rep.to_json(),
        }),
    )?;
    Ok(json!({ "found": rep.found(), "inspected": rep.inspected, "residual_floor": rep.residual_floor }))
}

fn minima(ctx: &Ctx, unit: &Unit) -> Step {
    let path = ctx.path(unit)?;
    let list = enumerate_minima(&path, ctx.cfg.generations)?;
    let label = &unit.label;
    ctx.emit(Format::Csv, &format!("minima-{label}.csv"), list.to_csv())?;
    let relation = match s_independence(&path, &list, ctx.cfg.count, ctx.cfg.bound, ctx.cfg.tolerance(), ctx.cfg.precision) {
        Ok(r) => Some(r),
        Err(CoreError::InsufficientMinimizers { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let locs = list.locations();
    let stats = if locs.len() >= 16 {
        Some(set_statistics(&locs, &uniform_reference(locs.len(), unit.seed().unwrap_or(0)))?)
    } else {
        None
    };
    let argmin = global_argmin(&path);
    ctx.emit_json(
        &format!("minima-{label}.json"),
        &json!({
            "minimizers": list.len(),
            "ties": list.ties,
            "unreliable": list.unreliable(),
            "relation": relation.as_ref().map(|r| r.to_json()),
            "statistics": stats,
            "argmin": argmin,
        }),
    )?;
    Ok(json!({
        "minimizers": list.len(),
        "relation": relation.as_ref().map(|r| r.found()),
        "ks_distance": stats.map(|s| s.ks_distance),
        "argmin": argmin,
    }))
}

fn medians(units: &[Value], key: &str) -> Option<f64> {
    let xs: Vec<f64> = units.iter().filter_map(|u| u.get(key)?.as_f64()).collect();
    median(&xs)
}

fn count_true(units: &[Value], key: &str) -> usize {
    units.iter().filter(|u| u.get(key).and_then(Value::as_bool) == Some(true)).count()
}

/// Cross-unit summary; may write aggregate artifacts.
pub(crate) fn aggregate(ctx: &Ctx, units: &[Value]) -> Result<Value> {
    let n = units.len();
    let degenerate = units.iter().filter(|u| u.get("status").is_some()).count();
    let mut agg = json!({ "units": n, "degenerate": degenerate });
    match ctx.cfg.pipeline {
        Pipeline::Simulate => {
            let x1: Vec<f64> = units.iter().filter_map(|u| u["x1"].as_f64()).collect();
            if x1.len() >= 2 {
                let (mean, var) = oscillab_core::stats::mean_var(&x1);
                agg["x1_mean"] = json!(mean);
                agg["x1_variance"] = json!(var);
            }
        }
        Pipeline::Spectrum => agg["median_alpha_hat"] = json!(medians(units, "alpha_hat")),
        Pipeline::Dimension => {
            let b = medians(units, "box_dimension");
            let f = medians(units, "fourier_dimension");
            agg["median_box_dimension"] = json!(b);
            agg["median_fourier_dimension"] = json!(f);
            if let (Some(b), Some(f)) = (b, f) {
                agg["salem"] = json!(salem_check(b, f, ctx.cfg.salem_tolerance)?);
            }
        }
        Pipeline::Sumset => {
            let lens: Vec<f64> = units.iter().filter_map(|u| u["interior_length"].as_f64()).collect();
            agg["median_interior_length"] = json!(median(&lens));
            agg["affine_copies"] = json!(units.iter().filter(|u| u["affine_copy"].is_object()).count());
        }
        Pipeline::Dioph | Pipeline::Hamel => agg["found"] = json!(count_true(units, "found")),
        Pipeline::Minima => {
            agg["relations"] = json!(count_true(units, "relation"));
            let locs: Vec<f64> = units.iter().filter_map(|u| u["argmin"].as_f64()).collect();
            if locs.len() >= 16 {
                let a = arcsine_check(&locs)?;
                let mut sorted = locs.clone();
                sorted.sort_by(|a, b| a.total_cmp(b));
                ctx.emit_json("arcsine.json", &json!({ "report": a, "locations": sorted }))?;
                ctx.emit(Format::Svg, "arcsine.svg", plot::arcsine_plot(&sorted)?)?;
                agg["arcsine"] = json!(a);
            }
        }
        Pipeline::Zeroset | Pipeline::Measure => {}
    }
    Ok(agg)
}
