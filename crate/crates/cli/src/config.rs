//! Experiment configuration: defaults, a `key = value` file and flag
//! overrides, merged in that order.
//!
//! The file is flat TOML: one `key = value` per line, `#` comments,
//! strings quoted. Overrides given as `key=value` on the command line use
//! the same value syntax, except that a value which does not parse as
//! TOML is taken as a bare string.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Simulate,
    Zeroset,
    Measure,
    Spectrum,
    Dimension,
    Sumset,
    Dioph,
    Hamel,
    Minima,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Every knob of every pipeline. Knobs a pipeline does not read are
/// carried along unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    /// First seed; seeds run `seed, seed+1, …`.
    pub seed: u64,
    pub seeds: u64,
    /// Alternative bit source (`file:PATH` or `literal:BITS`); one path.
    pub source: Option<String>,
    /// Saved path snapshot used instead of simulating.
    pub snapshot: Option<PathBuf>,
    pub depth: u32,

    pub compressor: String,
    /// Deficiency budget `d0` in bits.
    pub deficiency: i64,
    /// Longest tape prefix scored by the compressor.
    pub complexity_bits: usize,

    /// Zero-set band; `2^(-depth/2)` when unset.
    pub band: Option<f64>,
    /// Dyadic annuli `first:last` for decay fits.
    pub annuli: String,
    pub per_annulus: usize,
    /// Measure CSV read by `spectrum`.
    pub measure: Option<PathBuf>,
    /// `cantor`, `middle-thirds` or `uniform`.
    pub fixture: Option<String>,
    pub level: u32,
    pub alpha: f64,
    pub box_scales: String,
    pub salem_tolerance: f64,

    pub k: u32,
    /// Grid `2^-grid`.
    pub grid: u32,
    pub theta: Option<f64>,
    pub pattern: String,
    /// Affine-copy tolerance `2^-affine_tol`.
    pub affine_tol: u32,

    /// Target: integer, `p/q`, decimal, `pi`, `e` or `sqrt2`.
    pub r: String,
    pub ell: u32,
    pub max_n: u64,
    pub max_den: u64,

    pub bound: u64,
    /// Relation tolerance `2^-tolerance_bits`.
    pub tolerance_bits: u32,
    pub precision: u32,

    pub generations: u32,
    pub count: usize,

    pub out: PathBuf,
    /// Comma-separated subset of `csv,json,svg`.
    pub formats: String,
    pub budget_secs: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Simulate,
            seed: 0,
            seeds: 1,
            source: None,
            snapshot: None,
            depth: 20,
            compressor: "deflate".into(),
            deficiency: 64,
            complexity_bits: 4096,
            band: None,
            annuli: "2:14".into(),
            per_annulus: 64,
            measure: None,
            fixture: None,
            level: 4,
            alpha: 0.4,
            box_scales: "4:12".into(),
            salem_tolerance: 0.15,
            k: 3,
            grid: 12,
            theta: None,
            pattern: "0,1,2".into(),
            affine_tol: 10,
            r: "1".into(),
            ell: 6,
            max_n: 1 << 12,
            max_den: 1 << 16,
            bound: 1 << 12,
            tolerance_bits: 40,
            precision: 64,
            generations: 10,
            count: 6,
            out: PathBuf::from("oscillab-out"),
            formats: "csv,json,svg".into(),
            budget_secs: None,
        }
    }
}

fn defaults_table() -> toml::Table {
    toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize")
}

fn known_keys() -> BTreeSet<&'static str> {
    [
        "pipeline", "seed", "seeds", "source", "snapshot", "depth", "compressor", "deficiency",
        "complexity_bits", "band", "annuli", "per_annulus", "measure", "fixture", "level", "alpha",
        "box_scales", "salem_tolerance", "k", "grid", "theta", "pattern", "affine_tol", "r", "ell",
        "max_n", "max_den", "bound", "tolerance_bits", "precision", "generations", "count", "out",
        "formats", "budget_secs",
    ]
    .into_iter()
    .collect()
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().replace('-', "_"), v.trim().to_string()))
}

impl ExperimentConfig {
    /// Merges defaults, then `file` (config text), then `overrides`.
    pub fn resolve(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let known = known_keys();
        let mut table = toml::Table::new();
        if let Some(text) = file {
            let parsed: toml::Table = text
                .parse()
                .map_err(|e: toml::de::Error| CliError::Usage(format!("config file: {}", e.message())))?;
            table.extend(parsed);
        }
        for (k, v) in overrides {
            table.insert(k.clone(), parse_value(v));
        }
        for key in table.keys() {
            if !known.contains(key.as_str()) {
                return Err(CliError::key(key, "unknown key"));
            }
        }
        let config: ExperimentConfig = match table.clone().try_into() {
            Ok(c) => c,
            Err(e) => {
                for (key, value) in &table {
                    let mut single = defaults_table();
                    single.insert(key.clone(), value.clone());
                    if let Err(e) = single.try_into::<ExperimentConfig>() {
                        return Err(CliError::key(key, e.message()));
                    }
                }
                return Err(CliError::Usage(e.message().to_string()));
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(CliError::key(k, why));
        if self.seeds == 0 {
            return bad("seeds", "must be at least 1");
        }
        if self.seed.checked_add(self.seeds - 1).is_none() {
            return bad("seeds", "seed range overflows");
        }
        if self.depth == 0 || self.depth > oscillab_core::paths::MAX_DEPTH {
            return bad("depth", "must lie in 1..=26");
        }
        if self.source.is_some() && self.snapshot.is_some() {
            return bad("source", "give either source or snapshot");
        }
        if let Some(s) = &self.source {
            s.parse::<oscillab_core::SourceSpec>().map_err(|e| CliError::key("source", e))?;
        }
        if !oscillab_core::randomness::COMPRESSORS.contains(&self.compressor.as_str()) {
            return bad("compressor", "unknown compressor");
        }
        if self.complexity_bits < 256 {
            return bad("complexity_bits", "must be at least 256");
        }
        if let Some(b) = self.band {
            if !(b > 0.0 && b.is_finite()) {
                return bad("band", "must be positive");
            }
        }
        let (a, b) = self.annuli_range()?;
        if b - a + 1 < 4 {
            return bad("annuli", "need at least 4 annuli");
        }
        if self.per_annulus == 0 {
            return bad("per_annulus", "must be at least 1");
        }
        if let Some(f) = &self.fixture {
            if !["cantor", "middle-thirds", "uniform"].contains(&f.as_str()) {
                return bad("fixture", "expected cantor, middle-thirds or uniform");
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", "must lie in (0, 1)");
        }
        let (s0, s1) = self.box_scale_range()?;
        if s0 < 0 || s1 - s0 + 1 < 4 {
            return bad("box_scales", "need at least 4 nonnegative scales");
        }
        if !(self.salem_tolerance >= 0.0) {
            return bad("salem_tolerance", "must be nonnegative");
        }
        if self.k == 0 || self.k > 8 {
            return bad("k", "must lie in 1..=8");
        }
        if self.grid == 0 || self.grid > 20 {
            return bad("grid", "must lie in 1..=20");
        }
        if let Some(t) = self.theta {
            if !(t > 0.0) {
                return bad("theta", "must be positive");
            }
        }
        self.pattern_set()?;
        if self.affine_tol == 0 || self.affine_tol > 40 {
            return bad("affine_tol", "must lie in 1..=40");
        }
        self.target()?;
        if self.ell == 0 {
            return bad("ell", "must be at least 1");
        }
        if self.max_n == 0 {
            return bad("max_n", "must be at least 1");
        }
        if self.max_den < 2 {
            return bad("max_den", "must be at least 2");
        }
        if self.bound == 0 {
            return bad("bound", "must be at least 1");
        }
        if self.tolerance_bits == 0 || self.tolerance_bits > 200 {
            return bad("tolerance_bits", "must lie in 1..=200");
        }
        if self.precision == 0 {
            return bad("precision", "must be at least 1");
        }
        if self.generations == 0 || (self.pipeline == Pipeline::Minima && self.generations > self.depth) {
            return bad("generations", "must lie in 1..=depth");
        }
        if self.count == 0 {
            return bad("count", "must be at least 1");
        }
        self.format_set()?;
        if let Some(b) = self.budget_secs {
            if !(b > 0.0) {
                return bad("budget_secs", "must be positive");
            }
        }
        Ok(())
    }

    pub fn annuli_range(&self) -> Result<(i32, i32)> {
        parse_range("annuli", &self.annuli)
    }

    pub fn box_scale_range(&self) -> Result<(i32, i32)> {
        parse_range("box_scales", &self.box_scales)
    }

    pub fn box_scales(&self) -> Result<Vec<u32>> {
        let (a, b) = self.box_scale_range()?;
        Ok((a.max(0) as u32..=b.max(0) as u32).collect())
    }

    pub fn grid_width(&self) -> f64 {
        (-(self.grid as f64)).exp2()
    }

    pub fn pattern_set(&self) -> Result<oscillab_core::geometry::PatternSet> {
        let elements = self
            .pattern
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::key("pattern", e))?;
        if elements.iter().any(|x| !x.is_finite()) {
            return Err(CliError::key("pattern", "elements must be finite"));
        }
        Ok(oscillab_core::geometry::PatternSet::new(elements)?)
    }

    pub fn target(&self) -> Result<oscillab_core::dioph::Target> {
        use oscillab_core::dioph::Target;
        let s = self.r.trim();
        let named = match s {
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            "sqrt2" => Some(std::f64::consts::SQRT_2),
            _ => None,
        };
        if let Some(x) = named {
            return Ok(Target::from_f64(x)?);
        }
        if let Ok(q) = s.parse::<num_rational::BigRational>() {
            return Ok(Target::exact(q));
        }
        let x: f64 = s.parse().map_err(|_| CliError::key("r", "not a number"))?;
        if !x.is_finite() {
            return Err(CliError::key("r", "must be finite"));
        }
        Ok(Target::from_f64(x)?)
    }

    pub fn tolerance(&self) -> f64 {
        (-(self.tolerance_bits as f64)).exp2()
    }

    pub fn format_set(&self) -> Result<BTreeSet<Format>> {
        self.formats
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| match s {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                "svg" => Ok(Format::Svg),
                other => Err(CliError::key("formats", format!("unknown format `{other}`"))),
            })
            .collect()
    }
}

fn parse_range(key: &str, s: &str) -> Result<(i32, i32)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::key(key, "expected first:last"))?;
    let a: i32 = a.trim().parse().map_err(|e| CliError::key(key, e))?;
    let b: i32 = b.trim().parse().map_err(|e| CliError::key(key, e))?;
    if a > b {
        return Err(CliError::key(key, "first exceeds last"));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::resolve(Some(&c.to_toml()), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file() {
        let file = "pipeline = \"sumset\"\ndepth = 12\nk = 2\n";
        let c = ExperimentConfig::resolve(Some(file), &ov(&[("k", "3"), ("r", "pi")])).unwrap();
        assert_eq!(c.pipeline, Pipeline::Sumset);
        assert_eq!((c.depth, c.k), (12, 3));
        assert_eq!(c.r, "pi");
    }

    #[test]
    fn bare_strings_and_paths() {
        let c = ExperimentConfig::resolve(None, &ov(&[("out", "/tmp/x"), ("fixture", "middle-thirds")])).unwrap();
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
        assert_eq!(c.fixture.as_deref(), Some("middle-thirds"));
    }

    #[test]
    fn errors_name_the_key() {
        let msg = |o: &[(&str, &str)]| ExperimentConfig::resolve(None, &ov(o)).unwrap_err().to_string();
        assert!(msg(&[("bogus", "1")]).contains("`bogus`"));
        assert!(msg(&[("depth", "deep")]).contains("`depth`"));
        assert!(msg(&[("depth", "40")]).contains("`depth`"));
        assert!(msg(&[("annuli", "5:3")]).contains("`annuli`"));
        assert!(msg(&[("r", "abc")]).contains("`r`"));
        assert!(msg(&[("formats", "csv,png")]).contains("`formats`"));
        assert!(msg(&[("pattern", "0,0")]).contains("`pattern`"));
        let e = ExperimentConfig::resolve(None, &ov(&[("seeds", "0")])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn targets() {
        let with = |r: &str| ExperimentConfig { r: r.into(), ..Default::default() }.target().unwrap();
        assert_eq!(with("3/2").value, "3/2".parse().unwrap());
        assert_eq!(with("3/2").error, num_rational::BigRational::from_integer(0.into()));
        assert!(with("pi").error > num_rational::BigRational::from_integer(0.into()));
        assert!((with("0.25").to_f64() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn override_syntax() {
        assert_eq!(parse_override("max-n=12").unwrap(), ("max_n".into(), "12".into()));
        assert!(parse_override("depth").is_err());
    }

    proptest::proptest! {
        #[test]
        fn precedence_and_round_trip(seed in 0u64..1 << 40, depth in 1u32..=26, k in 1u32..6, file_k in 1u32..6) {
            let file = format!("depth = {depth}\nk = {file_k}\nseed = 3\n");
            let c = ExperimentConfig::resolve(Some(&file), &ov(&[("k", &k.to_string()), ("seed", &seed.to_string())])).unwrap();
            proptest::prop_assert_eq!((c.depth, c.k, c.seed), (depth, k, seed));
            let back = ExperimentConfig::resolve(Some(&c.to_toml()), &[]).unwrap();
            proptest::prop_assert_eq!(back, c);
        }
    }
}
