//! Coded walks `C_n`: piecewise linear on `n` equal pieces with slopes `±√n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Up/down pattern of a walk; `true` is an up step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkCode(Vec<bool>);

impl WalkCode {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Empty("walk code"));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All codes of length `n`, in binary counting order (first bit most
    /// significant).
    pub fn all_of_length(n: usize) -> impl Iterator<Item = WalkCode> {
        assert!((1..64).contains(&n));
        (0u64..1 << n).map(move |v| WalkCode((0..n).map(|i| (v >> (n - 1 - i)) & 1 == 1).collect()))
    }
}

impl fmt::Display for WalkCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for WalkCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::Format(format!("`{c}` in walk code"))),
            })
            .collect::<Result<Vec<_>>>()?;
        WalkCode::new(bits)
    }
}

/// Values of a `C_n` walk at `i/n`, `i = 0..=n`.
///
/// Values are `(#up - #down) / √n` computed from the exact integer height,
/// so each carries at most two roundings (error below `2^-40` for any
/// height representable here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn segments(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Builds a path from raw knot values; used for checking foreign data.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Empty("walk values"));
        }
        Ok(Self { values })
    }

    /// Linear interpolation at `t ∈ [0, 1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.segments();
        let s = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let f = s - i as f64;
        self.values[i] + (self.values[i + 1] - self.values[i]) * f
    }
}

pub fn walk_from_code(code: &WalkCode) -> PiecewiseLinearPath {
    let n = code.len();
    let root = (n as f64).sqrt();
    let mut height = 0i64;
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    for &up in code.bits() {
        height += if up { 1 } else { -1 };
        values.push(height as f64 / root);
    }
    PiecewiseLinearPath { values }
}

/// Recovers the code; every increment must be `±1/√n` within `2^-40`.
pub fn code_of_walk(path: &PiecewiseLinearPath) -> Result<WalkCode> {
    const TOL: f64 = 1.0 / (1u64 << 40) as f64;
    let n = path.segments();
    let step = 1.0 / (n as f64).sqrt();
    if path.values[0].abs() > TOL {
        return Err(Error::NotAWalk(format!("starts at {}", path.values[0])));
    }
    let mut bits = Vec::with_capacity(n);
    for (i, w) in path.values.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - step).abs() <= TOL {
            bits.push(true);
        } else if (d + step).abs() <= TOL {
            bits.push(false);
        } else {
            return Err(Error::NotAWalk(format!(
                "segment {i} has increment {d}, expected ±{step}"
            )));
        }
    }
    WalkCode::new(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> WalkCode {
        s.parse().unwrap()
    }

    #[test]
    fn small_walks() {
        assert_eq!(walk_from_code(&code("1")).values(), &[0.0, 1.0]);
        let w = walk_from_code(&code("10"));
        assert!((w.values()[1] - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(w.values()[2], 0.0);
        let w = walk_from_code(&code("11"));
        assert!((w.values()[2] - 1.41421).abs() < 1e-5);
    }

    #[test]
    fn round_trip_single() {
        assert_eq!(code_of_walk(&walk_from_code(&code("1101"))).unwrap(), code("1101"));
    }

    #[test]
    fn flat_path_is_rejected() {
        let p = PiecewiseLinearPath::from_values(vec![0.0, 0.0]).unwrap();
        assert!(matches!(code_of_walk(&p), Err(Error::NotAWalk(_))));
    }

    #[test]
    fn empty_code_is_rejected() {
        assert!(WalkCode::new(vec![]).is_err());
        assert!("".parse::<WalkCode>().is_err());
    }

    #[test]
    fn slopes_are_root_n() {
        let c = code("0110100");
        let w = walk_from_code(&c);
        let n = c.len() as f64;
        for pair in w.values().windows(2) {
            let slope = (pair[1] - pair[0]) * n;
            assert!((slope.abs() - n.sqrt()).abs() < 1e-12);
        }
    }
}
