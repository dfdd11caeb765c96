//! Angles given as rational multiples of π (`3pi/8`) or decimal radians.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A parsed angle. Rational inputs keep `n` and `k` with `θ = nπ/k` in
/// lowest terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub radians: f64,
    pub label: String,
    pub n: Option<i64>,
    pub k: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse angle {0:?}: expected Npi/K, pi/K, Npi or decimal radians")]
pub struct AngleParseError(pub String);

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Angle {
    /// `nπ/k` in lowest terms.
    pub fn rational(n: i64, k: u64) -> Self {
        assert!(k > 0, "denominator must be positive");
        let g = gcd(n.unsigned_abs(), k).max(1);
        let (n, k) = (n / g as i64, k / g);
        let num = match n {
            0 => "0".to_string(),
            1 => "pi".to_string(),
            -1 => "-pi".to_string(),
            _ => format!("{n}pi"),
        };
        let label = if k == 1 || n == 0 { num } else { format!("{num}/{k}") };
        Self {
            radians: n as f64 * PI / k as f64,
            label,
            n: Some(n),
            k: Some(k),
        }
    }

    pub fn radians(value: f64) -> Self {
        Self {
            radians: value,
            label: format!("{value}"),
            n: None,
            k: None,
        }
    }
}

impl FromStr for Angle {
    type Err = AngleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AngleParseError(s.to_string());
        let t: String = s.trim().to_lowercase().replace('π', "pi").replace(' ', "");
        if let Some((num, den)) = t.split_once("pi") {
            let n: i64 = match num.trim_end_matches('*') {
                "" | "+" => 1,
                "-" => -1,
                x => x.parse().map_err(|_| err())?,
            };
            let k: u64 = match den {
                "" => 1,
                d => d.strip_prefix('/').ok_or_else(err)?.parse().map_err(|_| err())?,
            };
            if k == 0 {
                return Err(err());
            }
            return Ok(Self::rational(n, k));
        }
        let v: f64 = t.parse().map_err(|_| err())?;
        if !v.is_finite() {
            return Err(err());
        }
        Ok(Self::radians(v))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_multiples() {
        let a: Angle = "3pi/8".parse().unwrap();
        assert_eq!((a.n, a.k), (Some(3), Some(8)));
        assert!((a.radians - 3.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!("pi/4".parse::<Angle>().unwrap().label, "pi/4");
        assert_eq!("2pi/8".parse::<Angle>().unwrap().label, "pi/4");
        assert_eq!("-pi/8".parse::<Angle>().unwrap().n, Some(-1));
        assert_eq!("pi".parse::<Angle>().unwrap().k, Some(1));
        assert_eq!("π/12".parse::<Angle>().unwrap().k, Some(12));
    }

    #[test]
    fn parses_radians() {
        let a: Angle = "0.25".parse().unwrap();
        assert_eq!(a.radians, 0.25);
        assert_eq!(a.n, None);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pi/0", "pi/x", "abc", "3pi8", "nan", "inf"] {
            assert!(s.parse::<Angle>().is_err(), "{s}");
        }
    }
}
