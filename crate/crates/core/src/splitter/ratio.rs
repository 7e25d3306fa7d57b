use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative sizes `a:b` of the two sides of a split; serialized as `"a:b"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub a: u32,
    pub b: u32,
}

impl Ratio {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::Config(format!("ratio {a}:{b} must have positive parts")));
        }
        let g = gcd(a, b);
        Ok(Self { a: a / g, b: b / g })
    }

    /// Ratio whose side `b` holds `fraction` of the whole, e.g. 0.1 -> 9:1.
    /// Fractions are read to four decimal places.
    pub fn from_fraction(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config(format!("fraction {fraction} must lie in (0, 1)")));
        }
        let b = (fraction * 10_000.0).round() as u32;
        if b == 0 || b >= 10_000 {
            return Err(Error::Config(format!("fraction {fraction} too close to 0 or 1")));
        }
        Self::new(10_000 - b, b)
    }

    /// Share of side `b`.
    pub fn share_b(&self) -> f64 {
        self.b as f64 / (self.a + self.b) as f64
    }

    /// Target size of side `b` for `n` items, rounded half up.
    pub fn size_b(&self, n: usize) -> usize {
        let total = (self.a + self.b) as u128;
        ((2 * self.b as u128 * n as u128 + total) / (2 * total)) as usize
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by the share of side `b`.
impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let lhs = self.b as u64 * (other.a + other.b) as u64;
        let rhs = other.b as u64 * (self.a + self.b) as u64;
        lhs.cmp(&rhs)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once(':') {
            let parse = |x: &str| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("bad ratio `{s}`")))
            };
            Ratio::new(parse(a)?, parse(b)?)
        } else {
            let f: f64 = s
                .parse()
                .map_err(|_| Error::Config(format!("bad ratio or fraction `{s}`")))?;
            Ratio::from_fraction(f)
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
