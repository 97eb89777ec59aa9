use std::fmt;

use serde::{Serialize, Serializer};

/// A real number or `+inf`.
///
/// Divergences and exponent suprema can be infinite; they are kept apart from
/// finite values so that callers cannot confuse them with large floats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::PosInfinity)
    }

    /// Lossy conversion, mapping `PosInfinity` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Panics when infinite; for call sites where finiteness is an invariant.
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInfinity => panic!("{what} is unexpectedly infinite"),
        }
    }

    pub fn neg_finite(self) -> Option<f64> {
        self.finite().map(|v| -v)
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInfinity
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v:?}"),
            ExtReal::PosInfinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInfinity => s.serialize_str("inf"),
        }
    }
}
