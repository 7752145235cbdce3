//! Rewriting systems on hypergraphs and strings, their multiway and causal
//! structure, and discrete geometry (curvature, dimension, planarity) of the
//! resulting graphs.

pub mod causal;
pub mod dimension;
pub mod geometry;
pub mod hypercore;
pub mod multiway;
pub mod rewrite;
pub mod transport;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize, Serializer};

/// Three-valued outcome of a bounded check.
///
/// `Unknown` means the explored region was too small to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

/// An exact rational, or a float when exactness was not available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Exact(Ratio<i128>),
    Approx(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64().expect("ratios of i128 convert to f64"),
            Scalar::Approx(x) => *x,
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(q) if q.is_integer() => s.serialize_str(&q.numer().to_string()),
            Scalar::Exact(q) => s.serialize_str(&format!("{}/{}", q.numer(), q.denom())),
            Scalar::Approx(x) => s.serialize_f64(*x),
        }
    }
}

impl std::ops::Add for Scalar {
    type Output = Scalar;

    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            (a, b) => Scalar::Approx(a.to_f64() + b.to_f64()),
        }
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scalar::Exact(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Scalar::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Approx(x) => write!(f, "{x}"),
        }
    }
}
