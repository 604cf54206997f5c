//! Extended-real scalars.
//!
//! Integrals of log-ratios routinely diverge in this domain, and the sign of
//! the divergence carries meaning: a gain of `+inf` certifies that a measure
//! is not absolutely continuous, while `-inf` marks a hopeless candidate in a
//! supremum. When both the positive and the negative part of an integral
//! diverge the value is genuinely undefined; [`ExtReal::Undefined`] keeps that
//! case distinct instead of letting a NaN leak through arithmetic.

use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// Threshold past which an accumulated partial sum counts as divergent.
pub const OVERFLOW_THRESHOLD: f64 = 1e300;

/// A real number extended with signed infinities and an undefined sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
    Undefined,
}

impl ExtReal {
    /// Classifies an `f64`, mapping IEEE infinities and NaN to the
    /// corresponding extended values.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            ExtReal::Undefined
        } else if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    /// Combines separately accumulated positive and negative parts.
    ///
    /// Either part may be infinite or past [`OVERFLOW_THRESHOLD`]; both
    /// divergent yields `Undefined`.
    pub fn from_parts(pos: f64, neg: f64) -> Self {
        let pos_div = pos.is_infinite() || pos > OVERFLOW_THRESHOLD;
        let neg_div = neg.is_infinite() || neg > OVERFLOW_THRESHOLD;
        match (pos_div, neg_div) {
            (true, true) => ExtReal::Undefined,
            (true, false) => ExtReal::PosInf,
            (false, true) => ExtReal::NegInf,
            (false, false) => ExtReal::Finite(pos - neg),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, ExtReal::Undefined)
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            _ => None,
        }
    }

    /// The finite value; panics with `msg` otherwise. Test convenience.
    pub fn expect_finite(&self, msg: &str) -> f64 {
        self.finite().unwrap_or_else(|| panic!("{msg}: {self}"))
    }

    pub fn neg(self) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Undefined => ExtReal::Undefined,
        }
    }

    /// Extended addition; `(+inf) + (-inf)` is `Undefined`.
    pub fn add(self, other: ExtReal) -> Self {
        use ExtReal::*;
        match (self, other) {
            (Undefined, _) | (_, Undefined) => Undefined,
            (PosInf, NegInf) | (NegInf, PosInf) => Undefined,
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (Finite(a), Finite(b)) => ExtReal::from_f64(a + b),
        }
    }

    pub fn sub(self, other: ExtReal) -> Self {
        self.add(other.neg())
    }

    /// Subtracts a finite scalar.
    pub fn sub_f64(self, x: f64) -> Self {
        self.sub(ExtReal::Finite(x))
    }

    /// Comparison in the extended order; `Undefined` compares to nothing.
    pub fn partial_cmp_ext(&self, other: &ExtReal) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (Undefined, _) | (_, Undefined) => None,
            (PosInf, PosInf) | (NegInf, NegInf) => Some(Ordering::Equal),
            (PosInf, _) => Some(Ordering::Greater),
            (_, PosInf) => Some(Ordering::Less),
            (NegInf, _) => Some(Ordering::Less),
            (_, NegInf) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }

    /// `self <= bound` in the extended order; false when either side is
    /// undefined.
    pub fn le(&self, other: &ExtReal) -> bool {
        matches!(
            self.partial_cmp_ext(other),
            Some(Ordering::Less) | Some(Ordering::Equal)
        )
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Undefined => write!(f, "undefined"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInf => serializer.serialize_str("inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
            ExtReal::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_classification() {
        assert_eq!(ExtReal::from_parts(1.0, 0.25), ExtReal::Finite(0.75));
        assert_eq!(ExtReal::from_parts(f64::INFINITY, 1.0), ExtReal::PosInf);
        assert_eq!(ExtReal::from_parts(1.0, f64::INFINITY), ExtReal::NegInf);
        assert_eq!(
            ExtReal::from_parts(f64::INFINITY, f64::INFINITY),
            ExtReal::Undefined
        );
        // The overflow threshold, not only IEEE infinity, marks divergence.
        assert_eq!(ExtReal::from_parts(1e301, 0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::from_parts(0.0, 1e301), ExtReal::NegInf);
    }

    #[test]
    fn undefined_propagates() {
        let u = ExtReal::Undefined;
        assert!(u.add(ExtReal::Finite(1.0)).is_undefined());
        assert!(ExtReal::PosInf.add(ExtReal::NegInf).is_undefined());
        assert!(ExtReal::PosInf.sub(ExtReal::PosInf).is_undefined());
        assert_eq!(ExtReal::PosInf.add(ExtReal::PosInf), ExtReal::PosInf);
    }

    #[test]
    fn ordering() {
        assert!(ExtReal::NegInf.le(&ExtReal::Finite(-1e308)));
        assert!(ExtReal::Finite(3.0).le(&ExtReal::PosInf));
        assert!(!ExtReal::Undefined.le(&ExtReal::PosInf));
        assert!(!ExtReal::PosInf.le(&ExtReal::Finite(0.0)));
    }
}
