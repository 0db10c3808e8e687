use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

use crate::error::{Error, Result};

/// A real number extended by `+∞` and `−∞`.
///
/// The order is total: `−∞ < finite < +∞`. `(+∞) + (−∞)` has no value and
/// [`ExtReal::checked_add`] rejects it instead of producing a NaN.
#[derive(Debug, Clone, Copy)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Panics on NaN; infinite floats map onto the matching variant.
    pub fn new(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an extended real");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy conversion to `f64` (infinities become IEEE infinities).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn checked_add(self, other: ExtReal) -> Result<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::UndefinedSum),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => Ok(ExtReal::new(a + b)),
        }
    }

    pub fn checked_sub(self, other: ExtReal) -> Result<ExtReal> {
        self.checked_add(-other)
    }

    pub fn checked_sum<I: IntoIterator<Item = ExtReal>>(terms: I) -> Result<ExtReal> {
        terms
            .into_iter()
            .try_fold(ExtReal::ZERO, |acc, t| acc.checked_add(t))
    }

    /// Multiplication by a nonnegative scalar, with `0 · (±∞) = 0`.
    pub fn scale(self, lambda: f64) -> ExtReal {
        assert!(lambda >= 0.0, "scale factor must be nonnegative");
        match self {
            ExtReal::Finite(x) => ExtReal::new(lambda * x),
            _ if lambda == 0.0 => ExtReal::ZERO,
            inf => inf,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::new(x)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            // -0.0 and 0.0 compare equal
            (Finite(a), Finite(b)) => a.partial_cmp(b).unwrap_or_else(|| a.total_cmp(b)),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        !other.is_nan() && *self == ExtReal::new(*other)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{}", x + 0.0),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_infinities_do_not_add() {
        assert_eq!(
            ExtReal::PosInf.checked_add(ExtReal::NegInf),
            Err(Error::UndefinedSum)
        );
        assert_eq!(
            ExtReal::NegInf.checked_sub(ExtReal::NegInf),
            Err(Error::UndefinedSum)
        );
    }

    #[test]
    fn infinity_dominates_finite() {
        assert_eq!(
            ExtReal::PosInf
                .checked_add(ExtReal::Finite(-1e300))
                .unwrap(),
            ExtReal::PosInf
        );
        assert_eq!(
            ExtReal::Finite(3.0).checked_add(ExtReal::NegInf).unwrap(),
            ExtReal::NegInf
        );
        assert_eq!(
            ExtReal::checked_sum([1.0, 2.0, 3.5].map(ExtReal::from)).unwrap(),
            6.5
        );
    }

    #[test]
    fn total_order() {
        let mut v = vec![
            ExtReal::PosInf,
            ExtReal::Finite(2.0),
            ExtReal::NegInf,
            ExtReal::Finite(-5.0),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                ExtReal::NegInf,
                ExtReal::Finite(-5.0),
                ExtReal::Finite(2.0),
                ExtReal::PosInf
            ]
        );
        assert!(ExtReal::Finite(f64::MAX) < ExtReal::PosInf);
    }

    #[test]
    fn scaling_uses_zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(0.0), 0.0);
        assert_eq!(ExtReal::NegInf.scale(2.0), ExtReal::NegInf);
        assert_eq!(ExtReal::Finite(1.5).scale(2.0), 3.0);
    }

    #[test]
    fn float_conversion_maps_infinities() {
        assert_eq!(ExtReal::from(f64::INFINITY), ExtReal::PosInf);
        assert_eq!(ExtReal::from(f64::NEG_INFINITY).to_f64(), f64::NEG_INFINITY);
        assert_eq!(format!("{}", ExtReal::NegInf), "-inf");
    }
}
