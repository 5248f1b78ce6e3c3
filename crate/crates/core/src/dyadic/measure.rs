use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigUint;

use super::DyadicError;

/// An exact non-negative dyadic rational `numerator / 2^exponent`.
///
/// Always stored in lowest terms: the numerator is odd, or the value is
/// zero and the exponent is 0. Equality is therefore structural.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicMeasure {
    numerator: u128,
    exponent: u32,
}

impl DyadicMeasure {
    pub const ZERO: DyadicMeasure = DyadicMeasure {
        numerator: 0,
        exponent: 0,
    };
    pub const ONE: DyadicMeasure = DyadicMeasure {
        numerator: 1,
        exponent: 0,
    };

    pub fn new(numerator: u128, exponent: u32) -> DyadicMeasure {
        if numerator == 0 {
            return DyadicMeasure::ZERO;
        }
        let shift = numerator.trailing_zeros().min(exponent);
        DyadicMeasure {
            numerator: numerator >> shift,
            exponent: exponent - shift,
        }
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> DyadicMeasure {
        DyadicMeasure {
            numerator: 1,
            exponent: k,
        }
    }

    /// `2^k` for `k >= 0`, `2^-|k|` otherwise.
    pub fn pow2(k: i64) -> DyadicMeasure {
        DyadicMeasure::ONE.mul_pow2(k)
    }

    pub fn numerator(&self) -> u128 {
        self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    /// Multiplies by `2^k` exactly. Panics on overflow of the 128-bit numerator.
    pub fn mul_pow2(&self, k: i64) -> DyadicMeasure {
        if self.is_zero() {
            return *self;
        }
        if k <= 0 {
            let exponent = u32::try_from(i64::from(self.exponent) - k)
                .expect("dyadic exponent overflow");
            return DyadicMeasure::new(self.numerator, exponent);
        }
        let k = k as u64;
        if k <= u64::from(self.exponent) {
            DyadicMeasure::new(self.numerator, self.exponent - k as u32)
        } else {
            let shift = (k - u64::from(self.exponent)) as u32;
            DyadicMeasure::new(shl_exact(self.numerator, shift), 0)
        }
    }

    /// Multiplies by a non-negative integer.
    pub fn scale(&self, factor: u64) -> DyadicMeasure {
        let numerator = self
            .numerator
            .checked_mul(u128::from(factor))
            .expect("dyadic numerator overflow");
        DyadicMeasure::new(numerator, self.exponent)
    }

    pub fn checked_sub(&self, other: DyadicMeasure) -> Option<DyadicMeasure> {
        let exponent = self.exponent.max(other.exponent);
        let a = shl_exact(self.numerator, exponent - self.exponent);
        let b = shl_exact(other.numerator, exponent - other.exponent);
        a.checked_sub(b).map(|n| DyadicMeasure::new(n, exponent))
    }

    /// Exact comparison against a rational threshold.
    pub fn cmp_rational(&self, threshold: Threshold) -> Ordering {
        // numerator / 2^e  vs  num / den
        let lhs = BigUint::from(self.numerator) * BigUint::from(threshold.den);
        let rhs = BigUint::from(threshold.num) << self.exponent as usize;
        lhs.cmp(&rhs)
    }

    /// Lossy conversion, for human-readable summaries only.
    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 * (-(f64::from(self.exponent))).exp2()
    }
}

fn shl_exact(value: u128, shift: u32) -> u128 {
    if value == 0 {
        return 0;
    }
    assert!(
        shift < 128 && value.leading_zeros() >= shift,
        "dyadic numerator overflow"
    );
    value << shift
}

impl Default for DyadicMeasure {
    fn default() -> Self {
        DyadicMeasure::ZERO
    }
}

impl Add for DyadicMeasure {
    type Output = DyadicMeasure;

    fn add(self, rhs: DyadicMeasure) -> DyadicMeasure {
        let exponent = self.exponent.max(rhs.exponent);
        let a = shl_exact(self.numerator, exponent - self.exponent);
        let b = shl_exact(rhs.numerator, exponent - rhs.exponent);
        DyadicMeasure::new(
            a.checked_add(b).expect("dyadic numerator overflow"),
            exponent,
        )
    }
}

impl std::iter::Sum for DyadicMeasure {
    fn sum<I: Iterator<Item = DyadicMeasure>>(iter: I) -> Self {
        iter.fold(DyadicMeasure::ZERO, Add::add)
    }
}

impl Ord for DyadicMeasure {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare a/2^e1 with b/2^e2 by lifting the smaller exponent. A
        // numerator that would overflow on lifting is larger than any u128.
        let (a, b, flip) = if self.exponent >= other.exponent {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let shift = a.exponent - b.exponent;
        let ord = if b.numerator == 0 {
            a.numerator.cmp(&0)
        } else if shift >= 128 || b.numerator.leading_zeros() < shift {
            Ordering::Less
        } else {
            a.numerator.cmp(&(b.numerator << shift))
        };
        if flip {
            ord.reverse()
        } else {
            ord
        }
    }
}

impl PartialOrd for DyadicMeasure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            0 => write!(f, "{}", self.numerator),
            e if e < 128 => write!(f, "{}/{}", self.numerator, 1u128 << e),
            e => write!(f, "{}/2^{}", self.numerator, e),
        }
    }
}

impl fmt::Debug for DyadicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DyadicMeasure({self})")
    }
}

/// A rational threshold in `(0, 1/2]`, such as the 1/3 density bound.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Threshold {
    num: u64,
    den: u64,
}

impl Threshold {
    pub const ONE_THIRD: Threshold = Threshold { num: 1, den: 3 };

    pub fn new(num: u64, den: u64) -> Result<Threshold, DyadicError> {
        // 0 < num/den <= 1/2
        if num == 0 || den == 0 || u128::from(num) * 2 > u128::from(den) {
            return Err(DyadicError::InvalidThreshold { num, den });
        }
        Ok(Threshold { num, den })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `measure >= threshold`, exactly.
    pub fn is_met_by(&self, measure: DyadicMeasure) -> bool {
        measure.cmp_rational(*self) != Ordering::Less
    }

    /// Smallest integer count `k` with `k / 2^level >= threshold`.
    pub fn min_count_at_level(&self, level: u32) -> BigUint {
        let scaled = BigUint::from(self.num) << level as usize;
        let den = BigUint::from(self.den);
        (scaled + &den - 1u32) / den
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::ONE_THIRD
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Threshold {
    type Err = DyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DyadicError::Parse(format!("`{s}` is not a fraction like 1/3"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let num = n.trim().parse().map_err(|_| bad())?;
        let den = d.trim().parse().map_err(|_| bad())?;
        Threshold::new(num, den)
    }
}
