//! Exact half-integer powers of the blocking factor.
//!
//! Rescaling multiplies gauge fields by `L^{-1/2}` and couplings by `L^{1/2}`.
//! Keeping the exponent symbolic lets squared quantities (field-strength norms,
//! coupling ratios) be compared exactly.

use num::{BigInt, BigRational, One};
use serde::{Deserialize, Serialize};

/// The number `base^(twice_exp / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfPow {
    pub base: u64,
    pub twice_exp: i64,
}

impl HalfPow {
    pub fn new(base: u64, twice_exp: i64) -> Self {
        Self { base, twice_exp }
    }

    pub fn integer(base: u64, exp: i64) -> Self {
        Self::new(base, 2 * exp)
    }

    pub fn one(base: u64) -> Self {
        Self::new(base, 0)
    }

    pub fn mul(self, other: HalfPow) -> HalfPow {
        assert_eq!(self.base, other.base, "half powers of different bases");
        HalfPow::new(self.base, self.twice_exp + other.twice_exp)
    }

    pub fn inv(self) -> HalfPow {
        HalfPow::new(self.base, -self.twice_exp)
    }

    pub fn div(self, other: HalfPow) -> HalfPow {
        self.mul(other.inv())
    }

    pub fn is_integral(self) -> bool {
        self.twice_exp % 2 == 0
    }

    /// `base^twice_exp` as an exact rational: the square of this number.
    pub fn square(self) -> BigRational {
        exact_power(self.base, self.twice_exp)
    }

    pub fn value(self) -> f64 {
        let whole = self.twice_exp.div_euclid(2);
        let rem = self.twice_exp.rem_euclid(2);
        let b = self.base as f64;
        let mut v = b.powi(whole as i32);
        if rem == 1 {
            v *= b.sqrt();
        }
        v
    }
}

/// `base^exp` as an exact rational.
pub fn exact_power(base: u64, exp: i64) -> BigRational {
    let b = BigInt::from(base);
    let mut acc = BigInt::one();
    for _ in 0..exp.unsigned_abs() {
        acc *= &b;
    }
    if exp >= 0 {
        BigRational::from_integer(acc)
    } else {
        BigRational::new(BigInt::one(), acc)
    }
}

/// A real number stored as `coeff · L^{twice_exp/2}` so ratios of scaled
/// quantities stay exact in the exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledReal {
    pub coeff: f64,
    pub pow: HalfPow,
}

impl ScaledReal {
    pub fn new(coeff: f64, pow: HalfPow) -> Self {
        Self { coeff, pow }
    }

    pub fn value(self) -> f64 {
        self.coeff * self.pow.value()
    }

    pub fn scale(self, by: HalfPow) -> Self {
        Self::new(self.coeff, self.pow.mul(by))
    }

    /// Exact ratio when the coefficients agree bitwise.
    pub fn exact_ratio(self, other: ScaledReal) -> Option<HalfPow> {
        (self.coeff == other.coeff).then(|| self.pow.div(other.pow))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_power_squares_exactly() {
        let h = HalfPow::new(2, -1);
        assert_eq!(h.square(), BigRational::new(1.into(), 2.into()));
        assert!((h.value() - 0.5f64.sqrt()).abs() < 1e-16);
        assert_eq!(h.mul(h.inv()), HalfPow::one(2));
    }

    #[test]
    fn scaled_ratio_is_symbolic() {
        let e0 = ScaledReal::new(0.3, HalfPow::new(3, -4));
        let e1 = e0.scale(HalfPow::new(3, 1));
        assert_eq!(e1.exact_ratio(e0), Some(HalfPow::new(3, 1)));
    }
}
