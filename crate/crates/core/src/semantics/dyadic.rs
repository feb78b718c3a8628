//! Exact dyadic rationals `n / 2^k`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// A non-negative dyadic rational in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigUint,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: impl Into<BigUint>, exp: u32) -> Self {
        let mut d = Dyadic { num: num.into(), exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { num: BigUint::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: BigUint::one(), exp: 0 }
    }

    pub fn half() -> Self {
        Dyadic::new(1u32, 1)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Dyadic::new(1u32, k)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp as u64) as u32;
        if tz > 0 {
            self.num >>= tz;
            self.exp -= tz;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn aligned(&self, other: &Dyadic) -> (BigUint, BigUint, u32) {
        let e = self.exp.max(other.exp);
        (&self.num << (e - self.exp), &other.num << (e - other.exp), e)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e)
    }

    /// `self - other`, saturating at zero.
    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        if a <= b {
            Dyadic::zero()
        } else {
            Dyadic::new(a - b, e)
        }
    }

    /// `(self + other) / 2`.
    pub fn average(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e + 1)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    pub fn min<'a>(&'a self, other: &'a Dyadic) -> &'a Dyadic {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max<'a>(&'a self, other: &'a Dyadic) -> &'a Dyadic {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// The approximate value as a float, for display only.
    pub fn to_f64(&self) -> f64 {
        let n: f64 = self.num.to_string().parse().unwrap_or(f64::INFINITY);
        n / 2f64.powi(self.exp as i32)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("`{0}` is not a dyadic rational (expected n/2^k, n/d with d a power of two, or an integer)")]
pub struct ParseDyadicError(pub String);

impl FromStr for Dyadic {
    type Err = ParseDyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDyadicError(s.to_string());
        let s = s.trim();
        let Some((n, d)) = s.split_once('/') else {
            return Ok(Dyadic::new(BigUint::from_str(s).map_err(|_| err())?, 0));
        };
        let num = BigUint::from_str(n.trim()).map_err(|_| err())?;
        let d = d.trim();
        let exp = if let Some(k) = d.strip_prefix("2^") {
            k.parse::<u32>().map_err(|_| err())?
        } else {
            let den = BigUint::from_str(d).map_err(|_| err())?;
            if den.is_zero() || den.count_ones() != 1 {
                return Err(err());
            }
            den.trailing_zeros().unwrap_or(0) as u32
        };
        Ok(Dyadic::new(num, exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let h = Dyadic::half();
        assert_eq!(h.average(&Dyadic::zero()), Dyadic::new(1u32, 2));
        assert_eq!(h.add(&h), Dyadic::one());
        assert_eq!(Dyadic::one().sub(&Dyadic::new(3u32, 2)), Dyadic::new(1u32, 2));
        assert_eq!(Dyadic::new(4u32, 3), h);
        assert!(Dyadic::new(1u32, 2) < h);
        assert_eq!(Dyadic::new(0u32, 9).exponent(), 0);
    }

    #[test]
    fn text_round_trip() {
        for d in [Dyadic::zero(), Dyadic::one(), Dyadic::new(1023u32, 10), Dyadic::new(3u32, 2)] {
            assert_eq!(d.to_string().parse::<Dyadic>().unwrap(), d);
        }
        assert_eq!("1/2".parse::<Dyadic>().unwrap(), Dyadic::half());
        assert_eq!("1".parse::<Dyadic>().unwrap(), Dyadic::one());
        assert!("1/3".parse::<Dyadic>().is_err());
        assert_eq!(Dyadic::half().to_string(), "1/2^1");
    }
}
