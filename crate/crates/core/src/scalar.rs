//! Numeric abstraction for valuations.
//!
//! Every algorithm in the crate is written against [`Scalar`], so the same
//! code runs on exact rationals (the default, see [`crate::Rational`]) and on
//! floats for quick exploratory runs.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, NumAssign};

/// A non-negative utility value with field operations.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + NumAssign + FromPrimitive + Send + Sync + 'static
{
    /// Parses an integer or a `p/q` fraction.
    fn parse_scalar(text: &str) -> Option<Self>;

    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("every scalar type represents small integers")
    }
}

impl Scalar for BigRational {
    fn parse_scalar(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().ok()?;
                let q: BigInt = q.trim().parse().ok()?;
                if q == BigInt::from(0) {
                    return None;
                }
                Some(BigRational::new(p, q))
            }
            None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
        }
    }
}

impl Scalar for Ratio<i64> {
    fn parse_scalar(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().ok()?;
                let q: i64 = q.trim().parse().ok()?;
                if q == 0 {
                    return None;
                }
                Some(Ratio::new(p, q))
            }
            None => text.parse::<i64>().ok().map(Ratio::from_integer),
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn parse_scalar(text: &str) -> Option<Self> {
                let text = text.trim();
                let value = match text.split_once('/') {
                    Some((p, q)) => p.trim().parse::<$t>().ok()? / q.trim().parse::<$t>().ok()?,
                    None => text.parse::<$t>().ok()?,
                };
                value.is_finite().then_some(value)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

/// Total order over scalars; incomparable values (NaN) compare equal.
pub fn compare<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

pub fn sum<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(values: I) -> T {
    values.into_iter().fold(T::zero(), |mut acc, v| {
        acc += v.clone();
        acc
    })
}

pub fn min_of<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(values: I) -> Option<T> {
    values
        .into_iter()
        .fold(None, |best: Option<T>, v| match best {
            Some(b) if compare(&b, v) != Ordering::Greater => Some(b),
            _ => Some(v.clone()),
        })
}

pub fn max_of<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(values: I) -> Option<T> {
    values
        .into_iter()
        .fold(None, |best: Option<T>, v| match best {
            Some(b) if compare(&b, v) != Ordering::Less => Some(b),
            _ => Some(v.clone()),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        let half = BigRational::parse_scalar("1/2").unwrap();
        assert_eq!(half.to_string(), "1/2");
        assert_eq!(BigRational::parse_scalar(" 7 ").unwrap().to_string(), "7");
        assert_eq!(BigRational::parse_scalar("4/6").unwrap().to_string(), "2/3");
        assert!(BigRational::parse_scalar("1/0").is_none());
        assert!(BigRational::parse_scalar("x").is_none());
        assert_eq!(f64::parse_scalar("3/4"), Some(0.75));
        assert_eq!(f64::parse_scalar("NaN"), None);
        assert_eq!(Ratio::<i64>::parse_scalar("-2/4"), Some(Ratio::new(-1, 2)));
    }

    #[test]
    fn min_max_helpers() {
        let xs = [3.0, 1.0, 2.0];
        assert_eq!(min_of(&xs), Some(1.0));
        assert_eq!(max_of(&xs), Some(3.0));
        assert_eq!(sum(&xs), 6.0);
        assert_eq!(min_of::<f64, _>(&[]), None);
    }
}
