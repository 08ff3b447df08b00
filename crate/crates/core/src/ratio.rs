//! Small helpers around `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

pub fn q_zero() -> BigRational {
    BigRational::zero()
}

pub fn q_one() -> BigRational {
    BigRational::one()
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("rational out of f64 range")
}

/// Exact conversion of a finite `f64` into a rational (every finite float is
/// a dyadic rational).
pub fn from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("non-finite float")
}

/// Parses "num/den" or a plain integer literal.
pub fn parse(s: &str) -> Result<BigRational, String> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|e| format!("bad rational {s:?}: {e}"))
}

/// Renders as "num/den", or "num" for integers.
pub fn render(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// n! as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Multinomial coefficient |k|! / prod_i k_i!.
pub fn multinomial(k: &[u64]) -> BigInt {
    let total: u64 = k.iter().sum();
    let mut num = factorial(total);
    for &ki in k {
        num /= factorial(ki);
    }
    num
}

/// The ordered-children correction k^(1)!...k^(d)! / k! from the tree law;
/// the reciprocal of the multinomial coefficient.
pub fn type_order_factor(k: &[u64]) -> BigRational {
    BigRational::new(BigInt::one(), multinomial(k))
}

/// Nearest integer, ties away from zero.
pub fn round_to_i64(x: &BigRational) -> i64 {
    let r = x.round();
    r.numer().to_i64().expect("rounded value out of i64 range")
}

pub fn abs(x: &BigRational) -> BigRational {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["1/4", "0", "3", "7/2"] {
            let v = parse(s).unwrap();
            assert_eq!(render(&v), s);
        }
        assert!(parse("x/y").is_err());
    }

    #[test]
    fn multinomial_small() {
        assert_eq!(multinomial(&[1, 1]), BigInt::from(2));
        assert_eq!(multinomial(&[2, 1]), BigInt::from(3));
        assert_eq!(multinomial(&[0, 0]), BigInt::from(1));
        assert_eq!(multinomial(&[2, 2]), BigInt::from(6));
    }

    #[test]
    fn float_conversion_exact() {
        let v = from_f64(0.375);
        assert_eq!(v, q(3, 8));
        assert_eq!(to_f64(&v), 0.375);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_to_i64(&q(3, 2)), 2);
        assert_eq!(round_to_i64(&q(-3, 2)), -2);
        assert_eq!(round_to_i64(&q(1, 3)), 0);
    }
}
