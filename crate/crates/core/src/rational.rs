//! Arbitrary-precision rational numbers and the few integer helpers the
//! rest of the crate needs.
//!
//! Everything numeric in this crate is a [`Q`] (`num_rational::BigRational`).
//! Values are always kept in canonical reduced form by the backing crate, so
//! equality and ordering are exact.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number; the only numeric type used by the toolchain.
pub type Q = num_rational::BigRational;

/// Rational from an integer.
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Rational `n / d`. Panics if `d == 0` (programmer error, as with slicing).
pub fn q_ratio(n: i64, d: i64) -> Q {
    assert!(d != 0, "rational with zero denominator");
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a rational from the textual forms used in files: an optionally
/// signed integer (`-3`) or a fraction (`5/2`).
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational".to_string());
    }
    match s.split_once('/') {
        None => s
            .parse::<BigInt>()
            .map(Q::from_integer)
            .map_err(|_| format!("malformed integer `{s}`")),
        Some((n, d)) => {
            let numer = n
                .trim()
                .parse::<BigInt>()
                .map_err(|_| format!("malformed numerator `{n}`"))?;
            let denom = d
                .trim()
                .parse::<BigInt>()
                .map_err(|_| format!("malformed denominator `{d}`"))?;
            if denom.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Ok(Q::new(numer, denom))
        }
    }
}

/// Canonical textual form: `p/q` when the denominator is not one, plain
/// integer otherwise. Inverse of [`parse_q`] on its own output.
pub fn print_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Least integer `>= x` as a big integer.
pub fn ceil_big(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

/// Least natural number (including zero) `>= x`; zero when `x <= 0`.
pub fn ceil_nat(x: &Q) -> BigUint {
    let c = ceil_big(x);
    if c.is_negative() {
        BigUint::zero()
    } else {
        c.to_biguint().expect("non-negative integer")
    }
}

/// Convert a natural number to `u64`, or `None` if it does not fit.
pub fn nat_to_u64(n: &BigUint) -> Option<u64> {
    n.to_u64()
}

/// `true` when `x` is `0` or `1`; the Boolean-labelling test used by the
/// codec and the input-value enumeration base case.
pub fn is_bool(x: &Q) -> bool {
    x.is_zero() || x.is_one()
}
