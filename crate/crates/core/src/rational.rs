//! Exact rational helpers: literal parsing and rendering.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses an integer, a decimal (with optional exponent) or a fraction `p/q`
/// into an exact rational. Binary floating point is never involved.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty numeric literal".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let exp: i64 = s[i + 1..]
                .parse()
                .map_err(|_| format!("bad exponent in `{s}`"))?;
            (&s[..i], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("no digits in `{s}`"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(format!("not a rational literal: `{s}`"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().map_err(|_| format!("bad digits in `{s}`"))?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Decimal expansion of `r` when it terminates, e.g. `3/10 -> "0.3"`.
pub fn exact_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = r.numer().abs() * num_traits::pow(BigInt::from(10), places) / r.denom();
    let mut digits = scaled.to_str_radix(10);
    if places > 0 {
        if digits.len() <= places {
            digits = format!("{}{}", "0".repeat(places + 1 - digits.len()), digits);
        }
        digits.insert(digits.len() - places, '.');
    }
    if r.numer().sign() == Sign::Minus {
        digits.insert(0, '-');
    }
    Some(digits)
}

/// `p/q` in lowest terms, or `p` for integers.
pub fn fraction(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Shortest exact literal: terminating decimal when available, else `p/q`.
pub fn exact_literal(r: &Rational) -> String {
    exact_decimal(r).unwrap_or_else(|| fraction(r))
}

pub fn to_f64(r: &Rational) -> f64 {
    // Both parts below 2^53 convert exactly, so one division rounds once.
    const EXACT: i64 = 1 << 53;
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) if n.abs() < EXACT && d < EXACT => n as f64 / d as f64,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

/// Display-only decimal rendering; exact when the expansion terminates
/// within `max_places`, otherwise rounded.
pub fn display_decimal(r: &Rational, max_places: usize) -> String {
    if let Some(d) = exact_decimal(r) {
        let places = d.split_once('.').map_or(0, |(_, f)| f.len());
        if places <= max_places {
            return d;
        }
    }
    format!("{:.*}", max_places, to_f64(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.3").unwrap(), ratio(3, 10));
        assert_eq!(parse_rational("23.5").unwrap(), ratio(47, 2));
        assert_eq!(parse_rational("-.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), int(250));
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "e5", "--1", "0x10"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn renders_shortest_exact_form() {
        assert_eq!(exact_literal(&ratio(3, 10)), "0.3");
        assert_eq!(exact_literal(&ratio(271, 10)), "27.1");
        assert_eq!(exact_literal(&ratio(1, 3)), "1/3");
        assert_eq!(exact_literal(&int(14)), "14");
        assert_eq!(exact_literal(&ratio(-1, 8)), "-0.125");
        assert_eq!(exact_literal(&ratio(1, 40)), "0.025");
        assert_eq!(fraction(&ratio(47, 2)), "47/2");
        assert_eq!(display_decimal(&ratio(1, 3), 4), "0.3333");
    }

    proptest::proptest! {
        #[test]
        fn literal_round_trip(n in -100_000i64..100_000, d in 1i64..5000) {
            let r = ratio(n, d);
            proptest::prop_assert_eq!(parse_rational(&exact_literal(&r)).unwrap(), r);
        }
    }
}
