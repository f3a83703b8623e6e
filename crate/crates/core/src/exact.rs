//! Exact rational helpers shared by the environment, oracle and CLI.

use num_rational::Ratio;
use num_traits::{Signed, Zero};

/// Designer parameters (λ, β) are small rationals such as `1/10`.
pub type Rational = Ratio<i64>;

/// Exact state value. Numerators can reach `255 * area * denominators`,
/// hence the wider integer.
pub type Score = Ratio<i128>;

/// Parses `"3"`, `"-2"`, `"1/10"` or a decimal such as `"0.1"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let s = text.trim();
    let bad = || format!("`{text}` is not a rational number (try 1/10, 0.1 or 3)");
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(format!("`{text}` has a zero denominator"));
        }
        return Ok(Ratio::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches(['-', '+']) {
            "" => 0,
            digits => digits.parse().map_err(|_| bad())?,
        };
        let den = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let frac_part: i64 = frac.parse().map_err(|_| bad())?;
        let num = int_part
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_part))
            .ok_or_else(bad)?;
        return Ok(Ratio::new(if negative { -num } else { num }, den));
    }
    s.parse::<i64>().map(Ratio::from_integer).map_err(|_| bad())
}

pub fn score_from(r: Rational) -> Score {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}

/// Float rendering used at the agent boundary.
pub fn score_to_f64(s: &Score) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let (n, d) = (*s.numer(), *s.denom());
    if n.abs() < (1 << 53) && d < (1 << 53) {
        n as f64 / d as f64
    } else {
        // keep the quotient's integer part exact before dividing the rest
        let q = n / d;
        let r = n % d;
        q as f64 + r as f64 / d as f64
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}
