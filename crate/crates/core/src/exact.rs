//! Exact positive reals of the form `∏ bᵢ^eᵢ` with rational bases and
//! rational exponents, plus directed-rounding decimal rendering.
//!
//! Every such value `x` has a normal form `x = R^(1/Q)` with `R` rational
//! and `Q` the lcm of the exponent denominators. Comparisons and decimal
//! digits are derived from `R` and `Q` using integer roots only, so no
//! rendered digit depends on floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    Down,
    Up,
}

/// Product of rational powers of positive rationals.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PowerProduct {
    factors: Vec<(BigRational, BigRational)>,
}

impl PowerProduct {
    pub fn one() -> Self {
        PowerProduct { factors: Vec::new() }
    }

    /// `base^exp`.
    ///
    /// # Panics
    ///
    /// Panics if `base` is not strictly positive.
    pub fn power(base: BigRational, exp: BigRational) -> Self {
        assert!(base.is_positive(), "power product bases must be positive");
        PowerProduct { factors: vec![(base, exp)] }.normalized()
    }

    pub fn rational(r: BigRational) -> Self {
        Self::power(r, BigRational::one())
    }

    pub fn integer(n: impl Into<BigUint>) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n.into())))
    }

    pub fn factors(&self) -> &[(BigRational, BigRational)] {
        &self.factors
    }

    pub fn pow(&self, exp: &BigRational) -> Self {
        PowerProduct {
            factors: self
                .factors
                .iter()
                .map(|(b, e)| (b.clone(), e * exp))
                .collect(),
        }
        .normalized()
    }

    pub fn recip(&self) -> Self {
        self.pow(&-BigRational::one())
    }

    /// Merges equal bases, drops trivial factors, sorts by base.
    fn normalized(mut self) -> Self {
        self.factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(self.factors.len());
        for (b, e) in self.factors {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += e,
                _ => merged.push((b, e)),
            }
        }
        merged.retain(|(b, e)| !b.is_one() && !e.is_zero());
        PowerProduct { factors: merged }
    }

    /// Returns `(R, Q)` with `self = R^(1/Q)`.
    pub fn normal_form(&self) -> (BigRational, u32) {
        let q = self
            .factors
            .iter()
            .fold(BigInt::one(), |acc, (_, e)| acc.lcm(e.denom()));
        let q = q.to_u32().expect("root index fits in u32");
        let mut radicand = BigRational::one();
        for (b, e) in &self.factors {
            let k = (e * BigRational::from_integer(BigInt::from(q))).to_integer();
            radicand *= rational_pow(b, &k);
        }
        (radicand, q)
    }

    /// Exact comparison against a rational.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        if !r.is_positive() {
            return Ordering::Greater;
        }
        let (radicand, q) = self.normal_form();
        radicand.cmp(&rational_pow(r, &BigInt::from(q)))
    }

    pub fn cmp_integer(&self, n: &BigUint) -> Ordering {
        self.cmp_rational(&BigRational::from_integer(BigInt::from(n.clone())))
    }

    /// `⌊self · 10^shift⌋` and whether it is exact.
    pub fn floor_scaled(&self, shift: i64) -> (BigUint, bool) {
        let (radicand, q) = self.normal_form();
        let scale = pow10(shift * i64::from(q));
        let scaled = radicand * scale;
        let floor = scaled.numer().div_floor(scaled.denom());
        let floor = floor.to_biguint().expect("positive value");
        let root = floor.nth_root(q);
        let exact = scaled.is_integer() && root.pow(q) == floor;
        (root, exact)
    }

    /// Exponent `m` with `10^m ≤ self < 10^(m+1)`.
    pub fn decimal_magnitude(&self) -> i64 {
        let mut m = self.approx_log10().floor() as i64;
        while self.floor_scaled(-m).0.is_zero() {
            m -= 1;
        }
        while !self.floor_scaled(-(m + 1)).0.is_zero() {
            m += 1;
        }
        m
    }

    fn approx_log10(&self) -> f64 {
        self.factors
            .iter()
            .map(|(b, e)| {
                let ln_b = approx_ln_biguint(b.numer().magnitude())
                    - approx_ln_biguint(b.denom().magnitude());
                ln_b * e.to_f64().unwrap_or(0.0)
            })
            .sum::<f64>()
            / std::f64::consts::LN_10
    }

    pub fn to_f64(&self) -> f64 {
        (self.approx_log10() * std::f64::consts::LN_10).exp()
    }

    /// Renders `digits` significant digits, rounded in the given direction.
    pub fn to_decimal(&self, digits: u32, rounding: Rounding) -> String {
        let digits = digits.max(1);
        let shift = i64::from(digits) - 1 - self.decimal_magnitude();
        let (mut y, exact) = self.floor_scaled(shift);
        if rounding == Rounding::Up && !exact {
            y += 1u32;
        }
        format_scaled(&y, shift)
    }

    /// Decimal value of the rendering produced by [`Self::to_decimal`], as an
    /// exact rational.
    pub fn decimal_rational(&self, digits: u32, rounding: Rounding) -> BigRational {
        let digits = digits.max(1);
        let shift = i64::from(digits) - 1 - self.decimal_magnitude();
        let (mut y, exact) = self.floor_scaled(shift);
        if rounding == Rounding::Up && !exact {
            y += 1u32;
        }
        BigRational::from_integer(BigInt::from(y)) * pow10(-shift)
    }
}

impl Mul for &PowerProduct {
    type Output = PowerProduct;

    fn mul(self, rhs: &PowerProduct) -> PowerProduct {
        let mut factors = self.factors.clone();
        factors.extend(rhs.factors.iter().cloned());
        PowerProduct { factors }.normalized()
    }
}

impl Mul for PowerProduct {
    type Output = PowerProduct;

    fn mul(self, rhs: PowerProduct) -> PowerProduct {
        &self * &rhs
    }
}

impl PartialOrd for PowerProduct {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PowerProduct {
    fn cmp(&self, other: &Self) -> Ordering {
        (self * &other.recip()).cmp_rational(&BigRational::one())
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (b, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if b.is_integer() {
                write!(f, "{}", b)?;
            } else {
                write!(f, "({})", b)?;
            }
            if !e.is_one() {
                if e.is_integer() && e.is_positive() {
                    write!(f, "^{}", e)?;
                } else {
                    write!(f, "^({})", e)?;
                }
            }
        }
        Ok(())
    }
}

/// `base^k` for an arbitrary integer `k`.
pub fn rational_pow(base: &BigRational, k: &BigInt) -> BigRational {
    let e = k.magnitude().to_u32().expect("exponent fits in u32");
    let p = BigRational::new(base.numer().pow(e), base.denom().pow(e));
    if k.is_negative() {
        p.recip()
    } else {
        p
    }
}

pub fn pow10(k: i64) -> BigRational {
    let p = BigInt::from(10u32).pow(k.unsigned_abs() as u32);
    if k < 0 {
        BigRational::new(BigInt::one(), p)
    } else {
        BigRational::from_integer(p)
    }
}

fn approx_ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::MAX).ln()
    } else {
        let shift = bits - 64;
        let top = (n >> shift).to_f64().unwrap_or(1.0);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Formats `y · 10^(-shift)` as a plain decimal string.
pub fn format_scaled(y: &BigUint, shift: i64) -> String {
    let s = y.to_string();
    if shift <= 0 {
        let mut out = s;
        out.extend(std::iter::repeat_n('0', (-shift) as usize));
        return out;
    }
    let shift = shift as usize;
    let padded = if s.len() <= shift {
        format!("{}{}", "0".repeat(shift + 1 - s.len()), s)
    } else {
        s
    };
    let split = padded.len() - shift;
    format!("{}.{}", &padded[..split], &padded[split..])
}

/// Rigorous enclosure `lo ≤ ln(x) ≤ hi` with `hi − lo < 10^(-frac_digits)`.
///
/// # Panics
///
/// Panics if `x` is not strictly positive.
pub fn ln_enclosure(x: &BigRational, frac_digits: u32) -> (BigRational, BigRational) {
    assert!(x.is_positive(), "logarithm of a non-positive number");
    if *x < BigRational::one() {
        let (lo, hi) = ln_enclosure(&x.recip(), frac_digits);
        return (-hi, -lo);
    }
    // x = 2^k · y with 1 ≤ y < 2
    let two = BigRational::from_integer(BigInt::from(2));
    let mut k = 0u32;
    let mut y = x.clone();
    while y >= two {
        y /= &two;
        k += 1;
    }
    // Leave headroom for the k-fold error of ln 2.
    let extra = (f64::from(k.max(1))).log10().ceil() as u32 + 2;
    let tol = pow10(-(i64::from(frac_digits + extra)));
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    let (lo2, hi2) = atanh_enclosure(&third, &tol);
    let one = BigRational::one();
    let t = (&y - &one) / (&y + &one);
    let (loy, hiy) = atanh_enclosure(&t, &tol);
    let kk = BigRational::from_integer(BigInt::from(k));
    (
        &kk * &lo2 * &two + loy * &two,
        &kk * &hi2 * &two + hiy * &two,
    )
}

/// Enclosure of `atanh(t)` for `0 ≤ t ≤ 1/3`, width below `tol`.
fn atanh_enclosure(t: &BigRational, tol: &BigRational) -> (BigRational, BigRational) {
    let one = BigRational::one();
    let t2 = t * t;
    let tail_den = &one - &t2;
    let mut sum = BigRational::zero();
    let mut power = t.clone();
    let mut j = 0u64;
    loop {
        let denom = BigRational::from_integer(BigInt::from(2 * j + 1));
        sum += &power / &denom;
        power *= &t2;
        j += 1;
        // Remaining terms are bounded by a geometric series in t².
        let tail = &power / (BigRational::from_integer(BigInt::from(2 * j + 1)) * &tail_den);
        if tail < *tol {
            return (sum.clone(), sum + tail);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn sqrt_two_digits() {
        let x = PowerProduct::power(q(2, 1), q(1, 2));
        assert_eq!(x.to_decimal(6, Rounding::Down), "1.41421");
        assert_eq!(x.to_decimal(6, Rounding::Up), "1.41422");
    }

    #[test]
    fn exact_values_round_identically() {
        let x = PowerProduct::power(q(4, 1), q(1, 2));
        assert_eq!(x.to_decimal(3, Rounding::Down), "2.00");
        assert_eq!(x.to_decimal(3, Rounding::Up), "2.00");
    }

    #[test]
    fn small_and_large_magnitudes() {
        let x = PowerProduct::rational(q(1, 8));
        assert_eq!(x.to_decimal(2, Rounding::Down), "0.12");
        assert_eq!(x.to_decimal(2, Rounding::Up), "0.13");
        let y = PowerProduct::integer(376164u32);
        assert_eq!(y.to_decimal(3, Rounding::Up), "377000");
        assert_eq!(y.to_decimal(12, Rounding::Up), "376164.000000");
    }

    #[test]
    fn merging_and_display() {
        let a = PowerProduct::power(q(2, 1), q(1, 2));
        let b = PowerProduct::power(q(2, 1), q(1, 2));
        assert_eq!(&a * &b, PowerProduct::integer(2u32));
        assert_eq!(format!("{}", a), "2^(1/2)");
        assert_eq!(format!("{}", PowerProduct::one()), "1");
    }

    #[test]
    fn ordering_is_exact() {
        // 2^(1/2) vs 99/70 = 1.41428...
        let a = PowerProduct::power(q(2, 1), q(1, 2));
        assert_eq!(a.cmp_rational(&q(99, 70)), Ordering::Less);
        assert_eq!(a.cmp_rational(&q(140, 99)), Ordering::Greater);
        let b = PowerProduct::power(q(3, 1), q(1, 3));
        assert!(b > a);
    }

    #[test]
    fn ln_two_enclosure() {
        let (lo, hi) = ln_enclosure(&q(2, 1), 20);
        let ln2 = std::f64::consts::LN_2;
        assert!(lo.to_f64().unwrap() <= ln2 + 1e-15);
        assert!(hi.to_f64().unwrap() >= ln2 - 1e-15);
        assert!(&hi - &lo < pow10(-20));
    }

    #[test]
    fn ln_of_fraction_is_negative() {
        let (lo, hi) = ln_enclosure(&q(1, 10), 15);
        let v = (0.1f64).ln();
        assert!((lo.to_f64().unwrap() - v).abs() < 1e-14);
        assert!(hi > lo);
    }
}
