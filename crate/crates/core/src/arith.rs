//! Multiplicative arithmetic functions and the optimal totient constant.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{PowerProduct, Rounding};
use crate::scalar::Natural;

/// Largest input accepted by trial-division factorization.
pub const FACTORIZATION_CAP: u128 = 1_000_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization<T> {
    value: T,
    factors: BTreeMap<T, u32>,
}

impl<T: Natural> Factorization<T> {
    pub fn value(&self) -> T {
        self.value
    }

    /// Prime/exponent pairs in increasing prime order.
    pub fn factors(&self) -> impl Iterator<Item = (T, u32)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    pub fn primes(&self) -> impl Iterator<Item = T> + '_ {
        self.factors.keys().copied()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.values().all(|&e| e == 1)
    }
}

pub fn factorize<T: Natural>(n: T) -> Result<Factorization<T>> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    let mut rest = n.as_u128();
    if rest > FACTORIZATION_CAP {
        return Err(Error::InvalidArgument(format!(
            "{} exceeds the factorization cap {}",
            n, FACTORIZATION_CAP
        )));
    }
    let mut factors = BTreeMap::new();
    let mut p: u128 = 2;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.insert(T::from_u128_lossless(p), e);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        factors.insert(T::from_u128_lossless(rest), 1);
    }
    Ok(Factorization { value: n, factors })
}

fn checked_prime_power_product<T: Natural>(
    n: T,
    name: &str,
    local: impl Fn(u128, u32) -> u128,
) -> Result<T> {
    let f = factorize(n)?;
    let mut acc: u128 = 1;
    for (p, e) in f.factors() {
        acc = acc
            .checked_mul(local(p.as_u128(), e))
            .ok_or_else(|| Error::InvalidArgument(format!("{}({}) overflows", name, n)))?;
    }
    <T as num_traits::NumCast>::from(acc)
        .ok_or_else(|| Error::InvalidArgument(format!("{}({}) overflows", name, n)))
}

/// Euler's totient: `φ(ℓᵏ) = ℓ^(k−1)(ℓ−1)`, extended multiplicatively.
pub fn euler_phi<T: Natural>(n: T) -> Result<T> {
    checked_prime_power_product(n, "phi", |p, e| p.pow(e - 1) * (p - 1))
}

/// Dedekind's psi: `ψ(ℓᵏ) = ℓ^(k−1)(ℓ+1)`, extended multiplicatively.
pub fn dedekind_psi<T: Natural>(n: T) -> Result<T> {
    checked_prime_power_product(n, "psi", |p, e| p.pow(e - 1) * (p + 1))
}

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// Smallest-prime-factor table, used where φ and ψ are needed for every
/// integer in a range.
#[derive(Clone, Debug)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        FactorSieve { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    /// `(φ(n), ψ(n))` for `1 ≤ n ≤ limit`.
    pub fn phi_psi(&self, n: usize) -> (u64, u64) {
        let mut rest = n;
        let (mut phi, mut psi) = (1u64, 1u64);
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut pk = 1u64;
            while rest % p == 0 {
                rest /= p;
                pk *= p as u64;
            }
            let p = p as u64;
            phi *= pk / p * (p - 1);
            psi *= pk / p * (p + 1);
        }
        (phi, psi)
    }
}

/// Primes in increasing order, by trial division against earlier primes.
pub fn primes() -> impl Iterator<Item = u64> {
    let mut found: Vec<u64> = Vec::new();
    (2u64..).filter(move |&c| {
        let is_prime = found.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0);
        if is_prime {
            found.push(c);
        }
        is_prime
    })
}

/// The minimum of `φ(n)/n^(1−ε)` over all `n ≥ 1`, with its minimizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectiveConstant {
    pub epsilon: BigRational,
    pub witness: u64,
    pub witness_phi: u64,
    /// `φ(witness) · witness^(ε−1)`.
    pub value: PowerProduct,
    /// `value` rounded down to `digits` significant digits.
    pub decimal: String,
    pub digits: u32,
}

impl EffectiveConstant {
    pub fn render(&self, digits: u32) -> String {
        self.value.to_decimal(digits, Rounding::Down)
    }
}

/// Whether `(1 − 1/p)·p^ε < 1`, decided exactly.
///
/// With `ε = r/q` this is `(p−1)^q · p^r < p^q`.
pub fn prime_factor_below_one(p: u64, epsilon: &BigRational) -> bool {
    let r = epsilon.numer().magnitude().to_u32().expect("epsilon numerator fits in u32");
    let q = epsilon.denom().magnitude().to_u32().expect("epsilon denominator fits in u32");
    let p_big = BigUint::from(p);
    let lhs = BigUint::from(p - 1).pow(q) * p_big.pow(r);
    lhs < p_big.pow(q)
}

/// Optimal constant `b_ε` with `φ(n) ≥ b_ε·n^(1−ε)` for every `n ≥ 1`.
///
/// The per-prime factor `(1 − 1/p)·p^ε` increases with `p`, so the
/// minimizer is the product of the leading primes whose factor is below 1.
pub fn b_epsilon(epsilon: &BigRational, digits: u32) -> Result<EffectiveConstant> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {}",
            epsilon
        )));
    }
    let mut witness: u64 = 1;
    let mut witness_phi: u64 = 1;
    for p in primes() {
        if !prime_factor_below_one(p, epsilon) {
            break;
        }
        witness = witness
            .checked_mul(p)
            .ok_or_else(|| Error::InvalidArgument(format!("epsilon {} too small", epsilon)))?;
        witness_phi *= p - 1;
    }
    let exponent = epsilon - BigRational::one();
    let value = &PowerProduct::integer(witness_phi)
        * &PowerProduct::power(
            BigRational::from_integer(BigInt::from(witness)),
            exponent,
        );
    let decimal = value.to_decimal(digits, Rounding::Down);
    Ok(EffectiveConstant {
        epsilon: epsilon.clone(),
        witness,
        witness_phi,
        value,
        decimal,
        digits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn unit_count(n: u64) -> u64 {
        (0..n).filter(|&a| a.gcd(&n) == 1).count() as u64
    }

    #[test]
    fn phi_examples() {
        assert_eq!(euler_phi(1u64).unwrap(), 1);
        assert_eq!(euler_phi(9u64).unwrap(), 6);
        assert_eq!(euler_phi(12u64).unwrap(), unit_count(12));
        assert_eq!(euler_phi(12u32).unwrap(), 4);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(dedekind_psi(1u64).unwrap(), 1);
        assert_eq!(dedekind_psi(9u64).unwrap(), 12);
        assert_eq!(dedekind_psi(6u64).unwrap(), 12);
    }

    #[test]
    fn zero_rejected() {
        assert!(matches!(euler_phi(0u64), Err(Error::InvalidArgument(_))));
        assert!(matches!(dedekind_psi(0u32), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn factorization_cap() {
        assert!(factorize(1_000_000_000_039u64).is_err());
        let f = factorize(999_999_999_989u64).unwrap();
        assert_eq!(f.factors().collect::<Vec<_>>(), vec![(999_999_999_989, 1)]);
    }

    #[test]
    fn psi_overflow_is_reported() {
        assert!(dedekind_psi(253u8).is_err());
        assert_eq!(dedekind_psi(127u8).unwrap(), 128);
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), BigUint::one());
        assert_eq!(factorial(1), BigUint::one());
        assert_eq!(factorial(5), BigUint::from(120u32));
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let sieve = FactorSieve::new(2000);
        for n in 1..=2000u64 {
            let (phi, psi) = sieve.phi_psi(n as usize);
            assert_eq!(phi, euler_phi(n).unwrap());
            assert_eq!(psi, dedekind_psi(n).unwrap());
        }
    }

    #[test]
    fn b_epsilon_examples() {
        let big = b_epsilon(&q(2, 1), 12).unwrap();
        assert_eq!(big.witness, 1);
        assert_eq!(big.value, PowerProduct::one());

        let half = b_epsilon(&q(1, 2), 12).unwrap();
        assert_eq!(half.witness, 2);
        assert_eq!(half.value, PowerProduct::power(q(2, 1), q(-1, 2)));
        assert_eq!(half.decimal, "0.707106781186");

        let tenth = b_epsilon(&q(1, 10), 6).unwrap();
        assert_eq!(tenth.witness, 30);
        assert_eq!(tenth.witness_phi, 8);
        assert_eq!(tenth.decimal, "0.374697");
    }

    #[test]
    fn b_epsilon_rejects_nonpositive() {
        assert!(b_epsilon(&q(0, 1), 6).is_err());
        assert!(b_epsilon(&q(-1, 3), 6).is_err());
    }

    #[test]
    fn prime_factor_threshold() {
        // (1 − 1/7)·7^(1/10) ≈ 1.0089
        assert!(prime_factor_below_one(5, &q(1, 10)));
        assert!(!prime_factor_below_one(7, &q(1, 10)));
        assert!(!prime_factor_below_one(2, &q(1, 1)));
    }
}
