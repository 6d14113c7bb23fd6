//! Torsion-exponent sieve and explicit polynomial bounds.
//!
//! If `E/F` is a non-CM curve geometrically isogenous to a fixed `E₀/F₀`
//! with adelic index `I`, every torsion exponent `n` of `E(F)` satisfies
//! `φ(n)ψ(n) | 2·I·(d₀−1)!·d` where `d₀ = [F₀:ℚ]` and `d = [F:ℚ]`. The
//! sieve enumerates every `n` passing that test; the closed-form bounds
//! `c_ε·d^(1/2+ε)` and `C_ε·d^(1+ε)` follow from `ψ(n) > n` and
//! `φ(n) ≥ b_ε·n^(1−ε)`.
//!
//! The calculator cannot check that `E₀` is non-CM; that is on the caller.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{b_epsilon, factorial, FactorSieve};
use crate::error::{Error, Result};
use crate::exact::{ln_enclosure, PowerProduct, Rounding};

/// Rational upper bound `329/200 = 1.645` for `ζ(2) = π²/6`.
pub const ZETA2_UPPER: (u32, u32) = (329, 200);

/// Largest sieve ceiling scanned by default.
pub const DEFAULT_CEILING_BUDGET: u64 = 10_000_000;

/// Significant digits used when rendering bounds.
pub const DEFAULT_DIGITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BoundContext {
    /// Adelic index `I` of the fixed curve.
    pub index: u64,
    /// `[F₀:ℚ]`.
    pub base_degree: u64,
    /// `[F:ℚ]`.
    pub degree: u64,
}

impl BoundContext {
    pub fn new(index: u64, base_degree: u64, degree: u64) -> Result<Self> {
        for (name, v) in [("adelic index", index), ("base degree", base_degree), ("degree", degree)] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{} must be at least 1", name)));
            }
        }
        Ok(BoundContext {
            index,
            base_degree,
            degree,
        })
    }
}

/// `B = 2·I·(d₀−1)!·d`.
pub fn sieve_modulus(ctx: &BoundContext) -> BigUint {
    BigUint::from(2u32) * ctx.index * factorial(ctx.base_degree - 1) * ctx.degree
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub context: BoundContext,
    pub modulus: BigUint,
    /// Every `n ≤ ceiling` with `φ(n)ψ(n) | modulus`, increasing.
    pub candidates: Vec<u64>,
    pub ceiling: u64,
}

impl CandidateSet {
    pub fn max(&self) -> u64 {
        *self.candidates.last().expect("1 is always a candidate")
    }
}

/// `isqrt(⌈(329/200)·B⌉)`: since `φ(n)ψ(n) > (6/π²)·n²`, no candidate
/// exceeds it.
pub fn sieve_ceiling(modulus: &BigUint) -> BigUint {
    let (num, den) = ZETA2_UPPER;
    let scaled = (modulus * num + (den - 1)) / den;
    scaled.sqrt()
}

/// Every `n ≥ 1` with `φ(n)ψ(n)` dividing the sieve modulus.
pub fn exponent_candidates(ctx: &BoundContext, budget: u64) -> Result<CandidateSet> {
    let modulus = sieve_modulus(ctx);
    let ceiling_big = sieve_ceiling(&modulus);
    let ceiling = ceiling_big
        .to_u64()
        .filter(|&c| c <= budget)
        .ok_or_else(|| Error::CeilingTooLarge {
            ceiling: ceiling_big.clone(),
            budget,
        })?;
    let sieve = FactorSieve::new(ceiling as usize);
    let candidates = (1..=ceiling)
        .filter(|&n| {
            let (phi, psi) = sieve.phi_psi(n as usize);
            (&modulus % (BigUint::from(phi) * psi)).is_zero()
        })
        .collect();
    Ok(CandidateSet {
        context: *ctx,
        modulus,
        candidates,
        ceiling,
    })
}

/// An exact bound together with a decimal rendering that is never below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBoundValue {
    pub exact: PowerProduct,
    pub decimal: String,
    pub digits: u32,
}

impl UpperBoundValue {
    pub fn new(exact: PowerProduct, digits: u32) -> Self {
        let decimal = exact.to_decimal(digits, Rounding::Up);
        UpperBoundValue {
            exact,
            decimal,
            digits,
        }
    }

    /// The rendered decimal as an exact rational.
    pub fn decimal_value(&self) -> BigRational {
        self.exact.decimal_rational(self.digits, Rounding::Up)
    }

    /// Whether `n` is at most the exact bound.
    pub fn admits(&self, n: u64) -> bool {
        self.exact.cmp_integer(&BigUint::from(n)) != std::cmp::Ordering::Less
    }
}

fn rational(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn check_epsilon(epsilon: &BigRational) -> Result<()> {
    let two = BigRational::from_integer(BigInt::from(2));
    if *epsilon <= BigRational::zero() || *epsilon >= two {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 2), got {}",
            epsilon
        )));
    }
    Ok(())
}

/// Exact `c_ε = (2·I·(d₀−1)!/b_ε)^(1/(2−ε))`.
pub fn c_epsilon_exact(index: u64, base_degree: u64, epsilon: &BigRational) -> Result<PowerProduct> {
    check_epsilon(epsilon)?;
    if index == 0 || base_degree == 0 {
        return Err(Error::InvalidArgument(
            "adelic index and base degree must be at least 1".into(),
        ));
    }
    let b = b_epsilon(epsilon, DEFAULT_DIGITS)?;
    let numerator = BigUint::from(2u32) * index * factorial(base_degree - 1);
    let base = &PowerProduct::integer(numerator) * &b.value.recip();
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(base.pow(&(two - epsilon).recip()))
}

pub fn c_epsilon(
    index: u64,
    base_degree: u64,
    epsilon: &BigRational,
    digits: u32,
) -> Result<UpperBoundValue> {
    Ok(UpperBoundValue::new(
        c_epsilon_exact(index, base_degree, epsilon)?,
        digits,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremBounds {
    pub epsilon: BigRational,
    /// `c_ε · d^(1/2+ε)`.
    pub exponent: UpperBoundValue,
    /// `C_ε · d^(1+ε)` with `C_ε = c_{ε/2}²`.
    pub order: UpperBoundValue,
    /// ε lies in [1, 2): the bounds hold but are weaker than intended.
    pub epsilon_at_least_one: bool,
}

pub fn theorem_bounds(
    ctx: &BoundContext,
    epsilon: &BigRational,
    digits: u32,
) -> Result<TheoremBounds> {
    let c = c_epsilon_exact(ctx.index, ctx.base_degree, epsilon)?;
    let half = rational(1, 2);
    let d = BigRational::from_integer(BigInt::from(ctx.degree));
    let exponent = &c * &PowerProduct::power(d.clone(), &half + epsilon);
    let c_half = c_epsilon_exact(ctx.index, ctx.base_degree, &(epsilon * &half))?;
    let big_c = c_half.pow(&BigRational::from_integer(BigInt::from(2)));
    let order = &big_c * &PowerProduct::power(d, BigRational::one() + epsilon);
    Ok(TheoremBounds {
        epsilon: epsilon.clone(),
        exponent: UpperBoundValue::new(exponent, digits),
        order: UpperBoundValue::new(order, digits),
        epsilon_at_least_one: *epsilon >= BigRational::one(),
    })
}

/// A real number known only through a rational enclosure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lower: BigRational,
    pub upper: BigRational,
    /// `upper`, rounded up.
    pub decimal: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Baselines {
    pub degree: u64,
    /// `129·(5^d − 1)·(3d)⁶`, bounding prime-power torsion orders.
    pub parent: BigUint,
    /// `1977408·d·ln d` for integral `j`, only for `d > 1`. Natural log.
    pub hindry_silverman: Option<Enclosure>,
    /// `720720·√35·d^(1/2)`.
    pub bourdon_najman_exponent: UpperBoundValue,
    /// `1441440·√35·d^(1/2)`.
    pub bourdon_najman_order: UpperBoundValue,
    /// The Bourdon–Najman bounds are stated for odd `d` only.
    pub bourdon_najman_applicable: bool,
}

pub fn baselines(degree: u64, digits: u32) -> Result<Baselines> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let d = BigUint::from(degree);
    let parent = BigUint::from(129u32) * (BigUint::from(5u32).pow(degree as u32) - 1u32)
        * (BigUint::from(3u32) * &d).pow(6);

    let hindry_silverman = (degree > 1).then(|| {
        let (lo, hi) = ln_enclosure(&BigRational::from_integer(BigInt::from(degree)), digits + 10);
        let scale = BigRational::from_integer(BigInt::from(1977408u64 * degree));
        let lower = &scale * lo;
        let upper = &scale * hi;
        let decimal = PowerProduct::rational(upper.clone()).to_decimal(digits, Rounding::Up);
        Enclosure {
            lower,
            upper,
            decimal,
        }
    });

    let sqrt35 = PowerProduct::power(rational(35, 1), rational(1, 2));
    let root_d = PowerProduct::power(BigRational::from_integer(BigInt::from(degree)), rational(1, 2));
    let bn = |c: u64| UpperBoundValue::new(&(&PowerProduct::integer(c) * &sqrt35) * &root_d, digits);
    Ok(Baselines {
        degree,
        parent,
        hindry_silverman,
        bourdon_najman_exponent: bn(720720),
        bourdon_najman_order: bn(1441440),
        bourdon_najman_applicable: degree % 2 == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ctx(i: u64, d0: u64, d: u64) -> BoundContext {
        BoundContext::new(i, d0, d).unwrap()
    }

    #[test]
    fn sieve_modulus_examples() {
        assert_eq!(sieve_modulus(&ctx(2, 1, 1)), BigUint::from(4u32));
        assert_eq!(sieve_modulus(&ctx(6, 1, 1)), BigUint::from(12u32));
        assert_eq!(sieve_modulus(&ctx(2, 3, 5)), BigUint::from(40u32));
    }

    #[test]
    fn context_rejects_zero() {
        assert!(BoundContext::new(0, 1, 1).is_err());
        assert!(BoundContext::new(1, 0, 1).is_err());
        assert!(BoundContext::new(1, 1, 0).is_err());
    }

    #[test]
    fn candidate_examples() {
        let a = exponent_candidates(&ctx(2, 1, 1), DEFAULT_CEILING_BUDGET).unwrap();
        assert_eq!(a.candidates, vec![1]);
        assert_eq!(a.ceiling, 2);
        let b = exponent_candidates(&ctx(6, 1, 1), DEFAULT_CEILING_BUDGET).unwrap();
        assert_eq!(b.candidates, vec![1, 2, 4]);
        assert_eq!(b.ceiling, 4);
    }

    #[test]
    fn ceiling_budget() {
        let err = exponent_candidates(&ctx(1_000_000, 1, 1_000_000), 1000).unwrap_err();
        assert!(matches!(err, Error::CeilingTooLarge { budget: 1000, .. }));
    }

    #[test]
    fn c_epsilon_examples() {
        let c = c_epsilon(2, 1, &q(1, 2), 12).unwrap();
        assert_eq!(c.exact.cmp(&PowerProduct::power(q(2, 1), q(5, 3))), std::cmp::Ordering::Equal);
        assert_eq!(c.decimal, "3.17480210394");
        let c4 = c_epsilon(4, 1, &q(1, 2), 12).unwrap();
        assert_eq!(c4.decimal, "5.03968419958");
        assert!(c4.exact > c.exact);
    }

    #[test]
    fn c_epsilon_domain() {
        assert!(c_epsilon(2, 1, &q(0, 1), 6).is_err());
        assert!(c_epsilon(2, 1, &q(2, 1), 6).is_err());
        assert!(c_epsilon(2, 1, &q(3, 2), 6).is_ok());
    }

    #[test]
    fn theorem_bound_examples() {
        let t = theorem_bounds(&ctx(2, 1, 1), &q(1, 2), 12).unwrap();
        assert_eq!(t.exponent.decimal, "3.17480210394");
        assert_eq!(t.order.decimal, "10.2570167989");
        let t4 = theorem_bounds(&ctx(2, 1, 4), &q(1, 2), 12).unwrap();
        assert_eq!(t4.exponent.decimal, "12.6992084158");
        assert!(!t4.epsilon_at_least_one);
        assert!(theorem_bounds(&ctx(2, 1, 4), &q(1, 1), 6).unwrap().epsilon_at_least_one);
    }

    #[test]
    fn baseline_examples() {
        let b1 = baselines(1, 12).unwrap();
        assert_eq!(b1.parent, BigUint::from(376164u32));
        assert!(b1.hindry_silverman.is_none());
        assert!(b1.bourdon_najman_applicable);
        let b2 = baselines(2, 12).unwrap();
        assert_eq!(b2.hindry_silverman.unwrap().decimal, "2741269.56004");
        assert!(!b2.bourdon_najman_applicable);
        let b9 = baselines(9, 12).unwrap();
        assert_eq!(b9.bourdon_najman_exponent.decimal, "12791511.0639");
    }
}
