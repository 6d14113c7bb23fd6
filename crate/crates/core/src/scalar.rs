//! Scalar traits shared by the residue-ring and lattice code.
//!
//! Residues and moduli are any unsigned primitive integer; products are
//! formed in `u128` and reduced, so `u64` moduli never overflow during
//! matrix multiplication. Rational entries are `Ratio<T>` for any signed
//! integer `T` implementing [`LatticeInt`].

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{FromPrimitive, PrimInt, Signed, ToPrimitive, Unsigned};

/// Unsigned machine integer usable as a modulus or residue.
pub trait Natural:
    PrimInt + Unsigned + Hash + Debug + Display + FromStr + Send + Sync + 'static
{
    fn as_u128(self) -> u128 {
        ToPrimitive::to_u128(&self).expect("unsigned primitive fits in u128")
    }

    /// Narrows a `u128` that is known to be below some value of `Self`.
    fn from_u128_lossless(v: u128) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("value fits the residue type")
    }

    fn to_biguint(self) -> BigUint {
        BigUint::from(self.as_u128())
    }
}

impl<T> Natural for T where
    T: PrimInt + Unsigned + Hash + Debug + Display + FromStr + Send + Sync + 'static
{
}

/// Signed integer type backing exact rationals in the lattice module.
pub trait LatticeInt:
    Integer + Signed + Clone + Hash + Debug + Display + FromStr + FromPrimitive + ToPrimitive
{
    fn to_bigint(&self) -> BigInt;
}

impl LatticeInt for i64 {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl LatticeInt for i128 {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl LatticeInt for BigInt {
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}
