//! Finite-level computations behind polynomial torsion bounds for elliptic
//! curves in a fixed geometric isogeny class.
//!
//! * [`modmatrix`]: subgroups of GL₂(ℤ/nℤ), reduction maps, full preimages,
//!   indices and levels.
//! * [`arith`]: φ, ψ, factorials and the optimal constant `b_ε` with
//!   `φ(n) ≥ b_ε·n^(1−ε)`.
//! * [`lattice`]: ℤ_ℓ-lattices in ℚ_ℓ², stabilizer tests and index
//!   comparisons for invariant lattices at finite ℓ-adic precision.
//! * [`bounds`]: the divisibility sieve on torsion exponents, the explicit
//!   constants `c_ε`, `C_ε`, and the classical baseline bounds.
//! * [`cli`]: curve-record ingestion, reports and the verification suite.

pub mod arith;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod modmatrix;
pub mod scalar;

pub use error::{Error, Result};
pub use exact::{PowerProduct, Rounding};
pub use scalar::{LatticeInt, Natural};

use num_bigint::BigInt;

/// GL₂ element with `u32` residues.
pub type Mat2U32 = modmatrix::Mat2<u32>;
/// GL₂ element with `u64` residues (products are formed in `u128`).
pub type Mat2U64 = modmatrix::Mat2<u64>;
pub type SubgroupU32 = modmatrix::SubgroupModN<u32>;
pub type SubgroupU64 = modmatrix::SubgroupModN<u64>;

/// Lattice with arbitrary-precision rational coordinates.
pub type Lattice = lattice::LatticeBasis<BigInt>;
/// Lattice with `i128`-backed rational coordinates; adequate for small
/// primes and bases, overflow panics in debug builds.
pub type LatticeI128 = lattice::LatticeBasis<i128>;
pub type AdicGroupBig = lattice::AdicGroup<BigInt>;
pub type AdicGroupI128 = lattice::AdicGroup<i128>;
