use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;

use torsion_core::arith::*;
use torsion_core::PowerProduct;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// φ for every n ≤ limit by the classic subtractive sieve.
pub fn phi_table(limit: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=limit as u64).collect();
    for p in 2..=limit {
        if phi[p] == p as u64 {
            for j in (p..=limit).step_by(p) {
                phi[j] -= phi[j] / p as u64;
            }
        }
    }
    phi
}

fn naive_phi(n: u64) -> u64 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u64
}

fn naive_psi(n: u64) -> u64 {
    // ψ(n) = n ∏ (1 + 1/ℓ), primes found by trial division.
    let (mut num, mut den, mut m, mut p) = (n, 1, n, 2);
    while m > 1 {
        if m % p == 0 {
            num *= p + 1;
            den *= p;
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    num / den
}

/// `φ(a)/a^(1−ε)` versus `φ(b)/b^(1−ε)` for ε = r/s, exactly.
fn cmp_ratio(phi_a: u64, a: u64, phi_b: u64, b: u64, r: u32, s: u32) -> Ordering {
    let lhs = BigUint::from(phi_a).pow(s) * BigUint::from(b).pow(s - r);
    let rhs = BigUint::from(phi_b).pow(s) * BigUint::from(a).pow(s - r);
    lhs.cmp(&rhs)
}

/// Brute-force minimizer of `φ(n)/n^(1−ε)` over `n ≤ phi.len() − 1`.
fn brute_minimizer(phi: &[u64], r: u32, s: u32) -> (u64, Vec<u64>) {
    let e = r as f64 / s as f64;
    let ratio = |n: usize| phi[n] as f64 / (n as f64).powf(1.0 - e);
    let best_f = (1..phi.len()).map(ratio).fold(f64::INFINITY, f64::min);
    let near: Vec<u64> = (1..phi.len())
        .filter(|&n| ratio(n) <= best_f * (1.0 + 1e-9))
        .map(|n| n as u64)
        .collect();
    let mut best = near[0];
    for &n in &near[1..] {
        if cmp_ratio(phi[n as usize], n, phi[best as usize], best, r, s) == Ordering::Less {
            best = n;
        }
    }
    let ties = near
        .into_iter()
        .filter(|&n| cmp_ratio(phi[n as usize], n, phi[best as usize], best, r, s) == Ordering::Equal)
        .collect();
    (best, ties)
}

#[test]
fn b_epsilon_matches_brute_force_minimum() {
    let phi = phi_table(1_000_000);
    for (r, s) in [(1u32, 10u32), (1, 4), (1, 2), (3, 4), (9, 10)] {
        let eps = q(r as i64, s as i64);
        let b = b_epsilon(&eps, 12).unwrap();
        let (argmin, ties) = brute_minimizer(&phi, r, s);
        assert_eq!(ties, vec![argmin], "eps = {}", eps);
        assert_eq!(b.witness, argmin, "eps = {}", eps);
        assert_eq!(b.witness_phi, phi[argmin as usize]);
        let oracle = &PowerProduct::integer(phi[argmin as usize])
            * &PowerProduct::power(q(argmin as i64, 1), &eps - q(1, 1));
        assert_eq!(b.value.cmp(&oracle), Ordering::Equal);
    }
}

#[test]
fn b_epsilon_is_monotone_on_grid() {
    let grid = [q(1, 10), q(1, 4), q(1, 2), q(3, 4), q(9, 10)];
    let values: Vec<PowerProduct> = grid.iter().map(|e| b_epsilon(e, 12).unwrap().value).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn b_epsilon_frozen_decimals() {
    // Reference values from a 50-digit evaluation.
    assert_eq!(b_epsilon(&q(1, 10), 14).unwrap().decimal, "0.37469755372897");
    assert_eq!(b_epsilon(&q(1, 2), 17).unwrap().decimal, "0.70710678118654752");
}

#[test]
fn arithmetic_functions_against_naive() {
    let phi = phi_table(10_000);
    for n in 1..=10_000u64 {
        assert_eq!(euler_phi(n).unwrap(), phi[n as usize]);
        let psi = dedekind_psi(n).unwrap();
        assert_eq!(psi, naive_psi(n));
        if n >= 2 {
            assert!(psi > n);
        }
        // φψ·∏ℓ² = n²·∏(ℓ²−1)
        let f = factorize(n).unwrap();
        let (mut lhs, mut rhs) = (BigUint::from(phi[n as usize] * psi), BigUint::from(n * n));
        for l in f.primes() {
            lhs *= l * l;
            rhs *= l * l - 1;
        }
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn sieve_agrees_with_factorization() {
    let sieve = FactorSieve::new(50_000);
    let phi = phi_table(50_000);
    for n in 1..=50_000usize {
        let (p, s) = sieve.phi_psi(n);
        assert_eq!(p, phi[n]);
        assert_eq!(s, dedekind_psi(n as u64).unwrap());
    }
}

#[test]
fn multiplicativity_grid() {
    let sieve = FactorSieve::new(1_000_000);
    let phi = phi_table(1000);
    for a in 1..=1000u64 {
        for b in 1..=1000u64 {
            if a.gcd(&b) == 1 {
                let (pab, sab) = sieve.phi_psi((a * b) as usize);
                assert_eq!(pab, phi[a as usize] * phi[b as usize]);
                assert_eq!(sab, naive_psi(a) * naive_psi(b), "a={} b={}", a, b);
            }
        }
    }
}

proptest! {
    #[test]
    fn multiplicative_on_random_pairs(a in 1u64..100_000, b in 1u64..100_000) {
        prop_assume!(a.gcd(&b) == 1);
        prop_assert_eq!(euler_phi(a * b).unwrap(), euler_phi(a).unwrap() * euler_phi(b).unwrap());
        prop_assert_eq!(dedekind_psi(a * b).unwrap(), dedekind_psi(a).unwrap() * dedekind_psi(b).unwrap());
    }

    #[test]
    fn phi_matches_naive(n in 1u64..5000) {
        prop_assert_eq!(euler_phi(n).unwrap(), naive_phi(n));
    }

    #[test]
    fn factorization_reconstructs(n in 1u64..1_000_000_000) {
        let f = factorize(n).unwrap();
        let product: u64 = f.factors().map(|(p, e)| p.pow(e)).product();
        prop_assert_eq!(product, n);
        prop_assert_eq!(f.is_squarefree(), f.factors().all(|(_, e)| e == 1));
    }

    #[test]
    fn b_epsilon_lower_bound(n in 1u64..2_000_000, r in 1u32..10) {
        let eps = q(r as i64, 10);
        let b = b_epsilon(&eps, 12).unwrap();
        let ord = cmp_ratio(euler_phi(n).unwrap(), n, b.witness_phi, b.witness, r, 10);
        prop_assert!(ord != Ordering::Less);
        prop_assert_eq!(ord == Ordering::Equal, n == b.witness);
    }
}
