//! Exact arithmetic in GL₂(ℤ/nℤ): matrices, subgroup closures, reduction
//! maps, full preimages, indices and levels.
//!
//! An open subgroup of GL₂(Ẑ) is carried here as its image modulo some `n`
//! that is a multiple of its level. Subgroups store their elements as a
//! sorted vector (lexicographic on `(a, b, c, d)`), so two subgroups are
//! equal exactly when their moduli and element lists agree.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::factorize;
use crate::error::{Error, Result};
use crate::scalar::Natural;

/// Upper bound on the number of group elements any single operation will
/// materialize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationCap(pub u64);

impl EnumerationCap {
    pub const DEFAULT: EnumerationCap = EnumerationCap(10_000_000);

    fn check(self, size: &BigUint) -> Result<()> {
        if *size > BigUint::from(self.0) {
            Err(Error::EnumerationTooLarge {
                size: size.clone(),
                cap: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for EnumerationCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// An element of GL₂(ℤ/nℤ), written `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2<T> {
    n: T,
    a: T,
    b: T,
    c: T,
    d: T,
}

fn reduce_signed<T: Natural>(x: i128, n: T) -> T {
    let n = n.as_u128() as i128;
    T::from_u128_lossless(x.rem_euclid(n) as u128)
}

fn is_unit_mod(x: u128, n: u128) -> bool {
    x.gcd(&n) == 1
}

impl<T: Natural> Mat2<T> {
    /// Builds a matrix from arbitrary integer entries, reducing them mod `n`.
    pub fn new(n: T, a: i128, b: i128, c: i128, d: i128) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::InvalidModulus(n.to_string(), 1));
        }
        Self::from_residues(
            n,
            reduce_signed(a, n),
            reduce_signed(b, n),
            reduce_signed(c, n),
            reduce_signed(d, n),
        )
    }

    /// Builds a matrix from residues that must already lie in `[0, n)`.
    pub fn from_residues(n: T, a: T, b: T, c: T, d: T) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::InvalidModulus(n.to_string(), 1));
        }
        if [a, b, c, d].iter().any(|&x| x >= n) {
            return Err(Error::InvalidArgument(format!(
                "entries of {},{};{},{} are not reduced mod {}",
                a, b, c, d, n
            )));
        }
        let m = Mat2 { n, a, b, c, d };
        if !is_unit_mod(m.det().as_u128(), n.as_u128()) {
            return Err(Error::NotInvertible(format!("{} (mod {})", m, n)));
        }
        Ok(m)
    }

    pub fn identity(n: T) -> Self {
        let one = if n.is_one() { T::zero() } else { T::one() };
        Mat2 {
            n,
            a: one,
            b: T::zero(),
            c: T::zero(),
            d: one,
        }
    }

    pub fn diagonal(n: T, x: T, y: T) -> Result<Self> {
        Self::from_residues(n, x % n, T::zero(), T::zero(), y % n)
    }

    pub fn modulus(&self) -> T {
        self.n
    }

    /// `[a, b, c, d]`.
    pub fn entries(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> T {
        let n = self.n.as_u128();
        let ad = self.a.as_u128() * self.d.as_u128() % n;
        let bc = self.b.as_u128() * self.c.as_u128() % n;
        T::from_u128_lossless((ad + n - bc) % n)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// # Panics
    ///
    /// Panics if the moduli differ.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "multiplying matrices with different moduli");
        let n = self.n.as_u128();
        let [a, b, c, d] = self.entries().map(|x| x.as_u128());
        let [e, f, g, h] = rhs.entries().map(|x| x.as_u128());
        let r = |x: u128, y: u128| T::from_u128_lossless((x % n + y % n) % n);
        Mat2 {
            n: self.n,
            a: r(a * e, b * g),
            b: r(a * f, b * h),
            c: r(c * e, d * g),
            d: r(c * f, d * h),
        }
    }

    pub fn inverse(&self) -> Self {
        let n = self.n.as_u128();
        if n == 1 {
            return *self;
        }
        let det = self.det().as_u128() as i128;
        let inv = (det.extended_gcd(&(n as i128)).x).rem_euclid(n as i128) as u128;
        let s = |x: u128| T::from_u128_lossless(x * inv % n);
        let neg = |x: T| (n - x.as_u128()) % n;
        Mat2 {
            n: self.n,
            a: s(self.d.as_u128()),
            b: s(neg(self.b)),
            c: s(neg(self.c)),
            d: s(self.a.as_u128()),
        }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::identity(self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Entrywise reduction mod `m`.
    pub fn reduce(&self, m: T) -> Result<Self> {
        ReductionMap::new(self.n, m).map(|r| r.apply(self))
    }

    fn reduce_unchecked(&self, m: T) -> Self {
        let r = |x: T| x % m;
        Mat2 {
            n: m,
            a: r(self.a),
            b: r(self.b),
            c: r(self.c),
            d: r(self.d),
        }
    }
}

impl<T: Natural> fmt::Display for Mat2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{};{},{}", self.a, self.b, self.c, self.d)
    }
}

/// Parses `"a,b;c,d"` (signed integers, reduced mod `n`).
pub fn parse_matrix<T: Natural>(text: &str, n: T) -> Result<Mat2<T>> {
    let bad = || Error::InvalidArgument(format!("malformed matrix literal {:?}", text));
    let rows: Vec<&str> = text.trim().split(';').collect();
    if rows.len() != 2 {
        return Err(bad());
    }
    let mut vals = Vec::with_capacity(4);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(bad());
        }
        for c in cols {
            vals.push(c.trim().parse::<i128>().map_err(|_| bad())?);
        }
    }
    Mat2::new(n, vals[0], vals[1], vals[2], vals[3])
}

/// Parses a whitespace-separated list of matrix literals.
pub fn parse_generators<T: Natural>(text: &str, n: T) -> Result<Vec<Mat2<T>>> {
    text.split_whitespace().map(|t| parse_matrix(t, n)).collect()
}

/// The reduction map GL₂(ℤ/nℤ) → GL₂(ℤ/mℤ) for `m | n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionMap<T> {
    source: T,
    target: T,
}

impl<T: Natural> ReductionMap<T> {
    pub fn new(source: T, target: T) -> Result<Self> {
        if source.is_zero() {
            return Err(Error::InvalidModulus(source.to_string(), 1));
        }
        if target.is_zero() || !(source % target).is_zero() {
            return Err(Error::NotADivisor {
                m: target.to_string(),
                n: source.to_string(),
            });
        }
        Ok(ReductionMap { source, target })
    }

    pub fn source(&self) -> T {
        self.source
    }

    pub fn target(&self) -> T {
        self.target
    }

    /// # Panics
    ///
    /// Panics if the matrix is not over the source modulus.
    pub fn apply(&self, g: &Mat2<T>) -> Mat2<T> {
        assert_eq!(g.n, self.source, "matrix modulus differs from reduction source");
        g.reduce_unchecked(self.target)
    }

    /// `|ker| = |GL₂(ℤ/nℤ)| / |GL₂(ℤ/mℤ)|` (reduction is surjective).
    pub fn kernel_order(&self) -> BigUint {
        gl2_order(self.source).expect("nonzero") / gl2_order(self.target).expect("nonzero")
    }

    /// Elements congruent to the identity mod the target, i.e. `U(m)` at level `n`.
    pub fn kernel_elements(&self) -> impl Iterator<Item = Mat2<T>> + '_ {
        let id = Mat2::identity(self.target);
        lifts(id, self.source)
    }

    /// A generating set of the kernel: elementary matrices with off-diagonal
    /// entry `m`, and diagonal matrices built from generators of the units
    /// congruent to 1 mod `m`.
    pub fn kernel_generators(&self) -> Vec<Mat2<T>> {
        let (n, m) = (self.source, self.target);
        if n.is_one() {
            return vec![];
        }
        let mut gens = vec![
            Mat2::from_residues(n, T::one(), m % n, T::zero(), T::one()).expect("unipotent"),
            Mat2::from_residues(n, T::one(), T::zero(), m % n, T::one()).expect("unipotent"),
        ];
        for u in congruence_unit_generators(n, m) {
            gens.push(Mat2::diagonal(n, u, T::one()).expect("unit"));
            gens.push(Mat2::diagonal(n, T::one(), u).expect("unit"));
        }
        gens.retain(|g| !g.is_identity());
        gens.sort();
        gens.dedup();
        gens
    }
}

/// Greedy generators of `{u ∈ (ℤ/nℤ)ˣ : u ≡ 1 mod m}`.
fn congruence_unit_generators<T: Natural>(n: T, m: T) -> Vec<T> {
    let (n, m) = (n.as_u128(), m.as_u128());
    let mut reached: HashSet<u128> = HashSet::from([1 % n]);
    let mut gens = Vec::new();
    let mut u = 1u128;
    while u < n {
        if is_unit_mod(u, n) && !reached.contains(&u) {
            gens.push(T::from_u128_lossless(u));
            // Close the reached set under multiplication by u.
            let mut frontier: Vec<u128> = reached.iter().copied().collect();
            while let Some(x) = frontier.pop() {
                for g in &gens {
                    let y = x * g.as_u128() % n;
                    if reached.insert(y) {
                        frontier.push(y);
                    }
                }
            }
        }
        u += m;
    }
    gens
}

/// All lifts of `h` (mod `m`) to matrices mod `n` with unit determinant.
fn lifts<T: Natural>(h: Mat2<T>, n: T) -> impl Iterator<Item = Mat2<T>> {
    let m = h.n.as_u128();
    let nn = n.as_u128();
    let steps = nn / m;
    let base = h.entries().map(|x| x.as_u128());
    let total = steps.pow(4);
    (0..total).filter_map(move |idx| {
        let mut rest = idx;
        let mut e = [0u128; 4];
        for (k, slot) in e.iter_mut().enumerate() {
            *slot = base[k] + m * (rest % steps);
            rest /= steps;
        }
        let [a, b, c, d] = e.map(T::from_u128_lossless);
        let g = Mat2 { n, a, b, c, d };
        is_unit_mod(g.det().as_u128(), nn).then_some(g)
    })
}

/// `|GL₂(ℤ/nℤ)| = n⁴ ∏_{ℓ|n} (1 − ℓ⁻¹)(1 − ℓ⁻²)`.
pub fn gl2_order<T: Natural>(n: T) -> Result<BigUint> {
    if n.is_zero() {
        return Err(Error::InvalidModulus(n.to_string(), 1));
    }
    let f = factorize(n)?;
    let mut order = BigUint::one();
    for (p, e) in f.factors() {
        let p = p.to_biguint();
        // ℓ^(4(e−1)) · (ℓ² − 1)(ℓ² − ℓ)
        let local = p.pow(4 * (e - 1)) * (&p * &p - 1u32) * (&p * &p - &p);
        order *= local;
    }
    Ok(order)
}

/// All of GL₂(ℤ/nℤ), in canonical order.
pub fn enumerate_gl2<T: Natural>(n: T, cap: EnumerationCap) -> Result<Vec<Mat2<T>>> {
    let order = gl2_order(n)?;
    cap.check(&order)?;
    let all: Vec<Mat2<T>> = lifts(Mat2::identity(T::one()), n).collect();
    debug_assert_eq!(BigUint::from(all.len()), order);
    Ok(all)
}

/// Positive divisors of `n` in increasing order.
pub fn divisors<T: Natural>(n: T) -> Result<Vec<T>> {
    let f = factorize(n)?;
    let mut divs = vec![1u128];
    for (p, e) in f.factors() {
        let p = p.as_u128();
        let current = divs.clone();
        let mut pk = 1u128;
        for _ in 0..e {
            pk *= p;
            divs.extend(current.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    Ok(divs.into_iter().map(T::from_u128_lossless).collect())
}

/// A subgroup of GL₂(ℤ/nℤ) with its full element set.
#[derive(Clone, Debug)]
pub struct SubgroupModN<T> {
    n: T,
    generators: Vec<Mat2<T>>,
    elements: Vec<Mat2<T>>,
}

impl<T: Natural> PartialEq for SubgroupModN<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.elements == other.elements
    }
}

impl<T: Natural> Eq for SubgroupModN<T> {}

impl<T: Natural> SubgroupModN<T> {
    pub fn modulus(&self) -> T {
        self.n
    }

    pub fn generators(&self) -> &[Mat2<T>] {
        &self.generators
    }

    /// Elements in canonical order.
    pub fn elements(&self) -> &[Mat2<T>] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &Mat2<T>) -> bool {
        g.n == self.n && self.elements.binary_search(g).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &Self) -> bool {
        self.n == other.n && self.elements.iter().all(|g| other.contains(g))
    }

    /// Closure under multiplication, checked directly.
    pub fn is_closed(&self) -> bool {
        self.elements
            .iter()
            .all(|x| self.generators.iter().all(|g| self.contains(&x.mul(g))))
            && self.contains(&Mat2::identity(self.n))
    }

    fn from_elements(n: T, generators: Vec<Mat2<T>>, mut elements: Vec<Mat2<T>>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        SubgroupModN {
            n,
            generators,
            elements,
        }
    }
}

fn check_generators<T: Natural>(gens: &[Mat2<T>], n: T) -> Result<()> {
    if n.is_zero() {
        return Err(Error::InvalidModulus(n.to_string(), 1));
    }
    for g in gens {
        if g.n != n {
            return Err(Error::ModulusMismatch {
                expected: n.to_string(),
                found: g.n.to_string(),
            });
        }
        if !is_unit_mod(g.det().as_u128(), n.as_u128()) {
            return Err(Error::NotInvertible(format!("{} (mod {})", g, n)));
        }
    }
    Ok(())
}

/// The smallest subgroup containing `gens`, by breadth-first closure.
pub fn subgroup_closure<T: Natural>(
    gens: &[Mat2<T>],
    n: T,
    cap: EnumerationCap,
) -> Result<SubgroupModN<T>> {
    check_generators(gens, n)?;
    let id = Mat2::identity(n);
    let mut seen: HashSet<Mat2<T>> = HashSet::from([id]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.mul(g);
            if seen.insert(y) {
                if seen.len() as u64 > cap.0 {
                    return Err(Error::EnumerationTooLarge {
                        size: BigUint::from(seen.len()),
                        cap: cap.0,
                    });
                }
                queue.push_back(y);
            }
        }
    }
    let mut generators = gens.to_vec();
    generators.sort_unstable();
    generators.dedup();
    Ok(SubgroupModN::from_elements(
        n,
        generators,
        seen.into_iter().collect(),
    ))
}

/// The whole group GL₂(ℤ/nℤ).
pub fn full_group<T: Natural>(n: T, cap: EnumerationCap) -> Result<SubgroupModN<T>> {
    let elements = enumerate_gl2(n, cap)?;
    let generators = ReductionMap::new(n, T::one())?.kernel_generators();
    Ok(SubgroupModN::from_elements(n, generators, elements))
}

pub fn trivial_group<T: Natural>(n: T) -> Result<SubgroupModN<T>> {
    if n.is_zero() {
        return Err(Error::InvalidModulus(n.to_string(), 1));
    }
    Ok(SubgroupModN::from_elements(n, vec![], vec![Mat2::identity(n)]))
}

/// `B₁(n) = { [[1, b], [0, d]] : b ∈ ℤ/nℤ, d ∈ (ℤ/nℤ)ˣ }`.
pub fn b1_subgroup<T: Natural>(n: T, cap: EnumerationCap) -> Result<SubgroupModN<T>> {
    let two = T::one() + T::one();
    if n < two {
        return Err(Error::InvalidModulus(n.to_string(), 2));
    }
    let nn = n.as_u128();
    let units: Vec<u128> = (1..nn).filter(|&d| is_unit_mod(d, nn)).collect();
    cap.check(&(BigUint::from(nn) * units.len()))?;
    let mut elements = Vec::with_capacity(nn as usize * units.len());
    for b in 0..nn {
        for &d in &units {
            elements.push(Mat2 {
                n,
                a: T::one(),
                b: T::from_u128_lossless(b),
                c: T::zero(),
                d: T::from_u128_lossless(d),
            });
        }
    }
    let mut generators =
        vec![Mat2::from_residues(n, T::one(), T::one(), T::zero(), T::one()).expect("unipotent")];
    for u in congruence_unit_generators(n, T::one()) {
        generators.push(Mat2::diagonal(n, T::one(), u).expect("unit"));
    }
    generators.retain(|g| !g.is_identity());
    Ok(SubgroupModN::from_elements(n, generators, elements))
}

/// `[GL₂(ℤ/nℤ) : G]`.
pub fn subgroup_index<T: Natural>(g: &SubgroupModN<T>) -> BigUint {
    let total = gl2_order(g.n).expect("subgroup modulus is nonzero");
    let (q, r) = total.div_rem(&BigUint::from(g.order()));
    debug_assert!(r.is_zero(), "Lagrange violated");
    q
}

/// Image of `G` under reduction mod `m`.
pub fn reduce_subgroup<T: Natural>(g: &SubgroupModN<T>, m: T) -> Result<SubgroupModN<T>> {
    let map = ReductionMap::new(g.n, m)?;
    let elements: Vec<Mat2<T>> = g.elements.iter().map(|x| map.apply(x)).collect();
    let mut generators: Vec<Mat2<T>> = g
        .generators
        .iter()
        .map(|x| map.apply(x))
        .filter(|x| !x.is_identity())
        .collect();
    generators.sort_unstable();
    generators.dedup();
    Ok(SubgroupModN::from_elements(m, generators, elements))
}

/// `π⁻¹(H)` for the reduction GL₂(ℤ/nℤ) → GL₂(ℤ/mℤ), `m` the modulus of `H`.
pub fn full_preimage<T: Natural>(
    h: &SubgroupModN<T>,
    n: T,
    cap: EnumerationCap,
) -> Result<SubgroupModN<T>> {
    let map = ReductionMap::new(n, h.n)?;
    let size = map.kernel_order() * h.order();
    cap.check(&size)?;
    let elements: Vec<Mat2<T>> = h.elements.iter().flat_map(|&x| lifts(x, n)).collect();
    let mut generators: Vec<Mat2<T>> = h
        .generators
        .iter()
        .filter_map(|&x| lifts(x, n).next())
        .collect();
    generators.extend(map.kernel_generators());
    generators.retain(|g| !g.is_identity());
    generators.sort_unstable();
    generators.dedup();
    Ok(SubgroupModN::from_elements(n, generators, elements))
}

/// Whether `G = π⁻¹(π(G))` for reduction to `m`; equivalently, whether `G`
/// contains the kernel of reduction. Decided by the order count
/// `|G| = |π(G)| · |ker π|`.
pub fn is_full_preimage<T: Natural>(g: &SubgroupModN<T>, m: T) -> Result<bool> {
    let map = ReductionMap::new(g.n, m)?;
    let image = reduce_subgroup(g, m)?;
    Ok(BigUint::from(g.order()) == map.kernel_order() * image.order())
}

/// Whether `G` contains every element of the reduction kernel, by direct
/// membership tests.
pub fn contains_kernel<T: Natural>(g: &SubgroupModN<T>, m: T) -> Result<bool> {
    let map = ReductionMap::new(g.n, m)?;
    let result = map.kernel_elements().all(|k| g.contains(&k));
    Ok(result)
}

/// Least divisor `m` of the modulus with `G` a full preimage from level `m`.
pub fn level_within<T: Natural>(g: &SubgroupModN<T>) -> T {
    let divs = divisors(g.n).expect("subgroup modulus is nonzero and factorable");
    divs.into_iter()
        .find(|&m| is_full_preimage(g, m).unwrap_or(false))
        .unwrap_or(g.n)
}

/// Chinese-remainder lift of residues `r_i mod n_i` (pairwise coprime).
fn crt_lift(residues: &[(u128, u128)]) -> u128 {
    let total: u128 = residues.iter().map(|&(_, n)| n).product();
    let mut x: i128 = 0;
    for &(r, n) in residues {
        let rest = (total / n) as i128;
        let inv = rest.extended_gcd(&(n as i128)).x.rem_euclid(n as i128);
        x = (x + (r as i128) * rest % total as i128 * inv) % total as i128;
    }
    x.rem_euclid(total as i128) as u128
}

/// The product `∏ Gᵢ` inside GL₂(ℤ/(∏ nᵢ)ℤ) for pairwise coprime moduli.
pub fn direct_product<T: Natural>(
    parts: &[SubgroupModN<T>],
    cap: EnumerationCap,
) -> Result<SubgroupModN<T>> {
    let moduli: Vec<u128> = parts.iter().map(|p| p.n.as_u128()).collect();
    for (i, &a) in moduli.iter().enumerate() {
        for &b in &moduli[i + 1..] {
            if a.gcd(&b) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "moduli {} and {} are not coprime",
                    a, b
                )));
            }
        }
    }
    let total = moduli.iter().product::<u128>();
    let n = <T as num_traits::NumCast>::from(total)
        .ok_or_else(|| Error::InvalidArgument("product modulus overflows".into()))?;
    let mut gens = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        for g in &part.generators {
            let e = g.entries().map(|x| x.as_u128());
            let lifted: Vec<u128> = (0..4)
                .map(|k| {
                    let id = if k == 0 || k == 3 { 1 } else { 0 };
                    let residues: Vec<(u128, u128)> = moduli
                        .iter()
                        .enumerate()
                        .map(|(j, &nj)| (if j == i { e[k] } else { id % nj }, nj))
                        .collect();
                    crt_lift(&residues)
                })
                .collect();
            gens.push(Mat2::from_residues(
                n,
                T::from_u128_lossless(lifted[0]),
                T::from_u128_lossless(lifted[1]),
                T::from_u128_lossless(lifted[2]),
                T::from_u128_lossless(lifted[3]),
            )?);
        }
    }
    let size: BigUint = parts.iter().map(|p| BigUint::from(p.order())).product();
    cap.check(&size)?;
    subgroup_closure(&gens, n, cap)
}

/// Order of the subgroup of GL₂(ℤ/ℓᵏℤ) generated by `gens`, without
/// materializing it.
///
/// `|G mod ℓᵏ| = |G mod ℓ| · ∏ᵢ |Kᵢ|` where `Kᵢ` is the kernel of
/// `G mod ℓ^(i+1) → G mod ℓⁱ`. Each `Kᵢ` lies in `I + ℓⁱ·M₂`, which is
/// elementary abelian of rank 4 modulo `ℓ^(i+1)`, so it is the `𝔽_ℓ`-span
/// of its Schreier generators. Only `G mod ℓ^(k−1)` is ever enumerated.
pub fn prime_power_subgroup_order<T: Natural>(
    gens: &[Mat2<T>],
    prime: T,
    k: u32,
    cap: EnumerationCap,
) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::InvalidArgument("precision must be at least 1".into()));
    }
    let l = prime.as_u128();
    let top = T::from_u128_lossless(
        l.checked_pow(k)
            .ok_or_else(|| Error::InvalidArgument("prime power overflows".into()))?,
    );
    check_generators(gens, top)?;
    let reduce_to = |g: &Mat2<T>, i: u32| g.reduce_unchecked(T::from_u128_lossless(l.pow(i)));
    let base_gens: Vec<Mat2<T>> = gens.iter().map(|g| reduce_to(g, 1)).collect();
    let mut order = BigUint::from(subgroup_closure(&base_gens, prime, cap)?.order());
    for i in 1..k {
        let low = T::from_u128_lossless(l.pow(i));
        let high_gens: Vec<Mat2<T>> = gens.iter().map(|g| reduce_to(g, i + 1)).collect();
        let rank = congruence_layer_rank(&high_gens, low, l, cap)?;
        order *= BigUint::from(l).pow(rank);
    }
    Ok(order)
}

/// Rank over 𝔽_ℓ of `ker(G mod ℓ·low → G mod low)`, generators given mod `ℓ·low`.
fn congruence_layer_rank<T: Natural>(
    gens: &[Mat2<T>],
    low: T,
    l: u128,
    cap: EnumerationCap,
) -> Result<u32> {
    use std::collections::HashMap;
    let high = gens.first().map(|g| g.n).unwrap_or(low);
    let id = Mat2::identity(high);
    let mut lift: HashMap<Mat2<T>, Mat2<T>> = HashMap::from([(id.reduce_unchecked(low), id)]);
    let mut queue = VecDeque::from([id.reduce_unchecked(low)]);
    let mut basis = LayerBasis::new(l);
    while let Some(x) = queue.pop_front() {
        let lx = lift[&x];
        for s in gens {
            let ly = lx.mul(s);
            let y = ly.reduce_unchecked(low);
            match lift.get(&y) {
                Some(rep) => {
                    if basis.rank() < 4 {
                        let schreier = ly.mul(&rep.inverse());
                        basis.insert(schreier, low.as_u128());
                    }
                }
                None => {
                    if lift.len() as u64 >= cap.0 {
                        return Err(Error::EnumerationTooLarge {
                            size: BigUint::from(lift.len() + 1),
                            cap: cap.0,
                        });
                    }
                    lift.insert(y, ly);
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(basis.rank())
}

/// Row-reduced vectors in 𝔽_ℓ⁴.
struct LayerBasis {
    l: u128,
    rows: Vec<[u128; 4]>,
}

impl LayerBasis {
    fn new(l: u128) -> Self {
        LayerBasis { l, rows: Vec::new() }
    }

    fn rank(&self) -> u32 {
        self.rows.len() as u32
    }

    /// Inserts `(g − I)/low mod ℓ` for `g ≡ I (mod low)`.
    fn insert<T: Natural>(&mut self, g: Mat2<T>, low: u128) {
        let l = self.l;
        let id = [1u128, 0, 0, 1];
        let n = g.n.as_u128();
        let mut v = [0u128; 4];
        for (k, e) in g.entries().iter().enumerate() {
            let diff = (e.as_u128() + n - id[k] % n) % n;
            debug_assert_eq!(diff % low, 0);
            v[k] = diff / low % l;
        }
        for row in &self.rows {
            let pivot = row.iter().position(|&x| x != 0).expect("nonzero row");
            if v[pivot] != 0 {
                let factor = v[pivot];
                for k in 0..4 {
                    v[k] = (v[k] + l * l - factor * row[k] % l) % l;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|&x| x != 0) {
            let inv = (v[pivot] as i128).extended_gcd(&(l as i128)).x.rem_euclid(l as i128) as u128;
            for x in v.iter_mut() {
                *x = *x * inv % l;
            }
            // Keep earlier rows reduced at the new pivot.
            for row in self.rows.iter_mut() {
                let factor = row[pivot];
                if factor != 0 {
                    for k in 0..4 {
                        row[k] = (row[k] + l * l - factor * v[k] % l) % l;
                    }
                }
            }
            self.rows.push(v);
        }
    }
}

/// Order of an element.
pub fn element_order<T: Natural>(g: &Mat2<T>) -> u64 {
    let mut x = *g;
    let mut k = 1u64;
    while !x.is_identity() {
        x = x.mul(g);
        k += 1;
    }
    k
}
