//! ℤ_ℓ-lattices in ℚ_ℓ² and index comparisons for invariant lattices.
//!
//! Lattices are given by a rational basis matrix `B` whose columns span
//! the lattice. An element `g ∈ GL₂(ℚ_ℓ)` stabilizes `T = B·ℤ_ℓ²` exactly
//! when `B⁻¹gB ∈ GL₂(ℤ_ℓ)`. Once a basis is fixed, `Aut(T) ≅ GL₂(ℤ_ℓ)` and
//! a group of automorphisms is studied through its image mod `ℓᵏ`.
//!
//! Groups are open subgroups of GL₂(ℤ_ℓ) presented by finitely many
//! rational generators; openness is assumed, not certified. The index at
//! precision `k` is `|GL₂(ℤ/ℓᵏℤ)| / |image mod ℓᵏ|`, which equals the true
//! index once `ℓᵏ` is a multiple of the level.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::factorize;
use crate::error::{Error, Result};
use crate::modmatrix::{
    direct_product, gl2_order, prime_power_subgroup_order, subgroup_closure, EnumerationCap, Mat2,
    SubgroupModN,
};
use crate::scalar::LatticeInt;

/// A 2×2 matrix over ℚ, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatMat2<T: LatticeInt> {
    pub entries: [Ratio<T>; 4],
}

impl<T: LatticeInt> RatMat2<T> {
    pub fn new(a: Ratio<T>, b: Ratio<T>, c: Ratio<T>, d: Ratio<T>) -> Self {
        RatMat2 { entries: [a, b, c, d] }
    }

    pub fn from_integers(a: i64, b: i64, c: i64, d: i64) -> Self {
        let r = |x: i64| Ratio::from_integer(T::from_i64(x).expect("i64 fits the lattice scalar"));
        Self::new(r(a), r(b), r(c), r(d))
    }

    pub fn identity() -> Self {
        Self::from_integers(1, 0, 0, 1)
    }

    pub fn diagonal(x: i64, y: i64) -> Self {
        Self::from_integers(x, 0, 0, y)
    }

    pub fn det(&self) -> Ratio<T> {
        let [a, b, c, d] = &self.entries;
        a.clone() * d.clone() - b.clone() * c.clone()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &rhs.entries;
        Self::new(
            a.clone() * e.clone() + b.clone() * g.clone(),
            a.clone() * f.clone() + b.clone() * h.clone(),
            c.clone() * e.clone() + d.clone() * g.clone(),
            c.clone() * f.clone() + d.clone() * h.clone(),
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        let [a, b, c, d] = &self.entries;
        Some(Self::new(
            d.clone() / det.clone(),
            -b.clone() / det.clone(),
            -c.clone() / det.clone(),
            a.clone() / det,
        ))
    }

    /// `B⁻¹ · self · B`.
    pub fn conjugate_by(&self, basis: &Self) -> Option<Self> {
        basis.inverse().map(|inv| inv.mul(self).mul(basis))
    }
}

impl<T: LatticeInt> fmt::Display for RatMat2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "{},{};{},{}", a, b, c, d)
    }
}

/// Parses `"a,b;c,d"` where each entry is an integer or `p/q`.
pub fn parse_rat_matrix<T: LatticeInt>(text: &str) -> Result<RatMat2<T>> {
    let bad = |why: &str| Error::InvalidArgument(format!("matrix {:?}: {}", text, why));
    let rows: Vec<&str> = text.trim().split(';').collect();
    if rows.len() != 2 {
        return Err(bad("expected two rows separated by ';'"));
    }
    let mut vals = Vec::with_capacity(4);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(bad("expected two entries per row"));
        }
        for c in cols {
            let v = c
                .trim()
                .parse::<Ratio<T>>()
                .map_err(|_| bad("entry is not an exact rational"))?;
            vals.push(v);
        }
    }
    let mut it = vals.into_iter();
    Ok(RatMat2::new(
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    ))
}

fn int_valuation<T: LatticeInt>(x: &T, prime: &T) -> i64 {
    let mut x = x.clone();
    let mut v = 0;
    while !x.is_zero() && x.is_multiple_of(prime) {
        x = x / prime.clone();
        v += 1;
    }
    v
}

/// ℓ-adic valuation; `None` for zero.
pub fn valuation<T: LatticeInt>(x: &Ratio<T>, prime: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let p = T::from_u64(prime).expect("prime fits the lattice scalar");
    Some(int_valuation(x.numer(), &p) - int_valuation(x.denom(), &p))
}

fn is_power_of(x: &BigInt, prime: u64) -> bool {
    let p = BigInt::from(prime);
    let mut x = x.abs();
    while !x.is_zero() && x.is_multiple_of(&p) {
        x /= &p;
    }
    x.is_one()
}

fn check_prime(prime: u64) -> Result<()> {
    let ok = prime >= 2
        && factorize(prime)
            .map(|f| f.factors().count() == 1 && f.factors().all(|(_, e)| e == 1))
            .unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{} is not a prime", prime)))
    }
}

/// A ℤ_ℓ-lattice `B·ℤ_ℓ²` in ℚ_ℓ².
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis<T: LatticeInt> {
    prime: u64,
    basis: RatMat2<T>,
    window: (i64, i64),
}

impl<T: LatticeInt> LatticeBasis<T> {
    /// The basis must be invertible with ℓ-power denominators.
    pub fn new(prime: u64, basis: RatMat2<T>) -> Result<Self> {
        check_prime(prime)?;
        if basis.det().is_zero() {
            return Err(Error::Singular(format!("lattice basis {}", basis)));
        }
        for e in &basis.entries {
            if !is_power_of(&e.denom().to_bigint(), prime) {
                return Err(Error::InvalidArgument(format!(
                    "entry {} of {} has a denominator prime to {}",
                    e, basis, prime
                )));
            }
        }
        let vals: Vec<i64> = basis
            .entries
            .iter()
            .filter_map(|e| valuation(e, prime))
            .collect();
        let window = (
            vals.iter().copied().min().unwrap_or(0),
            vals.iter().copied().max().unwrap_or(0),
        );
        Ok(LatticeBasis {
            prime,
            basis,
            window,
        })
    }

    pub fn standard(prime: u64) -> Result<Self> {
        Self::new(prime, RatMat2::identity())
    }

    /// The lattice `σ·T`.
    pub fn transformed(&self, sigma: &RatMat2<T>) -> Result<Self> {
        Self::new(self.prime, sigma.mul(&self.basis))
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn basis(&self) -> &RatMat2<T> {
        &self.basis
    }

    /// Minimum and maximum valuation of the nonzero basis entries.
    pub fn valuation_window(&self) -> (i64, i64) {
        self.window
    }
}

/// A subgroup of GL₂(ℤ_ℓ) presented by rational generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdicGroup<T: LatticeInt> {
    prime: u64,
    generators: Vec<RatMat2<T>>,
    note: String,
}

fn is_adic_unit_matrix<T: LatticeInt>(g: &RatMat2<T>, prime: u64) -> bool {
    g.entries
        .iter()
        .all(|e| valuation(e, prime).is_none_or(|v| v >= 0))
        && valuation(&g.det(), prime) == Some(0)
}

impl<T: LatticeInt> AdicGroup<T> {
    /// Every generator must lie in GL₂(ℤ_ℓ).
    pub fn new(prime: u64, generators: Vec<RatMat2<T>>, note: impl Into<String>) -> Result<Self> {
        check_prime(prime)?;
        for (index, g) in generators.iter().enumerate() {
            if !is_adic_unit_matrix(g, prime) {
                return Err(Error::NotInvertible(format!(
                    "generator #{} ({}) over Z_{}",
                    index, g, prime
                )));
            }
        }
        Ok(AdicGroup {
            prime,
            generators,
            note: note.into(),
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn generators(&self) -> &[RatMat2<T>] {
        &self.generators
    }

    pub fn note(&self) -> &str {
        &self.note
    }
}

/// Whether `g` maps `T` onto itself: `B⁻¹gB` is ℓ-integral with unit
/// determinant. Decided in exact rational arithmetic.
pub fn stabilizes<T: LatticeInt>(g: &RatMat2<T>, lattice: &LatticeBasis<T>) -> Result<bool> {
    if g.det().is_zero() {
        return Err(Error::Singular(format!("matrix {}", g)));
    }
    let conj = g
        .conjugate_by(&lattice.basis)
        .ok_or_else(|| Error::Singular(format!("lattice basis {}", lattice.basis)))?;
    Ok(is_adic_unit_matrix(&conj, lattice.prime))
}

/// `x mod ℓᵏ` for an ℓ-integral rational.
fn reduce_rational<T: LatticeInt>(x: &Ratio<T>, modulus: u64) -> u64 {
    let m = BigInt::from(modulus);
    let num = x.numer().to_bigint().mod_floor(&m);
    let den = x.denom().to_bigint().mod_floor(&m);
    let inv = den.extended_gcd(&m).x.mod_floor(&m);
    (num * inv).mod_floor(&m).to_u64().expect("residue below modulus")
}

fn check_precision(prime: u64, k: u32) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("precision must be at least 1".into()));
    }
    prime
        .checked_pow(k)
        .ok_or_else(|| Error::InvalidArgument(format!("{}^{} overflows", prime, k)))
}

fn check_same_prime<T: LatticeInt>(group: &AdicGroup<T>, lattice: &LatticeBasis<T>) -> Result<()> {
    if group.prime != lattice.prime {
        return Err(Error::ModulusMismatch {
            expected: group.prime.to_string(),
            found: lattice.prime.to_string(),
        });
    }
    Ok(())
}

/// Generators of the group in `Aut(T)` coordinates, reduced mod `ℓᵏ`.
pub fn generators_in_aut<T: LatticeInt>(
    group: &AdicGroup<T>,
    lattice: &LatticeBasis<T>,
    k: u32,
) -> Result<Vec<Mat2<u64>>> {
    check_same_prime(group, lattice)?;
    let modulus = check_precision(group.prime, k)?;
    let mut out = Vec::with_capacity(group.generators.len());
    for (index, g) in group.generators.iter().enumerate() {
        if !stabilizes(g, lattice)? {
            return Err(Error::NotInvariant {
                index,
                generator: g.to_string(),
            });
        }
        let conj = g.conjugate_by(&lattice.basis).expect("basis is invertible");
        let [a, b, c, d] = conj.entries.each_ref().map(|e| reduce_rational(e, modulus));
        out.push(Mat2::from_residues(modulus, a, b, c, d)?);
    }
    Ok(out)
}

/// The image of the group in GL₂(ℤ/ℓᵏℤ) after identifying `Aut(T)` with
/// GL₂(ℤ_ℓ) through the basis of `T`. Enumerates the image.
pub fn image_in_aut<T: LatticeInt>(
    group: &AdicGroup<T>,
    lattice: &LatticeBasis<T>,
    k: u32,
    cap: EnumerationCap,
) -> Result<SubgroupModN<u64>> {
    let gens = generators_in_aut(group, lattice, k)?;
    let modulus = check_precision(group.prime, k)?;
    subgroup_closure(&gens, modulus, cap)
}

/// `[Aut(T) : G]` at precision `k`. Uses the congruence filtration, so only
/// the image mod `ℓ^(k−1)` is enumerated.
pub fn lattice_index<T: LatticeInt>(
    group: &AdicGroup<T>,
    lattice: &LatticeBasis<T>,
    k: u32,
    cap: EnumerationCap,
) -> Result<BigUint> {
    let gens = generators_in_aut(group, lattice, k)?;
    let modulus = check_precision(group.prime, k)?;
    let order = prime_power_subgroup_order(&gens, group.prime, k, cap)?;
    Ok(gl2_order(modulus)? / order)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexReport {
    pub index_t: BigUint,
    pub index_t_prime: BigUint,
    pub precision: u32,
    pub equal: bool,
}

/// Both indices `[Aut(T):G]` and `[Aut(T′):G]` at precision `k`.
pub fn verify_index_equality<T: LatticeInt>(
    group: &AdicGroup<T>,
    lattice: &LatticeBasis<T>,
    lattice_prime: &LatticeBasis<T>,
    k: u32,
    cap: EnumerationCap,
) -> Result<IndexReport> {
    let index_t = lattice_index(group, lattice, k, cap)?;
    let index_t_prime = lattice_index(group, lattice_prime, k, cap)?;
    let equal = index_t == index_t_prime;
    Ok(IndexReport {
        index_t,
        index_t_prime,
        precision: k,
        equal,
    })
}

/// One group with two invariant lattices, checked over a precision range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario<T: LatticeInt> {
    pub id: String,
    pub group: AdicGroup<T>,
    pub lattice: LatticeBasis<T>,
    pub lattice_prime: LatticeBasis<T>,
    pub precisions: RangeInclusive<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub id: String,
    pub prime: u64,
    pub reports: Vec<IndexReport>,
    /// Both indices agree at the two highest precisions of the range.
    pub stable: bool,
}

impl ScenarioOutcome {
    pub fn all_equal(&self) -> bool {
        self.reports.iter().all(|r| r.equal)
    }

    pub fn passed(&self) -> bool {
        self.all_equal() && self.stable
    }
}

pub fn run_scenario<T: LatticeInt>(
    scenario: &Scenario<T>,
    cap: EnumerationCap,
) -> Result<ScenarioOutcome> {
    let reports = scenario
        .precisions
        .clone()
        .map(|k| {
            verify_index_equality(
                &scenario.group,
                &scenario.lattice,
                &scenario.lattice_prime,
                k,
                cap,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let stable = match reports.as_slice() {
        [.., prev, last] => {
            prev.index_t == last.index_t && prev.index_t_prime == last.index_t_prime
        }
        _ => false,
    };
    Ok(ScenarioOutcome {
        id: scenario.id.clone(),
        prime: scenario.group.prime,
        reports,
        stable,
    })
}

/// Runs scenarios on worker threads; outcomes come back sorted by id.
pub fn run_scenarios<T: LatticeInt + Send + Sync>(
    scenarios: &[Scenario<T>],
    cap: EnumerationCap,
) -> Vec<(String, Result<ScenarioOutcome>)> {
    let mut results: Vec<(String, Result<ScenarioOutcome>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || (s.id.clone(), run_scenario(s, cap))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    });
    results.sort_by(|a, b| a.0.cmp(&b.0));
    results
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeReport {
    pub modulus: u64,
    pub per_prime: Vec<BigUint>,
    pub product_of_indices: BigUint,
    pub combined_index: BigUint,
}

impl CompositeReport {
    pub fn consistent(&self) -> bool {
        self.product_of_indices == self.combined_index
    }
}

/// For `n = ∏ ℓᵢ`, compares the index of the product group in
/// GL₂(ℤ/∏ℓᵢᵏℤ) with the product of the per-prime indices.
pub fn composite_index<T: LatticeInt>(
    parts: &[(AdicGroup<T>, LatticeBasis<T>)],
    k: u32,
    cap: EnumerationCap,
) -> Result<CompositeReport> {
    let mut images = Vec::with_capacity(parts.len());
    let mut per_prime = Vec::with_capacity(parts.len());
    for (group, lattice) in parts {
        images.push(image_in_aut(group, lattice, k, cap)?);
        per_prime.push(lattice_index(group, lattice, k, cap)?);
    }
    let product = direct_product(&images, cap)?;
    let modulus = product.modulus();
    let combined_index = gl2_order(modulus)? / BigUint::from(product.order());
    Ok(CompositeReport {
        modulus,
        product_of_indices: per_prime.iter().product(),
        per_prime,
        combined_index,
    })
}

/// Parses the scenario-file format:
///
/// ```text
/// # comment
/// scenario <id>
/// prime <ℓ>
/// precision <k>            # or <k1>..<k2>
/// note <free text>         # optional
/// generator <a,b;c,d>      # one or more; entries are integers or p/q
/// lattice <a,b;c,d>        # basis of T, columns are basis vectors
/// lattice' <a,b;c,d>       # basis of T′
/// end
/// ```
pub fn parse_scenarios<T: LatticeInt>(text: &str) -> Result<Vec<Scenario<T>>> {
    #[derive(Default)]
    struct Draft<T: LatticeInt> {
        id: String,
        start: usize,
        prime: Option<u64>,
        precisions: Option<RangeInclusive<u32>>,
        note: String,
        generators: Vec<RatMat2<T>>,
        lattice: Option<RatMat2<T>>,
        lattice_prime: Option<RatMat2<T>>,
    }

    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut out: Vec<Scenario<T>> = Vec::new();
    let mut draft: Option<Draft<T>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = match content.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (content, ""),
        };
        let wrap = |e: Error| err(line, e.to_string());
        match (key, draft.as_mut()) {
            ("scenario", None) => {
                if rest.is_empty() {
                    return Err(err(line, "scenario needs an id".into()));
                }
                if out.iter().any(|s| s.id == rest) {
                    return Err(err(line, format!("duplicate scenario id {:?}", rest)));
                }
                draft = Some(Draft {
                    id: rest.to_string(),
                    start: line,
                    prime: None,
                    precisions: None,
                    note: String::new(),
                    generators: Vec::new(),
                    lattice: None,
                    lattice_prime: None,
                });
            }
            ("scenario", Some(_)) => {
                return Err(err(line, "nested scenario; missing 'end'".into()));
            }
            (_, None) => {
                return Err(err(line, format!("'{}' outside of a scenario block", key)));
            }
            ("prime", Some(d)) => {
                let prime = rest
                    .parse()
                    .map_err(|_| err(line, format!("bad prime {:?}", rest)))?;
                check_prime(prime).map_err(wrap)?;
                d.prime = Some(prime);
            }
            ("precision", Some(d)) => {
                let parse = |s: &str| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| err(line, format!("bad precision {:?}", rest)))
                };
                let range = match rest.split_once("..") {
                    Some((lo, hi)) => parse(lo)?..=parse(hi)?,
                    None => {
                        let k = parse(rest)?;
                        k..=k
                    }
                };
                if *range.start() == 0 || range.is_empty() {
                    return Err(err(line, format!("empty or zero precision range {:?}", rest)));
                }
                d.precisions = Some(range);
            }
            ("note", Some(d)) => d.note = rest.to_string(),
            ("generator", Some(d)) => d.generators.push(parse_rat_matrix(rest).map_err(wrap)?),
            ("lattice", Some(d)) => d.lattice = Some(parse_rat_matrix(rest).map_err(wrap)?),
            ("lattice'", Some(d)) => {
                d.lattice_prime = Some(parse_rat_matrix(rest).map_err(wrap)?)
            }
            ("end", Some(_)) => {
                let d = draft.take().expect("inside a block");
                let missing = |what: &str| err(d.start, format!("scenario {} lacks {}", d.id, what));
                let prime = d.prime.ok_or_else(|| missing("a prime"))?;
                let precisions = d.precisions.clone().ok_or_else(|| missing("a precision"))?;
                if d.generators.is_empty() {
                    return Err(missing("generators"));
                }
                let lattice = d.lattice.clone().ok_or_else(|| missing("lattice"))?;
                let lattice_prime = d.lattice_prime.clone().ok_or_else(|| missing("lattice'"))?;
                let at_start = |e: Error| err(d.start, e.to_string());
                out.push(Scenario {
                    id: d.id.clone(),
                    group: AdicGroup::new(prime, d.generators.clone(), d.note.clone())
                        .map_err(at_start)?,
                    lattice: LatticeBasis::new(prime, lattice).map_err(at_start)?,
                    lattice_prime: LatticeBasis::new(prime, lattice_prime).map_err(at_start)?,
                    precisions,
                });
            }
            (other, Some(_)) => {
                return Err(err(line, format!("unknown key {:?}", other)));
            }
        }
    }
    if let Some(d) = draft {
        return Err(err(d.start, format!("scenario {} is not closed by 'end'", d.id)));
    }
    Ok(out)
}

const BUNDLED: &str = include_str!("../data/lattice_scenarios.txt");

/// The bundled family: ℓ ∈ {2, 3, 5}; Borel, split-Cartan and unipotent
/// type groups; `T′ = σT` for σ ∈ {diag(1,ℓ), diag(ℓ,ℓ), diag(1,ℓ²)}.
pub fn bundled_scenarios() -> Vec<Scenario<BigInt>> {
    parse_scenarios(BUNDLED).expect("bundled scenario file parses")
}

pub fn bundled_scenario_text() -> &'static str {
    BUNDLED
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = RatMat2<BigInt>;

    const CAP: EnumerationCap = EnumerationCap::DEFAULT;

    fn borel(prime: u64) -> AdicGroup<BigInt> {
        let unit = if prime == 2 { 5 } else { 2 };
        let mut gens = vec![
            M::from_integers(1, 1, 0, 1),
            M::from_integers(1, 0, prime as i64, 1),
            M::diagonal(unit, 1),
            M::diagonal(1, unit),
        ];
        if prime == 2 {
            gens.push(M::diagonal(-1, 1));
            gens.push(M::diagonal(1, -1));
        }
        AdicGroup::new(prime, gens, "Borel mod ℓ").unwrap()
    }

    #[test]
    fn stabilizer_examples() {
        let std2 = LatticeBasis::<BigInt>::standard(2).unwrap();
        assert!(stabilizes(&M::identity(), &std2).unwrap());
        assert!(stabilizes(&M::from_integers(1, 0, 2, 1), &std2).unwrap());
        let t = LatticeBasis::new(2, M::diagonal(1, 2)).unwrap();
        // B⁻¹gB = [[1,2],[0,1]]
        assert!(stabilizes(&M::from_integers(1, 1, 0, 1), &t).unwrap());
        // B⁻¹gB = [[1,0],[1/2,1]]
        assert!(!stabilizes(&M::from_integers(1, 0, 1, 1), &t).unwrap());
        assert!(matches!(
            stabilizes(&M::from_integers(1, 2, 2, 4), &t),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn lattice_validation() {
        assert!(LatticeBasis::<BigInt>::new(4, M::identity()).is_err());
        assert!(matches!(
            LatticeBasis::<BigInt>::new(3, M::from_integers(1, 1, 1, 1)),
            Err(Error::Singular(_))
        ));
        let third: M = parse_rat_matrix("1/3,0;0,1").unwrap();
        assert!(LatticeBasis::new(2, third.clone()).is_err());
        let t = LatticeBasis::new(3, third).unwrap();
        assert_eq!(t.valuation_window(), (-1, 0));
    }

    #[test]
    fn image_examples() {
        let trivial = AdicGroup::new(3, vec![M::identity()], "trivial").unwrap();
        let std3 = LatticeBasis::standard(3).unwrap();
        assert_eq!(image_in_aut(&trivial, &std3, 2, CAP).unwrap().order(), 1);

        let g = borel(2);
        let std2 = LatticeBasis::standard(2).unwrap();
        let img = image_in_aut(&g, &std2, 1, CAP).unwrap();
        assert_eq!(img.order(), 2);
        assert!(img.elements().iter().all(|m| m.entries()[2] == 0));
        let t2 = LatticeBasis::new(2, M::diagonal(1, 2)).unwrap();
        let img2 = image_in_aut(&g, &t2, 1, CAP).unwrap();
        assert_eq!(img2.order(), 2);
        assert!(img2.elements().iter().all(|m| m.entries()[1] == 0));
    }

    #[test]
    fn index_examples() {
        let std2 = LatticeBasis::standard(2).unwrap();
        assert_eq!(lattice_index(&borel(2), &std2, 1, CAP).unwrap(), BigUint::from(3u32));
        let std3 = LatticeBasis::standard(3).unwrap();
        assert_eq!(lattice_index(&borel(3), &std3, 1, CAP).unwrap(), BigUint::from(4u32));
        let full = AdicGroup::new(
            3,
            vec![M::from_integers(1, 1, 0, 1), M::from_integers(1, 0, 1, 1), M::diagonal(2, 1)],
            "GL2",
        )
        .unwrap();
        for k in 1..=3 {
            assert_eq!(lattice_index(&full, &std3, k, CAP).unwrap(), BigUint::one());
        }
    }

    #[test]
    fn index_equality_examples() {
        let g = borel(2);
        let std2 = LatticeBasis::standard(2).unwrap();
        let t2 = LatticeBasis::new(2, M::diagonal(1, 2)).unwrap();
        let same = verify_index_equality(&g, &std2, &std2, 2, CAP).unwrap();
        assert!(same.equal);
        for k in 1..=3 {
            let r = verify_index_equality(&g, &std2, &t2, k, CAP).unwrap();
            assert_eq!(r.index_t, BigUint::from(3u32));
            assert_eq!(r.index_t_prime, BigUint::from(3u32));
            assert!(r.equal);
        }
        let t4 = LatticeBasis::new(2, M::diagonal(1, 4)).unwrap();
        assert!(matches!(
            verify_index_equality(&g, &std2, &t4, 1, CAP),
            Err(Error::NotInvariant { index: 1, .. })
        ));
    }

    #[test]
    fn layered_index_matches_enumeration() {
        let t = LatticeBasis::new(3, M::diagonal(1, 3)).unwrap();
        for k in 1..=3 {
            let img = image_in_aut(&borel(3), &t, k, CAP).unwrap();
            let expected = gl2_order(3u64.pow(k)).unwrap() / BigUint::from(img.order());
            assert_eq!(lattice_index(&borel(3), &t, k, CAP).unwrap(), expected);
        }
    }

    #[test]
    fn generators_must_be_adic_units() {
        assert!(AdicGroup::<BigInt>::new(2, vec![M::diagonal(2, 1)], "").is_err());
        assert!(AdicGroup::new(2, vec![parse_rat_matrix::<BigInt>("1,1/2;0,1").unwrap()], "").is_err());
        assert!(AdicGroup::new(2, vec![parse_rat_matrix::<BigInt>("1,1/3;0,1").unwrap()], "").is_ok());
    }

    #[test]
    fn rational_reduction() {
        let third = Ratio::new(BigInt::from(1), BigInt::from(3));
        // 3 · 3 ≡ 1 mod 8
        assert_eq!(reduce_rational(&third, 8), 3);
        let neg = Ratio::from_integer(BigInt::from(-1));
        assert_eq!(reduce_rational(&neg, 27), 26);
    }

    #[test]
    fn scenario_parse_errors() {
        let missing_end = "scenario a\nprime 2\n";
        assert!(matches!(
            parse_scenarios::<BigInt>(missing_end),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad_key = "scenario a\nprime 2\nfoo 1\nend\n";
        assert!(matches!(
            parse_scenarios::<BigInt>(bad_key),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_entry = "scenario a\nprime 2\nprecision 1\ngenerator 1,x;0,1\nend\n";
        assert!(matches!(
            parse_scenarios::<BigInt>(bad_entry),
            Err(Error::Parse { line: 4, .. })
        ));
        let no_lattice = "scenario a\nprime 2\nprecision 1\ngenerator 1,1;0,1\nend\n";
        assert!(parse_scenarios::<BigInt>(no_lattice).is_err());
    }

    #[test]
    fn bundled_family_shape() {
        let all = bundled_scenarios();
        assert_eq!(all.len(), 27);
        for p in [2u64, 3, 5] {
            assert_eq!(all.iter().filter(|s| s.group.prime() == p).count(), 9);
        }
        for s in &all {
            // Level-ℓ³ groups need k = 4 to show stability.
            let top = if s.id.contains("-13-") { 4 } else { 3 };
            assert_eq!(s.precisions, 1..=top, "{}", s.id);
        }
    }

    #[test]
    fn i128_backend_agrees() {
        let text = bundled_scenario_text();
        let small: Vec<Scenario<i128>> = parse_scenarios(text).unwrap();
        let big = bundled_scenarios();
        for (s, b) in small.iter().zip(&big).filter(|(s, _)| s.group.prime() <= 3).take(6) {
            let k = 2;
            let rs = verify_index_equality(&s.group, &s.lattice, &s.lattice_prime, k, CAP).unwrap();
            let rb = verify_index_equality(&b.group, &b.lattice, &b.lattice_prime, k, CAP).unwrap();
            assert_eq!(rs, rb);
        }
    }
}
