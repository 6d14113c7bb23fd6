//! Curve-record ingestion, report rendering and the verification suite.
//!
//! The `torsion` binary is a thin wrapper around this module: every
//! subcommand builds one of the report types below and renders it as plain
//! text or JSON. Reports contain no timestamps or hash-ordered data, so
//! identical invocations print identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{b_epsilon, dedekind_psi, euler_phi, factorize, FactorSieve};
use crate::bounds::{
    baselines, exponent_candidates, theorem_bounds, BoundContext, DEFAULT_CEILING_BUDGET,
};
use crate::error::{Error, Result};
use crate::lattice::{
    bundled_scenarios, composite_index, lattice_index, run_scenarios, LatticeBasis, RatMat2,
    Scenario, ScenarioOutcome,
};
use crate::modmatrix::{
    b1_subgroup, contains_kernel, direct_product, divisors, enumerate_gl2, full_group,
    full_preimage, gl2_order, is_full_preimage, reduce_subgroup, subgroup_closure,
    subgroup_index, trivial_group, EnumerationCap, Mat2, SubgroupModN,
};

/// Environment variable overriding [`EnumerationCap::DEFAULT`].
pub const ENUM_CAP_ENV: &str = "TORSION_ENUM_CAP";

/// The enumeration cap, honouring [`ENUM_CAP_ENV`] when set.
pub fn enumeration_cap() -> Result<EnumerationCap> {
    match std::env::var(ENUM_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c > 0)
            .map(EnumerationCap)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("{} must be a positive integer, got {:?}", ENUM_CAP_ENV, v))
            }),
        Err(_) => Ok(EnumerationCap::DEFAULT),
    }
}

/// Parses an exact rational such as `3`, `1/2` or `-7/4`. Decimal points
/// are rejected so every numeric input is reproducible.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("not an exact rational: {:?}", text));
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

/// A report that can be printed as text or serialized as JSON.
pub trait Report: Serialize {
    fn text(&self) -> String;

    /// Whether the report records a failed check (exit status 2).
    fn failed(&self) -> bool {
        false
    }
}

pub fn render<R: Report>(report: &R, format: Format) -> String {
    match format {
        Format::Text => report.text(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

// ---------------------------------------------------------------------------
// Curve records
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurveRecord {
    pub label: String,
    pub base_degree: u64,
    pub adelic_index: u64,
    pub isogeny_class: Option<String>,
}

const HEADER: [&str; 4] = ["label", "base_degree", "adelic_index", "isogeny_class"];

/// Reads `label,base_degree,adelic_index[,isogeny_class]` CSV. Fields are
/// trimmed; an empty `isogeny_class` means none.
pub fn parse_curve_records<R: Read>(input: R) -> Result<Vec<CurveRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names.len() > 4 || names[..] != HEADER[..names.len()] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `label,base_degree,adelic_index[,isogeny_class]`, got `{}`",
                names.join(",")
            ),
        });
    }
    let with_class = names.len() == 4;

    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| Error::Parse { line, message };
        if row.len() != names.len() {
            return Err(fail(format!("expected {} fields, found {}", names.len(), row.len())));
        }
        let label = row[0].to_string();
        if label.is_empty() {
            return Err(fail("empty label".into()));
        }
        let positive = |field: &str, name: &str| -> Result<u64> {
            field
                .parse::<u64>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| fail(format!("{} must be a positive integer, got {:?}", name, field)))
        };
        let base_degree = positive(&row[1], "base_degree")?;
        let adelic_index = positive(&row[2], "adelic_index")?;
        let isogeny_class = if with_class && !row[3].is_empty() {
            Some(row[3].to_string())
        } else {
            None
        };
        if seen.insert(label.clone(), line).is_some() {
            return Err(Error::DuplicateLabel { line, label });
        }
        records.push(CurveRecord {
            label,
            base_degree,
            adelic_index,
            isogeny_class,
        });
    }
    Ok(records)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes records in the format read by [`parse_curve_records`]. The
/// `isogeny_class` column is emitted only if some record has a class.
pub fn write_curve_records<W: Write>(records: &[CurveRecord], out: W) -> Result<()> {
    let with_class = records.iter().any(|r| r.isogeny_class.is_some());
    let mut writer = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let width = if with_class { 4 } else { 3 };
    writer.write_record(&HEADER[..width]).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.label.clone(),
            r.base_degree.to_string(),
            r.adelic_index.to_string(),
        ];
        if with_class {
            row.push(r.isogeny_class.clone().unwrap_or_default());
        }
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Suite reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub parameters: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn push(
        &mut self,
        name: &str,
        parameters: impl Into<String>,
        status: Status,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.to_string(),
            parameters: parameters.into(),
            status,
            detail: detail.into(),
        });
    }

    /// Records a pass when `ok`, a failure otherwise.
    pub fn record(&mut self, name: &str, parameters: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.push(name, parameters, status, detail);
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for c in &self.checks {
            match c.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::Skip => s.skipped += 1,
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.summary().failed == 0
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
    }
}

impl Serialize for SuiteReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("SuiteReport", 3)?;
        s.serialize_field("passed", &self.passed())?;
        s.serialize_field("summary", &self.summary())?;
        s.serialize_field("checks", &self.checks)?;
        s.end()
    }
}

impl Report for SuiteReport {
    fn text(&self) -> String {
        let name_w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let param_w = self.checks.iter().map(|c| c.parameters.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let line = format!(
                "{}  {:name_w$}  {:param_w$}  {}",
                c.status.label(),
                c.name,
                c.parameters,
                c.detail,
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let s = self.summary();
        let _ = writeln!(
            out,
            "summary: {} passed, {} failed, {} skipped",
            s.passed, s.failed, s.skipped
        );
        out
    }

    fn failed(&self) -> bool {
        !self.passed()
    }
}

/// Records sharing an isogeny class must share an adelic index: isogenous
/// non-CM curves over the same field have equal adelic index.
pub fn check_isogeny_class_indices(records: &[CurveRecord]) -> SuiteReport {
    let mut classes: BTreeMap<&str, Vec<&CurveRecord>> = BTreeMap::new();
    for r in records {
        if let Some(c) = &r.isogeny_class {
            classes.entry(c.as_str()).or_default().push(r);
        }
    }
    let mut report = SuiteReport::default();
    for (class, members) in classes {
        let params = format!("class={} members={}", class, members.len());
        let first = members[0].adelic_index;
        if members.iter().all(|r| r.adelic_index == first) {
            report.push("isogeny-class-index", params, Status::Pass, format!("index {}", first));
        } else {
            let listing: Vec<String> = members
                .iter()
                .map(|r| format!("{}:{}", r.label, r.adelic_index))
                .collect();
            report.push(
                "isogeny-class-index",
                params,
                Status::Fail,
                format!("indices differ: {}", listing.join(", ")),
            );
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

/// Largest modulus for which the full-preimage family is generated.
pub const FAMILY_MAX_N: u32 = 24;
/// Minimum family size demanded once the family reaches [`FAMILY_MAX_N`].
pub const FAMILY_MIN_SIZE: usize = 50;
/// Range of the arithmetic-function checks.
pub const ARITH_LIMIT: u64 = 10_000;
/// Range of the multiplicativity check, per factor.
pub const MULTIPLICATIVE_LIMIT: u64 = 1_000;
/// Range of the `φ(n) ≥ b_ε·n^(1−ε)` scan.
pub const B_EPSILON_LIMIT: u64 = 1_000_000;

/// The ε grid used throughout for `b_ε`.
pub fn epsilon_grid() -> Vec<BigRational> {
    [(1, 10), (1, 4), (1, 2), (3, 4), (9, 10)]
        .iter()
        .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
        .collect()
}

/// Re-checks every finite-level invariant up to `max_n`, plus the bundled
/// lattice scenarios and the arithmetic constants.
pub fn run_verification_suite(max_n: u32, cap: EnumerationCap) -> Result<SuiteReport> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("max-n must be at least 1".into()));
    }
    for n in 1..=max_n {
        let size = gl2_order(n)?;
        if size > BigUint::from(cap.0) {
            return Err(Error::EnumerationTooLarge { size, cap: cap.0 });
        }
    }
    let mut report = SuiteReport::default();
    let sizes = check_gl2_enumeration(max_n, cap, &mut report)?;
    check_crt(max_n, cap, &sizes, &mut report)?;
    check_full_preimage_family(max_n.min(FAMILY_MAX_N), cap, max_n >= FAMILY_MAX_N, &mut report)?;
    check_arith(&mut report)?;
    check_b_epsilon(B_EPSILON_LIMIT, &mut report)?;
    check_lattice(cap, &mut report)?;
    check_bounds(&mut report)?;
    Ok(report)
}

fn gl2_formula(n: u64) -> Result<BigUint> {
    // n⁴ ∏ (1 − ℓ⁻¹)(1 − ℓ⁻²), computed independently of `gl2_order`.
    let mut num = BigUint::from(n).pow(4);
    let mut den = BigUint::one();
    for l in factorize(n)?.primes() {
        num *= (l - 1) * (l * l - 1);
        den *= l * l * l;
    }
    Ok(num / den)
}

fn check_gl2_enumeration(
    max_n: u32,
    cap: EnumerationCap,
    report: &mut SuiteReport,
) -> Result<BTreeMap<u32, usize>> {
    let mut sizes = BTreeMap::new();
    for n in 1..=max_n {
        let elements = enumerate_gl2(n, cap)?;
        let formula = gl2_formula(n as u64)?;
        report.record(
            "gl2-order",
            format!("n={}", n),
            BigUint::from(elements.len()) == formula && gl2_order(n)? == formula,
            format!("|GL2(Z/{}Z)| = {}", n, elements.len()),
        );
        if n >= 2 {
            let stabilizing = elements
                .iter()
                .filter(|g| {
                    let [a, _, c, _] = g.entries();
                    a == 1 && c == 0
                })
                .count();
            let (index, rem) = elements.len().div_rem(&stabilizing);
            let phi = euler_phi(n as u64)?;
            let psi = dedekind_psi(n as u64)?;
            let b1 = subgroup_index(&b1_subgroup(n, cap)?);
            report.record(
                "b1-index",
                format!("n={}", n),
                rem == 0 && index as u64 == phi * psi && b1 == BigUint::from(phi * psi),
                format!("[GL2 : B1] = {} = phi*psi = {}*{}", index, phi, psi),
            );
        }
        sizes.insert(n, elements.len());
    }
    if max_n == 1 {
        report.push("b1-index", "n=2..1", Status::Skip, "no modulus n >= 2 in range");
    }
    Ok(sizes)
}

fn check_crt(
    max_n: u32,
    cap: EnumerationCap,
    sizes: &BTreeMap<u32, usize>,
    report: &mut SuiteReport,
) -> Result<()> {
    let mut pairs = 0;
    for a in 2..=max_n {
        for b in (a + 1)..=max_n {
            if a.gcd(&b) != 1 || a * b > max_n {
                continue;
            }
            pairs += 1;
            let ab = a * b;
            let product = direct_product(&[b1_subgroup(a, cap)?, b1_subgroup(b, cap)?], cap)?;
            let ok = sizes[&ab] == sizes[&a] * sizes[&b]
                && gl2_order(ab)? == gl2_order(a)? * gl2_order(b)?
                && product == b1_subgroup(ab, cap)?;
            report.record(
                "crt",
                format!("a={} b={}", a, b),
                ok,
                format!("{} = {} * {}; B1 decomposes", sizes[&ab], sizes[&a], sizes[&b]),
            );
        }
    }
    if pairs == 0 {
        report.push("crt", format!("ab<={}", max_n), Status::Skip, "no coprime pair in range");
    }
    Ok(())
}

fn units(n: u32) -> Vec<u32> {
    (1..n.max(2)).filter(|u| u.gcd(&n) == 1).collect()
}

fn diagonal_generators(n: u32) -> Vec<Mat2<u32>> {
    let mut gens = Vec::new();
    for u in units(n) {
        gens.push(Mat2::diagonal(n, u % n, 1 % n).expect("unit"));
        gens.push(Mat2::diagonal(n, 1 % n, u % n).expect("unit"));
    }
    gens
}

fn random_element(n: u32, rng: &mut ChaCha8Rng) -> Mat2<u32> {
    loop {
        let e: [u32; 4] = std::array::from_fn(|_| rng.gen_range(0..n));
        if let Ok(g) = Mat2::from_residues(n, e[0], e[1], e[2], e[3]) {
            let det = g.det();
            if det.gcd(&n) == 1 {
                return g;
            }
        }
    }
}

/// A deterministic family of subgroups of GL₂(ℤ/nℤ): classical subgroups,
/// cyclic subgroups, full preimages from every proper level, and a few
/// closures of seeded random elements.
pub fn subgroup_family(n: u32, cap: EnumerationCap) -> Result<Vec<(String, SubgroupModN<u32>)>> {
    let m = |a: i128, b: i128, c: i128, d: i128| Mat2::new(n, a, b, c, d);
    let unipotent = m(1, 1, 0, 1)?;
    let mut family = vec![
        ("trivial".to_string(), trivial_group(n)?),
        ("full".to_string(), full_group(n, cap)?),
    ];
    if n >= 2 {
        family.push(("b1".to_string(), b1_subgroup(n, cap)?));
    }
    let cartan = diagonal_generators(n);
    let mut borel = cartan.clone();
    borel.push(unipotent);
    let mut normalizer = cartan.clone();
    normalizer.push(m(0, 1, 1, 0)?);
    family.push(("borel".into(), subgroup_closure(&borel, n, cap)?));
    family.push(("split-cartan".into(), subgroup_closure(&cartan, n, cap)?));
    family.push(("cartan-normalizer".into(), subgroup_closure(&normalizer, n, cap)?));
    family.push(("unipotent".into(), subgroup_closure(&[unipotent], n, cap)?));
    family.push(("rotation-4".into(), subgroup_closure(&[m(0, -1, 1, 0)?], n, cap)?));
    family.push(("rotation-6".into(), subgroup_closure(&[m(1, 1, -1, 0)?], n, cap)?));
    for d in divisors(n)? {
        if d < 2 || d == n {
            continue;
        }
        let cartan_d = subgroup_closure(&diagonal_generators(d), d, cap)?;
        family.push((format!("preimage-b1-{}", d), full_preimage(&b1_subgroup(d, cap)?, n, cap)?));
        family.push((format!("preimage-cartan-{}", d), full_preimage(&cartan_d, n, cap)?));
        family.push((format!("congruence-{}", d), full_preimage(&trivial_group(d)?, n, cap)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    for count in 1..=2 {
        let gens: Vec<Mat2<u32>> = (0..count).map(|_| random_element(n, &mut rng)).collect();
        family.push((format!("random-{}", count), subgroup_closure(&gens, n, cap)?));
    }
    Ok(family)
}

/// Checks for `G` against one divisor `m`; returns a failure message.
fn full_preimage_failure(
    g: &SubgroupModN<u32>,
    m: u32,
    cap: EnumerationCap,
) -> Result<(bool, Option<String>)> {
    let n = g.modulus();
    let full = is_full_preimage(g, m)?;
    if full != contains_kernel(g, m)? {
        return Ok((full, Some("order test and kernel membership disagree".into())));
    }
    let image = reduce_subgroup(g, m)?;
    let lifted = full_preimage(&image, n, cap)?;
    if reduce_subgroup(&lifted, m)? != image {
        return Ok((full, Some("reducing the full preimage does not recover the image".into())));
    }
    if !g.is_subgroup_of(&lifted) {
        return Ok((full, Some("subgroup is not inside the preimage of its image".into())));
    }
    let (index_g, index_image) = (subgroup_index(g), subgroup_index(&image));
    let consistent = if full {
        lifted == *g && index_g == index_image
    } else {
        lifted != *g && index_g > index_image
    };
    if !consistent {
        return Ok((
            full,
            Some(format!(
                "full={} but index {} vs image index {}",
                full, index_g, index_image
            )),
        ));
    }
    Ok((full, None))
}

fn check_full_preimage_family(
    max_n: u32,
    cap: EnumerationCap,
    enforce_size: bool,
    report: &mut SuiteReport,
) -> Result<()> {
    let mut total = 0;
    for n in 2..=max_n {
        let family = subgroup_family(n, cap)?;
        let divs = divisors(n)?;
        let (mut pairs, mut full_pairs) = (0, 0);
        let mut failures = Vec::new();
        for (name, g) in &family {
            if !g.is_closed() {
                failures.push(format!("{} is not closed", name));
                continue;
            }
            if subgroup_closure(g.generators(), n, cap)? != *g {
                failures.push(format!("{} is not generated by its generators", name));
            }
            for &m in &divs {
                let (full, failure) = full_preimage_failure(g, m, cap)?;
                pairs += 1;
                full_pairs += full as usize;
                if let Some(f) = failure {
                    failures.push(format!("{} at m={}: {}", name, m, f));
                }
            }
        }
        total += family.len();
        let detail = if failures.is_empty() {
            format!("{} full-preimage pairs, {} not full", full_pairs, pairs - full_pairs)
        } else {
            failures.join("; ")
        };
        report.record(
            "full-preimage",
            format!("n={} subgroups={} pairs={}", n, family.len(), pairs),
            failures.is_empty(),
            detail,
        );
    }
    let params = format!("n<={}", max_n);
    if max_n < 2 {
        report.push("full-preimage-family", params, Status::Skip, "no modulus n >= 2 in range");
    } else {
        let ok = !enforce_size || total >= FAMILY_MIN_SIZE;
        report.record("full-preimage-family", params, ok, format!("{} subgroups", total));
    }
    Ok(())
}

fn check_arith(report: &mut SuiteReport) -> Result<()> {
    let sieve = FactorSieve::new((MULTIPLICATIVE_LIMIT * MULTIPLICATIVE_LIMIT) as usize);
    let small: Vec<(u64, u64)> = (0..=MULTIPLICATIVE_LIMIT)
        .map(|n| {
            if n == 0 {
                (0, 0)
            } else {
                (euler_phi(n).expect("small"), dedekind_psi(n).expect("small"))
            }
        })
        .collect();
    let mut bad = Vec::new();
    for a in 1..=MULTIPLICATIVE_LIMIT {
        for b in 1..=MULTIPLICATIVE_LIMIT {
            if a.gcd(&b) != 1 {
                continue;
            }
            let (phi, psi) = sieve.phi_psi((a * b) as usize);
            if phi != small[a as usize].0 * small[b as usize].0
                || psi != small[a as usize].1 * small[b as usize].1
            {
                bad.push((a, b));
            }
        }
    }
    report.record(
        "multiplicativity",
        format!("a,b<={}", MULTIPLICATIVE_LIMIT),
        bad.is_empty(),
        match bad.first() {
            None => "phi(ab)=phi(a)phi(b), psi(ab)=psi(a)psi(b)".to_string(),
            Some((a, b)) => format!("fails at a={} b={}", a, b),
        },
    );

    let mut first_bad = None;
    for n in 1..=ARITH_LIMIT {
        let phi = euler_phi(n)?;
        let psi = dedekind_psi(n)?;
        let (mut lhs, mut rhs) = (BigUint::from(phi * psi), BigUint::from(n * n));
        for l in factorize(n)?.primes() {
            lhs *= l * l;
            rhs *= l * l - 1;
        }
        // 10000/16449 exceeds 6/π² = 0.607927..., so this is stronger.
        let dense = (phi * psi) as u128 * 16449 > (n as u128 * n as u128) * 10000;
        let psi_ok = n == 1 || psi > n;
        if lhs != rhs || !dense || !psi_ok {
            first_bad = Some(n);
            break;
        }
    }
    report.record(
        "phi-psi-identity",
        format!("n<={}", ARITH_LIMIT),
        first_bad.is_none(),
        match first_bad {
            None => "phi*psi = n^2 prod(1 - l^-2) > (6/pi^2) n^2; psi(n) > n".to_string(),
            Some(n) => format!("fails at n={}", n),
        },
    );
    Ok(())
}

/// Exact test of `φ(n)·n^(ε−1)` against `φ(w)·w^(ε−1)` for `ε = r/q`:
/// compares `φ(n)^q · w^(q−r)` with `φ(w)^q · n^(q−r)`.
fn cmp_phi_ratio(phi_n: u64, n: u64, phi_w: u64, w: u64, eps: &BigRational) -> std::cmp::Ordering {
    let r = eps.numer().to_u32().expect("small epsilon");
    let q = eps.denom().to_u32().expect("small epsilon");
    let lhs = BigUint::from(phi_n).pow(q) * BigUint::from(w).pow(q - r);
    let rhs = BigUint::from(phi_w).pow(q) * BigUint::from(n).pow(q - r);
    lhs.cmp(&rhs)
}

fn check_b_epsilon(limit: u64, report: &mut SuiteReport) -> Result<()> {
    let sieve = FactorSieve::new(limit as usize);
    let mut previous: Option<crate::PowerProduct> = None;
    for eps in epsilon_grid() {
        let b = b_epsilon(&eps, 12)?;
        let e = eps.to_f64().expect("small");
        let b_f = b.value.to_f64();
        let mut violations = 0u64;
        let mut equalities = Vec::new();
        for n in 1..=limit {
            let (phi, _) = sieve.phi_psi(n as usize);
            let ratio = phi as f64 * (n as f64).powf(e - 1.0);
            if ratio > b_f * (1.0 + 1e-9) {
                continue;
            }
            match cmp_phi_ratio(phi, n, b.witness_phi, b.witness, &eps) {
                std::cmp::Ordering::Less => violations += 1,
                std::cmp::Ordering::Equal => equalities.push(n),
                std::cmp::Ordering::Greater => {}
            }
        }
        let monotone = previous.as_ref().is_none_or(|p| *p <= b.value);
        report.record(
            "b-epsilon",
            format!("eps={} n<={}", eps, limit),
            violations == 0 && equalities == [b.witness] && monotone,
            format!(
                "witness {} value {} ~ {}; equality at {:?}",
                b.witness, b.value, b.decimal, equalities
            ),
        );
        previous = Some(b.value);
    }
    Ok(())
}

fn outcome_detail(o: &ScenarioOutcome) -> String {
    let indices: Vec<String> = o
        .reports
        .iter()
        .map(|r| format!("k={}:{}/{}", r.precision, r.index_t, r.index_t_prime))
        .collect();
    format!("{} stable={}", indices.join(" "), o.stable)
}

fn scaled<T: crate::LatticeInt>(scenario: &Scenario<T>) -> Result<LatticeBasis<T>> {
    let l = scenario.group.prime() as i64;
    scenario.lattice.transformed(&RatMat2::diagonal(l, l))
}

fn check_lattice(cap: EnumerationCap, report: &mut SuiteReport) -> Result<()> {
    let scenarios = bundled_scenarios();
    for (id, outcome) in run_scenarios(&scenarios, cap) {
        match outcome {
            Ok(o) => report.record("lattice-scenario", id, o.passed(), outcome_detail(&o)),
            Err(e) => report.push("lattice-scenario", id, Status::Fail, e.to_string()),
        }
    }
    let mut mismatched = Vec::new();
    for s in &scenarios {
        let lt = scaled(s)?;
        for k in s.precisions.clone() {
            if lattice_index(&s.group, &s.lattice, k, cap)? != lattice_index(&s.group, &lt, k, cap)? {
                mismatched.push(format!("{} k={}", s.id, k));
            }
        }
    }
    report.record(
        "lattice-scaling",
        format!("scenarios={}", scenarios.len()),
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "index of l*T equals index of T".to_string()
        } else {
            mismatched.join(", ")
        },
    );
    let pick = |id: &str| scenarios.iter().find(|s| s.id == id).expect("bundled scenario");
    for (a, b) in [("l2-borel-01-d1l", "l3-borel-01-d1l"), ("l2-cartan-12-d1l", "l3-unipotent-01-d1l")] {
        let parts = [
            (pick(a).group.clone(), pick(a).lattice.clone()),
            (pick(b).group.clone(), pick(b).lattice.clone()),
        ];
        for k in 1..=2 {
            let c = composite_index(&parts, k, cap)?;
            report.record(
                "lattice-composite",
                format!("{} x {} k={}", a, b, k),
                c.consistent(),
                format!("{} = {}", c.combined_index, c.product_of_indices),
            );
        }
    }
    Ok(())
}

fn check_bounds(report: &mut SuiteReport) -> Result<()> {
    for (index, expected) in [(2u64, vec![1u64]), (6, vec![1, 2, 4])] {
        let ctx = BoundContext::new(index, 1, 1)?;
        let set = exponent_candidates(&ctx, DEFAULT_CEILING_BUDGET)?;
        report.record(
            "sieve-example",
            format!("I={} d0=1 d=1", index),
            set.candidates == expected,
            format!("B={} candidates {:?}", set.modulus, set.candidates),
        );
    }
    let mut checked = 0;
    let mut failures = Vec::new();
    for eps in epsilon_grid().into_iter().take(4) {
        for index in 1..=12 {
            for base_degree in 1..=2 {
                for degree in 1..=12 {
                    let ctx = BoundContext::new(index, base_degree, degree)?;
                    let set = exponent_candidates(&ctx, DEFAULT_CEILING_BUDGET)?;
                    let bound = theorem_bounds(&ctx, &eps, 12)?.exponent;
                    let max = set.max();
                    let decimal_ok = bound.decimal_value() >= BigRational::from_integer(max.into());
                    if !bound.admits(max) || !decimal_ok {
                        failures.push(format!("I={} d0={} d={} eps={}", index, base_degree, degree, eps));
                    }
                    checked += 1;
                }
            }
        }
    }
    report.record(
        "sieve-chain",
        "I<=12 d0<=2 d<=12",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} contexts: max candidate <= c_eps d^(1/2+eps)", checked)
        } else {
            failures.join(", ")
        },
    );
    let b = baselines(1, 12)?;
    report.record(
        "baseline-parent",
        "d=1",
        b.parent == BigUint::from(376164u32),
        format!("129(5^d-1)(3d)^6 = {}", b.parent),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommand reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct BoundsRow {
    pub label: String,
    pub adelic_index: u64,
    pub base_degree: u64,
    pub degree: u64,
    pub sieve_modulus: String,
    pub candidate_max: u64,
    pub candidates: usize,
    pub exponent_bound: String,
    pub exponent_bound_exact: String,
    pub order_bound: String,
    pub order_bound_exact: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselinesReport {
    pub degree: u64,
    pub parent: String,
    /// Natural logarithm; absent for `d = 1`.
    pub hindry_silverman: Option<String>,
    pub log_base: &'static str,
    pub bourdon_najman_exponent: String,
    pub bourdon_najman_order: String,
    pub bourdon_najman_applicable: bool,
}

impl BaselinesReport {
    pub fn new(degree: u64, digits: u32) -> Result<Self> {
        let b = baselines(degree, digits)?;
        Ok(BaselinesReport {
            degree,
            parent: b.parent.to_string(),
            hindry_silverman: b.hindry_silverman.map(|h| h.decimal),
            log_base: "e",
            bourdon_najman_exponent: b.bourdon_najman_exponent.decimal,
            bourdon_najman_order: b.bourdon_najman_order.decimal,
            bourdon_najman_applicable: b.bourdon_najman_applicable,
        })
    }

    fn lines(&self, out: &mut String) {
        let _ = writeln!(out, "parent (prime-power orders)   {}", self.parent);
        let _ = writeln!(
            out,
            "hindry-silverman (ln)         {}",
            self.hindry_silverman.as_deref().unwrap_or("n/a (d = 1)")
        );
        let odd = if self.bourdon_najman_applicable { "" } else { "  (stated for odd d only)" };
        let _ = writeln!(out, "bourdon-najman exponent       {}{}", self.bourdon_najman_exponent, odd);
        let _ = writeln!(out, "bourdon-najman order          {}{}", self.bourdon_najman_order, odd);
    }
}

impl Report for BaselinesReport {
    fn text(&self) -> String {
        let mut out = format!("baselines at d = {}\n", self.degree);
        self.lines(&mut out);
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub epsilon: String,
    pub epsilon_at_least_one: bool,
    pub digits: u32,
    pub rows: Vec<BoundsRow>,
    pub baselines: BaselinesReport,
    pub isogeny_checks: SuiteReport,
}

impl BoundsReport {
    pub fn new(
        records: &[CurveRecord],
        degree: u64,
        epsilon: &BigRational,
        digits: u32,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(records.len());
        let mut at_least_one = false;
        for r in records {
            let ctx = BoundContext::new(r.adelic_index, r.base_degree, degree)?;
            let set = exponent_candidates(&ctx, DEFAULT_CEILING_BUDGET)?;
            let t = theorem_bounds(&ctx, epsilon, digits)?;
            at_least_one = t.epsilon_at_least_one;
            rows.push(BoundsRow {
                label: r.label.clone(),
                adelic_index: r.adelic_index,
                base_degree: r.base_degree,
                degree,
                sieve_modulus: set.modulus.to_string(),
                candidate_max: set.max(),
                candidates: set.candidates.len(),
                exponent_bound: t.exponent.decimal,
                exponent_bound_exact: t.exponent.exact.to_string(),
                order_bound: t.order.decimal,
                order_bound_exact: t.order.exact.to_string(),
            });
        }
        Ok(BoundsReport {
            epsilon: epsilon.to_string(),
            epsilon_at_least_one: at_least_one,
            digits,
            rows,
            baselines: BaselinesReport::new(degree, digits)?,
            isogeny_checks: check_isogeny_class_indices(records),
        })
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            s.push_str(c);
            s.push_str(&" ".repeat(pad));
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

impl Report for BoundsReport {
    fn text(&self) -> String {
        let mut out = format!(
            "epsilon = {}; bounds rounded up to {} significant digits; non-CM curves only\n",
            self.epsilon, self.digits
        );
        if self.epsilon_at_least_one {
            out.push_str("note: epsilon >= 1 gives valid but weaker bounds\n");
        }
        out.push('\n');
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    r.adelic_index.to_string(),
                    r.base_degree.to_string(),
                    r.degree.to_string(),
                    r.sieve_modulus.clone(),
                    r.candidate_max.to_string(),
                    r.exponent_bound.clone(),
                    r.order_bound.clone(),
                ]
            })
            .collect();
        out.push_str(&table(
            &["label", "I", "d0", "d", "B", "cand_max", "exp_bound", "order_bound"],
            &rows,
        ));
        out.push('\n');
        self.baselines.lines(&mut out);
        if !self.isogeny_checks.checks.is_empty() {
            out.push('\n');
            out.push_str(&self.isogeny_checks.text());
        }
        out
    }

    fn failed(&self) -> bool {
        !self.isogeny_checks.passed()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidatesReport {
    pub context: BoundContext,
    pub sieve_modulus: String,
    pub ceiling: u64,
    pub candidates: Vec<u64>,
}

impl CandidatesReport {
    pub fn new(ctx: &BoundContext, budget: u64) -> Result<Self> {
        let set = exponent_candidates(ctx, budget)?;
        Ok(CandidatesReport {
            context: *ctx,
            sieve_modulus: set.modulus.to_string(),
            ceiling: set.ceiling,
            candidates: set.candidates,
        })
    }
}

impl Report for CandidatesReport {
    fn text(&self) -> String {
        let list: Vec<String> = self.candidates.iter().map(u64::to_string).collect();
        format!(
            "I = {}, d0 = {}, d = {}\nB = {}\nceiling = {}\ncandidates ({}): {}\n",
            self.context.index,
            self.context.base_degree,
            self.context.degree,
            self.sieve_modulus,
            self.ceiling,
            self.candidates.len(),
            list.join(" ")
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BEpsilonReport {
    pub epsilon: String,
    pub witness: u64,
    pub witness_phi: u64,
    pub exact: String,
    /// Rounded down: `b_ε` only ever appears in denominators.
    pub decimal: String,
}

impl BEpsilonReport {
    pub fn new(epsilon: &BigRational, digits: u32) -> Result<Self> {
        let b = b_epsilon(epsilon, digits)?;
        Ok(BEpsilonReport {
            epsilon: epsilon.to_string(),
            witness: b.witness,
            witness_phi: b.witness_phi,
            exact: b.value.to_string(),
            decimal: b.decimal,
        })
    }
}

impl Report for BEpsilonReport {
    fn text(&self) -> String {
        format!(
            "b_eps for eps = {}\nwitness n = {} (phi = {})\nexact = {}\ndecimal = {} (rounded down)\n",
            self.epsilon, self.witness, self.witness_phi, self.exact, self.decimal
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct B1IndexReport {
    pub n: u32,
    pub phi: u64,
    pub psi: u64,
    pub formula_index: u64,
    pub enumerated_index: Option<String>,
    pub agrees: Option<bool>,
}

impl B1IndexReport {
    pub fn new(n: u32, verify: bool, cap: EnumerationCap) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModulus(n.to_string(), 2));
        }
        let phi = euler_phi(n as u64)?;
        let psi = dedekind_psi(n as u64)?;
        let formula_index = phi * psi;
        let enumerated = if verify {
            Some(subgroup_index(&b1_subgroup(n, cap)?))
        } else {
            None
        };
        Ok(B1IndexReport {
            n,
            phi,
            psi,
            formula_index,
            agrees: enumerated.as_ref().map(|e| *e == BigUint::from(formula_index)),
            enumerated_index: enumerated.map(|e| e.to_string()),
        })
    }
}

impl Report for B1IndexReport {
    fn text(&self) -> String {
        let mut out = format!(
            "n = {}\nphi(n) * psi(n) = {} * {} = {}\n",
            self.n, self.phi, self.psi, self.formula_index
        );
        if let (Some(e), Some(ok)) = (&self.enumerated_index, self.agrees) {
            let _ = writeln!(out, "enumerated [GL2 : B1] = {} ({})", e, if ok { "agrees" } else { "MISMATCH" });
        }
        out
    }

    fn failed(&self) -> bool {
        self.agrees == Some(false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRow {
    pub id: String,
    pub prime: Option<u64>,
    /// `(k, [Aut(T):G], [Aut(T′):G])`.
    pub indices: Vec<(u32, String, String)>,
    pub stable: bool,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeReport {
    pub scenarios: Vec<ScenarioRow>,
}

impl LatticeReport {
    pub fn new<T: crate::LatticeInt + Send + Sync>(
        scenarios: &[Scenario<T>],
        cap: EnumerationCap,
    ) -> Self {
        let rows = run_scenarios(scenarios, cap)
            .into_iter()
            .map(|(id, outcome)| match outcome {
                Ok(o) => ScenarioRow {
                    passed: o.passed(),
                    prime: Some(o.prime),
                    indices: o
                        .reports
                        .iter()
                        .map(|r| (r.precision, r.index_t.to_string(), r.index_t_prime.to_string()))
                        .collect(),
                    stable: o.stable,
                    id,
                    error: None,
                },
                Err(e) => ScenarioRow {
                    id,
                    prime: None,
                    indices: Vec::new(),
                    stable: false,
                    passed: false,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        LatticeReport { scenarios: rows }
    }
}

impl Report for LatticeReport {
    fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.scenarios {
            let status = if s.passed { "PASS" } else { "FAIL" };
            let body = match &s.error {
                Some(e) => e.clone(),
                None => {
                    let parts: Vec<String> = s
                        .indices
                        .iter()
                        .map(|(k, a, b)| format!("k={}: {} / {}", k, a, b))
                        .collect();
                    format!("{}{}", parts.join(", "), if s.stable { "" } else { " (unstable)" })
                }
            };
            let _ = writeln!(out, "{}  {}  {}", status, s.id, body);
        }
        let passed = self.scenarios.iter().filter(|s| s.passed).count();
        let _ = writeln!(out, "summary: {} of {} scenarios passed", passed, self.scenarios.len());
        out
    }

    fn failed(&self) -> bool {
        self.scenarios.iter().any(|s| !s.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: EnumerationCap = EnumerationCap::DEFAULT;

    fn record(label: &str, d0: u64, index: u64, class: Option<&str>) -> CurveRecord {
        CurveRecord {
            label: label.into(),
            base_degree: d0,
            adelic_index: index,
            isogeny_class: class.map(String::from),
        }
    }

    #[test]
    fn parses_minimal_file() {
        let recs = parse_curve_records("label,base_degree,adelic_index\nX,1,2\n".as_bytes()).unwrap();
        assert_eq!(recs, vec![record("X", 1, 2, None)]);
    }

    #[test]
    fn rejects_bad_rows_with_line() {
        let text = "label,base_degree,adelic_index\nX,1,2\nY,2,-3\n";
        assert!(matches!(
            parse_curve_records(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let zero = "label,base_degree,adelic_index\nX,0,2\n";
        assert!(matches!(parse_curve_records(zero.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let short = "label,base_degree,adelic_index\nX,1\n";
        assert!(matches!(parse_curve_records(short.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let header = "name,d0,index\nX,1,2\n";
        assert!(matches!(parse_curve_records(header.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn rejects_duplicates() {
        let text = "label,base_degree,adelic_index\nX,1,2\nZ,1,2\nX,1,4\n";
        assert_eq!(
            parse_curve_records(text.as_bytes()),
            Err(Error::DuplicateLabel {
                line: 4,
                label: "X".into()
            })
        );
    }

    #[test]
    fn isogeny_classes() {
        let text = "label,base_degree,adelic_index,isogeny_class\nA,1,12,C1\nB,1,12,C1\nC,1,2,\n";
        let recs = parse_curve_records(text.as_bytes()).unwrap();
        assert_eq!(recs[2].isogeny_class, None);
        let r = check_isogeny_class_indices(&recs);
        assert_eq!(r.checks.len(), 1);
        assert!(r.passed());

        let bad = [record("A", 1, 12, Some("C1")), record("B", 1, 24, Some("C1"))];
        let r = check_isogeny_class_indices(&bad);
        assert!(!r.passed());
        assert!(r.checks[0].detail.contains("A:12") && r.checks[0].detail.contains("B:24"));

        let singles = [record("A", 1, 12, Some("C1")), record("B", 1, 24, Some("C2"))];
        assert!(check_isogeny_class_indices(&singles).passed());
    }

    #[test]
    fn round_trip() {
        let recs = vec![record("A", 1, 12, Some("C1")), record("B,x", 2, 3, None)];
        let mut buf = Vec::new();
        write_curve_records(&recs, &mut buf).unwrap();
        assert_eq!(parse_curve_records(buf.as_slice()).unwrap(), recs);
    }

    proptest::proptest! {
        #[test]
        fn round_trip_arbitrary(
            rows in proptest::collection::vec(
                (
                    "[A-Za-z0-9,\"#._-]{1,12}",
                    1u64..1000,
                    1u64..1_000_000,
                    proptest::option::of("[A-Za-z0-9,\"._-]([A-Za-z0-9,\" ._-]{0,5}[A-Za-z0-9])?"),
                ),
                0..8,
            )
        ) {
            let mut recs: Vec<CurveRecord> = Vec::new();
            for (label, d0, index, class) in rows {
                if recs.iter().all(|r| r.label != label) {
                    recs.push(CurveRecord { label, base_degree: d0, adelic_index: index, isogeny_class: class });
                }
            }
            let mut buf = Vec::new();
            write_curve_records(&recs, &mut buf).unwrap();
            proptest::prop_assert_eq!(parse_curve_records(buf.as_slice()).unwrap(), recs);
        }
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/2").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational(" 3 ").unwrap(), BigRational::from_integer(3.into()));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn family_is_large_enough() {
        let total: usize = (2..=FAMILY_MAX_N)
            .map(|n| subgroup_family(n, CAP).unwrap().len())
            .sum();
        assert!(total >= FAMILY_MIN_SIZE);
    }

    #[test]
    fn degenerate_suite() {
        let r = run_verification_suite(1, CAP).unwrap();
        assert!(r.passed());
        assert!(r
            .checks
            .iter()
            .any(|c| c.name == "b1-index" && c.status == Status::Skip));
        assert!(r.checks.iter().all(|c| !(c.name == "b1-index" && c.status == Status::Pass)));
    }

    #[test]
    fn suite_refuses_over_cap() {
        assert!(matches!(
            run_verification_suite(30, EnumerationCap(1000)),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
