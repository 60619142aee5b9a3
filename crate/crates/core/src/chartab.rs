//! Character-table bundles: data model, JSON ingestion and validation, and
//! group-level derived data (element orders, power maps, prime graph).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{gcd, lcm, prime_divisors};
use crate::cyclo::{CyclotomicNumber, Rational};

/// One problem found while validating a bundle, located by a JSON-style path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid bundle ({} violation(s)): {}", .0.len(), display_list(.0))]
    Invalid(Vec<Violation>),
    #[error("no character {name} in the {kind} table")]
    UnknownCharacter { name: String, kind: CharacterKind },
    #[error("no {0}-Brauer table in this bundle")]
    MissingBrauerTable(u64),
    #[error("class {class} is {prime}-singular and has no Brauer character value")]
    SingularClass { class: String, prime: u64 },
    #[error("power {exponent} of class {class} is not determined by the stored power maps")]
    UnknownPower { class: String, exponent: u64 },
}

fn display_list(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyClass {
    pub name: String,
    pub element_order: u64,
    /// Prime `p` to the index of the class containing `g^p`.
    pub power_maps: BTreeMap<u64, usize>,
    pub centralizer: Option<BigUint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharacterKind {
    Ordinary,
    Brauer(u64),
}

impl fmt::Display for CharacterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharacterKind::Ordinary => write!(f, "ordinary"),
            CharacterKind::Brauer(p) => write!(f, "brauer:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub name: String,
    /// One value per class for ordinary characters, one per `p`-regular
    /// class (in the table's regular-class order) for Brauer characters.
    pub values: Vec<CyclotomicNumber>,
    pub kind: CharacterKind,
}

impl Character {
    pub fn degree(&self) -> &CyclotomicNumber {
        &self.values[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrauerTable {
    pub prime: u64,
    pub regular: Vec<usize>,
    pub characters: Vec<Character>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterTable {
    pub group_name: String,
    pub group_order: BigUint,
    pub exponent: BigUint,
    pub classes: Vec<ConjugacyClass>,
    pub ordinary: Vec<Character>,
    pub brauer: BTreeMap<u64, BrauerTable>,
}

/// Vertices are the primes dividing `|G|`; `p - q` whenever `G` has an
/// element of order `pq`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeGraph {
    pub vertices: Vec<u64>,
    pub edges: BTreeSet<(u64, u64)>,
}

impl PrimeGraph {
    pub fn has_edge(&self, p: u64, q: u64) -> bool {
        self.edges.contains(&(p.min(q), p.max(q)))
    }

    /// Pairs of distinct vertices that are not joined.
    pub fn non_edges(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for (i, &p) in self.vertices.iter().enumerate() {
            for &q in &self.vertices[i + 1..] {
                if !self.has_edge(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }
}

/// Result of the first-orthogonality sanity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrthogonalityReport {
    Checked(Vec<Violation>),
    Skipped(String),
}

impl OrthogonalityReport {
    pub fn is_clean(&self) -> bool {
        matches!(self, OrthogonalityReport::Checked(v) if v.is_empty())
    }
}

impl CharacterTable {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn class_name(&self, idx: usize) -> &str {
        &self.classes[idx].name
    }

    pub fn order_of(&self, idx: usize) -> u64 {
        self.classes[idx].element_order
    }

    /// Sorted distinct element orders.
    pub fn element_orders(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.classes.iter().map(|c| c.element_order).collect();
        set.into_iter().collect()
    }

    pub fn has_element_order(&self, k: u64) -> bool {
        self.classes.iter().any(|c| c.element_order == k)
    }

    /// Primes dividing the group order (read off the element orders, which
    /// validation guarantees have the same prime support).
    pub fn primes(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self
            .classes
            .iter()
            .flat_map(|c| prime_divisors(c.element_order))
            .collect();
        set.into_iter().collect()
    }

    /// The exponent as a machine integer, when it fits.
    pub fn exponent_u64(&self) -> Option<u64> {
        u64::try_from(&self.exponent).ok()
    }

    pub fn characters(&self, kind: CharacterKind) -> Result<&[Character], TableError> {
        match kind {
            CharacterKind::Ordinary => Ok(&self.ordinary),
            CharacterKind::Brauer(p) => self
                .brauer
                .get(&p)
                .map(|t| t.characters.as_slice())
                .ok_or(TableError::MissingBrauerTable(p)),
        }
    }

    pub fn character(&self, kind: CharacterKind, name: &str) -> Result<&Character, TableError> {
        self.characters(kind)?
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| TableError::UnknownCharacter {
                name: name.to_string(),
                kind,
            })
    }

    /// Value of `chi` at class `idx`, resolving the regular-class indexing of
    /// Brauer characters.
    pub fn value<'a>(&self, chi: &'a Character, idx: usize) -> Result<&'a CyclotomicNumber, TableError> {
        match chi.kind {
            CharacterKind::Ordinary => Ok(&chi.values[idx]),
            CharacterKind::Brauer(p) => {
                let table = self.brauer.get(&p).ok_or(TableError::MissingBrauerTable(p))?;
                let pos = table.regular.iter().position(|&c| c == idx).ok_or_else(|| {
                    TableError::SingularClass {
                        class: self.class_name(idx).to_string(),
                        prime: p,
                    }
                })?;
                Ok(&chi.values[pos])
            }
        }
    }

    /// Class of `g^e` for `g` in class `idx`, composing the prime power maps.
    /// Exponents are taken modulo the element order; a residue with a prime
    /// factor that has no stored map is replaced by another representative.
    pub fn power_class(&self, idx: usize, e: u64) -> Result<usize, TableError> {
        let order = self.order_of(idx);
        let e = e % order;
        if e == 0 {
            return Ok(0);
        }
        let unknown = || TableError::UnknownPower {
            class: self.class_name(idx).to_string(),
            exponent: e,
        };
        let mut candidate = e;
        for _ in 0..64 {
            if let Some(c) = self.power_by_factors(idx, candidate) {
                return Ok(c);
            }
            candidate = candidate.checked_add(order).ok_or_else(unknown)?;
        }
        Err(unknown())
    }

    fn power_by_factors(&self, idx: usize, e: u64) -> Option<usize> {
        let mut cur = idx;
        for (p, mult) in crate::arith::factorize(e) {
            for _ in 0..mult {
                cur = *self.classes[cur].power_maps.get(&p)?;
            }
        }
        Some(cur)
    }

    /// All classes whose element order divides `k`, including the identity.
    pub fn classes_of_order_dividing(&self, k: u64) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&i| k.is_multiple_of(self.order_of(i)))
            .collect()
    }

    pub fn prime_graph(&self) -> PrimeGraph {
        let vertices = self.primes();
        let mut edges = BTreeSet::new();
        for c in &self.classes {
            let ps = prime_divisors(c.element_order);
            for (i, &p) in ps.iter().enumerate() {
                for &q in &ps[i + 1..] {
                    edges.insert((p, q));
                }
            }
        }
        PrimeGraph { vertices, edges }
    }

    /// First orthogonality relation for the ordinary characters, weighted by
    /// class sizes. Needs every class to carry its centralizer order.
    pub fn validate_orthogonality(&self) -> OrthogonalityReport {
        let Some(cents) = self
            .classes
            .iter()
            .map(|c| c.centralizer.clone())
            .collect::<Option<Vec<BigUint>>>()
        else {
            return OrthogonalityReport::Skipped(
                "centralizer orders absent; orthogonality not checked".to_string(),
            );
        };
        let weights: Vec<Rational> = cents
            .iter()
            .map(|c| Rational::new(BigInt::one(), BigInt::from(c.clone())))
            .collect();
        let conj: Vec<Vec<CyclotomicNumber>> = self
            .ordinary
            .iter()
            .map(|chi| chi.values.iter().map(|v| v.conj()).collect())
            .collect();
        let mut violations = Vec::new();
        for (a, chi) in self.ordinary.iter().enumerate() {
            for (b, psi_bar) in conj.iter().enumerate().skip(a) {
                // sum over classes of chi * conj(psi) / |C(g)|, rational and
                // irrational parts kept apart to stay in small conductors.
                let mut rational = Rational::zero();
                let mut irrational = CyclotomicNumber::zero();
                for (i, w) in weights.iter().enumerate() {
                    let x = &chi.values[i];
                    let y = &psi_bar[i];
                    if x.is_zero() || y.is_zero() {
                        continue;
                    }
                    let prod = x * y;
                    match prod.as_rational() {
                        Some(q) => rational += q * w,
                        None => irrational = &irrational + &prod.scale(w),
                    }
                }
                let total = &irrational + &CyclotomicNumber::rational(rational);
                let expected = CyclotomicNumber::integer(i64::from(a == b));
                if total != expected {
                    violations.push(Violation {
                        path: format!("ordinary[{a}] x ordinary[{b}]"),
                        message: format!("inner product is {total}, expected {expected}"),
                    });
                }
            }
        }
        OrthogonalityReport::Checked(violations)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RawBundle::from(self)).expect("bundle serializes")
    }
}

// --- wire format -----------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    name: String,
    order: String,
    exponent: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    name: String,
    order: u64,
    powermap: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    centralizer: Option<String>,
}

/// `sum (num/den) * E(n)^exp`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCyclotomic {
    n: u64,
    c: Vec<(String, String, i64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawValue {
    Int(i64),
    Cyc(RawCyclotomic),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCharacter {
    name: String,
    values: Vec<RawValue>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBrauer {
    regular: Vec<usize>,
    characters: Vec<RawCharacter>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBundle {
    group: RawGroup,
    classes: Vec<RawClass>,
    ordinary: Vec<RawCharacter>,
    #[serde(default)]
    brauer: BTreeMap<String, RawBrauer>,
}

fn encode_value(v: &CyclotomicNumber) -> RawValue {
    if let Some(i) = v.as_integer().and_then(|i| i64::try_from(i).ok()) {
        return RawValue::Int(i);
    }
    RawValue::Cyc(RawCyclotomic {
        n: v.conductor(),
        c: v
            .terms()
            .map(|(q, e)| (q.numer().to_string(), q.denom().to_string(), e as i64))
            .collect(),
    })
}

fn encode_character(chi: &Character) -> RawCharacter {
    RawCharacter {
        name: chi.name.clone(),
        values: chi.values.iter().map(encode_value).collect(),
    }
}

impl From<&CharacterTable> for RawBundle {
    fn from(t: &CharacterTable) -> Self {
        RawBundle {
            group: RawGroup {
                name: t.group_name.clone(),
                order: t.group_order.to_string(),
                exponent: t.exponent.to_string(),
            },
            classes: t
                .classes
                .iter()
                .map(|c| RawClass {
                    name: c.name.clone(),
                    order: c.element_order,
                    powermap: c.power_maps.iter().map(|(p, i)| (p.to_string(), *i)).collect(),
                    centralizer: c.centralizer.as_ref().map(|x| x.to_string()),
                })
                .collect(),
            ordinary: t.ordinary.iter().map(encode_character).collect(),
            brauer: t
                .brauer
                .iter()
                .map(|(p, b)| {
                    (
                        p.to_string(),
                        RawBrauer {
                            regular: b.regular.clone(),
                            characters: b.characters.iter().map(encode_character).collect(),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Parse and fully validate a bundle document.
pub fn parse_bundle<R: Read>(mut input: R) -> Result<CharacterTable, TableError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_bundle_str(&text)
}

pub fn parse_bundle_str(text: &str) -> Result<CharacterTable, TableError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawBundle = serde_path_to_error::deserialize(de).map_err(|e| TableError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    build_table(raw)
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

fn parse_uint(ck: &mut Checker, path: &str, s: &str) -> BigUint {
    match s.parse::<BigUint>() {
        Ok(v) if !v.is_zero() => v,
        _ => {
            ck.fail(path, format!("expected a positive decimal integer, got {s:?}"));
            BigUint::one()
        }
    }
}

fn decode_value(ck: &mut Checker, path: &str, v: &RawValue) -> CyclotomicNumber {
    match v {
        RawValue::Int(i) => CyclotomicNumber::integer(*i),
        RawValue::Cyc(c) => {
            let mut terms = Vec::with_capacity(c.c.len());
            for (k, (num, den, e)) in c.c.iter().enumerate() {
                match (num.parse::<BigInt>(), den.parse::<BigInt>()) {
                    (Ok(n), Ok(d)) if !d.is_zero() => terms.push((Rational::new(n, d), *e)),
                    _ => ck.fail(
                        format!("{path}.c[{k}]"),
                        format!("bad rational {num:?}/{den:?}"),
                    ),
                }
            }
            match CyclotomicNumber::from_terms(c.n, terms.iter().map(|(q, e)| (q, *e))) {
                Ok(x) => x,
                Err(err) => {
                    ck.fail(format!("{path}.n"), err.to_string());
                    CyclotomicNumber::zero()
                }
            }
        }
    }
}

fn decode_character(
    ck: &mut Checker,
    path: &str,
    raw: &RawCharacter,
    kind: CharacterKind,
    expected_len: usize,
    orders: &[u64],
) -> Character {
    let values: Vec<CyclotomicNumber> = raw
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| decode_value(ck, &format!("{path}.values[{i}]"), v))
        .collect();
    if values.len() != expected_len {
        ck.fail(
            format!("{path}.values"),
            format!("expected {expected_len} values, found {}", values.len()),
        );
    }
    match values.first().and_then(|v| v.as_integer()) {
        Some(d) if d.is_positive() => {}
        _ => ck.fail(format!("{path}.values[0]"), "degree must be a positive integer"),
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_algebraic_integer() {
            ck.fail(format!("{path}.values[{i}]"), "not an algebraic integer");
        }
        if let Some(&o) = orders.get(i) {
            if o % v.conductor() != 0 && !v.is_rational() {
                ck.fail(
                    format!("{path}.values[{i}]"),
                    format!("conductor {} does not divide element order {o}", v.conductor()),
                );
            }
        }
    }
    Character {
        name: raw.name.clone(),
        values,
        kind,
    }
}

fn build_table(raw: RawBundle) -> Result<CharacterTable, TableError> {
    let mut ck = Checker { violations: Vec::new() };
    let group_order = parse_uint(&mut ck, "group.order", &raw.group.order);
    let exponent = parse_uint(&mut ck, "group.exponent", &raw.group.exponent);

    let n = raw.classes.len();
    let mut classes = Vec::with_capacity(n);
    for (i, rc) in raw.classes.iter().enumerate() {
        let path = format!("classes[{i}]");
        if rc.order == 0 {
            ck.fail(format!("{path}.order"), "element order must be positive");
        }
        if !rc.name.starts_with(&rc.order.to_string())
            || !rc.name[rc.order.to_string().len().min(rc.name.len())..]
                .chars()
                .all(|ch| ch.is_ascii_lowercase())
        {
            ck.fail(
                format!("{path}.name"),
                format!("class name {:?} is not of the form <order><letters>", rc.name),
            );
        }
        let mut power_maps = BTreeMap::new();
        for (p, &img) in &rc.powermap {
            match p.parse::<u64>() {
                Ok(p) if crate::arith::is_prime(p) => {
                    power_maps.insert(p, img);
                }
                _ => ck.fail(format!("{path}.powermap.{p}"), "key is not a prime"),
            }
        }
        let centralizer = rc
            .centralizer
            .as_ref()
            .map(|s| parse_uint(&mut ck, &format!("{path}.centralizer"), s));
        classes.push(ConjugacyClass {
            name: rc.name.clone(),
            element_order: rc.order.max(1),
            power_maps,
            centralizer,
        });
    }

    // Identity class.
    match classes.first() {
        Some(c) if c.element_order == 1 && c.name == "1a" => {}
        _ => ck.fail("classes[0]", "first class must be \"1a\" of element order 1"),
    }
    let identities = classes.iter().filter(|c| c.element_order == 1).count();
    if identities != 1 {
        ck.fail("classes", format!("{identities} classes of element order 1"));
    }

    // Power maps, element orders and the group order / exponent.
    let order_primes: BTreeSet<u64> = classes
        .iter()
        .flat_map(|c| prime_divisors(c.element_order))
        .collect();
    let mut rest = group_order.clone();
    for &p in &order_primes {
        let bp = BigUint::from(p);
        if !(&rest % &bp).is_zero() {
            ck.fail(
                "group.order",
                format!("element order prime {p} does not divide the group order"),
            );
        }
        while !rest.is_zero() && (&rest % &bp).is_zero() {
            rest /= &bp;
        }
    }
    if !rest.is_one() {
        ck.fail(
            "group.order",
            format!("group order has prime factors ({rest}) not seen among element orders"),
        );
    }
    let lcm_orders = classes.iter().fold(1u64, |acc, c| lcm(acc, c.element_order));
    if BigUint::from(lcm_orders) != exponent {
        ck.fail(
            "group.exponent",
            format!("exponent {exponent} differs from lcm of element orders {lcm_orders}"),
        );
    }
    for (i, c) in classes.iter().enumerate() {
        for &p in &order_primes {
            if !c.power_maps.contains_key(&p) {
                ck.fail(format!("classes[{i}].powermap"), format!("missing {p}-power map"));
            }
        }
        for (&p, &img) in &c.power_maps {
            let path = format!("classes[{i}].powermap.{p}");
            if !order_primes.contains(&p) {
                ck.fail(&path, format!("prime {p} does not divide the group order"));
            }
            match classes.get(img) {
                None => ck.fail(&path, format!("class index {img} out of range")),
                Some(target) => {
                    let want = c.element_order / gcd(c.element_order, p);
                    if target.element_order != want {
                        ck.fail(
                            &path,
                            format!(
                                "class {} maps to {} of order {}, expected order {want}",
                                c.name, target.name, target.element_order
                            ),
                        );
                    }
                }
            }
        }
    }

    let orders: Vec<u64> = classes.iter().map(|c| c.element_order).collect();
    let ordinary: Vec<Character> = raw
        .ordinary
        .iter()
        .enumerate()
        .map(|(i, rc)| {
            decode_character(&mut ck, &format!("ordinary[{i}]"), rc, CharacterKind::Ordinary, n, &orders)
        })
        .collect();

    let mut brauer = BTreeMap::new();
    for (key, rb) in &raw.brauer {
        let path = format!("brauer.{key}");
        let p = match key.parse::<u64>() {
            Ok(p) if order_primes.contains(&p) => p,
            _ => {
                ck.fail(&path, "key is not a prime dividing the group order");
                continue;
            }
        };
        let expected: Vec<usize> = (0..n).filter(|&i| !orders[i].is_multiple_of(p)).collect();
        if rb.regular != expected {
            ck.fail(
                format!("{path}.regular"),
                format!("regular classes must be exactly the {p}-regular classes {expected:?}"),
            );
        }
        let reg_orders: Vec<u64> = rb.regular.iter().filter_map(|&i| orders.get(i).copied()).collect();
        let characters = rb
            .characters
            .iter()
            .enumerate()
            .map(|(i, rc)| {
                decode_character(
                    &mut ck,
                    &format!("{path}.characters[{i}]"),
                    rc,
                    CharacterKind::Brauer(p),
                    rb.regular.len(),
                    &reg_orders,
                )
            })
            .collect();
        brauer.insert(
            p,
            BrauerTable {
                prime: p,
                regular: rb.regular.clone(),
                characters,
            },
        );
    }

    if !ck.violations.is_empty() {
        return Err(TableError::Invalid(ck.violations));
    }
    Ok(CharacterTable {
        group_name: raw.group.name,
        group_order,
        exponent,
        classes,
        ordinary,
        brauer,
    })
}
