//! Integer affine constraints `mu_l(u, chi, p) >= 0` and `mu_l in Z`.
//!
//! For a unit `u` of order `k`, a character `chi` (ordinary, or Brauer for a
//! prime not dividing `k`) and `l` in `0..k`,
//!
//! ```text
//! k * mu_l = sum_{d | k} Tr_{Q(zeta_k^d)/Q}( chi(u^d) zeta_k^(-d l) )
//! ```
//!
//! The `d = 1` term is linear in the unknown partial augmentations of `u`; the
//! other terms only involve the fixed tuples of the case context. Forms are
//! kept scaled by `k`, so each yields `form >= 0` and `form = 0 (mod k)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::gcd;
use crate::chartab::{Character, CharacterKind, CharacterTable, TableError};
use crate::units::{
    admissible_classes, proper_divisors, AugmentationTuple, CaseContext, SolutionSet, UnitsError,
};

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error("{kind} character {character}: prime divides the unit order {order}")]
    PrimeDividesOrder {
        kind: CharacterKind,
        character: String,
        order: u64,
    },
    #[error("trace {value} is not an integer ({character}, class {class})")]
    NonIntegral {
        character: String,
        class: String,
        value: BigRational,
    },
    #[error("coefficient does not fit in 64 bits ({0})")]
    Overflow(String),
    #[error("case context is for order {got}, expected {expected}")]
    ContextOrder { expected: u64, got: u64 },
    #[error("case context lacks a tuple for order {0}")]
    ContextMissing(u64),
    #[error("profile error: {0}")]
    Profile(String),
}

/// Which character and which `l` a form came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormSource {
    pub kind: CharacterKind,
    pub character: String,
    pub l: u64,
}

impl fmt::Display for FormSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CharacterKind::Ordinary => write!(f, "{} l={}", self.character, self.l),
            CharacterKind::Brauer(p) => write!(f, "{} mod {} l={}", self.character, p, self.l),
        }
    }
}

/// `sum_C coeffs[C] * nu_C + constant`, standing for `scale * mu_l`.
/// Only nonzero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineForm {
    pub coeffs: BTreeMap<usize, i64>,
    pub constant: i64,
    pub scale: u64,
}

impl AffineForm {
    pub fn coeff(&self, class: usize) -> i64 {
        self.coeffs.get(&class).copied().unwrap_or(0)
    }

    /// The scaled value at a tuple.
    pub fn eval(&self, tuple: &AugmentationTuple) -> i128 {
        self.coeffs
            .iter()
            .map(|(&c, &a)| a as i128 * tuple.get(c) as i128)
            .sum::<i128>()
            + self.constant as i128
    }

    /// Whether the tuple makes this `mu` a nonnegative integer.
    pub fn admits(&self, tuple: &AugmentationTuple) -> bool {
        let v = self.eval(tuple);
        v >= 0 && v % self.scale as i128 == 0
    }

    /// Renders as `1/k (a nu_C + ... + c)`.
    pub fn display(&self, table: &CharacterTable) -> String {
        let mut s = String::new();
        for (&c, &a) in &self.coeffs {
            push_term(&mut s, a, &format!("nu_{}", table.class_name(c)));
        }
        if self.constant != 0 || s.is_empty() {
            push_term(&mut s, self.constant, "");
        }
        format!("1/{} ({})", self.scale, s)
    }
}

fn push_term(s: &mut String, a: i64, var: &str) {
    let mag = a.unsigned_abs();
    if s.is_empty() {
        if a < 0 {
            s.push('-');
        }
    } else {
        s.push_str(if a < 0 { " - " } else { " + " });
    }
    if var.is_empty() {
        s.push_str(&mag.to_string());
    } else if mag == 1 {
        s.push_str(var);
    } else {
        s.push_str(&format!("{mag} {var}"));
    }
}

/// `mu_l` evaluated at a tuple, unscaled.
pub fn eval_mu(form: &AffineForm, tuple: &AugmentationTuple) -> BigRational {
    BigRational::new(BigInt::from(form.eval(tuple)), BigInt::from(form.scale))
}

/// All forms for one order and one case.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub order: u64,
    pub variables: Vec<usize>,
    pub forms: Vec<AffineForm>,
    pub sources: Vec<FormSource>,
}

type ShapeKey = (BTreeMap<usize, i64>, i64, BTreeMap<u64, BTreeMap<usize, i64>>);

/// Context-independent data of one `mu_l` form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuTemplate {
    pub source: FormSource,
    order: u64,
    coeffs: BTreeMap<usize, i64>,
    degree: i64,
    /// For each proper divisor order `m`, the trace contributed by a unit in
    /// each admissible class of order dividing `m`.
    divisor_traces: BTreeMap<u64, BTreeMap<usize, i64>>,
}

impl MuTemplate {
    pub fn new(
        table: &CharacterTable,
        chi: &Character,
        k: u64,
        l: u64,
    ) -> Result<Self, ConstraintError> {
        let mut traces = TraceCache::default();
        Self::build(table, chi, k, l, &mut traces)
    }

    fn build(
        table: &CharacterTable,
        chi: &Character,
        k: u64,
        l: u64,
        traces: &mut TraceCache,
    ) -> Result<Self, ConstraintError> {
        if let CharacterKind::Brauer(p) = chi.kind {
            if gcd(p, k) != 1 {
                return Err(ConstraintError::PrimeDividesOrder {
                    kind: chi.kind,
                    character: chi.name.clone(),
                    order: k,
                });
            }
        }
        let l = l % k;
        let mut coeffs = BTreeMap::new();
        for c in admissible_classes(table, k) {
            let t = traces.get(table, chi, c, k, l)?;
            if t != 0 {
                coeffs.insert(c, t);
            }
        }
        let mut divisor_traces = BTreeMap::new();
        for m in proper_divisors(k) {
            let mut row = BTreeMap::new();
            for c in admissible_classes(table, m) {
                row.insert(c, traces.get(table, chi, c, m, l % m)?);
            }
            divisor_traces.insert(m, row);
        }
        let degree = table
            .value(chi, 0)?
            .as_integer()
            .and_then(|d| d.to_i64())
            .ok_or_else(|| ConstraintError::Overflow(format!("degree of {}", chi.name)))?;
        Ok(Self {
            source: FormSource {
                kind: chi.kind,
                character: chi.name.clone(),
                l,
            },
            order: k,
            coeffs,
            degree,
            divisor_traces,
        })
    }

    /// Key that is equal exactly when two templates give the same form in
    /// every case context.
    fn shape(&self) -> ShapeKey {
        (
            self.coeffs.clone(),
            self.degree,
            self.divisor_traces.clone(),
        )
    }

    /// Form whose constant is at least the constant of every case drawn
    /// from `cache`; its nonnegativity region contains all of theirs.
    pub fn relaxed(&self, cache: &BTreeMap<u64, SolutionSet>) -> Result<AffineForm, ConstraintError> {
        let mut constant = self.degree as i128;
        for (m, row) in &self.divisor_traces {
            let set = cache.get(m).ok_or(ConstraintError::ContextMissing(*m))?;
            let best = set
                .tuples
                .iter()
                .map(|t| {
                    t.entries()
                        .map(|(c, v)| v as i128 * row.get(&c).copied().unwrap_or(0) as i128)
                        .sum::<i128>()
                })
                .max();
            // An empty divisor set admits no case at all; any constant works.
            constant += best.unwrap_or(0);
        }
        let constant = i64::try_from(constant)
            .map_err(|_| ConstraintError::Overflow(format!("constant of {}", self.source)))?;
        Ok(AffineForm {
            coeffs: self.coeffs.clone(),
            constant,
            scale: self.order,
        })
    }

    pub fn instantiate(&self, ctx: &CaseContext) -> Result<AffineForm, ConstraintError> {
        if ctx.order != self.order {
            return Err(ConstraintError::ContextOrder {
                expected: self.order,
                got: ctx.order,
            });
        }
        let mut constant = self.degree as i128;
        for (m, row) in &self.divisor_traces {
            let tuple = ctx
                .power_tuples
                .get(m)
                .ok_or(ConstraintError::ContextMissing(*m))?;
            for (c, v) in tuple.entries() {
                constant += v as i128 * row.get(&c).copied().unwrap_or(0) as i128;
            }
        }
        let constant = i64::try_from(constant)
            .map_err(|_| ConstraintError::Overflow(format!("constant of {}", self.source)))?;
        Ok(AffineForm {
            coeffs: self.coeffs.clone(),
            constant,
            scale: self.order,
        })
    }
}

/// `Tr_{Q(zeta_m)/Q}(chi(c) zeta_m^-l)` memoized per character.
#[derive(Default)]
struct TraceCache {
    map: HashMap<(CharacterKind, String, usize, u64, u64), i64>,
}

impl TraceCache {
    fn get(
        &mut self,
        table: &CharacterTable,
        chi: &Character,
        class: usize,
        m: u64,
        l: u64,
    ) -> Result<i64, ConstraintError> {
        let key = (chi.kind, chi.name.clone(), class, m, l);
        if let Some(&v) = self.map.get(&key) {
            return Ok(v);
        }
        let value = table.value(chi, class)?;
        let t = value
            .twisted_trace(m, -(l as i64))
            .expect("class order divides m, so the value's conductor does");
        if !t.is_integer() {
            return Err(ConstraintError::NonIntegral {
                character: chi.name.clone(),
                class: table.class_name(class).to_string(),
                value: t,
            });
        }
        let v = t
            .to_integer()
            .to_i64()
            .ok_or_else(|| ConstraintError::Overflow(format!("trace for {}", chi.name)))?;
        self.map.insert(key, v);
        Ok(v)
    }
}

/// The form `k * mu_l(u, chi)` for a unit of order `k` in context `ctx`.
pub fn mu_form(
    table: &CharacterTable,
    chi: &Character,
    k: u64,
    l: u64,
    ctx: &CaseContext,
) -> Result<AffineForm, ConstraintError> {
    MuTemplate::new(table, chi, k, l)?.instantiate(ctx)
}

/// Which characters and which `l` to use for one order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntry {
    #[serde(rename = "char")]
    pub character: String,
    /// `"ordinary"` or `"brauer:p"`.
    pub table: String,
    #[serde(rename = "ls")]
    pub l: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    /// Orders without entries use every character and every `l`, and cases
    /// left unbounded are retried that way.
    Full,
    /// Orders without entries get no constraints; no retries.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default = "default_profile_name")]
    pub name: String,
    pub fallback: Fallback,
    #[serde(default)]
    pub orders: BTreeMap<u64, Vec<ProfileEntry>>,
}

fn default_profile_name() -> String {
    "custom".into()
}

/// Selection of `(character, l)` pairs per order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintProfile {
    /// Every ordinary character, every Brauer character for primes not
    /// dividing the order, every `l`.
    Full,
    Selected(ProfileSpec),
}

/// `(order, [(character, table kind, l values)])`.
type ProfileTable = &'static [(u64, &'static [(&'static str, &'static str, &'static [u64])])];

const PAPER_SUZ: ProfileTable = &[
    (2, &[("chi2", "ordinary", &[0, 1]), ("chi3", "brauer:3", &[0, 1])]),
    (
        3,
        &[
            ("chi2", "ordinary", &[0, 1]),
            ("chi3", "ordinary", &[0, 1]),
            ("chi2", "brauer:2", &[0]),
            ("chi7", "brauer:2", &[0]),
        ],
    ),
    (
        5,
        &[
            ("chi2", "ordinary", &[0, 1]),
            ("chi2", "brauer:2", &[0]),
            ("chi2", "brauer:3", &[0]),
        ],
    ),
    (13, &[("chi2", "brauer:2", &[1, 2]), ("chi10", "brauer:3", &[1])]),
    (
        22,
        &[
            ("chi2", "ordinary", &[0, 1, 11]),
            ("chi3", "ordinary", &[0, 1, 11]),
            ("chi4", "ordinary", &[0, 11]),
        ],
    ),
    (
        26,
        &[
            ("chi2", "ordinary", &[0, 1, 13]),
            ("chi3", "ordinary", &[0, 13]),
            ("chi4", "ordinary", &[0]),
            ("chi31", "ordinary", &[1, 4]),
        ],
    ),
    (
        33,
        &[
            ("chi2", "ordinary", &[0, 3, 11]),
            ("chi3", "ordinary", &[0, 11]),
            ("chi4", "ordinary", &[0, 11]),
        ],
    ),
    (
        35,
        &[
            ("chi2", "ordinary", &[0, 5, 7]),
            ("chi3", "ordinary", &[0, 7]),
            ("chi4", "ordinary", &[0]),
            ("chi2", "brauer:2", &[7]),
            ("chi2", "brauer:3", &[0]),
            ("chi7", "brauer:2", &[0]),
        ],
    ),
    (
        39,
        &[
            ("chi2", "ordinary", &[0, 1, 13]),
            ("chi3", "ordinary", &[0, 1, 13]),
            ("chi4", "ordinary", &[0]),
            ("chi31", "ordinary", &[1, 3]),
        ],
    ),
    (
        55,
        &[
            ("chi2", "ordinary", &[0, 1, 11]),
            ("chi3", "ordinary", &[0, 1, 11]),
        ],
    ),
    (
        65,
        &[
            ("chi2", "ordinary", &[0, 13]),
            ("chi3", "ordinary", &[0, 13]),
            ("chi31", "ordinary", &[1, 10]),
        ],
    ),
    (77, &[("chi2", "ordinary", &[0]), ("chi2", "brauer:2", &[0])]),
    (91, &[("chi2", "ordinary", &[0, 13])]),
    (143, &[("chi3", "brauer:3", &[0]), ("chi4", "ordinary", &[0])]),
];

impl ConstraintProfile {
    /// The hand-picked character selection for the Suzuki group.
    pub fn paper_suz() -> Self {
        let orders = PAPER_SUZ
            .iter()
            .map(|(k, entries)| {
                let entries = entries
                    .iter()
                    .map(|(c, t, ls)| ProfileEntry {
                        character: c.to_string(),
                        table: t.to_string(),
                        l: ls.to_vec(),
                    })
                    .collect();
                (*k, entries)
            })
            .collect();
        Self::Selected(ProfileSpec {
            name: "paper-suz".into(),
            fallback: Fallback::Full,
            orders,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Full => "full",
            Self::Selected(spec) => &spec.name,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Full => serde_json::json!({"name": "full", "orders": {}, "fallback": "full"}),
            Self::Selected(spec) => serde_json::to_value(spec).expect("plain data"),
        }
    }

    /// Whether unbounded cases may be retried with the full profile.
    pub fn escalates(&self) -> bool {
        match self {
            Self::Full => false,
            Self::Selected(spec) => spec.fallback == Fallback::Full,
        }
    }

    /// Profile file text:
    /// `{"orders": {"22": [{"char": "chi2", "table": "ordinary", "ls": [0, 1]}]}, "fallback": "full"}`.
    pub fn from_json(text: &str) -> Result<Self, ConstraintError> {
        let spec: ProfileSpec =
            serde_json::from_str(text).map_err(|e| ConstraintError::Profile(e.to_string()))?;
        for entries in spec.orders.values() {
            for e in entries {
                parse_kind(&e.table)?;
            }
        }
        Ok(Self::Selected(spec))
    }

    /// `builtin:paper-suz`, `builtin:full`, or a path to a JSON profile.
    pub fn resolve(name: &str) -> Result<Self, ConstraintError> {
        match name {
            "builtin:paper-suz" | "paper-suz" => Ok(Self::paper_suz()),
            "builtin:full" | "full" => Ok(Self::Full),
            path => {
                let text = std::fs::read_to_string(Path::new(path))
                    .map_err(|e| ConstraintError::Profile(format!("{path}: {e}")))?;
                let mut profile = Self::from_json(&text)?;
                if let Self::Selected(spec) = &mut profile {
                    if spec.name == default_profile_name() {
                        spec.name = path.to_string();
                    }
                }
                Ok(profile)
            }
        }
    }

    /// Forms to build for order `k`, plus notes on skipped entries.
    pub fn template(
        &self,
        table: &CharacterTable,
        k: u64,
    ) -> Result<SystemTemplate, ConstraintError> {
        let mut traces = TraceCache::default();
        let mut templates: Vec<MuTemplate> = Vec::new();
        let mut notes = Vec::new();
        let mut seen = HashSet::new();
        let mut push = |t: MuTemplate| {
            if seen.insert(t.shape()) {
                templates.push(t);
            }
        };
        let selected = match self {
            Self::Selected(spec) => match spec.orders.get(&k) {
                Some(entries) => Some(entries),
                None if spec.fallback == Fallback::None => {
                    notes.push(format!("profile {} has no entries for order {k}", spec.name));
                    Some(&EMPTY)
                }
                None => None,
            },
            Self::Full => None,
        };
        match selected {
            Some(entries) => {
                for e in entries {
                    let kind = parse_kind(&e.table)?;
                    let chi = table.character(kind, &e.character)?;
                    if let CharacterKind::Brauer(p) = kind {
                        if k.is_multiple_of(p) {
                            notes.push(format!(
                                "skipped {} mod {p}: {p} divides {k}",
                                e.character
                            ));
                            continue;
                        }
                    }
                    for &l in &e.l {
                        push(MuTemplate::build(table, chi, k, l, &mut traces)?);
                    }
                }
            }
            None => {
                for chi in full_characters(table, k) {
                    for l in 0..k {
                        push(MuTemplate::build(table, chi, k, l, &mut traces)?);
                    }
                }
            }
        }
        Ok(SystemTemplate {
            order: k,
            variables: admissible_classes(table, k),
            templates,
            notes,
        })
    }
}

static EMPTY: Vec<ProfileEntry> = Vec::new();

fn full_characters(table: &CharacterTable, k: u64) -> Vec<&Character> {
    let mut out: Vec<&Character> = table.ordinary.iter().collect();
    for (p, bt) in &table.brauer {
        if !k.is_multiple_of(*p) {
            out.extend(bt.characters.iter());
        }
    }
    out
}

pub fn parse_kind(s: &str) -> Result<CharacterKind, ConstraintError> {
    if s == "ordinary" {
        return Ok(CharacterKind::Ordinary);
    }
    s.strip_prefix("brauer:")
        .and_then(|p| p.parse().ok())
        .map(CharacterKind::Brauer)
        .ok_or_else(|| ConstraintError::Profile(format!("unknown table kind {s:?}")))
}

/// Precomputed forms for one order; instantiated once per case context.
#[derive(Debug, Clone)]
pub struct SystemTemplate {
    pub order: u64,
    pub variables: Vec<usize>,
    pub templates: Vec<MuTemplate>,
    pub notes: Vec<String>,
}

impl SystemTemplate {
    pub fn instantiate(&self, ctx: &CaseContext) -> Result<ConstraintSystem, ConstraintError> {
        let mut forms = Vec::with_capacity(self.templates.len());
        let mut sources = Vec::with_capacity(self.templates.len());
        for t in &self.templates {
            forms.push(t.instantiate(ctx)?);
            sources.push(t.source.clone());
        }
        Ok(ConstraintSystem {
            order: self.order,
            variables: self.variables.clone(),
            forms,
            sources,
        })
    }
}

impl SystemTemplate {
    /// A system containing every case system built from `cache`, used to
    /// derive one bounding box per order.
    pub fn relaxation(
        &self,
        cache: &BTreeMap<u64, SolutionSet>,
    ) -> Result<ConstraintSystem, ConstraintError> {
        let mut forms = Vec::with_capacity(self.templates.len());
        let mut sources = Vec::with_capacity(self.templates.len());
        for t in &self.templates {
            forms.push(t.relaxed(cache)?);
            sources.push(t.source.clone());
        }
        Ok(ConstraintSystem {
            order: self.order,
            variables: self.variables.clone(),
            forms,
            sources,
        })
    }
}

/// All forms the profile selects for order `k` in one case.
pub fn build_system(
    table: &CharacterTable,
    k: u64,
    ctx: &CaseContext,
    profile: &ConstraintProfile,
) -> Result<ConstraintSystem, ConstraintError> {
    profile.template(table, k)?.instantiate(ctx)
}
