//! Partial augmentation tuples and the per-order case contexts built from them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::arith::divisors;
use crate::chartab::{Character, CharacterTable, TableError};
use crate::cyclo::CyclotomicNumber;

#[derive(Debug, Error)]
pub enum UnitsError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("partial augmentations of order {order} sum to {sum}, expected 1")]
    BadSum { order: u64, sum: i64 },
    #[error("class {class} cannot carry a partial augmentation for order {order}")]
    InadmissibleClass { class: String, order: u64 },
    #[error("no solution set cached for order {0}")]
    MissingOrder(u64),
}

/// Partial augmentations `nu_C` of a hypothetical unit of order `order`.
///
/// Only admissible classes (non-identity, element order dividing `order`) are
/// stored, all of them, zeros included. Ordering is lexicographic on the
/// `(class index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AugmentationTuple {
    order: u64,
    nu: BTreeMap<usize, i64>,
}

impl AugmentationTuple {
    /// Builds a tuple from nonzero entries; admissible classes not mentioned
    /// get zero.
    pub fn new(
        table: &CharacterTable,
        order: u64,
        entries: impl IntoIterator<Item = (usize, i64)>,
    ) -> Result<Self, UnitsError> {
        let mut nu: BTreeMap<usize, i64> = admissible_classes(table, order)
            .into_iter()
            .map(|c| (c, 0))
            .collect();
        for (c, v) in entries {
            match nu.get_mut(&c) {
                Some(slot) => *slot += v,
                None if v == 0 => {}
                None => {
                    return Err(UnitsError::InadmissibleClass {
                        class: table.class_name(c).to_string(),
                        order,
                    })
                }
            }
        }
        let sum: i64 = nu.values().sum();
        if sum != 1 {
            return Err(UnitsError::BadSum { order, sum });
        }
        Ok(Self { order, nu })
    }

    /// Build from values aligned with `admissible_classes(table, order)`.
    /// Callers guarantee the alignment and the sum.
    pub(crate) fn from_aligned(order: u64, classes: &[usize], values: &[i64]) -> Self {
        debug_assert_eq!(classes.len(), values.len());
        debug_assert_eq!(values.iter().sum::<i64>(), 1);
        Self {
            order,
            nu: classes.iter().copied().zip(values.iter().copied()).collect(),
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `nu` at a class index; zero off the admissible classes.
    pub fn get(&self, class: usize) -> i64 {
        self.nu.get(&class).copied().unwrap_or(0)
    }

    /// All admissible `(class, nu)` pairs in class order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.nu.iter().map(|(&c, &v)| (c, v))
    }

    pub fn values(&self) -> Vec<i64> {
        self.nu.values().copied().collect()
    }

    /// A single 1 on one class of elements of order exactly `order`.
    pub fn is_trivial_in(&self, table: &CharacterTable) -> bool {
        let mut ones = self.nu.iter().filter(|(_, &v)| v != 0);
        match (ones.next(), ones.next()) {
            (Some((&c, &1)), None) => table.order_of(c) == self.order,
            _ => false,
        }
    }

    /// Renders as `(nu_2a, nu_2b) = (4, -3)`.
    pub fn display(&self, table: &CharacterTable) -> String {
        let names: Vec<String> = self
            .nu
            .keys()
            .map(|&c| format!("nu_{}", table.class_name(c)))
            .collect();
        let vals: Vec<String> = self.nu.values().map(|v| v.to_string()).collect();
        format!("({}) = ({})", names.join(", "), vals.join(", "))
    }
}

/// Classes that may carry a nonzero partial augmentation for a unit of
/// order `k`: non-identity classes whose element order divides `k`.
pub fn admissible_classes(table: &CharacterTable, k: u64) -> Vec<usize> {
    table
        .classes_of_order_dividing(k)
        .into_iter()
        .filter(|&c| c != 0)
        .collect()
}

/// The tuples realized by group elements of order exactly `k`.
pub fn trivial_tuples(table: &CharacterTable, k: u64) -> Vec<AugmentationTuple> {
    let classes = admissible_classes(table, k);
    classes
        .iter()
        .enumerate()
        .filter(|&(_, &c)| table.order_of(c) == k)
        .map(|(i, _)| {
            let mut values = vec![0; classes.len()];
            values[i] = 1;
            AugmentationTuple::from_aligned(k, &classes, &values)
        })
        .collect()
}

/// `sum_C nu_C chi(C)`. Brauer characters reject p-singular classes with a
/// nonzero partial augmentation.
pub fn tuple_char_value(
    table: &CharacterTable,
    tuple: &AugmentationTuple,
    chi: &Character,
) -> Result<CyclotomicNumber, UnitsError> {
    let mut acc = CyclotomicNumber::zero();
    for (c, v) in tuple.entries() {
        if v == 0 {
            continue;
        }
        let x = table.value(chi, c)?;
        acc = &acc + &x.scale(&num_rational::BigRational::from_integer(v.into()));
    }
    Ok(acc)
}

/// Solutions found for one order, with the case indices each tuple
/// survived under.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionSet {
    pub order: u64,
    pub tuples: Vec<AugmentationTuple>,
    pub provenance: Vec<Vec<usize>>,
}

impl SolutionSet {
    pub fn new(order: u64) -> Self {
        Self {
            order,
            tuples: Vec::new(),
            provenance: Vec::new(),
        }
    }

    /// Set of tuples all attributed to one case.
    pub fn from_case(order: u64, case: usize, mut tuples: Vec<AugmentationTuple>) -> Self {
        tuples.sort();
        tuples.dedup();
        let provenance = vec![vec![case]; tuples.len()];
        Self {
            order,
            tuples,
            provenance,
        }
    }

    pub fn trivial(table: &CharacterTable, k: u64) -> Self {
        Self::from_case(k, 0, trivial_tuples(table, k))
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Union, keeping tuples sorted and merging provenance lists.
    pub fn merge(&mut self, other: &SolutionSet) {
        let mut map: BTreeMap<AugmentationTuple, Vec<usize>> = self
            .tuples
            .drain(..)
            .zip(self.provenance.drain(..))
            .collect();
        for (t, p) in other.tuples.iter().zip(&other.provenance) {
            let slot = map.entry(t.clone()).or_default();
            slot.extend(p);
            slot.sort_unstable();
            slot.dedup();
        }
        for (t, p) in map {
            self.tuples.push(t);
            self.provenance.push(p);
        }
    }

    pub fn nontrivial_count(&self, table: &CharacterTable) -> usize {
        self.tuples.iter().filter(|t| !t.is_trivial_in(table)).count()
    }

    pub fn all_trivial(&self, table: &CharacterTable) -> bool {
        self.nontrivial_count(table) == 0
    }
}

/// Partial augmentations fixed for the powers `u^d`, one tuple for each order
/// `m = k/d` with `1 < m < k`, keyed by `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseContext {
    pub order: u64,
    pub power_tuples: BTreeMap<u64, AugmentationTuple>,
}

impl CaseContext {
    /// Context of an actual group element in class `class`.
    pub fn of_class(table: &CharacterTable, class: usize) -> Result<Self, UnitsError> {
        let k = table.order_of(class);
        let mut power_tuples = BTreeMap::new();
        for m in proper_divisors(k) {
            let target = table.power_class(class, k / m)?;
            let t = AugmentationTuple::new(table, m, [(target, 1)])?;
            power_tuples.insert(m, t);
        }
        Ok(Self {
            order: k,
            power_tuples,
        })
    }
}

/// Divisors `m` of `k` with `1 < m < k`, ascending.
pub fn proper_divisors(k: u64) -> Vec<u64> {
    divisors(k).into_iter().filter(|&m| m > 1 && m < k).collect()
}

/// Every combination of cached solutions for the proper divisors of `k`,
/// addressable by index. Index order is lexicographic in
/// `(divisor ascending, tuple index)` with the smallest divisor most
/// significant.
#[derive(Debug, Clone)]
pub struct CaseContexts {
    order: u64,
    factors: Vec<(u64, Vec<AugmentationTuple>)>,
    count: Option<u64>,
}

impl CaseContexts {
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Number of contexts, or `None` if it overflows `u64`.
    pub fn count(&self) -> Option<u64> {
        self.count
    }

    /// Sizes of the cached sets in divisor order.
    pub fn factor_sizes(&self) -> Vec<(u64, usize)> {
        self.factors.iter().map(|(m, t)| (*m, t.len())).collect()
    }

    /// The context with the given index. Panics when out of range.
    pub fn get(&self, mut index: u64) -> CaseContext {
        let mut power_tuples = BTreeMap::new();
        for (m, tuples) in self.factors.iter().rev() {
            let n = tuples.len() as u64;
            power_tuples.insert(*m, tuples[(index % n) as usize].clone());
            index /= n;
        }
        assert_eq!(index, 0, "case index out of range");
        CaseContext {
            order: self.order,
            power_tuples,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = CaseContext> + '_ {
        (0..self.count.unwrap_or(u64::MAX)).map(move |i| self.get(i))
    }
}

/// Case contexts for order `k` from the solution sets cached for its proper
/// divisors.
pub fn case_contexts(
    k: u64,
    cache: &BTreeMap<u64, SolutionSet>,
) -> Result<CaseContexts, UnitsError> {
    let mut factors = Vec::new();
    let mut count = Some(1u64);
    for m in proper_divisors(k) {
        let set = cache.get(&m).ok_or(UnitsError::MissingOrder(m))?;
        count = count.and_then(|c| c.checked_mul(set.len() as u64));
        factors.push((m, set.tuples.clone()));
    }
    Ok(CaseContexts {
        order: k,
        factors,
        count,
    })
}
