//! Exact integer solutions of a constraint system.
//!
//! The sum condition `sum nu = 1` removes one variable. Fourier-Motzkin
//! elimination over the rationals then bounds each variable, and a
//! depth-first search with interval propagation lists every integer point
//! satisfying all forms, including the divisibility conditions.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::constraints::ConstraintSystem;
use crate::units::{AugmentationTuple, SolutionSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("variable {variable} is unbounded by the selected forms")]
    Unbounded { variable: usize },
    #[error("search box has {volume} points, above the cap of {cap}")]
    BoxTooLarge { volume: u128, cap: u128 },
    #[error("search exceeded {0} nodes")]
    NodeLimit(u64),
    #[error("bound does not fit in 64 bits")]
    Overflow,
}

/// Integer bounds per variable, aligned with `ConstraintSystem::variables`.
/// `infeasible` means the real relaxation is already empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Vec<Option<i64>>,
    pub upper: Vec<Option<i64>>,
    pub infeasible: bool,
}

impl Bounds {
    pub fn is_bounded(&self) -> bool {
        self.infeasible
            || self
                .lower
                .iter()
                .zip(&self.upper)
                .all(|(l, u)| l.is_some() && u.is_some())
    }

    /// Number of integer points on the free variables (all but the last).
    pub fn free_volume(&self) -> Option<u128> {
        let n = self.lower.len();
        let mut vol: u128 = 1;
        for i in 0..n.saturating_sub(1) {
            let (l, u) = (self.lower[i]?, self.upper[i]?);
            let width = if u < l { 0 } else { (u as i128 - l as i128 + 1) as u128 };
            vol = vol.checked_mul(width)?;
        }
        Some(vol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Cap on `positive * negative` row pairs per elimination step; above it
    /// only the rows closest to the origin are combined. Dropping rows can
    /// only loosen bounds.
    pub pair_cap: usize,
    /// Rows used in the first bounding attempt; the set grows fourfold while
    /// a variable stays unbounded.
    pub first_rows: usize,
    /// Search nodes before giving up.
    pub node_limit: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pair_cap: 200_000,
            first_rows: 48,
            node_limit: 50_000_000,
        }
    }
}

/// `a . x + c >= 0` over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Row {
    a: Vec<BigInt>,
    c: BigInt,
}

impl Row {
    fn normalize(&mut self) {
        let g = self
            .a
            .iter()
            .chain(std::iter::once(&self.c))
            .fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_zero() && !g.is_one() {
            for x in &mut self.a {
                *x /= &g;
            }
            self.c /= &g;
        }
    }

    fn max_abs(&self) -> BigInt {
        self.a.iter().map(|x| x.abs()).max().unwrap_or_default()
    }
}

/// Rows over the variables other than `w`, after substituting
/// `x_w = 1 - sum_{i != w} x_i`. The remaining variables keep their order.
fn substituted_rows(system: &ConstraintSystem, w: usize) -> Vec<Row> {
    let vars = &system.variables;
    system
        .forms
        .iter()
        .map(|f| {
            let aw = BigInt::from(f.coeff(vars[w]));
            let a = vars
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != w)
                .map(|(_, &c)| BigInt::from(f.coeff(c)) - &aw)
                .collect();
            Row {
                a,
                c: BigInt::from(f.constant) + aw,
            }
        })
        .collect()
}

/// Drops duplicate rows, keeps the tightest of each direction, and checks
/// rows without variables. Returns `None` if some row is violated outright.
fn tidy(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut best: HashMap<Vec<BigInt>, BigInt> = HashMap::new();
    let mut order = Vec::new();
    for mut r in rows {
        r.normalize();
        if r.a.iter().all(Zero::is_zero) {
            if r.c.is_negative() {
                return None;
            }
            continue;
        }
        match best.get_mut(&r.a) {
            Some(c) => {
                if r.c < *c {
                    *c = r.c;
                }
            }
            None => {
                order.push(r.a.clone());
                best.insert(r.a, r.c);
            }
        }
    }
    Some(
        order
            .into_iter()
            .map(|a| {
                let c = best.remove(&a).expect("inserted above");
                Row { a, c }
            })
            .collect(),
    )
}

/// Keeps the `keep` rows with smallest `c / max|a|`, i.e. nearest the
/// origin in the sup norm.
fn closest(mut rows: Vec<Row>, keep: usize) -> Vec<Row> {
    if rows.len() <= keep && keep != usize::MAX {
        return rows;
    }
    let mut keyed: Vec<(BigInt, Row)> = rows.drain(..).map(|r| (r.max_abs(), r)).collect();
    keyed.sort_by(|(ma, ra), (mb, rb)| (&ra.c * mb).cmp(&(&rb.c * ma)));
    keyed.truncate(keep);
    keyed.into_iter().map(|(_, r)| r).collect()
}

fn eliminate(rows: Vec<Row>, j: usize, pair_cap: usize) -> Vec<Row> {
    let (mut pos, mut neg, mut out) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if r.a[j].is_positive() {
            pos.push(r);
        } else if r.a[j].is_negative() {
            neg.push(r);
        } else {
            out.push(r);
        }
    }
    if pos.len().saturating_mul(neg.len()) > pair_cap {
        let side = (pair_cap as f64).sqrt() as usize;
        pos = closest(pos, side.max(1));
        neg = closest(neg, side.max(1));
    }
    for p in &pos {
        for q in &neg {
            let (sp, sq) = (p.a[j].clone(), -q.a[j].clone());
            let a = p
                .a
                .iter()
                .zip(&q.a)
                .map(|(x, y)| x * &sq + y * &sp)
                .collect();
            out.push(Row {
                a,
                c: &p.c * &sq + &q.c * &sp,
            });
        }
    }
    out
}

/// Rational bounds on variable `v` of `rows` after eliminating the others,
/// rounded inward to integers. `None` marks an infeasible relaxation.
fn bound_one(mut rows: Vec<Row>, v: usize, pair_cap: usize) -> Option<(Option<BigInt>, Option<BigInt>)> {
    let n = rows.first().map_or(0, |r| r.a.len());
    let mut alive: Vec<usize> = (0..n).filter(|&i| i != v).collect();
    rows = tidy(rows)?;
    while !alive.is_empty() {
        // Cheapest elimination first.
        let (pick, _) = alive
            .iter()
            .enumerate()
            .map(|(idx, &j)| {
                let p = rows.iter().filter(|r| r.a[j].is_positive()).count();
                let q = rows.iter().filter(|r| r.a[j].is_negative()).count();
                (idx, p * q)
            })
            .min_by_key(|&(_, cost)| cost)
            .expect("nonempty");
        let j = alive.remove(pick);
        rows = tidy(eliminate(rows, j, pair_cap))?;
    }
    let (mut lo, mut hi): (Option<BigInt>, Option<BigInt>) = (None, None);
    for r in rows {
        let a = &r.a[v];
        if a.is_positive() {
            let b = (-&r.c).div_ceil(a);
            if lo.as_ref().is_none_or(|l| b > *l) {
                lo = Some(b);
            }
        } else if a.is_negative() {
            let b = r.c.div_floor(&(-a));
            if hi.as_ref().is_none_or(|h| b < *h) {
                hi = Some(b);
            }
        }
    }
    if let (Some(l), Some(h)) = (&lo, &hi) {
        if l > h {
            return None;
        }
    }
    Some((lo, hi))
}

fn to_i64(x: Option<BigInt>) -> Result<Option<i64>, SolverError> {
    x.map(|b| b.to_i64().ok_or(SolverError::Overflow)).transpose()
}

/// Integer bounds for every variable from the real relaxation.
pub fn fm_bounds(system: &ConstraintSystem) -> Bounds {
    fm_bounds_with(system, &SolverOptions::default()).unwrap_or_else(|_| Bounds {
        lower: vec![None; system.variables.len()],
        upper: vec![None; system.variables.len()],
        infeasible: false,
    })
}

pub fn fm_bounds_with(system: &ConstraintSystem, opts: &SolverOptions) -> Result<Bounds, SolverError> {
    let n = system.variables.len();
    let infeasible = Bounds {
        lower: vec![None; n],
        upper: vec![None; n],
        infeasible: true,
    };
    if n == 0 {
        return Ok(infeasible);
    }
    if n == 1 {
        let ok = system
            .forms
            .iter()
            .all(|f| f.coeff(system.variables[0]) + f.constant >= 0);
        return Ok(if ok {
            Bounds {
                lower: vec![Some(1)],
                upper: vec![Some(1)],
                infeasible: false,
            }
        } else {
            infeasible
        });
    }
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for v in 0..n {
        let w = if v == n - 1 { 0 } else { n - 1 };
        let pos = if v > w { v - 1 } else { v };
        let rows = match tidy(substituted_rows(system, w)) {
            Some(rows) => rows,
            None => return Ok(infeasible),
        };
        // Large systems: try the rows nearest the origin first and widen
        // until the variable is bounded. Any subset gives sound bounds.
        let ranked = closest(rows, usize::MAX);
        let mut take = opts.first_rows.max(1);
        let (lo, hi) = loop {
            let subset = ranked[..take.min(ranked.len())].to_vec();
            match bound_one(subset, pos, opts.pair_cap) {
                None => return Ok(infeasible),
                Some((Some(lo), Some(hi))) => break (Some(lo), Some(hi)),
                Some(partial) if take >= ranked.len() => break partial,
                Some(_) => take *= 4,
            }
        };
        lower.push(to_i64(lo)?);
        upper.push(to_i64(hi)?);
    }
    Ok(Bounds {
        lower,
        upper,
        infeasible: false,
    })
}

/// Every integer tuple satisfying the system.
pub fn enumerate(system: &ConstraintSystem) -> Result<SolutionSet, SolverError> {
    enumerate_with(system, &SolverOptions::default())
}

pub fn enumerate_with(
    system: &ConstraintSystem,
    opts: &SolverOptions,
) -> Result<SolutionSet, SolverError> {
    let bounds = fm_bounds_with(system, opts)?;
    enumerate_within(system, &bounds, opts)
}

/// Like [`enumerate`] but searching inside caller-supplied bounds, which
/// must contain every solution (for instance bounds of a relaxation).
pub fn enumerate_within(
    system: &ConstraintSystem,
    bounds: &Bounds,
    opts: &SolverOptions,
) -> Result<SolutionSet, SolverError> {
    if bounds.infeasible {
        return Ok(SolutionSet::new(system.order));
    }
    let n = system.variables.len();
    for i in 0..n - 1 {
        if bounds.lower[i].is_none() || bounds.upper[i].is_none() {
            return Err(SolverError::Unbounded {
                variable: system.variables[i],
            });
        }
    }
    let mut search = Search::new(system, bounds, opts.node_limit);
    search.run()?;
    let tuples = search
        .found
        .iter()
        .map(|vals| AugmentationTuple::from_aligned(system.order, &system.variables, vals))
        .collect();
    Ok(SolutionSet::from_case(system.order, 0, tuples))
}

/// Dense integer row over the free variables for the search.
struct SearchRow {
    a: Vec<i128>,
    c: i128,
    modular: bool,
}

struct Search {
    k: i128,
    free: usize,
    lo: Vec<i128>,
    hi: Vec<i128>,
    rows: Vec<SearchRow>,
    /// `rest_max[r][i]`: max of `sum_{j >= i} a_rj x_j` over the box.
    rest_max: Vec<Vec<i128>>,
    /// Rows whose last nonzero coefficient sits at each depth.
    finishing: Vec<Vec<usize>>,
    nodes: u64,
    node_limit: u64,
    found: Vec<Vec<i64>>,
}

impl Search {
    fn new(system: &ConstraintSystem, bounds: &Bounds, node_limit: u64) -> Self {
        let n = system.variables.len();
        let free = n - 1;
        let last = system.variables[n - 1];
        let mut rows = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for f in &system.forms {
            // Substitute the last variable: x_last = 1 - sum of the others.
            let al = f.coeff(last) as i128;
            let a: Vec<i128> = system.variables[..free]
                .iter()
                .map(|&c| f.coeff(c) as i128 - al)
                .collect();
            let c = f.constant as i128 + al;
            if seen.insert((a.clone(), c)) {
                rows.push(SearchRow { a, c, modular: true });
            }
        }
        // Bounds of the eliminated variable as plain inequalities.
        if let Some(l) = bounds.lower[n - 1] {
            rows.push(SearchRow {
                a: vec![-1; free],
                c: 1 - l as i128,
                modular: false,
            });
        }
        if let Some(u) = bounds.upper[n - 1] {
            rows.push(SearchRow {
                a: vec![1; free],
                c: u as i128 - 1,
                modular: false,
            });
        }
        let lo: Vec<i128> = bounds.lower[..free].iter().map(|x| x.unwrap() as i128).collect();
        let hi: Vec<i128> = bounds.upper[..free].iter().map(|x| x.unwrap() as i128).collect();
        let mut rest_max = Vec::with_capacity(rows.len());
        let mut finishing = vec![Vec::new(); free + 1];
        for (r, row) in rows.iter().enumerate() {
            let mut suffix = vec![0i128; free + 1];
            for i in (0..free).rev() {
                let a = row.a[i];
                suffix[i] = suffix[i + 1] + (a * lo[i]).max(a * hi[i]);
            }
            rest_max.push(suffix);
            let last_nz = row.a.iter().rposition(|&x| x != 0).map_or(0, |p| p + 1);
            finishing[last_nz].push(r);
        }
        Self {
            k: system.order as i128,
            free,
            lo,
            hi,
            rows,
            rest_max,
            finishing,
            nodes: 0,
            node_limit,
            found: Vec::new(),
        }
    }

    fn row_ok(&self, r: usize, value: i128) -> bool {
        value >= 0 && (!self.rows[r].modular || value % self.k == 0)
    }

    fn run(&mut self) -> Result<(), SolverError> {
        let sums: Vec<i128> = self.rows.iter().map(|r| r.c).collect();
        if self.finishing[0].iter().any(|&r| !self.row_ok(r, sums[r])) {
            return Ok(());
        }
        let mut x = Vec::with_capacity(self.free);
        self.dfs(0, &mut x, sums)
    }

    fn dfs(&mut self, i: usize, x: &mut Vec<i64>, sums: Vec<i128>) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(SolverError::NodeLimit(self.node_limit));
        }
        if i == self.free {
            let mut vals = x.clone();
            vals.push(1 - x.iter().sum::<i64>());
            self.found.push(vals);
            return Ok(());
        }
        let (mut lo, mut hi) = (self.lo[i], self.hi[i]);
        for (r, row) in self.rows.iter().enumerate() {
            let a = row.a[i];
            if a == 0 {
                continue;
            }
            let slack = sums[r] + self.rest_max[r][i + 1];
            if a > 0 {
                lo = lo.max(div_ceil(-slack, a));
            } else {
                hi = hi.min(div_floor(slack, -a));
            }
            if lo > hi {
                return Ok(());
            }
        }
        for v in lo..=hi {
            let next: Vec<i128> = sums
                .iter()
                .zip(&self.rows)
                .map(|(s, row)| s + row.a[i] * v)
                .collect();
            if self.finishing[i + 1]
                .iter()
                .all(|&r| self.row_ok(r, next[r]))
            {
                x.push(v as i64);
                self.dfs(i + 1, x, next)?;
                x.pop();
            }
        }
        Ok(())
    }
}

/// Floor division for a positive divisor.
fn div_floor(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

/// Brute-force scan of every integer point in the box on all variables but
/// the last, which is fixed by the sum and must also lie in its box range.
/// Shares nothing with [`enumerate`] beyond the input system.
pub fn naive_enumerate(
    system: &ConstraintSystem,
    bounds: &Bounds,
    cap: u128,
) -> Result<SolutionSet, SolverError> {
    Ok(naive_enumerate_cases(&[system], bounds, cap)?.remove(0))
}

/// [`naive_enumerate`] for many systems over one box. Systems whose forms
/// have the same coefficients share a single scan of the box; each point is
/// matched against their constants by residue first.
pub fn naive_enumerate_cases(
    systems: &[&ConstraintSystem],
    bounds: &Bounds,
    cap: u128,
) -> Result<Vec<SolutionSet>, SolverError> {
    let mut out: Vec<SolutionSet> = systems.iter().map(|s| SolutionSet::new(s.order)).collect();
    let Some(first) = systems.first() else {
        return Ok(out);
    };
    let n = first.variables.len();
    if n == 0 || bounds.infeasible {
        return Ok(out);
    }
    let volume = bounds.free_volume().ok_or(SolverError::Unbounded {
        variable: first.variables[0],
    })?;
    if volume > cap {
        return Err(SolverError::BoxTooLarge { volume, cap });
    }
    let (last_lo, last_hi) = match (bounds.lower[n - 1], bounds.upper[n - 1]) {
        (Some(l), Some(u)) => (l, u),
        _ => {
            return Err(SolverError::Unbounded {
                variable: first.variables[n - 1],
            })
        }
    };
    if volume == 0 {
        return Ok(out);
    }

    // Group by (order, variables, coefficient rows).
    type Shape = (u64, Vec<usize>, Vec<Vec<i64>>);
    let mut groups: HashMap<Shape, Vec<usize>> = HashMap::new();
    for (i, s) in systems.iter().enumerate() {
        assert_eq!(s.variables.len(), n, "systems differ in dimension");
        let rows = s
            .forms
            .iter()
            .map(|f| s.variables.iter().map(|&c| f.coeff(c)).collect())
            .collect();
        groups
            .entry((s.order, s.variables.clone(), rows))
            .or_default()
            .push(i);
    }

    let lo: Vec<i64> = bounds.lower[..n - 1].iter().map(|x| x.unwrap()).collect();
    let hi: Vec<i64> = bounds.upper[..n - 1].iter().map(|x| x.unwrap()).collect();
    for ((order, variables, rows), members) in groups {
        let k = order as i128;
        let mut by_residue: HashMap<Vec<i128>, Vec<usize>> = HashMap::new();
        for &m in &members {
            let key = systems[m]
                .forms
                .iter()
                .map(|f| (f.constant as i128).rem_euclid(k))
                .collect();
            by_residue.entry(key).or_default().push(m);
        }
        let mut found: Vec<Vec<AugmentationTuple>> = vec![Vec::new(); systems.len()];
        let mut point: Vec<i64> = lo.clone();
        point.push(0);
        let mut values = vec![0i128; rows.len()];
        let mut key = vec![0i128; rows.len()];
        'scan: loop {
            let last = 1 - point[..n - 1].iter().sum::<i64>();
            if (last_lo..=last_hi).contains(&last) {
                point[n - 1] = last;
                for (j, a) in rows.iter().enumerate() {
                    values[j] = a
                        .iter()
                        .zip(&point)
                        .map(|(&ai, &xi)| ai as i128 * xi as i128)
                        .sum();
                    key[j] = (-values[j]).rem_euclid(k);
                }
                if let Some(cands) = by_residue.get(&key) {
                    for &m in cands {
                        let ok = systems[m]
                            .forms
                            .iter()
                            .zip(&values)
                            .all(|(f, &v)| v + f.constant as i128 >= 0);
                        if ok {
                            found[m].push(AugmentationTuple::from_aligned(order, &variables, &point));
                        }
                    }
                }
            }
            // Odometer step over the free coordinates.
            let mut i = n - 1;
            loop {
                if i == 0 {
                    break 'scan;
                }
                i -= 1;
                if point[i] < hi[i] {
                    point[i] += 1;
                    break;
                }
                point[i] = lo[i];
            }
        }
        for m in members {
            out[m] = SolutionSet::from_case(order, 0, std::mem::take(&mut found[m]));
        }
    }
    Ok(out)
}
