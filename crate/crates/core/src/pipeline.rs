//! Whole-group analysis: orders to test, per-order case runs, verdicts and
//! the prime graph question.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::Duration;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;
use web_time::Instant;

use crate::arith::divisors;
use crate::chartab::{CharacterTable, PrimeGraph, TableError};
use crate::constraints::{ConstraintError, ConstraintProfile, SystemTemplate};
use crate::solver::{
    enumerate_with, enumerate_within, fm_bounds_with, Bounds, SolverError, SolverOptions,
};
use crate::units::{
    admissible_classes, case_contexts, proper_divisors, SolutionSet, UnitsError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("order {order}: {count} cases exceed the limit of {max}")]
    TooManyCases { order: u64, count: String, max: u64 },
    #[error("order {order}, case {case}: {source}")]
    Solver {
        order: u64,
        case: u64,
        source: SolverError,
    },
    #[error("order must be at least 2, got {0}")]
    BadOrder(u64),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Excluded,
    RationallyConjugate,
    /// Number of non-trivial tuples left.
    Inconclusive(usize),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Excluded => "Excluded",
            Verdict::RationallyConjugate => "RationallyConjugate",
            Verdict::Inconclusive(_) => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
    /// Hard cap on case contexts per order.
    pub max_cases: u64,
    pub solver: SolverOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            jobs: None,
            max_cases: 1_000_000,
            solver: SolverOptions::default(),
        }
    }
}

/// Result of one case context.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub index: u64,
    pub solutions: SolutionSet,
    /// Solved with the full profile after the selected forms left it
    /// unbounded.
    pub escalated: bool,
    /// Still unbounded after any escalation; the case contributed nothing.
    pub unbounded: bool,
    /// The search hit its node limit; the case contributed nothing.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub order: u64,
    pub profile: String,
    pub case_count: u64,
    /// Cases with solutions or a flag, in index order.
    pub cases: Vec<CaseResult>,
    pub merged: SolutionSet,
    pub verdict: Verdict,
    /// Smallest proper divisor whose order was excluded, if that decided it.
    pub excluded_by_divisor: Option<u64>,
    /// True when some case here or below was unbounded or truncated, so the
    /// merged set may be incomplete.
    pub incomplete: bool,
    /// Decided without a system: a single class of elements of this order.
    pub short_circuit: bool,
    pub escalated_cases: u64,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl OrderReport {
    pub fn unbounded(&self) -> bool {
        self.cases.iter().any(|c| c.unbounded)
    }
}

/// Element orders above 1 together with the non-edges `p*q` of the prime
/// graph, ascending.
pub fn target_orders(table: &CharacterTable) -> Vec<u64> {
    let mut out: BTreeSet<u64> = table.element_orders().into_iter().filter(|&o| o > 1).collect();
    for (p, q) in table.prime_graph().non_edges() {
        out.insert(p * q);
    }
    out.into_iter().collect()
}

/// Orders `p*q` that are not element orders.
pub fn kc_orders(table: &CharacterTable) -> Vec<u64> {
    table
        .prime_graph()
        .non_edges()
        .into_iter()
        .map(|(p, q)| p * q)
        .collect()
}

/// Runs orders with a shared cache of finished reports.
pub struct Analysis<'a> {
    table: &'a CharacterTable,
    profile: &'a ConstraintProfile,
    options: AnalysisOptions,
    reports: BTreeMap<u64, OrderReport>,
}

impl<'a> Analysis<'a> {
    pub fn new(
        table: &'a CharacterTable,
        profile: &'a ConstraintProfile,
        options: AnalysisOptions,
    ) -> Self {
        Self {
            table,
            profile,
            options,
            reports: BTreeMap::new(),
        }
    }

    pub fn reports(&self) -> &BTreeMap<u64, OrderReport> {
        &self.reports
    }

    pub fn into_reports(self) -> BTreeMap<u64, OrderReport> {
        self.reports
    }

    pub fn analyze(&mut self, k: u64) -> Result<&OrderReport, PipelineError> {
        analyze_order(self.table, k, self.profile, &mut self.reports, &self.options)?;
        Ok(&self.reports[&k])
    }

    pub fn analyze_all(&mut self, orders: &[u64]) -> Result<(), PipelineError> {
        for &k in orders {
            self.analyze(k)?;
        }
        Ok(())
    }
}

/// Analyzes order `k`, first analyzing any proper divisor missing from
/// `cache`. The report for `k` is left in `cache`.
pub fn analyze_order(
    table: &CharacterTable,
    k: u64,
    profile: &ConstraintProfile,
    cache: &mut BTreeMap<u64, OrderReport>,
    options: &AnalysisOptions,
) -> Result<(), PipelineError> {
    if k < 2 {
        return Err(PipelineError::BadOrder(k));
    }
    if cache.contains_key(&k) {
        return Ok(());
    }
    let divs = proper_divisors(k);
    // Only orders without group elements can be excluded, so those go
    // first and a hit skips the remaining divisors.
    let (open, elements): (Vec<u64>, Vec<u64>) =
        divs.iter().partition(|&&m| !table.has_element_order(m));
    let mut excluded = None;
    for &m in &open {
        analyze_order(table, m, profile, cache, options)?;
        if cache[&m].verdict == Verdict::Excluded {
            excluded = Some(m);
            break;
        }
    }
    if excluded.is_none() {
        for &m in &elements {
            analyze_order(table, m, profile, cache, options)?;
        }
    }
    let start = Instant::now();
    let mut report = OrderReport {
        order: k,
        profile: profile.name().to_string(),
        case_count: 0,
        cases: Vec::new(),
        merged: SolutionSet::new(k),
        verdict: Verdict::Excluded,
        excluded_by_divisor: None,
        incomplete: divs.iter().any(|m| cache.get(m).is_some_and(|r| r.incomplete)),
        short_circuit: false,
        escalated_cases: 0,
        notes: Vec::new(),
        elapsed: Duration::ZERO,
    };

    if let Some(m) = excluded {
        report.excluded_by_divisor = Some(m);
        report.elapsed = start.elapsed();
        cache.insert(k, report);
        return Ok(());
    }

    let classes = admissible_classes(table, k);
    if divs.is_empty() && classes.len() == 1 && table.order_of(classes[0]) == k {
        report.short_circuit = true;
        report.case_count = 1;
        report.merged = SolutionSet::trivial(table, k);
        report.verdict = Verdict::RationallyConjugate;
        report.elapsed = start.elapsed();
        cache.insert(k, report);
        return Ok(());
    }

    let solved: BTreeMap<u64, SolutionSet> = divs
        .iter()
        .map(|&m| (m, cache[&m].merged.clone()))
        .collect();
    let contexts = case_contexts(k, &solved)?;
    let count = match contexts.count() {
        Some(c) if c <= options.max_cases => c,
        other => {
            return Err(PipelineError::TooManyCases {
                order: k,
                count: other.map_or("more than 2^64".into(), |c| c.to_string()),
                max: options.max_cases,
            })
        }
    };
    report.case_count = count;

    let template = profile.template(table, k)?;
    report.notes.extend(template.notes.iter().cloned());
    // FULL forms and one bounding box for all cases, built on first use.
    let full: OnceLock<Result<(SystemTemplate, Bounds), String>> = OnceLock::new();
    let escalates = profile.escalates();
    // Only constants differ between cases, so a relaxation with the largest
    // constants bounds all of them at once. If it is unbounded, fall back to
    // per-case bounds to tell infeasible cases from unbounded ones.
    let shared = fm_bounds_with(&template.relaxation(&solved)?, &options.solver)
        .map_err(|source| PipelineError::Solver {
            order: k,
            case: 0,
            source,
        })?;
    let shared = shared.is_bounded().then_some(shared);

    let run_case = |i: u64| -> Result<CaseResult, PipelineError> {
        let ctx = contexts.get(i);
        let mut result = CaseResult {
            index: i,
            solutions: SolutionSet::new(k),
            escalated: false,
            unbounded: false,
            truncated: false,
        };
        let system = template.instantiate(&ctx)?;
        let first = match &shared {
            Some(b) => enumerate_within(&system, b, &options.solver),
            None => enumerate_with(&system, &options.solver),
        };
        let outcome = match first {
            Err(SolverError::Unbounded { .. }) if escalates => {
                result.escalated = true;
                let (full, bounds) = full
                    .get_or_init(|| {
                        let t = ConstraintProfile::Full
                            .template(table, k)
                            .map_err(|e| e.to_string())?;
                        let relaxed = t.relaxation(&solved).map_err(|e| e.to_string())?;
                        let b = fm_bounds_with(&relaxed, &options.solver).map_err(|e| e.to_string())?;
                        Ok((t, b))
                    })
                    .as_ref()
                    .map_err(|e| ConstraintError::Profile(e.clone()))?;
                enumerate_within(&full.instantiate(&ctx)?, bounds, &options.solver)
            }
            other => other,
        };
        match outcome {
            Ok(set) => {
                result.solutions =
                    SolutionSet::from_case(k, i as usize, set.tuples);
            }
            Err(SolverError::Unbounded { .. }) => result.unbounded = true,
            Err(SolverError::NodeLimit(_)) => result.truncated = true,
            Err(source) => {
                return Err(PipelineError::Solver {
                    order: k,
                    case: i,
                    source,
                })
            }
        }
        Ok(result)
    };

    let results: Vec<Result<CaseResult, PipelineError>> = match options.jobs {
        Some(1) => (0..count).map(run_case).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?
            .install(|| (0..count).into_par_iter().map(run_case).collect()),
        None => (0..count).into_par_iter().map(run_case).collect(),
    };

    for r in results {
        let r = r?;
        if r.escalated {
            report.escalated_cases += 1;
        }
        if r.unbounded || r.truncated {
            report.incomplete = true;
        }
        if !r.solutions.is_empty() || r.unbounded || r.truncated || r.escalated {
            report.merged.merge(&r.solutions);
            report.cases.push(r);
        }
    }
    if report.cases.iter().any(|c| c.unbounded) {
        report.notes.push("some cases stayed unbounded".into());
    }
    if report.cases.iter().any(|c| c.truncated) {
        report.notes.push("some cases hit the search node limit".into());
    }

    let nontrivial = report.merged.nontrivial_count(table);
    let divisors_trivial = divs.iter().all(|m| cache[m].merged.all_trivial(table));
    report.verdict = if report.merged.is_empty() && !report.incomplete {
        Verdict::Excluded
    } else if nontrivial == 0 && divisors_trivial && !report.incomplete {
        Verdict::RationallyConjugate
    } else {
        Verdict::Inconclusive(nontrivial)
    };
    report.elapsed = start.elapsed();
    cache.insert(k, report);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KcReport {
    pub graph: PrimeGraph,
    /// Each `p*q` non-edge order with its verdict, `None` if not analyzed.
    pub tested: Vec<(u64, Option<Verdict>)>,
    pub holds: bool,
}

impl KcReport {
    pub fn open_orders(&self) -> Vec<u64> {
        self.tested
            .iter()
            .filter(|(_, v)| *v != Some(Verdict::Excluded))
            .map(|(k, _)| *k)
            .collect()
    }
}

/// The prime graph question holds when every `p*q` order without elements
/// was excluded.
pub fn kimmerle_verdict(table: &CharacterTable, reports: &BTreeMap<u64, OrderReport>) -> KcReport {
    let graph = table.prime_graph();
    let tested: Vec<(u64, Option<Verdict>)> = kc_orders(table)
        .into_iter()
        .map(|k| (k, reports.get(&k).map(|r| r.verdict)))
        .collect();
    let holds = tested.iter().all(|(_, v)| *v == Some(Verdict::Excluded));
    KcReport {
        graph,
        tested,
        holds,
    }
}

/// Divisors of the exponent that are not element orders and are not
/// multiples of an excluded order, i.e. orders still possible for torsion
/// units after the run.
pub fn exclusion_closure_orders(
    table: &CharacterTable,
    reports: &BTreeMap<u64, OrderReport>,
) -> Vec<u64> {
    let exponent = table.exponent_u64().expect("exponent fits in 64 bits");
    let excluded: Vec<u64> = reports
        .values()
        .filter(|r| r.verdict == Verdict::Excluded)
        .map(|r| r.order)
        .collect();
    divisors(exponent)
        .into_iter()
        .filter(|&d| !table.has_element_order(d))
        .filter(|&d| !excluded.iter().any(|&e| d % e == 0))
        .collect()
}

/// The report document: deterministic, no timings.
pub fn report_json(
    table: &CharacterTable,
    profile: &str,
    reports: &[&OrderReport],
    kc: Option<&KcReport>,
    exceptions: Option<&[u64]>,
) -> Value {
    let orders: Vec<Value> = reports
        .iter()
        .map(|r| {
            let solutions: Vec<Value> = r
                .merged
                .tuples
                .iter()
                .map(|t| {
                    Value::Array(
                        t.entries()
                            .map(|(c, v)| json!([table.class_name(c), v]))
                            .collect(),
                    )
                })
                .collect();
            json!({
                "k": r.order,
                "verdict": r.verdict.label(),
                "nontrivial": r.merged.nontrivial_count(table),
                "cases": r.case_count,
                "escalated": r.escalated_cases,
                "unbounded": r.unbounded(),
                "incomplete": r.incomplete,
                "excluded_by_divisor": r.excluded_by_divisor,
                "solutions": solutions,
            })
        })
        .collect();
    let mut doc = json!({
        "group": table.group_name,
        "profile": profile,
        "orders": orders,
    });
    if let Some(kc) = kc {
        doc["kc"] = json!({
            "verdict": if kc.holds { "KC-holds" } else { "KC-open" },
            "tested": kc.tested.iter().map(|(k, _)| *k).collect::<Vec<_>>(),
            "open": kc.open_orders(),
        });
    }
    if let Some(ex) = exceptions {
        doc["exceptions"] = json!(ex);
    }
    doc
}

/// Human-readable report in the style `(nu_2a, nu_2b) = (4, -3)`.
pub fn report_text(
    table: &CharacterTable,
    reports: &[&OrderReport],
    kc: Option<&KcReport>,
) -> String {
    let mut out = String::new();
    for r in reports {
        let verdict = match (r.verdict, r.excluded_by_divisor) {
            (Verdict::Excluded, Some(m)) => format!("Excluded (order {m} excluded)"),
            (Verdict::Inconclusive(n), _) => format!("Inconclusive ({n} non-trivial)"),
            (v, _) => v.label().to_string(),
        };
        out.push_str(&format!(
            "order {}: {} [{} cases, profile {}, {:.2?}]\n",
            r.order, verdict, r.case_count, r.profile, r.elapsed
        ));
        for note in &r.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        for t in &r.merged.tuples {
            let mark = if t.is_trivial_in(table) { "" } else { "  *" };
            out.push_str(&format!("  {}{}\n", t.display(table), mark));
        }
    }
    if let Some(kc) = kc {
        let tested: Vec<String> = kc
            .tested
            .iter()
            .map(|(k, v)| format!("{k}: {}", v.map_or("not analyzed", |v| v.label())))
            .collect();
        out.push_str(&format!(
            "prime graph question: {} ({})\n",
            if kc.holds { "holds" } else { "open" },
            tested.join(", ")
        ));
    }
    out
}
