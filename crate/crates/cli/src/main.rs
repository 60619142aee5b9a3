//! `help-cli`: validate character table bundles, run HeLP analyses and
//! print prime graphs.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 an unbounded
//! inconclusive order under `--strict`.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use help_core::builtin;
use help_core::chartab::{parse_bundle_str, CharacterTable, OrthogonalityReport, TableError};
use help_core::constraints::ConstraintProfile;
use help_core::pipeline::{
    exclusion_closure_orders, kc_orders, kimmerle_verdict, report_json, report_text,
    target_orders, Analysis, AnalysisOptions, KcReport, OrderReport,
};

#[derive(Parser)]
#[command(name = "help-cli", version, about = "HeLP analysis of torsion units in integral group rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a bundle and check its invariants and orthogonality.
    Validate {
        /// Bundle path, or a shipped table name (`suz`, `a5`).
        #[arg(value_name = "TABLE", conflicts_with = "table")]
        path: Option<String>,
        #[arg(long)]
        table: Option<String>,
    },
    /// Analyze torsion unit orders and emit a report.
    Analyze(AnalyzeArgs),
    /// Print the prime graph, optionally compared with the unit group.
    PrimeGraph(GraphArgs),
}

#[derive(Args)]
struct Common {
    /// Bundle path, or a shipped table name (`suz`, `a5`).
    #[arg(long)]
    table: String,
    /// Profile file, `builtin:paper-suz` or `builtin:full`.
    #[arg(long, default_value = "builtin:paper-suz")]
    profile: String,
    /// Worker threads.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Cap on case contexts per order.
    #[arg(long, default_value_t = 1_000_000)]
    max_cases: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Order to analyze; repeatable.
    #[arg(long = "order", value_name = "K")]
    order: Vec<u64>,
    /// Order set: `kc` (products of primes with no elements), `element`
    /// (element orders) or `all` (both). Default `all` unless `--order` is given.
    #[arg(long, value_enum)]
    orders: Option<OrderSet>,
    /// Exit 3 when some order stays unbounded.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    common: Common,
    /// Also analyze the missing edges and report the comparison.
    #[arg(long)]
    with_units: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderSet {
    Kc,
    Element,
    All,
}

/// A failure that maps to exit status 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { path, table } => match path.or(table) {
            Some(p) => validate(&p),
            None => Err(InputError("a table path is required".into())),
        },
        Command::Analyze(args) => analyze(&args),
        Command::PrimeGraph(args) => prime_graph(&args),
    };
    match result {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_table(spec: &str) -> Result<CharacterTable, InputError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(text) = builtin::bundle_text(spec) {
            return Ok(parse_bundle_str(text)?);
        }
    }
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{spec}: {e}")))?;
    parse_bundle_str(&text).map_err(|e| InputError(format!("{spec}: {e}")))
}

fn validate(spec: &str) -> Result<ExitCode, InputError> {
    let path = Path::new(spec);
    let text = match (path.exists(), builtin::bundle_text(spec)) {
        (false, Some(text)) => text.to_string(),
        _ => fs::read_to_string(path).map_err(|e| InputError(format!("{spec}: {e}")))?,
    };
    let table = match parse_bundle_str(&text) {
        Ok(t) => t,
        Err(TableError::Invalid(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            return Err(InputError(format!(
                "{spec}: {} violation(s)",
                violations.len()
            )));
        }
        Err(e) => return Err(InputError(format!("{spec}: {e}"))),
    };
    println!(
        "{}: {} classes, {} ordinary characters, Brauer primes {:?}",
        table.group_name,
        table.classes.len(),
        table.ordinary.len(),
        table.brauer.keys().collect::<Vec<_>>()
    );
    match table.validate_orthogonality() {
        OrthogonalityReport::Skipped(why) => println!("orthogonality: skipped ({why})"),
        OrthogonalityReport::Checked(v) if v.is_empty() => println!("orthogonality: ok"),
        OrthogonalityReport::Checked(v) => {
            for x in &v {
                println!("{x}");
            }
            return Err(InputError(format!("{spec}: {} orthogonality violation(s)", v.len())));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn options(c: &Common) -> AnalysisOptions {
    AnalysisOptions {
        jobs: c.jobs.map(|j| j as usize),
        max_cases: c.max_cases,
        ..AnalysisOptions::default()
    }
}

fn requested_orders(table: &CharacterTable, args: &AnalyzeArgs) -> Vec<u64> {
    let mut set: BTreeSet<u64> = args.order.iter().copied().collect();
    let group = match args.orders {
        Some(o) => Some(o),
        None if args.order.is_empty() => Some(OrderSet::All),
        None => None,
    };
    match group {
        Some(OrderSet::Kc) => set.extend(kc_orders(table)),
        Some(OrderSet::Element) => set.extend(table.element_orders().into_iter().filter(|&o| o > 1)),
        Some(OrderSet::All) => set.extend(target_orders(table)),
        None => {}
    }
    set.into_iter().collect()
}

fn analyze(args: &AnalyzeArgs) -> Result<ExitCode, InputError> {
    let c = &args.common;
    let table = read_table(&c.table)?;
    let profile = ConstraintProfile::resolve(&c.profile)?;
    let orders = requested_orders(&table, args);
    if let Some(&bad) = orders.iter().find(|&&k| k < 2) {
        return Err(InputError(format!("order must be at least 2, got {bad}")));
    }
    let mut analysis = Analysis::new(&table, &profile, options(c));
    analysis.analyze_all(&orders)?;
    let all = analysis.into_reports();
    let reports: Vec<&OrderReport> = orders.iter().map(|k| &all[k]).collect();
    let kc_done = kc_orders(&table).iter().all(|k| all.contains_key(k));
    let kc = kc_done.then(|| kimmerle_verdict(&table, &all));
    let exceptions = kc_done.then(|| exclusion_closure_orders(&table, &all));

    let body = match c.format {
        Format::Json => {
            let doc = report_json(&table, profile.name(), &reports, kc.as_ref(), exceptions.as_deref());
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        Format::Csv => report_csv(&table, &reports)?,
        Format::Text => {
            let mut s = report_text(&table, &reports, kc.as_ref());
            if let Some(ex) = &exceptions {
                s.push_str(&format!("orders still possible for units: {ex:?}\n"));
            }
            s
        }
    };
    emit(c, &body)?;
    if args.strict && reports.iter().any(|r| r.unbounded()) {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

/// One row per solution tuple; excluded orders get a single empty row.
fn report_csv(table: &CharacterTable, reports: &[&OrderReport]) -> Result<String, InputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "verdict", "cases", "unbounded", "tuple", "class", "nu"])?;
    for r in reports {
        let head = [
            r.order.to_string(),
            r.verdict.label().to_string(),
            r.case_count.to_string(),
            r.unbounded().to_string(),
        ];
        if r.merged.is_empty() {
            w.write_record(head.iter().map(String::as_str).chain(["", "", ""]))?;
        }
        for (i, t) in r.merged.tuples.iter().enumerate() {
            for (class, nu) in t.entries() {
                let idx = i.to_string();
                let nu = nu.to_string();
                w.write_record(
                    head.iter()
                        .map(String::as_str)
                        .chain([idx.as_str(), table.class_name(class), nu.as_str()]),
                )?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| InputError(e.to_string()))?;
    Ok(String::from_utf8(bytes)?)
}

fn prime_graph(args: &GraphArgs) -> Result<ExitCode, InputError> {
    let c = &args.common;
    let table = read_table(&c.table)?;
    let graph = table.prime_graph();
    let kc: Option<KcReport> = if args.with_units {
        let profile = ConstraintProfile::resolve(&c.profile)?;
        let mut analysis = Analysis::new(&table, &profile, options(c));
        analysis.analyze_all(&kc_orders(&table))?;
        Some(kimmerle_verdict(&table, analysis.reports()))
    } else {
        None
    };
    let body = match c.format {
        Format::Json => {
            let mut doc = json!({
                "group": table.group_name,
                "vertices": graph.vertices,
                "edges": graph.edges.iter().map(|&(p, q)| [p, q]).collect::<Vec<_>>(),
                "non_edges": graph.non_edges().iter().map(|&(p, q)| [p, q]).collect::<Vec<_>>(),
            });
            if let Some(kc) = &kc {
                doc["kc"] = json!({
                    "verdict": if kc.holds { "KC-holds" } else { "KC-open" },
                    "open": kc.open_orders(),
                });
            }
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["p", "q", "edge"])?;
            for (i, &p) in graph.vertices.iter().enumerate() {
                for &q in &graph.vertices[i + 1..] {
                    w.write_record([p.to_string(), q.to_string(), graph.has_edge(p, q).to_string()])?;
                }
            }
            let bytes = w.into_inner().map_err(|e| InputError(e.to_string()))?;
            String::from_utf8(bytes)?
        }
        Format::Text => {
            let pairs = |v: Vec<(u64, u64)>| {
                v.iter().map(|(p, q)| format!("{p}-{q}")).collect::<Vec<_>>().join(" ")
            };
            let mut s = format!(
                "{}: {} vertices {:?}\nedges: {}\nnon-edges: {}\n",
                table.group_name,
                graph.vertices.len(),
                graph.vertices,
                pairs(graph.edges.iter().copied().collect()),
                pairs(graph.non_edges()),
            );
            if let Some(kc) = &kc {
                if kc.holds {
                    s.push_str("KC holds\n");
                } else {
                    s.push_str(&format!("KC open: {:?}\n", kc.open_orders()));
                }
            }
            s
        }
    };
    emit(c, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(c: &Common, body: &str) -> Result<(), InputError> {
    match &c.out {
        Some(path) => fs::write(path, body).map_err(|e| InputError(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            Ok(())
        }
    }
}
