//! WebAssembly bindings for the static page in `www/`.
//!
//! Each export takes plain strings and numbers and returns a JSON string.
//! The same functions are callable natively, which is how they are tested.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use help_core::builtin;
use help_core::chartab::CharacterTable;
use help_core::constraints::{mu_form, parse_kind, ConstraintProfile};
use help_core::pipeline::{report_json, report_text, Analysis, AnalysisOptions};
use help_core::units::{proper_divisors, AugmentationTuple, CaseContext};

/// Largest order the page will analyze; bigger ones take minutes.
pub const MAX_ORDER: u64 = 200;

fn table(name: &str) -> Result<&'static CharacterTable, String> {
    static SUZ: OnceLock<CharacterTable> = OnceLock::new();
    static A5: OnceLock<CharacterTable> = OnceLock::new();
    match name.to_ascii_lowercase().as_str() {
        "suz" => Ok(SUZ.get_or_init(builtin::suz)),
        "a5" => Ok(A5.get_or_init(builtin::a5)),
        other => Err(format!("unknown table {other:?}; use suz or a5")),
    }
}

fn profile(name: &str) -> Result<ConstraintProfile, String> {
    match name {
        "paper-suz" | "builtin:paper-suz" => Ok(ConstraintProfile::paper_suz()),
        "full" | "builtin:full" => Ok(ConstraintProfile::Full),
        other => Err(format!("unknown profile {other:?}; use paper-suz or full")),
    }
}

/// Analysis report for one order: the JSON document plus the text rendering.
pub fn analyze_json(table_name: &str, k: u64, profile_name: &str) -> Result<String, String> {
    let t = table(table_name)?;
    let p = profile(profile_name)?;
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(format!("order must lie in 2..={MAX_ORDER}"));
    }
    let exponent = t.exponent_u64().unwrap_or(0);
    if exponent % k != 0 {
        return Err(format!("{k} does not divide the exponent {exponent}"));
    }
    // The global pool runs on the calling thread where threads are missing.
    let mut a = Analysis::new(t, &p, AnalysisOptions::default());
    let report = a.analyze(k).map_err(|e| e.to_string())?;
    let doc = json!({
        "report": report_json(t, p.name(), &[report], None, None),
        "text": report_text(t, &[report], None),
    });
    Ok(doc.to_string())
}

/// The forms `k * mu_l` for every `l`, with each power `u^(k/m)` placed in
/// the class named in `powers` (`"2=2a, 13=13a"`, keyed by the order `m`).
pub fn mu_forms_json(
    table_name: &str,
    k: u64,
    character: &str,
    kind: &str,
    powers: &str,
) -> Result<String, String> {
    let t = table(table_name)?;
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(format!("order must lie in 2..={MAX_ORDER}"));
    }
    let kind = parse_kind(kind).map_err(|e| e.to_string())?;
    let chi = t.character(kind, character).map_err(|e| e.to_string())?;
    let mut named = BTreeMap::new();
    for part in powers.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
        let (m, class) = part
            .split_once('=')
            .ok_or_else(|| format!("expected m=class, got {part:?}"))?;
        let m: u64 = m.trim().parse().map_err(|_| format!("bad order in {part:?}"))?;
        let c = t
            .class_index(class.trim())
            .ok_or_else(|| format!("no class {:?}", class.trim()))?;
        named.insert(m, c);
    }
    let mut power_tuples = BTreeMap::new();
    for m in proper_divisors(k) {
        let c = *named
            .get(&m)
            .ok_or_else(|| format!("name a class of order {m} for u^{}", k / m))?;
        let tuple = AugmentationTuple::new(t, m, [(c, 1)]).map_err(|e| e.to_string())?;
        power_tuples.insert(m, tuple);
    }
    let ctx = CaseContext { order: k, power_tuples };
    let mut forms = Vec::new();
    for l in 0..k {
        let f = mu_form(t, chi, k, l, &ctx).map_err(|e| e.to_string())?;
        forms.push(json!({"l": l, "form": f.display(t)}));
    }
    Ok(json!({"order": k, "character": character, "forms": forms}).to_string())
}

/// Vertices, edges and missing edges of the prime graph.
pub fn prime_graph_json(table_name: &str) -> Result<String, String> {
    let t = table(table_name)?;
    let g = t.prime_graph();
    let pairs = |v: Vec<(u64, u64)>| -> Vec<Value> { v.into_iter().map(|(p, q)| json!([p, q])).collect() };
    Ok(json!({
        "group": t.group_name,
        "vertices": g.vertices,
        "edges": pairs(g.edges.iter().copied().collect()),
        "non_edges": pairs(g.non_edges()),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn analyze(table: &str, order: u32, profile: &str) -> Result<String, JsError> {
    analyze_json(table, order.into(), profile).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = muForms)]
pub fn mu_forms(
    table: &str,
    order: u32,
    character: &str,
    kind: &str,
    powers: &str,
) -> Result<String, JsError> {
    mu_forms_json(table, order.into(), character, kind, powers).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = primeGraph)]
pub fn prime_graph(table: &str) -> Result<String, JsError> {
    prime_graph_json(table).map_err(|e| JsError::new(&e))
}
