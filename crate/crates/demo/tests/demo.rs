use help_demo::{analyze_json, mu_forms_json, prime_graph_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn analyze_order_two() {
    let doc = parse(analyze_json("suz", 2, "paper-suz"));
    let order = &doc["report"]["orders"][0];
    assert_eq!(order["verdict"], "Inconclusive");
    assert_eq!(order["solutions"].as_array().unwrap().len(), 8);
    assert!(doc["text"].as_str().unwrap().contains("(nu_2a, nu_2b) = (4, -3)"));
}

#[test]
fn analyze_excluded_order() {
    let doc = parse(analyze_json("Suz", 22, "builtin:paper-suz"));
    assert_eq!(doc["report"]["orders"][0]["verdict"], "Excluded");
    assert_eq!(doc["report"]["orders"][0]["cases"], 8);
}

#[test]
fn analyze_rejects_bad_input() {
    assert!(analyze_json("m24", 2, "paper-suz").is_err());
    assert!(analyze_json("suz", 17, "paper-suz").is_err());
    assert!(analyze_json("suz", 1, "paper-suz").is_err());
    assert!(analyze_json("suz", 2, "nope").is_err());
}

#[test]
fn forms_for_a_prime_order() {
    let doc = parse(mu_forms_json("suz", 2, "chi2", "ordinary", ""));
    let forms = doc["forms"].as_array().unwrap();
    assert_eq!(forms.len(), 2);
    assert_eq!(forms[0]["form"], "1/2 (15 nu_2a - nu_2b + 143)");
}

#[test]
fn forms_need_power_classes() {
    let err = mu_forms_json("suz", 22, "chi2", "ordinary", "2=2a").unwrap_err();
    assert!(err.contains("11"), "{err}");
    let doc = parse(mu_forms_json("suz", 22, "chi2", "ordinary", "2=2a; 11=11a"));
    assert_eq!(doc["forms"].as_array().unwrap().len(), 22);
    assert!(mu_forms_json("suz", 2, "chi2", "brauer:2", "").is_err());
    assert!(mu_forms_json("suz", 2, "chi2", "ordinary", "2=zz").is_err());
}

#[test]
fn graphs() {
    let a5 = parse(prime_graph_json("a5"));
    assert_eq!(a5["vertices"], serde_json::json!([2, 3, 5]));
    assert!(a5["edges"].as_array().unwrap().is_empty());
    let suz = parse(prime_graph_json("suz"));
    assert_eq!(suz["non_edges"].as_array().unwrap().len(), 10);
}
