use help_core::builtin::suz;
use help_core::chartab::{CharacterKind, CharacterTable};
use help_core::constraints::{
    build_system, eval_mu, AffineForm, ConstraintProfile, ConstraintSystem, FormSource,
};
use help_core::solver::{enumerate, fm_bounds, naive_enumerate, Bounds, SolverError};
use help_core::units::{CaseContext, SolutionSet};
use num_traits::Signed;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn reference_system(t: &CharacterTable, k: u64) -> ConstraintSystem {
    let ctx = CaseContext { order: k, power_tuples: BTreeMap::new() };
    build_system(t, k, &ctx, &ConstraintProfile::paper_suz()).unwrap()
}

fn source() -> FormSource {
    FormSource { kind: CharacterKind::Ordinary, character: "x".into(), l: 0 }
}

/// Two variables `a + b = 1`; each form is `sum coeff * var + constant`.
fn toy(forms: &[(&[i64], i64)], scale: u64) -> ConstraintSystem {
    let forms: Vec<AffineForm> = forms
        .iter()
        .map(|(cs, c)| AffineForm {
            coeffs: cs.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| (i + 1, v)).collect(),
            constant: *c,
            scale,
        })
        .collect();
    ConstraintSystem {
        order: scale,
        variables: vec![1, 2],
        sources: vec![source(); forms.len()],
        forms,
    }
}

fn uniform_box(n: usize, r: i64) -> Bounds {
    Bounds { lower: vec![Some(-r); n], upper: vec![Some(r); n], infeasible: false }
}

fn assert_post_hoc(system: &ConstraintSystem, set: &SolutionSet) {
    for tuple in &set.tuples {
        let total: i64 = tuple.entries().map(|(_, v)| v).sum();
        assert_eq!(total, 1);
        for f in &system.forms {
            let mu = eval_mu(f, tuple);
            assert!(mu.is_integer() && !mu.is_negative(), "{tuple:?}");
        }
    }
}

#[test]
fn order_two_range() {
    let t = suz();
    let s = reference_system(&t, 2);
    let b = fm_bounds(&s);
    assert!(b.is_bounded());
    let first = s.variables.iter().position(|&c| c == t.class_index("2a").unwrap()).unwrap();
    assert_eq!((b.lower[first], b.upper[first]), (Some(-3), Some(4)));
}

#[test]
fn interval_from_two_forms() {
    let s = toy(&[(&[1, 0], 1), (&[-1, 0], 1)], 1);
    let b = fm_bounds(&s);
    assert_eq!((b.lower[0], b.upper[0]), (Some(-1), Some(1)));
    let set = enumerate(&s).unwrap();
    assert_eq!(set.len(), 3);
}

#[test]
fn one_form_leaves_a_line_open() {
    let s = toy(&[(&[1, 0], 1)], 1);
    let b = fm_bounds(&s);
    assert!(!b.is_bounded());
    assert!(matches!(enumerate(&s), Err(SolverError::Unbounded { .. })));
}

#[test]
fn reference_counts() {
    let t = suz();
    for (k, n) in [(2, 8), (3, 104), (5, 9), (13, 18)] {
        let s = reference_system(&t, k);
        let set = enumerate(&s).unwrap();
        assert_eq!(set.len(), n, "order {k}");
        assert_post_hoc(&s, &set);
    }
    let s = reference_system(&t, 13);
    let a = t.class_index("13a").unwrap();
    let range: Vec<i64> = enumerate(&s).unwrap().tuples.iter().map(|u| u.get(a)).collect();
    assert_eq!(range.iter().min(), Some(&-8));
    assert_eq!(range.iter().max(), Some(&9));
}

#[test]
fn brute_force_agrees() {
    let t = suz();
    for (k, r) in [(2, 10), (3, 20)] {
        let s = reference_system(&t, k);
        let naive = naive_enumerate(&s, &uniform_box(s.variables.len(), r), 100_000_000).unwrap();
        assert_eq!(naive.tuples, enumerate(&s).unwrap().tuples, "order {k}");
    }
}

#[test]
fn empty_interior() {
    let s = toy(&[(&[1, 0], -2), (&[-1, 0], 1)], 1);
    assert!(enumerate(&s).unwrap().is_empty());
    assert!(naive_enumerate(&s, &uniform_box(2, 5), 1000).unwrap().is_empty());
}

#[test]
fn box_cap() {
    let s = toy(&[(&[1, 0], 1)], 1);
    let err = naive_enumerate(&s, &uniform_box(2, 1000), 100).unwrap_err();
    assert!(matches!(err, SolverError::BoxTooLarge { cap: 100, .. }));
}

#[test]
fn divisibility_filters() {
    // a + 1 >= 0, 2 | (a + 1), a <= 3.
    let s = toy(&[(&[1, 0], 3), (&[-1, 0], 3), (&[1, 0], 1)], 2);
    let set = enumerate(&s).unwrap();
    let a: Vec<i64> = set.tuples.iter().map(|u| u.get(1)).collect();
    assert_eq!(a, vec![-1, 1, 3]);
}

#[test]
fn repeated_runs_match() {
    let t = suz();
    let s = reference_system(&t, 3);
    let first = enumerate(&s).unwrap();
    let runs: Vec<SolutionSet> = std::thread::scope(|sc| {
        let hs: Vec<_> = (0..4).map(|_| sc.spawn(|| enumerate(&s).unwrap())).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for r in runs {
        assert_eq!(r.tuples, first.tuples);
    }
    let mut sorted = first.tuples.clone();
    sorted.sort();
    assert_eq!(sorted, first.tuples);
}

#[test]
fn full_profile_only_removes() {
    let t = suz();
    let ctx = CaseContext { order: 5, power_tuples: BTreeMap::new() };
    let full = build_system(&t, 5, &ctx, &ConstraintProfile::Full).unwrap();
    let small = enumerate(&reference_system(&t, 5)).unwrap();
    let big = enumerate(&full).unwrap();
    assert!(big.tuples.iter().all(|u| small.tuples.contains(u)));
}

fn random_system() -> impl Strategy<Value = ConstraintSystem> {
    let form = (prop::collection::vec(-4i64..=4, 2), -6i64..=6);
    (prop::collection::vec(form, 1..6), 1u64..=3).prop_map(|(forms, k)| {
        let mut rows: Vec<(Vec<i64>, i64)> = forms;
        // Keep every system bounded.
        rows.push((vec![1, 0], 6));
        rows.push((vec![-1, 0], 6));
        let refs: Vec<(&[i64], i64)> = rows.iter().map(|(c, v)| (c.as_slice(), *v)).collect();
        toy(&refs, k)
    })
}

proptest! {
    #[test]
    fn enumerate_equals_brute_force(s in random_system()) {
        let b = fm_bounds(&s);
        let got = enumerate(&s).unwrap();
        let wide = uniform_box(2, 20);
        let naive = naive_enumerate(&s, &wide, 1_000_000).unwrap();
        prop_assert_eq!(&got.tuples, &naive.tuples);
        for u in &got.tuples {
            for (i, v) in u.values().iter().enumerate().take(1) {
                prop_assert!(b.lower[i].unwrap() <= *v && *v <= b.upper[i].unwrap());
            }
        }
        assert_post_hoc(&s, &got);
    }
}
