//! Helpers shared by integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use help_core::builtin::suz;
use help_core::chartab::{CharacterKind, CharacterTable};
use help_core::constraints::{mu_form, AffineForm, ConstraintProfile};
use help_core::pipeline::{Analysis, AnalysisOptions};
use help_core::units::{AugmentationTuple, CaseContext, SolutionSet};

/// Integer linear expression over named symbols plus a constant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Linear {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
}

impl Linear {
    fn add_scaled(&mut self, other: &Linear, c: i64) {
        for (k, v) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(0) += c * v;
        }
        self.terms.retain(|_, v| *v != 0);
        self.constant += c * other.constant;
    }

    /// Renders in the input syntax, variables in name order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, &c) in &self.terms {
            let sign = if c < 0 { "-" } else { "+" };
            let mag = match c.abs() {
                1 => name.clone(),
                m => format!("{m}*{name}"),
            };
            if out.is_empty() {
                out = if c < 0 { format!("-{mag}") } else { mag };
            } else {
                out = format!("{out} {sign} {mag}");
            }
        }
        let sign = if self.constant < 0 { "-" } else { "+" };
        if out.is_empty() {
            self.constant.to_string()
        } else {
            format!("{out} {sign} {}", self.constant.abs())
        }
    }

    /// Substitutes `defs` for symbols that have a definition.
    pub fn substitute(&self, defs: &BTreeMap<String, Linear>) -> Linear {
        let mut out = Linear {
            constant: self.constant,
            ..Default::default()
        };
        for (name, &c) in &self.terms {
            match defs.get(name) {
                Some(d) => out.add_scaled(d, c),
                None => {
                    let mut s = Linear::default();
                    s.terms.insert(name.clone(), 1);
                    out.add_scaled(&s, c);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Sym(String),
    Plus,
    Minus,
    Star,
    Open,
    Close,
}

fn lex(s: &str) -> Vec<Tok> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            _ if ch.is_ascii_alphanumeric() || ch == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.parse() {
                    Ok(n) => out.push(Tok::Int(n)),
                    Err(_) => out.push(Tok::Sym(word)),
                }
            }
            _ => panic!("unexpected {ch:?} in {s:?}"),
        }
    }
    out
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Linear {
        let mut acc = Linear::default();
        let mut sign = 1;
        if self.peek() == Some(&Tok::Minus) {
            self.next();
            sign = -1;
        }
        loop {
            let term = self.term();
            acc.add_scaled(&term, sign);
            match self.peek() {
                Some(Tok::Plus) => sign = 1,
                Some(Tok::Minus) => sign = -1,
                _ => return acc,
            }
            self.next();
        }
    }

    fn term(&mut self) -> Linear {
        match self.next() {
            Some(Tok::Int(n)) => {
                if self.peek() == Some(&Tok::Star) {
                    self.next();
                    let mut a = self.atom();
                    let mut out = Linear::default();
                    out.add_scaled(&std::mem::take(&mut a), n);
                    out
                } else {
                    Linear {
                        constant: n,
                        ..Default::default()
                    }
                }
            }
            Some(t) => {
                self.pos -= 1;
                let _ = t;
                self.atom()
            }
            None => panic!("expression ends early"),
        }
    }

    fn atom(&mut self) -> Linear {
        match self.next() {
            Some(Tok::Sym(s)) => {
                let mut l = Linear::default();
                l.terms.insert(s, 1);
                l
            }
            Some(Tok::Open) => {
                let e = self.expr();
                assert_eq!(self.next(), Some(Tok::Close), "unbalanced parenthesis");
                e
            }
            other => panic!("unexpected token {other:?}"),
        }
    }
}

/// Parses `2*t1 - 3*(nu_2a + 4) + 7` style expressions.
pub fn parse_linear(s: &str) -> Linear {
    let mut p = Parser { toks: lex(s), pos: 0 };
    let e = p.expr();
    assert!(p.pos == p.toks.len(), "trailing input in {s:?}");
    e
}

/// Tuple written as a combination of class names, such as `4*2a-3*2b`.
pub fn parse_tuple(table: &CharacterTable, order: u64, s: &str) -> AugmentationTuple {
    let lin = parse_linear(s);
    assert_eq!(lin.constant, 0, "constant in tuple {s}");
    let entries = lin.terms.iter().map(|(name, &v)| {
        let c = table
            .class_index(name)
            .unwrap_or_else(|| panic!("unknown class {name}"));
        (c, v)
    });
    AugmentationTuple::new(table, order, entries).unwrap()
}

/// `chi2` or `chi3@3` for a Brauer character mod 3.
pub fn parse_character(s: &str) -> (CharacterKind, String) {
    match s.split_once('@') {
        Some((name, p)) => (CharacterKind::Brauer(p.parse().unwrap()), name.to_string()),
        None => (CharacterKind::Ordinary, s.to_string()),
    }
}

/// One reference form line.
#[derive(Debug, Clone)]
pub struct FormLine {
    pub line: usize,
    pub order: u64,
    pub context: String,
    pub character: String,
    pub l: u64,
    pub expected: Linear,
    /// Correct form for a line whose printed form is a misprint.
    pub misprint: Option<Linear>,
}

pub const SUZ_FORMS: &str = include_str!("../data/suz_forms.txt");

pub fn suz_form_lines() -> Vec<FormLine> {
    let mut defs: BTreeMap<u64, BTreeMap<String, Linear>> = BTreeMap::new();
    let mut out = Vec::new();
    for (n, raw) in SUZ_FORMS.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("let ") {
            let (head, body) = rest.split_once('=').unwrap();
            let mut head = head.split_whitespace();
            let k: u64 = head.next().unwrap().parse().unwrap();
            let name = head.next().unwrap().to_string();
            defs.entry(k).or_default().insert(name, parse_linear(body));
        } else if let Some(rest) = line.strip_prefix("form ") {
            let f: Vec<&str> = rest.split('|').map(str::trim).collect();
            assert!(f.len() == 5 || f.len() == 6, "line {}", n + 1);
            let order: u64 = f[0].parse().unwrap();
            let empty = BTreeMap::new();
            let defs = defs.get(&order).unwrap_or(&empty);
            let expected = parse_linear(f[4]).substitute(defs);
            let misprint = f.get(5).map(|fix| {
                let fix = fix
                    .strip_prefix("misprint:")
                    .unwrap_or_else(|| panic!("line {}: bad sixth field", n + 1));
                parse_linear(fix).substitute(defs)
            });
            out.push(FormLine {
                line: n + 1,
                order,
                context: f[1].to_string(),
                character: f[2].to_string(),
                l: f[3].parse().unwrap(),
                expected,
                misprint,
            });
        } else {
            panic!("unrecognized line {}: {line}", n + 1);
        }
    }
    out
}

/// All contexts matching a pattern like `2=4*2a-3*2b; 13=*`. Divisors not
/// named take every cached tuple, like `*`.
pub fn expand_context(
    table: &CharacterTable,
    order: u64,
    pattern: &str,
    cache: &BTreeMap<u64, SolutionSet>,
) -> Vec<CaseContext> {
    let mut fixed: BTreeMap<u64, Option<AugmentationTuple>> = BTreeMap::new();
    if pattern != "-" {
        for part in pattern.split(';') {
            let (m, t) = part.trim().split_once('=').unwrap();
            let m: u64 = m.trim().parse().unwrap();
            let t = t.trim();
            fixed.insert(m, (t != "*").then(|| parse_tuple(table, m, t)));
        }
    }
    let mut contexts = vec![BTreeMap::new()];
    for m in help_core::units::proper_divisors(order) {
        let choices = match fixed.get(&m) {
            Some(Some(t)) => vec![t.clone()],
            _ => cache[&m].tuples.clone(),
        };
        contexts = contexts
            .into_iter()
            .flat_map(|ctx: BTreeMap<u64, AugmentationTuple>| {
                choices.iter().map(move |t| {
                    let mut c = ctx.clone();
                    c.insert(m, t.clone());
                    c
                })
            })
            .collect();
    }
    contexts
        .into_iter()
        .map(|power_tuples| CaseContext {
            order,
            power_tuples,
        })
        .collect()
}

/// Expresses a computed form with symbols `nu_<class>` for comparison.
pub fn form_as_linear(table: &CharacterTable, f: &AffineForm) -> Linear {
    Linear {
        terms: f
            .coeffs
            .iter()
            .filter(|(_, v)| **v != 0)
            .map(|(&c, &v)| (format!("nu_{}", table.class_name(c)), v))
            .collect(),
        constant: f.constant,
    }
}

/// Merged solution sets of the prime orders of Suz under the reference
/// profile, enough context for every reference line.
pub fn suz_prime_cache(table: &CharacterTable) -> BTreeMap<u64, SolutionSet> {
    let profile = ConstraintProfile::paper_suz();
    let mut a = Analysis::new(table, &profile, AnalysisOptions::default());
    let mut cache = BTreeMap::new();
    for p in [2, 3, 5, 7, 11, 13] {
        cache.insert(p, a.analyze(p).unwrap().merged.clone());
    }
    cache
}

/// Outcome of checking one reference line.
#[derive(Debug, Clone)]
pub struct FormCheck {
    pub line: FormLine,
    /// Computed forms that differ from the printed reference.
    pub mismatches: Vec<Linear>,
    pub contexts: usize,
}

pub fn check_suz_forms() -> Vec<FormCheck> {
    let table = suz();
    let cache = suz_prime_cache(&table);
    suz_form_lines()
        .into_iter()
        .map(|line| {
            let (kind, name) = parse_character(&line.character);
            let chi = table.character(kind, &name).unwrap();
            let contexts = expand_context(&table, line.order, &line.context, &cache);
            let mut mismatches = Vec::new();
            for ctx in &contexts {
                let f = mu_form(&table, chi, line.order, line.l, ctx).unwrap();
                let got = form_as_linear(&table, &f);
                if got != line.expected && !mismatches.contains(&got) {
                    mismatches.push(got);
                }
            }
            FormCheck {
                contexts: contexts.len(),
                line,
                mismatches,
            }
        })
        .collect()
}
