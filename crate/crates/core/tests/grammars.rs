mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use cutpoint::grammar::{
    compose, enumerate_words, parse_grammar, semilinear_to_restricted, Cfg, GrammarSpec, LinearGrammar, Production,
};
use cutpoint::qfa::Word;
use proptest::prelude::*;

const LEN: usize = 7;

fn naive_spec_words(g: &GrammarSpec, max_len: usize) -> Vec<Word> {
    match g {
        GrammarSpec::Linear(l) => naive_cfg_words(l.cfg(), max_len),
        GrammarSpec::Metalinear(m) => naive_cfg_words(m.cfg(), max_len),
        GrammarSpec::RestrictedMatrix(m) => naive_matrix_words(m, max_len),
        GrammarSpec::Monoidal(m) => naive_cfg_words(&m.flatten().unwrap(), max_len),
    }
}

#[test]
fn fixtures_match_naive_derivations() {
    for name in fixture_names("grammars") {
        let g = grammar(&name);
        let ours = enumerate_words(&g, LEN, 1_000_000).unwrap();
        assert_eq!(ours, naive_spec_words(&g, LEN), "{name}");
    }
}

#[test]
fn fixtures_round_trip() {
    for name in fixture_names("grammars") {
        let g = grammar(&name);
        let back = parse_grammar(&g.to_json()).unwrap();
        assert_eq!(back, g, "{name}");
    }
    for name in fixture_names("qfa") {
        let q = qfa(&name);
        assert!(q.validate().is_empty(), "{name}");
        let back = cutpoint::qfa::QuantumAutomaton::from_json(&q.to_json()).unwrap();
        assert_eq!(back, q, "{name}");
    }
}

#[test]
fn abc_matrix_words() {
    let words: Vec<String> =
        enumerate_words(&grammar("abc-matrix"), 9, 10_000).unwrap().iter().map(|w| w.concat()).collect();
    assert_eq!(words, ["", "abc", "aabbcc", "aaabbbccc"]);
}

fn word(s: &str) -> Word {
    s.chars().map(|c| c.to_string()).collect()
}

fn linear_rule(vars: &'static [&'static str]) -> impl Strategy<Value = Production> {
    let side = prop::collection::vec(prop::sample::select(vec!["a", "b"]), 0..=2);
    (prop::sample::select(vars), side.clone(), prop::option::of(prop::sample::select(vars)), side).prop_map(
        |(lhs, u, v, w)| {
            let mut rhs: Vec<&str> = u;
            if let Some(v) = v {
                rhs.push(v);
                rhs.extend(w);
            }
            Production::new(lhs, &rhs)
        },
    )
}

fn linear_cfg(vars: &'static [&'static str]) -> impl Strategy<Value = Cfg> {
    prop::collection::vec(linear_rule(vars), 1..6).prop_map(move |prods| {
        Cfg::new(vars.iter().map(|s| s.to_string()).collect(), vec!["a".into(), "b".into()], prods, vars[0]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_enumeration_matches_naive(cfg in linear_cfg(&["S", "A", "B"])) {
        let g = LinearGrammar::new(cfg.clone()).unwrap();
        prop_assert_eq!(g.cfg().enumerate(6, 1_000_000).unwrap(), naive_cfg_words(&cfg, 6));
    }

    #[test]
    fn compose_substitutes_languages(top in linear_cfg(&["S", "T"]), fa in linear_cfg(&["U", "V"]), fb in linear_cfg(&["W"])) {
        let max = 5;
        // letters of the outer grammar are renamed so they do not clash
        let rename = |c: &Cfg, map: &BTreeMap<&str, &str>| -> Cfg {
            let prods = c.productions.iter().map(|p| Production {
                lhs: p.lhs.clone(),
                rhs: p.rhs.iter().map(|s| map.get(s.as_str()).map(|x| x.to_string()).unwrap_or_else(|| s.clone())).collect(),
            }).collect();
            let terms = c.terminals.iter().map(|s| map.get(s.as_str()).map(|x| x.to_string()).unwrap_or_else(|| s.clone())).collect();
            Cfg::new(c.variables.clone(), terms, prods, &c.axiom).unwrap()
        };
        let top = rename(&top, &BTreeMap::from([("a", "x"), ("b", "y")]));
        let la = naive_cfg_words(&fa, max);
        let lb = naive_cfg_words(&fb, max);
        // an ε in a family would need unbounded outer words
        prop_assume!(la.iter().all(|w| !w.is_empty()) && lb.iter().all(|w| !w.is_empty()));
        let family = BTreeMap::from([("x".to_string(), fa), ("y".to_string(), fb)]);
        let composed = compose(&top, &family).unwrap();
        let mut expected = BTreeSet::new();
        for w in naive_cfg_words(&top, max) {
            let mut partial: BTreeSet<Word> = BTreeSet::from([vec![]]);
            for letter in &w {
                let lang = if letter == "x" { &la } else { &lb };
                partial = partial.iter().flat_map(|p| lang.iter().map(move |u| {
                    let mut v = p.clone();
                    v.extend(u.iter().cloned());
                    v
                })).filter(|v| v.len() <= max).collect();
            }
            expected.extend(partial);
        }
        prop_assert_eq!(composed.enumerate(max, 1_000_000).unwrap(), shortlex_sorted(expected));
    }

    #[test]
    fn semilinear_language(
        words in prop::collection::vec(prop::sample::select(vec!["a", "b", "ab", "ba", "bb"]), 1..=2),
        v0 in prop::collection::vec(0u32..3, 2),
        periods in prop::collection::vec(prop::collection::vec(0u32..3, 2), 0..=2),
    ) {
        let k = words.len();
        let ws: Vec<Word> = words.iter().map(|w| word(w)).collect();
        let v0 = v0[..k].to_vec();
        let periods: Vec<Vec<u32>> = periods.iter().map(|p| p[..k].to_vec()).collect();
        let g = semilinear_to_restricted(&ws, &v0, &periods).unwrap();
        let max = 8;
        let mut expected = BTreeSet::new();
        let mut stack = vec![v0.clone()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            let w: Word = (0..k).flat_map(|i| (0..n[i]).flat_map(|_| ws[i].iter().cloned()).collect::<Vec<_>>()).collect();
            if w.len() > max || !seen.insert(n.clone()) {
                continue;
            }
            expected.insert(w);
            for p in &periods {
                stack.push((0..k).map(|i| n[i] + p[i]).collect());
            }
        }
        let expected = shortlex_sorted(expected);
        prop_assert_eq!(g.enumerate(max, 1_000_000).unwrap(), expected.clone());
        prop_assert_eq!(naive_matrix_words(&g, max), expected);
    }
}
