//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use cutpoint::arith::{int, rat, BlockMatrix, QMatrix, Rational};
use cutpoint::grammar::{parse_grammar, Cfg, GrammarSpec, RestrictedMatrixGrammar, GrammarMatrix};
use cutpoint::qfa::{QuantumAutomaton, Word};
use cutpoint::zariski::ideal::PolyIdeal;
use cutpoint::zariski::poly::Poly;
use num_traits::{One, Zero};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn grammar(name: &str) -> GrammarSpec {
    let text = std::fs::read_to_string(fixture(&format!("grammars/{name}.json"))).unwrap();
    parse_grammar(&text).unwrap()
}

pub fn qfa(name: &str) -> QuantumAutomaton {
    let text = std::fs::read_to_string(fixture(&format!("qfa/{name}.json"))).unwrap();
    QuantumAutomaton::from_json(&text).unwrap()
}

pub fn fixture_names(dir: &str) -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(fixture(dir))
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    out.sort();
    out
}

pub fn shortlex_sorted(words: impl IntoIterator<Item = Word>) -> Vec<Word> {
    let mut v: Vec<Word> = words.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    v
}

/// Leftmost derivations breadth first, pruned on terminal count and form length.
pub fn naive_cfg_words(g: &Cfg, max_len: usize) -> Vec<Word> {
    let slack = g.variables.len() + 2;
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut queue = VecDeque::from([vec![g.axiom.clone()]]);
    let mut out = BTreeSet::new();
    while let Some(form) = queue.pop_front() {
        let Some(pos) = form.iter().position(|s| g.is_variable(s)) else {
            out.insert(form);
            continue;
        };
        for p in g.productions.iter().filter(|p| p.lhs == form[pos]) {
            let mut next = form[..pos].to_vec();
            next.extend(p.rhs.iter().cloned());
            next.extend(form[pos + 1..].iter().cloned());
            let terminals = next.iter().filter(|s| !g.is_variable(s)).count();
            if terminals > max_len || next.len() > max_len + slack {
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    shortlex_sorted(out)
}

/// Applies matrices of a restricted grammar to sentential forms, rewriting
/// one occurrence of every left-hand side at once.
pub fn naive_matrix_words(g: &RestrictedMatrixGrammar, max_len: usize) -> Vec<Word> {
    let is_var = |s: &str| s == g.start || g.blocks.iter().any(|b| b.iter().any(|v| v == s));
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([vec![g.start.clone()]]);
    let mut out = BTreeSet::new();
    while let Some(form) = queue.pop_front() {
        if form.iter().all(|s| !is_var(s)) {
            out.insert(form.clone());
            continue;
        }
        for m in &g.matrices {
            let rules: Vec<(String, Vec<String>)> = match m {
                GrammarMatrix::Start(rhs) => vec![(g.start.clone(), rhs.clone())],
                GrammarMatrix::Step(rs) => rs
                    .iter()
                    .map(|r| {
                        let mut rhs = r.left.clone();
                        rhs.push(r.rhs.clone());
                        rhs.extend(r.right.iter().cloned());
                        (r.lhs.clone(), rhs)
                    })
                    .collect(),
                GrammarMatrix::Erase(vs) => vs.iter().map(|v| (v.clone(), vec![])).collect(),
            };
            let mut next = form.clone();
            let mut ok = true;
            for (lhs, rhs) in &rules {
                match next.iter().position(|s| s == lhs) {
                    Some(i) => {
                        next.splice(i..i + 1, rhs.iter().cloned());
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || next.iter().filter(|s| !is_var(s)).count() > max_len {
                continue;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    shortlex_sorted(out)
}

/// `(3/5, 4/5)`-style rotation from the Pythagorean parametrisation at `t`.
pub fn rotation(t: Rational) -> QMatrix {
    let d = Rational::one() + &t * &t;
    let c = (Rational::one() - &t * &t) / &d;
    let s = (int(2) * &t) / &d;
    QMatrix::from_rows(vec![vec![c.clone(), s.clone()], vec![-s, c]]).unwrap()
}

pub fn random_signed_permutation<R: Rng>(rng: &mut R, n: usize) -> QMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut m = QMatrix::zeros(n);
    for (i, &j) in perm.iter().enumerate() {
        m.set(i, j, if rng.gen_bool(0.5) { int(1) } else { int(-1) });
    }
    m
}

/// A random rational orthogonal matrix of dimension 2 or 3: a signed
/// permutation, optionally times a plane rotation.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize, finite: bool) -> QMatrix {
    let p = random_signed_permutation(rng, n);
    if finite {
        return p;
    }
    let t = rat(rng.gen_range(1..5), rng.gen_range(2..7));
    let r = rotation(t);
    let mut e = QMatrix::identity(n);
    for i in 0..2 {
        for j in 0..2 {
            e.set(i, j, r.get(i, j).clone());
        }
    }
    &p * &e
}

/// Closes `gens` under multiplication; `None` past `cap` elements.
pub fn brute_group(gens: &[QMatrix], cap: usize) -> Option<BTreeSet<QMatrix>> {
    let n = gens[0].dim();
    let mut seen = BTreeSet::from([QMatrix::identity(n)]);
    let mut frontier = vec![QMatrix::identity(n)];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = &x * g;
            if seen.insert(y.clone()) {
                if seen.len() > cap {
                    return None;
                }
                frontier.push(y);
            }
        }
    }
    Some(seen)
}

type Mono = Vec<u16>;

fn eval_mono(m: &Mono, pt: &[Rational]) -> Rational {
    let mut v = Rational::one();
    for (x, &e) in pt.iter().zip(m) {
        for _ in 0..e {
            v *= x;
        }
    }
    v
}

fn divides(a: &Mono, b: &Mono) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn monomials_of_degree(n: usize, d: u16) -> Vec<Mono> {
    if n == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in monomials_of_degree(n - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Buchberger–Möller: the vanishing ideal of finitely many points, by
/// walking monomials in degree order and reducing evaluation vectors.
pub fn buchberger_moller(points: &[Vec<Rational>], nvars: usize) -> Vec<Poly> {
    let m = points.len();
    // reduced evaluation rows, each with the polynomial that produced it
    let mut basis: Vec<(Vec<Rational>, usize, BTreeMap<Mono, Rational>)> = Vec::new();
    let mut leads: Vec<Mono> = Vec::new();
    let mut out = Vec::new();
    let mut d = 0u16;
    loop {
        let mut any = false;
        for mono in monomials_of_degree(nvars, d) {
            if leads.iter().any(|l| divides(l, &mono)) {
                continue;
            }
            any = true;
            let mut v: Vec<Rational> = points.iter().map(|p| eval_mono(&mono, p)).collect();
            let mut poly = BTreeMap::from([(mono.clone(), Rational::one())]);
            for (row, pivot, p) in &basis {
                if !v[*pivot].is_zero() {
                    let f = v[*pivot].clone() / &row[*pivot];
                    for k in 0..m {
                        v[k] -= &f * &row[k];
                    }
                    for (e, c) in p {
                        *poly.entry(e.clone()).or_insert_with(Rational::zero) -= &f * c;
                    }
                }
            }
            match v.iter().position(|x| !x.is_zero()) {
                Some(pivot) => basis.push((v, pivot, poly)),
                None => {
                    leads.push(mono);
                    out.push(Poly::from_terms(nvars, poly.into_iter().filter(|(_, c)| !c.is_zero())));
                }
            }
        }
        if !any || (basis.len() == m && monomials_of_degree(nvars, d + 1).iter().all(|x| leads.iter().any(|l| divides(l, x)))) {
            return out;
        }
        d += 1;
    }
}

pub fn oracle_ideal(points: &[BlockMatrix]) -> PolyIdeal {
    let shape = points[0].shape();
    let vals: Vec<Vec<Rational>> = points.iter().map(|p| p.flat_entries()).collect();
    let n = vals[0].len();
    PolyIdeal::for_shape(&shape, buchberger_moller(&vals, n))
}

/// `‖s X P‖²` by explicit index sums.
pub fn naive_value(q: &QuantumAutomaton, x: &QMatrix) -> Rational {
    let n = q.dim;
    let s = q.s.entries();
    (0..n)
        .map(|j| {
            let mut v = Rational::zero();
            for i in 0..n {
                for t in 0..n {
                    v += &s[i] * x.get(i, t) * q.p.get(t, j);
                }
            }
            &v * &v
        })
        .fold(Rational::zero(), |a, b| a + b)
}
