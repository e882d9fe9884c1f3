//! Decides whether the language meets the strict cut-point language.
//!
//! Two branches run side by side: a symbolic one that asks whether the
//! closure of `φ(L)` contains a matrix `X` with `||s X P||^2 > λ`, and a
//! brute-force one that evaluates every word up to a length bound.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{format_rational, parse_rational, QMatrix, Rational};
use crate::grammar::{enumerate_words, GrammarError, GrammarSpec};
use crate::pipeline::{closure, ClosureReport, PipelineConfig};
use crate::qfa::{display_word, QuantumAutomaton, Word};
use crate::semialg::{search, Assignment, CalcError, Formula, SearchLimits, SearchOutcome, SemiAlgSet, SymPoly, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Empty,
    Nonempty,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverOutcome {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    NotRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossCheck {
    Agree,
    BruteOnly,
    SymbolicOnly,
    Conflict,
    Neither,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Symbolic,
    Brute,
    Both,
}

#[derive(Clone, Debug)]
pub struct DecideConfig {
    pub mode: Mode,
    pub pipeline: PipelineConfig,
    pub max_len: usize,
    /// External solver command; the query file path is appended.
    pub smt_cmd: Option<String>,
    pub timeout: Duration,
    pub enum_budget: usize,
    pub search: SearchLimits,
}

impl Default for DecideConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Both,
            pipeline: PipelineConfig::default(),
            max_len: 16,
            smt_cmd: std::env::var("CUTPOINT_SMT_CMD").ok().filter(|s| !s.trim().is_empty()),
            timeout: Duration::from_secs(60),
            enum_budget: crate::grammar::DEFAULT_ENUM_BUDGET,
            search: SearchLimits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub word: String,
    pub symbols: Vec<String>,
    pub accept_prob: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BruteSummary {
    pub max_len: usize,
    /// Largest bound fully enumerated.
    pub reached_len: Option<usize>,
    pub words_checked: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecisionReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// A closure point with value above the cut-point, verified exactly.
    pub symbolic_model: Option<Vec<Vec<String>>>,
    pub solver_outcome: SolverOutcome,
    /// `internal`, `external`, `short-circuit` or `none`.
    pub solver: String,
    pub certified: bool,
    pub cross_check: CrossCheck,
    pub brute: Option<BruteSummary>,
    pub closure: Option<Value>,
    pub notes: Vec<String>,
}

impl DecisionReport {
    pub fn exit_code(&self) -> i32 {
        if self.cross_check == CrossCheck::Conflict {
            return 4;
        }
        match self.verdict {
            Verdict::Empty => 0,
            Verdict::Nonempty => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// `||s X P||^2` as a polynomial in the entries of block 0.
pub fn p_acc(q: &QuantumAutomaton) -> SymPoly {
    let n = q.dim;
    let s = q.s.entries();
    let mut total = SymPoly::zero();
    for j in 0..n {
        let mut inner = SymPoly::zero();
        for i in 0..n {
            if s[i].is_zero() {
                continue;
            }
            for t in 0..n {
                let c = &s[i] * q.p.get(t, j);
                if !c.is_zero() {
                    inner = inner.add(&SymPoly::var(Var::new(0, i, t)).scale(&c));
                }
            }
        }
        total = total.add(&inner.mul(&inner));
    }
    total
}

/// `∃ X, bound . Φ(X) ∧ ||s X P||^2 > λ`.
#[derive(Clone, Debug)]
pub struct Query {
    pub set: SemiAlgSet,
    pub formula: Formula,
}

pub fn build_decision_query(set: &SemiAlgSet, q: &QuantumAutomaton) -> Result<Query, CalcError> {
    if set.free != [q.dim] {
        return Err(CalcError::Shape(format!("closure of shape {:?} for an automaton of dimension {}", set.free, q.dim)));
    }
    let gap = p_acc(q).sub(&SymPoly::constant(q.lambda.clone()));
    let formula = Formula::and(vec![set.body.clone(), Formula::gt(gap)]);
    Ok(Query { set: set.clone(), formula })
}

fn all_vars(set: &SemiAlgSet) -> Vec<Var> {
    let mut out = Vec::new();
    for b in 0..(set.free.len() + set.bound.len()) {
        let d = set.dim_of(b as u32);
        for i in 0..d {
            for j in 0..d {
                out.push(Var::new(b as u32, i, j));
            }
        }
    }
    out
}

/// Deterministic SMT-LIB 2 text over the reals.
pub fn emit_smtlib(query: &Query) -> String {
    let set = &query.set;
    let name = |v: Var| set.var_name(v);
    let mut out = String::from("(set-logic QF_NRA)\n");
    let vars = all_vars(set);
    for v in &vars {
        out.push_str(&format!("(declare-const {} Real)\n", name(v.to_owned())));
    }
    let parts: Vec<&Formula> = match &query.formula {
        Formula::And(xs) => xs.iter().collect(),
        f => vec![f],
    };
    for p in parts {
        if matches!(p, Formula::Hint(_) | Formula::True) {
            continue;
        }
        out.push_str(&format!("(assert {})\n", p.to_smt(&name)));
    }
    out.push_str("(check-sat)\n");
    out.push_str(&format!("(get-value ({}))\n", vars.iter().map(|v| name(*v)).collect::<Vec<_>>().join(" ")));
    out
}

static QUERY_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Raw solver answer plus any `(name value)` pairs it printed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverAnswer {
    pub outcome: SolverOutcome,
    pub output: String,
}

/// Runs `command <file>` with the query in a temporary file.
pub fn run_solver(text: &str, command: &str, timeout: Duration) -> SolverAnswer {
    let not_run = |msg: String| SolverAnswer { outcome: SolverOutcome::NotRun, output: msg };
    let mut parts = command.split_whitespace();
    let Some(program) = parts.next() else {
        return not_run("empty solver command".into());
    };
    let path: PathBuf = std::env::temp_dir().join(format!(
        "cutpoint-{}-{}.smt2",
        std::process::id(),
        QUERY_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    if let Err(e) = std::fs::write(&path, text) {
        return not_run(format!("cannot write query: {e}"));
    }
    let child = Command::new(program).args(parts).arg(&path).stdout(Stdio::piped()).stderr(Stdio::null()).spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => {
            let _ = std::fs::remove_file(&path);
            return not_run(format!("cannot start {program}: {e}"));
        }
    };
    let mut stdout = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let timed_out = loop {
        match child.try_wait() {
            Ok(Some(_)) => break false,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break true;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(_) => break false,
        }
    };
    let output = reader.join().unwrap_or_default();
    let _ = std::fs::remove_file(&path);
    if timed_out {
        return SolverAnswer { outcome: SolverOutcome::Timeout, output };
    }
    let outcome = match output.split_whitespace().next() {
        Some("sat") => SolverOutcome::Sat,
        Some("unsat") => SolverOutcome::Unsat,
        _ => SolverOutcome::Unknown,
    };
    SolverAnswer { outcome, output }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Vec<Sexp> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                if stack.len() > 1 {
                    let l = stack.pop().unwrap();
                    stack.last_mut().unwrap().push(Sexp::List(l));
                }
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(t)),
        }
    }
    stack.swap_remove(0)
}

/// `12`, `0.25` or `p/q`.
fn parse_decimal(text: &str) -> Option<Rational> {
    if let Ok(r) = parse_rational(text) {
        return Some(r);
    }
    let (int_part, frac) = text.split_once('.')?;
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = parse_rational(&format!("{int_part}{frac}")).ok()?;
    Some(digits / Rational::from_integer(num_bigint::BigInt::from(10u32).pow(frac.len() as u32)))
}

fn sexp_value(e: &Sexp) -> Option<Rational> {
    match e {
        Sexp::Atom(a) => parse_decimal(a),
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Some(-sexp_value(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = sexp_value(y)?;
                if d.is_zero() { None } else { Some(sexp_value(x)? / d) }
            }
            _ => None,
        },
    }
}

/// Exact values from a `get-value` response; `None` if any value is irrational or missing.
pub fn parse_model(output: &str, names: &[String]) -> Option<BTreeMap<String, Rational>> {
    let mut out = BTreeMap::new();
    for e in parse_sexps(output) {
        if let Sexp::List(pairs) = e {
            for p in pairs {
                if let Sexp::List(kv) = p {
                    if let [Sexp::Atom(k), v] = kv.as_slice() {
                        out.insert(k.clone(), sexp_value(v)?);
                    }
                }
            }
        }
    }
    names.iter().all(|n| out.contains_key(n)).then_some(out)
}

/// Shortlex-first word up to `max_len` in the cut-point language.
pub fn brute_force(g: &GrammarSpec, q: &QuantumAutomaton, max_len: usize, budget: usize) -> (Option<Witness>, BruteSummary) {
    let mut summary = BruteSummary { max_len, reached_len: None, words_checked: 0, error: None };
    let mut bounds: Vec<usize> = Vec::new();
    let mut b = 0;
    loop {
        bounds.push(b.min(max_len));
        if b >= max_len {
            break;
        }
        b = if b == 0 { 1 } else { 2 * b };
    }
    bounds.dedup();
    for bound in bounds {
        let words: Vec<Word> = match enumerate_words(g, bound, budget) {
            Ok(w) => w,
            Err(e) => {
                summary.error = Some(match e {
                    GrammarError::Budget { .. } => format!("{e} at length {bound}"),
                    e => e.to_string(),
                });
                return (None, summary);
            }
        };
        summary.words_checked = words.len();
        for w in &words {
            match q.accept_prob(w) {
                Ok(p) if p > q.lambda => {
                    summary.reached_len = Some(bound);
                    return (
                        Some(Witness { word: display_word(w), symbols: w.clone(), accept_prob: format_rational(&p) }),
                        summary,
                    );
                }
                Ok(_) => {}
                Err(e) => {
                    summary.error = Some(e.to_string());
                    return (None, summary);
                }
            }
        }
        summary.reached_len = Some(bound);
    }
    (None, summary)
}

struct Symbolic {
    verdict: Verdict,
    outcome: SolverOutcome,
    solver: String,
    certified: bool,
    model: Option<QMatrix>,
    closure: Option<ClosureReport>,
    notes: Vec<String>,
}

fn verify_model(query: &Query, asg: &Assignment, q: &QuantumAutomaton) -> Option<QMatrix> {
    if !query.formula.eval(asg) {
        return None;
    }
    let x = QMatrix::from_fn(q.dim, |i, j| asg.get(&Var::new(0, i, j)).cloned().unwrap_or_else(Rational::zero));
    (q.value_of_matrix(&x) > q.lambda).then_some(x)
}

fn symbolic(g: &GrammarSpec, q: &QuantumAutomaton, cfg: &DecideConfig) -> Symbolic {
    let mut s = Symbolic {
        verdict: Verdict::Inconclusive,
        outcome: SolverOutcome::NotRun,
        solver: "none".into(),
        certified: false,
        model: None,
        closure: None,
        notes: Vec::new(),
    };
    let rep = match closure(g, q, &cfg.pipeline) {
        Ok(r) => r,
        Err(e) => {
            s.notes.push(format!("closure failed: {e}"));
            return s;
        }
    };
    s.certified = rep.certified;
    if !rep.certified {
        s.notes.push("closure not certified; symbolic answers cannot decide".into());
    }
    let query = match build_decision_query(&rep.formula, q) {
        Ok(x) => x,
        Err(e) => {
            s.notes.push(e.to_string());
            s.closure = Some(rep);
            return s;
        }
    };
    s.solver = "internal".into();
    match search(&query.formula, Assignment::new(), &cfg.search) {
        SearchOutcome::Unsat => {
            s.outcome = SolverOutcome::Unsat;
        }
        SearchOutcome::Sat(asg) => match verify_model(&query, &asg, q) {
            Some(x) => {
                s.outcome = SolverOutcome::Sat;
                s.model = Some(x);
            }
            None => s.notes.push("internal model failed the exact recheck".into()),
        },
        SearchOutcome::Unknown => match &cfg.smt_cmd {
            None => s.notes.push("internal search inconclusive and no external solver configured".into()),
            Some(cmd) => {
                s.solver = "external".into();
                let text = emit_smtlib(&query);
                let ans = run_solver(&text, cmd, cfg.timeout);
                s.outcome = ans.outcome;
                match ans.outcome {
                    SolverOutcome::Sat => {
                        let vars = all_vars(&query.set);
                        let names: Vec<String> = vars.iter().map(|v| query.set.var_name(*v)).collect();
                        let model = parse_model(&ans.output, &names).and_then(|m| {
                            let asg: Assignment = vars.iter().zip(&names).map(|(v, n)| (*v, m[n].clone())).collect();
                            verify_model(&query, &asg, q)
                        });
                        match model {
                            Some(x) => s.model = Some(x),
                            None => s.notes.push("solver model is not exactly rational or fails the recheck".into()),
                        }
                    }
                    SolverOutcome::NotRun => s.notes.push(ans.output.trim().to_string()),
                    _ => {}
                }
            }
        },
    }
    if rep.certified {
        if s.outcome == SolverOutcome::Unsat {
            s.verdict = Verdict::Empty;
        } else if s.model.is_some() {
            s.verdict = Verdict::Nonempty;
        }
    }
    s.closure = Some(rep);
    s
}

/// Answers that need no closure: `λ >= 1`, or a constant acceptance value.
fn short_circuit(q: &QuantumAutomaton) -> Option<String> {
    if q.lambda >= Rational::one() {
        return Some("cut-point at least 1; acceptance values never exceed 1".into());
    }
    if let Some(c) = p_acc(q).as_constant() {
        if c <= q.lambda {
            return Some(format!("acceptance value is constantly {} ≤ λ", format_rational(&c)));
        }
    }
    None
}

pub fn decide(q: &QuantumAutomaton, g: &GrammarSpec, cfg: &DecideConfig) -> DecisionReport {
    let short = short_circuit(q);
    let run_brute = cfg.mode != Mode::Symbolic;
    let run_sym = cfg.mode != Mode::Brute && short.is_none();
    let (sym, brute) = std::thread::scope(|scope| {
        let b = scope.spawn(|| run_brute.then(|| brute_force(g, q, cfg.max_len, cfg.enum_budget)));
        let s = run_sym.then(|| symbolic(g, q, cfg));
        (s, b.join().expect("brute-force thread"))
    });
    let (witness, brute_summary) = match brute {
        Some((w, s)) => (w, Some(s)),
        None => (None, None),
    };
    let mut notes = Vec::new();
    let (sym_verdict, outcome, solver, certified, model, closure_value) = match (&short, sym) {
        (Some(reason), _) => {
            notes.push(reason.clone());
            (Verdict::Empty, SolverOutcome::NotRun, "short-circuit".to_string(), true, None, None)
        }
        (None, Some(s)) => {
            notes.extend(s.notes);
            let cv = s.closure.map(|c| {
                json!({ "certified": c.certified, "provenance": c.provenance, "warnings": c.warnings })
            });
            (s.verdict, s.outcome, s.solver, s.certified, s.model, cv)
        }
        (None, None) => (Verdict::Inconclusive, SolverOutcome::NotRun, "none".to_string(), false, None, None),
    };
    let sym_conclusive = sym_verdict != Verdict::Inconclusive;
    let cross_check = match (witness.is_some(), sym_verdict) {
        (true, Verdict::Empty) => CrossCheck::Conflict,
        (true, Verdict::Nonempty) => CrossCheck::Agree,
        (true, Verdict::Inconclusive) => CrossCheck::BruteOnly,
        (false, _) if sym_conclusive => CrossCheck::SymbolicOnly,
        _ => CrossCheck::Neither,
    };
    if cross_check == CrossCheck::Conflict {
        notes.push("certified EMPTY contradicts an exactly verified witness".into());
    }
    let verdict = if witness.is_some() { Verdict::Nonempty } else { sym_verdict };
    DecisionReport {
        verdict,
        witness,
        symbolic_model: model.map(|m| m.rows().iter().map(|r| r.iter().map(format_rational).collect()).collect()),
        solver_outcome: outcome,
        solver,
        certified,
        cross_check,
        brute: brute_summary,
        closure: closure_value,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat, BlockMatrix, QVector};
    use crate::grammar::parse_grammar;
    use crate::zariski::closure::{group_closure, ClosureConfig};
    use crate::zariski::groebner::Budget;

    fn r() -> QMatrix {
        QMatrix::from_ratios(&[&[(3, 5), (4, 5)], &[(-4, 5), (3, 5)]])
    }

    fn qfa(lambda: Rational, b: QMatrix) -> QuantumAutomaton {
        QuantumAutomaton {
            dim: 2,
            alphabet: vec!["a".into(), "b".into()],
            s: QVector::new(vec![int(1), int(0)]),
            phi: [("a".to_string(), r()), ("b".to_string(), b)].into_iter().collect(),
            p: QMatrix::from_ints(&[&[1, 0], &[0, 0]]),
            lambda,
        }
    }

    fn anbn() -> GrammarSpec {
        parse_grammar(r#"{"kind":"linear","productions":["S -> a S b | ε"]}"#).unwrap()
    }

    fn no_solver() -> DecideConfig {
        DecideConfig { smt_cmd: None, ..DecideConfig::default() }
    }

    #[test]
    fn point_query_is_ground() {
        let q = qfa(rat(1, 2), r().transpose());
        let query = build_decision_query(&SemiAlgSet::point_matrix(&QMatrix::identity(2)), &q).unwrap();
        assert_eq!(search(&query.formula, Assignment::new(), &SearchLimits::default()).is_sat(), true);
        let text = emit_smtlib(&query);
        assert_eq!(text.matches("(assert (= ").count(), 4);
        assert_eq!(text.matches("(assert (> ").count(), 1);
        assert_eq!(text, emit_smtlib(&query));
    }

    #[test]
    fn so2_query() {
        let q = qfa(rat(1, 2), r().transpose());
        let so2 = group_closure(&[2], &[BlockMatrix::new(vec![r()])], &ClosureConfig::default()).unwrap().ideal;
        let set = SemiAlgSet::from_ideal(&so2, &Budget::default()).unwrap();
        let query = build_decision_query(&set, &q).unwrap();
        let text = emit_smtlib(&query);
        assert_eq!(text.matches("(assert (= ").count(), 3);
        assert_eq!(text.matches("(assert (> ").count(), 1);
        let mut asg = Assignment::new();
        crate::semialg::assign_block(&mut asg, 0, &QMatrix::identity(2));
        assert!(query.formula.eval(&asg));
    }

    #[test]
    fn witnesses() {
        let g = anbn();
        let (w, _) = brute_force(&g, &qfa(int(-1), r().transpose()), 4, 1000);
        assert_eq!(w.unwrap().word, "");
        let (w, _) = brute_force(&g, &qfa(rat(1, 2), r().transpose()), 4, 1000);
        assert_eq!(w.unwrap().accept_prob, "1");
        let (w, s) = brute_force(&g, &qfa(int(1), r().transpose()), 8, 1000);
        assert!(w.is_none());
        assert_eq!(s.reached_len, Some(8));
    }

    #[test]
    fn decisions() {
        let g = anbn();
        let rep = decide(&qfa(int(1), r().transpose()), &g, &no_solver());
        assert_eq!(rep.verdict, Verdict::Empty);
        assert_eq!(rep.solver_outcome, SolverOutcome::NotRun);
        let rep = decide(&qfa(rat(1, 2), r().transpose()), &g, &no_solver());
        assert_eq!(rep.verdict, Verdict::Nonempty);
        assert_eq!(rep.witness.as_ref().unwrap().word, "");
        assert_eq!(rep.cross_check, CrossCheck::Agree);
        // only I is reachable and ||sP||^2 = 1
        let rep = decide(&qfa(rat(99, 100), r().transpose()), &g, &no_solver());
        assert_eq!(rep.verdict, Verdict::Nonempty);
        let mut q = qfa(rat(1, 2), r().transpose());
        q.s = QVector::new(vec![int(0), int(1)]);
        // the cycle group is SO(2); only an external solver refutes the sandwich
        let rep = decide(&q, &g, &no_solver());
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(rep.certified);
        if std::path::Path::new("/usr/local/bin/z3").exists() {
            let cfg = DecideConfig { smt_cmd: Some("/usr/local/bin/z3".into()), ..no_solver() };
            let rep = decide(&q, &g, &cfg);
            assert_eq!(rep.verdict, Verdict::Empty, "{rep:#?}");
            assert_eq!(rep.solver, "external");
        }
    }

    #[test]
    fn solver_protocol() {
        let t = Duration::from_secs(5);
        assert_eq!(run_solver("", "echo sat", t).outcome, SolverOutcome::Sat);
        assert_eq!(run_solver("", "echo garbage", t).outcome, SolverOutcome::Unknown);
        assert_eq!(run_solver("", "/nonexistent/solver", t).outcome, SolverOutcome::NotRun);
        assert_eq!(run_solver("", "tail -f", Duration::from_millis(100)).outcome, SolverOutcome::Timeout);
    }

    #[test]
    fn models() {
        let names = vec!["X0_1_1".to_string(), "X0_1_2".to_string()];
        let m = parse_model("sat\n((X0_1_1 (/ 3.0 5.0))\n (X0_1_2 (- 0.5)))", &names).unwrap();
        assert_eq!(m["X0_1_1"], rat(3, 5));
        assert_eq!(m["X0_1_2"], rat(-1, 2));
        assert!(parse_model("sat ((X0_1_1 (root-obj (+ (^ x 2) (- 2)) 1)) (X0_1_2 0.0))", &names).is_none());
    }

    impl SearchOutcome {
        fn is_sat(&self) -> bool {
            matches!(self, SearchOutcome::Sat(_))
        }
    }
}
