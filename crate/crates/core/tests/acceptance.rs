//! Acceptance gate. Prints one line per criterion and exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use cutpoint::arith::{int, rat, BlockMatrix, QMatrix, QVector};
use cutpoint::decide::{CrossCheck, Mode, Verdict};
use cutpoint::frontend::{cmd_decide, RunConfig};
use cutpoint::grammar::{enumerate_words, GrammarSpec, MinimalLinear};
use cutpoint::pipeline::{closure, component_closure, PipelineConfig};
use cutpoint::qfa::{parse_word, QuantumAutomaton};
use cutpoint::semialg::{Probe, SearchLimits, SemiAlgSet};
use cutpoint::zariski::chain::product_chain;
use cutpoint::zariski::closure::{group_closure, ClosureConfig};
use cutpoint::zariski::groebner::Budget;
use cutpoint::zariski::ideal::{ideal_equal, image_closure, product_map, tensor, PolyIdeal};
use cutpoint::zariski::poly::parse_poly;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROTATION_TIME_LIMIT: Duration = Duration::from_secs(5);
const ROTATION_DEGREE_CAP: u32 = 4;
const FINITE_GROUP_SETS: usize = 10;
const FINITE_DEGREE_CAP: u32 = 8;
const PRODUCT_PAIRS: usize = 25;
const PROBE_LEN: usize = 8;
const MIN_CORPUS: usize = 30;
const ABC_MAX_N: u32 = 6;
const SEED: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn r() -> QMatrix {
    QMatrix::from_ratios(&[&[(3, 5), (4, 5)], &[(-4, 5), (3, 5)]])
}

fn rotation_group() -> Outcome {
    let names = ["x11", "x12", "x21", "x22"];
    let expected = PolyIdeal::for_shape(
        &[2],
        ["x11 - x22", "x12 + x21", "x11^2 + x12^2 - 1"].iter().map(|t| parse_poly(t, &names).unwrap()).collect(),
    );
    let cfg = ClosureConfig { degree_cap: ROTATION_DEGREE_CAP, ..ClosureConfig::default() };
    let t = Instant::now();
    let k = match group_closure(&[2], &[BlockMatrix::new(vec![r()])], &cfg) {
        Ok(k) => k,
        Err(e) => return outcome(false, format!("closure failed: {e}")),
    };
    let elapsed = t.elapsed();
    let equal = ideal_equal(&k.ideal, &expected, &Budget::default()).unwrap_or(false);
    outcome(
        equal && k.translation_invariant && elapsed < ROTATION_TIME_LIMIT,
        format!("ideal equal {equal}, translation-invariant {}, {:.2?} < {ROTATION_TIME_LIMIT:?}", k.translation_invariant, elapsed),
    )
}

fn finite_groups() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cfg = ClosureConfig { degree_cap: FINITE_DEGREE_CAP, ..ClosureConfig::default() };
    let mut orders = Vec::new();
    for k in 0..FINITE_GROUP_SETS {
        let n = 2 + k % 2;
        let gens: Vec<QMatrix> = (0..rng.gen_range(1..=2)).map(|_| random_signed_permutation(&mut rng, n)).collect();
        let Some(points) = brute_group(&gens, 10_000) else {
            return outcome(false, format!("set {k}: enumeration did not terminate"));
        };
        let pts: Vec<BlockMatrix> = points.into_iter().map(|m| BlockMatrix::new(vec![m])).collect();
        let oracle = oracle_ideal(&pts);
        let tuples: Vec<BlockMatrix> = gens.iter().map(|g| BlockMatrix::new(vec![g.clone()])).collect();
        let ours = match group_closure(&[n], &tuples, &cfg) {
            Ok(c) => c.ideal,
            Err(e) => return outcome(false, format!("set {k}: {e}")),
        };
        if !ideal_equal(&ours, &oracle, &Budget::default()).unwrap_or(false) {
            return outcome(false, format!("set {k} (n = {n}, order {}): ideals differ", pts.len()));
        }
        orders.push(pts.len());
    }
    outcome(true, format!("{FINITE_GROUP_SETS} sets, group orders {orders:?}"))
}

fn products_of_finite_sets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let budget = Budget::default();
    for k in 0..PRODUCT_PAIRS {
        let pick = |rng: &mut ChaCha8Rng| -> Vec<QMatrix> {
            let size = rng.gen_range(1..=3);
            let finite = rng.gen_bool(0.5);
            (0..size).map(|_| random_orthogonal(rng, 2, finite)).collect::<BTreeSet<_>>().into_iter().collect()
        };
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        let ab: BTreeSet<QMatrix> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let tuples = |s: &[QMatrix]| -> Vec<BlockMatrix> { s.iter().map(|m| BlockMatrix::new(vec![m.clone()])).collect() };
        let set = SemiAlgSet::product(
            &SemiAlgSet::points(&[2], &tuples(&a)).unwrap(),
            &SemiAlgSet::points(&[2], &tuples(&b)).unwrap(),
        )
        .unwrap();
        let (members, complete) = set.members(&SearchLimits::default());
        let members: BTreeSet<QMatrix> = members.into_iter().map(|t| t[0].clone()).collect();
        if !complete || members != ab {
            return outcome(false, format!("pair {k}: member set differs (complete {complete})"));
        }
        // closure of the product against the product of closures
        let ia = PolyIdeal::vanishing(&tuples(&a), &budget).unwrap();
        let ib = PolyIdeal::vanishing(&tuples(&b), &budget).unwrap();
        let prod = tensor(&ia, &ib, &budget).and_then(|t| image_closure(&t, &product_map(&[2]), &[2], &budget));
        let ab_vec: Vec<QMatrix> = ab.iter().cloned().collect();
        let oracle = oracle_ideal(&tuples(&ab_vec));
        match prod {
            Ok(p) if ideal_equal(&p, &oracle, &budget).unwrap_or(false) => {}
            Ok(_) => return outcome(false, format!("pair {k}: closure of product differs")),
            Err(e) => return outcome(false, format!("pair {k}: {e}")),
        }
    }
    outcome(true, format!("{PRODUCT_PAIRS} pairs, member sets and closures exact"))
}

/// Fixture grammars paired with automata over their letters.
fn probe_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("star-anbn-monoidal", "rotation"),
        ("star-anbn-monoidal", "signed-perm3"),
        ("abc-matrix", "zero-projector"),
        ("abc-matrix", "finite-abc"),
        ("l2-squares", "rotation-swap"),
        ("anbn", "rotation"),
        ("bounded-semilinear", "rotation"),
        ("bounded-semilinear", "rotation-swap"),
        ("palindromes", "rotation-swap"),
        ("two-blocks-metalinear", "rotation"),
        ("monoidal-two-letters", "rotation-swap"),
    ]
}

fn soundness_probes() -> Outcome {
    let mut count = 0;
    for (g, q) in probe_pairs() {
        let (gs, qa) = (grammar(g), qfa(q));
        let rep = match closure(&gs, &qa, &PipelineConfig::default()) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("{g}/{q}: {e}")),
        };
        for w in enumerate_words(&gs, PROBE_LEN, 1_000_000).unwrap() {
            let x = qa.phi_of_word(&w).unwrap();
            if rep.formula.probe(&[x], None) != Probe::True {
                return outcome(false, format!("{g}/{q}: probe failed at {w:?}"));
            }
            count += 1;
        }
    }
    outcome(true, format!("{count} probes over {} pairs, all true", probe_pairs().len()))
}

fn with(q: &QuantumAutomaton, f: impl FnOnce(&mut QuantumAutomaton)) -> QuantumAutomaton {
    let mut q = q.clone();
    f(&mut q);
    q
}

fn cross_check_corpus() -> Outcome {
    let mut cases: Vec<(String, GrammarSpec, QuantumAutomaton, Verdict)> = Vec::new();
    for (g, q) in probe_pairs() {
        let (gs, qa) = (grammar(g), qfa(q));
        cases.push((format!("{g}/{q} λ=1"), gs.clone(), with(&qa, |q| q.lambda = int(1)), Verdict::Empty));
        cases.push((
            format!("{g}/{q} P=0"),
            gs.clone(),
            with(&qa, |q| {
                q.p = QMatrix::zeros(q.dim);
                q.lambda = rat(1, 10);
            }),
            Verdict::Empty,
        ));
        // best word up to length 4, by enumeration
        let best = enumerate_words(&gs, 4, 100_000)
            .unwrap()
            .iter()
            .map(|w| qa.accept_prob(w).unwrap())
            .max()
            .unwrap();
        if best > int(0) {
            cases.push((format!("{g}/{q} λ<best"), gs.clone(), with(&qa, |q| q.lambda = &best * rat(99, 100)), Verdict::Nonempty));
        }
        // every word lands in the generated group, so its maximum bounds the language
        let gens: Vec<QMatrix> = qa.phi.values().cloned().collect();
        if let Some(group) = brute_group(&gens, 100) {
            let top = group.iter().map(|x| naive_value(&qa, x)).max().unwrap();
            cases.push((format!("{g}/{q} λ=max group"), gs.clone(), with(&qa, |q| q.lambda = top), Verdict::Empty));
        }
        if enumerate_words(&gs, 0, 10).unwrap().len() == 1 {
            let pe = qa.accept_prob(&parse_word("")).unwrap();
            if pe > int(0) {
                cases.push((format!("{g}/{q} λ<p(ε)"), gs, with(&qa, |q| q.lambda = pe - rat(1, 100)), Verdict::Nonempty));
            }
        }
    }
    let cfg = RunConfig { max_len: 8, smt_cmd: None, ..RunConfig::default() };
    let (mut certified, mut right, mut conflicts) = (0, 0, 0);
    let mut wrong = Vec::new();
    for (name, g, q, expect) in &cases {
        let rep = cmd_decide(q, g, &cfg).unwrap();
        if rep.cross_check == CrossCheck::Conflict {
            conflicts += 1;
        }
        if rep.certified {
            certified += 1;
            if rep.verdict == *expect {
                right += 1;
            } else {
                wrong.push(name.clone());
            }
        }
    }
    outcome(
        cases.len() >= MIN_CORPUS && wrong.is_empty() && conflicts == 0 && certified > 0,
        format!("{} instances, {right}/{certified} certified runs correct, {conflicts} conflicts {wrong:?}", cases.len()),
    )
}

fn chain_bound() -> Outcome {
    let budget = Budget::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for name in fixture_names("grammars") {
        let GrammarSpec::Monoidal(g) = grammar(&name) else { continue };
        let lowest: Vec<(String, MinimalLinear)> = match g.levels.last() {
            Some(l) => l.iter().map(|(a, c)| (a.clone(), c.clone())).collect(),
            None => vec![("top".into(), g.top.clone())],
        };
        for qn in ["rotation", "rotation-swap", "finite-abc", "signed-perm3"] {
            let q = qfa(&qn);
            if g.terminals().iter().any(|a| !q.phi.contains_key(a)) {
                continue;
            }
            let n = q.dim;
            for (a, c) in &lowest {
                let (f, _) = component_closure(c, &q, &PipelineConfig::default()).unwrap();
                let chain = product_chain(&f, None, &budget).unwrap();
                let s = chain.summary();
                let ok = s.steps_used <= n * n && (s.stabilized || c.irreducible != Some(true));
                pass &= ok;
                lines.push(format!("{name}/{qn}/{a}: {} ≤ {} stabilized {}", s.steps_used, n * n, s.stabilized));
            }
        }
    }
    outcome(pass && !lines.is_empty(), lines.join("; "))
}

fn abc_matrix_finite() -> Outcome {
    let (g, q) = (grammar("abc-matrix"), qfa("finite-abc"));
    let rep = closure(&g, &q, &PipelineConfig::default()).unwrap();
    let (members, complete) = rep.formula.members(&SearchLimits::default());
    let members: BTreeSet<QMatrix> = members.into_iter().map(|t| t[0].clone()).collect();
    let brute: BTreeSet<QMatrix> = (0..=ABC_MAX_N)
        .map(|n| &(&q.phi["a"].pow(n) * &q.phi["b"].pow(n)) * &q.phi["c"].pow(n))
        .collect();
    outcome(
        complete && members == brute && rep.certified,
        format!("{} member(s), {} brute image(s), complete {complete}", members.len(), brute.len()),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let stub = dir.path().join("stub.sh");
    std::fs::write(&stub, "#!/bin/sh\necho unknown\n").unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&stub, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let cfg = RunConfig { smt_cmd: Some(stub.display().to_string()), max_len: 10, ..RunConfig::default() };
    let mut cases = vec![(grammar("anbn"), with(&qfa("rotation"), |q| q.s = QVector::new(vec![int(0), int(1)])))];
    for (g, q) in probe_pairs() {
        cases.push((grammar(g), qfa(q)));
    }
    let mut stub_used = false;
    for (g, q) in &cases {
        let a = cmd_decide(q, g, &cfg).unwrap();
        let b = cmd_decide(q, g, &cfg).unwrap();
        stub_used |= a.solver == "external";
        if a.to_json() != b.to_json() {
            return outcome(false, "reports differ");
        }
    }
    let brute_only = RunConfig { mode: Mode::Brute, ..cfg };
    let (g, q) = &cases[0];
    let same = cmd_decide(q, g, &brute_only).unwrap().to_json() == cmd_decide(q, g, &brute_only).unwrap().to_json();
    outcome(same && stub_used, format!("{} instances byte-identical, solver stub exercised {stub_used}", cases.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("rotation-group closure", rotation_group),
        ("finite-group oracle", finite_groups),
        ("products of finite sets", products_of_finite_sets),
        ("soundness probes", soundness_probes),
        ("cross-check corpus", cross_check_corpus),
        ("chain bound", chain_bound),
        ("restricted-matrix decomposition", abc_matrix_finite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        println!("{} {}. {name}: {} [{:.2?}]", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail, t.elapsed());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
