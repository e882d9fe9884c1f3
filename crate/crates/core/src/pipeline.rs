//! Builds the closure of `φ(L)` as a semialgebraic set for each grammar class.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{BlockMatrix, QMatrix};
use crate::cycles::{cycle_automaton_linear, cycle_automaton_matrix, group_generators, GroupAutomaton};
use crate::grammar::{
    enumerate_words, Factor, GrammarError, GrammarMatrix, GrammarSpec, LinearGrammar, MetalinearGrammar, MinimalLinear,
    MonoidalGrammar, RestrictedMatrixGrammar,
};
use crate::qfa::{QfaError, QuantumAutomaton, Symbol, Word};
use crate::semialg::{CalcError, SemiAlgSet};
use crate::zariski::chain::product_chain;
use crate::zariski::closure::{enumerate_group, group_closure, ClosureConfig};
use crate::zariski::groebner::ResourceError;
use crate::zariski::ideal::{image_closure, intersect, shape_vars, tensor, var_index, PolyIdeal};
use crate::zariski::poly::Poly;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Qfa(#[from] QfaError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error("{0}")]
    TooLarge(String),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub closure: ClosureConfig,
    /// Chain step cap; `None` means the number of matrix entries.
    pub chain_cap: Option<usize>,
    /// Cycle words up to this total length seed the search hints.
    pub sample_len: usize,
    /// Largest number of variable tuples in a matrix grammar.
    pub max_states: usize,
    pub max_sequences: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { closure: ClosureConfig::default(), chain_cap: None, sample_len: 8, max_states: 12, max_sequences: 20_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub step: String,
    pub detail: String,
    pub certified: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Provenance>,
}

impl Provenance {
    fn leaf(step: &str, detail: impl Into<String>, certified: bool) -> Self {
        Self { step: step.to_string(), detail: detail.into(), certified, children: Vec::new() }
    }

    fn node(step: &str, detail: impl Into<String>, children: Vec<Provenance>) -> Self {
        let certified = children.iter().all(|c| c.certified);
        Self { step: step.to_string(), detail: detail.into(), certified, children }
    }
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub formula: SemiAlgSet,
    pub certified: bool,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
    pub elapsed_ms: u128,
}

impl ClosureReport {
    pub fn to_value(&self, with_timing: bool) -> Value {
        let mut v = json!({
            "certified": self.certified,
            "formula": self.formula.to_value(),
            "provenance": self.provenance,
            "warnings": self.warnings,
        });
        if with_timing {
            v["elapsed_ms"] = json!(self.elapsed_ms as u64);
        }
        v
    }
}

#[derive(Clone, Debug)]
struct Part {
    set: SemiAlgSet,
    prov: Provenance,
}

impl Part {
    fn certified(&self) -> bool {
        self.prov.certified
    }
}

fn check_alphabet(g: &GrammarSpec, q: &QuantumAutomaton) -> Result<(), PipelineError> {
    for a in g.terminals() {
        if !q.phi.contains_key(&a) {
            return Err(QfaError::UnknownSymbol(a).into());
        }
    }
    Ok(())
}

/// Closure of the image of the language, with certification flags.
pub fn closure(g: &GrammarSpec, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<ClosureReport, PipelineError> {
    check_alphabet(g, q)?;
    let start = Instant::now();
    let mut warnings = Vec::new();
    let part = match g {
        GrammarSpec::Linear(l) => closure_linear_part(l, q, cfg)?,
        GrammarSpec::Metalinear(m) => closure_metalinear_part(m, q, cfg)?,
        GrammarSpec::RestrictedMatrix(m) => closure_matrix_part(m, q, cfg)?,
        GrammarSpec::Monoidal(m) => closure_monoidal_part(m, q, cfg, &mut warnings)?,
    };
    Ok(ClosureReport {
        certified: part.certified(),
        formula: part.set,
        provenance: part.prov,
        warnings,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

pub fn closure_linear(g: &LinearGrammar, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<ClosureReport, PipelineError> {
    closure(&GrammarSpec::Linear(g.clone()), q, cfg)
}

fn tuple_of(q: &QuantumAutomaton, words: &[(Word, Word)]) -> Result<BlockMatrix, QfaError> {
    let mut blocks = Vec::new();
    for (u, v) in words {
        blocks.push(q.phi_of_word(u)?);
        blocks.push(q.phi_of_word(v)?.transpose());
    }
    Ok(BlockMatrix::new(blocks))
}

/// Closure of the group generated by the cycle monoid of `aut`, with hints.
fn cycle_closure(aut: &GroupAutomaton, q: &QuantumAutomaton, cfg: &PipelineConfig, name: &str) -> Result<Part, PipelineError> {
    let gens = group_generators(aut);
    let shape = aut.shape.clone();
    if gens.generators.is_empty() {
        let set = SemiAlgSet::point(&BlockMatrix::identity(&shape));
        return Ok(Part { set, prov: Provenance::leaf("cycle-closure", format!("{name}: trivial cycle group"), true) });
    }
    let samples = || -> Result<Vec<BlockMatrix>, QfaError> {
        let words = gens.automaton.cycle_words(cfg.sample_len, 200_000).unwrap_or_default();
        let mut out: BTreeSet<BlockMatrix> = BTreeSet::new();
        for w in &words {
            out.insert(tuple_of(q, w)?);
        }
        Ok(out.into_iter().collect())
    };
    let detail_gens = format!("{name}: {} generator(s)", gens.generators.len());
    let result = group_closure(&shape, &gens.generators, &cfg.closure)
        .and_then(|c| SemiAlgSet::from_ideal(&c.ideal, &cfg.closure.budget).map(|s| (s, c)));
    match result {
        Ok((set, c)) => {
            let certified = c.certified();
            let set = match (&c.elements, certified) {
                (Some(els), true) => set.with_hint(els.clone(), true),
                _ => set.with_hint(samples()?, false),
            };
            let detail = format!(
                "{detail_gens}; certificate {}; translation-invariant {}",
                serde_json::to_string(&c.certificate).unwrap_or_default(),
                c.translation_invariant
            );
            Ok(Part { set, prov: Provenance::leaf("cycle-closure", detail, certified) })
        }
        Err(e) => {
            let set = SemiAlgSet::whole(&shape).with_hint(samples()?, false);
            Ok(Part { set, prov: Provenance::leaf("cycle-closure", format!("{detail_gens}; gave up: {e}"), false) })
        }
    }
}

fn word_point(q: &QuantumAutomaton, w: &[Symbol]) -> Result<SemiAlgSet, QfaError> {
    Ok(SemiAlgSet::point_matrix(&q.phi_of_word(w)?))
}

struct LinearCtx<'a> {
    g: &'a LinearGrammar,
    q: &'a QuantumAutomaton,
    cfg: &'a PipelineConfig,
    memo: HashMap<(BTreeSet<Symbol>, Symbol), Part>,
}

impl LinearCtx<'_> {
    /// Closure for the language of `var` in the grammar without `removed`.
    fn closure(&mut self, removed: &BTreeSet<Symbol>, var: &str) -> Result<Part, PipelineError> {
        let key = (removed.clone(), var.to_string());
        if let Some(p) = self.memo.get(&key) {
            return Ok(p.clone());
        }
        let n = self.q.dim;
        let gv = self.g.restricted(removed, var);
        let mut inner = removed.clone();
        inner.insert(var.to_string());
        let mut parts = Vec::new();
        let mut children = Vec::new();
        for r in gv.rules().into_iter().filter(|r| r.lhs == var) {
            match &r.var {
                Some(c) if c == var => {}
                Some(c) => {
                    let sub = self.closure(&inner, c)?;
                    if sub.set.is_empty_formula() {
                        continue;
                    }
                    children.push(sub.prov.clone());
                    if r.left.is_empty() && r.right.is_empty() {
                        parts.push(sub.set);
                    } else {
                        let pair = SemiAlgSet::point(&BlockMatrix::new(vec![
                            self.q.phi_of_word(&r.left)?,
                            self.q.phi_of_word(&r.right)?,
                        ]));
                        parts.push(SemiAlgSet::sandwich(&pair, &sub.set)?);
                    }
                }
                None => parts.push(word_point(self.q, &r.left)?),
            }
        }
        let exits = SemiAlgSet::union_all(&[n], &parts)?;
        let part = if exits.is_empty_formula() {
            Part { set: exits, prov: Provenance::leaf("linear", format!("{var}: empty language"), true) }
        } else {
            let aut = cycle_automaton_linear(&gv, self.q, var)?;
            let cyc = cycle_closure(&aut, self.q, self.cfg, var)?;
            let trivial = aut.edges.iter().all(|e| e.label.is_identity());
            let set = if trivial { exits } else { SemiAlgSet::sandwich(&cyc.set.transpose_block(1)?, &exits)? };
            let mut ch = vec![cyc.prov];
            ch.extend(children);
            Part { set, prov: Provenance::node("linear", format!("{var}: cycles around {} exit rule(s)", parts.len()), ch) }
        };
        self.memo.insert(key, part.clone());
        Ok(part)
    }
}

fn closure_linear_part(g: &LinearGrammar, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<Part, PipelineError> {
    let mut ctx = LinearCtx { g, q, cfg, memo: HashMap::new() };
    ctx.closure(&BTreeSet::new(), g.axiom())
}

fn closure_metalinear_part(g: &MetalinearGrammar, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<Part, PipelineError> {
    let n = q.dim;
    let mut sets = Vec::new();
    let mut children = Vec::new();
    for fam in g.families() {
        let mut acc: Option<SemiAlgSet> = None;
        let mut fch = Vec::new();
        for f in &fam {
            let s = match f {
                Factor::Word(w) => word_point(q, w)?,
                Factor::Linear(l) => {
                    let p = closure_linear_part(l, q, cfg)?;
                    fch.push(p.prov);
                    p.set
                }
            };
            acc = Some(match acc {
                None => s,
                Some(a) => SemiAlgSet::product(&a, &s)?,
            });
        }
        let set = acc.unwrap_or_else(|| SemiAlgSet::point_matrix(&QMatrix::identity(n)));
        children.push(Provenance::node("product", format!("{} factor(s)", fam.len()), fch));
        sets.push(set);
    }
    let set = SemiAlgSet::union_all(&[n], &sets)?;
    Ok(Part { set, prov: Provenance::node("metalinear", format!("{} famil(ies)", sets.len()), children) })
}

fn closure_matrix_part(g: &RestrictedMatrixGrammar, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<Part, PipelineError> {
    let n = q.dim;
    let k = g.index();
    let shape = vec![n; 2 * k];
    let starts: BTreeSet<Vec<Symbol>> = g
        .matrices
        .iter()
        .filter_map(|m| if let GrammarMatrix::Start(x) = m { Some(x.clone()) } else { None })
        .collect();
    let ends: BTreeSet<Vec<Symbol>> = g
        .matrices
        .iter()
        .filter_map(|m| if let GrammarMatrix::Erase(x) = m { Some(x.clone()) } else { None })
        .collect();
    // tuples reachable from a start
    let mut states: Vec<Vec<Symbol>> = starts.iter().cloned().collect();
    let mut moves: Vec<(usize, usize, Vec<(Word, Word)>)> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        if states.len() > cfg.max_states {
            return Err(PipelineError::TooLarge(format!("more than {} variable tuples reachable", cfg.max_states)));
        }
        let cur = states[i].clone();
        for m in &g.matrices {
            let GrammarMatrix::Step(rs) = m else { continue };
            if rs.iter().zip(&cur).any(|(r, x)| &r.lhs != x) {
                continue;
            }
            let next: Vec<Symbol> = rs.iter().map(|r| r.rhs.clone()).collect();
            let j = match states.iter().position(|s| *s == next) {
                Some(j) => j,
                None => {
                    states.push(next);
                    states.len() - 1
                }
            };
            moves.push((i, j, rs.iter().map(|r| (r.left.clone(), r.right.clone())).collect()));
        }
        i += 1;
    }
    // co-reachable to an erasing tuple
    let mut live: Vec<bool> = states.iter().map(|s| ends.contains(s)).collect();
    loop {
        let mut changed = false;
        for (a, b, _) in &moves {
            if live[*b] && !live[*a] {
                live[*a] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let start_ids: Vec<usize> = (0..states.len()).filter(|&s| starts.contains(&states[s]) && live[s]).collect();
    if start_ids.is_empty() {
        return Ok(Part { set: SemiAlgSet::empty(&[n]), prov: Provenance::leaf("matrix", "no terminating derivation", true) });
    }
    // closures of the per-tuple cycle monoids
    let mut cyc: BTreeMap<usize, Part> = BTreeMap::new();
    for s in (0..states.len()).filter(|&s| live[s]) {
        let aut = cycle_automaton_matrix(g, q, &states[s])?;
        cyc.insert(s, cycle_closure(&aut, q, cfg, &format!("({})", states[s].join(",")))?);
    }
    // connecting moves between distinct tuples
    let mut links: BTreeMap<(usize, usize), Vec<BlockMatrix>> = BTreeMap::new();
    for (a, b, w) in &moves {
        if a != b && live[*a] && live[*b] {
            let t = tuple_of(q, w)?;
            let e = links.entry((*a, *b)).or_default();
            if !e.contains(&t) {
                e.push(t);
            }
        }
    }
    let mut seqs: Vec<Vec<usize>> = Vec::new();
    fn extend(
        path: &mut Vec<usize>,
        links: &BTreeMap<(usize, usize), Vec<BlockMatrix>>,
        is_end: &dyn Fn(usize) -> bool,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> bool {
        let last = *path.last().unwrap();
        if is_end(last) {
            out.push(path.clone());
            if out.len() > cap {
                return false;
            }
        }
        let nexts: Vec<usize> = links.keys().filter(|(a, b)| *a == last && !path.contains(b)).map(|&(_, b)| b).collect();
        for b in nexts {
            path.push(b);
            let ok = extend(path, links, is_end, out, cap);
            path.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let is_end = |s: usize| ends.contains(&states[s]);
    for &s in &start_ids {
        if !extend(&mut vec![s], &links, &is_end, &mut seqs, cfg.max_sequences) {
            return Err(PipelineError::TooLarge(format!("more than {} state sequences", cfg.max_sequences)));
        }
    }
    let mut seq_sets = Vec::new();
    for s in &seqs {
        let mut acc = cyc[&s[0]].set.clone();
        for w in s.windows(2) {
            let e = SemiAlgSet::points(&shape, &links[&(w[0], w[1])])?;
            acc = SemiAlgSet::product(&SemiAlgSet::product(&acc, &e)?, &cyc[&w[1]].set)?;
        }
        seq_sets.push(acc);
    }
    let mut lifted = SemiAlgSet::union_all(&shape, &seq_sets)?;
    for b in (1..2 * k).step_by(2) {
        lifted = lifted.transpose_block(b)?;
    }
    let set = SemiAlgSet::blocks_product(&lifted)?;
    let children: Vec<Provenance> = cyc.into_values().map(|p| p.prov).collect();
    Ok(Part {
        set,
        prov: Provenance::node(
            "matrix",
            format!("{} live tuple(s), {} repetition-free sequence(s)", (0..states.len()).filter(|&s| live[s]).count(), seqs.len()),
            children,
        ),
    })
}

/// Symbolic `d x d` matrix of block `b` in a tuple-shaped ring.
fn sym_block(shape: &[usize], b: usize) -> Vec<Vec<Poly>> {
    let n = shape_vars(shape);
    let d = shape[b];
    (0..d).map(|i| (0..d).map(|j| Poly::var(n, var_index(shape, b, i, j))).collect()).collect()
}

fn sym_mul(a: &[Vec<Poly>], b: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let d = a.len();
    let n = a[0][0].nvars();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).fold(Poly::zero(n), |acc, t| acc.add(&a[i][t].mul(&b[t][j]))))
                .collect()
        })
        .collect()
}

fn sym_identity(nvars: usize, d: usize) -> Vec<Vec<Poly>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { Poly::one(nvars) } else { Poly::zero(nvars) }).collect())
        .collect()
}

/// `(X_1 ... X_s, (Y_1 ... Y_t)ᵀ)` on `s + t` blocks of size `d`.
fn psi_prime(s: usize, t: usize, d: usize) -> Vec<Poly> {
    let shape = vec![d; (s + t).max(1)];
    let nv = if s + t == 0 { 0 } else { shape_vars(&shape) };
    let mut x = sym_identity(nv, d);
    for b in 0..s {
        x = sym_mul(&x, &sym_block(&shape, b));
    }
    let mut y = sym_identity(nv, d);
    for b in s..s + t {
        y = sym_mul(&y, &sym_block(&shape, b));
    }
    let mut out: Vec<Poly> = x.into_iter().flatten().collect();
    for i in 0..d {
        for j in 0..d {
            out.push(y[j][i].clone());
        }
    }
    out
}

/// `X Yᵀ` on the shape `[d, d]`.
fn psi_xyt(d: usize) -> Vec<Poly> {
    let shape = [d, d];
    let x = sym_block(&shape, 0);
    let y = sym_block(&shape, 1);
    let yt: Vec<Vec<Poly>> = (0..d).map(|i| (0..d).map(|j| y[j][i].clone()).collect()).collect();
    sym_mul(&x, &yt).into_iter().flatten().collect()
}

struct MonoidalCtx<'a> {
    g: &'a MonoidalGrammar,
    q: &'a QuantumAutomaton,
    cfg: &'a PipelineConfig,
    warnings: &'a mut Vec<String>,
}

/// Closure of a letter's image: its ideal, provenance, and the point set when finite.
struct Piece {
    ideal: PolyIdeal,
    prov: Provenance,
    points: Option<Vec<QMatrix>>,
}

fn sorted_points(pts: impl IntoIterator<Item = QMatrix>) -> Vec<QMatrix> {
    pts.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}

/// All products `(x_1 ... x_s, (y_1 ... y_t)ᵀ)` with `x_i, y_j` from the given point sets.
fn finite_zeta(xs: &[&[QMatrix]], ys: &[&[QMatrix]], n: usize, cap: usize) -> Option<BTreeSet<BlockMatrix>> {
    fn products(sets: &[&[QMatrix]], n: usize, cap: usize) -> Option<BTreeSet<QMatrix>> {
        let mut acc = BTreeSet::from([QMatrix::identity(n)]);
        for set in sets {
            let mut next = BTreeSet::new();
            for a in &acc {
                for b in *set {
                    next.insert(a * b);
                    if next.len() > cap {
                        return None;
                    }
                }
            }
            acc = next;
        }
        Some(acc)
    }
    let left = products(xs, n, cap)?;
    let right = products(ys, n, cap)?;
    if left.len() * right.len() > cap {
        return None;
    }
    let mut out = BTreeSet::new();
    for x in &left {
        for y in &right {
            out.insert(BlockMatrix::new(vec![x.clone(), y.transpose()]));
        }
    }
    Some(out)
}

/// What the `X·Yᵀ` image is taken of.
enum Source<'a> {
    Ideal(&'a PolyIdeal),
    Elements(&'a [BlockMatrix]),
}

impl MonoidalCtx<'_> {
    fn lowest(&mut self, name: &str, c: &MinimalLinear) -> Result<Piece, PipelineError> {
        let n = self.q.dim;
        if c.irreducible != Some(true) {
            self.warnings.push(format!("{name}: irreducibility not asserted; stabilization is still checked"));
        }
        let budget = &self.cfg.closure.budget;
        let mut gens = Vec::new();
        for (a, b) in &c.cycles {
            gens.push(BlockMatrix::new(vec![self.q.phi_of_word(a)?, self.q.phi_of_word(b)?.transpose()]));
        }
        let k = match group_closure(&[n, n], &gens, &self.cfg.closure) {
            Ok(k) => k,
            Err(e) => return Ok(self.gave_up(name, e)),
        };
        let certified = k.certified();
        let detail = format!("{name}: certificate {}", serde_json::to_string(&k.certificate).unwrap_or_default());
        let children = vec![Provenance::leaf("cycle-closure", detail, certified)];
        let source = match &k.elements {
            Some(els) => Source::Elements(els),
            None => Source::Ideal(&k.ideal),
        };
        Ok(self.finish(name, c, source, budget, children))
    }

    fn gave_up(&self, name: &str, e: ResourceError) -> Piece {
        Piece {
            ideal: PolyIdeal::whole_space(&[self.q.dim]),
            prov: Provenance::leaf("monoidal", format!("{name}: gave up: {e}"), false),
            points: None,
        }
    }

    /// `{X Yᵀ : X ⊕ Y ∈ V(k)}`, or the empty set without an erasing rule.
    /// With the elements of `V(k)` at hand the image is taken pointwise.
    fn finish(
        &self,
        name: &str,
        c: &MinimalLinear,
        source: Source<'_>,
        budget: &crate::zariski::groebner::Budget,
        children: Vec<Provenance>,
    ) -> Piece {
        let n = self.q.dim;
        if !c.has_epsilon {
            return Piece {
                ideal: PolyIdeal::empty_set(&[n]),
                prov: Provenance::node("monoidal", format!("{name}: empty language"), children),
                points: Some(Vec::new()),
            };
        }
        let k = match source {
            Source::Ideal(k) => k,
            Source::Elements(els) => {
                let pts = sorted_points(els.iter().map(|e| &e.blocks()[0] * &e.blocks()[1].transpose()));
                let tuples: Vec<BlockMatrix> = pts.iter().map(|m| BlockMatrix::new(vec![m.clone()])).collect();
                return match PolyIdeal::vanishing(&tuples, budget) {
                    Ok(f) => Piece {
                        ideal: f,
                        prov: Provenance::node("image", format!("{name}: X·Yᵀ over {} point(s)", pts.len()), children),
                        points: Some(pts),
                    },
                    Err(e) => self.gave_up(name, e),
                };
            }
        };
        match image_closure(k, &psi_xyt(n), &[n], budget) {
            Ok(f) => Piece { ideal: f, prov: Provenance::node("image", format!("{name}: X·Yᵀ"), children), points: None },
            Err(e) => self.gave_up(name, e),
        }
    }

    /// `H1` and its generated monoid when every letter closure is a finite set.
    fn finite_level(&self, c: &MinimalLinear, letters: &BTreeMap<Symbol, Piece>) -> Option<Vec<BlockMatrix>> {
        let n = self.q.dim;
        let cap = self.cfg.closure.finite_cap;
        let mut h1: Option<BTreeSet<BlockMatrix>> = None;
        for (alpha, beta) in &c.cycles {
            let pts = |w: &Word| -> Option<Vec<&[QMatrix]>> { w.iter().map(|a| letters[a].points.as_deref()).collect() };
            let zeta = finite_zeta(&pts(alpha)?, &pts(beta)?, n, cap)?;
            h1 = Some(match h1 {
                None => zeta,
                Some(h) => h.intersection(&zeta).cloned().collect(),
            });
        }
        let gens: Vec<BlockMatrix> = h1.unwrap_or_default().into_iter().collect();
        enumerate_group(&[n, n], &gens, cap)
    }

    /// Closure of the image of the language of `c`, whose letters have closures `letters`.
    fn level(&mut self, name: &str, c: &MinimalLinear, letters: &BTreeMap<Symbol, Piece>) -> Result<Piece, PipelineError> {
        let n = self.q.dim;
        let budget = self.cfg.closure.budget.clone();
        let mut children: Vec<Provenance> = letters.values().map(|p| p.prov.clone()).collect();
        if let Some(els) = self.finite_level(c, letters) {
            children.push(Provenance::leaf("chain", format!("{name}: finite monoid of {} element(s)", els.len()), true));
            return Ok(self.finish(name, c, Source::Elements(&els), &budget, children));
        }
        let mut h1: Option<PolyIdeal> = None;
        for (alpha, beta) in &c.cycles {
            let factors: Vec<&PolyIdeal> = alpha.iter().chain(beta.iter()).map(|a| &letters[a].ideal).collect();
            let zeta = if factors.is_empty() {
                PolyIdeal::identity_point(&[n, n])
            } else {
                let mut t = factors[0].clone();
                let mut step = || -> Result<PolyIdeal, ResourceError> {
                    for f in &factors[1..] {
                        t = tensor(&t, f, &budget)?;
                    }
                    image_closure(&t, &psi_prime(alpha.len(), beta.len(), n), &[n, n], &budget)
                };
                match step() {
                    Ok(z) => z,
                    Err(e) => return Ok(self.gave_up(name, e)),
                }
            };
            h1 = Some(match h1 {
                None => zeta,
                Some(h) => match intersect(&h, &zeta, &budget) {
                    Ok(x) => x,
                    Err(e) => return Ok(self.gave_up(name, e)),
                },
            });
        }
        let h1 = h1.unwrap_or_else(|| PolyIdeal::identity_point(&[n, n]));
        let chain = match product_chain(&h1, self.cfg.chain_cap, &budget) {
            Ok(c) => c,
            Err(e) => return Ok(self.gave_up(name, e)),
        };
        let s = chain.summary();
        children.push(Provenance::leaf(
            "chain",
            format!("{name}: {} step(s), stabilized {}, identity adjoined {}", s.steps_used, s.stabilized, s.identity_adjoined),
            s.stabilized,
        ));
        Ok(self.finish(name, c, Source::Ideal(chain.result()), &budget, children))
    }

    /// Closure for letter `a` of level `lvl` (0-based into `levels`).
    fn letter(&mut self, lvl: usize, a: &str) -> Result<Piece, PipelineError> {
        let c = &self.g.levels[lvl][a];
        let name = format!("level {} letter {a}", lvl + 2);
        if lvl + 1 == self.g.levels.len() {
            return self.lowest(&name, c);
        }
        let mut letters = BTreeMap::new();
        for b in &c.terminals {
            letters.insert(b.clone(), self.letter(lvl + 1, b)?);
        }
        self.level(&name, c, &letters)
    }
}

/// Ideal of the closure of `φ(L(c))` for a lowest-level component, with its certification.
pub fn component_closure(c: &MinimalLinear, q: &QuantumAutomaton, cfg: &PipelineConfig) -> Result<(PolyIdeal, bool), PipelineError> {
    let g = MonoidalGrammar::new(c.clone(), Vec::new())?;
    let mut warnings = Vec::new();
    let mut ctx = MonoidalCtx { g: &g, q, cfg, warnings: &mut warnings };
    let piece = ctx.lowest("component", c)?;
    Ok((piece.ideal, piece.prov.certified))
}

fn closure_monoidal_part(
    g: &MonoidalGrammar,
    q: &QuantumAutomaton,
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Part, PipelineError> {
    let mut ctx = MonoidalCtx { g, q, cfg, warnings };
    let top = if g.levels.is_empty() {
        ctx.lowest("top", &g.top)?
    } else {
        let mut letters = BTreeMap::new();
        for a in &g.top.terminals {
            letters.insert(a.clone(), ctx.letter(0, a)?);
        }
        ctx.level("top", &g.top, &letters)?
    };
    let certified = top.prov.certified;
    let set = match SemiAlgSet::from_ideal(&top.ideal, &cfg.closure.budget) {
        Ok(s) => s,
        Err(e) => {
            return Ok(Part {
                set: SemiAlgSet::whole(&[q.dim]),
                prov: Provenance::node("monoidal", format!("gave up: {e}"), vec![top.prov]),
            })
        }
    };
    let set = if set.is_empty_formula() {
        set
    } else if let Some(pts) = &top.points {
        set.with_hint(pts.iter().map(|m| BlockMatrix::new(vec![m.clone()])).collect(), true)
    } else {
        // sample members for the search
        let words = enumerate_words(&GrammarSpec::Monoidal(g.clone()), cfg.sample_len, 200_000).unwrap_or_default();
        let mut pts: BTreeSet<BlockMatrix> = BTreeSet::new();
        for w in &words {
            pts.insert(BlockMatrix::new(vec![q.phi_of_word(w)?]));
        }
        set.with_hint(pts.into_iter().collect(), false)
    };
    let mut prov = Provenance::node("monoidal", format!("depth {}", g.depth()), vec![top.prov]);
    prov.certified = certified;
    Ok(Part { set, prov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, QVector};
    use crate::grammar::parse_grammar;
    use crate::semialg::{Probe, SearchLimits};

    fn r() -> QMatrix {
        QMatrix::from_ratios(&[&[(3, 5), (4, 5)], &[(-4, 5), (3, 5)]])
    }

    fn qfa(letters: &[(&str, QMatrix)]) -> QuantumAutomaton {
        QuantumAutomaton {
            dim: 2,
            alphabet: letters.iter().map(|(a, _)| a.to_string()).collect(),
            s: QVector::new(vec![int(1), int(0)]),
            phi: letters.iter().map(|(a, m)| (a.to_string(), m.clone())).collect(),
            p: QMatrix::from_ints(&[&[1, 0], &[0, 0]]),
            lambda: crate::arith::rat(1, 2),
        }
    }

    fn run(text: &str, q: &QuantumAutomaton) -> ClosureReport {
        closure(&parse_grammar(text).unwrap(), q, &PipelineConfig::default()).unwrap()
    }

    const ANBN: &str = r#"{"kind":"linear","productions":["S -> a S b | ε"]}"#;

    #[test]
    fn epsilon_only() {
        let rep = run(r#"{"kind":"linear","productions":["S -> ε"]}"#, &qfa(&[("a", r())]));
        assert!(rep.certified);
        assert_eq!(rep.formula.members(&SearchLimits::default()), (BTreeSet::from([vec![QMatrix::identity(2)]]), true));
    }

    #[test]
    fn telescoping() {
        let rep = run(ANBN, &qfa(&[("a", r()), ("b", r().transpose())]));
        assert!(rep.certified, "{:#?}", rep.provenance);
        assert_eq!(rep.formula.probe_matrix(&QMatrix::identity(2)), Probe::True);
    }

    #[test]
    fn rotation_orbit() {
        let rep = run(ANBN, &qfa(&[("a", r()), ("b", QMatrix::identity(2))]));
        assert!(rep.certified);
        assert_eq!(rep.formula.probe_matrix(&r().pow(5)), Probe::True);
        assert_eq!(rep.formula.probe_matrix(&r().pow(12)), Probe::True);
    }

    #[test]
    fn metalinear_points() {
        let q = qfa(&[("a", r()), ("b", QMatrix::from_ints(&[&[0, 1], &[1, 0]]))]);
        let rep = run(r#"{"kind":"metalinear","productions":["S -> A B","A -> a","B -> b"]}"#, &q);
        assert_eq!(rep.formula.members(&SearchLimits::default()), (BTreeSet::from([vec![q.phi_of_word(&["a", "b"]).unwrap()]]), true));
        let rep = run(r#"{"kind":"metalinear","productions":["S -> A | B","A -> a","B -> b"]}"#, &q);
        assert_eq!(rep.formula.members(&SearchLimits::default()).0.len(), 2);
    }

    const ABC_MATRIX: &str = r#"{"kind":"restricted-matrix","blocks":[["A"],["B"],["C"]],
        "matrices":[["S -> A B C"],["A -> a A","B -> b B","C -> c C"],["A -> ε","B -> ε","C -> ε"]]}"#;

    #[test]
    fn matrix_identity_images() {
        let i = QMatrix::identity(2);
        let rep = run(ABC_MATRIX, &qfa(&[("a", i.clone()), ("b", i.clone()), ("c", i.clone())]));
        assert!(rep.certified);
        assert_eq!(rep.formula.members(&SearchLimits::default()), (BTreeSet::from([vec![i]]), true));
    }

    #[test]
    fn matrix_telescoping() {
        let q = qfa(&[("a", r()), ("b", r().transpose()), ("c", QMatrix::identity(2))]);
        let rep = run(ABC_MATRIX, &q);
        assert!(rep.certified, "{:#?}", rep.provenance);
        assert_eq!(rep.formula.probe_matrix(&QMatrix::identity(2)), Probe::True);
        assert_ne!(rep.formula.probe_matrix(&r()), Probe::True);
    }

    #[test]
    fn monoidal_example() {
        let text = r#"{"kind":"monoidal","top":{"productions":["S -> s S | ε"]},
            "levels":[{"s":{"productions":["X -> a X b | ε"],"irreducible":true}}]}"#;
        let rep = run(text, &qfa(&[("a", r()), ("b", r().transpose())]));
        assert!(rep.certified, "{:#?}", rep.provenance);
        assert_eq!(rep.formula.members(&SearchLimits::default()).0, BTreeSet::from([vec![QMatrix::identity(2)]]));
        let rep = run(text, &qfa(&[("a", r()), ("b", QMatrix::identity(2))]));
        assert!(rep.certified);
        assert_eq!(rep.formula.probe_matrix(&r().pow(7)), Probe::True);
        assert_eq!(rep.formula.probe_matrix(&QMatrix::from_ints(&[&[0, 1], &[1, 0]])), Probe::False);
    }

    #[test]
    fn depth_one_monoidal() {
        let q = qfa(&[("a", r()), ("b", QMatrix::identity(2))]);
        let mono = run(r#"{"kind":"monoidal","top":{"productions":["S -> a S b | ε"],"irreducible":true}}"#, &q);
        let lin = run(ANBN, &q);
        for k in 0..6 {
            assert_eq!(mono.formula.probe_matrix(&r().pow(k)), Probe::True);
            assert_eq!(lin.formula.probe_matrix(&r().pow(k)), Probe::True);
        }
    }

    #[test]
    fn unknown_letters() {
        let err = closure(&parse_grammar(ANBN).unwrap(), &qfa(&[("a", r())]), &PipelineConfig::default()).unwrap_err();
        assert!(err.to_string().contains("unknown symbol"));
    }
}
