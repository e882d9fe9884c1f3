//! Grammars: context-free, linear, metalinear, restricted simple matrix and
//! monoidal (compositions of one-variable linear grammars), with bounded
//! word enumeration and the JSON file format.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::qfa::{shortlex, Symbol, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}", match line { Some(l) => format!("line {l}: {message}"), None => message.clone() })]
    Invalid { line: Option<usize>, message: String },
    #[error("enumeration budget of {limit} items exceeded")]
    Budget { limit: usize },
}

fn invalid(message: impl Into<String>) -> GrammarError {
    GrammarError::Invalid { line: None, message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Production {
    pub lhs: Symbol,
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn new(lhs: &str, rhs: &[&str]) -> Self {
        Self { lhs: lhs.to_string(), rhs: rhs.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rhs.is_empty() {
            write!(f, "{} -> ε", self.lhs)
        } else {
            write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
        }
    }
}

/// Parses `"S -> a S b | ε"` into one production per alternative.
pub fn parse_productions(text: &str) -> Result<Vec<Production>, String> {
    let (lhs, rhs) = text
        .split_once("->")
        .or_else(|| text.split_once('→'))
        .ok_or_else(|| format!("production {text:?} has no \"->\""))?;
    let lhs: Vec<&str> = lhs.split_whitespace().collect();
    if lhs.len() != 1 {
        return Err(format!("production {text:?} must have exactly one symbol on the left"));
    }
    let mut out = Vec::new();
    for alt in rhs.split('|') {
        let syms: Vec<String> = alt
            .split_whitespace()
            .filter(|s| *s != "ε" && *s != "eps")
            .map(str::to_string)
            .collect();
        out.push(Production { lhs: lhs[0].to_string(), rhs: syms });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub variables: Vec<Symbol>,
    pub terminals: Vec<Symbol>,
    pub productions: Vec<Production>,
    pub axiom: Symbol,
}

impl Cfg {
    pub fn new(
        variables: Vec<Symbol>,
        terminals: Vec<Symbol>,
        productions: Vec<Production>,
        axiom: &str,
    ) -> Result<Self, GrammarError> {
        let g = Self { variables, terminals, productions, axiom: axiom.to_string() };
        g.check()?;
        Ok(g)
    }

    /// Infers variables (left-hand sides) and terminals (everything else).
    pub fn from_productions(productions: Vec<Production>, axiom: &str) -> Result<Self, GrammarError> {
        let mut variables: Vec<Symbol> = Vec::new();
        for p in &productions {
            if !variables.contains(&p.lhs) {
                variables.push(p.lhs.clone());
            }
        }
        if !variables.iter().any(|v| v == axiom) {
            variables.insert(0, axiom.to_string());
        }
        let mut terminals: Vec<Symbol> = Vec::new();
        for p in &productions {
            for s in &p.rhs {
                if !variables.contains(s) && !terminals.contains(s) {
                    terminals.push(s.clone());
                }
            }
        }
        terminals.sort();
        Self::new(variables, terminals, productions, axiom)
    }

    fn check(&self) -> Result<(), GrammarError> {
        if !self.is_variable(&self.axiom) {
            return Err(invalid(format!("axiom {} is not a variable", self.axiom)));
        }
        for v in &self.variables {
            if self.terminals.contains(v) {
                return Err(invalid(format!("{v} is both a variable and a terminal")));
            }
        }
        for p in &self.productions {
            if !self.is_variable(&p.lhs) {
                return Err(invalid(format!("left side of {p} is not a variable")));
            }
            for s in &p.rhs {
                if !self.is_variable(s) && !self.terminals.contains(s) {
                    return Err(invalid(format!("undeclared symbol {s} in {p}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_variable(&self, s: &str) -> bool {
        self.variables.iter().any(|v| v == s)
    }

    /// Every word of the language with at most `max_len` letters, shortlex.
    ///
    /// Least fixpoint of the per-variable word sets truncated at `max_len`;
    /// variables contribute nothing to the length, so erasing rules are fine.
    pub fn enumerate(&self, max_len: usize, budget: usize) -> Result<Vec<Word>, GrammarError> {
        let mut sets: BTreeMap<&str, BTreeSet<Word>> = self.variables.iter().map(|v| (v.as_str(), BTreeSet::new())).collect();
        let mut total = 0usize;
        loop {
            let mut changed = false;
            for p in &self.productions {
                let mut acc: BTreeSet<Word> = BTreeSet::from([Vec::new()]);
                for s in &p.rhs {
                    let mut next = BTreeSet::new();
                    if self.is_variable(s) {
                        for a in &acc {
                            for b in &sets[s.as_str()] {
                                if a.len() + b.len() <= max_len {
                                    let mut w = a.clone();
                                    w.extend(b.iter().cloned());
                                    next.insert(w);
                                }
                            }
                        }
                    } else {
                        for a in &acc {
                            if a.len() < max_len {
                                let mut w = a.clone();
                                w.push(s.clone());
                                next.insert(w);
                            }
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                let target = sets.get_mut(p.lhs.as_str()).expect("checked");
                for w in acc {
                    if target.insert(w) {
                        changed = true;
                        total += 1;
                        if total > budget {
                            return Err(GrammarError::Budget { limit: budget });
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut out: Vec<Word> = sets.remove(self.axiom.as_str()).unwrap_or_default().into_iter().collect();
        out.sort_by(|a, b| shortlex(a, b));
        Ok(out)
    }

    /// Variables deriving at least one terminal word.
    pub fn productive(&self) -> BTreeSet<Symbol> {
        let mut done: BTreeSet<Symbol> = BTreeSet::new();
        loop {
            let before = done.len();
            for p in &self.productions {
                if p.rhs.iter().all(|s| !self.is_variable(s) || done.contains(s)) {
                    done.insert(p.lhs.clone());
                }
            }
            if done.len() == before {
                return done;
            }
        }
    }

    fn to_value(&self) -> Value {
        json!({
            "axiom": self.axiom,
            "variables": self.variables,
            "terminals": self.terminals,
            "productions": self.productions.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// A linear rule `lhs -> left var right` or `lhs -> left` when `var` is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRule {
    pub lhs: Symbol,
    pub left: Word,
    pub var: Option<Symbol>,
    pub right: Word,
}

/// Context-free grammar whose right-hand sides hold at most one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearGrammar {
    cfg: Cfg,
}

impl LinearGrammar {
    pub fn new(cfg: Cfg) -> Result<Self, GrammarError> {
        for p in &cfg.productions {
            if p.rhs.iter().filter(|s| cfg.is_variable(s)).count() > 1 {
                return Err(invalid(format!("{p} has more than one variable on the right")));
            }
        }
        Ok(Self { cfg })
    }

    /// Convenience constructor from production strings like `"S -> a S b | ε"`.
    pub fn parse(axiom: &str, rules: &[&str]) -> Result<Self, GrammarError> {
        let mut prods = Vec::new();
        for r in rules {
            prods.extend(parse_productions(r).map_err(invalid)?);
        }
        Self::new(Cfg::from_productions(prods, axiom)?)
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn axiom(&self) -> &str {
        &self.cfg.axiom
    }

    pub fn rules(&self) -> Vec<LinearRule> {
        self.cfg
            .productions
            .iter()
            .map(|p| match p.rhs.iter().position(|s| self.cfg.is_variable(s)) {
                Some(k) => LinearRule {
                    lhs: p.lhs.clone(),
                    left: p.rhs[..k].to_vec(),
                    var: Some(p.rhs[k].clone()),
                    right: p.rhs[k + 1..].to_vec(),
                },
                None => LinearRule { lhs: p.lhs.clone(), left: p.rhs.clone(), var: None, right: Vec::new() },
            })
            .collect()
    }

    /// The grammar with the `removed` variables and every production touching
    /// them deleted, started at `axiom`.
    pub fn restricted(&self, removed: &BTreeSet<Symbol>, axiom: &str) -> LinearGrammar {
        let keep = |s: &Symbol| !removed.contains(s);
        let variables: Vec<Symbol> = self.cfg.variables.iter().filter(|v| keep(v)).cloned().collect();
        let productions = self
            .cfg
            .productions
            .iter()
            .filter(|p| keep(&p.lhs) && p.rhs.iter().all(keep))
            .cloned()
            .collect();
        LinearGrammar {
            cfg: Cfg { variables, terminals: self.cfg.terminals.clone(), productions, axiom: axiom.to_string() },
        }
    }
}

/// One factor of a metalinear product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Word(Word),
    Linear(LinearGrammar),
}

/// `S -> A_1 ... A_k` rules over linear variables: a finite union of finite
/// products of linear languages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetalinearGrammar {
    cfg: Cfg,
}

impl MetalinearGrammar {
    pub fn new(cfg: Cfg) -> Result<Self, GrammarError> {
        for p in &cfg.productions {
            if p.rhs.contains(&cfg.axiom) {
                return Err(invalid(format!("the axiom may not occur on a right side: {p}")));
            }
            if p.lhs != cfg.axiom && p.rhs.iter().filter(|s| cfg.is_variable(s)).count() > 1 {
                return Err(invalid(format!("{p} is not linear")));
            }
        }
        Ok(Self { cfg })
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    /// One factor list per axiom rule; runs of terminals become word factors.
    pub fn families(&self) -> Vec<Vec<Factor>> {
        let removed = BTreeSet::from([self.cfg.axiom.clone()]);
        let body = LinearGrammar {
            cfg: Cfg {
                variables: self.cfg.variables.clone(),
                terminals: self.cfg.terminals.clone(),
                productions: self.cfg.productions.iter().filter(|p| p.lhs != self.cfg.axiom).cloned().collect(),
                axiom: self.cfg.axiom.clone(),
            },
        };
        let mut out = Vec::new();
        for p in self.cfg.productions.iter().filter(|p| p.lhs == self.cfg.axiom) {
            let mut fam = Vec::new();
            let mut run: Word = Vec::new();
            for s in &p.rhs {
                if self.cfg.is_variable(s) {
                    if !run.is_empty() {
                        fam.push(Factor::Word(std::mem::take(&mut run)));
                    }
                    fam.push(Factor::Linear(body.restricted(&removed, s)));
                } else {
                    run.push(s.clone());
                }
            }
            if !run.is_empty() || fam.is_empty() {
                fam.push(Factor::Word(run));
            }
            out.push(fam);
        }
        out
    }
}

/// `lhs -> left rhs right` inside a synchronized matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepRule {
    pub lhs: Symbol,
    pub left: Word,
    pub rhs: Symbol,
    pub right: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrammarMatrix {
    /// `(S -> X_1 ... X_k)`
    Start(Vec<Symbol>),
    /// `(X_i -> u_i Y_i v_i)_i`, ordered by block.
    Step(Vec<StepRule>),
    /// `(X_i -> ε)_i`, ordered by block.
    Erase(Vec<Symbol>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedMatrixGrammar {
    pub start: Symbol,
    pub blocks: Vec<Vec<Symbol>>,
    pub terminals: Vec<Symbol>,
    pub matrices: Vec<GrammarMatrix>,
}

impl RestrictedMatrixGrammar {
    pub fn index(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, v: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.iter().any(|x| x == v))
    }

    /// Builds and validates a grammar from matrices of production strings.
    pub fn from_rules(
        start: &str,
        blocks: Vec<Vec<Symbol>>,
        terminals: Option<Vec<Symbol>>,
        matrices: &[Vec<Production>],
    ) -> Result<Self, GrammarError> {
        let k = blocks.len();
        if k == 0 {
            return Err(invalid("a matrix grammar needs at least one block"));
        }
        let mut seen = BTreeSet::new();
        for b in &blocks {
            for v in b {
                if v == start {
                    return Err(invalid(format!("start symbol {start} may not belong to a block")));
                }
                if !seen.insert(v.clone()) {
                    return Err(invalid(format!("variable {v} belongs to two blocks")));
                }
            }
        }
        let is_var = |s: &str| s == start || seen.contains(s);
        let terminals = match terminals {
            Some(t) => t,
            None => {
                let mut t: Vec<Symbol> = matrices
                    .iter()
                    .flatten()
                    .flat_map(|p| p.rhs.iter())
                    .filter(|s| !is_var(s))
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                t.sort();
                t
            }
        };
        let mut g = Self { start: start.to_string(), blocks, terminals, matrices: Vec::new() };
        for (mi, m) in matrices.iter().enumerate() {
            g.matrices.push(g.classify(mi, m)?);
        }
        Ok(g)
    }

    fn classify(&self, mi: usize, m: &[Production]) -> Result<GrammarMatrix, GrammarError> {
        let k = self.index();
        let here = |msg: String| invalid(format!("matrix {}: {msg}", mi + 1));
        for p in m {
            for s in &p.rhs {
                if s != &self.start && self.block_of(s).is_none() && !self.terminals.contains(s) {
                    return Err(here(format!("undeclared symbol {s} in {p}")));
                }
            }
        }
        if m.len() == 1 && m[0].lhs == self.start {
            let rhs = &m[0].rhs;
            if rhs.len() != k || rhs.iter().enumerate().any(|(i, s)| self.block_of(s) != Some(i)) {
                return Err(here(format!("start rule must read {} -> X_1 ... X_{k} with X_i in block i", self.start)));
            }
            return Ok(GrammarMatrix::Start(rhs.clone()));
        }
        if m.len() != k {
            return Err(here(format!("expected {k} rules, one per block, found {}", m.len())));
        }
        let mut by_block: Vec<Option<&Production>> = vec![None; k];
        for p in m {
            let b = self
                .block_of(&p.lhs)
                .ok_or_else(|| here(format!("left side of {p} is not a block variable")))?;
            if by_block[b].is_some() {
                return Err(here(format!("two rules for block {}", b + 1)));
            }
            by_block[b] = Some(p);
        }
        let rules: Vec<&Production> = by_block.into_iter().map(|p| p.expect("k rules, k blocks")).collect();
        if rules.iter().all(|p| p.rhs.is_empty()) {
            return Ok(GrammarMatrix::Erase(rules.iter().map(|p| p.lhs.clone()).collect()));
        }
        let mut steps = Vec::new();
        for (b, p) in rules.iter().enumerate() {
            let vars: Vec<usize> = (0..p.rhs.len()).filter(|&t| p.rhs[t] == self.start || self.block_of(&p.rhs[t]).is_some()).collect();
            if vars.len() != 1 {
                return Err(here(format!("{p} must have exactly one variable on the right")));
            }
            let t = vars[0];
            if self.block_of(&p.rhs[t]) != Some(b) {
                return Err(here(format!("cross-block variable {} in {p}", p.rhs[t])));
            }
            steps.push(StepRule {
                lhs: p.lhs.clone(),
                left: p.rhs[..t].to_vec(),
                rhs: p.rhs[t].clone(),
                right: p.rhs[t + 1..].to_vec(),
            });
        }
        Ok(GrammarMatrix::Step(steps))
    }

    fn matrix_rules(&self, m: &GrammarMatrix) -> Vec<String> {
        match m {
            GrammarMatrix::Start(xs) => vec![Production { lhs: self.start.clone(), rhs: xs.clone() }.to_string()],
            GrammarMatrix::Erase(xs) => xs.iter().map(|x| format!("{x} -> ε")).collect(),
            GrammarMatrix::Step(rs) => rs
                .iter()
                .map(|r| {
                    let mut rhs = r.left.clone();
                    rhs.push(r.rhs.clone());
                    rhs.extend(r.right.iter().cloned());
                    Production { lhs: r.lhs.clone(), rhs }.to_string()
                })
                .collect(),
        }
    }

    /// Breadth-first search over (variable tuple, per-block context words).
    pub fn enumerate(&self, max_len: usize, budget: usize) -> Result<Vec<Word>, GrammarError> {
        type State = (Vec<Symbol>, Vec<(Word, Word)>);
        let k = self.index();
        let mut seen: HashSet<State> = HashSet::new();
        let mut queue: VecDeque<State> = VecDeque::new();
        for m in &self.matrices {
            if let GrammarMatrix::Start(xs) = m {
                let st = (xs.clone(), vec![(Vec::new(), Vec::new()); k]);
                if seen.insert(st.clone()) {
                    queue.push_back(st);
                }
            }
        }
        let mut words = BTreeSet::new();
        while let Some((vars, ctx)) = queue.pop_front() {
            let len: usize = ctx.iter().map(|(u, v)| u.len() + v.len()).sum();
            for m in &self.matrices {
                match m {
                    GrammarMatrix::Start(_) => {}
                    GrammarMatrix::Erase(xs) => {
                        if xs == &vars {
                            words.insert(ctx.iter().flat_map(|(u, v)| u.iter().chain(v.iter()).cloned()).collect::<Word>());
                        }
                    }
                    GrammarMatrix::Step(rs) => {
                        if rs.iter().zip(&vars).any(|(r, x)| &r.lhs != x) {
                            continue;
                        }
                        let add: usize = rs.iter().map(|r| r.left.len() + r.right.len()).sum();
                        if len + add > max_len {
                            continue;
                        }
                        let nv: Vec<Symbol> = rs.iter().map(|r| r.rhs.clone()).collect();
                        let nc: Vec<(Word, Word)> = rs
                            .iter()
                            .zip(&ctx)
                            .map(|(r, (u, v))| {
                                let mut u = u.clone();
                                u.extend(r.left.iter().cloned());
                                let mut nv = r.right.clone();
                                nv.extend(v.iter().cloned());
                                (u, nv)
                            })
                            .collect();
                        let st = (nv, nc);
                        if seen.insert(st.clone()) {
                            if seen.len() > budget {
                                return Err(GrammarError::Budget { limit: budget });
                            }
                            queue.push_back(st);
                        }
                    }
                }
            }
        }
        let mut out: Vec<Word> = words.into_iter().collect();
        out.sort_by(|a, b| shortlex(a, b));
        Ok(out)
    }

    fn to_value(&self) -> Value {
        json!({
            "start": self.start,
            "blocks": self.blocks,
            "terminals": self.terminals,
            "matrices": self.matrices.iter().map(|m| self.matrix_rules(m)).collect::<Vec<_>>(),
        })
    }
}

/// One-variable linear grammar whose only terminal rule is `X -> ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalLinear {
    pub variable: Symbol,
    pub terminals: Vec<Symbol>,
    /// `X -> alpha X beta`
    pub cycles: Vec<(Word, Word)>,
    pub has_epsilon: bool,
    /// User assertion that the closure of the cycle monoid is irreducible.
    pub irreducible: Option<bool>,
}

impl MinimalLinear {
    pub fn from_productions(prods: &[Production], irreducible: Option<bool>) -> Result<Self, GrammarError> {
        let Some(first) = prods.first() else {
            return Err(invalid("component grammar has no productions"));
        };
        let x = first.lhs.clone();
        let mut cycles = Vec::new();
        let mut has_epsilon = false;
        for p in prods {
            if p.lhs != x {
                return Err(invalid(format!("component grammar must have one variable, found {} and {}", x, p.lhs)));
            }
            match p.rhs.iter().filter(|s| **s == x).count() {
                0 if p.rhs.is_empty() => has_epsilon = true,
                0 => return Err(invalid(format!("terminal rule {p} must be {x} -> ε"))),
                1 => {
                    let k = p.rhs.iter().position(|s| *s == x).expect("counted");
                    cycles.push((p.rhs[..k].to_vec(), p.rhs[k + 1..].to_vec()));
                }
                _ => return Err(invalid(format!("{p} is not linear"))),
            }
        }
        let mut terminals: Vec<Symbol> = cycles
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()).cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        terminals.sort();
        Ok(Self { variable: x, terminals, cycles, has_epsilon, irreducible })
    }

    pub fn productions(&self) -> Vec<Production> {
        let mut out: Vec<Production> = self
            .cycles
            .iter()
            .map(|(a, b)| {
                let mut rhs = a.clone();
                rhs.push(self.variable.clone());
                rhs.extend(b.iter().cloned());
                Production { lhs: self.variable.clone(), rhs }
            })
            .collect();
        if self.has_epsilon {
            out.push(Production { lhs: self.variable.clone(), rhs: Vec::new() });
        }
        out
    }

    pub fn to_cfg(&self) -> Cfg {
        Cfg {
            variables: vec![self.variable.clone()],
            terminals: self.terminals.clone(),
            productions: self.productions(),
            axiom: self.variable.clone(),
        }
    }

    fn to_value(&self) -> Value {
        let mut v = json!({ "productions": self.productions().iter().map(|p| p.to_string()).collect::<Vec<_>>() });
        if let Some(b) = self.irreducible {
            v["irreducible"] = Value::Bool(b);
        }
        v
    }
}

/// `top ∘ levels[0] ∘ levels[1] ∘ ...`; `levels[0]` is keyed by the letters
/// of `top`, `levels[i+1]` by the letters of the grammars in `levels[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidalGrammar {
    pub top: MinimalLinear,
    pub levels: Vec<BTreeMap<Symbol, MinimalLinear>>,
}

impl MonoidalGrammar {
    pub fn new(top: MinimalLinear, levels: Vec<BTreeMap<Symbol, MinimalLinear>>) -> Result<Self, GrammarError> {
        let mut letters: BTreeSet<Symbol> = top.terminals.iter().cloned().collect();
        for (i, level) in levels.iter().enumerate() {
            for a in &letters {
                if !level.contains_key(a) {
                    return Err(invalid(format!("level {}: no grammar for letter {a}", i + 2)));
                }
            }
            for a in level.keys() {
                if !letters.contains(a) {
                    return Err(invalid(format!("level {}: grammar for unused letter {a}", i + 2)));
                }
            }
            letters = level.values().flat_map(|g| g.terminals.iter().cloned()).collect();
        }
        Ok(Self { top, levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }

    /// Letters of the final alphabet.
    pub fn terminals(&self) -> Vec<Symbol> {
        match self.levels.last() {
            None => self.top.terminals.clone(),
            Some(l) => l.values().flat_map(|g| g.terminals.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect(),
        }
    }

    /// Lowest-level grammars with their keys (the top alone for depth 1).
    pub fn lowest(&self) -> Vec<(Option<Symbol>, &MinimalLinear)> {
        match self.levels.last() {
            None => vec![(None, &self.top)],
            Some(l) => l.iter().map(|(k, g)| (Some(k.clone()), g)).collect(),
        }
    }

    /// Language of letter `a` at level `level` (0-based into `levels`) as a
    /// context-free grammar over the final alphabet.
    pub fn letter_cfg(&self, level: usize, a: &str) -> Result<Cfg, GrammarError> {
        let g = self.levels[level]
            .get(a)
            .ok_or_else(|| invalid(format!("no grammar for letter {a} at level {}", level + 2)))?;
        if level + 1 == self.levels.len() {
            return Ok(g.to_cfg());
        }
        let family = g
            .terminals
            .iter()
            .map(|b| Ok((b.clone(), self.letter_cfg(level + 1, b)?)))
            .collect::<Result<BTreeMap<_, _>, GrammarError>>()?;
        compose(&g.to_cfg(), &family)
    }

    /// The whole composition as one context-free grammar.
    pub fn flatten(&self) -> Result<Cfg, GrammarError> {
        if self.levels.is_empty() {
            return Ok(self.top.to_cfg());
        }
        let family = self
            .top
            .terminals
            .iter()
            .map(|a| Ok((a.clone(), self.letter_cfg(0, a)?)))
            .collect::<Result<BTreeMap<_, _>, GrammarError>>()?;
        compose(&self.top.to_cfg(), &family)
    }

    fn to_value(&self) -> Value {
        json!({
            "top": self.top.to_value(),
            "levels": self.levels.iter().map(|l| {
                l.iter().map(|(k, g)| (k.clone(), g.to_value())).collect::<serde_json::Map<_, _>>()
            }).collect::<Vec<_>>(),
        })
    }
}

/// Substitutes the language of `family[x]` for every letter `x` of `g1`.
/// Family variables are renamed to `V@x` (primed further if that clashes).
pub fn compose(g1: &Cfg, family: &BTreeMap<Symbol, Cfg>) -> Result<Cfg, GrammarError> {
    let mut terminals: BTreeSet<Symbol> = BTreeSet::new();
    for x in &g1.terminals {
        let h = family.get(x).ok_or_else(|| invalid(format!("no grammar for letter {x}")))?;
        terminals.extend(h.terminals.iter().cloned());
    }
    let mut used: BTreeSet<Symbol> = g1.variables.iter().cloned().chain(terminals.iter().cloned()).collect();
    let mut variables = g1.variables.clone();
    let mut productions = Vec::new();
    let mut axiom_of: BTreeMap<&str, Symbol> = BTreeMap::new();
    for x in &g1.terminals {
        let h = &family[x];
        let mut rename: BTreeMap<&str, Symbol> = BTreeMap::new();
        for v in &h.variables {
            let mut name = format!("{v}@{x}");
            while used.contains(&name) {
                name.push('\'');
            }
            used.insert(name.clone());
            variables.push(name.clone());
            rename.insert(v, name);
        }
        axiom_of.insert(x, rename[h.axiom.as_str()].clone());
        for p in &h.productions {
            productions.push(Production {
                lhs: rename[p.lhs.as_str()].clone(),
                rhs: p.rhs.iter().map(|s| rename.get(s.as_str()).cloned().unwrap_or_else(|| s.clone())).collect(),
            });
        }
    }
    let own: Vec<Production> = g1
        .productions
        .iter()
        .map(|p| Production {
            lhs: p.lhs.clone(),
            rhs: p.rhs.iter().map(|s| axiom_of.get(s.as_str()).cloned().unwrap_or_else(|| s.clone())).collect(),
        })
        .collect();
    let mut all = own;
    all.extend(productions);
    Cfg::new(variables, terminals.into_iter().collect(), all, &g1.axiom)
}

/// Restricted matrix grammar for `{u_1^{n_1} ... u_k^{n_k} : n ∈ v0 + N v_1 + ... + N v_l}`.
///
/// Block `i` holds `P_i` (before the offset) and `X_i`; the matrices are the
/// start rule, the offset `(P_i -> u_i^{v0_i} X_i)`, one `(X_i -> u_i^{v_i} X_i)`
/// per period, and the erasing `(X_i -> ε)`.
pub fn semilinear_to_restricted(words: &[Word], v0: &[u32], periods: &[Vec<u32>]) -> Result<RestrictedMatrixGrammar, GrammarError> {
    let k = words.len();
    if k == 0 {
        return Err(invalid("need at least one word"));
    }
    if v0.len() != k || periods.iter().any(|p| p.len() != k) {
        return Err(invalid(format!("offset and periods must have {k} entries")));
    }
    let terminals: Vec<Symbol> = words.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut used: BTreeSet<Symbol> = terminals.iter().cloned().collect();
    let mut fresh = |base: String| {
        let mut n = base;
        while used.contains(&n) {
            n.push('\'');
        }
        used.insert(n.clone());
        n
    };
    let start = fresh("S".to_string());
    let p: Vec<Symbol> = (1..=k).map(|i| fresh(format!("P{i}"))).collect();
    let x: Vec<Symbol> = (1..=k).map(|i| fresh(format!("X{i}"))).collect();
    let power = |w: &Word, n: u32| -> Word { (0..n).flat_map(|_| w.iter().cloned()).collect() };
    let mut matrices = vec![GrammarMatrix::Start(p.clone())];
    matrices.push(GrammarMatrix::Step(
        (0..k).map(|i| StepRule { lhs: p[i].clone(), left: power(&words[i], v0[i]), rhs: x[i].clone(), right: Vec::new() }).collect(),
    ));
    for per in periods {
        matrices.push(GrammarMatrix::Step(
            (0..k).map(|i| StepRule { lhs: x[i].clone(), left: power(&words[i], per[i]), rhs: x[i].clone(), right: Vec::new() }).collect(),
        ));
    }
    matrices.push(GrammarMatrix::Erase(x.clone()));
    Ok(RestrictedMatrixGrammar { start, blocks: (0..k).map(|i| vec![p[i].clone(), x[i].clone()]).collect(), terminals, matrices })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrammarSpec {
    Linear(LinearGrammar),
    Metalinear(MetalinearGrammar),
    RestrictedMatrix(RestrictedMatrixGrammar),
    Monoidal(MonoidalGrammar),
}

impl GrammarSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GrammarSpec::Linear(_) => "linear",
            GrammarSpec::Metalinear(_) => "metalinear",
            GrammarSpec::RestrictedMatrix(_) => "restricted-matrix",
            GrammarSpec::Monoidal(_) => "monoidal",
        }
    }

    pub fn terminals(&self) -> Vec<Symbol> {
        match self {
            GrammarSpec::Linear(g) => g.cfg.terminals.clone(),
            GrammarSpec::Metalinear(g) => g.cfg.terminals.clone(),
            GrammarSpec::RestrictedMatrix(g) => g.terminals.clone(),
            GrammarSpec::Monoidal(g) => g.terminals(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut v = match self {
            GrammarSpec::Linear(g) => g.cfg.to_value(),
            GrammarSpec::Metalinear(g) => g.cfg.to_value(),
            GrammarSpec::RestrictedMatrix(g) => g.to_value(),
            GrammarSpec::Monoidal(g) => g.to_value(),
        };
        v["kind"] = Value::String(self.kind().to_string());
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable") + "\n"
    }
}

/// Default cap on stored words or search states during enumeration.
pub const DEFAULT_ENUM_BUDGET: usize = 2_000_000;

/// `{ w ∈ L(g) : |w| <= max_len }` in shortlex order.
pub fn enumerate_words(g: &GrammarSpec, max_len: usize, budget: usize) -> Result<Vec<Word>, GrammarError> {
    match g {
        GrammarSpec::Linear(l) => l.cfg.enumerate(max_len, budget),
        GrammarSpec::Metalinear(m) => m.cfg.enumerate(max_len, budget),
        GrammarSpec::RestrictedMatrix(m) => m.enumerate(max_len, budget),
        GrammarSpec::Monoidal(m) => m.flatten()?.enumerate(max_len, budget),
    }
}

/// 1-based line of the first occurrence of `needle` in `text`.
fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.find(needle).map(|pos| text[..pos].matches('\n').count() + 1)
}

fn locate(text: &str, err: GrammarError, needles: &[String]) -> GrammarError {
    match err {
        GrammarError::Invalid { line: None, message } => {
            let line = needles.iter().filter(|n| message.contains(n.as_str())).find_map(|n| line_of(text, n));
            GrammarError::Invalid { line, message }
        }
        e => e,
    }
}

fn str_list(v: Option<&Value>, what: &str) -> Result<Option<Vec<String>>, GrammarError> {
    match v {
        None => Ok(None),
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| invalid(format!("\"{what}\" entries must be strings"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(_) => Err(invalid(format!("\"{what}\" must be an array of strings"))),
    }
}

fn production_list(v: Option<&Value>, what: &str) -> Result<Vec<Production>, GrammarError> {
    let items = str_list(v, what)?.ok_or_else(|| invalid(format!("\"{what}\" missing")))?;
    let mut out = Vec::new();
    for s in &items {
        out.extend(parse_productions(s).map_err(invalid)?);
    }
    Ok(out)
}

fn parse_cfg(obj: &serde_json::Map<String, Value>) -> Result<Cfg, GrammarError> {
    let prods = production_list(obj.get("productions"), "productions")?;
    let axiom = match obj.get("axiom") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(invalid("\"axiom\" must be a string")),
        None => prods.first().map(|p| p.lhs.clone()).ok_or_else(|| invalid("grammar has no productions"))?,
    };
    let vars = str_list(obj.get("variables"), "variables")?;
    let terms = str_list(obj.get("terminals"), "terminals")?;
    match (vars, terms) {
        (Some(v), Some(t)) => Cfg::new(v, t, prods, &axiom),
        (None, None) => Cfg::from_productions(prods, &axiom),
        (Some(v), None) => {
            let t: BTreeSet<Symbol> = prods.iter().flat_map(|p| p.rhs.iter()).filter(|s| !v.contains(s)).cloned().collect();
            Cfg::new(v, t.into_iter().collect(), prods, &axiom)
        }
        (None, Some(t)) => {
            let mut v: Vec<Symbol> = Vec::new();
            for s in std::iter::once(&axiom).chain(prods.iter().map(|p| &p.lhs)) {
                if !v.contains(s) {
                    v.push(s.clone());
                }
            }
            Cfg::new(v, t, prods, &axiom)
        }
    }
}

fn parse_component(v: &Value, what: &str) -> Result<MinimalLinear, GrammarError> {
    let obj = v.as_object().ok_or_else(|| invalid(format!("{what} must be an object")))?;
    let prods = production_list(obj.get("productions"), "productions")?;
    let irreducible = match obj.get("irreducible") {
        None => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => return Err(invalid(format!("{what}: \"irreducible\" must be true or false"))),
    };
    MinimalLinear::from_productions(&prods, irreducible).map_err(|e| match e {
        GrammarError::Invalid { line, message } => GrammarError::Invalid { line, message: format!("{what}: {message}") },
        e => e,
    })
}

/// Parses and validates the JSON grammar format.
pub fn parse_grammar(text: &str) -> Result<GrammarSpec, GrammarError> {
    let v: Value = serde_json::from_str(text).map_err(|e| GrammarError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let needles: Vec<String> = text
        .split('"')
        .skip(1)
        .step_by(2)
        .filter(|s| s.contains("->") || s.contains('→'))
        .flat_map(|s| {
            let mut n = vec![s.to_string()];
            if let Ok(ps) = parse_productions(s) {
                n.extend(ps.iter().map(|p| p.to_string()));
            }
            n
        })
        .collect();
    parse_value(&v).map_err(|e| locate(text, e, &needles))
}

pub fn parse_value(v: &Value) -> Result<GrammarSpec, GrammarError> {
    let obj = v.as_object().ok_or_else(|| invalid("top level must be an object"))?;
    let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| invalid("\"kind\" missing"))?;
    match kind {
        "linear" => Ok(GrammarSpec::Linear(LinearGrammar::new(parse_cfg(obj)?)?)),
        "metalinear" => Ok(GrammarSpec::Metalinear(MetalinearGrammar::new(parse_cfg(obj)?)?)),
        "restricted-matrix" | "matrix" => {
            let start = obj.get("start").and_then(Value::as_str).unwrap_or("S").to_string();
            let blocks: Vec<Vec<String>> = obj
                .get("blocks")
                .and_then(Value::as_array)
                .ok_or_else(|| invalid("\"blocks\" must be an array of variable lists"))?
                .iter()
                .map(|b| str_list(Some(b), "blocks").map(Option::unwrap_or_default))
                .collect::<Result<_, _>>()?;
            let terminals = str_list(obj.get("terminals"), "terminals")?;
            let matrices: Vec<Vec<Production>> = obj
                .get("matrices")
                .and_then(Value::as_array)
                .ok_or_else(|| invalid("\"matrices\" must be an array of production lists"))?
                .iter()
                .map(|m| production_list(Some(m), "matrices"))
                .collect::<Result<_, _>>()?;
            Ok(GrammarSpec::RestrictedMatrix(RestrictedMatrixGrammar::from_rules(&start, blocks, terminals, &matrices)?))
        }
        "monoidal" => {
            let top = parse_component(obj.get("top").ok_or_else(|| invalid("\"top\" missing"))?, "top")?;
            let levels = match obj.get("levels") {
                None => Vec::new(),
                Some(Value::Array(ls)) => ls
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        l.as_object()
                            .ok_or_else(|| invalid(format!("level {} must map letters to grammars", i + 2)))?
                            .iter()
                            .map(|(a, g)| Ok((a.clone(), parse_component(g, &format!("level {} letter {a}", i + 2))?)))
                            .collect::<Result<BTreeMap<_, _>, GrammarError>>()
                    })
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(invalid("\"levels\" must be an array")),
            };
            Ok(GrammarSpec::Monoidal(MonoidalGrammar::new(top, levels)?))
        }
        other => Err(invalid(format!("unknown grammar kind {other:?}"))),
    }
}
