//! Existentially quantified semialgebraic sets of matrix tuples and the
//! closure calculus on them (union, product, sandwich, direct sum, block
//! product, entry renaming).
//!
//! A set is `{ X : ∃ Y_1 ... Y_r . body }` where `X` is a tuple of free
//! blocks and every `Y_i` is a bound square block. Atoms are `p = 0` or
//! `p > 0`. Products go through intermediate blocks so that no atom built
//! here has degree above two.
//!
//! `Hint` nodes are semantically `true`. They record candidate values for
//! some blocks (for instance the elements of a finite group); the search
//! engine branches on them, and a hint marked complete lets it conclude that
//! no other values need to be tried.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{entry_rename, format_rational, BlockMatrix, EntryPermutation, QMatrix, Rational};
use crate::linalg::{self, AffineSolution};
use crate::zariski::groebner::{Budget, ResourceError};
use crate::zariski::ideal::PolyIdeal;
use crate::zariski::poly::Poly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalcError {
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Entry `(row, col)` of block `block` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub block: u32,
    pub row: u16,
    pub col: u16,
}

impl Var {
    pub fn new(block: u32, row: usize, col: usize) -> Self {
        Self { block, row: row as u16, col: col as u16 }
    }
}

pub type Monomial = Vec<(Var, u16)>;
pub type Assignment = BTreeMap<Var, Rational>;

/// Sparse polynomial over named matrix entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymPoly {
    terms: BTreeMap<Monomial, Rational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: Monomial = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            out.push((a[i].0, a[i].1 + b[j].1));
            i += 1;
            j += 1;
        }
    }
    out
}

impl SymPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![(v, 1)], Rational::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|&(_, e)| e as u32).sum()).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.iter().map(|&(v, _)| v)).collect()
    }

    pub fn add(&self, o: &SymPoly) -> SymPoly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &SymPoly) -> SymPoly {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> SymPoly {
        if c.is_zero() {
            return SymPoly::zero();
        }
        SymPoly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul(&self, o: &SymPoly) -> SymPoly {
        let mut r = SymPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.add_term(mono_mul(a, b), x * y);
            }
        }
        r
    }

    /// Replaces assigned variables by their values.
    pub fn substitute(&self, asg: &Assignment) -> SymPoly {
        let mut r = SymPoly::zero();
        for (m, c) in &self.terms {
            let mut c = c.clone();
            let mut rest: Monomial = Vec::new();
            for &(v, e) in m {
                match asg.get(&v) {
                    Some(x) => c *= num_traits::pow(x.clone(), e as usize),
                    None => rest.push((v, e)),
                }
            }
            r.add_term(rest, c);
        }
        r
    }

    pub fn map_vars(&self, f: &impl Fn(Var) -> Var) -> SymPoly {
        let mut r = SymPoly::zero();
        for (m, c) in &self.terms {
            let mut mm: Monomial = Vec::new();
            for &(v, e) in m {
                mm = mono_mul(&mm, &vec![(f(v), e)]);
            }
            r.add_term(mm, c.clone());
        }
        r
    }

    /// `(coefficients, constant)` when the degree is at most one.
    pub fn linear_parts(&self) -> Option<(Vec<(Var, Rational)>, Rational)> {
        let mut lin = Vec::new();
        let mut c = Rational::zero();
        for (m, x) in &self.terms {
            match m.as_slice() {
                [] => c = x.clone(),
                [(v, 1)] => lin.push((*v, x.clone())),
                _ => return None,
            }
        }
        Some((lin, c))
    }

    pub fn display_with(&self, name: &impl Fn(Var) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        // highest degree first, constants last
        let mut ts: Vec<(&Monomial, &Rational)> = self.terms.iter().collect();
        ts.sort_by(|a, b| {
            let da: u16 = a.0.iter().map(|x| x.1).sum();
            let db: u16 = b.0.iter().map(|x| x.1).sum();
            db.cmp(&da).then_with(|| a.0.cmp(b.0))
        });
        for (k, (m, c)) in ts.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .iter()
                .map(|&(v, e)| if e == 1 { name(v) } else { format!("{}^{e}", name(v)) })
                .collect();
            if factors.is_empty() {
                out.push_str(&format_rational(&a));
            } else {
                if !a.is_one() {
                    let _ = write!(out, "{}*", format_rational(&a));
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Gt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub poly: SymPoly,
    pub rel: Rel,
}

/// Candidate values for some blocks; semantically `true`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hint {
    pub blocks: Vec<u32>,
    pub tuples: Arc<Vec<Vec<QMatrix>>>,
    /// Every model of the enclosing conjunction takes one of the tuples.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Hint(Hint),
}

impl Formula {
    pub fn eq(p: SymPoly) -> Formula {
        Formula::Atom(Atom { poly: p, rel: Rel::Eq })
    }

    pub fn gt(p: SymPoly) -> Formula {
        Formula::Atom(Atom { poly: p, rel: Rel::Gt })
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    fn map_blocks(&self, f: &impl Fn(u32) -> u32) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(Atom {
                poly: a.poly.map_vars(&|v: Var| Var { block: f(v.block), ..v }),
                rel: a.rel,
            }),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map_blocks(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map_blocks(f)).collect()),
            Formula::Hint(h) => Formula::Hint(Hint {
                blocks: h.blocks.iter().map(|&b| f(b)).collect(),
                tuples: h.tuples.clone(),
                complete: h.complete,
            }),
        }
    }

    /// Number of nodes; the calculus keeps this linear in the number of operations.
    pub fn size(&self) -> usize {
        match self {
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::size).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
            match f {
                Formula::Atom(a) => out.push(a),
                Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| go(x, out)),
                _ => {}
            }
        }
        go(self, &mut out);
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms().iter().flat_map(|a| a.poly.vars()).collect()
    }

    /// Constant folding under a partial assignment.
    pub fn simplify(&self, asg: &Assignment) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => {
                let p = a.poly.substitute(asg);
                match p.as_constant() {
                    Some(c) => {
                        let holds = match a.rel {
                            Rel::Eq => c.is_zero(),
                            Rel::Gt => c.is_positive(),
                        };
                        if holds { Formula::True } else { Formula::False }
                    }
                    None => Formula::Atom(Atom { poly: p, rel: a.rel }),
                }
            }
            Formula::And(xs) => Formula::and(xs.iter().map(|x| x.simplify(asg)).collect()),
            Formula::Or(xs) => Formula::or(xs.iter().map(|x| x.simplify(asg)).collect()),
            Formula::Hint(h) => {
                let mut any_unassigned = false;
                let mut keep: Vec<usize> = Vec::new();
                for (t, tuple) in h.tuples.iter().enumerate() {
                    let mut ok = true;
                    'check: for (&b, m) in h.blocks.iter().zip(tuple) {
                        for i in 0..m.dim() {
                            for j in 0..m.dim() {
                                match asg.get(&Var::new(b, i, j)) {
                                    Some(x) if x != m.get(i, j) => {
                                        ok = false;
                                        break 'check;
                                    }
                                    Some(_) => {}
                                    None => any_unassigned = true,
                                }
                            }
                        }
                    }
                    if ok {
                        keep.push(t);
                    }
                }
                if keep.is_empty() {
                    return if h.complete { Formula::False } else { Formula::True };
                }
                if !any_unassigned {
                    // fully assigned and matching one tuple, or (incomplete) irrelevant
                    return Formula::True;
                }
                let tuples = if keep.len() == h.tuples.len() {
                    h.tuples.clone()
                } else {
                    Arc::new(keep.iter().map(|&t| h.tuples[t].clone()).collect())
                };
                Formula::Hint(Hint { blocks: h.blocks.clone(), tuples, complete: h.complete })
            }
        }
    }

    /// Truth value when every variable is assigned (missing ones read as 0).
    pub fn eval(&self, asg: &Assignment) -> bool {
        let mut full = asg.clone();
        for v in self.vars() {
            full.entry(v).or_insert_with(Rational::zero);
        }
        // hints on unassigned blocks are true by definition
        matches!(strip_hints(&self.simplify(&full)), Formula::True)
    }

    /// SMT-LIB term; hints become `true`.
    pub fn to_smt(&self, name: &impl Fn(Var) -> String) -> String {
        match self {
            Formula::True | Formula::Hint(_) => "true".to_string(),
            Formula::False => "false".to_string(),
            Formula::Atom(a) => {
                let p = smt_poly(&a.poly, name);
                match a.rel {
                    Rel::Eq => format!("(= {p} 0.0)"),
                    Rel::Gt => format!("(> {p} 0.0)"),
                }
            }
            Formula::And(xs) => format!("(and {})", xs.iter().map(|x| x.to_smt(name)).collect::<Vec<_>>().join(" ")),
            Formula::Or(xs) => format!("(or {})", xs.iter().map(|x| x.to_smt(name)).collect::<Vec<_>>().join(" ")),
        }
    }
}

fn strip_hints(f: &Formula) -> Formula {
    match f {
        Formula::Hint(_) => Formula::True,
        Formula::And(xs) => Formula::and(xs.iter().map(strip_hints).collect()),
        Formula::Or(xs) => Formula::or(xs.iter().map(strip_hints).collect()),
        x => x.clone(),
    }
}

/// SMT-LIB real literal: `3.0`, `(- 3.0)`, `(/ 3.0 5.0)`, `(- (/ 3.0 5.0))`.
pub fn smt_rational(c: &Rational) -> String {
    let a = c.abs();
    let body = if a.is_integer() { format!("{}.0", a.numer()) } else { format!("(/ {}.0 {}.0)", a.numer(), a.denom()) };
    if c.is_negative() { format!("(- {body})") } else { body }
}

fn smt_poly(p: &SymPoly, name: &impl Fn(Var) -> String) -> String {
    let terms: Vec<String> = p
        .terms()
        .map(|(m, c)| {
            let mut fs: Vec<String> = Vec::new();
            if !c.is_one() || m.is_empty() {
                fs.push(smt_rational(c));
            }
            for &(v, e) in m {
                for _ in 0..e {
                    fs.push(name(v));
                }
            }
            if fs.len() == 1 { fs.pop().unwrap() } else { format!("(* {})", fs.join(" ")) }
        })
        .collect();
    match terms.len() {
        0 => "0.0".to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Probe {
    True,
    False,
    Unknown,
}

/// `{ X : ∃ bound . body }`. Block ids `0..free.len()` are free, the rest bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemiAlgSet {
    pub free: Vec<usize>,
    pub bound: Vec<usize>,
    pub body: Formula,
}

struct Layout {
    free: Vec<usize>,
    bound: Vec<usize>,
}

impl Layout {
    fn new(free: &[usize]) -> Self {
        Self { free: free.to_vec(), bound: Vec::new() }
    }

    fn alloc(&mut self, d: usize) -> u32 {
        self.bound.push(d);
        (self.free.len() + self.bound.len() - 1) as u32
    }

    /// Places `s` with its free blocks at `targets`; returns the embedded body.
    fn embed(&mut self, s: &SemiAlgSet, targets: &[u32]) -> Formula {
        let base = (self.free.len() + self.bound.len()) as u32;
        self.bound.extend(s.bound.iter().copied());
        let nf = s.free.len() as u32;
        s.body.map_blocks(&|b| if b < nf { targets[b as usize] } else { base + (b - nf) })
    }

    fn finish(self, body: Formula) -> SemiAlgSet {
        SemiAlgSet { free: self.free, bound: self.bound, body }
    }
}

/// `x = y · z` entrywise.
fn product_eqs(x: u32, y: u32, z: u32, d: usize) -> Vec<Formula> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut p = SymPoly::var(Var::new(x, i, j));
            for t in 0..d {
                p = p.sub(&SymPoly::var(Var::new(y, i, t)).mul(&SymPoly::var(Var::new(z, t, j))));
            }
            out.push(Formula::eq(p));
        }
    }
    out
}

fn shape_check(ok: bool, what: impl FnOnce() -> String) -> Result<(), CalcError> {
    if ok { Ok(()) } else { Err(CalcError::Shape(what())) }
}

impl SemiAlgSet {
    pub fn whole(shape: &[usize]) -> Self {
        Self { free: shape.to_vec(), bound: Vec::new(), body: Formula::True }
    }

    pub fn empty(shape: &[usize]) -> Self {
        Self { free: shape.to_vec(), bound: Vec::new(), body: Formula::False }
    }

    pub fn is_empty_formula(&self) -> bool {
        self.body == Formula::False
    }

    pub fn dim_of(&self, block: u32) -> usize {
        let b = block as usize;
        if b < self.free.len() { self.free[b] } else { self.bound[b - self.free.len()] }
    }

    /// Conjunction of the reduced basis, as equations over the free blocks.
    pub fn from_ideal(ideal: &PolyIdeal, budget: &Budget) -> Result<Self, ResourceError> {
        let shape = ideal.shape().to_vec();
        let mut vars = Vec::new();
        for (b, &d) in shape.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    vars.push(Var::new(b as u32, i, j));
                }
            }
        }
        let basis = ideal.basis_with(budget)?;
        let atoms: Vec<Formula> = basis.iter().map(|p| Formula::eq(sym_of_poly(p, &vars))).collect();
        let body = if basis.iter().any(|p| p.as_constant().is_some_and(|c| !c.is_zero())) {
            Formula::False
        } else {
            Formula::and(atoms)
        };
        Ok(Self { free: shape, bound: Vec::new(), body })
    }

    /// The singleton `{t}`; carries a complete hint.
    pub fn point(t: &BlockMatrix) -> Self {
        let mut atoms = Vec::new();
        for (b, m) in t.blocks().iter().enumerate() {
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    let v = SymPoly::var(Var::new(b as u32, i, j)).sub(&SymPoly::constant(m.get(i, j).clone()));
                    atoms.push(Formula::eq(v));
                }
            }
        }
        let hint = Formula::Hint(Hint {
            blocks: (0..t.blocks().len() as u32).collect(),
            tuples: Arc::new(vec![t.blocks().to_vec()]),
            complete: true,
        });
        atoms.push(hint);
        Self { free: t.shape(), bound: Vec::new(), body: Formula::and(atoms) }
    }

    pub fn point_matrix(m: &QMatrix) -> Self {
        Self::point(&BlockMatrix::new(vec![m.clone()]))
    }

    /// Finite union of points; the empty list gives the empty set.
    pub fn points(shape: &[usize], ts: &[BlockMatrix]) -> Result<Self, CalcError> {
        let mut parts = Vec::new();
        for t in ts {
            shape_check(t.shape() == shape, || format!("point of shape {:?} in a set of shape {shape:?}", t.shape()))?;
            parts.push(Self::point(t).body);
        }
        Ok(Self { free: shape.to_vec(), bound: Vec::new(), body: Formula::or(parts) })
    }

    /// Adds candidate values for the free blocks.
    pub fn with_hint(mut self, tuples: Vec<BlockMatrix>, complete: bool) -> Self {
        let hint = Formula::Hint(Hint {
            blocks: (0..self.free.len() as u32).collect(),
            tuples: Arc::new(tuples.into_iter().map(BlockMatrix::into_blocks).collect()),
            complete,
        });
        self.body = Formula::and(vec![self.body, hint]);
        self
    }

    pub fn union(a: &SemiAlgSet, b: &SemiAlgSet) -> Result<Self, CalcError> {
        Self::union_all(&a.free, &[a.clone(), b.clone()])
    }

    pub fn union_all(shape: &[usize], parts: &[SemiAlgSet]) -> Result<Self, CalcError> {
        let mut lay = Layout::new(shape);
        let ids: Vec<u32> = (0..shape.len() as u32).collect();
        let mut bodies = Vec::new();
        for p in parts {
            shape_check(p.free == shape, || format!("union of shapes {:?} and {shape:?}", p.free))?;
            bodies.push(lay.embed(p, &ids));
        }
        Ok(lay.finish(Formula::or(bodies)))
    }

    /// Blockwise `{ Y Z : Y ∈ a, Z ∈ b }`.
    pub fn product(a: &SemiAlgSet, b: &SemiAlgSet) -> Result<Self, CalcError> {
        shape_check(a.free == b.free, || format!("product of shapes {:?} and {:?}", a.free, b.free))?;
        if a.is_empty_formula() || b.is_empty_formula() {
            return Ok(Self::empty(&a.free));
        }
        let mut lay = Layout::new(&a.free);
        let y: Vec<u32> = a.free.iter().map(|&d| lay.alloc(d)).collect();
        let fa = lay.embed(a, &y);
        let z: Vec<u32> = b.free.iter().map(|&d| lay.alloc(d)).collect();
        let fb = lay.embed(b, &z);
        let mut parts = vec![fa, fb];
        for (k, &d) in a.free.iter().enumerate() {
            parts.extend(product_eqs(k as u32, y[k], z[k], d));
        }
        Ok(lay.finish(Formula::and(parts)))
    }

    /// `{ P M Q : (P, Q) ∈ pairs, M ∈ mid }`, blockwise. `pairs` has the
    /// left factors first, then the right ones.
    pub fn sandwich(pairs: &SemiAlgSet, mid: &SemiAlgSet) -> Result<Self, CalcError> {
        let k = mid.free.len();
        shape_check(pairs.free.len() == 2 * k && pairs.free[..k] == mid.free[..] && pairs.free[k..] == mid.free[..], || {
            format!("sandwich of pairs {:?} around {:?}", pairs.free, mid.free)
        })?;
        if pairs.is_empty_formula() || mid.is_empty_formula() {
            return Ok(Self::empty(&mid.free));
        }
        let mut lay = Layout::new(&mid.free);
        let pq: Vec<u32> = pairs.free.iter().map(|&d| lay.alloc(d)).collect();
        let fp = lay.embed(pairs, &pq);
        let m: Vec<u32> = mid.free.iter().map(|&d| lay.alloc(d)).collect();
        let fm = lay.embed(mid, &m);
        let mut parts = vec![fp, fm];
        for (b, &d) in mid.free.iter().enumerate() {
            let w = lay.alloc(d);
            parts.extend(product_eqs(w, pq[b], m[b], d));
            parts.extend(product_eqs(b as u32, w, pq[k + b], d));
        }
        Ok(lay.finish(Formula::and(parts)))
    }

    /// Tuples concatenated; off-diagonal blocks are structurally zero.
    pub fn dsum(parts: &[SemiAlgSet]) -> Result<Self, CalcError> {
        shape_check(!parts.is_empty(), || "direct sum of nothing".to_string())?;
        let shape: Vec<usize> = parts.iter().flat_map(|p| p.free.iter().copied()).collect();
        let mut lay = Layout::new(&shape);
        let mut next = 0u32;
        let mut bodies = Vec::new();
        for p in parts {
            let ids: Vec<u32> = (next..next + p.free.len() as u32).collect();
            next += p.free.len() as u32;
            bodies.push(lay.embed(p, &ids));
        }
        Ok(lay.finish(Formula::and(bodies)))
    }

    /// `{ X_1 ... X_k : X_1 ⊕ ... ⊕ X_k ∈ a }`.
    pub fn blocks_product(a: &SemiAlgSet) -> Result<Self, CalcError> {
        shape_check(!a.free.is_empty() && a.free.iter().all(|&d| d == a.free[0]), || {
            format!("block product needs equal block sizes, got {:?}", a.free)
        })?;
        let d = a.free[0];
        if a.is_empty_formula() {
            return Ok(Self::empty(&[d]));
        }
        let mut lay = Layout::new(&[d]);
        if a.free.len() == 1 {
            let body = lay.embed(a, &[0]);
            return Ok(lay.finish(body));
        }
        let xs: Vec<u32> = a.free.iter().map(|&d| lay.alloc(d)).collect();
        let fa = lay.embed(a, &xs);
        let mut parts = vec![fa];
        let mut cur = xs[0];
        for t in 1..xs.len() {
            let target = if t + 1 == xs.len() { 0 } else { lay.alloc(d) };
            parts.extend(product_eqs(target, cur, xs[t], d));
            cur = target;
        }
        Ok(lay.finish(Formula::and(parts)))
    }

    /// `{ π(A) : A ∈ self }` on one free block, with `π(A)_{ij} = A_{π(i,j)}`.
    pub fn rename(&self, pi: &EntryPermutation, block: usize) -> Result<Self, CalcError> {
        shape_check(block < self.free.len() && self.free[block] == pi.dim(), || {
            format!("renaming of dimension {} on block {block} of {:?}", pi.dim(), self.free)
        })?;
        let inv = pi.inverse();
        let b = block as u32;
        let map = |v: Var| {
            if v.block == b {
                let (i, j) = inv.apply(v.row as usize, v.col as usize);
                Var::new(b, i, j)
            } else {
                v
            }
        };
        fn go(f: &Formula, map: &impl Fn(Var) -> Var, pi: &EntryPermutation, b: u32) -> Formula {
            match f {
                Formula::Atom(a) => Formula::Atom(Atom { poly: a.poly.map_vars(map), rel: a.rel }),
                Formula::And(xs) => Formula::And(xs.iter().map(|x| go(x, map, pi, b)).collect()),
                Formula::Or(xs) => Formula::Or(xs.iter().map(|x| go(x, map, pi, b)).collect()),
                Formula::Hint(h) => match h.blocks.iter().position(|&x| x == b) {
                    None => f.clone(),
                    Some(k) => Formula::Hint(Hint {
                        blocks: h.blocks.clone(),
                        tuples: Arc::new(
                            h.tuples
                                .iter()
                                .map(|t| {
                                    let mut t = t.clone();
                                    t[k] = entry_rename(pi, &t[k]).expect("dimension checked");
                                    t
                                })
                                .collect(),
                        ),
                        complete: h.complete,
                    }),
                },
                x => x.clone(),
            }
        }
        Ok(Self { free: self.free.clone(), bound: self.bound.clone(), body: go(&self.body, &map, pi, b) })
    }

    pub fn transpose_block(&self, block: usize) -> Result<Self, CalcError> {
        self.rename(&EntryPermutation::transpose(self.free.get(block).copied().unwrap_or(0)), block)
    }

    /// Membership of the free tuple `x`, optionally with bound-block values.
    pub fn probe(&self, x: &[QMatrix], witnesses: Option<&[(u32, QMatrix)]>) -> Probe {
        if x.len() != self.free.len() || x.iter().zip(&self.free).any(|(m, &d)| m.dim() != d) {
            return Probe::False;
        }
        let mut asg = Assignment::new();
        for (b, m) in x.iter().enumerate() {
            assign_block(&mut asg, b as u32, m);
        }
        for (b, m) in witnesses.unwrap_or(&[]) {
            assign_block(&mut asg, *b, m);
        }
        match search(&self.body, asg, &SearchLimits::default()) {
            SearchOutcome::Sat(_) => Probe::True,
            SearchOutcome::Unsat => Probe::False,
            SearchOutcome::Unknown => Probe::Unknown,
        }
    }

    pub fn probe_matrix(&self, m: &QMatrix) -> Probe {
        self.probe(std::slice::from_ref(m), None)
    }

    /// All values of the free tuple found by the search, and whether the
    /// search proved there are no others.
    pub fn members(&self, limits: &SearchLimits) -> (BTreeSet<Vec<QMatrix>>, bool) {
        let blocks: Vec<(u32, usize)> = self.free.iter().enumerate().map(|(b, &d)| (b as u32, d)).collect();
        enumerate_models(&self.body, &blocks, limits)
    }

    pub fn var_name(&self, v: Var) -> String {
        let b = v.block as usize;
        if b < self.free.len() {
            format!("X{}_{}_{}", b, v.row + 1, v.col + 1)
        } else {
            format!("Y{}_{}_{}", b - self.free.len(), v.row + 1, v.col + 1)
        }
    }

    /// Human-readable indented rendering.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let free: Vec<String> = self.free.iter().enumerate().map(|(b, d)| format!("X{b}:{d}x{d}")).collect();
        let bound: Vec<String> = self.bound.iter().enumerate().map(|(b, d)| format!("Y{b}:{d}x{d}")).collect();
        let _ = writeln!(out, "{{ {} :", free.join(", "));
        if !bound.is_empty() {
            let _ = writeln!(out, "  exists {} .", bound.join(", "));
        }
        fn go(s: &SemiAlgSet, f: &Formula, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match f {
                Formula::True => {
                    let _ = writeln!(out, "{pad}true");
                }
                Formula::False => {
                    let _ = writeln!(out, "{pad}false");
                }
                Formula::Atom(a) => {
                    let _ = writeln!(out, "{pad}{}", s.atom_text(a));
                }
                Formula::Hint(h) => {
                    let _ = writeln!(
                        out,
                        "{pad}hint {} candidates for blocks {:?}{}",
                        h.tuples.len(),
                        h.blocks,
                        if h.complete { " (complete)" } else { "" }
                    );
                }
                Formula::And(xs) | Formula::Or(xs) => {
                    let _ = writeln!(out, "{pad}{}", if matches!(f, Formula::And(_)) { "and" } else { "or" });
                    for x in xs {
                        go(s, x, depth + 1, out);
                    }
                }
            }
        }
        go(self, &self.body, 2, &mut out);
        out.push_str("}\n");
        out
    }

    pub fn atom_text(&self, a: &Atom) -> String {
        let p = a.poly.display_with(&|v| self.var_name(v));
        match a.rel {
            Rel::Eq => format!("{p} = 0"),
            Rel::Gt => format!("{p} > 0"),
        }
    }

    pub fn to_value(&self) -> Value {
        fn go(s: &SemiAlgSet, f: &Formula) -> Value {
            match f {
                Formula::True => Value::Bool(true),
                Formula::False => Value::Bool(false),
                Formula::Atom(a) => json!({ "atom": s.atom_text(a) }),
                Formula::And(xs) => json!({ "and": xs.iter().map(|x| go(s, x)).collect::<Vec<_>>() }),
                Formula::Or(xs) => json!({ "or": xs.iter().map(|x| go(s, x)).collect::<Vec<_>>() }),
                Formula::Hint(h) => json!({ "hint": {
                    "blocks": h.blocks.iter().map(|&b| s.block_name(b)).collect::<Vec<_>>(),
                    "candidates": h.tuples.len(),
                    "complete": h.complete,
                }}),
            }
        }
        json!({
            "free": self.free,
            "bound": self.bound,
            "formula": go(self, &self.body),
            "size": self.body.size(),
        })
    }

    fn block_name(&self, b: u32) -> String {
        let b = b as usize;
        if b < self.free.len() { format!("X{b}") } else { format!("Y{}", b - self.free.len()) }
    }
}

impl fmt::Display for SemiAlgSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

fn sym_of_poly(p: &Poly, vars: &[Var]) -> SymPoly {
    let mut r = SymPoly::zero();
    for (e, c) in p.terms() {
        let m: Monomial = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (vars[i], k)).collect();
        r.add_term(m, c.clone());
    }
    r
}

pub fn assign_block(asg: &mut Assignment, b: u32, m: &QMatrix) {
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            asg.insert(Var::new(b, i, j), m.get(i, j).clone());
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchLimits {
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_nodes: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Sat(Assignment),
    Unsat,
    Unknown,
}

struct Searcher<'a> {
    nodes: usize,
    limits: &'a SearchLimits,
    /// Collect mode: blocks to project on, collected values, completeness.
    collect: Option<(&'a [(u32, usize)], BTreeSet<Vec<QMatrix>>, bool)>,
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(xs) => xs.iter().collect(),
        x => vec![x],
    }
}

impl Searcher<'_> {
    fn leaf_sat(&mut self, asg: Assignment) -> SearchOutcome {
        match &mut self.collect {
            None => SearchOutcome::Sat(asg),
            Some((blocks, found, complete)) => {
                let mut tuple = Vec::new();
                for &(b, d) in blocks.iter() {
                    let mut m = QMatrix::zeros(d);
                    for i in 0..d {
                        for j in 0..d {
                            match asg.get(&Var::new(b, i, j)) {
                                Some(x) => m.set(i, j, x.clone()),
                                None => {
                                    *complete = false;
                                    return SearchOutcome::Unsat;
                                }
                            }
                        }
                    }
                    tuple.push(m);
                }
                found.insert(tuple);
                SearchOutcome::Unsat
            }
        }
    }

    fn unknown(&mut self) -> SearchOutcome {
        if let Some((_, _, complete)) = &mut self.collect {
            *complete = false;
        }
        SearchOutcome::Unknown
    }

    fn node(&mut self, f: &Formula, mut asg: Assignment) -> SearchOutcome {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return self.unknown();
        }
        let mut f = f.simplify(&asg);
        loop {
            match f {
                Formula::True => return self.leaf_sat(asg),
                Formula::False => return SearchOutcome::Unsat,
                _ => {}
            }
            // linear propagation over the top-level equations
            let mut index: BTreeMap<Var, usize> = BTreeMap::new();
            let mut lins = Vec::new();
            for c in conjuncts(&f) {
                if let Formula::Atom(Atom { poly, rel: Rel::Eq }) = c {
                    if let Some((lin, k)) = poly.linear_parts() {
                        for (v, _) in &lin {
                            let n = index.len();
                            index.entry(*v).or_insert(n);
                        }
                        lins.push((lin, k));
                    }
                }
            }
            if lins.is_empty() {
                break;
            }
            let n = index.len();
            let rows: Vec<Vec<Rational>> = lins
                .iter()
                .map(|(lin, k)| {
                    let mut r = vec![Rational::zero(); n + 1];
                    for (v, c) in lin {
                        r[index[v]] += c;
                    }
                    r[n] = -k.clone();
                    r
                })
                .collect();
            match linalg::forced_values(&rows, n) {
                AffineSolution::Inconsistent => return SearchOutcome::Unsat,
                AffineSolution::Determined(vals) if !vals.is_empty() => {
                    let by_index: Vec<Var> = {
                        let mut v = vec![Var::new(0, 0, 0); n];
                        for (var, &i) in &index {
                            v[i] = *var;
                        }
                        v
                    };
                    let mut local = Assignment::new();
                    for (i, x) in vals {
                        local.insert(by_index[i], x.clone());
                        asg.insert(by_index[i], x);
                    }
                    f = f.simplify(&local);
                }
                AffineSolution::Determined(_) => break,
            }
        }
        let cs = conjuncts(&f);
        // branch on the smallest hint first
        let hint = cs
            .iter()
            .enumerate()
            .filter_map(|(k, c)| if let Formula::Hint(h) = c { Some((k, h)) } else { None })
            .min_by_key(|(_, h)| h.tuples.len());
        if let Some((k, h)) = hint {
            let h = h.clone();
            let rest = Formula::and(cs.iter().enumerate().filter(|&(t, _)| t != k).map(|(_, c)| (*c).clone()).collect());
            let mut unknown = false;
            for tuple in h.tuples.iter() {
                let mut a = asg.clone();
                for (&b, m) in h.blocks.iter().zip(tuple) {
                    assign_block(&mut a, b, m);
                }
                match self.node(&rest, a) {
                    SearchOutcome::Sat(m) => return SearchOutcome::Sat(m),
                    SearchOutcome::Unsat => {}
                    SearchOutcome::Unknown => unknown = true,
                }
            }
            if h.complete {
                return if unknown { SearchOutcome::Unknown } else { SearchOutcome::Unsat };
            }
            if self.collect.is_some() {
                // candidates outside the sample may exist
                return self.unknown();
            }
            // the hint is only a sample; the rest may still be refutable
            return match self.node(&rest, asg) {
                SearchOutcome::Unsat => SearchOutcome::Unsat,
                SearchOutcome::Sat(m) => SearchOutcome::Sat(m),
                SearchOutcome::Unknown => SearchOutcome::Unknown,
            };
        }
        if let Some(k) = cs.iter().position(|c| matches!(c, Formula::Or(_))) {
            let Formula::Or(alts) = cs[k] else { unreachable!() };
            let others: Vec<Formula> = cs.iter().enumerate().filter(|&(t, _)| t != k).map(|(_, c)| (*c).clone()).collect();
            let mut unknown = false;
            for alt in alts {
                let mut parts = others.clone();
                parts.push(alt.clone());
                match self.node(&Formula::and(parts), asg.clone()) {
                    SearchOutcome::Sat(m) => return SearchOutcome::Sat(m),
                    SearchOutcome::Unsat => {}
                    SearchOutcome::Unknown => unknown = true,
                }
            }
            return if unknown { SearchOutcome::Unknown } else { SearchOutcome::Unsat };
        }
        self.unknown()
    }
}

/// Looks for a model extending `asg`. `Unsat` is a proof; `Unknown` means
/// the remaining constraints are nonlinear with no usable hint.
pub fn search(f: &Formula, asg: Assignment, limits: &SearchLimits) -> SearchOutcome {
    let mut s = Searcher { nodes: 0, limits, collect: None };
    s.node(f, asg)
}

/// Every model value of the given blocks reachable by the search; the flag
/// is true when the search space was exhausted without unknown branches.
pub fn enumerate_models(f: &Formula, blocks: &[(u32, usize)], limits: &SearchLimits) -> (BTreeSet<Vec<QMatrix>>, bool) {
    let mut s = Searcher { nodes: 0, limits, collect: Some((blocks, BTreeSet::new(), true)) };
    s.node(f, Assignment::new());
    let (_, found, complete) = s.collect.expect("collect mode");
    (found, complete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;
    use crate::zariski::closure::{group_closure, ClosureConfig};

    fn r() -> QMatrix {
        QMatrix::from_ratios(&[&[(3, 5), (4, 5)], &[(-4, 5), (3, 5)]])
    }

    fn pt(m: &QMatrix) -> SemiAlgSet {
        SemiAlgSet::point_matrix(m)
    }

    fn pair(a: &QMatrix, b: &QMatrix) -> SemiAlgSet {
        SemiAlgSet::point(&BlockMatrix::new(vec![a.clone(), b.clone()]))
    }

    fn i2() -> QMatrix {
        QMatrix::identity(2)
    }

    #[test]
    fn point_formula() {
        let s = pt(&i2());
        assert_eq!(s.body.atoms().len(), 4);
        assert_eq!(s.probe_matrix(&i2()), Probe::True);
        assert_eq!(s.probe_matrix(&r()), Probe::False);
    }

    #[test]
    fn variety_formulas() {
        let so2 = group_closure(&[2], &[BlockMatrix::new(vec![r()])], &ClosureConfig::default()).unwrap().ideal;
        let s = SemiAlgSet::from_ideal(&so2, &Budget::default()).unwrap();
        assert_eq!(s.body.atoms().len(), 3);
        assert_eq!(s.probe_matrix(&r().pow(5)), Probe::True);
        let swap = QMatrix::from_ints(&[&[0, 1], &[1, 0]]);
        assert_eq!(s.probe_matrix(&swap), Probe::False);
        let whole = SemiAlgSet::from_ideal(&PolyIdeal::whole_space(&[2]), &Budget::default()).unwrap();
        assert_eq!(whole.body, Formula::True);
    }

    #[test]
    fn unions_and_products() {
        let u = SemiAlgSet::union(&pt(&i2()), &pt(&r())).unwrap();
        assert!(matches!(&u.body, Formula::Or(xs) if xs.len() == 2));
        assert_eq!(u.probe_matrix(&r()), Probe::True);
        let p = SemiAlgSet::product(&pt(&r()), &pt(&r().transpose())).unwrap();
        assert_eq!(p.probe_matrix(&i2()), Probe::True);
        assert_eq!(p.probe_matrix(&r()), Probe::False);
        let w = [(1, r()), (2, r().transpose())];
        assert_eq!(p.probe(&[i2()], Some(&w)), Probe::True);
        let q = SemiAlgSet::product(&u, &pt(&i2())).unwrap();
        assert_eq!(q.members(&SearchLimits::default()), (BTreeSet::from([vec![i2()], vec![r()]]), true));
    }

    #[test]
    fn sandwiches() {
        let s = SemiAlgSet::sandwich(&pair(&r(), &r().transpose()), &pt(&i2())).unwrap();
        assert_eq!(s.members(&SearchLimits::default()), (BTreeSet::from([vec![i2()]]), true));
        let s = SemiAlgSet::sandwich(&pair(&r(), &i2()), &pt(&r())).unwrap();
        assert_eq!(s.members(&SearchLimits::default()).0, BTreeSet::from([vec![&r() * &r()]]));
        let s = SemiAlgSet::sandwich(&pair(&i2(), &i2()), &SemiAlgSet::union(&pt(&i2()), &pt(&r())).unwrap()).unwrap();
        assert_eq!(s.members(&SearchLimits::default()).0, BTreeSet::from([vec![i2()], vec![r()]]));
    }

    #[test]
    fn sums_and_block_products() {
        let d = SemiAlgSet::dsum(&[pt(&i2()), pt(&i2())]).unwrap();
        assert_eq!(d.free, vec![2, 2]);
        assert_eq!(d.probe(&[i2(), i2()], None), Probe::True);
        let b = SemiAlgSet::blocks_product(&pair(&r(), &r().transpose())).unwrap();
        assert_eq!(b.members(&SearchLimits::default()), (BTreeSet::from([vec![i2()]]), true));
        let three = SemiAlgSet::dsum(&[pt(&r()), pt(&r()), pt(&r())]).unwrap();
        let b = SemiAlgSet::blocks_product(&three).unwrap();
        assert_eq!(b.members(&SearchLimits::default()).0, BTreeSet::from([vec![r().pow(3)]]));
        assert!(SemiAlgSet::dsum(&[]).is_err());
    }

    #[test]
    fn renames() {
        let s = pt(&r());
        assert_eq!(s.rename(&EntryPermutation::identity(2), 0).unwrap(), s);
        let t = s.transpose_block(0).unwrap();
        assert_eq!(t.probe_matrix(&r().transpose()), Probe::True);
        assert_eq!(t.probe_matrix(&r()), Probe::False);
        assert_eq!(t.transpose_block(0).unwrap(), s);
    }

    #[test]
    fn shape_errors() {
        assert!(SemiAlgSet::product(&pt(&i2()), &pt(&QMatrix::identity(3))).is_err());
        assert!(SemiAlgSet::sandwich(&pt(&i2()), &pt(&i2())).is_err());
        assert!(pt(&i2()).rename(&EntryPermutation::identity(3), 0).is_err());
    }

    #[test]
    fn smt_literals() {
        assert_eq!(smt_rational(&int(3)), "3.0");
        assert_eq!(smt_rational(&-crate::arith::rat(3, 5)), "(- (/ 3.0 5.0))");
        let p = SymPoly::var(Var::new(0, 0, 0)).mul(&SymPoly::var(Var::new(0, 0, 0))).sub(&SymPoly::constant(int(1)));
        let s = SemiAlgSet::whole(&[1]);
        assert_eq!(Formula::eq(p.clone()).to_smt(&|v| s.var_name(v)), "(= (+ (- 1.0) (* X0_1_1 X0_1_1)) 0.0)");
        assert_eq!(p.display_with(&|v| s.var_name(v)), "X0_1_1^2 - 1");
    }

    #[test]
    fn formula_size_is_linear() {
        let mut s = pt(&r());
        let mut sizes = Vec::new();
        for _ in 0..4 {
            s = SemiAlgSet::product(&s, &pt(&r())).unwrap();
            sizes.push(s.body.size());
        }
        let steps: Vec<usize> = sizes.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&d| d == steps[0]), "{sizes:?}");
    }
}
