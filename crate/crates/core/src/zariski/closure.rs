//! Zariski closure of a finitely generated group of orthogonal block tuples.
//!
//! The closure of `<E>` is cut out by the polynomials `p` with `p(I) = 0`
//! and `p(eX) = p(X)` for every generator `e`. Left translation preserves
//! total degree and, because `e` acts on each column separately, also the
//! degree in each column; the invariant space is therefore computed as a
//! nullspace per column multidegree, degree by degree.

use std::collections::{BTreeMap, HashSet};

use num_traits::Zero;
use serde::Serialize;

use super::groebner::{normal_form, Budget, MonomialOrder, ResourceError};
use super::ideal::{homogeneous_monomials, shape_vars, var_index, PolyIdeal};
use super::poly::{Exponents, Poly};
use crate::arith::{BlockMatrix, QMatrix, Rational};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct ClosureConfig {
    pub degree_cap: u32,
    /// Largest group enumerated element by element.
    pub finite_cap: usize,
    pub budget: Budget,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        Self { degree_cap: 4, finite_cap: 10_000, budget: Budget::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// No nontrivial generator: the closure is the identity point.
    Trivial,
    /// Finite group; the quotient ring has exactly one dimension per element.
    FiniteGroup { order: usize, degree: u32 },
    /// The ideal did not change between two consecutive degrees.
    Stabilized { degree: u32 },
    /// Degree cap hit without a certificate; the variety may be too large.
    UpperApproximation { cap: u32 },
}

impl Certificate {
    pub fn certified(&self) -> bool {
        !matches!(self, Certificate::UpperApproximation { .. })
    }
}

#[derive(Clone, Debug)]
pub struct GroupClosure {
    pub ideal: PolyIdeal,
    pub certificate: Certificate,
    /// Every basis element `p` satisfies `p(eX) = 0` modulo the ideal.
    pub translation_invariant: bool,
    /// All group elements when the group is finite and was enumerated.
    pub elements: Option<Vec<BlockMatrix>>,
}

impl GroupClosure {
    pub fn certified(&self) -> bool {
        self.certificate.certified() && self.translation_invariant
    }
}

/// Largest order of a finite-order element of `GL_d(Q)`.
pub fn max_finite_order(d: usize) -> u64 {
    fn totient(m: u64) -> u64 {
        let mut result = m;
        let mut n = m;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                while n % p == 0 {
                    n /= p;
                }
                result -= result / p;
            }
            p += 1;
        }
        if n > 1 {
            result -= result / n;
        }
        result
    }
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    // orders m > 2 need phi(m) <= d; 1 and 2 fit in one dimension
    let cands: Vec<(u64, u64)> = (1..=(4 * d as u64 * d as u64 + 8))
        .map(|m| (m, if m <= 2 { 1 } else { totient(m) }))
        .filter(|&(_, f)| f <= d as u64)
        .collect();
    fn best(cands: &[(u64, u64)], k: usize, left: u64, acc: u64) -> u64 {
        if k == cands.len() {
            return acc;
        }
        let mut b = best(cands, k + 1, left, acc);
        let (m, f) = cands[k];
        if f <= left {
            let l = acc / gcd(acc, m) * m;
            b = b.max(best(cands, k + 1, left - f, l));
        }
        b
    }
    best(&cands, 0, d as u64, 1)
}

/// Order of the matrix if it is finite.
pub fn matrix_order(m: &QMatrix) -> Option<u64> {
    let bound = max_finite_order(m.dim());
    let mut p = m.clone();
    for k in 1..=bound {
        if p.is_identity() {
            return Some(k);
        }
        p = &p * m;
    }
    None
}

pub fn tuple_has_finite_order(t: &BlockMatrix) -> bool {
    t.blocks().iter().all(|b| matrix_order(b).is_some())
}

/// Breadth-first enumeration of the generated group. `None` when some
/// element has infinite order or the group exceeds `cap` elements.
pub fn enumerate_group(shape: &[usize], gens: &[BlockMatrix], cap: usize) -> Option<Vec<BlockMatrix>> {
    if !gens.iter().all(tuple_has_finite_order) {
        return None;
    }
    let id = BlockMatrix::identity(shape);
    let mut seen: HashSet<BlockMatrix> = HashSet::new();
    let mut order = vec![id.clone()];
    seen.insert(id);
    let mut k = 0;
    while k < order.len() {
        let x = order[k].clone();
        k += 1;
        for g in gens {
            let y = &x * g;
            if !seen.contains(&y) {
                if !tuple_has_finite_order(&y) {
                    return None;
                }
                seen.insert(y.clone());
                order.push(y);
                if order.len() > cap {
                    return None;
                }
            }
        }
    }
    Some(order)
}

/// Polynomial `p(eX)` for a block-diagonal `e` acting on the left.
pub fn translate(p: &Poly, shape: &[usize], e: &BlockMatrix) -> Poly {
    let n = shape_vars(shape);
    let mut images = vec![Poly::zero(n); n];
    for (b, &d) in shape.iter().enumerate() {
        let eb = &e.blocks()[b];
        for i in 0..d {
            for j in 0..d {
                let mut img = Poly::zero(n);
                for t in 0..d {
                    let c = eb.get(i, t);
                    if !c.is_zero() {
                        img = img.add(&Poly::var(n, var_index(shape, b, t, j)).scale(c));
                    }
                }
                images[var_index(shape, b, i, j)] = img;
            }
        }
    }
    p.compose(&images)
}

fn monomial_poly(n: usize, e: &Exponents) -> Poly {
    Poly::from_terms(n, [(e.clone(), Rational::from_integer(1.into()))])
}

/// Homogeneous degree-`d` invariants of the left action, over the active variables.
fn invariants(shape: &[usize], active: &[usize], gens: &[BlockMatrix], d: u32) -> Vec<Poly> {
    let n = shape_vars(shape);
    let mut vars = Vec::new();
    let mut column_of = vec![usize::MAX; n];
    let mut ncols = 0;
    for &b in active {
        for j in 0..shape[b] {
            for i in 0..shape[b] {
                let v = var_index(shape, b, i, j);
                vars.push(v);
                column_of[v] = ncols;
            }
            ncols += 1;
        }
    }
    vars.sort_unstable();
    let monos = homogeneous_monomials(&vars, n, d);
    let mut buckets: BTreeMap<Vec<u32>, Vec<Exponents>> = BTreeMap::new();
    for m in monos {
        let mut key = vec![0u32; ncols];
        for &v in &vars {
            key[column_of[v]] += m[v] as u32;
        }
        buckets.entry(key).or_default().push(m);
    }
    let mut out = Vec::new();
    for (_, ms) in buckets {
        let index: BTreeMap<&Exponents, usize> = ms.iter().enumerate().map(|(k, m)| (m, k)).collect();
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for e in gens {
            let mut block = vec![vec![Rational::zero(); ms.len()]; ms.len()];
            for (col, m) in ms.iter().enumerate() {
                let img = translate(&monomial_poly(n, m), shape, e);
                for (t, c) in img.terms() {
                    let row = index[t];
                    block[row][col] += c;
                }
                block[col][col] -= Rational::from_integer(1.into());
            }
            rows.extend(block);
        }
        for v in linalg::nullspace(&rows, ms.len()) {
            out.push(Poly::from_terms(n, ms.iter().cloned().zip(v)));
        }
    }
    out
}

/// Closure of the group generated by `gens` (tuples of the given shape).
pub fn group_closure(shape: &[usize], gens: &[BlockMatrix], cfg: &ClosureConfig) -> Result<GroupClosure, ResourceError> {
    let n = shape_vars(shape);
    let mut gens: Vec<BlockMatrix> = gens.iter().filter(|g| !g.is_identity()).cloned().collect();
    gens.dedup();
    let id = BlockMatrix::identity(shape);
    if gens.is_empty() {
        return Ok(GroupClosure {
            ideal: PolyIdeal::point(&id),
            certificate: Certificate::Trivial,
            translation_invariant: true,
            elements: Some(vec![id]),
        });
    }
    let active: Vec<usize> = (0..shape.len()).filter(|&b| gens.iter().any(|g| !g.blocks()[b].is_identity())).collect();
    let id_flat = id.flat_entries();
    let mut generators: Vec<Poly> = Vec::new();
    for (b, &d) in shape.iter().enumerate() {
        if active.contains(&b) {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                let v = var_index(shape, b, i, j);
                generators.push(Poly::var(n, v).sub(&Poly::constant(n, id_flat[v].clone())));
            }
        }
    }
    let elements = enumerate_group(shape, &gens, cfg.finite_cap);
    if let Some(els) = &elements {
        // a finite group is its own closure
        let ideal = PolyIdeal::vanishing(els, &cfg.budget)?;
        let basis = ideal.basis_with(&cfg.budget)?;
        let degree = basis.iter().map(Poly::total_degree).max().unwrap_or(1);
        let translation_invariant = basis.iter().all(|p| {
            gens.iter().all(|e| normal_form(&translate(p, shape, e), basis, MonomialOrder::Grevlex).is_zero())
        });
        let certificate = Certificate::FiniteGroup { order: els.len(), degree };
        return Ok(GroupClosure { ideal, certificate, translation_invariant, elements });
    }
    let mut previous: Option<Vec<Poly>> = None;
    let mut certificate = Certificate::UpperApproximation { cap: cfg.degree_cap };
    let mut ideal = PolyIdeal::for_shape(shape, generators.clone());
    for d in 1..=cfg.degree_cap {
        cfg.budget.check()?;
        for q in invariants(shape, &active, &gens, d) {
            let c = q.eval(&id_flat);
            generators.push(q.sub(&Poly::constant(n, c)));
        }
        ideal = PolyIdeal::for_shape(shape, generators.clone());
        let basis = ideal.basis_with(&cfg.budget)?.to_vec();
        if d >= 3 && previous.as_ref() == Some(&basis) {
            certificate = Certificate::Stabilized { degree: d };
            break;
        }
        previous = Some(basis);
    }
    let basis = ideal.basis_with(&cfg.budget)?;
    let translation_invariant = basis.iter().all(|p| {
        gens.iter().all(|e| normal_form(&translate(p, shape, e), basis, MonomialOrder::Grevlex).is_zero())
    });
    Ok(GroupClosure { ideal, certificate, translation_invariant, elements })
}
