//! Buchberger's algorithm with the Gebauer–Möller pair criteria.
//!
//! Internally polynomials carry primitive integer coefficients, which keeps
//! coefficient growth far below what rational arithmetic would produce.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::poly::{deg, Exponents, Poly};
use crate::arith::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    /// Graded reverse lexicographic, `x_0 > x_1 > ...`.
    Grevlex,
    /// Pure lexicographic, `x_0 > x_1 > ...`.
    Lex,
    /// Block order: grevlex on the first `eliminated` variables, ties broken by grevlex on the rest.
    Elimination { eliminated: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResourceError {
    #[error("Gröbner basis grew past {0} elements")]
    BasisSize(usize),
    #[error("more than {0} critical pairs processed")]
    Pairs(usize),
    #[error("polynomial degree exceeded {0}")]
    Degree(u32),
    #[error("time budget exhausted")]
    Timeout,
    #[error("cancelled")]
    Cancelled,
}

/// Limits for a Gröbner computation. Exceeding any of them aborts with a
/// [`ResourceError`]; no partial basis is ever returned.
#[derive(Clone, Debug)]
pub struct Budget {
    pub max_basis: usize,
    pub max_pairs: usize,
    pub max_degree: u32,
    pub deadline: Option<Instant>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_basis: 5_000, max_pairs: 200_000, max_degree: 64, deadline: None, cancel: None }
    }
}

impl Budget {
    /// Fails if the deadline passed or cancellation was requested.
    pub fn check(&self) -> Result<(), ResourceError> {
        if let Some(c) = &self.cancel {
            if c.load(AtomicOrdering::Relaxed) {
                return Err(ResourceError::Cancelled);
            }
        }
        if let Some(d) = self.deadline {
            if Instant::now() > d {
                return Err(ResourceError::Timeout);
            }
        }
        Ok(())
    }
}

pub fn compare(order: MonomialOrder, a: &[u16], b: &[u16]) -> Ordering {
    match order {
        MonomialOrder::Lex => a.cmp(b),
        MonomialOrder::Grevlex => grevlex(a, b),
        MonomialOrder::Elimination { eliminated } => {
            let k = eliminated.min(a.len());
            grevlex(&a[..k], &b[..k]).then_with(|| grevlex(&a[k..], &b[k..]))
        }
    }
}

fn grevlex(a: &[u16], b: &[u16]) -> Ordering {
    deg(a).cmp(&deg(b)).then_with(|| {
        for i in (0..a.len()).rev() {
            if a[i] != b[i] {
                // smaller exponent in the last differing variable wins
                return b[i].cmp(&a[i]);
            }
        }
        Ordering::Equal
    })
}

fn divides(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u16], b: &[u16]) -> Exponents {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn coprime(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

/// Integer polynomial, terms sorted ascending so the leading term is last.
#[derive(Clone, Debug)]
struct IPoly {
    terms: Vec<(Exponents, BigInt)>,
}

impl IPoly {
    fn from_poly(p: &Poly, order: MonomialOrder) -> IPoly {
        let mut den = BigInt::one();
        for (_, c) in p.terms() {
            den = den.lcm(c.denom());
        }
        let mut terms: Vec<(Exponents, BigInt)> = p
            .terms()
            .map(|(e, c)| (e.clone(), c.numer() * (&den / c.denom())))
            .collect();
        terms.sort_by(|a, b| compare(order, &a.0, &b.0));
        let mut out = IPoly { terms };
        out.make_primitive();
        out
    }

    fn to_monic_poly(&self, nvars: usize) -> Poly {
        let lc = Rational::from_integer(self.lead_coeff().clone());
        Poly::from_terms(
            nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), Rational::from_integer(c.clone()) / &lc)),
        )
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lead(&self) -> &Exponents {
        &self.terms.last().unwrap().0
    }

    fn lead_coeff(&self) -> &BigInt {
        &self.terms.last().unwrap().1
    }

    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn make_primitive(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        let mut g = self.content();
        if self.lead_coeff().is_negative() {
            g = -g;
        }
        if !g.is_one() {
            for (_, c) in &mut self.terms {
                *c = &*c / &g;
            }
        }
    }
}

/// `a*f - b*(x^shift)*g`, all ascending.
fn combine(
    order: MonomialOrder,
    f: &[(Exponents, BigInt)],
    a: &BigInt,
    g: &[(Exponents, BigInt)],
    b: &BigInt,
    shift: &[u16],
) -> Vec<(Exponents, BigInt)> {
    let mut out = Vec::with_capacity(f.len() + g.len());
    let shifted = |t: &(Exponents, BigInt)| -> Exponents { t.0.iter().zip(shift).map(|(x, y)| x + y).collect() };
    let (mut i, mut j) = (0, 0);
    let mut gj: Option<Exponents> = g.first().map(&shifted);
    while i < f.len() || j < g.len() {
        let ord = match (&gj, f.get(i)) {
            (None, _) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(ge), Some(ft)) => compare(order, &ft.0, ge),
        };
        match ord {
            Ordering::Less => {
                out.push((f[i].0.clone(), a * &f[i].1));
                i += 1;
            }
            Ordering::Greater => {
                out.push((gj.take().unwrap(), -(b * &g[j].1)));
                j += 1;
                gj = g.get(j).map(&shifted);
            }
            Ordering::Equal => {
                let c = a * &f[i].1 - b * &g[j].1;
                if !c.is_zero() {
                    out.push((f[i].0.clone(), c));
                }
                i += 1;
                j += 1;
                gj = g.get(j).map(&shifted);
            }
        }
    }
    out
}

/// Full reduction of `f` by `basis`. Returns the remainder (primitive) and a
/// rational `scale` with `remainder = scale * (f - combination of basis)`.
fn reduce_full(
    order: MonomialOrder,
    f: &IPoly,
    basis: &[&IPoly],
    budget: &Budget,
) -> Result<(IPoly, Rational), ResourceError> {
    let mut work = f.terms.clone();
    let mut rem: Vec<(Exponents, BigInt)> = Vec::new(); // descending, reversed at end
    let mut scale = Rational::one();
    let mut steps = 0usize;
    while let Some((lead, lc)) = work.last().cloned() {
        let divisor = basis.iter().find(|g| divides(g.lead(), &lead));
        match divisor {
            Some(g) => {
                let shift: Exponents = lead.iter().zip(g.lead()).map(|(x, y)| x - y).collect();
                let gl = g.lead_coeff();
                let d = gl.gcd(&lc);
                let a = gl / &d;
                let b = &lc / &d;
                work = combine(order, &work, &a, &g.terms, &b, &shift);
                if !a.is_one() {
                    for (_, c) in &mut rem {
                        *c *= &a;
                    }
                    scale *= Rational::from_integer(a);
                }
                steps += 1;
                if steps % 32 == 0 {
                    budget.check()?;
                    let mut gc = BigInt::zero();
                    for (_, c) in work.iter().chain(rem.iter()) {
                        gc = gc.gcd(c);
                        if gc.is_one() {
                            break;
                        }
                    }
                    if !gc.is_zero() && !gc.is_one() {
                        for (_, c) in work.iter_mut().chain(rem.iter_mut()) {
                            *c = &*c / &gc;
                        }
                        scale /= Rational::from_integer(gc);
                    }
                }
            }
            None => {
                rem.push(work.pop().unwrap());
            }
        }
    }
    rem.reverse();
    let mut out = IPoly { terms: rem };
    if !out.is_zero() {
        let mut g = out.content();
        if out.lead_coeff().is_negative() {
            g = -g;
        }
        for (_, c) in &mut out.terms {
            *c = &*c / &g;
        }
        scale /= Rational::from_integer(g);
    }
    Ok((out, scale))
}

fn spoly(order: MonomialOrder, f: &IPoly, g: &IPoly) -> IPoly {
    let l = lcm(f.lead(), g.lead());
    let sf: Exponents = l.iter().zip(f.lead()).map(|(x, y)| x - y).collect();
    let sg: Exponents = l.iter().zip(g.lead()).map(|(x, y)| x - y).collect();
    let d = f.lead_coeff().gcd(g.lead_coeff());
    let a = g.lead_coeff() / &d;
    let b = f.lead_coeff() / &d;
    // a * x^sf * f - b * x^sg * g
    let fs: Vec<_> = f.terms.iter().map(|(e, c)| (e.iter().zip(&sf).map(|(x, y)| x + y).collect(), c.clone())).collect();
    let mut terms = combine(order, &fs, &a, &g.terms, &b, &sg);
    // the leading terms cancel by construction
    debug_assert!(terms.last().map_or(true, |t| compare(order, &t.0, &l) == Ordering::Less));
    terms.retain(|t| !t.1.is_zero());
    let mut p = IPoly { terms };
    p.make_primitive();
    p
}

#[derive(Clone, Debug)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Exponents,
}

/// Reduced Gröbner basis, each element monic, sorted by descending leading monomial.
pub fn groebner(gens: &[Poly], order: MonomialOrder, budget: &Budget) -> Result<Vec<Poly>, ResourceError> {
    let nvars = match gens.first() {
        Some(p) => p.nvars(),
        None => return Ok(Vec::new()),
    };
    let mut polys: Vec<IPoly> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    // key (lcm degree, sequence) keeps selection deterministic
    let mut pairs: BTreeMap<(u32, u64), Pair> = BTreeMap::new();
    let mut seq: u64 = 0;
    let mut processed = 0usize;

    let mut inputs: Vec<IPoly> = gens
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| IPoly::from_poly(p, order))
        .collect();
    inputs.sort_by(|a, b| compare(order, a.lead(), b.lead()));

    for f in inputs {
        let basis: Vec<&IPoly> = active.iter().map(|&k| &polys[k]).collect();
        let (h, _) = reduce_full(order, &f, &basis, budget)?;
        if h.is_zero() {
            continue;
        }
        update(&mut polys, &mut active, &mut pairs, &mut seq, h, budget)?;
    }

    while let Some((&key, _)) = pairs.iter().next() {
        let pair = pairs.remove(&key).unwrap();
        processed += 1;
        if processed > budget.max_pairs {
            return Err(ResourceError::Pairs(budget.max_pairs));
        }
        budget.check()?;
        let s = spoly(order, &polys[pair.i], &polys[pair.j]);
        if s.is_zero() {
            continue;
        }
        let basis: Vec<&IPoly> = active.iter().map(|&k| &polys[k]).collect();
        let (h, _) = reduce_full(order, &s, &basis, budget)?;
        if h.is_zero() {
            continue;
        }
        update(&mut polys, &mut active, &mut pairs, &mut seq, h, budget)?;
    }

    // interreduce
    let mut g: Vec<IPoly> = active.iter().map(|&k| polys[k].clone()).collect();
    g.sort_by(|a, b| compare(order, a.lead(), b.lead()));
    let mut reduced = Vec::with_capacity(g.len());
    for idx in 0..g.len() {
        let others: Vec<&IPoly> = g.iter().enumerate().filter(|(k, _)| *k != idx).map(|(_, p)| p).collect();
        let (h, _) = reduce_full(order, &g[idx], &others, budget)?;
        debug_assert!(!h.is_zero());
        reduced.push(h);
    }
    reduced.sort_by(|a, b| compare(order, b.lead(), a.lead()));
    Ok(reduced.iter().map(|p| p.to_monic_poly(nvars)).collect())
}

fn update(
    polys: &mut Vec<IPoly>,
    active: &mut Vec<usize>,
    pairs: &mut BTreeMap<(u32, u64), Pair>,
    seq: &mut u64,
    h: IPoly,
    budget: &Budget,
) -> Result<(), ResourceError> {
    if h.terms.iter().any(|t| deg(&t.0) > budget.max_degree) {
        return Err(ResourceError::Degree(budget.max_degree));
    }
    let hi = polys.len();
    let hl = h.lead().clone();
    polys.push(h);

    // candidate new pairs (h, g)
    let mut cands: std::collections::VecDeque<(usize, Exponents)> =
        active.iter().map(|&g| (g, lcm(&hl, polys[g].lead()))).collect();
    let mut kept: Vec<(usize, Exponents)> = Vec::new();
    while let Some((g, l)) = cands.pop_front() {
        let dominated = cands.iter().chain(kept.iter()).any(|(_, l2)| divides(l2, &l));
        if coprime(&hl, polys[g].lead()) || !dominated {
            kept.push((g, l));
        }
    }
    let new_pairs: Vec<(usize, Exponents)> =
        kept.into_iter().filter(|(g, _)| !coprime(&hl, polys[*g].lead())).collect();

    // drop old pairs made redundant by h
    pairs.retain(|_, p| {
        let li = lcm(polys[p.i].lead(), &hl);
        let lj = lcm(polys[p.j].lead(), &hl);
        !(divides(&hl, &p.lcm) && li != p.lcm && lj != p.lcm)
    });
    for (g, l) in new_pairs {
        *seq += 1;
        pairs.insert((deg(&l), *seq), Pair { i: g, j: hi, lcm: l });
    }
    active.retain(|&g| !divides(&hl, polys[g].lead()));
    active.push(hi);
    if active.len() > budget.max_basis {
        return Err(ResourceError::BasisSize(budget.max_basis));
    }
    Ok(())
}

/// Leading exponent vector under `order`.
pub fn leading_monomial(p: &Poly, order: MonomialOrder) -> Option<Exponents> {
    p.terms().map(|(e, _)| e).max_by(|a, b| compare(order, a, b)).cloned()
}

/// Exact normal form of `p` modulo a Gröbner basis computed under `order`.
pub fn normal_form(p: &Poly, basis: &[Poly], order: MonomialOrder) -> Poly {
    if p.is_zero() {
        return p.clone();
    }
    let ib: Vec<IPoly> = basis.iter().map(|b| IPoly::from_poly(b, order)).collect();
    let refs: Vec<&IPoly> = ib.iter().collect();
    let ip = IPoly::from_poly(p, order);
    // IPoly::from_poly made p primitive: recover that factor
    let first = p.terms().next().map(|(e, c)| (e.clone(), c.clone())).unwrap();
    let icoef = ip.terms.iter().find(|t| t.0 == first.0).unwrap().1.clone();
    let pscale = Rational::from_integer(icoef) / first.1;
    let (r, scale) = reduce_full(order, &ip, &refs, &Budget::default()).expect("unbounded reduction");
    let factor = Rational::one() / (scale * pscale);
    Poly::from_terms(
        p.nvars(),
        r.terms.iter().map(|(e, c)| (e.clone(), Rational::from_integer(c.clone()) * &factor)),
    )
}

/// Dimension of `Q[x]/I` as a vector space, if finite, from a grevlex/any Gröbner basis.
/// Returns `None` for positive-dimensional ideals or when the count exceeds `limit`.
pub fn quotient_dimension(basis: &[Poly], order: MonomialOrder, limit: usize) -> Option<usize> {
    let nvars = basis.first()?.nvars();
    let leads: Vec<Exponents> = basis.iter().filter_map(|p| leading_monomial(p, order)).collect();
    if leads.iter().any(|l| l.iter().all(|&x| x == 0)) {
        return Some(0);
    }
    let mut bound = vec![u16::MAX; nvars];
    for l in &leads {
        let nz: Vec<usize> = (0..nvars).filter(|&i| l[i] > 0).collect();
        if nz.len() == 1 {
            let i = nz[0];
            bound[i] = bound[i].min(l[i]);
        }
    }
    if bound.iter().any(|&b| b == u16::MAX) {
        return None;
    }
    let mut count = 0usize;
    let mut cur = vec![0u16; nvars];
    fn walk(i: usize, cur: &mut Vec<u16>, bound: &[u16], leads: &[Exponents], count: &mut usize, limit: usize) -> bool {
        if leads.iter().any(|l| divides(l, cur)) {
            return true;
        }
        if i == cur.len() {
            *count += 1;
            return *count <= limit;
        }
        for x in 0..bound[i] {
            cur[i] = x;
            if leads.iter().any(|l| divides(l, cur)) {
                break;
            }
            if !walk(i + 1, cur, bound, leads, count, limit) {
                cur[i] = 0;
                return false;
            }
        }
        cur[i] = 0;
        true
    }
    if walk(0, &mut cur, &bound, &leads, &mut count, limit) {
        Some(count)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zariski::poly::parse_poly;

    fn p(s: &str) -> Poly {
        parse_poly(s, &["x", "y", "z"]).unwrap()
    }

    #[test]
    fn single_generator() {
        let b = groebner(&[p("x")], MonomialOrder::Grevlex, &Budget::default()).unwrap();
        assert_eq!(b, vec![p("x")]);
    }

    #[test]
    fn linear_pair_under_lex() {
        let b = groebner(&[p("x+y"), p("x-y")], MonomialOrder::Lex, &Budget::default()).unwrap();
        assert_eq!(b, vec![p("x"), p("y")]);
    }

    #[test]
    fn common_factor() {
        let b = groebner(&[p("x^2-1"), p("x-1")], MonomialOrder::Grevlex, &Budget::default()).unwrap();
        assert_eq!(b, vec![p("x-1")]);
    }

    #[test]
    fn twisted_cubic_elimination() {
        // x = t, y = t^2, z = t^3 implicitized with t as an extra first variable
        let names = ["t", "x", "y", "z"];
        let q = |s: &str| parse_poly(s, &names).unwrap();
        let gens = vec![q("x - t"), q("y - t^2"), q("z - t^3")];
        let b = groebner(&gens, MonomialOrder::Elimination { eliminated: 1 }, &Budget::default()).unwrap();
        let free: Vec<_> = b.into_iter().filter(|g| g.terms().all(|(e, _)| e[0] == 0)).collect();
        let expected = groebner(&[q("y - x^2"), q("z - x*y"), q("x*z - y^2")], MonomialOrder::Elimination { eliminated: 1 }, &Budget::default()).unwrap();
        assert_eq!(free, expected);
    }

    #[test]
    fn normal_forms() {
        let b = groebner(&[p("x^2 + y^2 - 1")], MonomialOrder::Grevlex, &Budget::default()).unwrap();
        let nf = normal_form(&p("x^2"), &b, MonomialOrder::Grevlex);
        assert_eq!(nf, p("1 - y^2"));
        assert!(normal_form(&p("3*x^2 + 3*y^2 - 3"), &b, MonomialOrder::Grevlex).is_zero());
    }

    #[test]
    fn quotient_dims() {
        let b = groebner(&[p("x^2-1"), p("y-x"), p("z")], MonomialOrder::Grevlex, &Budget::default()).unwrap();
        assert_eq!(quotient_dimension(&b, MonomialOrder::Grevlex, 100), Some(2));
        let b = groebner(&[p("x^2+y^2-1"), p("z")], MonomialOrder::Grevlex, &Budget::default()).unwrap();
        assert_eq!(quotient_dimension(&b, MonomialOrder::Grevlex, 100), None);
    }

    #[test]
    fn budget_is_enforced() {
        let budget = Budget { max_pairs: 0, ..Budget::default() };
        let r = groebner(&[p("x^2 - y"), p("x*y - z"), p("y^2 - x*z")], MonomialOrder::Lex, &budget);
        assert_eq!(r, Err(ResourceError::Pairs(0)));
    }
}
