//! Polynomial ideals in matrix-entry variables and the operations the
//! closure constructions need: equality, membership, intersection,
//! Cartesian products and implicitization of polynomial images.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_traits::{One, Zero};

use super::groebner::{groebner, leading_monomial, normal_form, quotient_dimension, Budget, MonomialOrder, ResourceError};
use super::poly::{Exponents, Poly};
use crate::arith::{BlockMatrix, QMatrix, Rational};
use crate::linalg;

/// An ideal of `Q[x]`. When `shape` is nonempty the variables are the
/// entries of a tuple of square matrices, block after block, row-major.
#[derive(Debug)]
pub struct PolyIdeal {
    nvars: usize,
    shape: Vec<usize>,
    gens: Vec<Poly>,
    basis: OnceLock<Vec<Poly>>,
}

impl Clone for PolyIdeal {
    fn clone(&self) -> Self {
        let basis = OnceLock::new();
        if let Some(b) = self.basis.get() {
            let _ = basis.set(b.clone());
        }
        Self { nvars: self.nvars, shape: self.shape.clone(), gens: self.gens.clone(), basis }
    }
}

pub fn shape_vars(shape: &[usize]) -> usize {
    shape.iter().map(|d| d * d).sum()
}

/// Index of entry `(row, col)` of block `block` in a tuple-shaped variable space.
pub fn var_index(shape: &[usize], block: usize, row: usize, col: usize) -> usize {
    let off: usize = shape[..block].iter().map(|d| d * d).sum();
    off + row * shape[block] + col
}

/// Variable names: `x_i_j` for one block, `x{b}_i_j` for several (1-based), `v{k}` otherwise.
pub fn var_names(nvars: usize, shape: &[usize]) -> Vec<String> {
    if shape.is_empty() {
        return (0..nvars).map(|i| format!("v{i}")).collect();
    }
    let mut names = Vec::with_capacity(nvars);
    for (b, &d) in shape.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                if shape.len() == 1 {
                    names.push(format!("x_{}_{}", i + 1, j + 1));
                } else {
                    names.push(format!("x{}_{}_{}", b + 1, i + 1, j + 1));
                }
            }
        }
    }
    names
}

impl PolyIdeal {
    /// Ideal in `nvars` untyped variables.
    pub fn new(nvars: usize, gens: Vec<Poly>) -> Self {
        assert!(gens.iter().all(|g| g.nvars() == nvars), "generator ring mismatch");
        Self { nvars, shape: Vec::new(), gens, basis: OnceLock::new() }
    }

    /// Ideal over the entries of a tuple of square matrices.
    pub fn for_shape(shape: &[usize], gens: Vec<Poly>) -> Self {
        let nvars = shape_vars(shape);
        assert!(gens.iter().all(|g| g.nvars() == nvars), "generator ring mismatch");
        Self { nvars, shape: shape.to_vec(), gens, basis: OnceLock::new() }
    }

    /// The zero ideal: every tuple.
    pub fn whole_space(shape: &[usize]) -> Self {
        Self::for_shape(shape, Vec::new())
    }

    /// The unit ideal: no tuple.
    pub fn empty_set(shape: &[usize]) -> Self {
        let n = shape_vars(shape);
        Self::for_shape(shape, vec![Poly::one(n)])
    }

    /// Ideal of a single tuple.
    pub fn point(value: &BlockMatrix) -> Self {
        let shape = value.shape();
        let n = shape_vars(&shape);
        let gens = value
            .flat_entries()
            .into_iter()
            .enumerate()
            .map(|(k, v)| Poly::var(n, k).sub(&Poly::constant(n, v)))
            .collect();
        Self::for_shape(&shape, gens)
    }

    pub fn point_matrix(m: &QMatrix) -> Self {
        Self::point(&BlockMatrix::new(vec![m.clone()]))
    }

    pub fn identity_point(shape: &[usize]) -> Self {
        Self::point(&BlockMatrix::identity(shape))
    }

    /// Vanishing ideal of a finite nonempty set of tuples, found by
    /// interpolation degree by degree until the quotient has one dimension per point.
    pub fn vanishing(points: &[BlockMatrix], budget: &Budget) -> Result<Self, ResourceError> {
        let shape = points.first().expect("nonempty point set").shape();
        let mut distinct: Vec<BlockMatrix> = points.to_vec();
        distinct.sort();
        distinct.dedup();
        let n = shape_vars(&shape);
        let values: Vec<Vec<Rational>> = distinct.iter().map(BlockMatrix::flat_entries).collect();
        let mut d = 1u32;
        loop {
            let monos = monomials_up_to(n, d);
            let rows: Vec<Vec<Rational>> = values
                .iter()
                .map(|pt| monos.iter().map(|m| eval_mono(m, pt)).collect())
                .collect();
            let kernel = linalg::nullspace(&rows, monos.len());
            let gens: Vec<Poly> = kernel
                .into_iter()
                .map(|v| Poly::from_terms(n, monos.iter().cloned().zip(v)))
                .collect();
            let ideal = Self::for_shape(&shape, gens);
            let qd = quotient_dimension(ideal.basis_with(budget)?, MonomialOrder::Grevlex, distinct.len() + 1);
            if qd == Some(distinct.len()) {
                return Ok(ideal);
            }
            d += 1;
            if d > budget.max_degree {
                return Err(ResourceError::Degree(budget.max_degree));
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn generators(&self) -> &[Poly] {
        &self.gens
    }

    pub fn names(&self) -> Vec<String> {
        var_names(self.nvars, &self.shape)
    }

    /// Reduced grevlex basis under the default budget.
    pub fn basis(&self) -> Result<&[Poly], ResourceError> {
        self.basis_with(&Budget::default())
    }

    pub fn basis_with(&self, budget: &Budget) -> Result<&[Poly], ResourceError> {
        if let Some(b) = self.basis.get() {
            return Ok(b);
        }
        let b = groebner(&self.gens, MonomialOrder::Grevlex, budget)?;
        Ok(self.basis.get_or_init(|| b))
    }

    /// Exact test: every generator vanishes at the point.
    pub fn contains_point(&self, point: &[Rational]) -> bool {
        self.gens.iter().all(|g| g.eval(point).is_zero())
    }

    pub fn contains_tuple(&self, value: &BlockMatrix) -> bool {
        self.contains_point(&value.flat_entries())
    }

    pub fn contains_matrix(&self, m: &QMatrix) -> bool {
        self.contains_point(m.entries())
    }

    /// Ideal membership of a polynomial.
    pub fn contains_poly(&self, p: &Poly, budget: &Budget) -> Result<bool, ResourceError> {
        Ok(normal_form(p, self.basis_with(budget)?, MonomialOrder::Grevlex).is_zero())
    }

    pub fn is_unit(&self, budget: &Budget) -> Result<bool, ResourceError> {
        Ok(self.basis_with(budget)?.iter().any(|p| p.as_constant().is_some_and(|c| !c.is_zero())))
    }

    /// Same generators viewed in another variable space of equal size.
    pub fn with_shape(&self, shape: &[usize]) -> Self {
        assert_eq!(shape_vars(shape), self.nvars);
        let mut out = self.clone();
        out.shape = shape.to_vec();
        out
    }

    /// Canonical text: the reduced basis, one polynomial per line.
    pub fn dump(&self, budget: &Budget) -> Result<String, ResourceError> {
        let names = self.names();
        let mut lines: Vec<String> = self.basis_with(budget)?.iter().map(|p| p.display_with(&names)).collect();
        if lines.is_empty() {
            lines.push("0".into());
        }
        Ok(lines.join("\n") + "\n")
    }

    /// Applies a bijection of variables given by `map[old] = new`.
    pub fn permute_vars(&self, map: &[usize]) -> Self {
        let gens = self.gens.iter().map(|g| g.remap(self.nvars, map)).collect();
        let mut out = Self::for_shape(&self.shape, gens);
        out.shape = self.shape.clone();
        out
    }
}

fn monomials_up_to(nvars: usize, d: u32) -> Vec<Exponents> {
    let mut out = Vec::new();
    for k in 0..=d {
        out.extend(homogeneous_monomials(&(0..nvars).collect::<Vec<_>>(), nvars, k));
    }
    out
}

/// All monomials of total degree `d` in the listed variables.
pub(crate) fn homogeneous_monomials(vars: &[usize], nvars: usize, d: u32) -> Vec<Exponents> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; nvars];
    fn rec(vars: &[usize], k: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Exponents>) {
        if k + 1 == vars.len() {
            cur[vars[k]] = left as u16;
            out.push(cur.clone());
            cur[vars[k]] = 0;
            return;
        }
        for x in (0..=left).rev() {
            cur[vars[k]] = x as u16;
            rec(vars, k + 1, left - x, cur, out);
        }
        cur[vars[k]] = 0;
    }
    if vars.is_empty() {
        if d == 0 {
            out.push(cur);
        }
        return out;
    }
    rec(vars, 0, d, &mut cur, &mut out);
    out
}

fn eval_mono(e: &[u16], pt: &[Rational]) -> Rational {
    let mut t = Rational::one();
    for (i, &x) in e.iter().enumerate() {
        if x > 0 {
            t *= num_traits::pow(pt[i].clone(), x as usize);
        }
    }
    t
}

/// True iff the two ideals have the same reduced grevlex basis.
pub fn ideal_equal(a: &PolyIdeal, b: &PolyIdeal, budget: &Budget) -> Result<bool, ResourceError> {
    assert_eq!(a.nvars, b.nvars, "ideals live in different rings");
    Ok(a.basis_with(budget)? == b.basis_with(budget)?)
}

/// Ideal of the union of the two varieties (intersection of ideals).
pub fn intersect(a: &PolyIdeal, b: &PolyIdeal, budget: &Budget) -> Result<PolyIdeal, ResourceError> {
    assert_eq!(a.nvars, b.nvars);
    let n = a.nvars;
    let lift: Vec<usize> = (1..=n).collect();
    let t = Poly::var(n + 1, 0);
    let one_minus_t = Poly::one(n + 1).sub(&t);
    let mut gens = Vec::new();
    for g in a.basis_with(budget)? {
        gens.push(t.mul(&g.remap(n + 1, &lift)));
    }
    for g in b.basis_with(budget)? {
        gens.push(one_minus_t.mul(&g.remap(n + 1, &lift)));
    }
    let gb = groebner(&gens, MonomialOrder::Elimination { eliminated: 1 }, budget)?;
    let kept = drop_leading_vars(gb, 1, n);
    let mut out = PolyIdeal::for_shape(&a.shape, kept);
    out.nvars = n;
    Ok(out)
}

/// Ideal of the Cartesian product: the shapes are concatenated.
pub fn tensor(a: &PolyIdeal, b: &PolyIdeal, budget: &Budget) -> Result<PolyIdeal, ResourceError> {
    let n = a.nvars + b.nvars;
    let left: Vec<usize> = (0..a.nvars).collect();
    let right: Vec<usize> = (a.nvars..n).collect();
    let mut gens: Vec<Poly> = a.basis_with(budget)?.iter().map(|g| g.remap(n, &left)).collect();
    gens.extend(b.basis_with(budget)?.iter().map(|g| g.remap(n, &right)));
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    Ok(PolyIdeal { nvars: n, shape, gens, basis: OnceLock::new() })
}

/// Keeps basis elements free of the first `k` variables and reindexes the rest.
fn drop_leading_vars(gb: Vec<Poly>, k: usize, n: usize) -> Vec<Poly> {
    gb.into_iter()
        .filter(|g| g.terms().all(|(e, _)| e[..k].iter().all(|&x| x == 0)))
        .map(|g| Poly::from_terms(n, g.terms().map(|(e, c)| (e[k..].to_vec(), c.clone()))))
        .collect()
}

/// Zariski closure of the image of `V(source)` under the polynomial map
/// `psi` (one polynomial in the source variables per target variable).
pub fn image_closure(
    source: &PolyIdeal,
    psi: &[Poly],
    target_shape: &[usize],
    budget: &Budget,
) -> Result<PolyIdeal, ResourceError> {
    let m = shape_vars(target_shape);
    assert_eq!(psi.len(), m, "map must give one polynomial per target variable");
    let n = source.nvars;
    let basis = source.basis_with(budget)?;
    if basis.iter().any(|p| p.as_constant().is_some_and(|c| !c.is_zero())) {
        return Ok(PolyIdeal::empty_set(target_shape));
    }
    if let Some(dim) = quotient_dimension(basis, MonomialOrder::Grevlex, ZERO_DIM_LIMIT) {
        return Ok(PolyIdeal::for_shape(target_shape, quotient_kernel(basis, psi, m, dim, budget)?));
    }
    // substitute coordinates the source fixes to constants
    let mut fixed: Vec<Option<Rational>> = vec![None; n];
    for p in basis {
        if let Some((k, c)) = as_fixed_coordinate(p) {
            fixed[k] = Some(c);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&k| fixed[k].is_none()).collect();
    let r = free.len();
    let total = r + m;
    let mut sub: Vec<Poly> = Vec::with_capacity(n);
    for k in 0..n {
        match &fixed[k] {
            Some(c) => sub.push(Poly::constant(total, c.clone())),
            None => {
                let pos = free.iter().position(|&f| f == k).unwrap();
                sub.push(Poly::var(total, pos));
            }
        }
    }
    let mut gens: Vec<Poly> = Vec::new();
    for p in basis {
        let q = p.compose(&sub);
        if !q.is_zero() {
            gens.push(q);
        }
    }
    for (j, f) in psi.iter().enumerate() {
        assert_eq!(f.nvars(), n, "map polynomial ring mismatch");
        gens.push(Poly::var(total, r + j).sub(&f.compose(&sub)));
    }
    let gb = groebner(&gens, MonomialOrder::Elimination { eliminated: r }, budget)?;
    let kept = drop_leading_vars(gb, r, m);
    Ok(PolyIdeal::for_shape(target_shape, kept))
}

/// Largest quotient handled by linear algebra instead of elimination.
const ZERO_DIM_LIMIT: usize = 4096;

type SparseVec = BTreeMap<Exponents, Rational>;

fn axpy(v: &mut SparseVec, f: &Rational, w: &SparseVec) {
    for (k, c) in w {
        let e = v.entry(k.clone()).or_insert_with(Rational::zero);
        *e -= f * c;
        if e.is_zero() {
            v.remove(k);
        }
    }
}

/// Kernel of `Q[y] -> Q[x]/I`, `y_j -> psi_j`, for zero-dimensional `I`
/// with Gröbner basis `basis`. Monomials in `y` are visited by degree;
/// each is either independent in the quotient or yields a kernel element.
fn quotient_kernel(basis: &[Poly], psi: &[Poly], m: usize, dim: usize, budget: &Budget) -> Result<Vec<Poly>, ResourceError> {
    let order = MonomialOrder::Grevlex;
    let n = basis[0].nvars();
    let to_vec = |p: &Poly| -> SparseVec { p.terms().map(|(e, c)| (e.clone(), c.clone())).collect() };
    let images: Vec<Poly> = psi.iter().map(|f| normal_form(f, basis, order)).collect();
    // reduced rows: (vector, pivot, preimage in y)
    let mut rows: Vec<(SparseVec, Exponents, SparseVec)> = Vec::new();
    let mut standard: BTreeMap<Exponents, Poly> = BTreeMap::new();
    let mut leads: Vec<Exponents> = Vec::new();
    let mut kernel = Vec::new();
    let mut frontier: Vec<(Exponents, Poly)> = vec![(vec![0; m], normal_form(&Poly::one(n), basis, order))];
    while !frontier.is_empty() {
        let mut next_degree: BTreeSet<Exponents> = BTreeSet::new();
        for (e, image) in frontier {
            budget.check()?;
            if leads.iter().any(|l| l.iter().zip(&e).all(|(a, b)| a <= b)) {
                continue;
            }
            let mut v = to_vec(&image);
            let mut pre: SparseVec = BTreeMap::from([(e.clone(), Rational::one())]);
            for (row, pivot, rpre) in &rows {
                if let Some(c) = v.get(pivot) {
                    let f = c / &row[pivot];
                    axpy(&mut v, &f, row);
                    axpy(&mut pre, &f, rpre);
                }
            }
            match v.keys().next().cloned() {
                Some(pivot) => {
                    rows.push((v, pivot, pre));
                    for j in 0..m {
                        let mut x = e.clone();
                        x[j] += 1;
                        next_degree.insert(x);
                    }
                    standard.insert(e, image);
                }
                None => {
                    kernel.push(Poly::from_terms(m, pre));
                    leads.push(e);
                }
            }
            if rows.len() > dim {
                unreachable!("more independent monomials than the quotient dimension");
            }
        }
        frontier = next_degree
            .into_iter()
            .filter(|x| !leads.iter().any(|l| l.iter().zip(x).all(|(a, b)| a <= b)))
            .map(|x| {
                let j = (0..m).find(|&j| x[j] > 0 && standard.contains_key(&dec(&x, j))).expect("a standard predecessor");
                let img = normal_form(&standard[&dec(&x, j)].mul(&images[j]), basis, order);
                (x, img)
            })
            .collect();
    }
    Ok(kernel)
}

fn dec(x: &Exponents, j: usize) -> Exponents {
    let mut y = x.clone();
    y[j] -= 1;
    y
}

fn as_fixed_coordinate(p: &Poly) -> Option<(usize, Rational)> {
    if p.total_degree() != 1 {
        return None;
    }
    let support = p.support();
    if support.len() != 1 {
        return None;
    }
    let k = support[0];
    let mut e = vec![0u16; p.nvars()];
    e[k] = 1;
    let a = p.coeff(&e);
    let c = p.coeff(&vec![0u16; p.nvars()]);
    Some((k, -c / a))
}

/// Blockwise product map `(X, Y) -> X*Y` on a doubled shape, as target polynomials.
pub fn product_map(shape: &[usize]) -> Vec<Poly> {
    let half = shape_vars(shape);
    let n = 2 * half;
    let mut out = Vec::with_capacity(half);
    for (b, &d) in shape.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                let mut p = Poly::zero(n);
                for t in 0..d {
                    let x = var_index(shape, b, i, t);
                    let y = half + var_index(shape, b, t, j);
                    p = p.add(&Poly::var(n, x).mul(&Poly::var(n, y)));
                }
                out.push(p);
            }
        }
    }
    out
}

/// Leading monomials of the reduced basis, for diagnostics.
pub fn leading_terms(ideal: &PolyIdeal, budget: &Budget) -> Result<Vec<Exponents>, ResourceError> {
    Ok(ideal
        .basis_with(budget)?
        .iter()
        .filter_map(|p| leading_monomial(p, MonomialOrder::Grevlex))
        .collect())
}
