//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::arith::Rational;

/// Reduced row echelon form. Returns the nonzero rows and their pivot columns.
pub fn rref(rows: &[Vec<Rational>], ncols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut m: Vec<Vec<Rational>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

/// Basis of `{ v : rows * v = 0 }`, one vector per free column in increasing order.
pub fn nullspace(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let (m, pivots) = rref(rows, ncols);
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut out = Vec::new();
    for f in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); ncols];
        v[f] = Rational::one();
        for (row, &p) in m.iter().zip(&pivots) {
            v[p] = -row[f].clone();
        }
        out.push(v);
    }
    out
}

/// Outcome of solving an affine system `A x = b` given as rows `[A | b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AffineSolution {
    Inconsistent,
    /// `(variable, value)` for every variable the system pins down.
    Determined(Vec<(usize, Rational)>),
}

/// Finds every variable whose value is forced by the affine system.
pub fn forced_values(rows: &[Vec<Rational>], nvars: usize) -> AffineSolution {
    let (m, pivots) = rref(rows, nvars + 1);
    if pivots.last() == Some(&nvars) {
        return AffineSolution::Inconsistent;
    }
    let mut out = Vec::new();
    for (row, &p) in m.iter().zip(&pivots) {
        if row[..nvars].iter().enumerate().all(|(c, x)| c == p || x.is_zero()) {
            out.push((p, row[nvars].clone()));
        }
    }
    AffineSolution::Determined(out)
}
