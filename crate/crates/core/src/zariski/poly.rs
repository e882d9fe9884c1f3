//! Sparse multivariate polynomials over the rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::arith::Rational;

/// Exponent vector, one entry per variable.
pub type Exponents = Vec<u16>;

/// Polynomial in a fixed number of variables `x_0 .. x_{nvars-1}`.
///
/// Terms are keyed by exponent vector; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponents, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Rational::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &[u16]) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| deg(e)).max().unwrap_or(0)
    }

    /// Constant value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&x| x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Variables with a nonzero exponent somewhere.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.nvars];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    used[i] = true;
                }
            }
        }
        (0..self.nvars).filter(|&i| used[i]).collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars, "evaluation point dimension");
        let mut total = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    t *= num_traits::pow(point[i].clone(), x as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Substitutes `images[i]` for variable `i`; all images share one ring.
    pub fn compose(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars);
        let target = images.first().map(Poly::nvars).unwrap_or(0);
        let mut cache: BTreeMap<(usize, u16), Poly> = BTreeMap::new();
        let mut out = Poly::zero(target);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    let pw = cache.entry((i, x)).or_insert_with(|| images[i].pow(x as u32)).clone();
                    t = t.mul(&pw);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Re-embeds into a ring with `nvars` variables, sending variable `i` to `map[i]`.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> Poly {
        assert_eq!(map.len(), self.nvars);
        let mut out = Poly::zero(nvars);
        for (e, c) in &self.terms {
            let mut f = vec![0u16; nvars];
            for (i, &x) in e.iter().enumerate() {
                f[map[i]] += x;
            }
            out.add_term(f, c.clone());
        }
        out
    }

    /// Divides by the leading coefficient under lex storage order (for display only).
    pub fn monic_lex(&self) -> Poly {
        match self.terms.iter().next_back() {
            Some((_, c)) => self.scale(&(Rational::one() / c)),
            None => self.clone(),
        }
    }

    /// Human-readable form with caller-supplied variable names.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        // highest total degree first, then lex
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| deg(b.0).cmp(&deg(a.0)).then_with(|| b.0.cmp(a.0)));
        let mut s = String::new();
        for (k, (e, c)) in ts.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono = mono_string(e, names);
            if mono.is_empty() {
                s.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    s.push_str(&mag.to_string());
                    s.push('*');
                }
                s.push_str(&mono);
            }
        }
        s
    }
}

fn mono_string(e: &[u16], names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &x) in e.iter().enumerate() {
        match x {
            0 => {}
            1 => parts.push(names[i].clone()),
            _ => parts.push(format!("{}^{}", names[i], x)),
        }
    }
    parts.join("*")
}

pub(crate) fn deg(e: &[u16]) -> u32 {
    e.iter().map(|&x| x as u32).sum()
}

/// Default variable names: `v0, v1, ...`.
pub fn default_names(nvars: usize) -> Vec<String> {
    (0..nvars).map(|i| format!("v{i}")).collect()
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&default_names(self.nvars)))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&default_names(self.nvars)))
    }
}

/// Parses polynomials written with `+ - * ^`, integer or `p/q` coefficients and the given variable names.
/// Intended for tests and fixtures; no parentheses.
pub fn parse_poly(text: &str, names: &[&str]) -> Result<Poly, String> {
    let nvars = names.len();
    let mut p = Poly::zero(nvars);
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err("empty polynomial".into());
    }
    // split into signed terms
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in cleaned.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (-Rational::one(), b),
            None => (Rational::one(), t.strip_prefix('+').unwrap_or(&t)),
        };
        let mut coeff = sign;
        let mut e = vec![0u16; nvars];
        for factor in body.split('*') {
            let (base, power) = match factor.split_once('^') {
                Some((b, k)) => (b, k.parse::<u16>().map_err(|_| format!("bad exponent in {factor:?}"))?),
                None => (factor, 1),
            };
            if let Some(i) = names.iter().position(|n| *n == base) {
                e[i] += power;
            } else {
                let c = crate::arith::parse_rational(base).map_err(|_| format!("unknown factor {base:?}"))?;
                coeff *= num_traits::pow(c, power as usize);
            }
        }
        p.add_term(e, coeff);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    #[test]
    fn arithmetic() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y));
        assert_eq!(p, x.mul(&x).sub(&y.mul(&y)));
        assert_eq!(p.eval(&[int(3), int(2)]), int(5));
        assert_eq!(p.total_degree(), 2);
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn parse_and_print() {
        let p = parse_poly("x^2 + 3/2*x*y - 1", &["x", "y"]).unwrap();
        assert_eq!(p.eval(&[int(2), int(2)]), int(9));
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(p.display_with(&names), "x^2 + 3/2*x*y - 1");
        assert_eq!(parse_poly("-y", &["x", "y"]).unwrap(), Poly::var(2, 1).neg());
    }

    #[test]
    fn composition() {
        let p = parse_poly("x*y", &["x", "y"]).unwrap();
        let img = vec![parse_poly("a+1", &["a"]).unwrap(), parse_poly("a-1", &["a"]).unwrap()];
        assert_eq!(p.compose(&img), parse_poly("a^2 - 1", &["a"]).unwrap());
        assert_eq!(p.remap(3, &[2, 0]), parse_poly("x*z", &["x", "y", "z"]).unwrap());
        assert_eq!(Poly::constant(1, rat(1, 2)).as_constant(), Some(rat(1, 2)));
    }
}
