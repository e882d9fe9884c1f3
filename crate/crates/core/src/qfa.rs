//! Measure-once quantum automata with rational orthogonal letter matrices.

use std::collections::BTreeMap;

use num_traits::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{format_rational, parse_rational, QMatrix, QVector, Rational};

pub type Symbol = String;
pub type Word = Vec<Symbol>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QfaError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("format error: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutMode {
    /// `> lambda`
    Strict,
    /// `>= lambda`
    Nonstrict,
}

/// `Q = (s, phi, P, lambda)` over `R^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumAutomaton {
    pub dim: usize,
    pub alphabet: Vec<Symbol>,
    pub s: QVector,
    pub phi: BTreeMap<Symbol, QMatrix>,
    pub p: QMatrix,
    pub lambda: Rational,
}

impl QuantumAutomaton {
    /// Lists every violated invariant; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push("dimension must be positive".to_string());
            return out;
        }
        if self.s.dim() != self.dim {
            out.push(format!("start vector has {} entries, expected {}", self.s.dim(), self.dim));
        } else {
            let norm = self.s.norm_sq();
            if !norm.is_one() {
                out.push(format!("start vector norm² = {} ≠ 1", format_rational(&norm)));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.alphabet {
            if !seen.insert(a) {
                out.push(format!("symbol {a:?} listed twice"));
            }
            match self.phi.get(a) {
                None => out.push(format!("phi({a}) missing")),
                Some(m) if m.dim() != self.dim => out.push(format!("phi({a}) has dimension {}, expected {}", m.dim(), self.dim)),
                Some(m) if !m.is_orthogonal() => out.push(format!("phi({a}) not orthogonal")),
                _ => {}
            }
        }
        for a in self.phi.keys() {
            if !self.alphabet.contains(a) {
                out.push(format!("phi given for {a:?}, which is not in the alphabet"));
            }
        }
        if self.p.dim() != self.dim {
            out.push(format!("P has dimension {}, expected {}", self.p.dim(), self.dim));
        } else if &self.p * &self.p != self.p || !self.p.is_symmetric() {
            out.push("P not idempotent-symmetric".to_string());
        }
        out
    }

    pub fn letter(&self, a: &str) -> Result<&QMatrix, QfaError> {
        self.phi.get(a).ok_or_else(|| QfaError::UnknownSymbol(a.to_string()))
    }

    /// `phi(w_1) ... phi(w_m)`, identity for the empty word.
    pub fn phi_of_word<S: AsRef<str>>(&self, w: &[S]) -> Result<QMatrix, QfaError> {
        let mut acc = QMatrix::identity(self.dim);
        for a in w {
            acc = &acc * self.letter(a.as_ref())?;
        }
        Ok(acc)
    }

    /// `||s X P||^2` for an arbitrary matrix `X`.
    pub fn value_of_matrix(&self, x: &QMatrix) -> Rational {
        let sx = self.s.mul_matrix(x).expect("dimension checked by validation");
        sx.mul_matrix(&self.p).expect("dimension checked by validation").norm_sq()
    }

    pub fn accept_prob<S: AsRef<str>>(&self, w: &[S]) -> Result<Rational, QfaError> {
        Ok(self.value_of_matrix(&self.phi_of_word(w)?))
    }

    pub fn in_cutpoint<S: AsRef<str>>(&self, w: &[S], mode: CutMode) -> Result<bool, QfaError> {
        let p = self.accept_prob(w)?;
        Ok(match mode {
            CutMode::Strict => p > self.lambda,
            CutMode::Nonstrict => p >= self.lambda,
        })
    }

    /// Parses the JSON file format.
    pub fn from_json(text: &str) -> Result<Self, QfaError> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| QfaError::Format(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, QfaError> {
        let obj = v.as_object().ok_or_else(|| QfaError::Format("top level must be an object".into()))?;
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| QfaError::Format("\"dim\" must be a positive integer".into()))? as usize;
        let alphabet: Vec<String> = obj
            .get("alphabet")
            .and_then(Value::as_array)
            .ok_or_else(|| QfaError::Format("\"alphabet\" must be an array of strings".into()))?
            .iter()
            .map(|a| a.as_str().map(str::to_string).ok_or_else(|| QfaError::Format("alphabet entries must be strings".into())))
            .collect::<Result<_, _>>()?;
        let s = QVector::new(
            obj.get("s")
                .and_then(Value::as_array)
                .ok_or_else(|| QfaError::Format("\"s\" must be an array".into()))?
                .iter()
                .map(|x| scalar(x, "s"))
                .collect::<Result<_, _>>()?,
        );
        let mut phi = BTreeMap::new();
        let pm = obj
            .get("phi")
            .and_then(Value::as_object)
            .ok_or_else(|| QfaError::Format("\"phi\" must map symbols to matrices".into()))?;
        for (a, m) in pm {
            phi.insert(a.clone(), matrix(m, &format!("phi({a})"))?);
        }
        let p = matrix(obj.get("P").ok_or_else(|| QfaError::Format("\"P\" missing".into()))?, "P")?;
        let lambda = scalar(obj.get("lambda").ok_or_else(|| QfaError::Format("\"lambda\" missing".into()))?, "lambda")?;
        Ok(Self { dim, alphabet, s, phi, p, lambda })
    }

    pub fn to_value(&self) -> Value {
        let m = |x: &QMatrix| -> Value {
            Value::Array(
                x.rows()
                    .iter()
                    .map(|r| Value::Array(r.iter().map(|c| Value::String(format_rational(c))).collect()))
                    .collect(),
            )
        };
        let phi: serde_json::Map<String, Value> = self.phi.iter().map(|(a, x)| (a.clone(), m(x))).collect();
        json!({
            "dim": self.dim,
            "alphabet": self.alphabet,
            "s": self.s.entries().iter().map(format_rational).collect::<Vec<_>>(),
            "phi": phi,
            "P": m(&self.p),
            "lambda": format_rational(&self.lambda),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable") + "\n"
    }
}

fn scalar(v: &Value, what: &str) -> Result<Rational, QfaError> {
    match v {
        Value::String(s) => {
            if s.contains('i') || s.contains('j') {
                return Err(complex_rejected(what));
            }
            parse_rational(s).map_err(|_| QfaError::Format(format!("{what}: cannot parse {s:?} as a rational")))
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(i.into()))
            } else {
                Err(QfaError::Format(format!("{what}: write non-integers as \"p/q\" strings, got {n}")))
            }
        }
        Value::Array(a) if a.len() == 2 => Err(complex_rejected(what)),
        Value::Object(o) if o.contains_key("re") || o.contains_key("im") => Err(complex_rejected(what)),
        _ => Err(QfaError::Format(format!("{what}: expected a rational"))),
    }
}

fn complex_rejected(what: &str) -> QfaError {
    QfaError::Format(format!(
        "{what}: complex amplitudes are not supported; encode the automaton over the reals by replacing each \
         complex entry a+bi with the 2x2 block [[a,b],[-b,a]] (doubling the dimension)"
    ))
}

fn matrix(v: &Value, what: &str) -> Result<QMatrix, QfaError> {
    let rows = v.as_array().ok_or_else(|| QfaError::Format(format!("{what}: expected an array of rows")))?;
    let rows: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| QfaError::Format(format!("{what}: each row must be an array")))?
                .iter()
                .map(|x| scalar(x, what))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    QMatrix::from_rows(rows).map_err(|e| QfaError::Format(format!("{what}: {e}")))
}

/// Shows a word as concatenated symbols when every symbol is one character,
/// otherwise space-separated. The empty word is the empty string.
pub fn display_word<S: AsRef<str>>(w: &[S]) -> String {
    if w.iter().all(|s| s.as_ref().chars().count() == 1) {
        w.iter().map(|s| s.as_ref()).collect()
    } else {
        w.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join(" ")
    }
}

/// Splits text into symbols: whitespace-separated if it contains whitespace,
/// otherwise one symbol per character. `""`, `"ε"` and `"eps"` are the empty word.
pub fn parse_word(text: &str) -> Word {
    let t = text.trim();
    if t.is_empty() || t == "ε" || t == "eps" {
        return Vec::new();
    }
    if t.contains(char::is_whitespace) {
        t.split_whitespace().map(str::to_string).collect()
    } else {
        t.chars().map(|c| c.to_string()).collect()
    }
}

/// Shortlex comparison: length first, then symbol by symbol.
pub fn shortlex(a: &[Symbol], b: &[Symbol]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    pub(crate) fn rotation_qfa(lambda: Rational) -> QuantumAutomaton {
        let r = QMatrix::from_ratios(&[&[(3, 5), (4, 5)], &[(-4, 5), (3, 5)]]);
        QuantumAutomaton {
            dim: 2,
            alphabet: vec!["a".into()],
            s: QVector::new(vec![int(1), int(0)]),
            phi: [("a".to_string(), r)].into_iter().collect(),
            p: QMatrix::from_ints(&[&[1, 0], &[0, 0]]),
            lambda,
        }
    }

    #[test]
    fn valid_automaton() {
        assert!(rotation_qfa(rat(1, 2)).validate().is_empty());
    }

    #[test]
    fn violations() {
        let mut q = rotation_qfa(rat(1, 2));
        q.s = QVector::new(vec![int(1), int(1)]);
        assert_eq!(q.validate(), vec!["start vector norm² = 2 ≠ 1".to_string()]);
        let mut q = rotation_qfa(rat(1, 2));
        q.p = QMatrix::from_ints(&[&[1, 1], &[0, 0]]);
        assert_eq!(q.validate(), vec!["P not idempotent-symmetric".to_string()]);
    }

    #[test]
    fn words() {
        let q = rotation_qfa(rat(1, 2));
        let e: [&str; 0] = [];
        assert_eq!(q.phi_of_word(&e).unwrap(), QMatrix::identity(2));
        assert_eq!(q.phi_of_word(&["a"]).unwrap(), q.phi["a"]);
        assert_eq!(
            q.phi_of_word(&["a", "a"]).unwrap(),
            QMatrix::from_ratios(&[&[(-7, 25), (24, 25)], &[(-24, 25), (-7, 25)]])
        );
        assert_eq!(q.phi_of_word(&["b"]), Err(QfaError::UnknownSymbol("b".into())));
    }

    #[test]
    fn probabilities() {
        let q = rotation_qfa(rat(1, 2));
        let e: [&str; 0] = [];
        assert_eq!(q.accept_prob(&e).unwrap(), int(1));
        assert_eq!(q.accept_prob(&["a"]).unwrap(), rat(9, 25));
        let mut z = q.clone();
        z.p = QMatrix::zeros(2);
        assert_eq!(z.accept_prob(&["a"]).unwrap(), int(0));
    }

    #[test]
    fn cutpoints() {
        let q = rotation_qfa(rat(1, 2));
        assert!(!q.in_cutpoint(&["a"], CutMode::Strict).unwrap());
        let q1 = rotation_qfa(int(1));
        let e: [&str; 0] = [];
        assert!(!q1.in_cutpoint(&e, CutMode::Strict).unwrap());
        assert!(q1.in_cutpoint(&e, CutMode::Nonstrict).unwrap());
        assert!(rotation_qfa(int(-1)).in_cutpoint(&["a", "a"], CutMode::Strict).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let q = rotation_qfa(rat(1, 2));
        assert_eq!(QuantumAutomaton::from_json(&q.to_json()).unwrap(), q);
        let err = QuantumAutomaton::from_json(r#"{"dim":1,"alphabet":["a"],"s":["1"],"phi":{"a":[["1+2i"]]},"P":[[1]],"lambda":"0"}"#)
            .unwrap_err();
        assert!(err.to_string().contains("complex"));
    }

    #[test]
    fn word_text() {
        assert_eq!(parse_word("aab"), vec!["a", "a", "b"]);
        assert_eq!(parse_word("x1 x2"), vec!["x1", "x2"]);
        assert!(parse_word("ε").is_empty());
        assert_eq!(display_word(&parse_word("x1 x2")), "x1 x2");
        assert_eq!(display_word(&parse_word("ab")), "ab");
    }
}
