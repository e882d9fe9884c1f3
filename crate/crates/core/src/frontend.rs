//! Batch commands behind the `cutpoint` binary. Each returns data; the
//! binary only prints it and picks the exit code.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};

use crate::arith::{format_rational, Rational};
use crate::decide::{decide, DecideConfig, DecisionReport, Mode};
use crate::grammar::{enumerate_words, parse_grammar, GrammarSpec, DEFAULT_ENUM_BUDGET};
use crate::pipeline::{closure, PipelineConfig};
use crate::qfa::{display_word, parse_word, QuantumAutomaton};
use crate::zariski::closure::ClosureConfig;

/// Exit code for input and usage errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Grammar(#[from] crate::grammar::GrammarError),
    #[error(transparent)]
    Qfa(#[from] crate::qfa::QfaError),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub max_degree: u32,
    pub chain_cap: Option<usize>,
    pub max_len: usize,
    pub smt_cmd: Option<String>,
    pub timeout: Duration,
    pub json_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DecideConfig::default();
        Self {
            mode: d.mode,
            max_degree: ClosureConfig::default().degree_cap,
            chain_cap: None,
            max_len: d.max_len,
            smt_cmd: d.smt_cmd,
            timeout: d.timeout,
            json_out: None,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<(), FrontendError> {
        if self.max_degree == 0 {
            return Err(FrontendError::Config("--max-degree must be positive".into()));
        }
        if self.chain_cap == Some(0) {
            return Err(FrontendError::Config("--chain-cap must be positive".into()));
        }
        if self.timeout.is_zero() {
            return Err(FrontendError::Config("--timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let mut p = PipelineConfig::default();
        p.closure.degree_cap = self.max_degree;
        p.chain_cap = self.chain_cap;
        p
    }

    pub fn decide_config(&self) -> DecideConfig {
        DecideConfig {
            mode: self.mode,
            pipeline: self.pipeline(),
            max_len: self.max_len,
            smt_cmd: self.smt_cmd.clone(),
            timeout: self.timeout,
            ..DecideConfig::default()
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, FrontendError> {
    match s {
        "symbolic" => Ok(Mode::Symbolic),
        "brute" => Ok(Mode::Brute),
        "both" => Ok(Mode::Both),
        _ => Err(FrontendError::Config(format!("unknown mode {s:?}; expected symbolic, brute or both"))),
    }
}

fn read(path: &Path) -> Result<String, FrontendError> {
    std::fs::read_to_string(path).map_err(|e| FrontendError::Input { path: path.display().to_string(), message: e.to_string() })
}

/// Parses an automaton file and rejects it if `validate` complains.
pub fn load_qfa(path: &Path) -> Result<QuantumAutomaton, FrontendError> {
    let input = |message: String| FrontendError::Input { path: path.display().to_string(), message };
    let q = QuantumAutomaton::from_json(&read(path)?).map_err(|e| input(e.to_string()))?;
    let problems = q.validate();
    if !problems.is_empty() {
        return Err(input(problems.join("; ")));
    }
    Ok(q)
}

pub fn load_grammar(path: &Path) -> Result<GrammarSpec, FrontendError> {
    parse_grammar(&read(path)?).map_err(|e| FrontendError::Input { path: path.display().to_string(), message: e.to_string() })
}

/// One diagnostic entry per file.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Diagnostic {
    pub path: String,
    /// `qfa`, a grammar kind, or `unknown`.
    pub kind: String,
    pub ok: bool,
    pub messages: Vec<String>,
}

/// A file with a top-level `"kind"` is a grammar; anything else is read as an automaton.
pub fn cmd_validate(paths: &[PathBuf]) -> Vec<Diagnostic> {
    paths
        .iter()
        .map(|p| {
            let path = p.display().to_string();
            let text = match std::fs::read_to_string(p) {
                Ok(t) => t,
                Err(e) => return Diagnostic { path, kind: "unknown".into(), ok: false, messages: vec![e.to_string()] },
            };
            let value: Value = match serde_json::from_str(&text) {
                Ok(v) => v,
                Err(e) => return Diagnostic { path, kind: "unknown".into(), ok: false, messages: vec![format!("invalid JSON: {e}")] },
            };
            if value.get("kind").is_some() {
                match crate::grammar::parse_value(&value) {
                    Ok(g) => Diagnostic { path, kind: g.kind().into(), ok: true, messages: vec![] },
                    Err(e) => Diagnostic { path, kind: "grammar".into(), ok: false, messages: vec![e.to_string()] },
                }
            } else {
                match QuantumAutomaton::from_value(&value) {
                    Ok(q) => {
                        let messages = q.validate();
                        Diagnostic { path, kind: "qfa".into(), ok: messages.is_empty(), messages }
                    }
                    Err(e) => Diagnostic { path, kind: "qfa".into(), ok: false, messages: vec![e.to_string()] },
                }
            }
        })
        .collect()
}

pub fn cmd_accept_prob(q: &QuantumAutomaton, word: &str) -> Result<Rational, FrontendError> {
    Ok(q.accept_prob(&parse_word(word))?)
}

pub fn cmd_enumerate(g: &GrammarSpec, max_len: usize) -> Result<Vec<String>, FrontendError> {
    Ok(enumerate_words(g, max_len, DEFAULT_ENUM_BUDGET)?.iter().map(|w| display_word(w)).collect())
}

/// Closure report without timings, so repeated runs print the same bytes.
pub fn cmd_closure(q: &QuantumAutomaton, g: &GrammarSpec, cfg: &RunConfig) -> Result<Value, FrontendError> {
    cfg.check()?;
    check_letters(q, g)?;
    Ok(closure(g, q, &cfg.pipeline())?.to_value(false))
}

/// Every grammar terminal must have a matrix.
pub fn check_letters(q: &QuantumAutomaton, g: &GrammarSpec) -> Result<(), FrontendError> {
    match g.terminals().into_iter().find(|a| !q.phi.contains_key(a)) {
        Some(a) => Err(crate::qfa::QfaError::UnknownSymbol(a).into()),
        None => Ok(()),
    }
}

pub fn cmd_decide(q: &QuantumAutomaton, g: &GrammarSpec, cfg: &RunConfig) -> Result<DecisionReport, FrontendError> {
    cfg.check()?;
    check_letters(q, g)?;
    Ok(decide(q, g, &cfg.decide_config()))
}

pub fn accept_prob_json(word: &str, p: &Rational) -> Value {
    json!({ "word": word, "accept_prob": format_rational(p) })
}

/// Human-readable summary of a decision.
pub fn render_decision(r: &DecisionReport) -> String {
    let verdict = serde_json::to_value(r.verdict).unwrap_or_default();
    let mut out = format!("verdict: {}\n", verdict.as_str().unwrap_or("?"));
    if let Some(w) = &r.witness {
        let shown = if w.word.is_empty() { "ε" } else { &w.word };
        out.push_str(&format!("witness: {shown} (accept_prob {})\n", w.accept_prob));
    }
    if let Some(m) = &r.symbolic_model {
        out.push_str(&format!("symbolic model: {m:?}\n"));
    }
    let outcome = serde_json::to_value(r.solver_outcome).unwrap_or_default();
    let cross = serde_json::to_value(r.cross_check).unwrap_or_default();
    out.push_str(&format!("solver: {} ({})\n", r.solver, outcome.as_str().unwrap_or("?")));
    out.push_str(&format!("certified: {}\ncross-check: {}\n", r.certified, cross.as_str().unwrap_or("?")));
    if let Some(b) = &r.brute {
        out.push_str(&format!("brute force: {} words up to length {:?}", b.words_checked, b.reached_len));
        if let Some(e) = &b.error {
            out.push_str(&format!(" ({e})"));
        }
        out.push('\n');
    }
    for n in &r.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes() {
        assert_eq!(parse_mode("brute").unwrap(), Mode::Brute);
        assert!(parse_mode("fast").is_err());
        let bad = RunConfig { max_degree: 0, ..RunConfig::default() };
        assert!(bad.check().is_err());
    }

    #[test]
    fn validate_files() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("g.json");
        std::fs::write(&good, r#"{"kind":"linear","productions":["S -> a S b | ε"]}"#).unwrap();
        let bad = dir.path().join("q.json");
        std::fs::write(
            &bad,
            r#"{"dim":1,"alphabet":["a"],"s":[2],"phi":{"a":[[1]]},"P":[[1]],"lambda":"1/2"}"#,
        )
        .unwrap();
        let d = cmd_validate(&[good, bad]);
        assert!(d[0].ok);
        assert_eq!(d[0].kind, "linear");
        assert!(!d[1].ok);
        assert!(d[1].messages[0].contains("start vector"), "{:?}", d[1].messages);
    }
}
