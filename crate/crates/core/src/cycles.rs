//! Group-labelled automata whose root loops spell the cycle monoids, and
//! generating sets for the groups they generate.
//!
//! A label is a block tuple `φ(u_1) ⊕ φ(v_1)ᵀ ⊕ ... ⊕ φ(u_k) ⊕ φ(v_k)ᵀ`; a
//! linear grammar gives `k = 1`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::arith::BlockMatrix;
use crate::grammar::{GrammarMatrix, LinearGrammar, RestrictedMatrixGrammar};
use crate::qfa::{display_word, QfaError, QuantumAutomaton, Symbol, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupEdge {
    pub src: usize,
    pub dst: usize,
    pub label: BlockMatrix,
    /// `(u_i, v_i)` per synchronized block.
    pub words: Vec<(Word, Word)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAutomaton {
    /// Variable tuples; one-element tuples for linear grammars.
    pub states: Vec<Vec<Symbol>>,
    pub root: usize,
    pub edges: Vec<GroupEdge>,
    pub shape: Vec<usize>,
}

fn label(q: &QuantumAutomaton, words: &[(Word, Word)]) -> Result<BlockMatrix, QfaError> {
    let mut blocks = Vec::with_capacity(2 * words.len());
    for (u, v) in words {
        blocks.push(q.phi_of_word(u)?);
        blocks.push(q.phi_of_word(v)?.transpose());
    }
    Ok(BlockMatrix::new(blocks))
}

/// States are the variables of `g`; each rule `B -> u C v` is an edge `B -> C`.
pub fn cycle_automaton_linear(g: &LinearGrammar, q: &QuantumAutomaton, var: &str) -> Result<GroupAutomaton, QfaError> {
    let vars = &g.cfg().variables;
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let root = *index.get(var).ok_or_else(|| QfaError::UnknownSymbol(var.to_string()))?;
    let mut edges = Vec::new();
    for r in g.rules() {
        if let Some(c) = &r.var {
            let words = vec![(r.left.clone(), r.right.clone())];
            edges.push(GroupEdge { src: index[r.lhs.as_str()], dst: index[c.as_str()], label: label(q, &words)?, words });
        }
    }
    Ok(GroupAutomaton { states: vars.iter().map(|v| vec![v.clone()]).collect(), root, edges, shape: vec![q.dim, q.dim] })
}

/// States are the variable tuples reachable from `state` by step matrices.
pub fn cycle_automaton_matrix(
    g: &RestrictedMatrixGrammar,
    q: &QuantumAutomaton,
    state: &[Symbol],
) -> Result<GroupAutomaton, QfaError> {
    let mut states: Vec<Vec<Symbol>> = vec![state.to_vec()];
    let mut index: HashMap<Vec<Symbol>, usize> = HashMap::from([(state.to_vec(), 0)]);
    let mut edges = Vec::new();
    let mut k = 0;
    while k < states.len() {
        let cur = states[k].clone();
        for m in &g.matrices {
            let GrammarMatrix::Step(rs) = m else { continue };
            if rs.iter().zip(&cur).any(|(r, x)| &r.lhs != x) {
                continue;
            }
            let next: Vec<Symbol> = rs.iter().map(|r| r.rhs.clone()).collect();
            let dst = *index.entry(next.clone()).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
            let words: Vec<(Word, Word)> = rs.iter().map(|r| (r.left.clone(), r.right.clone())).collect();
            edges.push(GroupEdge { src: k, dst, label: label(q, &words)?, words });
        }
        k += 1;
    }
    Ok(GroupAutomaton { states, root: 0, edges, shape: vec![q.dim; 2 * g.index()] })
}

impl GroupAutomaton {
    fn reach(&self, forward: bool) -> Vec<Option<Vec<usize>>> {
        // paths as edge lists: root -> p when forward, p -> root otherwise
        let mut path: Vec<Option<Vec<usize>>> = vec![None; self.states.len()];
        path[self.root] = Some(Vec::new());
        let mut queue = VecDeque::from([self.root]);
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&e| (self.edges[e].src, self.edges[e].dst, e));
        while let Some(p) = queue.pop_front() {
            for &e in &order {
                let ed = &self.edges[e];
                let (from, to) = if forward { (ed.src, ed.dst) } else { (ed.dst, ed.src) };
                if from == p && path[to].is_none() {
                    let mut pp = path[p].clone().unwrap();
                    if forward {
                        pp.push(e);
                    } else {
                        pp.insert(0, e);
                    }
                    path[to] = Some(pp);
                    queue.push_back(to);
                }
            }
        }
        path
    }

    /// Keeps the states lying on some root loop. Returns the removed states.
    pub fn trim(&self) -> (GroupAutomaton, Vec<Vec<Symbol>>) {
        let fwd = self.reach(true);
        let back = self.reach(false);
        let keep: Vec<bool> = (0..self.states.len()).map(|p| fwd[p].is_some() && back[p].is_some()).collect();
        let mut new_index = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        let mut removed = Vec::new();
        for (p, s) in self.states.iter().enumerate() {
            if keep[p] {
                new_index[p] = states.len();
                states.push(s.clone());
            } else {
                removed.push(s.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.src] && keep[e.dst])
            .map(|e| GroupEdge { src: new_index[e.src], dst: new_index[e.dst], ..e.clone() })
            .collect();
        (GroupAutomaton { states, root: new_index[self.root], edges, shape: self.shape.clone() }, removed)
    }

    pub fn path_label(&self, path: &[usize]) -> BlockMatrix {
        path.iter().fold(BlockMatrix::identity(&self.shape), |acc, &e| &acc * &self.edges[e].label)
    }

    /// Root-loop word tuples `(u_i, v_i)_i` with total length at most `max_len`.
    pub fn cycle_words(&self, max_len: usize, budget: usize) -> Option<BTreeSet<Vec<(Word, Word)>>> {
        let k = self.shape.len() / 2;
        let mut at: Vec<BTreeSet<Vec<(Word, Word)>>> = vec![BTreeSet::new(); self.states.len()];
        at[self.root].insert(vec![(Vec::new(), Vec::new()); k]);
        let mut queue: VecDeque<(usize, Vec<(Word, Word)>)> = VecDeque::from([(self.root, vec![(Vec::new(), Vec::new()); k])]);
        let mut count = 1;
        while let Some((p, ws)) = queue.pop_front() {
            let len: usize = ws.iter().map(|(u, v)| u.len() + v.len()).sum();
            for e in self.edges.iter().filter(|e| e.src == p) {
                let add: usize = e.words.iter().map(|(u, v)| u.len() + v.len()).sum();
                if len + add > max_len {
                    continue;
                }
                let next: Vec<(Word, Word)> = ws
                    .iter()
                    .zip(&e.words)
                    .map(|((u, v), (a, b))| {
                        let mut u = u.clone();
                        u.extend(a.iter().cloned());
                        let mut nv = b.clone();
                        nv.extend(v.iter().cloned());
                        (u, nv)
                    })
                    .collect();
                if at[e.dst].insert(next.clone()) {
                    count += 1;
                    if count > budget {
                        return None;
                    }
                    queue.push_back((e.dst, next));
                }
            }
        }
        Some(std::mem::take(&mut at[self.root]))
    }

    /// Labels of root loops with at most `max_edges` edges, deduplicated.
    pub fn loop_labels(&self, max_edges: usize) -> BTreeSet<BlockMatrix> {
        let mut out = BTreeSet::from([BlockMatrix::identity(&self.shape)]);
        let mut frontier: BTreeSet<(usize, BlockMatrix)> = BTreeSet::from([(self.root, BlockMatrix::identity(&self.shape))]);
        for _ in 0..max_edges {
            let mut next = BTreeSet::new();
            for (p, m) in &frontier {
                for e in self.edges.iter().filter(|e| e.src == *p) {
                    let l = m * &e.label;
                    if e.dst == self.root {
                        out.insert(l.clone());
                    }
                    next.insert((e.dst, l));
                }
            }
            frontier = next;
        }
        out
    }

    pub fn state_name(&self, p: usize) -> String {
        format!("({})", self.states[p].join(","))
    }

    /// Line-oriented dump: one line per edge, then the label table.
    pub fn dump(&self) -> String {
        let mut ids: BTreeMap<&BlockMatrix, usize> = BTreeMap::new();
        let mut table = Vec::new();
        for e in &self.edges {
            if !ids.contains_key(&e.label) {
                ids.insert(&e.label, table.len() + 1);
                table.push(e);
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "root {}", self.state_name(self.root));
        for e in &self.edges {
            let _ = writeln!(out, "{}  --[m{}]-->  {}", self.state_name(e.src), ids[&e.label], self.state_name(e.dst));
        }
        for (i, e) in table.iter().enumerate() {
            let ws: Vec<String> = e.words.iter().map(|(u, v)| format!("{}|{}", display_word(u), display_word(v))).collect();
            let blocks: Vec<String> = e.label.blocks().iter().map(|b| b.to_string()).collect();
            let _ = writeln!(out, "m{} = {}  ; words {}", i + 1, blocks.join(" ⊕ "), ws.join(" "));
        }
        out
    }
}

/// Two root loops whose labels give the generator as `label(forward) · label(back)ᵀ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorWitness {
    pub forward: Vec<usize>,
    pub back: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub shape: Vec<usize>,
    pub generators: Vec<BlockMatrix>,
    pub witnesses: Vec<GeneratorWitness>,
    /// The trimmed automaton the generators refer to.
    pub automaton: GroupAutomaton,
    /// States dropped by trimming.
    pub trimmed: Vec<Vec<Symbol>>,
}

/// `t(src) · label · t(dst)ᵀ` per non-tree edge of a breadth-first spanning tree.
pub fn group_generators(aut: &GroupAutomaton) -> GeneratorSet {
    let (aut, trimmed) = aut.trim();
    let tree = aut.reach(true);
    let back = aut.reach(false);
    let t: Vec<BlockMatrix> = tree.iter().map(|p| aut.path_label(p.as_ref().expect("trimmed"))).collect();
    let mut generators: Vec<BlockMatrix> = Vec::new();
    let mut witnesses = Vec::new();
    for (e, ed) in aut.edges.iter().enumerate() {
        let g = &(&t[ed.src] * &ed.label) * &t[ed.dst].transpose();
        if g.is_identity() || generators.contains(&g) {
            continue;
        }
        let c = back[ed.dst].clone().expect("trimmed");
        let mut forward = tree[ed.src].clone().unwrap();
        forward.push(e);
        forward.extend(c.iter().copied());
        let mut bk = tree[ed.dst].clone().unwrap();
        bk.extend(c.iter().copied());
        generators.push(g);
        witnesses.push(GeneratorWitness { forward, back: bk });
    }
    GeneratorSet { shape: aut.shape.clone(), generators, witnesses, automaton: aut, trimmed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, QMatrix, QVector};
    use crate::grammar::{parse_grammar, GrammarSpec};

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
            lambda: int(0),
        }
    }

    #[test]
    fn single_loop() {
        let g = LinearGrammar::parse("S", &["S -> a S b | ε"]).unwrap();
        let q = qfa(&[("a", r()), ("b", QMatrix::identity(2))]);
        let aut = cycle_automaton_linear(&g, &q, "S").unwrap();
        assert_eq!(aut.edges.len(), 1);
        assert_eq!(aut.edges[0].label, BlockMatrix::new(vec![r(), QMatrix::identity(2)]));
        let gens = group_generators(&aut);
        assert_eq!(gens.generators, vec![aut.edges[0].label.clone()]);
    }

    #[test]
    fn two_states() {
        let g = LinearGrammar::parse("S", &["S -> a T b | ε", "T -> c S d"]).unwrap();
        let swap = QMatrix::from_ints(&[&[0, 1], &[1, 0]]);
        let q = qfa(&[("a", r()), ("b", swap.clone()), ("c", r().transpose()), ("d", r())]);
        let aut = cycle_automaton_linear(&g, &q, "S").unwrap();
        assert_eq!(aut.edges.len(), 2);
        let gens = group_generators(&aut);
        assert_eq!(gens.generators.len(), 1);
        let expected = BlockMatrix::new(vec![q.phi_of_word(&["a", "c"]).unwrap(), q.phi_of_word(&["d", "b"]).unwrap().transpose()]);
        assert_eq!(gens.generators[0], expected);
        let w = &gens.witnesses[0];
        assert_eq!(&gens.automaton.path_label(&w.forward) * &gens.automaton.path_label(&w.back).transpose(), expected);
    }

    #[test]
    fn empty_right_context() {
        let g = LinearGrammar::parse("S", &["S -> a a S | ε"]).unwrap();
        let q = qfa(&[("a", r())]);
        let aut = cycle_automaton_linear(&g, &q, "S").unwrap();
        assert_eq!(aut.edges[0].label, BlockMatrix::new(vec![&r() * &r(), QMatrix::identity(2)]));
    }

    #[test]
    fn matrix_example() {
        let text = r#"{"kind":"restricted-matrix","blocks":[["A"],["B"],["C"]],
            "matrices":[["S -> A B C"],["A -> a A","B -> b B","C -> c C"],["A -> ε","B -> ε","C -> ε"]]}"#;
        let GrammarSpec::RestrictedMatrix(g) = parse_grammar(text).unwrap() else { panic!() };
        let q = qfa(&[("a", r()), ("b", r().transpose()), ("c", QMatrix::identity(2))]);
        let aut = cycle_automaton_matrix(&g, &q, &["A".into(), "B".into(), "C".into()]).unwrap();
        assert_eq!(aut.states.len(), 1);
        let i = QMatrix::identity(2);
        assert_eq!(aut.edges[0].label, BlockMatrix::new(vec![r(), i.clone(), r().transpose(), i.clone(), i.clone(), i]));
        assert!(aut.dump().contains("(A,B,C)  --[m1]-->  (A,B,C)"));
    }

    #[test]
    fn edgeless() {
        let g = LinearGrammar::parse("S", &["S -> a"]).unwrap();
        let q = qfa(&[("a", r())]);
        let gens = group_generators(&cycle_automaton_linear(&g, &q, "S").unwrap());
        assert!(gens.generators.is_empty());
    }

    #[test]
    fn trimming_drops_dead_states() {
        let g = LinearGrammar::parse("S", &["S -> a S | a T", "T -> b T | b"]).unwrap();
        let q = qfa(&[("a", r()), ("b", r())]);
        let gens = group_generators(&cycle_automaton_linear(&g, &q, "S").unwrap());
        assert_eq!(gens.trimmed, vec![vec!["T".to_string()]]);
    }

    #[test]
    fn cycle_word_pairs() {
        let g = LinearGrammar::parse("S", &["S -> a T b | ε", "T -> c S"]).unwrap();
        let q = qfa(&[("a", r()), ("b", r()), ("c", r())]);
        let aut = cycle_automaton_linear(&g, &q, "S").unwrap();
        let ws = aut.cycle_words(6, 1000).unwrap();
        assert_eq!(ws.len(), 3);
        assert!(ws.contains(&vec![(vec!["a".into(), "c".into(), "a".into(), "c".into()], vec!["b".into(), "b".into()])]));
    }
}
