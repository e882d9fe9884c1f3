//! Exact emptiness checks for `L(G) ∩ {w : ‖s φ(w) P‖² > λ}` where `G` is a
//! linear, metalinear, restricted matrix or monoidal grammar and the
//! automaton has rational orthogonal matrices.
//!
//! The usual entry point is [`decide::decide`]; [`pipeline::closure`] gives
//! the closure description on its own.

pub mod arith;
pub mod cycles;
pub mod decide;
pub mod frontend;
pub mod grammar;
pub mod linalg;
pub mod pipeline;
pub mod qfa;
pub mod semialg;
pub mod zariski;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/automata.md")]
    mod automata {}
    #[doc = include_str!("../../../book/src/grammars.md")]
    mod grammars {}
    #[doc = include_str!("../../../book/src/closures.md")]
    mod closures {}
    #[doc = include_str!("../../../book/src/semialgebraic.md")]
    mod semialgebraic {}
    #[doc = include_str!("../../../book/src/deciding.md")]
    mod deciding {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
