//! Polynomial ideals over the rationals and the closure constructions built on them.

pub mod chain;
pub mod closure;
pub mod groebner;
pub mod ideal;
pub mod poly;

pub use chain::{default_chain_cap, product_chain, VarietyChain};
pub use closure::{enumerate_group, group_closure, Certificate, ClosureConfig, GroupClosure};
pub use groebner::{groebner, normal_form, Budget, MonomialOrder, ResourceError};
pub use ideal::{ideal_equal, image_closure, intersect, tensor, PolyIdeal};
pub use poly::Poly;
