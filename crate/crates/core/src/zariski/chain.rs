//! Ascending chain `H_{i+1} = closure(H_i * H_1)` for the closure of a
//! generated monoid of algebraic sets.

use serde::Serialize;

use super::groebner::{Budget, ResourceError};
use super::ideal::{ideal_equal, image_closure, intersect, product_map, shape_vars, tensor, PolyIdeal};
use crate::arith::BlockMatrix;

#[derive(Clone, Debug)]
pub struct VarietyChain {
    /// Distinct ideals `H_1, ..., H_d`; varieties ascend.
    pub ideals: Vec<PolyIdeal>,
    pub stabilized: bool,
    pub steps_used: usize,
    /// `H_1` lacked the identity and was replaced by `H_1 ∪ {I}`, which
    /// generates the same monoid.
    pub identity_adjoined: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    pub stabilized: bool,
    pub steps_used: usize,
    pub identity_adjoined: bool,
}

impl VarietyChain {
    /// The last ideal; on stabilization its variety is the closure of the monoid.
    pub fn result(&self) -> &PolyIdeal {
        self.ideals.last().expect("chain is never empty")
    }

    pub fn summary(&self) -> ChainSummary {
        ChainSummary { stabilized: self.stabilized, steps_used: self.steps_used, identity_adjoined: self.identity_adjoined }
    }
}

/// Default step cap: the number of matrix entries of the tuple.
pub fn default_chain_cap(shape: &[usize]) -> usize {
    shape_vars(shape).max(1)
}

/// Iterates the product closure until two consecutive ideals agree or
/// `cap` products have been formed.
pub fn product_chain(h1: &PolyIdeal, cap: Option<usize>, budget: &Budget) -> Result<VarietyChain, ResourceError> {
    let shape = h1.shape().to_vec();
    assert!(!shape.is_empty(), "product_chain needs a tuple-shaped ideal");
    let cap = cap.unwrap_or_else(|| default_chain_cap(&shape));
    let id = BlockMatrix::identity(&shape);
    let mut identity_adjoined = false;
    let first = if h1.contains_tuple(&id) {
        h1.clone()
    } else {
        identity_adjoined = true;
        intersect(h1, &PolyIdeal::point(&id), budget)?
    };
    let psi = product_map(&shape);
    let mut ideals = vec![first.clone()];
    let mut steps = 0;
    while steps < cap {
        steps += 1;
        let cur = ideals.last().unwrap();
        let next = image_closure(&tensor(cur, &first, budget)?, &psi, &shape, budget)?;
        if ideal_equal(&next, cur, budget)? {
            return Ok(VarietyChain { ideals, stabilized: true, steps_used: steps, identity_adjoined });
        }
        ideals.push(next);
    }
    Ok(VarietyChain { ideals, stabilized: false, steps_used: steps, identity_adjoined })
}
