//! Built-in models shared by tests, the acceptance suite and the CLI.

use std::collections::BTreeMap;

use super::{Kernel, MctModel};
use crate::error::{Error, Result};
use crate::pmf::JointPmf;
use crate::tree::Tree;

/// Balanced binary tree with `l` levels: vertex `i > 1` hangs off `i / 2` and
/// copies its parent through a binary symmetric channel with flip `p[i - 2]`.
/// The root is a fair bit.
pub fn example_binary_tree(l: usize, p: &[f64]) -> Result<MctModel> {
    if l == 0 || l > 24 {
        return Err(Error::InvalidParameter(format!("levels must be in 1..=24, got {l}")));
    }
    let m = (1usize << l) - 1;
    if p.len() != m - 1 {
        return Err(Error::InvalidParameter(format!(
            "{l} levels need {} flip probabilities, got {}",
            m - 1,
            p.len()
        )));
    }
    if let Some((k, &f)) = p.iter().enumerate().find(|(_, &f)| !(f > 0.0 && f < 0.5)) {
        return Err(Error::InvalidParameter(format!(
            "flip probability p[{k}] = {f} is outside (0, 0.5)"
        )));
    }
    let tree = Tree::new(m, (2..=m).map(|i| (i / 2, i)))?;
    let kernels: BTreeMap<_, _> = (2..=m).map(|i| (i, Kernel::binary_symmetric(p[i - 2]))).collect();
    MctModel::from_kernels(tree, 1, vec![2; m], vec![0.5, 0.5], kernels)
}

/// Five bits on the path 1-2-3-4-5 (U, W, X, Y, Z): U and Z fair and
/// independent, W = U, Y = Z, X = W * Y. Locally but not globally Markov.
pub fn lemma4_counterexample() -> (JointPmf, Tree) {
    let mut probs = vec![0.0; 32];
    for u in 0..2 {
        for z in 0..2 {
            let x = u * z;
            probs[(((u * 2 + u) * 2 + x) * 2 + z) * 2 + z] = 0.25;
        }
    }
    let pmf = JointPmf::new((1..=5).collect(), vec![2; 5], probs).expect("valid fixture");
    (pmf, Tree::path(5))
}

/// Path 1-2-3 rooted at 1 with a ternary middle vertex.
pub fn three_chain() -> MctModel {
    let kernels = BTreeMap::from([
        (2, vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]),
        (3, vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]]),
    ]);
    MctModel::new(Tree::path(3), 1, vec![2, 3, 2], vec![0.4, 0.6], kernels).expect("valid fixture")
}

/// Names accepted by [`builtin_model`].
pub const BUILTIN_MODELS: [&str; 4] = ["example2-l2", "example2-l2-wide", "example2-l3", "chain3"];

/// Built-in models by name: two-level binary trees with flips (0.1, 0.2) and
/// (0.1, 0.3), a three-level tree with flips 0.05..0.3, and [`three_chain`].
pub fn builtin_model(name: &str) -> Option<MctModel> {
    let model = match name {
        "example2-l2" => example_binary_tree(2, &[0.1, 0.2]),
        "example2-l2-wide" => example_binary_tree(2, &[0.1, 0.3]),
        "example2-l3" => example_binary_tree(3, &[0.05, 0.1, 0.15, 0.2, 0.25, 0.3]),
        "chain3" => Ok(three_chain()),
        _ => return None,
    };
    Some(model.expect("valid fixture"))
}
