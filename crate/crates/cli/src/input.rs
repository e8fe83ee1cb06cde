use std::path::Path;

use mctsi_core::mct::io::{load_model_str, load_tree_pmf_str};
use mctsi_core::mct::{builtin_model, lemma4_counterexample, BUILTIN_MODELS};
use mctsi_core::{JointPmf, MctModel, Tree};

use crate::failure::{Failure, EXIT_IO, EXIT_PARSE};

/// Name of the built-in tree-indexed pmf that is locally but not globally Markov.
pub const LEMMA4_NAME: &str = "lemma4";

/// What a model argument resolved to. Tree pmfs carry no kernels, so only
/// the verification suites and brute-force SI accept them.
pub enum Input {
    Model(MctModel),
    TreePmf(JointPmf, Tree),
}

impl Input {
    pub fn tree(&self) -> &Tree {
        match self {
            Input::Model(m) => m.tree(),
            Input::TreePmf(_, t) => t,
        }
    }

    pub fn m(&self) -> usize {
        self.tree().m()
    }

    pub fn joint_pmf(&self) -> Result<JointPmf, Failure> {
        match self {
            Input::Model(m) => Ok(m.joint_pmf()?),
            Input::TreePmf(p, _) => Ok(p.clone()),
        }
    }

    pub fn into_model(self, what: &str) -> Result<MctModel, Failure> {
        match self {
            Input::Model(m) => Ok(m),
            Input::TreePmf(..) => Err(Failure::precondition(format!(
                "{what} needs a factorized model (root pmf and kernels), not a tree pmf"
            ))),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

/// Built-in name, else a JSON file in either the model or the tree-pmf layout.
pub fn load_input(arg: &str) -> Result<Input, Failure> {
    if arg == LEMMA4_NAME {
        let (p, t) = lemma4_counterexample();
        return Ok(Input::TreePmf(p, t));
    }
    if let Some(m) = builtin_model(arg) {
        return Ok(Input::Model(m));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::new(
            EXIT_IO,
            format!(
                "{arg}: no such file and not a built-in ({}, {LEMMA4_NAME})",
                BUILTIN_MODELS.join(", ")
            ),
        ));
    }
    let text = read_file(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("parse error: {e}")))?;
    if value.get("probs").is_some() {
        let (p, t) = load_tree_pmf_str(&text)?;
        Ok(Input::TreePmf(p, t))
    } else {
        Ok(Input::Model(load_model_str(&text)?))
    }
}
