//! JSON model files.
//!
//! ```json
//! { "m": 3, "cards": [2, 2, 2], "edges": [[1, 2], [1, 3]], "root": 1,
//!   "root_pmf": [0.5, 0.5],
//!   "kernels": { "2": [[0.9, 0.1], [0.1, 0.9]], "3": [["0.8", "0.2"], ["0.2", "0.8"]] } }
//! ```
//!
//! Probabilities may be JSON numbers or decimal strings. Writing always emits
//! numbers, so write-load-write is a fixed point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MctModel;
use crate::error::Error;
use crate::pmf::JointPmf;
use crate::tree::{Tree, Vertex};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    /// Malformed JSON, wrong field types, or unparsable numbers.
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed file describing an invalid model.
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Number(f64),
    Text(String),
}

impl Prob {
    fn value(&self, path: &str) -> Result<f64, LoadError> {
        match self {
            Prob::Number(x) => Ok(*x),
            Prob::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| LoadError::Parse(format!("{path}: {s:?} is not a decimal number"))),
        }
    }
}

fn values(ps: &[Prob], path: &str) -> Result<Vec<f64>, LoadError> {
    ps.iter()
        .enumerate()
        .map(|(k, p)| p.value(&format!("{path}/{k}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub m: usize,
    pub cards: Vec<usize>,
    pub edges: Vec<[Vertex; 2]>,
    pub root: Vertex,
    pub root_pmf: Vec<Prob>,
    pub kernels: BTreeMap<String, Vec<Vec<Prob>>>,
}

fn numbers(xs: &[f64]) -> Vec<Prob> {
    xs.iter().copied().map(Prob::Number).collect()
}

fn build_tree(m: usize, cards_len: usize, edges: &[[Vertex; 2]]) -> Result<Tree, LoadError> {
    if cards_len != m {
        return Err(Error::model("/cards", format!("{cards_len} cardinalities for m = {m}")).into());
    }
    Tree::new(m, edges.iter().map(|e| (e[0], e[1])))
        .map_err(|e| Error::model("/edges", e.to_string()).into())
}

impl ModelFile {
    pub fn from_model(model: &MctModel) -> ModelFile {
        ModelFile {
            m: model.m(),
            cards: model.cards().to_vec(),
            edges: model.tree().edges().iter().map(|&(i, j)| [i, j]).collect(),
            root: model.root(),
            root_pmf: numbers(model.root_pmf()),
            kernels: model
                .kernels()
                .iter()
                .map(|(j, k)| (j.to_string(), k.to_rows().iter().map(|r| numbers(r)).collect()))
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<MctModel, LoadError> {
        let tree = build_tree(self.m, self.cards.len(), &self.edges)?;
        let root_pmf = values(&self.root_pmf, "/root_pmf")?;
        let mut kernels = BTreeMap::new();
        for (key, rows) in &self.kernels {
            let path = format!("/kernels/{key}");
            let j: Vertex = key
                .parse()
                .map_err(|_| Error::model(&path, format!("{key:?} is not a vertex id")))?;
            let rows = rows
                .iter()
                .enumerate()
                .map(|(r, row)| values(row, &format!("{path}/{r}")))
                .collect::<Result<Vec<_>, _>>()?;
            kernels.insert(j, rows);
        }
        Ok(MctModel::new(tree, self.root, self.cards, root_pmf, kernels)?)
    }
}

pub fn load_model_str(text: &str) -> Result<MctModel, LoadError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))?;
    file.into_model()
}

pub fn model_to_json(model: &MctModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}

/// An arbitrary joint pmf placed on a tree, for the verification suites.
/// `probs` is in mixed-radix order with vertex `m` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreePmfFile {
    pub m: usize,
    pub cards: Vec<usize>,
    pub edges: Vec<[Vertex; 2]>,
    pub probs: Vec<Prob>,
}

impl TreePmfFile {
    pub fn from_parts(pmf: &JointPmf, tree: &Tree) -> TreePmfFile {
        TreePmfFile {
            m: tree.m(),
            cards: pmf.cards().to_vec(),
            edges: tree.edges().iter().map(|&(i, j)| [i, j]).collect(),
            probs: numbers(pmf.probs()),
        }
    }

    pub fn into_parts(self) -> Result<(JointPmf, Tree), LoadError> {
        let tree = build_tree(self.m, self.cards.len(), &self.edges)?;
        let probs = values(&self.probs, "/probs")?;
        let pmf = JointPmf::new((1..=self.m).collect(), self.cards, probs)
            .map_err(|e| Error::model("/probs", e.to_string()))?;
        Ok((pmf, tree))
    }
}

pub fn load_tree_pmf_str(text: &str) -> Result<(JointPmf, Tree), LoadError> {
    let file: TreePmfFile = serde_json::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))?;
    file.into_parts()
}

pub fn tree_pmf_to_json(pmf: &JointPmf, tree: &Tree) -> String {
    serde_json::to_string_pretty(&TreePmfFile::from_parts(pmf, tree)).expect("pmf serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mct::{example_binary_tree, lemma4_counterexample, three_chain};

    #[test]
    fn round_trip_is_fixed_point() {
        for model in [example_binary_tree(3, &[0.1, 0.2, 0.3, 0.4, 0.15, 0.35]).unwrap(), three_chain()] {
            let a = model_to_json(&model);
            let back = load_model_str(&a).unwrap();
            assert_eq!(back, model);
            assert_eq!(model_to_json(&back), a);
        }
        let (p, t) = lemma4_counterexample();
        let a = tree_pmf_to_json(&p, &t);
        let (p2, t2) = load_tree_pmf_str(&a).unwrap();
        assert_eq!((&p2, &t2), (&p, &t));
        assert_eq!(tree_pmf_to_json(&p2, &t2), a);
    }

    #[test]
    fn decimal_strings_accepted() {
        let text = r#"{"m":2,"cards":[2,2],"edges":[[1,2]],"root":1,"root_pmf":["0.5","0.5"],
            "kernels":{"2":[["0.9","0.1"],[0.25,"0.75"]]}}"#;
        let m = load_model_str(text).unwrap();
        assert_eq!(m.kernel(2).unwrap().get(1, 1), 0.75);
    }

    #[test]
    fn errors_are_classified() {
        assert!(matches!(load_model_str("{"), Err(LoadError::Parse(_))));
        let bad_num = r#"{"m":2,"cards":[2,2],"edges":[[1,2]],"root":1,"root_pmf":["half","0.5"],"kernels":{}}"#;
        assert!(matches!(load_model_str(bad_num), Err(LoadError::Parse(_))));
        let row = r#"{"m":2,"cards":[2,2],"edges":[[1,2]],"root":1,"root_pmf":[0.5,0.5],
            "kernels":{"2":[[0.5,0.4],[0.5,0.5]]}}"#;
        match load_model_str(row) {
            Err(LoadError::Invalid(Error::InvalidModel { path, .. })) => assert_eq!(path, "/kernels/2/0"),
            other => panic!("{other:?}"),
        }
        let cycle = r#"{"m":3,"cards":[2,2,2],"edges":[[1,2],[2,3],[3,1]],"root":1,"root_pmf":[0.5,0.5],"kernels":{}}"#;
        match load_model_str(cycle) {
            Err(LoadError::Invalid(Error::InvalidModel { path, reason })) => {
                assert_eq!(path, "/edges");
                assert!(reason.contains("not a tree"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }
}
