//! Markov chains on trees: a root pmf plus one row-stochastic kernel per
//! non-root vertex, oriented away from the root.

mod fixtures;
pub mod io;
mod verify;

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pmf::{state_count, stable_sum, JointPmf, DENSE_STATE_LIMIT, SUM_TOLERANCE};
use crate::rng::stream_rng;
use crate::tree::{Tree, Vertex};

pub use fixtures::{
    builtin_model, example_binary_tree, lemma4_counterexample, three_chain, BUILTIN_MODELS,
};
pub use verify::{
    agglomerate_pmf, check_triple, lemma1_identity_check, verify_edge_markov,
    verify_global_markov, verify_local_markov, EdgeCheck, EdgeMarkovReport, GlobalMarkovReport,
    GlobalMode, Lemma1Check, Lemma1Report, LocalCheck, LocalMarkovReport, TripleCheck,
    DEFAULT_CMI_TOLERANCE, DEFAULT_LOCAL_SET_CAP, EXHAUSTIVE_GLOBAL_MAX_M,
};

/// Row-stochastic matrix `P(child = c | parent = r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

fn check_distribution(values: &[f64], path: &str) -> Result<()> {
    if let Some(k) = values.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::model(
            format!("{path}/{k}"),
            format!("probability {} must be finite and nonnegative", values[k]),
        ));
    }
    let total = stable_sum(values);
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::model(path, format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Kernel> {
        Self::validated(rows, "")
    }

    fn validated(rows: Vec<Vec<f64>>, path: &str) -> Result<Kernel> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::model(path, "kernel must have at least one row and column"));
        }
        for (r, row) in rows.iter().enumerate() {
            let row_path = format!("{path}/{r}");
            if row.len() != cols {
                return Err(Error::model(
                    row_path,
                    format!("row has {} entries, expected {cols}", row.len()),
                ));
            }
            check_distribution(row, &row_path)?;
        }
        Ok(Kernel {
            rows: rows.len(),
            cols,
            probs: rows.into_iter().flatten().collect(),
        })
    }

    /// Binary symmetric channel with crossover probability `flip`.
    pub fn binary_symmetric(flip: f64) -> Kernel {
        Kernel {
            rows: 2,
            cols: 2,
            probs: vec![1.0 - flip, flip, flip, 1.0 - flip],
        }
    }

    pub fn identity(card: usize) -> Kernel {
        let mut probs = vec![0.0; card * card];
        for k in 0..card {
            probs[k * card + k] = 1.0;
        }
        Kernel {
            rows: card,
            cols: card,
            probs,
        }
    }

    /// Parent alphabet size.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Child alphabet size.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, parent_symbol: usize) -> &[f64] {
        &self.probs[parent_symbol * self.cols..(parent_symbol + 1) * self.cols]
    }

    pub fn get(&self, parent_symbol: usize, child_symbol: usize) -> f64 {
        self.probs[parent_symbol * self.cols + child_symbol]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Pushes a distribution over the parent alphabet through the kernel.
    pub fn push(&self, parent: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &w) in parent.iter().enumerate() {
            for (o, &k) in out.iter_mut().zip(self.row(r)) {
                *o += w * k;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctModel {
    tree: Tree,
    root: Vertex,
    cards: Vec<usize>,
    root_pmf: Vec<f64>,
    kernels: BTreeMap<Vertex, Kernel>,
    parent: Vec<Option<Vertex>>,
    order: Vec<Vertex>,
}

/// `n` joint draws, one column per vertex, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMatrix {
    m: usize,
    n: usize,
    values: Vec<u32>,
}

impl SampleMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Row `r` (0-based); entry `v - 1` is the symbol at vertex `v`.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.values[r * self.m..(r + 1) * self.m]
    }

    pub fn get(&self, r: usize, v: Vertex) -> u32 {
        self.values[r * self.m + v - 1]
    }

    /// Symbols at vertex `v` over rows `range`.
    pub fn column(&self, v: Vertex, range: std::ops::Range<usize>) -> Vec<u32> {
        range.map(|r| self.get(r, v)).collect()
    }
}

struct Cdf(Vec<f64>, usize);

impl Cdf {
    fn new(probs: &[f64]) -> Cdf {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Cdf(cdf, last)
    }

    fn draw(&self, u: f64) -> usize {
        self.0.iter().position(|&c| u < c).unwrap_or(self.1)
    }
}

impl MctModel {
    /// Validates and builds a model. `kernels[j]` is `P(X_j | X_parent(j))`
    /// for every non-root vertex, with one row per parent symbol. Errors carry
    /// a JSON pointer into the model file layout.
    pub fn new(
        tree: Tree,
        root: Vertex,
        cards: Vec<usize>,
        root_pmf: Vec<f64>,
        kernels: BTreeMap<Vertex, Vec<Vec<f64>>>,
    ) -> Result<MctModel> {
        let m = tree.m();
        if cards.len() != m {
            return Err(Error::model(
                "/cards",
                format!("{} cardinalities for {m} vertices", cards.len()),
            ));
        }
        if let Some(k) = cards.iter().position(|&c| c == 0) {
            return Err(Error::model(format!("/cards/{k}"), "alphabet must be nonempty"));
        }
        if root == 0 || root > m {
            return Err(Error::model("/root", format!("root {root} is outside 1..={m}")));
        }
        if root_pmf.len() != cards[root - 1] {
            return Err(Error::model(
                "/root_pmf",
                format!(
                    "{} probabilities for a root alphabet of size {}",
                    root_pmf.len(),
                    cards[root - 1]
                ),
            ));
        }
        check_distribution(&root_pmf, "/root_pmf")?;
        let (parent, order) = tree.rooted(root);
        if let Some(&j) = kernels.keys().find(|&&j| j == 0 || j > m) {
            return Err(Error::model(format!("/kernels/{j}"), format!("vertex {j} is outside 1..={m}")));
        }
        if kernels.contains_key(&root) {
            return Err(Error::model(format!("/kernels/{root}"), "the root has no kernel"));
        }
        let mut built = BTreeMap::new();
        for j in 1..=m {
            let Some(p) = parent[j - 1] else { continue };
            let path = format!("/kernels/{j}");
            let rows = kernels
                .get(&j)
                .ok_or_else(|| Error::model(&path, format!("missing kernel for vertex {j}")))?;
            if rows.len() != cards[p - 1] {
                return Err(Error::model(
                    &path,
                    format!(
                        "kernel has {} rows, parent {p} has alphabet size {}",
                        rows.len(),
                        cards[p - 1]
                    ),
                ));
            }
            if let Some(r) = rows.iter().position(|row| row.len() != cards[j - 1]) {
                return Err(Error::model(
                    format!("{path}/{r}"),
                    format!(
                        "row has {} entries, vertex {j} has alphabet size {}",
                        rows[r].len(),
                        cards[j - 1]
                    ),
                ));
            }
            built.insert(j, Kernel::validated(rows.clone(), &path)?);
        }
        Ok(MctModel {
            tree,
            root,
            cards,
            root_pmf,
            kernels: built,
            parent,
            order,
        })
    }

    /// Builds a model from already validated kernels.
    pub fn from_kernels(
        tree: Tree,
        root: Vertex,
        cards: Vec<usize>,
        root_pmf: Vec<f64>,
        kernels: BTreeMap<Vertex, Kernel>,
    ) -> Result<MctModel> {
        let raw = kernels.iter().map(|(&j, k)| (j, k.to_rows())).collect();
        Self::new(tree, root, cards, root_pmf, raw)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn m(&self) -> usize {
        self.tree.m()
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn root_pmf(&self) -> &[f64] {
        &self.root_pmf
    }

    pub fn kernels(&self) -> &BTreeMap<Vertex, Kernel> {
        &self.kernels
    }

    pub fn kernel(&self, v: Vertex) -> Option<&Kernel> {
        self.kernels.get(&v)
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v - 1]
    }

    /// Vertices in breadth-first order from the root.
    pub fn bfs_order(&self) -> &[Vertex] {
        &self.order
    }

    /// Single-vertex marginals (index `v - 1`), pushed down from the root.
    pub fn vertex_marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.m()];
        out[self.root - 1] = self.root_pmf.clone();
        for &v in &self.order[1..] {
            let p = self.parent[v - 1].expect("non-root vertex");
            out[v - 1] = self.kernels[&v].push(&out[p - 1]);
        }
        out
    }

    /// Pair marginal of the endpoints of edge `(i, j)`, with variables `[i, j]`.
    pub fn edge_pmf(&self, i: Vertex, j: Vertex) -> Result<JointPmf> {
        self.edge_pmf_with(i, j, &self.vertex_marginals())
    }

    pub(crate) fn edge_pmf_with(&self, i: Vertex, j: Vertex, marg: &[Vec<f64>]) -> Result<JointPmf> {
        if !self.tree.has_edge(i, j) {
            return Err(Error::InvalidEdge(i, j));
        }
        let (p, c) = if self.parent[j - 1] == Some(i) { (i, j) } else { (j, i) };
        let k = &self.kernels[&c];
        let (cp, cc) = (self.cards[p - 1], self.cards[c - 1]);
        let (ci, cj) = (self.cards[i - 1], self.cards[j - 1]);
        let mut probs = vec![0.0; ci * cj];
        for xp in 0..cp {
            for xc in 0..cc {
                let w = marg[p - 1][xp] * k.get(xp, xc);
                let idx = if p == i { xp * cj + xc } else { xc * cj + xp };
                probs[idx] = w;
            }
        }
        Ok(JointPmf::from_parts_unchecked(vec![i, j], vec![ci, cj], probs))
    }

    pub fn joint_pmf(&self) -> Result<JointPmf> {
        self.joint_pmf_with_limit(DENSE_STATE_LIMIT)
    }

    /// Dense joint over variables `1..=m` (vertex `v` at position `v - 1`).
    pub fn joint_pmf_with_limit(&self, limit: usize) -> Result<JointPmf> {
        let states = state_count(&self.cards, limit)?;
        let m = self.m();
        let mut probs = vec![0.0; states];
        let mut x = vec![0usize; m];
        for (idx, slot) in probs.iter_mut().enumerate() {
            let mut rest = idx;
            for v in (0..m).rev() {
                x[v] = rest % self.cards[v];
                rest /= self.cards[v];
            }
            let mut p = self.root_pmf[x[self.root - 1]];
            for (&j, k) in &self.kernels {
                if p == 0.0 {
                    break;
                }
                let par = self.parent[j - 1].expect("kernel vertices have parents");
                p *= k.get(x[par - 1], x[j - 1]);
            }
            *slot = p;
        }
        Ok(JointPmf::from_parts_unchecked(
            (1..=m).collect(),
            self.cards.clone(),
            probs,
        ))
    }

    /// `n` i.i.d. draws by ancestral sampling, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> SampleMatrix {
        self.sample_with_rng(n, &mut stream_rng(seed, 0))
    }

    pub fn sample_with_rng(&self, n: usize, rng: &mut impl Rng) -> SampleMatrix {
        let m = self.m();
        let root_cdf = Cdf::new(&self.root_pmf);
        // cdfs[v - 1][parent symbol]
        let cdfs: Vec<Vec<Cdf>> = (1..=m)
            .map(|v| match self.kernels.get(&v) {
                Some(k) => (0..k.rows()).map(|r| Cdf::new(k.row(r))).collect(),
                None => Vec::new(),
            })
            .collect();
        let mut values = vec![0u32; n * m];
        for row in values.chunks_exact_mut(m) {
            row[self.root - 1] = root_cdf.draw(rng.random::<f64>()) as u32;
            for &v in &self.order[1..] {
                let p = self.parent[v - 1].expect("non-root vertex");
                let ps = row[p - 1] as usize;
                row[v - 1] = cdfs[v - 1][ps].draw(rng.random::<f64>()) as u32;
            }
        }
        SampleMatrix { m, n, values }
    }
}
