//! Undirected trees on vertices `1..=m` and the topology queries the Markov
//! checks need: branch sets, neighborhoods, separation, components and
//! agglomeration into quotient trees.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// 1-based vertex id.
pub type Vertex = usize;

/// Unordered edge stored as `(smaller, larger)`.
pub type Edge = (Vertex, Vertex);

pub(crate) fn normalize(i: Vertex, j: Vertex) -> Edge {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// A set of vertex ids, iterated in increasing order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(BTreeSet<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(BTreeSet::new())
    }

    pub fn singleton(v: Vertex) -> Self {
        VertexSet(BTreeSet::from([v]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        self.0.insert(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn min(&self) -> Option<Vertex> {
        self.0.first().copied()
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Bitmask with bit `v - 1` set for each member.
    pub fn to_mask(&self) -> u64 {
        self.iter().fold(0, |acc, v| acc | 1u64 << (v - 1))
    }

    pub fn from_mask(mask: u64) -> VertexSet {
        (0..64).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[Vertex; N]> for VertexSet {
    fn from(vs: [Vertex; N]) -> Self {
        vs.into_iter().collect()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    m: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Vertex>>,
}

/// Quotient of a tree by a partition into connected atoms.
#[derive(Debug, Clone)]
pub struct Agglomeration {
    /// Tree on `1..=k`, vertex `u` standing for `atoms[u - 1]`.
    pub tree: Tree,
    pub atoms: Vec<VertexSet>,
    /// For each quotient edge, the lexicographically smallest original edge crossing it.
    pub witnesses: BTreeMap<Edge, Edge>,
}

impl Tree {
    pub fn new(m: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Tree> {
        if m == 0 {
            return Err(Error::InvalidTree("a tree needs at least one vertex".into()));
        }
        let mut list: Vec<Edge> = Vec::new();
        for (k, (i, j)) in edges.into_iter().enumerate() {
            if i == 0 || j == 0 || i > m || j > m {
                return Err(Error::InvalidTree(format!(
                    "edge {k} ({i}, {j}) has an endpoint outside 1..={m}"
                )));
            }
            if i == j {
                return Err(Error::InvalidTree(format!("edge {k} is a self-loop at {i}")));
            }
            list.push(normalize(i, j));
        }
        let mut sorted = list.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidTree(format!("duplicate edge {:?}", w[0])));
        }
        if sorted.len() != m - 1 {
            return Err(Error::InvalidTree(format!(
                "not a tree: {m} vertices need {} edges, got {}",
                m - 1,
                sorted.len()
            )));
        }
        let mut adj = vec![Vec::new(); m];
        for &(i, j) in &sorted {
            adj[i - 1].push(j);
            adj[j - 1].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let tree = Tree { m, edges: sorted, adj };
        let reached = tree.reachable_avoiding(1, &VertexSet::new());
        if reached.len() != m {
            return Err(Error::InvalidTree(format!(
                "not a tree: edges contain a cycle (vertex {} is unreachable from 1)",
                (1..=m).find(|v| !reached.contains(*v)).unwrap_or(0)
            )));
        }
        Ok(tree)
    }

    /// Path `1 - 2 - ... - m`.
    pub fn path(m: usize) -> Tree {
        Tree::new(m, (1..m).map(|i| (i, i + 1))).expect("a path is a tree")
    }

    /// Star with center 1.
    pub fn star(m: usize) -> Tree {
        Tree::new(m, (2..=m).map(|i| (1, i))).expect("a star is a tree")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Edges as `(smaller, larger)`, sorted lexicographically.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v - 1]
    }

    pub fn has_edge(&self, i: Vertex, j: Vertex) -> bool {
        i >= 1 && i <= self.m && self.adj[i - 1].binary_search(&j).is_ok()
    }

    pub fn vertices(&self) -> VertexSet {
        (1..=self.m).collect()
    }

    fn check_members(&self, s: &VertexSet, what: &str) -> Result<()> {
        match s.iter().find(|&v| v == 0 || v > self.m) {
            Some(v) => Err(Error::InvalidInput(format!(
                "{what} contains {v}, outside 1..={}",
                self.m
            ))),
            None => Ok(()),
        }
    }

    /// Vertices reachable from `start` without entering `blocked`.
    fn reachable_avoiding(&self, start: Vertex, blocked: &VertexSet) -> VertexSet {
        let mut seen = VertexSet::singleton(start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if !blocked.contains(w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// `B(i <- j)`: the side of edge `(i, j)` that contains `i`.
    pub fn branch_set(&self, i: Vertex, j: Vertex) -> Result<VertexSet> {
        if !self.has_edge(i, j) {
            return Err(Error::InvalidEdge(i, j));
        }
        Ok(self.reachable_avoiding(i, &VertexSet::singleton(j)))
    }

    /// `N(s)`: vertices adjacent to some member of `s`, excluding `s` itself.
    pub fn neighborhood(&self, s: &VertexSet) -> VertexSet {
        s.iter()
            .filter(|&v| v >= 1 && v <= self.m)
            .flat_map(|v| self.neighbors(v).iter().copied())
            .filter(|&w| !s.contains(w))
            .collect()
    }

    /// Whether every path from `a` to `b` passes through `s`.
    pub fn separates(&self, a: &VertexSet, b: &VertexSet, s: &VertexSet) -> Result<bool> {
        for (set, name) in [(a, "A"), (b, "B"), (s, "S")] {
            if set.is_empty() {
                return Err(Error::InvalidInput(format!("{name} must be nonempty")));
            }
            self.check_members(set, name)?;
        }
        if !a.is_disjoint(b) || !a.is_disjoint(s) || !b.is_disjoint(s) {
            return Err(Error::InvalidInput("A, B and S must be pairwise disjoint".into()));
        }
        Ok(self.separates_masks(a.to_mask(), b.to_mask(), s.to_mask()))
    }

    /// Unchecked separation test on vertex bitmasks (bit `v - 1` for vertex `v`).
    pub(crate) fn separates_masks(&self, a: u64, b: u64, s: u64) -> bool {
        let mut seen = a;
        let mut stack: Vec<usize> = (0..self.m).filter(|k| a >> k & 1 == 1).collect();
        while let Some(k) = stack.pop() {
            for &w in &self.adj[k] {
                let bit = 1u64 << (w - 1);
                if s & bit != 0 || seen & bit != 0 {
                    continue;
                }
                if b & bit != 0 {
                    return false;
                }
                seen |= bit;
                stack.push(w - 1);
            }
        }
        true
    }

    /// Maximally connected subsets of `s`, ordered by smallest member.
    pub fn components(&self, s: &VertexSet) -> Vec<VertexSet> {
        let mut out = Vec::new();
        let mut assigned = VertexSet::new();
        for v in s.iter() {
            if assigned.contains(v) || v == 0 || v > self.m {
                continue;
            }
            let mut comp = VertexSet::singleton(v);
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if s.contains(w) && comp.insert(w) {
                        stack.push(w);
                    }
                }
            }
            assigned = assigned.union(&comp);
            out.push(comp);
        }
        out
    }

    pub fn is_connected_subset(&self, s: &VertexSet) -> bool {
        self.components(s).len() == 1
    }

    /// Parent pointers (index `v - 1`) and breadth-first order from `root`,
    /// visiting neighbors in increasing id order.
    pub fn rooted(&self, root: Vertex) -> (Vec<Option<Vertex>>, Vec<Vertex>) {
        let mut parent = vec![None; self.m];
        let mut order = Vec::with_capacity(self.m);
        let mut seen = vec![false; self.m];
        seen[root - 1] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in self.neighbors(v) {
                if !seen[w - 1] {
                    seen[w - 1] = true;
                    parent[w - 1] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }

    /// Quotient tree whose vertices are the atoms of `p`.
    pub fn agglomerate(&self, p: &Partition) -> Result<Agglomeration> {
        if p.m() != self.m {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} vertices, tree has {}",
                p.m(),
                self.m
            )));
        }
        if p.k() < 2 {
            return Err(Error::InvalidPartition("agglomeration needs at least two atoms".into()));
        }
        if let Some(atom) = p.atoms().iter().find(|a| !self.is_connected_subset(a)) {
            return Err(Error::InvalidPartition(format!("atom {atom} is not connected")));
        }
        let mut witnesses = BTreeMap::new();
        for &(i, j) in &self.edges {
            let (ai, aj) = (p.atom_of(i) + 1, p.atom_of(j) + 1);
            if ai != aj {
                witnesses.entry(normalize(ai, aj)).or_insert((i, j));
            }
        }
        let tree = Tree::new(p.k(), witnesses.keys().copied())?;
        Ok(Agglomeration {
            tree,
            atoms: p.atoms().to_vec(),
            witnesses,
        })
    }
}
