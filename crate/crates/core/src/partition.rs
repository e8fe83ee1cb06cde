//! Set partitions of `{1, ..., m}` and their enumeration by restricted growth strings.

use std::fmt;

use crate::error::{Error, Result};
use crate::tree::{Vertex, VertexSet};

/// Largest `m` that [`enumerate_partitions`] accepts by default; `Bell(12) = 4_213_597`.
pub const DEFAULT_ENUMERATION_GUARD: usize = 12;

/// A partition of `{1..=m}` into nonempty atoms, kept in canonical form:
/// atoms sorted by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    m: usize,
    atoms: Vec<VertexSet>,
}

impl Partition {
    pub fn new<A>(m: usize, atoms: impl IntoIterator<Item = A>) -> Result<Partition>
    where
        A: IntoIterator<Item = Vertex>,
    {
        let mut atoms: Vec<VertexSet> = atoms
            .into_iter()
            .map(|a| a.into_iter().collect::<VertexSet>())
            .collect();
        if atoms.iter().any(|a| a.is_empty()) {
            return Err(Error::InvalidPartition("atoms must be nonempty".into()));
        }
        let mut seen = vec![false; m + 1];
        for a in &atoms {
            for v in a.iter() {
                if v == 0 || v > m {
                    return Err(Error::InvalidPartition(format!("{v} is outside 1..={m}")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidPartition(format!("{v} appears in two atoms")));
                }
            }
        }
        if let Some(v) = (1..=m).find(|&v| !seen[v]) {
            return Err(Error::InvalidPartition(format!("{v} is not covered")));
        }
        atoms.sort_by_key(|a| a.min());
        Ok(Partition { m, atoms })
    }

    /// Builds the partition whose restricted growth string is `rgs`
    /// (`rgs[v - 1]` is the atom index of vertex `v`).
    pub fn from_rgs(rgs: &[usize]) -> Result<Partition> {
        let mut next = 0;
        for (k, &r) in rgs.iter().enumerate() {
            if r > next {
                return Err(Error::InvalidPartition(format!(
                    "entry {k} = {r} breaks the restricted growth condition"
                )));
            }
            if r == next {
                next += 1;
            }
        }
        let mut atoms = vec![VertexSet::new(); next];
        for (k, &r) in rgs.iter().enumerate() {
            atoms[r].insert(k + 1);
        }
        Ok(Partition { m: rgs.len(), atoms })
    }

    pub fn singletons(m: usize) -> Partition {
        Partition {
            m,
            atoms: (1..=m).map(VertexSet::singleton).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of atoms.
    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[VertexSet] {
        &self.atoms
    }

    /// Index of the atom containing `v`.
    pub fn atom_of(&self, v: Vertex) -> usize {
        self.atoms
            .iter()
            .position(|a| a.contains(v))
            .expect("partition covers every vertex")
    }

    /// Restricted growth string; canonical order of partitions is the lexicographic order of this.
    pub fn rgs(&self) -> Vec<usize> {
        let mut out = vec![0; self.m];
        for (k, a) in self.atoms.iter().enumerate() {
            for v in a.iter() {
                out[v - 1] = k;
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.atoms {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Restricted growth strings of length `m` in lexicographic order, with block counts.
#[derive(Debug, Clone)]
pub(crate) struct RgsWalk {
    rgs: Vec<usize>,
    // prefix_max[k] = max(rgs[..=k])
    prefix_max: Vec<usize>,
    started: bool,
    done: bool,
}

impl RgsWalk {
    pub(crate) fn new(m: usize) -> Self {
        RgsWalk {
            rgs: vec![0; m],
            prefix_max: vec![0; m],
            started: false,
            done: m == 0,
        }
    }

    /// Advances to the next string; returns it with its block count.
    pub(crate) fn advance(&mut self) -> Option<(&[usize], usize)> {
        if self.done {
            return None;
        }
        if self.started {
            let m = self.rgs.len();
            let mut k = m;
            loop {
                if k <= 1 {
                    self.done = true;
                    return None;
                }
                k -= 1;
                if self.rgs[k] <= self.prefix_max[k - 1] {
                    break;
                }
            }
            self.rgs[k] += 1;
            self.prefix_max[k] = self.prefix_max[k - 1].max(self.rgs[k]);
            for t in k + 1..m {
                self.rgs[t] = 0;
                self.prefix_max[t] = self.prefix_max[k];
            }
        }
        self.started = true;
        let blocks = self.prefix_max[self.rgs.len() - 1] + 1;
        Some((&self.rgs, blocks))
    }
}

/// Iterator over partitions of `{1..=m}` with at least `min_atoms` atoms.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    walk: RgsWalk,
    min_atoms: usize,
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        loop {
            let (rgs, blocks) = self.walk.advance()?;
            if blocks >= self.min_atoms {
                return Some(Partition::from_rgs(rgs).expect("walk yields valid strings"));
            }
        }
    }
}

pub fn enumerate_partitions(m: usize, min_atoms: usize) -> Result<PartitionIter> {
    enumerate_partitions_with_guard(m, min_atoms, DEFAULT_ENUMERATION_GUARD)
}

pub fn enumerate_partitions_with_guard(
    m: usize,
    min_atoms: usize,
    guard: usize,
) -> Result<PartitionIter> {
    if m > guard {
        return Err(Error::SizeLimit(format!(
            "enumerating partitions of {m} elements exceeds the guard of {guard}"
        )));
    }
    if min_atoms < 2 || min_atoms > m {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= min_atoms <= m, got min_atoms = {min_atoms}, m = {m}"
        )));
    }
    Ok(PartitionIter {
        walk: RgsWalk::new(m),
        min_atoms,
    })
}

/// Bell number via the Bell triangle.
pub fn bell_number(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}
