//! Base-2 information measures on dense pmfs.
//!
//! All quantities are in bits, with `0 log 0 = 0`. Differences of entropies
//! that land in `[-1e-12, 0)` are clamped to zero; anything more negative is
//! returned unchanged so that a genuine bug stays visible.

use crate::error::{Error, Result};
use crate::pmf::{JointPmf, MarginalKey};

/// Slack below zero that is attributed to floating-point cancellation.
pub const NEGATIVE_SLACK: f64 = 1e-12;

pub(crate) fn clamp_tiny(v: f64) -> f64 {
    if v < 0.0 && v >= -NEGATIVE_SLACK {
        0.0
    } else {
        v
    }
}

/// Entropy in bits of a probability vector.
pub fn entropy_of_probs(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

pub fn entropy(p: &JointPmf) -> f64 {
    entropy_of_probs(p.probs())
}

fn joint_positions(p: &JointPmf, keys: &[&MarginalKey]) -> Result<Vec<Vec<usize>>> {
    for (k, a) in keys.iter().enumerate() {
        for b in &keys[..k] {
            if !a.is_disjoint(b) {
                return Err(Error::InvalidKey(format!(
                    "keys {:?} and {:?} overlap",
                    b.ids(),
                    a.ids()
                )));
            }
        }
    }
    keys.iter().map(|k| p.positions_of(k.ids())).collect()
}

fn h_at(p: &JointPmf, positions: &[usize]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    entropy(&p.marginal_at(positions))
}

fn concat(parts: &[&[usize]]) -> Vec<usize> {
    parts.iter().flat_map(|s| s.iter().copied()).collect()
}

/// `I(A; B) = H(A) + H(B) - H(A, B)`.
pub fn mutual_information(p: &JointPmf, a: &MarginalKey, b: &MarginalKey) -> Result<f64> {
    let pos = joint_positions(p, &[a, b])?;
    let v = h_at(p, &pos[0]) + h_at(p, &pos[1]) - h_at(p, &concat(&[&pos[0], &pos[1]]));
    Ok(clamp_tiny(v))
}

/// `I(A; B | S) = H(A,S) + H(B,S) - H(A,B,S) - H(S)`.
pub fn conditional_mutual_information(
    p: &JointPmf,
    a: &MarginalKey,
    b: &MarginalKey,
    s: &MarginalKey,
) -> Result<f64> {
    let pos = joint_positions(p, &[a, b, s])?;
    let (a, b, s) = (&pos[0], &pos[1], &pos[2]);
    let v = h_at(p, &concat(&[a, s])) + h_at(p, &concat(&[b, s]))
        - h_at(p, &concat(&[a, b, s]))
        - h_at(p, s);
    Ok(clamp_tiny(v))
}

/// `D(p ‖ q)` in bits. Fails with [`Error::InfiniteDivergence`] when `p` is not
/// absolutely continuous with respect to `q`.
pub fn kl_divergence(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.vars() != q.vars() || p.cards() != q.cards() {
        return Err(Error::InvalidKey(
            "divergence needs pmfs over the same variables and alphabets".into(),
        ));
    }
    let mut d = 0.0;
    for (&pp, &qq) in p.probs().iter().zip(q.probs()) {
        if pp > 0.0 {
            if qq <= 0.0 {
                return Err(Error::InfiniteDivergence);
            }
            d += pp * (pp / qq).log2();
        }
    }
    Ok(clamp_tiny(d))
}

/// Joint entropies of every subset of a pmf's variables, addressed by bitmask
/// over axis positions (bit `k` is the `k`-th variable of the pmf).
///
/// When the full table is affordable it is built once by peeling variables
/// off in a depth-first walk; otherwise entropies are computed on demand.
#[derive(Debug, Clone)]
pub struct SubsetEntropies<'a> {
    pmf: &'a JointPmf,
    table: Option<Vec<f64>>,
}

/// Work budget (in summed table cells) for building a full subset table.
const SUBSET_TABLE_BUDGET: f64 = (1u64 << 28) as f64;

impl<'a> SubsetEntropies<'a> {
    pub fn new(pmf: &'a JointPmf) -> Self {
        let m = pmf.num_vars();
        let cost: f64 = pmf.cards().iter().map(|&c| (c + 1) as f64).product();
        let table = (m <= 24 && cost <= SUBSET_TABLE_BUDGET).then(|| build_table(pmf));
        SubsetEntropies { pmf, table }
    }

    /// Never materializes the table.
    pub fn on_demand(pmf: &'a JointPmf) -> Self {
        SubsetEntropies { pmf, table: None }
    }

    pub fn pmf(&self) -> &JointPmf {
        self.pmf
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.pmf.num_vars()) - 1
    }

    pub fn entropy(&self, mask: u64) -> f64 {
        match &self.table {
            Some(t) => t[mask as usize],
            None => h_at(self.pmf, &mask_positions(mask)),
        }
    }

    pub fn mutual_information(&self, a: u64, b: u64) -> f64 {
        debug_assert_eq!(a & b, 0);
        clamp_tiny(self.entropy(a) + self.entropy(b) - self.entropy(a | b))
    }

    pub fn conditional_mutual_information(&self, a: u64, b: u64, s: u64) -> f64 {
        debug_assert_eq!(a & b, 0);
        debug_assert_eq!((a | b) & s, 0);
        clamp_tiny(
            self.entropy(a | s) + self.entropy(b | s) - self.entropy(a | b | s) - self.entropy(s),
        )
    }
}

pub(crate) fn mask_positions(mask: u64) -> Vec<usize> {
    (0..64).filter(|k| mask >> k & 1 == 1).collect()
}

fn build_table(pmf: &JointPmf) -> Vec<f64> {
    let m = pmf.num_vars();
    let mut out = vec![0.0; 1usize << m];
    // relabel axes by position so the walk can find them after marginalizing
    let root = JointPmf::from_parts_unchecked(
        (0..m).collect(),
        pmf.cards().to_vec(),
        pmf.probs().to_vec(),
    );
    visit(&root, (1u64 << m) - 1, 0, m, &mut out);
    out
}

fn visit(table: &JointPmf, mask: u64, start: usize, m: usize, out: &mut [f64]) {
    out[mask as usize] = if mask == 0 { 0.0 } else { entropy(table) };
    for v in start..m {
        if mask >> v & 1 == 0 {
            continue;
        }
        let keep: Vec<usize> = (0..table.num_vars())
            .filter(|&k| table.vars()[k] != v)
            .collect();
        let child = table.marginal_at(&keep);
        visit(&child, mask & !(1u64 << v), v + 1, m, out);
    }
}
