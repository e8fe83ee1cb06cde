//! Shared information: brute force over partitions for any pmf, the edge
//! formula for Markov chains on trees, and total / dual total correlation.
//!
//! Partitions address pmf variables by position: element `v` of a partition
//! of `{1..=m}` is the variable at position `v - 1`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{mutual_information, SubsetEntropies};
use crate::mct::MctModel;
use crate::partition::{Partition, RgsWalk, DEFAULT_ENUMERATION_GUARD};
use crate::pmf::{JointPmf, MarginalKey};
use crate::tree::{Edge, Tree, Vertex, VertexSet};

/// Scores this close are treated as equal when picking an argmin, so the
/// canonically first candidate wins over floating-point noise.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Negative scores down to this are rounding noise and clamp to zero.
pub const NEGATIVE_SCORE_SLACK: f64 = 1e-12;

/// Allowed disagreement between the entropy and divergence forms of a score.
pub const FORM_AGREEMENT_TOL: f64 = 1e-10;

/// Every this many partitions the brute force re-scores one by the divergence form.
const CROSS_CHECK_STRIDE: u64 = 100;

/// Cap on dense cells touched by the divergence cross-checks of one brute-force run.
const CROSS_CHECK_BUDGET: u64 = 1 << 26;

/// Partitions are scored in batches of this size on the thread pool.
const BATCH: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionScore {
    pub partition: Partition,
    pub k: usize,
    pub score_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Argmin {
    Partition(Partition),
    Edge(Edge),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BruteForce,
    MinEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiResult {
    pub value_bits: f64,
    pub argmin: Argmin,
    pub method: Method,
}

fn finish_score(raw: f64) -> Result<f64> {
    if raw < -NEGATIVE_SCORE_SLACK {
        return Err(Error::InternalConsistency(format!("partition score {raw:e} is negative")));
    }
    Ok(raw.max(0.0))
}

fn check_partition(p: &JointPmf, part: &Partition) -> Result<()> {
    if part.m() != p.num_vars() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} elements, pmf has {} variables",
            part.m(),
            p.num_vars()
        )));
    }
    if part.k() < 2 {
        return Err(Error::InvalidPartition("a score needs at least two atoms".into()));
    }
    Ok(())
}

fn masks(part: &Partition) -> Vec<u64> {
    part.atoms().iter().map(VertexSet::to_mask).collect()
}

fn entropy_form(h: &SubsetEntropies, atoms: &[u64]) -> f64 {
    let sum: f64 = atoms.iter().map(|&a| h.entropy(a)).sum();
    (sum - h.entropy(h.full_mask())) / (atoms.len() - 1) as f64
}

/// `[sum_u H(X_atom_u) - H(X_M)] / (k - 1)`.
pub fn partition_score(p: &JointPmf, part: &Partition) -> Result<PartitionScore> {
    check_partition(p, part)?;
    let h = SubsetEntropies::on_demand(p);
    Ok(PartitionScore {
        partition: part.clone(),
        k: part.k(),
        score_bits: finish_score(entropy_form(&h, &masks(part)))?,
    })
}

/// `D(P || prod_u P_atom_u) / (k - 1)`, summed cell by cell.
pub fn partition_score_divergence(p: &JointPmf, part: &Partition) -> Result<f64> {
    check_partition(p, part)?;
    Ok(divergence_form(p, &masks(part)))
}

fn divergence_form(p: &JointPmf, atoms: &[u64]) -> f64 {
    let positions: Vec<Vec<usize>> = atoms.iter().map(|&a| crate::info::mask_positions(a)).collect();
    let marginals: Vec<JointPmf> = positions.iter().map(|pos| p.marginal_at(pos)).collect();
    let cards = p.cards();
    let mut sym = vec![0usize; cards.len()];
    let mut total = 0.0;
    for &px in p.probs() {
        if px > 0.0 {
            let q: f64 = positions
                .iter()
                .zip(&marginals)
                .map(|(pos, marg)| {
                    let idx = pos.iter().fold(0, |acc, &k| acc * cards[k] + sym[k]);
                    marg.probs()[idx]
                })
                .product();
            total += px * (px / q).log2();
        }
        for k in (0..sym.len()).rev() {
            sym[k] += 1;
            if sym[k] < cards[k] {
                break;
            }
            sym[k] = 0;
        }
    }
    total / (atoms.len() - 1) as f64
}

pub fn si_brute_force(p: &JointPmf) -> Result<SiResult> {
    si_brute_force_with_guard(p, DEFAULT_ENUMERATION_GUARD)
}

/// Minimum partition score over all partitions with at least two atoms.
/// Ties go to the partition with the lexicographically smallest restricted
/// growth string.
pub fn si_brute_force_with_guard(p: &JointPmf, guard: usize) -> Result<SiResult> {
    let m = p.num_vars();
    if m < 2 {
        return Err(Error::InvalidInput("shared information needs at least two variables".into()));
    }
    if m > guard {
        return Err(Error::SizeLimit(format!(
            "brute force over partitions of {m} variables exceeds the guard of {guard}"
        )));
    }
    let h = SubsetEntropies::new(p);
    let states = p.num_states() as u64;
    let max_checks = (CROSS_CHECK_BUDGET / states.max(1)).max(1);
    let mut checks = 0u64;

    let mut walk = RgsWalk::new(m);
    let mut ordinal = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut batch: Vec<(u64, Vec<u64>, Vec<usize>)> = Vec::with_capacity(BATCH);
    loop {
        let next = walk.advance();
        let done = next.is_none();
        if let Some((rgs, blocks)) = next {
            if blocks >= 2 {
                let mut atoms = vec![0u64; blocks];
                for (v, &r) in rgs.iter().enumerate() {
                    atoms[r] |= 1 << v;
                }
                batch.push((ordinal, atoms, rgs.to_vec()));
                ordinal += 1;
            }
        }
        if batch.len() == BATCH || (done && !batch.is_empty()) {
            let scores: Vec<f64> = batch.par_iter().map(|(_, atoms, _)| entropy_form(&h, atoms)).collect();
            for ((ord, atoms, rgs), raw) in batch.drain(..).zip(scores) {
                let score = finish_score(raw)?;
                if ord % CROSS_CHECK_STRIDE == 0 && checks < max_checks {
                    checks += 1;
                    let div = divergence_form(p, &atoms);
                    if (div - score).abs() > FORM_AGREEMENT_TOL {
                        return Err(Error::InternalConsistency(format!(
                            "entropy form {score} and divergence form {div} disagree"
                        )));
                    }
                }
                if best.as_ref().is_none_or(|(b, _)| score < b - TIE_TOLERANCE) {
                    best = Some((score, rgs));
                }
            }
        }
        if done {
            break;
        }
    }
    let (value_bits, rgs) = best.expect("m >= 2 has a partition with two atoms");
    Ok(SiResult {
        value_bits,
        argmin: Argmin::Partition(Partition::from_rgs(&rgs)?),
        method: Method::BruteForce,
    })
}

/// Exact `I(X_i ; X_j)` for every tree edge, from the pair marginals.
pub fn edge_mutual_informations(model: &MctModel) -> BTreeMap<Edge, f64> {
    let marg = model.vertex_marginals();
    model
        .tree()
        .edges()
        .iter()
        .map(|&(i, j)| {
            let pair = model.edge_pmf_with(i, j, &marg).expect("tree edge");
            let mi = mutual_information(&pair, &MarginalKey::single(i), &MarginalKey::single(j))
                .expect("disjoint keys");
            ((i, j), mi)
        })
        .collect()
}

/// Minimum edge mutual information; ties go to the lexicographically first edge.
pub fn si_mct(model: &MctModel) -> Result<SiResult> {
    let mis = edge_mutual_informations(model);
    let mut best: Option<(Edge, f64)> = None;
    for (&e, &mi) in &mis {
        if best.is_none_or(|(_, b)| mi < b - TIE_TOLERANCE) {
            best = Some((e, mi));
        }
    }
    let (edge, value_bits) = best
        .ok_or_else(|| Error::InvalidInput("shared information needs at least two vertices".into()))?;
    Ok(SiResult {
        value_bits,
        argmin: Argmin::Edge(edge),
        method: Method::MinEdge,
    })
}

/// `sum_i H(X_i) - H(X_M)`.
pub fn total_correlation(p: &JointPmf) -> f64 {
    let h = SubsetEntropies::on_demand(p);
    let singles: f64 = (0..p.num_vars()).map(|k| h.entropy(1 << k)).sum();
    (singles - h.entropy(h.full_mask())).max(0.0)
}

/// `sum_{i>=2} I(X_i ; X_1, ..., X_{i-1})`.
pub fn total_correlation_chain(p: &JointPmf) -> f64 {
    let h = SubsetEntropies::on_demand(p);
    (1..p.num_vars())
        .map(|i| h.mutual_information(1 << i, (1 << i) - 1))
        .sum()
}

/// `sum_i H(X_{M \ i}) - (m - 1) H(X_M)`.
pub fn dual_total_correlation(p: &JointPmf) -> f64 {
    let h = SubsetEntropies::on_demand(p);
    let full = h.full_mask();
    let m = p.num_vars();
    let leave_one: f64 = (0..m).map(|k| h.entropy(full & !(1 << k))).sum();
    (leave_one - (m as f64 - 1.0) * h.entropy(full)).max(0.0)
}

/// The dual total correlation three ways: the leave-one-out sum,
/// `H(X_M) - sum_i H(X_i | X_{M \ i})`, and
/// `sum_i I(X_i ; X_{>i} | X_{<i})`.
pub fn dual_total_correlation_forms(p: &JointPmf) -> [f64; 3] {
    let h = SubsetEntropies::on_demand(p);
    let full = h.full_mask();
    let m = p.num_vars();
    let hm = h.entropy(full);
    let residual: f64 = (0..m).map(|k| hm - h.entropy(full & !(1 << k))).sum();
    let cmi: f64 = (0..m)
        .map(|k| {
            let before = (1u64 << k) - 1;
            let after = full & !((1u64 << (k + 1)) - 1);
            if after == 0 {
                0.0
            } else {
                h.conditional_mutual_information(1 << k, after, before)
            }
        })
        .sum();
    [dual_total_correlation(p), hm - residual, cmi]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl SandwichCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub total_correlation: f64,
    pub dual_total_correlation: f64,
    pub shared_information: f64,
    pub slack: f64,
    pub checks: Vec<SandwichCheck>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds(self.slack))
    }

    /// Largest `lhs - rhs` over the checks (negative when all hold strictly).
    pub fn worst_excess(&self) -> f64 {
        self.checks.iter().map(|c| c.lhs - c.rhs).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `C/(m-1) <= D <= (m-1) C`, `SI <= C/(m-1)` and `SI <= D`.
pub fn sandwich_check(p: &JointPmf, slack: f64) -> Result<SandwichReport> {
    let m = p.num_vars() as f64;
    let c = total_correlation(p);
    let d = dual_total_correlation(p);
    let si = si_brute_force(p)?.value_bits;
    let checks = vec![
        SandwichCheck { name: "C/(m-1) <= D", lhs: c / (m - 1.0), rhs: d },
        SandwichCheck { name: "D <= (m-1)C", lhs: d, rhs: (m - 1.0) * c },
        SandwichCheck { name: "SI <= C/(m-1)", lhs: si, rhs: c / (m - 1.0) },
        SandwichCheck { name: "SI <= D", lhs: si, rhs: d },
    ];
    Ok(SandwichReport {
        total_correlation: c,
        dual_total_correlation: d,
        shared_information: si,
        slack,
        checks,
    })
}

/// One step of turning a partition with a disconnected atom into one with
/// fewer disconnected components, never increasing the score on an MCT.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairStep {
    /// Index of the disconnected atom that was repaired.
    pub atom: usize,
    /// Connected component of that atom whose complement in the atom lies in one subtree hanging off it.
    pub component: VertexSet,
    /// Root of that subtree, outside the atom.
    pub subtree_root: Vertex,
    /// The atom merged with the atom containing `subtree_root`; absent for two-atom inputs.
    pub merged: Option<PartitionScore>,
    /// The atom split into `component` and the rest.
    pub split: PartitionScore,
    pub input_score: f64,
}

impl RepairStep {
    /// The lower-scoring candidate; the merge wins ties.
    pub fn chosen(&self) -> &PartitionScore {
        match &self.merged {
            Some(m) if m.score_bits <= self.split.score_bits => m,
            _ => &self.split,
        }
    }
}

/// Repairs the first disconnected atom (in canonical order). Among its
/// components, picks the one with the smallest vertex whose complement
/// inside the atom sits in a single subtree hanging off a boundary edge.
/// Assumes the pmf is Markov on `tree`; only then is the score guaranteed not to grow.
pub fn partition_repair_step(p: &JointPmf, part: &Partition, tree: &Tree) -> Result<RepairStep> {
    check_partition(p, part)?;
    if tree.m() != part.m() {
        return Err(Error::InvalidPartition("partition and tree sizes differ".into()));
    }
    let Some((idx, comps)) = part
        .atoms()
        .iter()
        .enumerate()
        .map(|(k, a)| (k, tree.components(a)))
        .find(|(_, c)| c.len() > 1)
    else {
        return Err(Error::NoOp("every atom is connected".into()));
    };
    let atom = &part.atoms()[idx];
    let mut found = None;
    'outer: for comp in &comps {
        let rest = atom.difference(comp);
        for a in comp.iter() {
            for &j in tree.neighbors(a) {
                if atom.contains(j) {
                    continue;
                }
                if rest.is_subset(&tree.branch_set(j, a)?) {
                    found = Some((comp.clone(), rest, j));
                    break 'outer;
                }
            }
        }
    }
    let (component, rest, j) = found.ok_or_else(|| {
        Error::InternalConsistency("no component isolates the rest of its atom".into())
    })?;
    let u = part.atom_of(j);
    let others = || {
        part.atoms()
            .iter()
            .enumerate()
            .filter(move |&(v, _)| v != idx && v != u)
            .map(|(_, a)| a.to_vec())
    };
    let merged = if part.k() >= 3 {
        let mut atoms = vec![atom.union(&part.atoms()[u]).to_vec()];
        atoms.extend(others());
        Some(partition_score(p, &Partition::new(part.m(), atoms)?)?)
    } else {
        None
    };
    let mut atoms = vec![rest.to_vec(), component.to_vec(), part.atoms()[u].to_vec()];
    atoms.extend(others());
    let split = partition_score(p, &Partition::new(part.m(), atoms)?)?;
    Ok(RepairStep {
        atom: idx,
        component,
        subtree_root: j,
        merged,
        split,
        input_score: partition_score(p, part)?.score_bits,
    })
}

/// Applies [`partition_repair_step`] until every atom is connected. Returns
/// the sequence of partitions visited, starting with the input.
pub fn repair_to_connected(p: &JointPmf, part: &Partition, tree: &Tree) -> Result<Vec<PartitionScore>> {
    let mut trail = vec![partition_score(p, part)?];
    loop {
        let current = &trail.last().expect("nonempty").partition;
        match partition_repair_step(p, current, tree) {
            Ok(step) => trail.push(step.chosen().clone()),
            Err(Error::NoOp(_)) => return Ok(trail),
            Err(e) => return Err(e),
        }
    }
}
