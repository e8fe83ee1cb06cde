//! Conditional-independence checks of a joint pmf against a tree.
//!
//! The pmf must have exactly `m` variables and the variable at position
//! `v - 1` is the one sitting on vertex `v`. Variable ids are ignored.

use rand::Rng;

use crate::error::{Error, Result};
use crate::info::SubsetEntropies;
use crate::pmf::JointPmf;
use crate::rng::stream_rng;
use crate::tree::{Agglomeration, Edge, Tree, Vertex, VertexSet};

/// CMI below this many bits counts as zero for joints built in floating point.
pub const DEFAULT_CMI_TOLERANCE: f64 = 1e-9;

/// Largest tree on which every (A, B, S) labelling is enumerated.
pub const EXHAUSTIVE_GLOBAL_MAX_M: usize = 10;

/// Default size cap for the independent sets tested by [`verify_local_markov`].
pub const DEFAULT_LOCAL_SET_CAP: usize = 3;

fn check_shape(pmf: &JointPmf, tree: &Tree) -> Result<()> {
    if pmf.num_vars() != tree.m() {
        return Err(Error::InvalidInput(format!(
            "pmf has {} variables, tree has {} vertices",
            pmf.num_vars(),
            tree.m()
        )));
    }
    if tree.m() > 63 {
        return Err(Error::SizeLimit(format!("{} vertices exceed the mask width", tree.m())));
    }
    Ok(())
}

fn full(m: usize) -> u64 {
    (1u64 << m) - 1
}

/// `I(X_target ; X_rest | X_given)` where `rest = B(given <- target) \ {given}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCheck {
    pub edge: Edge,
    pub given: Vertex,
    pub target: Vertex,
    pub cmi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMarkovReport {
    pub tol: f64,
    pub checks: Vec<EdgeCheck>,
}

impl EdgeMarkovReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.cmi <= self.tol)
    }

    pub fn violations(&self) -> impl Iterator<Item = &EdgeCheck> {
        self.checks.iter().filter(|c| c.cmi > self.tol)
    }

    pub fn worst(&self) -> Option<&EdgeCheck> {
        self.checks.iter().fold(None, |best: Option<&EdgeCheck>, c| match best {
            Some(b) if b.cmi >= c.cmi => Some(b),
            _ => Some(c),
        })
    }
}

/// Checks `X_j -- X_i -- X_{B(i <- j) \ {i}}` for every edge in both orientations.
pub fn verify_edge_markov(pmf: &JointPmf, tree: &Tree, tol: f64) -> Result<EdgeMarkovReport> {
    check_shape(pmf, tree)?;
    let h = SubsetEntropies::new(pmf);
    let mut checks = Vec::with_capacity(2 * tree.edges().len());
    for &(a, b) in tree.edges() {
        for (given, target) in [(a, b), (b, a)] {
            let rest = tree.branch_set(given, target)?.to_mask() & !(1u64 << (given - 1));
            let cmi = if rest == 0 {
                0.0
            } else {
                h.conditional_mutual_information(1 << (target - 1), rest, 1 << (given - 1))
            };
            checks.push(EdgeCheck {
                edge: (a, b),
                given,
                target,
                cmi,
            });
        }
    }
    Ok(EdgeMarkovReport { tol, checks })
}

/// One tested triple, as vertex bitmasks (bit `v - 1` for vertex `v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCheck {
    pub a: u64,
    pub b: u64,
    pub s: u64,
    pub cmi: f64,
}

impl TripleCheck {
    pub fn a_set(&self) -> VertexSet {
        VertexSet::from_mask(self.a)
    }

    pub fn b_set(&self) -> VertexSet {
        VertexSet::from_mask(self.b)
    }

    pub fn s_set(&self) -> VertexSet {
        VertexSet::from_mask(self.s)
    }

    /// Same triple up to swapping A and B.
    pub fn matches(&self, a: &VertexSet, b: &VertexSet, s: &VertexSet) -> bool {
        let (a, b, s) = (a.to_mask(), b.to_mask(), s.to_mask());
        self.s == s && ((self.a == a && self.b == b) || (self.a == b && self.b == a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalMode {
    /// Every labelling of the vertices by {A, B, S, none}; needs `m <= 10`.
    Exhaustive,
    /// `count` separated triples drawn by random labelling with rejection.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMarkovReport {
    pub tol: f64,
    pub mode: GlobalMode,
    /// Separated triples whose CMI was evaluated.
    pub tested: usize,
    /// Candidate triples rejected because S does not separate A and B.
    pub skipped: usize,
    pub worst: Option<TripleCheck>,
    pub violations: Vec<TripleCheck>,
}

impl GlobalMarkovReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `I(X_A ; X_B | X_S)`, or `None` when S does not separate A and B.
pub fn check_triple(
    pmf: &JointPmf,
    tree: &Tree,
    a: &VertexSet,
    b: &VertexSet,
    s: &VertexSet,
) -> Result<Option<f64>> {
    check_shape(pmf, tree)?;
    if !tree.separates(a, b, s)? {
        return Ok(None);
    }
    let h = SubsetEntropies::on_demand(pmf);
    Ok(Some(h.conditional_mutual_information(a.to_mask(), b.to_mask(), s.to_mask())))
}

/// Tests `X_A -- X_S -- X_B` for separated triples. In exhaustive mode each
/// unordered pair {A, B} is visited once, with A holding the smaller minimum.
pub fn verify_global_markov(
    pmf: &JointPmf,
    tree: &Tree,
    tol: f64,
    mode: GlobalMode,
) -> Result<GlobalMarkovReport> {
    check_shape(pmf, tree)?;
    let m = tree.m();
    let mut report = GlobalMarkovReport {
        tol,
        mode,
        tested: 0,
        skipped: 0,
        worst: None,
        violations: Vec::new(),
    };
    let record = |report: &mut GlobalMarkovReport, h: &SubsetEntropies, a, b, s| {
        if !tree.separates_masks(a, b, s) {
            report.skipped += 1;
            return;
        }
        report.tested += 1;
        let t = TripleCheck {
            a,
            b,
            s,
            cmi: h.conditional_mutual_information(a, b, s),
        };
        if report.worst.is_none_or(|w| t.cmi > w.cmi) {
            report.worst = Some(t);
        }
        if t.cmi > tol {
            report.violations.push(t);
        }
    };
    match mode {
        GlobalMode::Exhaustive => {
            if m > EXHAUSTIVE_GLOBAL_MAX_M {
                return Err(Error::SizeLimit(format!(
                    "exhaustive global check needs m <= {EXHAUSTIVE_GLOBAL_MAX_M}, got {m}"
                )));
            }
            let h = SubsetEntropies::new(pmf);
            for code in 0..4usize.pow(m as u32) {
                let (mut a, mut b, mut s) = (0u64, 0u64, 0u64);
                let mut rest = code;
                for v in 0..m {
                    match rest % 4 {
                        0 => a |= 1 << v,
                        1 => b |= 1 << v,
                        2 => s |= 1 << v,
                        _ => {}
                    }
                    rest /= 4;
                }
                if a == 0 || b == 0 || s == 0 || a.trailing_zeros() > b.trailing_zeros() {
                    continue;
                }
                record(&mut report, &h, a, b, s);
            }
        }
        GlobalMode::Sampled { count, seed } => {
            let h = SubsetEntropies::new(pmf);
            let mut rng = stream_rng(seed, 0);
            // m < 3 admits no triple at all; elsewhere this cap is never reached in practice
            let max_draws = if m < 3 { 0 } else { count.saturating_mul(1000) };
            let mut draws = 0;
            while report.tested < count && draws < max_draws {
                draws += 1;
                let (mut a, mut b, mut s) = (0u64, 0u64, 0u64);
                for v in 0..m {
                    match rng.random_range(0..4u8) {
                        0 => a |= 1 << v,
                        1 => b |= 1 << v,
                        2 => s |= 1 << v,
                        _ => {}
                    }
                }
                if a == 0 || b == 0 || s == 0 {
                    continue;
                }
                record(&mut report, &h, a, b, s);
            }
        }
    }
    Ok(report)
}

/// `I(X_A ; X_rest | X_N(A))` with `rest = M \ (A u N(A))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCheck {
    pub set: VertexSet,
    pub cmi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMarkovReport {
    pub tol: f64,
    pub checks: Vec<LocalCheck>,
}

impl LocalMarkovReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.cmi <= self.tol)
    }

    pub fn violations(&self) -> impl Iterator<Item = &LocalCheck> {
        self.checks.iter().filter(|c| c.cmi > self.tol)
    }
}

fn combinations(m: usize, k: usize, out: &mut Vec<Vec<Vertex>>) {
    fn go(start: Vertex, m: usize, k: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..=m {
            cur.push(v);
            go(v + 1, m, k, cur, out);
            cur.pop();
        }
    }
    go(1, m, k, &mut Vec::with_capacity(k), out);
}

/// Local Markov checks: every single vertex, then every independent set of
/// size `2..=set_cap`. Sets whose complement is covered by their
/// neighbourhood are vacuous and not listed.
pub fn verify_local_markov(
    pmf: &JointPmf,
    tree: &Tree,
    tol: f64,
    set_cap: usize,
) -> Result<LocalMarkovReport> {
    check_shape(pmf, tree)?;
    let m = tree.m();
    let h = SubsetEntropies::new(pmf);
    let mut sets = Vec::new();
    for k in 1..=set_cap.min(m) {
        combinations(m, k, &mut sets);
    }
    let mut checks = Vec::new();
    for members in sets {
        let set: VertexSet = members.iter().copied().collect();
        let independent = members
            .iter()
            .all(|&v| tree.neighbors(v).iter().all(|&w| !set.contains(w)));
        if !independent {
            continue;
        }
        let a = set.to_mask();
        let nb = tree.neighborhood(&set).to_mask();
        let rest = full(m) & !(a | nb);
        if rest == 0 {
            continue;
        }
        checks.push(LocalCheck {
            cmi: h.conditional_mutual_information(a, rest, nb),
            set,
        });
    }
    Ok(LocalMarkovReport { tol, checks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Check {
    pub edge: Edge,
    pub branch_mi: f64,
    pub endpoint_mi: f64,
}

impl Lemma1Check {
    pub fn diff(&self) -> f64 {
        (self.branch_mi - self.endpoint_mi).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub tol: f64,
    pub checks: Vec<Lemma1Check>,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.diff() <= self.tol)
    }

    pub fn max_diff(&self) -> f64 {
        self.checks.iter().map(Lemma1Check::diff).fold(0.0, f64::max)
    }
}

/// Compares the mutual information between the two branches of each edge
/// with the mutual information between its endpoints.
pub fn lemma1_identity_check(pmf: &JointPmf, tree: &Tree, tol: f64) -> Result<Lemma1Report> {
    check_shape(pmf, tree)?;
    let h = SubsetEntropies::new(pmf);
    let mut checks = Vec::new();
    for &(i, j) in tree.edges() {
        let bi = tree.branch_set(i, j)?.to_mask();
        let bj = full(tree.m()) & !bi;
        checks.push(Lemma1Check {
            edge: (i, j),
            branch_mi: h.mutual_information(bi, bj),
            endpoint_mi: h.mutual_information(1 << (i - 1), 1 << (j - 1)),
        });
    }
    Ok(Lemma1Report { tol, checks })
}

/// Joint of the atoms of an agglomeration as super-variables, laid out to
/// match the quotient tree (atom `u` at position `u - 1`).
pub fn agglomerate_pmf(pmf: &JointPmf, agg: &Agglomeration) -> Result<JointPmf> {
    let vars = pmf.vars();
    let groups: Vec<Vec<usize>> = agg
        .atoms
        .iter()
        .map(|atom| {
            atom.iter()
                .map(|v| {
                    vars.get(v - 1).copied().ok_or_else(|| {
                        Error::InvalidInput(format!("vertex {v} has no pmf variable"))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    pmf.group(&groups)
}
