//! Dense joint pmfs over products of finite alphabets.
//!
//! Outcomes are stored flat in mixed-radix order with the last variable
//! varying fastest, so the outcome `(x_1, ..., x_m)` lives at index
//! `((x_1 * c_2 + x_2) * c_3 + x_3) ...`.

use crate::error::{Error, Result};

/// Identifier of a random variable inside a [`JointPmf`].
pub type VarId = usize;

/// Largest number of outcomes a dense pmf may hold unless a caller opts into another limit.
pub const DENSE_STATE_LIMIT: usize = 1 << 24;

/// Probabilities must sum to one within this slack.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Dense probability tensor over a product of finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

/// An ordered subset of the variables of a pmf.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginalKey(Vec<VarId>);

impl MarginalKey {
    pub fn new(ids: impl IntoIterator<Item = VarId>) -> Result<Self> {
        let ids: Vec<VarId> = ids.into_iter().collect();
        if ids.is_empty() {
            return Err(Error::InvalidKey("key must name at least one variable".into()));
        }
        for (k, id) in ids.iter().enumerate() {
            if ids[..k].contains(id) {
                return Err(Error::InvalidKey(format!("variable {id} listed twice")));
            }
        }
        Ok(MarginalKey(ids))
    }

    pub fn single(id: VarId) -> Self {
        MarginalKey(vec![id])
    }

    pub fn ids(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_disjoint(&self, other: &MarginalKey) -> bool {
        self.0.iter().all(|id| !other.0.contains(id))
    }
}

/// Compensated summation; long probability vectors lose too much with naive accumulation.
pub(crate) fn stable_sum<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn state_count(cards: &[usize], limit: usize) -> Result<usize> {
    let mut total: usize = 1;
    for &c in cards {
        total = total
            .checked_mul(c)
            .filter(|&t| t <= limit)
            .ok_or_else(|| {
                Error::SizeLimit(format!(
                    "product of cardinalities {cards:?} exceeds the dense limit of {limit} states"
                ))
            })?;
    }
    Ok(total)
}

impl JointPmf {
    pub fn new(vars: Vec<VarId>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        Self::with_state_limit(vars, cards, probs, DENSE_STATE_LIMIT)
    }

    pub fn with_state_limit(
        vars: Vec<VarId>,
        cards: Vec<usize>,
        probs: Vec<f64>,
        limit: usize,
    ) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidPmf("a pmf needs at least one variable".into()));
        }
        if vars.len() != cards.len() {
            return Err(Error::InvalidPmf(format!(
                "{} variables but {} cardinalities",
                vars.len(),
                cards.len()
            )));
        }
        for (k, v) in vars.iter().enumerate() {
            if vars[..k].contains(v) {
                return Err(Error::InvalidPmf(format!("variable {v} listed twice")));
            }
        }
        if let Some(pos) = cards.iter().position(|&c| c == 0) {
            return Err(Error::InvalidPmf(format!(
                "variable {} has an empty alphabet",
                vars[pos]
            )));
        }
        let states = state_count(&cards, limit)?;
        if probs.len() != states {
            return Err(Error::InvalidPmf(format!(
                "expected {states} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(idx) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPmf(format!(
                "entry {idx} is {} (must be finite and nonnegative)",
                probs[idx]
            )));
        }
        let total = stable_sum(&probs);
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        Ok(JointPmf { vars, cards, probs })
    }

    /// Uniform pmf over the product alphabet.
    pub fn uniform(vars: Vec<VarId>, cards: Vec<usize>) -> Result<Self> {
        let states = state_count(&cards, DENSE_STATE_LIMIT)?;
        Self::new(vars, cards, vec![1.0 / states as f64; states])
    }

    /// Builds a pmf from unnormalized nonnegative weights.
    pub fn from_weights(vars: Vec<VarId>, cards: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let total = stable_sum(&weights);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(vars, cards, probs)
    }

    pub(crate) fn from_parts_unchecked(vars: Vec<VarId>, cards: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(cards.iter().product::<usize>(), probs.len());
        JointPmf { vars, cards, probs }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    /// Position of a variable id in the axis order.
    pub fn position(&self, var: VarId) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }

    pub(crate) fn positions_of(&self, ids: &[VarId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.position(id)
                    .ok_or_else(|| Error::InvalidKey(format!("unknown variable id {id}")))
            })
            .collect()
    }

    /// Flat index of an outcome given one symbol per variable.
    pub fn index_of(&self, symbols: &[usize]) -> usize {
        debug_assert_eq!(symbols.len(), self.cards.len());
        symbols
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    pub fn prob(&self, symbols: &[usize]) -> f64 {
        self.probs[self.index_of(symbols)]
    }

    /// Decodes a flat index into per-variable symbols.
    pub fn symbols_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for (slot, &c) in out.iter_mut().zip(&self.cards).rev() {
            *slot = index % c;
            index /= c;
        }
        out
    }

    pub fn marginalize(&self, key: &MarginalKey) -> Result<JointPmf> {
        let positions = self.positions_of(key.ids())?;
        Ok(self.marginal_at(&positions))
    }

    /// Marginal over the given axis positions, in the given order. An empty
    /// position list yields a scalar pmf with no variables.
    pub(crate) fn marginal_at(&self, positions: &[usize]) -> JointPmf {
        let out_cards: Vec<usize> = positions.iter().map(|&p| self.cards[p]).collect();
        let out_len: usize = out_cards.iter().product();
        let mut out_stride = vec![0usize; self.cards.len()];
        let mut s = 1;
        for (&p, &c) in positions.iter().zip(&out_cards).rev() {
            out_stride[p] = s;
            s *= c;
        }
        let mut out = vec![0.0; out_len];
        let mut digits = vec![0usize; self.cards.len()];
        let mut oi = 0usize;
        let last = self.cards.len();
        for &p in &self.probs {
            out[oi] += p;
            // odometer increment, last axis fastest
            let mut axis = last;
            while axis > 0 {
                axis -= 1;
                digits[axis] += 1;
                oi += out_stride[axis];
                if digits[axis] < self.cards[axis] {
                    break;
                }
                oi -= self.cards[axis] * out_stride[axis];
                digits[axis] = 0;
            }
        }
        JointPmf {
            vars: positions.iter().map(|&p| self.vars[p]).collect(),
            cards: out_cards,
            probs: out,
        }
    }

    /// Independent product `self ⊗ other`; variable ids must be disjoint.
    pub fn product(&self, other: &JointPmf) -> Result<JointPmf> {
        if let Some(v) = self.vars.iter().find(|v| other.vars.contains(v)) {
            return Err(Error::InvalidKey(format!("variable {v} appears in both factors")));
        }
        let mut vars = self.vars.clone();
        vars.extend(&other.vars);
        let mut cards = self.cards.clone();
        cards.extend(&other.cards);
        state_count(&cards, DENSE_STATE_LIMIT)?;
        let probs = self
            .probs
            .iter()
            .flat_map(|&a| other.probs.iter().map(move |&b| a * b))
            .collect();
        Ok(JointPmf { vars, cards, probs })
    }

    /// Treats each group of variables as one super-variable. The result has
    /// variable ids `1..=groups.len()`; group `g` has cardinality equal to the
    /// product of its members' cardinalities, enumerated in mixed-radix order
    /// over the members as listed. Groups must cover every variable exactly once.
    pub fn group(&self, groups: &[Vec<VarId>]) -> Result<JointPmf> {
        let order: Vec<VarId> = groups.iter().flatten().copied().collect();
        if order.len() != self.vars.len() || groups.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidKey(
                "groups must be nonempty and cover every variable exactly once".into(),
            ));
        }
        let key = MarginalKey::new(order)?;
        let permuted = self.marginalize(&key)?;
        let cards = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&id| self.cards[self.position(id).expect("validated by marginalize")])
                    .product()
            })
            .collect();
        Ok(JointPmf {
            vars: (1..=groups.len()).collect(),
            cards,
            probs: permuted.probs,
        })
    }
}
