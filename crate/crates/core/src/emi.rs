//! Plug-in (empirical) mutual information and the finite-sample bounds around it.
//!
//! Entropies and gaps are in bits. Every `exp` in a bound is base e while the
//! `log^2 n` inside it is base 2.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pmf::{JointPmf, SUM_TOLERANCE};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSamples {
    xs: Vec<u32>,
    ys: Vec<u32>,
    card_x: usize,
    card_y: usize,
}

impl PairSamples {
    pub fn new(xs: Vec<u32>, ys: Vec<u32>, card_x: usize, card_y: usize) -> Result<PairSamples> {
        check_pair(&xs, &ys, card_x, card_y)?;
        Ok(PairSamples { xs, ys, card_x, card_y })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[u32] {
        &self.xs
    }

    pub fn ys(&self) -> &[u32] {
        &self.ys
    }

    pub fn card_x(&self) -> usize {
        self.card_x
    }

    pub fn card_y(&self) -> usize {
        self.card_y
    }

    pub fn types(&self) -> TypeCounts {
        TypeCounts::from_checked(&self.xs, &self.ys, self.card_x, self.card_y)
    }
}

fn check_pair(xs: &[u32], ys: &[u32], card_x: usize, card_y: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "sequences have lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if let Some(&x) = xs.iter().find(|&&x| x as usize >= card_x) {
        return Err(Error::InvalidInput(format!("x symbol {x} outside alphabet of size {card_x}")));
    }
    if let Some(&y) = ys.iter().find(|&&y| y as usize >= card_y) {
        return Err(Error::InvalidInput(format!("y symbol {y} outside alphabet of size {card_y}")));
    }
    Ok(())
}

/// Joint type of a sequence pair, as counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCounts {
    card_x: usize,
    card_y: usize,
    joint: Vec<u64>,
    n: u64,
}

/// `sum c log2 c` over counts.
fn clogc(counts: impl Iterator<Item = u64>) -> f64 {
    counts
        .filter(|&c| c > 1)
        .map(|c| {
            let c = c as f64;
            c * c.log2()
        })
        .sum()
}

impl TypeCounts {
    pub fn from_slices(xs: &[u32], ys: &[u32], card_x: usize, card_y: usize) -> Result<TypeCounts> {
        check_pair(xs, ys, card_x, card_y)?;
        Ok(Self::from_checked(xs, ys, card_x, card_y))
    }

    pub(crate) fn from_checked(xs: &[u32], ys: &[u32], card_x: usize, card_y: usize) -> TypeCounts {
        let mut joint = vec![0u64; card_x * card_y];
        for (&x, &y) in xs.iter().zip(ys) {
            joint[x as usize * card_y + y as usize] += 1;
        }
        TypeCounts {
            card_x,
            card_y,
            joint,
            n: xs.len() as u64,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn joint(&self, x: usize, y: usize) -> u64 {
        self.joint[x * self.card_y + y]
    }

    pub fn x_counts(&self) -> Vec<u64> {
        self.joint.chunks(self.card_y).map(|r| r.iter().sum()).collect()
    }

    pub fn y_counts(&self) -> Vec<u64> {
        (0..self.card_y)
            .map(|y| (0..self.card_x).map(|x| self.joint(x, y)).sum())
            .collect()
    }

    fn shift(&mut self, x: u32, y: u32, up: bool) {
        let cell = &mut self.joint[x as usize * self.card_y + y as usize];
        if up {
            *cell += 1;
        } else {
            *cell -= 1;
        }
    }

    /// `H(Q_x) + H(Q_y) - H(Q_xy)`, evaluated as
    /// `log2 n - [sum c_x log c_x + sum c_y log c_y - sum c_xy log c_xy] / n`.
    pub fn emi(&self) -> f64 {
        let n = self.n as f64;
        let s = clogc(self.x_counts().into_iter()) + clogc(self.y_counts().into_iter())
            - clogc(self.joint.iter().copied());
        (n.log2() - s / n).max(0.0)
    }
}

pub fn empirical_mi(s: &PairSamples) -> f64 {
    s.types().emi()
}

/// A probability bound clamped to `[0, 1]`; `vacuous` when the formula gives at least 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub raw: f64,
    pub vacuous: bool,
}

impl Bound {
    pub fn from_raw(raw: f64) -> Bound {
        Bound {
            value: raw.clamp(0.0, 1.0),
            raw,
            vacuous: raw >= 1.0,
        }
    }
}

/// `(lower, upper)` on `E[EMI] - I` for alphabets of the given sizes and `n` samples.
pub fn emi_bias_bounds(card_x: usize, card_y: usize, n: u64) -> Result<(f64, f64)> {
    if n == 0 || card_x == 0 || card_y == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and nonempty alphabets".into()));
    }
    let n = n as f64;
    let lower = -((1.0 + (card_x as f64 - 1.0) / n) * (1.0 + (card_y as f64 - 1.0) / n)).log2();
    let upper = (1.0 + ((card_x * card_y) as f64 - 1.0) / n).log2();
    Ok((lower, upper))
}

fn log2_sq(n: u64) -> f64 {
    let l = (n as f64).log2();
    l * l
}

/// `exp(-2 n eps^2 / (36 log2^2 n))`.
pub fn emi_concentration_bound(n: u64, epsilon: f64) -> Result<Bound> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}: the bound needs n >= 2")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be nonnegative")));
    }
    let raw = (-2.0 * n as f64 * epsilon * epsilon / (36.0 * log2_sq(n))).exp();
    Ok(Bound::from_raw(raw))
}

/// Largest change in EMI from altering one sample: `6 log2(n) / n`.
pub fn bounded_difference_limit(n: u64) -> f64 {
    6.0 * (n as f64).log2() / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedDifference {
    pub delta: f64,
    pub limit: f64,
}

impl BoundedDifference {
    pub fn holds(&self) -> bool {
        self.delta <= self.limit
    }
}

/// `|EMI(s) - EMI(s with sample i replaced by (x_new, y_new))|`.
pub fn bounded_difference_check(s: &PairSamples, i: usize, x_new: u32, y_new: u32) -> Result<BoundedDifference> {
    if i >= s.n() {
        return Err(Error::InvalidInput(format!("index {i} outside 0..{}", s.n())));
    }
    if x_new as usize >= s.card_x || y_new as usize >= s.card_y {
        return Err(Error::InvalidInput("replacement symbol outside its alphabet".into()));
    }
    let mut t = s.types();
    let before = t.emi();
    t.shift(s.xs[i], s.ys[i], false);
    t.shift(x_new, y_new, true);
    Ok(BoundedDifference {
        delta: (before - t.emi()).abs(),
        limit: bounded_difference_limit(s.n() as u64),
    })
}

/// Probability that `n`-sample EMI misorders two pairs whose true MIs differ by
/// `delta`: `2 max_k exp(-2 n (delta/2 - bias_k)^2 / (36 log2^2 n))`.
pub fn ordering_error_bound(n: u64, delta: f64, bias_a: f64, bias_b: f64) -> Result<Bound> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}: the bound needs n >= 2")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("gap {delta} must be positive")));
    }
    let term = |bias: f64| -> Result<f64> {
        let margin = delta / 2.0 - bias;
        if !(margin > 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "bias {bias} is not below half the gap {delta}; take n past the sample threshold"
            )));
        }
        Ok((-2.0 * n as f64 * margin * margin / (36.0 * log2_sq(n))).exp())
    };
    let raw = 2.0 * term(bias_a)?.max(term(bias_b)?);
    Ok(Bound::from_raw(raw))
}

/// Smallest `n` with `n > max{(|X|^2 - 1)/(2^(delta/2) - 1), (|X| - 1)/(2^(delta/4) - 1)}`,
/// past which both bias terms sit below `delta / 2`.
pub fn min_samples_for_gap(delta: f64, card: usize) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("gap {delta} must be positive")));
    }
    if card < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size {card} must be at least 2")));
    }
    let c = card as f64;
    let a = (c * c - 1.0) / (2f64.powf(delta / 2.0) - 1.0);
    let b = (c - 1.0) / (2f64.powf(delta / 4.0) - 1.0);
    Ok(a.max(b).floor() as u64 + 1)
}

/// `max{1, 4c ln(2c) + 16c ln^2 c}`: every `x` at or above it satisfies `x >= c ln^2 x`.
pub fn tech_lemma_threshold(c: f64) -> Result<f64> {
    if !(c >= 1.0) {
        return Err(Error::InvalidParameter(format!("c = {c} must be at least 1")));
    }
    let lc = c.ln();
    Ok((4.0 * c * (2.0 * c).ln() + 16.0 * c * lc * lc).max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub card: usize,
    pub n: u64,
    pub bias_lower: f64,
    pub bias_upper: f64,
    pub epsilon: f64,
    pub concentration: Bound,
    pub delta: f64,
    /// Absent when `n` is below the sample threshold for `delta`.
    pub ordering: Option<Bound>,
    pub n_min: u64,
}

/// All single-pair bounds for a square alphabet of size `card`.
pub fn bounds_report(card: usize, n: u64, epsilon: f64, delta: f64) -> Result<BoundsReport> {
    let (bias_lower, bias_upper) = emi_bias_bounds(card, card, n)?;
    let ordering = match ordering_error_bound(n, delta, bias_upper, bias_upper) {
        Ok(b) => Some(b),
        Err(Error::PreconditionViolated(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundsReport {
        card,
        n,
        bias_lower,
        bias_upper,
        epsilon,
        concentration: emi_concentration_bound(n, epsilon)?,
        delta,
        ordering,
        n_min: min_samples_for_gap(delta, card)?,
    })
}

/// EMI of `n` i.i.d. draws from a two-variable pmf, once per trial. Trial `t`
/// uses stream `t` of `seed`, so the result does not depend on thread count.
pub fn emi_trials(pair: &JointPmf, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if pair.num_vars() != 2 {
        return Err(Error::InvalidInput("need a pmf over exactly two variables".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let (cx, cy) = (pair.cards()[0], pair.cards()[1]);
    let mut acc = 0.0;
    let cdf: Vec<f64> = pair
        .probs()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let last = pair.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    debug_assert!((acc - 1.0).abs() <= SUM_TOLERANCE * 10.0);
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let mut joint = vec![0u64; cx * cy];
            for _ in 0..n {
                let u: f64 = rng.random();
                let cell = cdf.partition_point(|&c| c <= u).min(last);
                joint[cell] += 1;
            }
            TypeCounts {
                card_x: cx,
                card_y: cy,
                joint,
                n: n as u64,
            }
            .emi()
        })
        .collect())
}

/// Mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
