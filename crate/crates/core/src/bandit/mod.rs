//! Uniform-sampling bandit over tree edges: every edge gets `n = N / |E|`
//! samples of its endpoint pair, the edge with the smallest empirical MI is
//! declared the minimizer, and its EMI is the shared-information estimate.

pub mod experiment;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emi::{Bound, TypeCounts};
use crate::error::{Error, Result};
use crate::mct::MctModel;
use crate::rng::{stream_rng, substream_rng};
use crate::shared_info::edge_mutual_informations;
use crate::tree::Edge;

/// Gaps at or below this make the true minimizer non-unique.
pub const UNIQUENESS_TOLERANCE: f64 = 1e-12;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// `N` full vectors split into consecutive blocks of `n`, one per edge in
    /// lexicographic order.
    #[default]
    DisjointBlocks,
    /// `n` fresh endpoint pairs per edge, each edge on its own substream.
    IndependentPerEdge,
}

#[derive(Debug, Clone)]
pub struct BanditConfig {
    pub model: MctModel,
    pub total_budget: u64,
    pub trials: usize,
    pub master_seed: u64,
    pub sampling: SamplingScheme,
}

impl BanditConfig {
    pub fn new(model: MctModel, total_budget: u64, trials: usize, master_seed: u64) -> Result<BanditConfig> {
        let cfg = BanditConfig {
            model,
            total_budget,
            trials,
            master_seed,
            sampling: SamplingScheme::default(),
        };
        cfg.per_edge()?;
        Ok(cfg)
    }

    pub fn with_sampling(mut self, sampling: SamplingScheme) -> BanditConfig {
        self.sampling = sampling;
        self
    }

    /// Samples per edge, `N / |E|`.
    pub fn per_edge(&self) -> Result<u64> {
        let e = self.model.tree().edges().len() as u64;
        if e == 0 {
            return Err(Error::InvalidParameter("the model has no edges".into()));
        }
        if self.total_budget < e || self.total_budget % e != 0 {
            return Err(Error::InvalidParameter(format!(
                "budget {} must be a positive multiple of the edge count {e}",
                self.total_budget
            )));
        }
        Ok(self.total_budget / e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub edge_mi: BTreeMap<Edge, f64>,
    pub best_edge: Edge,
    pub true_si: f64,
    /// `I(edge) - I(best edge)`.
    pub deltas: BTreeMap<Edge, f64>,
    /// Second-lowest minus lowest edge MI; infinite for a single edge.
    pub delta_1: f64,
    pub non_unique: bool,
}

pub fn gap_profile(model: &MctModel) -> Result<GapProfile> {
    let edge_mi = edge_mutual_informations(model);
    let mut best: Option<(Edge, f64)> = None;
    for (&e, &mi) in &edge_mi {
        if best.is_none_or(|(_, b)| mi < b - crate::shared_info::TIE_TOLERANCE) {
            best = Some((e, mi));
        }
    }
    let (best_edge, true_si) =
        best.ok_or_else(|| Error::InvalidParameter("the model has no edges".into()))?;
    let deltas: BTreeMap<Edge, f64> = edge_mi.iter().map(|(&e, &mi)| (e, (mi - true_si).max(0.0))).collect();
    let delta_1 = deltas
        .iter()
        .filter(|(&e, _)| e != best_edge)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    Ok(GapProfile {
        edge_mi,
        best_edge,
        true_si,
        deltas,
        delta_1,
        non_unique: delta_1 <= UNIQUENESS_TOLERANCE,
    })
}

impl GapProfile {
    /// Whether choosing `e` identifies the minimum. With a non-unique minimizer
    /// any edge attaining the minimum counts.
    pub fn is_correct(&self, e: Edge) -> bool {
        if self.non_unique {
            self.deltas.get(&e).is_some_and(|&d| d <= UNIQUENESS_TOLERANCE)
        } else {
            e == self.best_edge
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// EMI per edge, in lexicographic edge order.
    pub emi: Vec<f64>,
    pub chosen_edge: Edge,
    pub si_estimate: f64,
    pub correct: bool,
}

fn pair_cdf(model: &MctModel, i: usize, j: usize) -> Result<(Vec<f64>, usize, usize)> {
    let pair = model.edge_pmf(i, j)?;
    let mut acc = 0.0;
    let cdf = pair
        .probs()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let last = pair.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    Ok((cdf, last, pair.cards()[1]))
}

fn block_emis(cfg: &BanditConfig, n: usize, trial_id: u64) -> Result<Vec<f64>> {
    let model = &cfg.model;
    let edges = model.tree().edges();
    let cards = model.cards();
    match cfg.sampling {
        SamplingScheme::DisjointBlocks => {
            let mut rng = stream_rng(cfg.master_seed, trial_id);
            let samples = model.sample_with_rng(n * edges.len(), &mut rng);
            Ok(edges
                .iter()
                .enumerate()
                .map(|(b, &(i, j))| {
                    let rows = b * n..(b + 1) * n;
                    let xs = samples.column(i, rows.clone());
                    let ys = samples.column(j, rows);
                    TypeCounts::from_checked(&xs, &ys, cards[i - 1], cards[j - 1]).emi()
                })
                .collect())
        }
        SamplingScheme::IndependentPerEdge => edges
            .iter()
            .enumerate()
            .map(|(b, &(i, j))| {
                let (cdf, last, cj) = pair_cdf(model, i, j)?;
                let mut rng = substream_rng(cfg.master_seed, trial_id, b as u64);
                let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let cell = cdf.partition_point(|&c| c <= u).min(last);
                    xs.push((cell / cj) as u32);
                    ys.push((cell % cj) as u32);
                }
                Ok(TypeCounts::from_checked(&xs, &ys, cards[i - 1], cards[j - 1]).emi())
            })
            .collect(),
    }
}

fn trial_with_profile(cfg: &BanditConfig, profile: &GapProfile, trial_id: u64) -> Result<TrialOutcome> {
    let n = cfg.per_edge()? as usize;
    let emi = block_emis(cfg, n, trial_id)?;
    let edges = cfg.model.tree().edges();
    // strict comparison keeps the lexicographically first edge on ties
    let mut best = 0;
    for (b, &v) in emi.iter().enumerate() {
        if v < emi[best] {
            best = b;
        }
    }
    let chosen_edge = edges[best];
    Ok(TrialOutcome {
        trial: trial_id,
        si_estimate: emi[best],
        correct: profile.is_correct(chosen_edge),
        chosen_edge,
        emi,
    })
}

/// One bandit run, reproducible from `(cfg.master_seed, trial_id)`.
pub fn run_trial(cfg: &BanditConfig, trial_id: u64) -> Result<TrialOutcome> {
    trial_with_profile(cfg, &gap_profile(&cfg.model)?, trial_id)
}

/// 95% Wilson score interval for `errors` out of `trials`; `(0, 1)` with no trials.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRate {
    pub total_budget: u64,
    pub per_edge: u64,
    pub trials: usize,
    pub errors: u64,
    /// NaN with no trials.
    pub rate: f64,
    pub wilson: (f64, f64),
    pub mean_abs_si_error: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl ErrorRate {
    pub fn wilson_half_width(&self) -> f64 {
        (self.wilson.1 - self.wilson.0) / 2.0
    }
}

/// Runs trials `first_trial .. first_trial + cfg.trials` in parallel; outcomes
/// come back in trial order whatever the thread count.
pub fn monte_carlo_error_rate_from(cfg: &BanditConfig, first_trial: u64) -> Result<ErrorRate> {
    let profile = gap_profile(&cfg.model)?;
    let per_edge = cfg.per_edge()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| trial_with_profile(cfg, &profile, first_trial + t))
        .collect::<Result<_>>()?;
    let errors = outcomes.iter().filter(|o| !o.correct).count() as u64;
    let n = outcomes.len();
    let abs_err: f64 = outcomes.iter().map(|o| (o.si_estimate - profile.true_si).abs()).sum();
    Ok(ErrorRate {
        total_budget: cfg.total_budget,
        per_edge,
        trials: n,
        errors,
        rate: errors as f64 / n as f64,
        wilson: wilson_interval(errors, n as u64),
        mean_abs_si_error: abs_err / n as f64,
        outcomes,
    })
}

pub fn monte_carlo_error_rate(cfg: &BanditConfig) -> Result<ErrorRate> {
    monte_carlo_error_rate_from(cfg, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropositionBound {
    pub bound: Bound,
    /// Whether `N` strictly exceeds the sample threshold below.
    pub valid: bool,
    pub threshold: f64,
}

/// `|E| max{(|X|^2 - 1)/(2^(d/3) - 1), (|X| - 1)/(2^(d/6) - 1)}`.
pub fn proposition_threshold(delta_1: f64, card: usize, edge_count: usize) -> f64 {
    let c = card as f64;
    let a = (c * c - 1.0) / (2f64.powf(delta_1 / 3.0) - 1.0);
    let b = (c - 1.0) / (2f64.powf(delta_1 / 6.0) - 1.0);
    edge_count as f64 * a.max(b)
}

/// `2|E| exp(-n d^2 / (648 log2^2 n))` with `n = N / |E|`. For `n <= 1` the
/// logarithm vanishes and the bound is reported as vacuous.
pub fn proposition_bound(delta_1: f64, total_budget: u64, card: usize, edge_count: usize) -> Result<PropositionBound> {
    if !(delta_1 > UNIQUENESS_TOLERANCE) {
        return Err(Error::UniquenessViolated(delta_1));
    }
    if edge_count == 0 || card < 2 {
        return Err(Error::InvalidParameter("need at least one edge and an alphabet of size >= 2".into()));
    }
    let e = edge_count as f64;
    let n = total_budget as f64 / e;
    let raw = if n <= 1.0 {
        f64::INFINITY
    } else {
        let l = n.log2();
        2.0 * e * (-n * delta_1 * delta_1 / (648.0 * l * l)).exp()
    };
    let threshold = proposition_threshold(delta_1, card, edge_count);
    Ok(PropositionBound {
        bound: Bound::from_raw(raw),
        valid: total_budget as f64 > threshold,
        threshold,
    })
}

pub fn error_probability_bound(profile: &GapProfile, total_budget: u64, card: usize, edge_count: usize) -> Result<PropositionBound> {
    proposition_bound(profile.delta_1, total_budget, card, edge_count)
}

/// Right side of the sample-complexity estimate, rounded up:
/// `|E| [ |X|/eps + a log2^2 a + b log2 b + b log2^2 b ]` with
/// `a = ln(1/delta) / eps^2` and `b = ln(|E|/delta) / delta_1^2`.
/// Constants are dropped in its derivation, so treat it as an order of magnitude.
pub fn sample_complexity(epsilon: f64, delta: f64, delta_1: f64, edge_count: usize, card: usize) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if !(delta > 0.0 && delta < (-1f64).exp()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1/e)")));
    }
    if !(delta_1 > 0.0) {
        return Err(Error::InvalidParameter(format!("gap {delta_1} must be positive")));
    }
    if edge_count == 0 || card == 0 {
        return Err(Error::InvalidParameter("need at least one edge and a nonempty alphabet".into()));
    }
    let e = edge_count as f64;
    let a = (1.0 / delta).ln() / (epsilon * epsilon);
    let b = (e / delta).ln() / (delta_1 * delta_1);
    let (la, lb) = (a.log2(), b.log2());
    let value = e * (card as f64 / epsilon + a * la * la + b * lb + b * lb * lb);
    Ok(value.ceil() as u64)
}
