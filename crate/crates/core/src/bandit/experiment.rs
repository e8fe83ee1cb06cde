//! Experiment grids over budgets, and their CSV reports.
//!
//! ```json
//! { "model": "example2-l2-wide", "budgets": [128, 256, 512], "trials": 500,
//!   "seed": 12648430, "sampling": "disjoint_blocks" }
//! ```
//!
//! `model` is a built-in name, a path to a model file (relative to the spec
//! file), or an inline model object.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    gap_profile, monte_carlo_error_rate_from, proposition_bound, BanditConfig, ErrorRate,
    GapProfile, PropositionBound, SamplingScheme,
};
use crate::error::{Error, Result};
use crate::mct::io::{LoadError, ModelFile};
use crate::mct::{builtin_model, MctModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Inline(ModelFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: ModelRef,
    /// Total budgets `N`, each a multiple of the edge count.
    pub budgets: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub sampling: SamplingScheme,
    /// Alphabet size used in the bound; defaults to the largest in the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub card: Option<usize>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> std::result::Result<ExperimentSpec, LoadError> {
        serde_json::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))
    }

    pub fn resolve_model(&self, base_dir: &Path) -> std::result::Result<MctModel, LoadError> {
        match &self.model {
            ModelRef::Inline(file) => file.clone().into_model(),
            ModelRef::Name(name) => {
                if let Some(m) = builtin_model(name) {
                    return Ok(m);
                }
                let path = base_dir.join(name);
                let text = std::fs::read_to_string(&path).map_err(|e| LoadError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                crate::mct::io::load_model_str(&text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSummary {
    pub rate: ErrorRate,
    /// Absent when the true minimizer is not unique.
    pub bound: Option<PropositionBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub profile: GapProfile,
    pub card: usize,
    pub edges: Vec<crate::tree::Edge>,
    pub summaries: Vec<BudgetSummary>,
}

/// Runs every budget in order. Budget `b` uses trial ids
/// `b * trials .. (b + 1) * trials`, so budgets draw from disjoint streams.
pub fn run_experiment(model: &MctModel, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let profile = gap_profile(model)?;
    let card = spec.card.unwrap_or_else(|| model.cards().iter().copied().max().unwrap_or(1));
    let edge_count = model.tree().edges().len();
    let mut summaries = Vec::with_capacity(spec.budgets.len());
    for (b, &budget) in spec.budgets.iter().enumerate() {
        let cfg = BanditConfig::new(model.clone(), budget, spec.trials, spec.seed)?.with_sampling(spec.sampling);
        let rate = monte_carlo_error_rate_from(&cfg, (b * spec.trials) as u64)?;
        let bound = match proposition_bound(profile.delta_1, budget, card.max(2), edge_count) {
            Ok(p) => Some(p),
            Err(Error::UniquenessViolated(_)) => None,
            Err(e) => return Err(e),
        };
        summaries.push(BudgetSummary { rate, bound });
    }
    Ok(ExperimentReport {
        profile,
        card,
        edges: model.tree().edges().to_vec(),
        summaries,
    })
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trials_csv(report: &ExperimentReport, w: &mut impl Write) -> io::Result<()> {
    write!(w, "N,n,trial,chosen_i,chosen_j,si_estimate,correct")?;
    for (i, j) in &report.edges {
        write!(w, ",emi_{i}_{j}")?;
    }
    writeln!(w)?;
    for s in &report.summaries {
        for o in &s.rate.outcomes {
            write!(
                w,
                "{},{},{},{},{},{},{}",
                s.rate.total_budget,
                s.rate.per_edge,
                o.trial,
                o.chosen_edge.0,
                o.chosen_edge.1,
                fmt_float(o.si_estimate),
                u8::from(o.correct)
            )?;
            for &v in &o.emi {
                write!(w, ",{}", fmt_float(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// One row per budget. Rate columns are `NaN` when there were no trials;
/// bound columns are empty when the true minimizer is not unique.
pub fn write_summary_csv(report: &ExperimentReport, w: &mut impl Write) -> io::Result<()> {
    writeln!(
        w,
        "N,n,trials,errors,error_rate,wilson_lower,wilson_upper,mean_abs_si_error,bound,bound_raw,vacuous,valid"
    )?;
    for s in &report.summaries {
        let r = &s.rate;
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.total_budget,
            r.per_edge,
            r.trials,
            r.errors,
            fmt_float(r.rate),
            fmt_float(r.wilson.0),
            fmt_float(r.wilson.1),
            fmt_float(r.mean_abs_si_error)
        )?;
        match &s.bound {
            Some(b) => writeln!(
                w,
                ",{},{},{},{}",
                fmt_float(b.bound.value),
                fmt_float(b.bound.raw),
                u8::from(b.bound.vacuous),
                u8::from(b.valid)
            )?,
            None => writeln!(w, ",,,,")?,
        }
    }
    Ok(())
}
