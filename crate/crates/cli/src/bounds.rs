use clap::Args;
use serde_json::json;

use mctsi_core::bandit::experiment::fmt_float;
use mctsi_core::bandit::{gap_profile, proposition_bound, sample_complexity};
use mctsi_core::emi::{emi_bias_bounds, emi_concentration_bound, min_samples_for_gap, ordering_error_bound, Bound};

use crate::failure::Failure;
use crate::input::load_input;
use crate::table::Table;
use crate::{Ctx, Family};

pub const COMPLEXITY_CAVEAT: &str =
    "order-of-magnitude estimate: constant factors are dropped in its derivation";

#[derive(Args)]
pub struct BoundParams {
    /// Alphabet size (both variables of a pair).
    #[arg(long, default_value_t = 2)]
    card: usize,
    /// Sample sizes per pair to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1_000, 10_000, 100_000, 1_000_000])]
    n: Vec<u64>,
    /// Deviation for the concentration bound, accuracy for the sample complexity.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// MI gap between the two best pairs.
    #[arg(long)]
    gap: Option<f64>,
    /// Confidence parameter for the sample complexity.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Number of tree edges.
    #[arg(long)]
    edges: Option<usize>,
    /// Total budgets to sweep for the proposition bound.
    #[arg(long, value_delimiter = ',', default_values_t = [128u64, 256, 512, 1024, 2048, 4096, 8192, 16384])]
    budget: Vec<u64>,
    /// Take gap, edge count and alphabet size from this model.
    #[arg(long)]
    model: Option<String>,
}

struct Resolved {
    card: usize,
    gap: Option<f64>,
    edges: Option<usize>,
}

fn resolve(p: &BoundParams) -> Result<Resolved, Failure> {
    let mut r = Resolved { card: p.card, gap: p.gap, edges: p.edges };
    if let Some(arg) = &p.model {
        let model = load_input(arg)?.into_model("deriving the gap")?;
        let profile = gap_profile(&model)?;
        r.gap = r.gap.or(Some(profile.delta_1));
        r.edges = r.edges.or(Some(model.tree().edges().len()));
        r.card = model.cards().iter().copied().max().unwrap_or(p.card).max(p.card);
    }
    Ok(r)
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::precondition(format!("the {family} family needs --{flag} (or --model)")))
}

fn bound_cells(b: &Bound) -> [String; 3] {
    [fmt_float(b.value), fmt_float(b.raw), b.vacuous.to_string()]
}

pub fn bounds(ctx: &Ctx, family: Family, params: &BoundParams, csv: bool) -> Result<u8, Failure> {
    let r = resolve(params)?;
    let mut caveat = None;
    let table = match family {
        Family::Bias => {
            let mut t = Table::new(vec!["n", "card", "lower", "upper", "width"]);
            for &n in &params.n {
                let (lo, hi) = emi_bias_bounds(r.card, r.card, n)?;
                t.push(vec![n.to_string(), r.card.to_string(), fmt_float(lo), fmt_float(hi), fmt_float(hi - lo)]);
            }
            t
        }
        Family::Concentration => {
            let mut t = Table::new(vec!["n", "eps", "bound", "raw", "vacuous"]);
            for &n in &params.n {
                let [v, raw, vac] = bound_cells(&emi_concentration_bound(n, params.eps)?);
                t.push(vec![n.to_string(), params.eps.to_string(), v, raw, vac]);
            }
            t
        }
        Family::Ordering => {
            let gap = need(r.gap, "gap", "ordering")?;
            let n_min = min_samples_for_gap(gap, r.card)?;
            let mut t = Table::new(vec!["n", "gap", "card", "n_min", "bias_upper", "bound", "raw", "vacuous"]);
            for &n in &params.n {
                if n < n_min {
                    return Err(Failure::precondition(format!(
                        "n = {n} is below the sample threshold n_min = {n_min} for gap {gap} and card {}",
                        r.card
                    )));
                }
                let (_, hi) = emi_bias_bounds(r.card, r.card, n)?;
                let [v, raw, vac] = bound_cells(&ordering_error_bound(n, gap, hi, hi)?);
                t.push(vec![n.to_string(), gap.to_string(), r.card.to_string(), n_min.to_string(), fmt_float(hi), v, raw, vac]);
            }
            t
        }
        Family::Proposition => {
            let gap = need(r.gap, "gap", "proposition")?;
            let edges = need(r.edges, "edges", "proposition")?;
            let mut t = Table::new(vec!["N", "n", "gap", "edges", "card", "bound", "raw", "vacuous", "valid", "threshold"]);
            for &budget in &params.budget {
                let b = proposition_bound(gap, budget, r.card, edges)?;
                let [v, raw, vac] = bound_cells(&b.bound);
                t.push(vec![
                    budget.to_string(),
                    (budget / edges as u64).to_string(),
                    fmt_float(gap),
                    edges.to_string(),
                    r.card.to_string(),
                    v,
                    raw,
                    vac,
                    b.valid.to_string(),
                    fmt_float(b.threshold),
                ]);
            }
            t
        }
        Family::Complexity => {
            let gap = need(r.gap, "gap", "complexity")?;
            let edges = need(r.edges, "edges", "complexity")?;
            let total = sample_complexity(params.eps, params.delta, gap, edges, r.card)?;
            caveat = Some(COMPLEXITY_CAVEAT);
            let mut t = Table::new(vec!["eps", "delta", "gap", "edges", "card", "samples"]);
            t.push(vec![
                params.eps.to_string(),
                params.delta.to_string(),
                fmt_float(gap),
                edges.to_string(),
                r.card.to_string(),
                total.to_string(),
            ]);
            t
        }
    };
    if ctx.json {
        let mut v = json!({ "rows": table.to_json() });
        if let Some(c) = caveat {
            v["caveat"] = c.into();
        }
        ctx.print_json(&v);
    } else {
        print!("{}", if csv { table.to_csv() } else { table.to_aligned() });
        if let Some(c) = caveat {
            eprintln!("note: {c}");
        }
    }
    Ok(0)
}
