use std::path::Path;

use serde_json::{json, Value};

use mctsi_core::bandit::experiment::{fmt_float, run_experiment, write_summary_csv, write_trials_csv, ExperimentSpec};

use crate::failure::Failure;
use crate::input::read_file;
use crate::manifest::RunManifest;
use crate::table::Table;
use crate::Ctx;

pub const TRIALS_CSV: &str = "trials.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

pub fn estimate(ctx: &Ctx, spec_path: &Path, out: &Path) -> Result<u8, Failure> {
    let mut spec = ExperimentSpec::from_json(&read_file(spec_path)?)?;
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let model = spec.resolve_model(base)?;
    // fail on an unusable output directory before spending time on trials
    std::fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let probe = out.join(".mctsi-write-probe");
    std::fs::write(&probe, b"").map_err(|e| Failure::io(out, e))?;
    let _ = std::fs::remove_file(&probe);

    let report = run_experiment(&model, &spec)?;
    let mut trials = Vec::new();
    write_trials_csv(&report, &mut trials).map_err(|e| Failure::io(out, e))?;
    let mut summary = Vec::new();
    write_summary_csv(&report, &mut summary).map_err(|e| Failure::io(out, e))?;

    let mut manifest = RunManifest::new(&spec, spec.seed);
    manifest.write_output(out, TRIALS_CSV, &trials)?;
    manifest.write_output(out, SUMMARY_CSV, &summary)?;
    manifest.write(out)?;

    let mut t = Table::new(vec!["N", "n", "trials", "errors", "rate", "wilson_lo", "wilson_hi", "bound", "vacuous", "valid"]);
    for s in &report.summaries {
        let r = &s.rate;
        let (b, vac, valid) = match &s.bound {
            Some(b) => (format!("{:.3e}", b.bound.value), b.bound.vacuous.to_string(), b.valid.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        t.push(vec![
            r.total_budget.to_string(),
            r.per_edge.to_string(),
            r.trials.to_string(),
            r.errors.to_string(),
            format!("{:.4}", r.rate),
            format!("{:.4}", r.wilson.0),
            format!("{:.4}", r.wilson.1),
            b,
            vac,
            valid,
        ]);
    }
    let p = &report.profile;
    if ctx.json {
        let edge_mi: Vec<Value> = p.edge_mi.iter().map(|(e, mi)| json!({ "edge": [e.0, e.1], "mi": mi })).collect();
        ctx.print_json(&json!({
            "true_si": p.true_si,
            "best_edge": [p.best_edge.0, p.best_edge.1],
            "delta_1": if p.delta_1.is_finite() { Value::from(p.delta_1) } else { Value::Null },
            "non_unique": p.non_unique,
            "edge_mi": edge_mi,
            "budgets": t.to_json(),
            "manifest": serde_json::to_value(&manifest).expect("manifest serializes"),
        }));
    } else {
        println!(
            "true SI {} bits at edge ({},{}), gap {}",
            fmt_float(p.true_si),
            p.best_edge.0,
            p.best_edge.1,
            fmt_float(p.delta_1)
        );
        print!("{}", t.to_aligned());
        println!("wrote {}, {} and manifest.json to {}", TRIALS_CSV, SUMMARY_CSV, out.display());
    }
    Ok(0)
}
