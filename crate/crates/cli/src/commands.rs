use std::path::Path;

use serde_json::{json, Value};

use mctsi_core::bandit::experiment::fmt_float;
use mctsi_core::mct::io::{model_to_json, tree_pmf_to_json};
use mctsi_core::mct::{
    lemma1_identity_check, verify_edge_markov, verify_global_markov, verify_local_markov, GlobalMode,
    EXHAUSTIVE_GLOBAL_MAX_M,
};
use mctsi_core::shared_info::{sandwich_check, si_brute_force_with_guard, si_mct, Argmin, SiResult};
use mctsi_core::{Partition, VertexSet};

use crate::failure::{Failure, EXIT_CHECK_FAILED};
use crate::input::{load_input, Input};
use crate::manifest::RunManifest;
use crate::{Ctx, GlobalModeArg, SiMethod, Suite};

fn set_str(s: &VertexSet) -> String {
    let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn partition_str(p: &Partition) -> String {
    p.atoms().iter().map(set_str).collect::<Vec<_>>().join("|")
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn validate(ctx: &Ctx, arg: &str) -> Result<u8, Failure> {
    let input = load_input(arg)?;
    match &input {
        Input::Model(model) => {
            if ctx.json {
                println!("{}", model_to_json(model));
                return Ok(0);
            }
            println!("valid model: m = {}, root = {}", model.m(), model.root());
            println!("  /cards     {:?}", model.cards());
            println!("  /edges     {} edges, spanning tree", model.tree().edges().len());
            println!("  /root_pmf  {} entries, sums to 1", model.root_pmf().len());
            println!("  /kernels   {} kernels, rows stochastic, shapes match cards", model.kernels().len());
        }
        Input::TreePmf(p, t) => {
            if ctx.json {
                println!("{}", tree_pmf_to_json(p, t));
                return Ok(0);
            }
            println!("valid tree pmf: m = {}", t.m());
            println!("  /cards  {:?}", p.cards());
            println!("  /edges  {} edges, spanning tree", t.edges().len());
            println!("  /probs  {} entries, sums to 1", p.num_states());
        }
    }
    Ok(0)
}

fn si_json(r: &SiResult) -> Value {
    match &r.argmin {
        Argmin::Edge(e) => json!({ "value_bits": r.value_bits, "argmin_edge": [e.0, e.1] }),
        Argmin::Partition(p) => {
            let atoms: Vec<Vec<usize>> = p.atoms().iter().map(VertexSet::to_vec).collect();
            json!({ "value_bits": r.value_bits, "argmin_partition": atoms })
        }
    }
}

fn si_line(label: &str, r: &SiResult) -> String {
    let argmin = match &r.argmin {
        Argmin::Edge(e) => format!("edge ({},{})", e.0, e.1),
        Argmin::Partition(p) => format!("partition {}", partition_str(p)),
    };
    format!("{label:<6} {} bits  argmin {argmin}", fmt_float(r.value_bits))
}

pub fn si(ctx: &Ctx, arg: &str, method: SiMethod, guard: usize) -> Result<u8, Failure> {
    let input = load_input(arg)?;
    let m = input.m();
    let brute = if method != SiMethod::Exact {
        if m > guard {
            return Err(Failure::precondition(format!(
                "brute force enumerates all partitions of {m} variables; the guard allows m <= {guard} (raise --guard)"
            )));
        }
        Some(si_brute_force_with_guard(&input.joint_pmf()?, guard)?)
    } else {
        None
    };
    let exact = if method != SiMethod::Brute {
        Some(si_mct(&input.into_model("exact SI")?)?)
    } else {
        None
    };
    let delta = match (&exact, &brute) {
        (Some(a), Some(b)) => Some((a.value_bits - b.value_bits).abs()),
        _ => None,
    };
    let agree = delta.is_none_or(|d| d <= ctx.tol);
    if ctx.json {
        let mut v = json!({});
        if let Some(r) = &exact {
            v["exact"] = si_json(r);
        }
        if let Some(r) = &brute {
            v["brute"] = si_json(r);
        }
        if let Some(d) = delta {
            v["delta"] = d.into();
            v["agree"] = agree.into();
        }
        ctx.print_json(&v);
    } else {
        if let Some(r) = &exact {
            println!("{}", si_line("exact", r));
        }
        if let Some(r) = &brute {
            println!("{}", si_line("brute", r));
        }
        if let Some(d) = delta {
            println!("delta  {}  ({} at tol {:e})", fmt_float(d), if agree { "agree" } else { "DISAGREE" }, ctx.tol);
        }
    }
    Ok(if agree { 0 } else { EXIT_CHECK_FAILED })
}

struct SuiteResult {
    name: &'static str,
    passed: bool,
    worst: f64,
    detail: String,
    json: Value,
}

pub fn verify(
    ctx: &Ctx,
    arg: &str,
    suite: Suite,
    mode: GlobalModeArg,
    samples: usize,
    local_cap: usize,
) -> Result<u8, Failure> {
    let input = load_input(arg)?;
    let tree = input.tree().clone();
    let pmf = input.joint_pmf()?;
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut results = Vec::new();

    if wants(Suite::Edge) {
        let r = verify_edge_markov(&pmf, &tree, ctx.tol)?;
        let worst = r.worst();
        let detail = worst.map_or_else(
            || "no edges".to_string(),
            |c| format!("given {} target {} on edge ({},{})", c.given, c.target, c.edge.0, c.edge.1),
        );
        let violations: Vec<Value> = r
            .violations()
            .map(|c| json!({ "edge": [c.edge.0, c.edge.1], "given": c.given, "target": c.target, "cmi": c.cmi }))
            .collect();
        results.push(SuiteResult {
            name: "edge",
            passed: r.passed(),
            worst: worst.map_or(0.0, |c| c.cmi),
            detail,
            json: json!({ "checks": r.checks.len(), "violations": violations }),
        });
    }
    if wants(Suite::Local) {
        let r = verify_local_markov(&pmf, &tree, ctx.tol, local_cap)?;
        let worst = r.checks.iter().max_by(|a, b| a.cmi.total_cmp(&b.cmi));
        let violations: Vec<Value> =
            r.violations().map(|c| json!({ "set": c.set.to_vec(), "cmi": c.cmi })).collect();
        results.push(SuiteResult {
            name: "local",
            passed: r.passed(),
            worst: worst.map_or(0.0, |c| c.cmi),
            detail: worst.map_or_else(String::new, |c| format!("set {}", set_str(&c.set))),
            json: json!({ "checks": r.checks.len(), "violations": violations }),
        });
    }
    if wants(Suite::Global) {
        let exhaustive = match mode {
            GlobalModeArg::Exhaustive => true,
            GlobalModeArg::Sampled => false,
            GlobalModeArg::Auto => tree.m() <= EXHAUSTIVE_GLOBAL_MAX_M,
        };
        let gm = if exhaustive {
            GlobalMode::Exhaustive
        } else {
            GlobalMode::Sampled { count: samples, seed: ctx.seed.unwrap_or(0) }
        };
        let r = verify_global_markov(&pmf, &tree, ctx.tol, gm)?;
        let triple = |t: &mctsi_core::mct::TripleCheck| {
            json!({ "a": t.a_set().to_vec(), "b": t.b_set().to_vec(), "s": t.s_set().to_vec(), "cmi": t.cmi })
        };
        let violations: Vec<Value> = r.violations.iter().map(triple).collect();
        results.push(SuiteResult {
            name: "global",
            passed: r.passed(),
            worst: r.worst.map_or(0.0, |t| t.cmi),
            detail: match &r.worst {
                Some(t) => format!(
                    "A={} B={} S={}; {} {} triples",
                    set_str(&t.a_set()),
                    set_str(&t.b_set()),
                    set_str(&t.s_set()),
                    r.tested,
                    if exhaustive { "exhaustive" } else { "sampled" }
                ),
                None => "no separated triples".to_string(),
            },
            json: json!({
                "mode": if exhaustive { "exhaustive" } else { "sampled" },
                "tested": r.tested,
                "worst_triple": r.worst.as_ref().map(triple),
                "violations": violations,
            }),
        });
    }
    if wants(Suite::Lemma1) {
        let r = lemma1_identity_check(&pmf, &tree, ctx.tol)?;
        results.push(SuiteResult {
            name: "lemma1",
            passed: r.passed(),
            worst: r.max_diff(),
            detail: format!("{} edges, |branch MI - endpoint MI|", r.checks.len()),
            json: json!({ "checks": r.checks.len() }),
        });
    }
    if wants(Suite::Sandwich) {
        let r = sandwich_check(&pmf, ctx.tol)?;
        let checks: Vec<Value> =
            r.checks.iter().map(|c| json!({ "name": c.name, "lhs": c.lhs, "rhs": c.rhs })).collect();
        results.push(SuiteResult {
            name: "sandwich",
            passed: r.passed(),
            worst: r.worst_excess(),
            detail: format!(
                "C = {}, D = {}, SI = {}",
                fmt_float(r.total_correlation),
                fmt_float(r.dual_total_correlation),
                fmt_float(r.shared_information)
            ),
            json: json!({ "checks": checks }),
        });
    }

    let all = results.iter().all(|r| r.passed);
    if ctx.json {
        let suites: Vec<Value> = results
            .iter()
            .map(|r| {
                let mut v = r.json.clone();
                v["suite"] = r.name.into();
                v["passed"] = r.passed.into();
                v["worst"] = r.worst.into();
                v
            })
            .collect();
        ctx.print_json(&json!({ "tol": ctx.tol, "passed": all, "suites": suites }));
    } else {
        for r in &results {
            println!("{:<9} {}  worst {}  {}", r.name, pass_str(r.passed), fmt_float(r.worst), r.detail);
        }
    }
    Ok(if all { 0 } else { EXIT_CHECK_FAILED })
}

pub fn sample(ctx: &Ctx, arg: &str, n: usize, out: Option<&Path>) -> Result<u8, Failure> {
    let model = load_input(arg)?.into_model("sampling")?;
    let seed = ctx.seed.unwrap_or(0);
    let s = model.sample(n, seed);
    let mut text: String = (1..=model.m()).map(|v| format!("x{v}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for r in 0..s.n() {
        let row: Vec<String> = s.row(r).iter().map(u32::to_string).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match out {
        None => print!("{text}"),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
            let config = json!({ "command": "sample", "model": mctsi_core::mct::io::ModelFile::from_model(&model), "n": n, "seed": seed });
            let mut manifest = RunManifest::new(&config, seed);
            manifest.write_output(dir, "samples.csv", text.as_bytes())?;
            manifest.write(dir)?;
            if ctx.json {
                ctx.print_json(&serde_json::to_value(&manifest).expect("manifest serializes"));
            } else {
                println!("wrote {} samples to {}", n, dir.join("samples.csv").display());
            }
        }
    }
    Ok(0)
}
