//! The subcommands. Each returns the process exit code on success; any `Err`
//! maps to exit code 2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use semiflow_core::bits::BitString;
use semiflow_core::bridge::{self, SampleStatus};
use semiflow_core::engine::{run, Construction, RunSummary, Snapshot};
use semiflow_core::flow::{flow_table, FlowTable};
use semiflow_core::harness;
use semiflow_core::Rational;

use crate::config::ConfigDocument;
use crate::export;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Deepest cylinder level tabulated in the sampling summary.
pub const SUMMARY_DEPTH: usize = 4;
/// Standard errors allowed between an empirical frequency and `P`.
pub const SUMMARY_TOLERANCE_SE: u64 = 4;

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Reads a snapshot and checks it is resumable; the harness judges the rest.
pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let snapshot: Snapshot =
        serde_json::from_str(&text).with_context(|| format!("malformed snapshot {}", path.display()))?;
    Construction::resume(snapshot.clone()).with_context(|| format!("in {}", path.display()))?;
    Ok(snapshot)
}

#[derive(Serialize)]
struct BuildReport<'a> {
    config: &'a ConfigDocument,
    generator: &'static str,
    seed: u64,
    summary: &'a RunSummary,
    final_retained_flow: &'a Rational,
    files: Vec<&'static str>,
}

pub const BUILD_FILES: [&str; 7] =
    ["snapshot.json", "edges.csv", "flows.csv", "levels.csv", "ledger.json", "events.jsonl", "report.json"];

pub fn build(config_path: &Path, out_flag: Option<&Path>) -> Result<u8> {
    let doc = ConfigDocument::load(config_path)?;
    let dir = crate::config::resolve_out_dir(out_flag, &doc.outputs.dir);
    let out = run(doc.run_config())?;
    prepare(&dir)?;
    let flows_depth = doc.outputs.flows_depth.unwrap_or(out.table.depth());
    write(&dir, "snapshot.json", &export::snapshot_json(&out.snapshot())?)?;
    write(&dir, "edges.csv", &export::edges_csv(&out.state))?;
    write(&dir, "flows.csv", &export::flows_csv(&out.table, flows_depth))?;
    write(&dir, "levels.csv", &export::levels_csv(&out.table))?;
    write(&dir, "ledger.json", &export::ledger_json(&out.ledger)?)?;
    write(&dir, "events.jsonl", &export::events_jsonl(&out.state)?)?;
    let report = BuildReport {
        config: &doc,
        generator: bridge::GENERATOR,
        seed: doc.seed,
        summary: &out.summary,
        final_retained_flow: out.table.s(out.table.depth()),
        files: BUILD_FILES.to_vec(),
    };
    write(&dir, "report.json", &export::json_pretty(&report)?)?;
    println!(
        "built depth {} in {}: {} edges, S_{} = {}",
        out.state.depth,
        dir.display(),
        out.summary.edges,
        out.table.depth(),
        out.table.s(out.table.depth())
    );
    Ok(EXIT_PASS)
}

pub fn verify(snapshot_path: &Path, out_flag: Option<&Path>) -> Result<u8> {
    let snapshot = load_snapshot(snapshot_path)?;
    let report = harness::verify(&snapshot.config, &snapshot.state, &snapshot.ledger)?;
    let text = export::json_pretty(&report)?;
    if let Some(dir) = out_flag.map(Path::to_path_buf).or_else(env_out_dir) {
        prepare(&dir)?;
        write(&dir, "verify.json", &text)?;
    }
    for check in &report.checks {
        println!("{:<20} {:?}", check.name, check.verdict);
        for w in &check.witnesses {
            println!("    {}", w);
        }
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    Ok(if report.passed { EXIT_PASS } else { EXIT_VIOLATION })
}

fn env_out_dir() -> Option<PathBuf> {
    match std::env::var_os(crate::config::OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => None,
    }
}

#[derive(Serialize)]
struct SampleLine {
    seed: u64,
    output: BitString,
    status: SampleStatus,
    bits_used: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CylinderRow {
    pub node: BitString,
    pub p: Rational,
    pub hits: u64,
    /// `hits / count`; absent when `count` is zero.
    pub frequency: Option<Rational>,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSummary {
    pub count: u64,
    pub seed: u64,
    pub budget: u32,
    pub generator: &'static str,
    pub tolerance_standard_errors: u64,
    pub budget_exhausted: u64,
    pub cylinders: Vec<CylinderRow>,
}

/// Draws `count` samples with seeds `seed, seed+1, ...` and tabulates the
/// frequency of `x ∈ I(σ)` for every `|σ| ≤ 4`.
pub fn sample_run(table: &FlowTable, count: u64, seed: u64, budget: u32) -> Result<(String, SampleSummary)> {
    if !(1..=bridge::MAX_BIT_BUDGET).contains(&budget) {
        bail!("budget must lie in [1, {}]", bridge::MAX_BIT_BUDGET);
    }
    let map = bridge::allocate_intervals(table)?;
    let cap = SUMMARY_DEPTH.min(table.depth());
    let mut hits: BTreeMap<BitString, u64> = BTreeMap::new();
    let mut exhausted = 0u64;
    let mut lines = String::new();
    for i in 0..count {
        let s = seed.wrapping_add(i);
        let drawn = bridge::sample(&map, s, budget)?;
        if drawn.status == SampleStatus::BudgetExhausted {
            exhausted += 1;
        }
        for k in 0..=cap.min(drawn.output.len()) {
            *hits.entry(drawn.output.prefix(k)).or_default() += 1;
        }
        let line = SampleLine { seed: s, output: drawn.output, status: drawn.status, bits_used: drawn.bits_used };
        lines.push_str(&export::json_line(&line)?);
        lines.push('\n');
    }
    let mut cylinders = Vec::new();
    for n in 0..=cap {
        for node in BitString::level(n) {
            let h = hits.get(&node).copied().unwrap_or(0);
            let p = table.p(&node).clone();
            let frequency = (count > 0).then(|| {
                Rational::from_integer(h as i64).checked_div(&Rational::from_integer(count as i64)).expect("count > 0")
            });
            let within_tolerance = bridge::within_standard_errors(h, count, &p, SUMMARY_TOLERANCE_SE);
            cylinders.push(CylinderRow { node, p, hits: h, frequency, within_tolerance });
        }
    }
    let summary = SampleSummary {
        count,
        seed,
        budget,
        generator: bridge::GENERATOR,
        tolerance_standard_errors: SUMMARY_TOLERANCE_SE,
        budget_exhausted: exhausted,
        cylinders,
    };
    Ok((lines, summary))
}

pub fn sample(snapshot_path: &Path, count: u64, seed: u64, budget: u32, out_flag: Option<&Path>) -> Result<u8> {
    let snapshot = load_snapshot(snapshot_path)?;
    let table = flow_table(&snapshot.state, snapshot.state.depth);
    let (lines, summary) = sample_run(&table, count, seed, budget)?;
    let dir = crate::config::resolve_out_dir(out_flag, Path::new("out"));
    prepare(&dir)?;
    write(&dir, "samples.jsonl", &lines)?;
    write(&dir, "sample_summary.json", &export::json_pretty(&summary)?)?;
    let outside = summary.cylinders.iter().filter(|c| !c.within_tolerance).count();
    println!("{} samples written to {}; {} cylinders outside tolerance", count, dir.display(), outside);
    Ok(EXIT_PASS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Dot,
    Csv,
    Json,
}

pub fn export(snapshot_path: &Path, format: Format, depth_cap: Option<usize>, out_flag: Option<&Path>) -> Result<u8> {
    let snapshot = load_snapshot(snapshot_path)?;
    let state = &snapshot.state;
    let dir = crate::config::resolve_out_dir(out_flag, Path::new("out"));
    match format {
        Format::Dot => {
            let cap = depth_cap.unwrap_or(state.depth.min(export::MAX_DOT_DEPTH));
            let table = flow_table(state, state.depth);
            let text = export::dot(state, &table, cap)?;
            prepare(&dir)?;
            write(&dir, "network.dot", &text)?;
        }
        Format::Csv => {
            let table = flow_table(state, state.depth);
            let cap = depth_cap.unwrap_or(state.depth);
            prepare(&dir)?;
            write(&dir, "edges.csv", &export::edges_csv(state))?;
            write(&dir, "flows.csv", &export::flows_csv(&table, cap))?;
            write(&dir, "levels.csv", &export::levels_csv(&table))?;
        }
        Format::Json => {
            if depth_cap.is_some() {
                bail!("json export writes the whole snapshot; --depth-cap does not apply");
            }
            prepare(&dir)?;
            write(&dir, "snapshot.json", &export::snapshot_json(&snapshot)?)?;
            write(&dir, "ledger.json", &export::ledger_json(&snapshot.ledger)?)?;
            write(&dir, "events.jsonl", &export::events_jsonl(state)?)?;
        }
    }
    println!("exported {:?} to {}", format, dir.display());
    Ok(EXIT_PASS)
}

pub fn fixture() -> Result<u8> {
    let (trace, diff) = crate::fixture::check_fixture()?;
    print!("{}", trace.render());
    if diff.is_empty() {
        println!("fresh run matches the documented trace");
        Ok(EXIT_PASS)
    } else {
        for d in &diff {
            println!("MISMATCH {}", d);
        }
        Ok(EXIT_VIOLATION)
    }
}
