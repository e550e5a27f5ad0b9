//! File formats. Every writer is deterministic: rationals in normal form,
//! JSON object keys sorted, every file newline-terminated.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use serde::Serialize;

use semiflow_core::bits::BitString;
use semiflow_core::engine::Snapshot;
use semiflow_core::flow::FlowTable;
use semiflow_core::ledger::TestLedger;
use semiflow_core::network::NetworkState;

/// Deepest level the DOT renderer accepts.
pub const MAX_DOT_DEPTH: usize = 8;

/// Pretty JSON with sorted keys and a trailing newline.
pub fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Compact single-line JSON with sorted keys.
pub fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

pub fn snapshot_json(snapshot: &Snapshot) -> Result<String> {
    json_pretty(snapshot)
}

pub fn edges_csv(state: &NetworkState) -> String {
    let mut out = String::from("stage,task,start,end,fraction\n");
    for e in state.edges().iter() {
        writeln!(out, "{},{},{},{},{}", e.stage_added, e.task, e.start, e.end, e.flow_fraction).unwrap();
    }
    out
}

pub fn flows_csv(table: &FlowTable, max_depth: usize) -> String {
    let mut out = String::from("node,R,P\n");
    for n in 0..=max_depth.min(table.depth()) {
        for (v, (r, p)) in table.r_row(n).iter().zip(table.p_row(n)).enumerate() {
            writeln!(out, "{},{},{}", BitString::from_value(n, v as u64), r, p).unwrap();
        }
    }
    out
}

pub fn levels_csv(table: &FlowTable) -> String {
    let mut out = String::from("n,S_n,R_sum,P_sum\n");
    for n in 0..=table.depth() {
        writeln!(out, "{},{},{},{}", n, table.s(n), table.level_r_sum(n), table.level_p_sum(n)).unwrap();
    }
    out
}

pub fn ledger_json(ledger: &TestLedger) -> Result<String> {
    json_pretty(ledger)
}

pub fn events_jsonl(state: &NetworkState) -> Result<String> {
    let mut out = String::new();
    for ev in state.events() {
        out.push_str(&json_line(ev)?);
        out.push('\n');
    }
    Ok(out)
}

/// Nodes to `max_depth` labelled with delay and `P`; extra edges dashed.
pub fn dot(state: &NetworkState, table: &FlowTable, max_depth: usize) -> Result<String> {
    if max_depth > MAX_DOT_DEPTH {
        bail!("dot export is limited to depth {}", MAX_DOT_DEPTH);
    }
    let cap = max_depth.min(table.depth());
    let mut out = String::from("digraph semiflow {\n  node [shape=box, fontsize=10];\n");
    for n in 0..=cap {
        for node in BitString::level(n) {
            writeln!(out, "  \"{}\" [label=\"{}\\nd={}\\nP={}\"];", node, node, state.delay(&node), table.p(&node))
                .unwrap();
        }
    }
    for n in 1..=cap {
        for node in BitString::level(n) {
            let parent = node.parent().expect("non-root node");
            writeln!(out, "  \"{}\" -> \"{}\";", parent, node).unwrap();
        }
    }
    for e in state.edges().iter().filter(|e| e.end.len() <= cap) {
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dashed, color=red, label=\"task {} stage {} q={}\"];",
            e.start, e.end, e.task, e.stage_added, e.flow_fraction
        )
        .unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}
