//! The hand-derived ALWAYS trace for stages 1–8 and its comparison with a
//! fresh run.

use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use semiflow_core::bits::BitString;
use semiflow_core::codec::Mode;
use semiflow_core::engine::{run, RunConfig, RunOutput, StageCase};
use semiflow_core::flow::flow_table;
use semiflow_core::Rational;

pub const TRACE_JSON: &str = include_str!("../fixtures/always_trace.json");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceConfig {
    pub delta: Rational,
    pub depth: usize,
    pub mode: Mode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceEdge {
    pub start: BitString,
    pub end: BitString,
    pub fraction: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStage {
    pub stage: u64,
    pub case: StageCase,
    pub task: u64,
    pub w: u64,
    #[serde(default)]
    pub activation_delay: Option<Rational>,
    #[serde(default)]
    pub restarted: bool,
    #[serde(default)]
    pub candidates: Vec<BitString>,
    #[serde(default)]
    pub edges: Vec<TraceEdge>,
    #[serde(default)]
    pub fan_delay: Option<Rational>,
    #[serde(default)]
    pub injured: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "quantity")]
pub enum TraceValue {
    R { node: BitString, depth: usize, value: Rational },
    P { node: BitString, depth: usize, value: Rational },
    S { level: usize, value: Rational },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trace {
    pub config: TraceConfig,
    pub stages: Vec<TraceStage>,
    pub values: Vec<TraceValue>,
}

pub fn documented_trace() -> Trace {
    serde_json::from_str(TRACE_JSON).expect("shipped trace parses")
}

impl Trace {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            depth: self.config.depth,
            delta: self.config.delta.clone(),
            mode: self.config.mode,
            ..RunConfig::default()
        }
    }

    /// One line per stage, for humans.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            write!(out, "stage {} task {} w {} {:?}", s.stage, s.task, s.w, s.case).unwrap();
            if let Some(d) = &s.activation_delay {
                write!(out, " delay {}", d).unwrap();
            }
            if s.restarted {
                out.push_str(" restarted");
            }
            for e in &s.edges {
                write!(out, " ({},{})@{}", e.start, e.end, e.fraction).unwrap();
            }
            if let Some(f) = &s.fan_delay {
                write!(out, " fans {}", f).unwrap();
            }
            if !s.injured.is_empty() {
                write!(out, " injured {:?}", s.injured).unwrap();
            }
            out.push('\n');
        }
        for v in &self.values {
            match v {
                TraceValue::R { node, depth, value } => writeln!(out, "R({}) = {} at depth {}", node, value, depth),
                TraceValue::P { node, depth, value } => writeln!(out, "P({}) = {} at depth {}", node, value, depth),
                TraceValue::S { level, value } => writeln!(out, "S_{} = {}", level, value),
            }
            .unwrap();
        }
        out
    }

    /// Every disagreement between the trace and `run`; empty when equal.
    pub fn diff(&self, run: &RunOutput) -> Vec<String> {
        let mut out = Vec::new();
        let events = run.state.events();
        if events.len() != self.stages.len() {
            out.push(format!("{} stages documented, {} run", self.stages.len(), events.len()));
        }
        for (doc, ev) in self.stages.iter().zip(events) {
            let n = doc.stage;
            let mut check = |what: &str, ok: bool, got: String| {
                if !ok {
                    out.push(format!("stage {}: {} differs, run has {}", n, what, got));
                }
            };
            check("stage", ev.stage == n, ev.stage.to_string());
            check("case", ev.case == doc.case, format!("{:?}", ev.case));
            check("task", ev.task == doc.task, ev.task.to_string());
            check("w", ev.w_value == doc.w, ev.w_value.to_string());
            check(
                "activation delay",
                ev.activation_delay == doc.activation_delay,
                format!("{:?}", ev.activation_delay),
            );
            check("restarted", ev.restarted == doc.restarted, ev.restarted.to_string());
            check("candidates", ev.candidates == doc.candidates, format!("{:?}", ev.candidates));
            let edges: Vec<_> = ev.edges.iter().map(|e| (e.start, e.end, e.flow_fraction.clone())).collect();
            let documented: Vec<_> = doc.edges.iter().map(|e| (e.start, e.end, e.fraction.clone())).collect();
            check("edges", edges == documented, format!("{:?}", edges));
            check("injured tasks", ev.injured_tasks == doc.injured, format!("{:?}", ev.injured_tasks));
            if let Some(fan) = &doc.fan_delay {
                for e in &doc.edges {
                    for node in e.start.extensions(e.end.len()) {
                        let want = if node == e.end { Rational::zero() } else { fan.clone() };
                        let got = run.state.delay(&node);
                        check(&format!("delay of {}", node), *got == want, got.to_string());
                    }
                }
            }
        }
        for v in &self.values {
            let (label, want, got) = match v {
                TraceValue::R { node, depth, value } => {
                    (format!("R({}) at depth {}", node, depth), value, flow_table(&run.state, *depth).r(node).clone())
                }
                TraceValue::P { node, depth, value } => {
                    (format!("P({}) at depth {}", node, depth), value, flow_table(&run.state, *depth).p(node).clone())
                }
                TraceValue::S { level, value } => (format!("S_{}", level), value, run.table.s(*level).clone()),
            };
            if *want != got {
                out.push(format!("{} documented {}, run has {}", label, want, got));
            }
        }
        out
    }
}

/// Runs the documented configuration and diffs it against the trace.
pub fn check_fixture() -> Result<(Trace, Vec<String>)> {
    let trace = documented_trace();
    let out = run(trace.run_config())?;
    let diff = trace.diff(&out);
    Ok((trace, diff))
}
