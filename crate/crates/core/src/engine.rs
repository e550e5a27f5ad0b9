//! The stage-by-stage construction.
//!
//! Stage `n` (for `n = 1, 2, …, depth`) serves task `i = task(n)`:
//!
//! - when `w(i) = n` every node of length `n` is activated with delay
//!   `1/c(n)`;
//! - otherwise each candidate `σ` gets an extra edge to `β(σ)`, the target's
//!   delay is 0 and the other length-`n` extensions of `σ` count down to
//!   `d(σ)/(1 − d(σ))`;
//! - with no candidates nothing changes.
//!
//! Level `n` is written only at stage `n`, so the state after stage `n − 1`
//! is exactly the elementary restriction `q_{n−1}` of any later state.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::catalog::{FunctionalCatalog, PartialCatalog, DEFAULT_FUNCTIONALS, DEFAULT_PARTIALS};
use crate::codec::{max_task_through, next_position, task, Mode};
use crate::error::Error;
use crate::flow::{flow_table, FlowTable};
use crate::ledger::TestLedger;
use crate::network::{EdgeRecord, NetworkState, Restriction};
use crate::predicate::{build_predicate, Predicate};
use crate::rational::{Rational, ONE};

pub const MIN_DEPTH: usize = 2;
pub const MAX_DEPTH: usize = 24;
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StageCase {
    InitialActivation,
    EdgesAdded,
    Noop,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEvent {
    pub stage: u64,
    pub case: StageCase,
    pub task: u64,
    /// `w(task, q_{stage−1})`.
    pub w_value: u64,
    /// Candidates in length-lexicographic order; always an antichain.
    pub candidates: Vec<BitString>,
    pub edges: Vec<EdgeRecord>,
    /// Tasks above `task` whose `w` moved during this stage.
    pub injured_tasks: Vec<u64>,
    /// Set on an activation of a task that had been activated before.
    #[serde(default)]
    pub restarted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation_delay: Option<Rational>,
}

/// How activation counters are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Countdown {
    /// `c(n) = (n + n₀)²`.
    #[default]
    Default,
    /// `c(n) = k` at every stage; runs using it are exempt from the measure bound.
    Constant(u64),
}

impl fmt::Display for Countdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Countdown::Default => f.write_str("default"),
            Countdown::Constant(k) => write!(f, "constant:{}", k),
        }
    }
}

impl FromStr for Countdown {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "default" {
            return Ok(Countdown::Default);
        }
        s.strip_prefix("constant:")
            .and_then(|k| k.parse::<u64>().ok())
            .map(Countdown::Constant)
            .ok_or_else(|| Error::Parse { what: "countdown", input: s.to_string() })
    }
}

impl Serialize for Countdown {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Countdown {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The resolved counter function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterRule {
    Quadratic { n0: u64 },
    Constant(u64),
}

impl CounterRule {
    pub fn value(&self, n: u64) -> u64 {
        match *self {
            CounterRule::Quadratic { n0 } => (n + n0) * (n + n0),
            CounterRule::Constant(k) => k,
        }
    }

    pub fn activation_delay(&self, n: u64) -> Rational {
        Rational::reciprocal_of(self.value(n))
    }

    pub fn bound_exempt(&self) -> bool {
        matches!(self, CounterRule::Constant(_))
    }

    pub fn n0(&self) -> Option<u64> {
        match *self {
            CounterRule::Quadratic { n0 } => Some(n0),
            CounterRule::Constant(_) => None,
        }
    }
}

fn default_catalog_names() -> Vec<String> {
    DEFAULT_FUNCTIONALS.iter().map(|s| s.to_string()).collect()
}

fn default_partial_names() -> Vec<String> {
    DEFAULT_PARTIALS.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub depth: usize,
    pub delta: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    pub mode: Mode,
    #[serde(default = "default_catalog_names")]
    pub catalog: Vec<String>,
    #[serde(default = "default_partial_names")]
    pub partials: Vec<String>,
    #[serde(default)]
    pub countdown: Countdown,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            depth: 20,
            delta: Rational::new(1, 2).unwrap(),
            n0: None,
            mode: Mode::Mlr,
            catalog: default_catalog_names(),
            partials: default_partial_names(),
            countdown: Countdown::Default,
            seed: 0,
        }
    }
}

/// `Σ_{k=lo}^{hi} k^{-2}`, exact.
fn inverse_square_sum(lo: u64, hi: u64) -> Rational {
    let mut acc = Rational::zero();
    for k in lo..=hi {
        acc += Rational::reciprocal_of(k * k);
    }
    acc
}

/// Decides `Σ_{k>m} k^{-2} < δ` from a partial sum and the bounds
/// `1/(K+1) <= Σ_{k>K} k^{-2} <= 1/K`; `None` when undecided.
pub fn tail_below(m: u64, delta: &Rational) -> Option<bool> {
    if Rational::reciprocal_of(m + 1) >= *delta {
        return Some(false);
    }
    if m >= 1 && Rational::reciprocal_of(m) < *delta {
        return Some(true);
    }
    for extra in [32u64, 256, 2048] {
        let k = m + extra;
        let partial = inverse_square_sum(m + 1, k);
        if &partial + &Rational::reciprocal_of(k) < *delta {
            return Some(true);
        }
        if &partial + &Rational::reciprocal_of(k + 1) >= *delta {
            return Some(false);
        }
    }
    None
}

/// Least `n₀` with `Σ_{n>=1} (n + n₀)^{-2} < δ`.
pub fn derive_n0(delta: &Rational) -> Result<u64, Error> {
    if !(delta.is_positive() && *delta < ONE) {
        return Err(Error::Config(format!("delta {} outside (0,1)", delta)));
    }
    // Every m <= 1/δ − 1 fails because the tail exceeds 1/(m+1).
    let floor_inv = (delta.denom() / delta.numer().magnitude())
        .to_u64()
        .ok_or_else(|| Error::Config(format!("delta {} too small", delta)))?;
    let mut m = floor_inv.saturating_sub(1);
    loop {
        match tail_below(m, delta) {
            Some(true) => return Ok(m),
            Some(false) => m += 1,
            None => return Err(Error::Config(format!("cannot certify n0 for delta {}", delta))),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::Config(format!("depth {} outside [{}, {}]", self.depth, MIN_DEPTH, MAX_DEPTH)));
        }
        if !(self.delta.is_positive() && self.delta < ONE) {
            return Err(Error::Config(format!("delta {} outside (0,1)", self.delta)));
        }
        if let Countdown::Constant(0) = self.countdown {
            return Err(Error::Config("constant countdown must be at least 1".into()));
        }
        FunctionalCatalog::from_names(&self.catalog)?;
        PartialCatalog::from_names(&self.partials)?;
        self.counter_rule().map(|_| ())
    }

    pub fn counter_rule(&self) -> Result<CounterRule, Error> {
        match self.countdown {
            Countdown::Constant(k) => Ok(CounterRule::Constant(k)),
            Countdown::Default => {
                let n0 = match self.n0 {
                    None => derive_n0(&self.delta)?,
                    Some(n0) => {
                        if n0 == 0 || tail_below(n0, &self.delta) != Some(true) {
                            return Err(Error::Config(format!(
                                "n0 = {} does not certify the tail sum below delta {}",
                                n0, self.delta
                            )));
                        }
                        n0
                    }
                };
                Ok(CounterRule::Quadratic { n0 })
            }
        }
    }

    pub fn predicate(&self) -> Result<Box<dyn Predicate>, Error> {
        Ok(build_predicate(
            self.mode,
            FunctionalCatalog::from_names(&self.catalog)?,
            PartialCatalog::from_names(&self.partials)?,
        ))
    }
}

/// `w(i, q)`: the least `n` with `task(n) = i` such that every edge of a
/// task below `i` ends at a length below `n`.
pub fn w_value(state: &NetworkState, i: u64) -> u64 {
    let max_end = state.edges().iter().filter(|e| e.task < i).map(|e| e.end.len() as u64).max();
    next_position(i, max_end.map_or(0, |m| m + 1))
}

/// `β(σ, q, n)`: the lexicographically least `τ` of length `n` extending `σ`
/// with `B(q, σ, τ)`.
pub fn beta(view: &Restriction<'_>, sigma: &BitString, n: usize, pred: &dyn Predicate) -> Option<BitString> {
    fn search(
        view: &Restriction<'_>,
        sigma: &BitString,
        node: BitString,
        n: usize,
        pred: &dyn Predicate,
    ) -> Option<BitString> {
        if node.len() == n {
            return pred.holds(view, sigma, &node).then_some(node);
        }
        // Condition (b) fails for every extension of a node with delay 1.
        if !node.is_empty() && view.delay(&node).is_one() {
            return None;
        }
        search(view, sigma, node.child(0), n, pred).or_else(|| search(view, sigma, node.child(1), n, pred))
    }
    if sigma.len() >= n {
        return None;
    }
    search(view, sigma, *sigma, n, pred)
}

/// A node satisfying (a)–(d) together with its target `β(σ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub node: BitString,
    pub target: BitString,
}

/// The candidate set `C_n` evaluated against the state after stage `n − 1`.
pub fn candidates(state: &NetworkState, n: usize, pred: &dyn Predicate) -> Result<Vec<Candidate>, Error> {
    let i = task(n as u64);
    let w = w_value(state, i) as usize;
    let view = state.restriction(n - 1);
    let mut out = Vec::new();
    let mut level = next_position(i, w as u64) as usize;
    while level < n {
        let row = state.delay_row(level);
        for (v, d) in row.iter().enumerate() {
            if !(d.is_positive() && *d < ONE) {
                continue;
            }
            let node = BitString::from_value(level, v as u64);
            if state.edges().starting_at(&node).next().is_some() {
                continue;
            }
            if let Some(target) = beta(&view, &node, n, pred) {
                out.push(Candidate { node, target });
            }
        }
        level = next_position(i, level as u64 + 1) as usize;
    }
    let nodes: BTreeSet<BitString> = out.iter().map(|c| c.node).collect();
    for c in &out {
        if let Some(k) = (0..c.node.len()).find(|&k| nodes.contains(&c.node.prefix(k))) {
            return Err(Error::Invariant(format!(
                "stage {}: candidates {} and {} are comparable",
                n,
                c.node.prefix(k),
                c.node
            )));
        }
    }
    Ok(out)
}

/// Counts of stage outcomes for a finished run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stages: u64,
    pub initial_activations: u64,
    pub edge_stages: u64,
    pub noops: u64,
    pub edges: u64,
    pub n0: Option<u64>,
    pub bound_exempt: bool,
}

/// A lossless image of a run in progress.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub config: RunConfig,
    pub state: NetworkState,
    pub ledger: TestLedger,
}

/// The construction driver: configuration, predicate and mutable state.
pub struct Construction {
    config: RunConfig,
    rule: CounterRule,
    predicate: Box<dyn Predicate>,
    state: NetworkState,
    ledger: TestLedger,
}

impl Construction {
    pub fn new(config: RunConfig) -> Result<Self, Error> {
        config.validate()?;
        let predicate = config.predicate()?;
        Self::with_predicate(config, predicate)
    }

    /// Uses a caller-supplied predicate in place of the one the mode selects.
    pub fn with_predicate(config: RunConfig, predicate: Box<dyn Predicate>) -> Result<Self, Error> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&config.depth) {
            return Err(Error::Config(format!("depth {} outside [{}, {}]", config.depth, MIN_DEPTH, MAX_DEPTH)));
        }
        let rule = config.counter_rule()?;
        let state = NetworkState::new(config.depth);
        let ledger = TestLedger::new(predicate.mode());
        Ok(Construction { config, rule, predicate, state, ledger })
    }

    pub fn resume(snapshot: Snapshot) -> Result<Self, Error> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "version {} is not the supported version {}",
                snapshot.version, SNAPSHOT_VERSION
            )));
        }
        snapshot.config.validate()?;
        if snapshot.state.depth != snapshot.config.depth {
            return Err(Error::Snapshot(format!(
                "state depth {} differs from config depth {}",
                snapshot.state.depth, snapshot.config.depth
            )));
        }
        if snapshot.state.events().len() as u64 != snapshot.state.stage
            || snapshot.state.stage > snapshot.state.depth as u64
        {
            return Err(Error::Snapshot(format!(
                "stage counter {} does not match {} logged events",
                snapshot.state.stage,
                snapshot.state.events().len()
            )));
        }
        if snapshot.ledger.mode != snapshot.config.mode {
            return Err(Error::Snapshot("ledger mode differs from config mode".into()));
        }
        let predicate = snapshot.config.predicate()?;
        let rule = snapshot.config.counter_rule()?;
        Ok(Construction { config: snapshot.config, rule, predicate, state: snapshot.state, ledger: snapshot.ledger })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn rule(&self) -> CounterRule {
        self.rule
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn ledger(&self) -> &TestLedger {
        &self.ledger
    }

    pub fn is_finished(&self) -> bool {
        self.state.stage as usize >= self.state.depth
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            state: self.state.clone(),
            ledger: self.ledger.clone(),
        }
    }

    /// Runs the next stage and returns its event.
    pub fn step(&mut self) -> Result<&StageEvent, Error> {
        if self.is_finished() {
            return Err(Error::Bound(format!("stage {} is past depth {}", self.state.stage + 1, self.state.depth)));
        }
        let n = self.state.stage + 1;
        let i = task(n);
        let w = w_value(&self.state, i);
        let event = if w == n {
            let delay = self.rule.activation_delay(n);
            if !delay.in_unit_interval() {
                return Err(Error::Invariant(format!("stage {}: activation delay {} outside [0,1]", n, delay)));
            }
            let restarted = self.state.events().iter().any(|e| e.task == i && e.case == StageCase::InitialActivation);
            self.state.set_level_uniform(n as usize, delay.clone());
            StageEvent {
                stage: n,
                case: StageCase::InitialActivation,
                task: i,
                w_value: w,
                candidates: Vec::new(),
                edges: Vec::new(),
                injured_tasks: Vec::new(),
                restarted,
                activation_delay: Some(delay),
            }
        } else {
            let found = candidates(&self.state, n as usize, self.predicate.as_ref())?;
            if found.is_empty() {
                StageEvent {
                    stage: n,
                    case: StageCase::Noop,
                    task: i,
                    w_value: w,
                    candidates: Vec::new(),
                    edges: Vec::new(),
                    injured_tasks: Vec::new(),
                    restarted: false,
                    activation_delay: None,
                }
            } else {
                self.add_edges(n, i, w, found)?
            }
        };
        self.state.log_event(event);
        Ok(self.state.events().last().expect("event just logged"))
    }

    fn add_edges(&mut self, n: u64, i: u64, w: u64, found: Vec<Candidate>) -> Result<StageEvent, Error> {
        let lower_tasks = (i + 1)..=max_task_through(self.state.depth as u64);
        let before: Vec<u64> = lower_tasks.clone().map(|k| w_value(&self.state, k)).collect();
        let mut edges = Vec::with_capacity(found.len());
        // Every target is computed against q_{n−1} before anything is written.
        let entries: Vec<_> = found.iter().map(|c| self.predicate.ledger_entry(&c.node, &c.target)).collect();
        for c in &found {
            let d = self.state.delay(&c.node).clone();
            let fan = d.countdown_step()?;
            if !fan.in_unit_interval() {
                return Err(Error::Invariant(format!("stage {}: fan delay {} below {} outside [0,1]", n, fan, c.node)));
            }
            self.state.add_fan(c.node, c.target, fan);
            let edge = EdgeRecord { start: c.node, end: c.target, task: i, stage_added: n, flow_fraction: d };
            self.state.push_edge(edge.clone());
            edges.push(edge);
        }
        for (s, entry) in entries.into_iter().flatten() {
            self.ledger.push(s, entry);
        }
        let injured_tasks =
            lower_tasks.zip(before).filter(|&(k, old)| w_value(&self.state, k) != old).map(|(k, _)| k).collect();
        Ok(StageEvent {
            stage: n,
            case: StageCase::EdgesAdded,
            task: i,
            w_value: w,
            candidates: found.into_iter().map(|c| c.node).collect(),
            edges,
            injured_tasks,
            restarted: false,
            activation_delay: None,
        })
    }

    /// Runs stages until `stage` (capped at the depth) has completed.
    pub fn run_to(&mut self, stage: u64) -> Result<(), Error> {
        while self.state.stage < stage.min(self.state.depth as u64) {
            self.step()?;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), Error> {
        self.run_to(self.state.depth as u64)
    }

    pub fn summary(&self) -> RunSummary {
        let mut s = RunSummary {
            stages: self.state.stage,
            n0: self.rule.n0(),
            bound_exempt: self.rule.bound_exempt(),
            edges: self.state.edges().len() as u64,
            ..RunSummary::default()
        };
        for e in self.state.events() {
            match e.case {
                StageCase::InitialActivation => s.initial_activations += 1,
                StageCase::EdgesAdded => s.edge_stages += 1,
                StageCase::Noop => s.noops += 1,
            }
        }
        s
    }

    pub fn finish(self) -> RunOutput {
        let table = flow_table(&self.state, self.state.depth);
        let summary = self.summary();
        RunOutput { config: self.config, rule: self.rule, state: self.state, ledger: self.ledger, table, summary }
    }
}

/// Everything a finished run hands to the harness and the exporters.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub rule: CounterRule,
    pub state: NetworkState,
    pub ledger: TestLedger,
    pub table: FlowTable,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            state: self.state.clone(),
            ledger: self.ledger.clone(),
        }
    }
}

/// Executes stages `1..=depth` and computes the flow tables.
pub fn run(config: RunConfig) -> Result<RunOutput, Error> {
    let mut c = Construction::new(config)?;
    c.run_to_end()?;
    Ok(c.finish())
}
