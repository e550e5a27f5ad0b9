//! The `2^{<ω}`-digraph: flow delays on nodes and the extra edges.
//!
//! Normal edges are implicit. A node `σ` with delay `d(σ)` sends
//! `½(1 − d(σ))` of its in-flow to each child and, when an extra edge starts
//! at `σ`, the withheld fraction `d(σ)` down that edge.
//!
//! Delays are stored per level: a uniform base value (what an initial
//! activation writes), fans (all length-`n` extensions of a root share one
//! counter value except the edge target, which gets 0) and explicit
//! per-node exceptions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::engine::StageEvent;
use crate::error::Error;
use crate::rational::{Rational, ONE, ZERO};

/// An extra edge `(start, end)` with `start ≺ end` and a span of at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub start: BitString,
    pub end: BitString,
    pub task: u64,
    pub stage_added: u64,
    /// Delay of `start` at the time the edge was added.
    pub flow_fraction: Rational,
}

/// Counter values written below a root when an edge fires from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fan {
    pub target: BitString,
    pub value: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDelays {
    pub base: Rational,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fans: BTreeMap<BitString, Fan>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exceptions: BTreeMap<BitString, Rational>,
}

impl LevelDelays {
    fn lookup(&self, node: &BitString) -> &Rational {
        if let Some(v) = self.exceptions.get(node) {
            return v;
        }
        if !self.fans.is_empty() {
            // Longest root wins, matching the write order of `row`.
            for k in (0..node.len()).rev() {
                if let Some(fan) = self.fans.get(&node.prefix(k)) {
                    return if fan.target == *node { &ZERO } else { &fan.value };
                }
            }
        }
        &self.base
    }

    /// Dense row of delays for a level of length `len`.
    fn row(&self, len: usize) -> Vec<Rational> {
        let mut row = vec![self.base.clone(); 1usize << len];
        for (root, fan) in &self.fans {
            let shift = len - root.len();
            let lo = (root.value() << shift) as usize;
            for slot in &mut row[lo..lo + (1usize << shift)] {
                *slot = fan.value.clone();
            }
            row[fan.target.value() as usize] = Rational::zero();
        }
        for (node, v) in &self.exceptions {
            row[node.value() as usize] = v.clone();
        }
        row
    }
}

/// Extra edges with lookup by start node and by end level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<EdgeRecord>", into = "Vec<EdgeRecord>")]
pub struct EdgeSet {
    records: Vec<EdgeRecord>,
    by_start: BTreeMap<BitString, Vec<usize>>,
    by_end_level: BTreeMap<usize, Vec<usize>>,
}

impl EdgeSet {
    pub fn push(&mut self, e: EdgeRecord) {
        let idx = self.records.len();
        self.by_start.entry(e.start).or_default().push(idx);
        self.by_end_level.entry(e.end.len()).or_default().push(idx);
        self.records.push(e);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, EdgeRecord> {
        self.records.iter()
    }

    pub fn records(&self) -> &[EdgeRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [EdgeRecord] {
        &mut self.records
    }

    pub fn starting_at<'a>(&'a self, start: &BitString) -> impl Iterator<Item = &'a EdgeRecord> + 'a {
        self.by_start.get(start).into_iter().flatten().map(move |&i| &self.records[i])
    }

    pub fn ending_at_level(&self, level: usize) -> impl Iterator<Item = &EdgeRecord> + '_ {
        self.by_end_level.get(&level).into_iter().flatten().map(move |&i| &self.records[i])
    }
}

impl From<Vec<EdgeRecord>> for EdgeSet {
    fn from(records: Vec<EdgeRecord>) -> Self {
        let mut set = EdgeSet::default();
        for e in records {
            set.push(e);
        }
        set
    }
}

impl From<EdgeSet> for Vec<EdgeRecord> {
    fn from(set: EdgeSet) -> Self {
        set.records
    }
}

/// The construction's mutable state up to a truncation depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkState {
    pub depth: usize,
    /// Last completed stage (0 for the all-½ base network).
    pub stage: u64,
    levels: Vec<LevelDelays>,
    edges: EdgeSet,
    events: Vec<StageEvent>,
}

impl NetworkState {
    /// The base network: every delay 0, no extra edges.
    pub fn new(depth: usize) -> Self {
        assert!(depth < BitString::MAX_LEN, "depth {} too large", depth);
        NetworkState {
            depth,
            stage: 0,
            levels: vec![LevelDelays::default(); depth + 1],
            edges: EdgeSet::default(),
            events: Vec::new(),
        }
    }

    pub fn delay(&self, node: &BitString) -> &Rational {
        match self.levels.get(node.len()) {
            Some(level) => level.lookup(node),
            None => &ZERO,
        }
    }

    pub fn level(&self, len: usize) -> &LevelDelays {
        &self.levels[len]
    }

    pub fn levels(&self) -> &[LevelDelays] {
        &self.levels
    }

    pub fn delay_row(&self, len: usize) -> Vec<Rational> {
        self.levels[len].row(len)
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn events(&self) -> &[StageEvent] {
        &self.events
    }

    /// Initial activation: one delay for the whole level.
    pub fn set_level_uniform(&mut self, len: usize, value: Rational) {
        let level = &mut self.levels[len];
        level.base = value;
        level.fans.clear();
        level.exceptions.clear();
    }

    pub fn add_fan(&mut self, root: BitString, target: BitString, value: Rational) {
        debug_assert!(root.is_strict_prefix_of(&target));
        self.levels[target.len()].fans.insert(root, Fan { target, value });
    }

    /// Overrides the delay of a single node.
    pub fn set_delay(&mut self, node: BitString, value: Rational) {
        self.levels[node.len()].exceptions.insert(node, value);
    }

    pub fn push_edge(&mut self, e: EdgeRecord) {
        self.edges.push(e);
    }

    pub fn edges_mut(&mut self) -> &mut [EdgeRecord] {
        self.edges.records_mut()
    }

    pub(crate) fn log_event(&mut self, ev: StageEvent) {
        self.stage = ev.stage;
        self.events.push(ev);
    }

    /// Edge-fraction function `q(σ, τ)`.
    pub fn q_value(&self, sigma: &BitString, tau: &BitString) -> Rational {
        self.restriction(self.depth).q_value(sigma, tau)
    }

    /// True iff some normal edge on the way down to `node` carries no flow,
    /// i.e. a strict prefix of `node` has delay 1.
    pub fn support_blocked(&self, node: &BitString) -> bool {
        (0..node.len()).any(|k| self.delay(&node.prefix(k)).is_one())
    }

    /// Edges with `|start| < level <= |end|`.
    pub fn crossing_edges(&self, level: usize) -> Vec<&EdgeRecord> {
        self.edges.iter().filter(|e| e.start.len() < level && level <= e.end.len()).collect()
    }

    /// The level-`m` elementary restriction `q_m`.
    pub fn restriction(&self, m: usize) -> Restriction<'_> {
        Restriction { state: self, upto: m }
    }

    /// Checks the network law `Σ_τ q(σ,τ) ≤ 1` and `q ∈ [0,1]` at every node
    /// with a non-default delay or an outgoing edge.
    pub fn check_network_law(&self) -> Result<(), Error> {
        for (len, level) in self.levels.iter().enumerate() {
            let mut nodes: Vec<BitString> = level.exceptions.keys().copied().collect();
            for (root, fan) in &level.fans {
                nodes.push(fan.target);
                nodes.extend(root.extensions(len).take(2));
            }
            if !level.base.in_unit_interval() {
                return Err(Error::Invariant(alloc::format!("level {} base delay {} outside [0,1]", len, level.base)));
            }
            for node in nodes {
                let d = self.delay(&node);
                if !d.in_unit_interval() {
                    return Err(Error::Invariant(alloc::format!("delay {} at {} outside [0,1]", d, node)));
                }
            }
        }
        for start in self.edges.by_start.keys() {
            let d = self.delay(start);
            let out: Rational = self.edges.starting_at(start).map(|_| d.clone()).fold(ONE.clone() - d, |a, b| a + b);
            if out > ONE {
                return Err(Error::Invariant(alloc::format!("outgoing fractions at {} sum to {}", start, out)));
            }
        }
        Ok(())
    }
}

/// A read-only view of the state as the elementary network `q_m`: delays at
/// levels above `m` read as 0 and edges ending below level `m` are hidden.
#[derive(Clone, Copy)]
pub struct Restriction<'a> {
    state: &'a NetworkState,
    upto: usize,
}

impl<'a> Restriction<'a> {
    pub fn level_bound(&self) -> usize {
        self.upto
    }

    pub fn state(&self) -> &'a NetworkState {
        self.state
    }

    pub fn delay(&self, node: &BitString) -> &'a Rational {
        if node.len() > self.upto {
            &ZERO
        } else {
            self.state.delay(node)
        }
    }

    pub fn edges_from(&self, start: &BitString) -> impl Iterator<Item = &'a EdgeRecord> + 'a {
        let upto = self.upto;
        self.state.edges.starting_at(start).filter(move |e| e.end.len() <= upto)
    }

    pub fn has_edge_from(&self, start: &BitString) -> bool {
        self.edges_from(start).next().is_some()
    }

    pub fn q_value(&self, sigma: &BitString, tau: &BitString) -> Rational {
        if !sigma.is_strict_prefix_of(tau) {
            return Rational::zero();
        }
        let d = self.delay(sigma);
        if tau.len() == sigma.len() + 1 {
            return (&ONE - d) * Rational::new(1, 2).unwrap();
        }
        if self.edges_from(sigma).any(|e| e.end == *tau) {
            d.clone()
        } else {
            Rational::zero()
        }
    }

    /// Every prefix `τ↾k` with `1 <= k <= |τ|` has delay below 1.
    pub fn path_unblocked(&self, tau: &BitString) -> bool {
        (1..=tau.len()).all(|k| !self.delay(&tau.prefix(k)).is_one())
    }
}
