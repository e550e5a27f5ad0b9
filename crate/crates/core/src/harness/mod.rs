//! Independent re-derivation of the finite-depth claims about a run.
//!
//! Checks read the raw delay map, the edge set, the event log and freshly
//! computed tables. Quantities the engine also tracks (`w`, case labels,
//! fan values, test weights) are recomputed here from scratch.

pub mod oracle;
pub mod progress;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::catalog::{FunctionalCatalog, PartialCatalog};
use crate::codec::{self, pair_threshold, requirement_of_task, string_index, Mode, Requirement};
use crate::engine::{beta, CounterRule, RunConfig, StageCase};
use crate::error::Error;
use crate::flow::{flow_table, FlowTable};
use crate::ledger::TestLedger;
use crate::network::NetworkState;
use crate::predicate::{monotonize, Predicate};
use crate::rational::{Rational, ONE};

/// Witnesses kept per report; the violation count is exact.
pub const MAX_WITNESSES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub scope: String,
    pub verdict: Verdict,
    pub violations: usize,
    pub witnesses: Vec<String>,
    /// Exact values involved, as `num/den` strings.
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

impl CheckReport {
    fn new(name: &str, scope: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            scope: scope.to_string(),
            verdict: Verdict::Pass,
            violations: 0,
            witnesses: Vec::new(),
            values: BTreeMap::new(),
            notice: None,
        }
    }

    fn skipped(name: &str, scope: &str, notice: &str) -> Self {
        let mut r = Self::new(name, scope);
        r.verdict = Verdict::Skipped;
        r.notice = Some(notice.to_string());
        r
    }

    fn fail(&mut self, witness: String) {
        self.verdict = Verdict::Fail;
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    fn require(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        if !ok {
            self.fail(witness());
        }
    }

    fn value(&mut self, key: &str, v: impl ToString) {
        self.values.insert(key.to_string(), v.to_string());
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

fn scope_of(state: &NetworkState) -> String {
    format!("depth {}, stage {}", state.depth, state.stage)
}

/// `w(i)` counting only edges added at stages `<= through`.
pub fn w_at(state: &NetworkState, i: u64, through: u64) -> u64 {
    let max_end =
        state.edges().iter().filter(|e| e.stage_added <= through && e.task < i).map(|e| e.end.len() as u64).max();
    let mut n = max_end.map_or(0, |m| m + 1);
    while codec::task(n) != i {
        n += 1;
    }
    n
}

/// `P(ε) <= 1` and `P(σ) >= P(σ0) + P(σ1)` at every node, plus `P >= R >= 0`.
pub fn check_semimeasure(table: &FlowTable) -> CheckReport {
    let mut rep = CheckReport::new("semimeasure", &format!("depth {}", table.depth()));
    let root = table.p(&BitString::empty());
    rep.value("P(e)", root);
    rep.require(*root <= ONE, || format!("P(e) = {} > 1", root));
    for n in 0..=table.depth() {
        let (p, r) = (table.p_row(n), table.r_row(n));
        for (v, (pv, rv)) in p.iter().zip(r).enumerate() {
            let node = || BitString::from_value(n, v as u64);
            rep.require(!rv.is_negative() && pv >= rv, || format!("{}: P = {} below R = {}", node(), pv, rv));
            if n < table.depth() {
                let below = table.p_row(n + 1);
                let split = &below[2 * v] + &below[2 * v + 1];
                rep.require(*pv >= split, || format!("{}: P = {} < P(0) + P(1) = {}", node(), pv, split));
            }
        }
    }
    rep
}

/// The classification of stage `n` read off the state alone.
fn stage_case(state: &NetworkState, n: u64) -> StageCase {
    if w_at(state, codec::task(n), n - 1) == n {
        StageCase::InitialActivation
    } else if state.edges().iter().any(|e| e.stage_added == n) {
        StageCase::EdgesAdded
    } else {
        StageCase::Noop
    }
}

/// Per-stage relations between `S_n` and `S_{n+1}` and the cumulative
/// bound `S_n >= 1 − Σ_{i<=n} 1/c(i)`.
pub fn check_measure_bound(state: &NetworkState, table: &FlowTable, rule: &CounterRule) -> CheckReport {
    let name = "measure_bound";
    if rule.bound_exempt() {
        return CheckReport::skipped(
            name,
            &scope_of(state),
            "bound-exempt run: countdown override voids the measure bound",
        );
    }
    let mut rep = CheckReport::new(name, &scope_of(state));
    let last = (state.stage as usize).min(table.depth());
    for n in 1..last {
        let (cur, next) = (table.s(n), table.s(n + 1));
        let c = Rational::reciprocal_of(rule.value(n as u64));
        match stage_case(state, n as u64) {
            StageCase::InitialActivation => rep.require(*next >= cur - &c, || {
                format!(
                    "stage {} (activation): S_{} = {} < S_{} - 1/{} = {}",
                    n,
                    n + 1,
                    next,
                    n,
                    rule.value(n as u64),
                    cur - &c
                )
            }),
            StageCase::EdgesAdded => {
                rep.require(next >= cur, || format!("stage {} (edges): S_{} = {} < S_{} = {}", n, n + 1, next, n, cur))
            }
            StageCase::Noop => {
                rep.require(next == cur, || format!("stage {} (no-op): S_{} = {} != S_{} = {}", n, n + 1, next, n, cur))
            }
        }
    }
    let mut bound = Rational::one();
    for n in 1..=table.depth() {
        bound -= Rational::reciprocal_of(rule.value(n as u64));
        let s = table.s(n);
        rep.require(*s >= bound, || format!("S_{} = {} below 1 - sum = {}", n, s, bound));
    }
    rep.value("S_N", table.s(table.depth()));
    rep.value("lower_bound_N", &bound);
    rep
}

/// Whether each node has a strict prefix with delay 1, level by level.
fn blocked_rows(state: &NetworkState, depth: usize) -> Vec<Vec<bool>> {
    let mut rows = vec![vec![false]];
    for n in 1..=depth {
        let parent = state.delay_row(n - 1);
        let prev = &rows[n - 1];
        let row = (0..1usize << n).map(|v| prev[v / 2] || parent[v / 2].is_one()).collect();
        rows.push(row);
    }
    rows
}

/// `P(τ) = 0` exactly at the nodes below a delay-1 prefix.
pub fn check_cutoff(state: &NetworkState, table: &FlowTable) -> CheckReport {
    let mut rep = CheckReport::new("cutoff", &scope_of(state));
    let blocked = blocked_rows(state, table.depth());
    let mut count = 0u64;
    for (n, row) in blocked.iter().enumerate() {
        for (v, &b) in row.iter().enumerate() {
            count += b as u64;
            let p = &table.p_row(n)[v];
            if b != p.is_zero() {
                let node = BitString::from_value(n, v as u64);
                if b {
                    rep.fail(format!("{} is below a delay-1 prefix but P = {}", node, p));
                } else {
                    rep.fail(format!("{} has P = 0 with no delay-1 prefix", node));
                }
            }
        }
    }
    rep.value("blocked_nodes", count);
    rep
}

/// No nested edges, one edge per start, same-task endpoints, span >= 2,
/// recorded fraction equal to the start's delay.
pub fn check_structure(state: &NetworkState) -> CheckReport {
    let mut rep = CheckReport::new("structure", &scope_of(state));
    let mut by_start: BTreeMap<BitString, Vec<usize>> = BTreeMap::new();
    for (idx, e) in state.edges().iter().enumerate() {
        by_start.entry(e.start).or_default().push(idx);
    }
    let edges = state.edges().records();
    for (start, idxs) in &by_start {
        rep.require(idxs.len() == 1, || format!("{} edges start at {}", idxs.len(), start));
    }
    for e in edges {
        let (ls, le) = (e.start.len() as u64, e.end.len() as u64);
        rep.require(e.start.is_strict_prefix_of(&e.end), || {
            format!("edge ({},{}) does not extend its start", e.start, e.end)
        });
        rep.require(le >= ls + 2, || format!("edge ({},{}) spans fewer than 2 levels", e.start, e.end));
        rep.require(codec::task(ls) == e.task && codec::task(le) == e.task, || {
            format!(
                "edge ({},{}) labelled task {} joins tasks {} and {}",
                e.start,
                e.end,
                e.task,
                codec::task(ls),
                codec::task(le)
            )
        });
        let d = state.delay(&e.start);
        rep.require(*d == e.flow_fraction, || {
            format!("edge ({},{}) carries {} but d(start) = {}", e.start, e.end, e.flow_fraction, d)
        });
        // Forbidden: an edge (ζ, ξ) with ζ ≺ σ ≺ ξ and |ξ| <= |τ|.
        for k in 0..e.start.len() {
            let zeta = e.start.prefix(k);
            for &j in by_start.get(&zeta).map(Vec::as_slice).unwrap_or(&[]) {
                let outer = &edges[j];
                if e.start.is_strict_prefix_of(&outer.end) && outer.end.len() <= e.end.len() {
                    rep.fail(format!("nested edges ({},{}) and ({},{})", outer.start, outer.end, e.start, e.end));
                }
            }
        }
    }
    rep.value("edges", edges.len());
    rep
}

/// At every halving level `w(i)`: no crossing edge and
/// `P(σb) <= ½ P(σ)` for `|σ| = w(i) − 1`.
pub fn check_halving(state: &NetworkState, table: &FlowTable) -> CheckReport {
    let mut rep = CheckReport::new("halving", &scope_of(state));
    let half = Rational::new(1, 2).unwrap();
    let mut levels = BTreeSet::new();
    for i in 1..=codec::max_task_through(table.depth() as u64) {
        let w = w_at(state, i, state.stage) as usize;
        if w == 0 || w > table.depth() {
            continue;
        }
        levels.insert(w);
        for e in state.edges().iter() {
            rep.require(!(e.start.len() < w && w <= e.end.len()), || {
                format!("task {}: edge ({},{}) crosses level {}", i, e.start, e.end, w)
            });
        }
        let (above, at) = (table.p_row(w - 1), table.p_row(w));
        for (v, p) in above.iter().enumerate() {
            let cap = &half * p;
            for b in 0..2 {
                let child = &at[2 * v + b];
                rep.require(*child <= cap, || {
                    format!(
                        "task {}: P({}) = {} > P({})/2 = {}",
                        i,
                        BitString::from_value(w, (2 * v + b) as u64),
                        child,
                        BitString::from_value(w - 1, v as u64),
                        cap
                    )
                });
            }
        }
    }
    let mut chain = Vec::new();
    for &w in &levels {
        let max = table.p_row(w).iter().max().cloned().unwrap_or_default();
        chain.push(format!("{}:{}", w, max));
    }
    rep.value("levels", chain.join(" "));
    rep
}

/// Delays are 0, 1 or unit fractions; edge targets have delay 0 and the
/// rest of each fan holds `d/(1 − d)` of the start's delay.
pub fn check_counters(state: &NetworkState) -> CheckReport {
    let mut rep = CheckReport::new("counters", &scope_of(state));
    let ok = |d: &Rational| d.is_zero() || d.is_one() || d.unit_fraction_denominator().is_some();
    for (n, level) in state.levels().iter().enumerate() {
        rep.require(ok(&level.base), || format!("level {} base delay {}", n, level.base));
        for (root, fan) in &level.fans {
            rep.require(ok(&fan.value), || format!("fan below {} holds {}", root, fan.value));
        }
        for (node, v) in &level.exceptions {
            rep.require(ok(v), || format!("{} holds {}", node, v));
        }
    }
    for e in state.edges().iter() {
        rep.require(state.delay(&e.end).is_zero(), || format!("target {} has delay {}", e.end, state.delay(&e.end)));
        let d = state.delay(&e.start);
        let Ok(expect) = d.countdown_step() else {
            rep.fail(format!("edge from {} with delay 1", e.start));
            continue;
        };
        for node in e.start.extensions(e.end.len()) {
            if node != e.end {
                let got = state.delay(&node);
                rep.require(*got == expect, || {
                    format!("fan node {} of ({},{}) holds {} not {}", node, e.start, e.end, got, expect)
                });
            }
        }
    }
    rep
}

/// One event per stage with a case matching the recomputed `w`, activation
/// provenance along paths, and deactivation after every edge stage.
pub fn check_event_log(state: &NetworkState, rule: &CounterRule) -> CheckReport {
    let mut rep = CheckReport::new("event_log", &scope_of(state));
    let events = state.events();
    rep.require(events.len() as u64 == state.stage, || format!("{} events for {} stages", events.len(), state.stage));
    let top_task = codec::max_task_through(state.depth as u64);
    for (idx, ev) in events.iter().enumerate() {
        let n = idx as u64 + 1;
        rep.require(ev.stage == n, || format!("event {} is labelled stage {}", n, ev.stage));
        let i = codec::task(n);
        rep.require(ev.task == i, || format!("stage {}: task {} logged, schedule says {}", n, ev.task, i));
        let w = w_at(state, i, n - 1);
        rep.require(ev.w_value == w, || format!("stage {}: w logged {}, recomputed {}", n, ev.w_value, w));
        let case = stage_case(state, n);
        rep.require(ev.case == case, || format!("stage {}: case logged {:?}, recomputed {:?}", n, ev.case, case));
        let level = state.level(n as usize);
        match case {
            StageCase::InitialActivation => {
                let d = rule.activation_delay(n);
                rep.require(level.base == d && level.fans.is_empty() && level.exceptions.is_empty(), || {
                    format!("stage {}: level {} is not uniformly {}", n, n, d)
                });
            }
            StageCase::EdgesAdded => {
                let added: Vec<_> = state.edges().iter().filter(|e| e.stage_added == n).cloned().collect();
                rep.require(added == ev.edges, || format!("stage {}: logged edges differ from the edge set", n));
                for k in (i + 1)..=top_task {
                    let wk = w_at(state, k, n);
                    rep.require(wk > n, || {
                        format!("stage {}: task {} still has w = {} after task {} fired", n, k, wk, i)
                    });
                }
            }
            StageCase::Noop => {
                rep.require(level.base.is_zero() && level.fans.is_empty() && level.exceptions.is_empty(), || {
                    format!("stage {}: no-op stage left delays on level {}", n, n)
                });
            }
        }
        let set: BTreeSet<_> = ev.candidates.iter().collect();
        for c in &ev.candidates {
            if let Some(k) = (0..c.len()).find(|&k| set.contains(&c.prefix(k))) {
                rep.fail(format!("stage {}: candidates {} and {} are comparable", n, c.prefix(k), c));
            }
        }
    }
    // For each i-edge (ν′,μ′) take the i-edge (ν,μ) with the longest start
    // ν ≺ ν′: either ν′ lies on the level where μ ends or that level was
    // initially activated.
    for b in state.edges().iter() {
        let prev = (0..b.start.len())
            .rev()
            .find_map(|k| state.edges().starting_at(&b.start.prefix(k)).find(|a| a.task == b.task));
        if let Some(a) = prev {
            let lvl = b.start.len() as u64;
            let activated = lvl <= state.stage && stage_case(state, lvl) == StageCase::InitialActivation;
            rep.require(lvl == a.end.len() as u64 || activated, || {
                format!(
                    "edges ({},{}) and ({},{}): {} neither continues the first edge nor was activated",
                    a.start, a.end, b.start, b.end, b.start
                )
            });
        }
    }
    rep
}

/// Mass of every test component and the per-entry weight identities.
pub fn check_ledger(
    state: &NetworkState,
    ledger: &TestLedger,
    catalog: &FunctionalCatalog,
    partials: &PartialCatalog,
) -> CheckReport {
    let mut rep = CheckReport::new("ledger", &scope_of(state));
    let mode = ledger.mode;
    if mode == Mode::Always {
        rep.require(ledger.is_empty(), || format!("{} entries in a predicate-free run", ledger.len()));
        return rep;
    }
    rep.require(ledger.len() == state.edges().len(), || {
        format!("{} entries for {} edges", ledger.len(), state.edges().len())
    });
    let mut starts = BTreeSet::new();
    for s in ledger.levels() {
        for en in ledger.component(s) {
            rep.require(starts.insert(en.start), || format!("start {} enumerated twice", en.start));
            let steps = en.end.len() as u64;
            let Some(threshold) = pair_threshold(string_index(&en.start), s) else {
                rep.fail(format!("start {}: threshold overflows at s = {}", en.start, s));
                continue;
            };
            rep.require(en.threshold == threshold, || {
                format!("start {}: threshold {} recorded, {} recomputed", en.start, en.threshold, threshold)
            });
            let req = requirement_of_task(codec::task(en.start.len() as u64), mode);
            let (j, e) = match req {
                Requirement::Mlr { j, s: rs } if rs == s => (j, None),
                Requirement::Frand { j, s: rs, e } if rs == s => (j, Some(e)),
                _ => {
                    rep.fail(format!("start {}: requirement {:?} does not match precision {}", en.start, req, s));
                    continue;
                }
            };
            rep.require(en.j == j && en.e == e, || {
                format!("start {}: indices differ from the task decoding", en.start)
            });
            let eta = catalog.eval(j, &en.end, steps);
            rep.require(en.eta == eta, || format!("start {}: eta {} recorded, {} recomputed", en.start, en.eta, eta));
            match e {
                None => {
                    let w = Rational::pow2_neg(threshold);
                    rep.require(en.weight == w, || format!("start {}: weight {} not {}", en.start, en.weight, w));
                    rep.require(Rational::pow2_neg(en.eta.len() as u64) <= en.weight, || {
                        format!("start {}: 2^-|eta| = 2^-{} exceeds weight {}", en.start, en.eta.len(), en.weight)
                    });
                }
                Some(e) => {
                    let f: BTreeMap<BitString, u64> = (0..=eta.len())
                        .filter_map(|k| partials.eval(e, &eta.prefix(k), steps).map(|v| (eta.prefix(k), v)))
                        .collect();
                    let f_star = monotonize(&f);
                    let top = f.keys().last().and_then(|k| f_star.get(k)).copied();
                    match top {
                        Some(v) => {
                            rep.require(v > threshold, || {
                                format!("start {}: f*(eta) = {} not above {}", en.start, v, threshold)
                            });
                            let w = Rational::pow2_neg(v);
                            rep.require(en.weight == w, || {
                                format!("start {}: weight {} not 2^-f* = {}", en.start, en.weight, w)
                            });
                        }
                        None => rep.fail(format!("start {}: f undefined on every prefix of {}", en.start, eta)),
                    }
                }
            }
        }
        let mass = ledger.mass(s);
        let cap = Rational::pow2_neg(s);
        rep.require(mass <= cap, || format!("U_{} has mass {} > {}", s, mass, cap));
        rep.value(&format!("mass_{}", s), &mass);
    }
    rep
}

/// Re-evaluates `B` for every edge on the restriction the engine saw and
/// confirms the recorded target is `β`.
pub fn check_edge_predicates(state: &NetworkState, pred: &dyn Predicate) -> CheckReport {
    let mut rep = CheckReport::new("edge_predicates", &scope_of(state));
    for e in state.edges().iter() {
        let n = e.end.len();
        let view = state.restriction(n - 1);
        rep.require(pred.holds(&view, &e.start, &e.end), || {
            format!("B fails on edge ({},{}) over q_{}", e.start, e.end, n - 1)
        });
        let b = beta(&view, &e.start, n, pred);
        rep.require(b == Some(e.end), || format!("edge ({},{}) but beta = {:?}", e.start, e.end, b));
    }
    rep
}

/// No edge starts or lands below a delay-1 prefix.
pub fn check_discard(state: &NetworkState) -> CheckReport {
    let mut rep = CheckReport::new("discard", &scope_of(state));
    for e in state.edges().iter() {
        for node in [e.start, e.end] {
            rep.require(!state.support_blocked(&node), || {
                format!("edge ({},{}) attaches below a discarded prefix of {}", e.start, e.end, node)
            });
        }
    }
    rep
}

pub fn check_network_law(state: &NetworkState) -> CheckReport {
    let mut rep = CheckReport::new("network_law", &scope_of(state));
    if let Err(err) = state.check_network_law() {
        rep.fail(err.to_string());
    }
    rep
}

/// Recursion versus brute force at every node of the depth-`min(N, 5)`
/// truncation.
pub fn check_qflow_oracle(state: &NetworkState) -> CheckReport {
    let depth = state.depth.min(oracle::MAX_ORACLE_DEPTH);
    let mut rep = CheckReport::new("qflow_oracle", &format!("truncation depth {}", depth));
    let table = flow_table(state, depth);
    let r = oracle::inflow_by_definition(state, depth);
    for node in table.nodes() {
        rep.require(r[&node] == *table.r(&node), || {
            format!("{}: R = {} by definition, {} by levels", node, r[&node], table.r(&node))
        });
        match oracle::bruteforce_from_inflow(&r, &node, depth) {
            Ok(p) => {
                rep.require(p == *table.p(&node), || format!("{}: oracle {} vs recursion {}", node, p, table.p(&node)))
            }
            Err(err) => rep.fail(format!("{}: {}", node, err)),
        }
    }
    rep
}

/// Aggregate verdict over every check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub passed: bool,
    pub checks: Vec<CheckReport>,
    pub progress: progress::ProgressReport,
}

/// Runs every check against a state and ledger produced under `config`.
pub fn verify(config: &RunConfig, state: &NetworkState, ledger: &TestLedger) -> Result<HarnessReport, Error> {
    let rule = config.counter_rule()?;
    let pred = config.predicate()?;
    let catalog = FunctionalCatalog::from_names(&config.catalog)?;
    let partials = PartialCatalog::from_names(&config.partials)?;
    let table = flow_table(state, state.depth);
    let mut checks = vec![
        check_semimeasure(&table),
        check_measure_bound(state, &table, &rule),
        check_cutoff(state, &table),
        check_structure(state),
        check_halving(state, &table),
        check_counters(state),
        check_event_log(state, &rule),
        check_ledger(state, ledger, &catalog, &partials),
        check_edge_predicates(state, pred.as_ref()),
        check_discard(state),
        check_network_law(state),
        check_qflow_oracle(state),
    ];
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().all(CheckReport::passed);
    Ok(HarnessReport { passed, checks, progress: progress::task_progress(state) })
}
