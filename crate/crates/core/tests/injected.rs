//! Each harness check must reject a state with one planted defect.

use semiflow_core::bits::bs;
use semiflow_core::catalog::{FunctionalCatalog, PartialCatalog};
use semiflow_core::codec::Mode;
use semiflow_core::engine::{run, RunConfig, RunOutput};
use semiflow_core::flow::flow_table;
use semiflow_core::harness::*;
use semiflow_core::ledger::LedgerEntry;
use semiflow_core::network::EdgeRecord;
use semiflow_core::Rational;

fn always(depth: usize) -> RunOutput {
    run(RunConfig { depth, mode: Mode::Always, ..RunConfig::default() }).unwrap()
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

#[test]
fn clean_runs_pass_everything() {
    for mode in [Mode::Always, Mode::Mlr, Mode::Frand] {
        let cfg = RunConfig { depth: 12, mode, ..RunConfig::default() };
        let out = run(cfg.clone()).unwrap();
        let report = verify(&cfg, &out.state, &out.ledger).unwrap();
        assert!(report.passed, "{:?}", report.checks.iter().filter(|c| !c.passed()).collect::<Vec<_>>());
    }
}

#[test]
fn lowered_p_breaks_the_semimeasure_law() {
    let out = always(8);
    let mut table = out.table.clone();
    let node = bs("01");
    table.set_p(&node, table.p(&node) - r(1, 1000));
    let rep = check_semimeasure(&table);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.witnesses.iter().any(|w| w.starts_with("01:")), "{:?}", rep.witnesses);
}

#[test]
fn nested_edges_break_the_structure() {
    let mut state = always(8).state;
    assert!(check_structure(&state).passed());
    state.push_edge(EdgeRecord {
        start: bs("00"),
        end: bs("00000"),
        task: 1,
        stage_added: 8,
        flow_fraction: Rational::zero(),
    });
    let rep = check_structure(&state);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.witnesses.iter().any(|w| w.contains("nested edges (0,000) and (00,00000)")), "{:?}", rep.witnesses);
}

#[test]
fn crossing_edge_breaks_halving() {
    let out = always(8);
    let mut state = out.state.clone();
    state.push_edge(EdgeRecord {
        start: bs("00000"),
        end: bs("0000000"),
        task: 2,
        stage_added: 8,
        flow_fraction: Rational::zero(),
    });
    let rep = check_halving(&state, &out.table);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.witnesses.iter().any(|w| w.contains("crosses level 7")), "{:?}", rep.witnesses);
}

#[test]
fn corrupted_delay_map_breaks_cutoff() {
    let out = always(8);
    let mut state = out.state.clone();
    state.set_delay(bs("01"), Rational::one());
    let rep = check_cutoff(&state, &out.table);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.witnesses.iter().any(|w| w.contains("below a delay-1 prefix")));
    let stale = flow_table(&state, state.depth);
    let mut fresh = out.state.clone();
    fresh.set_level_uniform(3, Rational::zero());
    assert!(!check_cutoff(&fresh, &stale).passed());
}

#[test]
fn non_unit_counter_is_caught() {
    let mut state = always(8).state;
    state.set_delay(bs("0101"), r(2, 7));
    let rep = check_counters(&state);
    assert_eq!(rep.verdict, Verdict::Fail);
}

#[test]
fn wrong_edge_fraction_is_caught() {
    let mut state = always(8).state;
    state.edges_mut()[0].flow_fraction = r(1, 8);
    assert!(!check_structure(&state).passed());
}

#[test]
fn overfull_node_breaks_the_network_law() {
    let mut state = always(8).state;
    state.set_delay(bs("11"), r(3, 2));
    assert!(!check_network_law(&state).passed());
}

#[test]
fn heavy_ledger_is_caught() {
    let cfg = RunConfig { depth: 12, mode: Mode::Mlr, ..RunConfig::default() };
    let out = run(cfg.clone()).unwrap();
    let catalog = FunctionalCatalog::from_names(&cfg.catalog).unwrap();
    let partials = PartialCatalog::from_names(&cfg.partials).unwrap();
    assert!(check_ledger(&out.state, &out.ledger, &catalog, &partials).passed());
    let mut ledger = out.ledger.clone();
    let first = ledger.components().values().next().unwrap()[0].clone();
    ledger.components_mut().get_mut(&0).unwrap()[0] = LedgerEntry { weight: Rational::one(), ..first };
    let rep = check_ledger(&out.state, &ledger, &catalog, &partials);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.witnesses.iter().any(|w| w.contains("has mass")), "{:?}", rep.witnesses);
}

#[test]
fn edge_predicates_reject_foreign_edges() {
    let cfg = RunConfig { depth: 10, mode: Mode::Mlr, ..RunConfig::default() };
    let mut out = run(cfg.clone()).unwrap();
    out.state.edges_mut()[0].end = bs("000001");
    assert!(!check_edge_predicates(&out.state, cfg.predicate().unwrap().as_ref()).passed());
}

#[test]
fn failing_verify_reports_the_check() {
    let cfg = RunConfig { depth: 8, mode: Mode::Always, ..RunConfig::default() };
    let mut state = always(8).state;
    state.set_level_uniform(4, r(1, 25));
    let report = verify(&cfg, &state, &always(8).ledger).unwrap();
    assert!(!report.passed);
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    assert!(failed.contains(&"event_log"), "{:?}", failed);
}
