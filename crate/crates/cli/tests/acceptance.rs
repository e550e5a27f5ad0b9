//! Acceptance criteria 1 to 11, run without the libtest harness so every
//! criterion prints one PASS/FAIL line; the process exits 1 if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semiflow::config::ConfigDocument;
use semiflow_core::bits::BitString;
use semiflow_core::bridge::{allocate_intervals, lambda_phi, sample, within_standard_errors, SampleStatus};
use semiflow_core::catalog::{FunctionalCatalog, PartialCatalog};
use semiflow_core::codec::Mode;
use semiflow_core::engine::{run, RunConfig, RunOutput};
use semiflow_core::flow::flow_table;
use semiflow_core::harness::oracle::random_sparse_state;
use semiflow_core::harness::{
    check_cutoff, check_halving, check_ledger, check_qflow_oracle, check_semimeasure, check_structure, verify,
    CheckReport,
};
use semiflow_core::network::EdgeRecord;
use semiflow_core::predicate::monotonize;
use semiflow_core::Rational;

/// Wall-clock limit for one shipped run.
const RUN_LIMIT: Duration = Duration::from_secs(120);
/// Wall-clock limit for the whole randomized oracle comparison.
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_STATES: u64 = 200;
/// Retained flow the depth-20 runs must keep, strictly.
const S20_FLOOR: (i64, i64) = (3, 5);
const BRIDGE_SAMPLES: u64 = 100_000;
const BRIDGE_SEED: u64 = 20_240_601;
const BRIDGE_BUDGET: u32 = 64;
/// Binomial standard errors allowed per cylinder.
const BRIDGE_SE: u64 = 4;
const BRIDGE_CYLINDER_DEPTH: usize = 4;
const LAMBDA_STEPS: u64 = 20;
const MONOTONIZER_FUNCTIONS: usize = 1000;

const SHIPPED: [&str; 4] = ["always-20", "mlr-20", "frand-20", "stress-14"];

struct Shipped {
    name: &'static str,
    config: RunConfig,
    out: RunOutput,
    elapsed: Duration,
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    ConfigDocument::load(&configs_dir().join(format!("{}.json", name))).unwrap().run_config()
}

fn shipped_runs() -> Vec<Shipped> {
    SHIPPED
        .iter()
        .map(|&name| {
            let config = load(name);
            let start = Instant::now();
            let out = run(config.clone()).unwrap();
            Shipped { name, config, out, elapsed: start.elapsed() }
        })
        .collect()
}

fn failures(rep: &CheckReport) -> String {
    format!("{} violations, first {:?}", rep.violations, rep.witnesses.first())
}

type Outcome = (bool, String);

fn c1_semimeasure(runs: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let rep = check_semimeasure(&r.out.table);
        let fast = r.elapsed < RUN_LIMIT;
        ok &= rep.passed() && fast;
        notes.push(format!(
            "{} P(e)={} {:.2}s{}",
            r.name,
            r.out.table.p(&BitString::empty()),
            r.elapsed.as_secs_f64(),
            if rep.passed() { String::new() } else { failures(&rep) }
        ));
    }
    (ok, notes.join("; "))
}

/// `1 − Σ_{i=1}^{n} (i+2)^{-2}`, summed independently of the engine.
fn measure_floor(n: u64) -> Rational {
    (1..=n).fold(Rational::one(), |acc, i| acc - Rational::reciprocal_of((i + 2) * (i + 2)))
}

fn c2_measure(runs: &[Shipped]) -> Outcome {
    let floor20 = measure_floor(20);
    let s20_floor = Rational::new(S20_FLOOR.0, S20_FLOOR.1).unwrap();
    let mut ok = floor20 > s20_floor;
    let mut notes = vec![format!("floor_20={}", floor20)];
    for r in runs.iter().filter(|r| r.config.depth == 20) {
        ok &= r.out.rule.n0() == Some(2);
        for n in 0..=20usize {
            ok &= *r.out.table.s(n) >= measure_floor(n as u64);
        }
        let s20 = r.out.table.s(20);
        ok &= *s20 > s20_floor;
        notes.push(format!("{} S_20={}", r.name, s20));
    }
    (ok, notes.join("; "))
}

fn c3_fixture() -> Outcome {
    match semiflow::fixture::check_fixture() {
        Ok((trace, diff)) => (
            diff.is_empty(),
            format!("{} stages, {} values, {} mismatches", trace.stages.len(), trace.values.len(), diff.len()),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn c4_oracle() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut nodes = 0usize;
    for seed in 0..ORACLE_STATES {
        let state = random_sparse_state(seed);
        let rep = check_qflow_oracle(&state);
        nodes += (1usize << (state.depth + 1)) - 1;
        if !rep.passed() {
            ok = false;
        }
    }
    let elapsed = start.elapsed();
    (ok && elapsed < ORACLE_LIMIT, format!("{} states, {} nodes, {:.2}s", ORACLE_STATES, nodes, elapsed.as_secs_f64()))
}

fn c5_cutoff(runs: &[Shipped]) -> Outcome {
    let r = runs.iter().find(|r| r.name == "stress-14").unwrap();
    let rep = check_cutoff(&r.out.state, &r.out.table);
    let blocked: u64 = rep.values.get("blocked_nodes").and_then(|v| v.parse().ok()).unwrap_or(0);
    (
        rep.passed() && blocked > 0,
        format!("stress-14 blocked_nodes={} {}", blocked, if rep.passed() { String::new() } else { failures(&rep) }),
    )
}

fn c6_structure(runs: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let rep = check_structure(&r.out.state);
        ok &= rep.passed();
        notes.push(format!("{} edges={}", r.name, r.out.state.edges().len()));
    }
    let mut planted = runs[0].out.state.clone();
    let outer = planted.edges().iter().next().unwrap().clone();
    let inner_start = outer.start.child(0);
    planted.push_edge(EdgeRecord {
        start: inner_start,
        end: inner_start.concat(&BitString::zeros(outer.end.len() - inner_start.len() + 2)),
        task: outer.task,
        stage_added: outer.stage_added,
        flow_fraction: Rational::zero(),
    });
    let injected = check_structure(&planted);
    let caught = !injected.passed() && injected.witnesses.iter().any(|w| w.starts_with("nested edges"));
    notes.push(format!("injected nested pair caught={}", caught));
    (ok && caught, notes.join("; "))
}

fn c7_ledgers(runs: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs.iter().filter(|r| r.config.mode != Mode::Always) {
        let catalog = FunctionalCatalog::from_names(&r.config.catalog).unwrap();
        let partials = PartialCatalog::from_names(&r.config.partials).unwrap();
        let rep = check_ledger(&r.out.state, &r.out.ledger, &catalog, &partials);
        ok &= rep.passed();
        for (&s, entries) in r.out.ledger.components() {
            let cap = Rational::pow2_neg(s);
            let mass = match r.config.mode {
                Mode::Mlr => {
                    for en in entries {
                        ok &= Rational::pow2_neg(en.eta.len() as u64) <= Rational::pow2_neg(en.threshold);
                    }
                    Rational::sum(entries.iter().map(|en| &en.weight))
                }
                _ => {
                    let mut total = Rational::zero();
                    for en in entries {
                        let steps = en.end.len() as u64;
                        let e = en.e.expect("frand entries carry e");
                        let f: BTreeMap<BitString, u64> = (0..=en.eta.len())
                            .filter_map(|k| partials.eval(e, &en.eta.prefix(k), steps).map(|v| (en.eta.prefix(k), v)))
                            .collect();
                        let top = *monotonize(&f).values().max().expect("f defined somewhere on eta");
                        total += Rational::pow2_neg(top);
                    }
                    total
                }
            };
            ok &= mass <= cap;
            notes.push(format!("{} s={} mass={} cap={}", r.name, s, mass, cap));
        }
        if r.out.ledger.is_empty() {
            notes.push(format!("{} ledger empty", r.name));
        }
    }
    (ok, notes.join("; "))
}

fn c8_halving(runs: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let rep = check_halving(&r.out.state, &r.out.table);
        ok &= rep.passed();
        notes.push(format!("{} levels[{}]", r.name, rep.values.get("levels").cloned().unwrap_or_default()));
    }
    (ok, notes.join("; "))
}

fn c9_bridge() -> Outcome {
    let out = run(load("bridge-12")).unwrap();
    let map = match allocate_intervals(&out.table) {
        Ok(m) => m,
        Err(e) => return (false, e.to_string()),
    };
    let mut ok = out.table.nodes().all(|n| map.length(&n) == out.table.p(&n));
    let mut hits: BTreeMap<BitString, u64> = BTreeMap::new();
    let mut exhausted = 0u64;
    for i in 0..BRIDGE_SAMPLES {
        let drawn = sample(&map, BRIDGE_SEED + i, BRIDGE_BUDGET).unwrap();
        exhausted += (drawn.status == SampleStatus::BudgetExhausted) as u64;
        for k in 0..=BRIDGE_CYLINDER_DEPTH.min(drawn.output.len()) {
            *hits.entry(drawn.output.prefix(k)).or_default() += 1;
        }
    }
    let mut outside = 0;
    for n in 0..=BRIDGE_CYLINDER_DEPTH {
        for node in BitString::level(n) {
            let h = hits.get(&node).copied().unwrap_or(0);
            if !within_standard_errors(h, BRIDGE_SAMPLES, out.table.p(&node), BRIDGE_SE) {
                outside += 1;
            }
        }
    }
    ok &= outside == 0;
    let catalog = FunctionalCatalog::default_catalog();
    let mut lambda_ok = true;
    for j in 0..catalog.len() as u64 {
        for steps in 0..=LAMBDA_STEPS {
            lambda_ok &= lambda_phi(&catalog, j, &BitString::empty(), steps) <= Rational::one();
            for sigma in (0..=3).flat_map(BitString::level) {
                let split =
                    lambda_phi(&catalog, j, &sigma.child(0), steps) + lambda_phi(&catalog, j, &sigma.child(1), steps);
                lambda_ok &= lambda_phi(&catalog, j, &sigma, steps) >= split;
            }
        }
    }
    (
        ok && lambda_ok,
        format!(
            "lengths exact, {} samples, {} cylinders outside {} SE, {} budget-exhausted, lambda law={}",
            BRIDGE_SAMPLES, outside, BRIDGE_SE, exhausted, lambda_ok
        ),
    )
}

fn random_function(rng: &mut ChaCha8Rng) -> BTreeMap<BitString, u64> {
    let size = (rng.next_u64() % 40) as usize;
    (0..size)
        .map(|_| {
            let len = (rng.next_u64() % 9) as usize;
            (BitString::from_value(len, rng.next_u64() % (1 << len)), rng.next_u64() % 50)
        })
        .collect()
}

fn c10_monotonizer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    for _ in 0..MONOTONIZER_FUNCTIONS {
        let f = random_function(&mut rng);
        let star = monotonize(&f);
        ok &= f.iter().all(|(k, v)| star[k] >= *v);
        for (a, va) in &star {
            for (b, vb) in &star {
                ok &= !a.is_prefix_of(b) || va <= vb;
            }
        }
        ok &= monotonize(&star) == star;
    }
    (ok, format!("{} functions over strings of length <= 8", MONOTONIZER_FUNCTIONS))
}

fn cli(args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_semiflow"))
        .env_remove(semiflow::config::OUT_DIR_ENV)
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap());
    }
    files
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let config = configs_dir().join("mlr-20.json");
    let mut outputs = Vec::new();
    for round in 0..2 {
        let base = tmp.path().join(format!("round{}", round));
        let build = base.join("build");
        let mut transcript = Vec::new();
        transcript.push(cli(&["build", config.to_str().unwrap()], &build));
        let snap = build.join("snapshot.json");
        let snap = snap.to_str().unwrap();
        transcript.push(cli(&["verify", snap], &base.join("verify")));
        transcript.push(cli(&["sample", snap, "--count", "2000", "--seed", "5"], &base.join("sample")));
        for format in ["dot", "csv", "json"] {
            let mut args = vec!["export", snap, "--format", format];
            if format == "dot" {
                args.extend(["--depth-cap", "6"]);
            }
            transcript.push(cli(&args, &base.join(format)));
        }
        let fixture = Command::new(env!("CARGO_BIN_EXE_semiflow")).arg("fixture").output().unwrap();
        transcript.push((fixture.status.code().unwrap_or(-1), fixture.stdout));
        let mut files = BTreeMap::new();
        for sub in ["build", "verify", "sample", "dot", "csv", "json"] {
            for (name, bytes) in tree_bytes(&base.join(sub)) {
                files.insert(format!("{}/{}", sub, name), bytes);
            }
        }
        // Printed paths differ between rounds; exit codes and files must not.
        let codes: Vec<i32> = transcript.iter().map(|(c, _)| *c).collect();
        outputs.push((codes, files));
    }
    let same = outputs[0] == outputs[1];
    let all_zero = outputs[0].0.iter().all(|&c| c == 0);
    (same && all_zero, format!("{} files compared, exit codes {:?}", outputs[0].1.len(), outputs[0].0))
}

fn main() {
    let runs = shipped_runs();
    for r in &runs {
        let report = verify(&r.config, &r.out.state, &r.out.ledger).unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
        println!(
            "harness {}: {}",
            r.name,
            if failed.is_empty() { "all checks pass".to_string() } else { format!("failing {:?}", failed) }
        );
    }
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "semi-measure law on shipped runs", c1_semimeasure(&runs)),
        (2, "retained-flow bound and S_20 > 3/5", c2_measure(&runs)),
        (3, "canonical fixture equality", c3_fixture()),
        (4, "q-flow oracle equivalence", c4_oracle()),
        (5, "cut-off criterion on the stress run", c5_cutoff(&runs)),
        (6, "no nested edge pairs, injected pair caught", c6_structure(&runs)),
        (7, "test ledger masses", c7_ledgers(&runs)),
        (8, "halving levels", c8_halving(&runs)),
        (9, "measure bridge", c9_bridge()),
        (10, "monotonizer", c10_monotonizer()),
        (11, "determinism", c11_determinism()),
    ];
    for (n, name, (ok, detail)) in &results {
        println!("criterion {:>2} {}: {} ({})", n, if *ok { "PASS" } else { "FAIL" }, name, detail);
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    let fixture = run(load("fixture-8")).unwrap();
    assert_eq!(flow_table(&fixture.state, 8).s_values(), fixture.table.s_values());
    if !failed.is_empty() {
        eprintln!("failing criteria: {:?}", failed);
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria pass", results.len());
}
