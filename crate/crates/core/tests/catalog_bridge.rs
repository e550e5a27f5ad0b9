use semiflow_core::bits::BitString;
use semiflow_core::bridge::{
    allocate_intervals, lambda_phi, lambda_phi_bounded, mixture, pbar_estimate, sample, within_standard_errors,
    SampleStatus,
};
use semiflow_core::catalog::{FunctionalCatalog, PartialCatalog};
use semiflow_core::codec::Mode;
use semiflow_core::engine::{run, RunConfig};
use semiflow_core::Rational;

fn strings_upto(len: usize) -> impl Iterator<Item = BitString> {
    (0..=len).flat_map(BitString::level)
}

#[test]
fn functionals_are_monotone() {
    let catalog = FunctionalCatalog::default_catalog();
    for j in 0..catalog.len() as u64 {
        for input in strings_upto(9) {
            for steps in 0..=20u64 {
                let out = catalog.eval(j, &input, steps);
                for b in 0..2 {
                    let longer = catalog.eval(j, &input.child(b), steps);
                    assert!(out.is_prefix_of(&longer), "j={} {} -> {} but {}{} -> {}", j, input, out, input, b, longer);
                }
                let later = catalog.eval(j, &input, steps + 1);
                assert!(
                    out.is_prefix_of(&later),
                    "j={} {}: steps {} -> {}, {} -> {}",
                    j,
                    input,
                    steps,
                    out,
                    steps + 1,
                    later
                );
            }
        }
    }
}

#[test]
fn partials_converge_stably() {
    let partials = PartialCatalog::default_catalog();
    for e in 0..partials.len() as u64 {
        for input in strings_upto(8) {
            let mut seen = None;
            for steps in 0..=80u64 {
                let v = partials.eval(e, &input, steps);
                if let Some(prev) = seen {
                    assert_eq!(v, Some(prev), "e={} {} changed at {}", e, input, steps);
                }
                seen = seen.or(v);
            }
        }
    }
}

#[test]
fn lambda_is_a_semimeasure() {
    let catalog = FunctionalCatalog::default_catalog();
    for j in 0..catalog.len() as u64 {
        for steps in 0..=20u64 {
            assert!(lambda_phi(&catalog, j, &BitString::empty(), steps) <= Rational::one());
            for sigma in strings_upto(3) {
                let whole = lambda_phi(&catalog, j, &sigma, steps);
                let split =
                    lambda_phi(&catalog, j, &sigma.child(0), steps) + lambda_phi(&catalog, j, &sigma.child(1), steps);
                assert!(whole >= split, "j={} steps={} {}: {} < {}", j, steps, sigma, whole, split);
            }
        }
    }
}

/// `λ_Φ(σ)` counted over all inputs of length exactly `steps`.
fn counted(catalog: &FunctionalCatalog, j: u64, sigma: &BitString, steps: u64) -> Rational {
    let hits = BitString::level(steps as usize).filter(|i| sigma.is_prefix_of(&catalog.eval(j, i, steps))).count();
    Rational::new(hits as i64, 1 << steps).unwrap()
}

#[test]
fn lambda_matches_counting() {
    let catalog = FunctionalCatalog::default_catalog();
    for j in 0..catalog.len() as u64 {
        for steps in 0..=12u64 {
            for sigma in strings_upto(4) {
                assert_eq!(
                    lambda_phi(&catalog, j, &sigma, steps),
                    counted(&catalog, j, &sigma, steps),
                    "j={} {} {}",
                    j,
                    sigma,
                    steps
                );
            }
        }
    }
}

#[test]
fn mixture_is_the_universal_entry() {
    let catalog = FunctionalCatalog::default_catalog();
    let u = catalog.names().iter().position(|n| n == "universal").unwrap() as u64;
    for max_input in 0..=12usize {
        for sigma in strings_upto(4).skip(1) {
            assert_eq!(
                mixture(&catalog, &sigma, 12, max_input),
                lambda_phi_bounded(&catalog, u, &sigma, 12, max_input)
            );
        }
    }
}

#[test]
fn allocation_lengths_equal_p() {
    for mode in [Mode::Always, Mode::Mlr] {
        let out = run(RunConfig { depth: 12, mode, ..RunConfig::default() }).unwrap();
        let map = allocate_intervals(&out.table).unwrap();
        for node in out.table.nodes() {
            assert_eq!(map.length(&node), out.table.p(&node));
            let (lo, hi) = map.interval(&node);
            assert!(lo >= Rational::zero() && hi <= Rational::one());
            if !node.is_empty() {
                let (plo, phi) = map.interval(&node.parent().unwrap());
                assert!(lo >= plo && hi <= phi);
            }
            if node.len() < 12 {
                let (_, left_hi) = map.interval(&node.child(0));
                let (right_lo, _) = map.interval(&node.child(1));
                assert_eq!(left_hi, right_lo);
                assert_eq!(map.lo(&node.child(0)), &lo);
            }
        }
        let (upper, level) = pbar_estimate(&out.table, &BitString::empty());
        assert_eq!(level, 12);
        assert!(upper <= Rational::one() && upper >= *out.table.s(12));
    }
}

#[test]
fn samples_follow_p() {
    let out = run(RunConfig { depth: 8, mode: Mode::Always, ..RunConfig::default() }).unwrap();
    let map = allocate_intervals(&out.table).unwrap();
    let n = 4000u64;
    let drawn: Vec<_> = (0..n).map(|s| sample(&map, s, 64).unwrap()).collect();
    assert!(drawn.iter().all(|d| d.status == SampleStatus::CompleteAtDepth));
    for sigma in strings_upto(3) {
        let hits = drawn.iter().filter(|d| sigma.is_prefix_of(&d.output)).count() as u64;
        assert!(within_standard_errors(hits, n, out.table.p(&sigma), 4), "{}: {} of {}", sigma, hits, n);
    }
    assert_eq!(sample(&map, 9, 64).unwrap(), sample(&map, 9, 64).unwrap());
}
