//! Semi-measures and functionals: push-forwards `λ_Φ`, `P̄` brackets,
//! interval allocation and a seeded sampler.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::One;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::catalog::FunctionalCatalog;
use crate::error::Error;
use crate::flow::FlowTable;
use crate::rational::Rational;

/// Name of the bit generator recorded alongside every sample stream.
pub const GENERATOR: &str = "chacha8";

/// Largest sampler bit budget; dyadic endpoints stay within `u128`.
pub const MAX_BIT_BUDGET: u32 = 120;

/// `λ_Φ(σ)` with inputs of length at most `steps`.
pub fn lambda_phi(catalog: &FunctionalCatalog, j: u64, sigma: &BitString, steps: u64) -> Rational {
    lambda_phi_bounded(catalog, j, sigma, steps, steps as usize)
}

/// `Σ 2^{-|ι|}` over the minimal inputs `ι` with `|ι| <= max_input` whose
/// output at budget `steps` extends `σ`.
pub fn lambda_phi_bounded(
    catalog: &FunctionalCatalog,
    j: u64,
    sigma: &BitString,
    steps: u64,
    max_input: usize,
) -> Rational {
    // Outputs are monotone in the input, so an input whose output is
    // incomparable with σ has no useful extension.
    let mut acc = Rational::zero();
    let mut stack = vec![BitString::empty()];
    while let Some(input) = stack.pop() {
        let out = catalog.eval(j, &input, steps);
        if sigma.is_prefix_of(&out) {
            acc += Rational::pow2_neg(input.len() as u64);
        } else if out.is_prefix_of(sigma) && input.len() < max_input.min(BitString::MAX_LEN - 1) {
            stack.push(input.child(1));
            stack.push(input.child(0));
        }
    }
    acc
}

/// `Σ_e 2^{-(e+1)} λ_{Φ_e}(σ)` over the base entries, each with the input
/// budget left after the `1^e 0` prefix. For `σ ≠ ε` this equals
/// `λ_U(σ)` of the universal entry with input budget `max_input`.
pub fn mixture(catalog: &FunctionalCatalog, sigma: &BitString, steps: u64, max_input: usize) -> Rational {
    let mut acc = Rational::zero();
    for (e, j) in catalog.base_indices().into_iter().enumerate() {
        if max_input < e + 1 {
            break;
        }
        let inner = lambda_phi_bounded(catalog, j as u64, sigma, steps, max_input - e - 1);
        acc += inner * Rational::pow2_neg(e as u64 + 1);
    }
    acc
}

/// Level sums `Σ_{|τ|=n, τ⪰σ} P(τ)` for `n = |σ| ..= depth`.
pub fn pbar_levels(table: &FlowTable, sigma: &BitString) -> Vec<Rational> {
    (sigma.len()..=table.depth()).map(|n| table.p_sum_below(sigma, n)).collect()
}

/// Upper bound on `P̄(σ)` from the deepest level, with that level.
///
/// Panics if the level sums ever increase, which a semi-measure rules out.
pub fn pbar_estimate(table: &FlowTable, sigma: &BitString) -> (Rational, usize) {
    let levels = pbar_levels(table, sigma);
    for w in levels.windows(2) {
        assert!(w[1] <= w[0], "level sums below {} increase: {} then {}", sigma, w[0], w[1]);
    }
    (levels.last().cloned().expect("at least one level"), table.depth())
}

/// Half-open intervals `I(σ) = [lo(σ), lo(σ) + P(σ))` inside `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalMap {
    depth: usize,
    lo: Vec<Vec<Rational>>,
    len: Vec<Vec<Rational>>,
}

impl IntervalMap {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn interval(&self, node: &BitString) -> (Rational, Rational) {
        let (lo, len) = (&self.lo[node.len()][node.value() as usize], &self.len[node.len()][node.value() as usize]);
        (lo.clone(), lo + len)
    }

    pub fn length(&self, node: &BitString) -> &Rational {
        &self.len[node.len()][node.value() as usize]
    }

    pub fn lo(&self, node: &BitString) -> &Rational {
        &self.lo[node.len()][node.value() as usize]
    }
}

/// Contiguous left-to-right allocation: `I(σ0)` leads `I(σ)` and `I(σ1)`
/// follows it; whatever is left of `I(σ)` is dissipated at `σ`.
pub fn allocate_intervals(table: &FlowTable) -> Result<IntervalMap, Error> {
    if !table.has_qflow() {
        return Err(Error::Invariant("allocation needs the q-flow table".into()));
    }
    let root = table.p(&BitString::empty());
    if root.is_negative() || *root > Rational::one() {
        return Err(Error::Invariant(alloc::format!("P(e) = {} outside [0,1]", root)));
    }
    let mut lo = vec![vec![Rational::zero()]];
    let mut len = vec![vec![root.clone()]];
    for n in 1..=table.depth() {
        let prev_lo = &lo[n - 1];
        let prev_p = table.p_row(n - 1);
        let row_p = table.p_row(n);
        let mut row_lo = Vec::with_capacity(row_p.len());
        for (i, parent_lo) in prev_lo.iter().enumerate() {
            let (left, right) = (&row_p[2 * i], &row_p[2 * i + 1]);
            if left.is_negative() || right.is_negative() || left + right > prev_p[i] {
                let node = BitString::from_value(n - 1, i as u64);
                return Err(Error::Invariant(alloc::format!("semi-measure law fails at {}", node)));
            }
            row_lo.push(parent_lo.clone());
            row_lo.push(parent_lo + left);
        }
        lo.push(row_lo);
        len.push(row_p.to_vec());
    }
    Ok(IntervalMap { depth: table.depth(), lo, len })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStatus {
    /// The point was located at the truncation depth or in a dissipation gap.
    CompleteAtDepth,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub output: BitString,
    pub status: SampleStatus,
    pub bits_used: u32,
}

/// `m / 2^k` as a rational.
fn dyadic(m: u128, k: u32) -> Rational {
    if k < 63 && m < (1u128 << 62) {
        Rational::new(m as i64, 1i64 << k).expect("nonzero denominator")
    } else {
        Rational::from_big(BigInt::from(m), BigInt::one() << k).expect("nonzero denominator")
    }
}

/// Draws bits of a uniform `x ∈ [0,1)` one at a time and follows the
/// intervals down from `ε`, refining until `[a, a + 2^{-k})` lies inside one
/// child or inside the gap left by both.
pub fn sample(map: &IntervalMap, seed: u64, bit_budget: u32) -> Result<Sample, Error> {
    if bit_budget == 0 || bit_budget > MAX_BIT_BUDGET {
        return Err(Error::Bound(alloc::format!("bit budget {} outside [1, {}]", bit_budget, MAX_BIT_BUDGET)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = 0u64;
    let mut pool_left = 0u32;
    let mut m: u128 = 0;
    let mut k: u32 = 0;
    let mut draw = |m: &mut u128, k: &mut u32| {
        if pool_left == 0 {
            pool = rng.next_u64();
            pool_left = 64;
        }
        let bit = (pool >> 63) as u128;
        pool <<= 1;
        pool_left -= 1;
        *m = (*m << 1) | bit;
        *k += 1;
    };
    // Where the current dyadic interval sits relative to [lo, hi).
    let inside = |m: u128, k: u32, lo: &Rational, hi: &Rational| -> bool {
        let a = dyadic(m, k);
        let b = dyadic(m + 1, k);
        &a >= lo && &b <= hi
    };
    let (lo, hi) = map.interval(&BitString::empty());
    let one = Rational::one();
    loop {
        if inside(m, k, &lo, &hi) {
            break;
        }
        if inside(m, k, &hi, &one) {
            return Ok(Sample { output: BitString::empty(), status: SampleStatus::CompleteAtDepth, bits_used: k });
        }
        if k == bit_budget {
            return Ok(Sample { output: BitString::empty(), status: SampleStatus::BudgetExhausted, bits_used: k });
        }
        draw(&mut m, &mut k);
    }
    let mut node = BitString::empty();
    while node.len() < map.depth() {
        let (c0_lo, c0_hi) = map.interval(&node.child(0));
        let (_, c1_hi) = map.interval(&node.child(1));
        let (_, parent_hi) = map.interval(&node);
        loop {
            if inside(m, k, &c0_lo, &c0_hi) {
                node = node.child(0);
                break;
            }
            if inside(m, k, &c0_hi, &c1_hi) {
                node = node.child(1);
                break;
            }
            if inside(m, k, &c1_hi, &parent_hi) {
                return Ok(Sample { output: node, status: SampleStatus::CompleteAtDepth, bits_used: k });
            }
            if k == bit_budget {
                return Ok(Sample { output: node, status: SampleStatus::BudgetExhausted, bits_used: k });
            }
            draw(&mut m, &mut k);
        }
    }
    Ok(Sample { output: node, status: SampleStatus::CompleteAtDepth, bits_used: k })
}

/// `true` when `hits` out of `trials` lies within `k` binomial standard
/// errors of `trials * p`, decided exactly as `(hits - np)^2 <= k^2 n p (1-p)`.
pub fn within_standard_errors(hits: u64, trials: u64, p: &Rational, k: u64) -> bool {
    let n = Rational::from_integer(trials as i64);
    let dev = Rational::from_integer(hits as i64) - &n * p;
    let var = &n * p * (Rational::one() - p);
    &dev * &dev <= Rational::from_integer((k * k) as i64) * var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::flow::flow_table;
    use crate::network::NetworkState;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let c = FunctionalCatalog::default_catalog();
        assert_eq!(lambda_phi(&c, 0, &bs("0110"), 10), r(1, 16));
        assert_eq!(lambda_phi(&c, 1, &bs("000"), 10), Rational::one());
        assert!(lambda_phi(&c, 1, &bs("010"), 10).is_zero());
        assert!(lambda_phi(&c, 1, &bs("0000"), 3).is_zero());
    }

    #[test]
    fn uniform_allocation_is_dyadic() {
        let t = flow_table(&NetworkState::new(4), 4);
        let map = allocate_intervals(&t).unwrap();
        let (lo, hi) = map.interval(&bs("101"));
        assert_eq!((lo, hi), (r(5, 8), r(6, 8)));
        let (v, level) = pbar_estimate(&t, &bs("01"));
        assert_eq!((v, level), (r(1, 4), 4));
    }

    #[test]
    fn leaky_table() {
        let t = FlowTable::from_p_rows(vec![vec![r(1, 1)], vec![r(1, 4), r(1, 4)]]);
        assert_eq!(pbar_estimate(&t, &bs("e")).0, r(1, 2));
        let map = allocate_intervals(&t).unwrap();
        assert_eq!(map.interval(&bs("1")), (r(1, 4), r(1, 2)));
    }

    #[test]
    fn allocation_refuses_bad_tables() {
        let t = FlowTable::from_p_rows(vec![vec![r(1, 2)], vec![r(1, 4), r(1, 3)]]);
        assert!(allocate_intervals(&t).is_err());
    }

    #[test]
    fn uniform_sampler_copies_bits() {
        let t = flow_table(&NetworkState::new(6), 6);
        let map = allocate_intervals(&t).unwrap();
        let s = sample(&map, 7, 64).unwrap();
        assert_eq!(s.status, SampleStatus::CompleteAtDepth);
        assert_eq!(s.output.len(), 6);
        assert_eq!(s.bits_used, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let first = rng.next_u64() >> 58;
        assert_eq!(s.output.value(), first);
        assert!(sample(&map, 7, 0).is_err());
    }

    #[test]
    fn dissipation_gap() {
        let t = FlowTable::from_p_rows(vec![vec![r(1, 1024)], vec![r(1, 2048), r(1, 2048)]]);
        let map = allocate_intervals(&t).unwrap();
        let s = sample(&map, 1, 64).unwrap();
        assert_eq!(s.output, bs("e"));
        assert_eq!(s.status, SampleStatus::CompleteAtDepth);
    }
}
