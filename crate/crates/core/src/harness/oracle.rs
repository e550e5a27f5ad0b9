//! Brute-force q-flow: in-flow straight from `q`, then the largest `R`-sum
//! over every maximal antichain below a node.
//!
//! Since `R >= 0`, the supremum over all prefix-free extension sets is
//! attained on a maximal one, and the maximal antichains of the complete
//! subtree at `v` are `{v}` together with the unions of one maximal
//! antichain below each child. A subtree of height `h` has
//! `a(h) = 1 + a(h−1)²` of them (458330 at height 5).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::Error;
use crate::network::{EdgeRecord, NetworkState};
use crate::rational::Rational;

pub const MAX_ORACLE_DEPTH: usize = 5;

/// Number of maximal antichains in a complete binary tree of height `h`.
pub fn cut_count(h: usize) -> u64 {
    (0..h).fold(1u64, |a, _| 1 + a * a)
}

/// `R` for every node up to `depth`, from `R(τ) = Σ_{σ≺τ} q(σ,τ) R(σ)`.
pub fn inflow_by_definition(state: &NetworkState, depth: usize) -> BTreeMap<BitString, Rational> {
    let view = state.restriction(depth);
    let mut r: BTreeMap<BitString, Rational> = BTreeMap::new();
    r.insert(BitString::empty(), Rational::one());
    for len in 1..=depth {
        for tau in BitString::level(len) {
            let mut acc = Rational::zero();
            for k in 0..len {
                let sigma = tau.prefix(k);
                let q = view.q_value(&sigma, &tau);
                if !q.is_zero() {
                    acc += q * &r[&sigma];
                }
            }
            r.insert(tau, acc);
        }
    }
    r
}

fn sums<T: Clone + core::ops::Add<Output = T>>(vals: &BTreeMap<BitString, T>, node: BitString, depth: usize) -> Vec<T> {
    let own = vals[&node].clone();
    if node.len() == depth {
        return vec![own];
    }
    let left = sums(vals, node.child(0), depth);
    let right = sums(vals, node.child(1), depth);
    let mut out = Vec::with_capacity(1 + left.len() * right.len());
    out.push(own);
    for a in &left {
        for b in &right {
            out.push(a.clone() + b.clone());
        }
    }
    out
}

/// `sup_{D} Σ_{τ∈D} R(τ)` over prefix-free sets `D` of extensions of
/// `sigma` of length at most `depth`, by explicit enumeration.
pub fn bruteforce_qflow(state: &NetworkState, sigma: &BitString, depth: usize) -> Result<Rational, Error> {
    let r = inflow_by_definition(state, depth);
    bruteforce_from_inflow(&r, sigma, depth)
}

/// Same as [`bruteforce_qflow`] over a precomputed in-flow map.
pub fn bruteforce_from_inflow(
    r: &BTreeMap<BitString, Rational>,
    sigma: &BitString,
    depth: usize,
) -> Result<Rational, Error> {
    if depth > MAX_ORACLE_DEPTH {
        return Err(Error::Bound(alloc::format!("oracle depth {} exceeds {}", depth, MAX_ORACLE_DEPTH)));
    }
    if sigma.len() > depth {
        return Err(Error::Bound(alloc::format!("{} is deeper than {}", sigma, depth)));
    }
    let below: BTreeMap<BitString, Rational> =
        r.iter().filter(|(k, _)| sigma.is_prefix_of(k) && k.len() <= depth).map(|(k, v)| (*k, v.clone())).collect();
    // Sum over a common denominator so the enumeration runs on integers.
    let lcm = below.values().fold(BigUint::one(), |acc, v| acc.lcm(&v.denom()));
    let scaled: BTreeMap<BitString, BigInt> =
        below.iter().map(|(k, v)| (*k, v.numer() * BigInt::from(&lcm / v.denom()))).collect();
    let best: BigInt = match scaled.values().map(|v| v.to_i128()).collect::<Option<Vec<_>>>() {
        Some(small) if small.iter().all(|v| v.unsigned_abs() < (1u128 << 100)) => {
            let vals: BTreeMap<BitString, i128> = scaled.keys().copied().zip(small).collect();
            BigInt::from(sums(&vals, *sigma, depth).into_iter().max().expect("at least one antichain"))
        }
        _ => sums(&scaled, *sigma, depth).into_iter().max().expect("at least one antichain"),
    };
    Rational::from_big(best, BigInt::from(lcm))
}

struct Draw(ChaCha8Rng);

impl Draw {
    fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    fn delay(&mut self) -> Rational {
        match self.below(8) {
            0 => Rational::zero(),
            1 => Rational::one(),
            _ => Rational::reciprocal_of(2 + self.below(11)),
        }
    }

    fn node(&mut self, len: usize) -> BitString {
        BitString::from_value(len, self.below(1 << len))
    }
}

/// A random sparse network of depth `1..=5`: a few uniform levels, fans,
/// single-node overrides and at most one extra edge per start node, each
/// edge carrying its start's delay. Delays are drawn from `{0, 1/k, 1}`.
pub fn random_sparse_state(seed: u64) -> NetworkState {
    let mut g = Draw(ChaCha8Rng::seed_from_u64(seed));
    let depth = 1 + g.below(MAX_ORACLE_DEPTH as u64) as usize;
    let mut state = NetworkState::new(depth);
    for len in 0..=depth {
        if g.below(2) == 0 {
            let v = g.delay();
            state.set_level_uniform(len, v);
        }
        if len >= 2 && g.below(3) == 0 {
            let target = g.node(len);
            let root = target.prefix(g.below(len as u64) as usize);
            let v = g.delay();
            state.add_fan(root, target, v);
        }
        for _ in 0..g.below(3) {
            let node = g.node(len);
            let v = g.delay();
            state.set_delay(node, v);
        }
    }
    let mut starts = alloc::collections::BTreeSet::new();
    for _ in 0..g.below(4) {
        if depth < 2 {
            break;
        }
        let start_len = g.below(depth as u64 - 1) as usize;
        let start = g.node(start_len);
        let span = 2 + g.below((depth - start_len - 1) as u64) as usize;
        let end = start.concat(&g.node(span));
        if starts.insert(start) {
            let fraction = state.delay(&start).clone();
            state.push_edge(EdgeRecord { start, end, task: 0, stage_added: 0, flow_fraction: fraction });
        }
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    #[test]
    fn cut_counts() {
        assert_eq!([0, 1, 2, 3, 4, 5].map(cut_count), [1, 2, 5, 26, 677, 458330]);
        let s = NetworkState::new(3);
        let r = inflow_by_definition(&s, 3);
        let vals: BTreeMap<BitString, i128> = r.keys().map(|k| (*k, 1i128)).collect();
        assert_eq!(sums(&vals, BitString::empty(), 3).len() as u64, cut_count(3));
    }

    #[test]
    fn fixture_node() {
        let r = |n, d| Rational::new(n, d).unwrap();
        let mut s = NetworkState::new(3);
        s.set_level_uniform(1, r(1, 9));
        for root in [bs("0"), bs("1")] {
            let target = root.concat(&bs("00"));
            s.add_fan(root, target, r(1, 8));
            s.push_edge(EdgeRecord { start: root, end: target, task: 1, stage_added: 3, flow_fraction: r(1, 9) });
        }
        assert_eq!(bruteforce_qflow(&s, &bs("00"), 3), Ok(r(5, 18)));
        assert_eq!(bruteforce_qflow(&NetworkState::new(4), &bs("01"), 4), Ok(r(1, 4)));
        assert!(bruteforce_qflow(&NetworkState::new(8), &bs("01"), 6).is_err());
    }
}
