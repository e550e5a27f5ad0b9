//! String positions, the two pairing functions and the task schedule.
//!
//! Two pairings are kept apart on purpose. Task indices use the Cantor
//! pairing so that small requirements get small task numbers and are
//! serviced at shallow depth. The thresholds compared against output lengths
//! use `⟨m,n⟩ = 2^{n+1}(2m+1) - 1`, which dominates `m + n` and satisfies
//! `Σ_m 2^{-⟨m,s⟩} ≤ 2^{-s}`.

use num_integer::Roots;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;

/// Position of `σ` in the length-lexicographic enumeration `ε, 0, 1, 00, …`.
pub fn string_index(s: &BitString) -> u128 {
    (1u128 << s.len()) - 1 + s.value() as u128
}

/// Cantor pairing `(m+n)(m+n+1)/2 + n`.
pub fn pair_task(m: u64, n: u64) -> u64 {
    let d = m + n;
    d * (d + 1) / 2 + n
}

/// Inverse of [`pair_task`].
pub fn decode_task(z: u64) -> (u64, u64) {
    let mut w = ((8 * z as u128 + 1).sqrt() as u64 - 1) / 2;
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let n = z - w * (w + 1) / 2;
    (w - n, n)
}

/// Threshold pairing `2^{n+1}(2m+1) - 1`; `None` when it exceeds `u64`,
/// which no output length can reach.
pub fn pair_threshold(m: u128, n: u64) -> Option<u64> {
    let odd = m.checked_mul(2)?.checked_add(1)?;
    if n + 1 >= 128 {
        return None;
    }
    let v = odd.checked_mul(1u128 << (n + 1))? - 1;
    u64::try_from(v).ok()
}

/// First position of block `k` (`k >= 1`); block `k` lists `0, 1, …, k`.
fn block_start(k: u64) -> u64 {
    (k - 1) * (k + 2) / 2
}

/// Block containing position `n`.
fn block_of(n: u64) -> u64 {
    let mut k = (2 * n).sqrt().max(1);
    while k > 1 && block_start(k) > n {
        k -= 1;
    }
    while block_start(k + 1) <= n {
        k += 1;
    }
    k
}

/// The task schedule `0,1,0,1,2,0,1,2,3,0,1,2,3,4,…`.
pub fn task(n: u64) -> u64 {
    n - block_start(block_of(n))
}

/// Least position `p` with `task(p) = i` and `p >= from`.
pub fn next_position(i: u64, from: u64) -> u64 {
    let mut k = if from == 0 { 1 } else { block_of(from) }.max(i).max(1);
    loop {
        let p = block_start(k) + i;
        if p >= from {
            return p;
        }
        k += 1;
    }
}

/// Largest task value scheduled at positions `0..=n`.
pub fn max_task_through(n: u64) -> u64 {
    let k = block_of(n);
    (k - 1).max(n - block_start(k))
}

/// Which requirement family drives the predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Always,
    Mlr,
    Frand,
}

/// What a task index asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Requirement {
    /// Task 0, which is never serviced.
    Dummy,
    /// Any task in the predicate-free exerciser mode.
    Any { task: u64 },
    /// Make the output of functional `j` non-random at precision `s`.
    Mlr { j: u64, s: u64 },
    /// Same against the `e`-th partial function as a weight.
    Frand { j: u64, s: u64, e: u64 },
}

pub fn requirement_of_task(i: u64, mode: Mode) -> Requirement {
    if i == 0 {
        return Requirement::Dummy;
    }
    match mode {
        Mode::Always => Requirement::Any { task: i },
        Mode::Mlr => {
            let (j, s) = decode_task(i - 1);
            Requirement::Mlr { j, s }
        }
        Mode::Frand => {
            let (j, rest) = decode_task(i - 1);
            let (s, e) = decode_task(rest);
            Requirement::Frand { j, s, e }
        }
    }
}
