//! Exact in-flow `R`, q-flow `P` and the retained-flow sums `S_n`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::network::NetworkState;
use crate::rational::{Rational, ONE};

/// Dense per-level tables up to a truncation depth.
///
/// Row `n` of each table is indexed by the binary value of the node, so the
/// node `σ` lives at `r[|σ|][value(σ)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowTable {
    depth: usize,
    r: Vec<Vec<Rational>>,
    p: Vec<Vec<Rational>>,
    s: Vec<Rational>,
}

/// In-flow `R` and `S_0..S_depth` of the elementary restriction `q_depth`.
///
/// `R(ε) = 1` and `R(τ) = Σ q(σ,τ) R(σ)` evaluated level by level;
/// `S_n` is the level-`n` in-flow minus what arrived through extra edges
/// ending at level `n`. The returned table has no `P` rows yet.
pub fn inflow_table(state: &NetworkState, depth: usize) -> FlowTable {
    assert!(depth <= state.depth, "table depth {} exceeds state depth {}", depth, state.depth);
    let half = Rational::new(1, 2).unwrap();
    let mut r: Vec<Vec<Rational>> = Vec::with_capacity(depth + 1);
    let mut s = Vec::with_capacity(depth + 1);
    r.push(vec![Rational::one()]);
    s.push(Rational::one());
    for len in 1..=depth {
        let parent_delays = state.delay_row(len - 1);
        let prev = &r[len - 1];
        let mut row = Vec::with_capacity(1usize << len);
        // Consecutive parents often share both delay and in-flow.
        let mut memo: Option<(usize, Rational)> = None;
        for (i, (rin, d)) in prev.iter().zip(parent_delays.iter()).enumerate() {
            let share = match &memo {
                Some((j, v)) if prev[*j] == *rin && parent_delays[*j] == *d => v.clone(),
                _ => {
                    let v = &(&(&ONE - d) * &half) * rin;
                    memo = Some((i, v.clone()));
                    v
                }
            };
            row.push(share.clone());
            row.push(share);
        }
        let mut extra = Rational::zero();
        for e in state.edges().ending_at_level(len) {
            let inflow = state.delay(&e.start) * &r[e.start.len()][e.start.value() as usize];
            let slot = &mut row[e.end.value() as usize];
            *slot += &inflow;
            extra += inflow;
        }
        let total = Rational::sum(row.iter());
        s.push(total - extra);
        r.push(row);
    }
    FlowTable { depth, r, p: Vec::new(), s }
}

/// Adds `P` by the bottom-up recursion `P(σ) = max(R(σ), P(σ0) + P(σ1))`
/// with `P = R` on the truncation frontier.
pub fn qflow_table(mut table: FlowTable) -> FlowTable {
    let depth = table.depth;
    let mut p: Vec<Vec<Rational>> = vec![Vec::new(); depth + 1];
    p[depth] = table.r[depth].clone();
    for len in (0..depth).rev() {
        let below = &p[len + 1];
        let row = table.r[len]
            .iter()
            .enumerate()
            .map(|(i, rv)| {
                let split = &below[2 * i] + &below[2 * i + 1];
                if split > *rv {
                    split
                } else {
                    rv.clone()
                }
            })
            .collect();
        p[len] = row;
    }
    table.p = p;
    table
}

/// Both tables at once.
pub fn flow_table(state: &NetworkState, depth: usize) -> FlowTable {
    qflow_table(inflow_table(state, depth))
}

impl FlowTable {
    /// Builds a table directly from `P` rows, e.g. a measure given by hand.
    /// `R` is set equal to `P` and `S_n` to the level sums.
    pub fn from_p_rows(p: Vec<Vec<Rational>>) -> Self {
        assert!(!p.is_empty());
        for (len, row) in p.iter().enumerate() {
            assert_eq!(row.len(), 1usize << len, "row {} has wrong width", len);
        }
        let s = p.iter().map(|row| Rational::sum(row.iter())).collect();
        FlowTable { depth: p.len() - 1, r: p.clone(), p, s }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn has_qflow(&self) -> bool {
        !self.p.is_empty()
    }

    pub fn r(&self, node: &BitString) -> &Rational {
        &self.r[node.len()][node.value() as usize]
    }

    pub fn p(&self, node: &BitString) -> &Rational {
        &self.p[node.len()][node.value() as usize]
    }

    pub fn r_row(&self, len: usize) -> &[Rational] {
        &self.r[len]
    }

    pub fn p_row(&self, len: usize) -> &[Rational] {
        &self.p[len]
    }

    /// `S_n` for `n <= depth`.
    pub fn s(&self, n: usize) -> &Rational {
        &self.s[n]
    }

    pub fn s_values(&self) -> &[Rational] {
        &self.s
    }

    pub fn level_r_sum(&self, len: usize) -> Rational {
        Rational::sum(self.r[len].iter())
    }

    pub fn level_p_sum(&self, len: usize) -> Rational {
        Rational::sum(self.p[len].iter())
    }

    /// `Σ_{|τ| = len, τ ⪰ σ} P(τ)`.
    pub fn p_sum_below(&self, node: &BitString, len: usize) -> Rational {
        assert!(len >= node.len() && len <= self.depth);
        let shift = len - node.len();
        let lo = (node.value() as usize) << shift;
        Rational::sum(self.p[len][lo..lo + (1usize << shift)].iter())
    }

    /// Overwrites one `P` entry; used to build corrupted tables in tests.
    pub fn set_p(&mut self, node: &BitString, value: Rational) {
        self.p[node.len()][node.value() as usize] = value;
    }

    pub fn set_r(&mut self, node: &BitString, value: Rational) {
        self.r[node.len()][node.value() as usize] = value;
    }

    /// Every node of the table in length-lexicographic order.
    pub fn nodes(&self) -> impl Iterator<Item = BitString> {
        (0..=self.depth).flat_map(BitString::level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::network::EdgeRecord;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn fixture_stage3() -> NetworkState {
        let mut s = NetworkState::new(3);
        s.set_level_uniform(1, r(1, 9));
        for root in [bs("0"), bs("1")] {
            let target = root.concat(&bs("00"));
            s.add_fan(root, target, r(1, 8));
            s.push_edge(EdgeRecord { start: root, end: target, task: 1, stage_added: 3, flow_fraction: r(1, 9) });
        }
        s
    }

    #[test]
    fn uniform_halving_without_delays() {
        let t = flow_table(&NetworkState::new(6), 6);
        for node in t.nodes() {
            assert_eq!(*t.r(&node), Rational::pow2_neg(node.len() as u64));
            assert_eq!(t.p(&node), t.r(&node));
        }
        assert!(t.s_values().iter().all(|s| s.is_one()));
    }

    #[test]
    fn fixture_values() {
        let t = flow_table(&fixture_stage3(), 3);
        assert_eq!(*t.r(&bs("00")), r(2, 9));
        assert_eq!(*t.r(&bs("000")), r(1, 6));
        assert_eq!(*t.r(&bs("001")), r(1, 9));
        assert_eq!(*t.s(2), r(8, 9));
        assert_eq!(*t.p(&bs("00")), r(5, 18));
        assert!(*t.p(&bs("e")) <= ONE);
        // The withheld 1/9 at level 1 returns through the two edges.
        assert_eq!(t.level_r_sum(3), Rational::one());
        assert_eq!(*t.s(3), r(8, 9));
    }

    #[test]
    fn truncation_is_monotone_in_depth() {
        let mut s = fixture_stage3();
        s = {
            let mut deeper = NetworkState::new(5);
            deeper.set_level_uniform(1, r(1, 9));
            for e in s.edges().iter() {
                deeper.add_fan(e.start, e.end, r(1, 8));
                deeper.push_edge(e.clone());
            }
            deeper.set_level_uniform(4, r(1, 36));
            deeper
        };
        let shallow = flow_table(&s, 3);
        let deep = flow_table(&s, 5);
        for node in shallow.nodes() {
            assert!(deep.p(&node) >= shallow.p(&node));
        }
    }

    #[test]
    fn p_sums_below() {
        let t = flow_table(&fixture_stage3(), 3);
        assert_eq!(t.p_sum_below(&bs("0"), 3), &(&r(1, 6) + &r(1, 9)) + &r(2, 9));
        assert_eq!(t.p_sum_below(&bs("0"), 1), *t.p(&bs("0")));
    }
}
