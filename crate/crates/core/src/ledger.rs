//! Martin-Löf and f-Martin-Löf test components enumerated by fired edges.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::codec::Mode;
use crate::rational::Rational;

/// One enumerated string `η` of the component `U_s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub eta: BitString,
    pub weight: Rational,
    pub start: BitString,
    pub end: BitString,
    pub stage: u64,
    /// Functional index.
    pub j: u64,
    /// Partial-function index (f-tests only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<u64>,
    /// `⟨#(start), s⟩`.
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestLedger {
    pub mode: Mode,
    components: BTreeMap<u64, Vec<LedgerEntry>>,
}

impl TestLedger {
    pub fn new(mode: Mode) -> Self {
        TestLedger { mode, components: BTreeMap::new() }
    }

    pub fn push(&mut self, s: u64, entry: LedgerEntry) {
        self.components.entry(s).or_default().push(entry);
    }

    /// Realized precisions `s`, ascending.
    pub fn levels(&self) -> impl Iterator<Item = u64> + '_ {
        self.components.keys().copied()
    }

    pub fn component(&self, s: u64) -> &[LedgerEntry] {
        self.components.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn components(&self) -> &BTreeMap<u64, Vec<LedgerEntry>> {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut BTreeMap<u64, Vec<LedgerEntry>> {
        &mut self.components
    }

    pub fn len(&self) -> usize {
        self.components.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact total weight of `U_s`.
    pub fn mass(&self, s: u64) -> Rational {
        Rational::sum(self.component(s).iter().map(|e| &e.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::codec::{pair_threshold, string_index};

    fn entry(start: &str, s: u64) -> LedgerEntry {
        let start = bs(start);
        let threshold = pair_threshold(string_index(&start), s).unwrap();
        LedgerEntry {
            eta: BitString::zeros(threshold as usize + 1),
            weight: Rational::pow2_neg(threshold),
            start,
            end: start,
            stage: 0,
            j: 0,
            e: None,
            threshold,
        }
    }

    #[test]
    fn empty_mass() {
        assert!(TestLedger::new(Mode::Mlr).mass(0).is_zero());
    }

    #[test]
    fn two_starts_at_precision_zero() {
        let mut l = TestLedger::new(Mode::Mlr);
        l.push(0, entry("0", 0));
        l.push(0, entry("1", 0));
        assert_eq!(l.mass(0), Rational::new(17, 512).unwrap());
        assert_eq!(l.levels().collect::<Vec<_>>(), [0]);
    }
}
