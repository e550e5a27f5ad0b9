//! Stage-bounded functionals `Φ_{j,s}` and partial functions `φ_{e,s}`.
//!
//! Every functional is monotone in its input and in its step budget; every
//! partial function converges stably (once defined at a budget, identical at
//! all larger budgets). Outputs are capped at [`BitString::MAX_LEN`] bits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::error::Error;

/// A monotone, stage-bounded string-to-string functional.
pub trait Functional: Send + Sync {
    fn eval(&self, input: &BitString, steps: u64) -> BitString;
}

/// A stage-bounded partial function from strings to naturals.
pub trait PartialFunction: Send + Sync {
    fn eval(&self, input: &BitString, steps: u64) -> Option<u64>;
}

fn visible_len(input: &BitString, steps: u64) -> usize {
    (input.len() as u64).min(steps) as usize
}

/// The shipped functionals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinFunctional {
    /// `σ↾steps`.
    Identity,
    /// One `0` per step, whatever the input.
    Zeros,
    /// Bits at positions 0, 2, 4, … of `σ↾steps`.
    EvenBits,
    /// `σ↾steps` minus its last `k` bits.
    Delay(u64),
    /// `σ↾steps` but never more than `k` bits.
    Diverge(u64),
}

impl Functional for BuiltinFunctional {
    fn eval(&self, input: &BitString, steps: u64) -> BitString {
        let seen = visible_len(input, steps);
        match *self {
            BuiltinFunctional::Identity => input.prefix(seen),
            BuiltinFunctional::Zeros => BitString::zeros(steps.min(BitString::MAX_LEN as u64) as usize),
            BuiltinFunctional::EvenBits => {
                let mut out = BitString::empty();
                for i in (0..seen).step_by(2) {
                    out = out.child(input.bit(i));
                }
                out
            }
            BuiltinFunctional::Delay(k) => input.prefix(seen.saturating_sub(k.min(64) as usize)),
            BuiltinFunctional::Diverge(k) => input.prefix(seen.min(k.min(64) as usize)),
        }
    }
}

#[derive(Clone)]
enum Entry {
    Builtin(BuiltinFunctional),
    /// `1^e 0 σ ↦ Φ_e(σ)` over the non-universal entries.
    Universal,
    Custom(Arc<dyn Functional>),
}

/// An indexed family of functionals, addressed by position `j`.
#[derive(Clone, Default)]
pub struct FunctionalCatalog {
    names: Vec<String>,
    entries: Vec<Entry>,
}

impl core::fmt::Debug for FunctionalCatalog {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

pub const DEFAULT_FUNCTIONALS: [&str; 6] = ["identity", "zeros", "even-bits", "delay:2", "diverge:4", "universal"];

pub const DEFAULT_PARTIALS: [&str; 5] = ["length", "half-length", "block:3", "nowhere", "late:64"];

fn parse_param(name: &str, prefix: &str) -> Result<Option<u64>, Error> {
    match name.strip_prefix(prefix) {
        None => Ok(None),
        Some(rest) => rest
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Parse { what: "catalog parameter", input: name.to_string() }),
    }
}

impl FunctionalCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, Error> {
        let mut cat = Self::new();
        for name in names {
            cat.push_named(name.as_ref())?;
        }
        Ok(cat)
    }

    pub fn default_catalog() -> Self {
        Self::from_names(&DEFAULT_FUNCTIONALS).expect("default catalog parses")
    }

    fn push_named(&mut self, name: &str) -> Result<(), Error> {
        let entry = match name {
            "identity" => Entry::Builtin(BuiltinFunctional::Identity),
            "zeros" => Entry::Builtin(BuiltinFunctional::Zeros),
            "even-bits" => Entry::Builtin(BuiltinFunctional::EvenBits),
            "universal" => Entry::Universal,
            _ => {
                if let Some(k) = parse_param(name, "delay:")? {
                    Entry::Builtin(BuiltinFunctional::Delay(k))
                } else if let Some(k) = parse_param(name, "diverge:")? {
                    Entry::Builtin(BuiltinFunctional::Diverge(k))
                } else {
                    return Err(Error::Config(format!("unknown functional {:?}", name)));
                }
            }
        };
        self.names.push(name.to_string());
        self.entries.push(entry);
        Ok(())
    }

    /// Appends a user-supplied functional; returns its index.
    pub fn register(&mut self, name: &str, f: Arc<dyn Functional>) -> usize {
        self.names.push(name.to_string());
        self.entries.push(Entry::Custom(f));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_universal(&self, j: usize) -> bool {
        matches!(self.entries.get(j), Some(Entry::Universal))
    }

    /// Indices the universal entry dispatches to, in order.
    pub fn base_indices(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&j| !self.is_universal(j)).collect()
    }

    /// `Φ_{j,steps}(input)`; an index past the end diverges (outputs `ε`).
    pub fn eval(&self, j: u64, input: &BitString, steps: u64) -> BitString {
        let Some(entry) = usize::try_from(j).ok().and_then(|j| self.entries.get(j)) else {
            return BitString::empty();
        };
        match entry {
            Entry::Builtin(b) => b.eval(input, steps),
            Entry::Custom(f) => f.eval(input, steps),
            Entry::Universal => self.eval_universal(input, steps),
        }
    }

    fn eval_universal(&self, input: &BitString, steps: u64) -> BitString {
        let Some(e) = input.iter().position(|b| b == 0) else {
            return BitString::empty();
        };
        let base = self.base_indices();
        match base.get(e) {
            Some(&j) => self.eval(j as u64, &input.suffix_from(e + 1), steps),
            None => BitString::empty(),
        }
    }
}

/// The shipped partial functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinPartial {
    /// `|ρ|`, defined once `steps >= |ρ|`.
    Length,
    /// `⌊|ρ|/2⌋` on the same schedule.
    HalfLength,
    /// `k⌊|ρ|/k⌋` on the same schedule.
    Block(u64),
    Nowhere,
    /// `|ρ|`, but only once `steps >= m` as well.
    Late(u64),
}

impl PartialFunction for BuiltinPartial {
    fn eval(&self, input: &BitString, steps: u64) -> Option<u64> {
        let len = input.len() as u64;
        if steps < len {
            return None;
        }
        match *self {
            BuiltinPartial::Length => Some(len),
            BuiltinPartial::HalfLength => Some(len / 2),
            BuiltinPartial::Block(k) => Some(if k == 0 { 0 } else { k * (len / k) }),
            BuiltinPartial::Nowhere => None,
            BuiltinPartial::Late(m) => (steps >= m).then_some(len),
        }
    }
}

#[derive(Clone)]
enum PartialEntry {
    Builtin(BuiltinPartial),
    Custom(Arc<dyn PartialFunction>),
}

#[derive(Clone, Default)]
pub struct PartialCatalog {
    names: Vec<String>,
    entries: Vec<PartialEntry>,
}

impl core::fmt::Debug for PartialCatalog {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

impl PartialCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, Error> {
        let mut cat = Self::new();
        for name in names {
            let name = name.as_ref();
            let entry = match name {
                "length" => BuiltinPartial::Length,
                "half-length" => BuiltinPartial::HalfLength,
                "nowhere" => BuiltinPartial::Nowhere,
                _ => {
                    if let Some(k) = parse_param(name, "block:")? {
                        BuiltinPartial::Block(k)
                    } else if let Some(m) = parse_param(name, "late:")? {
                        BuiltinPartial::Late(m)
                    } else {
                        return Err(Error::Config(format!("unknown partial function {:?}", name)));
                    }
                }
            };
            cat.names.push(name.to_string());
            cat.entries.push(PartialEntry::Builtin(entry));
        }
        Ok(cat)
    }

    pub fn default_catalog() -> Self {
        Self::from_names(&DEFAULT_PARTIALS).expect("default partials parse")
    }

    pub fn register(&mut self, name: &str, f: Arc<dyn PartialFunction>) -> usize {
        self.names.push(name.to_string());
        self.entries.push(PartialEntry::Custom(f));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `φ_{e,steps}(input)`; an index past the end is nowhere defined.
    pub fn eval(&self, e: u64, input: &BitString, steps: u64) -> Option<u64> {
        match usize::try_from(e).ok().and_then(|e| self.entries.get(e))? {
            PartialEntry::Builtin(b) => b.eval(input, steps),
            PartialEntry::Custom(f) => f.eval(input, steps),
        }
    }

    /// `max{φ_{e,steps}(ρ) : ρ ⪯ input, defined}`, the monotonized value.
    pub fn prefix_max(&self, e: u64, input: &BitString, steps: u64) -> Option<u64> {
        (0..=input.len()).filter_map(|k| self.eval(e, &input.prefix(k), steps)).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    #[test]
    fn builtin_outputs() {
        let c = FunctionalCatalog::default_catalog();
        let x = bs("1101001");
        assert_eq!(c.eval(0, &x, 5), bs("11010"));
        assert_eq!(c.eval(1, &x, 3), bs("000"));
        assert_eq!(c.eval(2, &x, 7), bs("1001"));
        assert_eq!(c.eval(3, &x, 7), bs("11010"));
        assert_eq!(c.eval(3, &bs("1"), 7), bs("e"));
        assert_eq!(c.eval(4, &x, 7), bs("1101"));
        assert_eq!(c.eval(99, &x, 7), bs("e"));
    }

    #[test]
    fn universal_dispatch() {
        let c = FunctionalCatalog::default_catalog();
        let u = 5;
        assert!(c.is_universal(u as usize));
        let sigma = bs("0110");
        assert_eq!(c.eval(u, &bs("0").concat(&sigma), 10), c.eval(0, &sigma, 10));
        assert_eq!(c.eval(u, &bs("10").concat(&sigma), 10), c.eval(1, &sigma, 10));
        assert_eq!(c.eval(u, &bs("111"), 10), bs("e"));
        // e = 5 is past the five base entries.
        assert_eq!(c.eval(u, &bs("1111100"), 10), bs("e"));
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(FunctionalCatalog::from_names(&["identity", "bogus"]).is_err());
        assert!(FunctionalCatalog::from_names(&["delay:x"]).is_err());
        assert!(PartialCatalog::from_names(&["late:"]).is_err());
    }

    #[test]
    fn partials() {
        let p = PartialCatalog::default_catalog();
        let x = bs("10110");
        assert_eq!(p.eval(0, &x, 5), Some(5));
        assert_eq!(p.eval(0, &x, 4), None);
        assert_eq!(p.eval(1, &x, 9), Some(2));
        assert_eq!(p.eval(2, &x, 9), Some(3));
        assert_eq!(p.eval(3, &x, 9), None);
        assert_eq!(p.eval(4, &x, 63), None);
        assert_eq!(p.eval(4, &x, 64), Some(5));
        assert_eq!(p.prefix_max(1, &x, 9), Some(2));
        assert_eq!(p.prefix_max(3, &x, 9), None);
    }
}
