//! The edge predicate `B(q′, σ, τ)` and its shipped instantiations.
//!
//! Every instantiation requires (a) `σ ⪯ τ` and (b) `d′(τ↾k) < 1` for
//! `1 <= k <= |τ|`. The requirement-driven ones add a condition on the
//! output of a catalog functional run on `τ` for `|τ|` steps.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;

use crate::bits::BitString;
use crate::catalog::{FunctionalCatalog, PartialCatalog};
use crate::codec::{pair_threshold, requirement_of_task, string_index, task, Mode, Requirement};
use crate::ledger::LedgerEntry;
use crate::network::Restriction;
use crate::rational::Rational;

pub trait Predicate {
    fn mode(&self) -> Mode;

    /// `B(view, σ, τ)`.
    fn holds(&self, view: &Restriction<'_>, sigma: &BitString, tau: &BitString) -> bool;

    /// The test component entry enumerated when the edge `(σ, τ)` fires at
    /// stage `|τ|`, keyed by its precision `s`.
    fn ledger_entry(&self, _sigma: &BitString, _tau: &BitString) -> Option<(u64, LedgerEntry)> {
        None
    }
}

/// Conditions (a) and (b).
pub fn base_conditions(view: &Restriction<'_>, sigma: &BitString, tau: &BitString) -> bool {
    sigma.is_prefix_of(tau) && view.path_unblocked(tau)
}

/// The threshold `⟨#(σ), s⟩`, or `None` when it exceeds every output length.
pub fn threshold_for(sigma: &BitString, s: u64) -> Option<u64> {
    pair_threshold(string_index(sigma), s)
}

/// Condition (c): `|Φ_{j,|τ|}(τ)| > ⟨#(σ), s⟩`.
pub fn mlr_condition(catalog: &FunctionalCatalog, j: u64, s: u64, sigma: &BitString, tau: &BitString) -> bool {
    match threshold_for(sigma, s) {
        Some(t) => catalog.eval(j, tau, tau.len() as u64).len() as u64 > t,
        None => false,
    }
}

/// Condition (c*): some `ρ ⪯ Φ_{j,|τ|}(τ)` has `φ_{e,|τ|}(ρ)` defined and
/// above `⟨#(σ), s⟩`.
pub fn frand_condition(
    catalog: &FunctionalCatalog,
    partials: &PartialCatalog,
    (j, s, e): (u64, u64, u64),
    sigma: &BitString,
    tau: &BitString,
) -> bool {
    let Some(t) = threshold_for(sigma, s) else {
        return false;
    };
    let steps = tau.len() as u64;
    let out = catalog.eval(j, tau, steps);
    (0..=out.len()).any(|k| partials.eval(e, &out.prefix(k), steps).is_some_and(|v| v > t))
}

/// The template exerciser: only (a) and (b).
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysB;

impl Predicate for AlwaysB {
    fn mode(&self) -> Mode {
        Mode::Always
    }

    fn holds(&self, view: &Restriction<'_>, sigma: &BitString, tau: &BitString) -> bool {
        base_conditions(view, sigma, tau)
    }
}

#[derive(Clone, Debug)]
pub struct MlrB {
    pub catalog: FunctionalCatalog,
}

impl MlrB {
    fn requirement(sigma: &BitString) -> Option<(u64, u64)> {
        match requirement_of_task(task(sigma.len() as u64), Mode::Mlr) {
            Requirement::Mlr { j, s } => Some((j, s)),
            _ => None,
        }
    }
}

impl Predicate for MlrB {
    fn mode(&self) -> Mode {
        Mode::Mlr
    }

    fn holds(&self, view: &Restriction<'_>, sigma: &BitString, tau: &BitString) -> bool {
        let Some((j, s)) = Self::requirement(sigma) else {
            return false;
        };
        base_conditions(view, sigma, tau) && mlr_condition(&self.catalog, j, s, sigma, tau)
    }

    fn ledger_entry(&self, sigma: &BitString, tau: &BitString) -> Option<(u64, LedgerEntry)> {
        let (j, s) = Self::requirement(sigma)?;
        let threshold = threshold_for(sigma, s)?;
        let entry = LedgerEntry {
            eta: self.catalog.eval(j, tau, tau.len() as u64),
            weight: Rational::pow2_neg(threshold),
            start: *sigma,
            end: *tau,
            stage: tau.len() as u64,
            j,
            e: None,
            threshold,
        };
        Some((s, entry))
    }
}

#[derive(Clone, Debug)]
pub struct FrandB {
    pub catalog: FunctionalCatalog,
    pub partials: PartialCatalog,
}

impl FrandB {
    fn requirement(sigma: &BitString) -> Option<(u64, u64, u64)> {
        match requirement_of_task(task(sigma.len() as u64), Mode::Frand) {
            Requirement::Frand { j, s, e } => Some((j, s, e)),
            _ => None,
        }
    }
}

impl Predicate for FrandB {
    fn mode(&self) -> Mode {
        Mode::Frand
    }

    fn holds(&self, view: &Restriction<'_>, sigma: &BitString, tau: &BitString) -> bool {
        let Some(req) = Self::requirement(sigma) else {
            return false;
        };
        base_conditions(view, sigma, tau) && frand_condition(&self.catalog, &self.partials, req, sigma, tau)
    }

    fn ledger_entry(&self, sigma: &BitString, tau: &BitString) -> Option<(u64, LedgerEntry)> {
        let (j, s, e) = Self::requirement(sigma)?;
        let threshold = threshold_for(sigma, s)?;
        let steps = tau.len() as u64;
        let eta = self.catalog.eval(j, tau, steps);
        let f_star = self.partials.prefix_max(e, &eta, steps)?;
        let entry = LedgerEntry {
            eta,
            weight: Rational::pow2_neg(f_star),
            start: *sigma,
            end: *tau,
            stage: steps,
            j,
            e: Some(e),
            threshold,
        };
        Some((s, entry))
    }
}

pub fn build_predicate(mode: Mode, catalog: FunctionalCatalog, partials: PartialCatalog) -> Box<dyn Predicate> {
    match mode {
        Mode::Always => Box::new(AlwaysB),
        Mode::Mlr => Box::new(MlrB { catalog }),
        Mode::Frand => Box::new(FrandB { catalog, partials }),
    }
}

/// `f*(σ) = max{f(τ) : τ ⪯ σ, τ in the domain}` over a finite map.
pub fn monotonize(f: &BTreeMap<BitString, u64>) -> BTreeMap<BitString, u64> {
    let mut out: BTreeMap<BitString, u64> = BTreeMap::new();
    // Length-lexicographic iteration visits every prefix before its extensions.
    for (node, &v) in f {
        let inherited = (0..node.len()).rev().find_map(|k| out.get(&node.prefix(k)).copied());
        out.insert(*node, inherited.map_or(v, |p| p.max(v)));
    }
    out
}
