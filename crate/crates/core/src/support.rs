//! Which (metric, threat) combinations can be solved, and how.
//!
//! Two tables drive dispatch. Table 1 covers the pairwise relaxation ρ
//! (one own-class and one other-class prototype); Table 2 covers the exact
//! minimal perturbation over the whole classifier.
//!
//! ```text
//! Table 1 (pairwise ρ_p^q, ℝ^d)        Table 2 (exact r_p^q / ε_p^q)
//!  p \ q    l1        l2        linf    p \ q   l1       l2       linf
//!  l1       NP-hard   NP-hard   d log d  l1     NP-hard  NP-hard  poly
//!  l2       d         d         d        l2     poly     poly     poly
//!  linf     d         d log d   d        linf   NP-hard  NP-hard  NP-hard
//! ```

use serde::Serialize;

use crate::error::Error;
use crate::model::Domain;
use crate::norm::Norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverClass {
    /// Θ(d) closed form.
    ClosedForm,
    /// O(d log d) sort-and-scan or search over sorted breakpoints.
    SortScan,
    /// Polynomial convex program (QP or LP).
    ConvexProgram,
    NpHard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exactness {
    /// The single-pair relaxation ρ.
    Pairwise,
    /// The exact minimal perturbation over all prototypes.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SupportEntry {
    pub class: SolverClass,
    pub complexity: &'static str,
    /// The domain constraint is dropped by the solver; the value is still a
    /// lower bound for the constrained problem.
    pub domain_relaxed: bool,
}

impl SupportEntry {
    pub fn is_supported(&self) -> bool {
        self.class != SolverClass::NpHard
    }
}

const fn entry(class: SolverClass, complexity: &'static str) -> SupportEntry {
    SupportEntry {
        class,
        complexity,
        domain_relaxed: false,
    }
}

const NP: SupportEntry = entry(SolverClass::NpHard, "NP-hard");

pub fn table_name(exactness: Exactness) -> &'static str {
    match exactness {
        Exactness::Pairwise => "Table 1",
        Exactness::Exact => "Table 2",
    }
}

/// Looks up the solver class for a cell. The embedded metric dispatches as
/// p = l2.
pub fn dispatch_support(p: Norm, q: Norm, exactness: Exactness, domain: Domain) -> SupportEntry {
    use Norm::*;
    use SolverClass::*;
    match exactness {
        Exactness::Pairwise => match (p, q, domain.is_box()) {
            (L1, L1 | L2, _) => NP,
            (L1, Linf, _) => entry(SortScan, "O(d log d)"),
            (L2, _, false) => entry(ClosedForm, "Θ(d)"),
            (L2, L2, true) => entry(SortScan, "O(d log d)"),
            (L2, L1 | Linf, true) => entry(SortScan, "O(d log d)"),
            (Linf, Linf, false) => entry(ClosedForm, "Θ(d)"),
            (Linf, Linf, true) => entry(SortScan, "O(d log(1/tol))"),
            (Linf, L1, boxed) => SupportEntry {
                domain_relaxed: boxed,
                ..entry(ClosedForm, "Θ(d)")
            },
            (Linf, L2, boxed) => SupportEntry {
                domain_relaxed: boxed,
                ..entry(SortScan, "O(d log d)")
            },
        },
        Exactness::Exact => match (p, q) {
            (L1, L1 | L2) => NP,
            (L1, Linf) => entry(SortScan, "poly"),
            (L2, _) => entry(ConvexProgram, "poly"),
            (Linf, _) => NP,
        },
    }
}

/// Human-readable name of a table cell, used in refusal messages.
pub fn cell_name(p: Norm, q: Norm, exactness: Exactness) -> String {
    let e = dispatch_support(p, q, exactness, Domain::Unbounded);
    format!(
        "{}: {} (p={p}, q={q})",
        table_name(exactness),
        e.complexity
    )
}

/// Returns the entry or an `UnsupportedCombination` naming the blocking cell.
pub fn require(
    p: Norm,
    q: Norm,
    exactness: Exactness,
    domain: Domain,
) -> Result<SupportEntry, Error> {
    let e = dispatch_support(p, q, exactness, domain);
    if e.is_supported() {
        Ok(e)
    } else {
        let hint = match exactness {
            Exactness::Exact if dispatch_support(p, q, Exactness::Pairwise, domain).is_supported() => {
                "; a lower bound is available (use --mode lower)"
            }
            _ => "",
        };
        Err(Error::unsupported(format!(
            "{}{hint}",
            cell_name(p, q, exactness)
        )))
    }
}
