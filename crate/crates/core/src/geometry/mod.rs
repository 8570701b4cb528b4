//! Pairwise relaxations ρ_p^q: the q-distance from a query to the region
//! where one other-class prototype is at least as close (in ℓp) as one
//! own-class prototype.
//!
//! Every solver follows the same conventions:
//! - a query already on or past the pairwise boundary gets value 0 with the
//!   query itself as minimizer;
//! - coinciding prototypes are rejected with [`Error::DegenerateBoundary`];
//! - an empty feasible set (only possible inside the unit box) is reported
//!   as `value = +∞` with no minimizer.

mod l1;
mod l2;
mod linf;
mod projection;

pub use l1::rho_l1_linf;
pub use l2::{rho_l2, rho_l2_box};
pub use linf::{linf_threat_certified, rho_linf_l1, rho_linf_l2, rho_linf_linf, rho_linf_linf_box};
pub use projection::{box_multiplier, project_hyperplane_box, Projection};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Domain;
use crate::norm::{sq_norm, sub, Norm};
use crate::support::{self, Exactness};

/// Which construction produced a pairwise value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Query already pairwise misclassified.
    Boundary,
    ClosedForm,
    HyperplaneBoxProjection,
    GreedyBox,
    Bisection,
    BreakpointSearch,
    CoordinateScan,
    LevelSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub value: f64,
    pub minimizer: Option<Vec<f64>>,
    pub method: Method,
}

impl PairwiseResult {
    pub(crate) fn at_query(z: &[f64]) -> Self {
        PairwiseResult {
            value: 0.0,
            minimizer: Some(z.to_vec()),
            method: Method::Boundary,
        }
    }

    pub(crate) fn infeasible(method: Method) -> Self {
        PairwiseResult {
            value: f64::INFINITY,
            minimizer: None,
            method,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.value == f64::INFINITY
    }
}

/// A single own/other prototype pair under a (p, q, domain) threat model.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseProblem<'a> {
    pub z: &'a [f64],
    pub own: &'a [f64],
    pub other: &'a [f64],
    pub p: Norm,
    pub q: Norm,
    pub domain: Domain,
}

impl<'a> PairwiseProblem<'a> {
    pub fn new(z: &'a [f64], own: &'a [f64], other: &'a [f64], p: Norm, q: Norm, domain: Domain) -> Self {
        PairwiseProblem {
            z,
            own,
            other,
            p,
            q,
            domain,
        }
    }

    /// ‖x − own‖_p − ‖x − other‖_p ≥ 0
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        if self.domain.is_box() && x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return false;
        }
        match self.p {
            // Squared form keeps the ℓ2 test exact on the bisecting hyperplane.
            Norm::L2 => {
                crate::norm::sq_dist(x, self.own) >= crate::norm::sq_dist(x, self.other)
            }
            p => p.dist(x, self.own) >= p.dist(x, self.other),
        }
    }
}

/// Dispatches a pairwise problem to the solver for its cell. Domains the
/// solver cannot encode (sphere products, and boxes for p = ∞ with q ∈ {1,2})
/// are dropped, which keeps the value a valid lower bound.
pub fn rho(problem: &PairwiseProblem<'_>) -> Result<PairwiseResult> {
    let PairwiseProblem {
        z,
        own,
        other,
        p,
        q,
        domain,
    } = *problem;
    let entry = support::require(p, q, Exactness::Pairwise, domain)?;
    let boxed = domain.is_box() && !entry.domain_relaxed;
    let domain = if boxed { Domain::UnitBox } else { Domain::Unbounded };
    match (p, q) {
        (Norm::L2, q) if boxed => rho_l2_box(z, own, other, q),
        (Norm::L2, q) => rho_l2(z, own, other, q),
        (Norm::L1, Norm::Linf) => rho_l1_linf(z, own, other, domain),
        (Norm::Linf, Norm::Linf) if boxed => rho_linf_linf_box(z, own, other),
        (Norm::Linf, Norm::Linf) => rho_linf_linf(z, own, other),
        (Norm::Linf, Norm::L1) => rho_linf_l1(z, own, other),
        (Norm::Linf, Norm::L2) => rho_linf_l2(z, own, other),
        (Norm::L1, _) => unreachable!("rejected by the support table"),
    }
}

/// Bound valid for any semi-metric: max{0, (d_other − d_own)/2}.
pub fn trivial_semimetric_bound(d_own: f64, d_other: f64) -> f64 {
    (0.5 * (d_other - d_own)).max(0.0)
}

/// Hyperplane form of the ℓ2 pairwise boundary: ⟨x, a⟩ + b ≥ 0 with
/// a = other − own and b = (‖own‖² − ‖other‖²)/2.
pub fn l2_halfspace(own: &[f64], other: &[f64]) -> (Vec<f64>, f64) {
    (sub(other, own), 0.5 * (sq_norm(own) - sq_norm(other)))
}

pub fn check_pair(z: &[f64], own: &[f64], other: &[f64]) -> Result<()> {
    if own.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: own.len(),
        });
    }
    if other.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: other.len(),
        });
    }
    if own == other {
        return Err(Error::DegenerateBoundary);
    }
    Ok(())
}

pub(crate) fn check_in_box(z: &[f64]) -> Result<()> {
    match z.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::DomainViolation {
            index,
            value: z[index],
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_bound_examples() {
        assert_eq!(trivial_semimetric_bound(1.0, 2.0), 0.5);
        assert_eq!(trivial_semimetric_bound(2.0, 1.0), 0.0);
        // ℓ2 distances 1 and 3 for the two-prototype line model.
        assert_eq!(trivial_semimetric_bound(1.0, 3.0), 1.0);
        let rho = rho_l2(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], Norm::L2).unwrap();
        assert!(rho.value > 1.0);
    }

    #[test]
    fn np_hard_cells_are_refused() {
        let z = [0.0, 0.0];
        for q in [Norm::L1, Norm::L2] {
            let pb = PairwiseProblem::new(&z, &[1.0, 0.0], &[3.0, 0.0], Norm::L1, q, Domain::Unbounded);
            let err = rho(&pb).unwrap_err();
            assert!(err.to_string().contains("Table 1"), "{err}");
        }
    }

    #[test]
    fn degenerate_pair_is_an_error() {
        let pb = PairwiseProblem::new(&[0.0], &[1.0], &[1.0], Norm::L2, Norm::L2, Domain::Unbounded);
        assert!(matches!(rho(&pb), Err(Error::DegenerateBoundary)));
    }

    #[test]
    fn swapping_prototypes_zeroes_the_value() {
        let z = [0.2, -0.4];
        let a = [0.0, 0.0];
        let b = [1.0, 1.5];
        for (p, q) in [
            (Norm::L2, Norm::L2),
            (Norm::L2, Norm::L1),
            (Norm::Linf, Norm::Linf),
            (Norm::Linf, Norm::L1),
            (Norm::Linf, Norm::L2),
            (Norm::L1, Norm::Linf),
        ] {
            let fwd = rho(&PairwiseProblem::new(&z, &a, &b, p, q, Domain::Unbounded)).unwrap();
            let bwd = rho(&PairwiseProblem::new(&z, &b, &a, p, q, Domain::Unbounded)).unwrap();
            assert!(fwd.value > 0.0, "p={p} q={q}");
            assert_eq!(bwd.value, 0.0, "p={p} q={q}");
        }
    }
}
