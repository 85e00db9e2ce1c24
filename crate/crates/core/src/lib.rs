//! Conditions of possible experience for two-valued observables.
//!
//! The crate is organised around a [`Scenario`]: a set of ±1 observables and
//! the contexts in which subsets of them are measured together. From a
//! scenario it derives the facet inequalities of the correlation polytope,
//! decides whether per-context marginals admit a global joint distribution,
//! and simulates the triple, pair and two-level quantum measurement protocols
//! together with a binned two-slit model.

pub mod error;
pub mod feasibility;
pub mod polytope;
pub mod rational;
pub mod rng;
pub mod scenario;
pub mod simulator;
pub mod two_slit;

pub use error::{Error, Result};
pub use feasibility::{
    check_consistency, correlations_to_marginals, joint_exists, ConsistencyReport, ContextMarginal, FeasibilityStatus,
    FeasibilityVerdict, JointDistribution, MarginalCertificate,
};
pub use polytope::{
    derive_facets, derive_facets_in, enumerate_vertices, evaluate, Assignment, CoordinateSet, CorrelationPoint, FacetSet,
    Inequality,
};
pub use rational::Rational;
pub use scenario::{build_scenario, detect_cyclicity, Context, CyclicityReport, Observable, Scenario};
