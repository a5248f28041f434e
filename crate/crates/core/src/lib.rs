//! Stochastic probing toolkit.
//!
//! A probing problem consists of a ground set of elements, each active
//! independently with a known probability that is revealed only by probing,
//! inner constraints on the set of successfully probed elements, and outer
//! constraints on the set of probed elements. A probing strategy commits to
//! every element it probes successfully.
//!
//! The crate provides:
//!
//! * the ground-set model and its JSON instance format ([`model`], [`io`]),
//! * matroid oracles, polytope membership, and convex decomposition of
//!   polytope points into independent sets ([`matroid`]),
//! * submodular objectives with exact and sampled multilinear extensions,
//!   a concave upper extension computed by LP, and pruning ([`submodular`]),
//! * the exchange structures (injections, transversal mappings, critical
//!   sets, blocking sets) that drive the probing scheme ([`exchange`]),
//! * the contention-resolution probing scheme for intersections of
//!   transversal matroids, with on-the-fly pruning and scheme composition
//!   ([`scheme`]),
//! * measured continuous greedy over the probing relaxation ([`greedy`]),
//! * stochastic k-set packing and bipartite stochastic matching with
//!   dependent rounding ([`apps`]),
//! * brute-force and statistical oracles that verify every guarantee at
//!   desk scale ([`oracle`]), plus report plumbing ([`report`]) and random
//!   instance generators ([`gen`]).
//!
//! Everything is sized for desk-scale verification: exact oracles cap the
//! ground set (configurable, defaults documented per function), and the
//! statistical checks quote Hoeffding confidence intervals at level 0.99.

pub mod apps;
pub mod exchange;
pub mod gen;
pub mod greedy;
pub mod io;
pub mod matroid;
pub mod model;
pub mod oracle;
pub mod report;
pub mod scheme;
pub mod set;
pub mod submodular;

/// Errors reported by fallible operations across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument was outside its documented domain.
    #[error("input domain error: {0}")]
    Domain(String),
    /// The request exceeds a desk-scale capability limit.
    #[error("capability limit exceeded: {0}")]
    Capability(String),
    /// A point or program was infeasible.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Inputs that must agree with each other did not.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    /// The LP solver failed (iteration cap or internal numerical trouble).
    #[error("linear program error: {0}")]
    Lp(String),
    /// An instance file failed to parse or validate.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
