//! Exact-arithmetic engine for truncated ideal and subrepresentation zeta
//! functions of class-two nilpotent rings and admissible quiver
//! representations over p-adic integer rings.
//!
//! The building blocks:
//!
//! - [`model`]: quivers, admissible representations, class-two nilpotent
//!   algebras, and the dictionary between them (including amalgamated powers).
//! - [`padic`]: canonical Hermite-normal-form lattices over `Z_p`,
//!   enumeration by index, membership, sums, projections, and the good-basis
//!   measure with its brute-force counting oracle.
//! - [`dirichlet`]: truncated multivariate Dirichlet series with exact
//!   rational coefficients, plus the closed forms for free modules and
//!   amalgamated Heisenberg algebras.
//! - [`engine`]: the zeta computations themselves, by independent routes
//!   (direct lattice enumeration vs. the pair-sum expansion), and the
//!   verifiers for the structural identities relating them.
//! - [`cli`]: JSON input schema, job configuration, and the command-line
//!   front end.

pub mod cli;
pub mod dirichlet;
pub mod engine;
pub mod model;
pub mod padic;

pub use dirichlet::{abelian_zeta, heisenberg_amalgam_zeta, DirichletPoly, Exp};
pub use model::{
    algebra_to_rep, amalgamate_algebra, amalgamate_rep, validate_lie, AdmissibleRep, IntMatrix,
    NilpotentAlgebra, Quiver,
};
pub use padic::{
    contains_lattice, contains_vector, enumerate_sublattices, good_basis_count_mod,
    good_basis_measure, hnf_reduce, project_and_sum, sublattice_count, sum_lattices, CapSpec,
    HNFLattice, PAdicContext,
};
