//! Exact computation of local intersection multiplicities of three special
//! cycles over an odd prime `p`, by a closed formula, by the derivative of a
//! representation density, by a case table of second differences, and by a
//! divisor calculus on the Bruhat–Tits tree of `PGL_2` over `Q_{p²}`.
//!
//! All arithmetic is exact: big integers, big rationals, and residues modulo
//! `p^N` with explicit precision tracking.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod padic;
pub mod quadform;
pub mod siegel;
pub mod density;
pub mod building;
pub mod intersect;

pub use error::{Error, Result};
pub use padic::{PAdicValue, QuadExtValue, Valuation};
pub use quadform::{compute_invariants, diagonalize, diagonalize_at, random_unimodular_conjugate, DiagonalForm, SymMatrix3, TInvariants};
pub use siegel::{a_series, alpha_prime, closed_intersection, ftilde, relation_check, IntPolynomial, RelationReport};
pub use density::{brute_density, extend_s_r, stabilized_density, CountResult, GramMatrix};
pub use building::{
    classify_pair_geometry, difference_fiber_divisor, fixed_locus, sample_orthogonal_triple, special_fiber_divisor,
    FiberDivisor, FixedLocus, LatticeVertex, LocusData, PairGeometry, SpecialEndo, TreeBall,
};
pub use intersect::{
    case_formula, ddd_second_difference, full_intersection, reassemble_from_cases, triple_combinatorial, CaseValue,
    CycleDivisorInD, IntersectOptions, TripleReport,
};
