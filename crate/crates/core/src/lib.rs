//! Exact counting of the roots of an integer polynomial in `Z/(p^t)`.
//!
//! ```
//! use num_bigint::{BigInt, BigUint};
//! use rootcount_core::{count_roots, PrimePowerModulus};
//!
//! let modulus = PrimePowerModulus::from_u64(3, 2).unwrap();
//! let f: Vec<BigInt> = [0, 0, 1].iter().map(|&c| BigInt::from(c)).collect();
//! assert_eq!(count_roots(&f, &modulus).unwrap().total, BigUint::from(3u32));
//! ```

pub mod counter;
pub mod error;
pub mod fppoly;
mod linalg;
pub mod modarith;
pub mod oracle;
pub mod teichmuller;
pub mod triangular;
pub mod zptpoly;

pub use counter::{
    count_roots, count_roots_with, count_small_p, count_system_t3, count_t1, count_t2, count_t3,
    expand_node, poincare_truncated, CountOptions, CountResult, CountStats, Engine, IdealTreeNode,
    LeafContribution, Method, NodeExpansion, PieceStatus, TraceRecord,
};
pub use error::{Error, Result};
pub use fppoly::FpPolynomial;
pub use modarith::{PrimePowerModulus, Residue};
pub use oracle::{brute_force_count, enumerate_system, OracleBudget};
pub use teichmuller::{teich_element, teich_ideal, teich_poly, CompanionMatrix};
pub use triangular::TriangularIdeal;
pub use zptpoly::ZptPolynomial;
