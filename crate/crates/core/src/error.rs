use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(BigUint),

    #[error("exponent must be at least 1, got {0}")]
    InvalidExponent(u32),

    /// `p` divides the element, so it has no inverse modulo `p^t`.
    #[error("{value} is not a unit modulo {modulus}")]
    NonUnit { value: BigUint, modulus: BigUint },

    #[error("exhaustive root enumeration is limited to primes below {threshold}, got {p}")]
    SmallPrimeOnly { p: BigUint, threshold: BigUint },

    /// The element vanishes at every point of the ideal.
    #[error("element is zero modulo the ideal")]
    ZeroElement,

    #[error("system has no solutions over the prime field")]
    EmptyVariety,

    /// The leading coefficient is not a unit modulo the ideal; carries its rendering.
    #[error("leading coefficient {0} is not a unit modulo the ideal")]
    NonMonicLeading(String),

    #[error("generator {index} is not monic in its own variable")]
    MalformedIdeal { index: usize },

    #[error("polynomial has {got} variables, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("moduli do not match")]
    ModulusMismatch,

    #[error("enumeration needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: BigUint, budget: u64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
