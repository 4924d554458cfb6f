//! Residue arithmetic in `Z/(p^t)` over arbitrary-precision integers.
//!
//! [`PrimePowerModulus`] is the ring descriptor shared by every other module.
//! It is reference counted, so cloning it is cheap and it can be stored in
//! every polynomial and ideal without copying the big integers.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Odd primes used for trial division before Miller-Rabin.
const SMALL_PRIMES: [u32; 11] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin witnesses for all n < 3.3 * 10^24.
const MR_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Primality check: trial division, then Miller-Rabin with a fixed base set.
///
/// The base set is a proof for every input below 3.3e24, which covers all
/// 64-bit primes. Larger inputs are accepted as probable primes.
pub fn is_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if n == &two {
        return true;
    }
    if n.is_even() {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let mut d = n_minus_one.clone();
    let mut r = 0u32;
    while d.is_even() {
        d >>= 1;
        r += 1;
    }
    'witness: for &base in &MR_BASES {
        let a = BigUint::from(base);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..r {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// p-adic valuation of an integer; `Infinite` only for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

/// Writes `n = p^v * u` with `p` not dividing `u`. Zero maps to `(Infinite, 0)`.
pub fn valuation(n: &BigInt, p: &BigUint) -> (Valuation, BigInt) {
    if n.is_zero() {
        return (Valuation::Infinite, BigInt::zero());
    }
    let p = BigInt::from(p.clone());
    let mut u = n.clone();
    let mut v = 0u64;
    loop {
        let (q, r) = u.div_rem(&p);
        if !r.is_zero() {
            break;
        }
        u = q;
        v += 1;
    }
    (Valuation::Finite(v), u)
}

struct ModulusInner {
    p: BigUint,
    t: u32,
    q: BigUint,
}

/// The ring `Z/(p^t)` for a prime `p` and `t >= 1`.
#[derive(Clone)]
pub struct PrimePowerModulus(Arc<ModulusInner>);

impl PrimePowerModulus {
    pub fn new(p: BigUint, t: u32) -> Result<Self> {
        if !is_prime(&p) {
            return Err(Error::NotPrime(p));
        }
        if t == 0 {
            return Err(Error::InvalidExponent(t));
        }
        Ok(Self::new_unchecked(p, t))
    }

    pub fn from_u64(p: u64, t: u32) -> Result<Self> {
        Self::new(BigUint::from(p), t)
    }

    pub(crate) fn new_unchecked(p: BigUint, t: u32) -> Self {
        let q = num_traits::pow(p.clone(), t as usize);
        PrimePowerModulus(Arc::new(ModulusInner { p, t, q }))
    }

    pub fn p(&self) -> &BigUint {
        &self.0.p
    }

    pub fn t(&self) -> u32 {
        self.0.t
    }

    /// `p^t`.
    pub fn q(&self) -> &BigUint {
        &self.0.q
    }

    /// Same prime, different exponent.
    pub fn with_exponent(&self, t: u32) -> Self {
        assert!(t >= 1, "exponent must be positive");
        if t == self.t() {
            return self.clone();
        }
        Self::new_unchecked(self.p().clone(), t)
    }

    /// The prime field `F_p`.
    pub fn field(&self) -> Self {
        self.with_exponent(1)
    }

    pub fn is_field(&self) -> bool {
        self.t() == 1
    }

    /// `p^e` as a big integer.
    pub fn p_pow(&self, e: u32) -> BigUint {
        num_traits::pow(self.p().clone(), e as usize)
    }

    pub fn residue(&self, value: impl Into<BigInt>) -> Residue {
        Residue {
            value: self.reduce_int(&value.into()),
            modulus: self.clone(),
        }
    }

    pub(crate) fn reduce_int(&self, n: &BigInt) -> BigUint {
        let q = BigInt::from(self.q().clone());
        let r = n.mod_floor(&q);
        r.to_biguint().expect("mod_floor is non-negative")
    }

    pub(crate) fn reduce(&self, n: &BigUint) -> BigUint {
        if n < self.q() {
            n.clone()
        } else {
            n % self.q()
        }
    }

    pub(crate) fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if &s >= self.q() {
            s - self.q()
        } else {
            s
        }
    }

    pub(crate) fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            self.q() - (b - a)
        }
    }

    pub(crate) fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            self.q() - a
        }
    }

    pub(crate) fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a.is_zero() || b.is_zero() {
            return BigUint::zero();
        }
        (a * b) % self.q()
    }

    pub(crate) fn pow(&self, a: &BigUint, e: &BigUint) -> BigUint {
        a.modpow(e, self.q())
    }

    pub(crate) fn is_unit(&self, a: &BigUint) -> bool {
        !(a % self.p()).is_zero()
    }

    pub(crate) fn inv(&self, a: &BigUint) -> Result<BigUint> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit {
                value: a.clone(),
                modulus: self.q().clone(),
            });
        }
        let a = BigInt::from(a.clone());
        let q = BigInt::from(self.q().clone());
        let eg = a.extended_gcd(&q);
        debug_assert!(eg.gcd.is_one());
        Ok(self.reduce_int(&eg.x))
    }

    /// Valuation of a residue, capped at `t` (zero has valuation `t`).
    pub(crate) fn val(&self, a: &BigUint) -> u32 {
        if a.is_zero() {
            return self.t();
        }
        let mut v = 0;
        let mut x = a.clone();
        while v < self.t() {
            let (quo, rem) = x.div_rem(self.p());
            if !rem.is_zero() {
                break;
            }
            x = quo;
            v += 1;
        }
        v
    }

    /// Signed representative in `(-q/2, q/2]`, used only for display.
    pub(crate) fn signed(&self, a: &BigUint) -> BigInt {
        let half = self.q() >> 1;
        if a > &half {
            BigInt::from_biguint(Sign::Minus, self.q() - a)
        } else {
            BigInt::from(a.clone())
        }
    }
}

impl PartialEq for PrimePowerModulus {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.t() == other.t() && self.p() == other.p())
    }
}

impl Eq for PrimePowerModulus {}

impl fmt::Debug for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/({}^{})", self.p(), self.t())
    }
}

impl fmt::Display for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p(), self.t())
    }
}

/// An element of `Z/(p^t)`, always stored as its least non-negative representative.
#[derive(Clone, PartialEq, Eq)]
pub struct Residue {
    value: BigUint,
    modulus: PrimePowerModulus,
}

impl Residue {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(&self.value)
    }

    pub fn add(&self, other: &Residue) -> Residue {
        self.with(self.modulus.add(&self.value, &other.value))
    }

    pub fn sub(&self, other: &Residue) -> Residue {
        self.with(self.modulus.sub(&self.value, &other.value))
    }

    pub fn mul(&self, other: &Residue) -> Residue {
        self.with(self.modulus.mul(&self.value, &other.value))
    }

    pub fn neg(&self) -> Residue {
        self.with(self.modulus.neg(&self.value))
    }

    /// Multiplicative inverse; fails with [`Error::NonUnit`] when `p` divides the value.
    pub fn inverse(&self) -> Result<Residue> {
        Ok(self.with(self.modulus.inv(&self.value)?))
    }

    /// Square-and-multiply exponentiation.
    pub fn pow_mod(&self, e: &BigUint) -> Residue {
        self.with(self.modulus.pow(&self.value, e))
    }

    fn with(&self, value: BigUint) -> Residue {
        Residue {
            value,
            modulus: self.modulus.clone(),
        }
    }
}

impl fmt::Debug for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus.q())
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
