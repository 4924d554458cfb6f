//! Dense univariate polynomials over `F_p`.
//!
//! Besides the usual ring operations this module provides the pieces the
//! counting engine needs at level zero: the split part `gcd(x^p - x, f)`
//! and the multiplicity-type factorization
//! `f = f_1 f_2^2 ... f_l^l g` where every `f_i` splits into distinct
//! linear factors and `g` has no roots in `F_p`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::modarith::PrimePowerModulus;

/// Largest prime for which exhaustive root enumeration is allowed by default.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 16;

/// Polynomial over `F_p`, constant term first, no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct FpPolynomial {
    coeffs: Vec<BigUint>,
    field: PrimePowerModulus,
}

impl FpPolynomial {
    /// Builds a polynomial from signed integer coefficients (constant first).
    /// `modulus` may be any power of `p`; only `p` is used.
    pub fn new<I, C>(modulus: &PrimePowerModulus, coeffs: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<BigInt>,
    {
        let field = modulus.field();
        let coeffs = coeffs
            .into_iter()
            .map(|c| field.reduce_int(&c.into()))
            .collect();
        Self::from_raw(&field, coeffs)
    }

    pub(crate) fn from_raw(field: &PrimePowerModulus, mut coeffs: Vec<BigUint>) -> Self {
        debug_assert!(field.is_field());
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        FpPolynomial {
            coeffs,
            field: field.clone(),
        }
    }

    pub fn zero(modulus: &PrimePowerModulus) -> Self {
        Self::from_raw(&modulus.field(), Vec::new())
    }

    pub fn one(modulus: &PrimePowerModulus) -> Self {
        Self::from_raw(&modulus.field(), vec![BigUint::one()])
    }

    /// The monomial `x`.
    pub fn x(modulus: &PrimePowerModulus) -> Self {
        Self::from_raw(&modulus.field(), vec![BigUint::zero(), BigUint::one()])
    }

    /// `x - c`.
    pub fn linear(modulus: &PrimePowerModulus, c: &BigUint) -> Self {
        let field = modulus.field();
        let c = field.neg(&field.reduce(c));
        Self::from_raw(&field, vec![c, BigUint::one()])
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigUint {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn field(&self) -> &PrimePowerModulus {
        &self.field
    }

    pub fn p(&self) -> &BigUint {
        self.field.p()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to 0.
    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<&BigUint> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some(lc) if lc.is_one() => self.clone(),
            Some(lc) => {
                let inv = self.field.inv(lc).expect("nonzero element of F_p");
                self.scale(&inv)
            }
        }
    }

    pub fn scale(&self, c: &BigUint) -> Self {
        let f = &self.field;
        Self::from_raw(f, self.coeffs.iter().map(|a| f.mul(a, c)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| f.add(&self.coeff(i), &other.coeff(i)))
            .collect();
        Self::from_raw(f, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| f.sub(&self.coeff(i), &other.coeff(i)))
            .collect();
        Self::from_raw(f, coeffs)
    }

    pub fn neg(&self) -> Self {
        let f = &self.field;
        Self::from_raw(f, self.coeffs.iter().map(|a| f.neg(a)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.field);
        }
        let p = self.field.p();
        let mut acc = vec![BigUint::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                acc[i + j] += a * b;
            }
        }
        let coeffs = acc.into_iter().map(|c| c % p).collect();
        Self::from_raw(&self.field, coeffs)
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut result = Self::one(&self.field);
        for _ in 0..e {
            result = result.mul(self);
        }
        result
    }

    /// Euclidean division; panics on a zero divisor polynomial.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let f = &self.field;
        if self.deg() < dd || self.is_zero() {
            return (Self::zero(f), self.clone());
        }
        let inv = f
            .inv(divisor.leading().unwrap())
            .expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let mut quo = vec![BigUint::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let c = f.mul(&rem[i], &inv);
            for (j, dj) in divisor.coeffs.iter().enumerate() {
                let idx = i - dd + j;
                rem[idx] = f.sub(&rem[idx], &f.mul(&c, dj));
            }
            quo[i - dd] = c;
        }
        rem.truncate(dd);
        (Self::from_raw(f, quo), Self::from_raw(f, rem))
    }

    pub fn rem(&self, divisor: &Self) -> Self {
        self.div_rem(divisor).1
    }

    /// Quotient of an exact division.
    pub fn exact_div(&self, divisor: &Self) -> Self {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact division");
        q
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.rem(self).is_zero()
    }

    pub fn derivative(&self) -> Self {
        let f = &self.field;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| f.mul(c, &f.reduce(&BigUint::from(i))))
            .collect();
        Self::from_raw(f, coeffs)
    }

    pub fn eval(&self, x: &BigUint) -> BigUint {
        let f = &self.field;
        let x = f.reduce(x);
        self.coeffs
            .iter()
            .rev()
            .fold(BigUint::zero(), |acc, c| f.add(&f.mul(&acc, &x), c))
    }

    /// `self^e mod modulus` by square-and-multiply.
    pub fn pow_mod(&self, e: &BigUint, modulus: &Self) -> Self {
        let mut result = Self::one(&self.field).rem(modulus);
        let base = self.rem(modulus);
        for i in (0..e.bits()).rev() {
            result = result.mul(&result).rem(modulus);
            if e.bit(i) {
                result = result.mul(&base).rem(modulus);
            }
        }
        result
    }

    /// Inverse of `f(x) = h(x^p)`: returns `h`, using `a^(1/p) = a` in `F_p`.
    fn pth_root(&self) -> Self {
        let p = self
            .p()
            .to_usize()
            .expect("p-th root only arises for p below deg f");
        let coeffs = self.coeffs.iter().step_by(p).cloned().collect();
        Self::from_raw(&self.field, coeffs)
    }

    pub fn to_ints(&self) -> Vec<BigInt> {
        self.coeffs.iter().cloned().map(BigInt::from).collect()
    }
}

impl fmt::Debug for FpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod {})", self.p())
    }
}

impl fmt::Display for FpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c.is_one()) {
                (0, _) => write!(f, "{c}")?,
                (1, true) => write!(f, "x")?,
                (1, false) => write!(f, "{c}*x")?,
                (_, true) => write!(f, "x^{i}")?,
                (_, false) => write!(f, "{c}*x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Monic gcd. `gcd(f, 0) = monic(f)`; `gcd(0, 0) = 0`.
pub fn gcd(a: &FpPolynomial, b: &FpPolynomial) -> FpPolynomial {
    let mut r0 = a.clone();
    let mut r1 = b.clone();
    while !r1.is_zero() {
        let r = r0.rem(&r1);
        r0 = r1;
        r1 = r;
    }
    r0.monic()
}

/// `x^p mod f`.
pub fn frobenius_power(f: &FpPolynomial) -> FpPolynomial {
    assert!(f.deg() >= 1, "frobenius_power needs deg f >= 1");
    FpPolynomial::x(f.field()).pow_mod(f.p(), f)
}

/// Product of the distinct linear factors of `f`: `gcd(x^p - x, f)`.
pub fn split_part(f: &FpPolynomial) -> FpPolynomial {
    assert!(!f.is_zero(), "split_part of the zero polynomial");
    if f.deg() == 0 {
        return FpPolynomial::one(f.field());
    }
    let w = frobenius_power(f).sub(&FpPolynomial::x(f.field()));
    gcd(f, &w)
}

/// Squarefree decomposition of a monic polynomial: pairs `(a_i, i)` with
/// `f = prod a_i^i`, every `a_i` squarefree and pairwise coprime.
pub fn squarefree_decomposition(f: &FpPolynomial) -> Vec<(FpPolynomial, usize)> {
    let f = f.monic();
    let mut out = Vec::new();
    if f.deg() == 0 {
        return out;
    }
    let mut c = gcd(&f, &f.derivative());
    let mut w = f.exact_div(&c);
    let mut i = 1;
    while !w.is_one() {
        let y = gcd(&w, &c);
        let fac = w.exact_div(&y);
        if fac.deg() > 0 {
            out.push((fac, i));
        }
        w = y;
        c = c.exact_div(&w);
        i += 1;
    }
    if c.deg() > 0 {
        let p = f
            .p()
            .to_usize()
            .expect("derivative vanishes only when p <= deg f");
        for (g, j) in squarefree_decomposition(&c.pth_root()) {
            out.push((g, j * p));
        }
    }
    // Merge layers of equal multiplicity so the output is canonical.
    out.sort_by_key(|(_, i)| *i);
    let mut merged: Vec<(FpPolynomial, usize)> = Vec::new();
    for (g, i) in out {
        match merged.last_mut() {
            Some((h, j)) if *j == i => *h = h.mul(&g),
            _ => merged.push((g, i)),
        }
    }
    merged
}

/// `f = prod f_i^i * nonlinear_part (mod p)` with each `f_i` monic and a
/// product of distinct linear factors; `nonlinear_part` has no roots in `F_p`
/// and carries the leading coefficient of `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityTypeFactorization {
    pub parts: Vec<(FpPolynomial, usize)>,
    pub nonlinear_part: FpPolynomial,
}

impl MultiplicityTypeFactorization {
    /// Recomposes the factorization; equals the input polynomial.
    pub fn product(&self) -> FpPolynomial {
        self.parts
            .iter()
            .fold(self.nonlinear_part.clone(), |acc, (g, i)| {
                acc.mul(&g.pow(*i))
            })
    }

    /// Number of distinct roots in `F_p` that have multiplicity `mult`.
    pub fn roots_of_multiplicity(&self, mult: usize) -> usize {
        self.parts
            .iter()
            .filter(|(_, i)| *i == mult)
            .map(|(g, _)| g.deg())
            .sum()
    }
}

/// Multiplicity-type factorization: squarefree layers, each cut into its
/// split part and a root-free remainder. No root finding is involved.
pub fn multiplicity_type_factor(f: &FpPolynomial) -> MultiplicityTypeFactorization {
    assert!(
        !f.is_zero(),
        "multiplicity_type_factor of the zero polynomial"
    );
    let lc = f.leading().unwrap().clone();
    let mut nonlinear = FpPolynomial::from_raw(f.field(), vec![lc]);
    let mut parts = Vec::new();
    for (layer, i) in squarefree_decomposition(f) {
        let split = split_part(&layer);
        if split.deg() > 0 {
            let rest = layer.exact_div(&split);
            nonlinear = nonlinear.mul(&rest.pow(i));
            parts.push((split, i));
        } else {
            nonlinear = nonlinear.mul(&layer.pow(i));
        }
    }
    MultiplicityTypeFactorization {
        parts,
        nonlinear_part: nonlinear,
    }
}

/// All roots of `f` in `F_p` by exhaustive evaluation. Only for `p <= limit`.
pub fn enumerate_linear_roots(f: &FpPolynomial, limit: u64) -> Result<Vec<BigUint>> {
    let p = f.p();
    if *p > BigUint::from(limit) {
        return Err(Error::SmallPrimeOnly {
            p: p.clone(),
            threshold: BigUint::from(limit),
        });
    }
    if f.is_zero() {
        return Ok((0..p.to_u64().unwrap()).map(BigUint::from).collect());
    }
    let p = p.to_u64().unwrap();
    Ok((0..p)
        .map(BigUint::from)
        .filter(|r| f.eval(r).is_zero())
        .collect())
}
