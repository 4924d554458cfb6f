//! Sparse multivariate polynomials over `Z/(p^t)`.
//!
//! Terms are keyed by exponent tuples, one entry per variable `x_1..x_k`.
//! The digit substitution `f(x_1 + p x_2 + ... + p^k x_{k+1})` produces many
//! variables but few surviving terms: a monomial's coefficient is divisible
//! by `p^w` where `w = sum (i-1) e_i`, so anything of weight `>= t` is dropped.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::modarith::PrimePowerModulus;
use crate::triangular::TriangularIdeal;

/// Exponent tuple, one entry per variable.
pub type Monomial = Vec<u32>;

#[derive(Clone, PartialEq, Eq)]
pub struct ZptPolynomial {
    modulus: PrimePowerModulus,
    arity: usize,
    terms: BTreeMap<Monomial, BigUint>,
}

impl ZptPolynomial {
    pub fn zero(modulus: &PrimePowerModulus, arity: usize) -> Self {
        ZptPolynomial {
            modulus: modulus.clone(),
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(modulus: &PrimePowerModulus, arity: usize, c: impl Into<BigInt>) -> Self {
        let mut f = Self::zero(modulus, arity);
        f.add_term(vec![0; arity], modulus.reduce_int(&c.into()));
        f
    }

    pub fn one(modulus: &PrimePowerModulus, arity: usize) -> Self {
        Self::constant(modulus, arity, 1)
    }

    /// The variable `x_{index+1}` (zero-based `index`).
    pub fn var(modulus: &PrimePowerModulus, arity: usize, index: usize) -> Self {
        assert!(index < arity, "variable index out of range");
        let mut mon = vec![0; arity];
        mon[index] = 1;
        Self::from_terms(modulus, arity, [(mon, BigInt::one())])
    }

    /// Univariate polynomial from coefficients, constant term first.
    pub fn univariate<I, C>(modulus: &PrimePowerModulus, coeffs: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<BigInt>,
    {
        Self::from_terms(
            modulus,
            1,
            coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| (vec![i as u32], c.into())),
        )
    }

    pub fn from_terms<I, C>(modulus: &PrimePowerModulus, arity: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C)>,
        C: Into<BigInt>,
    {
        let mut f = Self::zero(modulus, arity);
        for (mon, c) in terms {
            assert_eq!(mon.len(), arity, "monomial length must equal arity");
            f.add_term(mon, modulus.reduce_int(&c.into()));
        }
        f
    }

    pub(crate) fn from_raw_terms(
        modulus: &PrimePowerModulus,
        arity: usize,
        terms: impl IntoIterator<Item = (Monomial, BigUint)>,
    ) -> Self {
        let mut f = Self::zero(modulus, arity);
        for (mon, c) in terms {
            f.add_term(mon, c);
        }
        f
    }

    pub(crate) fn add_term(&mut self, mon: Monomial, c: BigUint) {
        if c.is_zero() {
            return;
        }
        let m = &self.modulus;
        let entry = self.terms.entry(mon);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(m.reduce(&c));
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = m.add(o.get(), &m.reduce(&c));
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigUint)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mon: &[u32]) -> BigUint {
        self.terms.get(mon).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest exponent of variable `index`; `None` for the zero polynomial.
    pub fn degree_in(&self, index: usize) -> Option<u32> {
        self.terms.keys().map(|m| m[index]).max()
    }

    /// Largest variable index (zero-based) that actually occurs.
    pub fn max_var(&self) -> Option<usize> {
        self.terms
            .keys()
            .filter_map(|m| m.iter().rposition(|&e| e > 0))
            .max()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        for (mon, c) in &other.terms {
            out.add_term(mon.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let m = &self.modulus;
        Self::from_raw_terms(
            m,
            self.arity,
            self.terms.iter().map(|(k, c)| (k.clone(), m.neg(c))),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigUint) -> Self {
        let m = &self.modulus;
        Self::from_raw_terms(
            m,
            self.arity,
            self.terms.iter().map(|(k, a)| (k.clone(), m.mul(a, c))),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let m = &self.modulus;
        let mut out = Self::zero(m, self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mon = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(mon, m.mul(ca, cb));
            }
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(&self.modulus, self.arity);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Evaluates at a point of `(Z/p^t)^arity`.
    pub fn eval(&self, point: &[BigUint]) -> BigUint {
        assert_eq!(point.len(), self.arity);
        let m = &self.modulus;
        let mut acc = BigUint::zero();
        for (mon, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(mon) {
                if e > 0 {
                    term = m.mul(&term, &m.pow(x, &BigUint::from(e)));
                }
            }
            acc = m.add(&acc, &term);
        }
        acc
    }

    /// Same polynomial viewed in more variables (new variables appended).
    pub fn with_arity(&self, arity: usize) -> Self {
        if arity == self.arity {
            return self.clone();
        }
        if arity < self.arity {
            assert!(
                self.max_var().is_none_or(|v| v < arity),
                "cannot drop a variable that occurs"
            );
        }
        let terms = self.terms.iter().map(|(mon, c)| {
            let mut mon = mon.clone();
            mon.resize(arity, 0);
            (mon, c.clone())
        });
        Self::from_raw_terms(&self.modulus, arity, terms)
    }

    /// Reduction to a smaller power of the same prime.
    pub fn reduce_modulus(&self, target: &PrimePowerModulus) -> Self {
        assert_eq!(target.p(), self.modulus.p());
        assert!(target.t() <= self.modulus.t());
        Self::from_raw_terms(
            target,
            self.arity,
            self.terms
                .iter()
                .map(|(k, c)| (k.clone(), target.reduce(c))),
        )
    }

    pub fn mod_p(&self) -> Self {
        self.reduce_modulus(&self.modulus.field())
    }

    /// Reinterprets coefficients in a larger power of `p` (canonical lift).
    pub fn lift_modulus(&self, target: &PrimePowerModulus) -> Self {
        assert_eq!(target.p(), self.modulus.p());
        Self::from_raw_terms(
            target,
            self.arity,
            self.terms.iter().map(|(k, c)| (k.clone(), c.clone())),
        )
    }

    /// Smallest coefficient valuation, capped at `t`.
    pub fn content_valuation(&self) -> u32 {
        let m = &self.modulus;
        self.terms.values().map(|c| m.val(c)).min().unwrap_or(m.t())
    }

    /// Divides every coefficient by `p^s`; they must all be divisible.
    pub fn divide_by_p_power(&self, s: u32) -> Self {
        let ps = self.modulus.p_pow(s);
        Self::from_raw_terms(
            &self.modulus,
            self.arity,
            self.terms.iter().map(|(k, c)| {
                let (q, r) = c.div_rem(&ps);
                debug_assert!(r.is_zero(), "coefficient not divisible by p^s");
                (k.clone(), q)
            }),
        )
    }

    /// Hasse derivative `(1/j!) d^j/dx^j` with respect to variable `index`.
    /// Exact in every characteristic since it is computed with binomials.
    pub fn hasse_derivative(&self, index: usize, j: u32) -> Self {
        let m = &self.modulus;
        let mut out = Self::zero(m, self.arity);
        for (mon, c) in &self.terms {
            let e = mon[index];
            if e < j {
                continue;
            }
            let binom = m.reduce(&binomial(e, j));
            let mut mon = mon.clone();
            mon[index] = e - j;
            out.add_term(mon, m.mul(c, &binom));
        }
        out
    }

    /// Coefficients with respect to variable `index`: entry `j` is the
    /// coefficient of `x_index^j`, with that variable's exponent set to 0.
    pub fn coefficients_in(&self, index: usize) -> Vec<ZptPolynomial> {
        let deg = match self.degree_in(index) {
            Some(d) => d as usize,
            None => return Vec::new(),
        };
        let mut out = vec![Self::zero(&self.modulus, self.arity); deg + 1];
        for (mon, c) in &self.terms {
            let j = mon[index] as usize;
            let mut mon = mon.clone();
            mon[index] = 0;
            out[j].add_term(mon, c.clone());
        }
        out
    }

    /// Substitutes `x_index -> value` for an element of `Z/p^t`.
    pub fn substitute(&self, index: usize, value: &BigUint) -> Self {
        let m = &self.modulus;
        let mut out = Self::zero(m, self.arity);
        for (mon, c) in &self.terms {
            let mut mon = mon.clone();
            let e = std::mem::take(&mut mon[index]);
            out.add_term(mon, m.mul(c, &m.pow(value, &BigUint::from(e))));
        }
        out
    }

    /// Canonical ordering key: terms in lex order of exponents.
    pub(crate) fn sort_key(&self) -> Vec<(Monomial, BigUint)> {
        self.terms
            .iter()
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect()
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.arity, other.arity, "arity mismatch");
        assert!(self.modulus == other.modulus, "modulus mismatch");
    }

    fn var_name(&self, i: usize) -> String {
        if self.arity == 1 {
            "x".to_string()
        } else {
            format!("x{}", i + 1)
        }
    }
}

impl fmt::Debug for ZptPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod {})", self.modulus)
    }
}

impl fmt::Display for ZptPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Highest monomials first, reading like ordinary notation.
        for (mon, c) in self.terms.iter().rev() {
            let c = self.modulus.signed(c);
            let neg = c < BigInt::zero();
            let mag = if neg { -c } else { c };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let vars: Vec<String> = mon
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.var_name(i)
                    } else {
                        format!("{}^{}", self.var_name(i), e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// p-adic weight of a monomial in the digit variables: `x_i` carries `p^(i-1)`.
fn digit_weight(mon: &[u32]) -> u64 {
    mon.iter()
        .enumerate()
        .map(|(i, &e)| i as u64 * e as u64)
        .sum()
}

/// Expands `f(x_1 + p x_2 + ... + p^k x_{k+1})` over `Z/(p^t)`.
///
/// `f` must be univariate. Monomials of digit weight `>= t` are pruned as
/// they are formed, which keeps the degree in `x_{k+1}` below `t/k`.
pub fn digit_substitute(f: &ZptPolynomial, k: usize) -> Result<ZptPolynomial> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            got: f.arity(),
        });
    }
    let m = f.modulus();
    let t = m.t() as u64;
    let arity = k + 1;
    let digits: Vec<(Monomial, BigUint)> = (0..arity)
        .filter(|&i| (i as u64) < t)
        .map(|i| {
            let mut mon = vec![0; arity];
            mon[i] = 1;
            (mon, m.p_pow(i as u32))
        })
        .collect();
    let deg = f.degree_in(0).unwrap_or(0) as usize;
    let mut acc = ZptPolynomial::zero(m, arity);
    for i in (0..=deg).rev() {
        let mut next = ZptPolynomial::zero(m, arity);
        for (mon, c) in &acc.terms {
            for (dm, dc) in &digits {
                let prod: Monomial = mon.iter().zip(dm).map(|(a, b)| a + b).collect();
                if digit_weight(&prod) >= t {
                    continue;
                }
                next.add_term(prod, m.mul(c, dc));
            }
        }
        next.add_term(vec![0; arity], f.coeff(&[i as u32]));
        acc = next;
    }
    Ok(acc)
}

/// `T_{m,j}(x, y) = sum_{1<=i<=j} y^(i-1) m^[i](x)` with Hasse derivatives `m^[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaylorSection {
    pub order: u32,
    pub poly: ZptPolynomial,
}

impl TaylorSection {
    pub fn eval(&self, x: &BigUint, y: &BigUint) -> BigUint {
        self.poly.eval(&[x.clone(), y.clone()])
    }
}

pub fn taylor_sections(m: &ZptPolynomial, order: u32) -> Result<TaylorSection> {
    if m.arity() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            got: m.arity(),
        });
    }
    assert!(order >= 1, "Taylor section order starts at 1");
    let md = m.modulus();
    let mut poly = ZptPolynomial::zero(md, 2);
    for i in 1..=order {
        let d = m.hasse_derivative(0, i);
        for (mon, c) in d.terms() {
            poly.add_term(vec![mon[0], i - 1], c.clone());
        }
    }
    Ok(TaylorSection { order, poly })
}

/// Canonical remainder of `f` modulo a triangular ideal and `p^t`.
/// Variables above the ideal's levels are left untouched.
pub fn reduce_mod_triangular(f: &ZptPolynomial, ideal: &TriangularIdeal) -> Result<ZptPolynomial> {
    ideal.reduce(f)
}

/// Largest `s <= t` with `f = p^s g (mod I, p^t)`, together with `g`.
/// An identically vanishing remainder gives `(t, 0)`.
pub fn extract_valuation(
    f: &ZptPolynomial,
    ideal: &TriangularIdeal,
) -> Result<(u32, ZptPolynomial)> {
    let r = ideal.reduce(f)?;
    let s = r.content_valuation();
    if s >= f.modulus().t() {
        return Ok((f.modulus().t(), ZptPolynomial::zero(f.modulus(), f.arity())));
    }
    Ok((s, r.divide_by_p_power(s)))
}

/// Discriminant of `g` with respect to its last variable, reduced modulo the ideal.
/// Degree one returns 1. The leading coefficient must be a unit modulo `(I, p)`.
pub fn discriminant_last_var(g: &ZptPolynomial, ideal: &TriangularIdeal) -> Result<ZptPolynomial> {
    ideal.discriminant(g)
}
