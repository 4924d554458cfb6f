//! Triangular ideals `(g_1(x_1), g_2(x_1, x_2), ..., g_k(x_1..x_k))` with each
//! `g_i` monic in `x_i`, and arithmetic in their quotient rings.
//!
//! Elements of the quotient `A_k = R[x_1..x_k]/I` are stored densely in the
//! monomial basis `x_1^e_1 ... x_k^e_k` with `e_i < n_i`: a flat vector whose
//! outermost blocks are indexed by the exponent of `x_k`. Multiplication
//! reduces by `g_k` first and recurses into the blocks.
//!
//! Over `F_p` the quotient of a splitting ideal is a product of copies of
//! `F_p`, so an element is zero, a unit, or a zero divisor. Inversion runs
//! the extended Euclidean algorithm level by level and, when a leading
//! coefficient turns out to be a zero divisor, splits the ideal instead of
//! failing. Every operation that can hit such a zero divisor returns an
//! [`Outcome`] and leaves it to the caller to rerun on both halves.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, CommRing};
use crate::modarith::PrimePowerModulus;
use crate::zptpoly::ZptPolynomial;

/// Element of a quotient ring at some level, flat monomial coordinates.
pub(crate) type Elem = Vec<BigUint>;

/// Dense polynomial in the next variable with coefficients in a quotient ring.
pub(crate) type UPoly = Vec<Elem>;

/// Result of a computation that may discover a zero divisor.
#[derive(Debug, Clone)]
pub enum Outcome<T> {
    Value(T),
    /// The ideal is the intersection of two coprime triangular ideals.
    Split(TriangularIdeal, TriangularIdeal),
}

impl<T> Outcome<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Outcome<U> {
        match self {
            Outcome::Value(v) => Outcome::Value(f(v)),
            Outcome::Split(a, b) => Outcome::Split(a, b),
        }
    }
}

/// Either the inverse of an element or a splitting of the ideal.
pub type InvertOrSplit = Outcome<ZptPolynomial>;

#[derive(Clone)]
pub struct TriangularIdeal {
    modulus: PrimePowerModulus,
    /// `generators[i]` is in `x_1..x_{i+1}` with canonical tail.
    generators: Vec<ZptPolynomial>,
    degrees: Vec<usize>,
    /// `dims[l]` = rank of the quotient at level `l`; `dims[0] = 1`.
    dims: Vec<usize>,
    /// `tails[i][j]` = coefficient of `x_{i+1}^j` in `g_{i+1}`, at level `i`.
    tails: Vec<Vec<Elem>>,
}

impl TriangularIdeal {
    /// The zero ideal in zero variables.
    pub fn empty(modulus: &PrimePowerModulus) -> Self {
        TriangularIdeal {
            modulus: modulus.clone(),
            generators: Vec::new(),
            degrees: Vec::new(),
            dims: vec![1],
            tails: Vec::new(),
        }
    }

    /// Builds an ideal from generators `g_1..g_k`; `g_i` may only involve
    /// `x_1..x_i` and must be monic of positive degree in `x_i` (after
    /// reduction by the lower generators).
    pub fn new(modulus: &PrimePowerModulus, generators: Vec<ZptPolynomial>) -> Result<Self> {
        let mut ideal = Self::empty(modulus);
        for g in generators {
            ideal = ideal.push_generator(&g)?;
        }
        Ok(ideal)
    }

    fn push_generator(&self, g: &ZptPolynomial) -> Result<Self> {
        if g.modulus() != &self.modulus {
            return Err(Error::ModulusMismatch);
        }
        let level = self.levels();
        if g.max_var().is_some_and(|v| v > level) {
            return Err(Error::MalformedIdeal { index: level });
        }
        let g = g.with_arity(g.arity().max(level + 1)).with_arity(level + 1);
        let coeffs: Vec<Elem> = g
            .coefficients_in(level)
            .iter()
            .map(|c| self.reduce_at(level, c))
            .collect();
        let n = coeffs.len().saturating_sub(1);
        if n == 0 || coeffs[n] != self.one(level) {
            return Err(Error::MalformedIdeal { index: level });
        }
        let mut tail = coeffs;
        tail.truncate(n);
        Ok(self.extend_unchecked(tail))
    }

    /// Appends `x_{k+1}^n + sum tail_j x_{k+1}^j` with `tail` already reduced.
    fn extend_unchecked(&self, tail: Vec<Elem>) -> Self {
        let level = self.levels();
        let n = tail.len();
        let mut out = self.clone();
        let mut lead = tail.clone();
        lead.push(self.one(level));
        out.generators
            .push(self.upoly_to_sparse(level, &lead, level + 1));
        out.degrees.push(n);
        out.dims.push(self.dim(level) * n);
        out.tails.push(tail);
        out
    }

    /// Appends a monic polynomial in the next variable (coefficients at the top level).
    pub(crate) fn extend(&self, monic: &UPoly) -> Self {
        let k = self.levels();
        debug_assert!(monic.len() >= 2 && monic.last() == Some(&self.one(k)));
        self.extend_unchecked(monic[..monic.len() - 1].to_vec())
    }

    /// Appends a generator given as a sparse polynomial.
    pub fn with_generator(&self, g: &ZptPolynomial) -> Result<Self> {
        self.push_generator(g)
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn generators(&self) -> &[ZptPolynomial] {
        &self.generators
    }

    /// Degrees `n_i` of each generator in its own variable.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn levels(&self) -> usize {
        self.generators.len()
    }

    /// Rank of the quotient ring; for a splitting ideal over `F_p`, the
    /// number of rational solutions.
    pub fn rank(&self) -> usize {
        self.dim(self.levels())
    }

    /// The ideal generated by the first `levels` generators.
    pub fn prefix(&self, levels: usize) -> Self {
        TriangularIdeal {
            modulus: self.modulus.clone(),
            generators: self.generators[..levels].to_vec(),
            degrees: self.degrees[..levels].to_vec(),
            dims: self.dims[..=levels].to_vec(),
            tails: self.tails[..levels].to_vec(),
        }
    }

    /// Same generators reduced modulo `p`.
    pub fn mod_p(&self) -> Self {
        self.reduce_modulus(&self.modulus.field())
    }

    pub fn reduce_modulus(&self, target: &PrimePowerModulus) -> Self {
        if target == &self.modulus {
            return self.clone();
        }
        let gens = self
            .generators
            .iter()
            .map(|g| g.reduce_modulus(target))
            .collect();
        Self::new(target, gens).expect("reduction preserves the triangular shape")
    }

    /// Canonical remainder of `f`; variables past the last level are kept.
    pub fn reduce(&self, f: &ZptPolynomial) -> Result<ZptPolynomial> {
        if f.modulus() != &self.modulus {
            return Err(Error::ModulusMismatch);
        }
        let k = self.levels();
        if f.arity() <= k {
            let f = f.with_arity(k);
            return Ok(self.to_sparse(k, &self.reduce_at(k, &f)));
        }
        // Group by the exponents of the extra variables and reduce each coefficient.
        let arity = f.arity();
        let mut groups: std::collections::BTreeMap<Vec<u32>, ZptPolynomial> =
            std::collections::BTreeMap::new();
        for (mon, c) in f.terms() {
            let (low, high) = mon.split_at(k);
            groups
                .entry(high.to_vec())
                .or_insert_with(|| ZptPolynomial::zero(&self.modulus, k))
                .add_term(low.to_vec(), c.clone());
        }
        let mut out = ZptPolynomial::zero(&self.modulus, arity);
        for (high, coeff) in groups {
            let r = self.to_sparse(k, &self.reduce_at(k, &coeff));
            for (low, c) in r.terms() {
                let mut mon = low.clone();
                mon.extend_from_slice(&high);
                out.add_term(mon, c.clone());
            }
        }
        Ok(out)
    }

    /// True when every level satisfies `x_i^p = x_i` in the quotient (over `F_p`),
    /// i.e. the ideal is radical with all `rank()` solutions rational.
    pub fn is_splitting(&self) -> bool {
        let field = self.mod_p();
        let k = field.levels();
        let p = field.modulus.p().clone();
        (0..k).all(|i| {
            let x = field.var(k, i);
            field.pow(k, &x, &p) == x
        })
    }

    /// Enumerates the solutions of the ideal modulo `p` by walking the levels
    /// and testing every value of each new variable. Only for small `p`.
    pub fn points_mod_p(&self) -> Vec<Vec<BigUint>> {
        let field = self.modulus.field();
        let p: u64 = num_traits::ToPrimitive::to_u64(field.p()).expect("small prime");
        let mut pts: Vec<Vec<BigUint>> = vec![Vec::new()];
        for g in &self.generators {
            let g = g.mod_p();
            let mut next = Vec::new();
            for pt in &pts {
                for v in 0..p {
                    let mut full = pt.clone();
                    full.push(BigUint::from(v));
                    if g.eval(&full).is_zero() {
                        next.push(full);
                    }
                }
            }
            pts = next;
        }
        pts
    }

    // ----- flat element arithmetic -------------------------------------------

    pub(crate) fn dim(&self, level: usize) -> usize {
        self.dims[level]
    }

    pub(crate) fn zero(&self, level: usize) -> Elem {
        vec![BigUint::zero(); self.dim(level)]
    }

    pub(crate) fn one(&self, level: usize) -> Elem {
        self.scalar(level, BigUint::one())
    }

    pub(crate) fn scalar(&self, level: usize, c: BigUint) -> Elem {
        let mut e = self.zero(level);
        e[0] = self.modulus.reduce(&c);
        e
    }

    pub(crate) fn is_zero_elem(a: &[BigUint]) -> bool {
        a.iter().all(|c| c.is_zero())
    }

    pub(crate) fn add(&self, a: &[BigUint], b: &[BigUint]) -> Elem {
        a.iter()
            .zip(b)
            .map(|(x, y)| self.modulus.add(x, y))
            .collect()
    }

    pub(crate) fn sub(&self, a: &[BigUint], b: &[BigUint]) -> Elem {
        a.iter()
            .zip(b)
            .map(|(x, y)| self.modulus.sub(x, y))
            .collect()
    }

    pub(crate) fn neg(&self, a: &[BigUint]) -> Elem {
        a.iter().map(|x| self.modulus.neg(x)).collect()
    }

    pub(crate) fn scale(&self, a: &[BigUint], c: &BigUint) -> Elem {
        a.iter().map(|x| self.modulus.mul(x, c)).collect()
    }

    pub(crate) fn mul(&self, level: usize, a: &[BigUint], b: &[BigUint]) -> Elem {
        if level == 0 {
            return vec![self.modulus.mul(&a[0], &b[0])];
        }
        let n = self.degrees[level - 1];
        let bs = self.dim(level - 1);
        let mut prod: Vec<Elem> = vec![self.zero(level - 1); 2 * n - 1];
        for i in 0..n {
            let ai = &a[i * bs..(i + 1) * bs];
            if Self::is_zero_elem(ai) {
                continue;
            }
            for j in 0..n {
                let bj = &b[j * bs..(j + 1) * bs];
                if Self::is_zero_elem(bj) {
                    continue;
                }
                let m = self.mul(level - 1, ai, bj);
                prod[i + j] = self.add(&prod[i + j], &m);
            }
        }
        self.reduce_blocks(level, prod)
    }

    /// Reduces a polynomial in `x_level` with coefficients at `level - 1`
    /// modulo `g_level` and flattens it.
    fn reduce_blocks(&self, level: usize, mut blocks: Vec<Elem>) -> Elem {
        let n = self.degrees[level - 1];
        let tail = &self.tails[level - 1];
        for d in (n..blocks.len()).rev() {
            if Self::is_zero_elem(&blocks[d]) {
                continue;
            }
            let c = std::mem::replace(&mut blocks[d], self.zero(level - 1));
            for (j, tj) in tail.iter().enumerate() {
                if Self::is_zero_elem(tj) {
                    continue;
                }
                let m = self.mul(level - 1, &c, tj);
                blocks[d - n + j] = self.sub(&blocks[d - n + j], &m);
            }
        }
        blocks.resize(n, self.zero(level - 1));
        blocks.into_iter().flatten().collect()
    }

    pub(crate) fn pow(&self, level: usize, a: &[BigUint], e: &BigUint) -> Elem {
        let mut result = self.one(level);
        for i in (0..e.bits()).rev() {
            result = self.mul(level, &result, &result);
            if e.bit(i) {
                result = self.mul(level, &result, a);
            }
        }
        result
    }

    /// The variable `x_{index+1}` as an element at `level > index`.
    pub(crate) fn var(&self, level: usize, index: usize) -> Elem {
        let x = ZptPolynomial::var(&self.modulus, level, index);
        self.reduce_at(level, &x)
    }

    /// Reduces a sparse polynomial that only involves `x_1..x_level`.
    pub(crate) fn reduce_at(&self, level: usize, f: &ZptPolynomial) -> Elem {
        if level == 0 {
            debug_assert!(f.terms().all(|(m, _)| m.iter().all(|&e| e == 0)));
            let c = f
                .terms()
                .map(|(_, c)| c.clone())
                .fold(BigUint::zero(), |a, c| self.modulus.add(&a, &c));
            return vec![c];
        }
        let idx = level - 1;
        let deg = f.degree_in(idx).unwrap_or(0) as usize;
        let mut groups: Vec<ZptPolynomial> =
            vec![ZptPolynomial::zero(&self.modulus, f.arity()); deg + 1];
        for (mon, c) in f.terms() {
            debug_assert!(mon[level..].iter().all(|&e| e == 0), "variable above level");
            let j = mon[idx] as usize;
            let mut mon = mon.clone();
            mon[idx] = 0;
            groups[j].add_term(mon, c.clone());
        }
        let blocks = groups
            .iter()
            .map(|g| self.reduce_at(level - 1, g))
            .collect();
        self.reduce_blocks(level, blocks)
    }

    /// Sparse form of an element at `level`, with arity `level`.
    pub(crate) fn to_sparse(&self, level: usize, e: &[BigUint]) -> ZptPolynomial {
        let terms = e
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(idx, c)| {
                let mut mon = vec![0u32; level];
                let mut rest = idx;
                for l in (1..=level).rev() {
                    let bs = self.dim(l - 1);
                    mon[l - 1] = (rest / bs) as u32;
                    rest %= bs;
                }
                (mon, c.clone())
            });
        ZptPolynomial::from_raw_terms(&self.modulus, level, terms)
    }

    /// Sparse form of a polynomial in `x_{level+1}` over the level-`level` quotient.
    pub(crate) fn upoly_to_sparse(&self, level: usize, f: &[Elem], arity: usize) -> ZptPolynomial {
        let mut out = ZptPolynomial::zero(&self.modulus, arity);
        for (j, c) in f.iter().enumerate() {
            for (mon, v) in self.to_sparse(level, c).terms() {
                let mut mon = mon.clone();
                mon.resize(arity, 0);
                mon[level] += j as u32;
                out.add_term(mon, v.clone());
            }
        }
        out
    }

    /// Reads `f` (arity `k+1`) as a polynomial in `x_{k+1}` over the top quotient.
    pub(crate) fn reduce_upoly(&self, f: &ZptPolynomial) -> UPoly {
        let k = self.levels();
        let f = f.with_arity(f.arity().max(k + 1));
        debug_assert!(f.max_var().is_none_or(|v| v <= k));
        let mut out: UPoly = f
            .coefficients_in(k)
            .iter()
            .map(|c| self.reduce_at(k, &c.with_arity(k + 1)))
            .collect();
        Self::trim(&mut out);
        out
    }

    // ----- polynomials over the quotient -------------------------------------

    pub(crate) fn trim(f: &mut UPoly) {
        while f.last().is_some_and(|c| Self::is_zero_elem(c)) {
            f.pop();
        }
    }

    pub(crate) fn up_sub(&self, a: &[Elem], b: &[Elem]) -> UPoly {
        let n = a.len().max(b.len());
        let lvl_zero = a
            .first()
            .or(b.first())
            .map(|e| vec![BigUint::zero(); e.len()]);
        let z = match lvl_zero {
            Some(z) => z,
            None => return Vec::new(),
        };
        let mut out: UPoly = (0..n)
            .map(|i| self.sub(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z)))
            .collect();
        Self::trim(&mut out);
        out
    }

    pub(crate) fn up_mul(&self, level: usize, a: &[Elem], b: &[Elem]) -> UPoly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![self.zero(level); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if Self::is_zero_elem(ai) {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if Self::is_zero_elem(bj) {
                    continue;
                }
                let m = self.mul(level, ai, bj);
                out[i + j] = self.add(&out[i + j], &m);
            }
        }
        Self::trim(&mut out);
        out
    }

    pub(crate) fn up_scale(&self, level: usize, a: &[Elem], c: &[BigUint]) -> UPoly {
        let mut out: UPoly = a.iter().map(|x| self.mul(level, x, c)).collect();
        Self::trim(&mut out);
        out
    }

    /// Division by `b` whose leading coefficient has inverse `lc_inv`.
    pub(crate) fn up_divrem(
        &self,
        level: usize,
        a: &[Elem],
        b: &[Elem],
        lc_inv: &[BigUint],
    ) -> (UPoly, UPoly) {
        let db = b.len() - 1;
        if a.len() < b.len() {
            return (Vec::new(), a.to_vec());
        }
        let mut rem = a.to_vec();
        let mut quo = vec![self.zero(level); a.len() - db];
        for i in (db..rem.len()).rev() {
            if Self::is_zero_elem(&rem[i]) {
                continue;
            }
            let c = self.mul(level, &rem[i], lc_inv);
            for (j, bj) in b.iter().enumerate() {
                let m = self.mul(level, &c, bj);
                rem[i - db + j] = self.sub(&rem[i - db + j], &m);
            }
            quo[i - db] = c;
        }
        rem.truncate(db);
        Self::trim(&mut rem);
        Self::trim(&mut quo);
        (quo, rem)
    }

    /// Remainder modulo a monic polynomial.
    pub(crate) fn up_rem_monic(&self, level: usize, a: &[Elem], m: &[Elem]) -> UPoly {
        let one = self.one(level);
        self.up_divrem(level, a, m, &one).1
    }

    /// `base^e mod m` for monic `m`.
    pub(crate) fn up_powmod(&self, level: usize, base: &[Elem], e: &BigUint, m: &[Elem]) -> UPoly {
        let mut result = self.up_rem_monic(level, &[self.one(level)], m);
        let base = self.up_rem_monic(level, base, m);
        for i in (0..e.bits()).rev() {
            result = self.up_rem_monic(level, &self.up_mul(level, &result, &result), m);
            if e.bit(i) {
                result = self.up_rem_monic(level, &self.up_mul(level, &result, &base), m);
            }
        }
        result
    }

    // ----- dynamic evaluation over F_p ----------------------------------------

    /// Inverse of `a` at `level` over `F_p`; `Value(None)` when `a` is zero.
    pub(crate) fn try_inverse(&self, level: usize, a: &[BigUint]) -> Outcome<Option<Elem>> {
        debug_assert!(self.modulus.is_field());
        if level == 0 {
            if a[0].is_zero() {
                return Outcome::Value(None);
            }
            let inv = self.modulus.inv(&a[0]).expect("nonzero in F_p");
            return Outcome::Value(Some(vec![inv]));
        }
        let bs = self.dim(level - 1);
        let mut apoly: UPoly = a.chunks(bs).map(|c| c.to_vec()).collect();
        Self::trim(&mut apoly);
        if apoly.is_empty() {
            return Outcome::Value(None);
        }
        let mut g = self.tails[level - 1].clone();
        g.push(self.one(level - 1));
        match self.up_xgcd(level - 1, &g, &apoly) {
            Outcome::Split(x, y) => Outcome::Split(x, y),
            Outcome::Value((gcd, t)) => {
                if gcd.len() == 1 {
                    let t = self.up_rem_monic(level - 1, &t, &g);
                    let mut blocks = t;
                    blocks.resize(self.degrees[level - 1], self.zero(level - 1));
                    Outcome::Value(Some(blocks.into_iter().flatten().collect()))
                } else {
                    let (cof, r) = self.up_divrem(level - 1, &g, &gcd, &self.one(level - 1));
                    debug_assert!(r.is_empty());
                    let (x, y) = self.split_at(level, &gcd, &cof);
                    Outcome::Split(x, y)
                }
            }
        }
    }

    /// Extended gcd of `a` (monic) and `b` over the level-`level` quotient:
    /// returns the monic gcd `g` and `t` with `t b = g (mod a)`.
    fn up_xgcd(&self, level: usize, a: &[Elem], b: &[Elem]) -> Outcome<(UPoly, UPoly)> {
        let mut r0 = a.to_vec();
        let mut r1 = b.to_vec();
        Self::trim(&mut r1);
        let mut t0: UPoly = Vec::new();
        let mut t1: UPoly = vec![self.one(level)];
        let mut last_inv = self.one(level);
        while !r1.is_empty() {
            let lc = r1.last().unwrap();
            let inv = match self.try_inverse(level, lc) {
                Outcome::Split(x, y) => return Outcome::Split(x, y),
                Outcome::Value(Some(inv)) => inv,
                Outcome::Value(None) => {
                    unreachable!("trimmed polynomial has nonzero leading coefficient")
                }
            };
            let (q, r) = self.up_divrem(level, &r0, &r1, &inv);
            let t2 = self.up_sub(&t0, &self.up_mul(level, &q, &t1));
            r0 = std::mem::replace(&mut r1, r);
            t0 = std::mem::replace(&mut t1, t2);
            last_inv = inv;
        }
        let g = self.up_scale(level, &r0, &last_inv);
        let t = self.up_scale(level, &t0, &last_inv);
        Outcome::Value((g, t))
    }

    /// Monic gcd over the top quotient (`a` monic).
    pub(crate) fn up_gcd(&self, a: &[Elem], b: &[Elem]) -> Outcome<UPoly> {
        self.up_xgcd(self.levels(), a, b).map(|(g, _)| g)
    }

    /// Replaces generator `level` by the two coprime factors `h` and `cof`.
    fn split_at(&self, level: usize, h: &[Elem], cof: &[Elem]) -> (Self, Self) {
        let build = |factor: &[Elem]| {
            let mut ideal = self.prefix(level - 1).extend(&factor.to_vec());
            for g in &self.generators[level..] {
                ideal = ideal
                    .push_generator(g)
                    .expect("upper generators stay monic after splitting");
            }
            ideal
        };
        (build(h), build(cof))
    }

    /// Makes a polynomial over the top quotient monic, splitting if its
    /// leading coefficient is a zero divisor. Returns `None` for zero.
    pub(crate) fn make_monic(&self, f: &[Elem]) -> Outcome<Option<UPoly>> {
        let mut f = f.to_vec();
        Self::trim(&mut f);
        let Some(lc) = f.last() else {
            return Outcome::Value(None);
        };
        let k = self.levels();
        match self.try_inverse(k, lc) {
            Outcome::Split(a, b) => Outcome::Split(a, b),
            Outcome::Value(Some(inv)) => Outcome::Value(Some(self.up_scale(k, &f, &inv))),
            Outcome::Value(None) => {
                unreachable!("trimmed polynomial has nonzero leading coefficient")
            }
        }
    }

    /// Inverse modulo `(I, p^t)` lifted from an inverse modulo `p` by Newton steps.
    pub(crate) fn lift_inverse(&self, level: usize, a: &[BigUint], inv_mod_p: &[BigUint]) -> Elem {
        let two = self.scalar(level, BigUint::from(2u32));
        let mut b: Elem = inv_mod_p.to_vec();
        let mut precision = 1;
        while precision < self.modulus.t() {
            let ab = self.mul(level, a, &b);
            b = self.mul(level, &b, &self.sub(&two, &ab));
            precision *= 2;
        }
        b
    }

    pub(crate) fn discriminant(&self, g: &ZptPolynomial) -> Result<ZptPolynomial> {
        let k = self.levels();
        let gp = self.reduce_upoly(g);
        if gp.len() < 2 {
            return Err(Error::Invariant(
                "discriminant needs positive degree in the last variable".into(),
            ));
        }
        let n = gp.len() - 1;
        let lc = gp[n].clone();
        let lc_inv = if lc == self.one(k) {
            lc.clone()
        } else {
            let field = self.mod_p();
            let lc_p: Elem = lc.iter().map(|c| c % self.modulus.p()).collect();
            match field.try_inverse(k, &lc_p) {
                Outcome::Value(Some(inv)) => self.lift_inverse(k, &lc, &inv),
                _ => return Err(Error::NonMonicLeading(self.to_sparse(k, &lc).to_string())),
            }
        };
        if n == 1 {
            return Ok(ZptPolynomial::one(&self.modulus, g.arity().max(k)));
        }
        let ring = LevelRing {
            ideal: self,
            level: k,
        };
        let deriv: UPoly = gp
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| self.scale(c, &self.modulus.reduce(&BigUint::from(i))))
            .collect();
        // Sylvester matrix of g (degree n) and g' (formal degree n-1).
        let size = 2 * n - 1;
        let mut syl = vec![vec![self.zero(k); size]; size];
        for r in 0..n - 1 {
            for (j, c) in gp.iter().rev().enumerate() {
                syl[r][r + j] = c.clone();
            }
        }
        for r in 0..n {
            for j in 0..n {
                let c = deriv
                    .get(n - 1 - j)
                    .cloned()
                    .unwrap_or_else(|| self.zero(k));
                syl[n - 1 + r][r + j] = c;
            }
        }
        let res = linalg::determinant(&ring, &syl);
        let mut disc = self.mul(k, &res, &lc_inv);
        if (n * (n - 1) / 2) % 2 == 1 {
            disc = self.neg(&disc);
        }
        Ok(self.to_sparse(k, &disc).with_arity(g.arity()))
    }

    /// Canonical ordering: number of levels, then generators term by term.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.levels()
            .cmp(&other.levels())
            .then_with(|| self.degrees.cmp(&other.degrees))
            .then_with(|| {
                let a: Vec<_> = self.generators.iter().map(|g| g.sort_key()).collect();
                let b: Vec<_> = other.generators.iter().map(|g| g.sort_key()).collect();
                a.cmp(&b)
            })
    }
}

impl PartialEq for TriangularIdeal {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.generators == other.generators
    }
}

impl Eq for TriangularIdeal {}

impl fmt::Display for TriangularIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            // Common arity so every generator uses the names x1, x2, ...
            write!(f, "{}", g.with_arity(self.levels()))?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for TriangularIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} mod {}", self.modulus)
    }
}

/// A quotient ring at a fixed level, as a [`CommRing`] for the matrix code.
pub(crate) struct LevelRing<'a> {
    pub ideal: &'a TriangularIdeal,
    pub level: usize,
}

impl CommRing for LevelRing<'_> {
    type Elem = Elem;

    fn zero(&self) -> Elem {
        self.ideal.zero(self.level)
    }
    fn one(&self) -> Elem {
        self.ideal.one(self.level)
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        self.ideal.add(a, b)
    }
    fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.ideal.sub(a, b)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.ideal.mul(self.level, a, b)
    }
    fn is_zero(&self, a: &Elem) -> bool {
        TriangularIdeal::is_zero_elem(a)
    }
    fn neg(&self, a: &Elem) -> Elem {
        self.ideal.neg(a)
    }
}

// ----- public operations ------------------------------------------------------

/// Inverse of `a` modulo `(I, p^t)`, or a splitting of `I` modulo `p` when `a`
/// is a zero divisor. Split halves are returned over `F_p`.
/// Fails with [`Error::ZeroElement`] when `a` vanishes on every root of `I`.
pub fn invert_or_split(a: &ZptPolynomial, ideal: &TriangularIdeal) -> Result<InvertOrSplit> {
    let k = ideal.levels();
    let a = a.with_arity(a.arity().max(k));
    if a.max_var().is_some_and(|v| v >= k) {
        return Err(Error::ArityMismatch {
            expected: k,
            got: a.arity(),
        });
    }
    let a = a.with_arity(k);
    let field = ideal.mod_p();
    let a_lift = ideal.reduce_at(k, &a);
    let a_p = field.reduce_at(k, &a.mod_p());
    match field.try_inverse(k, &a_p) {
        Outcome::Split(x, y) => Ok(Outcome::Split(x, y)),
        Outcome::Value(None) => Err(Error::ZeroElement),
        Outcome::Value(Some(inv)) => {
            let inv = ideal.lift_inverse(k, &a_lift, &inv);
            Ok(Outcome::Value(ideal.to_sparse(k, &inv)))
        }
    }
}

/// `x_{k+1}^p - x_{k+1}` reduced modulo `(I, f)` over `F_p`; `f` must have a
/// unit leading coefficient in `x_{k+1}` (a zero-divisor one splits `I`).
pub fn frobenius_section(
    ideal: &TriangularIdeal,
    f: &ZptPolynomial,
) -> Result<Outcome<ZptPolynomial>> {
    let field = ideal.mod_p();
    let k = field.levels();
    let f = f.with_arity(f.arity().max(k + 1)).mod_p();
    let fu = field.reduce_upoly(&f);
    let monic = match field.make_monic(&fu) {
        Outcome::Split(a, b) => return Ok(Outcome::Split(a, b)),
        Outcome::Value(None) => return Err(Error::NonMonicLeading("0".into())),
        Outcome::Value(Some(m)) => m,
    };
    let w = frobenius_upoly(&field, &monic);
    Ok(Outcome::Value(field.upoly_to_sparse(k, &w, k + 1)))
}

fn frobenius_upoly(field: &TriangularIdeal, monic: &[Elem]) -> UPoly {
    let k = field.levels();
    if monic.len() <= 1 {
        return Vec::new();
    }
    let y = vec![field.zero(k), field.one(k)];
    let yp = field.up_powmod(k, &y, field.modulus().p(), monic);
    let y = field.up_rem_monic(k, &y, monic);
    field.up_sub(&yp, &y)
}

/// Components of a decomposition, optionally with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingCertificate {
    pub components: Vec<TriangularIdeal>,
    pub multiplicities: Option<Vec<usize>>,
}

impl SplittingCertificate {
    /// Total number of rational solutions across components.
    pub fn solution_count(&self) -> usize {
        self.components.iter().map(|c| c.rank()).sum()
    }
}

/// Runs `step` on `start` and on every piece it splits off, collecting values.
fn for_each_piece<T>(
    start: TriangularIdeal,
    mut step: impl FnMut(&TriangularIdeal) -> Result<Outcome<T>>,
) -> Result<Vec<(TriangularIdeal, T)>> {
    let mut work = vec![start];
    let mut out = Vec::new();
    while let Some(piece) = work.pop() {
        match step(&piece)? {
            Outcome::Value(v) => out.push((piece, v)),
            Outcome::Split(a, b) => {
                work.push(b);
                work.push(a);
            }
        }
    }
    Ok(out)
}

/// Splitting triangular components of the rational radical of `(I, f)` over
/// `F_p`: every rational solution of `(I, f)` lies in exactly one component
/// and each component is radical with only rational solutions. The part of
/// the variety without rational points is discarded.
pub fn rational_radical_extend(
    ideal: &TriangularIdeal,
    f: &ZptPolynomial,
) -> Result<SplittingCertificate> {
    let field = ideal.mod_p();
    let k = field.levels();
    let f = f.with_arity(f.arity().max(k + 1)).mod_p();
    let pieces = for_each_piece(field, |piece| {
        let fu = piece.reduce_upoly(&f);
        if fu.is_empty() {
            // f vanishes on the whole fiber: every value of x_{k+1} is a root.
            let p = num_traits::ToPrimitive::to_usize(piece.modulus().p()).ok_or_else(|| {
                Error::Invariant("polynomial vanishes identically on a fiber".into())
            })?;
            let mut all = vec![piece.zero(k); p + 1];
            all[1] = piece.neg(&piece.one(k));
            all[p] = piece.one(k);
            return Ok(Outcome::Value(Some(all)));
        }
        let monic = match piece.make_monic(&fu) {
            Outcome::Split(a, b) => return Ok(Outcome::Split(a, b)),
            Outcome::Value(m) => m.expect("nonzero"),
        };
        if monic.len() == 1 {
            return Ok(Outcome::Value(None));
        }
        let w = frobenius_upoly(piece, &monic);
        Ok(piece.up_gcd(&monic, &w).map(|g| (g.len() > 1).then_some(g)))
    })?;
    let mut components: Vec<TriangularIdeal> = pieces
        .into_iter()
        .filter_map(|(piece, h)| h.map(|h| piece.extend(&h)))
        .collect();
    if components.is_empty() {
        return Err(Error::EmptyVariety);
    }
    components.sort_by(|a, b| a.canonical_cmp(b));
    Ok(SplittingCertificate {
        components,
        multiplicities: None,
    })
}

/// One member `(B_i)` of the leading-coefficient chain, described by the
/// base points it contains: those extending to more than `degree` solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLink {
    pub degree: usize,
    pub ideal: Vec<TriangularIdeal>,
}

/// `(B_0) ⊆ (B_1) ⊆ ... ⊆ (B_v) = (1)` over the base variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadingCoeffChain {
    pub links: Vec<ChainLink>,
}

/// Builds the chain from a radical, completely splitting basis given by its
/// components. Components with equal bases have their fibers added.
pub fn leading_coeff_chain(basis: &SplittingCertificate) -> LeadingCoeffChain {
    let mut fibers: Vec<(TriangularIdeal, usize)> = Vec::new();
    for c in &basis.components {
        let k = c.levels() - 1;
        let base = c.prefix(k);
        let ext = c.degrees()[k];
        match fibers.iter_mut().find(|(b, _)| *b == base) {
            Some((_, e)) => *e += ext,
            None => fibers.push((base, ext)),
        }
    }
    let mut degrees: Vec<usize> = fibers.iter().map(|(_, e)| *e).collect();
    degrees.sort_unstable();
    degrees.dedup();
    degrees.insert(0, 0);
    let links = degrees
        .iter()
        .map(|&d| {
            let mut ideal: Vec<TriangularIdeal> = fibers
                .iter()
                .filter(|(_, e)| *e > d)
                .map(|(b, _)| b.clone())
                .collect();
            ideal.sort_by(|a, b| a.canonical_cmp(b));
            ChainLink { degree: d, ideal }
        })
        .collect();
    LeadingCoeffChain { links }
}

/// Points of the union `a` that are not solutions of any ideal in `b`,
/// as splitting triangular pieces. All inputs share the same base variables.
pub fn colon(a: &[TriangularIdeal], b: &[TriangularIdeal]) -> Result<Vec<TriangularIdeal>> {
    let mut current: Vec<TriangularIdeal> = a.iter().map(|i| i.mod_p()).collect();
    for q in b {
        let q = q.mod_p();
        let mut next = Vec::new();
        for piece in current {
            next.extend(remove_solutions(piece, &q)?);
        }
        current = next;
    }
    current.sort_by(|x, y| x.canonical_cmp(y));
    Ok(current)
}

fn remove_solutions(piece: TriangularIdeal, q: &TriangularIdeal) -> Result<Vec<TriangularIdeal>> {
    let k = piece.levels();
    if q.levels() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            got: q.levels(),
        });
    }
    let mut work = vec![(piece, 0usize)];
    let mut keep = Vec::new();
    while let Some((piece, i)) = work.pop() {
        if i == k {
            continue; // every generator of q vanishes here
        }
        let e = piece.reduce_at(k, &q.generators()[i].with_arity(k));
        match piece.try_inverse(k, &e) {
            Outcome::Value(Some(_)) => keep.push(piece),
            Outcome::Value(None) => work.push((piece, i + 1)),
            Outcome::Split(x, y) => {
                work.push((x, i));
                work.push((y, i));
            }
        }
    }
    Ok(keep)
}

/// Base points grouped by how many solutions lie above them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionClass {
    pub extensions: usize,
    pub base: Vec<TriangularIdeal>,
}

/// Colon ideals `(B_i) : (B_{i+1})` of consecutive chain members.
pub fn colon_decompose(chain: &LeadingCoeffChain) -> Result<Vec<ExtensionClass>> {
    chain
        .links
        .windows(2)
        .map(|w| {
            Ok(ExtensionClass {
                extensions: w[1].degree,
                base: colon(&w[0].ideal, &w[1].ideal)?,
            })
        })
        .collect()
}

/// Refines a splitting component of `V(J, f)` into pieces on which every
/// root of `f` in `x_{k+1}` has the same multiplicity, found as the first
/// nonvanishing Hasse derivative.
pub fn multiplicity_by_derivatives(
    component: &TriangularIdeal,
    f: &ZptPolynomial,
) -> Result<Vec<(TriangularIdeal, usize)>> {
    let field = component.mod_p();
    let top = field.levels();
    if top == 0 {
        return Err(Error::Invariant(
            "component needs at least one level".into(),
        ));
    }
    let var = top - 1;
    let f = f.with_arity(f.arity().max(top)).mod_p();
    if f.max_var().is_some_and(|v| v >= top) {
        return Err(Error::ArityMismatch {
            expected: top,
            got: f.arity(),
        });
    }
    let f = f.with_arity(top);
    if !TriangularIdeal::is_zero_elem(&field.reduce_at(top, &f)) {
        return Err(Error::Invariant(
            "polynomial does not vanish on the component".into(),
        ));
    }
    let max_order = f.degree_in(var).unwrap_or(0);
    let mut work = vec![(field, 1u32)];
    let mut out = Vec::new();
    while let Some((piece, j)) = work.pop() {
        if j > max_order {
            return Err(Error::Invariant(
                "polynomial vanishes identically on a fiber".into(),
            ));
        }
        let d = piece.reduce_at(top, &f.hasse_derivative(var, j));
        match piece.try_inverse(top, &d) {
            Outcome::Value(Some(_)) => out.push((piece, j as usize)),
            Outcome::Value(None) => work.push((piece, j + 1)),
            Outcome::Split(a, b) => {
                work.push((b, j));
                work.push((a, j));
            }
        }
    }
    out.sort_by(|(a, ma), (b, mb)| mb.cmp(ma).then_with(|| a.canonical_cmp(b)));
    Ok(out)
}

/// Decomposition of `(J, f)` over `F_p` into pairwise coprime splitting
/// components with multiplicities; the root-free part is dropped.
pub fn decompose_by_multiplicity(
    ideal: &TriangularIdeal,
    f: &ZptPolynomial,
) -> Result<SplittingCertificate> {
    let radical = rational_radical_extend(ideal, f)?;
    let mut parts = Vec::new();
    for c in &radical.components {
        parts.extend(multiplicity_by_derivatives(c, f)?);
    }
    parts.sort_by(|(a, ma), (b, mb)| mb.cmp(ma).then_with(|| a.canonical_cmp(b)));
    let (components, mults) = parts.into_iter().unzip();
    Ok(SplittingCertificate {
        components,
        multiplicities: Some(mults),
    })
}
