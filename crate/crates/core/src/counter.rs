//! Counting roots of `f` in `Z/(p^t)`.
//!
//! Every root `x` of `f` modulo `p^t` reduces to a root modulo `p`, and the
//! roots are grouped by their `p`-adic digits. Simple roots modulo `p` lift
//! uniquely. Multiple roots are followed down an ideal tree: a node at
//! level `k` is a triangular ideal whose points are the Teichmüller digit
//! tuples `(x_1, ..., x_k)` of the residue classes `x_1 + p x_2 + ... +
//! p^(k-1) x_k (mod p^k)` still in play. Writing
//! `f(x_1 + ... + p^(k-1) x_k + p^k y) = p^s g(y)` over such a node decides,
//! class by class, whether the class is exhausted, contributes a fixed power
//! of `p` per simple root of `g`, or descends one more digit.
//!
//! Small primes use a direct digit recursion on explicit roots instead.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fppoly::{self, FpPolynomial, DEFAULT_ENUMERATION_LIMIT};
use crate::linalg::{self, CommRing};
use crate::modarith::PrimePowerModulus;
use crate::teichmuller::{teich_ideal, teich_poly};
use crate::triangular::{self, Elem, Outcome, TriangularIdeal, UPoly};
use crate::zptpoly::ZptPolynomial;

/// Primes up to `max(deg f, t, SMALL_PRIME_FLOOR)` use the digit recursion.
pub const SMALL_PRIME_FLOOR: u64 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Fast paths for `t <= 3`, then the tree or digit recursion by prime size.
    #[default]
    Auto,
    Tree,
    SmallPrime,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Auto => "auto",
            Engine::Tree => "tree",
            Engine::SmallPrime => "smallp",
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CountOptions {
    pub engine: Engine,
    /// Record one entry per evaluated tree piece.
    pub trace: bool,
}

/// Which routine produced the count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Trivial,
    FieldRoots,
    LiftT2,
    LiftT3,
    Tree,
    SmallPrime,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trivial => "trivial",
            Method::FieldRoots => "t1",
            Method::LiftT2 => "t2",
            Method::LiftT3 => "t3",
            Method::Tree => "tree",
            Method::SmallPrime => "smallp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafContribution {
    pub descriptor: String,
    pub count: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PieceStatus {
    TerminalCount(BigUint),
    TerminalEmpty,
    /// Some classes counted directly, the rest passed to children.
    Expanded {
        count: BigUint,
        children: usize,
    },
}

/// One evaluated piece of a tree node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub node: usize,
    pub parent: Option<usize>,
    pub level: usize,
    pub ideal: String,
    pub degrees: Vec<usize>,
    pub s: u32,
    pub status: PieceStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountStats {
    /// Tree nodes created, root included. Zero outside the tree engine.
    pub nodes: usize,
    pub max_level: usize,
    /// Zero-divisor splittings met while evaluating pieces.
    pub splits: usize,
    /// `v` with `f = p^v h`, `p` not dividing `h` (capped at `t`).
    pub content_valuation: u32,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub total: BigUint,
    pub method: Method,
    pub per_leaf: Vec<LeafContribution>,
    pub stats: CountStats,
    pub trace: Vec<TraceRecord>,
}

/// `N_t(f)` for `f` given by integer coefficients, constant term first.
pub fn count_roots(f: &[BigInt], modulus: &PrimePowerModulus) -> Result<CountResult> {
    count_roots_with(f, modulus, CountOptions::default())
}

pub fn count_roots_with(
    f: &[BigInt],
    modulus: &PrimePowerModulus,
    options: CountOptions,
) -> Result<CountResult> {
    let start = Instant::now();
    let coeffs: Vec<BigUint> = f.iter().map(|c| modulus.reduce_int(c)).collect();
    let v = coeffs
        .iter()
        .map(|c| modulus.val(c))
        .min()
        .unwrap_or(modulus.t());
    let t = modulus.t();
    let mut result = if v >= t {
        CountResult {
            total: modulus.q().clone(),
            method: Method::Trivial,
            per_leaf: vec![LeafContribution {
                descriptor: "f vanishes identically".into(),
                count: modulus.q().clone(),
            }],
            stats: CountStats::default(),
            trace: Vec::new(),
        }
    } else {
        // f = p^v h: the roots of h modulo p^(t-v), each standing for p^v residues.
        let reduced = modulus.with_exponent(t - v);
        let pv = modulus.p_pow(v);
        let h: Vec<BigUint> = coeffs.iter().map(|c| reduced.reduce(&(c / &pv))).collect();
        let mut r = dispatch(&h, &reduced, options)?;
        if v > 0 {
            r.total *= &pv;
            for leaf in &mut r.per_leaf {
                leaf.count *= &pv;
            }
        }
        r
    };
    result.stats.content_valuation = v;
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

fn degree(h: &[BigUint]) -> usize {
    h.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

fn dispatch(
    h: &[BigUint],
    modulus: &PrimePowerModulus,
    options: CountOptions,
) -> Result<CountResult> {
    let t = modulus.t();
    match options.engine {
        Engine::Tree => tree_count(h, modulus, options.trace),
        Engine::SmallPrime => count_small_p_raw(h, modulus),
        Engine::Auto => {
            let simple =
                |total: BigUint, method: Method, leaves: Vec<LeafContribution>| CountResult {
                    total,
                    method,
                    per_leaf: leaves,
                    stats: CountStats::default(),
                    trace: Vec::new(),
                };
            match t {
                1 => {
                    let n = count_t1_raw(h, modulus);
                    Ok(simple(
                        n.clone(),
                        Method::FieldRoots,
                        vec![LeafContribution {
                            descriptor: "roots mod p".into(),
                            count: n,
                        }],
                    ))
                }
                2 | 3 => {
                    let leaves = lift_low_exponent(h, modulus)?;
                    let total = leaves.iter().map(|l| &l.count).sum();
                    let method = if t == 2 {
                        Method::LiftT2
                    } else {
                        Method::LiftT3
                    };
                    Ok(simple(total, method, leaves))
                }
                _ => {
                    let bound = (degree(h) as u64).max(t as u64).max(SMALL_PRIME_FLOOR);
                    if *modulus.p() > BigUint::from(bound) {
                        tree_count(h, modulus, options.trace)
                    } else {
                        count_small_p_raw(h, modulus)
                    }
                }
            }
        }
    }
}

fn fp_poly(h: &[BigUint], field: &PrimePowerModulus) -> FpPolynomial {
    FpPolynomial::new(field, h.iter().map(|c| BigInt::from(c % field.p())))
}

fn count_t1_raw(h: &[BigUint], modulus: &PrimePowerModulus) -> BigUint {
    let fbar = fp_poly(h, &modulus.field());
    if fbar.is_zero() {
        return modulus.p().clone();
    }
    BigUint::from(fppoly::split_part(&fbar).deg())
}

/// `N_1(f) = deg gcd(x^p - x, f mod p)`; every residue when `p | f`.
pub fn count_t1(f: &[BigInt], p: &BigUint) -> Result<BigUint> {
    let field = PrimePowerModulus::new(p.clone(), 1)?;
    let h: Vec<BigUint> = f.iter().map(|c| field.reduce_int(c)).collect();
    Ok(count_t1_raw(&h, &field))
}

/// `N_2(f)`.
pub fn count_t2(f: &[BigInt], p: &BigUint) -> Result<BigUint> {
    count_roots(f, &PrimePowerModulus::new(p.clone(), 2)?).map(|r| r.total)
}

/// `N_3(f)` by the closed treatment of the third digit.
pub fn count_t3(f: &[BigInt], p: &BigUint) -> Result<BigUint> {
    count_roots(f, &PrimePowerModulus::new(p.clone(), 3)?).map(|r| r.total)
}

/// `N_t` for `t in {2, 3}` and `p` not dividing `f`. Simple roots lift
/// uniquely. For a product `m` of multiple roots and `x = w(a) + p y`,
/// `f(x) = f(w(a)) + p y f'(w(a)) + p^2 y^2 f^[2](w(a))` where the first two
/// terms are divisible by `p`; the class of `a` contributes `p^(t-1)` if the
/// whole expression vanishes, nothing if the constant term has valuation 1,
/// and for `t = 3`, `s = 2` the `p`-multiple of the number of roots of the
/// reduced quadratic in `y`.
fn lift_low_exponent(h: &[BigUint], modulus: &PrimePowerModulus) -> Result<Vec<LeafContribution>> {
    let t = modulus.t();
    let field = modulus.field();
    let p = modulus.p();
    let fbar = fp_poly(h, &field);
    let mtf = fppoly::multiplicity_type_factor(&fbar);
    let mut leaves = Vec::new();
    let simple = mtf.roots_of_multiplicity(1);
    if simple > 0 {
        leaves.push(LeafContribution {
            descriptor: "simple roots mod p".into(),
            count: BigUint::from(simple),
        });
    }
    let mut stack: Vec<FpPolynomial> = mtf
        .parts
        .iter()
        .filter(|(_, i)| *i >= 2)
        .map(|(m, _)| m.clone())
        .rev()
        .collect();
    while let Some(m) = stack.pop() {
        let lifted = TriangularIdeal::new(modulus, vec![teich_poly(&m, modulus)?])?;
        let section = horner_section(&lifted, h);
        let s = section_valuation(&lifted, &section);
        let push = |leaves: &mut Vec<LeafContribution>, count: BigUint| {
            if !count.is_zero() {
                leaves.push(LeafContribution {
                    descriptor: format!("multiple roots of {m}"),
                    count,
                });
            }
        };
        if s >= t {
            push(&mut leaves, modulus.p_pow(t - 1) * m.deg());
            continue;
        }
        let fld = lifted.mod_p();
        let g = reduced_section(&lifted, &fld, &section, s);
        let g = match fld.make_monic(&g) {
            Outcome::Split(a, b) => {
                stack.push(univariate_of(&b));
                stack.push(univariate_of(&a));
                continue;
            }
            Outcome::Value(g) => g.expect("nonzero section"),
        };
        let deg = g.len() - 1;
        match (s, deg) {
            (_, 0) => {}
            (2, 1) => push(&mut leaves, p * m.deg()),
            (2, 2) => {
                let gs = fld.upoly_to_sparse(1, &g, 2);
                push(&mut leaves, p * count_system_t3(&m, &gs)?);
            }
            _ => {
                return Err(Error::Invariant(format!(
                    "section of degree {deg} with valuation {s} over multiple roots"
                )))
            }
        }
    }
    Ok(leaves)
}

fn univariate_of(ideal: &TriangularIdeal) -> FpPolynomial {
    let g = &ideal.generators()[0];
    let field = ideal.modulus();
    let coeffs = g.coefficients_in(0);
    FpPolynomial::new(field, coeffs.iter().map(|c| BigInt::from(c.coeff(&[0]))))
}

struct FpScalars<'a>(&'a PrimePowerModulus);

impl CommRing for FpScalars<'_> {
    type Elem = BigUint;
    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn one(&self) -> BigUint {
        BigUint::one()
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        self.0.add(a, b)
    }
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        self.0.sub(a, b)
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        self.0.mul(a, b)
    }
    fn is_zero(&self, a: &BigUint) -> bool {
        a.is_zero()
    }
}

struct FpPolys<'a>(&'a PrimePowerModulus);

impl CommRing for FpPolys<'_> {
    type Elem = FpPolynomial;
    fn zero(&self) -> FpPolynomial {
        FpPolynomial::zero(self.0)
    }
    fn one(&self) -> FpPolynomial {
        FpPolynomial::one(self.0)
    }
    fn add(&self, a: &FpPolynomial, b: &FpPolynomial) -> FpPolynomial {
        a.add(b)
    }
    fn sub(&self, a: &FpPolynomial, b: &FpPolynomial) -> FpPolynomial {
        a.sub(b)
    }
    fn mul(&self, a: &FpPolynomial, b: &FpPolynomial) -> FpPolynomial {
        a.mul(b)
    }
    fn is_zero(&self, a: &FpPolynomial) -> bool {
        a.is_zero()
    }
}

/// Number of `(x_1, x_2) in F_p^2` with `m(x_1) = 0` and `g(x_1, x_2) = 0`,
/// where `m` has distinct roots in `F_p` and `g` is monic of degree 1 or 2 in
/// `x_2`. With `D(x_2) = det g(M, x_2)` for the companion matrix `M` of `m`,
/// `E` the number of roots of `D` in `F_p` with multiplicity and `X` the
/// discriminant of `g` in `x_2`, the count is `E - deg gcd(m, X)` when that
/// gcd is `1` or `m`; otherwise `m` is split by it.
pub fn count_system_t3(m: &FpPolynomial, g: &ZptPolynomial) -> Result<usize> {
    let field = m.field().clone();
    if !m.is_monic() || m.deg() == 0 {
        return Err(Error::NonMonicLeading(m.to_string()));
    }
    let g = g.with_arity(g.arity().max(2)).reduce_modulus(&field);
    if g.arity() != 2 {
        return Err(Error::ArityMismatch {
            expected: 2,
            got: g.arity(),
        });
    }
    let coeffs: Vec<FpPolynomial> = g
        .coefficients_in(1)
        .iter()
        .map(|c| {
            let u = FpPolynomial::new(
                &field,
                c.coefficients_in(0)
                    .iter()
                    .map(|d| BigInt::from(d.coeff(&[0, 0]))),
            );
            u.rem(m)
        })
        .collect();
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 || deg > 2 || !coeffs[deg].is_one() {
        return Err(Error::NonMonicLeading(g.to_string()));
    }
    let n = m.deg();
    if deg == 1 {
        return Ok(n);
    }

    // D(x_2) = det(sum_j c_j(M) x_2^j)
    let scalars = FpScalars(&field);
    let companion: Vec<Vec<BigUint>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    if c == n - 1 {
                        field.neg(&m.coeff(r))
                    } else if r == c + 1 {
                        BigUint::one()
                    } else {
                        BigUint::zero()
                    }
                })
                .collect()
        })
        .collect();
    let at_matrix: Vec<Vec<Vec<BigUint>>> = coeffs
        .iter()
        .map(|c| {
            let mut acc = vec![vec![BigUint::zero(); n]; n];
            for i in (0..=c.deg()).rev() {
                acc = linalg::mat_mul(&scalars, &acc, &companion);
                for (d, row) in acc.iter_mut().enumerate() {
                    row[d] = field.add(&row[d], &c.coeff(i));
                }
            }
            acc
        })
        .collect();
    let polys = FpPolys(&field);
    let entries: Vec<Vec<FpPolynomial>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    FpPolynomial::new(
                        &field,
                        at_matrix.iter().map(|mat| BigInt::from(mat[r][c].clone())),
                    )
                })
                .collect()
        })
        .collect();
    let mut d = linalg::determinant(&polys, &entries);

    let mut e = 0usize;
    loop {
        let roots = fppoly::split_part(&d);
        if roots.deg() == 0 {
            break;
        }
        e += roots.deg();
        d = d.exact_div(&roots);
    }

    let four = FpPolynomial::new(&field, [4]);
    let disc = coeffs[1].mul(&coeffs[1]).sub(&four.mul(&coeffs[0])).rem(m);
    let common = fppoly::gcd(m, &disc);
    if common.deg() == 0 {
        Ok(e)
    } else if common.deg() == n {
        Ok(e - n)
    } else {
        let rest = m.exact_div(&common);
        Ok(count_system_t3(&common, &g)? + count_system_t3(&rest, &g)?)
    }
}

// ----- ideal tree ----------------------------------------------------------------

/// A node of the ideal tree: the classes modulo `p^level` given by the
/// points of its pieces, each a Teichmüller-lifted splitting triangular ideal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealTreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub level: usize,
    /// Multiplicity of the digit that created this node (0 at the root).
    pub multiplicity: usize,
    pub pieces: Vec<TriangularIdeal>,
}

/// Outcome of expanding one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeExpansion {
    /// Roots accounted for at this node.
    pub count: BigUint,
    pub leaves: Vec<LeafContribution>,
    /// Child groups `(multiplicity, pieces)`, highest multiplicity first.
    pub children: Vec<(usize, Vec<TriangularIdeal>)>,
    pub records: Vec<TraceRecord>,
    pub splits: usize,
}

/// `f(x_1 + p x_2 + ... + p^(k-1) x_k + p^k y)` as a polynomial in `y` over
/// the quotient by `ideal`, dropping powers of `y` whose coefficient is
/// divisible by `p^t`.
fn horner_section(ideal: &TriangularIdeal, f: &[BigUint]) -> UPoly {
    let m = ideal.modulus();
    let k = ideal.levels();
    let t = m.t() as usize;
    let top = (t - 1) / k;
    let mut x = ideal.zero(k);
    for i in 0..k.min(t) {
        let v = ideal.scale(&ideal.var(k, i), &m.p_pow(i as u32));
        x = ideal.add(&x, &v);
    }
    let pk = m.reduce(&m.p_pow(k as u32));
    let mut acc: UPoly = vec![ideal.zero(k); top + 1];
    for c in f.iter().rev() {
        let mut next: UPoly = vec![ideal.zero(k); top + 1];
        for j in 0..=top {
            if !TriangularIdeal::is_zero_elem(&acc[j]) {
                next[j] = ideal.mul(k, &acc[j], &x);
            }
            if j > 0 && !TriangularIdeal::is_zero_elem(&acc[j - 1]) {
                let shifted = ideal.scale(&acc[j - 1], &pk);
                next[j] = ideal.add(&next[j], &shifted);
            }
        }
        next[0][0] = m.add(&next[0][0], c);
        acc = next;
    }
    acc
}

fn section_valuation(ideal: &TriangularIdeal, section: &[Elem]) -> u32 {
    let m = ideal.modulus();
    section
        .iter()
        .flatten()
        .map(|c| m.val(c))
        .min()
        .unwrap_or(m.t())
}

/// `(section / p^s) mod p`, trimmed.
fn reduced_section(
    ideal: &TriangularIdeal,
    field: &TriangularIdeal,
    section: &[Elem],
    s: u32,
) -> UPoly {
    let ps = ideal.modulus().p_pow(s);
    let p = field.modulus().p();
    let mut g: UPoly = section
        .iter()
        .map(|e| e.iter().map(|c| (c / &ps) % p).collect())
        .collect();
    TriangularIdeal::trim(&mut g);
    g
}

fn rational_root_count(field: &TriangularIdeal, g: &ZptPolynomial) -> Result<usize> {
    match triangular::rational_radical_extend(field, g) {
        Ok(cert) => Ok(cert.solution_count()),
        Err(Error::EmptyVariety) => Ok(0),
        Err(e) => Err(e),
    }
}

/// Evaluates every piece of `node` against `f` (coefficients mod `p^t`,
/// `p` not dividing `f`).
pub fn expand_node(
    node: &IdealTreeNode,
    f: &[BigUint],
    modulus: &PrimePowerModulus,
) -> Result<NodeExpansion> {
    let t = modulus.t();
    let k = node.level;
    if k == 0 || k >= t as usize {
        return Err(Error::Invariant(format!(
            "cannot expand a node at level {k}"
        )));
    }
    let mut out = NodeExpansion {
        count: BigUint::zero(),
        leaves: Vec::new(),
        children: Vec::new(),
        records: Vec::new(),
        splits: 0,
    };
    let mut groups: BTreeMap<usize, Vec<TriangularIdeal>> = BTreeMap::new();
    let mut work: Vec<TriangularIdeal> = node.pieces.iter().rev().cloned().collect();
    let lift = |piece: &TriangularIdeal| teich_ideal(piece, modulus);

    while let Some(piece) = work.pop() {
        if piece.levels() != k {
            return Err(Error::Invariant(
                "piece does not match the node level".into(),
            ));
        }
        let section = horner_section(&piece, f);
        let s = section_valuation(&piece, &section);
        if s < k as u32 {
            return Err(Error::Invariant(format!("valuation {s} below level {k}")));
        }
        let rank = BigUint::from(piece.rank());
        let mut record = TraceRecord {
            node: node.id,
            parent: node.parent,
            level: k,
            ideal: piece.to_string(),
            degrees: piece.degrees().to_vec(),
            s,
            status: PieceStatus::TerminalEmpty,
        };
        let leaf = |out: &mut NodeExpansion, record: &mut TraceRecord, count: BigUint| {
            if count.is_zero() {
                record.status = PieceStatus::TerminalEmpty;
            } else {
                out.count += &count;
                out.leaves.push(LeafContribution {
                    descriptor: format!("level {k} {}", record.ideal),
                    count: count.clone(),
                });
                record.status = PieceStatus::TerminalCount(count);
            }
        };
        if s >= t {
            leaf(&mut out, &mut record, rank * modulus.p_pow(t - k as u32));
            out.records.push(record);
            continue;
        }
        let field = piece.mod_p();
        let g = reduced_section(&piece, &field, &section, s);
        let g = match field.make_monic(&g) {
            Outcome::Split(a, b) => {
                out.splits += 1;
                work.push(lift(&b)?);
                work.push(lift(&a)?);
                continue;
            }
            Outcome::Value(g) => g.expect("section is nonzero modulo p"),
        };
        if g.len() == 1 {
            out.records.push(record);
            continue;
        }
        let gs = field.upoly_to_sparse(k, &g, k + 1);
        if s == t - 1 {
            // Only the first digit of y matters.
            let roots = rational_root_count(&field, &gs)?;
            leaf(
                &mut out,
                &mut record,
                BigUint::from(roots) * modulus.p_pow(t - 1 - k as u32),
            );
            out.records.push(record);
            continue;
        }
        // Each simple root of g lifts to p^(s-k) values of y mod p^(t-k).
        let simple_mult = modulus.p_pow(s - k as u32);
        if g.len() == 2 {
            leaf(&mut out, &mut record, rank * simple_mult);
            out.records.push(record);
            continue;
        }
        let disc = field.discriminant(&gs)?;
        let disc = field.reduce_at(k, &disc.with_arity(k));
        match field.try_inverse(k, &disc) {
            Outcome::Split(a, b) => {
                out.splits += 1;
                work.push(lift(&b)?);
                work.push(lift(&a)?);
                continue;
            }
            Outcome::Value(Some(_)) => {
                let roots = rational_root_count(&field, &gs)?;
                leaf(&mut out, &mut record, BigUint::from(roots) * simple_mult);
                out.records.push(record);
                continue;
            }
            Outcome::Value(None) => {}
        }
        let parts = match triangular::decompose_by_multiplicity(&field, &gs) {
            Ok(cert) => cert,
            Err(Error::EmptyVariety) => {
                out.records.push(record);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut here = BigUint::zero();
        let mut children = 0;
        let mults = parts
            .multiplicities
            .expect("decomposition carries multiplicities");
        for (component, mu) in parts.components.iter().zip(mults) {
            if mu == 1 {
                here += BigUint::from(component.rank()) * &simple_mult;
            } else {
                groups.entry(mu).or_default().push(lift(component)?);
                children += 1;
            }
        }
        if !here.is_zero() {
            out.count += &here;
            out.leaves.push(LeafContribution {
                descriptor: format!("level {k} {} simple", record.ideal),
                count: here.clone(),
            });
        }
        record.status = PieceStatus::Expanded {
            count: here,
            children,
        };
        out.records.push(record);
    }
    out.children = groups.into_iter().rev().collect();
    for (_, pieces) in &mut out.children {
        pieces.sort_by(|a, b| a.canonical_cmp(b));
    }
    Ok(out)
}

fn tree_count(h: &[BigUint], modulus: &PrimePowerModulus, trace: bool) -> Result<CountResult> {
    let t = modulus.t();
    let field = modulus.field();
    let fbar = fp_poly(h, &field);
    let mtf = fppoly::multiplicity_type_factor(&fbar);
    let mut total = BigUint::zero();
    let mut per_leaf = Vec::new();
    let mut stats = CountStats {
        nodes: 1,
        ..CountStats::default()
    };
    let mut records = Vec::new();

    let multiple: Vec<&FpPolynomial> = mtf
        .parts
        .iter()
        .filter(|(_, i)| *i >= 2)
        .map(|(m, _)| m)
        .collect();
    let simple = if t == 1 {
        mtf.parts.iter().map(|(m, _)| m.deg()).sum()
    } else {
        mtf.roots_of_multiplicity(1)
    };
    if simple > 0 {
        total += simple;
        per_leaf.push(LeafContribution {
            descriptor: "level 0 simple roots".into(),
            count: BigUint::from(simple),
        });
    }
    if t == 1 || multiple.is_empty() {
        return Ok(CountResult {
            total,
            method: Method::Tree,
            per_leaf,
            stats,
            trace: records,
        });
    }

    let m = multiple
        .iter()
        .fold(FpPolynomial::one(&field), |acc, m| acc.mul(m));
    let first = TriangularIdeal::new(modulus, vec![teich_poly(&m, modulus)?])?;
    let mut queue = vec![IdealTreeNode {
        id: 1,
        parent: Some(0),
        level: 1,
        multiplicity: 2,
        pieces: vec![first],
    }];
    let mut next_id = 2;
    // Depth-first: children are pushed in reverse so the highest multiplicity runs first.
    while let Some(node) = queue.pop() {
        stats.nodes += 1;
        stats.max_level = stats.max_level.max(node.level);
        let exp = expand_node(&node, h, modulus)?;
        stats.splits += exp.splits;
        total += &exp.count;
        per_leaf.extend(exp.leaves);
        if trace {
            records.extend(exp.records);
        }
        let mut children: Vec<IdealTreeNode> = exp
            .children
            .into_iter()
            .map(|(mu, pieces)| {
                let child = IdealTreeNode {
                    id: next_id,
                    parent: Some(node.id),
                    level: node.level + 1,
                    multiplicity: mu,
                    pieces,
                };
                next_id += 1;
                child
            })
            .collect();
        children.reverse();
        queue.extend(children);
    }
    Ok(CountResult {
        total,
        method: Method::Tree,
        per_leaf,
        stats,
        trace: records,
    })
}

// ----- small primes --------------------------------------------------------------

/// Digit recursion on explicit roots modulo `p`; same contract as
/// [`count_roots`]. The prime must admit exhaustive root search.
pub fn count_small_p(f: &[BigInt], modulus: &PrimePowerModulus) -> Result<CountResult> {
    count_roots_with(
        f,
        modulus,
        CountOptions {
            engine: Engine::SmallPrime,
            trace: false,
        },
    )
}

fn count_small_p_raw(h: &[BigUint], modulus: &PrimePowerModulus) -> Result<CountResult> {
    let mut per_leaf = Vec::new();
    let total = small_rec(h, modulus, &BigUint::zero(), 0, &mut per_leaf)?;
    Ok(CountResult {
        total,
        method: Method::SmallPrime,
        per_leaf,
        stats: CountStats::default(),
        trace: Vec::new(),
    })
}

/// Coefficients of `f(r + p y)` modulo `p^t`.
fn shift_scale(f: &[BigUint], r: &BigUint, modulus: &PrimePowerModulus) -> Vec<BigUint> {
    let mut shifted = f.to_vec();
    // Taylor shift by repeated synthetic division.
    let n = shifted.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let add = modulus.mul(&shifted[j + 1], r);
            shifted[j] = modulus.add(&shifted[j], &add);
        }
    }
    let p = modulus.p();
    let mut pj = BigUint::one();
    for c in &mut shifted {
        *c = modulus.mul(c, &pj);
        pj = modulus.reduce(&(pj * p));
    }
    shifted
}

/// Roots of `h` (not divisible by `p`) modulo `p^t` congruent to `prefix`
/// modulo `p^depth`, counted through `h(prefix + p^depth y)` already
/// substituted by the caller.
fn small_rec(
    h: &[BigUint],
    modulus: &PrimePowerModulus,
    prefix: &BigUint,
    depth: u32,
    leaves: &mut Vec<LeafContribution>,
) -> Result<BigUint> {
    let t = modulus.t();
    let p = modulus.p();
    let fbar = fp_poly(h, &modulus.field());
    let roots = fppoly::enumerate_linear_roots(&fbar, DEFAULT_ENUMERATION_LIMIT)?;
    let deriv = fbar.derivative();
    let step = num_traits::pow(p.clone(), depth as usize);
    let mut total = BigUint::zero();
    for r in roots {
        let class = prefix + &step * &r;
        let descriptor = || format!("x = {class} mod {p}^{}", depth + 1);
        if t == 1 || !deriv.eval(&r).is_zero() {
            total += 1u32;
            leaves.push(LeafContribution {
                descriptor: descriptor(),
                count: BigUint::one(),
            });
            continue;
        }
        let g = shift_scale(h, &r, modulus);
        let s = g.iter().map(|c| modulus.val(c)).min().unwrap_or(t);
        if s >= t {
            let c = modulus.p_pow(t - 1);
            total += &c;
            leaves.push(LeafContribution {
                descriptor: descriptor(),
                count: c,
            });
            continue;
        }
        // y ranges mod p^(t-1) and only its class mod p^(t-s) matters.
        let reduced = modulus.with_exponent(t - s);
        let ps = modulus.p_pow(s);
        let g: Vec<BigUint> = g.iter().map(|c| reduced.reduce(&(c / &ps))).collect();
        let scale = modulus.p_pow(s - 1);
        let mut sub = Vec::new();
        let n = small_rec(&g, &reduced, &class, depth + 1, &mut sub)?;
        total += n * &scale;
        leaves.extend(sub.into_iter().map(|mut l| {
            l.count *= &scale;
            l
        }));
    }
    Ok(total)
}

/// `N_0, ..., N_T` with `N_0 = 1`.
pub fn poincare_truncated(f: &[BigInt], p: &BigUint, max_exp: u32) -> Result<Vec<BigUint>> {
    let mut out = vec![BigUint::one()];
    if max_exp >= 1 {
        PrimePowerModulus::new(p.clone(), 1)?;
    }
    for t in 1..=max_exp {
        let modulus = PrimePowerModulus::new(p.clone(), t)?;
        out.push(count_roots(f, &modulus)?.total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force_count, OracleBudget};
    use num_traits::ToPrimitive;

    fn ints(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&v| BigInt::from(v)).collect()
    }

    fn md(p: u64, t: u32) -> PrimePowerModulus {
        PrimePowerModulus::from_u64(p, t).unwrap()
    }

    fn count(c: &[i64], p: u64, t: u32, engine: Engine) -> BigUint {
        count_roots_with(
            &ints(c),
            &md(p, t),
            CountOptions {
                engine,
                trace: false,
            },
        )
        .unwrap()
        .total
    }

    fn oracle(c: &[i64], p: u64, t: u32) -> BigUint {
        brute_force_count(&ints(c), &md(p, t), OracleBudget::default()).unwrap()
    }

    #[test]
    fn count_examples() {
        for e in [Engine::Auto, Engine::Tree, Engine::SmallPrime] {
            assert_eq!(count(&[0, 0, 1], 3, 2, e), BigUint::from(3u32));
            assert_eq!(count(&[5, 0, 1], 5, 2, e), BigUint::zero());
            assert_eq!(count(&[1, 0, 1], 5, 1, e), BigUint::from(2u32));
            assert_eq!(count(&[1], 7, 3, e), BigUint::zero());
            assert_eq!(count(&[], 7, 3, e), BigUint::from(343u32));
            assert_eq!(count(&[0, 5, 1], 5, 2, e), BigUint::from(5u32));
        }
    }

    #[test]
    fn t1_examples() {
        let p = BigUint::from(5u32);
        assert_eq!(
            count_t1(&ints(&[1, 0, 1]), &p).unwrap(),
            BigUint::from(2u32)
        );
        assert_eq!(count_t1(&ints(&[2, 0, 1]), &p).unwrap(), BigUint::zero());
        assert_eq!(
            count_t1(&ints(&[0, -1, 0, 1]), &BigUint::from(3u32)).unwrap(),
            BigUint::from(3u32)
        );
    }

    #[test]
    fn t3_examples() {
        assert_eq!(
            count_t3(&ints(&[0, 0, 0, 1]), &BigUint::from(5u32)).unwrap(),
            BigUint::from(25u32)
        );
        // (x-1)(x-2)(x-3)
        assert_eq!(
            count_t3(&ints(&[-6, 11, -6, 1]), &BigUint::from(7u32)).unwrap(),
            BigUint::from(3u32)
        );
        assert_eq!(
            count_t3(&ints(&[25, 0, 1]), &BigUint::from(5u32)).unwrap(),
            oracle(&[25, 0, 1], 5, 3)
        );
    }

    #[test]
    fn system_t3_examples() {
        let f5 = md(5, 1);
        let m = FpPolynomial::new(&f5, [4, 0, 1]);
        let g = ZptPolynomial::from_terms(&f5, 2, [(vec![0, 2], 1), (vec![1, 0], 1)]);
        assert_eq!(count_system_t3(&m, &g).unwrap(), 4);
        let m = FpPolynomial::new(&f5, [1, 0, 1]);
        assert_eq!(count_system_t3(&m, &g).unwrap(), 0);
        let lin = ZptPolynomial::from_terms(&f5, 2, [(vec![0, 1], 1), (vec![1, 0], 3)]);
        assert_eq!(count_system_t3(&m, &lin).unwrap(), 2);
    }

    #[test]
    fn tree_node_example() {
        let traced = |t| {
            count_roots_with(
                &ints(&[0, 0, 1]),
                &md(5, t),
                CountOptions {
                    engine: Engine::Tree,
                    trace: true,
                },
            )
            .unwrap()
        };
        // (5, 4): level 1 has s = 2 and g = y^2, so the double root descends.
        let r = traced(4);
        assert_eq!(r.total, BigUint::from(25u32));
        assert_eq!(r.trace[0].s, 2);
        assert!(matches!(
            r.trace[0].status,
            PieceStatus::Expanded { children: 1, .. }
        ));
        assert_eq!(r.trace[1].level, 2);
        assert_eq!(r.stats.nodes, 3);
        // (5, 3): s = t - 1, so only the first digit of y matters.
        let r = traced(3);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(
            r.trace[0].status,
            PieceStatus::TerminalCount(BigUint::from(5u32))
        );
    }

    #[test]
    fn small_prime_examples() {
        assert_eq!(count(&[1, 1, 1], 2, 4, Engine::SmallPrime), BigUint::zero());
        assert_eq!(
            count(&[-1, 0, 1], 2, 3, Engine::SmallPrime),
            oracle(&[-1, 0, 1], 2, 3)
        );
        assert_eq!(count(&[0, 1], 2, 5, Engine::SmallPrime), BigUint::one());
    }

    #[test]
    fn series_examples() {
        let s = |c: &[i64], p: u32, t| -> Vec<u64> {
            poincare_truncated(&ints(c), &BigUint::from(p), t)
                .unwrap()
                .iter()
                .map(|v| v.to_u64().unwrap())
                .collect()
        };
        assert_eq!(s(&[0, 0, 1], 3, 4), vec![1, 1, 3, 3, 9]);
        assert_eq!(s(&[-1, 0, 1], 5, 3), vec![1, 2, 2, 2]);
        assert_eq!(s(&[1], 7, 2), vec![1, 0, 0]);
    }

    #[test]
    fn leaves_sum_to_total() {
        for (c, p, t) in [
            (&[0i64, 0, 0, 1][..], 3u64, 5u32),
            (&[4, 0, 1][..], 2, 5),
            (&[-8, 12, -6, 1][..], 17, 6),
        ] {
            for e in [Engine::Auto, Engine::Tree, Engine::SmallPrime] {
                let r = count_roots_with(
                    &ints(c),
                    &md(p, t),
                    CountOptions {
                        engine: e,
                        trace: false,
                    },
                )
                .unwrap();
                let sum: BigUint = r.per_leaf.iter().map(|l| &l.count).sum();
                assert_eq!(sum, r.total);
            }
        }
    }
}
