//! Teichmüller lifts modulo `p^t`.
//!
//! The lift `w(a)` of `a in F_p` is the unique `w = a (mod p)` with `w^p = w`;
//! it equals `a^(p^t) mod p^t`. Polynomials and triangular ideals whose roots
//! are all rational lift root by root: the lifted generator is the
//! characteristic polynomial of the `p^t`-th power of a companion matrix,
//! computed over the already lifted lower levels.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::fppoly::FpPolynomial;
use crate::linalg::{self, Matrix};
use crate::modarith::{PrimePowerModulus, Residue};
use crate::triangular::{Elem, LevelRing, TriangularIdeal};
use crate::zptpoly::ZptPolynomial;

/// `w(a) = a^(p^t) mod p^t`.
pub fn teich_element(a: &BigUint, modulus: &PrimePowerModulus) -> Residue {
    let a = a % modulus.p();
    modulus.residue(a).pow_mod(modulus.q())
}

/// Integer matrix whose characteristic polynomial reduces to one generator
/// of a triangular ideal modulo `p`. Entries are polynomials in the
/// variables below that generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompanionMatrix {
    pub entries: Vec<Vec<ZptPolynomial>>,
}

impl CompanionMatrix {
    /// Companion matrix of generator `index` (zero-based) of `ideal`, with
    /// entries the canonical lifts to `modulus` of the tail coefficients.
    pub fn of_generator(
        ideal: &TriangularIdeal,
        index: usize,
        modulus: &PrimePowerModulus,
    ) -> Self {
        let field = ideal.mod_p();
        let g = &field.generators()[index];
        let n = field.degrees()[index];
        let coeffs = g.coefficients_in(index);
        let zero = ZptPolynomial::zero(modulus, index);
        let mut entries = vec![vec![zero.clone(); n]; n];
        for r in 0..n {
            if r + 1 < n {
                entries[r + 1][r] = ZptPolynomial::one(modulus, index);
            }
            entries[r][n - 1] = coeffs[r].with_arity(index).lift_modulus(modulus).neg();
        }
        CompanionMatrix { entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Adds `offsets` entrywise; used to produce other integral lifts.
    pub fn perturbed(&self, offsets: &[Vec<ZptPolynomial>]) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(offsets)
            .map(|(row, off)| row.iter().zip(off).map(|(a, b)| a.add(b)).collect())
            .collect();
        CompanionMatrix { entries }
    }

    fn to_elems(&self, ring: &TriangularIdeal, level: usize) -> Matrix<Elem> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| ring.reduce_at(level, &e.with_arity(level)))
                    .collect()
            })
            .collect()
    }
}

/// Lift of a polynomial over `F_p` that splits into distinct linear factors.
pub fn teich_poly(m: &FpPolynomial, modulus: &PrimePowerModulus) -> Result<ZptPolynomial> {
    if !m.is_monic() || m.deg() == 0 {
        return Err(Error::NonMonicLeading(m.to_string()));
    }
    let gen = ZptPolynomial::univariate(m.field(), m.to_ints());
    let ideal = TriangularIdeal::new(m.field(), vec![gen])?;
    let lifted = teich_ideal(&ideal, modulus)?;
    Ok(lifted.generators()[0].clone())
}

/// Lift of a splitting triangular ideal over `F_p` to `modulus`.
pub fn teich_ideal(
    ideal: &TriangularIdeal,
    modulus: &PrimePowerModulus,
) -> Result<TriangularIdeal> {
    let matrices: Vec<CompanionMatrix> = (0..ideal.levels())
        .map(|i| CompanionMatrix::of_generator(ideal, i, modulus))
        .collect();
    teich_ideal_with(ideal, modulus, &matrices)
}

/// Lift using caller-supplied integral matrices, one per level. Each must
/// reduce modulo `p` to a matrix with characteristic polynomial `g_i`.
pub fn teich_ideal_with(
    ideal: &TriangularIdeal,
    modulus: &PrimePowerModulus,
    matrices: &[CompanionMatrix],
) -> Result<TriangularIdeal> {
    if ideal.modulus().p() != modulus.p() {
        return Err(Error::ModulusMismatch);
    }
    let field = ideal.mod_p();
    if matrices.len() != field.levels() {
        return Err(Error::ArityMismatch {
            expected: field.levels(),
            got: matrices.len(),
        });
    }
    let mut lifted = TriangularIdeal::empty(modulus);
    for (level, matrix) in matrices.iter().enumerate() {
        let n = field.degrees()[level];
        if matrix.size() != n {
            return Err(Error::MalformedIdeal { index: level });
        }
        check_reduces_to_generator(&field, level, matrix)?;
        let ring = LevelRing {
            ideal: &lifted,
            level,
        };
        let m = matrix.to_elems(&lifted, level);
        let power = linalg::mat_pow(&ring, &m, modulus.q());
        let mut cp = linalg::charpoly(&ring, &power);
        cp.reverse();
        lifted = lifted.extend(&cp);
    }
    Ok(lifted)
}

fn check_reduces_to_generator(
    field: &TriangularIdeal,
    level: usize,
    matrix: &CompanionMatrix,
) -> Result<()> {
    let lower = field.prefix(level);
    let ring = LevelRing {
        ideal: &lower,
        level,
    };
    let entries: Vec<Vec<ZptPolynomial>> = matrix
        .entries
        .iter()
        .map(|row| row.iter().map(|e| e.with_arity(level).mod_p()).collect())
        .collect();
    let m = CompanionMatrix { entries }.to_elems(&lower, level);
    let mut cp = linalg::charpoly(&ring, &m);
    cp.reverse();
    let expected = field.prefix(level + 1);
    let got = lower.extend(&cp);
    if got.generators()[level] != expected.generators()[level] {
        return Err(Error::Invariant(format!(
            "auxiliary matrix at level {} does not reduce to the generator",
            level + 1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn md(p: u64, t: u32) -> PrimePowerModulus {
        PrimePowerModulus::from_u64(p, t).unwrap()
    }

    #[test]
    fn element_examples() {
        let m = md(5, 2);
        assert_eq!(
            teich_element(&BigUint::from(2u32), &m).value(),
            &BigUint::from(7u32)
        );
        assert_eq!(
            teich_element(&BigUint::from(3u32), &m).value(),
            &BigUint::from(18u32)
        );
        assert_eq!(
            teich_element(&BigUint::from(1u32), &md(13, 5)).value(),
            &BigUint::from(1u32)
        );
        assert!(teich_element(&BigUint::zero(), &md(7, 3)).value().is_zero());
    }

    #[test]
    fn poly_examples() {
        let f5 = md(5, 1);
        let m = md(5, 2);
        let lin = teich_poly(&FpPolynomial::new(&f5, [-2, 1]), &m).unwrap();
        assert_eq!(lin, ZptPolynomial::univariate(&m, [-7, 1]));
        let x = teich_poly(&FpPolynomial::new(&f5, [0, 1]), &m).unwrap();
        assert_eq!(x, ZptPolynomial::univariate(&m, [0, 1]));
        let quad = teich_poly(&FpPolynomial::new(&f5, [1, 0, 1]), &m).unwrap();
        assert_eq!(quad, ZptPolynomial::univariate(&m, [1, 0, 1]));
    }

    #[test]
    fn ideal_examples() {
        let f5 = md(5, 1);
        let m = md(5, 2);
        let i = TriangularIdeal::new(
            &f5,
            vec![
                ZptPolynomial::from_terms(&f5, 2, [(vec![1, 0], 1), (vec![0, 0], -2)]),
                ZptPolynomial::from_terms(&f5, 2, [(vec![0, 1], 1), (vec![0, 0], -3)]),
            ],
        )
        .unwrap();
        let lifted = teich_ideal(&i, &m).unwrap();
        assert_eq!(
            lifted.generators()[0],
            ZptPolynomial::univariate(&m, [-7, 1])
        );
        assert_eq!(
            lifted.generators()[1],
            ZptPolynomial::from_terms(&m, 2, [(vec![0, 1], 1), (vec![0, 0], -18)])
        );
    }

    #[test]
    fn rejects_wrong_auxiliary_matrix() {
        let f5 = md(5, 1);
        let i = TriangularIdeal::new(&f5, vec![ZptPolynomial::univariate(&f5, [1, 0, 1])]).unwrap();
        let m = md(5, 3);
        let good = CompanionMatrix::of_generator(&i, 0, &m);
        let bump = vec![
            vec![ZptPolynomial::one(&m, 0), ZptPolynomial::zero(&m, 0)],
            vec![ZptPolynomial::zero(&m, 0), ZptPolynomial::zero(&m, 0)],
        ];
        assert!(teich_ideal_with(&i, &m, &[good.perturbed(&bump)]).is_err());
        let by_p: Vec<Vec<_>> = bump
            .iter()
            .map(|r| r.iter().map(|e| e.scale(&BigUint::from(5u32))).collect())
            .collect();
        assert_eq!(
            teich_ideal_with(&i, &m, &[good.perturbed(&by_p)]).unwrap(),
            teich_ideal(&i, &m).unwrap()
        );
    }
}
