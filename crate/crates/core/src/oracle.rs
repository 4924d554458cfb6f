//! Exhaustive ground truth for small instances.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::modarith::PrimePowerModulus;
use crate::zptpoly::ZptPolynomial;

/// Cap on the number of points an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_points: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_points: 10_000_000,
        }
    }
}

impl OracleBudget {
    fn check(&self, needed: &BigUint) -> Result<u64> {
        match needed.to_u64() {
            Some(n) if n <= self.max_points => Ok(n),
            _ => Err(Error::BudgetExceeded {
                needed: needed.clone(),
                budget: self.max_points,
            }),
        }
    }
}

/// `#{x in [0, p^t) : f(x) = 0 mod p^t}` by Horner evaluation at every point.
/// `f` is given by integer coefficients, constant term first.
pub fn brute_force_count(
    f: &[BigInt],
    modulus: &PrimePowerModulus,
    budget: OracleBudget,
) -> Result<BigUint> {
    let q = budget.check(modulus.q())?;
    let coeffs: Vec<BigUint> = f.iter().map(|c| modulus.reduce_int(c)).collect();
    let mut count = 0u64;
    if q <= u32::MAX as u64 {
        let small: Vec<u64> = coeffs.iter().map(|c| c.to_u64().unwrap()).collect();
        for x in 0..q {
            let v = small.iter().rev().fold(0u64, |acc, c| (acc * x + c) % q);
            if v == 0 {
                count += 1;
            }
        }
    } else {
        let qb = modulus.q();
        for x in 0..q {
            let x = BigUint::from(x);
            let v = coeffs
                .iter()
                .rev()
                .fold(BigUint::zero(), |acc, c| (acc * &x + c) % qb);
            if v.is_zero() {
                count += 1;
            }
        }
    }
    Ok(BigUint::from(count))
}

/// All common zeros in `F_p^arity` of polynomials over `F_p`, in lexicographic order.
pub fn enumerate_system(
    generators: &[ZptPolynomial],
    arity: usize,
    field: &PrimePowerModulus,
    budget: OracleBudget,
) -> Result<Vec<Vec<BigUint>>> {
    let p = field.p();
    budget.check(&num_traits::pow(p.clone(), arity))?;
    let p = p.to_u64().expect("budget bounds p");
    let gens: Vec<ZptPolynomial> = generators
        .iter()
        .map(|g| {
            if g.arity() > arity && g.max_var().is_some_and(|v| v >= arity) {
                Err(Error::ArityMismatch {
                    expected: arity,
                    got: g.arity(),
                })
            } else {
                Ok(g.reduce_modulus(field).with_arity(arity))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut point = vec![0u64; arity];
    loop {
        let pt: Vec<BigUint> = point.iter().map(|&v| BigUint::from(v)).collect();
        if gens.iter().all(|g| g.eval(&pt).is_zero()) {
            out.push(pt);
        }
        // Odometer with the last coordinate fastest gives lexicographic order.
        let mut i = arity;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            point[i] += 1;
            if point[i] < p {
                break;
            }
            point[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&v| BigInt::from(v)).collect()
    }

    #[test]
    fn count_examples() {
        let b = OracleBudget::default();
        let m = PrimePowerModulus::from_u64(3, 2).unwrap();
        assert_eq!(
            brute_force_count(&ints(&[0, 0, 1]), &m, b).unwrap(),
            BigUint::from(3u32)
        );
        let m = PrimePowerModulus::from_u64(5, 2).unwrap();
        assert_eq!(
            brute_force_count(&ints(&[5, 0, 1]), &m, b).unwrap(),
            BigUint::zero()
        );
        let m = PrimePowerModulus::from_u64(2, 3).unwrap();
        assert_eq!(brute_force_count(&[], &m, b).unwrap(), BigUint::from(8u32));
    }

    #[test]
    fn budget_is_enforced() {
        let m = PrimePowerModulus::from_u64(101, 4).unwrap();
        let err =
            brute_force_count(&ints(&[1, 1]), &m, OracleBudget { max_points: 1000 }).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn system_examples() {
        let f5 = PrimePowerModulus::from_u64(5, 1).unwrap();
        let b = OracleBudget::default();
        let g1 = ZptPolynomial::from_terms(&f5, 2, [(vec![2, 0], 1), (vec![0, 0], 4)]);
        // x2^2 - (x1 + 1) x2 + x1
        let g2 = ZptPolynomial::from_terms(
            &f5,
            2,
            [
                (vec![0, 2], 1),
                (vec![1, 1], -1),
                (vec![0, 1], -1),
                (vec![1, 0], 1),
            ],
        );
        let pts = enumerate_system(&[g1, g2], 2, &f5, b).unwrap();
        let expect: Vec<Vec<BigUint>> = [[1u32, 1], [4, 1], [4, 4]]
            .iter()
            .map(|r| r.iter().map(|&v| BigUint::from(v)).collect())
            .collect();
        assert_eq!(pts, expect);

        assert!(enumerate_system(&[ZptPolynomial::one(&f5, 2)], 2, &f5, b)
            .unwrap()
            .is_empty());
        let f3 = PrimePowerModulus::from_u64(3, 1).unwrap();
        let xs = [ZptPolynomial::var(&f3, 2, 0), ZptPolynomial::var(&f3, 2, 1)];
        assert_eq!(
            enumerate_system(&xs, 2, &f3, b).unwrap(),
            vec![vec![BigUint::zero(), BigUint::zero()]]
        );
    }
}
