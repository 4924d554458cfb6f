//! Small dense matrices over commutative rings that may have zero divisors.
//!
//! Characteristic polynomials use the Samuelson-Berkowitz recurrence, which
//! never divides, so it is valid over `Z/(p^t)[x]/I` and over `F_p[y]`.

use num_bigint::BigUint;

pub(crate) trait CommRing {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        self.sub(&self.zero(), a)
    }
}

pub(crate) type Matrix<E> = Vec<Vec<E>>;

pub(crate) fn identity<R: CommRing>(ring: &R, n: usize) -> Matrix<R::Elem> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { ring.one() } else { ring.zero() })
                .collect()
        })
        .collect()
}

pub(crate) fn mat_mul<R: CommRing>(
    ring: &R,
    a: &Matrix<R::Elem>,
    b: &Matrix<R::Elem>,
) -> Matrix<R::Elem> {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let inner = b.len();
    let mut out = vec![vec![ring.zero(); m]; n];
    for i in 0..n {
        for k in 0..inner {
            if ring.is_zero(&a[i][k]) {
                continue;
            }
            for j in 0..m {
                let prod = ring.mul(&a[i][k], &b[k][j]);
                out[i][j] = ring.add(&out[i][j], &prod);
            }
        }
    }
    out
}

fn mat_vec<R: CommRing>(ring: &R, a: &Matrix<R::Elem>, v: &[R::Elem]) -> Vec<R::Elem> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(ring.zero(), |acc, (x, y)| ring.add(&acc, &ring.mul(x, y)))
        })
        .collect()
}

/// `a^e` by square-and-multiply.
pub(crate) fn mat_pow<R: CommRing>(ring: &R, a: &Matrix<R::Elem>, e: &BigUint) -> Matrix<R::Elem> {
    let mut result = identity(ring, a.len());
    for i in (0..e.bits()).rev() {
        result = mat_mul(ring, &result, &result);
        if e.bit(i) {
            result = mat_mul(ring, &result, a);
        }
    }
    result
}

/// Coefficients of `det(x I - a)`, highest degree first (leading entry 1).
pub(crate) fn charpoly<R: CommRing>(ring: &R, a: &Matrix<R::Elem>) -> Vec<R::Elem> {
    let n = a.len();
    if n == 0 {
        return vec![ring.one()];
    }
    // Split a = [[a11, row], [col, sub]] and recurse on the trailing block.
    let a11 = &a[0][0];
    let row: Vec<R::Elem> = a[0][1..].to_vec();
    let col: Vec<R::Elem> = a[1..].iter().map(|r| r[0].clone()).collect();
    let sub: Matrix<R::Elem> = a[1..].iter().map(|r| r[1..].to_vec()).collect();
    let inner = charpoly(ring, &sub);

    // Toeplitz column: 1, -a11, -row.col, -row.sub.col, ..., -row.sub^(n-2).col
    let mut toeplitz = Vec::with_capacity(n + 1);
    toeplitz.push(ring.one());
    toeplitz.push(ring.neg(a11));
    let mut v = col;
    for _ in 0..n.saturating_sub(1) {
        let dot = row
            .iter()
            .zip(&v)
            .fold(ring.zero(), |acc, (x, y)| ring.add(&acc, &ring.mul(x, y)));
        toeplitz.push(ring.neg(&dot));
        v = mat_vec(ring, &sub, &v);
    }

    (0..=n)
        .map(|i| {
            (0..=i.min(n - 1)).fold(ring.zero(), |acc, j| {
                ring.add(&acc, &ring.mul(&toeplitz[i - j], &inner[j]))
            })
        })
        .collect()
}

pub(crate) fn determinant<R: CommRing>(ring: &R, a: &Matrix<R::Elem>) -> R::Elem {
    let n = a.len();
    let cp = charpoly(ring, a);
    if n % 2 == 0 {
        cp[n].clone()
    } else {
        ring.neg(&cp[n])
    }
}
