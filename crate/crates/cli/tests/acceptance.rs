//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rootcount_core::fppoly::gcd;
use rootcount_core::teichmuller::teich_ideal_with;
use rootcount_core::{
    count_roots_with, count_system_t3, count_t1, enumerate_system, teich_element, teich_ideal,
    CompanionMatrix, CountOptions, CountResult, Engine, FpPolynomial, OracleBudget,
    PrimePowerModulus, TriangularIdeal, ZptPolynomial,
};

type Check = Result<(), String>;

fn md(p: u64, t: u32) -> PrimePowerModulus {
    PrimePowerModulus::from_u64(p, t).unwrap()
}

fn ints(c: &[i64]) -> Vec<BigInt> {
    c.iter().map(|&v| BigInt::from(v)).collect()
}

fn random_poly(rng: &mut ChaCha8Rng, q: u64, max_deg: usize) -> Vec<BigInt> {
    let d = rng.gen_range(0..=max_deg);
    (0..=d).map(|_| BigInt::from(rng.gen_range(0..q))).collect()
}

fn mul_linear(f: &[i64], r: i64) -> Vec<i64> {
    let mut out = vec![0; f.len() + 1];
    for (i, &c) in f.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= c * r;
    }
    out
}

/// Coefficients reduced into `[0, q)`.
fn reduced(f: &[BigInt], q: u64) -> Vec<u128> {
    let qi = BigInt::from(q);
    f.iter()
        .map(|c| (((c % &qi) + &qi) % &qi).to_u64().unwrap() as u128)
        .collect()
}

/// Horner evaluation modulo `q`, independent of the library.
fn horner(c: &[u128], x: u64, q: u64) -> u64 {
    let (x, q) = (x as u128, q as u128);
    c.iter().rev().fold(0u128, |acc, &a| (acc * x + a) % q) as u64
}

fn eval_mod(f: &[BigInt], x: u64, q: u64) -> u64 {
    horner(&reduced(f, q), x, q)
}

fn roots_mod(f: &[BigInt], q: u64) -> Vec<u64> {
    let c = reduced(f, q);
    (0..q).filter(|&x| horner(&c, x, q) == 0).collect()
}

fn count(f: &[BigInt], p: u64, t: u32, engine: Engine) -> Result<CountResult, String> {
    count_roots_with(
        f,
        &md(p, t),
        CountOptions {
            engine,
            trace: false,
        },
    )
    .map_err(|e| format!("p={p} t={t} f={f:?}: {e}"))
}

fn node_bound(r: &CountResult, t: u32, what: &str) -> Check {
    if (r.stats.nodes as f64) < (t as f64).exp() {
        Ok(())
    } else {
        Err(format!("{what}: {} nodes at t={t}", r.stats.nodes))
    }
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: impl Fn() -> String) -> Check {
    if got == want {
        Ok(())
    } else {
        Err(format!("{}: got {got:?}, expected {want:?}", what()))
    }
}

fn oracle_sweep() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in [2u64, 3, 5, 7, 11] {
        for t in 1..=5u32 {
            let q = p.pow(t);
            for _ in 0..100 {
                let f = random_poly(&mut rng, q, 6);
                let want = BigUint::from(roots_mod(&f, q).len());
                for engine in [Engine::Auto, Engine::Tree] {
                    let r = count(&f, p, t, engine)?;
                    expect_eq(&r.total, &want, || format!("{engine} p={p} t={t} f={f:?}"))?;
                    node_bound(&r, t, &format!("p={p} f={f:?}"))?;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        return Err(format!("sweep took {elapsed:?}"));
    }
    Ok(())
}

fn small_exponent_identities() -> Check {
    for p in [3u64, 5, 7] {
        let pi = p as i64;
        let r = count(&ints(&[0, 0, 1]), p, 2, Engine::Auto)?;
        expect_eq(&r.total, &BigUint::from(p), || format!("x^2 mod {p}^2"))?;
        node_bound(&r, 2, "x^2")?;
        let r = count(&ints(&[pi, 0, 1]), p, 2, Engine::Auto)?;
        expect_eq(&r.total, &BigUint::from(0u32), || {
            format!("x^2+{p} mod {p}^2")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..50 {
        let p = [3u64, 5, 7, 11, 13][i % 5];
        let field = md(p, 1);
        let f = random_poly(&mut rng, p, 6);
        let mut frob = vec![0i64; p as usize + 1];
        frob[1] = -1;
        frob[p as usize] = 1;
        let g = gcd(
            &FpPolynomial::new(&field, frob),
            &FpPolynomial::new(&field, f.clone()),
        );
        let want = BigUint::from(g.degree().unwrap_or(0));
        expect_eq(
            count_t1(&f, field.p()).map_err(|e| e.to_string())?,
            want.clone(),
            || format!("count_t1 p={p} f={f:?}"),
        )?;
        let r = count(&f, p, 1, Engine::Auto)?;
        expect_eq(&r.total, &want, || format!("N_1 p={p} f={f:?}"))?;
        node_bound(&r, 1, "N_1")?;
    }
    Ok(())
}

fn square_counts() -> Check {
    let x2 = ints(&[0, 0, 1]);
    for p in [3u64, 5, 13] {
        for t in 1..=8u32 {
            let want = BigUint::from(p).pow(t / 2);
            let q = p.pow(t);
            if q <= 200_000 {
                expect_eq(BigUint::from(roots_mod(&x2, q).len()), want.clone(), || {
                    format!("oracle x^2 p={p} t={t}")
                })?;
            }
            for engine in [Engine::Auto, Engine::Tree] {
                let r = count(&x2, p, t, engine)?;
                expect_eq(&r.total, &want, || format!("{engine} x^2 p={p} t={t}"))?;
                node_bound(&r, t, "x^2")?;
            }
        }
    }
    Ok(())
}

fn system_t3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [5u64, 11] {
        let field = md(p, 1);
        let big = md(p, 3);
        for _ in 0..60 {
            let k = rng.gen_range(1..=4usize);
            let mut roots: Vec<i64> = Vec::new();
            while roots.len() < k {
                let r = rng.gen_range(0..p as i64);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
            let m = roots.iter().fold(vec![1i64], |acc, &r| mul_linear(&acc, r));
            let n = rng.gen_range(1..=2u32);
            let mut terms: Vec<(Vec<u32>, BigInt)> = vec![(vec![0, n], BigInt::from(1))];
            for j in 0..n {
                for i in 0..3u32 {
                    terms.push((vec![i, j], BigInt::from(rng.gen_range(0..p.pow(3)))));
                }
            }
            let g = ZptPolynomial::from_terms(&big, 2, terms);
            let mf = FpPolynomial::new(&field, m.clone());
            let got = count_system_t3(&mf, &g).map_err(|e| e.to_string())?;
            let m2 = ZptPolynomial::from_terms(
                &field,
                2,
                m.iter().enumerate().map(|(i, &c)| (vec![i as u32, 0], c)),
            );
            let pts = enumerate_system(&[m2, g.mod_p()], 2, &field, OracleBudget::default())
                .map_err(|e| e.to_string())?;
            expect_eq(got, pts.len(), || format!("p={p} m={m:?} g={g}"))?;
        }
    }
    Ok(())
}

/// Teichmüller representative by Newton iteration on `x^p - x`.
fn newton_teich(a: u64, p: u64, q: u64) -> u64 {
    let (p, q) = (p as u128, q as u128);
    let pow = |mut b: u128, mut e: u128| {
        let mut r = 1u128;
        b %= q;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % q;
            }
            b = b * b % q;
            e >>= 1;
        }
        r
    };
    let mut w = a as u128 % p;
    if w == 0 {
        return 0;
    }
    for _ in 0..8 {
        let fw = (pow(w, p) + q - w) % q;
        // f'(w) = p w^(p-1) - 1 is a unit mod q.
        let dw = (p * pow(w, p - 1) % q + q - 1) % q;
        let inv = {
            let (mut r0, mut r1) = (dw as i128, q as i128);
            let (mut s0, mut s1) = (1i128, 0i128);
            while r1 != 0 {
                let k = r0 / r1;
                (r0, r1) = (r1, r0 - k * r1);
                (s0, s1) = (s1, s0 - k * s1);
            }
            s0.rem_euclid(q as i128) as u128
        };
        w = (w + q - fw * inv % q) % q;
    }
    w as u64
}

fn random_splitting_ideal(rng: &mut ChaCha8Rng, p: u64) -> TriangularIdeal {
    let field = md(p, 1);
    loop {
        let k = rng.gen_range(1..=3usize.min(p as usize));
        let mut roots: Vec<i64> = Vec::new();
        while roots.len() < k {
            let r = rng.gen_range(0..p as i64);
            if !roots.contains(&r) {
                roots.push(r);
            }
        }
        let m = roots.iter().fold(vec![1i64], |acc, &r| mul_linear(&acc, r));
        let g1 = ZptPolynomial::univariate(&field, m).with_arity(2);
        let x2 = ZptPolynomial::var(&field, 2, 1);
        let mut g2 = ZptPolynomial::one(&field, 2);
        for _ in 0..rng.gen_range(1..=2) {
            let c = ZptPolynomial::from_terms(
                &field,
                2,
                (0..2u32).map(|i| (vec![i, 0], BigInt::from(rng.gen_range(0..p)))),
            );
            g2 = g2.mul(&x2.sub(&c));
        }
        let ideal = TriangularIdeal::new(&field, vec![g1, g2]).unwrap();
        if ideal.is_splitting() {
            return ideal;
        }
    }
}

fn teichmuller() -> Check {
    for p in [2u64, 3, 5, 7, 11, 13] {
        for t in 1..=6u32 {
            let m = md(p, t);
            let q = p.pow(t);
            for a in 0..p {
                let w = teich_element(&BigUint::from(a), &m);
                expect_eq(w.pow_mod(m.p()).value(), w.value(), || {
                    format!("w({a})^p p={p} t={t}")
                })?;
                expect_eq(w.value().to_u64().unwrap(), newton_teich(a, p, q), || {
                    format!("w({a}) p={p} t={t}")
                })?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [3u64, 5, 7, 11, 13] {
        for t in [2u32, 4, 6] {
            let m = md(p, t);
            let q = p.pow(t);
            let ideal = random_splitting_ideal(&mut rng, p);
            let lifted = teich_ideal(&ideal, &m).map_err(|e| e.to_string())?;
            expect_eq(&lifted.mod_p(), &ideal, || format!("lift mod p of {ideal}"))?;
            for pt in ideal.points_mod_p() {
                let w: Vec<BigUint> = pt
                    .iter()
                    .map(|a| BigUint::from(newton_teich(a.to_u64().unwrap(), p, q)))
                    .collect();
                for (i, g) in lifted.generators().iter().enumerate() {
                    expect_eq(g.eval(&w[..=i]), BigUint::from(0u32), || {
                        format!("{lifted} at Teichmüller point {pt:?}")
                    })?;
                }
            }
            expect_eq(teich_ideal(&lifted, &m).ok(), Some(lifted.clone()), || {
                format!("idempotence {ideal}")
            })?;
            let base: Vec<CompanionMatrix> = (0..2)
                .map(|i| CompanionMatrix::of_generator(&ideal, i, &m))
                .collect();
            for trial in 0..4 {
                let matrices: Vec<CompanionMatrix> = base
                    .iter()
                    .enumerate()
                    .map(|(level, c)| {
                        let n = c.size();
                        let start = if trial % 2 == 1 {
                            // The transpose has the same characteristic polynomial.
                            CompanionMatrix {
                                entries: (0..n)
                                    .map(|r| (0..n).map(|s| c.entries[s][r].clone()).collect())
                                    .collect(),
                            }
                        } else {
                            c.clone()
                        };
                        let offsets: Vec<Vec<ZptPolynomial>> = (0..n)
                            .map(|_| {
                                (0..n)
                                    .map(|_| {
                                        let terms: Vec<(Vec<u32>, BigInt)> = if level == 0 {
                                            vec![(vec![], BigInt::from(p * rng.gen_range(0..q)))]
                                        } else {
                                            (0..3u32)
                                                .map(|e| {
                                                    (vec![e], BigInt::from(p * rng.gen_range(0..q)))
                                                })
                                                .collect()
                                        };
                                        ZptPolynomial::from_terms(&m, level, terms)
                                    })
                                    .collect()
                            })
                            .collect();
                        start.perturbed(&offsets)
                    })
                    .collect();
                let other = teich_ideal_with(&ideal, &m, &matrices).map_err(|e| e.to_string())?;
                expect_eq(&other, &lifted, || {
                    format!("auxiliary lift {trial} of {ideal}")
                })?;
            }
        }
    }
    Ok(())
}

fn hensel_and_clusters() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut done = 0;
    while done < 100 {
        let p = [5u64, 7, 11][done % 3];
        let field = md(p, 1);
        let f = random_poly(&mut rng, p.pow(6), 6);
        let fp = FpPolynomial::new(&field, f.clone());
        if fp.degree().unwrap_or(0) == 0 || gcd(&fp, &fp.derivative()).deg() > 0 {
            continue;
        }
        done += 1;
        let n1 = count(&f, p, 1, Engine::Auto)?.total;
        for t in 1..=6u32 {
            let r = count(&f, p, t, Engine::Auto)?;
            expect_eq(&r.total, &n1, || format!("p={p} t={t} f={f:?}"))?;
            node_bound(&r, t, "squarefree")?;
            if p.pow(t) <= 20_000 {
                expect_eq(
                    BigUint::from(roots_mod(&f, p.pow(t)).len()),
                    n1.clone(),
                    || format!("oracle p={p} t={t} f={f:?}"),
                )?;
            }
        }
    }
    for i in 0..50 {
        let p = [3u64, 5, 7][i % 3];
        let t = 2 + (i as u32 / 3) % 3;
        let q = p.pow(t);
        let r = rng.gen_range(0..q as i64);
        let mut f = mul_linear(&mul_linear(&[1], r), r);
        for _ in 0..rng.gen_range(0..=3) {
            f = mul_linear(&f, rng.gen_range(0..q as i64));
        }
        f[0] += (p as i64) * rng.gen_range(0..p as i64);
        let f = ints(&f);
        let roots = roots_mod(&f, q);
        let res = count(&f, p, t, Engine::Auto)?;
        expect_eq(&res.total, &BigUint::from(roots.len()), || {
            format!("p={p} t={t} f={f:?}")
        })?;
        node_bound(&res, t, "square factor")?;
        let deriv: Vec<BigInt> = f.iter().enumerate().skip(1).map(|(k, c)| c * k).collect();
        for a in 0..p {
            if eval_mod(&f, a, p) != 0 || eval_mod(&deriv, a, p) != 0 {
                continue;
            }
            let size = roots.iter().filter(|&&x| x % p == a).count() as u64;
            if size != 0 && size < p {
                return Err(format!(
                    "cluster of {size} over {a} mod {p}, t={t}, f={f:?}"
                ));
            }
        }
    }
    Ok(())
}

fn large_degree() -> Check {
    let p = 2_147_483_647u64;
    let t = 4;
    let q = BigUint::from(p).pow(t);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let f: Vec<BigInt> = (0..=200)
            .map(|_| {
                let c: BigUint =
                    (0..4).fold(BigUint::from(0u32), |acc, _| acc * p + rng.gen_range(0..p));
                BigInt::from(c % &q)
            })
            .collect();
        let start = Instant::now();
        let r = count(&f, p, t, Engine::Auto)?;
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(60) {
            return Err(format!("degree 200 took {elapsed:?}"));
        }
        node_bound(&r, t, "degree 200")?;
        if r.total > BigUint::from(200u32) {
            return Err(format!(
                "{} roots for a random degree 200 polynomial",
                r.total
            ));
        }
    }
    Ok(())
}

fn engines_agree() -> Check {
    let bin = env!("CARGO_BIN_EXE_rootcount");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in [5u64, 7] {
        for t in 1..=4u32 {
            for _ in 0..100 {
                let f = random_poly(&mut rng, p.pow(t), 6);
                let list = f
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let run = |engine: &str| -> Result<String, String> {
                    let out = Command::new(bin)
                        .args(["count", "--prime", &p.to_string(), "--exp", &t.to_string()])
                        .args(["--poly", &list, "--force-engine", engine])
                        .output()
                        .map_err(|e| e.to_string())?;
                    if !out.status.success() {
                        return Err(format!("{engine} exited with {}", out.status));
                    }
                    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
                };
                let (tree, small) = (run("tree")?, run("smallp")?);
                expect_eq(tree, small, || format!("p={p} t={t} f={list}"))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("oracle sweep over p <= 11, t <= 5", oracle_sweep),
        (
            "N_2(x^2), N_2(x^2+p) and N_1 = deg gcd(x^p - x, f)",
            small_exponent_identities,
        ),
        ("N_t(x^2) = p^floor(t/2)", square_counts),
        ("count_system_t3 matches enumeration", system_t3),
        ("Teichmüller lifts", teichmuller),
        ("Hensel stability and root clusters", hensel_and_clusters),
        ("degree 200 at p = 2^31 - 1, t = 4", large_degree),
        ("forced tree and smallp engines agree", engines_agree),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS criterion {}: {name} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
