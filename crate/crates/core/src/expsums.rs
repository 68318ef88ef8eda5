//! Complete exponential sums `S_q(c) = Σ_{a mod q, (a,q)=1} Σ_{b mod q} e_q(a F(b) + b·c)`
//! attached to an integral quadratic form F in n variables, together with the
//! Ramanujan sums `c_q(m)`, quadratic-character Gauss sums `g_{p^r}(m)`, and
//! the dyadic averages `Σ |S_q(c)|` over `x/2 < q ≤ x`.
//!
//! S_q(c) is multiplicative in q: for coprime q1, q2 one has
//! `S_{q1 q2}(c) = S_{q1}(c) S_{q2}(c)`, so the public `expsum` routine
//! factors q into prime powers. Inside a single modulus the a-sum collapses
//! exactly to a Ramanujan factor, `S_q(c) = Σ_b c_q(F(b)) e_q(b·c)`, which
//! reduces the work from q^{n+1} to q^n summands. The plain double sum is
//! kept as `expsum_brute`; it is the slow oracle the fast path is tested
//! against.
//!
//! For an odd prime p with p ∤ 2·Δ_F the magnitude of S_{p^r}(c) is exactly
//! `p^{nr/2} |c_{p^r}(m)|` for even nr and `p^{nr/2} |g_{p^r}(m)|` for odd
//! nr, where `m = -(4^{-1} mod p^r) F*(c)` and F* is the dual form; this
//! closed prediction is exposed for auditing.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{euler_phi, factorize, gcd, mobius, mod_inverse, prime_power_symbol};
use crate::forms::{FormError, QuadraticForm};

#[derive(Debug, Error)]
pub enum ExpSumError {
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("work {work} summands exceeds budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("threshold x = {0} must be at least 2")]
    ThresholdTooSmall(f64),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// How an `ExpSumValue` was computed: the literal double sum, or the product
/// of prime-power factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    Brute,
    Crt,
}

/// A computed exponential sum value. Always satisfies the trivial bound
/// `|value| ≤ q^{n+1}`.
#[derive(Debug, Clone, Copy)]
pub struct ExpSumValue {
    pub re: f64,
    pub im: f64,
    pub q: u64,
    pub method: SumMethod,
}

impl ExpSumValue {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// A dyadic block sum `Σ_{x/2 < q ≤ x} |S_q(c)|`.
#[derive(Debug, Clone)]
pub struct DyadicAverage {
    pub x: f64,
    pub c: Vec<i64>,
    pub total: f64,
}

/// Parity indicator: 0 for even n, 1 for odd n. Enters every slope ceiling
/// on the dyadic averages.
pub fn kappa(n: usize) -> u32 {
    (n % 2) as u32
}

/// Ramanujan sum `c_q(m) = Σ_{a mod q, (a,q)=1} e_q(am)`, exactly:
/// `c_q(m) = μ(q/g) φ(q) / φ(q/g)` with `g = gcd(m, q)`.
pub fn ramanujan(q: u64, m: i64) -> i64 {
    assert!(q >= 1, "modulus must be positive");
    let g = gcd(m.unsigned_abs() % q, q);
    let qg = q / g;
    mobius(qg) * (euler_phi(q) / euler_phi(qg)) as i64
}

/// Table of `c_q(m)` for `m = 0..q`, sharing the divisor bookkeeping.
pub fn ramanujan_table(q: u64) -> Vec<i64> {
    assert!(q >= 1, "modulus must be positive");
    // mu(q/g) and phi(q)/phi(q/g) depend only on g | q.
    let factors = factorize(q);
    let mut divisors = vec![1u64];
    for &(p, e) in &factors {
        let base: Vec<u64> = divisors.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            divisors.extend(base.iter().map(|d| d * pe));
        }
    }
    let phi_q = euler_phi(q);
    let mut table = vec![0i64; q as usize];
    for &g in &divisors {
        let value = mobius(q / g) * (phi_q / euler_phi(q / g)) as i64;
        // Every m with gcd(m, q) = g is a multiple of g.
        let mut m = 0u64;
        while m < q {
            if gcd(m, q) == g {
                table[m as usize] = value;
            }
            m += g;
        }
    }
    table
}

/// Gauss-type character sum `g_{p^r}(m) = Σ_{a mod p^r} (a | p^r) e_{p^r}(am)`
/// for an odd prime p, where `(a | p^r)` is the Legendre symbol raised to the
/// r-th power (zero when p | a). Evaluated by direct summation.
pub fn gauss_sum(p: u64, r: u32, m: i64) -> ExpSumValue {
    assert!(p % 2 == 1 && p > 2, "p must be an odd prime");
    let q = p.pow(r);
    let qi = q as i64;
    let mut re = 0.0;
    let mut im = 0.0;
    for a in 0..q {
        let sym = prime_power_symbol(a as i64, p, r);
        if sym == 0 {
            continue;
        }
        let t = (a as i64 * m.rem_euclid(qi)).rem_euclid(qi) as f64;
        let angle = TAU * t / q as f64;
        re += sym as f64 * angle.cos();
        im += sym as f64 * angle.sin();
    }
    ExpSumValue { re, im, q, method: SumMethod::Brute }
}

struct ModTables {
    q: i64,
    gram: Vec<Vec<i64>>,
    c: Vec<i64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

fn mod_tables(f: &QuadraticForm, q: u64, c: &[i64]) -> Result<ModTables, ExpSumError> {
    if c.len() != f.n() {
        return Err(FormError::DimensionMismatch { got: c.len(), expected: f.n() }.into());
    }
    let qi = q as i64;
    let gram = f
        .gram_i64()?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.rem_euclid(qi)).collect())
        .collect();
    let c = c.iter().map(|&v| v.rem_euclid(qi)).collect();
    let mut cos = Vec::with_capacity(q as usize);
    let mut sin = Vec::with_capacity(q as usize);
    for t in 0..q {
        let angle = TAU * t as f64 / q as f64;
        cos.push(angle.cos());
        sin.push(angle.sin());
    }
    Ok(ModTables { q: qi, gram, c, cos, sin })
}

/// `F(b) mod q` with all intermediates reduced; entries of `gram` and `b`
/// are already in `[0, q)`.
fn form_value_mod(gram: &[Vec<i64>], b: &[i64], q: i64) -> i64 {
    let n = b.len();
    let mut acc = 0i64;
    for i in 0..n {
        let mut row = 0i64;
        for j in 0..n {
            row = (row + gram[i][j] * b[j]) % q;
        }
        acc = (acc + row * b[i]) % q;
    }
    acc
}

fn dot_mod(c: &[i64], b: &[i64], q: i64) -> i64 {
    let mut acc = 0i64;
    for i in 0..c.len() {
        acc = (acc + c[i] * b[i]) % q;
    }
    acc
}

/// The literal double sum over a coprime to q and b mod q. Work is
/// q^{n+1} summands, checked against the budget before starting. This is
/// the slow reference implementation.
pub fn expsum_brute(
    f: &QuadraticForm,
    q: u64,
    c: &[i64],
    budget: u64,
) -> Result<ExpSumValue, ExpSumError> {
    if q == 0 {
        return Err(ExpSumError::ZeroModulus);
    }
    let n = f.n();
    let work = (q as u128).pow(n as u32 + 1);
    if work > budget as u128 {
        return Err(ExpSumError::BudgetExceeded { work, budget });
    }
    if q == 1 {
        return Ok(ExpSumValue { re: 1.0, im: 0.0, q, method: SumMethod::Brute });
    }
    let t = mod_tables(f, q, c)?;
    let units: Vec<i64> = (1..q as i64).filter(|&a| gcd(a as u64, q) == 1).collect();
    let mut b = vec![0i64; n];
    let mut re = 0.0;
    let mut im = 0.0;
    loop {
        let fv = form_value_mod(&t.gram, &b, t.q);
        let dv = dot_mod(&t.c, &b, t.q);
        for &a in &units {
            let idx = ((a * fv + dv) % t.q) as usize;
            re += t.cos[idx];
            im += t.sin[idx];
        }
        // Odometer step over b in [0, q)^n.
        let mut k = 0;
        loop {
            if k == n {
                return Ok(ExpSumValue { re, im, q, method: SumMethod::Brute });
            }
            b[k] += 1;
            if b[k] < t.q {
                break;
            }
            b[k] = 0;
            k += 1;
        }
    }
}

/// S_q(c) for a single modulus with the a-sum folded into a Ramanujan
/// factor: `S_q(c) = Σ_b c_q(F(b) mod q) e_q(b·c)`. Work is q^n summands.
fn expsum_collapsed(
    f: &QuadraticForm,
    q: u64,
    c: &[i64],
    budget: u64,
) -> Result<ExpSumValue, ExpSumError> {
    let n = f.n();
    let work = (q as u128).pow(n as u32);
    if work > budget as u128 {
        return Err(ExpSumError::BudgetExceeded { work, budget });
    }
    if q == 1 {
        return Ok(ExpSumValue { re: 1.0, im: 0.0, q, method: SumMethod::Crt });
    }
    let t = mod_tables(f, q, c)?;
    let cq: Vec<f64> = ramanujan_table(q).into_iter().map(|v| v as f64).collect();
    let qi = t.q;
    let two_m00 = (2 * t.gram[0][0]) % qi;
    let c0 = t.c[0];
    let mut outer = vec![0i64; n]; // outer[0] stays 0; digits 1..n drive the odometer
    let mut re = 0.0;
    let mut im = 0.0;
    loop {
        // Inner loop over b_0 with first differences of the quadratic.
        let base_f = form_value_mod(&t.gram, &outer, qi);
        let base_d = dot_mod(&t.c, &outer, qi);
        let mut cross = 0i64;
        for j in 1..n {
            cross = (cross + t.gram[0][j] * outer[j]) % qi;
        }
        let mut fv = base_f;
        let mut df = (t.gram[0][0] + 2 * cross) % qi;
        let mut dv = base_d;
        for _ in 0..qi {
            re += cq[fv as usize] * t.cos[dv as usize];
            im += cq[fv as usize] * t.sin[dv as usize];
            fv += df - qi;
            fv += (fv >> 63) & qi;
            df += two_m00 - qi;
            df += (df >> 63) & qi;
            dv += c0 - qi;
            dv += (dv >> 63) & qi;
        }
        let mut k = 1;
        loop {
            if k == n {
                return Ok(ExpSumValue { re, im, q, method: SumMethod::Crt });
            }
            outer[k] += 1;
            if outer[k] < qi {
                break;
            }
            outer[k] = 0;
            k += 1;
        }
    }
}

/// S_q(c) by prime-power factorization: each factor is evaluated directly
/// and the results multiplied. This is the authoritative route.
pub fn expsum(
    f: &QuadraticForm,
    q: u64,
    c: &[i64],
    budget: u64,
) -> Result<ExpSumValue, ExpSumError> {
    if q == 0 {
        return Err(ExpSumError::ZeroModulus);
    }
    let mut re = 1.0;
    let mut im = 0.0;
    for (p, e) in factorize(q) {
        let part = expsum_collapsed(f, p.pow(e), c, budget)?;
        let (nr, ni) = (re * part.re - im * part.im, re * part.im + im * part.re);
        re = nr;
        im = ni;
    }
    Ok(ExpSumValue { re, im, q, method: SumMethod::Crt })
}

/// Dyadic block sum `Σ_{x/2 < q ≤ x} |S_q(c)|`.
pub fn sigma_n_sum(
    f: &QuadraticForm,
    x: f64,
    c: &[i64],
    budget: u64,
) -> Result<DyadicAverage, ExpSumError> {
    if !(x >= 2.0) {
        return Err(ExpSumError::ThresholdTooSmall(x));
    }
    let hi = x.floor() as u64;
    let lo = (x / 2.0).floor() as u64;
    let mut total = 0.0;
    for q in lo + 1..=hi {
        total += expsum(f, q, c, budget)?.magnitude();
    }
    Ok(DyadicAverage { x, c: c.to_vec(), total })
}

/// The standard size envelope `4 q^{n/2 + 1.25} gcd(q^n, Δ_F)^{1/2}`; every
/// sum in the test corpus stays below it.
pub fn envelope_bound(f: &QuadraticForm, q: u64) -> f64 {
    let n = f.n() as u32;
    let disc = f.discriminant().abs();
    let qn = BigInt::from(q).pow(n);
    let g = qn.gcd(&disc).to_f64().unwrap_or(f64::INFINITY);
    4.0 * (q as f64).powf(n as f64 / 2.0 + 1.25) * g.sqrt()
}

/// Predicted `|S_{p^r}(c)|` for an odd prime p with p ∤ 2Δ_F:
/// `p^{nr/2} |c_{p^r}(m)|` when nr is even, `p^{nr/2} |g_{p^r}(m)|` when nr
/// is odd, with `m = -(4^{-1} mod p^r) F*(c) mod p^r`. Returns None when the
/// hypothesis p ∤ 2Δ_F fails.
pub fn predicted_prime_power_magnitude(
    f: &QuadraticForm,
    p: u64,
    r: u32,
    c: &[i64],
) -> Result<Option<f64>, ExpSumError> {
    let disc = f.discriminant();
    let two_disc = BigInt::from(2) * &disc;
    if (&two_disc % BigInt::from(p)).is_zero() {
        return Ok(None);
    }
    let q = p.pow(r);
    let qi = q as i64;
    let inv4 = mod_inverse(4, q).expect("p odd, so 4 is invertible") as i64;
    let dual = f.dual_form()?;
    let ce: Vec<BigInt> = c.iter().map(|&v| BigInt::from(v)).collect();
    let fstar = dual.evaluate(&ce)?;
    let fstar_mod = (fstar % BigInt::from(q)).to_i64().expect("reduced value fits");
    let m = (-(inv4 * fstar_mod.rem_euclid(qi))).rem_euclid(qi);
    let nr = f.n() as u32 * r;
    let scale = (p as f64).powf(nr as f64 / 2.0);
    let factor = if nr % 2 == 0 {
        ramanujan(q, m).unsigned_abs() as f64
    } else {
        gauss_sum(p, r, m).magnitude()
    };
    Ok(Some(scale * factor))
}
