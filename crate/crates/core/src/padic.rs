//! Local solution counts `N_r = #{x mod p^r : F(x) ≡ 0 mod p^r}`, local
//! densities `σ_p = lim_r p^{-r(n-1)} N_r`, and the singular series
//! `𝔖(F) = Π_p σ_p = Σ_q q^{-n} S_q(0)` with explicit tail control, plus the
//! analogous partial sums for biquadratic forms.
//!
//! The limit defining σ_p is evaluated in closed form. Splitting solutions
//! by divisibility of the vector gives `N_r = N*_r + p^n N_{r-2}`, where
//! `N*_r` counts primitive solutions, so with `s_r = p^{-r(n-1)} N*_r`:
//! `σ_p = s_∞ / (1 - p^{-(n-2)})`. The primitive density stabilizes at a
//! finite depth: every invariant factor of 2M has p-valuation at most
//! `v = v_p(2 Δ_F)` (they are each ≥ v_p(2) and multiply to `v_p(det 2M)`),
//! so a primitive solution has gradient valuation `v_p(2Mx) ≤ v`, and Newton
//! lifting applies once `r ≥ 2v + 1`. Hence `s_r = s_{k0}` exactly for all
//! `r ≥ k0 = 2 v_p(2Δ_F) + 1`, and σ_p needs only the exact counts
//! `N_{k0}`, `N_{k0-2}`. For `p ∤ 2Δ_F` this reduces to
//! `σ_p = (N_1 - 1) p^{-(n-1)} / (1 - p^{-(n-2)})`.
//!
//! The stabilization claim is not taken on faith: whenever the work budget
//! allows, the density at depth `k0 + 1` is recomputed by enumeration and
//! compared as an exact rational.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{factorize, legendre, primes_up_to};
use crate::expsums::{expsum, ramanujan_table, ExpSumError};
use crate::forms::{BiquadraticForm, FormError, QuadraticForm};

#[derive(Debug, Error)]
pub enum PadicError {
    #[error("work {work} residue classes exceeds budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("density at p = {p} not stabilized by r_max = {r_max}; depth {needed} is required")]
    NotStabilized { p: u64, r_max: u32, needed: u32 },
    #[error("{0}")]
    InvalidParams(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    ExpSum(#[from] ExpSumError),
}

/// An exact local count `#{x mod p^r : F(x) ≡ 0 mod p^r}`.
#[derive(Debug, Clone)]
pub struct LocalCount {
    pub p: u64,
    pub r: u32,
    pub count: BigInt,
}

/// Which algorithm produced a density value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityRoute {
    EulerProduct,
    QSeries,
    BruteMod,
}

impl DensityRoute {
    pub fn name(&self) -> &'static str {
        match self {
            DensityRoute::EulerProduct => "euler_product",
            DensityRoute::QSeries => "q_series",
            DensityRoute::BruteMod => "brute_mod",
        }
    }
}

/// A density value with a rigorous truncation bound (0 when the value is
/// exact up to rounding) and the truncation parameters that produced it.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub value: f64,
    pub tail_bound: f64,
    pub route: DensityRoute,
    pub params: BTreeMap<String, String>,
}

fn big_valuation(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero(), "valuation of zero is infinite");
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// Counts zeros of F mod m by enumerating all m^n residue vectors with
/// first-difference updates on the innermost digit.
fn count_zeros_direct(f: &QuadraticForm, m: u64, budget: u64) -> Result<u64, PadicError> {
    let n = f.n();
    let work = (m as u128).pow(n as u32);
    if work > budget as u128 {
        return Err(PadicError::BudgetExceeded { work, budget });
    }
    let mi = m as i64;
    let gram: Vec<Vec<i64>> = f
        .gram_i64()?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.rem_euclid(mi)).collect())
        .collect();
    let two_m00 = (2 * gram[0][0]) % mi;
    let mut outer = vec![0i64; n];
    let mut count = 0u64;
    loop {
        let mut base = 0i64;
        for i in 1..n {
            let mut row = 0i64;
            for j in 1..n {
                row = (row + gram[i][j] * outer[j]) % mi;
            }
            base = (base + row * outer[i]) % mi;
        }
        let mut cross = 0i64;
        for j in 1..n {
            cross = (cross + gram[0][j] * outer[j]) % mi;
        }
        let mut fv = base;
        let mut df = (gram[0][0] + 2 * cross) % mi;
        for _ in 0..mi {
            count += (fv == 0) as u64;
            fv += df - mi;
            fv += (fv >> 63) & mi;
            df += two_m00 - mi;
            df += (df >> 63) & mi;
        }
        let mut k = 1;
        loop {
            if k == n {
                return Ok(count);
            }
            outer[k] += 1;
            if outer[k] < mi {
                break;
            }
            outer[k] = 0;
            k += 1;
        }
    }
}

/// `N_1` for an odd prime by fibering over the last n-1 coordinates and
/// counting roots of the residual quadratic in the first one. Work p^{n-1}.
fn count_mod_p_fibered(f: &QuadraticForm, p: u64) -> Result<u64, PadicError> {
    assert!(p % 2 == 1, "fiber counting needs an odd prime");
    let n = f.n();
    let pi = p as i64;
    let gram: Vec<Vec<i64>> = f
        .gram_i64()?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.rem_euclid(pi)).collect())
        .collect();
    let a = gram[0][0];
    let mut x = vec![0i64; n]; // x[0] unused
    let mut count = 0u64;
    loop {
        let mut b = 0i64;
        for j in 1..n {
            b = (b + 2 * gram[0][j] * x[j]) % pi;
        }
        let mut c = 0i64;
        for i in 1..n {
            let mut row = 0i64;
            for j in 1..n {
                row = (row + gram[i][j] * x[j]) % pi;
            }
            c = (c + row * x[i]) % pi;
        }
        let roots = if a % pi != 0 {
            let disc = (b * b - 4 * a * c).rem_euclid(pi);
            (1 + legendre(disc, p)) as u64
        } else if b != 0 {
            1
        } else if c == 0 {
            p
        } else {
            0
        };
        count += roots;
        let mut k = 1;
        loop {
            if k == n {
                return Ok(count);
            }
            x[k] += 1;
            if x[k] < pi {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

/// Exact count of solutions of `F(x) ≡ 0 mod p^r`. Direct enumeration when
/// `p^{rn}` fits the budget; otherwise, for `p ∤ 2Δ_F`, the two-step
/// recursion `N_r = p^{(r-1)(n-1)}(N_1 - 1) + p^n N_{r-2}` seeded by a
/// fibered count of `N_1`.
pub fn count_mod(f: &QuadraticForm, p: u64, r: u32, budget: u64) -> Result<LocalCount, PadicError> {
    if r == 0 {
        return Ok(LocalCount { p, r, count: BigInt::one() });
    }
    let n = f.n();
    let direct_work = (p as u128).checked_pow(r * n as u32);
    if let Some(work) = direct_work {
        if work <= budget as u128 {
            let m = p.pow(r);
            let count = count_zeros_direct(f, m, budget)?;
            return Ok(LocalCount { p, r, count: BigInt::from(count) });
        }
    }
    let disc = f.discriminant();
    if disc.is_zero() {
        return Err(FormError::SingularForm.into());
    }
    let good = p != 2 && big_valuation(&(BigInt::from(2) * &disc), p) == 0;
    if !good {
        return Err(PadicError::BudgetExceeded {
            work: direct_work.unwrap_or(u128::MAX),
            budget,
        });
    }
    let n1 = BigInt::from(count_mod_p_fibered(f, p)?);
    let pn1 = BigInt::from(p).pow(n as u32 - 1); // p^{n-1}
    let pn = BigInt::from(p).pow(n as u32);
    let mut prev = BigInt::one(); // N_0
    let mut cur = n1.clone(); // N_1
    let mut lead = pn1.clone(); // p^{(r-1)(n-1)} tracker for r = 2
    for _ in 2..=r {
        let next = &lead * (&n1 - 1) + &pn * &prev;
        prev = cur;
        cur = next;
        lead *= &pn1;
    }
    Ok(LocalCount { p, r, count: cur })
}

/// Exact densities `p^{-r(n-1)} N_r` for `r = 0..=r_max`, by enumeration.
/// Intended for audits and tests at small depth.
pub fn density_sequence(
    f: &QuadraticForm,
    p: u64,
    r_max: u32,
    budget: u64,
) -> Result<Vec<BigRational>, PadicError> {
    let n = f.n();
    let mut out = vec![BigRational::one()];
    for r in 1..=r_max {
        let count = count_zeros_direct(f, p.pow(r), budget)?;
        let denom = BigInt::from(p).pow(r * (n as u32 - 1));
        out.push(BigRational::new(BigInt::from(count), denom));
    }
    Ok(out)
}

/// The exact primitive density `s_r = p^{-r(n-1)} (N_r - p^n N_{r-2})` by
/// enumeration (with `N*_1 = N_1 - 1`).
fn primitive_density(f: &QuadraticForm, p: u64, r: u32, budget: u64) -> Result<BigRational, PadicError> {
    let n = f.n() as u32;
    let nr = count_mod(f, p, r, budget)?.count;
    let lower = if r >= 2 {
        BigInt::from(p).pow(n) * count_mod(f, p, r - 2, budget)?.count
    } else {
        BigInt::one()
    };
    Ok(BigRational::new(nr - lower, BigInt::from(p).pow(r * (n - 1))))
}

/// The local density `σ_p(F) = lim_r p^{-r(n-1)} N_r`, exactly, via the
/// stabilized primitive density at depth `k0 = 2 v_p(2Δ_F) + 1`.
///
/// `r_max` caps the enumeration depth: if `k0 > r_max` the computation is
/// refused rather than silently truncated. When the budget also covers depth
/// `k0 + 1`, stabilization is verified by exact rational comparison and the
/// check is recorded in the parameters.
pub fn local_density(
    f: &QuadraticForm,
    p: u64,
    r_max: u32,
    budget: u64,
) -> Result<DensityEstimate, PadicError> {
    let n = f.n();
    if n < 3 {
        return Err(PadicError::InvalidParams(format!(
            "local density needs n >= 3 for geometric convergence, got n = {n}"
        )));
    }
    let disc = f.discriminant();
    if disc.is_zero() {
        return Err(FormError::SingularForm.into());
    }
    let v = big_valuation(&(BigInt::from(2) * &disc), p);
    let k0 = 2 * v + 1;
    if k0 > r_max {
        return Err(PadicError::NotStabilized { p, r_max, needed: k0 });
    }
    let mut params = BTreeMap::new();
    params.insert("p".into(), p.to_string());
    params.insert("k0".into(), k0.to_string());
    let s = if v == 0 {
        // Good prime: s = (N_1 - 1) p^{-(n-1)}.
        let n1 = count_mod(f, p, 1, budget)?.count;
        params.insert("n1".into(), n1.to_string());
        BigRational::new(n1 - 1, BigInt::from(p).pow(n as u32 - 1))
    } else {
        let s = primitive_density(f, p, k0, budget)?;
        // Opportunistic exact verification one level deeper.
        let deeper_work = (p as u128).checked_pow((k0 + 1) * n as u32);
        if k0 + 1 <= r_max && deeper_work.is_some_and(|w| w <= budget as u128) {
            let s_next = primitive_density(f, p, k0 + 1, budget)?;
            if s_next != s {
                return Err(PadicError::NotStabilized { p, r_max, needed: k0 + 2 });
            }
            params.insert("verified_depth".into(), (k0 + 1).to_string());
        }
        s
    };
    // sigma_p = s / (1 - p^{-(n-2)}).
    let pn2 = BigInt::from(p).pow(n as u32 - 2);
    let geom = BigRational::new(pn2.clone(), pn2 - 1);
    let sigma = s * geom;
    params.insert("sigma_exact".into(), sigma.to_string());
    Ok(DensityEstimate {
        value: sigma.to_f64().expect("desk-scale density fits f64"),
        tail_bound: 0.0,
        route: DensityRoute::BruteMod,
        params,
    })
}

/// Tail of the Euler product over good primes `> p_max`: for every such p,
/// `|σ_p - 1| ≤ Σ_{s ≥ 1, ns even} p^{-s(n-2)/2}` by the exact magnitude of
/// `S_{p^s}(0)`, and the sum over primes is bounded by the integral of the
/// matching power.
fn euler_tail(n: usize, p_max: u64) -> f64 {
    let nf = n as f64;
    let x = (p_max as f64).powf(-(nf - 2.0) / 2.0);
    let per_prime_scale = 1.0 / (1.0 - x * x).max(f64::EPSILON);
    let sum = if n % 2 == 0 {
        // All s >= 1 contribute: bound sum_{m > P} m^{-(n-2)/2} / (1 - x).
        let s = (nf - 2.0) / 2.0;
        assert!(s > 1.0, "even n needs n >= 6 for a convergent prime tail");
        (p_max as f64).powf(1.0 - s) / (s - 1.0) / (1.0 - x).max(f64::EPSILON)
    } else {
        // Only even s contribute: per-prime bound p^{-(n-2)} / (1 - p^{-(n-2)}).
        let s = nf - 2.0;
        (p_max as f64).powf(1.0 - s) / (s - 1.0) * per_prime_scale
    };
    sum.exp_m1()
}

/// Both routes to `𝔖(F)`: the Euler product of exact local densities over
/// `p ≤ p_max`, and the partial sum `Σ_{q ≤ q_max} q^{-n} S_q(0)` with the
/// standard-envelope tail `4 |Δ_F|^{1/2} Σ_{q > q_max} q^{-(n/2 - 1.25)}`.
pub fn singular_series_routes(
    f: &QuadraticForm,
    q_max: u64,
    p_max: u64,
    budget: u64,
) -> Result<(DensityEstimate, DensityEstimate), PadicError> {
    let n = f.n();
    if n < 5 {
        return Err(PadicError::InvalidParams(format!(
            "singular series needs n >= 5 for absolute convergence, got n = {n}"
        )));
    }
    let disc = f.discriminant();
    if disc.is_zero() {
        return Err(FormError::SingularForm.into());
    }
    let two_disc = (BigInt::from(2) * &disc).abs();
    let bad_max = two_disc
        .to_u64()
        .map(|v| factorize(v).last().map(|&(p, _)| p).unwrap_or(1))
        .ok_or_else(|| PadicError::InvalidParams("2|Δ_F| exceeds 64 bits".into()))?;
    if bad_max > p_max {
        return Err(PadicError::InvalidParams(format!(
            "p_max = {p_max} must cover every prime dividing 2Δ_F (largest is {bad_max})"
        )));
    }

    let mut euler_value = 1.0;
    let mut params = BTreeMap::new();
    for p in primes_up_to(p_max) {
        let sigma_p = local_density(f, p, 6, budget)?;
        euler_value *= sigma_p.value;
        if p <= 13 {
            params.insert(format!("sigma_{p:02}"), format!("{:.12e}", sigma_p.value));
        }
    }
    let tail_rel = euler_tail(n, p_max);
    params.insert("p_max".into(), p_max.to_string());
    params.insert("tail_model".into(), "good-prime exact magnitudes".into());
    let euler = DensityEstimate {
        value: euler_value,
        tail_bound: euler_value.abs() * tail_rel,
        route: DensityRoute::EulerProduct,
        params,
    };

    let mut sum = 0.0;
    let mut max_im: f64 = 0.0;
    for q in 1..=q_max {
        let s = expsum(f, q, &vec![0; n], budget)?;
        sum += s.re / (q as f64).powi(n as i32);
        max_im = max_im.max((s.im / (q as f64).powi(n as i32)).abs());
    }
    // Tail: 4 |Δ|^{1/2} Σ_{q > q_max} q^{-(n/2-1.25)} ≤ 4 |Δ|^{1/2} Q^{1-s}/(s-1).
    let s_exp = n as f64 / 2.0 - 1.25;
    assert!(s_exp > 1.0, "n >= 5 was checked above");
    let disc_f = disc.abs().to_f64().unwrap_or(f64::INFINITY);
    let q_tail = 4.0 * disc_f.sqrt() * (q_max as f64).powf(1.0 - s_exp) / (s_exp - 1.0);
    let mut q_params = BTreeMap::new();
    q_params.insert("q_max".into(), q_max.to_string());
    q_params.insert("envelope".into(), "4 q^(n/2+1.25) gcd(q^n, disc)^(1/2)".into());
    q_params.insert("max_imaginary_term".into(), format!("{max_im:.3e}"));
    let q_series = DensityEstimate {
        value: sum,
        tail_bound: q_tail,
        route: DensityRoute::QSeries,
        params: q_params,
    };
    Ok((euler, q_series))
}

/// `𝔖(F)` by the Euler-product route, with the q-series value and tail
/// recorded alongside for auditing.
pub fn singular_series(
    f: &QuadraticForm,
    q_max: u64,
    p_max: u64,
    budget: u64,
) -> Result<DensityEstimate, PadicError> {
    let (mut euler, q_series) = singular_series_routes(f, q_max, p_max, budget)?;
    euler
        .params
        .insert("q_series_value".into(), format!("{:.12e}", q_series.value));
    euler
        .params
        .insert("q_series_tail".into(), format!("{:.12e}", q_series.tail_bound));
    Ok(euler)
}

/// Per-q terms `q^{-2n} Σ_{a mod q}* Σ_{x,y mod q} e_q(a F(x;y))` of the
/// biquadratic series, for `q = 1..=q_max`. The a-sum is folded into a
/// Ramanujan factor; `F(x;y) mod q` is read off the doubled slice Gram
/// `2 G_x mod 2q`, whose values are even, so the halving is exact.
pub fn joint_series_terms(
    form: &BiquadraticForm,
    q_max: u64,
    budget: u64,
) -> Result<Vec<f64>, PadicError> {
    let n = form.n();
    let coeffs = form.coeffs_i64()?;
    let mut terms = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let work = (q as u128).checked_pow(2 * n as u32 + 1).unwrap_or(u128::MAX);
        if work > budget as u128 {
            return Err(PadicError::BudgetExceeded { work, budget });
        }
        if q == 1 {
            terms.push(1.0);
            continue;
        }
        let qi = q as i64;
        let m2 = 2 * qi;
        // cq2[v] = c_q(v/2) for the even residues v of 2F mod 2q.
        let cq = ramanujan_table(q);
        let mut cq2 = vec![0i64; m2 as usize];
        for v in 0..qi {
            cq2[(2 * v) as usize] = cq[v as usize];
        }
        let mut total: i128 = 0;
        let mut x = vec![0i64; n];
        loop {
            // Doubled slice Gram D = 2 G_x mod 2q.
            let mut d = vec![vec![0i64; n]; n];
            for &(i, j, k, l, c) in &coeffs {
                let xpart = (c.rem_euclid(m2) * ((x[i] * x[j]) % m2)) % m2;
                if k == l {
                    d[k][k] = (d[k][k] + 2 * xpart) % m2;
                } else {
                    d[k][l] = (d[k][l] + xpart) % m2;
                    d[l][k] = (d[l][k] + xpart) % m2;
                }
            }
            let two_d00 = (2 * d[0][0]) % m2;
            let mut y = vec![0i64; n];
            loop {
                let mut base = 0i64;
                for i in 1..n {
                    let mut row = 0i64;
                    for j in 1..n {
                        row = (row + d[i][j] * y[j]) % m2;
                    }
                    base = (base + row * y[i]) % m2;
                }
                let mut cross = 0i64;
                for j in 1..n {
                    cross = (cross + d[0][j] * y[j]) % m2;
                }
                let mut fv = base.rem_euclid(m2);
                let mut df = (d[0][0] + 2 * cross).rem_euclid(m2);
                for _ in 0..qi {
                    total += cq2[fv as usize] as i128;
                    fv += df - m2;
                    fv += (fv >> 63) & m2;
                    df += two_d00 - m2;
                    df += (df >> 63) & m2;
                }
                let mut k = 1;
                let mut done = false;
                loop {
                    if k == n {
                        done = true;
                        break;
                    }
                    y[k] += 1;
                    if y[k] < qi {
                        break;
                    }
                    y[k] = 0;
                    k += 1;
                }
                if done {
                    break;
                }
            }
            let mut k = 0;
            let mut done = false;
            loop {
                if k == n {
                    done = true;
                    break;
                }
                x[k] += 1;
                if x[k] < qi {
                    break;
                }
                x[k] = 0;
                k += 1;
            }
            if done {
                break;
            }
        }
        terms.push(total as f64 / (q as f64).powi(2 * n as i32));
    }
    Ok(terms)
}

/// Partial sum of the biquadratic singular series up to `q_max`. No
/// rigorous tail is known for this series; the magnitude of the last term
/// is reported as a heuristic indicator.
pub fn joint_singular_series(
    form: &BiquadraticForm,
    q_max: u64,
    budget: u64,
) -> Result<DensityEstimate, PadicError> {
    let terms = joint_series_terms(form, q_max, budget)?;
    let value = terms.iter().sum();
    let last = terms.last().copied().unwrap_or(0.0).abs();
    let mut params = BTreeMap::new();
    params.insert("q_max".into(), q_max.to_string());
    params.insert("tail_model".into(), "heuristic last-term magnitude".into());
    Ok(DensityEstimate {
        value,
        tail_bound: last,
        route: DensityRoute::QSeries,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    const BUDGET: u64 = 400_000_000;

    fn random_form(rng: &mut StdRng, n: usize, bound: i64) -> QuadraticForm {
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-bound..=bound);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        QuadraticForm::from_rows(&rows).unwrap()
    }

    /// Independent reference count: decode every index into a vector and
    /// evaluate the form in BigInt arithmetic.
    fn literal_count(f: &QuadraticForm, m: u64) -> u64 {
        let n = f.n();
        let mut count = 0;
        for idx in 0..(m as u128).pow(n as u32) {
            let mut rem = idx;
            let x: Vec<i64> = (0..n)
                .map(|_| {
                    let d = (rem % m as u128) as i64;
                    rem /= m as u128;
                    d
                })
                .collect();
            let v = f.evaluate_i64(&x).unwrap();
            if (v % BigInt::from(m)).is_zero() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn count_mod_examples() {
        let f = QuadraticForm::diagonal(&[1, 1]).unwrap();
        assert_eq!(count_mod(&f, 3, 1, BUDGET).unwrap().count, BigInt::from(1));
        assert_eq!(count_mod(&f, 5, 1, BUDGET).unwrap().count, BigInt::from(9));
        assert_eq!(count_mod(&f, 7, 0, BUDGET).unwrap().count, BigInt::one());
    }

    #[test]
    fn direct_count_matches_literal_oracle() {
        let mut rng = StdRng::seed_from_u64(301);
        for _ in 0..8 {
            let n = rng.random_range(2..=3);
            let f = random_form(&mut rng, n, 4);
            for m in [2u64, 3, 4, 5, 8, 9] {
                let got = count_zeros_direct(&f, m, BUDGET).unwrap();
                let want = literal_count(&f, m);
                assert_eq!(got, want, "mod {m} on {:?}", f.gram());
            }
        }
    }

    #[test]
    fn fibered_count_matches_enumeration() {
        let mut rng = StdRng::seed_from_u64(302);
        for _ in 0..6 {
            let n = rng.random_range(2..=4);
            let f = random_form(&mut rng, n, 5);
            for p in [3u64, 5, 7, 11] {
                let fibered = count_mod_p_fibered(&f, p).unwrap();
                let direct = count_zeros_direct(&f, p, BUDGET).unwrap();
                assert_eq!(fibered, direct, "p = {p} on {:?}", f.gram());
            }
        }
    }

    #[test]
    fn good_prime_recursion_matches_enumeration() {
        let mut rng = StdRng::seed_from_u64(303);
        for n in [3usize, 4, 5] {
            for p in [3u64, 5, 7] {
                let mut tested = 0;
                while tested < 2 {
                    let f = random_form(&mut rng, n, 3);
                    let disc = f.discriminant();
                    if disc.is_zero() || (BigInt::from(2) * &disc % BigInt::from(p)).is_zero() {
                        continue;
                    }
                    let n1 = count_zeros_direct(&f, p, BUDGET).unwrap();
                    let mut counts = vec![BigInt::one(), BigInt::from(n1)];
                    for r in 2..=3u32 {
                        if (p as u128).pow(r * n as u32) > 200_000_000 {
                            break;
                        }
                        let enumerated = BigInt::from(count_zeros_direct(&f, p.pow(r), BUDGET).unwrap());
                        let lead = BigInt::from(p).pow((r - 1) * (n as u32 - 1));
                        let predicted =
                            &lead * (&counts[1] - 1) + BigInt::from(p).pow(n as u32) * &counts[(r - 2) as usize];
                        assert_eq!(
                            enumerated, predicted,
                            "recursion vs enumeration at p={p} r={r} n={n}"
                        );
                        counts.push(enumerated);
                    }
                    tested += 1;
                }
            }
        }
    }

    #[test]
    fn count_mod_recursion_route_agrees_with_direct() {
        // Forms where p^{rn} is large enough that count_mod picks the
        // recursion under a small budget.
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        let direct = count_mod(&f, 3, 2, BUDGET).unwrap().count;
        let recursed = count_mod(&f, 3, 2, 3u64.pow(10) - 1).unwrap().count;
        assert_eq!(direct, recursed);
    }

    #[test]
    fn densities_converge_monotonically_per_parity() {
        let f = QuadraticForm::diagonal(&[1, 1, -1]).unwrap();
        let d = density_sequence(&f, 3, 6, BUDGET).unwrap();
        // Same-parity chains are monotone and contract by at least p^{n-2}.
        for start in [1usize, 2] {
            let diffs: Vec<BigRational> = (start..d.len() - 2)
                .step_by(2)
                .map(|r| &d[r + 2] - &d[r])
                .collect();
            for w in diffs.windows(2) {
                assert!(
                    w[0].is_zero() || w[0].is_positive() == w[1].is_positive() || w[1].is_zero(),
                    "chain changed direction"
                );
                assert!(
                    w[1].abs() * BigRational::from(BigInt::from(3)) <= w[0].abs(),
                    "contraction factor below p^(n-2)"
                );
            }
        }
    }

    #[test]
    fn good_prime_closed_form_matches_deep_enumeration() {
        let f = QuadraticForm::diagonal(&[1, 2, -1]).unwrap(); // disc = -2
        for p in [3u64, 5, 7] {
            let est = local_density(&f, p, 6, BUDGET).unwrap();
            let d = density_sequence(&f, p, if p == 3 { 5 } else { 3 }, BUDGET).unwrap();
            let last = d.last().unwrap().to_f64().unwrap();
            let x = (p as f64).powi(-1); // p^{-(n-2)}, n = 3
            let depth = (d.len() - 1) / 2;
            let tol = est.value.abs().max(1.0) * 2.0 * x.powi(depth as i32);
            assert!(
                (est.value - last).abs() <= tol,
                "p = {p}: closed form {} vs depth-{} enumeration {last} (tol {tol})",
                est.value,
                d.len() - 1
            );
        }
    }

    #[test]
    fn model_form_density_at_three() {
        // n = 5 indefinite diagonal form: recursion agrees with brute
        // densities at each depth r <= 3.
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        let d = density_sequence(&f, 3, 3, BUDGET).unwrap();
        let n1 = count_mod_p_fibered(&f, 3).unwrap();
        let mut counts = vec![BigInt::one(), BigInt::from(n1)];
        for r in 2..=3u32 {
            let lead = BigInt::from(3).pow((r - 1) * 4);
            let next = &lead * (&counts[1] - 1) + BigInt::from(3).pow(5) * &counts[(r - 2) as usize];
            counts.push(next);
        }
        for r in 1..=3usize {
            let predicted = BigRational::new(counts[r].clone(), BigInt::from(3).pow(r as u32 * 4));
            let gap = (&d[r] - &predicted).to_f64().unwrap().abs();
            assert!(gap < 1e-12, "depth {r}: {} vs {}", d[r], predicted);
        }
    }

    #[test]
    fn anisotropic_binary_sum_of_squares_has_zero_two_adic_density() {
        let f = QuadraticForm::diagonal(&[1, 1, 1]).unwrap();
        let est = local_density(&f, 2, 6, BUDGET).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.value >= 0.0);
        assert_eq!(est.params["k0"], "3");
    }

    #[test]
    fn bad_prime_density_verified_one_level_deeper() {
        // disc(F) = -2: p = 2 has v_2(2 disc) = 2, so k0 = 5 and the
        // verification pass runs at depth 6 within budget.
        let f = QuadraticForm::diagonal(&[1, 2, -1]).unwrap();
        let est = local_density(&f, 2, 6, BUDGET).unwrap();
        assert_eq!(est.params["k0"], "5");
        assert_eq!(est.params["verified_depth"], "6");
        assert!(est.value > 0.0, "isotropic ternary form has positive density");
    }

    #[test]
    fn stabilization_depth_is_enforced() {
        let f = QuadraticForm::diagonal(&[1, 2, -1]).unwrap();
        match local_density(&f, 2, 3, BUDGET) {
            Err(PadicError::NotStabilized { p: 2, r_max: 3, needed: 5 }) => {}
            other => panic!("expected NotStabilized, got {other:?}"),
        }
    }

    #[test]
    fn singular_series_routes_agree_within_tails() {
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        let (euler, q_series) = singular_series_routes(&f, 40, 40, BUDGET).unwrap();
        assert!(euler.value > 0.0, "isotropic form has positive singular series");
        let gap = (euler.value - q_series.value).abs();
        assert!(
            gap <= euler.tail_bound + q_series.tail_bound,
            "routes differ by {gap}, tails {} + {}",
            euler.tail_bound,
            q_series.tail_bound
        );
        // The Euler tail is tight; the observed gap should also be small in
        // absolute terms.
        assert!(gap < 0.05, "observed route gap {gap} unexpectedly large");
    }

    #[test]
    fn singular_series_invariant_under_permutation() {
        let f = QuadraticForm::diagonal(&[1, 2, 3, 1, -1]).unwrap();
        let g = QuadraticForm::diagonal(&[-1, 1, 3, 2, 1]).unwrap();
        let a = singular_series(&f, 20, 30, BUDGET).unwrap();
        let b = singular_series(&g, 20, 30, BUDGET).unwrap();
        assert_eq!(a.value, b.value, "relabeling variables must not change the series");
    }

    #[test]
    fn joint_series_base_and_bounds() {
        let form = BiquadraticForm::diagonal_squares(3, -1);
        let terms = joint_series_terms(&form, 6, BUDGET).unwrap();
        assert_eq!(terms[0], 1.0);
        for (i, t) in terms.iter().enumerate() {
            let q = i as u64 + 1;
            assert!(
                t.abs() <= crate::arith::euler_phi(q) as f64 + 1e-9,
                "term at q = {q} exceeds phi(q)"
            );
        }
        let est = joint_singular_series(&form, 1, BUDGET).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn joint_series_matches_literal_triple_loop() {
        let form = BiquadraticForm::diagonal_squares(3, -1);
        let n = 3usize;
        for q in 2u64..=5 {
            let qi = q as i64;
            let mut re = 0.0;
            let mut im = 0.0;
            for a in 1..q {
                if crate::arith::gcd(a, q) != 1 {
                    continue;
                }
                for xi in 0..(q as u128).pow(n as u32) {
                    let mut rem = xi;
                    let x: Vec<i64> = (0..n)
                        .map(|_| {
                            let d = (rem % q as u128) as i64;
                            rem /= q as u128;
                            d
                        })
                        .collect();
                    for yi in 0..(q as u128).pow(n as u32) {
                        let mut rem = yi;
                        let y: Vec<i64> = (0..n)
                            .map(|_| {
                                let d = (rem % q as u128) as i64;
                                rem /= q as u128;
                                d
                            })
                            .collect();
                        let v = form.evaluate_i64(&x, &y).unwrap();
                        let t = ((BigInt::from(a as i64) * v) % BigInt::from(q))
                            .to_i64()
                            .unwrap()
                            .rem_euclid(qi);
                        let angle = TAU * t as f64 / q as f64;
                        re += angle.cos();
                        im += angle.sin();
                    }
                }
            }
            let literal = re / (q as f64).powi(2 * n as i32);
            assert!(im.abs() / (q as f64).powi(2 * n as i32) < 1e-9, "q-term must be real");
            let term = joint_series_terms(&form, q, BUDGET).unwrap()[q as usize - 1];
            assert!(
                (term - literal).abs() < 1e-9,
                "q = {q}: collapsed {term} vs literal {literal}"
            );
        }
    }
}
