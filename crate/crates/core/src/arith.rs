//! Elementary number-theoretic helpers: gcd, modular inverses, factorization,
//! multiplicative functions and quadratic residue symbols.
//!
//! Everything here works on machine integers; moduli in this crate are desk
//! scale (at most a few thousand), so trial division is plenty.

/// Greatest common divisor of two unsigned integers, `gcd(0, 0) = 0`.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd for signed integers, always nonnegative.
pub fn gcd_i64(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

/// Extended Euclid: returns `(g, s, t)` with `s*a + t*b = g = gcd(a, b)`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, s, t) = ext_gcd(b, a % b);
        (g, t, s - (a / b) * t)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: i64, m: u64) -> Option<u64> {
    let m_i = m as i64;
    let (g, s, _) = ext_gcd(a.rem_euclid(m_i), m_i);
    if g != 1 {
        None
    } else {
        Some(s.rem_euclid(m_i) as u64)
    }
}

/// `base^exp mod m` for `m < 2^32` (enough for every modulus we enumerate).
pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    debug_assert!(m < (1 << 32));
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing prime order. `factorize(1)` is empty.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// All primes `<= n` by Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2;
    while p * p <= n {
        if sieve[p] {
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    (2..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

/// Moebius function.
pub fn mobius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler totient.
pub fn euler_phi(n: u64) -> u64 {
    let mut out = n;
    for (p, _) in factorize(n) {
        out = out / p * (p - 1);
    }
    out
}

/// `p`-adic valuation of `n != 0`.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    assert!(n != 0, "valuation of zero is infinite");
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Legendre symbol `(a/p)` for an odd prime `p`: one of -1, 0, 1.
pub fn legendre(a: i64, p: u64) -> i32 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    // Euler's criterion; p is desk scale so a modular power is fine.
    let e = mod_pow(a, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Jacobi-style symbol `(a/p^r)` used by quadratic Gauss sums: the Legendre
/// symbol raised to the r-th power, with value 0 when `p | a`.
pub fn prime_power_symbol(a: i64, p: u64, r: u32) -> i32 {
    if a.rem_euclid(p as i64) == 0 {
        return 0;
    }
    if r % 2 == 0 {
        1
    } else {
        legendre(a, p)
    }
}

/// Exact integer square root test: `Some(s)` with `s*s == n` when `n` is a
/// perfect square. A mod-64 residue filter rejects most non-squares before
/// the hardware square root runs.
#[inline]
pub fn perfect_sqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    const SQ_MOD_64: u64 = {
        // Bitmask of the quadratic residues modulo 64.
        let mut mask = 0u64;
        let mut k = 0u64;
        while k < 64 {
            mask |= 1 << ((k * k) % 64);
            k += 1;
        }
        mask
    };
    if (SQ_MOD_64 >> ((n as u64) & 63)) & 1 == 0 {
        return None;
    }
    let s = (n as u64).isqrt() as i64;
    if s * s == n {
        Some(s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_and_ext_gcd_agree() {
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                let (g, s, t) = ext_gcd(a, b);
                assert_eq!(g, gcd_i64(a, b) as i64, "gcd mismatch at {a},{b}");
                assert_eq!(s * a + t * b, g, "Bezout identity fails at {a},{b}");
            }
        }
    }

    #[test]
    fn mod_inverse_inverts() {
        for m in 2u64..60 {
            for a in 1..m as i64 {
                match mod_inverse(a, m) {
                    Some(inv) => assert_eq!((a as u64 * inv) % m, 1 % m),
                    None => assert_ne!(gcd(a as u64, m), 1),
                }
            }
        }
    }

    #[test]
    fn factorize_recomposes() {
        for n in 1u64..=3000 {
            let prod: u64 = factorize(n).iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
        }
    }

    #[test]
    fn mobius_matches_sieve_definition() {
        // mu via the divisor-sum identity: sum_{d|n} mu(d) = [n = 1].
        for n in 1u64..=500 {
            let s: i64 = (1..=n).filter(|d| n % d == 0).map(mobius).sum();
            assert_eq!(s, i64::from(n == 1), "Moebius divisor sum at {n}");
        }
    }

    #[test]
    fn phi_matches_direct_count() {
        for n in 1u64..=500 {
            let direct = (1..=n).filter(|&k| gcd(k, n) == 1).count() as u64;
            assert_eq!(euler_phi(n), direct);
        }
    }

    #[test]
    fn legendre_counts_residues() {
        for &p in &[3u64, 5, 7, 11, 13, 17] {
            let squares: std::collections::HashSet<u64> =
                (1..p).map(|a| a * a % p).collect();
            for a in 0..p as i64 {
                let expect = if a == 0 {
                    0
                } else if squares.contains(&(a as u64)) {
                    1
                } else {
                    -1
                };
                assert_eq!(legendre(a, p), expect, "({a}/{p})");
            }
        }
    }

    #[test]
    fn perfect_sqrt_exhaustive_small() {
        for n in 0i64..=100_000 {
            let s = (n as f64).sqrt().round() as i64;
            let expect = if s * s == n { Some(s) } else { None };
            assert_eq!(perfect_sqrt(n), expect, "at {n}");
        }
        assert_eq!(perfect_sqrt(-4), None);
        let big = 3_037_000_499i64;
        assert_eq!(perfect_sqrt(big * big), Some(big));
    }
}
