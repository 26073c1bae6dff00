//! Integer arithmetic: prime tables, trial-division factorization, largest
//! prime factors, modular inverses and the exact gcd-sum.

use num_integer::Integer;

use crate::error::{Error, Result};

/// Largest `U` accepted by [`gcd_sum`]; the double loop is quadratic.
pub const GCD_SUM_MAX_U: u64 = 100_000;

/// All primes up to `limit`, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Primes `p <= bound`, as a prefix slice.
    pub fn up_to(&self, bound: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= bound);
        &self.primes[..end]
    }

    /// Membership test for `n <= limit`.
    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }
}

/// Sieve of Eratosthenes over `[0, limit]`.
pub fn sieve_primes(limit: u64) -> PrimeTable {
    if limit < 2 {
        return PrimeTable { limit, primes: Vec::new() };
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    PrimeTable { limit, primes }
}

/// Prime factorization `n = prod p^e`, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    /// `P^+(n)`, with `P^+(1) = 1`.
    pub fn largest_prime(&self) -> u64 {
        self.factors.last().map_or(1, |&(p, _)| p)
    }

    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| p.pow(e)).product()
    }
}

/// Trial division of `n` against `table`.
///
/// A cofactor left after exhausting the table is accepted as prime only when
/// it is at most `table.limit()^2`; otherwise the table is too short.
pub fn factorize(n: u64, table: &PrimeTable) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot factor 0".into()));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    for &p in table.primes() {
        if p.saturating_mul(p) > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        let covered = (table.limit() as u128) * (table.limit() as u128) >= rest as u128;
        let last = factors.last().map_or(1, |&(p, _)| p);
        if !covered && !(rest <= table.limit() && table.contains(rest)) {
            return Err(Error::InsufficientTable { n, limit: table.limit() });
        }
        debug_assert!(rest > last);
        factors.push((rest, 1));
    }
    Ok(Factorization { n, factors })
}

/// `P^+(n)`, the largest prime divisor of `n`; `P^+(1) = 1`.
pub fn largest_prime_factor(n: u64) -> u64 {
    assert!(n >= 1, "largest_prime_factor needs n >= 1");
    let mut rest = n;
    let mut largest = 1;
    while rest % 2 == 0 {
        rest /= 2;
        largest = 2;
    }
    let mut d = 3;
    while d * d <= rest {
        while rest % d == 0 {
            rest /= d;
            largest = d;
        }
        d += 2;
    }
    if rest > 1 {
        largest = rest;
    }
    largest
}

/// Modular inverse of `a` modulo `q`, normalised into `[1, q]`.
pub fn mod_inverse(a: i64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if q == 1 {
        return Ok(1);
    }
    let m = q as i128;
    let r = (a as i128).rem_euclid(m);
    let g = r.extended_gcd(&m);
    if g.gcd != 1 {
        return Err(Error::NotInvertible { a, q });
    }
    let inv = g.x.rem_euclid(m);
    Ok(if inv == 0 { q } else { inv as u64 })
}

/// Euler's totient by trial division.
pub fn euler_phi(n: u64) -> u64 {
    let mut rest = n;
    let mut phi = n;
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            while rest % p == 0 {
                rest /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if rest > 1 {
        phi -= phi / rest;
    }
    phi
}

/// Möbius function by trial division.
pub fn mobius(n: u64) -> i32 {
    let mut rest = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            rest /= p;
            if rest % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if rest > 1 {
        sign = -sign;
    }
    sign
}

/// `sum gcd(u1 - u2, k u1 u2)` over distinct `u1, u2` in `(U, 2U]` with
/// `gcd(u1 u2, q) = 1`, evaluated by the direct double loop.
pub fn gcd_sum(u: u64, k: i64, q: u64) -> Result<u128> {
    if u == 0 || u > GCD_SUM_MAX_U {
        return Err(Error::InvalidInput(format!("U must lie in [1, {GCD_SUM_MAX_U}], got {u}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be nonzero".into()));
    }
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let k = k.unsigned_abs() as u128;
    let units: Vec<u64> = (u + 1..=2 * u).filter(|v| v.gcd(&q) == 1).collect();
    let mut total: u128 = 0;
    for (i, &u1) in units.iter().enumerate() {
        for &u2 in &units[i + 1..] {
            let diff = (u2 - u1) as u128;
            let prod = k * u1 as u128 * u2 as u128;
            total += 2 * diff.gcd(&prod);
        }
    }
    Ok(total)
}

/// `gcd_sum(U, k, q) / ((phi(q)/q) U^{2+eta})`, reported by the diagnostics.
pub fn gcd_sum_ratio(u: u64, k: i64, q: u64, eta: f64) -> Result<f64> {
    let s = gcd_sum(u, k, q)? as f64;
    let density = euler_phi(q) as f64 / q as f64;
    Ok(s / (density * (u as f64).powf(2.0 + eta)))
}
