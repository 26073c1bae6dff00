//! Kloosterman-type exponential sums: complete sums `S(a, b; c)`, incomplete
//! sums of `e(b n̄ / c)` over intervals, the smooth-number average
//! `Kl_y(M, x; a, q)` and the upper bound it is compared with.

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::mod_inverse;
use crate::error::{Error, Result};
use crate::numeric::{unit_root, CompensatedSum, ComplexSum};
use crate::smooth::SmoothSieve;

/// Default cap on the number of `(m, n)` pairs visited by [`kl_smooth_average`].
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// Beyond this many terms the inner sums switch to compensated accumulation.
const COMPENSATE_ABOVE: usize = 1_000_000;

fn inverse_unchecked(n: u64, m: u64) -> u64 {
    mod_inverse(n as i64, m).expect("caller filtered gcd(n, m) = 1") % m
}

/// `S(a, b; c)` as a complex number.
pub fn complete_kloosterman_complex(a: i64, b: i64, c: u64) -> Result<Complex64> {
    if c == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    let mut acc = ComplexSum::default();
    for n in 0..c {
        if n.gcd(&c) != 1 {
            continue;
        }
        let inv = if c == 1 { 0 } else { inverse_unchecked(n, c) };
        let phase = a as i128 * n as i128 + b as i128 * inv as i128;
        acc.add(unit_root(phase, c));
    }
    Ok(acc.value())
}

/// The complete Kloosterman sum `sum_{n mod c, (n, c) = 1} e((a n + b n̄)/c)`,
/// which is real.
pub fn complete_kloosterman(a: i64, b: i64, c: u64) -> Result<f64> {
    let z = complete_kloosterman_complex(a, b, c)?;
    assert!(
        z.im.abs() <= 1e-9 * (c as f64 / 1e3).max(1.0),
        "Kloosterman sum S({a}, {b}; {c}) has imaginary part {}",
        z.im
    );
    Ok(z.re)
}

/// `sum_{Z1 < n <= Z2, (n, c) = 1} e(b n̄ / c)`; zero on an empty interval.
pub fn incomplete_inverse_sum(b: i64, c: u64, z1: f64, z2: f64) -> Result<Complex64> {
    if c < 2 {
        return Err(Error::InvalidInput("modulus must be at least 2".into()));
    }
    if !(z1.is_finite() && z2.is_finite()) {
        return Err(Error::InvalidInput("interval ends must be finite".into()));
    }
    let first = z1.floor() as i64 + 1;
    let last = z2.floor() as i64;
    let mut acc = ComplexSum::default();
    for n in first..=last {
        let r = n.rem_euclid(c as i64) as u64;
        if r.gcd(&c) != 1 {
            continue;
        }
        let inv = inverse_unchecked(r, c);
        acc.add(unit_root(b as i128 * inv as i128, c));
    }
    Ok(acc.value())
}

/// Integers `m` with `M < m <= 2M`.
pub fn dyadic_range(m: f64) -> std::ops::RangeInclusive<u64> {
    (m.floor() as u64 + 1)..=((2.0 * m).floor() as u64)
}

/// `Kl_y(M, x; a, q) = sum_{m ~ M} |sum_{n < x, P^+(n) <= y, (n, mq) = 1} e(a n̄ / m)|`.
pub fn kl_smooth_average(m: f64, x: f64, a: i64, q: u64, y: f64) -> Result<f64> {
    kl_smooth_average_above(m, x, a, q, y, 0.0, DEFAULT_BUDGET)
}

/// [`kl_smooth_average`] with the inner sum restricted to `n > z`, under an
/// explicit budget on `#{m} * #{n}`.
pub fn kl_smooth_average_above(m: f64, x: f64, a: i64, q: u64, y: f64, z: f64, budget: u128) -> Result<f64> {
    if !(m >= 2.0) || !(x >= 2.0) {
        return Err(Error::InvalidInput(format!("need M >= 2 and x >= 2 (M = {m}, x = {x})")));
    }
    if a == 0 {
        return Err(Error::InvalidInput("a must be nonzero".into()));
    }
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    // n < x
    let n_max = x.ceil() as u64 - 1;
    let sieve = SmoothSieve::new(1, n_max, y, q)?;
    let ns: Vec<u64> = sieve.members().filter(|&n| n as f64 > z).collect();
    let moduli: Vec<u64> = dyadic_range(m).collect();
    let needed = moduli.len() as u128 * ns.len() as u128;
    if needed > budget {
        return Err(Error::Budget { needed, limit: budget });
    }
    let compensate = ns.len() > COMPENSATE_ABOVE;
    let terms: Vec<f64> = moduli
        .par_iter()
        .map(|&md| {
            let mut plain = Complex64::new(0.0, 0.0);
            let mut comp = ComplexSum::default();
            for &n in &ns {
                if n.gcd(&md) != 1 {
                    continue;
                }
                let z = unit_root(a as i128 * inverse_unchecked(n % md, md) as i128, md);
                if compensate {
                    comp.add(z);
                } else {
                    plain += z;
                }
            }
            if compensate {
                comp.value().norm()
            } else {
                plain.norm()
            }
        })
        .collect();
    Ok(terms.into_iter().collect::<CompensatedSum>().value())
}

/// Parameters of the Kloosterman-average bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KloostermanParams {
    pub m: f64,
    pub x: f64,
    pub a: i64,
    pub q: u64,
    pub y: f64,
    pub z: f64,
    pub eta: f64,
}

impl KloostermanParams {
    /// Checks `M >= 2`, `a != 0`, `q >= 1`, `eta > 0` and `2 <= y <= z < x`.
    pub fn new(m: f64, x: f64, a: i64, q: u64, y: f64, z: f64, eta: f64) -> Result<Self> {
        if !(m >= 2.0) || a == 0 || q == 0 || !(eta > 0.0) {
            return Err(Error::InvalidInput("need M >= 2, a != 0, q >= 1, eta > 0".into()));
        }
        if !(2.0 <= y && y <= z && z < x) {
            return Err(Error::InvalidInput(format!("need 2 <= y <= z < x (y = {y}, z = {z}, x = {x})")));
        }
        Ok(KloostermanParams { m, x, a, q, y, z, eta })
    }
}

/// `(|a| x M)^eta (1 + |a|/(x M))^{1/2} (M x^{1/2} y^{1/2} z^{1/2} + x^{3/2} M^{1/2} z^{-1/4}) + M z`
/// with implied constant 1.
pub fn kloos_bound_rhs(p: &KloostermanParams) -> f64 {
    let a = p.a.unsigned_abs() as f64;
    let xm = p.x * p.m;
    let first = p.m * (p.x * p.y * p.z).sqrt();
    let second = p.x.powf(1.5) * p.m.sqrt() * p.z.powf(-0.25);
    (a * xm).powf(p.eta) * (1.0 + a / xm).sqrt() * (first + second) + p.m * p.z
}

/// `z = x^{2/3}` clamped into `[y, x)`.
pub fn optimal_z(x: f64, y: f64) -> Result<f64> {
    if !(y < x) {
        return Err(Error::InvalidInput(format!("cannot place z in [y, x) for y = {y}, x = {x}")));
    }
    Ok(x.powf(2.0 / 3.0).max(y))
}
