//! Smooth (friable) numbers: interval sieves, exact counts `Psi(x, y)`,
//! `Psi_q(x, y)` and the local density `K(x, y)`, the Dickman function, the
//! saddle point `alpha(x, y)`, the estimates built on them, and the unique
//! `n = u v` decomposition of a smooth number.

use std::fmt::Write as _;
use std::sync::OnceLock;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{sieve_primes, PrimeTable};
use crate::error::{Error, Result, Warning};
use crate::numeric::{integrate, CompensatedSum};

/// Largest interval length a single [`SmoothSieve`] will hold.
pub const SIEVE_SPAN_CAPACITY: u64 = 1 << 31;
/// Largest upper end accepted by the interval sieves.
pub const SIEVE_HI_CAPACITY: u64 = 1 << 40;
/// Above this `x`, [`psi_q_estimate`] uses `x rho(u)` instead of an exact count.
pub const PSI_EXACT_LIMIT: f64 = 1e9;

const BLOCK: u64 = 1 << 16;

fn check_interval(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 || lo > hi {
        return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi}]")));
    }
    if hi > SIEVE_HI_CAPACITY || hi - lo >= SIEVE_SPAN_CAPACITY {
        return Err(Error::Capacity(format!("sieve interval [{lo}, {hi}]")));
    }
    Ok(())
}

/// Distinct primes dividing `q`.
fn prime_divisors(q: u64) -> Vec<u64> {
    let mut rest = q;
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            out.push(p);
            while rest % p == 0 {
                rest /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        out.push(rest);
    }
    out
}

/// Writes `is_y_smooth(n)` for `n` in `[lo, lo + out.len())`.
///
/// Divides out every prime `p <= min(y, sqrt(hi))`; `n` is `y`-smooth exactly
/// when the cofactor left behind is at most `y`.
fn smooth_block(lo: u64, primes: &[u64], y: f64, rem: &mut Vec<u64>, out: &mut [bool]) {
    let len = out.len() as u64;
    rem.clear();
    rem.extend(lo..lo + len);
    for &p in primes {
        let first = lo.div_ceil(p) * p;
        let mut i = first - lo;
        while i < len {
            let v = &mut rem[i as usize];
            *v /= p;
            while *v % p == 0 {
                *v /= p;
            }
            i += p;
        }
    }
    for (flag, &r) in out.iter_mut().zip(rem.iter()) {
        *flag = (r as f64) <= y;
    }
}

fn sieving_primes(hi: u64, y: f64) -> PrimeTable {
    let root = hi.isqrt();
    let bound = if y >= root as f64 { root } else { y.floor().max(0.0) as u64 };
    sieve_primes(bound)
}

/// Counts `n` in `[lo, hi]` with `P^+(n) <= y` and `gcd(n, q) = 1`.
fn count_smooth(lo: u64, hi: u64, y: f64, q: u64) -> Result<u64> {
    if lo > hi {
        return Ok(0);
    }
    check_interval(lo, hi)?;
    let qs = prime_divisors(q);
    if y >= hi as f64 {
        return Ok((lo..=hi).into_par_iter().filter(|n| n.gcd(&q) == 1).count() as u64);
    }
    let table = sieving_primes(hi, y);
    let primes = table.primes();
    let blocks: Vec<u64> = (lo..=hi).step_by(BLOCK as usize).collect();
    let total = blocks
        .par_iter()
        .map_init(
            || (Vec::new(), vec![false; BLOCK as usize]),
            |(rem, flags), &start| {
                let end = (start + BLOCK - 1).min(hi);
                let len = (end - start + 1) as usize;
                smooth_block(start, primes, y, rem, &mut flags[..len]);
                flags[..len]
                    .iter()
                    .enumerate()
                    .filter(|&(i, &s)| s && qs.iter().all(|p| (start + i as u64) % p != 0))
                    .count() as u64
            },
        )
        .sum();
    Ok(total)
}

const SMOOTH: u8 = 1;
const COPRIME: u8 = 2;

/// Per-integer smoothness and coprimality flags on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct SmoothSieve {
    lo: u64,
    hi: u64,
    y: f64,
    q: u64,
    flags: Vec<u8>,
}

impl SmoothSieve {
    pub fn new(lo: u64, hi: u64, y: f64, q: u64) -> Result<Self> {
        check_interval(lo, hi)?;
        if q == 0 {
            return Err(Error::InvalidInput("q must be positive".into()));
        }
        let len = (hi - lo + 1) as usize;
        let mut flags = vec![0u8; len];
        let table = sieving_primes(hi, y);
        let primes = table.primes();
        flags.par_chunks_mut(BLOCK as usize).enumerate().for_each_init(
            || (Vec::new(), vec![false; BLOCK as usize]),
            |(rem, smooth), (b, chunk)| {
                let start = lo + b as u64 * BLOCK;
                let s = &mut smooth[..chunk.len()];
                if y >= hi as f64 {
                    s.fill(true);
                } else {
                    smooth_block(start, primes, y, rem, s);
                }
                for (f, &is) in chunk.iter_mut().zip(s.iter()) {
                    *f = if is { SMOOTH | COPRIME } else { COPRIME };
                }
            },
        );
        for p in prime_divisors(q) {
            let mut n = lo.div_ceil(p) * p;
            while n <= hi {
                flags[(n - lo) as usize] &= !COPRIME;
                n += p;
            }
        }
        Ok(SmoothSieve { lo, hi, y, q, flags })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    fn flag(&self, n: u64) -> u8 {
        assert!(n >= self.lo && n <= self.hi, "{n} outside [{}, {}]", self.lo, self.hi);
        self.flags[(n - self.lo) as usize]
    }

    /// `P^+(n) <= y`.
    pub fn is_smooth(&self, n: u64) -> bool {
        self.flag(n) & SMOOTH != 0
    }

    pub fn is_coprime(&self, n: u64) -> bool {
        self.flag(n) & COPRIME != 0
    }

    /// Membership in `S_q(y)`.
    pub fn in_set(&self, n: u64) -> bool {
        self.flag(n) == SMOOTH | COPRIME
    }

    /// Members of `S_q(y)` in the interval, ascending.
    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (self.lo..=self.hi).filter(|&n| self.in_set(n))
    }

    pub fn count(&self) -> u64 {
        self.flags.iter().filter(|&&f| f == SMOOTH | COPRIME).count() as u64
    }
}

/// Builds a [`SmoothSieve`] over `[lo, hi]`.
pub fn smooth_sieve(lo: u64, hi: u64, y: f64, q: u64) -> Result<SmoothSieve> {
    SmoothSieve::new(lo, hi, y, q)
}

/// `Psi(x, y) = #{n <= x : P^+(n) <= y}`.
pub fn psi(x: f64, y: f64) -> Result<u64> {
    psi_q(x, y, 1)
}

/// `Psi_q(x, y)`, the count restricted to `gcd(n, q) = 1`.
pub fn psi_q(x: f64, y: f64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    if !(x >= 1.0) {
        return Ok(0);
    }
    count_smooth(1, x.floor() as u64, y, q)
}

/// `K(N, Y) = N^{-1} #{N < n <= 2N : n in S_q(Y)}`.
pub fn local_density(n: f64, y: f64, q: u64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let lo = n.floor() as u64 + 1;
    let hi = (2.0 * n).floor() as u64;
    Ok(count_smooth(lo, hi, y, q)? as f64 / n)
}

/// Samples of the Dickman function on a uniform grid.
///
/// `rho` is 1 on `[0, 1]` and `1 - ln u` on `[1, 2]`; beyond that each node
/// solves `u rho(u) = int_{u-1}^u rho(t) dt` with composite Simpson over the
/// window, so every new value is a positive combination of older ones.
#[derive(Debug, Clone)]
pub struct RhoTable {
    steps_per_unit: usize,
    u_max: usize,
    values: Vec<f64>,
    tol: f64,
}

/// Finest grid tried by [`RhoTable::build`], as `2^k` steps per unit.
const RHO_MAX_LOG_STEPS: u32 = 12;
/// Starting grid, `2^7` steps per unit.
const RHO_MIN_LOG_STEPS: u32 = 7;

impl RhoTable {
    fn integrate(u_max: usize, n: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let mut values = vec![1.0; u_max * n + 1];
        for j in 0..=n {
            values[n + j] = 1.0 - (1.0 + j as f64 * h).ln();
        }
        for i in 2 * n + 1..values.len() {
            let w = &values[i - n..i];
            let (mut odd, mut even) = (0.0, 0.0);
            for k in (1..n).step_by(2) {
                odd += w[k];
            }
            for k in (2..n).step_by(2) {
                even += w[k];
            }
            let u = i as f64 * h;
            values[i] = h / 3.0 * (w[0] + 4.0 * odd + 2.0 * even) / (u - h / 3.0);
        }
        values
    }

    /// Table on `[0, u_max]` whose grid error is estimated below `tol` by
    /// comparing successive step halvings.
    pub fn build(u_max: f64, tol: f64) -> Result<Self> {
        if !(0.0..=500.0).contains(&u_max) {
            return Err(Error::InvalidInput(format!("u_max = {u_max} outside [0, 500]")));
        }
        if !(tol >= 5e-13) {
            return Err(Error::InvalidInput("rho grid tolerance must be at least 5e-13".into()));
        }
        let units = (u_max.ceil() as usize).max(2);
        let mut n = 1usize << RHO_MIN_LOG_STEPS;
        let mut coarse = Self::integrate(units, n);
        loop {
            let fine = Self::integrate(units, 2 * n);
            let diff = coarse.iter().enumerate().map(|(i, &c)| (c - fine[2 * i]).abs()).fold(0.0, f64::max);
            // Richardson: the fine grid's error is about diff / 15
            let estimate = diff / 15.0 + 4.0 * f64::EPSILON;
            if estimate <= tol || 2 * n >= 1 << RHO_MAX_LOG_STEPS {
                if estimate > tol {
                    return Err(Error::NoConvergence(format!("rho grid error {estimate:e} above {tol:e}")));
                }
                return Ok(RhoTable { steps_per_unit: 2 * n, u_max: units, values: fine, tol: estimate });
            }
            n *= 2;
            coarse = fine;
        }
    }

    /// Process-wide table on `[0, 64]`, good to about `1e-12`.
    pub fn shared() -> &'static RhoTable {
        static TABLE: OnceLock<RhoTable> = OnceLock::new();
        TABLE.get_or_init(|| RhoTable::build(64.0, 1e-11).expect("default rho table"))
    }

    pub fn step(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn u_max(&self) -> f64 {
        self.u_max as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `rho(u)` by cubic interpolation inside the unit panel containing `u`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || u > self.u_max as f64 {
            return Err(Error::InvalidInput(format!("u = {u} outside [0, {}]", self.u_max)));
        }
        if u <= 1.0 {
            return Ok(1.0);
        }
        let n = self.steps_per_unit;
        let k = (u.floor() as usize).min(self.u_max - 1);
        let t = (u - k as f64) * n as f64;
        let j0 = (t.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
        let base = k * n + j0;
        let s = t - j0 as f64;
        let v = &self.values[base..base + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        Ok(l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3])
    }

    /// CSV rows `u,rho,tol` at every `stride`-th grid node.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("u,rho,tol\n");
        let stride = stride.max(1);
        for (i, v) in self.values.iter().enumerate().step_by(stride) {
            let _ = writeln!(out, "{},{:e},{:e}", i as f64 * self.step(), v, self.tol);
        }
        out
    }
}

/// `rho(u)` for `0 <= u <= 500`, accurate to `tol`.
pub fn dickman_rho(u: f64, tol: f64) -> Result<f64> {
    if !(0.0..=500.0).contains(&u) {
        return Err(Error::InvalidInput(format!("u = {u} outside [0, 500]")));
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidInput("rho tolerance must be at least 1e-12".into()));
    }
    let shared = RhoTable::shared();
    if u <= shared.u_max() && tol >= shared.tol() * 2.0 {
        return shared.eval(u);
    }
    RhoTable::build(u, tol / 2.0)?.eval(u)
}

/// Root of `sum_{p <= y} log p / (p^alpha - 1) = log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddlePoint {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: u32,
}

const SADDLE_MAX_ITER: u32 = 200;
/// Primes up to this bound enter the saddle-point sum one by one; beyond it
/// the sum is replaced by its prime-density integral.
pub const SADDLE_EXACT_PRIMES: u64 = 1 << 24;

fn saddle_table() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(|| sieve_primes(SADDLE_EXACT_PRIMES))
}

/// `sum_p log p / (p^alpha - 1)` and its derivative in `alpha`, plus
/// `int_{lo}^{hi} dt / (t^alpha - 1)` standing in for the primes in `tail`.
fn saddle_terms(primes: &[u64], tail: Option<(f64, f64)>, alpha: f64) -> Result<(f64, f64)> {
    let mut value = CompensatedSum::new();
    let mut slope = CompensatedSum::new();
    for &p in primes {
        let lp = (p as f64).ln();
        let pa = (alpha * lp).exp();
        let den = pa - 1.0;
        value.add(lp / den);
        slope.add(-lp * lp * pa / (den * den));
    }
    if let Some((lo, hi)) = tail {
        // t = e^s
        let (a, b) = (lo.ln(), hi.ln());
        let (v, _) = integrate(|s| (s * (1.0 - alpha)).exp() / (1.0 - (-alpha * s).exp()), a, b, 16, 1e-11)?;
        let (d, _) = integrate(
            |s| {
                let e = (-alpha * s).exp();
                -s * (s * (1.0 - alpha)).exp() / ((1.0 - e) * (1.0 - e))
            },
            a,
            b,
            16,
            1e-11,
        )?;
        value.add(v);
        slope.add(d);
    }
    Ok((value.value(), slope.value()))
}

/// `alpha(x, y)` by safeguarded Newton iteration from
/// `1 - log(u log u)/log y`.
pub fn saddle_alpha(x: f64, y: f64) -> Result<SaddlePoint> {
    if !(y >= 2.0) || !(x > 1.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("saddle point needs finite y >= 2, x > 1 (x = {x}, y = {y})")));
    }
    let table = saddle_table();
    let limit = SADDLE_EXACT_PRIMES as f64;
    if y <= limit {
        saddle_with_primes(x, y, table.up_to(y.floor() as u64), None)
    } else {
        saddle_with_primes(x, y, table.primes(), Some((limit, y)))
    }
}

fn saddle_with_primes(x: f64, y: f64, primes: &[u64], tail: Option<(f64, f64)>) -> Result<SaddlePoint> {
    let target = x.ln();
    let f = |a: f64| saddle_terms(primes, tail, a).map(|t| t.0 - target);
    let (mut lo, mut hi) = (0.01, 1.5);
    while f(lo)? < 0.0 {
        lo /= 10.0;
        if lo < 1e-12 {
            return Err(Error::NoConvergence("saddle point below 1e-12".into()));
        }
    }
    while f(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::NoConvergence("saddle point above 64".into()));
        }
    }
    let u = target / y.ln();
    let seed = if u * u.ln() > 1.0 { 1.0 - (u * u.ln()).ln() / y.ln() } else { 1.0 };
    let mut alpha = seed.clamp(lo.max(0.01), hi.min(1.5));
    if !(alpha > lo && alpha < hi) {
        alpha = 0.5 * (lo + hi);
    }
    let tol = 1e-12 * target;
    for it in 1..=SADDLE_MAX_ITER {
        let (value, slope) = saddle_terms(primes, tail, alpha)?;
        let residual = value - target;
        if residual.abs() <= tol {
            return Ok(SaddlePoint { x, y, alpha, residual: residual.abs(), iterations: it });
        }
        if residual > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let newton = alpha - residual / slope;
        alpha = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            let residual = f(alpha)?.abs();
            if residual <= 1e-10 * target {
                return Ok(SaddlePoint { x, y, alpha, residual, iterations: it });
            }
        }
    }
    Err(Error::NoConvergence(format!("saddle point for x = {x}, y = {y}")))
}

/// A numerical estimate with the range conditions it was computed under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub warnings: Vec<Warning>,
}

/// `x rho(log x / log y)`.
pub fn hildebrand_estimate(x: f64, y: f64) -> Result<Estimate> {
    if !(y >= 2.0) || !(x >= y) {
        return Err(Error::InvalidInput(format!("need 2 <= y <= x (x = {x}, y = {y})")));
    }
    let mut warnings = Vec::new();
    if x > std::f64::consts::E && y < x.ln().ln().max(0.0).powf(5.0 / 3.0).exp() {
        warnings.push(Warning::HildebrandRange);
    }
    let u = x.ln() / y.ln();
    let rho = dickman_rho(u, 1e-10)?;
    Ok(Estimate { value: x * rho, warnings })
}

/// `Psi(x, y) prod_{p | q, p <= y} (1 - p^{-alpha(x, y)})`.
pub fn psi_q_estimate(x: f64, y: f64, q: u64) -> Result<Estimate> {
    let alpha = saddle_alpha(x, y)?.alpha;
    psi_q_estimate_with_alpha(x, y, q, alpha)
}

/// [`psi_q_estimate`] with the saddle point supplied by the caller.
pub fn psi_q_estimate_with_alpha(x: f64, y: f64, q: u64, alpha: f64) -> Result<Estimate> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let mut warnings = Vec::new();
    if y < x.ln().powi(4) || y > x {
        warnings.push(Warning::EulerProductRange);
    }
    let divisors = prime_divisors(q);
    if divisors.iter().any(|&p| p as f64 > y) {
        warnings.push(Warning::ModulusNotSmooth);
    }
    let base = if x <= PSI_EXACT_LIMIT {
        psi(x, y)? as f64
    } else {
        let est = hildebrand_estimate(x, y)?;
        warnings.extend(est.warnings);
        est.value
    };
    let product: f64 = divisors.iter().filter(|&&p| p as f64 <= y).map(|&p| 1.0 - (p as f64).powf(-alpha)).product();
    Ok(Estimate { value: base * product, warnings })
}

/// `2^{alpha(x, y)}`, the growth factor of `Psi` from `x` to `2x`.
pub fn doubling_factor(x: f64, y: f64) -> Result<f64> {
    Ok(2f64.powf(saddle_alpha(x, y)?.alpha))
}

/// The triple of [`smooth_decompose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub p: u64,
    pub u: u64,
    pub v: u64,
}

/// Splits a `y`-smooth `n > z` as `n = u v` with `z < v <= z p`, `p | v`,
/// every prime of `v` in `[p, y]`, and `P^+(u) <= p`.
///
/// Prime factors are moved into `v` from the largest down until `v > z`;
/// `p` is the last prime moved.
pub fn smooth_decompose(n: u64, x: u64, y: f64, z: f64) -> Result<Decomposition> {
    if !(2.0 <= y && y <= z && z < n as f64 && n <= x) {
        return Err(Error::InvalidInput(format!("need 2 <= y <= z < n <= x (n = {n}, x = {x}, y = {y}, z = {z})")));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    let mut d = 2;
    while d * d <= rest {
        while rest % d == 0 {
            primes.push(d);
            rest /= d;
        }
        d += 1;
    }
    if rest > 1 {
        primes.push(rest);
    }
    if primes.last().is_some_and(|&p| p as f64 > y) {
        return Err(Error::InvalidInput(format!("{n} is not {y}-smooth")));
    }
    let mut v = 1u64;
    for &p in primes.iter().rev() {
        v *= p;
        if v as f64 > z {
            return Ok(Decomposition { p, u: n / v, v });
        }
    }
    unreachable!("v reaches n > z")
}
