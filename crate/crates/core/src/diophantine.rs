//! Quadratic irrationals, continued-fraction convergents, exact `||n alpha||`,
//! and the approximation parameters `X`, `R`, `Y` attached to a convergent
//! denominator `q`.
//!
//! Every decision that depends on the position of `(p + s sqrt d)/r`
//! relative to a rational is made in integer arithmetic by comparing squares;
//! floating point only appears when a final residual is emitted.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::arith::mod_inverse;
use crate::error::{Error, Result};
use crate::smooth::SmoothSieve;

/// Largest interval `[X/4, 4X]` that [`build_target_set`] will sieve.
pub const TARGET_SET_CAPACITY: u64 = 1 << 31;

fn overflow(what: &str) -> Error {
    Error::Capacity(format!("exact surd arithmetic overflowed in {what}"))
}

/// Sign of `a + b sqrt(d)` for `d > 0` not a perfect square.
pub fn surd_sign(a: i128, b: i128, d: i128) -> Result<Ordering> {
    let sa = a.cmp(&0);
    let sb = b.cmp(&0);
    if sb == Ordering::Equal {
        return Ok(sa);
    }
    if sa == Ordering::Equal || sa == sb {
        return Ok(sb);
    }
    if d <= 0 {
        return Err(Error::InvalidInput(format!("surd radicand {d} must be positive")));
    }
    // a and b have opposite signs; the larger magnitude wins
    let a_wins = match (a.checked_mul(a), b.checked_mul(b).and_then(|v| v.checked_mul(d))) {
        (Some(a2), Some(b2d)) => a2 > b2d,
        _ => {
            let (a, b) = (BigInt::from(a), BigInt::from(b));
            &a * &a > &b * &b * BigInt::from(d)
        }
    };
    Ok(if a_wins { sa } else { sb })
}

fn sign_order(s: Sign) -> Ordering {
    match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

fn big_surd_sign(a: &BigInt, b: &BigInt, d: i64) -> Ordering {
    let (sa, sb) = (a.sign(), b.sign());
    if sb == Sign::NoSign {
        return sign_order(sa);
    }
    if sa == Sign::NoSign || sa == sb {
        return sign_order(sb);
    }
    if a * a > b * b * BigInt::from(d) {
        sign_order(sa)
    } else {
        sign_order(sb)
    }
}

/// `a + b sqrt(d)` as `f64`, rationalised when the two terms cancel.
fn surd_to_f64(a: i128, b: i128, d: i128) -> Result<f64> {
    let root = (d as f64).sqrt();
    if a == 0 || b == 0 || (a > 0) == (b > 0) {
        return Ok(a as f64 + b as f64 * root);
    }
    let a2 = a.checked_mul(a).ok_or_else(|| overflow("surd_to_f64"))?;
    let b2d = b.checked_mul(b).and_then(|v| v.checked_mul(d)).ok_or_else(|| overflow("surd_to_f64"))?;
    Ok((a2 - b2d) as f64 / (a as f64 - b as f64 * root))
}

/// `floor(b sqrt(d))` exactly.
fn floor_surd(b: i128, d: i128) -> Result<i128> {
    if b == 0 {
        return Ok(0);
    }
    let b2d = b.checked_mul(b).and_then(|v| v.checked_mul(d)).ok_or_else(|| overflow("floor_surd"))?;
    let root = (b2d as u128).isqrt() as i128;
    Ok(if b > 0 { root } else { -root - 1 })
}

/// The quadratic irrational `(p + s sqrt d) / r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadIrr {
    p: i64,
    s: i64,
    d: i64,
    r: i64,
}

impl QuadIrr {
    /// Validates and normalises to `r > 0`, `gcd(p, s, r) = 1`.
    pub fn new(p: i64, s: i64, d: i64, r: i64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidInput("s must be nonzero".into()));
        }
        if r == 0 {
            return Err(Error::InvalidInput("r must be nonzero".into()));
        }
        if d <= 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        let root = (d as u64).isqrt();
        if root * root == d as u64 {
            return Err(Error::InvalidInput(format!("{d} is a perfect square")));
        }
        let sign = r.signum();
        let g = p.gcd(&s).gcd(&r);
        Ok(QuadIrr { p: sign * p / g, s: sign * s / g, d, r: sign * r / g })
    }

    pub fn golden_ratio() -> Self {
        QuadIrr { p: 1, s: 1, d: 5, r: 2 }
    }

    pub fn sqrt2() -> Self {
        QuadIrr { p: 0, s: 1, d: 2, r: 1 }
    }

    pub fn parts(&self) -> (i64, i64, i64, i64) {
        (self.p, self.s, self.d, self.r)
    }

    /// `-alpha`.
    pub fn neg(&self) -> Self {
        QuadIrr { p: -self.p, s: -self.s, ..*self }
    }

    pub fn to_f64(&self) -> f64 {
        surd_to_f64(self.p as i128, self.s as i128, self.d as i128).expect("i64 parts cannot overflow") / self.r as f64
    }

    /// Exact comparison of `alpha` with `num / den`, `den > 0`.
    pub fn cmp_rational(&self, num: i128, den: i128) -> Result<Ordering> {
        assert!(den > 0);
        Ok(self.cmp_big(&BigInt::from(num), &BigInt::from(den)))
    }

    fn cmp_big(&self, num: &BigInt, den: &BigInt) -> Ordering {
        // alpha - num/den has the sign of (p den - num r) + s den sqrt(d)
        let a = BigInt::from(self.p) * den - num * BigInt::from(self.r);
        let b = BigInt::from(self.s) * den;
        big_surd_sign(&a, &b, self.d)
    }

    /// Exact check of `|alpha - a/q| <= num/den`.
    pub fn within(&self, a: i128, q: i128, num: i128, den: i128) -> Result<bool> {
        let (a, q, num, den) = (BigInt::from(a), BigInt::from(q), BigInt::from(num), BigInt::from(den));
        let big_den = &q * &den;
        let centre = &a * &den;
        let width = &num * &q;
        let upper = self.cmp_big(&(&centre + &width), &big_den);
        let lower = self.cmp_big(&(&centre - &width), &big_den);
        Ok(upper != Ordering::Greater && lower != Ordering::Less)
    }

    /// `||n alpha||`; the nearest integer is found exactly, the residual is
    /// evaluated without cancellation.
    pub fn dist_nearest(&self, n: u64) -> Result<f64> {
        let n = n as i128;
        let p = n.checked_mul(self.p as i128).ok_or_else(|| overflow("dist_nearest"))?;
        let s = n.checked_mul(self.s as i128).ok_or_else(|| overflow("dist_nearest"))?;
        let (d, r) = (self.d as i128, self.r as i128);
        let floor = (p + floor_surd(s, d)?).div_euclid(r);
        // compare the fractional part (p - floor r + s sqrt d)/r with 1/2
        let below = p - floor * r;
        let half = surd_sign(2 * below - r, 2 * s, d)?;
        let dist = if half == Ordering::Greater { surd_to_f64(r - below, -s, d)? } else { surd_to_f64(below, s, d)? };
        Ok((dist / r as f64).max(0.0))
    }

    /// Exact check of `||n alpha|| <= num/den`, `den > 0`.
    pub fn dist_at_most(&self, n: u64, num: i128, den: i128) -> Result<bool> {
        assert!(den > 0);
        let n = n as i128;
        let p = n.checked_mul(self.p as i128).ok_or_else(|| overflow("dist_at_most"))?;
        let s = n.checked_mul(self.s as i128).ok_or_else(|| overflow("dist_at_most"))?;
        let (d, r) = (self.d as i128, self.r as i128);
        let floor = (p + floor_surd(s, d)?).div_euclid(r);
        let below = p - floor * r;
        let mul = |x: i128, y: i128| x.checked_mul(y).ok_or_else(|| overflow("dist_at_most"));
        let sd = mul(s, den)?;
        // fractional part (below + s sqrt d)/r against num/den and 1 - num/den
        let low = surd_sign(mul(below, den)? - mul(num, r)?, sd, d)?;
        if low != Ordering::Greater {
            return Ok(true);
        }
        let high = surd_sign(mul(below, den)? - mul(den - num, r)?, sd, d)?;
        Ok(high != Ordering::Less)
    }

    /// Partial quotients and convergents of the continued fraction.
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>> {
        if count == 0 {
            return Err(Error::InvalidInput("count must be positive".into()));
        }
        let quotients = self.partial_quotients(count + 1)?;
        convergents_from_quotients(&quotients, count)
    }

    /// First `count` partial quotients, from the surd recurrence
    /// `a = floor((P + sqrt D)/Q)`, `P' = aQ - P`, `Q' = (D - P'^2)/Q`.
    pub fn partial_quotients(&self, count: usize) -> Result<Vec<i128>> {
        let sign = self.s.signum() as i128;
        let p0 = self.p as i128 * sign;
        let q0 = self.r as i128 * sign;
        let s = self.s as i128;
        let d0 = s * s * self.d as i128;
        // scale so that Q divides D - P^2
        let scale = q0.abs();
        let mut pp = p0 * scale;
        let mut qq = q0 * scale;
        let dd = d0.checked_mul(scale * scale).ok_or_else(|| overflow("partial_quotients"))?;
        let root = (dd as u128).isqrt() as i128;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let a = if qq > 0 { (pp + root).div_euclid(qq) } else { -((pp + root).div_euclid(-qq)) - 1 };
            out.push(a);
            let next_p =
                a.checked_mul(qq).and_then(|v| v.checked_sub(pp)).ok_or_else(|| overflow("partial_quotients"))?;
            let num = dd - next_p.checked_mul(next_p).ok_or_else(|| overflow("partial_quotients"))?;
            debug_assert_eq!(num % qq, 0);
            qq = num / qq;
            pp = next_p;
        }
        Ok(out)
    }
}

impl fmt::Display for QuadIrr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "quad:{},{},{},{}", self.p, self.s, self.d, self.r)
    }
}

fn convergents_from_quotients(quotients: &[i128], count: usize) -> Result<Vec<Convergent>> {
    let (mut h1, mut h2) = (1i128, 0i128);
    let (mut k1, mut k2) = (0i128, 1i128);
    let mut hk = Vec::with_capacity(quotients.len());
    for &a in quotients {
        let h = a.checked_mul(h1).and_then(|v| v.checked_add(h2)).ok_or_else(|| overflow("convergents"))?;
        let k = a.checked_mul(k1).and_then(|v| v.checked_add(k2)).ok_or_else(|| overflow("convergents"))?;
        hk.push((h, k));
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
    }
    let mut out = Vec::with_capacity(count);
    for (i, &(h, k)) in hk.iter().enumerate().take(count) {
        let a = i64::try_from(h).map_err(|_| overflow("convergent numerator"))?;
        let q = u64::try_from(k).map_err(|_| overflow("convergent denominator"))?;
        // |alpha - h/k| < 1/(k k_next); the final term falls back to 1/k^2
        let next = hk.get(i + 1).map_or(k, |&(_, kn)| kn.max(k));
        out.push(Convergent { a, q, err_num: 1, err_den: k * next });
    }
    Ok(out)
}

/// `a/q` with `|alpha - a/q| <= err_num/err_den <= 1/q^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub a: i64,
    pub q: u64,
    pub err_num: i128,
    pub err_den: i128,
}

/// A decimal approximation `digits * 10^-exp` with `|alpha - value| <= 10^-exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecimalApprox {
    digits: i128,
    exp: u32,
}

impl DecimalApprox {
    pub fn new(digits: i128, exp: u32) -> Result<Self> {
        if exp > 30 {
            return Err(Error::InvalidInput("precision exponent above 30".into()));
        }
        Ok(DecimalApprox { digits, exp })
    }

    fn scale(&self) -> i128 {
        10i128.pow(self.exp)
    }

    /// Convergents shared by every number in the uncertainty interval.
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>> {
        let den = self.scale();
        let lo = rational_quotients(self.digits - 1, den, count + 1);
        let hi = rational_quotients(self.digits + 1, den, count + 1);
        // a shared prefix of partial quotients fixes a cylinder containing alpha;
        // the last shared one is not used since the next quotient is unknown
        let shared: Vec<i128> = lo.iter().zip(&hi).take_while(|(a, b)| a == b).map(|(a, _)| *a).collect();
        if shared.len() < 2 {
            return Ok(Vec::new());
        }
        let usable = (shared.len() - 1).min(count);
        let mut out = convergents_from_quotients(&shared[..usable], usable)?;
        for c in &mut out {
            c.err_den = (c.q as i128) * (c.q as i128);
        }
        Ok(out)
    }

    /// `(||n value||, n 10^-exp)`: a residual and an absolute error bound.
    pub fn dist_nearest(&self, n: u64) -> Result<(f64, f64)> {
        let den = self.scale();
        let num = (n as i128).checked_mul(self.digits).ok_or_else(|| overflow("decimal dist"))?;
        let frac = num.rem_euclid(den);
        let dist = frac.min(den - frac) as f64 / den as f64;
        Ok((dist, n as f64 / den as f64))
    }
}

fn rational_quotients(mut num: i128, mut den: i128, count: usize) -> Vec<i128> {
    let mut out = Vec::new();
    while den != 0 && out.len() < count {
        let a = num.div_euclid(den);
        out.push(a);
        (num, den) = (den, num - a * den);
    }
    out
}

/// An input irrational: exact quadratic surd, or a decimal with error bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alpha {
    Quad(QuadIrr),
    Decimal(DecimalApprox),
}

/// `||n alpha||` together with a certified absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub abs_err: f64,
}

impl Distance {
    /// Certified `||n alpha|| <= bound`.
    pub fn at_most(&self, bound: f64) -> bool {
        self.value + self.abs_err <= bound
    }
}

impl Alpha {
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>> {
        match self {
            Alpha::Quad(a) => a.convergents(count),
            Alpha::Decimal(a) => a.convergents(count),
        }
    }

    pub fn dist_nearest(&self, n: u64) -> Result<Distance> {
        match self {
            Alpha::Quad(a) => {
                let v = a.dist_nearest(n)?;
                Ok(Distance { value: v, abs_err: v * 4.0 * f64::EPSILON })
            }
            Alpha::Decimal(a) => {
                let (value, abs_err) = a.dist_nearest(n)?;
                Ok(Distance { value, abs_err: abs_err + 4.0 * f64::EPSILON })
            }
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// `quad:p,s,d,r` or `dec:<digits>:<precision-exponent>`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognised irrational '{text}'"));
        if let Some(rest) = text.strip_prefix("quad:") {
            let parts: Vec<i64> = rest
                .split(',')
                .map(|t| t.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            let [p, s, d, r] = parts[..] else { return Err(bad()) };
            return Ok(Alpha::Quad(QuadIrr::new(p, s, d, r)?));
        }
        if let Some(rest) = text.strip_prefix("dec:") {
            let (digits, exp) = rest.split_once(':').ok_or_else(bad)?;
            let digits = digits.trim().parse::<i128>().map_err(|_| bad())?;
            let exp = exp.trim().parse::<u32>().map_err(|_| bad())?;
            return Ok(Alpha::Decimal(DecimalApprox::new(digits, exp)?));
        }
        Err(bad())
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Quad(a) => a.fmt(f),
            Alpha::Decimal(a) => write!(f, "dec:{}:{}", a.digits, a.exp),
        }
    }
}

/// First `count` convergents of a quadratic irrational.
pub fn cf_convergents(alpha: &QuadIrr, count: usize) -> Result<Vec<Convergent>> {
    alpha.convergents(count)
}

/// `||n alpha||` for a quadratic irrational.
pub fn dist_nearest(n: u64, alpha: &QuadIrr) -> Result<f64> {
    alpha.dist_nearest(n)
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.3`.
pub fn parse_ratio(text: &str) -> Result<Ratio<i64>> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational: '{text}'"));
    if let Some((n, d)) = text.split_once('/') {
        let n = n.trim().parse::<i64>().map_err(|_| bad())?;
        let d = d.trim().parse::<i64>().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let negative = int.starts_with('-');
        let int = if int.is_empty() || int == "-" { 0 } else { int.parse::<i64>().map_err(|_| bad())? };
        let frac = if frac.is_empty() { 0 } else { frac.parse::<i64>().map_err(|_| bad())? };
        let num = int.abs() * den + frac;
        return Ok(Ratio::new(if negative { -num } else { num }, den));
    }
    Ok(Ratio::from_integer(text.parse::<i64>().map_err(|_| bad())?))
}

/// Upper end of the admissible exponent range.
pub fn theta_limit() -> Ratio<i64> {
    Ratio::new(6, 17)
}

/// `X`, `R`, `Y` for one denominator `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxParams {
    #[serde(serialize_with = "serialize_ratio")]
    pub theta: Ratio<i64>,
    pub q: u64,
    pub x: f64,
    pub r: f64,
    pub y: f64,
    pub c: f64,
}

fn serialize_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl ApproxParams {
    /// Overrides `Y`; `f64::INFINITY` removes the smoothness constraint.
    pub fn with_y(mut self, y: f64) -> Self {
        self.y = y;
        self
    }

    /// Integer range `[ceil(X/4), floor(4X)]`.
    pub fn n_range(&self) -> (u64, u64) {
        ((self.x / 4.0).ceil().max(1.0) as u64, (4.0 * self.x).floor() as u64)
    }

    /// `R/q + 4X/q^2`, the bound on `||n alpha||` for members of the target set.
    pub fn distance_bound(&self) -> f64 {
        let q = self.q as f64;
        self.r / q + 4.0 * self.x / (q * q)
    }
}

/// `X = q^{2/(1+theta)}`, `R = q^{(1-theta)/(1+theta)}`, `Y = (log X)^C`.
pub fn derive_params(q: u64, theta: Ratio<i64>, c: f64) -> Result<ApproxParams> {
    if theta <= Ratio::from_integer(0) || theta >= theta_limit() {
        return Err(Error::InvalidInput(format!("theta = {theta} outside (0, 6/17)")));
    }
    if q < 2 {
        return Err(Error::InvalidInput("q must be at least 2".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    let t = *theta.numer() as f64 / *theta.denom() as f64;
    let qf = q as f64;
    let r = qf.powf((1.0 - t) / (1.0 + t));
    let x = qf * r;
    let y = x.ln().powf(c);
    Ok(ApproxParams { theta, q, x, r, y, c })
}

/// All `n` in `[X/4, 4X]` with `P^+(n) <= Y`, `gcd(n, q) = 1` and
/// `n a mod q` in `[1, floor(R)]`, ascending.
pub fn build_target_set(params: &ApproxParams, a: i64) -> Result<Vec<u64>> {
    let q = params.q;
    if q == 1 {
        return Ok(Vec::new());
    }
    let a_inv = mod_inverse(a, q)?;
    let (lo, hi) = params.n_range();
    if lo > hi {
        return Ok(Vec::new());
    }
    if hi - lo >= TARGET_SET_CAPACITY {
        return Err(Error::Capacity(format!("target interval [{lo}, {hi}] exceeds {TARGET_SET_CAPACITY}")));
    }
    let r_max = (params.r.floor() as u64).min(q - 1);
    let mut out = Vec::new();
    for residue in 1..=r_max {
        if residue.gcd(&q) != 1 {
            continue;
        }
        let start = ((a_inv as u128 * residue as u128) % q as u128) as u64;
        // smallest n >= lo with n = start (mod q)
        let mut n = lo + (start + q - lo % q) % q;
        while n <= hi {
            out.push(n);
            n += q;
        }
    }
    out.sort_unstable();
    if params.y < hi as f64 {
        let sieve = SmoothSieve::new(lo, hi, params.y, 1)?;
        out.retain(|&n| sieve.is_smooth(n));
    }
    Ok(out)
}
