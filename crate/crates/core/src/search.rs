//! Smooth approximants: for each convergent `a/q` of `alpha`, the target set
//! at level `q` with every member's `||n alpha||` checked against
//! `R/q + 4X/q^2`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{mod_inverse, sieve_primes};
use crate::diophantine::{build_target_set, derive_params, Alpha, ApproxParams, Convergent};
use crate::error::{Error, Result};

/// One emitted integer `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Member {
    pub n: u64,
    /// `||n alpha||`.
    pub dist: f64,
    /// `n^{-theta}`.
    pub n_pow: f64,
    /// `P^+(n)`.
    pub lpf: u64,
    /// `||n alpha|| <= R/q + 4X/q^2`, decided exactly for quadratic surds.
    pub within_bound: bool,
    /// `||n alpha|| < n^{-theta}`.
    pub strong: bool,
}

/// The members found at one convergent denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub q: u64,
    pub a: i64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub bound: f64,
    pub members: Vec<Member>,
}

/// Search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub alpha: Alpha,
    pub theta: Ratio<i64>,
    pub c: f64,
    /// Overrides `Y = (log X)^C`; `f64::INFINITY` drops smoothness.
    pub y: Option<f64>,
    pub q_min: u64,
    pub q_max: u64,
    pub budget: u128,
}

const MAX_CONVERGENTS: usize = 256;

/// Convergents with `q_min <= q <= q_max` and `q >= 2`, first occurrence of each `q`.
pub fn convergents_in_range(alpha: &Alpha, q_min: u64, q_max: u64) -> Result<Vec<Convergent>> {
    let mut count = 16;
    let all = loop {
        // a decimal stops early once its certified quotients run out
        let cs = match alpha.convergents(count) {
            Ok(cs) => cs,
            // denominators past 64 bits are beyond any q_max; keep the ones that fit
            Err(Error::Capacity(_)) if count > 16 => {
                let mut k = count / 2;
                while k + 1 < count && alpha.convergents(k + 1).is_ok() {
                    k += 1;
                }
                break alpha.convergents(k)?;
            }
            Err(e) => return Err(e),
        };
        let done = cs.len() < count || cs.last().is_some_and(|c| c.q > q_max) || count >= MAX_CONVERGENTS;
        if done {
            break cs;
        }
        count *= 2;
    };
    let mut out: Vec<Convergent> = Vec::new();
    for c in all {
        if c.q >= 2 && c.q >= q_min && c.q <= q_max && out.last().is_none_or(|p| p.q != c.q) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Bound `R/q + 4X/q^2` as `num / 2^k`, rounded down.
fn dyadic_floor(bound: f64, k: u32) -> (i128, i128) {
    let den = 1i128 << k;
    ((bound * den as f64).floor() as i128, den)
}

fn check_member(alpha: &Alpha, n: u64, bound: f64) -> Result<(f64, bool)> {
    let dist = alpha.dist_nearest(n)?;
    let within = match alpha {
        Alpha::Quad(a) => {
            let mut verdict = None;
            for k in [40u32, 30, 20] {
                let (num, den) = dyadic_floor(bound, k);
                match a.dist_at_most(n, num, den) {
                    Ok(v) => {
                        verdict = Some(v);
                        break;
                    }
                    Err(Error::Capacity(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            verdict.ok_or_else(|| Error::Capacity(format!("n = {n} too large for exact distance check")))?
        }
        Alpha::Decimal(_) => dist.at_most(bound),
    };
    Ok((dist.value, within))
}

/// `P^+` of `start + k step` for `0 <= k < count`, sieving the progression by
/// every prime up to `sqrt` of its last term.
pub fn progression_lpf(start: u64, step: u64, count: usize, primes: &[u64]) -> Vec<u64> {
    let mut rest: Vec<u64> = (0..count as u64).map(|k| start + k * step).collect();
    let mut largest = vec![1u64; count];
    let last = rest.last().copied().unwrap_or(0);
    for &p in primes {
        if p * p > last {
            break;
        }
        let first = if step % p == 0 {
            if start % p != 0 {
                continue;
            }
            0
        } else {
            // start + k step = 0 (mod p)
            let inv = mod_inverse((step % p) as i64, p).expect("p prime, p does not divide step");
            ((p - start % p) % p * inv % p) as usize
        };
        let stride = if step % p == 0 { 1 } else { p as usize };
        let mut k = first;
        while k < count {
            while rest[k] % p == 0 {
                rest[k] /= p;
                largest[k] = p;
            }
            k += stride;
        }
    }
    for (l, r) in largest.iter_mut().zip(rest) {
        if r > 1 {
            *l = (*l).max(r);
        }
    }
    largest
}

/// `P^+(n)` for every element of `ns`, grouped by residue modulo `q`.
fn members_lpf(ns: &[u64], q: u64) -> Vec<u64> {
    let Some(&hi) = ns.iter().max() else { return Vec::new() };
    let primes = sieve_primes(hi.isqrt() + 1);
    let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &n) in ns.iter().enumerate() {
        classes.entry(n % q).or_default().push(i);
    }
    let mut out = vec![0u64; ns.len()];
    for idx in classes.values() {
        let lo = idx.iter().map(|&i| ns[i]).min().expect("nonempty class");
        let top = idx.iter().map(|&i| ns[i]).max().expect("nonempty class");
        let lpf = progression_lpf(lo, q, ((top - lo) / q + 1) as usize, primes.primes());
        for &i in idx {
            out[i] = lpf[((ns[i] - lo) / q) as usize];
        }
    }
    out
}

fn search_one(cfg: &SearchConfig, conv: &Convergent) -> Result<SearchResult> {
    let mut params: ApproxParams = derive_params(conv.q, cfg.theta, cfg.c)?;
    if let Some(y) = cfg.y {
        params = params.with_y(y);
    }
    let theta = *cfg.theta.numer() as f64 / *cfg.theta.denom() as f64;
    let bound = params.distance_bound();
    let ns = build_target_set(&params, conv.a)?;
    let lpf = members_lpf(&ns, params.q);
    let members = ns
        .par_iter()
        .zip(lpf.par_iter())
        .map(|(&n, &lpf)| {
            let (dist, within_bound) = check_member(&cfg.alpha, n, bound)?;
            let n_pow = (n as f64).powf(-theta);
            Ok(Member { n, dist, n_pow, lpf, within_bound, strong: dist < n_pow })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchResult { q: params.q, a: conv.a, x: params.x, r: params.r, y: params.y, bound, members })
}

/// Iterations needed to enumerate the target sets of `convs`.
fn search_cost(cfg: &SearchConfig, convs: &[Convergent]) -> Result<u128> {
    let mut total = 0u128;
    for c in convs {
        let p = derive_params(c.q, cfg.theta, cfg.c)?;
        let (lo, hi) = p.n_range();
        let per_residue = (hi.saturating_sub(lo) / c.q + 1) as u128;
        total += p.r.floor() as u128 * per_residue;
    }
    Ok(total)
}

/// One [`SearchResult`] per convergent denominator in `[q_min, q_max]`,
/// ascending in `q`. An empty range gives an empty vector.
pub fn cmd_search(cfg: &SearchConfig) -> Result<Vec<SearchResult>> {
    if cfg.q_min > cfg.q_max {
        return Ok(Vec::new());
    }
    let convs = convergents_in_range(&cfg.alpha, cfg.q_min, cfg.q_max)?;
    let needed = search_cost(cfg, &convs)?;
    if needed > cfg.budget {
        return Err(Error::Budget { needed, limit: cfg.budget });
    }
    convs.par_iter().map(|c| search_one(cfg, c)).collect()
}
