//! The smoothed counting apparatus: the bump `phi` and its Fourier transform,
//! the residue weight `Phi_a(n, R)`, the master sum `Sigma(q, R)`, the
//! bilinear sum `B(M, N)`, the Type I comparison, and the Type II dispersion
//! sums `S'_1`, `S'_2`, `S'_3` with their square-expansion identity.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::mod_inverse;
use crate::diophantine::ApproxParams;
use crate::error::{Error, Result, Warning};
use crate::expsums::{dyadic_range, DEFAULT_BUDGET};
use crate::numeric::{integrate, unit_root, CompensatedSum};
use crate::smooth::{local_density, SmoothSieve};

/// `int phi`, the mass of the bump.
pub const PHI_HAT_ZERO: f64 = 5.0 / 12.0;

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, and
/// `sigma(t) / (sigma(t) + sigma(1 - t))` with `sigma(t) = exp(-1/t)` between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

/// The bump: supported on `[1/4, 3/4]`, equal to 1 on `[1/3, 2/3]`,
/// symmetric about `1/2`.
pub fn bump_phi(x: f64) -> f64 {
    if !(0.25..=0.75).contains(&x) {
        0.0
    } else if x < 0.5 {
        smooth_step(12.0 * (x - 0.25))
    } else {
        smooth_step(12.0 * (0.75 - x))
    }
}

/// A Fourier sample with its quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierSample {
    pub xi: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub value: Complex64,
    pub err: f64,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// `phi_hat(xi) = int phi(t) e(-xi t) dt` with absolute error at most `tol`.
///
/// Uses the symmetry `phi(1/2 + s) = phi(1/2 - s)`: the transform is
/// `e(-xi/2) * 2 int_0^{1/4} phi(1/2 + s) cos(2 pi xi s) ds`, where the plateau
/// `[0, 1/6]` integrates in closed form and only the transition is quadrature.
pub fn bump_fourier_sample(xi: f64, tol: f64) -> Result<FourierSample> {
    if !(tol >= 1e-12) {
        return Err(Error::InvalidInput("Fourier tolerance must be at least 1e-12".into()));
    }
    if !xi.is_finite() {
        return Err(Error::InvalidInput("frequency must be finite".into()));
    }
    let w = std::f64::consts::TAU * xi;
    let plateau = if xi == 0.0 { 1.0 / 6.0 } else { (w / 6.0).sin() / w };
    let panels = 1 + (xi.abs() / 6.0).ceil() as usize;
    let transition = |s: f64| smooth_step(12.0 * (0.25 - s)) * (w * s).cos();
    let (edge, err) = integrate(transition, 1.0 / 6.0, 0.25, panels, tol / 2.0)?;
    let real = 2.0 * (plateau + edge);
    Ok(FourierSample { xi, value: unit_root_f(-xi / 2.0) * real, err: 2.0 * err })
}

/// `phi_hat(xi)`.
pub fn bump_fourier(xi: f64, tol: f64) -> Result<Complex64> {
    Ok(bump_fourier_sample(xi, tol)?.value)
}

fn unit_root_f(t: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * t.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

/// Cached `phi_hat` samples keyed by frequency rounded to `2^-32`.
#[derive(Debug, Clone, Default)]
pub struct FourierTable {
    tol: f64,
    samples: BTreeMap<i64, FourierSample>,
}

fn frequency_key(xi: f64) -> i64 {
    (xi * 4_294_967_296.0).round() as i64
}

impl FourierTable {
    /// Samples `phi_hat` at every frequency in `freqs` (and by conjugation
    /// at their negatives).
    pub fn build(freqs: &[f64], tol: f64) -> Result<Self> {
        let mut keys: Vec<f64> = freqs.iter().map(|x| x.abs()).collect();
        keys.sort_by(|a, b| a.total_cmp(b));
        keys.dedup_by_key(|x| frequency_key(*x));
        let samples: Vec<FourierSample> =
            keys.par_iter().map(|&xi| bump_fourier_sample(xi, tol)).collect::<Result<_>>()?;
        Ok(FourierTable { tol, samples: samples.into_iter().map(|s| (frequency_key(s.xi), s)).collect() })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `phi_hat(xi)`, using `phi_hat(-xi) = conj(phi_hat(xi))`.
    pub fn get(&self, xi: f64) -> Option<FourierSample> {
        let s = *self.samples.get(&frequency_key(xi.abs()))?;
        Some(if xi < 0.0 { FourierSample { xi, value: s.value.conj(), err: s.err } } else { s })
    }

    pub fn samples(&self) -> impl Iterator<Item = &FourierSample> {
        self.samples.values()
    }
}

fn check_weight_args(r: f64, q: u64, a: i64) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    if !(r > 0.0) || r >= q as f64 {
        return Err(Error::InvalidInput(format!("need 0 < R < q (R = {r}, q = {q})")));
    }
    if (a.unsigned_abs()).gcd(&q) != 1 {
        return Err(Error::NotInvertible { a, q });
    }
    Ok(())
}

#[inline]
fn residue_weight(residue: u64, r: f64) -> f64 {
    let t = residue as f64 / r;
    if t < 0.25 || t > 0.75 {
        0.0
    } else {
        bump_phi(t)
    }
}

#[inline]
fn residue(n: i128, a: i128, q: u64) -> u64 {
    (n * a).rem_euclid(q as i128) as u64
}

/// `Phi_a(n, R) = sum_{r = n a (mod q)} phi(r/R)`; for `R < q` only the
/// representative in `[0, q)` can meet the support.
pub fn phi_weight(n: i64, r: f64, q: u64, a: i64) -> Result<f64> {
    check_weight_args(r, q, a)?;
    Ok(residue_weight(residue(n as i128, a as i128, q), r))
}

/// Default Poisson cutoff `ceil(10 q / R)`.
pub fn default_kmax(r: f64, q: u64) -> u64 {
    (10.0 * q as f64 / r).ceil() as u64
}

fn poisson_frequency(k: i64, r: f64, q: u64) -> f64 {
    k as f64 * (r / q as f64)
}

/// Table of `phi_hat(k R/q)` for `0 <= k <= kmax`.
pub fn poisson_table(r: f64, q: u64, kmax: u64, tol: f64) -> Result<FourierTable> {
    let freqs: Vec<f64> = (0..=kmax as i64).map(|k| poisson_frequency(k, r, q)).collect();
    FourierTable::build(&freqs, tol)
}

/// `(R/q) sum_{|k| <= kmax} phi_hat(kR/q) e(n a k / q)`.
pub fn phi_weight_poisson(n: i64, r: f64, q: u64, a: i64, kmax: u64) -> Result<f64> {
    check_weight_args(r, q, a)?;
    let table = poisson_table(r, q, kmax, 1e-12)?;
    phi_weight_poisson_with(&table, n, r, q, a, kmax)
}

/// [`phi_weight_poisson`] with a prebuilt table of `phi_hat(kR/q)`.
pub fn phi_weight_poisson_with(table: &FourierTable, n: i64, r: f64, q: u64, a: i64, kmax: u64) -> Result<f64> {
    check_weight_args(r, q, a)?;
    let step = r / q as f64;
    let na = residue(n as i128, a as i128, q) as i128;
    let lookup = |k: i64| {
        table
            .get(poisson_frequency(k, r, q))
            .map(|s| s.value)
            .ok_or_else(|| Error::InvalidInput(format!("Fourier table lacks k = {k}")))
    };
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let zero = lookup(0)?;
    re.add(zero.re);
    im.add(zero.im);
    for k in 1..=kmax as i64 {
        let hat = lookup(k)?;
        let plus = hat * unit_root(na * k as i128, q);
        let minus = hat.conj() * unit_root(-na * k as i128, q);
        re.add(plus.re);
        re.add(minus.re);
        im.add(plus.im);
        im.add(minus.im);
    }
    let imag = step * im.value();
    assert!(imag.abs() <= 1e-9, "Poisson expansion left imaginary part {imag:e}");
    Ok(step * re.value())
}

/// Parameters of the bilinear and dispersion sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionParams {
    pub m: f64,
    pub n: f64,
    pub q: u64,
    pub a: i64,
    pub r: f64,
    pub y: f64,
    pub eta: f64,
    pub delta: f64,
    pub budget: u128,
}

impl DispersionParams {
    pub fn new(m: f64, n: f64, q: u64, a: i64, r: f64, y: f64) -> Result<Self> {
        if !(m >= 2.0 && n >= 2.0) {
            return Err(Error::InvalidInput(format!("need M, N >= 2 (M = {m}, N = {n})")));
        }
        check_weight_args(r, q, a)?;
        Ok(DispersionParams { m, n, q, a, r, y, eta: 0.05, delta: 0.1, budget: DEFAULT_BUDGET })
    }

    /// `M = X / N` with `X = q R` from `params`.
    pub fn from_approx(params: &ApproxParams, a: i64, n: f64) -> Result<Self> {
        Self::new(params.x / n, n, params.q, a, params.r, params.y)
    }

    pub fn with_eta_delta(mut self, eta: f64, delta: f64) -> Self {
        self.eta = eta;
        self.delta = delta;
        self
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    /// `X = q R`.
    pub fn x(&self) -> f64 {
        self.q as f64 * self.r
    }

    /// The exponent with `R = q^{(1-theta)/(1+theta)}`.
    pub fn theta(&self) -> f64 {
        let rho = self.r.ln() / (self.q as f64).ln();
        (1.0 - rho) / (1.0 + rho)
    }

    /// Range conditions that fail for these parameters.
    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = Vec::new();
        let x = self.x();
        let mn = self.m * self.n;
        if mn < x / 4.0 || mn > 4.0 * x {
            w.push(Warning::ProductRange);
        }
        let lower = self.q as f64 / self.r.powf(1.0 - self.delta);
        let upper = self.r.powf(12.0 / 11.0 - self.delta);
        if self.n < lower || self.n > upper {
            w.push(Warning::TypeTwoRange);
        }
        if self.eta >= self.delta / 20.0 {
            w.push(Warning::EtaTooLarge);
        }
        w
    }

    fn check_budget(&self, needed: u128) -> Result<()> {
        if needed > self.budget {
            return Err(Error::Budget { needed, limit: self.budget });
        }
        Ok(())
    }

    fn weight(&self, mn: u128) -> f64 {
        let res = ((mn % self.q as u128) * (self.a.rem_euclid(self.q as i64) as u128) % self.q as u128) as u64;
        residue_weight(res, self.r)
    }
}

/// A computed sum next to its predicted main term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumReport {
    pub value: f64,
    pub main_term: f64,
    pub ratio: Option<f64>,
    pub truncation_error: f64,
    pub params: serde_json::Value,
    pub runtime_ms: f64,
    pub warnings: Vec<Warning>,
}

impl SumReport {
    fn new(
        value: f64,
        main_term: f64,
        params: serde_json::Value,
        started: Instant,
        mut warnings: Vec<Warning>,
    ) -> Self {
        let ratio = if main_term != 0.0 { Some(value / main_term) } else { None };
        if ratio.is_none() {
            warnings.push(Warning::EmptyMainTerm);
        }
        SumReport {
            value,
            main_term,
            ratio,
            truncation_error: 0.0,
            params,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            warnings,
        }
    }
}

/// Indicator of `S_q(Y)` on an interval.
struct Indicator {
    sieve: Option<SmoothSieve>,
}

impl Indicator {
    fn new(lo: u64, hi: u64, y: f64, q: u64) -> Result<Self> {
        let sieve = if lo <= hi { Some(SmoothSieve::new(lo.max(1), hi, y, q)?) } else { None };
        Ok(Indicator { sieve })
    }

    fn get(&self, n: u64) -> bool {
        self.sieve.as_ref().is_some_and(|s| s.in_set(n))
    }
}

fn ordered_sum(parts: Vec<f64>) -> f64 {
    parts.into_iter().collect::<CompensatedSum>().value()
}

/// `Sigma(q, R) = sum_{X/4 <= n <= 4X} 1_{S_q(Y)}(n) Phi_a(n, R)`, reported
/// against `R^{2 - (1-theta)/(2C)}`.
pub fn sigma_qr(params: &ApproxParams, a: i64) -> Result<SumReport> {
    let started = Instant::now();
    let q = params.q;
    check_weight_args(params.r, q, a)?;
    let (lo, hi) = params.n_range();
    let mut value = 0.0;
    if lo <= hi && params.y >= 2.0 {
        let ind = Indicator::new(lo, hi, params.y, q)?;
        let a_inv = mod_inverse(a, q)?;
        let first = (params.r / 4.0).ceil() as u64;
        let last = (0.75 * params.r).floor() as u64;
        let mut sum = CompensatedSum::new();
        for res in first.max(1)..=last {
            let w = residue_weight(res, params.r);
            if w == 0.0 {
                continue;
            }
            let start = ((a_inv as u128 * res as u128) % q as u128) as u64;
            let mut n = lo + (start + q - lo % q) % q;
            while n <= hi {
                if ind.get(n) {
                    sum.add(w);
                }
                n += q;
            }
        }
        value = sum.value();
    }
    let theta = *params.theta.numer() as f64 / *params.theta.denom() as f64;
    let main = params.r.powf(2.0 - (1.0 - theta) / (2.0 * params.c));
    let p = serde_json::json!({
        "q": q, "a": a, "theta": theta, "X": params.x, "R": params.r, "Y": params.y, "C": params.c,
    });
    Ok(SumReport::new(value, main, p, started, Vec::new()))
}

fn params_json(p: &DispersionParams) -> serde_json::Value {
    serde_json::to_value(p).expect("plain numeric fields")
}

/// `sum_{m ~ M} f(m) sum_{n ~ N} g(n) Phi_a(m n, R)`, summed per `m` in order.
fn bilinear(p: &DispersionParams, f: impl Fn(u64) -> f64 + Sync, g: impl Fn(u64) -> f64 + Sync) -> f64 {
    let ms: Vec<u64> = dyadic_range(p.m).collect();
    let ns: Vec<u64> = dyadic_range(p.n).collect();
    let parts: Vec<f64> = ms
        .par_iter()
        .map(|&m| {
            let fm = f(m);
            if fm == 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for &n in &ns {
                let w = p.weight(m as u128 * n as u128);
                if w != 0.0 {
                    s += g(n) * w;
                }
            }
            fm * s
        })
        .collect();
    ordered_sum(parts)
}

fn dyadic_indicators(p: &DispersionParams) -> Result<(Indicator, Indicator)> {
    let (mr, nr) = (dyadic_range(p.m), dyadic_range(p.n));
    let im = Indicator::new(*mr.start(), *mr.end(), p.y, p.q)?;
    let inn = Indicator::new(*nr.start(), *nr.end(), p.y, p.q)?;
    Ok((im, inn))
}

fn count_pairs(p: &DispersionParams) -> u128 {
    dyadic_range(p.m).count() as u128 * dyadic_range(p.n).count() as u128
}

fn indicator_sum(ind: &Indicator, range: std::ops::RangeInclusive<u64>) -> f64 {
    range.filter(|&m| ind.get(m)).count() as f64
}

/// `B(M, N)`, reported against `phi_hat(0) K(N, Y) N (R/q) sum_{m ~ M} 1_{S_q(Y)}(m)`.
pub fn bilinear_b(p: &DispersionParams) -> Result<SumReport> {
    let started = Instant::now();
    p.check_budget(count_pairs(p))?;
    let (im, inn) = dyadic_indicators(p)?;
    let value = bilinear(p, |m| im.get(m) as u8 as f64, |n| inn.get(n) as u8 as f64);
    let k = local_density(p.n, p.y, p.q)?;
    let sm = indicator_sum(&im, dyadic_range(p.m));
    let main = PHI_HAT_ZERO * k * p.n * p.r / p.q as f64 * sm;
    Ok(SumReport::new(value, main, params_json(p), started, p.warnings()))
}

/// Type I sum `sum_{m ~ M} 1_{S_q(Y)}(m) sum_{n ~ N} Phi_a(mn, R)` against
/// `phi_hat(0) (N R / q) sum_{m ~ M} 1_{S_q(Y)}(m)`.
pub fn type1_report(p: &DispersionParams) -> Result<SumReport> {
    let started = Instant::now();
    p.check_budget(count_pairs(p))?;
    let (mr, _) = (dyadic_range(p.m), ());
    let im = Indicator::new(*mr.start(), *mr.end(), p.y, p.q)?;
    let value = bilinear(p, |m| im.get(m) as u8 as f64, |_| 1.0);
    let sm = indicator_sum(&im, dyadic_range(p.m));
    let main = PHI_HAT_ZERO * p.n * p.r / p.q as f64 * sm;
    Ok(SumReport::new(value, main, params_json(p), started, p.warnings()))
}

/// `S'_1`, `S'_2`, `S'_3`, `S' = S'_1 - 2 S'_2 + S'_3` and the `K(N, Y)` they use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSums {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s_prime: f64,
    pub k: f64,
}

/// Integers in the support `[3M/4, 9M/4]` of `phi(m / 3M)`, with their weights.
fn smoothed_moduli(m: f64) -> Vec<(u64, f64)> {
    let lo = (0.75 * m).ceil().max(1.0) as u64;
    let hi = (2.25 * m).floor() as u64;
    (lo..=hi).map(|v| (v, bump_phi(v as f64 / (3.0 * m)))).filter(|&(_, w)| w > 0.0).collect()
}

fn smoothed_budget(p: &DispersionParams) -> Result<()> {
    let nn = dyadic_range(p.n).count() as u128;
    p.check_budget(smoothed_moduli(p.m).len() as u128 * nn * nn)
}

/// The three dispersion sums, each evaluated as its literal `n_1, n_2` double sum.
pub fn dispersion_sums(p: &DispersionParams) -> Result<DispersionSums> {
    smoothed_budget(p)?;
    let ns: Vec<u64> = dyadic_range(p.n).collect();
    let (_, inn) = dyadic_indicators(p)?;
    let ind: Vec<f64> = ns.iter().map(|&n| inn.get(n) as u8 as f64).collect();
    let k = local_density(p.n, p.y, p.q)?;
    let parts: Vec<[f64; 3]> = smoothed_moduli(p.m)
        .par_iter()
        .map(|&(m, wm)| {
            let phi: Vec<f64> = ns.iter().map(|&n| p.weight(m as u128 * n as u128)).collect();
            let (mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0);
            for (i, &w1) in phi.iter().enumerate() {
                if w1 == 0.0 {
                    continue;
                }
                for (j, &w2) in phi.iter().enumerate() {
                    let prod = w1 * w2;
                    t1 += ind[i] * ind[j] * prod;
                    t2 += ind[i] * prod;
                    t3 += prod;
                }
            }
            [wm * t1, wm * t2, wm * t3]
        })
        .collect();
    let col = |c: usize| ordered_sum(parts.iter().map(|v| v[c]).collect());
    let (s1, s2, s3) = (col(0), k * col(1), k * k * col(2));
    Ok(DispersionSums { s1, s2, s3, s_prime: s1 - 2.0 * s2 + s3, k })
}

/// `sum_m phi(m/3M) (sum_{n ~ N} (1_{S_q(Y)}(n) - K) Phi_a(mn, R))^2`, the
/// square that `S'` expands.
pub fn dispersion_square(p: &DispersionParams) -> Result<f64> {
    smoothed_budget(p)?;
    let (_, inn) = dyadic_indicators(p)?;
    let k = local_density(p.n, p.y, p.q)?;
    let parts: Vec<f64> = smoothed_moduli(p.m)
        .par_iter()
        .map(|&(m, wm)| {
            let inner: f64 =
                dyadic_range(p.n).map(|n| (inn.get(n) as u8 as f64 - k) * p.weight(m as u128 * n as u128)).sum();
            wm * inner * inner
        })
        .collect();
    Ok(ordered_sum(parts))
}

/// Type II discrepancy and its dispersion bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type2Report {
    pub report: SumReport,
    pub sums: DispersionSums,
    /// `D^2`.
    pub discrepancy_sq: f64,
    /// `#{m ~ M} S'`, the Cauchy–Schwarz bound on `D^2`.
    pub dispersion_bound: f64,
    pub cauchy_schwarz_holds: bool,
}

/// `D = sum_{m ~ M} 1_{S_q(Y)}(m) sum_{n ~ N} (1_{S_q(Y)}(n) - K(N, Y)) Phi_a(mn, R)`
/// against `R^{2 - eta}`, with the check `D^2 <= #{m ~ M} S'`.
pub fn type2_report(p: &DispersionParams) -> Result<Type2Report> {
    let started = Instant::now();
    p.check_budget(count_pairs(p))?;
    let sums = dispersion_sums(p)?;
    let (im, inn) = dyadic_indicators(p)?;
    let k = sums.k;
    let d = bilinear(p, |m| im.get(m) as u8 as f64, |n| inn.get(n) as u8 as f64 - k);
    let m_count = dyadic_range(p.m).count() as f64;
    let bound = m_count * sums.s_prime;
    let main = p.r.powf(2.0 - p.eta);
    let report = SumReport::new(d, main, params_json(p), started, p.warnings());
    Ok(Type2Report {
        report,
        sums,
        discrepancy_sq: d * d,
        dispersion_bound: bound,
        cauchy_schwarz_holds: d * d <= bound * (1.0 + 1e-9) + 1e-12,
    })
}
