//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! Criterion 5 cannot be met by any bump with the required support and
//! plateau at the stated cutoff; it is evaluated as stated and reported as an
//! expected failure, next to a companion run at a wider cutoff.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use friable::arith::sieve_primes;
use friable::diophantine::{derive_params, Alpha, QuadIrr};
use friable::dispersion::{
    bump_fourier, dispersion_square, phi_weight, phi_weight_poisson, type1_report, type2_report, DispersionParams,
    PHI_HAT_ZERO,
};
use friable::expsums::{complete_kloosterman, kl_smooth_average, DEFAULT_BUDGET};
use friable::search::{cmd_search, SearchConfig};
use friable::smooth::{dickman_rho, psi, smooth_decompose, Decomposition};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
    unattainable: bool,
}

// -- independent oracles -----------------------------------------------------

fn lpf_naive(n: u64) -> u64 {
    let mut rest = n;
    let mut best = 1;
    let mut d = 2;
    while d * d <= rest {
        while rest % d == 0 {
            best = d;
            rest /= d;
        }
        d += 1;
    }
    if rest > 1 {
        rest
    } else {
        best
    }
}

fn is_prime_naive(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn inverse_naive(n: u64, m: u64) -> u64 {
    // extended Euclid on signed integers
    let (mut r0, mut r1) = (m as i64, (n % m) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    assert_eq!(r0, 1);
    t0.rem_euclid(m as i64) as u64
}

fn e(num: i64, den: u64) -> Complex64 {
    let t = num.rem_euclid(den as i64) as f64 / den as f64;
    Complex64::from_polar(1.0, std::f64::consts::TAU * t)
}

// -- criteria ----------------------------------------------------------------

fn c01_dickman_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let u = 1.0 + i as f64 / 100.0;
        let got = dickman_rho(u, 1e-10).unwrap();
        worst = worst.max((got - (1.0 - u.ln())).abs());
    }
    outcome(worst <= 1e-9, format!("max error {worst:.2e}"))
}

fn c02_psi_oracle() -> Outcome {
    const X: u64 = 10_000;
    let lpf: Vec<u64> = (0..=X).map(|n| if n == 0 { 0 } else { lpf_naive(n) }).collect();
    let mut mismatches = 0u64;
    let mut checked = 0u64;
    for x in 1..=X {
        for y in [2, 3, 5, 7, 11, 31, 97, x] {
            if y < 2 {
                continue;
            }
            let oracle = (1..=x).filter(|&n| lpf[n as usize] <= y).count() as u64;
            checked += 1;
            if psi(x as f64, y as f64).unwrap() != oracle {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} pairs, {mismatches} mismatches"))
}

fn c03_weil_bound() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let primes = sieve_primes(2003);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for &p in primes.primes() {
        for _ in 0..50 {
            let a = rng.gen_range(1..p.max(2)) as i64;
            let s = complete_kloosterman(a, 1, p).unwrap();
            let ratio = s.abs() / (2.0 * (p as f64).sqrt());
            worst = worst.max(ratio);
            if ratio > 1.0 + 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{} primes x 50, max |S|/(2 sqrt p) = {worst:.6}, {violations} violations", primes.len()),
    )
}

fn c04_gcd_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..10_000 {
        let u: i128 = rng.gen_range(1..=1_000_000);
        let u2: i128 = rng.gen_range(1..=1_000_000);
        let k: i128 = rng.gen_range(-1000..=1000);
        let lhs = u.gcd(&(k * u2 * (u + u2)));
        let rhs = u.gcd(&(k * u2 * u2));
        if lhs != rhs {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("10000 triples, {violations} violations"))
}

fn random_coprime(rng: &mut StdRng, q: u64) -> i64 {
    loop {
        let a = rng.gen_range(1..q);
        if a.gcd(&q) == 1 {
            return a as i64;
        }
    }
}

fn c05_poisson() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut over = 0;
    for _ in 0..100 {
        let q: u64 = rng.gen_range(150..=100_000);
        let r: f64 = rng.gen_range(50.0..=q as f64 / 3.0);
        let a = random_coprime(&mut rng, q);
        let n: i64 = rng.gen_range(0..q as i64);
        let kmax = (10.0 * q as f64 / r).ceil() as u64;
        let err = (phi_weight_poisson(n, r, q, a, kmax).unwrap() - phi_weight(n, r, q, a).unwrap()).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            over += 1;
        }
    }
    // companion: the same comparison with the cutoff at |xi| ~ 250
    let mut wide = 0.0f64;
    for _ in 0..100 {
        let q: u64 = rng.gen_range(1_000..=100_000);
        let r: f64 = rng.gen_range((q as f64 / 20.0).max(50.0)..=q as f64 / 3.0);
        let a = random_coprime(&mut rng, q);
        let n: i64 = rng.gen_range(0..q as i64);
        let kmax = (250.0 * q as f64 / r).ceil() as u64;
        let err = (phi_weight_poisson(n, r, q, a, kmax).unwrap() - phi_weight(n, r, q, a).unwrap()).abs();
        wide = wide.max(err);
    }
    outcome(
        worst <= 1e-6,
        format!("Kmax = ceil(10q/R): max error {worst:.2e} ({over}/100 above 1e-6); Kmax = ceil(250q/R): max error {wide:.2e}"),
    )
}

fn c06_dispersion_identities() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut worst_rel = 0.0f64;
    for i in 0..25 {
        let m = rng.gen_range(2..=40u32) as f64;
        let n = rng.gen_range(2..=40u32) as f64;
        let q: u64 = rng.gen_range(20..=2000);
        let r = rng.gen_range(4.0..(q as f64 - 1.0));
        let a = random_coprime(&mut rng, q);
        let y = [2.0, 3.0, 5.0, 7.0, 11.0, 50.0, f64::INFINITY][rng.gen_range(0..7)];
        let p = DispersionParams::new(m, n, q, a, r, y).unwrap();
        let t = type2_report(&p).unwrap();
        let square = dispersion_square(&p).unwrap();
        let s = t.sums;
        let gap = (s.s_prime - square).abs();
        worst_rel = worst_rel.max(gap / s.s1.abs().max(1.0));
        let ok_identity = gap <= 1e-8 * s.s1.abs().max(1.0);
        let ok_sign = s.s_prime >= -1e-12;
        let d2 = t.report.value * t.report.value;
        let ok_cs = d2 <= m * s.s_prime * (1.0 + 1e-9) + 1e-12;
        if !(ok_identity && ok_sign && ok_cs) {
            failures.push(i);
        }
    }
    outcome(
        failures.is_empty(),
        format!("25 instances, max identity gap {worst_rel:.2e} (relative), failing {failures:?}"),
    )
}

fn c07_membership() -> Outcome {
    let mut members = 0usize;
    let mut violations = 0usize;
    let mut convergents = 0usize;
    for alpha in [QuadIrr::golden_ratio(), QuadIrr::sqrt2()] {
        for theta in [Ratio::new(1, 4), Ratio::new(3, 10)] {
            let cfg = SearchConfig {
                alpha: Alpha::Quad(alpha),
                theta,
                c: 10.0,
                y: None,
                q_min: 1,
                q_max: 100_000,
                budget: DEFAULT_BUDGET,
            };
            for res in cmd_search(&cfg).unwrap() {
                convergents += 1;
                for m in &res.members {
                    members += 1;
                    let exact = alpha.dist_at_most(m.n, (res.bound * 2f64.powi(40)).floor() as i128, 1 << 40).unwrap();
                    if !(exact && m.within_bound && m.lpf as f64 <= res.y && m.n.gcd(&res.q) == 1) {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("{convergents} convergents, {members} members, {violations} violations"))
}

fn kl_oracle_table(a: i64, q: u64, y: u64, m_top: u64, n_top: u64) -> Vec<Vec<Complex64>> {
    // prefix[m][k] = sum over admissible n < k
    (0..=m_top)
        .map(|m| {
            let mut row = vec![Complex64::new(0.0, 0.0); n_top as usize + 2];
            if m < 2 {
                return row;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..=n_top + 1 {
                row[k as usize] = acc;
                let nn = k;
                if nn.gcd(&(m * q)) == 1 && lpf_naive(nn) <= y {
                    acc += e(a * inverse_naive(nn, m) as i64, m);
                }
            }
            row
        })
        .collect()
}

fn c08_kl_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for _ in 0..100 {
        let q: u64 = rng.gen_range(1..=60);
        let a: i64 = loop {
            let a = rng.gen_range(-200..=200);
            if a != 0 {
                break a;
            }
        };
        let y: u64 = [2, 3, 5, 7, 11, 13, 29, 97, 300][rng.gen_range(0..9)];
        let table = kl_oracle_table(a, q, y, 600, 300);
        // M and x sweep [2, 300] on coprime strides, endpoints included
        let ms: Vec<u64> = (2..=300).step_by(11).chain([300]).collect();
        let xs: Vec<u64> = (2..=300).step_by(19).chain([300]).collect();
        for &m in &ms {
            for &x in &xs {
                let oracle: f64 = (m + 1..=2 * m).map(|md| table[md as usize][x as usize].norm()).sum();
                let got = kl_smooth_average(m as f64, x as f64, a, q, y as f64).unwrap();
                worst = worst.max((got - oracle).abs());
                cases += 1;
            }
        }
    }
    outcome(worst <= 1e-8, format!("{cases} (M, x) cases over 100 (a, q, y), max difference {worst:.2e}"))
}

fn c09_decomposition() -> Outcome {
    let mut checked = 0usize;
    let mut failures = 0usize;
    for y in [3u64, 5, 7, 11] {
        for z in [y, 2 * y, 10 * y] {
            for n in (z + 1)..=10_000u64 {
                if lpf_naive(n) > y {
                    continue;
                }
                checked += 1;
                let got = smooth_decompose(n, 10_000, y as f64, z as f64).unwrap();
                let mut all = Vec::new();
                for v in (1..=n).filter(|v| n % v == 0) {
                    let u = n / v;
                    for p in (2..=y).filter(|&p| is_prime_naive(p)) {
                        let clauses = lpf_naive(u) <= p
                            && z < v
                            && v <= z * p
                            && v % p == 0
                            && (2..=v).filter(|&r| v % r == 0 && is_prime_naive(r)).all(|r| p <= r && r <= y);
                        if clauses {
                            all.push(Decomposition { p, u, v });
                        }
                    }
                }
                if all != vec![got] {
                    failures += 1;
                }
            }
        }
    }
    outcome(failures == 0, format!("{checked} (n, y, z) cases, {failures} failures"))
}

fn c10_bump() -> Outcome {
    let zero = (bump_fourier(0.0, 1e-12).unwrap().re - 5.0 / 12.0).abs();
    let mut worst = 0.0f64;
    let mut xi = 50.0;
    while xi <= 1000.0 {
        worst = worst.max(bump_fourier(xi, 1e-12).unwrap().norm());
        xi += 0.25;
    }
    outcome(
        zero <= 1e-9 && worst <= 1e-3,
        format!("|phi_hat(0) - 5/12| = {zero:.2e}, max |phi_hat| on [50, 1000] = {worst:.2e}"),
    )
}

fn naive_type1(p: &DispersionParams) -> (f64, f64) {
    let mut value = 0.0;
    let mut count_m = 0.0;
    for m in (p.m.floor() as u64 + 1)..=(2.0 * p.m).floor() as u64 {
        if lpf_naive(m) as f64 > p.y || m.gcd(&p.q) != 1 {
            continue;
        }
        count_m += 1.0;
        for n in (p.n.floor() as u64 + 1)..=(2.0 * p.n).floor() as u64 {
            value += phi_weight((m * n) as i64, p.r, p.q, p.a).unwrap();
        }
    }
    (value, PHI_HAT_ZERO * p.n * p.r / p.q as f64 * count_m)
}

fn c11_type1() -> Outcome {
    let theta = Ratio::new(3, 10);
    // brute-force confirmation at q = 987 first
    let small = derive_params(987, theta, 10.0).unwrap().with_y(1e3);
    let ps = DispersionParams::new((small.x / 40.0).floor(), 40.0, 987, 1597 % 987, small.r, 1e3).unwrap();
    let rs = type1_report(&ps).unwrap();
    let (naive, naive_main) = naive_type1(&ps);
    let small_ok =
        (rs.value - naive).abs() <= 1e-9 * naive.max(1.0) && (rs.main_term - naive_main).abs() <= 1e-9 * naive_main;
    let big = derive_params(75_025, theta, 10.0).unwrap().with_y(1e3);
    let p = DispersionParams::new((big.x / 400.0).floor(), 400.0, 75_025, 121_393 % 75_025, big.r, 1e3).unwrap();
    let rep = type1_report(&p).unwrap();
    let ratio = rep.ratio.unwrap_or(f64::NAN);
    outcome(
        small_ok && (0.5..=2.0).contains(&ratio),
        format!(
            "q = 987: ratio {:.4} (brute force agrees: {small_ok}); q = 75025: value {:.1}, main {:.1}, ratio {ratio:.4}",
            rs.ratio.unwrap_or(f64::NAN),
            rep.value,
            rep.main_term
        ),
    )
}

fn c12_hildebrand() -> Outcome {
    let x = 1e6f64;
    let ratio = |y: f64| psi(x, y).unwrap() as f64 / (x * dickman_rho(x.ln() / y.ln(), 1e-10).unwrap());
    let (r2, r3) = (ratio(100.0), ratio(1000.0));
    let pass = (0.5..=2.0).contains(&r2) && (0.5..=2.0).contains(&r3) && (r3 - 1.0).abs() < (r2 - 1.0).abs();
    outcome(pass, format!("y = 100: {r2:.4}, y = 1000: {r3:.4}"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "Dickman closed form on [1, 2]",
            limit: Duration::from_secs(1),
            run: c01_dickman_closed_form,
            unattainable: false,
        },
        Criterion {
            id: 2,
            name: "Psi against enumeration",
            limit: Duration::from_secs(30),
            run: c02_psi_oracle,
            unattainable: false,
        },
        Criterion {
            id: 3,
            name: "Weil bound",
            limit: Duration::from_secs(60),
            run: c03_weil_bound,
            unattainable: false,
        },
        Criterion {
            id: 4,
            name: "gcd identity",
            limit: Duration::from_secs(5),
            run: c04_gcd_identity,
            unattainable: false,
        },
        Criterion {
            id: 5,
            name: "Poisson consistency",
            limit: Duration::from_secs(60),
            run: c05_poisson,
            unattainable: true,
        },
        Criterion {
            id: 6,
            name: "dispersion identities",
            limit: Duration::from_secs(120),
            run: c06_dispersion_identities,
            unattainable: false,
        },
        Criterion {
            id: 7,
            name: "search membership",
            limit: Duration::from_secs(600),
            run: c07_membership,
            unattainable: false,
        },
        Criterion {
            id: 8,
            name: "Kl_y against naive loop",
            limit: Duration::from_secs(120),
            run: c08_kl_oracle,
            unattainable: false,
        },
        Criterion {
            id: 9,
            name: "smooth decomposition",
            limit: Duration::from_secs(60),
            run: c09_decomposition,
            unattainable: false,
        },
        Criterion {
            id: 10,
            name: "bump constants",
            limit: Duration::from_secs(30),
            run: c10_bump,
            unattainable: false,
        },
        Criterion {
            id: 11,
            name: "Type I ratio",
            limit: Duration::from_secs(300),
            run: c11_type1,
            unattainable: false,
        },
        Criterion {
            id: 12,
            name: "Hildebrand band",
            limit: Duration::from_secs(120),
            run: c12_hildebrand,
            unattainable: false,
        },
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|id| id == c.id)) {
        let started = Instant::now();
        let out = (c.run)();
        let elapsed = started.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = out.pass && in_time;
        let verdict = match (pass, c.unattainable) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        if !pass && !c.unattainable {
            unexpected += 1;
        }
        println!(
            "criterion {:>2} {:<32} {verdict:<16} {:>8.2}s / {}s  {}",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            out.detail
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
