use num_integer::Integer;
use proptest::prelude::*;

use friable::arith::{factorize, mod_inverse, sieve_primes};
use friable::diophantine::{dist_nearest, QuadIrr};
use friable::dispersion::{bump_phi, dispersion_square, dispersion_sums, phi_weight, DispersionParams};
use friable::smooth::{psi, psi_q};

fn quad_irr() -> impl Strategy<Value = QuadIrr> {
    (-20i64..20, 1i64..6, prop::sample::select(vec![2i64, 3, 5, 6, 7, 10, 11, 13]), 1i64..9)
        .prop_map(|(p, s, d, r)| QuadIrr::new(p, s, d, r).unwrap())
}

proptest! {
    #[test]
    fn bezout_identity(a in -10_000i64..10_000, b in -10_000i64..10_000) {
        let e = a.extended_gcd(&b);
        prop_assert_eq!(a * e.x + b * e.y, e.gcd);
        prop_assert_eq!(e.gcd.abs(), a.gcd(&b));
    }

    #[test]
    fn inverse_multiplies_to_one(a in -100_000i64..100_000, q in 2u64..100_000) {
        match mod_inverse(a, q) {
            Ok(inv) => {
                prop_assert!((1..=q).contains(&inv));
                let r = (a as i128).rem_euclid(q as i128);
                prop_assert_eq!(r * inv as i128 % q as i128, 1);
            }
            Err(_) => prop_assert_ne!(a.unsigned_abs().gcd(&q), 1),
        }
    }

    #[test]
    fn distance_is_even_in_alpha(alpha in quad_irr(), n in 1u64..100_000) {
        let d = dist_nearest(n, &alpha).unwrap();
        let e = dist_nearest(n, &alpha.neg()).unwrap();
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((d - e).abs() <= 1e-12, "{} vs {}", d, e);
    }

    #[test]
    fn coprime_count_is_at_most_smooth_count(x in 2.0f64..5000.0, y in 2.0f64..60.0, q in 1u64..500) {
        prop_assert!(psi_q(x, y, q).unwrap() <= psi(x, y).unwrap());
    }

    #[test]
    fn factorisation_reconstructs(n in 1u64..1_000_000) {
        let table = sieve_primes(1000);
        let f = factorize(n, &table).unwrap();
        prop_assert_eq!(f.reconstruct(), n);
        for &(p, e) in f.factors() {
            prop_assert!(e >= 1);
            prop_assert!((2..p).take_while(|d| d * d <= p).all(|d| p % d != 0));
        }
    }

    #[test]
    fn bump_and_weight_lie_in_unit_interval(x in -1.0f64..2.0, n in -5000i64..5000, r in 1.5f64..40.0, q in 2u64..200, a in 1i64..200) {
        prop_assert!((0.0..=1.0).contains(&bump_phi(x)));
        if r < q as f64 && a.unsigned_abs().gcd(&q) == 1 {
            let w = phi_weight(n, r, q, a).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dispersion_is_a_sum_of_squares(m in 4.0f64..40.0, n in 4.0f64..40.0, q in 3u64..60, a in 1i64..60, r in 2.0f64..12.0, y in 2.0f64..20.0) {
        prop_assume!(r < q as f64 && a.unsigned_abs().gcd(&q) == 1);
        let p = DispersionParams::new(m, n, q, a, r, y).unwrap();
        let sums = dispersion_sums(&p).unwrap();
        let square = dispersion_square(&p).unwrap();
        prop_assert!(square >= 0.0);
        prop_assert!(sums.s_prime >= -1e-9 * (1.0 + sums.s3.abs()));
        prop_assert!((sums.s_prime - square).abs() <= 1e-9 * (1.0 + sums.s3.abs()));
    }
}
