mod common;

use std::f64::consts::PI;

use common::{ln_overlap_exact, overlap_sum_sign, rational};
use num_complex::Complex64;
use polar_tls::overlaps::{
    displacement_matrix_oracle, overlap_bessel, overlap_direct, overlap_exact, overlap_laguerre, overlap_log, overlap_log_abs,
    DIRECT_LIMIT,
};
use polar_tls::{Displacement, ModelParams};
use proptest::prelude::*;

const BRAS: [Displacement; 2] = [Displacement::Plus, Displacement::Minus];

/// ω0 = 1, ω_L = 1/2, so β = |Ω_a|.
fn params(beta: f64, phi: f64) -> ModelParams {
    ModelParams::new(1.0, 0.5, beta, phi).unwrap()
}

fn bra_sign(bra: Displacement) -> f64 {
    match bra {
        Displacement::Plus => 1.0,
        Displacement::Minus => -1.0,
    }
}

#[test]
fn same_ladder_overlaps_are_orthonormal() {
    let p = params(1.3, 0.4);
    for bra in BRAS {
        for l in 0..=60 {
            for n in 0..=60 {
                let v = overlap_exact(l, n, &p, bra, bra).to_complex();
                let expected = if l == n { 1.0 } else { 0.0 };
                assert!((v - expected).norm() <= 1e-12, "({l},{n})");
            }
        }
    }
}

#[test]
fn opposite_ladder_rows_are_complete() {
    for beta in [0.1, 0.5, 1.0, 1.5, 2.0] {
        let p = params(beta, 0.0);
        for n in 0..=40u64 {
            let cutoff = n + (20.0 * beta * beta).ceil() as u64 + 60;
            for bra in BRAS {
                let norm: f64 = (0..=cutoff).map(|m| overlap_exact(n, m, &p, bra, bra.opposite()).modulus_sq()).sum();
                assert!((1.0 - norm).abs() <= 1e-10, "beta {beta} n {n}: {norm}");
            }
        }
    }
}

#[test]
fn exact_overlaps_match_the_laguerre_oracle() {
    let mut worst = 0.0f64;
    for beta in [0.1, 0.5, 1.0, 2.0] {
        for phi in [0.0, PI / 3.0] {
            let p = params(beta, phi);
            for bra in BRAS {
                let alpha = p.alpha0() * (2.0 * bra_sign(bra));
                let oracle = displacement_matrix_oracle(alpha, 100).unwrap();
                for l in 0..=40u64 {
                    for n in 0..=40u64 {
                        let v = overlap_exact(l, n, &p, bra, bra.opposite()).to_complex();
                        let o = oracle.get(l as usize, n as usize);
                        let rel = (v - o).norm() / o.norm();
                        worst = worst.max(rel);
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-10, "worst relative deviation {worst:e}");
}

#[test]
fn oracle_small_case_spot_value() {
    // Ω_a/ω_L = 1: <1|D(1/2)|2> = -(1/2)·√2·(1 - 1/8)·e^{-1/8}
    let p = ModelParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let oracle = displacement_matrix_oracle(Complex64::new(0.5, 0.0), 100).unwrap();
    let v = overlap_exact(1, 2, &p, Displacement::Plus, Displacement::Minus).to_complex();
    let closed = -0.5 * 2f64.sqrt() * (1.0 - 0.125) * (-0.125f64).exp();
    assert!((v - oracle.get(1, 2)).norm() <= 1e-10 * closed.abs());
    assert!((v.re - closed).abs() <= 1e-15);
}

#[test]
fn laguerre_form_matches_the_sum_where_it_is_clean() {
    let p = params(0.3, 0.9);
    for bra in BRAS {
        for (l, n) in [(0, 0), (1, 0), (0, 1), (7, 2), (2, 7), (30, 33), (120, 117)] {
            let s = overlap_log(l, n, &p, bra, bra.opposite());
            let g = overlap_laguerre(l, n, &p, bra, bra.opposite());
            assert!(s.lost_digits < 4.0);
            assert!((s.to_complex() - g.to_complex()).norm() <= 1e-11 * s.modulus(), "({l},{n}) {s:?} {g:?}");
        }
    }
}

#[test]
fn heavy_cancellation_is_routed_around() {
    // 2β√n = 100: the alternating sum alone would lose ~40 digits
    let p = ModelParams::from_ratios(0.1, 1.0).unwrap();
    let n = 1_000_000u64;
    assert!(overlap_log(n, n, &p, Displacement::Plus, Displacement::Minus).lost_digits > 16.0);
    let v = overlap_exact(n, n, &p, Displacement::Plus, Displacement::Minus);
    assert!(v.lost_digits < 8.0 && v.log_abs.is_finite());
}

#[test]
fn modulus_is_symmetric_under_swap() {
    let p = params(0.8, 1.1);
    for bra in BRAS {
        for l in 0..=50 {
            for n in 0..=50 {
                let a = overlap_exact(l, n, &p, bra, bra.opposite()).modulus();
                let b = overlap_exact(n, l, &p, bra.opposite(), bra).modulus();
                assert!((a - b).abs() <= 1e-12, "({l},{n})");
            }
        }
    }
}

#[test]
fn log_path_matches_exact_rational_sum() {
    // rational β keeps the oracle exact; the tolerance grows with the
    // cancellation inside the alternating sum
    for (num, den) in [(1, 20), (3, 10), (9, 10)] {
        let beta = num as f64 / den as f64;
        let p = params(beta, 0.0);
        for (l, n) in [(0, 0), (3, 7), (50, 48), (100, 101), (150, 150)] {
            let oracle = ln_overlap_exact(l, n, &rational(num, den));
            let summed = overlap_log(l, n, &p, Displacement::Plus, Displacement::Minus);
            let tol = 2e-13 * (1.0 + 10f64.powf(summed.lost_digits));
            assert!((summed.log_abs - oracle).abs() <= tol, "beta {beta} ({l},{n}): {summed:?} vs {oracle}");
            let got = overlap_log_abs(l, n, &p, Displacement::Plus);
            let tol = 2e-13 * (1.0 + 10f64.powf(summed.lost_digits.min(4.0))) + 1e-10;
            assert!((got - oracle).abs() <= tol, "beta {beta} ({l},{n}): {got} vs {oracle}");
        }
    }
}

#[test]
fn log_path_sign_matches_exact_sum() {
    let beta = rational(7, 10);
    let p = params(0.7, 0.0);
    for l in (0..=60).step_by(7) {
        for n in (0..=60).step_by(5) {
            let v = overlap_exact(l, n, &p, Displacement::Plus, Displacement::Plus.opposite());
            // bra +: (+)^l (-)^n times the sum
            let expected = overlap_sum_sign(l, n, &beta) * if n % 2 == 0 { 1 } else { -1 };
            let got = if v.to_complex().re > 0.0 { 1 } else { -1 };
            assert_eq!(got, expected, "({l},{n})");
        }
    }
}

#[test]
fn log_path_survives_past_the_factorial_threshold() {
    let p = ModelParams::from_ratios(0.1, 1.0).unwrap();
    assert!(overlap_direct(171, 170, &p, Displacement::Plus, Displacement::Minus).is_none());
    for n in [170u64, 171, 500, 10_000, 1_000_000] {
        let v = overlap_log_abs(n, n, &p, Displacement::Plus);
        assert!(v.is_finite() && v <= 0.0, "n {n}: {v}");
        let e = overlap_exact(n, n - 1, &p, Displacement::Minus, Displacement::Plus);
        assert!(e.log_abs.is_finite());
    }
    const { assert!(DIRECT_LIMIT < 170) };
}

#[test]
fn bessel_limit_tracks_exact_overlaps_at_large_n() {
    let p = ModelParams::from_ratios(0.001, 0.9).unwrap();
    for order in 0..=3i64 {
        let ns: Vec<u64> = (0..10).map(|i| 10_000 + i * 99_000).collect();
        let exact: Vec<f64> = ns
            .iter()
            .map(|&n| overlap_exact(n, n - order as u64, &p, Displacement::Plus, Displacement::Minus).modulus_sq())
            .collect();
        let bessel: Vec<f64> =
            ns.iter().map(|&n| overlap_bessel(n, order, &p, Displacement::Plus).unwrap().modulus_sq()).collect();
        let peak = exact.iter().cloned().fold(0.0, f64::max);
        for (e, b) in exact.iter().zip(&bessel) {
            assert!((e - b).abs() <= 0.01 * peak, "p {order}: {e} vs {b}");
        }
    }
}

proptest! {
    #[test]
    fn overlaps_never_exceed_one(l in 0u64..400, n in 0u64..400, beta in 0.0f64..6.0, phi in -4.0f64..4.0) {
        let p = params(beta, phi);
        for bra in BRAS {
            let v = overlap_exact(l, n, &p, bra, bra.opposite());
            prop_assert!(v.log_abs <= 0.0);
            prop_assert!((0.0..2.0 * PI).contains(&v.phase));
        }
    }

    #[test]
    fn swapping_ladders_flips_sign_by_parity(l in 0u64..120, n in 0u64..120, beta in 0.01f64..3.0) {
        // D(-β) = P D(β) P with P the parity operator
        let p = params(beta, 0.0);
        let a = overlap_exact(l, n, &p, Displacement::Plus, Displacement::Minus).to_complex();
        let b = overlap_exact(l, n, &p, Displacement::Minus, Displacement::Plus).to_complex();
        let parity = if (l + n) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((a - parity * b).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn direct_and_log_paths_agree_without_cancellation(l in 0u64..150, n in 0u64..150, beta in 0.01f64..0.3) {
        let p = params(beta, 0.0);
        let d = overlap_direct(l, n, &p, Displacement::Plus, Displacement::Minus);
        let g = overlap_log(l, n, &p, Displacement::Plus, Displacement::Minus);
        if let Some(d) = d {
            prop_assert!((d.log_abs - g.log_abs).abs() <= 1e-11 * (1.0 + d.log_abs.abs()));
        }
    }
}
