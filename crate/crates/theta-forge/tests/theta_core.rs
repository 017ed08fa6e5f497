use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use theta_forge::constants::eta_dedekind;
use theta_forge::theta::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn tau(re: f64, im: f64) -> UHTau {
    UHTau::new(c(re, im)).unwrap()
}

fn budget() -> SeriesBudget {
    SeriesBudget::default()
}

// Straight transcription of the defining sum, no reduction of any kind.
fn naive_char(alpha: i64, beta: i64, x: C64, t: C64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for k in -60i64..=60 {
        let n = k as f64 + alpha as f64 / 2.0;
        let arg = C64::i() * PI * n * n * t + 2.0 * PI * C64::i() * n * (x + beta as f64 / 2.0);
        s += arg.exp();
    }
    s
}

fn naive_char_dx(alpha: i64, beta: i64, x: C64, t: C64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for k in -60i64..=60 {
        let n = k as f64 + alpha as f64 / 2.0;
        let arg = C64::i() * PI * n * n * t + 2.0 * PI * C64::i() * n * (x + beta as f64 / 2.0);
        s += 2.0 * PI * C64::i() * n * arg.exp();
    }
    s
}

#[test]
fn theta1_vanishes_at_origin() {
    let v = theta_q(1, c(0.0, 0.0), &tau(0.0, 1.0), &budget()).unwrap();
    assert!(v.value.norm() < 1e-15);
}

#[test]
fn theta3_at_i_matches_gamma_closed_form() {
    // pi^(1/4) / Gamma(3/4)
    let expected = 1.086_434_811_213_308_f64;
    let v = theta_q(3, c(0.0, 0.0), &tau(0.0, 1.0), &SeriesBudget::new(1e-15, 64).unwrap()).unwrap();
    assert!((v.value.re - expected).abs() < 1e-15, "{}", v.value);
    assert!(v.value.im.abs() < 1e-16);
    assert!(v.bound <= 1e-15);
}

#[test]
fn jacobi_quartic_identity() {
    let t = tau(0.3, 1.1);
    let [v2, v3, v4] = varthetas(&t).unwrap();
    assert!((v3.powi(4) - v2.powi(4) - v4.powi(4)).norm() < 1e-13);
}

#[test]
fn characteristic_table() {
    let t = tau(0.17, 0.93);
    let x = c(0.21, -0.07);
    let t1 = theta(1, x, &t).unwrap();
    let t3 = theta(3, x, &t).unwrap();
    assert!((theta_ch(ThetaChar::new(1, 1), x, &t).unwrap() + t1).norm() < 1e-14);
    assert!((theta_ch(ThetaChar::new(0, 0), x, &t).unwrap() - t3).norm() < 1e-14);
}

#[test]
fn unreduced_characteristic_matches_brute_force() {
    let t = tau(0.1, 1.2);
    let x = c(0.3, 0.05);
    for (a, b) in [(3, 2), (-1, 5), (2, -3), (5, 7), (-4, 1)] {
        let got = theta_ch(ThetaChar::new(a, b), x, &t).unwrap();
        let want = naive_char(a, b, x, t.tau());
        assert!((got - want).norm() < 1e-13, "({a},{b}) {got} vs {want}");
    }
}

#[test]
fn reduction_sign_law() {
    let (r, s) = ThetaChar::new(3, 2).reduce();
    assert_eq!(r, ThetaChar::new(1, 0));
    assert_eq!(s, -1.0);
    let (r, s) = ThetaChar::new(1, 3).reduce();
    assert_eq!(r, ThetaChar::new(1, 1));
    assert_eq!(s, -1.0);
    let (_, s) = ThetaChar::new(0, 3).reduce();
    assert_eq!(s, 1.0);
    assert_eq!(ThetaChar::new(1, 1).parity(), 0);
    assert_eq!(ThetaChar::new(1, 0).parity(), 1);
    assert_eq!(ThetaChar::new(3, 5).parity(), 0);
}

#[test]
fn theta1_prime_at_zero_is_pi_varthetas() {
    for t in [tau(0.0, 1.0), tau(0.3, 1.1), tau(-0.4, 0.95)] {
        let d = theta_dx_q(1, c(0.0, 0.0), &t, 1, &budget()).unwrap().value;
        let [v2, v3, v4] = varthetas(&t).unwrap();
        assert!((d - PI * v2 * v3 * v4).norm() < 1e-13);
        let d3 = theta_dx_q(3, c(0.0, 0.0), &t, 1, &budget()).unwrap().value;
        assert!(d3.norm() < 1e-15);
    }
}

#[test]
fn third_derivative_gives_weierstrass_eta_at_i() {
    // eta(i) = pi/4
    let t = tau(0.0, 1.0);
    let d1 = theta_dx_q(1, c(0.0, 0.0), &t, 1, &budget()).unwrap().value;
    let d3 = theta_dx_q(1, c(0.0, 0.0), &t, 3, &budget()).unwrap().value;
    assert!((d3 + 12.0 * (PI / 4.0) * d1).norm() < 1e-13);
}

#[test]
fn derivative_orders_match_naive_series() {
    let t = tau(0.2, 0.9);
    let x = c(0.13, 0.04);
    let got = theta_ch_dx(ThetaChar::new(1, 0), x, &t, 1).unwrap();
    let want = naive_char_dx(1, 0, x, t.tau());
    assert!((got - want).norm() < 1e-12);
    // second derivative by symmetric difference of the first
    let h = 1e-4;
    let d1p = theta_dx(2, x + h, &t, 1).unwrap();
    let d1m = theta_dx(2, x - h, &t, 1).unwrap();
    let d2 = theta_dx(2, x, &t, 2).unwrap();
    assert!(((d1p - d1m) / (2.0 * h) - d2).norm() < 1e-6 * d2.norm().max(1.0));
}

#[test]
fn tail_not_converged_near_real_axis() {
    let t = tau(0.0, 1e-4);
    let r = theta_q(3, c(0.0, 0.0), &t, &SeriesBudget::new(1e-15, 50).unwrap());
    assert!(matches!(r, Err(theta_forge::ThetaError::TailNotConverged { .. })));
}

#[test]
fn budget_validation() {
    assert!(SeriesBudget::new(0.0, 20).is_err());
    assert!(SeriesBudget::new(1e-10, 4).is_err());
    assert!(UHTau::new(c(0.0, -1.0)).is_err());
    let t = tau(0.25, 0.8);
    assert!((t.q() - (C64::i() * PI * t.tau()).exp()).norm() < 1e-16);
    assert!((t.q().norm() - (-PI * 0.8f64).exp()).abs() < 1e-16);
}

#[test]
fn half_shift_of_theta1_is_theta2() {
    let t = tau(0.0, 1.0);
    let x = c(0.17, 0.06);
    let (nc, pref) = shift_half_periods(ThetaChar::new(1, 1), 1, 0, x, &t);
    assert_eq!(nc, ThetaChar::new(1, 0));
    assert!((pref.norm() - 1.0).abs() < 1e-15);
    let lhs = naive_char(1, 1, x + 0.5, t.tau());
    let rhs = pref * theta_ch(nc, x, &t).unwrap();
    assert!((lhs - rhs).norm() < 1e-13);
    // theta_1(x + 1/2) = theta_2(x)
    let t1s = theta(1, x + 0.5, &t).unwrap();
    assert!((t1s - theta(2, x, &t).unwrap()).norm() < 1e-13);
}

#[test]
fn identity_shift() {
    let t = tau(0.1, 1.3);
    let x = c(0.2, 0.1);
    let ch = ThetaChar::new(0, 1);
    let (nc, pref) = shift_half_periods(ch, 0, 0, x, &t);
    assert_eq!(nc, ch);
    assert_eq!(pref, C64::new(1.0, 0.0));
}

#[test]
fn shifts_match_series_for_all_small_offsets() {
    let t = tau(0.23, 0.97);
    let x = c(0.11, -0.05);
    for a in 0..2 {
        for b in 0..2 {
            for n in -3..=3 {
                for m in -3..=3 {
                    let ch = ThetaChar::new(a, b);
                    let (nc, pref) = shift_half_periods(ch, n, m, x, &t);
                    let shifted = x + n as f64 / 2.0 + m as f64 / 2.0 * t.tau();
                    let lhs = naive_char(a, b, shifted, t.tau());
                    let rhs = pref * theta_ch(nc, x, &t).unwrap();
                    assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{a}{b} {n} {m}");
                }
            }
        }
    }
}

#[test]
fn double_shift_is_quasi_periodicity() {
    let t = tau(0.0, 1.0);
    let x = c(0.21, 0.03);
    let (a, b) = (1i64, 1i64);
    for (n, m) in [(1i64, 1i64), (2, -1), (-1, 2)] {
        let (nc, pref) = shift_half_periods(ThetaChar::new(a, b), 2 * n, 2 * m, x, &t);
        assert_eq!(nc, ThetaChar::new(a, b));
        let sign = if (n * a - m * b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let law = sign * (-C64::i() * PI * m as f64 * (2.0 * x + m as f64 * t.tau())).exp();
        assert!((pref - law).norm() < 1e-12 * law.norm());
    }
}

#[test]
fn reduce_x_moves_into_cell() {
    let t = tau(0.3, 1.1);
    let x = c(3.7, 2.5);
    for ch in [ThetaChar::new(1, 1), ThetaChar::new(0, 1), ThetaChar::new(1, 0)] {
        let (xr, p, q, pref) = reduce_x(ch, x, &t);
        assert!(xr.re.abs() <= 0.5 + 1e-12);
        assert!(xr.im.abs() <= t.im() / 2.0 + 1e-12);
        assert!((xr + p as f64 + q as f64 * t.tau() - x).norm() < 1e-12);
        let lhs = theta_ch(ch, x, &t).unwrap();
        let rhs = pref * theta_ch(ch, xr, &t).unwrap();
        assert!((lhs - rhs).norm() < 1e-11 * lhs.norm());
    }
}

#[test]
fn shifted_derivative_without_shift_is_plain_derivative() {
    let t = tau(0.1, 1.2);
    let x = c(0.2, 0.05);
    let got = theta_dx_shifted(ThetaChar::new(1, 1), 0, 0, x, &t).unwrap();
    let want = -theta_dx(1, x, &t, 1).unwrap();
    assert!((got - want).norm() < 1e-12);
}

#[test]
fn shifted_derivative_vs_finite_differences() {
    let t = tau(0.0, 1.0);
    let x = c(0.23, 0.11);
    let h = 1e-4;
    for a in 0..2 {
        for b in 0..2 {
            let ch = ThetaChar::new(a, b);
            let (n, m) = (1, 1);
            let f = |u: C64| {
                let (nc, pref) = shift_half_periods(ch, n, m, u, &t);
                pref * theta_ch(nc, u, &t).unwrap()
            };
            let fd = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
            let got = theta_dx_shifted(ch, n, m, x, &t).unwrap();
            assert!((got - fd).norm() < 1e-9 * fd.norm().max(1.0), "{a}{b}: {got} vs {fd}");
        }
    }
}

#[test]
fn shifted_derivative_all_offsets_vs_series() {
    let t = tau(0.15, 1.05);
    let x = c(0.19, 0.07);
    for a in 0..2 {
        for b in 0..2 {
            for n in -2..=2 {
                for m in -2..=2 {
                    let ch = ThetaChar::new(a, b);
                    let pt = x + n as f64 / 2.0 + m as f64 / 2.0 * t.tau();
                    let want = naive_char_dx(a, b, pt, t.tau());
                    let got = theta_dx_shifted(ch, n, m, x, &t).unwrap();
                    assert!((got - want).norm() < 1e-11 * want.norm().max(1.0), "{a}{b} {n} {m}");
                }
            }
        }
    }
}

#[test]
fn shifted_derivative_rejects_lattice_points() {
    let t = tau(0.0, 1.0);
    let r = theta_dx_shifted(ThetaChar::new(0, 0), 1, 0, c(0.0, 0.0), &t);
    assert!(matches!(r, Err(theta_forge::ThetaError::PoleAtLatticePoint(_))));
}

#[test]
fn constant_derivative_at_origin() {
    let t = tau(0.12, 1.1);
    let eta = eta_dedekind(&t, &budget()).unwrap().value;
    let v = theta_const_dx_shifted(ThetaChar::new(1, 1), 0, 0, &t).unwrap();
    // theta[1,1] = -theta_1, and theta_1'(0) = 2 pi eta^3
    assert!((v + 2.0 * PI * eta.powi(3)).norm() < 1e-13);
    for ch in [ThetaChar::new(0, 0), ThetaChar::new(1, 0), ThetaChar::new(0, 1)] {
        assert!(theta_const_dx_shifted(ch, 0, 0, &t).unwrap().norm() < 1e-15);
    }
}

#[test]
fn constant_derivative_quarter_lattice_example() {
    let t = tau(0.0, 1.3);
    let got = theta_const_dx_shifted(ThetaChar::new(1, 1), 0, 1, &t).unwrap();
    let want = naive_char_dx(1, 1, t.tau() / 2.0, t.tau());
    assert!((got - want).norm() < 1e-12);
}

#[test]
fn constant_derivative_all_sixteen_cells() {
    let t = tau(-0.21, 0.92);
    for a in 0..2 {
        for b in 0..2 {
            for n in 0..2 {
                for m in 0..2 {
                    let pt = n as f64 / 2.0 + m as f64 / 2.0 * t.tau();
                    let want = naive_char_dx(a, b, pt, t.tau());
                    let got = theta_const_dx_shifted(ThetaChar::new(a, b), n, m, &t).unwrap();
                    assert!((got - want).norm() < 1e-11, "{a}{b}{n}{m}: {got} vs {want}");
                }
            }
        }
    }
}

fn fd_tau() -> impl Strategy<Value = UHTau> {
    (-0.5f64..0.5, 0.0f64..1.5).prop_map(|(re, extra)| {
        let floor = (1.0 - re * re).sqrt();
        UHTau::new(c(re, floor + extra)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classical_quadratic_relations(t in fd_tau(), xr in -0.5f64..0.5, xi in -1.0f64..1.0) {
        let x = c(xr, xi * t.im() / 4.0);
        let [v2, v3, v4] = varthetas(&t).unwrap();
        let th: Vec<C64> = (1..=4).map(|k| theta(k, x, &t).unwrap()).collect();
        let r1 = v2 * v2 * th[3] * th[3] - v4 * v4 * th[1] * th[1] - v3 * v3 * th[0] * th[0];
        let r2 = v2 * v2 * th[2] * th[2] - v3 * v3 * th[1] * th[1] - v4 * v4 * th[0] * th[0];
        prop_assert!(r1.norm() < 1e-12);
        prop_assert!(r2.norm() < 1e-12);
    }

    #[test]
    fn quarter_period_identities(t in fd_tau()) {
        let q = c(0.25, 0.0);
        let [_, v3, v4] = varthetas(&t).unwrap();
        let th: Vec<C64> = (1..=4).map(|k| theta(k, q, &t).unwrap()).collect();
        prop_assert!((th[3] - th[2]).norm() < 1e-13);
        prop_assert!((th[1] - th[0]).norm() < 1e-13);
        prop_assert!((2.0 * th[2].powi(4) - v4 * v3.powi(3) - v3 * v4.powi(3)).norm() < 1e-12);
        prop_assert!((2.0 * th[0].powi(4) - v4 * v3.powi(3) + v3 * v4.powi(3)).norm() < 1e-12);
    }

    #[test]
    fn logarithmic_derivative_differences(t in fd_tau(), xr in -0.45f64..0.45, xi in -0.2f64..0.2) {
        let x = c(xr, xi);
        prop_assume!(theta(1, x, &t).unwrap().norm() > 1e-3);
        let [v2, v3, v4] = varthetas(&t).unwrap();
        let v = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), v2, v3, v4];
        let th: Vec<C64> = (0..=4).map(|k| if k == 0 { C64::new(0.0, 0.0) } else { theta(k, x, &t).unwrap() }).collect();
        let dth: Vec<C64> = (0..=4).map(|k| if k == 0 { C64::new(0.0, 0.0) } else { theta_dx(k, x, &t, 1).unwrap() }).collect();
        for (k, nu, mu) in DIFF_TABLE {
            let (k, nu, mu) = (k as usize, nu as usize, mu as usize);
            let sign = if nu > mu { 1.0 } else { -1.0 };
            let lhs = dth[nu] / th[nu] - dth[mu] / th[mu];
            let rhs = sign * PI * v[k] * v[k] * th[1] * th[k] / (th[nu] * th[mu]);
            prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn parity(t in fd_tau(), xr in -0.5f64..0.5, xi in -0.3f64..0.3) {
        let x = c(xr, xi);
        prop_assert!((theta(1, -x, &t).unwrap() + theta(1, x, &t).unwrap()).norm() < 1e-14);
        for k in 2..=4 {
            prop_assert!((theta(k, -x, &t).unwrap() - theta(k, x, &t).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn halving_tolerance_stays_within_bound(t in fd_tau(), xr in -0.5f64..0.5, k in 1u8..=4, tol_exp in 4i32..12) {
        let x = c(xr, 0.1);
        let tol = 10f64.powi(-tol_exp);
        let coarse = theta_q(k, x, &t, &SeriesBudget::new(tol, 400).unwrap()).unwrap();
        let fine = theta_q(k, x, &t, &SeriesBudget::new(tol / 2.0, 400).unwrap()).unwrap();
        prop_assert!((coarse.value - fine.value).norm() <= coarse.bound);
        prop_assert!(coarse.tail <= tol);
    }
}
