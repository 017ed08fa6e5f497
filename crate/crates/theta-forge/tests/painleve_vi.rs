use std::f64::consts::PI;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use theta_forge::constants::klein_j;
use theta_forge::cx::{c, C64, I};
use theta_forge::painleve::*;
use theta_forge::theta::{theta, theta_dx, varthetas, UHTau};
use theta_forge::ThetaError;

// 2F1(a, b; 1; x) by its power series, |x| < 1
fn hyp(a: f64, b: f64, x: C64) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..4000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((nf + 1.0) * (nf + 1.0)) * x;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

fn random_point(rng: &mut ChaCha8Rng) -> (C64, C64, C64) {
    let a = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
    let b = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3));
    let x = c(rng.gen_range(0.2..0.8), rng.gen_range(-0.3..0.3));
    (a, b, x)
}

fn hitchin(a: C64, b: C64) -> PicardHitchinParams {
    PicardHitchinParams { a, b, variant: Variant::Hitchin }
}

fn picard(a: C64, b: C64) -> PicardHitchinParams {
    PicardHitchinParams { a, b, variant: Variant::Picard }
}

#[test]
fn symmetric_point_of_the_integrals() {
    let e = complete_elliptic(c(0.5, 0.0)).unwrap();
    assert!((e.k - e.kp).norm() < 1e-14);
    assert!((e.tau() - I).norm() < 1e-14);
}

#[test]
fn integrals_match_hypergeometric_series() {
    for x in [c(0.3, 0.0), c(0.2, 0.4), c(-0.5, 0.1), c(0.6, -0.3)] {
        let e = complete_elliptic(x).unwrap();
        assert!((e.k - PI / 2.0 * hyp(0.5, 0.5, x)).norm() < 1e-13, "K at {x}");
        assert!((e.e - PI / 2.0 * hyp(-0.5, 0.5, x)).norm() < 1e-13, "E at {x}");
    }
}

#[test]
fn legendre_relation() {
    for x in [c(0.3, 0.0), c(0.2, 0.4), c(-0.5, 0.1), c(0.9, -0.3), c(1.4, 0.5)] {
        assert!(complete_elliptic(x).unwrap().legendre_residual() < 1e-12, "{x}");
    }
}

#[test]
fn branch_points_rejected() {
    assert!(matches!(complete_elliptic(c(0.0, 0.0)), Err(ThetaError::BranchPointProximity(_))));
    assert!(matches!(complete_elliptic(c(1.0, 1e-11)), Err(ThetaError::BranchPointProximity(_))));
}

#[test]
fn derivative_rules_against_differences() {
    for x in [c(0.3, 0.0), c(0.4, 0.2)] {
        let d = complete_elliptic(x).unwrap().derivatives();
        let h = 1e-3;
        let f = |s: C64| {
            let e = complete_elliptic(s).unwrap();
            [e.k, e.kp, e.e, e.ep]
        };
        let (p1, m1, p2, m2) = (f(x + h), f(x - h), f(x + h / 2.0), f(x - h / 2.0));
        for i in 0..4 {
            let d1 = (p1[i] - m1[i]) / (2.0 * h);
            let d2 = (p2[i] - m2[i]) / h;
            let fd = (4.0 * d2 - d1) / 3.0;
            assert!((fd - d[i]).norm() < 1e-9 * d[i].norm().max(1.0), "row {i} at {x}");
        }
    }
}

#[test]
fn nome_series_coefficients_by_reversion() {
    let want: Vec<BigInt> = [1, 8, 84, 992, 12514].iter().map(|v| BigInt::from(*v)).collect();
    assert_eq!(nome_series_coefficients(5), want);
    // and the truncated series approaches exp(pi i tau(x)) near x = 1
    let coeffs = nome_series_coefficients(12);
    let x = c(0.95, 0.02);
    let m = (1.0 - x) / 16.0;
    let mut s = C64::new(0.0, 0.0);
    for (j, cf) in coeffs.iter().enumerate() {
        s += m.powi(j as i32 + 1) * cf.to_string().parse::<f64>().unwrap();
    }
    let q = (PI * I * complete_elliptic(x).unwrap().tau()).exp();
    assert!((s - q).norm() < 1e-15);
}

#[test]
fn substitution_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let t = UHTau::new(c(rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.6))).unwrap();
        let v = varthetas(&t).unwrap();
        let x = (v[2] / v[1]).powi(4);
        assert!((lambda_prime(t.tau()).unwrap() - x).norm() < 1e-13);
        let back = tau_of_x(x).unwrap();
        let (j0, j1) = (klein_j(&t).unwrap(), klein_j(&back).unwrap());
        assert!((j0 - j1).norm() < 1e-9 * j0.norm().max(1.0));
    }
}

#[test]
fn lambda_prime_far_from_the_domain() {
    // small imaginary part: evaluated through the modular reduction
    let t = c(0.31, 0.02);
    let x = lambda_prime(t).unwrap();
    let back = tau_of_x(x).unwrap();
    let tt = UHTau::new(t).unwrap();
    let (j0, j1) = (klein_j(&tt).unwrap(), klein_j(&back).unwrap());
    assert!((j0 - j1).norm() < 1e-8 * j0.norm().max(1.0));
}

#[test]
fn tau_derivative_and_vartheta2_in_x() {
    let x = c(0.35, 0.15);
    let e = complete_elliptic(x).unwrap();
    let t = UHTau::new(e.tau()).unwrap();
    let v = varthetas(&t).unwrap();
    // d/dtau = pi i x (x - 1) vartheta3^4 d/dx
    let dtau_dx = tau_dx(x).unwrap();
    assert!((dtau_dx * PI * I * x * (x - 1.0) * v[1].powi(4) - 1.0).norm() < 1e-12);
    assert!((v[0] * v[0] - 2.0 / PI * (1.0 - x).sqrt() * e.kp).norm() < 1e-13);
}

#[test]
fn hitchin_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (a, b, x) = random_point(&mut rng);
        let (y_disp, y_split) = hitchin_forms(&hitchin(a, b), x).unwrap();
        assert!((y_disp - y_split).norm() < 1e-9 * y_split.norm().max(1.0), "{a} {b} {x}");
    }
}

#[test]
fn hitchin_tau_and_wp_forms() {
    let (a, b) = (c(0.2, 0.1), c(0.3, -0.1));
    let tau = c(0.1, 0.9);
    let (x, y) = hitchin_tau_form(a, b, tau).unwrap();
    let v = varthetas(&UHTau::new(tau).unwrap()).unwrap();
    assert!((x - (v[2] / v[1]).powi(4)).norm() < 1e-14);
    // the x-form at that x; tau(x) returns the same tau since it lies in the principal domain
    let yx = hitchin_solution(&hitchin(a, b), x).unwrap();
    assert!((yx - y).norm() < 1e-9 * y.norm().max(1.0));
    let yw = hitchin_wp_form(a, b, tau).unwrap();
    assert!((yw - y).norm() < 1e-9 * y.norm().max(1.0));
}

#[test]
fn hitchin_satisfies_p6() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..6 {
        let (a, b, x) = random_point(&mut rng);
        let p = hitchin(a, b);
        let r = p6_residual(&|s| hitchin_solution(&p, s), x, &HITCHIN_PARAMS).unwrap();
        assert!(r < 1e-6, "{a} {b} {x}: {r}");
    }
}

#[test]
fn picard_satisfies_p6() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..6 {
        let (a, b, x) = random_point(&mut rng);
        let p = picard(a, b);
        let r = p6_residual(&|s| picard_solution(&p, s), x, &PICARD_PARAMS).unwrap();
        assert!(r < 1e-6, "{a} {b} {x}: {r}");
    }
}

#[test]
fn picard_prefactor_as_printed_fails() {
    let p = picard(c(0.2, 0.1), c(0.3, -0.1));
    let x = c(0.4, 0.1);
    let r = p6_residual(&|s| picard_as_printed(&p, s), x, &PICARD_PARAMS).unwrap();
    assert!(r > 1e-2, "{r}");
}

#[test]
fn constant_candidate_fails() {
    let r = p6_residual(&|_| Ok(c(2.0, 0.0)), c(0.3, 0.2), &PICARD_PARAMS).unwrap();
    assert!(r > 0.1);
}

#[test]
fn residual_refuses_singular_values() {
    let x = c(0.3, 0.2);
    assert!(matches!(p6_residual(&|s| Ok(s), x, &PICARD_PARAMS), Err(ThetaError::PoleTooClose)));
    assert!(matches!(p6_residual(&|_| Ok(c(1.0, 0.0)), x, &PICARD_PARAMS), Err(ThetaError::PoleTooClose)));
}

#[test]
fn picard_tau_form_and_derivative() {
    let (a, b) = (c(0.2, 0.1), c(0.3, -0.1));
    let tau = c(0.1, 0.9);
    let (x, y) = picard_tau_form(a, b, tau).unwrap();
    let yx = picard_solution(&picard(a, b), x).unwrap();
    assert!((yx - y).norm() < 1e-12 * y.norm().max(1.0));
    let (y0, dy) = picard_solution_dx(&picard(a, b), x).unwrap();
    let h = 1e-4;
    let f = |s: C64| picard_solution(&picard(a, b), s).unwrap();
    let fd = (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
    assert!((y0 - yx).norm() < 1e-15 * yx.norm().max(1.0));
    assert!((fd - dy).norm() < 1e-8 * dy.norm().max(1.0));
}

#[test]
fn okamoto_maps_picard_to_hitchin() {
    let (a, b) = (c(0.25, -0.1), c(0.2, 0.15));
    let x = c(0.45, 0.12);
    let yo = okamoto_of_picard(&picard(a, b), x).unwrap();
    let yh = hitchin_solution(&hitchin(a, b), x).unwrap();
    assert!((yo - yh).norm() < 1e-9 * yh.norm().max(1.0));
    let r = p6_residual(&|s| okamoto_of_picard(&picard(a, b), s), x, &HITCHIN_PARAMS).unwrap();
    assert!(r < 1e-5, "{r}");
}

#[test]
fn pole_lattice_admissibility_and_zeros() {
    let p = hitchin(c(0.3, 0.4), c(0.2, -0.1));
    let lat = pole_lattice(&p, -6..=6, -6..=6).unwrap();
    let mut brute = 0;
    for n in -6i64..=6 {
        for m in -6i64..=6 {
            // Im((m - B)/(n + A)) > 0 written out in real arithmetic
            let (pr, pi) = (m as f64 - p.b.re, -p.b.im);
            let (qr, qi) = (n as f64 + p.a.re, p.a.im);
            if pi * qr - pr * qi > 0.0 {
                brute += 1;
            }
        }
    }
    assert_eq!(lat.admissible_count, brute);
    assert_eq!(lat.poles.len(), brute);
    assert_eq!(lat.skipped_count, 13 * 13 - brute);
    assert_eq!(lat.verified_count, brute);
    for pole in &lat.poles {
        assert!(pole.tau.im > 0.0);
        assert!(pole.theta1_abs < 1e-8);
    }
}

#[test]
fn pole_lattice_accumulates_at_fixed_singularities() {
    let p = hitchin(I, c(0.0, 0.0));
    let dist = |r: i64| {
        let lat = pole_lattice(&p, -r..=r, -r..=r).unwrap();
        assert!(!lat.poles.is_empty());
        lat.poles.iter().map(|q| q.x.norm().min((q.x - 1.0).norm())).fold(f64::INFINITY, f64::min)
    };
    let (d2, d5, d10) = (dist(2), dist(5), dist(10));
    assert!(d5 < d2 && d10 < d5, "{d2} {d5} {d10}");
}

#[test]
fn tau_functions_and_their_zeros() {
    let (a, b, x) = (c(0.2, 0.1), c(0.3, -0.1), c(0.4, 0.15));
    let p = hitchin(a, b);
    let (t1, t2) = tau_functions(&p, x).unwrap();
    let tau = tau_of_x(x).unwrap();
    let z = a * tau.tau() + b;
    let bracket = theta_dx(1, z, &tau, 1).unwrap() / theta(1, z, &tau).unwrap() + 2.0 * PI * I * a;
    assert!((t2 / t1 - bracket).norm() < 1e-12 * bracket.norm());
    let y = hitchin_from_tau_functions(&p, x).unwrap();
    let yh = hitchin_solution(&p, x).unwrap();
    assert!((y - yh).norm() < 1e-8 * yh.norm().max(1.0));

    // put a pole at x0 by choosing B = m - n tau0 - A tau0
    let x0 = c(0.45, 0.1);
    let tau0 = tau_of_x(x0).unwrap().tau();
    let (n, m) = (1i64, 2i64);
    let b0 = m as f64 - n as f64 * tau0 - a * tau0;
    let p0 = hitchin(a, b0);
    let (t1, _) = tau_functions(&p0, x0 + 1e-12).unwrap();
    assert!(t1.norm() < 1e-8);
    let lat = pole_lattice(&p0, n..=n, m..=m).unwrap();
    assert_eq!(lat.poles.len(), 1);
    assert!((lat.poles[0].x - x0).norm() < 1e-10);
    assert!(matches!(hitchin_solution(&p0, x0), Err(ThetaError::PoleHit)));
}

#[test]
fn second_series_poles_found_and_confirmed() {
    // choose A so that the bracket vanishes at x0
    let x0 = c(0.5, 0.12);
    let tau0 = tau_of_x(x0).unwrap();
    let z0 = c(0.21, 0.13);
    let r = theta_dx(1, z0, &tau0, 1).unwrap() / theta(1, z0, &tau0).unwrap();
    let a = -r / (2.0 * PI * I);
    let b = z0 - a * tau0.tau();
    let p = hitchin(a, b);
    assert!((mero_f(&p, x0).unwrap() + I * a).norm() < 1e-10);
    let roots = second_series_poles(&p, c(0.3, -0.1), c(0.7, 0.3), 8).unwrap();
    let hit = roots.iter().find(|z| (*z - x0).norm() < 1e-8);
    assert!(hit.is_some(), "{roots:?}");
    // Hitchin has a simple pole with residue 2 x0 (1 - x0); Picard stays finite
    for d in [1e-4, 1e-5] {
        let y = hitchin_solution(&p, x0 + d).unwrap();
        let res = 2.0 * x0 * (1.0 - x0);
        assert!((y * d - res).norm() < 1e-2 * res.norm(), "{}", y * d);
        let yo = okamoto_of_picard(&picard(a, b), x0 + d).unwrap();
        assert!((yo * d - res).norm() < 1e-2 * res.norm());
    }
    assert!(picard_solution(&picard(a, b), x0).unwrap().norm() < 1e3);
}

#[test]
fn heun_schwarzian() {
    assert!(heun_schwarzian_check(c(0.5, 0.0)).unwrap() < 1e-5);
    assert!(heun_schwarzian_check(c(0.3, 0.1)).unwrap() < 1e-5);
    let (r1, r2) = (heun_schwarzian_check(c(0.3, 0.1)).unwrap(), heun_schwarzian_check(c(-0.3, -0.1)).unwrap());
    assert!((r1 - r2).abs() < 1e-6);
    assert!(matches!(heun_schwarzian_check(c(1.0, 0.0)), Err(ThetaError::BranchPointProximity(_))));
}

#[test]
fn heun_potential_with_half_coefficient_fails() {
    for s in [c(0.5, 0.0), c(0.3, 0.1)] {
        assert!((heun_schwarzian_as_printed(s).unwrap() - 0.5).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn legendre_relation_random(r in 0.05f64..0.9, t in 0.0f64..(2.0 * PI)) {
        let x = C64::from_polar(r, t);
        prop_assume!((x - 1.0).norm() >= 0.05 && x.norm() >= 0.05);
        prop_assert!(complete_elliptic(x).unwrap().legendre_residual() < 1e-11);
    }

    #[test]
    fn tau_of_x_in_upper_half_plane(re in -1.5f64..2.5, im in -1.5f64..1.5) {
        let x = c(re, im);
        prop_assume!(x.norm() > 0.05 && (x - 1.0).norm() > 0.05);
        prop_assert!(complete_elliptic(x).unwrap().tau().im > 0.0);
    }
}
