use std::f64::consts::PI;

use proptest::prelude::*;

use theta_forge::constants::{branch_points, eta_w, g2_g3_lambert};
use theta_forge::cx::{c, C64, I};
use theta_forge::series::{sigma_series, SeriesOptions, SigmaPipeline};
use theta_forge::theta::{theta, varthetas, SeriesBudget, UHTau};
use theta_forge::weierstrass::*;
use theta_forge::ThetaError;

fn tau(re: f64, im: f64) -> UHTau {
    UHTau::new(c(re, im)).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

#[test]
fn sigma_normalisation() {
    let t = tau(0.1, 1.2);
    assert!(sigma_from_theta(C64::new(0.0, 0.0), &t).unwrap().norm() < 1e-15);
    let h = 1e-5;
    let d = (sigma_from_theta(c(h, 0.0), &t).unwrap() - sigma_from_theta(c(-h, 0.0), &t).unwrap()) / (2.0 * h);
    assert!((d - 1.0).norm() < 1e-9);
    let jet = sigma_jet(C64::new(0.0, 0.0), &t).unwrap();
    assert!((jet[1] - 1.0).norm() < 1e-14 && jet[2].norm() < 1e-14);
}

#[test]
fn sigma_matches_series_engine() {
    let t = tau(0.0, 1.0);
    let (g2, g3) = g2_g3_lambert(&t, &SeriesBudget::default()).unwrap();
    let x = c(0.3, 0.0);
    let s = sigma_series(x, g2.value, g3.value, &SeriesOptions::default(), SigmaPipeline::Ck).unwrap();
    assert!((sigma_from_theta(x, &t).unwrap() - s.value).norm() < 1e-11);
}

#[test]
fn sigma_lambda_from_periods() {
    // omega = 1 specialisation, and the homogeneity of the general form
    let t = tau(0.2, 0.9);
    let x = c(0.4, -0.1);
    let bud = SeriesBudget::default();
    let eta = eta_w(&t, &bud).unwrap().value;
    for lam in 1..=3u8 {
        let k = lam + 1;
        let want = theta(k, x / 2.0, &t).unwrap() / theta(k, C64::new(0.0, 0.0), &t).unwrap() * (eta * x * x / 2.0).exp();
        assert!(rel(sigma_lambda(lam, x, &t).unwrap(), want) < 1e-13);
        let w = c(0.7, 0.3);
        let scaled = sigma_lambda_periods(lam, x * w, w, w * t.tau()).unwrap();
        assert!(rel(scaled, want) < 1e-12, "lambda {lam}");
    }
    assert!(sigma_lambda(4, x, &t).is_err());
}

#[test]
fn zeta_at_half_period_is_eta() {
    let t = tau(-0.3, 1.1);
    let p = zeta_wp(c(1.0, 0.0), &t).unwrap();
    let eta = eta_w(&t, &SeriesBudget::default()).unwrap().value;
    assert!(rel(p.zeta, eta) < 1e-13);
}

#[test]
fn wp_at_half_period_is_e1() {
    let t = tau(0.0, 1.0);
    let p = zeta_wp(c(1.0, 0.0), &t).unwrap();
    let e = branch_points(&t).unwrap();
    assert!((p.wp - e.e1).norm() < 1e-11);
    assert!(p.wp_prime.norm() < 1e-10);
}

#[test]
fn wp_theta_quotient_formula() {
    let t = tau(0.15, 0.95);
    let [v2, v3, v4] = varthetas(&t).unwrap();
    let _ = v2;
    for y in [c(0.13, 0.02), c(0.31, -0.2), c(-0.4, 0.25)] {
        let p = zeta_wp(2.0 * y, &t).unwrap();
        let q = theta(2, y, &t).unwrap() / theta(1, y, &t).unwrap();
        let want = PI * PI / 12.0 * (v3.powi(4) + v4.powi(4)) + PI * PI / 4.0 * v3 * v3 * v4 * v4 * q * q;
        assert!(rel(p.wp, want) < 1e-12);
    }
}

#[test]
fn parity_of_zeta_and_wp() {
    let t = tau(0.1, 1.3);
    let x = c(0.37, 0.11);
    let a = zeta_wp(x, &t).unwrap();
    let b = zeta_wp(-x, &t).unwrap();
    assert!((a.zeta + b.zeta).norm() < 1e-12);
    assert!((a.wp - b.wp).norm() < 1e-11);
    assert!((a.wp_prime + b.wp_prime).norm() < 1e-10);
}

#[test]
fn lattice_pole_rejected() {
    let t = tau(0.3, 1.1);
    let near = 2.0 * t.tau() + c(2.0, 0.0) + c(1e-8, 0.0);
    assert!(matches!(zeta_wp(near, &t), Err(ThetaError::LatticePole(_))));
    assert!(matches!(tau_derivatives(c(0.0, 0.0), &t), Err(ThetaError::LatticePole(_))));
    assert!(lattice_distance(c(1.0, 0.0), &t) > 0.99);
}

fn fd_tau<F: Fn(&UHTau) -> C64>(f: F, t: C64, h: f64) -> C64 {
    let p = f(&UHTau::new(t + h).unwrap());
    let m = f(&UHTau::new(t - h).unwrap());
    (p - m) / (2.0 * h)
}

#[test]
fn tau_rows_against_finite_differences() {
    let x = c(0.31, 0.0);
    let t0 = c(0.0, 1.2);
    let t = UHTau::new(t0).unwrap();
    let d = tau_derivatives(x, &t).unwrap();
    let h = 1e-4;
    let ds = fd_tau(|t| zeta_wp(x, t).unwrap().sigma, t0, h);
    let dz = fd_tau(|t| zeta_wp(x, t).unwrap().zeta, t0, h);
    let dp = fd_tau(|t| zeta_wp(x, t).unwrap().wp, t0, h);
    let dpp = fd_tau(|t| zeta_wp(x, t).unwrap().wp_prime, t0, h);
    assert!(rel(d.dsigma, ds) < 1e-8);
    assert!(rel(d.dzeta, dz) < 1e-8);
    assert!(rel(d.dwp, dp) < 1e-8);
    assert!(rel(d.dwp_prime, dpp) < 1e-8);
    // and the eta row
    let p = zeta_wp(x, &t).unwrap();
    let de = fd_tau(|t| eta_w(t, &SeriesBudget::default()).unwrap().value, t0, h);
    assert!(rel(eta_dtau_closed(p.eta, p.g2), de) < 1e-8);
}

#[test]
fn tau_system_ignores_g3() {
    let t = tau(0.1, 1.0);
    let p = zeta_wp(c(0.3, 0.1), &t).unwrap();
    let a = tau_system_rhs(p.x, p.sigma, p.zeta, p.wp, p.wp_prime, p.eta, p.g2);
    let d = tau_derivatives(p.x, &t).unwrap();
    assert_eq!(a, d);
    // a perturbed g3 leaves (wp, wp') and hence the system untouched; only the
    // algebraic integral notices it
    let mut q = p;
    q.g3 += c(0.5, 0.0);
    assert!(p.cubic_residual() < 1e-12);
    assert!(q.cubic_residual() > 1e-6);
    assert_eq!(tau_system_rhs(q.x, q.sigma, q.zeta, q.wp, q.wp_prime, q.eta, q.g2), a);
}

#[test]
fn omega_rows_specialise_to_tau_rows() {
    let t = tau(0.05, 1.25);
    let x = c(0.3, 0.05);
    let o = omega_derivatives(x, c(1.0, 0.0), t.tau()).unwrap();
    let d = tau_derivatives(x, &t).unwrap();
    assert!(rel(o.d_omega_prime.dsigma, d.dsigma) < 1e-12);
    assert!(rel(o.d_omega_prime.dzeta, d.dzeta) < 1e-12);
    assert!(rel(o.d_omega_prime.dwp, d.dwp) < 1e-12);
    assert!(rel(o.d_omega_prime.dwp_prime, d.dwp_prime) < 1e-12);
}

#[test]
fn omega_rows_against_finite_differences() {
    let x = c(0.3, 0.0);
    let w = c(1.0, 0.0);
    let wp0 = c(0.0, 1.4);
    let o = omega_derivatives(x, w, wp0).unwrap();
    let h = 1e-4;
    let f = |w: C64, wp: C64| weierstrass_periods(x, w, wp).unwrap();
    // central differences with one Richardson step
    let rich = |g: &dyn Fn(f64) -> C64| {
        let d = |h: f64| (g(h) - g(-h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    };
    let d_wp_dwp = rich(&|e| f(w, wp0 + e).wp);
    let d_wp_dw = rich(&|e| f(w + e, wp0).wp);
    let d_s_dw = rich(&|e| f(w + e, wp0).sigma);
    let d_z_dwp = rich(&|e| f(w, wp0 + e).zeta);
    let d_pp_dw = rich(&|e| f(w + e, wp0).wp_prime);
    assert!(rel(o.d_omega_prime.dwp, d_wp_dwp) < 1e-8);
    assert!(rel(o.d_omega.dwp, d_wp_dw) < 1e-8);
    assert!(rel(o.d_omega.dsigma, d_s_dw) < 1e-8);
    assert!(rel(o.d_omega_prime.dzeta, d_z_dwp) < 1e-8);
    assert!(rel(o.d_omega.dwp_prime, d_pp_dw) < 1e-8);
}

#[test]
fn omega_rows_with_negative_orientation() {
    // swapping the orientation flips the sign factor but not the functions
    let x = c(0.25, 0.1);
    let (w, wp0) = (c(0.9, 0.2), c(-0.3, -1.2));
    let o = omega_derivatives(x, w, wp0).unwrap();
    let h = 1e-4;
    let f = |w: C64, wp: C64| weierstrass_periods(x, w, wp).unwrap();
    let d = (f(w, wp0 + h).wp - f(w, wp0 - h).wp) / (2.0 * h);
    let d2 = (f(w + h, wp0).zeta - f(w - h, wp0).zeta) / (2.0 * h);
    assert!(rel(o.d_omega_prime.dwp, d) < 1e-8);
    assert!(rel(o.d_omega.dzeta, d2) < 1e-8);
    assert!(matches!(omega_derivatives(x, w, w * 2.0), Err(ThetaError::DegeneratePeriods)));
}

#[test]
fn sigma_depends_only_on_the_lattice() {
    let (w, wp0) = (c(1.0, 0.2), c(0.3, 1.4));
    let x = c(0.35, 0.1);
    let a = weierstrass_periods(x, w, wp0).unwrap();
    let b = weierstrass_periods(x, w, wp0 + w).unwrap();
    let s = weierstrass_periods(x, wp0, -w).unwrap();
    assert!(rel(a.sigma, b.sigma) < 1e-11 && rel(a.sigma, s.sigma) < 1e-11);
    assert!(rel(a.wp, s.wp) < 1e-11);
    // homogeneity at lambda = 2
    let d = weierstrass_periods(2.0 * x, 2.0 * w, 2.0 * wp0).unwrap();
    assert!(rel(d.sigma, 2.0 * a.sigma) < 1e-10);
    // Legendre relation
    assert!((a.eta * wp0 - a.eta_prime * w - PI * I / 2.0).norm() < 1e-12);
    assert!((s.eta * (-w) - s.eta_prime * wp0 - PI * I / 2.0).norm() < 1e-12);
}

#[test]
fn heat_residuals() {
    assert!(sigma_heat_residual(c(0.2, 0.0), &tau(0.0, 1.0)).unwrap() < 1e-10);
    assert_eq!(sigma_heat_residual(c(0.0, 0.0), &tau(0.3, 0.8)).unwrap(), 0.0);
    assert!(sigma_heat_residual(c(0.4, 0.0), &tau(0.2, 1.3)).unwrap() < 1e-9);
}

#[test]
fn z_relation_residuals() {
    let t = tau(0.0, 1.1);
    let (r1, r2) = z_relations_residual(c(0.27, 0.0), &t).unwrap();
    assert!(r1 < 1e-9, "{r1}");
    assert!(r2 < 1e-7, "{r2}");
    for x in [c(0.15, 0.05), c(0.6, -0.2), c(1.3, 0.4)] {
        let (a, b) = z_relations_residual(x, &t).unwrap();
        assert!(a < 1e-9 && b < 1e-7, "{x}: {a} {b}");
    }
}

#[test]
fn z_vanishing_is_reported() {
    // Z = zeta - x eta vanishes at the half period x = 1
    let t = tau(0.0, 1.0);
    assert!(matches!(z_relations_residual(c(1.0, 0.0), &t), Err(ThetaError::ZVanishes)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cubic_integral_holds(xr in -0.9f64..0.9, xi in -0.8f64..0.8, tr in -0.5f64..0.5, ti in 0.0f64..0.8) {
        let im = (1.0 - tr * tr).sqrt() + ti;
        let t = tau(tr, im);
        let x = c(xr, xi);
        prop_assume!(lattice_distance(x, &t) > 0.05);
        let p = zeta_wp(x, &t).unwrap();
        prop_assert!(p.cubic_residual() < 1e-10);
        // d zeta/dx = -wp by central differences
        let h = 1e-5;
        let zp = zeta_wp(x + h, &t).unwrap().zeta;
        let zm = zeta_wp(x - h, &t).unwrap().zeta;
        prop_assert!(rel((zp - zm) / (2.0 * h), -p.wp) < 1e-7);
    }

    #[test]
    fn legendre_relation_at_unit_period(tr in -0.5f64..0.5, ti in 0.9f64..2.0) {
        let t = c(tr, ti);
        let p = weierstrass_periods(c(0.2, 0.1), c(1.0, 0.0), t).unwrap();
        prop_assert!((p.eta * t - p.eta_prime - PI * I / 2.0).norm() < 1e-12);
    }
}
