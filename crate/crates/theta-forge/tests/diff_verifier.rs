use std::f64::consts::PI;

use proptest::prelude::*;

use theta_forge::constants::{eta_w, g2_g3_lambert};
use theta_forge::cx::{c, C64, I};
use theta_forge::diffsys::*;
use theta_forge::series::{theta1_truncated, Theta1Pipeline};
use theta_forge::theta::{theta, theta_deriv, varthetas, SeriesBudget, ThetaChar, UHTau, DIFF_TABLE};
use theta_forge::ThetaError;

fn tau(re: f64, im: f64) -> UHTau {
    UHTau::new(c(re, im)).unwrap()
}

fn max_of(r: &SystemResidual) -> f64 {
    r.residuals.iter().cloned().fold(0.0, f64::max)
}

#[test]
fn x_system_generic_point() {
    let r = residual_x(c(0.2, 0.05), &tau(0.0, 1.0)).unwrap();
    assert_eq!(r.system_id, SystemId::XSys);
    assert_eq!(r.residuals.len(), 5);
    assert!(max_of(&r) < 1e-10, "{:?}", r.residuals);
    assert!(r.pass());
}

#[test]
fn x_system_rejects_lattice_points() {
    let t = tau(0.1, 1.1);
    for x in [c(0.0, 0.0), c(1.0, 0.0), t.tau() + 1.0] {
        assert!(matches!(residual_x(x, &t), Err(ThetaError::PoleAtLatticePoint(_))));
        assert!(matches!(residual_tau(x, &t), Err(ThetaError::PoleAtLatticePoint(_))));
    }
}

#[test]
fn index_table_from_closed_form() {
    for (k, nu, mu) in DIFF_TABLE {
        let k = k as i64;
        assert_eq!((8 * k - 28) / (3 * k - 10), nu as i64);
        assert_eq!((10 * k - 28) / (3 * k - 8), mu as i64);
    }
}

#[test]
fn jacobi_derivative_identity_at_origin() {
    // theta_2 row at x -> 0: theta_2' / theta_2 -> 0 forces vartheta_1' = pi vartheta_2 vartheta_3 vartheta_4
    let t = tau(0.15, 0.9);
    let [v2, v3, v4] = varthetas(&t).unwrap();
    let z = C64::new(0.0, 0.0);
    let v1p = theta_deriv(1, z, &t, 1, 0).unwrap();
    assert!((v1p - PI * v2 * v3 * v4).norm() < 1e-13);
    // and the residual stays small approaching the origin
    for h in [1e-2, 1e-3, 1e-4] {
        let r = residual_x(c(h, 0.0), &t).unwrap();
        assert!(r.residuals[1] < 1e-9, "h={h}: {:?}", r.residuals);
    }
}

#[test]
fn characteristic_rows_for_integer_characteristics() {
    let t = tau(-0.2, 1.05);
    let x = c(0.17, -0.08);
    for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 1), (-1, 3), (3, -2), (2, 2)] {
        let ch = ThetaChar::new(a, b);
        let rx = residual_x_char(ch, x, &t).unwrap();
        let rt = residual_tau_char(ch, x, &t).unwrap();
        assert!(rx < 1e-10, "x row ({a},{b}): {rx}");
        assert!(rt < 1e-9, "tau row ({a},{b}): {rt}");
    }
}

#[test]
fn tau_system_point() {
    let r = residual_tau(c(0.15, 0.0), &tau(0.0, 1.3)).unwrap();
    assert_eq!(r.system_id, SystemId::TauSys);
    // five rows then four heat rows
    assert_eq!(r.residuals.len(), 9);
    assert!(max_of(&r) < 1e-9, "{:?}", r.residuals);
    assert!(r.residuals[4] < 1e-9);
}

#[test]
fn heat_equation_each_theta() {
    let t = tau(0.3, 0.85);
    let x = c(-0.21, 0.11);
    for k in 1..=4u8 {
        let lhs = 4.0 * PI * I * theta_deriv(k, x, &t, 0, 1).unwrap();
        let rhs = theta_deriv(k, x, &t, 2, 0).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm().max(1.0) < 1e-12);
    }
    let h = heat_residuals(x, &t).unwrap();
    assert!(h.iter().all(|r| *r < 1e-12));
}

#[test]
fn var_system_at_i() {
    let r = residual_var(&tau(0.0, 1.0)).unwrap();
    assert_eq!(r.residuals.len(), 4);
    assert!(max_of(&r) < 1e-11, "{:?}", r.residuals);
}

#[test]
fn characteristic_form_of_constant_system() {
    for t in [tau(0.0, 1.0), tau(0.4, 0.9), tau(-0.25, 1.6)] {
        let r = residual_last(&t).unwrap();
        assert_eq!(r.system_id, SystemId::LastSys);
        assert_eq!(r.residuals.len(), 6);
        assert!(max_of(&r) < 1e-11, "{:?}", r.residuals);
    }
}

#[test]
fn closed_derivatives_feed_theta1_series() {
    // coefficient of x^(2k+1) in theta_1 is 2 pi (4 pi i)^k (eta_D^3)^(k) / (2k+1)!
    let t = tau(0.1, 1.1);
    let d = prefactor_derivatives(theta_forge::derivation::Prefactor::EtaCubed, &t, 8).unwrap();
    let s = theta1_truncated(&t, 8, Theta1Pipeline::Eta3Deriv).unwrap();
    let mut fact = 1.0;
    for k in 0..=8usize {
        if k > 0 {
            fact *= ((2 * k) * (2 * k + 1)) as f64;
        }
        let want = 2.0 * PI * (4.0 * PI * I).powu(k as u32) * d[k] / fact;
        let got = s.coeffs[k];
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300), "k={k}");
    }
}

#[test]
fn closed_derivatives_match_termwise_series() {
    let t = tau(0.2, 0.95);
    for (slot, k) in [(0usize, 2u8), (1, 3), (2, 4)] {
        let d = prefactor_derivatives(theta_forge::derivation::Prefactor::Vartheta(k), &t, 6).unwrap();
        for (r, dr) in d.iter().enumerate() {
            let want = theta_deriv(k, C64::new(0.0, 0.0), &t, 0, r as u32).unwrap();
            assert!((dr - want).norm() <= 1e-10 * want.norm().max(1.0), "slot {slot} r={r}");
        }
    }
}

// k-th central difference in tau, extrapolated over a Richardson table of
// step halvings (the error is even in h).
fn fd_derivative(f: &dyn Fn(C64) -> C64, t0: C64, k: usize, h: f64, levels: usize) -> C64 {
    fn stencil(f: &dyn Fn(C64) -> C64, t0: C64, k: usize, h: f64) -> C64 {
        // sum (-1)^j binom(k,j) f(t0 + (k/2 - j) h) / h^k
        let mut s = C64::new(0.0, 0.0);
        let mut binom = 1.0;
        for j in 0..=k {
            let sg = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sg * binom * f(t0 + (k as f64 / 2.0 - j as f64) * h);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        s / h.powi(k as i32)
    }
    let mut row: Vec<C64> = (0..levels).map(|i| stencil(f, t0, k, h / 2f64.powi(i as i32))).collect();
    for m in 1..levels {
        let fac = 4f64.powi(m as i32);
        row = row.windows(2).map(|w| (fac * w[1] - w[0]) / (fac - 1.0)).collect();
    }
    row[0]
}

#[test]
fn closed_derivatives_match_richardson_differences() {
    let t0 = c(0.05, 1.2);
    let t = UHTau::new(t0).unwrap();
    let bud = SeriesBudget::default();
    let eta_fn = |s: C64| eta_w(&UHTau::new(s).unwrap(), &bud).unwrap().value;
    let v3_fn = |s: C64| theta(3, C64::new(0.0, 0.0), &UHTau::new(s).unwrap()).unwrap();
    let de = eta_derivatives(&t, 6).unwrap();
    let dv = prefactor_derivatives(theta_forge::derivation::Prefactor::Vartheta(3), &t, 6).unwrap();
    for k in 1..=6usize {
        // stencil span stays well inside Im tau; four levels balance truncation against h^-k roundoff
        let h = 0.12;
        let fe = fd_derivative(&eta_fn, t0, k, h, 4);
        let fv = fd_derivative(&v3_fn, t0, k, h, 4);
        assert!((fe - de[k]).norm() / de[k].norm() < 1e-6, "eta k={k}: {fe} vs {}", de[k]);
        assert!((fv - dv[k]).norm() / dv[k].norm() < 1e-6, "v3 k={k}: {fv} vs {}", dv[k]);
    }
}

#[test]
fn g2g3_system() {
    let r = residual_g2g3(&tau(0.0, 1.2)).unwrap();
    assert_eq!(r.residuals.len(), 3);
    assert!(max_of(&r) < 1e-11, "{:?}", r.residuals);
}

#[test]
fn riccati_row_equals_theta_form() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let bud = SeriesBudget::default();
    for _ in 0..10 {
        let t = tau(rng.gen_range(-0.5..0.5), rng.gen_range(0.8..2.0));
        let (g2, _) = g2_g3_lambert(&t, &bud).unwrap();
        let v = varthetas(&t).unwrap();
        let s: C64 = v.iter().map(|z| z.powi(8)).sum();
        let theta_form = PI.powi(4) / 144.0 * s;
        assert!((g2.value / 6.0 - theta_form).norm() < 1e-11 * theta_form.norm());
    }
}

#[test]
fn chazy_equation() {
    let r = residual_scalar(Scalar::Chazy, &tau(0.0, 1.1)).unwrap();
    assert_eq!(r.system_id, SystemId::Chazy);
    assert!(max_of(&r) < 1e-9, "{:?}", r.residuals);
}

#[test]
fn jacobi_c_equation() {
    let r = residual_scalar(Scalar::JacobiC(3), &tau(0.2, 1.4)).unwrap();
    assert!(max_of(&r) < 1e-8, "{:?}", r.residuals);
    for k in [2u8, 4] {
        let r = residual_scalar(Scalar::JacobiC(k), &tau(-0.1, 1.0)).unwrap();
        assert!(max_of(&r) < 1e-8, "k={k}: {:?}", r.residuals);
    }
}

#[test]
fn halphen_x_equation() {
    let t = tau(0.0, 1.0);
    let r = residual_scalar(Scalar::HalphenX { k: 2, a: 1, b: 0, c: 0 }, &t).unwrap();
    assert_eq!(r.system_id, SystemId::HalphenX);
    assert!(max_of(&r) < 1e-9, "{:?}", r.residuals);
    let r = residual_scalar(Scalar::HalphenX { k: 2, a: 1, b: 1, c: 0 }, &t).unwrap();
    assert!(max_of(&r) < 1e-9, "{:?}", r.residuals);
    for (k, a, b, cc) in [(3u8, 1, 0, 1), (4, 3, 1, 2), (2, -1, 2, -1)] {
        let r = residual_scalar(Scalar::HalphenX { k, a, b, c: cc }, &tau(0.1, 1.2)).unwrap();
        assert!(max_of(&r) < 1e-7, "({k},{a},{b},{cc}): {:?}", r.residuals);
    }
}

#[test]
fn halphen_x_requires_unimodular_twist() {
    let r = residual_scalar(Scalar::HalphenX { k: 2, a: 2, b: 0, c: 0 }, &tau(0.0, 1.0));
    assert!(matches!(r, Err(ThetaError::InvalidArgument(_))));
}

#[test]
fn psi_equation() {
    let r = residual_scalar(Scalar::Psi { a: c(1.0, 0.0), b: c(0.0, 0.0) }, &tau(0.1, 1.2)).unwrap();
    assert_eq!(r.system_id, SystemId::Psi);
    assert!(max_of(&r) < 1e-6, "{:?}", r.residuals);
    let r = residual_scalar(Scalar::Psi { a: c(0.5, -0.2), b: c(1.0, 0.3) }, &tau(-0.2, 1.0)).unwrap();
    assert!(max_of(&r) < 1e-6, "{:?}", r.residuals);
}

#[test]
fn eta_log_derivative_shift_free() {
    // vartheta_2 form of eta
    let t = tau(0.1, 1.3);
    let bud = SeriesBudget::default();
    let eta = eta_w(&t, &bud).unwrap().value;
    let v = varthetas(&t).unwrap();
    let dv2 = theta_deriv(2, C64::new(0.0, 0.0), &t, 0, 1).unwrap();
    let alt = -PI * I * dv2 / v[0] - PI * PI / 12.0 * (v[1].powi(4) + v[2].powi(4));
    assert!((alt - eta).norm() < 1e-12);
}

#[test]
fn solution_family_identity() {
    let x = c(0.22, 0.04);
    let t = tau(0.1, 1.0);
    let fam = verify_solution_family(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), x, &t).unwrap();
    let bx = residual_x(x, &t).unwrap();
    let bt = residual_tau(x, &t).unwrap();
    for i in 0..5 {
        assert!((fam.residuals[i] - bx.residuals[i]).abs() < 1e-15);
        assert!((fam.residuals[5 + i] - bt.residuals[i]).abs() < 1e-15);
    }
}

#[test]
fn solution_family_generic() {
    let fam = verify_solution_family(c(0.3, 0.0), c(0.1, -0.2), c(2.0, 0.0), c(0.1, 0.05), &tau(0.0, 1.1)).unwrap();
    assert_eq!(fam.system_id, SystemId::XSys);
    assert_eq!(fam.residuals.len(), 12);
    assert!(max_of(&fam) < 1e-8, "{:?}", fam.residuals);
}

#[test]
fn diff_relations() {
    let r = residual_diff_rel(c(0.31, -0.12), &tau(0.2, 0.9)).unwrap();
    assert_eq!(r.system_id, SystemId::DiffRel);
    assert_eq!(r.residuals.len(), 6);
    assert!(max_of(&r) < 1e-10, "{:?}", r.residuals);
}

#[test]
fn tolerance_ladder() {
    assert_eq!(SystemId::VarSys.default_tol(), 1e-11);
    assert_eq!(SystemId::G2G3Sys.default_tol(), 1e-11);
    assert_eq!(SystemId::XSys.default_tol(), 1e-9);
    assert_eq!(SystemId::Chazy.default_tol(), 1e-7);
    assert_eq!(SystemId::Psi.default_tol(), 1e-6);
    let r = SystemResidual { system_id: SystemId::XSys, point: Point::Tau(c(0.0, 1.0)), residuals: vec![1e-3], tol: 1e-2 };
    assert!(r.pass());
    let r = SystemResidual { residuals: vec![1e-3, 0.02], ..r };
    assert!(!r.pass());
}

#[test]
fn randomized_sweep() {
    let rows = sweep(&SweepConfig { seed: 7, samples: 100, tol_scale: 1.0, suites: vec![Suite::All] }).unwrap();
    assert!(rows.len() >= 100 * 5);
    for r in &rows {
        // the quadrature-based check has its own, looser budget
        let bound = if r.system_id == SystemId::Psi { 1e-6 } else { 1e-9 };
        assert!(max_of(r) < bound, "{:?} at {:?}: {:?}", r.system_id, r.point, r.residuals);
        assert!(r.pass());
    }
    let again = sweep(&SweepConfig { seed: 7, samples: 100, tol_scale: 1.0, suites: vec![Suite::All] }).unwrap();
    assert_eq!(rows.len(), again.len());
    assert!(rows.iter().zip(&again).all(|(a, b)| a.point == b.point && a.residuals == b.residuals));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_order_systems_hold(xr in -0.6f64..0.6, xi in -0.3f64..0.3, tr in -0.5f64..0.5, ti in 0.8f64..2.0) {
        let t = tau(tr, ti);
        let x = c(xr, xi);
        prop_assume!(x.norm() > 0.1 && (x - 1.0).norm() > 0.1 && (x + 1.0).norm() > 0.1);
        let rx = residual_x(x, &t).unwrap();
        let rt = residual_tau(x, &t).unwrap();
        prop_assert!(max_of(&rx) < 1e-9, "{:?}", rx.residuals);
        prop_assert!(max_of(&rt) < 1e-9, "{:?}", rt.residuals);
    }

    #[test]
    fn family_preserves_quadratic_relations(ar in -0.5f64..0.5, br in -0.5f64..0.5, bi in -0.3f64..0.3) {
        let fam = verify_solution_family(c(ar, 0.0), c(br, bi), c(1.5, 0.5), c(0.12, 0.03), &tau(0.0, 1.2));
        if let Ok(f) = fam {
            prop_assert!(f.residuals[10] < 1e-9 && f.residuals[11] < 1e-9, "{:?}", f.residuals);
        }
    }
}
