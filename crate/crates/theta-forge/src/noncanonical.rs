//! Theta functions with free constants: the general solution of the x-system
//! when `vartheta_2, vartheta_3, vartheta_4, eta` are arbitrary, the general
//! integral of the constant system, and the equations they satisfy.
//!
//! The canonical functions are the special case `A1 = A2 = 1`.

use std::f64::consts::PI;

use crate::constants::{eta_dedekind, eta_w, eta_w_dtau, tau_from_j};
use crate::cx::{C64, I, ONE, ZERO};
use crate::diffsys::{
    halphen_row, scaled, theta1_zero_distance, twisted_x_jet, tau_rows, x_rows, Consts, Jet5, Point, SystemId,
    SystemResidual, POLE_GUARD,
};
use crate::error::{Result, ThetaError};
use crate::theta::{theta_deriv, theta_dx, varthetas, SeriesBudget, UHTau};
use crate::weierstrass::weierstrass_periods;

const PI2_12: f64 = PI * PI / 12.0;

/// Free constants of the x-system together with the two first integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncanonicalParams {
    /// `[vartheta_2, vartheta_3, vartheta_4]`
    pub vartheta: [C64; 3],
    pub eta: C64,
    pub a1: C64,
    pub a2: C64,
}

impl NoncanonicalParams {
    pub fn canonical(tau: &UHTau) -> Result<Self> {
        let eta = eta_w(tau, &SeriesBudget::default())?.value;
        Ok(NoncanonicalParams { vartheta: varthetas(tau)?, eta, a1: ONE, a2: ONE })
    }

    /// Constants for the family `theta(kappa x + B | mu)`: `vartheta_3, vartheta_4`
    /// follow from `A1^2 = kappa vartheta_3(mu)^2 / vartheta_3^2` and its partner.
    pub fn from_kappa_mu(kappa: C64, mu: &UHTau, a1: C64, a2: C64, vartheta2: C64, eta: C64) -> Result<Self> {
        if a1.norm() == 0.0 || a2.norm() == 0.0 {
            return Err(ThetaError::InvalidArgument("A1 and A2 must be nonzero".into()));
        }
        let vm = varthetas(mu)?;
        let sk = kappa.sqrt();
        Ok(NoncanonicalParams { vartheta: [vartheta2, vm[1] * sk / a1, vm[2] * sk / a2], eta, a1, a2 })
    }

    /// `A3^4 = (A1^4 vartheta_3^4 - A2^4 vartheta_4^4) / vartheta_2^4`
    pub fn a3_fourth(&self) -> C64 {
        let [v2, v3, v4] = self.vartheta;
        (self.a1.powi(4) * v3.powi(4) - self.a2.powi(4) * v4.powi(4)) / v2.powi(4)
    }

    pub fn b(&self) -> C64 {
        Consts::from_parts(self.eta, self.vartheta).b
    }

    /// `Lambda = 4 (eta + (pi^2/12)(vartheta_3^4 + vartheta_4^4))`
    pub fn lambda(&self) -> C64 {
        4.0 * self.b()
    }

    pub fn is_canonical_at(&self, tau: &UHTau, tol: f64) -> Result<bool> {
        let c = NoncanonicalParams::canonical(tau)?;
        let close = |a: C64, b: C64| (a - b).norm() <= tol * b.norm().max(1.0);
        Ok(close(self.eta, c.eta)
            && (0..3).all(|i| close(self.vartheta[i], c.vartheta[i]))
            && close(self.a1.powi(4), ONE)
            && close(self.a2.powi(4), ONE))
    }

    fn consts(&self) -> Consts {
        Consts::from_parts(self.eta, self.vartheta)
    }
}

/// Values and x-derivatives of `theta_1..theta_4, theta_1'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaQuintuple {
    pub x: C64,
    /// modulus of the underlying canonical functions
    pub tau: C64,
    pub theta: [C64; 4],
    pub theta1_prime: C64,
    pub dtheta: [C64; 4],
    pub dtheta1_prime: C64,
}

impl ThetaQuintuple {
    /// Flip the signs of `theta_j` and `theta_k` (1-based); the system is invariant.
    pub fn with_pair_flipped(&self, j: usize, k: usize) -> Self {
        let mut q = *self;
        for i in [j, k] {
            q.theta[i - 1] = -q.theta[i - 1];
            q.dtheta[i - 1] = -q.dtheta[i - 1];
            if i == 1 {
                q.theta1_prime = -q.theta1_prime;
                q.dtheta1_prime = -q.dtheta1_prime;
            }
        }
        q
    }

    fn jet(&self) -> Jet5 {
        let mut th = [ZERO; 5];
        let mut dx = [ZERO; 5];
        th[1..].copy_from_slice(&self.theta);
        dx[1..].copy_from_slice(&self.dtheta);
        Jet5 { th, th1p: self.theta1_prime, dx, dx1p: self.dtheta1_prime, dt: [ZERO; 5], dt1p: ZERO }
    }
}

/// `theta_k = C_k C theta_k(kappa x + B | mu) exp(2 M (x + A)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralSolution {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub kappa: C64,
    pub mu: C64,
}

impl GeneralSolution {
    fn mu(&self) -> Result<UHTau> {
        UHTau::new(self.mu)
    }

    /// `M = kappa^2 B(mu) - B`, with `B(mu)` canonical and `B` from the free constants.
    pub fn m(&self, p: &NoncanonicalParams) -> Result<C64> {
        let bmu = NoncanonicalParams::canonical(&self.mu()?)?.b();
        Ok(self.kappa * self.kappa * bmu - p.b())
    }

    fn prefactors(&self, p: &NoncanonicalParams, mu: &UHTau) -> Result<[C64; 4]> {
        let vm = varthetas(mu)?;
        let eta3 = eta_dedekind(mu, &SeriesBudget::default())?.value.powi(3);
        let [v2, v3, v4] = p.vartheta;
        Ok([
            v2 * v3 * v4 / (2.0 * eta3),
            self.kappa * v2 / vm[0],
            self.kappa * v3 / vm[1],
            self.kappa * v4 / vm[2],
        ])
    }
}

pub fn general_solution_eval(gs: &GeneralSolution, p: &NoncanonicalParams, x: C64) -> Result<ThetaQuintuple> {
    let mu = gs.mu()?;
    let y = gs.kappa * x + gs.b;
    let d = theta1_zero_distance(y, &mu);
    if d < POLE_GUARD {
        return Err(ThetaError::PoleAtLatticePoint(d));
    }
    let m = gs.m(p)?;
    let pre = gs.prefactors(p, &mu)?;
    let s = x + gs.a;
    let e0 = gs.c * (2.0 * m * s * s).exp();
    let e1 = 4.0 * m * s * e0;
    let e2 = (4.0 * m + 16.0 * m * m * s * s) * e0;
    let k = gs.kappa;
    let mut theta = [ZERO; 4];
    let mut dtheta = [ZERO; 4];
    for j in 0..4 {
        let t0 = theta_dx(j as u8 + 1, y, &mu, 0)?;
        let t1 = theta_dx(j as u8 + 1, y, &mu, 1)?;
        theta[j] = pre[j] * e0 * t0;
        dtheta[j] = pre[j] * (e1 * t0 + k * e0 * t1);
    }
    let (t0, t1, t2) = (theta_dx(1, y, &mu, 0)?, theta_dx(1, y, &mu, 1)?, theta_dx(1, y, &mu, 2)?);
    let dtheta1_prime = pre[0] * (e2 * t0 + 2.0 * k * e1 * t1 + k * k * e0 * t2);
    Ok(ThetaQuintuple { x, tau: gs.mu, theta, theta1_prime: dtheta[0], dtheta, dtheta1_prime })
}

/// The five x-system rows with the free constants of `p`.
pub fn residual_x_free(q: &ThetaQuintuple, p: &NoncanonicalParams) -> SystemResidual {
    SystemResidual::new(SystemId::XSys, Point::XTau(q.x, q.tau), x_rows(&q.jet(), &p.consts()))
}

/// `(A1^4, A2^4)` from a solution value, via the two quadratic relations.
pub fn integrals_a4(theta: &[C64; 4], p: &NoncanonicalParams) -> Result<(C64, C64)> {
    let [t1, t2, t3, t4] = *theta;
    let scale = theta.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if t1.norm() <= 1e-14 * scale {
        return Err(ThetaError::PoleAtLatticePoint(t1.norm()));
    }
    let [v2, v3, v4] = p.vartheta.map(|v| v * v);
    let t = [t1, t2, t3, t4].map(|v| v * v);
    Ok(((v2 * t[3] - v4 * t[1]) / (v3 * t[0]), (v2 * t[2] - v3 * t[1]) / (v4 * t[0])))
}

/// Principal fourth roots of [`integrals_a4`].
pub fn integrals_a(theta: &[C64; 4], p: &NoncanonicalParams) -> Result<(C64, C64)> {
    let (a, b) = integrals_a4(theta, p)?;
    Ok((a.powf(0.25), b.powf(0.25)))
}

/// `tau -> (a tau + b)/(c tau + d)` with complex entries and `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl ComplexMobius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).norm() > 1e-12 {
            return Err(ThetaError::InvalidArgument(format!("ad - bc = {det}, expected 1")));
        }
        Ok(ComplexMobius { a, b, c, d })
    }

    pub fn identity() -> Self {
        ComplexMobius { a: ONE, b: ZERO, c: ZERO, d: ONE }
    }

    pub fn apply(&self, t: C64) -> C64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }

    fn factor(&self, t: C64) -> C64 {
        self.c * t + self.d
    }

    fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

/// The general integral of the constant system:
/// `vartheta_2 = d vartheta_2(T)/sqrt(w)`, `vartheta_3 = vartheta_3(T)/(A1 sqrt(w))`,
/// `vartheta_4 = vartheta_4(T)/(A2 sqrt(w))`, with `w = c tau + d`, `T = m(tau)`.
pub fn general_integral_t(m: &ComplexMobius, a1: C64, a2: C64, d_bold: C64, tau: &UHTau) -> Result<NoncanonicalParams> {
    Ok(general_integral_with_dtau(m, a1, a2, d_bold, tau)?.0)
}

/// The general integral and its tau-derivatives `[vartheta_2', vartheta_3', vartheta_4', eta']`,
/// composed from term-wise derivatives at `T`.
fn general_integral_with_dtau(
    m: &ComplexMobius,
    a1: C64,
    a2: C64,
    d_bold: C64,
    tau: &UHTau,
) -> Result<(NoncanonicalParams, [C64; 4])> {
    if a1.norm() == 0.0 || a2.norm() == 0.0 || d_bold.norm() == 0.0 {
        return Err(ThetaError::InvalidArgument("A1, A2 and d must be nonzero".into()));
    }
    let t = tau.tau();
    let w = m.factor(t);
    let s = w.sqrt();
    let tt = UHTau::new(m.apply(t))?;
    let budget = SeriesBudget::default();
    let vt = varthetas(&tt)?;
    let dvt = [theta_deriv(2, ZERO, &tt, 0, 1)?, theta_deriv(3, ZERO, &tt, 0, 1)?, theta_deriv(4, ZERO, &tt, 0, 1)?];
    let et = eta_w(&tt, &budget)?.value;
    let det = eta_w_dtau(&tt, &budget)?.value;
    let tp = 1.0 / (w * w);
    let c = m.c;
    let scale = [d_bold, 1.0 / a1, 1.0 / a2];
    let mut v = [ZERO; 3];
    let mut dv = [ZERO; 3];
    for k in 0..3 {
        v[k] = scale[k] * vt[k] / s;
        dv[k] = scale[k] * (dvt[k] * tp / s - c / 2.0 * vt[k] / (s * w));
    }
    let al = (a1.powi(4) - 1.0) / a1.powi(4);
    let be = (a2.powi(4) - 1.0) / a2.powi(4);
    let n = et + PI2_12 * (al * vt[1].powi(4) + be * vt[2].powi(4));
    let dn = tp * (det + PI2_12 * 4.0 * (al * vt[1].powi(3) * dvt[1] + be * vt[2].powi(3) * dvt[2]));
    let eta = n / (w * w) + PI * I * c / (2.0 * w);
    let deta = dn / (w * w) - 2.0 * c * n / (w * w * w) - PI * I * c * c / (2.0 * w * w);
    Ok((NoncanonicalParams { vartheta: v, eta, a1, a2 }, [dv[0], dv[1], dv[2], deta]))
}

/// Four rows of the constant system with integrals `A1, A2`, then the
/// conservation row `d(A3^4)/dtau = 0`.
pub fn residual_int_a(m: &ComplexMobius, a1: C64, a2: C64, d_bold: C64, tau: &UHTau) -> Result<SystemResidual> {
    let (p, d) = general_integral_with_dtau(m, a1, a2, d_bold, tau)?;
    let [v2, v3, v4] = p.vartheta;
    let eta = p.eta;
    let (a14, a24) = (a1.powi(4), a2.powi(4));
    let ip = I / PI;
    let (p3, p4) = (v3.powi(4), v4.powi(4));
    let rows = vec![
        scaled(&[d[0], -ip * eta * v2, -ip * PI2_12 * (p3 + p4) * v2]),
        scaled(&[d[1], -ip * eta * v3, -ip * PI2_12 * (p3 + p4) * v3, ip * PI2_12 * 3.0 * a24 * p4 * v3]),
        scaled(&[d[2], -ip * eta * v4, -ip * PI2_12 * (p3 + p4) * v4, ip * PI2_12 * 3.0 * a14 * p3 * v4]),
        scaled(&[
            d[3],
            -ip * 2.0 * eta * eta,
            PI.powi(3) / 72.0 * I * p3 * p3,
            PI.powi(3) / 72.0 * I * (9.0 * a14 * a24 - 6.0 * a14 - 6.0 * a24 + 2.0) * p3 * p4,
            PI.powi(3) / 72.0 * I * p4 * p4,
        ]),
        scaled(&[
            4.0 * a14 * v3.powi(3) * d[1] / v2.powi(4),
            -4.0 * a24 * v4.powi(3) * d[2] / v2.powi(4),
            -4.0 * a14 * p3 * d[0] / v2.powi(5),
            4.0 * a24 * p4 * d[0] / v2.powi(5),
        ]),
    ];
    let mut r = SystemResidual::new(SystemId::VarSys, Point::Tau(tau.tau()), rows);
    r.tol = 1e-8;
    Ok(r)
}

/// Largest relative change of `A3^4` along `n` equal steps from `tau0` to `tau1`.
pub fn a3_drift(m: &ComplexMobius, a1: C64, a2: C64, d_bold: C64, tau0: C64, tau1: C64, n: usize) -> Result<f64> {
    let start = general_integral_t(m, a1, a2, d_bold, &UHTau::new(tau0)?)?.a3_fourth();
    let mut worst = 0.0f64;
    for i in 1..=n.max(1) {
        let t = tau0 + (tau1 - tau0) * (i as f64 / n.max(1) as f64);
        let v = general_integral_t(m, a1, a2, d_bold, &UHTau::new(t)?)?.a3_fourth();
        worst = worst.max((v - start).norm() / start.norm());
    }
    Ok(worst)
}

/// Integration constants `A, B, C` of the joint solution in `x` and `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConstants {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

fn joint_family(m: &ComplexMobius, k: &JointConstants, tau: &UHTau) -> GeneralSolution {
    let w = m.factor(tau.tau());
    let kappa = 1.0 / w;
    GeneralSolution { a: k.a, b: kappa * k.a + k.b, c: k.c * w, kappa, mu: m.apply(tau.tau()) }
}

/// `theta_k = C_k theta_k((x + A)/w + B | T) exp(-pi i c (x + A)^2 / w)` with the
/// constants from [`general_integral_t`].
pub fn joint_solution(
    m: &ComplexMobius,
    a1: C64,
    a2: C64,
    d_bold: C64,
    k: &JointConstants,
    x: C64,
    tau: &UHTau,
) -> Result<ThetaQuintuple> {
    let p = general_integral_t(m, a1, a2, d_bold, tau)?;
    general_solution_eval(&joint_family(m, k, tau), &p, x)
}

pub fn joint_x_residual(
    m: &ComplexMobius,
    a1: C64,
    a2: C64,
    d_bold: C64,
    k: &JointConstants,
    x: C64,
    tau: &UHTau,
) -> Result<SystemResidual> {
    let p = general_integral_t(m, a1, a2, d_bold, tau)?;
    let q = general_solution_eval(&joint_family(m, k, tau), &p, x)?;
    let mut r = residual_x_free(&q, &p);
    r.point = Point::XTau(x, tau.tau());
    Ok(r)
}

// Central difference with one Richardson step.
fn richardson<F: Fn(C64) -> Result<Vec<C64>>>(f: F, t: C64, h: f64) -> Result<Vec<C64>> {
    let d = |h: f64| -> Result<Vec<C64>> {
        let (a, b) = (f(t + h)?, f(t - h)?);
        Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (d1, d2) = (d(h)?, d(h / 2.0)?);
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

const TAU_STEP: f64 = 2e-3;

/// The tau-system rows for the joint solution. Its tau-derivatives come from a
/// Richardson central difference at fixed `x`.
pub fn joint_tau_residual(
    m: &ComplexMobius,
    a1: C64,
    a2: C64,
    d_bold: C64,
    k: &JointConstants,
    x: C64,
    tau: &UHTau,
) -> Result<SystemResidual> {
    let p = general_integral_t(m, a1, a2, d_bold, tau)?;
    let q = general_solution_eval(&joint_family(m, k, tau), &p, x)?;
    let dt = richardson(
        |t| {
            let q = joint_solution(m, a1, a2, d_bold, k, x, &UHTau::new(t)?)?;
            Ok(vec![q.theta[0], q.theta[1], q.theta[2], q.theta[3], q.theta1_prime])
        },
        tau.tau(),
        TAU_STEP,
    )?;
    let mut j = q.jet();
    j.dt[1..].copy_from_slice(&dt[..4]);
    j.dt1p = dt[4];
    let mut r = SystemResidual::new(SystemId::TauSys, Point::XTau(x, tau.tau()), tau_rows(&j, &p.consts()));
    r.tol = 1e-7;
    Ok(r)
}

/// Residuals of the parameter flow along the closed solution
/// `kappa = 1/w, mu = T, B = A kappa + B0, C = C0 w`:
/// `mu' = kappa^2`, `pi i kappa'/kappa = 2M`, `A' = 0`, `B' = A kappa'`, `C'/C = -kappa'/kappa`.
pub fn flow_residuals(
    m: &ComplexMobius,
    a1: C64,
    a2: C64,
    d_bold: C64,
    k: &JointConstants,
    tau: &UHTau,
) -> Result<[f64; 5]> {
    let params = |t: C64| -> Result<Vec<C64>> {
        let g = joint_family(m, k, &UHTau::new(t)?);
        Ok(vec![g.mu, g.kappa, g.a, g.b, g.c])
    };
    let v = params(tau.tau())?;
    let d = richardson(params, tau.tau(), TAU_STEP)?;
    let p = general_integral_t(m, a1, a2, d_bold, tau)?;
    let mm = joint_family(m, k, tau).m(&p)?;
    let kappa = v[1];
    Ok([
        scaled(&[d[0], -kappa * kappa]),
        scaled(&[PI * I * d[1] / kappa, -2.0 * mm]),
        d[2].norm(),
        scaled(&[d[3], -v[2] * d[1]]),
        scaled(&[d[4] / v[4], d[1] / kappa]),
    ])
}

// ---- the F and w equations ----

fn log_jet_from(t: &[C64; 6]) -> [C64; 4] {
    let a: Vec<C64> = t.iter().map(|v| v / t[0]).collect();
    let (a1, a2, a3, a4, a5) = (a[1], a[2], a[3], a[4], a[5]);
    [
        a2 - a1 * a1,
        a3 - 3.0 * a1 * a2 + 2.0 * a1.powi(3),
        a4 - 4.0 * a1 * a3 - 3.0 * a2 * a2 + 12.0 * a1 * a1 * a2 - 6.0 * a1.powi(4),
        a5 - 5.0 * a1 * a4 - 10.0 * a2 * a3 + 20.0 * a1 * a1 * a3 + 30.0 * a1 * a2 * a2 - 60.0 * a1.powi(3) * a2
            + 24.0 * a1.powi(5),
    ]
}

fn theta_jet6(k: u8, y: C64, tau: &UHTau) -> Result<[C64; 6]> {
    let mut t = [ZERO; 6];
    for (o, v) in t.iter_mut().enumerate() {
        *v = theta_dx(k, y, tau, o as u32)?;
    }
    Ok(t)
}

/// Derivatives 2 through 5 of `ln theta_k` in `x`, from the term-wise series.
pub fn log_theta_jet(k: u8, x: C64, tau: &UHTau) -> Result<[C64; 4]> {
    if k == 1 {
        let d = theta1_zero_distance(x, tau);
        if d < POLE_GUARD {
            return Err(ThetaError::PoleAtLatticePoint(d));
        }
    }
    Ok(log_jet_from(&theta_jet6(k, x, tau)?))
}

/// `F = (ln theta)'' + Lambda` and its first three derivatives.
pub fn f_jet(log_jet: &[C64; 4], p: &NoncanonicalParams) -> [C64; 4] {
    [log_jet[0] + p.lambda(), log_jet[1], log_jet[2], log_jet[3]]
}

/// `F^2 F''' - 2 F F' F'' + F'^3 + 4 F^3 F' = 0`
pub fn residual_f(f: &[C64; 4]) -> f64 {
    let [f0, f1, f2, f3] = *f;
    scaled(&[f0 * f0 * f3, -2.0 * f0 * f1 * f2, f1.powi(3), 4.0 * f0.powi(3) * f1])
}

fn w_terms(log_jet: &[C64; 4], p: &NoncanonicalParams) -> (C64, C64) {
    let (f, fp) = (log_jet[0], log_jet[1]);
    let [v2, v3, v4] = p.vartheta.map(|v| v.powi(4));
    let g = f + 4.0 * p.eta;
    let c = PI * PI / 3.0;
    (fp * fp, 4.0 * (g + c * (v3 + v4)) * (g + c * (v2 - v4)) * (g - c * (v2 + v3)))
}

/// `F'^2 = -4 (F + 4 eta + (pi^2/3)(v3^4 + v4^4)) (F + 4 eta + (pi^2/3)(v2^4 - v4^4))
/// (F + 4 eta - (pi^2/3)(v2^4 + v3^4))` for `F = (ln theta_k)''`.
pub fn residual_w(log_jet: &[C64; 4], p: &NoncanonicalParams) -> f64 {
    let (l, r) = w_terms(log_jet, p);
    scaled(&[l, r])
}

/// The same cubic with a `+4` on the right, as it is sometimes quoted. It does not hold.
pub fn residual_w_as_printed(log_jet: &[C64; 4], p: &NoncanonicalParams) -> f64 {
    let (l, r) = w_terms(log_jet, p);
    scaled(&[l, -r])
}

/// The F-jet of `theta_k` from the family `gs`.
pub fn f_jet_family(gs: &GeneralSolution, p: &NoncanonicalParams, k: u8, x: C64) -> Result<[C64; 4]> {
    let mu = gs.mu()?;
    let y = gs.kappa * x + gs.b;
    let l = log_theta_jet(k, y, &mu)?;
    let kp = gs.kappa;
    let m = gs.m(p)?;
    Ok([kp * kp * l[0] + 4.0 * m + p.lambda(), kp.powi(3) * l[1], kp.powi(4) * l[2], kp.powi(5) * l[3]])
}

/// `F = wp(omega) - wp(x + c)` on the lattice `2 omega Z + 2 omega' Z`.
pub fn f_jet_wp(x: C64, c: C64, omega: C64, omega_prime: C64) -> Result<[C64; 4]> {
    let e1 = weierstrass_periods(omega, omega, omega_prime)?.wp;
    let p = weierstrass_periods(x + c, omega, omega_prime)?;
    let (w, wp) = (p.wp, p.wp_prime);
    Ok([e1 - w, -wp, -(6.0 * w * w - p.g2 / 2.0), -12.0 * w * wp])
}

// ---- renormalised functions ----

/// Rows for `th1 = theta_1`, `th2 = pi v3 v4 theta_2`, `th3 = pi v2 v4 theta_3`,
/// `th4 = pi v2 v3 theta_4` with `d/dT = 4 pi i d/dtau`: five x-rows, five T-rows,
/// four Lambda rows, three Darboux-Halphen rows and Halphen's equation for `(i/4pi) Lambda`.
pub fn renormalized_systems_residual(x: C64, tau: &UHTau) -> Result<SystemResidual> {
    let d = theta1_zero_distance(x, tau);
    if d < POLE_GUARD {
        return Err(ThetaError::PoleAtLatticePoint(d));
    }
    let p = NoncanonicalParams::canonical(tau)?;
    let s = 4.0 * PI * I;
    let mut v = [ZERO; 3];
    let mut dv = [ZERO; 3];
    let mut ddv = [ZERO; 3];
    for k in 0..3 {
        v[k] = theta_deriv(k as u8 + 2, ZERO, tau, 0, 0)?;
        dv[k] = theta_deriv(k as u8 + 2, ZERO, tau, 0, 1)?;
        ddv[k] = theta_deriv(k as u8 + 2, ZERO, tau, 0, 2)?;
    }
    // bold prefactors and their T-log-derivatives; index 0 is theta_1
    let pair = [(0usize, 0usize), (1, 2), (0, 2), (0, 1)];
    let mut cf = [ONE; 4];
    let mut lc = [ZERO; 4];
    for k in 1..4 {
        let (i, j) = pair[k];
        cf[k] = PI * v[i] * v[j];
        lc[k] = s * (dv[i] / v[i] + dv[j] / v[j]);
    }
    let mut b = [ZERO; 4];
    let mut bx = [ZERO; 4];
    let mut bt = [ZERO; 4];
    for k in 0..4 {
        let kk = k as u8 + 1;
        let th = theta_deriv(kk, x, tau, 0, 0)?;
        b[k] = cf[k] * th;
        bx[k] = cf[k] * theta_deriv(kk, x, tau, 1, 0)?;
        bt[k] = lc[k] * b[k] + s * cf[k] * theta_deriv(kk, x, tau, 0, 1)?;
    }
    let b1p = bx[0];
    let b1pp = theta_deriv(1, x, tau, 2, 0)?;
    let b1pt = s * theta_deriv(1, x, tau, 1, 1)?;
    let lam = p.lambda();
    let l = b1p / b[0];
    let b1sq = b[0] * b[0];
    let mut rows = Vec::with_capacity(18);
    // x-system
    rows.push(scaled(&[bx[0], -b1p]));
    for k in 1..4 {
        let others: Vec<usize> = (1..4).filter(|&i| i != k).collect();
        let prod = b[others[0]] * b[others[1]];
        rows.push(scaled(&[bx[k], -l * b[k], prod / b[0]]));
    }
    rows.push(scaled(&[b1pp, -b1p * b1p / b[0], b[1] * b[1] / b[0], lam * b[0]]));
    // T-system
    rows.push(scaled(&[bt[0], -b1p * b1p / b[0], b[1] * b[1] / b[0], lam * b[0]]));
    rows.push(scaled(&[
        b1pt,
        -b1p.powi(3) / b1sq,
        3.0 * b[1] * b[1] * b1p / b1sq,
        3.0 * lam * b1p,
        -2.0 * b[1] * b[2] * b[3] / b1sq,
    ]));
    for k in 1..4 {
        let others: Vec<usize> = (1..4).filter(|&i| i != k).collect();
        let (o1, o2) = (others[0], others[1]);
        // right-hand side carries -(th2^2 - o1^2 - o2^2) th_k / th1^2
        let mut t = vec![
            bt[k],
            -l * l * b[k],
            2.0 * l * b[o1] * b[o2] / b[0],
            b[1] * b[1] * b[k] / b1sq,
            lam * b[k],
            -lc[k] * b[k],
        ];
        for o in [o1, o2] {
            t.push(-b[o] * b[o] * b[k] / b1sq);
        }
        rows.push(scaled(&t));
    }
    // Lambda rows with (X, Y, Z) the T-log-derivatives of vartheta_2, vartheta_3, vartheta_4
    let lg = [0, 1, 2].map(|k| s * dv[k] / v[k]);
    let (xx, yy, zz) = (lg[0], lg[1], lg[2]);
    rows.push(scaled(&[xx, lam]));
    rows.push(scaled(&[yy, lam, -b[2] * b[2] / b1sq, b[1] * b[1] / b1sq]));
    rows.push(scaled(&[zz, lam, -b[3] * b[3] / b1sq, b[1] * b[1] / b1sq]));
    let budget = SeriesBudget::default();
    let deta = eta_w_dtau(tau, &budget)?.value;
    let dlam = s * 4.0 * (deta + PI2_12 * 4.0 * (v[1].powi(3) * dv[1] + v[2].powi(3) * dv[2]));
    rows.push(scaled(&[dlam, -2.0 * yy * lam, -2.0 * zz * lam, -2.0 * yy * zz]));
    // Darboux-Halphen
    let dl = [0, 1, 2].map(|k| s * s * (ddv[k] / v[k] - (dv[k] / v[k]).powi(2)));
    let g = [xx, yy, zz];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        rows.push(scaled(&[dl[k] / 2.0, -g[i] * g[k], -g[j] * g[k], g[i] * g[j]]));
    }
    rows.push(halphen_row(&twisted_x_jet(2, [ONE, ZERO, ZERO, ONE], tau)?));
    let mut r = SystemResidual::new(SystemId::TauSys, Point::XTau(x, tau.tau()), rows);
    r.tol = 1e-8;
    Ok(r)
}

/// Halphen's equation for `X = (i/4 pi) Lambda` along the general integral of
/// the constant system with matrix `m`, together with the match between that
/// `X` and the closed twisted log-derivative.
pub fn lambda_halphen_residual(m: &ComplexMobius, tau: &UHTau) -> Result<f64> {
    let jet = twisted_x_jet(2, m.entries(), tau)?;
    let p = general_integral_t(m, C64::new(1.3, 0.0), C64::new(0.8, 0.0), ONE, tau)?;
    let x0 = I / (4.0 * PI) * p.lambda();
    Ok(halphen_row(&jet).max(scaled(&[x0, -jet[0]])))
}

// ---- J, P, sn ----

/// `J = (1/54) (u2^2 + u3^2 + u4^2)^3 / (u2 u3 u4)^2` with
/// `u2 = A3^4 v2^4, u3 = A1^4 v3^4, u4 = A2^4 v4^4`.
pub fn j_of_params(p: &NoncanonicalParams) -> C64 {
    let [v2, v3, v4] = p.vartheta.map(|v| v.powi(4));
    let u = [p.a3_fourth() * v2, p.a1.powi(4) * v3, p.a2.powi(4) * v4];
    let s: C64 = u.iter().map(|x| x * x).sum();
    s.powi(3) / (54.0 * (u[0] * u[1] * u[2]).powi(2))
}

/// A modulus `mu` (fundamental domain) of the canonical functions behind `p`.
pub fn mu_from_j(p: &NoncanonicalParams) -> Result<UHTau> {
    tau_from_j(j_of_params(p))
}

/// `P'^2 = 4 pi^2 (v4^2 P + A1^4 v3^2)(v3^2 P + A2^4 v4^2) P` with `P = theta_2^2/theta_1^2`.
pub fn p_equation_residual(q: &ThetaQuintuple, p: &NoncanonicalParams) -> f64 {
    let [t1, t2, _, _] = q.theta;
    let pp = t2 * t2 / (t1 * t1);
    let px = 2.0 * t2 * q.dtheta[1] / (t1 * t1) - 2.0 * t2 * t2 * q.theta1_prime / t1.powi(3);
    let [_, v3, v4] = p.vartheta.map(|v| v * v);
    scaled(&[px * px, -4.0 * PI * PI * (v4 * pp + p.a1.powi(4) * v3) * (v3 * pp + p.a2.powi(4) * v4) * pp])
}

/// `R'^2 = pi^2 (A1^4 v3^2 R^2 - v2^2)(A3^4 v2^2 R^2 - v3^2)` with `R = theta_1/theta_4`.
pub fn sn_ratio_residual(q: &ThetaQuintuple, p: &NoncanonicalParams) -> f64 {
    let (t1, t4) = (q.theta[0], q.theta[3]);
    let r = t1 / t4;
    let rx = (q.theta1_prime * t4 - t1 * q.dtheta[3]) / (t4 * t4);
    let [v2, v3, _] = p.vartheta.map(|v| v * v);
    let r2 = r * r;
    scaled(&[rx * rx, -PI * PI * (p.a1.powi(4) * v3 * r2 - v2) * (p.a3_fourth() * v2 * r2 - v3)])
}

// ---- the symmetric constant system ----

fn var_rhs(y: &[C64; 4]) -> [C64; 4] {
    let [v2, v3, v4, e] = *y;
    let (p2, p3, p4) = (v2.powi(4), v3.powi(4), v4.powi(4));
    let ip = I / PI;
    [
        ip * (e + PI2_12 * (p3 + p4)) * v2,
        ip * (e + PI2_12 * (p2 - p4)) * v3,
        ip * (e - PI2_12 * (p2 + p3)) * v4,
        ip * (2.0 * e * e - PI.powi(4) / 144.0 * (p2 * p2 + p3 * p3 + p4 * p4)),
    ]
}

/// `(v3^4 - v2^4 - v4^4)^3 / (v2^4 v3^4 v4^4)` for `[v2, v3, v4, eta]`; it equals `A3^4 - 1`.
pub fn symmetric_a3_invariant(y: &[C64; 4]) -> C64 {
    let [v2, v3, v4, _] = *y;
    let (p2, p3, p4) = (v2.powi(4), v3.powi(4), v4.powi(4));
    (p3 - p2 - p4).powi(3) / (p2 * p3 * p4)
}

fn rk4_step(y: &[C64; 4], h: C64) -> [C64; 4] {
    let add = |a: &[C64; 4], b: &[C64; 4], s: C64| -> [C64; 4] { [0, 1, 2, 3].map(|i| a[i] + s * b[i]) };
    let k1 = var_rhs(y);
    let k2 = var_rhs(&add(y, &k1, h / 2.0));
    let k3 = var_rhs(&add(y, &k2, h / 2.0));
    let k4 = var_rhs(&add(y, &k3, h));
    [0, 1, 2, 3].map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates the symmetric constant system by RK4 (`substeps` per step of
/// size `step`) and returns the largest relative change of the invariant.
pub fn symmetric_a3_drift(init: [C64; 4], step: C64, steps: usize, substeps: usize) -> Result<f64> {
    let i0 = symmetric_a3_invariant(&init);
    if !i0.is_finite() || i0.norm() == 0.0 {
        return Err(ThetaError::InvalidArgument("initial data has a vanishing or singular invariant".into()));
    }
    let sub = substeps.max(1);
    let h = step / sub as f64;
    let mut y = init;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        for _ in 0..sub {
            y = rk4_step(&y, h);
        }
        let v = symmetric_a3_invariant(&y);
        if !v.is_finite() {
            return Err(ThetaError::NoConvergence("symmetric system blew up".into()));
        }
        worst = worst.max((v - i0).norm() / i0.norm());
    }
    Ok(worst)
}

/// Relative mismatch in `theta_k(x + 1/kappa) = s_k exp(2M(2(x+A)/kappa + 1/kappa^2)) theta_k(x)`,
/// `s_k = -1` for `k = 1, 2` and `+1` otherwise, maximised over `k`.
pub fn quasi_periodicity_residual(gs: &GeneralSolution, p: &NoncanonicalParams, x: C64) -> Result<f64> {
    let shift = 1.0 / gs.kappa;
    let q0 = general_solution_eval(gs, p, x)?;
    let q1 = general_solution_eval(gs, p, x + shift)?;
    let m = gs.m(p)?;
    let f = (2.0 * m * (2.0 * (x + gs.a) * shift + shift * shift)).exp();
    let sign = [-1.0, -1.0, 1.0, 1.0];
    Ok((0..4).map(|k| scaled(&[q1.theta[k], -sign[k] * f * q0.theta[k]])).fold(0.0, f64::max))
}
