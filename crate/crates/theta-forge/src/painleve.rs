//! Painleve VI at the Picard `(0,0,0,0)` and Hitchin `(1/8,1/8,1/8,1/8)`
//! parameter points: complete elliptic integrals in the variable `x`, the
//! closed-form solutions, their pole lattice, tau-functions and the Okamoto map.
//!
//! Convention: the solutions are parametrised by `(A, B)` with theta argument
//! `A tau + B` at `tau = i K(sqrt x)/K'(sqrt x)`. In terms of `K/K'` the argument
//! reads `(iA) K/K' + B`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::cx::{C64, I, ONE, ZERO};
use crate::diffsys::theta1_zero_distance;
use crate::elliptic::ellip_ke;
use crate::error::{Result, ThetaError};
use crate::theta::{theta, theta_deriv, theta_dx, varthetas, UHTau};
use crate::weierstrass::zeta_wp;

const BRANCH_GUARD: f64 = 1e-10;
const ZERO_GUARD: f64 = 1e-8;

/// `K, K', E, E'` at modulus `sqrt(x)`: `K = K(sqrt x)`, `K' = K(sqrt(1 - x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticK {
    pub x: C64,
    pub k: C64,
    pub kp: C64,
    pub e: C64,
    pub ep: C64,
}

impl EllipticK {
    /// `tau = i K / K'`
    pub fn tau(&self) -> C64 {
        I * self.k / self.kp
    }

    /// `|E K' + E' K - K K' - pi/2|`
    pub fn legendre_residual(&self) -> f64 {
        (self.e * self.kp + self.ep * self.k - self.k * self.kp - PI / 2.0).norm()
    }

    /// `d/dx` of `[K, K', E, E']`.
    pub fn derivatives(&self) -> [C64; 4] {
        let (x, k, kp, e, ep) = (self.x, self.k, self.kp, self.e, self.ep);
        [
            (e / (x * (1.0 - x)) - k / x) / 2.0,
            (ep / (x * (x - 1.0)) - kp / (x - 1.0)) / 2.0,
            (e - k) / (2.0 * x),
            (ep - kp) / (2.0 * (x - 1.0)),
        ]
    }

    /// `d tau / dx`
    pub fn tau_dx(&self) -> C64 {
        let [dk, dkp, _, _] = self.derivatives();
        I * (dk * self.kp - self.k * dkp) / (self.kp * self.kp)
    }
}

fn check_branch(x: C64) -> Result<()> {
    if x.norm() < BRANCH_GUARD || (x - 1.0).norm() < BRANCH_GUARD || !x.is_finite() {
        Err(ThetaError::BranchPointProximity(crate::cx::format_complex(x)))
    } else {
        Ok(())
    }
}

pub fn complete_elliptic(x: C64) -> Result<EllipticK> {
    check_branch(x)?;
    let (k, e) = ellip_ke(x)?;
    let (kp, ep) = ellip_ke(ONE - x)?;
    Ok(EllipticK { x, k, kp, e, ep })
}

/// `tau(x) = i K/K'`; it lands in the upper half-plane for every x off the branch points.
pub fn tau_of_x(x: C64) -> Result<UHTau> {
    let t = complete_elliptic(x)?.tau();
    if t.im <= 0.0 {
        return Err(ThetaError::NoConvergence(format!("tau(x) = {t} left the upper half-plane")));
    }
    UHTau::new(t)
}

pub fn tau_dx(x: C64) -> Result<C64> {
    Ok(complete_elliptic(x)?.tau_dx())
}

// ---- x = vartheta4^4 / vartheta3^4 away from the fundamental domain ----

#[derive(Clone, Copy)]
enum Step {
    /// `t -> t - n`
    Shift(i64),
    /// `t -> -1/t`
    Invert,
}

fn reduce_steps(t0: C64) -> (C64, Vec<Step>) {
    let mut t = t0;
    let mut steps = Vec::new();
    for _ in 0..10_000 {
        let n = t.re.round();
        if n != 0.0 {
            t -= n;
            steps.push(Step::Shift(n as i64));
        }
        if t.norm_sqr() < 1.0 - 1e-15 {
            t = -1.0 / t;
            steps.push(Step::Invert);
        } else {
            break;
        }
    }
    (t, steps)
}

/// `vartheta4^4(tau) / vartheta3^4(tau)` for any `tau` in the upper half-plane.
pub fn lambda_prime(tau: C64) -> Result<C64> {
    UHTau::new(tau)?;
    let (t, steps) = reduce_steps(tau);
    let v = varthetas(&UHTau::new(t)?)?;
    // projective triple (vartheta2^4, vartheta3^4, vartheta4^4)
    let mut u = v.map(|z| z.powi(4));
    for s in steps.iter().rev() {
        u = match *s {
            Step::Shift(n) if n.rem_euclid(2) == 1 => [-u[0], u[2], u[1]],
            Step::Shift(_) => u,
            Step::Invert => [u[2], u[1], u[0]],
        };
    }
    Ok(u[2] / u[1])
}

/// `|theta_1(u | tau)|` after moving `(u, tau)` to the fundamental domain and
/// reducing `u` by whole periods. Zero exactly when `u` lies on `Z + tau Z`.
fn theta1_reduced_abs(u: C64, tau: C64) -> Result<f64> {
    let (_, steps) = reduce_steps(tau);
    let (mut t, mut w) = (tau, u);
    for s in &steps {
        match *s {
            Step::Shift(n) => t -= n as f64,
            Step::Invert => {
                w /= t;
                t = -1.0 / t;
            }
        }
    }
    let tt = UHTau::new(t)?;
    let q = (w.im / t.im).round();
    let w1 = w - q * t;
    let xr = w1 - w1.re.round();
    Ok(theta(1, xr, &tt)?.norm())
}

// ---- nome series ----

fn series_mul(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n + 1];
    for (i, ai) in a.iter().enumerate().take(n + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

// inverse of a series with constant term 1
fn series_inv(a: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n + 1];
    out[0] = BigInt::one();
    for k in 1..=n {
        let mut s = BigInt::zero();
        for j in 1..=k.min(a.len() - 1) {
            s += &a[j] * &out[k - j];
        }
        out[k] = -s;
    }
    out
}

/// Integer coefficients `c_1..c_n` of `exp(pi i tau(x)) = sum c_j ((1 - x)/16)^j`,
/// found by reversing `(1 - x)/16 = vartheta2^4 / (16 vartheta3^4)` as a series in q.
pub fn nome_series_coefficients(n: usize) -> Vec<BigInt> {
    if n == 0 {
        return Vec::new();
    }
    // sum_{k>=0} q^{k(k+1)} and sum_{k in Z} q^{k^2}
    let mut t2 = vec![BigInt::zero(); n + 1];
    let mut t3 = vec![BigInt::zero(); n + 1];
    for k in 0..=n {
        if k * (k + 1) <= n {
            t2[k * (k + 1)] += 1;
        }
        if k * k <= n {
            t3[k * k] += if k == 0 { 1 } else { 2 };
        }
    }
    let sq = |a: &[BigInt]| series_mul(a, a, n);
    let s = series_mul(&sq(&sq(&t2)), &series_inv(&sq(&sq(&t3)), n), n);
    // m = q S(q)  =>  q = m U(q), U = 1/S; fixed-point iteration gains one order per pass
    let u = series_inv(&s, n);
    let mut q = vec![BigInt::zero(); n + 1];
    q[1] = BigInt::one();
    for _ in 0..n {
        // U(q) by Horner in the truncated ring
        let mut acc = vec![BigInt::zero(); n + 1];
        for coef in u.iter().rev() {
            acc = series_mul(&acc, &q, n);
            acc[0] += coef;
        }
        let mut next = vec![BigInt::zero(); n + 1];
        for j in 0..n {
            next[j + 1] = acc[j].clone();
        }
        q = next;
    }
    q[1..].to_vec()
}

// ---- the equation ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P6Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub const HITCHIN_PARAMS: P6Params = P6Params { alpha: 0.125, beta: 0.125, gamma: 0.125, delta: 0.125 };
pub const PICARD_PARAMS: P6Params = P6Params { alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0 };

const Y_GUARD: f64 = 1e-6;
const Y_MAX: f64 = 1e8;

fn check_y(y: C64, x: C64) -> Result<()> {
    if !y.is_finite() || y.norm() > Y_MAX || y.norm() < Y_GUARD || (y - 1.0).norm() < Y_GUARD || (y - x).norm() < Y_GUARD {
        Err(ThetaError::PoleTooClose)
    } else {
        Ok(())
    }
}

/// P6 residual of `y` at `x`. `y_x, y_xx` come from central differences with
/// steps `h, h/2` and one Richardson step. The result is `|LHS - RHS|` divided by
/// `max(1, largest term)`.
pub fn p6_residual(y: &dyn Fn(C64) -> Result<C64>, x: C64, p: &P6Params) -> Result<f64> {
    check_branch(x)?;
    let y0 = y(x)?;
    check_y(y0, x)?;
    let h = 1e-3 * x.norm().min((x - 1.0).norm()).min(1.0);
    let (yp1, ym1, yp2, ym2) = (y(x + h)?, y(x - h)?, y(x + h / 2.0)?, y(x - h / 2.0)?);
    let d1 = |a: C64, b: C64, s: f64| (a - b) / (2.0 * s);
    let d2 = |a: C64, b: C64, s: f64| (a - 2.0 * y0 + b) / (s * s);
    let yx = (4.0 * d1(yp2, ym2, h / 2.0) - d1(yp1, ym1, h)) / 3.0;
    let yxx = (4.0 * d2(yp2, ym2, h / 2.0) - d2(yp1, ym1, h)) / 3.0;
    let pre = y0 * (y0 - 1.0) * (y0 - x) / (x * x * (x - 1.0) * (x - 1.0));
    let terms = [
        yxx,
        -0.5 * (1.0 / y0 + 1.0 / (y0 - 1.0) + 1.0 / (y0 - x)) * yx * yx,
        (1.0 / x + 1.0 / (x - 1.0) + 1.0 / (y0 - x)) * yx,
        -pre * p.alpha,
        pre * p.beta * x / (y0 * y0),
        -pre * p.gamma * (x - 1.0) / ((y0 - 1.0) * (y0 - 1.0)),
        pre * (p.delta - 0.5) * x * (x - 1.0) / ((y0 - x) * (y0 - x)),
    ];
    let s: C64 = terms.iter().sum();
    let m = terms.iter().map(|t| t.norm()).fold(1.0, f64::max);
    Ok(s.norm() / m)
}

// ---- closed-form solutions ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hitchin,
    Picard,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "hitchin" => Some(Variant::Hitchin),
            "picard" => Some(Variant::Picard),
            _ => None,
        }
    }

    pub fn p6_params(self) -> P6Params {
        match self {
            Variant::Hitchin => HITCHIN_PARAMS,
            Variant::Picard => PICARD_PARAMS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardHitchinParams {
    pub a: C64,
    pub b: C64,
    pub variant: Variant,
}

impl PicardHitchinParams {
    /// `Im((m - B)/(n + A)) > 0`
    pub fn admissible(&self, n: i64, m: i64) -> bool {
        let den = n as f64 + self.a;
        den.norm() > 0.0 && ((m as f64 - self.b) / den).im > 0.0
    }
}

// heat equation: d/dtau theta = theta'' / (4 pi i)
const HEAT: C64 = C64::new(0.0, -1.0 / (4.0 * PI));

/// Everything the x-derivatives need at one point.
struct Frame {
    x: C64,
    ek: EllipticK,
    tau: UHTau,
    tau_x: C64,
    z: C64,
    z_x: C64,
}

impl Frame {
    fn new(p: &PicardHitchinParams, x: C64) -> Result<Frame> {
        let ek = complete_elliptic(x)?;
        let t = ek.tau();
        if t.im <= 0.0 {
            return Err(ThetaError::NoConvergence(format!("tau(x) = {t} left the upper half-plane")));
        }
        let tau = UHTau::new(t)?;
        let tau_x = ek.tau_dx();
        let z = p.a * t + p.b;
        if theta1_zero_distance(z, &tau) < ZERO_GUARD {
            return Err(ThetaError::PoleHit);
        }
        Ok(Frame { x, ek, tau, tau_x, z, z_x: p.a * tau_x })
    }

    /// `theta_k^(j)(z | tau)` for j = 0..=order
    fn jet(&self, k: u8, order: u32) -> Result<Vec<C64>> {
        (0..=order).map(|o| theta_dx(k, self.z, &self.tau, o)).collect()
    }

    /// total x-derivative of `f(z|tau)` from `f'` and `f''`
    fn total(&self, fz: C64, fzz: C64) -> C64 {
        fz * self.z_x + HEAT * fzz * self.tau_x
    }
}

fn nonzero(v: C64, scale: f64) -> Result<C64> {
    if v.norm() <= 1e-13 * scale || !v.is_finite() {
        Err(ThetaError::PoleHit)
    } else {
        Ok(v)
    }
}

/// The Hitchin solution in both of its x-forms: the logarithmic derivative
/// of `[theta_1' + 2 pi i A theta_1]^2 / ((1 - x) theta_1^2 K'^2)`, and the split
/// form `E'/K' + 2x(1-x) d/dx ln(theta_1'/theta_1 + 2 pi i A)`.
pub fn hitchin_forms(p: &PicardHitchinParams, x: C64) -> Result<(C64, C64)> {
    let f = Frame::new(p, x)?;
    let t = f.jet(1, 3)?;
    let c = 2.0 * PI * I * p.a;
    // display form
    let h = nonzero(t[1] + c * t[0], t[1].norm() + (c * t[0]).norm())?;
    let h_x = f.total(t[2] + c * t[1], t[3] + c * t[2]);
    let th_x = f.total(t[1], t[2]);
    let kp_x = f.ek.derivatives()[1];
    let disp = x * (1.0 - x) * (2.0 * h_x / h + 1.0 / (1.0 - x) - 2.0 * th_x / t[0] - 2.0 * kp_x / f.ek.kp);
    // split form
    let r = t[1] / t[0];
    let g = nonzero(r + c, r.norm() + c.norm())?;
    let g_x = f.total(t[2] / t[0] - r * r, t[3] / t[0] - r * t[2] / t[0]);
    let split = f.ek.ep / f.ek.kp + 2.0 * x * (1.0 - x) * g_x / g;
    Ok((disp, split))
}

pub fn hitchin_solution(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    Ok(hitchin_forms(p, x)?.1)
}

/// `(x, y)` from the tau-parametric form
/// `y = (2i/pi) vartheta3^-4 d/dtau ln[(theta_1' + 2 pi i a theta_1)/(vartheta2^2 theta_1)]`
/// at `(a tau + b | tau)`, `x = vartheta4^4/vartheta3^4`.
pub fn hitchin_tau_form(a: C64, b: C64, tau: C64) -> Result<(C64, C64)> {
    let t = UHTau::new(tau)?;
    let w = a * tau + b;
    if theta1_zero_distance(w, &t) < ZERO_GUARD {
        return Err(ThetaError::PoleHit);
    }
    let th: Vec<C64> = (0..=3).map(|o| theta_dx(1, w, &t, o)).collect::<Result<_>>()?;
    let v = varthetas(&t)?;
    let dv2 = theta_deriv(2, ZERO, &t, 0, 1)?;
    let c = 2.0 * PI * I * a;
    let total = |fz: C64, fzz: C64| a * fz + HEAT * fzz;
    let n = nonzero(th[1] + c * th[0], th[1].norm())?;
    let dn = total(th[2] + c * th[1], th[3] + c * th[2]);
    let dl = dn / n - 2.0 * dv2 / v[0] - total(th[1], th[2]) / th[0];
    let x = (v[2] / v[1]).powi(4);
    Ok((x, 2.0 * I / PI / v[1].powi(4) * dl))
}

/// The Hitchin solution through `wp(z) = wp(w) + wp'(w) / (2 (zeta(w) - w eta + pi i a))`
/// with `w = 2(a tau + b)` on the lattice `2Z + 2 tau Z`, fed into
/// `y = 1/3 + x/3 - (4/pi^2) wp(z) / vartheta3^4`.
pub fn hitchin_wp_form(a: C64, b: C64, tau: C64) -> Result<C64> {
    let t = UHTau::new(tau)?;
    let w = 2.0 * (a * tau + b);
    let pt = zeta_wp(w, &t)?;
    let den = nonzero(pt.zeta - w * pt.eta + PI * I * a, pt.zeta.norm())?;
    let wp = pt.wp + 0.5 * pt.wp_prime / den;
    let v = varthetas(&t)?;
    let x = (v[2] / v[1]).powi(4);
    Ok(1.0 / 3.0 + x / 3.0 - 4.0 / (PI * PI) * wp / v[1].powi(4))
}

/// `y = -sqrt(x) theta_2^2 / theta_1^2 (A tau + B | tau)` and its x-derivative.
pub fn picard_solution_dx(p: &PicardHitchinParams, x: C64) -> Result<(C64, C64)> {
    let f = Frame::new(p, x)?;
    let t1 = f.jet(1, 2)?;
    let t2 = f.jet(2, 2)?;
    let s = t2[0] * t2[0] / (t1[0] * t1[0]);
    let s_x = 2.0 * s * (f.total(t2[1], t2[2]) / t2[0] - f.total(t1[1], t1[2]) / t1[0]);
    let r = f.x.sqrt();
    Ok((-r * s, -s / (2.0 * r) - r * s_x))
}

pub fn picard_solution(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    Ok(picard_solution_dx(p, x)?.0)
}

/// The same expression with the prefactor `-1/sqrt(x)`, as sometimes quoted. It is not a solution.
pub fn picard_as_printed(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    let y = picard_solution(p, x)?;
    Ok(y / x)
}

/// `(x, y)` with `y = -(vartheta4^2/vartheta3^2) theta_2^2/theta_1^2 (a tau + b | tau)`.
pub fn picard_tau_form(a: C64, b: C64, tau: C64) -> Result<(C64, C64)> {
    let t = UHTau::new(tau)?;
    let w = a * tau + b;
    if theta1_zero_distance(w, &t) < ZERO_GUARD {
        return Err(ThetaError::PoleHit);
    }
    let v = varthetas(&t)?;
    let r = theta(2, w, &t)? / theta(1, w, &t)?;
    Ok(((v[2] / v[1]).powi(4), -(v[2] / v[1]).powi(2) * r * r))
}

pub fn solution(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    match p.variant {
        Variant::Hitchin => hitchin_solution(p, x),
        Variant::Picard => picard_solution(p, x),
    }
}

/// `(x(x-1) y y_x - x y (y-1)) / (x(x-1) y_x - y(y-1))`
pub fn okamoto(x: C64, y: C64, yx: C64) -> Result<C64> {
    let num = x * (x - 1.0) * y * yx - x * y * (y - 1.0);
    let den = x * (x - 1.0) * yx - y * (y - 1.0);
    Ok(num / nonzero(den, (x * (x - 1.0) * yx).norm() + (y * (y - 1.0)).norm())?)
}

pub fn okamoto_of_picard(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    let (y, yx) = picard_solution_dx(p, x)?;
    okamoto(x, y, yx)
}

// ---- poles ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub n: i64,
    pub m: i64,
    /// `(m - B)/(n + A)`
    pub tau: C64,
    pub x: C64,
    /// `|theta_1|` at the reduced argument; below 1e-8 for a verified pole
    pub theta1_abs: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleLattice {
    pub poles: Vec<Pole>,
    pub admissible_count: usize,
    pub skipped_count: usize,
    pub verified_count: usize,
}

/// Poles `x_mn = vartheta4^4/vartheta3^4((m - B)/(n + A))` over the admissible `(n, m)`.
pub fn pole_lattice(p: &PicardHitchinParams, n_range: RangeInclusive<i64>, m_range: RangeInclusive<i64>) -> Result<PoleLattice> {
    let cells: Vec<(i64, i64)> = n_range.flat_map(|n| m_range.clone().map(move |m| (n, m))).collect();
    let total = cells.len();
    let found: Vec<Option<Pole>> = cells
        .par_iter()
        .map(|&(n, m)| -> Result<Option<Pole>> {
            if !p.admissible(n, m) {
                return Ok(None);
            }
            let tau = (m as f64 - p.b) / (n as f64 + p.a);
            let x = lambda_prime(tau)?;
            let theta1_abs = theta1_reduced_abs(p.a * tau + p.b, tau)?;
            Ok(Some(Pole { n, m, tau, x, theta1_abs, verified: theta1_abs < ZERO_GUARD }))
        })
        .collect::<Result<_>>()?;
    let poles: Vec<Pole> = found.into_iter().flatten().collect();
    let verified_count = poles.iter().filter(|q| q.verified).count();
    Ok(PoleLattice { admissible_count: poles.len(), skipped_count: total - poles.len(), verified_count, poles })
}

// ---- tau-functions and the second pole series ----

/// `tau_1 = theta_1(A tau + B | tau)` and `tau_2 = tau_1 d/dB ln(tau_1 e^{2 pi i A B})`.
pub fn tau_functions(p: &PicardHitchinParams, x: C64) -> Result<(C64, C64)> {
    let ek = complete_elliptic(x)?;
    let tau = UHTau::new(ek.tau())?;
    let z = p.a * tau.tau() + p.b;
    let t0 = theta(1, z, &tau)?;
    let t1 = theta_dx(1, z, &tau, 1)?;
    Ok((t0, t1 + 2.0 * PI * I * p.a * t0))
}

/// `E'/K' + 2x(1-x) d/dx ln(tau_2/tau_1)`, with both tau-functions differentiated separately.
pub fn hitchin_from_tau_functions(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    let f = Frame::new(p, x)?;
    let t = f.jet(1, 3)?;
    let c = 2.0 * PI * I * p.a;
    let tau1 = t[0];
    let tau2 = nonzero(t[1] + c * t[0], t[1].norm())?;
    let tau1_x = f.total(t[1], t[2]);
    let tau2_x = f.total(t[2] + c * t[1], t[3] + c * t[2]);
    Ok(f.ek.ep / f.ek.kp + 2.0 * x * (1.0 - x) * (tau2_x / tau2 - tau1_x / tau1))
}

/// `f(x; A, B) = (1/2pi) theta_1'/theta_1 (A tau + B | tau)`.
pub fn mero_f(p: &PicardHitchinParams, x: C64) -> Result<C64> {
    let f = Frame::new(p, x)?;
    Ok(theta_dx(1, f.z, &f.tau, 1)? / theta(1, f.z, &f.tau)? / (2.0 * PI))
}

// g = f + iA and its x-derivative; the second series sits at the zeros of g
fn second_series_g(p: &PicardHitchinParams, x: C64) -> Result<(C64, C64)> {
    let f = Frame::new(p, x)?;
    let t = f.jet(1, 3)?;
    let r = t[1] / t[0];
    let r_x = f.total(t[2] / t[0] - r * r, t[3] / t[0] - r * t[2] / t[0]);
    Ok((r / (2.0 * PI) + I * p.a, r_x / (2.0 * PI)))
}

const EDGE_SAMPLES: usize = 16;

fn winding(p: &PicardHitchinParams, lo: C64, hi: C64) -> Option<i64> {
    let corners = [lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im)];
    let mut total = 0.0;
    let mut prev: Option<C64> = None;
    let mut first: Option<C64> = None;
    for e in 0..4 {
        let (s, t) = (corners[e], corners[(e + 1) % 4]);
        for k in 0..EDGE_SAMPLES {
            let z = s + (t - s) * (k as f64 / EDGE_SAMPLES as f64);
            let g = second_series_g(p, z).ok()?.0;
            if let Some(pv) = prev {
                total += (g / pv).arg();
            } else {
                first = Some(g);
            }
            prev = Some(g);
        }
    }
    total += (first? / prev?).arg();
    Some((total / (2.0 * PI)).round() as i64)
}

fn newton(p: &PicardHitchinParams, mut x: C64) -> Option<C64> {
    for _ in 0..60 {
        let (g, gx) = second_series_g(p, x).ok()?;
        let step = g / gx;
        if !step.is_finite() {
            return None;
        }
        x -= step;
        if step.norm() < 1e-14 * x.norm().max(1.0) {
            let (g, _) = second_series_g(p, x).ok()?;
            return (g.norm() < 1e-9 * (1.0 + p.a.norm())).then_some(x);
        }
    }
    None
}

/// Zeros of `f(x; A, B) + iA` in the rectangle `[lo, hi]`: a grid of
/// `cells x cells` boxes, an argument-winding filter, then Newton.
pub fn second_series_poles(p: &PicardHitchinParams, lo: C64, hi: C64, cells: usize) -> Result<Vec<C64>> {
    if cells == 0 || hi.re <= lo.re || hi.im <= lo.im {
        return Err(ThetaError::InvalidArgument("empty scan rectangle".into()));
    }
    let (dx, dy) = ((hi.re - lo.re) / cells as f64, (hi.im - lo.im) / cells as f64);
    let boxes: Vec<(usize, usize)> = (0..cells).flat_map(|i| (0..cells).map(move |j| (i, j))).collect();
    let found: Vec<Option<C64>> = boxes
        .par_iter()
        .map(|&(i, j)| {
            let a = C64::new(lo.re + i as f64 * dx, lo.im + j as f64 * dy);
            let b = a + C64::new(dx, dy);
            match winding(p, a, b) {
                Some(w) if w > 0 => {
                    let r = newton(p, (a + b) / 2.0)?;
                    let inside = r.re >= a.re - dx && r.re <= b.re + dx && r.im >= a.im - dy && r.im <= b.im + dy;
                    inside.then_some(r)
                }
                _ => None,
            }
        })
        .collect();
    let mut roots: Vec<C64> = Vec::new();
    for r in found.into_iter().flatten() {
        if roots.iter().all(|q| (q - r).norm() > 1e-8) {
            roots.push(r);
        }
    }
    Ok(roots)
}

// ---- Schwarzian of tau(s) ----

fn schwarzian_of_tau(s: C64) -> Result<C64> {
    let d = s.norm().min((s - 1.0).norm()).min((s + 1.0).norm());
    if d < BRANCH_GUARD {
        return Err(ThetaError::BranchPointProximity(crate::cx::format_complex(s)));
    }
    let tp = |u: C64| -> Result<C64> { Ok(tau_dx(u * u)? * 2.0 * u) };
    let h = 1e-3 * d.min(1.0);
    let f: Vec<C64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|k| tp(s + k * h)).collect::<Result<_>>()?;
    let t1 = f[2];
    let t2 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
    let t3 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
    Ok(t3 / t1 - 1.5 * (t2 / t1).powi(2))
}

fn heun_potential(s: C64) -> C64 {
    let s2 = s * s;
    (s2 + 1.0).powi(2) / (s2 * (s2 - 1.0).powi(2))
}

/// `|{tau; s} - Q/2| / max(1, |Q/2|)` with `Q = (s^2+1)^2/(s^2 (s^2-1)^2)` and
/// `tau(s) = i K(s)/K'(s)`, i.e. `Y_ss = -(Q/4) Y` has `Y_2/Y_1 = tau`.
/// `tau'` is exact; its two further derivatives use five-point stencils.
pub fn heun_schwarzian_check(s: C64) -> Result<f64> {
    let sch = schwarzian_of_tau(s)?;
    let rhs = heun_potential(s) / 2.0;
    Ok((sch - rhs).norm() / rhs.norm().max(1.0))
}

/// The same check against `{tau; s} = Q`, the potential `-(Q/2) Y` as sometimes quoted.
/// The relative mismatch is 1/2 wherever `|Q| >= 1`.
pub fn heun_schwarzian_as_printed(s: C64) -> Result<f64> {
    let sch = schwarzian_of_tau(s)?;
    let rhs = heun_potential(s);
    Ok((sch - rhs).norm() / rhs.norm().max(1.0))
}
