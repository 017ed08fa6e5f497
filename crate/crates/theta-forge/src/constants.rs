//! Theta constants, Weierstrass and Dedekind eta, the invariants g2, g3,
//! branch points, Klein's J and the period inversion problem.

use std::f64::consts::PI;

use crate::cx::{c, root24, C64, I, ONE, ZERO};
use crate::elliptic;
use crate::error::{Result, ThetaError};
use crate::theta::{theta, varthetas, Estimate, SeriesBudget, UHTau};
use crate::transforms::ModMap;

// Sum a q-series whose k-th term (k >= 1) is bounded by scale * k^deg * r^k.
fn q_sum(
    term: impl Fn(f64) -> C64,
    r: f64,
    deg: i32,
    scale: f64,
    budget: &SeriesBudget,
) -> Result<Estimate> {
    let mut sum = ZERO;
    let mut abs_sum = 0.0;
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let t = term(kf);
        sum += t;
        abs_sum += t.norm();
        let next = kf + 1.0;
        let ratio = ((next + 1.0) / next).powi(deg) * r;
        if ratio < 1.0 {
            let tail = scale * next.powi(deg) * r.powf(next) / (1.0 - ratio);
            if tail <= budget.abs_tol {
                let rounding = 4.0 * f64::EPSILON * abs_sum;
                return Ok(Estimate { value: sum, bound: tail + rounding, tail, terms: k });
            }
            if k >= budget.max_terms {
                return Err(ThetaError::TailNotConverged { terms: k, bound: tail });
            }
        } else if k >= budget.max_terms {
            return Err(ThetaError::TailNotConverged { terms: k, bound: f64::INFINITY });
        }
        k += 1;
    }
}

// exp(2 pi i tau) with Re tau folded mod 1.
fn nome2(tau: &UHTau) -> C64 {
    let t = tau.tau() - tau.tau().re.round();
    (2.0 * PI * I * t).exp()
}

fn scaled(e: Estimate, factor: C64, shift: C64) -> Estimate {
    let f = factor.norm();
    Estimate { value: e.value * factor + shift, bound: e.bound * f, tail: e.tail * f, terms: e.terms }
}

/// Invariants `(g2, g3)` for the periods `(1, tau)` from the Lambert series.
pub fn g2_g3_lambert(tau: &UHTau, budget: &SeriesBudget) -> Result<(Estimate, Estimate)> {
    let q2 = nome2(tau);
    let r = q2.norm();
    let lam = |p: i32| {
        move |k: f64| {
            let qk = q2.powf(k);
            qk * k.powi(p) / (1.0 - qk)
        }
    };
    let s3 = q_sum(lam(3), r, 3, 1.0 / (1.0 - r), budget)?;
    let s5 = q_sum(lam(5), r, 5, 1.0 / (1.0 - r), budget)?;
    let p4 = PI.powi(4);
    let p6 = PI.powi(6);
    let g2 = scaled(s3, c(20.0 * p4, 0.0), c(20.0 * p4 / 240.0, 0.0));
    let g3 = scaled(s5, c(-7.0 * p6 / 3.0, 0.0), c(7.0 * p6 / 3.0 / 504.0, 0.0));
    Ok((g2, g3))
}

/// Term-wise tau-derivatives `(dg2/dtau, dg3/dtau)` of the Lambert series.
pub fn g2_g3_lambert_dtau(tau: &UHTau, budget: &SeriesBudget) -> Result<(Estimate, Estimate)> {
    let q2 = nome2(tau);
    let r = q2.norm();
    // d/dtau q^k/(1-q^k) = 2 pi i k q^k/(1-q^k)^2
    let lam = |p: i32| {
        move |k: f64| {
            let qk = q2.powf(k);
            2.0 * PI * I * qk * k.powi(p + 1) / ((1.0 - qk) * (1.0 - qk))
        }
    };
    let sc = 2.0 * PI / ((1.0 - r) * (1.0 - r));
    let s3 = q_sum(lam(3), r, 4, sc, budget)?;
    let s5 = q_sum(lam(5), r, 6, sc, budget)?;
    let g2 = scaled(s3, c(20.0 * PI.powi(4), 0.0), ZERO);
    let g3 = scaled(s5, c(-7.0 * PI.powi(6) / 3.0, 0.0), ZERO);
    Ok((g2, g3))
}

/// Weierstrass `eta(tau) = zeta(1 | 1, tau)`.
pub fn eta_w(tau: &UHTau, budget: &SeriesBudget) -> Result<Estimate> {
    let q2 = nome2(tau);
    let r = q2.norm();
    let s = q_sum(
        |k| {
            let qk = q2.powf(k);
            qk / ((1.0 - qk) * (1.0 - qk))
        },
        r,
        0,
        1.0 / ((1.0 - r) * (1.0 - r)),
        budget,
    )?;
    let p2 = 2.0 * PI * PI;
    Ok(scaled(s, c(-p2, 0.0), c(p2 / 24.0, 0.0)))
}

/// Term-wise `d eta / d tau`.
pub fn eta_w_dtau(tau: &UHTau, budget: &SeriesBudget) -> Result<Estimate> {
    let q2 = nome2(tau);
    let r = q2.norm();
    let s = q_sum(
        |k| {
            let qk = q2.powf(k);
            2.0 * PI * I * k * qk * (1.0 + qk) / ((1.0 - qk) * (1.0 - qk) * (1.0 - qk))
        },
        r,
        1,
        2.0 * PI * (1.0 + r) / (1.0 - r).powi(3),
        budget,
    )?;
    Ok(scaled(s, c(-2.0 * PI * PI, 0.0), ZERO))
}

// Pentagonal sum with an optional tau-derivative. Returns the sum over k of
// (-1)^k q^(3k^2+k) * weight(k) at the folded tau, before the prefactor.
fn pentagonal(t: C64, deriv: bool, budget: &SeriesBudget) -> Result<(C64, f64, f64, usize)> {
    let q = (PI * I * t).exp();
    let r = q.norm();
    let pref = (PI * I * t / 12.0).exp();
    let weight = |e: f64| if deriv { PI * I * (e + 1.0 / 12.0) } else { ONE };
    let mut sum = ZERO;
    let mut abs_sum = 0.0;
    let mut k = 0i64;
    loop {
        for kk in if k == 0 { vec![0] } else { vec![k, -k] } {
            let e = (3 * kk * kk + kk) as f64;
            let sgn = if kk.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let tm = pref * weight(e) * q.powf(e) * sgn;
            sum += tm;
            abs_sum += tm.norm();
        }
        // remaining |k| >= k+1: exponents >= 3(k+1)^2 - (k+1), gaps >= 6k+5
        let k1 = (k + 1) as f64;
        let e0 = 3.0 * k1 * k1 - k1;
        let gap = r.powf(6.0 * k1 + 2.0);
        let deg = if deriv { PI * (e0 + 1.0) * 2.0 } else { 1.0 };
        let tail = 2.0 * pref.norm() * deg * r.powf(e0) / (1.0 - gap).max(1e-300);
        if gap < 0.5 && tail <= budget.abs_tol {
            return Ok((sum, tail, 4.0 * f64::EPSILON * abs_sum, 2 * k as usize + 1));
        }
        if k as usize >= budget.max_terms {
            return Err(ThetaError::TailNotConverged { terms: 2 * k as usize + 1, bound: tail });
        }
        k += 1;
    }
}

/// Dedekind eta from Euler's pentagonal series.
pub fn eta_dedekind(tau: &UHTau, budget: &SeriesBudget) -> Result<Estimate> {
    let n = tau.tau().re.round();
    let (s, tail, rounding, terms) = pentagonal(tau.tau() - n, false, budget)?;
    Ok(Estimate { value: root24(n as i64) * s, bound: tail + rounding, tail, terms })
}

/// Term-wise `d eta_D / d tau`.
pub fn eta_dedekind_dtau(tau: &UHTau) -> Result<C64> {
    let n = tau.tau().re.round();
    let (s, _, _, _) = pentagonal(tau.tau() - n, true, &SeriesBudget::default())?;
    Ok(root24(n as i64) * s)
}

/// Everything constant at a fixed tau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPack {
    pub vartheta2: C64,
    pub vartheta3: C64,
    pub vartheta4: C64,
    pub eta_w: C64,
    pub eta_d: C64,
    pub g2: C64,
    pub g3: C64,
    pub tau: UHTau,
}

impl ConstantPack {
    pub fn new(tau: &UHTau) -> Result<Self> {
        let b = SeriesBudget::default();
        let [v2, v3, v4] = varthetas(tau)?;
        let (g2, g3) = g2_g3_lambert(tau, &b)?;
        Ok(ConstantPack {
            vartheta2: v2,
            vartheta3: v3,
            vartheta4: v4,
            eta_w: eta_w(tau, &b)?.value,
            eta_d: eta_dedekind(tau, &b)?.value,
            g2: g2.value,
            g3: g3.value,
            tau: *tau,
        })
    }

    pub fn varthetas(&self) -> [C64; 3] {
        [self.vartheta2, self.vartheta3, self.vartheta4]
    }

    pub fn discriminant(&self) -> C64 {
        self.g2.powi(3) - 27.0 * self.g3 * self.g3
    }

    pub fn is_degenerate(&self) -> bool {
        let scale = self.g2.norm().powi(3) + 27.0 * self.g3.norm_sqr();
        self.discriminant().norm() <= 1e-12 * scale
    }
}

/// Move tau into the standard fundamental domain.
///
/// Returns `tau* = M tau` and `M`. Boundary ties go to `Re tau* <= 0`.
pub fn fundamental_domain_reduce(tau: &UHTau) -> (UHTau, ModMap) {
    let mut t = tau.tau();
    let mut m = ModMap::identity();
    for _ in 0..10_000 {
        let n = t.re.round();
        if n != 0.0 {
            t -= n;
            m = ModMap::t(-(n as i64)).compose(&m);
        }
        if t.norm_sqr() < 1.0 - 1e-15 {
            t = -1.0 / t;
            m = ModMap::s().compose(&m);
        } else {
            break;
        }
    }
    if t.re >= 0.5 - 1e-15 {
        t -= 1.0;
        m = ModMap::t(-1).compose(&m);
    }
    if t.re > 0.0 && (t.norm_sqr() - 1.0).abs() < 1e-14 {
        t = -1.0 / t;
        m = ModMap::s().compose(&m);
    }
    (UHTau::new(t).expect("reduction stays in the upper half-plane"), m)
}

/// Roots of `4z^3 - g2 z - g3` labelled as values of wp at the half-periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoints {
    pub e1: C64,
    pub e2: C64,
    pub e3: C64,
}

fn bracket(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

// vartheta[a,0] and vartheta[0,b] for a, b in {0,1}
fn v_a0(v: [C64; 3], a: i64) -> C64 {
    if a.rem_euclid(2) == 1 {
        v[0]
    } else {
        v[1]
    }
}

fn v_0b(v: [C64; 3], b: i64) -> C64 {
    if b.rem_euclid(2) == 1 {
        v[2]
    } else {
        v[1]
    }
}

/// `e[gamma,delta] = (pi^2/12)(<gamma> vartheta[0,delta]^4 - <delta> vartheta[gamma,0]^4)`,
/// with `v = [vartheta2, vartheta3, vartheta4]`.
pub fn e_char(v: [C64; 3], gamma: i64, delta: i64) -> C64 {
    PI * PI / 12.0 * (bracket(gamma) * v_0b(v, delta).powi(4) - bracket(delta) * v_a0(v, gamma).powi(4))
}

pub fn branch_points(tau: &UHTau) -> Result<BranchPoints> {
    let v = varthetas(tau)?;
    Ok(BranchPoints { e1: e_char(v, 0, 1), e2: e_char(v, 1, 1), e3: e_char(v, 1, 0) })
}

/// `(g2, g3)` rebuilt from two of the theta constants; `(alpha, beta)` picks the pair.
pub fn g2_g3_from_varthetas(v: [C64; 3], alpha: i64, beta: i64) -> (C64, C64) {
    let a4 = v_a0(v, alpha).powi(4);
    let b4 = v_0b(v, beta).powi(4);
    let (ba, bb, bab) = (bracket(alpha), bracket(beta), bracket(alpha + beta));
    let g2 = PI.powi(4) / 12.0 * (a4 * a4 + bab * a4 * b4 + b4 * b4);
    let g3 = PI.powi(6) / 432.0
        * (2.0 * bb * a4 * a4 * a4 - 3.0 * a4 * b4 * (bb * b4 - ba * a4) - 2.0 * ba * b4 * b4 * b4);
    (g2, g3)
}

/// Klein's `J = g2^3/(g2^3 - 27 g3^2)`, evaluated after reduction.
pub fn klein_j(tau: &UHTau) -> Result<C64> {
    let (t, _) = fundamental_domain_reduce(tau);
    let [v2, v3, _] = varthetas(&t)?;
    // same quotient written through lambda = vartheta2^4/vartheta3^4
    let l = (v2 / v3).powi(4);
    let num = 4.0 * (l * l - l + 1.0).powi(3);
    let den = 27.0 * l * l * (1.0 - l) * (1.0 - l);
    Ok(num / den)
}

/// A period pair `(omega, omega')`: the lattice is `2 omega Z + 2 omega' Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Periods {
    pub omega: C64,
    pub omega_prime: C64,
}

impl Periods {
    pub fn tau(&self) -> C64 {
        self.omega_prime / self.omega
    }
}

/// Invariants of the lattice spanned by `2 omega`, `2 omega'`.
pub fn invariants_of_periods(omega: C64, omega_prime: C64) -> Result<(C64, C64)> {
    let r = omega_prime / omega;
    if r.im.abs() < 1e-14 * r.norm() {
        return Err(ThetaError::DegeneratePeriods);
    }
    let (w, wp) = if r.im > 0.0 { (omega, omega_prime) } else { (omega, -omega_prime) };
    let t0 = UHTau::new(wp / w)?;
    let (ts, m) = fundamental_domain_reduce(&t0);
    let (_, _, cc, d) = m.entries();
    let w2 = cc as f64 * wp + d as f64 * w;
    let (g2, g3) = g2_g3_lambert(&ts, &SeriesBudget::default())?;
    Ok((g2.value * w2.powi(-4), g3.value * w2.powi(-6)))
}

/// True when the two period pairs generate the same lattice.
pub fn same_lattice(w1: C64, w1p: C64, w2: C64, w2p: C64, tol: f64) -> bool {
    // express (w2, w2p) over the real basis (w1, w1p)
    let det = w1.re * w1p.im - w1.im * w1p.re;
    if det.abs() < 1e-300 {
        return false;
    }
    let coords = |z: C64| {
        let p = (z.re * w1p.im - z.im * w1p.re) / det;
        let q = (w1.re * z.im - w1.im * z.re) / det;
        (p, q)
    };
    let (p1, q1) = coords(w2);
    let (p2, q2) = coords(w2p);
    let near = |v: f64| (v - v.round()).abs() <= tol * (1.0 + v.abs());
    if ![p1, q1, p2, q2].iter().all(|&v| near(v)) {
        return false;
    }
    let d = p1.round() * q2.round() - q1.round() * p2.round();
    d.abs() == 1.0
}

fn cubic_roots(a: C64, b: C64) -> [C64; 3] {
    // 4z^3 - a z - b; Durand-Kerner on the monic form, then Newton polish
    let f = |z: C64| z * z * z - a / 4.0 * z - b / 4.0;
    let df = |z: C64| 3.0 * z * z - a / 4.0;
    let scale = a.norm().sqrt().max(b.norm().cbrt()).max(1e-300);
    let mut r = [c(0.4, 0.9) * scale, c(0.4, 0.9).powi(2) * scale, c(0.4, 0.9).powi(3) * scale];
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..3 {
            let mut den = ONE;
            for j in 0..3 {
                if j != i {
                    den *= r[i] - r[j];
                }
            }
            let step = f(r[i]) / den;
            r[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-16 * scale {
            break;
        }
    }
    for z in r.iter_mut() {
        for _ in 0..3 {
            let d = df(*z);
            if d.norm() > 0.0 {
                *z -= f(*z) / d;
            }
        }
    }
    r
}

/// Newton solve of `vartheta4^4/vartheta3^4 (tau) = lambda` from the seed `tau0`.
pub fn tau_from_lambda(lambda: C64, tau0: C64) -> Result<UHTau> {
    let mut t = tau0;
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let ut = UHTau::new(t)?;
        let v3 = theta(3, ZERO, &ut)?;
        let v4 = theta(4, ZERO, &ut)?;
        let x = (v4 / v3).powi(4);
        let dx = PI * I * x * (x - 1.0) * v3.powi(4);
        let step = (x - lambda) / dx;
        let step = if step.norm() > 0.5 * t.im { step * (0.5 * t.im / step.norm()) } else { step };
        let size = step.norm();
        // stop once the step is at rounding level or no longer shrinking
        if size <= 1e-15 * t.norm() || (size < 1e-11 * t.norm() && size >= last) {
            return Ok(ut);
        }
        t -= step;
        last = size;
        if t.im <= 0.0 {
            return Err(ThetaError::NoConvergence("Newton left the upper half-plane".into()));
        }
    }
    Err(ThetaError::NoConvergence("lambda inversion".into()))
}

/// Periods of `w^2 = 4z^3 - a z - b`.
pub fn modular_inversion(a: C64, b: C64) -> Result<Periods> {
    let disc = a.powi(3) - 27.0 * b * b;
    let scale = a.norm().powi(3).max(27.0 * b.norm_sqr());
    if scale == 0.0 || disc.norm() <= 1e-12 * scale {
        return Err(ThetaError::DegenerateCurve);
    }
    if b == ZERO {
        return Ok(lemniscatic(a)?);
    }
    if a == ZERO {
        return Ok(equianharmonic(b)?);
    }
    modular_inversion_generic(a, b)
}

fn lemniscatic(a: C64) -> Result<Periods> {
    let v4 = theta(4, ZERO, &UHTau::new(c(0.0, 2.0))?)?;
    let w = (8.0 * a).powf(-0.25) * PI * v4 * v4;
    Ok(Periods { omega: w, omega_prime: I * w })
}

fn equianharmonic(b: C64) -> Result<Periods> {
    let eps = c(-0.5, 3f64.sqrt() / 2.0);
    let te = UHTau::new(eps)?;
    let e = eta_dedekind(&te, &SeriesBudget::default())?.value;
    let mut w = (-27.0 * b * b).powf(-1.0 / 12.0) * PI * e * e;
    let (_, g3) = g2_g3_lambert(&te, &SeriesBudget::default())?;
    // the principal 12th root fixes b only up to sign
    if (g3.value * w.powi(-6) + b).norm() < (g3.value * w.powi(-6) - b).norm() {
        w *= I;
    }
    Ok(Periods { omega: w, omega_prime: eps * w })
}

/// The generic solver, also valid near the lemniscatic and equianharmonic curves.
pub fn modular_inversion_generic(a: C64, b: C64) -> Result<Periods> {
    let roots = cubic_roots(a, b);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut best: Option<([usize; 3], C64, C64)> = None;
    for p in perms {
        let (e1, e2, e3) = (roots[p[0]], roots[p[1]], roots[p[2]]);
        let lam = (e1 - e2) / (e1 - e3);
        let Ok(k) = elliptic::ellip_k(lam) else { continue };
        let Ok(kp) = elliptic::ellip_k(1.0 - lam) else { continue };
        let t0 = I * k / kp;
        if !t0.im.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |(_, _, bt)| t0.im > bt.im) {
            best = Some((p, lam, t0));
        }
    }
    let (p, lam, t0) = best.ok_or_else(|| ThetaError::NoConvergence("no admissible root labelling".into()))?;
    if t0.im <= 0.0 {
        return Err(ThetaError::NoConvergence("seed outside the upper half-plane".into()));
    }
    let ts = tau_from_lambda(lam, t0)?;
    let e1t = roots[p[0]];
    let e3t = roots[p[2]];
    let [v2, v3, v4] = varthetas(&ts)?;
    let d13 = e_char([v2, v3, v4], 0, 1) - e_char([v2, v3, v4], 1, 0);
    let w = (d13 / (e1t - e3t)).sqrt();
    let wp = ts.tau() * w;
    // normalize into the fundamental domain
    let (_, m) = fundamental_domain_reduce(&ts);
    let (ma, mb, mc, md) = m.entries();
    let nw = mc as f64 * wp + md as f64 * w;
    let nwp = ma as f64 * wp + mb as f64 * w;
    Ok(Periods { omega: nw, omega_prime: nwp })
}

/// A point of the upper half-plane with `J(tau) = j`.
pub fn tau_from_j(j: C64) -> Result<UHTau> {
    if (j - 1.0).norm() < 1e-14 {
        return UHTau::new(I);
    }
    if j.norm() < 1e-14 {
        return UHTau::new(c(-0.5, 3f64.sqrt() / 2.0));
    }
    let a = (27.0 * j / (j - 1.0)).powf(1.0 / 3.0);
    let p = modular_inversion_generic(a, ONE)?;
    let t = UHTau::new(p.tau())?;
    Ok(fundamental_domain_reduce(&t).0)
}
