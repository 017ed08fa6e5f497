//! Residuals of the closed differential systems satisfied by the theta
//! functions in `x` and `tau`, and by the constants `vartheta_k`, `eta`.
//!
//! Ground truth is always the term-wise differentiated q-series. The only
//! exception is the `Psi` equation, whose solution involves an integral and is
//! checked by quadrature plus a Richardson second difference.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{eta_dedekind, eta_w, eta_w_dtau, g2_g3_lambert, g2_g3_lambert_dtau};
use crate::cx::{sgn_pow, C64, I, ONE, ZERO};
use crate::derivation::{derivative_chain, derivative_chain_log, iterated, point, tau_scale, Prefactor};
use crate::error::{Result, ThetaError};
use crate::memo::Memo;
use crate::poly::{rat, QPoly};
use crate::theta::{theta_char_deriv_q, theta_deriv, varthetas, SeriesBudget, ThetaChar, UHTau, DIFF_TABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemId {
    XSys,
    TauSys,
    VarSys,
    G2G3Sys,
    LastSys,
    Chazy,
    JacobiC,
    HalphenX,
    Psi,
    DiffRel,
}

impl SystemId {
    pub fn name(self) -> &'static str {
        match self {
            SystemId::XSys => "X_SYS",
            SystemId::TauSys => "TAU_SYS",
            SystemId::VarSys => "VAR_SYS",
            SystemId::G2G3Sys => "G2G3_SYS",
            SystemId::LastSys => "LAST_SYS",
            SystemId::Chazy => "CHAZY",
            SystemId::JacobiC => "JACOBI_C",
            SystemId::HalphenX => "HALPHEN_X",
            SystemId::Psi => "PSI",
            SystemId::DiffRel => "DIFF_REL",
        }
    }

    /// Constants 1e-11, first-order systems 1e-9, nested derivatives 1e-7,
    /// quadrature 1e-6.
    pub fn default_tol(self) -> f64 {
        match self {
            SystemId::VarSys | SystemId::G2G3Sys | SystemId::LastSys => 1e-11,
            SystemId::XSys | SystemId::TauSys | SystemId::DiffRel => 1e-9,
            SystemId::Chazy | SystemId::JacobiC | SystemId::HalphenX => 1e-7,
            SystemId::Psi => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    XTau(C64, C64),
    Tau(C64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemResidual {
    pub system_id: SystemId,
    pub point: Point,
    /// Each entry is `|sum of terms| / max |term|`.
    pub residuals: Vec<f64>,
    pub tol: f64,
}

impl SystemResidual {
    pub(crate) fn new(system_id: SystemId, point: Point, residuals: Vec<f64>) -> Self {
        SystemResidual { system_id, point, residuals, tol: system_id.default_tol() }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.residuals.iter().all(|r| *r < self.tol)
    }
}

/// `|sum t| / max |t|`, 0 when every term vanishes.
pub(crate) fn scaled(terms: &[C64]) -> f64 {
    let s: C64 = terms.iter().sum();
    let m = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        0.0
    } else {
        s.norm() / m
    }
}

/// Distance from `x` to the zero lattice `Z + tau Z` of theta_1.
pub fn theta1_zero_distance(x: C64, tau: &UHTau) -> f64 {
    let t = tau.tau();
    let n0 = (x.im / t.im).round();
    let mut best = f64::INFINITY;
    for dn in -1..=1 {
        let n = n0 + dn as f64;
        let y = x - n * t;
        let m0 = y.re.round();
        for dm in -1..=1 {
            best = best.min((y - (m0 + dm as f64)).norm());
        }
    }
    best
}

pub(crate) const POLE_GUARD: f64 = 1e-8;

pub(crate) fn check_pole(x: C64, tau: &UHTau) -> Result<()> {
    let d = theta1_zero_distance(x, tau);
    if d < POLE_GUARD {
        Err(ThetaError::PoleAtLatticePoint(d))
    } else {
        Ok(())
    }
}

pub(crate) struct Consts {
    pub(crate) eta: C64,
    pub(crate) v: [C64; 3],
    /// `eta + (pi^2/12)(vartheta3^4 + vartheta4^4)`
    pub(crate) b: C64,
}

impl Consts {
    pub(crate) fn new(tau: &UHTau) -> Result<Self> {
        let eta = eta_w(tau, &SeriesBudget::default())?.value;
        Ok(Consts::from_parts(eta, varthetas(tau)?))
    }

    pub(crate) fn from_parts(eta: C64, v: [C64; 3]) -> Self {
        let b = eta + PI * PI / 12.0 * (v[1].powi(4) + v[2].powi(4));
        Consts { eta, v, b }
    }

    /// `vartheta_k` for k = 2, 3, 4 (0 for k = 1).
    fn vt(&self, k: usize) -> C64 {
        if k == 1 {
            ZERO
        } else {
            self.v[k - 2]
        }
    }
}

/// Values of the five unknowns `theta_1..theta_4, theta_1'` and their
/// x- and tau-derivatives. Index 0 of the arrays is unused.
#[derive(Clone)]
pub(crate) struct Jet5 {
    pub(crate) th: [C64; 5],
    pub(crate) th1p: C64,
    pub(crate) dx: [C64; 5],
    pub(crate) dx1p: C64,
    pub(crate) dt: [C64; 5],
    pub(crate) dt1p: C64,
}

fn base_jet(x: C64, tau: &UHTau) -> Result<Jet5> {
    let mut j = Jet5 { th: [ZERO; 5], th1p: ZERO, dx: [ZERO; 5], dx1p: ZERO, dt: [ZERO; 5], dt1p: ZERO };
    for k in 1..=4u8 {
        let i = k as usize;
        j.th[i] = theta_deriv(k, x, tau, 0, 0)?;
        j.dx[i] = theta_deriv(k, x, tau, 1, 0)?;
        j.dt[i] = theta_deriv(k, x, tau, 0, 1)?;
    }
    j.th1p = j.dx[1];
    j.dx1p = theta_deriv(1, x, tau, 2, 0)?;
    j.dt1p = theta_deriv(1, x, tau, 1, 1)?;
    Ok(j)
}

fn other_pair(k: usize) -> (usize, usize) {
    let (_, nu, mu) = DIFF_TABLE.iter().find(|(kk, _, _)| *kk as usize == k).copied().unwrap();
    (nu as usize, mu as usize)
}

pub(crate) fn x_rows(j: &Jet5, c: &Consts) -> Vec<f64> {
    let lead = j.th1p / j.th[1];
    let mut out = vec![scaled(&[j.dx[1], -j.th1p])];
    // theta_2 row pairs with (theta_3, theta_4), theta_3 with (theta_2, theta_4), theta_4 with (theta_2, theta_3)
    for k in 2..=4 {
        let (nu, mu) = other_pair(k);
        let cross = PI * c.vt(k).powi(2) * j.th[nu] * j.th[mu] / j.th[1];
        out.push(scaled(&[j.dx[k], -lead * j.th[k], cross]));
    }
    let (v3, v4) = (c.v[1], c.v[2]);
    out.push(scaled(&[
        j.dx1p,
        -j.th1p * j.th1p / j.th[1],
        PI * PI * v3 * v3 * v4 * v4 * j.th[2] * j.th[2] / j.th[1],
        4.0 * c.b * j.th[1],
    ]));
    out
}

pub(crate) fn tau_rows(j: &Jet5, c: &Consts) -> Vec<f64> {
    let (v2, v3, v4) = (c.v[0], c.v[1], c.v[2]);
    let t1 = j.th[1];
    let t1sq = t1 * t1;
    let p = j.th1p;
    let ii = I;
    let base = v3 * v3 * v4 * v4 * j.th[2] * j.th[2];
    let mut out = vec![scaled(&[
        j.dt[1],
        ii / (4.0 * PI) * p * p / t1,
        -PI * ii / 4.0 * base / t1,
        -ii / PI * c.b * t1,
    ])];
    for k in 2..=4 {
        let (nu, mu) = other_pair(k);
        let vk2 = c.vt(k).powi(2);
        let tk = j.th[k];
        out.push(scaled(&[
            j.dt[k],
            ii / (4.0 * PI) * p * p / t1sq * tk,
            -ii / 2.0 * vk2 * p * j.th[nu] * j.th[mu] / t1sq,
            -PI * ii / 4.0 * base * tk / t1sq,
            PI * ii / 4.0 * vk2 * c.vt(mu).powi(2) * j.th[nu].powi(2) * tk / t1sq,
            PI * ii / 4.0 * vk2 * c.vt(nu).powi(2) * j.th[mu].powi(2) * tk / t1sq,
            -ii / PI * c.b * tk,
        ]));
    }
    out.push(scaled(&[
        j.dt1p,
        ii / (4.0 * PI) * p * p * p / t1sq,
        -3.0 * ii / PI * (PI * PI / 4.0) * base / t1sq * p,
        -3.0 * ii / PI * c.b * p,
        PI * PI / 2.0 * ii * v2 * v2 * v3 * v3 * v4 * v4 * j.th[2] * j.th[3] * j.th[4] / t1sq,
    ]));
    out
}

fn quad_rows(j: &Jet5, c: &Consts) -> [f64; 2] {
    let (v2, v3, v4) = (c.v[0], c.v[1], c.v[2]);
    let s = |z: C64| z * z;
    [
        scaled(&[s(v2) * s(j.th[4]), -s(v4) * s(j.th[2]), -s(v3) * s(j.th[1])]),
        scaled(&[s(v2) * s(j.th[3]), -s(v3) * s(j.th[2]), -s(v4) * s(j.th[1])]),
    ]
}

/// Five rows of the x-system: `theta_1, theta_2, theta_3, theta_4, theta_1'`.
pub fn residual_x(x: C64, tau: &UHTau) -> Result<SystemResidual> {
    check_pole(x, tau)?;
    let j = base_jet(x, tau)?;
    let c = Consts::new(tau)?;
    Ok(SystemResidual::new(SystemId::XSys, Point::XTau(x, tau.tau()), x_rows(&j, &c)))
}

/// `4 pi i d theta_k/dtau - d^2 theta_k/dx^2`, k = 1..4.
pub fn heat_residuals(x: C64, tau: &UHTau) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for k in 1..=4u8 {
        let lhs = 4.0 * PI * I * theta_deriv(k, x, tau, 0, 1)?;
        out[k as usize - 1] = scaled(&[lhs, -theta_deriv(k, x, tau, 2, 0)?]);
    }
    Ok(out)
}

/// Five tau-rows followed by the four heat-equation rows.
pub fn residual_tau(x: C64, tau: &UHTau) -> Result<SystemResidual> {
    check_pole(x, tau)?;
    let j = base_jet(x, tau)?;
    let c = Consts::new(tau)?;
    let mut rows = tau_rows(&j, &c);
    rows.extend(heat_residuals(x, tau)?);
    Ok(SystemResidual::new(SystemId::TauSys, Point::XTau(x, tau.tau()), rows))
}

struct CharRow {
    lhs_x: C64,
    lhs_t: C64,
    th: C64,
    vt2: C64,
    bracket: f64,
    /// `theta[1-alpha, 0]`, `theta[0, 1-beta]` and their constants
    pa: C64,
    pb: C64,
    va2: C64,
    vb2: C64,
}

fn char_row(ch: ThetaChar, x: C64, tau: &UHTau) -> Result<CharRow> {
    let bud = SeriesBudget::default();
    let z = ZERO;
    let q = |c: ThetaChar, x: C64, p: u32, r: u32| theta_char_deriv_q(c, x, tau, p, r, &bud).map(|e| e.value);
    let ca = ThetaChar::new(1 - ch.alpha, 0);
    let cb = ThetaChar::new(0, 1 - ch.beta);
    Ok(CharRow {
        lhs_x: q(ch, x, 1, 0)?,
        lhs_t: q(ch, x, 0, 1)?,
        th: q(ch, x, 0, 0)?,
        vt2: q(ch, z, 0, 0)?.powi(2),
        bracket: sgn_pow(ch.alpha * ch.beta.div_euclid(2)),
        pa: q(ca, x, 0, 0)?,
        pb: q(cb, x, 0, 0)?,
        va2: q(ca, z, 0, 0)?.powi(2),
        vb2: q(cb, z, 0, 0)?.powi(2),
    })
}

/// The x-row for an arbitrary integer characteristic.
pub fn residual_x_char(ch: ThetaChar, x: C64, tau: &UHTau) -> Result<f64> {
    check_pole(x, tau)?;
    let r = char_row(ch, x, tau)?;
    let t1 = theta_deriv(1, x, tau, 0, 0)?;
    let p = theta_deriv(1, x, tau, 1, 0)?;
    Ok(scaled(&[r.lhs_x, -p / t1 * r.th, r.bracket * PI * r.vt2 * r.pa * r.pb / t1]))
}

/// The tau-row for an arbitrary integer characteristic.
pub fn residual_tau_char(ch: ThetaChar, x: C64, tau: &UHTau) -> Result<f64> {
    check_pole(x, tau)?;
    let r = char_row(ch, x, tau)?;
    let c = Consts::new(tau)?;
    let t1 = theta_deriv(1, x, tau, 0, 0)?;
    let p = theta_deriv(1, x, tau, 1, 0)?;
    let t2 = theta_deriv(2, x, tau, 0, 0)?;
    let t1sq = t1 * t1;
    let base = c.v[1].powi(2) * c.v[2].powi(2) * t2 * t2;
    Ok(scaled(&[
        r.lhs_t,
        I / (4.0 * PI) * p * p / t1sq * r.th,
        -I / 2.0 * r.bracket * r.vt2 * p * r.pa * r.pb / t1sq,
        -I / PI * c.b * r.th,
        -PI * I / 4.0 * base * r.th / t1sq,
        PI * I / 4.0 * r.vt2 * r.vb2 * r.pa * r.pa * r.th / t1sq,
        PI * I / 4.0 * r.vt2 * r.va2 * r.pb * r.pb * r.th / t1sq,
    ]))
}

/// Log-derivative relations between pairs of theta functions and the
/// quadratic identities that close them.
pub fn residual_diff_rel(x: C64, tau: &UHTau) -> Result<SystemResidual> {
    check_pole(x, tau)?;
    let j = base_jet(x, tau)?;
    let c = Consts::new(tau)?;
    let mut rows = Vec::new();
    for (k, nu, mu) in DIFF_TABLE {
        let (k, nu, mu) = (k as usize, nu as usize, mu as usize);
        let sg = if nu > mu { 1.0 } else { -1.0 };
        let vk2 = c.vt(k).powi(2);
        rows.push(scaled(&[
            j.dx[nu] / j.th[nu],
            -j.dx[mu] / j.th[mu],
            -sg * PI * vk2 * j.th[1] * j.th[k] / (j.th[nu] * j.th[mu]),
        ]));
    }
    for (k, nu, mu) in DIFF_TABLE {
        let (k, nu, mu) = (k as usize, nu as usize, mu as usize);
        let sg = if nu > mu { 1.0 } else { -1.0 };
        rows.push(scaled(&[
            sg * c.vt(k).powi(2) * j.th[1].powi(2),
            -c.vt(mu).powi(2) * j.th[nu].powi(2),
            c.vt(nu).powi(2) * j.th[mu].powi(2),
        ]));
    }
    Ok(SystemResidual::new(SystemId::DiffRel, Point::XTau(x, tau.tau()), rows))
}

/// The family `C e^(pi i A(2x + A tau)) theta(x + A tau + B | tau)` plugged into
/// the x- and tau-systems, then the two quadratic relations.
/// Rows: five x-rows, five tau-rows, two quadratic relations.
pub fn verify_solution_family(a: C64, b: C64, cc: C64, x: C64, tau: &UHTau) -> Result<SystemResidual> {
    let t = tau.tau();
    let y = x + a * t + b;
    check_pole(y, tau)?;
    let g = base_jet(y, tau)?;
    let c = Consts::new(tau)?;
    let e = cc * (PI * I * a * (2.0 * x + a * t)).exp();
    let tpa = 2.0 * PI * I * a;
    let th1pp = theta_deriv(1, y, tau, 2, 0)?;
    let mut f = g.clone();
    for k in 1..=4 {
        f.th[k] = e * g.th[k];
        f.dx[k] = e * (tpa * g.th[k] + g.dx[k]);
        f.dt[k] = e * (PI * I * a * a * g.th[k] + a * g.dx[k] + g.dt[k]);
    }
    // theta_1' of the family is d/dx of its theta_1
    let gp = g.th1p + tpa * g.th[1];
    let gp_x = th1pp + tpa * g.th1p;
    let gp_t = g.dt1p + tpa * g.dt[1];
    f.th1p = e * gp;
    f.dx1p = e * (tpa * gp + gp_x);
    f.dt1p = e * (PI * I * a * a * gp + a * gp_x + gp_t);
    let mut rows = x_rows(&f, &c);
    rows.extend(tau_rows(&f, &c));
    rows.extend(quad_rows(&f, &c));
    Ok(SystemResidual::new(SystemId::XSys, Point::XTau(x, t), rows))
}

fn rel_row(lhs: C64, rhs_terms: &[C64]) -> f64 {
    let mut t = vec![lhs];
    t.extend(rhs_terms.iter().map(|r| -r));
    scaled(&t)
}

/// Rows `vartheta_2, vartheta_3, vartheta_4, eta` of the constant system.
pub fn residual_var(tau: &UHTau) -> Result<SystemResidual> {
    let c = Consts::new(tau)?;
    let bud = SeriesBudget::default();
    let k12 = PI * PI / 12.0;
    let [v2, v3, v4] = c.v;
    let (p2, p3, p4) = (v2.powi(4), v3.powi(4), v4.powi(4));
    let ip = I / PI;
    let z = ZERO;
    let quartic = [p3 + p4, p2 - p4, -(p2 + p3)];
    let mut rows = Vec::new();
    for (i, k) in (2..=4u8).enumerate() {
        let lhs = theta_deriv(k, z, tau, 0, 1)?;
        rows.push(rel_row(lhs, &[ip * c.eta * c.v[i], ip * k12 * quartic[i] * c.v[i]]));
    }
    let de = eta_w_dtau(tau, &bud)?.value;
    let s8 = v2.powi(8) + v3.powi(8) + v4.powi(8);
    rows.push(rel_row(de, &[ip * 2.0 * c.eta * c.eta, -ip * PI.powi(4) / 144.0 * s8]));
    Ok(SystemResidual::new(SystemId::VarSys, Point::Tau(tau.tau()), rows))
}

/// The characteristic form of the constant system: vartheta rows for
/// `(0,0), (1,0), (0,1)` and eta rows for `(1,0), (0,1), (1,1)`.
pub fn residual_last(tau: &UHTau) -> Result<SystemResidual> {
    let bud = SeriesBudget::default();
    let eta = eta_w(tau, &bud)?.value;
    let vc = |a: i64, b: i64| theta_char_deriv_q(ThetaChar::new(a, b), ZERO, tau, 0, 0, &bud).map(|e| e.value);
    let ip = I / PI;
    let mut rows = Vec::new();
    for (a, b) in [(0i64, 0i64), (1, 0), (0, 1)] {
        let lhs = theta_char_deriv_q(ThetaChar::new(a, b), ZERO, tau, 0, 1, &bud)?.value;
        let v = vc(a, b)?;
        let q = sgn_pow(b) * vc(1 - a, 0)?.powi(4) - sgn_pow(a) * vc(0, 1 - b)?.powi(4);
        rows.push(rel_row(lhs, &[ip * eta * v, ip * PI * PI / 12.0 * q * v]));
    }
    let de = eta_w_dtau(tau, &bud)?.value;
    for (a, b) in [(1i64, 0i64), (0, 1), (1, 1)] {
        let (pa, pb) = (vc(a, 0)?.powi(4), vc(0, b)?.powi(4));
        let s = pa * pa + sgn_pow(a + b) * pa * pb + pb * pb;
        rows.push(rel_row(de, &[ip * 2.0 * eta * eta, -ip * PI.powi(4) / 72.0 * s]));
    }
    Ok(SystemResidual::new(SystemId::LastSys, Point::Tau(tau.tau()), rows))
}

/// `dg2/dtau`, `dg3/dtau`, `deta/dtau` in terms of `g2, g3, eta`.
pub fn residual_g2g3(tau: &UHTau) -> Result<SystemResidual> {
    let bud = SeriesBudget::default();
    let (g2, g3) = g2_g3_lambert(tau, &bud)?;
    let (dg2, dg3) = g2_g3_lambert_dtau(tau, &bud)?;
    let (g2, g3) = (g2.value, g3.value);
    let eta = eta_w(tau, &bud)?.value;
    let de = eta_w_dtau(tau, &bud)?.value;
    let ip = I / PI;
    let rows = vec![
        rel_row(dg2.value, &[ip * 8.0 * g2 * eta, -ip * 12.0 * g3]),
        rel_row(dg3.value, &[ip * 12.0 * g3 * eta, -ip * 2.0 / 3.0 * g2 * g2]),
        rel_row(de, &[ip * 2.0 * eta * eta, -ip * g2 / 6.0]),
    ];
    Ok(SystemResidual::new(SystemId::G2G3Sys, Point::Tau(tau.tau()), rows))
}

// ---- closed derivatives of the constants ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ChainKey {
    Pre(Prefactor),
    /// `D^j eta`
    Eta,
    /// `D^j l_k` with `l_k` the log-derivative of `vartheta_k`
    LogTheta(u8),
    /// chain for `vartheta_k^(-2)`
    InvSquare(u8),
}

fn chain(key: ChainKey, k_max: usize) -> Result<std::sync::Arc<Vec<QPoly>>> {
    static CHAINS: Memo<(ChainKey, usize), Vec<QPoly>> = Memo::new();
    CHAINS.get_or((key, k_max), || {
        Ok(match key {
            ChainKey::Pre(p) => derivative_chain(p, k_max),
            ChainKey::Eta => iterated(&QPoly::var(3, crate::derivation::ETA), k_max),
            ChainKey::LogTheta(k) => iterated(&Prefactor::Vartheta(k).log_derivative(), k_max),
            ChainKey::InvSquare(k) => {
                derivative_chain_log(&Prefactor::Vartheta(k).log_derivative().scale(&rat(-2, 1)), k_max)
            }
        })
    })
}

fn closed_point(tau: &UHTau) -> Result<[C64; 3]> {
    let c = Consts::new(tau)?;
    Ok(point(c.eta, c.v))
}

fn check_vartheta_index(k: u8) -> Result<()> {
    if (2..=4).contains(&k) {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!("vartheta index must be 2..4, got {k}")))
    }
}

/// `d^j P / dtau^j`, `j = 0..=k_max`, from the closed derivation.
pub fn prefactor_derivatives(pre: Prefactor, tau: &UHTau, k_max: usize) -> Result<Vec<C64>> {
    let value = match pre {
        Prefactor::One => ONE,
        Prefactor::EtaCubed => eta_dedekind(tau, &SeriesBudget::default())?.value.powi(3),
        Prefactor::Vartheta(k) => {
            check_vartheta_index(k)?;
            varthetas(tau)?[k as usize - 2]
        }
    };
    let at = closed_point(tau)?;
    let ch = chain(ChainKey::Pre(pre), k_max)?;
    Ok(ch.iter().enumerate().map(|(j, f)| tau_scale(j) * value * f.eval(&at)).collect())
}

/// `d^j eta / dtau^j`, `j = 0..=k_max`, from the closed derivation.
pub fn eta_derivatives(tau: &UHTau, k_max: usize) -> Result<Vec<C64>> {
    let at = closed_point(tau)?;
    let ch = chain(ChainKey::Eta, k_max)?;
    Ok(ch.iter().enumerate().map(|(j, f)| tau_scale(j) * f.eval(&at)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Chazy,
    /// `C = vartheta_k^(-2)`
    JacobiC(u8),
    /// `X = d/dtau ln( vartheta_k((a tau + b)/(c tau + 1)) / sqrt(c tau + 1) )`, `a - b c = 1`
    HalphenX { k: u8, a: i64, b: i64, c: i64 },
    /// `Psi = eta_D^(-2) (a + b int_{2i}^tau eta_D^4)`
    Psi { a: C64, b: C64 },
}

// Truncated Taylor jets in h up to h^3.
type Jet = [C64; 4];

fn jmul(a: &Jet, b: &Jet) -> Jet {
    let mut o = [ZERO; 4];
    for i in 0..4 {
        for j in 0..4 - i {
            o[i + j] += a[i] * b[j];
        }
    }
    o
}

fn halphen_x(k: u8, a: i64, b: i64, c: i64, tau: &UHTau) -> Result<Vec<f64>> {
    if a - b * c != 1 {
        return Err(ThetaError::InvalidArgument(format!("twist ({a},{b},{c}) needs a - b c = 1")));
    }
    let m = [a, b, c, 1].map(|v| C64::new(v as f64, 0.0));
    Ok(vec![halphen_row(&twisted_x_jet(k, m, tau)?)])
}

/// `X = d/dtau ln(vartheta_k(T) / sqrt(c tau + d))` with `T = (a tau + b)/(c tau + d)`
/// and its first three tau-derivatives. The matrix may be complex.
pub(crate) fn twisted_x_jet(k: u8, m: [C64; 4], tau: &UHTau) -> Result<[C64; 4]> {
    check_vartheta_index(k)?;
    let [a, b, c, dd] = m;
    let t = tau.tau();
    let d = c * t + dd;
    let tp = UHTau::new((a * t + b) / d)?;
    let at = closed_point(&tp)?;
    let ch = chain(ChainKey::LogTheta(k), 3)?;
    // Y^(j) at the transformed point
    let y: Vec<C64> = ch.iter().enumerate().map(|(j, f)| tau_scale(j + 1) * f.eval(&at)).collect();
    let w0 = 1.0 / d;
    let r = -c * w0;
    let w: Jet = [w0, w0 * r, w0 * r * r, w0 * r * r * r];
    let delta: Jet = [ZERO, w0 * w0, w0 * w0 * r, w0 * w0 * r * r];
    let mut yj: Jet = [ZERO; 4];
    let mut pw: Jet = [ONE, ZERO, ZERO, ZERO];
    let mut fact = 1.0;
    for (jj, yv) in y.iter().enumerate() {
        if jj > 0 {
            fact *= jj as f64;
            pw = jmul(&pw, &delta);
        }
        for i in 0..4 {
            yj[i] += yv / fact * pw[i];
        }
    }
    let mut xj = jmul(&jmul(&w, &w), &yj);
    for i in 0..4 {
        xj[i] -= c / 2.0 * w[i];
    }
    Ok([xj[0], xj[1], 2.0 * xj[2], 6.0 * xj[3]])
}

/// Halphen's third-order equation for `X`, given `X` and its first three derivatives.
pub(crate) fn halphen_row(x: &[C64; 4]) -> f64 {
    let [x0, x1, x2, x3] = *x;
    scaled(&[
        (x1 - 2.0 * x0 * x0) * x3,
        -x2 * x2,
        16.0 * x0.powi(3) * x2,
        4.0 * (x1 - 6.0 * x0 * x0) * x1 * x1,
    ])
}

fn gauss_legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| {
        let n = 16;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(z);
            weights.push(2.0 / ((1.0 - z * z) * dp * dp));
        }
        (nodes, weights)
    })
}

/// Composite 16-point Gauss rule for `int_{t0}^{t1} f` along the segment.
fn gauss_segment(f: &dyn Fn(C64) -> Result<C64>, t0: C64, t1: C64, panels: usize) -> Result<C64> {
    let (nodes, weights) = gauss_legendre_16();
    let len = t1 - t0;
    let mut s = ZERO;
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let half = 0.5 / panels as f64;
        for (z, w) in nodes.iter().zip(weights) {
            let u = a + half * (z + 1.0);
            s += *w * half * f(t0 + u * len)?;
        }
    }
    Ok(s * len)
}

const PSI_BASE: C64 = C64::new(0.0, 2.0);
const PSI_QUAD_TOL: f64 = 1e-12;

/// `int_{2i}^tau eta_D^4 dtau` along the straight segment.
pub fn eta4_integral(tau: &UHTau) -> Result<C64> {
    let bud = SeriesBudget::default();
    let f = |s: C64| -> Result<C64> { Ok(eta_dedekind(&UHTau::new(s)?, &bud)?.value.powi(4)) };
    let t = tau.tau();
    let len = (t - PSI_BASE).norm();
    if len == 0.0 {
        return Ok(ZERO);
    }
    let mut panels = ((len / 0.25).ceil() as usize).max(2);
    let mut prev = gauss_segment(&f, PSI_BASE, t, panels)?;
    for _ in 0..4 {
        panels *= 2;
        let next = gauss_segment(&f, PSI_BASE, t, panels)?;
        let diff = (next - prev).norm();
        if diff <= PSI_QUAD_TOL * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    let again = gauss_segment(&f, PSI_BASE, t, panels * 2)?;
    Err(ThetaError::QuadratureFailed((again - prev).norm()))
}

fn psi_value(a: C64, b: C64, t: C64) -> Result<C64> {
    let tau = UHTau::new(t)?;
    let e = eta_dedekind(&tau, &SeriesBudget::default())?.value;
    let integral = if b == ZERO { ZERO } else { eta4_integral(&tau)? };
    Ok((a + b * integral) / (e * e))
}

fn psi_rows(a: C64, b: C64, tau: &UHTau) -> Result<Vec<f64>> {
    let t = tau.tau();
    let h = 0.02f64.min(t.im / 4.0);
    let f0 = psi_value(a, b, t)?;
    let second = |h: f64| -> Result<C64> {
        Ok((psi_value(a, b, t + h)? - 2.0 * f0 + psi_value(a, b, t - h)?) / (h * h))
    };
    let d1 = second(h)?;
    let d2 = second(h / 2.0)?;
    let dd = (4.0 * d2 - d1) / 3.0;
    let (g2, _) = g2_g3_lambert(tau, &SeriesBudget::default())?;
    Ok(vec![scaled(&[dd, g2.value / (3.0 * PI * PI) * f0])])
}

/// Residual of one of the scalar equations on the constants.
pub fn residual_scalar(which: Scalar, tau: &UHTau) -> Result<SystemResidual> {
    let (id, rows) = match which {
        Scalar::Chazy => {
            let d = eta_derivatives(tau, 3)?;
            let row = scaled(&[PI * d[3], -24.0 * I * d[0] * d[2], 36.0 * I * d[1] * d[1]]);
            (SystemId::Chazy, vec![row])
        }
        Scalar::JacobiC(k) => {
            check_vartheta_index(k)?;
            let v = varthetas(tau)?[k as usize - 2];
            let cval = 1.0 / (v * v);
            let at = closed_point(tau)?;
            let ch = chain(ChainKey::InvSquare(k), 3)?;
            let c: Vec<C64> = ch.iter().enumerate().map(|(j, f)| tau_scale(j) * cval * f.eval(&at)).collect();
            let l = 3.0 * c[1] / c[0] + c[3] / c[2];
            let row = scaled(&[c[0].powi(4) * l * l, -16.0 * c[0].powi(3) * c[2], C64::new(PI * PI, 0.0)]);
            (SystemId::JacobiC, vec![row])
        }
        Scalar::HalphenX { k, a, b, c } => (SystemId::HalphenX, halphen_x(k, a, b, c, tau)?),
        Scalar::Psi { a, b } => (SystemId::Psi, psi_rows(a, b, tau)?),
    };
    Ok(SystemResidual::new(id, Point::Tau(tau.tau()), rows))
}

// ---- randomized sweep ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    X,
    Tau,
    Var,
    G2G3,
    Scalars,
    Family,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "x" => Suite::X,
            "tau" => Suite::Tau,
            "var" => Suite::Var,
            "g2g3" => Suite::G2G3,
            "scalars" => Suite::Scalars,
            "family" => Suite::Family,
            "all" => Suite::All,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub samples: usize,
    /// Multiplies every default tolerance.
    pub tol_scale: f64,
    pub suites: Vec<Suite>,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    idx: usize,
    x: C64,
    tau: C64,
    fam: (C64, C64, C64),
}

const SWEEP_MIN_IM: f64 = 0.8;
const SWEEP_MAX_X: f64 = 0.6;
const SWEEP_MIN_DIST: f64 = 0.1;
const TWISTS: [(i64, i64, i64); 4] = [(1, 0, 0), (1, 1, 0), (1, 0, 1), (3, 1, 2)];

fn draw(rng: &mut ChaCha8Rng, idx: usize) -> Result<Sample> {
    let tau = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(SWEEP_MIN_IM..2.0));
    let ut = UHTau::new(tau)?;
    let x = loop {
        let r = SWEEP_MAX_X * rng.gen::<f64>().sqrt();
        let x = C64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
        if theta1_zero_distance(x, &ut) >= SWEEP_MIN_DIST {
            break x;
        }
    };
    let fam = loop {
        let a = C64::new(rng.gen_range(-0.3..0.3), 0.0);
        let b = C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2));
        let c = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        if theta1_zero_distance(x + a * tau + b, &ut) >= SWEEP_MIN_DIST {
            break (a, b, c);
        }
    };
    Ok(Sample { idx, x, tau, fam })
}

fn wants(suites: &[Suite], s: Suite) -> bool {
    suites.iter().any(|q| *q == s || *q == Suite::All)
}

fn sample_rows(s: &Sample, suites: &[Suite]) -> Result<Vec<SystemResidual>> {
    let t = UHTau::new(s.tau)?;
    let mut out = Vec::new();
    if wants(suites, Suite::X) {
        out.push(residual_x(s.x, &t)?);
        out.push(residual_diff_rel(s.x, &t)?);
    }
    if wants(suites, Suite::Tau) {
        out.push(residual_tau(s.x, &t)?);
    }
    if wants(suites, Suite::Var) {
        out.push(residual_var(&t)?);
        out.push(residual_last(&t)?);
    }
    if wants(suites, Suite::G2G3) {
        out.push(residual_g2g3(&t)?);
    }
    if wants(suites, Suite::Scalars) {
        out.push(residual_scalar(Scalar::Chazy, &t)?);
        out.push(residual_scalar(Scalar::JacobiC(2 + (s.idx % 3) as u8), &t)?);
        let (a, b, c) = TWISTS[s.idx % TWISTS.len()];
        out.push(residual_scalar(Scalar::HalphenX { k: 2 + ((s.idx / 3) % 3) as u8, a, b, c }, &t)?);
        // the quadrature check is slow; sample it sparsely
        if s.idx % 10 == 0 {
            out.push(residual_scalar(Scalar::Psi { a: s.fam.2, b: s.fam.1 }, &t)?);
        }
    }
    if wants(suites, Suite::Family) {
        let (a, b, c) = s.fam;
        out.push(verify_solution_family(a, b, c, s.x, &t)?);
    }
    Ok(out)
}

/// Evaluate the selected suites at `samples` seeded random points in parallel.
/// Points have `Im tau >= 0.8`, `|x| <= 0.6` and distance at least 0.1 from the
/// zeros of theta_1. Output order is deterministic.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SystemResidual>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = (0..cfg.samples).map(|i| draw(&mut rng, i)).collect::<Result<Vec<_>>>()?;
    let per: Vec<Vec<SystemResidual>> =
        samples.par_iter().map(|s| sample_rows(s, &cfg.suites)).collect::<Result<Vec<_>>>()?;
    Ok(per
        .into_iter()
        .flatten()
        .map(|mut r| {
            r.tol *= cfg.tol_scale;
            r
        })
        .collect())
}
