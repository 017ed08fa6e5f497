//! Weierstrass `sigma, zeta, wp, wp'` from theta_1, and their closed
//! derivatives with respect to the periods.
//!
//! The default normalisation has half-periods `(1, tau)`, so
//! `sigma(x|tau) = theta_1(x/2|tau) exp(eta x^2/2) / (pi eta_D^3)`.

use std::f64::consts::PI;

use crate::constants::{eta_dedekind, eta_dedekind_dtau, eta_w, eta_w_dtau, g2_g3_lambert};
use crate::cx::{C64, I, ZERO};
use crate::error::{Result, ThetaError};
use crate::theta::{theta, theta_deriv, theta_dx, SeriesBudget, UHTau};

/// Minimum distance to the period lattice accepted by the pole-sensitive functions.
pub const LATTICE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierstrassPoint {
    pub x: C64,
    pub tau: UHTau,
    pub sigma: C64,
    pub zeta: C64,
    pub wp: C64,
    pub wp_prime: C64,
    pub eta: C64,
    pub g2: C64,
    pub g3: C64,
}

impl WeierstrassPoint {
    /// `|wp'^2 - 4 wp^3 + g2 wp + g3|`, scaled by the size of the terms.
    pub fn cubic_residual(&self) -> f64 {
        let (p, pp) = (self.wp, self.wp_prime);
        let terms = [pp * pp, 4.0 * p * p * p, self.g2 * p, self.g3];
        let scale = 1.0 + terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        (terms[0] - terms[1] + terms[2] + terms[3]).norm() / scale
    }
}

/// `(d/dtau) of (sigma, zeta, wp, wp')` at fixed `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauDerivatives {
    pub dsigma: C64,
    pub dzeta: C64,
    pub dwp: C64,
    pub dwp_prime: C64,
}

/// Distance from `x` to the lattice `2Z + 2 tau Z`.
pub fn lattice_distance(x: C64, tau: &UHTau) -> f64 {
    let t = tau.tau();
    let n = (x.im / (2.0 * t.im)).round();
    let x1 = x - 2.0 * n * t;
    let m = (x1.re / 2.0).round();
    let mut best = f64::INFINITY;
    for dn in -1..=1 {
        for dm in -1..=1 {
            let p = 2.0 * (m + dm as f64) + 2.0 * (n + dn as f64) * t;
            best = best.min((x - p).norm());
        }
    }
    best
}

fn guard(x: C64, tau: &UHTau) -> Result<()> {
    let d = lattice_distance(x, tau);
    if d < LATTICE_GUARD {
        return Err(ThetaError::LatticePole(d));
    }
    Ok(())
}

struct Base {
    eta: C64,
    eta_d: C64,
    g2: C64,
    g3: C64,
}

fn base(tau: &UHTau) -> Result<Base> {
    let b = SeriesBudget::default();
    let (g2, g3) = g2_g3_lambert(tau, &b)?;
    Ok(Base { eta: eta_w(tau, &b)?.value, eta_d: eta_dedekind(tau, &b)?.value, g2: g2.value, g3: g3.value })
}

pub fn sigma_from_theta(x: C64, tau: &UHTau) -> Result<C64> {
    let b = base(tau)?;
    Ok(theta(1, x / 2.0, tau)? * (b.eta * x * x / 2.0).exp() / (PI * b.eta_d.powi(3)))
}

/// `[sigma, sigma', sigma'']` without dividing by theta_1.
pub fn sigma_jet(x: C64, tau: &UHTau) -> Result<[C64; 3]> {
    let b = base(tau)?;
    let y = x / 2.0;
    let t: Vec<C64> = (0..3).map(|k| theta_dx(1, y, tau, k)).collect::<Result<_>>()?;
    let e = (b.eta * x * x / 2.0).exp();
    let (e1, e2) = (b.eta * x * e, (b.eta + b.eta * b.eta * x * x) * e);
    let n = PI * b.eta_d.powi(3);
    Ok([t[0] * e / n, (t[1] / 2.0 * e + t[0] * e1) / n, (t[2] / 4.0 * e + t[1] * e1 + t[0] * e2) / n])
}

/// `sigma_lambda(x|tau) = theta_{lambda+1}(x/2|tau)/vartheta_{lambda+1} exp(eta x^2/2)`, `lambda = 1, 2, 3`.
pub fn sigma_lambda(lambda: u8, x: C64, tau: &UHTau) -> Result<C64> {
    if !(1..=3).contains(&lambda) {
        return Err(ThetaError::InvalidArgument(format!("lambda must be 1, 2 or 3 (got {lambda})")));
    }
    let k = lambda + 1;
    let eta = eta_w(tau, &SeriesBudget::default())?.value;
    Ok(theta(k, x / 2.0, tau)? / theta(k, ZERO, tau)? * (eta * x * x / 2.0).exp())
}

/// Orientation sign and a basis `(omega, +-omega')` with `Im(tau) > 0`.
fn orient(omega: C64, omega_prime: C64) -> Result<(f64, UHTau)> {
    if omega.norm() == 0.0 {
        return Err(ThetaError::DegeneratePeriods);
    }
    let r = omega_prime / omega;
    if r.im.abs() <= 1e-14 * r.norm() {
        return Err(ThetaError::DegeneratePeriods);
    }
    let s = r.im.signum();
    Ok((s, UHTau::new(s * r)?))
}

/// `sigma_lambda(x | omega, omega')` for general half-periods.
pub fn sigma_lambda_periods(lambda: u8, x: C64, omega: C64, omega_prime: C64) -> Result<C64> {
    let (_, t) = orient(omega, omega_prime)?;
    sigma_lambda(lambda, x / omega, &t)
}

pub fn zeta_wp(x: C64, tau: &UHTau) -> Result<WeierstrassPoint> {
    guard(x, tau)?;
    let b = base(tau)?;
    let y = x / 2.0;
    let t = theta(1, y, tau)?;
    let l1 = theta_dx(1, y, tau, 1)? / t;
    let l2 = theta_dx(1, y, tau, 2)? / t;
    let l3 = theta_dx(1, y, tau, 3)? / t;
    let sigma = t * (b.eta * x * x / 2.0).exp() / (PI * b.eta_d.powi(3));
    Ok(WeierstrassPoint {
        x,
        tau: *tau,
        sigma,
        zeta: l1 / 2.0 + b.eta * x,
        wp: -(l2 - l1 * l1) / 4.0 - b.eta,
        wp_prime: -(l3 - 3.0 * l2 * l1 + 2.0 * l1 * l1 * l1) / 8.0,
        eta: b.eta,
        g2: b.g2,
        g3: b.g3,
    })
}

/// Right-hand sides of the tau-system; `g3` does not enter.
pub fn tau_system_rhs(x: C64, sigma: C64, zeta: C64, wp: C64, wp_prime: C64, eta: C64, g2: C64) -> TauDerivatives {
    let k = I / PI;
    let zx = zeta - x * eta;
    TauDerivatives {
        dsigma: k * (wp - zeta * zeta + 2.0 * eta * (x * zeta - 1.0) - g2 * x * x / 12.0) * sigma,
        dzeta: k * (wp_prime + 2.0 * zx * wp + 2.0 * eta * zeta - g2 * x / 6.0),
        dwp: -k * (2.0 * zx * wp_prime + 4.0 * (wp - eta) * wp - 2.0 * g2 / 3.0),
        dwp_prime: -k * (6.0 * (wp - eta) * wp_prime + zx * (12.0 * wp * wp - g2)),
    }
}

/// `d eta/dtau = (i/pi)(2 eta^2 - g2/6)`.
pub fn eta_dtau_closed(eta: C64, g2: C64) -> C64 {
    I / PI * (2.0 * eta * eta - g2 / 6.0)
}

pub fn tau_derivatives(x: C64, tau: &UHTau) -> Result<TauDerivatives> {
    let p = zeta_wp(x, tau)?;
    Ok(tau_system_rhs(x, p.sigma, p.zeta, p.wp, p.wp_prime, p.eta, p.g2))
}

/// Values at `x` for the half-periods `(omega, omega')`, with `eta = zeta(omega)`
/// and `eta'` from the Legendre relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodPoint {
    pub omega: C64,
    pub omega_prime: C64,
    /// Sign of `Im(omega'/omega)`.
    pub orientation: f64,
    pub sigma: C64,
    pub zeta: C64,
    pub wp: C64,
    pub wp_prime: C64,
    pub eta: C64,
    pub eta_prime: C64,
    pub g2: C64,
    pub g3: C64,
}

pub fn weierstrass_periods(x: C64, omega: C64, omega_prime: C64) -> Result<PeriodPoint> {
    let (s, t) = orient(omega, omega_prime)?;
    let p = zeta_wp(x / omega, &t)?;
    let eta = p.eta / omega;
    Ok(PeriodPoint {
        omega,
        omega_prime,
        orientation: s,
        sigma: omega * p.sigma,
        zeta: p.zeta / omega,
        wp: p.wp / omega.powi(2),
        wp_prime: p.wp_prime / omega.powi(3),
        eta,
        eta_prime: (eta * omega_prime - PI * I * s / 2.0) / omega,
        g2: p.g2 / omega.powi(4),
        g3: p.g3 / omega.powi(6),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaDerivatives {
    pub d_omega: TauDerivatives,
    pub d_omega_prime: TauDerivatives,
}

/// The eight closed derivatives with respect to `omega` and `omega'`.
pub fn omega_derivatives(x: C64, omega: C64, omega_prime: C64) -> Result<OmegaDerivatives> {
    let p = weierstrass_periods(x, omega, omega_prime)?;
    let k = I / PI * p.orientation;
    let (s, z, w, wd, g2) = (p.sigma, p.zeta, p.wp, p.wp_prime, p.g2);
    // the two rows differ by (omega, eta) <-> (omega', eta') and an overall sign
    let row = |om: C64, et: C64, sgn: f64| {
        let zx = om * z - x * et;
        TauDerivatives {
            dsigma: sgn * k * (om * (w - z * z - g2 * x * x / 12.0) + 2.0 * et * (x * z - 1.0)) * s,
            dzeta: sgn * k * (2.0 * zx * w + om * (wd - x * g2 / 6.0) + 2.0 * et * z),
            dwp: -sgn * k * (2.0 * zx * wd + 4.0 * (om * w - et) * w - 2.0 * om * g2 / 3.0),
            dwp_prime: -sgn * k * (6.0 * (om * w - et) * wd + zx * (12.0 * w * w - g2)),
        }
    };
    Ok(OmegaDerivatives { d_omega: row(p.omega_prime, p.eta_prime, -1.0), d_omega_prime: row(p.omega, p.eta, 1.0) })
}

/// Residual of `pi i sigma_tau = sigma_xx - 2 x eta sigma_x + (2 eta + g2 x^2/12) sigma`,
/// relative to the largest term. The tau-derivative is term-wise from the q-series.
pub fn sigma_heat_residual(x: C64, tau: &UHTau) -> Result<f64> {
    if x == ZERO {
        // every term is odd in x
        return Ok(0.0);
    }
    let b = base(tau)?;
    let bud = SeriesBudget::default();
    let [s, s1, s2] = sigma_jet(x, tau)?;
    let y = x / 2.0;
    let e = (b.eta * x * x / 2.0).exp();
    let n = PI * b.eta_d.powi(3);
    let deta = eta_w_dtau(tau, &bud)?.value;
    let ded = eta_dedekind_dtau(tau)?;
    let st = (theta_deriv(1, y, tau, 0, 1)? * e + theta(1, y, tau)? * e * deta * x * x / 2.0) / n
        - 3.0 * s * ded / b.eta_d;
    let terms = [PI * I * st, s2, 2.0 * x * b.eta * s1, (2.0 * b.eta + b.g2 * x * x / 12.0) * s];
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    Ok((terms[0] - terms[1] + terms[2] - terms[3]).norm() / scale.max(f64::MIN_POSITIVE))
}

// Z = zeta - x eta and its closed tau-derivative.
fn z_and_dz(x: C64, tau: &UHTau) -> Result<(WeierstrassPoint, C64, C64)> {
    let p = zeta_wp(x, tau)?;
    let d = tau_system_rhs(x, p.sigma, p.zeta, p.wp, p.wp_prime, p.eta, p.g2);
    Ok((p, p.zeta - x * p.eta, d.dzeta - x * eta_dtau_closed(p.eta, p.g2)))
}

/// Scaled residuals of the two polynomial relations satisfied by `Z = zeta - x eta`.
///
/// The first uses closed first derivatives only; the second needs `Z_tautau`,
/// taken as one Richardson-extrapolated central difference of the closed `Z_tau`.
pub fn z_relations_residual(x: C64, tau: &UHTau) -> Result<(f64, f64)> {
    let (p, z, zt) = z_and_dz(x, tau)?;
    if z.norm() < 1e-10 * (1.0 + p.zeta.norm()) {
        return Err(ThetaError::ZVanishes);
    }
    let (w, eta, g2, g3) = (p.wp, p.eta, p.g2, p.g3);
    let lhs1 = (PI * I * zt + 2.0 * (w + eta) * z).powi(2);
    let rhs_terms = [4.0 * w * w * w, g2 * w, g3];
    let r1 = (lhs1 - rhs_terms[0] + rhs_terms[1] + rhs_terms[2]).norm()
        / (1.0 + lhs1.norm() + rhs_terms.iter().map(|t| t.norm()).sum::<f64>());

    let h = 1e-4 * tau.tau().norm().max(1.0);
    let dz_at = |dt: f64| -> Result<C64> { Ok(z_and_dz(x, &UHTau::new(tau.tau() + dt)?)?.2) };
    let central = |h: f64| -> Result<C64> { Ok((dz_at(h)? - dz_at(-h)?) / (2.0 * h)) };
    let ztt = (4.0 * central(h / 2.0)? - central(h)?) / 3.0;
    let lhs2 = -PI * PI / 8.0 * ztt / z;
    let parts = [
        PI * I / 2.0 * (z * z + w - 2.0 * eta) * zt / z,
        (w + eta) * z * z,
        -w * w,
        eta * w,
        -eta * eta,
        g2 / 4.0,
    ];
    let rhs2: C64 = parts.iter().sum();
    let r2 = (lhs2 - rhs2).norm() / (1.0 + lhs2.norm() + parts.iter().map(|t| t.norm()).sum::<f64>());
    Ok((r1, r2))
}
