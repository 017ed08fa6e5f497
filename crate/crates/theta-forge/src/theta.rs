//! Jacobi theta functions straight from the defining q-series.
//!
//! Convention: `theta[a,b](x|tau) = sum_k exp(pi i (k+a/2)^2 tau + 2 pi i (k+a/2)(x+b/2))`,
//! with `theta_1 = -theta[1,1]`, `theta_2 = theta[1,0]`, `theta_3 = theta[0,0]`,
//! `theta_4 = theta[0,1]`. The x-period is 1 and the quasi-period is tau.

use std::f64::consts::PI;

use crate::constants;
use crate::cx::{ipow, sgn_pow, C64, I, ZERO};
use crate::error::{Result, ThetaError};

/// A point of the open upper half-plane together with its nome `q = exp(pi i tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UHTau {
    tau: C64,
    q: C64,
    im: f64,
}

impl UHTau {
    pub fn new(tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(ThetaError::InvalidTau(tau.im));
        }
        Ok(UHTau { tau, q: (I * PI * tau).exp(), im: tau.im })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn im(&self) -> f64 {
        self.im
    }
}

/// Integer characteristic `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThetaChar {
    pub alpha: i64,
    pub beta: i64,
}

impl ThetaChar {
    pub const fn new(alpha: i64, beta: i64) -> Self {
        ThetaChar { alpha, beta }
    }

    /// Reduce into `{0,1}^2`; `theta[self] = sign * theta[reduced]`.
    pub fn reduce(self) -> (ThetaChar, f64) {
        let a = self.alpha.rem_euclid(2);
        let b = self.beta.rem_euclid(2);
        let n = (self.beta - b) / 2;
        (ThetaChar::new(a, b), sgn_pow(a * n))
    }

    /// 0 for the odd function (`±theta_1`), 1 otherwise.
    pub fn parity(self) -> u8 {
        if (self.alpha * self.beta).rem_euclid(2) == 1 {
            0
        } else {
            1
        }
    }

    /// The characteristic of `theta_k` and the sign with `theta_k = sign * theta[char]`.
    pub fn of_index(k: u8) -> (ThetaChar, f64) {
        match k {
            1 => (ThetaChar::new(1, 1), -1.0),
            2 => (ThetaChar::new(1, 0), 1.0),
            3 => (ThetaChar::new(0, 0), 1.0),
            4 => (ThetaChar::new(0, 1), 1.0),
            _ => panic!("theta index must be 1..4, got {k}"),
        }
    }

    /// Inverse of [`ThetaChar::of_index`] for reduced characteristics.
    pub fn index(self) -> (u8, f64) {
        let (r, s) = self.reduce();
        match (r.alpha, r.beta) {
            (1, 1) => (1, -s),
            (1, 0) => (2, s),
            (0, 0) => (3, s),
            _ => (4, s),
        }
    }
}

/// Tolerance and term cap for a q-series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBudget {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl SeriesBudget {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || max_terms < 8 {
            return Err(ThetaError::InvalidArgument(format!(
                "budget needs abs_tol > 0 and max_terms >= 8 (got {abs_tol}, {max_terms})"
            )));
        }
        Ok(SeriesBudget { abs_tol, max_terms })
    }
}

impl Default for SeriesBudget {
    fn default() -> Self {
        SeriesBudget { abs_tol: 1e-16, max_terms: 400 }
    }
}

/// A value with its a-posteriori error bound.
///
/// `tail` is the rigorous truncation bound; `bound` adds a floating-point
/// rounding estimate on top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub bound: f64,
    pub tail: f64,
    pub terms: usize,
}

impl Estimate {
    pub fn exact(value: C64) -> Self {
        Estimate { value, bound: 0.0, tail: 0.0, terms: 0 }
    }
}

/// The `(k, nu, mu)` index table for the logarithmic-derivative relations
/// `theta_nu'/theta_nu - theta_mu'/theta_mu = sign(nu-mu) pi vartheta_k^2 theta_1 theta_k/(theta_nu theta_mu)`.
/// Obtained from `nu = (8k-28)/(3k-10)`, `mu = (10k-28)/(3k-8)`.
pub const DIFF_TABLE: [(u8, u8, u8); 3] = [(2, 3, 4), (3, 4, 2), (4, 2, 3)];

// Bound for a one-sided tail starting at |n| = u0.
fn side_tail(u0: f64, im_tau: f64, im_x: f64, poly: i32, scale: f64) -> Option<f64> {
    let ratio = ((u0 + 1.0) / u0).powi(poly) * (-PI * im_tau * (2.0 * u0 + 1.0) + 2.0 * PI * im_x).exp();
    if ratio >= 1.0 {
        return None;
    }
    let first = scale * u0.powi(poly) * (-PI * im_tau * u0 * u0 + 2.0 * PI * u0 * im_x).exp();
    Some(first / (1.0 - ratio))
}

/// Term-wise `d^p/dx^p d^r/dtau^r theta[ch](x|tau)`.
///
/// Re tau is reduced mod 2 and Re x mod 2 internally; both are exact identities
/// of the reduced series.
pub fn theta_char_deriv_q(
    ch: ThetaChar,
    x: C64,
    tau: &UHTau,
    p: u32,
    r: u32,
    budget: &SeriesBudget,
) -> Result<Estimate> {
    let (rc, sign) = ch.reduce();
    let alpha = rc.alpha;
    let half_a = alpha as f64 / 2.0;
    let shift_t = (tau.tau.re / 2.0).round();
    let t = tau.tau - 2.0 * shift_t;
    let xr = x - 2.0 * (x.re / 2.0).round();
    let xb = xr + rc.beta as f64 / 2.0;
    let im_x = x.im.abs();

    // |d/dx| -> 2 pi |n|, |d/dtau| -> pi n^2
    let poly = (p + 2 * r) as i32;
    let scale = (2.0 * PI).powi(p as i32) * PI.powi(r as i32);
    let dx_fac = 2.0 * PI * I;
    let dt_fac = PI * I;

    let term = |n: f64| -> C64 {
        let e = (I * PI * n * n * t + dx_fac * n * xb).exp();
        let mut f = e;
        if p > 0 {
            f *= (dx_fac * n).powu(p);
        }
        if r > 0 {
            f *= (dt_fac * n * n).powu(r);
        }
        f
    };

    let mut sum = ZERO;
    let mut abs_sum = 0.0;
    let mut k: usize = 0;
    loop {
        let kf = k as f64;
        let t1 = term(kf + half_a);
        sum += t1;
        abs_sum += t1.norm();
        if k > 0 {
            let t2 = term(-kf + half_a);
            sum += t2;
            abs_sum += t2.norm();
        }
        let right = side_tail(kf + 1.0 + half_a, t.im, im_x, poly, scale);
        let left = side_tail(kf + 1.0 - half_a, t.im, im_x, poly, scale);
        if let (Some(a), Some(b)) = (right, left) {
            let tail = a + b;
            if tail <= budget.abs_tol {
                let mut value = sum * sign;
                if alpha == 1 {
                    value *= ipow(shift_t as i64);
                }
                let rounding = 4.0 * f64::EPSILON * abs_sum;
                return Ok(Estimate { value, bound: tail + rounding, tail, terms: 2 * k + 1 });
            }
            if k >= budget.max_terms {
                return Err(ThetaError::TailNotConverged { terms: 2 * k + 1, bound: tail });
            }
        } else if k >= budget.max_terms {
            return Err(ThetaError::TailNotConverged { terms: 2 * k + 1, bound: f64::INFINITY });
        }
        k += 1;
    }
}

/// `theta[ch](x|tau)` from the q-series.
pub fn theta_char_q(ch: ThetaChar, x: C64, tau: &UHTau, budget: &SeriesBudget) -> Result<Estimate> {
    theta_char_deriv_q(ch, x, tau, 0, 0, budget)
}

/// `theta_k(x|tau)`, k = 1..4.
pub fn theta_q(k: u8, x: C64, tau: &UHTau, budget: &SeriesBudget) -> Result<Estimate> {
    theta_dx_q(k, x, tau, 0, budget)
}

/// x-derivative of `theta_k` of the given order (0 allowed).
pub fn theta_dx_q(k: u8, x: C64, tau: &UHTau, order: u32, budget: &SeriesBudget) -> Result<Estimate> {
    let (ch, s) = ThetaChar::of_index(k);
    let mut e = theta_char_deriv_q(ch, x, tau, order, 0, budget)?;
    e.value *= s;
    Ok(e)
}

/// Mixed derivative `d^p/dx^p d^r/dtau^r theta_k`.
pub fn theta_deriv_q(k: u8, x: C64, tau: &UHTau, p: u32, r: u32, budget: &SeriesBudget) -> Result<Estimate> {
    let (ch, s) = ThetaChar::of_index(k);
    let mut e = theta_char_deriv_q(ch, x, tau, p, r, budget)?;
    e.value *= s;
    Ok(e)
}

/// `theta_k(x|tau)` with the default budget.
pub fn theta(k: u8, x: C64, tau: &UHTau) -> Result<C64> {
    Ok(theta_q(k, x, tau, &SeriesBudget::default())?.value)
}

/// x-derivative of `theta_k` with the default budget.
pub fn theta_dx(k: u8, x: C64, tau: &UHTau, order: u32) -> Result<C64> {
    Ok(theta_dx_q(k, x, tau, order, &SeriesBudget::default())?.value)
}

/// Mixed derivative with the default budget.
pub fn theta_deriv(k: u8, x: C64, tau: &UHTau, p: u32, r: u32) -> Result<C64> {
    Ok(theta_deriv_q(k, x, tau, p, r, &SeriesBudget::default())?.value)
}

/// `theta[ch](x|tau)` with the default budget.
pub fn theta_ch(ch: ThetaChar, x: C64, tau: &UHTau) -> Result<C64> {
    Ok(theta_char_q(ch, x, tau, &SeriesBudget::default())?.value)
}

/// x-derivative of `theta[ch]` with the default budget.
pub fn theta_ch_dx(ch: ThetaChar, x: C64, tau: &UHTau, order: u32) -> Result<C64> {
    Ok(theta_char_deriv_q(ch, x, tau, order, 0, &SeriesBudget::default())?.value)
}

/// `(vartheta_2, vartheta_3, vartheta_4)`.
pub fn varthetas(tau: &UHTau) -> Result<[C64; 3]> {
    let z = ZERO;
    Ok([theta(2, z, tau)?, theta(3, z, tau)?, theta(4, z, tau)?])
}

/// Value of `theta[ch]` at a zero argument, i.e. the constant `vartheta[ch]`.
pub fn vartheta_ch(ch: ThetaChar, tau: &UHTau) -> Result<C64> {
    theta_ch(ch, ZERO, tau)
}

/// Half-period shift: `theta[ch](x + n/2 + m tau/2) = prefactor * theta[new](x)`.
pub fn shift_half_periods(ch: ThetaChar, n: i64, m: i64, x: C64, tau: &UHTau) -> (ThetaChar, C64) {
    if n == 0 && m == 0 {
        return (ch, C64::new(1.0, 0.0));
    }
    let moved = ThetaChar::new(ch.alpha + m, ch.beta + n);
    let (nc, s) = moved.reduce();
    let mf = m as f64;
    let phase = (-I * PI / 4.0 * mf * (4.0 * x + mf * tau.tau)).exp();
    (nc, ipow(-(ch.beta + n) * m) * s * phase)
}

/// Reduce x into the cell `|Re| <= 1/2`, `|Im| <= Im tau / 2` by whole periods.
///
/// Returns `(x_red, p, q, prefactor)` with `x = x_red + p + q tau` and
/// `theta[ch](x) = prefactor * theta[reduce(ch)](x_red)`.
pub fn reduce_x(ch: ThetaChar, x: C64, tau: &UHTau) -> (C64, i64, i64, C64) {
    let q = (x.im / tau.im).round() as i64;
    let x1 = x - q as f64 * tau.tau;
    let p = x1.re.round() as i64;
    let xr = x1 - p as f64;
    let (_, s0) = ch.reduce();
    let (_, pref) = shift_half_periods(ch.reduce().0, 2 * p, 2 * q, xr, tau);
    (xr, p, q, pref * s0)
}

/// `d/dx theta[ch]` at `x + n/2 + m tau/2`, expressed through unshifted functions at x.
pub fn theta_dx_shifted(ch: ThetaChar, n: i64, m: i64, x: C64, tau: &UHTau) -> Result<C64> {
    let (rc, s) = ch.reduce();
    let (a, b) = (rc.alpha, rc.beta);
    let t1 = theta(1, x, tau)?;
    if t1.norm() < 1e-13 {
        return Err(ThetaError::PoleAtLatticePoint(t1.norm()));
    }
    let t1p = theta_dx(1, x, tau, 1)?;
    let mf = m as f64;
    let am = a + m;
    let bn = b + n;
    let main = (t1p - PI * I * mf * t1) * theta_ch(ThetaChar::new(am, bn), x, tau)?;
    let bracket_sign = sgn_pow(am * bn.div_euclid(2));
    let vt = vartheta_ch(ThetaChar::new(am, bn), tau)?;
    let extra = bracket_sign
        * PI
        * vt
        * vt
        * theta_ch(ThetaChar::new(1 - a - m, 0), x, tau)?
        * theta_ch(ThetaChar::new(0, 1 - b - n), x, tau)?;
    let pref = ipow(3 * m * bn) * (-I * PI / 4.0 * mf * (4.0 * x + mf * tau.tau)).exp();
    Ok(s * pref * (main - extra) / t1)
}

/// Closed value of `theta[ch]'` at the half-period `(n + m tau)/2`.
pub fn theta_const_dx_shifted(ch: ThetaChar, n: i64, m: i64, tau: &UHTau) -> Result<C64> {
    let (rc, s) = ch.reduce();
    let (a, b) = (rc.alpha, rc.beta);
    let eta = constants::eta_dedekind(tau, &SeriesBudget::default())?.value;
    let bn = b + n;
    let am = a + m;
    let odd = 1.0 - sgn_pow(am * bn);
    let vt = vartheta_ch(ThetaChar::new(am, bn), tau)?;
    let mf = m as f64;
    let inner = ipow(bn) * odd * eta.powi(3) - mf * vt;
    Ok(s * ipow(1 - bn * m) * PI * inner * (-I * PI * mf * mf * tau.tau / 4.0).exp())
}
