//! Modular transformations of theta functions and the Dedekind eta,
//! with the eighth-root multiplier kept as an exact integer exponent.

use std::f64::consts::PI;

use crate::constants::eta_dedekind;
use crate::cx::{eighth_root, root24, C64, I, ZERO};
use crate::error::{Result, ThetaError};
use crate::theta::{theta, theta_ch, varthetas, SeriesBudget, ThetaChar, UHTau};

/// An element of PSL2(Z), stored with `c > 0` or `c = 0, d = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModMap {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl ModMap {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if (a as i128) * (d as i128) - (b as i128) * (c as i128) != 1 {
            return Err(ThetaError::InvalidArgument(format!("det({a},{b};{c},{d}) != 1")));
        }
        let flip = c < 0 || (c == 0 && d < 0);
        Ok(if flip { ModMap { a: -a, b: -b, c: -c, d: -d } } else { ModMap { a, b, c, d } })
    }

    pub const fn identity() -> Self {
        ModMap { a: 1, b: 0, c: 0, d: 1 }
    }

    /// `tau -> tau + n`.
    pub const fn t(n: i64) -> Self {
        ModMap { a: 1, b: n, c: 0, d: 1 }
    }

    /// `tau -> -1/tau`.
    pub const fn s() -> Self {
        ModMap { a: 0, b: -1, c: 1, d: 0 }
    }

    pub fn entries(&self) -> (i64, i64, i64, i64) {
        (self.a, self.b, self.c, self.d)
    }

    /// Matrix product `self * other`: apply `other` first.
    pub fn compose(&self, other: &ModMap) -> ModMap {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        ModMap::new(a, b, c, d).expect("product of unimodular maps")
    }

    pub fn inverse(&self) -> ModMap {
        ModMap::new(self.d, -self.b, -self.c, self.a).expect("inverse is unimodular")
    }

    pub fn apply(&self, tau: C64) -> C64 {
        (self.a as f64 * tau + self.b as f64) / (self.c as f64 * tau + self.d as f64)
    }

    /// `c tau + d`.
    pub fn j_factor(&self, tau: C64) -> C64 {
        self.c as f64 * tau + self.d as f64
    }

    /// Characteristic transport: the reduced target of `ch` and the reduction sign.
    pub fn transport(&self, ch: ThetaChar) -> (ThetaChar, f64) {
        let (r, _) = ch.reduce();
        let (al, be) = (r.alpha + 1, r.beta + 1);
        let at = self.d * al - self.c * be;
        let bt = -self.b * al + self.a * be;
        ThetaChar::new(at - 1, bt - 1).reduce()
    }
}

/// `exp(pi i k / 4)` stored as `k mod 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplier8 {
    pub exponent: u8,
}

impl Multiplier8 {
    pub fn value(&self) -> C64 {
        eighth_root(self.exponent as i64)
    }

    pub fn mul(self, other: Multiplier8) -> Multiplier8 {
        Multiplier8 { exponent: (self.exponent + other.exponent) % 8 }
    }
}

/// `exp(pi i k / 12)` stored as `k mod 24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplier24 {
    pub exponent: u8,
}

impl Multiplier24 {
    pub fn value(&self) -> C64 {
        root24(self.exponent as i64)
    }

    /// The cube, which is the theta_1 multiplier.
    pub fn cube(self) -> Multiplier8 {
        Multiplier8 { exponent: self.exponent % 8 }
    }
}

// 12c times the bracket of the multiplier exponent; exact for c > 0.
// sgn(0) counts as +1 and [.] truncates toward zero.
fn exponent_numerator(m: &ModMap) -> i128 {
    let (a, _, c, d) = (m.a as i128, m.b as i128, m.c as i128, m.d as i128);
    let sgn = if d < 0 { -1 } else { 1 };
    let mut s: i128 = 0;
    for k in 1..c {
        s += k * ((d * k) / c);
    }
    (a - d) - 2 * d * c * (2 * c - 3) + 3 * c * (c - 1) * sgn - 3 * c + 12 * s
}

fn exponent_over_c(m: &ModMap) -> i128 {
    let num = exponent_numerator(m);
    let c = m.c as i128;
    assert!(num % c == 0, "multiplier exponent not integral for {m:?}");
    num / c
}

/// The eighth root of unity in the theta_1 law.
pub fn multiplier_epsilon(m: &ModMap) -> Multiplier8 {
    if m.c == 0 {
        return Multiplier8 { exponent: m.b.rem_euclid(8) as u8 };
    }
    Multiplier8 { exponent: exponent_over_c(m).rem_euclid(8) as u8 }
}

/// The 24th root of unity in the Dedekind eta law.
pub fn eta_multiplier(m: &ModMap) -> Multiplier24 {
    if m.c == 0 {
        return Multiplier24 { exponent: m.b.rem_euclid(24) as u8 };
    }
    Multiplier24 { exponent: exponent_over_c(m).rem_euclid(24) as u8 }
}

/// `theta_1(x/(c tau+d) | M tau)` from the right-hand side of the law.
pub fn transform_theta1(m: &ModMap, x: C64, tau: &UHTau) -> Result<C64> {
    let j = m.j_factor(tau.tau());
    let eps = multiplier_epsilon(m).value();
    Ok(eps * j.sqrt() * (PI * I * m.c as f64 * x * x / j).exp() * theta(1, x, tau)?)
}

/// `theta[new](x/(c tau+d) | M tau)` from `theta[ch](x | tau)`; returns `(value, new)`.
pub fn transform_theta_ab(m: &ModMap, ch: ThetaChar, x: C64, tau: &UHTau) -> Result<(C64, ThetaChar)> {
    let (r, _) = ch.reduce();
    let (nc, s) = m.transport(r);
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let (al, be) = (r.alpha + 1, r.beta + 1);
    let p = 2 * al * (b * c * be - d + 1) - c * be * (a * be - 2) - d * b * al * al;
    let j = m.j_factor(tau.tau());
    let eps = multiplier_epsilon(m);
    let phase = eighth_root((eps.exponent as i64 + p).rem_euclid(8));
    let value = s * phase * j.sqrt() * (PI * I * c as f64 * x * x / j).exp() * theta_ch(r, x, tau)?;
    Ok((value, nc))
}

/// `eta_D(M tau)` from `eta_D(tau)`.
pub fn transform_eta(m: &ModMap, tau: &UHTau) -> Result<C64> {
    let e = eta_dedekind(tau, &SeriesBudget::default())?.value;
    Ok(eta_multiplier(m).value() * m.j_factor(tau.tau()).sqrt() * e)
}

/// `vartheta[new](M tau)` at `x = 0`.
pub fn transform_vartheta(m: &ModMap, ch: ThetaChar, tau: &UHTau) -> Result<(C64, ThetaChar)> {
    transform_theta_ab(m, ch, ZERO, tau)
}

// Squares of theta_k at one argument, k = 1..4 in slots 0..3.
fn squares(x: C64, tau: &UHTau) -> Result<[C64; 4]> {
    let mut out = [ZERO; 4];
    for k in 1..=4u8 {
        out[k as usize - 1] = theta(k, x, tau)?.powi(2);
    }
    Ok(out)
}

/// `theta_k(n x)` for integer `n >= 0` from the duplication rule and the
/// three-term recurrences, using only functions at `x`.
pub fn multiply_argument(k: u8, n: u32, x: C64, tau: &UHTau) -> Result<C64> {
    if !(1..=4).contains(&k) {
        return Err(ThetaError::InvalidArgument(format!("theta index {k}")));
    }
    let [v2, v3, v4] = varthetas(tau)?;
    let base = [theta(1, x, tau)?, theta(2, x, tau)?, theta(3, x, tau)?, theta(4, x, tau)?];
    let sq: Vec<C64> = base.iter().map(|t| t * t).collect();
    let mut rows: Vec<[C64; 4]> = vec![[ZERO, v2, v3, v4], base];
    let tiny = 1e-13;
    for j in 2..=n as usize {
        let prev = rows[j - 1];
        let back = rows[j - 2];
        let p2: Vec<C64> = prev.iter().map(|t| t * t).collect();
        let guard = |v: C64| -> Result<C64> {
            if v.norm() < tiny {
                Err(ThetaError::ZeroDenominator(j as u32))
            } else {
                Ok(v)
            }
        };
        let t1 = if j == 2 {
            2.0 * base[0] * base[1] * base[2] * base[3] / (v2 * v3 * v4)
        } else {
            (p2[2] * sq[1] - p2[1] * sq[2]) / (v4 * v4 * guard(back[0])?)
        };
        let t2 = (p2[2] * sq[2] - p2[3] * sq[3]) / (v2 * v2 * guard(back[1])?);
        let t3 = (p2[1] * sq[1] + p2[3] * sq[3]) / (v3 * v3 * guard(back[2])?);
        let t4 = (p2[2] * sq[2] - p2[1] * sq[1]) / (v4 * v4 * guard(back[3])?);
        rows.push([t1, t2, t3, t4]);
    }
    Ok(rows[n as usize][k as usize - 1])
}

/// Residual of the three-term multiplication identity for `theta_k` at a
/// complex multiplier `n`, every factor taken from the q-series.
pub fn multiplication_identity_residual(k: u8, n: C64, x: C64, tau: &UHTau) -> Result<f64> {
    let [v2, v3, v4] = varthetas(tau)?;
    let s = squares(x, tau)?;
    let sp = squares((n - 1.0) * x, tau)?;
    let lhs = theta(k, n * x, tau)? * theta(k, (n - 2.0) * x, tau)?;
    let rhs = match k {
        1 => (sp[2] * s[1] - sp[1] * s[2]) / (v4 * v4),
        2 => (sp[2] * s[2] - sp[3] * s[3]) / (v2 * v2),
        3 => (sp[1] * s[1] + sp[3] * s[3]) / (v3 * v3),
        4 => (sp[2] * s[2] - sp[1] * s[1]) / (v4 * v4),
        _ => return Err(ThetaError::InvalidArgument(format!("theta index {k}"))),
    };
    Ok((lhs - rhs).norm())
}
