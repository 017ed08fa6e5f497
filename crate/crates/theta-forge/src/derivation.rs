//! The closed tau-derivation on the ring generated by the Weierstrass eta
//! constant and the fourth powers of the theta constants.
//!
//! Variables are `[eta, u, v]` with `u = (pi^2/12) vartheta2^4` and
//! `v = (pi^2/12) vartheta4^4`, so that `(pi^2/12) vartheta3^4 = u + v`.
//! In these variables `D = (pi/i) d/dtau` has integer coefficients:
//!
//! ```text
//! D eta = 2 eta^2 - 2u^2 - 2uv - 2v^2
//! D u   = 4u (eta + u + 2v)
//! D v   = 4v (eta - 2u - v)
//! ```

use std::f64::consts::PI;

use num_rational::BigRational;

use crate::cx::{C64, I};
use crate::poly::{rat, Poly, QPoly};

pub const ETA: usize = 0;
pub const U: usize = 1;
pub const V: usize = 2;

fn var(i: usize) -> QPoly {
    QPoly::var(3, i)
}

fn int(c: i64) -> QPoly {
    QPoly::constant(3, rat(c, 1))
}

/// The images `D eta`, `D u`, `D v`.
pub fn generator_images() -> [QPoly; 3] {
    let (e, u, v) = (var(ETA), var(U), var(V));
    let deta = &(&e * &e).scale(&rat(2, 1)) - &(&(&(&u * &u) + &(&u * &v)) + &(&v * &v)).scale(&rat(2, 1));
    let du = (&u * &(&(&e + &u) + &v.scale(&rat(2, 1)))).scale(&rat(4, 1));
    let dv = (&v * &(&(&e - &u.scale(&rat(2, 1))) - &v)).scale(&rat(4, 1));
    [deta, du, dv]
}

/// Apply `D` to a polynomial in `[eta, u, v]`.
pub fn derive(p: &QPoly) -> QPoly {
    let imgs = generator_images();
    let mut out = QPoly::zero(3);
    for (i, img) in imgs.iter().enumerate() {
        let d = p.deriv(i);
        if !d.is_zero() {
            out = &out + &(&d * img);
        }
    }
    out
}

/// A quantity `P * f` with `D P = l P`; `D` acts as `f -> l f + D f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prefactor {
    One,
    /// `eta_D^3`
    EtaCubed,
    /// `vartheta_k`, k = 2, 3, 4
    Vartheta(u8),
}

impl Prefactor {
    /// Logarithmic derivative `l`.
    pub fn log_derivative(self) -> QPoly {
        let (e, u, v) = (var(ETA), var(U), var(V));
        match self {
            Prefactor::One => QPoly::zero(3),
            Prefactor::EtaCubed => e.scale(&rat(3, 1)),
            Prefactor::Vartheta(2) => &(&e + &u) + &v.scale(&rat(2, 1)),
            Prefactor::Vartheta(3) => &(&e + &u) - &v,
            Prefactor::Vartheta(4) => &(&e - &u.scale(&rat(2, 1))) - &v,
            Prefactor::Vartheta(k) => panic!("no vartheta_{k}"),
        }
    }
}

/// `f_0 = 1, f_{k+1} = l f_k + D f_k`, so that
/// `d^k (P)/dtau^k = (i/pi)^k P f_k`.
pub fn derivative_chain(pre: Prefactor, k_max: usize) -> Vec<QPoly> {
    derivative_chain_log(&pre.log_derivative(), k_max)
}

/// Same as [`derivative_chain`] for any prefactor with `D P = l P`,
/// e.g. `l = -2 l_3` for `vartheta_3^(-2)`.
pub fn derivative_chain_log(l: &QPoly, k_max: usize) -> Vec<QPoly> {
    let mut out = vec![int(1)];
    for k in 0..k_max {
        let f = &out[k];
        out.push(&(l * f) + &derive(f));
    }
    out
}

/// `D^j p` for `j = 0..=k_max`.
pub fn iterated(p: &QPoly, k_max: usize) -> Vec<QPoly> {
    let mut out = vec![p.clone()];
    for k in 0..k_max {
        let next = derive(&out[k]);
        out.push(next);
    }
    out
}

/// Numerical values of `[eta, u, v]` from `eta` and `[vartheta2, vartheta3, vartheta4]`.
pub fn point(eta: C64, v: [C64; 3]) -> [C64; 3] {
    let s = PI * PI / 12.0;
    [eta, s * v[0].powi(4), s * v[2].powi(4)]
}

/// `(i/pi)^k`.
pub fn tau_scale(k: usize) -> C64 {
    (I / PI).powi(k as i32)
}

/// Exact weight of a homogeneous chain element (eta, u, v all weight 1).
pub fn weight(p: &Poly<BigRational>) -> Option<u32> {
    p.weighted_degree(&[1, 1, 1])
}
