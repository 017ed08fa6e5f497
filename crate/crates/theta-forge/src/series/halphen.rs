//! The Halphen derivation in its three coordinate systems.
//!
//! Theta-constant coordinates are scaled, `u = (pi^2/12) vartheta[alpha,0]^4`
//! and `v = (pi^2/12) vartheta[0,beta]^4`, which makes every coefficient rational.

use std::f64::consts::PI;

use crate::cx::C64;
use crate::poly::{rat, QPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalphenRep {
    /// Variables `(g2, g3)`.
    G2G3,
    /// Variables `(e, g2)` with `g3 = 4e^3 - g2 e`.
    EG2,
    /// Variables `(u, v)` of the `(alpha, beta) != (0, 0)` representation.
    ThetaAb(i64, i64),
}

fn sign(k: i64) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn check_rep(alpha: i64, beta: i64) {
    assert!(
        alpha.rem_euclid(2) != 0 || beta.rem_euclid(2) != 0,
        "the (0,0) theta representation is degenerate"
    );
}

/// Apply the derivation to a polynomial in the variables of `rep`.
///
/// # Panics
/// For `ThetaAb(0, 0)`.
pub fn halphen_operator_apply(p: &QPoly, rep: HalphenRep) -> QPoly {
    let x = QPoly::var(2, 0);
    let y = QPoly::var(2, 1);
    let (cx, cy) = match rep {
        HalphenRep::G2G3 => (y.scale(&rat(12, 1)), x.pow(2).scale(&rat(2, 3))),
        HalphenRep::EG2 => {
            let ce = &x.pow(2).scale(&rat(4, 1)) - &y.scale(&rat(2, 3));
            let cg = (&x.pow(3).scale(&rat(4, 1)) - &(&y * &x)).scale(&rat(12, 1));
            (ce, cg)
        }
        HalphenRep::ThetaAb(a, b) => {
            check_rep(a, b);
            let (sa, sb) = (sign(a), sign(b));
            let xy = &x * &y;
            let cu = (&x.pow(2).scale(&rat(sb, 1)) + &xy.scale(&rat(2 * sa, 1))).scale(&rat(4, 1));
            let cv = (&y.pow(2).scale(&rat(sa, 1)) + &xy.scale(&rat(2 * sb, 1))).scale(&rat(-4, 1));
            (cu, cv)
        }
    };
    &(&p.deriv(0) * &cx) + &(&p.deriv(1) * &cy)
}

/// Scaled fourth powers `[t2, t3, t4]` as linear forms in `(u, v)`.
pub fn theta_rep_quartics(alpha: i64, beta: i64) -> [QPoly; 3] {
    check_rep(alpha, beta);
    let u = QPoly::var(2, 0);
    let v = QPoly::var(2, 1);
    match (alpha.rem_euclid(2), beta.rem_euclid(2)) {
        (1, 1) => [u.clone(), &u + &v, v],
        (1, 0) => [u.clone(), v.clone(), &v - &u],
        _ => [&u - &v, u, v],
    }
}

/// `(g2, g3)` as polynomials in `(u, v)`.
pub fn theta_rep_invariants(alpha: i64, beta: i64) -> (QPoly, QPoly) {
    check_rep(alpha, beta);
    let u = QPoly::var(2, 0);
    let v = QPoly::var(2, 1);
    let (sa, sb, sab) = (sign(alpha), sign(beta), sign(alpha + beta));
    let uv = &u * &v;
    let g2 = (&(&u.pow(2) + &uv.scale(&rat(sab, 1))) + &v.pow(2)).scale(&rat(12, 1));
    let inner = &v.scale(&rat(sb, 1)) - &u.scale(&rat(sa, 1));
    let g3 = (&(&u.pow(3).scale(&rat(2 * sb, 1)) - &(&uv * &inner).scale(&rat(3, 1)))
        - &v.pow(3).scale(&rat(2 * sa, 1)))
        .scale(&rat(4, 1));
    (g2, g3)
}

/// `e[gamma, delta]` as a polynomial in `(u, v)`.
pub fn theta_rep_e(alpha: i64, beta: i64, gamma: i64, delta: i64) -> QPoly {
    let [t2, t3, t4] = theta_rep_quartics(alpha, beta);
    let t0d = if delta.rem_euclid(2) == 1 { t4 } else { t3.clone() };
    let tg0 = if gamma.rem_euclid(2) == 1 { t2 } else { t3 };
    &t0d.scale(&rat(sign(gamma), 1)) - &tg0.scale(&rat(sign(delta), 1))
}

/// Numerical `(u, v)` from `[vartheta2, vartheta3, vartheta4]`.
pub fn theta_rep_point(alpha: i64, beta: i64, v: [C64; 3]) -> [C64; 2] {
    check_rep(alpha, beta);
    let s = PI * PI / 12.0;
    let a = if alpha.rem_euclid(2) == 1 { v[0] } else { v[1] };
    let b = if beta.rem_euclid(2) == 1 { v[2] } else { v[1] };
    [s * a.powi(4), s * b.powi(4)]
}
