//! Complete elliptic integrals in the parameter convention `K(m)`, `m = k^2`,
//! via the arithmetic-geometric mean.

use std::f64::consts::PI;

use crate::cx::{C64, ONE};
use crate::error::{Result, ThetaError};

// AGM with the "right" sqrt choice at every step, plus the sum used for E.
fn agm_with_sum(a0: C64, b0: C64, c0sq: C64) -> Result<(C64, C64)> {
    let mut a = a0;
    let mut b = b0;
    let mut sum = c0sq * 0.5;
    let mut pow = 0.5;
    for _ in 0..64 {
        let an = (a + b) * 0.5;
        let mut bn = (a * b).sqrt();
        if (an - bn).norm() > (an + bn).norm() {
            bn = -bn;
        }
        let cn = (a - b) * 0.5;
        pow *= 2.0;
        sum += cn * cn * pow;
        a = an;
        b = bn;
        if (a - b).norm() <= 4.0 * f64::EPSILON * a.norm() {
            return Ok((a, sum));
        }
    }
    Err(ThetaError::NoConvergence("AGM".into()))
}

/// Arithmetic-geometric mean of `a` and `b`.
pub fn agm(a: C64, b: C64) -> Result<C64> {
    Ok(agm_with_sum(a, b, C64::new(0.0, 0.0))?.0)
}

/// `K(m) = (pi/2) 2F1(1/2, 1/2; 1; m)` on the principal branch.
pub fn ellip_k(m: C64) -> Result<C64> {
    if (m - 1.0).norm() < 1e-300 {
        return Err(ThetaError::BranchPointProximity(format!("{m}")));
    }
    let b = (ONE - m).sqrt();
    Ok(PI / (2.0 * agm(ONE, b)?))
}

/// `(K(m), E(m))`.
pub fn ellip_ke(m: C64) -> Result<(C64, C64)> {
    if (m - 1.0).norm() < 1e-300 {
        return Err(ThetaError::BranchPointProximity(format!("{m}")));
    }
    let b = (ONE - m).sqrt();
    let (a, s) = agm_with_sum(ONE, b, m)?;
    let k = PI / (2.0 * a);
    Ok((k, k * (1.0 - s)))
}
