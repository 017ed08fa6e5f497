//! Power series for `sigma(x; g2, g3)` and the universal `Xi(x; e, g2)`.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::grid::{grid_a, grid_b_eps};
use super::halphen::{halphen_operator_apply, theta_rep_e, theta_rep_invariants, HalphenRep};
use super::truncated::{factorial, SeriesOptions, TruncatedSeries};
use crate::cx::C64;
use crate::error::Result;
use crate::memo::Memo;
use crate::poly::{rat, QPoly};
use crate::theta::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaPipeline {
    AGrid,
    Ck,
    GroupedWei,
}

fn pow2(k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::from(1) << k as usize)
    } else {
        BigRational::new(BigInt::from(1), BigInt::from(1) << (-k) as usize)
    }
}

fn int(v: &BigInt) -> BigRational {
    BigRational::from_integer(v.clone())
}

fn mono2(i: u32, j: u32, c: BigRational) -> QPoly {
    QPoly::monomial(vec![i, j], c)
}

/// Halphen's polynomials `C_k(g2, g3)`, `sigma = sum C_k x^(2k+1)/(2k+1)!`.
pub fn halphen_ck(k_max: usize) -> Vec<QPoly> {
    let g2 = QPoly::var(2, 0);
    let mut c = vec![QPoly::constant(2, BigRational::one())];
    for k in 1..=k_max {
        let mut next = halphen_operator_apply(&c[k - 1], HalphenRep::G2G3);
        if k >= 2 {
            let f = rat(((k - 1) * (2 * k - 1)) as i64, 6);
            next = &next - &(&g2 * &c[k - 2]).scale(&f);
        }
        c.push(next);
    }
    c
}

/// `nu` range of the grouped sum for `x^(2k+1)`: `ceil(k/3) ..= floor(k/2)`.
pub fn grouped_nu_range(k: usize) -> RangeInclusive<usize> {
    k.div_ceil(3)..=k / 2
}

/// `C_k(g2, g3)` for `k = 0..=order` through the chosen pipeline.
pub fn sigma_coefficient_polys(order: usize, pipeline: SigmaPipeline) -> Result<Vec<QPoly>> {
    if pipeline == SigmaPipeline::Ck {
        return Ok(halphen_ck(order));
    }
    let a = grid_a(order / 2, order / 3)?;
    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut p = QPoly::zero(2);
        match pipeline {
            SigmaPipeline::AGrid => {
                for n in 0..=k / 3 {
                    if (k - 3 * n) % 2 != 0 {
                        continue;
                    }
                    let m = (k - 3 * n) / 2;
                    let c = int(&a.get(m as i64, n as i64)) * pow2(n as i64 - m as i64);
                    p.add_term(vec![m as u32, n as u32], c);
                }
            }
            _ => {
                for nu in grouped_nu_range(k) {
                    let (m, n) = (3 * nu - k, k - 2 * nu);
                    let c = pow2(2 * k as i64 - 5 * nu as i64) * int(&a.get(m as i64, n as i64));
                    p = &p + &mono2(m as u32, n as u32, c);
                }
            }
        }
        out.push(p);
    }
    Ok(out)
}

/// The sigma series at numerical invariants, coefficients of `x^(2k+1)`.
pub fn sigma_truncated(g2: C64, g3: C64, order: usize, pipeline: SigmaPipeline) -> Result<TruncatedSeries> {
    static POLYS: Memo<(usize, SigmaPipeline), Vec<QPoly>> = Memo::new();
    let polys = POLYS.get_or((order, pipeline), || sigma_coefficient_polys(order, pipeline))?;
    let coeffs = polys.iter().enumerate().map(|(k, p)| p.eval(&[g2, g3]) / factorial(2 * k + 1)).collect();
    Ok(TruncatedSeries::new(coeffs, 1, 2))
}

pub fn sigma_series(x: C64, g2: C64, g3: C64, opts: &SeriesOptions, pipeline: SigmaPipeline) -> Result<Estimate> {
    sigma_truncated(g2, g3, opts.order, pipeline)?.eval_checked(x, opts.tol)
}

/// Coefficients of `x^(2k+1-eps)/(2k+1-eps)!` of the universal series, in `(e, g2)`.
pub fn xi_coefficient_polys(eps: u8, order: usize) -> Result<Vec<QPoly>> {
    let b = grid_b_eps(eps, order, order / 2)?;
    Ok((0..=order)
        .map(|k| {
            let mut p = QPoly::zero(2);
            for nu in 0..=k / 2 {
                let c = pow2(-(nu as i64)) * int(&b.get((k - 2 * nu) as i64, nu as i64));
                p.add_term(vec![(k - 2 * nu) as u32, nu as u32], c);
            }
            p
        })
        .collect())
}

pub fn xi_truncated(e: C64, g2: C64, eps: u8, order: usize) -> Result<TruncatedSeries> {
    static POLYS: Memo<(u8, usize), Vec<QPoly>> = Memo::new();
    let polys = POLYS.get_or((eps, order), || xi_coefficient_polys(eps, order))?;
    let off = 1 - eps as usize;
    let coeffs = polys.iter().enumerate().map(|(k, p)| p.eval(&[e, g2]) / factorial(2 * k + off)).collect();
    Ok(TruncatedSeries::new(coeffs, off as u32, 2))
}

/// `sigma_lambda` (`eps = 1`) or `sigma` (`eps = 0`) from a branch point `e` and `g2`.
pub fn xi_series(x: C64, e: C64, g2: C64, eps: u8, opts: &SeriesOptions) -> Result<Estimate> {
    xi_truncated(e, g2, eps, opts.order)?.eval_checked(x, opts.tol)
}

// Dense list of coefficients of x^j (exact), j = 0..=2*order+1.
fn by_power(polys: &[QPoly], offset: usize, nvars: usize) -> Vec<QPoly> {
    let mut out = vec![QPoly::zero(nvars); 2 * polys.len() + 1];
    for (k, p) in polys.iter().enumerate() {
        let j = 2 * k + offset;
        out[j] = p.scale(&BigRational::new(BigInt::one(), fact_big(j)));
    }
    out
}

fn fact_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

fn at(c: &[QPoly], j: i64, nvars: usize) -> QPoly {
    if j < 0 || j as usize >= c.len() {
        QPoly::zero(nvars)
    } else {
        c[j as usize].clone()
    }
}

/// Coefficient residuals of the homogeneity equation and the heat-type
/// equation for sigma in `(g2, g3)`; all zero when the series is right.
pub fn weierstrass_pde_residuals(order: usize) -> Result<Vec<QPoly>> {
    let c = by_power(&halphen_ck(order), 1, 2);
    let g2 = QPoly::var(2, 0);
    let g3 = QPoly::var(2, 1);
    let top = 2 * order as i64 + 1;
    let mut out = Vec::new();
    for j in 0..=top {
        let cj = at(&c, j, 2);
        let h = &(&cj.scale(&rat(j - 1, 1)) - &(&g2 * &cj.deriv(0)).scale(&rat(4, 1))) - &(&g3 * &cj.deriv(1)).scale(&rat(6, 1));
        out.push(h);
        if j + 2 <= top {
            let lhs = at(&c, j + 2, 2).scale(&rat((j + 2) * (j + 1), 1));
            let r = &(&lhs - &(&g3 * &cj.deriv(0)).scale(&rat(12, 1))) - &(&g2.pow(2) * &cj.deriv(1)).scale(&rat(2, 3));
            out.push(&r + &(&g2 * &at(&c, j - 2, 2)).scale(&rat(1, 12)));
        }
    }
    Ok(out)
}

/// Residuals of the universal pair in `(e, g2)`.
pub fn universal_pde_residuals(eps: u8, order: usize) -> Result<Vec<QPoly>> {
    let off = 1 - eps as usize;
    let c = by_power(&xi_coefficient_polys(eps, order)?, off, 2);
    let e = QPoly::var(2, 0);
    let g2 = QPoly::var(2, 1);
    let top = (2 * order + off) as i64;
    let mut out = Vec::new();
    for j in 0..=top {
        let cj = at(&c, j, 2);
        let h = &(&cj.scale(&rat(j - 1 + eps as i64, 1)) - &(&e * &cj.deriv(0)).scale(&rat(2, 1)))
            - &(&g2 * &cj.deriv(1)).scale(&rat(4, 1));
        out.push(h);
        if j + 2 <= top {
            let lhs = at(&c, j + 2, 2).scale(&rat((j + 2) * (j + 1), 1));
            let r = &(&lhs - &halphen_operator_apply(&cj, HalphenRep::EG2)) + &(&e * &cj).scale(&rat(eps as i64, 1));
            out.push(&r + &(&g2 * &at(&c, j - 2, 2)).scale(&rat(1, 12)));
        }
    }
    Ok(out)
}

/// Residuals of the Xi equation written in the `(alpha, beta)` theta representation,
/// for the function attached to `e[gamma, delta]` (`(0,0)` is sigma itself).
pub fn theta_rep_equation_residuals(alpha: i64, beta: i64, gamma: i64, delta: i64, order: usize) -> Result<Vec<QPoly>> {
    let is_sigma = gamma.rem_euclid(2) == 0 && delta.rem_euclid(2) == 0;
    let eps = if is_sigma { 0u8 } else { 1 };
    // sigma does not depend on which root stands in for e
    let e_sub = if is_sigma { theta_rep_e(alpha, beta, 0, 1) } else { theta_rep_e(alpha, beta, gamma, delta) };
    let (g2, _) = theta_rep_invariants(alpha, beta);
    let quad = g2.scale(&rat(1, 12));
    let off = 1 - eps as usize;
    let c: Vec<QPoly> =
        by_power(&xi_coefficient_polys(eps, order)?, off, 2).iter().map(|p| p.substitute(&[e_sub.clone(), g2.clone()])).collect();
    let e_gd = theta_rep_e(alpha, beta, gamma, delta);
    let top = (2 * order + off) as i64;
    let mut out = Vec::new();
    for j in 0..=top - 2 {
        let cj = at(&c, j, 2);
        let lhs = at(&c, j + 2, 2).scale(&rat((j + 2) * (j + 1), 1));
        let r = &(&lhs - &halphen_operator_apply(&cj, HalphenRep::ThetaAb(alpha, beta))) + &(&e_gd * &cj);
        out.push(&r + &(&quad * &at(&c, j - 2, 2)));
    }
    Ok(out)
}
