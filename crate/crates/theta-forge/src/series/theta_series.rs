//! Power series in `x` for theta_1 and the even theta functions.

use std::f64::consts::PI;

use super::grid::{grid_g_ab_char, grid_g_theta1, IntGrid};
use super::truncated::{factorial, SeriesOptions, TruncatedSeries};
use crate::constants::{eta_dedekind, eta_w};
use crate::cx::{C64, ZERO};
use crate::derivation::{derivative_chain, point, Prefactor};
use crate::error::{Result, ThetaError};
use crate::memo::Memo;
use crate::poly::QPoly;
use crate::theta::{varthetas, Estimate, SeriesBudget, ThetaChar, UHTau};

use num_traits::ToPrimitive;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta1Pipeline {
    /// Repeated tau-derivatives of `eta_D^3` through the closed derivation.
    Eta3Deriv,
    /// The integer table `G` and the `N_nu` polynomials.
    GGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaAbPipeline {
    TauDeriv,
    GGrid,
}

/// Which pair of theta constants the `N_nu` polynomial is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NVariant {
    V2V4,
    V3V4,
    V3V2,
}

fn gf(g: &IntGrid, m: usize, n: usize) -> f64 {
    g.get(m as i64, n as i64).to_f64().unwrap_or(f64::NAN)
}

/// `N_nu` at the theta constants `v = [vartheta2, vartheta3, vartheta4]`.
pub fn n_polynomial(g: &IntGrid, nu: usize, variant: NVariant, v: [C64; 3]) -> C64 {
    let [p2, p3, p4] = [v[0].powi(4), v[1].powi(4), v[2].powi(4)];
    let mut s = ZERO;
    for k in 0..=nu {
        let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += match variant {
            NVariant::V2V4 => gf(g, nu - k, k) * p4.powu(k as u32) * p2.powu((nu - k) as u32),
            NVariant::V3V4 => sg * gf(g, nu - k, k) * p3.powu(k as u32) * p4.powu((nu - k) as u32),
            NVariant::V3V2 => sg * gf(g, k, nu - k) * p3.powu(k as u32) * p2.powu((nu - k) as u32),
        };
    }
    s
}

fn chain(pre: Prefactor, order: usize) -> Result<std::sync::Arc<Vec<QPoly>>> {
    static CHAINS: Memo<(Prefactor, usize), Vec<QPoly>> = Memo::new();
    CHAINS.get_or((pre, order), || Ok(derivative_chain(pre, order)))
}

fn g_table(ch: Option<(u8, u8)>, order: usize) -> Result<std::sync::Arc<IntGrid>> {
    static GRIDS: Memo<(Option<(u8, u8)>, usize), IntGrid> = Memo::new();
    GRIDS.get_or((ch, order), || match ch {
        None => grid_g_theta1(order, order),
        Some((a, b)) => grid_g_ab_char(a, b, order, order),
    })
}

struct Consts {
    eta: C64,
    eta_d: C64,
    v: [C64; 3],
}

fn consts(tau: &UHTau) -> Result<Consts> {
    let b = SeriesBudget::default();
    Ok(Consts { eta: eta_w(tau, &b)?.value, eta_d: eta_dedekind(tau, &b)?.value, v: varthetas(tau)? })
}

fn bracket_from(g: &IntGrid, k: usize, variant: NVariant, c: &Consts) -> C64 {
    let mut inner = ZERO;
    for nu in 0..=k {
        let n = n_polynomial(g, nu, variant, c.v);
        inner += (-PI * PI / 6.0).powi(nu as i32) * c.eta.powu((k - nu) as u32) * n
            / (factorial(k - nu) * factorial(2 * nu + 1));
    }
    (-2.0f64).powi(k as i32) * inner
}

/// Coefficient of `x^(2k+1)` in theta_1, divided by `2 pi eta_D^3`.
pub fn theta1_bracket(k: usize, tau: &UHTau, variant: NVariant) -> Result<C64> {
    let g = g_table(None, k)?;
    Ok(bracket_from(&g, k, variant, &consts(tau)?))
}

pub fn theta1_truncated(tau: &UHTau, order: usize, pipeline: Theta1Pipeline) -> Result<TruncatedSeries> {
    let c = consts(tau)?;
    let lead = 2.0 * PI * c.eta_d.powi(3);
    let coeffs = match pipeline {
        Theta1Pipeline::Eta3Deriv => {
            let at = point(c.eta, c.v);
            chain(Prefactor::EtaCubed, order)?
                .iter()
                .enumerate()
                .map(|(k, f)| lead * (-4.0f64).powi(k as i32) * f.eval(&at) / factorial(2 * k + 1))
                .collect()
        }
        Theta1Pipeline::GGrid => {
            let g = g_table(None, order)?;
            (0..=order).map(|k| lead * bracket_from(&g, k, NVariant::V2V4, &c)).collect()
        }
    };
    Ok(TruncatedSeries::new(coeffs, 1, 2))
}

pub fn theta1_series(x: C64, tau: &UHTau, opts: &SeriesOptions, pipeline: Theta1Pipeline) -> Result<Estimate> {
    theta1_truncated(tau, opts.order, pipeline)?.eval_checked(x, opts.tol)
}

/// Series for an even characteristic; the reduction sign is included.
pub fn theta_ab_truncated(ch: ThetaChar, tau: &UHTau, order: usize, pipeline: ThetaAbPipeline) -> Result<TruncatedSeries> {
    let (r, sign) = ch.reduce();
    if r.parity() == 0 {
        return Err(ThetaError::InvalidArgument(format!(
            "({},{}) is odd; use the theta_1 series",
            ch.alpha, ch.beta
        )));
    }
    let c = consts(tau)?;
    let (idx, slot) = match (r.alpha, r.beta) {
        (0, 0) => (3u8, 1usize),
        (1, 0) => (2, 0),
        _ => (4, 2),
    };
    let vt = sign * c.v[slot];
    let coeffs = match pipeline {
        ThetaAbPipeline::TauDeriv => {
            let at = point(c.eta, c.v);
            chain(Prefactor::Vartheta(idx), order)?
                .iter()
                .enumerate()
                .map(|(k, f)| vt * (-4.0f64).powi(k as i32) * f.eval(&at) / factorial(2 * k))
                .collect()
        }
        ThetaAbPipeline::GGrid => {
            let g = g_table(Some((r.alpha as u8, r.beta as u8)), order)?;
            // vartheta[alpha-1, 0] and vartheta[0, beta-1]
            let p = if r.alpha == 0 { c.v[0] } else { c.v[1] }.powi(4);
            let q = if r.beta == 0 { c.v[2] } else { c.v[1] }.powi(4);
            (0..=order)
                .map(|k| {
                    let mut inner = ZERO;
                    for nu in 0..=k {
                        let mut n = ZERO;
                        for s in 0..=nu {
                            n += gf(&g, s, nu - s) * p.powu(s as u32) * q.powu((nu - s) as u32);
                        }
                        inner += (-PI * PI / 6.0).powi(nu as i32) * c.eta.powu((k - nu) as u32) * n
                            / (factorial(k - nu) * factorial(2 * nu));
                    }
                    vt * (-2.0f64).powi(k as i32) * inner
                })
                .collect()
        }
    };
    Ok(TruncatedSeries::new(coeffs, 0, 2))
}

pub fn theta_ab_series(
    ch: ThetaChar,
    x: C64,
    tau: &UHTau,
    opts: &SeriesOptions,
    pipeline: ThetaAbPipeline,
) -> Result<Estimate> {
    theta_ab_truncated(ch, tau, opts.order, pipeline)?.eval_checked(x, opts.tol)
}
