//! Complex scalar helpers and the `a+bi` text format.

use num_complex::Complex;
use std::f64::consts::PI;

use crate::error::{Result, ThetaError};

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `i^k` without rounding.
pub fn ipow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// `(-1)^k`.
pub fn sgn_pow(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `exp(pi i k / 4)` for an integer k, exact on the axes.
pub fn eighth_root(k: i64) -> C64 {
    let k = k.rem_euclid(8);
    if k % 2 == 0 {
        ipow(k / 2)
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let base = c(h, h);
        base * ipow(k / 2)
    }
}

/// `exp(pi i k / 12)`.
pub fn root24(k: i64) -> C64 {
    let k = k.rem_euclid(24);
    if k % 6 == 0 {
        ipow(k / 6)
    } else if k % 3 == 0 {
        eighth_root(k / 3)
    } else {
        C64::from_polar(1.0, PI * k as f64 / 12.0)
    }
}

/// Principal square root with arg in (-pi/2, pi/2].
pub fn sqrt_principal(z: C64) -> C64 {
    z.sqrt()
}

/// Parse `a+bi`, `a-bi`, `bi`, `i`, `-i` or a bare real. Exponents are allowed.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || ThetaError::InvalidArgument(format!("not a complex literal: '{text}'"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| -> Result<f64> { t.parse::<f64>().map_err(|_| bad()) };
    if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let b = bytes[idx];
            if (b == b'+' || b == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let imag = |t: &str| -> Result<f64> {
            match t {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                _ => num(t),
            }
        };
        match split {
            Some(idx) => Ok(c(num(&body[..idx])?, imag(&body[idx..])?)),
            None => Ok(c(0.0, imag(body)?)),
        }
    } else {
        Ok(c(num(&s)?, 0.0))
    }
}

fn fmt_real(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Render in the shared `a+bi` format; the output round-trips through [`parse_complex`].
pub fn format_complex(z: C64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", fmt_real(z.re), sign, fmt_real(im.abs()))
}
