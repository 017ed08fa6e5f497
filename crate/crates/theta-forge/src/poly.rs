//! Sparse multivariate polynomials over an exact or floating coefficient ring.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::cx::C64;

/// Coefficient ring usable in [`Poly`].
pub trait Coeff:
    Clone + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    fn to_c64(&self) -> C64;
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_c64(&self) -> C64 {
        C64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_c64(&self) -> C64 {
        C64::new(*self, 0.0)
    }
}

/// `sum c_e x^e` with exponent vectors of fixed length `nvars`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Coeff> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

pub type QPoly = Poly<BigRational>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl<T: Coeff> Poly<T> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(e, T::one());
        p
    }

    pub fn monomial(exps: Vec<u32>, c: T) -> Self {
        let mut p = Poly::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> T {
        self.terms.get(exps).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: T) {
        assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&exps) {
            Some(old) => old + c,
            None => c,
        };
        if !merged.is_zero() {
            self.terms.insert(exps, merged);
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Poly::constant(self.nvars, T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Partial derivative in variable `i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, v) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            out.add_term(f, v.clone() * T::from_i64(e[i] as i64));
        }
        out
    }

    /// Replace every variable by a polynomial in a (possibly different) set of variables.
    pub fn substitute(&self, images: &[Poly<T>]) -> Poly<T> {
        assert_eq!(images.len(), self.nvars);
        let n = images.first().map_or(0, |p| p.nvars);
        let mut out = Poly::zero(n);
        for (e, v) in &self.terms {
            let mut t = Poly::constant(n, v.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &images[i].pow(k);
                }
            }
            out = &out + &t;
        }
        out
    }

    pub fn eval(&self, at: &[C64]) -> C64 {
        assert_eq!(at.len(), self.nvars);
        let mut s = C64::new(0.0, 0.0);
        for (e, v) in &self.terms {
            let mut t = v.to_c64();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= at[i].powu(k);
                }
            }
            s += t;
        }
        s
    }

    /// Total degree under the weights `w` (max over terms); `None` for the zero polynomial.
    pub fn weighted_degree(&self, w: &[u32]) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().zip(w).map(|(a, b)| a * b).sum()).max()
    }
}

impl<T: Coeff> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (e, v) in &rhs.terms {
            out.add_term(e.clone(), v.clone());
        }
        out
    }
}

impl<T: Coeff> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (e, v) in &rhs.terms {
            out.add_term(e.clone(), -v.clone());
        }
        out
    }
}

impl<T: Coeff> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                let e: Vec<u32> = a.iter().zip(b).map(|(p, q)| p + q).collect();
                out.add_term(e, x.clone() * y.clone());
            }
        }
        out
    }
}

impl<T: Coeff> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.scale(&-T::one())
    }
}
