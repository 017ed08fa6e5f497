use crate::cx::C64;
use crate::error::{Result, ThetaError};
use crate::theta::Estimate;

/// `sum_j coeffs[j] x^(offset + step*j)`, truncated after `order + 1` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub coeffs: Vec<C64>,
    pub offset: u32,
    pub step: u32,
    pub order: usize,
}

/// Truncation order and acceptance tolerance for a series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub order: usize,
    pub tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { order: 20, tol: 1e-10 }
    }
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<C64>, offset: u32, step: u32) -> Self {
        let order = coeffs.len().saturating_sub(1);
        TruncatedSeries { coeffs, offset, step, order }
    }

    /// Coefficient of `x^p` (zero if not represented).
    pub fn coeff_of_power(&self, p: u32) -> C64 {
        if p < self.offset || (p - self.offset) % self.step != 0 {
            return C64::new(0.0, 0.0);
        }
        let j = ((p - self.offset) / self.step) as usize;
        self.coeffs.get(j).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Value with the heuristic truncation estimate `10 * |last terms|` in `tail`.
    pub fn eval(&self, x: C64) -> Estimate {
        let mut sum = C64::new(0.0, 0.0);
        let mut abs = 0.0;
        let mut last = [0.0f64; 2];
        let xs = x.powu(self.step);
        let mut xp = x.powu(self.offset);
        for c in &self.coeffs {
            let t = c * xp;
            sum += t;
            abs += t.norm();
            last = [last[1], t.norm()];
            xp *= xs;
        }
        let tail = 10.0 * last[0].max(last[1]);
        Estimate { value: sum, bound: tail + 4.0 * f64::EPSILON * abs, tail, terms: self.coeffs.len() }
    }

    /// [`eval`](Self::eval), rejecting a truncation estimate above `tol`.
    pub fn eval_checked(&self, x: C64, tol: f64) -> Result<Estimate> {
        let e = self.eval(x);
        if !(e.tail <= tol) {
            return Err(ThetaError::TruncationTooCoarse { estimate: e.tail });
        }
        Ok(e)
    }
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}
