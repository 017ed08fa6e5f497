//! Integer tables defined by linear recurrences with a single seed `X[0,0] = 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Result, ThetaError};
use crate::poly::rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Weierstrass sigma coefficients in `(g2/2, 2 g3)`.
    A,
    /// `sigma_lambda` coefficients in `(e_lambda, g2)`.
    BSigma,
    /// The universal table; `eps = 1` is `sigma_lambda`, `eps = 0` is `sigma`.
    BEps(u8),
    GTheta1,
    GAb(u8, u8),
}

/// A table `X[m][n]`, `0 <= m <= m_max`, `0 <= n <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntGrid {
    kind: GridKind,
    m_max: usize,
    n_max: usize,
    data: Vec<Vec<BigInt>>,
}

impl IntGrid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn name(&self) -> String {
        match self.kind {
            GridKind::A => "A".into(),
            GridKind::BSigma => "B_sigma".into(),
            GridKind::BEps(e) => format!("B_eps({e})"),
            GridKind::GTheta1 => "G_theta1".into(),
            GridKind::GAb(a, b) => format!("G_ab({a},{b})"),
        }
    }

    pub fn extents(&self) -> (usize, usize) {
        (self.m_max, self.n_max)
    }

    /// Entry at `(m, n)`; zero for negative indices.
    ///
    /// # Panics
    /// If a non-negative index lies beyond the computed extents.
    pub fn get(&self, m: i64, n: i64) -> BigInt {
        if m < 0 || n < 0 {
            return BigInt::zero();
        }
        let (m, n) = (m as usize, n as usize);
        assert!(m <= self.m_max && n <= self.n_max, "{} grid has no cell ({m},{n})", self.name());
        self.data[m][n].clone()
    }

    /// Rows `m = 0..=m_max` as decimal strings.
    pub fn rows(&self) -> Vec<Vec<String>> {
        self.data.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect()
    }
}

type Rule<'a> = dyn Fn(&dyn Fn(i64, i64) -> BigRational, i64, i64) -> BigRational + 'a;

// Fill every cell of weight wm*m + wn*n <= w_max in ascending weight; each
// rule only reads cells of strictly smaller weight.
fn fill(kind: GridKind, wm: usize, wn: usize, m_max: usize, n_max: usize, rule: &Rule) -> Result<IntGrid> {
    let w_max = wm * m_max + wn * n_max;
    let (rows, cols) = (w_max / wm + 1, w_max / wn + 1);
    let mut work = vec![vec![BigRational::zero(); cols]; rows];
    for w in 0..=w_max {
        for n in 0..=w / wn {
            let rest = w - wn * n;
            if rest % wm != 0 {
                continue;
            }
            let m = rest / wm;
            let v = if m == 0 && n == 0 {
                BigRational::one()
            } else {
                let read = |i: i64, j: i64| -> BigRational {
                    if i < 0 || j < 0 || i as usize >= rows || j as usize >= cols {
                        BigRational::zero()
                    } else {
                        work[i as usize][j as usize].clone()
                    }
                };
                rule(&read, m as i64, n as i64)
            };
            if !v.is_integer() {
                return Err(ThetaError::IntegralityViolation { grid: format!("{kind:?}"), m, n });
            }
            work[m][n] = v;
        }
    }
    let data = (0..=m_max).map(|m| (0..=n_max).map(|n| work[m][n].to_integer()).collect()).collect();
    Ok(IntGrid { kind, m_max, n_max, data })
}

fn r(v: i64) -> BigRational {
    rat(v, 1)
}

fn bracket(k: i64) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Weierstrass's table: `sigma = sum A[m,n] (g2/2)^m (2 g3)^n x^(4m+6n+1)/(4m+6n+1)!`.
pub fn grid_a(m_max: usize, n_max: usize) -> Result<IntGrid> {
    fill(GridKind::A, 2, 3, m_max, n_max, &|a, m, n| {
        rat(16, 3) * r(n + 1) * a(m - 2, n + 1) + r(3 * (m + 1)) * a(m + 1, n - 1)
            - rat(1, 3) * r((2 * m + 3 * n - 1) * (4 * m + 6 * n - 1)) * a(m - 1, n)
    })
}

/// The `sigma_lambda` table in the `(e_lambda, g2)` representation.
pub fn grid_b_sigma(m_max: usize, n_max: usize) -> Result<IntGrid> {
    fill(GridKind::BSigma, 1, 2, m_max, n_max, &|b, m, n| {
        r(24 * (n + 1)) * b(m - 3, n + 1) + r(4 * m - 12 * n - 5) * b(m - 1, n)
            - rat(4, 3) * r(m + 1) * b(m + 1, n - 1)
            - rat(1, 3) * r((m + 2 * n - 1) * (2 * m + 4 * n - 3)) * b(m, n - 1)
    })
}

/// The universal table for `sigma` (`eps = 0`) and `sigma_lambda` (`eps = 1`).
pub fn grid_b_eps(eps: u8, m_max: usize, n_max: usize) -> Result<IntGrid> {
    if eps > 1 {
        return Err(ThetaError::InvalidArgument(format!("eps must be 0 or 1 (got {eps})")));
    }
    let e = eps as i64;
    fill(GridKind::BEps(eps), 1, 2, m_max, n_max, &|b, m, n| {
        r(24 * (n + 1)) * b(m - 3, n + 1) + r(4 * m - 12 * n - 4 - e) * b(m - 1, n)
            - rat(4, 3) * r(m + 1) * b(m + 1, n - 1)
            - rat(1, 3) * r((m + 2 * n - 1) * (2 * m + 4 * n - 1 - 2 * e)) * b(m, n - 1)
    })
}

/// The theta_1 table behind the `N_nu` polynomials.
pub fn grid_g_theta1(m_max: usize, n_max: usize) -> Result<IntGrid> {
    fill(GridKind::GTheta1, 1, 1, m_max, n_max, &|g, m, n| {
        r(4 * (n - 2 * m - 1)) * g(m, n - 1) - r(4 * (m - 2 * n - 1)) * g(m - 1, n)
            - r(2 * (m + n - 1) * (2 * m + 2 * n - 1)) * (g(m - 2, n) + g(m - 1, n - 1) + g(m, n - 2))
    })
}

/// The even-characteristic table filled straight from its recurrence, for any `(alpha, beta)`.
pub fn grid_g_ab_direct(alpha: u8, beta: u8, m_max: usize, n_max: usize) -> Result<IntGrid> {
    let (ba, bb, bab) = (bracket(alpha as i64), bracket(beta as i64), bracket(alpha as i64 + beta as i64));
    fill(GridKind::GAb(alpha, beta), 1, 1, m_max, n_max, &|g, m, n| {
        r(ba * (4 * n - 8 * m - 3)) * g(m, n - 1) - r(bb * (4 * m - 8 * n - 3)) * g(m - 1, n)
            - r(2 * (m + n - 1) * (2 * m + 2 * n - 3)) * (g(m - 2, n) + r(bab) * g(m - 1, n - 1) + g(m, n - 2))
    })
}

/// One of the two stored tables, `(alpha, 0)`.
pub fn grid_g_ab(alpha: u8, m_max: usize, n_max: usize) -> Result<IntGrid> {
    if alpha > 1 {
        return Err(ThetaError::InvalidArgument(format!("alpha must be 0 or 1 (got {alpha})")));
    }
    grid_g_ab_direct(alpha, 0, m_max, n_max)
}

/// The table for an even reduced characteristic, generated from the stored
/// ones by `G^(b,a)[m,n] = (-1)^((m+n)(a+b)) G^(a,b)[m,n]`.
pub fn grid_g_ab_char(alpha: u8, beta: u8, m_max: usize, n_max: usize) -> Result<IntGrid> {
    match (alpha, beta) {
        (0, 0) | (1, 0) => grid_g_ab(alpha, m_max, n_max),
        (0, 1) => {
            let mut g = grid_g_ab(1, m_max, n_max)?;
            for (m, row) in g.data.iter_mut().enumerate() {
                for (n, v) in row.iter_mut().enumerate() {
                    if (m + n) % 2 == 1 {
                        *v = -v.clone();
                    }
                }
            }
            g.kind = GridKind::GAb(0, 1);
            Ok(g)
        }
        _ => Err(ThetaError::InvalidArgument(format!("({alpha},{beta}) is not an even reduced characteristic"))),
    }
}
