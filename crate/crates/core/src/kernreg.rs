//! Local polynomial kernel regression of order 0, 1 or 2.
//!
//! A sample at offset `d = x_i - x` contributes the basis row
//! `[1, d1, d2, d1^2, d1 d2, d2^2]` (truncated to the order). The fit minimizes
//! `||y - X b||^2_W + ridge ||b||^2` and the estimate at `x` is `b[0]`.

use std::f64::consts::PI;

use crate::error::{contract, param, Error, Result};

/// Condition number of the equilibrated normal matrix above which the solve
/// is treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

/// Order of the local Taylor expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Zero,
    One,
    Two,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Zero, Order::One, Order::Two];

    /// Number of coefficients: 1, 3 or 6.
    pub fn basis_width(self) -> usize {
        match self {
            Order::Zero => 1,
            Order::One => 3,
            Order::Two => 6,
        }
    }

    pub fn as_usize(self) -> usize {
        self as usize
    }

    fn from_width(width: usize) -> Option<Order> {
        Order::ALL.into_iter().find(|o| o.basis_width() == width)
    }
}

impl TryFrom<usize> for Order {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        match n {
            0 => Ok(Order::Zero),
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            _ => param(format!("regression order must be 0, 1 or 2, got {n}")),
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_usize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub position: [f64; 2],
    pub value: f64,
}

/// 2x2 matrix, row-major.
pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConfig {
    pub order: Order,
    /// Symmetric positive-definite smoothing matrix of the spatial kernel.
    pub smoothing: Matrix2,
    pub ridge: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            order: Order::Two,
            smoothing: [[1.0, 0.0], [0.0, 1.0]],
            ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// Order actually fitted; `Zero` when the solver fell back.
    pub order: Order,
    pub beta: Vec<f64>,
    /// The requested order was rank deficient and the weighted mean was returned instead.
    pub fallback: bool,
}

impl RegressionFit {
    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }
}

/// Half-vectorization `[m11, m21, m22]` of a symmetric 2x2 matrix.
pub fn vech(m: &Matrix2) -> Result<[f64; 3]> {
    if (m[0][1] - m[1][0]).abs() > 1e-12 {
        return contract(format!("vech needs a symmetric matrix, got {m:?}"));
    }
    Ok([m[0][0], m[1][0], m[1][1]])
}

/// Regression basis row for offset `d`, written into `out[..order.basis_width()]`.
#[inline]
pub(crate) fn fill_basis(d: [f64; 2], order: Order, out: &mut [f64; 6]) {
    out[0] = 1.0;
    if order >= Order::One {
        out[1] = d[0];
        out[2] = d[1];
    }
    if order == Order::Two {
        // vech(d d^T) without doubling the cross term.
        out[3] = d[0] * d[0];
        out[4] = d[1] * d[0];
        out[5] = d[1] * d[1];
    }
}

pub fn basis_row(offset: [f64; 2], order: Order) -> Vec<f64> {
    let mut row = [0.0; 6];
    fill_basis(offset, order, &mut row);
    row[..order.basis_width()].to_vec()
}

fn check_spd(h: &Matrix2) -> Result<f64> {
    if (h[0][1] - h[1][0]).abs() > 1e-12 {
        return param(format!("smoothing matrix must be symmetric, got {h:?}"));
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] > 0.0 && det > 0.0 && det.is_finite()) {
        return param(format!("smoothing matrix must be positive definite, got {h:?}"));
    }
    Ok(det)
}

/// `K_H(t) = K(H^-1 t) / det H` with the standard bivariate Gaussian `K`.
pub fn kernel_weight(t: [f64; 2], h: &Matrix2) -> Result<f64> {
    let det = check_spd(h)?;
    let u0 = (h[1][1] * t[0] - h[0][1] * t[1]) / det;
    let u1 = (-h[1][0] * t[0] + h[0][0] * t[1]) / det;
    Ok((-(u0 * u0 + u1 * u1) / 2.0).exp() / (2.0 * PI * det))
}

/// Streaming accumulator for the weighted normal equations `X^T W X b = X^T W y`.
#[derive(Debug, Clone)]
pub(crate) struct NormalEquations {
    order: Order,
    n: usize,
    // Upper triangle, row-major in a 6x6 block.
    gram: [f64; 36],
    rhs: [f64; 6],
}

impl NormalEquations {
    pub(crate) fn new(order: Order) -> Self {
        Self {
            order,
            n: order.basis_width(),
            gram: [0.0; 36],
            rhs: [0.0; 6],
        }
    }

    #[inline]
    pub(crate) fn add_row(&mut self, row: &[f64], weight: f64, value: f64) {
        let n = self.n;
        for i in 0..n {
            let wr = weight * row[i];
            for j in i..n {
                self.gram[i * 6 + j] += wr * row[j];
            }
            self.rhs[i] += wr * value;
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, offset: [f64; 2], weight: f64, value: f64) {
        let mut row = [0.0; 6];
        fill_basis(offset, self.order, &mut row);
        self.add_row(&row, weight, value);
    }

    /// Sum of weights (the `(0, 0)` entry, since the first basis function is 1).
    pub(crate) fn weight_sum(&self) -> f64 {
        self.gram[0]
    }

    pub(crate) fn solve(&self, ridge: f64) -> Result<RegressionFit> {
        let total = self.weight_sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("all sample weights are zero".into()));
        }
        if self.n == 1 {
            return Ok(RegressionFit {
                order: Order::Zero,
                beta: vec![self.rhs[0] / (total + ridge)],
                fallback: false,
            });
        }
        match self.solve_full(ridge) {
            Some(beta) => Ok(RegressionFit { order: self.order, beta, fallback: false }),
            None => Ok(RegressionFit {
                order: Order::Zero,
                beta: vec![self.rhs[0] / total],
                fallback: true,
            }),
        }
    }

    /// Equilibrated Cholesky solve; `None` when the system is numerically singular.
    fn solve_full(&self, ridge: f64) -> Option<Vec<f64>> {
        let n = self.n;
        let mut m = [0.0; 36];
        for i in 0..n {
            for j in i..n {
                let v = self.gram[i * 6 + j] + if i == j { ridge } else { 0.0 };
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        let mut scale = [0.0; 6];
        for i in 0..n {
            let d = m[i * n + i];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            scale[i] = 1.0 / d.sqrt();
        }
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] *= scale[i] * scale[j];
            }
        }
        let eig = symmetric_eigenvalues(&m[..n * n], n);
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return None;
        }
        let l = cholesky(&m[..n * n], n)?;
        let b: Vec<f64> = (0..n).map(|i| self.rhs[i] * scale[i]).collect();
        let mut z = cholesky_solve(&l, n, &b);
        // Two rounds of iterative refinement on the scaled system.
        for _ in 0..2 {
            let r: Vec<f64> = (0..n)
                .map(|i| b[i] - (0..n).map(|j| m[i * n + j] * z[j]).sum::<f64>())
                .collect();
            for (zi, d) in z.iter_mut().zip(cholesky_solve(&l, n, &r)) {
                *zi += d;
            }
        }
        let beta: Vec<f64> = z.iter().zip(&scale).map(|(z, s)| z * s).collect();
        beta.iter().all(|v| v.is_finite()).then_some(beta)
    }
}

/// Lower Cholesky factor of a dense SPD matrix, or `None` on a non-positive pivot.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Eigenvalues of a small dense symmetric matrix by cyclic Jacobi rotations.
pub(crate) fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..50 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Solves `(X^T W X + ridge I) b = X^T W y`.
///
/// Rank-deficient systems fall back to the order-0 weighted mean with
/// `fallback` set.
pub fn wls_solve(rows: &[Vec<f64>], weights: &[f64], values: &[f64], ridge: f64) -> Result<RegressionFit> {
    if rows.is_empty() {
        return param("weighted least squares needs at least one sample");
    }
    if rows.len() != weights.len() || rows.len() != values.len() {
        return param(format!(
            "row/weight/value counts differ: {}/{}/{}",
            rows.len(),
            weights.len(),
            values.len()
        ));
    }
    let width = rows[0].len();
    let order = Order::from_width(width)
        .ok_or_else(|| Error::Parameter(format!("basis width {width} is not 1, 3 or 6")))?;
    if rows.iter().any(|r| r.len() != width) {
        return param("inconsistent basis row widths");
    }
    if rows.iter().any(|r| r[0] != 1.0) {
        return param("basis rows must start with the constant term 1");
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return param("weights must be finite and nonnegative");
    }
    if !(ridge >= 0.0) {
        return param(format!("ridge must be nonnegative, got {ridge}"));
    }
    let mut ne = NormalEquations::new(order);
    for ((row, &w), &y) in rows.iter().zip(weights).zip(values) {
        ne.add_row(row, w, y);
    }
    ne.solve(ridge)
}

/// Weighted residual `sum_i w_i (y_i - row_i . beta)^2`.
pub fn weighted_residual(rows: &[Vec<f64>], weights: &[f64], values: &[f64], beta: &[f64]) -> f64 {
    rows.iter()
        .zip(weights)
        .zip(values)
        .map(|((row, w), y)| {
            let fit: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            w * (y - fit) * (y - fit)
        })
        .sum()
}

/// Estimate of the regression function at `x`.
pub fn kernel_regress(samples: &[SamplePoint], x: [f64; 2], cfg: &RegressionConfig) -> Result<f64> {
    check_spd(&cfg.smoothing)?;
    if samples.is_empty() {
        return param("kernel regression needs at least one sample");
    }
    let mut rows = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());
    for s in samples {
        if !(s.position[0].is_finite() && s.position[1].is_finite()) {
            return param("sample positions must be finite");
        }
        let d = [s.position[0] - x[0], s.position[1] - x[1]];
        rows.push(basis_row(d, cfg.order));
        weights.push(kernel_weight(d, &cfg.smoothing)?);
        values.push(s.value);
    }
    Ok(wls_solve(&rows, &weights, &values, cfg.ridge)?.intercept())
}
