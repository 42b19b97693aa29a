//! Epsilon-insensitive support vector regression solved by SMO.
//!
//! The dual is written over `2n` multipliers `[alpha; alpha_star]` with signs
//! `+1` / `-1`, minimising `0.5 a'Qa + p'a` subject to `s'a = 0` and
//! `0 <= a <= C`, where `Q_ij = s_i s_j K(x_i, x_j)` and
//! `p = [eps - y; eps + y]`. Working pairs are chosen by maximal violation with
//! second-order gain; the bias follows the free-multiplier average, or the
//! midpoint of the feasible interval when every multiplier sits at a bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
/// Iteration cap in passes; one pass is `2n` pair updates.
pub const MAX_PASSES: usize = 10_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Rbf => "rbf",
            Kernel::Linear => "linear",
        })
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" => Ok(Kernel::Rbf),
            "linear" => Ok(Kernel::Linear),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl SvrParams {
    pub fn new(kernel: Kernel, c: f64) -> Self {
        Self {
            kernel,
            c,
            epsilon: DEFAULT_EPSILON,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    kernel: Kernel,
    gamma: f64,
    n_features: usize,
    support: Matrix,
    /// `alpha - alpha_star` for each support row.
    coef: Vec<f64>,
    bias: f64,
    /// Full dual solution over training rows, kept for diagnostics.
    alpha: Vec<f64>,
    alpha_star: Vec<f64>,
    iterations: usize,
}

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_star(&self) -> &[f64] {
        &self.alpha_star
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let k = KernelFn {
            kind: self.kernel,
            gamma: self.gamma,
        };
        self.support
            .rows()
            .zip(&self.coef)
            .map(|(sv, c)| c * k.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Clone, Copy)]
struct KernelFn {
    kind: Kernel,
    gamma: f64,
}

impl KernelFn {
    #[inline]
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

/// `1 / (p * mean column variance)`, or 1 when every column is constant.
pub fn rbf_gamma(x: &Matrix) -> f64 {
    let (n, p) = (x.n_rows(), x.n_cols());
    if n == 0 || p == 0 {
        return 1.0;
    }
    let mean_var = (0..p)
        .map(|j| {
            let mean = x.column(j).sum::<f64>() / n as f64;
            x.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
        })
        .sum::<f64>()
        / p as f64;
    if mean_var > 0.0 {
        1.0 / (p as f64 * mean_var)
    } else {
        1.0
    }
}

pub fn fit_svr(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("C must be positive, got {}", params.c)));
    }
    if !(params.epsilon >= 0.0) || !(params.tolerance > 0.0) {
        return Err(Error::InvalidHyperparameter("epsilon must be >= 0 and tolerance > 0".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::DegenerateData("SVR needs at least one row".into()));
    }
    let kernel = KernelFn {
        kind: params.kernel,
        gamma: match params.kernel {
            Kernel::Rbf => rbf_gamma(x),
            Kernel::Linear => 0.0,
        },
    };

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let sol = solve_dual(&gram, y, params)?;

    let mut rows = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        let beta = sol.alpha[i] - sol.alpha[i + n];
        if beta != 0.0 {
            rows.push(x.row(i));
            coef.push(beta);
        }
    }
    let support = if rows.is_empty() {
        Matrix::zeros(0, x.n_cols())
    } else {
        Matrix::from_rows(&rows)
    };
    Ok(SvrModel {
        kernel: params.kernel,
        gamma: kernel.gamma,
        n_features: x.n_cols(),
        support,
        coef,
        bias: -sol.rho,
        alpha: sol.alpha[..n].to_vec(),
        alpha_star: sol.alpha[n..].to_vec(),
        iterations: sol.iterations,
    })
}

struct DualSolution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
}

/// Dual variables are indexed `t` in `0..2n`: `t < n` is `alpha_t` (sign +1),
/// `t >= n` is `alpha*_{t-n}` (sign -1). Both halves share gram rows. Active
/// lists hold row indices `r` for each half.
struct Dual<'a> {
    gram: &'a [f64],
    diag: Vec<f64>,
    y: &'a [f64],
    n: usize,
    c: f64,
    epsilon: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    active_lo: Vec<usize>,
    active_hi: Vec<usize>,
}

impl Dual<'_> {
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    fn row(&self, t: usize) -> &[f64] {
        let r = t % self.n;
        &self.gram[r * self.n..(r + 1) * self.n]
    }

    /// (max over I_up of -s_t g_t, max over I_low of s_t g_t) on the active set.
    fn violations(&self) -> (f64, f64) {
        let (n, c) = (self.n, self.c);
        let (mut up, mut low) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &r in &self.active_lo {
            if self.alpha[r] < c {
                up = up.max(-self.grad[r]);
            }
            if self.alpha[r] > 0.0 {
                low = low.max(self.grad[r]);
            }
        }
        for &r in &self.active_hi {
            let t = n + r;
            if self.alpha[t] > 0.0 {
                up = up.max(self.grad[t]);
            }
            if self.alpha[t] < c {
                low = low.max(-self.grad[t]);
            }
        }
        (up, low)
    }

    /// Second-order working-set selection; `None` once the active set is optimal.
    fn select(&self, tolerance: f64) -> Option<(usize, usize)> {
        let (n, c) = (self.n, self.c);
        let (alpha, grad) = (&self.alpha, &self.grad);
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for &r in &self.active_lo {
            if alpha[r] < c && -grad[r] >= gmax {
                gmax = -grad[r];
                i = r;
            }
        }
        for &r in &self.active_hi {
            let t = n + r;
            if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            return None;
        }
        let si = self.sign(i);
        let row_i = self.row(i);
        let k_ii = self.diag[i % n];
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for &r in &self.active_lo {
            if alpha[r] <= 0.0 {
                continue;
            }
            let v = grad[r];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = k_ii + self.diag[r] - 2.0 * si * row_i[r];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j = r;
                }
            }
        }
        for &r in &self.active_hi {
            let t = n + r;
            if alpha[t] >= c {
                continue;
            }
            let v = -grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = k_ii + self.diag[r] + 2.0 * si * row_i[r];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX || gmax + gmax2 < tolerance {
            None
        } else {
            Some((i, j))
        }
    }

    /// Recomputes every gradient from the multipliers and reactivates all variables.
    fn reconstruct(&mut self) {
        let n = self.n;
        for r in 0..n {
            self.grad[r] = self.epsilon - self.y[r];
            self.grad[n + r] = self.epsilon + self.y[r];
        }
        for s in 0..n {
            let beta = self.alpha[s] - self.alpha[n + s];
            if beta == 0.0 {
                continue;
            }
            let row = &self.gram[s * n..(s + 1) * n];
            for r in 0..n {
                let d = beta * row[r];
                self.grad[r] += d;
                self.grad[n + r] -= d;
            }
        }
        self.active_lo = (0..n).collect();
        self.active_hi = (0..n).collect();
    }

    fn is_full(&self) -> bool {
        self.active_lo.len() + self.active_hi.len() == 2 * self.n
    }

    /// Drops bound variables that cannot re-enter the working set soon.
    fn shrink(&mut self, unshrunk: &mut bool, tolerance: f64) {
        let (up, low) = self.violations();
        if !*unshrunk && up + low <= 10.0 * tolerance {
            *unshrunk = true;
            self.reconstruct();
        }
        let (n, c) = (self.n, self.c);
        let (alpha, grad) = (&self.alpha, &self.grad);
        self.active_lo.retain(|&r| {
            let (a, g) = (alpha[r], grad[r]);
            !((a >= c && -g > up) || (a <= 0.0 && g > low))
        });
        self.active_hi.retain(|&r| {
            let (a, g) = (alpha[n + r], grad[n + r]);
            !((a >= c && -g > low) || (a <= 0.0 && g > up))
        });
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (si, sj) = (self.sign(i), self.sign(j));
        let (k_ii, k_jj) = (self.diag[i % self.n], self.diag[j % self.n]);
        let q_ij = si * sj * self.row(i)[j % self.n];
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let grad = &self.grad;
        if si != sj {
            let quad = k_ii + k_jj + 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = k_ii + k_jj - 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        // Q_it = s_i s_t K(i, t); only active gradients are kept current.
        let (ci, cj) = (si * (ai - old_i), sj * (aj - old_j));
        let n = self.n;
        let (ri, rj) = (i % n, j % n);
        let (row_i, row_j) = (&self.gram[ri * n..(ri + 1) * n], &self.gram[rj * n..(rj + 1) * n]);
        for &r in &self.active_lo {
            self.grad[r] += ci * row_i[r] + cj * row_j[r];
        }
        for &r in &self.active_hi {
            self.grad[n + r] -= ci * row_i[r] + cj * row_j[r];
        }
    }

    /// Bias from free variables, or the midpoint of the feasible interval.
    fn rho(&self) -> f64 {
        let l = 2 * self.n;
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut n_free, mut sum_free) = (0usize, 0.0);
        for t in 0..l {
            let s = self.sign(t);
            let yg = s * self.grad[t];
            let a = self.alpha[t];
            if a >= self.c {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if a <= 0.0 {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

/// SMO with maximal-gain pair selection and shrinking.
fn solve_dual(gram: &[f64], y: &[f64], params: &SvrParams) -> Result<DualSolution> {
    let n = y.len();
    let l = 2 * n;
    let mut dual = Dual {
        gram,
        diag: (0..n).map(|r| gram[r * n + r]).collect(),
        y,
        n,
        c: params.c,
        epsilon: params.epsilon,
        alpha: vec![0.0; l],
        grad: (0..l)
            .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
            .collect(),
        active_lo: (0..n).collect(),
        active_hi: (0..n).collect(),
    };
    let max_iter = MAX_PASSES.saturating_mul(l.max(1));
    let shrink_every = l.clamp(1, 1000);
    let mut counter = shrink_every;
    let mut unshrunk = false;
    let mut iterations = 0;
    loop {
        counter -= 1;
        if counter == 0 {
            counter = shrink_every;
            dual.shrink(&mut unshrunk, params.tolerance);
        }
        let (i, j) = match dual.select(params.tolerance) {
            Some(pair) => pair,
            None if dual.is_full() => break,
            None => {
                // Optimal on the shrunk problem: check again on the full one.
                dual.reconstruct();
                counter = 1;
                match dual.select(params.tolerance) {
                    Some(pair) => pair,
                    None => break,
                }
            }
        };
        if iterations >= max_iter {
            return Err(Error::NoConvergence(iterations));
        }
        iterations += 1;
        dual.update_pair(i, j);
    }
    Ok(DualSolution {
        rho: dual.rho(),
        alpha: dual.alpha,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_flat() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [5.0, -1.0]]);
        for kernel in [Kernel::Rbf, Kernel::Linear] {
            let m = fit_svr(&x, &[4.0; 3], &SvrParams::new(kernel, 1.0)).unwrap();
            assert_eq!(m.n_support(), 0);
            assert!(m.alpha().iter().chain(m.alpha_star()).all(|&a| a == 0.0));
            assert!((m.bias() - 4.0).abs() < 1e-12);
            assert!((m.predict_row(&[9.0, 9.0]) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_flattest_line() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]);
        let m = fit_svr(&x, &[-1.0, 1.0], &SvrParams::new(Kernel::Linear, 10.0)).unwrap();
        assert!((m.predict_row(&[-1.0]) + 0.9).abs() < 1e-6);
        assert!((m.predict_row(&[1.0]) - 0.9).abs() < 1e-6);
        assert!((m.predict_row(&[0.5]) - 0.45).abs() < 1e-6);
    }

    #[test]
    fn gamma_uses_mean_column_variance() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [2.0, 1.0]]);
        // Column variances 1 and 0; mean 0.5; p = 2.
        assert!((rbf_gamma(&x) - 1.0).abs() < 1e-12);
        assert_eq!(rbf_gamma(&Matrix::from_rows(&[[3.0], [3.0]])), 1.0);
    }

    #[test]
    fn dual_feasibility_and_kkt() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[1] + 0.3 * (r[0] * 7.0).sin()).collect();
        let x = Matrix::from_rows(&rows);
        for kernel in [Kernel::Rbf, Kernel::Linear] {
            let params = SvrParams::new(kernel, 3.0);
            let m = fit_svr(&x, &y, &params).unwrap();
            let sum: f64 = m.alpha().iter().zip(m.alpha_star()).map(|(a, b)| a - b).sum();
            assert!(sum.abs() < 1e-9);
            for (i, row) in rows.iter().enumerate() {
                let (a, s) = (m.alpha()[i], m.alpha_star()[i]);
                assert!((0.0..=params.c).contains(&a) && (0.0..=params.c).contains(&s));
                let r = y[i] - m.predict_row(row);
                let tol = 1e-3;
                if a == 0.0 && s == 0.0 {
                    assert!(r.abs() <= params.epsilon + tol, "inside tube: {r}");
                }
                if a > 0.0 && a < params.c {
                    assert!((r - params.epsilon).abs() <= tol, "on upper edge: {r}");
                }
                if s > 0.0 && s < params.c {
                    assert!((r + params.epsilon).abs() <= tol, "on lower edge: {r}");
                }
                // Slack only when a multiplier hits C.
                if r.abs() > params.epsilon + tol {
                    assert!(a == params.c || s == params.c);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_c() {
        let x = Matrix::from_rows(&[[0.0]]);
        assert!(fit_svr(&x, &[1.0], &SvrParams::new(Kernel::Rbf, 0.0)).is_err());
    }
}
