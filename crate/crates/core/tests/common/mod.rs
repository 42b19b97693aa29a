//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use diary_forecast::dataset::{Cohort, DailyRecord, Phq2Score, Schema};
use diary_forecast::matrix::Matrix;
use diary_forecast::models::Kernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen::<f64>()).collect()).collect();
    Matrix::from_rows(&rows)
}

pub fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(u64::from(d) - 1)
}

/// A cohort with `n_subjects` fully observed subjects over `n_days`, with
/// labels tied to the first diary column.
pub fn dense_cohort(n_subjects: usize, n_days: u32, seed: u64) -> Cohort {
    let schema = Schema::with_widths(2, 2);
    let mut r = rng(seed);
    let mut records = Vec::new();
    for s in 0..n_subjects {
        let id = format!("P{:02}", s + 1);
        for d in 1..=n_days {
            let level: f64 = r.gen_range(0.0..12.0);
            let rec = DailyRecord {
                date: day(d),
                esm: vec![Some(r.gen()), Some(level / 12.0 + r.gen::<f64>() * 0.1)],
                diary: vec![Some(level), Some(r.gen())],
                phq2: Phq2Score::new(level.round() as u8),
            };
            records.push((id.clone(), rec));
        }
    }
    Cohort::from_records(schema, records).unwrap()
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn kernel_value(kind: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kind {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf => (-gamma * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).exp(),
    }
}

/// Exact epsilon-SVR by enumerating which multipliers sit at -C, are free
/// negative, zero, free positive or at +C, solving the stationarity equations
/// of each pattern and keeping the one satisfying every KKT condition.
/// Returns `(beta, b)` with `f(x) = sum_j beta_j k(x_j, x) + b`.
pub struct DenseSvr {
    pub beta: Vec<f64>,
    pub b: f64,
}

pub fn dense_svr(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> DenseSvr {
    let n = y.len();
    let tol = 1e-9 * (1.0 + c);
    let mut state = vec![0u8; n];
    loop {
        if let Some(sol) = try_pattern(k, y, c, eps, &state, tol) {
            return sol;
        }
        // Next pattern in base 5.
        let mut i = 0;
        loop {
            if i == n {
                panic!("no KKT pattern found");
            }
            state[i] += 1;
            if state[i] < 5 {
                break;
            }
            state[i] = 0;
            i += 1;
        }
    }
}

// States: 0 = -C, 1 = free in (-C, 0), 2 = zero, 3 = free in (0, C), 4 = +C.
fn try_pattern(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64, state: &[u8], tol: f64) -> Option<DenseSvr> {
    let n = y.len();
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1 || state[i] == 3).collect();
    let mut beta: Vec<f64> = state
        .iter()
        .map(|&s| match s {
            0 => -c,
            4 => c,
            _ => 0.0,
        })
        .collect();
    let b;
    if free.is_empty() {
        if beta.iter().sum::<f64>().abs() > tol {
            return None;
        }
        // f(x_i) = g_i + b; collect the interval of b allowed by every KKT condition.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g: f64 = (0..n).map(|j| beta[j] * k[i][j]).sum();
            let r0 = y[i] - g;
            match state[i] {
                0 => lo = lo.max(r0 + eps),
                4 => hi = hi.min(r0 - eps),
                _ => {
                    lo = lo.max(r0 - eps);
                    hi = hi.min(r0 + eps);
                }
            }
        }
        if lo > hi + tol {
            return None;
        }
        b = (lo + hi) / 2.0;
    } else {
        // Unknowns: beta_F and b.
        // For i in F: sum_{j in F} K_ij beta_j + b = y_i - s_i eps - sum_{j in B} K_ij beta_j.
        // Equality: sum_F beta_j = -sum_B beta_j.
        let m = free.len();
        let mut a = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for (r, &i) in free.iter().enumerate() {
            for (cidx, &j) in free.iter().enumerate() {
                a[r][cidx] = k[i][j];
            }
            a[r][m] = 1.0;
            let s = if state[i] == 3 { 1.0 } else { -1.0 };
            let fixed: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| k[i][j] * beta[j]).sum();
            rhs[r] = y[i] - s * eps - fixed;
        }
        for cidx in 0..m {
            a[m][cidx] = 1.0;
        }
        rhs[m] = -(0..n).filter(|j| !free.contains(j)).map(|j| beta[j]).sum::<f64>();
        let x = solve_linear(a, rhs)?;
        for (cidx, &j) in free.iter().enumerate() {
            let v = x[cidx];
            // Free means strictly inside the box; a multiplier at a bound belongs to
            // another pattern, where the bias is the midpoint of its feasible interval.
            let ok = if state[j] == 3 { v > tol && v < c - tol } else { v < -tol && v > -c + tol };
            if !ok {
                return None;
            }
            beta[j] = v;
        }
        b = x[m];
    }
    for i in 0..n {
        let f: f64 = (0..n).map(|j| beta[j] * k[i][j]).sum::<f64>() + b;
        let r = y[i] - f;
        let ok = match state[i] {
            0 => r <= -eps + tol,
            4 => r >= eps - tol,
            2 => r.abs() <= eps + tol,
            1 => (r + eps).abs() <= tol.max(1e-7),
            _ => (r - eps).abs() <= tol.max(1e-7),
        };
        if !ok {
            return None;
        }
    }
    Some(DenseSvr { beta, b })
}

/// Student-t CDF at 10 degrees of freedom from published tables.
pub const T10_TABLE: [(f64, f64); 9] = [
    (-3.0, 0.006671827511284783),
    (-1.5, 0.08225366322272008),
    (-0.5, 0.31394680287148646),
    (0.0, 0.5),
    (0.25, 0.596175897131693),
    (0.7745966692414834, 0.771748949598622),
    (1.0, 0.82955343384897),
    (2.228, 0.9749941140914443),
    (4.0, 0.9987408336876317),
];

/// Student-t CDF by the finite series for integer degrees of freedom
/// (Abramowitz & Stegun 26.7.3 and 26.7.4).
pub fn t_cdf_series(t: f64, dof: u32) -> f64 {
    let theta = (t / f64::from(dof).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let a = if dof % 2 == 0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 2;
        while k <= dof - 2 {
            term *= f64::from(k - 1) / f64::from(k) * c * c;
            sum += term;
            k += 2;
        }
        s * sum
    } else {
        let mut sum = 0.0;
        if dof > 1 {
            let mut term = 1.0;
            sum = 1.0;
            let mut k = 3;
            while k <= dof - 2 {
                term *= f64::from(k - 1) / f64::from(k) * c * c;
                sum += term;
                k += 2;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * c * sum)
    };
    0.5 + 0.5 * a
}

/// Largest relative error between analytic and central-difference gradients.
pub fn mlp_gradient_error(point: u64) -> f64 {
    let mut r = rng(100 + point);
    let (n, p) = (12, 5);
    let x = random_matrix(n, p, &mut r);
    // Targets far from any initial output keep every residual nonzero.
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 20.0 } else { -20.0 } + r.gen::<f64>()).collect();
    let rows: Vec<usize> = (0..n).collect();
    let mut model = diary_forecast::models::mlp::MlpModel::initialize(p, &diary_forecast::models::MlpSpec::default(), point);
    let mut params = model.params().to_vec();
    for v in params.iter_mut() {
        *v += r.gen_range(-0.5..0.5);
    }
    model.set_params(&params);
    let mut analytic = vec![0.0; params.len()];
    model.loss_and_gradient(&x, &y, &rows, None, &mut analytic);
    let mut scratch = vec![0.0; params.len()];
    let h = 1e-6;
    let mut num = vec![0.0; params.len()];
    for k in 0..params.len() {
        let mut plus = params.clone();
        plus[k] += h;
        let mut minus = params.clone();
        minus[k] -= h;
        model.set_params(&plus);
        let lp = model.loss_and_gradient(&x, &y, &rows, None, &mut scratch);
        model.set_params(&minus);
        let lm = model.loss_and_gradient(&x, &y, &rows, None, &mut scratch);
        num[k] = (lp - lm) / (2.0 * h);
    }
    let diff: f64 = analytic.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(num.iter().map(|a| a * a).sum::<f64>().sqrt());
    diff / scale
}

/// Fits the SVR on `n_datasets` random problems of 2 to 6 points for both
/// kernels and every default C, and returns the largest prediction gap to the
/// exact dense solution over training rows and random probes.
pub fn svr_dense_qp_deviation(seed: u64, n_datasets: usize) -> f64 {
    use diary_forecast::models::{fit_svr, SvrGrid, SvrParams};
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for dataset in 0..n_datasets {
        let n = 2 + dataset % 5;
        let x = random_matrix(n, 6, &mut r);
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..=12u8))).collect();
        let probes = random_matrix(4, 6, &mut r);
        for kernel in [Kernel::Rbf, Kernel::Linear] {
            for &c in &SvrGrid::default().c {
                // Tight stopping tolerance: this checks the optimum, not the early stop.
                let params = SvrParams {
                    tolerance: 1e-7,
                    ..SvrParams::new(kernel, c)
                };
                let model = fit_svr(&x, &y, &params).unwrap();
                let gamma = model.gamma();
                let k: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| kernel_value(kernel, gamma, x.row(i), x.row(j))).collect())
                    .collect();
                let reference = dense_svr(&k, &y, c, params.epsilon);
                for row in x.rows().chain(probes.rows()) {
                    let want: f64 = (0..n)
                        .map(|j| reference.beta[j] * kernel_value(kernel, gamma, x.row(j), row))
                        .sum::<f64>()
                        + reference.b;
                    worst = worst.max((model.predict_row(row) - want).abs());
                }
            }
        }
    }
    worst
}

/// A grid with a couple of cheap points per learner, for fast end-to-end runs.
pub fn small_grid() -> diary_forecast::models::HyperGrid {
    use diary_forecast::models::{GbtGrid, HyperGrid, MlpSpec, RfGrid, SvrGrid};
    HyperGrid {
        gbt: GbtGrid {
            colsample: vec![0.5, 1.0],
            max_depth: vec![2],
            n_trees: vec![5, 20],
            ..GbtGrid::default()
        },
        svr: SvrGrid {
            kernel: vec![Kernel::Linear],
            c: vec![0.1, 1.0],
            ..SvrGrid::default()
        },
        rf: RfGrid {
            n_trees: vec![5, 10],
            max_split_features: vec![2],
        },
        mlp: MlpSpec {
            epochs: 5,
            ..MlpSpec::default()
        },
    }
}
