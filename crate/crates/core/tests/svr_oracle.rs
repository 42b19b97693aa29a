mod common;

use common::{random_matrix, rng, svr_dense_qp_deviation};
use diary_forecast::models::{fit_svr, Kernel, SvrParams};
use rand::Rng;

fn population_gamma(x: &diary_forecast::matrix::Matrix) -> f64 {
    let (n, p) = (x.n_rows() as f64, x.n_cols());
    let mut total = 0.0;
    for j in 0..p {
        let col: Vec<f64> = x.column(j).collect();
        let mean = col.iter().sum::<f64>() / n;
        total += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    }
    // 1 / (p * mean per-column variance) = 1 / total variance.
    1.0 / total
}

#[test]
fn matches_dense_qp_on_small_problems() {
    let worst = svr_dense_qp_deviation(2024, 20);
    eprintln!("largest deviation from the dense solution: {worst:.3e}");
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn rbf_gamma_from_population_variance() {
    let x = random_matrix(6, 6, &mut rng(3));
    let model = fit_svr(&x, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &SvrParams::new(Kernel::Rbf, 1.0)).unwrap();
    assert!((model.gamma() - population_gamma(&x)).abs() < 1e-12);
}

#[test]
fn two_point_hand_case() {
    let x = diary_forecast::matrix::Matrix::from_rows(&[[-1.0], [1.0]]);
    let m = fit_svr(&x, &[-1.0, 1.0], &SvrParams::new(Kernel::Linear, 10.0)).unwrap();
    for v in [-2.0, -1.0, 0.0, 0.3, 1.0, 2.0] {
        assert!((m.predict_row(&[v]) - 0.9 * v).abs() < 1e-6);
    }
}

#[test]
fn kkt_conditions_on_a_larger_problem() {
    let mut r = rng(77);
    let x = random_matrix(80, 5, &mut r);
    let y: Vec<f64> = x.rows().map(|row| 6.0 * row[0] + 3.0 * row[1] + r.gen::<f64>()).collect();
    for kernel in [Kernel::Rbf, Kernel::Linear] {
        let c = 3.0;
        let m = fit_svr(&x, &y, &SvrParams::new(kernel, c)).unwrap();
        let sum: f64 = m.alpha().iter().zip(m.alpha_star()).map(|(a, b)| a - b).sum();
        assert!(sum.abs() < 1e-9);
        for (i, row) in x.rows().enumerate() {
            let resid = y[i] - m.predict_row(row);
            let (a, b) = (m.alpha()[i], m.alpha_star()[i]);
            assert!((0.0..=c).contains(&a) && (0.0..=c).contains(&b));
            if a == 0.0 && b == 0.0 {
                assert!(resid.abs() <= 0.1 + 1e-3, "{kernel}: {resid}");
            }
            if resid.abs() > 0.1 + 1e-3 {
                // Slack is only allowed at the box bound.
                assert!(a == c || b == c, "{kernel}: slack {resid} with multipliers {a}, {b}");
            }
        }
    }
}
