//! Chance-level reference: the expanding mean of a subject's earlier labels.

/// `labels` must be date-ordered for one subject. The i-th prediction is the
/// mean of labels `0..i`; the first falls back to `global_train_mean`.
pub fn baseline_rolling_mean(labels: &[f64], global_train_mean: f64) -> Vec<f64> {
    let mut sum = 0.0;
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let pred = if i == 0 { global_train_mean } else { sum / i as f64 };
            sum += y;
            pred
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expanding_mean_of_earlier_labels() {
        let pred = baseline_rolling_mean(&[2.0, 4.0, 6.0], 5.0);
        assert_eq!(pred, [5.0, 2.0, 3.0]);
        let mae = [2.0, 4.0, 6.0].iter().zip(&pred).map(|(y, p)| (y - p).abs()).sum::<f64>() / 3.0;
        assert!((mae - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_label_uses_global_mean() {
        assert_eq!(baseline_rolling_mean(&[7.0], 4.5), [4.5]);
        assert!(baseline_rolling_mean(&[], 4.5).is_empty());
    }

    #[test]
    fn constant_labels() {
        assert_eq!(baseline_rolling_mean(&[3.0; 3], 3.0), [3.0; 3]);
    }
}
