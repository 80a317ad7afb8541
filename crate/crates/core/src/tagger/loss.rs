//! Token-level negative log-likelihood under a log-softmax output layer.

use super::crf::log_sum_exp;

/// Mean over unmasked tokens of `-log softmax(emissions[t])[gold[t]]`.
/// `mask[t] = false` drops padding positions from the mean.
pub fn log_softmax_nll(
    emissions: &[f64],
    t_len: usize,
    k: usize,
    gold: &[usize],
    mask: Option<&[bool]>,
) -> f64 {
    log_softmax_nll_grad(emissions, t_len, k, gold, mask).0
}

/// Loss plus gradient with respect to the emissions.
pub fn log_softmax_nll_grad(
    emissions: &[f64],
    t_len: usize,
    k: usize,
    gold: &[usize],
    mask: Option<&[bool]>,
) -> (f64, Vec<f64>) {
    debug_assert_eq!(emissions.len(), t_len * k);
    debug_assert_eq!(gold.len(), t_len);
    let active = |t: usize| mask.map(|m| m[t]).unwrap_or(true);
    let count = (0..t_len).filter(|t| active(*t)).count().max(1);
    let scale = 1.0 / count as f64;

    let mut loss = 0.0;
    let mut grad = vec![0.0; t_len * k];
    for t in 0..t_len {
        if !active(t) {
            continue;
        }
        let row = &emissions[t * k..(t + 1) * k];
        let lse = log_sum_exp(row);
        loss += (lse - row[gold[t]]) * scale;
        for y in 0..k {
            let softmax = (row[y] - lse).exp();
            grad[t * k + y] = (softmax - f64::from(gold[t] == y)) * scale;
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_loss_is_ln_k() {
        let emissions = vec![0.3; 3 * 4];
        let loss = log_softmax_nll(&emissions, 3, 4, &[0, 1, 3], None);
        assert!((loss - (4.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_drive_loss_to_zero() {
        let mut emissions = vec![0.0; 2 * 3];
        emissions[0 * 3 + 2] = 60.0;
        emissions[1 * 3 + 0] = 60.0;
        let loss = log_softmax_nll(&emissions, 2, 3, &[2, 0], None);
        assert!(loss < 1e-12);
    }

    #[test]
    fn matches_scalar_reference_on_random_case() {
        // Fixed 3x4 emissions; reference below recomputes with explicit sums.
        let emissions = [
            0.51, -1.2, 0.33, 2.0, //
            -0.4, 0.9, 1.5, -2.2, //
            0.05, 0.0, -0.7, 1.1,
        ];
        let gold = [3usize, 2, 0];
        let loss = log_softmax_nll(&emissions, 3, 4, &gold, None);
        let mut expected = 0.0;
        for (t, g) in gold.iter().enumerate() {
            let row = &emissions[t * 4..(t + 1) * 4];
            let denom: f64 = row.iter().map(|x| x.exp()).sum();
            expected += -(row[*g].exp() / denom).ln();
        }
        expected /= 3.0;
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn mask_drops_positions_from_mean() {
        let emissions = vec![0.0; 3 * 2];
        let full = log_softmax_nll(&emissions, 3, 2, &[0, 1, 0], None);
        let masked = log_softmax_nll(&emissions, 3, 2, &[0, 1, 0], Some(&[true, false, true]));
        assert!((full - (2.0f64).ln()).abs() < 1e-12);
        assert!((masked - (2.0f64).ln()).abs() < 1e-12);
        // Gradient of the masked position is exactly zero.
        let (_, grad) = log_softmax_nll_grad(&emissions, 3, 2, &[0, 1, 0], Some(&[true, false, true]));
        assert_eq!(&grad[2..4], &[0.0, 0.0]);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let mut emissions = vec![0.4, -0.3, 1.2, 0.1, -0.9, 0.6];
        let gold = [2usize, 0];
        let (_, grad) = log_softmax_nll_grad(&emissions, 2, 3, &gold, None);
        let eps = 1e-6;
        for i in 0..emissions.len() {
            let orig = emissions[i];
            emissions[i] = orig + eps;
            let up = log_softmax_nll(&emissions, 2, 3, &gold, None);
            emissions[i] = orig - eps;
            let down = log_softmax_nll(&emissions, 2, 3, &gold, None);
            emissions[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            assert!((grad[i] - numeric).abs() < 1e-8, "coord {i}");
        }
    }
}
