//! Linear-chain CRF layer: log-partition by the forward algorithm, exact
//! gradients by forward-backward, and Viterbi decoding.
//!
//! A path through emissions `e` scores
//! `start[y0] + e[0][y0] + Σ_t (trans[y_{t-1}][y_t] + e[t][y_t]) + stop[y_T]`,
//! accumulated left to right in exactly that order so that small-instance
//! enumeration reproduces scores bit for bit.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfParams {
    pub k: usize,
    /// Row-major `[from * k + to]`.
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(k: usize) -> CrfParams {
        CrfParams {
            k,
            transitions: vec![0.0; k * k],
            start: vec![0.0; k],
            stop: vec![0.0; k],
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Log of the summed exponentiated scores of all `k^T` label sequences.
pub fn log_partition(emissions: &[f64], t_len: usize, crf: &CrfParams) -> f64 {
    let k = crf.k;
    debug_assert_eq!(emissions.len(), t_len * k);
    let mut alpha: Vec<f64> = (0..k).map(|y| crf.start[y] + emissions[y]).collect();
    let mut scratch = vec![0.0; k];
    for t in 1..t_len {
        let mut next = vec![0.0; k];
        for (y, slot) in next.iter_mut().enumerate() {
            for y_prev in 0..k {
                scratch[y_prev] = alpha[y_prev] + crf.transitions[y_prev * k + y];
            }
            *slot = log_sum_exp(&scratch) + emissions[t * k + y];
        }
        alpha = next;
    }
    let finals: Vec<f64> = (0..k).map(|y| alpha[y] + crf.stop[y]).collect();
    log_sum_exp(&finals)
}

/// Score of one label path, accumulated left to right.
pub fn path_score(emissions: &[f64], t_len: usize, crf: &CrfParams, path: &[usize]) -> f64 {
    debug_assert_eq!(path.len(), t_len);
    let k = crf.k;
    let mut score = crf.start[path[0]] + emissions[path[0]];
    for t in 1..t_len {
        score += crf.transitions[path[t - 1] * k + path[t]];
        score += emissions[t * k + path[t]];
    }
    score + crf.stop[path[t_len - 1]]
}

/// Negative log-likelihood of the gold path.
pub fn nll(emissions: &[f64], t_len: usize, crf: &CrfParams, gold: &[usize]) -> f64 {
    log_partition(emissions, t_len, crf) - path_score(emissions, t_len, crf, gold)
}

#[derive(Debug, Clone)]
pub struct CrfGrads {
    pub d_emissions: Vec<f64>,
    pub d_transitions: Vec<f64>,
    pub d_start: Vec<f64>,
    pub d_stop: Vec<f64>,
}

/// Loss plus exact gradients via forward-backward marginals: expected counts
/// under the model minus observed gold counts.
pub fn nll_grad(emissions: &[f64], t_len: usize, crf: &CrfParams, gold: &[usize]) -> (f64, CrfGrads) {
    let k = crf.k;
    // Forward.
    let mut alpha = vec![0.0; t_len * k];
    for y in 0..k {
        alpha[y] = crf.start[y] + emissions[y];
    }
    let mut scratch = vec![0.0; k];
    for t in 1..t_len {
        for y in 0..k {
            for y_prev in 0..k {
                scratch[y_prev] = alpha[(t - 1) * k + y_prev] + crf.transitions[y_prev * k + y];
            }
            alpha[t * k + y] = log_sum_exp(&scratch) + emissions[t * k + y];
        }
    }
    let finals: Vec<f64> = (0..k).map(|y| alpha[(t_len - 1) * k + y] + crf.stop[y]).collect();
    let log_z = log_sum_exp(&finals);

    // Backward.
    let mut beta = vec![0.0; t_len * k];
    for y in 0..k {
        beta[(t_len - 1) * k + y] = crf.stop[y];
    }
    for t in (0..t_len - 1).rev() {
        for y in 0..k {
            for y_next in 0..k {
                scratch[y_next] = crf.transitions[y * k + y_next]
                    + emissions[(t + 1) * k + y_next]
                    + beta[(t + 1) * k + y_next];
            }
            beta[t * k + y] = log_sum_exp(&scratch);
        }
    }

    let mut grads = CrfGrads {
        d_emissions: vec![0.0; t_len * k],
        d_transitions: vec![0.0; k * k],
        d_start: vec![0.0; k],
        d_stop: vec![0.0; k],
    };

    // Unary marginals → emission, start, stop gradients.
    for t in 0..t_len {
        for y in 0..k {
            let marginal = (alpha[t * k + y] + beta[t * k + y] - log_z).exp();
            grads.d_emissions[t * k + y] = marginal - f64::from(gold[t] == y);
            if t == 0 {
                grads.d_start[y] = marginal - f64::from(gold[0] == y);
            }
            if t == t_len - 1 {
                grads.d_stop[y] = marginal - f64::from(gold[t_len - 1] == y);
            }
        }
    }
    // Pairwise marginals → transition gradients.
    for t in 1..t_len {
        for y_prev in 0..k {
            for y in 0..k {
                let marginal = (alpha[(t - 1) * k + y_prev]
                    + crf.transitions[y_prev * k + y]
                    + emissions[t * k + y]
                    + beta[t * k + y]
                    - log_z)
                    .exp();
                grads.d_transitions[y_prev * k + y] += marginal;
            }
        }
        grads.d_transitions[gold[t - 1] * k + gold[t]] -= 1.0;
    }

    let loss = log_z - path_score(emissions, t_len, crf, gold);
    (loss, grads)
}

/// Maximum-score path. Ties resolve to the smallest label index at every
/// backtracking step.
pub fn viterbi(emissions: &[f64], t_len: usize, crf: &CrfParams) -> (Vec<usize>, f64) {
    let k = crf.k;
    debug_assert!(t_len >= 1);
    let mut delta: Vec<f64> = (0..k).map(|y| crf.start[y] + emissions[y]).collect();
    let mut psi = vec![0usize; t_len * k];
    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; k];
        for y in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut best_prev = 0;
            for y_prev in 0..k {
                let score = delta[y_prev] + crf.transitions[y_prev * k + y];
                if score > best {
                    best = score;
                    best_prev = y_prev;
                }
            }
            next[y] = best + emissions[t * k + y];
            psi[t * k + y] = best_prev;
        }
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for y in 0..k {
        let score = delta[y] + crf.stop[y];
        if score > best {
            best = score;
            last = y;
        }
    }
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = last;
    for t in (0..t_len - 1).rev() {
        path[t] = psi[(t + 1) * k + path[t + 1]];
    }
    (path, best)
}
