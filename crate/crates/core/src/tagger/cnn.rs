//! The convolutional tagger: embedding lookup, two parallel 1-D convolutions
//! (kernels 3 and 5), three deeper convolutions with ReLU and inverted
//! dropout, and a per-token affine map to label logits. Same-padding keeps
//! the output length equal to the input length for any sequence.

use serde::{Deserialize, Serialize};

use crate::rng::Rng;

use super::crf::{viterbi, CrfParams};
use super::{LabelSet, TaggerError, Vocab};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub embed_dim: usize,
    pub parallel_kernels: [usize; 2],
    pub parallel_channels: usize,
    pub deep_layers: usize,
    pub deep_channels: usize,
    pub deep_kernel: usize,
    pub dropout_rate: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            embed_dim: 300,
            parallel_kernels: [3, 5],
            parallel_channels: 128,
            deep_layers: 3,
            deep_channels: 256,
            deep_kernel: 5,
            dropout_rate: 0.5,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let positive = self.embed_dim > 0
            && self.parallel_channels > 0
            && self.deep_channels > 0
            && self.parallel_kernels.iter().all(|k| *k > 0 && k % 2 == 1)
            && self.deep_kernel > 0
            && self.deep_kernel % 2 == 1;
        if !positive {
            return Err(TaggerError::BadConfig(
                "dimensions must be positive and kernels odd".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(TaggerError::BadConfig("dropout rate must lie in [0, 1)".to_string()));
        }
        if self.deep_layers > 0 && self.deep_channels != 2 * self.parallel_channels {
            return Err(TaggerError::BadConfig(
                "deep channels must equal the concatenated parallel channels".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// 1-D convolution with same padding. Weight layout `[out][kernel][in]` so
/// the innermost loop is a contiguous dot product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn init(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut Rng) -> ConvLayer {
        let weight = (0..out_ch * kernel * in_ch)
            .map(|_| rng.uniform(-0.1, 0.1))
            .collect();
        ConvLayer { in_ch, out_ch, kernel, weight, bias: vec![0.0; out_ch] }
    }

    pub fn zeros_like(&self) -> ConvLayer {
        ConvLayer {
            in_ch: self.in_ch,
            out_ch: self.out_ch,
            kernel: self.kernel,
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.out_ch],
        }
    }

    pub fn forward(&self, input: &[f64], t_len: usize) -> Vec<f64> {
        let pad = (self.kernel - 1) / 2;
        let mut out = vec![0.0; t_len * self.out_ch];
        for t in 0..t_len {
            let out_row = &mut out[t * self.out_ch..(t + 1) * self.out_ch];
            out_row.copy_from_slice(&self.bias);
            for dk in 0..self.kernel {
                let src = t + dk;
                if src < pad || src - pad >= t_len {
                    continue;
                }
                let in_row = &input[(src - pad) * self.in_ch..(src - pad + 1) * self.in_ch];
                for (co, slot) in out_row.iter_mut().enumerate() {
                    let w = &self.weight[(co * self.kernel + dk) * self.in_ch..][..self.in_ch];
                    let mut acc = 0.0;
                    for (a, b) in in_row.iter().zip(w) {
                        acc += a * b;
                    }
                    *slot += acc;
                }
            }
        }
        out
    }

    /// Accumulates input, weight, and bias gradients from `d_out`.
    pub fn backward(
        &self,
        input: &[f64],
        t_len: usize,
        d_out: &[f64],
        d_input: &mut [f64],
        grad: &mut ConvLayer,
    ) {
        let pad = (self.kernel - 1) / 2;
        for t in 0..t_len {
            let d_row = &d_out[t * self.out_ch..(t + 1) * self.out_ch];
            for (co, d) in d_row.iter().enumerate() {
                grad.bias[co] += d;
            }
            for dk in 0..self.kernel {
                let src = t + dk;
                if src < pad || src - pad >= t_len {
                    continue;
                }
                let src = src - pad;
                let in_row = &input[src * self.in_ch..(src + 1) * self.in_ch];
                let d_in_row = &mut d_input[src * self.in_ch..(src + 1) * self.in_ch];
                for (co, d) in d_row.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let base = (co * self.kernel + dk) * self.in_ch;
                    let w = &self.weight[base..base + self.in_ch];
                    let g = &mut grad.weight[base..base + self.in_ch];
                    for ci in 0..self.in_ch {
                        d_in_row[ci] += d * w[ci];
                        g[ci] += d * in_row[ci];
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnParams {
    /// `vocab_size × embed_dim`, row per token id.
    pub embed: Vec<f64>,
    pub conv_narrow: ConvLayer,
    pub conv_wide: ConvLayer,
    pub deep: Vec<ConvLayer>,
    /// `deep_channels × k` affine map to logits.
    pub out_weight: Vec<f64>,
    pub out_bias: Vec<f64>,
}

impl CnnParams {
    pub fn init(vocab_size: usize, k: usize, config: &CnnConfig, rng: &mut Rng) -> CnnParams {
        let d = config.embed_dim;
        let pc = config.parallel_channels;
        let dc = config.deep_channels;
        let embed = (0..vocab_size * d).map(|_| rng.uniform(-0.1, 0.1)).collect();
        let conv_narrow = ConvLayer::init(d, pc, config.parallel_kernels[0], rng);
        let conv_wide = ConvLayer::init(d, pc, config.parallel_kernels[1], rng);
        let deep = (0..config.deep_layers)
            .map(|_| ConvLayer::init(dc, dc, config.deep_kernel, rng))
            .collect();
        let out_weight = (0..dc * k).map(|_| rng.uniform(-0.1, 0.1)).collect();
        CnnParams {
            embed,
            conv_narrow,
            conv_wide,
            deep,
            out_weight,
            out_bias: vec![0.0; k],
        }
    }

    pub fn zeros_like(&self) -> CnnParams {
        CnnParams {
            embed: vec![0.0; self.embed.len()],
            conv_narrow: self.conv_narrow.zeros_like(),
            conv_wide: self.conv_wide.zeros_like(),
            deep: self.deep.iter().map(ConvLayer::zeros_like).collect(),
            out_weight: vec![0.0; self.out_weight.len()],
            out_bias: vec![0.0; self.out_bias.len()],
        }
    }

    pub fn group_names(&self) -> Vec<String> {
        let mut names = vec![
            "embed".to_string(),
            "conv_narrow.weight".to_string(),
            "conv_narrow.bias".to_string(),
            "conv_wide.weight".to_string(),
            "conv_wide.bias".to_string(),
        ];
        for i in 0..self.deep.len() {
            names.push(format!("deep{i}.weight"));
            names.push(format!("deep{i}.bias"));
        }
        names.push("out.weight".to_string());
        names.push("out.bias".to_string());
        names
    }

    pub fn groups(&self) -> Vec<&Vec<f64>> {
        let mut groups = vec![
            &self.embed,
            &self.conv_narrow.weight,
            &self.conv_narrow.bias,
            &self.conv_wide.weight,
            &self.conv_wide.bias,
        ];
        for layer in &self.deep {
            groups.push(&layer.weight);
            groups.push(&layer.bias);
        }
        groups.push(&self.out_weight);
        groups.push(&self.out_bias);
        groups
    }

    pub fn groups_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut groups = vec![
            &mut self.embed,
            &mut self.conv_narrow.weight,
            &mut self.conv_narrow.bias,
            &mut self.conv_wide.weight,
            &mut self.conv_wide.bias,
        ];
        for layer in &mut self.deep {
            groups.push(&mut layer.weight);
            groups.push(&mut layer.bias);
        }
        groups.push(&mut self.out_weight);
        groups.push(&mut self.out_bias);
        groups
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug)]
pub struct CnnCache {
    pub t_len: usize,
    pub ids: Vec<usize>,
    pub x0: Vec<f64>,
    pub act_narrow: Vec<f64>,
    pub act_wide: Vec<f64>,
    /// Input to each deep layer (`deep_in[0]` is the concatenation).
    pub deep_in: Vec<Vec<f64>>,
    /// Post-ReLU activations of each deep layer (before dropout).
    pub deep_act: Vec<Vec<f64>>,
    /// Per-element inverted-dropout multipliers (`None` outside train mode).
    pub deep_mask: Vec<Option<Vec<f64>>>,
    /// Final feature matrix feeding the output affine map.
    pub features: Vec<f64>,
}

fn relu_inplace(xs: &mut [f64]) {
    for x in xs {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Emission scores for one id sequence. In train mode, `rng` drives the
/// dropout masks; eval mode is deterministic and applies no scaling.
pub fn cnn_forward(
    ids: &[usize],
    params: &CnnParams,
    config: &CnnConfig,
    k: usize,
    mode: Mode,
    rng: Option<&mut Rng>,
) -> Result<(Vec<f64>, CnnCache), TaggerError> {
    let t_len = ids.len();
    debug_assert!(t_len >= 1);
    let d = config.embed_dim;
    let vocab_size = params.embed.len() / d;
    let mut x0 = vec![0.0; t_len * d];
    for (t, &id) in ids.iter().enumerate() {
        if id >= vocab_size {
            return Err(TaggerError::BadTokenId { id, size: vocab_size });
        }
        x0[t * d..(t + 1) * d].copy_from_slice(&params.embed[id * d..(id + 1) * d]);
    }

    let mut act_narrow = params.conv_narrow.forward(&x0, t_len);
    relu_inplace(&mut act_narrow);
    let mut act_wide = params.conv_wide.forward(&x0, t_len);
    relu_inplace(&mut act_wide);

    let pc = config.parallel_channels;
    let dc = 2 * pc;
    let mut h = vec![0.0; t_len * dc];
    for t in 0..t_len {
        h[t * dc..t * dc + pc].copy_from_slice(&act_narrow[t * pc..(t + 1) * pc]);
        h[t * dc + pc..(t + 1) * dc].copy_from_slice(&act_wide[t * pc..(t + 1) * pc]);
    }

    let mut deep_in = Vec::with_capacity(params.deep.len());
    let mut deep_act = Vec::with_capacity(params.deep.len());
    let mut deep_mask = Vec::with_capacity(params.deep.len());
    let mut rng = rng;
    for layer in &params.deep {
        deep_in.push(h.clone());
        let mut act = layer.forward(&h, t_len);
        relu_inplace(&mut act);
        deep_act.push(act.clone());
        let mask = match (mode, rng.as_deref_mut()) {
            (Mode::Train, Some(rng)) if config.dropout_rate > 0.0 => {
                let keep = 1.0 - config.dropout_rate;
                let mask: Vec<f64> = act
                    .iter()
                    .map(|_| if rng.next_f64() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (a, m) in act.iter_mut().zip(&mask) {
                    *a *= m;
                }
                Some(mask)
            }
            _ => None,
        };
        deep_mask.push(mask);
        h = act;
    }

    let features = h;
    let feat_dim = if params.deep.is_empty() { dc } else { config.deep_channels };
    let mut emissions = vec![0.0; t_len * k];
    for t in 0..t_len {
        let f_row = &features[t * feat_dim..(t + 1) * feat_dim];
        let e_row = &mut emissions[t * k..(t + 1) * k];
        e_row.copy_from_slice(&params.out_bias);
        for (c, f) in f_row.iter().enumerate() {
            if *f == 0.0 {
                continue;
            }
            let w = &params.out_weight[c * k..(c + 1) * k];
            for (e, wv) in e_row.iter_mut().zip(w) {
                *e += f * wv;
            }
        }
    }

    Ok((
        emissions,
        CnnCache {
            t_len,
            ids: ids.to_vec(),
            x0,
            act_narrow,
            act_wide,
            deep_in,
            deep_act,
            deep_mask,
            features,
        },
    ))
}

/// Accumulates parameter gradients for `d_emissions` into `grads`.
pub fn cnn_backward(
    params: &CnnParams,
    config: &CnnConfig,
    cache: &CnnCache,
    d_emissions: &[f64],
    grads: &mut CnnParams,
) {
    let t_len = cache.t_len;
    let k = params.out_bias.len();
    let pc = config.parallel_channels;
    let dc = 2 * pc;
    let feat_dim = if params.deep.is_empty() { dc } else { config.deep_channels };

    // Output affine map.
    let mut d_features = vec![0.0; t_len * feat_dim];
    for t in 0..t_len {
        let d_row = &d_emissions[t * k..(t + 1) * k];
        let f_row = &cache.features[t * feat_dim..(t + 1) * feat_dim];
        for (y, d) in d_row.iter().enumerate() {
            grads.out_bias[y] += d;
        }
        let df_row = &mut d_features[t * feat_dim..(t + 1) * feat_dim];
        for c in 0..feat_dim {
            let w = &params.out_weight[c * k..(c + 1) * k];
            let gw = &mut grads.out_weight[c * k..(c + 1) * k];
            let f = f_row[c];
            let mut acc = 0.0;
            for (y, d) in d_row.iter().enumerate() {
                acc += d * w[y];
                gw[y] += d * f;
            }
            df_row[c] += acc;
        }
    }

    // Deep stack, reversed.
    let mut d_h = d_features;
    for (i, layer) in params.deep.iter().enumerate().rev() {
        if let Some(mask) = &cache.deep_mask[i] {
            for (d, m) in d_h.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        // ReLU gradient uses the pre-dropout activations.
        for (d, a) in d_h.iter_mut().zip(&cache.deep_act[i]) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let mut d_in = vec![0.0; t_len * dc];
        layer.backward(&cache.deep_in[i], t_len, &d_h, &mut d_in, &mut grads.deep[i]);
        d_h = d_in;
    }

    // Split the concatenation and run the parallel branches.
    let mut d_narrow = vec![0.0; t_len * pc];
    let mut d_wide = vec![0.0; t_len * pc];
    for t in 0..t_len {
        d_narrow[t * pc..(t + 1) * pc].copy_from_slice(&d_h[t * dc..t * dc + pc]);
        d_wide[t * pc..(t + 1) * pc].copy_from_slice(&d_h[t * dc + pc..(t + 1) * dc]);
    }
    for (d, a) in d_narrow.iter_mut().zip(&cache.act_narrow) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }
    for (d, a) in d_wide.iter_mut().zip(&cache.act_wide) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }
    let d = config.embed_dim;
    let mut d_x0 = vec![0.0; t_len * d];
    params
        .conv_narrow
        .backward(&cache.x0, t_len, &d_narrow, &mut d_x0, &mut grads.conv_narrow);
    params
        .conv_wide
        .backward(&cache.x0, t_len, &d_wide, &mut d_x0, &mut grads.conv_wide);

    // Embedding rows.
    for (t, &id) in cache.ids.iter().enumerate() {
        let g = &mut grads.embed[id * d..(id + 1) * d];
        let src = &d_x0[t * d..(t + 1) * d];
        for (gv, dv) in g.iter_mut().zip(src) {
            *gv += dv;
        }
    }
}

/// The log-softmax CNN tagger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub vocab: Vocab,
    pub labels: LabelSet,
    pub params: CnnParams,
    pub train_config: super::TrainConfig,
}

/// The CNN with a CRF output layer and Viterbi decoding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnnCrfModel {
    pub config: CnnConfig,
    pub vocab: Vocab,
    pub labels: LabelSet,
    pub params: CnnParams,
    pub crf: CrfParams,
    pub train_config: super::TrainConfig,
}

impl CnnModel {
    pub fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.id(t)).collect()
    }

    pub(crate) fn decode(&self, tokens: &[String]) -> Vec<usize> {
        let ids = self.token_ids(tokens);
        let k = self.labels.k();
        let (emissions, _) = cnn_forward(&ids, &self.params, &self.config, k, Mode::Eval, None)
            .expect("vocabulary ids are in range");
        argmax_rows(&emissions, ids.len(), k)
    }
}

impl CnnCrfModel {
    pub fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.vocab.id(t)).collect()
    }

    pub(crate) fn decode(&self, tokens: &[String]) -> Vec<usize> {
        let ids = self.token_ids(tokens);
        let k = self.labels.k();
        let (emissions, _) = cnn_forward(&ids, &self.params, &self.config, k, Mode::Eval, None)
            .expect("vocabulary ids are in range");
        viterbi(&emissions, ids.len(), &self.crf).0
    }
}

/// Per-row argmax with smallest-index tie-breaking.
pub fn argmax_rows(scores: &[f64], t_len: usize, k: usize) -> Vec<usize> {
    (0..t_len)
        .map(|t| {
            let row = &scores[t * k..(t + 1) * k];
            let mut best = 0;
            for (y, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = y;
                }
            }
            best
        })
        .collect()
}
