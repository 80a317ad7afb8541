//! Mini-batch training with adaptive-moment descent, seeded shuffling, and
//! early stopping on dev entity-F1.

use serde::{Deserialize, Serialize};

use crate::annotate::BioLabel;
use crate::eval::{entity_counts_from_labels, PairCounts};
use crate::rng::Rng;

use super::cnn::{cnn_backward, cnn_forward, CnnConfig, CnnModel, CnnCrfModel, CnnParams, Mode};
use super::crf::{self, CrfParams};
use super::feats::{linear_emissions, linear_emissions_backward, FeatureIndex, LinearCrfModel};
use super::loss::log_softmax_nll_grad;
use super::{LabelSet, ModelKind, Sequence, TaggerError, TaggerModel, Vocab};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub rng_seed: u64,
    pub vocab_min_freq: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 10,
            patience: 2,
            rng_seed: 42,
            vocab_min_freq: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_precision: f64,
    pub dev_recall: f64,
    pub dev_f1: f64,
}

pub(crate) enum PreparedInput {
    Ids(Vec<usize>),
    Features(Vec<Vec<usize>>),
}

pub(crate) struct Prepared {
    pub input: PreparedInput,
    pub gold: Vec<usize>,
}

/// Everything the shared training loop needs from a concrete model.
pub(crate) trait Fittable {
    type Grads;

    fn labels(&self) -> &LabelSet;
    fn prepare(&self, seq: &Sequence) -> Prepared;
    fn zero_grads(&self) -> Self::Grads;
    fn reset_grads(grads: &mut Self::Grads);
    fn grad_views(grads: &Self::Grads) -> Vec<&[f64]>;
    fn param_groups_mut(&mut self) -> Vec<&mut Vec<f64>>;
    fn group_names(&self) -> Vec<String>;
    /// Sequence loss; parameter gradients accumulate into `grads`. A `None`
    /// dropout generator disables dropout (used for checking and eval).
    fn accumulate(&self, p: &Prepared, grads: &mut Self::Grads, dropout: Option<&mut Rng>) -> f64;
    fn loss_only(&self, p: &Prepared) -> f64;
    fn decode_prepared(&self, p: &Prepared) -> Vec<usize>;
}

pub(crate) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub(crate) fn new(sizes: &[usize], lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: sizes.iter().map(|s| vec![0.0; *s]).collect(),
            v: sizes.iter().map(|s| vec![0.0; *s]).collect(),
        }
    }

    pub(crate) fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[&[f64]], scale: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..param.len() {
                let g = grad[i] * scale;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

fn snapshot<M: Fittable>(model: &mut M) -> Vec<Vec<f64>> {
    model.param_groups_mut().iter().map(|g| (**g).clone()).collect()
}

fn restore<M: Fittable>(model: &mut M, snap: &[Vec<f64>]) {
    for (group, saved) in model.param_groups_mut().into_iter().zip(snap) {
        group.copy_from_slice(saved);
    }
}

fn dev_entity_prf<M: Fittable>(
    model: &M,
    dev_prepared: &[Prepared],
    dev_seqs: &[Sequence],
) -> (f64, f64, f64) {
    let labels = model.labels();
    let mut counts = PairCounts::default();
    for (p, seq) in dev_prepared.iter().zip(dev_seqs) {
        let pred: Vec<BioLabel> = model
            .decode_prepared(p)
            .into_iter()
            .map(|id| labels.label(id))
            .collect();
        counts.add(
            entity_counts_from_labels(&pred, &seq.labels, true)
                .expect("prepared sequences are aligned"),
        );
    }
    counts.prf()
}

pub(crate) fn fit<M: Fittable>(
    model: &mut M,
    train_seqs: &[Sequence],
    dev_seqs: &[Sequence],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, TaggerError> {
    if train_seqs.is_empty() {
        return Err(TaggerError::EmptyTrainSet);
    }
    for seq in train_seqs.iter().chain(dev_seqs) {
        if seq.tokens.len() != seq.labels.len() {
            return Err(TaggerError::LabelMismatch {
                tokens: seq.tokens.len(),
                labels: seq.labels.len(),
            });
        }
    }
    let prepared: Vec<Prepared> = train_seqs.iter().map(|s| model.prepare(s)).collect();
    let dev_prepared: Vec<Prepared> = dev_seqs.iter().map(|s| model.prepare(s)).collect();

    let sizes: Vec<usize> = model.param_groups_mut().iter().map(|g| g.len()).collect();
    let mut adam = Adam::new(&sizes, cfg.learning_rate);
    let mut grads = model.zero_grads();
    let root = Rng::new(cfg.rng_seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();

    let mut history = Vec::new();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_snapshot: Option<Vec<Vec<f64>>> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        root.derive(&format!("shuffle:{epoch}")).shuffle(&mut order);
        let mut dropout_rng = root.derive(&format!("dropout:{epoch}"));
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            M::reset_grads(&mut grads);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += model.accumulate(&prepared[i], &mut grads, Some(&mut dropout_rng));
            }
            if !batch_loss.is_finite() {
                return Err(TaggerError::Divergence { epoch });
            }
            let views = M::grad_views(&grads);
            let mut params = model.param_groups_mut();
            adam.step(&mut params, &views, 1.0 / batch.len() as f64);
            loss_sum += batch_loss;
        }
        let train_loss = loss_sum / prepared.len() as f64;
        let (dev_precision, dev_recall, dev_f1) = if dev_prepared.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            dev_entity_prf(model, &dev_prepared, dev_seqs)
        };
        history.push(EpochStats { epoch, train_loss, dev_precision, dev_recall, dev_f1 });

        if !dev_prepared.is_empty() {
            if dev_f1 > best_f1 {
                best_f1 = dev_f1;
                best_snapshot = Some(snapshot(model));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    if let Some(snap) = best_snapshot {
        restore(model, &snap);
    }
    Ok(history)
}

impl CnnModel {
    pub(crate) fn init(
        train_seqs: &[Sequence],
        config: &CnnConfig,
        cfg: &TrainConfig,
    ) -> Result<CnnModel, TaggerError> {
        config.validate()?;
        let vocab = Vocab::build(train_seqs, cfg.vocab_min_freq);
        let labels = LabelSet::standard();
        let mut rng = Rng::new(cfg.rng_seed).derive("init");
        let params = CnnParams::init(vocab.size(), labels.k(), config, &mut rng);
        Ok(CnnModel {
            config: config.clone(),
            vocab,
            labels,
            params,
            train_config: cfg.clone(),
        })
    }
}

impl Fittable for CnnModel {
    type Grads = CnnParams;

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn prepare(&self, seq: &Sequence) -> Prepared {
        Prepared {
            input: PreparedInput::Ids(self.token_ids(&seq.tokens)),
            gold: seq.labels.iter().map(|l| self.labels.id(*l)).collect(),
        }
    }

    fn zero_grads(&self) -> CnnParams {
        self.params.zeros_like()
    }

    fn reset_grads(grads: &mut CnnParams) {
        for group in grads.groups_mut() {
            group.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn grad_views(grads: &CnnParams) -> Vec<&[f64]> {
        grads.groups().into_iter().map(Vec::as_slice).collect()
    }

    fn param_groups_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.params.groups_mut()
    }

    fn group_names(&self) -> Vec<String> {
        self.params.group_names()
    }

    fn accumulate(&self, p: &Prepared, grads: &mut CnnParams, dropout: Option<&mut Rng>) -> f64 {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let mode = if dropout.is_some() { Mode::Train } else { Mode::Eval };
        let (emissions, cache) =
            cnn_forward(ids, &self.params, &self.config, k, mode, dropout)
                .expect("prepared ids are in range");
        let (loss, d_emissions) = log_softmax_nll_grad(&emissions, ids.len(), k, &p.gold, None);
        cnn_backward(&self.params, &self.config, &cache, &d_emissions, grads);
        loss
    }

    fn loss_only(&self, p: &Prepared) -> f64 {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let (emissions, _) =
            cnn_forward(ids, &self.params, &self.config, k, Mode::Eval, None)
                .expect("prepared ids are in range");
        super::loss::log_softmax_nll(&emissions, ids.len(), k, &p.gold, None)
    }

    fn decode_prepared(&self, p: &Prepared) -> Vec<usize> {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let (emissions, _) =
            cnn_forward(ids, &self.params, &self.config, k, Mode::Eval, None)
                .expect("prepared ids are in range");
        super::cnn::argmax_rows(&emissions, ids.len(), k)
    }
}

pub(crate) struct CnnCrfGrads {
    pub cnn: CnnParams,
    pub crf: CrfParams,
}

impl CnnCrfModel {
    pub(crate) fn init(
        train_seqs: &[Sequence],
        config: &CnnConfig,
        cfg: &TrainConfig,
    ) -> Result<CnnCrfModel, TaggerError> {
        config.validate()?;
        let vocab = Vocab::build(train_seqs, cfg.vocab_min_freq);
        let labels = LabelSet::standard();
        let mut rng = Rng::new(cfg.rng_seed).derive("init");
        let params = CnnParams::init(vocab.size(), labels.k(), config, &mut rng);
        let crf = CrfParams::zeros(labels.k());
        Ok(CnnCrfModel {
            config: config.clone(),
            vocab,
            labels,
            params,
            crf,
            train_config: cfg.clone(),
        })
    }
}

impl Fittable for CnnCrfModel {
    type Grads = CnnCrfGrads;

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn prepare(&self, seq: &Sequence) -> Prepared {
        Prepared {
            input: PreparedInput::Ids(self.token_ids(&seq.tokens)),
            gold: seq.labels.iter().map(|l| self.labels.id(*l)).collect(),
        }
    }

    fn zero_grads(&self) -> CnnCrfGrads {
        CnnCrfGrads { cnn: self.params.zeros_like(), crf: CrfParams::zeros(self.labels.k()) }
    }

    fn reset_grads(grads: &mut CnnCrfGrads) {
        for group in grads.cnn.groups_mut() {
            group.iter_mut().for_each(|v| *v = 0.0);
        }
        grads.crf.transitions.iter_mut().for_each(|v| *v = 0.0);
        grads.crf.start.iter_mut().for_each(|v| *v = 0.0);
        grads.crf.stop.iter_mut().for_each(|v| *v = 0.0);
    }

    fn grad_views(grads: &CnnCrfGrads) -> Vec<&[f64]> {
        let mut views: Vec<&[f64]> = grads.cnn.groups().into_iter().map(Vec::as_slice).collect();
        views.push(&grads.crf.transitions);
        views.push(&grads.crf.start);
        views.push(&grads.crf.stop);
        views
    }

    fn param_groups_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut groups = self.params.groups_mut();
        groups.push(&mut self.crf.transitions);
        groups.push(&mut self.crf.start);
        groups.push(&mut self.crf.stop);
        groups
    }

    fn group_names(&self) -> Vec<String> {
        let mut names = self.params.group_names();
        names.push("crf.transitions".to_string());
        names.push("crf.start".to_string());
        names.push("crf.stop".to_string());
        names
    }

    fn accumulate(&self, p: &Prepared, grads: &mut CnnCrfGrads, dropout: Option<&mut Rng>) -> f64 {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let mode = if dropout.is_some() { Mode::Train } else { Mode::Eval };
        let (emissions, cache) =
            cnn_forward(ids, &self.params, &self.config, k, mode, dropout)
                .expect("prepared ids are in range");
        let (loss, crf_grads) = crf::nll_grad(&emissions, ids.len(), &self.crf, &p.gold);
        for (g, d) in grads.crf.transitions.iter_mut().zip(&crf_grads.d_transitions) {
            *g += d;
        }
        for (g, d) in grads.crf.start.iter_mut().zip(&crf_grads.d_start) {
            *g += d;
        }
        for (g, d) in grads.crf.stop.iter_mut().zip(&crf_grads.d_stop) {
            *g += d;
        }
        cnn_backward(&self.params, &self.config, &cache, &crf_grads.d_emissions, &mut grads.cnn);
        loss
    }

    fn loss_only(&self, p: &Prepared) -> f64 {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let (emissions, _) =
            cnn_forward(ids, &self.params, &self.config, k, Mode::Eval, None)
                .expect("prepared ids are in range");
        crf::nll(&emissions, ids.len(), &self.crf, &p.gold)
    }

    fn decode_prepared(&self, p: &Prepared) -> Vec<usize> {
        let PreparedInput::Ids(ids) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let (emissions, _) =
            cnn_forward(ids, &self.params, &self.config, k, Mode::Eval, None)
                .expect("prepared ids are in range");
        crf::viterbi(&emissions, ids.len(), &self.crf).0
    }
}

pub(crate) struct LinearCrfGrads {
    pub weights: Vec<f64>,
    pub crf: CrfParams,
}

impl LinearCrfModel {
    pub(crate) fn init(train_seqs: &[Sequence], cfg: &TrainConfig) -> LinearCrfModel {
        let features = FeatureIndex::build(train_seqs);
        let labels = LabelSet::standard();
        let weights = vec![0.0; features.len() * labels.k()];
        let crf = CrfParams::zeros(labels.k());
        LinearCrfModel { features, labels, weights, crf, train_config: cfg.clone() }
    }
}

impl Fittable for LinearCrfModel {
    type Grads = LinearCrfGrads;

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn prepare(&self, seq: &Sequence) -> Prepared {
        Prepared {
            input: PreparedInput::Features(self.features.fire(&seq.tokens)),
            gold: seq.labels.iter().map(|l| self.labels.id(*l)).collect(),
        }
    }

    fn zero_grads(&self) -> LinearCrfGrads {
        LinearCrfGrads {
            weights: vec![0.0; self.weights.len()],
            crf: CrfParams::zeros(self.labels.k()),
        }
    }

    fn reset_grads(grads: &mut LinearCrfGrads) {
        grads.weights.iter_mut().for_each(|v| *v = 0.0);
        grads.crf.transitions.iter_mut().for_each(|v| *v = 0.0);
        grads.crf.start.iter_mut().for_each(|v| *v = 0.0);
        grads.crf.stop.iter_mut().for_each(|v| *v = 0.0);
    }

    fn grad_views(grads: &LinearCrfGrads) -> Vec<&[f64]> {
        vec![
            &grads.weights,
            &grads.crf.transitions,
            &grads.crf.start,
            &grads.crf.stop,
        ]
    }

    fn param_groups_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.weights,
            &mut self.crf.transitions,
            &mut self.crf.start,
            &mut self.crf.stop,
        ]
    }

    fn group_names(&self) -> Vec<String> {
        ["weights", "crf.transitions", "crf.start", "crf.stop"]
            .map(String::from)
            .to_vec()
    }

    fn accumulate(&self, p: &Prepared, grads: &mut LinearCrfGrads, _dropout: Option<&mut Rng>) -> f64 {
        let PreparedInput::Features(fired) = &p.input else { unreachable!() };
        let k = self.labels.k();
        let emissions = linear_emissions(&self.weights, k, fired);
        let (loss, crf_grads) = crf::nll_grad(&emissions, fired.len(), &self.crf, &p.gold);
        linear_emissions_backward(&crf_grads.d_emissions, k, fired, &mut grads.weights);
        for (g, d) in grads.crf.transitions.iter_mut().zip(&crf_grads.d_transitions) {
            *g += d;
        }
        for (g, d) in grads.crf.start.iter_mut().zip(&crf_grads.d_start) {
            *g += d;
        }
        for (g, d) in grads.crf.stop.iter_mut().zip(&crf_grads.d_stop) {
            *g += d;
        }
        loss
    }

    fn loss_only(&self, p: &Prepared) -> f64 {
        let PreparedInput::Features(fired) = &p.input else { unreachable!() };
        let emissions = linear_emissions(&self.weights, self.labels.k(), fired);
        crf::nll(&emissions, fired.len(), &self.crf, &p.gold)
    }

    fn decode_prepared(&self, p: &Prepared) -> Vec<usize> {
        let PreparedInput::Features(fired) = &p.input else { unreachable!() };
        let emissions = linear_emissions(&self.weights, self.labels.k(), fired);
        crf::viterbi(&emissions, fired.len(), &self.crf).0
    }
}

/// Trains a model of the requested kind. The vocabulary or feature inventory
/// comes from the train set only; early stopping watches dev entity-F1 and
/// restores the best-scoring parameters.
pub fn train(
    kind: ModelKind,
    train_seqs: &[Sequence],
    dev_seqs: &[Sequence],
    cnn_config: &CnnConfig,
    cfg: &TrainConfig,
) -> Result<(TaggerModel, Vec<EpochStats>), TaggerError> {
    match kind {
        ModelKind::Cnn => {
            let mut model = CnnModel::init(train_seqs, cnn_config, cfg)?;
            let history = fit(&mut model, train_seqs, dev_seqs, cfg)?;
            Ok((TaggerModel::Cnn(model), history))
        }
        ModelKind::CnnCrf => {
            let mut model = CnnCrfModel::init(train_seqs, cnn_config, cfg)?;
            let history = fit(&mut model, train_seqs, dev_seqs, cfg)?;
            Ok((TaggerModel::CnnCrf(model), history))
        }
        ModelKind::LinearCrf => {
            let mut model = LinearCrfModel::init(train_seqs, cfg);
            let history = fit(&mut model, train_seqs, dev_seqs, cfg)?;
            Ok((TaggerModel::LinearCrf(model), history))
        }
    }
}

/// Deterministically carves a dev set off the end of a seeded shuffle of the
/// train set.
pub fn carve_dev(sequences: Vec<Sequence>, dev_fraction: f64, seed: u64) -> (Vec<Sequence>, Vec<Sequence>) {
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    Rng::new(seed).derive("dev-split").shuffle(&mut order);
    let dev_count = ((sequences.len() as f64) * dev_fraction).round() as usize;
    let dev_count = dev_count.min(sequences.len().saturating_sub(1));
    let dev_idx: std::collections::BTreeSet<usize> =
        order[..dev_count].iter().copied().collect();
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (i, seq) in sequences.into_iter().enumerate() {
        if dev_idx.contains(&i) {
            dev.push(seq);
        } else {
            train.push(seq);
        }
    }
    (train, dev)
}

#[cfg(test)]
mod tests {
    use crate::annotate::BioLabel;
    use crate::lexicon::Category;
    use crate::annotate::SpanLabel;

    use super::*;

    /// Tiny planted-term corpus: "alpha beta" is always inn, everything else O.
    fn toy_sequences(n: usize) -> Vec<Sequence> {
        let inn = BioLabel::In(SpanLabel::Category(Category::Inn));
        let o = BioLabel::O;
        (0..n)
            .map(|i| {
                let filler = ["the", "firm", "ships", "goods", "today", "fast"];
                let f1 = filler[i % filler.len()].to_string();
                let f2 = filler[(i + 2) % filler.len()].to_string();
                if i % 2 == 0 {
                    Sequence::new(
                        vec![f1, "alpha".into(), "beta".into(), f2],
                        vec![o, inn, inn, o],
                    )
                } else {
                    Sequence::new(vec![f1, "plain".into(), f2], vec![o, o, o])
                }
            })
            .collect()
    }

    fn small_cnn() -> CnnConfig {
        CnnConfig {
            embed_dim: 16,
            parallel_kernels: [3, 5],
            parallel_channels: 8,
            deep_layers: 2,
            deep_channels: 16,
            deep_kernel: 5,
            dropout_rate: 0.2,
        }
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            learning_rate: 5e-3,
            batch_size: 8,
            max_epochs: 8,
            patience: 3,
            rng_seed: 7,
            vocab_min_freq: 1,
        }
    }

    #[test]
    fn linear_crf_loss_decreases_on_toy_data() {
        let seqs = toy_sequences(20);
        let (model, history) =
            train(ModelKind::LinearCrf, &seqs, &seqs, &CnnConfig::default(), &quick_cfg())
                .unwrap();
        assert!(history.len() >= 2);
        assert!(history.last().unwrap().train_loss < history[0].train_loss);
        let pred = model.predict(&["the".into(), "alpha".into(), "beta".into(), "fast".into()]);
        let inn = BioLabel::In(SpanLabel::Category(Category::Inn));
        assert_eq!(pred, vec![BioLabel::O, inn, inn, BioLabel::O]);
    }

    #[test]
    fn same_seed_identical_first_epoch() {
        let seqs = toy_sequences(12);
        let cfg = quick_cfg();
        let (_, h1) = train(ModelKind::Cnn, &seqs, &[], &small_cnn(), &cfg).unwrap();
        let (_, h2) = train(ModelKind::Cnn, &seqs, &[], &small_cnn(), &cfg).unwrap();
        assert_eq!(h1[0].train_loss.to_bits(), h2[0].train_loss.to_bits());
    }

    #[test]
    fn cnn_crf_fits_toy_data() {
        let seqs = toy_sequences(24);
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 4,
            max_epochs: 40,
            patience: 10,
            rng_seed: 7,
            vocab_min_freq: 1,
        };
        let (model, history) = train(ModelKind::CnnCrf, &seqs, &seqs, &small_cnn(), &cfg).unwrap();
        let best = history.iter().map(|h| h.dev_f1).fold(f64::NEG_INFINITY, f64::max);
        assert!(best > 0.9, "history: {history:?}");
        // The restored parameters are the best-scoring snapshot.
        let restored: Vec<BioLabel> = model.predict(&seqs[0].tokens);
        assert_eq!(restored.len(), seqs[0].labels.len());
    }

    #[test]
    fn empty_train_set_is_error() {
        let err = train(ModelKind::LinearCrf, &[], &[], &CnnConfig::default(), &quick_cfg())
            .unwrap_err();
        assert!(matches!(err, TaggerError::EmptyTrainSet));
    }

    #[test]
    fn oov_tokens_still_decode() {
        let seqs = toy_sequences(10);
        let (model, _) =
            train(ModelKind::Cnn, &seqs, &[], &small_cnn(), &quick_cfg()).unwrap();
        let pred = model.predict(&["zzzz".into(), "qqqq".into()]);
        assert_eq!(pred.len(), 2);
    }

    #[test]
    fn empty_sentence_list_predicts_empty() {
        let seqs = toy_sequences(6);
        let (model, _) =
            train(ModelKind::LinearCrf, &seqs, &[], &CnnConfig::default(), &quick_cfg()).unwrap();
        assert!(model.predict_all(&[]).is_empty());
        assert!(model.predict(&[]).is_empty());
    }

    #[test]
    fn model_save_load_round_trip_preserves_predictions() {
        let seqs = toy_sequences(12);
        let (model, _) =
            train(ModelKind::CnnCrf, &seqs, &[], &small_cnn(), &quick_cfg()).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = TaggerModel::load(std::io::Cursor::new(buf)).unwrap();
        let tokens: Vec<String> = ["the", "alpha", "beta", "fast"].map(String::from).to_vec();
        assert_eq!(model.predict(&tokens), loaded.predict(&tokens));
    }

    #[test]
    fn carve_dev_is_deterministic_and_disjoint() {
        let seqs = toy_sequences(20);
        let (train1, dev1) = carve_dev(seqs.clone(), 0.2, 5);
        let (_train2, dev2) = carve_dev(seqs.clone(), 0.2, 5);
        assert_eq!(dev1, dev2);
        assert_eq!(train1.len() + dev1.len(), seqs.len());
        assert_eq!(dev1.len(), 4);
        let (_, dev3) = carve_dev(seqs, 0.2, 6);
        assert_ne!(dev1, dev3);
    }
}
