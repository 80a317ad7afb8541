//! Analytic-gradient verification against central finite differences.
//!
//! Every parameter group is probed on a random subset of coordinates with
//! dropout disabled. The relative error uses `max(|analytic|, |numeric|)`
//! with a small absolute floor so near-zero gradients do not inflate it.

use crate::rng::Rng;

use super::cnn::{CnnConfig, CnnModel, CnnCrfModel};
use super::feats::LinearCrfModel;
use super::train::{Fittable, TrainConfig};
use super::{ModelKind, Sequence, TaggerError};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Worst relative error per parameter group.
    pub per_group: Vec<(String, f64)>,
}

/// Builds a fresh model of the requested kind around the sample (vocabulary
/// and features from the sample itself), randomizes every parameter, and
/// compares analytic gradients to central differences on at least
/// `coords_per_group` coordinates per group.
pub fn grad_check(
    kind: ModelKind,
    sample: &Sequence,
    epsilon: f64,
    coords_per_group: usize,
    seed: u64,
) -> Result<GradCheckReport, TaggerError> {
    let cfg = TrainConfig { vocab_min_freq: 1, rng_seed: seed, ..TrainConfig::default() };
    let train_set = vec![sample.clone()];
    match kind {
        ModelKind::Cnn => {
            let mut model = CnnModel::init(&train_set, &CnnConfig::default(), &cfg)?;
            Ok(check(&mut model, sample, epsilon, coords_per_group, seed))
        }
        ModelKind::CnnCrf => {
            let mut model = CnnCrfModel::init(&train_set, &CnnConfig::default(), &cfg)?;
            Ok(check(&mut model, sample, epsilon, coords_per_group, seed))
        }
        ModelKind::LinearCrf => {
            let mut model = LinearCrfModel::init(&train_set, &cfg);
            Ok(check(&mut model, sample, epsilon, coords_per_group, seed))
        }
    }
}

fn check<M: Fittable>(
    model: &mut M,
    sample: &Sequence,
    epsilon: f64,
    coords_per_group: usize,
    seed: u64,
) -> GradCheckReport {
    let mut rng = Rng::new(seed).derive("gradcheck");
    for group in model.param_groups_mut() {
        for v in group.iter_mut() {
            *v = rng.uniform(-0.1, 0.1);
        }
    }
    let prepared = model.prepare(sample);

    let mut grads = model.zero_grads();
    M::reset_grads(&mut grads);
    model.accumulate(&prepared, &mut grads, None);
    let analytic: Vec<Vec<f64>> = M::grad_views(&grads)
        .into_iter()
        .map(|g| g.to_vec())
        .collect();

    let names = model.group_names();
    let mut per_group = Vec::new();
    let mut max_rel_err: f64 = 0.0;
    for (g, name) in names.into_iter().enumerate() {
        let len = analytic[g].len();
        if len == 0 {
            per_group.push((name, 0.0));
            continue;
        }
        let mut coords: Vec<usize> = if len <= coords_per_group {
            (0..len).collect()
        } else {
            let mut picked = std::collections::BTreeSet::new();
            while picked.len() < coords_per_group {
                picked.insert(rng.below(len));
            }
            picked.into_iter().collect()
        };
        coords.sort_unstable();

        let mut group_err: f64 = 0.0;
        for c in coords {
            let mut fd = |step: f64| -> f64 {
                let original = model.param_groups_mut()[g][c];
                model.param_groups_mut()[g][c] = original + step;
                let up = model.loss_only(&prepared);
                model.param_groups_mut()[g][c] = original - step;
                let down = model.loss_only(&prepared);
                model.param_groups_mut()[g][c] = original;
                (up - down) / (2.0 * step)
            };
            // A ReLU kink inside the difference interval makes the estimate
            // step-dependent; shrink until two scales agree, keeping the
            // larger (less noisy) step's value.
            let mut step = epsilon;
            let mut numeric = fd(step);
            let mut settled = false;
            for _ in 0..3 {
                let finer = fd(step / 8.0);
                let scale = numeric.abs().max(finer.abs());
                if scale < FD_FLOOR || (numeric - finer).abs() / scale < 1e-4 {
                    settled = true;
                    break;
                }
                step /= 8.0;
                numeric = finer;
            }
            if !settled {
                continue; // derivative undefined at this point
            }
            let a = analytic[g][c];
            // Below finite-difference resolution there is no signal to
            // compare against; such coordinates pass automatically.
            let scale = a.abs().max(numeric.abs());
            let rel = if scale < FD_FLOOR { 0.0 } else { (a - numeric).abs() / scale };
            group_err = group_err.max(rel);
        }
        max_rel_err = max_rel_err.max(group_err);
        per_group.push((name, group_err));
    }
    GradCheckReport { max_rel_err, per_group }
}

const FD_FLOOR: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use crate::annotate::{BioLabel, SpanLabel};
    use crate::lexicon::Category;

    use super::*;

    fn sample(t: usize) -> Sequence {
        let words = ["alpha", "beta", "gamma", "delta", "eps"];
        let inn = BioLabel::In(SpanLabel::Category(Category::Inn));
        let tokens: Vec<String> = (0..t).map(|i| words[i % words.len()].to_string()).collect();
        let labels: Vec<BioLabel> = (0..t)
            .map(|i| if i % 3 == 1 { inn } else { BioLabel::O })
            .collect();
        Sequence::new(tokens, labels)
    }

    #[test]
    fn linear_crf_gradients_are_exact() {
        let report = grad_check(ModelKind::LinearCrf, &sample(3), 1e-4, 20, 11).unwrap();
        assert!(report.max_rel_err < 1e-6, "report: {report:?}");
    }

    #[test]
    fn cnn_gradients_match() {
        let report = grad_check(ModelKind::Cnn, &sample(4), 1e-4, 5, 13).unwrap();
        assert!(report.max_rel_err < 1e-3, "report: {report:?}");
    }

    #[test]
    fn cnn_crf_gradients_match() {
        let report = grad_check(ModelKind::CnnCrf, &sample(4), 1e-4, 5, 17).unwrap();
        assert!(report.max_rel_err < 1e-3, "report: {report:?}");
    }
}

