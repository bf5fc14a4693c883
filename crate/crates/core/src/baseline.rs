//! Hashed term-walk features with decay averaging along a path, and a
//! one-vs-rest logistic learner over clause labels. Serves as the
//! feature-engineering comparison point for the sequence model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::datagen::{detokenize, SEP_TOKEN};
use crate::fol::{Literal, SymbolTable, Term};
use crate::util::fnv1a64;

/// Sparse feature-bucket → weight map.
pub type FeatureVector = BTreeMap<u32, f64>;

/// Hashed feature space size; collisions just add.
pub const FEATURE_BUCKETS: u32 = 1 << 20;

/// Fixed hashing seed, so feature ids are stable across runs and machines.
pub const FEATURE_HASH_SEED: u64 = 0x7761_6c6b;

/// Path position decay used when none is configured.
pub const DEFAULT_DECAY: f64 = 0.8;

fn term_name(t: &Term, symbols: &SymbolTable) -> String {
    match t {
        Term::Var(v) => symbols.var_name(*v),
        Term::App(s, _) => symbols.name(*s).to_string(),
    }
}

/// Directed symbol walks of the literal's term tree, by occurrence count.
/// Every node with children contributes its own name and one `parent>child`
/// edge per child; the root always contributes and carries the polarity (a
/// `~` prefix on negative literals). Leaves below the root only show up on
/// the child side of edges.
pub fn walk_features(l: &Literal, symbols: &SymbolTable) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let root = if l.positive {
        term_name(&l.atom, symbols)
    } else {
        format!("~{}", term_name(&l.atom, symbols))
    };
    *out.entry(root.clone()).or_insert(0.0) += 1.0;
    let mut stack: Vec<(String, &Term)> = vec![(root, &l.atom)];
    while let Some((name, term)) = stack.pop() {
        let Term::App(_, args) = term else { continue };
        for arg in args {
            let child = term_name(arg, symbols);
            *out.entry(format!("{name}>{child}")).or_insert(0.0) += 1.0;
            if matches!(arg, Term::App(_, a) if !a.is_empty()) {
                *out.entry(child.clone()).or_insert(0.0) += 1.0;
                stack.push((child, arg));
            }
        }
    }
    out
}

/// Hashes the walk features into the fixed bucket space.
pub fn featurize_literal(l: &Literal, symbols: &SymbolTable) -> FeatureVector {
    let mut out = FeatureVector::new();
    for (walk, count) in walk_features(l, symbols) {
        let bucket = (fnv1a64(FEATURE_HASH_SEED, walk.as_bytes()) % FEATURE_BUCKETS as u64) as u32;
        *out.entry(bucket).or_insert(0.0) += count;
    }
    out
}

/// Decay-weighted average of per-literal features along a path: the literal
/// at distance d from the end weighs gamma^d, normalized by the weight sum.
/// `None` on an empty path. gamma must lie in (0, 1].
pub fn featurize_path(path: &[Literal], symbols: &SymbolTable, gamma: f64) -> Option<FeatureVector> {
    debug_assert!(gamma > 0.0 && gamma <= 1.0);
    if path.is_empty() {
        return None;
    }
    let mut out = FeatureVector::new();
    let mut denom = 0.0;
    for (d, lit) in path.iter().rev().enumerate() {
        let w = gamma.powi(d as i32);
        denom += w;
        for (bucket, count) in featurize_literal(lit, symbols) {
            *out.entry(bucket).or_insert(0.0) += w * count;
        }
    }
    for v in out.values_mut() {
        *v /= denom;
    }
    Some(out)
}

/// Features of a corpus source line: splits on `#`, reads each segment back
/// into a literal, then decay-averages. `None` if any segment is unreadable
/// or the line is empty.
pub fn featurize_source(
    tokens: &[String],
    symbols: &mut SymbolTable,
    gamma: f64,
) -> Option<FeatureVector> {
    let mut path = Vec::new();
    for segment in tokens.split(|t| t == SEP_TOKEN) {
        path.push(detokenize(segment, symbols)?);
    }
    featurize_path(&path, symbols, gamma)
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            l2: 0.0,
        }
    }
}

/// One-vs-rest logistic model: per label a bias and a sparse weight vector
/// over feature buckets. The label set is fixed at training time.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilabelModel {
    labels: Vec<String>,
    biases: Vec<f64>,
    weights: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("need at least 2 distinct labels, got {0}")]
    DegenerateLabels(usize),
    #[error("example {0} has a non-finite feature weight")]
    NonFiniteFeature(usize),
}

/// A trained model together with its fit on the training set.
#[derive(Clone, Debug)]
pub struct BaselineTraining {
    pub model: MultilabelModel,
    pub train_accuracy: f64,
    /// Final log loss, averaged over examples and summed over the per-label
    /// binary objectives.
    pub final_loss: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_loss(score: f64, y: f64) -> f64 {
    // -y*ln(p) - (1-y)*ln(1-p), written via softplus for stability.
    let softplus = if score > 0.0 {
        score + (-score).exp().ln_1p()
    } else {
        score.exp().ln_1p()
    };
    softplus - y * score
}

/// Full-batch gradient descent on the one-vs-rest logistic objective.
/// Zero-initialized and batch-summed, hence deterministic: the same examples
/// in the same order give bitwise-identical weights.
pub fn train_multilabel(
    examples: &[(FeatureVector, String)],
    config: &TrainConfig,
) -> Result<BaselineTraining, TrainError> {
    let labels: Vec<String> = {
        let set: BTreeSet<&str> = examples.iter().map(|(_, l)| l.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    };
    if labels.len() < 2 {
        return Err(TrainError::DegenerateLabels(labels.len()));
    }
    let label_index: HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let buckets: Vec<u32> = {
        let set: BTreeSet<u32> = examples
            .iter()
            .flat_map(|(fv, _)| fv.keys().copied())
            .collect();
        set.into_iter().collect()
    };
    let bucket_index: HashMap<u32, usize> =
        buckets.iter().enumerate().map(|(i, &b)| (b, i)).collect();

    let mut compact: Vec<(Vec<(usize, f64)>, usize)> = Vec::with_capacity(examples.len());
    for (i, (fv, label)) in examples.iter().enumerate() {
        if fv.values().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFiniteFeature(i));
        }
        let row: Vec<(usize, f64)> = fv.iter().map(|(b, v)| (bucket_index[b], *v)).collect();
        compact.push((row, label_index[label.as_str()]));
    }

    let n = examples.len() as f64;
    let mut weights = vec![vec![0.0f64; buckets.len()]; labels.len()];
    let mut biases = vec![0.0f64; labels.len()];
    let mut final_loss = 0.0;

    for epoch in 0..config.epochs {
        let last = epoch + 1 == config.epochs;
        let mut epoch_loss = 0.0;
        for (li, (w, b)) in weights.iter_mut().zip(&mut biases).enumerate() {
            let mut grad = vec![0.0f64; w.len()];
            let mut grad_b = 0.0;
            for (row, label) in &compact {
                let score = *b + row.iter().map(|&(j, v)| w[j] * v).sum::<f64>();
                let y = if *label == li { 1.0 } else { 0.0 };
                let g = sigmoid(score) - y;
                for &(j, v) in row {
                    grad[j] += g * v;
                }
                grad_b += g;
                if last {
                    epoch_loss += log_loss(score, y);
                }
            }
            for (wj, gj) in w.iter_mut().zip(&grad) {
                *wj -= config.learning_rate * (gj / n + config.l2 * *wj);
            }
            *b -= config.learning_rate * grad_b / n;
        }
        if last {
            final_loss = epoch_loss / n;
        }
    }

    let model = MultilabelModel {
        labels,
        biases,
        weights: weights
            .into_iter()
            .map(|w| {
                buckets
                    .iter()
                    .zip(&w)
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(&b, &v)| (b, v))
                    .collect()
            })
            .collect(),
    };

    let correct = compact
        .iter()
        .filter(|(row, label)| {
            let best = (0..model.labels.len())
                .map(|li| {
                    model.biases[li]
                        + row
                            .iter()
                            .map(|&(j, v)| {
                                let b = buckets[j];
                                model.weights[li]
                                    .binary_search_by_key(&b, |&(bb, _)| bb)
                                    .map(|k| model.weights[li][k].1 * v)
                                    .unwrap_or(0.0)
                            })
                            .sum::<f64>()
                })
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .map(|(li, _)| li);
            best == Some(*label)
        })
        .count();

    Ok(BaselineTraining {
        train_accuracy: correct as f64 / examples.len() as f64,
        final_loss,
        model,
    })
}

impl MultilabelModel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Bias and sparse weights of one label, if the model knows it.
    pub fn label_parameters(&self, label: &str) -> Option<(f64, &[(u32, f64)])> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some((self.biases[i], &self.weights[i]))
    }

    /// Rebuilds a model from persisted parts, enforcing every invariant the
    /// trainer guarantees: sorted distinct labels, aligned rows, sorted
    /// in-range buckets, finite values.
    pub fn from_parts(
        labels: Vec<String>,
        rows: Vec<(f64, Vec<(u32, f64)>)>,
    ) -> Result<MultilabelModel, String> {
        if labels.len() != rows.len() {
            return Err(format!(
                "{} labels but {} weight rows",
                labels.len(),
                rows.len()
            ));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err("labels must be strictly sorted".to_string());
        }
        let mut biases = Vec::with_capacity(rows.len());
        let mut weights = Vec::with_capacity(rows.len());
        for (label, (bias, row)) in labels.iter().zip(rows) {
            if !bias.is_finite() || row.iter().any(|&(_, w)| !w.is_finite()) {
                return Err(format!("label {label:?} has a non-finite parameter"));
            }
            if row.iter().any(|&(b, _)| b >= FEATURE_BUCKETS) {
                return Err(format!("label {label:?} has an out-of-range bucket"));
            }
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(format!("label {label:?} has unsorted buckets"));
            }
            biases.push(bias);
            weights.push(row);
        }
        Ok(MultilabelModel {
            labels,
            biases,
            weights,
        })
    }

    /// Raw per-label scores in label order.
    pub fn scores(&self, fv: &FeatureVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| {
                b + w
                    .iter()
                    .map(|&(bucket, weight)| weight * fv.get(&bucket).copied().unwrap_or(0.0))
                    .sum::<f64>()
            })
            .collect()
    }
}

/// The k best labels by descending score; equal scores fall back to label
/// order, so rankings are total and reproducible.
pub fn predict_topk(model: &MultilabelModel, fv: &FeatureVector, k: usize) -> Vec<(String, f64)> {
    let scores = model.scores(fv);
    let mut order: Vec<usize> = (0..model.labels.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(model.labels[a].cmp(&model.labels[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| (model.labels[i].clone(), scores[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_literal_text;

    fn lit(src: &str, symbols: &mut SymbolTable) -> Literal {
        parse_literal_text(src, symbols).unwrap()
    }

    fn walks(src: &str, symbols: &mut SymbolTable) -> BTreeMap<String, f64> {
        let l = lit(src, symbols);
        walk_features(&l, symbols)
    }

    fn expect(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(s, v)| (s.to_string(), *v)).collect()
    }

    #[test]
    fn walks_cover_the_root_and_every_edge() {
        let mut sy = SymbolTable::new();
        assert_eq!(walks("q(b)", &mut sy), expect(&[("q", 1.0), ("q>b", 1.0)]));
        assert_eq!(
            walks("~r(a,b)", &mut sy),
            expect(&[("~r", 1.0), ("~r>a", 1.0), ("~r>b", 1.0)])
        );
        assert_eq!(
            walks("p(VAR, SKLM)", &mut sy),
            expect(&[("p", 1.0), ("p>VAR", 1.0), ("p>SKLM", 1.0)])
        );
    }

    #[test]
    fn nested_terms_contribute_inner_walks() {
        let mut sy = SymbolTable::new();
        assert_eq!(
            walks("~q(f(a,b))", &mut sy),
            expect(&[("~q", 1.0), ("~q>f", 1.0), ("f", 1.0), ("f>a", 1.0), ("f>b", 1.0)])
        );
        assert_eq!(
            walks("p(a,a)", &mut sy),
            expect(&[("p", 1.0), ("p>a", 2.0)])
        );
        assert_eq!(walks("prop", &mut sy), expect(&[("prop", 1.0)]));
        assert_eq!(
            walks("~ g(c) = d", &mut sy),
            expect(&[("~=", 1.0), ("~=>g", 1.0), ("~=>d", 1.0), ("g", 1.0), ("g>c", 1.0)])
        );
    }

    #[test]
    fn hashed_features_preserve_total_mass() {
        let mut sy = SymbolTable::new();
        let l = lit("~q(f(a,b))", &mut sy);
        let fv = featurize_literal(&l, &sy);
        let total: f64 = fv.values().sum();
        assert_eq!(total, 5.0);
        assert!(fv.keys().all(|&b| b < FEATURE_BUCKETS));
        assert_eq!(fv, featurize_literal(&l, &sy));
    }

    fn approx_eq(a: &FeatureVector, b: &FeatureVector) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() < 1e-12)
    }

    #[test]
    fn single_literal_paths_match_the_literal_features() {
        let mut sy = SymbolTable::new();
        let l = lit("p(a)", &mut sy);
        for gamma in [0.3, 0.8, 1.0] {
            let fv = featurize_path(std::slice::from_ref(&l), &sy, gamma).unwrap();
            assert!(approx_eq(&fv, &featurize_literal(&l, &sy)));
        }
        let twice = featurize_path(&[l.clone(), l.clone()], &sy, 1.0).unwrap();
        assert!(approx_eq(&twice, &featurize_literal(&l, &sy)));
    }

    #[test]
    fn unit_decay_averages_without_weighting() {
        let mut sy = SymbolTable::new();
        let path = [lit("p(a)", &mut sy), lit("q(b)", &mut sy), lit("~r(c)", &mut sy)];
        let fv = featurize_path(&path, &sy, 1.0).unwrap();
        let mut mean = FeatureVector::new();
        for l in &path {
            for (b, v) in featurize_literal(l, &sy) {
                *mean.entry(b).or_insert(0.0) += v / 3.0;
            }
        }
        assert!(approx_eq(&fv, &mean));
    }

    #[test]
    fn decay_weights_the_path_end_most() {
        let mut sy = SymbolTable::new();
        let far = lit("p(a)", &mut sy);
        let near = lit("q(b)", &mut sy);
        let fv = featurize_path(&[far.clone(), near.clone()], &sy, 0.5).unwrap();
        let mut by_hand = FeatureVector::new();
        for (b, v) in featurize_literal(&near, &sy) {
            *by_hand.entry(b).or_insert(0.0) += v * 2.0 / 3.0;
        }
        for (b, v) in featurize_literal(&far, &sy) {
            *by_hand.entry(b).or_insert(0.0) += v / 3.0;
        }
        assert!(approx_eq(&fv, &by_hand));
    }

    #[test]
    fn empty_paths_have_no_features() {
        let sy = SymbolTable::new();
        assert!(featurize_path(&[], &sy, 0.8).is_none());
    }

    #[test]
    fn source_lines_featurize_through_detokenization() {
        let mut sy = SymbolTable::new();
        let tokens: Vec<String> = "p ( a ) # q ( b )"
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let fv = featurize_source(&tokens, &mut sy, 0.8).unwrap();
        let path = [lit("p(a)", &mut sy), lit("q(b)", &mut sy)];
        assert!(approx_eq(&fv, &featurize_path(&path, &sy, 0.8).unwrap()));

        let bad: Vec<String> = "p ( a".split_whitespace().map(str::to_string).collect();
        assert!(featurize_source(&bad, &mut sy, 0.8).is_none());
        assert!(featurize_source(&[], &mut sy, 0.8).is_none());
    }

    fn toy_set(scale: f64) -> Vec<(FeatureVector, String)> {
        let fv = |pairs: &[(u32, f64)]| -> FeatureVector {
            pairs.iter().map(|&(b, v)| (b, v * scale)).collect()
        };
        vec![
            (fv(&[(10, 1.0), (11, 2.0)]), "left".into()),
            (fv(&[(10, 2.0), (11, 1.0)]), "left".into()),
            (fv(&[(20, 1.0), (21, 2.0)]), "right".into()),
            (fv(&[(20, 2.0), (21, 1.0)]), "right".into()),
        ]
    }

    #[test]
    fn separable_toy_sets_train_to_full_accuracy() {
        let out = train_multilabel(&toy_set(1.0), &TrainConfig::default()).unwrap();
        assert_eq!(out.train_accuracy, 1.0);
        assert!(out.final_loss < 0.7);
        for (fv, label) in &toy_set(1.0) {
            let top = predict_topk(&out.model, fv, 1);
            assert_eq!(&top[0].0, label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let a = train_multilabel(&toy_set(1.0), &TrainConfig::default()).unwrap();
        let b = train_multilabel(&toy_set(1.0), &TrainConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.train_accuracy, b.train_accuracy);
        assert_eq!(a.final_loss, b.final_loss);
    }

    #[test]
    fn rankings_survive_a_positive_feature_rescale() {
        let plain = train_multilabel(&toy_set(1.0), &TrainConfig::default()).unwrap();
        let scaled = train_multilabel(&toy_set(5.0), &TrainConfig::default()).unwrap();
        for ((fv_plain, _), (fv_scaled, _)) in toy_set(1.0).iter().zip(&toy_set(5.0)) {
            let a: Vec<String> = predict_topk(&plain.model, fv_plain, 2)
                .into_iter()
                .map(|(l, _)| l)
                .collect();
            let b: Vec<String> = predict_topk(&scaled.model, fv_scaled, 2)
                .into_iter()
                .map(|(l, _)| l)
                .collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_label_corpora_are_rejected() {
        let data = vec![
            (FeatureVector::from([(1, 1.0)]), "only".to_string()),
            (FeatureVector::from([(2, 1.0)]), "only".to_string()),
        ];
        assert!(matches!(
            train_multilabel(&data, &TrainConfig::default()),
            Err(TrainError::DegenerateLabels(1))
        ));
        assert!(matches!(
            train_multilabel(&[], &TrainConfig::default()),
            Err(TrainError::DegenerateLabels(0))
        ));
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let data = vec![
            (FeatureVector::from([(1, f64::NAN)]), "a".to_string()),
            (FeatureVector::from([(2, 1.0)]), "b".to_string()),
        ];
        assert!(matches!(
            train_multilabel(&data, &TrainConfig::default()),
            Err(TrainError::NonFiniteFeature(0))
        ));
    }

    #[test]
    fn untrained_scores_fall_back_to_label_order() {
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train_multilabel(&toy_set(1.0), &config).unwrap();
        let all = predict_topk(&out.model, &FeatureVector::new(), 5);
        let labels: Vec<&str> = all.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["left", "right"]);
        assert!(all.iter().all(|&(_, s)| s == 0.0));
    }

    #[test]
    fn zero_vectors_rank_by_bias_alone() {
        let out = train_multilabel(&toy_set(1.0), &TrainConfig::default()).unwrap();
        let ranked = predict_topk(&out.model, &FeatureVector::new(), 2);
        for (label, score) in &ranked {
            let li = out.model.labels().iter().position(|l| l == label).unwrap();
            assert_eq!(*score, out.model.biases[li]);
        }
        assert!(ranked[0].1 >= ranked[1].1);
    }
}
