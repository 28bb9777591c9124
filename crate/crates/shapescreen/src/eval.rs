//! ROC statistics, stratified folds, Wilson sign tests, and the
//! aggregation protocol that turns per-fold metrics into collection-level
//! summaries with deltas against a baseline ranking.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ROC needs both classes; got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("scores ({scores}) and labels ({labels}) differ in length")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("stratified {k}-fold needs every class to have at least {k} members; a class has {size}")]
    ClassSmallerThanK { k: usize, size: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("sign test is undefined when every delta is zero")]
    AllDeltasZero,
    #[error("baseline '{0}' has no experiment records")]
    BaselineMissing(String),
    #[error("method '{method}' has unit ({dataset}, {query}) with no baseline counterpart")]
    BaselineMismatch {
        method: String,
        dataset: String,
        query: String,
    },
}

/// The four false-positive rates at which ROC enrichment is reported.
pub const ENRICHMENT_FPRS: [f64; 4] = [0.005, 0.01, 0.02, 0.05];

/// Stable string key for an enrichment FPR ("0.005", "0.01", …).
pub fn fpr_key(fpr: f64) -> String {
    format!("{fpr}")
}

/// An ROC curve as ordered (FPR, TPR) vertices from (0,0) to (1,1); tied
/// scores collapse into a single vertex, so ties appear as diagonal
/// segments.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

/// Builds the ROC curve by sweeping a descending threshold over the
/// distinct score values.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass {
            positives,
            negatives,
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group before emitting a vertex.
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve; equal to the Mann-Whitney
/// pair-counting statistic with half credit for ties.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// ROC enrichment `E = TPR(fpr_target) / fpr_target`, with TPR linearly
/// interpolated between the bracketing curve vertices. At a vertex FPR
/// shared by a vertical segment the segment's top applies.
pub fn roc_enrichment(curve: &RocCurve, fpr_target: f64) -> f64 {
    assert!(
        fpr_target > 0.0 && fpr_target < 1.0,
        "fpr_target must lie strictly inside (0,1), got {fpr_target}"
    );
    // Last vertex at or left of the target; first vertex right of it.
    let mut left = curve.points[0];
    let mut right = *curve.points.last().unwrap();
    for &p in &curve.points {
        if p.0 <= fpr_target {
            left = p;
        } else {
            right = p;
            break;
        }
    }
    let tpr = if left.0 == fpr_target {
        left.1
    } else {
        left.1 + (fpr_target - left.0) * (right.1 - left.1) / (right.0 - left.0)
    };
    tpr / fpr_target
}

/// AUC plus the four standard enrichment values for one scored test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub auc: f64,
    /// FPR key ("0.005", "0.01", "0.02", "0.05") → enrichment.
    pub enrichment: BTreeMap<String, f64>,
}

impl MetricRecord {
    pub fn from_scores(scores: &[f64], labels: &[bool]) -> Result<MetricRecord, EvalError> {
        let curve = roc_curve(scores, labels)?;
        let enrichment = ENRICHMENT_FPRS
            .iter()
            .map(|&fpr| (fpr_key(fpr), roc_enrichment(&curve, fpr)))
            .collect();
        Ok(MetricRecord {
            auc: auc(&curve),
            enrichment,
        })
    }
}

/// Assigns each sample to one of `k` folds, stratified so per-class fold
/// sizes differ by at most one. Deterministic per seed.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for class in [false, true] {
        let mut indices: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if indices.len() < k {
            return Err(EvalError::ClassSmallerThanK {
                k,
                size: indices.len(),
            });
        }
        indices.shuffle(&mut rng);
        for (j, &i) in indices.iter().enumerate() {
            assignment[i] = j % k;
        }
    }
    Ok(assignment)
}

const WILSON_Z: f64 = 1.959964;

/// Two-sided 95% Wilson score interval for `successes / n`, clamped to
/// `[0,1]`.
///
/// At `successes == 0` (resp. `== n`) the lower (upper) endpoint is exactly
/// 0 (1) analytically; it is pinned there rather than left to rounding so
/// the interval always brackets the point estimate.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs n > 0");
    assert!(successes <= n);
    let n_f = n as f64;
    let p_hat = successes as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p_hat + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z * (p_hat * (1.0 - p_hat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Wilson 95% interval for the proportion of positive deltas among the
/// nonzero deltas; exact zeros are dropped.
pub fn sign_test_ci(deltas: &[f64]) -> Result<(f64, f64), EvalError> {
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(EvalError::AllDeltasZero);
    }
    let positives = nonzero.iter().filter(|d| **d > 0.0).count();
    Ok(wilson_interval(positives, nonzero.len()))
}

/// Median of a slice; `None` on empty input. Even-length inputs average
/// the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Per-fold metrics of one (method, dataset, query) experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: String,
    pub dataset: String,
    pub query: String,
    pub fold_metrics: Vec<MetricRecord>,
}

/// Delta distribution of one metric against the baseline over matched
/// (dataset, query) units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaStat {
    pub median_delta: f64,
    pub nonzero: usize,
    pub positive: usize,
    /// Wilson 95% CI for the positive-proportion; `None` when every delta
    /// is exactly zero.
    pub sign_ci: Option<(f64, f64)>,
}

fn delta_stat(deltas: &[f64]) -> DeltaStat {
    DeltaStat {
        median_delta: median(deltas).unwrap_or(0.0),
        nonzero: deltas.iter().filter(|d| **d != 0.0).count(),
        positive: deltas.iter().filter(|d| **d > 0.0).count(),
        sign_ci: sign_test_ci(deltas).ok(),
    }
}

/// Deltas of a method against the baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaStats {
    pub n_units: usize,
    pub auc: DeltaStat,
    /// FPR key → enrichment delta distribution.
    pub enrichment: BTreeMap<String, DeltaStat>,
}

/// Aggregated view over every experiment: per-unit fold means, collection
/// medians per method, and per-method deltas against the baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub baseline: String,
    /// method → dataset → query → mean over folds.
    pub unit_means: BTreeMap<String, BTreeMap<String, BTreeMap<String, MetricRecord>>>,
    /// method → median over all (dataset, query) units.
    pub collection_medians: BTreeMap<String, MetricRecord>,
    /// method (≠ baseline) → delta statistics on matched units.
    pub deltas_vs_baseline: BTreeMap<String, DeltaStats>,
}

fn mean_metric(folds: &[MetricRecord]) -> MetricRecord {
    let n = folds.len() as f64;
    let auc = folds.iter().map(|m| m.auc).sum::<f64>() / n;
    let mut enrichment = BTreeMap::new();
    for fpr in ENRICHMENT_FPRS {
        let key = fpr_key(fpr);
        let sum: f64 = folds.iter().map(|m| m.enrichment[&key]).sum();
        enrichment.insert(key, sum / n);
    }
    MetricRecord { auc, enrichment }
}

fn median_metric(units: &[&MetricRecord]) -> MetricRecord {
    let aucs: Vec<f64> = units.iter().map(|m| m.auc).collect();
    let mut enrichment = BTreeMap::new();
    for fpr in ENRICHMENT_FPRS {
        let key = fpr_key(fpr);
        let values: Vec<f64> = units.iter().map(|m| m.enrichment[&key]).collect();
        enrichment.insert(key, median(&values).unwrap());
    }
    MetricRecord {
        auc: median(&aucs).unwrap(),
        enrichment,
    }
}

/// Implements the aggregation protocol: per-(dataset, query) unit means
/// over folds, per-method medians over units, and per-unit deltas against
/// `baseline` (each method's units must all exist under the baseline).
pub fn aggregate(
    records: &[ExperimentRecord],
    baseline: &str,
) -> Result<AggregateSummary, EvalError> {
    let mut unit_means: BTreeMap<String, BTreeMap<String, BTreeMap<String, MetricRecord>>> =
        BTreeMap::new();
    for record in records {
        unit_means
            .entry(record.method.clone())
            .or_default()
            .entry(record.dataset.clone())
            .or_default()
            .insert(record.query.clone(), mean_metric(&record.fold_metrics));
    }

    let Some(baseline_units) = unit_means.get(baseline).cloned() else {
        return Err(EvalError::BaselineMissing(baseline.to_string()));
    };

    let mut collection_medians = BTreeMap::new();
    let mut deltas_vs_baseline = BTreeMap::new();
    for (method, datasets) in &unit_means {
        let units: Vec<&MetricRecord> = datasets
            .values()
            .flat_map(|queries| queries.values())
            .collect();
        collection_medians.insert(method.clone(), median_metric(&units));

        if method == baseline {
            continue;
        }
        let mut auc_deltas = Vec::new();
        let mut enrichment_deltas: BTreeMap<String, Vec<f64>> = ENRICHMENT_FPRS
            .iter()
            .map(|&fpr| (fpr_key(fpr), Vec::new()))
            .collect();
        for (dataset, queries) in datasets {
            for (query, mean) in queries {
                let base = baseline_units
                    .get(dataset)
                    .and_then(|qs| qs.get(query))
                    .ok_or_else(|| EvalError::BaselineMismatch {
                        method: method.clone(),
                        dataset: dataset.clone(),
                        query: query.clone(),
                    })?;
                auc_deltas.push(mean.auc - base.auc);
                for (key, values) in &mut enrichment_deltas {
                    values.push(mean.enrichment[key] - base.enrichment[key]);
                }
            }
        }
        deltas_vs_baseline.insert(
            method.clone(),
            DeltaStats {
                n_units: auc_deltas.len(),
                auc: delta_stat(&auc_deltas),
                enrichment: enrichment_deltas
                    .into_iter()
                    .map(|(key, values)| (key, delta_stat(&values)))
                    .collect(),
            },
        );
    }

    Ok(AggregateSummary {
        baseline: baseline.to_string(),
        unit_means,
        collection_medians,
        deltas_vs_baseline,
    })
}
