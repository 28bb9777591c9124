//! Balanced L2-regularized logistic regression trained by damped Newton
//! iterations, with optional feature scaling, inner-CV regularization
//! tuning, and weight export for interpreting color-atom contributions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorff::{ColorAtom, ColorType};
use crate::eval::{self, EvalError};
use crate::features::Layout;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set must contain both classes")]
    SingleClass,
    #[error("feature matrix row {row} has a non-finite entry at column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    InconsistentDimensions {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("input has {got} features, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layout {0:?} has no per-color-atom features to export")]
    NoColorAtomFeatures(Layout),
    #[error("regularization grid is empty")]
    EmptyGrid,
    #[error("regularization strength must be positive, got {0}")]
    NonPositiveC(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Feature matrix plus binary labels, validated on construction.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    x: Vec<Vec<f64>>,
    y: Vec<bool>,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<bool>) -> Result<Self, ModelError> {
        if x.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        if x.len() != y.len() {
            return Err(ModelError::LengthMismatch {
                rows: x.len(),
                labels: y.len(),
            });
        }
        let dim = x[0].len();
        for (row, values) in x.iter().enumerate() {
            if values.len() != dim {
                return Err(ModelError::InconsistentDimensions {
                    row,
                    expected: dim,
                    got: values.len(),
                });
            }
            if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteFeature { row, col });
            }
        }
        let positives = y.iter().filter(|l| **l).count();
        if positives == 0 || positives == y.len() {
            return Err(ModelError::SingleClass);
        }
        Ok(TrainingSet { x, y })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn labels(&self) -> &[bool] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.x[0].len()
    }

    /// The subset of rows selected by `keep`.
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> Result<TrainingSet, ModelError> {
        let indices: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        TrainingSet::new(
            indices.iter().map(|&i| self.x[i].clone()).collect(),
            indices.iter().map(|&i| self.y[i]).collect(),
        )
    }
}

/// Feature-scaling family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    None,
    MaxAbs,
    Standard,
}

/// Per-feature affine scaling `x' = (x - offset) / factor` learned on
/// training data and frozen afterwards. Constant columns get factor 1 so
/// scaling never divides by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerSpec {
    pub kind: ScalerKind,
    pub offsets: Vec<f64>,
    pub factors: Vec<f64>,
}

/// Learns scaling parameters column-by-column from the training matrix.
pub fn fit_scaler(kind: ScalerKind, x_train: &[Vec<f64>]) -> ScalerSpec {
    assert!(!x_train.is_empty(), "scaler needs a nonempty training set");
    let dim = x_train[0].len();
    let m = x_train.len() as f64;
    let mut offsets = vec![0.0; dim];
    let mut factors = vec![1.0; dim];
    match kind {
        ScalerKind::None => {}
        ScalerKind::MaxAbs => {
            for j in 0..dim {
                let max_abs = x_train.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
                factors[j] = if max_abs > 0.0 { max_abs } else { 1.0 };
            }
        }
        ScalerKind::Standard => {
            for j in 0..dim {
                let mean = x_train.iter().map(|r| r[j]).sum::<f64>() / m;
                let var = x_train.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m;
                let std = var.sqrt();
                offsets[j] = mean;
                factors[j] = if std > 0.0 { std } else { 1.0 };
            }
        }
    }
    ScalerSpec {
        kind,
        offsets,
        factors,
    }
}

/// Applies a fitted scaler to one feature vector.
pub fn apply_scaler_row(spec: &ScalerSpec, x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(spec.offsets.iter().zip(&spec.factors))
        .map(|(v, (offset, factor))| (v - offset) / factor)
        .collect()
}

/// Applies a fitted scaler to every row of a matrix.
pub fn apply_scaler(spec: &ScalerSpec, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter().map(|row| apply_scaler_row(spec, row)).collect()
}

/// Reserved for future classifier families; only logistic regression is
/// implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    LogisticRegression,
}

/// A trained screener: scaler, linear weights over the layout's feature
/// order, and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub layout: Layout,
    #[serde(rename = "C")]
    pub c: f64,
    pub scaler: ScalerSpec,
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub classifier: ClassifierKind,
}

impl LrModel {
    /// Linear score `w·x' + b` on the scaled input; probabilities are a
    /// strictly monotone function of this, so rankings agree.
    pub fn decision_margin(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.weights.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let scaled = apply_scaler_row(&self.scaler, x);
        Ok(dot(&self.weights, &scaled) + self.bias)
    }

    /// Logistic probability of the positive class, kept strictly inside
    /// (0,1) even for saturating margins.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        let p = sigmoid(self.decision_margin(x)?);
        Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16))
    }
}

/// Training hyperparameters shared by tuning and final fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub scaler: ScalerKind,
    pub c_grid: Vec<f64>,
    pub inner_folds: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            scaler: ScalerKind::MaxAbs,
            c_grid: default_c_grid(),
            inner_folds: 3,
            max_iters: 10_000,
            seed: 0,
        }
    }
}

/// Decade grid 1e-4 … 1e4.
pub fn default_c_grid() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Balanced per-sample weights `m / (2 · m_class)`; each class then
/// contributes half of the total sample weight.
fn balanced_weights(y: &[bool]) -> Vec<f64> {
    let m = y.len() as f64;
    let positives = y.iter().filter(|l| **l).count() as f64;
    let negatives = m - positives;
    y.iter()
        .map(|&label| {
            if label {
                m / (2.0 * positives)
            } else {
                m / (2.0 * negatives)
            }
        })
        .collect()
}

/// Weighted cross-entropy with L2 penalty `|w|²/(2C)` on the weights only,
/// and its gradient over `[w…, b]` — the objective [`train_lr`] minimizes.
pub fn loss_and_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    sample_weights: &[f64],
    params: &[f64],
    c: f64,
) -> (f64, Vec<f64>) {
    let n = params.len() - 1;
    let (w, bias) = (&params[..n], params[n]);
    let mut loss = w.iter().map(|wi| wi * wi).sum::<f64>() / (2.0 * c);
    let mut grad = vec![0.0; n + 1];
    for ((row, &label), &s) in x.iter().zip(y).zip(sample_weights) {
        let z = dot(w, row) + bias;
        let target = f64::from(label);
        loss += s * (softplus(z) - target * z);
        let residual = s * (sigmoid(z) - target);
        for (gj, xj) in grad.iter_mut().zip(row) {
            *gj += residual * xj;
        }
        grad[n] += residual;
    }
    for (gj, wj) in grad.iter_mut().zip(w) {
        *gj += wj / c;
    }
    (loss, grad)
}

const GRADIENT_TOLERANCE: f64 = 1e-6;
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: u32 = 60;

/// Damped Newton minimization of the weighted regularized loss, started
/// from zero parameters. Fully deterministic: fixed initialization, exact
/// Cholesky solves, Armijo backtracking on the analytic loss.
fn minimize(
    x: &[Vec<f64>],
    y: &[bool],
    sample_weights: &[f64],
    c: f64,
    max_iters: usize,
) -> Vec<f64> {
    let n = x[0].len();
    let mut params = vec![0.0; n + 1];
    let (mut loss, mut grad) = loss_and_gradient(x, y, sample_weights, &params, c);
    for _ in 0..max_iters {
        let grad_norm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if grad_norm < GRADIENT_TOLERANCE {
            break;
        }

        let direction = newton_direction(x, sample_weights, &params, c, &grad, n);
        let slope = dot(&grad, &direction);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(p, d)| p + step * d)
                .collect();
            let (candidate_loss, candidate_grad) =
                loss_and_gradient(x, y, sample_weights, &candidate, c);
            if candidate_loss <= loss + ARMIJO_C * step * slope {
                accepted = Some((candidate, candidate_loss, candidate_grad));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((candidate, candidate_loss, candidate_grad)) => {
                params = candidate;
                loss = candidate_loss;
                grad = candidate_grad;
            }
            // No descent at machine precision: treat as converged.
            None => break,
        }
    }
    params
}

/// Solves `H d = -g` for the Newton direction, where `H` is the exact
/// Hessian (curvature-weighted Gram matrix plus `1/C` ridge on the weight
/// block, none on the bias). Falls back to steepest descent if the
/// factorization fails after progressive jitter.
fn newton_direction(
    x: &[Vec<f64>],
    sample_weights: &[f64],
    params: &[f64],
    c: f64,
    grad: &[f64],
    n: usize,
) -> Vec<f64> {
    let (w, bias) = (&params[..n], params[n]);
    let mut hessian = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (row, &s) in x.iter().zip(sample_weights) {
        let p = sigmoid(dot(w, row) + bias);
        let curvature = s * p * (1.0 - p);
        for j in 0..=n {
            let xj = if j < n { row[j] } else { 1.0 };
            for i in j..=n {
                let xi = if i < n { row[i] } else { 1.0 };
                hessian[(i, j)] += curvature * xi * xj;
            }
        }
    }
    for j in 0..n {
        hessian[(j, j)] += 1.0 / c;
    }
    for j in 0..=n {
        for i in 0..j {
            hessian[(i, j)] = hessian[(j, i)];
        }
    }

    let rhs = DVector::from_iterator(n + 1, grad.iter().map(|g| -g));
    let scale = (0..=n).map(|j| hessian[(j, j)]).fold(1.0, f64::max);
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut attempt = hessian.clone();
        for j in 0..=n {
            attempt[(j, j)] += jitter;
        }
        if let Some(cholesky) = attempt.cholesky() {
            return cholesky.solve(&rhs).iter().copied().collect();
        }
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 10.0
        };
    }
    rhs.iter().copied().collect()
}

/// Trains a balanced logistic screener at fixed `C`. The scaler is fitted
/// on this training set and stored in the model, so inference always sees
/// consistently scaled inputs. The seed is accepted for interface
/// stability; the deterministic Newton solver does not consume randomness.
pub fn train_lr(
    ts: &TrainingSet,
    layout: Layout,
    scaler_kind: ScalerKind,
    c: f64,
    max_iters: usize,
    _seed: u64,
) -> Result<LrModel, ModelError> {
    // `partial_cmp` keeps NaN out alongside the non-positive values.
    if c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(ModelError::NonPositiveC(c));
    }
    let scaler = fit_scaler(scaler_kind, ts.features());
    let scaled = apply_scaler(&scaler, ts.features());
    let sample_weights = balanced_weights(ts.labels());
    let params = minimize(&scaled, ts.labels(), &sample_weights, c, max_iters);
    let n = ts.dimension();
    Ok(LrModel {
        layout,
        c,
        scaler,
        weights: params[..n].to_vec(),
        bias: params[n],
        classifier: ClassifierKind::LogisticRegression,
    })
}

/// Selects the grid `C` maximizing mean inner-fold validation AUC; ties go
/// to the smallest `C`. One stratified fold assignment is drawn per call
/// and reused for every grid value so the comparison is paired.
pub fn tune_c(ts: &TrainingSet, layout: Layout, config: &TrainConfig) -> Result<f64, ModelError> {
    if config.c_grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let mut grid = config.c_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if grid.len() == 1 {
        return Ok(grid[0]);
    }

    let folds = eval::stratified_kfold(ts.labels(), config.inner_folds, config.seed)?;
    let mut best: Option<(f64, f64)> = None;
    for &c in &grid {
        let mut fold_aucs = Vec::with_capacity(config.inner_folds);
        for fold in 0..config.inner_folds {
            let train = ts.subset(|i| folds[i] != fold)?;
            let model = train_lr(&train, layout, config.scaler, c, config.max_iters, config.seed)?;
            let mut scores = Vec::new();
            let mut labels = Vec::new();
            for i in (0..ts.len()).filter(|&i| folds[i] == fold) {
                scores.push(model.decision_margin(&ts.features()[i])?);
                labels.push(ts.labels()[i]);
            }
            fold_aucs.push(eval::auc(&eval::roc_curve(&scores, &labels)?));
        }
        let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
        // Strict improvement keeps the smallest C on ties (ascending grid).
        if best.is_none_or(|(_, best_auc)| mean_auc > best_auc) {
            best = Some((c, mean_auc));
        }
    }
    Ok(best.unwrap().0)
}

/// Tunes `C` by inner CV, then trains the final model on the full set.
pub fn fit_model(
    ts: &TrainingSet,
    layout: Layout,
    config: &TrainConfig,
) -> Result<LrModel, ModelError> {
    let c = tune_c(ts, layout, config)?;
    train_lr(ts, layout, config.scaler, c, config.max_iters, config.seed)
}

/// One exported color-atom weight, localized at its query color atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorAtomWeight {
    pub color_type: ColorType,
    pub position: [f64; 3],
    pub weight: f64,
}

/// Interpretation record for a model whose layout carries per-color-atom
/// overlap features: the shape weight, optional color-component weights,
/// and each color-atom weight paired with its query color atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightExport {
    pub layout: Layout,
    pub shape_weight: f64,
    /// Present only for layouts with a scalar color feature.
    pub scalar_color_weight: Option<f64>,
    /// Color-type name → weight, for layouts with decomposed components.
    pub component_weights: Option<BTreeMap<String, f64>>,
    pub color_atom_weights: Vec<ColorAtomWeight>,
    pub bias: f64,
}

/// Pairs each trailing color-atom weight with its query color atom.
pub fn export_weights(
    model: &LrModel,
    query_color_atoms: &[ColorAtom],
) -> Result<WeightExport, ModelError> {
    if !model.layout.has_color_atom_overlaps() {
        return Err(ModelError::NoColorAtomFeatures(model.layout));
    }
    let k = query_color_atoms.len();
    let expected = model.layout.dimension(k);
    if model.weights.len() != expected {
        return Err(ModelError::DimensionMismatch {
            expected,
            got: model.weights.len(),
        });
    }

    let mut cursor = 0usize;
    let shape_weight = model.weights[cursor];
    cursor += 1;
    let scalar_color_weight = model.layout.has_scalar_color().then(|| {
        let w = model.weights[cursor];
        cursor += 1;
        w
    });
    let component_weights = model.layout.has_color_components().then(|| {
        let map = ColorType::ALL
            .iter()
            .map(|t| {
                let w = model.weights[cursor];
                cursor += 1;
                (t.name().to_string(), w)
            })
            .collect();
        map
    });
    let color_atom_weights = query_color_atoms
        .iter()
        .zip(&model.weights[cursor..])
        .map(|(atom, &weight)| ColorAtomWeight {
            color_type: atom.color_type,
            position: [atom.position.x, atom.position.y, atom.position.z],
            weight,
        })
        .collect();

    Ok(WeightExport {
        layout: model.layout,
        shape_weight,
        scalar_color_weight,
        component_weights,
        color_atom_weights,
        bias: model.bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn separable_1d(m_neg: usize, m_pos: usize) -> TrainingSet {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..m_neg {
            x.push(vec![-1.0 - (i as f64) * 0.1]);
            y.push(false);
        }
        for i in 0..m_pos {
            x.push(vec![1.0 + (i as f64) * 0.1]);
            y.push(true);
        }
        TrainingSet::new(x, y).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, m: usize, n: usize) -> TrainingSet {
        let x = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let mut y: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        y[0] = true;
        y[1] = false;
        TrainingSet::new(x, y).unwrap()
    }

    #[test]
    fn scaler_examples_follow_the_formulas() {
        let none = fit_scaler(ScalerKind::None, &[vec![3.0], vec![-7.0]]);
        assert_eq!(apply_scaler_row(&none, &[3.0]), vec![3.0]);

        let max_abs = fit_scaler(ScalerKind::MaxAbs, &[vec![-2.0], vec![4.0]]);
        assert_eq!(apply_scaler(&max_abs, &[vec![-2.0], vec![4.0]]), vec![
            vec![-0.5],
            vec![1.0]
        ]);

        let standard = fit_scaler(ScalerKind::Standard, &[vec![0.0], vec![2.0]]);
        assert_eq!(standard.offsets, vec![1.0]);
        assert_eq!(standard.factors, vec![1.0]);
        assert_eq!(apply_scaler(&standard, &[vec![0.0], vec![2.0]]), vec![
            vec![-1.0],
            vec![1.0]
        ]);
    }

    #[test]
    fn constant_columns_get_unit_factors() {
        let rows = vec![vec![0.0, 5.0], vec![0.0, 5.0]];
        let max_abs = fit_scaler(ScalerKind::MaxAbs, &rows);
        assert_eq!(max_abs.factors, vec![1.0, 5.0]);
        let standard = fit_scaler(ScalerKind::Standard, &rows);
        assert_eq!(standard.factors, vec![1.0, 1.0]);
        assert_eq!(apply_scaler_row(&standard, &[0.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn training_set_validates_inputs() {
        assert_eq!(
            TrainingSet::new(vec![], vec![]).unwrap_err(),
            ModelError::EmptyTrainingSet
        );
        assert_eq!(
            TrainingSet::new(vec![vec![1.0], vec![2.0]], vec![true, true]).unwrap_err(),
            ModelError::SingleClass
        );
        assert_eq!(
            TrainingSet::new(vec![vec![1.0], vec![f64::NAN]], vec![true, false]).unwrap_err(),
            ModelError::NonFiniteFeature { row: 1, col: 0 }
        );
        assert_eq!(
            TrainingSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![true, false]).unwrap_err(),
            ModelError::InconsistentDimensions {
                row: 1,
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let ts = random_set(&mut rng, 20, 3);
            let weights = balanced_weights(ts.labels());
            let params: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = 10f64.powf(rng.gen_range(-1.0..2.0));
            let (_, grad) = loss_and_gradient(ts.features(), ts.labels(), &weights, &params, c);
            for j in 0..params.len() {
                let h = 1e-6;
                let mut plus = params.clone();
                plus[j] += h;
                let mut minus = params.clone();
                minus[j] -= h;
                let (lp, _) = loss_and_gradient(ts.features(), ts.labels(), &weights, &plus, c);
                let (lm, _) = loss_and_gradient(ts.features(), ts.labels(), &weights, &minus, c);
                let fd = (lp - lm) / (2.0 * h);
                let rel = (grad[j] - fd).abs() / grad[j].abs().max(1.0);
                assert!(rel < 1e-5, "trial {trial} param {j}: {} vs {fd}", grad[j]);
            }
        }
    }

    #[test]
    fn separable_data_reaches_perfect_training_auc() {
        let ts = separable_1d(10, 10);
        let model = train_lr(&ts, Layout::StCt, ScalerKind::None, 1e4, 10_000, 0).unwrap();
        let scores: Vec<f64> = ts
            .features()
            .iter()
            .map(|x| model.decision_margin(x).unwrap())
            .collect();
        let curve = eval::roc_curve(&scores, ts.labels()).unwrap();
        assert_eq!(eval::auc(&curve), 1.0);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn balanced_weighting_matches_explicit_duplication() {
        // 90 negatives, 10 positives in 2-D with some overlap.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..90 {
            x.push(vec![rng.gen_range(-2.0..1.0), rng.gen_range(-2.0..1.0)]);
            y.push(false);
        }
        for _ in 0..10 {
            x.push(vec![rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]);
            y.push(true);
        }
        let imbalanced = TrainingSet::new(x.clone(), y.clone()).unwrap();

        // Duplicate each positive 9× so both classes have 90 members;
        // balanced weights on that set are all 1, i.e. plain training.
        let mut dup_x = x.clone();
        let mut dup_y = y.clone();
        for (row, &label) in x.iter().zip(&y) {
            if label {
                for _ in 0..8 {
                    dup_x.push(row.clone());
                    dup_y.push(true);
                }
            }
        }
        let duplicated = TrainingSet::new(dup_x, dup_y).unwrap();

        let c = 1e3;
        let a = train_lr(&imbalanced, Layout::StCt, ScalerKind::None, c, 10_000, 0).unwrap();
        let b = train_lr(&duplicated, Layout::StCt, ScalerKind::None, c, 10_000, 0).unwrap();
        let dot_ab = dot(&a.weights, &b.weights);
        let cosine = dot_ab / (dot(&a.weights, &a.weights).sqrt() * dot(&b.weights, &b.weights).sqrt());
        assert!(cosine >= 0.999, "cosine = {cosine}");
    }

    #[test]
    fn random_labels_cross_validate_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ts = random_set(&mut rng, 1000, 3);
        let folds = eval::stratified_kfold(ts.labels(), 5, 1).unwrap();
        let mut scores = vec![0.0; ts.len()];
        for fold in 0..5 {
            let train = ts.subset(|i| folds[i] != fold).unwrap();
            let model = train_lr(&train, Layout::StCt, ScalerKind::None, 1.0, 10_000, 0).unwrap();
            for i in (0..ts.len()).filter(|&i| folds[i] == fold) {
                scores[i] = model.decision_margin(&ts.features()[i]).unwrap();
            }
        }
        let auc = eval::auc(&eval::roc_curve(&scores, ts.labels()).unwrap());
        assert!((0.45..=0.55).contains(&auc), "chance-level AUC, got {auc}");
    }

    #[test]
    fn retraining_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ts = random_set(&mut rng, 60, 4);
        let a = train_lr(&ts, Layout::StCct, ScalerKind::Standard, 10.0, 10_000, 7).unwrap();
        let b = train_lr(&ts, Layout::StCct, ScalerKind::Standard, 10.0, 10_000, 7).unwrap();
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert_eq!(wa.to_bits(), wb.to_bits());
        }
    }

    #[test]
    fn prediction_examples() {
        let model = LrModel {
            layout: Layout::StCt,
            c: 1.0,
            scaler: fit_scaler(ScalerKind::None, &[vec![0.0, 0.0]]),
            weights: vec![0.0, 0.0],
            bias: 0.0,
            classifier: ClassifierKind::default(),
        };
        assert_eq!(model.predict_proba(&[3.0, -4.0]).unwrap(), 0.5);

        let unit = LrModel {
            weights: vec![1.0, 0.0],
            ..model.clone()
        };
        let p = unit.predict_proba(&[1.0, 0.0]).unwrap();
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-12);
        let saturated = unit.predict_proba(&[50.0, 0.0]).unwrap();
        assert!(saturated > 0.999 && saturated < 1.0);
        assert!(matches!(
            unit.predict_proba(&[1.0]),
            Err(ModelError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn probabilities_rank_exactly_like_margins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts = random_set(&mut rng, 40, 2);
        let model = train_lr(&ts, Layout::StCt, ScalerKind::MaxAbs, 1.0, 10_000, 0).unwrap();
        let margins: Vec<f64> = ts
            .features()
            .iter()
            .map(|x| model.decision_margin(x).unwrap())
            .collect();
        let probas: Vec<f64> = ts
            .features()
            .iter()
            .map(|x| model.predict_proba(x).unwrap())
            .collect();
        let auc_m = eval::auc(&eval::roc_curve(&margins, ts.labels()).unwrap());
        let auc_p = eval::auc(&eval::roc_curve(&probas, ts.labels()).unwrap());
        assert_eq!(auc_m, auc_p);
    }

    #[test]
    fn scaling_commutes_with_compensating_weights() {
        let factors = [2.0, 8.0, 0.5];
        let x = [1.3, -0.7, 2.9];
        let w = [0.4, -1.1, 0.6];
        let scaled_x: Vec<f64> = x.iter().zip(&factors).map(|(v, f)| v / f).collect();
        let rescaled_w: Vec<f64> = w.iter().zip(&factors).map(|(v, f)| v / f).collect();
        let a = dot(&w, &scaled_x);
        let b = dot(&rescaled_w, &x);
        assert!((a - b).abs() < 1e-12);
        assert!((sigmoid(a) - sigmoid(b)).abs() < 1e-12);
    }

    #[test]
    fn tune_selects_smallest_c_on_ties() {
        // Perfectly separable 1-D data: every C reaches inner AUC 1, so the
        // tie rule must select the smallest grid value.
        let ts = separable_1d(12, 12);
        let config = TrainConfig {
            scaler: ScalerKind::None,
            ..TrainConfig::default()
        };
        let c = tune_c(&ts, Layout::StCt, &config).unwrap();
        assert_eq!(c, 1e-4);

        let single = TrainConfig {
            c_grid: vec![0.3],
            ..config.clone()
        };
        assert_eq!(tune_c(&ts, Layout::StCt, &single).unwrap(), 0.3);

        let empty = TrainConfig {
            c_grid: vec![],
            ..config
        };
        assert_eq!(
            tune_c(&ts, Layout::StCt, &empty).unwrap_err(),
            ModelError::EmptyGrid
        );
    }

    #[test]
    fn tuning_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ts = random_set(&mut rng, 60, 3);
        let config = TrainConfig {
            scaler: ScalerKind::MaxAbs,
            seed: 17,
            ..TrainConfig::default()
        };
        let a = tune_c(&ts, Layout::StCct, &config).unwrap();
        let b = tune_c(&ts, Layout::StCct, &config).unwrap();
        assert_eq!(a, b);
        assert!(config.c_grid.contains(&a));
    }

    #[test]
    fn model_json_uses_the_compact_schema() {
        let ts = separable_1d(5, 5);
        let model = train_lr(&ts, Layout::StCao, ScalerKind::MaxAbs, 1.0, 10_000, 0).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        for key in ["\"layout\"", "\"C\"", "\"scaler\"", "\"weights\"", "\"bias\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: LrModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn weight_export_pairs_color_atoms() {
        let query_colors = vec![
            ColorAtom::new(ColorType::Donor, Vector3::new(1.0, 0.0, 0.0)),
            ColorAtom::new(ColorType::Acceptor, Vector3::new(0.0, 2.0, 0.0)),
        ];
        let model = LrModel {
            layout: Layout::StCao,
            c: 1.0,
            scaler: fit_scaler(ScalerKind::None, &[vec![0.0; 3]]),
            weights: vec![2.492, -0.8, 0.3],
            bias: -1.2,
            classifier: ClassifierKind::default(),
        };
        let export = export_weights(&model, &query_colors).unwrap();
        assert_eq!(export.shape_weight, 2.492);
        assert_eq!(export.scalar_color_weight, None);
        assert_eq!(export.component_weights, None);
        assert_eq!(export.color_atom_weights.len(), 2);
        assert_eq!(export.color_atom_weights[0].color_type, ColorType::Donor);
        assert_eq!(export.color_atom_weights[0].weight, -0.8);
        assert_eq!(export.color_atom_weights[1].weight, 0.3);
        assert_eq!(export.bias, -1.2);

        let no_cao = LrModel {
            layout: Layout::StCt,
            weights: vec![1.0, 1.0],
            ..model.clone()
        };
        assert!(matches!(
            export_weights(&no_cao, &query_colors),
            Err(ModelError::NoColorAtomFeatures(Layout::StCt))
        ));

        let wrong_k = export_weights(&model, &query_colors[..1]);
        assert!(matches!(
            wrong_k,
            Err(ModelError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn component_export_names_all_six_types() {
        let model = LrModel {
            layout: Layout::StCctCao,
            c: 1.0,
            scaler: fit_scaler(ScalerKind::None, &[vec![0.0; 8]]),
            weights: vec![1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, -0.9],
            bias: 0.0,
            classifier: ClassifierKind::default(),
        };
        let colors = vec![ColorAtom::new(ColorType::Ring, Vector3::zeros())];
        let export = export_weights(&model, &colors).unwrap();
        let components = export.component_weights.unwrap();
        assert_eq!(components.len(), 6);
        assert_eq!(components["Donor"], 0.1);
        assert_eq!(components["Hydrophobe"], 0.6);
        assert_eq!(export.color_atom_weights[0].weight, -0.9);
    }
}
