//! The model zoo searched per task type. Every family is a plain fit/predict
//! pair over a [`PipelineDescriptor`]; all fitting is deterministic given the
//! descriptor, the training rows and the seed.
//!
//! The family list is a desk-scale stand-in for an opaque autoML backend:
//! small, diverse, and fully inspectable.

mod bayes;
mod collab;
pub mod encode;
pub mod forecast;
pub mod knn;
pub mod linalg;
mod linear;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use crate::dataset::{ColumnKind, DatasetBundle, RowId};
use crate::hexfloat::HexF64;
use crate::problemgen::{ProblemSpec, TaskType};
pub use encode::FeatureEncoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FamilyId {
    MajorityBaseline,
    GaussianNaiveBayes,
    KNearestNeighbors,
    DecisionTree,
    RandomForest,
    MeanBaseline,
    RidgeRegression,
    #[serde(rename = "kNNRegressor")]
    KnnRegressor,
    RegressionTree,
    NaiveLast,
    SeasonalNaive,
    Autoregressive,
    GlobalMean,
    BiasModel,
}

impl FamilyId {
    pub const ALL: [FamilyId; 14] = [
        FamilyId::MajorityBaseline,
        FamilyId::GaussianNaiveBayes,
        FamilyId::KNearestNeighbors,
        FamilyId::DecisionTree,
        FamilyId::RandomForest,
        FamilyId::MeanBaseline,
        FamilyId::RidgeRegression,
        FamilyId::KnnRegressor,
        FamilyId::RegressionTree,
        FamilyId::NaiveLast,
        FamilyId::SeasonalNaive,
        FamilyId::Autoregressive,
        FamilyId::GlobalMean,
        FamilyId::BiasModel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::MajorityBaseline => "majorityBaseline",
            FamilyId::GaussianNaiveBayes => "gaussianNaiveBayes",
            FamilyId::KNearestNeighbors => "kNearestNeighbors",
            FamilyId::DecisionTree => "decisionTree",
            FamilyId::RandomForest => "randomForest",
            FamilyId::MeanBaseline => "meanBaseline",
            FamilyId::RidgeRegression => "ridgeRegression",
            FamilyId::KnnRegressor => "kNNRegressor",
            FamilyId::RegressionTree => "regressionTree",
            FamilyId::NaiveLast => "naiveLast",
            FamilyId::SeasonalNaive => "seasonalNaive",
            FamilyId::Autoregressive => "autoregressive",
            FamilyId::GlobalMean => "globalMean",
            FamilyId::BiasModel => "biasModel",
        }
    }

    pub fn task(self) -> TaskType {
        use FamilyId::*;
        match self {
            MajorityBaseline | GaussianNaiveBayes | KNearestNeighbors | DecisionTree | RandomForest => {
                TaskType::Classification
            }
            MeanBaseline | RidgeRegression | KnnRegressor | RegressionTree => TaskType::Regression,
            NaiveLast | SeasonalNaive | Autoregressive => TaskType::Forecasting,
            GlobalMean | BiasModel => TaskType::CollaborativeFiltering,
        }
    }

    /// Preprocessing pipeline the family runs with.
    pub fn default_preprocessing(self) -> Vec<PreprocessStep> {
        use FamilyId::*;
        match self {
            GaussianNaiveBayes | KNearestNeighbors | DecisionTree | RandomForest | RidgeRegression
            | KnnRegressor | RegressionTree => vec![
                PreprocessStep::DropMissingRows,
                PreprocessStep::MeanImpute,
                PreprocessStep::OneHotEncode,
                PreprocessStep::Standardize,
            ],
            _ => vec![PreprocessStep::DropMissingRows],
        }
    }

    /// Hyperparameter domains as (name, allowed values), names sorted.
    /// `season` is the dataset's declared seasonal period.
    pub fn domain(self, season: Option<usize>) -> Vec<(&'static str, Vec<HyperValue>)> {
        use FamilyId::*;
        use HyperValue::{Int, Real};
        match self {
            KNearestNeighbors | KnnRegressor => vec![("k", vec![Int(1), Int(3), Int(5), Int(9)])],
            DecisionTree | RegressionTree => vec![("maxDepth", vec![Int(2), Int(4), Int(8)])],
            RandomForest => vec![("maxDepth", vec![Int(4), Int(8)]), ("trees", vec![Int(25), Int(100)])],
            RidgeRegression => vec![("lambda", vec![Real(0.0), Real(0.1), Real(1.0), Real(10.0)])],
            SeasonalNaive => vec![("period", season.map(|p| vec![Int(p as i64)]).unwrap_or_default())],
            Autoregressive => vec![("p", vec![Int(1), Int(2), Int(4), Int(8)])],
            BiasModel => vec![("lambda", vec![Real(0.1), Real(1.0), Real(10.0)])],
            MajorityBaseline | GaussianNaiveBayes | MeanBaseline | NaiveLast | GlobalMean => vec![],
        }
    }

    /// Cartesian product of the domain, first (alphabetically smallest) name outermost.
    pub fn grid(self, season: Option<usize>) -> Vec<Hyperparameters> {
        let mut grid = vec![Hyperparameters::new()];
        for (name, values) in self.domain(season) {
            grid = grid
                .into_iter()
                .flat_map(|point| {
                    values.iter().map(move |v| {
                        let mut p = point.clone();
                        p.insert(name.to_string(), *v);
                        p
                    })
                })
                .collect();
        }
        grid
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Real(f64),
}

impl HyperValue {
    pub fn as_f64(self) -> f64 {
        match self {
            HyperValue::Int(i) => i as f64,
            HyperValue::Real(r) => r,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Real(r) => write!(f, "{r}"),
        }
    }
}

pub type Hyperparameters = BTreeMap<String, HyperValue>;

/// Canonical hyperparameter order: key by key (sorted names), numerically.
pub fn compare_hyperparameters(a: &Hyperparameters, b: &Hyperparameters) -> std::cmp::Ordering {
    let mut ai = a.iter();
    let mut bi = b.iter();
    loop {
        match (ai.next(), bi.next()) {
            (None, None) => return std::cmp::Ordering::Equal,
            (None, Some(_)) => return std::cmp::Ordering::Less,
            (Some(_), None) => return std::cmp::Ordering::Greater,
            (Some((ka, va)), Some((kb, vb))) => {
                let ord = ka.cmp(kb).then_with(|| va.total_cmp(vb));
                if ord.is_ne() {
                    return ord;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PreprocessStep {
    /// Drop training rows whose target is missing.
    DropMissingRows,
    MeanImpute,
    OneHotEncode,
    Standardize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineDescriptor {
    pub family: FamilyId,
    pub hyperparameters: Hyperparameters,
    pub preprocessing: Vec<PreprocessStep>,
}

impl PipelineDescriptor {
    pub fn new(family: FamilyId, hyperparameters: Hyperparameters) -> Self {
        PipelineDescriptor { family, hyperparameters, preprocessing: family.default_preprocessing() }
    }

    /// `family(name=value, ...)`
    pub fn label(&self) -> String {
        let args: Vec<String> = self.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if args.is_empty() {
            self.family.to_string()
        } else {
            format!("{}({})", self.family, args.join(", "))
        }
    }

    fn int(&self, name: &str) -> Result<usize, LearnError> {
        match self.hyperparameters.get(name) {
            Some(HyperValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            _ => Err(LearnError::InvalidHyperparameter(format!("{}: `{name}` must be an integer", self.family))),
        }
    }

    fn real(&self, name: &str) -> Result<f64, LearnError> {
        self.hyperparameters
            .get(name)
            .map(|v| v.as_f64())
            .ok_or_else(|| LearnError::InvalidHyperparameter(format!("{}: `{name}` missing", self.family)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyGrid {
    pub family: FamilyId,
    pub grid: Vec<Hyperparameters>,
}

impl FamilyGrid {
    pub fn descriptors(&self) -> Vec<PipelineDescriptor> {
        self.grid.iter().map(|h| PipelineDescriptor::new(self.family, h.clone())).collect()
    }
}

/// Families and hyperparameter grids for a task. Families whose required
/// input is missing (seasonal naive without a declared period) are omitted.
pub fn families(task: TaskType, season: Option<usize>) -> Vec<FamilyGrid> {
    use FamilyId::*;
    let ids: &[FamilyId] = match task {
        TaskType::Classification => &[MajorityBaseline, GaussianNaiveBayes, KNearestNeighbors, DecisionTree, RandomForest],
        TaskType::Regression => &[MeanBaseline, RidgeRegression, KnnRegressor, RegressionTree],
        TaskType::Forecasting => &[NaiveLast, SeasonalNaive, Autoregressive],
        TaskType::CollaborativeFiltering => &[GlobalMean, BiasModel],
    };
    ids.iter()
        .map(|&family| FamilyGrid { family, grid: family.grid(season) })
        .filter(|g| !g.grid.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "camelCase")]
pub enum Predictions {
    Labels(Vec<String>),
    Values(Vec<f64>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Labels(v) => v.len(),
            Predictions::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        match self {
            Predictions::Labels(v) => Some(v),
            Predictions::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Predictions::Values(v) => Some(v),
            Predictions::Labels(_) => None,
        }
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LearnedParams {
    Majority {
        class: usize,
    },
    Mean {
        #[serde_as(as = "HexF64")]
        value: f64,
    },
    NaiveBayes(bayes::NaiveBayesParams),
    Knn(knn::KnnParams),
    Tree(tree::Tree),
    Forest(tree::Forest),
    Ridge(linear::RidgeParams),
    Forecast(forecast::ForecastParams),
    Bias(collab::BiasParams),
}

/// Equality ignores `training_seconds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FittedModel {
    pub descriptor: PipelineDescriptor,
    pub task_type: TaskType,
    pub target: String,
    pub features: Vec<String>,
    /// Training label set (classification), sorted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<FeatureEncoder>,
    pub params: LearnedParams,
    pub train_row_ids: Vec<RowId>,
    #[serde(skip)]
    pub training_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("no training rows left after preprocessing")]
    EmptyTraining,
    #[error("{family}: singular normal equations (try a positive regularization)")]
    Singular { family: FamilyId },
    #[error("missing feature column `{0}`")]
    MissingColumn(String),
    #[error("{family} is a {family_task} family, not valid for {task}")]
    WrongTask { family: FamilyId, family_task: TaskType, task: TaskType },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("training history too short: need {needed} observations, have {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("target `{0}` has a missing value in the training rows")]
    MissingTarget(String),
    #[error("target column `{column}` is not {expected}")]
    TargetKind { column: String, expected: &'static str },
}

fn now() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

fn check_domain(descriptor: &PipelineDescriptor, season: Option<usize>) -> Result<(), LearnError> {
    let domain = descriptor.family.domain(season);
    for (name, value) in &descriptor.hyperparameters {
        let allowed = domain.iter().find(|(n, _)| n == name).map(|(_, v)| v);
        match allowed {
            Some(values) if values.iter().any(|v| v.total_cmp(value).is_eq()) => {}
            _ => {
                return Err(LearnError::InvalidHyperparameter(format!(
                    "{}: {name}={value} is outside the declared grid",
                    descriptor.family
                )))
            }
        }
    }
    if let Some((name, _)) = domain.iter().find(|(n, _)| !descriptor.hyperparameters.contains_key(*n)) {
        return Err(LearnError::InvalidHyperparameter(format!("{}: `{name}` missing", descriptor.family)));
    }
    Ok(())
}

/// Rows of `rows` with a non-missing target (or an error when dropping is disabled).
fn usable_rows(descriptor: &PipelineDescriptor, bundle: &DatasetBundle, target: &str, rows: &[RowId]) -> Result<Vec<RowId>, LearnError> {
    let col = bundle.column(target).ok_or_else(|| LearnError::MissingColumn(target.to_string()))?;
    let mut out: Vec<RowId> = Vec::with_capacity(rows.len());
    for &r in rows {
        if col.values.is_missing(r) {
            if !descriptor.preprocessing.contains(&PreprocessStep::DropMissingRows) {
                return Err(LearnError::MissingTarget(target.to_string()));
            }
        } else {
            out.push(r);
        }
    }
    Ok(out)
}

/// Class labels of `rows` (target must be categorical).
pub fn label_targets(bundle: &DatasetBundle, target: &str, rows: &[RowId]) -> Result<Vec<Option<String>>, LearnError> {
    let col = bundle.column(target).ok_or_else(|| LearnError::MissingColumn(target.to_string()))?;
    let text = col
        .text()
        .filter(|_| col.kind() == ColumnKind::Categorical)
        .ok_or(LearnError::TargetKind { column: target.to_string(), expected: "categorical" })?;
    Ok(rows.iter().map(|&r| text[r].clone()).collect())
}

/// Numeric values of `rows` (target must be numeric).
pub fn value_targets(bundle: &DatasetBundle, target: &str, rows: &[RowId]) -> Result<Vec<Option<f64>>, LearnError> {
    let col = bundle.column(target).ok_or_else(|| LearnError::MissingColumn(target.to_string()))?;
    let values = col.numeric().ok_or(LearnError::TargetKind { column: target.to_string(), expected: "numeric" })?;
    Ok(rows.iter().map(|&r| values[r]).collect())
}

/// Fit one pipeline on `train_rows` of `bundle` under `spec`.
pub fn fit(
    descriptor: &PipelineDescriptor,
    bundle: &DatasetBundle,
    train_rows: &[RowId],
    spec: &ProblemSpec,
    seed: u64,
) -> Result<FittedModel, LearnError> {
    let started = now();
    let family = descriptor.family;
    if family.task() != spec.task_type {
        return Err(LearnError::WrongTask { family, family_task: family.task(), task: spec.task_type });
    }
    let season = bundle.metadata().season_period;
    check_domain(descriptor, season)?;
    let mut rows = usable_rows(descriptor, bundle, &spec.target, train_rows)?;
    rows.sort_unstable();
    if rows.is_empty() {
        return Err(LearnError::EmptyTraining);
    }

    let mut labels = Vec::new();
    let mut encoder = None;
    let params = match spec.task_type {
        TaskType::Classification => {
            let truth: Vec<String> = label_targets(bundle, &spec.target, &rows)?.into_iter().flatten().collect();
            labels = truth.clone();
            labels.sort();
            labels.dedup();
            let classes: Vec<usize> = truth
                .iter()
                .map(|l| labels.binary_search(l).expect("label in its own set"))
                .collect();
            let enc = FeatureEncoder::fit(bundle, &spec.features, &rows, &descriptor.preprocessing, false)?;
            let x = linalg::Matrix::from_rows(&enc.encode(bundle, &rows)?, enc.width());
            encoder = Some(enc);
            let n_classes = labels.len();
            match family {
                FamilyId::MajorityBaseline => LearnedParams::Majority { class: majority(&classes, n_classes) },
                FamilyId::GaussianNaiveBayes => LearnedParams::NaiveBayes(bayes::fit(&x, &classes, n_classes)),
                FamilyId::KNearestNeighbors => {
                    LearnedParams::Knn(knn::KnnParams::new(descriptor.int("k")?, &x, as_f64(&classes), &rows))
                }
                FamilyId::DecisionTree => LearnedParams::Tree(tree::Tree::fit(
                    &x,
                    &as_f64(&classes),
                    &(0..x.rows).collect::<Vec<_>>(),
                    tree::Criterion::Gini { classes: n_classes },
                    descriptor.int("maxDepth")?,
                )),
                FamilyId::RandomForest => LearnedParams::Forest(tree::Forest::fit(
                    &x,
                    &as_f64(&classes),
                    n_classes,
                    descriptor.int("trees")?,
                    descriptor.int("maxDepth")?,
                    seed,
                )),
                _ => unreachable!("task checked above"),
            }
        }
        TaskType::Regression => {
            let y: Vec<f64> = value_targets(bundle, &spec.target, &rows)?.into_iter().flatten().collect();
            let drop_first = family == FamilyId::RidgeRegression;
            let enc = FeatureEncoder::fit(bundle, &spec.features, &rows, &descriptor.preprocessing, drop_first)?;
            let x = linalg::Matrix::from_rows(&enc.encode(bundle, &rows)?, enc.width());
            encoder = Some(enc);
            match family {
                FamilyId::MeanBaseline => LearnedParams::Mean { value: mean(&y) },
                FamilyId::RidgeRegression => LearnedParams::Ridge(
                    linear::fit(&x, &y, descriptor.real("lambda")?).map_err(|_| LearnError::Singular { family })?,
                ),
                FamilyId::KnnRegressor => LearnedParams::Knn(knn::KnnParams::new(descriptor.int("k")?, &x, y, &rows)),
                FamilyId::RegressionTree => LearnedParams::Tree(tree::Tree::fit(
                    &x,
                    &y,
                    &(0..x.rows).collect::<Vec<_>>(),
                    tree::Criterion::Variance,
                    descriptor.int("maxDepth")?,
                )),
                _ => unreachable!("task checked above"),
            }
        }
        TaskType::Forecasting => {
            let series: Vec<f64> = value_targets(bundle, &spec.target, &rows)?.into_iter().flatten().collect();
            LearnedParams::Forecast(match family {
                FamilyId::NaiveLast => forecast::ForecastParams::naive_last(&series),
                FamilyId::SeasonalNaive => forecast::ForecastParams::seasonal_naive(&series, descriptor.int("period")?)?,
                FamilyId::Autoregressive => forecast::ForecastParams::autoregressive(&series, descriptor.int("p")?)?,
                _ => unreachable!("task checked above"),
            })
        }
        TaskType::CollaborativeFiltering => {
            let y: Vec<f64> = value_targets(bundle, &spec.target, &rows)?.into_iter().flatten().collect();
            match family {
                FamilyId::GlobalMean => LearnedParams::Mean { value: mean(&y) },
                FamilyId::BiasModel => {
                    let (users, items) = collab::keys(bundle, &spec.features, &rows)?;
                    LearnedParams::Bias(collab::fit(&users, &items, &y, descriptor.real("lambda")?))
                }
                _ => unreachable!("task checked above"),
            }
        }
    };

    let training_seconds = started.map(|t| t.elapsed().as_secs_f64()).unwrap_or(0.0);
    Ok(FittedModel {
        descriptor: descriptor.clone(),
        task_type: spec.task_type,
        target: spec.target.clone(),
        features: spec.features.clone(),
        labels,
        encoder,
        params,
        train_row_ids: rows,
        training_seconds,
    })
}

/// Predict `rows` of `bundle`. Forecasting models return the 1..=n step-ahead
/// forecasts for the n requested rows in row order.
pub fn predict(model: &FittedModel, bundle: &DatasetBundle, rows: &[RowId]) -> Result<Predictions, LearnError> {
    let encoded = || -> Result<Vec<Vec<f64>>, LearnError> {
        match &model.encoder {
            Some(enc) => enc.encode(bundle, rows),
            None => Ok(vec![Vec::new(); rows.len()]),
        }
    };
    let as_labels = |classes: Vec<usize>| Predictions::Labels(classes.into_iter().map(|c| model.labels[c].clone()).collect());
    Ok(match &model.params {
        LearnedParams::Majority { class } => {
            // Still validates that the feature columns exist.
            encoded()?;
            as_labels(vec![*class; rows.len()])
        }
        LearnedParams::Mean { value } => {
            if model.encoder.is_some() {
                encoded()?;
            } else if model.task_type == TaskType::CollaborativeFiltering {
                collab::keys(bundle, &model.features, rows)?;
            }
            Predictions::Values(vec![*value; rows.len()])
        }
        LearnedParams::NaiveBayes(p) => as_labels(encoded()?.iter().map(|x| p.predict(x)).collect()),
        LearnedParams::Knn(p) => {
            let x = encoded()?;
            if model.task_type == TaskType::Classification {
                as_labels(x.iter().map(|q| p.classify(q, model.labels.len())).collect())
            } else {
                Predictions::Values(x.iter().map(|q| p.regress(q)).collect())
            }
        }
        LearnedParams::Tree(t) => {
            let out: Vec<f64> = encoded()?.iter().map(|x| t.predict_row(x)).collect();
            if model.task_type == TaskType::Classification {
                as_labels(out.into_iter().map(|v| v as usize).collect())
            } else {
                Predictions::Values(out)
            }
        }
        LearnedParams::Forest(f) => as_labels(encoded()?.iter().map(|x| f.predict_row(x)).collect()),
        LearnedParams::Ridge(p) => Predictions::Values(encoded()?.iter().map(|x| p.predict(x)).collect()),
        LearnedParams::Forecast(p) => Predictions::Values(p.forecast(rows.len())),
        LearnedParams::Bias(p) => {
            let (users, items) = collab::keys(bundle, &model.features, rows)?;
            Predictions::Values(users.iter().zip(&items).map(|(u, i)| p.predict(u.as_deref(), i.as_deref())).collect())
        }
    })
}

impl PartialEq for FittedModel {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor
            && self.task_type == other.task_type
            && self.target == other.target
            && self.features == other.features
            && self.labels == other.labels
            && self.encoder == other.encoder
            && self.params == other.params
            && self.train_row_ids == other.train_row_ids
    }
}

impl FittedModel {
    pub fn predict(&self, bundle: &DatasetBundle, rows: &[RowId]) -> Result<Predictions, LearnError> {
        predict(self, bundle, rows)
    }

    /// Linear models: (intercept, slopes) in original feature units, for
    /// purely numeric feature sets. `None` for other families.
    pub fn linear_coefficients(&self) -> Option<(f64, Vec<f64>)> {
        let (LearnedParams::Ridge(p), Some(enc)) = (&self.params, &self.encoder) else {
            return None;
        };
        let mut intercept = p.intercept;
        let mut slopes = Vec::new();
        for (block, beta) in enc.blocks.iter().zip(&p.coefficients) {
            match block {
                encode::FeatureBlock::Numeric { mean, scale, .. } => {
                    let (m, s) = if enc.standardize { (*mean, *scale) } else { (0.0, 1.0) };
                    let slope = beta / s;
                    intercept -= slope * m;
                    slopes.push(slope);
                }
                encode::FeatureBlock::Categorical { .. } => return None,
            }
        }
        Some((intercept, slopes))
    }
}

fn as_f64(classes: &[usize]) -> Vec<f64> {
    classes.iter().map(|&c| c as f64).collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Most frequent class; ties go to the lowest class index.
pub(crate) fn majority(classes: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes.max(1)];
    for &c in classes {
        counts[c] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}
