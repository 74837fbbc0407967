//! Problem specifications: enumeration from a dataset, refinement by feature
//! removal or metric change, and validated user-created specs.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::dataset::{ColumnKind, DatasetBundle, ResourceShape};

/// Categorical columns with more distinct labels than this are not offered as
/// classification targets.
pub const MAX_CLASS_LABELS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskType {
    Classification,
    Regression,
    Forecasting,
    CollaborativeFiltering,
}

impl TaskType {
    pub const ALL: [TaskType; 4] = [
        TaskType::Classification,
        TaskType::Regression,
        TaskType::Forecasting,
        TaskType::CollaborativeFiltering,
    ];

    /// Metrics valid for this task, in canonical order.
    pub fn metrics(self) -> &'static [MetricId] {
        use MetricId::*;
        match self {
            TaskType::Classification => &[Accuracy, F1Macro, PrecisionMacro, RecallMacro],
            TaskType::Regression | TaskType::CollaborativeFiltering => &[Mse, Rmse, Mae, R2],
            TaskType::Forecasting => &[Rmse, Mae, Mape],
        }
    }

    /// Metrics used when enumerating specs. Collaborative filtering gets the
    /// three error metrics only.
    pub fn enumerated_metrics(self) -> &'static [MetricId] {
        match self {
            TaskType::CollaborativeFiltering => &[MetricId::Mse, MetricId::Rmse, MetricId::Mae],
            t => t.metrics(),
        }
    }

    pub fn is_numeric(self) -> bool {
        !matches!(self, TaskType::Classification)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Classification => "classification",
            TaskType::Regression => "regression",
            TaskType::Forecasting => "forecasting",
            TaskType::CollaborativeFiltering => "collaborativeFiltering",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MetricId {
    Accuracy,
    F1Macro,
    PrecisionMacro,
    RecallMacro,
    Mse,
    Rmse,
    Mae,
    R2,
    Mape,
}

impl MetricId {
    pub fn higher_is_better(self) -> bool {
        matches!(
            self,
            MetricId::Accuracy | MetricId::F1Macro | MetricId::PrecisionMacro | MetricId::RecallMacro | MetricId::R2
        )
    }

    pub fn valid_for(self, task: TaskType) -> bool {
        task.metrics().contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Accuracy => "accuracy",
            MetricId::F1Macro => "f1Macro",
            MetricId::PrecisionMacro => "precisionMacro",
            MetricId::RecallMacro => "recallMacro",
            MetricId::Mse => "mse",
            MetricId::Rmse => "rmse",
            MetricId::Mae => "mae",
            MetricId::R2 => "r2",
            MetricId::Mape => "mape",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown metric `{s}`"))
    }
}

impl std::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown task type `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Provenance {
    Generated,
    UserCreated,
    #[serde(rename_all = "camelCase")]
    RefinedFrom { spec_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProblemSpec {
    pub id: String,
    pub dataset_id: String,
    pub task_type: TaskType,
    pub target: String,
    pub features: Vec<String>,
    pub metric: MetricId,
    pub provenance: Provenance,
}

/// The user-editable part of a spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecFields {
    pub task_type: TaskType,
    pub target: String,
    pub features: Vec<String>,
    pub metric: MetricId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecEdits {
    #[serde(default)]
    pub remove_features: Vec<String>,
    #[serde(default)]
    pub set_metric: Option<MetricId>,
}

/// A single named invariant violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "camelCase")]
pub enum Violation {
    UnknownColumn { column: String },
    EmptyFeatures,
    TargetInFeatures { target: String },
    DuplicateFeature { column: String },
    IdentifierColumn { column: String },
    MetricTaskMismatch { metric: MetricId, task: TaskType },
    TargetKindMismatch { target: String, kind: ColumnKind, task: TaskType },
    TooManyClasses { target: String, labels: usize },
    ShapeMismatch { task: TaskType, shape: ResourceShape },
    NotAFeature { column: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownColumn { column } => write!(f, "unknownColumn: `{column}` does not exist"),
            Violation::EmptyFeatures => write!(f, "emptyFeatures: at least one feature is required"),
            Violation::TargetInFeatures { target } => {
                write!(f, "targetInFeatures: target `{target}` is listed as a feature")
            }
            Violation::DuplicateFeature { column } => write!(f, "duplicateFeature: `{column}` listed twice"),
            Violation::IdentifierColumn { column } => {
                write!(f, "identifierColumn: key/reference column `{column}` cannot be used")
            }
            Violation::MetricTaskMismatch { metric, task } => {
                write!(f, "metricTaskMismatch: metric {metric} is not valid for {task}")
            }
            Violation::TargetKindMismatch { target, kind, task } => write!(
                f,
                "targetKindMismatch: {task} cannot predict `{target}` of kind {}",
                kind.as_str()
            ),
            Violation::TooManyClasses { target, labels } => {
                write!(f, "tooManyClasses: `{target}` has {labels} labels (max {MAX_CLASS_LABELS})")
            }
            Violation::ShapeMismatch { task, shape } => {
                write!(f, "shapeMismatch: {task} is not available for {shape:?} data")
            }
            Violation::NotAFeature { column } => write!(f, "notAFeature: `{column}` is not a feature of the spec"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("invalid problem specification: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("spec belongs to dataset {spec}, not {bundle}")]
    DatasetMismatch { spec: String, bundle: String },
}

impl SpecError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            SpecError::Invalid(v) => v,
            SpecError::DatasetMismatch { .. } => &[],
        }
    }
}

fn spec_id(dataset_id: &str, fields: &SpecFields, provenance: &Provenance) -> String {
    #[derive(Serialize)]
    #[serde(rename_all = "camelCase")]
    struct Content<'a> {
        dataset_id: &'a str,
        fields: &'a SpecFields,
        provenance: &'a Provenance,
    }
    let content = canonical::to_canonical_string(&Content { dataset_id, fields, provenance });
    canonical::short_id("spec", content.as_bytes())
}

impl ProblemSpec {
    fn build(dataset_id: &str, fields: SpecFields, provenance: Provenance) -> Self {
        ProblemSpec {
            id: spec_id(dataset_id, &fields, &provenance),
            dataset_id: dataset_id.to_string(),
            task_type: fields.task_type,
            target: fields.target,
            features: fields.features,
            metric: fields.metric,
            provenance,
        }
    }

    pub fn fields(&self) -> SpecFields {
        SpecFields {
            task_type: self.task_type,
            target: self.target.clone(),
            features: self.features.clone(),
            metric: self.metric,
        }
    }

    /// Canonical sorted-key document.
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self)
    }
}

/// Invariants that do not need the dataset.
fn structural_violations(fields: &SpecFields) -> Vec<Violation> {
    let mut out = Vec::new();
    if fields.features.is_empty() {
        out.push(Violation::EmptyFeatures);
    }
    if fields.features.contains(&fields.target) {
        out.push(Violation::TargetInFeatures { target: fields.target.clone() });
    }
    let mut seen = HashSet::new();
    for f in &fields.features {
        if !seen.insert(f) {
            out.push(Violation::DuplicateFeature { column: f.clone() });
        }
    }
    if !fields.metric.valid_for(fields.task_type) {
        out.push(Violation::MetricTaskMismatch { metric: fields.metric, task: fields.task_type });
    }
    out
}

/// Every invariant violation of `fields` against `bundle`.
pub fn validate_fields(fields: &SpecFields, bundle: &DatasetBundle) -> Vec<Violation> {
    let mut out = structural_violations(fields);
    for name in std::iter::once(&fields.target).chain(&fields.features) {
        match bundle.column(name) {
            None => out.push(Violation::UnknownColumn { column: name.clone() }),
            Some(c) if c.kind().is_identifier() => {
                out.push(Violation::IdentifierColumn { column: name.clone() })
            }
            Some(_) => {}
        }
    }
    let task = fields.task_type;
    if let Some(target) = bundle.column(&fields.target) {
        let kind_ok = match task {
            TaskType::Classification => target.kind() == ColumnKind::Categorical,
            _ => target.kind() == ColumnKind::Numeric,
        };
        if !kind_ok && !target.kind().is_identifier() {
            out.push(Violation::TargetKindMismatch {
                target: fields.target.clone(),
                kind: target.kind(),
                task,
            });
        }
        if task == TaskType::Classification && target.kind() == ColumnKind::Categorical {
            let labels = target.distinct_labels().len();
            if labels > MAX_CLASS_LABELS {
                out.push(Violation::TooManyClasses { target: fields.target.clone(), labels });
            }
        }
    }
    let shape_ok = match task {
        TaskType::Forecasting => bundle.shape() == ResourceShape::Timeseries,
        TaskType::CollaborativeFiltering => bundle.shape() == ResourceShape::RatingsTriple,
        _ => true,
    };
    if !shape_ok {
        out.push(Violation::ShapeMismatch { task, shape: bundle.shape() });
    }
    out
}

pub fn validate_spec(spec: &ProblemSpec, bundle: &DatasetBundle) -> Result<(), SpecError> {
    if spec.dataset_id != bundle.id() {
        return Err(SpecError::DatasetMismatch { spec: spec.dataset_id.clone(), bundle: bundle.id().to_string() });
    }
    let violations = validate_fields(&spec.fields(), bundle);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SpecError::Invalid(violations))
    }
}

fn eligible_feature(kind: ColumnKind) -> bool {
    !kind.is_identifier()
}

/// Default features for a target: every eligible column except the target.
fn default_features(bundle: &DatasetBundle, target: &str) -> Vec<String> {
    bundle
        .columns()
        .iter()
        .filter(|c| c.name() != target && eligible_feature(c.kind()))
        .map(|c| c.name().to_string())
        .collect()
}

/// Tasks a column can be the target of, in canonical task order.
fn target_tasks(bundle: &DatasetBundle, column: &crate::dataset::Column) -> Vec<TaskType> {
    match column.kind() {
        ColumnKind::Categorical if column.distinct_labels().len() <= MAX_CLASS_LABELS => {
            vec![TaskType::Classification]
        }
        ColumnKind::Numeric => {
            let mut tasks = vec![TaskType::Regression];
            match bundle.shape() {
                ResourceShape::Timeseries => tasks.push(TaskType::Forecasting),
                ResourceShape::RatingsTriple => tasks.push(TaskType::CollaborativeFiltering),
                ResourceShape::Tabular => {}
            }
            tasks
        }
        _ => Vec::new(),
    }
}

fn features_for(bundle: &DatasetBundle, task: TaskType, target: &str) -> Vec<String> {
    match task {
        TaskType::Forecasting => bundle.time_column().map(|c| vec![c.name().to_string()]).unwrap_or_default(),
        TaskType::CollaborativeFiltering => bundle
            .columns()
            .iter()
            .filter(|c| c.kind() == ColumnKind::Categorical)
            .map(|c| c.name().to_string())
            .collect(),
        _ => default_features(bundle, target),
    }
}

/// All generated specs for a bundle, ordered by column, then task, then metric.
pub fn enumerate_specs(bundle: &DatasetBundle) -> Vec<ProblemSpec> {
    let mut specs = Vec::new();
    for column in bundle.columns() {
        for task in target_tasks(bundle, column) {
            let features = features_for(bundle, task, column.name());
            if features.is_empty() {
                continue;
            }
            for &metric in task.enumerated_metrics() {
                let fields = SpecFields {
                    task_type: task,
                    target: column.name().to_string(),
                    features: features.clone(),
                    metric,
                };
                specs.push(ProblemSpec::build(bundle.id(), fields, Provenance::Generated));
            }
        }
    }
    specs
}

/// Drop features and/or change the metric, yielding a spec refined from `spec`.
pub fn refine_spec(spec: &ProblemSpec, edits: &SpecEdits) -> Result<ProblemSpec, SpecError> {
    let mut violations: Vec<Violation> = edits
        .remove_features
        .iter()
        .filter(|f| !spec.features.contains(f))
        .map(|f| Violation::NotAFeature { column: f.clone() })
        .collect();
    let mut fields = spec.fields();
    fields.features.retain(|f| !edits.remove_features.contains(f));
    if let Some(metric) = edits.set_metric {
        fields.metric = metric;
    }
    violations.extend(structural_violations(&fields));
    if !violations.is_empty() {
        return Err(SpecError::Invalid(violations));
    }
    Ok(ProblemSpec::build(
        &spec.dataset_id,
        fields,
        Provenance::RefinedFrom { spec_id: spec.id.clone() },
    ))
}

/// Validate user-supplied fields into a spec with `userCreated` provenance.
pub fn create_spec(fields: SpecFields, bundle: &DatasetBundle) -> Result<ProblemSpec, SpecError> {
    let violations = validate_fields(&fields, bundle);
    if !violations.is_empty() {
        return Err(SpecError::Invalid(violations));
    }
    Ok(ProblemSpec::build(bundle.id(), fields, Provenance::UserCreated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ingest, SchemaDoc};

    fn bundle(cols: &[(&str, &str)], shape: &str, rows: &[&str]) -> DatasetBundle {
        let decl: Vec<String> = cols.iter().map(|(n, k)| format!(r#"{{"name":"{n}","kind":"{k}"}}"#)).collect();
        let schema = SchemaDoc::from_json(&format!(
            r#"{{"name":"t","shape":"{shape}","columns":[{}]}}"#,
            decl.join(",")
        ))
        .unwrap();
        let header: Vec<&str> = cols.iter().map(|(n, _)| *n).collect();
        let csv = format!("{}\n{}\n", header.join(","), rows.join("\n"));
        ingest(csv.as_bytes(), &schema).unwrap()
    }

    fn mixed() -> DatasetBundle {
        bundle(
            &[("label", "categorical"), ("x", "numeric"), ("y", "numeric")],
            "tabular",
            &["a,1,2", "b,2,3", "a,3,1"],
        )
    }

    #[test]
    fn one_categorical_two_numeric_gives_twelve() {
        let specs = enumerate_specs(&mixed());
        assert_eq!(specs.len(), 12);
        assert_eq!(specs[0].target, "label");
        assert_eq!(specs[0].metric, MetricId::Accuracy);
        assert_eq!(specs[4].target, "x");
        assert_eq!(specs[4].features, vec!["label", "y"]);
        assert!(specs.iter().all(|s| s.provenance == Provenance::Generated));
    }

    #[test]
    fn identifiers_only_gives_nothing() {
        let b = bundle(&[("id", "key"), ("name", "reference")], "tabular", &["1,a", "2,b"]);
        assert!(enumerate_specs(&b).is_empty());
    }

    #[test]
    fn identifiers_and_datetimes_excluded() {
        let b = bundle(
            &[("id", "key"), ("when", "datetime"), ("c", "categorical"), ("v", "numeric"), ("r", "reference")],
            "tabular",
            &["1,2020-01-01,a,1,q"],
        );
        let specs = enumerate_specs(&b);
        assert_eq!(specs.len(), 8);
        assert!(specs.iter().all(|s| s.target != "id" && s.target != "when"));
        assert!(specs.iter().all(|s| !s.features.iter().any(|f| f == "id" || f == "r")));
    }

    #[test]
    fn shape_conditional_tasks() {
        let ts = bundle(&[("t", "datetime"), ("v", "numeric")], "timeseries", &["2020-01-01,1", "2020-01-02,2"]);
        let specs = enumerate_specs(&ts);
        // regression x4 + forecasting x3
        assert_eq!(specs.len(), 7);
        assert_eq!(specs.iter().filter(|s| s.task_type == TaskType::Forecasting).count(), 3);
        let ratings = bundle(
            &[("user", "categorical"), ("item", "categorical"), ("rating", "numeric")],
            "ratingsTriple",
            &["u1,i1,4", "u2,i1,3"],
        );
        let specs = enumerate_specs(&ratings);
        // user x4 + item x4 classification, rating regression x4 + cf x3
        assert_eq!(specs.len(), 15);
        let cf: Vec<&ProblemSpec> =
            specs.iter().filter(|s| s.task_type == TaskType::CollaborativeFiltering).collect();
        assert_eq!(cf.len(), 3);
        assert_eq!(cf[0].features, vec!["user", "item"]);
    }

    #[test]
    fn too_many_labels_is_not_a_target() {
        let rows: Vec<String> = (0..60).map(|i| format!("l{i},{i}")).collect();
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        let b = bundle(&[("c", "categorical"), ("v", "numeric")], "tabular", &rows);
        let specs = enumerate_specs(&b);
        assert_eq!(specs.len(), 4);
        assert!(specs.iter().all(|s| s.task_type == TaskType::Regression));
    }

    #[test]
    fn enumeration_is_pure() {
        let b = mixed();
        let a: Vec<String> = enumerate_specs(&b).iter().map(|s| s.to_canonical_json()).collect();
        let c: Vec<String> = enumerate_specs(&b).iter().map(|s| s.to_canonical_json()).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn refine_removes_features() {
        let b = mixed();
        let spec = &enumerate_specs(&b)[0];
        let refined = refine_spec(spec, &SpecEdits { remove_features: vec!["y".into()], set_metric: None }).unwrap();
        assert_eq!(refined.features, vec!["x"]);
        assert_eq!(refined.provenance, Provenance::RefinedFrom { spec_id: spec.id.clone() });
        assert!(validate_spec(&refined, &b).is_ok());
    }

    #[test]
    fn identity_refinement_changes_only_provenance() {
        let spec = &enumerate_specs(&mixed())[0];
        let refined = refine_spec(spec, &SpecEdits::default()).unwrap();
        assert_eq!(refined.fields(), spec.fields());
        assert_ne!(refined.id, spec.id);
    }

    #[test]
    fn refine_errors() {
        let spec = &enumerate_specs(&mixed())[0];
        let all = SpecEdits { remove_features: spec.features.clone(), set_metric: None };
        assert_eq!(refine_spec(spec, &all), Err(SpecError::Invalid(vec![Violation::EmptyFeatures])));
        let bad_metric = SpecEdits { remove_features: vec![], set_metric: Some(MetricId::Mse) };
        assert!(matches!(
            refine_spec(spec, &bad_metric).unwrap_err().violations(),
            [Violation::MetricTaskMismatch { .. }]
        ));
        let unknown = SpecEdits { remove_features: vec!["zzz".into()], set_metric: None };
        assert!(matches!(refine_spec(spec, &unknown).unwrap_err().violations(), [Violation::NotAFeature { .. }]));
    }

    #[test]
    fn create_reports_each_violation() {
        let b = mixed();
        let ok = create_spec(
            SpecFields { task_type: TaskType::Regression, target: "x".into(), features: vec!["label".into(), "y".into()], metric: MetricId::Mse },
            &b,
        )
        .unwrap();
        assert_eq!(ok.provenance, Provenance::UserCreated);

        let err = create_spec(
            SpecFields { task_type: TaskType::Regression, target: "label".into(), features: vec!["x".into()], metric: MetricId::Mse },
            &b,
        )
        .unwrap_err();
        assert!(matches!(err.violations(), [Violation::TargetKindMismatch { .. }]));

        let err = create_spec(
            SpecFields { task_type: TaskType::Regression, target: "x".into(), features: vec!["x".into(), "q".into()], metric: MetricId::Accuracy },
            &b,
        )
        .unwrap_err();
        let v = err.violations();
        assert!(v.contains(&Violation::TargetInFeatures { target: "x".into() }));
        assert!(v.contains(&Violation::UnknownColumn { column: "q".into() }));
        assert!(v.contains(&Violation::MetricTaskMismatch { metric: MetricId::Accuracy, task: TaskType::Regression }));
        assert!(err.to_string().contains("targetInFeatures"));
    }

    #[test]
    fn forecasting_requires_timeseries() {
        let err = create_spec(
            SpecFields { task_type: TaskType::Forecasting, target: "x".into(), features: vec!["y".into()], metric: MetricId::Rmse },
            &mixed(),
        )
        .unwrap_err();
        assert!(matches!(err.violations(), [Violation::ShapeMismatch { .. }]));
    }

    #[test]
    fn metric_directions() {
        assert!(MetricId::Accuracy.higher_is_better());
        assert!(MetricId::R2.higher_is_better());
        assert!(!MetricId::Mse.higher_is_better());
        assert!(!MetricId::Mape.higher_is_better());
        assert_eq!("f1Macro".parse::<MetricId>().unwrap(), MetricId::F1Macro);
        assert!("nope".parse::<MetricId>().is_err());
    }
}
