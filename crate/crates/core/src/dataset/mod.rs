//! Schema-annotated datasets: ingestion, canonical re-serialization, summaries
//! and row selectors for cross-linking.
//!
//! Column kinds are always declared by the schema document; nothing is inferred.

mod ingest;
mod summary;

pub use ingest::{ingest, MISSING_TOKENS};
pub use summary::{
    bin_edges, bin_index, rows_matching, summarize, ColumnSummary, DatasetSummary,
    FrequencyEntry, RowSelector, SummaryDetail, DEFAULT_BIN_COUNT,
};

use serde::{Deserialize, Serialize};

use crate::canonical;

pub type RowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
    Datetime,
    Key,
    Reference,
}

impl ColumnKind {
    /// Identifier-like columns never serve as targets or features.
    pub fn is_identifier(self) -> bool {
        matches!(self, ColumnKind::Key | ColumnKind::Reference)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
            ColumnKind::Datetime => "datetime",
            ColumnKind::Key => "key",
            ColumnKind::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ResourceShape {
    Tabular,
    Timeseries,
    RatingsTriple,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetMetadata {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub source: String,
    /// Declared seasonal period (in observations) for time-series data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season_period: Option<usize>,
}

/// The sidecar schema document accompanying a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchemaDoc {
    #[serde(flatten)]
    pub metadata: DatasetMetadata,
    #[serde(default = "default_shape")]
    pub shape: ResourceShape,
    pub columns: Vec<ColumnSchema>,
}

fn default_shape() -> ResourceShape {
    ResourceShape::Tabular
}

impl SchemaDoc {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::Schema(e.to_string()))
    }
}

/// Typed cell storage for one column. `None` is the explicit missing marker.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    /// Categorical, key and reference columns.
    Text(Vec<Option<String>>),
    /// Milliseconds since the Unix epoch, UTC.
    Datetime(Vec<Option<i64>>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Text(v) => v.len(),
            ColumnValues::Datetime(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: RowId) -> bool {
        match self {
            ColumnValues::Numeric(v) => v[row].is_none(),
            ColumnValues::Text(v) => v[row].is_none(),
            ColumnValues::Datetime(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub schema: ColumnSchema,
    pub values: ColumnValues,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.schema.kind
    }

    pub fn numeric(&self) -> Option<&[Option<f64>]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self) -> Option<&[Option<String>]> {
        match &self.values {
            ColumnValues::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn datetime(&self) -> Option<&[Option<i64>]> {
        match &self.values {
            ColumnValues::Datetime(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric view of a numeric or datetime cell (datetimes as epoch seconds).
    pub fn as_f64(&self, row: RowId) -> Option<f64> {
        match &self.values {
            ColumnValues::Numeric(v) => v[row],
            ColumnValues::Datetime(v) => v[row].map(|ms| ms as f64 / 1000.0),
            ColumnValues::Text(_) => None,
        }
    }

    /// Raw numeric view (datetimes as epoch milliseconds) used for binning.
    pub(crate) fn as_f64_raw(&self, row: RowId) -> Option<f64> {
        match &self.values {
            ColumnValues::Numeric(v) => v[row],
            ColumnValues::Datetime(v) => v[row].map(|ms| ms as f64),
            ColumnValues::Text(_) => None,
        }
    }

    /// Distinct non-missing labels of a text column, sorted.
    pub fn distinct_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .text()
            .map(|v| v.iter().flatten().cloned().collect())
            .unwrap_or_default();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Cell rendered back to its CSV token. Missing cells render empty.
    pub fn render(&self, row: RowId) -> String {
        match &self.values {
            ColumnValues::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            ColumnValues::Text(v) => v[row].clone().unwrap_or_default(),
            ColumnValues::Datetime(v) => v[row].map(ingest::render_datetime).unwrap_or_default(),
        }
    }
}

pub(crate) fn render_datetime_opt(millis: Option<i64>) -> Option<String> {
    millis.map(ingest::render_datetime)
}

/// An immutable, ingested dataset. Row ids are the dense indices `0..row_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    id: String,
    metadata: DatasetMetadata,
    shape: ResourceShape,
    columns: Vec<Column>,
    row_count: usize,
}

impl DatasetBundle {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn metadata(&self) -> &DatasetMetadata {
        &self.metadata
    }

    pub fn shape(&self) -> ResourceShape {
        self.shape
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn row_ids(&self) -> impl Iterator<Item = RowId> {
        0..self.row_count
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }

    pub fn schema_doc(&self) -> SchemaDoc {
        SchemaDoc {
            metadata: self.metadata.clone(),
            shape: self.shape,
            columns: self.columns.iter().map(|c| c.schema.clone()).collect(),
        }
    }

    /// The single datetime column of a time-series bundle.
    pub fn time_column(&self) -> Option<&Column> {
        self.columns.iter().find(|c| c.kind() == ColumnKind::Datetime)
    }

    /// Canonical CSV rendering; re-ingesting it with [`Self::schema_doc`]
    /// reproduces this bundle exactly.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(self.columns.iter().map(|c| c.name()))
            .expect("in-memory write");
        for row in self.row_ids() {
            writer
                .write_record(self.columns.iter().map(|c| c.render(row)))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// One row as column name → rendered cell.
    pub fn row_record(&self, row: RowId) -> serde_json::Map<String, serde_json::Value> {
        self.columns
            .iter()
            .map(|c| {
                let value = if c.values.is_missing(row) {
                    serde_json::Value::Null
                } else {
                    match &c.values {
                        ColumnValues::Numeric(v) => serde_json::json!(v[row].unwrap()),
                        _ => serde_json::Value::String(c.render(row)),
                    }
                };
                (c.name().to_string(), value)
            })
            .collect()
    }

    fn compute_id(metadata: &DatasetMetadata, shape: ResourceShape, columns: &[Column], rows: usize) -> String {
        let partial = DatasetBundle {
            id: String::new(),
            metadata: metadata.clone(),
            shape,
            columns: columns.to_vec(),
            row_count: rows,
        };
        let mut content = canonical::to_canonical_string(&partial.schema_doc()).into_bytes();
        content.extend_from_slice(partial.to_csv().as_bytes());
        canonical::short_id("ds", &content)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("empty file: no header row")]
    EmptyFile,
    #[error("empty dataset: header present but zero data rows")]
    EmptyDataset,
    #[error("malformed schema document: {0}")]
    Schema(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("header/schema mismatch: {0}")]
    HeaderMismatch(String),
    #[error("row {row_id}, column `{column}`: cannot parse `{token}` as {kind}")]
    Unparseable {
        row_id: RowId,
        column: String,
        token: String,
        kind: &'static str,
    },
    #[error("malformed csv at row {row_id}: {message}")]
    Csv { row_id: RowId, message: String },
    #[error("shape constraint violated: {0}")]
    Shape(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("bin index {index} out of range for {bin_count} bins")]
    BinOutOfRange { index: usize, bin_count: usize },
    #[error("selector does not fit column `{column}` of kind {kind}")]
    SelectorKind { column: String, kind: &'static str },
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> DatasetBundle {
        let schema = SchemaDoc::from_json(
            r#"{"name":"tiny","columns":[
                {"name":"id","kind":"key"},
                {"name":"color","kind":"categorical"},
                {"name":"x","kind":"numeric","unit":"cm"}]}"#,
        )
        .unwrap();
        ingest(b"id,color,x\na,red,1.5\nb,,2\nc,blue,NA\n", &schema).unwrap()
    }

    #[test]
    fn accessors_and_rendering() {
        let b = tiny();
        assert_eq!(b.row_count(), 3);
        assert_eq!(b.column("x").unwrap().as_f64(0), Some(1.5));
        assert_eq!(b.column("color").unwrap().distinct_labels(), vec!["blue", "red"]);
        assert_eq!(b.to_csv(), "id,color,x\na,red,1.5\nb,,2\nc,blue,\n");
        assert_eq!(b.column("x").unwrap().values.missing_count(), 1);
        let rec = b.row_record(1);
        assert_eq!(rec["color"], serde_json::Value::Null);
        assert_eq!(rec["x"], serde_json::json!(2.0));
    }

    #[test]
    fn id_depends_on_content_only() {
        let a = tiny();
        let again = ingest(a.to_csv().as_bytes(), &a.schema_doc()).unwrap();
        assert_eq!(a.id(), again.id());
        assert!(a.id().starts_with("ds-"));
    }
}
