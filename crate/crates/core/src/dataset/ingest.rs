use std::collections::HashSet;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};

use super::{
    Column, ColumnKind, ColumnSchema, ColumnValues, DatasetBundle, DatasetError, ResourceShape,
    SchemaDoc,
};

/// Cell tokens read as the missing marker (after trimming whitespace).
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "?"];

fn is_missing_token(token: &str) -> bool {
    MISSING_TOKENS.contains(&token)
}

/// Accepts RFC 3339 timestamps, naive `YYYY-MM-DDTHH:MM:SS[.fff]` (read as UTC)
/// and plain `YYYY-MM-DD` dates.
pub(crate) fn parse_datetime(token: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(token) {
        return Some(dt.timestamp_millis());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(token, "%Y-%m-%dT%H:%M:%S%.f") {
        return Some(dt.and_utc().timestamp_millis());
    }
    if let Ok(d) = NaiveDate::parse_from_str(token, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
    }
    None
}

pub(crate) fn render_datetime(millis: i64) -> String {
    DateTime::<Utc>::from_timestamp_millis(millis)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::AutoSi, true))
        .unwrap_or_default()
}

/// Parse a CSV byte stream against its declared schema.
pub fn ingest(csv_bytes: &[u8], schema: &SchemaDoc) -> Result<DatasetBundle, DatasetError> {
    let mut seen = HashSet::new();
    for col in &schema.columns {
        if !seen.insert(col.name.as_str()) {
            return Err(DatasetError::DuplicateColumn(col.name.clone()));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(csv_bytes);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(DatasetError::EmptyFile),
        Some(r) => r.map_err(|e| DatasetError::Csv { row_id: 0, message: e.to_string() })?,
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if header.len() == 1 && header[0].is_empty() {
        return Err(DatasetError::EmptyFile);
    }

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(DatasetError::DuplicateColumn(name.clone()));
        }
    }
    if header.len() != schema.columns.len() {
        return Err(DatasetError::HeaderMismatch(format!(
            "header has {} columns, schema declares {}",
            header.len(),
            schema.columns.len()
        )));
    }
    let ordered: Vec<ColumnSchema> = header
        .iter()
        .map(|name| {
            schema
                .columns
                .iter()
                .find(|c| &c.name == name)
                .cloned()
                .ok_or_else(|| {
                    DatasetError::HeaderMismatch(format!("header column `{name}` is not in the schema"))
                })
        })
        .collect::<Result<_, _>>()?;

    let mut values: Vec<ColumnValues> = ordered
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => ColumnValues::Numeric(Vec::new()),
            ColumnKind::Datetime => ColumnValues::Datetime(Vec::new()),
            _ => ColumnValues::Text(Vec::new()),
        })
        .collect();

    let mut row_count = 0;
    for record in records {
        let row_id = row_count;
        let record = record.map_err(|e| DatasetError::Csv { row_id, message: e.to_string() })?;
        for ((cell, col), store) in record.iter().zip(&ordered).zip(values.iter_mut()) {
            let token = cell.trim();
            let missing = is_missing_token(token);
            let unparseable = |kind| DatasetError::Unparseable {
                row_id,
                column: col.name.clone(),
                token: token.to_string(),
                kind,
            };
            match store {
                ColumnValues::Numeric(v) => v.push(if missing {
                    None
                } else {
                    match token.parse::<f64>() {
                        Ok(x) if x.is_finite() => Some(x),
                        _ => return Err(unparseable("numeric")),
                    }
                }),
                ColumnValues::Datetime(v) => v.push(if missing {
                    None
                } else {
                    Some(parse_datetime(token).ok_or_else(|| unparseable("datetime"))?)
                }),
                ColumnValues::Text(v) => v.push((!missing).then(|| token.to_string())),
            }
        }
        row_count += 1;
    }
    if row_count == 0 {
        return Err(DatasetError::EmptyDataset);
    }

    let columns: Vec<Column> = ordered
        .into_iter()
        .zip(values)
        .map(|(schema, values)| Column { schema, values })
        .collect();
    check_shape(schema.shape, &columns)?;

    let id = DatasetBundle::compute_id(&schema.metadata, schema.shape, &columns, row_count);
    Ok(DatasetBundle {
        id,
        metadata: schema.metadata.clone(),
        shape: schema.shape,
        columns,
        row_count,
    })
}

fn check_shape(shape: ResourceShape, columns: &[Column]) -> Result<(), DatasetError> {
    let count = |kind| columns.iter().filter(|c| c.kind() == kind).count();
    if count(ColumnKind::Key) > 1 {
        return Err(DatasetError::Shape("at most one key column is allowed".into()));
    }
    match shape {
        ResourceShape::Tabular => Ok(()),
        ResourceShape::Timeseries => {
            let times: Vec<&Column> = columns.iter().filter(|c| c.kind() == ColumnKind::Datetime).collect();
            if times.len() != 1 {
                return Err(DatasetError::Shape(format!(
                    "timeseries requires exactly one datetime column, found {}",
                    times.len()
                )));
            }
            let stamps = times[0].datetime().expect("datetime storage");
            if let Some(row) = stamps.iter().position(Option::is_none) {
                return Err(DatasetError::Shape(format!("timeseries timestamp missing at row {row}")));
            }
            if let Some(row) = stamps.windows(2).position(|w| w[1] < w[0]) {
                return Err(DatasetError::Shape(format!(
                    "timeseries timestamps decrease at row {}",
                    row + 1
                )));
            }
            Ok(())
        }
        ResourceShape::RatingsTriple => {
            let cat = count(ColumnKind::Categorical);
            let num = count(ColumnKind::Numeric);
            if cat != 2 || num != 1 {
                return Err(DatasetError::Shape(format!(
                    "ratingsTriple requires two categorical (user, item) columns and one numeric rating, found {cat} and {num}"
                )));
            }
            Ok(())
        }
    }
}
