use crate::dataset::{ingest, DatasetBundle, SchemaDoc};
use crate::problemgen::{create_spec, MetricId, ProblemSpec, SpecFields, TaskType};

pub fn bundle(cols: &[(&str, &str)], shape: &str, season: Option<usize>, rows: &[String]) -> DatasetBundle {
    let decl: Vec<String> = cols.iter().map(|(n, k)| format!(r#"{{"name":"{n}","kind":"{k}"}}"#)).collect();
    let season = season.map(|s| format!(r#","seasonPeriod":{s}"#)).unwrap_or_default();
    let schema = SchemaDoc::from_json(&format!(
        r#"{{"name":"t","shape":"{shape}"{season},"columns":[{}]}}"#,
        decl.join(",")
    ))
    .unwrap();
    let header: Vec<&str> = cols.iter().map(|(n, _)| *n).collect();
    let csv = format!("{}\n{}\n", header.join(","), rows.join("\n"));
    ingest(csv.as_bytes(), &schema).unwrap()
}

pub fn spec(b: &DatasetBundle, task: TaskType, target: &str, features: &[&str], metric: MetricId) -> ProblemSpec {
    create_spec(
        SpecFields { task_type: task, target: target.into(), features: features.iter().map(|s| s.to_string()).collect(), metric },
        b,
    )
    .unwrap()
}

/// x numeric, c categorical, label in {hi, lo} determined by x.
pub fn labelled(n: usize) -> DatasetBundle {
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let x = (i * 37 % 101) as f64 / 10.0;
            let c = if i % 4 == 0 { "red" } else if i % 4 == 1 { "blue" } else { "green" };
            let label = if x > 5.0 { "hi" } else { "lo" };
            format!("{x},{c},{label}")
        })
        .collect();
    bundle(&[("x", "numeric"), ("c", "categorical"), ("label", "categorical")], "tabular", None, &rows)
}

/// Daily series of `n` points with a trend and a weekly pattern.
pub fn series(n: usize) -> DatasetBundle {
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let day = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64);
            format!("{day},{}", 10.0 + 0.5 * i as f64 + [0.0, 1.0, 3.0, 2.0, -1.0, -2.0, 0.5][i % 7])
        })
        .collect();
    bundle(&[("date", "datetime"), ("y", "numeric")], "timeseries", Some(7), &rows)
}
