use std::collections::HashMap;
use std::path::Path;

use super::{Dataset, Sample};
use crate::error::{Error, Result};

/// Load a headered CSV of numeric features plus one label column.
///
/// Every column other than `label_column` is a feature. When every label
/// parses as an integer, labels are densified in ascending numeric order;
/// otherwise they are indexed by first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ::csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let malformed = |row: usize, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason,
    };

    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::UnknownLabelColumn {
            path: path.to_path_buf(),
            column: label_column.to_string(),
        })?;
    let dim = headers.len() - 1;

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| malformed(row, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(malformed(row, format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let mut x = Vec::with_capacity(dim);
        for (j, field) in record.iter().enumerate() {
            if j == label_at {
                continue;
            }
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| malformed(row, format!("column {:?}: {field:?} is not a number", &headers[j])))?;
            if !v.is_finite() {
                return Err(malformed(row, format!("column {:?}: non-finite value", &headers[j])));
            }
            x.push(v);
        }
        features.push(x);
        raw_labels.push(record[label_at].trim().to_string());
    }

    let mut names: Vec<String> = Vec::new();
    let numeric: Option<Vec<i64>> = raw_labels.iter().map(|l| l.parse().ok()).collect();
    match &numeric {
        Some(values) => {
            let mut distinct = values.clone();
            distinct.sort_unstable();
            distinct.dedup();
            names.extend(distinct.iter().map(i64::to_string));
        }
        None => {
            for l in &raw_labels {
                if !names.contains(l) {
                    names.push(l.clone());
                }
            }
        }
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let samples = features
        .into_iter()
        .zip(&raw_labels)
        .enumerate()
        .map(|(i, (features, l))| {
            let key = match &numeric {
                Some(v) => v[i].to_string(),
                None => l.clone(),
            };
            Sample {
                id: i as u64,
                features,
                label: index[key.as_str()],
                task: 0,
            }
        })
        .collect();
    Ok(Dataset {
        dim,
        class_count: names.len(),
        samples,
        class_names: Some(names),
    })
}
