//! CSV ingestion: header-driven, with numeric columns optionally min-max
//! normalised, categorical columns one-hot expanded, and rows with missing
//! cells dropped (and counted).

use std::collections::BTreeSet;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub sensitive_col: String,
    pub label_col: Option<String>,
    /// Min-max normalise numeric feature columns into [0, 1].
    pub normalize: bool,
    /// Declared coding for a two-valued sensitive column: (value mapped to 0,
    /// value mapped to 1). Without it, numeric 0/1 passes through and any
    /// other two-valued column is coded in lexicographic order.
    pub sensitive_map: Option<(String, String)>,
}

pub struct CsvLoadReport {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

fn is_missing(v: &str) -> bool {
    let t = v.trim();
    t.is_empty() || t == "?" || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

fn code_binary(
    values: &[&str],
    col: &str,
    map: Option<&(String, String)>,
) -> Result<Vec<u8>> {
    if let Some((zero, one)) = map {
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let t = v.trim();
            if t == zero {
                out.push(0);
            } else if t == one {
                out.push(1);
            } else {
                return Err(Error::schema(format!(
                    "column '{col}': value '{t}' not covered by mapping {zero}->0, {one}->1"
                )));
            }
        }
        return Ok(out);
    }
    let distinct: BTreeSet<&str> = values.iter().map(|v| v.trim()).collect();
    if distinct.iter().all(|v| *v == "0" || *v == "1") {
        return Ok(values.iter().map(|v| u8::from(v.trim() == "1")).collect());
    }
    // accept numeric 0/1 spellings like "0.0"
    let as_num: Option<Vec<f64>> = values
        .iter()
        .map(|v| v.trim().parse::<f64>().ok())
        .collect();
    if let Some(nums) = as_num {
        if nums.iter().all(|&x| x == 0.0 || x == 1.0) {
            return Ok(nums.iter().map(|&x| u8::from(x == 1.0)).collect());
        }
        return Err(Error::schema(format!(
            "column '{col}' is numeric but not binary"
        )));
    }
    if distinct.len() == 2 {
        let pair: Vec<&str> = distinct.into_iter().collect();
        return Ok(values
            .iter()
            .map(|v| u8::from(v.trim() == pair[1]))
            .collect());
    }
    Err(Error::schema(format!(
        "column '{col}' has {} distinct values, need exactly 2",
        distinct.len()
    )))
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<CsvLoadReport> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::schema("empty header row"));
    }
    let sens_idx = headers
        .iter()
        .position(|h| h == &opts.sensitive_col)
        .ok_or_else(|| {
            Error::schema(format!("sensitive column '{}' not found", opts.sensitive_col))
        })?;
    let label_idx = match &opts.label_col {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::schema(format!("label column '{name}' not found")))?,
        ),
        None => None,
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::schema(format!(
                "row with {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        rows.push(record.iter().map(|f| f.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::schema("no complete rows after dropping missing values"));
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != sens_idx && Some(j) != label_idx)
        .collect();

    // type inference: a column is numeric iff every value parses as f64
    let mut numeric: Vec<Option<Vec<f64>>> = Vec::new();
    for &j in &feature_cols {
        let parsed: Option<Vec<f64>> = rows
            .iter()
            .map(|r| r[j].trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        numeric.push(parsed);
    }

    let mut out_cols: Vec<(String, Vec<f64>)> = Vec::new();
    for (slot, &j) in feature_cols.iter().enumerate() {
        let name = &headers[j];
        match &numeric[slot] {
            Some(vals) => {
                let mut vals = vals.clone();
                if opts.normalize {
                    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let range = hi - lo;
                    for v in &mut vals {
                        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
                    }
                }
                out_cols.push((name.clone(), vals));
            }
            None => {
                // categorical: one column per distinct value, sorted
                let distinct: BTreeSet<String> =
                    rows.iter().map(|r| r[j].trim().to_string()).collect();
                for value in distinct {
                    let col: Vec<f64> = rows
                        .iter()
                        .map(|r| f64::from(r[j].trim() == value))
                        .collect();
                    out_cols.push((format!("{name}={value}"), col));
                }
            }
        }
    }

    let sens_values: Vec<&str> = rows.iter().map(|r| r[sens_idx].as_str()).collect();
    let sensitive = code_binary(
        &sens_values,
        &opts.sensitive_col,
        opts.sensitive_map.as_ref(),
    )?;
    let task_label = match label_idx {
        Some(li) => {
            let label_values: Vec<&str> = rows.iter().map(|r| r[li].as_str()).collect();
            Some(code_binary(
                &label_values,
                opts.label_col.as_deref().unwrap_or("label"),
                None,
            )?)
        }
        None => None,
    };

    let n = rows.len();
    let d = out_cols.len();
    if d == 0 {
        return Err(Error::schema("no feature columns left"));
    }
    let mut features = Matrix::zeros(n, d);
    for (j, (_, col)) in out_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            features.set(i, j, v);
        }
    }
    let column_names = out_cols.into_iter().map(|(name, _)| name).collect();
    Ok(CsvLoadReport {
        dataset: Dataset::new(features, sensitive, task_label, column_names)?,
        dropped_rows: dropped,
    })
}
