//! Dataset container, synthetic generators, CSV ingestion and stratified
//! splitting.

mod csv_io;
mod generate;

pub use csv_io::{load_csv, CsvLoadReport, CsvOptions};
pub use generate::{
    binary_digits_f64, binary_digits_rational, generate_atom_family,
    generate_atom_family_rational, generate_staircase, generate_swiss_roll, staircase_index,
    SwissRollConfig,
};

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Matrix, Rng};

/// In-memory tabular dataset: an `n x d` feature matrix, a binary sensitive
/// bit per row, and an optional binary task label.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: Matrix,
    sensitive: Vec<u8>,
    task_label: Option<Vec<u8>>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        sensitive: Vec<u8>,
        task_label: Option<Vec<u8>>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::argument("dataset needs at least one row"));
        }
        if sensitive.len() != features.rows() {
            return Err(Error::shape(format!(
                "{} rows vs {} sensitive labels",
                features.rows(),
                sensitive.len()
            )));
        }
        if sensitive.iter().any(|&s| s > 1) {
            return Err(Error::argument("sensitive values must be 0 or 1"));
        }
        if let Some(labels) = &task_label {
            if labels.len() != features.rows() {
                return Err(Error::shape("task label length mismatch"));
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::argument("task labels must be 0 or 1"));
            }
        }
        if column_names.len() != features.cols() {
            return Err(Error::shape(format!(
                "{} column names for {} columns",
                column_names.len(),
                features.cols()
            )));
        }
        if !features.is_finite() {
            return Err(Error::numeric("non-finite feature values"));
        }
        Ok(Dataset { features, sensitive, task_label, column_names })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn task_label(&self) -> Option<&[u8]> {
        self.task_label.as_deref()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// (rows with s = 0, rows with s = 1).
    pub fn group_counts(&self) -> (usize, usize) {
        let n0 = self.sensitive.iter().filter(|&&s| s == 0).count();
        (n0, self.n() - n0)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(Error::argument("empty row selection"));
        }
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| self.features.row(i).to_vec()).collect();
        Dataset::new(
            Matrix::from_rows(&rows)?,
            idx.iter().map(|&i| self.sensitive[i]).collect(),
            self.task_label
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            self.column_names.clone(),
        )
    }

    /// Writes the dataset as CSV: feature columns under their names, the
    /// sensitive bit as `__sensitive`, and the task label (when present) as
    /// `__label`. Values round-trip exactly through shortest-form floats.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = self.column_names.clone();
        header.push("__sensitive".into());
        if self.task_label.is_some() {
            header.push("__label".into());
        }
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> =
                self.features.row(i).iter().map(|v| format!("{v}")).collect();
            rec.push(format!("{}", self.sensitive[i]));
            if let Some(l) = &self.task_label {
                rec.push(format!("{}", l[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Split plan: fractions must be positive and sum to 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
}

/// Record of exactly which rows went where; enough to reproduce the split.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: Vec<f64>,
    pub row_indices: Vec<Vec<usize>>,
}

impl SplitManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Deterministic stratified split: within each sensitive group rows are
/// shuffled by a seed-derived stream and dealt to the splits by largest
/// remainder, so group proportions are preserved as closely as integer
/// counts allow.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<Dataset>, SplitManifest)> {
    if spec.fractions.is_empty() {
        return Err(Error::argument("split needs at least one fraction"));
    }
    if spec.fractions.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::argument("split fractions must be positive"));
    }
    let total: f64 = spec.fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::argument(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }
    let k = spec.fractions.len();
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); k];
    for group in 0..2u8 {
        let mut idx: Vec<usize> = (0..ds.n()).filter(|&i| ds.sensitive[i] == group).collect();
        if idx.is_empty() {
            continue;
        }
        let mut rng = Rng::new(derive_seed(spec.seed, group as u64));
        rng.shuffle(&mut idx);
        let n_g = idx.len();
        // largest-remainder apportionment of n_g rows over k splits
        let mut counts: Vec<usize> = spec
            .fractions
            .iter()
            .map(|f| (f * n_g as f64).floor() as usize)
            .collect();
        let mut rem: Vec<(f64, usize)> = spec
            .fractions
            .iter()
            .enumerate()
            .map(|(j, f)| (f * n_g as f64 - counts[j] as f64, j))
            .collect();
        rem.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut leftover = n_g - counts.iter().sum::<usize>();
        for &(_, j) in &rem {
            if leftover == 0 {
                break;
            }
            counts[j] += 1;
            leftover -= 1;
        }
        let mut cursor = 0;
        for (j, &c) in counts.iter().enumerate() {
            assigned[j].extend_from_slice(&idx[cursor..cursor + c]);
            cursor += c;
        }
    }
    for part in &mut assigned {
        part.sort_unstable();
    }
    if assigned.iter().any(|p| p.is_empty()) {
        return Err(Error::argument(
            "a split came out empty; use fewer splits or more rows",
        ));
    }
    let manifest = SplitManifest {
        seed: spec.seed,
        fractions: spec.fractions.clone(),
        row_indices: assigned.clone(),
    };
    let parts: Result<Vec<Dataset>> = assigned.iter().map(|p| ds.select_rows(p)).collect();
    Ok((parts?, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let sensitive: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            sensitive,
            None,
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let m = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(Dataset::new(m.clone(), vec![2], None, vec!["x".into()]).is_err());
        assert!(Dataset::new(m.clone(), vec![0, 1], None, vec!["x".into()]).is_err());
        assert!(Dataset::new(m.clone(), vec![0], None, vec![]).is_err());
        let bad = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(Dataset::new(bad, vec![0], None, vec!["x".into()]).is_err());
    }

    #[test]
    fn split_80_20() {
        let ds = toy(100);
        let spec = SplitSpec { fractions: vec![0.8, 0.2], seed: 42 };
        let (parts, manifest) = split(&ds, &spec).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].n() + parts[1].n(), 100);
        assert_eq!(parts[0].n(), 80);
        // stratification: group-1 rows are i % 3 == 0 -> 34 of them; 80%: 27.2
        let (_, g1_all) = ds.group_counts();
        let (_, g1_train) = parts[0].group_counts();
        let frac = g1_train as f64 / g1_all as f64;
        assert!((frac - 0.8).abs() < 0.02, "group fraction {frac}");
        // disjoint and exhaustive
        let mut all: Vec<usize> = manifest.row_indices.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_deterministic() {
        let ds = toy(50);
        let spec = SplitSpec { fractions: vec![0.5, 0.5], seed: 9 };
        let (_, m1) = split(&ds, &spec).unwrap();
        let (_, m2) = split(&ds, &spec).unwrap();
        assert_eq!(m1.row_indices, m2.row_indices);
        let spec2 = SplitSpec { fractions: vec![0.5, 0.5], seed: 10 };
        let (_, m3) = split(&ds, &spec2).unwrap();
        assert_ne!(m1.row_indices, m3.row_indices);
    }

    #[test]
    fn split_errors() {
        let ds = toy(10);
        let bad = SplitSpec { fractions: vec![0.5, 0.4], seed: 0 };
        assert!(split(&ds, &bad).is_err());
        let tiny = toy(3);
        // 12 splits over 3 rows must leave one empty
        let spec = SplitSpec { fractions: vec![1.0 / 12.0; 12], seed: 0 };
        assert!(split(&tiny, &spec).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join(format!("certifair_ds_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![0.125, 1.0 / 3.0], vec![2.5, -0.75]]).unwrap(),
            vec![0, 1],
            Some(vec![1, 0]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        ds.write_csv(&path).unwrap();
        let opts = CsvOptions {
            sensitive_col: "__sensitive".into(),
            label_col: Some("__label".into()),
            normalize: false,
            sensitive_map: None,
        };
        let report = load_csv(&path, &opts).unwrap();
        assert_eq!(report.dropped_rows, 0);
        let back = report.dataset;
        assert_eq!(back.features().data(), ds.features().data());
        assert_eq!(back.sensitive(), ds.sensitive());
        assert_eq!(back.task_label(), ds.task_label());
        std::fs::remove_dir_all(&dir).ok();
    }
}
