//! Fairness/accuracy sweep: trains a grid of (method, lambda, repeat) cells,
//! attacks each trained representation with task probes, and summarises the
//! front as binned 75%-quantile accuracies.

use super::probe::{arch_tag, train_probe, ProbeConfig, ProbeTarget};
use super::train::{encode_fresh, train};
use super::{Method, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::derive_seed;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeGrid {
    pub archs: Vec<Vec<usize>>,
    pub lr: f64,
    pub epochs: usize,
    #[serde(default = "default_probe_batch")]
    pub batch_size: usize,
    #[serde(default = "default_probe_holdout")]
    pub holdout_frac: f64,
}

fn default_probe_batch() -> usize {
    64
}

fn default_probe_holdout() -> f64 {
    0.25
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub base: TrainConfig,
    pub methods: Vec<Method>,
    pub lambda_grid: Vec<f64>,
    pub repeats: usize,
    pub probes: ProbeGrid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
    pub probe_arch: String,
    pub delta: f64,
    pub accuracy: f64,
    pub certificate_train: f64,
    pub certificate_test: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinSummary {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Quantile accuracy within the bin; None when the bin is empty.
    pub q75_accuracy: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub bins: Vec<BinSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<MethodSummary>,
}

pub const SWEEP_BINS: usize = 10;
pub const SWEEP_QUANTILE: f64 = 0.75;

/// Fixed-width bins over [0, 1] on the first coordinate (delta); per bin, the
/// linearly-interpolated `q`-quantile of the second coordinate (accuracy).
/// Deltas at or above 1 land in the last bin.
pub fn bin_quantile_summary(pairs: &[(f64, f64)], nbins: usize, q: f64) -> Vec<BinSummary> {
    assert!(nbins > 0 && (0.0..=1.0).contains(&q));
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); nbins];
    for &(delta, acc) in pairs {
        let idx = ((delta.max(0.0) * nbins as f64) as usize).min(nbins - 1);
        buckets[idx].push(acc);
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(i, mut accs)| {
            let count = accs.len();
            let quant = if accs.is_empty() {
                None
            } else {
                accs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let h = (count - 1) as f64 * q;
                let lo = h.floor() as usize;
                let frac = h - lo as f64;
                let hi = (lo + 1).min(count - 1);
                Some(accs[lo] + frac * (accs[hi] - accs[lo]))
            };
            BinSummary {
                lo: i as f64 / nbins as f64,
                hi: (i + 1) as f64 / nbins as f64,
                count,
                q75_accuracy: quant,
            }
        })
        .collect()
}

/// Trains every (method, lambda, repeat) cell, probes the encoded test set on
/// the task label, and returns one row per probe architecture. Cells are
/// independent: each derives its own seed from the base seed and its index,
/// so the output is identical for any `jobs` count.
pub fn pareto_sweep(
    plan: &SweepPlan,
    train_ds: &Dataset,
    test_ds: &Dataset,
    jobs: usize,
) -> Result<SweepTable> {
    plan.base.validate()?;
    if plan.methods.is_empty() {
        return Err(Error::argument("sweep needs at least one method"));
    }
    if plan.lambda_grid.is_empty() {
        return Err(Error::argument("sweep needs at least one lambda"));
    }
    if plan.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::argument("lambdas must be finite and non-negative"));
    }
    if plan.repeats == 0 {
        return Err(Error::argument("repeats must be at least 1"));
    }
    if plan.probes.archs.is_empty() {
        return Err(Error::argument("sweep needs at least one probe architecture"));
    }
    if train_ds.task_label().is_none() || test_ds.task_label().is_none() {
        return Err(Error::argument("pareto sweep needs task labels on both datasets"));
    }

    struct Cell {
        id: usize,
        method: Method,
        lambda: f64,
    }
    let mut cells = Vec::new();
    let mut id = 0usize;
    for &method in &plan.methods {
        for &lambda in &plan.lambda_grid {
            for _ in 0..plan.repeats {
                cells.push(Cell { id, method, lambda });
                id += 1;
            }
        }
    }

    let run_cell = |cell: &Cell| -> Result<Vec<SweepRow>> {
        let seed = derive_seed(plan.base.seed, cell.id as u64);
        let mut cfg = plan.base.clone();
        cfg.method = cell.method;
        cfg.lambda = cell.lambda;
        cfg.seed = seed;
        let model = train(&cfg, train_ds, test_ds)?;
        // The channel is part of an awgn release; baselines release clean
        // encodings.
        let with_noise = cell.method == Method::Awgn;
        let reps = encode_fresh(&model, test_ds, with_noise, derive_seed(seed, 11))?;
        let mut rows = Vec::new();
        for (ai, arch) in plan.probes.archs.iter().enumerate() {
            let pr = train_probe(
                &reps,
                ProbeTarget::Task,
                &ProbeConfig {
                    hidden: arch.clone(),
                    lr: plan.probes.lr,
                    epochs: plan.probes.epochs,
                    batch_size: plan.probes.batch_size,
                    holdout_frac: plan.probes.holdout_frac,
                    seed: derive_seed(seed, 100 + ai as u64),
                },
            )?;
            rows.push(SweepRow {
                method: cell.method.as_str().to_string(),
                lambda: cell.lambda,
                sigma: cfg.sigma,
                seed,
                probe_arch: arch_tag(arch),
                delta: pr.delta,
                accuracy: pr.accuracy,
                certificate_train: model.report.train_certificate.delta_n,
                certificate_test: model.report.test_certificate.delta_n,
            });
        }
        Ok(rows)
    };

    let results: Mutex<Vec<Option<Result<Vec<SweepRow>>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let out = run_cell(&cells[i]);
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });

    let mut rows = Vec::new();
    for slot in results.into_inner().unwrap() {
        match slot {
            Some(Ok(mut r)) => rows.append(&mut r),
            Some(Err(e)) => return Err(e),
            None => return Err(Error::state("a sweep cell was never scheduled")),
        }
    }

    let mut summaries = Vec::new();
    for &method in &plan.methods {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.method == method.as_str())
            .map(|r| (r.delta, r.accuracy))
            .collect();
        summaries.push(MethodSummary {
            method: method.as_str().to_string(),
            bins: bin_quantile_summary(&pairs, SWEEP_BINS, SWEEP_QUANTILE),
        });
    }
    Ok(SweepTable { rows, summaries })
}

impl SweepTable {
    pub fn write_rows_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "method",
            "lambda",
            "sigma",
            "seed",
            "probe_arch",
            "delta",
            "accuracy",
            "certificate_train",
            "certificate_test",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                format!("{}", r.lambda),
                format!("{}", r.sigma),
                format!("{}", r.seed),
                r.probe_arch.clone(),
                format!("{}", r.delta),
                format!("{}", r.accuracy),
                format!("{}", r.certificate_train),
                format!("{}", r.certificate_test),
            ])?;
        }
        w.flush().map_err(crate::error::Error::from)?;
        Ok(())
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["method", "bin_lo", "bin_hi", "count", "q75_accuracy"])?;
        for s in &self.summaries {
            for b in &s.bins {
                w.write_record([
                    s.method.clone(),
                    format!("{}", b.lo),
                    format!("{}", b.hi),
                    format!("{}", b.count),
                    b.q75_accuracy.map(|v| format!("{v}")).unwrap_or_default(),
                ])?;
            }
        }
        w.flush().map_err(crate::error::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_swiss_roll, SwissRollConfig};
    use crate::numkit::Rng;

    #[test]
    fn quantile_summary_matches_hand_arithmetic() {
        // One bin holding accuracies {0.8, 0.9}: 75%-quantile interpolates to
        // 0.8 + 0.75 * 0.1 = 0.875.
        let bins = bin_quantile_summary(&[(0.05, 0.8), (0.05, 0.9)], 10, 0.75);
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[0].count, 2);
        assert!((bins[0].q75_accuracy.unwrap() - 0.875).abs() < 1e-12);
        assert!(bins[1..].iter().all(|b| b.q75_accuracy.is_none() && b.count == 0));
    }

    #[test]
    fn quantile_summary_edge_cases() {
        // delta = 1.0 lands in the last bin; a singleton bin returns its own
        // accuracy; bin edges are [i/10, (i+1)/10).
        let bins = bin_quantile_summary(&[(1.0, 0.5), (0.999, 0.7), (0.15, 0.6)], 10, 0.75);
        assert_eq!(bins[9].count, 2);
        assert!((bins[9].q75_accuracy.unwrap() - 0.65).abs() < 1e-12);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[1].q75_accuracy.unwrap(), 0.6);
        assert!((bins[0].lo, bins[0].hi) == (0.0, 0.1));
    }

    fn task_roll(n: usize, seed: u64) -> Dataset {
        // Swiss roll plus a linear-threshold task label.
        let ds = generate_swiss_roll(&SwissRollConfig::new(n, seed)).unwrap();
        let mut rng = Rng::new(seed ^ 0x5eed);
        let y: Vec<u8> = (0..ds.n())
            .map(|i| {
                let r = ds.features().row(i);
                u8::from(r[0] + 0.5 * r[1] + 0.05 * rng.normal() > 0.75)
            })
            .collect();
        Dataset::new(
            ds.features().clone(),
            ds.sensitive().to_vec(),
            Some(y),
            ds.column_names().to_vec(),
        )
        .unwrap()
    }

    fn tiny_plan(seed: u64) -> SweepPlan {
        SweepPlan {
            base: TrainConfig {
                method: Method::Plain,
                lambda: 0.0,
                sigma: 0.2,
                m: 1,
                lr: 0.05,
                momentum: 0.0,
                epochs: 4,
                batch_size: 16,
                encoder_dims: vec![3, 8, 2],
                decoder_dims: vec![2, 8, 3],
                adversary_hidden: vec![4],
                adv_lr: None,
                seed,
            },
            methods: vec![Method::Plain, Method::AdvCe],
            lambda_grid: vec![0.0, 1.0],
            repeats: 2,
            probes: ProbeGrid {
                archs: vec![vec![4], vec![8]],
                lr: 0.2,
                epochs: 4,
                batch_size: 32,
                holdout_frac: 0.25,
            },
        }
    }

    #[test]
    fn sweep_rows_cover_the_grid_and_parallelism_is_invisible() {
        let tr = task_roll(160, 1);
        let te = task_roll(120, 2);
        let plan = tiny_plan(33);
        let a = pareto_sweep(&plan, &tr, &te, 1).unwrap();
        let b = pareto_sweep(&plan, &tr, &te, 4).unwrap();
        // methods x lambdas x repeats x archs rows.
        assert_eq!(a.rows.len(), 2 * 2 * 2 * 2);
        assert_eq!(serde_json::to_string(&a.rows).unwrap(), serde_json::to_string(&b.rows).unwrap());
        assert_eq!(a.summaries.len(), 2);
        let total: usize = a.summaries.iter().flat_map(|s| &s.bins).map(|b| b.count).sum();
        assert_eq!(total, a.rows.len());
        // Every cell got its own seed.
        let mut seeds: Vec<u64> = a.rows.iter().map(|r| r.seed).collect();
        seeds.dedup();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 8);
    }

    #[test]
    fn sweep_requires_task_labels() {
        let plain = generate_swiss_roll(&SwissRollConfig::new(80, 5)).unwrap();
        let plan = tiny_plan(1);
        assert!(matches!(
            pareto_sweep(&plan, &plain, &plain, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn sweep_csv_write() {
        let tr = task_roll(120, 8);
        let te = task_roll(80, 9);
        let mut plan = tiny_plan(2);
        plan.methods = vec![Method::Plain];
        plan.lambda_grid = vec![0.0];
        plan.repeats = 1;
        let t = pareto_sweep(&plan, &tr, &te, 1).unwrap();
        let dir = std::env::temp_dir();
        let rows_path = dir.join(format!("certifair_sweep_rows_{}.csv", std::process::id()));
        let sum_path = dir.join(format!("certifair_sweep_sum_{}.csv", std::process::id()));
        t.write_rows_csv(&rows_path).unwrap();
        t.write_summary_csv(&sum_path).unwrap();
        let rows = std::fs::read_to_string(&rows_path).unwrap();
        assert!(rows.starts_with("method,lambda,sigma,seed,probe_arch,delta,accuracy,certificate_train,certificate_test"));
        assert_eq!(rows.lines().count(), 1 + t.rows.len());
        let sum = std::fs::read_to_string(&sum_path).unwrap();
        assert_eq!(sum.lines().count(), 1 + 10);
        std::fs::remove_file(rows_path).ok();
        std::fs::remove_file(sum_path).ok();
    }

    #[test]
    fn empty_grids_rejected() {
        let tr = task_roll(80, 3);
        let mut plan = tiny_plan(1);
        plan.lambda_grid.clear();
        assert!(pareto_sweep(&plan, &tr, &tr, 1).is_err());
        let mut plan = tiny_plan(1);
        plan.probes.archs.clear();
        assert!(pareto_sweep(&plan, &tr, &tr, 1).is_err());
        let mut plan = tiny_plan(1);
        plan.repeats = 0;
        assert!(pareto_sweep(&plan, &tr, &tr, 1).is_err());
    }
}
