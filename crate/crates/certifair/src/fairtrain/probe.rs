//! Downstream probes: fresh classifiers trained on representation samples to
//! attack the sensitive attribute or to solve the task, with their
//! demographic parity measured on a held-out slice.

use super::{gather_labels, gather_rows};
use crate::data::{split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Activation, Matrix, NetworkParams, Rng, Sgd};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTarget {
    Sensitive,
    Task,
}

fn default_batch() -> usize {
    64
}

fn default_holdout() -> f64 {
    0.25
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Hidden layer widths; empty means a linear probe.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_holdout")]
    pub holdout_frac: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub net: NetworkParams,
    /// |P(f=1 | S=1) - P(f=1 | S=0)| of thresholded predictions on holdout.
    pub delta: f64,
    pub accuracy: f64,
    pub arch: String,
}

pub fn arch_tag(hidden: &[usize]) -> String {
    if hidden.is_empty() {
        "linear".to_string()
    } else {
        hidden.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// Binary cross-entropy computed on raw scores (pre-sigmoid logits) against
/// 0/1 labels, with the gradient wrt the scores. Fusing the sigmoid into the
/// loss keeps the gradient `(sigmoid(z) - s)/n` bounded however saturated the
/// classifier gets; a sigmoid-output head with a chained CE gradient goes
/// numerically dead on confidently-wrong points.
pub(super) fn bce_logits_grad(z: &Matrix, s: &[u8]) -> Result<(f64, Matrix)> {
    if z.cols() != 1 || z.rows() != s.len() {
        return Err(Error::shape("classifier output must be one column per label"));
    }
    let b = s.len() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(z.rows(), 1);
    for i in 0..z.rows() {
        let zi = z.get(i, 0);
        let si = s[i] as f64;
        // softplus(z) - s*z, with softplus(z) = max(z,0) + ln(1 + e^{-|z|})
        loss += (zi.max(0.0) + (-zi.abs()).exp().ln_1p() - si * zi) / b;
        let p = 1.0 / (1.0 + (-zi).exp());
        grad.set(i, 0, (p - si) / b);
    }
    Ok((loss, grad))
}

/// Demographic parity of hard predictions: |mean(pred | S=1) - mean(pred | S=0)|.
pub fn prediction_delta(preds: &[u8], groups: &[u8]) -> Result<f64> {
    if preds.len() != groups.len() {
        return Err(Error::shape("predictions and groups must align"));
    }
    let mut count = [0usize; 2];
    let mut hits = [0usize; 2];
    for (&p, &g) in preds.iter().zip(groups) {
        let g = g as usize;
        if g > 1 {
            return Err(Error::argument("groups must be binary"));
        }
        count[g] += 1;
        hits[g] += p as usize;
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(Error::argument("delta needs both sensitive groups"));
    }
    let r0 = hits[0] as f64 / count[0] as f64;
    let r1 = hits[1] as f64 / count[1] as f64;
    Ok((r1 - r0).abs())
}

/// Per-column mean and standard deviation; constant columns get scale 1 so
/// they standardize to a harmless constant instead of dividing by zero.
fn column_standardizer(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v / n as f64;
        }
    }
    let mut sd = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            let c = x.get(i, j) - mean[j];
            sd[j] += c * c / n as f64;
        }
    }
    for s in &mut sd {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (mean, sd)
}

fn apply_standardizer(x: &Matrix, shift: &[f64], scale: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = (*v - shift[j]) / scale[j];
        }
    }
    out
}

/// Trains a binary classifier (relu body, raw-score head, sigmoid fused into
/// the loss) on a representation dataset and measures its demographic parity
/// and accuracy on an internal stratified holdout. Predictions threshold the
/// score at 0.
pub fn train_probe(reps: &Dataset, target: ProbeTarget, cfg: &ProbeConfig) -> Result<ProbeResult> {
    if !(cfg.lr > 0.0) || !cfg.lr.is_finite() {
        return Err(Error::argument("probe lr must be positive"));
    }
    if cfg.epochs == 0 {
        return Err(Error::argument("probe epochs must be at least 1"));
    }
    if cfg.batch_size < 2 {
        return Err(Error::argument("probe batch_size must be at least 2"));
    }
    if !(cfg.holdout_frac > 0.0 && cfg.holdout_frac < 1.0) {
        return Err(Error::argument("holdout_frac must lie in (0, 1)"));
    }
    let (n0, n1) = reps.group_counts();
    if n0 < 2 || n1 < 2 {
        return Err(Error::argument(
            "probe delta needs at least two rows of each sensitive group",
        ));
    }
    if target == ProbeTarget::Task && reps.task_label().is_none() {
        return Err(Error::argument("representation set has no task labels"));
    }

    let spec = SplitSpec {
        fractions: vec![1.0 - cfg.holdout_frac, cfg.holdout_frac],
        seed: derive_seed(cfg.seed, 7),
    };
    let (parts, _) = split(reps, &spec)?;
    let (fit, hold) = (&parts[0], &parts[1]);
    let labels_of = |ds: &Dataset| -> Vec<u8> {
        match target {
            ProbeTarget::Sensitive => ds.sensitive().to_vec(),
            ProbeTarget::Task => ds.task_label().unwrap().to_vec(),
        }
    };
    let fit_labels = labels_of(fit);

    // Probes standardize their inputs (a downstream user would) so training
    // behaves the same whatever scale the encoder settled on. The affine map
    // is folded back into the first layer so the returned net — and the
    // holdout evaluation — read raw representation space.
    let (shift, scale) = column_standardizer(fit.features());
    let fit_x = apply_standardizer(fit.features(), &shift, &scale);

    let mut init_rng = Rng::new(derive_seed(cfg.seed, 1));
    let mut net = NetworkParams::mlp(
        reps.d(),
        &cfg.hidden,
        1,
        Activation::Relu,
        Activation::Identity,
        &mut init_rng,
    )?;
    let mut opt = Sgd::new(cfg.lr, 0.9);
    let mut shuffle_rng = Rng::new(derive_seed(cfg.seed, 2));

    let n = fit.n();
    let bs = cfg.batch_size.min(n);
    let nb = n / bs;
    for epoch in 0..cfg.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        shuffle_rng.shuffle(&mut idx);
        for b in 0..nb {
            let bidx = &idx[b * bs..(b + 1) * bs];
            let x = gather_rows(&fit_x, bidx);
            let y = gather_labels(&fit_labels, bidx);
            let (f, tape) = net.forward(&x)?;
            let (loss, og) = bce_logits_grad(&f, &y)?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "probe loss diverged at epoch {epoch}, batch {b}"
                )));
            }
            let grads = net.backward(&tape, &og)?;
            opt.step(&mut net, &grads)?;
        }
    }

    net.absorb_input_affine(&shift, &scale)?;
    let fh = net.output(hold.features())?;
    let preds: Vec<u8> = (0..fh.rows()).map(|i| u8::from(fh.get(i, 0) > 0.0)).collect();
    let hold_labels = labels_of(hold);
    let correct = preds.iter().zip(&hold_labels).filter(|(p, l)| p == l).count();
    let accuracy = correct as f64 / preds.len() as f64;
    let delta = prediction_delta(&preds, hold.sensitive())?;
    Ok(ProbeResult { net, delta, accuracy, arch: arch_tag(&cfg.hidden) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_cfg(hidden: Vec<usize>, epochs: usize, seed: u64) -> ProbeConfig {
        ProbeConfig {
            hidden,
            lr: 0.3,
            epochs,
            batch_size: 128,
            holdout_frac: 0.25,
            seed,
        }
    }

    fn noise_reps(n: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 0..n {
            rows.push(vec![rng.uniform(), rng.uniform()]);
            s.push((i % 2) as u8);
        }
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            s,
            None,
            vec!["z0".into(), "z1".into()],
        )
        .unwrap()
    }

    #[test]
    fn pure_noise_reps_have_no_parity() {
        let reps = noise_reps(5000, 1);
        let r = train_probe(&reps, ProbeTarget::Sensitive, &probe_cfg(vec![16], 5, 2)).unwrap();
        // 1250 holdout rows leave ~0.03 of binomial jitter on delta.
        assert!(r.delta < 0.1, "no-signal delta should be ~0, got {}", r.delta);
        assert!((0.4..0.6).contains(&r.accuracy), "accuracy {} should be ~0.5", r.accuracy);
    }

    #[test]
    fn leaked_attribute_is_fully_recovered() {
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 0..400 {
            let si = (i % 2) as u8;
            rows.push(vec![si as f64, 1.0 - si as f64]);
            s.push(si);
        }
        let reps = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            s,
            None,
            vec!["z0".into(), "z1".into()],
        )
        .unwrap();
        let r = train_probe(&reps, ProbeTarget::Sensitive, &probe_cfg(vec![8], 40, 3)).unwrap();
        assert!(r.delta > 0.95, "perfect leak should give delta ~1, got {}", r.delta);
        assert!(r.accuracy > 0.95);
    }

    #[test]
    fn probe_separates_shifted_rolls() {
        let ds = crate::data::generate_swiss_roll(&crate::data::SwissRollConfig {
            n: 4000,
            shift: [-10.0, -10.0, 0.0],
            noise_sd: 0.0,
            seed: 77,
        })
        .unwrap();
        let cfg = ProbeConfig {
            hidden: vec![32, 32, 32, 32],
            lr: 0.03,
            epochs: 60,
            batch_size: 64,
            holdout_frac: 0.25,
            seed: 5,
        };
        let r = train_probe(&ds, ProbeTarget::Sensitive, &cfg).unwrap();
        assert!(r.accuracy > 0.9, "shifted rolls should separate, acc {}", r.accuracy);
        assert!(r.delta > 0.8, "shifted rolls should separate, delta {}", r.delta);
    }

    #[test]
    fn task_target_learns_the_label() {
        // Task label is a threshold on the first feature; sensitive is noise.
        let mut rng = Rng::new(9);
        let mut rows = Vec::new();
        let mut s = Vec::new();
        let mut y = Vec::new();
        for _ in 0..2000 {
            let a = rng.uniform();
            let b = rng.uniform();
            rows.push(vec![a, b]);
            s.push(rng.coin());
            y.push(u8::from(a > 0.5));
        }
        let reps = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            s,
            Some(y),
            vec!["z0".into(), "z1".into()],
        )
        .unwrap();
        let r = train_probe(&reps, ProbeTarget::Task, &probe_cfg(vec![16], 20, 4)).unwrap();
        assert!(r.accuracy > 0.9, "separable task should be learned, got {}", r.accuracy);
        assert!(r.delta < 0.15, "sensitive-independent task should have small delta");
        assert_eq!(r.arch, "16");
    }

    #[test]
    fn same_seed_is_deterministic() {
        let reps = noise_reps(500, 5);
        let a = train_probe(&reps, ProbeTarget::Sensitive, &probe_cfg(vec![8], 5, 6)).unwrap();
        let b = train_probe(&reps, ProbeTarget::Sensitive, &probe_cfg(vec![8], 5, 6)).unwrap();
        assert_eq!(a.delta, b.delta);
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.net.to_json().unwrap(), b.net.to_json().unwrap());
    }

    #[test]
    fn single_group_reps_rejected() {
        let rows = vec![vec![0.1, 0.2]; 50];
        let reps = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![1u8; 50],
            None,
            vec!["z0".into(), "z1".into()],
        )
        .unwrap();
        let err = train_probe(&reps, ProbeTarget::Sensitive, &probe_cfg(vec![4], 2, 0));
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn task_target_requires_labels() {
        let reps = noise_reps(100, 7);
        let err = train_probe(&reps, ProbeTarget::Task, &probe_cfg(vec![4], 2, 0));
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn delta_arithmetic() {
        // Group 0: predictions 1,0 -> rate 0.5. Group 1: 1,1 -> rate 1.
        let d = prediction_delta(&[1, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!(prediction_delta(&[1, 0], &[0, 0]).is_err());
        assert_eq!(arch_tag(&[]), "linear");
        assert_eq!(arch_tag(&[32, 64]), "32-64");
    }
}
