//! Training loops: the noise-channel objective, the two adversarial
//! baselines, fresh-sample encoding, and noise-level selection.

use super::dploss::dp_loss_mc;
use super::probe::{bce_logits_grad, prediction_delta};
use super::{gather_labels, gather_rows, Method, TrainConfig, TrainReport, TrainedModel};
use crate::audit::{empirical_certificate, empirical_tinf, CertificateOptions};
use crate::data::Dataset;
use crate::data::{split, SplitSpec};
use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Activation, Matrix, NetworkParams, Rng, Sgd};
use serde::{Deserialize, Serialize};

fn relu_identity_net(dims: &[usize], rng: &mut Rng) -> Result<NetworkParams> {
    let mut acts = vec![Activation::Relu; dims.len() - 1];
    *acts.last_mut().unwrap() = Activation::Identity;
    NetworkParams::init(dims, &acts, rng)
}

/// Mean squared error over all entries and its gradient wrt the prediction.
fn mse_and_grad(pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
    let n = (pred.rows() * pred.cols()) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for i in 0..pred.rows() {
        for j in 0..pred.cols() {
            let diff = pred.get(i, j) - target.get(i, j);
            loss += diff * diff / n;
            grad.set(i, j, 2.0 * diff / n);
        }
    }
    (loss, grad)
}

/// Adversary loss and d(loss)/d(adversary score). The adversary emits raw
/// scores; cross-entropy fuses the sigmoid into the loss, while the group L1
/// loss applies it explicitly (it averages predicted probabilities). Returns
/// None when the loss is undefined for the batch (group L1 with a group
/// absent).
fn adversary_loss_grad(
    method: Method,
    f: &Matrix,
    s: &[u8],
) -> Result<Option<(f64, Matrix)>> {
    if f.cols() != 1 || f.rows() != s.len() {
        return Err(Error::shape("adversary output must be one column per row"));
    }
    match method {
        Method::AdvCe => bce_logits_grad(f, s).map(Some),
        Method::AdvL1 => {
            let n1 = s.iter().filter(|&&v| v == 1).count();
            let n0 = s.len() - n1;
            if n0 == 0 || n1 == 0 {
                return Ok(None);
            }
            let mut loss = 0.0;
            let mut grad = Matrix::zeros(f.rows(), 1);
            for i in 0..f.rows() {
                let p = 1.0 / (1.0 + (-f.get(i, 0)).exp());
                let slope = p * (1.0 - p);
                if s[i] == 0 {
                    loss += p / n0 as f64;
                    grad.set(i, 0, slope / n0 as f64);
                } else {
                    loss -= p / n1 as f64;
                    grad.set(i, 0, -slope / n1 as f64);
                }
            }
            Ok(Some((loss, grad)))
        }
        _ => Err(Error::state("adversary loss requested for non-adversarial method")),
    }
}

struct LoopOutcome {
    encoder: NetworkParams,
    decoder: NetworkParams,
    adversary: Option<NetworkParams>,
    final_fair: Option<f64>,
    skipped: usize,
}

/// Trains a model per `config` and audits it on both datasets.
///
/// Rows beyond the last full batch of an epoch are unused that epoch (the
/// shuffle rotates them back in). Certificates are leave-one-out plug-in
/// audits of the clean encodings at the config's noise level.
pub fn train(config: &TrainConfig, train_ds: &Dataset, test_ds: &Dataset) -> Result<TrainedModel> {
    config.validate()?;
    if train_ds.d() != config.encoder_dims[0] {
        return Err(Error::argument(format!(
            "encoder expects {} features, dataset has {}",
            config.encoder_dims[0],
            train_ds.d()
        )));
    }
    if test_ds.d() != train_ds.d() {
        return Err(Error::argument("train/test feature dims differ"));
    }
    if train_ds.n() < config.batch_size {
        return Err(Error::argument(format!(
            "dataset of {} rows smaller than one batch of {}",
            train_ds.n(),
            config.batch_size
        )));
    }

    let root = Rng::new(config.seed);
    let outcome = if config.method.is_adversarial() {
        adversarial_loop(config, train_ds, &root)?
    } else {
        channel_loop(config, train_ds, &root)?
    };

    let ztr = outcome.encoder.output(train_ds.features())?;
    let zte = outcome.encoder.output(test_ds.features())?;
    let t_inf = empirical_tinf(&outcome.encoder, train_ds.features())?;
    let train_certificate = empirical_certificate(
        &ztr,
        train_ds.sensitive(),
        None,
        &CertificateOptions {
            sigma: config.sigma,
            seed: root.derive(6).seed(),
            split_tag: "train".into(),
            t_inf: Some(t_inf),
        },
    )?;
    let test_certificate = empirical_certificate(
        &zte,
        test_ds.sensitive(),
        None,
        &CertificateOptions {
            sigma: config.sigma,
            seed: root.derive(7).seed(),
            split_tag: "test".into(),
            t_inf: Some(t_inf),
        },
    )?;

    let adversary_delta = match &outcome.adversary {
        Some(adv) => {
            let fte = adv.output(&zte)?;
            let preds: Vec<u8> = (0..fte.rows()).map(|i| u8::from(fte.get(i, 0) > 0.0)).collect();
            Some(prediction_delta(&preds, test_ds.sensitive())?)
        }
        None => None,
    };

    let xhat = outcome.decoder.output(&ztr)?;
    let (final_recon, _) = mse_and_grad(&xhat, train_ds.features());

    Ok(TrainedModel {
        config: config.clone(),
        encoder: outcome.encoder,
        decoder: outcome.decoder,
        adversary: outcome.adversary,
        report: TrainReport {
            method: config.method,
            final_recon,
            final_fair_loss: outcome.final_fair,
            t_inf,
            skipped_batches: outcome.skipped,
            adversary_delta,
            train_certificate,
            test_certificate,
        },
    })
}

/// Reconstruction plus (for awgn) lambda times the Monte-Carlo parity loss;
/// the parity term fits half the batch as the mixture and queries the other.
fn channel_loop(config: &TrainConfig, ds: &Dataset, root: &Rng) -> Result<LoopOutcome> {
    let mut enc = relu_identity_net(&config.encoder_dims, &mut root.derive(1))?;
    let mut dec = relu_identity_net(&config.decoder_dims, &mut root.derive(2))?;
    let mut shuffle_rng = root.derive(4);
    let mut noise_rng = root.derive(5);
    let mut opt_e = Sgd::new(config.lr, config.momentum);
    let mut opt_d = Sgd::new(config.lr, config.momentum);
    let use_dp = config.method == Method::Awgn && config.lambda > 0.0;

    let n = ds.n();
    let nb = n / config.batch_size;
    let half = config.batch_size / 2;
    let mut skipped = 0usize;
    let mut fair = (0.0, 0usize);
    for epoch in 0..config.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        shuffle_rng.shuffle(&mut idx);
        let mut fsum = 0.0;
        let mut fcount = 0usize;
        for b in 0..nb {
            let bidx = &idx[b * config.batch_size..(b + 1) * config.batch_size];
            let x = gather_rows(ds.features(), bidx);
            let s = gather_labels(ds.sensitive(), bidx);
            let (z, tape_e) = enc.forward(&x)?;
            let (xhat, tape_d) = dec.forward(&z)?;
            let (recon, og_d) = mse_and_grad(&xhat, &x);
            if !recon.is_finite() {
                return Err(Error::numeric(format!(
                    "reconstruction diverged at epoch {epoch}, batch {b}; lower lr"
                )));
            }
            let grads_d = dec.backward(&tape_d, &og_d)?;
            let mut grads_e = enc.backward(&tape_e, &grads_d.input)?;
            if use_dp {
                let xa = gather_rows(ds.features(), &bidx[..half]);
                let xb = gather_rows(ds.features(), &bidx[half..]);
                let step = dp_loss_mc(
                    &enc,
                    &xa,
                    &s[..half],
                    &xb,
                    &s[half..],
                    config.sigma,
                    config.m,
                    &mut noise_rng,
                )?;
                if step.skipped {
                    skipped += 1;
                } else {
                    grads_e.add_scaled(step.grads.as_ref().unwrap(), config.lambda)?;
                    fsum += step.loss;
                    fcount += 1;
                }
            }
            opt_e.step(&mut enc, &grads_e)?;
            opt_d.step(&mut dec, &grads_d)?;
        }
        fair = (fsum, fcount);
    }
    let final_fair = if use_dp && fair.1 > 0 { Some(fair.0 / fair.1 as f64) } else { None };
    Ok(LoopOutcome { encoder: enc, decoder: dec, adversary: None, final_fair, skipped })
}

/// Alternating minimisation: the adversary takes one step on the current
/// clean encodings, then the autoencoder takes one step on
/// `L_rec - lambda * L_adv` against the updated adversary.
fn adversarial_loop(config: &TrainConfig, ds: &Dataset, root: &Rng) -> Result<LoopOutcome> {
    let mut enc = relu_identity_net(&config.encoder_dims, &mut root.derive(1))?;
    let mut dec = relu_identity_net(&config.decoder_dims, &mut root.derive(2))?;
    let mut adv = NetworkParams::mlp(
        config.representation_dim(),
        &config.adversary_hidden,
        1,
        Activation::Relu,
        Activation::Identity,
        &mut root.derive(3),
    )?;
    let mut shuffle_rng = root.derive(4);
    let mut opt_e = Sgd::new(config.lr, config.momentum);
    let mut opt_d = Sgd::new(config.lr, config.momentum);
    let mut opt_a = Sgd::new(config.adv_lr.unwrap_or(config.lr), config.momentum);

    let n = ds.n();
    let nb = n / config.batch_size;
    let mut skipped = 0usize;
    let mut fair = (0.0, 0usize);
    for epoch in 0..config.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        shuffle_rng.shuffle(&mut idx);
        let mut fsum = 0.0;
        let mut fcount = 0usize;
        for b in 0..nb {
            let bidx = &idx[b * config.batch_size..(b + 1) * config.batch_size];
            let x = gather_rows(ds.features(), bidx);
            let s = gather_labels(ds.sensitive(), bidx);

            // Adversary step: encodings are constants here.
            let z_const = enc.output(&x)?;
            let (fa, tape_a) = adv.forward(&z_const)?;
            match adversary_loss_grad(config.method, &fa, &s)? {
                Some((_, og_a)) => {
                    let grads_a = adv.backward(&tape_a, &og_a)?;
                    opt_a.step(&mut adv, &grads_a)?;
                }
                None => skipped += 1,
            }

            // Autoencoder step against the updated adversary.
            let (z, tape_e) = enc.forward(&x)?;
            let (xhat, tape_d) = dec.forward(&z)?;
            let (recon, og_d) = mse_and_grad(&xhat, &x);
            if !recon.is_finite() {
                return Err(Error::numeric(format!(
                    "reconstruction diverged at epoch {epoch}, batch {b}; lower lr"
                )));
            }
            let grads_d = dec.backward(&tape_d, &og_d)?;
            let mut dz = grads_d.input.clone();
            let (fb, tape_a2) = adv.forward(&z)?;
            if let Some((adv_loss, og_a2)) = adversary_loss_grad(config.method, &fb, &s)? {
                let ga = adv.backward(&tape_a2, &og_a2)?;
                dz.add_scaled(&ga.input, -config.lambda)?;
                fsum += adv_loss;
                fcount += 1;
            }
            let grads_e = enc.backward(&tape_e, &dz)?;
            opt_e.step(&mut enc, &grads_e)?;
            opt_d.step(&mut dec, &grads_d)?;
        }
        fair = (fsum, fcount);
    }
    let final_fair = if fair.1 > 0 { Some(fair.0 / fair.1 as f64) } else { None };
    Ok(LoopOutcome { encoder: enc, decoder: dec, adversary: Some(adv), final_fair, skipped })
}

/// Runs a dataset through a trained encoder, optionally through the noise
/// channel. Noise is drawn entry by entry in row-major order from `seed`.
/// Sensitive and task labels are carried over.
pub fn encode_fresh(
    model: &TrainedModel,
    ds: &Dataset,
    with_noise: bool,
    seed: u64,
) -> Result<Dataset> {
    let mut z = model.encoder.output(ds.features())?;
    if with_noise {
        let mut rng = Rng::new(seed);
        let sigma = model.config.sigma;
        for v in z.data_mut() {
            *v += sigma * rng.normal();
        }
    }
    let names: Vec<String> = (0..z.cols()).map(|j| format!("z{j}")).collect();
    Dataset::new(
        z,
        ds.sensitive().to_vec(),
        ds.task_label().map(|t| t.to_vec()),
        names,
    )
}

/// One grid point of a noise-level scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaChoice {
    pub sigma: f64,
    pub delta_train: f64,
    pub delta_test: f64,
    /// |delta_train - delta_test|: how far the train audit generalises.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaSelection {
    pub chosen: f64,
    /// Whether the chosen sigma met the gap threshold (otherwise it is the
    /// argmin of the gap).
    pub hit_threshold: bool,
    pub table: Vec<SigmaChoice>,
}

/// Trains once per candidate noise level on an internal split of `ds` and
/// picks the smallest sigma whose train/test certificate gap is within
/// `threshold` (falling back to the smallest-gap sigma). Candidates are
/// scanned in ascending order.
pub fn select_sigma(
    base: &TrainConfig,
    ds: &Dataset,
    grid: &[f64],
    threshold: f64,
) -> Result<SigmaSelection> {
    if grid.is_empty() {
        return Err(Error::argument("sigma grid is empty"));
    }
    if grid.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::argument("sigma grid entries must be positive"));
    }
    if !(threshold >= 0.0) {
        return Err(Error::argument("gap threshold must be non-negative"));
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    order.dedup();

    let spec = SplitSpec {
        fractions: vec![0.75, 0.25],
        seed: derive_seed(base.seed, 1001),
    };
    let (parts, _) = split(ds, &spec)?;
    let (tr, te) = (&parts[0], &parts[1]);

    let mut table = Vec::new();
    for &sigma in &order {
        let mut cfg = base.clone();
        cfg.sigma = sigma;
        let model = train(&cfg, tr, te)?;
        let dtr = model.report.train_certificate.delta_n;
        let dte = model.report.test_certificate.delta_n;
        table.push(SigmaChoice { sigma, delta_train: dtr, delta_test: dte, gap: (dtr - dte).abs() });
    }
    let hit = table.iter().find(|c| c.gap <= threshold);
    let (chosen, hit_threshold) = match hit {
        Some(c) => (c.sigma, true),
        None => {
            let best = table
                .iter()
                .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap())
                .unwrap();
            (best.sigma, false)
        }
    };
    Ok(SigmaSelection { chosen, hit_threshold, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_swiss_roll, SwissRollConfig};

    fn quick_config(method: Method) -> TrainConfig {
        TrainConfig {
            method,
            lambda: 1.0,
            sigma: 0.3,
            m: 1,
            lr: 0.05,
            momentum: 0.0,
            epochs: 30,
            batch_size: 32,
            encoder_dims: vec![3, 16, 2],
            decoder_dims: vec![2, 16, 3],
            adversary_hidden: vec![8],
            adv_lr: None,
            seed: 11,
        }
    }

    fn roll(n: usize, seed: u64) -> Dataset {
        generate_swiss_roll(&SwissRollConfig::new(n, seed)).unwrap()
    }

    #[test]
    fn plain_autoencoder_learns_reconstruction() {
        let tr = roll(400, 1);
        let te = roll(200, 2);
        let mut cfg = quick_config(Method::Plain);
        cfg.epochs = 60;
        let model = train(&cfg, &tr, &te).unwrap();
        // Features live in the unit box; predicting the mean scores ~1/12.
        assert!(
            model.report.final_recon < 0.04,
            "recon {} should beat the constant predictor",
            model.report.final_recon
        );
        assert!(model.report.final_fair_loss.is_none());
        assert!(model.report.adversary_delta.is_none());
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let tr = roll(200, 3);
        let te = roll(100, 4);
        let mut cfg = quick_config(Method::Awgn);
        cfg.epochs = 5;
        let a = train(&cfg, &tr, &te).unwrap();
        let b = train(&cfg, &tr, &te).unwrap();
        assert_eq!(a.encoder.to_json().unwrap(), b.encoder.to_json().unwrap());
        assert_eq!(a.report.train_certificate.ber, b.report.train_certificate.ber);
    }

    #[test]
    fn lambda_zero_matches_plain_autoencoder() {
        let tr = roll(200, 5);
        let te = roll(100, 6);
        let mut awgn = quick_config(Method::Awgn);
        awgn.lambda = 0.0;
        awgn.epochs = 8;
        let mut plain = awgn.clone();
        plain.method = Method::Plain;
        let a = train(&awgn, &tr, &te).unwrap();
        let p = train(&plain, &tr, &te).unwrap();
        assert_eq!(a.encoder.to_json().unwrap(), p.encoder.to_json().unwrap());
        assert_eq!(a.decoder.to_json().unwrap(), p.decoder.to_json().unwrap());
    }

    fn blobs(n: usize, gap: f64, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 0..n {
            let si = (i % 2) as u8;
            rows.push(vec![
                gap * si as f64 + 0.2 * rng.normal(),
                0.2 * rng.normal(),
                0.2 * rng.normal(),
            ]);
            s.push(si);
        }
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            s,
            None,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn parity_term_lowers_certificate_on_shifted_groups() {
        // Two blobs a clean gap apart: a plain autoencoder keeps the groups
        // separable and audits near delta = 1; the parity term should pull
        // the certificate down substantially.
        let tr = blobs(600, 2.0, 7);
        let te = blobs(300, 2.0, 8);
        let mut plain = quick_config(Method::Plain);
        plain.epochs = 25;
        let mut awgn = plain.clone();
        awgn.method = Method::Awgn;
        awgn.lambda = 8.0;
        let p = train(&plain, &tr, &te).unwrap();
        let a = train(&awgn, &tr, &te).unwrap();
        let dp = p.report.test_certificate.delta_n;
        let da = a.report.test_certificate.delta_n;
        assert!(dp > 0.8, "plain model should audit unfair, got {dp}");
        assert!(da < dp - 0.3, "parity term should cut the certificate: plain {dp}, awgn {da}");
        assert!(a.report.final_fair_loss.is_some());
    }

    #[test]
    fn adversarial_baselines_run_and_report() {
        let tr = roll(300, 9);
        let te = roll(150, 10);
        for method in [Method::AdvCe, Method::AdvL1] {
            let mut cfg = quick_config(method);
            cfg.epochs = 10;
            cfg.lambda = 2.0;
            cfg.lr = 0.01;
            let model = train(&cfg, &tr, &te).unwrap();
            assert!(model.adversary.is_some());
            let delta = model.report.adversary_delta.unwrap();
            assert!((0.0..=1.0).contains(&delta));
            assert!(model.report.final_recon.is_finite());
            assert!(model.report.test_certificate.delta_n >= 0.0);
        }
    }

    #[test]
    fn encode_fresh_noise_semantics() {
        let tr = roll(200, 12);
        let te = roll(100, 13);
        let mut cfg = quick_config(Method::Plain);
        cfg.epochs = 3;
        let model = train(&cfg, &tr, &te).unwrap();

        let clean_a = encode_fresh(&model, &te, false, 1).unwrap();
        let clean_b = encode_fresh(&model, &te, false, 2).unwrap();
        assert_eq!(clean_a.features().data(), clean_b.features().data());

        let noisy_a = encode_fresh(&model, &te, true, 5).unwrap();
        let noisy_b = encode_fresh(&model, &te, true, 5).unwrap();
        assert_eq!(noisy_a.features().data(), noisy_b.features().data());
        let noisy_c = encode_fresh(&model, &te, true, 6).unwrap();
        assert_ne!(noisy_a.features().data(), noisy_c.features().data());

        // Added noise has mean-square close to sigma^2.
        let mut msq = 0.0;
        let n = clean_a.features().data().len();
        for (a, b) in noisy_a.features().data().iter().zip(clean_a.features().data()) {
            msq += (a - b) * (a - b) / n as f64;
        }
        let var = model.config.sigma * model.config.sigma;
        assert!((msq - var).abs() < 0.3 * var, "noise msq {msq} vs sigma^2 {var}");
        assert_eq!(noisy_a.sensitive(), te.sensitive());
    }

    #[test]
    fn select_sigma_independent_groups_prefers_smallest() {
        // Features carry no group signal, so every sigma certifies ~0 on both
        // splits and the smallest one wins.
        let mut rng = Rng::new(20);
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 0..240 {
            rows.push(vec![rng.uniform(), rng.uniform(), rng.uniform()]);
            s.push((i % 2) as u8);
        }
        let ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            s,
            None,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let mut cfg = quick_config(Method::Awgn);
        cfg.epochs = 3;
        cfg.batch_size = 16;
        let sel = select_sigma(&cfg, &ds, &[0.5, 0.05, 0.2], 0.02).unwrap();
        assert_eq!(sel.table.len(), 3);
        assert!(sel.table.windows(2).all(|w| w[0].sigma < w[1].sigma));
        assert_eq!(sel.chosen, 0.05);
        assert!(sel.hit_threshold);
    }

    #[test]
    fn save_load_roundtrip() {
        let tr = roll(200, 30);
        let te = roll(100, 31);
        let mut cfg = quick_config(Method::AdvCe);
        cfg.epochs = 2;
        let model = train(&cfg, &tr, &te).unwrap();
        let dir = std::env::temp_dir().join(format!("certifair_model_{}", std::process::id()));
        model.save(&dir).unwrap();
        let back = TrainedModel::load(&dir).unwrap();
        assert_eq!(back.encoder.to_json().unwrap(), model.encoder.to_json().unwrap());
        assert_eq!(back.report.test_certificate.ber, model.report.test_certificate.ber);
        assert!(back.adversary.is_some());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_inputs_rejected() {
        let tr = roll(100, 40);
        let te = roll(50, 41);
        let mut cfg = quick_config(Method::Plain);
        cfg.encoder_dims = vec![5, 8, 2];
        cfg.decoder_dims = vec![2, 8, 5];
        assert!(matches!(train(&cfg, &tr, &te), Err(Error::Argument(_))));
        let mut cfg = quick_config(Method::Plain);
        cfg.batch_size = 128; // larger than the dataset
        assert!(matches!(train(&cfg, &tr, &te), Err(Error::Argument(_))));
    }

    #[test]
    fn adversary_loss_grads_match_finite_differences() {
        let f = Matrix::from_rows(&[vec![0.3], vec![0.8], vec![0.55], vec![0.2]]).unwrap();
        let s = [0u8, 1, 1, 0];
        for method in [Method::AdvCe, Method::AdvL1] {
            let (_, grad) = adversary_loss_grad(method, &f, &s).unwrap().unwrap();
            let eps = 1e-6;
            for i in 0..f.rows() {
                let mut fp = f.clone();
                fp.set(i, 0, fp.get(i, 0) + eps);
                let mut fm = f.clone();
                fm.set(i, 0, fm.get(i, 0) - eps);
                let lp = adversary_loss_grad(method, &fp, &s).unwrap().unwrap().0;
                let lm = adversary_loss_grad(method, &fm, &s).unwrap().unwrap().0;
                let fd = (lp - lm) / (2.0 * eps);
                assert!(
                    (grad.get(i, 0) - fd).abs() < 1e-5,
                    "{method:?} grad {} vs fd {fd}",
                    grad.get(i, 0)
                );
            }
        }
        // Group L1 is undefined on a single-group batch.
        assert!(adversary_loss_grad(Method::AdvL1, &f, &[1, 1, 1, 1]).unwrap().is_none());
    }
}
