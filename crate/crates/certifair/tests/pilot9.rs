//! Throwaway pilot for the noise-sweep acceptance protocol. Not part of the
//! suite; delete after use.

use certifair::data::{generate_swiss_roll, SwissRollConfig};
use certifair::fairtrain::{encode_fresh, train, train_probe, Method, ProbeConfig, ProbeTarget, TrainConfig};
use certifair::numkit::derive_seed;
use std::io::Write as _;

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn probe_max_delta_h(reps: &certifair::data::Dataset, holdout: f64) -> f64 {
    let mut best = 0.0f64;
    for hidden in [vec![32usize; 4], vec![64usize; 4]] {
        let pr = train_probe(
            reps,
            ProbeTarget::Sensitive,
            &ProbeConfig {
                hidden,
                lr: 0.03,
                epochs: 60,
                batch_size: 64,
                holdout_frac: holdout,
                seed: 5,
            },
        )
        .unwrap();
        best = best.max(pr.delta);
    }
    best
}

fn run_var(var: f64) {
    let full = generate_swiss_roll(&SwissRollConfig::new(6000, 1)).unwrap();
    let mut gaps = Vec::new();
    for seed in 1..=15u64 {
        let cfg = TrainConfig {
            method: Method::Awgn,
            lambda: 5.0,
            sigma: var.sqrt(),
            m: 1,
            lr: 0.002,
            momentum: 0.5,
            epochs: 120,
            batch_size: 64,
            encoder_dims: vec![3, 32, 32, 3],
            decoder_dims: vec![3, 32, 32, 3],
            adversary_hidden: vec![],
            adv_lr: None,
            seed,
        };
        let model = train(&cfg, &full, &full).unwrap();
        let cert = model.report.test_certificate.delta_n;
        let reps = encode_fresh(&model, &full, true, derive_seed(5, 11)).unwrap();
        let probe = probe_max_delta_h(&reps, 0.5);
        let gap = probe - cert;
        let line = format!("var={var} seed={seed} cert={cert:.4} probe={probe:.4} gap={gap:+.4}\n");
        std::io::stdout().lock().write_all(line.as_bytes()).ok();
        gaps.push(gap);
    }
    let line = format!("var={var} MEDIAN {:+.5}\n", median(&gaps));
    std::io::stdout().lock().write_all(line.as_bytes()).ok();
}

#[test]
fn pilot_var_0001() {
    run_var(0.001);
}
#[test]
fn pilot_var_001() {
    run_var(0.01);
}
#[test]
fn pilot_var_01() {
    run_var(0.1);
}
#[test]
fn pilot_var_03() {
    run_var(0.3);
}
