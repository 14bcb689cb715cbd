//! Training loops for fair representation learning, the Monte-Carlo parity
//! loss, downstream probes, and sweep harnesses.

mod dploss;
mod probe;
mod sweep;
mod train;

pub use dploss::{dp_loss_and_query_grads, dp_loss_mc, DpLossStep, DpLossValue};
pub use probe::{train_probe, ProbeConfig, ProbeResult, ProbeTarget};
pub use sweep::{
    bin_quantile_summary, pareto_sweep, BinSummary, ProbeGrid, SweepPlan, SweepRow, SweepTable,
};
pub use train::{encode_fresh, select_sigma, train, SigmaChoice, SigmaSelection};

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::audit::CertificateReport;
use crate::error::{Error, Result};
use crate::numkit::{Matrix, NetworkParams};

pub(crate) fn gather_rows(features: &Matrix, idx: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(idx.len(), features.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(features.row(i));
    }
    out
}

pub(crate) fn gather_labels(labels: &[u8], idx: &[usize]) -> Vec<u8> {
    idx.iter().map(|&i| labels[i]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Noise-channel training: reconstruction + lambda * Monte-Carlo parity
    /// loss; representations are released through additive Gaussian noise.
    Awgn,
    /// Cross-entropy adversary baseline on noiseless encodings.
    AdvCe,
    /// Group-mean (L1) adversary baseline on noiseless encodings.
    AdvL1,
    /// Plain autoencoder, no fairness term.
    Plain,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Awgn => "awgn",
            Method::AdvCe => "adv_ce",
            Method::AdvL1 => "adv_l1",
            Method::Plain => "plain",
        }
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Method::AdvCe | Method::AdvL1)
    }
}

fn default_m() -> usize {
    1
}

/// Everything a training run needs. `encoder_dims`/`decoder_dims` are full
/// layer-dimension lists (input through output); hidden layers are relu,
/// heads are identity. `sigma` is both the training channel noise and the
/// audit bandwidth.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub lambda: f64,
    pub sigma: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    pub lr: f64,
    #[serde(default)]
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub encoder_dims: Vec<usize>,
    pub decoder_dims: Vec<usize>,
    /// Hidden widths of the adversary head (adversarial methods only).
    #[serde(default)]
    pub adversary_hidden: Vec<usize>,
    /// Adversary learning rate; defaults to `lr`.
    #[serde(default)]
    pub adv_lr: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 4 || self.batch_size % 2 != 0 {
            return Err(Error::argument(format!(
                "batch_size must be even and >= 4 (split-in-half rule), got {}",
                self.batch_size
            )));
        }
        if self.m < 1 {
            return Err(Error::argument("m must be at least 1"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::argument("sigma must be positive"));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::argument("lambda must be finite and non-negative"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::argument("lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::argument("momentum must lie in [0, 1)"));
        }
        if self.epochs == 0 {
            return Err(Error::argument("epochs must be at least 1"));
        }
        if self.encoder_dims.len() < 2 || self.decoder_dims.len() < 2 {
            return Err(Error::argument("encoder/decoder need input and output dims"));
        }
        let enc_out = *self.encoder_dims.last().unwrap();
        if self.decoder_dims[0] != enc_out {
            return Err(Error::argument(format!(
                "decoder input dim {} must match encoder output dim {enc_out}",
                self.decoder_dims[0]
            )));
        }
        if self.decoder_dims.last() != self.encoder_dims.first() {
            return Err(Error::argument(
                "decoder output dim must match encoder input dim",
            ));
        }
        if let Some(alr) = self.adv_lr {
            if !(alr > 0.0) || !alr.is_finite() {
                return Err(Error::argument("adv_lr must be positive"));
            }
        }
        Ok(())
    }

    pub fn representation_dim(&self) -> usize {
        *self.encoder_dims.last().unwrap()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: TrainConfig =
            serde_json::from_str(s).map_err(|e| Error::schema(format!("train config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Summary numbers of a finished run, serialised into the model bundle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: Method,
    pub final_recon: f64,
    /// Mean fairness-term value over the last epoch (parity loss for awgn,
    /// adversary loss for baselines); absent for plain autoencoders.
    pub final_fair_loss: Option<f64>,
    /// Empirical encoder output-norm cap on the training features.
    pub t_inf: f64,
    /// Batches whose fairness term was skipped because a half was missing a
    /// sensitive group.
    pub skipped_batches: usize,
    /// Demographic parity of the trained adversary on test encodings
    /// (adversarial baselines only): the unparity their own auditor reports.
    pub adversary_delta: Option<f64>,
    pub train_certificate: CertificateReport,
    pub test_certificate: CertificateReport,
}

/// A trained encoder/decoder pair with its audit results.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub encoder: NetworkParams,
    pub decoder: NetworkParams,
    pub adversary: Option<NetworkParams>,
    pub report: TrainReport,
}

impl TrainedModel {
    /// Writes the model bundle: a directory of JSON files.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), self.config.to_json()?)?;
        std::fs::write(dir.join("encoder.json"), self.encoder.to_json()?)?;
        std::fs::write(dir.join("decoder.json"), self.decoder.to_json()?)?;
        if let Some(adv) = &self.adversary {
            std::fs::write(dir.join("adversary.json"), adv.to_json()?)?;
        }
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.report)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config = TrainConfig::from_json(&std::fs::read_to_string(dir.join("config.json"))?)?;
        let encoder =
            NetworkParams::from_json(&std::fs::read_to_string(dir.join("encoder.json"))?)?;
        let decoder =
            NetworkParams::from_json(&std::fs::read_to_string(dir.join("decoder.json"))?)?;
        let adv_path = dir.join("adversary.json");
        let adversary = if adv_path.exists() {
            Some(NetworkParams::from_json(&std::fs::read_to_string(adv_path)?)?)
        } else {
            None
        };
        let report: TrainReport =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)
                .map_err(|e| Error::schema(format!("report json: {e}")))?;
        Ok(TrainedModel { config, encoder, decoder, adversary, report })
    }
}
