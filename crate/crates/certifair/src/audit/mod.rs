//! The plug-in group auditor and its finite-sample certificates.
//!
//! The auditor fits per-group mixtures over representation samples, predicts
//! the likelier group at each point, and converts balanced error rate into a
//! demographic-parity certificate via `delta = max(0, 1 - 2 ber)`.

mod bounds;
mod mi;

pub use bounds::{
    cor_rates_mi_cap, mc_mse_bound, thm1_lower_bound, thm2_rate_bound, thm3_mi_cap,
    thm3_rate_bound,
};
pub use mi::{chi2_mi_discrete, shannon_mi_discrete, DiscreteJoint, MiEstimate};

use serde::{Deserialize, Serialize};

use crate::density::MixtureDensityModel;
use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Matrix, NetworkParams, Rng};

/// Certificate produced by an audit run. `delta_n` lower-bounds nothing and
/// upper-bounds nothing by itself — it is the clamped plug-in estimate
/// `max(0, 1 - 2 ber)`; the optional bound fields report what the noise
/// channel would guarantee for the given output-norm cap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub ber: f64,
    pub delta_n: f64,
    pub n0: usize,
    pub n1: usize,
    pub sigma: f64,
    pub thm2_bound: Option<f64>,
    pub thm3_mi_bound: Option<f64>,
    pub split_tag: String,
    pub seed: u64,
    pub timestamp: u64,
}

impl CertificateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::schema(format!("certificate json: {e}")))
    }
}

#[derive(Clone, Debug)]
pub struct CertificateOptions {
    pub sigma: f64,
    pub seed: u64,
    pub split_tag: String,
    /// Encoder output-norm cap; when present the report carries the
    /// channel-information and rate bounds.
    pub t_inf: Option<f64>,
}

/// Clamped certificate value from a balanced error rate.
pub fn delta_from_ber(ber: f64) -> f64 {
    (1.0 - 2.0 * ber).max(0.0)
}

/// Plug-in group prediction at `z`: the group with the larger normalised
/// mixture density, ties resolved to 0.
pub fn plugin_predict(model: &MixtureDensityModel, z: &[f64]) -> Result<u8> {
    if model.is_degenerate() {
        return Err(Error::state("plug-in prediction needs both groups"));
    }
    let l0 = model.log_density(z, 0)?;
    let l1 = model.log_density(z, 1)?;
    Ok(u8::from(l1 > l0))
}

/// FNV-1a over the raw bytes of a point; keys the per-point noise stream so
/// that permuting sample order leaves every draw (and hence the BER)
/// unchanged exactly.
fn point_tag(center: &[f64], group: u8) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for v in center {
        for b in v.to_bits().to_le_bytes() {
            eat(b);
        }
    }
    eat(group);
    h
}

fn ber_from_predictions(preds: &[u8], groups: &[u8]) -> Result<f64> {
    let n0 = groups.iter().filter(|&&g| g == 0).count();
    let n1 = groups.len() - n0;
    if n0 == 0 || n1 == 0 {
        return Err(Error::argument("balanced error rate needs both groups present"));
    }
    let mut fp = 0usize; // predicted 1 while group 0
    let mut fnr = 0usize; // predicted 0 while group 1
    for (&p, &g) in preds.iter().zip(groups) {
        if g == 0 && p == 1 {
            fp += 1;
        }
        if g == 1 && p == 0 {
            fnr += 1;
        }
    }
    Ok(0.5 * (fp as f64 / n0 as f64 + fnr as f64 / n1 as f64))
}

/// Leave-one-out balanced error rate of the plug-in auditor on its own
/// training centers. Each point receives one seeded noise draw
/// `z_i = c_i + sigma * eps_i` and is scored against a model whose own-group
/// mixture excludes component i. Both groups need at least 2 points.
pub fn loo_ber(centers: &Matrix, groups: &[u8], sigma: f64, seed: u64) -> Result<f64> {
    let n0 = groups.iter().filter(|&&g| g == 0).count();
    let n1 = groups.len() - n0;
    if n0 < 2 || n1 < 2 {
        return Err(Error::argument(format!(
            "leave-one-out audit needs >= 2 points per group, got {n0}/{n1}"
        )));
    }
    let model = MixtureDensityModel::fit(centers, groups, sigma)?;
    let d = centers.cols();
    // index of each row within its group's center list (fit preserves order)
    let mut within = vec![0usize; groups.len()];
    let mut counts = [0usize; 2];
    for (i, &g) in groups.iter().enumerate() {
        within[i] = counts[g as usize];
        counts[g as usize] += 1;
    }
    let mut preds = Vec::with_capacity(groups.len());
    for (i, &g) in groups.iter().enumerate() {
        let c = centers.row(i);
        let mut rng = Rng::new(derive_seed(seed, point_tag(c, g)));
        let z: Vec<f64> = c.iter().map(|&v| v + sigma * rng.normal()).collect();
        let l_own = model.log_density_excluding(&z, g, within[i])?;
        let l_other = model.log_density(&z, 1 - g)?;
        let (l0, l1) = if g == 0 { (l_own, l_other) } else { (l_other, l_own) };
        preds.push(u8::from(l1 > l0));
        let _ = d;
    }
    ber_from_predictions(&preds, groups)
}

/// Balanced error rate of the full fitted model on labeled held-out
/// representation samples (already channel outputs; no extra noise).
pub fn holdout_ber(
    centers: &Matrix,
    groups: &[u8],
    sigma: f64,
    eval_z: &Matrix,
    eval_groups: &[u8],
) -> Result<f64> {
    if eval_z.rows() != eval_groups.len() {
        return Err(Error::shape("eval rows vs labels mismatch"));
    }
    let model = MixtureDensityModel::fit(centers, groups, sigma)?;
    if model.is_degenerate() {
        return Err(Error::state("holdout audit needs both groups in the model"));
    }
    let preds: Result<Vec<u8>> = (0..eval_z.rows())
        .map(|i| plugin_predict(&model, eval_z.row(i)))
        .collect();
    ber_from_predictions(&preds?, eval_groups)
}

/// Full audit: BER (leave-one-out on the centers, or held-out when `eval`
/// is given), certificate value, group counts, and optional channel bounds.
pub fn empirical_certificate(
    centers: &Matrix,
    groups: &[u8],
    eval: Option<(&Matrix, &[u8])>,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    let (ber, n0, n1) = match eval {
        None => {
            let ber = loo_ber(centers, groups, opts.sigma, opts.seed)?;
            let n0 = groups.iter().filter(|&&g| g == 0).count();
            (ber, n0, groups.len() - n0)
        }
        Some((ez, eg)) => {
            let ber = holdout_ber(centers, groups, opts.sigma, ez, eg)?;
            let n0 = eg.iter().filter(|&&g| g == 0).count();
            (ber, n0, eg.len() - n0)
        }
    };
    // exp(t^2/sigma^2) overflows f64 once t/sigma passes ~26.6; past that the
    // channel bounds are vacuous anyway, so they are omitted from the report
    // rather than failing the audit.
    let (thm2, thm3) = match opts.t_inf {
        Some(t) => {
            let cap = thm3_mi_cap(t, opts.sigma)?;
            if cap.is_finite() {
                let rate = thm2_rate_bound(n0 as u64, n1 as u64, cap, cap)?;
                (Some(rate), Some(cap))
            } else {
                (None, None)
            }
        }
        None => (None, None),
    };
    Ok(CertificateReport {
        ber,
        delta_n: delta_from_ber(ber),
        n0,
        n1,
        sigma: opts.sigma,
        thm2_bound: thm2,
        thm3_mi_bound: thm3,
        split_tag: opts.split_tag.clone(),
        seed: opts.seed,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

/// Empirical encoder output-norm cap: `max_i ||t(x_i)||_2` over the rows of
/// `features`.
pub fn empirical_tinf(net: &NetworkParams, features: &Matrix) -> Result<f64> {
    let out = net.output(features)?;
    let mut best: f64 = 0.0;
    for i in 0..out.rows() {
        let sq: f64 = out.row(i).iter().map(|v| v * v).sum();
        best = best.max(sq.sqrt());
    }
    Ok(best)
}
