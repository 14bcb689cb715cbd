//! Monte-Carlo demographic-parity loss.
//!
//! The smoothed parity loss of a representation is the expected posterior
//! imbalance `E_q |eta1(z) - eta0(z)|` under the noisy encoding distribution.
//! It is estimated by fitting the group mixtures on one half of a batch
//! (treated as constants) and averaging the imbalance over `m` noisy queries
//! per point of the other half; gradients flow through the queries only.

use crate::density::MixtureDensityModel;
use crate::error::{Error, Result};
use crate::numkit::{Gradients, Matrix, NetworkParams, Rng};

/// Value of the parity loss together with its gradient at every query point.
#[derive(Debug)]
pub struct DpLossValue {
    pub loss: f64,
    /// d(loss)/d(query), one row per query; already carries the 1/n_q mean
    /// factor.
    pub query_grads: Matrix,
}

/// Mean posterior imbalance over explicit query points, with per-query
/// gradients. The imbalance `|eta1 - eta0|` uses subgradient 0 at a tie.
pub fn dp_loss_and_query_grads(
    model: &MixtureDensityModel,
    queries: &Matrix,
) -> Result<DpLossValue> {
    if queries.rows() == 0 {
        return Err(Error::argument("parity loss needs at least one query"));
    }
    if queries.cols() != model.dim() {
        return Err(Error::shape(format!(
            "query dim {} does not match model dim {}",
            queries.cols(),
            model.dim()
        )));
    }
    let nq = queries.rows();
    let scale = 1.0 / nq as f64;
    let mut loss = 0.0;
    let mut grads = Matrix::zeros(nq, model.dim());
    for i in 0..nq {
        let z = queries.row(i);
        let (post, diff_grad) = model.posterior_and_diff_grad(z)?;
        let diff = post.eta1 - post.eta0;
        loss += scale * diff.abs();
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        for (j, g) in diff_grad.iter().enumerate() {
            grads.set(i, j, scale * sign * g);
        }
    }
    if !loss.is_finite() {
        return Err(Error::numeric("parity loss is not finite"));
    }
    Ok(DpLossValue { loss, query_grads: grads })
}

/// One fairness step on a split batch: result of estimating the parity loss
/// and backpropagating it to the encoder parameters.
#[derive(Debug)]
pub struct DpLossStep {
    pub loss: f64,
    pub grads: Option<Gradients>,
    /// d(loss)/d(encoder output), one row per half-B point (its m query
    /// gradients summed).
    pub output_grads: Option<Matrix>,
    /// True when the batch halves could not support the estimator (a
    /// sensitive group absent from a half); loss and grads are then unset.
    pub skipped: bool,
}

impl DpLossStep {
    fn skipped() -> Self {
        DpLossStep { loss: 0.0, grads: None, output_grads: None, skipped: true }
    }
}

fn has_both_groups(s: &[u8]) -> bool {
    s.iter().any(|&v| v == 0) && s.iter().any(|&v| v == 1)
}

/// Split-batch Monte-Carlo parity loss through an encoder.
///
/// Half A (`xa`, `sa`) is encoded without a tape and fitted as the mixture
/// model — constants for this step. Half B (`xb`) is encoded with a tape;
/// each encoding spawns `m` noisy queries `z + sigma * eps`, and the query
/// gradients are pushed back through the encoder. Either half missing a
/// sensitive group skips the step.
pub fn dp_loss_mc(
    encoder: &NetworkParams,
    xa: &Matrix,
    sa: &[u8],
    xb: &Matrix,
    sb: &[u8],
    sigma: f64,
    m: usize,
    rng: &mut Rng,
) -> Result<DpLossStep> {
    if m < 1 {
        return Err(Error::argument("m must be at least 1"));
    }
    if !(sigma > 0.0) {
        return Err(Error::argument("sigma must be positive"));
    }
    if xa.rows() != sa.len() || xb.rows() != sb.len() {
        return Err(Error::shape("group labels must match rows"));
    }
    if !has_both_groups(sa) || !has_both_groups(sb) {
        return Ok(DpLossStep::skipped());
    }

    let za = encoder.output(xa)?;
    let model = MixtureDensityModel::fit(&za, sa, sigma)?;

    let (zb, tape) = encoder.forward(xb)?;
    let nb = zb.rows();
    let d = zb.cols();
    let mut queries = Matrix::zeros(nb * m, d);
    for i in 0..nb {
        for j in 0..m {
            for k in 0..d {
                queries.set(i * m + j, k, zb.get(i, k) + sigma * rng.normal());
            }
        }
    }

    let value = dp_loss_and_query_grads(&model, &queries)?;

    // d(loss)/d(z_i) = sum over that point's m queries (dq/dz = identity).
    let mut out_grad = Matrix::zeros(nb, d);
    for i in 0..nb {
        for j in 0..m {
            for k in 0..d {
                let g = out_grad.get(i, k) + value.query_grads.get(i * m + j, k);
                out_grad.set(i, k, g);
            }
        }
    }
    let grads = encoder.backward(&tape, &out_grad)?;
    Ok(DpLossStep {
        loss: value.loss,
        grads: Some(grads),
        output_grads: Some(out_grad),
        skipped: false,
    })
}
