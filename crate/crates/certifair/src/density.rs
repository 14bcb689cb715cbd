//! Per-group Gaussian mixture models over representation space.
//!
//! A fitted model places one isotropic component `N(c_i, sigma^2 I_d)` on
//! every training representation, grouped by the sensitive bit. All density
//! math runs in log space through log-sum-exp; per-group densities are
//! normalised (weight `1/n_s` per component) so they are genuine probability
//! densities and the balanced posterior is a plain two-way softmax.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

#[derive(Clone, Debug)]
pub struct MixtureDensityModel {
    centers: [Vec<Vec<f64>>; 2],
    sigma: f64,
    d: usize,
}

/// Balanced two-group posterior at a query point; `eta0 + eta1 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub eta0: f64,
    pub eta1: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureJson {
    sigma: f64,
    d: usize,
    centers0: Vec<Vec<f64>>,
    centers1: Vec<Vec<f64>>,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

impl MixtureDensityModel {
    /// One component per row of `centers`; rows are assigned to the group in
    /// `groups`. A group may be empty (degenerate model): its density is then
    /// unavailable and `posterior` errors.
    pub fn fit(centers: &Matrix, groups: &[u8], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::argument(format!("sigma must be positive, got {sigma}")));
        }
        if centers.rows() != groups.len() {
            return Err(Error::shape(format!(
                "{} centers vs {} group labels",
                centers.rows(),
                groups.len()
            )));
        }
        if !centers.is_finite() {
            return Err(Error::numeric("non-finite centers"));
        }
        let mut split: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for (i, &g) in groups.iter().enumerate() {
            if g > 1 {
                return Err(Error::argument(format!("group label {g} not in {{0,1}}")));
            }
            split[g as usize].push(centers.row(i).to_vec());
        }
        Ok(MixtureDensityModel { centers: split, sigma, d: centers.cols() })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn group_size(&self, group: u8) -> usize {
        self.centers[group as usize].len()
    }

    /// True when a group has no components.
    pub fn is_degenerate(&self) -> bool {
        self.centers[0].is_empty() || self.centers[1].is_empty()
    }

    pub fn centers(&self, group: u8) -> &[Vec<f64>] {
        &self.centers[group as usize]
    }

    fn check_query(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.d {
            return Err(Error::shape(format!(
                "query has {} coords, model dimension is {}",
                z.len(),
                self.d
            )));
        }
        Ok(())
    }

    /// Component log-kernels `-||z - c_i||^2 / (2 sigma^2)` for one group,
    /// optionally excluding a component index.
    fn kernels(&self, z: &[f64], group: u8, exclude: Option<usize>) -> Vec<f64> {
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        self.centers[group as usize]
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(_, c)| {
                let mut sq = 0.0;
                for (a, b) in z.iter().zip(c) {
                    let dlt = a - b;
                    sq += dlt * dlt;
                }
                -sq * inv
            })
            .collect()
    }

    fn log_density_impl(&self, z: &[f64], group: u8, exclude: Option<usize>) -> Result<f64> {
        self.check_query(z)?;
        let n_eff = self.centers[group as usize].len() - usize::from(exclude.is_some());
        if self.centers[group as usize].is_empty() || n_eff == 0 {
            return Err(Error::state(format!("group {group} has no components")));
        }
        let lse = log_sum_exp(self.kernels(z, group, exclude).into_iter());
        let log_norm = -(n_eff as f64).ln()
            - 0.5 * self.d as f64 * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln();
        Ok(lse + log_norm)
    }

    /// Log of the normalised group density at `z`.
    pub fn log_density(&self, z: &[f64], group: u8) -> Result<f64> {
        self.log_density_impl(z, group, None)
    }

    /// Same, with component `exclude` (index within the group) left out —
    /// the leave-one-out view used by in-sample audits.
    pub fn log_density_excluding(&self, z: &[f64], group: u8, exclude: usize) -> Result<f64> {
        if exclude >= self.centers[group as usize].len() {
            return Err(Error::argument(format!(
                "exclude index {exclude} out of range for group {group}"
            )));
        }
        self.log_density_impl(z, group, Some(exclude))
    }

    /// Gradient of the log group density with respect to `z`:
    /// responsibility-weighted mean of `(c_i - z) / sigma^2`.
    pub fn grad_log_density(&self, z: &[f64], group: u8) -> Result<Vec<f64>> {
        self.check_query(z)?;
        if self.centers[group as usize].is_empty() {
            return Err(Error::state(format!("group {group} has no components")));
        }
        let ks = self.kernels(z, group, None);
        let m = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ws: Vec<f64> = ks.iter().map(|&k| (k - m).exp()).collect();
        let wsum: f64 = ws.iter().sum();
        let inv_s2 = 1.0 / (self.sigma * self.sigma);
        let mut grad = vec![0.0; self.d];
        for (w, c) in ws.iter().zip(&self.centers[group as usize]) {
            let wn = w / wsum;
            for (g, (&ci, &zi)) in grad.iter_mut().zip(c.iter().zip(z)) {
                *g += wn * (ci - zi) * inv_s2;
            }
        }
        Ok(grad)
    }

    /// Balanced posterior: two-way softmax of the group log densities.
    pub fn posterior(&self, z: &[f64]) -> Result<Posterior> {
        if self.is_degenerate() {
            return Err(Error::state("posterior needs both groups non-degenerate"));
        }
        let l0 = self.log_density(z, 0)?;
        let l1 = self.log_density(z, 1)?;
        let a = l0 - l1;
        Ok(Posterior { eta0: sigmoid(a), eta1: sigmoid(-a) })
    }

    /// Posterior together with the gradient of `eta1 - eta0` with respect to
    /// `z`; the differentiable core of the Monte-Carlo parity loss.
    pub fn posterior_and_diff_grad(&self, z: &[f64]) -> Result<(Posterior, Vec<f64>)> {
        let p = self.posterior(z)?;
        let g0 = self.grad_log_density(z, 0)?;
        let g1 = self.grad_log_density(z, 1)?;
        let scale = 2.0 * p.eta0 * p.eta1;
        let grad = g1.iter().zip(&g0).map(|(&a, &b)| scale * (a - b)).collect();
        Ok((p, grad))
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = MixtureJson {
            sigma: self.sigma,
            d: self.d,
            centers0: self.centers[0].clone(),
            centers1: self.centers[1].clone(),
        };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: MixtureJson =
            serde_json::from_str(s).map_err(|e| Error::schema(format!("mixture json: {e}")))?;
        if !(repr.sigma > 0.0) {
            return Err(Error::schema("mixture json: sigma must be positive"));
        }
        if repr
            .centers0
            .iter()
            .chain(&repr.centers1)
            .any(|c| c.len() != repr.d)
        {
            return Err(Error::schema("mixture json: center dimension mismatch"));
        }
        Ok(MixtureDensityModel {
            centers: [repr.centers0, repr.centers1],
            sigma: repr.sigma,
            d: repr.d,
        })
    }
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}
