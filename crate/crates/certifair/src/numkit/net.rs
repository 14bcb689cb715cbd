use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative in terms of (pre-activation, post-activation). The relu
    /// subgradient at exactly 0 is taken as 0.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Identity => 1.0,
        }
    }
}

/// Fully-connected network: `layer_dims = [in, h1, ..., out]`, one activation
/// per layer. `weights[l]` has shape `(layer_dims[l], layer_dims[l+1])` and
/// acts by `a_{l+1} = act(a_l W_l + b_l)` on row-major batches.
#[derive(Clone, Debug)]
pub struct NetworkParams {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    version: u64,
}

/// Forward record for one batch: everything backward() needs.
#[derive(Clone, Debug)]
pub struct Tape {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    version: u64,
}

impl Tape {
    /// Network output for the taped batch.
    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }
}

/// Parameter gradients plus the gradient with respect to the batch input.
/// Entries are sums over batch rows.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
            && self.input.is_finite()
    }

    pub fn add_scaled(&mut self, other: &Gradients, alpha: f64) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::shape("gradient layer count mismatch"));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_scaled(b, alpha)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            if a.len() != b.len() {
                return Err(Error::shape("gradient bias length mismatch"));
            }
            for (x, &y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetJson {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    /// Row-major per layer, shape `(layer_dims[l], layer_dims[l+1])`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    /// Random initialisation: He-scaled normals for relu layers, small-range
    /// uniform for sigmoid/identity layers.
    pub fn init(layer_dims: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::argument("need at least input and output dims"));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::argument("zero-width layer"));
        }
        if activations.len() != layer_dims.len() - 1 {
            return Err(Error::argument(format!(
                "{} layers need {} activations, got {}",
                layer_dims.len() - 1,
                layer_dims.len() - 1,
                activations.len()
            )));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, &act) in activations.iter().enumerate() {
            let fan_in = layer_dims[l];
            let fan_out = layer_dims[l + 1];
            let mut w = Matrix::zeros(fan_in, fan_out);
            match act {
                Activation::Relu => {
                    let std = (2.0 / fan_in as f64).sqrt();
                    for v in w.data_mut() {
                        *v = std * rng.normal();
                    }
                }
                Activation::Sigmoid | Activation::Identity => {
                    let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    for v in w.data_mut() {
                        *v = rng.uniform_in(-r, r);
                    }
                }
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(NetworkParams {
            layer_dims: layer_dims.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
            version: 0,
        })
    }

    /// MLP with uniform hidden width/activation and a distinct head.
    pub fn mlp(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_act: Activation,
        head_act: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        let mut acts = vec![hidden_act; hidden.len()];
        acts.push(head_act);
        NetworkParams::init(&dims, &acts, rng)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Zero-shaped gradient accumulator matching this network.
    pub fn zero_grads(&self, batch_rows: usize) -> Gradients {
        Gradients {
            weights: self
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            input: Matrix::zeros(batch_rows, self.input_dim()),
        }
    }

    /// Forward pass over a batch (rows = samples). Returns output and tape.
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Tape)> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input has {} features, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut post = Vec::with_capacity(self.weights.len());
        let mut a = x.clone();
        for (l, w) in self.weights.iter().enumerate() {
            let mut z = a.matmul(w)?;
            let b = &self.biases[l];
            for i in 0..z.rows() {
                for (v, &bj) in z.row_mut(i).iter_mut().zip(b) {
                    *v += bj;
                }
            }
            let act = self.activations[l];
            let out = z.map(|v| act.apply(v));
            pre.push(z);
            post.push(out.clone());
            a = out;
        }
        if !a.is_finite() {
            return Err(Error::numeric("forward produced non-finite output"));
        }
        Ok((
            a,
            Tape { input: x.clone(), pre, post, version: self.version },
        ))
    }

    /// Forward without recording a tape.
    pub fn output(&self, x: &Matrix) -> Result<Matrix> {
        self.forward(x).map(|(out, _)| out)
    }

    /// Reverse-mode gradients for the taped batch. `out_grad` holds
    /// dLoss/dOutput per sample; returned gradients are sums over rows, and
    /// `input` is dLoss/dInput.
    pub fn backward(&self, tape: &Tape, out_grad: &Matrix) -> Result<Gradients> {
        if tape.version != self.version {
            return Err(Error::state(
                "stale tape: parameters changed since forward()",
            ));
        }
        if tape.pre.len() != self.weights.len() {
            return Err(Error::state("tape does not match this network"));
        }
        let out = tape.post.last().ok_or_else(|| Error::state("empty tape"))?;
        if out_grad.rows() != out.rows() || out_grad.cols() != out.cols() {
            return Err(Error::shape(format!(
                "out_grad {}x{} does not match output {}x{}",
                out_grad.rows(),
                out_grad.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let last = out_grad.clone();
        let n_layers = self.weights.len();
        let mut weight_grads = vec![Matrix::zeros(0, 0); n_layers];
        let mut bias_grads: Vec<Vec<f64>> = vec![Vec::new(); n_layers];

        // delta for the output layer
        let mut delta = last;
        for l in (0..n_layers).rev() {
            let act = self.activations[l];
            let pre = &tape.pre[l];
            let post = &tape.post[l];
            let mut d = delta;
            for i in 0..d.rows() {
                let pr = pre.row(i);
                let po = post.row(i);
                for (j, v) in d.row_mut(i).iter_mut().enumerate() {
                    *v *= act.derivative(pr[j], po[j]);
                }
            }
            let layer_in: &Matrix = if l == 0 { &tape.input } else { &tape.post[l - 1] };
            weight_grads[l] = layer_in.matmul_tn(&d)?;
            let mut bg = vec![0.0; self.biases[l].len()];
            for i in 0..d.rows() {
                for (j, &v) in d.row(i).iter().enumerate() {
                    bg[j] += v;
                }
            }
            bias_grads[l] = bg;
            delta = d.matmul_nt(&self.weights[l])?;
        }
        Ok(Gradients { weights: weight_grads, biases: bias_grads, input: delta })
    }

    /// Plain SGD update: every parameter decremented by `lr * grad`. Bumps the
    /// parameter version so outstanding tapes become stale.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !lr.is_finite() {
            return Err(Error::argument("non-finite learning rate"));
        }
        if grads.weights.len() != self.weights.len() {
            return Err(Error::shape("gradient layer count mismatch"));
        }
        if !grads.is_finite() {
            return Err(Error::numeric("non-finite gradients: step aborted"));
        }
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.add_scaled(g, -lr)?;
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            if b.len() != g.len() {
                return Err(Error::shape("bias gradient length mismatch"));
            }
            for (x, &y) in b.iter_mut().zip(g) {
                *x -= lr * y;
            }
        }
        self.version += 1;
        Ok(())
    }

    /// Rewrites the first layer so the network applied to raw inputs computes
    /// what the old network computed on `(x - shift) / scale` — folds a
    /// feature standardizer into the parameters. Bumps the parameter version.
    pub fn absorb_input_affine(&mut self, shift: &[f64], scale: &[f64]) -> Result<()> {
        let d = self.input_dim();
        if shift.len() != d || scale.len() != d {
            return Err(Error::shape("affine length vs input dim mismatch"));
        }
        if scale.iter().any(|s| *s == 0.0 || !s.is_finite())
            || shift.iter().any(|v| !v.is_finite())
        {
            return Err(Error::argument("affine terms must be finite with nonzero scale"));
        }
        let w = &mut self.weights[0];
        let b = &mut self.biases[0];
        for j in 0..d {
            for k in 0..w.cols() {
                let scaled = w.get(j, k) / scale[j];
                w.set(j, k, scaled);
            }
        }
        for (k, bk) in b.iter_mut().enumerate() {
            let mut dot = 0.0;
            for j in 0..d {
                dot += shift[j] * w.get(j, k);
            }
            *bk -= dot;
        }
        self.version += 1;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = NetJson {
            layer_dims: self.layer_dims.clone(),
            activations: self.activations.clone(),
            weights: self.weights.iter().map(|w| w.data().to_vec()).collect(),
            biases: self.biases.clone(),
        };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: NetJson =
            serde_json::from_str(s).map_err(|e| Error::schema(format!("network json: {e}")))?;
        if repr.layer_dims.len() < 2 {
            return Err(Error::schema("network json: need at least 2 layer dims"));
        }
        if repr.activations.len() != repr.layer_dims.len() - 1
            || repr.weights.len() != repr.activations.len()
            || repr.biases.len() != repr.activations.len()
        {
            return Err(Error::schema("network json: layer count mismatch"));
        }
        let mut weights = Vec::new();
        for (l, flat) in repr.weights.into_iter().enumerate() {
            let (r, c) = (repr.layer_dims[l], repr.layer_dims[l + 1]);
            if repr.biases[l].len() != c {
                return Err(Error::schema(format!("network json: bias {l} length")));
            }
            weights.push(
                Matrix::from_vec(r, c, flat)
                    .map_err(|_| Error::schema(format!("network json: weight {l} shape")))?,
            );
        }
        Ok(NetworkParams {
            layer_dims: repr.layer_dims,
            activations: repr.activations,
            weights,
            biases: repr.biases,
            version: 0,
        })
    }
}

/// SGD with optional momentum (0 = plain SGD, identical to `sgd_step`).
pub struct Sgd {
    lr: f64,
    momentum: f64,
    vel_w: Option<Vec<Matrix>>,
    vel_b: Option<Vec<Vec<f64>>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Sgd { lr, momentum, vel_w: None, vel_b: None }
    }

    pub fn step(&mut self, net: &mut NetworkParams, grads: &Gradients) -> Result<()> {
        if self.momentum == 0.0 {
            return net.sgd_step(grads, self.lr);
        }
        if !grads.is_finite() {
            return Err(Error::numeric("non-finite gradients: step aborted"));
        }
        let vw = self.vel_w.get_or_insert_with(|| {
            grads.weights.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect()
        });
        let vb = self
            .vel_b
            .get_or_insert_with(|| grads.biases.iter().map(|g| vec![0.0; g.len()]).collect());
        let mut scaled = Gradients {
            weights: Vec::with_capacity(grads.weights.len()),
            biases: Vec::with_capacity(grads.biases.len()),
            input: Matrix::zeros(0, 0),
        };
        for (v, g) in vw.iter_mut().zip(&grads.weights) {
            for (vv, &gv) in v.data_mut().iter_mut().zip(g.data()) {
                *vv = self.momentum * *vv + gv;
            }
            scaled.weights.push(v.clone());
        }
        for (v, g) in vb.iter_mut().zip(&grads.biases) {
            for (vv, &gv) in v.iter_mut().zip(g) {
                *vv = self.momentum * *vv + gv;
            }
            scaled.biases.push(v.clone());
        }
        net.sgd_step(&scaled, self.lr)
    }
}

/// Central finite differences through arbitrary scalar functions of the
/// parameters; the oracle gradients used by the gradient-integrity tests.
pub mod gradcheck {
    use super::*;

    /// d f / d (every weight and bias), by central differences with step eps.
    pub fn fd_param_grads(
        net: &NetworkParams,
        eps: f64,
        mut f: impl FnMut(&NetworkParams) -> f64,
    ) -> (Vec<Matrix>, Vec<Vec<f64>>) {
        let mut work = net.clone();
        let mut wgrads = Vec::new();
        for l in 0..net.weights().len() {
            let mut g = Matrix::zeros(net.weights()[l].rows(), net.weights()[l].cols());
            for idx in 0..g.data().len() {
                let orig = work.weights()[l].data()[idx];
                work.weights_mut()[l].data_mut()[idx] = orig + eps;
                let fp = f(&work);
                work.weights_mut()[l].data_mut()[idx] = orig - eps;
                let fm = f(&work);
                work.weights_mut()[l].data_mut()[idx] = orig;
                g.data_mut()[idx] = (fp - fm) / (2.0 * eps);
            }
            wgrads.push(g);
        }
        let mut bgrads = Vec::new();
        for l in 0..net.biases().len() {
            let mut g = vec![0.0; net.biases()[l].len()];
            for (idx, gv) in g.iter_mut().enumerate() {
                let orig = work.biases()[l][idx];
                work.biases_mut()[l][idx] = orig + eps;
                let fp = f(&work);
                work.biases_mut()[l][idx] = orig - eps;
                let fm = f(&work);
                work.biases_mut()[l][idx] = orig;
                *gv = (fp - fm) / (2.0 * eps);
            }
            bgrads.push(g);
        }
        (wgrads, bgrads)
    }

    /// d f / d (every input entry), by central differences.
    pub fn fd_input_grads(
        x: &Matrix,
        eps: f64,
        mut f: impl FnMut(&Matrix) -> f64,
    ) -> Matrix {
        let mut work = x.clone();
        let mut g = Matrix::zeros(x.rows(), x.cols());
        for idx in 0..x.data().len() {
            let orig = work.data()[idx];
            work.data_mut()[idx] = orig + eps;
            let fp = f(&work);
            work.data_mut()[idx] = orig - eps;
            let fm = f(&work);
            work.data_mut()[idx] = orig;
            g.data_mut()[idx] = (fp - fm) / (2.0 * eps);
        }
        g
    }

    /// max_i |a_i - b_i| / max(1, |a_i|, |b_i|) over two gradient sets.
    pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
            .fold(0.0, f64::max)
    }
}
