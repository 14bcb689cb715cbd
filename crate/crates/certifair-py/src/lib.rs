//! Python bindings for the fair-representation library: dataset generators,
//! mixture auditing, certificates, closed-form bounds, training, and probes.
//!
//! Matrices cross the boundary as plain `list[list[float]]` and labels as
//! `list[int]`; heavy lifting stays on the Rust side.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use certifair::audit::{
    self, chi2_mi_discrete, empirical_certificate, plugin_predict, shannon_mi_discrete,
    CertificateOptions, CertificateReport, DiscreteJoint, MiEstimate,
};
use certifair::data::{
    self, generate_atom_family_rational, generate_staircase, generate_swiss_roll, split,
    CsvOptions, SplitSpec, SwissRollConfig,
};
use certifair::density::MixtureDensityModel;
use certifair::fairtrain::{
    self, encode_fresh, train_probe, Method, ProbeConfig, ProbeTarget, TrainConfig,
};
use certifair::numkit::{self, Matrix};

fn pyerr(e: certifair::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(pyerr)
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn parse_method(s: &str) -> PyResult<Method> {
    match s {
        "plain" => Ok(Method::Plain),
        "awgn" => Ok(Method::Awgn),
        "adv_ce" => Ok(Method::AdvCe),
        "adv_l1" => Ok(Method::AdvL1),
        other => Err(PyValueError::new_err(format!(
            "unknown method {other:?}; expected plain, awgn, adv_ce, or adv_l1"
        ))),
    }
}

fn parse_target(s: &str) -> PyResult<ProbeTarget> {
    match s {
        "sensitive" => Ok(ProbeTarget::Sensitive),
        "task" => Ok(ProbeTarget::Task),
        other => Err(PyValueError::new_err(format!(
            "unknown probe target {other:?}; expected sensitive or task"
        ))),
    }
}

fn certificate_dict(py: Python<'_>, rep: &CertificateReport) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("ber", rep.ber)?;
    d.set_item("delta_n", rep.delta_n)?;
    d.set_item("n0", rep.n0)?;
    d.set_item("n1", rep.n1)?;
    d.set_item("sigma", rep.sigma)?;
    d.set_item("thm2_bound", rep.thm2_bound)?;
    d.set_item("thm3_mi_bound", rep.thm3_mi_bound)?;
    d.set_item("split_tag", rep.split_tag.clone())?;
    d.set_item("seed", rep.seed)?;
    d.set_item("timestamp", rep.timestamp)?;
    Ok(d.unbind())
}

/// Rows of features with a binary sensitive attribute and an optional binary
/// task label.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: data::Dataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (features, sensitive, task_label=None, column_names=None))]
    fn new(
        features: Vec<Vec<f64>>,
        sensitive: Vec<u8>,
        task_label: Option<Vec<u8>>,
        column_names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let m = matrix_from_rows(&features)?;
        let names = column_names
            .unwrap_or_else(|| (0..m.cols()).map(|j| format!("x{j}")).collect());
        let inner = data::Dataset::new(m, sensitive, task_label, names).map_err(pyerr)?;
        Ok(Dataset { inner })
    }

    /// Loads a CSV with named sensitive (and optional label) columns.
    /// Returns (dataset, dropped_row_count).
    #[staticmethod]
    #[pyo3(signature = (path, sensitive_col, label_col=None, normalize=true, sensitive_map=None))]
    fn from_csv(
        path: &str,
        sensitive_col: &str,
        label_col: Option<String>,
        normalize: bool,
        sensitive_map: Option<(String, String)>,
    ) -> PyResult<(Self, usize)> {
        let opts = CsvOptions {
            sensitive_col: sensitive_col.to_string(),
            label_col,
            normalize,
            sensitive_map,
        };
        let rep = data::load_csv(std::path::Path::new(path), &opts).map_err(pyerr)?;
        Ok((Dataset { inner: rep.dataset }, rep.dropped_rows))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.features().cols()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.features())
    }

    fn sensitive(&self) -> Vec<i64> {
        // Vec<u8> would cross into Python as `bytes`; labels should be ints.
        self.inner.sensitive().iter().map(|&v| v as i64).collect()
    }

    fn task_label(&self) -> Option<Vec<i64>> {
        self.inner
            .task_label()
            .map(|t| t.iter().map(|&v| v as i64).collect())
    }

    fn column_names(&self) -> Vec<String> {
        self.inner.column_names().to_vec()
    }

    /// Stratified split into `len(fractions)` parts (largest-remainder
    /// apportionment per group).
    fn split(&self, fractions: Vec<f64>, seed: u64) -> PyResult<Vec<Dataset>> {
        let (parts, _) = split(&self.inner, &SplitSpec { fractions, seed }).map_err(pyerr)?;
        Ok(parts.into_iter().map(|inner| Dataset { inner }).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, dim={}, task_label={})",
            self.inner.n(),
            self.inner.features().cols(),
            self.inner.task_label().is_some()
        )
    }
}

/// Per-group isotropic Gaussian mixture over representation space.
#[pyclass]
struct Mixture {
    inner: MixtureDensityModel,
}

#[pymethods]
impl Mixture {
    /// Fits by storing one component per center row, bandwidth `sigma`.
    #[staticmethod]
    fn fit(centers: Vec<Vec<f64>>, groups: Vec<u8>, sigma: f64) -> PyResult<Self> {
        let m = matrix_from_rows(&centers)?;
        let inner = MixtureDensityModel::fit(&m, &groups, sigma).map_err(pyerr)?;
        Ok(Mixture { inner })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn log_density(&self, z: Vec<f64>, group: u8) -> PyResult<f64> {
        self.inner.log_density(&z, group).map_err(pyerr)
    }

    /// Posterior group probabilities (eta0, eta1) at a point.
    fn posterior(&self, z: Vec<f64>) -> PyResult<(f64, f64)> {
        let p = self.inner.posterior(&z).map_err(pyerr)?;
        Ok((p.eta0, p.eta1))
    }

    /// Plug-in group prediction (higher-density group, ties to 0).
    fn predict(&self, z: Vec<f64>) -> PyResult<u8> {
        plugin_predict(&self.inner, &z).map_err(pyerr)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(pyerr)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Mixture { inner: MixtureDensityModel::from_json(s).map_err(pyerr)? })
    }
}

/// A trained encoder/decoder bundle with its audit report.
#[pyclass]
struct TrainedModel {
    inner: fairtrain::TrainedModel,
}

#[pymethods]
impl TrainedModel {
    #[staticmethod]
    fn load(dir: &str) -> PyResult<Self> {
        let inner = fairtrain::TrainedModel::load(std::path::Path::new(dir)).map_err(pyerr)?;
        Ok(TrainedModel { inner })
    }

    fn save(&self, dir: &str) -> PyResult<()> {
        self.inner.save(std::path::Path::new(dir)).map_err(pyerr)
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.config.method.as_str().to_string()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.config.sigma
    }

    /// Demographic parity of the trained adversary's own test predictions
    /// (adversarial baselines only).
    #[getter]
    fn adversary_delta(&self) -> Option<f64> {
        self.inner.report.adversary_delta
    }

    fn train_certificate(&self, py: Python<'_>) -> PyResult<Py<PyDict>> {
        certificate_dict(py, &self.inner.report.train_certificate)
    }

    fn test_certificate(&self, py: Python<'_>) -> PyResult<Py<PyDict>> {
        certificate_dict(py, &self.inner.report.test_certificate)
    }

    fn report_json(&self) -> PyResult<String> {
        serde_json_string(&self.inner.report)
    }

    /// Runs a dataset through the encoder; `with_noise` adds one fresh
    /// Gaussian draw at the trained sigma. Labels carry over.
    #[pyo3(signature = (ds, with_noise=true, seed=0))]
    fn encode(&self, ds: &Dataset, with_noise: bool, seed: u64) -> PyResult<Dataset> {
        let inner = encode_fresh(&self.inner, &ds.inner, with_noise, seed).map_err(pyerr)?;
        Ok(Dataset { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainedModel(method={}, sigma={}, test_delta_n={:.4})",
            self.inner.config.method.as_str(),
            self.inner.config.sigma,
            self.inner.report.test_certificate.delta_n
        )
    }
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    method: &str,
    lam: f64,
    sigma: f64,
    m: u32,
    lr: f64,
    momentum: f64,
    epochs: u32,
    batch_size: usize,
    encoder_dims: Option<Vec<usize>>,
    decoder_dims: Option<Vec<usize>>,
    adversary_hidden: Option<Vec<usize>>,
    adv_lr: Option<f64>,
    seed: u64,
    input_dim: usize,
) -> PyResult<TrainConfig> {
    let method = parse_method(method)?;
    let encoder_dims =
        encoder_dims.unwrap_or_else(|| vec![input_dim, 32, 32, input_dim]);
    let rep_dim = *encoder_dims.last().unwrap_or(&input_dim);
    let decoder_dims = decoder_dims.unwrap_or_else(|| vec![rep_dim, 32, 32, input_dim]);
    let adversary_hidden = adversary_hidden.unwrap_or_else(|| {
        if method.is_adversarial() {
            vec![32, 32]
        } else {
            vec![]
        }
    });
    Ok(TrainConfig {
        method,
        lambda: lam,
        sigma,
        m: m as usize,
        lr,
        momentum,
        epochs: epochs as usize,
        batch_size,
        encoder_dims,
        decoder_dims,
        adversary_hidden,
        adv_lr,
        seed,
    })
}

/// Trains a representation model and audits it on the test split.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (train_ds, test_ds, method="awgn", lam=1.0, sigma=0.3, m=1, lr=0.01,
                    momentum=0.9, epochs=40, batch_size=64, encoder_dims=None,
                    decoder_dims=None, adversary_hidden=None, adv_lr=None, seed=0))]
fn train(
    train_ds: &Dataset,
    test_ds: &Dataset,
    method: &str,
    lam: f64,
    sigma: f64,
    m: u32,
    lr: f64,
    momentum: f64,
    epochs: u32,
    batch_size: usize,
    encoder_dims: Option<Vec<usize>>,
    decoder_dims: Option<Vec<usize>>,
    adversary_hidden: Option<Vec<usize>>,
    adv_lr: Option<f64>,
    seed: u64,
) -> PyResult<TrainedModel> {
    let cfg = build_config(
        method,
        lam,
        sigma,
        m,
        lr,
        momentum,
        epochs,
        batch_size,
        encoder_dims,
        decoder_dims,
        adversary_hidden,
        adv_lr,
        seed,
        train_ds.inner.features().cols(),
    )?;
    let inner = fairtrain::train(&cfg, &train_ds.inner, &test_ds.inner).map_err(pyerr)?;
    Ok(TrainedModel { inner })
}

/// Trains an MLP probe on representations; returns delta, accuracy, arch.
#[pyfunction]
#[pyo3(signature = (reps, target="sensitive", hidden=None, lr=0.03, epochs=60,
                    batch_size=64, holdout_frac=0.25, seed=5))]
#[allow(clippy::too_many_arguments)]
fn probe(
    py: Python<'_>,
    reps: &Dataset,
    target: &str,
    hidden: Option<Vec<usize>>,
    lr: f64,
    epochs: u32,
    batch_size: usize,
    holdout_frac: f64,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let cfg = ProbeConfig {
        hidden: hidden.unwrap_or_else(|| vec![32; 4]),
        lr,
        epochs: epochs as usize,
        batch_size,
        holdout_frac,
        seed,
    };
    let res = train_probe(&reps.inner, parse_target(target)?, &cfg).map_err(pyerr)?;
    let d = PyDict::new(py);
    d.set_item("delta", res.delta)?;
    d.set_item("accuracy", res.accuracy)?;
    d.set_item("arch", res.arch)?;
    Ok(d.unbind())
}

/// Leave-one-out finite-sample parity certificate over representation rows.
#[pyfunction]
#[pyo3(signature = (centers, groups, sigma, seed=0, split_tag="adhoc", t_inf=None))]
fn certificate(
    py: Python<'_>,
    centers: Vec<Vec<f64>>,
    groups: Vec<u8>,
    sigma: f64,
    seed: u64,
    split_tag: &str,
    t_inf: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let m = matrix_from_rows(&centers)?;
    let rep = empirical_certificate(
        &m,
        &groups,
        None,
        &CertificateOptions { sigma, seed, split_tag: split_tag.to_string(), t_inf },
    )
    .map_err(pyerr)?;
    certificate_dict(py, &rep)
}

/// Noise-level scan: trains once per sigma on an internal split and picks the
/// smallest sigma whose train/test certificate gap is within `threshold`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (ds, grid, threshold, method="awgn", lam=1.0, m=1, lr=0.01,
                    momentum=0.9, epochs=40, batch_size=64, encoder_dims=None,
                    decoder_dims=None, adversary_hidden=None, adv_lr=None, seed=0))]
fn select_sigma(
    py: Python<'_>,
    ds: &Dataset,
    grid: Vec<f64>,
    threshold: f64,
    method: &str,
    lam: f64,
    m: u32,
    lr: f64,
    momentum: f64,
    epochs: u32,
    batch_size: usize,
    encoder_dims: Option<Vec<usize>>,
    decoder_dims: Option<Vec<usize>>,
    adversary_hidden: Option<Vec<usize>>,
    adv_lr: Option<f64>,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let base = build_config(
        method,
        lam,
        grid.first().copied().unwrap_or(0.1),
        m,
        lr,
        momentum,
        epochs,
        batch_size,
        encoder_dims,
        decoder_dims,
        adversary_hidden,
        adv_lr,
        seed,
        ds.inner.features().cols(),
    )?;
    let sel = fairtrain::select_sigma(&base, &ds.inner, &grid, threshold).map_err(pyerr)?;
    let d = PyDict::new(py);
    d.set_item("chosen", sel.chosen)?;
    d.set_item("hit_threshold", sel.hit_threshold)?;
    let rows: Vec<Py<PyDict>> = sel
        .table
        .iter()
        .map(|c| {
            let r = PyDict::new(py);
            r.set_item("sigma", c.sigma)?;
            r.set_item("delta_train", c.delta_train)?;
            r.set_item("delta_test", c.delta_test)?;
            r.set_item("gap", c.gap)?;
            Ok(r.unbind())
        })
        .collect::<PyResult<_>>()?;
    d.set_item("table", rows)?;
    Ok(d.unbind())
}

/// 3-D swiss roll with a group-dependent shift; sensitive bit is the arm.
#[pyfunction]
fn swiss_roll(n: usize, seed: u64) -> PyResult<Dataset> {
    let inner = generate_swiss_roll(&SwissRollConfig::new(n, seed)).map_err(pyerr)?;
    Ok(Dataset { inner })
}

/// Point-mass family: k atoms whose group-1 masses follow the binary digits
/// of b_num/b_den.
#[pyfunction]
fn atom_family(k_atoms: usize, b_num: u64, b_den: u64, n: usize, seed: u64) -> PyResult<Dataset> {
    let inner = generate_atom_family_rational(k_atoms, b_num, b_den, n, seed).map_err(pyerr)?;
    Ok(Dataset { inner })
}

/// 1-D staircase dataset: heavy-tailed cell occupancy, group equal to a
/// deterministic cell function.
#[pyfunction]
fn staircase_dataset(n: usize, k_trunc: usize, seed: u64) -> PyResult<Dataset> {
    let inner = generate_staircase(n, k_trunc, seed).map_err(pyerr)?;
    Ok(Dataset { inner })
}

/// Shannon and chi-squared mutual information of an empirical joint built
/// from (row, col) index pairs. The chi-squared value is +inf when any
/// occupied cell has an empty marginal product (never happens empirically).
#[pyfunction]
fn discrete_mi_from_pairs(pairs: Vec<(usize, usize)>) -> PyResult<(f64, f64)> {
    let joint = DiscreteJoint::from_pairs(&pairs).map_err(pyerr)?;
    Ok((shannon_mi_discrete(&joint), mi_to_float(chi2_mi_discrete(&joint))))
}

/// Shannon and chi-squared MI of the exact injective uniform joint on k
/// symbols (diagonal, mass 1/k each).
#[pyfunction]
fn mi_injective_uniform(k: usize) -> PyResult<(f64, f64)> {
    let joint = DiscreteJoint::injective_uniform(k).map_err(pyerr)?;
    Ok((shannon_mi_discrete(&joint), mi_to_float(chi2_mi_discrete(&joint))))
}

/// Shannon and chi-squared MI of the exact truncated staircase joint.
#[pyfunction]
fn mi_staircase(k_trunc: usize) -> PyResult<(f64, f64)> {
    let joint = DiscreteJoint::staircase(k_trunc).map_err(pyerr)?;
    Ok((shannon_mi_discrete(&joint), mi_to_float(chi2_mi_discrete(&joint))))
}

fn mi_to_float(e: MiEstimate) -> f64 {
    match e {
        MiEstimate::Finite(v) => v,
        MiEstimate::Divergent => f64::INFINITY,
    }
}

/// Probability that n audit samples all miss the unfairness, from a
/// chi-square information value (>= 1; this is the chi-squared divergence
/// plus one — pass float('inf') for a divergent estimate).
#[pyfunction]
fn thm1_lower_bound(n: u64, chi2_information: f64) -> PyResult<f64> {
    let mi = if chi2_information.is_infinite() {
        MiEstimate::Divergent
    } else {
        MiEstimate::Finite(chi2_information)
    };
    audit::thm1_lower_bound(n, mi).map_err(pyerr)
}

/// Two-group parity rate bound from per-group MI caps.
#[pyfunction]
fn thm2_rate_bound(n0: u64, n1: u64, i0: f64, i1: f64) -> PyResult<f64> {
    audit::thm2_rate_bound(n0, n1, i0, i1).map_err(pyerr)
}

/// Channel MI cap of the additive-noise channel with output-norm cap t_inf.
#[pyfunction]
fn thm3_mi_cap(t_inf: f64, sigma: f64) -> PyResult<f64> {
    audit::thm3_mi_cap(t_inf, sigma).map_err(pyerr)
}

/// Rate bound implied by the channel MI cap.
#[pyfunction]
fn thm3_rate_bound(t_inf: f64, sigma: f64, n0: u64, n1: u64) -> PyResult<f64> {
    audit::thm3_rate_bound(t_inf, sigma, n0, n1).map_err(pyerr)
}

/// MI level at which the finite-sample parity bound reaches eps at sample
/// size n (inverse of the lower bound in its MI argument).
#[pyfunction]
fn cor_rates_mi_cap(eps: f64, n: u64) -> PyResult<f64> {
    audit::cor_rates_mi_cap(eps, n).map_err(pyerr)
}

/// Worst-case MSE bound for the n*m-sample Monte-Carlo parity estimator.
#[pyfunction]
fn mc_mse_bound(t_inf: f64, sigma: f64, n: u64, m: u64) -> PyResult<f64> {
    audit::mc_mse_bound(t_inf, sigma, n, m).map_err(pyerr)
}

/// Stable stream-splitting of a seed (same derivation the library uses).
#[pyfunction]
fn derive_seed(seed: u64, stream: u64) -> u64 {
    numkit::derive_seed(seed, stream)
}

#[pymodule]
fn certifair_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Mixture>()?;
    m.add_class::<TrainedModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(select_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(swiss_roll, m)?)?;
    m.add_function(wrap_pyfunction!(atom_family, m)?)?;
    m.add_function(wrap_pyfunction!(staircase_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_mi_from_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(mi_injective_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(mi_staircase, m)?)?;
    m.add_function(wrap_pyfunction!(thm1_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thm2_rate_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thm3_mi_cap, m)?)?;
    m.add_function(wrap_pyfunction!(thm3_rate_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cor_rates_mi_cap, m)?)?;
    m.add_function(wrap_pyfunction!(mc_mse_bound, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}
