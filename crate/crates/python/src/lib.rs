//! Python bindings. Vectors and matrices cross the boundary as plain lists of
//! floats; reports come back as dicts.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use utie_core::bias;
use utie_core::diagnostics;
use utie_core::fusion::{self, FusionOptions, TransformMode};
use utie_core::selftest;
use utie_core::store;
use utie_core::synth::{self, SynthConfig};
use utie_core::vecmath;
use utie_core::verification::{self, ScoredPairs};
use utie_core::zero_shot;
use utie_core::{AnchorSet, EmbeddingBundle, ManifestRecord, Matrix, Pair, PairLabel, PairSet};

create_exception!(utie, UtieError, PyValueError, "Validation or domain error.");
create_exception!(utie, FormatError, UtieError, "Unreadable or malformed input file.");

fn to_py(e: utie_core::Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    if e.is_format() {
        FormatError::new_err(msg)
    } else {
        UtieError::new_err(msg)
    }
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for utie_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse_mode(mode: &str) -> PyResult<TransformMode> {
    mode.parse().py_err()
}

fn options(normalize: bool) -> FusionOptions {
    FusionOptions { normalize }
}

fn label_from(code: i64) -> PyResult<PairLabel> {
    match code {
        1 => Ok(PairLabel::Genuine),
        0 => Ok(PairLabel::Impostor),
        other => Err(UtieError::new_err(format!("BadLabel: pair label {other} is not 0 or 1"))),
    }
}

fn labels_from(codes: &[i64]) -> PyResult<Vec<PairLabel>> {
    codes.iter().map(|&c| label_from(c)).collect()
}

#[pyclass(name = "EmbeddingBundle", module = "utie", frozen)]
struct PyBundle(EmbeddingBundle);

#[pymethods]
impl PyBundle {
    /// Row `i` of `embeddings` belongs to `ids[i]`.
    #[new]
    fn new(embeddings: Vec<Vec<f32>>, ids: Vec<String>, identities: Vec<String>, groups: Vec<String>) -> PyResult<Self> {
        if ids.len() != identities.len() || ids.len() != groups.len() {
            return Err(UtieError::new_err("ids, identities and groups must have equal length"));
        }
        let records = ids
            .into_iter()
            .zip(identities)
            .zip(groups)
            .enumerate()
            .map(|(row, ((id, identity), group))| ManifestRecord { id, row, identity, group })
            .collect();
        let matrix = Matrix::from_rows(&embeddings).py_err()?;
        Ok(PyBundle(EmbeddingBundle::new(matrix, records).py_err()?))
    }

    #[staticmethod]
    fn load(dir: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyBundle(store::load_bundle(dir).py_err()?))
    }

    fn write(&self, dir: std::path::PathBuf) -> PyResult<()> {
        self.0.write(dir).py_err()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `(id, row, identity, group)` per record, in manifest order.
    fn records(&self) -> Vec<(String, usize, String, String)> {
        self.0
            .records()
            .iter()
            .map(|r| (r.id.clone(), r.row, r.identity.clone(), r.group.clone()))
            .collect()
    }

    fn groups(&self) -> Vec<String> {
        self.0.groups().into_iter().map(str::to_owned).collect()
    }

    fn embedding(&self, id: &str) -> PyResult<Vec<f32>> {
        self.0
            .embedding_of(id)
            .map(<[f32]>::to_vec)
            .ok_or_else(|| UtieError::new_err(format!("unknown id {id:?}")))
    }

    fn embeddings(&self) -> Vec<Vec<f32>> {
        self.0.embeddings().to_rows()
    }

    fn __repr__(&self) -> String {
        format!("EmbeddingBundle(samples={}, dim={})", self.0.len(), self.0.dim())
    }
}

#[pyclass(name = "AnchorSet", module = "utie", frozen)]
struct PyAnchors(AnchorSet);

#[pymethods]
impl PyAnchors {
    #[new]
    #[pyo3(signature = (anchors, labels, prompt_template = zero_shot::DEFAULT_TEMPLATE.to_owned(), model_id = String::new()))]
    fn new(anchors: Vec<Vec<f32>>, labels: Vec<String>, prompt_template: String, model_id: String) -> PyResult<Self> {
        let matrix = Matrix::from_rows(&anchors).py_err()?;
        Ok(PyAnchors(AnchorSet::new(matrix, labels, prompt_template, model_id).py_err()?))
    }

    #[staticmethod]
    fn load(dir: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyAnchors(store::load_anchors(dir).py_err()?))
    }

    fn write(&self, dir: std::path::PathBuf) -> PyResult<()> {
        self.0.write(dir).py_err()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn prompt_template(&self) -> &str {
        self.0.prompt_template()
    }

    #[getter]
    fn model_id(&self) -> &str {
        self.0.model_id()
    }

    fn anchor(&self, index: usize) -> PyResult<Vec<f32>> {
        if index >= self.0.len() {
            return Err(UtieError::new_err(format!("IndexOutOfRange: {index} of {}", self.0.len())));
        }
        Ok(self.0.anchor(index).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("AnchorSet(labels={:?}, dim={})", self.0.labels(), self.0.dim())
    }
}

#[pyclass(name = "PairSet", module = "utie", frozen, from_py_object)]
#[derive(Clone)]
struct PyPairs(PairSet);

#[pymethods]
impl PyPairs {
    /// `pairs` holds `(id_a, id_b, label)` or `(id_a, id_b, label, fold)`
    /// tuples with label 1 for genuine and 0 for impostor.
    #[new]
    fn new(pairs: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let pairs = pairs
            .iter()
            .map(|item| {
                let (a, b, label, fold) = match item.extract::<(String, String, i64)>() {
                    Ok((a, b, label)) => (a, b, label, None),
                    Err(_) => item.extract::<(String, String, i64, Option<usize>)>()?,
                };
                Ok(Pair::new(a, b, label_from(label)?, fold))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyPairs(PairSet::new(pairs).py_err()?))
    }

    /// Reads a pair CSV and checks every id against `bundle`.
    #[staticmethod]
    fn load(path: std::path::PathBuf, bundle: &PyBundle) -> PyResult<Self> {
        Ok(PyPairs(store::load_pairs(path, &bundle.0).py_err()?))
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.write_csv(path).py_err()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn pairs(&self) -> Vec<(String, String, u8, Option<usize>)> {
        self.0
            .pairs()
            .iter()
            .map(|p| (p.id_a.clone(), p.id_b.clone(), p.label.code(), p.fold))
            .collect()
    }
}

#[pyfunction]
fn cosine(u: Vec<f32>, v: Vec<f32>) -> PyResult<f64> {
    vecmath::cosine(&u, &v).py_err()
}

#[pyfunction]
fn normalize(v: Vec<f32>) -> PyResult<Vec<f32>> {
    vecmath::normalize(&v).py_err()
}

#[pyfunction]
fn render_prompt(template: &str, label: &str) -> PyResult<String> {
    zero_shot::render_prompt(template, label).py_err()
}

/// `(predicted_index, similarities)`.
#[pyfunction]
fn predict(embedding: Vec<f32>, anchors: &PyAnchors) -> PyResult<(usize, Vec<f64>)> {
    let p = zero_shot::predict(&embedding, &anchors.0).py_err()?;
    Ok((p.predicted_index, p.similarities))
}

#[pyfunction]
fn leave_one_out_mean(anchors: &PyAnchors, excluded: usize) -> PyResult<Vec<f32>> {
    fusion::leave_one_out_mean(&anchors.0, excluded).py_err()
}

#[pyfunction(name = "utie")]
fn fuse_utie(embedding: Vec<f32>, anchors: &PyAnchors) -> PyResult<Vec<f32>> {
    Ok(fusion::utie(&embedding, &anchors.0).py_err()?.vector)
}

#[pyfunction]
fn ie_pte(embedding: Vec<f32>, anchors: &PyAnchors) -> PyResult<Vec<f32>> {
    Ok(fusion::ie_pte(&embedding, &anchors.0).py_err()?.vector)
}

#[pyfunction]
#[pyo3(signature = (bundle, anchors = None, mode = "ie", normalize = true))]
fn transform(bundle: &PyBundle, anchors: Option<&PyAnchors>, mode: &str, normalize: bool) -> PyResult<PyBundle> {
    let out = fusion::transform_bundle(&bundle.0, anchors.map(|a| &a.0), parse_mode(mode)?, options(normalize))
        .py_err()?;
    Ok(PyBundle(out))
}

#[pyfunction]
fn zero_shot_accuracy<'py>(py: Python<'py>, bundle: &PyBundle, anchors: &PyAnchors) -> PyResult<Bound<'py, PyDict>> {
    let r = zero_shot::zero_shot_accuracy(&bundle.0, &anchors.0).py_err()?;
    let d = PyDict::new(py);
    d.set_item("per_group_accuracy", r.per_group_accuracy)?;
    let counts: BTreeMap<String, (usize, usize)> =
        r.counts.into_iter().map(|(g, c)| (g, (c.correct, c.total))).collect();
    d.set_item("counts", counts)?;
    d.set_item("mean_accuracy", r.mean_accuracy)?;
    Ok(d)
}

/// `(threshold, accuracy_percent)` maximizing training accuracy.
#[pyfunction]
fn best_threshold(scores: Vec<f64>, labels: Vec<i64>) -> PyResult<(f64, f64)> {
    let t = verification::best_threshold(&scores, &labels_from(&labels)?).py_err()?;
    Ok((t.threshold, t.accuracy))
}

/// Without `folds`, pairs are cut into ten contiguous blocks.
#[pyfunction]
#[pyo3(signature = (scores, labels, folds = None))]
fn kfold_accuracy<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    labels: Vec<i64>,
    folds: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = scores.len();
    let folds = folds.unwrap_or_else(|| {
        (0..n)
            .map(|i| verification::block_fold(i, n, verification::DEFAULT_FOLDS))
            .collect()
    });
    let scored = ScoredPairs::new(scores, labels_from(&labels)?, folds).py_err()?;
    let r = verification::kfold_accuracy(&scored).py_err()?;
    let d = PyDict::new(py);
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("thresholds", r.thresholds)?;
    d.set_item("fold_accuracies", r.fold_accuracies)?;
    d.set_item("fold_sizes", r.fold_sizes)?;
    Ok(d)
}

/// Per-group k-fold accuracy, `{group: accuracy}`.
#[pyfunction]
#[pyo3(signature = (bundle, pairs, anchors = None, mode = "ie", normalize = true))]
fn evaluate_groups(
    bundle: &PyBundle,
    pairs: BTreeMap<String, PyPairs>,
    anchors: Option<&PyAnchors>,
    mode: &str,
    normalize: bool,
) -> PyResult<BTreeMap<String, f64>> {
    let pairs: BTreeMap<String, PairSet> = pairs.into_iter().map(|(g, p)| (g, p.0)).collect();
    let out = verification::evaluate_groups(&bundle.0, anchors.map(|a| &a.0), &pairs, parse_mode(mode)?, options(normalize))
        .py_err()?;
    Ok(out.into_iter().map(|g| (g.group, g.accuracy)).collect())
}

#[pyfunction]
fn mean_accuracy(accuracies: Vec<f64>) -> PyResult<f64> {
    bias::mean_accuracy(&accuracies).py_err()
}

#[pyfunction]
fn std_accuracy(accuracies: Vec<f64>) -> PyResult<f64> {
    bias::std_accuracy(&accuracies).py_err()
}

#[pyfunction]
fn ser(accuracies: Vec<f64>) -> PyResult<f64> {
    bias::ser(&accuracies).py_err()
}

/// `{"mean", "std", "ser", "per_group"}` for `{group: accuracy}`.
#[pyfunction]
fn bias_report<'py>(py: Python<'py>, per_group: BTreeMap<String, f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = bias::bias_report(&per_group).py_err()?;
    let d = PyDict::new(py);
    d.set_item("mean", r.mean)?;
    d.set_item("std", r.std)?;
    d.set_item("ser", r.ser)?;
    d.set_item("per_group", r.per_group)?;
    Ok(d)
}

/// `{group: {anchor: mean_cosine}}`.
#[pyfunction]
#[pyo3(signature = (bundle, anchors, mode = "ie", normalize = true))]
fn similarity_profile(
    bundle: &PyBundle,
    anchors: &PyAnchors,
    mode: &str,
    normalize: bool,
) -> PyResult<BTreeMap<String, BTreeMap<String, f64>>> {
    let p = diagnostics::similarity_profile(&bundle.0, &anchors.0, parse_mode(mode)?, options(normalize)).py_err()?;
    Ok(p
        .groups
        .iter()
        .zip(&p.matrix)
        .map(|(g, row)| (g.clone(), p.anchors.iter().cloned().zip(row.iter().copied()).collect()))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (bundle, anchors, mode = "ie", normalize = true))]
fn ambiguity_gap(bundle: &PyBundle, anchors: &PyAnchors, mode: &str, normalize: bool) -> PyResult<BTreeMap<String, f64>> {
    let g = diagnostics::ambiguity_gap(&bundle.0, &anchors.0, parse_mode(mode)?, options(normalize)).py_err()?;
    Ok(g.per_group)
}

/// Deterministic synthetic data: `(bundle, anchors, {group: pairs})`.
#[pyfunction(name = "synth")]
#[pyo3(signature = (
    seed = 7, groups = 4, ids = 20, per_id = 5, dim = 64,
    group_strength = 0.6, id_strength = 0.7, noise = 0.1, noise_scales = None, out = None
))]
#[allow(clippy::too_many_arguments)]
fn generate_synth(
    seed: u64,
    groups: usize,
    ids: usize,
    per_id: usize,
    dim: usize,
    group_strength: f64,
    id_strength: f64,
    noise: f64,
    noise_scales: Option<Vec<f64>>,
    out: Option<std::path::PathBuf>,
) -> PyResult<(PyBundle, PyAnchors, BTreeMap<String, PyPairs>)> {
    let config = SynthConfig {
        n_groups: groups,
        ids_per_group: ids,
        images_per_id: per_id,
        dim,
        seed,
        group_strength,
        identity_strength: id_strength,
        noise_sigma: noise,
        noise_scales: noise_scales.unwrap_or_default(),
    };
    let data = synth::generate(&config).py_err()?;
    if let Some(dir) = out {
        data.write(dir).py_err()?;
    }
    let pairs = data.pairs.into_iter().map(|(g, p)| (g, PyPairs(p))).collect();
    Ok((PyBundle(data.bundle), PyAnchors(data.anchors), pairs))
}

/// `[(name, passed, detail)]` for every built-in check.
#[pyfunction(name = "selftest")]
fn run_selftest() -> Vec<(String, bool, String)> {
    selftest::run(&selftest::SelftestOptions::default())
        .checks
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

#[pymodule(name = "utie")]
fn utie_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("UtieError", py.get_type::<UtieError>())?;
    m.add("FormatError", py.get_type::<FormatError>())?;
    m.add("DEFAULT_TEMPLATE", zero_shot::DEFAULT_TEMPLATE)?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyAnchors>()?;
    m.add_class::<PyPairs>()?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(render_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(leave_one_out_mean, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_utie, m)?)?;
    m.add_function(wrap_pyfunction!(ie_pte, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(zero_shot_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(best_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_groups, m)?)?;
    m.add_function(wrap_pyfunction!(mean_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(std_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(ser, m)?)?;
    m.add_function(wrap_pyfunction!(bias_report, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_profile, m)?)?;
    m.add_function(wrap_pyfunction!(ambiguity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
