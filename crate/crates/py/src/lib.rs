//! Python bindings. Reports come back as plain dicts decoded from the same
//! JSON the command-line tool writes; exact probabilities come back as
//! `fractions.Fraction`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use retrobell_core::backward::bell_target;
use retrobell_core::chsh::pr_target;
use retrobell_core::ghz::ghz_target;
use retrobell_core::quantum;
use retrobell_core::sim::{self, SampleOptions};
use retrobell_core::{
    BackwardModel, BellState, BinarySetting, ChshConfig, Error, Joint, Outcome, Prob, Rational, SettingSpec,
};

fn err(e: Error) -> PyErr {
    match e {
        Error::AcceptanceCapExceeded { .. } | Error::Serialization(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn fraction<'py>(py: Python<'py>, p: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((p.encode(),))
}

fn outcome(v: i64) -> PyResult<Outcome> {
    Outcome::from_value(v).map_err(err)
}

fn binary(v: u8) -> PyResult<BinarySetting> {
    BinarySetting::from_bit(v).map_err(err)
}

fn state(k: u8) -> PyResult<BellState> {
    BellState::from_index(k).map_err(err)
}

/// `P(a1, a2 | α1, α2)` for Bell state 1..4.
#[pyfunction]
fn bell_prob(state_index: u8, a1: i64, a2: i64, alpha1: f64, alpha2: f64) -> PyResult<f64> {
    Ok(quantum::bell_prob(
        state(state_index)?,
        outcome(a1)?,
        outcome(a2)?,
        quantum::Angle(alpha1),
        quantum::Angle(alpha2),
    ))
}

#[pyfunction]
fn bell_expectation(state_index: u8, alpha1: f64, alpha2: f64) -> PyResult<f64> {
    Ok(quantum::bell_expectation(state(state_index)?, quantum::Angle(alpha1), quantum::Angle(alpha2)))
}

#[pyfunction]
fn ghz_prob<'py>(py: Python<'py>, outcomes: [i64; 3], settings: [u8; 3]) -> PyResult<Bound<'py, PyAny>> {
    let o = [outcome(outcomes[0])?, outcome(outcomes[1])?, outcome(outcomes[2])?];
    let s = [binary(settings[0])?, binary(settings[1])?, binary(settings[2])?];
    fraction(py, &quantum::ghz_prob(o, s))
}

#[pyfunction]
fn pr_prob<'py>(py: Python<'py>, a1: i64, a2: i64, alpha1: u8, alpha2: u8) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &quantum::pr_prob(outcome(a1)?, outcome(a2)?, binary(alpha1)?, binary(alpha2)?))
}

#[pyfunction]
fn lhv_max_chsh() -> i64 {
    retrobell_core::lhv_max_chsh(&ChshConfig::new(0u8, 1, 0, 1))
}

#[pyfunction]
#[pyo3(signature = (state_index=1, resolution=16))]
fn quantum_chsh_scan<'py>(py: Python<'py>, state_index: u8, resolution: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| retrobell_core::quantum_chsh_scan(state(state_index)?, resolution).map_err(err))?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (list_near_misses=false))]
fn ghz_exhaustion<'py>(py: Python<'py>, list_near_misses: bool) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &retrobell_core::classical_assignment_exhaustion(list_near_misses))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Bell,
    Ghz,
    Prbox,
    Counterexample,
}

enum Inner {
    Float(BackwardModel<f64>),
    Exact(BackwardModel<Rational>),
}

/// Runs `$body` with `$m` bound to the model in either backend.
macro_rules! with_model {
    ($self:expr, $m:ident => $body:expr) => {
        match &$self.inner {
            Inner::Float($m) => $body,
            Inner::Exact($m) => $body,
        }
    };
}

trait Target: Prob {
    fn target(kind: Kind, label: usize, s: &[SettingSpec]) -> Option<Joint<Self>>;
}

impl Target for f64 {
    fn target(kind: Kind, label: usize, s: &[SettingSpec]) -> Option<Joint<f64>> {
        match kind {
            Kind::Bell => bell_target(label, s),
            Kind::Ghz => ghz_target(label, s).map(|j| j.to_f64()),
            Kind::Prbox => pr_target(label, s).map(|j| j.to_f64()),
            Kind::Counterexample => None,
        }
    }
}

impl Target for Rational {
    fn target(kind: Kind, label: usize, s: &[SettingSpec]) -> Option<Joint<Rational>> {
        match kind {
            Kind::Ghz => ghz_target(label, s),
            Kind::Prbox => pr_target(label, s),
            _ => None,
        }
    }
}

/// A backward-conditional model: `bell`, `ghz`, `prbox` or `counterexample`.
///
/// `backend` defaults to `"rational"` for ghz/prbox and `"float"` otherwise;
/// angle models have no rational form.
#[pyclass(module = "retrobell", frozen)]
struct Model {
    kind: Kind,
    inner: Inner,
}

impl Model {
    fn settings(&self, values: &[f64]) -> PyResult<Vec<SettingSpec>> {
        let angles = matches!(self.kind, Kind::Bell | Kind::Counterexample);
        values
            .iter()
            .map(|&v| {
                if angles {
                    Ok(SettingSpec::angle(v))
                } else if v == 0.0 || v == 1.0 {
                    Ok(SettingSpec::Binary(binary(v as u8)?))
                } else {
                    Err(PyValueError::new_err(format!("binary settings are 0 or 1, got {v}")))
                }
            })
            .collect()
    }

    fn label(&self, selector: &str) -> PyResult<usize> {
        with_model!(self, m => m.lambda().resolve(selector).map_err(err))
    }
}

fn report<'py, P: Target>(
    py: Python<'py>,
    m: &BackwardModel<P>,
    kind: Kind,
    check: &str,
    label: Option<usize>,
    resolution: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = m.default_grid(resolution);
    let r = match check {
        "si" => m.verify_si(&grid),
        "kernel-norm" | "kernel_norm" => m.verify_kernel_normalization(&grid),
        "nosignal" | "no_signalling" => m.verify_no_signalling(label.unwrap_or(0), &grid),
        "recovery" => m.verify_recovery(&grid, |l, s| {
            if label.is_none_or(|x| x == l) {
                P::target(kind, l, s)
            } else {
                None
            }
        }),
        other => return Err(PyValueError::new_err(format!("unknown check `{other}`"))),
    }
    .map_err(err)?;
    to_py(py, &r)
}

fn joint_dict<'py, P: Prob>(py: Python<'py>, j: &Joint<P>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (a, p) in j.iter() {
        let key: Vec<i64> = a.values().filter_map(|v| v.as_int()).collect();
        d.set_item(pyo3::types::PyTuple::new(py, key)?, p.to_f64())?;
    }
    Ok(d)
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (kind, backend=None))]
    fn new(kind: &str, backend: Option<&str>) -> PyResult<Self> {
        let kind = match kind {
            "bell" => Kind::Bell,
            "ghz" => Kind::Ghz,
            "prbox" => Kind::Prbox,
            "counterexample" => Kind::Counterexample,
            other => return Err(PyValueError::new_err(format!("unknown model `{other}`"))),
        };
        let exact = |m: BackwardModel<Rational>| match backend {
            Some("float") => Ok(Inner::Float(m.to_float())),
            None | Some("rational") => Ok(Inner::Exact(m)),
            Some(b) => Err(PyValueError::new_err(format!("unknown backend `{b}`"))),
        };
        let float = |m: BackwardModel<f64>| match backend {
            None | Some("float") => Ok(Inner::Float(m)),
            Some("rational") => Err(PyValueError::new_err("angle models have no rational backend")),
            Some(b) => Err(PyValueError::new_err(format!("unknown backend `{b}`"))),
        };
        let inner = match kind {
            Kind::Bell => float(retrobell_core::bell_backward_model())?,
            Kind::Counterexample => float(retrobell_core::signalling_counterexample_model())?,
            Kind::Ghz => exact(retrobell_core::ghz_backward_model().into_inner())?,
            Kind::Prbox => exact(retrobell_core::pr_box_backward_model())?,
        };
        Ok(Model { kind, inner })
    }

    #[getter]
    fn name(&self) -> String {
        with_model!(self, m => m.name().to_string())
    }

    #[getter]
    fn backend(&self) -> &'static str {
        match self.inner {
            Inner::Float(_) => "float",
            Inner::Exact(_) => "rational",
        }
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        with_model!(self, m => m.lambda().labels().to_vec())
    }

    #[getter]
    fn n_wings(&self) -> usize {
        with_model!(self, m => m.n_wings())
    }

    /// `P(λ | α)` for every label.
    fn lambda_given_settings(&self, settings: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = self.settings(&settings)?;
        with_model!(self, m => Ok(m.lambda_given_settings(&s).map_err(err)?.iter().map(|p| p.to_f64()).collect()))
    }

    /// `P(a | α, λ)` keyed by outcome tuple.
    fn condition<'py>(&self, py: Python<'py>, label: &str, settings: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let l = self.label(label)?;
        let s = self.settings(&settings)?;
        with_model!(self, m => joint_dict(py, &m.condition_on_lambda(l, &s).map_err(err)?))
    }

    /// One check (`si`, `nosignal`, `recovery`, `kernel-norm`) over the default grid.
    #[pyo3(signature = (check, label=None, resolution=16))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        check: &str,
        label: Option<&str>,
        resolution: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let l = label.map(|s| self.label(s)).transpose()?;
        with_model!(self, m => report(py, m, self.kind, check, l, resolution))
    }

    fn lc_witness<'py>(
        &self,
        py: Python<'py>,
        label: &str,
        settings: Vec<f64>,
        outcomes: Vec<i64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let l = self.label(label)?;
        let s = self.settings(&settings)?;
        let o: Vec<Outcome> = outcomes.into_iter().map(outcome).collect::<PyResult<_>>()?;
        with_model!(self, m => to_py(py, &m.lc_violation_witness(l, &s, &o).map_err(err)?))
    }

    /// CHSH value after conditioning on `label`; `settings` is
    /// `[α1, α1′, α2, α2′]`, defaulting to the standard angles or, for the
    /// PR box, the binary order that attains 4.
    #[pyo3(signature = (label, settings=None))]
    fn chsh(&self, label: &str, settings: Option<Vec<f64>>) -> PyResult<f64> {
        let l = self.label(label)?;
        let config = match settings {
            Some(v) if v.len() == 4 => {
                let s = self.settings(&v)?;
                ChshConfig::new(s[0], s[1], s[2], s[3])
            }
            Some(v) => return Err(PyValueError::new_err(format!("need four settings, got {}", v.len()))),
            None if self.kind == Kind::Prbox => ChshConfig::binary_axes(),
            None => ChshConfig::standard_angles(),
        };
        with_model!(self, m => Ok(retrobell_core::backward_model_chsh(m, l, &config).map_err(err)?.to_f64()))
    }

    /// Postselected sampling report (or pre-postselection statistics with
    /// `unconditional=True`).
    #[pyo3(signature = (label, settings, n, seed=0, shards=1, cap=None, unconditional=false))]
    #[allow(clippy::too_many_arguments)]
    fn sample<'py>(
        &self,
        py: Python<'py>,
        label: &str,
        settings: Vec<f64>,
        n: u64,
        seed: u64,
        shards: usize,
        cap: Option<u64>,
        unconditional: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let l = self.label(label)?;
        let s = self.settings(&settings)?;
        let mut opts = SampleOptions::new(n, seed).with_shards(shards);
        if let Some(c) = cap {
            opts = opts.with_cap(c);
        }
        let text = py.detach(|| -> Result<String, Error> {
            let encode = |v: serde_json::Result<String>| v.map_err(|e| Error::Serialization(e.to_string()));
            with_model!(self, m => if unconditional {
                encode(serde_json::to_string(&sim::sample_unconditional(m, &s, &opts)?))
            } else {
                encode(serde_json::to_string(&sim::sample_postselected(m, l, &s, &opts)?))
            })
        });
        py.import("json")?.call_method1("loads", (text.map_err(err)?,))
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, backend={:?})", self.name(), self.backend())
    }
}

#[pymodule]
fn retrobell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", retrobell_core::VERSION)?;
    m.add("TSIRELSON_BOUND", retrobell_core::chsh::TSIRELSON_BOUND)?;
    m.add_function(wrap_pyfunction!(bell_prob, m)?)?;
    m.add_function(wrap_pyfunction!(bell_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_prob, m)?)?;
    m.add_function(wrap_pyfunction!(pr_prob, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_max_chsh, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_chsh_scan, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_exhaustion, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}
