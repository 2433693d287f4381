use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use raven_core::cli::{exit_code, parse_holdout, parse_rules, EXIT_FAILURE};
use raven_core::eval::{completion_report, consistency_report, pearson};
use raven_core::gen::{default_held_out, generate_dataset, generate_indexed, random_sample, Budget, GenConfig};
use raven_core::inventory::{inventory_digest, inventory_names};
use raven_core::io::{read_dataset, write_dataset, Format};
use raven_core::mem::{build_index, memorization_report};
use raven_core::rng::{stream_rng, Purpose, Split};
use raven_core::rules::shared_rules;
use raven_core::solver::{candidate_rules, complete_panel, CompletionContext, Strategy};
use raven_core::types::{SlotStatus, StructureReport, CHANNELS, GRID_LEN, PANELS, SLOTS};
use raven_core::{decode_sample, Panel, RuleId};

create_exception!(raven, RavenError, PyException);
create_exception!(raven, GenerationError, RavenError);

fn to_py(err: raven_core::Error) -> PyErr {
    if exit_code(&err) == EXIT_FAILURE {
        GenerationError::new_err(err.to_string())
    } else {
        RavenError::new_err(err.to_string())
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| RavenError::new_err(e.to_string()))
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A 3x3 matrix of panels with an optional ground-truth rule.
#[pyclass(name = "Sample", module = "raven", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PySample {
    inner: raven_core::Sample,
}

impl PySample {
    fn wrap(inner: raven_core::Sample) -> Self {
        PySample { inner }
    }
}

fn unwrap_all(samples: &[PyRef<'_, PySample>]) -> Vec<raven_core::Sample> {
    samples.iter().map(|s| s.inner).collect()
}

#[pymethods]
impl PySample {
    /// `grid` is either 243 integers in (channel, panel, slot) order or a
    /// nested 3x9x9 list.
    #[new]
    #[pyo3(signature = (grid, label=None))]
    fn new(grid: &Bound<'_, PyAny>, label: Option<&str>) -> PyResult<Self> {
        let flat: Vec<i32> = match grid.extract::<Vec<i32>>() {
            Ok(v) => v,
            Err(_) => {
                let nested: Vec<Vec<Vec<i32>>> = grid.extract()?;
                if nested.len() != CHANNELS || nested.iter().any(|c| c.len() != PANELS) {
                    return Err(RavenError::new_err("nested grid must be 3x9x9"));
                }
                nested.into_iter().flatten().flatten().collect()
            }
        };
        let (sample, _) = decode_sample(&flat).map_err(to_py)?;
        let label = label.map(parse::<RuleId>).transpose()?;
        Ok(PySample::wrap(sample.with_label(label)))
    }

    #[getter]
    fn label(&self) -> Option<&'static str> {
        self.inner.label.map(RuleId::name)
    }

    /// Flat list of 243 integers.
    fn flat(&self) -> Vec<i32> {
        self.inner.encode().to_vec()
    }

    /// Nested `[channel][panel][slot]` list.
    fn grid(&self) -> Vec<Vec<Vec<i32>>> {
        let flat = self.inner.encode();
        flat.chunks(PANELS * SLOTS).map(|c| c.chunks(SLOTS).map(<[i32]>::to_vec).collect()).collect()
    }

    /// `(panel, slot)` pairs whose contents are neither a valid object nor empty.
    fn malformed_slots(&self) -> Vec<(usize, usize)> {
        let report = StructureReport::of(&self.inner);
        let mut out = Vec::new();
        for p in 0..PANELS {
            for s in 0..SLOTS {
                if report.slots[p][s] == SlotStatus::Malformed {
                    out.push((p, s));
                }
            }
        }
        out
    }

    fn row_rules(&self) -> Vec<Vec<&'static str>> {
        shared_rules(&self.inner).per_row.iter().map(|r| r.names()).collect()
    }

    fn shared_rules(&self) -> Vec<&'static str> {
        shared_rules(&self.inner).all_shared.names()
    }

    #[getter]
    fn c2(&self) -> bool {
        shared_rules(&self.inner).c2()
    }

    #[getter]
    fn c3(&self) -> bool {
        shared_rules(&self.inner).c3()
    }

    fn with_label(&self, label: Option<&str>) -> PyResult<Self> {
        let label = label.map(parse::<RuleId>).transpose()?;
        Ok(PySample::wrap(self.inner.with_label(label)))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        let label = self.label().map_or("None".to_string(), |l| format!("'{l}'"));
        format!("Sample(label={label}, c3={})", if self.c3() { "True" } else { "False" })
    }

    fn __len__(&self) -> usize {
        GRID_LEN
    }
}

#[pyfunction]
fn rule_inventory() -> Vec<String> {
    inventory_names()
}

/// Hex digest of the rule inventory as written to manifests.
#[pyfunction(name = "inventory_digest")]
fn py_inventory_digest() -> String {
    format!("0x{:016x}", inventory_digest(&inventory_names()))
}

#[pyfunction(name = "default_held_out")]
fn py_default_held_out() -> Vec<&'static str> {
    default_held_out().into_iter().map(RuleId::name).collect()
}

/// Returns `(samples, manifest)`; `rules` is `"all"` or comma-separated
/// names, `holdout` is `"default"`, `"none"` or comma-separated names.
#[pyfunction]
#[pyo3(signature = (seed, n_per_rule, rules="all", holdout="default", split="train"))]
fn generate<'py>(
    py: Python<'py>,
    seed: u64,
    n_per_rule: u64,
    rules: &str,
    holdout: &str,
    split: &str,
) -> PyResult<(Vec<PySample>, Bound<'py, PyAny>)> {
    let cfg = GenConfig::new(seed, n_per_rule)
        .with_rules(parse_rules(rules).map_err(to_py)?)
        .with_held_out(parse_holdout(holdout).map_err(to_py)?)
        .with_split(parse::<Split>(split)?);
    let (samples, manifest) = py.detach(|| generate_dataset(&cfg)).map_err(to_py)?;
    let manifest = json_to_py(py, &manifest.to_canonical_json())?;
    Ok((samples.into_iter().map(PySample::wrap).collect(), manifest))
}

/// The sample a dataset would hold at `(rule, index)` for this seed and split.
#[pyfunction]
#[pyo3(signature = (rule, seed=0, index=0, split="train"))]
fn generate_sample(rule: &str, seed: u64, index: u64, split: &str) -> PyResult<PySample> {
    let rule = parse::<RuleId>(rule)?;
    generate_indexed(seed, parse::<Split>(split)?, rule, index, Budget::default()).map(PySample::wrap).map_err(to_py)
}

#[pyfunction(name = "random_sample")]
#[pyo3(signature = (seed=0, index=0, occupancy=0.5))]
fn py_random_sample(seed: u64, index: u64, occupancy: f64) -> PyResult<PySample> {
    if !(0.0..=1.0).contains(&occupancy) {
        return Err(RavenError::new_err("occupancy must be within [0, 1]"));
    }
    let mut rng = stream_rng(seed, Purpose::Baseline, Split::Control, index);
    Ok(PySample::wrap(random_sample(occupancy, &mut rng)))
}

#[pyfunction(name = "candidate_rules")]
fn py_candidate_rules(sample: &PySample) -> PyResult<Vec<&'static str>> {
    let ctx = CompletionContext::from_sample(&sample.inner).map_err(to_py)?;
    Ok(candidate_rules(&ctx).names())
}

/// Oracle completion of the ninth panel. Returns
/// `(completed_sample, used_rule, candidates)`.
#[pyfunction]
#[pyo3(signature = (sample, strategy="first", seed=0, index=0))]
fn complete(
    sample: &PySample,
    strategy: &str,
    seed: u64,
    index: u64,
) -> PyResult<(PySample, &'static str, Vec<&'static str>)> {
    let strategy = parse::<Strategy>(strategy)?;
    let ctx = CompletionContext::from_sample(&sample.inner).map_err(to_py)?;
    let mut rng = stream_rng(seed, Purpose::Complete, Split::Test, index);
    let res = complete_panel(&ctx, strategy, &mut rng).map_err(to_py)?;
    Ok((
        PySample::wrap(ctx.assemble(res.panel9, sample.inner.label)),
        res.used_rule.name(),
        res.candidates.names(),
    ))
}

#[pyfunction(name = "consistency_report")]
fn py_consistency_report<'py>(py: Python<'py>, samples: Vec<PyRef<'py, PySample>>) -> PyResult<Bound<'py, PyAny>> {
    let samples = unwrap_all(&samples);
    let report = py.detach(|| consistency_report(&samples));
    json_to_py(py, &report.to_json())
}

/// Scores the ninth panel of each `completions[i]` against the first eight
/// panels of `tests[i]`.
#[pyfunction(name = "completion_report")]
#[pyo3(signature = (tests, completions, holdout="default"))]
fn py_completion_report<'py>(
    py: Python<'py>,
    tests: Vec<PyRef<'py, PySample>>,
    completions: Vec<PyRef<'py, PySample>>,
    holdout: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let held = parse_holdout(holdout).map_err(to_py)?;
    let tests = unwrap_all(&tests);
    let panels: Vec<Panel> = completions.iter().map(|s| *s.inner.panel(8)).collect();
    let report = py.detach(|| completion_report(&tests, &panels, &held)).map_err(to_py)?;
    json_to_py(py, &report.to_json())
}

#[pyfunction(name = "memorization_report")]
#[pyo3(signature = (generated, train, control=None))]
fn py_memorization_report<'py>(
    py: Python<'py>,
    generated: Vec<PyRef<'py, PySample>>,
    train: Vec<PyRef<'py, PySample>>,
    control: Option<Vec<PyRef<'py, PySample>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let generated = unwrap_all(&generated);
    let train = unwrap_all(&train);
    let control = control.map(|c| unwrap_all(&c));
    let report = py.detach(|| {
        let train_index = build_index(&train);
        let control_index = control.as_deref().map(build_index);
        memorization_report(&generated, &train_index, control_index.as_ref())
    });
    json_to_py(py, &report.to_json())
}

/// `format` is `"grvn"` or `"jsonl"`; inferred from the extension when omitted.
#[pyfunction(name = "write_dataset")]
#[pyo3(signature = (samples, path, format=None))]
fn py_write_dataset(samples: Vec<PyRef<'_, PySample>>, path: PathBuf, format: Option<&str>) -> PyResult<()> {
    let format = match format {
        None => Format::from_path(&path),
        Some("grvn") | Some("binary") => Format::Binary,
        Some("jsonl") => Format::Jsonl,
        Some(other) => return Err(RavenError::new_err(format!("unknown format `{other}`"))),
    };
    write_dataset(&unwrap_all(&samples), &path, format).map_err(to_py)
}

#[pyfunction(name = "read_dataset")]
fn py_read_dataset(path: PathBuf) -> PyResult<Vec<PySample>> {
    Ok(read_dataset(&path).map_err(to_py)?.into_iter().map(PySample::wrap).collect())
}

#[pyfunction(name = "pearson")]
fn py_pearson(xs: Vec<f64>, ys: Vec<f64>) -> Option<f64> {
    pearson(&xs, &ys)
}

#[pymodule]
fn raven(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RavenError", m.py().get_type::<RavenError>())?;
    m.add("GenerationError", m.py().get_type::<GenerationError>())?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(rule_inventory, m)?)?;
    m.add_function(wrap_pyfunction!(py_inventory_digest, m)?)?;
    m.add_function(wrap_pyfunction!(py_default_held_out, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sample, m)?)?;
    m.add_function(wrap_pyfunction!(py_random_sample, m)?)?;
    m.add_function(wrap_pyfunction!(py_candidate_rules, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(py_consistency_report, m)?)?;
    m.add_function(wrap_pyfunction!(py_completion_report, m)?)?;
    m.add_function(wrap_pyfunction!(py_memorization_report, m)?)?;
    m.add_function(wrap_pyfunction!(py_write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(py_read_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(py_pearson, m)?)?;
    Ok(())
}
