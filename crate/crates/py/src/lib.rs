//! Python bindings for the difuzz pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use difuzz_core::bench::{cell_text, TteCell};
use difuzz_core::engine::{fuzz_loop, Clock, FuzzConfig, Mode, ScheduleConfig};
use difuzz_core::graph::{build_graphs, emit_dot, parse_dot, GraphSet};
use difuzz_core::instrument::{instrument, InstrumentedProgram};
use difuzz_core::minilang::{self, Ast, ExecOutcome, ExecStatus, NoHooks, RecordingHooks, DEFAULT_STEP_LIMIT};
use difuzz_core::preprocess::{compute_ets, from_toml_str, parse_targets, to_toml_string, EnhancedTargetSequence};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn outcome_dict<'py>(py: Python<'py>, out: &ExecOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let status = match &out.status {
        ExecStatus::Normal => "normal",
        ExecStatus::Panic { message, position } => {
            d.set_item("message", message)?;
            d.set_item("file", &position.file)?;
            d.set_item("line", position.line)?;
            "panic"
        }
        ExecStatus::StepLimitExceeded => "step_limit",
    };
    d.set_item("status", status)?;
    d.set_item("stdout", String::from_utf8_lossy(&out.stdout))?;
    d.set_item("steps", out.steps)?;
    Ok(d)
}

/// A parsed MiniProc program.
#[pyclass(module = "difuzz", frozen)]
struct Program {
    ast: Ast,
}

#[pymethods]
impl Program {
    #[staticmethod]
    #[pyo3(signature = (source, file = "main.mp"))]
    fn parse(source: &str, file: &str) -> PyResult<Self> {
        Ok(Self { ast: minilang::parse(source, file).map_err(value_err)? })
    }

    /// Load every `.mp` file of a directory.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self { ast: minilang::load_dir(&dir).map_err(value_err)? })
    }

    fn source(&self) -> String {
        minilang::emit(&self.ast)
    }

    fn function_names(&self) -> Vec<String> {
        self.ast.functions.iter().map(|f| f.name.clone()).collect()
    }

    #[pyo3(signature = (input, step_limit = DEFAULT_STEP_LIMIT))]
    fn run<'py>(&self, py: Python<'py>, input: &[u8], step_limit: u64) -> PyResult<Bound<'py, PyDict>> {
        let out = minilang::interpret(&self.ast, input, step_limit, &mut NoHooks).map_err(value_err)?;
        outcome_dict(py, &out)
    }

    /// Call graph and per-function CFGs.
    fn graphs(&self) -> Graphs {
        Graphs { set: build_graphs(&self.ast) }
    }
}

#[pyclass(module = "difuzz", frozen)]
struct Graphs {
    set: GraphSet,
}

#[pymethods]
impl Graphs {
    fn callgraph_dot(&self) -> String {
        emit_dot(&self.set.callgraph)
    }

    /// `{(function, occurrence): dot}`.
    fn cfg_dots(&self) -> Vec<((String, usize), String)> {
        self.set.cfgs.iter().map(|(k, g)| (k.clone(), emit_dot(g))).collect()
    }

    /// ETS for a targets TSV document.
    #[pyo3(signature = (targets_tsv, path = "targets.tsv"))]
    fn ets(&self, targets_tsv: &str, path: &str) -> PyResult<Ets> {
        let targets = parse_targets(targets_tsv, path).map_err(value_err)?;
        Ok(Ets { ets: compute_ets(&self.set, &targets).map_err(value_err)? })
    }
}

/// Parse DOT text and emit it again in canonical form.
#[pyfunction]
fn normalize_dot(text: &str) -> PyResult<String> {
    Ok(emit_dot(&parse_dot(text).map_err(value_err)?))
}

/// An enhanced target sequence.
#[pyclass(module = "difuzz", frozen)]
struct Ets {
    ets: EnhancedTargetSequence,
}

#[pymethods]
impl Ets {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { ets: from_toml_str(text).map_err(value_err)? })
    }

    fn to_toml(&self) -> String {
        to_toml_string(&self.ets)
    }

    #[getter]
    fn max_block_distance(&self) -> u64 {
        self.ets.max_block_distance
    }

    fn blocks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.ets.blocks)
    }

    fn __len__(&self) -> usize {
        self.ets.blocks.len()
    }
}

/// A program carrying ETS probes and coverage guards.
#[pyclass(module = "difuzz", frozen)]
struct Instrumented {
    program: InstrumentedProgram,
    plan: serde_json::Value,
}

#[pymethods]
impl Instrumented {
    fn source(&self) -> String {
        minilang::emit(&self.program.ast)
    }

    #[getter]
    fn guard_count(&self) -> usize {
        self.program.guard_count
    }

    fn plan<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.plan)
    }

    /// Run once; the result also lists the probes hit, in order.
    #[pyo3(signature = (input, step_limit = DEFAULT_STEP_LIMIT))]
    fn run<'py>(&self, py: Python<'py>, input: &[u8], step_limit: u64) -> PyResult<Bound<'py, PyDict>> {
        let mut hooks = RecordingHooks::default();
        let out = self.program.run(input, step_limit, &mut hooks);
        let d = outcome_dict(py, &out)?;
        d.set_item("ets", hooks.ets)?;
        d.set_item("guards", hooks.guards)?;
        Ok(d)
    }

    /// Fuzz until the target is reached or the timeout expires and return
    /// the campaign summary.
    #[pyo3(signature = (ets, mode = "directed", timeout_s = 10.0, rng_seed = 0, exec_clock = None, t_exploit_s = None))]
    fn fuzz<'py>(
        &self,
        py: Python<'py>,
        ets: &Ets,
        mode: &str,
        timeout_s: f64,
        rng_seed: u64,
        exec_clock: Option<f64>,
        t_exploit_s: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mode: Mode = mode.parse().map_err(value_err)?;
        let mut schedule = ScheduleConfig::default();
        schedule.t_exploit_s = t_exploit_s.unwrap_or(schedule.t_exploit_s);
        let cfg = FuzzConfig {
            schedule,
            clock: exec_clock.map_or(Clock::Wall, |per_second| Clock::Executions { per_second }),
            ..FuzzConfig::new(mode, timeout_s, rng_seed)
        };
        let result = py.detach(|| fuzz_loop(&self.program, &ets.ets, &cfg)).map_err(value_err)?;
        json_to_py(py, &result)
    }
}

#[pyfunction]
fn instrument_program(program: &Program, ets: &Ets) -> PyResult<Instrumented> {
    let (ast, plan) = instrument(&program.ast, &ets.ets).map_err(value_err)?;
    let plan = serde_json::to_value(&plan).map_err(runtime_err)?;
    Ok(Instrumented { program: InstrumentedProgram::from_ast(ast).map_err(value_err)?, plan })
}

/// Summary of one benchmark cell; `None` marks a timed-out trial.
#[pyfunction]
fn tte_cell<'py>(py: Python<'py>, trials: Vec<Option<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let c = TteCell::from_trials(&trials);
    let d = PyDict::new(py);
    d.set_item("best_s", c.best_s)?;
    d.set_item("avg_s", c.avg_s)?;
    d.set_item("median_s", c.median_s)?;
    d.set_item("timeout_pct", c.timeout_pct)?;
    d.set_item("text", cell_text(&c))?;
    Ok(d)
}

#[pymodule]
fn difuzz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    m.add_class::<Graphs>()?;
    m.add_class::<Ets>()?;
    m.add_class::<Instrumented>()?;
    m.add_function(wrap_pyfunction!(normalize_dot, m)?)?;
    m.add_function(wrap_pyfunction!(instrument_program, m)?)?;
    m.add_function(wrap_pyfunction!(tte_cell, m)?)?;
    Ok(())
}
