//! Python bindings: `svd_dynamics`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use svd_core::entropy::{
    count_or_bracket, cover_spanning_orbits, cover_spanning_points, entropy_rate as core_rate, pack_separated_orbits,
    pack_separated_points, Count, CountKind, Mode, SearchOptions, DEFAULT_NODE_BUDGET,
};
use svd_core::experiment::{self, MapConfig, Overrides, SpaceConfig, SystemConfig, Task};
use svd_core::expansivity::{cw_check, default_family, family_horizon, uniform_horizon};
use svd_core::orbit::{enumerate_segments, semimetric_dn};
use svd_core::specification::{default_opens, mixing_check, pointwise_spec_check, SpecInstance};
use svd_core::{parse_length, Error, Length, SetValuedMap};

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::InvalidInstance(_) | Error::NonPositiveEpsilon(_) | Error::NonPositiveDelta(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn len(s: &str) -> PyResult<Length> {
    parse_length(s).map_err(err)
}

/// A set-valued map on a finite net of the circle, the torus or an explicit space.
#[pyclass(module = "svd_dynamics", frozen)]
struct System {
    map: Arc<SetValuedMap>,
}

fn map_config(map: &str, k: Option<usize>, delta: Option<&str>) -> PyResult<MapConfig> {
    let need_k = || k.ok_or_else(|| PyValueError::new_err(format!("map {map:?} needs k")));
    Ok(match map {
        "constant_full" => MapConfig::ConstantFull,
        "identity" => MapConfig::Identity,
        "doubling" => MapConfig::Doubling,
        "anosov_mimic" => MapConfig::AnosovMimic,
        "rotation" => MapConfig::Rotation { k: need_k()? },
        "rotation_interval" => MapConfig::RotationInterval { k: need_k()? },
        "blurred_doubling" => MapConfig::BlurredDoubling {
            delta: delta
                .ok_or_else(|| PyValueError::new_err("blurred_doubling needs delta"))?
                .to_string(),
        },
        other => return Err(PyValueError::new_err(format!("unknown map {other:?}"))),
    })
}

fn parse_kind(kind: &str) -> PyResult<CountKind> {
    Ok(match kind {
        "s" => CountKind::SeparatedOrbits,
        "r" => CountKind::SpanningOrbits,
        "S" => CountKind::SeparatedPoints,
        "R" => CountKind::SpanningPoints,
        other => return Err(PyValueError::new_err(format!("kind must be s, r, S or R, not {other:?}"))),
    })
}

fn bounds(c: Count) -> (usize, usize) {
    (c.lower(), c.upper())
}

#[pymethods]
impl System {
    /// `System("circle", 16, "blurred_doubling", delta="1/8")`
    #[new]
    #[pyo3(signature = (space, q, map, k=None, delta=None, images=None))]
    fn new(
        space: &str,
        q: usize,
        map: &str,
        k: Option<usize>,
        delta: Option<&str>,
        images: Option<Vec<Vec<usize>>>,
    ) -> PyResult<Self> {
        let space = match space {
            "circle" => SpaceConfig::Circle { q },
            "torus" => SpaceConfig::Torus { q },
            other => return Err(PyValueError::new_err(format!("space must be circle or torus, not {other:?}"))),
        };
        let map = match (map, images) {
            ("explicit", Some(images)) => MapConfig::Explicit {
                images: images.into_iter().enumerate().collect(),
            },
            ("explicit", None) => return Err(PyValueError::new_err("explicit map needs images")),
            (m, _) => map_config(m, k, delta)?,
        };
        let config = SystemConfig { space, map, label: None };
        Ok(Self {
            map: Arc::new(config.build().map_err(err)?),
        })
    }

    fn __len__(&self) -> usize {
        self.map.len()
    }

    fn __repr__(&self) -> String {
        format!("System({:?}, {} points)", self.map.label(), self.map.len())
    }

    #[getter]
    fn label(&self) -> String {
        self.map.label().to_string()
    }

    #[getter]
    fn diameter(&self) -> String {
        self.map.space().diameter().to_string()
    }

    fn distance(&self, x: usize, y: usize) -> PyResult<String> {
        self.map.space().check_point(x).map_err(err)?;
        self.map.space().check_point(y).map_err(err)?;
        Ok(self.map.space().distance(x, y).to_string())
    }

    fn image(&self, x: usize) -> PyResult<Vec<usize>> {
        self.map.space().check_point(x).map_err(err)?;
        Ok(self.map.image(x).to_vec())
    }

    /// Semimetric d_n(x, y) as a `"p/q"` string.
    fn dn(&self, x: usize, y: usize, n: usize) -> PyResult<String> {
        semimetric_dn(&self.map, x, y, n).map(|d| d.to_string()).map_err(err)
    }

    /// Count of kind `s`, `r`, `S` or `R` as `(lower, upper)`; equal bounds mean exact.
    #[pyo3(signature = (kind, n, eps, exact=false, node_budget=DEFAULT_NODE_BUDGET, cap=1_000_000))]
    fn count(
        &self,
        py: Python<'_>,
        kind: &str,
        n: usize,
        eps: &str,
        exact: bool,
        node_budget: u64,
        cap: usize,
    ) -> PyResult<(usize, usize)> {
        let kind = parse_kind(kind)?;
        let eps = len(eps)?;
        let opts = SearchOptions {
            mode: if exact { Mode::Exact } else { Mode::Greedy },
            node_budget,
        };
        let map = self.map.clone();
        py.detach(move || -> Result<Count, Error> {
            match kind {
                CountKind::SeparatedPoints => count_or_bracket(kind, pack_separated_points(&map, n, eps, opts)),
                CountKind::SpanningPoints => count_or_bracket(kind, cover_spanning_points(&map, n, eps, opts)),
                _ => {
                    let set = enumerate_segments(&map, None, n, cap)?;
                    if !set.is_exhaustive() {
                        return Err(Error::Config(format!("more than cap = {cap} orbit segments")));
                    }
                    if kind == CountKind::SeparatedOrbits {
                        count_or_bracket(kind, pack_separated_orbits(&set, eps, opts))
                    } else {
                        count_or_bracket(kind, cover_spanning_orbits(&set, eps, opts))
                    }
                }
            }
        })
        .map(bounds)
        .map_err(err)
    }

    /// Whether every default continuum reaches diameter > delta within `horizon` steps.
    fn cw_check(&self, py: Python<'_>, delta: &str, horizon: usize) -> PyResult<bool> {
        let delta = len(delta)?;
        let map = self.map.clone();
        py.detach(move || {
            let space = map.space();
            let family = default_family(space, space.unit() * space.adjacency_units() as i64)?;
            cw_check(&map, &family, delta, horizon).map(|r| r.pass)
        })
        .map_err(err)
    }

    #[pyo3(signature = (delta, eps, n_max=64))]
    fn uniform_horizon(&self, delta: &str, eps: &str, n_max: usize) -> PyResult<Option<usize>> {
        uniform_horizon(&self.map, len(delta)?, len(eps)?, None, n_max).map_err(err)
    }

    #[pyo3(signature = (delta, n_max=64))]
    fn family_horizon(&self, delta: &str, n_max: usize) -> PyResult<Option<usize>> {
        family_horizon(&self.map, len(delta)?, n_max).map_err(err)
    }

    /// Mixing over one-step balls up to `horizon`: `(pass, max witness M)`.
    fn mixing(&self, horizon: usize) -> PyResult<(bool, Option<usize>)> {
        let rep = mixing_check(&self.map, &default_opens(self.map.space()), horizon).map_err(err)?;
        Ok((rep.pass, rep.max_witness()))
    }

    /// Pointwise specification for `[(point, time), ...]`: `(z, distances)` or None.
    #[pyo3(signature = (targets, eps, gap=0, horizon=None))]
    fn spec_check(
        &self,
        targets: Vec<(usize, usize)>,
        eps: &str,
        gap: usize,
        horizon: Option<usize>,
    ) -> PyResult<Option<(usize, Vec<String>)>> {
        let horizon = horizon.unwrap_or_else(|| targets.iter().map(|t| t.1).max().unwrap_or(0));
        let inst = SpecInstance::new(self.map.space(), targets, len(eps)?, gap).map_err(err)?;
        let found = pointwise_spec_check(&self.map, &inst, horizon).map_err(err)?;
        Ok(found.map(|w| (w.z, w.distances.iter().map(|d| d.to_string()).collect())))
    }
}

/// Least-squares slope of `ln count` against `n`.
#[pyfunction]
fn entropy_rate(samples: Vec<(usize, u64)>) -> PyResult<f64> {
    core_rate(&samples).map_err(err)
}

/// Normalises a rational: `"2/8"` gives `"1/4"`.
#[pyfunction]
fn rational(s: &str) -> PyResult<String> {
    len(s).map(|l| l.to_string())
}

/// Runs a CLI task on a JSON config; returns `(csv, summary, violation)`.
#[pyfunction]
#[pyo3(signature = (task, config, exact=false, cap=None))]
fn run_task(py: Python<'_>, task: &str, config: &str, exact: bool, cap: Option<usize>) -> PyResult<(String, String, bool)> {
    let task: Task = task.parse().map_err(err)?;
    let config = experiment::parse_config(config).map_err(err)?;
    let out = py
        .detach(move || experiment::run_task(task, &config, Overrides { exact, cap }))
        .map_err(err)?;
    Ok((out.csv, out.summary, out.violation))
}

/// Runs a named preset; returns `(csv, summary, violation)`.
#[pyfunction]
fn reproduce(py: Python<'_>, preset: &str) -> PyResult<(String, String, bool)> {
    let preset = preset.to_string();
    let out = py.detach(move || experiment::reproduce(&preset)).map_err(err)?;
    Ok((out.csv, out.summary, out.violation))
}

#[pymodule]
fn svd_dynamics(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(entropy_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rational, m)?)?;
    m.add_function(wrap_pyfunction!(run_task, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add("PRESETS", experiment::PRESETS.to_vec())?;
    Ok(())
}
