//! Python bindings. Complex values cross as Python `complex`; result records come back as
//! dicts.

use ::adsqnm as core;
use core::cli::{RunConfig, RunOptions};
use core::energy::{self, KillingField};
use core::geometry::{self, BlackHoleParams, KerrAds, DEFAULT_DELTA_FACTOR};
use core::numerics::C64;
use core::operator::{self, BetaProfile, BoundaryCondition, DiscreteOperator};
use core::quasimodes::{self, QuasimodeConfig};
use core::spectra::{self, SearchRegion};
use core::symbol_flow::{self, FlowWindow};
use ndarray::Array1;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rayon::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Any serde record as plain Python objects.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn boundary(robin_beta: Option<f64>) -> BoundaryCondition {
    match robin_beta {
        Some(b) => BoundaryCondition::Robin { beta: BetaProfile::Constant(b) },
        None => BoundaryCondition::Dirichlet,
    }
}

/// Kerr–AdS black hole with a Klein–Gordon field of parameter `nu` and axial mode `k`.
#[pyclass(name = "BlackHole", module = "adsqnm", frozen)]
struct PyBlackHole {
    geom: KerrAds,
}

#[pymethods]
impl PyBlackHole {
    #[new]
    #[pyo3(signature = (mass, spin, nu = 1.5, k = 0, delta_factor = DEFAULT_DELTA_FACTOR))]
    fn new(mass: f64, spin: f64, nu: f64, k: i32, delta_factor: f64) -> PyResult<Self> {
        let params = BlackHoleParams::new(mass, spin, nu, k).map_err(value_err)?;
        let geom = KerrAds::with_delta_factor(params, delta_factor).map_err(value_err)?;
        Ok(Self { geom })
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.geom.params.mass
    }
    #[getter]
    fn spin(&self) -> f64 {
        self.geom.params.spin
    }
    #[getter]
    fn nu(&self) -> f64 {
        self.geom.params.nu
    }
    #[getter]
    fn k(&self) -> i32 {
        self.geom.params.k
    }
    #[getter]
    fn r_plus(&self) -> f64 {
        self.geom.r_plus()
    }
    #[getter]
    fn surface_gravity(&self) -> f64 {
        self.geom.horizon.surface_gravity
    }
    /// Whether |a| < r₊².
    #[getter]
    fn hawking_reall(&self) -> bool {
        self.geom.horizon.hawking_reall
    }
    #[getter]
    fn horizon_angular_velocity(&self) -> f64 {
        energy::horizon_angular_velocity(&self.geom)
    }

    fn delta_r(&self, r: f64) -> f64 {
        geometry::delta_r(&self.geom.params, r)
    }

    fn horizon<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.geom.horizon)
    }

    /// The same black hole with another axial mode.
    fn with_k(&self, k: i32) -> Self {
        Self { geom: KerrAds { params: self.geom.params.with_k(k), ..self.geom } }
    }

    fn indicial_roots(&self, lam: C64) -> (C64, C64) {
        let ir = energy::indicial_roots(&self.geom, lam, self.geom.params.k);
        (ir.roots[0], ir.roots[1])
    }

    fn __repr__(&self) -> String {
        let p = self.geom.params;
        format!("BlackHole(mass={}, spin={}, nu={}, k={})", p.mass, p.spin, p.nu, p.k)
    }
}

/// The quadratic pencil P0 + λP1 + λ²P2 on a collocation grid.
#[pyclass(name = "Operator", module = "adsqnm", frozen)]
struct PyOperator {
    op: DiscreteOperator,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (black_hole, n_radial, n_angular, robin_beta = None))]
    fn new(black_hole: &PyBlackHole, n_radial: usize, n_angular: usize, robin_beta: Option<f64>) -> PyResult<Self> {
        Ok(Self { op: assemble(&black_hole.geom, n_radial, n_angular, robin_beta)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.op.dim()
    }

    /// P(λ)v.
    fn apply(&self, lam: C64, v: Vec<C64>) -> PyResult<Vec<C64>> {
        if v.len() != self.op.dim() {
            return Err(PyValueError::new_err(format!("expected {} entries, got {}", self.op.dim(), v.len())));
        }
        Ok(self.op.apply_at(lam, &Array1::from(v)).to_vec())
    }

    /// Dense P(λ) as a list of rows.
    fn matrix(&self, lam: C64) -> Vec<Vec<C64>> {
        self.op.evaluate_at(lam).rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// ‖P(z)⁻¹‖ in the weighted norms.
    fn resolvent_norm(&self, z: C64) -> PyResult<f64> {
        spectra::resolvent_norm(&self.op, z).map_err(runtime_err)
    }
}

fn assemble(geom: &KerrAds, n_radial: usize, n_angular: usize, robin_beta: Option<f64>) -> PyResult<DiscreteOperator> {
    let grid = operator::build_grid(geom, n_radial, n_angular).map_err(value_err)?;
    operator::assemble(geom, &grid, &boundary(robin_beta), geom.params.k).map_err(value_err)
}

/// Quasinormal frequencies inside `region = (re_min, re_max, im_min, im_max)`.
///
/// With `fine_n_radial` each one is re-polished on the finer grid and `converged` checks
/// that it did not move.
#[pyfunction]
#[pyo3(signature = (black_hole, n_radial, n_angular, region, fine_n_radial = None, robin_beta = None))]
fn solve_qnf<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    n_radial: usize,
    n_angular: usize,
    region: (f64, f64, f64, f64),
    fine_n_radial: Option<usize>,
    robin_beta: Option<f64>,
) -> PyResult<Bound<'py, PyList>> {
    let geom = black_hole.geom;
    let (re_min, re_max, im_min, im_max) = region;
    let region = SearchRegion { re_min, re_max, im_min, im_max };
    let spectrum = py
        .detach(|| -> PyResult<_> {
            let op = assemble(&geom, n_radial, n_angular, robin_beta)?;
            let fine = fine_n_radial.map(|n| assemble(&geom, n, n_angular, robin_beta)).transpose()?;
            spectra::solve_qnf(&op, &region, fine.as_ref()).map_err(runtime_err)
        })?;
    let out = PyList::empty(py);
    for e in &spectrum.entries {
        let d = PyDict::new(py);
        d.set_item("lambda", e.lambda)?;
        d.set_item("residual", e.residual)?;
        d.set_item("converged", e.converged)?;
        d.set_item("lambda_fine", e.lambda_fine)?;
        d.set_item("ell_hint", e.ell_hint)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Trapped quasimodes for ℓ in [ell_min, ell_max] with log-residual and frequency fits.
#[pyfunction]
#[pyo3(signature = (black_hole, ell_min, ell_max, n_radial = None, n_angular = None, n_radial_full = None, r1 = None))]
#[allow(clippy::too_many_arguments)]
fn residual_sequence<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    ell_min: usize,
    ell_max: usize,
    n_radial: Option<usize>,
    n_angular: Option<usize>,
    n_radial_full: Option<usize>,
    r1: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let d = QuasimodeConfig::default();
    let cfg = QuasimodeConfig {
        n_radial: n_radial.unwrap_or(d.n_radial),
        n_angular: n_angular.unwrap_or(d.n_angular),
        n_radial_full: n_radial_full.unwrap_or(d.n_radial_full),
        r1,
        transition_width: None,
    };
    let geom = black_hole.geom;
    let seq = py
        .detach(|| quasimodes::residual_sequence(&geom, ell_min..=ell_max, &BoundaryCondition::Dirichlet, &cfg))
        .map_err(runtime_err)?;
    to_py(py, &seq)
}

/// ‖P(λ)⁻¹‖·|λ|·Im λ at upper-half-plane samples, maximized over the axial modes `k_values`.
#[pyfunction]
#[pyo3(signature = (black_hole, n_radial, n_angular, samples, k_values = vec![0], strip = energy::DEFAULT_STRIP))]
fn upper_bound_probe<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    n_radial: usize,
    n_angular: usize,
    samples: Vec<C64>,
    k_values: Vec<i32>,
    strip: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let geom = black_hole.geom;
    let table = py.detach(|| -> PyResult<_> {
        let ops = k_values
            .iter()
            .map(|&k| assemble(&KerrAds { params: geom.params.with_k(k), ..geom }, n_radial, n_angular, None))
            .collect::<PyResult<Vec<_>>>()?;
        energy::upper_bound_probe(&ops, &samples, strip).map_err(runtime_err)
    })?;
    let rows = PyList::empty(py);
    for r in &table.rows {
        let d = PyDict::new(py);
        d.set_item("lambda", r.lambda)?;
        d.set_item("resolvent_norm", r.resolvent_norm)?;
        d.set_item("product", r.product)?;
        rows.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("rows", rows)?;
    out.set_item("skipped", table.skipped)?;
    out.set_item("spread", table.spread)?;
    Ok(out)
}

/// Terms of the energy identity for the manufactured mode at n and 2n radial nodes.
#[pyfunction]
#[pyo3(signature = (black_hole, n_radial, n_angular, lam, horizon_generator = true))]
fn energy_identity<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    n_radial: usize,
    n_angular: usize,
    lam: C64,
    horizon_generator: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let field = if horizon_generator { KillingField::K } else { KillingField::T };
    let geom = black_hole.geom;
    let pair = py
        .detach(|| energy::identity_refinement(&geom, n_radial, n_angular, lam, &BoundaryCondition::Dirichlet, field))
        .map_err(runtime_err)?;
    to_py(py, &[pair.0, pair.1])
}

/// Decay of the twisted potential toward the conformal boundary.
#[pyfunction]
fn twisting_potential<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    n_radial: usize,
    n_angular: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let geom = &black_hole.geom;
    let grid = operator::build_grid(geom, n_radial, n_angular).map_err(value_err)?;
    let tw = energy::twisting_potential(geom, &grid, geom.params.nu).map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("twist_exponent", tw.twist_exponent)?;
    out.set_item("decay_power", tw.decay_power)?;
    out.set_item("max_abs_shifted", tw.max_abs_shifted)?;
    Ok(out)
}

/// Follow `n_seeds` random characteristic seeds near the horizon both ways in time.
#[pyfunction]
#[pyo3(signature = (black_hole, n_seeds, z_range = (1.0, 2.0), t_max = 1e3, seed = 0))]
fn horizon_dichotomy<'py>(
    py: Python<'py>,
    black_hole: &PyBlackHole,
    n_seeds: usize,
    z_range: (f64, f64),
    t_max: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let geom = black_hole.geom;
    let outcomes = py.detach(|| {
        let seeds = symbol_flow::sigma_plus_seeds(&geom, n_seeds, geom.delta, z_range, seed);
        seeds
            .par_iter()
            .map(|s| symbol_flow::horizon_dichotomy(&geom, s, geom.delta, t_max).map(|o| (*s, o)))
            .collect::<Result<Vec<_>, _>>()
    });
    let outcomes = outcomes.map_err(runtime_err)?;
    let rows: Vec<_> = outcomes
        .iter()
        .map(|(s, o)| serde_json::json!({ "seed": s, "outcome": o, "holds": o.holds() }))
        .collect();
    to_py(py, &rows)
}

/// Radial window of the horizon flow, as (r_min, r_max).
#[pyfunction]
fn flow_window(black_hole: &PyBlackHole) -> (f64, f64) {
    let w = FlowWindow::horizon(&black_hole.geom, black_hole.geom.delta);
    (w.r_min, w.r_max)
}

/// Run the batch pipeline on a JSON config string; returns the manifest.
#[pyfunction]
#[pyo3(signature = (config_json, output_dir = None, workers = None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config_json: &str,
    output_dir: Option<std::path::PathBuf>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig::from_json_str(config_json).map_err(value_err)?;
    let output_dir = Some(core::cli::resolve_output_dir(&cfg, output_dir));
    let manifest = py.detach(|| core::cli::run(&cfg, &RunOptions { output_dir, workers })).map_err(runtime_err)?;
    to_py(py, &manifest)
}

#[pymodule]
fn adsqnm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlackHole>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(solve_qnf, m)?)?;
    m.add_function(wrap_pyfunction!(residual_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(upper_bound_probe, m)?)?;
    m.add_function(wrap_pyfunction!(energy_identity, m)?)?;
    m.add_function(wrap_pyfunction!(twisting_potential, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_dichotomy, m)?)?;
    m.add_function(wrap_pyfunction!(flow_window, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
