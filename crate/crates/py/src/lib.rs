//! Python bindings: closure, Green matrices, decay exponents, Besov norms and the solver.

use std::collections::HashMap;

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use twofluid::closure::{self, PressureLaw, Viscosities};
use twofluid::decay::{self, DecayConfig};
use twofluid::grid::{Grid, SpectralField};
use twofluid::linear_green::{self, Generator, RadialProfile};
use twofluid::lp_besov::{build_filter_bank, BesovSpec};
use twofluid::solver::{self, InitKind, InitParams, Physics, RunConfig, RunStatus};
use twofluid::{Error, ErrorClass};

fn to_py(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Input => PyValueError::new_err(e.to_string()),
        ErrorClass::Convergence => PyArithmeticError::new_err(e.to_string()),
        ErrorClass::Verification | ErrorClass::Runtime => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Barotropic law `P(ρ) = A ρ^γ`.
#[pyclass(name = "PressureLaw", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyPressureLaw {
    inner: PressureLaw,
}

#[pymethods]
impl PyPressureLaw {
    #[new]
    #[pyo3(signature = (gamma = 2.0, amplitude = 1.0))]
    fn new(gamma: f64, amplitude: f64) -> PyResult<Self> {
        Ok(PyPressureLaw { inner: PressureLaw::new(gamma, amplitude).map_err(to_py)? })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    fn pressure(&self, rho: f64) -> f64 {
        self.inner.pressure(rho)
    }

    fn sound_speed2(&self, rho: f64) -> f64 {
        self.inner.sound_speed2(rho)
    }

    fn __repr__(&self) -> String {
        format!("PressureLaw(gamma={}, amplitude={})", self.inner.gamma, self.inner.amplitude)
    }
}

/// Pointwise closure solution.
#[pyclass(name = "ClosureState", frozen, get_all)]
struct PyClosureState {
    r_plus: f64,
    r_minus: f64,
    rho_plus: f64,
    rho_minus: f64,
    alpha_plus: f64,
    alpha_minus: f64,
    s2_plus: f64,
    s2_minus: f64,
    pressure: f64,
    c2: f64,
}

#[pymethods]
impl PyClosureState {
    fn __repr__(&self) -> String {
        format!(
            "ClosureState(rho_plus={}, rho_minus={}, alpha_plus={}, pressure={}, c2={})",
            self.rho_plus, self.rho_minus, self.alpha_plus, self.pressure, self.c2
        )
    }
}

#[pyfunction]
#[pyo3(signature = (r_plus, r_minus, law_plus, law_minus, tol = closure::DEFAULT_TOL))]
fn closure_state(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PyPressureLaw,
    law_minus: &PyPressureLaw,
    tol: f64,
) -> PyResult<PyClosureState> {
    let s = closure::derived_state(r_plus, r_minus, &law_plus.inner, &law_minus.inner, tol).map_err(to_py)?;
    Ok(PyClosureState {
        r_plus: s.r_plus,
        r_minus: s.r_minus,
        rho_plus: s.rho_plus,
        rho_minus: s.rho_minus,
        alpha_plus: s.alpha_plus,
        alpha_minus: s.alpha_minus,
        s2_plus: s.s2_plus,
        s2_minus: s.s2_minus,
        pressure: s.pressure,
        c2: s.c2,
    })
}

/// Linearized coefficients at the `(1, 1)` state, keyed by name.
#[pyfunction]
#[pyo3(signature = (law_plus, law_minus, mu_plus = 1.0, mu_minus = 1.0, lambda_plus = 0.0, lambda_minus = 0.0))]
fn equilibrium_coefficients(
    law_plus: &PyPressureLaw,
    law_minus: &PyPressureLaw,
    mu_plus: f64,
    mu_minus: f64,
    lambda_plus: f64,
    lambda_minus: f64,
) -> PyResult<HashMap<String, f64>> {
    let visc = Viscosities { mu_plus, mu_minus, lambda_plus, lambda_minus };
    let c = closure::equilibrium_coefficients(&law_plus.inner, &law_minus.inner, &visc).map_err(to_py)?;
    Ok([
        ("beta1", c.beta1),
        ("beta2", c.beta2),
        ("beta3", c.beta3),
        ("beta4", c.beta4),
        ("nu1_plus", c.nu1_plus),
        ("nu1_minus", c.nu1_minus),
        ("nu2_plus", c.nu2_plus),
        ("nu2_minus", c.nu2_minus),
        ("nu_plus", c.nu_plus),
        ("nu_minus", c.nu_minus),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect())
}

/// Green matrix of the scalar mode system and its branch name.
#[pyfunction]
fn green_2x2(nu: f64, k: f64, t: f64) -> PyResult<(Vec<Vec<f64>>, String)> {
    let g = linear_green::green_2x2(nu, k, t).map_err(to_py)?;
    Ok((g.entries.iter().map(|r| r.to_vec()).collect(), g.branch.name().to_string()))
}

/// `(s0, alpha, s_list)` for an admissible `(p, N)`.
#[pyfunction]
#[pyo3(signature = (p, dim, epsilon = decay::DEFAULT_EPSILON))]
fn decay_exponents(p: f64, dim: usize, epsilon: f64) -> PyResult<(f64, f64, Vec<f64>)> {
    let c = DecayConfig::new(p, dim, epsilon).map_err(to_py)?;
    Ok((c.s0, c.alpha, c.s_list))
}

/// Predicted and fitted low-frequency decay slopes of the linear two-fluid semigroup
/// with symmetric default coefficients.
#[pyfunction]
#[pyo3(signature = (s, p = 2.0, dim = 2, t_min = 1.0, t_max = 1e4, per_decade = 10))]
fn linear_decay_rate(s: f64, p: f64, dim: usize, t_min: f64, t_max: f64, per_decade: usize) -> PyResult<(f64, f64)> {
    let dc = DecayConfig::new(p, dim, decay::DEFAULT_EPSILON).map_err(to_py)?;
    if !(t_min > 0.0 && t_max > 10.0 * t_min && per_decade > 0) {
        return Err(PyValueError::new_err("need 0 < t_min, t_max >= 10 t_min and per_decade > 0"));
    }
    let law = PressureLaw::new(2.0, 1.0).map_err(to_py)?;
    let visc = Viscosities { mu_plus: 1.0, mu_minus: 1.0, lambda_plus: 0.0, lambda_minus: 0.0 };
    let co = closure::equilibrium_coefficients(&law, &law, &visc).map_err(to_py)?;
    let n = ((t_max / t_min).log10() * per_decade as f64).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| t_min * (t_max / t_min).powf(i as f64 / n as f64)).collect();
    let blocks =
        linear_green::radial_block_norms(&Generator::TwoFluid(co), dim, &RadialProfile::borderline(dim, p), &times)
            .map_err(to_py)?;
    let values: Vec<f64> = (0..times.len()).map(|i| blocks.low_besov(&blocks.full(i), s, 0)).collect();
    let fit = decay::fit_decay(&times, &values, (t_max / 10.0, t_max)).map_err(to_py)?;
    Ok((-(s + dc.s0) / 2.0, fit.slope))
}

/// Homogeneous Besov norm of a real periodic field sampled on an `n^N` grid of side `length`.
#[pyfunction]
#[pyo3(signature = (samples, dim, length, s, p, r, j0 = 0))]
fn besov_norm(samples: Vec<f64>, dim: usize, length: f64, s: f64, p: f64, r: f64, j0: i32) -> PyResult<f64> {
    let n = (samples.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if n.checked_pow(dim as u32) != Some(samples.len()) {
        return Err(PyValueError::new_err(format!("{} samples do not form an n^{dim} grid", samples.len())));
    }
    let grid = Grid::new(dim, n, length).map_err(to_py)?;
    let bank = build_filter_bank(&grid, j0).map_err(to_py)?;
    let f = SpectralField::from_physical(&grid, vec![samples]).map_err(to_py)?;
    bank.besov_norm(&f, &BesovSpec::new(s, p, r).map_err(to_py)?).map_err(to_py)
}

/// Recorded output of a solver run.
#[pyclass(name = "Trajectory", frozen, get_all)]
struct PyTrajectory {
    times: Vec<f64>,
    l2: Vec<f64>,
    mass_plus: Vec<f64>,
    mass_minus: Vec<f64>,
    steps: usize,
    rejections: usize,
    completed: bool,
    message: Option<String>,
}

/// Runs the pseudo-spectral solver on the torus.
#[pyfunction]
#[pyo3(signature = (
    points = 64, length = std::f64::consts::TAU, dt = 0.01, t_end = 1.0, output_every = 10,
    init = "gaussian-bump", amplitude = 0.01, width = 1.0, seed = 0, nonlinear = true, dim = 2,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    points: usize,
    length: f64,
    dt: f64,
    t_end: f64,
    output_every: usize,
    init: &str,
    amplitude: f64,
    width: f64,
    seed: u64,
    nonlinear: bool,
    dim: usize,
) -> PyResult<PyTrajectory> {
    let kind: InitKind = init.parse().map_err(to_py)?;
    let cfg = RunConfig {
        dim,
        points,
        length,
        allow_3d: true,
        physics: Physics::default(),
        init: InitParams { kind, amplitude, width, ..Default::default() },
        dt,
        t_end,
        output_every,
        nonlinear,
        seed,
        ..Default::default()
    };
    let tr = py.detach(|| solver::run(&cfg)).map_err(to_py)?;
    let (completed, message) = match &tr.status {
        RunStatus::Completed => (true, None),
        RunStatus::Failed { message, .. } => (false, Some(message.clone())),
    };
    Ok(PyTrajectory {
        l2: tr.series.l2.clone().unwrap_or_default(),
        times: tr.series.times.clone(),
        mass_plus: tr.mass.iter().map(|m| m.0).collect(),
        mass_minus: tr.mass.iter().map(|m| m.1).collect(),
        steps: tr.steps,
        rejections: tr.rejections,
        completed,
        message,
    })
}

#[pymodule]
fn twofluid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPressureLaw>()?;
    m.add_class::<PyClosureState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(closure_state, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(green_2x2, m)?)?;
    m.add_function(wrap_pyfunction!(decay_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(linear_decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(besov_norm, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
