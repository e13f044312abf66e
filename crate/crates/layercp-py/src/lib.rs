//! Python bindings for the `layercp` crate.

use pyo3::exceptions::{PyValueError, PyRuntimeError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use layercp::{asymptotics, cli, greens, modes, shift};
use layercp::{Polarization, QuadratureConfig, Stack, Transition};

fn value_error(e: layercp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn make_stack(n_l: f64, n_s: f64, l: f64) -> PyResult<Stack> {
    Stack::new(n_l, n_s, l).map_err(value_error)
}

fn make_cfg(rel_tol: Option<f64>) -> PyResult<QuadratureConfig> {
    let cfg = match rel_tol {
        Some(t) => QuadratureConfig::default().with_rel_tol(t),
        None => QuadratureConfig::default(),
    };
    cfg.validate().map_err(value_error)
}

fn polarization(name: &str) -> PyResult<Polarization> {
    match name.to_ascii_lowercase().as_str() {
        "te" => Ok(Polarization::Te),
        "tm" => Ok(Polarization::Tm),
        _ => Err(PyValueError::new_err(format!("polarization must be 'te' or 'tm', got '{name}'"))),
    }
}

/// Ground-state kernel (I_par, I_perp) at reduced distance a = |E| Z and thickness b = |E| L.
#[pyfunction]
#[pyo3(signature = (n_l, n_s, a, b, rel_tol = None))]
fn ground_kernel(n_l: f64, n_s: f64, a: f64, b: f64, rel_tol: Option<f64>) -> PyResult<(f64, f64)> {
    let k = shift::ground_kernel(&make_stack(n_l, n_s, 0.0)?, a, b, &make_cfg(rel_tol)?).map_err(value_error)?;
    Ok((k.i_par, k.i_perp))
}

/// Resonant kernel (K_par, K_perp) of a downward transition.
#[pyfunction]
#[pyo3(signature = (n_l, n_s, a, b, rel_tol = None))]
fn resonant_kernel(n_l: f64, n_s: f64, a: f64, b: f64, rel_tol: Option<f64>) -> PyResult<(f64, f64)> {
    let k = shift::resonant_kernel(&make_stack(n_l, n_s, 0.0)?, a, b, &make_cfg(rel_tol)?).map_err(value_error)?;
    Ok((k.k_par, k.k_perp))
}

/// Total shift and its error estimate; transitions are (E, mu_par^2, mu_perp^2).
#[pyfunction]
#[pyo3(signature = (n_l, n_s, l, z, transitions, rel_tol = None))]
fn total_shift(
    n_l: f64,
    n_s: f64,
    l: f64,
    z: f64,
    transitions: Vec<(f64, f64, f64)>,
    rel_tol: Option<f64>,
) -> PyResult<(f64, f64)> {
    let ts = transitions
        .into_iter()
        .map(|(e, p, q)| Transition::new(e, p, q))
        .collect::<layercp::Result<Vec<_>>>()
        .map_err(value_error)?;
    let point = layercp::EvaluationPoint::new(z).map_err(value_error)?;
    let r = shift::total_shift(&make_stack(n_l, n_s, l)?, &ts, &point, &make_cfg(rel_tol)?).map_err(value_error)?;
    Ok((r.value, r.abs_error))
}

#[pyfunction]
fn electrostatic_shift(n_l: f64, n_s: f64, l: f64, z: f64, mu_par_sq: f64, mu_perp_sq: f64) -> PyResult<f64> {
    let cfg = QuadratureConfig::default();
    greens::electrostatic_shift(&make_stack(n_l, n_s, l)?, mu_par_sq, mu_perp_sq, z, &cfg)
        .map(|r| r.value)
        .map_err(value_error)
}

/// Vacuum decay constants of the trapped modes, fundamental first.
#[pyfunction]
fn trapped_modes(n_l: f64, n_s: f64, l: f64, k_par: f64, pol: &str) -> PyResult<Vec<f64>> {
    let cfg = QuadratureConfig::default();
    let roots = modes::find_trapped_modes(&make_stack(n_l, n_s, l)?, k_par, polarization(pol)?, &cfg).map_err(value_error)?;
    Ok(roots.iter().map(|r| r.q).collect())
}

#[pyfunction]
fn halfspace_retarded_coefficients(n: f64) -> PyResult<(f64, f64)> {
    asymptotics::halfspace_retarded_coefficients(n).map_err(value_error)
}

#[pyfunction]
fn retarded_layer_coefficients(n_l: f64, n_s: f64) -> PyResult<(f64, f64)> {
    asymptotics::retarded_layer_coefficients(&make_stack(n_l, n_s, 0.0)?).map_err(value_error)
}

/// Thicknesses (kappa, L_res, L_antires) for the transition energy |E|.
#[pyfunction]
fn resonance_condition(n_l: f64, n_s: f64, e_abs: f64, kappa_max: u32) -> PyResult<Vec<(u32, f64, f64)>> {
    let pts = asymptotics::resonance_condition(&make_stack(n_l, n_s, 0.0)?, e_abs, kappa_max).map_err(value_error)?;
    Ok(pts.iter().map(|p| (p.kappa, p.l_res, p.l_antires)).collect())
}

/// Runs a parameter scan described by the same keys as a `--config` file and
/// returns the JSON table.
#[pyfunction]
fn scan(spec: &Bound<'_, PyDict>) -> PyResult<String> {
    let mut pairs = Vec::with_capacity(spec.len());
    for (k, v) in spec.iter() {
        pairs.push((k.str()?.to_string(), v.str()?.to_string()));
    }
    let spec = cli::ScanSpec::from_pairs(&pairs).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let table = cli::run_scan(&spec).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(cli::to_json(&table))
}

#[pymodule]
#[pyo3(name = "layercp")]
fn layercp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ground_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(resonant_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(total_shift, m)?)?;
    m.add_function(wrap_pyfunction!(electrostatic_shift, m)?)?;
    m.add_function(wrap_pyfunction!(trapped_modes, m)?)?;
    m.add_function(wrap_pyfunction!(halfspace_retarded_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(retarded_layer_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(resonance_condition, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
