//! Python bindings for the core library: modular-group geometry, the
//! spinor immersion pipeline, the hyperbolic spectral problem, the
//! Eisenstein/scattering layer and the automorphic wave evolution.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wlp_core::dirac::{exact_spinors, ExactFamily};
use wlp_core::immersion::{curvatures, integrate_immersion, PathSpec, PathStyle};
use wlp_core::moebius::reduce_to_fundamental_domain;
use wlp_core::spectral::{assemble, lowest_eigenpairs};
use wlp_core::wave::{dpm_orthogonality, make_cusp_data, CuspProfile, Direction};
use wlp_core::{FundamentalDomainSpec, Grid, UpperHalfPoint};

fn err(e: wlp_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gamma function at a complex argument.
#[pyfunction]
fn gamma(s: Complex64) -> PyResult<Complex64> {
    Ok(wlp_core::specfun::gamma(s).map_err(err)?.value)
}

/// Riemann zeta at a complex argument (functional equation for Re s < 1/2).
#[pyfunction]
fn zeta(s: Complex64) -> PyResult<Complex64> {
    Ok(wlp_core::specfun::zeta(s).map_err(err)?.value)
}

/// Modified Bessel K of complex order nu at real x > 0.
#[pyfunction]
fn bessel_k(nu: Complex64, x: f64) -> PyResult<Complex64> {
    Ok(wlp_core::specfun::bessel_k(nu, x).map_err(err)?.value)
}

/// Scattering matrix phi(s) = sqrt(pi) Gamma(s-1/2) zeta(2s-1) /
/// (Gamma(s) zeta(2s)); unimodular on the critical line.
#[pyfunction]
fn scattering_phi(s: Complex64) -> PyResult<Complex64> {
    wlp_core::eisenstein::scattering_phi(s).map_err(err)
}

/// Eisenstein series E(z, s) by the Fourier expansion after reduction of
/// z = x + iy into the standard fundamental domain.
#[pyfunction]
#[pyo3(signature = (x, y, s, n_four = 32))]
fn eisenstein(x: f64, y: f64, s: Complex64, n_four: usize) -> PyResult<Complex64> {
    let z = UpperHalfPoint::new(x, y).map_err(err)?;
    let (w, _) = reduce_to_fundamental_domain(&z).map_err(err)?;
    let p = wlp_core::eisenstein::EisensteinParams::new(s, 40, n_four).map_err(err)?;
    Ok(wlp_core::eisenstein::eisenstein_fourier(&w, &p)
        .map_err(err)?
        .value)
}

/// Reduce z = x + iy into the standard modular fundamental domain.
/// Returns ((x', y'), (a, b, c, d)) with (az+b)/(cz+d) = x' + iy'.
#[pyfunction]
fn reduce(x: f64, y: f64) -> PyResult<((f64, f64), (f64, f64, f64, f64))> {
    let z = UpperHalfPoint::new(x, y).map_err(err)?;
    let (w, g) = reduce_to_fundamental_domain(&z).map_err(err)?;
    Ok(((w.x(), w.y()), (g.a, g.b, g.c, g.d)))
}

/// A sampled immersed surface with its conformal curvature data.
#[pyclass]
struct Surface {
    #[pyo3(get)]
    nx: usize,
    #[pyo3(get)]
    ny: usize,
    #[pyo3(get)]
    x1: Vec<f64>,
    #[pyo3(get)]
    x2: Vec<f64>,
    #[pyo3(get)]
    x3: Vec<f64>,
    #[pyo3(get)]
    metric: Vec<f64>,
    #[pyo3(get)]
    gauss: Vec<f64>,
    #[pyo3(get)]
    mean: Vec<f64>,
}

fn family_from_name(
    kind: &str,
    u0: f64,
    lambda: Complex64,
    coeff: Complex64,
    power: u32,
) -> PyResult<ExactFamily> {
    match kind {
        "const-u" => Ok(ExactFamily::ConstUExponential {
            u0,
            lambda,
            amplitude: coeff,
        }),
        "zero-u-holo" => Ok(ExactFamily::ZeroUHolo { coeff, power }),
        "zero-u-antiholo" => Ok(ExactFamily::ZeroUAntiholo { coeff, power }),
        other => Err(PyValueError::new_err(format!(
            "unknown family kind {other:?}; expected \"const-u\", \
             \"zero-u-holo\" or \"zero-u-antiholo\""
        ))),
    }
}

/// Integrate the Weierstrass immersion of an exact spinor family sampled
/// on an n-by-n grid over [0, 1] x [0, 1], returning the surface with the
/// induced metric density D and the curvatures K and H.
#[pyfunction]
#[pyo3(signature = (kind, n = 64, u0 = 1.0, lambda = Complex64::new(1.0, 0.0),
                    coeff = Complex64::new(1.0, 0.0), power = 0))]
fn immerse(
    kind: &str,
    n: usize,
    u0: f64,
    lambda: Complex64,
    coeff: Complex64,
    power: u32,
) -> PyResult<Surface> {
    if n < 4 {
        return Err(PyValueError::new_err(format!("grid size n = {n} < 4")));
    }
    let grid = Grid::new(0.0, 0.0, n, n, 1.0 / (n - 1) as f64).map_err(err)?;
    let family = family_from_name(kind, u0, lambda, coeff, power)?;
    let (sp, u) = exact_spinors(family, grid).map_err(err)?;
    let s = integrate_immersion(&sp, &PathSpec::new((0, 0), PathStyle::XThenY)).map_err(err)?;
    let (d, k, h) = curvatures(&sp, &u).map_err(err)?;
    Ok(Surface {
        nx: n,
        ny: n,
        x1: s.x1.samples,
        x2: s.x2.samples,
        x3: s.x3.samples,
        metric: d.samples,
        gauss: k.samples,
        mean: h.samples,
    })
}

/// Lowest eigenvalues of L = -y^2 Laplacian - 1/4 on the modular
/// fundamental domain truncated at height a, mesh spacing h.
#[pyfunction]
#[pyo3(signature = (a = 3.0, h = 0.1, count = 4))]
fn spectrum(a: f64, h: f64, count: usize) -> PyResult<Vec<f64>> {
    let spec = FundamentalDomainSpec::modular_standard(a).map_err(err)?;
    let op = assemble(&spec, h).map_err(err)?;
    Ok(lowest_eigenpairs(&op, count).map_err(err)?.eigenvalues)
}

/// Energy-form orthogonality residual between an outgoing and an incoming
/// cusp bump supported on log y in [tau0, tau1]; near zero realizes the
/// D- perpendicular D+ scattering condition.
#[pyfunction]
#[pyo3(signature = (tau0 = 0.4, tau1 = 1.0, a = 6.0, h = 0.05))]
fn wave_orthogonality(tau0: f64, tau1: f64, a: f64, h: f64) -> PyResult<f64> {
    let spec = FundamentalDomainSpec::modular_standard(a).map_err(err)?;
    let op = assemble(&spec, h).map_err(err)?;
    let out_p = CuspProfile::bump(tau0, tau1, Direction::Outgoing, 1.0).map_err(err)?;
    let in_p = CuspProfile::bump(tau0, tau1, Direction::Incoming, 1.0).map_err(err)?;
    let out_s = make_cusp_data(&out_p, &op).map_err(err)?;
    let in_s = make_cusp_data(&in_p, &op).map_err(err)?;
    dpm_orthogonality(&op, &out_s, &in_s).map_err(err)
}

#[pymodule]
fn wlp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_phi, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(immerse, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(wave_orthogonality, m)?)?;
    m.add_class::<Surface>()?;
    Ok(())
}
