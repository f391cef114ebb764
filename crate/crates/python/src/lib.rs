//! Python bindings for the main glx types and operations.
//!
//! Build with `cargo build -p glx-py --release`, then rename/copy
//! `libglx_py.so` to `glx_py.so` somewhere on `sys.path` (see
//! `python/smoke_test.py`).

use glx_core::ballot::{self, BarrierQuery, IncrementLaw, QueryKind, TargetLaw, WalkSpec};
use glx_core::extremes;
use glx_core::harmonic;
use glx_core::lattice::{oscillation, Domain, Field, Site};
use glx_core::multiscale::{self, EventParams};
use glx_core::potential::Potential;
use glx_core::rng::CounterRng;
use glx_core::sampler::{self, Algorithm, ChainConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: glx_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Domain", skip_from_py_object)]
#[derive(Clone)]
struct PyDomain {
    inner: Domain,
}

#[pymethods]
impl PyDomain {
    #[getter]
    fn radius(&self) -> i32 {
        self.inner.radius
    }

    #[getter]
    fn center(&self) -> (i32, i32) {
        (self.inner.center.x, self.inner.center.y)
    }

    fn interior_count(&self) -> usize {
        self.inner.interior_count()
    }

    fn boundary_count(&self) -> usize {
        self.inner.boundary_count()
    }

    fn interior_sites(&self) -> Vec<(i32, i32)> {
        self.inner.interior_sites().map(|s| (s.x, s.y)).collect()
    }

    fn subbox(&self, x: (i32, i32), r: i32) -> PyResult<PyDomain> {
        Ok(PyDomain {
            inner: self
                .inner
                .subbox(Site::new(x.0, x.1), r)
                .map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Domain(radius={}, center=({}, {}))",
            self.inner.radius, self.inner.center.x, self.inner.center.y
        )
    }
}

#[pyclass(name = "Field", skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: Field,
}

#[pymethods]
impl PyField {
    #[getter]
    fn domain(&self) -> PyDomain {
        PyDomain {
            inner: self.inner.domain,
        }
    }

    fn get(&self, site: (i32, i32)) -> PyResult<f64> {
        self.inner
            .try_get(Site::new(site.0, site.1))
            .ok_or_else(|| PyValueError::new_err("site outside domain"))
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn interior_values(&self) -> Vec<f64> {
        self.inner.interior_values()
    }

    fn max(&self) -> ((i32, i32), f64) {
        let (s, v) = extremes::field_max(&self.inner);
        ((s.x, s.y), v)
    }

    fn oscillation(&self, sites: Vec<(i32, i32)>) -> PyResult<f64> {
        let sites: Vec<Site> = sites.iter().map(|&(x, y)| Site::new(x, y)).collect();
        oscillation(&self.inner, &sites).map_err(err)
    }
}

#[pyclass(name = "Potential", skip_from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: Potential,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn quadratic() -> PyPotential {
        PyPotential {
            inner: Potential::quadratic(),
        }
    }

    #[staticmethod]
    fn cosine_perturbed(kappa: f64) -> PyResult<PyPotential> {
        Ok(PyPotential {
            inner: Potential::cosine_perturbed(kappa).map_err(err)?,
        })
    }

    #[staticmethod]
    fn user_table(xs: Vec<f64>, vs: Vec<f64>) -> PyResult<PyPotential> {
        Ok(PyPotential {
            inner: Potential::user_table(xs, vs).map_err(err)?,
        })
    }

    fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        self.inner.evaluate(x)
    }

    fn convexity_bounds(&self) -> (f64, f64) {
        self.inner.convexity_bounds()
    }
}

#[pyfunction]
fn make_box(radius: i32, center: (i32, i32)) -> PyResult<PyDomain> {
    Ok(PyDomain {
        inner: Domain::make_box(radius, Site::new(center.0, center.1)).map_err(err)?,
    })
}

#[pyfunction]
fn sample_dgff(domain: &PyDomain, seed: u128, index: u64) -> PyResult<PyField> {
    let bc = Field::zeros(domain.inner);
    let mut rng = CounterRng::root(seed).substream(&[glx_core::rng::stream::DGFF, 0, index]);
    Ok(PyField {
        inner: sampler::sample_dgff_exact(domain.inner, &bc, &mut rng).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (domain, potential, algorithm, samples, seed, burn_in_sweeps=None, thinning_sweeps=1, step_size=None))]
#[allow(clippy::too_many_arguments)]
fn run_chain(
    domain: &PyDomain,
    potential: &PyPotential,
    algorithm: &str,
    samples: usize,
    seed: u128,
    burn_in_sweeps: Option<usize>,
    thinning_sweeps: usize,
    step_size: Option<f64>,
) -> PyResult<Vec<PyField>> {
    let algorithm = match algorithm {
        "heat-bath" => Algorithm::HeatBath,
        "langevin" => Algorithm::Langevin,
        "mala" => Algorithm::Mala,
        "exact-gaussian" => Algorithm::ExactGaussian,
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other}"))),
    };
    let config = ChainConfig {
        algorithm,
        step_size,
        burn_in_sweeps: burn_in_sweeps.unwrap_or(20 * domain.inner.radius as usize),
        thinning_sweeps,
        samples,
        seed,
    };
    let init = Field::zeros(domain.inner);
    let ens = sampler::run_chain(&init, &potential.inner, &config).map_err(err)?;
    Ok(ens
        .snapshots
        .into_iter()
        .map(|f| PyField { inner: f })
        .collect())
}

#[pyfunction]
fn compute_cstar(resolution: i32) -> PyResult<f64> {
    harmonic::compute_cstar(resolution).map_err(err)
}

#[pyfunction]
fn harmonic_average(field: &PyField, x: (i32, i32), r: i32) -> PyResult<f64> {
    harmonic::harmonic_average(&field.inner, Site::new(x.0, x.1), r).map_err(err)
}

#[pyfunction]
fn solve_dirichlet(domain: &PyDomain, boundary_values: Vec<f64>) -> PyResult<PyField> {
    Ok(PyField {
        inner: harmonic::solve_dirichlet(domain.inner, &boundary_values).map_err(err)?,
    })
}

#[pyfunction]
fn centering(n: u32, g_hat: f64) -> PyResult<f64> {
    extremes::centering(n, g_hat).map_err(err)
}

/// Multiscale decomposition; returns a dict with the averages, increments,
/// boundary layers, remainders and event flags.
#[pyfunction]
fn decompose(
    py: Python<'_>,
    field: &PyField,
    x: (i32, i32),
    k0: i32,
    k_inf: i32,
    omega: f64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let dec = multiscale::decompose(
        &field.inner,
        Site::new(x.0, x.1),
        k0,
        k_inf,
        omega,
        &EventParams::default(),
    )
    .map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("x", (dec.x.x, dec.x.y))?;
    d.set_item("k0", dec.k0)?;
    d.set_item("k_inf", dec.k_inf)?;
    d.set_item("s_plus", dec.s_plus.clone())?;
    d.set_item("s_minus", dec.s_minus.clone())?;
    d.set_item("increments", dec.increments.clone())?;
    d.set_item("boundary_layers", dec.boundary_layers.clone())?;
    d.set_item("remainder_fine", dec.remainder_fine)?;
    d.set_item("coarse", dec.coarse)?;
    d.set_item("phi_x", dec.phi_x)?;
    d.set_item("rough_flags", dec.rough_flags.clone())?;
    d.set_item("bdry_flags", dec.bdry_flags.clone())?;
    d.set_item("reconstruction", dec.reconstruct())?;
    Ok(d.unbind())
}

#[pyfunction]
fn simulate_walk(m: usize, sd: f64, seed: u128, trial: u64) -> Vec<f64> {
    let spec = WalkSpec::iid(m, IncrementLaw::Gaussian { mean: 0.0, sd });
    let mut rng = CounterRng::root(seed).substream(&[glx_core::rng::stream::WALK, trial]);
    ballot::simulate_walk(&spec, &mut rng)
}

#[pyfunction]
#[pyo3(signature = (kind, m, sd, ell, trials, seed, offset=0.0, t_offset=0.0))]
#[allow(clippy::too_many_arguments)]
fn barrier_probability(
    kind: &str,
    m: usize,
    sd: f64,
    ell: usize,
    trials: usize,
    seed: u128,
    offset: f64,
    t_offset: f64,
) -> PyResult<(f64, f64)> {
    let kind = match kind {
        "one-sided-up" => QueryKind::OneSidedUp,
        "one-sided-down" => QueryKind::OneSidedDown,
        "corridor" => QueryKind::Corridor,
        other => return Err(PyValueError::new_err(format!("unknown query kind {other}"))),
    };
    let spec = WalkSpec::iid(m, IncrementLaw::Gaussian { mean: 0.0, sd });
    let q = BarrierQuery::new(kind, offset, t_offset, ell).map_err(err)?;
    let est = ballot::barrier_probability(&spec, &q, trials, seed).map_err(err)?;
    Ok((est.estimate, est.stderr))
}

#[pyfunction]
fn skorokhod_embed(target_sd: f64, seed: u128, draw: u64) -> PyResult<(f64, f64, f64)> {
    let mut rng =
        CounterRng::root(seed).substream(&[glx_core::rng::stream::SKOROKHOD, draw]);
    let d = ballot::skorokhod_embed(&TargetLaw::Gaussian { sd: target_sd }, &mut rng)
        .map_err(err)?;
    Ok((d.tau, d.w_tau, d.sup_abs_w))
}

#[pymodule]
fn glx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyPotential>()?;
    m.add_function(wrap_pyfunction!(make_box, m)?)?;
    m.add_function(wrap_pyfunction!(sample_dgff, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(compute_cstar, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_average, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(centering, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_walk, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_probability, m)?)?;
    m.add_function(wrap_pyfunction!(skorokhod_embed, m)?)?;
    Ok(())
}
