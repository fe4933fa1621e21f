//! Python bindings: `import ldgas`.

use ldgas_core as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Polynomial confinement potential with optional hard walls.
#[pyclass(name = "Potential", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Potential(core::ConfinementPotential);

#[pymethods]
impl Potential {
    #[new]
    #[pyo3(signature = (coefficients, lower=None, upper=None))]
    fn new(coefficients: Vec<f64>, lower: Option<f64>, upper: Option<f64>) -> PyResult<Self> {
        let b = |w: Option<f64>| w.map_or(core::Bound::Infinite, core::Bound::Finite);
        let walls = core::Walls::new(b(lower), b(upper)).map_err(err)?;
        core::ConfinementPotential::new(core::Polynomial::new(coefficients), walls)
            .map(Potential)
            .map_err(err)
    }

    #[staticmethod]
    fn hard_box(a: f64, b: f64) -> PyResult<Self> {
        core::ConfinementPotential::hard_box(a, b)
            .map(Potential)
            .map_err(err)
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.0.polynomial().coeffs().to_vec()
    }

    fn tilt(&self, statistic: &Statistic, s: f64) -> PyResult<Self> {
        core::tilt(&self.0, &statistic.0, s)
            .map(Potential)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Potential({} on {})", self.0.polynomial(), self.0.walls())
    }
}

/// Polynomial linear statistic `F = N⁻¹ Σ f(λi)`.
#[pyclass(name = "Statistic", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Statistic(core::LinearStatistic);

#[pymethods]
impl Statistic {
    #[new]
    fn new(coefficients: Vec<f64>) -> PyResult<Self> {
        core::LinearStatistic::new(core::Polynomial::new(coefficients))
            .map(Statistic)
            .map_err(err)
    }

    #[staticmethod]
    fn power(k: usize) -> PyResult<Self> {
        core::LinearStatistic::power(k).map(Statistic).map_err(err)
    }

    fn evaluate(&self, eigenvalues: Vec<f64>) -> f64 {
        self.0.evaluate(&eigenvalues)
    }
}

#[pyclass(name = "EquilibriumMeasure", frozen)]
struct Measure(core::EquilibriumMeasure);

#[pymethods]
impl Measure {
    /// `(a, b)`.
    #[getter]
    fn support(&self) -> (f64, f64) {
        let s = self.0.support();
        (s.a, s.b)
    }

    #[getter]
    fn regime(&self) -> String {
        self.0.regime().to_string()
    }

    #[getter]
    fn metastable(&self) -> bool {
        self.0.is_metastable()
    }

    fn density(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.0.quantile(p)
    }

    fn log_potential(&self, x: f64) -> f64 {
        self.0.log_potential(x)
    }

    fn normalization(&self) -> f64 {
        self.0.normalization()
    }

    fn statistic_value(&self, statistic: &Statistic) -> f64 {
        self.0.statistic_value(&statistic.0)
    }

    fn euler_lagrange_residual(&self, n: usize) -> f64 {
        self.0.euler_lagrange_residual(n)
    }
}

#[pyfunction]
fn solve_one_cut(potential: &Potential) -> PyResult<Measure> {
    core::solve_one_cut(&potential.0).map(Measure).map_err(err)
}

/// `x*(s)` and `J(s)` on a grid, with `Ψ` obtained by inversion.
#[pyclass(name = "DualityCurve", frozen)]
struct Curve {
    curve: core::DualityCurve,
    rate: Option<core::RateFunctionTable>,
}

#[pymethods]
impl Curve {
    #[getter]
    fn s(&self) -> Vec<f64> {
        self.curve.s_grid().to_vec()
    }

    #[getter]
    fn x_star(&self) -> Vec<f64> {
        self.curve.x_values().to_vec()
    }

    #[getter]
    fn j(&self) -> Vec<f64> {
        self.curve.j_values().unwrap_or_default().to_vec()
    }

    #[getter]
    fn regimes(&self) -> Vec<String> {
        self.curve.regimes().iter().map(|r| r.to_string()).collect()
    }

    #[getter]
    fn kinks(&self) -> Vec<(f64, f64)> {
        self.curve.kinks().to_vec()
    }

    /// `(x, s*, Ψ)` columns, or `None` when `x*` is not strictly monotone.
    fn rate_function(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.rate.as_ref().map(|t| {
            (
                t.x_grid().to_vec(),
                t.s_star_values().to_vec(),
                t.psi_values().unwrap_or_default().to_vec(),
            )
        })
    }

    fn legendre_residual(&self) -> Option<f64> {
        core::legendre_check(&self.curve, self.rate.as_ref()?)
    }

    /// `(s_cr, order, jump, bracket)` for each detected transition.
    #[pyo3(signature = (max_order=4))]
    fn transitions(&self, max_order: usize) -> Vec<(f64, usize, f64, (f64, f64))> {
        core::detect_transitions(&self.curve, max_order)
            .into_iter()
            .map(|c| (c.s_cr, c.order, c.jump, c.bracket))
            .collect()
    }

    /// `(boundary_s, boundary_x, steep, note)` per domain end.
    fn steepness(&self) -> Vec<(f64, f64, bool, String)> {
        core::check_steepness(&self.curve)
            .into_iter()
            .map(|r| (r.boundary_s, r.boundary_slope, r.steep, r.note))
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (potential, statistic, s_min, s_max, points=801))]
fn build_curve(
    py: Python<'_>,
    potential: &Potential,
    statistic: &Statistic,
    s_min: f64,
    s_max: f64,
    points: usize,
) -> PyResult<Curve> {
    let (v, f) = (potential.0.clone(), statistic.0.clone());
    py.detach(move || {
        let curve = core::integrate_j(core::build_curve(&v, &f, s_min, s_max, points)?);
        let x0 = curve.x_values()[curve.origin()];
        let rate = core::invert_curve(&curve)
            .and_then(|t| core::integrate_psi(t, x0))
            .ok();
        Ok(Curve { curve, rate })
    })
    .map_err(err)
}

/// `∂_s^m J(0)` for `m = 1..=m_max`.
#[pyfunction]
fn cumulants(potential: &Potential, statistic: &Statistic, m_max: usize) -> PyResult<Vec<f64>> {
    core::cumulants(&potential.0, &statistic.0, m_max)
        .map(|r| r.scaled_values().to_vec())
        .map_err(err)
}

/// `(-β)^{1-m} ∂_s^m J(0)`.
#[pyfunction]
#[pyo3(signature = (potential, statistic, m_max, beta=2.0))]
fn planar_values(
    potential: &Potential,
    statistic: &Statistic,
    m_max: usize,
    beta: f64,
) -> PyResult<Vec<f64>> {
    core::cumulants(&potential.0, &statistic.0, m_max)
        .map(|r| r.planar_values(beta))
        .map_err(err)
}

/// Tilted Metropolis chain; returns a dict of summary statistics.
#[pyfunction]
#[pyo3(signature = (potential, statistic, n, s=0.0, beta=2.0, sweeps=100_000, burn_in=10_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn tilted_mean_check(
    py: Python<'_>,
    potential: &Potential,
    statistic: &Statistic,
    n: usize,
    s: f64,
    beta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> PyResult<std::collections::HashMap<&'static str, f64>> {
    let gas = core::GasParameters::new(n, beta).map_err(err)?;
    let mut c = core::ChainConfig::new(gas, potential.0.clone(), statistic.0.clone()).tilted(s);
    c.n_sweeps = sweeps;
    c.burn_in = burn_in;
    c.seed = seed;
    let r = py
        .detach(move || core::tilted_mean_check(&c))
        .map_err(err)?;
    Ok([
        ("mean", r.empirical_mean),
        ("stderr", r.stderr),
        ("predicted", r.predicted),
        ("z", r.z_score),
        ("var", r.summary.var_f),
        ("var_scaled", r.summary.var_f * gas.speed()),
        ("tau", r.summary.autocorrelation_time),
        ("acceptance_rate", r.summary.acceptance_rate),
    ]
    .into_iter()
    .collect())
}

#[pymodule]
fn ldgas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<Statistic>()?;
    m.add_class::<Measure>()?;
    m.add_class::<Curve>()?;
    m.add_function(wrap_pyfunction!(solve_one_cut, m)?)?;
    m.add_function(wrap_pyfunction!(build_curve, m)?)?;
    m.add_function(wrap_pyfunction!(cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(planar_values, m)?)?;
    m.add_function(wrap_pyfunction!(tilted_mean_check, m)?)?;
    Ok(())
}
