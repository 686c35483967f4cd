//! Python bindings for the annealing laboratory.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qa2sat_core::analysis::{self, DistributionFamily, FamilyKind};
use qa2sat_core::baseline::{simulated_anneal, SaParams};
use qa2sat_core::dynamics::{self, EvolutionParams, XMethod};
use qa2sat_core::experiment::{self as exp, ExperimentConfig, Profile, StageSummary};
use qa2sat_core::hamiltonian::{self as ham, AnnealSpec, Variant};
use qa2sat_core::ising;
use qa2sat_core::problems::{self, GeneratorCriteria};
use qa2sat_core::spectra;

create_exception!(qa2sat, Qa2satError, PyException, "Error raised by the qa2sat core.");

fn err(e: qa2sat_core::Error) -> PyErr {
    Qa2satError::new_err(format!("{}: {}", e.kind(), e))
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for qa2sat_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn variant(name: &str) -> PyResult<Variant> {
    name.parse().py_err()
}

/// A 2-SAT instance.
#[pyclass(frozen, module = "qa2sat")]
struct SatInstance {
    inner: problems::SatInstance,
}

#[pymethods]
impl SatInstance {
    /// Parses DIMACS CNF text with two literals per clause.
    #[staticmethod]
    fn from_dimacs(text: &str) -> PyResult<Self> {
        Ok(SatInstance { inner: problems::parse_dimacs(text).py_err()? })
    }

    /// Draws an instance with a unique satisfying assignment.
    #[staticmethod]
    #[pyo3(signature = (n_vars, seed, min_first_excited_degeneracy = 1))]
    fn generate(n_vars: usize, seed: u64, min_first_excited_degeneracy: u64) -> PyResult<Self> {
        let mut c = GeneratorCriteria::new(n_vars, seed);
        c.min_first_excited_degeneracy = min_first_excited_degeneracy;
        Ok(SatInstance { inner: problems::generate_hard_instance(&c).py_err()? })
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn n_clauses(&self) -> usize {
        self.inner.n_clauses()
    }

    /// Clauses as pairs of signed 1-based literals.
    fn clauses(&self) -> Vec<(i64, i64)> {
        self.inner
            .clauses()
            .iter()
            .map(|c| (c.0[0].to_dimacs(), c.0[1].to_dimacs()))
            .collect()
    }

    fn to_dimacs(&self) -> String {
        problems::to_dimacs(&self.inner)
    }

    fn violated_clauses(&self, assignment: Vec<bool>) -> PyResult<u32> {
        self.inner.violated_clauses(&assignment).py_err()
    }

    /// Satisfying assignments as bit masks (bit i is x_{i+1}).
    fn brute_force_solve(&self) -> PyResult<Vec<u64>> {
        self.inner.brute_force_solve().py_err()
    }

    fn classical_spectrum<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.classical_spectrum().py_err()?;
        let d = PyDict::new(py);
        d.set_item("ground_energy", s.ground_energy)?;
        d.set_item("ground_degeneracy", s.ground_degeneracy)?;
        d.set_item("first_excited_energy", s.first_excited_energy)?;
        d.set_item("first_excited_degeneracy", s.first_excited_degeneracy)?;
        d.set_item("histogram", s.histogram.into_iter().collect::<Vec<_>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("SatInstance(n_vars={}, n_clauses={})", self.inner.n_vars(), self.inner.n_clauses())
    }
}

/// Classical Ising form `E = -Σ h_i s_i - Σ J_ij s_i s_j + offset`.
#[pyclass(frozen, module = "qa2sat")]
struct IsingProblem {
    inner: ising::IsingProblem,
}

#[pymethods]
impl IsingProblem {
    #[new]
    #[pyo3(signature = (fields, couplings, offset = 0.0))]
    fn new(fields: Vec<f64>, couplings: Vec<(usize, usize, f64)>, offset: f64) -> PyResult<Self> {
        let cs = couplings
            .into_iter()
            .map(|(i, j, strength)| ising::Coupling { i, j, strength });
        Ok(IsingProblem { inner: ising::IsingProblem::new(fields, cs, offset).py_err()? })
    }

    #[staticmethod]
    fn from_sat(instance: &SatInstance) -> Self {
        IsingProblem { inner: ising::IsingProblem::from_sat(&instance.inner) }
    }

    #[getter]
    fn n_spins(&self) -> usize {
        self.inner.n_spins()
    }

    #[getter]
    fn fields(&self) -> Vec<f64> {
        self.inner.fields().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<(usize, usize, f64)> {
        self.inner.couplings().iter().map(|c| (c.i, c.j, c.strength)).collect()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset()
    }

    fn classical_energy(&self, spins: Vec<i8>) -> PyResult<f64> {
        self.inner.classical_energy(&spins).py_err()
    }

    /// Energies of all basis states, indexed by assignment mask.
    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal()
    }
}

/// Time-dependent annealing Hamiltonian of one problem and variant.
#[pyclass(frozen, module = "qa2sat")]
struct Annealer {
    spec: AnnealSpec,
    ham: ham::Hamiltonian,
}

#[pymethods]
impl Annealer {
    #[new]
    #[pyo3(signature = (problem, variant = "standard"))]
    fn new(problem: &IsingProblem, variant: &str) -> PyResult<Self> {
        let spec = AnnealSpec::new(problem.inner.clone(), self::variant(variant)?);
        let ham = ham::Hamiltonian::build(&spec).py_err()?;
        Ok(Annealer { spec, ham })
    }

    #[getter]
    fn n_spins(&self) -> usize {
        self.spec.n_spins()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.spec.variant.as_str()
    }

    /// Lowest `k` eigenvalues of `H(s)`.
    #[pyo3(signature = (s, k = 2))]
    fn lowest_eigenvalues(&self, py: Python<'_>, s: f64, k: usize) -> PyResult<Vec<f64>> {
        py.detach(|| spectra::lowest_eigenpairs_of(&self.ham, s, k).map(|r| r.values))
            .py_err()
    }

    /// Gap scan; returns the grid samples and the refined minimum.
    #[pyo3(signature = (grid_points = spectra::DEFAULT_GRID_POINTS, refine_tol = spectra::DEFAULT_REFINE_TOL))]
    fn gap_profile<'py>(&self, py: Python<'py>, grid_points: usize, refine_tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let p = py
            .detach(|| spectra::gap_profile_of(&self.ham, grid_points, refine_tol))
            .py_err()?;
        let d = PyDict::new(py);
        d.set_item("s", p.samples.iter().map(|x| x.s).collect::<Vec<_>>())?;
        d.set_item("e0", p.samples.iter().map(|x| x.e0).collect::<Vec<_>>())?;
        d.set_item("e1", p.samples.iter().map(|x| x.e1).collect::<Vec<_>>())?;
        d.set_item("gap", p.samples.iter().map(|x| x.gap).collect::<Vec<_>>())?;
        d.set_item("delta_min", p.min_gap)?;
        d.set_item("s_star", p.s_star)?;
        d.set_item("xi", p.xi)?;
        Ok(d)
    }

    /// `(Δ_min, s*)` with the default grid.
    fn min_gap(&self, py: Python<'_>) -> PyResult<(f64, f64)> {
        py.detach(|| spectra::min_gap(&self.spec)).py_err()
    }

    /// Anneals from the uniform superposition; returns the probability of
    /// each basis state in `targets` (all states when omitted).
    #[pyo3(signature = (t_anneal, n_steps = None, x_method = "hadamard", targets = None))]
    fn evolve(
        &self,
        py: Python<'_>,
        t_anneal: f64,
        n_steps: Option<usize>,
        x_method: &str,
        targets: Option<Vec<usize>>,
    ) -> PyResult<Vec<f64>> {
        let method = match x_method {
            "hadamard" => XMethod::Hadamard,
            "rotations" => XMethod::Rotations,
            other => return Err(err(qa2sat_core::Error::InvalidParameter(format!("unknown x_method {other:?}")))),
        };
        let mut params = EvolutionParams::new(t_anneal);
        params.x_method = method;
        if let Some(n) = n_steps {
            params = params.with_steps(n);
        }
        let evo = py
            .detach(|| dynamics::evolve_from(&self.ham, &params, ham::StateVector::uniform(self.ham.n_spins())))
            .py_err()?;
        let targets = targets.unwrap_or_else(|| (0..evo.state.dim()).collect());
        targets
            .into_iter()
            .map(|i| {
                if i < evo.state.dim() {
                    Ok(dynamics::success_probability(&evo.state, i))
                } else {
                    Err(err(qa2sat_core::Error::InvalidParameter(format!("basis index {i} out of range"))))
                }
            })
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (gamma = 1.0, c = std::f64::consts::PI, t_max = 200.0 / std::f64::consts::PI, n_steps = None))]
fn landau_zener_demo(py: Python<'_>, gamma: f64, c: f64, t_max: f64, n_steps: Option<usize>) -> PyResult<f64> {
    py.detach(|| dynamics::landau_zener_demo(gamma, c, t_max, n_steps)).py_err()
}

/// Returns `(R, mapped, saturated)`.
#[pyfunction]
fn map_success(p: Vec<f64>) -> PyResult<(f64, Vec<f64>, bool)> {
    let m = analysis::map_success(&p).py_err()?;
    Ok((m.r, m.mapped, m.saturated))
}

#[pyfunction]
#[pyo3(signature = (p, t_anneal, p_target = 0.99))]
fn tts(p: f64, t_anneal: f64, p_target: f64) -> PyResult<f64> {
    analysis::tts(p, t_anneal, p_target).py_err()
}

#[pyfunction]
fn deciles(values: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(analysis::deciles(&values).py_err()?.to_vec())
}

/// Fits `value = D·e^{rN}`; returns `(D, r, residual)`.
#[pyfunction]
#[pyo3(signature = (sizes, values, window_min = None))]
fn fit_exponential(sizes: Vec<f64>, values: Vec<f64>, window_min: Option<f64>) -> PyResult<(f64, f64, f64)> {
    if sizes.len() != values.len() {
        return Err(err(qa2sat_core::Error::LengthMismatch { expected: sizes.len(), got: values.len() }));
    }
    let pts: Vec<(f64, f64)> = sizes.into_iter().zip(values).collect();
    let f = analysis::fit_exponential(&pts, window_min).py_err()?;
    Ok((f.d, f.r, f.residual))
}

fn family_kind(name: &str) -> PyResult<FamilyKind> {
    Ok(match name {
        "frechet" => FamilyKind::Frechet,
        "weibull" => FamilyKind::Weibull,
        "translated_weibull" => FamilyKind::TranslatedWeibull,
        "transformed_translated_weibull" => FamilyKind::TransformedTranslatedWeibull,
        other => return Err(err(qa2sat_core::Error::InvalidParameter(format!("unknown family {other:?}")))),
    })
}

fn family_dict<'py>(py: Python<'py>, f: &DistributionFamily) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("family", f.kind.as_str())?;
    d.set_item("k", f.k)?;
    d.set_item("b", f.b)?;
    d.set_item("mu", f.mu)?;
    d.set_item("a", f.a)?;
    Ok(d)
}

/// Maximum-likelihood fit; returns the parameters as a dict.
#[pyfunction]
fn fit_distribution<'py>(py: Python<'py>, samples: Vec<f64>, family: &str) -> PyResult<Bound<'py, PyDict>> {
    let f = analysis::fit_distribution(&samples, family_kind(family)?).py_err()?;
    family_dict(py, &f)
}

/// Density of a family at the given points.
#[pyfunction]
#[pyo3(signature = (family, k, b, x, mu = 0.0))]
fn distribution_pdf(family: &str, k: f64, b: f64, x: Vec<f64>, mu: f64) -> PyResult<Vec<f64>> {
    let f = DistributionFamily::new(family_kind(family)?, k, b, mu).py_err()?;
    Ok(x.into_iter().map(|v| f.pdf(v)).collect())
}

#[pyfunction]
fn lz_predict(delta_min: f64, gamma: f64) -> f64 {
    analysis::lz_predict(delta_min, gamma)
}

/// Simulated annealing; returns best spins, best energy and success fraction.
#[pyfunction]
#[pyo3(signature = (problem, sweeps = 1000, restarts = 100, seed = 0, t_initial = 8.0, t_final = 0.05))]
fn sa<'py>(
    py: Python<'py>,
    problem: &IsingProblem,
    sweeps: usize,
    restarts: usize,
    seed: u64,
    t_initial: f64,
    t_final: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = SaParams { sweeps, t_initial, t_final, restarts, seed };
    let r = py.detach(|| simulated_anneal(&problem.inner, &params)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("best_spins", r.best_spins)?;
    d.set_item("best_energy", r.best_energy)?;
    d.set_item("success", r.success)?;
    d.set_item("success_fraction", r.success_fraction)?;
    d.set_item("runtime", r.runtime)?;
    Ok(d)
}

/// Default experiment config of a profile (`"test"` or `"full"`) as JSON.
#[pyfunction]
#[pyo3(signature = (profile = "test"))]
fn default_config(profile: &str) -> PyResult<String> {
    let p: Profile = profile.parse().py_err()?;
    Ok(ExperimentConfig::profile(p).to_json())
}

fn summary<'py>(py: Python<'py>, s: StageSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("stage", s.stage)?;
    d.set_item("total", s.total)?;
    d.set_item("skipped", s.skipped)?;
    d.set_item("computed", s.computed)?;
    d.set_item("path", s.path.to_string_lossy().into_owned())?;
    Ok(d)
}

/// Pipeline bound to a config and an output directory.
#[pyclass(module = "qa2sat")]
struct Experiment {
    inner: exp::Experiment,
}

#[pymethods]
impl Experiment {
    #[new]
    #[pyo3(signature = (config_json, output_dir = None, workers = None))]
    fn new(config_json: &str, output_dir: Option<PathBuf>, workers: Option<usize>) -> PyResult<Self> {
        let mut cfg = ExperimentConfig::from_json(config_json).py_err()?;
        if let Some(dir) = output_dir {
            cfg.output_dir = dir;
        }
        let mut inner = exp::Experiment::new(cfg).py_err()?;
        if let Some(w) = workers {
            inner = inner.with_workers(w);
        }
        Ok(Experiment { inner })
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.hash().to_string()
    }

    fn generate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = py.detach(|| self.inner.generate()).py_err()?;
        summary(py, s)
    }

    fn gap<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = py.detach(|| self.inner.gap()).py_err()?;
        summary(py, s)
    }

    fn anneal<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = py.detach(|| self.inner.anneal()).py_err()?;
        summary(py, s)
    }

    fn sa<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = py.detach(|| self.inner.sa()).py_err()?;
        summary(py, s)
    }

    /// Writes the report tables; returns their names and the warnings.
    fn report(&self, py: Python<'_>) -> PyResult<(Vec<String>, Vec<String>)> {
        let r = py.detach(|| self.inner.report()).py_err()?;
        Ok((r.tables.into_iter().map(|t| t.name).collect(), r.warnings))
    }
}

#[pymodule]
fn qa2sat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Qa2satError", m.py().get_type::<Qa2satError>())?;
    m.add("VARIANTS", Variant::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>())?;
    m.add_class::<SatInstance>()?;
    m.add_class::<IsingProblem>()?;
    m.add_class::<Annealer>()?;
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(landau_zener_demo, m)?)?;
    m.add_function(wrap_pyfunction!(map_success, m)?)?;
    m.add_function(wrap_pyfunction!(tts, m)?)?;
    m.add_function(wrap_pyfunction!(deciles, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(fit_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(distribution_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(lz_predict, m)?)?;
    m.add_function(wrap_pyfunction!(sa, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
