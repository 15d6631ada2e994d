//! Python bindings. Matrices cross the boundary as row-major nested lists of
//! complex numbers; JSON methods speak the same scene documents as the CLI,
//! so files move freely between the two.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ppovm::extremality::{certify_process_extremal, Verdict};
use ppovm::io::{
    parse_scene, process_povm_scene, scene_process_povm, scene_to_string, scene_triple,
    triple_scene,
};
use ppovm::linalg::{ComplexMatrix, Tolerance};
use ppovm::process::{
    minimal_representation, realize, tester_probabilities, ProcessPovm, RepresentationTriple,
    TripleInput,
};
use ppovm::quantum::{Channel, Povm};
use ppovm::random::rng_from_seed;

type Rows = Vec<Vec<Complex64>>;

fn err(e: ppovm::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tolerance(eps: Option<f64>) -> PyResult<Tolerance> {
    match eps {
        Some(e) => Tolerance::new(e).map_err(err),
        None => Ok(Tolerance::default()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("rows have unequal lengths"));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn from_matrix(m: &ComplexMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_matrices(mats: &[Rows]) -> PyResult<Vec<ComplexMatrix>> {
    mats.iter().map(to_matrix).collect()
}

#[pyclass(name = "Povm", from_py_object)]
#[derive(Clone)]
struct PyPovm {
    inner: Povm,
}

#[pymethods]
impl PyPovm {
    #[new]
    #[pyo3(signature = (effects, eps=None))]
    fn new(effects: Vec<Rows>, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let inner = Povm::new(to_matrices(&effects)?, &tol).map_err(err)?;
        Ok(PyPovm { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.space_dim()
    }

    fn effects(&self) -> Vec<Rows> {
        self.inner.effects().iter().map(from_matrix).collect()
    }

    #[pyo3(signature = (eps=None))]
    fn is_pvm(&self, eps: Option<f64>) -> PyResult<bool> {
        Ok(self.inner.is_pvm(&tolerance(eps)?))
    }

    fn __repr__(&self) -> String {
        format!("Povm(dim={}, n={})", self.inner.space_dim(), self.inner.n())
    }
}

#[pyclass(name = "ProcessPovm", from_py_object)]
#[derive(Clone)]
struct PyProcessPovm {
    inner: ProcessPovm,
}

#[pymethods]
impl PyProcessPovm {
    #[new]
    #[pyo3(signature = (dk, dh, effects, eps=None))]
    fn new(dk: usize, dh: usize, effects: Vec<Rows>, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let inner = ProcessPovm::new(dk, dh, to_matrices(&effects)?, &tol).map_err(err)?;
        Ok(PyProcessPovm { inner })
    }

    #[getter]
    fn dk(&self) -> usize {
        self.inner.dk()
    }

    #[getter]
    fn dh(&self) -> usize {
        self.inner.dh()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn effects(&self) -> Vec<Rows> {
        self.inner.effects().iter().map(from_matrix).collect()
    }

    /// The state `sigma` with `sum_i F_i = I (x) sigma`.
    fn sigma(&self) -> Rows {
        from_matrix(self.inner.sigma().mat())
    }

    #[pyo3(signature = (eps=None))]
    fn rank(&self, eps: Option<f64>) -> PyResult<usize> {
        self.inner.rank(&tolerance(eps)?).map_err(err)
    }

    /// Outcome distribution on the channel given by its Kraus operators.
    #[pyo3(signature = (kraus, eps=None))]
    fn probabilities(&self, kraus: Vec<Rows>, eps: Option<f64>) -> PyResult<Vec<f64>> {
        let tol = tolerance(eps)?;
        let phi = Channel::new(to_matrices(&kraus)?, &tol).map_err(err)?;
        tester_probabilities(&self.inner, &phi, &tol).map_err(err)
    }

    /// Minimal-ancilla representation triple.
    #[pyo3(signature = (eps=None))]
    fn minimize(&self, eps: Option<f64>) -> PyResult<PyTriple> {
        let tol = tolerance(eps)?;
        let inner = minimal_representation(&self.inner, &tol).map_err(err)?;
        Ok(PyTriple { inner })
    }

    /// Extremality certificate as a dict; a present witness carries two
    /// testers mixing back to this one.
    #[pyo3(signature = (eps=None))]
    fn certify<'py>(&self, py: Python<'py>, eps: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let tol = tolerance(eps)?;
        let cert = certify_process_extremal(&self.inner, &tol).map_err(err)?;
        let out = PyDict::new(py);
        let verdict = match cert.verdict {
            Verdict::Extremal => "extremal",
            Verdict::NotExtremal => "not_extremal",
            Verdict::Unknown => "unknown",
        };
        out.set_item("verdict", verdict)?;
        out.set_item("purity_dim", cert.purity_dim)?;
        match cert.witness {
            Some(w) => {
                let pair = PyDict::new(py);
                pair.set_item("lam", w.lambda)?;
                pair.set_item("f1", PyProcessPovm { inner: w.f1 }.into_pyobject(py)?)?;
                pair.set_item("f2", PyProcessPovm { inner: w.f2 }.into_pyobject(py)?)?;
                out.set_item("witness", pair)?;
            }
            None => out.set_item("witness", py.None())?,
        }
        Ok(out)
    }

    /// Scene document, interchangeable with the CLI's files.
    fn to_json(&self) -> PyResult<String> {
        scene_to_string(&process_povm_scene(&self.inner)).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, eps=None))]
    fn from_json(text: &str, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let scene = parse_scene(text).map_err(err)?;
        let inner = scene_process_povm(&scene, &tol).map_err(err)?;
        Ok(PyProcessPovm { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "ProcessPovm(dk={}, dh={}, n={})",
            self.inner.dk(),
            self.inner.dh(),
            self.inner.n()
        )
    }
}

#[pyclass(name = "RepresentationTriple", from_py_object)]
#[derive(Clone)]
struct PyTriple {
    inner: RepresentationTriple,
}

#[pymethods]
impl PyTriple {
    /// Pure-input triple from the map `T: H -> H0` and a measurement on the
    /// composite of the output space with the ancilla.
    #[new]
    #[pyo3(signature = (dk, t_map, povm, eps=None))]
    fn new(dk: usize, t_map: Rows, povm: PyPovm, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let inner = RepresentationTriple::new_pure(dk, to_matrix(&t_map)?, povm.inner, &tol)
            .map_err(err)?;
        Ok(PyTriple { inner })
    }

    #[getter]
    fn dk(&self) -> usize {
        self.inner.dk()
    }

    #[getter]
    fn dh(&self) -> usize {
        self.inner.dh()
    }

    #[getter]
    fn dh0(&self) -> usize {
        self.inner.dh0()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }

    /// Input map of a pure triple, or the density matrix of a mixed one.
    fn input(&self) -> Rows {
        match self.inner.input() {
            TripleInput::Pure(t) => from_matrix(t),
            TripleInput::Mixed(rho) => from_matrix(rho.mat()),
        }
    }

    fn povm(&self) -> PyPovm {
        PyPovm {
            inner: self.inner.povm().clone(),
        }
    }

    #[pyo3(signature = (eps=None))]
    fn realize(&self, eps: Option<f64>) -> PyResult<PyProcessPovm> {
        let tol = tolerance(eps)?;
        let inner = realize(&self.inner, &tol).map_err(err)?;
        Ok(PyProcessPovm { inner })
    }

    #[pyo3(signature = (u, eps=None))]
    fn rotate_ancilla(&self, u: Rows, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let inner = self
            .inner
            .rotate_ancilla(&to_matrix(&u)?, &tol)
            .map_err(err)?;
        Ok(PyTriple { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        scene_to_string(&triple_scene(&self.inner)).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, eps=None))]
    fn from_json(text: &str, eps: Option<f64>) -> PyResult<Self> {
        let tol = tolerance(eps)?;
        let scene = parse_scene(text).map_err(err)?;
        let inner = scene_triple(&scene, &tol).map_err(err)?;
        Ok(PyTriple { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "RepresentationTriple(dk={}, dh={}, dh0={}, n={}, pure={})",
            self.inner.dk(),
            self.inner.dh(),
            self.inner.dh0(),
            self.inner.n(),
            self.inner.is_pure()
        )
    }
}

/// Minimal orthogonal dilation: dict with the isometry, the projective
/// measurement on the dilated space, and the block layout.
#[pyfunction]
#[pyo3(signature = (povm, eps=None))]
fn naimark<'py>(
    py: Python<'py>,
    povm: &PyPovm,
    eps: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let tol = tolerance(eps)?;
    let dil = ppovm::naimark::minimal_naimark(&povm.inner, &tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("dilated_dim", dil.dilated_dim)?;
    out.set_item("block_dims", dil.block_dims.clone())?;
    out.set_item("isometry", from_matrix(&dil.isometry))?;
    out.set_item(
        "projections",
        PyPovm {
            inner: dil.projections,
        }
        .into_pyobject(py)?,
    )?;
    Ok(out)
}

/// Orthonormal basis of the joint commutant of the given matrices.
#[pyfunction]
#[pyo3(signature = (mats, eps=None))]
fn commutant(mats: Vec<Rows>, eps: Option<f64>) -> PyResult<Vec<Rows>> {
    let tol = tolerance(eps)?;
    let basis = ppovm::naimark::commutant(&to_matrices(&mats)?, &tol).map_err(err)?;
    Ok(basis.iter().map(from_matrix).collect())
}

/// Whether `X^dag M_i X <= M_i` holds for every effect.
#[pyfunction]
#[pyo3(signature = (povm, x, eps=None))]
fn lm_membership(povm: &PyPovm, x: Rows, eps: Option<f64>) -> PyResult<bool> {
    let tol = tolerance(eps)?;
    ppovm::naimark::lm_membership(&povm.inner, &to_matrix(&x)?, &tol).map_err(err)
}

/// Normalized compression `mu^-1 (X T)^dag-style` tester for a face element.
#[pyfunction]
#[pyo3(signature = (t_map, povm, x, eps=None))]
fn face_sample(t_map: Rows, povm: &PyPovm, x: Rows, eps: Option<f64>) -> PyResult<PyProcessPovm> {
    let tol = tolerance(eps)?;
    let inner =
        ppovm::naimark::face_sample(&to_matrix(&t_map)?, &povm.inner, &to_matrix(&x)?, &tol)
            .map_err(err)?;
    Ok(PyProcessPovm { inner })
}

#[pyfunction]
#[pyo3(signature = (dim, n, seed=0, eps=None))]
fn random_povm(dim: usize, n: usize, seed: u64, eps: Option<f64>) -> PyResult<PyPovm> {
    let tol = tolerance(eps)?;
    let mut rng = rng_from_seed(seed);
    let inner = ppovm::random::random_povm(&mut rng, dim, n, &tol).map_err(err)?;
    Ok(PyPovm { inner })
}

#[pyfunction]
#[pyo3(signature = (dk, dh, dh0, n, seed=0, eps=None))]
fn random_tester(
    dk: usize,
    dh: usize,
    dh0: usize,
    n: usize,
    seed: u64,
    eps: Option<f64>,
) -> PyResult<PyProcessPovm> {
    let tol = tolerance(eps)?;
    let mut rng = rng_from_seed(seed);
    let inner = ppovm::random::random_tester(&mut rng, dk, dh, dh0, n, &tol).map_err(err)?;
    Ok(PyProcessPovm { inner })
}

#[pymodule]
fn ppovm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPovm>()?;
    m.add_class::<PyProcessPovm>()?;
    m.add_class::<PyTriple>()?;
    m.add_function(wrap_pyfunction!(naimark, m)?)?;
    m.add_function(wrap_pyfunction!(commutant, m)?)?;
    m.add_function(wrap_pyfunction!(lm_membership, m)?)?;
    m.add_function(wrap_pyfunction!(face_sample, m)?)?;
    m.add_function(wrap_pyfunction!(random_povm, m)?)?;
    m.add_function(wrap_pyfunction!(random_tester, m)?)?;
    Ok(())
}
