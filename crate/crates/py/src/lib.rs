//! Python bindings: quadratic and biquadratic forms with their counting,
//! exponential-sum, local-density, and archimedean-density operations.
//! Integers cross the boundary as arbitrary-precision Python ints; indices
//! are 0-based as in the core library.

use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bqc_core::archimedean::{
    joint_singular_integral, sigma_infinity, WeightFunction, DEFAULT_DELTAS,
};
use bqc_core::counting::{
    count_a, count_nu, count_nx, count_quadric_box, count_quadric_weighted, count_tilde,
    peyre_constant_from_parts, thin_family_count, zeta, CountValue, NuRoute, QuadricMethod,
};
use bqc_core::expsums::{envelope_bound, expsum, kappa, sigma_n_sum};
use bqc_core::forms::{form_to_json, parse_form, BiquadraticForm, Form, QuadraticForm};
use bqc_core::padic::{joint_singular_series, singular_series_routes};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn weight_from_name(name: &str, kappa: f64, eta: f64) -> PyResult<WeightFunction> {
    match name {
        "w0" => WeightFunction::box_w0(kappa).map_err(err),
        "w1" => WeightFunction::annular_w1(eta).map_err(err),
        "w2" => WeightFunction::annular_w2(eta).map_err(err),
        other => Err(PyValueError::new_err(format!(
            "unknown weight {other:?}, expected \"w0\", \"w1\", or \"w2\""
        ))),
    }
}

fn count_to_int(v: CountValue) -> PyResult<u128> {
    match v {
        CountValue::Integer(c) => Ok(c),
        CountValue::Real(c) => Err(PyValueError::new_err(format!(
            "expected an integer count, got the weighted value {c}"
        ))),
    }
}

/// A nonsingular integral quadratic form given by its Gram matrix.
#[pyclass(name = "QuadraticForm", frozen)]
struct PyQuadraticForm {
    inner: QuadraticForm,
}

#[pymethods]
impl PyQuadraticForm {
    #[new]
    fn new(gram: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(Self { inner: QuadraticForm::from_rows(&gram).map_err(err)? })
    }

    /// Diagonal form with the given entries.
    #[staticmethod]
    fn diagonal(entries: Vec<i64>) -> PyResult<Self> {
        Ok(Self { inner: QuadraticForm::diagonal(&entries).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn gram(&self) -> PyResult<Vec<Vec<i64>>> {
        self.inner.gram_i64().map_err(err)
    }

    fn discriminant(&self) -> BigInt {
        self.inner.discriminant()
    }

    fn height(&self) -> BigInt {
        self.inner.height()
    }

    fn is_nonsingular(&self) -> bool {
        self.inner.is_nonsingular()
    }

    /// F(x) as an exact integer.
    fn evaluate(&self, x: Vec<i64>) -> PyResult<BigInt> {
        self.inner.evaluate_i64(&x).map_err(err)
    }

    /// Gram matrix of the dual form (the adjugate of the Gram matrix).
    fn dual_gram(&self) -> PyResult<Vec<Vec<BigInt>>> {
        Ok(self.inner.dual_form().map_err(err)?.mstar().to_vec())
    }

    /// F*(c) for a frequency vector c.
    fn dual_evaluate(&self, c: Vec<i64>) -> PyResult<BigInt> {
        self.inner.dual_form().map_err(err)?.evaluate_i64(&c).map_err(err)
    }

    /// Number of integer zeros with sup-norm at most b.
    #[pyo3(signature = (b, method = "slice", budget = 10_000_000_000))]
    fn count_box(&self, b: u64, method: &str, budget: u64) -> PyResult<u128> {
        let m = match method {
            "slice" => QuadricMethod::Slice,
            "naive" => QuadricMethod::Naive,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown method {other:?}, expected \"slice\" or \"naive\""
                )))
            }
        };
        count_to_int(count_quadric_box(&self.inner, b, m, budget).map_err(err)?.count)
    }

    /// Weighted zero count sum over w(x / b).
    #[pyo3(signature = (b, weight = "w0", kappa = 1.0, eta = 0.1, budget = 10_000_000_000))]
    fn count_weighted(&self, b: u64, weight: &str, kappa: f64, eta: f64, budget: u64) -> PyResult<f64> {
        let w = weight_from_name(weight, kappa, eta)?;
        Ok(count_quadric_weighted(&self.inner, &w, b, budget).map_err(err)?.count.as_f64())
    }

    /// Complete exponential sum S_q(c) as (re, im).
    #[pyo3(signature = (q, c, budget = 10_000_000_000))]
    fn expsum(&self, q: u64, c: Vec<i64>, budget: u64) -> PyResult<(f64, f64)> {
        let v = expsum(&self.inner, q, &c, budget).map_err(err)?;
        Ok((v.re, v.im))
    }

    /// Dyadic block sum of |S_q(c)| over x/2 < q <= x.
    #[pyo3(signature = (x, c, budget = 10_000_000_000))]
    fn sigma_n(&self, x: f64, c: Vec<i64>, budget: u64) -> PyResult<f64> {
        Ok(sigma_n_sum(&self.inner, x, &c, budget).map_err(err)?.total)
    }

    /// Size envelope 4 q^{n/2 + 1.25} gcd(q^n, disc)^{1/2}.
    fn envelope_bound(&self, q: u64) -> f64 {
        envelope_bound(&self.inner, q)
    }

    /// Singular series by both routes:
    /// ((euler_value, euler_tail), (q_series_value, q_series_tail)).
    #[pyo3(signature = (q_max = 40, p_max = 40, budget = 10_000_000_000))]
    fn singular_series(
        &self,
        q_max: u64,
        p_max: u64,
        budget: u64,
    ) -> PyResult<((f64, f64), (f64, f64))> {
        let (e, q) = singular_series_routes(&self.inner, q_max, p_max, budget).map_err(err)?;
        Ok(((e.value, e.tail_bound), (q.value, q.tail_bound)))
    }

    /// Monte Carlo singular integral as (value, stderr).
    #[pyo3(signature = (deltas = None, samples = 400_000, seed = 0, weight = "w0", kappa = 1.0, eta = 0.1))]
    fn sigma_infinity(
        &self,
        deltas: Option<Vec<f64>>,
        samples: u64,
        seed: u64,
        weight: &str,
        kappa: f64,
        eta: f64,
    ) -> PyResult<(f64, f64)> {
        let w = weight_from_name(weight, kappa, eta)?;
        let schedule = deltas.unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
        let est = sigma_infinity(&self.inner, &w, &schedule, samples, seed).map_err(err)?;
        Ok((est.value, est.mc_stderr))
    }

    fn to_json(&self) -> PyResult<String> {
        form_to_json(&Form::Quadratic(self.inner.clone())).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("QuadraticForm(n={})", self.inner.n())
    }
}

/// A bihomogeneous (2,2) form sum of c x_i x_j y_k y_l with 0-based,
/// ordered index quadruples.
#[pyclass(name = "BiquadraticForm", frozen)]
struct PyBiquadraticForm {
    inner: BiquadraticForm,
}

#[pymethods]
impl PyBiquadraticForm {
    #[new]
    fn new(n: usize, coeffs: Vec<(usize, usize, usize, usize, i64)>) -> PyResult<Self> {
        Ok(Self { inner: BiquadraticForm::from_i64(n, &coeffs).map_err(err)? })
    }

    /// The model form sum x_i^2 y_i^2 with the last sign flipped to
    /// last_sign.
    #[staticmethod]
    #[pyo3(signature = (n, last_sign = 1))]
    fn diagonal_squares(n: usize, last_sign: i64) -> Self {
        Self { inner: BiquadraticForm::diagonal_squares(n, last_sign) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn coeffs(&self) -> PyResult<Vec<(usize, usize, usize, usize, i64)>> {
        self.inner.coeffs_i64().map_err(err)
    }

    /// F(x; y) as an exact integer.
    fn evaluate(&self, x: Vec<i64>, y: Vec<i64>) -> PyResult<BigInt> {
        self.inner.evaluate_i64(&x, &y).map_err(err)
    }

    /// Zeros y of the slice form F(x; .) with sup-norm at most y_bound.
    #[pyo3(signature = (x, y_bound, budget = 10_000_000_000))]
    fn count_slice(&self, x: Vec<i64>, y_bound: u64, budget: u64) -> PyResult<u128> {
        count_to_int(count_nx(&self.inner, &x, y_bound, budget).map_err(err)?.count)
    }

    /// Pair count over a box, restricted to nonsingular slices on the x
    /// side ("tilde") or both sides ("pairs").
    #[pyo3(signature = (x_bound, y_bound, restrict = "pairs", budget = 10_000_000_000))]
    fn count_pairs(&self, x_bound: u64, y_bound: u64, restrict: &str, budget: u64) -> PyResult<u128> {
        let rec = match restrict {
            "pairs" => count_a(&self.inner, x_bound, y_bound, budget).map_err(err)?,
            "tilde" => count_tilde(&self.inner, x_bound, y_bound, budget).map_err(err)?,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown restriction {other:?}, expected \"pairs\" or \"tilde\""
                )))
            }
        };
        count_to_int(rec.count)
    }

    /// Height-bounded count off the degenerate locus, modulo signs.
    #[pyo3(signature = (bound, route = "direct", budget = 10_000_000_000))]
    fn count_nu(&self, bound: f64, route: &str, budget: u64) -> PyResult<u128> {
        let r = match route {
            "direct" => NuRoute::Direct,
            "mobius" => NuRoute::Mobius,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown route {other:?}, expected \"direct\" or \"mobius\""
                )))
            }
        };
        count_to_int(count_nu(&self.inner, bound, r, budget).map_err(err)?.count)
    }

    /// Height-bounded count of the thin family x_1 = 0, y = e_1.
    #[pyo3(signature = (bound, budget = 10_000_000_000))]
    fn thin_count(&self, bound: f64, budget: u64) -> PyResult<u128> {
        count_to_int(thin_family_count(&self.inner, bound, budget).map_err(err)?.count)
    }

    /// Joint singular series as (value, tail_bound).
    #[pyo3(signature = (q_max = 24, budget = 10_000_000_000))]
    fn joint_series(&self, q_max: u64, budget: u64) -> PyResult<(f64, f64)> {
        let est = joint_singular_series(&self.inner, q_max, budget).map_err(err)?;
        Ok((est.value, est.tail_bound))
    }

    /// Monte Carlo joint singular integral as (value, stderr).
    #[pyo3(signature = (deltas = None, samples = 400_000, seed = 0))]
    fn joint_integral(&self, deltas: Option<Vec<f64>>, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
        let schedule = deltas.unwrap_or_else(|| vec![0.1, 0.05]);
        let est = joint_singular_integral(&self.inner, &schedule, samples, seed).map_err(err)?;
        Ok((est.value, est.mc_stderr))
    }

    fn to_json(&self) -> PyResult<String> {
        form_to_json(&Form::Biquadratic(self.inner.clone())).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("BiquadraticForm(n={})", self.inner.n())
    }
}

/// Parses a form document (the CLI's JSON schema, 1-based indices) into
/// the matching form class.
#[pyfunction]
fn load_form(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    match parse_form(text).map_err(err)? {
        Form::Quadratic(inner) => Ok(PyQuadraticForm { inner }.into_pyobject(py)?.into_any().unbind()),
        Form::Biquadratic(inner) => {
            Ok(PyBiquadraticForm { inner }.into_pyobject(py)?.into_any().unbind())
        }
    }
}

/// Riemann zeta at an integer s >= 2.
#[pyfunction(name = "zeta")]
fn zeta_py(s: u32) -> PyResult<f64> {
    zeta(s).map_err(err)
}

/// Parity indicator: 0 for even n, 1 for odd n.
#[pyfunction(name = "kappa")]
fn kappa_py(n: usize) -> u32 {
    kappa(n)
}

/// Leading constant series * integral / (4 zeta(n-2)^2).
#[pyfunction]
fn peyre_constant(series: f64, integral: f64, n: usize) -> PyResult<f64> {
    peyre_constant_from_parts(series, integral, n).map_err(err)
}

#[pymodule]
fn bqc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadraticForm>()?;
    m.add_class::<PyBiquadraticForm>()?;
    m.add_function(wrap_pyfunction!(load_form, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_py, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_py, m)?)?;
    m.add_function(wrap_pyfunction!(peyre_constant, m)?)?;
    m.add("DEFAULT_DELTAS", DEFAULT_DELTAS.to_vec())?;
    Ok(())
}
