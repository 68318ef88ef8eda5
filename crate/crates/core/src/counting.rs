//! Exact lattice-point counts: box and weighted counts `N(w; B)` on
//! quadrics, slice counts `N_x(Y)`, the restricted pair counts `N(𝒜; X, Y)`
//! and `Ñ(X, Y)`, the unit-quotiented count `N_U(B)` by both a direct scan
//! and the Möbius inversion `(1/4) Σ μ(k₁)μ(k₂) M(R/k₁k₂)`, and the Peyre
//! constant `𝔖·𝔗 / (4 ζ(n-2)²)`.
//!
//! The workhorse is a fiber enumerator that fixes all coordinates but the
//! first and solves `a x₁² + b x₁ + c = 0` exactly per fiber with an integer
//! discriminant square root, so an n-dimensional box costs `(2B+1)^{n-1}`
//! fiber solves instead of `(2B+1)^n` evaluations. Degenerate fibers
//! (`a = 0`) fall back to linear solving or, when the fiber polynomial
//! vanishes identically, to emitting the whole segment.

use std::time::Instant;

use thiserror::Error;

use crate::arith::{gcd, mobius, perfect_sqrt};
use crate::archimedean::{joint_singular_integral, ArchError, IntegralEstimate};
use crate::expsums::ExpSumError;
use crate::forms::{BiquadraticForm, FormError, QuadraticForm};
use crate::padic::{joint_singular_series, DensityEstimate, PadicError};

#[derive(Debug, Error)]
pub enum CountError {
    #[error("work {work} units exceeds budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("{0}")]
    InvalidParams(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    ExpSum(#[from] ExpSumError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

/// An exact integer count, or a real total for weighted counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountValue {
    Integer(u128),
    Real(f64),
}

impl CountValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            CountValue::Integer(v) => *v as f64,
            CountValue::Real(v) => *v,
        }
    }

    pub fn as_integer(&self) -> Option<u128> {
        match self {
            CountValue::Integer(v) => Some(*v),
            CountValue::Real(_) => None,
        }
    }
}

/// One completed count with its parameters and wall time.
#[derive(Debug, Clone)]
pub struct CountRecord {
    pub form_id: String,
    pub method: &'static str,
    pub b: Option<f64>,
    pub x_bound: Option<f64>,
    pub y_bound: Option<f64>,
    pub count: CountValue,
    pub seconds: f64,
}

/// The anticanonical height data: `H(x, y) = (|x| |y|)^{n-2} ≤ B` is
/// equivalent to `|x| |y| ≤ B^{1/(n-2)}`.
#[derive(Debug, Clone, Copy)]
pub struct HeightParams {
    pub n: usize,
    pub bound: f64,
}

impl HeightParams {
    pub fn new(n: usize, bound: f64) -> Result<Self, CountError> {
        if n < 3 {
            return Err(CountError::InvalidParams(format!(
                "height exponent n - 2 must be positive, got n = {n}"
            )));
        }
        if bound < 1.0 {
            return Err(CountError::InvalidParams(format!("height bound must be >= 1, got {bound}")));
        }
        Ok(HeightParams { n, bound })
    }

    pub fn exponent(&self) -> u32 {
        self.n as u32 - 2
    }

    /// `R = B^{1/(n-2)}`, the bound on `|x| |y|`.
    pub fn pair_bound(&self) -> f64 {
        self.bound.powf(1.0 / self.exponent() as f64)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable identifier for a quadratic form: dimension plus a hash of the
/// Gram matrix entries.
pub fn quadric_form_id(f: &QuadraticForm) -> String {
    let mut desc = String::new();
    for row in f.gram() {
        for v in row {
            desc.push_str(&v.to_string());
            desc.push(',');
        }
    }
    format!("q{}-{:08x}", f.n(), fnv1a(desc.as_bytes()) as u32)
}

/// Stable identifier for a biquadratic form: dimension plus a hash of the
/// coefficient list.
pub fn biquadratic_form_id(f: &BiquadraticForm) -> String {
    let mut desc = String::new();
    for c in f.coeffs() {
        desc.push_str(&format!("{},{},{},{},{};", c.i, c.j, c.k, c.l, c.c));
    }
    format!("b{}-{:08x}", f.n(), fnv1a(desc.as_bytes()) as u32)
}

/// Visits every integer zero of `x^T G x = 0` in the box `|x| ≤ bound`,
/// solving for `x[0]` fiber by fiber. The fiber coefficients
/// `b = 2 Σ_{j≥1} G_{0j} x_j` and `c = Σ_{i,j≥1} G_{ij} x_i x_j` are updated
/// by first differences along the innermost coordinate. Work is counted in
/// fibers, `(2 bound + 1)^{n-1}`.
fn for_each_quadric_zero(
    gram: &[Vec<i64>],
    bound: i64,
    budget: u64,
    mut on_zero: impl FnMut(&[i64]),
) -> Result<(), CountError> {
    let n = gram.len();
    assert!(n >= 3, "fiber enumeration needs n >= 3");
    assert!(bound >= 0, "box bound must be nonnegative");
    let width = 2 * bound as u128 + 1;
    let fibers = width.pow(n as u32 - 1);
    if fibers > budget as u128 {
        return Err(CountError::BudgetExceeded { work: fibers, budget });
    }
    let a = gram[0][0];
    let four_a = 4 * a;
    let two_a = 2 * a;
    let g_last = gram[n - 1][n - 1];
    let b_step = 2 * gram[0][n - 1];
    let mut x = vec![-bound; n];
    let mut emit = vec![0i64; n];
    loop {
        // Fresh fiber coefficients for this run of the innermost coordinate.
        let mut b = 0i64;
        for j in 1..n {
            b += 2 * gram[0][j] * x[j];
        }
        let mut c = 0i64;
        for i in 1..n {
            let mut row = 0i64;
            for j in 1..n {
                row += gram[i][j] * x[j];
            }
            c += row * x[i];
        }
        let mut cross = 0i64; // sum_{1 <= j <= n-2} G_{j, n-1} x_j
        for j in 1..n - 1 {
            cross += gram[j][n - 1] * x[j];
        }
        loop {
            if a != 0 {
                let disc = b * b - four_a * c;
                if disc >= 0 {
                    if let Some(s) = perfect_sqrt(disc) {
                        let mut push = |num: i64| {
                            if num % two_a == 0 {
                                let x0 = num / two_a;
                                if x0.abs() <= bound {
                                    emit[0] = x0;
                                    emit[1..n].copy_from_slice(&x[1..n]);
                                    on_zero(&emit);
                                }
                            }
                        };
                        push(-b + s);
                        if s != 0 {
                            push(-b - s);
                        }
                    }
                }
            } else if b != 0 {
                if c % b == 0 {
                    let x0 = -c / b;
                    if x0.abs() <= bound {
                        emit[0] = x0;
                        emit[1..n].copy_from_slice(&x[1..n]);
                        on_zero(&emit);
                    }
                }
            } else if c == 0 {
                emit[1..n].copy_from_slice(&x[1..n]);
                for x0 in -bound..=bound {
                    emit[0] = x0;
                    on_zero(&emit);
                }
            }
            // Step the innermost coordinate, updating b and c in place.
            let xi = x[n - 1];
            if xi == bound {
                break;
            }
            x[n - 1] = xi + 1;
            b += b_step;
            c += g_last * (2 * xi + 1) + 2 * cross;
        }
        // Carry into the outer coordinates.
        let mut k = n - 2;
        loop {
            if k == 0 {
                return Ok(());
            }
            x[n - 1] = -bound;
            if x[k] < bound {
                x[k] += 1;
                break;
            }
            x[k] = -bound;
            k -= 1;
        }
    }
}

/// Which enumeration strategy a quadric count uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricMethod {
    Naive,
    Slice,
}

impl QuadricMethod {
    pub fn name(&self) -> &'static str {
        match self {
            QuadricMethod::Naive => "naive",
            QuadricMethod::Slice => "slice",
        }
    }
}

fn count_box_naive(gram: &[Vec<i64>], bound: i64, budget: u64) -> Result<u128, CountError> {
    let n = gram.len();
    let width = 2 * bound as u128 + 1;
    let work = width.pow(n as u32);
    if work > budget as u128 {
        return Err(CountError::BudgetExceeded { work, budget });
    }
    let mut x = vec![-bound; n];
    let mut count = 0u128;
    loop {
        let mut v = 0i64;
        for i in 0..n {
            let mut row = 0i64;
            for j in 0..n {
                row += gram[i][j] * x[j];
            }
            v += row * x[i];
        }
        count += (v == 0) as u128;
        let mut k = 0;
        loop {
            if k == n {
                return Ok(count);
            }
            if x[k] < bound {
                x[k] += 1;
                break;
            }
            x[k] = -bound;
            k += 1;
        }
    }
}

/// `N(w0(1); B) = #{x ∈ ℤ^n : |x| ≤ B, F(x) = 0}`, by full enumeration or
/// by fiber solving.
pub fn count_quadric_box(
    f: &QuadraticForm,
    b: u64,
    method: QuadricMethod,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let gram = f.gram_i64()?;
    let bound = b as i64;
    let count = match method {
        QuadricMethod::Naive => count_box_naive(&gram, bound, budget)?,
        QuadricMethod::Slice => {
            if f.n() < 3 {
                return Err(CountError::InvalidParams(format!(
                    "slice counting needs n >= 3, got n = {}",
                    f.n()
                )));
            }
            let mut count = 0u128;
            for_each_quadric_zero(&gram, bound, budget, |_| count += 1)?;
            count
        }
    };
    Ok(CountRecord {
        form_id: quadric_form_id(f),
        method: method.name(),
        b: Some(b as f64),
        x_bound: None,
        y_bound: None,
        count: CountValue::Integer(count),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `N(w; B) = Σ_{F(x)=0} w(x/B)`, evaluating the weight exactly at each
/// lattice zero inside the support box.
pub fn count_quadric_weighted(
    f: &QuadraticForm,
    w: &crate::archimedean::WeightFunction,
    b: u64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    if f.n() < 3 {
        return Err(CountError::InvalidParams(format!(
            "slice counting needs n >= 3, got n = {}",
            f.n()
        )));
    }
    let start = Instant::now();
    let gram = f.gram_i64()?;
    // The support box of w in x-space is |x| <= halfwidth * B. Scaling by
    // division keeps |x_i| = B landing exactly on the box boundary u_i = 1.
    let bound = (w.support_halfwidth() * b as f64).floor() as i64;
    let bf = b as f64;
    let mut total = 0.0;
    let mut u = vec![0.0f64; f.n()];
    for_each_quadric_zero(&gram, bound, budget, |x| {
        for (ui, &xi) in u.iter_mut().zip(x) {
            *ui = xi as f64 / bf;
        }
        total += w.evaluate(&u);
    })?;
    Ok(CountRecord {
        form_id: quadric_form_id(f),
        method: "weighted",
        b: Some(b as f64),
        x_bound: None,
        y_bound: None,
        count: CountValue::Real(total),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The doubled Gram matrix `2 G_x` of the x-slice, in i64 arithmetic.
fn doubled_slice_gram(coeffs: &[(usize, usize, usize, usize, i64)], x: &[i64], out: &mut [Vec<i64>]) {
    for row in out.iter_mut() {
        row.fill(0);
    }
    for &(i, j, k, l, c) in coeffs {
        let xp = c * x[i] * x[j];
        if k == l {
            out[k][k] += 2 * xp;
        } else {
            out[k][l] += xp;
            out[l][k] += xp;
        }
    }
}

/// The same for the y-slice, producing `2 G_y` acting on x.
fn doubled_slice_gram_y(coeffs: &[(usize, usize, usize, usize, i64)], y: &[i64], out: &mut [Vec<i64>]) {
    for row in out.iter_mut() {
        row.fill(0);
    }
    for &(i, j, k, l, c) in coeffs {
        let yp = c * y[k] * y[l];
        if i == j {
            out[i][i] += 2 * yp;
        } else {
            out[i][j] += yp;
            out[j][i] += yp;
        }
    }
}

/// Fraction-free determinant of a small integer matrix.
fn det_i128(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let swap = (k + 1..n).find(|&r| m[r][k] != 0);
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn slice_det_x(coeffs: &[(usize, usize, usize, usize, i64)], n: usize, x: &[i64]) -> i128 {
    let mut g = vec![vec![0i64; n]; n];
    doubled_slice_gram(coeffs, x, &mut g);
    det_i128(g.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect())
}

fn slice_det_y(coeffs: &[(usize, usize, usize, usize, i64)], n: usize, y: &[i64]) -> i128 {
    let mut g = vec![vec![0i64; n]; n];
    doubled_slice_gram_y(coeffs, y, &mut g);
    det_i128(g.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect())
}

/// `N_x(Y) = #{y ∈ ℤ^n : |y| ≤ Y, F(x; y) = 0}` via the doubled slice Gram.
pub fn count_nx(
    form: &BiquadraticForm,
    x: &[i64],
    y_bound: u64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let coeffs = form.coeffs_i64()?;
    let mut gram2 = vec![vec![0i64; n]; n];
    doubled_slice_gram(&coeffs, x, &mut gram2);
    let bound = y_bound as i64;
    let (count, method) = if n >= 3 {
        let mut count = 0u128;
        for_each_quadric_zero(&gram2, bound, budget, |_| count += 1)?;
        (count, "slice")
    } else {
        (count_box_naive(&gram2, bound, budget)?, "naive")
    };
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method,
        b: None,
        x_bound: None,
        y_bound: Some(y_bound as f64),
        count: CountValue::Integer(count),
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn sup_norm(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).max().unwrap_or(0)
}

fn visit_box(n: usize, bound: i64, mut visit: impl FnMut(&[i64])) {
    let mut x = vec![-bound; n];
    loop {
        visit(&x);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            if x[k] < bound {
                x[k] += 1;
                break;
            }
            x[k] = -bound;
            k += 1;
        }
    }
}

/// `Ñ(X, Y)`: vectors `|x| ≤ X` with `det F_x ≠ 0`, each weighted by its
/// full slice count `N_x(Y)`.
pub fn count_tilde(
    form: &BiquadraticForm,
    x_bound: u64,
    y_bound: u64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let coeffs = form.coeffs_i64()?;
    let xb = x_bound as i64;
    let yb = y_bound as i64;
    let x_work = (2 * x_bound as u128 + 1).pow(n as u32);
    if x_work > budget as u128 {
        return Err(CountError::BudgetExceeded { work: x_work, budget });
    }
    let mut gram2 = vec![vec![0i64; n]; n];
    let mut total = 0u128;
    let mut err = None;
    visit_box(n, xb, |x| {
        if err.is_some() {
            return;
        }
        if slice_det_x(&coeffs, n, x) == 0 {
            return;
        }
        doubled_slice_gram(&coeffs, x, &mut gram2);
        if n >= 3 {
            if let Err(e) = for_each_quadric_zero(&gram2, yb, budget, |_| total += 1) {
                err = Some(e);
            }
        } else {
            match count_box_naive(&gram2, yb, budget) {
                Ok(c) => total += c,
                Err(e) => err = Some(e),
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: "tilde",
        b: None,
        x_bound: Some(x_bound as f64),
        y_bound: Some(y_bound as f64),
        count: CountValue::Integer(total),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `N(𝒜; X, Y)`: pairs `|x| ≤ X`, `|y| ≤ Y` with `F(x; y) = 0` and both
/// slice determinants nonzero.
pub fn count_a(
    form: &BiquadraticForm,
    x_bound: u64,
    y_bound: u64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let coeffs = form.coeffs_i64()?;
    let xb = x_bound as i64;
    let yb = y_bound as i64;
    let x_work = (2 * x_bound as u128 + 1).pow(n as u32);
    if x_work > budget as u128 {
        return Err(CountError::BudgetExceeded { work: x_work, budget });
    }
    let mut gram2 = vec![vec![0i64; n]; n];
    let mut total = 0u128;
    let mut err = None;
    visit_box(n, xb, |x| {
        if err.is_some() {
            return;
        }
        if slice_det_x(&coeffs, n, x) == 0 {
            return;
        }
        doubled_slice_gram(&coeffs, x, &mut gram2);
        let count_y = |y: &[i64], total: &mut u128| {
            if slice_det_y(&coeffs, n, y) != 0 {
                *total += 1;
            }
        };
        if n >= 3 {
            if let Err(e) = for_each_quadric_zero(&gram2, yb, budget, |y| count_y(y, &mut total)) {
                err = Some(e);
            }
        } else {
            visit_box(n, yb, |y| {
                let mut v = 0i64;
                for (i, row) in gram2.iter().enumerate() {
                    let mut r = 0i64;
                    for (j, &g) in row.iter().enumerate() {
                        r += g * y[j];
                    }
                    v += r * y[i];
                }
                if v == 0 {
                    count_y(y, &mut total);
                }
            });
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: "pairs",
        b: None,
        x_bound: Some(x_bound as f64),
        y_bound: Some(y_bound as f64),
        count: CountValue::Integer(total),
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn is_primitive(v: &[i64]) -> bool {
    let mut g = 0u64;
    for &x in v {
        g = gcd(g, x.unsigned_abs());
        if g == 1 {
            return true;
        }
    }
    false
}

fn is_canonical(v: &[i64]) -> bool {
    for &x in v {
        if x != 0 {
            return x > 0;
        }
    }
    false
}

/// Pairs `(x, y)` with both slice determinants nonzero, `F(x; y) = 0`, and
/// `xlo < |x| ≤ xhi`, `|x| |y| ≤ r`. No primitivity or sign restriction.
fn mobius_m_band_raw(
    coeffs: &[(usize, usize, usize, usize, i64)],
    n: usize,
    xlo: f64,
    xhi: f64,
    r: f64,
    budget: u64,
) -> Result<u128, CountError> {
    let x_cap = xhi.min(r).floor();
    if x_cap < 1.0 {
        return Ok(0);
    }
    let xb = x_cap as i64;
    let x_work = (2 * xb as u128 + 1).pow(n as u32);
    if x_work > budget as u128 {
        return Err(CountError::BudgetExceeded { work: x_work, budget });
    }
    let mut gram2 = vec![vec![0i64; n]; n];
    let mut total = 0u128;
    let mut err = None;
    visit_box(n, xb, |x| {
        if err.is_some() {
            return;
        }
        let nx = sup_norm(x);
        if nx == 0 {
            return;
        }
        let nxf = nx as f64;
        if nxf <= xlo || nxf > xhi {
            return;
        }
        let yb = (r / nxf).floor() as i64;
        if yb < 1 {
            return;
        }
        if slice_det_x(coeffs, n, x) == 0 {
            return;
        }
        doubled_slice_gram(coeffs, x, &mut gram2);
        if let Err(e) = for_each_quadric_zero(&gram2, yb, budget, |y| {
            if slice_det_y(coeffs, n, y) != 0 {
                total += 1;
            }
        }) {
            err = Some(e);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `M(R)`: pairs in `𝒜` with `F(x; y) = 0` and `|x| |y| ≤ R`.
pub fn mobius_m(form: &BiquadraticForm, r: f64, budget: u64) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    if n < 3 {
        return Err(CountError::InvalidParams(format!(
            "pair counting needs n >= 3, got n = {n}"
        )));
    }
    let coeffs = form.coeffs_i64()?;
    let count = if r < 1.0 {
        0
    } else {
        mobius_m_band_raw(&coeffs, n, 0.0, r, r, budget)?
    };
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: "mobius_m",
        b: Some(r),
        x_bound: None,
        y_bound: None,
        count: CountValue::Integer(count),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The band refinement of `M(R)`: only `xlo < |x| ≤ xhi` contributes, so a
/// `(1+ξ)`-grid of bands partitions `M(R)` exactly.
pub fn mobius_m_band(
    form: &BiquadraticForm,
    xlo: f64,
    xhi: f64,
    r: f64,
    budget: u64,
) -> Result<u128, CountError> {
    let n = form.n();
    if n < 3 {
        return Err(CountError::InvalidParams(format!(
            "pair counting needs n >= 3, got n = {n}"
        )));
    }
    if r < 1.0 {
        return Ok(0);
    }
    let coeffs = form.coeffs_i64()?;
    mobius_m_band_raw(&coeffs, n, xlo, xhi, r, budget)
}

/// Which aggregation produces `N_U(B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuRoute {
    Direct,
    Mobius,
}

impl NuRoute {
    pub fn name(&self) -> &'static str {
        match self {
            NuRoute::Direct => "direct",
            NuRoute::Mobius => "mobius",
        }
    }
}

/// The direct route: primitive, sign-canonicalized pairs off the bad locus.
/// With `canonicalize` off, the full 4-element unit orbits are counted.
pub fn count_nu_direct(
    form: &BiquadraticForm,
    height_bound: f64,
    canonicalize: bool,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let height = HeightParams::new(n, height_bound)?;
    let r = height.pair_bound();
    let coeffs = form.coeffs_i64()?;
    let xb = r.floor() as i64;
    let x_work = (2 * xb as u128 + 1).pow(n as u32);
    if x_work > budget as u128 {
        return Err(CountError::BudgetExceeded { work: x_work, budget });
    }
    let mut gram2 = vec![vec![0i64; n]; n];
    let mut total = 0u128;
    let mut err = None;
    visit_box(n, xb, |x| {
        if err.is_some() {
            return;
        }
        let nx = sup_norm(x);
        if nx == 0 || (canonicalize && !is_canonical(x)) || !is_primitive(x) {
            return;
        }
        let yb = (r / nx as f64).floor() as i64;
        if yb < 1 {
            return;
        }
        if slice_det_x(&coeffs, n, x) == 0 {
            return;
        }
        doubled_slice_gram(&coeffs, x, &mut gram2);
        if let Err(e) = for_each_quadric_zero(&gram2, yb, budget, |y| {
            if (!canonicalize || is_canonical(y))
                && is_primitive(y)
                && slice_det_y(&coeffs, n, y) != 0
            {
                total += 1;
            }
        }) {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: if canonicalize { "direct" } else { "orbits" },
        b: Some(height_bound),
        x_bound: None,
        y_bound: None,
        count: CountValue::Integer(total),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `N_U(B)` by Möbius inversion over both gcds:
/// `(1/4) Σ_{k₁,k₂} μ(k₁) μ(k₂) M(R/(k₁k₂))`, truncated at `k₁k₂ ≤ R`.
pub fn count_nu_mobius(
    form: &BiquadraticForm,
    height_bound: f64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let height = HeightParams::new(n, height_bound)?;
    let r = height.pair_bound();
    let coeffs = form.coeffs_i64()?;
    let kmax = r.floor() as u64;
    let mut signed: i128 = 0;
    for k1 in 1..=kmax {
        let m1 = mobius(k1);
        if m1 == 0 {
            continue;
        }
        let mut k2 = 1;
        while (k1 * k2) as f64 <= r {
            let m2 = mobius(k2);
            if m2 != 0 {
                let rr = r / (k1 * k2) as f64;
                let m = mobius_m_band_raw(&coeffs, n, 0.0, rr, rr, budget)?;
                signed += (m1 * m2) as i128 * m as i128;
            }
            k2 += 1;
        }
    }
    assert!(signed >= 0 && signed % 4 == 0, "unit orbits must come in fours, got {signed}");
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: "mobius",
        b: Some(height_bound),
        x_bound: None,
        y_bound: None,
        count: CountValue::Integer(signed as u128 / 4),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `N_U(B)` by the requested route.
pub fn count_nu(
    form: &BiquadraticForm,
    height_bound: f64,
    route: NuRoute,
    budget: u64,
) -> Result<CountRecord, CountError> {
    match route {
        NuRoute::Direct => count_nu_direct(form, height_bound, true, budget),
        NuRoute::Mobius => count_nu_mobius(form, height_bound, budget),
    }
}

/// Height-bounded points of the thin family `x₁ = 0, y = t·e₁`: primitive
/// sign-canonicalized pairs with `F(x; e₁) = 0` checked exactly per point.
/// Counts grow like `B^{(n-1)/(n-2)}` for the model form.
pub fn thin_family_count(
    form: &BiquadraticForm,
    height_bound: f64,
    budget: u64,
) -> Result<CountRecord, CountError> {
    let start = Instant::now();
    let n = form.n();
    let height = HeightParams::new(n, height_bound)?;
    let r = height.pair_bound().floor() as i64;
    let work = (2 * r as u128 + 1).pow(n as u32 - 1);
    if work > budget as u128 {
        return Err(CountError::BudgetExceeded { work, budget });
    }
    let coeffs = form.coeffs_i64()?;
    // y = e1 is primitive and canonical; the slice form in x is fixed.
    let mut gram2 = vec![vec![0i64; n]; n];
    let mut e1 = vec![0i64; n];
    e1[0] = 1;
    doubled_slice_gram_y(&coeffs, &e1, &mut gram2);
    let mut total = 0u128;
    let mut x = vec![0i64; n];
    visit_box(n - 1, r, |tail| {
        x[1..n].copy_from_slice(tail);
        if !is_canonical(&x[1..]) || !is_primitive(&x[1..]) {
            return;
        }
        let mut v = 0i64;
        for i in 1..n {
            let mut row = 0i64;
            for j in 1..n {
                row += gram2[i][j] * x[j];
            }
            v += row * x[i];
        }
        if v == 0 {
            total += 1;
        }
    });
    Ok(CountRecord {
        form_id: biquadratic_form_id(form),
        method: "thin",
        b: Some(height_bound),
        x_bound: None,
        y_bound: None,
        count: CountValue::Integer(total),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `ζ(s)` for integer `s ≥ 2`: direct series with the integral tail; the
/// truncation point is chosen so the result is accurate to 1e-12.
pub fn zeta(s: u32) -> Result<f64, CountError> {
    if s < 2 {
        return Err(CountError::InvalidParams(format!(
            "zeta({s}) diverges; the Peyre constant needs n - 2 >= 2"
        )));
    }
    let sf = s as f64;
    // Tail past K: integral K^{1-s}/(s-1) plus midpoint correction K^{-s}/2.
    let k_max: u64 = if s == 2 { 2_000_000 } else { 1_000_000 };
    let mut sum = 0.0;
    for k in (1..=k_max).rev() {
        sum += (k as f64).powf(-sf);
    }
    let kf = k_max as f64;
    let tail = kf.powf(1.0 - sf) / (sf - 1.0) - 0.5 * kf.powf(-sf);
    Ok(sum + tail)
}

/// The Peyre-style leading constant `c = 𝔖 · 𝔗 / (4 ζ(n-2)²)` from
/// already-computed series and integral values.
pub fn peyre_constant_from_parts(series: f64, integral: f64, n: usize) -> Result<f64, CountError> {
    if n < 4 {
        return Err(CountError::InvalidParams(format!(
            "zeta(n-2) diverges at n = {n}; the constant needs n >= 4"
        )));
    }
    let z = zeta(n as u32 - 2)?;
    Ok(series * integral / (4.0 * z * z))
}

/// The full prediction: joint singular series to `q_max`, joint singular
/// integral by MC, and the zeta normalization, with propagated uncertainty.
#[derive(Debug, Clone)]
pub struct PeyrePrediction {
    pub constant: f64,
    pub uncertainty: f64,
    pub series: DensityEstimate,
    pub integral: IntegralEstimate,
}

pub fn peyre_prediction(
    form: &BiquadraticForm,
    q_max: u64,
    schedule: &[f64],
    samples: u64,
    seed: u64,
    budget: u64,
) -> Result<PeyrePrediction, CountError> {
    let n = form.n();
    if n < 4 {
        return Err(CountError::InvalidParams(format!(
            "zeta(n-2) diverges at n = {n}; the constant needs n >= 4"
        )));
    }
    let series = joint_singular_series(form, q_max, budget)?;
    let integral = joint_singular_integral(form, schedule, samples, seed)?;
    let z = zeta(n as u32 - 2)?;
    let norm = 4.0 * z * z;
    let constant = series.value * integral.value / norm;
    let uncertainty = (series.value.abs() * integral.mc_stderr
        + integral.value.abs() * series.tail_bound
        + series.tail_bound * integral.mc_stderr)
        / norm;
    Ok(PeyrePrediction { constant, uncertainty, series, integral })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archimedean::WeightFunction;
    use crate::fit::log_log_slope;
    use num_bigint::BigInt;
    use num_traits::Zero;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    const BUDGET: u64 = 2_000_000_000;

    fn model_minus() -> BiquadraticForm {
        BiquadraticForm::diagonal_squares(3, -1)
    }

    fn random_quadric(rng: &mut StdRng, n: usize, bound: i64) -> QuadraticForm {
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-bound..=bound);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        QuadraticForm::from_rows(&rows).unwrap()
    }

    fn random_biquadratic(rng: &mut StdRng, n: usize, terms: usize, bound: i64) -> BiquadraticForm {
        let mut merged: BTreeMap<(usize, usize, usize, usize), i64> = BTreeMap::new();
        for _ in 0..terms {
            let mut i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n);
            if i > j {
                std::mem::swap(&mut i, &mut j);
            }
            let mut k = rng.random_range(0..n);
            let mut l = rng.random_range(0..n);
            if k > l {
                std::mem::swap(&mut k, &mut l);
            }
            *merged.entry((i, j, k, l)).or_insert(0) += rng.random_range(-bound..=bound);
        }
        let entries: Vec<_> =
            merged.into_iter().map(|((i, j, k, l), c)| (i, j, k, l, c)).collect();
        BiquadraticForm::from_i64(n, &entries).unwrap()
    }

    /// Literal box-count oracle: BigInt evaluation at every point.
    fn oracle_box_count(f: &QuadraticForm, b: i64) -> u128 {
        let n = f.n();
        let mut count = 0u128;
        let width = (2 * b + 1) as u128;
        for idx in 0..width.pow(n as u32) {
            let mut rem = idx;
            let x: Vec<i64> = (0..n)
                .map(|_| {
                    let d = (rem % width) as i64 - b;
                    rem /= width;
                    d
                })
                .collect();
            if f.evaluate_i64(&x).unwrap().is_zero() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn model_form_box_counts() {
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        for method in [QuadricMethod::Naive, QuadricMethod::Slice] {
            let rec = count_quadric_box(&f, 1, method, BUDGET).unwrap();
            assert_eq!(rec.count.as_integer(), Some(17), "B = 1 via {:?}", method);
        }
        let definite = QuadraticForm::diagonal(&[1, 1, 1, 1, 1]).unwrap();
        for b in [1u64, 5, 9] {
            let rec = count_quadric_box(&definite, b, QuadricMethod::Slice, BUDGET).unwrap();
            assert_eq!(rec.count.as_integer(), Some(1), "definite form at B = {b}");
        }
    }

    #[test]
    fn naive_and_slice_agree_with_oracle() {
        let mut rng = StdRng::seed_from_u64(501);
        for trial in 0..20 {
            let f = random_quadric(&mut rng, 4, 4);
            let naive = count_quadric_box(&f, 8, QuadricMethod::Naive, BUDGET).unwrap();
            let slice = count_quadric_box(&f, 8, QuadricMethod::Slice, BUDGET).unwrap();
            assert_eq!(
                naive.count.as_integer(),
                slice.count.as_integer(),
                "trial {trial} methods disagree on {:?}",
                f.gram()
            );
            if trial < 6 {
                assert_eq!(
                    slice.count.as_integer(),
                    Some(oracle_box_count(&f, 8)),
                    "trial {trial} vs literal oracle"
                );
            }
        }
    }

    #[test]
    fn degenerate_leading_fibers_are_counted() {
        // Zero out the x1 row so every fiber is linear or constant.
        let f = QuadraticForm::from_i64(&[
            &[0, 0, 0],
            &[0, 1, 2],
            &[0, 2, -3],
        ])
        .unwrap();
        let naive = count_quadric_box(&f, 12, QuadricMethod::Naive, BUDGET).unwrap();
        let slice = count_quadric_box(&f, 12, QuadricMethod::Slice, BUDGET).unwrap();
        assert_eq!(naive.count.as_integer(), slice.count.as_integer());
        assert_eq!(slice.count.as_integer(), Some(oracle_box_count(&f, 12)));
    }

    #[test]
    fn weighted_box_weight_reproduces_box_count() {
        let f = QuadraticForm::diagonal(&[1, 1, 1, -2]).unwrap();
        let w0 = WeightFunction::box_w0(1.0).unwrap();
        let boxed = count_quadric_box(&f, 20, QuadricMethod::Slice, BUDGET).unwrap();
        let weighted = count_quadric_weighted(&f, &w0, 20, BUDGET).unwrap();
        assert_eq!(
            weighted.count.as_f64(),
            boxed.count.as_integer().unwrap() as f64,
            "indicator weight must reproduce the box count"
        );
    }

    #[test]
    fn weighted_sandwich_on_integer_counts() {
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        let eta = 0.1;
        let b = 50u64;
        let w0 = WeightFunction::box_w0(1.0).unwrap();
        let w1 = WeightFunction::annular_w1(eta).unwrap();
        let w2 = WeightFunction::annular_w2(eta).unwrap();
        let n0 = count_quadric_weighted(&f, &w0, b, BUDGET).unwrap().count.as_f64();
        let n1 = count_quadric_weighted(&f, &w1, b, BUDGET).unwrap().count.as_f64();
        let n2 = count_quadric_weighted(&f, &w2, b, BUDGET).unwrap().count.as_f64();
        let hole = count_quadric_box(&f, (2.0 * eta * b as f64) as u64, QuadricMethod::Slice, BUDGET)
            .unwrap()
            .count
            .as_f64();
        assert!(n1 <= n0, "N(w1) = {n1} must not exceed N(w0) = {n0}");
        assert!(
            n0 <= n2 + hole,
            "N(w0) = {n0} must not exceed N(w2) + N(w0; 2 eta B) = {}",
            n2 + hole
        );
    }

    #[test]
    fn slice_counts_match_double_loop_oracle() {
        let mut rng = StdRng::seed_from_u64(502);
        let zero = vec![0i64; 3];
        let f = model_minus();
        let rec = count_nx(&f, &zero, 4, BUDGET).unwrap();
        assert_eq!(rec.count.as_integer(), Some(9u128.pow(3)), "zero slice counts the full box");
        let ones = vec![1i64; 3];
        let plus = BiquadraticForm::diagonal_squares(3, 1);
        let rec = count_nx(&plus, &ones, 7, BUDGET).unwrap();
        assert_eq!(rec.count.as_integer(), Some(1), "definite slice counts only the origin");
        for _ in 0..6 {
            let form = random_biquadratic(&mut rng, 3, 4, 3);
            let x: Vec<i64> = (0..3).map(|_| rng.random_range(-3..=3)).collect();
            let got = count_nx(&form, &x, 10, BUDGET).unwrap().count.as_integer().unwrap();
            // Independent oracle: literal y loop with BigInt slice evaluation.
            let slice = form.slice_x_i64(&x).unwrap();
            let mut want = 0u128;
            visit_box(3, 10, |y| {
                let ye: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
                if slice.evaluate(&ye).unwrap().is_zero() {
                    want += 1;
                }
            });
            assert_eq!(got, want, "slice count vs oracle at x = {x:?}");
        }
    }

    /// Full double-enumeration oracle for the restricted pair counts: a
    /// literal monomial sum decides zeros, and the forms API decides
    /// singularity. No fiber solving, no Gram matrices.
    fn oracle_pair_counts(form: &BiquadraticForm, xb: i64, yb: i64) -> (u128, u128) {
        let n = form.n();
        let coeffs = form.coeffs_i64().unwrap();
        let mut n_a = 0u128;
        let mut n_tilde = 0u128;
        visit_box(n, xb, |x| {
            let xe: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            if form.slice_x(&xe).unwrap().is_singular() {
                return;
            }
            visit_box(n, yb, |y| {
                let mut v = 0i64;
                for &(i, j, k, l, c) in &coeffs {
                    v += c * x[i] * x[j] * y[k] * y[l];
                }
                if v != 0 {
                    return;
                }
                n_tilde += 1;
                let ye: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
                if !form.slice_y(&ye).unwrap().is_singular() {
                    n_a += 1;
                }
            });
        });
        (n_a, n_tilde)
    }

    #[test]
    fn pair_counts_match_full_enumeration_oracle() {
        let form = model_minus();
        let (want_a, want_tilde) = oracle_pair_counts(&form, 4, 12);
        let got_a = count_a(&form, 4, 12, BUDGET).unwrap().count.as_integer().unwrap();
        let got_tilde = count_tilde(&form, 4, 12, BUDGET).unwrap().count.as_integer().unwrap();
        assert_eq!(got_a, want_a, "N(A) vs oracle");
        assert_eq!(got_tilde, want_tilde, "N tilde vs oracle");
        assert!(got_a <= got_tilde, "restricting y can only shrink the count");
    }

    #[test]
    fn pair_count_transpose_symmetry() {
        // Swapping the roles of x and y maps (i,j,k,l,c) to (k,l,i,j,c) and
        // N(A; X, Y) to N(A; Y, X).
        let g = BiquadraticForm::from_i64(3, &[(0, 0, 1, 2, 1), (1, 1, 0, 0, 1), (2, 2, 2, 2, -1)])
            .unwrap();
        let gt = BiquadraticForm::from_i64(3, &[(1, 2, 0, 0, 1), (0, 0, 1, 1, 1), (2, 2, 2, 2, -1)])
            .unwrap();
        for (xb, yb) in [(3u64, 7u64), (5, 4)] {
            let lhs = count_a(&g, xb, yb, BUDGET).unwrap().count.as_integer().unwrap();
            let rhs = count_a(&gt, yb, xb, BUDGET).unwrap().count.as_integer().unwrap();
            assert_eq!(lhs, rhs, "transpose symmetry at bounds ({xb}, {yb})");
        }
    }

    #[test]
    fn tilde_excess_grows_slowly() {
        // On the joint sweep X = Y = t the degenerate-y locus contributes
        // at most t^n * t^{n-3+0.3}. At fixed X the excess can grow
        // linearly in Y (whole lines on the slice quadric), so the bound is
        // only meaningful when both bounds grow.
        let n = 4;
        let form = BiquadraticForm::diagonal_squares(n, -1);
        let ts = [4u64, 6, 8];
        let mut gaps = Vec::new();
        for &t in &ts {
            let tilde = count_tilde(&form, t, t, BUDGET).unwrap().count.as_integer().unwrap();
            let a = count_a(&form, t, t, BUDGET).unwrap().count.as_integer().unwrap();
            gaps.push(((tilde - a) as f64).max(1.0));
        }
        let xs: Vec<f64> = ts.iter().map(|&t| t as f64).collect();
        let slope = log_log_slope(&xs, &gaps);
        let allowed = (2 * n) as f64 - 3.0 + 0.3;
        assert!(
            slope <= allowed,
            "excess exponent {slope} exceeds 2n - 3 + 0.3 = {allowed} (gaps {gaps:?})"
        );
    }

    #[test]
    fn nu_positivity_forces_zero_on_plus_model() {
        let plus = BiquadraticForm::diagonal_squares(3, 1);
        for bound in [10.0, 100.0] {
            let direct = count_nu(&plus, bound, NuRoute::Direct, BUDGET).unwrap();
            let mob = count_nu(&plus, bound, NuRoute::Mobius, BUDGET).unwrap();
            assert_eq!(direct.count.as_integer(), Some(0), "positivity leaves no U-points");
            assert_eq!(mob.count.as_integer(), Some(0));
        }
    }

    #[test]
    fn nu_routes_agree_exactly() {
        let forms = [
            model_minus(),
            BiquadraticForm::from_i64(
                3,
                &[(0, 0, 0, 0, 1), (1, 1, 1, 1, 1), (2, 2, 2, 2, -1), (0, 1, 0, 1, 1)],
            )
            .unwrap(),
        ];
        let mut largest = 0u128;
        for form in &forms {
            for bound in [30.0, 75.0] {
                let direct = count_nu(form, bound, NuRoute::Direct, BUDGET).unwrap();
                let mob = count_nu(form, bound, NuRoute::Mobius, BUDGET).unwrap();
                assert_eq!(
                    direct.count.as_integer(),
                    mob.count.as_integer(),
                    "route mismatch at bound {bound} on {}",
                    direct.form_id
                );
                largest = largest.max(direct.count.as_integer().unwrap());
            }
        }
        assert!(largest > 0, "the agreement checks should see a nonempty count");
    }

    #[test]
    fn unit_orbits_quadruple_the_canonical_count() {
        let form = model_minus();
        let bound = 60.0;
        let canonical = count_nu_direct(&form, bound, true, BUDGET).unwrap();
        let orbits = count_nu_direct(&form, bound, false, BUDGET).unwrap();
        assert_eq!(
            orbits.count.as_integer(),
            canonical.count.as_integer().map(|c| 4 * c),
            "sign action is free on nonzero pairs"
        );
    }

    #[test]
    fn mobius_m_truncation_monotonicity_and_reassembly() {
        let form = model_minus();
        assert_eq!(mobius_m(&form, 0.8, BUDGET).unwrap().count.as_integer(), Some(0));
        let mut prev = 0u128;
        for r in [2.0, 5.0, 11.0, 23.0, 40.0] {
            let m = mobius_m(&form, r, BUDGET).unwrap().count.as_integer().unwrap();
            assert!(m >= prev, "M must be nondecreasing, dropped at R = {r}");
            prev = m;
        }
        // Dyadic reassembly on the (1+xi)-grid partitions M(R) exactly.
        let r = 40.0;
        let xi = 0.5;
        let whole = mobius_m(&form, r, BUDGET).unwrap().count.as_integer().unwrap();
        let mut sum = 0u128;
        let mut hi = 1.0f64;
        let mut lo = 1.0 / (1.0 + xi);
        while lo < r {
            sum += mobius_m_band(&form, lo, hi, r, BUDGET).unwrap();
            lo = hi;
            hi *= 1.0 + xi;
        }
        assert_eq!(sum, whole, "band decomposition must reassemble M(R)");
    }

    #[test]
    fn thin_family_fits_critical_exponent() {
        let form = BiquadraticForm::diagonal_squares(3, 1);
        let bounds = [100.0, 1000.0];
        let counts: Vec<f64> = bounds
            .iter()
            .map(|&b| thin_family_count(&form, b, BUDGET).unwrap().count.as_f64())
            .collect();
        let slope = log_log_slope(&bounds, &counts);
        assert!(
            (slope - 2.0).abs() <= 0.1,
            "thin family exponent {slope} should be (n-1)/(n-2) = 2 (counts {counts:?})"
        );
    }

    #[test]
    fn height_pair_bound_equivalence() {
        let mut rng = StdRng::seed_from_u64(503);
        for _ in 0..200 {
            let n = rng.random_range(3..=6);
            let h = HeightParams::new(n, rng.random_range(1.0..1e6_f64)).unwrap();
            let xn = rng.random_range(1i64..100);
            let yn = rng.random_range(1i64..100);
            let pair = (xn * yn) as f64;
            // Skip numerically tied cases; the equivalence is about the
            // order relation, not boundary rounding.
            if (pair.powi(h.exponent() as i32) / h.bound - 1.0).abs() < 1e-9 {
                continue;
            }
            let lhs = pair.powi(h.exponent() as i32) <= h.bound;
            let rhs = pair <= h.pair_bound();
            assert_eq!(lhs, rhs, "height equivalence at |x||y| = {pair}, B = {}", h.bound);
        }
        assert!(HeightParams::new(2, 10.0).is_err());
        assert!(HeightParams::new(5, 0.5).is_err());
    }

    #[test]
    fn zeta_matches_series_oracle() {
        // Raw partial-sum oracle with its own tail estimate.
        let mut oracle = 0.0;
        for k in (1..=2_000_000u64).rev() {
            oracle += 1.0 / (k as f64).powi(3);
        }
        oracle += 0.5 / 2.0e6f64.powi(2) - 0.5 / 2.0e6f64.powi(3);
        let z3 = zeta(3).unwrap();
        assert!((z3 - oracle).abs() < 1e-11, "zeta(3) = {z3} vs oracle {oracle}");
        assert!(
            (z3 * z3 - 1.4449408).abs() < 1e-6,
            "zeta(3)^2 = {} should be 1.4449408...",
            z3 * z3
        );
        assert!(zeta(1).is_err());
    }

    #[test]
    fn peyre_constant_shape() {
        assert_eq!(peyre_constant_from_parts(2.5, 0.0, 5).unwrap(), 0.0);
        let one = peyre_constant_from_parts(1.0, 3.0, 5).unwrap();
        let two = peyre_constant_from_parts(2.0, 3.0, 5).unwrap();
        assert_eq!(two, 2.0 * one, "constant must be linear in the series");
        assert!(peyre_constant_from_parts(1.0, 1.0, 3).is_err());
        let z3 = zeta(3).unwrap();
        assert!((one - 3.0 / (4.0 * z3 * z3)).abs() < 1e-15);
    }

    #[test]
    fn budget_guards_refuse_oversized_boxes() {
        let f = QuadraticForm::diagonal(&[1, 1, 1, 1, -1]).unwrap();
        match count_quadric_box(&f, 1000, QuadricMethod::Naive, 1000) {
            Err(CountError::BudgetExceeded { work, budget: 1000 }) => {
                assert_eq!(work, 2001u128.pow(5));
            }
            other => panic!("expected BudgetExceeded, got {other:?}"),
        }
        assert!(count_nu(&model_minus(), 1e9, NuRoute::Direct, 1000).is_err());
    }
}
