//! Exact integral quadratic forms `F(x) = x^T M x`, their duals, and
//! bidegree (2,2) biquadratic forms `F(x;y)` with their quadratic slices.
//!
//! All data in this module is exact: Gram matrices are arbitrary-precision
//! integers, slice Grams of biquadratic forms are rationals with denominator
//! dividing 2, and every determinant is computed by fraction-free
//! elimination. No floating point enters here.
//!
//! Conventions: the discriminant is `Delta_F = det M`, the height is
//! `||F|| = max |M[i][j]|`, and the dual form `F*` has matrix
//! `Delta_F * M^{-1}`, i.e. the adjugate of `M`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormError {
    #[error("Gram matrix is not square: row {row} has length {len}, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("Gram matrix is not symmetric: M[{i}][{j}] = {a} but M[{j}][{i}] = {b}")]
    NotSymmetric { i: usize, j: usize, a: BigInt, b: BigInt },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("vector has length {got}, form has dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("form is singular (discriminant 0) where a nonsingular form is required")]
    SingularForm,
    #[error("coefficient index {field} = {value} out of range 1..={n} in coeffs[{entry}]")]
    IndexOutOfRange { entry: usize, field: &'static str, value: i64, n: usize },
    #[error("coeffs[{entry}]: indices must satisfy i <= j and k <= l, got ({i},{j},{k},{l})")]
    UnorderedIndices { entry: usize, i: usize, j: usize, k: usize, l: usize },
    #[error("coeffs[{entry}] repeats the index quadruple ({i},{j},{k},{l})")]
    DuplicateIndices { entry: usize, i: usize, j: usize, k: usize, l: usize },
    #[error("the pair does not lie on the hypersurface: F(x;y) = {value} != 0")]
    NotOnHypersurface { value: BigInt },
    #[error("entry {context} does not fit in 64 bits; enumeration routines need machine integers")]
    EntryTooLarge { context: String },
    #[error("malformed form document: {0}")]
    Schema(String),
}

/// Exact determinant of a square integer matrix by Bareiss fraction-free
/// elimination. Runs in O(n^3) exact-integer operations; every division in
/// the update is exact.
pub fn bareiss_determinant(matrix: &[Vec<BigInt>]) -> BigInt {
    let n = matrix.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            // Pivot: find a row below with a nonzero entry in column k.
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Exact adjugate: `adj(M) * M = det(M) * I`. Entry (i, j) is the signed
/// (j, i) minor; cost is n^2 determinants of size n-1, fine at desk scale.
pub fn adjugate(matrix: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = matrix.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let minor = |r: usize, c: usize| -> BigInt {
        let sub: Vec<Vec<BigInt>> = (0..n)
            .filter(|&i| i != r)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != c)
                    .map(|j| matrix[i][j].clone())
                    .collect()
            })
            .collect();
        bareiss_determinant(&sub)
    };
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let m = minor(j, i);
            adj[i][j] = if (i + j) % 2 == 0 { m } else { -m };
        }
    }
    adj
}

/// An integral quadratic form `F(x) = x^T M x` with symmetric Gram matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    n: usize,
    gram: Vec<Vec<BigInt>>,
}

impl QuadraticForm {
    pub fn new(gram: Vec<Vec<BigInt>>) -> Result<Self, FormError> {
        let n = gram.len();
        if n < 2 {
            return Err(FormError::DimensionTooSmall(n));
        }
        for (row, r) in gram.iter().enumerate() {
            if r.len() != n {
                return Err(FormError::NotSquare { row, len: r.len(), n });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if gram[i][j] != gram[j][i] {
                    return Err(FormError::NotSymmetric {
                        i,
                        j,
                        a: gram[i][j].clone(),
                        b: gram[j][i].clone(),
                    });
                }
            }
        }
        Ok(QuadraticForm { n, gram })
    }

    pub fn from_i64(gram: &[&[i64]]) -> Result<Self, FormError> {
        Self::new(
            gram.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn from_rows(gram: &[Vec<i64>]) -> Result<Self, FormError> {
        Self::new(
            gram.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    /// Diagonal form `d_1 x_1^2 + ... + d_n x_n^2`.
    pub fn diagonal(diag: &[i64]) -> Result<Self, FormError> {
        let n = diag.len();
        let mut gram = vec![vec![BigInt::zero(); n]; n];
        for (i, &d) in diag.iter().enumerate() {
            gram[i][i] = BigInt::from(d);
        }
        Self::new(gram)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gram(&self) -> &[Vec<BigInt>] {
        &self.gram
    }

    /// Gram matrix as machine integers, for enumeration-heavy callers.
    pub fn gram_i64(&self) -> Result<Vec<Vec<i64>>, FormError> {
        self.gram
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.to_i64().ok_or_else(|| FormError::EntryTooLarge {
                            context: format!("gram[{i}][{j}]"),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// `F(x) = x^T M x`, exactly.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt, FormError> {
        if x.len() != self.n {
            return Err(FormError::DimensionMismatch { got: x.len(), expected: self.n });
        }
        let mut acc = BigInt::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += &self.gram[i][j] * &x[i] * &x[j];
            }
        }
        Ok(acc)
    }

    pub fn evaluate_i64(&self, x: &[i64]) -> Result<BigInt, FormError> {
        let xe: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&xe)
    }

    /// Discriminant `Delta_F = det M`, exact.
    pub fn discriminant(&self) -> BigInt {
        bareiss_determinant(&self.gram)
    }

    /// Height `||F|| = max |M[i][j]|`.
    pub fn height(&self) -> BigInt {
        self.gram
            .iter()
            .flatten()
            .map(|v| v.abs())
            .max()
            .expect("n >= 2, matrix nonempty")
    }

    pub fn is_nonsingular(&self) -> bool {
        !self.discriminant().is_zero()
    }

    /// Dual form with matrix `Delta_F * M^{-1}` (the adjugate of M).
    pub fn dual_form(&self) -> Result<DualForm, FormError> {
        let disc = self.discriminant();
        if disc.is_zero() {
            return Err(FormError::SingularForm);
        }
        let mstar = adjugate(&self.gram);
        Ok(DualForm { base_discriminant: disc, star: QuadraticForm { n: self.n, gram: mstar } })
    }
}

/// The dual `F*` of a nonsingular quadratic form: its matrix is the adjugate
/// of M, so `Mstar * M = Delta_F * I` exactly.
#[derive(Debug, Clone)]
pub struct DualForm {
    base_discriminant: BigInt,
    star: QuadraticForm,
}

impl DualForm {
    pub fn mstar(&self) -> &[Vec<BigInt>] {
        &self.star.gram
    }

    pub fn as_form(&self) -> &QuadraticForm {
        &self.star
    }

    pub fn base_discriminant(&self) -> &BigInt {
        &self.base_discriminant
    }

    /// `F*(c) = c^T Mstar c`, exactly.
    pub fn evaluate(&self, c: &[BigInt]) -> Result<BigInt, FormError> {
        self.star.evaluate(c)
    }

    pub fn evaluate_i64(&self, c: &[i64]) -> Result<BigInt, FormError> {
        self.star.evaluate_i64(c)
    }
}

/// One monomial coefficient of a biquadratic form: `c * x_i x_j y_k y_l`
/// with `i <= j`, `k <= l` (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiCoeff {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub c: BigInt,
}

/// An integral bihomogeneous form of bidegree (2,2) in (x; y), each block of
/// n variables: `F(x;y) = sum c_{ijkl} x_i x_j y_k y_l` over `i<=j`, `k<=l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiquadraticForm {
    n: usize,
    coeffs: Vec<BiCoeff>,
}

impl BiquadraticForm {
    /// Builds a form from (i, j, k, l, c) monomials with 0-based indices.
    /// Indices must be ordered (i <= j, k <= l), in range, and distinct.
    pub fn new(n: usize, coeffs: Vec<BiCoeff>) -> Result<Self, FormError> {
        if n < 2 {
            return Err(FormError::DimensionTooSmall(n));
        }
        let mut seen = BTreeMap::new();
        for (entry, t) in coeffs.iter().enumerate() {
            for (field, value) in [("i", t.i), ("j", t.j), ("k", t.k), ("l", t.l)] {
                if value >= n {
                    return Err(FormError::IndexOutOfRange {
                        entry,
                        field,
                        value: value as i64 + 1,
                        n,
                    });
                }
            }
            if t.i > t.j || t.k > t.l {
                return Err(FormError::UnorderedIndices {
                    entry,
                    i: t.i + 1,
                    j: t.j + 1,
                    k: t.k + 1,
                    l: t.l + 1,
                });
            }
            if seen.insert((t.i, t.j, t.k, t.l), entry).is_some() {
                return Err(FormError::DuplicateIndices {
                    entry,
                    i: t.i + 1,
                    j: t.j + 1,
                    k: t.k + 1,
                    l: t.l + 1,
                });
            }
        }
        let mut coeffs = coeffs;
        coeffs.retain(|t| !t.c.is_zero());
        coeffs.sort_by_key(|t| (t.i, t.j, t.k, t.l));
        Ok(BiquadraticForm { n, coeffs })
    }

    pub fn from_i64(n: usize, entries: &[(usize, usize, usize, usize, i64)]) -> Result<Self, FormError> {
        Self::new(
            n,
            entries
                .iter()
                .map(|&(i, j, k, l, c)| BiCoeff { i, j, k, l, c: BigInt::from(c) })
                .collect(),
        )
    }

    /// The model form `x_1^2 y_1^2 + ... + x_n^2 y_n^2`, optionally with the
    /// sign of the last monomial flipped.
    pub fn diagonal_squares(n: usize, last_sign: i64) -> Self {
        let entries: Vec<BiCoeff> = (0..n)
            .map(|i| BiCoeff {
                i,
                j: i,
                k: i,
                l: i,
                c: BigInt::from(if i + 1 == n { last_sign } else { 1 }),
            })
            .collect();
        BiquadraticForm::new(n, entries).expect("valid by construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[BiCoeff] {
        &self.coeffs
    }

    pub fn coeffs_i64(&self) -> Result<Vec<(usize, usize, usize, usize, i64)>, FormError> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(e, t)| {
                let c = t.c.to_i64().ok_or_else(|| FormError::EntryTooLarge {
                    context: format!("coeffs[{e}]"),
                })?;
                Ok((t.i, t.j, t.k, t.l, c))
            })
            .collect()
    }

    pub fn evaluate(&self, x: &[BigInt], y: &[BigInt]) -> Result<BigInt, FormError> {
        if x.len() != self.n {
            return Err(FormError::DimensionMismatch { got: x.len(), expected: self.n });
        }
        if y.len() != self.n {
            return Err(FormError::DimensionMismatch { got: y.len(), expected: self.n });
        }
        let mut acc = BigInt::zero();
        for t in &self.coeffs {
            acc += &t.c * &x[t.i] * &x[t.j] * &y[t.k] * &y[t.l];
        }
        Ok(acc)
    }

    pub fn evaluate_i64(&self, x: &[i64], y: &[i64]) -> Result<BigInt, FormError> {
        let xe: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        let ye: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&xe, &ye)
    }

    /// The x-slice: the quadratic form in y obtained by fixing x, i.e.
    /// `F_x(y) = y^T G y`. Off-diagonal Gram entries may be half-integers.
    pub fn slice_x(&self, x: &[BigInt]) -> Result<SliceForm, FormError> {
        if x.len() != self.n {
            return Err(FormError::DimensionMismatch { got: x.len(), expected: self.n });
        }
        // doubled[k][l] accumulates the coefficient of y_k y_l in 2*F(x; y).
        let mut doubled = vec![vec![BigInt::zero(); self.n]; self.n];
        for t in &self.coeffs {
            let xpart = &t.c * &x[t.i] * &x[t.j];
            if t.k == t.l {
                doubled[t.k][t.k] += &xpart * 2;
            } else {
                doubled[t.k][t.l] += &xpart;
                doubled[t.l][t.k] += xpart;
            }
        }
        SliceForm::from_doubled(doubled)
    }

    /// The y-slice: the quadratic form in x obtained by fixing y.
    pub fn slice_y(&self, y: &[BigInt]) -> Result<SliceForm, FormError> {
        if y.len() != self.n {
            return Err(FormError::DimensionMismatch { got: y.len(), expected: self.n });
        }
        let mut doubled = vec![vec![BigInt::zero(); self.n]; self.n];
        for t in &self.coeffs {
            let ypart = &t.c * &y[t.k] * &y[t.l];
            if t.i == t.j {
                doubled[t.i][t.i] += &ypart * 2;
            } else {
                doubled[t.i][t.j] += &ypart;
                doubled[t.j][t.i] += ypart;
            }
        }
        SliceForm::from_doubled(doubled)
    }

    pub fn slice_x_i64(&self, x: &[i64]) -> Result<SliceForm, FormError> {
        let xe: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.slice_x(&xe)
    }

    pub fn slice_y_i64(&self, y: &[i64]) -> Result<SliceForm, FormError> {
        let ye: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
        self.slice_y(&ye)
    }
}

/// A quadratic slice `F_x` (or `F_y`) of a biquadratic form: a symmetric
/// Gram matrix with entries in (1/2) * Z, stored exactly. The doubled matrix
/// `2G` is integral and is what enumeration code consumes: `y^T G y = 0` iff
/// `y^T (2G) y = 0`.
#[derive(Debug, Clone)]
pub struct SliceForm {
    n: usize,
    doubled: Vec<Vec<BigInt>>,
}

impl SliceForm {
    fn from_doubled(doubled: Vec<Vec<BigInt>>) -> Result<Self, FormError> {
        let n = doubled.len();
        Ok(SliceForm { n, doubled })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The exact rational Gram matrix G (denominators divide 2).
    pub fn gram(&self) -> Vec<Vec<BigRational>> {
        let two = BigInt::from(2);
        self.doubled
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| BigRational::new(v.clone(), two.clone()))
                    .collect()
            })
            .collect()
    }

    /// The integral doubled Gram matrix 2G.
    pub fn doubled_gram(&self) -> &[Vec<BigInt>] {
        &self.doubled
    }

    /// The doubled Gram as an integral quadratic form (zero slices excluded,
    /// since the zero matrix is still a valid Gram matrix here).
    pub fn doubled_form(&self) -> Result<QuadraticForm, FormError> {
        QuadraticForm::new(self.doubled.clone())
    }

    /// `det G`, exactly, as `det(2G) / 2^n`.
    pub fn det(&self) -> BigRational {
        let d2 = bareiss_determinant(&self.doubled);
        let denom = BigInt::from(2).pow(self.n as u32);
        BigRational::new(d2, denom)
    }

    /// `det(2G)`, the integer determinant enumerations branch on.
    pub fn det_doubled(&self) -> BigInt {
        bareiss_determinant(&self.doubled)
    }

    pub fn is_singular(&self) -> bool {
        self.det_doubled().is_zero()
    }

    /// `F_x(y) = y^T G y` as an exact rational (an integer for integer y).
    pub fn evaluate(&self, y: &[BigInt]) -> Result<BigRational, FormError> {
        if y.len() != self.n {
            return Err(FormError::DimensionMismatch { got: y.len(), expected: self.n });
        }
        let mut acc = BigInt::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += &self.doubled[i][j] * &y[i] * &y[j];
            }
        }
        Ok(BigRational::new(acc, BigInt::from(2)))
    }
}

/// Membership in the degenerate locus Z of the hypersurface `F(x;y) = 0`:
/// the pair is in Z iff `det(F_x) * det(F_y) = 0`. The pair must lie on the
/// hypersurface.
pub fn in_z(form: &BiquadraticForm, x: &[BigInt], y: &[BigInt]) -> Result<bool, FormError> {
    let value = form.evaluate(x, y)?;
    if !value.is_zero() {
        return Err(FormError::NotOnHypersurface { value });
    }
    let fx = form.slice_x(x)?;
    if fx.is_singular() {
        return Ok(true);
    }
    let fy = form.slice_y(y)?;
    Ok(fy.is_singular())
}

pub fn in_z_i64(form: &BiquadraticForm, x: &[i64], y: &[i64]) -> Result<bool, FormError> {
    let xe: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
    let ye: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
    in_z(form, &xe, &ye)
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// A form as it appears on disk. Quadratic forms carry their Gram matrix;
/// biquadratic forms carry a sparse coefficient list with 1-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FormDocument {
    Quadratic { n: usize, gram: Vec<Vec<i64>> },
    Biquadratic { n: usize, coeffs: Vec<CoeffEntry> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub c: i64,
}

/// A parsed form, either kind.
#[derive(Debug, Clone)]
pub enum Form {
    Quadratic(QuadraticForm),
    Biquadratic(BiquadraticForm),
}

impl Form {
    pub fn n(&self) -> usize {
        match self {
            Form::Quadratic(f) => f.n(),
            Form::Biquadratic(f) => f.n(),
        }
    }
}

/// Parses a JSON form document, with validation errors that name the
/// offending entry.
pub fn parse_form(json: &str) -> Result<Form, FormError> {
    let doc: FormDocument =
        serde_json::from_str(json).map_err(|e| FormError::Schema(e.to_string()))?;
    form_from_document(&doc)
}

pub fn form_from_document(doc: &FormDocument) -> Result<Form, FormError> {
    match doc {
        FormDocument::Quadratic { n, gram } => {
            if gram.len() != *n {
                return Err(FormError::Schema(format!(
                    "declared n = {n} but gram has {} rows",
                    gram.len()
                )));
            }
            Ok(Form::Quadratic(QuadraticForm::from_rows(gram)?))
        }
        FormDocument::Biquadratic { n, coeffs } => {
            let mut entries = Vec::with_capacity(coeffs.len());
            for (entry, t) in coeffs.iter().enumerate() {
                for (field, value) in [("i", t.i), ("j", t.j), ("k", t.k), ("l", t.l)] {
                    if value < 1 || value > *n {
                        return Err(FormError::IndexOutOfRange {
                            entry,
                            field,
                            value: value as i64,
                            n: *n,
                        });
                    }
                }
                entries.push(BiCoeff {
                    i: t.i - 1,
                    j: t.j - 1,
                    k: t.k - 1,
                    l: t.l - 1,
                    c: BigInt::from(t.c),
                });
            }
            Ok(Form::Biquadratic(BiquadraticForm::new(*n, entries)?))
        }
    }
}

/// Serializes a form back to its JSON document (1-based indices for
/// biquadratic coefficients). Fails if entries exceed 64 bits.
pub fn form_to_document(form: &Form) -> Result<FormDocument, FormError> {
    match form {
        Form::Quadratic(f) => {
            let gram = f
                .gram_i64()?
                .into_iter()
                .map(|row| row.into_iter().collect())
                .collect();
            Ok(FormDocument::Quadratic { n: f.n(), gram })
        }
        Form::Biquadratic(f) => {
            let coeffs = f
                .coeffs_i64()?
                .into_iter()
                .map(|(i, j, k, l, c)| CoeffEntry { i: i + 1, j: j + 1, k: k + 1, l: l + 1, c })
                .collect();
            Ok(FormDocument::Biquadratic { n: f.n(), coeffs })
        }
    }
}

pub fn form_to_json(form: &Form) -> Result<String, FormError> {
    let doc = form_to_document(form)?;
    serde_json::to_string_pretty(&doc).map_err(|e| FormError::Schema(e.to_string()))
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "quadratic form, n = {}, ||F|| = {}", self.n, self.height())
    }
}
