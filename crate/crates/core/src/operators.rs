//! Dense complex operators and the validated measurement types built on them.
//!
//! Every type here is an immutable value once constructed. Validation uses a
//! two-tier tolerance: [`HERMITIAN_TOL`] for Hermiticity and affine identities,
//! [`PSD_TOL`] for positivity. Residual-reporting helpers return raw numbers so
//! callers can tighten either tier.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-abs tolerance for Hermiticity and affine identities such as `E_yes + E_no = I`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Slack on the spectrum of an effect or density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub type C64 = Complex64;

/// Square dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a `dim x dim` matrix from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: entries.len().checked_div(dim).unwrap_or(0),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Wraps an nalgebra matrix, rejecting non-square or non-finite input.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Rank-one operator `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// Max-abs entry of `M - M†`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-abs entrywise distance. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Row-major real and imaginary parts.
    pub fn to_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.dim();
        let re = (0..n).map(|i| (0..n).map(|j| self.0[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| self.0[(i, j)].im).collect()).collect();
        (re, im)
    }

    /// Columns `cols` of `self` as a `dim x cols.len()` block.
    pub(crate) fn columns(&self, cols: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), cols.len(), |i, k| self.0[(i, cols[k])])
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{:?}", self.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Wire form: `{"dim": d, "re": [[...]], "im": [[...]]}`, row-major.
/// `im` may be omitted for real matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let d = j.dim;
        if d == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        let check = |name: &str, rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != d {
                return Err(Error::Parse(format!("field `{name}`: expected {d} rows, found {}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Parse(format!(
                        "field `{name}`: row {i} has {} entries, expected {d}",
                        row.len()
                    )));
                }
            }
            Ok(())
        };
        check("re", &j.re)?;
        if let Some(im) = &j.im {
            check("im", im)?;
        }
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for k in 0..d {
                let im = j.im.as_ref().map_or(0.0, |im| im[i][k]);
                entries.push(C64::new(j.re[i][k], im));
            }
        }
        ComplexMatrix::from_row_major(d, &entries)
    }
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (re, im) = m.to_parts();
        MatrixJson {
            dim: m.dim(),
            re,
            im: Some(im),
        }
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Hermitian eigendecomposition with eigenvalues ascending; eigenvectors are
/// the columns of the returned matrix. Only the Hermitian part of `m` is used.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let herm = m.hermitian_part().0;
    let eig = herm.symmetric_eigen();
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    (values, ComplexMatrix(vectors))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.hermitian_part().0.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn ensure_hermitian(m: &ComplexMatrix) -> Result<()> {
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    ensure_hermitian(m)?;
    Ok(eigenvalues(m)[0])
}

pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    ensure_hermitian(m)?;
    Ok(*eigenvalues(m).last().expect("non-empty"))
}

/// Kronecker product; entry `(i*db + k, j*db + l) = a(i,j) * b(k,l)`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Pauli matrices.
pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(
        2,
        &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    )
    .expect("2x2")
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

/// `a0 * I + v . sigma` on a qubit.
pub fn pauli_combination(a0: f64, v: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix::from_row_major(
        2,
        &[
            C64::new(a0 + v[2], 0.0),
            C64::new(v[0], -v[1]),
            C64::new(v[0], v[1]),
            C64::new(a0 - v[2], 0.0),
        ],
    )
    .expect("2x2")
}

/// Checks `m` is Hermitian and its spectrum lies in `[-tol, 1 + tol]`.
pub fn validate_effect(m: ComplexMatrix, tol: f64) -> Result<Effect> {
    ensure_hermitian(&m)?;
    let ev = eigenvalues(&m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo < -tol {
        return Err(Error::SpectrumOutOfRange {
            eigenvalue: lo,
            lower: -tol,
            upper: 1.0 + tol,
        });
    }
    if hi > 1.0 + tol {
        return Err(Error::SpectrumOutOfRange {
            eigenvalue: hi,
            lower: -tol,
            upper: 1.0 + tol,
        });
    }
    Ok(Effect(m))
}

/// Hermitian operator `E` with `0 <= E <= I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(ComplexMatrix);

impl Effect {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate_effect(m, PSD_TOL)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn complement(&self) -> Effect {
        Effect(&ComplexMatrix::identity(self.dim()) - &self.0)
    }

    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Effect(m)
    }
}

/// Two-outcome POVM `{E_yes, E_no}` with `E_yes + E_no = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicObservable {
    yes: Effect,
    no: Effect,
}

impl DichotomicObservable {
    pub fn new(yes: Effect, no: Effect) -> Result<Self> {
        no.0.ensure_dim(yes.dim())?;
        let residual = (&yes.0 + &no.0).max_abs_diff(&ComplexMatrix::identity(yes.dim()));
        if residual > HERMITIAN_TOL {
            return Err(Error::NotComplementary { residual });
        }
        Ok(Self { yes, no })
    }

    /// Observable `{E, I - E}`.
    pub fn from_yes(yes: Effect) -> Self {
        let no = yes.complement();
        Self { yes, no }
    }

    pub fn yes(&self) -> &Effect {
        &self.yes
    }

    pub fn no(&self) -> &Effect {
        &self.no
    }

    pub fn dim(&self) -> usize {
        self.yes.dim()
    }

    /// Observable operator `E_yes - E_no`, with spectrum in `[-1, 1]`.
    pub fn signed_operator(&self) -> ComplexMatrix {
        &self.yes.0 - &self.no.0
    }

    pub(crate) fn from_trusted(yes: ComplexMatrix, no: ComplexMatrix) -> Self {
        Self {
            yes: Effect(yes),
            no: Effect(no),
        }
    }
}

/// Orthogonal projector with cached rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    /// Accepts `m` when `max |P^2 - P| <= tol` and it is Hermitian to [`HERMITIAN_TOL`].
    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        ensure_hermitian(&m)?;
        let residual = (&m * &m).max_abs_diff(&m);
        if residual > tol {
            return Err(Error::NotProjector { residual });
        }
        let tr = m.trace().re;
        let rank = tr.round();
        if (tr - rank).abs() > 1e-8 || rank < 0.0 {
            return Err(Error::NotProjector {
                residual: (tr - rank).abs(),
            });
        }
        Ok(Self {
            matrix: m,
            rank: rank as usize,
        })
    }

    /// Projector onto the span of orthonormal `columns`.
    pub(crate) fn from_orthonormal(dim: usize, columns: &[Vec<C64>]) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        for v in columns {
            m = &m + &ComplexMatrix::outer(v);
        }
        Self {
            matrix: m,
            rank: columns.len(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn complement(&self) -> Projector {
        Projector {
            matrix: &ComplexMatrix::identity(self.dim()) - &self.matrix,
            rank: self.dim() - self.rank,
        }
    }

    /// Sharp observable `{P, I - P}`.
    pub fn to_observable(&self) -> DichotomicObservable {
        DichotomicObservable::from_trusted(self.matrix.clone(), self.complement().matrix)
    }

    /// Attempts to read an observable's yes-effect as a projector.
    pub fn from_observable(obs: &DichotomicObservable) -> Option<Projector> {
        Projector::new(obs.yes().matrix().clone()).ok()
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        ensure_hermitian(&m)?;
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lo = eigenvalues(&m)[0];
        if lo < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo}")));
        }
        Ok(Self(m))
    }

    /// Pure state `|psi><psi|` of a normalized ket.
    pub fn from_ket(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&unit))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Two-qubit singlet `(|01> - |10>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        Self(ComplexMatrix::outer(&[z, C64::new(s, 0.0), C64::new(-s, 0.0), z]))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `Tr[rho * op]`, real part.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<f64> {
        op.ensure_dim(self.dim())?;
        Ok(self.0.trace_product(op).re)
    }
}
