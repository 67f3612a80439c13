//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Composite operators carry
//! their factor dimensions in [`MultiIndexOperator`]; the first factor is the
//! most significant one in the flattened index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerance for identities that hold up to roundoff.
pub const EXACT_TOL: f64 = 1e-12;
/// Default tolerance for iterated dynamics.
pub const DYNAMICS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub exact: f64,
    pub dynamics: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exact: EXACT_TOL, dynamics: DYNAMICS_TOL }
    }
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c64(v, 0.0)),
    ))
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "real_matrix: entry count");
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&v| c64(v, 0.0)))
}

/// `|v><v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Standard Kronecker product, first argument most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(identity(1), |acc, f| acc.kronecker(*f))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖M − M†‖_F`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m - m.adjoint()).norm()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascend.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigh on a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Most negative eigenvalue of the Hermitian part.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let (values, _) = eigh(m)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// `½ ‖A − B‖_1` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (values, _) = eigh(&(a - b))?;
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> Result<CMatrix> {
    let (values, vectors) = eigh(m)?;
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// Principal square root of a positive semidefinite matrix; negative roundoff
/// eigenvalues are clamped to zero.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    hermitian_function(m, |v| c64(v.max(0.0).sqrt(), 0.0))
}

/// `exp(−iθH)` for Hermitian `H` via eigendecomposition.
pub fn expm_hermitian_generator(h: &CMatrix, theta: f64) -> Result<CMatrix> {
    let residual = hermiticity_residual(h);
    if residual > EXACT_TOL {
        return Err(Error::NotHermitian(residual));
    }
    hermitian_function(h, |v| C64::from_polar(1.0, -theta * v))
}

/// `‖U†U − I‖_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// Thin LQ factorization `M = L·Q` with orthonormal rows of `Q`.
///
/// `L` is `m × r` and `Q` is `r × n` with `r = min(m, n)`. A zero input yields
/// `L = 0` and an arbitrary orthonormal `Q`.
pub fn lq_factorize(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (CMatrix::zeros(rows, 0), CMatrix::zeros(0, cols));
    }
    // M† = Q' R'  =>  M = R'† Q'†
    let qr = m.adjoint().qr();
    let q = qr.q();
    let r = qr.r();
    (r.adjoint(), q.adjoint())
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Intended for matrices with spectrum away from the closed negative real
/// axis, such as channels close to the identity.
pub fn logm(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("logm of a non-square matrix".into()));
    }
    let n = m.nrows();
    let id = identity(n);
    let mut a = m.clone();
    let mut squarings = 0u32;
    while (&a - &id).norm() > 0.1 {
        a = sqrtm_denman_beavers(&a)?;
        squarings += 1;
        if squarings > 60 {
            return Err(Error::Numerical("logm: square-root iteration did not approach identity".into()));
        }
    }
    let x = &a - &id;
    let mut power = x.clone();
    let mut acc = CMatrix::zeros(n, n);
    for k in 1..200 {
        let term = power.scale(1.0 / k as f64);
        if k % 2 == 1 {
            acc += &term;
        } else {
            acc -= &term;
        }
        if term.norm() < 1e-18 * (1.0 + acc.norm()) {
            break;
        }
        power = &power * &x;
    }
    Ok(acc.scale(2f64.powi(squarings as i32)))
}

fn sqrtm_denman_beavers(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("sqrtm: singular iterate".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("sqrtm: singular iterate".into()))?;
        let y_next = (&y + z_inv).scale(0.5);
        let z_next = (&z + y_inv).scale(0.5);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::Numerical("sqrtm: Denman-Beavers did not converge".into()))
}

/// Eigenvalues of a general square complex matrix (Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    m.clone()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))
}

/// Unit vector spanning the (numerical) null space of `m`.
pub fn null_vector(m: &CMatrix) -> Result<CVector> {
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD without right singular vectors".into()))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Numerical("empty SVD".into()))?;
    Ok(v_t.row(idx).adjoint())
}

/// An operator on a tensor product of factors with known dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl MultiIndexOperator {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let total: usize = dims.iter().product();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "factor dims {:?} imply {}x{}, matrix is {}x{}",
                dims,
                total,
                total,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dims, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Traces out every factor not listed in `keep`. Kept factors retain their
    /// original relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<MultiIndexOperator> {
        partial_trace(self, keep)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Offsets into the full index contributed by every configuration of the
/// selected factors.
fn offsets(dims: &[usize], strides: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(out.len() * dims[f]);
        for &base in &out {
            for v in 0..dims[f] {
                next.push(base + v * strides[f]);
            }
        }
        out = next;
    }
    out
}

pub fn partial_trace(op: &MultiIndexOperator, keep: &[usize]) -> Result<MultiIndexOperator> {
    let count = op.dims.len();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial_trace: keep set is empty".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    for &k in &kept {
        if k >= count {
            return Err(Error::InvalidFactor { index: k, count });
        }
    }
    kept.sort_unstable();
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("partial_trace: repeated factor index".into()));
    }
    let traced: Vec<usize> = (0..count).filter(|i| !kept.contains(i)).collect();
    let st = strides(&op.dims);
    let keep_off = offsets(&op.dims, &st, &kept);
    let trace_off = offsets(&op.dims, &st, &traced);
    let n = keep_off.len();
    let mut out = CMatrix::zeros(n, n);
    for (c, &oc) in keep_off.iter().enumerate() {
        for (r, &or) in keep_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &trace_off {
                acc += op.matrix[(or + t, oc + t)];
            }
            out[(r, c)] = acc;
        }
    }
    let dims = kept.iter().map(|&k| op.dims[k]).collect();
    MultiIndexOperator::new(dims, out)
}

/// Convenience: partial trace of a bipartite `a ⊗ b` matrix.
pub fn trace_out_second(m: &CMatrix, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    let op = MultiIndexOperator::new(vec![dim_a, dim_b], m.clone())?;
    Ok(partial_trace(&op, &[0])?.into_matrix())
}

pub fn trace_out_first(m: &CMatrix, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    let op = MultiIndexOperator::new(vec![dim_a, dim_b], m.clone())?;
    Ok(partial_trace(&op, &[1])?.into_matrix())
}

/// Lifts `op`, acting on the listed factors (in the given order), to the full
/// tensor product with identity on the remaining factors.
pub fn embed_operator(op: &CMatrix, factors: &[usize], dims: &[usize]) -> Result<CMatrix> {
    let local: Vec<usize> = factors.iter().map(|&f| dims.get(f).copied().unwrap_or(0)).collect();
    let local_total: usize = local.iter().product();
    if factors.iter().any(|&f| f >= dims.len()) {
        let index = *factors.iter().find(|&&f| f >= dims.len()).unwrap();
        return Err(Error::InvalidFactor { index, count: dims.len() });
    }
    if op.nrows() != local_total || op.ncols() != local_total {
        return Err(Error::DimensionMismatch(format!(
            "operator {:?} does not act on factors of dims {:?}",
            op.shape(),
            local
        )));
    }
    let st = strides(dims);
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !factors.contains(i)).collect();
    let act_off = offsets(dims, &st, factors);
    let rest_off = offsets(dims, &st, &rest);
    let total: usize = dims.iter().product();
    let mut out = CMatrix::zeros(total, total);
    for &r0 in &rest_off {
        for (c, &oc) in act_off.iter().enumerate() {
            for (r, &or) in act_off.iter().enumerate() {
                let v = op[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    out[(or + r0, oc + r0)] = v;
                }
            }
        }
    }
    Ok(out)
}
