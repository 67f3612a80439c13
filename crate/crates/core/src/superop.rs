//! Linear maps on operators as matrices acting on column-stacked operators.
//!
//! `vec(A X B†) = (B* ⊗ A) vec(X)`; nalgebra storage is already column-major,
//! so `vec` is a plain reinterpretation of the data.

use crate::error::{Error, Result};
use crate::linalg::{c64, identity, CMatrix, CVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    matrix: CMatrix,
}

pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

impl Superoperator {
    pub fn new(in_dim: usize, out_dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (out_dim * out_dim, in_dim * in_dim) {
            return Err(Error::DimensionMismatch(format!(
                "superoperator {in_dim}→{out_dim} needs a {}x{} matrix, got {:?}",
                out_dim * out_dim,
                in_dim * in_dim,
                matrix.shape()
            )));
        }
        Ok(Self { in_dim, out_dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { in_dim: dim, out_dim: dim, matrix: identity(dim * dim) }
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, matrix: CMatrix::zeros(out_dim * out_dim, in_dim * in_dim) }
    }

    /// Tabulates a linear map by applying it to the matrix units `|r⟩⟨c|`.
    pub fn from_fn(
        in_dim: usize,
        out_dim: usize,
        mut f: impl FnMut(&CMatrix) -> Result<CMatrix>,
    ) -> Result<Self> {
        let mut matrix = CMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        let mut unit = CMatrix::zeros(in_dim, in_dim);
        for col in 0..in_dim * in_dim {
            let (r, c) = (col % in_dim, col / in_dim);
            unit[(r, c)] = c64(1.0, 0.0);
            let image = f(&unit)?;
            unit[(r, c)] = c64(0.0, 0.0);
            if image.shape() != (out_dim, out_dim) {
                return Err(Error::DimensionMismatch(format!(
                    "map produced {:?}, expected {out_dim}x{out_dim}",
                    image.shape()
                )));
            }
            matrix.set_column(col, &vectorize(&image));
        }
        Ok(Self { in_dim, out_dim, matrix })
    }

    /// `X ↦ Σ_j A_j X A_j†`.
    pub fn from_kraus(ops: &[CMatrix]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let (out_dim, in_dim) = first.shape();
        if ops.iter().any(|a| a.shape() != (out_dim, in_dim)) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let matrix = ops.iter().fold(CMatrix::zeros(out_dim * out_dim, in_dim * in_dim), |acc, a| {
            acc + a.conjugate().kronecker(a)
        });
        Ok(Self { in_dim, out_dim, matrix })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::DimensionMismatch(format!(
                "operand {:?} for a map on {}x{} operators",
                x.shape(),
                self.in_dim,
                self.in_dim
            )));
        }
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.out_dim, self.out_dim))
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        if first.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose a map on dim {} after one into dim {}",
                self.in_dim, first.out_dim
            )));
        }
        Ok(Self { in_dim: first.in_dim, out_dim: self.out_dim, matrix: &self.matrix * &first.matrix })
    }

    /// Frobenius norm of the matrix representation.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Self { matrix: self.matrix.scale(s), ..self.clone() }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, ..self.clone() })
    }

    pub fn sub(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, ..self.clone() })
    }

    fn check_same(&self, other: &Superoperator) -> Result<()> {
        if (self.in_dim, self.out_dim) != (other.in_dim, other.out_dim) {
            return Err(Error::DimensionMismatch("superoperators act on different spaces".into()));
        }
        Ok(())
    }

    /// `‖vec(I)† M − vec(I)†‖`: zero for trace-preserving maps.
    pub fn trace_preservation_residual(&self) -> f64 {
        let id_out = vectorize(&identity(self.out_dim));
        let id_in = vectorize(&identity(self.in_dim));
        (id_out.adjoint() * &self.matrix - id_in.adjoint()).norm()
    }

    /// `‖vec(I)† M‖`: zero for generators of trace-preserving semigroups.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let id_out = vectorize(&identity(self.out_dim));
        (id_out.adjoint() * &self.matrix).norm()
    }

    /// `exp(t M)` for a map on a fixed space.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        if self.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch("exponential of a non-endomorphism".into()));
        }
        Ok(Self { matrix: self.matrix.scale(t).exp(), ..self.clone() })
    }
}
