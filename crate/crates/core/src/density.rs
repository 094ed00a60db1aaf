//! Dense density operators over truncated Fock spaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector, SparseOp};
use crate::math::C64;
use crate::states::ModeMoments;

/// Hermiticity tolerance enforced by [`DensityOperator::validate`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue tolerated before a state is declared non-positive.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub space: FockSpace,
    pub data: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(space: FockSpace, data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != space.dim() || data.ncols() != space.dim() {
            return Err(Error::InvalidState(format!(
                "density matrix is {}x{} but the space has dimension {}",
                data.nrows(),
                data.ncols(),
                space.dim()
            )));
        }
        Ok(Self { space, data })
    }

    pub fn from_pure(v: &FockVector) -> Self {
        let data = &v.amplitudes * v.amplitudes.adjoint();
        Self { space: v.space.clone(), data }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn expectation(&self, op: &SparseOp) -> C64 {
        op.trace_with(&self.data)
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace within `trace_tol` and positivity.
    pub fn validate(&self, trace_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Contract(format!("density operator not Hermitian (error {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::Contract(format!("density operator trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Contract(format!("density operator has eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// First and second moments of the `n` modes starting at `offset`.
    pub fn mode_moments(&self, offset: usize, n: usize) -> ModeMoments {
        let lowering: Vec<SparseOp> = (0..n).map(|j| self.space.annihilation(offset + j)).collect();
        let means = DVector::from_iterator(n, lowering.iter().map(|b| b.trace_with(&self.data)));
        // ⟨b_i† b_j⟩ = Tr(b_j ρ b_i†)
        let images: Vec<DMatrix<C64>> = lowering.iter().map(|b| b.left_mul(&self.data)).collect();
        let mut second = DMatrix::zeros(n, n);
        for i in 0..n {
            let bi_dag = lowering[i].adjoint();
            for j in 0..n {
                second[(i, j)] = bi_dag.trace_with(&images[j]);
            }
        }
        ModeMoments { means, second }
    }

    /// Applies a linear map on state vectors as `ρ -> K ρ K†`.
    pub fn conjugate_by<F>(&self, map: F) -> Self
    where
        F: Fn(&DVector<C64>) -> DVector<C64>,
    {
        let n = self.dim();
        let mut left = DMatrix::zeros(n, n);
        for c in 0..n {
            let col: DVector<C64> = self.data.column(c).into_owned();
            left.set_column(c, &map(&col));
        }
        // (K (K ρ)†)† = K ρ K†
        let adj = left.adjoint();
        let mut out = DMatrix::zeros(n, n);
        for c in 0..n {
            let col: DVector<C64> = adj.column(c).into_owned();
            out.set_column(c, &map(&col));
        }
        Self { space: self.space.clone(), data: out.adjoint() }
    }

    /// Tensor product `|0⟩⟨0|_a ⊗ ρ` placing an ancilla in its vacuum as
    /// the first mode of `space`, whose remaining modes must contain those of `self`.
    pub fn with_vacuum_ancilla(&self, space: &FockSpace) -> Result<Self> {
        let mut map = Vec::with_capacity(self.dim());
        let mut occ = Vec::with_capacity(space.n_modes());
        for s in self.space.states() {
            occ.clear();
            occ.push(0);
            occ.extend_from_slice(s);
            map.push(space.index_of(&occ));
        }
        let mut data = DMatrix::zeros(space.dim(), space.dim());
        for (i, ti) in map.iter().enumerate() {
            for (j, tj) in map.iter().enumerate() {
                let v = self.data[(i, j)];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                match (ti, tj) {
                    (Some(a), Some(b)) => data[(*a, *b)] = v,
                    _ => {
                        return Err(Error::Truncation { tail: v.norm(), threshold: 0.0 });
                    }
                }
            }
        }
        Ok(Self { space: space.clone(), data })
    }

    /// Population on basis states flagged by `weights`.
    pub fn flagged_population(&self, flags: &[bool]) -> f64 {
        flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| self.data[(i, i)].re)
            .sum()
    }

    /// Row-major `re im` pairs, one matrix row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let v = self.data[(i, j)];
                    format!("{:.16e} {:.16e}", v.re, v.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}
