//! Truncated product Fock spaces and sparse ladder operators over them.
//!
//! A [`FockSpace`] is the set of occupation tuples `(n_1, ..., n_N)` with
//! `n_j < mode_dims[j]`, optionally restricted to `Σ n_j <= max_total`.
//! States are ordered lexicographically with mode 1 most significant.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::C64;

/// Refuse to build spaces larger than this many product states.
pub const MAX_SPACE_DIM: usize = 250_000;

#[derive(Debug, Clone)]
pub struct FockSpace {
    mode_dims: Vec<usize>,
    max_total: Option<usize>,
    states: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        self.mode_dims == other.mode_dims && self.max_total == other.max_total
    }
}

impl FockSpace {
    pub fn new(mode_dims: Vec<usize>, max_total: Option<usize>) -> Result<Self> {
        if mode_dims.is_empty() || mode_dims.contains(&0) {
            return Err(Error::InvalidState(format!(
                "Fock space needs at least one mode and positive cutoffs, got {mode_dims:?}"
            )));
        }
        let full: f64 = mode_dims.iter().map(|&d| d as f64).product();
        if max_total.is_none() && full > MAX_SPACE_DIM as f64 {
            return Err(Error::BasisLimit { count: full as usize, limit: MAX_SPACE_DIM });
        }
        let mut states = Vec::new();
        let mut current = vec![0usize; mode_dims.len()];
        enumerate(&mode_dims, max_total, 0, 0, &mut current, &mut states)?;
        let lookup = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { mode_dims, max_total, states, lookup })
    }

    /// Full product space with the given per-mode dimensions.
    pub fn product(mode_dims: Vec<usize>) -> Result<Self> {
        Self::new(mode_dims, None)
    }

    /// All states of `n_modes` modes carrying at most `max_total` quanta.
    pub fn number_capped(n_modes: usize, max_total: usize) -> Result<Self> {
        Self::new(vec![max_total + 1; n_modes], Some(max_total))
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn max_total(&self) -> Option<usize> {
        self.max_total
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &[usize] {
        &self.states[index]
    }

    pub fn index_of(&self, occupations: &[usize]) -> Option<usize> {
        self.lookup.get(occupations).copied()
    }

    pub fn total_quanta(&self, index: usize) -> usize {
        self.states[index].iter().sum()
    }

    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn basis_vector(&self, occupations: &[usize]) -> Result<DVector<C64>> {
        let idx = self.index_of(occupations).ok_or_else(|| {
            Error::InvalidState(format!("occupations {occupations:?} lie outside the truncated space"))
        })?;
        let mut v = DVector::zeros(self.dim());
        v[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// `b_j` (zero-based mode index).
    pub fn annihilation(&self, mode: usize) -> SparseOp {
        let mut entries = Vec::new();
        for (col, s) in self.states.iter().enumerate() {
            if s[mode] > 0 {
                let mut t = s.clone();
                t[mode] -= 1;
                if let Some(row) = self.index_of(&t) {
                    entries.push((row, col, C64::new((s[mode] as f64).sqrt(), 0.0)));
                }
            }
        }
        SparseOp::from_triplets(self.dim(), entries)
    }

    /// `b_j†`, truncated at the space boundary.
    pub fn creation(&self, mode: usize) -> SparseOp {
        self.annihilation(mode).adjoint()
    }

    pub fn number(&self, mode: usize) -> SparseOp {
        let entries = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| s[mode] > 0)
            .map(|(i, s)| (i, i, C64::new(s[mode] as f64, 0.0)))
            .collect();
        SparseOp::from_triplets(self.dim(), entries)
    }

    pub fn total_number(&self) -> SparseOp {
        let entries = (0..self.dim())
            .filter(|&i| self.total_quanta(i) > 0)
            .map(|i| (i, i, C64::new(self.total_quanta(i) as f64, 0.0)))
            .collect();
        SparseOp::from_triplets(self.dim(), entries)
    }

    /// `Σ_j coeffs[j] b_{offset + j}`.
    pub fn collective_annihilation(&self, coeffs: &[f64], offset: usize) -> SparseOp {
        let mut entries = Vec::new();
        for (j, &cj) in coeffs.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let b = self.annihilation(offset + j);
            entries.extend(b.triplets().map(|(r, c, v)| (r, c, v * cj)));
        }
        SparseOp::from_triplets(self.dim(), entries)
    }

    /// Applies the linear map `(Σ_j coeffs[j] b_{offset+j}†)` to `v`,
    /// dropping components that leave the space.
    pub fn apply_collective_creation(&self, v: &DVector<C64>, coeffs: &[C64], offset: usize) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim());
        let mut target = vec![0usize; self.n_modes()];
        for (i, s) in self.states.iter().enumerate() {
            let amp = v[i];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &cj) in coeffs.iter().enumerate() {
                if cj == C64::new(0.0, 0.0) {
                    continue;
                }
                let mode = offset + j;
                target.copy_from_slice(s);
                target[mode] += 1;
                if let Some(k) = self.index_of(&target) {
                    out[k] += amp * cj * (target[mode] as f64).sqrt();
                }
            }
        }
        out
    }

    /// `Π_k (Σ_j u_kj b_j†)^{m_k} / sqrt(m_k!) |0⟩` for the listed
    /// `(coefficients, power)` factors.
    pub fn creation_polynomial(&self, factors: &[(Vec<C64>, usize)]) -> DVector<C64> {
        let mut v = self.vacuum();
        for (coeffs, power) in factors {
            for p in 1..=*power {
                v = self.apply_collective_creation(&v, coeffs, 0);
                v /= C64::new((p as f64).sqrt(), 0.0);
            }
        }
        v
    }

    /// Applies a single-mode linear map to mode `mode` of `v`. `map(column)`
    /// receives the occupation `n` and returns `(n', amplitude)` pairs for
    /// the image of `|n⟩`; targets outside the space are dropped.
    pub fn apply_single_mode<F>(&self, v: &DVector<C64>, mode: usize, map: F) -> DVector<C64>
    where
        F: Fn(usize) -> Vec<(usize, C64)>,
    {
        let cache: Vec<Vec<(usize, C64)>> = (0..self.mode_dims[mode]).map(&map).collect();
        let mut out = DVector::zeros(self.dim());
        let mut target = vec![0usize; self.n_modes()];
        for (i, s) in self.states.iter().enumerate() {
            let amp = v[i];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            target.copy_from_slice(s);
            for &(n_new, coef) in &cache[s[mode]] {
                target[mode] = n_new;
                if let Some(k) = self.index_of(&target) {
                    out[k] += amp * coef;
                }
            }
        }
        out
    }

    /// Mass of basis states on which a number-conserving hop `b_i† b_j`
    /// (or `a† b_j`) would be cut off by the truncation: some mode sits at
    /// its top level while another mode is occupied, or the total sits at
    /// the cap of a space that cannot hold one more quantum.
    pub fn hop_leak_weights(&self) -> Vec<bool> {
        self.states
            .iter()
            .map(|s| {
                let total: usize = s.iter().sum();
                s.iter().enumerate().any(|(i, &n)| n + 1 == self.mode_dims[i] && total > n)
            })
            .collect()
    }
}

fn enumerate(
    dims: &[usize],
    cap: Option<usize>,
    mode: usize,
    used: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) -> Result<()> {
    if mode == dims.len() {
        if out.len() >= MAX_SPACE_DIM {
            return Err(Error::BasisLimit { count: out.len() + 1, limit: MAX_SPACE_DIM });
        }
        out.push(current.clone());
        return Ok(());
    }
    let mut top = dims[mode] - 1;
    if let Some(c) = cap {
        top = top.min(c - used);
    }
    for n in 0..=top {
        current[mode] = n;
        enumerate(dims, cap, mode + 1, used + n, current, out)?;
    }
    current[mode] = 0;
    Ok(())
}

/// Square sparse complex matrix stored as per-row entry lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            if let Some(slot) = rows[r].iter_mut().find(|(cc, _)| *cc == c) {
                slot.1 += v;
            } else {
                rows[r].push((c, v));
            }
        }
        for row in &mut rows {
            row.retain(|(_, v)| *v != C64::new(0.0, 0.0));
            row.sort_by_key(|(c, _)| *c);
        }
        Self { dim, rows }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)).collect())
    }

    pub fn add(&self, other: &SparseOp) -> Self {
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()).collect())
    }

    /// `self · other`.
    pub fn compose(&self, other: &SparseOp) -> Self {
        let mut triplets = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in &other.rows[k] {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.dim,
            self.rows.iter().map(|row| row.iter().map(|&(c, a)| a * v[c]).sum::<C64>()),
        )
    }

    /// `self · x`.
    pub fn left_mul(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        self.left_mul_acc(x, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += s · self · x`.
    pub fn left_mul_acc(&self, x: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        for col in 0..x.ncols() {
            let xc = x.column(col);
            let mut oc = out.column_mut(col);
            for (r, row) in self.rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &(k, a) in row {
                    acc += a * xc[k];
                }
                oc[r] += s * acc;
            }
        }
    }

    /// `x · self`.
    pub fn right_mul(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), self.dim);
        self.right_mul_acc(x, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += s · x · self`.
    pub fn right_mul_acc(&self, x: &DMatrix<C64>, s: C64, out: &mut DMatrix<C64>) {
        for (k, row) in self.rows.iter().enumerate() {
            let xk = x.column(k);
            for &(c, a) in row {
                let f = s * a;
                let mut oc = out.column_mut(c);
                oc.axpy(f, &xk, C64::new(1.0, 0.0));
            }
        }
    }

    /// `Tr(self · rho)`.
    pub fn trace_with(&self, rho: &DMatrix<C64>) -> C64 {
        self.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum()
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation_vec(&self, v: &DVector<C64>) -> C64 {
        self.triplets().map(|(r, c, a)| v[r].conj() * a * v[c]).sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Upper bound on the spectral norm, `sqrt(‖A‖₁ ‖A‖∞)`.
    pub fn norm_bound(&self) -> f64 {
        let row_max = self.rows.iter().map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        let mut col = vec![0.0; self.dim];
        for (_, c, v) in self.triplets() {
            col[c] += v.norm();
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }
}

/// A pure state over a truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockVector {
    pub space: FockSpace,
    pub amplitudes: DVector<C64>,
}

impl FockVector {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitude of the product state `|n_1, ..., n_N⟩` (zero when outside the space).
    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        self.space
            .index_of(occupations)
            .map(|i| self.amplitudes[i])
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.space == other.space {
            return Ok(self.amplitudes.dotc(&other.amplitudes));
        }
        if self.space.n_modes() != other.space.n_modes() {
            return Err(Error::InvalidState("inner product across different mode counts".into()));
        }
        Ok(self
            .space
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| self.amplitudes[i].conj() * other.amplitude(s))
            .sum())
    }

    /// Re-expresses the state in `space`, returning the discarded norm².
    pub fn embed(&self, space: &FockSpace) -> (FockVector, f64) {
        let mut amps = DVector::zeros(space.dim());
        let mut lost = 0.0;
        for (i, s) in self.space.states().iter().enumerate() {
            match space.index_of(s) {
                Some(k) => amps[k] = self.amplitudes[i],
                None => lost += self.amplitudes[i].norm_sqr(),
            }
        }
        (FockVector { space: space.clone(), amplitudes: amps }, lost)
    }
}
