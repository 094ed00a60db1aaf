//! Collective modes of a star-coupled oscillator ensemble and the bosonic
//! Dicke basis they generate.
//!
//! With couplings `g_j` to a central mode, the bright collective mode is
//! `C_N = Σ_j g_j b_j / G_N`. The remaining `N - 1` modes follow the explicit
//! orthogonal completion
//!
//! ```text
//! C_k = (g_{k+1} Σ_{j<=k} g_j b_j - G_k² b_{k+1}) / (G_k G_{k+1}),   k < N
//! ```
//!
//! where `G_k = sqrt(Σ_{j<=k} g_j²)`. A basis element `|d_L, Φ^R_L⟩` puts
//! `m_k` quanta in each dark mode `C_k` (`Σ m_k = L`) and `R` quanta in `C_N`.

use std::cmp::{Ordering, Reverse};
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::math::{binomial, C64};

/// Default cap on the number of basis elements returned by [`enumerate_basis`].
pub const DEFAULT_BASIS_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    couplings: Vec<f64>,
    kappa: f64,
    omega: f64,
}

impl CouplingConfig {
    pub fn new(couplings: Vec<f64>, kappa: f64, omega: f64) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidConfig("at least one oscillator is required".into()));
        }
        if let Some((j, g)) = couplings.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidConfig(format!("coupling g_{} = {g} must be positive", j + 1)));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidConfig(format!("kappa = {kappa} must be positive")));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidConfig(format!("omega = {omega} must be finite")));
        }
        Ok(Self { couplings, kappa, omega })
    }

    pub fn uniform(n_modes: usize, g: f64, kappa: f64, omega: f64) -> Result<Self> {
        Self::new(vec![g; n_modes], kappa, omega)
    }

    pub fn n_modes(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `G_N`, the coupling of the bright mode to the central oscillator.
    pub fn total_coupling(&self) -> f64 {
        self.total_coupling_sq().sqrt()
    }

    /// `G_N² = Σ g_j²`, summed directly so uniform couplings stay exact.
    pub fn total_coupling_sq(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }

    /// Effective single-oscillator decay rate `Γ = 4 G_N² / (N κ)`.
    pub fn gamma(&self) -> f64 {
        let g = self.total_coupling();
        4.0 * g * g / (self.n_modes() as f64 * self.kappa)
    }

    /// Collective decay rate `N Γ` of the bright mode population.
    pub fn collective_rate(&self) -> f64 {
        self.n_modes() as f64 * self.gamma()
    }

    /// Unit vector `g / G_N` defining the bright mode.
    pub fn bright_direction(&self) -> Vec<f64> {
        let g = self.total_coupling();
        self.couplings.iter().map(|c| c / g).collect()
    }

    /// Same configuration with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.couplings.iter().map(|g| g * factor).collect(), self.kappa * factor, self.omega)
    }
}

pub fn cumulative_norms(cfg: &CouplingConfig) -> Vec<f64> {
    let mut acc = 0.0;
    cfg.couplings()
        .iter()
        .map(|g| {
            acc += g * g;
            acc.sqrt()
        })
        .collect()
}

/// Orthogonal matrix whose row `k` expresses `C_{k+1}` in terms of the `b_j`.
pub fn collective_transform(cfg: &CouplingConfig) -> DMatrix<f64> {
    let n = cfg.n_modes();
    let g = cfg.couplings();
    let norms = cumulative_norms(cfg);
    let mut u = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        // row for C_{k+1}: uses G_{k+1}, G_{k+2}, g_{k+2}
        let gk = norms[k];
        let gk1 = norms[k + 1];
        let denom = gk * gk1;
        for j in 0..=k {
            u[(k, j)] = g[k + 1] * g[j] / denom;
        }
        u[(k, k + 1)] = -gk * gk / denom;
    }
    let gn = norms[n - 1];
    for j in 0..n {
        u[(n - 1, j)] = g[j] / gn;
    }
    u
}

/// Label of a bosonic Dicke basis state: dark-mode occupations and rung.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    degeneracy: Vec<usize>,
    rung: usize,
}

impl BasisIndex {
    pub fn new(degeneracy: Vec<usize>, rung: usize) -> Self {
        Self { degeneracy, rung }
    }

    /// Bottom of the lowest ladder, `|e_0, Φ^0_0⟩`, for `n_modes` oscillators.
    pub fn vacuum(n_modes: usize) -> Self {
        Self { degeneracy: vec![0; n_modes.saturating_sub(1)], rung: 0 }
    }

    /// `|e_0, Φ^R_0⟩`.
    pub fn bright(n_modes: usize, rung: usize) -> Self {
        Self { degeneracy: vec![0; n_modes.saturating_sub(1)], rung }
    }

    /// `|m e_k, Φ^R_m⟩` with `k` one-based.
    pub fn on_dark_mode(n_modes: usize, k: usize, m: usize, rung: usize) -> Self {
        let mut degeneracy = vec![0; n_modes.saturating_sub(1)];
        degeneracy[k - 1] = m;
        Self { degeneracy, rung }
    }

    /// Builds an index from occupations `(m_1, ..., m_{N-1}, R)` of the collective modes.
    pub fn from_collective_occupations(occ: &[usize]) -> Self {
        let (rung, degeneracy) = occ.split_last().expect("at least one collective mode");
        Self { degeneracy: degeneracy.to_vec(), rung: *rung }
    }

    pub fn degeneracy(&self) -> &[usize] {
        &self.degeneracy
    }

    pub fn rung(&self) -> usize {
        self.rung
    }

    /// `L = Σ m_k`, the number of dark quanta.
    pub fn dark_quanta(&self) -> usize {
        self.degeneracy.iter().sum()
    }

    /// `M = L + R`.
    pub fn total_quanta(&self) -> usize {
        self.dark_quanta() + self.rung
    }

    pub fn n_modes(&self) -> usize {
        self.degeneracy.len() + 1
    }

    /// Occupations `(m_1, ..., m_{N-1}, R)` of the collective modes.
    pub fn collective_occupations(&self) -> Vec<usize> {
        let mut v = self.degeneracy.clone();
        v.push(self.rung);
        v
    }

    fn sort_key(&self) -> (usize, Reverse<usize>, &[usize]) {
        (self.total_quanta(), Reverse(self.rung), &self.degeneracy)
    }
}

impl Ord for BasisIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for BasisIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.degeneracy.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "; R={})", self.rung)
    }
}

/// Result of a collective ladder operator acting on a basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderAction {
    pub coefficient: f64,
    pub result: Option<BasisIndex>,
}

impl LadderAction {
    fn annihilated() -> Self {
        Self { coefficient: 0.0, result: None }
    }
}

/// All dark-mode occupation vectors of length `len` summing to `total`,
/// in ascending lexicographic order.
pub fn degeneracy_vectors(len: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(len: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == len {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for m in 0..=remaining {
            prefix.push(m);
            rec(len, remaining - m, prefix, out);
            prefix.pop();
        }
    }
    if len == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    rec(len, total, &mut Vec::with_capacity(len), &mut out);
    out
}

pub fn enumerate_basis(n_modes: usize, max_quanta: usize) -> Result<Vec<BasisIndex>> {
    enumerate_basis_with_limit(n_modes, max_quanta, DEFAULT_BASIS_LIMIT)
}

/// Every basis element with `L + R <= max_quanta`, ordered by total quanta,
/// then by descending rung, then lexicographically by degeneracy vector.
pub fn enumerate_basis_with_limit(n_modes: usize, max_quanta: usize, limit: usize) -> Result<Vec<BasisIndex>> {
    if n_modes == 0 {
        return Err(Error::InvalidConfig("n_modes must be at least 1".into()));
    }
    // the number of states with at most M quanta in N modes is C(M + N, N)
    let count = binomial((max_quanta + n_modes) as u64, n_modes as u64);
    if count > limit as f64 {
        return Err(Error::BasisLimit { count: count.min(usize::MAX as f64) as usize, limit });
    }
    let mut out = Vec::with_capacity(count as usize);
    for total in 0..=max_quanta {
        for rung in (0..=total).rev() {
            for d in degeneracy_vectors(n_modes - 1, total - rung) {
                out.push(BasisIndex::new(d, rung));
            }
        }
    }
    Ok(out)
}

/// Applies `C_k` (or `C_k†` when `raise`) to a basis element; `mode` is one-based.
pub fn apply_collective_ladder(idx: &BasisIndex, mode: usize, raise: bool) -> Result<LadderAction> {
    let n = idx.n_modes();
    if mode == 0 || mode > n {
        return Err(Error::ModeOutOfRange { mode, n_modes: n });
    }
    let mut occ = idx.collective_occupations();
    let m = occ[mode - 1];
    if raise {
        occ[mode - 1] += 1;
        Ok(LadderAction {
            coefficient: ((m + 1) as f64).sqrt(),
            result: Some(BasisIndex::from_collective_occupations(&occ)),
        })
    } else if m == 0 {
        Ok(LadderAction::annihilated())
    } else {
        occ[mode - 1] -= 1;
        Ok(LadderAction {
            coefficient: (m as f64).sqrt(),
            result: Some(BasisIndex::from_collective_occupations(&occ)),
        })
    }
}

/// Expands a basis element over the product Fock basis `|n_1, ..., n_N⟩`
/// truncated at `max_quanta` total quanta.
pub fn dicke_state_fock_vector(idx: &BasisIndex, cfg: &CouplingConfig, max_quanta: usize) -> Result<FockVector> {
    let space = FockSpace::number_capped(cfg.n_modes(), max_quanta)?;
    dicke_state_in_space(idx, cfg, &space)
}

/// Same as [`dicke_state_fock_vector`] over a caller-supplied space.
pub fn dicke_state_in_space(idx: &BasisIndex, cfg: &CouplingConfig, space: &FockSpace) -> Result<FockVector> {
    let n = cfg.n_modes();
    if idx.n_modes() != n {
        return Err(Error::InvalidState(format!(
            "basis index {idx} has {} modes, configuration has {n}",
            idx.n_modes()
        )));
    }
    if space.n_modes() != n {
        return Err(Error::InvalidState("Fock space mode count differs from configuration".into()));
    }
    let u = collective_transform(cfg);
    let factors: Vec<(Vec<C64>, usize)> = idx
        .collective_occupations()
        .into_iter()
        .enumerate()
        .filter(|(_, m)| *m > 0)
        .map(|(k, m)| ((0..n).map(|j| C64::new(u[(k, j)], 0.0)).collect(), m))
        .collect();
    let amplitudes = space.creation_polynomial(&factors);
    let norm = amplitudes.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Truncation { tail: (1.0 - norm * norm).abs(), threshold: 1e-9 });
    }
    Ok(FockVector { space: space.clone(), amplitudes })
}

/// Eigenvalue `ω (l + n₊ + n₋) + G_N (n₊ − n₋)` of the star Hamiltonian (ħ = 1).
pub fn eigen_energy(l: usize, n_plus: usize, n_minus: usize, cfg: &CouplingConfig) -> f64 {
    cfg.omega() * (l + n_plus + n_minus) as f64 + cfg.total_coupling() * (n_plus as f64 - n_minus as f64)
}
