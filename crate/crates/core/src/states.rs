//! Initial-state families, their mode moments, bosonic Dicke expansions and
//! truncated Fock representations.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::collective::{collective_transform, dicke_state_in_space, BasisIndex, CouplingConfig};
use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::math::{factorial, C64};

/// Normalization tolerance for amplitudes and probability sequences.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance of the positive-semidefinite check on centered moments.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum Mixture {
    /// Per-mode photon-number distributions `P^j_n`, `n = 0, 1, ...`.
    Distributions(Vec<Vec<f64>>),
    /// Per-mode thermal occupations `n̄_j`.
    Thermal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    DickeSuperposition { terms: Vec<(C64, BasisIndex)> },
    MultimodeFock { occupations: Vec<usize> },
    IncoherentMixture(Mixture),
    /// `Π_j D_j(α_j) S_j(ξ_j) |0⟩`.
    ProductSqueezedCoherent { alpha: Vec<C64>, xi: Vec<C64> },
    /// `D_k(amplitude)` applied to `base`; `mode` is one-based.
    CollectiveDisplaced { base: Box<StateSpec>, mode: usize, amplitude: C64 },
    /// Squeeze operator `exp((ξ* C_N² - ξ C_N†²)/2)` applied to the vacuum.
    CollectiveSqueezedVacuum { xi: C64 },
}

impl StateSpec {
    pub fn vacuum(n_modes: usize) -> Self {
        StateSpec::MultimodeFock { occupations: vec![0; n_modes] }
    }

    pub fn dicke(idx: BasisIndex) -> Self {
        StateSpec::DickeSuperposition { terms: vec![(C64::new(1.0, 0.0), idx)] }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateSpec::DickeSuperposition { .. } => "Dicke superposition",
            StateSpec::MultimodeFock { .. } => "multimode Fock",
            StateSpec::IncoherentMixture(_) => "incoherent mixture",
            StateSpec::ProductSqueezedCoherent { .. } => "product squeezed coherent",
            StateSpec::CollectiveDisplaced { .. } => "collective displaced",
            StateSpec::CollectiveSqueezedVacuum { .. } => "collective squeezed vacuum",
        }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            StateSpec::IncoherentMixture(_) => false,
            StateSpec::CollectiveDisplaced { base, .. } => base.is_pure(),
            _ => true,
        }
    }

    /// True when the state has support on finitely many quanta.
    pub fn is_number_bounded(&self) -> bool {
        match self {
            StateSpec::DickeSuperposition { .. } | StateSpec::MultimodeFock { .. } => true,
            StateSpec::IncoherentMixture(Mixture::Distributions(_)) => true,
            StateSpec::IncoherentMixture(Mixture::Thermal(n)) => n.iter().all(|&x| x == 0.0),
            StateSpec::ProductSqueezedCoherent { alpha, xi } => {
                alpha.iter().chain(xi).all(|z| *z == ZERO)
            }
            StateSpec::CollectiveDisplaced { base, amplitude, .. } => *amplitude == ZERO && base.is_number_bounded(),
            StateSpec::CollectiveSqueezedVacuum { xi } => *xi == ZERO,
        }
    }

    /// Largest total quanta carried by a number-bounded state.
    pub fn max_quanta(&self) -> Option<usize> {
        if !self.is_number_bounded() {
            return None;
        }
        Some(match self {
            StateSpec::DickeSuperposition { terms } => terms.iter().map(|(_, i)| i.total_quanta()).max().unwrap_or(0),
            StateSpec::MultimodeFock { occupations } => occupations.iter().sum(),
            StateSpec::IncoherentMixture(Mixture::Distributions(d)) => {
                d.iter().map(|p| p.len().saturating_sub(1)).sum()
            }
            StateSpec::CollectiveDisplaced { base, .. } => base.max_quanta()?,
            _ => 0,
        })
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        let check_len = |len: usize, what: &str| {
            if len != n_modes {
                Err(Error::InvalidState(format!("{what} has {len} entries for {n_modes} oscillators")))
            } else {
                Ok(())
            }
        };
        match self {
            StateSpec::DickeSuperposition { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidState("Dicke superposition has no terms".into()));
                }
                for (_, idx) in terms {
                    if idx.n_modes() != n_modes {
                        return Err(Error::InvalidState(format!(
                            "basis index {idx} is for {} oscillators, expected {n_modes}",
                            idx.n_modes()
                        )));
                    }
                }
                let norm: f64 = merge_terms(terms).values().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(Error::InvalidState(format!("Dicke amplitudes have squared norm {norm}, expected 1")));
                }
                Ok(())
            }
            StateSpec::MultimodeFock { occupations } => check_len(occupations.len(), "occupation list"),
            StateSpec::IncoherentMixture(Mixture::Distributions(d)) => {
                check_len(d.len(), "distribution list")?;
                for (j, p) in d.iter().enumerate() {
                    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                        return Err(Error::InvalidState(format!("distribution of mode {} has a negative entry", j + 1)));
                    }
                    let s: f64 = p.iter().sum();
                    if (s - 1.0).abs() > NORM_TOL {
                        return Err(Error::InvalidState(format!("distribution of mode {} sums to {s}", j + 1)));
                    }
                }
                Ok(())
            }
            StateSpec::IncoherentMixture(Mixture::Thermal(n)) => {
                check_len(n.len(), "thermal occupation list")?;
                if n.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidState("thermal occupations must be non-negative".into()));
                }
                Ok(())
            }
            StateSpec::ProductSqueezedCoherent { alpha, xi } => {
                check_len(alpha.len(), "alpha list")?;
                check_len(xi.len(), "xi list")?;
                if alpha.iter().chain(xi).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::InvalidState("amplitudes must be finite".into()));
                }
                Ok(())
            }
            StateSpec::CollectiveDisplaced { base, mode, amplitude } => {
                if *mode == 0 || *mode > n_modes {
                    return Err(Error::ModeOutOfRange { mode: *mode, n_modes });
                }
                if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                    return Err(Error::InvalidState("displacement amplitude must be finite".into()));
                }
                base.validate(n_modes)
            }
            StateSpec::CollectiveSqueezedVacuum { xi } => {
                if !(xi.re.is_finite() && xi.im.is_finite()) {
                    return Err(Error::InvalidState("squeeze parameter must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

/// Sums duplicate indices of a Dicke superposition.
fn merge_terms(terms: &[(C64, BasisIndex)]) -> BTreeMap<BasisIndex, C64> {
    let mut map = BTreeMap::new();
    for (a, idx) in terms {
        *map.entry(idx.clone()).or_insert(ZERO) += *a;
    }
    map
}

/// First moments `μ_j = ⟨b_j⟩` and second moments `S_ij = ⟨b_i† b_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    pub means: DVector<C64>,
    pub second: DMatrix<C64>,
}

impl ModeMoments {
    pub fn zeros(n: usize) -> Self {
        Self { means: DVector::zeros(n), second: DMatrix::zeros(n, n) }
    }

    pub fn n_modes(&self) -> usize {
        self.means.len()
    }

    /// `S - μ* μᵀ`, the Gram matrix of the fluctuations `b_j - μ_j`.
    pub fn centered(&self) -> DMatrix<C64> {
        let n = self.n_modes();
        DMatrix::from_fn(n, n, |i, j| self.second[(i, j)] - self.means[i].conj() * self.means[j])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes();
        if self.second.nrows() != n || self.second.ncols() != n {
            return Err(Error::InvalidState("second-moment matrix has the wrong shape".into()));
        }
        let scale = 1.0 + self.second.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            if self.second[(i, i)].im.abs() > NORM_TOL * scale || self.second[(i, i)].re < -NORM_TOL * scale {
                return Err(Error::InvalidState(format!("diagonal moment S_{0}{0} is not a non-negative real", i + 1)));
            }
            for j in i + 1..n {
                if (self.second[(i, j)] - self.second[(j, i)].conj()).norm() > NORM_TOL * scale {
                    return Err(Error::InvalidState("second-moment matrix is not Hermitian".into()));
                }
            }
        }
        let c = self.centered();
        let h = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        let min = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL * scale {
            return Err(Error::InvalidState(format!("centered moments are not positive semidefinite (eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    /// Moments after the collective displacement `D_k(β)` with `u = U_k·`.
    pub fn displaced(&self, u: &[f64], beta: C64) -> Self {
        let n = self.n_modes();
        let shift: Vec<C64> = u.iter().map(|x| beta * *x).collect();
        let means = DVector::from_fn(n, |j, _| self.means[j] + shift[j]);
        let second = DMatrix::from_fn(n, n, |i, j| {
            self.second[(i, j)]
                + self.means[i].conj() * shift[j]
                + shift[i].conj() * self.means[j]
                + shift[i].conj() * shift[j]
        });
        Self { means, second }
    }
}

/// Moments of the collective modes `C_k` for a Dicke superposition: returns
/// `(⟨C_k⟩, ⟨C_k† C_l⟩)`.
fn collective_moments(terms: &[(C64, BasisIndex)], n: usize) -> (DVector<C64>, DMatrix<C64>) {
    let psi = merge_terms(terms);
    // φ_k = C_k ψ stored by collective occupations
    let lowered: Vec<BTreeMap<BasisIndex, C64>> = (0..n)
        .map(|k| {
            let mut out = BTreeMap::new();
            for (idx, a) in &psi {
                let mut occ = idx.collective_occupations();
                let m = occ[k];
                if m == 0 {
                    continue;
                }
                occ[k] -= 1;
                *out.entry(BasisIndex::from_collective_occupations(&occ)).or_insert(ZERO) += *a * (m as f64).sqrt();
            }
            out
        })
        .collect();
    let mean = DVector::from_fn(n, |k, _| {
        lowered[k]
            .iter()
            .map(|(idx, v)| psi.get(idx).map_or(ZERO, |a| a.conj() * v))
            .sum()
    });
    let q = DMatrix::from_fn(n, n, |k, l| {
        lowered[k]
            .iter()
            .map(|(idx, v)| lowered[l].get(idx).map_or(ZERO, |w| v.conj() * w))
            .sum()
    });
    (mean, q)
}

/// Converts collective-mode moments to oscillator moments via `b_j = Σ_k U_kj C_k`.
fn from_collective(u: &DMatrix<f64>, mean: &DVector<C64>, q: &DMatrix<C64>) -> ModeMoments {
    let uc = u.map(|x| C64::new(x, 0.0));
    let means = uc.transpose() * mean;
    let second = uc.transpose() * q * &uc;
    ModeMoments { means, second }
}

/// Mean photon number of a single-mode distribution.
fn distribution_mean(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, x)| n as f64 * x).sum()
}

pub fn moments_of(spec: &StateSpec, cfg: &CouplingConfig) -> Result<ModeMoments> {
    let n = cfg.n_modes();
    spec.validate(n)?;
    Ok(match spec {
        StateSpec::DickeSuperposition { terms } => {
            let (mean, q) = collective_moments(terms, n);
            from_collective(&collective_transform(cfg), &mean, &q)
        }
        StateSpec::MultimodeFock { occupations } => ModeMoments {
            means: DVector::zeros(n),
            second: DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(occupations[i] as f64, 0.0) } else { ZERO }),
        },
        StateSpec::IncoherentMixture(m) => {
            let diag: Vec<f64> = match m {
                Mixture::Distributions(d) => d.iter().map(|p| distribution_mean(p)).collect(),
                Mixture::Thermal(nbar) => nbar.clone(),
            };
            ModeMoments {
                means: DVector::zeros(n),
                second: DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO }),
            }
        }
        StateSpec::ProductSqueezedCoherent { alpha, xi } => ModeMoments {
            means: DVector::from_column_slice(alpha),
            second: DMatrix::from_fn(n, n, |i, j| {
                let mut s = alpha[i].conj() * alpha[j];
                if i == j {
                    s += C64::new(xi[i].norm().sinh().powi(2), 0.0);
                }
                s
            }),
        },
        StateSpec::CollectiveDisplaced { base, mode, amplitude } => {
            let u = collective_transform(cfg);
            let row: Vec<f64> = u.row(mode - 1).iter().copied().collect();
            moments_of(base, cfg)?.displaced(&row, *amplitude)
        }
        StateSpec::CollectiveSqueezedVacuum { xi } => {
            let mut q = DMatrix::zeros(n, n);
            q[(n - 1, n - 1)] = C64::new(xi.norm().sinh().powi(2), 0.0);
            from_collective(&collective_transform(cfg), &DVector::zeros(n), &q)
        }
    })
}

/// Expectations of the total, bright and dark quanta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mrl {
    pub m: f64,
    pub r: f64,
    pub l: f64,
}

pub fn mrl_expectations(m: &ModeMoments, cfg: &CouplingConfig) -> Mrl {
    let g = cfg.couplings();
    let gn2 = cfg.total_coupling_sq();
    let n = m.n_modes();
    let total: f64 = (0..n).map(|i| m.second[(i, i)].re).sum::<f64>().max(0.0);
    let mut bright = ZERO;
    for i in 0..n {
        for j in 0..n {
            bright += m.second[(i, j)] * (g[i] * g[j]);
        }
    }
    let r = (bright.re / gn2).max(0.0).min(total);
    Mrl { m: total, r, l: (total - r).max(0.0) }
}

/// A truncated Dicke-basis expansion together with the norm² it misses.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub terms: Vec<(C64, BasisIndex)>,
    pub tail_mass: f64,
}

/// `⟨n|D(β)|m⟩ = e^{-|β|²/2} Σ_k √(n! m!) / (k! (n-k)! (m-k)!) β^{n-k} (-β*)^{m-k}`.
pub fn displacement_element(n: usize, m: usize, beta: C64) -> C64 {
    let pref = (-0.5 * beta.norm_sqr()).exp();
    let ln_nm = 0.5 * (crate::math::ln_factorial(n as u64) + crate::math::ln_factorial(m as u64));
    let mut acc = ZERO;
    for k in 0..=n.min(m) {
        let ln_mag = ln_nm
            - crate::math::ln_factorial(k as u64)
            - crate::math::ln_factorial((n - k) as u64)
            - crate::math::ln_factorial((m - k) as u64);
        let term = crate::math::cpowi(beta, n - k) * crate::math::cpowi(-beta.conj(), m - k);
        acc += term * ln_mag.exp();
    }
    acc * pref
}

/// Amplitude `λ_R` of `|e_0, Φ^{2R}_0⟩` in the bright-mode squeezed vacuum.
pub fn squeezed_vacuum_amplitudes(xi: C64, count: usize) -> Vec<C64> {
    let r = xi.norm();
    let phase = if r == 0.0 { C64::new(1.0, 0.0) } else { xi / r };
    let ratio = -phase * r.tanh();
    let mut out = Vec::with_capacity(count);
    let mut c = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    for k in 0..count {
        if k > 0 {
            c *= ratio * ((2 * k - 1) as f64 / (2 * k) as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Closed-form expansion over the bosonic Dicke basis, keeping at most
/// `max_terms` levels of each displaced or squeezed collective mode.
pub fn expansion_coefficients(spec: &StateSpec, cfg: &CouplingConfig, max_terms: usize) -> Result<Expansion> {
    let n = cfg.n_modes();
    spec.validate(n)?;
    match spec {
        StateSpec::DickeSuperposition { terms } => Ok(Expansion {
            terms: merge_terms(terms).into_iter().map(|(i, a)| (a, i)).collect(),
            tail_mass: 0.0,
        }),
        StateSpec::MultimodeFock { occupations } if occupations.iter().all(|&x| x == 0) => Ok(Expansion {
            terms: vec![(C64::new(1.0, 0.0), BasisIndex::vacuum(n))],
            tail_mass: 0.0,
        }),
        StateSpec::CollectiveSqueezedVacuum { xi } => {
            let amps = squeezed_vacuum_amplitudes(*xi, max_terms);
            let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let terms = amps
                .into_iter()
                .enumerate()
                .filter(|(_, a)| *a != ZERO)
                .map(|(k, a)| (a, BasisIndex::bright(n, 2 * k)))
                .collect();
            Ok(Expansion { terms, tail_mass: (1.0 - kept).max(0.0) })
        }
        StateSpec::CollectiveDisplaced { base, mode, amplitude } => {
            let inner = expansion_coefficients(base, cfg, max_terms)?;
            let mut out: BTreeMap<BasisIndex, C64> = BTreeMap::new();
            for (a, idx) in &inner.terms {
                let occ = idx.collective_occupations();
                let m = occ[mode - 1];
                for level in 0..m + max_terms {
                    let d = displacement_element(level, m, *amplitude);
                    if d == ZERO {
                        continue;
                    }
                    let mut target = occ.clone();
                    target[mode - 1] = level;
                    *out.entry(BasisIndex::from_collective_occupations(&target)).or_insert(ZERO) += *a * d;
                }
            }
            let kept: f64 = out.values().map(|a| a.norm_sqr()).sum();
            // the displacement is unitary, so the discarded mass is whatever is missing
            let tail_mass = (1.0 - kept).max(0.0);
            Ok(Expansion { terms: out.into_iter().filter(|(_, a)| *a != ZERO).map(|(i, a)| (a, i)).collect(), tail_mass })
        }
        other => Err(Error::NoClosedForm(other.family_name())),
    }
}

/// Truncated Fock-space form of a state.
#[derive(Debug, Clone)]
pub enum FockState {
    Pure(FockVector),
    Mixed(DensityOperator),
}

impl FockState {
    pub fn space(&self) -> &FockSpace {
        match self {
            FockState::Pure(v) => &v.space,
            FockState::Mixed(r) => &r.space,
        }
    }

    pub fn density(&self) -> DensityOperator {
        match self {
            FockState::Pure(v) => DensityOperator::from_pure(v),
            FockState::Mixed(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockRepresentation {
    pub state: FockState,
    /// Norm² (pure) or probability (mixed) discarded by the truncation.
    pub tail_mass: f64,
}

/// Single-mode amplitudes `⟨n| D(α) S(ξ) |0⟩` for `n = 0..len`.
pub fn squeezed_coherent_amplitudes(alpha: C64, xi: C64, len: usize) -> Vec<C64> {
    let r = xi.norm();
    let phase = if r == 0.0 { C64::new(1.0, 0.0) } else { xi / r };
    let (ch, th) = (r.cosh(), r.tanh());
    let gamma = alpha * ch + alpha.conj() * phase * r.sinh();
    let pref = (-0.5 * alpha.norm_sqr() - 0.5 * alpha.conj() * alpha.conj() * phase * th).exp() / ch.sqrt();
    // h_n = s^n H_n(w / s) with s² = e^{iθ} tanh r / 2, w = γ / (2 cosh r)
    let s2 = phase * th * 0.5;
    let w = gamma / (2.0 * ch);
    let mut out = Vec::with_capacity(len);
    let (mut h_prev, mut h) = (ZERO, C64::new(1.0, 0.0));
    for k in 0..len {
        out.push(pref * h / factorial(k as u64).sqrt());
        let next = w * h * 2.0 - s2 * h_prev * (2.0 * k as f64);
        h_prev = h;
        h = next;
    }
    out
}

fn thermal_distribution(nbar: f64, len: usize) -> Vec<f64> {
    let q = nbar / (nbar + 1.0);
    (0..len).map(|n| q.powi(n as i32) / (nbar + 1.0)).collect()
}

/// Applies `D_k(β) = Π_j D_j(U_kj β)` in normal-ordered form: every lowering
/// exponential first (exact on the space), then the raising ones, so the
/// result is the exact projection of the displaced state onto the space.
pub fn apply_collective_displacement(space: &FockSpace, v: &DVector<C64>, coeffs: &[f64], beta: C64) -> DVector<C64> {
    let mut out = v.clone();
    let mut norm_sq = 0.0;
    for (j, &u) in coeffs.iter().enumerate() {
        let b = beta * u;
        if b == ZERO {
            continue;
        }
        norm_sq += b.norm_sqr();
        let lower = -b.conj();
        out = space.apply_single_mode(&out, j, |n| {
            (0..=n)
                .map(|m| {
                    let k = n - m;
                    let mag = (factorial(n as u64) / factorial(m as u64)).sqrt() / factorial(k as u64);
                    (m, crate::math::cpowi(lower, k) * mag)
                })
                .collect()
        });
    }
    let cap = space.max_total().unwrap_or(usize::MAX);
    for (j, &u) in coeffs.iter().enumerate() {
        let b = beta * u;
        if b == ZERO {
            continue;
        }
        let top = space.mode_dims()[j] - 1;
        out = space.apply_single_mode(&out, j, |m| {
            (m..=top.min(cap))
                .map(|n| {
                    let k = n - m;
                    let mag = (factorial(n as u64) / factorial(m as u64)).sqrt() / factorial(k as u64);
                    (n, crate::math::cpowi(b, k) * mag)
                })
                .collect()
        });
    }
    out * C64::new((-0.5 * norm_sq).exp(), 0.0)
}

/// Truncated Fock representation over the space of `N` oscillators holding
/// at most `max_quanta` quanta. Fails when the discarded mass exceeds `tail_tol`.
pub fn fock_representation(
    spec: &StateSpec,
    cfg: &CouplingConfig,
    max_quanta: usize,
    tail_tol: f64,
) -> Result<FockRepresentation> {
    let space = FockSpace::number_capped(cfg.n_modes(), max_quanta)?;
    fock_representation_in(spec, cfg, &space, tail_tol)
}

/// Same as [`fock_representation`] over a caller-supplied space of `N` modes.
pub fn fock_representation_in(
    spec: &StateSpec,
    cfg: &CouplingConfig,
    space: &FockSpace,
    tail_tol: f64,
) -> Result<FockRepresentation> {
    let n = cfg.n_modes();
    spec.validate(n)?;
    if space.n_modes() != n {
        return Err(Error::InvalidState("Fock space mode count differs from configuration".into()));
    }
    let rep = build_representation(spec, cfg, space)?;
    if rep.tail_mass > tail_tol {
        return Err(Error::Truncation { tail: rep.tail_mass, threshold: tail_tol });
    }
    Ok(rep)
}

fn pure(space: &FockSpace, amplitudes: DVector<C64>) -> FockRepresentation {
    let tail_mass = (1.0 - amplitudes.norm_squared()).max(0.0);
    FockRepresentation { state: FockState::Pure(FockVector { space: space.clone(), amplitudes }), tail_mass }
}

fn build_representation(spec: &StateSpec, cfg: &CouplingConfig, space: &FockSpace) -> Result<FockRepresentation> {
    let n = cfg.n_modes();
    match spec {
        StateSpec::DickeSuperposition { terms } => {
            let mut amps = DVector::zeros(space.dim());
            let mut missing = 0.0;
            for (idx, a) in merge_terms(terms) {
                if space.max_total().is_some_and(|c| idx.total_quanta() > c) {
                    missing += a.norm_sqr();
                    continue;
                }
                let v = dicke_state_in_space(&idx, cfg, space)?;
                amps += v.amplitudes * a;
            }
            let mut rep = pure(space, amps);
            rep.tail_mass = rep.tail_mass.max(missing);
            Ok(rep)
        }
        StateSpec::MultimodeFock { occupations } => match space.index_of(occupations) {
            Some(_) => Ok(pure(space, space.basis_vector(occupations)?)),
            None => Ok(pure(space, DVector::zeros(space.dim()))),
        },
        StateSpec::IncoherentMixture(m) => {
            let dists: Vec<Vec<f64>> = match m {
                Mixture::Distributions(d) => d.clone(),
                Mixture::Thermal(nbar) => {
                    nbar.iter().enumerate().map(|(j, &x)| thermal_distribution(x, space.mode_dims()[j])).collect()
                }
            };
            let mut data = DMatrix::zeros(space.dim(), space.dim());
            let mut kept = 0.0;
            for (i, s) in space.states().iter().enumerate() {
                let p: f64 = s.iter().enumerate().map(|(j, &k)| dists[j].get(k).copied().unwrap_or(0.0)).product();
                data[(i, i)] = C64::new(p, 0.0);
                kept += p;
            }
            Ok(FockRepresentation {
                state: FockState::Mixed(DensityOperator::new(space.clone(), data)?),
                tail_mass: (1.0 - kept).max(0.0),
            })
        }
        StateSpec::ProductSqueezedCoherent { alpha, xi } => {
            let per_mode: Vec<Vec<C64>> =
                (0..n).map(|j| squeezed_coherent_amplitudes(alpha[j], xi[j], space.mode_dims()[j])).collect();
            let amps = DVector::from_iterator(
                space.dim(),
                space.states().iter().map(|s| s.iter().enumerate().map(|(j, &k)| per_mode[j][k]).product::<C64>()),
            );
            Ok(pure(space, amps))
        }
        StateSpec::CollectiveDisplaced { base, mode, amplitude } => {
            let inner = build_representation(base, cfg, space)?;
            let u = collective_transform(cfg);
            let row: Vec<f64> = u.row(mode - 1).iter().copied().collect();
            let map = |v: &DVector<C64>| apply_collective_displacement(space, v, &row, *amplitude);
            match inner.state {
                FockState::Pure(v) => {
                    let mut rep = pure(space, map(&v.amplitudes));
                    rep.tail_mass = rep.tail_mass.max(inner.tail_mass);
                    Ok(rep)
                }
                FockState::Mixed(rho) => {
                    let out = rho.conjugate_by(map);
                    let tail = (1.0 - out.trace().re).max(inner.tail_mass);
                    Ok(FockRepresentation { state: FockState::Mixed(out), tail_mass: tail })
                }
            }
        }
        StateSpec::CollectiveSqueezedVacuum { xi } => {
            let cap = space.max_total().unwrap_or_else(|| space.mode_dims().iter().map(|d| d - 1).sum());
            let lambdas = squeezed_vacuum_amplitudes(*xi, cap / 2 + 1);
            let mut amps = DVector::zeros(space.dim());
            for (k, lam) in lambdas.iter().enumerate() {
                if *lam == ZERO {
                    continue;
                }
                let v = dicke_state_in_space(&BasisIndex::bright(n, 2 * k), cfg, space)?;
                amps += v.amplitudes * *lam;
            }
            Ok(pure(space, amps))
        }
    }
}

/// Expands a Fock-space vector over the bosonic Dicke basis using
/// `b_j† = Σ_k U_kj C_k†`.
pub fn dicke_expansion_of_fock(v: &FockVector, cfg: &CouplingConfig) -> Result<Vec<(C64, BasisIndex)>> {
    let n = cfg.n_modes();
    if v.space.n_modes() != n {
        return Err(Error::InvalidState("Fock vector mode count differs from configuration".into()));
    }
    let u = collective_transform(cfg);
    let top = (0..v.space.dim())
        .filter(|&i| v.amplitudes[i] != ZERO)
        .map(|i| v.space.total_quanta(i))
        .max()
        .unwrap_or(0);
    let collective = FockSpace::number_capped(n, top)?;
    let mut acc = DVector::zeros(collective.dim());
    for (i, s) in v.space.states().iter().enumerate() {
        let a = v.amplitudes[i];
        if a == ZERO {
            continue;
        }
        let factors: Vec<(Vec<C64>, usize)> = s
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(j, &k)| ((0..n).map(|c| C64::new(u[(c, j)], 0.0)).collect(), k))
            .collect();
        acc += collective.creation_polynomial(&factors) * a;
    }
    let mut terms: Vec<(C64, BasisIndex)> = collective
        .states()
        .iter()
        .enumerate()
        .filter(|(i, _)| acc[*i].norm() > 1e-15)
        .map(|(i, s)| (acc[i], BasisIndex::from_collective_occupations(s)))
        .collect();
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(terms)
}

/// Two-mode MOON state `(|m,0⟩ + |0,n⟩)/√2` written in the bosonic Dicke basis.
pub fn moon_state(m: usize, n: usize, cfg: &CouplingConfig) -> Result<StateSpec> {
    if cfg.n_modes() != 2 {
        return Err(Error::InvalidState(format!("MOON states need 2 oscillators, got {}", cfg.n_modes())));
    }
    if m == 0 && n == 0 {
        return Err(Error::InvalidState("MOON state with m = n = 0 is not normalizable".into()));
    }
    let space = FockSpace::number_capped(2, m.max(n))?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = DVector::zeros(space.dim());
    amps[space.index_of(&[m, 0]).expect("in space")] += C64::new(h, 0.0);
    amps[space.index_of(&[0, n]).expect("in space")] += C64::new(h, 0.0);
    let norm = amps.norm();
    amps /= C64::new(norm, 0.0);
    let terms = dicke_expansion_of_fock(&FockVector { space, amplitudes: amps }, cfg)?;
    Ok(StateSpec::DickeSuperposition { terms })
}
