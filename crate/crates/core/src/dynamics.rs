//! Closed-form dynamics under collective decay `ρ̇ = (NΓ/2) D[C_N] ρ` with
//! `D[C]ρ = 2CρC† - C†Cρ - ρC†C`.
//!
//! Every time argument is the dimensionless `τ = Γ t`; intensities are
//! returned in units of `Γ` (quanta emitted per `1/Γ`).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::collective::{BasisIndex, CouplingConfig};
use crate::error::{Error, Result};
use crate::math::{binomial, ln_binomial, C64};
use crate::series::{validate_times, TimeSeries};
use crate::states::{moments_of, mrl_expectations, ModeMoments, StateSpec};

/// Default relative tolerance of the radiance classification.
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadianceTag {
    Superradiant,
    Normal,
    Subradiant,
    Dark,
    Vacuum,
}

impl fmt::Display for RadianceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RadianceTag::Superradiant => "Superradiant",
            RadianceTag::Normal => "Normal",
            RadianceTag::Subradiant => "Subradiant",
            RadianceTag::Dark => "Dark",
            RadianceTag::Vacuum => "Vacuum",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadianceClass {
    pub tag: RadianceTag,
    /// `F = 1 - R(0)/M(0)`, absent for the vacuum.
    pub dark_fraction: Option<f64>,
    /// `F_N`, the dark fraction of a normally radiating state with the same populations.
    pub normal_fraction: f64,
}

impl fmt::Display for RadianceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dark_fraction {
            Some(fr) => write!(f, "{} F={:.3} F_N={:.3}", self.tag, fr, self.normal_fraction),
            None => write!(f, "{} F=n/a F_N={:.3}", self.tag, self.normal_fraction),
        }
    }
}

/// `(R_U, R_C)`: bright quanta from the diagonal and off-diagonal parts of `S`.
pub fn bright_split(m: &ModeMoments, cfg: &CouplingConfig) -> (f64, f64) {
    let g = cfg.couplings();
    let gn2 = cfg.total_coupling_sq();
    let n = m.n_modes();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        diag += g[i] * g[i] * m.second[(i, i)].re;
        for j in 0..n {
            if i != j {
                off += g[i] * g[j] * m.second[(i, j)].re;
            }
        }
    }
    (diag / gn2, off / gn2)
}

fn decay(cfg: &CouplingConfig, tau: f64) -> f64 {
    (-(cfg.n_modes() as f64) * tau).exp()
}

/// `I_N(τ)/Γ = N R(0) e^{-Nτ}`.
pub fn intensity_at(spec: &StateSpec, cfg: &CouplingConfig, tau: f64) -> Result<f64> {
    let m = moments_of(spec, cfg)?;
    let r = mrl_expectations(&m, cfg).r;
    Ok(cfg.n_modes() as f64 * r * decay(cfg, tau))
}

pub fn intensity_series(spec: &StateSpec, cfg: &CouplingConfig, taus: &[f64]) -> Result<TimeSeries> {
    let m = moments_of(spec, cfg)?;
    let e = mrl_expectations(&m, cfg);
    let n = cfg.n_modes() as f64;
    let mut ts = TimeSeries::new(taus.to_vec(), cfg.gamma())?;
    ts.push("intensity", taus.iter().map(|&t| n * e.r * decay(cfg, t)).collect())?;
    ts.push("M", taus.iter().map(|&t| e.l + e.r * decay(cfg, t)).collect())?;
    ts.push("R", taus.iter().map(|&t| e.r * decay(cfg, t)).collect())?;
    ts.push("L", vec![e.l; taus.len()])?;
    Ok(ts)
}

/// `(I_U, I_C)` at `τ`, both in units of `Γ`.
pub fn split_intensity(spec: &StateSpec, cfg: &CouplingConfig, tau: f64) -> Result<(f64, f64)> {
    if cfg.n_modes() == 1 {
        return Err(Error::SplitUndefined);
    }
    let m = moments_of(spec, cfg)?;
    let (ru, rc) = bright_split(&m, cfg);
    let f = cfg.n_modes() as f64 * decay(cfg, tau);
    Ok((f * ru, f * rc))
}

/// `F_N = 1 - Σ g_j² S_jj / (G_N² Σ S_jj)`; for the vacuum the populations
/// are taken as equal, giving `1 - 1/N`.
pub fn normal_fraction(m: &ModeMoments, cfg: &CouplingConfig) -> f64 {
    let g = cfg.couplings();
    let gn2 = cfg.total_coupling_sq();
    let n = m.n_modes();
    let total: f64 = (0..n).map(|i| m.second[(i, i)].re).sum();
    if total <= 0.0 {
        return 1.0 - 1.0 / n as f64;
    }
    let weighted: f64 = (0..n).map(|i| g[i] * g[i] * m.second[(i, i)].re).sum();
    (1.0 - weighted / (gn2 * total)).clamp(0.0, 1.0)
}

/// `(F, F_N)`; `F` is absent when the state holds no quanta.
pub fn dark_fraction(spec: &StateSpec, cfg: &CouplingConfig) -> Result<(Option<f64>, f64)> {
    let m = moments_of(spec, cfg)?;
    Ok(dark_fraction_from_moments(&m, cfg))
}

/// `F = L/M`. Without inter-mode correlations `F` equals `F_N` and is
/// returned as such; otherwise `L` comes from the Lagrange identity
/// `G_N² L = Σ_{i<j} (g_j² S_ii + g_i² S_jj - g_i g_j (S_ij + S_ji))`,
/// which avoids the cancellation in `M - R`.
pub fn dark_fraction_from_moments(m: &ModeMoments, cfg: &CouplingConfig) -> (Option<f64>, f64) {
    let f_n = normal_fraction(m, cfg);
    let n = m.n_modes();
    let total: f64 = (0..n).map(|i| m.second[(i, i)].re).sum();
    if total <= 0.0 {
        return (None, f_n);
    }
    let uncorrelated = (0..n).all(|i| (0..n).all(|j| i == j || m.second[(i, j)] == C64::new(0.0, 0.0)));
    if uncorrelated {
        return (Some(f_n), f_n);
    }
    let g = cfg.couplings();
    let mut dark = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            dark += g[j] * g[j] * m.second[(i, i)].re + g[i] * g[i] * m.second[(j, j)].re
                - g[i] * g[j] * (m.second[(i, j)].re + m.second[(j, i)].re);
        }
    }
    (Some((dark / (cfg.total_coupling_sq() * total)).clamp(0.0, 1.0)), f_n)
}

pub fn classify(spec: &StateSpec, cfg: &CouplingConfig, epsilon: f64) -> Result<RadianceClass> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon = {epsilon} must be positive")));
    }
    let m = moments_of(spec, cfg)?;
    Ok(classify_moments(&m, cfg, epsilon))
}

/// Classification from moments. `F < F_N` is equivalent to a positive
/// correlated part `R_C`, which is evaluated directly so that states with
/// diagonal `S` land exactly on Normal.
pub fn classify_moments(m: &ModeMoments, cfg: &CouplingConfig, epsilon: f64) -> RadianceClass {
    let e = mrl_expectations(m, cfg);
    let (dark_fraction, normal_fraction) = dark_fraction_from_moments(m, cfg);
    let tag = if e.m <= epsilon {
        RadianceTag::Vacuum
    } else if e.r <= epsilon * e.m {
        RadianceTag::Dark
    } else {
        let (_, rc) = bright_split(m, cfg);
        let g = cfg.couplings();
        let n = m.n_modes();
        let mut scale = 0.0;
        for i in 0..n {
            for j in 0..n {
                scale += g[i] * g[j] * m.second[(i, j)].norm();
            }
        }
        let band = epsilon * scale / cfg.total_coupling_sq();
        if rc > band {
            RadianceTag::Superradiant
        } else if rc < -band {
            RadianceTag::Subradiant
        } else {
            RadianceTag::Normal
        }
    };
    RadianceClass { tag, dark_fraction: if tag == RadianceTag::Vacuum { None } else { dark_fraction }, normal_fraction }
}

/// Rung populations of every ladder reached by a Dicke superposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderPopulations {
    pub t_gamma: Vec<f64>,
    /// Retained basis elements in basis order.
    pub indices: Vec<BasisIndex>,
    /// `values[t][i]` is the population of `indices[i]` at `t_gamma[t]`.
    pub values: Vec<Vec<f64>>,
}

impl LadderPopulations {
    pub fn to_series(&self, gamma: f64) -> Result<TimeSeries> {
        let mut ts = TimeSeries::new(self.t_gamma.clone(), gamma)?;
        for (i, idx) in self.indices.iter().enumerate() {
            let label = format!(
                "P[{}|R={}]",
                idx.degeneracy().iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
                idx.rung()
            );
            ts.push(label, self.values.iter().map(|row| row[i]).collect())?;
        }
        Ok(ts)
    }
}

/// `P_R(τ) = Σ_{k≥R} |a_k|² C(k,R) e^{-RNτ} (1 - e^{-Nτ})^{k-R}` per ladder,
/// accumulated in the log domain.
pub fn ladder_populations(initial: &StateSpec, cfg: &CouplingConfig, taus: &[f64]) -> Result<LadderPopulations> {
    let terms = match initial {
        StateSpec::DickeSuperposition { terms } => terms,
        other => {
            return Err(Error::InvalidState(format!(
                "ladder populations need a Dicke superposition, got {}",
                other.family_name()
            )))
        }
    };
    initial.validate(cfg.n_modes())?;
    validate_times(taus)?;
    if taus.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidConfig("times must be non-negative".into()));
    }
    let mut weights: BTreeMap<BasisIndex, C64> = BTreeMap::new();
    for (a, idx) in terms {
        *weights.entry(idx.clone()).or_insert(C64::new(0.0, 0.0)) += *a;
    }
    // group |a|² by ladder
    let mut ladders: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for (idx, a) in &weights {
        let w = ladders.entry(idx.degeneracy().to_vec()).or_default();
        if w.len() <= idx.rung() {
            w.resize(idx.rung() + 1, 0.0);
        }
        w[idx.rung()] += a.norm_sqr();
    }
    let mut indices: Vec<BasisIndex> = ladders
        .iter()
        .flat_map(|(d, w)| (0..w.len()).map(move |r| BasisIndex::new(d.clone(), r)))
        .collect();
    indices.sort();
    let n = cfg.n_modes() as f64;
    let values = taus
        .iter()
        .map(|&tau| {
            let x = n * tau;
            let ln_survive = -x;
            let ln_decayed = if x == 0.0 { f64::NEG_INFINITY } else { (-(-x).exp_m1()).ln() };
            indices
                .iter()
                .map(|idx| {
                    let w = &ladders[idx.degeneracy()];
                    let r = idx.rung();
                    let mut p = 0.0;
                    for (k, &wk) in w.iter().enumerate().skip(r) {
                        if wk == 0.0 {
                            continue;
                        }
                        let mut ln_term = ln_binomial(k as u64, r as u64) + r as f64 * ln_survive;
                        if k > r {
                            ln_term += (k - r) as f64 * ln_decayed;
                        }
                        p += wk * ln_term.exp();
                    }
                    p
                })
                .collect()
        })
        .collect();
    Ok(LadderPopulations { t_gamma: taus.to_vec(), indices, values })
}

/// Max-abs entry of `A - (B⁻¹)ᵀ D Bᵀ` on the `dim × dim` truncation, where `A`
/// generates the rung populations, `B_ij = C(i-1, j-1)` and `D = diag(1 - i)`.
pub fn pascal_solution_check(dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            -(i as f64)
        } else if j == i + 1 {
            (i + 1) as f64
        } else {
            0.0
        }
    });
    let b = pascal_matrix(dim);
    // B is unit lower triangular: solve B X = I by forward substitution
    let mut b_inv = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            let mut v = if r == c { 1.0 } else { 0.0 };
            for k in 0..r {
                v -= b[(r, k)] * b_inv[(k, c)];
            }
            b_inv[(r, c)] = v;
        }
    }
    let d = DMatrix::from_fn(dim, dim, |i, j| if i == j { -(i as f64) } else { 0.0 });
    let rebuilt = b_inv.transpose() * d * b.transpose();
    Ok((a - rebuilt).amax())
}

/// Lower-triangular Pascal matrix `B_ij = C(i-1, j-1)` (one-based).
pub fn pascal_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i >= j { binomial(i as u64, j as u64) } else { 0.0 })
}

/// `c_ij(τ, 0) = ⟨b_i†(τ) b_j(0)⟩ - ⟨b_i†(τ)⟩⟨b_j(0)⟩` from the regression theorem.
///
/// Only `C_N` decays, and its amplitude does so at `NΓ/2`, so
/// `c_ij = S_ij - μ_i* μ_j - (g_i/G_N)(1 - e^{-Nτ/2})(⟨C_N† b_j⟩ - ⟨C_N†⟩⟨b_j⟩)`.
pub fn two_time_correlation(
    spec: &StateSpec,
    cfg: &CouplingConfig,
    i: usize,
    j: usize,
    taus: &[f64],
) -> Result<Vec<C64>> {
    let n = cfg.n_modes();
    for mode in [i, j] {
        if mode == 0 || mode > n {
            return Err(Error::ModeOutOfRange { mode, n_modes: n });
        }
    }
    validate_times(taus)?;
    let m = moments_of(spec, cfg)?;
    Ok(correlation_from_moments(&m, cfg, i, j, taus))
}

pub fn correlation_from_moments(m: &ModeMoments, cfg: &CouplingConfig, i: usize, j: usize, taus: &[f64]) -> Vec<C64> {
    let (i, j) = (i - 1, j - 1);
    let g = cfg.couplings();
    let gn = cfg.total_coupling();
    let n = cfg.n_modes();
    let c_dag_b: C64 = (0..n).map(|k| m.second[(k, j)] * g[k]).sum::<C64>() / gn;
    let c_dag: C64 = (0..n).map(|k| m.means[k].conj() * g[k]).sum::<C64>() / gn;
    let connected = c_dag_b - c_dag * m.means[j];
    let base = m.second[(i, j)] - m.means[i].conj() * m.means[j];
    taus.iter()
        .map(|&tau| {
            let decayed = -(-(n as f64) * tau / 2.0).exp_m1();
            base - connected * (g[i] / gn * decayed)
        })
        .collect()
}

pub fn correlation_series(
    spec: &StateSpec,
    cfg: &CouplingConfig,
    i: usize,
    j: usize,
    taus: &[f64],
) -> Result<TimeSeries> {
    let c = two_time_correlation(spec, cfg, i, j, taus)?;
    let mut ts = TimeSeries::new(taus.to_vec(), cfg.gamma())?;
    ts.push(format!("re_c{i}{j}"), c.iter().map(|z| z.re).collect())?;
    ts.push(format!("im_c{i}{j}"), c.iter().map(|z| z.im).collect())?;
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Mixture;

    fn uniform(n: usize) -> CouplingConfig {
        CouplingConfig::uniform(n, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn bright_dicke_intensity() {
        let cfg = uniform(5);
        let spec = StateSpec::dicke(BasisIndex::bright(5, 5));
        assert!((intensity_at(&spec, &cfg, 0.0).unwrap() - 25.0).abs() < 1e-12);
        let fock = StateSpec::MultimodeFock { occupations: vec![1, 1, 1] };
        assert!((intensity_at(&fock, &uniform(3), 0.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_examples() {
        let cfg = uniform(2);
        let (u, c) = split_intensity(&StateSpec::dicke(BasisIndex::bright(2, 1)), &cfg, 0.3).unwrap();
        let env = (-0.6f64).exp();
        assert!((u - env).abs() < 1e-14 && (c - env).abs() < 1e-14);
        let (u, c) = split_intensity(&StateSpec::dicke(BasisIndex::new(vec![1], 0)), &cfg, 0.0).unwrap();
        assert!((u + c).abs() < 1e-14 && u > 0.0);
        let mix = StateSpec::IncoherentMixture(Mixture::Thermal(vec![0.3, 1.2]));
        assert_eq!(split_intensity(&mix, &cfg, 0.1).unwrap().1, 0.0);
        let single = StateSpec::IncoherentMixture(Mixture::Thermal(vec![0.3]));
        assert_eq!(split_intensity(&single, &uniform(1), 0.0), Err(Error::SplitUndefined));
    }

    #[test]
    fn classification_examples() {
        let c = classify(&StateSpec::dicke(BasisIndex::bright(5, 5)), &uniform(5), DEFAULT_EPSILON).unwrap();
        assert_eq!(c.tag, RadianceTag::Superradiant);
        assert_eq!(c.to_string(), "Superradiant F=0.000 F_N=0.800");
        let c = classify(&StateSpec::MultimodeFock { occupations: vec![1, 1, 1] }, &uniform(3), DEFAULT_EPSILON).unwrap();
        assert_eq!(c.tag, RadianceTag::Normal);
        let cfg = CouplingConfig::new(vec![0.3, 1.7], 2.0, 0.0).unwrap();
        let c = classify(&StateSpec::dicke(BasisIndex::new(vec![1], 0)), &cfg, DEFAULT_EPSILON).unwrap();
        assert_eq!(c.tag, RadianceTag::Dark);
        let c = classify(&StateSpec::vacuum(3), &uniform(3), DEFAULT_EPSILON).unwrap();
        assert_eq!(c.tag, RadianceTag::Vacuum);
        assert_eq!(c.dark_fraction, None);
    }

    #[test]
    fn populations_at_half_life() {
        let cfg = uniform(5);
        let spec = StateSpec::dicke(BasisIndex::bright(5, 5));
        let tau = 2f64.ln() / 5.0;
        let p = ladder_populations(&spec, &cfg, &[0.0, tau]).unwrap();
        assert_eq!(p.indices.len(), 6);
        let expect = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        // indices are in basis order, which lists rung 5 first
        for (i, idx) in p.indices.iter().enumerate() {
            assert!((p.values[1][i] - expect[idx.rung()] / 32.0).abs() < 1e-14);
            assert_eq!(p.values[0][i], if idx.rung() == 5 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn pascal_examples() {
        let b = pascal_matrix(3);
        assert_eq!(b, DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0, 1.0]));
        assert_eq!(pascal_solution_check(1).unwrap(), 0.0);
        assert!(pascal_solution_check(10).unwrap() <= 1e-12);
    }

    #[test]
    fn dicke_correlation_decays_with_amplitude_rate() {
        let cfg = CouplingConfig::new(vec![1.0, 2.0], 1.0, 0.0).unwrap();
        let spec = StateSpec::dicke(BasisIndex::bright(2, 3));
        let c = two_time_correlation(&spec, &cfg, 1, 2, &[0.0, 0.4]).unwrap();
        let base = 3.0 * 2.0 / 5.0;
        assert!((c[0].re - base).abs() < 1e-12);
        assert!((c[1].re - base * (-0.4f64).exp()).abs() < 1e-12);
    }
}
