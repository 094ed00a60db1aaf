//! State preparation: coupled-waveguide pre-evolution and Law–Eberly pulse
//! synthesis on a collective mode.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::collective::{collective_transform, CouplingConfig};
use crate::density::DensityOperator;
use crate::dynamics::dark_fraction_from_moments;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::math::C64;
use crate::states::ModeMoments;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Amplitudes below this magnitude are treated as empty levels in synthesis.
const LEVEL_TOL: f64 = 1e-14;
/// Largest amplitude allowed on the truncation edge before a JC pulse.
const EDGE_TOL: f64 = 1e-12;

/// Single-excitation propagator of `N` evanescently coupled waveguides with
/// nearest-neighbour coupling `J`; column `q` is the output of a photon
/// launched into guide `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguidePropagator {
    pub n_guides: usize,
    pub coupling: f64,
    pub omega: f64,
    pub t: f64,
    pub matrix: DMatrix<C64>,
}

pub fn waveguide_propagator(n_guides: usize, coupling: f64, omega: f64, t: f64) -> Result<WaveguidePropagator> {
    if n_guides == 0 {
        return Err(Error::InvalidConfig("need at least one waveguide".into()));
    }
    if !(coupling.is_finite() && omega.is_finite() && t.is_finite()) {
        return Err(Error::InvalidConfig("waveguide parameters must be finite".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidConfig(format!("time {t} must be non-negative")));
    }
    let n1 = (n_guides + 1) as f64;
    let phases: Vec<C64> = (1..=n_guides)
        .map(|p| (-I * (omega + 2.0 * coupling * (p as f64 * PI / n1).cos()) * t).exp())
        .collect();
    let sines = DMatrix::from_fn(n_guides, n_guides, |j, p| ((j + 1) as f64 * (p + 1) as f64 * PI / n1).sin());
    let matrix = DMatrix::from_fn(n_guides, n_guides, |j, q| {
        let s: C64 = (0..n_guides).map(|p| phases[p] * sines[(q, p)] * sines[(j, p)]).sum();
        s * (2.0 / n1)
    });
    Ok(WaveguidePropagator { n_guides, coupling, omega, t, matrix })
}

impl WaveguidePropagator {
    /// `max |A†A - 1|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.matrix.adjoint() * &self.matrix;
        let n = self.n_guides;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { ZERO }).norm())
            .fold(0.0, f64::max)
    }

    fn check_guide(&self, guide: usize) -> Result<()> {
        if guide == 0 || guide > self.n_guides {
            return Err(Error::ModeOutOfRange { mode: guide, n_modes: self.n_guides });
        }
        Ok(())
    }

    /// Output amplitudes of a single photon launched into `guide` (1-based).
    pub fn single_photon_output(&self, guide: usize) -> Result<Vec<C64>> {
        self.check_guide(guide)?;
        Ok(self.matrix.column(guide - 1).iter().copied().collect())
    }

    /// Output of the Fock input `|n_1, …, n_N⟩`, built as
    /// `Π_q (Σ_j A_jq b_j†)^{n_q} / sqrt(n_q!) |0⟩`.
    pub fn fock_output(&self, occupations: &[usize]) -> Result<FockVector> {
        if occupations.len() != self.n_guides {
            return Err(Error::InvalidState(format!(
                "input has {} guides, propagator has {}",
                occupations.len(),
                self.n_guides
            )));
        }
        let total = occupations.iter().sum();
        let space = FockSpace::number_capped(self.n_guides, total)?;
        let factors: Vec<(Vec<C64>, usize)> = occupations
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(q, &n)| (self.matrix.column(q).iter().copied().collect(), n))
            .collect();
        let amplitudes = space.creation_polynomial(&factors);
        Ok(FockVector { space, amplitudes })
    }
}

/// Moments `S_ij = a_i* a_j` of the single-photon state `Σ_j a_j |1_j⟩`.
pub fn single_photon_moments(amplitudes: &[C64]) -> ModeMoments {
    let n = amplitudes.len();
    ModeMoments {
        means: DVector::zeros(n),
        second: DMatrix::from_fn(n, n, |i, j| amplitudes[i].conj() * amplitudes[j]),
    }
}

/// Dark fraction after a photon launched into `input_guide` has propagated
/// for time `t`, then enters a superradiant section with uniform couplings.
pub fn waveguide_dark_fraction(input_guide: usize, coupling: f64, t: f64, cfg: &CouplingConfig) -> Result<f64> {
    let g = cfg.couplings();
    if g.iter().any(|x| (x - g[0]).abs() > 1e-12 * g[0]) {
        return Err(Error::InvalidConfig("waveguide preparation assumes uniform couplings".into()));
    }
    let prop = waveguide_propagator(cfg.n_modes(), coupling, cfg.omega(), t)?;
    let out = prop.single_photon_output(input_guide)?;
    let (f, _) = dark_fraction_from_moments(&single_photon_moments(&out), cfg);
    f.ok_or_else(|| Error::Contract("single-photon state lost its photon".into()))
}

/// Dark fraction of an arbitrary Fock input after propagation, evaluated on
/// the multimode output state.
pub fn waveguide_fock_dark_fraction(occupations: &[usize], coupling: f64, t: f64, cfg: &CouplingConfig) -> Result<f64> {
    let prop = waveguide_propagator(cfg.n_modes(), coupling, cfg.omega(), t)?;
    let out = prop.fock_output(occupations)?;
    let m = DensityOperator::from_pure(&out).mode_moments(0, cfg.n_modes());
    let (f, _) = dark_fraction_from_moments(&m, cfg);
    f.ok_or_else(|| Error::InvalidState("input holds no photons".into()))
}

/// Times `(n + 1/2) π / (√2 J)` at which the three-guide dark fractions
/// reach their extremes.
pub fn three_guide_extremum_time(n: usize, coupling: f64) -> f64 {
    (n as f64 + 0.5) * PI / (2f64.sqrt() * coupling)
}

/// One piecewise-constant pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseStep {
    /// `exp(-i(A σ₊ + A* σ₋))` with complex area `A = ∫E dt`.
    QubitRotation(C64),
    /// `exp(-i g̃t (d† σ₋ + d σ₊))`, stored as the product `g̃t ≥ 0`.
    JaynesCummings(f64),
    /// Multiplies the excited-state amplitude by `e^{iφ}`.
    PhasePause(f64),
}

impl fmt::Display for PulseStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseStep::QubitRotation(a) => write!(f, "ROT {:e} {:e}", a.re, a.im),
            PulseStep::JaynesCummings(gt) => write!(f, "JC {gt:e}"),
            PulseStep::PhasePause(phi) => write!(f, "PHASE {phi:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
}

impl PulseSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn jc_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, PulseStep::JaynesCummings(_))).count()
    }

    pub fn rotation_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, PulseStep::QubitRotation(_))).count()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            let ok = match s {
                PulseStep::QubitRotation(a) => a.re.is_finite() && a.im.is_finite(),
                PulseStep::JaynesCummings(gt) => gt.is_finite() && *gt >= 0.0,
                PulseStep::PhasePause(phi) => phi.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidConfig(format!("pulse step {} ({s}) is invalid", i + 1)));
            }
        }
        Ok(())
    }

    /// One step per line, in application order.
    pub fn to_schedule(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let _ = writeln!(out, "{s}");
        }
        out
    }

    /// Parses the schedule format; blank lines and `#` comments are skipped.
    pub fn from_schedule(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::InvalidConfig(format!("schedule line {}: {what}", n + 1));
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap_or("");
            let nums: Vec<f64> = parts
                .map(|p| p.parse::<f64>().map_err(|_| bad(&format!("cannot parse number {p:?}"))))
                .collect::<Result<_>>()?;
            let step = match (op, nums.as_slice()) {
                ("ROT", [re, im]) => PulseStep::QubitRotation(C64::new(*re, *im)),
                ("JC", [gt]) => PulseStep::JaynesCummings(*gt),
                ("PHASE", [phi]) => PulseStep::PhasePause(*phi),
                ("ROT" | "JC" | "PHASE", _) => return Err(bad(&format!("wrong argument count for {op}"))),
                _ => return Err(bad(&format!("unknown step {op:?}"))),
            };
            steps.push(step);
        }
        let seq = Self { steps };
        seq.validate()?;
        Ok(seq)
    }
}

/// Qubit ⊗ single-mode state; component `(q, n)` sits at `2n + q` with
/// `q = 0` ground and `q = 1` excited.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitModeState {
    pub max_quanta: usize,
    pub amplitudes: DVector<C64>,
}

impl QubitModeState {
    pub fn ground_vacuum(max_quanta: usize) -> Self {
        let mut amplitudes = DVector::zeros(2 * (max_quanta + 1));
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { max_quanta, amplitudes }
    }

    pub fn ground(&self, n: usize) -> C64 {
        self.amplitudes[2 * n]
    }

    pub fn excited(&self, n: usize) -> C64 {
        self.amplitudes[2 * n + 1]
    }

    pub fn excited_population(&self) -> f64 {
        (0..=self.max_quanta).map(|n| self.excited(n).norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Ground-branch mode amplitudes `c_n`.
    pub fn ground_amplitudes(&self) -> Vec<C64> {
        (0..=self.max_quanta).map(|n| self.ground(n)).collect()
    }

    fn rotate(&mut self, area: C64) {
        let a = area.norm();
        if a == 0.0 {
            return;
        }
        let (s, c) = a.sin_cos();
        let u = area / a;
        for n in 0..=self.max_quanta {
            let (g, e) = (self.ground(n), self.excited(n));
            self.amplitudes[2 * n] = g * c - I * s * u.conj() * e;
            self.amplitudes[2 * n + 1] = -I * s * u * g + e * c;
        }
    }

    fn jaynes_cummings(&mut self, gt: f64) -> Result<()> {
        let edge = self.excited(self.max_quanta).norm();
        if gt != 0.0 && edge > EDGE_TOL {
            return Err(Error::TruncationLeak { mass: edge * edge, time: gt });
        }
        for n in 1..=self.max_quanta {
            let (s, c) = (gt * (n as f64).sqrt()).sin_cos();
            let (g, e) = (self.ground(n), self.excited(n - 1));
            self.amplitudes[2 * n] = g * c - I * s * e;
            self.amplitudes[2 * n - 1] = -I * s * g + e * c;
        }
        Ok(())
    }

    fn phase(&mut self, phi: f64) {
        let p = (I * phi).exp();
        for n in 0..=self.max_quanta {
            self.amplitudes[2 * n + 1] *= p;
        }
    }

    pub fn apply(&mut self, step: &PulseStep) -> Result<()> {
        match *step {
            PulseStep::QubitRotation(a) => self.rotate(a),
            PulseStep::JaynesCummings(gt) => self.jaynes_cummings(gt)?,
            PulseStep::PhasePause(phi) => self.phase(phi),
        }
        Ok(())
    }
}

fn check_collective_couplings(couplings: &[f64]) -> Result<f64> {
    if couplings.is_empty() || couplings.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidConfig("collective couplings must be finite and non-empty".into()));
    }
    let norm = couplings.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::InvalidConfig("collective coupling vanishes".into()));
    }
    Ok(norm)
}

/// Mode couplings `g̃_j = Σ_k w_k U_kj` of the collective mode
/// `d = Σ_k w_k C_k`, with `w` over collective modes `1..=N`.
pub fn collective_mode_couplings(cfg: &CouplingConfig, weights: &[f64]) -> Result<Vec<f64>> {
    let n = cfg.n_modes();
    if weights.len() != n {
        return Err(Error::InvalidConfig(format!("need {n} collective weights, got {}", weights.len())));
    }
    let u = collective_transform(cfg);
    let g: Vec<f64> = (0..n).map(|j| (0..n).map(|k| weights[k] * u[(k, j)]).sum()).collect();
    check_collective_couplings(&g)?;
    Ok(g)
}

/// Pulse sequence taking `|g, 0⟩` to `|g⟩ ⊗ Σ_n c_n (d†)^n / sqrt(n!) |0⟩`.
///
/// Built by running the target backwards: at each level `n` a phase pause
/// aligns `|e, n-1⟩` with `|g, n⟩`, a JC pulse empties `|g, n⟩`, and a
/// qubit rotation empties `|e, n-1⟩`. The forward sequence inverts that
/// record in reverse order.
pub fn law_eberly_synthesize(target: &[C64], collective_couplings: &[f64]) -> Result<PulseSequence> {
    check_collective_couplings(collective_couplings)?;
    if target.is_empty() {
        return Err(Error::InvalidState("empty target".into()));
    }
    let norm: f64 = target.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("target norm² = {norm} differs from 1")));
    }
    let top = target.len() - 1;
    let mut state = QubitModeState { max_quanta: top, amplitudes: DVector::zeros(2 * (top + 1)) };
    for (n, c) in target.iter().enumerate() {
        state.amplitudes[2 * n] = *c;
    }
    let mut forward: Vec<PulseStep> = Vec::new();
    for n in (1..=top).rev() {
        let (g, e) = (state.ground(n), state.excited(n - 1));
        if g.norm() < LEVEL_TOL && e.norm() < LEVEL_TOL {
            continue;
        }
        let mut level = Vec::new();
        if g.norm() >= LEVEL_TOL {
            if e.norm() >= LEVEL_TOL {
                let phi = e.arg() - g.arg() - PI / 2.0;
                state.phase(-phi);
                level.push(PulseStep::PhasePause(phi));
            }
            let gt = g.norm().atan2(state.excited(n - 1).norm()) / (n as f64).sqrt();
            state.jaynes_cummings(-gt)?;
            level.push(PulseStep::JaynesCummings(gt));
        }
        let (g, e) = (state.ground(n - 1), state.excited(n - 1));
        if e.norm() >= LEVEL_TOL {
            let a = e.norm().atan2(g.norm());
            let beta = PI / 2.0 + e.arg() - if g.norm() >= LEVEL_TOL { g.arg() } else { 0.0 };
            let area = C64::from_polar(a, beta);
            state.rotate(-area);
            level.push(PulseStep::QubitRotation(area));
        }
        forward.extend(level);
    }
    forward.reverse();
    Ok(PulseSequence { steps: forward })
}

/// Result of running a pulse sequence from `|g, 0⟩`.
#[derive(Debug, Clone)]
pub struct LawEberlyOutcome {
    pub state: QubitModeState,
    /// Ground-branch state expanded over the oscillators via
    /// `d† = Σ_j g̃_j b_j† / g̃`.
    pub multimode: FockVector,
}

impl LawEberlyOutcome {
    /// `|⟨target, g | ψ⟩|²`.
    pub fn fidelity(&self, target: &[C64]) -> f64 {
        let overlap: C64 = target
            .iter()
            .enumerate()
            .filter(|(n, _)| *n <= self.state.max_quanta)
            .map(|(n, c)| c.conj() * self.state.ground(n))
            .sum();
        overlap.norm_sqr()
    }
}

pub fn law_eberly_simulate(seq: &PulseSequence, collective_couplings: &[f64], max_quanta: usize) -> Result<LawEberlyOutcome> {
    let gnorm = check_collective_couplings(collective_couplings)?;
    seq.validate()?;
    let mut state = QubitModeState::ground_vacuum(max_quanta);
    for step in &seq.steps {
        state.apply(step)?;
    }
    let space = FockSpace::number_capped(collective_couplings.len(), max_quanta)?;
    let coeffs: Vec<C64> = collective_couplings.iter().map(|g| C64::new(g / gnorm, 0.0)).collect();
    let mut power = space.vacuum();
    let mut amplitudes = power.clone() * state.ground(0);
    for n in 1..=max_quanta {
        power = space.apply_collective_creation(&power, &coeffs, 0) / C64::new((n as f64).sqrt(), 0.0);
        amplitudes += &power * state.ground(n);
    }
    Ok(LawEberlyOutcome { state, multimode: FockVector { space, amplitudes } })
}
