//! Brute-force master-equation integration over truncated Fock spaces.
//!
//! Three generators are provided: collective decay of the oscillators
//! (`NΓ/2 · D[C_N]`), the full central-mode model before adiabatic
//! elimination, and independent decay of every oscillator. Here
//! `D[A]ρ = 2AρA† - A†Aρ - ρA†A`.

use nalgebra::{DMatrix, DVector};

use crate::collective::CouplingConfig;
use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, SparseOp};
use crate::integrate::{integrate, StepControl, Trajectory};
use crate::math::C64;
use crate::series::{validate_times, TimeSeries};

const I: C64 = C64::new(0.0, 1.0);

/// `ρ̇ = -i[H, ρ] + Σ_k γ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})`.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    /// `H - (i/2) Σ γ_k L_k† L_k`.
    h_eff: SparseOp,
    h_eff_adjoint: SparseOp,
    /// `sqrt(γ_k) L_k`.
    jumps: Vec<SparseOp>,
    jump_adjoints: Vec<SparseOp>,
}

impl Lindbladian {
    pub fn new(hamiltonian: SparseOp, jumps: Vec<(f64, SparseOp)>) -> Self {
        let dim = hamiltonian.dim();
        let mut h_eff = hamiltonian;
        let mut scaled = Vec::with_capacity(jumps.len());
        for (rate, l) in jumps {
            let k = l.adjoint().compose(&l);
            h_eff = h_eff.add(&k.scale(C64::new(0.0, -0.5 * rate)));
            scaled.push(l.scale(C64::new(rate.sqrt(), 0.0)));
        }
        debug_assert!(scaled.iter().all(|l| l.dim() == dim));
        let jump_adjoints = scaled.iter().map(SparseOp::adjoint).collect();
        let h_eff_adjoint = h_eff.adjoint();
        Self { h_eff, h_eff_adjoint, jumps: scaled, jump_adjoints }
    }

    pub fn dim(&self) -> usize {
        self.h_eff.dim()
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        // -i (H_eff ρ - ρ H_eff†)
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        self.h_eff.left_mul_acc(rho, -I, &mut out);
        self.h_eff_adjoint.right_mul_acc(rho, I, &mut out);
        for (l, ld) in self.jumps.iter().zip(&self.jump_adjoints) {
            let lr = l.left_mul(rho);
            ld.right_mul_acc(&lr, C64::new(1.0, 0.0), &mut out);
        }
        out
    }

    /// Upper bound on the generator norm, used to pick the first RK4 step.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.h_eff.norm_bound() + self.jumps.iter().map(|l| l.norm_bound().powi(2)).sum::<f64>()
    }
}

/// Numerical contracts applied to every stored sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub step: StepControl,
    pub trace_tol: f64,
    pub positivity_tol: f64,
    /// Largest population tolerated on states where a hop would leave the space.
    pub leak_threshold: f64,
    pub keep_snapshots: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            step: StepControl::default(),
            trace_tol: 1e-9,
            positivity_tol: 1e-9,
            leak_threshold: 1e-8,
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    /// Channels `M`, `R`, `L`, `n1..nN` and generator-specific extras.
    pub series: TimeSeries,
    pub snapshots: Vec<DensityOperator>,
    pub steps: usize,
    pub refinements: usize,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub max_leak: f64,
}

impl EvolutionRecord {
    pub fn channel(&self, label: &str) -> &[f64] {
        self.series.channel(label).unwrap_or_else(|| panic!("missing channel {label}"))
    }
}

/// Observables of the `n` oscillator modes starting at `offset`.
struct SystemObservables {
    numbers: Vec<SparseOp>,
    total: SparseOp,
    bright: SparseOp,
}

impl SystemObservables {
    fn new(space: &FockSpace, cfg: &CouplingConfig, offset: usize) -> Self {
        let n = cfg.n_modes();
        let numbers: Vec<SparseOp> = (0..n).map(|j| space.number(offset + j)).collect();
        let total = numbers.iter().skip(1).fold(numbers[0].clone(), |acc, x| acc.add(x));
        let c = space.collective_annihilation(&cfg.bright_direction(), offset);
        let bright = c.adjoint().compose(&c);
        Self { numbers, total, bright }
    }

    fn labels(&self) -> Vec<String> {
        let mut l = vec!["M".to_string(), "R".to_string(), "L".to_string()];
        l.extend((1..=self.numbers.len()).map(|j| format!("n{j}")));
        l
    }

    fn observe(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        let m = self.total.trace_with(rho).re;
        let r = self.bright.trace_with(rho).re;
        let mut v = vec![m, r, m - r];
        v.extend(self.numbers.iter().map(|op| op.trace_with(rho).re));
        v
    }
}

fn run_density(
    lindbladian: &Lindbladian,
    rho0: &DensityOperator,
    cfg: &CouplingConfig,
    taus: &[f64],
    opts: &OracleOptions,
    observe: impl Fn(&DMatrix<C64>) -> Vec<f64>,
    labels: Vec<String>,
) -> Result<EvolutionRecord> {
    validate_times(taus)?;
    rho0.validate(opts.trace_tol.max(1e-9))?;
    let gamma = cfg.gamma();
    let times: Vec<f64> = taus.iter().map(|t| t / gamma).collect();
    let traj: Trajectory = integrate(
        |x| lindbladian.apply(x),
        &rho0.data,
        &times,
        lindbladian.norm_bound(),
        opts.step,
        &observe,
    )?;
    let flags = rho0.space.hop_leak_weights();
    let mut max_trace_error: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_leak: f64 = 0.0;
    let mut snapshots = Vec::new();
    for (k, x) in traj.states.into_iter().enumerate() {
        let rho = DensityOperator { space: rho0.space.clone(), data: x };
        let tr = rho.trace();
        let trace_err = (tr - rho0.trace()).norm();
        max_trace_error = max_trace_error.max(trace_err);
        if trace_err > opts.trace_tol {
            return Err(Error::Contract(format!("trace drifted by {trace_err:.3e} at t_gamma = {}", taus[k])));
        }
        let herm = rho.hermiticity_error();
        if herm > 1e-9 {
            return Err(Error::Contract(format!("Hermiticity lost ({herm:.3e}) at t_gamma = {}", taus[k])));
        }
        let ev = rho.min_eigenvalue();
        min_eigenvalue = min_eigenvalue.min(ev);
        if ev < -opts.positivity_tol {
            return Err(Error::Contract(format!("eigenvalue {ev:.3e} at t_gamma = {}", taus[k])));
        }
        let leak = rho.flagged_population(&flags);
        max_leak = max_leak.max(leak);
        if leak > opts.leak_threshold {
            return Err(Error::TruncationLeak { mass: leak, time: taus[k] });
        }
        if opts.keep_snapshots {
            snapshots.push(rho);
        }
    }
    let mut series = TimeSeries::new(taus.to_vec(), gamma)?;
    for (c, label) in labels.into_iter().enumerate() {
        series.push(label, traj.channels.iter().map(|row| row[c]).collect())?;
    }
    Ok(EvolutionRecord {
        series,
        snapshots,
        steps: traj.steps,
        refinements: traj.refinements,
        max_trace_error,
        min_eigenvalue,
        max_leak,
    })
}

/// Generator `NΓ/2 · D[C_N]` on a space whose modes `offset..offset+N` are the oscillators.
pub fn reduced_lindbladian(space: &FockSpace, cfg: &CouplingConfig, offset: usize) -> Lindbladian {
    let c = space.collective_annihilation(&cfg.bright_direction(), offset);
    Lindbladian::new(SparseOp::zero(space.dim()), vec![(cfg.collective_rate(), c)])
}

/// Interaction-picture model `-i[G(a†C + aC†), ρ] + κ/2 · D[a]ρ` with the
/// central mode `a` as mode 0. `bright` is the unit vector defining `C`.
pub fn ancilla_lindbladian(space: &FockSpace, bright: &[f64], coupling: f64, kappa: f64) -> Lindbladian {
    let a = space.annihilation(0);
    let c = space.collective_annihilation(bright, 1);
    let hop = a.adjoint().compose(&c);
    let h = hop.add(&hop.adjoint()).scale(C64::new(coupling, 0.0));
    Lindbladian::new(h, vec![(kappa, a)])
}

/// `γ_I · D[b_j]` on every oscillator, so each occupation decays as `e^{-2γ_I t}`.
pub fn independent_lindbladian(space: &FockSpace, n_modes: usize, gamma_i: f64) -> Lindbladian {
    let jumps = (0..n_modes).map(|j| (2.0 * gamma_i, space.annihilation(j))).collect();
    Lindbladian::new(SparseOp::zero(space.dim()), jumps)
}

pub fn evolve_reduced(
    rho0: &DensityOperator,
    cfg: &CouplingConfig,
    taus: &[f64],
    opts: &OracleOptions,
) -> Result<EvolutionRecord> {
    check_modes(rho0, cfg.n_modes())?;
    let lind = reduced_lindbladian(&rho0.space, cfg, 0);
    let obs = SystemObservables::new(&rho0.space, cfg, 0);
    let total = obs.total.clone();
    let gamma = cfg.gamma();
    let mut labels = obs.labels();
    labels.push("intensity".into());
    let lind_ref = &lind;
    run_density(
        &lind,
        rho0,
        cfg,
        taus,
        opts,
        move |x| {
            let mut v = obs.observe(x);
            v.push(-total.trace_with(&lind_ref.apply(x)).re / gamma);
            v
        },
        labels,
    )
}

/// Evolves the oscillators together with the damped central mode. `full_dims`
/// lists the cutoffs of `(a, b_1, ..., b_N)`.
pub fn evolve_full_with_ancilla(
    rho0_system: &DensityOperator,
    cfg: &CouplingConfig,
    taus: &[f64],
    full_dims: &[usize],
    opts: &OracleOptions,
) -> Result<EvolutionRecord> {
    evolve_with_ancilla_coupling(rho0_system, cfg, cfg.total_coupling(), taus, full_dims, opts)
}

/// Same as [`evolve_full_with_ancilla`] with an explicit central coupling
/// `G`; the time unit stays `1/Γ` of `cfg`.
pub fn evolve_with_ancilla_coupling(
    rho0_system: &DensityOperator,
    cfg: &CouplingConfig,
    coupling: f64,
    taus: &[f64],
    full_dims: &[usize],
    opts: &OracleOptions,
) -> Result<EvolutionRecord> {
    let n = cfg.n_modes();
    check_modes(rho0_system, n)?;
    if full_dims.len() != n + 1 {
        return Err(Error::InvalidConfig(format!("need {} cutoffs (central mode first), got {}", n + 1, full_dims.len())));
    }
    if full_dims[0] < 3 {
        return Err(Error::InvalidConfig("central-mode cutoff must be at least 3".into()));
    }
    let space = FockSpace::product(full_dims.to_vec())?;
    let rho0 = rho0_system.with_vacuum_ancilla(&space)?;
    let lind = ancilla_lindbladian(&space, &cfg.bright_direction(), coupling, cfg.kappa());
    let obs = SystemObservables::new(&space, cfg, 1);
    let total = obs.total.clone();
    let na = space.number(0);
    let gamma = cfg.gamma();
    let kappa = cfg.kappa();
    let mut labels = obs.labels();
    labels.extend(["n_a".to_string(), "intensity_kappa".to_string(), "intensity".to_string()]);
    let lind_ref = &lind;
    run_density(
        &lind,
        &rho0,
        cfg,
        taus,
        opts,
        move |x| {
            let mut v = obs.observe(x);
            let occ = na.trace_with(x).re;
            v.push(occ);
            v.push(kappa * occ / gamma);
            v.push(-total.trace_with(&lind_ref.apply(x)).re / gamma);
            v
        },
        labels,
    )
}

/// Independent decay of every oscillator; times stay in units of `1/Γ` of `cfg`.
pub fn evolve_independent_baths(
    rho0: &DensityOperator,
    cfg: &CouplingConfig,
    gamma_i: f64,
    taus: &[f64],
    opts: &OracleOptions,
) -> Result<EvolutionRecord> {
    if !(gamma_i.is_finite() && gamma_i >= 0.0) {
        return Err(Error::InvalidConfig(format!("gamma_i = {gamma_i} must be non-negative")));
    }
    check_modes(rho0, cfg.n_modes())?;
    let lind = independent_lindbladian(&rho0.space, cfg.n_modes(), gamma_i);
    let obs = SystemObservables::new(&rho0.space, cfg, 0);
    let labels = obs.labels();
    run_density(&lind, rho0, cfg, taus, opts, move |x| obs.observe(x), labels)
}

/// `c_ij(τ, 0)` from the regression theorem: evolve `b_j ρ(0)` and `ρ(0)`
/// under the collective generator and trace both against `b_i†`.
pub fn regression_correlation(
    rho0: &DensityOperator,
    cfg: &CouplingConfig,
    i: usize,
    j: usize,
    taus: &[f64],
    step: StepControl,
) -> Result<Vec<C64>> {
    let n = cfg.n_modes();
    check_modes(rho0, n)?;
    for mode in [i, j] {
        if mode == 0 || mode > n {
            return Err(Error::ModeOutOfRange { mode, n_modes: n });
        }
    }
    validate_times(taus)?;
    let space = &rho0.space;
    let lind = reduced_lindbladian(space, cfg, 0);
    let bi = space.annihilation(i - 1);
    let bj = space.annihilation(j - 1);
    let bi_dag = bi.adjoint();
    let mean_j = bj.trace_with(&rho0.data);
    let x0 = bj.left_mul(&rho0.data);
    let times: Vec<f64> = taus.iter().map(|t| t / cfg.gamma()).collect();
    let observe = |x: &DMatrix<C64>| {
        let z = bi_dag.trace_with(x);
        vec![z.re, z.im]
    };
    let joint = integrate(|x| lind.apply(x), &x0, &times, lind.norm_bound(), step, observe)?;
    let single = integrate(|x| lind.apply(x), &rho0.data, &times, lind.norm_bound(), step, observe)?;
    Ok(joint
        .channels
        .iter()
        .zip(&single.channels)
        .map(|(a, b)| C64::new(a[0], a[1]) - C64::new(b[0], b[1]) * mean_j)
        .collect())
}

/// Eigenvalues of `ω a†a + ω Σ b_j†b_j + Σ g_j (a†b_j + a b_j†)` on states of
/// `(a, b_1..b_N)` with at most `max_quanta` quanta, ascending.
pub fn star_hamiltonian_eigenvalues(cfg: &CouplingConfig, max_quanta: usize) -> Result<Vec<f64>> {
    let n = cfg.n_modes();
    let space = FockSpace::number_capped(n + 1, max_quanta)?;
    let mut h = space.total_number().scale(C64::new(cfg.omega(), 0.0));
    let a = space.annihilation(0);
    for (j, &g) in cfg.couplings().iter().enumerate() {
        let hop = a.adjoint().compose(&space.annihilation(j + 1));
        h = h.add(&hop.add(&hop.adjoint()).scale(C64::new(g, 0.0)));
    }
    let dense = h.to_dense();
    let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn check_modes(rho: &DensityOperator, n: usize) -> Result<()> {
    if rho.space.n_modes() != n {
        return Err(Error::InvalidState(format!(
            "density operator has {} modes, configuration has {n}",
            rho.space.n_modes()
        )));
    }
    Ok(())
}

/// Convenience: pure density operator from amplitudes over `space`.
pub fn pure_density(space: &FockSpace, amplitudes: DVector<C64>) -> DensityOperator {
    DensityOperator::from_pure(&crate::fock::FockVector { space: space.clone(), amplitudes })
}
