//! Superradiant decay of `N` two-level atoms from the fully excited state,
//! used as the reference for the oscillator results.
//!
//! With `n` photons emitted, the populations obey
//! `Ṗ(n) = (N-n+1) n P(n-1) - (N-n)(n+1) P(n)` in `τ = Γ t`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrate::{integrate, StepControl};
use crate::math::C64;
use crate::series::{validate_times, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPopulations {
    pub n_atoms: usize,
    pub t_gamma: Vec<f64>,
    /// `values[t][n]` is `P(n, τ_t)` for `n = 0..=N`.
    pub values: Vec<Vec<f64>>,
}

impl AtomicPopulations {
    /// `I(τ) = Σ_n (N-n)(n+1) P(n, τ)`, the exact rate of photon emission.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|p| intensity_of(self.n_atoms, p)).collect()
    }

    pub fn to_series(&self, gamma: f64) -> Result<TimeSeries> {
        let mut ts = TimeSeries::new(self.t_gamma.clone(), gamma)?;
        for n in 0..=self.n_atoms {
            ts.push(format!("P{n}"), self.values.iter().map(|p| p[n]).collect())?;
        }
        ts.push("intensity", self.intensity())?;
        Ok(ts)
    }
}

fn rate_out(n_atoms: usize, n: usize) -> f64 {
    ((n_atoms - n) * (n + 1)) as f64
}

fn intensity_of(n_atoms: usize, p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, x)| rate_out(n_atoms, n) * x).sum()
}

pub fn atomic_populations(n_atoms: usize, taus: &[f64]) -> Result<AtomicPopulations> {
    atomic_populations_with(n_atoms, taus, StepControl::default())
}

pub fn atomic_populations_with(n_atoms: usize, taus: &[f64], step: StepControl) -> Result<AtomicPopulations> {
    if n_atoms == 0 {
        return Err(Error::InvalidConfig("need at least one atom".into()));
    }
    validate_times(taus)?;
    let dim = n_atoms + 1;
    let rhs = |p: &DMatrix<C64>| {
        DMatrix::from_fn(dim, 1, |n, _| {
            let gain = if n > 0 { ((n_atoms - n + 1) * n) as f64 * p[(n - 1, 0)] } else { C64::new(0.0, 0.0) };
            gain - p[(n, 0)] * rate_out(n_atoms, n)
        })
    };
    let norm = (0..dim).map(|n| rate_out(n_atoms, n) + if n > 0 { ((n_atoms - n + 1) * n) as f64 } else { 0.0 }).fold(0.0, f64::max);
    let mut p0 = DMatrix::zeros(dim, 1);
    p0[(0, 0)] = C64::new(1.0, 0.0);
    let traj = integrate(rhs, &p0, taus, norm, step, |p| p.iter().map(|z| z.re).collect())?;
    Ok(AtomicPopulations { n_atoms, t_gamma: taus.to_vec(), values: traj.channels })
}

/// `I(τ)/Γ` from the populations' loss terms.
pub fn atomic_intensity(n_atoms: usize, taus: &[f64]) -> Result<Vec<f64>> {
    Ok(atomic_populations(n_atoms, taus)?.intensity())
}

/// Initial intensities (in units of `Γ`) of `K` excitations shared by `N`
/// atoms, `NK + K - K²`, and by `N` oscillators, `NK`.
pub fn initial_intensity_comparison(n_systems: usize, quanta: usize) -> Result<(f64, f64)> {
    if n_systems == 0 {
        return Err(Error::InvalidConfig("need at least one emitter".into()));
    }
    if quanta > n_systems {
        return Err(Error::Domain(format!("{quanta} excitations do not fit in {n_systems} atoms")));
    }
    let (n, k) = (n_systems as f64, quanta as f64);
    Ok((n * k + k - k * k, n * k))
}

/// Closed-form populations `P(0..=5, τ)` for five atoms.
pub fn five_atom_populations(tau: f64) -> [f64; 6] {
    let e5 = (-5.0 * tau).exp();
    let e8 = (-8.0 * tau).exp();
    let e9 = (-9.0 * tau).exp();
    [
        e5,
        -5.0 / 3.0 * e8 + 5.0 / 3.0 * e5,
        -40.0 / 3.0 * e8 + 10.0 * e9 + 10.0 / 3.0 * e5,
        -90.0 * e9 + 80.0 * e8 + 10.0 * e5 - 120.0 * e8 * tau,
        -220.0 / 3.0 * e5 + 180.0 * e9 - 320.0 / 3.0 * e8 + 320.0 * e8 * tau + 80.0 * e5 * tau,
        1.0 - 100.0 * e9 + 125.0 / 3.0 * e8 + 172.0 / 3.0 * e5 - 200.0 * e8 * tau - 80.0 * e5 * tau,
    ]
}

/// Closed-form intensity for five atoms.
pub fn five_atom_intensity(tau: f64) -> f64 {
    5.0 / 3.0
        * (162.0 * (-9.0 * tau).exp()
            + 16.0 * (-8.0 * tau).exp() * (24.0 * tau - 1.0)
            + (-5.0 * tau).exp() * (240.0 * tau - 143.0))
}
