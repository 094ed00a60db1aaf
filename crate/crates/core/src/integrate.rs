//! Fixed-step classical RK4 with step halving until two successive
//! refinements agree on every observed channel.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Successive refinements must agree within `tol · max(1, |value|)`.
    pub tol: f64,
    pub max_refinements: usize,
    /// Initial step is `safety / ‖generator‖`.
    pub safety: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { tol: 1e-9, max_refinements: 14, safety: 0.5 }
    }
}

/// Result of an accepted integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// State at every requested time.
    pub states: Vec<DMatrix<C64>>,
    /// Observed channels at every requested time.
    pub channels: Vec<Vec<f64>>,
    /// RK4 steps taken by the accepted run.
    pub steps: usize,
    /// Number of halvings performed before acceptance.
    pub refinements: usize,
    /// Largest channel change between the last two refinements.
    pub change: f64,
}

fn rk4_step<F>(rhs: &F, x: &DMatrix<C64>, h: f64) -> DMatrix<C64>
where
    F: Fn(&DMatrix<C64>) -> DMatrix<C64>,
{
    let hc = C64::new(h, 0.0);
    let half = C64::new(h / 2.0, 0.0);
    let k1 = rhs(x);
    let k2 = rhs(&(x + &k1 * half));
    let k3 = rhs(&(x + &k2 * half));
    let k4 = rhs(&(x + &k3 * hc));
    x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (hc / 6.0)
}

fn run<F, O>(rhs: &F, x0: &DMatrix<C64>, times: &[f64], substeps: &[usize], observe: &O) -> (Vec<DMatrix<C64>>, Vec<Vec<f64>>, usize)
where
    F: Fn(&DMatrix<C64>) -> DMatrix<C64>,
    O: Fn(&DMatrix<C64>) -> Vec<f64>,
{
    let mut x = x0.clone();
    let mut states = Vec::with_capacity(times.len());
    let mut channels = Vec::with_capacity(times.len());
    let mut steps = 0;
    let mut t_prev = times[0];
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            let n = substeps[k];
            let h = (t - t_prev) / n as f64;
            for _ in 0..n {
                x = rk4_step(rhs, &x, h);
            }
            steps += n;
            t_prev = t;
        }
        channels.push(observe(&x));
        states.push(x.clone());
    }
    (states, channels, steps)
}

/// Integrates `ẋ = rhs(x)` with `x(0) = x0`, reporting `observe(x)` at every
/// requested time. Times must be non-negative and strictly increasing.
pub fn integrate<F, O>(
    rhs: F,
    x0: &DMatrix<C64>,
    times: &[f64],
    generator_norm: f64,
    control: StepControl,
    observe: O,
) -> Result<Trajectory>
where
    F: Fn(&DMatrix<C64>) -> DMatrix<C64>,
    O: Fn(&DMatrix<C64>) -> Vec<f64>,
{
    if times.is_empty() {
        return Err(Error::InvalidConfig("no sample times".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sample times must be strictly increasing".into()));
    }
    if times[0].is_nan() || times[0] < 0.0 {
        return Err(Error::InvalidConfig("sample times must be non-negative".into()));
    }
    if times[0] > 0.0 {
        let padded: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied()).collect();
        let mut traj = integrate(rhs, x0, &padded, generator_norm, control, observe)?;
        traj.states.remove(0);
        traj.channels.remove(0);
        return Ok(traj);
    }
    let h0 = if generator_norm > 0.0 { control.safety / generator_norm } else { f64::INFINITY };
    let base: Vec<usize> = std::iter::once(0)
        .chain(times.windows(2).map(|w| ((w[1] - w[0]) / h0).ceil().max(1.0) as usize))
        .collect();
    let (_, mut channels, _) = run(&rhs, x0, times, &base, &observe);
    let mut change = f64::INFINITY;
    for level in 1..=control.max_refinements {
        let sub: Vec<usize> = base.iter().map(|n| n << level).collect();
        let (s2, c2, st2) = run(&rhs, x0, times, &sub, &observe);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (a, b) in channels.iter().zip(&c2) {
            for (x, y) in a.iter().zip(b) {
                let d = (x - y).abs();
                worst = worst.max(d);
                if d.is_nan() || d > control.tol * y.abs().max(1.0) {
                    ok = false;
                }
            }
        }
        if ok {
            return Ok(Trajectory { states: s2, channels: c2, steps: st2, refinements: level, change: worst });
        }
        channels = c2;
        change = worst;
    }
    Err(Error::StepSize { refinements: control.max_refinements, change })
}
