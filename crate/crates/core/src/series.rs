//! Sampled time series and their CSV form.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Channels sampled on a common, strictly increasing time grid.
///
/// Times are stored in the dimensionless unit `τ = Γ t`; `gamma` converts
/// them to seconds when the couplings are given in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t_gamma: Vec<f64>,
    gamma: f64,
    labels: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t_gamma: Vec<f64>, gamma: f64) -> Result<Self> {
        validate_times(&t_gamma)?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("rate {gamma} must be positive")));
        }
        Ok(Self { t_gamma, gamma, labels: Vec::new(), channels: Vec::new() })
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let label = label.into();
        if values.len() != self.t_gamma.len() {
            return Err(Error::Contract(format!(
                "channel {label} has {} samples for {} times",
                values.len(),
                self.t_gamma.len()
            )));
        }
        if label.contains(',') || label.contains('\n') {
            return Err(Error::Contract(format!("channel label {label:?} is not CSV-safe")));
        }
        self.labels.push(label);
        self.channels.push(values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t_gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_gamma.is_empty()
    }

    pub fn t_gamma(&self) -> &[f64] {
        &self.t_gamma
    }

    /// Sample times in seconds.
    pub fn times(&self) -> Vec<f64> {
        self.t_gamma.iter().map(|t| t / self.gamma).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|i| self.channels[i].as_slice())
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.labels.iter().map(String::as_str).zip(self.channels.iter().map(Vec::as_slice))
    }

    /// Header `t_gamma,t,<channels>` followed by one row per sample, every
    /// value in `{:.16e}` form and LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_gamma,t");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, tg) in self.t_gamma.iter().enumerate() {
            let _ = write!(out, "{:.16e},{:.16e}", tg, tg / self.gamma);
            for c in &self.channels {
                let _ = write!(out, ",{:.16e}", c[i]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn validate_times(t: &[f64]) -> Result<()> {
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("sample times must be finite".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// `samples` equally spaced points on `[0, t_max]`.
pub fn linear_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 samples, got {samples}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidConfig(format!("t_max = {t_max} must be positive")));
    }
    let step = t_max / (samples - 1) as f64;
    Ok((0..samples).map(|i| if i + 1 == samples { t_max } else { i as f64 * step }).collect())
}
