//! Subcommand implementations. Each returns the report printed on stdout.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use superrad_core::atomic::atomic_populations;
use superrad_core::checks::run_invariant_suite;
use superrad_core::collective::{BasisIndex, CouplingConfig};
use superrad_core::dynamics::{
    classify, correlation_series, dark_fraction, intensity_series, ladder_populations, split_intensity,
};
use superrad_core::integrate::StepControl;
use superrad_core::oracle::{evolve_reduced, OracleOptions};
use superrad_core::preparation::{collective_mode_couplings, law_eberly_simulate, law_eberly_synthesize, waveguide_dark_fraction};
use superrad_core::series::{linear_grid, TimeSeries};
use superrad_core::states::{dicke_expansion_of_fock, fock_representation, moments_of, mrl_expectations, StateSpec};
use superrad_core::Error;

use crate::config::RunConfig;
use crate::output::{heatmap, line_plot, time_series_plot, write_file, Table};
use crate::CliError;

type Outcome = Result<String, CliError>;

fn grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    Ok(linear_grid(cfg.time.t_max, cfg.time.samples)?)
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    report: String,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, report: String::new() }
    }

    fn file(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = write_file(&self.cfg.output.dir, name, contents)?;
        let _ = writeln!(self.report, "wrote {}", path.display());
        Ok(())
    }

    fn svg(&mut self, name: &str, contents: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.cfg.output.svg {
            self.file(name, &contents())?;
        }
        Ok(())
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.report.push_str(text.as_ref());
        self.report.push('\n');
    }
}

pub fn classify_cmd(cfg: &RunConfig) -> Outcome {
    let class = classify(&cfg.state, &cfg.coupling, cfg.tolerances.epsilon)?;
    let e = mrl_expectations(&moments_of(&cfg.state, &cfg.coupling)?, &cfg.coupling);
    let mut t = Table::new(&["M", "R", "L", "F", "F_N"]);
    t.push(vec![e.m, e.r, e.l, class.dark_fraction.unwrap_or(f64::NAN), class.normal_fraction]);
    let mut w = Writer::new(cfg);
    w.line(class.to_string());
    w.file("classify.csv", &t.to_csv())?;
    Ok(w.report)
}

fn oracle_cutoff(spec: &StateSpec, cutoff: Option<usize>) -> Result<usize, CliError> {
    match (cutoff, spec.max_quanta()) {
        (Some(c), _) => Ok(c),
        (None, Some(m)) => Ok(m),
        (None, None) => Err(CliError::Usage(format!("the {} family has unbounded quanta; pass --cutoff", spec.family_name()))),
    }
}

pub fn evolve_cmd(cfg: &RunConfig, oracle: bool, cutoff: Option<usize>) -> Outcome {
    let taus = grid(cfg)?;
    let (spec, coupling) = (&cfg.state, &cfg.coupling);
    let mut ts = intensity_series(spec, coupling, &taus)?;
    if coupling.n_modes() > 1 {
        let split = taus.iter().map(|&t| split_intensity(spec, coupling, t)).collect::<Result<Vec<_>, Error>>()?;
        ts.push("intensity_u", split.iter().map(|s| s.0).collect())?;
        ts.push("intensity_c", split.iter().map(|s| s.1).collect())?;
    }
    let mut plotted = vec!["intensity", "M", "R", "L"];
    let mut w = Writer::new(cfg);
    if oracle {
        let cap = oracle_cutoff(spec, cutoff)?;
        let rep = fock_representation(spec, coupling, cap, cfg.tolerances.tail)?;
        let opts = OracleOptions { step: StepControl { tol: cfg.tolerances.step, ..StepControl::default() }, ..OracleOptions::default() };
        let rec = evolve_reduced(&rep.state.density(), coupling, &taus, &opts)?;
        for label in ["intensity", "M", "R", "L"] {
            ts.push(format!("oracle_{label}"), rec.channel(label).to_vec())?;
        }
        plotted.push("oracle_intensity");
        let worst = ts
            .channel("intensity")
            .unwrap_or_default()
            .iter()
            .zip(rec.channel("intensity"))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w.line(format!(
            "oracle cutoff {cap}: max |intensity - oracle| = {worst:.3e}, trace error {:.3e}, min eigenvalue {:.3e}",
            rec.max_trace_error, rec.min_eigenvalue
        ));
    }
    w.file("evolve.csv", &ts.to_csv())?;
    w.svg("evolve.svg", || time_series_plot("Collective decay", &ts, &plotted))?;
    Ok(w.report)
}

/// Dicke-basis form of the configured state, needed for ladder populations.
fn as_dicke(cfg: &RunConfig) -> Result<StateSpec, CliError> {
    match &cfg.state {
        s @ StateSpec::DickeSuperposition { .. } => Ok(s.clone()),
        s if s.is_pure() && s.is_number_bounded() => {
            let cap = s.max_quanta().unwrap_or(0);
            let rep = fock_representation(s, &cfg.coupling, cap, cfg.tolerances.tail)?;
            match rep.state {
                superrad_core::states::FockState::Pure(v) => {
                    Ok(StateSpec::DickeSuperposition { terms: dicke_expansion_of_fock(&v, &cfg.coupling)? })
                }
                superrad_core::states::FockState::Mixed(_) => unreachable!("pure family"),
            }
        }
        s => Err(CliError::Usage(format!("ladder populations need a pure state with bounded quanta, not {}", s.family_name()))),
    }
}

pub fn populations_cmd(cfg: &RunConfig) -> Outcome {
    let taus = grid(cfg)?;
    let pops = ladder_populations(&as_dicke(cfg)?, &cfg.coupling, &taus)?;
    let ts = pops.to_series(cfg.coupling.gamma())?;
    let mut w = Writer::new(cfg);
    w.file("populations.csv", &ts.to_csv())?;
    let labels: Vec<String> = ts.labels().to_vec();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    w.svg("populations.svg", || time_series_plot("Ladder populations", &ts, &refs))?;
    Ok(w.report)
}

pub fn correlations_cmd(cfg: &RunConfig, i: usize, j: usize) -> Outcome {
    let taus = grid(cfg)?;
    let ts = correlation_series(&cfg.state, &cfg.coupling, i, j, &taus)?;
    let mut w = Writer::new(cfg);
    let stem = format!("correlations_c{i}{j}");
    w.file(&format!("{stem}.csv"), &ts.to_csv())?;
    let (re, im) = (format!("re_c{i}{j}"), format!("im_c{i}{j}"));
    w.svg(&format!("{stem}.svg"), || time_series_plot("Two-time correlation", &ts, &[&re, &im]))?;
    Ok(w.report)
}

pub fn compare_atomic_cmd(cfg: &RunConfig, n: usize) -> Outcome {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let taus = grid(cfg)?;
    let c = &cfg.coupling;
    let uniform = CouplingConfig::uniform(n, c.couplings()[0], c.kappa(), c.omega())?;
    let bright = StateSpec::dicke(BasisIndex::bright(n, n));
    let bosonic = intensity_series(&bright, &uniform, &taus)?;
    let rungs = ladder_populations(&bright, &uniform, &taus)?;
    let atoms = atomic_populations(n, &taus)?;
    let mut ts = TimeSeries::new(taus.clone(), uniform.gamma())?;
    ts.push("bosonic_intensity", bosonic.channel("intensity").unwrap_or_default().to_vec())?;
    ts.push("atomic_intensity", atoms.intensity())?;
    for (k, idx) in rungs.indices.iter().enumerate() {
        ts.push(format!("bosonic_R{}", idx.rung()), rungs.values.iter().map(|row| row[k]).collect())?;
    }
    for k in 0..=n {
        ts.push(format!("atomic_P{k}"), atoms.values.iter().map(|row| row[k]).collect())?;
    }
    let mut w = Writer::new(cfg);
    let stem = format!("compare_atomic_n{n}");
    w.line(format!(
        "initial intensity: oscillators {:.6} Γ, atoms {:.6} Γ",
        ts.channel("bosonic_intensity").unwrap_or_default()[0],
        ts.channel("atomic_intensity").unwrap_or_default()[0]
    ));
    w.file(&format!("{stem}.csv"), &ts.to_csv())?;
    w.svg(&format!("{stem}.svg"), || time_series_plot("Oscillators vs atoms", &ts, &["bosonic_intensity", "atomic_intensity"]))?;
    Ok(w.report)
}

/// `start:stop:count`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("range {text:?} must look like start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || n < 2 || b <= a {
        return Err(bad());
    }
    Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

/// Dark fraction of the identical product state `|α, r⟩^{⊗N}`. The vacuum
/// corner reports the normal fraction.
pub fn product_fraction(coupling: &CouplingConfig, alpha: f64, r: f64) -> Result<(f64, f64), Error> {
    let n = coupling.n_modes();
    let spec = StateSpec::ProductSqueezedCoherent { alpha: vec![Complex64::new(alpha, 0.0); n], xi: vec![Complex64::new(r, 0.0); n] };
    let (f, f_n) = dark_fraction(&spec, coupling)?;
    Ok((f.unwrap_or(f_n), f_n))
}

pub fn sweep_fraction_cmd(cfg: &RunConfig, alpha_range: &str, r_range: &str) -> Outcome {
    let alphas = parse_range(alpha_range)?;
    let rs = parse_range(r_range)?;
    let surface: Vec<Vec<(f64, f64)>> = alphas
        .par_iter()
        .map(|&a| rs.iter().map(|&r| product_fraction(&cfg.coupling, a, r)).collect::<Result<Vec<_>, Error>>())
        .collect::<Result<Vec<_>, Error>>()?;
    let mut t = Table::new(&["alpha", "r", "F", "F_N"]);
    for (a, row) in alphas.iter().zip(&surface) {
        for (r, (f, f_n)) in rs.iter().zip(row) {
            t.push(vec![*a, *r, *f, *f_n]);
        }
    }
    let mut w = Writer::new(cfg);
    w.file("sweep_fraction.csv", &t.to_csv())?;
    let values: Vec<Vec<f64>> = surface.iter().map(|row| row.iter().map(|p| p.0).collect()).collect();
    w.svg("sweep_fraction.svg", || heatmap("Dark fraction of |α, r⟩^⊗N", "α", "r", &alphas, &rs, &values))?;
    Ok(w.report)
}

pub fn waveguide_cmd(cfg: &RunConfig, input_guide: usize, coupling_j: f64, jt_max: f64) -> Outcome {
    if !(coupling_j.is_finite() && coupling_j > 0.0) {
        return Err(CliError::Usage(format!("--j = {coupling_j} must be positive")));
    }
    let jts = linear_grid(jt_max, cfg.time.samples)?;
    let f_n = 1.0 - 1.0 / cfg.coupling.n_modes() as f64;
    let mut t = Table::new(&["jt", "t", "F", "F_N"]);
    for &jt in &jts {
        let time = jt / coupling_j;
        t.push(vec![jt, time, waveguide_dark_fraction(input_guide, coupling_j, time, &cfg.coupling)?, f_n]);
    }
    let mut w = Writer::new(cfg);
    let stem = format!("waveguide_guide{input_guide}");
    w.file(&format!("{stem}.csv"), &t.to_csv())?;
    let f = t.column("F").unwrap_or_default();
    w.svg(&format!("{stem}.svg"), || line_plot("Dark fraction after the waveguide section", "Jt", "F", &jts, &[("F".into(), f), ("F_N".into(), vec![f_n; jts.len()])]))?;
    Ok(w.report)
}

pub fn parse_target(text: &str) -> Result<Vec<Complex64>, CliError> {
    let target = text
        .split(',')
        .map(|s| s.trim().parse::<Complex64>().map_err(|_| CliError::Usage(format!("cannot parse target coefficient {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(CliError::Usage("target coefficients must not all vanish".into()));
    }
    Ok(target.iter().map(|z| z / norm).collect())
}

pub fn law_eberly_cmd(cfg: &RunConfig, target: &str, dark_mode: Option<usize>) -> Outcome {
    let target = parse_target(target)?;
    let c = &cfg.coupling;
    let n = c.n_modes();
    let mut weights = vec![0.0; n];
    match dark_mode {
        None => weights[n - 1] = 1.0,
        Some(k) if (1..n).contains(&k) => {
            weights[k - 1] = std::f64::consts::FRAC_1_SQRT_2;
            weights[n - 1] = std::f64::consts::FRAC_1_SQRT_2;
        }
        Some(k) => return Err(Error::ModeOutOfRange { mode: k, n_modes: n - 1 }.into()),
    }
    let g = collective_mode_couplings(c, &weights)?;
    let seq = law_eberly_synthesize(&target, &g)?;
    let out = law_eberly_simulate(&seq, &g, target.len() - 1)?;
    let fidelity = out.fidelity(&target);
    let terms = dicke_expansion_of_fock(&out.multimode, c)?;
    let mut header: Vec<String> = (1..n).map(|k| format!("m{k}")).collect();
    header.extend(["R", "re", "im"].map(String::from));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for (a, idx) in &terms {
        let mut row: Vec<f64> = idx.degeneracy().iter().map(|&m| m as f64).collect();
        row.extend([idx.rung() as f64, a.re, a.im]);
        t.push(row);
    }
    let mut w = Writer::new(cfg);
    w.line(format!(
        "fidelity {fidelity:.12} (infidelity {:.3e}), {} steps: {} JC, {} ROT, excited population {:.3e}",
        1.0 - fidelity,
        seq.len(),
        seq.jc_count(),
        seq.rotation_count(),
        out.state.excited_population()
    ));
    w.file("law_eberly.schedule", &seq.to_schedule())?;
    w.file("law_eberly.csv", &t.to_csv())?;
    Ok(w.report)
}

pub fn oracle_check_cmd() -> (String, bool) {
    let mut report = String::new();
    let mut ok = true;
    for c in run_invariant_suite() {
        ok &= c.passed;
        let _ = writeln!(report, "{:<4} {:<44} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    (report, ok)
}
