//! Flat INI-style run configuration.
//!
//! ```text
//! [coupling]
//! n = 5
//! uniform = 1.0        # or: g = 0.5, 1.0, 1.5
//! kappa = 100
//! omega = 0
//!
//! [state]
//! family = dicke
//! terms = 1 [0 0 0 0] 5
//!
//! [time]
//! t_max = 2
//! samples = 201
//!
//! [tolerances]
//! epsilon = 1e-12
//!
//! [output]
//! dir = out
//! svg = true
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use superrad_core::collective::{BasisIndex, CouplingConfig};
use superrad_core::dynamics::DEFAULT_EPSILON;
use superrad_core::states::{moon_state, Mixture, StateSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    /// Largest time in units of `1/Γ`.
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub epsilon: f64,
    /// Largest norm a Fock truncation may discard.
    pub tail: f64,
    /// Agreement required between successive RK4 refinements.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub coupling: CouplingConfig,
    pub state: StateSpec,
    /// The `family` value as written.
    pub family: String,
    pub time: TimeGrid,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("coupling", &["n", "g", "uniform", "kappa", "omega"]),
    ("state", &["family", "terms", "occupations", "nbar", "distributions", "alpha", "xi", "displace"]),
    ("time", &["t_max", "samples"]),
    ("tolerances", &["epsilon", "tail", "step"]),
    ("output", &["dir", "svg"]),
];

/// Keys each family accepts besides `family` and `displace`.
const FAMILY_KEYS: &[(&str, &[&str])] = &[
    ("vacuum", &[]),
    ("dicke", &["terms"]),
    ("fock", &["occupations"]),
    ("thermal", &["nbar"]),
    ("mixture", &["distributions"]),
    ("coherent", &["alpha", "xi"]),
    ("squeezed-vacuum", &["xi"]),
    ("moon", &[]),
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let sections = tokenize(text)?;
    let empty = Section::new();
    let get = |name: &str| sections.get(name).unwrap_or(&empty);
    let coupling = parse_coupling(get("coupling"))?;
    let (state, family) = parse_state(get("state"), &coupling)?;
    let time = parse_time(get("time"))?;
    let tolerances = parse_tolerances(get("tolerances"))?;
    let output = parse_output(get("output"))?;
    Ok(RunConfig { coupling, state, family, time, tolerances, output })
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, format!("malformed section header {content:?}")))?
                .trim()
                .to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::at(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::at(line, format!("section [{name}] appears twice")));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let (key, value) =
            content.split_once('=').ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim().to_string();
        let section = current.as_ref().ok_or_else(|| ConfigError::at(line, format!("key `{key}` outside any section")))?;
        let allowed = SECTIONS.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::at(line, format!("unknown key `{key}` in [{section}]")));
        }
        let entries = sections.get_mut(section).expect("section inserted at header");
        if entries.contains_key(&key) {
            return Err(ConfigError::at(line, format!("duplicate key `{key}` in [{section}]")));
        }
        entries.insert(key, Entry { value: value.trim().to_string(), line });
    }
    Ok(sections)
}

fn number(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = e.value.parse().map_err(|_| ConfigError::at(e.line, format!("{key}: cannot parse {:?} as a number", e.value)))?;
    if !v.is_finite() {
        return Err(ConfigError::at(e.line, format!("{key} must be finite")));
    }
    Ok(v)
}

fn integer(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::at(e.line, format!("{key}: cannot parse {:?} as a non-negative integer", e.value)))
}

fn complex(s: &str, e: &Entry, key: &str) -> Result<Complex64, ConfigError> {
    let z: Complex64 = s.trim().parse().map_err(|_| ConfigError::at(e.line, format!("{key}: cannot parse {s:?} as a complex number")))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ConfigError::at(e.line, format!("{key} must be finite")));
    }
    Ok(z)
}

fn list<T>(e: &Entry, key: &str, item: impl Fn(&str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    e.value.split(',').map(|s| item(s.trim())).collect::<Result<Vec<_>, _>>().and_then(|v| {
        if v.is_empty() {
            Err(ConfigError::at(e.line, format!("{key} is empty")))
        } else {
            Ok(v)
        }
    })
}

fn required<'a>(section: &'a Section, name: &str, key: &str) -> Result<&'a Entry, ConfigError> {
    section.get(key).ok_or_else(|| ConfigError::global(format!("[{name}] is missing `{key}`")))
}

fn parse_coupling(s: &Section) -> Result<CouplingConfig, ConfigError> {
    let kappa_e = required(s, "coupling", "kappa")?;
    let kappa = number(kappa_e, "kappa")?;
    if kappa <= 0.0 {
        return Err(ConfigError::at(kappa_e.line, format!("kappa = {kappa} must be positive")));
    }
    let omega = s.get("omega").map(|e| number(e, "omega")).transpose()?.unwrap_or(0.0);
    let n = s.get("n").map(|e| integer(e, "n").map(|v| (v, e.line))).transpose()?;
    let g = match (s.get("g"), s.get("uniform")) {
        (Some(e), None) => {
            let g = list(e, "g", |x| number(&Entry { value: x.into(), line: e.line }, "g"))?;
            if let Some((n, line)) = n {
                if n != g.len() {
                    return Err(ConfigError::at(line, format!("n = {n} but g lists {} couplings", g.len())));
                }
            }
            if let Some(bad) = g.iter().find(|x| **x <= 0.0) {
                return Err(ConfigError::at(e.line, format!("g: coupling {bad} must be positive")));
            }
            g
        }
        (None, Some(e)) => {
            let (n, _) = n.ok_or_else(|| ConfigError::at(e.line, "`uniform` needs `n`"))?;
            let v = number(e, "uniform")?;
            if v <= 0.0 {
                return Err(ConfigError::at(e.line, format!("uniform = {v} must be positive")));
            }
            vec![v; n]
        }
        (Some(e), Some(_)) => return Err(ConfigError::at(e.line, "give either `g` or `uniform`, not both")),
        (None, None) => return Err(ConfigError::global("[coupling] needs `g` or `uniform`")),
    };
    if g.is_empty() {
        return Err(ConfigError::global("[coupling] needs at least one oscillator"));
    }
    CouplingConfig::new(g, kappa, omega).map_err(|e| ConfigError::global(e.to_string()))
}

/// `amp [d1 d2 ...] R`, terms separated by commas.
fn parse_terms(e: &Entry, n: usize) -> Result<Vec<(Complex64, BasisIndex)>, ConfigError> {
    let mut terms = Vec::new();
    for raw in e.value.split(',') {
        let raw = raw.trim();
        let bad = |what: &str| ConfigError::at(e.line, format!("terms: {what} in {raw:?}; expected `amp [d1 ... d{}] R`", n.saturating_sub(1)));
        let (amp, rest) = raw.split_once('[').ok_or_else(|| bad("missing `[`"))?;
        let (deg, rung) = rest.split_once(']').ok_or_else(|| bad("missing `]`"))?;
        let amp = complex(amp, e, "terms")?;
        let degeneracy = deg
            .split_whitespace()
            .map(|x| x.parse::<usize>().map_err(|_| bad("bad occupation")))
            .collect::<Result<Vec<_>, _>>()?;
        if degeneracy.len() + 1 != n {
            return Err(bad(&format!("{} dark occupations for {n} oscillators", degeneracy.len())));
        }
        let rung = rung.trim().parse::<usize>().map_err(|_| bad("bad rung"))?;
        terms.push((amp, BasisIndex::new(degeneracy, rung)));
    }
    let norm: f64 = terms.iter().map(|t| t.0.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(ConfigError::at(e.line, format!("terms have norm² {norm}, expected 1")));
    }
    Ok(terms)
}

fn parse_moon(family: &str, line: usize, cfg: &CouplingConfig) -> Result<StateSpec, ConfigError> {
    let mut m = None;
    let mut n = None;
    for tok in family.split_whitespace().skip(1) {
        let (k, v) = tok.split_once('=').ok_or_else(|| ConfigError::at(line, format!("moon: expected `M=<int>` or `N=<int>`, got {tok:?}")))?;
        let v: usize = v.parse().map_err(|_| ConfigError::at(line, format!("moon: {k} must be an integer")))?;
        match k {
            "M" => m = Some(v),
            "N" => n = Some(v),
            _ => return Err(ConfigError::at(line, format!("moon: unknown parameter {k:?}"))),
        }
    }
    let (m, n) = m.zip(n).ok_or_else(|| ConfigError::at(line, "moon needs `M=<int> N=<int>`"))?;
    moon_state(m, n, cfg).map_err(|e| ConfigError::at(line, e.to_string()))
}

fn parse_state(s: &Section, cfg: &CouplingConfig) -> Result<(StateSpec, String), ConfigError> {
    let fam_e = required(s, "state", "family")?;
    let family = fam_e.value.clone();
    let name = family.split_whitespace().next().unwrap_or("");
    let keys = FAMILY_KEYS
        .iter()
        .find(|(f, _)| *f == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| ConfigError::at(fam_e.line, format!("unknown state family {name:?}")))?;
    for (k, e) in s {
        if k != "family" && k != "displace" && !keys.contains(&k.as_str()) {
            return Err(ConfigError::at(e.line, format!("key `{k}` does not apply to family {name:?}")));
        }
    }
    if name != "moon" && family.split_whitespace().count() > 1 {
        return Err(ConfigError::at(fam_e.line, format!("family {name:?} takes no parameters")));
    }
    let n = cfg.n_modes();
    let need = |key: &str| required(s, "state", key);
    let spec = match name {
        "vacuum" => StateSpec::vacuum(n),
        "dicke" => StateSpec::DickeSuperposition { terms: parse_terms(need("terms")?, n)? },
        "fock" => {
            let e = need("occupations")?;
            let occ = e
                .value
                .split_whitespace()
                .map(|x| x.parse::<usize>().map_err(|_| ConfigError::at(e.line, format!("occupations: bad value {x:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            StateSpec::MultimodeFock { occupations: occ }
        }
        "thermal" => {
            let e = need("nbar")?;
            StateSpec::IncoherentMixture(Mixture::Thermal(list(e, "nbar", |x| number(&Entry { value: x.into(), line: e.line }, "nbar"))?))
        }
        "mixture" => {
            let e = need("distributions")?;
            let d = e
                .value
                .split('|')
                .map(|mode| {
                    mode.split_whitespace()
                        .map(|x| number(&Entry { value: x.into(), line: e.line }, "distributions"))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            StateSpec::IncoherentMixture(Mixture::Distributions(d))
        }
        "coherent" => {
            let e = need("alpha")?;
            let alpha = list(e, "alpha", |x| complex(x, e, "alpha"))?;
            let xi = match s.get("xi") {
                Some(x) => list(x, "xi", |v| complex(v, x, "xi"))?,
                None => vec![Complex64::new(0.0, 0.0); alpha.len()],
            };
            StateSpec::ProductSqueezedCoherent { alpha, xi }
        }
        "squeezed-vacuum" => {
            let e = need("xi")?;
            StateSpec::CollectiveSqueezedVacuum { xi: complex(&e.value, e, "xi")? }
        }
        "moon" => parse_moon(&family, fam_e.line, cfg)?,
        _ => unreachable!("family list checked above"),
    };
    let spec = match s.get("displace") {
        None => spec,
        Some(e) => {
            let (mode, amp) =
                e.value.split_once(':').ok_or_else(|| ConfigError::at(e.line, "displace: expected `<mode>:<amplitude>`"))?;
            let mode = mode.trim().parse::<usize>().map_err(|_| ConfigError::at(e.line, format!("displace: bad mode {mode:?}")))?;
            StateSpec::CollectiveDisplaced { base: Box::new(spec), mode, amplitude: complex(amp, e, "displace")? }
        }
    };
    spec.validate(n).map_err(|err| ConfigError::at(fam_e.line, format!("state: {err}")))?;
    Ok((spec, family))
}

fn parse_time(s: &Section) -> Result<TimeGrid, ConfigError> {
    let t_max = match s.get("t_max") {
        Some(e) => {
            let v = number(e, "t_max")?;
            if v <= 0.0 {
                return Err(ConfigError::at(e.line, format!("t_max = {v} must be positive")));
            }
            v
        }
        None => 4.0,
    };
    let samples = match s.get("samples") {
        Some(e) => {
            let v = integer(e, "samples")?;
            if v < 2 {
                return Err(ConfigError::at(e.line, format!("samples = {v} must be at least 2")));
            }
            v
        }
        None => 101,
    };
    Ok(TimeGrid { t_max, samples })
}

fn positive(s: &Section, key: &str, default: f64) -> Result<f64, ConfigError> {
    match s.get(key) {
        Some(e) => {
            let v = number(e, key)?;
            if v <= 0.0 {
                return Err(ConfigError::at(e.line, format!("{key} = {v} must be positive")));
            }
            Ok(v)
        }
        None => Ok(default),
    }
}

fn parse_tolerances(s: &Section) -> Result<Tolerances, ConfigError> {
    Ok(Tolerances { epsilon: positive(s, "epsilon", DEFAULT_EPSILON)?, tail: positive(s, "tail", 1e-10)?, step: positive(s, "step", 1e-9)? })
}

fn parse_output(s: &Section) -> Result<OutputConfig, ConfigError> {
    let dir = s.get("dir").map(|e| PathBuf::from(&e.value)).unwrap_or_else(|| PathBuf::from("."));
    let svg = match s.get("svg") {
        None => true,
        Some(e) => match e.value.as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            other => return Err(ConfigError::at(e.line, format!("svg: expected true or false, got {other:?}"))),
        },
    };
    Ok(OutputConfig { dir, svg })
}
