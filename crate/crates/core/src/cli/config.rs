//! Plain-text run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Angles and
//! quasimomenta accept a multiple of π written as `0.05pi` or `0.05*pi`.
//! `delta` is required, every other key has a default.

use crate::geometry::{Incidence, MetascreenConfig};
use crate::layer_ops::Discretization;
use crate::resonance::MullerOptions;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Band,
    Spectrum,
    Resonances,
    Capacitance,
    BicCheck,
    GreenCheck,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Band => "band",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Resonances => "resonances",
            Subcommand::Capacitance => "capacitance",
            Subcommand::BicCheck => "bic-check",
            Subcommand::GreenCheck => "green-check",
        }
    }
}

/// Discretization and solver controls.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Numerics {
    pub disc: Discretization,
    pub muller: MullerOptions,
    /// Plane-wave orders kept by the spectral series in `green-check`.
    pub spectral_modes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Job {
    pub subcommand: Subcommand,
    /// Explicit frequency range; `None` picks one around the sharp line.
    pub omega_range: Option<(f64, f64)>,
    pub omega_points: usize,
    pub refine_points: usize,
    pub alpha_range: (f64, f64),
    pub alpha_points: usize,
    /// Quasimomentum for the optional `C^α` in the capacitance report.
    pub capacitance_alpha: Option<f64>,
    pub fd_step: f64,
    pub winding: bool,
    pub green_alpha: f64,
    pub green_k: f64,
    pub green_points: usize,
    pub output: PathBuf,
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub metascreen: MetascreenConfig,
    pub incidence: Incidence,
    pub numerics: Numerics,
    pub job: Job,
    /// Resolved `key = value` pairs, echoed into the manifest.
    pub echo: BTreeMap<String, String>,
}

/// One problem found while reading or validating a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

/// All problems of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Recognized keys with their one-line documentation.
pub const KEYS: &[(&str, &str)] = &[
    ("L", "lattice period"),
    ("R_D", "disk radius"),
    ("d", "center-to-center separation"),
    ("theta", "dimer inclination, radians"),
    ("delta", "density contrast (required)"),
    ("v_b", "interior wave speed"),
    ("alpha0", "tangential component of the incidence direction"),
    ("N", "Fourier order per disk"),
    ("Q", "plane-wave orders for green-check"),
    ("E", "Ewald split in units of 1/L"),
    ("omega_floor", "smallest |omega| accepted"),
    ("max_condition", "largest accepted condition number"),
    ("tolerance", "Muller step tolerance"),
    ("singular_tolerance", "required sigma_min/sigma_max at a root"),
    ("max_iterations", "Muller iteration cap"),
    ("window", "Muller window in units of v_b sqrt(delta/|D|)"),
    ("omega_min", "spectrum lower frequency"),
    ("omega_max", "spectrum upper frequency"),
    ("omega_points", "uniform spectrum points"),
    ("refine_points", "extra points around the sharp line"),
    ("alpha_min", "band lower quasimomentum"),
    ("alpha_max", "band upper quasimomentum"),
    ("alpha_points", "band points"),
    ("alpha", "quasimomentum for C^alpha in the capacitance report"),
    ("fd_step", "finite-difference step for C^1"),
    ("winding", "also count resonances by the argument principle"),
    ("green_alpha", "quasimomentum for green-check"),
    ("green_k", "wavenumber for green-check"),
    ("green_points", "sample points for green-check"),
    ("output", "output directory"),
    ("svg", "SVG plot path"),
];

/// Reads `0.3`, `pi`, `0.05pi`, `-0.5*pi`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let bad = || format!("cannot read {t:?} as a number");
    let v = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let m = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| bad())?,
        };
        m * PI
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| format!("cannot read {:?} as a nonnegative integer", s.trim()))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        t => Err(format!("cannot read {t:?} as a boolean")),
    }
}

struct Entry {
    value: String,
    line: Option<usize>,
}

/// Collects the pairs of `text`, then applies `overrides` on top.
fn collect(text: &str, overrides: &[(String, String)], errors: &mut Vec<ConfigError>) -> BTreeMap<String, Entry> {
    let known = |k: &str| KEYS.iter().any(|(n, _)| *n == k);
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected key = value, got {body:?}"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !known(k) {
            errors.push(ConfigError {
                line: Some(line),
                key: Some(k.to_string()),
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some(prev) = map.get(k) {
            errors.push(ConfigError {
                line: Some(line),
                key: Some(k.to_string()),
                message: format!("duplicate key, first set on line {}", prev.line.unwrap_or(0)),
            });
            continue;
        }
        map.insert(
            k.to_string(),
            Entry {
                value: v.to_string(),
                line: Some(line),
            },
        );
    }
    for (k, v) in overrides {
        if !known(k) {
            errors.push(ConfigError {
                line: None,
                key: Some(k.clone()),
                message: "unknown key in override".into(),
            });
            continue;
        }
        map.insert(
            k.clone(),
            Entry {
                value: v.clone(),
                line: None,
            },
        );
    }
    map
}

struct Reader<'a> {
    map: &'a BTreeMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Reader<'_> {
    fn get<T>(&mut self, key: &str, parse: fn(&str) -> Result<T, String>) -> Option<T> {
        let e = self.map.get(key)?;
        match parse(&e.value) {
            Ok(v) => Some(v),
            Err(message) => {
                self.errors.push(ConfigError {
                    line: e.line,
                    key: Some(key.into()),
                    message,
                });
                None
            }
        }
    }

    fn num(&mut self, key: &str, default: f64) -> f64 {
        self.get(key, parse_number).unwrap_or(default)
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        self.get(key, parse_count).unwrap_or(default)
    }

    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.map.get(key).and_then(|e| e.line);
        self.errors.push(ConfigError {
            line,
            key: Some(key.into()),
            message: message.into(),
        });
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0) {
            self.fail(key, format!("must be positive, got {v}"));
        }
    }
}

/// Parses and validates a configuration; every problem is reported at once.
pub fn parse_config(
    text: &str,
    overrides: &[(String, String)],
    subcommand: Subcommand,
) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let map = collect(text, overrides, &mut errors);
    let mut r = Reader {
        map: &map,
        errors: Vec::new(),
    };

    let base = MetascreenConfig::default();
    let delta = match r.get("delta", parse_number) {
        Some(d) => d,
        None => {
            if !map.contains_key("delta") {
                r.fail("delta", "required key is missing");
            }
            base.delta
        }
    };
    let metascreen = MetascreenConfig {
        period: r.num("L", base.period),
        radius: r.num("R_D", base.radius),
        separation: r.num("d", base.separation),
        theta: r.num("theta", base.theta),
        delta,
        v_b: r.num("v_b", base.v_b),
    };
    for v in metascreen.validate() {
        r.errors.push(ConfigError {
            line: None,
            key: None,
            message: v.to_string(),
        });
    }
    let alpha0 = r.num("alpha0", 0.0);
    let incidence = match Incidence::new(alpha0) {
        Ok(i) => i,
        Err(e) => {
            r.fail("alpha0", e.to_string());
            Incidence::normal_incidence()
        }
    };

    let dd = Discretization::default();
    let disc = Discretization {
        order: r.count("N", dd.order),
        ewald_split: r.num("E", dd.ewald_split),
        omega_floor: r.num("omega_floor", dd.omega_floor),
        max_condition: r.num("max_condition", dd.max_condition),
    };
    if !(1..=64).contains(&disc.order) {
        r.fail("N", format!("must lie in 1..=64, got {}", disc.order));
    }
    r.positive("E", disc.ewald_split);
    r.positive("omega_floor", disc.omega_floor);
    if !(disc.max_condition > 1.0) {
        r.fail("max_condition", "must exceed 1");
    }
    let md = MullerOptions::default();
    let muller = MullerOptions {
        max_iterations: r.count("max_iterations", md.max_iterations),
        tolerance: r.num("tolerance", md.tolerance),
        singular_tolerance: r.num("singular_tolerance", md.singular_tolerance),
        window: r.num("window", md.window),
    };
    if muller.max_iterations == 0 {
        r.fail("max_iterations", "must be at least 1");
    }
    r.positive("tolerance", muller.tolerance);
    r.positive("singular_tolerance", muller.singular_tolerance);
    r.positive("window", muller.window);
    let spectral_modes = r.count("Q", 100);
    if spectral_modes == 0 {
        r.fail("Q", "must be at least 1");
    }

    let omega_range = match (r.get("omega_min", parse_number), r.get("omega_max", parse_number)) {
        (Some(a), Some(b)) => {
            if !(0.0 < a && a < b) {
                r.fail("omega_max", format!("need 0 < omega_min < omega_max, got {a} and {b}"));
            }
            Some((a, b))
        }
        (None, None) => None,
        (Some(_), None) => {
            r.fail("omega_max", "must be given together with omega_min");
            None
        }
        (None, Some(_)) => {
            r.fail("omega_min", "must be given together with omega_max");
            None
        }
    };
    let omega_points = r.count("omega_points", 200);
    if omega_points < 2 {
        r.fail("omega_points", "need at least 2 points");
    }
    let refine_points = r.count("refine_points", 40);
    let period = metascreen.period;
    let alpha_range = (r.num("alpha_min", 0.05 * PI / period), r.num("alpha_max", PI / period));
    if !(alpha_range.0 < alpha_range.1) {
        r.fail("alpha_max", "need alpha_min < alpha_max");
    }
    let alpha_points = r.count("alpha_points", 40);
    if alpha_points < 2 {
        r.fail("alpha_points", "need at least 2 points");
    }
    let capacitance_alpha = r.get("alpha", parse_number);
    let fd_step = r.num("fd_step", 1e-2);
    if !(1e-3..=1e-1).contains(&fd_step) {
        r.fail("fd_step", "must lie in [1e-3, 1e-1]");
    }
    let winding = r.get("winding", parse_bool).unwrap_or(false);
    let green_alpha = r.num("green_alpha", 0.3);
    let green_k = r.num("green_k", 2.0);
    let green_points = r.count("green_points", 100);
    if green_points == 0 {
        r.fail("green_points", "must be at least 1");
    }
    let output = PathBuf::from(map.get("output").map_or(".", |e| e.value.as_str()));
    let svg = map.get("svg").map(|e| PathBuf::from(&e.value));

    match subcommand {
        Subcommand::BicCheck => {
            if metascreen.theta != 0.0 {
                r.fail("theta", "bic-check needs the symmetric dimer, theta = 0");
            }
            if alpha0 != 0.0 {
                r.fail("alpha0", "bic-check needs normal incidence, alpha0 = 0");
            }
        }
        Subcommand::Spectrum if metascreen.theta == 0.0 && incidence.alpha0 == 0.0 => {
            log::warn!("theta = 0: the sharp line is a bound state and leaves no trace in the spectrum");
        }
        _ => {}
    }

    errors.extend(r.errors);
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let echo = map.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect();
    Ok(RunConfig {
        metascreen,
        incidence,
        numerics: Numerics {
            disc,
            muller,
            spectral_modes,
        },
        job: Job {
            subcommand,
            omega_range,
            omega_points,
            refine_points,
            alpha_range,
            alpha_points,
            capacitance_alpha,
            fd_step,
            winding,
            green_alpha,
            green_k,
            green_points,
            output,
            svg,
        },
        echo,
    })
}

/// Reads `path` and parses it.
pub fn parse_config_file(
    path: &Path,
    overrides: &[(String, String)],
    subcommand: Subcommand,
) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        }])
    })?;
    parse_config(&text, overrides, subcommand)
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
