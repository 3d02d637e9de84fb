//! Command-line front end: configuration, sweeps, result files and plots.
//!
//! Every run writes `manifest.json` into the output directory alongside its
//! data. Exit codes: 0 success, 1 configuration or I/O problem, 2 numerical
//! failure, 3 some grid points failed. `METASCREEN_WORKERS` sets the size of
//! the worker pool.

pub mod config;
pub mod output;
pub mod svg;

use crate::capacitance::{c1_matrix_numeric, capacitance_data, capacitance_periodic, dipole_vector, Matrix2};
use crate::lattice_green::{greens_quasi_ewald, greens_quasi_spectral};
use crate::resonance::{band_sweep, res0_asymptotic, resonances_slaved, winding_number, WindingContour};
use crate::scattering::{
    bic_check, default_range, lorentzian_grid, spectrum_sweep, AsymptoticModel, SharpLine, SpectrumRow,
};
use clap::{Args, Parser};
pub use config::{parse_config, parse_config_file, ConfigErrors, RunConfig, Subcommand};
use num_complex::Complex64 as C64;
use output::{write_atomic, write_csv, write_json, Manifest, PointStatus, Status};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// Name of the environment variable holding the worker count.
pub const WORKERS_VAR: &str = "METASCREEN_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "metascreen", version, about = "Resonances and transmission of a periodic dimer screen")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Band diagram over a quasimomentum grid (band.csv).
    Band(JobArgs),
    /// Transmission and reflection spectrum (spectrum.csv).
    Spectrum(JobArgs),
    /// Both subwavelength resonances (resonances.json).
    Resonances(JobArgs),
    /// Capacitance data (capacitance.json).
    Capacitance(JobArgs),
    /// Bound-state checks for the symmetric dimer (bic.json).
    BicCheck(JobArgs),
    /// Spectral against Ewald lattice sums (green_check.csv).
    GreenCheck(JobArgs),
    /// Print the configuration keys.
    Keys,
}

#[derive(Debug, Args)]
pub struct JobArgs {
    /// Configuration file of `key = value` lines.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory, overriding the `output` key.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also render a plot to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set delta=2e-4`.
    #[arg(long = "set", value_parser = config::parse_override)]
    pub set: Vec<(String, String)>,
}

/// Parses `args` and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (sub, args) = match cli.command {
        Command::Keys => {
            for (k, doc) in config::KEYS {
                println!("{k:<20} {doc}");
            }
            return EXIT_OK;
        }
        Command::Band(a) => (Subcommand::Band, a),
        Command::Spectrum(a) => (Subcommand::Spectrum, a),
        Command::Resonances(a) => (Subcommand::Resonances, a),
        Command::Capacitance(a) => (Subcommand::Capacitance, a),
        Command::BicCheck(a) => (Subcommand::BicCheck, a),
        Command::GreenCheck(a) => (Subcommand::GreenCheck, a),
    };
    execute(sub, &args)
}

fn config_failure(sub: Subcommand, out: Option<&Path>, messages: Vec<String>) -> i32 {
    for m in &messages {
        eprintln!("error: {m}");
    }
    if let Some(dir) = out {
        let mut manifest = Manifest::new(sub.name());
        manifest.exit_code = EXIT_CONFIG;
        for m in messages {
            manifest.error("config", m);
        }
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = write_json(&dir.join("manifest.json"), &manifest);
        }
    }
    EXIT_CONFIG
}

fn worker_pool() -> Result<rayon::ThreadPool, String> {
    let n = match std::env::var(WORKERS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("{WORKERS_VAR} = {v:?} is not a worker count"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| e.to_string())
}

/// Runs one subcommand with the parsed job arguments.
pub fn execute(sub: Subcommand, args: &JobArgs) -> i32 {
    let mut cfg = match parse_config_file(&args.config, &args.set, sub) {
        Ok(c) => c,
        Err(errs) => {
            let msgs = errs.0.iter().map(|e| e.to_string()).collect();
            return config_failure(sub, args.out.as_deref(), msgs);
        }
    };
    if let Some(o) = &args.out {
        cfg.job.output = o.clone();
    }
    if let Some(s) = &args.svg {
        cfg.job.svg = Some(s.clone());
    }
    let out = cfg.job.output.clone();
    if let Err(e) = std::fs::create_dir_all(&out) {
        return config_failure(sub, None, vec![format!("cannot create {}: {e}", out.display())]);
    }
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(m) => return config_failure(sub, Some(&out), vec![m]),
    };
    let manifest = pool.install(|| run(&cfg));
    if let Err(e) = write_json(&out.join("manifest.json"), &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_CONFIG;
    }
    for e in &manifest.errors {
        eprintln!("error ({}): {}", e.kind, e.message);
    }
    manifest.exit_code
}

enum Failure {
    Numerical(String),
    Io(std::io::Error),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Runs the job described by `cfg` and returns the filled-in manifest.
///
/// Result files are written as a side effect; the manifest itself is left to
/// the caller.
pub fn run(cfg: &RunConfig) -> Manifest {
    let mut m = Manifest::new(cfg.job.subcommand.name());
    m.config = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    let res = match cfg.job.subcommand {
        Subcommand::Band => run_band(cfg, &mut m),
        Subcommand::Spectrum => run_spectrum(cfg, &mut m),
        Subcommand::Resonances => run_resonances(cfg, &mut m),
        Subcommand::Capacitance => run_capacitance(cfg, &mut m),
        Subcommand::BicCheck => run_bic(cfg, &mut m),
        Subcommand::GreenCheck => run_green(cfg, &mut m),
    };
    m.exit_code = match res {
        Err(Failure::Io(e)) => {
            m.error("io", e.to_string());
            EXIT_CONFIG
        }
        Err(Failure::Numerical(msg)) => {
            m.error("numerical", msg);
            EXIT_NUMERICAL
        }
        Ok(()) => {
            let failed = m.failed_points();
            if failed == 0 {
                EXIT_OK
            } else if failed == m.points.len() {
                m.error("numerical", "every grid point failed");
                EXIT_NUMERICAL
            } else {
                m.error("partial", format!("{failed} of {} grid points failed", m.points.len()));
                EXIT_PARTIAL
            }
        }
    };
    m
}

fn output(cfg: &RunConfig, m: &mut Manifest, name: &str) -> PathBuf {
    let p = cfg.job.output.join(name);
    m.outputs.push(p.clone());
    p
}

fn write_svg(cfg: &RunConfig, m: &mut Manifest, panels: &[svg::Panel]) -> std::io::Result<()> {
    if let Some(p) = &cfg.job.svg {
        write_atomic(p, svg::render(panels).as_bytes())?;
        m.outputs.push(p.clone());
    }
    Ok(())
}

fn status(index: usize, at: f64, error: Option<String>) -> PointStatus {
    PointStatus {
        index,
        at,
        status: if error.is_some() { Status::Failed } else { Status::Ok },
        error,
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Serialize)]
struct SpectrumCsv {
    omega: f64,
    #[serde(rename = "T_num")]
    t_num: Option<f64>,
    #[serde(rename = "R_num")]
    r_num: Option<f64>,
    #[serde(rename = "T_asym")]
    t_asym: Option<f64>,
    #[serde(rename = "R_asym")]
    r_asym: Option<f64>,
    re_t: Option<f64>,
    im_t: Option<f64>,
    re_r: Option<f64>,
    im_r: Option<f64>,
    residual: Option<f64>,
}

impl From<&SpectrumRow> for SpectrumCsv {
    fn from(r: &SpectrumRow) -> Self {
        let n = r.numeric.as_ref();
        let a = r.asymptotic.as_ref();
        SpectrumCsv {
            omega: r.omega,
            t_num: n.map(|s| s.transmittance),
            r_num: n.map(|s| s.reflectance),
            t_asym: a.map(|s| s.transmittance),
            r_asym: a.map(|s| s.reflectance),
            re_t: n.map(|s| s.t.re),
            im_t: n.map(|s| s.t.im),
            re_r: n.map(|s| s.r.re),
            im_r: n.map(|s| s.r.im),
            residual: n.map(|s| s.residual),
        }
    }
}

fn run_spectrum(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    let (ms, inc, disc) = (&cfg.metascreen, &cfg.incidence, &cfg.numerics.disc);
    let delta = ms.delta;
    let model = AsymptoticModel::new(ms, inc, delta, disc).ok();
    let pair = match resonances_slaved(ms, inc, delta, disc, &cfg.numerics.muller) {
        Ok((p, _)) => Some(p),
        Err(e) => {
            log::warn!("refining around the asymptotic line: {e}");
            model.map(|x| x.pair)
        }
    };
    let line = pair
        .map(|p| SharpLine::from_pair(&p))
        .filter(|l| l.width > 1e-12 * l.center.abs());
    let (lo, hi) = cfg.job.omega_range.unwrap_or_else(|| default_range(ms, delta, model.as_ref()));
    let mut grid = match line {
        Some(l) => lorentzian_grid(lo, hi, cfg.job.omega_points, l.center, l.width, cfg.job.refine_points),
        None => lorentzian_grid(lo, hi, cfg.job.omega_points, 0.0, 0.0, 0),
    };
    // the transmission peak sits at Re ω2
    if let Some(w) = pair.map(|p| p.omega2.re).filter(|w| *w > lo && *w < hi) {
        if !grid.iter().any(|g| (g - w).abs() < 1e-14) {
            grid.push(w);
            grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        }
    }
    log::info!("spectrum: {} frequencies on [{lo}, {hi}]", grid.len());
    let rows = spectrum_sweep(ms, inc, delta, &grid, disc, model.as_ref());
    m.points = rows
        .iter()
        .enumerate()
        .map(|(i, r)| status(i, r.omega, r.error.clone()))
        .collect();
    let csv: Vec<SpectrumCsv> = rows.iter().map(SpectrumCsv::from).collect();
    write_csv(&output(cfg, m, "spectrum.csv"), &csv)?;

    let ok: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.t_num().map(|t| (r.omega, t))).collect();
    let peak = ok.iter().cloned().fold(None, |b: Option<(f64, f64)>, x| match b {
        Some(b) if b.1 >= x.1 => Some(b),
        _ => Some(x),
    });
    let dip = ok.iter().cloned().fold(None, |b: Option<(f64, f64)>, x| match b {
        Some(b) if b.1 <= x.1 => Some(b),
        _ => Some(x),
    });
    let at = |p: Option<(f64, f64)>| p.map(|(w, t)| json!({"omega": w, "T": t}));
    let mut out = std::collections::BTreeMap::new();
    out.insert("peak", at(peak));
    out.insert("dip", at(dip));
    out.insert(
        "sharp_resonance",
        pair.map(|p| json!({"omega2": p.omega2, "method": p.method})),
    );
    m.summary = json!(out);

    let series = |f: fn(&SpectrumCsv) -> Option<f64>, label: &str, color, dashed| svg::Series {
        label: label.to_string(),
        points: csv.iter().map(|r| (r.omega, f(r).unwrap_or(f64::NAN))).collect(),
        color,
        dashed,
    };
    let panels = [
        svg::Panel {
            title: "Transmittance".into(),
            xlabel: "omega".into(),
            ylabel: "T".into(),
            series: vec![
                series(|r| r.t_num, "numeric", "black", true),
                series(|r| r.t_asym, "asymptotic", "crimson", false),
            ],
            y_range: Some((0.0, 1.0)),
        },
        svg::Panel {
            title: "Reflectance".into(),
            xlabel: "omega".into(),
            ylabel: "R".into(),
            series: vec![
                series(|r| r.r_num, "numeric", "black", true),
                series(|r| r.r_asym, "asymptotic", "crimson", false),
            ],
            y_range: Some((0.0, 1.0)),
        },
    ];
    write_svg(cfg, m, &panels)?;
    Ok(())
}

#[derive(Serialize)]
struct BandCsv {
    alpha: f64,
    omega1: Option<f64>,
    omega2: Option<f64>,
    continuum_boundary: f64,
    omega1_im: Option<f64>,
    omega2_im: Option<f64>,
    omega1_asym: Option<f64>,
    omega2_asym: Option<f64>,
}

fn run_band(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    let (a, b) = cfg.job.alpha_range;
    let alphas = linspace(a, b, cfg.job.alpha_points);
    let ms = &cfg.metascreen;
    let pts = band_sweep(ms, ms.delta, &alphas, &cfg.numerics.disc, &cfg.numerics.muller);
    m.points = pts
        .iter()
        .enumerate()
        .map(|(i, p)| status(i, p.alpha, p.error.clone()))
        .collect();
    let finite = |v: f64| Some(v).filter(|x| x.is_finite());
    let csv: Vec<BandCsv> = pts
        .iter()
        .map(|p| BandCsv {
            alpha: p.alpha,
            omega1: p.omega1.map(|w| w.re),
            omega2: p.omega2.map(|w| w.re),
            continuum_boundary: p.continuum_boundary,
            omega1_im: p.omega1.map(|w| w.im),
            omega2_im: p.omega2.map(|w| w.im),
            omega1_asym: finite(p.asymptotic[0]),
            omega2_asym: finite(p.asymptotic[1]),
        })
        .collect();
    write_csv(&output(cfg, m, "band.csv"), &csv)?;

    let series = |f: &dyn Fn(&BandCsv) -> Option<f64>, label: &str, color, dashed| svg::Series {
        label: label.to_string(),
        points: csv.iter().map(|r| (r.alpha, f(r).unwrap_or(f64::NAN))).collect(),
        color,
        dashed,
    };
    let top = csv
        .iter()
        .flat_map(|r| [r.omega1, r.omega2, r.omega1_asym, r.omega2_asym])
        .flatten()
        .fold(0.0, f64::max);
    let panels = [svg::Panel {
        title: "Subwavelength bands".into(),
        xlabel: "alpha".into(),
        ylabel: "Re omega".into(),
        series: vec![
            series(&|r| r.omega1, "omega1", "navy", false),
            series(&|r| r.omega2, "omega2", "crimson", false),
            series(&|r| r.omega1_asym, "omega1 leading order", "navy", true),
            series(&|r| r.omega2_asym, "omega2 leading order", "crimson", true),
            series(&|r| Some(r.continuum_boundary), "light line", "gray", false),
        ],
        y_range: Some((0.0, 1.1 * top.max(f64::MIN_POSITIVE))),
    }];
    write_svg(cfg, m, &panels)?;
    Ok(())
}

fn run_resonances(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    let (ms, inc, disc) = (&cfg.metascreen, &cfg.incidence, &cfg.numerics.disc);
    let asym = res0_asymptotic(ms, inc, ms.delta, disc)?;
    let (pair, roots) = resonances_slaved(ms, inc, ms.delta, disc, &cfg.numerics.muller)?;
    let winding = if cfg.job.winding {
        let contour = WindingContour::around(ms, &asym, ms.delta, disc.omega_floor);
        let w = winding_number(ms, inc, ms.delta, &contour, disc)?;
        let inside = [pair.omega1, pair.omega2].iter().filter(|&&z| contour.contains(z)).count();
        if w.count != inside as i64 {
            log::warn!("argument principle counts {} roots, Muller found {inside} inside", w.count);
        }
        Some(w)
    } else {
        None
    };
    let report = json!({
        "omega1": pair.omega1,
        "omega2": pair.omega2,
        "method": pair.method,
        "iterations": [roots[0].iterations, roots[1].iterations],
        "residual": [roots[0].residual, roots[1].residual],
        "asymptotic": {"omega1": asym.omega1, "omega2": asym.omega2},
        "delta": ms.delta,
        "winding": winding,
    });
    write_json(&output(cfg, m, "resonances.json"), &report)?;
    Ok(())
}

fn max_diff(a: &Matrix2, b: &Matrix2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

fn run_capacitance(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    let (ms, inc, disc) = (&cfg.metascreen, &cfg.incidence, &cfg.numerics.disc);
    let data = capacitance_data(ms, inc, cfg.job.capacitance_alpha, disc)?;
    let per = capacitance_periodic(ms, disc)?;
    let finer = disc.with_order(disc.order + 2);
    let per2 = capacitance_periodic(ms, &finer)?;
    let (_, c_perp2) = dipole_vector(ms, &per2);
    let fd = c1_matrix_numeric(ms, inc, cfg.job.fd_step, disc)?;
    let report = json!({
        "C11_0": data.c11_0,
        "c_par": data.c_par,
        "c_perp": data.c_perp,
        "C1_matrix": data.c1_matrix,
        "C1_finite_difference": fd.extrapolated,
        "C_alpha": data.c_quasi,
        "N": disc.order,
        "convergence": {
            "C11_change_at_N_plus_2": (per2.c11 - per.c11).abs(),
            "c_perp_change_at_N_plus_2": (c_perp2 - data.c_perp).abs(),
            "C12_plus_C11": per.c12 + per.c11,
            "imaginary_residue": per.imaginary_residue,
            "C1_closed_form_vs_finite_difference": max_diff(&data.c1_matrix, &fd.extrapolated),
            "fd_step": fd.step,
        },
    });
    write_json(&output(cfg, m, "capacitance.json"), &report)?;
    Ok(())
}

fn run_bic(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    let ms = &cfg.metascreen;
    let r = bic_check(ms, ms.delta, &cfg.numerics.disc)?;
    let report = json!({
        "passed": r.passed(),
        "checks": {
            "real_frequency": r.real_frequency,
            "non_radiating": r.non_radiating,
            "no_spectral_feature": r.no_feature,
        },
        "report": r,
    });
    write_json(&output(cfg, m, "bic.json"), &report)?;
    let panels = [svg::Panel {
        title: "Transmittance near the bound state".into(),
        xlabel: "omega".into(),
        ylabel: "T".into(),
        series: vec![
            svg::Series {
                label: "numeric".into(),
                points: r.sweep.iter().map(|s| (s.0, s.1)).collect(),
                color: "black",
                dashed: true,
            },
            svg::Series {
                label: "broad resonance only".into(),
                points: r.sweep.iter().map(|s| (s.0, s.2)).collect(),
                color: "crimson",
                dashed: false,
            },
        ],
        y_range: Some((0.0, 1.0)),
    }];
    write_svg(cfg, m, &panels)?;
    if !r.passed() {
        return Err(Failure::Numerical("bound-state checks failed, see bic.json".into()));
    }
    Ok(())
}

/// Deterministic low-discrepancy sample of the strip `0.1 L ≤ |x2| ≤ 0.5 L`.
fn halton_points(n: usize, period: f64) -> Vec<[f64; 2]> {
    let radical = |mut i: usize, b: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    (1..=n)
        .map(|i| {
            let u = radical(i, 2);
            let v = radical(i, 3);
            let s = if v < 0.5 { -1.0 } else { 1.0 };
            let y = 0.1 + 0.4 * (2.0 * v - if v < 0.5 { 0.0 } else { 1.0 });
            [period * (u - 0.5), s * period * y]
        })
        .collect()
}

#[derive(Serialize)]
struct GreenCsv {
    x1: f64,
    x2: f64,
    spectral_re: Option<f64>,
    spectral_im: Option<f64>,
    ewald_re: Option<f64>,
    ewald_im: Option<f64>,
    rel_error: Option<f64>,
    quasi_defect: Option<f64>,
}

fn run_green(cfg: &RunConfig, m: &mut Manifest) -> Result<(), Failure> {
    use rayon::prelude::*;
    let l = cfg.metascreen.period;
    let alpha = C64::new(cfg.job.green_alpha, 0.0);
    let k = C64::new(cfg.job.green_k, 0.0);
    let split = cfg.numerics.disc.split(&cfg.metascreen);
    let q = cfg.numerics.spectral_modes;
    let pts = halton_points(cfg.job.green_points, l);
    let results: Vec<Result<(C64, C64, f64), crate::Error>> = pts
        .par_iter()
        .map(|&x| {
            let s = greens_quasi_spectral(x, alpha, k, l, q)?.value;
            let e = greens_quasi_ewald(x, alpha, k, l, split)?.value;
            let shifted = greens_quasi_ewald([x[0] + l, x[1]], alpha, k, l, split)?.value;
            let phase = (C64::new(0.0, 1.0) * alpha * l).exp();
            Ok((s, e, (shifted - phase * e).norm() / e.norm()))
        })
        .collect();
    let mut rows = Vec::with_capacity(pts.len());
    let (mut worst, mut worst_quasi): (f64, f64) = (0.0, 0.0);
    for (i, (x, r)) in pts.iter().zip(&results).enumerate() {
        match r {
            Ok((s, e, qd)) => {
                let rel = (s - e).norm() / e.norm();
                worst = worst.max(rel);
                worst_quasi = worst_quasi.max(*qd);
                m.points.push(status(i, x[0], None));
                rows.push(GreenCsv {
                    x1: x[0],
                    x2: x[1],
                    spectral_re: Some(s.re),
                    spectral_im: Some(s.im),
                    ewald_re: Some(e.re),
                    ewald_im: Some(e.im),
                    rel_error: Some(rel),
                    quasi_defect: Some(*qd),
                });
            }
            Err(e) => {
                m.points.push(status(i, x[0], Some(e.to_string())));
                rows.push(GreenCsv {
                    x1: x[0],
                    x2: x[1],
                    spectral_re: None,
                    spectral_im: None,
                    ewald_re: None,
                    ewald_im: None,
                    rel_error: None,
                    quasi_defect: None,
                });
            }
        }
    }
    write_csv(&output(cfg, m, "green_check.csv"), &rows)?;
    m.summary = json!({"max_rel_error": worst, "max_quasi_defect": worst_quasi});
    Ok(())
}
