//! Reflection and transmission by the screen.
//!
//! The total field is `e^{ik+·x} + S^{α,ω}[ψ]` outside the disks with
//! `k± = ω(α0, ±w⊥)`. Above the screen it behaves like `t e^{ik+·x}`, below
//! like `e^{ik+·x} + r e^{ik-·x}`.

use crate::capacitance::{c1_matrix, capacitance_periodic, dipole_vector, Matrix2};
use crate::error::{Error, Result};
use crate::geometry::{Disk, Incidence, MetascreenConfig};
use crate::lattice_green::{regime_classify, transverse_wavenumber, Regime};
use crate::layer_ops::{
    assemble_rhs, assemble_system, far_field_amplitudes, plane_wave_traces, reflection_map, Bloch,
    BoundaryDensity, Discretization,
};
use crate::resonance::{
    res0_from, resonance_muller, smallest_singular, subwavelength_scale, MullerOptions, ResonancePair,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScatteringMethod {
    Numeric,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScatteringResult {
    pub omega: f64,
    pub r: C64,
    pub t: C64,
    pub transmittance: f64,
    pub reflectance: f64,
    pub method: ScatteringMethod,
    /// `‖Aη - F‖ / ‖F‖` for numeric solves, zero otherwise.
    pub residual: f64,
}

impl ScatteringResult {
    fn new(omega: f64, r: C64, t: C64, method: ScatteringMethod, residual: f64) -> Self {
        ScatteringResult {
            omega,
            r,
            t,
            transmittance: t.norm_sqr(),
            reflectance: r.norm_sqr(),
            method,
            residual,
        }
    }

    /// `[[r, t], [t, r]]`.
    pub fn smatrix(&self) -> Matrix2 {
        [[self.r, self.t], [self.t, self.r]]
    }
}

fn check_regime(cfg: &MetascreenConfig, inc: &Incidence, omega: f64) -> Result<()> {
    let rep = regime_classify(omega * inc.alpha0, omega, cfg.period);
    if rep.regime != Regime::FirstContinuum || rep.near_threshold {
        return Err(Error::Parameter(format!(
            "omega = {omega} is not inside the first radiation continuum"
        )));
    }
    Ok(())
}

/// Solves `A^ω η = F` and reads off `(r, t)` from the far field of `ψ = S^{-1} η`.
pub fn solve_scattering(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    omega: f64,
    disc: &Discretization,
) -> Result<ScatteringResult> {
    check_regime(cfg, inc, omega)?;
    let om = C64::new(omega, 0.0);
    let sys = assemble_system(cfg, Bloch::Slaved(*inc), delta, om, disc)?;
    let f = assemble_rhs(cfg, inc, &sys);
    let eta = sys
        .a
        .entries
        .clone()
        .lu()
        .solve(&f.coefficients)
        .ok_or_else(|| Error::Numerical(format!("A is singular at omega = {omega}")))?;
    let residual = (&sys.a.entries * &eta - &f.coefficients).norm() / f.coefficients.norm();
    let psi = sys.exterior_density(&BoundaryDensity::from_vector(eta, disc.order))?;
    let (up, down) = far_field_amplitudes(cfg, &psi, sys.alpha, om);
    Ok(ScatteringResult::new(omega, down, ONE + up, ScatteringMethod::Numeric, residual))
}

/// Closed-form two-resonance scattering matrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticModel {
    pub pair: ResonancePair,
    pub c_perp: f64,
}

impl AsymptoticModel {
    /// Requires an asymmetric dimer (`c⊥ ≠ 0`).
    pub fn new(cfg: &MetascreenConfig, inc: &Incidence, delta: f64, disc: &Discretization) -> Result<Self> {
        let m = Self::unchecked(cfg, inc, delta, disc)?;
        if m.c_perp.abs() < 1e-12 {
            return Err(Error::Parameter(
                "c_perp = 0: the sharp resonance is a bound state, use the bound-state check".into(),
            ));
        }
        Ok(m)
    }

    fn unchecked(cfg: &MetascreenConfig, inc: &Incidence, delta: f64, disc: &Discretization) -> Result<Self> {
        let p = capacitance_periodic(cfg, disc)?;
        let (_, c_perp) = dipole_vector(cfg, &p);
        Ok(AsymptoticModel {
            pair: res0_from(cfg, inc, delta, p.c11, c_perp),
            c_perp,
        })
    }

    /// `S(ω)` from both resonances.
    pub fn smatrix(&self, omega: f64) -> ScatteringResult {
        let (w1, w2) = (self.pair.omega1, self.pair.omega2);
        let a = w1 / (w1 - omega);
        let b = 2.0 * I * omega * w2.im / (w2 * w2 - omega * omega);
        ScatteringResult::new(omega, a + b - 1.0, a - b, ScatteringMethod::Asymptotic, 0.0)
    }

    /// `S(ω)` without the sharp resonance.
    pub fn one_resonance(&self, omega: f64) -> ScatteringResult {
        let w1 = self.pair.omega1;
        let a = w1 / (w1 - omega);
        ScatteringResult::new(omega, a - 1.0, a, ScatteringMethod::Asymptotic, 0.0)
    }

    /// Offset `ω* = Re ω2 Im ω2 / Im ω1` of the transmission zero above `Re ω2`.
    pub fn zero_offset(&self) -> f64 {
        self.pair.omega2.re * self.pair.omega2.im / self.pair.omega1.im
    }
}

pub fn smatrix_asymptotic(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    omega: f64,
    disc: &Discretization,
) -> Result<ScatteringResult> {
    Ok(AsymptoticModel::new(cfg, inc, delta, disc)?.smatrix(omega))
}

/// One row of a spectrum table.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub numeric: Option<ScatteringResult>,
    pub asymptotic: Option<ScatteringResult>,
    pub error: Option<String>,
}

impl SpectrumRow {
    pub fn t_num(&self) -> Option<f64> {
        self.numeric.map(|s| s.transmittance)
    }
}

/// Numeric and (when available) asymptotic coefficients on `grid`.
pub fn spectrum_sweep(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    grid: &[f64],
    disc: &Discretization,
    model: Option<&AsymptoticModel>,
) -> Vec<SpectrumRow> {
    grid.par_iter()
        .map(|&omega| {
            let (numeric, error) = match solve_scattering(cfg, inc, delta, omega, disc) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SpectrumRow {
                omega,
                numeric,
                asymptotic: model.map(|m| m.smatrix(omega)),
                error,
            }
        })
        .collect()
}

/// Uniform grid with extra points packed around a Lorentzian line.
///
/// The extra points are `center + width·tan(θ)` for equispaced `θ`, which
/// spaces them evenly in the line's phase.
pub fn lorentzian_grid(lo: f64, hi: f64, uniform: usize, center: f64, width: f64, extra: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..uniform)
        .map(|i| lo + (hi - lo) * i as f64 / (uniform.max(2) - 1) as f64)
        .collect();
    if extra > 0 && width > 0.0 {
        // reach ten widths either side
        let tmax = 10f64.atan();
        for j in 0..extra {
            let th = -tmax + 2.0 * tmax * (j as f64 + 0.5) / extra as f64;
            let w = center + width * th.tan();
            if w > lo && w < hi {
                out.push(w);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    out
}

/// Location and width of the sharp line used to place refinement points.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SharpLine {
    pub center: f64,
    pub width: f64,
}

impl SharpLine {
    /// Peak at `Re ω2`, transmission zero near `Re ω2 + ω*`.
    pub fn from_pair(pair: &ResonancePair) -> Self {
        let offset = pair.omega2.re * pair.omega2.im / pair.omega1.im;
        SharpLine {
            center: pair.omega2.re + 0.5 * offset,
            width: pair.omega2.im.abs().max(offset.abs()),
        }
    }
}

/// Default Fano spectrum: 200 uniform points on `[lo, hi]` plus 40 around the sharp line.
///
/// Without a known line the steepest change of the uniform sweep is refined.
pub fn fano_spectrum(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    (lo, hi): (f64, f64),
    disc: &Discretization,
    model: Option<&AsymptoticModel>,
    line: Option<SharpLine>,
) -> Vec<SpectrumRow> {
    let base = lorentzian_grid(lo, hi, 200, 0.0, 0.0, 0);
    let mut rows = spectrum_sweep(cfg, inc, delta, &base, disc, model);
    let line = line.or_else(|| {
        let mut spike: Option<(f64, f64)> = None;
        for w in rows.windows(2) {
            if let (Some(a), Some(b)) = (w[0].t_num(), w[1].t_num()) {
                let slope = (b - a).abs() / (w[1].omega - w[0].omega);
                if spike.is_none_or(|s| slope > s.0) {
                    spike = Some((slope, 0.5 * (w[0].omega + w[1].omega)));
                }
            }
        }
        spike.map(|(_, c)| SharpLine {
            center: c,
            width: (hi - lo) / 400.0,
        })
    });
    if let Some(l) = line {
        let extra = lorentzian_grid(lo, hi, 0, l.center, l.width, 40);
        rows.extend(spectrum_sweep(cfg, inc, delta, &extra, disc, model));
        rows.sort_by(|a, b| a.omega.partial_cmp(&b.omega).expect("finite grid"));
    }
    rows
}

/// Golden-section minimum of the numeric transmittance on `[a, b]`.
pub fn locate_dip(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    bracket: (f64, f64),
    disc: &Discretization,
) -> Result<ScatteringResult> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let t = |w: f64| solve_scattering(cfg, inc, delta, w, disc);
    let (mut a, mut b) = bracket;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = t(c)?;
    let mut fd = t(d)?;
    while (b - a) > 1e-12 * b.abs().max(1.0) {
        if fc.transmittance < fd.transmittance {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = t(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = t(d)?;
        }
    }
    Ok(if fc.transmittance < fd.transmittance { fc } else { fd })
}

/// Radiated amplitude of the sharp-resonance eigenmode.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenmodeRadiation {
    pub omega2: C64,
    /// `max(|A+|, |A-|) / ‖ψ‖` for the eigenmode density `ψ`.
    pub amplitude: f64,
    /// `‖η + Pη‖ / ‖η‖` for the in-plane flip `P` combined with the disk swap.
    pub parity_defect: f64,
}

/// Sharp resonance by Muller and the far field of its eigenmode.
pub fn eigenmode_radiation(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    disc: &Discretization,
) -> Result<EigenmodeRadiation> {
    let model = AsymptoticModel::unchecked(cfg, inc, delta, disc)?;
    let root = resonance_muller(
        cfg,
        Bloch::Slaved(*inc),
        delta,
        model.pair.omega2,
        disc,
        &MullerOptions::default(),
    )?;
    let w = root.omega;
    let sys = assemble_system(cfg, Bloch::Slaved(*inc), delta, w, disc)?;
    let (_, _, v, _) = smallest_singular(&sys.a.entries);
    let eta = BoundaryDensity::from_vector(v, disc.order);
    let psi = sys.exterior_density(&eta)?;
    let (up, down) = far_field_amplitudes(cfg, &psi, sys.alpha, w);
    let flipped = reflection_map(&eta);
    let parity_defect = (&eta.coefficients + &flipped.coefficients).norm() / eta.coefficients.norm();
    Ok(EigenmodeRadiation {
        omega2: w,
        amplitude: up.norm().max(down.norm()) / psi.l2_norm(cfg),
        parity_defect,
    })
}

/// Outcome of the bound-state checks for the symmetric dimer.
#[derive(Clone, Debug, Serialize)]
pub struct BicReport {
    pub delta: f64,
    pub omega2: C64,
    pub real_frequency: bool,
    pub far_field: f64,
    pub non_radiating: bool,
    pub parity_defect: f64,
    /// Largest `|T_num - T_one|` near `Re ω2`.
    pub max_deviation: f64,
    pub envelope: f64,
    pub no_feature: bool,
    pub sweep: Vec<(f64, f64, f64)>,
}

impl BicReport {
    pub fn passed(&self) -> bool {
        self.real_frequency && self.non_radiating && self.no_feature
    }
}

/// Checks that the sharp resonance of the symmetric dimer at normal incidence
/// neither radiates nor shows up in the spectrum.
pub fn bic_check(cfg: &MetascreenConfig, delta: f64, disc: &Discretization) -> Result<BicReport> {
    if cfg.theta != 0.0 {
        return Err(Error::Parameter(format!("bound-state check needs theta = 0, got {}", cfg.theta)));
    }
    let inc = Incidence::normal_incidence();
    let model = AsymptoticModel::unchecked(cfg, &inc, delta, disc)?;
    let rad = eigenmode_radiation(cfg, &inc, delta, disc)?;
    let center = rad.omega2.re;
    let half = 0.1 * center;
    let grid: Vec<f64> = (0..41).map(|i| center - half + 2.0 * half * i as f64 / 40.0).collect();
    let rows = spectrum_sweep(cfg, &inc, delta, &grid, disc, None);
    let mut sweep = Vec::with_capacity(rows.len());
    let mut max_dev: f64 = 0.0;
    for row in rows {
        let num = row
            .numeric
            .ok_or_else(|| Error::Numerical(row.error.unwrap_or_default()))?;
        let one = model.one_resonance(row.omega).transmittance;
        max_dev = max_dev.max((num.transmittance - one).abs());
        sweep.push((row.omega, num.transmittance, one));
    }
    let envelope = 5.0 * delta.sqrt();
    Ok(BicReport {
        delta,
        omega2: rad.omega2,
        real_frequency: rad.omega2.im.abs() < 1e-8,
        far_field: rad.amplitude,
        non_radiating: rad.amplitude < 1e-6,
        parity_defect: rad.parity_defect,
        max_deviation: max_dev,
        envelope,
        no_feature: max_dev < envelope,
        sweep,
    })
}

/// Monopole amplitudes and incident fluxes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QSolution {
    /// Solution of `(C^0 + ωC^1 - ω²|D1|/(δ v_b²)) q = -p`.
    pub q: [C64; 2],
    /// `p_i = ∫_{∂D_i} (S^{ωα0,ω})^{-1}[u^in]`.
    pub p: [C64; 2],
    /// Leading order `i k3 L (1,1) + i k3 c⊥ (1,-1)`.
    pub p_leading: [C64; 2],
    /// Radiation quadrature of `(S^{ωα0,ω})^{-1}[u^in]` towards `k+`.
    pub incident_amplitude: C64,
}

pub fn solve_q(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    omega: f64,
    disc: &Discretization,
) -> Result<QSolution> {
    check_regime(cfg, inc, omega)?;
    let om = C64::new(omega, 0.0);
    let sys = assemble_system(cfg, Bloch::Slaved(*inc), delta, om, disc)?;
    let dir = [C64::new(inc.alpha0, 0.0), C64::new(inc.w_perp, 0.0)];
    let (u, _) = plane_wave_traces(cfg, dir, om, disc.order);
    let psi = sys.exterior_density(&u)?;
    let p = [psi.integral_over(cfg, Disk::First), psi.integral_over(cfg, Disk::Second)];
    let (incident_amplitude, _) = far_field_amplitudes(cfg, &psi, sys.alpha, om);

    let per = capacitance_periodic(cfg, disc)?;
    let (c_par, c_perp) = dipole_vector(cfg, &per);
    let c0 = per.matrix();
    let c1 = c1_matrix(cfg, inc, c_par, c_perp);
    let shift = omega * omega * cfg.disk_area() / (delta * cfg.v_b * cfg.v_b);
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = c0[i][j] + omega * c1[i][j] - if i == j { shift } else { 0.0 };
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < 1e-14 * (m[0][0].norm() * m[1][1].norm()).max(1e-300) {
        return Err(Error::Numerical("monopole system is singular".into()));
    }
    let q = [
        -(m[1][1] * p[0] - m[0][1] * p[1]) / det,
        -(-m[1][0] * p[0] + m[0][0] * p[1]) / det,
    ];
    let k3 = transverse_wavenumber(sys.alpha, om);
    let p_leading = [
        I * k3 * cfg.period + I * k3 * c_perp,
        I * k3 * cfg.period - I * k3 * c_perp,
    ];
    Ok(QSolution {
        q,
        p,
        p_leading,
        incident_amplitude,
    })
}

/// Frequency range used for default spectra: `[0.05, hi]` with `hi` past the sharp line.
pub fn default_range(cfg: &MetascreenConfig, delta: f64, model: Option<&AsymptoticModel>) -> (f64, f64) {
    let hi = match model {
        Some(m) => 1.7 * m.pair.omega2.re,
        None => 3.0 * subwavelength_scale(cfg, delta),
    };
    // stay inside the first continuum at normal incidence
    (0.05, hi.min(2.0 * PI / cfg.period * 0.95))
}
