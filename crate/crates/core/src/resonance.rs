//! Subwavelength resonant frequencies.
//!
//! Leading-order formulas come from the capacitance data; characteristic
//! values of `A^ω` are located with Muller's method applied to the
//! holomorphic scalar `f(ω) = 1 / (vᴴ A(ω)^{-1} u)`, whose zeros are the
//! poles of `A^{-1}`. The vectors `u, v` are the smallest singular pair at
//! the seed. The smallest singular value of `A` certifies convergence.

use crate::capacitance::{capacitance_periodic, capacitance_quasi, dipole_vector, ALPHA_MIN};
use crate::error::{Error, Result};
use crate::geometry::{Incidence, MetascreenConfig};
use crate::lattice_green::{regime_classify, Regime};
use crate::layer_ops::{assemble_a, Bloch, Discretization, FourierBasis};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Natural frequency unit `v_b sqrt(δ / |D1|)` of the subwavelength regime.
pub fn subwavelength_scale(cfg: &MetascreenConfig, delta: f64) -> f64 {
    cfg.v_b * (delta / cfg.disk_area()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Asymptotic,
    Muller,
}

/// The broad (`omega1`) and sharp (`omega2`) resonances.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResonancePair {
    pub omega1: C64,
    pub omega2: C64,
    pub method: Method,
    pub delta: f64,
}

/// Leading-order band frequencies at a fixed quasimomentum, ascending.
pub fn band_asymptotic(cfg: &MetascreenConfig, delta: f64, alpha: f64, disc: &Discretization) -> Result<[f64; 2]> {
    if alpha.abs() < ALPHA_MIN {
        return Err(Error::Parameter(format!(
            "alpha = {alpha} is too close to 0; use the normal-incidence asymptotics"
        )));
    }
    let q = capacitance_quasi(cfg, alpha, disc)?;
    let f = |l: f64| cfg.v_b * (delta * l.max(0.0) / cfg.disk_area()).sqrt();
    Ok([f(q.eigenvalues[0]), f(q.eigenvalues[1])])
}

/// Leading-order resonances for incidence with `α = ω α0`.
pub fn res0_asymptotic(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    disc: &Discretization,
) -> Result<ResonancePair> {
    let p = capacitance_periodic(cfg, disc)?;
    let (_, c_perp) = dipole_vector(cfg, &p);
    Ok(res0_from(cfg, inc, delta, p.c11, c_perp))
}

pub fn res0_from(cfg: &MetascreenConfig, inc: &Incidence, delta: f64, c11: f64, c_perp: f64) -> ResonancePair {
    let area = cfg.disk_area();
    let v2 = cfg.v_b * cfg.v_b;
    let l = cfg.period;
    let w = inc.w_perp;
    let omega1 = -I * delta * v2 * w * l / area;
    let omega2 = C64::new((2.0 * delta * v2 * c11 / area).sqrt(), 0.0) - I * delta * v2 * w * c_perp * c_perp / (2.0 * area * l);
    ResonancePair {
        omega1,
        omega2,
        method: Method::Asymptotic,
        delta,
    }
}

/// Controls for [`resonance_muller`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MullerOptions {
    pub max_iterations: usize,
    /// Step tolerance on `|Δω|`.
    pub tolerance: f64,
    /// Required `σ_min / σ_max` at the root.
    pub singular_tolerance: f64,
    /// Window `|ω| ≤ K v_b sqrt(δ/|D1|)`.
    pub window: f64,
}

impl Default for MullerOptions {
    fn default() -> Self {
        MullerOptions {
            max_iterations: 50,
            tolerance: 1e-10,
            singular_tolerance: 1e-8,
            window: 3.0,
        }
    }
}

/// A converged characteristic value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MullerRoot {
    pub omega: C64,
    pub iterations: usize,
    /// `σ_min(A) / σ_max(A)` at the root.
    pub residual: f64,
    pub last_step: f64,
}

/// Smallest singular value of `A` and the matching right/left vectors.
pub fn smallest_singular(a: &DMatrix<C64>) -> (f64, f64, DVector<C64>, DVector<C64>) {
    let svd = a.clone().svd(true, true);
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("requested").column(imin).into_owned();
    let v = svd.v_t.expect("requested").row(imin).adjoint();
    (smin, smax, v, u)
}

/// Characteristic value of `A^ω` near `guess`.
pub fn resonance_muller(
    cfg: &MetascreenConfig,
    bloch: Bloch,
    delta: f64,
    guess: C64,
    disc: &Discretization,
    opts: &MullerOptions,
) -> Result<MullerRoot> {
    let limit = opts.window * subwavelength_scale(cfg, delta);
    let a0 = assemble_a(cfg, bloch, delta, guess, disc)?.entries;
    let (_, _, right, left) = smallest_singular(&a0);
    let f = |om: C64| -> Result<C64> {
        if om.norm() > limit {
            return Err(Error::LeftWindow { re: om.re, im: om.im });
        }
        let a = assemble_a(cfg, bloch, delta, om, disc)?.entries;
        let x = a
            .lu()
            .solve(&left)
            .ok_or_else(|| Error::Numerical("singular A during Muller iteration".into()))?;
        Ok(1.0 / right.dotc(&x))
    };

    let h = 1e-3 * guess.norm().max(disc.omega_floor);
    let mut x = [guess - h, guess + h, guess];
    let mut fx = [f(x[0])?, f(x[1])?, f(x[2])?];
    let mut step = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let h1 = x[1] - x[0];
        let h2 = x[2] - x[1];
        let d1 = (fx[1] - fx[0]) / h1;
        let d2 = (fx[2] - fx[1]) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc_root = (b * b - 4.0 * a * fx[2]).sqrt();
        let den = if (b + disc_root).norm() >= (b - disc_root).norm() {
            b + disc_root
        } else {
            b - disc_root
        };
        let dx = if den.norm() == 0.0 {
            C64::new(h, 0.0)
        } else {
            -2.0 * fx[2] / den
        };
        let next = x[2] + dx;
        step = dx.norm();
        if !next.re.is_finite() || !next.im.is_finite() {
            return Err(Error::Numerical("Muller iterate is not finite".into()));
        }
        if step < opts.tolerance * next.norm().max(1.0) {
            let a = assemble_a(cfg, bloch, delta, next, disc)?.entries;
            let (smin, smax, _, _) = smallest_singular(&a);
            let residual = smin / smax;
            if residual < opts.singular_tolerance {
                return Ok(MullerRoot {
                    omega: next,
                    iterations: it,
                    residual,
                    last_step: step,
                });
            }
        }
        let fn_ = f(next)?;
        x = [x[1], x[2], next];
        fx = [fx[1], fx[2], fn_];
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        step,
    })
}

/// Both resonances for incidence `inc`, seeded by the asymptotics.
pub fn resonances_slaved(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    disc: &Discretization,
    opts: &MullerOptions,
) -> Result<(ResonancePair, [MullerRoot; 2])> {
    let asym = res0_asymptotic(cfg, inc, delta, disc)?;
    let bloch = Bloch::Slaved(*inc);
    let r1 = resonance_muller(cfg, bloch, delta, asym.omega1, disc, opts)?;
    let r2 = resonance_muller(cfg, bloch, delta, asym.omega2, disc, opts)?;
    Ok((
        ResonancePair {
            omega1: r1.omega,
            omega2: r2.omega,
            method: Method::Muller,
            delta,
        },
        [r1, r2],
    ))
}

/// Weight of the root mode on the symmetric and antisymmetric monopoles.
///
/// Returns `(|q·(1,1)|², |q·(1,-1)|²) / |q|²` for the mode-0 part `q` of the
/// smallest right singular vector of `A` at `omega`.
pub fn monopole_projection(
    cfg: &MetascreenConfig,
    bloch: Bloch,
    delta: f64,
    omega: C64,
    disc: &Discretization,
) -> Result<(f64, f64)> {
    let a = assemble_a(cfg, bloch, delta, omega, disc)?.entries;
    let (_, _, v, _) = smallest_singular(&a);
    let b = FourierBasis::new(disc.order);
    let q1 = v[b.index(crate::geometry::Disk::First, 0)];
    let q2 = v[b.index(crate::geometry::Disk::Second, 0)];
    let n = v.norm_squared();
    Ok(((q1 + q2).norm_sqr() / (2.0 * n), (q1 - q2).norm_sqr() / (2.0 * n)))
}

/// One quasimomentum of the band diagram.
#[derive(Clone, Debug, Serialize)]
pub struct BandPoint {
    pub alpha: f64,
    pub omega1: Option<C64>,
    pub omega2: Option<C64>,
    pub asymptotic: [f64; 2],
    /// The light line `ω = |α|`.
    pub continuum_boundary: f64,
    pub regimes: [Option<Regime>; 2],
    pub error: Option<String>,
}

impl BandPoint {
    pub fn failed(&self) -> bool {
        self.omega1.is_none() || self.omega2.is_none()
    }
}

/// Muller roots seeded by [`band_asymptotic`] at every `α` of the grid.
pub fn band_sweep(
    cfg: &MetascreenConfig,
    delta: f64,
    alphas: &[f64],
    disc: &Discretization,
    opts: &MullerOptions,
) -> Vec<BandPoint> {
    alphas
        .par_iter()
        .map(|&alpha| band_point(cfg, delta, alpha, disc, opts))
        .collect()
}

fn band_point(cfg: &MetascreenConfig, delta: f64, alpha: f64, disc: &Discretization, opts: &MullerOptions) -> BandPoint {
    let mut point = BandPoint {
        alpha,
        omega1: None,
        omega2: None,
        asymptotic: [f64::NAN; 2],
        continuum_boundary: alpha.abs(),
        regimes: [None, None],
        error: None,
    };
    let asym = match band_asymptotic(cfg, delta, alpha, disc) {
        Ok(a) => a,
        Err(e) => {
            point.error = Some(e.to_string());
            return point;
        }
    };
    point.asymptotic = asym;
    let mut errors = Vec::new();
    for (i, seed) in asym.iter().enumerate() {
        match resonance_muller(cfg, Bloch::Fixed(alpha), delta, C64::new(*seed, 0.0), disc, opts) {
            Ok(r) => {
                point.regimes[i] = Some(regime_classify(alpha, r.omega.re, cfg.period).regime);
                if i == 0 {
                    point.omega1 = Some(r.omega);
                } else {
                    point.omega2 = Some(r.omega);
                }
            }
            Err(e) => errors.push(format!("omega{}: {e}", i + 1)),
        }
    }
    if !errors.is_empty() {
        point.error = Some(errors.join("; "));
    }
    point
}

/// Region bounded by the winding contour.
///
/// `{|ω| < radius, Im ω < top, Re ω > -left}` with the disk `|ω| ≤ indent`
/// removed, since `det A^ω` vanishes at `ω = 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WindingContour {
    pub radius: f64,
    pub top: f64,
    pub left: f64,
    pub indent: f64,
}

impl WindingContour {
    /// Contour sized from the leading-order resonances.
    pub fn around(cfg: &MetascreenConfig, pair: &ResonancePair, delta: f64, floor: f64) -> Self {
        let scale = subwavelength_scale(cfg, delta);
        let indent = (0.3 * pair.omega1.norm()).max(2.0 * floor);
        WindingContour {
            radius: 2.5 * scale,
            top: (0.01 * scale).min(0.5 * indent),
            left: 0.5 * pair.omega2.re,
            indent,
        }
    }

    pub fn contains(&self, w: C64) -> bool {
        w.norm() < self.radius && w.im < self.top && w.re > -self.left && w.norm() > self.indent
    }

    /// Counterclockwise boundary as a list of pieces `t ∈ [0,1] -> ω`.
    fn pieces(&self) -> Vec<Box<dyn Fn(f64) -> C64 + Send + Sync>> {
        let (rho, top, left, eps) = (self.radius, self.top, self.left, self.indent);
        let xr = (rho * rho - top * top).sqrt();
        let xe = (eps * eps - top * top).sqrt();
        let yl = -(rho * rho - left * left).sqrt();
        let pa = (top / eps).asin();
        let pt = (top / rho).asin();
        let pb = yl.atan2(-left);
        vec![
            Box::new(move |t| C64::new(xr + (xe - xr) * t, top)),
            Box::new(move |t| C64::from_polar(eps, pa + (-PI - 2.0 * pa) * t)),
            Box::new(move |t| C64::new(-xe + (-left + xe) * t, top)),
            Box::new(move |t| C64::new(-left, top + (yl - top) * t)),
            Box::new(move |t| C64::from_polar(rho, pb + (pt + 2.0 * PI - pb).rem_euclid(2.0 * PI) * t)),
        ]
    }
}

/// Result of the argument-principle count.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WindingReport {
    pub contour: WindingContour,
    /// `(1/2π) Δ arg det A` before rounding.
    pub raw: f64,
    pub count: i64,
    pub samples: usize,
}

fn log_det(a: DMatrix<C64>) -> C64 {
    // sum of logs of the LU pivots keeps the magnitude in range
    let lu = a.lu();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..lu.u().nrows() {
        acc += lu.u()[(i, i)].ln();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        acc += I * PI;
    }
    acc
}

/// Number of characteristic values of `A^ω` inside `contour`.
pub fn winding_number(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    contour: &WindingContour,
    disc: &Discretization,
) -> Result<WindingReport> {
    const INITIAL: usize = 48;
    const MAX_DEPTH: usize = 14;
    const MAX_TURN: f64 = 0.4;
    let bloch = Bloch::Slaved(*inc);
    let eval = |w: C64| -> Result<f64> { Ok(log_det(assemble_a(cfg, bloch, delta, w, disc)?.entries).im) };
    let mut total = 0.0;
    let mut samples = 0usize;
    for piece in contour.pieces() {
        let ts: Vec<f64> = (0..=INITIAL).map(|i| i as f64 / INITIAL as f64).collect();
        let args: Vec<f64> = ts
            .par_iter()
            .map(|&t| eval(piece(t)))
            .collect::<Result<Vec<f64>>>()?;
        samples += args.len();
        for i in 0..INITIAL {
            let mut stack = vec![(ts[i], ts[i + 1], args[i], args[i + 1], 0usize)];
            while let Some((t0, t1, a0, a1, depth)) = stack.pop() {
                let d = wrap(a1 - a0);
                if d.abs() <= MAX_TURN {
                    total += d;
                    continue;
                }
                if depth >= MAX_DEPTH {
                    let w = piece(0.5 * (t0 + t1));
                    return Err(Error::ContourTooClose(w.norm()));
                }
                let tm = 0.5 * (t0 + t1);
                let am = eval(piece(tm))?;
                samples += 1;
                stack.push((tm, t1, am, a1, depth + 1));
                stack.push((t0, tm, a0, am, depth + 1));
            }
        }
    }
    let raw = total / (2.0 * PI);
    let count = raw.round() as i64;
    if (raw - count as f64).abs() > 0.05 {
        return Err(Error::Numerical(format!("winding number {raw} is not near an integer")));
    }
    Ok(WindingReport {
        contour: *contour,
        raw,
        count,
        samples,
    })
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}
