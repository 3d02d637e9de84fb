//! Green's functions of the 2D Helmholtz and Laplace operators, free and
//! periodized along the x1 axis.
//!
//! Sign convention: `G^k(x) = -(i/4) H0(k|x|)` and `G^0(x) = ln|x| / 2π`, so
//! that `(Δ + k²) G = δ`. The quasiperiodic function `G^{α,k}` sums
//! `e^{iαmL} G^k(x - mL e1)` over the lattice.
//!
//! Three representations are provided and cross-checked in the tests:
//! the spectral (plane-wave) series, the Ewald split and, for `α = k = 0`,
//! a closed form.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::special::{erf, exp_erfc, expint, expint_series, BesselTable, EULER_GAMMA};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Distance from a diffraction threshold treated as a Wood anomaly.
pub const WOOD_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Spatial,
    Spectral,
    Ewald,
    ClosedFormStatic,
}

/// A Green's function value with its gradient.
#[derive(Clone, Copy, Debug)]
pub struct GreenEval {
    pub value: C64,
    pub gradient: Option<[C64; 2]>,
    pub representation: Representation,
}

fn norm2(x: Point) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

/// Outgoing free-space fundamental solution, or `ln|x| / 2π` for `k = 0`.
pub fn greens_free(x: Point, k: C64) -> Result<GreenEval> {
    let r = norm2(x).sqrt();
    if r == 0.0 {
        return Err(Error::LatticePoint);
    }
    let (value, dr) = if k == ZERO {
        (C64::new(r.ln() / (2.0 * PI), 0.0), C64::new(1.0 / (2.0 * PI * r), 0.0))
    } else {
        let t = BesselTable::new(1, k * r);
        (-0.25 * I * t.h(0), 0.25 * I * k * t.h(1))
    };
    Ok(GreenEval {
        value,
        gradient: Some([dr * (x[0] / r), dr * (x[1] / r)]),
        representation: Representation::Spatial,
    })
}

/// Transverse wavenumber `γ = sqrt(k² - β²)` on the outgoing branch.
///
/// Propagating orders (`|β| < |k|`) continue `k sqrt(1 - (β/k)²)` from the
/// positive real axis; evanescent ones take `i sqrt(β² - k²)`.
pub fn transverse_wavenumber(beta: C64, k: C64) -> C64 {
    if beta.norm() < k.norm() {
        k * (1.0 - (beta / k) * (beta / k)).sqrt()
    } else {
        I * (beta * beta - k * k).sqrt()
    }
}

fn check_wood(beta: C64, k: C64) -> Result<()> {
    if (k.norm() - beta.norm()).abs() < WOOD_GUARD {
        return Err(Error::WoodAnomaly {
            k: k.re,
            beta: beta.re,
        });
    }
    Ok(())
}

/// Truncated plane-wave series over orders `|n| ≤ modes`.
pub fn greens_quasi_spectral(
    x: Point,
    alpha: C64,
    k: C64,
    period: f64,
    modes: usize,
) -> Result<GreenEval> {
    if x[1] == 0.0 {
        return Err(Error::OnLatticeLine);
    }
    if x[1].abs() < 0.1 * period {
        log::warn!("spectral series converges slowly at |x2| = {:e}", x[1].abs());
    }
    let y = x[1].abs();
    let s = x[1].signum();
    let static_periodic = alpha == ZERO && k == ZERO;
    let mut value = ZERO;
    let mut gx = ZERO;
    let mut gy = ZERO;
    let n = modes as i64;
    for q in -n..=n {
        let beta = alpha + 2.0 * PI * q as f64 / period;
        if static_periodic && q == 0 {
            value += y / (2.0 * period);
            gy += s / (2.0 * period);
            continue;
        }
        check_wood(beta, k)?;
        let gamma = transverse_wavenumber(beta, k);
        let term = (I * (beta * x[0] + gamma * y)).exp() / (2.0 * I * gamma * period);
        value += term;
        gx += I * beta * term;
        gy += I * gamma * s * term;
    }
    Ok(GreenEval {
        value,
        gradient: Some([gx, gy]),
        representation: Representation::Spectral,
    })
}

/// Ewald evaluation of `G^{α,k}` at a single point.
pub fn greens_quasi_ewald(x: Point, alpha: C64, k: C64, period: f64, split: f64) -> Result<GreenEval> {
    QuasiGreen::new(alpha, k, period, split)?.eval(x)
}

/// `G^{0,0}` via `(1/4π) ln(4 (sinh²(πx2/L) + sin²(πx1/L)))`.
///
/// The constant makes the function agree with the spectral series
/// `|x2|/2L - Σ_{q≠0} e^{iqx1} e^{-|q||x2|} / (2L|q|)`.
pub fn greens_periodic_static(x: Point, period: f64) -> Result<GreenEval> {
    let (v, g) = periodic_static_parts(x, period)?;
    Ok(GreenEval {
        value: C64::new(v, 0.0),
        gradient: Some([C64::new(g[0], 0.0), C64::new(g[1], 0.0)]),
        representation: Representation::ClosedFormStatic,
    })
}

fn periodic_static_parts(x: Point, period: f64) -> Result<(f64, [f64; 2])> {
    if x[1] == 0.0 && (x[0] / period - (x[0] / period).round()).abs() < 1e-14 {
        return Err(Error::LatticePoint);
    }
    let a = PI * x[1] / period;
    let b = PI * x[0] / period;
    let aa = a.abs();
    let e2 = (-2.0 * aa).exp();
    let sb = b.sin();
    // d = 4 e^{-2|a|} (sinh²a + sin²b)
    let d = (-(-2.0 * aa).exp_m1()).powi(2) + 4.0 * e2 * sb * sb;
    if d == 0.0 {
        return Err(Error::LatticePoint);
    }
    let value = (2.0 * aa + d.ln()) / (4.0 * PI);
    let gx = 4.0 * e2 * (2.0 * b).sin() / d / (4.0 * period);
    let gy = a.signum() * 2.0 * (1.0 - e2 * e2) / d / (4.0 * period);
    Ok((value, [gx, gy]))
}

/// `G^{0,0}(x) - ln|x| / 2π` and its gradient, smooth near the origin.
fn periodic_static_regular(x: Point, period: f64) -> (f64, [f64; 2]) {
    let r2 = norm2(x);
    let a = PI * x[1] / period;
    let b = PI * x[0] / period;
    let base = (4.0 * PI * PI / (period * period)).ln() / (4.0 * PI);
    if r2 < 1e-8 * period * period {
        let c = PI / (6.0 * period * period);
        let v = base + (a * a - b * b) / (12.0 * PI);
        return (v, [-c * x[0], c * x[1]]);
    }
    if r2 < 0.0625 * period * period {
        let sh = a.sinh();
        let sb = b.sin();
        let num = sh * sh + sb * sb;
        let ratio = num / (a * a + b * b);
        let v = base + ratio.ln() / (4.0 * PI);
        let gx = (2.0 * b).sin() / (4.0 * period * num) - x[0] / (2.0 * PI * r2);
        let gy = (2.0 * a).sinh() / (4.0 * period * num) - x[1] / (2.0 * PI * r2);
        return (v, [gx, gy]);
    }
    let (v, g) = periodic_static_parts(x, period).expect("away from lattice");
    (
        v - r2.ln() / (4.0 * PI),
        [g[0] - x[0] / (2.0 * PI * r2), g[1] - x[1] / (2.0 * PI * r2)],
    )
}

/// Diffraction regime of a real frequency at fixed quasimomentum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    FirstContinuum,
    Higher,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Set when `k` lies within 1e-10 of a threshold.
    pub near_threshold: bool,
}

pub fn regime_classify(alpha: f64, k: f64, period: f64) -> RegimeReport {
    let g = 2.0 * PI / period;
    let a = crate::geometry::Quasimomentum::new(alpha, period).value();
    let first = a.abs();
    let second = (a + g).abs().min((a - g).abs());
    let regime = if k < first {
        Regime::Subcritical
    } else if k < second {
        Regime::FirstContinuum
    } else {
        Regime::Higher
    };
    let near_threshold = (k - first).abs() < 1e-10 || (k - second).abs() < 1e-10;
    if near_threshold {
        log::warn!("k = {k} is within 1e-10 of a diffraction threshold");
    }
    RegimeReport {
        regime,
        near_threshold,
    }
}

#[derive(Clone, Copy, Debug)]
struct Mode {
    beta: C64,
    /// `sqrt(β² - k²) = -iγ`, zero for the regularized static mode.
    gamma_e: C64,
}

/// Ewald evaluator for `G^{α,k}` with precomputed mode data.
///
/// `α = k = 0` is accepted and yields the periodic function `G^{0,0}` with
/// the zero-order mode replaced by `|x2|/2L` smoothing.
#[derive(Clone, Debug)]
pub struct QuasiGreen {
    alpha: C64,
    k: C64,
    period: f64,
    split: f64,
    modes: Vec<Mode>,
    low: Vec<C64>,
}

const LOW_TERMS: usize = 48;
const SPATIAL_REACH: f64 = 6.6;
const SPECTRAL_REACH: f64 = 13.6;

impl QuasiGreen {
    pub fn new(alpha: C64, k: C64, period: f64, split: f64) -> Result<Self> {
        if !(period > 0.0 && split > 0.0) {
            return Err(Error::Parameter("period and Ewald split must be positive".into()));
        }
        if !(1.0..=10.0).contains(&(split * period)) {
            log::warn!("Ewald split E = {split} is outside the stable range");
        }
        // keep k²/4E² moderate; the spatial series has terms (k²/4E²)^j / j!
        let e = split.max(k.norm() / 4.0);
        let g = 2.0 * PI / period;
        let center = (-alpha.re / g).round() as i64;
        let reach = ((SPECTRAL_REACH * e + k.norm()) / g).ceil() as i64 + 1;
        let mut modes = Vec::with_capacity(2 * reach as usize + 1);
        let regularized = alpha == ZERO && k == ZERO;
        for n in center - reach..=center + reach {
            let beta = alpha + g * n as f64;
            if regularized && n == 0 {
                modes.push(Mode { beta, gamma_e: ZERO });
                continue;
            }
            check_wood(beta, k)?;
            let gamma_e = -I * transverse_wavenumber(beta, k);
            modes.push(Mode { beta, gamma_e });
        }

        // Coefficients of the smooth difference between the m = 0 spatial
        // term and the free-space kernel, as a power series in r².
        let mut low = Vec::with_capacity(LOW_TERMS);
        if k == ZERO {
            low.push(C64::new((EULER_GAMMA + 2.0 * e.ln()) / (4.0 * PI), 0.0));
            for p in 1..LOW_TERMS {
                low.push(C64::new(e.powi(2 * p as i32) / (4.0 * PI * p as f64), 0.0));
            }
        } else {
            let z = -(k * k) / (4.0 * e * e);
            let ln_z = 2.0 * k.ln() - I * PI - (4.0 * e * e).ln();
            for p in 0..LOW_TERMS {
                low.push(e.powi(2 * p as i32) / (4.0 * PI) * expint_series(p + 1, z, ln_z));
            }
        }
        Ok(QuasiGreen {
            alpha,
            k,
            period,
            split: e,
            modes,
            low,
        })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn wavenumber(&self) -> C64 {
        self.k
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    fn spectral_part(&self, x: Point) -> (C64, [C64; 2]) {
        let e = self.split;
        let l = self.period;
        let y = x[1].abs();
        let s = if x[1] < 0.0 { -1.0 } else { 1.0 };
        let mut val = ZERO;
        let mut dx = ZERO;
        let mut dy = ZERO;
        for m in &self.modes {
            let ph = (I * m.beta * x[0]).exp();
            if m.gamma_e == ZERO {
                // -(1/4L) times the O(1) term of the q = 0 expansion
                let ye = y * e;
                let v = -2.0 * (y * erf(ye) + (-ye * ye).exp() / (e * PI.sqrt()));
                val += ph * v;
                dx += I * m.beta * ph * v;
                dy += ph * (-2.0 * erf(ye));
                continue;
            }
            let g = m.gamma_e;
            let gy = g * y;
            let t1 = exp_erfc(gy, g / (2.0 * e) + y * e);
            let t2 = exp_erfc(-gy, g / (2.0 * e) - y * e);
            let sum = ph * (t1 + t2) / g;
            val += sum;
            dx += I * m.beta * sum;
            dy += ph * (t1 - t2);
        }
        let f = -1.0 / (4.0 * l);
        (f * val, [f * dx, f * s * dy])
    }

    /// Spatial Ewald images; the m = 0 image is skipped when `skip_self`.
    fn spatial_part(&self, x: Point, skip_self: bool) -> Result<(C64, [C64; 2])> {
        let e = self.split;
        let l = self.period;
        let e2 = e * e;
        let kk = self.k * self.k / (4.0 * e2);
        let reach = SPATIAL_REACH / e;
        let lo = ((x[0] - reach) / l).floor() as i64;
        let hi = ((x[0] + reach) / l).ceil() as i64;
        let mut val = ZERO;
        let mut gx = ZERO;
        let mut gy = ZERO;
        for m in lo..=hi {
            if skip_self && m == 0 {
                continue;
            }
            let xm = [x[0] - m as f64 * l, x[1]];
            let r2 = norm2(xm);
            if r2 == 0.0 {
                return Err(Error::LatticePoint);
            }
            let arg = r2 * e2;
            if arg > 60.0 {
                continue;
            }
            let ph = (I * self.alpha * (m as f64 * l)).exp();
            let mut coef = C64::new(1.0, 0.0);
            let mut s1 = ZERO;
            let mut s0 = ZERO;
            let mut prev = expint(0, arg);
            for j in 0..60usize {
                if j > 0 {
                    coef *= kk / j as f64;
                }
                let next = expint(j + 1, arg);
                let t1 = coef * next;
                s1 += t1;
                s0 += coef * prev;
                prev = next;
                if t1.norm() < 1e-18 * s1.norm() && coef.norm() * prev < 1e-18 * s0.norm() {
                    break;
                }
            }
            val += ph * s1;
            gx += ph * s0 * xm[0];
            gy += ph * s0 * xm[1];
        }
        let gf = e2 / (2.0 * PI);
        Ok((-val / (4.0 * PI), [gf * gx, gf * gy]))
    }

    /// Difference of the m = 0 spatial image and the free kernel, as a
    /// function of r², with `(1/r) d/dr`.
    fn low_part(&self, r2: f64) -> (C64, C64) {
        let mut val = self.low[0];
        let mut der = ZERO;
        let mut pw = 1.0;
        let mut fact = 1.0;
        for p in 1..LOW_TERMS {
            // pw = (-r²)^{p-1}, fact = (p-1)!
            let d = pw / fact * self.low[p];
            der += -2.0 * d;
            pw *= -r2;
            fact *= p as f64;
            let v = pw / fact * self.low[p];
            val += v;
            if v.norm() < 1e-18 * val.norm() && d.norm() < 1e-18 * der.norm().max(1e-300) {
                break;
            }
        }
        (val, der)
    }

    /// Full kernel value and gradient.
    pub fn eval_parts(&self, x: Point) -> Result<(C64, [C64; 2])> {
        let (v1, g1) = self.spectral_part(x);
        let (v2, g2) = self.spatial_part(x, false)?;
        Ok((v1 + v2, [g1[0] + g2[0], g1[1] + g2[1]]))
    }

    pub fn eval(&self, x: Point) -> Result<GreenEval> {
        let (value, g) = self.eval_parts(x)?;
        Ok(GreenEval {
            value,
            gradient: Some(g),
            representation: Representation::Ewald,
        })
    }

    /// `G^{α,k}(x) - G^k(x)`, smooth in a neighbourhood of the origin.
    pub fn eval_regular(&self, x: Point) -> (C64, [C64; 2]) {
        let r2 = norm2(x);
        if r2 * self.split * self.split > 4.0 {
            let (v, g) = self.eval_parts(x).expect("away from lattice");
            let f = greens_free(x, self.k).expect("nonzero point");
            let fg = f.gradient.expect("gradient");
            return (v - f.value, [g[0] - fg[0], g[1] - fg[1]]);
        }
        let (v1, g1) = self.spectral_part(x);
        let (v2, g2) = self
            .spatial_part(x, true)
            .expect("images away from the origin");
        let (v3, d3) = self.low_part(r2);
        (
            v1 + v2 + v3,
            [g1[0] + g2[0] + d3 * x[0], g1[1] + g2[1] + d3 * x[1]],
        )
    }
}


/// Kernel used to assemble layer potentials.
#[derive(Clone, Debug)]
pub enum Kernel {
    /// `G^k` on the whole plane.
    Free { k: C64 },
    /// `G^{α,k}` by Ewald summation.
    Quasi(QuasiGreen),
    /// `G^{0,0}` by its closed form.
    PeriodicStatic { period: f64 },
}

impl Kernel {
    /// Wavenumber of the free-space singularity carried by the kernel.
    pub fn wavenumber(&self) -> C64 {
        match self {
            Kernel::Free { k } => *k,
            Kernel::Quasi(q) => q.wavenumber(),
            Kernel::PeriodicStatic { .. } => ZERO,
        }
    }

    pub fn eval(&self, x: Point) -> Result<(C64, [C64; 2])> {
        match self {
            Kernel::Free { k } => {
                let g = greens_free(x, *k)?;
                Ok((g.value, g.gradient.expect("gradient")))
            }
            Kernel::Quasi(q) => q.eval_parts(x),
            Kernel::PeriodicStatic { period } => {
                let (v, g) = periodic_static_parts(x, *period)?;
                Ok((C64::new(v, 0.0), [C64::new(g[0], 0.0), C64::new(g[1], 0.0)]))
            }
        }
    }

    /// Kernel minus the free-space kernel of the same wavenumber.
    pub fn regular(&self, x: Point) -> (C64, [C64; 2]) {
        match self {
            Kernel::Free { .. } => (ZERO, [ZERO, ZERO]),
            Kernel::Quasi(q) => q.eval_regular(x),
            Kernel::PeriodicStatic { period } => {
                let (v, g) = periodic_static_regular(x, *period);
                (C64::new(v, 0.0), [C64::new(g[0], 0.0), C64::new(g[1], 0.0)])
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self, Kernel::Free { .. })
    }
}
