//! Nyström discretization in point values, used as an independent check of
//! the Fourier assembly.
//!
//! Self-disk integrals split off the logarithmic singularity and integrate
//! it with Kress's product quadrature; everything else uses the trapezoidal
//! rule. Unknowns are the density values at `M` equispaced nodes per disk,
//! disk 1 first.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Incidence, MetascreenConfig};
use crate::lattice_green::{transverse_wavenumber, Kernel, QuasiGreen};
use crate::special::{BesselTable, EULER_GAMMA};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub const MAX_POINTS: usize = 4096;

/// Point-value matrices of `S` and `K*` on both disks.
#[derive(Clone, Debug)]
pub struct NystromLayers {
    pub points: usize,
    pub single: DMatrix<C64>,
    pub np: DMatrix<C64>,
}

fn kress_weights(m: usize) -> Vec<f64> {
    let n = m / 2;
    (0..m)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / m as f64;
            let s: f64 = (1..n).map(|j| (j as f64 * t).cos() / j as f64).sum();
            -2.0 * PI / n as f64 * s - PI / (n * n) as f64 * (n as f64 * t).cos()
        })
        .collect()
}

fn nodes(m: usize) -> Vec<f64> {
    (0..m).map(|a| 2.0 * PI * a as f64 / m as f64).collect()
}

/// Assembles the Nyström matrices for `kernel` with `m` nodes per disk.
pub fn nystrom_layers(cfg: &MetascreenConfig, kernel: &Kernel, m: usize) -> Result<NystromLayers> {
    if m < 16 || !m.is_multiple_of(2) {
        return Err(Error::Parameter(format!("Nystrom node count {m} must be even and >= 16")));
    }
    if m > MAX_POINTS {
        return Err(Error::TooLarge(format!("{m} points per disk exceeds {MAX_POINTS}")));
    }
    let r = cfg.radius;
    let k = kernel.wavenumber();
    let t = nodes(m);
    let kw = kress_weights(m);
    let h = 2.0 * PI / m as f64;
    let (reg0, dreg0) = kernel.regular([0.0, 0.0]);
    // G^k(r) - J0(kr) ln(r) / 2π as r -> 0
    let c_k = if k == ZERO {
        ZERO
    } else {
        -0.25 * I + ((k / 2.0).ln() + EULER_GAMMA) / (2.0 * PI)
    };

    let rows: Vec<Result<(Vec<C64>, Vec<C64>)>> = (0..2 * m)
        .into_par_iter()
        .map(|row| {
            let di = Disk::from_index(row / m);
            let a = row % m;
            let x = cfg.boundary_point(di, t[a]);
            let nu = cfg.normal(t[a]);
            let mut srow = vec![ZERO; 2 * m];
            let mut krow = vec![ZERO; 2 * m];
            for dj in Disk::BOTH {
                for b in 0..m {
                    let col = dj.index() * m + b;
                    let y = cfg.boundary_point(dj, t[b]);
                    let d = [x[0] - y[0], x[1] - y[1]];
                    if di != dj {
                        let (v, g) = kernel.eval(d)?;
                        srow[col] = h * r * v;
                        krow[col] = h * r * (nu[0] * g[0] + nu[1] * g[1]);
                        continue;
                    }
                    let wlog = kw[(a + m - b) % m];
                    if a == b {
                        let s2 = r * (c_k + r.ln() / (2.0 * PI) + reg0);
                        let k2 = 1.0 / (4.0 * PI) + r * (nu[0] * dreg0[0] + nu[1] * dreg0[1]);
                        srow[col] = wlog * (r / (4.0 * PI)) + h * s2;
                        krow[col] = h * k2;
                        continue;
                    }
                    let (v, g) = kernel.eval(d)?;
                    let dist = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    let lg = (4.0 * ((t[a] - t[b]) / 2.0).sin().powi(2)).ln();
                    let (k1s, k1k) = if k == ZERO {
                        (C64::new(r / (4.0 * PI), 0.0), ZERO)
                    } else {
                        let tb = BesselTable::new(1, k * dist);
                        (r / (4.0 * PI) * tb.j(0), -(k * dist) / (8.0 * PI) * tb.j(1))
                    };
                    let ks = r * v;
                    let kk = r * (nu[0] * g[0] + nu[1] * g[1]);
                    srow[col] = wlog * k1s + h * (ks - k1s * lg);
                    krow[col] = wlog * k1k + h * (kk - k1k * lg);
                }
            }
            Ok((srow, krow))
        })
        .collect();
    let mut single = DMatrix::zeros(2 * m, 2 * m);
    let mut np = DMatrix::zeros(2 * m, 2 * m);
    for (i, row) in rows.into_iter().enumerate() {
        let (s, kk) = row?;
        for j in 0..2 * m {
            single[(i, j)] = s[j];
            np[(i, j)] = kk[j];
        }
    }
    Ok(NystromLayers {
        points: m,
        single,
        np,
    })
}

/// Nyström matrix of `S_D^{α,k}`; `α = k = 0` uses the periodic closed form.
pub fn nystrom_oracle_single_layer(
    cfg: &MetascreenConfig,
    alpha: C64,
    k: C64,
    m: usize,
    split: f64,
) -> Result<DMatrix<C64>> {
    Ok(nystrom_layers(cfg, &oracle_kernel(cfg, alpha, k, split)?, m)?.single)
}

fn oracle_kernel(cfg: &MetascreenConfig, alpha: C64, k: C64, split: f64) -> Result<Kernel> {
    if alpha == ZERO && k == ZERO {
        Ok(Kernel::PeriodicStatic { period: cfg.period })
    } else {
        Ok(Kernel::Quasi(QuasiGreen::new(alpha, k, cfg.period, split / cfg.period)?))
    }
}

fn indicator(m: usize, disk: Disk) -> DVector<C64> {
    DVector::from_fn(2 * m, |i, _| {
        if i / m == disk.index() {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// Periodic static results from point values.
#[derive(Clone, Copy, Debug)]
pub struct NystromCapacitance {
    pub c11: f64,
    pub c_par: f64,
    pub c_perp: f64,
}

/// `C11^0` and the dipole vector from the mean-zero periodic solve.
pub fn nystrom_periodic_capacitance(cfg: &MetascreenConfig, m: usize) -> Result<NystromCapacitance> {
    let s = nystrom_layers(cfg, &Kernel::PeriodicStatic { period: cfg.period }, m)?.single;
    let w = cfg.perimeter() / m as f64;
    let n = 2 * m;
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(&s);
    for i in 0..n {
        b[(i, n)] = C64::new(1.0, 0.0);
        b[(n, i)] = C64::new(w, 0.0);
    }
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        rhs[i] = C64::new(if i < m { 0.5 } else { -0.5 }, 0.0);
    }
    let sol = b
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular bordered system".into()))?;
    let t = nodes(m);
    let mut c11 = 0.0;
    let mut moment = [0.0, 0.0];
    for d in Disk::BOTH {
        for a in 0..m {
            let v = sol[d.index() * m + a].re * w;
            if d == Disk::First {
                c11 -= v;
            }
            let y = cfg.boundary_point(d, t[a]);
            moment[0] += y[0] * v;
            moment[1] += y[1] * v;
        }
    }
    Ok(NystromCapacitance {
        c11,
        c_par: moment[0],
        c_perp: moment[1],
    })
}

/// `C^α` for `α ≠ 0` from point values.
pub fn nystrom_capacitance_quasi(cfg: &MetascreenConfig, alpha: f64, m: usize, split: f64) -> Result<[[C64; 2]; 2]> {
    let s = nystrom_oracle_single_layer(cfg, C64::new(alpha, 0.0), ZERO, m, split)?;
    let lu = s.lu();
    let w = cfg.perimeter() / m as f64;
    let mut c = [[ZERO; 2]; 2];
    for dj in Disk::BOTH {
        let psi = lu
            .solve(&indicator(m, dj))
            .ok_or_else(|| Error::Numerical("singular single layer".into()))?;
        for di in Disk::BOTH {
            let s: C64 = (0..m).map(|a| psi[di.index() * m + a]).sum();
            c[di.index()][dj.index()] = -s * w;
        }
    }
    Ok(c)
}

/// Reflection and transmission coefficients `(r, t)` from the point-value system.
pub fn nystrom_scattering(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    delta: f64,
    omega: f64,
    m: usize,
    split: f64,
) -> Result<(C64, C64)> {
    let om = C64::new(omega, 0.0);
    let alpha = om * inc.alpha0;
    let inner = nystrom_layers(cfg, &Kernel::Free { k: om / cfg.v_b }, m)?;
    let outer = nystrom_layers(cfg, &oracle_kernel(cfg, alpha, om, split)?, m)?;
    let n = 2 * m;
    let id = DMatrix::<C64>::identity(n, n);
    let half = C64::new(0.5, 0.0);
    let divide = |b: &DMatrix<C64>, s: &DMatrix<C64>| -> Result<DMatrix<C64>> {
        Ok(s.transpose()
            .lu()
            .solve(&b.transpose())
            .ok_or_else(|| Error::Numerical("singular single layer".into()))?
            .transpose())
    };
    let interior = divide(&(&inner.np - &id * half), &inner.single)?;
    let exterior = divide(&(&outer.np + &id * half), &outer.single)?;
    let a = &interior - exterior * C64::new(delta, 0.0);

    let t = nodes(m);
    let kv = [om * inc.alpha0, om * inc.w_perp];
    let mut u = DVector::zeros(n);
    let mut du = DVector::zeros(n);
    for d in Disk::BOTH {
        for (j, &tj) in t.iter().enumerate() {
            let x = cfg.boundary_point(d, tj);
            let nu = cfg.normal(tj);
            let e = (I * (kv[0] * x[0] + kv[1] * x[1])).exp();
            u[d.index() * m + j] = e;
            du[d.index() * m + j] = I * (kv[0] * nu[0] + kv[1] * nu[1]) * e;
        }
    }
    let f = du * C64::new(delta, 0.0) - &interior * u;
    let eta = a
        .lu()
        .solve(&f)
        .ok_or_else(|| Error::Numerical("singular A".into()))?;
    let psi = outer
        .single
        .lu()
        .solve(&eta)
        .ok_or_else(|| Error::Numerical("singular single layer".into()))?;
    let k3 = transverse_wavenumber(alpha, om);
    let w = cfg.perimeter() / m as f64;
    let mut up = ZERO;
    let mut down = ZERO;
    for d in Disk::BOTH {
        for (j, &tj) in t.iter().enumerate() {
            let y = cfg.boundary_point(d, tj);
            let p = psi[d.index() * m + j] * w;
            up += (-I * (alpha * y[0] + k3 * y[1])).exp() * p;
            down += (-I * (alpha * y[0] - k3 * y[1])).exp() * p;
        }
    }
    let f = 1.0 / (2.0 * I * k3 * cfg.period);
    Ok((down * f, 1.0 + up * f))
}
