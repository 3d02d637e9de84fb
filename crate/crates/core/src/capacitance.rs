//! Capacitance matrices of the dimer.
//!
//! `C^α_{ij} = -∫_{∂D_i} (S^{α,0})^{-1}[χ_j]` for a nonzero quasimomentum,
//! the periodic `C^0 = C11^0 [[1,-1],[-1,1]]` from the mean-zero solve
//! `S^{0,0}[ψ1] = (χ1 - χ2)/2`, the dipole vector `∫ y ψ1 dσ`, and the
//! first-order correction `C^{1,α0}` in closed form and by finite differences.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Incidence, MetascreenConfig};
use crate::layer_ops::{assemble_single_layer_quasi, BoundaryDensity, Discretization, FourierBasis};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub type Matrix2 = [[C64; 2]; 2];

/// Smallest `|α|` accepted by [`capacitance_quasi`].
pub const ALPHA_MIN: f64 = 1e-6;

/// `C^α` with its eigenvalues `λ1 ≤ λ2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuasiCapacitance {
    pub alpha: f64,
    pub matrix: Matrix2,
    pub eigenvalues: [f64; 2],
    /// Frobenius norm of `C - C^H`.
    pub hermitian_defect: f64,
}

/// Solves `S^{α,0} ψ_j = χ_j` and integrates.
pub fn capacitance_quasi(cfg: &MetascreenConfig, alpha: f64, disc: &Discretization) -> Result<QuasiCapacitance> {
    if !alpha.is_finite() || alpha.abs() < ALPHA_MIN {
        return Err(Error::Parameter(format!(
            "quasimomentum {alpha} too close to 0; use the periodic capacitance"
        )));
    }
    let s = assemble_single_layer_quasi(cfg, C64::new(alpha, 0.0), ZERO, disc)?.entries;
    let lu = s.lu();
    let mut c = [[ZERO; 2]; 2];
    for dj in Disk::BOTH {
        let chi = BoundaryDensity::indicator(disc.order, dj);
        let psi = lu
            .solve(&chi.coefficients)
            .ok_or_else(|| Error::Numerical("singular quasiperiodic single layer".into()))?;
        let psi = BoundaryDensity::from_vector(psi, disc.order);
        for di in Disk::BOTH {
            c[di.index()][dj.index()] = -psi.integral_over(cfg, di);
        }
    }
    let defect = ((c[0][0] - c[0][0].conj()).norm_sqr()
        + (c[1][1] - c[1][1].conj()).norm_sqr()
        + 2.0 * (c[0][1] - c[1][0].conj()).norm_sqr())
    .sqrt();
    let eigenvalues = hermitian_eigenvalues(&c);
    Ok(QuasiCapacitance {
        alpha,
        matrix: c,
        eigenvalues,
        hermitian_defect: defect,
    })
}

/// Eigenvalues of the Hermitian part of a 2×2 matrix, ascending.
pub fn hermitian_eigenvalues(c: &Matrix2) -> [f64; 2] {
    let a = c[0][0].re;
    let d = c[1][1].re;
    let b = 0.5 * (c[0][1] + c[1][0].conj());
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [m - r, m + r]
}

/// Periodic static capacitance data.
#[derive(Clone, Debug)]
pub struct PeriodicCapacitance {
    pub c11: f64,
    /// Mean-zero solution of `S^{0,0}[ψ] = (χ1 - χ2)/2`.
    pub psi1: BoundaryDensity,
    /// `∫_{∂D2} ψ1`, equal to `C11` by the structure of `C^0`.
    pub c12: f64,
    /// Departure of `ψ1` from a real function.
    pub imaginary_residue: f64,
}

impl PeriodicCapacitance {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.c11, -self.c11], [-self.c11, self.c11]]
    }
}

/// `C11^0` and `ψ1^0` from a bordered solve in the mean-zero subspace.
pub fn capacitance_periodic(cfg: &MetascreenConfig, disc: &Discretization) -> Result<PeriodicCapacitance> {
    periodic_with_shift(cfg, disc, 0.0)
}

/// Same solve with a constant added to the kernel.
pub(crate) fn periodic_with_shift(
    cfg: &MetascreenConfig,
    disc: &Discretization,
    shift: f64,
) -> Result<PeriodicCapacitance> {
    let order = disc.order;
    let basis = FourierBasis::new(order);
    let dim = basis.dim();
    let mut s = assemble_single_layer_quasi(cfg, ZERO, ZERO, disc)?.entries;
    let zero_modes = [basis.index(Disk::First, 0), basis.index(Disk::Second, 0)];
    if shift != 0.0 {
        // a constant kernel maps ψ to its total integral on every disk
        for &i in &zero_modes {
            for &j in &zero_modes {
                s[(i, j)] += C64::new(shift * cfg.perimeter(), 0.0);
            }
        }
    }
    let mut b = DMatrix::<C64>::zeros(dim + 1, dim + 1);
    b.view_mut((0, 0), (dim, dim)).copy_from(&s);
    for &i in &zero_modes {
        b[(i, dim)] = C64::new(1.0, 0.0);
        b[(dim, i)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(dim + 1);
    rhs[zero_modes[0]] = C64::new(0.5, 0.0);
    rhs[zero_modes[1]] = C64::new(-0.5, 0.0);
    let sol = b
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular bordered periodic system".into()))?;
    let psi1 = BoundaryDensity::from_vector(sol.rows(0, dim).into_owned(), order);
    let i1 = psi1.integral_over(cfg, Disk::First);
    let i2 = psi1.integral_over(cfg, Disk::Second);
    // a real density has a_{-n} = conj(a_n)
    let mut imaginary_residue: f64 = 0.0;
    for disk in Disk::BOTH {
        for n in basis.modes() {
            let d = psi1.coefficient(disk, -n) - psi1.coefficient(disk, n).conj();
            imaginary_residue = imaginary_residue.max(d.norm());
        }
    }
    Ok(PeriodicCapacitance {
        c11: -i1.re,
        psi1,
        c12: -i2.re,
        imaginary_residue,
    })
}

/// Dipole vector `∫_{∂D} y ψ1^0 dσ` as `(c∥, c⊥)`.
pub fn dipole_vector(cfg: &MetascreenConfig, periodic: &PeriodicCapacitance) -> (f64, f64) {
    let a = periodic.psi1.first_moment(cfg, Disk::First);
    let b = periodic.psi1.first_moment(cfg, Disk::Second);
    ((a[0] + b[0]).re, (a[1] + b[1]).re)
}

/// Closed-form `C^{1,α0}`.
pub fn c1_matrix(cfg: &MetascreenConfig, inc: &Incidence, c_par: f64, c_perp: f64) -> Matrix2 {
    let l = cfg.period;
    let w = inc.w_perp;
    let a = -I * w * l / 2.0;
    let b = I * inc.alpha0 * c_par;
    let d = -I * w * c_perp * c_perp / (2.0 * l);
    [[a + d, a + b - d], [a - b - d, a + d]]
}

/// `-∫_{∂D_i} (S^{ωα0,ω})^{-1}[χ_j]` at complex `ω`.
pub fn frequency_capacitance(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    omega: C64,
    disc: &Discretization,
) -> Result<Matrix2> {
    if omega.norm() < disc.omega_floor {
        return Err(Error::FrequencyFloor(omega.norm()));
    }
    let s = assemble_single_layer_quasi(cfg, omega * inc.alpha0, omega, disc)?.entries;
    let lu = s.lu();
    let mut c = [[ZERO; 2]; 2];
    for dj in Disk::BOTH {
        let chi = BoundaryDensity::indicator(disc.order, dj);
        let psi = lu
            .solve(&chi.coefficients)
            .ok_or_else(|| Error::Numerical("singular single layer".into()))?;
        let psi = BoundaryDensity::from_vector(psi, disc.order);
        for di in Disk::BOTH {
            c[di.index()][dj.index()] = -psi.integral_over(cfg, di);
        }
    }
    Ok(c)
}

/// Finite-difference estimate of `C^{1,α0}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct C1Numeric {
    pub step: f64,
    /// Central difference at `step`.
    pub central: Matrix2,
    /// Richardson combination of the differences at `step` and `step/2`.
    pub extrapolated: Matrix2,
}

fn central_difference(cfg: &MetascreenConfig, inc: &Incidence, h: f64, disc: &Discretization) -> Result<Matrix2> {
    // -h is reached by analytic continuation through the upper half plane
    let p = frequency_capacitance(cfg, inc, C64::new(h, 0.0), disc)?;
    let m = frequency_capacitance(cfg, inc, C64::new(-h, 0.0), disc)?;
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (p[i][j] - m[i][j]) / (2.0 * h);
        }
    }
    Ok(out)
}

pub fn c1_matrix_numeric(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    omega_fd: f64,
    disc: &Discretization,
) -> Result<C1Numeric> {
    if !(1e-3..=1e-1).contains(&omega_fd) {
        return Err(Error::Parameter(format!("finite-difference step {omega_fd} outside [1e-3, 1e-1]")));
    }
    let a = central_difference(cfg, inc, omega_fd, disc)?;
    let b = central_difference(cfg, inc, 0.5 * omega_fd, disc)?;
    let mut ex = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ex[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
        }
    }
    Ok(C1Numeric {
        step: omega_fd,
        central: a,
        extrapolated: ex,
    })
}

/// Everything the capacitance report carries.
#[derive(Clone, Debug, Serialize)]
pub struct CapacitanceData {
    pub c11_0: f64,
    pub c_par: f64,
    pub c_perp: f64,
    pub c1_matrix: Matrix2,
    pub c_quasi: Option<QuasiCapacitance>,
}

pub fn capacitance_data(
    cfg: &MetascreenConfig,
    inc: &Incidence,
    alpha: Option<f64>,
    disc: &Discretization,
) -> Result<CapacitanceData> {
    let p = capacitance_periodic(cfg, disc)?;
    let (c_par, c_perp) = dipole_vector(cfg, &p);
    let c_quasi = match alpha {
        Some(a) => Some(capacitance_quasi(cfg, a, disc)?),
        None => None,
    };
    Ok(CapacitanceData {
        c11_0: p.c11,
        c_par,
        c_perp,
        c1_matrix: c1_matrix(cfg, inc, c_par, c_perp),
        c_quasi,
    })
}

#[cfg(test)]
mod tests;
