//! Layer potentials on the dimer boundary in a per-disk Fourier basis.
//!
//! A density on `∂D = ∂D1 ∪ ∂D2` is stored as `Σ_{n=-N}^{N} a_{j,n} e^{int}`
//! on each circle, parametrized by the polar angle `t` about its center.
//! Coefficients are ordered disk 1 modes `-N..=N`, then disk 2 modes.
//!
//! Matrix entries are the Galerkin projections
//! `(1/2π) ∫∫ e^{-imt} K(x_i(t), y_j(s)) e^{ins} R ds dt`.
//! On the self-disk blocks the free-space part of the kernel is diagonal and
//! handled analytically; what remains is smooth and periodic and is integrated
//! with the trapezoidal rule.

pub mod nystrom;

use crate::error::{Error, Result};
use crate::geometry::{Disk, Incidence, MetascreenConfig, Point};
use crate::lattice_green::{Kernel, QuasiGreen};
use crate::special::BesselTable;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Fourier truncation and derived sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierBasis {
    pub order: usize,
}

impl FourierBasis {
    pub fn new(order: usize) -> Self {
        FourierBasis { order }
    }

    pub fn modes_per_disk(&self) -> usize {
        2 * self.order + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.modes_per_disk()
    }

    pub fn index(&self, disk: Disk, mode: i32) -> usize {
        disk.index() * self.modes_per_disk() + (mode + self.order as i32) as usize
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let n = self.order as i32;
        -n..=n
    }

    /// Trapezoid nodes per circle used in assembly.
    pub fn quadrature_nodes(&self) -> usize {
        4 * self.order + 16
    }
}

/// Boundary density in the Fourier basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryDensity {
    pub coefficients: DVector<C64>,
    pub order: usize,
}

impl BoundaryDensity {
    pub fn zeros(order: usize) -> Self {
        BoundaryDensity {
            coefficients: DVector::zeros(FourierBasis::new(order).dim()),
            order,
        }
    }

    pub fn from_vector(coefficients: DVector<C64>, order: usize) -> Self {
        assert_eq!(coefficients.len(), FourierBasis::new(order).dim());
        BoundaryDensity {
            coefficients,
            order,
        }
    }

    /// Characteristic function of one boundary component.
    pub fn indicator(order: usize, disk: Disk) -> Self {
        let mut d = Self::zeros(order);
        let i = FourierBasis::new(order).index(disk, 0);
        d.coefficients[i] = C64::new(1.0, 0.0);
        d
    }

    pub fn basis(&self) -> FourierBasis {
        FourierBasis::new(self.order)
    }

    pub fn coefficient(&self, disk: Disk, mode: i32) -> C64 {
        self.coefficients[self.basis().index(disk, mode)]
    }

    /// Samples `f(disk, t)` on a fine grid and projects onto the basis.
    pub fn project<F>(order: usize, f: F) -> Self
    where
        F: Fn(Disk, f64) -> C64,
    {
        let basis = FourierBasis::new(order);
        let m = (4 * order + 32).max(64);
        let mut d = Self::zeros(order);
        for disk in Disk::BOTH {
            let samples: Vec<C64> = (0..m)
                .map(|a| f(disk, 2.0 * PI * a as f64 / m as f64))
                .collect();
            for n in basis.modes() {
                let mut acc = ZERO;
                for (a, s) in samples.iter().enumerate() {
                    let t = 2.0 * PI * a as f64 / m as f64;
                    acc += s * C64::from_polar(1.0, -(n as f64) * t);
                }
                d.coefficients[basis.index(disk, n)] = acc / m as f64;
            }
        }
        d
    }

    pub fn eval(&self, disk: Disk, t: f64) -> C64 {
        self.basis()
            .modes()
            .map(|n| self.coefficient(disk, n) * C64::from_polar(1.0, n as f64 * t))
            .sum()
    }

    /// `∫_{∂D_j} φ dσ`.
    pub fn integral_over(&self, cfg: &MetascreenConfig, disk: Disk) -> C64 {
        cfg.perimeter() * self.coefficient(disk, 0)
    }

    pub fn integral(&self, cfg: &MetascreenConfig) -> C64 {
        self.integral_over(cfg, Disk::First) + self.integral_over(cfg, Disk::Second)
    }

    /// `∫_{∂D_j} y φ(y) dσ(y)`.
    pub fn first_moment(&self, cfg: &MetascreenConfig, disk: Disk) -> [C64; 2] {
        let c = cfg.center(disk);
        let r = cfg.radius;
        let a0 = self.coefficient(disk, 0);
        let a1 = self.coefficient(disk, 1);
        let am = self.coefficient(disk, -1);
        let p = cfg.perimeter();
        [
            p * c[0] * a0 + PI * r * r * (a1 + am),
            p * c[1] * a0 + I * PI * r * r * (a1 - am),
        ]
    }

    /// `L²(∂D)` norm.
    pub fn l2_norm(&self, cfg: &MetascreenConfig) -> f64 {
        (cfg.perimeter() * self.coefficients.norm_squared()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    SingleLayerQuasi,
    SingleLayerFree,
    NeumannPoincareQuasi,
    NeumannPoincareFree,
    AOmega,
}

/// Parameters an operator was assembled with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssemblyParams {
    pub k: C64,
    pub alpha: Option<C64>,
    pub delta: Option<f64>,
}

/// Dense operator in the Fourier basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: DMatrix<C64>,
    pub order: usize,
    pub kind: OperatorKind,
    pub params: AssemblyParams,
}

impl OperatorMatrix {
    pub fn basis(&self) -> FourierBasis {
        FourierBasis::new(self.order)
    }

    pub fn apply(&self, d: &BoundaryDensity) -> BoundaryDensity {
        assert_eq!(d.order, self.order);
        BoundaryDensity::from_vector(&self.entries * &d.coefficients, self.order)
    }

    /// Rows as `(row, col, re, im)` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,re,im\n");
        for r in 0..self.entries.nrows() {
            for c in 0..self.entries.ncols() {
                let v = self.entries[(r, c)];
                s.push_str(&format!("{r},{c},{:.17e},{:.17e}\n", v.re, v.im));
            }
        }
        s
    }
}

/// Numerical settings shared by all assemblies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Discretization {
    /// Fourier order N per disk.
    pub order: usize,
    /// Ewald splitting parameter in units of 1/L.
    pub ewald_split: f64,
    /// Smallest |ω| accepted by [`assemble_system`].
    pub omega_floor: f64,
    /// Largest condition number accepted for single-layer solves.
    pub max_condition: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            order: 6,
            ewald_split: 3.0,
            omega_floor: 1e-3,
            max_condition: 1e12,
        }
    }
}

impl Discretization {
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn split(&self, cfg: &MetascreenConfig) -> f64 {
        self.ewald_split / cfg.period
    }
}

/// Single-layer and adjoint Neumann–Poincaré matrices for one kernel.
#[derive(Clone, Debug)]
pub struct LayerPair {
    pub single: DMatrix<C64>,
    pub np: DMatrix<C64>,
}

/// Analytic free-space self-disk diagonal for mode `n`: (S, K*).
fn self_disk_diagonal(k: C64, radius: f64, table: Option<&BesselTable>, n: i32) -> (C64, C64) {
    match table {
        None => {
            if n == 0 {
                (C64::new(radius * radius.ln(), 0.0), C64::new(0.5, 0.0))
            } else {
                (C64::new(-radius / (2.0 * n.abs() as f64), 0.0), ZERO)
            }
        }
        Some(t) => {
            let s = -I * PI * radius / 2.0 * t.j(n) * t.h(n);
            let kp = -I * PI * k * radius / 4.0 * (t.j(n) * t.hp(n) + t.jp(n) * t.h(n));
            (s, kp)
        }
    }
}

/// Assembles S and K* for a kernel on both disks.
pub fn assemble_layer_pair(cfg: &MetascreenConfig, kernel: &Kernel, order: usize) -> Result<LayerPair> {
    let basis = FourierBasis::new(order);
    let m = basis.quadrature_nodes();
    let nm = basis.modes_per_disk();
    let r = cfg.radius;
    let nodes: Vec<f64> = (0..m).map(|a| 2.0 * PI * a as f64 / m as f64).collect();
    let pts: Vec<Vec<Point>> = Disk::BOTH
        .iter()
        .map(|&d| nodes.iter().map(|&t| cfg.boundary_point(d, t)).collect())
        .collect();

    // E[a, n] = e^{i n t_a}
    let e = DMatrix::from_fn(m, nm, |a, j| {
        let n = j as f64 - order as f64;
        C64::from_polar(1.0, n * nodes[a])
    });
    let eh = e.adjoint();
    let w = cfg.perimeter() / (m * m) as f64;

    let k = kernel.wavenumber();
    let table = if k == ZERO {
        None
    } else {
        Some(BesselTable::new(order + 1, k * r))
    };

    let mut single = DMatrix::zeros(basis.dim(), basis.dim());
    let mut np = DMatrix::zeros(basis.dim(), basis.dim());
    for di in Disk::BOTH {
        for dj in Disk::BOTH {
            let same = di == dj;
            if same && !kernel.is_periodic() {
                continue;
            }
            let rows: Vec<Result<Vec<(C64, C64)>>> = (0..m)
                .into_par_iter()
                .map(|a| {
                    let x = pts[di.index()][a];
                    let nu = cfg.normal(nodes[a]);
                    (0..m)
                        .map(|b| {
                            let y = pts[dj.index()][b];
                            let d = [x[0] - y[0], x[1] - y[1]];
                            let (v, g) = if same { Ok(kernel.regular(d)) } else { kernel.eval(d) }?;
                            Ok((v, nu[0] * g[0] + nu[1] * g[1]))
                        })
                        .collect()
                })
                .collect();
            let mut kv = DMatrix::zeros(m, m);
            let mut kd = DMatrix::zeros(m, m);
            for (a, row) in rows.into_iter().enumerate() {
                for (b, (v, g)) in row?.into_iter().enumerate() {
                    kv[(a, b)] = v;
                    kd[(a, b)] = g;
                }
            }
            let bs = (&eh * kv * &e) * C64::new(w, 0.0);
            let bk = (&eh * kd * &e) * C64::new(w, 0.0);
            let (i0, j0) = (di.index() * nm, dj.index() * nm);
            single.view_mut((i0, j0), (nm, nm)).copy_from(&bs);
            np.view_mut((i0, j0), (nm, nm)).copy_from(&bk);
        }
        for n in basis.modes() {
            let (s, kp) = self_disk_diagonal(k, r, table.as_ref(), n);
            let i = basis.index(di, n);
            single[(i, i)] += s;
            np[(i, i)] += kp;
        }
    }
    Ok(LayerPair { single, np })
}

fn quasi_kernel(cfg: &MetascreenConfig, alpha: C64, k: C64, disc: &Discretization) -> Result<Kernel> {
    Ok(Kernel::Quasi(QuasiGreen::new(alpha, k, cfg.period, disc.split(cfg))?))
}

/// Matrix of `S_D^{α,k}`. `α = k = 0` gives the periodic static operator.
pub fn assemble_single_layer_quasi(
    cfg: &MetascreenConfig,
    alpha: C64,
    k: C64,
    disc: &Discretization,
) -> Result<OperatorMatrix> {
    let kernel = if alpha == ZERO && k == ZERO {
        Kernel::PeriodicStatic { period: cfg.period }
    } else {
        quasi_kernel(cfg, alpha, k, disc)?
    };
    let pair = assemble_layer_pair(cfg, &kernel, disc.order)?;
    Ok(OperatorMatrix {
        entries: pair.single,
        order: disc.order,
        kind: OperatorKind::SingleLayerQuasi,
        params: AssemblyParams {
            k,
            alpha: Some(alpha),
            delta: None,
        },
    })
}

/// Matrix of the free-space `S_D^k`, `k ≠ 0`.
pub fn assemble_single_layer_free(cfg: &MetascreenConfig, k: C64, order: usize) -> Result<OperatorMatrix> {
    if k == ZERO {
        return Err(Error::Parameter("free-space single layer needs k != 0".into()));
    }
    let pair = assemble_layer_pair(cfg, &Kernel::Free { k }, order)?;
    Ok(OperatorMatrix {
        entries: pair.single,
        order,
        kind: OperatorKind::SingleLayerFree,
        params: AssemblyParams {
            k,
            alpha: None,
            delta: None,
        },
    })
}

/// Adjoint Neumann–Poincaré operator; `alpha = None` selects free space.
pub fn assemble_neumann_poincare(
    cfg: &MetascreenConfig,
    alpha: Option<C64>,
    k: C64,
    disc: &Discretization,
) -> Result<OperatorMatrix> {
    let (kernel, kind) = match alpha {
        None => (Kernel::Free { k }, OperatorKind::NeumannPoincareFree),
        Some(a) if a == ZERO && k == ZERO => (
            Kernel::PeriodicStatic { period: cfg.period },
            OperatorKind::NeumannPoincareQuasi,
        ),
        Some(a) => (quasi_kernel(cfg, a, k, disc)?, OperatorKind::NeumannPoincareQuasi),
    };
    let pair = assemble_layer_pair(cfg, &kernel, disc.order)?;
    Ok(OperatorMatrix {
        entries: pair.np,
        order: disc.order,
        kind,
        params: AssemblyParams {
            k,
            alpha,
            delta: None,
        },
    })
}

/// How the Bloch parameter follows the frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Bloch {
    /// `α = ω α0` for a fixed incidence direction.
    Slaved(Incidence),
    /// Fixed real quasimomentum.
    Fixed(f64),
}

impl Bloch {
    pub fn alpha(&self, omega: C64) -> C64 {
        match self {
            Bloch::Slaved(inc) => omega * inc.alpha0,
            Bloch::Fixed(a) => C64::new(*a, 0.0),
        }
    }
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// `B S^{-1}` through a solve with `S^T`.
fn right_divide(b: &DMatrix<C64>, s: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let lu = s.transpose().lu();
    let x = lu
        .solve(&b.transpose())
        .ok_or_else(|| Error::Numerical("singular single-layer matrix".into()))?;
    Ok(x.transpose())
}

/// `A^ω` together with the pieces needed to post-process its solutions.
#[derive(Clone, Debug)]
pub struct OmegaSystem {
    pub omega: C64,
    pub alpha: C64,
    pub delta: f64,
    pub a: OperatorMatrix,
    /// `(-1/2 + K_b*) S_b^{-1}`, the interior Dirichlet-to-Neumann map.
    pub interior: DMatrix<C64>,
    pub s_quasi: DMatrix<C64>,
}

impl OmegaSystem {
    /// `ψ = (S_D^{α,ω})^{-1} η`.
    pub fn exterior_density(&self, eta: &BoundaryDensity) -> Result<BoundaryDensity> {
        let x = self
            .s_quasi
            .clone()
            .lu()
            .solve(&eta.coefficients)
            .ok_or_else(|| Error::Numerical("singular single-layer matrix".into()))?;
        Ok(BoundaryDensity::from_vector(x, eta.order))
    }
}

/// Assembles `A^ω = (-1/2 + K_b*) S_b^{-1} - δ (1/2 + K*) (S^{α,ω})^{-1}`.
pub fn assemble_system(
    cfg: &MetascreenConfig,
    bloch: Bloch,
    delta: f64,
    omega: C64,
    disc: &Discretization,
) -> Result<OmegaSystem> {
    if omega.norm() < disc.omega_floor {
        return Err(Error::FrequencyFloor(omega.norm()));
    }
    let order = disc.order;
    let dim = FourierBasis::new(order).dim();
    let id = DMatrix::<C64>::identity(dim, dim);
    let alpha = bloch.alpha(omega);
    let kb = omega / cfg.v_b;

    let inner = assemble_layer_pair(cfg, &Kernel::Free { k: kb }, order)?;
    let outer = assemble_layer_pair(cfg, &quasi_kernel(cfg, alpha, omega, disc)?, order)?;
    for s in [&inner.single, &outer.single] {
        let c = condition_number(s);
        if !(c < disc.max_condition) {
            return Err(Error::IllConditioned(c));
        }
    }
    let half = C64::new(0.5, 0.0);
    let interior = right_divide(&(&inner.np - &id * half), &inner.single)?;
    let exterior = right_divide(&(&outer.np + &id * half), &outer.single)?;
    let a = &interior - exterior * C64::new(delta, 0.0);
    Ok(OmegaSystem {
        omega,
        alpha,
        delta,
        a: OperatorMatrix {
            entries: a,
            order,
            kind: OperatorKind::AOmega,
            params: AssemblyParams {
                k: omega,
                alpha: Some(alpha),
                delta: Some(delta),
            },
        },
        interior,
        s_quasi: outer.single,
    })
}

/// Matrix of `A^ω` only.
pub fn assemble_a(
    cfg: &MetascreenConfig,
    bloch: Bloch,
    delta: f64,
    omega: C64,
    disc: &Discretization,
) -> Result<OperatorMatrix> {
    Ok(assemble_system(cfg, bloch, delta, omega, disc)?.a)
}

/// Traces of the plane wave `e^{ik·x}` and of its normal derivative.
///
/// `direction` is a (possibly complex) unit vector; `k` the wavenumber.
pub fn plane_wave_traces(
    cfg: &MetascreenConfig,
    direction: [C64; 2],
    k: C64,
    order: usize,
) -> (BoundaryDensity, BoundaryDensity) {
    let basis = FourierBasis::new(order);
    let table = BesselTable::new(order + 1, k * cfg.radius);
    let rot = direction[0] + I * direction[1];
    let mut value = BoundaryDensity::zeros(order);
    let mut normal = BoundaryDensity::zeros(order);
    let top = basis.modes().map(|n| table.j(n).norm()).fold(0.0, f64::max);
    if table.j(order as i32).norm() > 1e-8 * top.max(1.0) {
        log::warn!("plane-wave expansion truncated at N = {order} with tail {:e}", table.j(order as i32).norm());
    }
    for disk in Disk::BOTH {
        let c = cfg.center(disk);
        let phase = (I * k * (direction[0] * c[0] + direction[1] * c[1])).exp();
        for n in basis.modes() {
            // e^{ik d·(c + R e_t)} = e^{ik d·c} Σ i^n J_n(kR) e^{in(t - φ)}
            let f = phase * I.powi(n) * rot.powi(-n);
            let i = basis.index(disk, n);
            value.coefficients[i] = f * table.j(n);
            normal.coefficients[i] = f * k * table.jp(n);
        }
    }
    (value, normal)
}

/// `F = δ ∂_ν u^in - (-1/2 + K_b*) S_b^{-1} [u^in]` for `u^in = e^{iω(α0, w⊥)·x}`.
pub fn assemble_rhs(cfg: &MetascreenConfig, inc: &Incidence, system: &OmegaSystem) -> BoundaryDensity {
    let order = system.a.order;
    let dir = [C64::new(inc.alpha0, 0.0), C64::new(inc.w_perp, 0.0)];
    let (u, du) = plane_wave_traces(cfg, dir, system.omega, order);
    let f = du.coefficients * C64::new(system.delta, 0.0) - &system.interior * u.coefficients;
    BoundaryDensity::from_vector(f, order)
}

/// `∫_∂D e^{-ik·y} ψ(y) dσ(y)` for `k = κ d` with unit `d`.
pub fn plane_wave_moment(cfg: &MetascreenConfig, psi: &BoundaryDensity, direction: [C64; 2], k: C64) -> C64 {
    let basis = psi.basis();
    let table = BesselTable::new(psi.order + 1, k * cfg.radius);
    let rot = direction[0] + I * direction[1];
    let mut acc = ZERO;
    for disk in Disk::BOTH {
        let c = cfg.center(disk);
        let phase = (-I * k * (direction[0] * c[0] + direction[1] * c[1])).exp();
        let mut s = ZERO;
        for n in basis.modes() {
            s += psi.coefficient(disk, n) * (-I).powi(n) * table.j(n) * rot.powi(n);
        }
        acc += phase * s;
    }
    acc * cfg.perimeter()
}

/// Far-field amplitudes `(A+, A-)` of `S^{α,k}[ψ]` above and below the screen.
pub fn far_field_amplitudes(cfg: &MetascreenConfig, psi: &BoundaryDensity, alpha: C64, k: C64) -> (C64, C64) {
    let k3 = crate::lattice_green::transverse_wavenumber(alpha, k);
    let dx = alpha / k;
    let dy = k3 / k;
    let f = 1.0 / (2.0 * I * k3 * cfg.period);
    let up = plane_wave_moment(cfg, psi, [dx, dy], k) * f;
    let down = plane_wave_moment(cfg, psi, [dx, -dy], k) * f;
    (up, down)
}

/// Single-layer potential `S[ψ](x)` and its gradient at a point off `∂D`.
///
/// The free-space part of the nearest disk is summed from the circle's
/// multipole expansion so points close to the boundary are handled exactly.
pub fn single_layer_field(
    cfg: &MetascreenConfig,
    kernel: &Kernel,
    psi: &BoundaryDensity,
    x: Point,
) -> Result<(C64, [C64; 2])> {
    let m = (8 * psi.order + 64).max(128);
    let w = cfg.perimeter() / m as f64;
    let r = cfg.radius;
    let k = kernel.wavenumber();
    let mut v = ZERO;
    let mut g = [ZERO, ZERO];
    for disk in Disk::BOTH {
        let c = cfg.center(disk);
        let rel = [x[0] - c[0], x[1] - c[1]];
        let rho = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
        let near = rho < 2.0 * r;
        if near {
            let (fv, fg) = circle_free_field(k, r, psi, disk, rel)?;
            v += fv;
            g[0] += fg[0];
            g[1] += fg[1];
        }
        for a in 0..m {
            let t = 2.0 * PI * a as f64 / m as f64;
            let y = cfg.boundary_point(disk, t);
            let d = [x[0] - y[0], x[1] - y[1]];
            let (kv, kg) = if near { Ok(kernel.regular(d)) } else { kernel.eval(d) }?;
            let p = psi.eval(disk, t) * w;
            v += kv * p;
            g[0] += kg[0] * p;
            g[1] += kg[1] * p;
        }
    }
    Ok((v, g))
}

/// Free-space single layer of one circle's density at offset `rel` from its center.
fn circle_free_field(k: C64, r: f64, psi: &BoundaryDensity, disk: Disk, rel: Point) -> Result<(C64, [C64; 2])> {
    let rho = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
    if (rho - r).abs() < 1e-14 * r || rho == 0.0 {
        return Err(Error::Parameter("field point on the boundary or at a center".into()));
    }
    let th = rel[1].atan2(rel[0]);
    let inside = rho < r;
    let n_max = psi.order;
    let (near_t, far_t) = if k == ZERO {
        (None, None)
    } else {
        (
            Some(BesselTable::new(n_max + 1, k * r)),
            Some(BesselTable::new(n_max + 1, k * rho)),
        )
    };
    let mut v = ZERO;
    let mut drho = ZERO;
    let mut dth = ZERO;
    for n in psi.basis().modes() {
        let a = psi.coefficient(disk, n) * C64::from_polar(1.0, n as f64 * th);
        let (f, fp) = match (&near_t, &far_t) {
            (Some(tr), Some(tp)) => {
                let pre = -I * PI * r / 2.0;
                if inside {
                    (pre * tp.j(n) * tr.h(n), pre * k * tp.jp(n) * tr.h(n))
                } else {
                    (pre * tr.j(n) * tp.h(n), pre * k * tr.j(n) * tp.hp(n))
                }
            }
            _ => {
                let q = n.unsigned_abs() as i32;
                if n == 0 {
                    if inside {
                        (C64::new(r * r.ln(), 0.0), ZERO)
                    } else {
                        (C64::new(r * rho.ln(), 0.0), C64::new(r / rho, 0.0))
                    }
                } else if inside {
                    let s = (rho / r).powi(q);
                    let f = -r / (2.0 * q as f64) * s;
                    (C64::new(f, 0.0), C64::new(f * q as f64 / rho, 0.0))
                } else {
                    let s = (r / rho).powi(q);
                    let f = -r / (2.0 * q as f64) * s;
                    (C64::new(f, 0.0), C64::new(-f * q as f64 / rho, 0.0))
                }
            }
        };
        v += a * f;
        drho += a * fp;
        dth += a * f * I * n as f64;
    }
    let (ct, st) = (th.cos(), th.sin());
    let gx = drho * ct - dth * st / rho;
    let gy = drho * st + dth * ct / rho;
    Ok((v, [gx, gy]))
}

/// Coefficient permutation for the inversion `x -> -x`: `a_{1,m} <-> (-1)^m a_{2,m}`.
pub fn inversion_map(d: &BoundaryDensity) -> BoundaryDensity {
    let basis = d.basis();
    let mut out = BoundaryDensity::zeros(d.order);
    for n in basis.modes() {
        let s = if n % 2 == 0 { 1.0 } else { -1.0 };
        out.coefficients[basis.index(Disk::First, n)] = d.coefficient(Disk::Second, n) * s;
        out.coefficients[basis.index(Disk::Second, n)] = d.coefficient(Disk::First, n) * s;
    }
    out
}

/// Coefficient map for the reflection `x1 -> -x1`, which exchanges the disks
/// when `θ = 0`: `a_{1,m} <-> (-1)^m a_{2,-m}`.
pub fn reflection_map(d: &BoundaryDensity) -> BoundaryDensity {
    let basis = d.basis();
    let mut out = BoundaryDensity::zeros(d.order);
    for n in basis.modes() {
        let s = if n % 2 == 0 { 1.0 } else { -1.0 };
        out.coefficients[basis.index(Disk::First, n)] = d.coefficient(Disk::Second, -n) * s;
        out.coefficients[basis.index(Disk::Second, n)] = d.coefficient(Disk::First, -n) * s;
    }
    out
}

#[cfg(test)]
mod tests;
