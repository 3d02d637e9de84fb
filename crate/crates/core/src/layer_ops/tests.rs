use super::nystrom::*;
use super::*;
use crate::geometry::Incidence;

fn cfg(theta: f64) -> MetascreenConfig {
    MetascreenConfig::default().with_theta(theta)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn disc(order: usize) -> Discretization {
    Discretization::default().with_order(order)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn random_density(order: usize, seed: u64) -> BoundaryDensity {
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut d = BoundaryDensity::zeros(order);
    for i in 0..d.coefficients.len() {
        d.coefficients[i] = C64::new(next(), next());
    }
    d
}

#[test]
fn periodic_static_single_layer_is_self_adjoint() {
    let s = assemble_single_layer_quasi(&cfg(0.3), c(0.0), c(0.0), &disc(6)).unwrap();
    let d = &s.entries - s.entries.adjoint();
    assert!(max_abs(&d) < 1e-10, "{}", max_abs(&d));
}

#[test]
fn entries_converge_in_order() {
    let a = assemble_single_layer_quasi(&cfg(0.05 * PI), c(0.3), c(0.4), &disc(4)).unwrap();
    let b = assemble_single_layer_quasi(&cfg(0.05 * PI), c(0.3), c(0.4), &disc(8)).unwrap();
    let ba = FourierBasis::new(4);
    let bb = FourierBasis::new(8);
    let mut worst: f64 = 0.0;
    for di in Disk::BOTH {
        for dj in Disk::BOTH {
            for m in ba.modes() {
                for n in ba.modes() {
                    let x = a.entries[(ba.index(di, m), ba.index(dj, n))];
                    let y = b.entries[(bb.index(di, m), bb.index(dj, n))];
                    worst = worst.max((x - y).norm());
                }
            }
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn free_diagonal_entry() {
    let cf = cfg(0.0);
    let s = assemble_single_layer_free(&cf, c(1.0), 4).unwrap();
    let b = FourierBasis::new(4);
    let v = s.entries[(b.index(Disk::First, 0), b.index(Disk::First, 0))];
    let t = BesselTable::new(1, c(0.05));
    let expected = -I * PI * 0.05 / 2.0 * t.j(0) * t.h(0);
    assert!((v - expected).norm() < 1e-15);
    // independent series values of J0(0.05), Y0(0.05)
    let j0 = 0.999_375_097_649_468_5;
    let y0 = -1.979_311_000_817_209_7;
    let direct = -I * PI * 0.05 / 2.0 * j0 * C64::new(j0, y0);
    assert!((v - direct).norm() < 1e-14);
}

#[test]
fn inversion_symmetry_of_operators() {
    let cf = cfg(0.05 * PI);
    for s in [
        assemble_single_layer_free(&cf, c(0.7), 5).unwrap(),
        assemble_single_layer_quasi(&cf, c(0.0), c(0.7), &disc(5)).unwrap(),
    ] {
        let phi = random_density(5, 3);
        let lhs = inversion_map(&s.apply(&phi));
        let rhs = s.apply(&inversion_map(&phi));
        assert!((lhs.coefficients - rhs.coefficients).norm() < 1e-12);
    }
}

fn padded(phi: &BoundaryDensity, order: usize) -> BoundaryDensity {
    let mut out = BoundaryDensity::zeros(order);
    let b = FourierBasis::new(order);
    for disk in Disk::BOTH {
        for n in phi.basis().modes() {
            out.coefficients[b.index(disk, n)] = phi.coefficient(disk, n);
        }
    }
    out
}

fn jump_check(kernel: Kernel) {
    let cf = cfg(0.05 * PI);
    // the other disk feeds every output mode, so traces need headroom
    let order = 16;
    let pair = assemble_layer_pair(&cf, &kernel, order).unwrap();
    let phi = padded(&random_density(5, 11), order);
    let sphi = BoundaryDensity::from_vector(&pair.single * &phi.coefficients, order);
    let kphi = BoundaryDensity::from_vector(&pair.np * &phi.coefficients, order);
    let h = 1e-6;
    for disk in Disk::BOTH {
        for a in 0..8 {
            let t = 2.0 * PI * a as f64 / 8.0 + 0.1;
            let cc = cf.center(disk);
            let nu = cf.normal(t);
            let at = |rho: f64| [cc[0] + rho * nu[0], cc[1] + rho * nu[1]];
            let (vp, gp) = single_layer_field(&cf, &kernel, &phi, at(cf.radius + h)).unwrap();
            let (vm, gm) = single_layer_field(&cf, &kernel, &phi, at(cf.radius - h)).unwrap();
            let f = phi.eval(disk, t);
            let kv = kphi.eval(disk, t);
            let sv = sphi.eval(disk, t);
            let scale = f.norm().max(1.0);
            // one-sided Taylor steps from the assembled trace
            assert!((vp - (sv + h * (0.5 * f + kv))).norm() < 1e-8 * scale);
            assert!((vm - (sv - h * (-0.5 * f + kv))).norm() < 1e-8 * scale);
            let dp = nu[0] * gp[0] + nu[1] * gp[1];
            let dm = nu[0] * gm[0] + nu[1] * gm[1];
            assert!((dp - (0.5 * f + kv)).norm() < 1e-3 * scale, "outer {dp} {}", 0.5 * f + kv);
            assert!((dm - (-0.5 * f + kv)).norm() < 1e-3 * scale, "inner {dm} {}", -0.5 * f + kv);
        }
    }
}

#[test]
fn jump_relations_free() {
    jump_check(Kernel::Free { k: c(0.7) });
}

#[test]
fn jump_relations_quasi() {
    let g = crate::lattice_green::QuasiGreen::new(c(0.2), c(0.3), 1.0, 3.0).unwrap();
    jump_check(Kernel::Quasi(g));
}

#[test]
fn jump_relations_periodic_static() {
    jump_check(Kernel::PeriodicStatic { period: 1.0 });
}

#[test]
fn static_free_mean_value_identity() {
    let cf = cfg(0.05 * PI);
    let order = 6;
    let pair = assemble_layer_pair(&cf, &Kernel::Free { k: c(0.0) }, order).unwrap();
    let b = FourierBasis::new(order);
    let dim = b.dim();
    let op = &pair.np - DMatrix::<C64>::identity(dim, dim) * c(0.5);
    for disk in Disk::BOTH {
        let row = op.row(b.index(disk, 0));
        assert!(row.iter().all(|v| v.norm() < 1e-10));
    }
}

#[test]
fn long_period_approaches_free_space() {
    let mut cf = cfg(0.05 * PI);
    cf.period = 50.0;
    let order = 4;
    // real k leaves an O((kL)^-1/2) lattice sum; damping isolates the self cell
    let k = C64::new(0.3, 0.1);
    let free = assemble_layer_pair(&cf, &Kernel::Free { k }, order).unwrap();
    let g = crate::lattice_green::QuasiGreen::new(c(0.2), k, 50.0, 3.0 / 50.0).unwrap();
    let quasi = assemble_layer_pair(&cf, &Kernel::Quasi(g), order).unwrap();
    assert!(max_abs(&(&free.single - &quasi.single)) < 1e-3);
    assert!(max_abs(&(&free.np - &quasi.np)) < 1e-3);
}

#[test]
fn decoupled_operator_is_interior_dtn() {
    let cf = cfg(0.05 * PI);
    let inc = Incidence::new(0.0).unwrap();
    let order = 6;
    let om = c(0.8);
    let sys = assemble_system(&cf, Bloch::Slaved(inc), 0.0, om, &disc(order)).unwrap();
    let b = FourierBasis::new(order);
    let kb = om / cf.v_b;
    let t = BesselTable::new(order + 1, kb * cf.radius);
    for disk in Disk::BOTH {
        for n in b.modes() {
            let i = b.index(disk, n);
            let expected = kb * t.jp(n) / t.j(n);
            let got = sys.a.entries[(i, i)];
            assert!((got - expected).norm() < 1e-8 * expected.norm().max(1.0), "n={n}: {got} {expected}");
        }
    }
    // J0(k r) on disk 1 only: Dirichlet data maps to its Neumann data
    let mut u = BoundaryDensity::zeros(order);
    u.coefficients[b.index(Disk::First, 0)] = t.j(0);
    let du = sys.a.apply(&u);
    assert!((du.coefficient(Disk::First, 0) - kb * t.jp(0)).norm() < 1e-6);
    assert!(du.coefficients.iter().enumerate().all(|(i, v)| i == b.index(Disk::First, 0) || v.norm() < 1e-6));
}

#[test]
fn plane_wave_expansion() {
    let cf = cfg(0.05 * PI);
    let om = 0.7;
    let dir = [c(0.6), c(0.8)];
    let (u, du) = plane_wave_traces(&cf, dir, c(om), 8);
    for a in 0..16 {
        let t = 0.37 * a as f64;
        let x = cf.boundary_point(Disk::First, t);
        let nu = cf.normal(t);
        let e = (I * om * (0.6 * x[0] + 0.8 * x[1])).exp();
        assert!((u.eval(Disk::First, t) - e).norm() < 1e-12);
        let de = I * om * (0.6 * nu[0] + 0.8 * nu[1]) * e;
        assert!((du.eval(Disk::First, t) - de).norm() < 1e-12);
    }
}

#[test]
fn rhs_integral_is_interior_source() {
    // with v_b = 1 the interior field is the incident wave itself
    let cf = cfg(0.05 * PI);
    let inc = Incidence::new(0.3).unwrap();
    let om = 0.05;
    let delta = 1e-3;
    let sys = assemble_system(&cf, Bloch::Slaved(inc), delta, c(om), &disc(6)).unwrap();
    let f = assemble_rhs(&cf, &inc, &sys);
    let k = [om * inc.alpha0, om * inc.w_perp];
    for disk in Disk::BOTH {
        let cc = cf.center(disk);
        let r = cf.radius;
        let phase = (I * (k[0] * cc[0] + k[1] * cc[1])).exp();
        let vol = phase * 2.0 * PI * r * crate::special::bessel_j(1, c(om * r)) / om;
        let expected = (1.0 - delta) * om * om * vol;
        let got = f.integral_over(&cf, disk);
        assert!((got - expected).norm() < 1e-10 * expected.norm(), "{got} {expected}");
        assert!((got.norm() / (om * om * cf.disk_area()) - 1.0).abs() < 2e-3);
    }
}

#[test]
fn rhs_is_affine_in_delta() {
    let cf = cfg(0.05 * PI);
    let inc = Incidence::new(0.2).unwrap();
    let f = |delta: f64| {
        let sys = assemble_system(&cf, Bloch::Slaved(inc), delta, c(0.5), &disc(5)).unwrap();
        assemble_rhs(&cf, &inc, &sys).coefficients
    };
    let (a, b, d) = (f(0.0), f(1e-3), f(2e-3));
    assert!(((&d - &b) - (&b - &a)).norm() < 1e-13 * a.norm());
}

#[test]
fn a_is_holomorphic() {
    let cf = cfg(0.05 * PI);
    let inc = Incidence::new(0.2).unwrap();
    let d = disc(5);
    let a = |om: C64| assemble_a(&cf, Bloch::Slaved(inc), 1e-3, om, &d).unwrap().entries;
    let z = C64::new(0.6, -0.01);
    let h = 1e-5;
    let dx = (a(z + h) - a(z - h)) / c(2.0 * h);
    let dy = (a(z + I * h) - a(z - I * h)) / (2.0 * h * I);
    let scale = max_abs(&a(z));
    assert!(max_abs(&(&dx - &dy)) < 1e-9 * scale, "{}", max_abs(&(&dx - &dy)) / scale);
}

#[test]
fn mirrored_parameters_share_the_spectrum() {
    let d = disc(5);
    let eig = |alpha0: f64, theta: f64| {
        let inc = Incidence::new(alpha0).unwrap();
        let a = assemble_a(&cfg(theta), Bloch::Slaved(inc), 1e-3, c(0.6), &d).unwrap().entries;
        let mut v: Vec<C64> = a.eigenvalues().map(|e| e.iter().cloned().collect()).unwrap_or_else(|| {
            nalgebra::linalg::Schur::new(a.clone()).eigenvalues().unwrap().iter().cloned().collect()
        });
        v.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
        v
    };
    let a = eig(0.3, 0.05 * PI);
    let b = eig(-0.3, -0.05 * PI);
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-9 * scale, "{x} {y}");
    }
}

#[test]
fn floor_and_guards() {
    let inc = Incidence::new(0.0).unwrap();
    assert!(matches!(
        assemble_a(&cfg(0.0), Bloch::Slaved(inc), 1e-3, c(1e-4), &disc(4)),
        Err(Error::FrequencyFloor(_))
    ));
    assert!(assemble_single_layer_free(&cfg(0.0), c(0.0), 4).is_err());
    assert!(matches!(
        nystrom_layers(&cfg(0.0), &Kernel::Free { k: c(1.0) }, 5000),
        Err(Error::TooLarge(_))
    ));
}

#[test]
fn nystrom_and_multipole_single_layer_agree_on_smooth_density() {
    let cf = cfg(0.05 * PI);
    let order = 8;
    let m = 128;
    let d = disc(order);
    let s = assemble_single_layer_quasi(&cf, c(0.3), c(0.4), &d).unwrap();
    let ny = nystrom_oracle_single_layer(&cf, c(0.3), c(0.4), m, 3.0).unwrap();
    let phi8 = padded(&random_density(4, 7), order);
    let a = s.apply(&phi8);
    let mut vals = DVector::zeros(2 * m);
    for disk in Disk::BOTH {
        for j in 0..m {
            vals[disk.index() * m + j] = phi8.eval(disk, 2.0 * PI * j as f64 / m as f64);
        }
    }
    let b = ny * vals;
    let mut worst: f64 = 0.0;
    for disk in Disk::BOTH {
        for j in (0..m).step_by(7) {
            let t = 2.0 * PI * j as f64 / m as f64;
            worst = worst.max((a.eval(disk, t) - b[disk.index() * m + j]).norm());
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn nystrom_self_convergence() {
    let cf = cfg(0.05 * PI);
    let a = nystrom_periodic_capacitance(&cf, 128).unwrap();
    let b = nystrom_periodic_capacitance(&cf, 256).unwrap();
    assert!((a.c11 - b.c11).abs() < 1e-9 * b.c11.abs());
    assert!((a.c_perp - b.c_perp).abs() < 1e-9);
    let s = nystrom_oracle_single_layer(&cf, c(0.0), c(0.0), 64, 3.0).unwrap();
    // symmetric kernel with equal weights
    assert!(max_abs(&(&s - s.transpose())) < 1e-10);
}
