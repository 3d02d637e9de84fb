use super::*;
use crate::layer_ops::nystrom::{nystrom_capacitance_quasi, nystrom_periodic_capacitance};
use crate::layer_ops::inversion_map;
use proptest::prelude::*;
use std::f64::consts::PI;

// Nyström M = 512 reference values for the default cell at θ = 0.05π
const C11_GOLDEN: f64 = 1.924_809_053_707_446;
const C_PAR_GOLDEN: f64 = -0.547_471_659_342_413;
const C_PERP_GOLDEN: f64 = -0.083_642_843_220_699;

fn cfg(theta: f64) -> MetascreenConfig {
    MetascreenConfig::default().with_theta(theta)
}

fn disc() -> Discretization {
    Discretization::default().with_order(8)
}

#[test]
fn quasi_is_hermitian_and_positive() {
    let q = capacitance_quasi(&cfg(0.05 * PI), PI / 2.0, &disc()).unwrap();
    assert!(q.hermitian_defect < 1e-10);
    assert!(q.eigenvalues[0] > 0.0 && q.eigenvalues[0] <= q.eigenvalues[1]);
}

#[test]
fn quasi_conjugates_under_alpha_flip() {
    let a = capacitance_quasi(&cfg(0.05 * PI), 0.7, &disc()).unwrap().matrix;
    let b = capacitance_quasi(&cfg(0.05 * PI), -0.7, &disc()).unwrap().matrix;
    for i in 0..2 {
        for j in 0..2 {
            assert!((a[i][j] - b[i][j].conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn quasi_matches_nystrom() {
    let c = cfg(0.05 * PI);
    let a = capacitance_quasi(&c, PI / 2.0, &disc()).unwrap().matrix;
    let b = nystrom_capacitance_quasi(&c, PI / 2.0, 512, 3.0).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((a[i][j] - b[i][j]).norm() < 1e-7 * b[0][0].norm());
        }
    }
}

#[test]
fn quasi_rejects_zero() {
    assert!(capacitance_quasi(&cfg(0.0), 0.0, &disc()).is_err());
}

#[test]
fn quasi_eigenvalues_positive_across_zone() {
    let c = cfg(0.05 * PI);
    let d = Discretization::default().with_order(5);
    for i in 0..32 {
        let alpha = -PI + 2.0 * PI * (i as f64 + 0.5) / 32.0;
        let q = capacitance_quasi(&c, alpha, &d).unwrap();
        assert!(q.eigenvalues[0] > 0.0, "alpha = {alpha}");
    }
}

#[test]
fn periodic_structure() {
    for theta in [0.0, 0.025 * PI, 0.05 * PI] {
        let p = capacitance_periodic(&cfg(theta), &disc()).unwrap();
        assert!(p.c11 > 0.0);
        assert!((p.c12 + p.c11).abs() < 1e-9 * p.c11);
        assert!(p.imaginary_residue < 1e-10);
        assert!(p.psi1.integral(&cfg(theta)).norm() < 1e-10);
    }
}

#[test]
fn periodic_golden_values() {
    let c = cfg(0.05 * PI);
    let p = capacitance_periodic(&c, &disc()).unwrap();
    let (par, perp) = dipole_vector(&c, &p);
    assert!((p.c11 - C11_GOLDEN).abs() < 1e-12);
    assert!((par - C_PAR_GOLDEN).abs() < 1e-12);
    assert!((perp - C_PERP_GOLDEN).abs() < 1e-12);
    let n = nystrom_periodic_capacitance(&c, 128).unwrap();
    assert!((n.c11 - p.c11).abs() < 1e-12);
}

#[test]
fn kernel_constant_does_not_matter() {
    let c = cfg(0.05 * PI);
    let a = capacitance_periodic(&c, &disc()).unwrap();
    let b = periodic_with_shift(&c, &disc(), 0.37).unwrap();
    assert!((a.c11 - b.c11).abs() < 1e-12);
    assert!((&a.psi1.coefficients - &b.psi1.coefficients).norm() < 1e-12);
}

#[test]
fn density_is_odd_under_inversion() {
    let p = capacitance_periodic(&cfg(0.05 * PI), &disc()).unwrap();
    let q = inversion_map(&p.psi1);
    assert!((&q.coefficients + &p.psi1.coefficients).norm() < 1e-12);
}

#[test]
fn dipole_symmetry_cases() {
    let d = disc();
    let c = cfg(0.0);
    let (_, perp) = dipole_vector(&c, &capacitance_periodic(&c, &d).unwrap());
    assert!(perp.abs() < 1e-9);
    let c = cfg(PI / 2.0);
    let (par, _) = dipole_vector(&c, &capacitance_periodic(&c, &d).unwrap());
    assert!(par.abs() < 1e-9);
}

#[test]
fn c11_invariant_under_theta_flip() {
    let d = disc();
    let a = capacitance_periodic(&cfg(0.2), &d).unwrap();
    let b = capacitance_periodic(&cfg(-0.2), &d).unwrap();
    assert!((a.c11 - b.c11).abs() < 1e-12);
    let (pa, qa) = dipole_vector(&cfg(0.2), &a);
    let (pb, qb) = dipole_vector(&cfg(-0.2), &b);
    assert!((pa - pb).abs() < 1e-12 && (qa + qb).abs() < 1e-12);
}

#[test]
fn c1_closed_form_cases() {
    let inc = Incidence::normal_incidence();
    let m = c1_matrix(&cfg(0.0), &inc, -0.5, 0.0);
    for row in m {
        for v in row {
            assert_eq!(v, C64::new(0.0, -0.5));
        }
    }
    let inc = Incidence::new(0.4).unwrap();
    let m = c1_matrix(&cfg(0.3), &inc, 0.2, 0.1);
    let anti = 0.5 * (m[0][1] - m[1][0]);
    assert!((anti - I * 0.4 * 0.2).norm() < 1e-15);
    assert!(m.iter().flatten().all(|v| v.re == 0.0));
}

#[test]
fn c1_numeric_matches_closed_form() {
    let c = cfg(0.05 * PI);
    let inc = Incidence::normal_incidence();
    let d = disc();
    let p = capacitance_periodic(&c, &d).unwrap();
    let (par, perp) = dipole_vector(&c, &p);
    let exact = c1_matrix(&c, &inc, par, perp);
    let n = c1_matrix_numeric(&c, &inc, 1e-2, &d).unwrap();
    let scale = exact.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..2 {
        for j in 0..2 {
            assert!((n.central[i][j] - exact[i][j]).norm() < 5e-2 * scale);
            assert!((n.extrapolated[i][j] - exact[i][j]).norm() < 1e-8 * scale);
        }
    }
    // antisymmetric part vanishes at normal incidence
    assert!((n.central[0][1] - n.central[1][0]).norm() < 1e-10);
    let row = n.extrapolated[0][0] + n.extrapolated[0][1];
    assert!((row - C64::new(0.0, -c.period)).norm() < 1e-8);
}

#[test]
fn c1_numeric_oblique_antisymmetric_part() {
    let c = cfg(0.05 * PI);
    let inc = Incidence::new(0.3).unwrap();
    let d = Discretization::default().with_order(6);
    let p = capacitance_periodic(&c, &d).unwrap();
    let (par, perp) = dipole_vector(&c, &p);
    let exact = c1_matrix(&c, &inc, par, perp);
    let n = c1_matrix_numeric(&c, &inc, 1e-2, &d).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((n.extrapolated[i][j] - exact[i][j]).norm() < 1e-7, "{i}{j}");
        }
    }
}

#[test]
fn numeric_step_is_guarded() {
    let c = cfg(0.0);
    let inc = Incidence::normal_incidence();
    assert!(c1_matrix_numeric(&c, &inc, 0.5, &disc()).is_err());
    assert!(frequency_capacitance(&c, &inc, C64::new(1e-5, 0.0), &disc()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn periodic_structure_holds(theta in -1.2f64..1.2, sep in 0.15f64..0.5) {
        let mut c = cfg(theta);
        c.separation = sep;
        let d = Discretization::default().with_order(5);
        let p = capacitance_periodic(&c, &d).unwrap();
        prop_assert!(p.c11 > 0.0);
        prop_assert!((p.c12 + p.c11).abs() < 1e-9 * p.c11);
        prop_assert!(p.psi1.integral(&c).norm() < 1e-10);
    }

    #[test]
    fn quasi_hermitian(alpha in 0.05f64..3.1, theta in -0.5f64..0.5) {
        let d = Discretization::default().with_order(4);
        let q = capacitance_quasi(&cfg(theta), alpha, &d).unwrap();
        prop_assert!(q.hermitian_defect < 1e-10);
        prop_assert!(q.eigenvalues[0] > 0.0);
    }
}
