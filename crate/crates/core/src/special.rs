//! Special functions: integer-order Bessel and Hankel functions of complex
//! argument, exponential integrals and a scaled complementary error function.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus J and Y are summed from their ascending series.
pub const SERIES_RADIUS: f64 = 12.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// J_n(z) and Y_n(z) for n = 0..=nmax at a single argument.
#[derive(Clone, Debug)]
pub struct BesselTable {
    j: Vec<C64>,
    y: Vec<C64>,
    z: C64,
}

impl BesselTable {
    /// Tabulates orders 0..=nmax+1 so derivatives up to nmax are available.
    /// Y is NaN at z = 0.
    pub fn new(nmax: usize, z: C64) -> Self {
        let top = nmax + 1;
        let (j, y) = if z.norm() <= SERIES_RADIUS {
            (j_series_all(top, z), y_series_all(top, z))
        } else {
            large_argument(top, z)
        };
        BesselTable { j, y, z }
    }

    pub fn argument(&self) -> C64 {
        self.z
    }

    pub fn max_order(&self) -> usize {
        self.j.len() - 2
    }

    fn sign(n: i32) -> f64 {
        if n < 0 && n % 2 != 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn j(&self, n: i32) -> C64 {
        self.j[n.unsigned_abs() as usize] * Self::sign(n)
    }

    pub fn y(&self, n: i32) -> C64 {
        self.y[n.unsigned_abs() as usize] * Self::sign(n)
    }

    /// Hankel function of the first kind.
    pub fn h(&self, n: i32) -> C64 {
        self.j(n) + I * self.y(n)
    }

    pub fn jp(&self, n: i32) -> C64 {
        0.5 * (self.j(n - 1) - self.j(n + 1))
    }

    pub fn yp(&self, n: i32) -> C64 {
        0.5 * (self.y(n - 1) - self.y(n + 1))
    }

    pub fn hp(&self, n: i32) -> C64 {
        self.jp(n) + I * self.yp(n)
    }
}

/// J_n(z) for a single integer order.
pub fn bessel_j(n: i32, z: C64) -> C64 {
    BesselTable::new(n.unsigned_abs() as usize, z).j(n)
}

/// Y_n(z) for a single integer order.
pub fn bessel_y(n: i32, z: C64) -> C64 {
    BesselTable::new(n.unsigned_abs() as usize, z).y(n)
}

/// H^(1)_n(z).
pub fn hankel1(n: i32, z: C64) -> C64 {
    BesselTable::new(n.unsigned_abs() as usize, z).h(n)
}

fn j_series(n: usize, z: C64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let half = z * 0.5;
    let mut term = C64::new(1.0, 0.0);
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 0..500usize {
        term *= q / ((k + 1) as f64 * (n + k + 1) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && k > 2 {
            break;
        }
    }
    sum
}

fn j_series_all(top: usize, z: C64) -> Vec<C64> {
    (0..=top).map(|n| j_series(n, z)).collect()
}

fn y_series_all(top: usize, z: C64) -> Vec<C64> {
    let mut y = vec![C64::new(f64::NAN, f64::NAN); top + 1];
    if z == C64::new(0.0, 0.0) {
        return y;
    }
    let half = z * 0.5;
    let lnh = half.ln();
    let q = -half * half;
    let j0 = j_series(0, z);
    let j1 = j_series(1, z);

    // Y0 = (2/pi)(ln(z/2) + gamma) J0 - (2/pi) sum H_k q^k / (k!)^2
    let mut term = C64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..500usize {
        term *= q / ((k * k) as f64);
        harmonic += 1.0 / k as f64;
        let t = term * harmonic;
        acc += t;
        if t.norm() <= 1e-17 * acc.norm().max(1e-300) && k > 2 {
            break;
        }
    }
    y[0] = (2.0 / PI) * ((lnh + EULER_GAMMA) * j0 - acc);

    // Y1 = -(2/pi)/z + (2/pi) ln(z/2) J1 - (1/pi)(z/2) sum (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    let mut term = C64::new(1.0, 0.0);
    let mut psi1 = -EULER_GAMMA;
    let mut psi2 = 1.0 - EULER_GAMMA;
    let mut acc = term * (psi1 + psi2);
    for k in 1..500usize {
        term *= q / ((k * (k + 1)) as f64);
        psi1 += 1.0 / k as f64;
        psi2 += 1.0 / (k + 1) as f64;
        let t = term * (psi1 + psi2);
        acc += t;
        if t.norm() <= 1e-17 * acc.norm() && k > 2 {
            break;
        }
    }
    if top >= 1 {
        y[1] = -(2.0 / PI) / z + (2.0 / PI) * lnh * j1 - (1.0 / PI) * half * acc;
    }
    for n in 1..top {
        y[n + 1] = (2.0 * n as f64) / z * y[n] - y[n - 1];
    }
    y
}

/// Hankel asymptotic expansion of H^(1)_nu (sign = +1) or H^(2)_nu (sign = -1), nu = 0, 1.
fn hankel_asymptotic(nu: u32, z: C64, sign: f64) -> C64 {
    let mu = 4.0 * (nu * nu) as f64;
    let phase = z - (nu as f64) * PI / 2.0 - PI / 4.0;
    let si = C64::new(0.0, sign);
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60usize {
        let odd = (2 * k - 1) as f64;
        let next = term * si * (mu - odd * odd) / (k as f64 * 8.0) / z;
        let size = next.norm();
        if size > last {
            break;
        }
        last = size;
        term = next;
        sum += term;
        if size < 1e-17 * sum.norm() {
            break;
        }
    }
    (2.0 / (PI * z)).sqrt() * (si * phase).exp() * sum
}

fn large_argument(top: usize, z: C64) -> (Vec<C64>, Vec<C64>) {
    let mut h1 = vec![C64::new(0.0, 0.0); top + 1];
    let mut h2 = vec![C64::new(0.0, 0.0); top + 1];
    h1[0] = hankel_asymptotic(0, z, 1.0);
    h2[0] = hankel_asymptotic(0, z, -1.0);
    if top >= 1 {
        h1[1] = hankel_asymptotic(1, z, 1.0);
        h2[1] = hankel_asymptotic(1, z, -1.0);
    }
    for n in 1..top {
        let f = (2.0 * n as f64) / z;
        h1[n + 1] = f * h1[n] - h1[n - 1];
        h2[n + 1] = f * h2[n] - h2[n - 1];
    }
    let mut j: Vec<C64> = h1.iter().zip(&h2).map(|(a, b)| 0.5 * (a + b)).collect();
    let y: Vec<C64> = h1.iter().zip(&h2).map(|(a, b)| (a - b) / (2.0 * I)).collect();

    // Upward recurrence for J loses accuracy once n exceeds |z|; use Miller's
    // backward recurrence there, matched to the asymptotic value at the switch.
    let switch = z.norm().floor() as usize;
    if top > switch {
        let start = top + 30 + z.norm() as usize;
        let mut vals = vec![C64::new(0.0, 0.0); start + 2];
        vals[start] = C64::new(1e-200, 0.0);
        for n in (1..=start).rev() {
            vals[n - 1] = (2.0 * n as f64) / z * vals[n] - vals[n + 1];
            if vals[n - 1].norm() > 1e200 {
                for v in vals.iter_mut().skip(n - 1) {
                    *v *= 1e-200;
                }
            }
        }
        let m = if j[0].norm() >= j[1].norm() { 0 } else { 1 };
        // rescale first: complex division squares the divisor
        let s = vals[m].norm();
        let scale = j[m] / (vals[m] / s) / s;
        for n in switch + 1..=top {
            j[n] = vals[n] * scale;
        }
    }
    (j, y)
}

/// Generalized exponential integral E_n(x) for real x >= 0.
pub fn expint(n: usize, x: f64) -> f64 {
    const MAXIT: usize = 400;
    const EPS: f64 = 1e-16;
    if n == 0 {
        return (-x).exp() / x;
    }
    if x == 0.0 {
        return if n == 1 { f64::INFINITY } else { 1.0 / (n - 1) as f64 };
    }
    let nm1 = n - 1;
    if x > 1.0 {
        let tiny = 1e-300;
        let mut b = x + n as f64;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAXIT {
            let an = -(i as f64) * (nm1 as f64 + i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        h * (-x).exp()
    } else {
        let mut ans = if nm1 != 0 {
            1.0 / nm1 as f64
        } else {
            -x.ln() - EULER_GAMMA
        };
        let mut fact = 1.0;
        for i in 1..=MAXIT {
            fact *= -x / i as f64;
            let del = if i != nm1 {
                -fact / (i as f64 - nm1 as f64)
            } else {
                let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
                fact * (-x.ln() + psi)
            };
            ans += del;
            if del.abs() < ans.abs() * EPS {
                break;
            }
        }
        ans
    }
}

/// E_n(z) for complex z of modest size from the ascending series, with the
/// branch of ln z supplied by the caller.
pub fn expint_series(n: usize, z: C64, ln_z: C64) -> C64 {
    assert!(n >= 1);
    let nm1 = n - 1;
    let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
    let mut ans = if nm1 != 0 {
        C64::new(1.0 / nm1 as f64, 0.0)
    } else {
        -ln_z - EULER_GAMMA
    };
    let mut fact = C64::new(1.0, 0.0);
    for i in 1..400usize {
        fact *= -z / i as f64;
        let del = if i != nm1 {
            -fact / (i as f64 - nm1 as f64)
        } else {
            fact * (-ln_z + psi)
        };
        ans += del;
        if del.norm() < ans.norm() * 1e-17 && i > nm1 {
            break;
        }
    }
    ans
}

/// e^c erfc(z) without intermediate overflow.
pub fn exp_erfc(c: C64, z: C64) -> C64 {
    let e = (c - z * z).exp();
    if z.re >= 0.0 {
        e * (I * z).w()
    } else {
        2.0 * c.exp() - e * (-I * z).w()
    }
}

/// Real erf.
pub fn erf(x: f64) -> f64 {
    errorfunctions::RealErrorFunctions::erf(x)
}
