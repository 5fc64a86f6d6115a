//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `K_ν(x) = ∫_0^∞ exp(-x cosh t) cosh(ν t) dt` by the trapezoid rule, which
/// converges geometrically for this analytic, rapidly decaying integrand.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    let h: f64 = 1e-3;
    let mut acc = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let term = (-x * t.cosh()).exp() * (nu * t).cosh();
        acc += term;
        if term < 1e-30 * acc {
            break;
        }
        t += h;
    }
    acc * h
}

/// `(Ai(z), Ai'(z))` for `z > 0` through modified Bessel functions.
pub fn airy_bessel(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let ai = (z / 3.0).sqrt() * bessel_k(1.0 / 3.0, zeta) / PI;
    let aip = -z / (PI * 3f64.sqrt()) * bessel_k(2.0 / 3.0, zeta);
    (ai, aip)
}

/// F1 on a uniform grid, from a fixed-step RK4 re-integration of
/// Painlevé II started at `z0 = 12`.
///
/// State is `(q, q', L, L', I)` with `L(z) = ∫_z^∞ (t - z) q²` (so `L'' = q²`)
/// and `I(z) = ∫_z^∞ q`; `F1 = exp(-½ (I + L))`. Returns `(z, F1)` pairs
/// from `z0` down to `z_end` every `every` steps of size `h`, stopping early
/// if `q` leaves the Hastings-McLeod branch (`|q| > 10`), which happens only
/// where F1 is far below 1e-10.
pub fn painleve_oracle(z_end: f64, h: f64, every: usize) -> Vec<(f64, f64)> {
    let z0 = 12.0;
    let (ai, aip) = airy_bessel(z0);
    // Tails at z0 are below 1e-14 (I) and 1e-27 (L, L'); leading terms suffice.
    let mut y = [ai, aip, 0.0, -(aip * aip - z0 * ai * ai), ai / z0.sqrt()];
    let f = |z: f64, y: &[f64; 5]| [y[1], z * y[0] + 2.0 * y[0].powi(3), y[3], y[0] * y[0], -y[0]];
    let steps = ((z0 - z_end) / h).round() as usize;
    let mut out = vec![(z0, (-0.5 * (y[4] + y[2])).exp())];
    for s in 1..=steps {
        let z = z0 - (s - 1) as f64 * h;
        let hh = -h;
        let k1 = f(z, &y);
        let k2 = f(z + hh / 2.0, &add(&y, &k1, hh / 2.0));
        let k3 = f(z + hh / 2.0, &add(&y, &k2, hh / 2.0));
        let k4 = f(z + hh, &add(&y, &k3, hh));
        for i in 0..5 {
            y[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y[0].abs() > 10.0 {
            break;
        }
        if s % every == 0 {
            out.push((z0 - s as f64 * h, (-0.5 * (y[4] + y[2])).exp()));
        }
    }
    out
}

fn add(y: &[f64; 5], k: &[f64; 5], c: f64) -> [f64; 5] {
    let mut o = *y;
    for i in 0..5 {
        o[i] += c * k[i];
    }
    o
}

/// Eigenvalues of a symmetric matrix (row-major `n × n`) by cyclic Jacobi.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Row-major `aᵀ b` for row-major `a` (`r × p`) and `b` (`r × q`).
pub fn tr_mul(a: &[f64], b: &[f64], r: usize, p: usize, q: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * q];
    for row in 0..r {
        for i in 0..p {
            for j in 0..q {
                out[i * q + j] += a[row * p + i] * b[row * q + j];
            }
        }
    }
    out
}

/// Row-major `a b`.
pub fn mat_mul(a: &[f64], b: &[f64], r: usize, m: usize, q: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * q];
    for i in 0..r {
        for l in 0..m {
            for j in 0..q {
                out[i * q + j] += a[i * m + l] * b[l * q + j];
            }
        }
    }
    out
}
