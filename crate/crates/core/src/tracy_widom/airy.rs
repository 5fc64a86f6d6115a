//! Airy function on the positive axis from its large-argument expansion.
//!
//! `Ai(z) ~ e^{-ζ} / (2√π z^{1/4}) Σ (-1)^k u_k ζ^{-k}` and
//! `Ai'(z) ~ -z^{1/4} e^{-ζ} / (2√π) Σ (-1)^k v_k ζ^{-k}` with `ζ = 2/3 z^{3/2}`.
//! The series is summed until a term drops below `1e-17` of the partial sum
//! or starts growing (14 terms at `z = 8`, where the truncation error is
//! below `1e-15` relative). Valid for `z ≥ 5` or so; the table only evaluates it at `z ≥ 8`.

use std::f64::consts::PI;

const MAX_TERMS: usize = 40;

/// `(Ai(z), Ai'(z))` for large positive `z`.
pub(crate) fn airy_asymptotic(z: f64) -> (f64, f64) {
    debug_assert!(z >= 4.0, "asymptotic Airy expansion used at z = {z}");
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let mut u = 1.0_f64;
    let mut sum_u = 1.0;
    let mut sum_v = 1.0;
    let mut zeta_pow = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zeta_pow *= -zeta;
        let tu = u / zeta_pow;
        let tv = v / zeta_pow;
        // Asymptotic series: stop at the smallest term.
        if tu.abs() > prev.abs() {
            break;
        }
        prev = tu;
        sum_u += tu;
        sum_v += tv;
        if tu.abs() < 1e-17 * sum_u.abs() && tv.abs() < 1e-17 * sum_v.abs() {
            break;
        }
    }
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let z14 = z.powf(0.25);
    (pre / z14 * sum_u, -pre * z14 * sum_v)
}

/// `∫_z^∞ Ai(t) dt` by composite Simpson on the asymptotic form.
pub(crate) fn airy_tail_integral(z: f64) -> f64 {
    let upper = z + 12.0;
    let m = 4000;
    let h = (upper - z) / m as f64;
    let f = |t: f64| airy_asymptotic(t).0;
    let mut acc = f(z) + f(upper);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(z + i as f64 * h);
    }
    acc * h / 3.0
}
