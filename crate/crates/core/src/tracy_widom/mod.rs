//! Tracy-Widom F1 distribution.
//!
//! `F1(z) = exp(-½ ∫_z^∞ q(t) + (t - z) q(t)² dt)` where `q` is the
//! Hastings-McLeod solution of Painlevé II, `q'' = z q + 2 q³`, `q ~ Ai` as
//! `z → ∞`.
//!
//! The table integrates Painlevé II backwards from `z = 8` starting at the
//! Airy data, carrying three quadratures in the ODE state:
//! `I(z) = ∫_z q`, `K(z) = ∫_z q²` and `J(z) = ∫_z (t - z) q²`, with
//! `I' = -q`, `K' = -q²`, `J' = -K`. Then `log F1 = -½ (I + J)` and
//! `(log F1)' = ½ (q + K)`, which gives exact slopes for cubic Hermite
//! interpolation between grid points.
//!
//! Backward integration of `q` is unstable far into the left tail (tiny
//! errors in the Airy data seed solutions that blow up near `z ≈ -9`), so
//! below `z = -7` the quadratures are driven by the asymptotic expansion
//! `q ~ √(-z/2) (1 + 1/(8z³) - 73/(128z⁶) + 10657/(1024z⁹))` instead.

mod airy;
mod ode;

use std::io::Write;
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use airy::{airy_asymptotic, airy_tail_integral};
use ode::{Dopri5, Tolerance};

/// Start of the backward integration.
pub const BOUNDARY_Z: f64 = 8.0;
pub const GRID_MIN: f64 = -10.0;
pub const GRID_STEP: f64 = 0.01;
const ODE_TOL: Tolerance = Tolerance { rtol: 1e-13, atol: 1e-26 };
/// Below this the left-tail expansion of `q` replaces the ODE for `q`.
const LEFT_SWITCH: f64 = -7.0;

type State = [f64; 5];

fn painleve(z: f64, s: &State) -> State {
    let (q, dq, k) = (s[0], s[1], s[4]);
    [dq, z * q + 2.0 * q * q * q, -q, -k, -q * q]
}

fn q_left(z: f64) -> f64 {
    let z3 = z * z * z;
    (-z / 2.0).sqrt() * (1.0 + 1.0 / (8.0 * z3) - 73.0 / (128.0 * z3 * z3) + 10657.0 / (1024.0 * z3 * z3 * z3))
}

fn painleve_left(z: f64, s: &State) -> State {
    let q = q_left(z);
    [s[1], z * q + 2.0 * q * q * q, -q, -s[4], -q * q]
}

/// Advances the state from `z` to `target < z`, switching to the
/// asymptotic `q` below [`LEFT_SWITCH`].
fn integrate_back(solver: &mut Dopri5<5>, z: f64, state: &mut State, target: f64) -> Result<()> {
    let mut z = z;
    if z > LEFT_SWITCH {
        let stop = target.max(LEFT_SWITCH);
        solver.advance(&painleve, z, state, stop)?;
        z = stop;
    }
    if target < z {
        solver.advance(&painleve_left, z, state, target)?;
        state[0] = q_left(target);
    }
    Ok(())
}

/// ODE state at the boundary. `K` and `J` tails use the closed forms
/// `∫_z^∞ Ai² = Ai'² - z Ai²` and `∫_z^∞ (t-z) Ai² = (2z²Ai² - 2z Ai'² - Ai Ai')/3`.
fn boundary_state(z0: f64) -> State {
    let (ai, aip) = airy_asymptotic(z0);
    let k_tail = aip * aip - z0 * ai * ai;
    let j_tail = (2.0 * z0 * z0 * ai * ai - 2.0 * z0 * aip * aip - ai * aip) / 3.0;
    // Order: q, q', I, J, K.
    [ai, aip, airy_tail_integral(z0), j_tail, k_tail]
}

fn cdf_and_slope(s: &State) -> (f64, f64) {
    let f = (-0.5 * (s[2] + s[3])).exp();
    (f, f * 0.5 * (s[0] + s[4]))
}

/// Tabulated F1 with monotone cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct TwTable {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    slope: Vec<f64>,
    /// Bound on the absolute error of [`TwTable::cdf`] inside the grid.
    pub accuracy: f64,
}

impl TwTable {
    /// Table on `[-10, 8]` at spacing `0.01`.
    pub fn build() -> Result<Self> {
        Self::build_on(GRID_MIN, GRID_STEP)
    }

    /// Table on `[z_min, 8]` with the given spacing.
    pub fn build_on(z_min: f64, step: f64) -> Result<Self> {
        if !(z_min < BOUNDARY_Z) || !(step > 0.0) {
            return Err(domain("table needs z_min < 8 and a positive step"));
        }
        let n = ((BOUNDARY_Z - z_min) / step).round() as usize;
        let mut state = boundary_state(BOUNDARY_Z);
        let mut solver = Dopri5::<5>::new(ODE_TOL, -step / 4.0);
        let mut grid = vec![0.0; n + 1];
        let mut cdf = vec![0.0; n + 1];
        let mut slope = vec![0.0; n + 1];
        let (f, df) = cdf_and_slope(&state);
        grid[n] = BOUNDARY_Z;
        cdf[n] = f;
        slope[n] = df;
        // Decimal steps give grid points that print as short decimals.
        let per_unit = (1.0 / step).round();
        let exact = ((per_unit * step) - 1.0).abs() < 1e-12;
        let point = |back: usize| {
            if exact {
                (BOUNDARY_Z * per_unit - back as f64) / per_unit
            } else {
                BOUNDARY_Z - back as f64 * step
            }
        };
        let mut z = BOUNDARY_Z;
        for i in (0..n).rev() {
            let target = point(n - i);
            integrate_back(&mut solver, z, &mut state, target)?;
            z = target;
            let (f, df) = cdf_and_slope(&state);
            grid[i] = target;
            cdf[i] = f;
            slope[i] = df;
        }
        limit_slopes(&cdf, &mut slope, step);
        Ok(Self { grid, cdf, slope, accuracy: 1e-6 })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn z_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn z_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Interpolated F1; 0 below the grid and 1 above it.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= self.z_min() {
            return if z == self.z_min() { self.cdf[0] } else { 0.0 };
        }
        if z >= self.z_max() {
            return if z == self.z_max() { *self.cdf.last().unwrap() } else { 1.0 };
        }
        let h = self.grid[1] - self.grid[0];
        let i = (((z - self.z_min()) / h).floor() as usize).min(self.grid.len() - 2);
        let (z0, z1) = (self.grid[i], self.grid[i + 1]);
        let w = z1 - z0;
        let t = (z - z0) / w;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.cdf[i] + h10 * w * self.slope[i] + h01 * self.cdf[i + 1] + h11 * w * self.slope[i + 1];
        v.clamp(self.cdf[i], self.cdf[i + 1])
    }

    /// Smallest `z` with `cdf(z) = p`, by bisection on the interpolant.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("quantile level {p} outside (0, 1)")));
        }
        let j = self.cdf.partition_point(|&c| c < p);
        if j == 0 {
            return Ok(self.z_min());
        }
        if j == self.cdf.len() {
            return Ok(self.z_max());
        }
        let (mut lo, mut hi) = (self.grid[j - 1], self.grid[j]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Writes the table as `z,cdf` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z,cdf")?;
        for (z, f) in self.grid.iter().zip(&self.cdf) {
            writeln!(out, "{z},{f}")?;
        }
        Ok(())
    }
}

/// Fritsch-Carlson limiter: keeps each Hermite segment monotone.
fn limit_slopes(values: &[f64], slope: &mut [f64], h: f64) {
    for i in 0..values.len() - 1 {
        let secant = (values[i + 1] - values[i]) / h;
        if secant <= 0.0 {
            slope[i] = 0.0;
            slope[i + 1] = 0.0;
            continue;
        }
        slope[i] = slope[i].max(0.0);
        slope[i + 1] = slope[i + 1].max(0.0);
        let (a, b) = (slope[i] / secant, slope[i + 1] / secant);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slope[i] = tau * a * secant;
            slope[i + 1] = tau * b * secant;
        }
    }
}

static TABLE: OnceLock<TwTable> = OnceLock::new();

/// Process-wide table, built on first use.
pub fn table() -> &'static TwTable {
    TABLE.get_or_init(|| TwTable::build().expect("Tracy-Widom table construction failed"))
}

/// F1(z).
pub fn tw_cdf(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Contract("tw_cdf called with NaN".into()));
    }
    Ok(table().cdf(z))
}

/// Inverse of [`tw_cdf`].
pub fn tw_quantile(p: f64) -> Result<f64> {
    table().quantile(p)
}

/// F1(z) by a fresh ODE solve from the boundary (no table). Debug aid.
pub fn tw_cdf_direct(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Contract("tw_cdf_direct called with NaN".into()));
    }
    if z >= BOUNDARY_Z {
        return Ok(1.0);
    }
    let mut state = boundary_state(BOUNDARY_Z);
    integrate_back(&mut Dopri5::<5>::new(ODE_TOL, -1e-3), BOUNDARY_Z, &mut state, z)?;
    Ok(cdf_and_slope(&state).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tails() {
        assert!(tw_cdf(-10.0).unwrap() <= 1e-8);
        assert_eq!(tw_cdf(-50.0).unwrap(), 0.0);
        assert_eq!(tw_cdf(50.0).unwrap(), 1.0);
        assert!(1.0 - tw_cdf(BOUNDARY_Z).unwrap() < 1e-8);
        assert!(matches!(tw_cdf(f64::NAN), Err(Error::Contract(_))));
    }

    #[test]
    fn right_tail_at_six() {
        // 1 - F1(z) ~ ½ ∫_z^∞ Ai for large z; at z = 6 this is about 1.9e-6.
        let tail = 1.0 - tw_cdf(6.0).unwrap();
        let approx = 0.5 * airy_tail_integral(6.0);
        assert!((tail / approx - 1.0).abs() < 0.01, "{tail} vs {approx}");
        assert!(tail < 1e-5);
    }

    #[test]
    fn classical_quantiles() {
        // Percentage points of F1 as tabulated in the random-matrix literature.
        for (p, z) in [(0.01, -3.8954), (0.05, -3.1804), (0.5, -1.2686), (0.95, 0.9793), (0.99, 2.0234)] {
            assert!((tw_cdf(z).unwrap() - p).abs() < 2e-5, "p={p}");
        }
    }

    #[test]
    fn quantile_domain_and_round_trip() {
        assert!(tw_quantile(0.0).is_err());
        assert!(tw_quantile(1.0).is_err());
        assert!(tw_quantile(f64::NAN).is_err());
        let p0 = tw_cdf(0.0).unwrap();
        assert!(tw_quantile(p0).unwrap().abs() < 1e-5);
        let med = tw_quantile(0.5).unwrap();
        assert!((tw_cdf(med).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn direct_mode_agrees_with_table() {
        for z in [-6.0, -3.3, -1.2065, 0.0, 0.735, 2.5, 5.0] {
            let a = tw_cdf(z).unwrap();
            let b = tw_cdf_direct(z).unwrap();
            assert!((a - b).abs() < 1e-8, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("z,cdf"));
        assert_eq!(lines.count(), table().grid().len());
    }

    proptest! {
        #[test]
        fn monotone(a in -12.0f64..10.0, b in -12.0f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(tw_cdf(lo).unwrap() <= tw_cdf(hi).unwrap());
        }
    }
}
