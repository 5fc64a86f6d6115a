//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

pub(crate) struct Dopri5<const N: usize> {
    tol: Tolerance,
    /// Signed step carried between calls.
    h: f64,
    pub steps: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(tol: Tolerance, h0: f64) -> Self {
        Self { tol, h: h0, steps: 0 }
    }

    /// Advances `y` from `t0` to `t1` (either direction).
    pub fn advance<F>(&mut self, f: &F, t0: f64, y: &mut [f64; N], t1: f64) -> Result<()>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = (t1 - t0).signum();
        if dir == 0.0 {
            return Ok(());
        }
        let mut t = t0;
        let mut h = self.h.abs().max(1e-12) * dir;
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, y);
        while (t1 - t) * dir > 0.0 {
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            let mut stage = [0.0; N];
            for s in 1..7 {
                for i in 0..N {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    stage[i] = y[i] + h * acc;
                }
                k[s] = f(t + C[s] * h, &stage);
            }
            // The seventh stage is evaluated at the fifth-order solution.
            let y_new = stage;
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Contract("ODE solution became non-finite".into()));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t += h;
                *y = y_new;
                k[0] = k[6];
                self.steps += 1;
                if (t1 - t) * dir > 0.0 {
                    self.h = h * factor;
                }
                h *= factor;
            } else {
                h *= factor.min(1.0);
            }
            if h.abs() < 1e-14 {
                return Err(Error::Contract("ODE step size underflow".into()));
            }
        }
        Ok(())
    }
}
