//! Closed-form random-matrix approximations.
//!
//! Largest eigenvalue of `W ~ Wishart(k, I_d/k)`: `(λ_max - μ) / σ → F1` with
//! `μ = (√(k-½) + √(d-½))² / k` and
//! `σ = (√(k-½) + √(d-½)) / k · (1/√(k-½) + 1/√(d-½))^{1/3}`.
//!
//! Smallest eigenvalue, on the log scale: `(log λ_min - ν) / τ → -F1` with
//! `μ = (√(k-½) - √(d-½))²`, `σ = (√(k-½) - √(d-½)) (1/√(d-½) - 1/√(k-½))^{1/3}`,
//! `τ = σ/μ` and `ν = log μ - log k - τ²/8`.
//!
//! Both scale factors multiply by the cube-root term and the inner difference
//! of the smallest-eigenvalue factor is taken so that `σ > 0`; this is the
//! convention the largest/smallest-eigenvalue calibration tests pin down.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::tracy_widom::tw_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEigenConstants {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEigenConstants {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub nu: f64,
}

/// Centering and scaling constants for a `(k, d)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwApproxConstants {
    pub k: usize,
    pub d: usize,
    pub max: MaxEigenConstants,
    /// `None` when `d ≥ k`.
    pub min: Option<MinEigenConstants>,
}

impl TwApproxConstants {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        Ok(Self { k, d, max: constants_max(k, d)?, min: constants_min(k, d).ok() })
    }
}

fn check_kd(k: usize, d: usize) -> Result<()> {
    if k == 0 || d == 0 {
        return Err(domain(format!("k and d must be positive (k={k}, d={d})")));
    }
    Ok(())
}

pub fn constants_max(k: usize, d: usize) -> Result<MaxEigenConstants> {
    check_kd(k, d)?;
    let a = (k as f64 - 0.5).sqrt();
    let b = (d as f64 - 0.5).sqrt();
    let kf = k as f64;
    Ok(MaxEigenConstants {
        mu: (a + b).powi(2) / kf,
        sigma: (a + b) / kf * (1.0 / a + 1.0 / b).cbrt(),
    })
}

pub fn constants_min(k: usize, d: usize) -> Result<MinEigenConstants> {
    check_kd(k, d)?;
    if d >= k {
        return Err(domain(format!("smallest-eigenvalue constants need d < k (k={k}, d={d})")));
    }
    let a = (k as f64 - 0.5).sqrt();
    let b = (d as f64 - 0.5).sqrt();
    let mu = (a - b).powi(2);
    let sigma = (a - b) * (1.0 / b - 1.0 / a).cbrt();
    let tau = sigma / mu;
    let nu = mu.ln() - (k as f64).ln() - tau * tau / 8.0;
    Ok(MinEigenConstants { mu, sigma, tau, nu })
}

/// Tracy-Widom approximation to the probability that a Gaussian sketch of
/// size `k` is an `eps`-subspace embedding for rank-`d` data.
pub fn embedding_prob_approx(k: usize, d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    let c = constants_max(k, d)?;
    tw_cdf((eps + 1.0 - c.mu) / c.sigma)
}

/// Tracy-Widom approximation to the probability that the sketched-preconditioner
/// iteration converges, i.e. `Pr(λ_min(W) > ½)`.
pub fn convergence_prob_approx(k: usize, d: usize) -> Result<f64> {
    let c = constants_min(k, d)?;
    tw_cdf((c.nu - 0.5f64.ln()) / c.tau)
}

/// Aspect ratio `α = d/k` of the proportional regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRegime {
    pub alpha: f64,
}

impl AsymptoticRegime {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(domain(format!("alpha = {alpha} outside (0, 1]")));
        }
        Ok(Self { alpha })
    }

    pub fn from_dims(k: usize, d: usize) -> Result<Self> {
        check_kd(k, d)?;
        Self::new(d as f64 / k as f64)
    }

    /// `ε` above which the embedding probability tends to one: `(1+√α)² - 1`.
    pub fn eps_threshold(&self) -> f64 {
        (1.0 + self.alpha.sqrt()).powi(2) - 1.0
    }

    /// Limiting embedding probability at `eps`; undefined exactly at the threshold.
    pub fn embedding_limit(&self, eps: f64) -> Option<f64> {
        let t = self.eps_threshold();
        if eps > t {
            Some(1.0)
        } else if eps < t {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Limits in probability of `(λ_min, λ_max)` for `Wishart(k, I_d/k)` with `d/k → α`.
pub fn eigenvalue_limits(alpha: f64) -> Result<(f64, f64)> {
    let r = AsymptoticRegime::new(alpha)?;
    let s = r.alpha.sqrt();
    Ok(((1.0 - s).powi(2), (1.0 + s).powi(2)))
}

/// Finite-sample guarantee for the uniform sketch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBound {
    /// Lower bound `max(0, 1 - 2d exp(-c t²))` on the probability of the window.
    pub probability: f64,
    /// `1 - t √(m n / k)`.
    pub sigma_lower: f64,
    /// `1 + t √(m n / k)`.
    pub sigma_upper: f64,
}

/// Probability bound for `σ(SU) ∈ [1 - t√(mn/k), 1 + t√(mn/k)]` when the
/// maximum leverage is at most `m`. The absolute constant `c` is unknown, so
/// the result is qualitative only; `1.0` is a conventional choice.
pub fn uniform_embedding_lower_bound(
    m: f64,
    n: usize,
    k: usize,
    d: usize,
    t: f64,
    c: f64,
) -> Result<UniformBound> {
    check_kd(k, d)?;
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    let mean_leverage = d as f64 / n as f64;
    if !(m >= mean_leverage * (1.0 - 1e-12)) {
        return Err(domain(format!("leverage bound m = {m} below the mean leverage d/n = {mean_leverage}")));
    }
    if !(t >= 0.0) || !(c > 0.0) {
        return Err(domain("need t ≥ 0 and c > 0"));
    }
    let half = t * (m * n as f64 / k as f64).sqrt();
    Ok(UniformBound {
        probability: (1.0 - 2.0 * d as f64 * (-c * t * t).exp()).max(0.0),
        sigma_lower: 1.0 - half,
        sigma_upper: 1.0 + half,
    })
}
