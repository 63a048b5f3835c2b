//! Limiting distributions: the standard normal and chi-squared laws.
//!
//! Every certificate is expressed through the density, distribution function
//! and quantile of one of these two laws, so they are evaluated to close to
//! double precision rather than with the short polynomial approximations
//! often used elsewhere.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erfc, gamma_pq, ln_gamma};

/// 1/√(2π)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Absolute tolerance on the CDF residual accepted from the quantile solver.
pub const QUANTILE_TOLERANCE: f64 = 1e-12;
const QUANTILE_MAX_ITER: usize = 200;

/// The limit law `G` of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LimitDistribution {
    StdNormal,
    ChiSquared { dof: u32 },
}

impl LimitDistribution {
    pub fn chi_squared(dof: u32) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Domain(
                "chi-squared degrees of freedom must be at least 1".into(),
            ));
        }
        Ok(LimitDistribution::ChiSquared { dof })
    }

    /// Checks the `dof ≥ 1` invariant (needed after deserialization).
    pub fn validate(&self) -> Result<()> {
        match *self {
            LimitDistribution::ChiSquared { dof: 0 } => Err(Error::Domain(
                "chi-squared degrees of freedom must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Whether `x` lies in the open interior of the support.
    pub fn in_interior(&self, x: f64) -> bool {
        match self {
            LimitDistribution::StdNormal => x.is_finite(),
            LimitDistribution::ChiSquared { .. } => x > 0.0 && x.is_finite(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            LimitDistribution::StdNormal => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            LimitDistribution::ChiSquared { dof } => {
                if x <= 0.0 || x.is_nan() {
                    return 0.0;
                }
                let half = 0.5 * dof as f64;
                ((half - 1.0) * x.ln() - 0.5 * x - half * LN_2 - ln_gamma(half)).exp()
            }
        }
    }

    /// `G(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LimitDistribution::StdNormal => 0.5 * erfc(-x * FRAC_1_SQRT_2),
            LimitDistribution::ChiSquared { dof } => gamma_pq(0.5 * dof as f64, 0.5 * x).0,
        }
    }

    /// Upper tail `1 − G(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            LimitDistribution::StdNormal => 0.5 * erfc(x * FRAC_1_SQRT_2),
            LimitDistribution::ChiSquared { dof } => gamma_pq(0.5 * dof as f64, 0.5 * x).1,
        }
    }

    /// `g′(x)/g(x)`.
    pub fn log_density_slope(&self, x: f64) -> Result<f64> {
        match *self {
            LimitDistribution::StdNormal => Ok(-x),
            LimitDistribution::ChiSquared { dof } => {
                if !(x > 0.0) {
                    return Err(Error::Domain(format!(
                        "log-density slope of chi-squared needs x > 0, got {x}"
                    )));
                }
                Ok((0.5 * dof as f64 - 1.0) / x - 0.5)
            }
        }
    }

    /// Minimum of the density over the closed interval `[lo, hi]`.
    ///
    /// Both densities are unimodal (or monotone), so the minimum over any
    /// interval is attained at one of its endpoints.
    pub fn density_min_on_interval(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        if !self.in_interior(lo) || !self.in_interior(hi) {
            return Err(Error::Domain(format!(
                "interval [{lo}, {hi}] leaves the interior of the support of {self}"
            )));
        }
        Ok(self.density(lo).min(self.density(hi)))
    }

    /// Lower quantile `G⁻¹(p)`.
    ///
    /// Safeguarded Newton iteration inside a bracket that always contains the
    /// root; steps leaving the bracket fall back to bisection. Solves on the
    /// upper tail when `p > 1/2` so that probabilities near one keep their
    /// precision.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile needs 0 < p < 1, got {p}")));
        }
        let upper = p > 0.5;
        let target = if upper { 1.0 - p } else { p };
        // increasing in x, zero at the quantile
        let residual = |x: f64| {
            if upper {
                target - self.sf(x)
            } else {
                self.cdf(x) - target
            }
        };

        let x0 = self.initial_guess(p);
        let (mut lo, mut hi) = self.bracket(x0, &residual);
        let mut x = x0.clamp(lo, hi);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }

        for _ in 0..QUANTILE_MAX_ITER {
            let f = residual(x);
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let g = self.density(x);
            let mut next = x - f / g;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let converged = (next - x).abs() <= 2.0 * f64::EPSILON * next.abs()
                || hi - lo <= 2.0 * f64::EPSILON * x.abs();
            x = next;
            if converged {
                break;
            }
        }

        let err = (self.cdf(x) - p).abs();
        if err > QUANTILE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "quantile solver for {self} at p = {p} stalled with CDF residual {err:e}"
            )));
        }
        Ok(x)
    }

    fn initial_guess(&self, p: f64) -> f64 {
        match *self {
            LimitDistribution::StdNormal => normal_quantile_rational(p),
            LimitDistribution::ChiSquared { dof } => {
                let k = dof as f64;
                let z = normal_quantile_rational(p);
                let h = 2.0 / (9.0 * k);
                let wh = k * (1.0 - h + z * h.sqrt()).powi(3);
                // lower-tail asymptote G(x) ≈ (x/2)^{k/2} / Γ(k/2 + 1)
                let small = 2.0 * (p.ln() / (0.5 * k) + ln_gamma(0.5 * k + 1.0) / (0.5 * k)).exp();
                if wh > 0.0 && wh.is_finite() {
                    if p < 0.05 {
                        wh.min(small).max(f64::MIN_POSITIVE)
                    } else {
                        wh
                    }
                } else {
                    small.max(f64::MIN_POSITIVE)
                }
            }
        }
    }

    /// Expands outward from `x0` until the residual changes sign.
    fn bracket(&self, x0: f64, residual: &impl Fn(f64) -> f64) -> (f64, f64) {
        match self {
            LimitDistribution::StdNormal => {
                let mut step = 1.0;
                let mut lo = x0 - step;
                while residual(lo) > 0.0 {
                    step *= 2.0;
                    lo = x0 - step;
                }
                step = 1.0;
                let mut hi = x0 + step;
                while residual(hi) < 0.0 {
                    step *= 2.0;
                    hi = x0 + step;
                }
                (lo, hi)
            }
            LimitDistribution::ChiSquared { .. } => {
                let mut hi = (2.0 * x0).max(1.0);
                while residual(hi) < 0.0 {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
        }
    }

    /// Upper `100α%` point: `u_α` with `G(u_α) = 1 − α`.
    pub fn upper_point(&self, alpha: f64) -> Result<f64> {
        self.quantile(1.0 - alpha)
    }
}

impl fmt::Display for LimitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitDistribution::StdNormal => write!(f, "N(0,1)"),
            LimitDistribution::ChiSquared { dof } => write!(f, "chi2({dof})"),
        }
    }
}

/// Acklam's rational approximation to `Φ⁻¹`, relative error below 1.2e−9.
/// Used only as a starting point for Newton refinement.
fn normal_quantile_rational(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
