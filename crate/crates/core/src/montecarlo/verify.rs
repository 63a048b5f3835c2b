use serde::Serialize;

use super::EmpiricalQuantiles;
use crate::bounds::{Bracket, CertifiedQuantile};
use crate::error::{Error, Result};

/// Two-sided DKW half-width `√(ln(2/δ) / (2m))` for confidence `1 − δ`.
pub fn dkw_margin(count: usize, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if count == 0 {
        return Err(Error::Domain("no samples".into()));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * count as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnclosureStatus {
    Inside,
    Outside,
    /// Inside, but the certificate lies within the sampling band, so the
    /// data cannot tell it apart from a much tighter or looser one.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub alpha: f64,
    pub empirical_quantile: f64,
    pub interval: Bracket,
    pub inside: bool,
    /// Distance from the empirical quantile to the nearer end of the inflated
    /// interval; negative when outside.
    pub slack: f64,
    /// Quantile-scale uncertainty: the larger distance from the empirical
    /// quantile to the order statistics at levels `1 − α ∓ ε`. Infinite
    /// (serialized as `null`) when `1 − α + ε ≥ 1` or `1 − α − ε ≤ 0`.
    pub dkw_margin: f64,
    /// Probability-scale DKW half-width `ε`.
    pub dkw_epsilon: f64,
    pub status: EnclosureStatus,
}

/// Checks that the empirical upper point lies in the certificate's interval
/// widened on both sides by the DKW quantile margin.
pub fn verify_enclosure(
    cert: &CertifiedQuantile,
    samples: &EmpiricalQuantiles,
    confidence: f64,
) -> Result<Verdict> {
    let eps = dkw_margin(samples.count(), confidence)?;
    let level = 1.0 - cert.alpha;
    let q_hat = samples.upper_quantile(cert.alpha)?;
    let below = if level - eps > 0.0 {
        q_hat - samples.quantile(level - eps)
    } else {
        f64::INFINITY
    };
    let above = if level + eps < 1.0 {
        samples.quantile(level + eps) - q_hat
    } else {
        f64::INFINITY
    };
    let margin = below.max(above);
    let lo = cert.interval.lo - margin;
    let hi = cert.interval.hi + margin;
    let slack = (q_hat - lo).min(hi - q_hat);
    let inside = q_hat >= lo && q_hat <= hi;
    let within_band = cert.interval.lo >= q_hat - margin && cert.interval.hi <= q_hat + margin;
    let status = match (inside, within_band) {
        (false, _) => EnclosureStatus::Outside,
        (true, true) => EnclosureStatus::Inconclusive,
        (true, false) => EnclosureStatus::Inside,
    };
    Ok(Verdict {
        alpha: cert.alpha,
        empirical_quantile: q_hat,
        interval: cert.interval,
        inside,
        slack,
        dkw_margin: margin,
        dkw_epsilon: eps,
        status,
    })
}
