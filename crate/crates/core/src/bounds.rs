//! Certified quantile enclosures.
//!
//! Given a uniform bound `|F(x) − G(x)| ≤ d` on a statistic's distribution
//! function, the upper `100α%` point `x_α` (with `F(x_α) = 1 − α`) satisfies
//! `u_{α+d} ≤ x_α ≤ u_{α−d}` and `|x_α − u_α| ≤ d / min g` over that bracket.
//! If instead `T(U)` is close to `G` for an increasing correction `T` with
//! inverse `b`, then `|x_α − b(u_α)| ≤ d·max|b′| / min g` over the same bracket.
//!
//! Levels are upper-tail throughout: `G(u_α) = 1 − α`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::LimitDistribution;
use crate::edgeworth::EdgeworthModel;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::transforms::MonotoneTransform;

/// Closed quantile enclosure `[lo, hi]`; serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("bracket needs lo ≤ hi, got [{lo}, {hi}]")));
        }
        Ok(Bracket { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Bracket) -> Option<Bracket> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Bracket { lo, hi })
    }
}

impl Serialize for Bracket {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bracket {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(d)?;
        Bracket::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// Bracket and radius around `u_α` from `|F − G| ≤ c₁ε`.
    T1,
    /// Radius around `u_α` for the quantile of a corrected statistic `T(U)`.
    T2,
    /// Radius around `b(u_α)` for the quantile of `U` itself.
    T3,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::T1 => 1,
            Theorem::T2 => 2,
            Theorem::T3 => 3,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.number())
    }
}

/// Conditions attached to a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateFlag {
    /// The radius interval and the bracket did not overlap in floating point;
    /// the bracket alone is returned.
    Rounding,
    /// `max|b′|` came from a finite grid, a lower bound on the true maximum.
    GridDerivativeMaximum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedQuantile {
    pub model_label: String,
    pub alpha: f64,
    pub theorem: Theorem,
    pub estimate: f64,
    pub radius: f64,
    pub interval: Bracket,
    pub window: (f64, f64),
    pub flags: Vec<CertificateFlag>,
    /// Enclosure of the quantile implied by the bracket alone.
    #[serde(skip)]
    pub bracket: Bracket,
    /// `u_α = G⁻¹(1 − α)`.
    #[serde(skip)]
    pub limit_quantile: f64,
}

impl CertifiedQuantile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(d, 1 − d)` with `d = c·εᵏ`; levels must lie strictly inside.
pub fn alpha_window(model: &EdgeworthModel) -> Result<(f64, f64)> {
    let d = model.remainder_bound();
    if !(d < 0.5) {
        return Err(Error::Infeasible { d });
    }
    Ok((d, 1.0 - d))
}

fn check_alpha(model: &EdgeworthModel, alpha: f64) -> Result<(f64, (f64, f64))> {
    let window = alpha_window(model)?;
    let d = window.0;
    if !(alpha > window.0 && alpha < window.1) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            lo: window.0,
            hi: window.1,
        });
    }
    Ok((d, window))
}

/// `[u_{α+d}, u_{α−d}]`, the enclosure of the upper `100α%` point of `F`.
pub fn theorem1_bracket(model: &EdgeworthModel, alpha: f64) -> Result<Bracket> {
    let (d, _) = check_alpha(model, alpha)?;
    raw_bracket(&model.base, alpha, d)
}

fn raw_bracket(base: &LimitDistribution, alpha: f64, d: f64) -> Result<Bracket> {
    let lo = base.quantile(1.0 - alpha - d)?;
    let hi = base.quantile(1.0 - alpha + d)?;
    Bracket::new(lo, hi)
}

/// Shared core of the first two certificates: estimate `u_α`, radius `d / min g`.
fn certify_limit_quantile(
    model: &EdgeworthModel,
    alpha: f64,
    theorem: Theorem,
) -> Result<CertifiedQuantile> {
    let (d, window) = check_alpha(model, alpha)?;
    let bracket = raw_bracket(&model.base, alpha, d)?;
    let u_alpha = model.base.quantile(1.0 - alpha)?;
    let radius = if d == 0.0 {
        0.0
    } else {
        d / model.base.density_min_on_interval(bracket.lo, bracket.hi)?
    };
    if !radius.is_finite() {
        return Err(Error::Numerical(format!(
            "radius overflowed at alpha = {alpha} (density vanishes on the bracket)"
        )));
    }
    let around = Bracket {
        lo: u_alpha - radius,
        hi: u_alpha + radius,
    };
    let (interval, flags) = match around.intersect(&bracket) {
        Some(i) => (i, Vec::new()),
        None => (bracket, vec![CertificateFlag::Rounding]),
    };
    Ok(CertifiedQuantile {
        model_label: model.label.clone(),
        alpha,
        theorem,
        estimate: u_alpha,
        radius,
        interval,
        window,
        flags,
        bracket,
        limit_quantile: u_alpha,
    })
}

/// Certificate for `x_α` from `|F − G| ≤ d`: estimate `u_α`, radius
/// `d / min_{[u_{α+d}, u_{α−d}]} g`, interval intersected with the bracket.
///
/// Any correction term in `model` is ignored: `d` must bound `F − G` itself.
/// Use [`EdgeworthModel::absorb_correction`] for models with a correction.
pub fn theorem1_certify(model: &EdgeworthModel, alpha: f64) -> Result<CertifiedQuantile> {
    certify_limit_quantile(model, alpha, Theorem::T1)
}

fn check_transformed_model(model: &EdgeworthModel) -> Result<()> {
    if model.correction.is_some() {
        return Err(Error::Constraint(format!(
            "model '{}' has a correction term; a corrected statistic's model must have none",
            model.label
        )));
    }
    if model.eps_order != 2 {
        return Err(Error::Constraint(format!(
            "model '{}' has eps_order {}; a corrected statistic's model needs order 2",
            model.label, model.eps_order
        )));
    }
    Ok(())
}

/// Certificate for the upper point `x̃_α` of a corrected statistic `T(U)`
/// whose distribution is within `c̃₂ε²` of `G`.
pub fn theorem2_certify(transformed_model: &EdgeworthModel, alpha: f64) -> Result<CertifiedQuantile> {
    check_transformed_model(transformed_model)?;
    certify_limit_quantile(transformed_model, alpha, Theorem::T2)
}

/// Certificate for `x_α` of `U` itself: estimate `b(u_α)` and radius
/// `c̃₂ε²·max|b′| / min g`, both extrema over `[u_{α+d̃}, u_{α−d̃}]`.
///
/// The interval is intersected with `[b(u_{α+d̃}), b(u_{α−d̃})]`, the image of
/// the bracket, which also encloses `x_α` because `b` is increasing.
pub fn theorem3_certify(
    transformed_model: &EdgeworthModel,
    transform: &MonotoneTransform,
    alpha: f64,
) -> Result<CertifiedQuantile> {
    let inner = theorem2_certify(transformed_model, alpha)?;
    let bracket = inner.bracket;
    let image = transform.image();
    if !image.contains(bracket.lo) || !image.contains(bracket.hi) {
        return Err(Error::TransformDomain(format!(
            "bracket [{}, {}] leaves the transform's image [{}, {}]",
            bracket.lo, bracket.hi, image.lo, image.hi
        )));
    }
    let d = transformed_model.remainder_bound();
    let slope = transform.max_abs_inverse_derivative(bracket.lo, bracket.hi)?;
    let estimate = transform.inverse(inner.limit_quantile)?;
    let radius = if d == 0.0 {
        0.0
    } else {
        d * slope.value / transformed_model.base.density_min_on_interval(bracket.lo, bracket.hi)?
    };
    let mapped = Bracket::new(transform.inverse(bracket.lo)?, transform.inverse(bracket.hi)?)?;
    let around = Bracket {
        lo: estimate - radius,
        hi: estimate + radius,
    };
    let mut flags = Vec::new();
    if slope.grid_based {
        flags.push(CertificateFlag::GridDerivativeMaximum);
    }
    let interval = match around.intersect(&mapped) {
        Some(i) => i,
        None => {
            flags.push(CertificateFlag::Rounding);
            mapped
        }
    };
    Ok(CertifiedQuantile {
        model_label: transformed_model.label.clone(),
        alpha,
        theorem: Theorem::T3,
        estimate,
        radius,
        interval,
        window: inner.window,
        flags,
        bracket: mapped,
        limit_quantile: inner.limit_quantile,
    })
}

/// First two Cornish–Fisher coefficients at `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfCoefficients {
    pub b1: f64,
    pub b2: f64,
    /// `b2` was computed with `a₂ ≡ 0` because no second-order term was supplied.
    pub b2_partial: bool,
}

/// `b₁ = −a₁(u)`, `b₂ = ½(g′/g)(u)·a₁(u)² − a₂(u) + a₁′(u)·a₁(u)`.
pub fn cf_coefficients(
    model: &EdgeworthModel,
    u: f64,
    a2: Option<&Polynomial>,
) -> Result<CfCoefficients> {
    let slope = model.base.log_density_slope(u)?;
    let a1 = model.density_factor()?.unwrap_or_default();
    let a1u = a1.eval(u);
    let a1p = a1.derivative().eval(u);
    let a2u = a2.map_or(0.0, |p| p.eval(u));
    Ok(CfCoefficients {
        b1: -a1u,
        b2: 0.5 * slope * a1u * a1u - a2u + a1p * a1u,
        b2_partial: a2.is_none(),
    })
}

/// First-order term of `u(x) = G⁻¹(F(x))`: `x + ε·a₁(x)`.
pub fn first_order_u_of_x(model: &EdgeworthModel, x: f64) -> Result<f64> {
    Ok(match model.density_factor()? {
        None => x,
        Some(a1) => x + model.eps * a1.eval(x),
    })
}

/// Truncated expansion `x(u) ≈ u + ε·b₁(u) + ε²·b₂(u)`.
pub fn cornish_fisher_quantile(
    model: &EdgeworthModel,
    u: f64,
    a2: Option<&Polynomial>,
) -> Result<f64> {
    let c = cf_coefficients(model, u, a2)?;
    Ok(u + model.eps * c.b1 + model.eps * model.eps * c.b2)
}
