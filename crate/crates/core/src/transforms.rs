//! Monotone increasing corrections `T` whose inverse `b = T⁻¹` turns a
//! certified quantile of `T(U)` into a certified quantile of `U`.
//!
//! Closed forms are provided for the cubic correction of the sample
//! correlation coefficient and the square-root correction of Hotelling's
//! `T₀²`; anything else can be supplied as a forward map and inverted
//! numerically.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::LimitDistribution;
use crate::edgeworth::check_hotelling_dims;
use crate::error::{Error, Result};

/// Points used when checking monotonicity and the round trip at construction.
pub const CHECK_POINTS: usize = 1024;
/// Points used for the grid maximum of `|b′|` when no analytic rule exists.
pub const DERIVATIVE_GRID_POINTS: usize = 1025;
/// Half-width of the window used to check transforms on unbounded domains.
const CHECK_SPAN: f64 = 50.0;
const ROUND_TRIP_TOLERANCE: f64 = 1e-10;
const NUMERIC_INVERSE_TOLERANCE: f64 = 1e-12;
const FINITE_DIFFERENCE_STEP: f64 = 1e-7;

/// Closed interval with possibly infinite ends; serialized as `[lo, hi]` with
/// `null` for an unbounded end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Domain(format!("invalid domain [{lo}, {hi}]")));
        }
        Ok(Domain { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    fn check_window(&self) -> (f64, f64) {
        (self.lo.max(-CHECK_SPAN), self.hi.min(CHECK_SPAN))
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let end = |v: f64| if v.is_finite() { Some(v) } else { None };
        [end(self.lo), end(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[Option<f64>; 2]>::deserialize(d)?;
        Domain::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
            .map_err(serde::de::Error::custom)
    }
}

/// A forward map supplied as a closure.
#[derive(Clone)]
pub struct ForwardFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for ForwardFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ForwardFn(..)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TransformKind {
    Identity,
    /// `T(z) = z + z³/(4N)`.
    CorrelationCubic { n_eff: f64 },
    /// `T(z) = h + √(h² + z/b)` with `h = (a−1)/(2b)`; inverse `z = b·x² − (a−1)·x`.
    HotellingSqrt { a: f64, b_coef: f64 },
    /// Arbitrary increasing forward map on a bounded domain, inverted numerically.
    #[serde(skip)]
    NumericInverse { forward: ForwardFn },
}

/// Upper bound on `|b′|` over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBound {
    pub value: f64,
    /// The maximum came from a finite grid rather than an exact rule.
    pub grid_based: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneTransform {
    #[serde(flatten)]
    pub kind: TransformKind,
    pub domain: Domain,
}

impl MonotoneTransform {
    /// Builds a transform and checks monotonicity and the round trip on a grid.
    pub fn new(kind: TransformKind, domain: Domain) -> Result<Self> {
        match &kind {
            TransformKind::CorrelationCubic { n_eff } if !(*n_eff > 0.0 && n_eff.is_finite()) => {
                return Err(Error::Domain(format!("N must be positive, got {n_eff}")));
            }
            TransformKind::HotellingSqrt { a, b_coef } => {
                if *b_coef == 0.0 || !b_coef.is_finite() || !a.is_finite() {
                    return Err(Error::Domain(format!(
                        "square-root correction needs finite a and b_coef ≠ 0, got a={a}, b={b_coef}"
                    )));
                }
            }
            TransformKind::NumericInverse { .. } if !domain.is_bounded() => {
                return Err(Error::Domain(
                    "numerically inverted transforms need a bounded domain".into(),
                ));
            }
            _ => {}
        }
        let t = MonotoneTransform { kind, domain };
        let (lo, hi) = t.domain.check_window();
        t.check_on(lo, hi)?;
        Ok(t)
    }

    pub fn identity() -> Self {
        MonotoneTransform {
            kind: TransformKind::Identity,
            domain: Domain::REAL_LINE,
        }
    }

    pub fn correlation_cubic(n_eff: f64) -> Result<Self> {
        MonotoneTransform::new(TransformKind::CorrelationCubic { n_eff }, Domain::REAL_LINE)
    }

    /// Square-root correction on the support `[0, ∞)` of a nonnegative statistic.
    pub fn hotelling_sqrt(a: f64, b_coef: f64) -> Result<Self> {
        MonotoneTransform::new(
            TransformKind::HotellingSqrt { a, b_coef },
            Domain {
                lo: 0.0,
                hi: f64::INFINITY,
            },
        )
    }

    pub fn numeric(forward: impl Fn(f64) -> f64 + Send + Sync + 'static, domain: Domain) -> Result<Self> {
        MonotoneTransform::new(
            TransformKind::NumericInverse {
                forward: ForwardFn(Arc::new(forward)),
            },
            domain,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: MonotoneTransform = serde_json::from_str(text)?;
        MonotoneTransform::new(t.kind, t.domain)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Image of the domain under `T`.
    pub fn image(&self) -> Domain {
        let map = |z: f64| {
            if z.is_finite() {
                self.forward_unchecked(z)
            } else {
                z
            }
        };
        Domain {
            lo: map(self.domain.lo),
            hi: map(self.domain.hi),
        }
    }

    /// `T(z)`.
    pub fn forward(&self, z: f64) -> Result<f64> {
        if !self.domain.contains(z) {
            return Err(Error::TransformDomain(format!(
                "z = {z} outside the domain [{}, {}]",
                self.domain.lo, self.domain.hi
            )));
        }
        let x = self.forward_unchecked(z);
        if x.is_nan() {
            return Err(Error::TransformDomain(format!("T({z}) is undefined")));
        }
        Ok(x)
    }

    fn forward_unchecked(&self, z: f64) -> f64 {
        match &self.kind {
            TransformKind::Identity => z,
            TransformKind::CorrelationCubic { n_eff } => z + z * z * z / (4.0 * n_eff),
            TransformKind::HotellingSqrt { a, b_coef } => {
                let h = (a - 1.0) / (2.0 * b_coef);
                let root = (h * h + z / b_coef).sqrt();
                if h < 0.0 {
                    // h + root with the cancellation removed
                    (z / b_coef) / (root - h)
                } else {
                    h + root
                }
            }
            TransformKind::NumericInverse { forward } => (forward.0)(z),
        }
    }

    /// `T′(z)`.
    pub fn forward_derivative(&self, z: f64) -> Result<f64> {
        if !self.domain.contains(z) {
            return Err(Error::TransformDomain(format!("z = {z} outside the domain")));
        }
        Ok(match &self.kind {
            TransformKind::Identity => 1.0,
            TransformKind::CorrelationCubic { n_eff } => 1.0 + 3.0 * z * z / (4.0 * n_eff),
            TransformKind::HotellingSqrt { a, b_coef } => {
                let h = (a - 1.0) / (2.0 * b_coef);
                1.0 / (2.0 * b_coef * (h * h + z / b_coef).sqrt())
            }
            TransformKind::NumericInverse { forward } => {
                let step = FINITE_DIFFERENCE_STEP;
                let lo = (z - step).max(self.domain.lo);
                let hi = (z + step).min(self.domain.hi);
                ((forward.0)(hi) - (forward.0)(lo)) / (hi - lo)
            }
        })
    }

    fn check_image(&self, x: f64) -> Result<()> {
        let image = self.image();
        if !image.contains(x) {
            return Err(Error::TransformDomain(format!(
                "x = {x} outside the image [{}, {}]",
                image.lo, image.hi
            )));
        }
        Ok(())
    }

    /// `b(x) = T⁻¹(x)`.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        self.check_image(x)?;
        Ok(match &self.kind {
            TransformKind::Identity => x,
            TransformKind::CorrelationCubic { n_eff } => cubic_inverse(*n_eff, x),
            TransformKind::HotellingSqrt { a, b_coef } => b_coef * x * x - (a - 1.0) * x,
            TransformKind::NumericInverse { forward } => self.numeric_inverse(&*forward.0, x)?,
        })
    }

    fn numeric_inverse(&self, forward: &(dyn Fn(f64) -> f64 + Send + Sync), x: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.domain.lo, self.domain.hi);
        let mut z = 0.5 * (lo + hi);
        for _ in 0..400 {
            let f = forward(z) - x;
            if f == 0.0 {
                return Ok(z);
            }
            if f < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            let slope = self.forward_derivative(z)?;
            let mut next = z - f / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() <= NUMERIC_INVERSE_TOLERANCE * z.abs().max(1.0) || hi - lo <= f64::EPSILON * z.abs().max(1.0) {
                return Ok(next);
            }
            z = next;
        }
        Err(Error::Numerical(format!("numeric inverse did not converge at x = {x}")))
    }

    /// `b′(x) = 1 / T′(b(x))`.
    pub fn inverse_derivative(&self, x: f64) -> Result<f64> {
        self.check_image(x)?;
        let d = match &self.kind {
            TransformKind::Identity => 1.0,
            TransformKind::CorrelationCubic { n_eff } => {
                let b = cubic_inverse(*n_eff, x);
                1.0 / (1.0 + 3.0 * b * b / (4.0 * n_eff))
            }
            TransformKind::HotellingSqrt { a, b_coef } => 2.0 * b_coef * x - (a - 1.0),
            TransformKind::NumericInverse { .. } => {
                let b = self.inverse(x)?;
                1.0 / self.forward_derivative(b)?
            }
        };
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::TransformDomain(format!(
                "inverse derivative at x = {x} is {d}, not positive"
            )));
        }
        Ok(d)
    }

    /// `max_{x∈[lo,hi]} |b′(x)|`.
    ///
    /// Exact for the closed-form kinds: the cubic's `b′` decreases in `|x|`, the
    /// square-root correction's `b′` is affine, the identity's is 1. Numeric
    /// transforms use a grid including both endpoints and report it.
    pub fn max_abs_inverse_derivative(&self, lo: f64, hi: f64) -> Result<DerivativeBound> {
        if !(lo <= hi) {
            return Err(Error::TransformDomain(format!("empty interval [{lo}, {hi}]")));
        }
        self.check_image(lo)?;
        self.check_image(hi)?;
        match &self.kind {
            TransformKind::Identity => Ok(DerivativeBound {
                value: 1.0,
                grid_based: false,
            }),
            TransformKind::CorrelationCubic { .. } => {
                let nearest = 0f64.clamp(lo, hi);
                Ok(DerivativeBound {
                    value: self.inverse_derivative(nearest)?,
                    grid_based: false,
                })
            }
            TransformKind::HotellingSqrt { .. } => {
                let value = self
                    .inverse_derivative(lo)?
                    .abs()
                    .max(self.inverse_derivative(hi)?.abs());
                Ok(DerivativeBound {
                    value,
                    grid_based: false,
                })
            }
            TransformKind::NumericInverse { .. } => {
                let mut value: f64 = 0.0;
                for i in 0..DERIVATIVE_GRID_POINTS {
                    let t = i as f64 / (DERIVATIVE_GRID_POINTS - 1) as f64;
                    let x = if i == DERIVATIVE_GRID_POINTS - 1 { hi } else { lo + t * (hi - lo) };
                    value = value.max(self.inverse_derivative(x)?.abs());
                }
                Ok(DerivativeBound {
                    value,
                    grid_based: true,
                })
            }
        }
    }

    /// Coefficients `(1, −1/(4N), 3/(16N²))` of `b(z) = z − z³/(4N) + 3z⁵/(16N²) + O(N⁻³)`.
    pub fn inverse_series_coeffs(&self) -> Result<(f64, f64, f64)> {
        match &self.kind {
            TransformKind::CorrelationCubic { n_eff } => {
                Ok((1.0, -1.0 / (4.0 * n_eff), 3.0 / (16.0 * n_eff * n_eff)))
            }
            other => Err(Error::Kind(format!(
                "inverse series is only defined for the cubic correction, not {}",
                kind_name(other)
            ))),
        }
    }

    /// Checks strict monotonicity of `T` and `|b(T(z)) − z| ≤ 1e−10·max(1, |z|)`
    /// on a 1 024-point grid over `[lo, hi]`.
    pub fn check_on(&self, lo: f64, hi: f64) -> Result<()> {
        let mut prev: Option<f64> = None;
        for i in 0..CHECK_POINTS {
            let z = lo + (hi - lo) * i as f64 / (CHECK_POINTS - 1) as f64;
            let x = self
                .forward(z)
                .map_err(|e| Error::Monotonicity(format!("forward map fails at z = {z}: {e}")))?;
            if let Some(p) = prev {
                if !(x > p) {
                    return Err(Error::Monotonicity(format!(
                        "T is not strictly increasing near z = {z} ({p} then {x})"
                    )));
                }
            }
            prev = Some(x);
            let back = self
                .inverse(x)
                .map_err(|e| Error::Monotonicity(format!("inverse fails at x = {x}: {e}")))?;
            if (back - z).abs() > ROUND_TRIP_TOLERANCE * z.abs().max(1.0) {
                return Err(Error::Monotonicity(format!(
                    "round trip b(T(z)) = {back} differs from z = {z}"
                )));
            }
        }
        Ok(())
    }
}

fn kind_name(kind: &TransformKind) -> &'static str {
    match kind {
        TransformKind::Identity => "Identity",
        TransformKind::CorrelationCubic { .. } => "CorrelationCubic",
        TransformKind::HotellingSqrt { .. } => "HotellingSqrt",
        TransformKind::NumericInverse { .. } => "NumericInverse",
    }
}

/// Real root of `b + b³/(4N) = x` (Cardano).
///
/// With `s = 2Nx`, `c = √(s² + (4N/3)³)`, `A = (s + c)^{1/3}` and
/// `B = (c − s)^{1/3} = (4N/3)/A`, the root is `A − B = 2s/(A² + AB + B²)`;
/// the last form has no cancellation for `x ≥ 0`, and negative `x` uses
/// oddness. One Newton step on the cubic polishes the last bits.
fn cubic_inverse(n_eff: f64, x: f64) -> f64 {
    if x < 0.0 {
        return -cubic_inverse(n_eff, -x);
    }
    if x == 0.0 {
        return 0.0;
    }
    let k = 4.0 * n_eff / 3.0;
    let s = 2.0 * n_eff * x;
    let c = s.hypot(k * k.sqrt());
    let a = (s + c).cbrt();
    let b = k / a;
    let root = 2.0 * s / (a * a + k + b * b);
    let f = root + root * root * root / (4.0 * n_eff) - x;
    root - f / (1.0 + 3.0 * root * root / (4.0 * n_eff))
}

/// Coefficient choice for the square-root correction of `T₀²`.
///
/// Several readings of the coefficients are plausible; all are kept so that
/// the rate experiment can compare them. [`HotellingForm::Matched`]
/// is the accepted one: its inverse `b(x) = x − a(x)/n` cancels the `1/n`
/// term of the chi-squared mixture expansion exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HotellingForm {
    /// `a = (q−p−1)/(2n)`, `b = (q+p+1)/(2n(pq+2))`.
    Matched,
    /// `a = p(q−p−1)/(2n)`, `b = p(q+p+1)/(2n(q+2))`.
    ScaledByP,
    /// `a = p(q−p−1)/(2n)`, `b = p(q+p+1)(q+2)/(2n) − 1`.
    ShiftedMinusOne,
    /// `a = p(q−p−1)/(2n)`, `b = 1/(2n·p(q+p+1)(q+2))`.
    Reciprocal,
}

impl HotellingForm {
    pub const ALL: [HotellingForm; 4] = [
        HotellingForm::Matched,
        HotellingForm::ScaledByP,
        HotellingForm::ShiftedMinusOne,
        HotellingForm::Reciprocal,
    ];

    /// `(a, b_coef)`.
    pub fn coefficients(self, p: u32, q: u32, n: u32) -> (f64, f64) {
        let (p, q, n) = (p as f64, q as f64, n as f64);
        let scaled_a = p * (q - p - 1.0) / (2.0 * n);
        match self {
            HotellingForm::Matched => (
                (q - p - 1.0) / (2.0 * n),
                (q + p + 1.0) / (2.0 * n * (p * q + 2.0)),
            ),
            HotellingForm::ScaledByP => (scaled_a, p * (q + p + 1.0) / (2.0 * n * (q + 2.0))),
            HotellingForm::ShiftedMinusOne => {
                (scaled_a, p * (q + p + 1.0) * (q + 2.0) / (2.0 * n) - 1.0)
            }
            HotellingForm::Reciprocal => (scaled_a, 1.0 / (2.0 * n * p * (q + p + 1.0) * (q + 2.0))),
        }
    }
}

impl fmt::Display for HotellingForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HotellingForm::Matched => "matched",
            HotellingForm::ScaledByP => "scaled-by-p",
            HotellingForm::ShiftedMinusOne => "shifted-minus-one",
            HotellingForm::Reciprocal => "reciprocal",
        };
        f.write_str(s)
    }
}

/// Square-root correction for `T₀²` with the accepted coefficients, checked on
/// `[G_r⁻¹(0.001), G_r⁻¹(0.999)]`.
pub fn build_hotelling_transform(p: u32, q: u32, n: u32) -> Result<MonotoneTransform> {
    build_hotelling_transform_with(p, q, n, HotellingForm::Matched)
}

pub fn build_hotelling_transform_with(
    p: u32,
    q: u32,
    n: u32,
    form: HotellingForm,
) -> Result<MonotoneTransform> {
    check_hotelling_dims(p, q, n)?;
    let (a, b_coef) = form.coefficients(p, q, n);
    let t = MonotoneTransform::hotelling_sqrt(a, b_coef)?;
    let g = LimitDistribution::ChiSquared { dof: p * q };
    t.check_on(g.quantile(0.001)?, g.quantile(0.999)?)?;
    Ok(t)
}
