//! Edgeworth–Chebyshev type expansions of a statistic's distribution function.
//!
//! A model describes `Pr{U ≤ x} = G(x) + ε·a(x)·g(x) + R(x)` with a computable
//! remainder bound `|R(x)| ≤ c·εᵏ`. The first-order term is stored either
//! directly as a polynomial `a(x)` multiplying the limit density, or as a
//! zero-sum mixture of chi-squared distribution functions, which is the form
//! in which many multivariate test statistics are expanded.

use serde::{Deserialize, Serialize};

use crate::distributions::LimitDistribution;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Largest polynomial degree accepted for a first-order correction.
pub const MAX_CORRECTION_DEGREE: usize = 8;

/// Mixture weights must cancel to within this many multiples of `Σ|aⱼ|`.
const MIXTURE_SUM_TOLERANCE: f64 = 1e-15;

/// Remainder constant for the null distribution of the normalized sample
/// correlation coefficient, valid for `n ≥ 7`.
pub const CORRELATION_REMAINDER_BOUND: f64 = 2.2;

/// Smallest sample size for which [`CORRELATION_REMAINDER_BOUND`] holds.
pub const CORRELATION_MIN_N: u32 = 7;

/// `scale · Σⱼ aⱼ G_{q+2j}(x)` with `Σⱼ aⱼ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredMixture {
    pub base_dof: u32,
    pub mix_coeffs: Vec<f64>,
    pub scale: f64,
}

impl ChiSquaredMixture {
    pub fn new(base_dof: u32, mix_coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        let m = ChiSquaredMixture {
            base_dof,
            mix_coeffs,
            scale,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_dof == 0 {
            return Err(Error::Domain("mixture base_dof must be at least 1".into()));
        }
        if !self.scale.is_finite() || self.mix_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("mixture coefficients must be finite".into()));
        }
        if self.mix_coeffs.len() > MAX_CORRECTION_DEGREE + 1 {
            return Err(Error::Constraint(format!(
                "mixture with {} terms exceeds the maximum correction degree {}",
                self.mix_coeffs.len(),
                MAX_CORRECTION_DEGREE
            )));
        }
        self.check_zero_sum()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.mix_coeffs.iter().sum()
    }

    fn check_zero_sum(&self) -> Result<()> {
        let sum = self.coefficient_sum();
        let magnitude: f64 = self.mix_coeffs.iter().map(|c| c.abs()).sum();
        if sum.abs() > MIXTURE_SUM_TOLERANCE * magnitude.max(1.0) {
            return Err(Error::Constraint(format!(
                "mixture coefficients sum to {sum:e}, not 0; the G_q terms would not cancel"
            )));
        }
        Ok(())
    }

    /// `scale · Σⱼ aⱼ G_{q+2j}(x)`, evaluated term by term.
    pub fn eval(&self, x: f64) -> f64 {
        let sum: f64 = self
            .mix_coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let g = LimitDistribution::ChiSquared {
                    dof: self.base_dof + 2 * j as u32,
                };
                a * g.cdf(x)
            })
            .sum();
        self.scale * sum
    }

    /// Rewrites the mixture as `g_q(x)·a(x)`.
    ///
    /// With `G_{q+2j} = G_q − 2Σ_{i=1}^{j} g_{q+2i}` and
    /// `g_{q+2i}(x) = g_q(x)·xⁱ / (q(q+2)⋯(q+2i−2))`, the `G_q` terms cancel
    /// because the weights sum to zero, leaving
    /// `a(x) = −2·scale·Σ_{i≥1} (Σ_{j≥i} aⱼ) xⁱ / (q(q+2)⋯(q+2i−2))`.
    pub fn to_density_factor(&self) -> Result<Polynomial> {
        self.check_zero_sum()?;
        let k = self.mix_coeffs.len();
        if k <= 1 {
            return Ok(Polynomial::zero());
        }
        let q = self.base_dof as f64;
        let mut coeffs = vec![0.0; k];
        let mut rising = 1.0;
        for i in 1..k {
            rising *= q + 2.0 * (i as f64 - 1.0);
            let tail: f64 = self.mix_coeffs[i..].iter().sum();
            coeffs[i] = -2.0 * self.scale * tail / rising;
        }
        Ok(Polynomial::new(coeffs))
    }
}

/// Free-function form of [`ChiSquaredMixture::to_density_factor`].
pub fn mixture_to_density_factor(mixture: &ChiSquaredMixture) -> Result<Polynomial> {
    mixture.to_density_factor()
}

/// First-order correction term of an expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form")]
pub enum CorrectionForm {
    /// `ε·a(x)·g(x)` with `a` given by its coefficients.
    DensityFactor { poly: Polynomial },
    /// `ε·scale·Σⱼ aⱼ G_{q+2j}(x)`.
    ChiSquaredMixture(ChiSquaredMixture),
}

/// A statistic's approximate distribution function with a uniform remainder bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthModel {
    pub label: String,
    pub base: LimitDistribution,
    pub eps: f64,
    pub eps_order: u8,
    pub remainder_const: f64,
    pub correction: Option<CorrectionForm>,
}

impl EdgeworthModel {
    pub fn new(
        label: impl Into<String>,
        base: LimitDistribution,
        eps: f64,
        eps_order: u8,
        remainder_const: f64,
        correction: Option<CorrectionForm>,
    ) -> Result<Self> {
        let model = EdgeworthModel {
            label: label.into(),
            base,
            eps,
            eps_order,
            remainder_const,
            correction,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be positive, got {}", self.eps)));
        }
        if !matches!(self.eps_order, 1 | 2) {
            return Err(Error::Domain(format!(
                "eps_order must be 1 or 2, got {}",
                self.eps_order
            )));
        }
        if !(self.remainder_const >= 0.0 && self.remainder_const.is_finite()) {
            return Err(Error::Domain(format!(
                "remainder_const must be finite and nonnegative, got {}",
                self.remainder_const
            )));
        }
        match &self.correction {
            None => {}
            Some(CorrectionForm::DensityFactor { poly }) => {
                if poly.coeffs().iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain("correction polynomial must be finite".into()));
                }
                if poly.degree() > MAX_CORRECTION_DEGREE {
                    return Err(Error::Constraint(format!(
                        "correction polynomial degree {} exceeds {}",
                        poly.degree(),
                        MAX_CORRECTION_DEGREE
                    )));
                }
            }
            Some(CorrectionForm::ChiSquaredMixture(m)) => {
                m.validate()?;
                if self.base != (LimitDistribution::ChiSquared { dof: m.base_dof }) {
                    return Err(Error::Constraint(format!(
                        "mixture on chi2({}) requires base chi2({}), model base is {}",
                        m.base_dof, m.base_dof, self.base
                    )));
                }
            }
        }
        Ok(())
    }

    /// `d = c·εᵏ`, the uniform bound on the remainder.
    pub fn remainder_bound(&self) -> f64 {
        self.remainder_const * self.eps.powi(self.eps_order as i32)
    }

    /// The first-order term alone: `approx_cdf(x) − G(x)`.
    pub fn correction_term(&self, x: f64) -> f64 {
        match &self.correction {
            None => 0.0,
            Some(CorrectionForm::DensityFactor { poly }) => {
                self.eps * poly.eval(x) * self.base.density(x)
            }
            Some(CorrectionForm::ChiSquaredMixture(m)) => self.eps * m.eval(x),
        }
    }

    /// The expansion `G(x) + ε·(first-order term)`, deliberately not clamped to `[0, 1]`.
    pub fn approx_cdf(&self, x: f64) -> f64 {
        self.base.cdf(x) + self.correction_term(x)
    }

    /// `a(x)` in the density-factor form, converting a mixture if needed.
    /// `None` when the model carries no correction.
    pub fn density_factor(&self) -> Result<Option<Polynomial>> {
        match &self.correction {
            None => Ok(None),
            Some(CorrectionForm::DensityFactor { poly }) => Ok(Some(poly.clone())),
            Some(CorrectionForm::ChiSquaredMixture(m)) => m.to_density_factor().map(Some),
        }
    }

    /// Same model with a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut m = self.clone();
        m.eps = eps;
        m.validate()?;
        Ok(m)
    }

    /// Folds the first-order term into the remainder, giving a model of the
    /// form `F = G + R₁` with `|R₁| ≤ c₁·ε`, where
    /// `c₁ = sup|a·g| + c·ε^{k−1}`.
    pub fn absorb_correction(&self) -> Result<Self> {
        let sup = match self.density_factor()? {
            None => 0.0,
            Some(poly) => sup_abs_density_product(&self.base, &poly)?,
        };
        let c1 = sup + self.remainder_const * self.eps.powi(self.eps_order as i32 - 1);
        EdgeworthModel::new(
            format!("{} [first order]", self.label),
            self.base,
            self.eps,
            1,
            c1,
            None,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: EdgeworthModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Slack applied to the refined maximum of `|a·g|`.
const SUP_INFLATION: f64 = 1.0 + 1e-9;

/// `sup_x |a(x)·g(x)|` by a dense grid over the effective support followed by
/// golden-section refinement of the best cell.
fn sup_abs_density_product(base: &LimitDistribution, poly: &Polynomial) -> Result<f64> {
    if poly.is_zero() {
        return Ok(0.0);
    }
    let lo = base.quantile(1e-15)?;
    let hi = base.quantile(1.0 - 1e-15)?;
    let (lo, hi) = match base {
        LimitDistribution::StdNormal => (1.5 * lo, 1.5 * hi),
        LimitDistribution::ChiSquared { .. } => (0.0, 1.5 * hi + 50.0),
    };
    let f = |x: f64| (poly.eval(x) * base.density(x)).abs();
    const POINTS: usize = 16_384;
    let step = (hi - lo) / POINTS as f64;
    let (best_i, best) = (0..=POINTS)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_max(f, a, b);
    Ok(best.max(refined) * SUP_INFLATION)
}

pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(a)).max(f(b))
}

/// Hotelling's generalized `T₀² = n·tr(S_h S_e⁻¹)` with `S_h ~ W_p(q, I)` and
/// `S_e ~ W_p(n, I)`:
/// `Pr{T₀² ≤ x} ≈ G_r(x) + (r/4n){(q−p−1)G_r − 2qG_{r+2} + (q+p+1)G_{r+4}}`, `r = pq`.
///
/// `c_pq` bounds the remainder as `c_pq/n²`; it has no default.
pub fn build_hotelling_t0sq_model(p: u32, q: u32, n: u32, c_pq: f64) -> Result<EdgeworthModel> {
    check_hotelling_dims(p, q, n)?;
    if !(c_pq > 0.0 && c_pq.is_finite()) {
        return Err(Error::Domain(format!(
            "remainder constant c_pq must be positive, got {c_pq}"
        )));
    }
    let r = p * q;
    let (pf, qf) = (p as f64, q as f64);
    let mixture = ChiSquaredMixture::new(
        r,
        vec![qf - pf - 1.0, -2.0 * qf, qf + pf + 1.0],
        r as f64 / 4.0,
    )?;
    EdgeworthModel::new(
        format!("hotelling_t0sq(p={p},q={q},n={n})"),
        LimitDistribution::ChiSquared { dof: r },
        1.0 / n as f64,
        2,
        c_pq,
        Some(CorrectionForm::ChiSquaredMixture(mixture)),
    )
}

/// Model for `Pr{T(T₀²) ≤ x} = G_r(x) + R̃₂` after the Bartlett-type correction,
/// with `|R̃₂| ≤ c_tilde/n²`.
pub fn build_hotelling_transformed_model(
    p: u32,
    q: u32,
    n: u32,
    c_tilde: f64,
) -> Result<EdgeworthModel> {
    check_hotelling_dims(p, q, n)?;
    EdgeworthModel::new(
        format!("hotelling_t0sq_transformed(p={p},q={q},n={n})"),
        LimitDistribution::ChiSquared { dof: p * q },
        1.0 / n as f64,
        2,
        c_tilde,
        None,
    )
}

pub(crate) fn check_hotelling_dims(p: u32, q: u32, n: u32) -> Result<()> {
    if p < 1 || q < 1 {
        return Err(Error::Domain(format!(
            "p ≥ 1 and q ≥ 1 required, got p={p}, q={q}"
        )));
    }
    if n < p {
        return Err(Error::Domain(format!("n ≥ p required, got n={n}, p={p}")));
    }
    Ok(())
}

/// `N = n − 2.5` for the normalized correlation statistic `√N·R`.
pub fn correlation_effective_n(n: u32) -> f64 {
    n as f64 - 2.5
}

/// `Pr{√N R ≤ x} = Φ(x) + x³φ(x)/(4N) + R₂` with `|R₂| ≤ 2.2/N²`, `N = n − 2.5`, `n ≥ 7`.
pub fn build_correlation_model(n: u32) -> Result<EdgeworthModel> {
    check_correlation_n(n)?;
    EdgeworthModel::new(
        format!("correlation(n={n})"),
        LimitDistribution::StdNormal,
        1.0 / correlation_effective_n(n),
        2,
        CORRELATION_REMAINDER_BOUND,
        Some(CorrectionForm::DensityFactor {
            poly: Polynomial::monomial(0.25, 3),
        }),
    )
}

/// `Pr{T(√N R) ≤ x} = Φ(x) + R̃₂` with `|R̃₂| ≤ c_tilde/N²` for the cubic correction
/// `T(z) = z + z³/(4N)`.
pub fn build_correlation_transformed_model(n: u32, c_tilde: f64) -> Result<EdgeworthModel> {
    check_correlation_n(n)?;
    EdgeworthModel::new(
        format!("correlation_transformed(n={n})"),
        LimitDistribution::StdNormal,
        1.0 / correlation_effective_n(n),
        2,
        c_tilde,
        None,
    )
}

fn check_correlation_n(n: u32) -> Result<()> {
    if n < CORRELATION_MIN_N {
        return Err(Error::Domain(format!(
            "n ≥ {CORRELATION_MIN_N} required for the correlation expansion, got n={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn correlation_model_examples() {
        let m = build_correlation_model(7).unwrap();
        assert_eq!(m.eps, 1.0 / 4.5);
        assert!((m.remainder_bound() - 0.108_642_0).abs() < 1e-7);
        assert!((m.remainder_bound() - 2.2 / 20.25).abs() < 1e-16);

        let m = build_correlation_model(50).unwrap();
        assert_eq!(m.eps, 1.0 / 47.5);
        assert_eq!(m.approx_cdf(0.0), 0.5);

        let err = build_correlation_model(6).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("n ≥ 7 required")));
    }

    #[test]
    fn correlation_correction_is_cubic_times_density() {
        let m = build_correlation_model(20).unwrap();
        let n_eff = 17.5;
        for &x in &[-2.0, -0.3, 0.7, 1.9, 3.5] {
            let phi = LimitDistribution::StdNormal.density(x);
            let expected = LimitDistribution::StdNormal.cdf(x) + x.powi(3) * phi / (4.0 * n_eff);
            assert!((m.approx_cdf(x) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn hotelling_model_examples() {
        let m = build_hotelling_t0sq_model(2, 3, 40, 1.0).unwrap();
        assert_eq!(m.base, LimitDistribution::ChiSquared { dof: 6 });
        let Some(CorrectionForm::ChiSquaredMixture(mix)) = &m.correction else {
            panic!("expected a mixture correction");
        };
        assert_eq!(mix.mix_coeffs, vec![0.0, -6.0, 6.0]);
        assert_eq!(mix.scale, 1.5);
        assert_eq!(mix.coefficient_sum(), 0.0);

        let m = build_hotelling_t0sq_model(1, 1, 1, 1.0).unwrap();
        let Some(CorrectionForm::ChiSquaredMixture(mix)) = &m.correction else {
            panic!("expected a mixture correction");
        };
        assert_eq!(m.base, LimitDistribution::ChiSquared { dof: 1 });
        assert_eq!(mix.mix_coeffs, vec![-1.0, -2.0, 3.0]);
    }

    #[test]
    fn hotelling_preconditions() {
        assert!(matches!(build_hotelling_t0sq_model(3, 2, 2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(build_hotelling_t0sq_model(0, 2, 2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(build_hotelling_t0sq_model(1, 0, 2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(build_hotelling_t0sq_model(2, 3, 40, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hotelling_approx_cdf_matches_term_by_term_mixture() {
        let m = build_hotelling_t0sq_model(2, 3, 40, 1.0).unwrap();
        let x = 12.5;
        let g = |dof| LimitDistribution::ChiSquared { dof }.cdf(x);
        let expected = g(6) + (6.0 / (4.0 * 40.0)) * (0.0 * g(6) - 6.0 * g(8) + 6.0 * g(10));
        assert!((m.approx_cdf(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn mixture_to_density_factor_examples() {
        let m = ChiSquaredMixture::new(4, vec![1.0, -1.0], 1.0).unwrap();
        let a = m.to_density_factor().unwrap();
        assert_eq!(a.coeffs(), &[0.0, 0.5]);

        let m = ChiSquaredMixture {
            base_dof: 5,
            mix_coeffs: vec![0.0, 0.0, 0.0],
            scale: 3.0,
        };
        assert!(m.to_density_factor().unwrap().is_zero());

        let bad = ChiSquaredMixture {
            base_dof: 4,
            mix_coeffs: vec![1.0, -0.5],
            scale: 1.0,
        };
        assert!(matches!(bad.to_density_factor(), Err(Error::Constraint(_))));
        assert!(matches!(
            ChiSquaredMixture::new(4, vec![1.0, -0.5], 1.0),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn hotelling_density_factor_cross_evaluation() {
        for n in [7u32, 40, 1000] {
            let m = build_hotelling_t0sq_model(2, 3, n, 1.0).unwrap();
            let Some(CorrectionForm::ChiSquaredMixture(mix)) = &m.correction else {
                unreachable!()
            };
            let a = mix.to_density_factor().unwrap();
            let g6 = LimitDistribution::ChiSquared { dof: 6 };
            for x in [1.0, 5.0, 10.0, 20.0] {
                let lhs = mix.eval(x);
                let rhs = g6.density(x) * a.eval(x);
                assert!((lhs - rhs).abs() <= 1e-12, "n={n} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn mixture_base_must_match_model_base() {
        let mix = ChiSquaredMixture::new(4, vec![1.0, -1.0], 1.0).unwrap();
        let r = EdgeworthModel::new(
            "x",
            LimitDistribution::ChiSquared { dof: 6 },
            0.1,
            2,
            1.0,
            Some(CorrectionForm::ChiSquaredMixture(mix)),
        );
        assert!(matches!(r, Err(Error::Constraint(_))));
    }

    #[test]
    fn model_validation() {
        let base = LimitDistribution::StdNormal;
        assert!(EdgeworthModel::new("m", base, 0.0, 1, 1.0, None).is_err());
        assert!(EdgeworthModel::new("m", base, 0.1, 3, 1.0, None).is_err());
        assert!(EdgeworthModel::new("m", base, 0.1, 1, -1.0, None).is_err());
        assert!(EdgeworthModel::new("m", base, 0.1, 1, 0.0, None).is_ok());
        let deg9 = CorrectionForm::DensityFactor {
            poly: Polynomial::monomial(1.0, 9),
        };
        assert!(matches!(
            EdgeworthModel::new("m", base, 0.1, 1, 1.0, Some(deg9)),
            Err(Error::Constraint(_))
        ));
        assert!(EdgeworthModel::new("m", LimitDistribution::ChiSquared { dof: 0 }, 0.1, 1, 1.0, None)
            .is_err());
    }

    #[test]
    fn no_correction_is_the_limit_cdf() {
        let m = EdgeworthModel::new("plain", LimitDistribution::ChiSquared { dof: 3 }, 0.05, 2, 1.0, None)
            .unwrap();
        for x in [0.1, 1.0, 4.0, 11.0] {
            assert_eq!(m.approx_cdf(x), m.base.cdf(x));
        }
    }

    #[test]
    fn approx_cdf_is_not_clamped() {
        // large ε pushes the raw expansion above one somewhere
        let m = EdgeworthModel::new(
            "big",
            LimitDistribution::StdNormal,
            2.0,
            1,
            0.1,
            Some(CorrectionForm::DensityFactor {
                poly: Polynomial::monomial(1.0, 1),
            }),
        )
        .unwrap();
        assert!(m.approx_cdf(1.5) > 1.0);
    }

    #[test]
    fn json_schema_field_names() {
        let m = build_hotelling_t0sq_model(2, 3, 40, 1.25).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        for key in ["label", "base", "eps", "eps_order", "remainder_const", "correction"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["base"]["kind"], "ChiSquared");
        assert_eq!(v["base"]["dof"], 6);
        assert_eq!(v["correction"]["form"], "ChiSquaredMixture");
        assert_eq!(v["correction"]["base_dof"], 6);

        let c = build_correlation_model(50).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(v["base"]["kind"], "StdNormal");
        assert_eq!(v["correction"]["form"], "DensityFactor");
        assert_eq!(v["correction"]["poly"], serde_json::json!([0.0, 0.0, 0.0, 0.25]));

        let back = EdgeworthModel::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn from_json_validates() {
        let text = r#"{"label":"bad","base":{"kind":"ChiSquared","dof":4},"eps":0.1,
            "eps_order":2,"remainder_const":1.0,
            "correction":{"form":"ChiSquaredMixture","base_dof":4,"mix_coeffs":[1.0,-0.5],"scale":1.0}}"#;
        assert!(matches!(EdgeworthModel::from_json(text), Err(Error::Constraint(_))));
        let text = r#"{"label":"none","base":{"kind":"StdNormal"},"eps":0.1,
            "eps_order":1,"remainder_const":0.5,"correction":null}"#;
        let m = EdgeworthModel::from_json(text).unwrap();
        assert!(m.correction.is_none());
        assert!(EdgeworthModel::from_json("{").is_err());
    }

    #[test]
    fn absorb_correction_of_correlation_model() {
        // sup |x³φ(x)/4| is attained at x = √3
        let m = build_correlation_model(50).unwrap();
        let first = m.absorb_correction().unwrap();
        let s3 = 3f64.sqrt();
        let sup = s3.powi(3) * LimitDistribution::StdNormal.density(s3) / 4.0;
        let expected = sup + 2.2 / 47.5;
        assert_eq!(first.eps_order, 1);
        assert!(first.correction.is_none());
        assert!(first.remainder_const >= expected);
        assert!((first.remainder_const - expected).abs() < 1e-8);
    }

    #[test]
    fn mixture_telescopes_in_the_far_tail() {
        for (p, q, n) in [(1, 1, 5), (2, 3, 40), (3, 5, 12), (4, 2, 9)] {
            let m = build_hotelling_t0sq_model(p, q, n, 1.0).unwrap();
            let x = m.base.quantile(1.0 - 1e-10).unwrap() + 50.0;
            assert!((m.approx_cdf(x) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn correction_scales_linearly_in_eps() {
        let m = build_hotelling_t0sq_model(2, 3, 40, 1.0).unwrap();
        let half = m.with_eps(m.eps / 2.0).unwrap();
        for i in 1..200 {
            let x = 0.15 * i as f64;
            let full = m.approx_cdf(x) - m.base.cdf(x);
            let halved = half.approx_cdf(x) - half.base.cdf(x);
            assert!((full - 2.0 * halved).abs() <= 1e-14, "x={x}");
        }
    }

    proptest! {
        #[test]
        fn hotelling_weights_cancel(p in 1u32..40, q in 1u32..40) {
            let (pf, qf) = (p as f64, q as f64);
            prop_assert_eq!((qf - pf - 1.0) - 2.0 * qf + (qf + pf + 1.0), 0.0);
        }

        #[test]
        fn mixture_and_density_factor_agree(
            q in 1u32..12,
            raw in proptest::collection::vec(-5.0f64..5.0, 1..6),
            scale in -3.0f64..3.0,
        ) {
            let mean = raw.iter().sum::<f64>() / (raw.len() + 1) as f64;
            let mut coeffs: Vec<f64> = raw.iter().map(|c| c - mean).collect();
            coeffs.push(-coeffs.iter().sum::<f64>());
            let mix = ChiSquaredMixture { base_dof: q, mix_coeffs: coeffs, scale };
            prop_assume!(mix.validate().is_ok());
            let a = mix.to_density_factor().unwrap();
            let base = LimitDistribution::ChiSquared { dof: q };
            let lo = base.quantile(0.001).unwrap();
            let hi = base.quantile(0.999).unwrap();
            for i in 0..100 {
                let x = lo + (hi - lo) * i as f64 / 99.0;
                let lhs = mix.eval(x);
                let rhs = base.density(x) * a.eval(x);
                prop_assert!((lhs - rhs).abs() <= 1e-12, "x={} {} vs {}", x, lhs, rhs);
            }
        }
    }
}
