//! Cornish–Fisher quantile approximations with certified error intervals.
//!
//! A statistic `U` whose distribution admits the expansion
//! `F(x) = G(x) + ε·a(x)·g(x) + R(x)` with `|R| ≤ c·εᵏ` has its upper
//! quantiles enclosed by intervals computable from `G` alone. The crate
//! provides the limit laws ([`distributions`]), expansion models
//! ([`edgeworth`]), monotone corrections ([`transforms`]), the certificates
//! ([`bounds`]) and a simulation harness to check them ([`montecarlo`]).

pub mod bounds;
pub mod distributions;
pub mod edgeworth;
pub mod error;
pub mod montecarlo;
pub mod poly;
pub mod special;
pub mod transforms;

pub use bounds::{
    alpha_window, cf_coefficients, cornish_fisher_quantile, first_order_u_of_x, theorem1_bracket,
    theorem1_certify, theorem2_certify, theorem3_certify, Bracket, CertificateFlag, CertifiedQuantile, Theorem,
};
pub use distributions::LimitDistribution;
pub use edgeworth::{
    build_correlation_model, build_correlation_transformed_model, build_hotelling_t0sq_model,
    build_hotelling_transformed_model, ChiSquaredMixture, CorrectionForm, EdgeworthModel,
};
pub use error::{Error, Result};
pub use poly::Polynomial;
pub use transforms::{build_hotelling_transform, HotellingForm, MonotoneTransform};
