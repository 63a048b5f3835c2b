use serde::{Deserialize, Serialize};

/// Real polynomial stored by ascending power: `coeffs[i]` multiplies `xⁱ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial(coeffs)
    }

    pub fn zero() -> Self {
        Polynomial(Vec::new())
    }

    /// `c·xᵏ`
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Polynomial(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Degree ignoring trailing zero coefficients; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }
}
