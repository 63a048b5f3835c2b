use crate::distributions::LimitDistribution;
use crate::edgeworth::{correlation_effective_n, golden_max, EdgeworthModel};
use crate::error::{Error, Result};
use crate::special::beta_pq;

use super::EmpiricalQuantiles;

pub const MIN_GAP_GRID_POINTS: usize = 4096;

/// `Pr(√N·R ≤ x)` under independence, `N = n − 2.5`.
///
/// `R²` is `Beta(1/2, (n−2)/2)` for the Pearson correlation of `n` paired
/// normal observations; the sign is symmetric.
pub fn exact_correlation_cdf(n: u32, x: f64) -> Result<f64> {
    if n < 5 {
        return Err(Error::Domain(format!("exact correlation CDF needs n ≥ 5, got {n}")));
    }
    if x.is_nan() {
        return Err(Error::Domain("x is NaN".into()));
    }
    let r = x / correlation_effective_n(n).sqrt();
    if r <= -1.0 {
        return Ok(0.0);
    }
    if r >= 1.0 {
        return Ok(1.0);
    }
    let (_, upper) = beta_pq(0.5, 0.5 * (n as f64 - 2.0), r * r);
    let half_tail = 0.5 * upper;
    Ok(if r < 0.0 { half_tail } else { 1.0 - half_tail })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GapGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(GapGrid { lo, hi, points })
    }

    /// `[G⁻¹(1e−6), G⁻¹(1 − 1e−6)]` with the minimum point count.
    pub fn covering(base: &LimitDistribution) -> Result<Self> {
        GapGrid::new(base.quantile(1e-6)?, base.quantile(1.0 - 1e-6)?, MIN_GAP_GRID_POINTS)
    }

    fn widened_for(&self, base: &LimitDistribution) -> GapGrid {
        let mut g = *self;
        if let Ok(c) = GapGrid::covering(base) {
            g.lo = g.lo.min(c.lo);
            g.hi = g.hi.max(c.hi);
        }
        g.points = g.points.max(MIN_GAP_GRID_POINTS);
        g
    }
}

/// `sup_x |oracle(x) − approx_cdf(x)|` over the grid, refined by golden-section
/// search in the two cells around the grid maximum.
///
/// The grid is widened to cover the base distribution's central
/// `1 − 2·10⁻⁶` mass and to at least [`MIN_GAP_GRID_POINTS`] points.
pub fn sup_norm_gap(model: &EdgeworthModel, oracle: impl Fn(f64) -> f64, grid: GapGrid) -> f64 {
    let g = grid.widened_for(&model.base);
    let gap = |x: f64| (oracle(x) - model.approx_cdf(x)).abs();
    let step = (g.hi - g.lo) / (g.points - 1) as f64;
    let at = |i: usize| if i + 1 == g.points { g.hi } else { g.lo + step * i as f64 };
    let (best_i, best) = (0..g.points)
        .map(|i| (i, gap(at(i))))
        .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(g.points - 1));
    best.max(golden_max(gap, a, b))
}

/// Kolmogorov distance between the empirical CDF and a continuous `cdf`.
pub fn empirical_sup_gap(samples: &EmpiricalQuantiles, cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = samples.sorted_samples();
    let m = xs.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        worst = worst.max((f - i as f64 / m).abs()).max(((j + 1) as f64 / m - f).abs());
        i = j + 1;
    }
    worst
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("need at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("x values must not all coincide".into()));
    }
    Ok(sxy / sxx)
}
