use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use super::{EmpiricalQuantiles, SimulationPlan, Statistic};
use crate::edgeworth::correlation_effective_n;
use crate::error::{Error, Result};

fn stream_rng(seed: u64, stream: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(stream));
    rng
}

/// Runs `draw` on every substream in parallel and merges in stream order.
fn run_streams<F>(plan: &SimulationPlan, draw: F) -> Result<EmpiricalQuantiles>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    plan.validate()?;
    let chunks: Vec<Vec<f64>> = (0..plan.stream_count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(plan.seed, k);
            (0..plan.stream_len(k)).map(|_| draw(&mut rng)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    EmpiricalQuantiles::from_samples(chunks.concat(), *plan)
}

pub fn sample(plan: &SimulationPlan) -> Result<EmpiricalQuantiles> {
    match plan.statistic {
        Statistic::Correlation { .. } => sample_correlation(plan),
        Statistic::HotellingT0sq { .. } => sample_t0sq(plan),
    }
}

/// Draws of `√N·R`, `N = n − 2.5`, with `R` the Pearson correlation of two
/// independent standard normal `n`-vectors.
pub fn sample_correlation(plan: &SimulationPlan) -> Result<EmpiricalQuantiles> {
    let Statistic::Correlation { n } = plan.statistic else {
        return Err(Error::Domain("plan is not a correlation plan".into()));
    };
    plan.validate()?;
    let n = n as usize;
    let scale = correlation_effective_n(n as u32).sqrt();
    run_streams(plan, |rng| {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[i] = rng.sample(StandardNormal);
            y[i] = rng.sample(StandardNormal);
        }
        Ok(scale * pearson(&x, &y))
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Draws of `n·tr(S_h S_e⁻¹)`.
pub fn sample_t0sq(plan: &SimulationPlan) -> Result<EmpiricalQuantiles> {
    let Statistic::HotellingT0sq { p, q, n } = plan.statistic else {
        return Err(Error::Domain("plan is not a Hotelling plan".into()));
    };
    plan.validate()?;
    let (p, q, n) = (p as usize, q as usize, n as usize);
    let chi_e = chi_squared_family(n, p)?;
    let chi_h = if q >= p { chi_squared_family(q, p)? } else { Vec::new() };
    run_streams(plan, |rng| {
        let le = match bartlett_factor(rng, &chi_e) {
            Some(l) => l,
            None => bartlett_factor(rng, &chi_e).ok_or_else(|| {
                Error::Numerical("error Wishart factor singular twice in a row".into())
            })?,
        };
        let trace = if q >= p {
            let lh = bartlett_factor(rng, &chi_h).expect("hypothesis factor needs no inversion");
            trace_of_solve(&le, &lh, p, p)
        } else {
            let z: Vec<f64> = (0..p * q).map(|_| rng.sample(StandardNormal)).collect();
            trace_of_solve(&le, &z, p, q)
        };
        Ok(n as f64 * trace)
    })
}

/// `χ²_{dof − i}` samplers for the Bartlett diagonal, `i = 0..p`.
fn chi_squared_family(dof: usize, p: usize) -> Result<Vec<ChiSquared<f64>>> {
    (0..p)
        .map(|i| {
            ChiSquared::new((dof - i) as f64)
                .map_err(|e| Error::Domain(format!("chi-squared with {} dof: {e}", dof - i)))
        })
        .collect()
}

/// Lower-triangular `L` with `L Lᵀ ~ W_p(dof, I)`, row-major `p×p`.
/// Returns `None` when a diagonal entry underflows to zero.
fn bartlett_factor(rng: &mut ChaCha8Rng, chi: &[ChiSquared<f64>]) -> Option<Vec<f64>> {
    let p = chi.len();
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        let d = chi[i].sample(rng).sqrt();
        if !(d > 0.0) {
            return None;
        }
        l[i * p + i] = d;
        for j in 0..i {
            l[i * p + j] = rng.sample(StandardNormal);
        }
    }
    Some(l)
}

/// `‖L⁻¹ H‖²_F` for lower-triangular `L` (`p×p`) and `H` (`p×m`), both row-major.
/// With `S_e = L Lᵀ` and `S_h = H Hᵀ` this equals `tr(S_h S_e⁻¹)`.
fn trace_of_solve(l: &[f64], h: &[f64], p: usize, m: usize) -> f64 {
    let mut total = 0.0;
    let mut col = vec![0.0; p];
    for k in 0..m {
        for i in 0..p {
            let mut s = h[i * m + k];
            for j in 0..i {
                s -= l[i * p + j] * col[j];
            }
            col[i] = s / l[i * p + i];
        }
        total += col.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_of_solve_matches_direct_inverse() {
        // L = [[2,0],[1,3]], H = [[1,2],[0,1]]
        let l = [2.0, 0.0, 1.0, 3.0];
        let h = [1.0, 2.0, 0.0, 1.0];
        // S_e = L Lᵀ = [[4,2],[2,10]], S_h = H Hᵀ = [[5,2],[2,1]]
        let det = 4.0 * 10.0 - 2.0 * 2.0;
        let inv = [10.0 / det, -2.0 / det, -2.0 / det, 4.0 / det];
        let sh = [5.0, 2.0, 2.0, 1.0];
        let direct = sh[0] * inv[0] + sh[1] * inv[2] + sh[2] * inv[1] + sh[3] * inv[3];
        assert!((trace_of_solve(&l, &h, 2, 2) - direct).abs() < 1e-15);
    }

    #[test]
    fn pearson_is_scale_and_shift_invariant() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y = [2.0, 1.0, 5.0, 6.0];
        let r = pearson(&x, &y);
        let x2: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert!((pearson(&x2, &y) - r).abs() < 1e-15);
        assert!((pearson(&x, &x) - 1.0).abs() < 1e-15);
    }
}
