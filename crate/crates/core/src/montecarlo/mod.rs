//! Simulation harness for the correlation and Hotelling statistics.
//!
//! Sampling is split into `stream_count` substreams. Stream `k` draws from
//! ChaCha8 seeded with `seed` on stream `k`, so the sample multiset depends
//! only on the plan and never on the number of worker threads.

mod dump;
mod oracle;
mod sampling;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::{read_dump, write_dump, DumpHeader, DUMP_MAGIC, DUMP_VERSION};
pub use oracle::{
    empirical_sup_gap, exact_correlation_cdf, fit_loglog_slope, sup_norm_gap, GapGrid, MIN_GAP_GRID_POINTS,
};
pub use sampling::{sample, sample_correlation, sample_t0sq};
pub use verify::{dkw_margin, verify_enclosure, EnclosureStatus, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Statistic {
    /// `√N·R` for the Pearson correlation of `n` paired normal observations.
    Correlation { n: u32 },
    /// `n·tr(S_h S_e⁻¹)` with `S_h ~ W_p(q, I)`, `S_e ~ W_p(n, I)`.
    HotellingT0sq { p: u32, q: u32, n: u32 },
}

impl Statistic {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Statistic::Correlation { n } => {
                if n < 3 {
                    return Err(Error::Domain(format!("correlation sampling needs n ≥ 3, got {n}")));
                }
            }
            Statistic::HotellingT0sq { p, q, n } => {
                if p == 0 || q == 0 {
                    return Err(Error::Domain(format!("need p, q ≥ 1, got p = {p}, q = {q}")));
                }
                if n < p {
                    return Err(Error::Domain(format!("need n ≥ p, got n = {n}, p = {p}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub statistic: Statistic,
    pub sample_count: usize,
    pub seed: u64,
    pub stream_count: u32,
}

impl SimulationPlan {
    pub fn new(statistic: Statistic, sample_count: usize, seed: u64, stream_count: u32) -> Result<Self> {
        let plan = SimulationPlan {
            statistic,
            sample_count,
            seed,
            stream_count,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::Domain("sample_count must be ≥ 1".into()));
        }
        if self.stream_count == 0 {
            return Err(Error::Domain("stream_count must be ≥ 1".into()));
        }
        self.statistic.validate()
    }

    /// Number of draws assigned to substream `k`.
    pub(crate) fn stream_len(&self, k: u32) -> usize {
        let streams = self.stream_count as usize;
        let base = self.sample_count / streams;
        base + usize::from((k as usize) < self.sample_count % streams)
    }
}

/// Sorted draws of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalQuantiles {
    sorted_samples: Vec<f64>,
    plan: SimulationPlan,
}

impl EmpiricalQuantiles {
    pub fn from_samples(mut samples: Vec<f64>, plan: SimulationPlan) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("no samples".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Numerical("NaN among samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalQuantiles {
            sorted_samples: samples,
            plan,
        })
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn count(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn plan(&self) -> &SimulationPlan {
        &self.plan
    }

    /// `#{X_i ≤ x} / count`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted_samples.partition_point(|&s| s <= x) as f64 / self.count() as f64
    }

    /// Type-1 quantile: order statistic at rank `⌈p·count⌉`, clamped to `[1, count]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let m = self.count();
        let rank = (p * m as f64).ceil().clamp(1.0, m as f64) as usize;
        self.sorted_samples[rank - 1]
    }

    /// Upper `100α%` point: the order statistic at rank `⌈(1 − α)·count⌉`.
    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(self.quantile(1.0 - alpha))
    }

    /// Samples of `f(X)` for an increasing `f`, e.g. a correcting transform.
    pub fn map_increasing(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let mapped = self.sorted_samples.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        EmpiricalQuantiles::from_samples(mapped, self.plan)
    }
}

pub fn empirical_upper_quantile(samples: &EmpiricalQuantiles, alpha: f64) -> Result<f64> {
    samples.upper_quantile(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(count: usize) -> SimulationPlan {
        SimulationPlan::new(Statistic::Correlation { n: 10 }, count, 1, 1).unwrap()
    }

    #[test]
    fn upper_quantile_examples() {
        let e = EmpiricalQuantiles::from_samples(vec![5.0, 3.0, 1.0, 4.0, 2.0], plan(5)).unwrap();
        assert_eq!(e.upper_quantile(0.2).unwrap(), 4.0);
        assert_eq!(e.upper_quantile(0.5).unwrap(), 3.0);
        assert_eq!(e.upper_quantile(0.999).unwrap(), 1.0);
        assert_eq!(e.upper_quantile(1e-9).unwrap(), 5.0);
        assert!(e.upper_quantile(0.0).is_err());
        assert!(e.upper_quantile(1.0).is_err());
        assert_eq!(e.ecdf(3.0), 0.6);
        assert_eq!(e.ecdf(0.5), 0.0);
        assert_eq!(e.ecdf(9.0), 1.0);
    }

    #[test]
    fn plan_validation() {
        assert!(SimulationPlan::new(Statistic::Correlation { n: 10 }, 0, 1, 1).is_err());
        assert!(SimulationPlan::new(Statistic::Correlation { n: 10 }, 10, 1, 0).is_err());
        assert!(SimulationPlan::new(Statistic::Correlation { n: 2 }, 10, 1, 1).is_err());
        assert!(SimulationPlan::new(Statistic::HotellingT0sq { p: 3, q: 3, n: 2 }, 10, 1, 1).is_err());
        assert!(SimulationPlan::new(Statistic::HotellingT0sq { p: 3, q: 1, n: 3 }, 10, 1, 1).is_ok());
    }

    #[test]
    fn stream_lengths_partition_the_count() {
        let p = SimulationPlan::new(Statistic::Correlation { n: 10 }, 10, 1, 4).unwrap();
        let lens: Vec<_> = (0..4).map(|k| p.stream_len(k)).collect();
        assert_eq!(lens, vec![3, 3, 2, 2]);
        let p = SimulationPlan::new(Statistic::Correlation { n: 10 }, 2, 1, 5).unwrap();
        assert_eq!((0..5).map(|k| p.stream_len(k)).sum::<usize>(), 2);
    }

    #[test]
    fn nan_samples_are_rejected() {
        assert!(EmpiricalQuantiles::from_samples(vec![1.0, f64::NAN], plan(2)).is_err());
        assert!(EmpiricalQuantiles::from_samples(vec![], plan(1)).is_err());
    }
}
