//! Kaplan-Meier estimate of an arrival-time distribution from right-censored
//! samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One arrival time, or the time at which observation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub censored: bool,
}

impl Sample {
    pub fn arrived(time: f64) -> Self {
        Sample {
            time,
            censored: false,
        }
    }

    pub fn censored(time: f64) -> Self {
        Sample {
            time,
            censored: true,
        }
    }
}

/// Right-continuous step function `t -> P(T <= t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfCurve {
    /// `(t, cdf)` at every time with at least one arrival, increasing in `t`.
    pub points: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub n_censored: usize,
}

impl EcdfCurve {
    /// Value at `t`: the last step at or before `t`, zero before the first.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.points.partition_point(|&(time, _)| time <= t);
        if n == 0 {
            0.0
        } else {
            self.points[n - 1].1
        }
    }

    /// Largest value the curve reaches.
    pub fn last(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Product-limit estimator.
///
/// A sample censored at `t` still counts as at risk at `t`. Without censoring
/// the result is exactly the empirical CDF.
pub fn kaplan_meier(samples: &[Sample]) -> Result<EcdfCurve> {
    if samples.is_empty() {
        return Err(Error::Data("Kaplan-Meier needs at least one sample".into()));
    }
    if let Some(bad) = samples.iter().find(|s| !s.time.is_finite()) {
        return Err(Error::Data(format!(
            "sample time {} is not finite",
            bad.time
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
    let n_censored = sorted.iter().filter(|s| s.censored).count();

    let mut points = Vec::new();
    let mut at_risk = sorted.len();
    let mut survival = 1.0;
    let mut rest = sorted.as_slice();
    while let Some(first) = rest.first() {
        let tied = rest.partition_point(|s| s.time == first.time);
        let arrivals = rest[..tied].iter().filter(|s| !s.censored).count();
        if arrivals > 0 {
            survival *= 1.0 - arrivals as f64 / at_risk as f64;
            let cdf = if arrivals == at_risk {
                1.0
            } else {
                1.0 - survival
            };
            points.push((first.time, cdf));
        }
        at_risk -= tied;
        rest = &rest[tied..];
    }
    Ok(EcdfCurve {
        points,
        n_samples: samples.len(),
        n_censored,
    })
}
