//! Hypothesis tests, effect sizes and the random-intercept mixed model.

mod anova;
mod lmm;
mod report;
pub mod special;
mod ttest;

pub use anova::{one_way_anova, scheffe_posthoc, AnovaResult, PairComparison, ScheffeResult};
pub use lmm::{fit_lmm, pseudo_r2, wald_chi2, LmmData, LmmFit, PseudoR2, WaldTest};
pub use report::{LmmReport, StatReport};
pub use ttest::{bonferroni, cohens_d, pooled_sd, two_sample_ttest, TTestResult, TTestVariant};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("TooFewSamples: {label} has {n} values, need at least {needed}")]
    TooFewSamples {
        label: String,
        n: usize,
        needed: usize,
    },
    #[error("ZeroVariance: pooled variance is 0 and the means differ")]
    ZeroVariance,
    #[error("TooFewGroups: {0} groups, need at least 2")]
    TooFewGroups(usize),
    #[error("LengthMismatch: {left} vs {right} values")]
    LengthMismatch { left: usize, right: usize },
    #[error("NonFinite: {0} contains a non-finite value")]
    NonFinite(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("RankDeficientDesign: fixed-effect design is not full column rank")]
    RankDeficientDesign,
    #[error("NonConvergence: {0}")]
    NonConvergence(String),
    #[error("SingularCovariance: coefficient covariance is not positive definite")]
    SingularCovariance,
    #[error("DegenerateNull: null model has zero total variance")]
    DegenerateNull,
}

/// A labelled sample of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSeries {
    /// Fails on an empty or non-finite sample.
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let label = label.into();
        if values.is_empty() {
            return Err(StatsError::TooFewSamples {
                label,
                n: 0,
                needed: 1,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample variance with `n - 1` in the denominator (0 when `n < 2`).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean, `sd / sqrt(n)`.
    pub fn se(&self) -> f64 {
        self.sd() / (self.len() as f64).sqrt()
    }

    pub(crate) fn require(&self, needed: usize) -> Result<(), StatsError> {
        if self.len() < needed {
            return Err(StatsError::TooFewSamples {
                label: self.label.clone(),
                n: self.len(),
                needed,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let s = SampleSeries::new("x", vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(s.mean(), 4.0);
        assert_eq!(s.variance(), 4.0);
        assert!((s.se() - 2.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(SampleSeries::new("x", vec![]).is_err());
        assert_eq!(
            SampleSeries::new("x", vec![1.0, f64::NAN]),
            Err(StatsError::NonFinite("x".into()))
        );
    }
}
