use super::special::student_t_two_sided;
use super::{SampleSeries, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TTestVariant {
    /// Student's t with pooled variance, `df = n_a + n_b - 2`.
    #[default]
    Pooled,
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    Welch,
    /// Paired differences `a[i] - b[i]`, `df = n - 1`.
    Paired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTestResult {
    pub variant: TTestVariant,
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Cohen's d with the pooled standard deviation.
    pub d: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Zero-variance samples with equal means: t, d = 0 and p = 1 by convention.
    pub degenerate: bool,
}

/// Pooled standard deviation of two samples.
pub fn pooled_sd(a: &SampleSeries, b: &SampleSeries) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    (((na - 1.0) * a.variance() + (nb - 1.0) * b.variance()) / (na + nb - 2.0)).sqrt()
}

/// Standardized mean difference `(mean_a - mean_b) / s_pooled`.
pub fn cohens_d(a: &SampleSeries, b: &SampleSeries) -> Result<f64, StatsError> {
    a.require(2)?;
    b.require(2)?;
    let sp = pooled_sd(a, b);
    if sp == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((a.mean() - b.mean()) / sp)
}

/// Multiplies `p` by the number of comparisons, capped at 1.
pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    debug_assert!(comparisons >= 1);
    (p * comparisons.max(1) as f64).min(1.0)
}

pub fn two_sample_ttest(
    a: &SampleSeries,
    b: &SampleSeries,
    variant: TTestVariant,
) -> Result<TTestResult, StatsError> {
    a.require(2)?;
    b.require(2)?;
    let (ma, mb) = (a.mean(), b.mean());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (a.variance(), b.variance());

    let (diff, se, df) = match variant {
        TTestVariant::Pooled => {
            let sp = pooled_sd(a, b);
            (ma - mb, sp * (1.0 / na + 1.0 / nb).sqrt(), na + nb - 2.0)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = if se2 > 0.0 {
                se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            (ma - mb, se2.sqrt(), df)
        }
        TTestVariant::Paired => {
            if a.len() != b.len() {
                return Err(StatsError::LengthMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
            let diffs = SampleSeries::new(
                "diff",
                a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
            )?;
            (diffs.mean(), diffs.sd() / na.sqrt(), na - 1.0)
        }
    };

    let sp = pooled_sd(a, b);
    if se == 0.0 || sp == 0.0 {
        if diff == 0.0 {
            return Ok(TTestResult {
                variant,
                t: 0.0,
                df,
                p: 1.0,
                d: 0.0,
                mean_a: ma,
                mean_b: mb,
                degenerate: true,
            });
        }
        return Err(StatsError::ZeroVariance);
    }
    let t = diff / se;
    Ok(TTestResult {
        variant,
        t,
        df,
        p: student_t_two_sided(t, df),
        d: (ma - mb) / sp,
        mean_a: ma,
        mean_b: mb,
        degenerate: false,
    })
}
