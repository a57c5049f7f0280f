use std::sync::Arc;

use super::EcmError;

/// Population counts per status at one time point. Counts are real-valued;
/// the deterministic recursion never rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    counts: Vec<f64>,
    names: Arc<[String]>,
}

impl StateVector {
    pub fn new(names: Arc<[String]>, counts: Vec<f64>) -> Result<Self, EcmError> {
        if counts.is_empty() {
            return Err(EcmError::EmptyMatrix);
        }
        if names.len() != counts.len() {
            return Err(EcmError::DimensionMismatch {
                expected: names.len(),
                found: counts.len(),
            });
        }
        if let Some((i, &v)) = counts
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(EcmError::InvalidCount { index: i, value: v });
        }
        Ok(Self { counts, names })
    }

    /// A state with generated status names `s0, s1, ...`.
    pub fn unnamed(counts: Vec<f64>) -> Result<Self, EcmError> {
        let names: Arc<[String]> = (0..counts.len()).map(|i| format!("s{i}")).collect();
        Self::new(names, counts)
    }

    pub(crate) fn with_counts_unchecked(&self, counts: Vec<f64>) -> Self {
        debug_assert_eq!(counts.len(), self.counts.len());
        Self {
            counts,
            names: Arc::clone(&self.names),
        }
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Fractions `counts / total`.
    pub fn normalize(&self) -> Result<Vec<f64>, EcmError> {
        let total = self.total();
        if total <= 0.0 {
            return Err(EcmError::ZeroPopulation);
        }
        Ok(self.counts.iter().map(|c| c / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_worked_example() {
        let s = StateVector::unnamed(vec![130.0, 70.0, 100.0]).unwrap();
        let f = s.normalize().unwrap();
        let expected = [130.0 / 300.0, 70.0 / 300.0, 100.0 / 300.0];
        for (a, b) in f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((f[0] - 0.433333).abs() < 1e-6);
    }

    #[test]
    fn normalize_single_status() {
        let s = StateVector::unnamed(vec![1.0]).unwrap();
        assert_eq!(s.normalize().unwrap(), vec![1.0]);
    }

    #[test]
    fn normalize_zero_population() {
        let s = StateVector::unnamed(vec![0.0, 0.0]).unwrap();
        assert_eq!(s.normalize(), Err(EcmError::ZeroPopulation));
    }

    #[test]
    fn rejects_negative_counts() {
        assert!(matches!(
            StateVector::unnamed(vec![1.0, -2.0]),
            Err(EcmError::InvalidCount { index: 1, .. })
        ));
    }
}
