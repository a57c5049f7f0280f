use super::{EcmError, StateVector};

/// Column sums within this distance of 1 mark a matrix as conservative.
pub const DEFAULT_COLUMN_SUM_TOLERANCE: f64 = 1e-9;

/// Transition-rate matrix for one intervention condition.
///
/// Entries are column-oriented: `get(dest, src)` is the rate at which the
/// population in status `src` at `t` moves to status `dest` at `t + 1`.
/// Storage is row-major with rows indexed by destination, which is also
/// the layout of the printed tables users transcribe.
#[derive(Debug, Clone, PartialEq)]
pub struct EcmMatrix {
    label: String,
    size: usize,
    entries: Vec<f64>,
    conservative: bool,
}

impl EcmMatrix {
    /// Validates `rows` (rows = destination) with the default tolerance.
    pub fn from_rows<R: AsRef<[f64]>>(label: impl Into<String>, rows: &[R]) -> Result<Self, EcmError> {
        validate_ecm(label, rows, DEFAULT_COLUMN_SUM_TOLERANCE)
    }

    pub fn identity(label: impl Into<String>, size: usize) -> Result<Self, EcmError> {
        if size == 0 {
            return Err(EcmError::EmptyMatrix);
        }
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        Ok(Self {
            label: label.into(),
            size,
            entries,
            conservative: true,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    /// Rate from status `src` to status `dest`.
    pub fn get(&self, dest: usize, src: usize) -> f64 {
        self.entries[dest * self.size + src]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.size)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.size];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..self.clone()
        }
    }

    /// `counts[i] <- sum_j m(i, j) * counts[j]` without dimension checks.
    pub(crate) fn apply(&self, counts: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|row| row.iter().zip(counts).map(|(m, c)| m * c).sum())
            .collect()
    }

    /// One transition of the population in `s`.
    pub fn step(&self, s: &StateVector) -> Result<StateVector, EcmError> {
        if s.len() != self.size {
            return Err(EcmError::DimensionMismatch {
                expected: self.size,
                found: s.len(),
            });
        }
        Ok(s.with_counts_unchecked(self.apply(s.counts())))
    }

    /// Matrix product `self * rhs`: apply `rhs` first, then `self`.
    pub fn compose(&self, rhs: &EcmMatrix) -> Result<EcmMatrix, EcmError> {
        if rhs.size != self.size {
            return Err(EcmError::DimensionMismatch {
                expected: self.size,
                found: rhs.size,
            });
        }
        let n = self.size;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    entries[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        let label = format!("{}*{}", self.label, rhs.label);
        Ok(Self::build(label, n, entries, DEFAULT_COLUMN_SUM_TOLERANCE))
    }

    /// `self^n` by repeated squaring; `n = 0` gives the identity.
    pub fn power(&self, mut n: u32) -> EcmMatrix {
        let mut result = Self::identity(self.label.clone(), self.size).expect("size >= 1");
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.compose(&base).expect("same size");
            }
            base = base.compose(&base).expect("same size");
            n >>= 1;
        }
        result.with_label(format!("{}^n", self.label))
    }

    fn build(label: String, size: usize, entries: Vec<f64>, tol: f64) -> Self {
        let mut m = Self {
            label,
            size,
            entries,
            conservative: false,
        };
        m.conservative = m.column_sums().iter().all(|s| (s - 1.0).abs() <= tol);
        m
    }
}

/// Builds an [`EcmMatrix`] from a square grid whose rows are destinations.
///
/// Negative or non-finite entries are rejected. Matrices whose columns do
/// not sum to 1 within `tolerance` are accepted but flagged
/// non-conservative.
pub fn validate_ecm<R: AsRef<[f64]>>(
    label: impl Into<String>,
    raw: &[R],
    tolerance: f64,
) -> Result<EcmMatrix, EcmError> {
    let n = raw.len();
    if n == 0 {
        return Err(EcmError::EmptyMatrix);
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in raw.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(EcmError::NonSquare {
                rows: n,
                row: i,
                len: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(EcmError::NonFiniteEntry { row: i, col: j });
            }
            if v < 0.0 {
                return Err(EcmError::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            entries.push(v);
        }
    }
    Ok(EcmMatrix::build(label.into(), n, entries, tolerance))
}
