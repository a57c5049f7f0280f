use std::fmt;

use super::{EcmError, EcmMatrix};

pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Why a stationary distribution could not be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoConvergence {
    /// The iteration budget ran out.
    MaxIterations(usize),
    /// The iterate settled into a period-2 cycle.
    Oscillation { iteration: usize },
    /// More than one closed communicating class, so every mixture of their
    /// equilibria is stationary.
    NonUnique { closed_classes: usize },
}

impl fmt::Display for NoConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaxIterations(n) => write!(f, "no fixed point after {n} iterations"),
            Self::Oscillation { iteration } => {
                write!(f, "period-2 oscillation detected at iteration {iteration}")
            }
            Self::NonUnique { closed_classes } => write!(
                f,
                "stationary distribution is not unique ({closed_classes} closed classes)"
            ),
        }
    }
}

/// Number of closed communicating classes of the chain whose transitions
/// are the positive entries of `m`.
pub fn closed_class_count(m: &EcmMatrix) -> usize {
    let n = m.size();
    // reach[i][j]: status j reachable from status i (reflexive).
    let mut reach = vec![vec![false; n]; n];
    for (src, row) in reach.iter_mut().enumerate() {
        for (dest, r) in row.iter_mut().enumerate() {
            *r = src == dest || m.get(dest, src) > 0.0;
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (r, &v) in row.iter_mut().zip(&via) {
                *r |= v;
            }
        }
    }
    // A class is closed iff everything reachable from it reaches back.
    // Count each closed class once via its smallest member.
    (0..n)
        .filter(|&i| {
            let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
            let smallest = (0..i).all(|j| !(reach[i][j] && reach[j][i]));
            closed && smallest
        })
        .count()
}

/// Long-run fractions `p` with `m * p = p`, by renormalized power
/// iteration from the uniform vector.
///
/// Converged when every component moves less than `tol` in one step.
pub fn stationary_distribution(
    m: &EcmMatrix,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>, EcmError> {
    if !m.is_conservative() {
        return Err(EcmError::NotConservative(m.label().to_string()));
    }
    let closed_classes = closed_class_count(m);
    if closed_classes > 1 {
        return Err(EcmError::NoConvergence(NoConvergence::NonUnique { closed_classes }));
    }

    let n = m.size();
    let mut current = vec![1.0 / n as f64; n];
    let mut previous: Option<Vec<f64>> = None;
    let mut last_residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut next = m.apply(&current);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);

        let residual = max_abs_diff(&next, &current);
        if residual < tol {
            return Ok(next);
        }
        if let Some(prev) = &previous {
            // A true 2-cycle keeps a constant one-step residual; a slowly
            // converging chain with a negative eigenvalue shrinks it.
            let two_step = max_abs_diff(&next, prev);
            if two_step < tol && residual >= last_residual * (1.0 - 1e-9) {
                return Err(EcmError::NoConvergence(NoConvergence::Oscillation { iteration }));
            }
        }
        last_residual = residual;
        previous = Some(std::mem::replace(&mut current, next));
    }
    Err(EcmError::NoConvergence(NoConvergence::MaxIterations(max_iter)))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
