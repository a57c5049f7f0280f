//! Agent-level stochastic simulation of the same chain.
//!
//! Each agent holds a status; at every step it moves to a destination drawn
//! from the active matrix's column for its current status. Counts therefore
//! converge to the deterministic trajectory as the number of agents grows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EcmError, EcmMatrix, SimulationModel, Trajectory};
use crate::schedule::Schedule;

/// Cumulative destination probabilities, one row per source status.
struct ColumnSampler {
    cumulative: Vec<Vec<f64>>,
}

impl ColumnSampler {
    fn new(m: &EcmMatrix) -> Self {
        let n = m.size();
        let cumulative = (0..n)
            .map(|src| {
                let total: f64 = (0..n).map(|d| m.get(d, src)).sum();
                let mut acc = 0.0;
                (0..n)
                    .map(|dest| {
                        acc += m.get(dest, src) / total;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, src: usize, u: f64) -> usize {
        let row = &self.cumulative[src];
        row.iter().position(|&c| u < c).unwrap_or(row.len() - 1)
    }
}

fn sample_from(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Simulates `agents` individuals through `schedule`.
///
/// The random stream is ChaCha8 seeded with `seed` on stream `stream`, so a
/// run is reproducible from `(seed, stream, agents, schedule)`. Counts in
/// the returned trajectory are whole numbers.
pub fn monte_carlo_evolve(
    model: &SimulationModel,
    schedule: &Schedule,
    agents: usize,
    seed: u64,
    stream: u64,
) -> Result<Trajectory, EcmError> {
    if let Some(c) = model.conditions().iter().find(|c| !c.is_conservative()) {
        return Err(EcmError::NotConservative(c.label().to_string()));
    }
    if agents == 0 {
        return Err(EcmError::ZeroPopulation);
    }
    let matrices = model.resolve(schedule)?;
    let samplers: Vec<(String, ColumnSampler)> = model
        .conditions()
        .iter()
        .map(|c| (c.label().to_string(), ColumnSampler::new(c)))
        .collect();
    let sampler_for = |m: &EcmMatrix| {
        &samplers
            .iter()
            .find(|(l, _)| l == m.label())
            .expect("resolved label")
            .1
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let n = model.statuses().len();
    let initial = model.initial().counts();
    let mut status: Vec<u32> = (0..agents)
        .map(|_| sample_from(initial, rng.random::<f64>()) as u32)
        .collect();

    let tally = |status: &[u32]| {
        let mut counts = vec![0.0; n];
        for &s in status {
            counts[s as usize] += 1.0;
        }
        counts
    };

    let mut states = Vec::with_capacity(model.length() + 1);
    states.push(model.initial().with_counts_unchecked(tally(&status)));
    for m in matrices {
        let sampler = sampler_for(m);
        for s in status.iter_mut() {
            *s = sampler.sample(*s as usize, rng.random::<f64>()) as u32;
        }
        states.push(model.initial().with_counts_unchecked(tally(&status)));
    }
    Ok(Trajectory {
        schedule_label: crate::schedule::format_schedule(schedule),
        states,
    })
}

/// Monte Carlo run of every declared schedule; schedule `i` uses stream `i`.
pub fn monte_carlo_all(
    model: &SimulationModel,
    agents: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<Trajectory>, EcmError> {
    let run = || {
        model
            .schedules()
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut t = monte_carlo_evolve(model, &s.schedule, agents, seed, i as u64)?;
                t.schedule_label = s.name.clone();
                Ok(t)
            })
            .collect::<Result<Vec<_>, EcmError>>()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EcmError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    }
}
