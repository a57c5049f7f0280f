use std::sync::Arc;

use rayon::prelude::*;

use super::{EcmError, EcmMatrix, StateVector};
use crate::schedule::{NamedSchedule, Schedule};

/// Evolution of one schedule: `states[t]` for `t = 0..=length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub schedule_label: String,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn status_names(&self) -> &Arc<[String]> {
        self.states[0].names()
    }

    /// Number of transitions (`states.len() - 1`).
    pub fn length(&self) -> usize {
        self.states.len() - 1
    }

    /// Counts of one status for `t` in `window` (inclusive bounds).
    pub fn series(&self, status: usize, window: std::ops::RangeInclusive<usize>) -> Vec<f64> {
        self.states[window].iter().map(|s| s.counts()[status]).collect()
    }

    /// The same trajectory with every state replaced by its fractions.
    pub fn normalized(&self) -> Result<Trajectory, EcmError> {
        let states = self
            .states
            .iter()
            .map(|s| Ok(s.with_counts_unchecked(s.normalize()?)))
            .collect::<Result<Vec<_>, EcmError>>()?;
        Ok(Trajectory {
            schedule_label: self.schedule_label.clone(),
            states,
        })
    }
}

/// Statuses, condition matrices, initial state, horizon and schedules.
#[derive(Debug, Clone)]
pub struct SimulationModel {
    statuses: Arc<[String]>,
    conditions: Vec<EcmMatrix>,
    initial: StateVector,
    length: usize,
    schedules: Vec<NamedSchedule>,
}

impl SimulationModel {
    pub fn new(
        statuses: Vec<String>,
        conditions: Vec<EcmMatrix>,
        initial: Vec<f64>,
        length: usize,
    ) -> Result<Self, EcmError> {
        let statuses: Arc<[String]> = statuses.into();
        let initial = StateVector::new(Arc::clone(&statuses), initial)?;
        if initial.total() <= 0.0 {
            return Err(EcmError::ZeroPopulation);
        }
        if length == 0 {
            return Err(EcmError::LengthMismatch {
                expected: 1,
                found: 0,
            });
        }
        for (i, c) in conditions.iter().enumerate() {
            if c.size() != statuses.len() {
                return Err(EcmError::DimensionMismatch {
                    expected: statuses.len(),
                    found: c.size(),
                });
            }
            if conditions[..i].iter().any(|o| o.label() == c.label()) {
                return Err(EcmError::DuplicateCondition(c.label().to_string()));
            }
        }
        Ok(Self {
            statuses,
            conditions,
            initial,
            length,
            schedules: Vec::new(),
        })
    }

    /// Adds a schedule after checking its length and labels.
    pub fn with_schedule(mut self, schedule: NamedSchedule) -> Result<Self, EcmError> {
        self.resolve(&schedule.schedule)?;
        self.schedules.push(schedule);
        Ok(self)
    }

    pub fn with_schedules<I>(self, schedules: I) -> Result<Self, EcmError>
    where
        I: IntoIterator<Item = NamedSchedule>,
    {
        schedules.into_iter().try_fold(self, Self::with_schedule)
    }

    pub fn statuses(&self) -> &Arc<[String]> {
        &self.statuses
    }

    pub fn conditions(&self) -> &[EcmMatrix] {
        &self.conditions
    }

    pub fn condition(&self, label: &str) -> Option<&EcmMatrix> {
        self.conditions.iter().find(|c| c.label() == label)
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn schedules(&self) -> &[NamedSchedule] {
        &self.schedules
    }

    /// Maps each timestep of `schedule` to a condition matrix.
    pub(crate) fn resolve<'m>(&'m self, schedule: &Schedule) -> Result<Vec<&'m EcmMatrix>, EcmError> {
        if schedule.len() != self.length {
            return Err(EcmError::LengthMismatch {
                expected: self.length,
                found: schedule.len(),
            });
        }
        schedule
            .labels()
            .iter()
            .map(|l| {
                self.condition(l)
                    .ok_or_else(|| EcmError::UnknownConditionLabel(l.clone()))
            })
            .collect()
    }

    /// Deterministic evolution: `states[t + 1] = ECM(schedule[t]) * states[t]`.
    pub fn evolve(&self, schedule: &Schedule) -> Result<Trajectory, EcmError> {
        self.evolve_labeled(schedule, &crate::schedule::format_schedule(schedule))
    }

    /// Like [`evolve`](Self::evolve), labelling the trajectory with the schedule name.
    pub fn evolve_named(&self, schedule: &NamedSchedule) -> Result<Trajectory, EcmError> {
        self.evolve_labeled(&schedule.schedule, &schedule.name)
    }

    fn evolve_labeled(&self, schedule: &Schedule, label: &str) -> Result<Trajectory, EcmError> {
        let matrices = self.resolve(schedule)?;
        let mut states = Vec::with_capacity(self.length + 1);
        states.push(self.initial.clone());
        for m in matrices {
            let next = m.step(states.last().expect("nonempty"))?;
            states.push(next);
        }
        Ok(Trajectory {
            schedule_label: label.to_string(),
            states,
        })
    }

    /// Evolves every declared schedule, in declaration order.
    ///
    /// `jobs` bounds the worker threads (`None` uses the global pool); the
    /// result never depends on it.
    pub fn evolve_all(&self, jobs: Option<usize>) -> Result<Vec<Trajectory>, EcmError> {
        let run = || {
            self.schedules
                .par_iter()
                .map(|s| self.evolve_named(s))
                .collect::<Result<Vec<_>, _>>()
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{periodic_schedule, Schedule};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn worked_model(length: usize) -> SimulationModel {
        let m = EcmMatrix::from_rows(
            "sample",
            &[[0.70, 0.50, 0.10], [0.20, 0.30, 0.20], [0.10, 0.20, 0.70]],
        )
        .unwrap();
        SimulationModel::new(names(3), vec![m], vec![100.0; 3], length).unwrap()
    }

    #[test]
    fn two_steps_of_worked_example() {
        let model = worked_model(2);
        let traj = model.evolve(&Schedule::constant("sample", 2).unwrap()).unwrap();
        assert_eq!(traj.states.len(), 3);
        assert_eq!(traj.states[0].counts(), &[100.0, 100.0, 100.0]);
        // [.7*130+.5*70+.1*100, .2*130+.3*70+.2*100, .1*130+.2*70+.7*100]
        let expected = [136.0, 67.0, 97.0];
        for (a, b) in traj.states[2].counts().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_keeps_state() {
        let id = EcmMatrix::identity("id", 2).unwrap();
        let model = SimulationModel::new(names(2), vec![id], vec![5.0, 7.0], 10).unwrap();
        let traj = model.evolve(&Schedule::constant("id", 10).unwrap()).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!(traj.states.iter().all(|s| s.counts() == [5.0, 7.0]));
    }

    #[test]
    fn attainable_only_approaches_stationary_share() {
        let att = EcmMatrix::from_rows("I", &[[0.90, 0.44], [0.10, 0.56]]).unwrap();
        let model = SimulationModel::new(names(2), vec![att], vec![127.0, 111.0], 100).unwrap();
        let traj = model.evolve(&Schedule::constant("I", 100).unwrap()).unwrap();
        let target = 238.0 * 0.44 / 0.54;
        let gaps: Vec<f64> = traj
            .states
            .iter()
            .map(|s| (target - s.counts()[0]).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(gaps[100] < 1e-9);
    }

    #[test]
    fn schedule_errors() {
        let model = worked_model(3);
        assert_eq!(
            model.evolve(&Schedule::constant("sample", 2).unwrap()),
            Err(EcmError::LengthMismatch {
                expected: 3,
                found: 2
            })
        );
        assert_eq!(
            model.evolve(&Schedule::constant("other", 3).unwrap()),
            Err(EcmError::UnknownConditionLabel("other".into()))
        );
    }

    #[test]
    fn evolve_all_is_ordered_and_job_independent() {
        let att = EcmMatrix::from_rows("I", &[[0.90, 0.44], [0.10, 0.56]]).unwrap();
        let ctl = EcmMatrix::from_rows("C", &[[0.72, 0.29], [0.28, 0.71]]).unwrap();
        let schedules = (0..20).map(|k| {
            NamedSchedule::new(format!("s{k}"), periodic_schedule("I", "C", k, 50).unwrap())
        });
        let model = SimulationModel::new(names(2), vec![att, ctl], vec![127.0, 111.0], 50)
            .unwrap()
            .with_schedules(schedules)
            .unwrap();
        let one = model.evolve_all(Some(1)).unwrap();
        let many = model.evolve_all(Some(8)).unwrap();
        assert_eq!(one, many);
        let labels: Vec<_> = one.iter().map(|t| t.schedule_label.as_str()).collect();
        assert_eq!(labels[..3], ["s0", "s1", "s2"]);
    }

    #[test]
    fn rejects_duplicate_conditions_and_bad_dims() {
        let a = EcmMatrix::identity("a", 2).unwrap();
        assert_eq!(
            SimulationModel::new(names(2), vec![a.clone(), a.clone()], vec![1.0, 1.0], 1)
                .unwrap_err(),
            EcmError::DuplicateCondition("a".into())
        );
        assert!(matches!(
            SimulationModel::new(names(3), vec![a.clone()], vec![1.0; 3], 1),
            Err(EcmError::DimensionMismatch { .. })
        ));
        assert_eq!(
            SimulationModel::new(names(2), vec![a], vec![0.0, 0.0], 1).unwrap_err(),
            EcmError::ZeroPopulation
        );
    }
}
