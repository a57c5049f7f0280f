//! Built-in reproductions of the four reference simulations.
//!
//! | id   | statuses                          | schedules                                   | analysis |
//! |------|-----------------------------------|---------------------------------------------|----------|
//! | sim1 | participants, non-participants    | periodic A or E with C filler, 2 x 50, plus control only | t-test of each schedule vs control |
//! | sim2 | participants, non-participants    | arithmetic-gap I with C filler, increments 0..49 | LMM, x = schedule number, cluster = t |
//! | sim3 | high, low, non-participants       | periodic E with A filler, intervals 0..49   | LMM per DV (high, low) |
//! | sim4 | high, low, non-participants       | five cyclic patterns                         | categorical LMM, ANOVA, Scheffe per DV |
//!
//! Statistics use the window `t = 1..=length`.

mod run;

use std::fmt;
use std::str::FromStr;

use crate::ecm::{EcmError, EcmMatrix, SimulationModel};
use crate::schedule::{arithmetic_gap_schedule, parse_schedule, periodic_schedule, NamedSchedule};
use crate::stats::TTestVariant;

pub use run::{
    run_experiment, ComparisonRow, DvAnalysis, ExperimentError, ExperimentReport,
    ScheduleSummary, Threshold, ThresholdCriterion, REPORT_FILE, RESULTS_FILE,
};

pub const SIM_LENGTH: usize = 100;
pub const SCHEDULES_PER_FAMILY: usize = 50;
pub const DEFAULT_BONFERRONI: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Two-status matrices: participants, non-participants.
pub fn attainable_2x2() -> EcmMatrix {
    EcmMatrix::from_rows("A", &[[0.90, 0.44], [0.10, 0.56]]).expect("valid matrix")
}

pub fn extraordinary_2x2() -> EcmMatrix {
    EcmMatrix::from_rows("E", &[[0.64, 0.12], [0.36, 0.88]]).expect("valid matrix")
}

pub fn control_2x2() -> EcmMatrix {
    EcmMatrix::from_rows("C", &[[0.72, 0.29], [0.28, 0.71]]).expect("valid matrix")
}

/// Three-status matrices: high, low, non-participants.
pub fn attainable_3x3() -> EcmMatrix {
    EcmMatrix::from_rows("A", &[[0.3, 0.2, 0.1], [0.6, 0.7, 0.6], [0.1, 0.1, 0.3]])
        .expect("valid matrix")
}

pub fn extraordinary_3x3() -> EcmMatrix {
    EcmMatrix::from_rows("E", &[[0.7, 0.6, 0.1], [0.2, 0.3, 0.2], [0.1, 0.1, 0.7]])
        .expect("valid matrix")
}

pub fn control_3x3() -> EcmMatrix {
    EcmMatrix::from_rows("C", &[[0.3, 0.1, 0.05], [0.5, 0.4, 0.15], [0.2, 0.5, 0.8]])
        .expect("valid matrix")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimId {
    Sim1,
    Sim2,
    Sim3,
    Sim4,
}

impl SimId {
    pub const ALL: [SimId; 4] = [SimId::Sim1, SimId::Sim2, SimId::Sim3, SimId::Sim4];
}

impl fmt::Display for SimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SimId::Sim1 => "sim1",
            SimId::Sim2 => "sim2",
            SimId::Sim3 => "sim3",
            SimId::Sim4 => "sim4",
        };
        f.write_str(s)
    }
}

impl FromStr for SimId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim1" => Ok(SimId::Sim1),
            "sim2" => Ok(SimId::Sim2),
            "sim3" => Ok(SimId::Sim3),
            "sim4" => Ok(SimId::Sim4),
            other => Err(format!("unknown simulation id {other} (expected sim1..sim4)")),
        }
    }
}

/// A group of schedules analysed together, as a range of schedule indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub name: String,
    pub schedules: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisPlan {
    /// Each schedule in each family against `baseline` on one status:
    /// two-sample t-test, Cohen's d and Bonferroni correction.
    VersusBaseline {
        status: usize,
        baseline: usize,
        families: Vec<Family>,
        bonferroni: usize,
        variant: TTestVariant,
    },
    /// One LMM per status with `x` = schedule number (1-based) and cluster = t.
    ScheduleSlope { statuses: Vec<usize> },
    /// Per status: LMM with schedule as a categorical effect (dummy coded
    /// against `reference`), one-way ANOVA and Scheffe post-hoc at `alpha`.
    ScheduleComparison {
        statuses: Vec<usize>,
        reference: usize,
        alpha: f64,
    },
}

#[derive(Debug, Clone)]
pub struct PaperExperiment {
    pub id: SimId,
    pub description: String,
    pub model: SimulationModel,
    pub analysis: AnalysisPlan,
}

impl PaperExperiment {
    pub fn build(id: SimId) -> PaperExperiment {
        match id {
            SimId::Sim1 => build_sim1(),
            SimId::Sim2 => build_sim2(),
            SimId::Sim3 => build_sim3(),
            SimId::Sim4 => build_sim4(),
        }
    }

    /// Replaces the Bonferroni multiplier of a t-test plan.
    pub fn with_bonferroni(mut self, m: usize) -> Self {
        if let AnalysisPlan::VersusBaseline { bonferroni, .. } = &mut self.analysis {
            *bonferroni = m.max(1);
        }
        self
    }

    pub fn with_ttest_variant(mut self, v: TTestVariant) -> Self {
        if let AnalysisPlan::VersusBaseline { variant, .. } = &mut self.analysis {
            *variant = v;
        }
        self
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn model(
    statuses: &[&str],
    conditions: Vec<EcmMatrix>,
    initial: Vec<f64>,
    schedules: Vec<NamedSchedule>,
) -> SimulationModel {
    SimulationModel::new(names(statuses), conditions, initial, SIM_LENGTH)
        .and_then(|m| m.with_schedules(schedules))
        .unwrap_or_else(|e: EcmError| panic!("built-in experiment is invalid: {e}"))
}

fn numbered(prefix: &str, k: usize) -> String {
    format!("{prefix}_{:02}", k + 1)
}

/// Periodic attainable and extraordinary schedules with control filler,
/// intervals 0..49 each, followed by the control-only baseline.
pub fn build_sim1() -> PaperExperiment {
    let n = SCHEDULES_PER_FAMILY;
    let mut schedules = Vec::with_capacity(2 * n + 1);
    for (family, active) in [("attainable", "A"), ("extraordinary", "E")] {
        for k in 0..n {
            let s = periodic_schedule(active, "C", k, SIM_LENGTH).expect("valid schedule");
            schedules.push(NamedSchedule::new(numbered(family, k), s));
        }
    }
    let control = parse_schedule("(C)*", SIM_LENGTH).expect("valid pattern");
    schedules.push(NamedSchedule::new("control", control));

    PaperExperiment {
        id: SimId::Sim1,
        description: "periodic intervention schedules against the control-only schedule".into(),
        model: model(
            &["participants", "non_participants"],
            vec![attainable_2x2(), extraordinary_2x2(), control_2x2()],
            vec![127.0, 111.0],
            schedules,
        ),
        analysis: AnalysisPlan::VersusBaseline {
            status: 0,
            baseline: 2 * n,
            families: vec![
                Family {
                    name: "attainable".into(),
                    schedules: 0..n,
                },
                Family {
                    name: "extraordinary".into(),
                    schedules: n..2 * n,
                },
            ],
            bonferroni: DEFAULT_BONFERRONI,
            variant: TTestVariant::Pooled,
        },
    }
}

/// Attainable intervention with gaps growing by 0..49 steps.
pub fn build_sim2() -> PaperExperiment {
    let schedules = (0..SCHEDULES_PER_FAMILY)
        .map(|inc| {
            let s = arithmetic_gap_schedule("I", "C", inc, SIM_LENGTH).expect("valid schedule");
            NamedSchedule::new(numbered("schedule", inc), s)
        })
        .collect();
    PaperExperiment {
        id: SimId::Sim2,
        description: "increasingly sparse attainable interventions".into(),
        model: model(
            &["participants", "non_participants"],
            vec![attainable_2x2().with_label("I"), control_2x2()],
            vec![127.0, 111.0],
            schedules,
        ),
        analysis: AnalysisPlan::ScheduleSlope { statuses: vec![0] },
    }
}

/// Periodic extraordinary intervention with attainable filler, intervals 0..49.
pub fn build_sim3() -> PaperExperiment {
    let schedules = (0..SCHEDULES_PER_FAMILY)
        .map(|k| {
            let s = periodic_schedule("E", "A", k, SIM_LENGTH).expect("valid schedule");
            NamedSchedule::new(numbered("schedule", k), s)
        })
        .collect();
    PaperExperiment {
        id: SimId::Sim3,
        description: "extraordinary interventions at growing intervals, attainable otherwise".into(),
        model: model(
            &["high_participants", "low_participants", "non_participants"],
            vec![attainable_3x3(), extraordinary_3x3(), control_3x3()],
            vec![100.0; 3],
            schedules,
        ),
        analysis: AnalysisPlan::ScheduleSlope {
            statuses: vec![0, 1],
        },
    }
}

pub const SIM4_PATTERNS: [&str; 5] = ["(A,E,C)*", "(E,A,C)*", "(A,A,C)*", "(E,E,C)*", "(C)*"];

/// Five cyclic mixtures of the three conditions; schedule 5 is control only.
pub fn build_sim4() -> PaperExperiment {
    let schedules = SIM4_PATTERNS
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = parse_schedule(p, SIM_LENGTH).expect("valid pattern");
            NamedSchedule::new(format!("schedule_{}", i + 1), s)
        })
        .collect();
    PaperExperiment {
        id: SimId::Sim4,
        description: "five mixtures of attainable, extraordinary and control conditions".into(),
        model: model(
            &["high_participants", "low_participants", "non_participants"],
            vec![attainable_3x3(), extraordinary_3x3(), control_3x3()],
            vec![1000.0; 3],
            schedules,
        ),
        analysis: AnalysisPlan::ScheduleComparison {
            statuses: vec![0, 1, 2],
            reference: 4,
            alpha: DEFAULT_ALPHA,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::format_schedule;

    #[test]
    fn matrices_are_conservative() {
        for m in [
            attainable_2x2(),
            extraordinary_2x2(),
            control_2x2(),
            attainable_3x3(),
            extraordinary_3x3(),
            control_3x3(),
        ] {
            assert!(m.is_conservative(), "{}", m.label());
        }
        assert_eq!(attainable_2x2().get(0, 0), 0.90);
        assert_eq!(extraordinary_3x3().get(0, 0), 0.70);
        let c = control_3x3();
        assert_eq!([c.get(0, 2), c.get(1, 2), c.get(2, 2)], [0.05, 0.15, 0.80]);
    }

    #[test]
    fn schedule_counts() {
        assert_eq!(build_sim1().model.schedules().len(), 101);
        assert_eq!(build_sim2().model.schedules().len(), 50);
        assert_eq!(build_sim3().model.schedules().len(), 50);
        assert_eq!(build_sim4().model.schedules().len(), 5);
    }

    #[test]
    fn sim1_schedule_24_has_interval_23() {
        let e = build_sim1();
        let s = &e.model.schedules()[23];
        assert_eq!(s.name, "attainable_24");
        let active: Vec<usize> = (0..SIM_LENGTH)
            .filter(|&t| s.schedule.get(t) == Some("A"))
            .collect();
        assert_eq!(active, [0, 24, 48, 72, 96]);
        assert_eq!(e.model.initial().counts(), [127.0, 111.0]);
    }

    #[test]
    fn sim2_schedules() {
        let e = build_sim2();
        let s1 = format_schedule(&e.model.schedules()[0].schedule);
        assert!(s1.starts_with("I,C,I,C,I,C"));
        let s2 = format_schedule(&e.model.schedules()[1].schedule);
        assert!(s2.starts_with("I,C,I,C,C,I"));
    }

    #[test]
    fn sim4_schedules() {
        let e = build_sim4();
        let s = e.model.schedules();
        assert!(format_schedule(&s[0].schedule).starts_with("A,E,C,A,E,C"));
        assert_eq!(s[4].schedule.count("C"), SIM_LENGTH);
        assert_eq!(e.model.length(), 100);
        assert!(matches!(e.analysis, AnalysisPlan::ScheduleComparison { reference: 4, .. }));
    }

    #[test]
    fn sim_ids() {
        for id in SimId::ALL {
            assert_eq!(id.to_string().parse::<SimId>(), Ok(id));
        }
        assert!("sim9".parse::<SimId>().is_err());
    }
}
