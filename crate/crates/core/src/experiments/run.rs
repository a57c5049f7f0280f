use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AnalysisPlan, PaperExperiment, SimId};
use crate::ecm::{EcmError, Trajectory};
use crate::io::{write_atomic, write_trajectories, CsvError};
use crate::stats::{
    bonferroni, fit_lmm, pseudo_r2, scheffe_posthoc, two_sample_ttest, wald_chi2, LmmData,
    LmmReport, SampleSeries, ScheffeResult, StatReport, StatsError, TTestResult,
};

pub const REPORT_FILE: &str = "report.txt";
pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Ecm(#[from] EcmError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Mean and standard error of every status over the analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSummary {
    pub schedule: String,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub family: String,
    /// 1-based position within the family.
    pub number: usize,
    pub schedule: String,
    pub ttest: TTestResult,
    pub p_corrected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdCriterion {
    /// Bonferroni-corrected p < .05.
    CorrectedP,
    /// |d| > .8
    LargeEffect,
    /// |d| > .5
    MediumEffect,
}

impl ThresholdCriterion {
    pub const ALL: [ThresholdCriterion; 3] = [
        ThresholdCriterion::CorrectedP,
        ThresholdCriterion::LargeEffect,
        ThresholdCriterion::MediumEffect,
    ];

    pub fn holds(self, row: &ComparisonRow) -> bool {
        match self {
            ThresholdCriterion::CorrectedP => row.p_corrected < 0.05,
            ThresholdCriterion::LargeEffect => row.ttest.d.abs() > 0.8,
            ThresholdCriterion::MediumEffect => row.ttest.d.abs() > 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ThresholdCriterion::CorrectedP => "p_corr < .05",
            ThresholdCriterion::LargeEffect => "|d| > .8",
            ThresholdCriterion::MediumEffect => "|d| > .5",
        }
    }

    fn key(self) -> &'static str {
        match self {
            ThresholdCriterion::CorrectedP => "p_corrected_lt_05",
            ThresholdCriterion::LargeEffect => "abs_d_gt_08",
            ThresholdCriterion::MediumEffect => "abs_d_gt_05",
        }
    }
}

/// Largest schedule number `s` such that the criterion holds for schedules `1..=s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub family: String,
    pub criterion: ThresholdCriterion,
    /// `None` when the criterion already fails at schedule 1.
    pub last_schedule: Option<usize>,
    /// The criterion holds again for some schedule after the first failure.
    pub non_monotone: bool,
}

/// Mixed-model (and for categorical designs, ANOVA) results for one status.
#[derive(Debug, Clone, PartialEq)]
pub struct DvAnalysis {
    pub status: String,
    pub lmm: LmmReport,
    pub posthoc: Option<ScheffeResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: SimId,
    pub description: String,
    pub statuses: Vec<String>,
    /// Inclusive `t` range used by every statistic.
    pub window: (usize, usize),
    pub trajectories: Vec<Trajectory>,
    pub summaries: Vec<ScheduleSummary>,
    pub comparisons: Vec<ComparisonRow>,
    pub thresholds: Vec<Threshold>,
    pub analyses: Vec<DvAnalysis>,
    pub bonferroni: Option<usize>,
}

fn series(traj: &Trajectory, status: usize, window: (usize, usize)) -> Vec<f64> {
    traj.series(status, window.0..=window.1)
}

/// Evolves every schedule and runs the experiment's analysis plan over
/// `t = 1..=length`. `jobs` bounds parallel evolution and never changes results.
pub fn run_experiment(
    e: &PaperExperiment,
    jobs: Option<usize>,
) -> Result<ExperimentReport, ExperimentError> {
    let trajectories = e.model.evolve_all(jobs)?;
    let window = (1, e.model.length());
    let statuses: Vec<String> = e.model.statuses().to_vec();

    let summaries = trajectories
        .iter()
        .map(|tr| {
            let (means, ses) = (0..statuses.len())
                .map(|s| {
                    let x = SampleSeries::new(&tr.schedule_label, series(tr, s, window))?;
                    Ok((x.mean(), x.se()))
                })
                .collect::<Result<Vec<_>, StatsError>>()?
                .into_iter()
                .unzip();
            Ok(ScheduleSummary {
                schedule: tr.schedule_label.clone(),
                means,
                ses,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;

    let mut report = ExperimentReport {
        id: e.id,
        description: e.description.clone(),
        statuses,
        window,
        trajectories,
        summaries,
        comparisons: Vec::new(),
        thresholds: Vec::new(),
        analyses: Vec::new(),
        bonferroni: None,
    };

    match &e.analysis {
        AnalysisPlan::VersusBaseline {
            status,
            baseline,
            families,
            bonferroni: m,
            variant,
        } => {
            report.bonferroni = Some(*m);
            let trajs = &report.trajectories;
            let base = SampleSeries::new(
                &trajs[*baseline].schedule_label,
                series(&trajs[*baseline], *status, window),
            )?;
            for fam in families {
                let start = report.comparisons.len();
                for (k, idx) in fam.schedules.clone().enumerate() {
                    let tr = &trajs[idx];
                    let x = SampleSeries::new(&tr.schedule_label, series(tr, *status, window))?;
                    let ttest = two_sample_ttest(&x, &base, *variant)?;
                    report.comparisons.push(ComparisonRow {
                        family: fam.name.clone(),
                        number: k + 1,
                        schedule: tr.schedule_label.clone(),
                        p_corrected: bonferroni(ttest.p, *m),
                        ttest,
                    });
                }
                let rows = &report.comparisons[start..];
                for criterion in ThresholdCriterion::ALL {
                    report.thresholds.push(threshold(&fam.name, criterion, rows));
                }
            }
        }
        AnalysisPlan::ScheduleSlope { statuses } => {
            for &status in statuses {
                let (mut y, mut x, mut cluster) = (Vec::new(), Vec::new(), Vec::new());
                for (i, tr) in report.trajectories.iter().enumerate() {
                    for t in window.0..=window.1 {
                        y.push(tr.states[t].counts()[status]);
                        x.push((i + 1) as f64);
                        cluster.push(t);
                    }
                }
                let full = LmmData::numeric(y.clone(), "schedule", x, &cluster)?;
                let null = LmmData::intercept_only(y, &cluster)?;
                report.analyses.push(DvAnalysis {
                    status: report.statuses[status].clone(),
                    lmm: lmm_report(&full, &null)?,
                    posthoc: None,
                });
            }
        }
        AnalysisPlan::ScheduleComparison {
            statuses,
            reference,
            alpha,
        } => {
            for &status in statuses {
                let (mut y, mut levels, mut cluster) = (Vec::new(), Vec::new(), Vec::new());
                let mut groups = Vec::new();
                for tr in &report.trajectories {
                    let s = series(tr, status, window);
                    for (k, v) in s.iter().enumerate() {
                        y.push(*v);
                        levels.push(tr.schedule_label.clone());
                        cluster.push(window.0 + k);
                    }
                    groups.push(SampleSeries::new(&tr.schedule_label, s)?);
                }
                let reference = report.trajectories[*reference].schedule_label.clone();
                let full = LmmData::categorical(y.clone(), &levels, &reference, &cluster)?;
                let null = LmmData::intercept_only(y, &cluster)?;
                report.analyses.push(DvAnalysis {
                    status: report.statuses[status].clone(),
                    lmm: lmm_report(&full, &null)?,
                    posthoc: Some(scheffe_posthoc(&groups, *alpha)?),
                });
            }
        }
    }
    Ok(report)
}

fn lmm_report(full: &LmmData, null: &LmmData) -> Result<LmmReport, StatsError> {
    let fit = fit_lmm(full)?;
    let null_fit = fit_lmm(null)?;
    let wald = Some(wald_chi2(&fit, &fit.slope_indices())?);
    let r2 = Some(pseudo_r2(&null_fit, &fit)?);
    Ok(LmmReport { fit, wald, r2 })
}

fn threshold(family: &str, criterion: ThresholdCriterion, rows: &[ComparisonRow]) -> Threshold {
    let leading = rows.iter().take_while(|r| criterion.holds(r)).count();
    Threshold {
        family: family.to_string(),
        criterion,
        last_schedule: leading.checked_sub(1).map(|i| rows[i].number),
        non_monotone: rows[leading..].iter().any(|r| criterion.holds(r)),
    }
}

impl ExperimentReport {
    pub fn comparison(&self, family: &str, number: usize) -> Option<&ComparisonRow> {
        self.comparisons
            .iter()
            .find(|r| r.family == family && r.number == number)
    }

    pub fn threshold(&self, family: &str, criterion: ThresholdCriterion) -> Option<&Threshold> {
        self.thresholds
            .iter()
            .find(|t| t.family == family && t.criterion == criterion)
    }

    pub fn analysis(&self, status: &str) -> Option<&DvAnalysis> {
        self.analyses.iter().find(|a| a.status == status)
    }

    pub fn summary(&self, schedule: &str) -> Option<&ScheduleSummary> {
        self.summaries.iter().find(|s| s.schedule == schedule)
    }

    /// Every statistical result, labelled by what it analyses.
    pub fn stat_reports(&self) -> Vec<(String, StatReport)> {
        let mut out: Vec<(String, StatReport)> = self
            .comparisons
            .iter()
            .map(|r| {
                (
                    format!("ttest:{}", r.schedule),
                    StatReport::TTest(r.ttest.clone()),
                )
            })
            .collect();
        for a in &self.analyses {
            out.push((format!("lmm:{}", a.status), StatReport::Lmm(a.lmm.clone())));
            if let Some(post) = &a.posthoc {
                out.push((
                    format!("anova:{}", a.status),
                    StatReport::Anova {
                        anova: post.anova.clone(),
                        posthoc: Some(post.clone()),
                    },
                ));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}: {}", self.id, self.description);
        let _ = writeln!(
            s,
            "{} schedules, statistics over t = {}..{}",
            self.trajectories.len(),
            self.window.0,
            self.window.1
        );

        if !self.comparisons.is_empty() {
            let m = self.bonferroni.unwrap_or(1);
            let _ = writeln!(
                s,
                "\nEach schedule vs the control-only schedule ({}), Bonferroni m = {m}",
                self.statuses[0]
            );
            let _ = writeln!(
                s,
                "{:<14} {:>3} {:>10} {:>9} {:>11} {:>11} {:>8}",
                "family", "#", "mean", "t", "p", "p_corr", "d"
            );
            for r in &self.comparisons {
                let _ = writeln!(
                    s,
                    "{:<14} {:>3} {:>10.2} {:>9.3} {:>11.4e} {:>11.4e} {:>8.3}",
                    r.family, r.number, r.ttest.mean_a, r.ttest.t, r.ttest.p, r.p_corrected, r.ttest.d
                );
            }
            let _ = writeln!(
                s,
                "\nThreshold crossings (largest schedule s with the criterion holding for 1..s)"
            );
            let _ = writeln!(
                s,
                "{:<14} {:>14} {:>10} {:>10}",
                "family", "p_corr < .05", "|d| > .8", "|d| > .5"
            );
            let mut families: Vec<&str> = self.thresholds.iter().map(|t| t.family.as_str()).collect();
            families.dedup();
            for fam in families {
                let cell = |c| {
                    let t = self.threshold(fam, c).expect("threshold per criterion");
                    let v = t.last_schedule.map_or("-".to_string(), |n| n.to_string());
                    if t.non_monotone {
                        format!("{v}*")
                    } else {
                        v
                    }
                };
                let _ = writeln!(
                    s,
                    "{:<14} {:>14} {:>10} {:>10}",
                    fam,
                    cell(ThresholdCriterion::CorrectedP),
                    cell(ThresholdCriterion::LargeEffect),
                    cell(ThresholdCriterion::MediumEffect)
                );
            }
            if self.thresholds.iter().any(|t| t.non_monotone) {
                let _ = writeln!(s, "* criterion holds again after the first failure");
            }
        }

        for a in &self.analyses {
            let _ = writeln!(s, "\nMixed model, DV = {}, random intercept for t", a.status);
            s.push_str(&StatReport::Lmm(a.lmm.clone()).to_text());
            if let Some(post) = &a.posthoc {
                let _ = writeln!(s, "One-way ANOVA, DV = {}", a.status);
                s.push_str(
                    &StatReport::Anova {
                        anova: post.anova.clone(),
                        posthoc: Some(post.clone()),
                    }
                    .to_text(),
                );
            }
        }

        let _ = writeln!(s, "\nSchedule means (SE) over the window");
        let _ = write!(s, "{:<18}", "schedule");
        for st in &self.statuses {
            let _ = write!(s, " {:>24}", st);
        }
        s.push('\n');
        for sm in &self.summaries {
            let _ = write!(s, "{:<18}", sm.schedule);
            for (m, se) in sm.means.iter().zip(&sm.ses) {
                let _ = write!(s, " {:>24}", format!("{m:.2} ({se:.2})"));
            }
            s.push('\n');
        }
        s
    }

    /// Long-format `analysis,term,statistic,value` rows for every result.
    pub fn to_csv(&self) -> Result<String, CsvError> {
        let to_err = |e: csv::Error| CsvError::Inconsistent(e.to_string());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["analysis", "term", "statistic", "value"])
            .map_err(to_err)?;
        for sm in &self.summaries {
            for (i, st) in self.statuses.iter().enumerate() {
                let analysis = format!("summary:{}", sm.schedule);
                w.write_record([&analysis, st, "mean", &sm.means[i].to_string()])
                    .map_err(to_err)?;
                w.write_record([&analysis, st, "se", &sm.ses[i].to_string()])
                    .map_err(to_err)?;
            }
        }
        for r in &self.comparisons {
            w.write_record([
                &format!("ttest:{}", r.schedule),
                "",
                "p_corrected",
                &r.p_corrected.to_string(),
            ])
            .map_err(to_err)?;
        }
        for t in &self.thresholds {
            let v = t.last_schedule.map_or(String::new(), |n| n.to_string());
            w.write_record([&format!("threshold:{}", t.family), t.criterion.key(), "last_schedule", &v])
                .map_err(to_err)?;
        }
        for (name, rep) in self.stat_reports() {
            rep.write_csv(&name, &mut w, false).map_err(to_err)?;
        }
        for a in &self.analyses {
            if let Some(post) = &a.posthoc {
                for (label, letters) in post.anova.group_labels.iter().zip(&post.letters) {
                    w.write_record([&format!("scheffe:{}", a.status), label, "letters", letters])
                        .map_err(to_err)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| CsvError::Inconsistent(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes trajectory CSVs, `report.txt` and `results.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, CsvError> {
        let dir = dir.as_ref();
        let mut paths = write_trajectories(&self.trajectories, dir)?;
        let report = dir.join(REPORT_FILE);
        write_atomic(&report, self.to_text().as_bytes())?;
        let results = dir.join(RESULTS_FILE);
        write_atomic(&results, self.to_csv()?.as_bytes())?;
        paths.push(report);
        paths.push(results);
        Ok(paths)
    }
}
